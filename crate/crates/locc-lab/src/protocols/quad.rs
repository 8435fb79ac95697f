//! Remote preparation over the four-letter resource
//! e|00> + e|11> + f|22> + f|33> with e² + f² = 1/2: one ancilla bit per
//! signal folds the sender's four amplitudes onto the pair diagonal, then
//! the compression pipeline ships the code register.

use serde_json::json;

use crate::locc::{run_exhaustive, run_sampled, Branch, LoccSession, Party, BRANCH_CAP};
use crate::qcore::{binary_entropy, Complex64, PureState, Unitary, ALGEBRAIC_TOL, PROB_FLOOR};

use super::outcome::{summarize_branches, summarize_samples};
use super::pipeline::{compress_and_transfer, support_codebook};
use super::{
    dim_cap_for, tensor_all, Evaluation, KnowledgeSpec, Mode, ProtocolError, ProtocolReport,
    ProtocolResult, RunOutcome,
};

/// Resource weight e², known to both parties.
#[derive(Debug, Clone, Copy)]
pub struct QuadShared {
    pub e_sq: f64,
}

/// Signal amplitudes (a_i, b_i, c_i, d_i), known only to the sender. Every
/// signal must put weight 2e² on its first two labels.
#[derive(Debug, Clone)]
pub struct QuadPrivate {
    pub coeffs: Vec<[Complex64; 4]>,
}

pub type QuadSpec = KnowledgeSpec<QuadShared, QuadPrivate>;

/// Per-signal entanglement of the four-letter resource.
pub fn quad_entropy(e_sq: f64) -> ProtocolResult<f64> {
    Ok(1.0 + binary_entropy(2.0 * e_sq)?)
}

/// Total bits the protocol approaches: one ancilla bit per signal plus the
/// compressed transfer at the source entropy.
pub fn quad_formula_bits(nsignals: usize, e_sq: f64) -> ProtocolResult<f64> {
    Ok(nsignals as f64 * (1.0 + quad_entropy(e_sq)?))
}

fn check_spec(spec: &QuadSpec) -> ProtocolResult<(f64, Vec<[Complex64; 4]>)> {
    let e_sq = spec.view(Party::Bob).shared().e_sq;
    if !(e_sq > 0.0 && e_sq <= 0.5) {
        return Err(ProtocolError::QuadWeight { e_sq });
    }
    let coeffs = spec.view(Party::Alice).private()?.coeffs.clone();
    if coeffs.is_empty() {
        return Err(ProtocolError::NoSignals);
    }
    for (index, c) in coeffs.iter().enumerate() {
        let norm_sqr: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(ProtocolError::SignalNorm { index, norm_sqr });
        }
        let pair = c[0].norm_sqr() + c[1].norm_sqr();
        if (pair - 2.0 * e_sq).abs() > ALGEBRAIC_TOL {
            return Err(ProtocolError::PairConstraint {
                index,
                got: pair,
                want: 2.0 * e_sq,
            });
        }
    }
    Ok((e_sq, coeffs))
}

/// Sender-side step-1 unitary on [ancilla(2), register(4)], basis index
/// anc*4 + k. Ancilla outcome 0 leaves the signal amplitudes in place,
/// outcome 1 leaves them swapped within each pair block; both happen with
/// probability 1/2 whatever the amplitudes are. Columns are prescribed on
/// the resource letters and completed to a full unitary.
fn step1_unitary(e_sq: f64, c: &[Complex64; 4]) -> ProtocolResult<Unitary> {
    let f_sq = 0.5 - e_sq;
    let plan: [(usize, Complex64, Complex64, f64); 4] = [
        (0, c[0], c[1], 2.0 * e_sq),
        (1, c[1], c[0], 2.0 * e_sq),
        (2, c[2], c[3], 2.0 * f_sq),
        (3, c[3], c[2], 2.0 * f_sq),
    ];
    let mut columns: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (k, top, bottom, weight) in plan {
        if weight <= PROB_FLOOR {
            continue;
        }
        let scale = weight.sqrt();
        let mut col = vec![Complex64::new(0.0, 0.0); 8];
        col[k] = top / scale;
        col[4 + k] = bottom / scale;
        let norm = col.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut col {
            *a /= norm;
        }
        columns.push((k, col));
    }
    Ok(Unitary::complete_to_unitary(8, &columns)?)
}

struct QuadPlan {
    units: Vec<Unitary>,
    source: [f64; 4],
    pair_targets: Vec<PureState>,
    targets: Vec<PureState>,
    delta: f64,
}

fn build_plan(e_sq: f64, coeffs: &[[Complex64; 4]], delta: f64) -> ProtocolResult<QuadPlan> {
    let f_sq = 0.5 - e_sq;
    let mut units = Vec::with_capacity(coeffs.len());
    let mut pair_targets = Vec::with_capacity(coeffs.len());
    let mut targets = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        units.push(step1_unitary(e_sq, c)?);
        let mut diag = vec![Complex64::new(0.0, 0.0); 16];
        for (k, &amp) in c.iter().enumerate() {
            diag[k * 4 + k] = amp;
        }
        pair_targets.push(PureState::new(vec![4, 4], diag)?);
        targets.push(PureState::single(c.to_vec())?);
    }
    Ok(QuadPlan {
        units,
        source: [e_sq, e_sq, f_sq, f_sq],
        pair_targets,
        targets,
        delta,
    })
}

fn session_cap(n: usize) -> usize {
    dim_cap_for(16u128.saturating_pow(n as u32).saturating_mul(2))
}

/// Raw branch list for structural comparison against the block engine.
#[cfg(test)]
pub(crate) fn quad_branches(
    spec: &QuadSpec,
    mode: Mode,
    seed: u64,
) -> ProtocolResult<Vec<Branch<RunOutcome>>> {
    let (e_sq, coeffs) = check_spec(spec)?;
    let plan = build_plan(e_sq, &coeffs, mode.delta())?;
    let cap = session_cap(coeffs.len());
    let procedure = |s: &mut LoccSession| quad_procedure(s, &plan);
    let make = || Ok(LoccSession::with_dim_cap(seed, cap));
    run_exhaustive(&make, &procedure, BRANCH_CAP)
}

fn quad_procedure(s: &mut LoccSession, plan: &QuadPlan) -> Result<RunOutcome, ProtocolError> {
    let n = plan.units.len();
    let mut alice_ids = Vec::with_capacity(n);
    let mut bob_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let (pa, pb) = s.add_entangled_pair(&plan.source, 4, 4)?;
        alice_ids.push(pa);
        bob_ids.push(pb);
    }

    let swap = Unitary::permutation(&[1, 0, 3, 2])?;
    for i in 0..n {
        let anc = s.add_ancilla(Party::Alice, 2, 0)?;
        s.local_unitary(Party::Alice, &[anc, alice_ids[i]], &plan.units[i])?;
        let j = s.local_measure(Party::Alice, &[anc])?;
        s.send(Party::Alice, Party::Bob, j, 2)?;
        s.discard(&[anc])?;
        if j == 1 {
            s.local_unitary(Party::Alice, &[alice_ids[i]], &swap)?;
            s.local_unitary(Party::Bob, &[bob_ids[i]], &swap)?;
        }
    }

    let mut step1 = 1.0;
    for i in 0..n {
        let got = s.register_state(&[alice_ids[i], bob_ids[i]])?;
        step1 *= got.fidelity(&plan.pair_targets[i])?;
    }

    let out = compress_and_transfer(s, &alice_ids, &bob_ids, &plan.source, plan.delta)?;
    if out.aborted {
        return Ok(RunOutcome {
            fidelity: 0.0,
            step1_fidelity: Some(step1),
        });
    }
    let goal = tensor_all(&plan.targets, s.dim_cap())?;
    let fidelity = s.register_state(&out.bob_registers)?.fidelity(&goal)?;
    Ok(RunOutcome {
        fidelity,
        step1_fidelity: Some(step1),
    })
}

/// Remote preparation of N four-dimensional signals through the pair-block
/// resource: N ancilla bits plus one compressed transfer.
pub fn remote_prep_quad(
    spec: &QuadSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    let (e_sq, coeffs) = check_spec(spec)?;
    let n = coeffs.len();
    let plan = build_plan(e_sq, &coeffs, mode.delta())?;
    let (_, codebook) = support_codebook(&plan.source, n, mode.delta())?;
    let code_size = codebook.len();

    let cap = session_cap(n);
    let procedure = |s: &mut LoccSession| quad_procedure(s, &plan);
    let ev = match eval {
        Evaluation::Exhaustive => {
            let make = || Ok(LoccSession::with_dim_cap(seed, cap));
            let branches: Vec<Branch<RunOutcome>> = run_exhaustive(&make, &procedure, BRANCH_CAP)?;
            summarize_branches(&branches)
        }
        Evaluation::Sampled(runs) => {
            let make = |s: u64| Ok(LoccSession::with_dim_cap(s, cap));
            summarize_samples(&run_sampled(&make, &procedure, seed, runs)?)
        }
    };

    let coeffs_json: Vec<Vec<[f64; 2]>> = coeffs
        .iter()
        .map(|c| c.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    Ok(ProtocolReport {
        protocol: "rsp-quad".into(),
        params: json!({
            "e_sq": e_sq,
            "nsignals": n,
            "code_size": code_size,
            "coeffs": coeffs_json,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits: quad_formula_bits(n, e_sq)?,
        formula_ref: "one_plus_entropy_rate".into(),
        mode,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::typspace::{typical_set, typical_weight};

    use super::super::teleport_baseline_bits;
    use super::*;

    fn random_coeffs(e_sq: f64, rng: &mut ChaCha8Rng) -> [Complex64; 4] {
        let draw = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        };
        let mut top = [draw(rng), draw(rng)];
        let tn = (top[0].norm_sqr() + top[1].norm_sqr()).sqrt();
        let ts = (2.0 * e_sq).sqrt();
        for z in &mut top {
            *z = *z / tn * ts;
        }
        let f_sq = 0.5 - e_sq;
        let mut bottom = [Complex64::new(0.0, 0.0); 2];
        if f_sq > 0.0 {
            bottom = [draw(rng), draw(rng)];
            let bn = (bottom[0].norm_sqr() + bottom[1].norm_sqr()).sqrt();
            let bs = (2.0 * f_sq).sqrt();
            for z in &mut bottom {
                *z = *z / bn * bs;
            }
        }
        [top[0], top[1], bottom[0], bottom[1]]
    }

    fn spec(e_sq: f64, coeffs: Vec<[Complex64; 4]>) -> QuadSpec {
        KnowledgeSpec::new(QuadShared { e_sq }, QuadPrivate { coeffs })
    }

    #[test]
    fn entropy_matches_frozen_values() {
        assert!((quad_entropy(0.1).unwrap() - 1.7219280948873623).abs() < 1e-12);
        assert_eq!(quad_entropy(0.25).unwrap(), 2.0);
        assert!((quad_entropy(0.4).unwrap() - 1.7219280948873623).abs() < 1e-12);
        assert!((quad_formula_bits(1, 0.25).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ancilla_outcomes_are_fair_coins_for_any_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let coeffs = vec![random_coeffs(0.3, &mut rng)];
            let report =
                remote_prep_quad(&spec(0.3, coeffs), Mode::Exact, Evaluation::Exhaustive, 0)
                    .unwrap();
            // One fair ancilla bit times a uniform Fourier outcome over the
            // four-letter code space.
            assert_eq!(report.fidelity_branches.len(), 8);
            for row in &report.fidelity_branches {
                assert!((row.prob - 0.125).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_run_reaches_the_signals_at_structural_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let coeffs = vec![random_coeffs(0.25, &mut rng), random_coeffs(0.25, &mut rng)];
        let report =
            remote_prep_quad(&spec(0.25, coeffs), Mode::Exact, Evaluation::Exhaustive, 0).unwrap();
        for row in &report.fidelity_branches {
            assert!((row.fidelity - 1.0).abs() < 1e-8);
            assert!((row.step1_fidelity.unwrap() - 1.0).abs() < 1e-8);
        }
        // Two ancilla bits plus log2 of the full 4^2 code space.
        assert_eq!(report.bits_exact, 6.0);
        assert_eq!(report.bits_ceiling, 6);
        assert!((report.ebits - 4.0).abs() < 1e-9);
        assert_eq!(report.params["code_size"], 16);
        // At e^2 = 1/4 the formula and the structural cost coincide.
        assert!((report.formula_bits - 6.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_resource_at_the_boundary_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let coeffs = vec![random_coeffs(0.5, &mut rng), random_coeffs(0.5, &mut rng)];
        let report =
            remote_prep_quad(&spec(0.5, coeffs), Mode::Exact, Evaluation::Exhaustive, 0).unwrap();
        // Dead letters 2 and 3 drop out of the code space: the transfer works
        // on a two-letter alphabet, 1 + 1 bits per signal.
        assert_eq!(report.params["code_size"], 4);
        assert_eq!(report.bits_exact, 4.0);
        assert!((report.fidelity_expected - 1.0).abs() < 1e-8);
        assert!((report.formula_bits - 4.0).abs() < 1e-12);
        assert!((report.ebits - 2.0).abs() < 1e-9);
    }

    #[test]
    fn typical_mode_aborts_with_the_atypical_weight() {
        // Per-letter magnitudes matching the resource: the diagonal the
        // typicality measurement sees is the source itself, so the success
        // probability is the source's typical weight.
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let n = 3;
        let e_sq: f64 = 0.25;
        let delta = 0.3;
        let phase = |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.gen::<f64>() * TAU);
        let coeffs: Vec<[Complex64; 4]> = (0..n)
            .map(|_| {
                let e = e_sq.sqrt();
                let f = (0.5 - e_sq).sqrt();
                [
                    phase(&mut rng) * e,
                    phase(&mut rng) * e,
                    phase(&mut rng) * f,
                    phase(&mut rng) * f,
                ]
            })
            .collect();
        let report = remote_prep_quad(
            &spec(e_sq, coeffs),
            Mode::Typical(delta),
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        let weight = typical_weight(&[0.25, 0.25, 0.25, 0.25], n, delta).unwrap();
        assert!(weight > 0.0 && weight < 1.0);
        // One abort branch per ancilla pattern, all carrying the atypical
        // weight together.
        let aborted: f64 = report
            .fidelity_branches
            .iter()
            .filter(|r| r.fidelity == 0.0)
            .map(|r| r.prob)
            .sum();
        assert!((aborted - (1.0 - weight)).abs() < 1e-10);
        for row in &report.fidelity_branches {
            assert!((row.step1_fidelity.unwrap() - 1.0).abs() < 1e-8);
            if row.fidelity != 0.0 {
                assert!((row.fidelity - weight).abs() < 1e-9);
            }
        }
        assert!((report.fidelity_expected - weight * weight).abs() < 1e-9);
    }

    #[test]
    fn skewed_signals_move_the_abort_mass_off_the_source_weight() {
        // Arbitrary amplitudes change the diagonal under the typicality
        // measurement: the success probability follows the signals' own
        // letter weights summed over the typical strings, not the source's
        // typical weight.
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let n = 2;
        let e_sq = 0.25;
        let delta = 0.3;
        let coeffs: Vec<_> = (0..n).map(|_| random_coeffs(e_sq, &mut rng)).collect();
        let source = [0.25, 0.25, 0.25, 0.25];
        let set = typical_set(&source, n, delta).unwrap();
        let mut kept = 0.0;
        for &member in set.members() {
            let string = set.string_of(member);
            let mut w = 1.0;
            for (i, &letter) in string.iter().enumerate() {
                w *= coeffs[i][letter as usize].norm_sqr();
            }
            kept += w;
        }
        let weight = typical_weight(&source, n, delta).unwrap();
        assert!((kept - weight).abs() > 1e-3);

        let report = remote_prep_quad(
            &spec(e_sq, coeffs),
            Mode::Typical(delta),
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        let aborted: f64 = report
            .fidelity_branches
            .iter()
            .filter(|r| r.fidelity == 0.0)
            .map(|r| r.prob)
            .sum();
        assert!((aborted - (1.0 - kept)).abs() < 1e-9);
        for row in &report.fidelity_branches {
            if row.fidelity != 0.0 {
                assert!((row.fidelity - kept).abs() < 1e-9);
            }
        }
        assert!((report.fidelity_expected - kept * kept).abs() < 1e-9);
    }

    #[test]
    fn formula_beats_the_teleport_baseline_off_the_endpoints() {
        for step in 1..10 {
            let e_sq = 0.05 * step as f64;
            let formula = quad_formula_bits(1, e_sq).unwrap();
            let baseline = teleport_baseline_bits(1, quad_entropy(e_sq).unwrap());
            assert!(
                formula < baseline - 1e-9,
                "no saving at e_sq = {e_sq}: {formula} vs {baseline}"
            );
        }
        let formula = quad_formula_bits(1, 0.5).unwrap();
        let baseline = teleport_baseline_bits(1, quad_entropy(0.5).unwrap());
        assert!((formula - baseline).abs() < 1e-12);
    }

    #[test]
    fn constraint_violations_are_rejected_before_running() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let good = random_coeffs(0.25, &mut rng);
        assert!(matches!(
            remote_prep_quad(&spec(0.3, vec![good]), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::PairConstraint { index: 0, .. })
        ));
        let mut bad = good;
        bad[3] *= 2.0;
        assert!(matches!(
            remote_prep_quad(&spec(0.25, vec![bad]), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::SignalNorm { index: 0, .. })
        ));
        assert!(matches!(
            remote_prep_quad(&spec(0.6, vec![good]), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::QuadWeight { .. })
        ));
        assert!(matches!(
            remote_prep_quad(&spec(0.25, vec![]), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::NoSignals)
        ));
    }
}
