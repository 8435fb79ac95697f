//! Remote preparation of qutrit signals a|0> + b|1> + c e^{iθ}|2>, where
//! only the magnitude c is public. Grouping n1 signals into one composite
//! makes the shared resource block-uniform: the mass a composite puts on
//! each position block is fixed by c alone, never by the private
//! amplitudes, so the block engine applies. Larger groups shrink the
//! per-signal message toward S + 1 - c² bits.

use serde_json::json;
use std::collections::BTreeSet;

use crate::locc::Party;
use crate::qcore::{shannon_entropy, Complex64, PureState, ALGEBRAIC_TOL};
use crate::typspace::{position_partition, BlockPartition};

use super::block::{run_block_core, BlockPrivate, BlockShared, BlockSpec};
use super::{
    Evaluation, KnowledgeSpec, Mode, ProtocolError, ProtocolReport, ProtocolResult,
};

/// Public part of a grouped signal family: the weight of the third label
/// and the group length.
#[derive(Debug, Clone, Copy)]
pub struct GroupedShared {
    pub c_sq: f64,
    pub n1: usize,
}

/// One signal a|0> + b|1> + c e^{iθ}|2>; a, b and θ stay with the sender.
#[derive(Debug, Clone, Copy)]
pub struct GroupedCoeff {
    pub a: Complex64,
    pub b: Complex64,
    pub theta: f64,
}

/// Sender-only amplitudes, in signal order. The length must be a multiple
/// of the shared group length.
#[derive(Debug, Clone)]
pub struct GroupedPrivate {
    pub coeffs: Vec<GroupedCoeff>,
}

pub type GroupedSpec = KnowledgeSpec<GroupedShared, GroupedPrivate>;

/// Per-signal letter entropy of the source ((1-c²)/2, (1-c²)/2, c²).
pub fn grouped_entropy(c_sq: f64) -> ProtocolResult<f64> {
    let d_sq = (1.0 - c_sq) / 2.0;
    Ok(shannon_entropy(&[d_sq, d_sq, c_sq])?)
}

/// Bits per signal the grouped protocol approaches as groups grow.
pub fn grouped_target_bits(c_sq: f64) -> ProtocolResult<f64> {
    Ok(grouped_entropy(c_sq)? + 1.0 - c_sq)
}

/// Total bits for `nsignals` signals at the asymptotic per-signal rate.
pub fn grouped_formula_bits(nsignals: usize, c_sq: f64) -> ProtocolResult<f64> {
    Ok(nsignals as f64 * grouped_target_bits(c_sq)?)
}

/// Joint amplitudes of one group over the 3^{n1} composite labels,
/// position 0 leftmost.
fn composite_amps(c: f64, group: &[GroupedCoeff]) -> Vec<Complex64> {
    let n1 = group.len();
    let universe = 3usize.pow(n1 as u32);
    let mut amps = Vec::with_capacity(universe);
    for x in 0..universe {
        let mut amp = Complex64::new(1.0, 0.0);
        let mut rest = x;
        for i in (0..n1).rev() {
            let symbol = rest % 3;
            rest /= 3;
            amp *= match symbol {
                0 => group[i].a,
                1 => group[i].b,
                _ => Complex64::from_polar(c, group[i].theta),
            };
        }
        amps.push(amp);
    }
    amps
}

fn check_spec(spec: &GroupedSpec) -> ProtocolResult<(GroupedShared, Vec<GroupedCoeff>)> {
    let shared = *spec.view(Party::Bob).shared();
    if shared.n1 == 0 {
        return Err(ProtocolError::EmptyGroup);
    }
    let coeffs = spec.view(Party::Alice).private()?.coeffs.clone();
    if coeffs.is_empty() {
        return Err(ProtocolError::NoSignals);
    }
    if coeffs.len() % shared.n1 != 0 {
        return Err(ProtocolError::GroupCount {
            got: coeffs.len(),
            n1: shared.n1,
        });
    }
    let want = 1.0 - shared.c_sq;
    for (index, coeff) in coeffs.iter().enumerate() {
        let got = coeff.a.norm_sqr() + coeff.b.norm_sqr();
        if (got - want).abs() > ALGEBRAIC_TOL {
            return Err(ProtocolError::PairConstraint { index, got, want });
        }
    }
    Ok((shared, coeffs))
}

/// Remote preparation of grouped qutrit signals: one 2^{n1}-ary message and
/// one compressed transfer per group. In typical mode the composites are
/// truncated to the typical position blocks, so every branch lands on the
/// kept weight instead of unit fidelity.
pub fn remote_prep_grouped(
    spec: &GroupedSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    let (shared, coeffs) = check_spec(spec)?;
    let n1 = shared.n1;
    let c = shared.c_sq.sqrt();
    let window = match mode {
        Mode::Exact => None,
        Mode::Typical(delta) => Some(delta),
    };
    let raw = position_partition(n1, shared.c_sq, window)?;
    let kept_weight = raw.total_weight();
    let normalized = BlockPartition::new(
        raw.universe(),
        raw.blocks().to_vec(),
        raw.weights().iter().map(|w| w / kept_weight).collect(),
    )?;
    let live: BTreeSet<usize> = raw.blocks().iter().flatten().copied().collect();

    let mut signals = Vec::with_capacity(coeffs.len() / n1);
    let mut targets = Vec::with_capacity(signals.capacity());
    for group in coeffs.chunks(n1) {
        let full = composite_amps(c, group);
        targets.push(PureState::single(full.clone())?);
        let mut kept: Vec<Complex64> = full
            .iter()
            .enumerate()
            .map(|(x, &amp)| {
                if live.contains(&x) {
                    amp
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let norm_sqr: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
        // The kept mass is set by the partition window, not by the group.
        assert!(
            (norm_sqr - kept_weight).abs() <= 1e-8,
            "truncated mass {norm_sqr} drifts from the window weight {kept_weight}"
        );
        let norm = norm_sqr.sqrt();
        for amp in &mut kept {
            *amp /= norm;
        }
        signals.push(kept);
    }

    let engine: BlockSpec = KnowledgeSpec::new(
        BlockShared {
            partition: normalized,
        },
        BlockPrivate { signals },
    );
    let (ev, meta) = run_block_core(&engine, 1.0, eval, seed, Some(targets))?;

    let coeffs_json: Vec<serde_json::Value> = coeffs
        .iter()
        .map(|coeff| {
            json!({
                "a": [coeff.a.re, coeff.a.im],
                "b": [coeff.b.re, coeff.b.im],
                "theta": coeff.theta,
            })
        })
        .collect();
    Ok(ProtocolReport {
        protocol: "rsp-grouped".into(),
        params: json!({
            "c_sq": shared.c_sq,
            "n1": n1,
            "groups": coeffs.len() / n1,
            "nsignals": coeffs.len(),
            "d": meta.d,
            "code_size": meta.code_size,
            "kept_weight": kept_weight,
            "coeffs": coeffs_json,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits: grouped_formula_bits(coeffs.len(), shared.c_sq)?,
        formula_ref: "grouped_entropy_rate".into(),
        mode,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_coeff(c_sq: f64, rng: &mut ChaCha8Rng) -> GroupedCoeff {
        let a = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let b = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let scale = (1.0 - c_sq).sqrt() / norm;
        GroupedCoeff {
            a: a * scale,
            b: b * scale,
            theta: rng.gen::<f64>() * std::f64::consts::TAU,
        }
    }

    fn spec(c_sq: f64, n1: usize, coeffs: Vec<GroupedCoeff>) -> GroupedSpec {
        KnowledgeSpec::new(GroupedShared { c_sq, n1 }, GroupedPrivate { coeffs })
    }

    #[test]
    fn frozen_rates_at_the_balanced_weight() {
        assert!((grouped_entropy(0.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((grouped_target_bits(0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!((grouped_formula_bits(4, 0.5).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn block_masses_are_set_by_the_partition_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let c_sq = 0.5;
        let partition = position_partition(3, c_sq, None).unwrap();
        for _ in 0..10 {
            let group: Vec<GroupedCoeff> =
                (0..3).map(|_| random_coeff(c_sq, &mut rng)).collect();
            let amps = composite_amps(c_sq.sqrt(), &group);
            for (block, &weight) in partition.blocks().iter().zip(partition.weights()) {
                let mass: f64 = block.iter().map(|&x| amps[x].norm_sqr()).sum();
                assert!((mass - weight).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_qubit_groups_send_one_bit_per_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let coeffs: Vec<GroupedCoeff> = (0..2).map(|_| random_coeff(0.5, &mut rng)).collect();
        let report = remote_prep_grouped(
            &spec(0.5, 1, coeffs),
            Mode::Exact,
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        assert_eq!(report.params["d"], 2);
        assert_eq!(report.params["code_size"], 9);
        assert_eq!(report.params["kept_weight"], 1.0);
        assert_eq!(report.fidelity_branches.len(), 4 * 9);
        for row in &report.fidelity_branches {
            assert!((row.fidelity - 1.0).abs() < 1e-8);
        }
        assert!((report.bits_exact - (2.0 + 9.0f64.log2())).abs() < 1e-12);
        // Two pairs of entropy S = 1.5 each.
        assert!((report.ebits - 3.0).abs() < 1e-9);
    }

    #[test]
    fn typical_window_truncates_to_the_kept_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let coeffs: Vec<GroupedCoeff> = (0..3).map(|_| random_coeff(0.5, &mut rng)).collect();
        let report = remote_prep_grouped(
            &spec(0.5, 3, coeffs),
            Mode::Typical(1.0 / 6.0),
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        assert_eq!(report.params["d"], 4);
        assert_eq!(report.params["code_size"], 18);
        assert!((report.params["kept_weight"].as_f64().unwrap() - 0.75).abs() < 1e-12);
        // One 4-ary message plus the 18-letter code register.
        assert!((report.bits_exact - (2.0 + 18.0f64.log2())).abs() < 1e-12);
        assert_eq!(report.bits_ceiling, 2 + 5);
        assert_eq!(report.fidelity_branches.len(), 4 * 18);
        for row in &report.fidelity_branches {
            assert!((row.fidelity - 0.75).abs() < 1e-8);
            assert!((row.step1_fidelity.unwrap() - 1.0).abs() < 1e-8);
        }
        assert!((report.fidelity_expected - 0.75).abs() < 1e-8);
        let q_entropy = 0.5 * (24.0f64.log2() + 12.0f64.log2());
        assert!((report.ebits - q_entropy).abs() < 1e-9);
    }

    #[test]
    fn longer_groups_approach_the_asymptotic_rate() {
        // Doubling the group, exact mode: d stays 2^{n1} so the message
        // share is 1 bit per signal, while the code share grows as the full
        // 3^{n1} support. The per-signal total is flat here; the saving
        // comes only once typicality trims the support.
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let coeffs: Vec<GroupedCoeff> = (0..2).map(|_| random_coeff(0.5, &mut rng)).collect();
        let report = remote_prep_grouped(
            &spec(0.5, 2, coeffs),
            Mode::Exact,
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        assert_eq!(report.params["d"], 4);
        assert_eq!(report.params["code_size"], 9);
        assert!((report.bits_exact - (2.0 + 9.0f64.log2())).abs() < 1e-12);
        assert!((report.fidelity_expected - 1.0).abs() < 1e-8);
    }

    #[test]
    fn group_shape_violations_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let good: Vec<GroupedCoeff> = (0..2).map(|_| random_coeff(0.5, &mut rng)).collect();
        assert!(matches!(
            remote_prep_grouped(
                &spec(0.5, 0, good.clone()),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::EmptyGroup)
        ));
        let three: Vec<GroupedCoeff> = (0..3).map(|_| random_coeff(0.5, &mut rng)).collect();
        assert!(matches!(
            remote_prep_grouped(&spec(0.5, 2, three), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::GroupCount { got: 3, n1: 2 })
        ));
        assert!(matches!(
            remote_prep_grouped(&spec(0.5, 1, vec![]), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::NoSignals)
        ));
        let mut off = good;
        off[0].a *= 1.2;
        assert!(matches!(
            remote_prep_grouped(&spec(0.5, 1, off), Mode::Exact, Evaluation::Exhaustive, 0),
            Err(ProtocolError::PairConstraint { index: 0, .. })
        ));
    }
}
