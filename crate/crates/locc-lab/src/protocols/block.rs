//! Remote preparation over a resource whose Schmidt coefficients are
//! constant on blocks: weight c_m spread uniformly over the R_m labels of
//! block m. A cyclic relabel within each block folds arbitrary sender
//! amplitudes onto the pair diagonal for one d-ary message per signal,
//! d the least common multiple of the live block sizes. A partition of
//! singletons needs no message at all, only a sender-side phase rotation.

use std::collections::BTreeSet;

use num_integer::lcm;
use serde_json::json;

use crate::locc::{run_exhaustive, run_sampled, Branch, LoccSession, Party, BRANCH_CAP};
use crate::qcore::{Complex64, PureState, Unitary, ALGEBRAIC_TOL, PROB_FLOOR};
use crate::typspace::BlockPartition;

use super::outcome::{summarize_branches, summarize_samples, Evaluated};
use super::pipeline::{compress_and_transfer, support_codebook};
use super::{
    dim_cap_for, is_identity, tensor_all, Evaluation, KnowledgeSpec, Mode, ProtocolError,
    ProtocolReport, ProtocolResult, RunOutcome,
};

/// Block structure and weights of the shared pairs, known to both parties.
#[derive(Debug, Clone)]
pub struct BlockShared {
    pub partition: BlockPartition,
}

/// Signal amplitudes over the resource labels, known only to the sender.
/// Every signal must put weight c_m on block m.
#[derive(Debug, Clone)]
pub struct BlockPrivate {
    pub signals: Vec<Vec<Complex64>>,
}

pub type BlockSpec = KnowledgeSpec<BlockShared, BlockPrivate>;

fn live_parts(partition: &BlockPartition) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut blocks = Vec::new();
    let mut weights = Vec::new();
    for (b, &w) in partition.blocks().iter().zip(partition.weights()) {
        if w > PROB_FLOOR {
            blocks.push(b.clone());
            weights.push(w);
        }
    }
    (blocks, weights)
}

/// Entanglement per pair: sum of c_m (log2 R_m - log2 c_m) over live blocks.
pub fn block_entropy(partition: &BlockPartition) -> f64 {
    let (blocks, weights) = live_parts(partition);
    blocks
        .iter()
        .zip(&weights)
        .map(|(b, &w)| w * ((b.len() as f64).log2() - w.log2()))
        .sum()
}

/// Total bits the protocol approaches: log2(lcm of live block sizes) per
/// signal plus the compressed transfer at the resource entropy.
pub fn block_formula_bits(nsignals: usize, partition: &BlockPartition) -> f64 {
    let (blocks, _) = live_parts(partition);
    let d = blocks.iter().fold(1, |acc, b| lcm(acc, b.len()));
    nsignals as f64 * ((d as f64).log2() + block_entropy(partition))
}

/// Dead blocks removed, with the quantities every stage reuses.
struct LiveResource {
    blocks: Vec<Vec<usize>>,
    weights: Vec<f64>,
    universe: usize,
    d: usize,
    source: Vec<f64>,
}

fn check_spec(spec: &BlockSpec) -> ProtocolResult<(LiveResource, Vec<Vec<Complex64>>)> {
    let partition = &spec.view(Party::Bob).shared().partition;
    let universe = partition.universe();
    if universe < 2 {
        return Err(ProtocolError::BadDimension { dim: universe });
    }
    let sum = partition.total_weight();
    if (sum - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(ProtocolError::PartitionWeight { sum });
    }
    let (blocks, weights) = live_parts(partition);
    let d = blocks.iter().fold(1, |acc, b| lcm(acc, b.len()));
    let mut source = vec![0.0; universe];
    for (b, &w) in blocks.iter().zip(&weights) {
        for &label in b {
            source[label] = w / b.len() as f64;
        }
    }

    let signals = spec.view(Party::Alice).private()?.signals.clone();
    if signals.is_empty() {
        return Err(ProtocolError::NoSignals);
    }
    for (index, sig) in signals.iter().enumerate() {
        if sig.len() != universe {
            return Err(ProtocolError::SignalLength {
                index,
                got: sig.len(),
                want: universe,
            });
        }
        let norm_sqr: f64 = sig.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(ProtocolError::SignalNorm { index, norm_sqr });
        }
        for (block, (b, &w)) in blocks.iter().zip(&weights).enumerate() {
            let got: f64 = b.iter().map(|&l| sig[l].norm_sqr()).sum();
            if (got - w).abs() > ALGEBRAIC_TOL {
                return Err(ProtocolError::BlockWeight {
                    index,
                    block,
                    got,
                    want: w,
                });
            }
        }
    }
    Ok((
        LiveResource {
            blocks,
            weights,
            universe,
            d,
            source,
        },
        signals,
    ))
}

enum Step1Plan {
    /// d = 1: a sender-side diagonal phase per signal, None when it is
    /// already the identity.
    Rotate(Vec<Option<Unitary>>),
    /// d > 1: the folding unitary on [ancilla(d), register] per signal.
    Shift(Vec<Unitary>),
}

/// Diagonal phase on the singleton labels: a_l / |a_l|, identity elsewhere.
fn rotate_unitary(
    universe: usize,
    live: &[Vec<usize>],
    sig: &[Complex64],
) -> ProtocolResult<Option<Unitary>> {
    let mut entries = vec![Complex64::new(0.0, 0.0); universe * universe];
    for l in 0..universe {
        entries[l * universe + l] = Complex64::new(1.0, 0.0);
    }
    for b in live {
        let l = b[0];
        if sig[l].norm_sqr() > PROB_FLOOR {
            entries[l * universe + l] = sig[l] / sig[l].norm();
        }
    }
    let u = Unitary::new(universe, entries)?;
    Ok((!is_identity(&u)).then_some(u))
}

/// Sender-side folding unitary on [ancilla(d), register(v)], basis index
/// anc*v + label. Column `label` of block m, position r, spreads the
/// amplitudes a over the block cyclically: outcome j = s*T_m + t leaves
/// a_{(r+s) mod R_m} on the label, T_m = d/R_m. Every outcome lands with
/// probability 1/d whatever the amplitudes. Columns of labels whose block
/// carries no signal mass are left to the completion.
fn shift_unitary(res: &LiveResource, sig: &[Complex64]) -> ProtocolResult<Unitary> {
    let v = res.universe;
    let d = res.d;
    let mut columns: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (b, &w) in res.blocks.iter().zip(&res.weights) {
        let r_m = b.len();
        let t_m = d / r_m;
        let scale = (w * t_m as f64).sqrt();
        for (r, &label) in b.iter().enumerate() {
            let mut col = vec![Complex64::new(0.0, 0.0); d * v];
            for s in 0..r_m {
                let amp = sig[b[(r + s) % r_m]] / scale;
                for t in 0..t_m {
                    col[(s * t_m + t) * v + label] = amp;
                }
            }
            let norm = col.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm <= 1e-6 {
                continue;
            }
            for a in &mut col {
                *a /= norm;
            }
            columns.push((label, col));
        }
    }
    Ok(Unitary::complete_to_unitary(d * v, &columns)?)
}

/// Relabel that undoes outcome j, applied to both halves of a pair. Block m
/// is shifted by s_m = j / T_m; None when every shift is zero.
fn correction_permutation(res: &LiveResource, j: usize) -> Option<Vec<usize>> {
    let mut perm: Vec<usize> = (0..res.universe).collect();
    let mut moved = false;
    for b in &res.blocks {
        let t_m = res.d / b.len();
        let s_m = j / t_m;
        if s_m == 0 {
            continue;
        }
        moved = true;
        for (r, &label) in b.iter().enumerate() {
            perm[label] = b[(r + s_m) % b.len()];
        }
    }
    moved.then_some(perm)
}

/// Outcomes j with equal shift vectors (s_1, ..., s_M) are interchangeable,
/// so only this many message values carry distinct instructions.
fn distinct_shift_count(res: &LiveResource) -> usize {
    let mut seen = BTreeSet::new();
    for j in 0..res.d {
        let shifts: Vec<usize> = res.blocks.iter().map(|b| j / (res.d / b.len())).collect();
        seen.insert(shifts);
    }
    seen.len()
}

struct BlockPlan {
    res: LiveResource,
    step1: Step1Plan,
    pair_targets: Vec<PureState>,
    targets: Vec<PureState>,
    delta: f64,
}

fn block_procedure(s: &mut LoccSession, plan: &BlockPlan) -> Result<RunOutcome, ProtocolError> {
    let v = plan.res.universe;
    let n = plan.targets.len();
    let mut alice_ids = Vec::with_capacity(n);
    let mut bob_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let (pa, pb) = s.add_entangled_pair(&plan.res.source, v, v)?;
        alice_ids.push(pa);
        bob_ids.push(pb);
    }

    match &plan.step1 {
        Step1Plan::Rotate(rotations) => {
            for (i, rot) in rotations.iter().enumerate() {
                if let Some(u) = rot {
                    s.local_unitary(Party::Alice, &[alice_ids[i]], u)?;
                }
            }
        }
        Step1Plan::Shift(units) => {
            let d = plan.res.d;
            for i in 0..n {
                let anc = s.add_ancilla(Party::Alice, d, 0)?;
                s.local_unitary(Party::Alice, &[anc, alice_ids[i]], &units[i])?;
                let j = s.local_measure(Party::Alice, &[anc])?;
                s.send(Party::Alice, Party::Bob, j, d)?;
                s.discard(&[anc])?;
                if let Some(perm) = correction_permutation(&plan.res, j) {
                    let u = Unitary::permutation(&perm)?;
                    s.local_unitary(Party::Alice, &[alice_ids[i]], &u)?;
                    s.local_unitary(Party::Bob, &[bob_ids[i]], &u)?;
                }
            }
        }
    }

    let mut step1 = 1.0;
    for i in 0..n {
        let got = s.register_state(&[alice_ids[i], bob_ids[i]])?;
        step1 *= got.fidelity(&plan.pair_targets[i])?;
    }

    let out = compress_and_transfer(s, &alice_ids, &bob_ids, &plan.res.source, plan.delta)?;
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

pub(crate) struct BlockMeta {
    pub d: usize,
    pub code_size: usize,
    pub distinct_shifts: usize,
}

fn build_block(
    spec: &BlockSpec,
    step2_delta: f64,
    targets_override: Option<Vec<PureState>>,
) -> ProtocolResult<(BlockPlan, BlockMeta, usize)> {
    let (res, signals) = check_spec(spec)?;
    let n = signals.len();
    let (_, codebook) = support_codebook(&res.source, n, step2_delta)?;
    let meta = BlockMeta {
        d: res.d,
        code_size: codebook.len(),
        distinct_shifts: distinct_shift_count(&res),
    };

    let step1 = if res.d == 1 {
        let mut rotations = Vec::with_capacity(n);
        for sig in &signals {
            rotations.push(rotate_unitary(res.universe, &res.blocks, sig)?);
        }
        Step1Plan::Rotate(rotations)
    } else {
        let mut units = Vec::with_capacity(n);
        for sig in &signals {
            units.push(shift_unitary(&res, sig)?);
        }
        Step1Plan::Shift(units)
    };

    let mut pair_targets = Vec::with_capacity(n);
    for sig in &signals {
        let v = res.universe;
        let mut pair = vec![Complex64::new(0.0, 0.0); v * v];
        for (l, &amp) in sig.iter().enumerate() {
            pair[l * v + l] = amp;
        }
        pair_targets.push(PureState::new(vec![v, v], pair)?);
    }
    let targets = match targets_override {
        Some(t) => t,
        None => signals
            .iter()
            .map(|sig| PureState::single(sig.clone()))
            .collect::<Result<Vec<_>, _>>()?,
    };

    let v = res.universe as u128;
    let cap = dim_cap_for((v * v).saturating_pow(n as u32).saturating_mul(res.d as u128));
    let plan = BlockPlan {
        res,
        step1,
        pair_targets,
        targets,
        delta: step2_delta,
    };
    Ok((plan, meta, cap))
}

/// Engine shared with the grouped-qubit protocol, which prepares composite
/// signals and judges fidelity against its own targets.
pub(crate) fn run_block_core(
    spec: &BlockSpec,
    step2_delta: f64,
    eval: Evaluation,
    seed: u64,
    targets_override: Option<Vec<PureState>>,
) -> ProtocolResult<(Evaluated, BlockMeta)> {
    let (plan, meta, cap) = build_block(spec, step2_delta, targets_override)?;
    let procedure = |s: &mut LoccSession| block_procedure(s, &plan);
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
    Ok((ev, meta))
}

/// Raw branch list for structural comparison against the specialised
/// protocols this engine generalises.
#[cfg(test)]
pub(crate) fn block_branches(
    spec: &BlockSpec,
    step2_delta: f64,
    seed: u64,
) -> ProtocolResult<Vec<Branch<RunOutcome>>> {
    let (plan, _, cap) = build_block(spec, step2_delta, None)?;
    let procedure = |s: &mut LoccSession| block_procedure(s, &plan);
    let make = || Ok(LoccSession::with_dim_cap(seed, cap));
    run_exhaustive(&make, &procedure, BRANCH_CAP)
}

/// Remote preparation of N signals over a block-uniform resource: N d-ary
/// messages plus one compressed transfer.
pub fn remote_prep_block(
    spec: &BlockSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    let (ev, meta) = run_block_core(spec, mode.delta(), eval, seed, None)?;
    let partition = &spec.view(Party::Bob).shared().partition;
    let signals = &spec.view(Party::Alice).private()?.signals;
    let signals_json: Vec<Vec<[f64; 2]>> = signals
        .iter()
        .map(|sig| sig.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    let n = signals.len();
    Ok(ProtocolReport {
        protocol: "rsp-block".into(),
        params: json!({
            "universe": partition.universe(),
            "blocks": partition.blocks(),
            "weights": partition.weights(),
            "nsignals": n,
            "d": meta.d,
            "code_size": meta.code_size,
            "distinct_shift_vectors": meta.distinct_shifts,
            "useful_shift_bits": (meta.distinct_shifts as f64).log2(),
            "signals": signals_json,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits: block_formula_bits(n, partition),
        formula_ref: "lcm_plus_entropy_rate".into(),
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

    use super::super::phase::phase_branches;
    use super::super::quad::quad_branches;
    use super::super::{remote_prep_phase, remote_prep_quad, PhasePrivate, PhaseShared, QuadPrivate, QuadShared};
    use super::*;

    fn spec(partition: BlockPartition, signals: Vec<Vec<Complex64>>) -> BlockSpec {
        KnowledgeSpec::new(BlockShared { partition }, BlockPrivate { signals })
    }

    fn two_three_partition() -> BlockPartition {
        BlockPartition::new(5, vec![vec![0, 1], vec![2, 3, 4]], vec![0.4, 0.6]).unwrap()
    }

    /// Random unit vector with the prescribed mass on each block.
    fn random_signal(partition: &BlockPartition, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let mut sig = vec![Complex64::new(0.0, 0.0); partition.universe()];
        for (b, &w) in partition.blocks().iter().zip(partition.weights()) {
            let draws: Vec<Complex64> = b
                .iter()
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm = draws.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (&label, z) in b.iter().zip(&draws) {
                sig[label] = z / norm * w.sqrt();
            }
        }
        sig
    }

    #[test]
    fn entropy_of_the_worked_example_is_log2_of_five() {
        // Both blocks spread their weight to 0.2 per label, a uniform pair.
        let p = two_three_partition();
        assert!((block_entropy(&p) - 5.0f64.log2()).abs() < 1e-12);
        assert!((block_formula_bits(1, &p) - (6.0f64.log2() + 5.0f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn worked_example_sends_a_uniform_six_valued_message() {
        let p = two_three_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let signals = vec![random_signal(&p, &mut rng)];
        let report = remote_prep_block(
            &spec(p, signals),
            Mode::Exact,
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        assert_eq!(report.params["d"], 6);
        assert_eq!(report.params["code_size"], 5);
        // Six ancilla outcomes times five code outcomes, all uniform.
        assert_eq!(report.fidelity_branches.len(), 30);
        for row in &report.fidelity_branches {
            assert!((row.prob - 1.0 / 30.0).abs() < 1e-10);
            assert!((row.fidelity - 1.0).abs() < 1e-8);
            assert!((row.step1_fidelity.unwrap() - 1.0).abs() < 1e-8);
        }
        let want_bits = 6.0f64.log2() + 5.0f64.log2();
        assert!((report.bits_exact - want_bits).abs() < 1e-12);
        assert_eq!(report.bits_ceiling, 3 + 3);
        assert!((report.ebits - 5.0f64.log2()).abs() < 1e-9);
        // Outcomes 0 and 1 shift nothing, so six messages carry four
        // distinct instructions.
        assert_eq!(report.params["distinct_shift_vectors"], 4);
        assert_eq!(report.params["useful_shift_bits"], 2.0);
    }

    #[test]
    fn matches_the_pair_block_protocol_branch_for_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..8 {
            let e_sq = 0.05 + 0.4 * rng.gen::<f64>();
            let mut coeffs = Vec::new();
            for _ in 0..2 {
                let draw = |rng: &mut ChaCha8Rng| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                };
                let mut c = [draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng)];
                let top = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
                let bottom = (c[2].norm_sqr() + c[3].norm_sqr()).sqrt();
                c[0] = c[0] / top * (2.0 * e_sq).sqrt();
                c[1] = c[1] / top * (2.0 * e_sq).sqrt();
                c[2] = c[2] / bottom * (1.0 - 2.0 * e_sq).sqrt();
                c[3] = c[3] / bottom * (1.0 - 2.0 * e_sq).sqrt();
                coeffs.push(c);
            }
            let quad = remote_prep_quad(
                &KnowledgeSpec::new(
                    QuadShared { e_sq },
                    QuadPrivate {
                        coeffs: coeffs.clone(),
                    },
                ),
                Mode::Exact,
                Evaluation::Exhaustive,
                0,
            )
            .unwrap();
            let partition = BlockPartition::new(
                4,
                vec![vec![0, 1], vec![2, 3]],
                vec![2.0 * e_sq, 1.0 - 2.0 * e_sq],
            )
            .unwrap();
            let signals = coeffs.iter().map(|c| c.to_vec()).collect();
            let block = remote_prep_block(
                &spec(partition, signals),
                Mode::Exact,
                Evaluation::Exhaustive,
                0,
            )
            .unwrap();
            assert_eq!(block.params["d"], 2);
            assert_eq!(block.bits_exact, quad.bits_exact, "round {round}");
            assert_eq!(block.bits_ceiling, quad.bits_ceiling);
            assert!((block.ebits - quad.ebits).abs() < 1e-9);
            assert!((block.formula_bits - quad.formula_bits).abs() < 1e-9);
            assert_eq!(block.fidelity_branches.len(), quad.fidelity_branches.len());
            for (b, q) in block.fidelity_branches.iter().zip(&quad.fidelity_branches) {
                assert!((b.prob - q.prob).abs() < 1e-9);
                assert!((b.fidelity - q.fidelity).abs() < 1e-9);
                assert!(
                    (b.step1_fidelity.unwrap() - q.step1_fidelity.unwrap()).abs() < 1e-9
                );
            }
        }
    }

    #[test]
    fn singleton_partition_reproduces_the_phase_protocol_rows() {
        let (a, b) = (0.8, 0.6);
        let thetas = vec![0.7, 2.9, 4.1];
        let phase = remote_prep_phase(
            &KnowledgeSpec::new(
                PhaseShared { a, b },
                PhasePrivate {
                    thetas: thetas.clone(),
                },
            ),
            Mode::Exact,
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        let partition =
            BlockPartition::new(2, vec![vec![0], vec![1]], vec![a * a, b * b]).unwrap();
        let signals = thetas
            .iter()
            .map(|&t| vec![Complex64::new(a, 0.0), Complex64::from_polar(b, t)])
            .collect();
        let block = remote_prep_block(
            &spec(partition, signals),
            Mode::Exact,
            Evaluation::Exhaustive,
            0,
        )
        .unwrap();
        assert_eq!(block.params["d"], 1);
        assert_eq!(block.params["distinct_shift_vectors"], 1);
        // No step-1 message: the whole cost is the compressed transfer.
        assert_eq!(block.bits_exact, 3.0);
        assert_eq!(block.bits_exact, phase.bits_exact);
        assert_eq!(block.bits_ceiling, phase.bits_ceiling);
        assert!((block.ebits - phase.ebits).abs() < 1e-12);
        assert_eq!(block.fidelity_branches.len(), phase.fidelity_branches.len());
        for (b_row, p_row) in block.fidelity_branches.iter().zip(&phase.fidelity_branches) {
            assert!((b_row.prob - p_row.prob).abs() < 1e-10);
            assert!((b_row.fidelity - p_row.fidelity).abs() < 1e-10);
        }
    }

    #[test]
    fn reductions_share_transcript_shapes() {
        // Agreement on probabilities is not enough: branch for branch, the
        // engine must run the same operations on the same registers as the
        // protocols it generalises. Transcript events carry parties,
        // register ids, outcomes, and message domains, so value equality
        // pins the whole shape, and equal cost summaries pin the metering.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..25 {
            // Dyadic resource weight: both constructions hand the session
            // bit-identical letter distributions.
            let e_sq = rng.gen_range(1..=31) as f64 / 64.0;
            let mut coeffs = Vec::new();
            for _ in 0..2 {
                let draw = |rng: &mut ChaCha8Rng| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                };
                let mut c = [draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng)];
                let top = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
                let bottom = (c[2].norm_sqr() + c[3].norm_sqr()).sqrt();
                c[0] = c[0] / top * (2.0 * e_sq).sqrt();
                c[1] = c[1] / top * (2.0 * e_sq).sqrt();
                c[2] = c[2] / bottom * (1.0 - 2.0 * e_sq).sqrt();
                c[3] = c[3] / bottom * (1.0 - 2.0 * e_sq).sqrt();
                coeffs.push(c);
            }
            let left = quad_branches(
                &KnowledgeSpec::new(
                    QuadShared { e_sq },
                    QuadPrivate {
                        coeffs: coeffs.clone(),
                    },
                ),
                Mode::Exact,
                0,
            )
            .unwrap();
            let partition = BlockPartition::new(
                4,
                vec![vec![0, 1], vec![2, 3]],
                vec![2.0 * e_sq, 1.0 - 2.0 * e_sq],
            )
            .unwrap();
            let signals = coeffs.iter().map(|c| c.to_vec()).collect();
            let right = block_branches(&spec(partition, signals), 1.0, 0).unwrap();
            assert_eq!(left.len(), right.len());
            for (l, r) in left.iter().zip(&right) {
                assert_eq!(l.transcript, r.transcript);
                assert_eq!(l.outcomes, r.outcomes);
                assert_eq!(l.costs, r.costs);
                assert!((l.probability - r.probability).abs() < 1e-12);
                assert!((l.value.fidelity - r.value.fidelity).abs() < 1e-9);
            }
        }
        for _ in 0..25 {
            // Angles stay clear of zero: a signal with no phase to apply
            // would drop one rotation event on either side.
            let weight = 0.2 + 0.6 * rng.gen::<f64>();
            let a = weight.sqrt();
            let b = (1.0 - weight).sqrt();
            let thetas: Vec<f64> = (0..3).map(|_| 0.1 + rng.gen::<f64>() * (TAU - 0.2)).collect();
            let left = phase_branches(
                &KnowledgeSpec::new(
                    PhaseShared { a, b },
                    PhasePrivate {
                        thetas: thetas.clone(),
                    },
                ),
                Mode::Exact,
                0,
            )
            .unwrap();
            let partition =
                BlockPartition::new(2, vec![vec![0], vec![1]], vec![a * a, b * b]).unwrap();
            let signals = thetas
                .iter()
                .map(|&t| vec![Complex64::new(a, 0.0), Complex64::from_polar(b, t)])
                .collect();
            let right = block_branches(&spec(partition, signals), 1.0, 0).unwrap();
            assert_eq!(left.len(), right.len());
            for (l, r) in left.iter().zip(&right) {
                assert_eq!(l.transcript, r.transcript);
                assert_eq!(l.outcomes, r.outcomes);
                assert_eq!(l.costs, r.costs);
                assert!((l.probability - r.probability).abs() < 1e-12);
                assert!((l.value.fidelity - r.value.fidelity).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn low_outcomes_shift_nothing_and_need_no_correction() {
        let (res, _) = check_spec(&spec(
            two_three_partition(),
            vec![{
                let mut rng = ChaCha8Rng::seed_from_u64(43);
                random_signal(&two_three_partition(), &mut rng)
            }],
        ))
        .unwrap();
        assert_eq!(res.d, 6);
        assert!(correction_permutation(&res, 0).is_none());
        assert!(correction_permutation(&res, 1).is_none());
        assert_eq!(correction_permutation(&res, 2), Some(vec![0, 1, 3, 4, 2]));
        assert_eq!(correction_permutation(&res, 3), Some(vec![1, 0, 3, 4, 2]));
        assert_eq!(correction_permutation(&res, 5), Some(vec![1, 0, 4, 2, 3]));
        assert_eq!(distinct_shift_count(&res), 4);
    }

    #[test]
    fn malformed_specs_are_rejected_before_running() {
        let p = two_three_partition();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let good = random_signal(&p, &mut rng);

        let light = BlockPartition::new(5, vec![vec![0, 1], vec![2, 3, 4]], vec![0.4, 0.5])
            .unwrap();
        assert!(matches!(
            remote_prep_block(
                &spec(light, vec![good.clone()]),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::PartitionWeight { .. })
        ));

        assert!(matches!(
            remote_prep_block(
                &spec(two_three_partition(), vec![good[..3].to_vec()]),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::SignalLength { index: 0, got: 3, want: 5 })
        ));

        let mut long = good.clone();
        long[0] *= 2.0;
        assert!(matches!(
            remote_prep_block(
                &spec(two_three_partition(), vec![long]),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::SignalNorm { index: 0, .. })
        ));

        // Unit norm but the mass sits on the wrong blocks.
        let mut skewed = good.clone();
        skewed.swap(0, 2);
        skewed.swap(1, 3);
        assert!(matches!(
            remote_prep_block(
                &spec(two_three_partition(), vec![skewed]),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::BlockWeight { index: 0, block: 0, .. })
        ));

        assert!(matches!(
            remote_prep_block(
                &spec(two_three_partition(), vec![]),
                Mode::Exact,
                Evaluation::Exhaustive,
                0
            ),
            Err(ProtocolError::NoSignals)
        ));
    }
}
