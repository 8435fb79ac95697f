//! Remote preparation of phase-angle ensembles: every signal is
//! a|0> + b e^{i theta}|1> with shared magnitudes and sender-only angles.
//! The segmented variant spends one extra bit per signal to fold the circle
//! onto [0, pi), which shrinks the average state an entanglement-efficient
//! provisioning of the ensemble would have to cover.

use std::f64::consts::PI;

use serde_json::json;

use crate::locc::{run_exhaustive, run_sampled, Branch, LoccSession, Party, BRANCH_CAP};
use crate::qcore::{
    binary_entropy, Complex64, DensityMatrix, PureState, Unitary, ALGEBRAIC_TOL,
};

use super::outcome::{summarize_branches, summarize_samples};
use super::pipeline::{compress_and_transfer, support_codebook};
use super::{
    dim_cap_for, is_identity, tensor_all, Evaluation, KnowledgeSpec, Mode, ProtocolError,
    ProtocolReport, ProtocolResult, RunOutcome,
};

/// Magnitudes of every signal, known to both parties.
#[derive(Debug, Clone, Copy)]
pub struct PhaseShared {
    pub a: f64,
    pub b: f64,
}

/// The angles, known only to the sender.
#[derive(Debug, Clone)]
pub struct PhasePrivate {
    pub thetas: Vec<f64>,
}

pub type PhaseSpec = KnowledgeSpec<PhaseShared, PhasePrivate>;

/// Asymptotic cost per signal of the plain phase protocol.
pub fn phase_entropy(b_sq: f64) -> ProtocolResult<f64> {
    Ok(binary_entropy(b_sq)?)
}

/// Total bits the plain phase protocol is expected to approach.
pub fn phase_formula_bits(nsignals: usize, b_sq: f64) -> ProtocolResult<f64> {
    Ok(nsignals as f64 * phase_entropy(b_sq)?)
}

/// Total bits for the segmented variant: one flag bit per signal on top.
pub fn segmented_formula_bits(nsignals: usize, b_sq: f64) -> ProtocolResult<f64> {
    Ok(nsignals as f64 * (1.0 + phase_entropy(b_sq)?))
}

fn check_shared(shared: &PhaseShared) -> ProtocolResult<()> {
    let (a, b) = (shared.a, shared.b);
    if a < 0.0 || b < 0.0 || (a * a + b * b - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(ProtocolError::BadSchmidtPair { a, b });
    }
    Ok(())
}

fn signal(a: f64, b: f64, theta: f64) -> ProtocolResult<PureState> {
    Ok(PureState::qubit(
        Complex64::new(a, 0.0),
        Complex64::from_polar(b, theta),
    )?)
}

/// Segment flag and folded angle: the circle reduced to [0, 2 pi), angles at
/// or past pi flagged and shifted down by pi. The boundary pi itself belongs
/// to the flagged segment.
pub(crate) fn segment_of(theta: f64) -> (bool, f64) {
    let wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped >= PI {
        (true, wrapped - PI)
    } else {
        (false, wrapped)
    }
}

/// Body shared by the plain and segmented runs: pairs, sender-side phase
/// rotations, compression pipeline, receiver-side flag corrections,
/// fidelity against the goal signals.
fn phase_procedure(
    s: &mut LoccSession,
    spec: &PhaseSpec,
    delta: f64,
    fold: bool,
) -> Result<RunOutcome, ProtocolError> {
    let shared = *spec.view(Party::Bob).shared();
    let alice = spec.view(Party::Alice);
    let thetas = &alice.private()?.thetas;
    let n = thetas.len();
    let source = [shared.a * shared.a, shared.b * shared.b];

    let mut alice_ids = Vec::with_capacity(n);
    let mut bob_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let (pa, pb) = s.add_entangled_pair(&source, 2, 2)?;
        alice_ids.push(pa);
        bob_ids.push(pb);
    }

    // Segment flags travel first; the rest of the run works on the folded
    // angle and the receiver undoes the fold at the end.
    let mut flags = vec![false; n];
    let mut folded = Vec::with_capacity(n);
    for (i, &theta) in thetas.iter().enumerate() {
        if fold {
            let (flag, low) = segment_of(theta);
            flags[i] = flag;
            folded.push(low);
        } else {
            folded.push(theta.rem_euclid(2.0 * PI));
        }
    }
    if fold {
        for &flag in &flags {
            s.send(Party::Alice, Party::Bob, usize::from(flag), 2)?;
        }
    }

    for (i, &theta) in folded.iter().enumerate() {
        let rot = Unitary::phase(theta);
        if !is_identity(&rot) {
            s.local_unitary(Party::Alice, &[alice_ids[i]], &rot)?;
        }
    }

    let out = compress_and_transfer(s, &alice_ids, &bob_ids, &source, delta)?;
    if out.aborted {
        return Ok(RunOutcome {
            fidelity: 0.0,
            step1_fidelity: None,
        });
    }

    for (i, &flag) in flags.iter().enumerate() {
        if flag {
            s.local_unitary(Party::Bob, &[out.bob_registers[i]], &Unitary::phase(PI))?;
        }
    }

    let targets: Vec<PureState> = thetas
        .iter()
        .map(|&t| signal(shared.a, shared.b, t.rem_euclid(2.0 * PI)))
        .collect::<ProtocolResult<_>>()?;
    let goal = tensor_all(&targets, s.dim_cap())?;
    let fidelity = s.register_state(&out.bob_registers)?.fidelity(&goal)?;
    Ok(RunOutcome {
        fidelity,
        step1_fidelity: None,
    })
}

/// Raw branch list for structural comparison against the block engine.
#[cfg(test)]
pub(crate) fn phase_branches(
    spec: &PhaseSpec,
    mode: Mode,
    seed: u64,
) -> ProtocolResult<Vec<Branch<RunOutcome>>> {
    let shared = *spec.view(Party::Bob).shared();
    check_shared(&shared)?;
    let n = spec.view(Party::Alice).private()?.thetas.len();
    if n == 0 {
        return Err(ProtocolError::NoSignals);
    }
    let cap = dim_cap_for(4u128.saturating_pow(n as u32));
    let procedure = |s: &mut LoccSession| phase_procedure(s, spec, mode.delta(), false);
    let make = || Ok(LoccSession::with_dim_cap(seed, cap));
    run_exhaustive(&make, &procedure, BRANCH_CAP)
}

fn run_phase(
    spec: &PhaseSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
    fold: bool,
) -> ProtocolResult<ProtocolReport> {
    let shared = *spec.view(Party::Bob).shared();
    check_shared(&shared)?;
    let thetas = &spec.view(Party::Alice).private()?.thetas;
    let n = thetas.len();
    if n == 0 {
        return Err(ProtocolError::NoSignals);
    }
    let source = [shared.a * shared.a, shared.b * shared.b];
    let (_, codebook) = support_codebook(&source, n, mode.delta())?;
    let code_size = codebook.len();

    let cap = dim_cap_for(4u128.saturating_pow(n as u32));
    let procedure = |s: &mut LoccSession| phase_procedure(s, spec, mode.delta(), fold);
    let ev = match eval {
        Evaluation::Exhaustive => {
            let make = || Ok(LoccSession::with_dim_cap(seed, cap));
            let branches: Vec<Branch<RunOutcome>> =
                run_exhaustive(&make, &procedure, BRANCH_CAP)?;
            summarize_branches(&branches)
        }
        Evaluation::Sampled(runs) => {
            let make = |s: u64| Ok(LoccSession::with_dim_cap(s, cap));
            summarize_samples(&run_sampled(&make, &procedure, seed, runs)?)
        }
    };

    let b_sq = shared.b * shared.b;
    let (protocol, formula_bits, formula_ref) = if fold {
        (
            "rsp-segmented",
            segmented_formula_bits(n, b_sq)?,
            "entropy_rate_plus_flag",
        )
    } else {
        ("rsp-phase", phase_formula_bits(n, b_sq)?, "entropy_rate")
    };
    let mut params = json!({
        "a_sq": shared.a * shared.a,
        "b_sq": b_sq,
        "nsignals": n,
        "thetas": thetas,
        "code_size": code_size,
    });
    if fold {
        params["folded_entropy_per_signal"] = json!(folded_ensemble_entropy(shared.a * shared.a)?);
        params["asymptotic_ebits"] =
            json!(n as f64 * folded_ensemble_entropy(shared.a * shared.a)?);
    }
    Ok(ProtocolReport {
        protocol: protocol.into(),
        params,
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits,
        formula_ref: formula_ref.into(),
        mode,
        seed,
    })
}

/// Remote preparation of signals a|0> + b e^{i theta}|1>: the sender
/// rotates her half of each shared pair, both parties compress, and one
/// message of domain D moves the code register. Zero communication is spent
/// on the angles themselves.
pub fn remote_prep_phase(
    spec: &PhaseSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    run_phase(spec, mode, eval, seed, false)
}

/// Segmented variant: one flag bit per signal folds the angle into [0, pi),
/// the plain protocol runs on the folded angles, and the receiver applies
/// the 0/pi phase flip where flagged.
pub fn remote_prep_segmented(
    spec: &PhaseSpec,
    mode: Mode,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    run_phase(spec, mode, eval, seed, true)
}

/// Average signal state over the folded angle range [0, pi), by midpoint
/// quadrature fine enough for 1e-10 accuracy.
pub fn folded_average_state(a_sq: f64) -> ProtocolResult<DensityMatrix> {
    const STEPS: usize = 200_001;
    let a = a_sq.sqrt();
    let b = (1.0 - a_sq).sqrt();
    let w = 1.0 / STEPS as f64;
    let mut entries = vec![Complex64::new(0.0, 0.0); 4];
    for j in 0..STEPS {
        let theta = PI * (j as f64 + 0.5) / STEPS as f64;
        let upper = Complex64::new(a, 0.0);
        let lower = Complex64::from_polar(b, theta);
        entries[0] += w * upper * upper.conj();
        entries[1] += w * upper * lower.conj();
        entries[2] += w * lower * upper.conj();
        entries[3] += w * lower * lower.conj();
    }
    Ok(DensityMatrix::new(2, entries)?)
}

/// Entropy of the folded-angle average state: the asymptotic ebits per
/// signal a receiver-side distillation of the segmented ensemble would
/// need, reported next to the measured ledger.
pub fn folded_ensemble_entropy(a_sq: f64) -> ProtocolResult<f64> {
    Ok(folded_average_state(a_sq)?.von_neumann_entropy())
}
