//! Teleportation in two metered stages, for qubits and for general carried
//! dimension, plus entanglement dilution: the observation that stopping
//! after the first stage already leaves the carried amplitudes shared
//! between the parties for half the classical cost.

use serde_json::json;

use crate::locc::{run_exhaustive, run_sampled, Branch, LoccSession, Party, RegisterId, BRANCH_CAP};
use crate::qcore::{Complex64, PureState, Unitary, ALGEBRAIC_TOL};

use super::outcome::{summarize_branches, summarize_samples, Evaluated};
use super::{
    dim_cap_for, is_identity, Evaluation, Mode, ProtocolError, ProtocolReport, ProtocolResult,
    RunOutcome,
};

/// Exact classical cost of teleporting one register of dimension `d`.
pub fn teleport_formula_bits(d: usize) -> f64 {
    2.0 * (d as f64).log2()
}

/// Classical cost of the first stage alone, which is all dilution needs.
pub fn dilution_formula_bits(d: usize) -> f64 {
    (d as f64).log2()
}

/// First stage: generalized XOR from the shared pair onto the carried
/// register, measure the carried register, one message, index correction on
/// both halves of the pair. Afterwards the carried amplitudes live on the
/// pair. Returns the measured value.
pub(crate) fn carry_onto_pair(
    s: &mut LoccSession,
    pair_a: RegisterId,
    pair_b: RegisterId,
    carried: RegisterId,
    d: usize,
) -> ProtocolResult<usize> {
    s.local_unitary(Party::Alice, &[pair_a, carried], &Unitary::xor_qudit(d))?;
    let m = s.local_measure(Party::Alice, &[carried])?;
    s.send(Party::Alice, Party::Bob, m, d)?;
    let fix = Unitary::negate_shift(d, m);
    if !is_identity(&fix) {
        s.local_unitary(Party::Alice, &[pair_a], &fix)?;
        s.local_unitary(Party::Bob, &[pair_b], &fix)?;
    }
    s.discard(&[carried])?;
    Ok(m)
}

/// Second stage: Fourier the sender's half, measure it, one message, phase
/// correction on the receiver's half. Consumes the sender's register.
pub(crate) fn fourier_stage(
    s: &mut LoccSession,
    pair_a: RegisterId,
    pair_b: RegisterId,
    d: usize,
) -> ProtocolResult<usize> {
    s.local_unitary(Party::Alice, &[pair_a], &Unitary::fourier(d))?;
    let k = s.local_measure(Party::Alice, &[pair_a])?;
    s.send(Party::Alice, Party::Bob, k, d)?;
    if k != 0 {
        s.local_unitary(Party::Bob, &[pair_b], &Unitary::phase_correction(d, k))?;
    }
    s.discard(&[pair_a])?;
    Ok(k)
}

/// Target of a stage-1-only run: the input with its last axis copied, so the
/// carried amplitudes sit on both halves of the pair.
fn doubled_last_axis(input: &PureState) -> ProtocolResult<PureState> {
    let d = *input.dims().last().expect("carried dimension was checked");
    let mut dims = input.dims().to_vec();
    dims.push(d);
    let mut amps = vec![Complex64::new(0.0, 0.0); input.total_dim() * d];
    for (i, &a) in input.amps().iter().enumerate() {
        amps[i * d + i % d] = a;
    }
    Ok(PureState::new(dims, amps)?)
}

fn check_carried_dim(input: &PureState, d: usize) -> ProtocolResult<()> {
    match input.dims().last() {
        Some(&got) if got == d => Ok(()),
        Some(&got) => Err(ProtocolError::CarriedDimension { got, want: d }),
        None => Err(ProtocolError::CarriedDimension { got: 1, want: d }),
    }
}

fn evaluate(
    eval: Evaluation,
    seed: u64,
    cap: usize,
    procedure: &dyn Fn(&mut LoccSession) -> Result<RunOutcome, ProtocolError>,
) -> ProtocolResult<Evaluated> {
    Ok(match eval {
        Evaluation::Exhaustive => {
            let make = || Ok(LoccSession::with_dim_cap(seed, cap));
            let branches: Vec<Branch<RunOutcome>> =
                run_exhaustive(&make, procedure, BRANCH_CAP)?;
            summarize_branches(&branches)
        }
        Evaluation::Sampled(runs) => {
            let make = |s: u64| Ok(LoccSession::with_dim_cap(s, cap));
            summarize_samples(&run_sampled(&make, procedure, seed, runs)?)
        }
    })
}

fn two_stage_procedure(
    s: &mut LoccSession,
    input: &PureState,
    stop_after_step1: bool,
) -> Result<RunOutcome, ProtocolError> {
    let ids = s.add_local_state(Party::Alice, "in", input.clone())?;
    let (&carried, refs) = ids.split_last().expect("input has at least one register");
    let (pa, pb) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;

    s.local_unitary(Party::Alice, &[pa, carried], &Unitary::xor_qubit())?;
    let m = s.local_measure(Party::Alice, &[carried])?;
    s.send(Party::Alice, Party::Bob, m, 2)?;
    if m == 1 {
        s.local_unitary(Party::Alice, &[pa], &Unitary::pauli_x())?;
        s.local_unitary(Party::Bob, &[pb], &Unitary::pauli_x())?;
    }
    s.discard(&[carried])?;

    if stop_after_step1 {
        let mut kept = refs.to_vec();
        kept.extend([pa, pb]);
        let got = s.register_state(&kept)?;
        let fidelity = got.fidelity(&doubled_last_axis(input)?)?;
        return Ok(RunOutcome { fidelity, step1_fidelity: None });
    }

    s.local_unitary(Party::Alice, &[pa], &Unitary::hadamard())?;
    let k = s.local_measure(Party::Alice, &[pa])?;
    s.send(Party::Alice, Party::Bob, k, 2)?;
    if k == 1 {
        s.local_unitary(Party::Bob, &[pb], &Unitary::pauli_z())?;
    }
    s.discard(&[pa])?;

    let mut kept = refs.to_vec();
    kept.push(pb);
    let fidelity = s.register_state(&kept)?.fidelity(input)?;
    Ok(RunOutcome { fidelity, step1_fidelity: None })
}

/// Teleports the last qubit of `input`; any leading registers ride along as
/// untouched references, so entangled inputs exercise the full channel.
/// With `stop_after_step1` the run ends after one message, leaving the
/// carried amplitudes shared across the pair.
pub fn teleport_two_stage(
    input: &PureState,
    stop_after_step1: bool,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    check_carried_dim(input, 2)?;
    let cap = dim_cap_for(input.total_dim() as u128 * 4);
    let ev = evaluate(eval, seed, cap, &|s| {
        two_stage_procedure(s, input, stop_after_step1)
    })?;
    let (formula_bits, formula_ref) = if stop_after_step1 {
        (dilution_formula_bits(2), "log2_d_bits")
    } else {
        (teleport_formula_bits(2), "two_log2_d_bits")
    };
    Ok(ProtocolReport {
        protocol: "teleport".into(),
        params: json!({
            "input_dims": input.dims(),
            "d": 2,
            "stop_after_step1": stop_after_step1,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits,
        formula_ref: formula_ref.into(),
        mode: Mode::Exact,
        seed,
    })
}

fn d_dim_procedure(s: &mut LoccSession, input: &PureState, d: usize) -> Result<RunOutcome, ProtocolError> {
    let ids = s.add_local_state(Party::Alice, "in", input.clone())?;
    let (&carried, refs) = ids.split_last().expect("input has at least one register");
    let uniform = vec![1.0 / d as f64; d];
    let (pa, pb) = s.add_entangled_pair(&uniform, d, d)?;

    carry_onto_pair(s, pa, pb, carried, d)?;
    fourier_stage(s, pa, pb, d)?;

    let mut kept = refs.to_vec();
    kept.push(pb);
    let fidelity = s.register_state(&kept)?.fidelity(input)?;
    Ok(RunOutcome { fidelity, step1_fidelity: None })
}

/// Teleports the last register of `input`, of dimension `d`, through a
/// maximally entangled pair: d² branches, 2 log2(d) bits, log2(d) ebits.
pub fn teleport_d_dim(
    input: &PureState,
    d: usize,
    eval: Evaluation,
    seed: u64,
) -> ProtocolResult<ProtocolReport> {
    if d < 2 {
        return Err(ProtocolError::BadDimension { dim: d });
    }
    check_carried_dim(input, d)?;
    let cap = dim_cap_for(input.total_dim() as u128 * (d * d) as u128);
    let ev = evaluate(eval, seed, cap, &|s| d_dim_procedure(s, input, d))?;
    Ok(ProtocolReport {
        protocol: "teleport-d".into(),
        params: json!({
            "input_dims": input.dims(),
            "d": d,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits: teleport_formula_bits(d),
        formula_ref: "two_log2_d_bits".into(),
        mode: Mode::Exact,
        seed,
    })
}

fn dilute_procedure(s: &mut LoccSession, a: f64, b: f64) -> Result<RunOutcome, ProtocolError> {
    let (pa, pb) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
    let src = s.add_local_state(
        Party::Alice,
        "src",
        PureState::qubit(Complex64::new(a, 0.0), Complex64::new(b, 0.0))?,
    )?[0];
    carry_onto_pair(s, pa, pb, src, 2)?;
    let target = PureState::new(
        vec![2, 2],
        vec![
            Complex64::new(a, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(b, 0.0),
        ],
    )?;
    let fidelity = s.register_state(&[pa, pb])?.fidelity(&target)?;
    Ok(RunOutcome { fidelity, step1_fidelity: None })
}

/// Turns one maximally entangled pair into the shared state
/// a|00> + b|11> with a single classical bit: the first teleportation stage
/// applied to a locally prepared source qubit. The report's params carry the
/// cost of routing the same pair through full teleportation instead.
pub fn dilute_step1_only(a: f64, b: f64, eval: Evaluation, seed: u64) -> ProtocolResult<ProtocolReport> {
    if a < 0.0 || b < 0.0 || (a * a + b * b - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(ProtocolError::BadSchmidtPair { a, b });
    }
    let pair_state = PureState::new(
        vec![2, 2],
        vec![
            Complex64::new(a, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(b, 0.0),
        ],
    )?;
    let baseline = teleport_two_stage(&pair_state, false, eval, seed)?;
    let ev = evaluate(eval, seed, dim_cap_for(16), &|s| dilute_procedure(s, a, b))?;
    Ok(ProtocolReport {
        protocol: "dilute".into(),
        params: json!({
            "a": a,
            "b": b,
            "baseline_bits_exact": baseline.bits_exact,
            "baseline_bits_ceiling": baseline.bits_ceiling,
            "baseline_fidelity": baseline.fidelity_expected,
        }),
        bits_exact: ev.bits_exact,
        bits_ceiling: ev.bits_ceiling,
        ebits: ev.ebits,
        fidelity_expected: ev.fidelity_expected,
        fidelity_branches: ev.branches,
        formula_bits: dilution_formula_bits(2),
        formula_ref: "log2_d_bits".into(),
        mode: Mode::Exact,
        seed,
    })
}
