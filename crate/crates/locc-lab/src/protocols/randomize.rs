//! Key-averaged randomization of a single qubit. Averaging over the four
//! shift-and-flip keys erases every trace of the input: the mixture is the
//! maximally mixed qubit for any input, so a two-bit one-time key is enough
//! to hide the state, and smaller key sets provably leak.

use serde_json::json;

use crate::qcore::{trace_distance, DensityMatrix, PureState, Unitary};

use super::{Mode, ProtocolError, ProtocolReport, ProtocolResult};

/// Uniform mixture of U_k |input><input| U_k† over the given key set.
pub fn uniform_key_mixture(
    input: &PureState,
    keys: &[Unitary],
) -> ProtocolResult<DensityMatrix> {
    if input.dims() != [2] {
        return Err(ProtocolError::SingleQubit {
            dims: input.dims().to_vec(),
        });
    }
    if keys.is_empty() {
        return Err(ProtocolError::EmptyKeySet);
    }
    let rho = DensityMatrix::from_pure(input);
    let share = 1.0 / keys.len() as f64;
    let mut parts = Vec::with_capacity(keys.len());
    for key in keys {
        parts.push((share, rho.conjugate(key)?));
    }
    Ok(DensityMatrix::mix(&parts)?)
}

/// The four-key average: identity, bit flip, combined flip, phase flip.
pub fn pauli_randomize(input: &PureState) -> ProtocolResult<DensityMatrix> {
    uniform_key_mixture(
        input,
        &[
            Unitary::identity(2),
            Unitary::pauli_x(),
            Unitary::pauli_y(),
            Unitary::pauli_z(),
        ],
    )
}

/// Fixed-cost report: two key bits, no entanglement, and the distance of
/// the averaged output from the maximally mixed qubit (zero when the
/// randomization succeeds).
pub fn randomize_report(input: &PureState, seed: u64) -> ProtocolResult<ProtocolReport> {
    let averaged = pauli_randomize(input)?;
    let distance = trace_distance(&averaged, &DensityMatrix::maximally_mixed(2))?;
    let amps: Vec<[f64; 2]> = input.amps().iter().map(|z| [z.re, z.im]).collect();
    Ok(ProtocolReport {
        protocol: "pauli-randomize".into(),
        params: json!({
            "input": amps,
            "trace_distance_from_mixed": distance,
        }),
        bits_exact: 2.0,
        bits_ceiling: 2,
        ebits: 0.0,
        fidelity_expected: 1.0 - distance,
        fidelity_branches: vec![],
        formula_bits: 2.0,
        formula_ref: "two_bit_key".into(),
        mode: Mode::Exact,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::qcore::Complex64;

    use super::*;

    fn random_qubit(rng: &mut ChaCha8Rng) -> PureState {
        let a = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let b = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        PureState::qubit(a / norm, b / norm).unwrap()
    }

    #[test]
    fn every_input_averages_to_the_maximally_mixed_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mixed = DensityMatrix::maximally_mixed(2);
        for _ in 0..100 {
            let input = random_qubit(&mut rng);
            let averaged = pauli_randomize(&input).unwrap();
            assert!(trace_distance(&averaged, &mixed).unwrap() < 1e-12);
            let report = randomize_report(&input, 7).unwrap();
            assert!(report.fidelity_expected > 1.0 - 1e-12);
            assert_eq!(report.bits_exact, 2.0);
            assert_eq!(report.bits_ceiling, 2);
            assert_eq!(report.ebits, 0.0);
        }
    }

    #[test]
    fn halved_key_sets_leak_the_input() {
        // {identity, flip} leaves |+> invariant, a full half unit of trace
        // distance away from mixed.
        let plus = PureState::qubit(
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        )
        .unwrap();
        let keys = [Unitary::identity(2), Unitary::pauli_x()];
        let averaged = uniform_key_mixture(&plus, &keys).unwrap();
        let gap = trace_distance(&averaged, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_qubit_inputs_and_empty_keys_are_refused() {
        let qutrit = PureState::basis(&[3], &[0]).unwrap();
        assert!(matches!(
            pauli_randomize(&qutrit),
            Err(ProtocolError::SingleQubit { .. })
        ));
        let plus = PureState::qubit(
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        )
        .unwrap();
        assert!(matches!(
            uniform_key_mixture(&plus, &[]),
            Err(ProtocolError::EmptyKeySet)
        ));
    }
}
