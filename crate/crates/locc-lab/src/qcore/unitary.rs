use std::f64::consts::PI;

use num_complex::Complex64;

use super::{QcoreError, QcoreResult, ALGEBRAIC_TOL};

/// Dense unitary operator, row-major.
///
/// Diagonal operators are detected at construction so application can skip
/// the full matrix product.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dim: usize,
    entries: Vec<Complex64>,
    diagonal: bool,
}

impl Unitary {
    /// Validates U†U = I to within the algebraic tolerance.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> QcoreResult<Self> {
        if entries.len() != dim * dim {
            return Err(QcoreError::OperatorDimMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let mut deviation = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += entries[k * dim + i].conj() * entries[k * dim + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((acc - expect).norm());
            }
        }
        if deviation > ALGEBRAIC_TOL {
            return Err(QcoreError::NotUnitary { deviation });
        }
        Ok(Self::trusted(dim, entries))
    }

    fn trusted(dim: usize, entries: Vec<Complex64>) -> Self {
        let diagonal = entries
            .iter()
            .enumerate()
            .all(|(k, e)| k / dim == k % dim || e.norm_sqr() == 0.0);
        Unitary {
            dim,
            entries,
            diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    /// The diagonal, when the operator is diagonal.
    pub fn diagonal(&self) -> Option<Vec<Complex64>> {
        if !self.diagonal {
            return None;
        }
        Some((0..self.dim).map(|k| self.entry(k, k)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        Self::trusted(dim, entries)
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(0.5f64.sqrt(), 0.0);
        Self::trusted(2, vec![h, h, h, -h])
    }

    pub fn pauli_x() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        Self::trusted(2, vec![z, o, o, z])
    }

    pub fn pauli_y() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        Self::trusted(2, vec![z, -i, i, z])
    }

    pub fn pauli_z() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        Self::trusted(2, vec![o, z, z, -o])
    }

    /// diag(1, e^{iθ}) on a qubit.
    pub fn phase(theta: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::trusted(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                z,
                z,
                Complex64::from_polar(1.0, theta),
            ],
        )
    }

    /// Controlled-NOT on (control, target).
    pub fn xor_qubit() -> Self {
        Self::xor_qudit(2)
    }

    /// Generalized XOR on a (control, target) pair of d-level systems:
    /// |x⟩|y⟩ → |x⟩|y + x mod d⟩.
    pub fn xor_qudit(d: usize) -> Self {
        let dim = d * d;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for x in 0..d {
            for y in 0..d {
                let col = x * d + y;
                let row = x * d + (y + x) % d;
                entries[row * dim + col] = Complex64::new(1.0, 0.0);
            }
        }
        Self::trusted(dim, entries)
    }

    /// Discrete Fourier transform, F[y][x] = ω^{xy}/√d with ω = e^{2πi/d}.
    pub fn fourier(d: usize) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        let mut entries = Vec::with_capacity(d * d);
        for y in 0..d {
            for x in 0..d {
                let angle = 2.0 * PI * (x as f64) * (y as f64) / (d as f64);
                entries.push(Complex64::from_polar(scale, angle));
            }
        }
        Self::trusted(d, entries)
    }

    /// diag(e^{-2πi k l / d}) over l; undoes the phase left by a Fourier-basis
    /// measurement with outcome k.
    pub fn phase_correction(d: usize, k: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for l in 0..d {
            let angle = -2.0 * PI * (k as f64) * (l as f64) / (d as f64);
            entries[l * d + l] = Complex64::from_polar(1.0, angle);
        }
        Self::trusted(d, entries)
    }

    /// |x⟩ → |(m - x) mod d⟩. Self-inverse; reduces to X at d = 2, m = 1.
    pub fn negate_shift(d: usize, m: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for x in 0..d {
            let row = (m + d - x % d) % d;
            entries[row * d + x] = Complex64::new(1.0, 0.0);
        }
        Self::trusted(d, entries)
    }

    /// Permutation sending basis state j to perm[j].
    pub fn permutation(perm: &[usize]) -> QcoreResult<Self> {
        let dim = perm.len();
        let mut seen = vec![false; dim];
        for &p in perm {
            if p >= dim || seen[p] {
                return Err(QcoreError::BadPermutation { dim });
            }
            seen[p] = true;
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, &p) in perm.iter().enumerate() {
            entries[p * dim + j] = Complex64::new(1.0, 0.0);
        }
        Ok(Self::trusted(dim, entries))
    }

    /// Cyclic shift by `s` inside the listed basis indices, identity elsewhere:
    /// indices[r] → indices[(r + s) mod len].
    pub fn cyclic_shift(dim: usize, indices: &[usize], s: usize) -> QcoreResult<Self> {
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut seen = vec![false; dim];
        for &i in indices {
            if i >= dim || seen[i] {
                return Err(QcoreError::BadPermutation { dim });
            }
            seen[i] = true;
        }
        let n = indices.len();
        for (r, &i) in indices.iter().enumerate() {
            perm[i] = indices[(r + s) % n];
        }
        Self::permutation(&perm)
    }

    /// Extends prescribed columns to a full unitary.
    ///
    /// Each entry is (column index, column vector). The prescribed columns
    /// must be orthonormal; the rest are filled by Gram-Schmidt over the
    /// standard basis in ascending index order, skipping vectors whose
    /// residual norm falls below the algebraic tolerance.
    pub fn complete_to_unitary(
        dim: usize,
        prescribed: &[(usize, Vec<Complex64>)],
    ) -> QcoreResult<Self> {
        let mut cols: Vec<Option<Vec<Complex64>>> = vec![None; dim];
        for (idx, v) in prescribed {
            if *idx >= dim {
                return Err(QcoreError::BadColumn { index: *idx, dim });
            }
            if v.len() != dim {
                return Err(QcoreError::VectorLength {
                    expected: dim,
                    got: v.len(),
                });
            }
            if cols[*idx].is_some() {
                return Err(QcoreError::BadColumn { index: *idx, dim });
            }
            cols[*idx] = Some(v.clone());
        }
        let mut deviation = 0.0f64;
        let fixed: Vec<&Vec<Complex64>> = cols.iter().flatten().collect();
        for (a, u) in fixed.iter().enumerate() {
            for (b, w) in fixed.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                deviation = deviation.max((ip - expect).norm());
            }
        }
        if deviation > ALGEBRAIC_TOL {
            return Err(QcoreError::NotOrthonormal { deviation });
        }

        let mut basis: Vec<Vec<Complex64>> = cols.iter().flatten().cloned().collect();
        let mut extras: Vec<Vec<Complex64>> = Vec::new();
        for k in 0..dim {
            if basis.len() == dim {
                break;
            }
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[k] = Complex64::new(1.0, 0.0);
            for u in &basis {
                let ip: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                for (vi, ui) in v.iter_mut().zip(u.iter()) {
                    *vi -= ip * ui;
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm < ALGEBRAIC_TOL {
                continue;
            }
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v.clone());
            extras.push(v);
        }
        let mut extra_iter = extras.into_iter();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, slot) in cols.into_iter().enumerate() {
            let col = match slot {
                Some(v) => v,
                None => extra_iter.next().ok_or(QcoreError::NotOrthonormal {
                    deviation: f64::NAN,
                })?,
            };
            for (i, x) in col.into_iter().enumerate() {
                entries[i * dim + j] = x;
            }
        }
        Self::new(dim, entries)
    }

    pub fn dagger(&self) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries[j * self.dim + i] = self.entry(i, j).conj();
            }
        }
        Self::trusted(self.dim, entries)
    }

    pub fn mul(&self, rhs: &Unitary) -> QcoreResult<Self> {
        if self.dim != rhs.dim {
            return Err(QcoreError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.entry(i, k) * rhs.entry(k, j);
                }
                entries[i * d + j] = acc;
            }
        }
        Ok(Self::trusted(d, entries))
    }

    #[cfg(test)]
    pub(crate) fn random_for_tests(dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        use rand::Rng;
        // Gram-Schmidt over a random complex matrix.
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        while cols.len() < dim {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            for u in &cols {
                let ip: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                for (vi, ui) in v.iter_mut().zip(u.iter()) {
                    *vi -= ip * ui;
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            for x in &mut v {
                *x /= norm;
            }
            cols.push(v);
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, col) in cols.into_iter().enumerate() {
            for (i, x) in col.into_iter().enumerate() {
                entries[i * dim + j] = x;
            }
        }
        Self::trusted(dim, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: Complex64, b: Complex64) {
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn new_rejects_nonunitary() {
        let o = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Unitary::new(2, vec![o, o, o, o]),
            Err(QcoreError::NotUnitary { .. })
        ));
    }

    #[test]
    fn hadamard_squares_to_identity() {
        let h = Unitary::hadamard();
        let hh = h.mul(&h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_close(hh.entry(i, j), Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn paulis_are_unitary_and_self_inverse() {
        for u in [Unitary::pauli_x(), Unitary::pauli_y(), Unitary::pauli_z()] {
            let sq = u.mul(&u).unwrap();
            for i in 0..2 {
                let expect = Complex64::new(1.0, 0.0);
                assert_close(sq.entry(i, i), expect);
            }
            Unitary::new(2, u.entries.clone()).unwrap();
        }
    }

    #[test]
    fn fourier_of_two_is_hadamard() {
        let f = Unitary::fourier(2);
        let h = Unitary::hadamard();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(f.entry(i, j), h.entry(i, j));
            }
        }
    }

    #[test]
    fn fourier_roundtrip_is_identity() {
        for d in 2..=8 {
            let f = Unitary::fourier(d);
            let id = f.dagger().mul(&f).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_close(id.entry(i, j), Complex64::new(expect, 0.0));
                }
            }
        }
    }

    #[test]
    fn phase_correction_at_two_is_z_power() {
        let pc = Unitary::phase_correction(2, 1);
        let z = Unitary::pauli_z();
        for i in 0..2 {
            assert_close(pc.entry(i, i), z.entry(i, i));
        }
        let id = Unitary::phase_correction(2, 0);
        assert_close(id.entry(1, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn negate_shift_matches_definition_and_reduces_to_x() {
        let u = Unitary::negate_shift(3, 2);
        // |x> -> |(2 - x) mod 3>
        assert_close(u.entry(2, 0), Complex64::new(1.0, 0.0));
        assert_close(u.entry(1, 1), Complex64::new(1.0, 0.0));
        assert_close(u.entry(0, 2), Complex64::new(1.0, 0.0));
        let x = Unitary::negate_shift(2, 1);
        for i in 0..2 {
            for j in 0..2 {
                assert_close(x.entry(i, j), Unitary::pauli_x().entry(i, j));
            }
        }
        // self-inverse
        let sq = u.mul(&u).unwrap();
        for i in 0..3 {
            assert_close(sq.entry(i, i), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn xor_qudit_adds_control_into_target() {
        let u = Unitary::xor_qudit(3);
        // |2,2> (index 8) -> |2,1> (index 7)
        assert_close(u.entry(7, 8), Complex64::new(1.0, 0.0));
        // |0,y> fixed
        for y in 0..3 {
            assert_close(u.entry(y, y), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn diagonal_is_detected() {
        assert!(Unitary::phase(1.2).diagonal().is_some());
        assert!(Unitary::phase_correction(5, 3).diagonal().is_some());
        assert!(Unitary::identity(4).diagonal().is_some());
        assert!(Unitary::hadamard().diagonal().is_none());
        assert!(Unitary::pauli_x().diagonal().is_none());
    }

    #[test]
    fn cyclic_shift_permutes_only_listed_indices() {
        let u = Unitary::cyclic_shift(4, &[0, 1], 1).unwrap();
        assert_close(u.entry(1, 0), Complex64::new(1.0, 0.0));
        assert_close(u.entry(0, 1), Complex64::new(1.0, 0.0));
        assert_close(u.entry(2, 2), Complex64::new(1.0, 0.0));
        assert_close(u.entry(3, 3), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn permutation_rejects_invalid() {
        assert!(Unitary::permutation(&[0, 0]).is_err());
        assert!(Unitary::permutation(&[0, 2]).is_err());
    }

    #[test]
    fn complete_to_unitary_fills_remaining_columns() {
        let h = 0.5f64.sqrt();
        let col = vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
        let u = Unitary::complete_to_unitary(2, &[(0, col)]).unwrap();
        assert_close(u.entry(0, 0), Complex64::new(h, 0.0));
        assert_close(u.entry(1, 0), Complex64::new(h, 0.0));
        // Column 1 is e0 orthogonalized against col0, normalized: (h, -h).
        assert_close(u.entry(0, 1), Complex64::new(h, 0.0));
        assert_close(u.entry(1, 1), Complex64::new(-h, 0.0));
    }

    #[test]
    fn complete_to_unitary_skips_dependent_basis_vectors() {
        // Prescribe e0 and e2 in a dim-3 space; e0 must be skipped when filling.
        let mut e0 = vec![Complex64::new(0.0, 0.0); 3];
        e0[0] = Complex64::new(1.0, 0.0);
        let mut e2 = vec![Complex64::new(0.0, 0.0); 3];
        e2[2] = Complex64::new(1.0, 0.0);
        let u = Unitary::complete_to_unitary(3, &[(0, e0), (2, e2)]).unwrap();
        assert_close(u.entry(1, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn complete_to_unitary_rejects_nonorthonormal_prescription() {
        let col = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let res = Unitary::complete_to_unitary(2, &[(0, col.clone()), (1, col)]);
        assert!(matches!(res, Err(QcoreError::NotOrthonormal { .. })));
    }
}
