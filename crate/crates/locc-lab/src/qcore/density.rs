use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{PureState, QcoreError, QcoreResult, Unitary, ALGEBRAIC_TOL};

/// Density operator, validated Hermitian with unit trace and spectrum
/// bounded below by -1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> QcoreResult<Self> {
        if entries.len() != dim * dim {
            return Err(QcoreError::OperatorDimMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                herm_dev =
                    herm_dev.max((entries[i * dim + j] - entries[j * dim + i].conj()).norm());
            }
        }
        if herm_dev > ALGEBRAIC_TOL {
            return Err(QcoreError::NotHermitian { deviation: herm_dev });
        }
        let trace: f64 = (0..dim).map(|k| entries[k * dim + k].re).sum();
        if (trace - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QcoreError::BadTrace { trace });
        }
        let rho = DensityMatrix { dim, entries };
        let min = rho
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -ALGEBRAIC_TOL {
            return Err(QcoreError::NegativeEigenvalue { value: min });
        }
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        let amps = state.amps();
        let dim = amps.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, a) in amps.iter().enumerate() {
            for (j, b) in amps.iter().enumerate() {
                entries[i * dim + j] = a * b.conj();
            }
        }
        DensityMatrix { dim, entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    /// Real spectrum, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j));
        let eig = SymmetricEigen::new(m);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    /// S(ρ) = -Σ λ log₂ λ, in bits.
    pub fn von_neumann_entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 0.0)
            .map(|l| -l * l.log2())
            .sum()
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self.entry(i, j) * self.entry(j, i)).re;
            }
        }
        acc
    }

    /// U ρ U†.
    pub fn conjugate(&self, u: &Unitary) -> QcoreResult<Self> {
        if u.dim() != self.dim {
            return Err(QcoreError::DimensionMismatch {
                left: self.dim,
                right: u.dim(),
            });
        }
        let d = self.dim;
        let mut tmp = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += u.entry(i, k) * self.entry(k, j);
                }
                tmp[i * d + j] = acc;
            }
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += tmp[i * d + k] * u.entry(j, k).conj();
                }
                entries[i * d + j] = acc;
            }
        }
        Ok(DensityMatrix { dim: d, entries })
    }

    /// Convex combination Σ wᵢ ρᵢ. Weights must be a probability vector.
    pub fn mix(components: &[(f64, DensityMatrix)]) -> QcoreResult<Self> {
        let dim = match components.first() {
            Some((_, rho)) => rho.dim,
            None => return Err(QcoreError::EmptyTargets),
        };
        let mut total = 0.0;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (w, rho) in components {
            if *w < -ALGEBRAIC_TOL {
                return Err(QcoreError::DomainViolation {
                    value: *w,
                    domain: "[0, 1]",
                });
            }
            if rho.dim != dim {
                return Err(QcoreError::DimensionMismatch {
                    left: dim,
                    right: rho.dim,
                });
            }
            total += w;
            for (slot, e) in entries.iter_mut().zip(&rho.entries) {
                *slot += e * *w;
            }
        }
        if (total - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QcoreError::BadTrace { trace: total });
        }
        DensityMatrix::new(dim, entries)
    }
}

/// (1/2) Tr |a - b|, in [0, 1].
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> QcoreResult<f64> {
    if a.dim() != b.dim() {
        return Err(QcoreError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let dim = a.dim();
    let m = DMatrix::from_fn(dim, dim, |i, j| a.entry(i, j) - b.entry(i, j));
    let eig = SymmetricEigen::new(m);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// H(p) = -p log₂ p - (1-p) log₂ (1-p).
pub fn binary_entropy(p: f64) -> QcoreResult<f64> {
    shannon_entropy(&[p, 1.0 - p])
}

/// H(p₁..pₙ) = -Σ pᵢ log₂ pᵢ over a probability vector.
pub fn shannon_entropy(probs: &[f64]) -> QcoreResult<f64> {
    let mut total = 0.0;
    let mut h = 0.0;
    for &p in probs {
        if !(-ALGEBRAIC_TOL..=1.0 + ALGEBRAIC_TOL).contains(&p) {
            return Err(QcoreError::DomainViolation {
                value: p,
                domain: "[0, 1]",
            });
        }
        total += p;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    if (total - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(QcoreError::BadTrace { trace: total });
    }
    Ok(h)
}
