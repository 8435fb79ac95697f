use num_complex::Complex64;

use super::{DensityMatrix, QcoreError, QcoreResult, Unitary, ALGEBRAIC_TOL, PROB_FLOOR};

/// Normalized pure state of a composite system.
///
/// `dims` lists the subsystem dimensions; `amps` holds one complex amplitude
/// per joint basis index, leftmost subsystem most significant. A state with
/// no subsystems is the scalar 1 and acts as the tensor identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> QcoreResult<Self> {
        let expected: usize = dims.iter().product();
        if amps.len() != expected {
            return Err(QcoreError::AmplitudeCount {
                expected,
                got: amps.len(),
            });
        }
        let state = PureState { dims, amps };
        let n = state.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QcoreError::NotNormalized { norm_sqr: n });
        }
        Ok(state)
    }

    /// Basis state |labels⟩ of the composite system.
    pub fn basis(dims: &[usize], labels: &[usize]) -> QcoreResult<Self> {
        if labels.len() != dims.len() {
            return Err(QcoreError::DimensionMismatch {
                left: dims.len(),
                right: labels.len(),
            });
        }
        for (k, (&d, &l)) in dims.iter().zip(labels).enumerate() {
            if l >= d {
                return Err(QcoreError::SubsystemOutOfRange {
                    index: k,
                    count: d,
                });
            }
        }
        let total: usize = dims.iter().product();
        let mut amps = vec![Complex64::new(0.0, 0.0); total];
        let mut idx = 0usize;
        for (&d, &l) in dims.iter().zip(labels) {
            idx = idx * d + l;
        }
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(PureState {
            dims: dims.to_vec(),
            amps,
        })
    }

    /// Single-subsystem state from an amplitude vector.
    pub fn single(amps: Vec<Complex64>) -> QcoreResult<Self> {
        let d = amps.len();
        Self::new(vec![d], amps)
    }

    /// One qubit a|0⟩ + b|1⟩.
    pub fn qubit(a: Complex64, b: Complex64) -> QcoreResult<Self> {
        Self::new(vec![2], vec![a, b])
    }

    /// The scalar state of an empty system (tensor identity).
    pub fn scalar() -> Self {
        PureState {
            dims: Vec::new(),
            amps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product self ⊗ other, erroring past `cap` total amplitudes.
    pub fn tensor(&self, other: &PureState, cap: usize) -> QcoreResult<Self> {
        let total = self.total_dim().checked_mul(other.total_dim());
        let requested = total.ok_or(QcoreError::DimensionCap {
            requested: usize::MAX,
            cap,
        })?;
        if requested > cap {
            return Err(QcoreError::DimensionCap { requested, cap });
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(requested);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(PureState { dims, amps })
    }

    /// Same amplitudes under a different subsystem split.
    pub fn reshape(&self, dims: Vec<usize>) -> QcoreResult<Self> {
        let expected: usize = dims.iter().product();
        if expected != self.amps.len() {
            return Err(QcoreError::AmplitudeCount {
                expected,
                got: self.amps.len(),
            });
        }
        Ok(PureState {
            dims,
            amps: self.amps.clone(),
        })
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    fn check_targets(&self, targets: &[usize]) -> QcoreResult<()> {
        if targets.is_empty() {
            return Err(QcoreError::EmptyTargets);
        }
        let mut seen = vec![false; self.dims.len()];
        for &t in targets {
            if t >= self.dims.len() {
                return Err(QcoreError::SubsystemOutOfRange {
                    index: t,
                    count: self.dims.len(),
                });
            }
            if seen[t] {
                return Err(QcoreError::DuplicateSubsystem { index: t });
            }
            seen[t] = true;
        }
        Ok(())
    }

    /// Offset of each joint value of `targets` relative to a base index with
    /// all target digits zero, in mixed radix over the targets in list order.
    fn target_offsets(&self, targets: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let tdims: Vec<usize> = targets.iter().map(|&t| self.dims[t]).collect();
        let span: usize = tdims.iter().product();
        let mut offsets = vec![0usize; span];
        for (v, slot) in offsets.iter_mut().enumerate() {
            let mut rem = v;
            let mut off = 0usize;
            for k in (0..targets.len()).rev() {
                off += (rem % tdims[k]) * strides[targets[k]];
                rem /= tdims[k];
            }
            *slot = off;
        }
        offsets
    }

    /// Base indices (all target digits zero) of every assignment of the
    /// non-target subsystems.
    fn rest_bases(&self, targets: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let rest: Vec<usize> = (0..self.dims.len()).filter(|p| !targets.contains(p)).collect();
        let rest_len: usize = rest.iter().map(|&p| self.dims[p]).product();
        let mut bases = Vec::with_capacity(rest_len);
        for mut r in 0..rest_len {
            let mut base = 0usize;
            for &p in rest.iter().rev() {
                base += (r % self.dims[p]) * strides[p];
                r /= self.dims[p];
            }
            bases.push(base);
        }
        bases
    }

    /// Apply `u` on the listed target subsystems (in list order).
    pub fn apply_unitary(&self, u: &Unitary, targets: &[usize]) -> QcoreResult<Self> {
        self.check_targets(targets)?;
        let span: usize = targets.iter().map(|&t| self.dims[t]).product();
        if u.dim() != span {
            return Err(QcoreError::OperatorDimMismatch {
                expected: span,
                got: u.dim(),
            });
        }
        let offsets = self.target_offsets(targets);
        let mut amps = self.amps.clone();
        if let Some(diag) = u.diagonal() {
            // One pass; the target joint value is recovered via the offset table.
            let mut out = self.amps.clone();
            for base in self.rest_bases(targets) {
                for (v, &off) in offsets.iter().enumerate() {
                    out[base + off] = self.amps[base + off] * diag[v];
                }
            }
            amps = out;
        } else {
            let mut gathered = vec![Complex64::new(0.0, 0.0); span];
            for base in self.rest_bases(targets) {
                for (v, &off) in offsets.iter().enumerate() {
                    gathered[v] = self.amps[base + off];
                }
                for (row, &off) in offsets.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (col, &g) in gathered.iter().enumerate() {
                        acc += u.entry(row, col) * g;
                    }
                    amps[base + off] = acc;
                }
            }
        }
        Ok(PureState {
            dims: self.dims.clone(),
            amps,
        })
    }

    /// Born probabilities of the coarse-grained outcome classes obtained by
    /// measuring the target subsystems and mapping their joint value through
    /// `class_of`.
    pub fn outcome_probabilities(
        &self,
        targets: &[usize],
        class_of: &dyn Fn(usize) -> usize,
        classes: usize,
    ) -> QcoreResult<Vec<f64>> {
        self.check_targets(targets)?;
        let offsets = self.target_offsets(targets);
        let mut probs = vec![0.0f64; classes];
        for base in self.rest_bases(targets) {
            for (v, &off) in offsets.iter().enumerate() {
                let c = class_of(v);
                if c >= classes {
                    return Err(QcoreError::BadOutcomeClass {
                        class: c,
                        count: classes,
                    });
                }
                probs[c] += self.amps[base + off].norm_sqr();
            }
        }
        Ok(probs)
    }

    pub(crate) fn project_class(
        &self,
        targets: &[usize],
        class_of: &dyn Fn(usize) -> usize,
        class: usize,
        prob: f64,
    ) -> Self {
        let offsets = self.target_offsets(targets);
        let scale = 1.0 / prob.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for base in self.rest_bases(targets) {
            for (v, &off) in offsets.iter().enumerate() {
                if class_of(v) == class {
                    amps[base + off] = self.amps[base + off] * scale;
                }
            }
        }
        PureState {
            dims: self.dims.clone(),
            amps,
        }
    }

    /// Projective measurement of the target subsystems with outcomes
    /// coarse-grained by `class_of`. The outcome is the smallest class whose
    /// cumulative Born probability exceeds the supplied uniform real.
    pub fn measure_coarse(
        &self,
        targets: &[usize],
        class_of: &dyn Fn(usize) -> usize,
        classes: usize,
        uniform: f64,
    ) -> QcoreResult<(usize, f64, Self)> {
        if !(0.0..1.0).contains(&uniform) {
            return Err(QcoreError::DomainViolation {
                value: uniform,
                domain: "[0, 1)",
            });
        }
        let probs = self.outcome_probabilities(targets, class_of, classes)?;
        let mut cum = 0.0;
        let mut outcome = classes - 1;
        for (c, &p) in probs.iter().enumerate() {
            cum += p;
            if cum > uniform {
                outcome = c;
                break;
            }
        }
        let p = probs[outcome];
        Ok((outcome, p, self.project_class(targets, class_of, outcome, p)))
    }

    /// Full-basis projective measurement of the target subsystems.
    pub fn measure(&self, targets: &[usize], uniform: f64) -> QcoreResult<(usize, f64, Self)> {
        self.check_targets(targets)?;
        let span: usize = targets.iter().map(|&t| self.dims[t]).product();
        self.measure_coarse(targets, &|v| v, span, uniform)
    }

    /// Every coarse outcome with probability above the pruning floor,
    /// ascending by class index, with its renormalized post state.
    pub fn enumerate_branches_coarse(
        &self,
        targets: &[usize],
        class_of: &dyn Fn(usize) -> usize,
        classes: usize,
    ) -> QcoreResult<Vec<(usize, f64, Self)>> {
        let probs = self.outcome_probabilities(targets, class_of, classes)?;
        Ok(probs
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > PROB_FLOOR)
            .map(|(c, p)| (c, p, self.project_class(targets, class_of, c, p)))
            .collect())
    }

    /// Every fine-grained outcome with probability above the pruning floor.
    pub fn enumerate_branches(&self, targets: &[usize]) -> QcoreResult<Vec<(usize, f64, Self)>> {
        self.check_targets(targets)?;
        let span: usize = targets.iter().map(|&t| self.dims[t]).product();
        self.enumerate_branches_coarse(targets, &|v| v, span)
    }

    /// Drops the `remove` subsystems by slicing at their most probable joint
    /// value. Caller guarantees they are in a product state with the rest;
    /// the result is renormalized (global phase may differ).
    pub(crate) fn slice_out(&self, remove: &[usize]) -> QcoreResult<Self> {
        self.check_targets(remove)?;
        let offsets = self.target_offsets(remove);
        let bases = self.rest_bases(remove);
        let mut best = 0usize;
        let mut best_p = -1.0f64;
        for (v, &off) in offsets.iter().enumerate() {
            let p: f64 = bases.iter().map(|&b| self.amps[b + off].norm_sqr()).sum();
            if p > best_p {
                best_p = p;
                best = v;
            }
        }
        let off = offsets[best];
        let mut amps: Vec<Complex64> = bases.iter().map(|&b| self.amps[b + off]).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let dims: Vec<usize> = (0..self.dims.len())
            .filter(|p| !remove.contains(p))
            .map(|p| self.dims[p])
            .collect();
        PureState::new(dims, amps)
    }

    /// Replaces the target subsystems with one new subsystem of dimension
    /// `new_dim`, appended last, carrying amplitude from joint value `v` to
    /// basis value `map(v)`. `None` entries must only hit zero amplitude.
    pub(crate) fn relabel(
        &self,
        targets: &[usize],
        new_dim: usize,
        map: &dyn Fn(usize) -> Option<usize>,
    ) -> QcoreResult<Self> {
        self.check_targets(targets)?;
        let offsets = self.target_offsets(targets);
        let bases = self.rest_bases(targets);
        let mut amps = vec![Complex64::new(0.0, 0.0); bases.len() * new_dim];
        let mut lost = 0.0f64;
        for (ri, &base) in bases.iter().enumerate() {
            for (v, &off) in offsets.iter().enumerate() {
                let a = self.amps[base + off];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                match map(v) {
                    Some(w) if w < new_dim => {
                        let slot = ri * new_dim + w;
                        if amps[slot].norm_sqr() != 0.0 {
                            return Err(QcoreError::RelabelConflict { value: v });
                        }
                        amps[slot] = a;
                    }
                    _ => lost += a.norm_sqr(),
                }
            }
        }
        if lost > ALGEBRAIC_TOL {
            return Err(QcoreError::RelabelWeightLost { lost });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let mut dims: Vec<usize> = (0..self.dims.len())
            .filter(|p| !targets.contains(p))
            .map(|p| self.dims[p])
            .collect();
        dims.push(new_dim);
        PureState::new(dims, amps)
    }

    /// |⟨self|other⟩|². Subsystem dimension lists must match exactly.
    pub fn fidelity(&self, other: &PureState) -> QcoreResult<f64> {
        if self.dims != other.dims {
            return Err(QcoreError::DimensionMismatch {
                left: self.total_dim(),
                right: other.total_dim(),
            });
        }
        let ip: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm_sqr())
    }

    /// Partial trace onto the `keep` subsystems (in list order).
    pub fn reduced_density(&self, keep: &[usize]) -> QcoreResult<DensityMatrix> {
        self.check_targets(keep)?;
        let kdim: usize = keep.iter().map(|&t| self.dims[t]).product();
        let offsets = self.target_offsets(keep);
        let mut rho = vec![Complex64::new(0.0, 0.0); kdim * kdim];
        for base in self.rest_bases(keep) {
            for (i, &oi) in offsets.iter().enumerate() {
                let ai = self.amps[base + oi];
                if ai.norm_sqr() == 0.0 {
                    continue;
                }
                for (j, &oj) in offsets.iter().enumerate() {
                    rho[i * kdim + j] += ai * self.amps[base + oj].conj();
                }
            }
        }
        DensityMatrix::new(kdim, rho)
    }
}
