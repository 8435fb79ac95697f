use super::{TypspaceError, TypspaceResult, ENUM_CAP};
use crate::qcore::ALGEBRAIC_TOL;

/// Frequency-window membership gets this much slop so that exact rational
/// boundaries (delta = 1/6 and friends) are not lost to float rounding.
/// Genuine violations are at least 1/(n * denominator) away, far above it.
const WINDOW_SLOP: f64 = 1e-12;

/// Strongly typical strings of length `n` over an alphabet, stored as basis
/// indices (mixed radix, leftmost symbol most significant), ascending. Index
/// order coincides with lexicographic string order.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalSet {
    alphabet: usize,
    n: usize,
    delta: f64,
    p: Vec<f64>,
    members: Vec<usize>,
}

fn validate(p: &[f64], n: usize, delta: f64) -> TypspaceResult<()> {
    let sum: f64 = p.iter().sum();
    if p.len() < 2 || p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(TypspaceError::BadProbabilities { sum });
    }
    if n == 0 {
        return Err(TypspaceError::NoCopies);
    }
    if delta < 0.0 {
        return Err(TypspaceError::BadDelta { delta });
    }
    Ok(())
}

fn in_window(counts: &[usize], n: usize, p: &[f64], delta: f64) -> bool {
    counts
        .iter()
        .zip(p)
        .all(|(&c, &ps)| (c as f64 / n as f64 - ps).abs() <= delta + WINDOW_SLOP)
}

impl TypicalSet {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member basis indices, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// Rank of a member index within the set.
    pub fn rank(&self, index: usize) -> Option<usize> {
        self.members.binary_search(&index).ok()
    }

    /// Symbol string of a basis index, leftmost symbol first.
    pub fn string_of(&self, index: usize) -> Vec<u8> {
        let mut digits = vec![0u8; self.n];
        let mut rem = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rem % self.alphabet) as u8;
            rem /= self.alphabet;
        }
        digits
    }

    pub fn index_of(&self, string: &[u8]) -> usize {
        string
            .iter()
            .fold(0usize, |acc, &s| acc * self.alphabet + s as usize)
    }

    /// Source probability of one member string.
    pub fn member_probability(&self, index: usize) -> f64 {
        self.string_of(index)
            .iter()
            .map(|&s| self.p[s as usize])
            .product()
    }

    /// Total source probability of the set, by enumeration.
    pub fn enumerated_weight(&self) -> f64 {
        kahan_sum(self.members.iter().map(|&m| self.member_probability(m)))
    }
}

/// The strongly typical set for n copies of the source p.
pub fn typical_set(p: &[f64], n: usize, delta: f64) -> TypspaceResult<TypicalSet> {
    validate(p, n, delta)?;
    let alphabet = p.len();
    let universe = (alphabet as u128).pow(n as u32);
    if universe > ENUM_CAP as u128 {
        return Err(TypspaceError::UniverseTooLarge {
            requested: universe,
            cap: ENUM_CAP,
        });
    }
    let universe = universe as usize;
    let full = delta >= 1.0;
    let mut members = Vec::new();
    let mut counts = vec![0usize; alphabet];
    for index in 0..universe {
        if full {
            members.push(index);
            continue;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rem = index;
        for _ in 0..n {
            counts[rem % alphabet] += 1;
            rem /= alphabet;
        }
        if in_window(&counts, n, p, delta) {
            members.push(index);
        }
    }
    if members.is_empty() {
        return Err(TypspaceError::EmptyTypicalSet { n, delta });
    }
    Ok(TypicalSet {
        alphabet,
        n,
        delta,
        p: p.to_vec(),
        members,
    })
}

/// Total source probability of the typical set, from multinomial type
/// classes, without enumerating members. Handles n far beyond enumeration
/// range.
pub fn typical_weight(p: &[f64], n: usize, delta: f64) -> TypspaceResult<f64> {
    validate(p, n, delta)?;
    if delta >= 1.0 {
        return Ok(1.0);
    }
    let mut counts = vec![0usize; p.len()];
    let mut total = 0.0f64;
    let mut any = false;
    sum_classes(p, n, delta, 0, n, &mut counts, &mut total, &mut any);
    if !any {
        return Err(TypspaceError::EmptyTypicalSet { n, delta });
    }
    Ok(total)
}

fn sum_classes(
    p: &[f64],
    n: usize,
    delta: f64,
    symbol: usize,
    remaining: usize,
    counts: &mut Vec<usize>,
    total: &mut f64,
    any: &mut bool,
) {
    if symbol == p.len() - 1 {
        counts[symbol] = remaining;
        if in_window(counts, n, p, delta) {
            *any = true;
            *total += class_term(n, counts, p);
        }
        return;
    }
    for c in 0..=remaining {
        counts[symbol] = c;
        sum_classes(p, n, delta, symbol + 1, remaining - c, counts, total, any);
    }
}

/// multinomial(n; counts) * prod p_s^{counts_s}, with the probability factors
/// interleaved into the coefficient loop so intermediates stay near the
/// final magnitude.
fn class_term(n: usize, counts: &[usize], p: &[f64]) -> f64 {
    let mut acc = 1.0f64;
    let mut rem = n;
    for (s, &c) in counts.iter().enumerate() {
        for t in 1..=c {
            acc *= (rem - c + t) as f64 * p[s] / t as f64;
        }
        rem -= c;
    }
    acc
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
