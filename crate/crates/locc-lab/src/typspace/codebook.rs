use super::{BlockPartition, TypicalSet, TypspaceError, TypspaceResult};
use super::typical::typical_set;

/// Bijection between the members of a typical set and code indices
/// 0..D-1, in lexicographic member order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    typical: TypicalSet,
}

impl Codebook {
    pub fn new(typical: TypicalSet) -> Self {
        Codebook { typical }
    }

    /// Codebook over the strongly typical set of n copies of the source p.
    pub fn from_source(p: &[f64], n: usize, delta: f64) -> TypspaceResult<Self> {
        Ok(Codebook::new(typical_set(p, n, delta)?))
    }

    pub fn typical(&self) -> &TypicalSet {
        &self.typical
    }

    /// Number of codewords D.
    pub fn len(&self) -> usize {
        self.typical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.typical.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.typical.alphabet()
    }

    pub fn n(&self) -> usize {
        self.typical.n()
    }

    /// Code index of a joint basis value; None for atypical values.
    pub fn encode_index(&self, joint: usize) -> Option<usize> {
        self.typical.rank(joint)
    }

    /// Joint basis value of a code index.
    pub fn decode_index(&self, code: usize) -> Option<usize> {
        self.typical.members().get(code).copied()
    }

    pub fn encode(&self, string: &[u8]) -> Option<usize> {
        self.encode_index(self.typical.index_of(string))
    }

    pub fn decode(&self, code: usize) -> Option<Vec<u8>> {
        self.decode_index(code).map(|m| self.typical.string_of(m))
    }

    /// The codebook as singleton blocks with the members' source
    /// probabilities as weights; total weight is the typical weight.
    pub fn to_partition(&self) -> BlockPartition {
        let blocks: Vec<Vec<usize>> = self.typical.members().iter().map(|&m| vec![m]).collect();
        let weights: Vec<f64> = self
            .typical
            .members()
            .iter()
            .map(|&m| self.typical.member_probability(m))
            .collect();
        let universe = self
            .typical
            .alphabet()
            .pow(self.typical.n() as u32);
        BlockPartition::new(universe, blocks, weights).expect("members are disjoint singletons")
    }

    /// Fixed-schema export, via the singleton partition.
    pub fn to_json(&self) -> String {
        self.to_partition().to_json()
    }
}

impl TryFrom<TypicalSet> for Codebook {
    type Error = TypspaceError;

    fn try_from(typical: TypicalSet) -> TypspaceResult<Self> {
        if typical.len() < 2 {
            return Err(TypspaceError::DegenerateCodebook {
                size: typical.len(),
            });
        }
        Ok(Codebook::new(typical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_over_all_members() {
        let cb = Codebook::from_source(&[0.75, 0.25], 8, 0.125).unwrap();
        assert_eq!(cb.len(), 92);
        for code in 0..cb.len() {
            let s = cb.decode(code).unwrap();
            assert_eq!(cb.encode(&s), Some(code));
            let joint = cb.decode_index(code).unwrap();
            assert_eq!(cb.encode_index(joint), Some(code));
        }
    }

    #[test]
    fn atypical_values_do_not_encode() {
        let cb = Codebook::from_source(&[0.5, 0.5], 2, 0.0).unwrap();
        assert_eq!(cb.len(), 2);
        assert_eq!(cb.encode_index(0), None); // string 00
        assert_eq!(cb.encode_index(3), None); // string 11
        assert_eq!(cb.encode_index(1), Some(0));
        assert_eq!(cb.encode_index(2), Some(1));
        assert_eq!(cb.decode_index(5), None);
    }

    #[test]
    fn codes_follow_lexicographic_member_order() {
        let cb = Codebook::from_source(&[0.75, 0.25], 4, 0.5).unwrap();
        let members = cb.typical().members();
        for w in members.windows(2) {
            assert!(w[0] < w[1]);
        }
        for (code, &m) in members.iter().enumerate() {
            assert_eq!(cb.decode_index(code), Some(m));
        }
    }

    #[test]
    fn singleton_partition_carries_member_weights() {
        let cb = Codebook::from_source(&[0.5, 0.5], 2, 0.0).unwrap();
        let p = cb.to_partition();
        assert_eq!(p.blocks(), &[vec![1], vec![2]]);
        assert_eq!(p.weights(), &[0.25, 0.25]);
        assert_eq!(
            cb.to_json(),
            r#"{"blocks":[[1],[2]],"weights":[0.25,0.25]}"#
        );
        assert!((p.total_weight() - 0.5).abs() < 1e-15);
    }
}
