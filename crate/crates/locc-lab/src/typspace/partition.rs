use num_integer::lcm;
use serde::Serialize;

use super::{TypspaceError, TypspaceResult};
use crate::qcore::ALGEBRAIC_TOL;

/// Disjoint blocks of basis indices with a weight per block.
///
/// Weights sum to 1 for a full partition, or to the covered probability
/// when the blocks are restricted to a typical subset. Block contents are
/// kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    universe: usize,
    blocks: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct PartitionJson<'a> {
    blocks: &'a [Vec<usize>],
    weights: &'a [f64],
}

impl BlockPartition {
    pub fn new(
        universe: usize,
        blocks: Vec<Vec<usize>>,
        weights: Vec<f64>,
    ) -> TypspaceResult<Self> {
        if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
            return Err(TypspaceError::EmptyPartition);
        }
        if blocks.len() != weights.len() {
            return Err(TypspaceError::BadWeights {
                sum: weights.len() as f64,
            });
        }
        let mut blocks: Vec<Vec<usize>> = blocks;
        let mut seen = vec![false; universe];
        for block in &mut blocks {
            block.sort_unstable();
            for &i in block.iter() {
                if i >= universe {
                    return Err(TypspaceError::BadBlockIndex { index: i, universe });
                }
                if seen[i] {
                    return Err(TypspaceError::OverlappingBlocks { index: i });
                }
                seen[i] = true;
            }
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(0.0..=1.0 + ALGEBRAIC_TOL).contains(&w))
            || sum <= 0.0
            || sum > 1.0 + ALGEBRAIC_TOL
        {
            return Err(TypspaceError::BadWeights { sum });
        }
        Ok(BlockPartition {
            universe,
            blocks,
            weights,
        })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Covered probability; 1 for a full partition.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Least common multiple of the block cardinalities.
    pub fn lcm_of_block_sizes(&self) -> usize {
        self.blocks.iter().fold(1, |acc, b| lcm(acc, b.len()))
    }

    /// Fixed-schema export: {"blocks": [[indices]], "weights": [reals]}.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&PartitionJson {
            blocks: &self.blocks,
            weights: &self.weights,
        })
        .expect("partition serializes")
    }
}

/// Partition of the 3^n1 basis strings over {0,1,2} by the positions that
/// carry the symbol 2. One block per position set P: the 2^{n1-|P|} strings
/// with 2 exactly on P, weighted (c^2)^{|P|} (1-c^2)^{n1-|P|} regardless of
/// which positions. `delta` restricts the count of 2s to the typical window
/// |count/n1 - c^2| <= delta; None keeps every count.
pub fn position_partition(
    n1: usize,
    c_squared: f64,
    delta: Option<f64>,
) -> TypspaceResult<BlockPartition> {
    if n1 == 0 {
        return Err(TypspaceError::NoCopies);
    }
    if !(c_squared > 0.0 && c_squared < 1.0) {
        return Err(TypspaceError::BadConcentration { value: c_squared });
    }
    if let Some(d) = delta {
        if d < 0.0 {
            return Err(TypspaceError::BadDelta { delta: d });
        }
    }
    let universe = 3usize.pow(n1 as u32);
    let count_ok = |w: usize| match delta {
        None => true,
        Some(d) => (w as f64 / n1 as f64 - c_squared).abs() <= d + 1e-12,
    };
    let mut blocks = Vec::new();
    let mut weights = Vec::new();
    for w in 0..=n1 {
        if !count_ok(w) {
            continue;
        }
        let weight = c_squared.powi(w as i32) * (1.0 - c_squared).powi((n1 - w) as i32);
        for mask in 0u32..(1u32 << n1) {
            if mask.count_ones() as usize != w {
                continue;
            }
            let free: Vec<usize> = (0..n1).filter(|&i| mask >> i & 1 == 0).collect();
            let mut block = Vec::with_capacity(1 << free.len());
            for assign in 0u32..(1u32 << free.len()) {
                let mut index = 0usize;
                for i in 0..n1 {
                    // position 0 is the leftmost (most significant) symbol
                    let symbol = if mask >> i & 1 == 1 {
                        2
                    } else {
                        let k = free.iter().position(|&f| f == i).unwrap();
                        (assign >> k & 1) as usize
                    };
                    index = index * 3 + symbol;
                }
                block.push(index);
            }
            blocks.push(block);
            weights.push(weight);
        }
    }
    if blocks.is_empty() {
        return Err(TypspaceError::EmptyTypicalSet {
            n: n1,
            delta: delta.unwrap_or(0.0),
        });
    }
    BlockPartition::new(universe, blocks, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_signal_splits_off_the_two() {
        let p = position_partition(1, 0.5, None).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert!((p.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(p.lcm_of_block_sizes(), 2);
    }

    #[test]
    fn three_signals_with_typical_counts_give_six_blocks() {
        let p = position_partition(3, 0.5, Some(1.0 / 6.0)).unwrap();
        assert_eq!(p.len(), 6);
        let sizes: Vec<usize> = p.blocks().iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4, 2, 2, 2]);
        // c^2 = 1/2 makes every typical block weigh c^2(1-c^2)^2 = 1/8
        for &w in p.weights() {
            assert!((w - 0.125).abs() < 1e-12);
        }
        assert!((p.total_weight() - 0.75).abs() < 1e-12);
        assert_eq!(p.lcm_of_block_sizes(), 4);
    }

    #[test]
    fn unrestricted_partition_covers_the_universe() {
        let p = position_partition(2, 0.3, None).unwrap();
        let covered: usize = p.blocks().iter().map(|b| b.len()).sum();
        assert_eq!(covered, 9);
        assert!((p.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(p.len(), 4); // position sets: {}, {1}, {0}, {0,1}
    }

    #[test]
    fn block_members_have_twos_exactly_on_their_positions() {
        let p = position_partition(3, 0.5, None).unwrap();
        for block in p.blocks() {
            let digits = |mut v: usize| {
                let mut d = [0usize; 3];
                for slot in d.iter_mut().rev() {
                    *slot = v % 3;
                    v /= 3;
                }
                d
            };
            let pattern: Vec<bool> = digits(block[0]).iter().map(|&s| s == 2).collect();
            for &m in block.iter() {
                let got: Vec<bool> = digits(m).iter().map(|&s| s == 2).collect();
                assert_eq!(got, pattern);
            }
        }
    }

    #[test]
    fn lcm_examples() {
        let p = BlockPartition::new(5, vec![vec![0, 1], vec![2, 3, 4]], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.lcm_of_block_sizes(), 6);
        let p = BlockPartition::new(4, vec![vec![0, 1], vec![2, 3]], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.lcm_of_block_sizes(), 2);
        let p = BlockPartition::new(
            7,
            vec![vec![0, 1, 2, 3], vec![4, 5], vec![6]],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        assert_eq!(p.lcm_of_block_sizes(), 4);
    }

    #[test]
    fn restricted_block_sizes_stay_within_typicality_bounds() {
        for (n1, c2, d) in [(3usize, 0.5f64, 1.0 / 6.0), (4, 0.5, 0.125), (4, 0.3, 0.2)] {
            let p = position_partition(n1, c2, Some(d)).unwrap();
            let lo = (n1 as f64 * (1.0 - c2 - d)).exp2();
            let hi = (n1 as f64 * (1.0 - c2 + d)).exp2();
            for b in p.blocks() {
                let size = b.len() as f64;
                assert!(size >= lo - 1e-9 && size <= hi + 1e-9, "{size} vs [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn validation_rejects_malformed_partitions() {
        assert!(matches!(
            BlockPartition::new(4, vec![vec![0, 1], vec![1, 2]], vec![0.5, 0.5]),
            Err(TypspaceError::OverlappingBlocks { index: 1 })
        ));
        assert!(matches!(
            BlockPartition::new(2, vec![vec![0, 5]], vec![1.0]),
            Err(TypspaceError::BadBlockIndex { index: 5, .. })
        ));
        assert!(matches!(
            BlockPartition::new(4, vec![vec![0], vec![1]], vec![0.9, 0.9]),
            Err(TypspaceError::BadWeights { .. })
        ));
        assert!(matches!(
            BlockPartition::new(4, vec![], vec![]),
            Err(TypspaceError::EmptyPartition)
        ));
        assert!(matches!(
            position_partition(2, 1.0, None),
            Err(TypspaceError::BadConcentration { .. })
        ));
    }

    #[test]
    fn json_schema_is_fixed() {
        let p = BlockPartition::new(3, vec![vec![0, 1], vec![2]], vec![0.75, 0.25]).unwrap();
        assert_eq!(
            p.to_json(),
            r#"{"blocks":[[0,1],[2]],"weights":[0.75,0.25]}"#
        );
    }
}
