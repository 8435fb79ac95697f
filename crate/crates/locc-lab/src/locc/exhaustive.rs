use std::collections::VecDeque;

use super::session::{CostSummary, Event, LoccError, LoccSession, MeasurePolicy};

/// Default cap on the number of outcome paths one exhaustive evaluation may
/// visit.
pub const BRANCH_CAP: usize = 1 << 16;

/// One complete outcome path of a protocol run.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    /// Product of the Born probabilities along the path.
    pub probability: f64,
    /// Measurement outcomes in the order they were drawn.
    pub outcomes: Vec<usize>,
    /// Born probability of each outcome at its measurement.
    pub outcome_probabilities: Vec<f64>,
    pub value: T,
    pub costs: CostSummary,
    pub transcript: Vec<Event>,
}

fn run_with_script<T, E: From<LoccError>>(
    make: &dyn Fn() -> Result<LoccSession, E>,
    procedure: &dyn Fn(&mut LoccSession) -> Result<T, E>,
    script: Vec<usize>,
) -> Result<(Branch<T>, Vec<Vec<usize>>), E> {
    let mut session = make()?;
    session.set_policy(MeasurePolicy::Script {
        forced: script,
        cursor: 0,
    });
    let value = procedure(&mut session)?;
    let spawned = session.take_spawned();
    let (outcomes, probs) = session.outcome_path();
    let branch = Branch {
        probability: session.path_weight(),
        outcomes: outcomes.to_vec(),
        outcome_probabilities: probs.to_vec(),
        value,
        costs: session.cost_summary(),
        transcript: session.transcript().to_vec(),
    };
    Ok((branch, spawned))
}

/// Runs the procedure once per reachable measurement-outcome path.
///
/// Each run follows forced outcomes from its script, then takes the smallest
/// live outcome at every further measurement, queueing the alternatives as
/// new scripts. Every leaf is visited exactly once; branch probabilities sum
/// to 1 up to pruning. Errors out past `cap` completed paths.
pub fn run_exhaustive<T, E: From<LoccError>>(
    make: &dyn Fn() -> Result<LoccSession, E>,
    procedure: &dyn Fn(&mut LoccSession) -> Result<T, E>,
    cap: usize,
) -> Result<Vec<Branch<T>>, E> {
    let mut queue: VecDeque<Vec<usize>> = VecDeque::from([Vec::new()]);
    let mut branches = Vec::new();
    while let Some(script) = queue.pop_front() {
        if branches.len() >= cap {
            return Err(LoccError::BranchExplosion { cap }.into());
        }
        let (branch, spawned) = run_with_script(make, procedure, script)?;
        branches.push(branch);
        queue.extend(spawned);
    }
    Ok(branches)
}

/// Runs the procedure once, forcing the given outcomes; measurements past
/// the script take their smallest live outcome.
pub fn run_scripted<T, E: From<LoccError>>(
    make: &dyn Fn() -> Result<LoccSession, E>,
    procedure: &dyn Fn(&mut LoccSession) -> Result<T, E>,
    script: &[usize],
) -> Result<Branch<T>, E> {
    let (branch, _) = run_with_script(make, procedure, script.to_vec())?;
    Ok(branch)
}

/// Runs the procedure `runs` times with sampled measurement outcomes, one
/// session per run seeded with base_seed + run index.
pub fn run_sampled<T, E: From<LoccError>>(
    make: &dyn Fn(u64) -> Result<LoccSession, E>,
    procedure: &dyn Fn(&mut LoccSession) -> Result<T, E>,
    base_seed: u64,
    runs: usize,
) -> Result<Vec<(T, CostSummary)>, E> {
    let mut out = Vec::with_capacity(runs);
    for k in 0..runs {
        let mut session = make(base_seed.wrapping_add(k as u64))?;
        let value = procedure(&mut session)?;
        out.push((value, session.cost_summary()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::{LoccResult, Party};

    fn make_plain() -> LoccResult<LoccSession> {
        Ok(LoccSession::new(0))
    }

    #[test]
    fn deterministic_procedure_yields_one_branch() {
        let branches = run_exhaustive(
            &make_plain,
            &|s| {
                let anc = s.add_ancilla(Party::Alice, 2, 1)?;
                let m = s.local_measure(Party::Alice, &[anc])?;
                Ok(m)
            },
            BRANCH_CAP,
        )
        .unwrap();
        assert_eq!(branches.len(), 1);
        assert!((branches[0].probability - 1.0).abs() < 1e-12);
        assert_eq!(branches[0].value, 1);
    }

    #[test]
    fn two_pair_measurements_fan_out_to_four_uniform_leaves() {
        let branches = run_exhaustive(
            &make_plain,
            &|s| {
                let (a1, _) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
                let (a2, _) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
                let m1 = s.local_measure(Party::Alice, &[a1])?;
                let m2 = s.local_measure(Party::Alice, &[a2])?;
                Ok(2 * m1 + m2)
            },
            BRANCH_CAP,
        )
        .unwrap();
        assert_eq!(branches.len(), 4);
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-8);
        let mut values: Vec<usize> = branches.iter().map(|b| b.value).collect();
        values.sort_unstable();
        assert_eq!(values, vec![0, 1, 2, 3]);
        for b in &branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
            assert_eq!(b.outcomes.len(), 2);
        }
    }

    #[test]
    fn zero_probability_outcomes_are_never_explored() {
        let branches = run_exhaustive(
            &make_plain,
            &|s| {
                let (a, _) = s.add_entangled_pair(&[1.0], 2, 2)?;
                s.local_measure(Party::Alice, &[a])
            },
            BRANCH_CAP,
        )
        .unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].value, 0);
    }

    #[test]
    fn branch_cap_is_enforced() {
        let err = run_exhaustive(
            &make_plain,
            &|s| {
                for _ in 0..3 {
                    let (a, _) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
                    s.local_measure(Party::Alice, &[a])?;
                }
                Ok(())
            },
            4,
        );
        assert!(matches!(err, Err(LoccError::BranchExplosion { cap: 4 })));
    }

    #[test]
    fn scripted_run_forces_outcomes_and_rejects_impossible_ones() {
        let proc = |s: &mut LoccSession| {
            let (a, _) = s.add_entangled_pair(&[0.25, 0.75], 2, 2)?;
            s.local_measure(Party::Alice, &[a])
        };
        let branch = run_scripted(&make_plain, &proc, &[1]).unwrap();
        assert_eq!(branch.value, 1);
        assert!((branch.probability - 0.75).abs() < 1e-12);

        let proc_det = |s: &mut LoccSession| {
            let (a, _) = s.add_entangled_pair(&[1.0], 2, 2)?;
            s.local_measure(Party::Alice, &[a])
        };
        assert!(matches!(
            run_scripted(&make_plain, &proc_det, &[1]),
            Err(LoccError::ImpossibleOutcome { outcome: 1 })
        ));
    }

    #[test]
    fn sampled_mean_tracks_exhaustive_expectation() {
        let proc = |s: &mut LoccSession| {
            let (a, _) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
            s.local_measure(Party::Alice, &[a])
        };
        let runs = 10_000;
        let samples = run_sampled(&|seed| Ok(LoccSession::new(seed)), &proc, 1234, runs).unwrap();
        let mean: f64 =
            samples.iter().map(|(v, _)| *v as f64).sum::<f64>() / runs as f64;
        // Bernoulli(1/2): three standard errors.
        let sigma = 0.5 / (runs as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn branch_costs_and_transcripts_are_per_path() {
        let branches = run_exhaustive(
            &make_plain,
            &|s| {
                let (a, _) = s.add_entangled_pair(&[0.5, 0.5], 2, 2)?;
                let m = s.local_measure(Party::Alice, &[a])?;
                if m == 1 {
                    s.send(Party::Alice, Party::Bob, 1, 2)?;
                }
                Ok(m)
            },
            BRANCH_CAP,
        )
        .unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            let expect = if b.value == 1 { 1.0 } else { 0.0 };
            assert_eq!(b.costs.bits_a_to_b, expect);
        }
    }
}
