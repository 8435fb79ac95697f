//! Run configuration: one JSON document fixes the protocol, its parameters,
//! the compression mode, the evaluation strategy, and the output paths.
//! Signal lists are either explicit or drawn from a seeded generator, so a
//! config never needs to inline hundreds of amplitudes to be reproducible.

use std::f64::consts::TAU;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::protocols::{
    dilute_step1_only, randomize_report, remote_prep_block, remote_prep_grouped,
    remote_prep_phase, remote_prep_quad, remote_prep_segmented, teleport_d_dim,
    teleport_two_stage, BlockPrivate, BlockShared, Evaluation, GroupedCoeff, GroupedPrivate,
    GroupedShared, KnowledgeSpec, Mode, PhasePrivate, PhaseShared, ProtocolError, ProtocolReport,
    QuadPrivate, QuadShared,
};
use crate::qcore::{Complex64, PureState};
use crate::typspace::BlockPartition;

use super::{ReportError, ReportResult};

/// Explicit values, or a generator the config references by seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Explicit(Vec<T>),
    Generated(GenSpec),
}

/// Seeded generator reference. `count` sizes flat signal lists; `groups`
/// sizes the grouped protocol, whose signal count is groups times n1.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub groups: Option<usize>,
}

/// Curve request attached to a run: the same config re-executed over a
/// parameter grid, written as CSV.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub param: String,
    pub grid: Vec<f64>,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub e_sq: Option<f64>,
    #[serde(default)]
    pub c_sq: Option<f64>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub universe: Option<usize>,
    #[serde(default)]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub thetas: Option<Source<f64>>,
    #[serde(default)]
    pub coeffs: Option<Value>,
    #[serde(default)]
    pub signals: Option<Source<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub input: Option<Source<[f64; 2]>>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub evaluation: Option<Evaluation>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub curves: Option<Vec<CurveSpec>>,
}

/// Quad signals: four amplitudes each, as [re, im] pairs.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum QuadCoeffs {
    Explicit(Vec<[[f64; 2]; 4]>),
    Generated(GenSpec),
}

/// Grouped signals: one (a, b, theta) triple per source qubit.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GroupedCoeffs {
    Explicit(Vec<CoeffTriple>),
    Generated(GenSpec),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffTriple {
    a: [f64; 2],
    b: [f64; 2],
    theta: f64,
}

fn c(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| draw(rng)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            return amps.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn random_quad_signal(e_sq: f64, rng: &mut ChaCha8Rng) -> [Complex64; 4] {
    let mut top = [draw(rng), draw(rng)];
    let tn = (top[0].norm_sqr() + top[1].norm_sqr()).sqrt();
    let ts = (2.0 * e_sq).sqrt();
    for z in &mut top {
        *z = *z / tn * ts;
    }
    let f_sq = 0.5 - e_sq;
    let mut bottom = [Complex64::new(0.0, 0.0); 2];
    if f_sq > 0.0 {
        bottom = [draw(rng), draw(rng)];
        let bn = (bottom[0].norm_sqr() + bottom[1].norm_sqr()).sqrt();
        let bs = (2.0 * f_sq).sqrt();
        for z in &mut bottom {
            *z = *z / bn * bs;
        }
    }
    [top[0], top[1], bottom[0], bottom[1]]
}

fn random_block_signal(partition: &BlockPartition, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut sig = vec![Complex64::new(0.0, 0.0); partition.universe()];
    for (b, &w) in partition.blocks().iter().zip(partition.weights()) {
        let draws: Vec<Complex64> = b.iter().map(|_| draw(rng)).collect();
        let norm = draws.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (&label, z) in b.iter().zip(&draws) {
            sig[label] = z / norm * w.sqrt();
        }
    }
    sig
}

fn random_grouped_coeff(c_sq: f64, rng: &mut ChaCha8Rng) -> GroupedCoeff {
    let mut pair = [draw(rng), draw(rng)];
    let norm = (pair[0].norm_sqr() + pair[1].norm_sqr()).sqrt();
    let scale = (1.0 - c_sq).sqrt();
    for z in &mut pair {
        *z = *z / norm * scale;
    }
    GroupedCoeff {
        a: pair[0],
        b: pair[1],
        theta: rng.gen::<f64>() * TAU,
    }
}

impl GenSpec {
    fn count(&self, field: &'static str) -> ReportResult<usize> {
        self.count.ok_or_else(|| ReportError::BadField {
            field: field.into(),
            why: "generator needs \"count\"".into(),
        })
    }

    fn groups(&self, field: &'static str) -> ReportResult<usize> {
        self.groups.ok_or_else(|| ReportError::BadField {
            field: field.into(),
            why: "generator needs \"groups\"".into(),
        })
    }
}

impl RunConfig {
    /// Parses a config document. Syntax and shape errors carry the line and
    /// column serde_json reports.
    pub fn from_str(text: &str) -> ReportResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Exact)
    }

    pub fn evaluation(&self) -> Evaluation {
        self.evaluation.unwrap_or(Evaluation::Exhaustive)
    }

    fn require_f64(&self, value: Option<f64>, field: &'static str) -> ReportResult<f64> {
        value.ok_or_else(|| ReportError::MissingField {
            protocol: self.protocol.clone(),
            field,
        })
    }

    /// Protocol parameters present in the config but meaningless for the
    /// named protocol are config bugs, not ignorable noise.
    fn check_allowed(&self, allowed: &[&'static str]) -> ReportResult<()> {
        let set: [(&'static str, bool); 13] = [
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("e_sq", self.e_sq.is_some()),
            ("c_sq", self.c_sq.is_some()),
            ("d", self.d.is_some()),
            ("n1", self.n1.is_some()),
            ("universe", self.universe.is_some()),
            ("blocks", self.blocks.is_some()),
            ("weights", self.weights.is_some()),
            ("thetas", self.thetas.is_some()),
            ("coeffs", self.coeffs.is_some()),
            ("signals", self.signals.is_some()),
            ("input", self.input.is_some()),
        ];
        for (field, present) in set {
            if present && !allowed.contains(&field) {
                return Err(ReportError::UnusedField {
                    protocol: self.protocol.clone(),
                    field,
                });
            }
        }
        Ok(())
    }

    fn input_state(&self, dim: usize) -> ReportResult<PureState> {
        let amps = match &self.input {
            None => {
                return Err(ReportError::MissingField {
                    protocol: self.protocol.clone(),
                    field: "input",
                });
            }
            Some(Source::Explicit(pairs)) => pairs.iter().map(|&p| c(p)).collect(),
            Some(Source::Generated(gen)) => random_state(dim, &mut rng_for(gen.seed)),
        };
        PureState::single(amps).map_err(|e| ReportError::Protocol(ProtocolError::from(e)))
    }

    fn theta_list(&self) -> ReportResult<Vec<f64>> {
        match &self.thetas {
            None => Err(ReportError::MissingField {
                protocol: self.protocol.clone(),
                field: "thetas",
            }),
            Some(Source::Explicit(list)) => Ok(list.clone()),
            Some(Source::Generated(gen)) => {
                let count = gen.count("thetas")?;
                let mut rng = rng_for(gen.seed);
                Ok((0..count).map(|_| rng.gen::<f64>() * TAU).collect())
            }
        }
    }

    fn coeff_value(&self, field: &'static str) -> ReportResult<&Value> {
        self.coeffs.as_ref().ok_or_else(|| ReportError::MissingField {
            protocol: self.protocol.clone(),
            field,
        })
    }

    fn quad_coeffs(&self, e_sq: f64) -> ReportResult<Vec<[Complex64; 4]>> {
        let parsed: QuadCoeffs = serde_json::from_value(self.coeff_value("coeffs")?.clone())
            .map_err(|e| ReportError::BadField {
                field: "coeffs".into(),
                why: format!("expected [[re,im]; 4] rows or a generator: {e}"),
            })?;
        match parsed {
            QuadCoeffs::Explicit(rows) => Ok(rows
                .iter()
                .map(|row| [c(row[0]), c(row[1]), c(row[2]), c(row[3])])
                .collect()),
            QuadCoeffs::Generated(gen) => {
                let count = gen.count("coeffs")?;
                let mut rng = rng_for(gen.seed);
                Ok((0..count).map(|_| random_quad_signal(e_sq, &mut rng)).collect())
            }
        }
    }

    fn grouped_coeffs(&self, c_sq: f64, n1: usize) -> ReportResult<Vec<GroupedCoeff>> {
        let parsed: GroupedCoeffs = serde_json::from_value(self.coeff_value("coeffs")?.clone())
            .map_err(|e| ReportError::BadField {
                field: "coeffs".into(),
                why: format!("expected {{a, b, theta}} rows or a generator: {e}"),
            })?;
        match parsed {
            GroupedCoeffs::Explicit(rows) => Ok(rows
                .iter()
                .map(|t| GroupedCoeff {
                    a: c(t.a),
                    b: c(t.b),
                    theta: t.theta,
                })
                .collect()),
            GroupedCoeffs::Generated(gen) => {
                let groups = gen.groups("coeffs")?;
                let mut rng = rng_for(gen.seed);
                Ok((0..groups * n1)
                    .map(|_| random_grouped_coeff(c_sq, &mut rng))
                    .collect())
            }
        }
    }

    pub(super) fn partition(&self) -> ReportResult<BlockPartition> {
        let universe = self.universe.ok_or_else(|| ReportError::MissingField {
            protocol: self.protocol.clone(),
            field: "universe",
        })?;
        let blocks = self.blocks.clone().ok_or_else(|| ReportError::MissingField {
            protocol: self.protocol.clone(),
            field: "blocks",
        })?;
        let weights = self.weights.clone().ok_or_else(|| ReportError::MissingField {
            protocol: self.protocol.clone(),
            field: "weights",
        })?;
        Ok(BlockPartition::new(universe, blocks, weights).map_err(ProtocolError::from)?)
    }

    fn block_signals(&self, partition: &BlockPartition) -> ReportResult<Vec<Vec<Complex64>>> {
        match &self.signals {
            None => Err(ReportError::MissingField {
                protocol: self.protocol.clone(),
                field: "signals",
            }),
            Some(Source::Explicit(rows)) => Ok(rows
                .iter()
                .map(|row| row.iter().map(|&p| c(p)).collect())
                .collect()),
            Some(Source::Generated(gen)) => {
                let count = gen.count("signals")?;
                let mut rng = rng_for(gen.seed);
                Ok((0..count)
                    .map(|_| random_block_signal(partition, &mut rng))
                    .collect())
            }
        }
    }

    /// Validates the parameters for the named protocol and runs it.
    pub fn execute(&self) -> ReportResult<ProtocolReport> {
        let seed = self.seed();
        let mode = self.mode();
        let eval = self.evaluation();
        let report = match self.protocol.as_str() {
            "teleport" => {
                self.check_allowed(&["input"])?;
                teleport_two_stage(&self.input_state(2)?, false, eval, seed)?
            }
            "teleport-d" => {
                self.check_allowed(&["d", "input"])?;
                let d = self.d.unwrap_or(2);
                teleport_d_dim(&self.input_state(d)?, d, eval, seed)?
            }
            "dilute" => {
                self.check_allowed(&["a", "b"])?;
                let a = self.require_f64(self.a, "a")?;
                let b = self.require_f64(self.b, "b")?;
                dilute_step1_only(a, b, eval, seed)?
            }
            "rsp-phase" | "rsp-segmented" => {
                self.check_allowed(&["a", "b", "thetas"])?;
                let a = self.require_f64(self.a, "a")?;
                let b = self.require_f64(self.b, "b")?;
                let spec = KnowledgeSpec::new(
                    PhaseShared { a, b },
                    PhasePrivate {
                        thetas: self.theta_list()?,
                    },
                );
                if self.protocol == "rsp-phase" {
                    remote_prep_phase(&spec, mode, eval, seed)?
                } else {
                    remote_prep_segmented(&spec, mode, eval, seed)?
                }
            }
            "rsp-quad" => {
                self.check_allowed(&["e_sq", "coeffs"])?;
                let e_sq = self.require_f64(self.e_sq, "e_sq")?;
                let spec = KnowledgeSpec::new(
                    QuadShared { e_sq },
                    QuadPrivate {
                        coeffs: self.quad_coeffs(e_sq)?,
                    },
                );
                remote_prep_quad(&spec, mode, eval, seed)?
            }
            "rsp-block" => {
                self.check_allowed(&["universe", "blocks", "weights", "signals"])?;
                let partition = self.partition()?;
                let signals = self.block_signals(&partition)?;
                let spec = KnowledgeSpec::new(
                    BlockShared { partition },
                    BlockPrivate { signals },
                );
                remote_prep_block(&spec, mode, eval, seed)?
            }
            "rsp-grouped" => {
                self.check_allowed(&["c_sq", "n1", "coeffs"])?;
                let c_sq = self.require_f64(self.c_sq, "c_sq")?;
                let n1 = self.n1.ok_or_else(|| ReportError::MissingField {
                    protocol: self.protocol.clone(),
                    field: "n1",
                })?;
                let spec = KnowledgeSpec::new(
                    GroupedShared { c_sq, n1 },
                    GroupedPrivate {
                        coeffs: self.grouped_coeffs(c_sq, n1)?,
                    },
                );
                remote_prep_grouped(&spec, mode, eval, seed)?
            }
            "pauli-randomize" => {
                self.check_allowed(&["input"])?;
                randomize_report(&self.input_state(2)?, seed)?
            }
            other => {
                return Err(ReportError::UnknownProtocol { name: other.into() });
            }
        };
        Ok(report)
    }
}
