//! Executes configs and grids: single runs write the report JSON, sweeps
//! re-execute a base config across a parameter grid and emit a cost table
//! next to a CSV. Grid points run on their own threads; rows keep grid
//! order, and every file is written once, by the calling thread.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::protocols::{
    block_entropy, grouped_entropy, phase_entropy, quad_entropy, ProtocolReport,
};
use crate::qcore::binary_entropy;

use super::{ReportError, ReportResult, RunConfig};

pub const CSV_HEADER: &str = "param,bits_exact,bits_ceiling,ebits,fidelity";

const SWEEPABLE: [&str; 9] = [
    "a_sq", "b_sq", "e_sq", "c_sq", "d", "n1", "nsignals", "groups", "delta",
];

/// One grid point of a sweep. Saving is a comparison of closed forms, the
/// asymptotic target against twice the source entropy, and is recomputed
/// from those columns wherever the table is rendered.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub param_value: f64,
    pub description: String,
    pub entropy: f64,
    pub baseline_bits_per_signal: f64,
    pub formula_bits_per_signal: f64,
    pub bits_exact: f64,
    pub bits_ceiling: u64,
    pub measured_bits_per_signal: f64,
    pub ebits: f64,
    pub fidelity: f64,
    pub error: Option<String>,
}

impl CostRow {
    pub fn saving(&self) -> f64 {
        self.baseline_bits_per_signal - self.formula_bits_per_signal
    }

    fn failed(param_value: f64, error: String) -> Self {
        CostRow {
            param_value,
            description: String::new(),
            entropy: 0.0,
            baseline_bits_per_signal: 0.0,
            formula_bits_per_signal: 0.0,
            bits_exact: 0.0,
            bits_ceiling: 0,
            measured_bits_per_signal: 0.0,
            ebits: 0.0,
            fidelity: 0.0,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostTable {
    pub param: String,
    pub rows: Vec<CostRow>,
}

impl CostTable {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Stable pretty JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| match &r.error {
                Some(message) => json!({
                    "value": r.param_value,
                    "error": message,
                }),
                None => json!({
                    "value": r.param_value,
                    "description": r.description,
                    "entropy": r.entropy,
                    "baseline_bits_per_signal": r.baseline_bits_per_signal,
                    "formula_bits_per_signal": r.formula_bits_per_signal,
                    "bits_exact": r.bits_exact,
                    "bits_ceiling": r.bits_ceiling,
                    "measured_bits_per_signal": r.measured_bits_per_signal,
                    "ebits": r.ebits,
                    "fidelity": r.fidelity,
                    "saving": r.saving(),
                }),
            })
            .collect();
        let doc = json!({ "param": self.param, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("table fields all serialize");
        s.push('\n');
        s
    }

    /// Measured columns only, one line per grid point. Failed rows keep
    /// their place with empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            match &r.error {
                Some(_) => out.push_str(&format!("{},,,,\n", r.param_value)),
                None => out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.param_value, r.bits_exact, r.bits_ceiling, r.ebits, r.fidelity
                )),
            }
        }
        out
    }
}

/// Entropy per signal of the configured source, the S every baseline and
/// saving column is quoted against.
fn per_signal_entropy(cfg: &RunConfig) -> ReportResult<f64> {
    let need = |v: Option<f64>, field: &'static str| {
        v.ok_or_else(|| ReportError::MissingField {
            protocol: cfg.protocol.clone(),
            field,
        })
    };
    Ok(match cfg.protocol.as_str() {
        "teleport" => 1.0,
        "teleport-d" => (cfg.d.unwrap_or(2) as f64).log2(),
        "dilute" => {
            let a = need(cfg.a, "a")?;
            binary_entropy(a * a).map_err(crate::protocols::ProtocolError::from)?
        }
        "rsp-phase" | "rsp-segmented" => {
            let b = need(cfg.b, "b")?;
            phase_entropy(b * b)?
        }
        "rsp-quad" => quad_entropy(need(cfg.e_sq, "e_sq")?)?,
        "rsp-block" => block_entropy(&cfg.partition()?),
        "rsp-grouped" => grouped_entropy(need(cfg.c_sq, "c_sq")?)?,
        "pauli-randomize" => 1.0,
        other => {
            return Err(ReportError::UnknownProtocol { name: other.into() });
        }
    })
}

fn describe(cfg: &RunConfig, nsignals: u64) -> String {
    match cfg.protocol.as_str() {
        "teleport" => "qubit teleportation".into(),
        "teleport-d" => format!("teleportation of a {}-dimensional register", cfg.d.unwrap_or(2)),
        "dilute" => format!(
            "dilution to a={}, b={}",
            cfg.a.unwrap_or(f64::NAN),
            cfg.b.unwrap_or(f64::NAN)
        ),
        "rsp-phase" => format!(
            "phase ensemble with b_sq={}, {nsignals} signals",
            cfg.b.map(|b| b * b).unwrap_or(f64::NAN)
        ),
        "rsp-segmented" => format!(
            "segmented phase ensemble with b_sq={}, {nsignals} signals",
            cfg.b.map(|b| b * b).unwrap_or(f64::NAN)
        ),
        "rsp-quad" => format!(
            "four-letter source with e_sq={}, {nsignals} signals",
            cfg.e_sq.unwrap_or(f64::NAN)
        ),
        "rsp-block" => format!(
            "block-uniform source over {} labels, {nsignals} signals",
            cfg.universe.unwrap_or(0)
        ),
        "rsp-grouped" => format!(
            "grouped qubits with c_sq={}, groups of {}, {nsignals} signals",
            cfg.c_sq.unwrap_or(f64::NAN),
            cfg.n1.unwrap_or(0)
        ),
        "pauli-randomize" => "two-bit Pauli key".into(),
        other => other.into(),
    }
}

fn build_row(cfg: &RunConfig, report: &ProtocolReport, param_value: f64) -> ReportResult<CostRow> {
    let n = report
        .params
        .get("nsignals")
        .and_then(Value::as_u64)
        .unwrap_or(1)
        .max(1);
    let entropy = per_signal_entropy(cfg)?;
    Ok(CostRow {
        param_value,
        description: describe(cfg, n),
        entropy,
        baseline_bits_per_signal: 2.0 * entropy,
        formula_bits_per_signal: report.formula_bits / n as f64,
        bits_exact: report.bits_exact,
        bits_ceiling: report.bits_ceiling,
        measured_bits_per_signal: report.bits_exact / n as f64,
        ebits: report.ebits,
        fidelity: report.fidelity_expected,
        error: None,
    })
}

fn as_count(param: &str, v: f64) -> ReportResult<u64> {
    if v.fract() != 0.0 || v < 0.0 {
        return Err(ReportError::BadField {
            field: param.into(),
            why: format!("needs a nonnegative integer, got {v}"),
        });
    }
    Ok(v as u64)
}

/// Resizes whichever signal generator the config carries. Explicit lists
/// cannot be resized: their length is the parameter.
fn resize_generator(doc: &mut Value, param: &str, key: &str, n: u64) -> ReportResult<()> {
    for field in ["thetas", "coeffs", "signals"] {
        let Some(entry) = doc.get_mut(field) else {
            continue;
        };
        if entry.is_object() {
            entry[key] = json!(n);
            return Ok(());
        }
        return Err(ReportError::BadField {
            field: field.into(),
            why: format!("sweeping {param} needs a seeded generator, not an explicit list"),
        });
    }
    Err(ReportError::BadField {
        field: param.into(),
        why: "the config has no thetas/coeffs/signals generator to resize".into(),
    })
}

fn apply_param(doc: &mut Value, param: &str, v: f64) -> ReportResult<()> {
    if !doc.is_object() {
        return Err(ReportError::BadField {
            field: "config".into(),
            why: "expected a JSON object".into(),
        });
    }
    match param {
        "e_sq" | "c_sq" => doc[param] = json!(v),
        "a_sq" => {
            doc["a"] = json!(v.sqrt());
            doc["b"] = json!((1.0 - v).sqrt());
        }
        "b_sq" => {
            doc["a"] = json!((1.0 - v).sqrt());
            doc["b"] = json!(v.sqrt());
        }
        "delta" => doc["mode"] = json!({ "typical": v }),
        "d" | "n1" => doc[param] = json!(as_count(param, v)?),
        "nsignals" => resize_generator(doc, param, "count", as_count(param, v)?)?,
        "groups" => resize_generator(doc, param, "groups", as_count(param, v)?)?,
        other => {
            return Err(ReportError::BadSweepParam {
                param: other.into(),
                supported: "a_sq, b_sq, e_sq, c_sq, d, n1, nsignals, groups, delta",
            });
        }
    }
    Ok(())
}

fn row_for(mut doc: Value, param: &str, v: f64) -> CostRow {
    let attempt = (|| -> ReportResult<CostRow> {
        apply_param(&mut doc, param, v)?;
        let cfg: RunConfig = serde_json::from_value(doc)?;
        let report = cfg.execute()?;
        build_row(&cfg, &report, v)
    })();
    attempt.unwrap_or_else(|e| CostRow::failed(v, e.to_string()))
}

fn rows_for(base: &Value, param: &str, grid: &[f64]) -> ReportResult<Vec<CostRow>> {
    if grid.is_empty() {
        return Err(ReportError::EmptyGrid);
    }
    if !SWEEPABLE.contains(&param) {
        return Err(ReportError::BadSweepParam {
            param: param.into(),
            supported: "a_sq, b_sq, e_sq, c_sq, d, n1, nsignals, groups, delta",
        });
    }
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&v| {
                let doc = base.clone();
                scope.spawn(move || row_for(doc, param, v))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    }))
}

fn write_file(path: &Path, contents: &str) -> ReportResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| ReportError::Write {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| ReportError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Everything a run produced: the report, and the files it landed in.
#[derive(Debug)]
pub struct RunArtifacts {
    pub report: ProtocolReport,
    pub report_path: Option<PathBuf>,
    pub curve_paths: Vec<PathBuf>,
}

/// Executes one config document. The report goes to the config's output
/// path when one is set; each curve section re-runs the config over its
/// grid and writes the CSV.
pub fn run(text: &str, seed: Option<u64>, out: Option<PathBuf>) -> ReportResult<RunArtifacts> {
    let mut cfg = RunConfig::from_str(text)?;
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = out {
        cfg.output = Some(o);
    }
    let report = cfg.execute()?;
    let report_path = match &cfg.output {
        Some(path) => {
            write_file(path, &report.to_json())?;
            Some(path.clone())
        }
        None => None,
    };
    let mut curve_paths = Vec::new();
    for curve in cfg.curves.as_deref().unwrap_or(&[]) {
        let mut doc: Value = serde_json::from_str(text)?;
        if let Some(s) = seed {
            doc["seed"] = json!(s);
        }
        if let Some(map) = doc.as_object_mut() {
            map.remove("curves");
            map.remove("output");
        }
        let table = CostTable {
            param: curve.param.clone(),
            rows: rows_for(&doc, &curve.param, &curve.grid)?,
        };
        write_file(&curve.path, &table.to_csv())?;
        curve_paths.push(curve.path.clone());
    }
    Ok(RunArtifacts {
        report,
        report_path,
        curve_paths,
    })
}

/// Re-executes a base config across a grid of one parameter. When the base
/// config names an output path, the table lands there as JSON and as CSV
/// with the extension swapped.
pub fn sweep(text: &str, param: &str, grid: &[f64]) -> ReportResult<(CostTable, Vec<PathBuf>)> {
    let base: Value = serde_json::from_str(text)?;
    let table = CostTable {
        param: param.into(),
        rows: rows_for(&base, param, grid)?,
    };
    let mut written = Vec::new();
    if let Some(out) = base.get("output").and_then(Value::as_str) {
        let json_path = PathBuf::from(out).with_extension("json");
        let csv_path = PathBuf::from(out).with_extension("csv");
        write_file(&json_path, &table.to_json())?;
        write_file(&csv_path, &table.to_csv())?;
        written.push(json_path);
        written.push(csv_path);
    }
    Ok((table, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD_SWEEP: &str = r#"{
        "protocol": "rsp-quad",
        "e_sq": 0.25,
        "coeffs": {"seed": 11, "count": 2}
    }"#;

    #[test]
    fn quad_sweep_saving_is_positive_until_the_boundary() {
        let grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];
        let (table, written) = sweep(QUAD_SWEEP, "e_sq", &grid).unwrap();
        assert!(written.is_empty());
        assert_eq!(table.rows.len(), grid.len());
        assert_eq!(table.failed_rows(), 0);
        for row in &table.rows[..grid.len() - 1] {
            assert!(
                row.saving() > 1e-9,
                "no saving at e_sq = {}: {}",
                row.param_value,
                row.saving()
            );
        }
        let boundary = table.rows.last().unwrap();
        assert!(boundary.saving().abs() < 1e-12);
        // Grid order is row order.
        for (row, &v) in table.rows.iter().zip(&grid) {
            assert_eq!(row.param_value, v);
            assert!((row.baseline_bits_per_signal - 2.0 * row.entropy).abs() < 1e-12);
        }
    }

    #[test]
    fn saving_is_recomputed_in_the_rendered_table() {
        let (table, _) = sweep(QUAD_SWEEP, "e_sq", &[0.25]).unwrap();
        let doc: Value = serde_json::from_str(&table.to_json()).unwrap();
        let row = &doc["rows"][0];
        assert_eq!(doc["param"], "e_sq");
        let saving = row["saving"].as_f64().unwrap();
        let baseline = row["baseline_bits_per_signal"].as_f64().unwrap();
        let formula = row["formula_bits_per_signal"].as_f64().unwrap();
        assert_eq!(saving, baseline - formula);
        assert!((saving - 1.0).abs() < 1e-12);
        assert_eq!(row["bits_exact"].as_f64().unwrap(), 6.0);
        assert_eq!(row["measured_bits_per_signal"].as_f64().unwrap(), 3.0);
    }

    #[test]
    fn invalid_grid_points_mark_their_row_and_spare_the_rest() {
        let (table, _) = sweep(QUAD_SWEEP, "e_sq", &[0.25, 0.7]).unwrap();
        assert_eq!(table.failed_rows(), 1);
        assert!(table.rows[0].error.is_none());
        let bad = &table.rows[1];
        assert_eq!(bad.param_value, 0.7);
        assert!(bad.error.as_deref().unwrap().contains("0.5"));
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "0.7,,,,");
    }

    #[test]
    fn unknown_parameters_and_empty_grids_fail_the_whole_sweep() {
        assert!(matches!(
            sweep(QUAD_SWEEP, "weight", &[0.1]),
            Err(ReportError::BadSweepParam { .. })
        ));
        assert!(matches!(
            sweep(QUAD_SWEEP, "e_sq", &[]),
            Err(ReportError::EmptyGrid)
        ));
    }

    #[test]
    fn sweeping_counts_requires_a_generator() {
        let explicit = r#"{
            "protocol": "rsp-phase",
            "a": 0.8, "b": 0.6,
            "thetas": [0.4, 1.1]
        }"#;
        let (table, _) = sweep(explicit, "nsignals", &[1.0, 2.0]).unwrap();
        assert_eq!(table.failed_rows(), 2);
        assert!(table.rows[0]
            .error
            .as_deref()
            .unwrap()
            .contains("generator"));
    }

    #[test]
    fn sweeps_are_deterministic_across_repeats() {
        let grid = [0.1, 0.25, 0.4];
        let (first, _) = sweep(QUAD_SWEEP, "e_sq", &grid).unwrap();
        let (second, _) = sweep(QUAD_SWEEP, "e_sq", &grid).unwrap();
        assert_eq!(first.to_json(), second.to_json());
        assert_eq!(first.to_csv(), second.to_csv());
    }

    #[test]
    fn run_writes_the_report_and_the_requested_curve() {
        let dir = std::env::temp_dir().join(format!("locc-lab-run-{}", std::process::id()));
        let report_path = dir.join("report.json");
        let curve_path = dir.join("curve.csv");
        let text = format!(
            r#"{{
                "protocol": "rsp-phase",
                "a": 0.8, "b": 0.6,
                "thetas": {{"seed": 3, "count": 2}},
                "output": {report_path:?},
                "curves": [{{"param": "nsignals", "grid": [1, 2, 3], "path": {curve_path:?}}}]
            }}"#
        );
        let artifacts = run(&text, Some(9), None).unwrap();
        assert_eq!(artifacts.report.seed, 9);
        let written = std::fs::read_to_string(&report_path).unwrap();
        assert_eq!(written, artifacts.report.to_json());
        let curve = std::fs::read_to_string(&curve_path).unwrap();
        let lines: Vec<&str> = curve.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        for line in &lines[1..] {
            let fidelity: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!((fidelity - 1.0).abs() < 1e-9, "fidelity column off in {line}");
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn delta_sweeps_move_the_mode() {
        let grid = [0.3];
        let (table, _) = sweep(
            r#"{
                "protocol": "rsp-quad",
                "e_sq": 0.25,
                "coeffs": {"seed": 11, "count": 2}
            }"#,
            "delta",
            &grid,
        )
        .unwrap();
        assert_eq!(table.failed_rows(), 0);
        let row = &table.rows[0];
        // The typical window at this width trims the code space below the
        // full sixteen strings.
        assert!(row.bits_exact < 6.0);
        assert!(row.fidelity < 1.0);
    }
}
