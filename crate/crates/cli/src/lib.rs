//! File formats and subcommands behind the `singlq` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use singlq::experiments::{fit_loglog_slope, run_sweep, Alpha, ExperimentRecord, Family};
use singlq::linalg::{Matrix, Tolerance};
use singlq::{
    compare_final_subspaces, recursive_reduce, reduce, Error, LqProblem, OracleResult,
    ReductionResult,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            Error::Validation(_)
            | Error::InvalidShape(_)
            | Error::InvalidTolerance(_)
            | Error::InsufficientData(_) => CliError::Input(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

const KEYS: [&str; 5] = ["A", "B", "Q", "N", "R"];

/// Problem loaded from a JSON file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub problem: LqProblem,
}

impl ProblemFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("malformed JSON: {e}")))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| CliError::Input("problem file must be a JSON object".into()))?;
        let mut mats = Vec::with_capacity(KEYS.len());
        for key in KEYS {
            let v = obj
                .get(key)
                .ok_or_else(|| CliError::Input(format!("missing key \"{key}\"")))?;
            mats.push(matrix_from_json(key, v)?);
        }
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(CliError::Input("key \"name\" must be a string".into())),
        };
        let mut it = mats.into_iter();
        let mut next = || it.next().expect("five matrices");
        let problem =
            LqProblem::new(next(), next(), next(), next(), next()).map_err(|e| match e {
                Error::Validation(v) => CliError::Input(match v.matrix() {
                    Some(key) => format!("key \"{key}\": {v}"),
                    None => v.to_string(),
                }),
                other => other.into(),
            })?;
        Ok(ProblemFile { name, problem })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut obj = serde_json::Map::new();
        if let Some(name) = &self.name {
            obj.insert("name".into(), Value::String(name.clone()));
        }
        let p = &self.problem;
        for (key, m) in KEYS.iter().zip([&p.a, &p.b, &p.q, &p.n_cross, &p.r]) {
            obj.insert(
                (*key).into(),
                serde_json::to_value(rows_of(m)).expect("finite entries"),
            );
        }
        serde_json::to_string_pretty(&Value::Object(obj)).expect("finite entries")
    }
}

fn matrix_from_json(key: &str, v: &Value) -> CliResult<Matrix> {
    let bad = |what: &str| CliError::Input(format!("key \"{key}\": {what}"));
    let rows = v
        .as_array()
        .ok_or_else(|| bad("expected an array of rows"))?;
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| bad(&format!("row {i} is not an array")))?;
        let mut out = Vec::with_capacity(row.len());
        for (j, x) in row.iter().enumerate() {
            let x = x
                .as_f64()
                .ok_or_else(|| bad(&format!("entry ({i}, {j}) is not a number")))?;
            out.push(x);
        }
        data.push(out);
    }
    let cols = data.first().map_or(0, Vec::len);
    if let Some(i) = data.iter().position(|r| r.len() != cols) {
        return Err(bad(&format!(
            "row {i} has {} entries, row 0 has {cols}",
            data[i].len()
        )));
    }
    Ok(Matrix::from_fn(data.len(), cols, |i, j| data[i][j]))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A matrix with its shape spelled out, so empty blocks keep their width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: rows_of(m),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> CliResult<Matrix> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(CliError::Input(format!(
                "matrix data does not match shape {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |i, j| {
            self.data[i][j]
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub first_class: usize,
    pub second_class: usize,
}

/// JSON view of a reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub tol: f64,
    pub index_k: usize,
    pub m_res: usize,
    pub rp: usize,
    pub classification: ClassCounts,
    pub matrices: BTreeMap<String, MatrixJson>,
}

impl ReportDocument {
    pub fn from_result(name: Option<String>, res: &ReductionResult) -> Self {
        let blocks: [(&str, Matrix); 14] = [
            ("feedtot", res.feedtot.clone()),
            ("solved_directions", res.solved_directions.clone()),
            ("nofeed", res.nofeed.clone()),
            ("feedback_law", res.feedback_law()),
            ("phi_i", res.phi_i.clone()),
            ("phi_ii", res.phi_ii.clone()),
            ("ax", res.ax.clone()),
            ("ap", res.ap.clone()),
            ("qx", res.qx.clone()),
            ("qp", res.qp.clone()),
            ("bu", res.bu.clone()),
            ("nu", res.nu.clone()),
            ("constraint_subspace", res.constraint_subspace()),
            ("extended", res.extended.union().rows().clone()),
        ];
        ReportDocument {
            name,
            n: res.n,
            m: res.m,
            tol: res.tol.get(),
            index_k: res.index_k,
            m_res: res.m_res,
            rp: res.rp,
            classification: ClassCounts {
                first_class: res.extended.first_class.len(),
                second_class: res.extended.second_class.len(),
            },
            matrices: blocks
                .iter()
                .map(|(k, m)| ((*k).to_string(), MatrixJson::from(m)))
                .collect(),
        }
    }

    pub fn matrix(&self, key: &str) -> CliResult<Matrix> {
        self.matrices
            .get(key)
            .ok_or_else(|| CliError::Input(format!("report has no matrix \"{key}\"")))?
            .to_matrix()
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite entries")
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed report: {e}")))
    }
}

pub fn tolerance(tol: f64) -> CliResult<Tolerance> {
    Tolerance::new(tol).map_err(|_| CliError::Input(format!("--tol must be positive, got {tol}")))
}

pub fn cmd_reduce(path: &Path, tol: Tolerance) -> CliResult<ReportDocument> {
    let file = ProblemFile::load(path)?;
    let res = reduce(&file.problem, tol)?;
    Ok(ReportDocument::from_result(file.name, &res))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub report: ReportDocument,
    pub index_k_reduce: usize,
    pub index_k_oracle: usize,
    pub oracle_constraints: MatrixJson,
    /// Radians, or the string "not computable".
    pub angle: Value,
}

pub const NOT_COMPUTABLE: &str = "not computable";

/// Oracle on `path`, feedback reduction on `against` (or on `path` again).
pub fn cmd_oracle(path: &Path, against: Option<&Path>, tol: Tolerance) -> CliResult<OracleReport> {
    let first = ProblemFile::load(path)?;
    let second = match against {
        Some(p) => ProblemFile::load(p)?,
        None => first.clone(),
    };
    let oracle: OracleResult = recursive_reduce(&first.problem, tol)?;
    let res = reduce(&second.problem, tol)?;
    let angle = match compare_final_subspaces(&oracle, &res, tol) {
        Ok(a) => Value::from(a),
        Err(Error::DimensionMismatch(_)) => Value::from(NOT_COMPUTABLE),
        Err(e) => return Err(e.into()),
    };
    Ok(OracleReport {
        index_k_reduce: res.index_k,
        index_k_oracle: oracle.index_k,
        oracle_constraints: MatrixJson::from(&oracle.final_constraints),
        report: ReportDocument::from_result(second.name, &res),
        angle,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentArgs {
    pub family: u8,
    pub n: usize,
    pub r: Option<usize>,
    pub l: Option<usize>,
    pub deltas: Vec<f64>,
    pub seed: u64,
    pub tol: Tolerance,
}

impl ExperimentArgs {
    pub fn family(&self) -> CliResult<Family> {
        match self.family {
            1 => {
                let need = |v: Option<usize>, flag: &str| {
                    v.ok_or_else(|| CliError::Input(format!("family 1 needs --{flag}")))
                };
                Ok(Family::Exp1 {
                    r: need(self.r, "r")?,
                    l: need(self.l, "l")?,
                })
            }
            2 => Ok(Family::Exp2),
            3 => Ok(Family::Exp3),
            f => Err(CliError::Input(format!(
                "--family must be 1, 2 or 3, got {f}"
            ))),
        }
    }
}

/// Parses a comma-separated list of non-negative reals.
pub fn parse_deltas(text: &str) -> CliResult<Vec<f64>> {
    let deltas = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(d) if d.is_finite() && d >= 0.0 => Ok(d),
                _ => Err(CliError::Input(format!("--deltas: invalid value \"{s}\""))),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    if deltas.is_empty() {
        return Err(CliError::Input("--deltas is empty".into()));
    }
    Ok(deltas)
}

pub fn run_experiment(args: &ExperimentArgs) -> CliResult<Vec<ExperimentRecord>> {
    let family = args.family()?;
    if args.n == 0 {
        return Err(CliError::Input("--n must be positive".into()));
    }
    Ok(run_sweep(
        family,
        args.n,
        &args.deltas,
        args.seed,
        args.tol,
    )?)
}

fn alpha_text(a: Alpha) -> String {
    match a {
        Alpha::Value(v) => format!("{v:.15e}"),
        Alpha::NotComputable => "not_computable".into(),
    }
}

pub fn render_csv(args: &ExperimentArgs, records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# family={} n={} seed={} tol={:e}",
        args.family,
        args.n,
        args.seed,
        args.tol.get()
    );
    out.push_str("n,delta,steps_exact,steps,m,m1,rp,rp1,alpha\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{:e},{},{},{},{},{},{},{}",
            r.n,
            r.delta,
            r.steps_exact,
            r.steps,
            r.m_exact,
            r.m1,
            r.rp_exact,
            r.rp1,
            alpha_text(r.alpha)
        );
    }
    if let Ok(slope) = fit_loglog_slope(records) {
        let _ = writeln!(out, "# slope={slope}");
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordJson {
    n: usize,
    delta: f64,
    steps_exact: usize,
    steps: usize,
    m: usize,
    m1: usize,
    rp: usize,
    rp1: usize,
    alpha: Value,
}

pub fn render_json(args: &ExperimentArgs, records: &[ExperimentRecord]) -> String {
    let rows: Vec<RecordJson> = records
        .iter()
        .map(|r| RecordJson {
            n: r.n,
            delta: r.delta,
            steps_exact: r.steps_exact,
            steps: r.steps,
            m: r.m_exact,
            m1: r.m1,
            rp: r.rp_exact,
            rp1: r.rp1,
            alpha: r
                .alpha
                .value()
                .map_or(Value::from("not_computable"), Value::from),
        })
        .collect();
    let slope = fit_loglog_slope(records).ok();
    let doc = serde_json::json!({
        "family": args.family,
        "n": args.n,
        "seed": args.seed,
        "tol": args.tol.get(),
        "records": rows,
        "slope": slope,
    });
    serde_json::to_string_pretty(&doc).expect("finite entries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    const SINGULAR: &str =
        r#"{"name": "s", "A": [[0]], "B": [[1]], "Q": [[1]], "N": [[0]], "R": [[0]]}"#;

    #[test]
    fn parses_scalar_problem() {
        let f = ProblemFile::parse(SINGULAR).unwrap();
        assert_eq!(f.name.as_deref(), Some("s"));
        assert_eq!(f.problem.b, dmatrix![1.0]);
        let again = ProblemFile::parse(&f.render()).unwrap();
        assert_eq!(again.problem, f.problem);
    }

    #[test]
    fn errors_name_the_key() {
        let missing = r#"{"A": [[0]], "B": [[1]], "Q": [[1]], "N": [[0]]}"#;
        let e = ProblemFile::parse(missing).unwrap_err();
        assert!(e.to_string().contains("\"R\""), "{e}");
        assert_eq!(e.exit_code(), 2);
        let ragged = r#"{"A": [[0, 1], [2]], "B": [[1]], "Q": [[1]], "N": [[0]], "R": [[0]]}"#;
        assert!(ProblemFile::parse(ragged)
            .unwrap_err()
            .to_string()
            .contains("\"A\""));
        let asym = r#"{"A": [[0,0],[0,0]], "B": [[1],[0]], "Q": [[1,2],[0,1]], "N": [[0],[0]], "R": [[0]]}"#;
        assert!(ProblemFile::parse(asym)
            .unwrap_err()
            .to_string()
            .contains("\"Q\""));
        let shape = r#"{"A": [[0]], "B": [[1]], "Q": [[1]], "N": [[0, 1]], "R": [[0]]}"#;
        assert!(ProblemFile::parse(shape)
            .unwrap_err()
            .to_string()
            .contains("\"N\""));
        let text = r#"{"A": [["x"]], "B": [[1]], "Q": [[1]], "N": [[0]], "R": [[0]]}"#;
        assert!(ProblemFile::parse(text)
            .unwrap_err()
            .to_string()
            .contains("\"A\""));
        assert_eq!(ProblemFile::parse("{").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn report_round_trips_bit_identically() {
        let f = ProblemFile::parse(SINGULAR).unwrap();
        let res = reduce(&f.problem, Tolerance::DEFAULT).unwrap();
        let doc = ReportDocument::from_result(f.name, &res);
        let back = ReportDocument::parse(&doc.render()).unwrap();
        assert_eq!(back, doc);
        for (key, m) in &doc.matrices {
            let a = m.to_matrix().unwrap();
            let b = back.matrix(key).unwrap();
            assert_eq!(a.shape(), b.shape());
            assert!(a
                .iter()
                .zip(b.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn awkward_floats_survive() {
        let m = dmatrix![0.1 + 0.2, 1e-300, -5e-324; f64::MAX, 1.0 / 3.0, -0.0];
        let j = MatrixJson::from(&m);
        let back: MatrixJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        let b = back.to_matrix().unwrap();
        assert!(m
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn deltas_parse() {
        assert_eq!(parse_deltas("1e-12, 1e-8").unwrap(), vec![1e-12, 1e-8]);
        assert!(parse_deltas("1e-12,x").is_err());
        assert!(parse_deltas("-1").is_err());
    }

    #[test]
    fn family_one_needs_shape() {
        let args = ExperimentArgs {
            family: 1,
            n: 8,
            r: Some(5),
            l: None,
            deltas: vec![0.0],
            seed: 0,
            tol: Tolerance::DEFAULT,
        };
        assert!(args.family().unwrap_err().to_string().contains("--l"));
        let bad = ExperimentArgs { family: 4, ..args };
        assert_eq!(bad.family().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn csv_layout() {
        let args = ExperimentArgs {
            family: 2,
            n: 5,
            r: None,
            l: None,
            deltas: vec![1e-12, 1e-10],
            seed: 7,
            tol: Tolerance::DEFAULT,
        };
        let recs = run_experiment(&args).unwrap();
        let csv = render_csv(&args, &recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# family=2 n=5 seed=7 tol=1e-6");
        assert_eq!(lines[1], "n,delta,steps_exact,steps,m,m1,rp,rp1,alpha");
        assert!(lines[2].starts_with("5,1e-12,3,3,0,0,2,2,"));
        assert!(lines[4].starts_with("# slope="));
        assert!(csv.ends_with('\n'));
        assert_eq!(alpha_text(Alpha::NotComputable), "not_computable");
        assert_eq!(alpha_text(Alpha::Value(0.5)), "5.000000000000000e-1");
    }
}
