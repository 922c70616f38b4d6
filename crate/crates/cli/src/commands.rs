use fracadi_core::analysis::{
    coefficient_audit, convergence_study, linf_error_1d, linf_error_2d, sweep_1d, sweep_2d,
    AuditReport, ConvergenceReport, DirectionParams, StudyParams, LATTICE_CONVECTION, LATTICE_ORDERS,
    LATTICE_SCALES, SWEEP_SAMPLES,
};
use fracadi_core::problems::{self, ProblemKind, RegistryEntry};
use fracadi_core::solver1d::solve1d_with;
use fracadi_core::{AdiOptions, Execution, FractionalOrder, OperatorRows, ScalarField2D};
use serde::Serialize;

use crate::config::{CommandName, Format, Settings};
use crate::error::CliError;
use crate::output::{emit, h_label, order4, sci5, write_file, Artifact, Table};

const STABILITY_BOUND: f64 = 1.0 + 1e-12;
const STABILITY_NOTE: &str = "Fourier sweeps certify constant-coefficient operators only; \
     stability of variable-coefficient problems is observed empirically, not certified";

pub fn run(s: &Settings) -> Result<(), CliError> {
    match s.command {
        CommandName::Coeffs => coeffs(s),
        CommandName::OperatorTest => converge(s, true),
        CommandName::Converge => converge(s, false),
        CommandName::Solve1d => solve(s, 1),
        CommandName::Solve2d => solve(s, 2),
        CommandName::Stability => stability(s),
        CommandName::Audit => audit(s),
    }
}

fn order(v: f64) -> Result<FractionalOrder, CliError> {
    Ok(FractionalOrder::new(v)?)
}

fn single<T: Copy>(values: &[T], what: &str) -> Result<T, CliError> {
    match values {
        [v] => Ok(*v),
        [] => Err(CliError::Config(format!("--{what} is required"))),
        _ => Err(CliError::Config(format!("--{what} takes a single value for this command"))),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn entry_for(s: &Settings) -> Result<RegistryEntry, CliError> {
    let id = s
        .problem
        .as_deref()
        .ok_or_else(|| CliError::Config("--problem is required".into()))?;
    problems::lookup(id).map_err(|e| CliError::Config(e.to_string()))
}

fn coeffs(s: &Settings) -> Result<(), CliError> {
    let alpha = single(&s.alphas, "alpha")?;
    let n = single(&s.sizes, "n")?;
    let rows = OperatorRows::new(order(alpha)?, n)?;

    #[derive(Serialize)]
    struct Row {
        i: usize,
        first_k: usize,
        values: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Dump {
        alpha: f64,
        n_cells: usize,
        p: Vec<Row>,
        q: Vec<Row>,
    }
    let dump = Dump {
        alpha,
        n_cells: n,
        p: (1..n)
            .map(|i| Row {
                i,
                first_k: 0,
                values: rows.left(i).to_vec(),
            })
            .collect(),
        q: (1..n)
            .map(|i| Row {
                i,
                first_k: i - 1,
                values: rows.right(i).to_vec(),
            })
            .collect(),
    };
    let content = match s.format.unwrap_or(Format::Csv) {
        Format::Json => json(&dump),
        fmt => {
            let mut t = Table::new(["side", "i", "k", "value"]);
            for (side, list) in [("p", &dump.p), ("q", &dump.q)] {
                for r in list {
                    for (off, v) in r.values.iter().enumerate() {
                        t.push(vec![side.into(), r.i.to_string(), (r.first_k + off).to_string(), v.to_string()]);
                    }
                }
            }
            if fmt == Format::Md {
                t.to_markdown()
            } else {
                t.to_csv()
            }
        }
    };
    emit(&[Artifact::single(content)], s.out.as_deref())
}

/// `(α, β)` pairs: equal lengths zip, a single value broadcasts.
fn pairs(entry: &RegistryEntry, s: &Settings) -> Result<Vec<(f64, Option<f64>)>, CliError> {
    let two_d = entry.kind == ProblemKind::Evolution2D;
    if !two_d && !s.betas.is_empty() {
        return Err(CliError::Config(format!("problem '{}' is one-dimensional; drop --beta", entry.id)));
    }
    if s.alphas.is_empty() {
        if !s.betas.is_empty() {
            return Err(CliError::Config("--beta needs --alpha".into()));
        }
        return Ok(entry
            .reference
            .as_ref()
            .map(|r| r.columns.iter().map(|c| (c.alpha, c.beta)).collect())
            .unwrap_or_default());
    }
    if !two_d {
        return Ok(s.alphas.iter().map(|&a| (a, None)).collect());
    }
    let (a, b) = (&s.alphas, &s.betas);
    match (a.len(), b.len()) {
        (_, 0) => Err(CliError::Config(format!("problem '{}' needs --beta", entry.id))),
        (x, y) if x == y => Ok(a.iter().zip(b).map(|(&a, &b)| (a, Some(b))).collect()),
        (1, _) => Ok(b.iter().map(|&b| (a[0], Some(b))).collect()),
        (_, 1) => Ok(a.iter().map(|&a| (a, Some(b[0]))).collect()),
        _ => Err(CliError::Config("--alpha and --beta lists must have equal length or length one".into())),
    }
}

fn study_tag(r: &ConvergenceReport) -> String {
    match r.params.beta {
        Some(b) => format!("{}_alpha{}_beta{}", r.problem_id, r.params.alpha, b),
        None => format!("{}_alpha{}", r.problem_id, r.params.alpha),
    }
}

fn column_label(r: &ConvergenceReport) -> String {
    match r.params.beta {
        Some(b) => format!("α={}, β={}", r.params.alpha, b),
        None => format!("α={}", r.params.alpha),
    }
}

/// One row per `h`, an error and order column per study.
fn markdown_table(reports: &[&ConvergenceReport]) -> String {
    let mut headers = vec!["h".to_string()];
    for r in reports {
        headers.push(format!("{} max error", column_label(r)));
        headers.push("order".into());
    }
    let mut t = Table::new(headers);
    let rows = reports.iter().map(|r| r.entries.len()).max().unwrap_or(0);
    for k in 0..rows {
        let mut row = vec![reports[0].entries.get(k).map(|e| h_label(e.n)).unwrap_or_default()];
        for r in reports {
            match r.entries.get(k) {
                Some(e) => {
                    row.push(e.error.map(sci5).unwrap_or_else(|| "failed".into()));
                    row.push(order4(e.order));
                }
                None => row.extend(["".into(), "".into()]),
            }
        }
        t.push(row);
    }
    t.to_markdown()
}

fn converge(s: &Settings, operator_only: bool) -> Result<(), CliError> {
    let entries = if operator_only && s.problem.is_none() {
        vec![problems::lookup("table1")?, problems::lookup("table2")?]
    } else {
        vec![entry_for(s)?]
    };
    if operator_only {
        if let Some(e) = entries.iter().find(|e| e.kind != ProblemKind::OperatorTest) {
            return Err(CliError::Config(format!("'{}' is not an operator-test problem", e.id)));
        }
    }
    let entries_exec = if s.parallel_entries {
        Execution::Parallel
    } else {
        Execution::Sequential
    };

    let mut reports = Vec::new();
    for entry in &entries {
        let sizes = if s.sizes.is_empty() {
            entry
                .reference
                .as_ref()
                .map(|r| r.denominators.clone())
                .ok_or_else(|| CliError::Config(format!("problem '{}' needs --n or --h", entry.id)))?
        } else {
            s.sizes.clone()
        };
        for (alpha, beta) in pairs(entry, s)? {
            let params = StudyParams {
                alpha,
                beta,
                dt_rule: s.dt,
                oracle_tol: s.oracle_tol,
                t_final: s.t_final,
            };
            let report = convergence_study(&entry.id, params, &sizes, Execution::Parallel, entries_exec)
                .map_err(|e| CliError::Config(e.to_string()))?;
            reports.push(report);
        }
    }

    let artifacts = match s.format.unwrap_or(Format::Csv) {
        Format::Json => vec![Artifact::single(json(&reports))],
        Format::Csv => reports
            .iter()
            .map(|r| {
                let mut t = Table::new(["h", "error", "order"]);
                for e in &r.entries {
                    t.push(vec![
                        e.h.to_string(),
                        e.error.map(|v| v.to_string()).unwrap_or_default(),
                        e.order.map(|v| v.to_string()).unwrap_or_default(),
                    ]);
                }
                Artifact {
                    tag: (reports.len() > 1).then(|| study_tag(r)),
                    content: t.to_csv(),
                }
            })
            .collect(),
        Format::Md => entries
            .iter()
            .map(|entry| {
                let group: Vec<&ConvergenceReport> = reports.iter().filter(|r| r.problem_id == entry.id).collect();
                Artifact {
                    tag: (entries.len() > 1).then(|| entry.id.clone()),
                    content: format!("### {}: {}\n\n{}", entry.id, entry.description, markdown_table(&group)),
                }
            })
            .collect(),
    };
    emit(&artifacts, s.out.as_deref())?;

    let failure = reports
        .iter()
        .flat_map(|r| r.entries.iter().filter_map(|e| e.failure.clone().map(|f| (e.n, f))))
        .next();
    match failure {
        Some((n, f)) => Err(CliError::Entry {
            kind: f.kind,
            message: format!("entry h=1/{n} failed: {}", f.message),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    problem: String,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    n: usize,
    h: f64,
    dt: f64,
    dt_adjusted: bool,
    steps: usize,
    t_final: f64,
    error: f64,
    max_abs: f64,
}

fn solve(s: &Settings, dimension: usize) -> Result<(), CliError> {
    let entry = entry_for(s)?;
    let want = if dimension == 1 {
        ProblemKind::Evolution1D
    } else {
        ProblemKind::Evolution2D
    };
    if entry.kind != want {
        return Err(CliError::Config(format!(
            "problem '{}' cannot be run by solve{dimension}d",
            entry.id
        )));
    }
    let alpha = single(&s.alphas, "alpha")?;
    let n = single(&s.sizes, "n")?;
    let h = 1.0 / n as f64;
    let dt = s.dt.dt(h);

    let report = if dimension == 1 {
        if !s.betas.is_empty() {
            return Err(CliError::Config("solve1d takes no --beta".into()));
        }
        let mut p = problems::problem1d(&entry.id, order(alpha)?, s.oracle_tol)?;
        if let Some(t) = s.t_final {
            p.t_final = t;
        }
        let sol = solve1d_with(&p, n, dt, Execution::Parallel)?;
        let exact = p.exact.as_ref().expect("registry problems have exact solutions");
        if let Some(path) = &s.field_out {
            let mut t = Table::new(["x", "u"]);
            for (x, u) in sol.field.grid().nodes().zip(sol.field.values()) {
                t.push(vec![x.to_string(), u.to_string()]);
            }
            write_file(path, &t.to_csv())?;
        }
        SolveReport {
            problem: entry.id.clone(),
            alpha,
            beta: None,
            n,
            h,
            dt: sol.dt,
            dt_adjusted: sol.dt_adjusted,
            steps: sol.steps,
            t_final: sol.t_final,
            error: linf_error_1d(&sol.field, &**exact, sol.t_final),
            max_abs: sol.field.max_abs(),
        }
    } else {
        let beta = single(&s.betas, "beta")?;
        let mut p = problems::problem2d(&entry.id, order(alpha)?, order(beta)?, s.oracle_tol)?;
        if let Some(t) = s.t_final {
            p.t_final = t;
        }
        let opts = AdiOptions {
            execution: Execution::Parallel,
            sweep_order: s.sweep_order,
        };
        let sol = fracadi_core::adi2d::solve2d_with(&p, n, n, dt, &opts)?;
        let exact = p.exact.as_ref().expect("registry problems have exact solutions");
        if let Some(path) = &s.field_out {
            write_file(path, &field_csv(&sol.field))?;
        }
        SolveReport {
            problem: entry.id.clone(),
            alpha,
            beta: Some(beta),
            n,
            h,
            dt: sol.dt,
            dt_adjusted: sol.dt_adjusted,
            steps: sol.steps,
            t_final: sol.t_final,
            error: linf_error_2d(&sol.field, &**exact, sol.t_final),
            max_abs: sol.field.max_abs(),
        }
    };

    let content = match s.format.unwrap_or(Format::Json) {
        Format::Json => json(&report),
        fmt => {
            let value = serde_json::to_value(&report).expect("serializable report");
            let obj = value.as_object().expect("object");
            let mut t = Table::new(obj.keys().cloned());
            t.push(obj.values().map(|v| v.to_string().trim_matches('"').to_string()).collect());
            if fmt == Format::Md {
                t.to_markdown()
            } else {
                t.to_csv()
            }
        }
    };
    emit(&[Artifact::single(content)], s.out.as_deref())
}

/// Matrix dump: one line per y index, x varying along the line.
fn field_csv(f: &ScalarField2D) -> String {
    let mut s = String::new();
    for j in 0..f.grid_y().n_nodes() {
        let line: Vec<String> = f.row(j).iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
struct StabilityCase {
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    xi: f64,
    eta: f64,
    gamma: f64,
    max_magnitude: f64,
}

#[derive(Debug, Serialize)]
struct StabilityReport {
    dimension: usize,
    samples: usize,
    bound: f64,
    passed: bool,
    max_magnitude: f64,
    note: &'static str,
    cases: Vec<StabilityCase>,
}

fn stability(s: &Settings) -> Result<(), CliError> {
    let alphas = if s.alphas.is_empty() {
        LATTICE_ORDERS.to_vec()
    } else {
        s.alphas.clone()
    };
    let two_d = !s.betas.is_empty();
    let orders: Vec<(f64, Option<f64>)> = if !two_d {
        alphas.iter().map(|&a| (a, None)).collect()
    } else {
        let b = &s.betas;
        match (alphas.len(), b.len()) {
            (x, y) if x == y => alphas.iter().zip(b).map(|(&a, &b)| (a, Some(b))).collect(),
            (1, _) => b.iter().map(|&b| (alphas[0], Some(b))).collect(),
            (_, 1) => alphas.iter().map(|&a| (a, Some(b[0]))).collect(),
            _ => return Err(CliError::Config("--alpha and --beta lists must have equal length or length one".into())),
        }
    };

    let mut cases = Vec::new();
    for &(alpha, beta) in &orders {
        for &xi in &LATTICE_SCALES {
            for &eta in &LATTICE_SCALES {
                for &gamma in &LATTICE_CONVECTION {
                    let x = DirectionParams { order: alpha, xi, eta, gamma };
                    let sweep = match beta {
                        None => sweep_1d(x, SWEEP_SAMPLES)?,
                        Some(b) => sweep_2d(x, DirectionParams { order: b, ..x }, SWEEP_SAMPLES)?,
                    };
                    cases.push(StabilityCase {
                        alpha,
                        beta,
                        xi,
                        eta,
                        gamma,
                        max_magnitude: sweep.max_magnitude,
                    });
                }
            }
        }
    }
    let max_magnitude = cases.iter().map(|c| c.max_magnitude).fold(0.0, f64::max);
    let report = StabilityReport {
        dimension: if two_d { 2 } else { 1 },
        samples: SWEEP_SAMPLES,
        bound: STABILITY_BOUND,
        passed: max_magnitude <= STABILITY_BOUND,
        max_magnitude,
        note: STABILITY_NOTE,
        cases,
    };
    let content = match s.format.unwrap_or(Format::Json) {
        Format::Json => json(&report),
        fmt => {
            let mut t = Table::new(["alpha", "beta", "xi", "eta", "gamma", "max_magnitude"]);
            for c in &report.cases {
                t.push(vec![
                    c.alpha.to_string(),
                    c.beta.map(|b| b.to_string()).unwrap_or_default(),
                    c.xi.to_string(),
                    c.eta.to_string(),
                    c.gamma.to_string(),
                    c.max_magnitude.to_string(),
                ]);
            }
            if fmt == Format::Md {
                format!("{}\n{STABILITY_NOTE}.\n", t.to_markdown())
            } else {
                t.to_csv()
            }
        }
    };
    emit(&[Artifact::single(content)], s.out.as_deref())?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "amplification factor {max_magnitude} exceeds {STABILITY_BOUND}"
        )))
    }
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    passed: bool,
    reports: Vec<AuditReport>,
}

fn audit(s: &Settings) -> Result<(), CliError> {
    let alphas = if s.alphas.is_empty() {
        (0..19).map(|k| ((105 + 5 * k) as f64) / 100.0).collect()
    } else {
        s.alphas.clone()
    };
    let sizes = if s.sizes.is_empty() {
        vec![8, 16, 64, 128]
    } else {
        s.sizes.clone()
    };
    let mut reports = Vec::new();
    for &a in &alphas {
        for &n in &sizes {
            reports.push(coefficient_audit(order(a)?, n)?);
        }
    }
    let summary = AuditSummary {
        passed: reports.iter().all(AuditReport::passed),
        reports,
    };
    let content = match s.format.unwrap_or(Format::Json) {
        Format::Json => json(&summary),
        fmt => {
            let mut t = Table::new(["alpha", "n_cells", "checks", "violations", "first_violation"]);
            for r in &summary.reports {
                t.push(vec![
                    r.alpha.to_string(),
                    r.n_cells.to_string(),
                    r.checks.to_string(),
                    r.violations.to_string(),
                    r.first_violation
                        .as_ref()
                        .map(|v| match v.col {
                            Some(c) => format!("{} at ({}; {})", v.check, v.row, c),
                            None => format!("{} at row {}", v.check, v.row),
                        })
                        .unwrap_or_default(),
                ]);
            }
            if fmt == Format::Md {
                t.to_markdown()
            } else {
                t.to_csv()
            }
        }
    };
    emit(&[Artifact::single(content)], s.out.as_deref())?;
    if summary.passed {
        Ok(())
    } else {
        let first = summary.reports.iter().find(|r| !r.passed()).expect("a failing report");
        Err(CliError::CheckFailed(format!(
            "coefficient audit failed for alpha = {}, N = {}: {:?}",
            first.alpha, first.n_cells, first.first_violation
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn settings(json: &str) -> Settings {
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        Settings::resolve(&cfg).unwrap()
    }

    #[test]
    fn pairs_zip_and_broadcast() {
        let e = problems::lookup("cd2d-twosided").unwrap();
        let s = settings(r#"{"command": "converge", "alpha": [1.1, 1.6], "beta": [1.1, 1.4]}"#);
        assert_eq!(pairs(&e, &s).unwrap(), vec![(1.1, Some(1.1)), (1.6, Some(1.4))]);
        let s = settings(r#"{"command": "converge", "alpha": 1.5, "beta": [1.2, 1.4]}"#);
        assert_eq!(pairs(&e, &s).unwrap(), vec![(1.5, Some(1.2)), (1.5, Some(1.4))]);
        let s = settings(r#"{"command": "converge", "alpha": 1.5}"#);
        assert!(pairs(&e, &s).is_err());
        let s = settings(r#"{"command": "converge"}"#);
        assert_eq!(pairs(&e, &s).unwrap().len(), 3);
        let one = problems::lookup("cd1d").unwrap();
        let s = settings(r#"{"command": "converge", "alpha": 1.5, "beta": 1.5}"#);
        assert!(pairs(&one, &s).is_err());
    }

    #[test]
    fn field_dump_rows_follow_y() {
        let gx = fracadi_core::UniformGrid1D::new(0.0, 1.0, 2).unwrap();
        let gy = fracadi_core::UniformGrid1D::new(0.0, 1.0, 1).unwrap();
        let f = ScalarField2D::from_fn(gx, gy, |x, y| x + 10.0 * y);
        assert_eq!(field_csv(&f), "0,0.5,1\n10,10.5,11\n");
    }
}
