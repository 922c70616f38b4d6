//! Run configuration: JSON file merged with command-line flags (flags win).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fracadi_core::analysis::DtRule;
use fracadi_core::problems::DEFAULT_ORACLE_TOL;
use fracadi_core::{FractionalOrder, SweepOrder};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Coeffs,
    OperatorTest,
    Solve1d,
    Solve2d,
    Converge,
    Stability,
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// A number or a keyword such as `match` or `auto`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOrWord {
    Number(f64),
    Word(String),
}

impl NumberOrWord {
    fn parse(s: &str) -> Self {
        match parse_number(s) {
            Some(v) => NumberOrWord::Number(v),
            None => NumberOrWord::Word(s.to_string()),
        }
    }
}

/// Parses `0.02` or a ratio such as `1/50`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => s.parse().ok(),
    }
}

/// Everything a run can be configured with. Every field is optional so a
/// file can hold a partial configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<OneOrMany<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<OneOrMany<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<OneOrMany<usize>>,
    /// Grid spacings, as numbers or ratio strings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<NumberOrWord>>,
    /// Time step, or `match` for `Δt = h`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<NumberOrWord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_tol: Option<f64>,
    /// Worker count, or `auto`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<NumberOrWord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_order: Option<SweepOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_entries: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` replace those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(base.command),
            problem: self.problem.or(base.problem),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            n: self.n.or(base.n),
            h: self.h.or(base.h),
            dt: self.dt.or(base.dt),
            t_final: self.t_final.or(base.t_final),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            oracle_tol: self.oracle_tol.or(base.oracle_tol),
            threads: self.threads.or(base.threads),
            sweep_order: self.sweep_order.or(base.sweep_order),
            field_out: self.field_out.or(base.field_out),
            parallel_entries: self.parallel_entries.or(base.parallel_entries),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Registry problem id.
    #[arg(long)]
    pub problem: Option<String>,
    /// Fractional order(s) in x, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Fractional order(s) in y, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Cells per direction, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "h")]
    pub n: Option<Vec<usize>>,
    /// Grid spacings such as `1/50,1/100`.
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<String>>,
    /// Time step, or `match` for Δt = h.
    #[arg(long)]
    pub dt: Option<String>,
    /// Final time.
    #[arg(long)]
    pub tfinal: Option<f64>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    pub threads: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the effective configuration as JSON and continue.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
    /// Quadrature oracle tolerance.
    #[arg(long)]
    pub oracle_tol: Option<f64>,
    /// ADI sweep order.
    #[arg(long, value_parser = parse_sweep_order)]
    pub sweep_order: Option<SweepOrder>,
    /// Dump the final solution field as CSV.
    #[arg(long)]
    pub field_out: Option<PathBuf>,
    /// Run convergence-study entries in parallel.
    #[arg(long)]
    pub parallel_entries: bool,
}

fn parse_sweep_order(s: &str) -> Result<SweepOrder, String> {
    match s {
        "x-then-y" | "xy" => Ok(SweepOrder::XThenY),
        "y-then-x" | "yx" => Ok(SweepOrder::YThenX),
        _ => Err(format!("unknown sweep order '{s}' (x-then-y or y-then-x)")),
    }
}

impl Options {
    pub fn to_config(&self, command: CommandName) -> RunConfig {
        RunConfig {
            command: Some(command),
            problem: self.problem.clone(),
            alpha: self.alpha.clone().map(OneOrMany::Many),
            beta: self.beta.clone().map(OneOrMany::Many),
            n: self.n.clone().map(OneOrMany::Many),
            h: self.h.as_ref().map(|v| v.iter().map(|s| NumberOrWord::parse(s)).collect()),
            dt: self.dt.as_deref().map(NumberOrWord::parse),
            t_final: self.tfinal,
            out: self.out.clone(),
            format: self.format,
            oracle_tol: self.oracle_tol,
            threads: self.threads.as_deref().map(NumberOrWord::parse),
            sweep_order: self.sweep_order,
            field_out: self.field_out.clone(),
            parallel_entries: self.parallel_entries.then_some(true),
        }
    }
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: CommandName,
    pub problem: Option<String>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Cells per direction; empty means "command default".
    pub sizes: Vec<usize>,
    pub dt: DtRule,
    pub t_final: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub oracle_tol: f64,
    /// `None` for the default pool.
    pub threads: Option<usize>,
    pub sweep_order: SweepOrder,
    pub field_out: Option<PathBuf>,
    pub parallel_entries: bool,
}

fn check_orders(name: &str, values: &[f64]) -> Result<(), CliError> {
    for &v in values {
        FractionalOrder::new(v).map_err(|_| CliError::Config(format!("{name} = {v} must lie in (1, 2)")))?;
    }
    Ok(())
}

fn size_from_h(h: &NumberOrWord) -> Result<usize, CliError> {
    let v = match h {
        NumberOrWord::Number(v) => *v,
        NumberOrWord::Word(w) => parse_number(w).ok_or_else(|| CliError::Config(format!("cannot parse h = '{w}'")))?,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Config(format!("h = {v} must be positive")));
    }
    let n = (1.0 / v).round();
    if (n * v - 1.0).abs() > 1e-9 {
        return Err(CliError::Config(format!("1/h must be an integer, got h = {v}")));
    }
    Ok(n as usize)
}

impl Settings {
    pub fn resolve(cfg: &RunConfig) -> Result<Self, CliError> {
        let command = cfg
            .command
            .ok_or_else(|| CliError::Config("no command given".into()))?;
        let alphas = cfg.alpha.as_ref().map(|a| a.to_vec()).unwrap_or_default();
        let betas = cfg.beta.as_ref().map(|a| a.to_vec()).unwrap_or_default();
        check_orders("alpha", &alphas)?;
        check_orders("beta", &betas)?;

        let sizes = match (&cfg.n, &cfg.h) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either n or h, not both".into())),
            (Some(n), None) => n.to_vec(),
            (None, Some(h)) => h.iter().map(size_from_h).collect::<Result<_, _>>()?,
            (None, None) => Vec::new(),
        };
        if let Some(&n) = sizes.iter().find(|&&n| n < 4) {
            return Err(CliError::Config(format!("grid sizes must be at least 4, got {n}")));
        }

        let dt = match &cfg.dt {
            None => DtRule::MatchH,
            Some(NumberOrWord::Word(w)) if w == "match" || w == "match-h" => DtRule::MatchH,
            Some(NumberOrWord::Number(v)) if *v > 0.0 && v.is_finite() => DtRule::Fixed(*v),
            Some(other) => return Err(CliError::Config(format!("dt must be positive or 'match', got {other:?}"))),
        };
        if let Some(t) = cfg.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("t_final must be positive, got {t}")));
            }
        }
        let oracle_tol = cfg.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL);
        if !(oracle_tol > 0.0 && oracle_tol.is_finite()) {
            return Err(CliError::Config(format!("oracle tolerance must be positive, got {oracle_tol}")));
        }
        let threads = match &cfg.threads {
            None => None,
            Some(NumberOrWord::Word(w)) if w == "auto" => None,
            Some(NumberOrWord::Number(v)) if *v >= 1.0 && v.fract() == 0.0 => Some(*v as usize),
            Some(other) => return Err(CliError::Config(format!("threads must be a positive integer or 'auto', got {other:?}"))),
        };
        Ok(Settings {
            command,
            problem: cfg.problem.clone(),
            alphas,
            betas,
            sizes,
            dt,
            t_final: cfg.t_final,
            out: cfg.out.clone(),
            format: cfg.format,
            oracle_tol,
            threads,
            sweep_order: cfg.sweep_order.unwrap_or_default(),
            field_out: cfg.field_out.clone(),
            parallel_entries: cfg.parallel_entries.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            command: Some(CommandName::Converge),
            ..Default::default()
        }
    }

    #[test]
    fn ratios_and_decimals_parse() {
        assert_eq!(parse_number("1/50"), Some(0.02));
        assert_eq!(parse_number(" 0.25 "), Some(0.25));
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_number("abc"), None);
    }

    #[test]
    fn spacings_become_cell_counts() {
        let mut c = base();
        c.h = Some(vec![NumberOrWord::Word("1/50".into()), NumberOrWord::Number(0.01)]);
        assert_eq!(Settings::resolve(&c).unwrap().sizes, vec![50, 100]);
        c.h = Some(vec![NumberOrWord::Number(0.3)]);
        assert!(Settings::resolve(&c).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"problem": "cd1d", "alpha": 1.5, "dt": "match", "threads": 2}"#).unwrap();
        let flags = RunConfig {
            alpha: Some(OneOrMany::Many(vec![1.1, 1.9])),
            ..base()
        };
        let merged = flags.over(file);
        assert_eq!(merged.problem.as_deref(), Some("cd1d"));
        assert_eq!(merged.alpha.unwrap().to_vec(), vec![1.1, 1.9]);
        assert_eq!(merged.threads, Some(NumberOrWord::Number(2.0)));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for json in [
            r#"{"alpha": 2.5}"#,
            r#"{"n": 3}"#,
            r#"{"t_final": -1}"#,
            r#"{"dt": "sometimes"}"#,
            r#"{"threads": 0}"#,
            r#"{"oracle_tol": 0}"#,
        ] {
            let cfg: RunConfig = serde_json::from_str(json).unwrap();
            let r = Settings::resolve(&cfg.over(base()));
            assert!(matches!(r, Err(CliError::Config(_))), "{json}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah": 1.5}"#).is_err());
    }

    #[test]
    fn config_round_trips() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"command": "solve2d", "problem": "cd2d-twosided", "alpha": [1.1], "beta": 1.1,
                "h": ["1/25"], "dt": 0.04, "threads": "auto", "sweep_order": "y-then-x"}"#,
        )
        .unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        let s = Settings::resolve(&back).unwrap();
        assert_eq!(s.sizes, vec![25]);
        assert_eq!(s.dt, DtRule::Fixed(0.04));
        assert_eq!(s.sweep_order, SweepOrder::YThenX);
        assert_eq!(s.threads, None);
    }
}
