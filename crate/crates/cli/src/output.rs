//! Plain-text renderers and output routing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// `6.4914e-003`: five significant digits, three-digit signed exponent.
pub fn sci5(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:03}", exp.abs())
}

pub fn order4(v: Option<f64>) -> String {
    v.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into())
}

pub fn h_label(n: usize) -> String {
    format!("1/{n}")
}

/// A rectangular table of already-formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.headers.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", self.headers.join(" | "));
        s.push_str(&format!("|{}\n", "---|".repeat(self.headers.len())));
        for r in &self.rows {
            s.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        s
    }
}

/// One output document; `tag` distinguishes documents written side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub tag: Option<String>,
    pub content: String,
}

impl Artifact {
    pub fn single(content: String) -> Self {
        Self { tag: None, content }
    }
}

fn tagged_path(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    out.with_file_name(name)
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Writes to `out` (one file per artifact when there are several) or to
/// stdout, with `# tag` separators.
pub fn emit(artifacts: &[Artifact], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) if artifacts.len() == 1 => write_file(path, &artifacts[0].content),
        Some(path) => {
            for a in artifacts {
                let p = match &a.tag {
                    Some(tag) => tagged_path(path, tag),
                    None => path.to_path_buf(),
                };
                write_file(&p, &a.content)?;
            }
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let many = artifacts.len() > 1;
            for (k, a) in artifacts.iter().enumerate() {
                if many {
                    if k > 0 {
                        writeln!(lock).ok();
                    }
                    if let Some(tag) = &a.tag {
                        writeln!(lock, "# {tag}").ok();
                    }
                }
                write!(lock, "{}", a.content).ok();
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_digit_exponents() {
        assert_eq!(sci5(6.49141e-3), "6.4914e-003");
        assert_eq!(sci5(2.4122e-2), "2.4122e-002");
        assert_eq!(sci5(1.5), "1.5000e+000");
        assert_eq!(sci5(0.0), "0.0000e+000");
        assert_eq!(sci5(-4.6728e-6), "-4.6728e-006");
    }

    #[test]
    fn tables_render() {
        let mut t = Table::new(["h", "error"]);
        t.push(vec!["1/50".into(), "1e-3".into()]);
        assert_eq!(t.to_csv(), "h,error\n1/50,1e-3\n");
        assert_eq!(t.to_markdown(), "| h | error |\n|---|---|\n| 1/50 | 1e-3 |\n");
    }

    #[test]
    fn tags_go_before_extension() {
        assert_eq!(tagged_path(Path::new("/tmp/r.csv"), "a1.5"), PathBuf::from("/tmp/r_a1.5.csv"));
        assert_eq!(tagged_path(Path::new("out"), "x"), PathBuf::from("out_x"));
    }
}
