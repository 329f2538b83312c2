use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{Format, SuiteConfig};
use crate::SuiteError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One row of a report: an assertion when `bound` is set, a recorded
/// diagnostic otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub check: String,
    pub parameter: String,
    pub observed: f64,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// `observed ≤ bound`, with the margin `bound - observed`.
    pub fn upper(
        suite: &str,
        check: &str,
        parameter: impl Into<String>,
        observed: f64,
        bound: f64,
        slack: f64,
    ) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.to_string(),
            parameter: parameter.into(),
            observed,
            bound: Some(bound),
            margin: Some(bound - observed),
            pass: observed <= bound + slack * bound.abs(),
        }
    }

    /// `observed ≥ bound`, with the margin `observed - bound`.
    pub fn lower(
        suite: &str,
        check: &str,
        parameter: impl Into<String>,
        observed: f64,
        bound: f64,
    ) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.to_string(),
            parameter: parameter.into(),
            observed,
            bound: Some(bound),
            margin: Some(observed - bound),
            pass: observed >= bound,
        }
    }

    /// `lo ≤ observed ≤ hi`; the margin is the distance to the nearer end.
    pub fn within(
        suite: &str,
        check: &str,
        parameter: impl Into<String>,
        observed: f64,
        lo: f64,
        hi: f64,
    ) -> Self {
        let margin = (observed - lo).min(hi - observed);
        Self {
            suite: suite.to_string(),
            check: check.to_string(),
            parameter: parameter.into(),
            observed,
            bound: Some(if observed - lo < hi - observed {
                lo
            } else {
                hi
            }),
            margin: Some(margin),
            pass: margin >= 0.0,
        }
    }

    pub fn diagnostic(
        suite: &str,
        check: &str,
        parameter: impl Into<String>,
        observed: f64,
    ) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.to_string(),
            parameter: parameter.into(),
            observed,
            bound: None,
            margin: None,
            pass: true,
        }
    }

    pub fn is_assertion(&self) -> bool {
        self.bound.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub config: SuiteConfig,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(config: SuiteConfig, checks: Vec<Check>) -> Self {
        Self {
            version: VERSION.to_string(),
            pass: checks.iter().all(|c| c.pass),
            config,
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, SuiteError> {
        match format {
            Format::Json => {
                let mut out =
                    serde_json::to_vec_pretty(self).map_err(|e| SuiteError::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut writer = csv::Writer::from_writer(Vec::new());
                for check in &self.checks {
                    writer
                        .serialize(check)
                        .map_err(|e| SuiteError::Io(e.to_string()))?;
                }
                writer
                    .into_inner()
                    .map_err(|e| SuiteError::Io(e.to_string()))
            }
        }
    }

    /// Writes through a temporary file in the target directory and renames
    /// it into place.
    pub fn write_atomic(&self, path: &Path, format: Format) -> Result<(), SuiteError> {
        let bytes = self.render(format)?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| SuiteError::Io(format!("{}: {e}", dir.display())))?;
        tmp.write_all(&bytes)
            .map_err(|e| SuiteError::Io(e.to_string()))?;
        tmp.as_file()
            .sync_all()
            .map_err(|e| SuiteError::Io(e.to_string()))?;
        tmp.persist(path)
            .map_err(|e| SuiteError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}
