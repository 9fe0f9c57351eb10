//! Appendix-style tables, plot data and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::search::{EfficiencyBracket, EtaSearch, Trace};

use super::config::OutputFormat;

/// Marker that starts every comment line.
pub const COMMENT: char = '#';
const WIDTH: usize = 12;

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!(
            "{COMMENT} config_hash={} version={}",
            self.config_hash, self.version
        )
    }
}

/// Named columns of preformatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header line then one line per row, every line newline-terminated.
    pub fn render(&self, format: OutputFormat) -> String {
        let line = |cells: &[String]| match format {
            OutputFormat::AppendixTable => cells
                .iter()
                .map(|c| format!("{c:>WIDTH$}"))
                .collect::<Vec<_>>()
                .join(" "),
            OutputFormat::DelimitedValues => cells.join(","),
        };
        let mut out = line(&self.columns);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn angle(x: f64) -> String {
    format!("{x:.4}")
}

pub(crate) fn bits(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.6e}")
    }
}

fn efficiency(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.4}")
    }
}

/// One row per traced state: the parameter, canonical settings, the
/// efficiency bracket and the strengths at both ends.
///
/// Rows that cannot reach the target at η = 1 show `nan` for η_1 and S_1,
/// η_2 = 1 and the best strength found there as S_2.
pub fn trace_table(trace: &Trace) -> Table {
    let name = trace.family.parameter_name();
    let mut table = Table::new(&[
        name, "A_1", "A_2", "B_1", "B_2", "eta_1", "eta_2", "S_1", "S_2",
    ]);
    for row in &trace.rows {
        let mut cells = vec![angle(row.parameter)];
        cells.extend(row.outcome.settings().polars().map(angle));
        let (eta_1, eta_2, s_1, s_2) = match &row.outcome {
            EtaSearch::Found(b) => (b.eta_1, b.eta_2, b.s_1, b.s_2),
            EtaSearch::Infeasible { best_strength, .. } => {
                (f64::NAN, 1.0, f64::NAN, *best_strength)
            }
        };
        cells.extend([efficiency(eta_1), efficiency(eta_2), bits(s_1), bits(s_2)]);
        table.push(cells);
    }
    table
}

/// Writes the trace in appendix layout: a header line naming the columns,
/// then one whitespace-aligned line per row.
pub fn emit_appendix_table(trace: &Trace, out: &mut dyn Write) -> Result<()> {
    out.write_all(
        trace_table(trace)
            .render(OutputFormat::AppendixTable)
            .as_bytes(),
    )?;
    Ok(())
}

/// Efficiency plotted for a bracket: whichever end has a strength closer to
/// the target. At target 0 only `eta_1` has S > 0.
fn plotted_efficiency(target: f64, b: &EfficiencyBracket) -> f64 {
    if target > 0.0 && (b.s_2 - target).abs() < (b.s_1 - target).abs() {
        b.eta_2
    } else {
        b.eta_1
    }
}

/// Writes `parameter,eta` points of a boundary curve after a comment line
/// with the run metadata. Infeasible rows have no point.
pub fn emit_plot_data(trace: &Trace, provenance: &Provenance, out: &mut dyn Write) -> Result<()> {
    let target = match trace.rows.first() {
        Some(row) => row.target,
        None => f64::NAN,
    };
    if trace.rows.iter().any(|r| r.target != target) {
        return Err(Error::Contract(
            "plot data needs rows with one strength target".into(),
        ));
    }
    let mut text = format!(
        "{COMMENT} target_S={} kind={} family={} version={} config_hash={}\n",
        target,
        trace.kind.name(),
        trace.family.family_name(),
        provenance.version,
        provenance.config_hash
    );
    text.push_str(&format!("{},eta\n", trace.family.parameter_name()));
    for row in &trace.rows {
        if let EtaSearch::Found(b) = &row.outcome {
            text.push_str(&format!(
                "{},{}\n",
                angle(row.parameter),
                efficiency(plotted_efficiency(row.target, b))
            ));
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Replaces `path` with `bytes` through a temporary file in the same
/// directory, so readers see the old or the new file and nothing between.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir)?;
    file.write_all(bytes)?;
    let permissions = match std::fs::metadata(path) {
        Ok(old) => old.permissions(),
        Err(_) => default_permissions(file.as_file())?,
    };
    file.as_file().set_permissions(permissions)?;
    file.as_file().sync_all()?;
    file.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Temporary files start out private; new outputs get rw-r--r--.
#[cfg(unix)]
fn default_permissions(_: &std::fs::File) -> Result<std::fs::Permissions> {
    use std::os::unix::fs::PermissionsExt;
    Ok(std::fs::Permissions::from_mode(0o644))
}

#[cfg(not(unix))]
fn default_permissions(file: &std::fs::File) -> Result<std::fs::Permissions> {
    Ok(file.metadata()?.permissions())
}
