//! Plot-ready series from results files. No rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::output::num;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `log n, log W` from CLT-style results.
    RateLoglog,
    /// Per-order terms over `t`, plus their running (stacked) sums.
    BoundDecomposition,
    /// `step, |x|^2, x_0, ...` from a chain trace.
    ChainTrace,
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate_loglog" => Ok(Self::RateLoglog),
            "bound_decomposition" => Ok(Self::BoundDecomposition),
            "chain_trace" => Ok(Self::ChainTrace),
            other => Err(CliError::Validation {
                field: "--kind".into(),
                reason: format!("unknown plot kind `{other}` (expected rate_loglog, bound_decomposition or chain_trace)"),
            }),
        }
    }
}

impl PlotKind {
    fn file_name(self) -> &'static str {
        match self {
            Self::RateLoglog => "plot_rate_loglog.csv",
            Self::BoundDecomposition => "plot_bound_decomposition.csv",
            Self::ChainTrace => "plot_chain_trace.csv",
        }
    }
}

struct Frame {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Frame {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Plot(format!("missing column `{name}`")))
    }

    fn float(&self, row: usize, col: usize) -> Result<f64> {
        let cell = &self.rows[row][col];
        cell.parse()
            .map_err(|_| CliError::Plot(format!("row {}: `{cell}` in column `{}` is not a number", row + 1, self.header[col])))
    }
}

fn write(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn rate_loglog(f: &Frame) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let n = f.column("n")?;
    let dist = f.column("distance").or_else(|_| f.column("w2"))?;
    let mut rows = Vec::new();
    for i in 0..f.rows.len() {
        let (x, y) = (f.float(i, n)?, f.float(i, dist)?);
        if x > 0.0 && y > 0.0 {
            rows.push(vec![num(x.ln()), num(y.ln())]);
        }
    }
    Ok((vec!["log_n".into(), "log_w".into()], rows))
}

fn bound_decomposition(f: &Frame) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let (tc, kc, vc) = (f.column("t")?, f.column("k")?, f.column("term")?);
    // keyed by row order of t so the grid order is preserved
    let mut grid: Vec<f64> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut k_max = 0;
    for i in 0..f.rows.len() {
        let t = f.float(i, tc)?;
        let k: usize = f.rows[i][kc]
            .parse()
            .map_err(|_| CliError::Plot(format!("row {}: order `{}` is not an integer", i + 1, f.rows[i][kc])))?;
        if grid.last() != Some(&t) {
            grid.push(t);
        }
        k_max = k_max.max(k);
        cells.insert((grid.len() - 1, k), f.float(i, vc)?);
    }
    let mut header = vec!["t".to_string()];
    header.extend((1..=k_max).map(|k| format!("term_{k}")));
    header.extend((1..=k_max).map(|k| format!("stacked_{k}")));
    let rows = grid
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let terms: Vec<f64> = (1..=k_max).map(|k| cells.get(&(j, k)).copied().unwrap_or(0.0)).collect();
            let mut row = vec![num(*t)];
            row.extend(terms.iter().map(|v| num(*v)));
            let mut acc = 0.0;
            row.extend(terms.iter().map(|v| {
                acc += v;
                num(acc)
            }));
            row
        })
        .collect();
    Ok((header, rows))
}

fn chain_trace(f: &Frame) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let sc = f.column("step")?;
    let xs: Vec<usize> = (0..f.header.len()).filter(|&j| f.header[j].starts_with("x_")).collect();
    if xs.is_empty() {
        return Err(CliError::Plot("missing columns `x_0`, ...".into()));
    }
    let mut header = vec!["step".to_string(), "norm_sq".to_string()];
    header.extend(xs.iter().map(|&j| f.header[j].clone()));
    let mut rows = Vec::with_capacity(f.rows.len());
    for i in 0..f.rows.len() {
        let x: Vec<f64> = xs.iter().map(|&j| f.float(i, j)).collect::<Result<_>>()?;
        let mut row = vec![f.rows[i][sc].clone(), num(x.iter().map(|v| v * v).sum())];
        row.extend(x.iter().map(|v| num(*v)));
        rows.push(row);
    }
    Ok((header, rows))
}

/// Write `plot_<kind>.csv` into `out_dir` and return its path.
pub fn emit_plot_data(input: &Path, kind: &str, out_dir: &Path) -> Result<PathBuf> {
    let kind: PlotKind = kind.parse()?;
    let frame = Frame::read(input)?;
    let (header, rows) = match kind {
        PlotKind::RateLoglog => rate_loglog(&frame)?,
        PlotKind::BoundDecomposition => bound_decomposition(&frame)?,
        PlotKind::ChainTrace => chain_trace(&frame)?,
    };
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(kind.file_name());
    write(&path, &header, &rows)?;
    Ok(path)
}
