//! CSV output of aggregated sweep results.
//!
//! Columns: `sweep_var,value,mode,csi_mode,N,metric,mean,p05,trials,seed`.
//! Floating-point fields are written with 17 significant digits so that
//! parsing them back yields the same `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: &str = "sweep_var,value,mode,csi_mode,N,metric,mean,p05,trials,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_var: String,
    pub value: f64,
    pub mode: String,
    pub csi_mode: String,
    pub dimension: usize,
    pub metric: String,
    pub mean: f64,
    pub p05: f64,
    pub trials: usize,
    pub seed: u64,
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.sweep_var,
            format_f64(self.value),
            self.mode,
            self.csi_mode,
            self.dimension,
            self.metric,
            format_f64(self.mean),
            format_f64(self.p05),
            self.trials,
            self.seed
        )
    }

    pub fn parse_line(line: &str) -> Result<CsvRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::invalid(format!("expected 10 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::invalid(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| Error::invalid(format!("{s:?}: {e}")));
        Ok(CsvRow {
            sweep_var: f[0].to_string(),
            value: num(f[1])?,
            mode: f[2].to_string(),
            csi_mode: f[3].to_string(),
            dimension: int(f[4])? as usize,
            metric: f[5].to_string(),
            mean: num(f[6])?,
            p05: num(f[7])?,
            trials: int(f[8])? as usize,
            seed: int(f[9])?,
        })
    }
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(render_csv(rows).as_bytes())?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        _ => return Err(Error::invalid("missing CSV header")),
    }
    lines.map(CsvRow::parse_line).collect()
}
