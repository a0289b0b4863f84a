use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "algorithm,seed,round,bits_cumulative,grad_evals_cumulative,grad_norm_sq,train_loss,test_accuracy,sigma_p,epsilon,delta";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub algorithm: String,
    pub seed: u64,
    pub round: u64,
    pub bits_cumulative: u64,
    pub grad_evals_cumulative: u64,
    pub grad_norm_sq: f64,
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
    pub sigma_p: f64,
    pub epsilon: f64,
    pub delta: f64,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.seed,
            r.round,
            r.bits_cumulative,
            r.grad_evals_cumulative,
            float(r.grad_norm_sq),
            float(r.train_loss),
            r.test_accuracy.map(float).unwrap_or_default(),
            float(r.sigma_p),
            float(r.epsilon),
            float(r.delta),
        )?;
    }
    Ok(())
}

pub fn emit_metrics(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::parse(1, "missing or unexpected metrics header")),
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        let line_no = no + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::parse(line_no, format!("expected 11 fields, found {}", f.len())));
        }
        fn p<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::parse(line, format!("cannot parse '{s}'")))
        }
        rows.push(MetricsRow {
            algorithm: f[0].to_string(),
            seed: p(f[1], line_no)?,
            round: p(f[2], line_no)?,
            bits_cumulative: p(f[3], line_no)?,
            grad_evals_cumulative: p(f[4], line_no)?,
            grad_norm_sq: p(f[5], line_no)?,
            train_loss: p(f[6], line_no)?,
            test_accuracy: if f[7].is_empty() { None } else { Some(p(f[7], line_no)?) },
            sigma_p: p(f[8], line_no)?,
            epsilon: p(f[9], line_no)?,
            delta: p(f[10], line_no)?,
        });
    }
    Ok(rows)
}
