use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::objectives::{Sample, SparseVec};

/// Parses LIBSVM text. Indices are 1-based on disk and 0-based in memory;
/// the label `0` is read as `−1`. Returns the samples and the largest index
/// seen (the feature dimension).
pub fn parse_libsvm(bytes: &[u8]) -> Result<(Vec<Sample>, usize)> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;
    let mut samples = Vec::new();
    let mut d = 0usize;
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label = parse_label(label_tok).ok_or_else(|| Error::parse(line_no, format!("bad label '{label_tok}'")))?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("malformed feature '{tok}'")))?;
            let idx: u32 = i.parse().map_err(|_| Error::parse(line_no, format!("bad index in '{tok}'")))?;
            if idx == 0 {
                return Err(Error::parse(line_no, "feature indices are 1-based"));
            }
            let val: f64 = v.parse().map_err(|_| Error::parse(line_no, format!("bad value in '{tok}'")))?;
            if !val.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value in '{tok}'")));
            }
            if indices.last().is_some_and(|&last| idx - 1 <= last) {
                return Err(Error::parse(line_no, format!("index {idx} is not increasing")));
            }
            indices.push(idx - 1);
            values.push(val);
        }
        d = d.max(indices.last().map_or(0, |&j| j as usize + 1));
        samples.push(Sample::new(SparseVec::new(indices, values), label));
    }
    Ok((samples, d))
}

fn parse_label(tok: &str) -> Option<i32> {
    let v: f64 = tok.parse().ok()?;
    if v == 1.0 {
        Some(1)
    } else if v == -1.0 || v == 0.0 {
        Some(-1)
    } else {
        None
    }
}

/// Inverse of [`parse_libsvm`], with 17 significant digits per value.
pub fn write_libsvm(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(if s.label > 0 { "+1" } else { "-1" });
        for (j, v) in s.features.iter() {
            let _ = write!(out, " {}:{:.16e}", j + 1, v);
        }
        out.push('\n');
    }
    out
}
