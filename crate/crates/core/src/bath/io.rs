// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sparse-triplet text dumps of eigenbasis matrices.
//!
//! ```text
//! # isoyield triplets v1 <name> <rows> <cols>
//! i j value
//! 3 0 1.234e-3
//! ```
//!
//! Entries with |value| ≤ `threshold` are omitted; the diagonal is always
//! written so that the matrix dimension and column sums can be recovered.

use std::io::{BufRead, Write};

use faer::{Mat, MatRef};

use crate::{Error, Result};

pub const TRIPLET_VERSION: u32 = 1;

pub fn write_triplets<W: Write>(name: &str, m: MatRef<'_, f64>, threshold: f64, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# isoyield triplets v{TRIPLET_VERSION} {name} {} {}",
        m.nrows(),
        m.ncols()
    )?;
    writeln!(w, "i j value")?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if i == j || v.abs() > threshold {
                writeln!(w, "{i} {j} {v:.17e}")?;
            }
        }
    }
    Ok(())
}

/// Read a triplet file back into a dense matrix, returning its name.
pub fn read_triplets<R: BufRead>(r: R) -> Result<(String, Mat<f64>)> {
    let bad = |m: String| Error::Format {
        what: "triplet file",
        message: m,
    };
    let mut lines = r.lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() != 7 || f[0] != "#" || f[1] != "isoyield" || f[2] != "triplets" {
        return Err(bad(format!("bad header {head:?}")));
    }
    if f[3] != format!("v{TRIPLET_VERSION}") {
        return Err(bad(format!("unsupported version {}", f[3])));
    }
    let name = f[4].to_string();
    let rows: usize = f[5].parse().map_err(|_| bad("bad row count".into()))?;
    let cols: usize = f[6].parse().map_err(|_| bad("bad column count".into()))?;
    lines.next().transpose()?;
    let mut m = Mat::<f64>::zeros(rows, cols);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(bad(format!("bad entry {line:?}")));
        }
        let i: usize = t[0].parse().map_err(|_| bad(format!("bad row in {line:?}")))?;
        let j: usize = t[1].parse().map_err(|_| bad(format!("bad column in {line:?}")))?;
        let v: f64 = t[2].parse().map_err(|_| bad(format!("bad value in {line:?}")))?;
        if i >= rows || j >= cols {
            return Err(bad(format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        m[(i, j)] = v;
    }
    Ok((name, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_entries_above_threshold() {
        let m = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                -(i as f64)
            } else if i < j {
                1e-3 * (i + j) as f64
            } else {
                0.0
            }
        });
        let mut buf = Vec::new();
        write_triplets("K", m.as_ref(), 0.0, &mut buf).unwrap();
        let (name, back) = read_triplets(buf.as_slice()).unwrap();
        assert_eq!(name, "K");
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_out_of_range_entries() {
        let text = "# isoyield triplets v1 K 2 2\ni j value\n5 0 1.0\n";
        assert!(read_triplets(text.as_bytes()).is_err());
        assert!(read_triplets(&b"# other\n"[..]).is_err());
    }
}
