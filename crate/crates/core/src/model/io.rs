// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Eigensystem persistence.
//!
//! Text table (`eigensystem.tsv`): one header comment line, one column-name
//! line, then one whitespace-separated row per state:
//!
//! ```text
//! # isoyield eigensystem v1 manifest=<config hash>
//! index energy_ev transness parity
//! 0 1.2335e-1 3.1e-3 1
//! ```
//!
//! Binary blob (`coefficients.bin`), little-endian throughout:
//!
//! | field | type |
//! |-------|------|
//! | magic `ISOYEIG\0` | 8 bytes |
//! | format version (1) | u32 |
//! | manifest hash length L, then L ASCII bytes | u8, bytes |
//! | block count B | u32 |
//! | per block: rotor kind (0 plane wave, 1 cos, 2 sin), n_max, n_ho | u8, u32, u32 |
//! | state count N | u64 |
//! | per state: energy, block index | f64, u32 |
//! | coefficients, column-major, primitive_dim × N | f64 |

use std::io::{BufRead, Read, Write};

use faer::Mat;

use super::basis::{ProductBasis, RotorBasis};
use super::eigen::Eigensystem;
use crate::{Error, Result};

pub const EIGEN_TABLE_VERSION: u32 = 1;
pub const COEFF_BLOB_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"ISOYEIG\0";

/// One row of the text table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRow {
    pub index: usize,
    pub energy: f64,
    pub transness: f64,
    pub parity: i8,
}

pub fn write_table<W: Write>(es: &Eigensystem, manifest_hash: &str, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# isoyield eigensystem v{EIGEN_TABLE_VERSION} manifest={manifest_hash}"
    )?;
    writeln!(w, "index energy_ev transness parity")?;
    for k in 0..es.len() {
        writeln!(
            w,
            "{k} {:.15e} {:.15e} {}",
            es.energies()[k],
            es.transness()[k],
            es.parity()[k]
        )?;
    }
    Ok(())
}

/// Rows and the manifest hash from the header.
pub fn read_table<R: BufRead>(r: R) -> Result<(Vec<EigenRow>, String)> {
    let bad = |m: String| Error::Format {
        what: "eigensystem table",
        message: m,
    };
    let mut lines = r.lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    let prefix = format!("# isoyield eigensystem v{EIGEN_TABLE_VERSION} manifest=");
    let Some(hash) = head.trim().strip_prefix(&prefix) else {
        return Err(bad(format!("unsupported header {head:?}")));
    };
    let hash = hash.to_string();
    lines.next().transpose()?;
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", n + 3)));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", n + 3)));
        rows.push(EigenRow {
            index: f[0].parse().map_err(|e| bad(format!("line {}: {e}", n + 3)))?,
            energy: p(f[1])?,
            transness: p(f[2])?,
            parity: f[3].parse().map_err(|e| bad(format!("line {}: {e}", n + 3)))?,
        });
    }
    Ok((rows, hash))
}

pub fn write_blob<W: Write>(es: &Eigensystem, manifest_hash: &str, mut w: W) -> Result<()> {
    let hash = manifest_hash.as_bytes();
    if hash.len() > u8::MAX as usize || !manifest_hash.is_ascii() {
        return Err(Error::invalid("manifest hash", "must be ASCII and at most 255 bytes"));
    }
    w.write_all(MAGIC)?;
    w.write_all(&COEFF_BLOB_VERSION.to_le_bytes())?;
    w.write_all(&[hash.len() as u8])?;
    w.write_all(hash)?;
    w.write_all(&(es.blocks().len() as u32).to_le_bytes())?;
    for b in es.blocks() {
        w.write_all(&[b.rotor.tag()])?;
        w.write_all(&(b.rotor.n_max() as u32).to_le_bytes())?;
        w.write_all(&(b.n_ho as u32).to_le_bytes())?;
    }
    w.write_all(&(es.len() as u64).to_le_bytes())?;
    for k in 0..es.len() {
        w.write_all(&es.energies()[k].to_le_bytes())?;
        w.write_all(&(es.block_of()[k] as u32).to_le_bytes())?;
    }
    let c = es.coefficients();
    for k in 0..c.ncols() {
        for i in 0..c.nrows() {
            w.write_all(&c[(i, k)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Eigensystem and the manifest hash it was written under.
pub fn read_blob<R: Read>(mut r: R) -> Result<(Eigensystem, String)> {
    let bad = |m: &str| Error::Format {
        what: "coefficient blob",
        message: m.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != COEFF_BLOB_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut len = [0u8; 1];
    r.read_exact(&mut len)?;
    let mut hash = vec![0u8; len[0] as usize];
    r.read_exact(&mut hash)?;
    let hash = String::from_utf8(hash).map_err(|_| bad("manifest hash is not ASCII"))?;
    let n_blocks = read_u32(&mut r)? as usize;
    if n_blocks == 0 || n_blocks > 2 {
        return Err(bad("block count must be 1 or 2"));
    }
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let n_max = read_u32(&mut r)? as usize;
        let n_ho = read_u32(&mut r)? as usize;
        let rotor = RotorBasis::from_tag(tag[0], n_max).ok_or_else(|| bad("unknown rotor kind"))?;
        blocks.push(ProductBasis::new(rotor, n_ho));
    }
    let full: usize = blocks.iter().map(ProductBasis::dim).sum();
    let n = read_u64(&mut r)? as usize;
    let mut energies = Vec::with_capacity(n.min(1 << 20));
    let mut block_of = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        energies.push(read_f64(&mut r)?);
        let b = read_u32(&mut r)? as usize;
        if b >= n_blocks {
            return Err(bad("block index out of range"));
        }
        block_of.push(b);
    }
    let mut coefficients = Mat::<f64>::zeros(full, n);
    let mut buf = vec![0u8; full * 8];
    for k in 0..n {
        r.read_exact(&mut buf)?;
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            coefficients[(i, k)] = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    Ok((Eigensystem::from_parts(blocks, energies, coefficients, block_of)?, hash))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basis::BasisSpec;
    use crate::model::params::ModelParameters;

    fn small() -> Eigensystem {
        let spec = BasisSpec {
            n_rotor_max: 10,
            n_ho: 6,
            energy_cutoff: 2.5,
            ..BasisSpec::default()
        };
        Eigensystem::solve(&ModelParameters::default(), &spec).unwrap()
    }

    #[test]
    fn table_round_trip() {
        let es = small();
        let mut buf = Vec::new();
        write_table(&es, "abc123", &mut buf).unwrap();
        let (rows, hash) = read_table(buf.as_slice()).unwrap();
        assert_eq!(hash, "abc123");
        assert_eq!(rows.len(), es.len());
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.index, k);
            assert!((row.energy - es.energies()[k]).abs() <= 1e-14 * row.energy.abs().max(1.0));
            assert_eq!(row.parity, es.parity()[k]);
        }
    }

    #[test]
    fn blob_round_trip_is_exact() {
        let es = small();
        let mut buf = Vec::new();
        write_blob(&es, "abc123", &mut buf).unwrap();
        let (back, hash) = read_blob(buf.as_slice()).unwrap();
        assert_eq!(hash, "abc123");
        assert_eq!(back.energies(), es.energies());
        assert_eq!(back.parity(), es.parity());
        assert_eq!(back.transness(), es.transness());
        assert_eq!(back.coefficients(), es.coefficients());
    }

    #[test]
    fn blob_rejects_wrong_version() {
        let es = small();
        let mut buf = Vec::new();
        write_blob(&es, "h", &mut buf).unwrap();
        buf[8] = 9;
        assert!(matches!(read_blob(buf.as_slice()), Err(Error::Format { .. })));
        assert!(read_table(&b"# something else\n"[..]).is_err());
    }
}
