//! Realization export: one row per complex entry,
//! `link_type,device,row,col,re,im`.
//!
//! `link_type` is `direct` (row = BS antenna), `ris_device` (row = RIS
//! element) or `bs_ris` (row = element, col = antenna; `device` empty).

use std::io::{self, BufRead, Write};

use num_complex::Complex64;

use super::ChannelRealization;
use crate::csvio::{format_f64, parse_f64, write_row};
use crate::linalg::{CMatrix, CVector};
use crate::{Error, Result};

pub const HEADER: [&str; 6] = ["link_type", "device", "row", "col", "re", "im"];

pub fn write_realization_csv<W: Write>(r: &ChannelRealization, out: &mut W) -> io::Result<()> {
    write_row(out, &HEADER)?;
    let entry = |out: &mut W, kind: &str, dev: String, row: usize, col: usize, z: Complex64| {
        write_row(
            out,
            &[kind.to_owned(), dev, row.to_string(), col.to_string(), format_f64(z.re), format_f64(z.im)],
        )
    };
    for (l, a) in r.direct.iter().enumerate() {
        for (i, z) in a.iter().enumerate() {
            entry(out, "direct", l.to_string(), i, 0, *z)?;
        }
    }
    for (l, b) in r.ris_device.iter().enumerate() {
        for (i, z) in b.iter().enumerate() {
            entry(out, "ris_device", l.to_string(), i, 0, *z)?;
        }
    }
    for i in 0..r.bs_ris.nrows() {
        for j in 0..r.bs_ris.ncols() {
            entry(out, "bs_ris", String::new(), i, j, r.bs_ris[(i, j)])?;
        }
    }
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("realization csv line {line}: {msg}"))
}

/// Reads a realization written by [`write_realization_csv`]. Dimensions are
/// inferred from the largest indices.
pub fn read_realization_csv<R: BufRead>(
    input: R,
    noise_power_dbm: f64,
    tx_snr_db: f64,
) -> Result<ChannelRealization> {
    let mut direct: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut ris: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut bs_ris: Vec<(usize, usize, Complex64)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| bad(lineno, e))?;
        if idx == 0 {
            if line.trim_end() != HEADER.join(",") {
                return Err(bad(lineno, "unexpected header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(lineno, format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(lineno, e));
        let re = parse_f64(f[4]).ok_or_else(|| bad(lineno, "bad real part"))?;
        let im = parse_f64(f[5]).ok_or_else(|| bad(lineno, "bad imaginary part"))?;
        let z = Complex64::new(re, im);
        let (row, col) = (num(f[2])?, num(f[3])?);
        match f[0] {
            "direct" => direct.push((num(f[1])?, row, z)),
            "ris_device" => ris.push((num(f[1])?, row, z)),
            "bs_ris" => bs_ris.push((row, col, z)),
            other => return Err(bad(lineno, format!("unknown link type {other:?}"))),
        }
    }
    let rows = bs_ris.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = bs_ris.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let devices = direct.iter().chain(&ris).map(|e| e.0 + 1).max().unwrap_or(0);
    let mut c = CMatrix::zeros(rows, cols);
    for (i, j, z) in bs_ris {
        c[(i, j)] = z;
    }
    let mut a = vec![CVector::zeros(cols); devices];
    for (l, i, z) in direct {
        *a.get_mut(l).and_then(|v| v.get_mut(i)).ok_or_else(|| bad(0, "direct index out of range"))? = z;
    }
    let mut b = vec![CVector::zeros(rows); devices];
    for (l, i, z) in ris {
        *b.get_mut(l).and_then(|v| v.get_mut(i)).ok_or_else(|| bad(0, "RIS index out of range"))? = z;
    }
    ChannelRealization::new(a, b, c, noise_power_dbm, tx_snr_db)
}
