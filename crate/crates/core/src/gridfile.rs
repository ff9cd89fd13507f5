//! Binary phase-space grid container.
//!
//! Layout: 8-byte magic, little-endian `u32 nq`, `u32 np`, then `nq·np`
//! little-endian cells, row-major with `q` outer and `p` inner. Husimi
//! densities use magic `HUSIGRID` with `f64` cells; escape-time grids use
//! `ESCZGRID` with `i32` cells.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const HUSIMI_MAGIC: &[u8; 8] = b"HUSIGRID";
pub const ESCAPE_MAGIC: &[u8; 8] = b"ESCZGRID";

fn write_header<W: Write>(out: &mut W, magic: &[u8; 8], nq: usize, np: usize) -> Result<()> {
    let nq = u32::try_from(nq).map_err(|_| Error::Format(format!("nq={nq} exceeds u32")))?;
    let np = u32::try_from(np).map_err(|_| Error::Format(format!("np={np} exceeds u32")))?;
    out.write_all(magic)?;
    out.write_all(&nq.to_le_bytes())?;
    out.write_all(&np.to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(input: &mut R, magic: &[u8; 8]) -> Result<(usize, usize)> {
    let mut found = [0u8; 8];
    input.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&found)
        )));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let nq = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let np = u32::from_le_bytes(word) as usize;
    Ok((nq, np))
}

fn ensure_eof<R: Read>(input: &mut R) -> Result<()> {
    let mut extra = [0u8; 1];
    match input.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after grid payload".into())),
    }
}

pub fn write_f64_grid<W: Write>(mut out: W, magic: &[u8; 8], nq: usize, np: usize, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), nq * np);
    write_header(&mut out, magic, nq, np)?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_f64_grid<R: Read>(mut input: R, magic: &[u8; 8]) -> Result<(usize, usize, Vec<f64>)> {
    let (nq, np) = read_header(&mut input, magic)?;
    let mut buf = vec![0u8; nq * np * 8];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("payload shorter than {nq}x{np} cells")))?;
    ensure_eof(&mut input)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((nq, np, values))
}

pub fn write_i32_grid<W: Write>(mut out: W, magic: &[u8; 8], nq: usize, np: usize, values: &[i32]) -> Result<()> {
    assert_eq!(values.len(), nq * np);
    write_header(&mut out, magic, nq, np)?;
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_i32_grid<R: Read>(mut input: R, magic: &[u8; 8]) -> Result<(usize, usize, Vec<i32>)> {
    let (nq, np) = read_header(&mut input, magic)?;
    let mut buf = vec![0u8; nq * np * 4];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("payload shorter than {nq}x{np} cells")))?;
    ensure_eof(&mut input)?;
    let values = buf
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Ok((nq, np, values))
}
