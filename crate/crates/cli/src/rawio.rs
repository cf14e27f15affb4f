//! `CPLX1` raw sub-band dumps: the magic, `u32` width and height, then
//! row-major `f64` real/imaginary pairs, all little-endian.

use std::fs;
use std::path::Path;

use phasemotion::num_complex::Complex64;
use phasemotion::SubBand;

pub const CPLX_MAGIC: &[u8; 5] = b"CPLX1";

pub fn subband_bytes(band: &SubBand) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + band.data.len() * 16);
    out.extend_from_slice(CPLX_MAGIC);
    out.extend_from_slice(&(band.width as u32).to_le_bytes());
    out.extend_from_slice(&(band.height as u32).to_le_bytes());
    for c in &band.data {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn read_subband(path: &Path) -> Result<SubBand, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let bad = || format!("{}: not a CPLX1 file", path.display());
    let body = bytes.strip_prefix(CPLX_MAGIC).ok_or_else(bad)?;
    if body.len() < 8 {
        return Err(bad());
    }
    let width = u32::from_le_bytes(body[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(body[4..8].try_into().unwrap()) as usize;
    let payload = &body[8..];
    if payload.len() != width * height * 16 {
        return Err(format!(
            "{}: expected {} coefficients",
            path.display(),
            width * height
        ));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let data = payload
        .chunks_exact(16)
        .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
        .collect();
    Ok(SubBand {
        width,
        height,
        data,
    })
}
