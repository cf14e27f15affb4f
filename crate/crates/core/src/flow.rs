//! Horn-Schunck dense optical flow, the brightness-constancy baseline.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame_io::write_atomic;
use crate::gray::{GrayImage, Plane};
use crate::numeric::median;
use crate::pyramid::LeReader;

/// Middlebury `.flo` tag, "PIEH" read as a little-endian f32.
pub const FLO_MAGIC: f32 = 202021.25;

/// Intensity scale applied before iterating, so `alpha` is expressed in
/// 8-bit gray levels as in the classical formulation.
pub const INTENSITY_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HornSchunckParams {
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for HornSchunckParams {
    fn default() -> Self {
        Self {
            alpha: 15.0,
            iterations: 100,
        }
    }
}

/// Per-pixel displacement in pixels; `u` along x, `v` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u: Plane,
    pub v: Plane,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            u: Plane::zeros(width, height),
            v: Plane::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    pub fn magnitude(&self) -> Plane {
        Plane::new(
            self.u.width(),
            self.u.height(),
            self.u
                .as_slice()
                .iter()
                .zip(self.v.as_slice())
                .map(|(u, v)| u.hypot(*v))
                .collect(),
        )
        .expect("u and v share dims")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

/// Mean, median and max of `sqrt(u² + v²)`.
pub fn flow_magnitude_stats(flow: &FlowField) -> FlowStats {
    let mut mags = flow.magnitude().into_vec();
    let mean = crate::numeric::compensated_sum(mags.iter().copied()) / mags.len() as f64;
    let max = mags.iter().fold(0.0f64, |m, &v| m.max(v));
    FlowStats {
        mean,
        median: median(&mut mags),
        max,
    }
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Central difference along x (`dx = 1`) or y with replicated borders.
fn central_difference(p: &Plane, along_x: bool) -> Plane {
    let (w, h) = p.dims();
    Plane::from_fn(w, h, |x, y| {
        if along_x {
            let l = clamp_index(x as isize - 1, w);
            let r = clamp_index(x as isize + 1, w);
            0.5 * (p.get(r, y) - p.get(l, y))
        } else {
            let t = clamp_index(y as isize - 1, h);
            let b = clamp_index(y as isize + 1, h);
            0.5 * (p.get(x, b) - p.get(x, t))
        }
    })
}

/// Classical Horn-Schunck neighbourhood mean (1/6 edge, 1/12 corner taps)
/// with replicated borders.
fn neighbour_mean(p: &Plane, out: &mut Plane) {
    let (w, h) = p.dims();
    for y in 0..h {
        let ym = clamp_index(y as isize - 1, h);
        let yp = clamp_index(y as isize + 1, h);
        for x in 0..w {
            let xm = clamp_index(x as isize - 1, w);
            let xp = clamp_index(x as isize + 1, w);
            let edges = p.get(xm, y) + p.get(xp, y) + p.get(x, ym) + p.get(x, yp);
            let corners = p.get(xm, ym) + p.get(xp, ym) + p.get(xm, yp) + p.get(xp, yp);
            out.set(x, y, edges / 6.0 + corners / 12.0);
        }
    }
}

/// Synchronous Jacobi iterations of the Horn-Schunck update, starting from
/// zero flow.
pub fn horn_schunck(
    f0: &GrayImage,
    f1: &GrayImage,
    params: &HornSchunckParams,
) -> Result<FlowField> {
    f0.ensure_same_dims(f1, "horn_schunck")?;
    if !(params.alpha > 0.0 && params.alpha.is_finite()) {
        return Err(Error::Validation(format!(
            "alpha must be > 0, got {}",
            params.alpha
        )));
    }
    if params.iterations == 0 {
        return Err(Error::Validation("iterations must be >= 1".into()));
    }
    let a = f0.as_plane().scaled(INTENSITY_SCALE);
    let b = f1.as_plane().scaled(INTENSITY_SCALE);
    let ix = central_difference(&a, true).axpby(0.5, &central_difference(&b, true), 0.5)?;
    let iy = central_difference(&a, false).axpby(0.5, &central_difference(&b, false), 0.5)?;
    let it = b.axpby(1.0, &a, -1.0)?;
    let alpha2 = params.alpha * params.alpha;
    let denom: Vec<f64> = ix
        .as_slice()
        .iter()
        .zip(iy.as_slice())
        .map(|(gx, gy)| alpha2 + gx * gx + gy * gy)
        .collect();

    let (w, h) = f0.dims();
    let mut flow = FlowField::zeros(w, h);
    let mut u_bar = Plane::zeros(w, h);
    let mut v_bar = Plane::zeros(w, h);
    for _ in 0..params.iterations {
        neighbour_mean(&flow.u, &mut u_bar);
        neighbour_mean(&flow.v, &mut v_bar);
        let u = flow.u.as_mut_slice();
        let v = flow.v.as_mut_slice();
        for i in 0..w * h {
            let gx = ix.as_slice()[i];
            let gy = iy.as_slice()[i];
            let ub = u_bar.as_slice()[i];
            let vb = v_bar.as_slice()[i];
            let k = (gx * ub + gy * vb + it.as_slice()[i]) / denom[i];
            u[i] = ub - gx * k;
            v[i] = vb - gy * k;
        }
    }
    Ok(flow)
}

/// Encodes a flow field in the Middlebury `.flo` layout.
pub fn flo_bytes(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (u, v) in flow.u.as_slice().iter().zip(flow.v.as_slice()) {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn write_flo(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &flo_bytes(flow))
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = LeReader {
        bytes: &bytes,
        pos: 0,
        origin: path,
    };
    if r.f32()? != FLO_MAGIC {
        return Err(Error::format(path, "bad .flo magic"));
    }
    let (w, h) = (r.i32()?, r.i32()?);
    if w <= 0 || h <= 0 || bytes.len() != 12 + 8 * (w as usize) * (h as usize) {
        return Err(Error::format(
            path,
            format!("inconsistent .flo size {w}x{h}"),
        ));
    }
    let (w, h) = (w as usize, h as usize);
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        u.push(r.f32()? as f64);
        v.push(r.f32()? as f64);
    }
    Ok(FlowField {
        u: Plane::new(w, h, u)?,
        v: Plane::new(w, h, v)?,
    })
}
