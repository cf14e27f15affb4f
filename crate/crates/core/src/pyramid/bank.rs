//! Frequency-domain filter bank: radial raised-cosine low-pass masks and
//! oriented analytic band-pass masks, one octave per scale.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fft::angular_frequency;
use crate::frame_io::write_atomic;
use crate::gray::MIN_SIDE;

/// Magic bytes opening a serialized filter bank.
pub const BANK_MAGIC: &[u8; 5] = b"CSPB1";

/// Radial center of the finest band, in radians per pixel of that scale's
/// own grid. Every scale uses the same shape on its own (halved) grid.
pub const GRID_CENTER_FREQUENCY: f64 = 3.0 * PI / 8.0;

/// Low-pass passband edge (grid units); the mask is 1 at or below it.
const LOWPASS_FLAT: f64 = FRAC_PI_4;
/// Low-pass stopband edge (grid units); the mask is 0 at or above it.
const LOWPASS_CUTOFF: f64 = FRAC_PI_2;

/// Number of scales and orientation angles of the pyramid.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidSpec {
    pub n_scales: usize,
    pub orientation_angles: Vec<f64>,
}

impl Default for PyramidSpec {
    /// Two scales, orientations 0 (X) and π/2 (Y).
    fn default() -> Self {
        Self {
            n_scales: 2,
            orientation_angles: vec![0.0, FRAC_PI_2],
        }
    }
}

impl PyramidSpec {
    /// `n_orientations` angles evenly spaced over [0, π).
    pub fn new(n_scales: usize, n_orientations: usize) -> Result<Self> {
        let spec = Self {
            n_scales,
            orientation_angles: (0..n_orientations)
                .map(|k| k as f64 * PI / n_orientations as f64)
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_orientations(&self) -> usize {
        self.orientation_angles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scales == 0 {
            return Err(Error::Validation("pyramid needs at least one scale".into()));
        }
        if self.orientation_angles.is_empty() {
            return Err(Error::Validation(
                "pyramid needs at least one orientation".into(),
            ));
        }
        for (i, a) in self.orientation_angles.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::Validation(format!("orientation {i} is not finite")));
            }
            for b in &self.orientation_angles[..i] {
                let d = (a - b).rem_euclid(PI);
                if d < 1e-9 || PI - d < 1e-9 {
                    return Err(Error::Validation(format!(
                        "orientation angles {b} and {a} coincide modulo π"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest image side that still leaves an 8-pixel coarsest scale.
    pub fn min_side(&self) -> usize {
        MIN_SIDE << (self.n_scales - 1)
    }
}

/// Masks for one scale, defined on that scale's FFT grid in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMasks {
    pub width: usize,
    pub height: usize,
    /// Radial center of the band in radians per pixel of the full-resolution
    /// input.
    pub center_frequency: f64,
    pub lowpass: Vec<f64>,
    /// One band-pass mask per orientation, in spec order.
    pub bandpass: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    width: usize,
    height: usize,
    spec: PyramidSpec,
    scales: Vec<ScaleMasks>,
}

/// Radial low-pass: flat to π/4, cosine taper to zero at π/2.
pub fn radial_lowpass(r: f64) -> f64 {
    if r <= LOWPASS_FLAT {
        1.0
    } else if r >= LOWPASS_CUTOFF {
        0.0
    } else {
        (FRAC_PI_2 * (r - LOWPASS_FLAT) / (LOWPASS_CUTOFF - LOWPASS_FLAT)).cos()
    }
}

/// Quadrature complement of [`radial_lowpass`], `sqrt(1 - L²)`.
pub fn radial_highpass(r: f64) -> f64 {
    if r <= LOWPASS_FLAT {
        0.0
    } else if r >= LOWPASS_CUTOFF {
        1.0
    } else {
        (FRAC_PI_2 * (r - LOWPASS_FLAT) / (LOWPASS_CUTOFF - LOWPASS_FLAT)).sin()
    }
}

/// Direction unit vector with exact zeros for axis-aligned angles.
fn direction(theta: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (snap(theta.cos()), snap(theta.sin()))
}

/// Analytic angular window `cos^(K-1)(φ - θ)` on the half-plane facing θ.
fn angular_window(wx: f64, wy: f64, dir: (f64, f64), order: i32) -> f64 {
    let r = wx.hypot(wy);
    let dot = wx * dir.0 + wy * dir.1;
    if r == 0.0 || dot <= 0.0 {
        0.0
    } else {
        (dot / r).min(1.0).powi(order)
    }
}

/// Builds the masks for a `width`×`height` input.
pub fn build_filter_bank(width: usize, height: usize, spec: &PyramidSpec) -> Result<FilterBank> {
    spec.validate()?;
    let min = spec.min_side();
    let step = 1usize << (spec.n_scales - 1);
    if width < min || height < min {
        return Err(Error::Dimension(format!(
            "{width}x{height} is too small for {} scales (need at least {min}x{min})",
            spec.n_scales
        )));
    }
    if width % step != 0 || height % step != 0 {
        return Err(Error::Dimension(format!(
            "{width}x{height} is not divisible by {step} as {} dyadic scales require",
            spec.n_scales
        )));
    }
    let order = spec.n_orientations() as i32 - 1;
    let dirs: Vec<_> = spec
        .orientation_angles
        .iter()
        .map(|&t| direction(t))
        .collect();
    let scales = (0..spec.n_scales)
        .map(|s| {
            let (w, h) = (width >> s, height >> s);
            let mut lowpass = Vec::with_capacity(w * h);
            let mut bandpass = vec![Vec::with_capacity(w * h); dirs.len()];
            for ky in 0..h {
                let wy = angular_frequency(ky, h);
                for kx in 0..w {
                    let wx = angular_frequency(kx, w);
                    let r = wx.hypot(wy);
                    lowpass.push(radial_lowpass(r));
                    let hp = radial_highpass(r);
                    for (mask, &dir) in bandpass.iter_mut().zip(&dirs) {
                        mask.push(hp * angular_window(wx, wy, dir, order));
                    }
                }
            }
            ScaleMasks {
                width: w,
                height: h,
                center_frequency: GRID_CENTER_FREQUENCY / (1u64 << s) as f64,
                lowpass,
                bandpass,
            }
        })
        .collect();
    Ok(FilterBank {
        width,
        height,
        spec: spec.clone(),
        scales,
    })
}

impl FilterBank {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spec(&self) -> &PyramidSpec {
        &self.spec
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn n_orientations(&self) -> usize {
        self.spec.n_orientations()
    }

    pub fn scales(&self) -> &[ScaleMasks] {
        &self.scales
    }

    pub fn scale(&self, s: usize) -> &ScaleMasks {
        &self.scales[s]
    }

    /// Center frequencies ω_s (radians per full-resolution pixel).
    pub fn center_frequencies(&self) -> Vec<f64> {
        self.scales.iter().map(|m| m.center_frequency).collect()
    }

    /// Serializes to the `CSPB1` layout: magic, then little-endian u32
    /// `W, H, n_scales, n_orientations`, f32 angles, f32 center
    /// frequencies, and for each scale its low-pass mask followed by the
    /// band-pass masks, all as row-major f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BANK_MAGIC);
        for v in [
            self.width,
            self.height,
            self.n_scales(),
            self.n_orientations(),
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for &a in &self.spec.orientation_angles {
            out.extend_from_slice(&(a as f32).to_le_bytes());
        }
        for m in &self.scales {
            out.extend_from_slice(&(m.center_frequency as f32).to_le_bytes());
        }
        for m in &self.scales {
            for mask in std::iter::once(&m.lowpass).chain(&m.bandpass) {
                for &v in mask {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        out
    }

    /// Parses the layout written by [`FilterBank::to_bytes`]. Values come
    /// back at f32 precision.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut r = LeReader {
            bytes,
            pos: 0,
            origin,
        };
        if r.take(5)? != BANK_MAGIC {
            return Err(Error::format(origin, "missing CSPB1 magic"));
        }
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let n_scales = r.u32()? as usize;
        let n_orient = r.u32()? as usize;
        if n_scales == 0 || n_scales > 16 || n_orient == 0 || n_orient > 64 {
            return Err(Error::format(
                origin,
                "implausible scale/orientation counts",
            ));
        }
        let angles = (0..n_orient)
            .map(|_| r.f32().map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        let omegas = (0..n_scales)
            .map(|_| r.f32().map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        let spec = PyramidSpec {
            n_scales,
            orientation_angles: angles,
        };
        spec.validate()
            .map_err(|e| Error::format(origin, e.to_string()))?;
        let mut scales = Vec::with_capacity(n_scales);
        for (s, &center_frequency) in omegas.iter().enumerate() {
            let (w, h) = (width >> s, height >> s);
            if w == 0 || h == 0 {
                return Err(Error::format(origin, "grid collapses to zero size"));
            }
            let mut read_mask =
                || -> Result<Vec<f64>> { (0..w * h).map(|_| r.f32().map(f64::from)).collect() };
            let lowpass = read_mask()?;
            let bandpass = (0..n_orient).map(|_| read_mask()).collect::<Result<_>>()?;
            scales.push(ScaleMasks {
                width: w,
                height: h,
                center_frequency,
                lowpass,
                bandpass,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::format(origin, "trailing bytes after filter bank"));
        }
        Ok(Self {
            width,
            height,
            spec,
            scales,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// Cursor over little-endian binary data, reporting errors against a path.
pub(crate) struct LeReader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
    pub origin: &'a Path,
}

impl<'a> LeReader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(self.origin, "unexpected end of data")),
        }
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
