//! Frame-window pipeline and the packed snippet tensor.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use num_complex::Complex64;

use super::{blur_phasor, phase_difference, remove_rigid_motion, PhaseDiffField};
use crate::error::{Error, Result};
use crate::frame_io::write_atomic;
use crate::gray::{GrayImage, Plane};
use crate::pyramid::{
    band_amplitude, validity_mask, AmplitudeImage, Bands, Decomposer, FilterBank, LeReader,
    PhaseImage,
};

/// Magic bytes opening a serialized snippet file.
pub const SNIPPET_MAGIC: &[u8; 5] = b"SNIP1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiffConfig {
    /// Gaussian σ of the amplitude-weighted phase blur, in pixels of each
    /// sub-band's own grid.
    pub sigma: f64,
    /// Subtract each sub-band's mean phase difference.
    pub remove_rigid_motion: bool,
}

impl Default for PhaseDiffConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            remove_rigid_motion: true,
        }
    }
}

/// Phase differences of every sub-band for one frame pair.
pub type PairFields = Bands<PhaseDiffField>;

/// Denoised local phase and raw amplitude of every sub-band of one frame.
#[derive(Debug, Clone)]
pub struct FramePhases {
    pub phase: Bands<PhaseImage>,
    pub amplitude: Bands<AmplitudeImage>,
    pub center_frequencies: Vec<f64>,
}

/// Peak-normalizes a frame and rounds it to single precision.
///
/// Phase is invariant to a global gain mathematically; this step makes it
/// invariant in floating point too. For 8-bit sourced frames `k/255`
/// multiplied by any gain, the quotient `k/k_max` is never close enough to
/// an f32 rounding boundary for the gain's rounding error to matter, so the
/// normalized frames, and everything computed from them, agree bit for bit.
pub fn normalize_frame(frame: &Plane) -> Plane {
    let peak = frame.as_slice().iter().fold(0.0f64, |m, &v| m.max(v));
    if peak <= 0.0 {
        return frame.clone();
    }
    frame.map(|v| (v / peak) as f32 as f64)
}

/// Normalize, decompose, and denoise the phase of one frame.
pub fn analyze_frame(
    decomposer: &Decomposer<'_>,
    frame: &Plane,
    config: &PhaseDiffConfig,
) -> Result<FramePhases> {
    let coeffs = decomposer.decompose(&normalize_frame(frame))?;
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(Error::Validation(format!(
            "sigma must be > 0, got {}",
            config.sigma
        )));
    }
    let amplitude = coeffs.bands.map(|_, _, b| band_amplitude(b));
    // A·e^{jΦ} is the coefficient itself, so the phasor is blurred directly.
    let phase = coeffs.bands.map(|s, o, b| {
        let valid = validity_mask(amplitude.get(s, o));
        let part = |f: fn(&Complex64) -> f64| {
            let data = b
                .data
                .iter()
                .zip(&valid)
                .map(|(c, &ok)| if ok { f(c) } else { 0.0 });
            Plane::new(b.width, b.height, data.collect()).expect("sub-band dims")
        };
        blur_phasor(&part(|c| c.re), &part(|c| c.im), valid, config.sigma)
    });
    Ok(FramePhases {
        phase,
        amplitude,
        center_frequencies: coeffs.center_frequencies,
    })
}

fn diff_frames(a: &FramePhases, b: &FramePhases, config: &PhaseDiffConfig) -> Result<PairFields> {
    a.phase.try_map(|s, o, p0| {
        let field = phase_difference(p0, b.phase.get(s, o), a.center_frequencies[s])?
            .with_amplitude_weights(a.amplitude.get(s, o), b.amplitude.get(s, o))?;
        Ok(if config.remove_rigid_motion {
            remove_rigid_motion(&field)
        } else {
            field
        })
    })
}

/// Phase-difference fields for one frame pair.
pub fn pair_phase_diff(
    decomposer: &Decomposer<'_>,
    f0: &Plane,
    f1: &Plane,
    config: &PhaseDiffConfig,
) -> Result<PairFields> {
    let (a, b) = rayon::join(
        || analyze_frame(decomposer, f0, config),
        || analyze_frame(decomposer, f1, config),
    );
    diff_frames(&a?, &b?, config)
}

/// Runs decompose → phase → denoise → difference → rigid-motion removal
/// over a window of frames, returning one [`PairFields`] per consecutive
/// pair. Frames are analyzed in parallel; the result does not depend on
/// scheduling.
pub fn snippet_phase_diffs(
    frames: &[GrayImage],
    bank: &FilterBank,
    config: &PhaseDiffConfig,
) -> Result<Vec<PairFields>> {
    if frames.len() < 2 {
        return Err(Error::Sequence(format!(
            "phase differences need at least 2 frames, got {}",
            frames.len()
        )));
    }
    let decomposer = Decomposer::new(bank);
    let analyzed = frames
        .par_iter()
        .map(|f| analyze_frame(&decomposer, f.as_plane(), config))
        .collect::<Result<Vec<_>>>()?;
    analyzed
        .par_windows(2)
        .map(|w| diff_frames(&w[0], &w[1], config))
        .collect()
}

/// One scale's phase differences with time and orientation merged into
/// channels: channel `c` holds pair `c / n_orientations`, orientation
/// `c % n_orientations`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetTensor {
    pub t_pairs: usize,
    pub n_orientations: usize,
    pub height: usize,
    pub width: usize,
    pub center_frequency: f64,
    /// Channel-major `(channels, height, width)` values.
    pub data: Vec<f64>,
}

impl SnippetTensor {
    pub fn channels(&self) -> usize {
        self.t_pairs * self.n_orientations
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels(), self.height, self.width)
    }

    pub fn channel_index(&self, pair: usize, orientation: usize) -> usize {
        pair * self.n_orientations + orientation
    }

    pub fn channel(&self, c: usize) -> Plane {
        let n = self.height * self.width;
        Plane::new(
            self.width,
            self.height,
            self.data[c * n..(c + 1) * n].to_vec(),
        )
        .expect("channel slice matches dims")
    }

    /// Inverse of the packing: planes indexed `[pair][orientation]`.
    pub fn unpack(&self) -> Vec<Vec<Plane>> {
        (0..self.t_pairs)
            .map(|t| {
                (0..self.n_orientations)
                    .map(|o| self.channel(self.channel_index(t, o)))
                    .collect()
            })
            .collect()
    }
}

/// Packs a window's pair fields into one tensor per scale.
pub fn pack_snippet(fields: &[PairFields]) -> Result<Vec<SnippetTensor>> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Validation("cannot pack an empty snippet".into()))?;
    let (n_scales, n_orient) = (first.n_scales(), first.n_orientations());
    let mut tensors = Vec::with_capacity(n_scales);
    for s in 0..n_scales {
        let (w, h) = first.get(s, 0).dims();
        let mut data = Vec::with_capacity(fields.len() * n_orient * w * h);
        for (t, pair) in fields.iter().enumerate() {
            if pair.n_scales() != n_scales || pair.n_orientations() != n_orient {
                return Err(Error::Dimension(format!(
                    "pair {t} has {}x{} sub-bands, expected {n_scales}x{n_orient}",
                    pair.n_scales(),
                    pair.n_orientations()
                )));
            }
            for o in 0..n_orient {
                let f = pair.get(s, o);
                if f.dims() != (w, h) {
                    return Err(Error::Dimension(format!(
                        "pair {t} scale {s} orientation {o} is {}x{}, expected {w}x{h}",
                        f.dims().0,
                        f.dims().1
                    )));
                }
                data.extend_from_slice(f.values.as_slice());
            }
        }
        tensors.push(SnippetTensor {
            t_pairs: fields.len(),
            n_orientations: n_orient,
            height: h,
            width: w,
            center_frequency: first.get(s, 0).center_frequency,
            data,
        });
    }
    Ok(tensors)
}

/// Serializes tensors as `SNIP1`: magic; u32 scale count; per scale u32
/// `C, H, W`; u32 `T_pairs`; u32 `n_orientations`; f32 ω per scale; then
/// each scale's channel-major data as f32. All little-endian.
pub fn write_snippets(tensors: &[SnippetTensor], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = tensors
        .first()
        .ok_or_else(|| Error::Validation("no tensors to write".into()))?;
    let mut out = Vec::new();
    out.extend_from_slice(SNIPPET_MAGIC);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        let (c, h, w) = t.shape();
        for v in [c, h, w] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(first.t_pairs as u32).to_le_bytes());
    out.extend_from_slice(&(first.n_orientations as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.center_frequency as f32).to_le_bytes());
    }
    for t in tensors {
        for &v in &t.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    write_atomic(path, &out)
}

pub fn read_snippets(path: impl AsRef<Path>) -> Result<Vec<SnippetTensor>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = LeReader {
        bytes: &bytes,
        pos: 0,
        origin: path,
    };
    if r.take(5)? != SNIPPET_MAGIC {
        return Err(Error::format(path, "missing SNIP1 magic"));
    }
    let n_scales = r.u32()? as usize;
    if n_scales == 0 || n_scales > 16 {
        return Err(Error::format(path, "implausible scale count"));
    }
    let shapes = (0..n_scales)
        .map(|_| Ok((r.u32()? as usize, r.u32()? as usize, r.u32()? as usize)))
        .collect::<Result<Vec<_>>>()?;
    let t_pairs = r.u32()? as usize;
    let n_orient = r.u32()? as usize;
    let omegas = (0..n_scales)
        .map(|_| r.f32().map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    let mut tensors = Vec::with_capacity(n_scales);
    for ((c, h, w), omega) in shapes.into_iter().zip(omegas) {
        if c != t_pairs * n_orient {
            return Err(Error::format(
                path,
                format!("channel count {c} != {t_pairs}x{n_orient}"),
            ));
        }
        let len = c
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .ok_or_else(|| Error::format(path, "tensor size overflows"))?;
        let data = (0..len)
            .map(|_| r.f32().map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        tensors.push(SnippetTensor {
            t_pairs,
            n_orientations: n_orient,
            height: h,
            width: w,
            center_frequency: omega,
            data,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after snippet data"));
    }
    Ok(tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::{build_filter_bank, PyramidSpec};

    fn synthetic_pair_fields(t_pairs: usize) -> Vec<PairFields> {
        (0..t_pairs)
            .map(|t| Bands {
                scales: [48usize, 24]
                    .iter()
                    .enumerate()
                    .map(|(s, &n)| {
                        (0..2)
                            .map(|o| PhaseDiffField {
                                values: Plane::from_fn(n, n, |x, y| {
                                    (t * 1000 + s * 100 + o * 10) as f64 + (x + y * n) as f64 * 1e-4
                                }),
                                valid: vec![true; n * n],
                                weights: Plane::filled(n, n, 1.0),
                                center_frequency: 1.0 / (s + 1) as f64,
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn fused_denoise_matches_two_step() {
        let bank = build_filter_bank(48, 48, &PyramidSpec::default()).unwrap();
        let dec = Decomposer::new(&bank);
        let frame = Plane::from_fn(48, 48, |x, y| {
            0.5 + 0.2 * (0.9 * x as f64 + 0.3 * y as f64).sin() + 0.1 * (1.3 * y as f64).cos()
        });
        let cfg = PhaseDiffConfig::default();
        let fused = analyze_frame(&dec, &frame, &cfg).unwrap();
        let coeffs = dec.decompose(&normalize_frame(&frame)).unwrap();
        for (s, o, b) in coeffs.bands.iter() {
            let amp = band_amplitude(b);
            let two = super::super::denoise_phase(&crate::pyramid::band_phase(b), &amp, cfg.sigma)
                .unwrap();
            let got = fused.phase.get(s, o);
            assert_eq!(got.valid, two.valid);
            for (a, e) in got.phase.as_slice().iter().zip(two.phase.as_slice()) {
                assert!(crate::numeric::wrap_angle(a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_shapes() {
        let tensors = pack_snippet(&synthetic_pair_fields(12)).unwrap();
        assert_eq!(tensors[0].shape(), (24, 48, 48));
        assert_eq!(tensors[1].shape(), (24, 24, 24));
        let short = pack_snippet(&synthetic_pair_fields(4)).unwrap();
        assert_eq!(short[0].shape(), (8, 48, 48));
    }

    #[test]
    fn channel_layout_and_unpack() {
        let fields = synthetic_pair_fields(3);
        let tensors = pack_snippet(&fields).unwrap();
        let t = &tensors[1];
        assert_eq!(t.channel_index(2, 1), 5);
        assert_eq!(t.channel(5).get(0, 0), (2000 + 100 + 10) as f64);
        for (s, tensor) in tensors.iter().enumerate() {
            let planes = tensor.unpack();
            for (pair, row) in planes.iter().enumerate() {
                for (o, plane) in row.iter().enumerate() {
                    assert_eq!(plane, &fields[pair].get(s, o).values);
                }
            }
        }
    }

    #[test]
    fn pack_rejects_mismatched_pairs() {
        let mut fields = synthetic_pair_fields(2);
        fields[1].scales[0].pop();
        assert!(matches!(pack_snippet(&fields), Err(Error::Dimension(_))));
        assert!(pack_snippet(&[]).is_err());
    }

    #[test]
    fn snip_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.snip");
        let tensors = pack_snippet(&synthetic_pair_fields(2)).unwrap();
        write_snippets(&tensors, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..5], SNIPPET_MAGIC);
        let back = read_snippets(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in tensors.iter().zip(&back) {
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(*x as f32 as f64, *y);
            }
        }
        fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(read_snippets(&path).is_err());
    }

    #[test]
    fn window_needs_two_frames() {
        let bank = build_filter_bank(16, 16, &PyramidSpec::default()).unwrap();
        let f = GrayImage::filled(16, 16, 0.5).unwrap();
        assert!(matches!(
            snippet_phase_diffs(&[f], &bank, &PhaseDiffConfig::default()),
            Err(Error::Sequence(_))
        ));
    }

    #[test]
    fn normalization_is_scale_free_for_8bit_frames() {
        let base = Plane::from_fn(16, 16, |x, y| ((x * 37 + y * 11) % 128) as f64 / 255.0);
        let n0 = normalize_frame(&base);
        for c in [0.5, 0.731, 1.37, 1.999] {
            assert_eq!(normalize_frame(&base.scaled(c)), n0);
        }
    }
}
