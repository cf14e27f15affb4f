//! Phase-difference motion fields between consecutive frames.

mod snippet;

pub use snippet::{
    analyze_frame, normalize_frame, pack_snippet, pair_phase_diff, read_snippets,
    snippet_phase_diffs, write_snippets, FramePhases, PairFields, PhaseDiffConfig, SnippetTensor,
    SNIPPET_MAGIC,
};

use crate::error::{Error, Result};
use crate::gray::Plane;
use crate::numeric::{compensated_sum, wrap_angle};
use crate::pyramid::{principal_angle, AmplitudeImage, PhaseImage};

/// Minimum fraction of valid pixels for [`estimate_translation`].
pub const MIN_VALID_FRACTION: f64 = 0.01;

/// Unwrapped phase difference of one sub-band between frames t and t+1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffField {
    /// Radians in (-π, π]; exactly 0 where invalid.
    pub values: Plane,
    pub valid: Vec<bool>,
    /// Non-negative per-pixel reliability weights (0 where invalid).
    pub weights: Plane,
    /// ω of the sub-band in radians per full-resolution pixel.
    pub center_frequency: f64,
}

impl PhaseDiffField {
    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Replaces the weights with `sqrt(A_t · A_{t+1})` at valid pixels.
    pub fn with_amplitude_weights(
        mut self,
        a0: &AmplitudeImage,
        a1: &AmplitudeImage,
    ) -> Result<Self> {
        self.values.ensure_same_dims(a0, "amplitude weights")?;
        self.values.ensure_same_dims(a1, "amplitude weights")?;
        for (i, w) in self.weights.as_mut_slice().iter_mut().enumerate() {
            *w = if self.valid[i] {
                (a0.as_slice()[i] * a1.as_slice()[i]).sqrt()
            } else {
                0.0
            };
        }
        Ok(self)
    }

    fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .as_slice()
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
    }
}

/// Normalized 1-D Gaussian taps over `[-radius, radius]`, radius `ceil(3σ)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = compensated_sum(taps.iter().copied());
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with periodic boundaries.
fn blur_periodic(plane: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = plane.dims();
    let radius = kernel.len() / 2;
    let src = plane.as_slice();
    let wrap = |i: usize, n: usize| (i + n * (radius / n + 1) - radius) % n;

    let mut tmp = vec![0.0; w * h];
    let mut padded = vec![0.0; w + 2 * radius];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (j, p) in padded.iter_mut().enumerate() {
            *p = row[wrap(j, w)];
        }
        for (x, out) in tmp[y * w..(y + 1) * w].iter_mut().enumerate() {
            let mut acc = 0.0;
            for (g, v) in kernel.iter().zip(&padded[x..]) {
                acc += g * v;
            }
            *out = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, g) in kernel.iter().enumerate() {
            let sy = wrap(y + k, h);
            for (d, v) in dst.iter_mut().zip(&tmp[sy * w..(sy + 1) * w]) {
                *d += g * v;
            }
        }
    }
    Plane::new(w, h, out).expect("dimensions preserved")
}

/// Amplitude-weighted Gaussian smoothing of phase.
///
/// The phasor `A·e^{jΦ}` is blurred (periodic boundaries, taps to 3σ) and
/// its angle re-extracted, which is the circular counterpart of
/// `Σ G·A·Φ / Σ G·A` and does not tear at ±π. Invalid input pixels carry no
/// weight and stay invalid.
pub fn denoise_phase(phase: &PhaseImage, amp: &AmplitudeImage, sigma: f64) -> Result<PhaseImage> {
    phase.phase.ensure_same_dims(amp, "denoise_phase")?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Validation(format!("sigma must be > 0, got {sigma}")));
    }
    let (w, h) = amp.dims();
    let mut re = Plane::zeros(w, h);
    let mut im = Plane::zeros(w, h);
    for i in 0..amp.len() {
        if phase.valid[i] {
            let (s, c) = phase.phase.as_slice()[i].sin_cos();
            let a = amp.as_slice()[i];
            re.as_mut_slice()[i] = a * c;
            im.as_mut_slice()[i] = a * s;
        }
    }
    Ok(blur_phasor(&re, &im, phase.valid.clone(), sigma))
}

/// Blurs a phasor given as real/imaginary planes and takes its angle where
/// `valid` is set. Invalid entries of `re`/`im` must already be zero.
pub(crate) fn blur_phasor(re: &Plane, im: &Plane, valid: Vec<bool>, sigma: f64) -> PhaseImage {
    let (w, h) = re.dims();
    let kernel = gaussian_kernel(sigma);
    let re = blur_periodic(re, &kernel);
    let im = blur_periodic(im, &kernel);
    let values = valid
        .iter()
        .zip(re.as_slice().iter().zip(im.as_slice()))
        .map(|(&ok, (&r, &i))| if ok { principal_angle(i, r) } else { 0.0 })
        .collect();
    PhaseImage {
        phase: Plane::new(w, h, values).expect("dimensions preserved"),
        valid,
    }
}

/// `Φ_{t+1} − Φ_t` mapped onto (-π, π]. Pixels invalid in either frame are
/// zeroed and flagged invalid; valid pixels get unit weight.
pub fn phase_difference(
    phase_t: &PhaseImage,
    phase_t1: &PhaseImage,
    center_frequency: f64,
) -> Result<PhaseDiffField> {
    phase_t
        .phase
        .ensure_same_dims(&phase_t1.phase, "phase_difference")?;
    let (w, h) = phase_t.dims();
    let mut valid = Vec::with_capacity(w * h);
    let values = phase_t
        .phase
        .as_slice()
        .iter()
        .zip(phase_t1.phase.as_slice())
        .enumerate()
        .map(|(i, (&p0, &p1))| {
            let ok = phase_t.valid[i] && phase_t1.valid[i];
            valid.push(ok);
            if ok {
                wrap_angle(p1 - p0)
            } else {
                0.0
            }
        })
        .collect();
    let weights = valid.iter().map(|&ok| if ok { 1.0 } else { 0.0 }).collect();
    Ok(PhaseDiffField {
        values: Plane::new(w, h, values)?,
        valid,
        weights: Plane::new(w, h, weights)?,
        center_frequency,
    })
}

/// Subtracts the mean over the field's valid pixels and re-wraps.
pub fn remove_rigid_motion(field: &PhaseDiffField) -> PhaseDiffField {
    let n = field.valid_count();
    if n == 0 {
        return field.clone();
    }
    let mean = compensated_sum(field.valid_values()) / n as f64;
    let mut out = field.clone();
    for (v, &ok) in out.values.as_mut_slice().iter_mut().zip(&field.valid) {
        if ok {
            *v = wrap_angle(*v - mean);
        }
    }
    out
}

/// Displacement along the sub-band's orientation axis, in full-resolution
/// pixels: `-(weighted mean of Δ) / ω`.
pub fn estimate_translation(field: &PhaseDiffField) -> Result<f64> {
    let total = field.values.len();
    let n = field.valid_count();
    if (n as f64) < MIN_VALID_FRACTION * total as f64 || n == 0 {
        return Err(Error::InsufficientSignal(format!(
            "{n} of {total} pixels have reliable phase"
        )));
    }
    let pairs = || {
        field
            .values
            .as_slice()
            .iter()
            .zip(field.weights.as_slice())
            .zip(&field.valid)
            .filter(|(_, &ok)| ok)
            .map(|((&d, &w), _)| (d, w))
    };
    let wsum = compensated_sum(pairs().map(|(_, w)| w));
    if wsum <= 0.0 {
        return Err(Error::InsufficientSignal("all weights are zero".into()));
    }
    let mean = compensated_sum(pairs().map(|(d, w)| d * w)) / wsum;
    Ok(-mean / field.center_frequency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn phase_img(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> PhaseImage {
        PhaseImage::all_valid(Plane::from_fn(w, h, f))
    }

    fn field_from(values: Vec<f64>, w: usize) -> PhaseDiffField {
        let h = values.len() / w;
        let n = values.len();
        PhaseDiffField {
            values: Plane::new(w, h, values).unwrap(),
            valid: vec![true; n],
            weights: Plane::filled(w, h, 1.0),
            center_frequency: 1.0,
        }
    }

    /// Direct 2-D weighted circular mean with periodic wrap.
    fn circular_mean_oracle(phase: &Plane, amp: &Plane, sigma: f64) -> Plane {
        let (w, h) = phase.dims();
        let r = (3.0 * sigma).ceil() as isize;
        Plane::from_fn(w, h, |x, y| {
            let (mut sr, mut si, mut norm) = (0.0, 0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                    let qx = (x as isize + dx).rem_euclid(w as isize) as usize;
                    let qy = (y as isize + dy).rem_euclid(h as isize) as usize;
                    let a = amp.get(qx, qy);
                    let p = phase.get(qx, qy);
                    sr += g * a * p.cos();
                    si += g * a * p.sin();
                    norm += g * a;
                }
            }
            let ang = (si / norm).atan2(sr / norm);
            if ang <= -PI {
                PI
            } else {
                ang
            }
        })
    }

    #[test]
    fn denoise_constant_phase() {
        let p = phase_img(12, 10, |_, _| 1.234);
        let a = Plane::filled(12, 10, 0.5);
        let out = denoise_phase(&p, &a, 2.0).unwrap();
        for &v in out.phase.as_slice() {
            assert!((v - 1.234).abs() < 1e-12);
        }
    }

    #[test]
    fn denoise_follows_dominant_amplitude() {
        let p = phase_img(9, 9, |x, y| {
            if (x, y) == (4, 4) {
                -2.5
            } else {
                0.3 * x as f64
            }
        });
        let a = Plane::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 1.0 } else { 1e-8 });
        let out = denoise_phase(&p, &a, 1.0).unwrap();
        for (x, y) in [(4, 4), (3, 4), (5, 5)] {
            assert!((out.phase.get(x, y) + 2.5).abs() < 1e-4);
        }
    }

    #[test]
    fn denoise_checkerboard_matches_direct_oracle() {
        let p = phase_img(8, 8, |x, y| if (x + y) % 2 == 0 { PI } else { -PI });
        let a = Plane::filled(8, 8, 1.0);
        let out = denoise_phase(&p, &a, 1.0).unwrap();
        let oracle = circular_mean_oracle(&p.phase, &a, 1.0);
        for (o, e) in out.phase.as_slice().iter().zip(oracle.as_slice()) {
            assert!(*o > -PI && *o <= PI);
            assert!(wrap_angle(o - e).abs() < 1e-9, "{o} vs {e}");
            assert!((o.abs() - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn denoise_random_matches_direct_oracle() {
        let p = phase_img(8, 8, |x, y| ((x * 13 + y * 7) % 11) as f64 * 0.6 - 3.0);
        let a = Plane::from_fn(8, 8, |x, y| 0.1 + ((x * 3 + y * 5) % 7) as f64);
        let out = denoise_phase(&p, &a, 1.0).unwrap();
        let oracle = circular_mean_oracle(&p.phase, &a, 1.0);
        for (o, e) in out.phase.as_slice().iter().zip(oracle.as_slice()) {
            assert!(wrap_angle(o - e).abs() < 1e-9, "{o} vs {e}");
        }
    }

    #[test]
    fn denoise_errors() {
        let p = phase_img(8, 8, |_, _| 0.0);
        assert!(matches!(
            denoise_phase(&p, &Plane::zeros(8, 9), 1.0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            denoise_phase(&p, &Plane::zeros(8, 8), 0.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn difference_examples() {
        let a = phase_img(3, 1, |x, _| [3.0, 0.0, 0.7][x]);
        let b = phase_img(3, 1, |x, _| [-3.0, PI, 0.7][x]);
        let d = phase_difference(&a, &b, 1.0).unwrap();
        assert!((d.values.get(0, 0) - (TAU - 6.0)).abs() < 1e-15);
        assert!((d.values.get(0, 0) - 0.2832).abs() < 1e-4);
        assert_eq!(d.values.get(1, 0), PI);
        assert_eq!(d.values.get(2, 0), 0.0);
    }

    #[test]
    fn difference_masks_invalid_pixels() {
        let mut a = phase_img(2, 1, |_, _| 1.0);
        let b = phase_img(2, 1, |_, _| 2.0);
        a.valid[1] = false;
        let d = phase_difference(&a, &b, 1.0).unwrap();
        assert_eq!(d.valid, vec![true, false]);
        assert_eq!(d.values.get(1, 0), 0.0);
        assert_eq!(d.weights.get(1, 0), 0.0);
    }

    #[test]
    fn rigid_motion_examples() {
        let c = remove_rigid_motion(&field_from(vec![0.4; 16], 4));
        assert!(c.values.as_slice().iter().all(|&v| v.abs() < 1e-15));

        let zero_mean = field_from(vec![0.5, -0.5, 0.25, -0.25], 2);
        assert_eq!(remove_rigid_motion(&zero_mean), zero_mean);

        let mut v = vec![0.1; 16];
        v[5] = 0.5;
        let out = remove_rigid_motion(&field_from(v.clone(), 4));
        let mean = (15.0 * 0.1 + 0.5) / 16.0;
        assert!((mean - 0.125f64).abs() < 1e-15);
        for (o, i) in out.values.as_slice().iter().zip(&v) {
            assert!((o - (i - 0.125)).abs() < 1e-15);
        }
    }

    #[test]
    fn rigid_motion_ignores_invalid() {
        let mut f = field_from(vec![1.0, 1.0, 0.0, 0.0], 2);
        f.valid[2] = false;
        f.valid[3] = false;
        let out = remove_rigid_motion(&f);
        assert_eq!(out.values.as_slice(), &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out.valid, f.valid);
    }

    #[test]
    fn estimate_zero_and_insufficient() {
        let f = field_from(vec![0.0; 100], 10);
        assert_eq!(estimate_translation(&f).unwrap(), 0.0);
        let mut sparse = f.clone();
        sparse.valid.iter_mut().for_each(|v| *v = false);
        assert!(matches!(
            estimate_translation(&sparse),
            Err(Error::InsufficientSignal(_))
        ));
        sparse.valid[0] = true;
        assert!(estimate_translation(&sparse).is_ok());
    }

    #[test]
    fn estimate_uses_weights_and_sign() {
        let mut f = field_from(vec![-0.2, -0.6], 2);
        f.center_frequency = 0.5;
        f.weights = Plane::new(2, 1, vec![3.0, 1.0]).unwrap();
        let expected = -((3.0 * -0.2 + -0.6) / 4.0) / 0.5;
        assert!((estimate_translation(&f).unwrap() - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn difference_is_antisymmetric(p0 in -PI..PI, p1 in -PI..PI) {
            let a = phase_img(1, 1, |_, _| p0);
            let b = phase_img(1, 1, |_, _| p1);
            let ab = phase_difference(&a, &b, 1.0).unwrap().values.get(0, 0);
            let ba = phase_difference(&b, &a, 1.0).unwrap().values.get(0, 0);
            prop_assert!(ab > -PI && ab <= PI);
            if ab.abs() < PI - 1e-12 {
                prop_assert!((ab + ba).abs() < 1e-15);
            }
        }

        #[test]
        fn rigid_removal_is_idempotent(vals in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let once = remove_rigid_motion(&field_from(vals, 4));
            let twice = remove_rigid_motion(&once);
            for (a, b) in once.values.as_slice().iter().zip(twice.values.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let mean: f64 = once.values.as_slice().iter().sum::<f64>() / 16.0;
            prop_assert!(mean.abs() < 1e-9);
        }
    }
}
