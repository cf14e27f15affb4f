//! Complex steerable pyramid: FFT-domain decomposition into oriented
//! sub-bands and their local amplitude and phase.
//!
//! Scale 1 is `IFFT(FFT(img) · L₀ · B₀^θ)`. The low-passed spectrum
//! `FFT(img) · L₀` is then cropped to its central half band (exactly
//! alias-free, since `L₀` vanishes at and beyond π/2) and the same masks are
//! applied on the half-size grid for scale 2, and so on. Residual bands are
//! not produced, so the decomposition is not invertible.
//!
//! Boundaries are periodic; expect edge effects within one filter width of
//! the border.

mod bank;

use std::f64::consts::PI;

use num_complex::Complex64;

pub(crate) use bank::LeReader;
pub use bank::{
    build_filter_bank, radial_highpass, radial_lowpass, FilterBank, PyramidSpec, ScaleMasks,
    BANK_MAGIC, GRID_CENTER_FREQUENCY,
};

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::gray::Plane;
use crate::numeric::compensated_sum;

/// Relative amplitude floor: phases where `A < AMPLITUDE_EPSILON · mean(A)`
/// are treated as undefined.
pub const AMPLITUDE_EPSILON: f64 = 1e-6;

/// Complex response `R_{ω,θ}` of one scale/orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBand {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl SubBand {
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }
}

/// Values indexed by `[scale][orientation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands<T> {
    pub scales: Vec<Vec<T>>,
}

impl<T> Bands<T> {
    pub fn get(&self, scale: usize, orientation: usize) -> &T {
        &self.scales[scale][orientation]
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn n_orientations(&self) -> usize {
        self.scales.first().map_or(0, Vec::len)
    }

    /// Iterates `(scale, orientation, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.scales
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().enumerate().map(move |(o, v)| (s, o, v)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(usize, usize, &T) -> U) -> Bands<U> {
        Bands {
            scales: self
                .scales
                .iter()
                .enumerate()
                .map(|(s, row)| row.iter().enumerate().map(|(o, v)| f(s, o, v)).collect())
                .collect(),
        }
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(usize, usize, &T) -> Result<U>) -> Result<Bands<U>> {
        let scales = self
            .scales
            .iter()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .map(|(o, v)| f(s, o, v))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bands { scales })
    }
}

/// Sub-band coefficients of one image plus each scale's ω.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidCoefficients {
    pub bands: Bands<SubBand>,
    pub center_frequencies: Vec<f64>,
}

pub type AmplitudeImage = Plane;

/// Local phase in (-π, π] with a validity mask; invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseImage {
    pub phase: Plane,
    pub valid: Vec<bool>,
}

impl PhaseImage {
    /// Phase image with every pixel valid.
    pub fn all_valid(phase: Plane) -> Self {
        let valid = vec![true; phase.len()];
        Self { phase, valid }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.phase.dims()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Reusable FFT plans for decomposing many images with one bank.
#[derive(Debug, Clone)]
pub struct Decomposer<'a> {
    bank: &'a FilterBank,
    ffts: Vec<Fft2d>,
}

impl<'a> Decomposer<'a> {
    pub fn new(bank: &'a FilterBank) -> Self {
        let ffts = bank
            .scales()
            .iter()
            .map(|m| Fft2d::new(m.width, m.height))
            .collect();
        Self { bank, ffts }
    }

    pub fn bank(&self) -> &FilterBank {
        self.bank
    }

    pub fn decompose(&self, img: &Plane) -> Result<PyramidCoefficients> {
        let bank = self.bank;
        if img.dims() != (bank.width(), bank.height()) {
            return Err(Error::Dimension(format!(
                "image is {}x{} but the filter bank grid is {}x{}",
                img.width(),
                img.height(),
                bank.width(),
                bank.height()
            )));
        }
        let mut spectrum: Vec<Complex64> = img
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.ffts[0].forward(&mut spectrum);

        let mut scales = Vec::with_capacity(bank.n_scales());
        for (s, masks) in bank.scales().iter().enumerate() {
            for (c, &l) in spectrum.iter_mut().zip(&masks.lowpass) {
                *c *= l;
            }
            let bands = masks
                .bandpass
                .iter()
                .map(|mask| {
                    let mut data: Vec<Complex64> =
                        spectrum.iter().zip(mask).map(|(c, &b)| c * b).collect();
                    self.ffts[s].inverse(&mut data);
                    SubBand {
                        width: masks.width,
                        height: masks.height,
                        data,
                    }
                })
                .collect();
            scales.push(bands);
            if let Some(next) = bank.scales().get(s + 1) {
                spectrum = crop_spectrum(
                    &spectrum,
                    masks.width,
                    masks.height,
                    next.width,
                    next.height,
                );
            }
        }
        Ok(PyramidCoefficients {
            bands: Bands { scales },
            center_frequencies: bank.center_frequencies(),
        })
    }
}

/// Decomposes `img` with a freshly planned [`Decomposer`].
pub fn decompose(img: &impl AsRef<Plane>, bank: &FilterBank) -> Result<PyramidCoefficients> {
    Decomposer::new(bank).decompose(img.as_ref())
}

/// Keeps the frequencies representable on the `(dw, dh)` grid, rescaled so
/// that spatial amplitudes are preserved by the smaller inverse transform.
fn crop_spectrum(src: &[Complex64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<Complex64> {
    use crate::fft::signed_bin;
    let gain = (dw * dh) as f64 / (sw * sh) as f64;
    let mut out = Vec::with_capacity(dw * dh);
    for ky in 0..dh {
        let sy = signed_bin(ky, dh).rem_euclid(sh as isize) as usize;
        for kx in 0..dw {
            let sx = signed_bin(kx, dw).rem_euclid(sw as isize) as usize;
            out.push(src[sy * sw + sx] * gain);
        }
    }
    out
}

/// Pointwise modulus of every sub-band.
pub fn amplitude(coeffs: &PyramidCoefficients) -> Bands<AmplitudeImage> {
    coeffs.bands.map(|_, _, b| band_amplitude(b))
}

pub fn band_amplitude(band: &SubBand) -> AmplitudeImage {
    Plane::new(
        band.width,
        band.height,
        band.data.iter().map(|c| c.re.hypot(c.im)).collect(),
    )
    .expect("sub-band dimensions are consistent")
}

/// Four-quadrant phase of every sub-band.
pub fn phase(coeffs: &PyramidCoefficients) -> Bands<PhaseImage> {
    coeffs.bands.map(|_, _, b| band_phase(b))
}

/// Phase of one sub-band. Pixels whose amplitude falls below
/// [`AMPLITUDE_EPSILON`] times the band's mean amplitude get phase 0 and a
/// cleared validity bit.
pub fn band_phase(band: &SubBand) -> PhaseImage {
    let valid = validity_mask(&band_amplitude(band));
    let values = band
        .data
        .iter()
        .zip(&valid)
        .map(|(c, &ok)| if ok { principal_angle(c.im, c.re) } else { 0.0 })
        .collect();
    PhaseImage {
        phase: Plane::new(band.width, band.height, values).expect("consistent dims"),
        valid,
    }
}

/// Pixels whose amplitude reaches [`AMPLITUDE_EPSILON`] times the mean.
pub(crate) fn validity_mask(amp: &AmplitudeImage) -> Vec<bool> {
    let mean = compensated_sum(amp.as_slice().iter().copied()) / amp.len() as f64;
    let floor = AMPLITUDE_EPSILON * mean;
    amp.as_slice()
        .iter()
        .map(|&a| mean > 0.0 && a >= floor)
        .collect()
}

/// `atan2(im, re)` folded onto (-π, π].
#[inline]
pub fn principal_angle(im: f64, re: f64) -> f64 {
    let a = im.atan2(re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gray::GrayImage;
    use std::f64::consts::FRAC_PI_2;

    fn band_of(values: &[(f64, f64)]) -> SubBand {
        SubBand {
            width: values.len(),
            height: 1,
            data: values.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
        }
    }

    #[test]
    fn amplitude_pythagoras_and_zero() {
        let a = band_amplitude(&band_of(&[(3.0, 4.0), (0.0, 0.0)]));
        assert_eq!(a.as_slice(), &[5.0, 0.0]);
    }

    #[test]
    fn phase_quadrants() {
        let p = band_phase(&band_of(&[
            (1.0, 0.0),
            (0.0, 1.0),
            (-1.0, -1e-12),
            (-1.0, 0.0),
        ]));
        assert_eq!(p.phase.get(0, 0), 0.0);
        assert_eq!(p.phase.get(1, 0), FRAC_PI_2);
        let near = p.phase.get(2, 0);
        assert!(near < 0.0 && (near + PI).abs() < 1e-11, "{near}");
        assert_eq!(p.phase.get(3, 0), PI);
        assert!(p.valid.iter().all(|&v| v));
    }

    #[test]
    fn negative_zero_imaginary_maps_to_plus_pi() {
        assert_eq!(principal_angle(-0.0, -1.0), PI);
    }

    #[test]
    fn tiny_amplitude_is_invalid() {
        let p = band_phase(&band_of(&[(1.0, 1.0), (1e-9, 1e-9), (0.0, -1.0)]));
        assert_eq!(p.valid, vec![true, false, true]);
        assert_eq!(p.phase.get(1, 0), 0.0);
        let zero = band_phase(&band_of(&[(0.0, 0.0); 4]));
        assert_eq!(zero.valid_count(), 0);
    }

    #[test]
    fn constant_image_gives_zero_coefficients() {
        let bank = build_filter_bank(48, 48, &PyramidSpec::default()).unwrap();
        let img = GrayImage::filled(48, 48, 0.7).unwrap();
        let c = decompose(&img, &bank).unwrap();
        for (_, _, b) in c.bands.iter() {
            for v in &b.data {
                assert!(v.norm() < 1e-9 * 48.0 * 48.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let bank = build_filter_bank(32, 32, &PyramidSpec::default()).unwrap();
        let img = GrayImage::filled(48, 48, 0.1).unwrap();
        assert!(matches!(decompose(&img, &bank), Err(Error::Dimension(_))));
    }

    #[test]
    fn sub_band_dims_follow_dyadic_rule() {
        let bank = build_filter_bank(64, 48, &PyramidSpec::new(3, 4).unwrap()).unwrap();
        let img = GrayImage::filled(64, 48, 0.2).unwrap();
        let c = decompose(&img, &bank).unwrap();
        assert_eq!(c.bands.n_scales(), 3);
        assert_eq!(c.bands.n_orientations(), 4);
        for (s, _, b) in c.bands.iter() {
            assert_eq!((b.width, b.height), (64 >> s, 48 >> s));
        }
    }

    #[test]
    fn crop_keeps_low_frequencies() {
        // 8x8 spectrum whose value encodes the signed bin pair.
        let src: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i % 8) as f64, (i / 8) as f64))
            .collect();
        let out = crop_spectrum(&src, 8, 8, 4, 4);
        // Target bin 3 on a length-4 axis is frequency -1 -> source bin 7.
        assert_eq!(out[3 * 4 + 3], src[7 * 8 + 7] * 0.25);
        assert_eq!(out[4 + 1], src[8 + 1] * 0.25);
    }
}
