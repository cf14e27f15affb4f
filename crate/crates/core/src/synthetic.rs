//! Deterministic synthetic textures and motion sequences for tests and
//! benchmarks.
//!
//! Textures are finite sums of sinusoids whose frequencies fall on the FFT
//! grid of the rendering size, so translating one is an exact circular
//! shift, including sub-pixel amounts.

use std::f64::consts::{PI, TAU};

use crate::gray::{FrameSequence, GrayImage};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    /// Radians per pixel along x and y.
    pub wx: f64,
    pub wy: f64,
    pub phase: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub width: usize,
    pub height: usize,
    pub mean: f64,
    pub waves: Vec<Wave>,
}

/// Frequency band and orientation spread of a [`Texture`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureParams {
    /// Radial frequency range in radians per pixel.
    pub freq_min: f64,
    pub freq_max: f64,
    /// Dominant orientation and half-width of the angular spread (radians).
    /// A spread of π/2 or more gives an isotropic texture.
    pub angle: f64,
    pub angle_spread: f64,
    pub n_waves: usize,
    pub mean: f64,
    /// Sum of wave amplitudes; bounds the deviation from `mean`.
    pub contrast: f64,
    /// Mirror every wave about the dominant axis so the spectrum is
    /// symmetric around it.
    pub symmetric: bool,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            freq_min: PI / 4.0,
            freq_max: PI / 2.0,
            angle: 0.0,
            angle_spread: PI / 2.0,
            n_waves: 24,
            mean: 0.5,
            contrast: 0.35,
            symmetric: false,
        }
    }
}

impl Texture {
    pub fn generate(width: usize, height: usize, seed: u64, params: &TextureParams) -> Self {
        let rng = SplitMix64::new(seed);
        let mut idx = 0u64;
        let mut next = || {
            idx += 1;
            rng.unit_at(idx - 1)
        };
        let mut bins: Vec<(i64, i64)> = Vec::new();
        let mut attempts = 0;
        while bins.len() < params.n_waves && attempts < params.n_waves * 200 {
            attempts += 1;
            let r = params.freq_min + (params.freq_max - params.freq_min) * next();
            let offset = (2.0 * next() - 1.0) * params.angle_spread;
            let mut candidates = vec![params.angle + offset];
            if params.symmetric {
                candidates.push(params.angle - offset);
            }
            for a in candidates {
                let kx = (r * a.cos() * width as f64 / TAU).round() as i64;
                let ky = (r * a.sin() * height as f64 / TAU).round() as i64;
                let wr = TAU
                    * ((kx as f64 / width as f64).powi(2) + (ky as f64 / height as f64).powi(2))
                        .sqrt();
                let in_band = wr >= params.freq_min * 0.999 && wr <= params.freq_max * 1.001;
                if (kx, ky) != (0, 0)
                    && in_band
                    && !bins.contains(&(kx, ky))
                    && !bins.contains(&(-kx, -ky))
                {
                    bins.push((kx, ky));
                }
            }
        }
        let amp = params.contrast / bins.len().max(1) as f64;
        let waves = bins
            .into_iter()
            .map(|(kx, ky)| Wave {
                wx: TAU * kx as f64 / width as f64,
                wy: TAU * ky as f64 / height as f64,
                phase: TAU * next(),
                amplitude: amp,
            })
            .collect();
        Self {
            width,
            height,
            mean: params.mean,
            waves,
        }
    }

    /// Continuous intensity at `(x, y)` (periodic over the render size).
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        self.mean
            + self
                .waves
                .iter()
                .map(|w| w.amplitude * (w.wx * x + w.wy * y + w.phase).cos())
                .sum::<f64>()
    }

    /// Renders the texture translated by `(dx, dy)` pixels.
    pub fn render(&self, dx: f64, dy: f64) -> GrayImage {
        GrayImage::from_fn_clamped(self.width, self.height, |x, y| {
            self.sample(x as f64 - dx, y as f64 - dy)
        })
    }
}

/// Isotropic texture undergoing a small global drift plus a localized,
/// oscillating deformation, quantized to 8 bits.
///
/// The local patch moves up to ~1 px per frame, inside the phase
/// unwrapping range of the finest default scale.
pub fn motion_sequence(width: usize, height: usize, n_frames: usize, seed: u64) -> FrameSequence {
    let params = TextureParams {
        freq_min: PI / 5.0,
        freq_max: PI / 2.0,
        n_waves: 40,
        ..TextureParams::default()
    };
    let tex = Texture::generate(width, height, seed, &params);
    let (cx, cy) = (width as f64 * 0.5, height as f64 * 0.55);
    let spread = width.min(height) as f64 / 5.0;
    let frames = (0..n_frames)
        .map(|t| {
            let t = t as f64;
            let gx = 0.4 * (TAU * t / 37.0).sin();
            let gy = 0.25 * (TAU * t / 53.0).cos();
            let lx = 2.0 * (TAU * t / 12.0).sin();
            let ly = 1.2 * (TAU * t / 17.0).cos();
            GrayImage::from_fn_clamped(width, height, |x, y| {
                let (xf, yf) = (x as f64, y as f64);
                let g = (-((xf - cx).powi(2) + (yf - cy).powi(2)) / (2.0 * spread * spread)).exp();
                tex.sample(xf - gx - lx * g, yf - gy - ly * g)
            })
            .quantized_8bit()
        })
        .collect();
    FrameSequence::new(frames, 30.0).expect("frames share one size")
}
