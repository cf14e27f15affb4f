//! Grayscale image containers, color conversion and resizing.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Smallest side length accepted by the pyramid and by [`resize_bilinear`].
pub const MIN_SIDE: usize = 8;

/// Dense row-major real-valued 2-D array.
///
/// Unlike [`GrayImage`] the values are unconstrained, which makes this the
/// working type for signed fields (phase differences, flow components) and
/// for linear combinations of images.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "plane must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "plane must be non-empty");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "plane must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Plane {
        self.map(|v| v * factor)
    }

    /// Pointwise `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Plane, b: f64) -> Result<Plane> {
        self.ensure_same_dims(other, "axpby")?;
        Ok(Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn ensure_same_dims(&self, other: &Plane, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Luminance image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Plane);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_plane(Plane::new(width, height, data)?)
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some((i, v)) = plane
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Validation(format!(
                "pixel {i} has value {v}, outside [0, 1]"
            )));
        }
        Ok(Self(plane))
    }

    /// Evaluates `f(x, y)` at every pixel, clamping the result to [0, 1].
    pub fn from_fn_clamped(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let plane =
            Plane::from_fn(width, height, f).map(
                |v| {
                    if v.is_nan() {
                        0.0
                    } else {
                        v.clamp(0.0, 1.0)
                    }
                },
            );
        Self(plane)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_plane(Plane::filled(width, height, value))
    }

    /// Multiplies every pixel by `factor`; fails if the result leaves [0, 1].
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_plane(self.0.scaled(factor))
    }

    pub fn as_plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    /// Rounds every pixel to the nearest multiple of 1/255.
    pub fn quantized_8bit(&self) -> Self {
        Self(self.0.map(|v| (v * 255.0).round() / 255.0))
    }
}

impl Deref for GrayImage {
    type Target = Plane;

    fn deref(&self) -> &Plane {
        &self.0
    }
}

impl AsRef<Plane> for GrayImage {
    fn as_ref(&self) -> &Plane {
        &self.0
    }
}

impl AsRef<Plane> for Plane {
    fn as_ref(&self) -> &Plane {
        self
    }
}

/// Ordered frames of identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<GrayImage>,
    /// Frames per second; informational only.
    pub frame_rate: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<GrayImage>, frame_rate: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Sequence("sequence has no frames".into()))?;
        let dims = first.dims();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
            return Err(Error::Sequence(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width(),
                f.height(),
                dims.0,
                dims.1
            )));
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[GrayImage] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<GrayImage> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Fails unless the sequence holds at least one frame pair.
    pub fn ensure_motion_ready(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::Sequence(format!(
                "motion needs at least 2 frames, got {}",
                self.frames.len()
            )));
        }
        Ok(())
    }

    pub fn map_frames(&self, f: impl FnMut(&GrayImage) -> Result<GrayImage>) -> Result<Self> {
        let frames = self.frames.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(frames, self.frame_rate)
    }
}

/// BT.601 luma of interleaved 8-bit RGB samples.
pub fn to_grayscale(width: usize, height: usize, rgb: &[u8]) -> Result<GrayImage> {
    if width == 0 || height == 0 || rgb.len() != width * height * 3 {
        return Err(Error::Dimension(format!(
            "expected {} interleaved RGB bytes for {width}x{height}, got {}",
            width * height * 3,
            rgb.len()
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|p| {
            let luma = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            (luma / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage::new(width, height, data)
}

/// Bilinear resize with half-pixel centers; both target sides must be at
/// least [`MIN_SIDE`].
pub fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> Result<GrayImage> {
    if new_w < MIN_SIDE || new_h < MIN_SIDE {
        return Err(Error::Dimension(format!(
            "resize target {new_w}x{new_h} is below the {MIN_SIDE}x{MIN_SIDE} minimum"
        )));
    }
    Ok(resample_bilinear(img, new_w, new_h))
}

/// Size-unchecked bilinear resampling used by [`resize_bilinear`].
pub(crate) fn resample_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> GrayImage {
    let (w, h) = img.dims();
    if (w, h) == (new_w, new_h) {
        return img.clone();
    }
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    // Source sample position and the two taps it falls between, per axis.
    let taps = |n_src: usize, scale: f64, i: usize| {
        let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_src - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(n_src - 1);
        (i0, i1, pos - i0 as f64)
    };
    let cols: Vec<_> = (0..new_w).map(|x| taps(w, sx, x)).collect();
    let rows: Vec<_> = (0..new_h).map(|y| taps(h, sy, y)).collect();
    GrayImage::from_fn_clamped(new_w, new_h, |x, y| {
        let (x0, x1, fx) = cols[x];
        let (y0, y1, fy) = rows[y];
        let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
        let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}
