//! Frame sequence loading and 8-bit image export (PGM P5 and PNG).

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ImageBuffer, ImageEncoder, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::gray::{to_grayscale, FrameSequence, GrayImage, Plane};

/// Nominal rate recorded for sequences loaded from disk.
pub const DEFAULT_FRAME_RATE: f64 = 30.0;

/// Affine map used to quantize a signed field: `pixel = offset + scale * value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedMapping {
    pub offset: f64,
    pub scale: f64,
}

impl SignedMapping {
    /// Maps the largest magnitude in `plane` to the 1..255 extremes.
    pub fn fit(plane: &Plane) -> Self {
        let max = plane.max_abs();
        let scale = if max > 0.0 { 127.0 / max } else { 1.0 };
        Self {
            offset: 128.0,
            scale,
        }
    }

    pub fn to_pixel(&self, value: f64) -> u8 {
        (self.offset + self.scale * value).round().clamp(0.0, 255.0) as u8
    }

    pub fn to_value(&self, pixel: u8) -> f64 {
        (pixel as f64 - self.offset) / self.scale
    }
}

/// Loads every PNG/PGM frame of a directory (lexicographic order) or every
/// path listed in a text file (one per line, `#` starts a comment line).
pub fn read_frames(path: impl AsRef<Path>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        list_directory(path)?
    } else {
        read_list_file(path)?
    };
    if files.is_empty() {
        return Err(Error::Sequence(format!(
            "no PNG or PGM frames found in {}",
            path.display()
        )));
    }
    let frames = files.iter().map(read_frame).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, DEFAULT_FRAME_RATE)
}

fn is_frame_file(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "pgm")
    )
}

fn list_directory(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && is_frame_file(&p) {
            files.push(p);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn read_list_file(list: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let base = list.parent().unwrap_or_else(|| Path::new(""));
    Ok(parse_frame_list(&text)
        .into_iter()
        .map(|p| if p.is_absolute() { p } else { base.join(p) })
        .collect())
}

pub(crate) fn parse_frame_list(text: &str) -> Vec<PathBuf> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect()
}

/// Reads one 8-bit grayscale (or RGB, converted with BT.601) frame.
pub fn read_frame(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let codec = |source| Error::Codec {
        path: path.to_path_buf(),
        source,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(codec)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        to_grayscale(w, h, rgb.as_raw())
    } else {
        let luma = img.to_luma8();
        GrayImage::new(
            w,
            h,
            luma.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        )
    }
}

/// Writes an image as 8-bit PGM (`.pgm`) or PNG (anything else).
pub fn write_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    write_luma8(img.width(), img.height(), bytes, path.as_ref())
}

/// Writes a signed field with 0 at mid-gray and records the mapping in a
/// `<path>.map.txt` sidecar.
pub fn write_signed_field(field: &Plane, path: impl AsRef<Path>) -> Result<SignedMapping> {
    let path = path.as_ref();
    let mapping = SignedMapping::fit(field);
    let bytes = field
        .as_slice()
        .iter()
        .map(|&v| mapping.to_pixel(v))
        .collect();
    write_luma8(field.width(), field.height(), bytes, path)?;
    let sidecar = format!(
        "# value = (pixel - offset) / scale\noffset {}\nscale {:.17e}\n",
        mapping.offset, mapping.scale
    );
    write_atomic(mapping_sidecar_path(path), sidecar.as_bytes())?;
    Ok(mapping)
}

pub fn mapping_sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".map.txt");
    PathBuf::from(s)
}

fn write_luma8(width: usize, height: usize, bytes: Vec<u8>, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, bytes)
            .expect("buffer length matches dimensions");
    let codec = |source| Error::Codec {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Cursor::new(Vec::new());
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                buf.as_raw(),
                width as u32,
                height as u32,
                image::ExtendedColorType::L8,
            )
            .map_err(codec)?;
    } else {
        DynamicImage::ImageLuma8(buf)
            .write_to(&mut out, ImageFormat::Png)
            .map_err(codec)?;
    }
    write_atomic(path, &out.into_inner())
}

/// Writes `bytes` to a temporary sibling file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::format(path, "output path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
