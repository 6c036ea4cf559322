//! PNG / PNM reading and writing, plus the raw field dump.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::{Path, PathBuf};

use chromanorm_core::chroma::LogChromaticityField;
use chromanorm_core::image::{srgb_decode, srgb_encode, BinaryMask, GrayImage, LinearRgbImage};
use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: unsupported channel layout {layout} (need 3-channel RGB)")]
    UnsupportedChannels { path: PathBuf, layout: String },
    #[error("{path}: unsupported bit depth {bits} (need 8 or 16)")]
    UnsupportedDepth { path: PathBuf, bits: u16 },
    #[error("{path}: unsupported file type (need .png, .ppm or .pgm)")]
    UnsupportedFormat { path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: chromanorm_core::error::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    Eight,
    #[default]
    Sixteen,
}

fn decode_code(code: f64, max: f64, decode_gamma: bool) -> f64 {
    let v = code / max;
    if decode_gamma {
        srgb_decode(v)
    } else {
        v
    }
}

/// Load a 3-channel 8- or 16-bit PNG or PPM into linear light.
pub fn load_image(path: &Path, decode_gamma: bool) -> Result<LinearRgbImage, IoError> {
    let read_err = |source| IoError::Read {
        path: path.to_path_buf(),
        source,
    };
    let reader = image::ImageReader::open(path)
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .with_guessed_format()
        .map_err(|e| read_err(image::ImageError::IoError(e)))?;
    let decoded = reader.decode().map_err(read_err)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<[f64; 3]> = match decoded {
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| p.0.map(|c| decode_code(c as f64, 255.0, decode_gamma)))
            .collect(),
        DynamicImage::ImageRgb16(buf) => buf
            .pixels()
            .map(|p| p.0.map(|c| decode_code(c as f64, 65535.0, decode_gamma)))
            .collect(),
        DynamicImage::ImageRgb32F(_) => {
            return Err(IoError::UnsupportedDepth {
                path: path.to_path_buf(),
                bits: 32,
            })
        }
        other => {
            return Err(IoError::UnsupportedChannels {
                path: path.to_path_buf(),
                layout: format!("{:?}", other.color()),
            })
        }
    };
    LinearRgbImage::new(w, h, data).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

fn format_for(path: &Path) -> Result<ImageFormat, IoError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
        }),
    }
}

/// Write `bytes` next to `path` and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let write_err = |source| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    {
        let file = fs::File::create(&tmp).map_err(write_err)?;
        let mut out = BufWriter::new(file);
        out.write_all(bytes).map_err(write_err)?;
        out.flush().map_err(write_err)?;
    }
    fs::rename(&tmp, path).map_err(write_err)
}

fn encode(img: DynamicImage, path: &Path) -> Result<(), IoError> {
    let format = format_for(path)?;
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, format)
        .map_err(|source| IoError::Encode {
            path: path.to_path_buf(),
            source,
        })?;
    write_atomic(path, bytes.get_ref())
}

fn quantize(v: f64, encode_gamma: bool, max: f64) -> f64 {
    let v = if encode_gamma { srgb_encode(v) } else { v };
    (v * max).round()
}

/// Save an RGB image; returns the number of pixels that needed clamping to [0, 1].
pub fn save_rgb(
    img: &LinearRgbImage,
    path: &Path,
    encode_gamma: bool,
    depth: BitDepth,
) -> Result<usize, IoError> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let mut clamped = 0;
    let pixels: Vec<[f64; 3]> = img
        .pixels()
        .iter()
        .map(|p| {
            if p.iter().any(|&c| c > 1.0) {
                clamped += 1;
            }
            p.map(|c| c.clamp(0.0, 1.0))
        })
        .collect();
    let dynamic = match depth {
        BitDepth::Eight => DynamicImage::ImageRgb8(ImageBuffer::from_fn(w, h, |x, y| {
            let p = pixels[(y * w + x) as usize];
            Rgb(p.map(|c| quantize(c, encode_gamma, 255.0) as u8))
        })),
        BitDepth::Sixteen => DynamicImage::ImageRgb16(ImageBuffer::from_fn(w, h, |x, y| {
            let p = pixels[(y * w + x) as usize];
            Rgb(p.map(|c| quantize(c, encode_gamma, 65535.0) as u16))
        })),
    };
    encode(dynamic, path)?;
    Ok(clamped)
}

/// Save a gray image; returns the number of values clamped to [0, 1].
pub fn save_gray(
    img: &GrayImage,
    path: &Path,
    encode_gamma: bool,
    depth: BitDepth,
) -> Result<usize, IoError> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let clamped = img
        .values()
        .iter()
        .filter(|&&v| !(0.0..=1.0).contains(&v))
        .count();
    let at = |x: u32, y: u32| img.values()[(y * w + x) as usize].clamp(0.0, 1.0);
    let dynamic = match depth {
        BitDepth::Eight => DynamicImage::ImageLuma8(ImageBuffer::from_fn(w, h, |x, y| {
            Luma([quantize(at(x, y), encode_gamma, 255.0) as u8])
        })),
        BitDepth::Sixteen => DynamicImage::ImageLuma16(ImageBuffer::from_fn(w, h, |x, y| {
            Luma([quantize(at(x, y), encode_gamma, 65535.0) as u16])
        })),
    };
    encode(dynamic, path)?;
    Ok(clamped)
}

/// 8-bit 0/255 mask.
pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<(), IoError> {
    let (w, h) = (mask.width() as u32, mask.height() as u32);
    let buf = ImageBuffer::from_fn(w, h, |x, y| {
        Luma([if mask.get(x as usize, y as usize) {
            255u8
        } else {
            0
        }])
    });
    encode(DynamicImage::ImageLuma8(buf), path)
}

/// Little-endian `u32` width and height, then row-major `(phi1, phi2)` f64
/// pairs; invalid pixels are stored as NaN.
pub fn field_bytes(field: &LogChromaticityField) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + field.phi().len() * 16);
    out.extend_from_slice(&(field.width() as u32).to_le_bytes());
    out.extend_from_slice(&(field.height() as u32).to_le_bytes());
    for (p, &ok) in field.phi().iter().zip(field.valid().values()) {
        let (a, b) = if ok {
            (p[0], p[1])
        } else {
            (f64::NAN, f64::NAN)
        };
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

pub fn is_image_path(path: &Path) -> bool {
    format_for(path).is_ok()
}
