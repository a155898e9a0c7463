//! Reading and writing RGB images as binary PPM (P6) or PNG.
//!
//! Only 8-bit RGB data is handled; values round-trip bit-exactly because
//! ingestion divides by 255 and emission multiplies back with rounding.

use std::fs;
use std::path::Path;

use crate::color::ColorImage;
use crate::error::{Error, Result};

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset,
        message: message.into(),
    }
}

/// Quantizes a normalized image to 8-bit RGB bytes.
fn to_rgb8(image: &ColorImage, path: &Path) -> Result<Vec<u8>> {
    if image.dim() != 3 {
        return Err(format_err(
            path,
            0,
            format!("only 3-channel images can be written, got {}", image.dim()),
        ));
    }
    Ok(image
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect())
}

fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<ColorImage> {
    let data: Vec<f64> = bytes.iter().map(|&b| b as f64 / 255.0).collect();
    ColorImage::new(width, height, 3, data)
}

/// Writes a binary P6 PPM with maxval 255.
pub fn write_ppm(path: &Path, image: &ColorImage) -> Result<()> {
    let bytes = to_rgb8(image, path)?;
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(&bytes);
    fs::write(path, out)?;
    Ok(())
}

/// Reads a binary P6 PPM. Header comments are accepted; only maxval 255 is
/// supported.
pub fn read_ppm(path: &Path) -> Result<ColorImage> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let mut token = |bytes: &[u8]| -> Result<(String, usize)> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, start as u64, "unexpected end of header"));
        }
        Ok((
            String::from_utf8_lossy(&bytes[start..pos]).into_owned(),
            pos,
        ))
    };

    let (magic, _) = token(&bytes)?;
    if magic != "P6" {
        return Err(format_err(path, 0, format!("expected P6 magic, got '{magic}'")));
    }
    let parse = |tok: (String, usize)| -> Result<(usize, usize)> {
        let value = tok.0.parse::<usize>().map_err(|_| {
            format_err(path, tok.1 as u64, format!("invalid header number '{}'", tok.0))
        })?;
        Ok((value, tok.1))
    };
    let (width, _) = parse(token(&bytes)?)?;
    let (height, _) = parse(token(&bytes)?)?;
    let (maxval, maxval_end) = parse(token(&bytes)?)?;
    if maxval != 255 {
        return Err(format_err(
            path,
            maxval_end as u64,
            format!("unsupported maxval {maxval}; only 8-bit data is handled"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = maxval_end + 1;
    let expected = width * height * 3;
    if bytes.len() < data_start + expected {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!(
                "raster holds {} bytes, expected {expected}",
                bytes.len().saturating_sub(data_start)
            ),
        ));
    }
    from_rgb8(width, height, &bytes[data_start..data_start + expected])
}

/// Writes an 8-bit RGB PNG.
pub fn write_png(path: &Path, image: &ColorImage) -> Result<()> {
    let bytes = to_rgb8(image, path)?;
    let buf = image::RgbImage::from_raw(image.width() as u32, image.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save(path)
        .map_err(|e| format_err(path, 0, format!("png write failed: {e}")))?;
    Ok(())
}

/// Reads an 8-bit RGB PNG. Other bit depths and channel layouts are
/// rejected rather than converted.
pub fn read_png(path: &Path) -> Result<ColorImage> {
    let dynamic = image::open(path).map_err(|e| format_err(path, 0, format!("png read failed: {e}")))?;
    match dynamic {
        image::DynamicImage::ImageRgb8(buf) => {
            from_rgb8(buf.width() as usize, buf.height() as usize, buf.as_raw())
        }
        other => Err(format_err(
            path,
            0,
            format!(
                "unsupported pixel layout {:?}; only 8-bit RGB is handled",
                other.color()
            ),
        )),
    }
}

/// Dispatches on the file extension (`.ppm` or `.png`).
pub fn read_image(path: &Path) -> Result<ColorImage> {
    match extension(path).as_deref() {
        Some("ppm") => read_ppm(path),
        Some("png") => read_png(path),
        _ => Err(format_err(path, 0, "unsupported image extension; use .ppm or .png")),
    }
}

pub fn write_image(path: &Path, image: &ColorImage) -> Result<()> {
    match extension(path).as_deref() {
        Some("ppm") => write_ppm(path, image),
        Some("png") => write_png(path, image),
        _ => Err(format_err(path, 0, "unsupported image extension; use .ppm or .png")),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ColorValue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: usize, h: usize) -> ColorImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels: Vec<ColorValue> = (0..w * h)
            .map(|_| ColorValue::rgb8(rng.random(), rng.random(), rng.random()))
            .collect();
        ColorImage::from_pixels(w, h, &pixels).unwrap()
    }

    #[test]
    fn ppm_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = random_image(1, 7, 5);
        write_ppm(&path, &img).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
    }

    #[test]
    fn png_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = random_image(2, 9, 4);
        write_png(&path, &img).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
    }

    #[test]
    fn ppm_header_comments_are_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        let mut data = b"P6\n# a comment\n2 1\n# another\n255\n".to_vec();
        data.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
        fs::write(&path, data).unwrap();
        let img = read_ppm(&path).unwrap();
        assert_eq!(img.pixel(1, 0), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn ppm_rejects_wide_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.ppm");
        fs::write(&path, b"P6\n1 1\n65535\n\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_ppm(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn ppm_rejects_truncated_raster() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.ppm");
        fs::write(&path, b"P6\n2 2\n255\n\0\0\0").unwrap();
        assert!(matches!(read_ppm(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn sixteen_bit_png_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let buf = image::ImageBuffer::<image::Rgb<u16>, Vec<u16>>::from_pixel(
            2,
            2,
            image::Rgb([65535u16, 0, 0]),
        );
        buf.save(&path).unwrap();
        match read_png(&path) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains("unsupported"), "{message}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
