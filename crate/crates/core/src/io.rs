//! Binary PGM (P5) / PPM (P6) with maxval 255, and 8-bit gray or RGB PNG.

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Loads an image, detecting the format from its leading bytes.
pub fn load(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes, path)
    } else if bytes.first() == Some(&b'P') {
        decode_pnm(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "unrecognized magic bytes".into(),
        })
    }
}

/// Saves an image; the extension picks the format (`.pgm`, `.ppm`, `.pnm`, `.png`).
pub fn save(path: &Path, img: &Image) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match ext.as_str() {
        "pgm" if img.channels() != 1 => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "PGM holds gray images only".into(),
            })
        }
        "ppm" if img.channels() != 3 => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "PPM holds color images only".into(),
            })
        }
        "pgm" | "ppm" | "pnm" => encode_pnm(img),
        "png" => encode_png(img, path)?,
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("unknown extension {other:?}"),
            })
        }
    };
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<Image> {
    let fail = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let magic = bytes
        .get(..2)
        .ok_or_else(|| fail("truncated header".into()))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("PNM magic {:?}", String::from_utf8_lossy(magic)),
            })
        }
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        *field = header_number(bytes, &mut pos).ok_or_else(|| fail("malformed header".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("maxval {maxval} (only 255 is supported)"),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fail("missing whitespace after header".into()));
    }
    pos += 1;
    let need = width * height * channels;
    let raster = bytes.get(pos..pos + need).ok_or_else(|| {
        fail(format!(
            "truncated raster: need {need} bytes, have {}",
            bytes.len() - pos
        ))
    })?;
    Image::from_u8(raster, width, height, channels)
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<Image> {
    let fail = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| fail(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| fail("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| fail(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("PNG bit depth {:?}", info.bit_depth),
        });
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("PNG color type {other:?}"),
            })
        }
    };
    buf.truncate(info.buffer_size());
    Image::from_u8(&buf, info.width as usize, info.height as usize, channels)
}

fn encode_png(img: &Image, path: &Path) -> Result<Vec<u8>> {
    let fail = |e: png::EncodingError| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(if img.channels() == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(fail)?;
        writer.write_image_data(&img.to_u8()).map_err(fail)?;
        writer.finish().map_err(fail)?;
    }
    Ok(out)
}
