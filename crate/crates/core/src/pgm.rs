//! Binary portable graymap (P5) reading and writing.
//!
//! Writers emit the header `P5\n<width> <height>\n<maxval>\n` followed by raw
//! samples, one byte each for maxval 255 and two big-endian bytes for 65535.

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Image};
use std::path::Path;

/// Decoded P5 raster with its declared maxval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Rescales to 8 bits (exact when maxval is 255).
    pub fn to_gray8(&self) -> GrayImage {
        let pixels = if self.maxval == 255 {
            self.samples.iter().map(|&s| s as u8).collect()
        } else {
            let m = self.maxval as f64;
            self.samples
                .iter()
                .map(|&s| ((s as f64) * 255.0 / m).round() as u8)
                .collect()
        };
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

pub fn encode_gray8(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_gray16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Quantizes a real image to 16 bits. Negative values clamp to 0; if the peak
/// exceeds 65535 the whole image is divided by `peak/65535`. Returns the
/// samples and the counts-per-level scale applied.
pub fn quantize16(img: &Image) -> (Vec<u16>, f64) {
    let peak = img.max().max(0.0);
    let scale = if peak > 65535.0 { peak / 65535.0 } else { 1.0 };
    let samples = img
        .data()
        .iter()
        .map(|&v| (v.max(0.0) / scale).round().min(65535.0) as u16)
        .collect();
    (samples, scale)
}

pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Pgm(format!(
            "expected magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_number(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_number(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_number(next_token(bytes, &mut pos)?, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm("zero-sized raster".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm(format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pgm("missing whitespace after maxval".into()));
    }
    pos += 1;

    let n = width * height;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let body = &bytes[pos..];
    if body.len() < n * bytes_per {
        return Err(Error::Pgm(format!(
            "raster truncated: need {} bytes, have {}",
            n * bytes_per,
            body.len()
        )));
    }
    let samples: Vec<u16> = if bytes_per == 1 {
        body[..n].iter().map(|&b| b as u16).collect()
    } else {
        body[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(s) = samples.iter().find(|&&s| s as usize > maxval) {
        return Err(Error::Pgm(format!("sample {s} exceeds maxval {maxval}")));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn read(path: impl AsRef<Path>) -> Result<Pgm> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Pgm("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_number(token: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pgm(format!("bad {what}: {:?}", String::from_utf8_lossy(token))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_bit_exact() {
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = encode_gray8(&img);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 1, 2, 253, 254, 255]);

        let b16 = encode_gray16(2, 1, &[0x0102, 0xfffe]);
        assert_eq!(b16, b"P5\n2 1\n65535\n\x01\x02\xff\xfe".to_vec());
    }

    #[test]
    fn decode_skips_comments() {
        let bytes = b"P5 # made by hand\n2 # width\n 1\n255\n\x07\x08";
        let pgm = decode(bytes).unwrap();
        assert_eq!((pgm.width, pgm.height, pgm.maxval), (2, 1, 255));
        assert_eq!(pgm.samples, vec![7, 8]);
    }

    #[test]
    fn decode_rejects_bad_input() {
        assert!(decode(b"P2\n1 1\n255\n\x00").is_err());
        assert!(decode(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode(b"P5\n1 1\n100\n\xff").is_err());
        assert!(decode(b"P5\n1 1").is_err());
    }

    #[test]
    fn quantize_rescales_bright_images() {
        let img = Image::from_vec(2, 1, vec![131070.0, -3.0]).unwrap();
        let (s, scale) = quantize16(&img);
        assert_eq!(scale, 2.0);
        assert_eq!(s, vec![65535, 0]);
    }

    proptest! {
        #[test]
        fn gray8_round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            let back = decode(&encode_gray8(&img)).unwrap().to_gray8();
            prop_assert_eq!(back, img);
        }

        #[test]
        fn gray16_round_trip(samples in proptest::collection::vec(any::<u16>(), 1..64)) {
            let n = samples.len();
            let pgm = decode(&encode_gray16(n, 1, &samples)).unwrap();
            prop_assert_eq!(pgm.samples, samples);
        }
    }
}
