//! Binary PGM (P5) and PPM (P6) images with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};

/// Planar 8-bit image: one channel for PGM, three (R, G, B) for PPM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<u8>>,
}

impl Image {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Channel as a row-major real vector scaled to [0, 1].
    pub fn channel_signal(&self, c: usize) -> Vec<f64> {
        self.channels[c].iter().map(|&p| p as f64 / 255.0).collect()
    }

    /// Quantize a [0, 1] channel back to 8 bits, clamping out-of-range values.
    pub fn quantize(values: &[f64]) -> Vec<u8> {
        values.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect()
    }
}

fn bad(msg: &str) -> Error {
    Error::Image(msg.to_string())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected a decimal header field"))
    }
}

/// Decode a binary PGM or PPM image.
pub fn parse_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(bad("missing P5/P6 magic"));
    }
    let nch = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        _ => return Err(bad("only binary P5 and P6 images are supported")),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err(bad("image has zero size"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images (maxval 1..=255) are supported"));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(bad("header must end with a single whitespace byte"));
    }
    let data = &bytes[h.pos + 1..];
    let count = width * height * nch;
    if data.len() < count {
        return Err(bad("truncated pixel data"));
    }
    let scale = |p: u8| if maxval == 255 { p } else { ((p as usize * 255 + maxval / 2) / maxval) as u8 };
    let channels = (0..nch).map(|c| data[..count].iter().skip(c).step_by(nch).map(|&p| scale(p)).collect()).collect();
    Ok(Image { width, height, channels })
}

/// Encode as P5 (one channel) or P6 (three channels).
pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels.len() {
        1 => "P5",
        3 => "P6",
        _ => return Err(bad("images must have one or three channels")),
    };
    if img.channels.iter().any(|c| c.len() != img.pixels()) {
        return Err(bad("channel length does not match width*height"));
    }
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    for i in 0..img.pixels() {
        out.extend(img.channels.iter().map(|c| c[i]));
    }
    Ok(out)
}

pub fn read_pnm(path: &Path) -> Result<Image> {
    parse_pnm(&std::fs::read(path)?)
}

pub fn write_pnm(path: &Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode_pnm(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_gray_and_color() {
        let gray = Image { width: 3, height: 2, channels: vec![vec![0, 10, 20, 30, 40, 255]] };
        assert_eq!(parse_pnm(&encode_pnm(&gray).unwrap()).unwrap(), gray);
        let rgb = Image { width: 2, height: 1, channels: vec![vec![1, 2], vec![3, 4], vec![5, 6]] };
        let bytes = encode_pnm(&rgb).unwrap();
        assert_eq!(&bytes[bytes.len() - 6..], &[1, 3, 5, 2, 4, 6]);
        assert_eq!(parse_pnm(&bytes).unwrap(), rgb);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut b = b"P5\n# made by hand\n2 1\n# depth\n255\n".to_vec();
        b.extend([7, 9]);
        assert_eq!(parse_pnm(&b).unwrap().channels[0], vec![7, 9]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_pnm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pnm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_pnm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(parse_pnm(b"P5\n0 1\n255\n").is_err());
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(Image::quantize(&[-0.2, 0.5, 1.3]), vec![0, 128, 255]);
    }
}
