//! Binary PGM (`P5`, maxval 255).

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image8;

/// `P5\n<w> <h>\n255\n` followed by the row-major payload.
pub fn encode_pgm(img: &Image8) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.as_slice());
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("missing or invalid {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image8> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (magic P5 expected)".into()));
    }
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "maxval {maxval} is not supported, expected 255"
        )));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(Error::Format("header not terminated by whitespace".into())),
    }
    let expected = width * height;
    let payload = &bytes[r.pos..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    Ok(Image8::from_vec(
        width,
        height,
        payload[..expected].to_vec(),
    ))
}

pub fn write_pgm(img: &Image8, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image8> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        let img = Image8::from_vec(2, 2, vec![0, 128, 200, 255]);
        let bytes = encode_pgm(&img);
        assert_eq!(bytes.len(), 11 + 4);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn full_size_payload() {
        let img = Image8::new(512, 512);
        let bytes = encode_pgm(&img);
        assert_eq!(bytes.len() - b"P5\n512 512\n255\n".len(), 262_144);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\0\0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_pgm(b"P5\n2"), Err(Error::Format(_))));
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode_pgm(b"P5\n# made by hand\n1 2\n255\n\x07\x09").unwrap();
        assert_eq!(img.as_slice(), &[7, 9]);
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = Image8::from_fn(w, h, |x, y| (crate::rng::mix64(seed ^ (x * 31 + y) as u64) & 0xFF) as u8);
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
