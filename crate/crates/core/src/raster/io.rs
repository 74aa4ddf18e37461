//! PGM (P2/P5) and 8-bit grayscale PNG reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{GrayImage, Grid, Mask, MIN_DIM};
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a PGM or PNG file, normalizing intensities by the file's maxval.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes)
}

/// Loads an image and thresholds it: any non-zero pixel is inside.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_image(path)?;
    let (w, h) = img.dims();
    Mask::new(w, h, img.values().iter().map(|&v| v > 0.0).collect())
}

pub(crate) fn decode(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        let shown: String = bytes.iter().take(2).map(|&b| b as char).collect();
        Err(Error::UnsupportedFormat(format!("unrecognized magic {shown:?}")))
    }
}

/// Cursor over the whitespace/comment separated PGM header.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = bytes[1] == b'5';
    let mut tok = Tokens { bytes, pos: 2 };
    let width = tok.next_uint("width")? as usize;
    let height = tok.next_uint("height")? as usize;
    let maxval = tok.next_uint("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} not in 1..=65535")));
    }
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::TooSmall { width, height });
    }
    let n = width * height;
    let mut raw = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = tok.pos + 1;
        let sample = if maxval < 256 { 1 } else { 2 };
        let need = n * sample;
        let body = bytes.get(start..start + need).ok_or_else(|| {
            Error::MalformedHeader(format!("raster holds fewer than {n} samples"))
        })?;
        if sample == 1 {
            raw.extend(body.iter().map(|&b| b as u64));
        } else {
            raw.extend(body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u64));
        }
    } else {
        for k in 0..n {
            let v = tok.next_uint("sample").map_err(|_| {
                Error::MalformedHeader(format!("expected {n} samples, found {k}"))
            })?;
            raw.push(v);
        }
    }
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::MalformedHeader(format!("sample {v} exceeds maxval {maxval}")));
    }
    let scale = maxval as f64;
    GrayImage::new(width, height, raw.into_iter().map(|v| v as f64 / scale).collect())
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedHeader("png frame too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "png must be 8-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    if w < MIN_DIM || h < MIN_DIM {
        return Err(Error::TooSmall { width: w, height: h });
    }
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        data.extend(row[..w].iter().map(|&b| b as f64 / 255.0));
    }
    GrayImage::new(w, h, data)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub(crate) fn encode(width: usize, height: usize, pixels: &[u8], as_png: bool) -> Result<Vec<u8>> {
    if !as_png {
        let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
        out.extend_from_slice(pixels);
        return Ok(out);
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
        writer
            .write_image_data(pixels)
            .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    }
    Ok(out)
}

fn write_pixels(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let bytes = encode(width, height, pixels, is_png(path))?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Writes an image as PNG when the extension is `.png`, binary PGM otherwise.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let pixels: Vec<u8> = img.values().iter().map(|&v| quantize(v)).collect();
    write_pixels(path.as_ref(), img.width(), img.height(), &pixels)
}

/// Writes a mask with `0` outside and `255` inside.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let pixels: Vec<u8> = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_pixels(path.as_ref(), mask.width(), mask.height(), &pixels)
}

/// Writes the image with the front pixels painted in a contrasting tone
/// (black over bright pixels, white over dark ones).
pub fn save_overlay(img: &GrayImage, front: &Mask, path: impl AsRef<Path>) -> Result<()> {
    if img.dims() != front.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: front.dims(),
        });
    }
    let pixels: Vec<u8> = img
        .values()
        .iter()
        .zip(front.as_slice())
        .map(|(&v, &on)| match (on, v > 0.5) {
            (false, _) => quantize(v),
            (true, true) => 0,
            (true, false) => 255,
        })
        .collect();
    write_pixels(path.as_ref(), img.width(), img.height(), &pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(header: &str, values: &[u32]) -> Vec<u8> {
        let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        format!("{header}\n{}\n", body.join(" ")).into_bytes()
    }

    #[test]
    fn ascii_pgm_normalizes_by_maxval() {
        let white = decode(&p2("P2\n3 3\n255", &[255; 9])).unwrap();
        assert!(white.values().iter().all(|&v| v == 1.0));
        let black = decode(&p2("P2\n# comment\n3 3\n255", &[0; 9])).unwrap();
        assert!(black.values().iter().all(|&v| v == 0.0));
        let mid = decode(&p2("P2 3 3 4", &[0, 1, 2, 3, 4, 0, 0, 0, 0])).unwrap();
        assert_eq!(mid.at(2, 0), 0.5);
    }

    #[test]
    fn short_ascii_raster_is_malformed() {
        let err = decode(&p2("P2\n4 4\n255", &[7; 15])).unwrap_err();
        assert!(matches!(err, Error::MalformedHeader(_)), "{err}");
    }

    #[test]
    fn header_errors() {
        assert!(matches!(decode(b"P2\n3\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(&p2("P2 2 2 255", &[0; 4])), Err(Error::TooSmall { .. })));
        assert!(matches!(decode(&p2("P2 3 3 0", &[0; 9])), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(&p2("P2 3 3 9", &[10; 9])), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn binary_pgm_with_sixteen_bit_samples() {
        let mut bytes = b"P5\n3 3\n65535\n".to_vec();
        for k in 0..9u16 {
            bytes.extend_from_slice(&(k * 8191).to_be_bytes());
        }
        let img = decode(&bytes).unwrap();
        assert_eq!(img.at(0, 0), 0.0);
        assert!((img.at(2, 2) - 65528.0 / 65535.0).abs() < 1e-15);
    }

    #[test]
    fn png_round_trip_and_rejects_color() {
        let pixels: Vec<u8> = (0..12).map(|k| (k * 20) as u8).collect();
        let bytes = encode(4, 3, &pixels, true).unwrap();
        let img = decode(&bytes).unwrap();
        assert_eq!(img.dims(), (4, 3));
        assert_eq!(img.at(1, 1), 100.0 / 255.0);

        let mut rgb = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut rgb, 3, 3);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[0; 27]).unwrap();
        }
        assert!(matches!(decode(&rgb), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn masks_round_trip_through_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mask = Mask::from_fn(7, 5, |x, y| (x + 2 * y) % 3 == 0).unwrap();
        for name in ["m.pgm", "m.png"] {
            let path = dir.path().join(name);
            save_mask(&mask, &path).unwrap();
            assert_eq!(load_mask(&path).unwrap(), mask);
        }
        let zero = Mask::empty(4, 4);
        let path = dir.path().join("z.pgm");
        save_mask(&zero, &path).unwrap();
        assert!(load_image(&path).unwrap().values().iter().all(|&v| v == 0.0));
        let full = Mask::from_fn(4, 4, |_, _| true).unwrap();
        save_mask(&full, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes[bytes.len() - 16..].iter().all(|&b| b == 255));
    }

    #[test]
    fn overlay_checks_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::filled(5, 5, 0.2).unwrap();
        let front = Mask::empty(5, 4);
        assert!(save_overlay(&img, &front, dir.path().join("o.pgm")).is_err());
        let mut front = Mask::empty(5, 5);
        front.set(2, 2, true);
        let path = dir.path().join("o.pgm");
        save_overlay(&img, &front, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.at(2, 2), 1.0);
        assert_eq!(back.at(0, 0), 51.0 / 255.0);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_image("/nonexistent/x.pgm"), Err(Error::Io { .. })));
    }
}
