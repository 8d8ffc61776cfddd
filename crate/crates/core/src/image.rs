//! Grayscale PGM images, +/-1 binarization and reconstruction layers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::{reconstruct, DataMatrix, PrincipalComponent};
use crate::spectrum::SpectrumResult;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageMatrix {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
}

impl ImageMatrix {
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments running to end of line.
    fn skip_space(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Option<u32> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse().ok()
    }
}

/// Parses a plain (`P2`) or raw (`P5`) PGM image.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageMatrix> {
    let magic = bytes.get(..2).ok_or_else(|| Error::MalformedHeader("file too short".into()))?;
    let raw = match magic {
        b"P2" => false,
        b"P5" => true,
        other => return Err(Error::UnsupportedMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let mut field = |name: &str| {
        cur.number()
            .ok_or_else(|| Error::MalformedHeader(format!("missing or invalid {name}")))
    };
    let width = field("width")? as usize;
    let height = field("height")? as usize;
    let maxval = field("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} outside 1..=65535")));
    }
    let maxval = maxval as u16;
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if raw {
        // exactly one whitespace byte separates maxval from the raster
        if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::MalformedHeader("no whitespace after maxval".into()));
        }
        let data = &bytes[cur.pos + 1..];
        let wide = maxval > 255;
        let per = if wide { 2 } else { 1 };
        if data.len() < count * per {
            return Err(Error::TruncatedPixels {
                expected: count,
                found: data.len() / per,
            });
        }
        if wide {
            pixels.extend(data.chunks_exact(2).take(count).map(|b| u16::from_be_bytes([b[0], b[1]])));
        } else {
            pixels.extend(data[..count].iter().map(|&b| b as u16));
        }
    } else {
        while pixels.len() < count {
            match cur.number() {
                Some(v) if v <= maxval as u32 => pixels.push(v as u16),
                Some(v) => {
                    return Err(Error::MalformedHeader(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )))
                }
                None => {
                    cur.skip_space();
                    if cur.pos < bytes.len() {
                        return Err(Error::MalformedHeader(format!(
                            "invalid sample at byte {}",
                            cur.pos
                        )));
                    }
                    return Err(Error::TruncatedPixels {
                        expected: count,
                        found: pixels.len(),
                    });
                }
            }
        }
    }
    if pixels.iter().any(|&p| p > maxval) {
        return Err(Error::MalformedHeader(format!("sample exceeds maxval {maxval}")));
    }
    Ok(ImageMatrix {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Encodes as raw `P5` (two big-endian bytes per sample when maxval > 255).
pub fn encode_pgm(img: &ImageMatrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for p in &img.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&p| p as u8));
    }
    out
}

/// Encodes as plain `P2`, one image row per line.
pub fn encode_pgm_plain(img: &ImageMatrix) -> String {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// `+1` where the pixel is at least `threshold` (default `ceil(maxval / 2)`),
/// `-1` elsewhere; rows are image rows.
pub fn binarize(img: &ImageMatrix, threshold: Option<u32>) -> DataMatrix {
    let t = threshold.unwrap_or((img.maxval as u32).div_ceil(2));
    let data = img
        .pixels
        .iter()
        .map(|&p| if p as u32 >= t { 1.0 } else { -1.0 })
        .collect();
    DataMatrix::new(img.height, img.width, data).expect("image dimensions are positive")
}

/// Min-max maps a real matrix onto `0..=255` (a constant matrix maps to 0).
pub fn to_grayscale(a: &DataMatrix) -> ImageMatrix {
    let (lo, hi) = a
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let span = hi - lo;
    let pixels = a
        .as_slice()
        .iter()
        .map(|&x| {
            if span > 0.0 {
                ((x - lo) / span * 255.0).round() as u16
            } else {
                0
            }
        })
        .collect();
    ImageMatrix {
        width: a.cols(),
        height: a.rows(),
        maxval: 255,
        pixels,
    }
}

fn block_sign(bi: usize, bj: usize, salt: u32) -> f64 {
    let mut x = (bi as u32).wrapping_mul(73_856_093)
        ^ (bj as u32).wrapping_mul(19_349_663)
        ^ salt.wrapping_mul(83_492_791);
    x ^= x >> 13;
    x = x.wrapping_mul(0x5bd1_e995);
    x ^= x >> 15;
    if x & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Deterministic binary test image with structure at three scales: one
/// off-center rectangle spanning most of the frame, a 16-pixel block
/// pattern and a 4-pixel block pattern, combined by majority vote.
pub fn synthetic_test_image(size: usize) -> ImageMatrix {
    let s = size as f64 / 64.0;
    let scaled = |v: f64| (v * s).round() as usize;
    let (r0, r1, c0, c1) = (scaled(10.0), scaled(50.0), scaled(6.0), scaled(40.0));
    let mid = (size / 4).max(1);
    let small = (size / 16).max(1);
    let mut pixels = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let big = if (r0..r1).contains(&i) && (c0..c1).contains(&j) { 1.0 } else { -1.0 };
            let vote = big + block_sign(i / mid, j / mid, 1) + block_sign(i / small, j / small, 2);
            pixels.push(if vote > 0.0 { 255 } else { 0 });
        }
    }
    ImageMatrix {
        width: size,
        height: size,
        maxval: 255,
        pixels,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
}

/// `sqrt(lambda) u vᵀ` for one component.
pub fn component_layer(c: &PrincipalComponent) -> Result<DataMatrix> {
    DataMatrix::outer(c.sigma, &c.u, &c.v)
}

/// Writes `component_j.pgm`, `partial_j.pgm` and `spectrum.csv` into `out_dir`.
pub fn emit_reconstructions(
    a: &DataMatrix,
    result: &SpectrumResult,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if result.components.is_empty() {
        return Err(Error::InvalidParameter("no components to emit".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut csv = String::from("j,lambda,sigma\n");
    for (j, c) in result.components.iter().enumerate() {
        let layer = component_layer(c)?;
        let partial = reconstruct(a.shape(), &result.components, j + 1)?;
        for (name, m) in [("component", &layer), ("partial", &partial)] {
            let path = out_dir.join(format!("{name}_{j}.pgm"));
            write_atomic(&path, &encode_pgm(&to_grayscale(m)))?;
            written.push(path);
        }
        let _ = writeln!(csv, "{j},{},{}", c.lambda, c.sigma);
    }
    let path = out_dir.join("spectrum.csv");
    write_atomic(&path, csv.as_bytes())?;
    written.push(path);
    Ok(written)
}
