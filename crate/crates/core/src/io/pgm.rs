use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

const FORMAT: &str = "PNM";

/// Sample depth of a written PGM file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        format: FORMAT,
        reason: reason.into(),
    }
}

fn next_byte(r: &mut impl BufRead) -> Result<Option<u8>> {
    let buf = r.fill_buf()?;
    let b = buf.first().copied();
    if b.is_some() {
        r.consume(1);
    }
    Ok(b)
}

/// Reads one ASCII header integer, skipping whitespace and `#` comments.
/// Consumes exactly one whitespace byte after the digits.
fn header_number(r: &mut impl BufRead) -> Result<u32> {
    let mut b = next_byte(r)?.ok_or_else(|| bad("truncated header"))?;
    loop {
        if b == b'#' {
            while b != b'\n' {
                b = next_byte(r)?.ok_or_else(|| bad("truncated header"))?;
            }
        } else if !b.is_ascii_whitespace() {
            break;
        }
        b = next_byte(r)?.ok_or_else(|| bad("truncated header"))?;
    }
    let mut value: u32 = 0;
    let mut digits = 0;
    while b.is_ascii_digit() {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(u32::from(b - b'0')))
            .ok_or_else(|| bad("header number overflows"))?;
        digits += 1;
        match next_byte(r)? {
            Some(nb) => b = nb,
            None => break,
        }
    }
    if digits == 0 {
        return Err(bad(format!("unexpected byte {b:#04x} in header")));
    }
    Ok(value)
}

/// Reads binary PGM (`P5`, 8 or 16 bit) into a `[height, width]` tensor
/// scaled to `[0, 1]`. Binary PPM (`P6`) is accepted and converted to gray
/// with Rec. 601 luma weights.
pub fn read_pgm(r: &mut impl BufRead) -> Result<DenseTensor> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic).map_err(|_| bad("missing magic"))?;
    let channels = match &magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(bad(format!("unsupported magic {:?}", String::from_utf8_lossy(&magic)))),
    };
    let width = header_number(r)? as usize;
    let height = header_number(r)? as usize;
    let maxval = header_number(r)?;
    if width == 0 || height == 0 {
        return Err(bad("zero image size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad(format!("maxval {maxval} out of range")));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let n = width * height * channels;
    let mut raw = vec![0u8; n * bytes_per];
    r.read_exact(&mut raw).map_err(|_| bad("truncated pixel data"))?;
    let samples: Vec<f64> = if bytes_per == 1 {
        raw.iter().map(|&b| f64::from(b)).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    };
    let scale = 1.0 / f64::from(maxval);
    let values = if channels == 1 {
        samples.iter().map(|v| (v * scale).min(1.0)).collect()
    } else {
        samples
            .chunks_exact(3)
            .map(|p| ((0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) * scale).min(1.0))
            .collect()
    };
    DenseTensor::new(vec![height, width], values)
}

/// Writes an order-2 tensor as binary PGM, clamping to `[0, 1]`.
pub fn write_pgm(w: &mut impl Write, t: &DenseTensor, depth: BitDepth) -> Result<()> {
    let [height, width] = t.dims() else {
        return Err(Error::ShapeMismatch(format!(
            "PGM needs an order-2 tensor, got dims {:?}",
            t.dims()
        )));
    };
    let maxval = depth.maxval();
    write!(w, "P5\n{width} {height}\n{maxval}\n")?;
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * f64::from(maxval)).round() as u16;
    match depth {
        BitDepth::Eight => {
            let bytes: Vec<u8> = t.values().iter().map(|&v| quantize(v) as u8).collect();
            w.write_all(&bytes)?;
        }
        BitDepth::Sixteen => {
            let bytes: Vec<u8> = t
                .values()
                .iter()
                .flat_map(|&v| quantize(v).to_be_bytes())
                .collect();
            w.write_all(&bytes)?;
        }
    }
    Ok(())
}
