//! File formats: `TNSR` tensors, `EBAS` eigenbases, binary PGM images and
//! JSON documents.

mod ebas;
mod pgm;
mod tnsr;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use ebas::{read_ebas, write_ebas};
pub use pgm::{read_pgm, write_pgm, BitDepth};
pub use tnsr::{read_tnsr, write_tnsr};

use crate::error::{Error, Result};
use crate::spectral::EigenBasis;
use crate::tensor::DenseTensor;

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tnsr(&mut BufReader::new(File::open(path)?))
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tnsr(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<EigenBasis> {
    read_ebas(&mut BufReader::new(File::open(path)?))
}

pub fn save_basis(path: impl AsRef<Path>, b: &EigenBasis) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ebas(&mut w, b)?;
    w.flush()?;
    Ok(())
}

/// Reads a PGM (or PPM, converted to gray) image normalized to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_pgm(&mut BufReader::new(File::open(path)?))
}

pub fn save_image(path: impl AsRef<Path>, t: &DenseTensor, depth: BitDepth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(&mut w, t, depth)?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Stacks equally-shaped frames along a new leading axis.
pub fn stack_frames(frames: &[DenseTensor]) -> Result<DenseTensor> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames to stack".into()))?;
    let mut dims = vec![frames.len()];
    dims.extend_from_slice(first.dims());
    let mut values = Vec::with_capacity(first.len() * frames.len());
    for f in frames {
        first.check_same_dims(f)?;
        values.extend_from_slice(f.values());
    }
    DenseTensor::new(dims, values)
}

fn read_u32(r: &mut impl Read, format: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, format)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize, format: &'static str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| truncated(format))?];
    read_exact(r, &mut bytes, format)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], format: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => truncated(format),
        _ => Error::Io(e),
    })
}

fn expect_end(r: &mut impl Read, format: &'static str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Format {
            format,
            reason: "trailing bytes after payload".into(),
        }),
    }
}

fn truncated(format: &'static str) -> Error {
    Error::Format {
        format,
        reason: "unexpected end of data".into(),
    }
}

fn read_dims(r: &mut impl Read, format: &'static str) -> Result<Vec<usize>> {
    let order = read_u32(r, format)? as usize;
    if order == 0 || order > 32 {
        return Err(Error::Format {
            format,
            reason: format!("unsupported order {order}"),
        });
    }
    (0..order)
        .map(|_| read_u32(r, format).map(|d| d as usize))
        .collect()
}

fn write_dims(w: &mut impl Write, dims: &[usize], format: &'static str) -> Result<()> {
    let as_u32 = |d: usize| {
        u32::try_from(d).map_err(|_| Error::Format {
            format,
            reason: format!("dimension {d} does not fit in u32"),
        })
    };
    w.write_all(&as_u32(dims.len())?.to_le_bytes())?;
    for &d in dims {
        w.write_all(&as_u32(d)?.to_le_bytes())?;
    }
    Ok(())
}
