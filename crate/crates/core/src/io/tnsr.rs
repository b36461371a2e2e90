use std::io::{Read, Write};

use super::{expect_end, read_dims, read_exact, read_f64s, write_dims};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

const MAGIC: &[u8; 4] = b"TNSR";
const FORMAT: &str = "TNSR";

/// `TNSR`, u32 order, order x u32 dims, then row-major f64 values; all
/// little-endian, no padding.
pub fn read_tnsr(r: &mut impl Read) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, FORMAT)?;
    if &magic != MAGIC {
        return Err(Error::Format {
            format: FORMAT,
            reason: format!("bad magic {magic:?}"),
        });
    }
    let dims = read_dims(r, FORMAT)?;
    let m = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .filter(|&m| m > 0)
        .ok_or_else(|| Error::Format {
            format: FORMAT,
            reason: format!("invalid dims {dims:?}"),
        })?;
    let values = read_f64s(r, m, FORMAT)?;
    expect_end(r, FORMAT)?;
    DenseTensor::new(dims, values)
}

pub fn write_tnsr(w: &mut impl Write, t: &DenseTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    write_dims(w, t.dims(), FORMAT)?;
    for v in t.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
