use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::{expect_end, read_dims, read_exact, read_f64s, write_dims};
use crate::error::{Error, Result};
use crate::spectral::EigenBasis;
use crate::tensor::KernelShape;

const MAGIC: &[u8; 4] = b"EBAS";
const FORMAT: &str = "EBAS";

/// `EBAS`, u32 order, kernel dims as u32, k eigenvalues, then `K` as k*k
/// column-major f64; all little-endian.
pub fn read_ebas(r: &mut impl Read) -> Result<EigenBasis> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, FORMAT)?;
    if &magic != MAGIC {
        return Err(Error::Format {
            format: FORMAT,
            reason: format!("bad magic {magic:?}"),
        });
    }
    let dims = read_dims(r, FORMAT)?;
    let ks = KernelShape::new(dims).map_err(|e| Error::Format {
        format: FORMAT,
        reason: e.to_string(),
    })?;
    let k = ks.size();
    let eigenvalues = read_f64s(r, k, FORMAT)?;
    let entries = read_f64s(r, k * k, FORMAT)?;
    expect_end(r, FORMAT)?;
    EigenBasis::new(ks, DMatrix::from_vec(k, k, entries), eigenvalues)
}

pub fn write_ebas(w: &mut impl Write, basis: &EigenBasis) -> Result<()> {
    w.write_all(MAGIC)?;
    write_dims(w, basis.kernel_shape().dims(), FORMAT)?;
    for v in basis.eigenvalues() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in basis.matrix().as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_column_major_layout() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let k = DMatrix::from_row_slice(2, 2, &[c, -c, c, c]);
        let basis = EigenBasis::new(KernelShape::new(vec![2]).unwrap(), k, vec![2.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_ebas(&mut buf, &basis).unwrap();
        assert_eq!(&buf[..4], b"EBAS");
        assert_eq!(buf.len(), 4 + 4 + 4 + 2 * 8 + 4 * 8);
        // first stored matrix entry is K[0,0], second is K[1,0]
        let second = f64::from_le_bytes(buf[36..44].try_into().unwrap());
        assert_eq!(second, c);
        assert_eq!(read_ebas(&mut &buf[..]).unwrap(), basis);
        assert!(read_ebas(&mut &buf[..20]).is_err());
    }
}
