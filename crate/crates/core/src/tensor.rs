//! Dense order-n tensors, kernel shapes and sampling masks.
//!
//! Storage is row-major (last index fastest) everywhere in the crate, and
//! `vec(X)` for a kernel-shaped tensor uses the same flattening.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidDims(dims.to_vec()))
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        out[j] = out[j + 1] * dims[j + 1];
    }
    out
}

/// Writes the multi-index of flat position `flat` into `out`.
pub fn unravel(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        out[j] = flat % dims[j];
        flat /= dims[j];
    }
}

pub fn ravel(index: &[usize], dims: &[usize]) -> usize {
    index
        .iter()
        .zip(dims)
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

/// An order-n real tensor with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawTensor> for DenseTensor {
    type Error = Error;
    fn try_from(raw: RawTensor) -> Result<Self> {
        DenseTensor::new(raw.dims, raw.values)
    }
}

impl From<DenseTensor> for RawTensor {
    fn from(t: DenseTensor) -> Self {
        RawTensor {
            dims: t.dims,
            values: t.values,
        }
    }
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let m = check_dims(&dims)?;
        if values.len() != m {
            return Err(Error::LengthMismatch {
                dims,
                expected: m,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let m = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            values: vec![0.0; m],
        })
    }

    pub fn filled(dims: &[usize], value: f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        t.values.fill(value);
        Self::new(t.dims, t.values)
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let m = check_dims(dims)?;
        let mut idx = vec![0; dims.len()];
        let values = (0..m)
            .map(|flat| {
                unravel(flat, dims, &mut idx);
                f(&idx)
            })
            .collect();
        Self::new(dims.to_vec(), values)
    }

    /// Tensor with a single one at the origin and zeros elsewhere.
    pub fn delta(dims: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        t.values[0] = 1.0;
        Ok(t)
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        Self { dims, values }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Number of entries, `m`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[ravel(index, &self.dims)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn scaled(&self, c: f64) -> DenseTensor {
        Self::from_parts_unchecked(self.dims.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        self.check_same_dims(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        DenseTensor::new(self.dims.clone(), values)
    }

    pub fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Zero-pads a kernel-sized tensor into a tensor of `dims`, keeping
    /// entry `s` at multi-index `s`.
    pub fn zero_pad(&self, dims: &[usize]) -> Result<DenseTensor> {
        KernelShape::new(self.dims.clone())?.check_fits(dims)?;
        let mut out = DenseTensor::zeros(dims)?;
        let mut idx = vec![0; self.order()];
        for (flat, &v) in self.values.iter().enumerate() {
            unravel(flat, &self.dims, &mut idx);
            out.values[ravel(&idx, dims)] = v;
        }
        Ok(out)
    }

    /// Reshapes a flat vector into a tensor of `dims` (the inverse of `vec`).
    pub fn unvec(dims: &[usize], values: &[f64]) -> Result<DenseTensor> {
        DenseTensor::new(dims.to_vec(), values.to_vec())
    }
}

/// Kernel size `k_1 x ... x k_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct KernelShape {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for KernelShape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        KernelShape::new(dims)
    }
}

impl From<KernelShape> for Vec<usize> {
    fn from(k: KernelShape) -> Self {
        k.dims
    }
}

impl KernelShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `k`, the number of kernel entries.
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    /// Checks `1 <= k_j <= m_j` for the given tensor dims.
    pub fn check_fits(&self, tensor_dims: &[usize]) -> Result<()> {
        if tensor_dims.len() != self.dims.len() {
            return Err(Error::OrderMismatch {
                tensor: tensor_dims.len(),
                kernel: self.dims.len(),
            });
        }
        if self.dims.iter().zip(tensor_dims).any(|(k, m)| k > m) {
            return Err(Error::KernelTooLarge {
                kernel: self.dims.clone(),
                tensor: tensor_dims.to_vec(),
            });
        }
        Ok(())
    }

    /// Kernel offsets in column order of the convolution matrix.
    pub fn offsets(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut idx = vec![0; self.dims.len()];
        (0..self.size()).map(move |flat| {
            unravel(flat, &self.dims, &mut idx);
            idx.clone()
        })
    }
}

impl std::fmt::Display for KernelShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

/// Binary indicator tensor of the observed set.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    tensor: DenseTensor,
    observed: usize,
}

impl SamplingMask {
    pub fn new(tensor: DenseTensor) -> Result<Self> {
        let mut observed = 0;
        for (index, &value) in tensor.values().iter().enumerate() {
            if value == 1.0 {
                observed += 1;
            } else if value != 0.0 {
                return Err(Error::NonBinaryMask { index, value });
            }
        }
        Ok(Self { tensor, observed })
    }

    pub fn from_bools(dims: &[usize], bits: &[bool]) -> Result<Self> {
        let values = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::new(DenseTensor::new(dims.to_vec(), values)?)
    }

    pub fn full(dims: &[usize]) -> Result<Self> {
        Self::new(DenseTensor::filled(dims, 1.0)?)
    }

    pub fn dims(&self) -> &[usize] {
        self.tensor.dims()
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn indicator(&self) -> &[f64] {
        self.tensor.values()
    }

    pub fn is_observed(&self, flat: usize) -> bool {
        self.tensor.values()[flat] == 1.0
    }

    /// `|Omega|`.
    pub fn observed_count(&self) -> usize {
        self.observed
    }

    /// Sampling rate `|Omega| / m`.
    pub fn rate(&self) -> f64 {
        self.observed as f64 / self.len() as f64
    }

    /// Orthogonal projection onto the observed entries.
    pub fn project(&self, t: &DenseTensor) -> Result<DenseTensor> {
        self.tensor.check_same_dims(t)?;
        Ok(DenseTensor::from_parts_unchecked(
            t.dims().to_vec(),
            t.values()
                .iter()
                .zip(self.indicator())
                .map(|(v, w)| v * w)
                .collect(),
        ))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
