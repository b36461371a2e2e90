//! Sampling-mask generators.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{unravel, DenseTensor, SamplingMask};

fn default_block() -> usize {
    2
}

/// How observed entries are chosen. `rate` is always the observed fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaskSpec {
    /// Uniformly random subset of exactly `round(rate * m)` entries.
    Bernoulli { rate: f64, seed: u64 },
    /// Missing entries grouped into `block^n` cells laid out on a regular
    /// lattice; at 50% the missing cells form a checkerboard.
    BlockGrid {
        rate: f64,
        #[serde(default = "default_block")]
        block: usize,
        seed: u64,
    },
    /// Whole frames (slices along `axis`) missing: either the listed
    /// `frames`, or `round((1 - rate) * frames)` random ones.
    FrameMissing {
        #[serde(default)]
        rate: Option<f64>,
        #[serde(default)]
        frames: Option<Vec<usize>>,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        seed: u64,
    },
    /// The last `predict` frames along `axis` are missing.
    TailPrediction {
        predict: usize,
        #[serde(default)]
        axis: usize,
    },
    /// A mask stored as a TNSR file.
    ExplicitFile { path: PathBuf },
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("rate {rate} outside [0, 1]")));
    }
    Ok(())
}

fn check_axis(dims: &[usize], axis: usize) -> Result<usize> {
    dims.get(axis)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("axis {axis} out of range for dims {dims:?}")))
}

fn missing_count(rate: f64, total: usize) -> usize {
    ((1.0 - rate) * total as f64).round() as usize
}

/// Builds the mask described by `spec`; a pure function of its inputs.
pub fn generate_mask(dims: &[usize], spec: &MaskSpec) -> Result<SamplingMask> {
    let m: usize = DenseTensor::zeros(dims)?.len();
    match spec {
        MaskSpec::Bernoulli { rate, seed } => {
            check_rate(*rate)?;
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut bits = vec![true; m];
            for &i in &order[..missing_count(*rate, m)] {
                bits[i] = false;
            }
            SamplingMask::from_bools(dims, &bits)
        }
        MaskSpec::BlockGrid { rate, block, seed } => {
            check_rate(*rate)?;
            if *block == 0 {
                return Err(Error::InvalidArgument("block size must be positive".into()));
            }
            block_grid(dims, *rate, *block, *seed)
        }
        MaskSpec::FrameMissing {
            rate,
            frames,
            axis,
            seed,
        } => {
            let t = check_axis(dims, *axis)?;
            let missing: Vec<usize> = match (rate, frames) {
                (_, Some(list)) => {
                    if let Some(&f) = list.iter().find(|&&f| f >= t) {
                        return Err(Error::InvalidArgument(format!(
                            "frame {f} out of range for {t} frames"
                        )));
                    }
                    list.clone()
                }
                (Some(rate), None) => {
                    check_rate(*rate)?;
                    let mut order: Vec<usize> = (0..t).collect();
                    order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                    order.truncate(missing_count(*rate, t));
                    order
                }
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "frame-missing needs either rate or frames".into(),
                    ))
                }
            };
            frames_mask(dims, *axis, &missing)
        }
        MaskSpec::TailPrediction { predict, axis } => {
            let t = check_axis(dims, *axis)?;
            if *predict > t {
                return Err(Error::InvalidArgument(format!(
                    "cannot predict {predict} of {t} frames"
                )));
            }
            let missing: Vec<usize> = (t - predict..t).collect();
            frames_mask(dims, *axis, &missing)
        }
        MaskSpec::ExplicitFile { path } => {
            let mask = SamplingMask::new(crate::io::load_tensor(path)?)?;
            if mask.dims() != dims {
                return Err(Error::ShapeMismatch(format!(
                    "mask file has dims {:?}, expected {dims:?}",
                    mask.dims()
                )));
            }
            Ok(mask)
        }
    }
}

fn frames_mask(dims: &[usize], axis: usize, missing: &[usize]) -> Result<SamplingMask> {
    let mut gone = vec![false; dims[axis]];
    missing.iter().for_each(|&f| gone[f] = true);
    let t = DenseTensor::from_fn(dims, |idx| if gone[idx[axis]] { 0.0 } else { 1.0 })?;
    SamplingMask::new(t)
}

fn block_grid(dims: &[usize], rate: f64, block: usize, seed: u64) -> Result<SamplingMask> {
    let n = dims.len();
    let grid: Vec<usize> = dims.iter().map(|&d| d.div_ceil(block)).collect();
    let cells: usize = grid.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0; n];
    // Level l contributes the parity of the cell coordinates at scale 2^l;
    // the coarsest-first ordering places level 0 (a checkerboard) first.
    let mut keyed: Vec<(u64, u64, usize)> = (0..cells)
        .map(|c| {
            unravel(c, &grid, &mut idx);
            let key = (0..16).fold(0u64, |acc, level| {
                let parity = idx.iter().map(|&b| b >> level).sum::<usize>() & 1;
                (acc << 1) | parity as u64
            });
            (key, rng.random::<u64>(), c)
        })
        .collect();
    keyed.sort_unstable();

    let m: usize = dims.iter().product();
    let mut remaining = missing_count(rate, m);
    let mut bits = vec![true; m];
    let mut local = vec![0; n];
    for &(_, _, cell) in &keyed {
        if remaining == 0 {
            break;
        }
        unravel(cell, &grid, &mut idx);
        let extent: Vec<usize> = (0..n)
            .map(|j| block.min(dims[j] - idx[j] * block))
            .collect();
        let size: usize = extent.iter().product();
        for e in 0..size {
            if remaining == 0 {
                break;
            }
            unravel(e, &extent, &mut local);
            let flat = (0..n).fold(0, |acc, j| acc * dims[j] + idx[j] * block + local[j]);
            bits[flat] = false;
            remaining -= 1;
        }
    }
    SamplingMask::from_bools(dims, &bits)
}
