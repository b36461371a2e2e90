//! Fixed benchmark instances shared by the criterion benches.

use icnnm::synth::{crop, dead_leaves};
use icnnm::{generate_mask, learn_ensemble_basis, DenseTensor, EigenBasis, KernelShape, MaskSpec, SamplingMask};

pub struct ImageInstance {
    pub target: DenseTensor,
    pub observed: DenseTensor,
    pub mask: SamplingMask,
    pub kernel: KernelShape,
    pub basis: EigenBasis,
}

/// A `size`x`size` dead-leaves crop with half of its 2x2 blocks missing and a
/// basis learned from four neighbouring crops.
pub fn image_instance(size: usize, kernel: usize, seed: u64) -> ImageInstance {
    let img = dead_leaves(size * 5, size, seed).unwrap();
    let crops: Vec<DenseTensor> = (0..5).map(|i| crop(&img, i * size, 0, size, size).unwrap()).collect();
    let ks = KernelShape::new(vec![kernel, kernel]).unwrap();
    let basis = learn_ensemble_basis(&crops[1..], &ks).unwrap();
    let target = crops[0].clone();
    let mask = generate_mask(&[size, size], &MaskSpec::BlockGrid { rate: 0.5, block: 2, seed }).unwrap();
    let observed = mask.project(&target).unwrap();
    ImageInstance { target, observed, mask, kernel: ks, basis }
}
