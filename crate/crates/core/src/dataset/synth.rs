use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{default_class_names, DatasetError, FeatureDataset, Result};
use crate::rng;

/// Parameters for [`synthesize_blobs`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n_per_class: usize,
    pub dim: usize,
    pub n_classes: usize,
    /// Minimum Euclidean distance between any two class centroids.
    pub separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { n_per_class: 100, dim: 512, n_classes: 3, separation: 5.0, noise_sigma: 1.0, seed: 0 }
    }
}

/// Isotropic Gaussian clusters, one per class, records grouped by class.
///
/// Centroids: when `K <= D` they are `separation / sqrt(2)` times an
/// orthonormal set obtained by Gram-Schmidt on Gaussian draws, so every pair is
/// exactly `separation` apart (scaled up by 1e-9 relative to absorb rounding).
/// When `K > D`, centroids are drawn uniformly in a cube by rejection, growing
/// the cube after repeated failures. Every value is rounded to `f32` so the
/// dataset round-trips through the binary format exactly.
pub fn synthesize_blobs(spec: &BlobSpec) -> Result<FeatureDataset> {
    let BlobSpec { n_per_class, dim, n_classes: k, separation, noise_sigma, seed } = *spec;
    if n_per_class == 0 || dim == 0 || k == 0 {
        return Err(DatasetError::InvalidArgument("counts must be at least 1".into()));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(DatasetError::InvalidArgument("separation must be positive".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(DatasetError::InvalidArgument("noise_sigma must be non-negative".into()));
    }
    if k > u16::MAX as usize {
        return Err(DatasetError::InvalidArgument("too many classes".into()));
    }

    let mut rng = rng::seeded(seed);
    let centroids = place_centroids(k, dim, separation, &mut rng);

    let n = n_per_class * k;
    let mut features = Array2::<f64>::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (c, centroid) in centroids.iter().enumerate() {
        for i in 0..n_per_class {
            let mut row = features.row_mut(c * n_per_class + i);
            for (v, &mu) in row.iter_mut().zip(centroid) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = (mu + noise_sigma * z) as f32 as f64;
            }
            labels.push(c);
        }
    }
    FeatureDataset::new(features, labels, &default_class_names(k), "synthetic")
}

fn place_centroids<R: Rng>(k: usize, dim: usize, separation: f64, rng: &mut R) -> Vec<Vec<f64>> {
    if k <= dim {
        let scale = separation / std::f64::consts::SQRT_2 * (1.0 + 1e-9);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
        while basis.len() < k {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        // Separation holds for the f64 centroids; stored rows are f32-rounded.
        basis.into_iter().map(|b| b.into_iter().map(|x| x * scale).collect()).collect()
    } else {
        let mut half_width = separation * (k as f64).powf(1.0 / dim as f64);
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut failures = 0;
        while out.len() < k {
            let cand: Vec<f64> = (0..dim).map(|_| rng.random_range(-half_width..half_width)).collect();
            let ok = out.iter().all(|c| euclid(c, &cand) >= separation);
            if ok {
                out.push(cand);
                failures = 0;
            } else {
                failures += 1;
                if failures > 1000 {
                    half_width *= 1.5;
                    failures = 0;
                }
            }
        }
        out
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
