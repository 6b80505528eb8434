use rand::seq::SliceRandom;

use super::{DatasetError, FeatureDataset, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = Self { train, validation, test };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(DatasetError::InvalidArgument(format!("split ratios must be non-negative, got {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidArgument(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: FeatureDataset,
    pub validation: FeatureDataset,
    pub test: FeatureDataset,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.train.n_classes()
    }
}

/// Integer part sizes for `n` items: floor of each share, then the leftover
/// items go to the largest fractional remainders (ties to the earlier part).
fn allocate(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for i in 0..3 {
        sizes[i] = (exact[i] + 1e-9).floor() as usize;
    }
    let mut assigned: usize = sizes.iter().sum();
    while assigned > n {
        // only reachable through the epsilon above
        let i = (0..3).rev().find(|&i| sizes[i] > 0).unwrap();
        sizes[i] -= 1;
        assigned -= 1;
    }
    let mut order: Vec<usize> = (0..3).filter(|&i| ratios[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n - assigned) {
        sizes[i] += 1;
    }
    sizes
}

/// Partitions `dataset` into train / validation / test.
///
/// Stratified splits allocate each class separately, so every part's class
/// counts are within one record of the exact proportion. Records are shuffled
/// with `seed` before allocation and each part keeps the parent's row order.
pub fn split(dataset: &FeatureDataset, ratios: SplitRatios, seed: u64, stratified: bool) -> Result<DatasetSplit> {
    ratios.validate()?;
    let r = ratios.as_array();
    let mut rng = rng::seeded(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let mut g = vec![Vec::new(); dataset.n_classes()];
        for (i, &l) in dataset.labels().iter().enumerate() {
            g[l].push(i);
        }
        g
    } else {
        vec![(0..dataset.len()).collect()]
    };

    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut group in groups {
        group.shuffle(&mut rng);
        let sizes = allocate(group.len(), r);
        let mut start = 0;
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend_from_slice(&group[start..start + size]);
            start += size;
        }
    }
    const NAMES: [&str; 3] = ["train", "validation", "test"];
    for (i, part) in parts.iter_mut().enumerate() {
        if part.is_empty() && r[i] > 0.0 {
            return Err(DatasetError::EmptySplitPart { part: NAMES[i] });
        }
        part.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(DatasetSplit {
        train: dataset.select(&train),
        validation: dataset.select(&validation),
        test: dataset.select(&test),
        ratios,
        seed,
    })
}
