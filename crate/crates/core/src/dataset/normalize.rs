use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetSplit, FeatureDataset, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    #[default]
    None,
    Zscore,
}

impl std::str::FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "zscore" => Ok(Self::Zscore),
            other => Err(format!("unknown normalization '{other}' (expected none or zscore)")),
        }
    }
}

/// Per-dimension z-score parameters. A zero `std` maps the dimension to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Scaler {
    /// Population mean and standard deviation of each column.
    pub fn fit(data: &FeatureDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(DatasetError::InvalidArgument("cannot fit a scaler on an empty dataset".into()));
        }
        let mean = data.features().mean_axis(Axis(0)).expect("non-empty");
        let std = data.features().std_axis(Axis(0), 0.0);
        Ok(Self { mean, std })
    }

    pub fn transform(&self, data: &FeatureDataset) -> FeatureDataset {
        let mut x = data.features().clone();
        for mut row in x.outer_iter_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        data.with_features(x)
    }
}

/// Fits a scaler on the train part only and applies it to all three parts.
pub fn normalize_features(split: &DatasetSplit, mode: NormalizeMode) -> Result<(DatasetSplit, Option<Scaler>)> {
    match mode {
        NormalizeMode::None => Ok((split.clone(), None)),
        NormalizeMode::Zscore => {
            let scaler = Scaler::fit(&split.train)?;
            let out = DatasetSplit {
                train: scaler.transform(&split.train),
                validation: scaler.transform(&split.validation),
                test: scaler.transform(&split.test),
                ratios: split.ratios,
                seed: split.seed,
            };
            Ok((out, Some(scaler)))
        }
    }
}
