use serde::{Deserialize, Serialize};

use super::{HpoError, Result};
use crate::hho::SearchSpace;

/// How an encoded coordinate maps to a hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    /// The coordinate itself.
    Linear,
    /// `10^x`.
    Log10,
    /// `x` rounded half-to-even.
    Integer,
    /// `2^x` with `x` rounded half-to-even.
    Pow2,
}

/// One searched coordinate; bounds are on the encoded scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperDim {
    pub name: String,
    pub kind: ParamKind,
    pub low: f64,
    pub high: f64,
}

impl HyperDim {
    fn new(name: &str, kind: ParamKind, (low, high): (f64, f64)) -> Self {
        Self { name: name.to_string(), kind, low, high }
    }

    /// Encoded coordinate to value, clamping into the bounds first.
    pub fn decode(&self, x: f64) -> f64 {
        let x = x.clamp(self.low, self.high);
        match self.kind {
            ParamKind::Linear => x,
            ParamKind::Log10 => 10f64.powf(x),
            ParamKind::Integer => x.round_ties_even().clamp(self.low.ceil(), self.high.floor()),
            ParamKind::Pow2 => 2f64.powf(x.round_ties_even().clamp(self.low.ceil(), self.high.floor())),
        }
    }

    /// Value to encoded coordinate such that `decode(encode(v)) == v` whenever
    /// `v` is a value `decode` can produce.
    pub fn encode(&self, v: f64) -> Result<f64> {
        let out = |v: f64| HpoError::OutOfBounds { name: self.name.clone(), value: v };
        if !v.is_finite() {
            return Err(out(v));
        }
        let x = match self.kind {
            ParamKind::Linear => v,
            ParamKind::Integer => {
                if v.fract() != 0.0 {
                    return Err(out(v));
                }
                v
            }
            ParamKind::Pow2 => {
                let e = v.log2();
                if e.fract() != 0.0 || 2f64.powf(e) != v {
                    return Err(out(v));
                }
                e
            }
            ParamKind::Log10 => {
                if v <= 0.0 {
                    return Err(out(v));
                }
                log10_preimage(v, self.low, self.high)
            }
        };
        let (lo, hi) = match self.kind {
            ParamKind::Integer | ParamKind::Pow2 => (self.low.ceil(), self.high.floor()),
            _ => (self.low, self.high),
        };
        if x < lo || x > hi {
            return Err(out(v));
        }
        Ok(x)
    }
}

/// The coordinate whose `10^x` reproduces `v` exactly when one exists near
/// `log10(v)`; otherwise `log10(v)` itself. Bounds are honored when the exact
/// preimage sits on them.
fn log10_preimage(v: f64, low: f64, high: f64) -> f64 {
    let x0 = v.log10();
    if 10f64.powf(low) == v {
        return low;
    }
    if 10f64.powf(high) == v {
        return high;
    }
    let (mut up, mut down) = (x0, x0);
    for _ in 0..=16 {
        if 10f64.powf(up) == v {
            return up;
        }
        if 10f64.powf(down) == v {
            return down;
        }
        up = up.next_up();
        down = down.next_down();
    }
    x0
}

/// Decoded hyperparameters of one candidate network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub hidden_widths: Vec<usize>,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
}

impl HyperParams {
    /// 256/128/64, learning rate 1e-3, dropout 0.5, batch 64.
    pub fn baseline() -> Self {
        Self { hidden_widths: vec![256, 128, 64], learning_rate: 1e-3, dropout_rate: 0.5, batch_size: 64 }
    }
}

/// Encoded-scale bounds of the four searched quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub hidden_layers: usize,
    pub width: (f64, f64),
    pub log10_learning_rate: (f64, f64),
    pub dropout: (f64, f64),
    pub log2_batch: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            width: (32.0, 512.0),
            log10_learning_rate: (-5.0, -1.0),
            dropout: (0.1, 0.7),
            log2_batch: (4.0, 8.0),
        }
    }
}

/// Hidden widths first, then learning rate, dropout and batch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSpace {
    dims: Vec<HyperDim>,
}

/// h1, h2, h3 integer in [32, 512]; learning rate log10 in [-5, -1];
/// dropout linear in [0.1, 0.7]; batch size power-of-two exponent in [4, 8].
pub fn default_hyperspace() -> HyperSpace {
    HyperSpace::from_bounds(&HyperBounds::default()).expect("default bounds are valid")
}

impl HyperSpace {
    pub fn from_bounds(b: &HyperBounds) -> Result<Self> {
        let mut dims: Vec<HyperDim> =
            (1..=b.hidden_layers).map(|i| HyperDim::new(&format!("h{i}"), ParamKind::Integer, b.width)).collect();
        dims.push(HyperDim::new("lr", ParamKind::Log10, b.log10_learning_rate));
        dims.push(HyperDim::new("dropout", ParamKind::Linear, b.dropout));
        dims.push(HyperDim::new("batch", ParamKind::Pow2, b.log2_batch));
        let space = Self { dims };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HpoError::InvalidSpace(m));
        if self.dims.len() < 4 {
            return bad(format!(
                "need at least one hidden width plus lr, dropout and batch; got {} dims",
                self.dims.len()
            ));
        }
        for d in &self.dims {
            if !(d.low.is_finite() && d.high.is_finite() && d.low < d.high) {
                return bad(format!("{}: need finite low < high, got [{}, {}]", d.name, d.low, d.high));
            }
            if matches!(d.kind, ParamKind::Integer | ParamKind::Pow2) && d.low.ceil() > d.high.floor() {
                return bad(format!("{}: no integer inside [{}, {}]", d.name, d.low, d.high));
            }
        }
        let h = self.hidden_count();
        for d in &self.dims[..h] {
            if d.kind != ParamKind::Integer || d.low.ceil() < 1.0 {
                return bad(format!("{}: widths need an integer range starting at 1 or more", d.name));
            }
        }
        let [lr, dropout, batch] = [&self.dims[h], &self.dims[h + 1], &self.dims[h + 2]];
        if lr.kind != ParamKind::Log10 {
            return bad("learning rate must use a log10 scale".into());
        }
        if dropout.kind != ParamKind::Linear || dropout.low < 0.0 || dropout.high > 0.9 {
            return bad(format!("dropout must be linear within [0, 0.9], got [{}, {}]", dropout.low, dropout.high));
        }
        if batch.kind != ParamKind::Pow2 || batch.low.ceil() < 1.0 || batch.high > 16.0 {
            return bad(format!("batch exponent must lie in [1, 16], got [{}, {}]", batch.low, batch.high));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[HyperDim] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn hidden_count(&self) -> usize {
        self.dims.len() - 3
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace::new(self.dims.iter().map(|d| d.low).collect(), self.dims.iter().map(|d| d.high).collect())
            .expect("validated bounds")
    }

    /// Decoded value of the lower and upper bound of each dimension.
    pub fn decoded_bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.decode(d.low), d.decode(d.high))).collect()
    }
}

/// Position to hyperparameters; coordinates outside the bounds are clamped.
pub fn decode(position: &[f64], space: &HyperSpace) -> Result<HyperParams> {
    if position.len() != space.dim() {
        return Err(HpoError::DimensionMismatch { expected: space.dim(), found: position.len() });
    }
    let v: Vec<f64> = space.dims.iter().zip(position).map(|(d, &x)| d.decode(x)).collect();
    let h = space.hidden_count();
    Ok(HyperParams {
        hidden_widths: v[..h].iter().map(|&w| w as usize).collect(),
        learning_rate: v[h],
        dropout_rate: v[h + 1],
        batch_size: v[h + 2] as usize,
    })
}

pub fn encode(params: &HyperParams, space: &HyperSpace) -> Result<Vec<f64>> {
    let h = space.hidden_count();
    if params.hidden_widths.len() != h {
        return Err(HpoError::DimensionMismatch { expected: h, found: params.hidden_widths.len() });
    }
    let values = params.hidden_widths.iter().map(|&w| w as f64).chain([
        params.learning_rate,
        params.dropout_rate,
        params.batch_size as f64,
    ]);
    space.dims.iter().zip(values).map(|(d, v)| d.encode(v)).collect()
}
