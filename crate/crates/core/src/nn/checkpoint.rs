//! Model checkpoint files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic            "LYMM"
//! version          u16 (1)
//! input_dim        u32
//! n_hidden         u32
//! hidden widths    n_hidden × u32
//! output_classes   u32
//! dropout rate     f64
//! bn momentum      f64
//! bn epsilon       f64
//! layer order      u8 (0 = dense/relu/bn, 1 = dense/bn/relu)
//! init seed        u64
//! parameters       f64, per hidden block: W (row-major out×in), b, gamma, beta,
//!                  running mean, running var; then output W, b
//! scaler flag      u8; when 1: input_dim × f64 mean, input_dim × f64 std
//! ```
//!
//! Training history is not stored; see [`write_history_csv`].

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array1;

use super::{init_network, EpochRecord, LayerOrder, NetworkConfig, NnError, Result, TrainedModel};
use crate::dataset::Scaler;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LYMM";
const VERSION: u16 = 1;

fn put_f64s<'a>(out: &mut Vec<u8>, values: impl IntoIterator<Item = &'a f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(model: &TrainedModel, scaler: Option<&Scaler>, path: &Path) -> Result<()> {
    let c = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(c.input_dim as u32).to_le_bytes());
    out.extend_from_slice(&(c.hidden_widths.len() as u32).to_le_bytes());
    for &w in &c.hidden_widths {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.extend_from_slice(&(c.output_classes as u32).to_le_bytes());
    put_f64s(&mut out, &[c.input_dropout_rate, c.batchnorm_momentum, c.batchnorm_epsilon]);
    out.push(match c.layer_order {
        LayerOrder::DenseReluBatchNorm => 0,
        LayerOrder::DenseBatchNormRelu => 1,
    });
    out.extend_from_slice(&c.weight_init_seed.to_le_bytes());
    for b in &model.hidden {
        put_f64s(&mut out, b.dense.weights.iter());
        put_f64s(&mut out, b.dense.biases.iter());
        put_f64s(&mut out, b.norm.gamma.iter());
        put_f64s(&mut out, b.norm.beta.iter());
        put_f64s(&mut out, b.norm.running_mean.iter());
        put_f64s(&mut out, b.norm.running_var.iter());
    }
    put_f64s(&mut out, model.output.weights.iter());
    put_f64s(&mut out, model.output.biases.iter());
    match scaler {
        None => out.push(0),
        Some(s) => {
            if s.mean.len() != c.input_dim || s.std.len() != c.input_dim {
                return Err(NnError::Checkpoint("scaler width differs from input_dim".into()));
            }
            out.push(1);
            put_f64s(&mut out, s.mean.iter());
            put_f64s(&mut out, s.std.iter());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(NnError::Checkpoint(format!("file ends while reading {what}")));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn fill(&mut self, dst: &mut [f64], what: &str) -> Result<()> {
        let bytes = self.take(8 * dst.len(), what)?;
        for (d, chunk) in dst.iter_mut().zip(bytes.chunks_exact(8)) {
            *d = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(TrainedModel, Option<Scaler>)> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic, expected \"LYMM\"".into()));
    }
    let version = u16::from_le_bytes(cur.take(2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let input_dim = cur.u32("input_dim")?;
    let n_hidden = cur.u32("hidden layer count")?;
    if n_hidden > 1024 {
        return Err(NnError::Checkpoint(format!("implausible hidden layer count {n_hidden}")));
    }
    let hidden_widths = (0..n_hidden).map(|_| cur.u32("hidden width")).collect::<Result<Vec<_>>>()?;
    let output_classes = cur.u32("output classes")?;
    let input_dropout_rate = cur.f64("dropout rate")?;
    let batchnorm_momentum = cur.f64("batchnorm momentum")?;
    let batchnorm_epsilon = cur.f64("batchnorm epsilon")?;
    let layer_order = match cur.u8("layer order")? {
        0 => LayerOrder::DenseReluBatchNorm,
        1 => LayerOrder::DenseBatchNormRelu,
        other => return Err(NnError::Checkpoint(format!("unknown layer order {other}"))),
    };
    let weight_init_seed = cur.u64("init seed")?;
    let config = NetworkConfig {
        input_dim,
        hidden_widths,
        output_classes,
        input_dropout_rate,
        batchnorm_momentum,
        batchnorm_epsilon,
        layer_order,
        weight_init_seed,
    };
    // Expected parameter bytes, checked before allocating the network.
    let mut fan_in = input_dim;
    let mut need = 0usize;
    for &w in &config.hidden_widths {
        need = need.saturating_add(w.saturating_mul(fan_in + 5));
        fan_in = w;
    }
    need = need.saturating_add(output_classes.saturating_mul(fan_in + 1));
    if need.saturating_mul(8) > data.len() {
        return Err(NnError::Checkpoint("file too short for the declared architecture".into()));
    }
    let mut model = init_network(&config).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    for b in &mut model.hidden {
        cur.fill(b.dense.weights.as_slice_mut().unwrap(), "weights")?;
        cur.fill(b.dense.biases.as_slice_mut().unwrap(), "biases")?;
        cur.fill(b.norm.gamma.as_slice_mut().unwrap(), "gamma")?;
        cur.fill(b.norm.beta.as_slice_mut().unwrap(), "beta")?;
        cur.fill(b.norm.running_mean.as_slice_mut().unwrap(), "running mean")?;
        cur.fill(b.norm.running_var.as_slice_mut().unwrap(), "running var")?;
    }
    cur.fill(model.output.weights.as_slice_mut().unwrap(), "output weights")?;
    cur.fill(model.output.biases.as_slice_mut().unwrap(), "output biases")?;
    let scaler = match cur.u8("scaler flag")? {
        0 => None,
        1 => {
            let mut mean = Array1::zeros(input_dim);
            let mut std = Array1::zeros(input_dim);
            cur.fill(mean.as_slice_mut().unwrap(), "scaler mean")?;
            cur.fill(std.as_slice_mut().unwrap(), "scaler std")?;
            Some(Scaler { mean, std })
        }
        other => return Err(NnError::Checkpoint(format!("bad scaler flag {other}"))),
    };
    if cur.pos != data.len() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", data.len() - cur.pos)));
    }
    if !model.all_finite() {
        return Err(NnError::Checkpoint("non-finite parameter".into()));
    }
    Ok((model, scaler))
}

/// `epoch,train_loss,train_acc,val_loss,val_acc,lr`
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc,lr\n");
    for h in history {
        let _ = writeln!(s, "{},{},{},{},{},{}", h.epoch, h.train_loss, h.train_acc, h.val_loss, h.val_acc, h.lr);
    }
    s
}

pub fn write_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    fs::write(path, history_csv(history))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ForwardMode, LayerOrder};
    use ndarray::Array2;

    #[test]
    fn round_trip_preserves_model_and_scaler() {
        let mut cfg = NetworkConfig::baseline(6);
        cfg.hidden_widths = vec![4, 3];
        cfg.layer_order = LayerOrder::DenseBatchNormRelu;
        let mut m = init_network(&cfg).unwrap();
        m.hidden[1].norm.running_var[2] = 0.25;
        let scaler =
            Scaler { mean: Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), std: Array1::from_vec(vec![0.5; 6]) };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.lymm");
        save_checkpoint(&m, Some(&scaler), &p).unwrap();
        let (back, s) = load_checkpoint(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(s, Some(scaler));

        save_checkpoint(&m, None, &p).unwrap();
        let (back, s) = load_checkpoint(&p).unwrap();
        assert!(s.is_none());
        let x = Array2::from_elem((2, 6), 0.3);
        assert_eq!(
            back.forward(x.view(), ForwardMode::Infer).unwrap().probs,
            m.forward(x.view(), ForwardMode::Infer).unwrap().probs
        );
    }

    #[test]
    fn rejects_corruption() {
        let m = init_network(&NetworkConfig::baseline(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.lymm");
        save_checkpoint(&m, None, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(load_checkpoint(&p), Err(NnError::Checkpoint(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&p, &bad).unwrap();
        assert!(matches!(load_checkpoint(&p), Err(NnError::Checkpoint(_))));
    }

    #[test]
    fn history_header() {
        let h = [EpochRecord { epoch: 1, train_loss: 0.5, train_acc: 0.75, val_loss: 0.25, val_acc: 1.0, lr: 0.001 }];
        assert_eq!(history_csv(&h), "epoch,train_loss,train_acc,val_loss,val_acc,lr\n1,0.5,0.75,0.25,1,0.001\n");
    }
}
