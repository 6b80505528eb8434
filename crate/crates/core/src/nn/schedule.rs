use super::PlateauConfig;

/// Lowers the learning rate when validation accuracy stops improving.
///
/// An epoch improves when its accuracy exceeds the best seen so far by more
/// than `min_delta`. After `patience` consecutive non-improving epochs the rate
/// is multiplied by `factor` (floored at `min_lr`) and the counter restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    config: PlateauConfig,
    lr: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, config: PlateauConfig) -> Self {
        Self { config, lr: initial_lr, best: f64::NEG_INFINITY, wait: 0 }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records one epoch's validation accuracy and returns the rate for the next epoch.
    pub fn step(&mut self, val_acc: f64) -> f64 {
        if val_acc > self.best + self.config.min_delta {
            self.best = val_acc;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
                self.wait = 0;
            }
        }
        self.lr
    }
}

/// Replays a validation-accuracy history and returns the resulting rate.
pub fn reduce_lr_on_plateau(history: &[f64], initial_lr: f64, config: PlateauConfig) -> f64 {
    let mut s = PlateauScheduler::new(initial_lr, config);
    for &a in history {
        s.step(a);
    }
    s.lr()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PlateauConfig {
        PlateauConfig::default()
    }

    #[test]
    fn five_flat_epochs_halve() {
        let hist = [0.8, 0.8, 0.8, 0.8, 0.8, 0.8];
        assert_eq!(reduce_lr_on_plateau(&hist, 1e-3, cfg()), 5e-4);
        assert_eq!(reduce_lr_on_plateau(&hist[..5], 1e-3, cfg()), 1e-3);
    }

    #[test]
    fn improving_keeps_rate() {
        let hist: Vec<f64> = (0..50).map(|i| 0.5 + i as f64 * 0.01).collect();
        assert_eq!(reduce_lr_on_plateau(&hist, 1e-3, cfg()), 1e-3);
    }

    #[test]
    fn sub_delta_gain_counts_as_plateau() {
        let hist = [0.9, 0.90001, 0.90002, 0.90003, 0.90004, 0.90005];
        assert_eq!(reduce_lr_on_plateau(&hist, 1e-3, cfg()), 5e-4);
    }

    #[test]
    fn floor_at_min_lr() {
        let c = PlateauConfig { min_lr: 1e-6, ..cfg() };
        let mut s = PlateauScheduler::new(1e-6, c);
        for _ in 0..30 {
            let lr = s.step(0.3);
            assert_eq!(lr, 1e-6);
        }
    }

    #[test]
    fn never_raises_and_respects_floor() {
        let mut s = PlateauScheduler::new(1e-2, cfg());
        let mut prev = s.lr();
        for i in 0..500u64 {
            let acc = ((i * 7919) % 101) as f64 / 100.0;
            let lr = s.step(acc);
            assert!(lr <= prev && lr >= 1e-6);
            prev = lr;
        }
    }
}
