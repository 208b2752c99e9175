use super::TrainConfig;

/// Reduce-on-plateau on the training loss. "Improvement" is a strict decrease of the best
/// loss so far; after `patience` epochs without one the rate is multiplied by `factor`
/// (never below `min_lr`) and the counter restarts.
#[derive(Debug, Clone)]
pub struct Plateau {
    patience: usize,
    factor: f64,
    min_lr: f64,
    best: f64,
    wait: usize,
}

impl Plateau {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            patience: cfg.plateau_patience,
            factor: cfg.lr_factor,
            min_lr: cfg.lr_min,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Records one epoch's loss and returns the rate for the next epoch.
    pub fn observe(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.wait = 0;
            return lr;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            self.wait = 0;
            (lr * self.factor).max(self.min_lr)
        } else {
            lr
        }
    }
}

/// Rate to use after the last epoch of `history`, given the rate in effect during it.
pub fn lr_schedule(history: &[f64], current_lr: f64, cfg: &TrainConfig) -> f64 {
    let mut plateau = Plateau::new(cfg);
    let mut next = current_lr;
    for &loss in history {
        // the counter evolves independently of the rate values
        next = plateau.observe(loss, current_lr);
    }
    next
}

/// Stops after `patience` consecutive epochs without a strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Returns `true` when training should stop after this epoch.
    pub fn observe(&mut self, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.wait = 0;
            false
        } else {
            self.wait += 1;
            self.wait >= self.patience
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}
