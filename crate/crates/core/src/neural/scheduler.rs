/// Reduce-on-plateau learning-rate schedule driven by training accuracy.
///
/// The epoch that sets a new best starts the count; each later epoch that
/// fails to beat the best by more than `min_delta` adds one. When the count
/// reaches `patience` the rate is multiplied by `factor` and the count
/// restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct LrScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub best_metric: Option<f64>,
    pub stall_count: usize,
}

impl Default for LrScheduler {
    fn default() -> Self {
        Self::new(0.001, 0.8, 18, 1e-4)
    }
}

impl LrScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_delta: f64) -> Self {
        assert!(lr > 0.0 && factor > 0.0 && factor < 1.0 && patience > 0);
        Self { lr, factor, patience, min_delta, best_metric: None, stall_count: 0 }
    }

    /// Feed one epoch's accuracy; returns the rate for the next epoch.
    pub fn step(&mut self, accuracy: f64) -> f64 {
        match self.best_metric {
            Some(best) if accuracy <= best + self.min_delta => {
                self.stall_count += 1;
                if self.stall_count >= self.patience {
                    self.lr *= self.factor;
                    self.stall_count = 0;
                }
            }
            _ => {
                self.best_metric = Some(accuracy);
                self.stall_count = 0;
            }
        }
        self.lr
    }
}
