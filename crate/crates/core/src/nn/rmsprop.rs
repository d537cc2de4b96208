use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RMSprop: `v <- decay*v + (1-decay)*g^2`, `p <- p - lr*g/(sqrt(v)+eps)`.
/// The squared-gradient average starts at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    square_avg: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(lr: f64, decay: f64, eps: f64) -> Self {
        Self {
            lr,
            decay,
            eps,
            square_avg: Vec::new(),
        }
    }

    /// Apply one update. `params` and `grads` are matching lists of tensors.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Dimension {
                expected: params.len(),
                actual: grads.len(),
            });
        }
        if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::Diverged("non-finite gradient".into()));
        }
        if self.square_avg.is_empty() {
            self.square_avg = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.square_avg) {
            if p.len() != g.len() || v.len() != g.len() {
                return Err(Error::Dimension {
                    expected: v.len(),
                    actual: g.len(),
                });
            }
            for ((pi, gi), vi) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                *vi = self.decay * *vi + (1.0 - self.decay) * gi * gi;
                *pi -= self.lr * gi / (vi.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
