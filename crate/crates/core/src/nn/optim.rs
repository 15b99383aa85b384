use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Heavy-ball momentum: `v <- m v + g; p <- p - lr v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentum {
    lr: f64,
    momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {lr}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::config(format!("momentum must be in [0, 1), got {momentum}")));
        }
        Ok(Self {
            lr,
            momentum,
            velocity: Vec::new(),
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// Drops all velocity buffers.
    pub fn reset(&mut self) {
        self.velocity.clear();
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }

    /// Applies one update to every `(param, grad)` pair in a stable order.
    /// Velocity slots are allocated on the first step and shape-checked after.
    pub fn step<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a mut Tensor, &'a Tensor)>,
    ) -> Result<()> {
        let fresh = self.velocity.is_empty();
        let mut slot = 0;
        for (param, grad) in pairs {
            if !param.same_shape(grad) {
                return Err(Error::config(format!(
                    "param {:?} vs grad {:?}",
                    param.shape(),
                    grad.shape()
                )));
            }
            if fresh {
                self.velocity.push(vec![0.0; param.len()]);
            } else if self.velocity.get(slot).map(Vec::len) != Some(param.len()) {
                return Err(Error::Usage(format!(
                    "optimizer slot {slot} has stale shape for a tensor of {} values",
                    param.len()
                )));
            }
            let v = &mut self.velocity[slot];
            for ((p, &g), vi) in param.data_mut().iter_mut().zip(grad.data()).zip(v.iter_mut()) {
                *vi = self.momentum * *vi + g;
                *p -= self.lr * *vi;
            }
            slot += 1;
        }
        if !fresh && slot != self.velocity.len() {
            return Err(Error::Usage(format!(
                "optimizer tracks {} tensors, step supplied {slot}",
                self.velocity.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::new(vec![1], vec![v]).unwrap()
    }

    #[test]
    fn plain_sgd_step() {
        let mut opt = SgdMomentum::new(0.1, 0.0).unwrap();
        let mut p = scalar(1.0);
        let g = scalar(1.0);
        opt.step([(&mut p, &g)]).unwrap();
        assert!((p.data()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn momentum_two_steps() {
        let mut opt = SgdMomentum::new(1.0, 0.9).unwrap();
        let mut p = scalar(0.0);
        let g = scalar(1.0);
        opt.step([(&mut p, &g)]).unwrap();
        assert_eq!(p.data()[0], -1.0);
        opt.step([(&mut p, &g)]).unwrap();
        assert!((p.data()[0] + 2.9).abs() < 1e-15);
        assert!((opt.velocity()[0][0] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn zero_grad_leaves_params() {
        let mut opt = SgdMomentum::new(0.5, 0.9).unwrap();
        let mut p = scalar(3.0);
        opt.step([(&mut p, &scalar(0.0))]).unwrap();
        assert_eq!(p.data()[0], 3.0);
    }

    #[test]
    fn stale_shape_rejected() {
        let mut opt = SgdMomentum::new(0.5, 0.9).unwrap();
        let mut p = scalar(3.0);
        opt.step([(&mut p, &scalar(0.0))]).unwrap();
        let mut q = Tensor::zeros(&[2]);
        let gq = Tensor::zeros(&[2]);
        assert!(opt.step([(&mut q, &gq)]).is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(SgdMomentum::new(0.0, 0.9).is_err());
        assert!(SgdMomentum::new(0.1, 1.0).is_err());
    }
}
