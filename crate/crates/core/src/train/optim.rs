use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Adam with bias correction. Moment buffers follow the order of the
/// parameter list handed to [`Adam::step`].
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u32,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::shape("Adam::step", (params.len(), 1), (grads.len(), 1)));
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if p.shape() != g.shape() || self.m[k].shape() != g.shape() {
                return Err(Error::shape("Adam::step", p.shape(), g.shape()));
            }
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (((w, &gi), mi), vi) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // bias-corrected first step is lr · sign(g)
        let mut w = Matrix::row_vector(vec![1.0, -2.0]);
        let g = Matrix::row_vector(vec![0.5, -3.0]);
        let mut adam = Adam::new(0.1);
        adam.step(&mut [&mut w], &[&g]).unwrap();
        assert!((w.get(0, 0) - 0.9).abs() < 1e-6);
        assert!((w.get(0, 1) + 1.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut w = Matrix::row_vector(vec![3.0, -4.0]);
        let mut adam = Adam::new(0.05);
        for _ in 0..2000 {
            let g = w.scale(2.0);
            adam.step(&mut [&mut w], &[&g]).unwrap();
        }
        assert!(w.frobenius_sq() < 1e-4);
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let mut w = Matrix::row_vector(vec![1.0, 2.0]);
        let before = w.clone();
        let mut adam = Adam::new(0.0);
        adam.step(&mut [&mut w], &[&Matrix::row_vector(vec![5.0, -1.0])])
            .unwrap();
        assert_eq!(w, before);
    }
}
