//! Small numeric helpers shared by the layers.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Element-wise nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }

    pub fn map(self, z: &Array2<f64>) -> Array2<f64> {
        z.mapv(|x| self.apply(x))
    }

    /// `grad * f'(z)` element-wise.
    pub fn backprop(self, z: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
        let mut out = grad.clone();
        out.zip_mut_with(z, |g, &x| *g *= self.derivative(x));
        out
    }
}

/// Glorot-uniform matrix.
pub fn xavier<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

/// Glorot-uniform convolution kernel `(out, in, width)`.
pub fn xavier3<R: Rng>(rng: &mut R, out: usize, inp: usize, width: usize) -> Array3<f64> {
    let bound = (6.0 / ((inp + out) * width) as f64).sqrt();
    Array3::from_shape_fn((out, inp, width), |_| rng.gen_range(-bound..bound))
}

pub fn column_sums(m: &Array2<f64>) -> Array1<f64> {
    m.sum_axis(Axis(0))
}

/// Softmax of a slice into a new vector, max-shifted.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_basics() {
        assert_eq!(softmax(&[3.0]), vec![1.0]);
        assert_eq!(softmax(&[0.5, 0.5]), vec![0.5, 0.5]);
        let s = softmax(&[1000.0, 0.0]);
        assert!(s[0] > 0.999 && s.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn activation_derivatives() {
        assert_eq!(Activation::Relu.derivative(-1.0), 0.0);
        assert_eq!(Activation::Relu.derivative(2.0), 1.0);
        let h = 1e-6;
        let fd = (Activation::Tanh.apply(0.3 + h) - Activation::Tanh.apply(0.3 - h)) / (2.0 * h);
        assert!((fd - Activation::Tanh.derivative(0.3)).abs() < 1e-9);
    }
}
