//! Harmonic modulated feature mapping.
//!
//! Forward pass, for an `N × A` input `x`:
//!
//! ```text
//! w_imp     = sigmoid(LayerNorm(x W_imp + b_imp))        N × A
//! x'        = x ⊙ w_imp                                  N × A
//! f         = sigmoid(x' W_mod + b_mod)                  N × D
//! m         = b ⊙ f          (b_j = 2π σ' j / D)         N × D
//! x_encoded = m ⊙ (x' W_proj)                            N × D
//! out       = [cos(x_encoded) | sin(x_encoded)]          N × 2D
//! ```
//!
//! `W_proj` is a bias-free learned `A → D` projection. With
//! `identity_projection` it is absent, `D` must equal `A`, and `x'` is used
//! directly.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{
    hadamard, layer_norm_backward, layer_norm_with_cache, matmul, sigmoid, LayerNormCache, Matrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmfmConfig {
    /// Half of the output width.
    pub dim: usize,
    pub sigma_prime: f64,
    pub identity_projection: bool,
}

impl Default for HmfmConfig {
    fn default() -> Self {
        HmfmConfig {
            dim: 32,
            sigma_prime: 1.0,
            identity_projection: false,
        }
    }
}

/// `b_j = 2π σ' j / D` for `j = 0..D`.
pub fn base_frequencies(dim: usize, sigma_prime: f64) -> Vec<f64> {
    (0..dim)
        .map(|j| 2.0 * PI * sigma_prime * j as f64 / dim as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmfmParams {
    pub imp_weight: Matrix,
    pub imp_bias: Matrix,
    pub norm_gain: Matrix,
    pub norm_bias: Matrix,
    pub mod_weight: Matrix,
    pub mod_bias: Matrix,
    pub proj_weight: Option<Matrix>,
    base_freq: Matrix,
    sigma_prime: f64,
}

/// Gradients for every learnable tensor of [`HmfmParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct HmfmGrads {
    pub imp_weight: Matrix,
    pub imp_bias: Matrix,
    pub norm_gain: Matrix,
    pub norm_bias: Matrix,
    pub mod_weight: Matrix,
    pub mod_bias: Matrix,
    pub proj_weight: Option<Matrix>,
}

pub(crate) fn uniform_fan_in(rng: &mut impl Rng, fan_in: usize, rows: usize, cols: usize) -> Matrix {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

impl HmfmParams {
    /// All-zero linear layers, unit layer-norm gain.
    pub fn zeros(input_dim: usize, config: &HmfmConfig) -> Result<Self> {
        Self::validate(input_dim, config)?;
        let (a, d) = (input_dim, config.dim);
        Ok(HmfmParams {
            imp_weight: Matrix::zeros(a, a),
            imp_bias: Matrix::zeros(1, a),
            norm_gain: Matrix::filled(1, a, 1.0),
            norm_bias: Matrix::zeros(1, a),
            mod_weight: Matrix::zeros(a, d),
            mod_bias: Matrix::zeros(1, d),
            proj_weight: (!config.identity_projection).then(|| Matrix::zeros(a, d)),
            base_freq: Matrix::row_vector(base_frequencies(d, config.sigma_prime)),
            sigma_prime: config.sigma_prime,
        })
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(input_dim: usize, config: &HmfmConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(input_dim, config)?;
        let (a, d) = (input_dim, config.dim);
        p.imp_weight = uniform_fan_in(rng, a, a, a);
        p.mod_weight = uniform_fan_in(rng, a, a, d);
        if p.proj_weight.is_some() {
            p.proj_weight = Some(uniform_fan_in(rng, a, a, d));
        }
        Ok(p)
    }

    fn validate(input_dim: usize, config: &HmfmConfig) -> Result<()> {
        if input_dim == 0 || config.dim == 0 {
            return Err(Error::InvalidConfig("hmfm dimensions must be positive".into()));
        }
        if !(config.sigma_prime >= 0.0 && config.sigma_prime.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "hmfm.sigma_prime must be finite and non-negative, got {}",
                config.sigma_prime
            )));
        }
        if config.identity_projection && config.dim != input_dim {
            return Err(Error::InvalidConfig(format!(
                "hmfm.identity_projection requires dim == input width ({} != {input_dim})",
                config.dim
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.imp_weight.rows()
    }

    pub fn output_half_dim(&self) -> usize {
        self.base_freq.cols()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.output_half_dim()
    }

    pub fn base_freq(&self) -> &[f64] {
        self.base_freq.as_slice()
    }

    pub fn sigma_prime(&self) -> f64 {
        self.sigma_prime
    }

    pub fn config(&self) -> HmfmConfig {
        HmfmConfig {
            dim: self.output_half_dim(),
            sigma_prime: self.sigma_prime,
            identity_projection: self.proj_weight.is_none(),
        }
    }

    /// Learnable tensors in a fixed order; the base frequencies are not among them.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix)> {
        let mut v = vec![
            ("imp_weight", &self.imp_weight),
            ("imp_bias", &self.imp_bias),
            ("norm_gain", &self.norm_gain),
            ("norm_bias", &self.norm_bias),
            ("mod_weight", &self.mod_weight),
            ("mod_bias", &self.mod_bias),
        ];
        if let Some(w) = &self.proj_weight {
            v.push(("proj_weight", w));
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        let mut v = vec![
            ("imp_weight", &mut self.imp_weight),
            ("imp_bias", &mut self.imp_bias),
            ("norm_gain", &mut self.norm_gain),
            ("norm_bias", &mut self.norm_bias),
            ("mod_weight", &mut self.mod_weight),
            ("mod_bias", &mut self.mod_bias),
        ];
        if let Some(w) = &mut self.proj_weight {
            v.push(("proj_weight", w));
        }
        v
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("hmfm input", x.shape(), self.imp_weight.shape()));
        }
        Ok(())
    }
}

impl HmfmGrads {
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix)> {
        let mut v = vec![
            ("imp_weight", &self.imp_weight),
            ("imp_bias", &self.imp_bias),
            ("norm_gain", &self.norm_gain),
            ("norm_bias", &self.norm_bias),
            ("mod_weight", &self.mod_weight),
            ("mod_bias", &self.mod_bias),
        ];
        if let Some(w) = &self.proj_weight {
            v.push(("proj_weight", w));
        }
        v
    }
}

/// Forward result with every intermediate needed for the backward pass.
#[derive(Debug, Clone)]
pub struct HmfmOutput {
    /// `N × 2D`: cosines then sines.
    pub encoded: Matrix,
    pub w_imp: Matrix,
    pub x_weighted: Matrix,
    pub freq: Matrix,
    pub modulated: Matrix,
    pub projected: Matrix,
    pub x_encoded: Matrix,
    norm_cache: LayerNormCache,
}

pub fn importance_weights(x: &Matrix, p: &HmfmParams) -> Result<Matrix> {
    importance_with_cache(x, p).map(|(w, _)| w)
}

fn importance_with_cache(x: &Matrix, p: &HmfmParams) -> Result<(Matrix, LayerNormCache)> {
    p.check_input(x)?;
    let linear = matmul(x, &p.imp_weight)?.add_row(&p.imp_bias)?;
    let (normed, cache) = layer_norm_with_cache(&linear, &p.norm_gain, &p.norm_bias)?;
    Ok((sigmoid(&normed), cache))
}

pub fn encode(x: &Matrix, p: &HmfmParams) -> Result<HmfmOutput> {
    let (w_imp, norm_cache) = importance_with_cache(x, p)?;
    let x_weighted = hadamard(x, &w_imp)?;
    let freq = sigmoid(&matmul(&x_weighted, &p.mod_weight)?.add_row(&p.mod_bias)?);
    let modulated = freq.mul_row(&p.base_freq)?;
    let projected = match &p.proj_weight {
        Some(w) => matmul(&x_weighted, w)?,
        None => x_weighted.clone(),
    };
    let x_encoded = hadamard(&modulated, &projected)?;
    let encoded = x_encoded.map(f64::cos).hcat(&x_encoded.map(f64::sin))?;
    Ok(HmfmOutput {
        encoded,
        w_imp,
        x_weighted,
        freq,
        modulated,
        projected,
        x_encoded,
        norm_cache,
    })
}

impl HmfmOutput {
    /// Back-propagates `upstream` (`N × 2D`) to the input and every learnable tensor.
    pub fn backward(&self, x: &Matrix, p: &HmfmParams, upstream: &Matrix) -> Result<(Matrix, HmfmGrads)> {
        if upstream.shape() != self.encoded.shape() {
            return Err(Error::shape(
                "hmfm backward",
                upstream.shape(),
                self.encoded.shape(),
            ));
        }
        let d = p.output_half_dim();
        let (g_cos, g_sin) = upstream.hsplit(d);

        // d/dz [cos z, sin z] = [-sin z, cos z]
        let mut d_xenc = Matrix::zeros(self.x_encoded.rows(), d);
        for ((o, &z), (&gc, &gs)) in d_xenc
            .as_mut_slice()
            .iter_mut()
            .zip(self.x_encoded.as_slice())
            .zip(g_cos.as_slice().iter().zip(g_sin.as_slice()))
        {
            *o = -z.sin() * gc + z.cos() * gs;
        }

        let d_mod = hadamard(&d_xenc, &self.projected)?;
        let d_proj = hadamard(&d_xenc, &self.modulated)?;

        let (mut d_xw, proj_grad) = match &p.proj_weight {
            Some(w) => (d_proj.matmul_nt(w)?, Some(self.x_weighted.matmul_tn(&d_proj)?)),
            None => (d_proj, None),
        };

        let d_freq = d_mod.mul_row(&p.base_freq)?;
        let d_mod_pre = d_freq.zip_map(&self.freq, |g, f| g * f * (1.0 - f))?;
        let mod_weight = self.x_weighted.matmul_tn(&d_mod_pre)?;
        let mod_bias = d_mod_pre.col_sums();
        d_xw.add_assign(&d_mod_pre.matmul_nt(&p.mod_weight)?)?;

        let mut d_x = hadamard(&d_xw, &self.w_imp)?;
        let d_w = hadamard(&d_xw, x)?;
        let d_norm = d_w.zip_map(&self.w_imp, |g, s| g * s * (1.0 - s))?;
        let (d_lin, norm_gain, norm_bias) = layer_norm_backward(&d_norm, &p.norm_gain, &self.norm_cache)?;
        let imp_weight = x.matmul_tn(&d_lin)?;
        let imp_bias = d_lin.col_sums();
        d_x.add_assign(&d_lin.matmul_nt(&p.imp_weight)?)?;

        Ok((
            d_x,
            HmfmGrads {
                imp_weight,
                imp_bias,
                norm_gain,
                norm_bias,
                mod_weight,
                mod_bias,
                proj_weight: proj_grad,
            },
        ))
    }
}

/// Gradients of `⟨upstream, encode(x)⟩` with respect to `x` and every learnable tensor.
pub fn encode_backward(x: &Matrix, p: &HmfmParams, upstream: &Matrix) -> Result<(Matrix, HmfmGrads)> {
    encode(x, p)?.backward(x, p, upstream)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::numcore::{grad_check, GRAD_TOLERANCE};

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn cfg(dim: usize, sigma_prime: f64) -> HmfmConfig {
        HmfmConfig {
            dim,
            sigma_prime,
            identity_projection: false,
        }
    }

    /// Perturbs every learnable tensor so zero-initialized biases and unit
    /// gains do not hide gradient bugs.
    fn random_params(rng: &mut ChaCha8Rng, a: usize, c: &HmfmConfig) -> HmfmParams {
        let mut p = HmfmParams::init(a, c, rng).unwrap();
        for (_, t) in p.tensors_mut() {
            for v in t.as_mut_slice() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
        p
    }

    #[test]
    fn base_frequency_ladder() {
        let b = base_frequencies(4, 1.0);
        assert_eq!(b[0], 0.0);
        assert!((b[1] - PI / 2.0).abs() < 1e-15);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!(base_frequencies(5, 0.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_params_give_half_importance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = HmfmParams::zeros(5, &cfg(3, 1.0)).unwrap();
        let x = rand_matrix(&mut rng, 4, 5);
        let w = importance_weights(&x, &p).unwrap();
        assert!(w.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn zero_input_encodes_to_constant_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = cfg(4, 1.0);
        let p = HmfmParams::init(3, &c, &mut rng).unwrap();
        let out = encode(&Matrix::zeros(2, 3), &p).unwrap();
        for i in 0..2 {
            assert_eq!(out.encoded.row(i), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn identity_projection_requires_matching_dims() {
        let c = HmfmConfig {
            dim: 4,
            sigma_prime: 1.0,
            identity_projection: true,
        };
        assert!(matches!(HmfmParams::zeros(3, &c), Err(Error::InvalidConfig(_))));
        let c = HmfmConfig { dim: 3, ..c };
        let p = HmfmParams::zeros(3, &c).unwrap();
        assert!(p.proj_weight.is_none());
        let x = Matrix::from_fn(2, 3, |i, j| (i + j) as f64 * 0.3);
        let out = encode(&x, &p).unwrap();
        assert_eq!(out.projected, out.x_weighted);
    }

    #[test]
    fn wrong_width_is_rejected() {
        let p = HmfmParams::zeros(3, &cfg(2, 1.0)).unwrap();
        assert!(matches!(
            encode(&Matrix::zeros(2, 4), &p),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = cfg(6, 1.0);
        let p = random_params(&mut rng, 5, &c);
        let x = rand_matrix(&mut rng, 4, 5);
        let (dx, g) = encode_backward(&x, &p, &Matrix::zeros(4, 12)).unwrap();
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
        for (_, t) in g.tensors() {
            assert!(t.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_sigma_kills_projection_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = cfg(6, 0.0);
        let p = random_params(&mut rng, 5, &c);
        let x = rand_matrix(&mut rng, 4, 5);
        let up = rand_matrix(&mut rng, 4, 12);
        let (_, g) = encode_backward(&x, &p, &up).unwrap();
        assert!(g.proj_weight.unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let c = cfg(6, 1.0);
            let p = random_params(&mut rng, 5, &c);
            let x = rand_matrix(&mut rng, 4, 5);
            let up = rand_matrix(&mut rng, 4, 12);
            let objective = |x: &Matrix, p: &HmfmParams| {
                let out = encode(x, p).unwrap();
                out.encoded
                    .as_slice()
                    .iter()
                    .zip(up.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let (dx, grads) = encode_backward(&x, &p, &up).unwrap();
            let r = grad_check(|x| objective(x, &p), &dx, &x).unwrap();
            assert!(r.passes(GRAD_TOLERANCE), "x: {r:?}");
            for (k, (name, g)) in grads.tensors().into_iter().enumerate() {
                let theta = p.tensors()[k].1.clone();
                let r = grad_check(
                    |t| {
                        let mut q = p.clone();
                        *q.tensors_mut()[k].1 = t.clone();
                        objective(&x, &q)
                    },
                    g,
                    &theta,
                )
                .unwrap();
                assert!(r.passes(GRAD_TOLERANCE), "{name}: {r:?}");
            }
        }
    }
}
