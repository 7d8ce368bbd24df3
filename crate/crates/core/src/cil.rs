//! Chemically-informed loss: weighted BCE plus four auxiliary terms, each with
//! an analytic gradient with respect to the logits.
//!
//! | term     | value                                                                 |
//! |----------|-----------------------------------------------------------------------|
//! | basis    | `-(1/N) Σ w_j [Y log Ŷ + (1-Y) log(1-Ŷ)]`                              |
//! | stt      | `(1/N²) Σ_{i,i'} 1[sim(i,i') > τ] ‖Ŷ_i - Ŷ_i'‖₂`                       |
//! | class    | `Σ_j n⁺_j max(0, E_j - m_in,j)² + n⁻_j max(0, m_out,j - E_j)²`         |
//! | sample   | `(1/N) Σ_i max(0, e1 + e2 Σ_j Y_ij - Σ_j Ŷ_ij)²`                       |
//! | col      | `‖ŶᵀŶ/N - YᵀY/N‖²_F`                                                  |
//!
//! `total = basis + λ1 stt + λ2 class + λ3 sample + λ4 col`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{sigmoid_scalar, Matrix};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before use.
pub const PROB_CLAMP: f64 = 1e-7;

const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScope {
    /// Recompute class weights from every batch.
    Batch,
    /// Compute class weights once from the training split.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    /// `⟨S_i, S_i'⟩ / (‖S_i‖ ‖S_i'‖ + 1e-12)`
    PairwiseCosine,
    /// `S Sᵀ / ‖S‖²_F`
    FrobeniusLiteral,
}

impl FromStr for WeightScope {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "batch" => Ok(WeightScope::Batch),
            "global" => Ok(WeightScope::Global),
            other => Err(format!("expected `batch` or `global`, got `{other}`")),
        }
    }
}

impl FromStr for SimilarityMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pairwise_cosine" => Ok(SimilarityMode::PairwiseCosine),
            "frobenius_literal" => Ok(SimilarityMode::FrobeniusLiteral),
            other => Err(format!(
                "expected `pairwise_cosine` or `frobenius_literal`, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub tau: f64,
    /// Co-occurrence coefficient of the energy targets.
    pub c: f64,
    pub e1: f64,
    pub e2: f64,
    pub weight_min: f64,
    pub weight_max: f64,
    pub weight_scope: WeightScope,
    pub sim_mode: SimilarityMode,
    /// Multiply each class hinge by its positive/negative count.
    pub class_count_scaling: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda1: 0.3,
            lambda2: 0.3,
            lambda3: 0.5,
            lambda4: 0.3,
            tau: 0.8,
            c: 0.2,
            e1: 1.0,
            e2: 1.0,
            weight_min: 0.1,
            weight_max: 10.0,
            weight_scope: WeightScope::Batch,
            sim_mode: SimilarityMode::PairwiseCosine,
            class_count_scaling: true,
        }
    }
}

impl LossConfig {
    /// Only the weighted BCE term.
    pub fn basis_only() -> Self {
        LossConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            ..Self::default()
        }
    }

    /// Every violated constraint, keyed by its config name.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("loss.lambda1", self.lambda1),
            ("loss.lambda2", self.lambda2),
            ("loss.lambda3", self.lambda3),
            ("loss.lambda4", self.lambda4),
            ("loss.c", self.c),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        // tau = 1 is allowed: it empties the similarity mask
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            out.push(format!("loss.tau must lie in (0, 1], got {}", self.tau));
        }
        for (name, v) in [("loss.e1", self.e1), ("loss.e2", self.e2)] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        if !(self.weight_min > 0.0 && self.weight_min <= self.weight_max && self.weight_max.is_finite()) {
            out.push(format!(
                "loss.weight_min/weight_max must satisfy 0 < min <= max, got [{}, {}]",
                self.weight_min, self.weight_max
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Logits and the clamped sigmoid probabilities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub logits: Matrix,
    pub probs: Matrix,
}

impl PredictionMatrix {
    pub fn from_logits(logits: Matrix) -> Self {
        let probs = logits.map(|z| clamp_prob(sigmoid_scalar(z)));
        PredictionMatrix { logits, probs }
    }

    /// `dŶ/dlogit`, zero where the clamp is active.
    fn dprob_dlogit(&self) -> Matrix {
        self.logits.map(|z| {
            let s = sigmoid_scalar(z);
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&s) {
                s * (1.0 - s)
            } else {
                0.0
            }
        })
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub basis: f64,
    pub stt: f64,
    pub class_energy: f64,
    pub sample: f64,
    pub col: f64,
    pub total: f64,
    #[serde(skip)]
    pub grad_logits: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    Basis,
    Stt,
    Class,
    Sample,
    Col,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Basis,
        Component::Stt,
        Component::Class,
        Component::Sample,
        Component::Col,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Basis => "basis",
            Component::Stt => "stt",
            Component::Class => "class",
            Component::Sample => "sample",
            Component::Col => "col",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn positive_counts(y: &Matrix) -> Vec<f64> {
    y.col_sums().into_vec()
}

/// `w_j = clamp((n⁻_j + 1) / (n⁺_j + 1), weight_min, weight_max)`.
pub fn class_weights(y: &Matrix, cfg: &LossConfig) -> Vec<f64> {
    let n = y.rows() as f64;
    positive_counts(y)
        .into_iter()
        .map(|pos| ((n - pos + 1.0) / (pos + 1.0)).clamp(cfg.weight_min, cfg.weight_max))
        .collect()
}

fn basis_with_grad(yhat: &Matrix, y: &Matrix, w: &[f64]) -> Result<(f64, Matrix)> {
    same_shape("loss_basis", yhat, y)?;
    if w.len() != y.cols() {
        return Err(Error::shape("loss_basis weights", y.shape(), (1, w.len())));
    }
    let n = y.rows() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        for (j, &wj) in w.iter().enumerate() {
            let raw = yhat.get(i, j);
            let p = clamp_prob(raw);
            let t = y.get(i, j);
            loss -= wj * (t * p.ln() + (1.0 - t) * (1.0 - p).ln());
            if raw == p {
                grad.set(i, j, -wj / n * (t / p - (1.0 - t) / (1.0 - p)));
            }
        }
    }
    Ok((loss / n, grad))
}

pub fn loss_basis(yhat: &Matrix, y: &Matrix, w: &[f64]) -> Result<f64> {
    basis_with_grad(yhat, y, w).map(|(l, _)| l)
}

/// Binary similarity mask over molecule pairs, diagonal zeroed.
pub fn similarity_mask(s: &Matrix, cfg: &LossConfig) -> Matrix {
    let n = s.rows();
    let gram = s.matmul_nt(s).expect("S Sᵀ is always conformable");
    let sim = match cfg.sim_mode {
        SimilarityMode::PairwiseCosine => {
            let norms: Vec<f64> = (0..n).map(|i| gram.get(i, i).sqrt()).collect();
            Matrix::from_fn(n, n, |i, k| gram.get(i, k) / (norms[i] * norms[k] + COSINE_EPS))
        }
        SimilarityMode::FrobeniusLiteral => {
            let fro = s.frobenius_sq();
            if fro > 0.0 {
                gram.scale(1.0 / fro)
            } else {
                gram
            }
        }
    };
    Matrix::from_fn(n, n, |i, k| {
        if i != k && sim.get(i, k) > cfg.tau {
            1.0
        } else {
            0.0
        }
    })
}

fn stt_with_grad(yhat: &Matrix, s: &Matrix, cfg: &LossConfig) -> Result<(f64, Matrix)> {
    if s.rows() != yhat.rows() {
        return Err(Error::shape("loss_stt", yhat.shape(), s.shape()));
    }
    if s.cols() == 0 {
        return Err(Error::shape("loss_stt features", yhat.shape(), s.shape()));
    }
    let n = yhat.rows();
    let mask = similarity_mask(s, cfg);
    let scale = 1.0 / (n * n) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(n, yhat.cols());
    for i in 0..n {
        for k in 0..n {
            if mask.get(i, k) == 0.0 {
                continue;
            }
            let diff: Vec<f64> = yhat.row(i).iter().zip(yhat.row(k)).map(|(a, b)| a - b).collect();
            let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            loss += dist;
            if dist > 0.0 {
                for (j, d) in diff.iter().enumerate() {
                    let g = scale * d / dist;
                    grad.set(i, j, grad.get(i, j) + g);
                    grad.set(k, j, grad.get(k, j) - g);
                }
            }
        }
    }
    Ok((loss * scale, grad))
}

pub fn loss_stt(yhat: &Matrix, s: &Matrix, cfg: &LossConfig) -> Result<f64> {
    stt_with_grad(yhat, s, cfg).map(|(l, _)| l)
}

/// `E_j`: mean predicted probability of each class over the batch.
pub fn class_energy(yhat: &Matrix) -> Vec<f64> {
    yhat.col_means().into_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTargets {
    pub m_in: Vec<f64>,
    pub m_out: Vec<f64>,
}

/// `m_in = 1 + c·p_j`, `m_out = c·(1 - p_j)` with `p_j` the positive rate of class `j`.
///
/// `p_j` is the diagonal of `YᵀY/N`; for binary labels the diagonal of
/// `(1-Y)ᵀ(1-Y)/N` is `1 - p_j`.
pub fn energy_targets(y: &Matrix, cfg: &LossConfig) -> EnergyTargets {
    let n = y.rows() as f64;
    let mut m_in = Vec::with_capacity(y.cols());
    let mut m_out = Vec::with_capacity(y.cols());
    for j in 0..y.cols() {
        let pos_rate = (0..y.rows()).map(|i| y.get(i, j) * y.get(i, j)).sum::<f64>() / n;
        let neg_rate = (0..y.rows())
            .map(|i| (1.0 - y.get(i, j)) * (1.0 - y.get(i, j)))
            .sum::<f64>()
            / n;
        m_in.push(1.0 + cfg.c * pos_rate);
        m_out.push(cfg.c * neg_rate);
    }
    EnergyTargets { m_in, m_out }
}

fn class_with_grad(yhat: &Matrix, y: &Matrix, cfg: &LossConfig) -> Result<(f64, Matrix)> {
    same_shape("loss_class", yhat, y)?;
    let n = y.rows() as f64;
    let energy = class_energy(yhat);
    let targets = energy_targets(y, cfg);
    let pos = positive_counts(y);
    let mut loss = 0.0;
    let mut d_energy = vec![0.0; y.cols()];
    for j in 0..y.cols() {
        let (w_pos, w_neg) = if cfg.class_count_scaling {
            (pos[j], n - pos[j])
        } else {
            (1.0, 1.0)
        };
        let over = (energy[j] - targets.m_in[j]).max(0.0);
        let under = (targets.m_out[j] - energy[j]).max(0.0);
        loss += w_pos * over * over + w_neg * under * under;
        d_energy[j] = 2.0 * w_pos * over - 2.0 * w_neg * under;
    }
    let grad = Matrix::from_fn(y.rows(), y.cols(), |_, j| d_energy[j] / n);
    Ok((loss, grad))
}

pub fn loss_class(yhat: &Matrix, y: &Matrix, cfg: &LossConfig) -> Result<f64> {
    class_with_grad(yhat, y, cfg).map(|(l, _)| l)
}

fn sample_with_grad(yhat: &Matrix, y: &Matrix, cfg: &LossConfig) -> Result<(f64, Matrix)> {
    same_shape("loss_sample", yhat, y)?;
    let n = y.rows() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        let expected = cfg.e1 + cfg.e2 * y.row(i).iter().sum::<f64>();
        let gap = (expected - yhat.row(i).iter().sum::<f64>()).max(0.0);
        loss += gap * gap;
        let g = -2.0 * gap / n;
        grad.row_mut(i).iter_mut().for_each(|v| *v = g);
    }
    Ok((loss / n, grad))
}

pub fn loss_sample(yhat: &Matrix, y: &Matrix, cfg: &LossConfig) -> Result<f64> {
    sample_with_grad(yhat, y, cfg).map(|(l, _)| l)
}

fn col_with_grad(yhat: &Matrix, y: &Matrix) -> Result<(f64, Matrix)> {
    same_shape("loss_col", yhat, y)?;
    let n = y.rows() as f64;
    let diff = yhat.matmul_tn(yhat)?.sub(&y.matmul_tn(y)?)?.scale(1.0 / n);
    let loss = diff.frobenius_sq();
    // diff is symmetric, so d/dŶ ‖diff‖² = (4/N) Ŷ diff
    let grad = yhat.matmul_nt(&diff)?.scale(4.0 / n);
    Ok((loss, grad))
}

pub fn loss_col(yhat: &Matrix, y: &Matrix) -> Result<f64> {
    col_with_grad(yhat, y).map(|(l, _)| l)
}

fn resolve_weights(y: &Matrix, cfg: &LossConfig, weights: Option<&[f64]>) -> Vec<f64> {
    match weights {
        Some(w) => w.to_vec(),
        None => class_weights(y, cfg),
    }
}

/// Value of one component and its gradient with respect to the logits.
/// `weights = None` derives class weights from `y`.
pub fn component_loss(
    component: Component,
    logits: &Matrix,
    y: &Matrix,
    s: &Matrix,
    cfg: &LossConfig,
    weights: Option<&[f64]>,
) -> Result<(f64, Matrix)> {
    same_shape("component_loss", logits, y)?;
    let pred = PredictionMatrix::from_logits(logits.clone());
    let (value, d_prob) = component_prob_grad(component, &pred.probs, y, s, cfg, weights)?;
    Ok((value, d_prob.zip_map(&pred.dprob_dlogit(), |a, b| a * b)?))
}

fn component_prob_grad(
    component: Component,
    probs: &Matrix,
    y: &Matrix,
    s: &Matrix,
    cfg: &LossConfig,
    weights: Option<&[f64]>,
) -> Result<(f64, Matrix)> {
    match component {
        Component::Basis => basis_with_grad(probs, y, &resolve_weights(y, cfg, weights)),
        Component::Stt => stt_with_grad(probs, s, cfg),
        Component::Class => class_with_grad(probs, y, cfg),
        Component::Sample => sample_with_grad(probs, y, cfg),
        Component::Col => col_with_grad(probs, y),
    }
}

/// Every component, the weighted total, and the gradient of the total with
/// respect to the logits.
pub fn total_loss(
    logits: &Matrix,
    y: &Matrix,
    s: &Matrix,
    cfg: &LossConfig,
    weights: Option<&[f64]>,
) -> Result<LossBreakdown> {
    same_shape("total_loss", logits, y)?;
    if y.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let pred = PredictionMatrix::from_logits(logits.clone());
    let w = resolve_weights(y, cfg, weights);
    let (basis, g_basis) = basis_with_grad(&pred.probs, y, &w)?;
    let (stt, g_stt) = stt_with_grad(&pred.probs, s, cfg)?;
    let (class_energy, g_class) = class_with_grad(&pred.probs, y, cfg)?;
    let (sample, g_sample) = sample_with_grad(&pred.probs, y, cfg)?;
    let (col, g_col) = col_with_grad(&pred.probs, y)?;

    let total =
        basis + cfg.lambda1 * stt + cfg.lambda2 * class_energy + cfg.lambda3 * sample + cfg.lambda4 * col;

    let mut d_prob = g_basis;
    for (lambda, g) in [
        (cfg.lambda1, &g_stt),
        (cfg.lambda2, &g_class),
        (cfg.lambda3, &g_sample),
        (cfg.lambda4, &g_col),
    ] {
        if lambda != 0.0 {
            d_prob.add_assign(&g.scale(lambda))?;
        }
    }
    let grad_logits = d_prob.zip_map(&pred.dprob_dlogit(), |a, b| a * b)?;
    Ok(LossBreakdown {
        basis,
        stt,
        class_energy,
        sample,
        col,
        total,
        grad_logits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn column(values: &[f64]) -> Matrix {
        Matrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn weights_balanced_column() {
        let y = column(&[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(class_weights(&y, &LossConfig::default()), vec![1.0]);
    }

    #[test]
    fn weights_clamp_both_ends() {
        let mut v = vec![0.0; 1000];
        v[0] = 1.0;
        assert_eq!(class_weights(&column(&v), &LossConfig::default()), vec![10.0]);
        let y = column(&[1.0; 9]);
        assert_eq!(class_weights(&y, &LossConfig::default()), vec![0.1]);
    }

    #[test]
    fn basis_closed_forms() {
        let l = loss_basis(&m(&[&[0.5]]), &m(&[&[1.0]]), &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let y = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(loss_basis(&y, &y, &[1.0, 1.0]).unwrap() < 1e-5);
    }

    #[test]
    fn basis_rejects_bad_weights() {
        let y = m(&[&[1.0, 0.0]]);
        assert!(matches!(
            loss_basis(&y, &y, &[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn stt_examples() {
        let cfg = LossConfig {
            tau: 0.9,
            ..LossConfig::default()
        };
        let s = m(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let a = [0.2, 0.7, 0.4];
        let b = [0.9, 0.1, 0.5];
        let yhat = m(&[&a, &a, &b]);
        assert_eq!(loss_stt(&yhat, &s, &cfg).unwrap(), 0.0);

        let c = [0.6, 0.3, 0.1];
        let yhat = m(&[&a, &c, &b]);
        let dist = a
            .iter()
            .zip(&c)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let expected = 2.0 / 9.0 * dist;
        assert!((loss_stt(&yhat, &s, &cfg).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn stt_strict_threshold_empties_mask() {
        let cfg = LossConfig {
            tau: 1.0,
            ..LossConfig::default()
        };
        let s = m(&[&[1.0, 0.2], &[0.3, 1.0], &[0.5, 0.5]]);
        let yhat = m(&[&[0.1], &[0.9], &[0.5]]);
        assert_eq!(loss_stt(&yhat, &s, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn frobenius_literal_mode() {
        let cfg = LossConfig {
            tau: 0.3,
            sim_mode: SimilarityMode::FrobeniusLiteral,
            ..LossConfig::default()
        };
        // SSᵀ/‖S‖² = [[.5,.5],[.5,.5]] for two identical unit rows
        let s = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let mask = similarity_mask(&s, &cfg);
        assert_eq!(mask, m(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let strict = LossConfig { tau: 0.6, ..cfg };
        assert_eq!(similarity_mask(&s, &strict), Matrix::zeros(2, 2));
    }

    #[test]
    fn energy_examples() {
        assert_eq!(class_energy(&Matrix::filled(3, 2, 0.5)), vec![0.5, 0.5]);
        let e = class_energy(&column(&[0.2, 0.6]));
        assert!((e[0] - 0.4).abs() < 1e-15);

        let cfg = LossConfig::default();
        let t = energy_targets(&column(&[1.0, 1.0]), &cfg);
        assert_eq!((t.m_in[0], t.m_out[0]), (1.2, 0.0));
        let t = energy_targets(&column(&[0.0, 0.0]), &cfg);
        assert_eq!((t.m_in[0], t.m_out[0]), (1.0, 0.2));
        let zero_c = LossConfig { c: 0.0, ..cfg };
        let t = energy_targets(&m(&[&[1.0, 0.0], &[0.0, 0.0]]), &zero_c);
        assert_eq!(t.m_in, vec![1.0, 1.0]);
        assert_eq!(t.m_out, vec![0.0, 0.0]);
    }

    #[test]
    fn class_loss_closed_form() {
        let l = loss_class(&m(&[&[0.1]]), &m(&[&[0.0]]), &LossConfig::default()).unwrap();
        assert!((l - 0.01).abs() < 1e-15);
        let l = loss_class(&m(&[&[0.5]]), &m(&[&[0.0]]), &LossConfig::default()).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn sample_loss_examples() {
        let cfg = LossConfig::default();
        let y = m(&[&[1.0, 1.0, 0.0, 0.0]]);
        assert_eq!(loss_sample(&m(&[&[0.9, 0.9, 0.9, 0.8]]), &y, &cfg).unwrap(), 0.0);
        let l = loss_sample(&m(&[&[0.5, 0.5, 0.5, 0.5]]), &y, &cfg).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        let l = loss_sample(&m(&[&[0.1, 0.1, 0.1, 0.1]]), &Matrix::zeros(1, 4), &cfg).unwrap();
        assert!((l - 0.36).abs() < 1e-12);
    }

    #[test]
    fn col_loss_examples() {
        let y = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(loss_col(&y, &y).unwrap(), 0.0);
        let l = loss_col(&m(&[&[1.0, 1.0]]), &m(&[&[1.0, 0.0]])).unwrap();
        assert_eq!(l, 3.0);
    }

    #[test]
    fn total_respects_weights() {
        let logits = m(&[&[0.3, -1.2, 2.0], &[-0.4, 0.8, 0.1], &[1.1, -0.3, -2.2]]);
        let y = m(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0], &[1.0, 1.0, 0.0]]);
        let s = m(&[&[1.0, 0.1], &[0.9, 0.2], &[0.0, 1.0]]);
        let cfg = LossConfig::default();
        let b = total_loss(&logits, &y, &s, &cfg, None).unwrap();
        let expect = b.basis + 0.3 * b.stt + 0.3 * b.class_energy + 0.5 * b.sample + 0.3 * b.col;
        assert!((b.total - expect).abs() < 1e-12);
        let only = total_loss(&logits, &y, &s, &LossConfig::basis_only(), None).unwrap();
        assert!((only.total - only.basis).abs() < 1e-12);
    }

    #[test]
    fn config_validation_lists_every_problem() {
        let cfg = LossConfig {
            lambda1: -0.1,
            tau: 0.0,
            weight_min: 5.0,
            weight_max: 1.0,
            ..LossConfig::default()
        };
        let problems = cfg.problems();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(problems[0].contains("loss.lambda1"));
        assert!(LossConfig::default().validate().is_ok());
    }

    #[test]
    fn saturated_logits_have_zero_gradient() {
        let logits = m(&[&[40.0, -40.0]]);
        let y = m(&[&[0.0, 1.0]]);
        let (_, g) = component_loss(
            Component::Basis,
            &logits,
            &y,
            &Matrix::filled(1, 2, 1.0),
            &LossConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }
}
