//! Finite-difference verification of every hand-written gradient: each loss
//! component and the total w.r.t. logits, every encoder tensor, and every
//! parameter of the end-to-end models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cil::{component_loss, total_loss, Component, LossConfig, PROB_CLAMP};
use crate::error::Result;
use crate::featurize::ATOM_FEATURES;
use crate::hmfm::{encode, HmfmConfig, HmfmParams};
use crate::numcore::{grad_check, sigmoid_scalar, GradCheckReport, Matrix, FD_EPS, GRAD_TOLERANCE};
use crate::train::{Batch, Model, ModelConfig, ModelMode};

/// Shapes for the random loss and encoder problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteShape {
    /// Batch rows N.
    pub n: usize,
    /// Labels M.
    pub m: usize,
    /// Similarity-feature width F.
    pub f: usize,
    /// Encoder input width A.
    pub a: usize,
    /// Encoder half-width D.
    pub d: usize,
    pub sigma_prime: f64,
}

impl Default for SuiteShape {
    fn default() -> Self {
        SuiteShape {
            n: 8,
            m: 12,
            f: 6,
            a: ATOM_FEATURES,
            d: 16,
            sigma_prime: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckItem {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    /// Inputs were moved away from a non-differentiable point before checking.
    pub nudged: bool,
}

impl GradCheckItem {
    fn new(name: impl Into<String>, report: GradCheckReport, nudged: bool) -> Self {
        GradCheckItem {
            name: name.into(),
            max_rel_err: report.max_rel_err,
            worst_index: report.worst_index,
            analytic: report.analytic,
            numeric: report.numeric,
            nudged,
        }
    }

    pub fn passes(&self) -> bool {
        self.max_rel_err < GRAD_TOLERANCE
    }
}

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

fn bernoulli(rng: &mut impl Rng, rows: usize, cols: usize, p: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| if rng.random_bool(p) { 1.0 } else { 0.0 })
}

/// Moves logits whose probabilities sit within finite-difference reach of the
/// clamp boundary, and separates prediction rows that coincide (the row
/// distance in the similarity term is not differentiable there).
fn nudge_logits(logits: &mut Matrix, rng: &mut impl Rng) -> bool {
    let mut nudged = false;
    let reach = 100.0 * FD_EPS;
    for v in logits.as_mut_slice() {
        let p = sigmoid_scalar(*v);
        let near_clamp = (p - PROB_CLAMP).abs() < reach * p.max(PROB_CLAMP)
            || (1.0 - p - PROB_CLAMP).abs() < reach * (1.0 - p).max(PROB_CLAMP);
        if near_clamp {
            *v *= 0.5;
            nudged = true;
        }
    }
    for i in 0..logits.rows() {
        for k in 0..i {
            let dist: f64 = logits
                .row(i)
                .iter()
                .zip(logits.row(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist < reach {
                for v in logits.row_mut(i) {
                    *v += rng.random_range(-0.1..0.1);
                }
                nudged = true;
            }
        }
    }
    nudged
}

/// Each loss component and the weighted total, checked w.r.t. the logits.
pub fn loss_checks(seed: u64, shape: &SuiteShape, cfg: &LossConfig) -> Result<Vec<GradCheckItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logits = uniform(&mut rng, shape.n, shape.m, -3.0, 3.0);
    let y = bernoulli(&mut rng, shape.n, shape.m, 0.35);
    let s = uniform(&mut rng, shape.n, shape.f, 0.0, 1.0);
    let nudged = nudge_logits(&mut logits, &mut rng);

    let mut items = Vec::with_capacity(Component::ALL.len() + 1);
    for component in Component::ALL {
        let (_, grad) = component_loss(component, &logits, &y, &s, cfg, None)?;
        let report = grad_check(
            |z| component_loss(component, z, &y, &s, cfg, None).map_or(f64::NAN, |(v, _)| v),
            &grad,
            &logits,
        )?;
        items.push(GradCheckItem::new(
            format!("cil.{}", component.name()),
            report,
            nudged,
        ));
    }
    let grad = total_loss(&logits, &y, &s, cfg, None)?.grad_logits;
    let report = grad_check(
        |z| total_loss(z, &y, &s, cfg, None).map_or(f64::NAN, |b| b.total),
        &grad,
        &logits,
    )?;
    items.push(GradCheckItem::new("cil.total", report, nudged));
    Ok(items)
}

/// Encoder gradients of `⟨R, encode(x)⟩` for a random `R`, w.r.t. the input
/// and every learnable tensor.
pub fn hmfm_checks(seed: u64, shape: &SuiteShape, identity_projection: bool) -> Result<Vec<GradCheckItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = HmfmConfig {
        dim: shape.d,
        sigma_prime: shape.sigma_prime,
        identity_projection,
    };
    let mut params = HmfmParams::init(shape.a, &config, &mut rng)?;
    // move gains and biases off their initial values so no term is trivially zero
    for (name, t) in params.tensors_mut() {
        if name.ends_with("bias") || name == "norm_gain" {
            for v in t.as_mut_slice() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
    }
    let x = uniform(&mut rng, shape.n, shape.a, 0.0, 1.0);
    let r = uniform(&mut rng, shape.n, 2 * shape.d, -1.0, 1.0);
    let objective = |x: &Matrix, p: &HmfmParams| -> f64 {
        encode(x, p).map_or(f64::NAN, |out| {
            out.encoded
                .as_slice()
                .iter()
                .zip(r.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        })
    };

    let (dx, grads) = encode(&x, &params)?.backward(&x, &params, &r)?;
    let mut items = Vec::new();
    let report = grad_check(|probe| objective(probe, &params), &dx, &x)?;
    items.push(GradCheckItem::new("hmfm.input", report, false));

    let names: Vec<&'static str> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (k, (name, (_, grad))) in names.iter().zip(grads.tensors()).enumerate() {
        let theta = params.tensors()[k].1.clone();
        let mut probe_params = params.clone();
        let report = grad_check(
            |probe| {
                *probe_params.tensors_mut()[k].1 = probe.clone();
                objective(&x, &probe_params)
            },
            grad,
            &theta,
        )?;
        items.push(GradCheckItem::new(format!("hmfm.{name}"), report, false));
    }
    Ok(items)
}

/// Random pooled-feature batch; graph mode treats every row as a lone atom
/// unless `neighbors` is supplied by the caller.
fn random_batch(rng: &mut impl Rng, n: usize, a: usize, m: usize) -> Result<Batch> {
    let pooled = uniform(rng, n, a, 0.0, 1.0);
    let mut labels = bernoulli(rng, n, m, 0.4);
    // one guaranteed positive per row keeps the sample term active
    for i in 0..n {
        let j = rng.random_range(0..m);
        labels.set(i, j, 1.0);
    }
    Ok(Batch {
        atoms: pooled.clone(),
        pooled,
        offsets: (0..=n).collect(),
        neighbors: vec![Vec::new(); n],
        labels,
    })
}

/// Small chain molecules packed as a graph batch (two atoms per molecule plus
/// a three-atom path) so that aggregation mixes rows.
fn chain_batch(rng: &mut impl Rng, a: usize, m: usize) -> Result<Batch> {
    let mut batch = random_batch(rng, 4, a, m)?;
    let atoms = uniform(rng, 9, a, 0.0, 1.0);
    batch.atoms = atoms;
    batch.offsets = vec![0, 2, 4, 6, 9];
    batch.neighbors = vec![
        vec![1],
        vec![0],
        vec![3],
        vec![2],
        vec![5],
        vec![4],
        vec![7],
        vec![6, 8],
        vec![7],
    ];
    Ok(batch)
}

/// Total-loss gradients w.r.t. every model parameter on a frozen random batch
/// (N=4, M=6, hidden [8]).
pub fn model_checks(seed: u64, mode: ModelMode, cfg: &LossConfig) -> Result<Vec<GradCheckItem>> {
    let (n, m, a) = (4, 6, ATOM_FEATURES);
    let config = ModelConfig {
        mode,
        hidden_dims: vec![8],
        hmfm: HmfmConfig {
            dim: 8,
            ..HmfmConfig::default()
        },
        input_dim: a,
        num_labels: m,
        seed,
    };
    let model = Model::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));

    // resample inputs until no hidden unit sits on the ReLU kink
    let mut nudged = false;
    let mut batch;
    loop {
        batch = match mode {
            ModelMode::Mlp => random_batch(&mut rng, n, a, m)?,
            ModelMode::Graph => chain_batch(&mut rng, a, m)?,
        };
        let (_, cache) = model.forward_with_cache(&batch)?;
        if cache.min_abs_pre_activation() > 1e-3 {
            break;
        }
        nudged = true;
    }

    let loss_of = |model: &Model| -> f64 {
        model
            .forward(&batch)
            .and_then(|p| total_loss(&p.logits, &batch.labels, &batch.pooled, cfg, None))
            .map_or(f64::NAN, |b| b.total)
    };
    let (pred, cache) = model.forward_with_cache(&batch)?;
    let breakdown = total_loss(&pred.logits, &batch.labels, &batch.pooled, cfg, None)?;
    let grads = model.backward(&cache, &breakdown.grad_logits)?;

    let prefix = match mode {
        ModelMode::Mlp => "mlp",
        ModelMode::Graph => "graph",
    };
    let named: Vec<(String, Matrix)> = model.tensors().into_iter().map(|(n, t)| (n, t.clone())).collect();
    let mut items = Vec::with_capacity(named.len());
    for (k, ((name, theta), grad)) in named.iter().zip(grads.tensors()).enumerate() {
        let mut probe_model = model.clone();
        let report = grad_check(
            |probe| {
                *probe_model.tensors_mut()[k].1 = probe.clone();
                loss_of(&probe_model)
            },
            grad,
            theta,
        )?;
        items.push(GradCheckItem::new(format!("{prefix}.{name}"), report, nudged));
    }
    Ok(items)
}

/// Every check for one seed: loss components, encoder, and both model modes.
pub fn gradient_suite(seed: u64, shape: &SuiteShape) -> Result<Vec<GradCheckItem>> {
    let cfg = LossConfig::default();
    let mut items = loss_checks(seed, shape, &cfg)?;
    items.extend(hmfm_checks(seed, shape, false)?);
    items.extend(model_checks(seed, ModelMode::Mlp, &cfg)?);
    items.extend(model_checks(seed, ModelMode::Graph, &cfg)?);
    Ok(items)
}
