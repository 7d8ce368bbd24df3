use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Batch;
use crate::cil::PredictionMatrix;
use crate::error::{Error, Result};
use crate::hmfm::{encode, uniform_fan_in, HmfmConfig, HmfmGrads, HmfmOutput, HmfmParams};
use crate::numcore::{hadamard, matmul, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Pooled features → HMFM → dense stack.
    Mlp,
    /// Atom features → HMFM → mean-neighbor rounds → mean pool → head.
    Graph,
}

impl FromStr for ModelMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mlp" => Ok(ModelMode::Mlp),
            "graph" => Ok(ModelMode::Graph),
            other => Err(format!("expected `mlp` or `graph`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: ModelMode,
    pub hidden_dims: Vec<usize>,
    pub hmfm: HmfmConfig,
    /// Input feature width A.
    pub input_dim: usize,
    /// Number of descriptors M.
    pub num_labels: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            out.push("model.hidden_dims must be a non-empty list of positive sizes".to_string());
        }
        if self.hmfm.dim == 0 {
            out.push("hmfm.dim must be >= 1".to_string());
        }
        if !(self.hmfm.sigma_prime >= 0.0 && self.hmfm.sigma_prime.is_finite()) {
            out.push(format!(
                "hmfm.sigma_prime must be finite and >= 0, got {}",
                self.hmfm.sigma_prime
            ));
        }
        if self.hmfm.identity_projection && self.hmfm.dim != self.input_dim {
            out.push(format!(
                "hmfm.identity_projection requires hmfm.dim == {} (the feature width)",
                self.input_dim
            ));
        }
        out
    }
}

/// Fully connected layer `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl Dense {
    fn init(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: uniform_fan_in(rng, inputs, inputs, outputs),
            bias: Matrix::zeros(1, outputs),
        }
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        matmul(x, &self.weight)?.add_row(&self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    pub hmfm: HmfmParams,
    pub hidden: Vec<Dense>,
    pub head: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub hmfm: HmfmGrads,
    pub hidden: Vec<DenseGrads>,
    pub head: DenseGrads,
}

impl ModelGrads {
    /// Same order as [`Model::tensors`].
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v: Vec<&Matrix> = self.hmfm.tensors().into_iter().map(|(_, t)| t).collect();
        for layer in &self.hidden {
            v.push(&layer.weight);
            v.push(&layer.bias);
        }
        v.push(&self.head.weight);
        v.push(&self.head.bias);
        v
    }
}

/// Forward intermediates kept for [`Model::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    encoder_input: Matrix,
    encoded: HmfmOutput,
    /// Input to each hidden layer's linear map (aggregated in graph mode).
    layer_inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    head_input: Matrix,
    offsets: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl ForwardCache {
    /// Distance of the closest hidden pre-activation to the ReLU kink.
    pub fn min_abs_pre_activation(&self) -> f64 {
        self.pre_activations
            .iter()
            .flat_map(|z| z.as_slice())
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }
}

fn relu(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

/// Mean over each atom and its neighbors.
fn aggregate(h: &Matrix, neighbors: &[Vec<usize>]) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for (t, nb) in neighbors.iter().enumerate() {
        let scale = 1.0 / (1 + nb.len()) as f64;
        let row = out.row_mut(t);
        for (o, v) in row.iter_mut().zip(h.row(t)) {
            *o = v * scale;
        }
        for &u in nb {
            for (o, v) in out.row_mut(t).iter_mut().zip(h.row(u)) {
                *o += v * scale;
            }
        }
    }
    out
}

fn aggregate_backward(d_agg: &Matrix, neighbors: &[Vec<usize>]) -> Matrix {
    let mut d_h = Matrix::zeros(d_agg.rows(), d_agg.cols());
    for (t, nb) in neighbors.iter().enumerate() {
        let scale = 1.0 / (1 + nb.len()) as f64;
        for &u in std::iter::once(&t).chain(nb) {
            let src: Vec<f64> = d_agg.row(t).iter().map(|g| g * scale).collect();
            for (d, g) in d_h.row_mut(u).iter_mut().zip(&src) {
                *d += g;
            }
        }
    }
    d_h
}

fn mean_pool(h: &Matrix, offsets: &[usize]) -> Matrix {
    let n = offsets.len() - 1;
    let mut out = Matrix::zeros(n, h.cols());
    for i in 0..n {
        let (start, end) = (offsets[i], offsets[i + 1]);
        let scale = 1.0 / (end - start) as f64;
        for t in start..end {
            for (o, v) in out.row_mut(i).iter_mut().zip(h.row(t)) {
                *o += v * scale;
            }
        }
    }
    out
}

fn mean_pool_backward(d_pooled: &Matrix, offsets: &[usize], atoms: usize) -> Matrix {
    let mut d_h = Matrix::zeros(atoms, d_pooled.cols());
    for i in 0..offsets.len() - 1 {
        let (start, end) = (offsets[i], offsets[i + 1]);
        let scale = 1.0 / (end - start) as f64;
        for t in start..end {
            for (d, g) in d_h.row_mut(t).iter_mut().zip(d_pooled.row(i)) {
                *d = g * scale;
            }
        }
    }
    d_h
}

impl Model {
    /// Random initialization from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let problems = config.problems();
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems.join("; ")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let hmfm = HmfmParams::init(config.input_dim, &config.hmfm, &mut rng)?;
        let mut width = hmfm.output_dim();
        let mut hidden = Vec::with_capacity(config.hidden_dims.len());
        for &h in &config.hidden_dims {
            hidden.push(Dense::init(&mut rng, width, h));
            width = h;
        }
        let head = Dense::init(&mut rng, width, config.num_labels);
        Ok(Model {
            config,
            hmfm,
            hidden,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Every learnable tensor with a stable name.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut v: Vec<(String, &Matrix)> = self
            .hmfm
            .tensors()
            .into_iter()
            .map(|(n, t)| (format!("hmfm.{n}"), t))
            .collect();
        for (k, layer) in self.hidden.iter().enumerate() {
            v.push((format!("hidden.{k}.weight"), &layer.weight));
            v.push((format!("hidden.{k}.bias"), &layer.bias));
        }
        v.push(("head.weight".into(), &self.head.weight));
        v.push(("head.bias".into(), &self.head.bias));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v: Vec<(String, &mut Matrix)> = self
            .hmfm
            .tensors_mut()
            .into_iter()
            .map(|(n, t)| (format!("hmfm.{n}"), t))
            .collect();
        for (k, layer) in self.hidden.iter_mut().enumerate() {
            v.push((format!("hidden.{k}.weight"), &mut layer.weight));
            v.push((format!("hidden.{k}.bias"), &mut layer.bias));
        }
        v.push(("head.weight".into(), &mut self.head.weight));
        v.push(("head.bias".into(), &mut self.head.bias));
        v
    }

    pub fn forward(&self, batch: &Batch) -> Result<PredictionMatrix> {
        self.forward_with_cache(batch).map(|(p, _)| p)
    }

    pub fn forward_with_cache(&self, batch: &Batch) -> Result<(PredictionMatrix, ForwardCache)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let graph = self.config.mode == ModelMode::Graph;
        let encoder_input = if graph {
            batch.atoms.clone()
        } else {
            batch.pooled.clone()
        };
        let encoded = encode(&encoder_input, &self.hmfm)?;
        let mut h = encoded.encoded.clone();
        let mut layer_inputs = Vec::with_capacity(self.hidden.len());
        let mut pre_activations = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let input = if graph { aggregate(&h, &batch.neighbors) } else { h };
            let z = layer.forward(&input)?;
            h = relu(&z);
            layer_inputs.push(input);
            pre_activations.push(z);
        }
        let head_input = if graph { mean_pool(&h, &batch.offsets) } else { h };
        let logits = self.head.forward(&head_input)?;
        let cache = ForwardCache {
            encoder_input,
            encoded,
            layer_inputs,
            pre_activations,
            head_input,
            offsets: batch.offsets.clone(),
            neighbors: batch.neighbors.clone(),
        };
        Ok((PredictionMatrix::from_logits(logits), cache))
    }

    /// Back-propagates a gradient on the logits to every parameter.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Matrix) -> Result<ModelGrads> {
        let graph = self.config.mode == ModelMode::Graph;
        let head = DenseGrads {
            weight: cache.head_input.matmul_tn(grad_logits)?,
            bias: grad_logits.col_sums(),
        };
        let mut d_h = grad_logits.matmul_nt(&self.head.weight)?;
        if graph {
            let atoms = cache.encoder_input.rows();
            d_h = mean_pool_backward(&d_h, &cache.offsets, atoms);
        }
        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (k, layer) in self.hidden.iter().enumerate().rev() {
            let mask = cache.pre_activations[k].map(|z| if z > 0.0 { 1.0 } else { 0.0 });
            let d_z = hadamard(&d_h, &mask)?;
            hidden.push(DenseGrads {
                weight: cache.layer_inputs[k].matmul_tn(&d_z)?,
                bias: d_z.col_sums(),
            });
            let d_input = d_z.matmul_nt(&layer.weight)?;
            d_h = if graph {
                aggregate_backward(&d_input, &cache.neighbors)
            } else {
                d_input
            };
        }
        hidden.reverse();
        let (_, hmfm) = cache.encoded.backward(&cache.encoder_input, &self.hmfm, &d_h)?;
        Ok(ModelGrads { hmfm, hidden, head })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::ATOM_FEATURES;
    use crate::smiles::{clean_dataset, RawRecord};
    use crate::train::data::{build_samples, LabelVocabulary};

    pub(crate) fn config(mode: ModelMode, labels: usize) -> ModelConfig {
        ModelConfig {
            mode,
            hidden_dims: vec![8, 6],
            hmfm: HmfmConfig {
                dim: 4,
                sigma_prime: 1.0,
                identity_projection: false,
            },
            input_dim: ATOM_FEATURES,
            num_labels: labels,
            seed: 11,
        }
    }

    fn batch(smiles: &[&str]) -> Batch {
        let labels = ["a", "b", "c", "d", "e"];
        let rows: Vec<_> = smiles.iter().map(|s| RawRecord::new(*s, &labels)).collect();
        let report = clean_dataset(&rows);
        let vocab = LabelVocabulary::new(labels.iter().map(|s| s.to_string()).collect());
        let samples = build_samples(&report, &vocab).unwrap();
        Batch::new(&samples.iter().collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn logits_have_label_width() {
        for mode in [ModelMode::Mlp, ModelMode::Graph] {
            let model = Model::new(config(mode, 5)).unwrap();
            let p = model.forward(&batch(&["CCO"])).unwrap();
            assert_eq!(p.logits.shape(), (1, 5));
        }
    }

    #[test]
    fn aggregation_of_isolated_atom_is_identity() {
        let h = Matrix::from_rows(&[[0.3, -1.0]]).unwrap();
        assert_eq!(aggregate(&h, &[vec![]]), h);
    }

    #[test]
    fn forward_is_deterministic() {
        let b = batch(&["CCO", "c1ccccc1", "CC(=O)OCC"]);
        for mode in [ModelMode::Mlp, ModelMode::Graph] {
            let a = Model::new(config(mode, 5)).unwrap().forward(&b).unwrap();
            let c = Model::new(config(mode, 5)).unwrap().forward(&b).unwrap();
            assert_eq!(a, c);
        }
    }

    #[test]
    fn graph_forward_ignores_atom_order() {
        let model = Model::new(config(ModelMode::Graph, 5)).unwrap();
        let a = model.forward(&batch(&["OCC(=O)N"])).unwrap();
        let b = model.forward(&batch(&["NC(=O)CO"])).unwrap();
        for (x, y) in a.logits.as_slice().iter().zip(b.logits.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = config(ModelMode::Mlp, 5);
        c.hidden_dims.clear();
        assert!(matches!(Model::new(c), Err(Error::InvalidConfig(_))));
    }
}
