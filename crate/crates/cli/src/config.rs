//! Run configuration: a flat `key=value` file with dotted section prefixes,
//! overridden by command-line values.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed=7
//! loss.lambda1=0.3
//! model.hidden_dims=64,64
//! paths.dataset=data/odorants.csv
//! ```

use std::path::{Path, PathBuf};

use olfactor::cil::LossConfig;
use olfactor::featurize::ATOM_FEATURES;
use olfactor::hmfm::HmfmConfig;
use olfactor::train::{ModelConfig, ModelMode, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub loss: LossConfig,
    pub mode: ModelMode,
    pub hidden_dims: Vec<usize>,
    pub hmfm: HmfmConfig,
    pub train: TrainConfig,
    /// Descriptors kept in the co-occurrence matrix.
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            paths: Paths {
                dataset: None,
                out_dir: PathBuf::from("out"),
                checkpoint: None,
            },
            loss: LossConfig::default(),
            mode: ModelMode::Mlp,
            hidden_dims: vec![64, 64],
            hmfm: HmfmConfig::default(),
            train: TrainConfig::default(),
            top_k: 20,
        }
    }
}

/// Every recognised key, for error messages.
pub const KEYS: &[&str] = &[
    "seed",
    "paths.dataset",
    "paths.out_dir",
    "paths.checkpoint",
    "loss.lambda1",
    "loss.lambda2",
    "loss.lambda3",
    "loss.lambda4",
    "loss.tau",
    "loss.c",
    "loss.e1",
    "loss.e2",
    "loss.weight_min",
    "loss.weight_max",
    "loss.weight_scope",
    "loss.sim_mode",
    "loss.class_count_scaling",
    "model.mode",
    "model.hidden_dims",
    "hmfm.dim",
    "hmfm.sigma_prime",
    "hmfm.identity_projection",
    "train.lr",
    "train.beta1",
    "train.beta2",
    "train.eps",
    "train.batch_size",
    "train.epochs",
    "train.train_fraction",
    "train.val_fraction",
    "train.threshold",
    "analyze.top_k",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse `{value}`: {e}"))
}

impl RunConfig {
    /// Sets one key. Errors name the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "paths.dataset" => self.paths.dataset = Some(PathBuf::from(v)),
            "paths.out_dir" => self.paths.out_dir = PathBuf::from(v),
            "paths.checkpoint" => self.paths.checkpoint = Some(PathBuf::from(v)),
            "loss.lambda1" => self.loss.lambda1 = parse(key, v)?,
            "loss.lambda2" => self.loss.lambda2 = parse(key, v)?,
            "loss.lambda3" => self.loss.lambda3 = parse(key, v)?,
            "loss.lambda4" => self.loss.lambda4 = parse(key, v)?,
            "loss.tau" => self.loss.tau = parse(key, v)?,
            "loss.c" => self.loss.c = parse(key, v)?,
            "loss.e1" => self.loss.e1 = parse(key, v)?,
            "loss.e2" => self.loss.e2 = parse(key, v)?,
            "loss.weight_min" => self.loss.weight_min = parse(key, v)?,
            "loss.weight_max" => self.loss.weight_max = parse(key, v)?,
            "loss.weight_scope" => self.loss.weight_scope = parse(key, v)?,
            "loss.sim_mode" => self.loss.sim_mode = parse(key, v)?,
            "loss.class_count_scaling" => self.loss.class_count_scaling = parse(key, v)?,
            "model.mode" => self.mode = parse(key, v)?,
            "model.hidden_dims" => {
                self.hidden_dims = v
                    .split(',')
                    .map(|d| parse(key, d.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "hmfm.dim" => self.hmfm.dim = parse(key, v)?,
            "hmfm.sigma_prime" => self.hmfm.sigma_prime = parse(key, v)?,
            "hmfm.identity_projection" => self.hmfm.identity_projection = parse(key, v)?,
            "train.lr" => self.train.lr = parse(key, v)?,
            "train.beta1" => self.train.beta1 = parse(key, v)?,
            "train.beta2" => self.train.beta2 = parse(key, v)?,
            "train.eps" => self.train.eps = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.train_fraction" => self.train.train_fraction = parse(key, v)?,
            "train.val_fraction" => self.train.val_fraction = parse(key, v)?,
            "train.threshold" => self.train.threshold = parse(key, v)?,
            "analyze.top_k" => self.top_k = parse(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key=value` lines; returns every problem found, with line numbers.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Vec<String> {
        let mut problems = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("{origin}:{}: expected key=value, got `{line}`", n + 1));
                continue;
            };
            if let Err(e) = self.set(key.trim(), value) {
                problems.push(format!("{origin}:{}: {e}", n + 1));
            }
        }
        problems
    }

    /// Applies `key=value` overrides given on the command line.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut problems = Vec::new();
        for item in overrides {
            match item.split_once('=') {
                Some((key, value)) => {
                    if let Err(e) = self.set(key.trim(), value) {
                        problems.push(e);
                    }
                }
                None => problems.push(format!("override `{item}` is not key=value")),
            }
        }
        problems
    }

    pub fn model_config(&self, num_labels: usize) -> ModelConfig {
        ModelConfig {
            mode: self.mode,
            hidden_dims: self.hidden_dims.clone(),
            hmfm: self.hmfm,
            input_dim: ATOM_FEATURES,
            num_labels,
            seed: self.seed,
        }
    }

    /// Semantic checks across all sections.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.loss.problems();
        out.extend(self.train.problems());
        out.extend(self.model_config(1).problems());
        if self.top_k == 0 {
            out.push("analyze.top_k must be >= 1".into());
        }
        out
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.paths
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.paths.out_dir.join("checkpoint.json"))
    }

    /// The dataset path, required to exist.
    pub fn require_dataset(&self) -> Result<&Path, String> {
        let path = self
            .paths
            .dataset
            .as_deref()
            .ok_or_else(|| "paths.dataset is not set (use --dataset or the config file)".to_string())?;
        if path.is_file() {
            Ok(path)
        } else {
            Err(format!("paths.dataset: {} does not exist", path.display()))
        }
    }
}

/// Builds the run configuration from defaults, an optional file and
/// `key=value` overrides (applied in that order), reporting every problem at once.
pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut problems = Vec::new();
    if let Some(path) = file {
        match std::fs::read_to_string(path) {
            Ok(text) => problems.extend(cfg.apply_text(&text, &path.display().to_string())),
            Err(e) => problems.push(format!("cannot read config {}: {e}", path.display())),
        }
    }
    problems.extend(cfg.apply_overrides(overrides.iter().map(String::as_str)));
    // keys that failed to parse keep their defaults, so semantic checks stay meaningful
    problems.extend(cfg.problems());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_key_is_settable() {
        let mut cfg = RunConfig::default();
        for key in KEYS {
            let value = match *key {
                "loss.weight_scope" => "global",
                "loss.sim_mode" => "frobenius_literal",
                "loss.class_count_scaling" | "hmfm.identity_projection" => "false",
                "model.mode" => "graph",
                "model.hidden_dims" => "8, 4",
                k if k.starts_with("paths.") => "x",
                _ => "1",
            };
            cfg.set(key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
        assert_eq!(cfg.hidden_dims, vec![8, 4]);
    }

    #[test]
    fn file_errors_are_collected_with_lines() {
        let mut cfg = RunConfig::default();
        let text = "# demo\nloss.lambda1=0.5\nloss.bogus=1\nnot a pair\ntrain.epochs=many\n";
        let problems = cfg.apply_text(text, "run.cfg");
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(problems[0].starts_with("run.cfg:3: unknown key `loss.bogus`"));
        assert!(problems[1].starts_with("run.cfg:4:"));
        assert!(problems[2].contains("train.epochs"));
        assert_eq!(cfg.loss.lambda1, 0.5);
    }

    #[test]
    fn semantic_problems_name_keys() {
        let mut cfg = RunConfig::default();
        assert!(cfg
            .apply_overrides(["loss.lambda2=-1", "train.batch_size=0"])
            .is_empty());
        let problems = cfg.problems();
        assert!(problems.iter().any(|p| p.contains("loss.lambda2")));
        assert!(problems.iter().any(|p| p.contains("train.batch_size")));
    }
}
