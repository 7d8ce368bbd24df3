//! Seeded synthetic odor datasets for smoke tests and demos.
//!
//! Molecules are random chains of C/N/O with branches, optionally attached to a
//! ring. Each label is a thresholded random linear function of the pooled
//! molecule features, so the labels are exactly learnable from the inputs the
//! models see.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::featurize::{featurize, ATOM_FEATURES};
use crate::smiles::{parse_smiles, RawRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub molecules: usize,
    pub labels: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            molecules: 200,
            labels: 10,
            seed: 17,
        }
    }
}

/// Generated records plus the hidden linear rules behind the labels.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub records: Vec<RawRecord>,
    pub label_names: Vec<String>,
    /// One weight vector per label over the pooled features.
    pub weights: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
}

const RINGS: [&str; 4] = ["c1ccccc1", "C1CCCCC1", "C1CCOC1", "c1ccncc1"];

/// A random, valence-respecting SMILES string.
pub fn random_smiles(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    let ring = rng.random_bool(0.45);
    if ring {
        s.push_str(RINGS[rng.random_range(0..RINGS.len())]);
    }
    let len = rng.random_range(if ring { 0..=5 } else { 2..=8 });
    let mut prev: Option<char> = ring.then_some('C');
    let mut prev_has_double = false;
    for k in 0..len {
        let r: f64 = rng.random();
        let atom = if r < 0.7 || prev == Some('O') || prev == Some('N') {
            'C'
        } else if r < 0.85 {
            'O'
        } else {
            'N'
        };
        let mut has_double = false;
        // chain double bonds only between two non-ring carbons
        if atom == 'C' && prev == Some('C') && !prev_has_double && !(ring && k == 0) && rng.random_bool(0.15)
        {
            s.push('=');
            has_double = true;
        }
        s.push(atom);
        let last = k + 1 == len;
        match atom {
            'C' if !last && rng.random_bool(0.35) => {
                let options: &[&str] = if has_double {
                    &["(C)", "(O)", "(N)", "(Cl)", "(F)"]
                } else {
                    &["(C)", "(O)", "(N)", "(Cl)", "(F)", "(=O)", "(Br)"]
                };
                let branch = options[rng.random_range(0..options.len())];
                has_double |= branch == "(=O)";
                s.push_str(branch);
            }
            'N' if !last && rng.random_bool(0.3) => s.push_str("(C)"),
            _ => {}
        }
        prev = Some(atom);
        prev_has_double = has_double;
    }
    s
}

/// Builds `config.molecules` distinct molecules with labels from random
/// linear rules. Thresholds sit at per-label quantiles of the rule scores.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    if config.molecules == 0 || config.labels == 0 {
        return Err(Error::InvalidConfig(
            "synthetic dataset needs at least one molecule and one label".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // oversample so that unlabeled molecules can be discarded
    let pool_size = config.molecules + config.molecules / 4 + 16;
    let mut seen = HashSet::new();
    let mut smiles = Vec::with_capacity(pool_size);
    let mut pooled = Vec::with_capacity(pool_size);
    let mut attempts = 0usize;
    while smiles.len() < pool_size {
        attempts += 1;
        if attempts > pool_size * 200 {
            return Err(Error::InvalidConfig(format!(
                "could not generate {pool_size} distinct molecules"
            )));
        }
        let s = random_smiles(&mut rng);
        if !seen.insert(s.clone()) {
            continue;
        }
        let graph = parse_smiles(&s)?;
        if !graph.warnings().is_empty() {
            continue;
        }
        let (_, p) = featurize(&graph)?;
        pooled.push(p.into_matrix().into_vec());
        smiles.push(s);
    }

    let weights: Vec<Vec<f64>> = (0..config.labels)
        .map(|_| (0..ATOM_FEATURES).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let scores: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| pooled.iter().map(|x| dot(w, x)).collect())
        .collect();
    let thresholds: Vec<f64> = scores
        .iter()
        .map(|col| {
            let q = rng.random_range(0.5..0.8);
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            sorted[((sorted.len() - 1) as f64 * q) as usize]
        })
        .collect();
    let label_names: Vec<String> = (0..config.labels).map(|k| format!("label{k:02}")).collect();

    let mut records = Vec::with_capacity(config.molecules);
    for (i, s) in smiles.iter().enumerate() {
        let labels: Vec<String> = (0..config.labels)
            .filter(|&k| scores[k][i] > thresholds[k])
            .map(|k| label_names[k].clone())
            .collect();
        if labels.is_empty() {
            continue;
        }
        records.push(RawRecord {
            smiles: s.clone(),
            labels,
        });
        if records.len() == config.molecules {
            break;
        }
    }
    if records.len() < config.molecules {
        return Err(Error::InvalidConfig(format!(
            "only {} of {} synthetic molecules received a label",
            records.len(),
            config.molecules
        )));
    }
    Ok(SyntheticDataset {
        records,
        label_names,
        weights,
        thresholds,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::clean_dataset;

    #[test]
    fn generated_molecules_parse_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let s = random_smiles(&mut rng);
            let g = parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(g.warnings().is_empty(), "{s}: {:?}", g.warnings());
        }
    }

    #[test]
    fn dataset_has_requested_size_and_is_seeded() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg).unwrap();
        assert_eq!(a.records.len(), 200);
        assert_eq!(clean_dataset(&a.records).kept.len(), 200);
        let b = generate(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        let used: HashSet<&String> = a.records.iter().flat_map(|r| &r.labels).collect();
        assert_eq!(used.len(), 10);
    }

    #[test]
    fn labels_follow_the_linear_rules() {
        let d = generate(&SyntheticConfig::default()).unwrap();
        for r in &d.records {
            let (_, p) = featurize(&parse_smiles(&r.smiles).unwrap()).unwrap();
            let x = p.into_matrix().into_vec();
            for (k, name) in d.label_names.iter().enumerate() {
                let positive = dot(&d.weights[k], &x) > d.thresholds[k];
                assert_eq!(positive, r.labels.contains(name));
            }
        }
    }
}
