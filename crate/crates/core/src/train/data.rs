use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analyze::descriptor_frequencies;
use crate::error::{Error, Result};
use crate::featurize::featurize;
use crate::numcore::Matrix;
use crate::smiles::{CleanReport, KeptRow, RawRecord};

/// Descriptor names in column order (most frequent first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        LabelVocabulary { names, index }
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RawRecord>) -> Self {
        let records: Vec<RawRecord> = records.into_iter().cloned().collect();
        Self::new(
            descriptor_frequencies(&records)
                .into_iter()
                .map(|c| c.label)
                .collect(),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn encode(&self, labels: &[String]) -> std::result::Result<Vec<f64>, Vec<String>> {
        let mut row = vec![0.0; self.len()];
        let mut unknown = Vec::new();
        for l in labels {
            match self.index_of(l) {
                Some(j) => row[j] = 1.0,
                None => unknown.push(l.clone()),
            }
        }
        if unknown.is_empty() {
            Ok(row)
        } else {
            Err(unknown)
        }
    }
}

/// A featurized, labelled molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub smiles: String,
    /// Pooled molecule features, length A.
    pub pooled: Vec<f64>,
    /// Per-atom features, `atoms × A`.
    pub atoms: Matrix,
    pub neighbors: Vec<Vec<usize>>,
    /// Binary targets, length M.
    pub labels: Vec<f64>,
}

impl Sample {
    pub fn from_row(row: &KeptRow, vocab: &LabelVocabulary) -> Result<Self> {
        let (atoms, pooled) = featurize(&row.graph)?;
        let labels = vocab.encode(&row.record.labels).map_err(Error::LabelMismatch)?;
        Ok(Sample {
            smiles: row.record.smiles.clone(),
            pooled: pooled.into_matrix().into_vec(),
            atoms: atoms.into_matrix(),
            neighbors: row.graph.neighbors(),
            labels,
        })
    }
}

/// Featurizes every kept row. Labels missing from `vocab` are collected and
/// reported together.
pub fn build_samples(report: &CleanReport, vocab: &LabelVocabulary) -> Result<Vec<Sample>> {
    let mut unknown = BTreeSet::new();
    let mut samples = Vec::with_capacity(report.kept.len());
    for row in &report.kept {
        match Sample::from_row(row, vocab) {
            Ok(s) => samples.push(s),
            Err(Error::LabelMismatch(labels)) => unknown.extend(labels),
            Err(e) => return Err(e),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::LabelMismatch(unknown.into_iter().collect()));
    }
    Ok(samples)
}

/// Seeded shuffle, then the first `round(train_fraction · n)` samples train.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * train_fraction).round() as usize;
    let cut = cut.min(n);
    let val = idx.split_off(cut);
    (idx, val)
}

/// Stacked inputs for a set of samples.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `N × A` pooled features; also the similarity features for the loss.
    pub pooled: Matrix,
    /// `Σ atoms × A`.
    pub atoms: Matrix,
    /// Atom row ranges per molecule: molecule `i` owns `offsets[i]..offsets[i + 1]`.
    pub offsets: Vec<usize>,
    /// Neighbor lists using batch-global atom indices.
    pub neighbors: Vec<Vec<usize>>,
    /// `N × M` targets.
    pub labels: Matrix,
}

impl Batch {
    pub fn new(samples: &[&Sample]) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyBatch)?;
        let width = first.pooled.len();
        let m = first.labels.len();
        let pooled = Matrix::from_rows(&samples.iter().map(|s| s.pooled.as_slice()).collect::<Vec<_>>())?;
        let labels = Matrix::from_rows(&samples.iter().map(|s| s.labels.as_slice()).collect::<Vec<_>>())?;
        debug_assert_eq!(labels.cols(), m);

        let total: usize = samples.iter().map(|s| s.atoms.rows()).sum();
        let mut atom_data = Vec::with_capacity(total * width);
        let mut offsets = Vec::with_capacity(samples.len() + 1);
        let mut neighbors = Vec::with_capacity(total);
        offsets.push(0);
        for s in samples {
            if s.atoms.cols() != width {
                return Err(Error::shape(
                    "Batch atoms",
                    s.atoms.shape(),
                    (s.atoms.rows(), width),
                ));
            }
            let base = *offsets.last().unwrap();
            atom_data.extend_from_slice(s.atoms.as_slice());
            neighbors.extend(
                s.neighbors
                    .iter()
                    .map(|nb| nb.iter().map(|&j| j + base).collect::<Vec<_>>()),
            );
            offsets.push(base + s.atoms.rows());
        }
        Ok(Batch {
            pooled,
            atoms: Matrix::new(total, width, atom_data)?,
            offsets,
            neighbors,
            labels,
        })
    }

    pub fn from_indices(samples: &[Sample], indices: &[usize]) -> Result<Self> {
        Self::new(&indices.iter().map(|&i| &samples[i]).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.labels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
