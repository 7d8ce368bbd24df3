use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::smiles::RawRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelCount {
    pub label: String,
    pub count: u64,
}

/// Distinct labels of a record, ignoring repeats within the row.
fn distinct_labels(record: &RawRecord) -> BTreeSet<&str> {
    record.labels.iter().map(String::as_str).collect()
}

/// Molecules per descriptor, most frequent first, ties broken by name.
pub fn descriptor_frequencies(records: &[RawRecord]) -> Vec<LabelCount> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for r in records {
        for label in distinct_labels(r) {
            *counts.entry(label).or_default() += 1;
        }
    }
    let mut out: Vec<LabelCount> = counts
        .into_iter()
        .map(|(label, count)| LabelCount {
            label: label.to_string(),
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelCountBin {
    /// Number of descriptors on a molecule.
    pub labels: usize,
    pub molecules: u64,
    pub fraction: f64,
}

/// Histogram of per-molecule descriptor counts, ascending by count.
pub fn label_count_distribution(records: &[RawRecord]) -> Vec<LabelCountBin> {
    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    for r in records {
        *hist.entry(distinct_labels(r).len()).or_default() += 1;
    }
    let total = records.len() as f64;
    hist.into_iter()
        .map(|(labels, molecules)| LabelCountBin {
            labels,
            molecules,
            fraction: molecules as f64 / total,
        })
        .collect()
}

/// Fraction of molecules whose descriptor count lies in `range`.
pub fn fraction_with_label_count(bins: &[LabelCountBin], range: std::ops::RangeInclusive<usize>) -> f64 {
    bins.iter()
        .filter(|b| range.contains(&b.labels))
        .map(|b| b.fraction)
        .sum()
}

/// Symmetric descriptor-pair counts over the `top_k` most frequent descriptors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoOccurrenceMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl CoOccurrenceMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<u64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.counts[i][j])
    }
}

pub fn co_occurrence(records: &[RawRecord], top_k: usize) -> CoOccurrenceMatrix {
    let labels: Vec<String> = descriptor_frequencies(records)
        .into_iter()
        .take(top_k)
        .map(|c| c.label)
        .collect();
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for r in records {
        let present: Vec<usize> = distinct_labels(r)
            .into_iter()
            .filter_map(|l| index.get(l).copied())
            .collect();
        for &a in &present {
            for &b in &present {
                counts[a][b] += 1;
            }
        }
    }
    CoOccurrenceMatrix { labels, counts }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, e.into())
}

pub fn write_frequencies_csv(path: impl AsRef<Path>, freqs: &[LabelCount]) -> Result<()> {
    let path = path.as_ref();
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(["label", "count"]).map_err(&err)?;
    for f in freqs {
        w.write_record([f.label.clone(), f.count.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_label_counts_csv(path: impl AsRef<Path>, bins: &[LabelCountBin]) -> Result<()> {
    let path = path.as_ref();
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(["labels", "molecules", "fraction"])
        .map_err(&err)?;
    for b in bins {
        w.write_record([
            b.labels.to_string(),
            b.molecules.to_string(),
            b.fraction.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Square CSV: header row of labels, then one row per label prefixed by its name.
pub fn write_co_occurrence_csv(path: impl AsRef<Path>, m: &CoOccurrenceMatrix) -> Result<()> {
    let path = path.as_ref();
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    let mut header = vec![String::from("label")];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).map_err(&err)?;
    for (label, row) in m.labels.iter().zip(&m.counts) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(labels: &[&str]) -> RawRecord {
        RawRecord::new("C", labels)
    }

    #[test]
    fn frequency_ties_break_by_name() {
        let data = [rec(&["a"]), rec(&["b", "a"]), rec(&["b"])];
        let f = descriptor_frequencies(&data);
        assert_eq!(
            f,
            vec![
                LabelCount {
                    label: "a".into(),
                    count: 2
                },
                LabelCount {
                    label: "b".into(),
                    count: 2
                }
            ]
        );
        assert!(descriptor_frequencies(&[]).is_empty());
    }

    #[test]
    fn label_count_histogram() {
        let data = [rec(&["a"]), rec(&["b"]), rec(&["a", "b", "c"])];
        let h = label_count_distribution(&data);
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].labels, h[0].molecules), (1, 2));
        assert!((h[0].fraction - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((h[1].labels, h[1].molecules), (3, 1));
        let single = label_count_distribution(&[rec(&["a"]), rec(&["b"])]);
        assert_eq!(single[0].fraction, 1.0);
        assert_eq!(fraction_with_label_count(&h, 2..=3), 1.0 / 3.0);
    }

    #[test]
    fn co_occurrence_counts_pairs() {
        let data = [rec(&["a", "b"]), rec(&["a", "b"])];
        let m = co_occurrence(&data, 2);
        assert_eq!(m.get("a", "b"), Some(2));
        assert_eq!(m.get("a", "a"), Some(2));

        let disjoint = [rec(&["a"]), rec(&["b"]), rec(&["c"])];
        let m = co_occurrence(&disjoint, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.counts[i][j], u64::from(i == j));
            }
        }
    }

    #[test]
    fn top_k_restricts_labels() {
        let data = [rec(&["a", "b", "c"]), rec(&["a", "b"]), rec(&["a"])];
        let m = co_occurrence(&data, 2);
        assert_eq!(m.labels, ["a", "b"]);
        assert_eq!(m.counts, vec![vec![3, 2], vec![2, 2]]);
    }

    #[test]
    fn repeated_labels_count_once() {
        let data = [rec(&["a", "a"])];
        assert_eq!(descriptor_frequencies(&data)[0].count, 1);
        assert_eq!(label_count_distribution(&data)[0].labels, 1);
    }
}
