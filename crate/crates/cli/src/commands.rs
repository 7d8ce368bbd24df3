//! Subcommand implementations. Each writes its files under `paths.out_dir`
//! and a short human-readable summary to `out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use olfactor::analyze::{
    co_occurrence, descriptor_frequencies, evaluate, label_count_distribution, write_co_occurrence_csv,
    write_frequencies_csv, write_label_counts_csv,
};
use olfactor::featurize::{featurize as featurize_graph, FEATURE_NAMES};
use olfactor::smiles::{
    clean_dataset, read_dataset, write_clean_report, write_dataset, CleanReport, RawRecord,
};
use olfactor::synthetic::{generate, SyntheticConfig};
use olfactor::train::{
    build_samples, fit, label_matrix, load_checkpoint, predict, save_checkpoint, split_indices,
    LabelVocabulary, Model, ModelMode, Sample, Trainer,
};
use olfactor::verify::{hmfm_checks, loss_checks, model_checks, GradCheckItem, SuiteShape};

use crate::config::RunConfig;
use crate::CliError;

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.paths.out_dir)?;
    Ok(&cfg.paths.out_dir)
}

fn load_clean(cfg: &RunConfig) -> Result<CleanReport, CliError> {
    let path = cfg.require_dataset().map_err(CliError::validation)?;
    let records = read_dataset(path)?;
    Ok(clean_dataset(&records))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Output(std::io::Error::other(format!("{}: {e}", path.display())))
}

/// Dataset statistics: cleaning report, descriptor frequencies, label-count
/// distribution and the top-k co-occurrence matrix.
pub fn analyze(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let report = load_clean(cfg)?;
    let dir = out_dir(cfg)?;
    let kept: Vec<RawRecord> = report.kept_records().cloned().collect();
    let freqs = descriptor_frequencies(&kept);
    let bins = label_count_distribution(&kept);

    write_clean_report(dir.join("cleaning_report.csv"), &report)?;
    write_frequencies_csv(dir.join("frequencies.csv"), &freqs)?;
    write_label_counts_csv(dir.join("label_counts.csv"), &bins)?;
    write_co_occurrence_csv(dir.join("cooccurrence.csv"), &co_occurrence(&kept, cfg.top_k))?;

    writeln!(out, "{} molecules, {} descriptors", kept.len(), freqs.len())?;
    writeln!(
        out,
        "{} rows dropped (see cleaning_report.csv)",
        report.dropped.len()
    )?;
    for f in freqs.iter().take(5) {
        writeln!(out, "  {:<16} {}", f.label, f.count)?;
    }
    Ok(())
}

/// Pooled molecule features, and optionally the per-atom matrices.
pub fn featurize(cfg: &RunConfig, with_atoms: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let report = load_clean(cfg)?;
    let dir = out_dir(cfg)?;

    let features_path = dir.join("features.csv");
    let mut features = csv::Writer::from_path(&features_path).map_err(|e| csv_error(&features_path, e))?;
    let mut header = vec!["smiles".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    features
        .write_record(&header)
        .map_err(|e| csv_error(&features_path, e))?;

    let atoms_path = dir.join("atoms.csv");
    let mut atoms = if with_atoms {
        let mut w = csv::Writer::from_path(&atoms_path).map_err(|e| csv_error(&atoms_path, e))?;
        let mut header = vec!["molecule".to_string(), "atom".to_string()];
        header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(|e| csv_error(&atoms_path, e))?;
        Some(w)
    } else {
        None
    };

    let mut atom_rows = 0;
    for (molecule, row) in report.kept.iter().enumerate() {
        let (atom_matrix, pooled) = featurize_graph(&row.graph)?;
        let mut record = vec![row.record.smiles.clone()];
        record.extend(pooled.matrix().as_slice().iter().map(f64::to_string));
        features
            .write_record(&record)
            .map_err(|e| csv_error(&features_path, e))?;
        if let Some(w) = atoms.as_mut() {
            let m = atom_matrix.matrix();
            for i in 0..m.rows() {
                let mut record = vec![molecule.to_string(), i.to_string()];
                record.extend((0..m.cols()).map(|j| m.get(i, j).to_string()));
                w.write_record(&record).map_err(|e| csv_error(&atoms_path, e))?;
            }
            atom_rows += m.rows();
        }
    }
    features.flush()?;
    if let Some(mut w) = atoms {
        w.flush()?;
    }

    writeln!(
        out,
        "featurized {} molecules ({} dropped)",
        report.kept.len(),
        report.dropped.len()
    )?;
    if with_atoms {
        writeln!(out, "wrote {atom_rows} atom rows")?;
    }
    Ok(())
}

fn write_log_line(log: &mut impl Write, record: &impl serde::Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *log, record)?;
    log.write_all(b"\n")
}

/// Splits the dataset, trains, and writes the checkpoint with the best
/// validation macro-F1 plus a JSON-lines log with one record per epoch.
pub fn train(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let report = load_clean(cfg)?;
    let vocab = LabelVocabulary::from_records(report.kept_records());
    if vocab.is_empty() {
        return Err(CliError::validation("dataset has no usable labelled molecules"));
    }
    let samples = build_samples(&report, &vocab)?;
    let (train_idx, val_idx) = split_indices(samples.len(), cfg.train.train_fraction, cfg.seed);
    if train_idx.is_empty() {
        return Err(CliError::validation(format!(
            "training split is empty ({} molecules, train.train_fraction = {})",
            samples.len(),
            cfg.train.train_fraction
        )));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<Sample>>();
    let (train_set, val_set) = (pick(&train_idx), pick(&val_idx));

    let model = Model::new(cfg.model_config(vocab.len()))?;
    let mut trainer = Trainer::new(model, cfg.train, cfg.loss)?;

    let dir = out_dir(cfg)?;
    let mut log = BufWriter::new(File::create(dir.join("train_log.jsonl"))?);
    let mut log_error = None;
    let outcome = fit(&mut trainer, &train_set, &val_set, |record| {
        if log_error.is_none() {
            log_error = write_log_line(&mut log, record).err();
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    log.flush()?;

    let checkpoint = cfg.checkpoint_path();
    if let Some(parent) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_checkpoint(&outcome.best_model, vocab.names(), &checkpoint)?;

    writeln!(
        out,
        "trained {} epochs on {} molecules ({} validation), {} descriptors",
        cfg.train.epochs,
        train_set.len(),
        val_set.len(),
        vocab.len()
    )?;
    if let Some(last) = outcome.records.last() {
        writeln!(out, "final train loss {:.6}", last.train.total)?;
    }
    if let Some(epoch) = outcome.best_epoch {
        let f1 = outcome.records[epoch - 1].val_f1.unwrap_or(f64::NAN);
        writeln!(out, "best validation macro-F1 {f1:.4} at epoch {epoch}")?;
    }
    writeln!(out, "checkpoint written to {}", checkpoint.display())?;
    Ok(())
}

/// Scores a checkpoint on a dataset and writes `metrics.json`.
pub fn eval(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let checkpoint = cfg.checkpoint_path();
    let mut problems = Vec::new();
    if let Err(e) = cfg.require_dataset() {
        problems.push(e);
    }
    if !checkpoint.is_file() {
        problems.push(format!(
            "paths.checkpoint: {} does not exist",
            checkpoint.display()
        ));
    }
    if !problems.is_empty() {
        return Err(CliError::Validation(problems));
    }

    let ckpt = load_checkpoint(&checkpoint)?;
    let report = load_clean(cfg)?;
    let vocab = LabelVocabulary::new(ckpt.labels.clone());
    let samples = build_samples(&report, &vocab)?;
    if samples.is_empty() {
        return Err(CliError::validation(
            "dataset has no usable molecules to evaluate",
        ));
    }
    let pred = predict(&ckpt.model, &samples, cfg.train.batch_size)?;
    let y = label_matrix(&samples)?;
    let metrics = evaluate(&pred.probs, &y, &ckpt.labels, cfg.train.threshold)?;

    let dir = out_dir(cfg)?;
    let json = serde_json::to_string_pretty(&metrics).map_err(std::io::Error::other)?;
    fs::write(dir.join("metrics.json"), json + "\n")?;

    writeln!(
        out,
        "{} molecules, {} descriptors",
        metrics.samples,
        ckpt.labels.len()
    )?;
    writeln!(
        out,
        "macro-F1 {:.4}  micro-F1 {:.4}",
        metrics.macro_f1, metrics.micro_f1
    )?;
    match metrics.macro_auroc {
        Some(a) => writeln!(
            out,
            "macro-AUROC {a:.4} ({} labels without both classes skipped)",
            metrics.auroc_undefined_labels
        )?,
        None => writeln!(out, "macro-AUROC undefined (no label has both classes)")?,
    }
    Ok(())
}

/// Runs the finite-difference suite for the loss, the encoder and both model
/// modes. Fails when any check exceeds the tolerance.
pub fn gradcheck(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<GradCheckItem>, CliError> {
    let mut shape = SuiteShape {
        sigma_prime: cfg.hmfm.sigma_prime,
        ..SuiteShape::default()
    };
    if cfg.hmfm.identity_projection {
        shape.d = shape.a;
    }
    let mut items = loss_checks(cfg.seed, &shape, &cfg.loss)?;
    items.extend(hmfm_checks(cfg.seed, &shape, cfg.hmfm.identity_projection)?);
    for mode in [ModelMode::Mlp, ModelMode::Graph] {
        items.extend(model_checks(cfg.seed, mode, &cfg.loss)?);
    }

    let width = items.iter().map(|i| i.name.len()).max().unwrap_or(0);
    writeln!(out, "{:<width$}  {:>12}  status  nudged", "check", "max_rel_err")?;
    for item in &items {
        writeln!(
            out,
            "{:<width$}  {:>12.3e}  {:<6}  {}",
            item.name,
            item.max_rel_err,
            if item.passes() { "ok" } else { "FAIL" },
            if item.nudged { "yes" } else { "no" },
        )?;
    }
    let failed = items.iter().filter(|i| !i.passes()).count();
    if failed > 0 {
        return Err(CliError::GradCheckFailed {
            failed,
            total: items.len(),
        });
    }
    writeln!(out, "all {} checks passed", items.len())?;
    Ok(items)
}

/// Writes a synthetic dataset whose labels follow hidden linear rules over
/// the pooled features.
pub fn synth(
    cfg: &RunConfig,
    molecules: usize,
    labels: usize,
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<PathBuf, CliError> {
    if molecules == 0 || labels == 0 {
        return Err(CliError::validation("--molecules and --labels must be >= 1"));
    }
    let data = generate(&SyntheticConfig {
        molecules,
        labels,
        seed: cfg.seed,
    })?;
    let path = match output {
        Some(p) => p,
        None => out_dir(cfg)?.join("synthetic.csv"),
    };
    write_dataset(&path, &data.records)?;
    writeln!(
        out,
        "wrote {} molecules with {} descriptors to {}",
        data.records.len(),
        data.label_names.len(),
        path.display()
    )?;
    Ok(path)
}
