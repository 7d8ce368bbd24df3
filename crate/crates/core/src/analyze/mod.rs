//! Evaluation metrics and dataset statistics.

mod metrics;
mod stats;

pub use metrics::{
    auroc, confusion_per_label, evaluate, macro_auroc, macro_f1, micro_f1, Confusion, LabelMetrics,
    MetricsReport,
};
pub use stats::{
    co_occurrence, descriptor_frequencies, fraction_with_label_count, label_count_distribution,
    write_co_occurrence_csv, write_frequencies_csv, write_label_counts_csv, CoOccurrenceMatrix, LabelCount,
    LabelCountBin,
};
