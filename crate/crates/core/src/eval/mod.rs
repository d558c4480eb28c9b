//! Topic extraction and evaluation: topic uniqueness, cross-lingual NPMI
//! coherence and document classification on inferred topic proportions.

mod classify;
mod cnpmi;
mod topics;

pub use classify::{
    infer_doc_topics, linear_classifier_eval, ClassifierReport, CLASSIFIER_EPOCHS, CLASSIFIER_L2,
    CLASSIFIER_LR,
};
pub use cnpmi::{cnpmi, npmi_from_counts, ReferencePairs};
pub use topics::{
    dataset_uniqueness, render_topics, top_words, topic_uniqueness, TopicSet, DEFAULT_TOP_WORDS,
};

use std::fmt::Write as _;

/// One row of a metrics report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub language: String,
    pub value: f64,
    pub seed: u64,
}

/// Renders `metric,language,value,seed` CSV.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("metric,language,value,seed\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.metric, r.language, r.value, r.seed).unwrap();
    }
    out
}
