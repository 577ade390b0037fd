//! Shared pipeline steps: cluster annotation, indicator/latent extraction,
//! and baseline feature construction.

use crate::artifacts::BaselineKind;
use crate::error::{CliError, CliResult};
use affectcast_core::autoencoder::AeModel;
use affectcast_core::clusters::{normalize_text, ClusterLexicon, IndicatorVector};
use affectcast_core::domain::{Dataset, Entry, EntryKind, UserSeries};

/// Split a feeling-word entry text into individual word/phrase items.
pub fn feeling_word_items(text: &str) -> Vec<String> {
    text.split(',')
        .map(|w| w.trim().to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Fill the `clusters` field of every entry. Returns the annotated
/// dataset and the number of feeling-word tokens that matched nothing.
pub fn annotate_dataset(ds: &Dataset, lex: &ClusterLexicon) -> CliResult<(Dataset, usize)> {
    let mut unmatched_total = 0usize;
    let mut series_out = Vec::with_capacity(ds.n_users());
    for series in ds.series() {
        let mut entries = Vec::with_capacity(series.len());
        for entry in series.entries() {
            let vector = match entry.kind {
                EntryKind::FeelingWords => {
                    let items = feeling_word_items(&entry.text);
                    let out = lex.assign_feeling_words(&items);
                    unmatched_total += out.unmatched.len();
                    out.vector
                }
                EntryKind::Essay => lex.assign_essay(&entry.text).map_err(|e| {
                    CliError::Data(format!(
                        "entry `{}`/{}: {e}",
                        entry.user_id, entry.seq
                    ))
                })?,
            };
            let mut annotated: Entry = entry.clone();
            annotated.clusters = Some(vector.bits().to_vec());
            entries.push(annotated);
        }
        series_out.push(UserSeries::new(series.user_id(), entries)?);
    }
    Ok((Dataset::new(series_out)?, unmatched_total))
}

/// 60-d indicator vector of one entry's text.
pub fn indicator_of(entry: &Entry, lex: &ClusterLexicon) -> CliResult<IndicatorVector> {
    Ok(lex.indicator_60(&entry.text).map_err(CliError::from)?)
}

/// Latent bits of one entry: the binarized autoencoder code of its
/// indicator vector. Entries with no usable text get an all-zero latent.
pub fn latent_of(
    entry: &Entry,
    lex: &ClusterLexicon,
    ae: &AeModel<f64>,
    latent_bits: usize,
) -> CliResult<Vec<u8>> {
    if normalize_text(&entry.text).is_empty() {
        return Ok(vec![0u8; latent_bits]);
    }
    let indicator = indicator_of(entry, lex)?;
    Ok(ae.encode_binary(&indicator).map_err(CliError::from)?)
}

/// All indicator vectors of a dataset (autoencoder training input).
pub fn dataset_indicators(ds: &Dataset, lex: &ClusterLexicon) -> CliResult<Vec<IndicatorVector>> {
    let mut out = Vec::with_capacity(ds.n_entries());
    for entry in ds.entries() {
        if normalize_text(&entry.text).is_empty() {
            out.push(IndicatorVector::zero());
        } else {
            out.push(indicator_of(entry, lex)?);
        }
    }
    Ok(out)
}

/// Ridge feature row for predicting one target's change after `idx`:
/// the previous score of that target, optionally followed by the current
/// entry's precomputed feature vector.
pub fn baseline_features(
    series: &UserSeries,
    idx: usize,
    target: usize,
    kind: BaselineKind,
) -> CliResult<Vec<f64>> {
    let entry = &series.entries()[idx];
    let state = entry.state.ok_or_else(|| {
        CliError::Data(format!("entry `{}`/{} is unlabeled", entry.user_id, entry.seq))
    })?;
    let prev_score = if target == 0 {
        state.valence() as f64
    } else {
        state.arousal() as f64
    };
    let mut row = vec![prev_score];
    if kind == BaselineKind::FeaturesPrev {
        let features = entry.features.as_ref().ok_or_else(|| {
            CliError::Data(format!(
                "entry `{}`/{} carries no precomputed features",
                entry.user_id, entry.seq
            ))
        })?;
        row.extend_from_slice(features);
    }
    Ok(row)
}
