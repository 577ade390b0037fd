//! Dataset JSONL format, train/dev splitting, and the seeded synthetic
//! data generator.
//!
//! One JSON object per line: `{user_id, seq, kind, text, valence?,
//! arousal?, features?, clusters?}`. Valence and arousal travel together;
//! unknown keys are rejected under strict parsing and ignored otherwise.

use crate::clusters::ClusterLexicon;
use crate::domain::{
    AffectState, Dataset, DomainError, Entry, EntryKind, UserSeries, AROUSAL_LEVELS,
    VALENCE_LEVELS,
};
use crate::neural::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: parse error: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: schema violation: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("split is impossible: {0}")]
    TooSmall(String),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    user_id: String,
    seq: u32,
    kind: EntryKind,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    valence: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arousal: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<u8>>,
}

const KNOWN_KEYS: [&str; 8] = [
    "user_id", "seq", "kind", "text", "valence", "arousal", "features", "clusters",
];

fn parse_line(text: &str, line_no: usize, strict: bool) -> Result<Entry, DataError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| DataError::ParseError { line: line_no, message: e.to_string() })?;
    if strict {
        if let Some(obj) = value.as_object() {
            for key in obj.keys() {
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(DataError::SchemaViolation {
                        line: line_no,
                        message: format!("unknown key `{key}`"),
                    });
                }
            }
        }
    }
    let line: Line = serde_json::from_value(value)
        .map_err(|e| DataError::ParseError { line: line_no, message: e.to_string() })?;
    let state = match (line.valence, line.arousal) {
        (Some(v), Some(a)) => Some(AffectState::new(v, a).map_err(|e| {
            DataError::SchemaViolation { line: line_no, message: e.to_string() }
        })?),
        (None, None) => None,
        _ => {
            return Err(DataError::SchemaViolation {
                line: line_no,
                message: "valence and arousal must appear together".into(),
            })
        }
    };
    if let Some(clusters) = &line.clusters {
        if clusters.len() != 10 || clusters.iter().any(|&b| b > 1) {
            return Err(DataError::SchemaViolation {
                line: line_no,
                message: "clusters must be 10 binary values".into(),
            });
        }
    }
    Ok(Entry {
        user_id: line.user_id,
        seq: line.seq,
        kind: line.kind,
        text: line.text,
        state,
        features: line.features,
        clusters: line.clusters,
    })
}

/// Parse a JSONL document. Entries group by user in first-seen order and
/// sort by `seq` within each user; duplicate `seq` values are rejected.
pub fn from_jsonl_str(text: &str, strict: bool) -> Result<Dataset, DataError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_user: HashMap<String, Vec<Entry>> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let entry = parse_line(raw, line_no, strict)?;
        if !by_user.contains_key(&entry.user_id) {
            order.push(entry.user_id.clone());
        }
        by_user.entry(entry.user_id.clone()).or_default().push(entry);
    }
    let mut series = Vec::with_capacity(order.len());
    for uid in order {
        let mut entries = by_user.remove(&uid).unwrap();
        entries.sort_by_key(|e| e.seq);
        if let Some(w) = entries.windows(2).find(|w| w[0].seq == w[1].seq) {
            return Err(DataError::SchemaViolation {
                line: 0,
                message: format!("user `{uid}` has duplicate seq {}", w[0].seq),
            });
        }
        series.push(UserSeries::new(uid, entries)?);
    }
    Ok(Dataset::new(series)?)
}

pub fn load(path: impl AsRef<Path>, strict: bool) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    from_jsonl_str(&text, strict)
}

pub fn to_jsonl_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for entry in ds.entries() {
        let line = Line {
            user_id: entry.user_id.clone(),
            seq: entry.seq,
            kind: entry.kind,
            text: entry.text.clone(),
            valence: entry.state.map(|s| s.valence()),
            arousal: entry.state.map(|s| s.arousal()),
            features: entry.features.clone(),
            clusters: entry.clusters.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("line serializes"));
        out.push('\n');
    }
    out
}

pub fn save(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut file = std::fs::File::create(path.as_ref())?;
    file.write_all(to_jsonl_string(ds).as_bytes())?;
    Ok(())
}

/// Synthetic-dynamics settings: per-user offsets with mean-reverting
/// integer random walks on the affect grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub entries_min: usize,
    pub entries_max: usize,
    pub seed: u64,
    /// Pull strength toward the per-user offset, in `[0,1]`.
    pub mean_reversion: f64,
    /// Standard deviation of the per-step Gaussian noise.
    pub noise: f64,
    /// Relative spread of per-user offsets around the grid center, in `[0,1]`.
    pub offset_scale: f64,
    /// Fraction of users named with an `unseen_` id prefix, emitted last;
    /// a convenience for building held-out user pools by id.
    pub unseen_user_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 50,
            entries_min: 10,
            entries_max: 20,
            seed: 7,
            mean_reversion: 0.5,
            noise: 0.6,
            offset_scale: 0.8,
            unseen_user_fraction: 0.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), DataError> {
        if self.n_users == 0 {
            return Err(DataError::InvalidConfig("n_users must be positive".into()));
        }
        if self.entries_min == 0 || self.entries_min > self.entries_max {
            return Err(DataError::InvalidConfig(format!(
                "entries range {}..={} is invalid",
                self.entries_min, self.entries_max
            )));
        }
        if !(0.0..=1.0).contains(&self.mean_reversion) {
            return Err(DataError::InvalidConfig("mean_reversion outside [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.unseen_user_fraction) {
            return Err(DataError::InvalidConfig("unseen_user_fraction outside [0,1]".into()));
        }
        if self.noise < 0.0 || self.offset_scale < 0.0 {
            return Err(DataError::InvalidConfig("negative noise or offset scale".into()));
        }
        Ok(())
    }
}

/// Which lexicon cluster a grid cell's feeling words come from.
fn cluster_name_for(state: AffectState) -> &'static str {
    match (state.arousal(), state.valence()) {
        (2, 0..=1) => "Anxious / Worried",
        (2, _) => "Energetic / Active",
        (1, 0..=1) => "Sad / Lonely",
        (1, 2) => "Bored / Indifferent",
        (1, _) => "Happy / Joyful",
        (_, 0..=1) => "Tired / Sluggish",
        _ => "Calm / Content",
    }
}

fn clamp_round(x: f64, max: u8) -> u8 {
    (x.round().max(0.0) as u64).min(max as u64) as u8
}

/// Generate a labeled dataset of feeling-word entries whose texts are
/// drawn from the shipped lexicon cluster matching each gold state, so
/// the cluster/latent pipeline carries learnable signal.
pub fn synthesize(cfg: &SynthConfig) -> Result<Dataset, DataError> {
    cfg.validate()?;
    let lex = ClusterLexicon::builtin();
    let cluster_index: HashMap<&str, usize> = lex
        .cluster_names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let mut rng = RngStream::new(cfg.seed);
    let n_unseen = ((cfg.n_users as f64) * cfg.unseen_user_fraction).round() as usize;
    let n_unseen = n_unseen.min(cfg.n_users);

    let mut series = Vec::with_capacity(cfg.n_users);
    for u in 0..cfg.n_users {
        let user_id = if u < cfg.n_users - n_unseen {
            format!("user_{u:04}")
        } else {
            format!("unseen_{:04}", u - (cfg.n_users - n_unseen))
        };
        let count = if cfg.entries_min == cfg.entries_max {
            cfg.entries_min
        } else {
            rng.range_usize(cfg.entries_min, cfg.entries_max + 1)
        };
        let mu_v = (2.0 + 2.0 * cfg.offset_scale * (2.0 * rng.uniform() - 1.0)).clamp(0.0, 4.0);
        let mu_a = (1.0 + cfg.offset_scale * (2.0 * rng.uniform() - 1.0)).clamp(0.0, 2.0);
        let mut v = clamp_round(rng.range(0.0, 4.0), VALENCE_LEVELS - 1);
        let mut a = clamp_round(rng.range(0.0, 2.0), AROUSAL_LEVELS - 1);
        let mut entries = Vec::with_capacity(count);
        for t in 0..count {
            let state = AffectState::new(v, a)?;
            // Feeling words from the state's cluster, occasionally salted
            // with a word from elsewhere.
            let cluster = cluster_index[cluster_name_for(state)];
            let keywords = lex.keywords(cluster);
            let k = rng.range_usize(2, 5.min(keywords.len() + 1));
            let mut picks: Vec<usize> = (0..keywords.len()).collect();
            rng.shuffle(&mut picks);
            let mut words: Vec<String> =
                picks[..k].iter().map(|&i| keywords[i].clone()).collect();
            if rng.bernoulli(0.2) {
                let other = rng.range_usize(0, lex.cluster_names().len());
                let kw = lex.keywords(other);
                words.push(kw[rng.range_usize(0, kw.len())].clone());
            }
            entries.push(
                Entry::new(&user_id, t as u32, EntryKind::FeelingWords, words.join(", "))
                    .with_state(state),
            );
            let noise_v = cfg.noise * rng.normal();
            let noise_a = cfg.noise * rng.normal();
            let v_next = v as f64 + cfg.mean_reversion * (mu_v - v as f64) + noise_v;
            let a_next = a as f64 + cfg.mean_reversion * (mu_a - a as f64) + noise_a;
            v = clamp_round(v_next, VALENCE_LEVELS - 1);
            a = clamp_round(a_next, AROUSAL_LEVELS - 1);
        }
        series.push(UserSeries::new(user_id, entries)?);
    }
    Ok(Dataset::new(series)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Hold out whole users (unseen-user evaluation).
    ByUser,
    /// Hold out each user's chronological tail (seen-user evaluation).
    WithinUser,
}

/// Deterministic train/dev split. `ByUser` picks users with the seeded
/// rng; `WithinUser` takes each user's tail and never places a dev entry
/// before a train entry of the same user.
pub fn split(
    ds: &Dataset,
    dev_fraction: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<(Dataset, Dataset), DataError> {
    if !(0.0..1.0).contains(&dev_fraction) || dev_fraction == 0.0 {
        return Err(DataError::TooSmall(format!(
            "dev fraction {dev_fraction} outside (0,1)"
        )));
    }
    match mode {
        SplitMode::ByUser => {
            let n = ds.n_users();
            if n < 2 {
                return Err(DataError::TooSmall(format!(
                    "ByUser split needs at least 2 users, got {n}"
                )));
            }
            let n_dev = ((n as f64 * dev_fraction).round() as usize).clamp(1, n - 1);
            let mut rng = RngStream::new(seed);
            let mut indices: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut indices);
            let dev_set: std::collections::HashSet<usize> =
                indices[..n_dev].iter().copied().collect();
            let mut train = Vec::new();
            let mut dev = Vec::new();
            for (i, s) in ds.series().iter().enumerate() {
                if dev_set.contains(&i) {
                    dev.push(s.clone());
                } else {
                    train.push(s.clone());
                }
            }
            Ok((Dataset::new(train)?, Dataset::new(dev)?))
        }
        SplitMode::WithinUser => {
            let mut train = Vec::new();
            let mut dev = Vec::new();
            for s in ds.series() {
                let len = s.len();
                let n_dev = ((len as f64 * dev_fraction).round() as usize).min(len - 1);
                let head = s.entries()[..len - n_dev].to_vec();
                train.push(UserSeries::new(s.user_id(), head)?);
                if n_dev > 0 {
                    let tail = s.entries()[len - n_dev..].to_vec();
                    dev.push(UserSeries::new(s.user_id(), tail)?);
                }
            }
            if dev.is_empty() {
                return Err(DataError::TooSmall(
                    "WithinUser split produced an empty dev set".into(),
                ));
            }
            Ok((Dataset::new(train)?, Dataset::new(dev)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_identity() {
        let ds = synthesize(&SynthConfig { n_users: 5, ..SynthConfig::default() }).unwrap();
        let text = to_jsonl_string(&ds);
        let back = from_jsonl_str(&text, true).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let ds = synthesize(&SynthConfig { n_users: 3, ..SynthConfig::default() }).unwrap();
        save(&ds, &path).unwrap();
        let back = load(&path, true).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let ds = from_jsonl_str("", true).unwrap();
        assert_eq!(ds.n_users(), 0);
    }

    #[test]
    fn out_of_range_valence_names_the_line() {
        let text = concat!(
            r#"{"user_id":"u","seq":0,"kind":"essay","text":"a","valence":1,"arousal":1}"#,
            "\n",
            r#"{"user_id":"u","seq":1,"kind":"essay","text":"b","valence":7,"arousal":1}"#,
            "\n"
        );
        match from_jsonl_str(text, false) {
            Err(DataError::SchemaViolation { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn lonely_valence_is_rejected() {
        let text = r#"{"user_id":"u","seq":0,"kind":"essay","text":"a","valence":1}"#;
        assert!(matches!(
            from_jsonl_str(text, false),
            Err(DataError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = r#"{"user_id":"u","seq":0,"kind":"essay","text":"a","mood":"ok"}"#;
        assert!(matches!(
            from_jsonl_str(text, true),
            Err(DataError::SchemaViolation { .. })
        ));
        let ds = from_jsonl_str(text, false).unwrap();
        assert_eq!(ds.n_entries(), 1);
    }

    #[test]
    fn duplicate_seq_rejected() {
        let text = concat!(
            r#"{"user_id":"u","seq":3,"kind":"essay","text":"a"}"#,
            "\n",
            r#"{"user_id":"u","seq":3,"kind":"essay","text":"b"}"#,
            "\n"
        );
        assert!(matches!(
            from_jsonl_str(text, false),
            Err(DataError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn bad_json_names_the_line() {
        match from_jsonl_str("{not json}\n", false) {
            Err(DataError::ParseError { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn no_dynamics_means_constant_series() {
        let cfg = SynthConfig {
            n_users: 4,
            mean_reversion: 0.0,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let ds = synthesize(&cfg).unwrap();
        for s in ds.series() {
            let first = s.entries()[0].state.unwrap();
            assert!(s.entries().iter().all(|e| e.state.unwrap() == first));
        }
    }

    #[test]
    fn full_reversion_jumps_to_offset_and_stays() {
        let cfg = SynthConfig {
            n_users: 6,
            mean_reversion: 1.0,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let ds = synthesize(&cfg).unwrap();
        for s in ds.series() {
            let states: Vec<_> = s.entries().iter().map(|e| e.state.unwrap()).collect();
            for w in states[1..].windows(2) {
                assert_eq!(w[0], w[1], "series should be pinned from t=1");
            }
        }
    }

    #[test]
    fn synthesis_is_byte_deterministic() {
        let cfg = SynthConfig { n_users: 10, ..SynthConfig::default() };
        let a = to_jsonl_string(&synthesize(&cfg).unwrap());
        let b = to_jsonl_string(&synthesize(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn synthesized_texts_hit_the_lexicon() {
        let ds = synthesize(&SynthConfig { n_users: 10, ..SynthConfig::default() }).unwrap();
        let lex = ClusterLexicon::builtin();
        let mut matched = 0usize;
        let mut total = 0usize;
        for e in ds.entries() {
            let words: Vec<&str> = e.text.split(',').map(|w| w.trim()).collect();
            let out = lex.assign_feeling_words(&words);
            total += 1;
            if out.vector.popcount() > 0 {
                matched += 1;
            }
            assert!(out.unmatched.is_empty(), "unmatched {:?}", out.unmatched);
        }
        assert_eq!(matched, total);
    }

    #[test]
    fn unseen_prefix_naming() {
        let cfg = SynthConfig {
            n_users: 10,
            unseen_user_fraction: 0.3,
            ..SynthConfig::default()
        };
        let ds = synthesize(&cfg).unwrap();
        let unseen = ds
            .series()
            .iter()
            .filter(|s| s.user_id().starts_with("unseen_"))
            .count();
        assert_eq!(unseen, 3);
    }

    #[test]
    fn by_user_split_counts() {
        let ds = synthesize(&SynthConfig { n_users: 10, ..SynthConfig::default() }).unwrap();
        let (train, dev) = split(&ds, 0.2, 5, SplitMode::ByUser).unwrap();
        assert_eq!(dev.n_users(), 2);
        assert_eq!(train.n_users(), 8);
        let (t2, d2) = split(&ds, 0.2, 5, SplitMode::ByUser).unwrap();
        assert_eq!(train, t2);
        assert_eq!(dev, d2);
    }

    #[test]
    fn within_user_split_takes_tails() {
        let ds = synthesize(&SynthConfig {
            n_users: 4,
            entries_min: 4,
            entries_max: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let (train, dev) = split(&ds, 0.5, 1, SplitMode::WithinUser).unwrap();
        for (ts, dsr) in train.series().iter().zip(dev.series()) {
            assert_eq!(ts.len(), 2);
            assert_eq!(dsr.len(), 2);
            let max_train = ts.entries().iter().map(|e| e.seq).max().unwrap();
            let min_dev = dsr.entries().iter().map(|e| e.seq).min().unwrap();
            assert!(max_train < min_dev, "future leaked into training");
        }
    }

    proptest::proptest! {
        /// JSONL round trip is the identity for arbitrary datasets,
        /// including awkward text content.
        #[test]
        fn jsonl_round_trip_identity(
            users in proptest::collection::vec(
                (
                    "[a-z0-9_]{1,10}",
                    proptest::collection::vec(
                        ("\\PC{0,30}", 0u8..5, 0u8..3, proptest::bool::ANY),
                        1..6,
                    ),
                ),
                1..5,
            )
        ) {
            let mut series = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for (uid, entries) in users {
                if !seen.insert(uid.clone()) {
                    continue;
                }
                let entries: Vec<Entry> = entries
                    .into_iter()
                    .enumerate()
                    .map(|(i, (text, v, a, labeled))| {
                        let mut e = Entry::new(&uid, i as u32 * 2, EntryKind::Essay, text);
                        if labeled {
                            e = e.with_state(AffectState::new(v, a).unwrap());
                        }
                        e
                    })
                    .collect();
                series.push(UserSeries::new(uid, entries).unwrap());
            }
            let ds = Dataset::new(series).unwrap();
            let back = from_jsonl_str(&to_jsonl_string(&ds), true).unwrap();
            proptest::prop_assert_eq!(ds, back);
        }
    }

    #[test]
    fn split_rejects_degenerate_inputs() {
        let ds = synthesize(&SynthConfig { n_users: 1, ..SynthConfig::default() }).unwrap();
        assert!(matches!(
            split(&ds, 0.2, 1, SplitMode::ByUser),
            Err(DataError::TooSmall(_))
        ));
        let ds = synthesize(&SynthConfig { n_users: 3, ..SynthConfig::default() }).unwrap();
        assert!(split(&ds, 0.0, 1, SplitMode::ByUser).is_err());
        assert!(split(&ds, 1.0, 1, SplitMode::ByUser).is_err());
    }
}
