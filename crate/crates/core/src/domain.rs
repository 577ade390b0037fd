//! Core domain types: affect states, state changes, entries, and datasets.
//!
//! All types are immutable value objects after construction and safe to
//! share across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of valence levels (0..=4).
pub const VALENCE_LEVELS: u8 = 5;
/// Number of arousal levels (0..=2).
pub const AROUSAL_LEVELS: u8 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("affect state out of range: valence {valence}, arousal {arousal}")]
    OutOfRange { valence: i32, arousal: i32 },
    #[error("delta out of range: dv {dv}, da {da}")]
    DeltaOutOfRange { dv: i32, da: i32 },
    #[error("user series `{user_id}` is invalid: {reason}")]
    InvalidSeries { user_id: String, reason: String },
    #[error("dataset is invalid: {0}")]
    InvalidDataset(String),
}

/// A self-reported affect grid cell: valence 0..=4, arousal 0..=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAffectState")]
pub struct AffectState {
    valence: u8,
    arousal: u8,
}

#[derive(Deserialize)]
struct RawAffectState {
    valence: u8,
    arousal: u8,
}

impl TryFrom<RawAffectState> for AffectState {
    type Error = DomainError;

    fn try_from(raw: RawAffectState) -> Result<Self, DomainError> {
        AffectState::new(raw.valence, raw.arousal)
    }
}

impl AffectState {
    pub fn new(valence: u8, arousal: u8) -> Result<Self, DomainError> {
        if valence >= VALENCE_LEVELS || arousal >= AROUSAL_LEVELS {
            return Err(DomainError::OutOfRange {
                valence: valence as i32,
                arousal: arousal as i32,
            });
        }
        Ok(Self { valence, arousal })
    }

    pub fn valence(&self) -> u8 {
        self.valence
    }

    pub fn arousal(&self) -> u8 {
        self.arousal
    }

    /// All 15 grid cells, valence-major.
    pub fn grid() -> impl Iterator<Item = AffectState> {
        (0..VALENCE_LEVELS).flat_map(|v| (0..AROUSAL_LEVELS).map(move |a| AffectState { valence: v, arousal: a }))
    }
}

/// A step change between two affect states: dv in [-4,4], da in [-2,2].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAffectDelta")]
pub struct AffectDelta {
    dv: i8,
    da: i8,
}

#[derive(Deserialize)]
struct RawAffectDelta {
    dv: i8,
    da: i8,
}

impl TryFrom<RawAffectDelta> for AffectDelta {
    type Error = DomainError;

    fn try_from(raw: RawAffectDelta) -> Result<Self, DomainError> {
        AffectDelta::new(raw.dv, raw.da)
    }
}

impl AffectDelta {
    pub fn new(dv: i8, da: i8) -> Result<Self, DomainError> {
        let v_span = VALENCE_LEVELS as i8 - 1;
        let a_span = AROUSAL_LEVELS as i8 - 1;
        if dv < -v_span || dv > v_span || da < -a_span || da > a_span {
            return Err(DomainError::DeltaOutOfRange {
                dv: dv as i32,
                da: da as i32,
            });
        }
        Ok(Self { dv, da })
    }

    pub fn dv(&self) -> i8 {
        self.dv
    }

    pub fn da(&self) -> i8 {
        self.da
    }
}

impl std::ops::Neg for AffectDelta {
    type Output = AffectDelta;

    fn neg(self) -> AffectDelta {
        AffectDelta { dv: -self.dv, da: -self.da }
    }
}

/// Change from `a` to `b`, component-wise `b - a`.
pub fn delta_between(a: AffectState, b: AffectState) -> AffectDelta {
    AffectDelta {
        dv: b.valence as i8 - a.valence as i8,
        da: b.arousal as i8 - a.arousal as i8,
    }
}

/// Apply a delta to a state; errors if the result leaves the grid.
pub fn apply_delta(s: AffectState, d: AffectDelta) -> Result<AffectState, DomainError> {
    let v = s.valence as i32 + d.dv as i32;
    let a = s.arousal as i32 + d.da as i32;
    if v < 0 || v >= VALENCE_LEVELS as i32 || a < 0 || a >= AROUSAL_LEVELS as i32 {
        return Err(DomainError::OutOfRange { valence: v, arousal: a });
    }
    Ok(AffectState { valence: v as u8, arousal: a as u8 })
}

/// Whether an entry is a free-form essay or a list of feeling words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Essay,
    FeelingWords,
}

/// One user text with its order index and optional gold state/features.
///
/// Unlabeled prediction inputs carry `state: None`; precomputed text
/// features and cluster annotations are optional side channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub user_id: String,
    pub seq: u32,
    pub kind: EntryKind,
    pub text: String,
    pub state: Option<AffectState>,
    pub features: Option<Vec<f64>>,
    pub clusters: Option<Vec<u8>>,
}

impl Entry {
    pub fn new(user_id: impl Into<String>, seq: u32, kind: EntryKind, text: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            seq,
            kind,
            text: text.into(),
            state: None,
            features: None,
            clusters: None,
        }
    }

    pub fn with_state(mut self, state: AffectState) -> Self {
        self.state = Some(state);
        self
    }
}

/// Chronologically ordered entries of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSeries {
    user_id: String,
    entries: Vec<Entry>,
}

impl UserSeries {
    /// Entries must be non-empty, share `user_id`, and have strictly
    /// ascending `seq`.
    pub fn new(user_id: impl Into<String>, entries: Vec<Entry>) -> Result<Self, DomainError> {
        let user_id = user_id.into();
        if entries.is_empty() {
            return Err(DomainError::InvalidSeries {
                user_id,
                reason: "no entries".into(),
            });
        }
        for e in &entries {
            if e.user_id != user_id {
                return Err(DomainError::InvalidSeries {
                    user_id,
                    reason: format!("entry with foreign user_id `{}`", e.user_id),
                });
            }
        }
        for w in entries.windows(2) {
            if w[1].seq <= w[0].seq {
                return Err(DomainError::InvalidSeries {
                    user_id,
                    reason: format!("seq not strictly increasing at {} -> {}", w[0].seq, w[1].seq),
                });
            }
        }
        Ok(Self { user_id, entries })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A collection of user series with a consistent feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<UserSeries>,
    feature_dim: Option<usize>,
}

impl Dataset {
    /// User ids must be unique; entries carrying features must agree on
    /// the dimension.
    pub fn new(series: Vec<UserSeries>) -> Result<Self, DomainError> {
        let mut seen = std::collections::HashSet::new();
        for s in &series {
            if !seen.insert(s.user_id().to_string()) {
                return Err(DomainError::InvalidDataset(format!(
                    "duplicate user_id `{}`",
                    s.user_id()
                )));
            }
        }
        let mut feature_dim = None;
        for s in &series {
            for e in s.entries() {
                if let Some(f) = &e.features {
                    match feature_dim {
                        None => feature_dim = Some(f.len()),
                        Some(d) if d != f.len() => {
                            return Err(DomainError::InvalidDataset(format!(
                                "feature dimension mismatch: {} vs {} (user `{}` seq {})",
                                d,
                                f.len(),
                                e.user_id,
                                e.seq
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(Self { series, feature_dim })
    }

    pub fn empty() -> Self {
        Self { series: Vec::new(), feature_dim: None }
    }

    pub fn series(&self) -> &[UserSeries] {
        &self.series
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn n_users(&self) -> usize {
        self.series.len()
    }

    pub fn n_entries(&self) -> usize {
        self.series.iter().map(|s| s.len()).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.series.iter().flat_map(|s| s.entries().iter())
    }
}
