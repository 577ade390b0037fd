//! Emotion-label grid mapping and binary state-vector layouts.
//!
//! The 15 canonical labels cover the full 5x3 valence/arousal grid
//! bijectively. State vectors concatenate one-hot blocks (valence,
//! arousal, and in transition mode the deltas) with free latent bits.

use crate::domain::{apply_delta, AffectDelta, AffectState, AROUSAL_LEVELS, VALENCE_LEVELS};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("unknown emotion label `{0}`")]
    UnknownLabel(String),
    #[error("label map is invalid: {0}")]
    InvalidLabelMap(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid transition: state ({v},{a}) with delta ({dv},{da}) leaves the grid")]
    InvalidTransition { v: u8, a: u8, dv: i8, da: i8 },
    #[error("enumeration budget exceeded: layout length {len} > {budget}")]
    BudgetExceeded { len: usize, budget: usize },
}

/// Mapping between the 15 canonical emotion labels and grid cells.
#[derive(Debug, Clone)]
pub struct LabelMap {
    entries: Vec<(String, AffectState)>,
}

const BUILTIN_LABELS: [(&str, u8, u8); 15] = [
    ("Jittery, nervous", 0, 2),
    ("Somewhat jittery", 1, 2),
    ("Active", 2, 2),
    ("Somewhat lively", 3, 2),
    ("Lively, enthusiastic", 4, 2),
    ("Very sad", 0, 1),
    ("Somewhat sad", 1, 1),
    ("Neutral", 2, 1),
    ("Somewhat happy", 3, 1),
    ("Very happy", 4, 1),
    ("Sluggish, tired", 0, 0),
    ("Somewhat sluggish", 1, 0),
    ("Quiet", 2, 0),
    ("Somewhat content", 3, 0),
    ("Content, calm", 4, 0),
];

fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

impl LabelMap {
    /// The shipped default grid mapping.
    pub fn builtin() -> Self {
        let entries = BUILTIN_LABELS
            .iter()
            .map(|&(l, v, a)| (l.to_string(), AffectState::new(v, a).unwrap()))
            .collect();
        Self { entries }
    }

    /// Build from explicit pairs; validates the bijection over the grid.
    pub fn from_pairs(pairs: Vec<(String, AffectState)>) -> Result<Self, CodecError> {
        if pairs.len() != 15 {
            return Err(CodecError::InvalidLabelMap(format!(
                "expected 15 entries, got {}",
                pairs.len()
            )));
        }
        let mut labels = std::collections::HashSet::new();
        let mut cells = std::collections::HashSet::new();
        for (label, state) in &pairs {
            if !labels.insert(normalize_label(label)) {
                return Err(CodecError::InvalidLabelMap(format!("duplicate label `{label}`")));
            }
            if !cells.insert((state.valence(), state.arousal())) {
                return Err(CodecError::InvalidLabelMap(format!(
                    "duplicate grid cell ({}, {})",
                    state.valence(),
                    state.arousal()
                )));
            }
        }
        // 15 distinct cells over a 15-cell grid is full coverage.
        Ok(Self { entries: pairs })
    }

    /// Parse a CSV document with a `label,valence,arousal` header row.
    pub fn from_csv_str(text: &str) -> Result<Self, CodecError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut pairs = Vec::new();
        for record in reader.records() {
            let record =
                record.map_err(|e| CodecError::InvalidLabelMap(format!("csv parse error: {e}")))?;
            if record.len() != 3 {
                return Err(CodecError::InvalidLabelMap(format!(
                    "expected 3 columns, got {}",
                    record.len()
                )));
            }
            let label = record[0].to_string();
            let v: u8 = record[1]
                .parse()
                .map_err(|_| CodecError::InvalidLabelMap(format!("bad valence `{}`", &record[1])))?;
            let a: u8 = record[2]
                .parse()
                .map_err(|_| CodecError::InvalidLabelMap(format!("bad arousal `{}`", &record[2])))?;
            let state = AffectState::new(v, a)
                .map_err(|e| CodecError::InvalidLabelMap(e.to_string()))?;
            pairs.push((label, state));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, CodecError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CodecError::InvalidLabelMap(format!("read failed: {e}")))?;
        Self::from_csv_str(&text)
    }

    /// Case-insensitive, whitespace-trimmed label lookup.
    pub fn label_to_state(&self, label: &str) -> Result<AffectState, CodecError> {
        let needle = normalize_label(label);
        self.entries
            .iter()
            .find(|(l, _)| normalize_label(l) == needle)
            .map(|(_, s)| *s)
            .ok_or_else(|| CodecError::UnknownLabel(label.to_string()))
    }

    /// Inverse lookup; total because the map covers the full grid.
    pub fn state_to_label(&self, state: AffectState) -> &str {
        self.entries
            .iter()
            .find(|(_, s)| *s == state)
            .map(|(l, _)| l.as_str())
            .expect("label map covers the full grid")
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }
}

/// Which blocks a state vector carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    /// Valence + arousal one-hot blocks plus latent bits.
    Assessment,
    /// Adds dv/da one-hot blocks for the step to the next entry.
    Transition,
    /// Latent bits only; used by toy models and tests.
    Free,
}

const DV_WIDTH: usize = 2 * (VALENCE_LEVELS as usize - 1) + 1; // 9
const DA_WIDTH: usize = 2 * (AROUSAL_LEVELS as usize - 1) + 1; // 5

/// Fixed block layout of a binary state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StateLayout {
    pub mode: LayoutMode,
    pub latent_bits: usize,
}

impl StateLayout {
    pub fn assessment(latent_bits: usize) -> Self {
        Self { mode: LayoutMode::Assessment, latent_bits }
    }

    pub fn transition(latent_bits: usize) -> Self {
        Self { mode: LayoutMode::Transition, latent_bits }
    }

    pub fn free(latent_bits: usize) -> Self {
        Self { mode: LayoutMode::Free, latent_bits }
    }

    pub fn onehot_len(&self) -> usize {
        match self.mode {
            LayoutMode::Assessment => VALENCE_LEVELS as usize + AROUSAL_LEVELS as usize,
            LayoutMode::Transition => {
                VALENCE_LEVELS as usize + AROUSAL_LEVELS as usize + DV_WIDTH + DA_WIDTH
            }
            LayoutMode::Free => 0,
        }
    }

    pub fn total_len(&self) -> usize {
        self.onehot_len() + self.latent_bits
    }

    pub fn valence_offset(&self) -> usize {
        0
    }

    pub fn arousal_offset(&self) -> usize {
        VALENCE_LEVELS as usize
    }

    pub fn dv_offset(&self) -> usize {
        VALENCE_LEVELS as usize + AROUSAL_LEVELS as usize
    }

    pub fn da_offset(&self) -> usize {
        self.dv_offset() + DV_WIDTH
    }

    pub fn latent_offset(&self) -> usize {
        self.onehot_len()
    }

    /// Number of valid states under this layout.
    pub fn valid_count(&self) -> u64 {
        let grid = VALENCE_LEVELS as u64 * AROUSAL_LEVELS as u64;
        let base = match self.mode {
            LayoutMode::Assessment => grid,
            LayoutMode::Transition => grid * grid,
            LayoutMode::Free => 1,
        };
        base << self.latent_bits
    }
}

/// A binary vector over a [`StateLayout`], one-hot per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVector {
    layout: StateLayout,
    bits: Vec<u8>,
}

impl StateVector {
    /// Validates one-hot blocks and, in transition mode, that the decoded
    /// step stays within the grid. Latent bits are unconstrained.
    pub fn from_bits(layout: StateLayout, bits: Vec<u8>) -> Result<Self, CodecError> {
        if bits.len() != layout.total_len() {
            return Err(CodecError::LayoutMismatch(format!(
                "expected {} bits, got {}",
                layout.total_len(),
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(CodecError::LayoutMismatch(format!("non-binary bit value {b}")));
        }
        let sv = Self { layout, bits };
        sv.validate()?;
        Ok(sv)
    }

    fn one_hot_index(&self, offset: usize, width: usize) -> Result<usize, CodecError> {
        let block = &self.bits[offset..offset + width];
        let ones = block.iter().filter(|&&b| b == 1).count();
        if ones != 1 {
            return Err(CodecError::LayoutMismatch(format!(
                "block at {offset} (width {width}) has {ones} set bits, expected 1"
            )));
        }
        Ok(block.iter().position(|&b| b == 1).unwrap())
    }

    fn validate(&self) -> Result<(), CodecError> {
        match self.layout.mode {
            LayoutMode::Free => Ok(()),
            LayoutMode::Assessment => {
                self.one_hot_index(self.layout.valence_offset(), VALENCE_LEVELS as usize)?;
                self.one_hot_index(self.layout.arousal_offset(), AROUSAL_LEVELS as usize)?;
                Ok(())
            }
            LayoutMode::Transition => {
                let v = self.one_hot_index(self.layout.valence_offset(), VALENCE_LEVELS as usize)?;
                let a = self.one_hot_index(self.layout.arousal_offset(), AROUSAL_LEVELS as usize)?;
                let dv = self.one_hot_index(self.layout.dv_offset(), DV_WIDTH)? as i8
                    - (VALENCE_LEVELS as i8 - 1);
                let da = self.one_hot_index(self.layout.da_offset(), DA_WIDTH)? as i8
                    - (AROUSAL_LEVELS as i8 - 1);
                let state = AffectState::new(v as u8, a as u8)
                    .map_err(|e| CodecError::LayoutMismatch(e.to_string()))?;
                let delta = AffectDelta::new(dv, da)
                    .map_err(|e| CodecError::LayoutMismatch(e.to_string()))?;
                apply_delta(state, delta).map_err(|_| CodecError::InvalidTransition {
                    v: v as u8,
                    a: a as u8,
                    dv,
                    da,
                })?;
                Ok(())
            }
        }
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Indices of set bits, ascending.
    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect()
    }

    pub fn latent(&self) -> &[u8] {
        &self.bits[self.layout.latent_offset()..]
    }

    /// One-hot argmax per block: `(state, delta, latent)`.
    pub fn decode(&self) -> Result<(Option<AffectState>, Option<AffectDelta>, Vec<u8>), CodecError> {
        let latent = self.latent().to_vec();
        match self.layout.mode {
            LayoutMode::Free => Ok((None, None, latent)),
            LayoutMode::Assessment => {
                let v = self.one_hot_index(self.layout.valence_offset(), VALENCE_LEVELS as usize)?;
                let a = self.one_hot_index(self.layout.arousal_offset(), AROUSAL_LEVELS as usize)?;
                Ok((Some(AffectState::new(v as u8, a as u8).unwrap()), None, latent))
            }
            LayoutMode::Transition => {
                let v = self.one_hot_index(self.layout.valence_offset(), VALENCE_LEVELS as usize)?;
                let a = self.one_hot_index(self.layout.arousal_offset(), AROUSAL_LEVELS as usize)?;
                let dv = self.one_hot_index(self.layout.dv_offset(), DV_WIDTH)? as i8
                    - (VALENCE_LEVELS as i8 - 1);
                let da = self.one_hot_index(self.layout.da_offset(), DA_WIDTH)? as i8
                    - (AROUSAL_LEVELS as i8 - 1);
                Ok((
                    Some(AffectState::new(v as u8, a as u8).unwrap()),
                    Some(AffectDelta::new(dv, da).unwrap()),
                    latent,
                ))
            }
        }
    }
}

/// One-hot encode a state (and delta in transition mode) with latent bits
/// copied verbatim.
pub fn encode(
    state: AffectState,
    delta: Option<AffectDelta>,
    latent: &[u8],
    layout: StateLayout,
) -> Result<StateVector, CodecError> {
    if latent.len() != layout.latent_bits {
        return Err(CodecError::LayoutMismatch(format!(
            "latent length {} != layout latent_bits {}",
            latent.len(),
            layout.latent_bits
        )));
    }
    if let Some(b) = latent.iter().find(|&&b| b > 1) {
        return Err(CodecError::LayoutMismatch(format!("non-binary latent bit {b}")));
    }
    match (layout.mode, delta) {
        (LayoutMode::Free, _) => {
            return Err(CodecError::LayoutMismatch(
                "cannot encode affect states into a free layout".into(),
            ))
        }
        (LayoutMode::Assessment, Some(_)) => {
            return Err(CodecError::LayoutMismatch(
                "delta supplied for assessment layout".into(),
            ))
        }
        (LayoutMode::Transition, None) => {
            return Err(CodecError::LayoutMismatch(
                "transition layout requires a delta".into(),
            ))
        }
        _ => {}
    }

    let mut bits = vec![0u8; layout.total_len()];
    bits[layout.valence_offset() + state.valence() as usize] = 1;
    bits[layout.arousal_offset() + state.arousal() as usize] = 1;
    if let Some(d) = delta {
        if apply_delta(state, d).is_err() {
            return Err(CodecError::InvalidTransition {
                v: state.valence(),
                a: state.arousal(),
                dv: d.dv(),
                da: d.da(),
            });
        }
        bits[layout.dv_offset() + (d.dv() + VALENCE_LEVELS as i8 - 1) as usize] = 1;
        bits[layout.da_offset() + (d.da() + AROUSAL_LEVELS as i8 - 1) as usize] = 1;
    }
    let off = layout.latent_offset();
    bits[off..off + latent.len()].copy_from_slice(latent);
    Ok(StateVector { layout, bits })
}

/// Enumeration refuses layouts longer than this many bits.
pub const ENUMERATION_BIT_BUDGET: usize = 32;

/// Enumerate every valid state vector exactly once, in a canonical order:
/// one-hot configurations outermost (valence-major), latent counter
/// innermost with latent bit 0 as the least significant bit.
pub fn enumerate_valid(layout: StateLayout) -> Result<Vec<StateVector>, CodecError> {
    if layout.total_len() > ENUMERATION_BIT_BUDGET {
        return Err(CodecError::BudgetExceeded {
            len: layout.total_len(),
            budget: ENUMERATION_BIT_BUDGET,
        });
    }
    let configs = onehot_configs(layout);
    let n_latents = 1u64 << layout.latent_bits;
    let mut out = Vec::with_capacity(configs.len() * n_latents as usize);
    for config in &configs {
        for c in 0..n_latents {
            let mut bits = vec![0u8; layout.total_len()];
            for &i in config {
                bits[i] = 1;
            }
            let off = layout.latent_offset();
            for k in 0..layout.latent_bits {
                bits[off + k] = ((c >> k) & 1) as u8;
            }
            out.push(StateVector { layout, bits });
        }
    }
    Ok(out)
}

/// Active one-hot index sets of every valid one-hot configuration,
/// in the canonical enumeration order.
pub(crate) fn onehot_configs(layout: StateLayout) -> Vec<Vec<usize>> {
    match layout.mode {
        LayoutMode::Free => vec![Vec::new()],
        LayoutMode::Assessment => {
            let mut configs = Vec::new();
            for v in 0..VALENCE_LEVELS as usize {
                for a in 0..AROUSAL_LEVELS as usize {
                    configs.push(vec![
                        layout.valence_offset() + v,
                        layout.arousal_offset() + a,
                    ]);
                }
            }
            configs
        }
        LayoutMode::Transition => {
            let mut configs = Vec::new();
            for v in 0..VALENCE_LEVELS as usize {
                for a in 0..AROUSAL_LEVELS as usize {
                    for v_next in 0..VALENCE_LEVELS as usize {
                        for a_next in 0..AROUSAL_LEVELS as usize {
                            let dv = v_next as i64 - v as i64 + VALENCE_LEVELS as i64 - 1;
                            let da = a_next as i64 - a as i64 + AROUSAL_LEVELS as i64 - 1;
                            configs.push(vec![
                                layout.valence_offset() + v,
                                layout.arousal_offset() + a,
                                layout.dv_offset() + dv as usize,
                                layout.da_offset() + da as usize,
                            ]);
                        }
                    }
                }
            }
            configs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: u8, a: u8) -> AffectState {
        AffectState::new(v, a).unwrap()
    }

    fn dl(dv: i8, da: i8) -> AffectDelta {
        AffectDelta::new(dv, da).unwrap()
    }

    #[test]
    fn label_lookup_matches_grid_mapping() {
        let map = LabelMap::builtin();
        assert_eq!(map.label_to_state("Very happy").unwrap(), st(4, 1));
        assert_eq!(map.label_to_state("Quiet").unwrap(), st(2, 0));
        assert_eq!(map.label_to_state("Jittery, nervous").unwrap(), st(0, 2));
    }

    #[test]
    fn label_lookup_is_case_insensitive_and_trimmed() {
        let map = LabelMap::builtin();
        assert_eq!(map.label_to_state("  very HAPPY ").unwrap(), st(4, 1));
        assert!(matches!(
            map.label_to_state("blissful"),
            Err(CodecError::UnknownLabel(_))
        ));
    }

    #[test]
    fn state_to_label_inverse() {
        let map = LabelMap::builtin();
        assert_eq!(map.state_to_label(st(4, 2)), "Lively, enthusiastic");
        assert_eq!(map.state_to_label(st(2, 1)), "Neutral");
        assert_eq!(map.state_to_label(st(1, 0)), "Somewhat sluggish");
    }

    #[test]
    fn label_map_round_trips_both_ways() {
        let map = LabelMap::builtin();
        for s in AffectState::grid() {
            let label = map.state_to_label(s);
            assert_eq!(map.label_to_state(label).unwrap(), s);
        }
        for label in LabelMap::builtin().labels() {
            let s = map.label_to_state(label).unwrap();
            assert_eq!(map.state_to_label(s), label);
        }
    }

    #[test]
    fn csv_round_trip_matches_builtin() {
        let mut csv = String::from("label,valence,arousal\n");
        for (l, v, a) in BUILTIN_LABELS {
            if l.contains(',') {
                csv.push_str(&format!("\"{l}\",{v},{a}\n"));
            } else {
                csv.push_str(&format!("{l},{v},{a}\n"));
            }
        }
        let map = LabelMap::from_csv_str(&csv).unwrap();
        for s in AffectState::grid() {
            assert_eq!(map.state_to_label(s), LabelMap::builtin().state_to_label(s));
        }
    }

    #[test]
    fn shipped_csv_asset_matches_builtin() {
        let map = LabelMap::from_csv_str(include_str!("../assets/labels.csv")).unwrap();
        for s in AffectState::grid() {
            assert_eq!(map.state_to_label(s), LabelMap::builtin().state_to_label(s));
        }
    }

    #[test]
    fn csv_loads_from_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, include_str!("../assets/labels.csv")).unwrap();
        let map = LabelMap::from_csv_path(&path).unwrap();
        assert_eq!(map.label_to_state("Active").unwrap(), st(2, 2));
        assert!(LabelMap::from_csv_path(dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn csv_rejects_partial_grid() {
        let csv = "label,valence,arousal\nHappy,4,1\n";
        assert!(LabelMap::from_csv_str(csv).is_err());
    }

    #[test]
    fn encode_assessment_corner() {
        let layout = StateLayout::assessment(0);
        let sv = encode(st(0, 0), None, &[], layout).unwrap();
        assert_eq!(sv.bits(), &[1, 0, 0, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn encode_transition_positions() {
        let layout = StateLayout::transition(2);
        let sv = encode(st(2, 1), Some(dl(0, 0)), &[1, 0], layout).unwrap();
        assert_eq!(sv.active_indices(), vec![2, 6, 12, 19, 22]);
        assert_eq!(sv.latent(), &[1, 0]);
    }

    #[test]
    fn encode_rejects_invalid_transition() {
        let layout = StateLayout::transition(0);
        let err = encode(st(4, 0), Some(dl(1, 0)), &[], layout).unwrap_err();
        assert!(matches!(err, CodecError::InvalidTransition { .. }));
    }

    #[test]
    fn encode_rejects_latent_length_mismatch() {
        let layout = StateLayout::assessment(2);
        let err = encode(st(0, 0), None, &[1], layout).unwrap_err();
        assert!(matches!(err, CodecError::LayoutMismatch(_)));
    }

    #[test]
    fn encode_rejects_delta_mode_mismatch() {
        assert!(encode(st(0, 0), Some(dl(0, 0)), &[], StateLayout::assessment(0)).is_err());
        assert!(encode(st(0, 0), None, &[], StateLayout::transition(0)).is_err());
    }

    #[test]
    fn decode_inverts_encode() {
        let layout = StateLayout::transition(3);
        for v in 0..VALENCE_LEVELS {
            for a in 0..AROUSAL_LEVELS {
                let s = st(v, a);
                for dv in -(VALENCE_LEVELS as i8 - 1)..VALENCE_LEVELS as i8 {
                    for da in -(AROUSAL_LEVELS as i8 - 1)..AROUSAL_LEVELS as i8 {
                        let d = dl(dv, da);
                        if apply_delta(s, d).is_err() {
                            continue;
                        }
                        let latent = [1, 0, 1];
                        let sv = encode(s, Some(d), &latent, layout).unwrap();
                        let (ds, dd, dz) = sv.decode().unwrap();
                        assert_eq!(ds, Some(s));
                        assert_eq!(dd, Some(d));
                        assert_eq!(dz, latent.to_vec());
                    }
                }
            }
        }
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_valid(StateLayout::assessment(0)).unwrap().len(), 15);
        assert_eq!(enumerate_valid(StateLayout::transition(0)).unwrap().len(), 225);
        assert_eq!(
            enumerate_valid(StateLayout::transition(10)).unwrap().len(),
            230_400
        );
        assert_eq!(enumerate_valid(StateLayout::free(2)).unwrap().len(), 4);
    }

    #[test]
    fn enumerate_refuses_over_budget() {
        let err = enumerate_valid(StateLayout::transition(11)).unwrap_err();
        assert!(matches!(err, CodecError::BudgetExceeded { .. }));
    }

    #[test]
    fn enumerate_yields_unique_valid_vectors() {
        let layout = StateLayout::transition(2);
        let all = enumerate_valid(layout).unwrap();
        let mut seen = std::collections::HashSet::new();
        for sv in &all {
            assert!(seen.insert(sv.bits().to_vec()), "duplicate state");
            // Re-validating through the constructor exercises the invariants.
            StateVector::from_bits(layout, sv.bits().to_vec()).unwrap();
        }
    }

    #[test]
    fn from_bits_rejects_broken_onehot() {
        let layout = StateLayout::assessment(0);
        assert!(StateVector::from_bits(layout, vec![1, 1, 0, 0, 0, 1, 0, 0]).is_err());
        assert!(StateVector::from_bits(layout, vec![0, 0, 0, 0, 0, 1, 0, 0]).is_err());
        assert!(StateVector::from_bits(layout, vec![1, 0, 0, 0, 0, 1, 0]).is_err());
    }

    #[test]
    fn from_bits_rejects_out_of_grid_transition() {
        let layout = StateLayout::transition(0);
        // v=4 with dv=+1.
        let mut bits = vec![0u8; layout.total_len()];
        bits[4] = 1;
        bits[5] = 1;
        bits[layout.dv_offset() + 5] = 1;
        bits[layout.da_offset() + 2] = 1;
        assert!(matches!(
            StateVector::from_bits(layout, bits),
            Err(CodecError::InvalidTransition { .. })
        ));
    }
}
