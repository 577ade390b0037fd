//! Evaluation protocol: Pearson r, MAE, within-user/between-user
//! decomposition, Fisher-z composites, and per-user transition scoring.

use crate::domain::Dataset;
use crate::scalar::{real, to_f64, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("empty input")]
    EmptyInput,
    #[error("correlation input out of domain: {0}")]
    OutOfDomain(String),
    #[error("predictions do not cover the gold data: {0}")]
    CoverageGap(String),
}

/// Sample Pearson correlation. Requires length >= 2 and nonzero variance
/// on both sides.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::DegenerateInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(MetricsError::DegenerateInput(format!(
            "need at least 2 points, got {}",
            x.len()
        )));
    }
    let n = real::<T>(x.len() as f64);
    let mean_x = x.iter().copied().sum::<T>() / n;
    let mean_y = y.iter().copied().sum::<T>() / n;
    let mut cov = T::zero();
    let mut var_x = T::zero();
    let mut var_y = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == T::zero() || var_y == T::zero() {
        return Err(MetricsError::DegenerateInput("constant series".into()));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Mean absolute error.
pub fn mae<T: Scalar>(pred: &[T], gold: &[T]) -> Result<T, MetricsError> {
    if pred.is_empty() || pred.len() != gold.len() {
        return Err(MetricsError::EmptyInput);
    }
    let sum: T = pred.iter().zip(gold).map(|(&p, &g)| (p - g).abs()).sum();
    Ok(sum / real::<T>(pred.len() as f64))
}

/// Fisher-z composite: `tanh(mean(atanh(r_i)))`. Inputs with |r| >= 1 are
/// clamped to +/-(1 - 1e-6) so tiny perfect series stay finite.
pub fn fisher_composite<T: Scalar>(rs: &[T]) -> Result<T, MetricsError> {
    if rs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let limit = real::<T>(1.0 - 1e-6);
    let mut sum = T::zero();
    for &r in rs {
        if !r.is_finite() {
            return Err(MetricsError::OutOfDomain(format!("non-finite correlation {r}")));
        }
        let clamped = if r.abs() >= T::one() {
            limit * r.signum()
        } else {
            r
        };
        sum += clamped.atanh();
    }
    Ok((sum / real::<T>(rs.len() as f64)).tanh())
}

/// Metrics for one target dimension (valence or arousal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub r_between: Option<f64>,
    pub r_within: Option<f64>,
    pub r_composite: Option<f64>,
    pub mae_between: f64,
    pub mae_within: f64,
    pub mae_composite: f64,
    pub n_users_scored: usize,
    pub n_users_skipped: usize,
}

/// Assessment evaluation over both targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub valence: TargetReport,
    pub arousal: TargetReport,
}

impl EvalReport {
    /// Aligned plain-text table for terminal display.
    pub fn to_table(&self) -> String {
        fn fmt_r(r: Option<f64>) -> String {
            r.map(|v| format!("{v:.4}")).unwrap_or_else(|| "--".into())
        }
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}\n",
            "target", "r_within", "r_between", "r_comp", "mae_with", "mae_betw", "mae_comp", "scored", "skipped"
        ));
        for (name, t) in [("valence", &self.valence), ("arousal", &self.arousal)] {
            out.push_str(&format!(
                "{:<10} {:>10} {:>10} {:>10} {:>10.4} {:>10.4} {:>10.4} {:>8} {:>8}\n",
                name,
                fmt_r(t.r_within),
                fmt_r(t.r_between),
                fmt_r(t.r_composite),
                t.mae_within,
                t.mae_between,
                t.mae_composite,
                t.n_users_scored,
                t.n_users_skipped,
            ));
        }
        out
    }
}

/// Transition evaluation for one target dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTargetReport {
    /// Fisher-z composite of per-user Pearson correlations.
    pub r: Option<f64>,
    /// MAE pooled over all consecutive pairs.
    pub mae: f64,
    pub n_users_scored: usize,
    pub n_users_skipped: usize,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub valence: Option<TransitionTargetReport>,
    pub arousal: Option<TransitionTargetReport>,
}

impl TransitionReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>10} {:>10} {:>8} {:>8} {:>8}\n",
            "target", "r", "mae", "scored", "skipped", "pairs"
        ));
        for (name, t) in [("valence", &self.valence), ("arousal", &self.arousal)] {
            match t {
                Some(t) => out.push_str(&format!(
                    "{:<10} {:>10} {:>10.4} {:>8} {:>8} {:>8}\n",
                    name,
                    t.r.map(|v| format!("{v:.4}")).unwrap_or_else(|| "--".into()),
                    t.mae,
                    t.n_users_scored,
                    t.n_users_skipped,
                    t.n_pairs,
                )),
                None => out.push_str(&format!("{name:<10} {:>10}\n", "absent")),
            }
        }
        out
    }
}

/// Per-entry assessment predictions keyed by `(user_id, seq)`.
pub type AssessmentPredictions = HashMap<(String, u32), (f64, f64)>;

/// Per-pair transition predictions keyed by the *current* entry
/// `(user_id, seq)`; each value may carry one or both targets.
pub type TransitionPredictions = HashMap<(String, u32), (Option<f64>, Option<f64>)>;

fn composite_of(parts: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = parts.iter().flatten().copied().collect();
    if present.is_empty() {
        None
    } else {
        Some(to_f64(fisher_composite(&present).expect("non-empty")))
    }
}

/// Within-user / between-user / composite Pearson and MAE per target.
///
/// Users need >= 2 entries and nonzero variance on both sides to enter the
/// correlation; every labeled user enters the MAE. Composite r combines
/// the within and between values via Fisher z; composite MAE is their
/// arithmetic mean.
pub fn evaluate_assessment(
    pred: &AssessmentPredictions,
    gold: &Dataset,
) -> Result<EvalReport, MetricsError> {
    let mut per_target = Vec::new();
    for target in 0..2 {
        let mut user_rs = Vec::new();
        let mut user_maes = Vec::new();
        let mut user_mean_pred = Vec::new();
        let mut user_mean_gold = Vec::new();
        let mut skipped = 0usize;
        for series in gold.series() {
            let mut p = Vec::new();
            let mut g = Vec::new();
            for entry in series.entries() {
                let state = entry.state.ok_or_else(|| {
                    MetricsError::CoverageGap(format!(
                        "gold entry `{}`/{} is unlabeled",
                        entry.user_id, entry.seq
                    ))
                })?;
                let key = (entry.user_id.clone(), entry.seq);
                let &(vh, ah) = pred.get(&key).ok_or_else(|| {
                    MetricsError::CoverageGap(format!(
                        "no prediction for `{}`/{}",
                        entry.user_id, entry.seq
                    ))
                })?;
                p.push(if target == 0 { vh } else { ah });
                g.push(if target == 0 {
                    state.valence() as f64
                } else {
                    state.arousal() as f64
                });
            }
            user_maes.push(mae(&p, &g)?);
            user_mean_pred.push(p.iter().sum::<f64>() / p.len() as f64);
            user_mean_gold.push(g.iter().sum::<f64>() / g.len() as f64);
            match pearson(&p, &g) {
                Ok(r) => user_rs.push(r),
                Err(MetricsError::DegenerateInput(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        if user_maes.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let r_within = if user_rs.is_empty() {
            None
        } else {
            Some(to_f64(fisher_composite(&user_rs)?))
        };
        let r_between = pearson(&user_mean_pred, &user_mean_gold).ok();
        let r_composite = composite_of(&[r_within, r_between]);
        let mae_within = user_maes.iter().sum::<f64>() / user_maes.len() as f64;
        let mae_between = mae(&user_mean_pred, &user_mean_gold)?;
        per_target.push(TargetReport {
            r_between,
            r_within,
            r_composite,
            mae_between,
            mae_within,
            mae_composite: 0.5 * (mae_within + mae_between),
            n_users_scored: user_rs.len(),
            n_users_skipped: skipped,
        });
    }
    let arousal = per_target.pop().unwrap();
    let valence = per_target.pop().unwrap();
    Ok(EvalReport { valence, arousal })
}

/// Per-user Pearson over next-step deltas combined via Fisher z; MAE
/// pooled over all pairs. A target with no predictions at all is reported
/// as absent; partial coverage of a predicted target is an error.
pub fn evaluate_transition(
    pred: &TransitionPredictions,
    gold: &Dataset,
) -> Result<TransitionReport, MetricsError> {
    let mut reports: Vec<Option<TransitionTargetReport>> = Vec::new();
    for target in 0..2 {
        let covered = pred.values().any(|v| if target == 0 { v.0.is_some() } else { v.1.is_some() });
        if !covered {
            reports.push(None);
            continue;
        }
        let mut user_rs = Vec::new();
        let mut skipped = 0usize;
        let mut all_pred = Vec::new();
        let mut all_gold = Vec::new();
        for series in gold.series() {
            let mut p = Vec::new();
            let mut g = Vec::new();
            for pair in series.entries().windows(2) {
                let (cur, next) = (&pair[0], &pair[1]);
                let (cs, ns) = match (cur.state, next.state) {
                    (Some(c), Some(n)) => (c, n),
                    _ => {
                        return Err(MetricsError::CoverageGap(format!(
                            "gold pair `{}`/{} is unlabeled",
                            cur.user_id, cur.seq
                        )))
                    }
                };
                let key = (cur.user_id.clone(), cur.seq);
                let value = pred.get(&key).ok_or_else(|| {
                    MetricsError::CoverageGap(format!(
                        "no prediction for pair `{}`/{}",
                        cur.user_id, cur.seq
                    ))
                })?;
                let est = if target == 0 { value.0 } else { value.1 };
                let est = est.ok_or_else(|| {
                    MetricsError::CoverageGap(format!(
                        "prediction for `{}`/{} lacks the target",
                        cur.user_id, cur.seq
                    ))
                })?;
                let d = crate::domain::delta_between(cs, ns);
                p.push(est);
                g.push(if target == 0 { d.dv() as f64 } else { d.da() as f64 });
            }
            if p.is_empty() {
                continue;
            }
            all_pred.extend_from_slice(&p);
            all_gold.extend_from_slice(&g);
            match pearson(&p, &g) {
                Ok(r) => user_rs.push(r),
                Err(MetricsError::DegenerateInput(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        if all_pred.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let r = if user_rs.is_empty() {
            None
        } else {
            Some(to_f64(fisher_composite(&user_rs)?))
        };
        reports.push(Some(TransitionTargetReport {
            r,
            mae: mae(&all_pred, &all_gold)?,
            n_users_scored: user_rs.len(),
            n_users_skipped: skipped,
            n_pairs: all_pred.len(),
        }));
    }
    let arousal = reports.pop().unwrap();
    let valence = reports.pop().unwrap();
    Ok(TransitionReport { valence, arousal })
}
