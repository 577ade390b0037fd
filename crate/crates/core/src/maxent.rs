//! Pairwise maximum-entropy (Ising) model over binary state vectors.
//!
//! The model assigns `P(x) = exp(-E(x)) / Z` with energy
//! `E(x) = -x'h - 0.5 x'Jx`, `J` symmetric with zero diagonal. The valid
//! state space is small enough to enumerate, so the partition function,
//! all moments, and every conditional are computed exactly. Maximum
//! likelihood is full-batch gradient ascent; the gradient per parameter
//! is the gap between data and model moments.

use crate::codec::{enumerate_valid, onehot_configs, CodecError, LayoutMode, StateLayout, StateVector};
use crate::domain::{AffectState, AROUSAL_LEVELS, VALENCE_LEVELS};
use crate::neural::RngStream;
use crate::scalar::{real, to_f64, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Refuse exact enumeration beyond this many valid states.
pub const STATE_BUDGET: u64 = 1 << 22;

/// Fixed chunk width (in one-hot configurations) for parallel moment
/// accumulation; partial sums combine in chunk order, so results do not
/// depend on the number of worker threads.
const CHUNK_CONFIGS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MaxEntError {
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("state space too large: {states} valid states > budget {budget}")]
    BudgetExceeded { states: u64, budget: u64 },
    #[error("empty training data")]
    EmptyData,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Flat upper-triangle index of the unordered pair `i < j`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Number of unordered pairs over `n` variables.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel<T> {
    layout: StateLayout,
    h: Vec<T>,
    /// Full n x n matrix, row-major; kept symmetric with zero diagonal.
    j: Vec<T>,
    l2: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { step: 0.1, tol: 1e-6, max_iters: 5000 }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    pub model: MaxEntModel<T>,
    pub iterations: usize,
    pub grad_max_norm: f64,
    pub mean_log_likelihood: f64,
    pub converged: bool,
}

/// First and pairwise second moments (`<x_i>`, `<x_i x_j>` for i < j).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub first: Vec<T>,
    pub second: Vec<T>,
}

/// Precomputed enumeration structure shared by fitting passes.
struct StateSpace {
    configs: Vec<Vec<usize>>,
    latent_bits: usize,
    latent_offset: usize,
}

impl StateSpace {
    fn latent_pos(&self, k: usize) -> usize {
        self.latent_offset + k
    }

    fn n_states(&self) -> usize {
        self.configs.len() << self.latent_bits
    }
}

impl<T: Scalar> MaxEntModel<T> {
    /// The uniform model: zero biases and couplings.
    pub fn new(layout: StateLayout, l2: T) -> Self {
        let n = layout.total_len();
        Self { layout, h: vec![T::zero(); n], j: vec![T::zero(); n * n], l2 }
    }

    /// Random parameters with biases and couplings uniform in
    /// [-scale, scale]; useful for tests and probes.
    pub fn random(layout: StateLayout, l2: T, scale: f64, rng: &mut RngStream) -> Self {
        let mut model = Self::new(layout, l2);
        let n = model.dim();
        for i in 0..n {
            model.h[i] = real(rng.range(-scale, scale));
        }
        for i in 0..n {
            for j in i + 1..n {
                let v = real(rng.range(-scale, scale));
                model.set_coupling(i, j, v);
            }
        }
        model
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_len()
    }

    pub fn l2(&self) -> T {
        self.l2
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn bias(&self, i: usize) -> T {
        self.h[i]
    }

    pub fn set_bias(&mut self, i: usize, value: T) {
        self.h[i] = value;
    }

    pub fn coupling(&self, i: usize, j: usize) -> T {
        self.j[i * self.dim() + j]
    }

    /// Set `J[i,j] = J[j,i] = value`. The diagonal is fixed at zero.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: T) {
        assert!(i != j, "diagonal couplings are fixed at zero");
        let n = self.dim();
        self.j[i * n + j] = value;
        self.j[j * n + i] = value;
    }

    fn check_budget(&self) -> Result<(), MaxEntError> {
        let states = self.layout.valid_count();
        if states > STATE_BUDGET {
            return Err(MaxEntError::BudgetExceeded { states, budget: STATE_BUDGET });
        }
        Ok(())
    }

    fn state_space(&self) -> Result<StateSpace, MaxEntError> {
        self.check_budget()?;
        Ok(StateSpace {
            configs: onehot_configs(self.layout),
            latent_bits: self.layout.latent_bits,
            latent_offset: self.layout.latent_offset(),
        })
    }

    fn check_vector(&self, x: &StateVector) -> Result<(), MaxEntError> {
        if x.layout() != self.layout {
            return Err(MaxEntError::LayoutMismatch(format!(
                "state vector layout {:?} != model layout {:?}",
                x.layout(),
                self.layout
            )));
        }
        Ok(())
    }

    /// Energy of a set of active indices: `-sum h_i - sum_{i<j} J_ij`.
    fn energy_of_active(&self, active: &[usize]) -> T {
        let n = self.dim();
        let mut e = T::zero();
        for (a, &i) in active.iter().enumerate() {
            e -= self.h[i];
            for &j in &active[a + 1..] {
                e -= self.j[i * n + j];
            }
        }
        e
    }

    /// `E(x) = -x'h - 0.5 x'Jx`.
    pub fn energy(&self, x: &StateVector) -> Result<T, MaxEntError> {
        self.check_vector(x)?;
        Ok(self.energy_of_active(&x.active_indices()))
    }

    /// Log partition function over the enumerated valid states, computed
    /// with a max shift for stability.
    pub fn log_partition(&self) -> Result<T, MaxEntError> {
        let space = self.state_space()?;
        let energies = self.all_energies(&space);
        let min_e = energies
            .iter()
            .copied()
            .fold(T::infinity(), |m, e| m.min(e));
        let sum: T = energies.iter().map(|&e| (min_e - e).exp()).sum();
        Ok(sum.ln() - min_e)
    }

    /// Probabilities aligned with [`enumerate_valid`] order.
    pub fn probabilities(&self) -> Result<Vec<T>, MaxEntError> {
        let space = self.state_space()?;
        let energies = self.all_energies(&space);
        let min_e = energies
            .iter()
            .copied()
            .fold(T::infinity(), |m, e| m.min(e));
        let mut weights: Vec<T> = energies.iter().map(|&e| (min_e - e).exp()).collect();
        let z: T = weights.iter().copied().sum();
        for w in &mut weights {
            *w = *w / z;
        }
        Ok(weights)
    }

    /// Energies of every valid state in canonical order, built
    /// incrementally: one-hot term + latent-internal term + cross term.
    fn all_energies(&self, space: &StateSpace) -> Vec<T> {
        let n = self.dim();
        let latent_count = 1usize << space.latent_bits;

        // Latent-internal energies, shared by all one-hot configurations.
        let mut latent_energy = vec![T::zero(); latent_count];
        for c in 1..latent_count {
            let k0 = c.trailing_zeros() as usize;
            let rest = c & (c - 1);
            let zk0 = space.latent_pos(k0);
            let mut e = latent_energy[rest] - self.h[zk0];
            let mut bits = rest;
            while bits != 0 {
                let l = bits.trailing_zeros() as usize;
                e -= self.j[zk0 * n + space.latent_pos(l)];
                bits &= bits - 1;
            }
            latent_energy[c] = e;
        }

        let chunk_results: Vec<Vec<T>> = space
            .configs
            .par_chunks(CHUNK_CONFIGS)
            .map(|configs| {
                let mut out = Vec::with_capacity(configs.len() * latent_count);
                let mut cross = vec![T::zero(); latent_count];
                for active in configs {
                    let base = self.energy_of_active(active);
                    // Cross couplings of this configuration to each latent bit.
                    let coupling_to: Vec<T> = (0..space.latent_bits)
                        .map(|k| {
                            let zk = space.latent_pos(k);
                            active.iter().map(|&i| self.j[i * n + zk]).sum()
                        })
                        .collect();
                    cross[0] = T::zero();
                    for c in 1..latent_count {
                        let k0 = c.trailing_zeros() as usize;
                        cross[c] = cross[c & (c - 1)] - coupling_to[k0];
                    }
                    for c in 0..latent_count {
                        out.push(base + latent_energy[c] + cross[c]);
                    }
                }
                out
            })
            .collect();
        let mut energies = Vec::with_capacity(space.n_states());
        for chunk in chunk_results {
            energies.extend(chunk);
        }
        energies
    }

    /// Exact model moments `<x_i>` and `<x_i x_j>` plus the log partition
    /// function, via one enumeration sweep.
    pub fn model_moments(&self) -> Result<(Moments<T>, T), MaxEntError> {
        let space = self.state_space()?;
        let energies = self.all_energies(&space);
        let min_e = energies
            .iter()
            .copied()
            .fold(T::infinity(), |m, e| m.min(e));

        let n = self.dim();
        let latent_count = 1usize << space.latent_bits;
        let n_configs = space.configs.len();
        let latent_stride = space.latent_bits.max(1);

        // Per-chunk accumulators combine sequentially in chunk order.
        struct Partial<T> {
            sum_w: T,
            config_w: Vec<T>,
            latent_w: Vec<T>,
            cross_w: Vec<T>,
        }

        let config_ids: Vec<usize> = (0..n_configs).collect();
        let partials: Vec<Partial<T>> = config_ids
            .par_chunks(CHUNK_CONFIGS)
            .map(|os| {
                let mut p = Partial {
                    sum_w: T::zero(),
                    config_w: vec![T::zero(); os.len()],
                    latent_w: vec![T::zero(); latent_count],
                    cross_w: vec![T::zero(); os.len() * latent_stride],
                };
                for (local, &o) in os.iter().enumerate() {
                    let base = o * latent_count;
                    for c in 0..latent_count {
                        let w = (min_e - energies[base + c]).exp();
                        p.sum_w += w;
                        p.config_w[local] += w;
                        p.latent_w[c] += w;
                        let mut bits = c;
                        while bits != 0 {
                            let k = bits.trailing_zeros() as usize;
                            p.cross_w[local * latent_stride + k] += w;
                            bits &= bits - 1;
                        }
                    }
                }
                p
            })
            .collect();

        let mut sum_w = T::zero();
        let mut config_w = vec![T::zero(); n_configs];
        let mut latent_w = vec![T::zero(); latent_count];
        let mut cross_w = vec![T::zero(); n_configs * latent_stride];
        for (chunk_idx, p) in partials.iter().enumerate() {
            sum_w += p.sum_w;
            let start = chunk_idx * CHUNK_CONFIGS;
            for (local, &w) in p.config_w.iter().enumerate() {
                config_w[start + local] += w;
            }
            for (c, &w) in p.latent_w.iter().enumerate() {
                latent_w[c] += w;
            }
            for (local, chunk) in p.cross_w.chunks(latent_stride).enumerate() {
                let dst = (start + local) * latent_stride;
                for (k, &w) in chunk.iter().enumerate() {
                    cross_w[dst + k] += w;
                }
            }
        }

        let mut first = vec![T::zero(); n];
        let mut second = vec![T::zero(); pair_count(n)];
        for (o, active) in space.configs.iter().enumerate() {
            let w = config_w[o];
            for (a, &i) in active.iter().enumerate() {
                first[i] += w;
                for &jj in &active[a + 1..] {
                    second[pair_index(n, i, jj)] += w;
                }
            }
            for k in 0..space.latent_bits {
                let w_cross = cross_w[o * latent_stride + k];
                for &i in active {
                    second[pair_index(n, i, space.latent_pos(k))] += w_cross;
                }
            }
        }
        for c in 0..latent_count {
            let w = latent_w[c];
            if w == T::zero() {
                continue;
            }
            let mut bits = c;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                first[space.latent_pos(k)] += w;
                let mut rest = bits & (bits - 1);
                while rest != 0 {
                    let l = rest.trailing_zeros() as usize;
                    second[pair_index(n, space.latent_pos(k), space.latent_pos(l))] += w;
                    rest &= rest - 1;
                }
                bits &= bits - 1;
            }
        }
        for v in first.iter_mut().chain(second.iter_mut()) {
            *v = *v / sum_w;
        }
        let log_z = sum_w.ln() - min_e;
        Ok((Moments { first, second }, log_z))
    }

    /// Empirical moments of a data set of valid state vectors.
    pub fn empirical_moments(&self, data: &[StateVector]) -> Result<Moments<T>, MaxEntError> {
        if data.is_empty() {
            return Err(MaxEntError::EmptyData);
        }
        let n = self.dim();
        let mut first = vec![T::zero(); n];
        let mut second = vec![T::zero(); pair_count(n)];
        for x in data {
            self.check_vector(x)?;
            let active = x.active_indices();
            for (a, &i) in active.iter().enumerate() {
                first[i] += T::one();
                for &jj in &active[a + 1..] {
                    second[pair_index(n, i, jj)] += T::one();
                }
            }
        }
        let count = real::<T>(data.len() as f64);
        for v in first.iter_mut().chain(second.iter_mut()) {
            *v = *v / count;
        }
        Ok(Moments { first, second })
    }

    /// Mean log-likelihood of the data under the model.
    pub fn mean_log_likelihood(&self, data: &[StateVector]) -> Result<T, MaxEntError> {
        let moments = self.empirical_moments(data)?;
        let log_z = self.log_partition()?;
        Ok(self.mean_ll_from(&moments, log_z))
    }

    fn mean_ll_from(&self, data_moments: &Moments<T>, log_z: T) -> T {
        let n = self.dim();
        let mut ll = -log_z;
        for i in 0..n {
            ll += self.h[i] * data_moments.first[i];
        }
        for i in 0..n {
            for jj in i + 1..n {
                ll += self.j[i * n + jj] * data_moments.second[pair_index(n, i, jj)];
            }
        }
        ll
    }

    /// Full-batch gradient ascent on the penalized mean log-likelihood
    /// `LL - l2 (|h|^2 + 0.5 |J|_F^2)`. Model expectations are exact via
    /// enumeration; updates keep `J` symmetric with a zero diagonal.
    /// Stops when the gradient max-norm drops below `cfg.tol`.
    pub fn fit(&self, data: &[StateVector], cfg: &FitConfig) -> Result<FitOutcome<T>, MaxEntError> {
        let data_moments = self.empirical_moments(data)?;
        let mut model = self.clone();
        let n = model.dim();
        let step = real::<T>(cfg.step);
        let two_l2 = model.l2 + model.l2;

        let mut iterations = 0;
        let mut grad_max = f64::INFINITY;
        for _ in 0..cfg.max_iters {
            let (model_moments, _) = model.model_moments()?;
            iterations += 1;
            let mut max_abs = T::zero();
            for i in 0..n {
                let g = data_moments.first[i] - model_moments.first[i] - two_l2 * model.h[i];
                max_abs = max_abs.max(g.abs());
                model.h[i] += step * g;
            }
            for i in 0..n {
                for jj in i + 1..n {
                    let idx = pair_index(n, i, jj);
                    let g = data_moments.second[idx]
                        - model_moments.second[idx]
                        - two_l2 * model.j[i * n + jj];
                    max_abs = max_abs.max(g.abs());
                    let updated = model.j[i * n + jj] + step * g;
                    model.j[i * n + jj] = updated;
                    model.j[jj * n + i] = updated;
                }
            }
            grad_max = to_f64(max_abs);
            if grad_max < cfg.tol {
                break;
            }
        }
        let log_z = model.log_partition()?;
        let mean_log_likelihood = to_f64(model.mean_ll_from(&data_moments, log_z));
        Ok(FitOutcome {
            converged: grad_max < cfg.tol,
            model,
            iterations,
            grad_max_norm: grad_max,
            mean_log_likelihood,
        })
    }

    /// Conditional expectation of (valence, arousal) given clamped latent
    /// bits: enumerate the 15 grid cells, weight by `exp(-E)`, normalize.
    pub fn predict_assessment(&self, latent: &[u8]) -> Result<(T, T), MaxEntError> {
        if self.layout.mode != LayoutMode::Assessment {
            return Err(MaxEntError::LayoutMismatch(format!(
                "predict_assessment needs an assessment layout, got {:?}",
                self.layout.mode
            )));
        }
        if latent.len() != self.layout.latent_bits {
            return Err(MaxEntError::LayoutMismatch(format!(
                "latent length {} != layout latent_bits {}",
                latent.len(),
                self.layout.latent_bits
            )));
        }
        let latent_active: Vec<usize> = latent
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| (b == 1).then(|| self.layout.latent_offset() + k))
            .collect();
        let mut cells = Vec::with_capacity(15);
        for v in 0..VALENCE_LEVELS as usize {
            for a in 0..AROUSAL_LEVELS as usize {
                let mut active = vec![
                    self.layout.valence_offset() + v,
                    self.layout.arousal_offset() + a,
                ];
                active.extend_from_slice(&latent_active);
                cells.push((v, a, self.energy_of_active(&active)));
            }
        }
        let min_e = cells
            .iter()
            .map(|&(_, _, e)| e)
            .fold(T::infinity(), |m, e| m.min(e));
        let mut z = T::zero();
        let mut ev = T::zero();
        let mut ea = T::zero();
        for (v, a, e) in cells {
            let w = (min_e - e).exp();
            z += w;
            ev += real::<T>(v as f64) * w;
            ea += real::<T>(a as f64) * w;
        }
        Ok((ev / z, ea / z))
    }

    /// Expectation of (dv, da) given the current state, marginalizing
    /// latent bits over their full range.
    pub fn predict_transition(&self, current: AffectState) -> Result<(T, T), MaxEntError> {
        if self.layout.mode != LayoutMode::Transition {
            return Err(MaxEntError::LayoutMismatch(format!(
                "predict_transition needs a transition layout, got {:?}",
                self.layout.mode
            )));
        }
        self.check_budget()?;
        let layout = self.layout;
        let lcount = 1usize << layout.latent_bits;
        let v = current.valence() as i64;
        let a = current.arousal() as i64;
        let mut entries: Vec<(i64, i64, T)> = Vec::new();
        let mut min_e = T::infinity();
        for dv in -v..=(VALENCE_LEVELS as i64 - 1 - v) {
            for da in -a..=(AROUSAL_LEVELS as i64 - 1 - a) {
                let base_active = [
                    layout.valence_offset() + v as usize,
                    layout.arousal_offset() + a as usize,
                    layout.dv_offset() + (dv + VALENCE_LEVELS as i64 - 1) as usize,
                    layout.da_offset() + (da + AROUSAL_LEVELS as i64 - 1) as usize,
                ];
                for c in 0..lcount {
                    let mut active = base_active.to_vec();
                    let mut bits = c;
                    while bits != 0 {
                        let k = bits.trailing_zeros() as usize;
                        active.push(layout.latent_offset() + k);
                        bits &= bits - 1;
                    }
                    let e = self.energy_of_active(&active);
                    min_e = min_e.min(e);
                    entries.push((dv, da, e));
                }
            }
        }
        let mut z = T::zero();
        let mut edv = T::zero();
        let mut eda = T::zero();
        for (dv, da, e) in entries {
            let w = (min_e - e).exp();
            z += w;
            edv += real::<T>(dv as f64) * w;
            eda += real::<T>(da as f64) * w;
        }
        Ok((edv / z, eda / z))
    }

    /// Predicted next state: current plus the expected change, clamped to
    /// the grid (the expectation already respects the bounds).
    pub fn predict_next_state(&self, current: AffectState) -> Result<(T, T), MaxEntError> {
        let (dv, da) = self.predict_transition(current)?;
        let v = (real::<T>(current.valence() as f64) + dv)
            .max(T::zero())
            .min(real::<T>(VALENCE_LEVELS as f64 - 1.0));
        let a = (real::<T>(current.arousal() as f64) + da)
            .max(T::zero())
            .min(real::<T>(AROUSAL_LEVELS as f64 - 1.0));
        Ok((v, a))
    }

    /// Draw exact samples by inverse-CDF over the enumerated distribution.
    pub fn sample(
        &self,
        count: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<StateVector>, MaxEntError> {
        let states = enumerate_valid(self.layout)?;
        let probs = self.probabilities()?;
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0f64;
        for &p in &probs {
            acc += to_f64(p);
            cdf.push(acc);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u = rng.uniform() * acc;
            let idx = cdf.partition_point(|&c| c <= u).min(states.len() - 1);
            out.push(states[idx].clone());
        }
        Ok(out)
    }
}

pub const MAXENT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntDoc {
    pub format_version: u32,
    pub mode: LayoutMode,
    pub latent_bits: usize,
    pub l2: f64,
    pub h: Vec<f64>,
    /// Upper triangle of J, row-major, i < j.
    pub j_upper: Vec<f64>,
}

impl<T: Scalar> MaxEntModel<T> {
    pub fn to_doc(&self) -> MaxEntDoc {
        let n = self.dim();
        let mut j_upper = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for jj in i + 1..n {
                j_upper.push(to_f64(self.j[i * n + jj]));
            }
        }
        MaxEntDoc {
            format_version: MAXENT_FORMAT_VERSION,
            mode: self.layout.mode,
            latent_bits: self.layout.latent_bits,
            l2: to_f64(self.l2),
            h: self.h.iter().map(|&v| to_f64(v)).collect(),
            j_upper,
        }
    }

    pub fn from_doc(doc: &MaxEntDoc) -> Result<Self, MaxEntError> {
        if doc.format_version != MAXENT_FORMAT_VERSION {
            return Err(MaxEntError::LayoutMismatch(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        let layout = StateLayout { mode: doc.mode, latent_bits: doc.latent_bits };
        let n = layout.total_len();
        if doc.h.len() != n || doc.j_upper.len() != pair_count(n) {
            return Err(MaxEntError::LayoutMismatch(format!(
                "parameter shapes do not match layout (h {}, j_upper {})",
                doc.h.len(),
                doc.j_upper.len()
            )));
        }
        let mut model = Self::new(layout, real(doc.l2));
        for (i, &v) in doc.h.iter().enumerate() {
            model.h[i] = real(v);
        }
        let mut at = 0;
        for i in 0..n {
            for jj in i + 1..n {
                model.set_coupling(i, jj, real(doc.j_upper[at]));
                at += 1;
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::StateVector;
    use crate::domain::AffectState;

    fn free2() -> StateLayout {
        StateLayout::free(2)
    }

    fn sv(layout: StateLayout, bits: Vec<u8>) -> StateVector {
        StateVector::from_bits(layout, bits).unwrap()
    }

    #[test]
    fn energy_zero_model() {
        let model = MaxEntModel::<f64>::new(StateLayout::transition(2), 0.0);
        for x in enumerate_valid(model.layout()).unwrap() {
            assert_eq!(model.energy(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn energy_bias_only() {
        let mut model = MaxEntModel::<f64>::new(free2(), 0.0);
        model.set_bias(0, 2.0f64.ln());
        assert!((model.energy(&sv(free2(), vec![1, 0])).unwrap() + 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(model.energy(&sv(free2(), vec![0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn energy_coupling_only() {
        let mut model = MaxEntModel::<f64>::new(free2(), 0.0);
        model.set_coupling(0, 1, 3.0f64.ln());
        assert!((model.energy(&sv(free2(), vec![1, 1])).unwrap() + 3.0f64.ln()).abs() < 1e-15);
        assert_eq!(model.energy(&sv(free2(), vec![1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_foreign_layout() {
        let model = MaxEntModel::<f64>::new(free2(), 0.0);
        let x = sv(StateLayout::free(3), vec![0, 0, 0]);
        assert!(matches!(model.energy(&x), Err(MaxEntError::LayoutMismatch(_))));
    }

    #[test]
    fn log_partition_toy_values() {
        let model = MaxEntModel::<f64>::new(free2(), 0.0);
        assert!((model.log_partition().unwrap() - 4.0f64.ln()).abs() < 1e-12);

        let mut biased = MaxEntModel::<f64>::new(free2(), 0.0);
        biased.set_bias(0, 2.0f64.ln());
        assert!((biased.log_partition().unwrap() - 6.0f64.ln()).abs() < 1e-12);

        let mut coupled = MaxEntModel::<f64>::new(free2(), 0.0);
        coupled.set_coupling(0, 1, 3.0f64.ln());
        assert!((coupled.log_partition().unwrap() - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_partition_over_budget() {
        let model = MaxEntModel::<f64>::new(StateLayout::free(23), 0.0);
        assert!(matches!(
            model.log_partition(),
            Err(MaxEntError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn probabilities_normalize_for_random_models() {
        let mut rng = RngStream::new(88);
        for (layout, scale) in [
            (StateLayout::assessment(3), 1.0),
            (StateLayout::transition(2), 0.7),
            (StateLayout::free(5), 1.5),
        ] {
            let model = MaxEntModel::<f64>::random(layout, 0.0, scale, &mut rng);
            let probs = model.probabilities().unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
        }
    }

    /// The incremental energy sweep must agree with per-state evaluation.
    #[test]
    fn all_energies_matches_naive() {
        let mut rng = RngStream::new(3);
        for layout in [
            StateLayout::assessment(4),
            StateLayout::transition(3),
            StateLayout::free(6),
        ] {
            let model = MaxEntModel::<f64>::random(layout, 0.0, 1.2, &mut rng);
            let space = model.state_space().unwrap();
            let fast = model.all_energies(&space);
            let states = enumerate_valid(layout).unwrap();
            assert_eq!(fast.len(), states.len());
            for (e, x) in fast.iter().zip(&states) {
                let naive = model.energy(x).unwrap();
                assert!((e - naive).abs() < 1e-11, "{e} vs {naive}");
            }
        }
    }

    /// Decomposed moment accumulation must agree with the brute-force
    /// definition over enumerated probabilities.
    #[test]
    fn model_moments_match_brute_force() {
        let mut rng = RngStream::new(4);
        for layout in [
            StateLayout::assessment(3),
            StateLayout::transition(2),
            StateLayout::free(5),
        ] {
            let model = MaxEntModel::<f64>::random(layout, 0.0, 0.9, &mut rng);
            let (moments, log_z) = model.model_moments().unwrap();
            let probs = model.probabilities().unwrap();
            let states = enumerate_valid(layout).unwrap();
            let n = layout.total_len();
            let mut first = vec![0.0; n];
            let mut second = vec![0.0; pair_count(n)];
            for (p, x) in probs.iter().zip(&states) {
                let active = x.active_indices();
                for (a, &i) in active.iter().enumerate() {
                    first[i] += p;
                    for &j in &active[a + 1..] {
                        second[pair_index(n, i, j)] += p;
                    }
                }
            }
            for (a, b) in moments.first.iter().zip(&first) {
                assert!((a - b).abs() < 1e-10);
            }
            for (a, b) in moments.second.iter().zip(&second) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((log_z - model.log_partition().unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fit_uniform_data_stays_at_zero() {
        let layout = free2();
        let data = enumerate_valid(layout).unwrap();
        let m0 = MaxEntModel::<f64>::new(layout, 0.0);
        let out = m0.fit(&data, &FitConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.grad_max_norm < 1e-6);
        assert!(out.model.h().iter().all(|&h| h.abs() < 1e-9));
        assert!(out.model.coupling(0, 1).abs() < 1e-9);
    }

    #[test]
    fn fit_matches_target_moments() {
        let layout = free2();
        // Empirical moments <x0> = 2/3, <x1> = 1/2, <x0 x1> = 1/3.
        let data = vec![
            sv(layout, vec![1, 1]),
            sv(layout, vec![1, 1]),
            sv(layout, vec![1, 0]),
            sv(layout, vec![1, 0]),
            sv(layout, vec![0, 1]),
            sv(layout, vec![0, 0]),
        ];
        let m0 = MaxEntModel::<f64>::new(layout, 0.0);
        let out = m0.fit(&data, &FitConfig::default()).unwrap();
        assert!(out.converged, "grad {}", out.grad_max_norm);
        // Converged at l2 = 0: model moments match the data within 10 * tol.
        let (moments, _) = out.model.model_moments().unwrap();
        assert!((moments.first[0] - 2.0 / 3.0).abs() < 1e-5);
        assert!((moments.first[1] - 0.5).abs() < 1e-5);
        assert!((moments.second[0] - 1.0 / 3.0).abs() < 1e-5);
        // These moments factorize, so the fitted coupling vanishes.
        assert!((out.model.bias(0) - 2.0f64.ln()).abs() < 1e-3);
        assert!(out.model.coupling(0, 1).abs() < 1e-3);
    }

    #[test]
    fn fit_rejects_empty_data() {
        let m0 = MaxEntModel::<f64>::new(free2(), 0.0);
        assert!(matches!(
            m0.fit(&[], &FitConfig::default()),
            Err(MaxEntError::EmptyData)
        ));
    }

    #[test]
    fn fit_preserves_symmetry_and_zero_diagonal() {
        let layout = StateLayout::assessment(2);
        let mut rng = RngStream::new(10);
        let source = MaxEntModel::<f64>::random(layout, 1e-3, 0.8, &mut rng);
        let data = source.sample(200, &mut rng).unwrap();
        let out = MaxEntModel::<f64>::new(layout, 1e-3)
            .fit(&data, &FitConfig { max_iters: 100, ..FitConfig::default() })
            .unwrap();
        let n = out.model.dim();
        for i in 0..n {
            assert_eq!(out.model.j[i * n + i], 0.0);
            for j in 0..n {
                assert_eq!(out.model.j[i * n + j], out.model.j[j * n + i]);
            }
        }
    }

    #[test]
    fn predict_assessment_uniform_model() {
        let model = MaxEntModel::<f64>::new(StateLayout::assessment(2), 0.0);
        for latent in [[0u8, 0], [1, 0], [1, 1]] {
            let (v, a) = model.predict_assessment(&latent).unwrap();
            assert!((v - 2.0).abs() < 1e-12);
            assert!((a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_assessment_monotone_in_bias() {
        let layout = StateLayout::assessment(0);
        let mut prev = 2.0;
        for bias in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let mut model = MaxEntModel::<f64>::new(layout, 0.0);
            model.set_bias(layout.valence_offset() + 4, bias);
            let (v, _) = model.predict_assessment(&[]).unwrap();
            assert!(v > prev, "bias {bias}: {v} <= {prev}");
            assert!(v <= 4.0);
            prev = v;
        }
        assert!(prev > 3.9);
    }

    #[test]
    fn predict_assessment_stays_in_grid() {
        let mut rng = RngStream::new(5);
        for _ in 0..10 {
            let model =
                MaxEntModel::<f64>::random(StateLayout::assessment(3), 0.0, 2.0, &mut rng);
            let latent = [1, 0, 1];
            let (v, a) = model.predict_assessment(&latent).unwrap();
            assert!((0.0..=4.0).contains(&v));
            assert!((0.0..=2.0).contains(&a));
        }
    }

    #[test]
    fn predict_transition_uniform_corners() {
        let model = MaxEntModel::<f64>::new(StateLayout::transition(0), 0.0);
        let (dv, da) = model
            .predict_transition(AffectState::new(4, 2).unwrap())
            .unwrap();
        assert!((dv + 2.0).abs() < 1e-12);
        assert!((da + 1.0).abs() < 1e-12);

        let (dv, da) = model
            .predict_transition(AffectState::new(2, 1).unwrap())
            .unwrap();
        assert!(dv.abs() < 1e-12);
        assert!(da.abs() < 1e-12);
    }

    #[test]
    fn predict_transition_origin_is_non_negative() {
        let mut rng = RngStream::new(6);
        for _ in 0..10 {
            let model =
                MaxEntModel::<f64>::random(StateLayout::transition(2), 0.0, 1.5, &mut rng);
            let (dv, da) = model
                .predict_transition(AffectState::new(0, 0).unwrap())
                .unwrap();
            assert!(dv >= 0.0 && da >= 0.0);
        }
    }

    /// Adding a constant to every valence bias shifts all energies by the
    /// same amount (exactly one valence bit is always set), which must
    /// leave predictions unchanged.
    #[test]
    fn predictions_invariant_under_energy_shift() {
        let mut rng = RngStream::new(7);
        let layout = StateLayout::transition(2);
        let model = MaxEntModel::<f64>::random(layout, 0.0, 1.0, &mut rng);
        let mut shifted = model.clone();
        for v in 0..VALENCE_LEVELS as usize {
            let i = layout.valence_offset() + v;
            shifted.set_bias(i, shifted.bias(i) + 3.7);
        }
        for v in 0..VALENCE_LEVELS {
            for a in 0..AROUSAL_LEVELS {
                let s = AffectState::new(v, a).unwrap();
                let (dv1, da1) = model.predict_transition(s).unwrap();
                let (dv2, da2) = shifted.predict_transition(s).unwrap();
                assert!((dv1 - dv2).abs() < 1e-9);
                assert!((da1 - da2).abs() < 1e-9);
            }
        }

        let layout = StateLayout::assessment(2);
        let model = MaxEntModel::<f64>::random(layout, 0.0, 1.0, &mut rng);
        let mut shifted = model.clone();
        for a in 0..AROUSAL_LEVELS as usize {
            let i = layout.arousal_offset() + a;
            shifted.set_bias(i, shifted.bias(i) - 2.2);
        }
        let (v1, a1) = model.predict_assessment(&[1, 0]).unwrap();
        let (v2, a2) = shifted.predict_assessment(&[1, 0]).unwrap();
        assert!((v1 - v2).abs() < 1e-9);
        assert!((a1 - a2).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_and_calibrated() {
        let mut rng = RngStream::new(12);
        let model = MaxEntModel::<f64>::random(free2(), 0.0, 1.0, &mut rng);
        let a = model.sample(500, &mut RngStream::new(40)).unwrap();
        let b = model.sample(500, &mut RngStream::new(40)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bits(), y.bits());
        }
        // Sample frequencies track the exact probabilities loosely.
        let probs = model.probabilities().unwrap();
        let states = enumerate_valid(free2()).unwrap();
        for (state, &p) in states.iter().zip(&probs) {
            let freq = a.iter().filter(|x| x.bits() == state.bits()).count() as f64 / 500.0;
            assert!((freq - p).abs() < 0.08, "state {:?}: {freq} vs {p}", state.bits());
        }
    }

    #[test]
    fn doc_round_trip_is_exact() {
        let mut rng = RngStream::new(13);
        let model = MaxEntModel::<f64>::random(StateLayout::transition(3), 1e-3, 0.8, &mut rng);
        let json = serde_json::to_string(&model.to_doc()).unwrap();
        let doc: MaxEntDoc = serde_json::from_str(&json).unwrap();
        let restored = MaxEntModel::<f64>::from_doc(&doc).unwrap();
        assert_eq!(model, restored);
    }
}
