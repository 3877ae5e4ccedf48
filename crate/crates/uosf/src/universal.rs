//! Universal (blended) order-statistics filters.
//!
//! A pool of fixed-rank filters of one kind competes over the threshold
//! rank. Each filter's recent performance is tracked as the unnormalized
//! sample second moment of its outputs over a sliding window of `tau`
//! steps; a softmax over those windowed losses produces blending weights,
//! and the blended estimate is the weight-averaged output of the pool.
//! Filters whose windows were contaminated by loud transients accumulate
//! large losses and are suppressed within a step or two.
//!
//! The per-sample loss of the blend provably stays within `(2c/tau)·ln R`
//! of the best fixed-rank filter in hindsight whenever `c` dominates the
//! squared filter outputs; [`UniversalState::regret_report`] measures both
//! sides of that inequality.

use crate::error::{Error, Result};
use crate::osf::{self, OrderedSample, OsfKind};

/// Parameters of one universal filter.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UniversalConfig {
    /// Window size R (number of sorted values per step).
    pub r: usize,
    /// Weight family of the competing pool.
    pub kind: OsfKind,
    /// Softmax temperature: larger c reacts more slowly to loss differences.
    /// The regret guarantee needs `c >= max squared pool output`.
    pub c: f64,
    /// Loss window length in steps.
    pub tau: usize,
    /// Competing threshold ranks (1-based). `None` means all ranks 1..=R.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
}

impl UniversalConfig {
    pub fn new(r: usize, kind: OsfKind, c: f64, tau: usize) -> Self {
        Self { r, kind, c, tau, ranks: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Argument("window size must be at least 1".into()));
        }
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::Argument("c must be a positive finite real".into()));
        }
        if self.tau == 0 {
            return Err(Error::Argument("tau must be at least 1".into()));
        }
        if let Some(ranks) = &self.ranks {
            if ranks.is_empty() {
                return Err(Error::Argument("rank pool must be nonempty".into()));
            }
            if ranks.iter().any(|&r0| r0 == 0 || r0 > self.r) {
                return Err(Error::Argument("rank pool entry outside [1, R]".into()));
            }
            if ranks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Argument("rank pool must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// The competing ranks, 1-based.
    pub fn pool(&self) -> Vec<usize> {
        match &self.ranks {
            Some(r) => r.clone(),
            None => (1..=self.r).collect(),
        }
    }
}

/// Softmax blending weights from windowed losses:
/// `mu_r = exp(-l_r/(2c)) / sum_k exp(-l_k/(2c))`.
///
/// The minimum loss is subtracted inside the exponent, which changes nothing
/// mathematically but keeps the weights well-formed when losses are huge.
pub fn blending_weights(losses: &[f64], c: f64) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::Argument("losses must be nonempty".into()));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::Argument("c must be a positive finite real".into()));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Data("non-finite loss".into()));
    }
    let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = losses.iter().map(|l| (-(l - min) / (2.0 * c)).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// The blended length-R weight vector `w_u = sum_i mu_i w^(rank_i)`.
pub fn universal_weights(mu: &[f64], config: &UniversalConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let pool = config.pool();
    if mu.len() != pool.len() {
        return Err(Error::Argument(format!(
            "mu length {} does not match pool size {}",
            mu.len(),
            pool.len()
        )));
    }
    let total: f64 = mu.iter().sum();
    if mu.iter().any(|&m| m < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument("mu must lie on the simplex".into()));
    }
    let mut out = vec![0.0; config.r];
    for (&m, &rank) in mu.iter().zip(&pool) {
        let w = osf::make_weights(config.kind, config.r, rank)?;
        for (o, &wi) in out.iter_mut().zip(w.weights()) {
            *o += m * wi;
        }
    }
    Ok(out)
}

/// Per-sample regret bound term `(2c/tau)·ln(pool size)`.
pub fn regret_bound_term(c: f64, tau: usize, pool_size: usize) -> f64 {
    2.0 * c / tau as f64 * (pool_size as f64).ln()
}

/// Outcome of checking the per-sample loss bound at the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    /// `(1/tau) * sum of squared blended outputs` over the window.
    pub per_sample_universal_loss: f64,
    /// `(1/tau) * min_r sum of squared rank-r outputs` over the window.
    /// Ties resolve to the lowest rank.
    pub per_sample_best_fixed_loss: f64,
    /// Rank achieving the best fixed loss (1-based).
    pub best_rank: usize,
    /// `(2c/tau)·ln(pool size)` with the configured c.
    pub bound_term: f64,
    /// `best + bound_term - universal`; nonnegative when the bound holds.
    pub bound_slack: f64,
    /// Largest squared fixed-rank output seen in the window; the bound is
    /// guaranteed when `c >= a_observed`.
    pub a_observed: f64,
    pub bound_satisfied: bool,
}

/// Sliding-window sum over the last `cap` values without ever subtracting.
///
/// A plain running sum corrupts itself when a value many orders of magnitude
/// above the rest enters and later leaves the window (subtracting ~1e15
/// leaves absolute noise ~1e-1, which can dwarf the remaining sum). The
/// two-stack scheme instead keeps suffix sums over an outgoing block and a
/// forward sum over an incoming block, so every queried sum is a fresh
/// forward accumulation: relative error stays O(cap * eps) for any data.
/// The once-per-`cap` suffix rebuild keeps the amortized cost O(1) per push.
#[derive(Debug, Clone)]
struct WindowedSum {
    cap: usize,
    /// Older values in arrival order; element `out_pos` is evicted next.
    out_vals: Vec<f64>,
    /// `out_suffix[i] = out_vals[i] + ... + out_vals[end]` (one extra 0.0).
    out_suffix: Vec<f64>,
    out_pos: usize,
    /// Newer values in arrival order.
    in_vals: Vec<f64>,
    in_sum: f64,
}

impl WindowedSum {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            out_vals: Vec::new(),
            out_suffix: vec![0.0],
            out_pos: 0,
            in_vals: Vec::with_capacity(cap),
            in_sum: 0.0,
        }
    }

    fn len(&self) -> usize {
        (self.out_vals.len() - self.out_pos) + self.in_vals.len()
    }

    /// Pushes a value, returning the evicted one once the window is full.
    fn push(&mut self, value: f64) -> Option<f64> {
        let evicted = if self.len() == self.cap {
            if self.out_pos == self.out_vals.len() {
                self.flip();
            }
            let old = self.out_vals[self.out_pos];
            self.out_pos += 1;
            Some(old)
        } else {
            None
        };
        self.in_vals.push(value);
        self.in_sum += value;
        evicted
    }

    /// Moves the incoming block into the outgoing role, rebuilding suffix
    /// sums from scratch.
    fn flip(&mut self) {
        std::mem::swap(&mut self.out_vals, &mut self.in_vals);
        self.in_vals.clear();
        self.in_sum = 0.0;
        self.out_pos = 0;
        self.out_suffix.clear();
        self.out_suffix.resize(self.out_vals.len() + 1, 0.0);
        for i in (0..self.out_vals.len()).rev() {
            self.out_suffix[i] = self.out_vals[i] + self.out_suffix[i + 1];
        }
    }

    fn sum(&self) -> f64 {
        self.out_suffix[self.out_pos] + self.in_sum
    }

    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.out_vals[self.out_pos..].iter().chain(self.in_vals.iter())
    }
}

/// Streaming state of one universal filter (one state per frequency bin).
#[derive(Debug, Clone)]
pub struct UniversalState {
    config: UniversalConfig,
    pool: Vec<usize>,
    alphas: Vec<f64>,
    /// Squared outputs of each pool member over the window.
    loss_windows: Vec<WindowedSum>,
    /// Scratch copy of the windowed losses, refreshed each step.
    losses: Vec<f64>,
    /// Raw blended outputs and their squares over the window.
    out_window: WindowedSum,
    out_sq_window: WindowedSum,
    mu: Vec<f64>,
    t: usize,
}

impl UniversalState {
    /// Fresh state: empty buffers, uniform blend, t = 0.
    pub fn new(config: &UniversalConfig) -> Result<Self> {
        config.validate()?;
        let pool = config.pool();
        let n = pool.len();
        Ok(Self {
            config: config.clone(),
            pool,
            alphas: osf::sawp_alphas(config.r),
            loss_windows: (0..n).map(|_| WindowedSum::new(config.tau)).collect(),
            losses: vec![0.0; n],
            out_window: WindowedSum::new(config.tau),
            out_sq_window: WindowedSum::new(config.tau),
            mu: vec![1.0 / n as f64; n],
            t: 0,
        })
    }

    pub fn config(&self) -> &UniversalConfig {
        &self.config
    }

    /// Competing ranks, 1-based.
    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    /// Blending weights that the next call to [`step`](Self::step) will use
    /// (computed from losses up to the current step).
    pub fn blending(&self) -> &[f64] {
        &self.mu
    }

    /// Steps completed so far.
    pub fn steps(&self) -> usize {
        self.t
    }

    /// Advances one step: returns the blended estimate for `sample`, then
    /// folds every pool member's squared output into the loss windows and
    /// refreshes the blending weights for the next step.
    pub fn step(&mut self, sample: &OrderedSample) -> Result<f64> {
        if sample.len() != self.config.r {
            return Err(Error::Argument(format!(
                "sample length {} does not match R = {}",
                sample.len(),
                self.config.r
            )));
        }
        Ok(self.step_sorted(sample.values()))
    }

    /// Core step on a slice already known to be sorted ascending with
    /// length R; the spectrogram engine calls this on its maintained window.
    pub(crate) fn step_sorted(&mut self, sorted: &[f64]) -> f64 {
        debug_assert_eq!(sorted.len(), self.config.r);
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        let outputs = osf::all_rank_outputs(self.config.kind, sorted, &self.alphas);

        let mut estimate = 0.0;
        for (i, &rank) in self.pool.iter().enumerate() {
            estimate += self.mu[i] * outputs[rank - 1];
        }

        for (i, &rank) in self.pool.iter().enumerate() {
            let sq = outputs[rank - 1] * outputs[rank - 1];
            self.loss_windows[i].push(sq);
            self.losses[i] = self.loss_windows[i].sum();
        }
        self.out_window.push(estimate);
        self.out_sq_window.push(estimate * estimate);

        self.mu = blending_weights(&self.losses, self.config.c)
            .expect("losses are finite by construction");
        self.t += 1;

        #[cfg(debug_assertions)]
        if self.t.is_multiple_of(self.config.tau) {
            self.verify_sums();
        }

        estimate
    }

    /// Windowed sample variance of the blended output:
    /// `(1/tau')·sum y^2 - ((1/tau')·sum y)^2` with `tau' = min(t, tau)`.
    /// This is an upper-bound proxy for the estimator variance.
    pub fn variance_estimate(&self) -> Result<f64> {
        let n = self.out_window.len();
        if n < 2 {
            return Err(Error::State(format!(
                "variance estimate needs at least 2 outputs, have {n}"
            )));
        }
        let inv = 1.0 / n as f64;
        let mean = self.out_window.sum() * inv;
        Ok(self.out_sq_window.sum() * inv - mean * mean)
    }

    /// Checks the per-sample loss bound. Requires `t >= tau` so the loss
    /// windows are full.
    pub fn regret_report(&self) -> Result<RegretReport> {
        if self.t < self.config.tau {
            return Err(Error::State(format!(
                "regret report needs t >= tau ({} < {})",
                self.t, self.config.tau
            )));
        }
        let tau = self.config.tau as f64;
        let universal = self.out_sq_window.sum() / tau;
        let (best_idx, best_sum) = self
            .losses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite losses"))
            .expect("nonempty pool");
        let best = best_sum / tau;
        let a_observed = self
            .loss_windows
            .iter()
            .flat_map(|window| window.iter())
            .cloned()
            .fold(0.0f64, f64::max);
        let bound_term = regret_bound_term(self.config.c, self.config.tau, self.pool.len());
        let bound_slack = best + bound_term - universal;
        Ok(RegretReport {
            per_sample_universal_loss: universal,
            per_sample_best_fixed_loss: best,
            best_rank: self.pool[best_idx],
            bound_term,
            bound_slack,
            a_observed,
            bound_satisfied: universal <= best + bound_term + 1e-9,
        })
    }

    #[cfg(debug_assertions)]
    fn verify_sums(&self) {
        let check = |window: &WindowedSum, label: &str| {
            let fresh: f64 = window.iter().sum();
            let held = window.sum();
            debug_assert!(
                (fresh - held).abs() / fresh.abs().max(1e-300) < 1e-9
                    || (fresh - held).abs() < 1e-12,
                "{label} windowed sum drifted: {held} vs {fresh}"
            );
        };
        for window in &self.loss_windows {
            check(window, "loss");
        }
        check(&self.out_window, "output");
        check(&self.out_sq_window, "squared-output");
    }
}
