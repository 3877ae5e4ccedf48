//! Fixed-rank order-statistics filters (OSFs) for power estimation.
//!
//! An OSF estimates the mean of an exponential population from a sorted
//! window of R samples as an inner product `w · x_sorted`. Two weight
//! families are provided:
//!
//! * SAWP — a single order statistic at the threshold rank, rescaled by the
//!   harmonic-sum constant `alpha` so the estimate is unbiased under
//!   exponential statistics.
//! * TLOSF — the minimum-variance unbiased weighted average of all order
//!   statistics up to the threshold rank (the type-II-censored BLUE of the
//!   exponential mean).
//!
//! Ranks are 1-based throughout: rank 1 is the smallest sample, rank R the
//! largest.

use crate::error::{Error, Result};

/// Which fixed-rank weight family an [`OsfWeights`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OsfKind {
    Sawp,
    Tlosf,
}

impl OsfKind {
    pub fn name(self) -> &'static str {
        match self {
            OsfKind::Sawp => "sawp",
            OsfKind::Tlosf => "tlosf",
        }
    }
}

impl std::fmt::Display for OsfKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A window of R values sorted ascending, tagged with the time step it was
/// taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    values: Vec<f64>,
    time_index: usize,
}

impl OrderedSample {
    /// Wraps already-sorted values. Fails if the slice is empty, contains a
    /// non-finite value, or is not ascending.
    pub fn from_sorted(values: Vec<f64>, time_index: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("ordered sample must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("ordered sample contains a non-finite value".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument("values are not sorted ascending".into()));
        }
        Ok(Self { values, time_index })
    }

    /// Values sorted ascending; index r-1 holds rank r.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }
}

/// Sorts a window of raw values into an [`OrderedSample`].
///
/// The sort is stable, so ties keep their arrival order; the estimators
/// downstream are permutation-invariant regardless.
pub fn sort_window(values: &[f64], time_index: usize) -> Result<OrderedSample> {
    if values.is_empty() {
        return Err(Error::Argument("cannot sort an empty window".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Data("window contains NaN".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("window contains a non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    OrderedSample::from_sorted(sorted, time_index)
}

/// Mean of the r0-th order statistic of R standard exponentials:
/// `alpha = sum_{k=R-r0+1}^{R} 1/k`, summed in ascending k.
pub fn sawp_alpha(r: usize, threshold_rank: usize) -> Result<f64> {
    check_rank(r, threshold_rank)?;
    let mut sum = 0.0;
    for k in (r - threshold_rank + 1)..=r {
        sum += 1.0 / k as f64;
    }
    Ok(sum)
}

/// `sawp_alpha` for every rank 1..=R, each computed by the same ascending
/// summation so downstream identities are bit-consistent.
pub fn sawp_alphas(r: usize) -> Vec<f64> {
    (1..=r)
        .map(|r0| sawp_alpha(r, r0).expect("rank in range"))
        .collect()
}

/// A length-R weight vector for one fixed-rank estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct OsfWeights {
    weights: Vec<f64>,
    kind: OsfKind,
    threshold_rank: usize,
}

impl OsfWeights {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> OsfKind {
        self.kind
    }

    pub fn threshold_rank(&self) -> usize {
        self.threshold_rank
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// SAWP weights: zero everywhere except `1/alpha` at the threshold rank.
pub fn make_sawp_weights(r: usize, threshold_rank: usize) -> Result<OsfWeights> {
    let alpha = sawp_alpha(r, threshold_rank)?;
    let mut weights = vec![0.0; r];
    weights[threshold_rank - 1] = 1.0 / alpha;
    Ok(OsfWeights { weights, kind: OsfKind::Sawp, threshold_rank })
}

/// TLOSF weights: `1/r0` below the threshold rank, `(R-r0+1)/r0` at it, zero
/// above. At `r0 = R` this is the uniform vector `1/R` (the sample mean).
pub fn make_tlosf_weights(r: usize, threshold_rank: usize) -> Result<OsfWeights> {
    check_rank(r, threshold_rank)?;
    let r0 = threshold_rank as f64;
    let mut weights = vec![0.0; r];
    for w in weights.iter_mut().take(threshold_rank - 1) {
        *w = 1.0 / r0;
    }
    weights[threshold_rank - 1] = (r - threshold_rank + 1) as f64 / r0;
    Ok(OsfWeights { weights, kind: OsfKind::Tlosf, threshold_rank })
}

pub fn make_weights(kind: OsfKind, r: usize, threshold_rank: usize) -> Result<OsfWeights> {
    match kind {
        OsfKind::Sawp => make_sawp_weights(r, threshold_rank),
        OsfKind::Tlosf => make_tlosf_weights(r, threshold_rank),
    }
}

/// Applies a fixed-rank filter: the inner product `w · x_sorted`.
pub fn apply_osf(weights: &OsfWeights, sample: &OrderedSample) -> Result<f64> {
    apply_weights(weights.weights(), sample)
}

/// Inner product of an arbitrary weight vector with an ordered sample.
pub fn apply_weights(weights: &[f64], sample: &OrderedSample) -> Result<f64> {
    if weights.len() != sample.len() {
        return Err(Error::Argument(format!(
            "weight length {} does not match sample length {}",
            weights.len(),
            sample.len()
        )));
    }
    Ok(dot(weights, sample.values()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outputs of every fixed-rank estimator of one kind on one sorted window,
/// in O(R) via prefix sums. Entry r-1 equals
/// `apply_osf(make_weights(kind, R, r), sample)` up to rounding.
pub fn all_rank_outputs(kind: OsfKind, sorted: &[f64], alphas: &[f64]) -> Vec<f64> {
    let r = sorted.len();
    debug_assert_eq!(alphas.len(), r);
    match kind {
        OsfKind::Sawp => sorted.iter().zip(alphas).map(|(x, a)| x / a).collect(),
        OsfKind::Tlosf => {
            let mut out = Vec::with_capacity(r);
            let mut prefix = 0.0;
            for (i, &x) in sorted.iter().enumerate() {
                let r0 = (i + 1) as f64;
                out.push((prefix + (r - i) as f64 * x) / r0);
                prefix += x;
            }
            out
        }
    }
}

/// Exact first and second moments of the order statistics of R i.i.d.
/// standard (unit-mean) exponentials.
///
/// Uses the independent-spacings representation
/// `X_(r) = sum_{j<=r} Z_j / (R-j+1)`, which gives
/// `Cov(X_(r), X_(s)) = sum_{j<=min(r,s)} 1/(R-j+1)^2`.
#[derive(Debug, Clone)]
pub struct OsMoments {
    r: usize,
    means: Vec<f64>,
    covariance: Vec<f64>, // row-major R x R
}

impl OsMoments {
    pub fn r(&self) -> usize {
        self.r
    }

    /// Mean of each order statistic; index r-1 holds rank r.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Covariance of ranks `(r, s)`, 1-based.
    pub fn covariance(&self, rank_a: usize, rank_b: usize) -> f64 {
        self.covariance[(rank_a - 1) * self.r + (rank_b - 1)]
    }
}

pub fn exponential_os_moments(r: usize) -> Result<OsMoments> {
    if r == 0 {
        return Err(Error::Argument("window size must be at least 1".into()));
    }
    let means = sawp_alphas(r);
    // cum[j] = sum of the first j spacing variances 1/(R-j+1)^2
    let mut cum = Vec::with_capacity(r + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for j in 1..=r {
        let d = (r - j + 1) as f64;
        acc += 1.0 / (d * d);
        cum.push(acc);
    }
    let mut covariance = vec![0.0; r * r];
    for a in 1..=r {
        for b in 1..=r {
            covariance[(a - 1) * r + (b - 1)] = cum[a.min(b)];
        }
    }
    Ok(OsMoments { r, means, covariance })
}

/// Normalized variance `w' C w` of a fixed-rank (or blended) filter when the
/// true power is 1.
pub fn osf_variance(weights: &[f64], moments: &OsMoments) -> Result<f64> {
    if weights.len() != moments.r {
        return Err(Error::Argument(format!(
            "weight length {} does not match moments for R = {}",
            weights.len(),
            moments.r
        )));
    }
    let r = moments.r;
    let mut total = 0.0;
    for a in 0..r {
        if weights[a] == 0.0 {
            continue;
        }
        let row = &moments.covariance[a * r..(a + 1) * r];
        let mut inner = 0.0;
        for b in 0..r {
            inner += row[b] * weights[b];
        }
        total += weights[a] * inner;
    }
    Ok(total)
}

fn check_rank(r: usize, threshold_rank: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::Argument("window size must be at least 1".into()));
    }
    if threshold_rank == 0 || threshold_rank > r {
        return Err(Error::Argument(format!(
            "threshold rank {threshold_rank} outside [1, {r}]"
        )));
    }
    Ok(())
}
