//! Hawkes intensities over a fixed basis of truncated Gaussian kernels.
//!
//! A cluster's intensity at time `t` is
//!
//! ```text
//! λ(t) = Σ_{t_i < t} Σ_l w_l · κ_l(t − t_i)
//! ```
//!
//! where `κ_l` is a Gaussian density with mean `means[l]` and standard
//! deviation `bandwidths[l]`, restricted to elapsed times in `[0, horizon]`.
//! The weight vector `w` is not fitted by gradient steps: each cluster keeps
//! a small set of candidate vectors, scores them with the running point
//! process log-likelihood, and uses the best one.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBasis<T> {
    means: Vec<T>,
    bandwidths: Vec<T>,
    horizon: T,
}

impl<T: Real> KernelBasis<T> {
    pub fn new(means: Vec<T>, bandwidths: Vec<T>, horizon: T) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::config("kernel basis needs at least one kernel"));
        }
        if means.len() != bandwidths.len() {
            return Err(Error::config(format!(
                "{} kernel means but {} bandwidths",
                means.len(),
                bandwidths.len()
            )));
        }
        if means.iter().any(|m| !m.is_finite() || *m < T::zero()) {
            return Err(Error::config("kernel means must be finite and nonnegative"));
        }
        if means.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("kernel means must be strictly increasing"));
        }
        if bandwidths.iter().any(|b| !b.is_finite() || *b <= T::zero()) {
            return Err(Error::config("kernel bandwidths must be positive"));
        }
        let min_horizon = Self::min_horizon(&means, &bandwidths);
        if !(horizon >= min_horizon) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "kernel horizon {horizon} is shorter than max(mean) + 5 max(bandwidth) = {min_horizon}"
            )));
        }
        Ok(Self {
            means,
            bandwidths,
            horizon,
        })
    }

    /// Basis whose horizon is the smallest admissible one.
    pub fn with_min_horizon(means: Vec<T>, bandwidths: Vec<T>) -> Result<Self> {
        if means.is_empty() || bandwidths.is_empty() {
            return Err(Error::config("kernel basis needs at least one kernel"));
        }
        let horizon = Self::min_horizon(&means, &bandwidths);
        Self::new(means, bandwidths, horizon)
    }

    fn min_horizon(means: &[T], bandwidths: &[T]) -> T {
        let max_mean = means.iter().copied().fold(T::zero(), T::max);
        let max_bw = bandwidths.iter().copied().fold(T::zero(), T::max);
        max_mean + T::lit(5.0) * max_bw
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    pub fn bandwidths(&self) -> &[T] {
        &self.bandwidths
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Gaussian density of kernel `l` at `dt`, ignoring truncation.
    #[inline]
    fn pdf(&self, l: usize, dt: T) -> T {
        let sigma = self.bandwidths[l];
        let z = (dt - self.means[l]) / sigma;
        (-(z * z) / T::lit(2.0)).exp() / (sigma * T::TAU().sqrt())
    }

    #[inline]
    fn std_normal_cdf(z: T) -> T {
        (T::one() + (z / T::SQRT_2()).error_fn()) / T::lit(2.0)
    }

    /// `∫_0^{min(x, horizon)} κ_l(s) ds` for `x ≥ 0`.
    #[inline]
    pub fn cumulative(&self, l: usize, x: T) -> T {
        let upper = x.min(self.horizon);
        if upper <= T::zero() {
            return T::zero();
        }
        let sigma = self.bandwidths[l];
        let m = self.means[l];
        let mass = Self::std_normal_cdf((upper - m) / sigma) - Self::std_normal_cdf(-m / sigma);
        mass.max(T::zero())
    }

    /// Total mass of kernel `l` on `[0, horizon]`.
    pub fn mass(&self, l: usize) -> T {
        self.cumulative(l, self.horizon)
    }

    /// Maximum value kernel `l` takes on `[0, horizon]`.
    pub fn peak(&self, l: usize) -> T {
        let at = self.means[l].min(self.horizon);
        self.pdf(l, at)
    }

    /// Branching ratio `Σ_l w_l · mass_l` of a weight vector.
    pub fn branching_ratio(&self, weights: &[T]) -> T {
        weights
            .iter()
            .enumerate()
            .map(|(l, &w)| w * self.mass(l))
            .sum()
    }

    pub fn kernel_vector(&self, dt: T) -> Result<Vec<T>> {
        if dt < T::zero() || dt.is_nan() {
            return Err(Error::domain(format!(
                "kernel evaluated at negative lag {dt}"
            )));
        }
        let mut out = vec![T::zero(); self.len()];
        self.accumulate_kernels(dt, &mut out);
        Ok(out)
    }

    /// Adds `κ(dt)` into `acc`; lags outside `[0, horizon]` contribute nothing.
    #[inline]
    pub(crate) fn accumulate_kernels(&self, dt: T, acc: &mut [T]) {
        if dt < T::zero() || dt > self.horizon {
            return;
        }
        for (l, slot) in acc.iter_mut().enumerate() {
            *slot = *slot + self.pdf(l, dt);
        }
    }

    /// `w · κ(dt)`, zero outside `[0, horizon]`.
    #[inline]
    pub fn weighted_kernel(&self, weights: &[T], dt: T) -> T {
        if dt < T::zero() || dt > self.horizon {
            return T::zero();
        }
        weights
            .iter()
            .enumerate()
            .map(|(l, &w)| {
                if w == T::zero() {
                    T::zero()
                } else {
                    w * self.pdf(l, dt)
                }
            })
            .sum()
    }

    /// Upper bound on `sup_dt w · κ(dt)`: the maximum over a grid of spacing
    /// `h` plus the Lipschitz margin `h/2 · Σ_l w_l |κ_l'|_max`, capped by
    /// `Σ_l w_l · peak_l`.
    pub fn weighted_kernel_bound(&self, weights: &[T]) -> T {
        let mut crude = T::zero();
        let mut slope = T::zero();
        let half_root_e = (-T::lit(0.5)).exp();
        for (l, &w) in weights.iter().enumerate() {
            crude = crude + w * self.peak(l);
            slope = slope + w * self.peak(l) * half_root_e / self.bandwidths[l];
        }
        let sigma_min = self.bandwidths.iter().copied().fold(T::infinity(), T::min);
        let h = sigma_min / T::lit(64.0);
        let steps = (self.horizon / h).ceil().to_u64().unwrap_or(0);
        let mut best = T::zero();
        for i in 0..=steps {
            let dt = (h * T::from_count(i)).min(self.horizon);
            best = best.max(self.weighted_kernel(weights, dt));
        }
        (best + slope * h / T::lit(2.0)).min(crude)
    }

    /// `Σ_l w_l ∫_0^{min(x, horizon)} κ_l`.
    #[inline]
    pub fn weighted_cumulative(&self, weights: &[T], x: T) -> T {
        weights
            .iter()
            .enumerate()
            .map(|(l, &w)| w * self.cumulative(l, x))
            .sum()
    }
}

impl KernelBasis<f64> {
    /// Three kernels at lags 3, 7 and 11 with bandwidth half the spacing.
    pub fn default_basis() -> Self {
        Self::with_min_horizon(vec![3.0, 7.0, 11.0], vec![2.0, 2.0, 2.0])
            .expect("default basis is valid")
    }
}

/// Event history and kernel-weight candidates of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDynamics<T> {
    event_times: Vec<T>,
    candidates: Vec<Vec<T>>,
    candidate_loglik: Vec<T>,
    active: usize,
}

impl<T: Real> ClusterDynamics<T> {
    pub fn new(candidates: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = candidates.first() else {
            return Err(Error::config(
                "a cluster needs at least one weight candidate",
            ));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::config("weight candidates must be nonempty"));
        }
        for c in &candidates {
            if c.len() != len {
                return Err(Error::config("weight candidates differ in length"));
            }
            if c.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
                return Err(Error::domain(
                    "weight candidates must be finite and nonnegative",
                ));
            }
        }
        let m = candidates.len();
        Ok(Self {
            event_times: Vec::new(),
            candidates,
            candidate_loglik: vec![T::zero(); m],
            active: 0,
        })
    }

    /// Cluster whose single candidate is `weights`.
    pub fn with_weights(weights: Vec<T>) -> Result<Self> {
        Self::new(vec![weights])
    }

    pub fn event_times(&self) -> &[T] {
        &self.event_times
    }

    pub fn candidates(&self) -> &[Vec<T>] {
        &self.candidates
    }

    pub fn candidate_loglik(&self) -> &[T] {
        &self.candidate_loglik
    }

    pub fn active_index(&self) -> usize {
        self.active
    }

    pub fn active_weights(&self) -> &[T] {
        &self.candidates[self.active]
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    pub fn last_time(&self) -> Option<T> {
        self.event_times.last().copied()
    }

    /// Indices of events with `t − horizon ≤ t_i < t`.
    #[inline]
    fn window(&self, basis: &KernelBasis<T>, t: T) -> std::ops::Range<usize> {
        let end = self.event_times.partition_point(|&e| e < t);
        let lo = t - basis.horizon();
        let start = self.event_times[..end].partition_point(|&e| e < lo);
        start..end
    }

    /// `λ(t)` under the active weights.
    pub fn intensity(&self, basis: &KernelBasis<T>, t: T) -> T {
        self.intensity_with(basis, self.active_weights(), t)
    }

    /// `λ(t)` under arbitrary weights; only events strictly before `t` count.
    pub fn intensity_with(&self, basis: &KernelBasis<T>, weights: &[T], t: T) -> T {
        history_intensity(&self.event_times, basis, weights, t)
    }

    /// Compensator `∫_0^{t_end} λ(s) ds` in closed form.
    pub fn integrated_intensity(
        &self,
        basis: &KernelBasis<T>,
        weights: &[T],
        t_end: T,
    ) -> Result<T> {
        if let Some(last) = self.last_time() {
            if t_end < last {
                return Err(Error::domain(format!(
                    "compensator end {t_end} precedes last event {last}"
                )));
            }
        }
        Ok(self
            .event_times
            .iter()
            .map(|&e| basis.weighted_cumulative(weights, t_end - e))
            .sum())
    }

    /// Point-process log-likelihood `Σ log λ(t_i) − ∫_0^{t_end} λ`.
    ///
    /// Events with no earlier event inside the kernel support (in particular
    /// the first one) carry no log-intensity term: their allocation was not
    /// explained by this cluster's excitation. Zero intensity at any other
    /// event yields `-inf`.
    pub fn hawkes_log_likelihood(
        &self,
        basis: &KernelBasis<T>,
        weights: &[T],
        t_end: T,
    ) -> Result<T> {
        check_weights(basis, weights)?;
        let compensator = self.integrated_intensity(basis, weights, t_end)?;
        let mut loglik = T::zero();
        for (i, &t) in self.event_times.iter().enumerate() {
            let window = self.window(basis, t);
            debug_assert!(window.end <= i);
            if window.is_empty() {
                continue;
            }
            let lambda = self.intensity_with(basis, weights, t);
            if lambda <= T::zero() {
                return Ok(T::neg_infinity());
            }
            loglik = loglik + lambda.ln();
        }
        Ok(loglik - compensator)
    }

    /// Appends an event and advances every candidate's log-likelihood.
    pub fn update(&mut self, basis: &KernelBasis<T>, t_new: T) -> Result<()> {
        if !t_new.is_finite() {
            return Err(Error::domain("event time must be finite"));
        }
        if let Some(last) = self.last_time() {
            if t_new < last {
                return Err(Error::domain(format!(
                    "event at {t_new} precedes last event {last}"
                )));
            }
            let l = basis.len();
            // Per-kernel compensator growth over (last, t_new] and kernel sums at t_new.
            let mut growth = vec![T::zero(); l];
            let start = self
                .event_times
                .partition_point(|&e| e < last - basis.horizon());
            for &e in &self.event_times[start..] {
                for (k, g) in growth.iter_mut().enumerate() {
                    *g = *g + basis.cumulative(k, t_new - e) - basis.cumulative(k, last - e);
                }
            }
            let window = self.window(basis, t_new);
            let excited = !window.is_empty();
            let mut kernels = vec![T::zero(); l];
            for &e in &self.event_times[window] {
                basis.accumulate_kernels(t_new - e, &mut kernels);
            }
            for (cand, ll) in self.candidates.iter().zip(self.candidate_loglik.iter_mut()) {
                let comp: T = cand.iter().zip(&growth).map(|(&w, &g)| w * g).sum();
                let mut next = *ll - comp;
                if excited {
                    let lambda: T = cand.iter().zip(&kernels).map(|(&w, &k)| w * k).sum();
                    next = if lambda > T::zero() {
                        next + lambda.ln()
                    } else {
                        T::neg_infinity()
                    };
                }
                *ll = next;
            }
        }
        self.event_times.push(t_new);
        self.active = argmax_lowest(&self.candidate_loglik);
        Ok(())
    }
}

/// `λ(t)` generated by a sorted event history under `weights`.
pub fn history_intensity<T: Real>(events: &[T], basis: &KernelBasis<T>, weights: &[T], t: T) -> T {
    let end = events.partition_point(|&e| e < t);
    let start = events[..end].partition_point(|&e| e < t - basis.horizon());
    events[start..end].iter().fold(T::zero(), |acc, &e| {
        acc + basis.weighted_kernel(weights, t - e)
    })
}

fn check_weights<T: Real>(basis: &KernelBasis<T>, weights: &[T]) -> Result<()> {
    if weights.len() != basis.len() {
        return Err(Error::domain(format!(
            "{} weights for a basis of {} kernels",
            weights.len(),
            basis.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(Error::domain(
            "kernel weights must be finite and nonnegative",
        ));
    }
    Ok(())
}

/// Index of the largest value; ties and an all `-inf` slice go to the lowest index.
fn argmax_lowest<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Draws `m` weight vectors: a uniform direction on the simplex times a
/// log-uniform scale from `scale_range`.
pub fn sample_candidates<T: Real, R: Rng + ?Sized>(
    scale_range: (T, T),
    m: usize,
    l: usize,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    let (lo, hi) = scale_range;
    if !(lo > T::zero()) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::config(format!(
            "invalid candidate scale range ({lo}, {hi})"
        )));
    }
    if m == 0 || l == 0 {
        return Err(Error::config(
            "candidate count and kernel count must be positive",
        ));
    }
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        // Normalized unit exponentials are uniform on the simplex.
        let mut dir: Vec<T> = (0..l).map(|_| T::lit(rng.sample::<f64, _>(Exp1))).collect();
        let total: T = dir.iter().copied().sum();
        if total > T::zero() {
            dir.iter_mut().for_each(|d| *d = *d / total);
        } else {
            dir.iter_mut()
                .for_each(|d| *d = T::one() / T::from_count(l as u64));
        }
        let u = T::lit(rng.random::<f64>());
        let scale = if hi == lo {
            lo
        } else {
            (ln_lo + u * (ln_hi - ln_lo)).exp()
        };
        out.push(dir.into_iter().map(|d| d * scale).collect());
    }
    Ok(out)
}
