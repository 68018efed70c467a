//! Independent oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

pub fn gauss_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Kernel sum `Σ_l w_l κ_l(dt)` written out from the density formula.
pub fn kernel_oracle(means: &[f64], sigmas: &[f64], horizon: f64, weights: &[f64], dt: f64) -> f64 {
    if !(0.0..=horizon).contains(&dt) {
        return 0.0;
    }
    means
        .iter()
        .zip(sigmas)
        .zip(weights)
        .map(|((&m, &s), &w)| w * gauss_pdf(dt, m, s))
        .sum()
}

/// Intensity from the definition: every event strictly before `t`.
pub fn intensity_oracle(
    events: &[f64],
    means: &[f64],
    sigmas: &[f64],
    horizon: f64,
    weights: &[f64],
    t: f64,
) -> f64 {
    events
        .iter()
        .filter(|&&e| e < t)
        .map(|&e| kernel_oracle(means, sigmas, horizon, weights, t - e))
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral of `f` over `[a, b]`, split at `breaks` so every piece is smooth.
pub fn piecewise_quadrature<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let n = cuts.len() - 1;
    cuts.windows(2)
        .map(|w| {
            // evaluate strictly inside each piece so endpoint conventions do not matter
            let eps = (w[1] - w[0]) * 1e-13;
            adaptive_simpson(f, w[0] + eps, w[1] - eps, tol / n as f64)
        })
        .sum()
}

/// Compensator by quadrature, split at each event and at each event plus horizon.
pub fn compensator_oracle(
    events: &[f64],
    means: &[f64],
    sigmas: &[f64],
    horizon: f64,
    weights: &[f64],
    t_end: f64,
) -> f64 {
    let breaks: Vec<f64> = events.iter().flat_map(|&e| [e, e + horizon]).collect();
    let f = |t: f64| intensity_oracle(events, means, sigmas, horizon, weights, t);
    piecewise_quadrature(&f, 0.0, t_end, &breaks, 1e-13)
}

/// Log-likelihood by definition: log-intensity at every event that has an
/// earlier event within the horizon, minus the quadrature compensator.
pub fn loglik_oracle(
    events: &[f64],
    means: &[f64],
    sigmas: &[f64],
    horizon: f64,
    weights: &[f64],
    t_end: f64,
) -> f64 {
    let mut ll = 0.0;
    for (i, &t) in events.iter().enumerate() {
        let excited = events[..i].iter().any(|&e| e < t && t - e <= horizon);
        if !excited {
            continue;
        }
        let lambda = intensity_oracle(events, means, sigmas, horizon, weights, t);
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += lambda.ln();
    }
    ll - compensator_oracle(events, means, sigmas, horizon, weights, t_end)
}

/// Probability of drawing the tokens of `doc` one by one from a Pólya urn
/// seeded with `cluster` counts plus `theta` pseudo-counts per word.
pub fn urn_log_prob(cluster: &[u64], doc: &[u64], theta: f64) -> f64 {
    let v = cluster.len() as f64;
    let mut counts: Vec<f64> = cluster.iter().map(|&c| c as f64).collect();
    let mut total: f64 = counts.iter().sum();
    let mut lp = 0.0;
    for (w, &n) in doc.iter().enumerate() {
        for _ in 0..n {
            lp += ((counts[w] + theta) / (total + v * theta)).ln();
            counts[w] += 1.0;
            total += 1.0;
        }
    }
    lp
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI from an explicit contingency table, geometric normalization.
pub fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ca.len() == 1 && cb.len() == 1 {
        return 1.0;
    }
    if ca.len() == 1 || cb.len() == 1 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c as f64 / n;
        let px = ca[&x] as f64 / n;
        let py = cb[&y] as f64 / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    mi / (ha * hb).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Event counts and pooled inter-arrival times of `runs` independent simulations.
pub fn simulate_many(
    mu: f64,
    weights: &[f64],
    basis: &pdhp::KernelBasis,
    end: f64,
    runs: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    use rand::SeedableRng;
    let mut counts = Vec::with_capacity(runs);
    let mut gaps = Vec::new();
    for run in 0..runs {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let ev = pdhp::datagen::simulate_hawkes(mu, weights, basis, end, &mut rng).unwrap();
        counts.push(ev.len() as f64);
        let mut prev = 0.0;
        for &t in &ev {
            gaps.push(t - prev);
            prev = t;
        }
    }
    (counts, gaps)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
