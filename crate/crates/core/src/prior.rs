//! Powered allocation priors.
//!
//! Both priors raise the "popularity" of each existing cluster to a power
//! `r` before normalizing against a new-cluster mass:
//!
//! * over counts `N_k` with concentration `alpha0` (the powered Dirichlet process),
//! * over Hawkes intensities `λ_c(t)` with new-cluster intensity `lambda0`.
//!
//! `r = 1` gives the Dirichlet / Dirichlet-Hawkes process, `r = 0` the
//! uniform process. `0^0` is taken as 1 so the uniform limit also holds for
//! clusters whose intensity has momentarily dropped to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams<T> {
    pub r: T,
    pub alpha0: T,
    pub lambda0: T,
}

impl<T: Real> PriorParams<T> {
    pub fn new(r: T, alpha0: T, lambda0: T) -> Result<Self> {
        let p = Self { r, alpha0, lambda0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= T::zero()) || !self.r.is_finite() {
            return Err(Error::config(format!(
                "r must be finite and >= 0, got {}",
                self.r
            )));
        }
        if !(self.alpha0 > T::zero()) || !self.alpha0.is_finite() {
            return Err(Error::config(format!(
                "alpha0 must be > 0, got {}",
                self.alpha0
            )));
        }
        if !(self.lambda0 > T::zero()) || !self.lambda0.is_finite() {
            return Err(Error::config(format!(
                "lambda0 must be > 0, got {}",
                self.lambda0
            )));
        }
        Ok(())
    }
}

/// `x^r` with `0^0 = 1`.
#[inline]
fn powered<T: Real>(x: T, r: T) -> T {
    if r == T::zero() {
        T::one()
    } else {
        x.powf(r)
    }
}

/// `r · ln x` with `0 · ln 0 = 0`.
#[inline]
fn log_powered<T: Real>(x: T, r: T) -> T {
    if r == T::zero() {
        T::zero()
    } else if x == T::zero() {
        T::neg_infinity()
    } else {
        r * x.ln()
    }
}

/// Powered Dirichlet process over cluster sizes; the last entry is the new cluster.
pub fn pdp_prior<T: Real>(counts: &[u64], params: &PriorParams<T>) -> Result<Vec<T>> {
    params.validate()?;
    if let Some(pos) = counts.iter().position(|&n| n == 0) {
        return Err(Error::domain(format!("cluster {pos} is empty")));
    }
    let mut out: Vec<T> = counts
        .iter()
        .map(|&n| powered(T::from_count(n), params.r))
        .collect();
    out.push(params.alpha0);
    normalize(&mut out);
    Ok(out)
}

fn check_intensities<T: Real>(intensities: &[T]) -> Result<()> {
    if let Some((i, l)) = intensities
        .iter()
        .enumerate()
        .find(|(_, l)| !l.is_finite() || **l < T::zero())
    {
        return Err(Error::domain(format!("intensity {i} is {l}")));
    }
    Ok(())
}

fn normalize<T: Real>(xs: &mut [T]) {
    let total: T = xs.iter().copied().sum();
    xs.iter_mut().for_each(|x| *x = *x / total);
}

/// Powered Dirichlet-Hawkes prior over cluster intensities at one instant.
pub fn pdhp_prior<T: Real>(intensities: &[T], params: &PriorParams<T>) -> Result<Vec<T>> {
    params.validate()?;
    check_intensities(intensities)?;
    let mut out: Vec<T> = intensities.iter().map(|&l| powered(l, params.r)).collect();
    out.push(params.lambda0);
    normalize(&mut out);
    Ok(out)
}

/// Log-space [`pdhp_prior`]; stays finite for intensities near underflow.
pub fn log_pdhp_prior<T: Real>(intensities: &[T], params: &PriorParams<T>) -> Result<Vec<T>> {
    params.validate()?;
    check_intensities(intensities)?;
    let mut out: Vec<T> = intensities
        .iter()
        .map(|&l| log_powered(l, params.r))
        .collect();
    out.push(params.lambda0.ln());
    let z = log_sum_exp(&out);
    out.iter_mut().for_each(|x| *x = *x - z);
    Ok(out)
}
