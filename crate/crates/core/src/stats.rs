//! Small statistical helpers for the property suites.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Outcome of a multinomial goodness-of-fit test.
#[derive(Debug, Clone)]
pub struct GofOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl GofOutcome {
    pub fn rejects_at(&self, significance: f64) -> bool {
        self.p_value < significance
    }
}

/// Pearson chi-squared test of observed counts against expected
/// probabilities. Categories with zero probability must have zero counts;
/// otherwise the fit is rejected outright (p = 0).
pub fn chi_squared_gof(observed: &[u64], probs: &[f64]) -> Result<GofOutcome> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidParameter(
            "observed and probability vectors differ in length".into(),
        ));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::InvalidParameter("no observations".into()));
    }
    let mut statistic = 0.0;
    let mut dof = 0usize;
    for (&obs, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if obs > 0 {
                return Ok(GofOutcome { statistic: f64::INFINITY, dof: 1, p_value: 0.0 });
            }
            continue;
        }
        let expected = n as f64 * p;
        statistic += (obs as f64 - expected) * (obs as f64 - expected) / expected;
        dof += 1;
    }
    if dof < 2 {
        // A single possible category always fits.
        return Ok(GofOutcome { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let dist = ChiSquared::new((dof - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p_value = 1.0 - dist.cdf(statistic);
    Ok(GofOutcome { statistic, dof: dof - 1, p_value })
}

/// Chi-squared test of two histogram samples against each other (shared-bin
/// two-sample test), used to compare samplers.
pub fn chi_squared_two_sample(a: &[u64], b: &[u64]) -> Result<GofOutcome> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter("histograms differ in length".into()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InvalidParameter("empty histogram".into()));
    }
    let (na, nb) = (na as f64, nb as f64);
    let mut statistic = 0.0;
    let mut dof = 0usize;
    for (&ca, &cb) in a.iter().zip(b) {
        let total = (ca + cb) as f64;
        if total == 0.0 {
            continue;
        }
        let ea = total * na / (na + nb);
        let eb = total * nb / (na + nb);
        statistic += (ca as f64 - ea) * (ca as f64 - ea) / ea;
        statistic += (cb as f64 - eb) * (cb as f64 - eb) / eb;
        dof += 1;
    }
    if dof < 2 {
        return Ok(GofOutcome { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let dist = ChiSquared::new((dof - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p_value = 1.0 - dist.cdf(statistic);
    Ok(GofOutcome { statistic, dof: dof - 1, p_value })
}
