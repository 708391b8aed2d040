//! Estimators and distributional tests for the experiment harness, plus the
//! sampler of the limit variable built from Poisson cycle counts.

use rand_chacha::rand_core::RngCore;
use serde::Serialize;

use crate::analytic::RateTable;
use crate::error::{Error, Result};
use crate::model::rng::uniform_f64;
use crate::numerics::{chi_square_sf, ln_factorial};

/// Sample moments with standard errors, including falling-factorial moments
/// up to order 3.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    pub factorial_moments: Vec<FactorialMoment>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FactorialMoment {
    pub order: usize,
    pub estimate: f64,
    pub se: f64,
}

/// Mean, variance and factorial moments of a sample.
pub fn moment_report(samples: &[f64]) -> Result<MomentReport> {
    if samples.len() < 2 {
        return Err(Error::Domain("moment report needs at least 2 samples".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let factorial_moments = (1..=3)
        .map(|r| factorial_moment(samples, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentReport {
        n: samples.len(),
        mean,
        var,
        se: (var / n).sqrt(),
        factorial_moments,
    })
}

/// Falling-factorial moment estimate E[x(x-1)..(x-r+1)] with jackknife
/// standard error.
pub fn factorial_moment(samples: &[f64], order: usize) -> Result<FactorialMoment> {
    if order == 0 || order > 3 {
        return Err(Error::Domain(format!(
            "factorial moments implemented for orders 1..=3, got {order}"
        )));
    }
    if samples.len() < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    let transformed: Vec<f64> = samples
        .iter()
        .map(|&x| (0..order).map(|i| x - i as f64).product())
        .collect();
    let n = transformed.len() as f64;
    let total: f64 = transformed.iter().sum();
    let estimate = total / n;
    // Leave-one-out estimates of a plain mean collapse to a closed form.
    let mut var_jack = 0.0;
    for &y in &transformed {
        let loo = (total - y) / (n - 1.0);
        var_jack += (loo - estimate) * (loo - estimate);
    }
    var_jack *= (n - 1.0) / n;
    Ok(FactorialMoment {
        order,
        estimate,
        se: var_jack.sqrt(),
    })
}

/// Chi-square goodness-of-fit report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GofReport {
    pub chi_sq: f64,
    pub dof: u64,
    pub p: f64,
}

/// Reported p-values are floored here to avoid underflow noise in JSON.
pub const P_VALUE_FLOOR: f64 = 1e-15;

/// Chi-square test of an observed count histogram against Poisson(rate).
///
/// `observed[c]` is the number of samples with value c. Cells are merged
/// from the right so every expected cell stays at or above 5.
pub fn poisson_gof(observed: &[u64], rate: f64) -> Result<GofReport> {
    let total: u64 = observed.iter().sum();
    if total < 100 {
        return Err(Error::Domain(format!(
            "goodness-of-fit needs at least 100 observations, got {total}"
        )));
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Domain("rate must be positive".into()));
    }
    let n = total as f64;
    let pmf = |c: usize| (c as f64 * rate.ln() - rate - ln_factorial(c as u64)).exp();
    // Choose the tail cutoff: keep cells 0..cut separate while both the cell
    // and the remaining tail keep expected mass >= 5.
    let max_cell = observed.len().max(2);
    let mut cut = 0usize;
    let mut head_mass = 0.0;
    while cut < max_cell {
        let cell = n * pmf(cut);
        let tail = n * (1.0 - head_mass - pmf(cut));
        if cell < 5.0 || tail < 5.0 {
            break;
        }
        head_mass += pmf(cut);
        cut += 1;
    }
    if cut == 0 {
        return Err(Error::Domain(
            "expected counts too small to form two cells; need more observations".into(),
        ));
    }
    // Cells 0..cut plus one tail cell [cut, infinity).
    let mut chi_sq = 0.0;
    let mut tail_obs = 0u64;
    for (c, &o) in observed.iter().enumerate() {
        if c >= cut {
            tail_obs += o;
        }
    }
    for c in 0..cut {
        let e = n * pmf(c);
        let o = observed.get(c).copied().unwrap_or(0) as f64;
        chi_sq += (o - e) * (o - e) / e;
    }
    let tail_e = n * (1.0 - head_mass);
    chi_sq += (tail_obs as f64 - tail_e) * (tail_obs as f64 - tail_e) / tail_e;
    let dof = cut as u64; // cells = cut + 1
    Ok(GofReport {
        chi_sq,
        dof,
        p: chi_square_sf(chi_sq, dof).max(P_VALUE_FLOOR),
    })
}

/// Poisson sampler by inversion; intended for the small rates used here.
pub fn sample_poisson(rate: f64, rng: &mut impl RngCore) -> u64 {
    debug_assert!(rate > 0.0 && rate < 50.0);
    let u = uniform_f64(rng);
    let mut p = (-rate).exp();
    let mut cum = p;
    let mut c = 0u64;
    while u > cum && c < 1000 {
        c += 1;
        p *= rate / c as f64;
        cum += p;
    }
    c
}

/// One draw of the truncated limit variable: independent Poisson counts for
/// every pattern with half-length <= ell, multiplied into
/// prod (1+delta)^count exp(-lambda delta).
pub fn sample_w(rates: &RateTable, ell: usize, rng: &mut impl RngCore) -> Result<f64> {
    sample_w_log(rates, ell, rng).map(f64::exp)
}

/// ln of `sample_w`; the exact summand form of the cycle statistic.
pub fn sample_w_log(rates: &RateTable, ell: usize, rng: &mut impl RngCore) -> Result<f64> {
    if rates.max_len < ell {
        return Err(Error::Domain(format!(
            "rate table covers half-lengths <= {}, requested {ell}",
            rates.max_len
        )));
    }
    let mut log_w = 0.0;
    for entry in rates.entries_up_to(ell) {
        let count = sample_poisson(entry.lambda, rng);
        log_w += count as f64 * entry.delta.ln_1p() - entry.lambda * entry.delta;
    }
    Ok(log_w)
}

/// Two-sample Kolmogorov-Smirnov distance sup |F1 - F2|.
pub fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at significance `alpha`.
pub fn ks_critical(alpha: f64, n1: usize, n2: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng::replicate_stream;

    #[test]
    fn gof_accepts_exact_proportions() {
        // Counts exactly proportional to the Poisson(1) pmf.
        let rate = 1.0;
        let n = 100_000.0;
        let observed: Vec<u64> = (0..12)
            .map(|c| (n * (c as f64 * 0.0 - rate - ln_factorial(c)).exp()).round() as u64)
            .collect();
        let r = poisson_gof(&observed, rate).unwrap();
        assert!(r.chi_sq < 1.0, "chi_sq = {}", r.chi_sq);
        assert!(r.p > 0.9);
    }

    #[test]
    fn gof_rejects_gross_mismatch() {
        // All mass at zero against rate 5.
        let observed = vec![1000u64];
        let r = poisson_gof(&observed, 5.0).unwrap();
        assert!(r.p < 1e-10);
        assert!(r.p >= P_VALUE_FLOOR);
    }

    #[test]
    fn gof_self_test_against_sampler() {
        let mut rng = replicate_stream(404, 0);
        let mut observed = vec![0u64; 16];
        for _ in 0..10_000 {
            let c = sample_poisson(0.5, &mut rng) as usize;
            observed[c.min(15)] += 1;
        }
        let r = poisson_gof(&observed, 0.5).unwrap();
        assert!(r.p >= 0.001, "p = {}", r.p);
    }

    #[test]
    fn gof_needs_observations() {
        assert!(poisson_gof(&[10, 5], 0.5).is_err());
    }

    #[test]
    fn factorial_moment_exact_cases() {
        let constant = vec![4.0; 50];
        let r = factorial_moment(&constant, 3).unwrap();
        assert_eq!(r.estimate, 4.0 * 3.0 * 2.0);
        assert_eq!(r.se, 0.0);
        let samples = [1.0, 2.0, 3.0, 4.0];
        let r1 = factorial_moment(&samples, 1).unwrap();
        assert!((r1.estimate - 2.5).abs() < 1e-12);
        // Jackknife SE of a mean equals the classical SE.
        let classical = (samples.iter().map(|x| (x - 2.5) * (x - 2.5)).sum::<f64>() / 3.0 / 4.0)
            .sqrt();
        assert!((r1.se - classical).abs() < 1e-12);
        assert!(factorial_moment(&samples, 4).is_err());
    }

    #[test]
    fn poisson_factorial_moments_match_rate_powers() {
        let rate = 1.7;
        let mut rng = replicate_stream(505, 1);
        let samples: Vec<f64> = (0..40_000)
            .map(|_| sample_poisson(rate, &mut rng) as f64)
            .collect();
        for r in 1..=3usize {
            let fm = factorial_moment(&samples, r).unwrap();
            let expect = rate.powi(r as i32);
            assert!(
                (fm.estimate - expect).abs() <= 4.0 * fm.se,
                "order {r}: {} vs {expect} (se {})",
                fm.estimate,
                fm.se
            );
        }
    }

    #[test]
    fn w_sampler_with_no_cycles() {
        // Forcing all counts to zero leaves exp(-sum lambda delta); the
        // probability of zero everywhere is sizable at ell=1, so find one.
        let rates = RateTable::new(3, 2, 1).unwrap();
        let expect = (0.2360679774997897f64).exp().recip();
        let mut rng = replicate_stream(606, 2);
        let found = (0..200)
            .map(|_| sample_w(&rates, 1, &mut rng).unwrap())
            .any(|w| (w - expect).abs() < 1e-12);
        assert!(found, "zero-census draw should appear and equal {expect}");
    }

    #[test]
    fn w_mean_is_one() {
        let rates = RateTable::new(3, 2, 3).unwrap();
        let mut rng = replicate_stream(707, 3);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_w(&rates, 3, &mut rng).unwrap())
            .collect();
        let report = moment_report(&draws).unwrap();
        assert!(
            (report.mean - 1.0).abs() <= 3.0 * report.se,
            "mean {} se {}",
            report.mean,
            report.se
        );
    }

    #[test]
    fn ks_distance_basics() {
        let mut a = [1.0, 2.0, 3.0, 4.0];
        let mut b = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_distance(&mut a, &mut b), 0.0);
        let mut c = [1.0, 2.0];
        let mut d = [3.0, 4.0];
        assert_eq!(ks_distance(&mut c, &mut d), 1.0);
        // Interleaved samples: distance 1/2 at the crossing.
        let mut e = [1.0, 3.0];
        let mut f = [2.0, 4.0];
        assert_eq!(ks_distance(&mut e, &mut f), 0.5);
    }

    #[test]
    fn ks_self_distribution_stays_small() {
        let mut rng = replicate_stream(808, 4);
        let mut a: Vec<f64> = (0..20_000).map(|_| uniform_f64(&mut rng)).collect();
        let mut b: Vec<f64> = (0..20_000).map(|_| uniform_f64(&mut rng)).collect();
        let d = ks_distance(&mut a, &mut b);
        assert!(d < ks_critical(0.001, 20_000, 20_000), "d = {d}");
    }
}
