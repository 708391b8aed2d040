//! First-moment formulas, clause-pattern tilt, divergences and the
//! threshold-side constants.

use crate::analytic::q::solve_q;
use crate::error::{Error, Result};
use crate::numerics::ln_binomial;
use crate::params::ModelParams;

/// ln of the asymptotic first moment,
/// n ln 2 + (m + 1/2) ln(1-(1-q)^k) - (dn + 1/2) ln(4q(1-q)).
///
/// This is the n -> infinity expression at fixed (k, d); see
/// `log_first_moment_exact` for the finite-size reference value.
pub fn log_first_moment(params: &ModelParams) -> Result<f64> {
    let q = solve_q(params.k as u32)?;
    if q <= 0.0 {
        return Err(Error::Domain(format!(
            "first moment undefined at k={} (q=0)",
            params.k
        )));
    }
    let sat = 1.0 - (1.0 - q).powi(params.k as i32);
    Ok(params.n as f64 * std::f64::consts::LN_2
        + (params.m as f64 + 0.5) * sat.ln()
        - (params.d as f64 * params.n as f64 + 0.5) * (4.0 * q * (1.0 - q)).ln())
}

/// ln of the deterministic normalizer multiplying Z in the limit statement;
/// exactly the negation of `log_first_moment`.
pub fn log_normalizer(params: &ModelParams) -> Result<f64> {
    log_first_moment(params).map(|v| -v)
}

/// ln E[Z] computed exactly by inclusion-exclusion over all-false clauses.
///
/// Every assignment has the same satisfaction probability, so
/// E[Z] = 2^n P[no clause receives only false literal clones], and the
/// clause events are exchangeable with falling-factorial probabilities.
/// The alternating sum is evaluated in plain f64; precision degrades once
/// the largest term dwarfs the result, which is flagged as an error
/// (in practice the formula is reliable for m up to roughly 80).
pub fn log_first_moment_exact(params: &ModelParams) -> Result<f64> {
    let (m, k, dn) = (params.m, params.k, params.d * params.n);
    let mut total = 0.0f64;
    let mut max_term = 0.0f64;
    let mut choose = 1.0f64; // C(m, j)
    let mut ratio = 1.0f64; // (dn)_{jk} / (2dn)_{jk}
    for j in 0..=m {
        if j * k > dn {
            break;
        }
        let term = choose * ratio;
        max_term = max_term.max(term);
        total += if j % 2 == 0 { term } else { -term };
        // extend the falling-factorial ratio by one clause worth of slots
        for i in j * k..(j + 1) * k {
            if i >= dn {
                ratio = 0.0;
                break;
            }
            ratio *= (dn - i) as f64 / (2 * dn - i) as f64;
        }
        choose = choose * (m - j) as f64 / (j + 1) as f64;
    }
    if total <= 0.0 || max_term * 1e-13 > total {
        return Err(Error::Numerical(format!(
            "inclusion-exclusion lost precision at m={m} (max term {max_term:.3e}, sum {total:.3e})"
        )));
    }
    Ok(params.n as f64 * std::f64::consts::LN_2 + total.ln())
}

/// The three auxiliary event probabilities behind the first moment:
/// P[S] that iid tilted clauses are all satisfied, P[B] that the iid array
/// balances exactly, and the stated asymptotic for P[B | S].
pub fn event_probabilities(params: &ModelParams) -> Result<(f64, f64, f64)> {
    let q = solve_q(params.k as u32)?;
    if q <= 0.0 {
        return Err(Error::Domain(format!(
            "event probabilities undefined at k={} (q=0)",
            params.k
        )));
    }
    let km = (params.k * params.m) as u64;
    let dn = (params.d * params.n) as u64;
    let sat = 1.0 - (1.0 - q).powi(params.k as i32);
    let p_s = (params.m as f64 * sat.ln()).exp();
    let ln_p_b = ln_binomial(km, dn) + dn as f64 * (q * (1.0 - q)).ln();
    let p_b = ln_p_b.exp();
    let p_b_given_s = (sat / (2.0 * std::f64::consts::PI * km as f64 * q * (1.0 - q))).sqrt();
    Ok((p_s, p_b, p_b_given_s))
}

/// Tilted law of a satisfied clause pattern: mu_bar(sigma) is the
/// probability that iid q-biased signs show pattern sigma given at least one
/// true literal. `pattern` holds the k literal truth values.
pub fn bar_mu(k: u32, pattern: &[i8]) -> Result<f64> {
    if pattern.len() != k as usize {
        return Err(Error::Domain(format!(
            "pattern length {} does not match k={k}",
            pattern.len()
        )));
    }
    if pattern.iter().all(|&s| s == -1) {
        return Err(Error::Domain(
            "the all-false pattern is excluded from the satisfied-pattern space".into(),
        ));
    }
    if pattern.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Domain("pattern entries must be +-1".into()));
    }
    let q = solve_q(k)?;
    if q <= 0.0 {
        return Err(Error::Domain(format!("bar_mu undefined at k={k} (q=0)")));
    }
    let true_count = pattern.iter().filter(|&&s| s == 1).count() as i32;
    let sat = 1.0 - (1.0 - q).powi(k as i32);
    Ok(q.powi(true_count) * (1.0 - q).powi(k as i32 - true_count) / sat)
}

/// `bar_mu` indexed by pattern code: bit j set means literal j is true.
pub fn bar_mu_by_code(k: u32, code: u32) -> Result<f64> {
    if k > 31 {
        return Err(Error::Domain(format!(
            "pattern codes cap clause width at 31, got {k}"
        )));
    }
    if code == 0 || code >= 1 << k {
        return Err(Error::Domain(format!(
            "pattern code must be in 1..2^k-1, got {code}"
        )));
    }
    let q = solve_q(k)?;
    if q <= 0.0 {
        return Err(Error::Domain(format!("bar_mu undefined at k={k} (q=0)")));
    }
    let w = code.count_ones() as i32;
    let sat = 1.0 - (1.0 - q).powi(k as i32);
    Ok(q.powi(w) * (1.0 - q).powi(k as i32 - w) / sat)
}

/// Kullback-Leibler divergence sum_x p_x ln(p_x / r_x), with the conventions
/// 0 ln 0 = 0 ln(0/0) = 0 and +infinity where p charges a point r does not.
pub fn kl_divergence(p: &[f64], r: &[f64]) -> Result<f64> {
    if p.len() != r.len() {
        return Err(Error::Domain(format!(
            "distributions must share an index set ({} vs {})",
            p.len(),
            r.len()
        )));
    }
    let mut total = 0.0;
    for (&px, &rx) in p.iter().zip(r) {
        if px == 0.0 {
            continue;
        }
        if rx == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += px * (px / rx).ln();
    }
    Ok(total)
}

/// Variance coefficient of the pair-array A statistic,
/// nu^2 = (k/16)(k - 4(k-1) q(1-q)).
pub fn nu_sq(k: u32) -> Result<f64> {
    let q = solve_q(k)?;
    let kf = k as f64;
    Ok(kf / 16.0 * (kf - 4.0 * (kf - 1.0) * q * (1.0 - q)))
}

/// Threshold-side constants for clause width k.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdInfo {
    /// Large-k asymptote of the satisfiability threshold in terms of 2d/k.
    pub asymptotic_threshold: f64,
    /// Largest 2d/k for which the limit distribution of the normalized
    /// count is established; four units below the asymptote.
    pub max_2d_over_k: f64,
    pub k: u32,
}

impl ThresholdInfo {
    /// Whether degree `d` satisfies 2d/k <= max_2d_over_k.
    pub fn admits(&self, d: u32) -> bool {
        2.0 * d as f64 / self.k as f64 <= self.max_2d_over_k
    }

    /// The largest admissible integer degree, if any.
    pub fn max_admissible_d(&self) -> Option<u32> {
        let d = (self.k as f64 * self.max_2d_over_k / 2.0).floor();
        if d >= 1.0 {
            Some(d as u32)
        } else {
            None
        }
    }
}

/// Evaluates both threshold expressions at clause width k.
pub fn threshold_info(k: u32) -> Result<ThresholdInfo> {
    if k < 2 {
        return Err(Error::Domain(format!("k must be >= 2, got {k}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let base = 2f64.powi(k as i32) * ln2 - k as f64 * ln2 / 2.0;
    Ok(ThresholdInfo {
        asymptotic_threshold: base - (1.0 + ln2) / 2.0,
        max_2d_over_k: base - 4.0,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, d: usize, k: usize) -> ModelParams {
        ModelParams::new(n, d, k).unwrap()
    }

    #[test]
    fn first_moment_example() {
        let p = params(15, 2, 3);
        let lfm = log_first_moment(&p).unwrap();
        assert!((lfm - 6.6257).abs() < 1e-3);
        assert!((lfm.exp() - 755.0).abs() < 1.0);
        assert!((log_normalizer(&p).unwrap() + lfm).abs() < 1e-15);
    }

    #[test]
    fn per_variable_exponent() {
        // ln 2 + (4/3) ln(2q) - 2 ln(4q(1-q)) at k=3, d=2.
        let q = solve_q(3).unwrap();
        let expect = std::f64::consts::LN_2 + 4.0 / 3.0 * (2.0 * q).ln()
            - 2.0 * (4.0 * q * (1.0 - q)).ln();
        assert!((expect - 0.44879).abs() < 1e-4);
        // Only the half-integer terms are non-extensive: f(2n) - 2 f(n) is a
        // bounded constant.
        let a = log_first_moment(&params(15, 2, 3)).unwrap();
        let b = log_first_moment(&params(30, 2, 3)).unwrap();
        let c = log_first_moment(&params(60, 2, 3)).unwrap();
        assert!(((b - 2.0 * a) - (c - 2.0 * b)).abs() < 1e-9);
    }

    #[test]
    fn exact_first_moment_matches_direct_sum() {
        // n=9, d=2, k=3: independently computed inclusion-exclusion value.
        let p = params(9, 2, 3);
        let exact = log_first_moment_exact(&p).unwrap().exp();
        assert!((exact - 77.419_981_796_634_97).abs() < 1e-9);
        // The asymptotic formula undershoots by the constant factor
        // sqrt(2(1-q)) / sqrt(4q-1) at k=3; check the measured gap at n=15.
        let p15 = params(15, 2, 3);
        let ratio =
            log_first_moment_exact(&p15).unwrap().exp() / log_first_moment(&p15).unwrap().exp();
        assert!((ratio - 1.5217).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn event_probability_examples() {
        let (p_s, p_b, p_bs) = event_probabilities(&params(15, 2, 3)).unwrap();
        let q = solve_q(3).unwrap();
        assert!((p_s - (2.0 * q).powi(20)).abs() < 1e-15);
        assert!((p_s - 4.577e-3).abs() < 1e-5);
        assert!((p_b - 0.018364).abs() < 1e-5);
        assert!(p_b > 0.0);
        assert!((p_bs - 0.09265).abs() < 1e-5);
    }

    #[test]
    fn bar_mu_reductions_and_normalization() {
        let q = solve_q(3).unwrap();
        assert!((bar_mu(3, &[1, 1, 1]).unwrap() - q * q / 2.0).abs() < 1e-12);
        assert!((bar_mu(3, &[1, -1, 1]).unwrap() - q * (1.0 - q) / 2.0).abs() < 1e-12);
        let total: f64 = (1u32..8).map(|c| bar_mu_by_code(3, c).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Balance: the tilt is centred, sum of mu_bar(sigma) <sigma, 1> = 0.
        let balance: f64 = (1u32..8)
            .map(|c| {
                bar_mu_by_code(3, c).unwrap() * (2.0 * c.count_ones() as f64 - 3.0)
            })
            .sum();
        assert!(balance.abs() < 1e-10);
        assert!(bar_mu(3, &[-1, -1, -1]).is_err());
    }

    #[test]
    fn kl_edge_cases() {
        let u = [0.5, 0.5];
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
        let point = [1.0, 0.0];
        assert!((kl_divergence(&point, &u).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&u, &point).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&u, &[1.0]).is_err());
        assert!(kl_divergence(&[0.3, 0.7], &[0.5, 0.5]).unwrap() > 0.0);
    }

    #[test]
    fn nu_sq_values() {
        assert!((nu_sq(3).unwrap() - 0.208398).abs() < 1e-6);
        // k=2 degenerates to q=0, leaving (k/16) k = 1/4.
        assert!((nu_sq(2).unwrap() - 0.25).abs() < 1e-15);
        for k in 2..40 {
            assert!(nu_sq(k).unwrap() > 0.0);
        }
    }

    #[test]
    fn threshold_examples() {
        let t10 = threshold_info(10).unwrap();
        assert!((t10.max_2d_over_k - 702.3169769905843).abs() < 1e-9);
        assert!((t10.asymptotic_threshold - 705.4704034003043).abs() < 1e-9);
        assert_eq!(t10.max_admissible_d(), Some(3511));
        assert!(t10.admits(3511) && !t10.admits(3512));
        let t3 = threshold_info(3).unwrap();
        assert!((t3.max_2d_over_k - 0.5055).abs() < 1e-4);
        assert_eq!(t3.max_admissible_d(), None);
        let t5 = threshold_info(5).unwrap();
        assert_eq!(t5.max_admissible_d(), Some(41));
    }
}
