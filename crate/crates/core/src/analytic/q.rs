//! Root of the tilt equation 2q = 1 - (1-q)^k.

use crate::error::{Error, Result};

/// Residual of the tilt equation at `q`.
pub fn q_residual(k: u32, q: f64) -> f64 {
    2.0 * q - 1.0 + (1.0 - q).powi(k as i32)
}

/// Solves 2q = 1 - (1-q)^k for the root in [0, 1).
///
/// For k >= 3 the root is unique in (0, 1/2) and is located by bisection to
/// 1e-6 followed by Newton polishing; the residual ends below 1e-14. For
/// k = 2 the equation degenerates to q^2 = 0, whose only root in [0, 1) is 0,
/// and 0 is returned exactly.
pub fn solve_q(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("clause width k={k} must be >= 2")));
    }
    if k == 2 {
        return Ok(0.0);
    }
    // f(q) = 1 - (1-q)^k - 2q is positive near 0+ and negative at 1/2.
    let f = |q: f64| 1.0 - (1.0 - q).powi(k as i32) - 2.0 * q;
    let mut lo = 1e-12;
    let mut hi = 0.5;
    if f(hi) >= 0.0 {
        // 2^-k underflows the subtraction: the root is 1/2 to f64 precision.
        return Ok(0.5);
    }
    debug_assert!(f(lo) > 0.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut q = 0.5 * (lo + hi);
    for _ in 0..60 {
        let r = q_residual(k, q);
        if r.abs() <= 1e-15 {
            break;
        }
        // d/dq [2q - 1 + (1-q)^k] = 2 - k (1-q)^(k-1)
        let deriv = 2.0 - k as f64 * (1.0 - q).powi(k as i32 - 1);
        let step = r / deriv;
        q -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    if q_residual(k, q).abs() > 1e-14 {
        return Err(Error::Numerical(format!(
            "q solver stalled at k={k}: residual {}",
            q_residual(k, q)
        )));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_closed_form() {
        // The cubic factors as q (q^2 - 3q + 1), giving q = (3 - sqrt 5)/2.
        let expected = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((solve_q(3).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn k4_matches_bisection_oracle() {
        // Independent oracle: plain bisection on the residual, to 1e-12.
        let f = |q: f64| q_residual(4, q);
        let (mut lo, mut hi) = (1e-9, 0.5);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - 0.4563109873).abs() < 1e-9);
        assert!((solve_q(4).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn k20_near_half() {
        let q = solve_q(20).unwrap();
        let err = (q - (0.5 - 2f64.powi(-21))).abs();
        assert!(err <= 2.0 * 20.0 * 4f64.powi(-20));
    }

    #[test]
    fn residuals_tiny_and_monotone() {
        // The root approaches 1/2 like 2^(-1-k); beyond k ~ 53 it is no
        // longer distinguishable from 1/2 in f64, so monotonicity is
        // asserted strictly only while the gap is representable.
        let mut prev = -1.0;
        for k in 2..=64 {
            let q = solve_q(k).unwrap();
            assert!(q_residual(k, q).abs() <= 1e-14, "k={k}");
            if k <= 50 {
                assert!(q > prev, "q must increase with k (k={k})");
                assert!(q < 0.5);
            } else {
                assert!(q >= prev && q <= 0.5);
            }
            prev = q;
        }
    }

    #[test]
    fn rejects_k_below_two() {
        assert!(solve_q(1).is_err());
    }
}
