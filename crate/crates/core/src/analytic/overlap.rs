//! Implicit overlap measure, the pair-exponent functions f and g, and the
//! stationary points of g.

use crate::analytic::moments::{kl_divergence, threshold_info};
use crate::analytic::q::solve_q;
use crate::error::{Error, Result};

/// The implicitly defined clause-pair measure at a given overlap.
///
/// Index order is (1,1), (1,-1), (-1,1), (-1,-1) for both `rho` and `qmat`.
#[derive(Clone, Copy, Debug)]
pub struct OverlapMeasure {
    pub rho11: f64,
    pub rho: [f64; 4],
    pub qmat: [f64; 4],
    /// Max absolute residual of the three defining equations at `qmat`.
    pub residual: f64,
}

/// Overlap measure together with the exponent values at that point.
#[derive(Clone, Copy, Debug)]
pub struct OverlapPoint {
    pub measure: OverlapMeasure,
    pub f_val: f64,
    pub g_val: f64,
    pub entropy: f64,
}

fn rho_from_rho11(rho11: f64) -> [f64; 4] {
    [rho11, 0.5 - rho11, 0.5 - rho11, rho11]
}

/// s(q) = 1 - 2 (q_mm + q_1m)^k + q_mm^k, the pair-satisfaction normalizer.
fn normalizer(k: i32, q11: f64, q1m: f64) -> f64 {
    let qmm = 1.0 - q11 - 2.0 * q1m;
    let b = qmm + q1m;
    1.0 - 2.0 * b.powi(k) + qmm.powi(k)
}

/// Residuals of the two free defining equations.
fn residuals(k: i32, rho: &[f64; 4], q11: f64, q1m: f64) -> (f64, f64) {
    let qmm = 1.0 - q11 - 2.0 * q1m;
    let b = qmm + q1m;
    let s = normalizer(k, q11, q1m);
    let f1 = q11 - rho[0] * s;
    let f2 = q1m * (1.0 - b.powi(k - 1)) - rho[1] * s;
    (f1, f2)
}

/// Solves the three defining equations for the pair measure at `rho11` by a
/// damped Newton iteration with the analytic Jacobian, started from the
/// product measure (which is exact at rho11 = 1/4).
pub fn overlap_solve(k: u32, rho11: f64) -> Result<OverlapMeasure> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "overlap measure needs k >= 3 (k={k} is degenerate)"
        )));
    }
    if !(rho11 > 0.0 && rho11 < 0.5) {
        return Err(Error::Domain(format!("rho11 must lie in (0, 1/2), got {rho11}")));
    }
    let q = solve_q(k)?;
    let start = (q * q, q * (1.0 - q));
    match newton(k as i32, rho11, start) {
        Ok(m) => Ok(m),
        Err(_) => {
            // Walk from the exactly-known centre toward the target, reusing
            // each solution as the next warm start.
            let mut guess = start;
            let steps = 32;
            for i in 1..=steps {
                let r = 0.25 + (rho11 - 0.25) * i as f64 / steps as f64;
                let m = newton(k as i32, r, guess)?;
                guess = (m.qmat[0], m.qmat[1]);
            }
            newton(k as i32, rho11, guess)
        }
    }
}

fn newton(k: i32, rho11: f64, start: (f64, f64)) -> Result<OverlapMeasure> {
    let rho = rho_from_rho11(rho11);
    let (mut q11, mut q1m) = start;
    let norm = |a: f64, b: f64| a.abs().max(b.abs());
    let (mut f1, mut f2) = residuals(k, &rho, q11, q1m);
    let mut res = norm(f1, f2);
    for iter in 0..50 {
        if res <= 1e-13 {
            break;
        }
        let qmm = 1.0 - q11 - 2.0 * q1m;
        let b = qmm + q1m;
        let ds_dq11 = 2.0 * k as f64 * b.powi(k - 1) - k as f64 * qmm.powi(k - 1);
        let ds_dq1m = 2.0 * k as f64 * b.powi(k - 1) - 2.0 * k as f64 * qmm.powi(k - 1);
        let j11 = 1.0 - rho[0] * ds_dq11;
        let j12 = -rho[0] * ds_dq1m;
        let j21 = q1m * (k - 1) as f64 * b.powi(k - 2) - rho[1] * ds_dq11;
        let j22 = (1.0 - b.powi(k - 1)) + q1m * (k - 1) as f64 * b.powi(k - 2)
            - rho[1] * ds_dq1m;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(Error::Numerical(format!(
                "singular Jacobian at rho11={rho11}, iteration {iter}"
            )));
        }
        let dx = (f1 * j22 - f2 * j12) / det;
        let dy = (j11 * f2 - j21 * f1) / det;
        // Damp: halve the step until the residual decreases and the iterate
        // stays inside the open simplex.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let c11 = q11 - scale * dx;
            let c1m = q1m - scale * dy;
            let cmm = 1.0 - c11 - 2.0 * c1m;
            if c11 > 1e-14 && c1m > 1e-14 && cmm > 1e-14 {
                let (g1, g2) = residuals(k, &rho, c11, c1m);
                if norm(g1, g2) < res {
                    q11 = c11;
                    q1m = c1m;
                    f1 = g1;
                    f2 = g2;
                    res = norm(f1, f2);
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res > 1e-10 {
        return Err(Error::Numerical(format!(
            "overlap solver did not converge at rho11={rho11}: residual {res:.3e}, q11={q11:.6}, q1m={q1m:.6}"
        )));
    }
    let qmm = 1.0 - q11 - 2.0 * q1m;
    Ok(OverlapMeasure {
        rho11,
        rho,
        qmat: [q11, q1m, q1m, qmm],
        residual: res,
    })
}

/// Entropy of the four-point overlap distribution.
pub fn overlap_entropy(rho: &[f64; 4]) -> f64 {
    -rho.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Evaluates f(rho) = ln s + k KL(rho || q) and
/// g(rho11) = H(rho) + (2d/k) ln(1 - 2^(1-k) + rho11^k) at one overlap.
pub fn overlap_exponents(k: u32, d: u32, rho11: f64) -> Result<OverlapPoint> {
    let measure = overlap_solve(k, rho11)?;
    let s = normalizer(k as i32, measure.qmat[0], measure.qmat[1]);
    if s <= 0.0 {
        return Err(Error::Numerical(format!(
            "pair normalizer non-positive at rho11={rho11}"
        )));
    }
    let kl = kl_divergence(&measure.rho, &measure.qmat)?;
    let f_val = s.ln() + k as f64 * kl;
    let entropy = overlap_entropy(&measure.rho);
    let g_val = entropy
        + 2.0 * d as f64 / k as f64
            * (1.0 - 2f64.powi(1 - k as i32) + rho11.powi(k as i32)).ln();
    Ok(OverlapPoint {
        measure,
        f_val,
        g_val,
        entropy,
    })
}

/// Clause-pair pattern law nu_bar(sigma, tau) = prod_i q_{sigma_i, tau_i} / s.
///
/// `sigma` and `tau` are +-1 truth-value patterns of length k, neither
/// all-false.
pub fn bar_nu(k: u32, rho11: f64, sigma: &[i8], tau: &[i8]) -> Result<f64> {
    let measure = overlap_solve(k, rho11)?;
    bar_nu_with(&measure, k, sigma, tau)
}

/// Same as `bar_nu`, reusing an already-solved measure.
pub fn bar_nu_with(measure: &OverlapMeasure, k: u32, sigma: &[i8], tau: &[i8]) -> Result<f64> {
    if sigma.len() != k as usize || tau.len() != k as usize {
        return Err(Error::Domain("pattern length must equal k".into()));
    }
    for pat in [sigma, tau] {
        if pat.iter().all(|&s| s == -1) {
            return Err(Error::Domain("all-false patterns are excluded".into()));
        }
        if pat.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("pattern entries must be +-1".into()));
        }
    }
    let s = normalizer(k as i32, measure.qmat[0], measure.qmat[1]);
    let mut prod = 1.0;
    for i in 0..k as usize {
        let idx = match (sigma[i], tau[i]) {
            (1, 1) => 0,
            (1, -1) => 1,
            (-1, 1) => 2,
            _ => 3,
        };
        prod *= measure.qmat[idx];
    }
    Ok(prod / s)
}

/// The two fixed points of x = exp(-2d(1+x) / ((2^k - 2)(1+x)^k + 1)) in
/// (0, 1/2 - 2^(-0.49k)), located by bisection between sign changes of a
/// 512-point logarithmic grid.
///
/// The smaller root scales like 2^-k and the larger like ln k / k, hence the
/// logarithmic spacing.
pub fn g_stationary_points(k: u32, d: u32) -> Result<(f64, f64)> {
    if k < 8 {
        return Err(Error::Domain(format!(
            "stationary points are only well separated for k >= 8, got {k}"
        )));
    }
    let info = threshold_info(k)?;
    if !info.admits(d) {
        return Err(Error::Domain(format!(
            "degree d={d} exceeds the admissible cap for k={k}"
        )));
    }
    let phi = |x: f64| {
        let denom = (2f64.powi(k as i32) - 2.0) * (1.0 + x).powi(k as i32) + 1.0;
        x - (-2.0 * d as f64 * (1.0 + x) / denom).exp()
    };
    let lo = 2f64.powi(-(k as i32) - 3);
    let hi = 0.5 - 2f64.powf(-0.49 * k as f64);
    if hi <= lo {
        return Err(Error::Domain(format!("empty search interval at k={k}")));
    }
    const GRID: usize = 512;
    let ratio = (hi / lo).powf(1.0 / (GRID - 1) as f64);
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = phi(lo);
    for i in 1..GRID {
        let x = lo * ratio.powi(i as i32);
        let f = phi(x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev.signum() != f.signum() {
            let (mut a, mut b) = (x_prev, x);
            let mut fa = f_prev;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = phi(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa.signum() != fm.signum() {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x_prev = x;
        f_prev = f;
    }
    if roots.len() != 2 {
        return Err(Error::Numerical(format!(
            "expected to bracket exactly two fixed points at k={k}, d={d}; found {}",
            roots.len()
        )));
    }
    Ok((roots[0], roots[1]))
}
