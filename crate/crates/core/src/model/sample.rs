//! Samplers: the uniform bijection model, the planted pair, and the
//! permutation-coupled pattern arrays.

use rand_chacha::rand_core::RngCore;

use crate::analytic::bar_mu_by_code;
use crate::error::{Error, Result};
use crate::model::formula::{Assignment, Formula, Slot};
use crate::model::rng::{shuffle, uniform_f64, uniform_index};
use crate::params::ModelParams;

/// Draws a formula uniformly over all (2dn)! slot bijections: the canonical
/// clone sequence is shuffled once and written into the slots in order.
pub fn sample_formula(params: &ModelParams, rng: &mut impl RngCore) -> Formula {
    let mut clones: Vec<Slot> = Vec::with_capacity(params.slot_count());
    for var in 0..params.n as u32 {
        for copy in 0..params.d as u32 {
            clones.push(Slot { var, copy, sign: 1 });
            clones.push(Slot {
                var,
                copy,
                sign: -1,
            });
        }
    }
    shuffle(rng, &mut clones);
    Formula::from_slots(*params, clones).expect("shuffled clone sequence is a bijection")
}

/// Default retry budget for the global balance rejection in the planted
/// sampler; the expected number of retries grows like sqrt(n).
pub const PLANTED_RETRY_CAP: usize = 1_000_000;

/// Draws a planted pair (formula, assignment).
///
/// A uniform assignment is fixed first. Per-clause truth-value patterns are
/// drawn from the tilted satisfied-clause law, and the whole array is
/// redrawn until the global literal balance holds (true slots = dn); the
/// true slots are then matched uniformly to the clones rendered true by the
/// assignment, false slots to the false clones. The output assignment
/// satisfies the output formula by construction.
pub fn sample_planted(
    params: &ModelParams,
    rng: &mut impl RngCore,
) -> Result<(Formula, Assignment)> {
    let (k, m, n, d) = (params.k, params.m, params.n, params.d);
    let q = crate::analytic::solve_q(k as u32)?;
    if q <= 0.0 {
        return Err(Error::Domain(format!(
            "planted sampler needs q > 0; k={k} is degenerate"
        )));
    }
    let dn = d * n;
    let assignment = Assignment::new((0..n).map(|_| rng.next_u64() & 1 == 1).collect());

    // Truth-value array chi: per-clause tilted draws, globally rejected
    // until the number of true slots is exactly dn.
    let mut chi = vec![false; m * k];
    let mut tries = 0usize;
    loop {
        tries += 1;
        if tries > PLANTED_RETRY_CAP {
            return Err(Error::Sampling(format!(
                "balance rejection exceeded {PLANTED_RETRY_CAP} retries"
            )));
        }
        let mut true_total = 0usize;
        for clause in 0..m {
            // Redraw the clause until it has at least one true literal.
            loop {
                let mut any = false;
                for j in 0..k {
                    let t = uniform_f64(rng) < q;
                    chi[clause * k + j] = t;
                    any |= t;
                }
                if any {
                    break;
                }
            }
            true_total += chi[clause * k..clause * k + k].iter().filter(|&&t| t).count();
        }
        if true_total == dn {
            break;
        }
    }

    // Pools of literal clones rendered true / false by the assignment.
    let mut true_pool: Vec<Slot> = Vec::with_capacity(dn);
    let mut false_pool: Vec<Slot> = Vec::with_capacity(dn);
    for var in 0..n as u32 {
        let sign_true: i8 = if assignment.get(var as usize) { 1 } else { -1 };
        for copy in 0..d as u32 {
            true_pool.push(Slot {
                var,
                copy,
                sign: sign_true,
            });
            false_pool.push(Slot {
                var,
                copy,
                sign: -sign_true,
            });
        }
    }
    shuffle(rng, &mut true_pool);
    shuffle(rng, &mut false_pool);

    let mut slots = Vec::with_capacity(m * k);
    let (mut ti, mut fi) = (0usize, 0usize);
    for &t in &chi {
        if t {
            slots.push(true_pool[ti]);
            ti += 1;
        } else {
            slots.push(false_pool[fi]);
            fi += 1;
        }
    }
    let formula = Formula::from_slots(*params, slots)?;
    Ok((formula, assignment))
}

/// Integer clause-pattern counts summing to m; index = pattern code - 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCounts {
    pub k: u32,
    pub counts: Vec<u64>,
}

impl PatternCounts {
    pub fn m(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, code: u32) -> u64 {
        self.counts[code as usize - 1]
    }

    /// Signed literal balance sum_sigma count(sigma) (2 w(sigma) - k).
    pub fn balance(&self) -> i64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as i64 * (2 * (i as u32 + 1).count_ones() as i64 - self.k as i64))
            .sum()
    }

    /// Builds counts from real-valued probabilities; errors unless every
    /// m*mu(sigma) is an integer (up to rounding noise).
    pub fn from_distribution(k: u32, m: u64, probs: &[f64]) -> Result<Self> {
        if probs.len() != (1usize << k) - 1 {
            return Err(Error::Domain(format!(
                "expected {} pattern probabilities, got {}",
                (1usize << k) - 1,
                probs.len()
            )));
        }
        let mut counts = Vec::with_capacity(probs.len());
        for (i, &p) in probs.iter().enumerate() {
            let scaled = p * m as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-6 {
                return Err(Error::Domain(format!(
                    "m*mu is not integral for pattern code {} ({scaled})",
                    i + 1
                )));
            }
            counts.push(rounded as u64);
        }
        let total: u64 = counts.iter().sum();
        if total != m {
            return Err(Error::Domain(format!(
                "pattern counts sum to {total}, expected m={m}"
            )));
        }
        Ok(PatternCounts { k, counts })
    }
}

/// Rounds the tilted clause law to integer counts for m clauses: largest
/// remainder first, then single-unit moves between patterns differing in one
/// position to restore the exact literal balance.
///
/// Requires k*m even: the signed balance always has the parity of k*m, and
/// in the regular model k*m = 2dn.
pub fn round_bar_mu(k: u32, m: u64) -> Result<PatternCounts> {
    if !(k as u64 * m).is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "balance requires k*m even, got k={k}, m={m}"
        )));
    }
    if k > 20 {
        return Err(Error::Resource(format!(
            "pattern counts need 2^k buckets; k = {k} exceeds 20"
        )));
    }
    let size = (1usize << k) - 1;
    let mut exact = Vec::with_capacity(size);
    for code in 1..=size as u32 {
        exact.push(bar_mu_by_code(k, code)? * m as f64);
    }
    let mut counts: Vec<u64> = exact.iter().map(|&x| x.floor() as u64).collect();
    let mut deficit = m - counts.iter().sum::<u64>();
    let mut by_frac: Vec<usize> = (0..size).collect();
    by_frac.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in by_frac.iter().cycle() {
        if deficit == 0 {
            break;
        }
        counts[i] += 1;
        deficit -= 1;
    }
    let mut result = PatternCounts { k, counts };
    // Balance repair: each move shifts the signed balance by exactly 2
    // toward zero, so |balance|/2 moves suffice.
    let budget = result.balance().unsigned_abs() / 2 + 1;
    let mut moves = 0u64;
    while result.balance() != 0 {
        moves += 1;
        if moves > budget {
            return Err(Error::Numerical(
                "balance repair exceeded its move budget".into(),
            ));
        }
        let need_down = result.balance() > 0;
        // Move one clause from the fullest eligible bucket to the partner
        // pattern with one true literal fewer (or more).
        let mut best: Option<(usize, usize)> = None;
        for code in 1..=result.counts.len() as u32 {
            if result.count(code) == 0 {
                continue;
            }
            for j in 0..k {
                let partner = code ^ (1 << j);
                let valid = partner >= 1 && partner <= result.counts.len() as u32;
                if !valid {
                    continue;
                }
                let lowers = (code >> j) & 1 == 1;
                if lowers != need_down {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((src, _)) => result.counts[code as usize - 1] > result.counts[src],
                };
                if better {
                    best = Some((code as usize - 1, partner as usize - 1));
                }
            }
        }
        let (src, dst) = best.ok_or_else(|| {
            Error::Numerical("balance repair found no eligible pattern move".into())
        })?;
        result.counts[src] -= 1;
        result.counts[dst] += 1;
    }
    Ok(result)
}

/// Two m x k +-1 arrays whose rows are independent uniform permutations of a
/// common pattern template, so both row histograms equal the template law.
#[derive(Clone, Debug)]
pub struct PairedPatternArray {
    pub k: u32,
    /// Row pattern codes of the two coordinates.
    pub first: Vec<u32>,
    pub second: Vec<u32>,
}

impl PairedPatternArray {
    pub fn m(&self) -> usize {
        self.first.len()
    }

    /// Entry (i, j) of a coordinate as +-1.
    pub fn entry(&self, coord: usize, row: usize, col: usize) -> i8 {
        let code = if coord == 0 {
            self.first[row]
        } else {
            self.second[row]
        };
        if (code >> col) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Histogram of row pattern codes for one coordinate.
    pub fn histogram(&self, coord: usize) -> Vec<u64> {
        let rows = if coord == 0 { &self.first } else { &self.second };
        let mut h = vec![0u64; (1usize << self.k) - 1];
        for &code in rows {
            h[code as usize - 1] += 1;
        }
        h
    }
}

/// Applies two independent uniform row permutations to the template array
/// realizing `counts`.
pub fn sample_paired_patterns(
    counts: &PatternCounts,
    rng: &mut impl RngCore,
) -> PairedPatternArray {
    let mut template: Vec<u32> = Vec::with_capacity(counts.m() as usize);
    for (i, &c) in counts.counts.iter().enumerate() {
        for _ in 0..c {
            template.push(i as u32 + 1);
        }
    }
    let m = template.len();
    let mut perm1: Vec<usize> = (0..m).collect();
    let mut perm2: Vec<usize> = (0..m).collect();
    shuffle(rng, &mut perm1);
    shuffle(rng, &mut perm2);
    PairedPatternArray {
        k: counts.k,
        first: perm1.iter().map(|&i| template[i]).collect(),
        second: perm2.iter().map(|&i| template[i]).collect(),
    }
}

/// Draws a uniform assignment on n variables.
pub fn sample_assignment(n: usize, rng: &mut impl RngCore) -> Assignment {
    Assignment::new((0..n).map(|_| rng.next_u64() & 1 == 1).collect())
}

/// Convenience: uniform index into the clause range (used by test harnesses).
pub fn sample_clause_index(m: usize, rng: &mut impl RngCore) -> usize {
    uniform_index(rng, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::evaluate;
    use crate::model::rng::replicate_stream;

    #[test]
    fn sampled_formula_is_valid() {
        let params = ModelParams::new(9, 2, 3).unwrap();
        for r in 0..50 {
            let mut rng = replicate_stream(11, r);
            let f = sample_formula(&params, &mut rng);
            assert!(f.validate().is_empty());
        }
    }

    #[test]
    fn degree_invariant_small() {
        let params = ModelParams::new(3, 2, 3).unwrap();
        let mut rng = replicate_stream(5, 0);
        let f = sample_formula(&params, &mut rng);
        for v in 0..3u32 {
            let pos = f.slots().iter().filter(|s| s.var == v && s.sign == 1).count();
            let neg = f.slots().iter().filter(|s| s.var == v && s.sign == -1).count();
            assert_eq!((pos, neg), (2, 2));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let params = ModelParams::new(12, 2, 3).unwrap();
        let a = sample_formula(&params, &mut replicate_stream(42, 7));
        let b = sample_formula(&params, &mut replicate_stream(42, 7));
        let c = sample_formula(&params, &mut replicate_stream(42, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn slot_marginal_is_uniform() {
        // Every clone lands in slot 0 with frequency 1/(2dn).
        let params = ModelParams::new(6, 1, 3).unwrap();
        let reps = 100_000u64;
        let mut hits = [0u64; 12];
        for r in 0..reps {
            let mut rng = replicate_stream(99, r);
            let f = sample_formula(&params, &mut rng);
            let s = f.slots()[0];
            hits[crate::model::formula::clone_id(1, s.var, s.copy, s.sign)] += 1;
        }
        let p = 1.0 / 12.0;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        for (i, &h) in hits.iter().enumerate() {
            let freq = h as f64 / reps as f64;
            assert!(
                (freq - p).abs() <= 3.0 * se,
                "clone {i}: freq {freq} vs {p} (3se = {})",
                3.0 * se
            );
        }
    }

    #[test]
    fn planted_assignment_satisfies() {
        let params = ModelParams::new(15, 2, 3).unwrap();
        for r in 0..40 {
            let mut rng = replicate_stream(21, r);
            let (f, a) = sample_planted(&params, &mut rng).unwrap();
            assert!(f.validate().is_empty());
            let (sat, codes) = evaluate(&f, &a);
            assert!(sat, "replicate {r}");
            assert!(codes.iter().all(|&c| c != 0));
            // True slots are exactly dn.
            let true_slots = f
                .slots()
                .iter()
                .filter(|s| s.sign == a.value(s.var as usize))
                .count();
            assert_eq!(true_slots, params.d * params.n);
        }
    }

    #[test]
    fn planted_clause_patterns_match_tilt() {
        // 10^5 clauses of planted k=3 formulas follow the tilted law.
        let params = ModelParams::new(120, 2, 3).unwrap(); // m = 160
        let reps = 625u64; // 625 * 160 = 100k clauses
        let mut counts = [0u64; 7];
        for r in 0..reps {
            let mut rng = replicate_stream(31, r);
            let (f, a) = sample_planted(&params, &mut rng).unwrap();
            let (_, codes) = evaluate(&f, &a);
            for code in codes {
                counts[code as usize - 1] += 1;
            }
        }
        let total = (reps as usize * params.m) as f64;
        for code in 1u32..8 {
            let expect = bar_mu_by_code(3, code).unwrap();
            let freq = counts[code as usize - 1] as f64 / total;
            let se = (expect * (1.0 - expect) / total).sqrt();
            assert!(
                (freq - expect).abs() <= 3.0 * se,
                "code {code}: {freq} vs {expect}"
            );
        }
    }

    #[test]
    fn rounded_tilt_is_balanced() {
        assert!(round_bar_mu(3, 997).is_err(), "odd k*m has no balanced rounding");
        for (k, m) in [(3u32, 2000u64), (3, 998), (4, 500), (5, 334)] {
            let counts = round_bar_mu(k, m).unwrap();
            assert_eq!(counts.m(), m, "k={k} m={m}");
            assert_eq!(counts.balance(), 0, "k={k} m={m}");
            // Stays close to the real-valued law.
            for code in 1..=(1u32 << k) - 1 {
                let exact = bar_mu_by_code(k, code).unwrap() * m as f64;
                assert!(
                    (counts.count(code) as f64 - exact).abs() <= (1 << k) as f64,
                    "k={k} code {code}"
                );
            }
        }
    }

    #[test]
    fn paired_histograms_match_template() {
        let counts = round_bar_mu(3, 200).unwrap();
        let mut rng = replicate_stream(77, 0);
        let arr = sample_paired_patterns(&counts, &mut rng);
        assert_eq!(arr.histogram(0), counts.counts);
        assert_eq!(arr.histogram(1), counts.counts);
    }

    #[test]
    fn single_row_array_is_deterministic() {
        // counts index i holds pattern code i+1.
        let counts = PatternCounts {
            k: 3,
            counts: vec![0, 0, 0, 1, 0, 0, 0],
        };
        let mut rng = replicate_stream(3, 9);
        let arr = sample_paired_patterns(&counts, &mut rng);
        assert_eq!(arr.first, vec![4]);
        assert_eq!(arr.second, vec![4]);
    }

    #[test]
    fn distribution_validation() {
        assert!(PatternCounts::from_distribution(3, 8, &[0.5; 7]).is_err());
        let probs = [0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0];
        let c = PatternCounts::from_distribution(3, 8, &probs).unwrap();
        assert_eq!(c.counts, vec![2, 2, 2, 2, 0, 0, 0]);
    }
}
