//! Exact desk-scale counting: clause evaluation, Gray-code enumeration of
//! all assignments, the pattern-histogram decomposition of Z and the
//! overlap census.

use std::collections::HashMap;

use num_bigint::BigUint;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::analytic::bar_mu_by_code;
use crate::error::{Error, Result};
use crate::model::{Assignment, Formula, PairedPatternArray};

/// Evaluates one assignment: per-clause pattern codes (bit j set iff literal
/// j is true) and overall satisfaction (every code nonzero).
///
/// Pattern codes are 32-bit, so clause width is capped at 31.
pub fn evaluate(formula: &Formula, assignment: &Assignment) -> (bool, Vec<u32>) {
    let p = formula.params();
    assert!(p.k <= 31, "pattern codes cap clause width at 31, got {}", p.k);
    debug_assert_eq!(assignment.len(), p.n);
    let codes: Vec<u32> = (0..p.m)
        .map(|clause| {
            let mut code = 0u32;
            for pos in 0..p.k {
                let s = formula.slot(clause, pos);
                if s.sign == assignment.value(s.var as usize) {
                    code |= 1 << pos;
                }
            }
            code
        })
        .collect();
    (codes.iter().all(|&c| c != 0), codes)
}

/// Sorted sparse histogram key: (pattern code, clause count) pairs.
pub type MuKey = Vec<(u32, u32)>;

/// Satisfying-assignment counts split by the empirical clause-pattern
/// distribution.
#[derive(Clone, Debug, Default)]
pub struct PatternHistogram {
    pub m: usize,
    pub k: usize,
    pub entries: HashMap<MuKey, u64>,
}

impl PatternHistogram {
    /// Total count across all keys; equals Z.
    pub fn total(&self) -> BigUint {
        self.entries.values().map(|&v| BigUint::from(v)).sum()
    }

    /// Signed literal balance of a key; zero for every reachable key.
    pub fn key_balance(key: &MuKey, k: usize) -> i64 {
        key.iter()
            .map(|&(code, count)| {
                (2 * code.count_ones() as i64 - k as i64) * count as i64
            })
            .sum()
    }

    /// Euclidean distance between the key's empirical distribution and the
    /// tilted clause law.
    pub fn distance_to_tilt(&self, key: &MuKey) -> Result<f64> {
        if self.k > 16 {
            return Err(Error::Resource(format!(
                "tilt distance needs 2^k bookkeeping; k={} exceeds 16",
                self.k
            )));
        }
        let m = self.m as f64;
        let mut sq = 0.0;
        let mut idx = 0usize;
        for code in 1..(1u32 << self.k) {
            let count = if idx < key.len() && key[idx].0 == code {
                let c = key[idx].1;
                idx += 1;
                c
            } else {
                0
            };
            let diff = count as f64 / m - bar_mu_by_code(self.k as u32, code)?;
            sq += diff * diff;
        }
        Ok(sq.sqrt())
    }

    /// Keys within the window ||mu - mu_bar||_2 <= omega / sqrt(m).
    pub fn keys_in_window(&self, omega: f64) -> Result<Vec<(&MuKey, u64)>> {
        let radius = omega / (self.m as f64).sqrt();
        let mut hits = Vec::new();
        for (key, &count) in &self.entries {
            if self.distance_to_tilt(key)? <= radius {
                hits.push((key, count));
            }
        }
        Ok(hits)
    }
}

/// Options for `count_all`; the defaults match the desk-scale caps.
#[derive(Clone, Copy, Debug)]
pub struct CountOptions {
    pub histogram: bool,
    /// Hard cap on variable count for the 2^n enumeration.
    pub max_vars: usize,
    /// Cap on materialized satisfying assignments (overlap census only).
    pub max_solutions: usize,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            histogram: false,
            max_vars: 28,
            max_solutions: 1_000_000,
        }
    }
}

/// Result of an exact enumeration.
#[derive(Clone, Debug)]
pub struct CountResult {
    pub z: BigUint,
    pub histogram: Option<PatternHistogram>,
}

impl CountResult {
    /// Z as u64 when it fits (it always does under the default caps).
    pub fn z_u64(&self) -> Option<u64> {
        let digits = self.z.to_u64_digits();
        match digits.len() {
            0 => Some(0),
            1 => Some(digits[0]),
            _ => None,
        }
    }
}

struct GrayState {
    /// True-literal count per clause.
    true_lits: Vec<u8>,
    /// Clauses with no true literal.
    unsat: usize,
    /// Pattern code per clause (histogram mode only).
    codes: Vec<u32>,
    /// Per-variable slot lists: (clause, position bit, sign).
    var_slots: Vec<Vec<(u32, u32, i8)>>,
}

impl GrayState {
    fn init(formula: &Formula, with_codes: bool) -> Self {
        let p = formula.params();
        let mut true_lits = vec![0u8; p.m];
        let mut codes = vec![0u32; if with_codes { p.m } else { 0 }];
        for clause in 0..p.m {
            for pos in 0..p.k {
                let s = formula.slot(clause, pos);
                // All-false start: a literal is true iff its sign is negative.
                if s.sign == -1 {
                    true_lits[clause] += 1;
                    if with_codes {
                        codes[clause] |= 1 << pos;
                    }
                }
            }
        }
        let unsat = true_lits.iter().filter(|&&c| c == 0).count();
        let mut var_slots = vec![Vec::with_capacity(2 * p.d); p.n];
        for (idx, s) in formula.slots().iter().enumerate() {
            var_slots[s.var as usize].push(((idx / p.k) as u32, (idx % p.k) as u32, s.sign));
        }
        GrayState {
            true_lits,
            unsat,
            codes,
            var_slots,
        }
    }

    /// Flips variable `var` to truth value `now_true`, updating clause
    /// counters in O(d).
    #[inline]
    fn flip(&mut self, var: usize, now_true: bool, with_codes: bool) {
        for &(clause, pos, sign) in &self.var_slots[var] {
            let clause = clause as usize;
            let lit_true = (sign == 1) == now_true;
            if lit_true {
                self.true_lits[clause] += 1;
                if self.true_lits[clause] == 1 {
                    self.unsat -= 1;
                }
            } else {
                self.true_lits[clause] -= 1;
                if self.true_lits[clause] == 0 {
                    self.unsat += 1;
                }
            }
            if with_codes {
                self.codes[clause] ^= 1 << pos;
            }
        }
    }
}

fn gray_enumerate(
    formula: &Formula,
    with_codes: bool,
    mut visit: impl FnMut(u64, bool, &[u32]),
) {
    let n = formula.params().n;
    let mut state = GrayState::init(formula, with_codes);
    let mut mask = 0u64;
    visit(mask, state.unsat == 0, &state.codes);
    for step in 1u64..1 << n {
        let var = step.trailing_zeros() as usize;
        mask ^= 1 << var;
        state.flip(var, (mask >> var) & 1 == 1, with_codes);
        visit(mask, state.unsat == 0, &state.codes);
    }
}

/// Exact Z over all 2^n assignments by Gray-code enumeration: each step
/// flips one variable and touches only its 2d slots.
pub fn count_all(formula: &Formula, options: &CountOptions) -> Result<CountResult> {
    let p = formula.params();
    if p.n > options.max_vars {
        return Err(Error::Resource(format!(
            "exact enumeration covers n <= {} variables, got n = {}; use Monte Carlo mode",
            options.max_vars, p.n
        )));
    }
    if p.k > 31 {
        return Err(Error::Domain(format!(
            "pattern codes cap clause width at 31, got {}",
            p.k
        )));
    }
    if options.histogram && p.k > 20 {
        return Err(Error::Resource(format!(
            "histogram scratch is 2^k cells; k = {} exceeds 20",
            p.k
        )));
    }
    let mut z = 0u64;
    if !options.histogram {
        gray_enumerate(formula, false, |_, sat, _| {
            if sat {
                z += 1;
            }
        });
        return Ok(CountResult {
            z: BigUint::from(z),
            histogram: None,
        });
    }
    let mut hist = PatternHistogram {
        m: p.m,
        k: p.k,
        entries: HashMap::new(),
    };
    let mut scratch = vec![0u32; 1 << p.k];
    let mut touched: Vec<u32> = Vec::with_capacity(p.m);
    gray_enumerate(formula, true, |_, sat, codes| {
        if !sat {
            return;
        }
        z += 1;
        for &code in codes {
            if scratch[code as usize] == 0 {
                touched.push(code);
            }
            scratch[code as usize] += 1;
        }
        touched.sort_unstable();
        let key: MuKey = touched.iter().map(|&c| (c, scratch[c as usize])).collect();
        for &c in &touched {
            scratch[c as usize] = 0;
        }
        touched.clear();
        *hist.entries.entry(key).or_insert(0) += 1;
    });
    Ok(CountResult {
        z: BigUint::from(z),
        histogram: Some(hist),
    })
}

/// All satisfying assignments as bitmasks, capped at
/// `options.max_solutions`.
pub fn enumerate_solutions(formula: &Formula, options: &CountOptions) -> Result<Vec<u64>> {
    let p = formula.params();
    if p.n > options.max_vars {
        return Err(Error::Resource(format!(
            "exact enumeration covers n <= {} variables, got n = {}",
            options.max_vars, p.n
        )));
    }
    if p.k > 31 {
        return Err(Error::Domain(format!(
            "pattern codes cap clause width at 31, got {}",
            p.k
        )));
    }
    let mut sols = Vec::new();
    let mut overflow = false;
    gray_enumerate(formula, false, |mask, sat, _| {
        if sat {
            if sols.len() < options.max_solutions {
                sols.push(mask);
            } else {
                overflow = true;
            }
        }
    });
    if overflow {
        return Err(Error::Resource(format!(
            "more than {} satisfying assignments; overlap census would be quadratic in that",
            options.max_solutions
        )));
    }
    Ok(sols)
}

/// Ordered-pair overlap counts: entry alpha holds the number of ordered
/// pairs of satisfying assignments agreeing on exactly alpha variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapCensus {
    pub n: usize,
    pub counts: Vec<u64>,
}

impl OverlapCensus {
    pub fn total(&self) -> BigUint {
        self.counts.iter().map(|&v| BigUint::from(v)).sum()
    }
}

/// Enumerates satisfying assignments once, then classifies all ordered pairs
/// by agreement count.
pub fn overlap_census(formula: &Formula, options: &CountOptions) -> Result<OverlapCensus> {
    let n = formula.params().n;
    let sols = enumerate_solutions(formula, options)?;
    let mut counts = vec![0u64; n + 1];
    counts[n] += sols.len() as u64; // diagonal pairs
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let alpha = n - (sols[i] ^ sols[j]).count_ones() as usize;
            counts[alpha] += 2; // ordered pairs
        }
    }
    Ok(OverlapCensus { n, counts })
}

/// Number of positions where both coordinates of the paired array are +1.
pub fn a_statistic(paired: &PairedPatternArray) -> u64 {
    paired
        .first
        .iter()
        .zip(&paired.second)
        .map(|(&a, &b)| (a & b).count_ones() as u64)
        .sum()
}

/// JSON view of a counting run.
pub struct CountReport<'a> {
    pub result: &'a CountResult,
    pub overlap: Option<&'a OverlapCensus>,
    /// Restrict histogram keys to the tilt window of this radius, if set.
    pub omega: Option<f64>,
}

impl Serialize for CountReport<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Hist<'a>(&'a PatternHistogram, Option<f64>);
        impl Serialize for Hist<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                #[derive(Serialize)]
                struct Entry<'a> {
                    mu: &'a MuKey,
                    z_mu: String,
                }
                let mut keys: Vec<&MuKey> = match self.1 {
                    Some(omega) => self
                        .0
                        .keys_in_window(omega)
                        .map_err(serde::ser::Error::custom)?
                        .into_iter()
                        .map(|(k, _)| k)
                        .collect(),
                    None => self.0.entries.keys().collect(),
                };
                keys.sort();
                let mut seq = serializer.serialize_seq(Some(keys.len()))?;
                for key in keys {
                    seq.serialize_element(&Entry {
                        mu: key,
                        z_mu: self.0.entries[key].to_string(),
                    })?;
                }
                seq.end()
            }
        }
        let fields = 1
            + usize::from(self.result.histogram.is_some())
            + usize::from(self.overlap.is_some());
        let mut st = serializer.serialize_struct("CountReport", fields)?;
        st.serialize_field("Z", &self.result.z.to_string())?;
        if let Some(h) = &self.result.histogram {
            st.serialize_field("histogram", &Hist(h, self.omega))?;
        }
        if let Some(o) = self.overlap {
            st.serialize_field("overlap", &o.counts)?;
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng::replicate_stream;
    use crate::model::{sample_assignment, sample_formula, Slot};
    use crate::params::ModelParams;

    /// Each clause holds x_i and ~x_i, so every assignment satisfies it.
    fn tautological(n: usize) -> Formula {
        let params = ModelParams::new(n, 1, 2).unwrap();
        let slots = (0..n as u32)
            .flat_map(|v| {
                [
                    Slot {
                        var: v,
                        copy: 0,
                        sign: 1,
                    },
                    Slot {
                        var: v,
                        copy: 0,
                        sign: -1,
                    },
                ]
            })
            .collect();
        Formula::from_slots(params, slots).unwrap()
    }

    /// XOR and XNOR side by side: no assignment satisfies all four clauses.
    fn unsatisfiable() -> Formula {
        let params = ModelParams::new(2, 2, 2).unwrap();
        let s = |var, copy, sign| Slot { var, copy, sign };
        Formula::from_slots(
            params,
            vec![
                s(0, 0, 1),
                s(1, 0, 1),
                s(0, 0, -1),
                s(1, 0, -1),
                s(0, 1, 1),
                s(1, 1, -1),
                s(0, 1, -1),
                s(1, 1, 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_codes() {
        let f = tautological(3);
        let all_true = Assignment::from_mask(0b111, 3);
        let (sat, codes) = evaluate(&f, &all_true);
        assert!(sat);
        // Positive literal true, negative false: code 0b01 everywhere.
        assert_eq!(codes, vec![1, 1, 1]);
        // An all-negative clause under the all-true assignment has code 0.
        let u = unsatisfiable();
        let (sat, codes) = evaluate(&u, &Assignment::from_mask(0b11, 2));
        assert!(!sat);
        assert_eq!(codes[1], 0);
    }

    #[test]
    fn unsat_instance_counts_and_census() {
        let f = unsatisfiable();
        let r = count_all(&f, &CountOptions::default()).unwrap();
        assert_eq!(r.z_u64(), Some(0));
        let census = overlap_census(&f, &CountOptions::default()).unwrap();
        assert!(census.counts.iter().all(|&c| c == 0));
        assert_eq!(census.total(), BigUint::from(0u32));
    }

    #[test]
    fn tautological_counts_everything() {
        let f = tautological(5);
        let r = count_all(&f, &CountOptions::default()).unwrap();
        assert_eq!(r.z, BigUint::from(32u32));
    }

    #[test]
    fn gray_matches_naive_oracle() {
        // Independent oracle: evaluate() on every assignment.
        let mut checked = 0;
        for rep in 0..100u64 {
            let n = 6 + 3 * (rep % 3) as usize; // 6, 9, 12
            let params = ModelParams::new(n, 2, 3).unwrap();
            let f = sample_formula(&params, &mut replicate_stream(1234, rep));
            let mut naive = 0u64;
            let mut naive_hist: HashMap<MuKey, u64> = HashMap::new();
            for mask in 0u64..1 << n {
                let (sat, codes) = evaluate(&f, &Assignment::from_mask(mask, n));
                if sat {
                    naive += 1;
                    let mut sorted = codes.clone();
                    sorted.sort_unstable();
                    let mut key: MuKey = Vec::new();
                    for &c in &sorted {
                        match key.last_mut() {
                            Some(e) if e.0 == c => e.1 += 1,
                            _ => key.push((c, 1)),
                        }
                    }
                    *naive_hist.entry(key).or_insert(0) += 1;
                }
            }
            let r = count_all(
                &f,
                &CountOptions {
                    histogram: true,
                    ..CountOptions::default()
                },
            )
            .unwrap();
            assert_eq!(r.z, BigUint::from(naive), "rep {rep}");
            assert_eq!(r.histogram.unwrap().entries, naive_hist, "rep {rep}");
            checked += 1;
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn histogram_invariants() {
        let params = ModelParams::new(9, 2, 3).unwrap();
        let f = sample_formula(&params, &mut replicate_stream(5, 2));
        let r = count_all(
            &f,
            &CountOptions {
                histogram: true,
                ..CountOptions::default()
            },
        )
        .unwrap();
        let h = r.histogram.unwrap();
        assert_eq!(h.total(), r.z);
        for key in h.entries.keys() {
            assert_eq!(PatternHistogram::key_balance(key, 3), 0);
            let total: u32 = key.iter().map(|&(_, c)| c).sum();
            assert_eq!(total as usize, params.m);
        }
    }

    #[test]
    fn census_identities() {
        let params = ModelParams::new(9, 1, 3).unwrap();
        for rep in 0..10 {
            let f = sample_formula(&params, &mut replicate_stream(8, rep));
            let opts = CountOptions::default();
            let z = count_all(&f, &opts).unwrap().z;
            let census = overlap_census(&f, &opts).unwrap();
            assert_eq!(census.total(), &z * &z);
            assert_eq!(BigUint::from(census.counts[9]), z);
            for alpha in 0..9 {
                assert_eq!(census.counts[alpha] % 2, 0, "off-diagonal pairs pair up");
            }
        }
    }

    #[test]
    fn complementary_solutions_land_at_zero_overlap() {
        let f = tautological(4);
        let census = overlap_census(&f, &CountOptions::default()).unwrap();
        assert!(census.counts[0] >= 2);
        assert_eq!(census.total(), BigUint::from(256u32));
    }

    #[test]
    fn caps_are_enforced() {
        let params = ModelParams::new(30, 2, 3).unwrap();
        let f = sample_formula(&params, &mut replicate_stream(1, 1));
        let err = count_all(
            &f,
            &CountOptions {
                max_vars: 28,
                ..CountOptions::default()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("Monte Carlo"));
        let small = tautological(8); // Z = 256
        let err = overlap_census(
            &small,
            &CountOptions {
                max_solutions: 100,
                ..CountOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn a_statistic_extremes() {
        let all_plus = PairedPatternArray {
            k: 3,
            first: vec![7; 10],
            second: vec![7; 10],
        };
        assert_eq!(a_statistic(&all_plus), 30);
        let second_neg = PairedPatternArray {
            k: 3,
            first: vec![7; 10],
            second: vec![1; 10],
        };
        // Only position 0 overlaps.
        assert_eq!(a_statistic(&second_neg), 10);
    }

    #[test]
    fn literal_balance_identity() {
        // Sum over slots of sign * tau(var) vanishes for every assignment.
        let params = ModelParams::new(12, 2, 3).unwrap();
        for rep in 0..200u64 {
            let mut rng = replicate_stream(17, rep);
            let f = sample_formula(&params, &mut rng);
            let a = sample_assignment(12, &mut rng);
            let total: i64 = f
                .slots()
                .iter()
                .map(|s| s.sign as i64 * a.value(s.var as usize) as i64)
                .sum();
            assert_eq!(total, 0);
        }
    }
}
