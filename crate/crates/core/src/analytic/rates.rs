//! Sign patterns, cycle rate tables and the transfer-matrix route to the
//! multiplicative perturbations delta_s.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::analytic::q::solve_q;
use crate::error::{Error, Result};

/// Edge-sign sequence of a closed walk of length 2l, in walk order.
///
/// Bit 0 of `bits` holds the last sign, so the first sign sits in the most
/// significant used position; a set bit means a negative sign. The string
/// form writes the signs in walk order, e.g. `"+-+-"`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignPattern {
    half_len: u8,
    bits: u32,
}

impl SignPattern {
    pub const MAX_HALF_LEN: usize = 12;

    /// Builds a pattern from signs in walk order; length must be even, >= 2.
    pub fn new(signs: &[i8]) -> Result<Self> {
        if signs.len() < 2 || !signs.len().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "sign pattern length must be even and >= 2, got {}",
                signs.len()
            )));
        }
        if signs.len() > 2 * Self::MAX_HALF_LEN {
            return Err(Error::Domain(format!(
                "sign pattern length {} exceeds cap {}",
                signs.len(),
                2 * Self::MAX_HALF_LEN
            )));
        }
        let mut bits = 0u32;
        for &s in signs {
            bits <<= 1;
            match s {
                1 => {}
                -1 => bits |= 1,
                other => {
                    return Err(Error::Domain(format!("sign must be +-1, got {other}")));
                }
            }
        }
        Ok(SignPattern {
            half_len: (signs.len() / 2) as u8,
            bits,
        })
    }

    pub(crate) fn from_bits(half_len: usize, bits: u32) -> Self {
        debug_assert!((1..=Self::MAX_HALF_LEN).contains(&half_len));
        debug_assert!(bits < (1u32 << (2 * half_len)) || half_len == 16);
        SignPattern {
            half_len: half_len as u8,
            bits,
        }
    }

    /// Parses the string form, e.g. `"+-"` or `"++--"`.
    pub fn parse(s: &str) -> Result<Self> {
        let signs: Result<Vec<i8>> = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::Format(format!(
                    "pattern strings use only '+' and '-', found {other:?}"
                ))),
            })
            .collect();
        SignPattern::new(&signs?)
    }

    /// Half-length l; the walk has 2l edges.
    pub fn half_len(&self) -> usize {
        self.half_len as usize
    }

    /// Sign at walk position `idx` in 0..2l.
    pub fn sign(&self, idx: usize) -> i8 {
        debug_assert!(idx < 2 * self.half_len());
        let pos = 2 * self.half_len() - 1 - idx;
        if (self.bits >> pos) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Number of variables traversed with opposite signs: pairs
    /// (position 2i-2, 2i-1) whose signs differ, for i in 1..=l.
    pub fn flip_count(&self) -> usize {
        let mut t = 0;
        for i in 0..self.half_len() {
            if self.sign(2 * i) != self.sign(2 * i + 1) {
                t += 1;
            }
        }
        t
    }

    /// The same geometric cycle traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let signs: Vec<i8> = (0..2 * self.half_len()).rev().map(|i| self.sign(i)).collect();
        SignPattern::new(&signs).expect("reversal preserves validity")
    }

    /// All 4^l patterns of half-length l, in ascending key order.
    pub fn all(half_len: usize) -> impl Iterator<Item = SignPattern> {
        (0u32..1 << (2 * half_len)).map(move |bits| SignPattern::from_bits(half_len, bits))
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..2 * self.half_len() {
            f.write_str(if self.sign(i) == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignPattern({self})")
    }
}

/// The two 2x2 transfer matrices indexed by the sign product at a variable.
///
/// Both fix the vector (1-q, q) and scale (q-1, q) by +-(2q-1), so the trace
/// of any product over a cycle is 1 + (-1)^t (2q-1)^l.
pub fn transfer_matrices(q: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let p = 1.0 - q;
    let same = [[q, p * p / q], [q, q]];
    let diff = [[p, p], [q * q / p, p]];
    (same, diff)
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// delta_s computed as trace(prod of transfer matrices) - 1.
pub fn delta_via_trace(q: f64, pattern: SignPattern) -> f64 {
    let (same, diff) = transfer_matrices(q);
    let mut prod = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..pattern.half_len() {
        let flip = pattern.sign(2 * i) != pattern.sign(2 * i + 1);
        prod = mat_mul(prod, if flip { diff } else { same });
    }
    prod[0][0] + prod[1][1] - 1.0
}

/// delta_s in closed form, (-1)^t (2q-1)^l.
pub fn delta_closed_form(q: f64, pattern: SignPattern) -> f64 {
    let sign = if pattern.flip_count().is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (2.0 * q - 1.0).powi(pattern.half_len() as i32)
}

/// Per-pattern cycle rate lambda_s = (k-1)^l d^t (d-1)^(l-t) / (2l 2^l).
pub fn lambda_for(k: u32, d: u32, pattern: SignPattern) -> f64 {
    let l = pattern.half_len() as i32;
    let t = pattern.flip_count() as i32;
    ((k as f64 - 1.0) / 2.0).powi(l) * (d as f64).powi(t) * (d as f64 - 1.0).powi(l - t)
        / (2.0 * l as f64)
}

/// One tabulated pattern with its rate and perturbation.
#[derive(Clone, Copy, Debug)]
pub struct RateEntry {
    pub pattern: SignPattern,
    pub lambda: f64,
    pub delta: f64,
}

/// Precomputed cycle rates for all sign patterns of half-length <= `max_len`.
#[derive(Clone, Debug)]
pub struct RateTable {
    pub k: u32,
    pub d: u32,
    pub q: f64,
    pub max_len: usize,
    entries: Vec<RateEntry>,
    /// Aggregated rate per (l, t): sum of lambda_s over the C(l,t) 2^l
    /// patterns with t sign flips.
    lambda_agg: Vec<(usize, usize, f64)>,
    /// Closed form of the full series sum_{l,s} lambda_s delta_s^2.
    pub series_sum: f64,
}

impl RateTable {
    /// Tabulates rates for half-lengths 1..=max_len.
    ///
    /// Each delta is computed both through the transfer-matrix trace and the
    /// closed form; construction fails if the two routes ever disagree by
    /// more than 1e-12.
    pub fn new(k: u32, d: u32, max_len: usize) -> Result<Self> {
        if !(1..=SignPattern::MAX_HALF_LEN).contains(&max_len) {
            return Err(Error::Domain(format!(
                "max_len must be in 1..={}, got {max_len}",
                SignPattern::MAX_HALF_LEN
            )));
        }
        if d < 1 {
            return Err(Error::Domain("d must be at least 1".into()));
        }
        let q = solve_q(k)?;
        if (2.0 * q - 1.0).abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "rate table needs |2q-1| < 1; k={k} is degenerate (q={q})"
            )));
        }
        let mut entries = Vec::new();
        let mut lambda_agg = Vec::new();
        for l in 1..=max_len {
            let mut agg = vec![0.0f64; l + 1];
            for pattern in SignPattern::all(l) {
                let lambda = lambda_for(k, d, pattern);
                let delta = delta_closed_form(q, pattern);
                let traced = delta_via_trace(q, pattern);
                if (delta - traced).abs() > 1e-12 {
                    return Err(Error::Internal(format!(
                        "delta routes disagree for pattern {pattern}: closed {delta}, trace {traced}"
                    )));
                }
                agg[pattern.flip_count()] += lambda;
                entries.push(RateEntry {
                    pattern,
                    lambda,
                    delta,
                });
            }
            for (t, &value) in agg.iter().enumerate() {
                lambda_agg.push((l, t, value));
            }
        }
        let series_sum = cycle_series_sum(k, d)?;
        Ok(RateTable {
            k,
            d,
            q,
            max_len,
            entries,
            lambda_agg,
            series_sum,
        })
    }

    /// All tabulated entries, ordered by (l, pattern bits).
    pub fn entries(&self) -> &[RateEntry] {
        &self.entries
    }

    /// Entries with half-length at most `ell`.
    pub fn entries_up_to(&self, ell: usize) -> impl Iterator<Item = &RateEntry> {
        self.entries.iter().take_while(move |e| e.pattern.half_len() <= ell)
    }

    pub fn lambda(&self, pattern: SignPattern) -> Option<f64> {
        self.lookup(pattern).map(|e| e.lambda)
    }

    pub fn delta(&self, pattern: SignPattern) -> Option<f64> {
        self.lookup(pattern).map(|e| e.delta)
    }

    fn lookup(&self, pattern: SignPattern) -> Option<&RateEntry> {
        self.entries
            .binary_search_by(|e| e.pattern.cmp(&pattern))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Sum of lambda_s over the patterns with given (l, t).
    pub fn lambda_agg(&self, l: usize, t: usize) -> Option<f64> {
        self.lambda_agg
            .iter()
            .find(|&&(ll, tt, _)| ll == l && tt == t)
            .map(|&(_, _, v)| v)
    }

    /// The (l, t) class rate with the 2^l pattern multiplicity divided out,
    /// i.e. lambda_agg(l, t) / 2^l. The census means match `lambda_agg`;
    /// this form is kept for reference only.
    pub fn lambda_per_class(&self, l: usize, t: usize) -> f64 {
        let choose: f64 = {
            let mut c = 1.0;
            for i in 0..t {
                c = c * (l - i) as f64 / (i + 1) as f64;
            }
            c
        };
        choose / (2.0 * l as f64)
            * ((self.k as f64 - 1.0) * (self.d as f64 - 1.0) / 2.0).powi(l as i32)
            * (self.d as f64 / (self.d as f64 - 1.0)).powi(t as i32)
    }

    /// Truncated series sum_{l<=ell} sum_s lambda_s delta_s^2.
    pub fn series_partial(&self, ell: usize) -> f64 {
        self.entries_up_to(ell)
            .map(|e| e.lambda * e.delta * e.delta)
            .sum()
    }

    /// Geometric bound on the series tail beyond half-length `ell`.
    pub fn series_tail_bound(&self, ell: usize) -> f64 {
        let x = series_argument(self.k, self.d, self.q);
        if x >= 1.0 {
            return f64::INFINITY;
        }
        x.powi(ell as i32 + 1) / (2.0 * (ell as f64 + 1.0) * (1.0 - x))
    }
}

impl Serialize for RateTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            s: &'a str,
            value: f64,
        }
        struct EntrySeq<'a> {
            table: &'a RateTable,
            lambda: bool,
        }
        impl Serialize for EntrySeq<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.table.entries.len()))?;
                for e in &self.table.entries {
                    let s = e.pattern.to_string();
                    seq.serialize_element(&Entry {
                        s: &s,
                        value: if self.lambda { e.lambda } else { e.delta },
                    })?;
                }
                seq.end()
            }
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            k: u32,
            d: u32,
            q: f64,
            max_len: usize,
            lambda: EntrySeq<'a>,
            delta: EntrySeq<'a>,
            series_sum: f64,
        }
        Repr {
            k: self.k,
            d: self.d,
            q: self.q,
            max_len: self.max_len,
            lambda: EntrySeq {
                table: self,
                lambda: true,
            },
            delta: EntrySeq {
                table: self,
                lambda: false,
            },
            series_sum: self.series_sum,
        }
        .serialize(serializer)
    }
}

fn series_argument(k: u32, d: u32, q: f64) -> f64 {
    (2.0 * d as f64 - 1.0) * (k as f64 - 1.0) * (1.0 - 4.0 * q * (1.0 - q))
}

/// Closed form of sum_{l>=1} sum_s lambda_s delta_s^2,
/// -1/2 ln(1 - (2d-1)(k-1)(1-4q(1-q))).
pub fn cycle_series_sum(k: u32, d: u32) -> Result<f64> {
    let q = solve_q(k)?;
    let x = series_argument(k, d, q);
    if x >= 1.0 {
        return Err(Error::Domain(format!(
            "series requires (2d-1)(k-1)(1-4q(1-q)) < 1, got {x} at k={k}, d={d}"
        )));
    }
    Ok(-0.5 * (-x).ln_1p())
}

/// Limit of the second-moment ratio, (1 - (2d-1)(k-1)(1-4q(1-q)))^(-1/2).
///
/// Equals exp(cycle_series_sum) identically; both routes are exposed so the
/// identity can be checked numerically.
pub fn second_moment_limit(k: u32, d: u32) -> Result<f64> {
    let q = solve_q(k)?;
    let x = series_argument(k, d, q);
    if x >= 1.0 {
        return Err(Error::Domain(format!(
            "limit requires (2d-1)(k-1)(1-4q(1-q)) < 1, got {x} at k={k}, d={d}"
        )));
    }
    Ok((1.0 - x).powf(-0.5))
}
