//! Exact census of short signed cycles in the clause-variable factor graph.
//!
//! A cycle of half-length l alternates l clauses and l variables. The census
//! counts each geometric cycle once: the walk starts at the cycle's minimum
//! clause index, leaves through the smaller of that clause's two cycle slots,
//! and the sign pattern records the edge signs in walk order. Half-length 1
//! cycles are doubled clause-variable edges (a variable occurring twice in
//! one clause).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::analytic::{RateTable, SignPattern};
use crate::error::{Error, Result};
use crate::model::Formula;

/// Exact counts per sign pattern up to half-length `max_len`; missing keys
/// are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCensus {
    pub max_len: usize,
    pub counts: BTreeMap<SignPattern, u64>,
}

impl CycleCensus {
    pub fn count(&self, pattern: SignPattern) -> u64 {
        self.counts.get(&pattern).copied().unwrap_or(0)
    }

    /// Merges another census over the same formula partition.
    fn absorb(&mut self, other: CycleCensus) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
    }
}

impl Serialize for CycleCensus {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Counts<'a>(&'a BTreeMap<SignPattern, u64>);
        impl Serialize for Counts<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (pattern, count) in self.0 {
                    map.serialize_entry(&pattern.to_string(), count)?;
                }
                map.end()
            }
        }
        let mut st = serializer.serialize_struct("CycleCensus", 2)?;
        st.serialize_field("L", &self.max_len)?;
        st.serialize_field("counts", &Counts(&self.counts))?;
        st.end()
    }
}

/// Cap on census depth; the walk space grows like (kd)^L.
pub const MAX_CENSUS_LEN: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Orientation {
    /// Count each cycle once (closing slot index above the opening one).
    Canonical,
    /// Count both traversal directions (test hook for the convention).
    Both,
}

struct WalkScratch<'f> {
    formula: &'f Formula,
    /// (slot index, clause, position) of every clone, grouped by variable.
    var_clones: &'f [Vec<(u32, u32, u8, i8)>],
    start_clause: usize,
    start_pos: usize,
    max_len: usize,
    orientation: Orientation,
    used_var: Vec<bool>,
    used_clause: Vec<bool>,
    signs: Vec<i8>,
    counts: BTreeMap<SignPattern, u64>,
}

impl WalkScratch<'_> {
    /// Extends the walk from a variable reached through `arrival_slot`.
    fn walk_variable(&mut self, var: usize, arrival_slot: u32, depth: usize) {
        if self.used_var[var] {
            return;
        }
        self.used_var[var] = true;
        for &(slot_idx, clause, pos, sign) in &self.var_clones[var] {
            if slot_idx == arrival_slot {
                continue;
            }
            let clause = clause as usize;
            if clause == self.start_clause {
                // Closure through the start clause.
                let accept = match self.orientation {
                    Orientation::Canonical => (pos as usize) > self.start_pos,
                    Orientation::Both => (pos as usize) != self.start_pos,
                };
                if accept {
                    self.signs.push(sign);
                    let pattern =
                        SignPattern::new(&self.signs).expect("walk signs form a valid pattern");
                    *self.counts.entry(pattern).or_insert(0) += 1;
                    self.signs.pop();
                }
                continue;
            }
            if clause < self.start_clause || self.used_clause[clause] || depth == self.max_len {
                continue;
            }
            self.used_clause[clause] = true;
            self.signs.push(sign);
            let k = self.formula.params().k;
            for exit_pos in 0..k {
                if exit_pos == pos as usize {
                    continue;
                }
                let exit = self.formula.slot(clause, exit_pos);
                self.signs.push(exit.sign);
                let exit_slot = (clause * k + exit_pos) as u32;
                self.walk_variable(exit.var as usize, exit_slot, depth + 1);
                self.signs.pop();
            }
            self.signs.pop();
            self.used_clause[clause] = false;
        }
        self.used_var[var] = false;
    }
}

fn census_with_orientation(
    formula: &Formula,
    max_len: usize,
    orientation: Orientation,
) -> Result<CycleCensus> {
    if !(1..=MAX_CENSUS_LEN).contains(&max_len) {
        return Err(Error::Domain(format!(
            "census depth must be in 1..={MAX_CENSUS_LEN}, got {max_len}"
        )));
    }
    let p = formula.params();
    let mut var_clones: Vec<Vec<(u32, u32, u8, i8)>> = vec![Vec::with_capacity(2 * p.d); p.n];
    for (idx, s) in formula.slots().iter().enumerate() {
        var_clones[s.var as usize].push((
            idx as u32,
            (idx / p.k) as u32,
            (idx % p.k) as u8,
            s.sign,
        ));
    }
    // Each start clause explores its own walks; integer merges keep the
    // result independent of the worker count.
    let merged = (0..p.m)
        .into_par_iter()
        .map(|start_clause| {
            let mut scratch = WalkScratch {
                formula,
                var_clones: &var_clones,
                start_clause,
                start_pos: 0,
                max_len,
                orientation,
                used_var: vec![false; p.n],
                used_clause: vec![false; p.m],
                signs: Vec::with_capacity(2 * max_len),
                counts: BTreeMap::new(),
            };
            for start_pos in 0..p.k {
                let s = formula.slot(start_clause, start_pos);
                scratch.start_pos = start_pos;
                scratch.signs.push(s.sign);
                let slot = (start_clause * p.k + start_pos) as u32;
                scratch.walk_variable(s.var as usize, slot, 1);
                scratch.signs.pop();
            }
            CycleCensus {
                max_len,
                counts: scratch.counts,
            }
        })
        .reduce(
            || CycleCensus {
                max_len,
                counts: BTreeMap::new(),
            },
            |mut a, b| {
                a.absorb(b);
                a
            },
        );
    Ok(merged)
}

/// Exact signed-cycle census up to half-length `max_len`.
pub fn cycle_census(formula: &Formula, max_len: usize) -> Result<CycleCensus> {
    census_with_orientation(formula, max_len, Orientation::Canonical)
}

/// Census admitting both traversal directions; each geometric cycle is then
/// counted once per direction, so key s collects the canonical count of s
/// plus that of its reversal.
pub fn cycle_census_unoriented(formula: &Formula, max_len: usize) -> Result<CycleCensus> {
    census_with_orientation(formula, max_len, Orientation::Both)
}

/// Work cap for the brute-force oracle's tuple space.
const ORACLE_WORK_CAP: f64 = 2e8;

/// Brute-force census: enumerates all clause tuples and slot tuples per the
/// literal cycle conditions, with no walk pruning, reading only the forward
/// slot table. Caps: max_len <= 4 and m*k <= 2000.
pub fn cycle_census_oracle(formula: &Formula, max_len: usize) -> Result<CycleCensus> {
    let p = formula.params();
    if max_len > 4 {
        return Err(Error::Resource(format!(
            "oracle census caps at half-length 4, got {max_len}"
        )));
    }
    if p.slot_count() > 2000 {
        return Err(Error::Resource(format!(
            "oracle census caps at m*k <= 2000 slots, got {}",
            p.slot_count()
        )));
    }
    let mut work = 0.0;
    for l in 1..=max_len {
        work += (p.m as f64).powi(l as i32) * (p.k as f64).powi(2 * l as i32);
    }
    if work > ORACLE_WORK_CAP {
        return Err(Error::Resource(format!(
            "oracle tuple space {work:.2e} exceeds cap {ORACLE_WORK_CAP:.0e}"
        )));
    }
    let mut counts: BTreeMap<SignPattern, u64> = BTreeMap::new();
    let var_of = |clause: usize, pos: usize| formula.slot(clause, pos).var;
    let sign_of = |clause: usize, pos: usize| formula.slot(clause, pos).sign;
    for l in 1..=max_len {
        // Clause tuple: positions 0, 1, .., l-1 hold the distinct clauses in
        // walk order (clause 0 repeated at the end by the closure condition).
        let mut clauses = vec![0usize; l];
        let mut slots = vec![0usize; 2 * l];
        enumerate_tuples(p.m, &mut clauses, 0, &mut |clauses| {
            // Start clause must be the strict minimum and all distinct.
            if clauses
                .iter()
                .skip(1)
                .any(|&c| c <= clauses[0])
            {
                return;
            }
            if has_duplicates(clauses) {
                return;
            }
            enumerate_tuples(p.k, &mut slots, 0, &mut |slots| {
                // Walk positions t = 2..2l+1 map to slot index t-2: even t
                // (variable links) pair slot 2h-2 of clause h-1 with slot
                // 2h-1 of clause h.
                // Opening/closing slots of the start clause must differ with
                // the opening one smaller.
                if slots[0] >= slots[2 * l - 1] {
                    return;
                }
                // Within-clause slot pairs must differ.
                for h in 1..l {
                    if slots[2 * h - 1] == slots[2 * h] {
                        return;
                    }
                }
                // Variable matches along the cycle, variables distinct.
                let mut vars = Vec::with_capacity(l);
                for h in 0..l {
                    let c_here = clauses[h];
                    let c_next = clauses[(h + 1) % l];
                    let v = var_of(c_here, slots[2 * h]);
                    if var_of(c_next, slots[2 * h + 1]) != v {
                        return;
                    }
                    vars.push(v);
                }
                if has_duplicates(&vars) {
                    return;
                }
                // For half-length 1 the two slots share the clause; the
                // variable-match check above already handled it.
                let mut signs = Vec::with_capacity(2 * l);
                signs.push(sign_of(clauses[0], slots[0]));
                for h in 1..l {
                    signs.push(sign_of(clauses[h], slots[2 * h - 1]));
                    signs.push(sign_of(clauses[h], slots[2 * h]));
                }
                signs.push(sign_of(clauses[0], slots[2 * l - 1]));
                let pattern = SignPattern::new(&signs).expect("oracle signs valid");
                *counts.entry(pattern).or_insert(0) += 1;
            });
        });
    }
    Ok(CycleCensus { max_len, counts })
}

fn enumerate_tuples(base: usize, tuple: &mut Vec<usize>, pos: usize, f: &mut impl FnMut(&[usize])) {
    if pos == tuple.len() {
        f(tuple.as_slice());
        return;
    }
    for v in 0..base {
        tuple[pos] = v;
        enumerate_tuples(base, tuple, pos + 1, f);
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if items[i] == items[j] {
                return true;
            }
        }
    }
    false
}

/// U_ell = sum over patterns with half-length <= ell of
/// C_s ln(1 + delta_s) - lambda_s delta_s; the empty sum at ell = 0 is 0.
pub fn u_statistic(census: &CycleCensus, rates: &RateTable, ell: usize) -> Result<f64> {
    if ell == 0 {
        return Ok(0.0);
    }
    if census.max_len < ell {
        return Err(Error::Domain(format!(
            "census covers half-lengths <= {}, requested {ell}",
            census.max_len
        )));
    }
    if rates.max_len < ell {
        return Err(Error::Domain(format!(
            "rate table covers half-lengths <= {}, requested {ell}",
            rates.max_len
        )));
    }
    let mut total = 0.0;
    for entry in rates.entries_up_to(ell) {
        if entry.delta <= -1.0 {
            return Err(Error::Numerical(format!(
                "log argument 1 + delta <= 0 for pattern {}",
                entry.pattern
            )));
        }
        let c = census.count(entry.pattern) as f64;
        total += c * entry.delta.ln_1p() - entry.lambda * entry.delta;
    }
    Ok(total)
}

/// Result of the walk-encoding enumeration around one sign pattern.
#[derive(Clone, Copy, Debug)]
pub struct IsCount {
    /// Exhaustive count of (slot, clone) index families.
    pub enumerated: u64,
    /// (k(k-1))^l d^(l+t) (d-1)^(l-t); consistent with the cycle rates.
    pub closed_form_exponent_l: f64,
    /// The same expression with (k(k-1)) raised to 2l instead.
    pub closed_form_exponent_2l: f64,
    /// Which closed form the enumeration matched.
    pub matches_exponent_l: bool,
}

/// Counts the families (j_h, g_h) encoding a cycle walk with pattern `s`:
/// slot indices differ within each clause, and clone indices at a variable
/// differ when its two edge signs agree. The count is compared against both
/// closed-form candidates.
pub fn i_s_enumerate(k: u32, d: u32, pattern: SignPattern) -> Result<IsCount> {
    let l = pattern.half_len();
    if k as u64 * d as u64 > 64 {
        return Err(Error::Resource(format!(
            "enumeration caps at k*d <= 64, got {}",
            k * d
        )));
    }
    if l > 3 {
        return Err(Error::Resource(format!(
            "enumeration caps at half-length 3, got {l}"
        )));
    }
    let work = ((k * d) as f64).powi(2 * l as i32);
    if work > 1e8 {
        return Err(Error::Resource(format!(
            "tuple space {work:.2e} too large for exhaustive enumeration"
        )));
    }
    // Positions 0..2l hold (j, g) for walk steps t = 2..2l+1.
    let mut j = vec![0usize; 2 * l];
    let mut g = vec![0usize; 2 * l];
    let mut enumerated = 0u64;
    enumerate_tuples(k as usize, &mut j, 0, &mut |j| {
        let mut gg = std::mem::take(&mut g);
        enumerate_tuples(d as usize, &mut gg, 0, &mut |g| {
            // Slot constraints: j_2 != j_{2l+1}; j_{2h+1} != j_{2h+2}, h < l.
            if j[0] == j[2 * l - 1] {
                return;
            }
            for h in 1..l {
                if j[2 * h - 1] == j[2 * h] {
                    return;
                }
            }
            // Clone constraints: g_{2h} != g_{2h+1} when the signs at
            // variable h agree.
            for h in 0..l {
                if pattern.sign(2 * h) == pattern.sign(2 * h + 1) && g[2 * h] == g[2 * h + 1] {
                    return;
                }
            }
            enumerated += 1;
        });
        g = gg;
    });
    let t = pattern.flip_count();
    let kf = (k as f64) * (k as f64 - 1.0);
    let d_part = (d as f64).powi((l + t) as i32) * (d as f64 - 1.0).powi((l - t) as i32);
    let closed_l = kf.powi(l as i32) * d_part;
    let closed_2l = kf.powi(2 * l as i32) * d_part;
    Ok(IsCount {
        enumerated,
        closed_form_exponent_l: closed_l,
        closed_form_exponent_2l: closed_2l,
        matches_exponent_l: (enumerated as f64 - closed_l).abs() < 0.5,
    })
}
