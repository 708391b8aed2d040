//! The bijection representation of a regular formula and its invariants.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// One literal slot: which variable, which of its d copies, and the sign.
///
/// `var` is 0-based internally; serialized forms are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub var: u32,
    pub copy: u32,
    pub sign: i8,
}

/// A regular k-SAT formula as a bijection from clause slots to literal
/// clones: slot (i, j) lives at index i*k + j, and every (variable, copy,
/// sign) triple occurs exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    params: ModelParams,
    slots: Vec<Slot>,
    /// clone id -> slot index; the inverse bijection.
    inv: Vec<u32>,
}

/// Truth assignment; bit v set means variable v is true (+1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn from_mask(mask: u64, n: usize) -> Self {
        Assignment {
            bits: (0..n).map(|v| (mask >> v) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, var: usize) -> bool {
        self.bits[var]
    }

    /// +-1 value of the variable.
    pub fn value(&self, var: usize) -> i8 {
        if self.bits[var] {
            1
        } else {
            -1
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Clone id of (var, copy, sign): positives first within each copy.
pub(crate) fn clone_id(d: usize, var: u32, copy: u32, sign: i8) -> usize {
    (var as usize * d + copy as usize) * 2 + usize::from(sign < 0)
}

impl Formula {
    /// Assembles a formula from a slot table, checking the bijection.
    pub fn from_slots(params: ModelParams, slots: Vec<Slot>) -> Result<Self> {
        if slots.len() != params.slot_count() {
            return Err(Error::Format(format!(
                "slot table length {} does not match m*k = {}",
                slots.len(),
                params.slot_count()
            )));
        }
        let mut inv = vec![u32::MAX; params.slot_count()];
        for (idx, slot) in slots.iter().enumerate() {
            if slot.var as usize >= params.n
                || slot.copy as usize >= params.d
                || (slot.sign != 1 && slot.sign != -1)
            {
                return Err(Error::Format(format!(
                    "slot {idx} holds an out-of-range literal clone {slot:?}"
                )));
            }
            let c = clone_id(params.d, slot.var, slot.copy, slot.sign);
            if inv[c] != u32::MAX {
                return Err(Error::Format(format!(
                    "clone (x{}, copy {}, sign {}) used twice",
                    slot.var + 1,
                    slot.copy,
                    slot.sign
                )));
            }
            inv[c] = idx as u32;
        }
        Ok(Formula { params, slots, inv })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Slot (i, j) for clause i, position j.
    pub fn slot(&self, clause: usize, pos: usize) -> Slot {
        self.slots[clause * self.params.k + pos]
    }

    /// Slot index holding the given literal clone.
    pub fn slot_of_clone(&self, var: u32, copy: u32, sign: i8) -> usize {
        self.inv[clone_id(self.params.d, var, copy, sign)] as usize
    }

    /// (clause, position) pairs of all 2d slots of a variable.
    pub fn slots_of_var(&self, var: u32) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.params.d;
        let k = self.params.k;
        (0..2 * d).map(move |c| {
            let idx = self.inv[var as usize * 2 * d + c] as usize;
            (idx / k, idx % k)
        })
    }

    /// Full diagnostic check of the bijection and degree invariants.
    /// Returns the list of violations; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        let p = &self.params;
        if self.slots.len() != p.slot_count() {
            report.push(format!(
                "slot table length {} != m*k = {}",
                self.slots.len(),
                p.slot_count()
            ));
            return report;
        }
        let mut seen = vec![0u32; p.slot_count()];
        let mut pos_deg = vec![0usize; p.n];
        let mut neg_deg = vec![0usize; p.n];
        for (idx, slot) in self.slots.iter().enumerate() {
            if slot.var as usize >= p.n || slot.copy as usize >= p.d {
                report.push(format!("slot {idx} out of range: {slot:?}"));
                continue;
            }
            if slot.sign != 1 && slot.sign != -1 {
                report.push(format!("slot {idx} has sign {}", slot.sign));
                continue;
            }
            let c = clone_id(p.d, slot.var, slot.copy, slot.sign);
            seen[c] += 1;
            if seen[c] == 2 {
                report.push(format!(
                    "clone used twice: x{} copy {} sign {}",
                    slot.var + 1,
                    slot.copy,
                    slot.sign
                ));
            }
            if slot.sign == 1 {
                pos_deg[slot.var as usize] += 1;
            } else {
                neg_deg[slot.var as usize] += 1;
            }
            if self.inv[c] as usize != idx && seen[c] == 1 {
                report.push(format!("inverse map stale for slot {idx}"));
            }
        }
        for v in 0..p.n {
            if pos_deg[v] != p.d || neg_deg[v] != p.d {
                report.push(format!(
                    "degree violation: x{} occurs {}x positive, {}x negative (expected {}/{})",
                    v + 1,
                    pos_deg[v],
                    neg_deg[v],
                    p.d,
                    p.d
                ));
            }
        }
        report
    }
}
