//! Formula serialization: a lossless canonical JSON form and lossy DIMACS
//! CNF export/import.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::formula::{Formula, Slot};
use crate::params::ModelParams;

/// Canonical JSON payload. Variables and copy indices are 1-based on the
/// wire; slots are row-major by (clause, position).
#[derive(Serialize, Deserialize)]
struct FormulaJson {
    params: ModelParams,
    slots: Vec<(u32, u32, i8)>,
}

/// Serializes the full slot table, including copy indices; lossless.
pub fn to_json(formula: &Formula) -> String {
    let payload = FormulaJson {
        params: *formula.params(),
        slots: formula
            .slots()
            .iter()
            .map(|s| (s.var + 1, s.copy + 1, s.sign))
            .collect(),
    };
    serde_json::to_string(&payload).expect("formula serialization cannot fail")
}

/// Parses the canonical JSON form back into a formula.
pub fn from_json(text: &str) -> Result<Formula> {
    let payload: FormulaJson =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("bad formula JSON: {e}")))?;
    payload.params.validate()?;
    let slots = payload
        .slots
        .iter()
        .map(|&(var, copy, sign)| {
            if var == 0 || copy == 0 {
                return Err(Error::Format(
                    "JSON slots use 1-based variable and copy indices".into(),
                ));
            }
            Ok(Slot {
                var: var - 1,
                copy: copy - 1,
                sign,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Formula::from_slots(payload.params, slots)
}

/// Writes standard DIMACS CNF. Copy indices are dropped, so this export is
/// lossy; the degree comment records d for re-import.
pub fn to_dimacs(formula: &Formula) -> String {
    let p = formula.params();
    let mut out = String::new();
    out.push_str(&format!(
        "c regular k-SAT: every variable occurs {}x positive and {}x negative\n",
        p.d, p.d
    ));
    out.push_str(&format!("p cnf {} {}\n", p.n, p.m));
    for clause in 0..p.m {
        for pos in 0..p.k {
            let s = formula.slot(clause, pos);
            let lit = (s.var as i64 + 1) * s.sign as i64;
            out.push_str(&lit.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

fn parse_dimacs_clauses(text: &str) -> Result<(usize, usize, Vec<Vec<i64>>)> {
    let mut header: Option<(usize, usize)> = None;
    let mut literals: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "cnf" {
                return Err(Error::Format(format!("unsupported problem line: {line}")));
            }
            let n = fields[1]
                .parse()
                .map_err(|_| Error::Format(format!("bad variable count in {line:?}")))?;
            let m = fields[2]
                .parse()
                .map_err(|_| Error::Format(format!("bad clause count in {line:?}")))?;
            header = Some((n, m));
            continue;
        }
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("bad literal {tok:?}")))?;
            if lit == 0 {
                literals.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        return Err(Error::Format("unterminated final clause".into()));
    }
    let (n, m) = header.ok_or_else(|| Error::Format("missing p cnf header".into()))?;
    if literals.len() != m {
        return Err(Error::Format(format!(
            "header promises {m} clauses, file holds {}",
            literals.len()
        )));
    }
    Ok((n, m, literals))
}

/// Reads DIMACS CNF, inferring the per-polarity degree d from the first
/// literal's variable.
pub fn from_dimacs_auto(text: &str) -> Result<Formula> {
    let (_, _, literals) = parse_dimacs_clauses(text)?;
    let probe = literals
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::Format("formula has no clauses".into()))?
        .unsigned_abs();
    let d = literals
        .iter()
        .flatten()
        .filter(|&&lit| lit == probe as i64)
        .count()
        .max(
            literals
                .iter()
                .flatten()
                .filter(|&&lit| lit == -(probe as i64))
                .count(),
        );
    from_dimacs(text, d)
}

/// Reads DIMACS CNF produced by `to_dimacs` (or any regular instance with
/// the exact d/d degree profile). Copy indices are reassigned in order of
/// occurrence. Fails naming the first variable whose degree profile is not
/// d positive / d negative.
pub fn from_dimacs(text: &str, d: usize) -> Result<Formula> {
    let (n, m, literals) = parse_dimacs_clauses(text)?;
    let k = literals
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Format("formula has no clauses".into()))?;
    if let Some(bad) = literals.iter().position(|c| c.len() != k) {
        return Err(Error::Format(format!(
            "clause {} has width {}, expected uniform width {k}",
            bad + 1,
            literals[bad].len()
        )));
    }
    let params = ModelParams::new(n, d, k)?;
    if params.m != m {
        return Err(Error::Format(format!(
            "clause count {m} does not match 2dn/k = {}",
            params.m
        )));
    }
    // Assign copy indices in order of occurrence, checking the d/d profile.
    let mut pos_seen = vec![0usize; n];
    let mut neg_seen = vec![0usize; n];
    let mut slots = Vec::with_capacity(m * k);
    for clause in &literals {
        for &lit in clause {
            let var = lit.unsigned_abs() as usize - 1;
            if var >= n {
                return Err(Error::Format(format!(
                    "literal {lit} exceeds variable count {n}"
                )));
            }
            let (seen, sign) = if lit > 0 {
                (&mut pos_seen, 1)
            } else {
                (&mut neg_seen, -1)
            };
            if seen[var] == d {
                return Err(Error::Format(format!(
                    "degree profile violated: x{} occurs more than {d} times with sign {sign}",
                    var + 1
                )));
            }
            let copy = seen[var] as u32;
            seen[var] += 1;
            slots.push(Slot {
                var: var as u32,
                copy,
                sign,
            });
        }
    }
    if let Some(v) = (0..n).find(|&v| pos_seen[v] != d || neg_seen[v] != d) {
        return Err(Error::Format(format!(
            "degree profile violated: x{} occurs {}x positive and {}x negative, expected {d}/{d}",
            v + 1,
            pos_seen[v],
            neg_seen[v]
        )));
    }
    Formula::from_slots(params, slots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng::replicate_stream;
    use crate::model::sample_formula;

    #[test]
    fn json_roundtrip_is_exact() {
        let params = ModelParams::new(9, 2, 3).unwrap();
        let f = sample_formula(&params, &mut replicate_stream(1, 0));
        let back = from_json(&to_json(&f)).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn dimacs_line_convention() {
        // Clause (x1 v ~x2 v x3) must print as "1 -2 3 0".
        let params = ModelParams::new(3, 1, 3).unwrap();
        let s = |var, sign| Slot { var, copy: 0, sign };
        let f = Formula::from_slots(
            params,
            vec![s(0, 1), s(1, -1), s(2, 1), s(0, -1), s(1, 1), s(2, -1)],
        )
        .unwrap();
        let text = to_dimacs(&f);
        assert!(text.contains("p cnf 3 2\n"));
        assert!(text.contains("1 -2 3 0\n"));
        let back = from_dimacs(&text, 1).unwrap();
        assert_eq!(back.params(), f.params());
        // Signs and variables survive; copies are reassigned canonically.
        for (a, b) in back.slots().iter().zip(f.slots()) {
            assert_eq!((a.var, a.sign), (b.var, b.sign));
        }
        assert_eq!(from_dimacs_auto(&text).unwrap(), back);
    }

    #[test]
    fn dimacs_auto_infers_degree() {
        let params = ModelParams::new(9, 2, 3).unwrap();
        let f = sample_formula(&params, &mut replicate_stream(2, 0));
        let text = to_dimacs(&f);
        let back = from_dimacs_auto(&text).unwrap();
        assert_eq!(back.params(), f.params());
    }

    #[test]
    fn dimacs_degree_violation_names_variable() {
        let text = "p cnf 3 2\n1 1 -2 0\n-1 2 -3 0\n";
        let err = from_dimacs(text, 1).unwrap_err().to_string();
        assert!(err.contains("x1"), "{err}");
    }

    #[test]
    fn dimacs_import_rejects_mixed_widths() {
        let text = "p cnf 3 2\n1 -2 0\n-1 2 -3 0\n";
        assert!(from_dimacs(text, 1).is_err());
    }
}
