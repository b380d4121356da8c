//! DIMACS CNF reader.

use crate::{Error, Result};

/// A CNF formula with DIMACS literals (1-based, negative for negation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    /// Truth value under `assignment[i]` for variable `i + 1`.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = assignment[l.unsigned_abs() as usize - 1];
                if l > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }

    /// Exhaustive satisfiability (intended for a handful of variables).
    pub fn is_satisfiable(&self) -> bool {
        assert!(self.num_vars <= 24, "exhaustive SAT limited to 24 variables");
        (0u32..1 << self.num_vars).any(|bits| {
            let a: Vec<bool> = (0..self.num_vars).map(|i| bits >> i & 1 == 1).collect();
            self.evaluate(&a)
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parses `p cnf V C` followed by zero-terminated clauses; `c` lines are comments.
///
/// Clauses may span lines. A trailing clause without its terminating 0 is accepted.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |msg: String| Error::Dimacs { line: i + 1, msg };
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate problem line".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(err(format!("expected `p cnf <vars> <clauses>`, found {line:?}")));
            }
            let v = parts[2].parse().map_err(|_| err(format!("bad variable count {:?}", parts[2])))?;
            let c = parts[3].parse().map_err(|_| err(format!("bad clause count {:?}", parts[3])))?;
            header = Some((v, c));
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| err("clause before problem line".into()))?;
        for tok in line.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| err(format!("bad literal {tok:?}")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit.unsigned_abs() as usize > num_vars {
                return Err(err(format!("literal {lit} exceeds declared variable count {num_vars}")));
            } else {
                current.push(lit);
            }
        }
    }
    let (num_vars, declared) = header.ok_or(Error::Dimacs { line: 0, msg: "missing problem line".into() })?;
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != declared {
        return Err(Error::Dimacs {
            line: text.lines().count(),
            msg: format!("header declares {declared} clauses, found {}", clauses.len()),
        });
    }
    Ok(Cnf { num_vars, clauses })
}
