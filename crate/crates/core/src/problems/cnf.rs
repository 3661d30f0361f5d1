use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A literal: a 1-based variable index and its polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn positive(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn negative(var: usize) -> Self {
        Literal { var, negated: true }
    }

    fn from_dimacs(value: i64) -> Self {
        Literal {
            var: value.unsigned_abs() as usize,
            negated: value < 0,
        }
    }

    fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    /// Whether this literal is true under basis index `z`.
    #[inline]
    pub fn holds(self, z: usize) -> bool {
        super::bit_value(z, self.var) != self.negated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause(pub [Literal; 3]);

impl Clause {
    pub fn literals(&self) -> &[Literal; 3] {
        &self.0
    }

    pub fn is_satisfied_by(&self, z: usize) -> bool {
        self.0.iter().any(|lit| lit.holds(z))
    }

    /// Bit mask of the clause's variables and the bit pattern of the single
    /// assignment to those variables that violates the clause.
    pub(crate) fn violation_pattern(&self) -> (usize, usize) {
        let mut mask = 0usize;
        let mut pattern = 0usize;
        for lit in &self.0 {
            let bit = 1usize << (lit.var - 1);
            mask |= bit;
            // a positive literal is violated by false (bit 0)
            if lit.negated {
                pattern |= bit;
            }
        }
        (mask, pattern)
    }

    fn canonical(&self) -> [Literal; 3] {
        let mut lits = self.0;
        lits.sort();
        lits
    }
}

/// A 3-SAT instance over variables `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfInstance {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Domain("a CNF instance needs at least one variable".into()));
        }
        for (k, clause) in clauses.iter().enumerate() {
            validate_clause(clause, num_vars).map_err(|msg| Error::Domain(format!("clause {k}: {msg}")))?;
        }
        Ok(CnfInstance { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_satisfied_by(&self, z: usize) -> bool {
        self.clauses.iter().all(|c| c.is_satisfied_by(z))
    }

    pub fn violated_count(&self, z: usize) -> usize {
        self.clauses.iter().filter(|c| !c.is_satisfied_by(z)).count()
    }

    /// Parses DIMACS CNF restricted to clauses of exactly three literals.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut pending: Vec<(i64, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(Error::parse(line_no, "duplicate problem header"));
                }
                header = Some(parse_header(line).map_err(|m| Error::parse(line_no, m))?);
                continue;
            }
            let Some((num_vars, _)) = header else {
                return Err(Error::parse(line_no, "clause before `p cnf` header"));
            };
            for token in line.split_whitespace() {
                let value: i64 = token
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid literal `{token}`")))?;
                if value != 0 {
                    pending.push((value, line_no));
                    continue;
                }
                let clause_line = pending.first().map_or(line_no, |&(_, l)| l);
                if pending.len() != 3 {
                    return Err(Error::parse(
                        clause_line,
                        format!("clause has {} literals, expected 3", pending.len()),
                    ));
                }
                let clause = Clause([
                    Literal::from_dimacs(pending[0].0),
                    Literal::from_dimacs(pending[1].0),
                    Literal::from_dimacs(pending[2].0),
                ]);
                validate_clause(&clause, num_vars).map_err(|m| Error::parse(clause_line, m))?;
                clauses.push(clause);
                pending.clear();
            }
        }

        let Some((num_vars, num_clauses)) = header else {
            return Err(Error::parse(0, "missing `p cnf` header"));
        };
        if let Some(&(_, line)) = pending.first() {
            return Err(Error::parse(line, "clause not terminated by 0"));
        }
        if clauses.len() != num_clauses {
            return Err(Error::parse(
                0,
                format!("header declares {num_clauses} clauses, found {}", clauses.len()),
            ));
        }
        CnfInstance::new(num_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            let [a, b, c] = clause.0;
            let _ = writeln!(out, "{} {} {} 0", a.to_dimacs(), b.to_dimacs(), c.to_dimacs());
        }
        out
    }
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
        return Err(format!("malformed header `{line}`"));
    }
    let n = parts[2]
        .parse::<usize>()
        .map_err(|_| format!("invalid variable count `{}`", parts[2]))?;
    let m = parts[3]
        .parse::<usize>()
        .map_err(|_| format!("invalid clause count `{}`", parts[3]))?;
    if n == 0 {
        return Err("variable count must be positive".into());
    }
    Ok((n, m))
}

fn validate_clause(clause: &Clause, num_vars: usize) -> std::result::Result<(), String> {
    for lit in &clause.0 {
        if lit.var == 0 || lit.var > num_vars {
            return Err(format!("variable {} out of range 1..={num_vars}", lit.var));
        }
    }
    let [a, b, c] = clause.0;
    if a.var == b.var || a.var == c.var || b.var == c.var {
        return Err("clause repeats a variable".into());
    }
    Ok(())
}

/// Counts satisfying assignments by exhaustive enumeration, stopping once
/// `limit` is reached.
pub fn count_satisfying(inst: &CnfInstance, limit: usize) -> usize {
    let patterns: Vec<(usize, usize)> = inst.clauses.iter().map(Clause::violation_pattern).collect();
    let mut count = 0;
    for z in 0..(1usize << inst.num_vars) {
        if patterns.iter().all(|&(mask, pat)| z & mask != pat) {
            count += 1;
            if count >= limit {
                break;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy)]
pub struct HardSatOptions {
    /// Clauses per variable.
    pub clause_ratio: usize,
    pub max_attempts: u64,
}

impl Default for HardSatOptions {
    fn default() -> Self {
        HardSatOptions {
            clause_ratio: 3,
            max_attempts: 1_000_000,
        }
    }
}

pub const HARD_SAT_MIN_VARS: usize = 4;
pub const HARD_SAT_MAX_VARS: usize = 16;

/// Rejection-samples a random 3-SAT instance with `ratio * n` distinct clauses
/// and exactly one satisfying assignment.
pub fn generate_hard_sat(n: usize, seed: u64, opts: HardSatOptions) -> Result<CnfInstance> {
    if !(HARD_SAT_MIN_VARS..=HARD_SAT_MAX_VARS).contains(&n) {
        return Err(Error::Domain(format!(
            "hard 3-SAT generation needs n in [{HARD_SAT_MIN_VARS}, {HARD_SAT_MAX_VARS}], got {n}"
        )));
    }
    let m = opts.clause_ratio * n;
    // C(n,3) * 8 distinct clauses exist
    let distinct = n * (n - 1) * (n - 2) / 6 * 8;
    if m > distinct {
        return Err(Error::Domain(format!(
            "cannot draw {m} distinct clauses over {n} variables"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..opts.max_attempts {
        let mut seen = HashSet::with_capacity(m);
        let mut clauses = Vec::with_capacity(m);
        while clauses.len() < m {
            let vars = index::sample(&mut rng, n, 3);
            let mut lits = [Literal::positive(1); 3];
            for (slot, v) in lits.iter_mut().zip(vars.iter()) {
                *slot = Literal {
                    var: v + 1,
                    negated: rng.gen::<bool>(),
                };
            }
            let clause = Clause(lits);
            if seen.insert(clause.canonical()) {
                clauses.push(clause);
            }
        }
        let inst = CnfInstance { num_vars: n, clauses };
        if count_satisfying(&inst, 2) == 1 {
            return Ok(inst);
        }
    }
    Err(Error::GenerationFailed {
        attempts: opts.max_attempts,
        reason: format!("no unique-solution instance with n={n}, m={m}"),
    })
}
