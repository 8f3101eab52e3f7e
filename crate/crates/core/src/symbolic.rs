//! Subshifts of finite type: admissible words, counts, entropy and higher-power
//! presentations.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, SparseMatrix};
use crate::Limits;

/// A finite word over `{0, …, l−1}`. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &[usize]) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        Word(v)
    }
}

impl Deref for Word {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<&[usize]> for Word {
    fn from(s: &[usize]) -> Self {
        Word(s.to_vec())
    }
}

/// Digits for alphabets up to 10 symbols, dot-separated otherwise.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            f.write_str(&parts.join("."))
        }
    }
}

/// Parses the [`Display`](fmt::Display) form back into a word.
pub fn parse_word(s: &str) -> Result<Word> {
    let symbols: Option<Vec<usize>> = if s.contains('.') {
        s.split('.').map(|p| p.parse::<usize>().ok()).collect()
    } else {
        s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect()
    };
    match symbols {
        Some(v) if !v.is_empty() => Ok(Word(v)),
        _ => Err(Error::invalid(format!("cannot parse word {s:?}"))),
    }
}

/// Two-sided topological Markov chain `Σ_A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubshiftOfFiniteType {
    size: usize,
    transitions: Vec<bool>,
    irreducible: bool,
}

impl SubshiftOfFiniteType {
    /// Builds from a square 0/1 matrix; `a[i][j] = 1` iff `j` may follow `i`.
    pub fn new(matrix: &[Vec<u8>]) -> Result<Self> {
        let l = matrix.len();
        if l == 0 {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        let mut transitions = Vec::with_capacity(l * l);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != l {
                return Err(Error::invalid(format!(
                    "transition row {i} has {} entries, expected {l}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => transitions.push(false),
                    1 => transitions.push(true),
                    _ => {
                        return Err(Error::invalid(format!(
                            "transition entry ({i},{j}) = {v} is not 0 or 1"
                        )))
                    }
                }
            }
        }
        Self::from_flags(l, transitions)
    }

    fn from_flags(size: usize, transitions: Vec<bool>) -> Result<Self> {
        for i in 0..size {
            if !(0..size).any(|j| transitions[i * size + j]) {
                return Err(Error::invalid(format!("symbol {i} has no successor")));
            }
            if !(0..size).any(|j| transitions[j * size + i]) {
                return Err(Error::invalid(format!("symbol {i} has no predecessor")));
            }
        }
        let irreducible = strongly_connected(size, &transitions);
        Ok(SubshiftOfFiniteType {
            size,
            transitions,
            irreducible,
        })
    }

    /// Full shift on `l` symbols.
    pub fn full(l: usize) -> Self {
        Self::from_flags(l, vec![true; l * l]).expect("full shift is valid")
    }

    /// Golden-mean shift: binary, `11` forbidden.
    pub fn golden_mean() -> Self {
        Self::new(&[vec![1, 1], vec![1, 0]]).expect("golden mean is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.transitions[i * self.size + j]
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn is_full(&self) -> bool {
        self.transitions.iter().all(|&t| t)
    }

    pub(crate) fn require_irreducible(&self) -> Result<()> {
        if self.irreducible {
            Ok(())
        } else {
            Err(Error::NotIrreducible)
        }
    }

    /// Transition matrix as 0/1 rows.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.allows(i, j) as u8).collect())
            .collect()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&j| self.allows(i, j))
    }

    pub fn is_admissible(&self, w: &[usize]) -> bool {
        !w.is_empty() && w.iter().all(|&s| s < self.size) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// Number of admissible words of length `n`, with overflow detection.
    pub fn count_words(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::invalid("word length must be at least 1"));
        }
        let mut ending = vec![1u64; self.size];
        for _ in 1..n {
            let mut next = vec![0u64; self.size];
            for (i, &c) in ending.iter().enumerate() {
                for j in self.successors(i) {
                    next[j] = next[j].checked_add(c).ok_or(Error::Overflow("counting words"))?;
                }
            }
            ending = next;
        }
        ending
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::Overflow("counting words"))
    }

    /// Fails with a resource error when more than `cap` words of length `n`
    /// exist.
    pub fn check_word_cap(&self, n: usize, cap: usize) -> Result<u64> {
        let count = match self.count_words(n) {
            Ok(c) => c,
            Err(Error::Overflow(_)) => u64::MAX,
            Err(e) => return Err(e),
        };
        if count > cap as u64 {
            return Err(Error::Resource {
                what: "word enumeration",
                needed: count as u128,
                limit: cap as u128,
            });
        }
        Ok(count)
    }

    /// Calls `visit` on every admissible word of length `n`, in
    /// lexicographic order.
    pub fn for_each_word(&self, n: usize, cap: usize, mut visit: impl FnMut(&[usize])) -> Result<()> {
        self.check_word_cap(n, cap)?;
        let mut buf = Vec::with_capacity(n);
        for s in 0..self.size {
            buf.push(s);
            self.extend(&mut buf, n, &mut visit);
            buf.pop();
        }
        Ok(())
    }

    fn extend(&self, buf: &mut Vec<usize>, n: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() == n {
            visit(buf);
            return;
        }
        let last = *buf.last().expect("nonempty");
        for j in 0..self.size {
            if self.allows(last, j) {
                buf.push(j);
                self.extend(buf, n, visit);
                buf.pop();
            }
        }
    }

    /// All admissible words of length `n`, lexicographically ordered.
    pub fn admissible_words(&self, n: usize, limits: &Limits) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        self.for_each_word(n, limits.word_cap, |w| out.push(Word::from(w)))?;
        Ok(out)
    }

    /// `log` of the spectral radius of the transition matrix (nats).
    pub fn topological_entropy(&self) -> Result<f64> {
        self.require_irreducible()?;
        let rows = (0..self.size)
            .map(|i| self.successors(i).map(|j| (j, 1.0)).collect())
            .collect();
        let rho = spectral::spectral_radius(&SparseMatrix::from_rows(rows))?;
        Ok(rho.ln().max(0.0))
    }

    /// The `N`-block presentation: alphabet = admissible `N`-words, `w → w'`
    /// allowed iff `w·w'` is admissible. Also returns the block list, whose
    /// positions are the new symbols.
    pub fn power_subshift(&self, n: usize, limits: &Limits) -> Result<(SubshiftOfFiniteType, Vec<Word>)> {
        if n == 0 {
            return Err(Error::invalid("power must be at least 1"));
        }
        let count = self.check_word_cap(n, limits.word_cap)?;
        if count > limits.alphabet_cap as u64 {
            return Err(Error::Resource {
                what: "power alphabet",
                needed: count as u128,
                limit: limits.alphabet_cap as u128,
            });
        }
        let blocks = self.admissible_words(n, limits)?;
        let k = blocks.len();
        let mut flags = Vec::with_capacity(k * k);
        for a in &blocks {
            let last = a[n - 1];
            for b in &blocks {
                flags.push(self.allows(last, b[0]));
            }
        }
        Ok((Self::from_flags(k, flags)?, blocks))
    }

    /// `reach[a][b]`: some admissible word of length `n` starts at `a` and
    /// ends at `b`.
    pub fn endpoint_reachability(&self, n: usize) -> Vec<Vec<bool>> {
        let l = self.size;
        let mut reach: Vec<Vec<bool>> = (0..l).map(|i| (0..l).map(|j| i == j).collect()).collect();
        for _ in 1..n {
            reach = reach
                .iter()
                .map(|row| (0..l).map(|j| (0..l).any(|k| row[k] && self.allows(k, j))).collect())
                .collect();
        }
        reach
    }
}

fn strongly_connected(n: usize, t: &[bool]) -> bool {
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { t[i * n + j] } else { t[j * n + i] };
                if edge && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}
