//! Limit-computable values as replayable mind-change scripts.
//!
//! Query `x` has a finite list of stage values; the last one is taken as the
//! limit. An optional budget bounds the number of changes per query, which
//! is the ω-c.e. contract.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LimitError {
    #[error("query {query} changed {changes} times, budget {budget}")]
    BudgetExceeded {
        query: usize,
        changes: usize,
        budget: usize,
    },
    #[error("query {0} has no stages")]
    EmptyScript(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitOracle<T> {
    scripts: Vec<Vec<T>>,
    budget: Option<Vec<usize>>,
}

impl<T: Clone + PartialEq> LimitOracle<T> {
    /// `scripts[x][t]` is the guess for query `x` at stage `t`. A short
    /// budget list repeats its last entry.
    pub fn new(scripts: Vec<Vec<T>>, budget: Option<Vec<usize>>) -> Result<Self, LimitError> {
        if let Some(x) = scripts.iter().position(Vec::is_empty) {
            return Err(LimitError::EmptyScript(x));
        }
        Ok(LimitOracle {
            scripts,
            budget: budget.filter(|b| !b.is_empty()),
        })
    }

    pub fn queries(&self) -> usize {
        self.scripts.len()
    }

    pub fn stages(&self, x: usize) -> usize {
        self.scripts.get(x).map_or(0, Vec::len)
    }

    /// The guess at stage `t`; past the script the last guess persists.
    pub fn approx(&self, x: usize, t: usize) -> Option<&T> {
        let s = self.scripts.get(x)?;
        s.get(t).or_else(|| s.last())
    }

    pub fn changes(&self, x: usize) -> usize {
        self.scripts
            .get(x)
            .map_or(0, |s| s.windows(2).filter(|w| w[0] != w[1]).count())
    }

    /// First stage from which the guess never changes again.
    pub fn stabilized_at(&self, x: usize) -> Option<usize> {
        let s = self.scripts.get(x)?;
        let last = s.last()?;
        Some(s.iter().rposition(|v| v != last).map_or(0, |i| i + 1))
    }

    pub fn limit(&self, x: usize) -> Option<&T> {
        self.scripts.get(x)?.last()
    }

    pub fn budget(&self, x: usize) -> Option<usize> {
        let b = self.budget.as_ref()?;
        b.get(x).or_else(|| b.last()).copied()
    }

    /// Every query's change count within its budget.
    pub fn check_budget(&self) -> Result<(), LimitError> {
        for x in 0..self.scripts.len() {
            if let Some(budget) = self.budget(x) {
                let changes = self.changes(x);
                if changes > budget {
                    return Err(LimitError::BudgetExceeded {
                        query: x,
                        changes,
                        budget,
                    });
                }
            }
        }
        Ok(())
    }
}
