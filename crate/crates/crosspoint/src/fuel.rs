//! Deterministic work budgets for semi-decision procedures.
//!
//! A semi-test either returns a certificate or reports honest starvation.
//! Fuel is a count of elementary work units (one oracle evaluation, one
//! subdivision node, one candidate attempt); a refinement pass at dyadic
//! depth `k` costs on the order of `2^k` units. Identical inputs and budgets
//! always perform the identical sequence of operations.

/// Mutable work budget threaded through an operation.
#[derive(Debug, Clone)]
pub struct FuelMeter {
    remaining: u64,
    spent: u64,
}

impl FuelMeter {
    pub fn new(budget: u64) -> Self {
        FuelMeter {
            remaining: budget,
            spent: 0,
        }
    }

    /// Consumes `units` if available. Returns false (spending nothing) once
    /// the budget cannot cover the request.
    pub fn try_spend(&mut self, units: u64) -> bool {
        if self.remaining >= units {
            self.remaining -= units;
            self.spent += units;
            true
        } else {
            false
        }
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn exhausted(&self) -> bool {
        self.remaining == 0
    }
}

/// Honest "ran out of budget" report naming the starved stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Starved {
    pub stage: String,
    pub fuel_spent: u64,
}

impl Starved {
    pub fn at(stage: impl Into<String>, meter: &FuelMeter) -> Self {
        Starved {
            stage: stage.into(),
            fuel_spent: meter.spent(),
        }
    }
}

impl std::fmt::Display for Starved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "starved at stage {:?} after {} units", self.stage, self.fuel_spent)
    }
}

/// Outcome of a semi-decision procedure: a certificate or honest starvation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Semi<T> {
    Accepted(T),
    Unknown(Starved),
}

impl<T> Semi<T> {
    pub fn accepted(self) -> Option<T> {
        match self {
            Semi::Accepted(t) => Some(t),
            Semi::Unknown(_) => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, Semi::Accepted(_))
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Semi<U> {
        match self {
            Semi::Accepted(t) => Semi::Accepted(f(t)),
            Semi::Unknown(s) => Semi::Unknown(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spend_until_exhausted() {
        let mut m = FuelMeter::new(5);
        assert!(m.try_spend(3));
        assert!(!m.try_spend(3));
        assert!(m.try_spend(2));
        assert!(m.exhausted());
        assert_eq!(m.spent(), 5);
    }
}
