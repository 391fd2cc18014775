use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::DpError;
use crate::dataset::VersionId;

pub const DEFAULT_TOTAL_BUDGET: f64 = 4.0;
/// Absolute slack on budget comparisons, absorbing summation rounding.
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub epsilon: f64,
    pub version_id: VersionId,
    pub timestamp: DateTime<Utc>,
}

/// Sequential-composition accountant: spent is the plain sum of released ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    total_budget: f64,
    entries: Vec<LedgerEntry>,
    spent: f64,
}

impl BudgetLedger {
    pub fn new(total_budget: f64) -> Result<Self, DpError> {
        if !(total_budget.is_finite() && total_budget > 0.0) {
            return Err(DpError::InvalidBudget(total_budget));
        }
        Ok(Self {
            total_budget,
            entries: Vec::new(),
            spent: 0.0,
        })
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn remaining(&self) -> f64 {
        (self.total_budget - self.spent).max(0.0)
    }

    pub fn can_afford(&self, epsilon: f64) -> bool {
        self.spent + epsilon <= self.total_budget + BUDGET_SLACK
    }

    pub fn check(&self, epsilon: f64) -> Result<(), DpError> {
        if self.can_afford(epsilon) {
            Ok(())
        } else {
            Err(DpError::BudgetExceeded {
                requested: epsilon,
                spent: self.spent,
                total: self.total_budget,
            })
        }
    }

    /// Records a release. Rejections leave the ledger untouched.
    pub fn charge(&mut self, epsilon: f64, version_id: VersionId) -> Result<(), DpError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DpError::EpsilonOutsideSafeRange(epsilon));
        }
        self.check(epsilon)?;
        self.entries.push(LedgerEntry {
            epsilon,
            version_id,
            timestamp: Utc::now(),
        });
        self.spent = self.entries.iter().map(|e| e.epsilon).sum();
        Ok(())
    }
}

impl Default for BudgetLedger {
    fn default() -> Self {
        Self::new(DEFAULT_TOTAL_BUDGET).expect("default budget is positive")
    }
}

pub fn remaining_budget(ledger: &BudgetLedger) -> f64 {
    ledger.remaining()
}
