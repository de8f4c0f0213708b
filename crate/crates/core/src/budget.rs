//! Process-wide entry budget guarding against `n^d` blow-up.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{PqrError, Result};

pub const DEFAULT_ENTRY_BUDGET: usize = 500_000_000;

static ENTRY_BUDGET: AtomicUsize = AtomicUsize::new(DEFAULT_ENTRY_BUDGET);

pub fn entry_budget() -> usize {
    ENTRY_BUDGET.load(Ordering::Relaxed)
}

pub fn set_entry_budget(entries: usize) {
    ENTRY_BUDGET.store(entries, Ordering::Relaxed);
}

/// Fails when `requested` exceeds the current budget.
pub fn check(requested: u128) -> Result<usize> {
    let budget = entry_budget();
    if requested > budget as u128 {
        return Err(PqrError::MemoryBudget { requested, budget });
    }
    Ok(requested as usize)
}

/// Product of `dims`, checked against the budget without overflowing.
pub fn checked_product(dims: &[usize]) -> Result<usize> {
    let mut total: u128 = 1;
    for &d in dims {
        total = total.saturating_mul(d as u128);
    }
    check(total)
}

/// `base^exp`, checked against the budget without overflowing.
pub fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut total: u128 = 1;
    for _ in 0..exp {
        total = total.saturating_mul(base as u128);
    }
    check(total)
}
