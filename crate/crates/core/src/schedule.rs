//! Switch-time semantics of the derived algorithm.
//!
//! Algorithm `i < N` is abandoned once it has used its budget `τ_i` without
//! finishing; the last algorithm runs without a limit. Algorithm `n` keeps
//! going only while `τ_n < π_n`, so finishing exactly at the budget counts
//! as completion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Budgets `(τ₁, …, τ_{N−1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule<T = f64> {
    budgets: Vec<T>,
}

impl<T: Scalar> Schedule<T> {
    pub fn new(budgets: Vec<T>) -> Result<Self> {
        for (i, t) in budgets.iter().enumerate() {
            let finite = t.to_f64().is_some_and(f64::is_finite);
            if !(*t >= T::zero() && finite) {
                return Err(Error::Contract(format!(
                    "budget tau_{} = {t:?} must be finite and nonnegative",
                    i + 1
                )));
            }
        }
        Ok(Schedule { budgets })
    }

    /// The two-algorithm schedule `(τ₁)`.
    pub fn single(tau: T) -> Result<Self> {
        Schedule::new(vec![tau])
    }

    pub fn budgets(&self) -> &[T] {
        &self.budgets
    }

    /// Number of algorithms this schedule drives.
    pub fn portfolio_size(&self) -> usize {
        self.budgets.len() + 1
    }

    /// Cumulative deadline `τ₁ + … + τ_i` at which stage `i` (1-based) is abandoned.
    pub fn deadline(&self, stage: usize) -> T {
        self.budgets[..stage].iter().fold(T::zero(), |acc, &t| acc + t)
    }
}

/// Which algorithm finished and when.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedOutcome<T = f64> {
    pub total_time: T,
    /// 1-based index of the completing algorithm.
    pub completing_index: usize,
}

/// Elapsed time and completing algorithm for realized runtimes `times`.
pub fn derived_time<T: Scalar>(times: &[T], schedule: &Schedule<T>) -> Result<DerivedOutcome<T>> {
    if times.len() != schedule.portfolio_size() {
        return Err(Error::Contract(format!(
            "{} runtimes given for a schedule of {} budgets",
            times.len(),
            schedule.budgets.len()
        )));
    }
    if let Some((i, t)) = times
        .iter()
        .enumerate()
        .find(|(_, t)| !(**t > T::zero() && t.to_f64().is_some_and(f64::is_finite)))
    {
        return Err(Error::Domain(format!(
            "runtime of algorithm {} is {t:?}; only finite positive runtimes are supported",
            i + 1
        )));
    }
    let (total_time, completing_index) = completion(times, &schedule.budgets);
    Ok(DerivedOutcome { total_time, completing_index })
}

/// Unchecked core of [`derived_time`]; `times.len()` must be `budgets.len() + 1`.
pub(crate) fn completion<T: Scalar>(times: &[T], budgets: &[T]) -> (T, usize) {
    let mut spent = T::zero();
    for (i, &tau) in budgets.iter().enumerate() {
        if times[i] <= tau {
            return (spent + times[i], i + 1);
        }
        spent = spent + tau;
    }
    let last = times.len() - 1;
    (spent + times[last], last + 1)
}
