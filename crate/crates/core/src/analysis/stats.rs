//! Sampled measurement records, the Monte Carlo counterpart of
//! [`outcome_distribution`](crate::protocols::outcome_distribution).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dynamics::PhysicalParams;
use crate::fockspace::{Level, QuantumState};
use crate::protocols::{run_protocol_with, ProtocolEvent};
use crate::rng::RngStream;
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalDistribution {
    pub seed: u64,
    pub trials: u64,
    pub counts: BTreeMap<Vec<Level>, u64>,
}

impl EmpiricalDistribution {
    pub fn from_records(seed: u64, records: impl IntoIterator<Item = Vec<Level>>) -> Self {
        let mut counts = BTreeMap::new();
        let mut trials = 0;
        for r in records {
            *counts.entry(r).or_insert(0) += 1;
            trials += 1;
        }
        EmpiricalDistribution { seed, trials, counts }
    }

    pub fn frequency(&self, record: &[Level]) -> f64 {
        self.counts.get(record).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// Fraction of records whose last two outcomes agree.
    pub fn parallel(&self) -> f64 {
        self.fraction(|r| matches!(r, [.., x, y] if x == y))
    }

    pub fn antiparallel(&self) -> f64 {
        self.fraction(|r| matches!(r, [.., x, y] if x != y))
    }

    fn fraction(&self, pred: impl Fn(&[Level]) -> bool) -> f64 {
        let hits: u64 = self.counts.iter().filter(|(r, _)| pred(r)).map(|(_, c)| c).sum();
        hits as f64 / self.trials as f64
    }
}

/// Record of trial `index`, drawn from stream `index` of `seed`.
pub fn outcome_trial(
    events: &[ProtocolEvent],
    params: &PhysicalParams,
    initial: &QuantumState,
    seed: u64,
    index: u64,
    tol: &Tolerances,
) -> Result<Vec<Level>> {
    let mut rng = RngStream::with_stream(seed, index);
    Ok(run_protocol_with(events, params, initial, &mut rng, tol)?.outcomes)
}

pub fn outcome_statistics(
    events: &[ProtocolEvent],
    params: &PhysicalParams,
    initial: &QuantumState,
    trials: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<EmpiricalDistribution> {
    if trials == 0 {
        return Err(Error::parameter("trials", "must be at least 1"));
    }
    let records = (0..trials).map(|i| outcome_trial(events, params, initial, seed, i, tol)).collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalDistribution::from_records(seed, records))
}
