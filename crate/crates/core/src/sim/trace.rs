// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::LogicValue;
use crate::error::SimError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Setup,
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingViolation<T> {
    pub time: T,
    pub instance: String,
    pub kind: ViolationKind,
}

/// Complete record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub module: String,
    /// Net names in lexicographic order; all per-net vectors share this index.
    pub nets: Vec<String>,
    /// Each waveform starts with the value at t = 0.
    pub waveforms: Vec<Vec<(T, LogicValue)>>,
    /// 0<->1 transitions per net.
    pub toggles: Vec<u64>,
    /// Changes into or out of X per net.
    pub x_changes: Vec<u64>,
    /// Output 0<->1 transitions per instance, in netlist order.
    pub cell_output_toggles: Vec<u64>,
    pub events: u64,
    pub horizon: T,
    pub clock_period: Option<T>,
    pub violations: Vec<TimingViolation<T>>,
    pub(crate) index: HashMap<String, usize>,
}

impl<T: Scalar> Trace<T> {
    pub fn net_index(&self, net: &str) -> Result<usize, SimError> {
        self.index.get(net).copied().ok_or_else(|| SimError::UnknownNet(net.to_string()))
    }

    pub fn waveform(&self, net: &str) -> Result<&[(T, LogicValue)], SimError> {
        Ok(&self.waveforms[self.net_index(net)?])
    }

    pub fn count_toggles(&self, net: &str) -> Result<u64, SimError> {
        Ok(self.toggles[self.net_index(net)?])
    }

    /// Value after every event at or before `t`.
    pub fn value_at(&self, net: &str, t: T) -> Result<LogicValue, SimError> {
        let w = self.waveform(net)?;
        let k = w.partition_point(|(time, _)| *time <= t);
        Ok(if k == 0 { w[0].1 } else { w[k - 1].1 })
    }

    /// Times of 0 -> 1 transitions.
    pub fn rising_edges(&self, net: &str) -> Result<Vec<T>, SimError> {
        self.edges(net, LogicValue::Zero, LogicValue::One)
    }

    /// Times of 1 -> 0 transitions.
    pub fn falling_edges(&self, net: &str) -> Result<Vec<T>, SimError> {
        self.edges(net, LogicValue::One, LogicValue::Zero)
    }

    fn edges(&self, net: &str, from: LogicValue, to: LogicValue) -> Result<Vec<T>, SimError> {
        let w = self.waveform(net)?;
        Ok(w.windows(2).filter(|p| p[0].1 == from && p[1].1 == to).map(|p| p[1].0).collect())
    }
}

/// Number of 0<->1 transitions on `net`.
pub fn count_toggles<T: Scalar>(t: &Trace<T>, net: &str) -> Result<u64, SimError> {
    t.count_toggles(net)
}
