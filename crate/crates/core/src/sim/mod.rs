// SPDX-License-Identifier: Apache-2.0

//! Deterministic event-driven gate-level simulation over three-valued logic.
//!
//! Cells switch after their rise or fall delay with inertial filtering: a
//! pending output change is cancelled when the output is re-evaluated to its
//! present value before the change matures. All events sharing a timestamp
//! are applied as one batch, ordered by net name and then insertion order,
//! and cells then see the batch's new values. Flip-flops capture the value
//! their `D` pin held before the batch, so data changing at the very instant
//! of the clock edge is not captured.

mod engine;
mod stimulus;
mod trace;
mod vcd;

use std::fmt;
use std::str::FromStr;

pub use engine::{check_equivalence, simulate, simulate_with_delays, DelayAnnotation, Divergence, SimOptions};
pub use stimulus::{parse_stimulus, random_data_stimulus, write_stimulus, ClockSpec, StimEvent, Stimulus};
pub use trace::{count_toggles, TimingViolation, Trace, ViolationKind};
pub use vcd::{vcd_string, write_vcd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogicValue {
    Zero,
    One,
    X,
}

impl LogicValue {
    pub fn is_known(self) -> bool {
        self != LogicValue::X
    }

    /// A 0 input controls the result even when the other input is X.
    pub fn and(self, other: Self) -> Self {
        use LogicValue::*;
        match (self, other) {
            (Zero, _) | (_, Zero) => Zero,
            (One, One) => One,
            _ => X,
        }
    }

    pub fn xor(self, other: Self) -> Self {
        use LogicValue::*;
        match (self, other) {
            (X, _) | (_, X) => X,
            (a, b) => LogicValue::from(a != b),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            LogicValue::Zero => '0',
            LogicValue::One => '1',
            LogicValue::X => 'x',
        }
    }
}

impl From<bool> for LogicValue {
    fn from(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }
}

impl std::ops::Not for LogicValue {
    type Output = Self;

    fn not(self) -> Self {
        match self {
            LogicValue::Zero => LogicValue::One,
            LogicValue::One => LogicValue::Zero,
            LogicValue::X => LogicValue::X,
        }
    }
}

impl fmt::Display for LogicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_char().encode_utf8(&mut [0; 4]))
    }
}

impl FromStr for LogicValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(LogicValue::Zero),
            "1" => Ok(LogicValue::One),
            "x" | "X" => Ok(LogicValue::X),
            other => Err(format!("`{other}` is not a logic value (0, 1 or x)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::LogicValue::{self, *};

    const ALL: [LogicValue; 3] = [Zero, One, X];

    #[test]
    fn controlling_zero_beats_x() {
        assert_eq!(Zero.and(X), Zero);
        assert_eq!(X.and(Zero), Zero);
        assert_eq!(One.and(X), X);
        assert_eq!(X.xor(One), X);
        assert_eq!(!X, X);
    }

    #[test]
    fn binary_truth_tables() {
        for a in [false, true] {
            for b in [false, true] {
                let (la, lb) = (LogicValue::from(a), LogicValue::from(b));
                assert_eq!(la.and(lb), LogicValue::from(a & b));
                assert_eq!(la.xor(lb), LogicValue::from(a ^ b));
            }
            assert_eq!(!LogicValue::from(a), LogicValue::from(!a));
        }
    }

    #[test]
    fn operators_commute() {
        for a in ALL {
            for b in ALL {
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.xor(b), b.xor(a));
            }
        }
    }
}
