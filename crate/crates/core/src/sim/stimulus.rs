// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LogicValue;
use crate::error::SimError;
use crate::netlist::{is_identifier, Netlist};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct StimEvent<T> {
    pub time: T,
    pub net: String,
    pub value: LogicValue,
}

/// Square wave: low at t = 0, rising at `k * period + (1 - duty) * period`,
/// falling at `(k + 1) * period`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockSpec<T> {
    pub net: String,
    pub period: T,
    pub duty: T,
}

impl<T: Scalar> ClockSpec<T> {
    pub fn first_rise(&self) -> T {
        self.period * (T::one() - self.duty)
    }

    pub fn rising_edges(&self, horizon: T) -> Vec<T> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = T::of_int(k) * self.period + self.first_rise();
            if t > horizon {
                return out;
            }
            out.push(t);
            k += 1;
        }
    }

    fn events(&self, horizon: T) -> Vec<StimEvent<T>> {
        let mut out = vec![StimEvent { time: T::zero(), net: self.net.clone(), value: LogicValue::Zero }];
        let mut k = 0u64;
        loop {
            let base = T::of_int(k) * self.period;
            let rise = base + self.first_rise();
            let fall = base + self.period;
            if rise > horizon {
                return out;
            }
            out.push(StimEvent { time: rise, net: self.net.clone(), value: LogicValue::One });
            if fall > horizon {
                return out;
            }
            out.push(StimEvent { time: fall, net: self.net.clone(), value: LogicValue::Zero });
            k += 1;
        }
    }
}

/// Input waveforms: explicit events plus clock directives, up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus<T> {
    pub events: Vec<StimEvent<T>>,
    pub clocks: Vec<ClockSpec<T>>,
    pub horizon: T,
}

impl<T: Scalar> Stimulus<T> {
    pub fn new(horizon: T) -> Self {
        Stimulus { events: Vec::new(), clocks: Vec::new(), horizon }
    }

    pub fn push(&mut self, time: T, net: &str, value: LogicValue) {
        self.events.push(StimEvent { time, net: net.to_string(), value });
    }

    /// Explicit and clock events merged in time order; at equal times
    /// explicit events precede clock events.
    pub fn expanded(&self) -> Vec<StimEvent<T>> {
        let mut all = self.events.clone();
        for c in &self.clocks {
            all.extend(c.events(self.horizon));
        }
        all.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap_or(std::cmp::Ordering::Equal));
        all
    }

    /// Rising edges of the first clock: the cycle sampling points.
    pub fn sample_times(&self) -> Vec<T> {
        self.clocks.first().map(|c| c.rising_edges(self.horizon)).unwrap_or_default()
    }

    pub fn clock_period(&self) -> Option<T> {
        self.clocks.first().map(|c| c.period)
    }

    /// Every driven net must be a module input.
    pub fn check_against(&self, n: &Netlist) -> Result<(), SimError> {
        for net in self.events.iter().map(|e| &e.net).chain(self.clocks.iter().map(|c| &c.net)) {
            if !n.is_input(net) {
                return Err(SimError::NotAnInput(net.clone()));
            }
        }
        Ok(())
    }
}

fn bad(line: usize, message: impl Into<String>) -> SimError {
    SimError::StimulusParse { line, message: message.into() }
}

fn time<T: Scalar>(line: usize, s: &str) -> Result<T, SimError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(T::of(v)),
        _ => Err(bad(line, format!("`{s}` is not a non-negative time"))),
    }
}

/// Parses `<time_ps> <net> <0|1|x>` lines plus `horizon <ps>` and
/// `clock <net> <period_ps> [<duty>]` directives. Without a horizon, the
/// horizon is the last explicit event time.
pub fn parse_stimulus<T: Scalar>(text: &str) -> Result<Stimulus<T>, SimError> {
    let mut stim = Stimulus::new(T::zero());
    let mut horizon = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["horizon", t] => {
                if horizon.replace(time::<T>(line, t)?).is_some() {
                    return Err(bad(line, "horizon given twice"));
                }
            }
            ["clock", net, period, rest @ ..] => {
                if !is_identifier(net) {
                    return Err(bad(line, format!("invalid net `{net}`")));
                }
                let period: T = time(line, period)?;
                if period <= T::zero() {
                    return Err(bad(line, "clock period must be positive"));
                }
                let duty = match rest {
                    [] => T::of(0.5),
                    [d] => match d.parse::<f64>() {
                        Ok(v) if v > 0.0 && v < 1.0 => T::of(v),
                        _ => return Err(bad(line, format!("duty `{d}` must lie in (0, 1)"))),
                    },
                    _ => return Err(bad(line, "expected `clock <net> <period> [<duty>]`")),
                };
                stim.clocks.push(ClockSpec { net: net.to_string(), period, duty });
            }
            [t, net, v] => {
                let t: T = time(line, t)?;
                if !is_identifier(net) {
                    return Err(bad(line, format!("invalid net `{net}`")));
                }
                let value: LogicValue = v.parse().map_err(|e: String| bad(line, e))?;
                if stim.events.last().is_some_and(|e| e.time > t) {
                    return Err(bad(line, "event times must be non-decreasing"));
                }
                stim.push(t, net, value);
            }
            _ => return Err(bad(line, format!("unrecognized line `{body}`"))),
        }
    }
    let last = stim.events.last().map(|e| e.time).unwrap_or_else(T::zero);
    stim.horizon = match horizon {
        Some(h) if h < last => return Err(bad(0, "horizon precedes the last event")),
        Some(h) => h,
        None => last,
    };
    Ok(stim)
}

pub fn write_stimulus<T: Scalar>(s: &Stimulus<T>) -> String {
    let mut out = String::new();
    for c in &s.clocks {
        let _ = writeln!(out, "clock {} {} {}", c.net, c.period, c.duty);
    }
    let _ = writeln!(out, "horizon {}", s.horizon);
    for e in &s.events {
        let _ = writeln!(out, "{} {} {}", e.time, e.net, e.value);
    }
    out
}

/// Random data on `data_nets` under a 50% duty clock. Each net starts at 0
/// and, in every cycle, flips with probability `alpha` at one eighth of the
/// period (well inside the clock-low phase). The uniform draws do not depend
/// on `alpha`, so for a fixed seed the toggles at a higher activity are a
/// superset of those at a lower one.
pub fn random_data_stimulus<T: Scalar>(
    clock: &str,
    data_nets: &[String],
    period: T,
    cycles: usize,
    alpha: f64,
    seed: u64,
) -> Stimulus<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stim = Stimulus::new(T::of_int(cycles as u64) * period);
    stim.clocks.push(ClockSpec { net: clock.to_string(), period, duty: T::of(0.5) });
    let mut state = vec![false; data_nets.len()];
    for net in data_nets {
        stim.push(T::zero(), net, LogicValue::Zero);
    }
    let offset = period / T::of_int(8);
    for k in 0..cycles {
        let t = T::of_int(k as u64) * period + offset;
        for (i, net) in data_nets.iter().enumerate() {
            let u: f64 = rng.random();
            if u < alpha {
                state[i] = !state[i];
                stim.push(t, net, LogicValue::from(state[i]));
            }
        }
    }
    stim
}
