// SPDX-License-Identifier: Apache-2.0

//! Activity-based average power.
//!
//! Over a window `W` (ps) with per-cell output toggle counts `n_c`:
//!
//! ```text
//! E_dyn  = sum_c n_c * e_toggle(c) + sum_ff toggles(CLK pin) * e_clock(ff)
//! E_cont = sum_c n_c * e_contention(c)
//! P_x    = E_x / W              fJ/ps = mW, reported in uW
//! P_leak = sum_c p_leak(c)      nW, reported in uW
//! ```
//!
//! The clock-pin term charges a flip-flop's internal clock buffering on
//! every edge it sees, which is where gating pays off. Module inputs are
//! ideal sources and draw nothing.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::PowerError;
use crate::gating::gated_clock_of;
use crate::netlist::{CellFunction, Netlist};
use crate::scalar::{fixed, Scalar};
use crate::sim::{random_data_stimulus, simulate, SimOptions, Stimulus, Trace};
use crate::techlib::{effective_leakage, transistor_total, LibraryProfile};

/// Minimum cycles for an activity sweep point.
pub const MIN_SWEEP_CYCLES: usize = 100;

/// Energies in fJ accumulated over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTotals<T> {
    pub switching: T,
    pub clock_pin: T,
    pub contention: T,
}

impl<T: Scalar> EnergyTotals<T> {
    pub fn dynamic(&self) -> T {
        self.switching + self.clock_pin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport<T> {
    /// Library profile name, shown as the process technology.
    pub technology: String,
    pub p_dynamic: T,
    pub p_contention: T,
    pub p_leakage: T,
    pub p_total: T,
    pub sim_window: T,
    /// GHz; absent when the stimulus has no clock.
    pub clock_freq: Option<T>,
    pub transistor_count: u64,
}

fn check_trace<T: Scalar>(t: &Trace<T>, n: &Netlist) -> Result<(), PowerError> {
    if t.module != n.name || t.cell_output_toggles.len() != n.instances.len() || t.nets.len() != n.nets.len() {
        return Err(PowerError::TraceMismatch(format!("trace of `{}` against netlist `{}`", t.module, n.name)));
    }
    Ok(())
}

/// Energy terms before division by the window.
pub fn energy_totals<T: Scalar>(
    t: &Trace<T>,
    n: &Netlist,
    p: &LibraryProfile<T>,
) -> Result<EnergyTotals<T>, PowerError> {
    check_trace(t, n)?;
    let mut e = EnergyTotals { switching: T::zero(), clock_pin: T::zero(), contention: T::zero() };
    for (inst, &toggles) in n.instances.iter().zip(&t.cell_output_toggles) {
        let spec = p.cell(&inst.cell_type)?;
        let k = T::of_int(toggles);
        e.switching = e.switching + k * spec.e_toggle;
        e.contention = e.contention + k * spec.e_contention;
        if inst.function == CellFunction::DffConv {
            let clk = inst.pin("CLK").expect("flip-flop binds CLK");
            e.clock_pin = e.clock_pin + T::of_int(t.count_toggles(clk)?) * spec.e_clock;
        }
    }
    Ok(e)
}

fn fj_per_ps_to_uw<T: Scalar>(e: T, window: T) -> T {
    e / window * T::of_int(1000)
}

pub fn estimate_power<T: Scalar>(
    t: &Trace<T>,
    n: &Netlist,
    p: &LibraryProfile<T>,
) -> Result<PowerReport<T>, PowerError> {
    if t.horizon <= T::zero() {
        return Err(PowerError::ZeroWindow);
    }
    let e = energy_totals(t, n, p)?;
    let p_dynamic = fj_per_ps_to_uw(e.dynamic(), t.horizon);
    let p_contention = fj_per_ps_to_uw(e.contention, t.horizon);
    let p_leakage = effective_leakage(n, p)? / T::of_int(1000);
    Ok(PowerReport {
        technology: p.name.clone(),
        p_dynamic,
        p_contention,
        p_leakage,
        p_total: p_dynamic + p_contention + p_leakage,
        sim_window: t.horizon,
        clock_freq: t.clock_period.map(|period| T::of_int(1000) / period),
        transistor_count: transistor_total(n, p)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub gated: PowerReport<T>,
    pub ungated: PowerReport<T>,
    pub savings_percent: T,
    /// Externally quoted savings figure, printed beside the computed one.
    pub claimed_savings: Option<T>,
}

/// `100 (u - g) / u`, or 0 when the ungated total is 0.
pub fn savings_percent<T: Scalar>(gated_total: T, ungated_total: T) -> T {
    if ungated_total == T::zero() {
        return T::zero();
    }
    T::of_int(100) * (ungated_total - gated_total) / ungated_total
}

impl<T: Scalar> ComparisonReport<T> {
    pub fn from_reports(gated: PowerReport<T>, ungated: PowerReport<T>) -> Self {
        let savings_percent = savings_percent(gated.p_total, ungated.p_total);
        ComparisonReport { gated, ungated, savings_percent, claimed_savings: None }
    }

    pub fn with_claimed_savings(mut self, claimed: T) -> Self {
        self.claimed_savings = Some(claimed);
        self
    }

    /// A note when the claimed figure differs from the computed one at two
    /// decimals.
    pub fn discrepancy_note(&self) -> Option<String> {
        let claimed = self.claimed_savings?;
        let (c, s) = (fixed(claimed, 2), fixed(self.savings_percent, 2));
        (c != s).then(|| format!("note: claimed savings {c}% differs from computed {s}%"))
    }

    pub fn render_table(&self) -> String {
        let (g, u) = (&self.gated, &self.ungated);
        let freq = |r: &PowerReport<T>| r.clock_freq.map(|f| fixed(f, 3)).unwrap_or_else(|| "-".into());
        let rows: [(&str, String, String); 7] = [
            ("Process Technology", g.technology.clone(), u.technology.clone()),
            ("Average Power (uW)", fixed(g.p_total, 3), fixed(u.p_total, 3)),
            ("Transistor Count", g.transistor_count.to_string(), u.transistor_count.to_string()),
            ("Clock Frequency (GHz)", freq(g), freq(u)),
            ("Dynamic Power (uW)", fixed(g.p_dynamic, 3), fixed(u.p_dynamic, 3)),
            ("Contention Power (uW)", fixed(g.p_contention, 3), fixed(u.p_contention, 3)),
            ("Leakage Power (uW)", fixed(g.p_leakage, 3), fixed(u.p_leakage, 3)),
        ];
        let mut out = String::new();
        let _ = writeln!(out, "{:<24}{:>14}{:>14}", "Metric", "Gated", "Non-gated");
        for (label, a, b) in rows {
            let _ = writeln!(out, "{label:<24}{a:>14}{b:>14}");
        }
        let _ = writeln!(out, "{:<24}{:>14}", "Savings (%)", fixed(self.savings_percent, 3));
        if let Some(note) = self.discrepancy_note() {
            let _ = writeln!(out, "{note}");
        }
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        for (side, r) in [("gated", &self.gated), ("ungated", &self.ungated)] {
            let _ = writeln!(out, "{side}_p_dynamic_uw={}", fixed(r.p_dynamic, 6));
            let _ = writeln!(out, "{side}_p_contention_uw={}", fixed(r.p_contention, 6));
            let _ = writeln!(out, "{side}_p_leakage_uw={}", fixed(r.p_leakage, 6));
            let _ = writeln!(out, "{side}_p_total_uw={}", fixed(r.p_total, 6));
            let _ = writeln!(out, "{side}_transistors={}", r.transistor_count);
            let _ = writeln!(out, "{side}_window_ps={}", fixed(r.sim_window, 3));
        }
        let _ = writeln!(out, "savings_percent={}", fixed(self.savings_percent, 6));
        if let Some(c) = self.claimed_savings {
            let _ = writeln!(out, "claimed_savings_percent={}", fixed(c, 6));
        }
        out
    }
}

fn check_interfaces(a: &Netlist, b: &Netlist) -> Result<(), PowerError> {
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    if sorted(&a.inputs) != sorted(&b.inputs) {
        return Err(PowerError::InterfaceMismatch(format!("inputs {:?} vs {:?}", a.inputs, b.inputs)));
    }
    if sorted(&a.outputs) != sorted(&b.outputs) {
        return Err(PowerError::InterfaceMismatch(format!("outputs {:?} vs {:?}", a.outputs, b.outputs)));
    }
    Ok(())
}

/// A comparison with the gated and ungated traces behind it.
pub type TracedComparison<T> = (ComparisonReport<T>, Trace<T>, Trace<T>);

/// Simulates both netlists under `s` with flip-flops reset to 0.
pub fn compare_traces<T: Scalar>(
    gated_n: &Netlist,
    ungated_n: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
) -> Result<TracedComparison<T>, PowerError> {
    check_interfaces(gated_n, ungated_n)?;
    let opts = SimOptions::zero_init();
    let (tg, tu) = rayon::join(|| simulate(gated_n, p, s, &opts), || simulate(ungated_n, p, s, &opts));
    let (tg, tu) = (tg?, tu?);
    let report = ComparisonReport::from_reports(estimate_power(&tg, gated_n, p)?, estimate_power(&tu, ungated_n, p)?);
    Ok((report, tg, tu))
}

pub fn compare<T: Scalar>(
    gated_n: &Netlist,
    ungated_n: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
) -> Result<ComparisonReport<T>, PowerError> {
    Ok(compare_traces(gated_n, ungated_n, p, s)?.0)
}

/// The module input feeding flip-flop clock pins, and the other inputs.
pub fn clock_and_data_inputs(n: &Netlist) -> Result<(String, Vec<String>), PowerError> {
    let source = |ff: &crate::netlist::Instance| -> Option<String> {
        let clk = ff.pin("CLK")?;
        if n.is_input(clk) {
            return Some(clk.to_string());
        }
        let gate = n.driver_of(gated_clock_of(n, &ff.name)?)?;
        gate.pin("A").filter(|a| n.is_input(a)).map(str::to_string)
    };
    let clock = n
        .instances
        .iter()
        .filter(|i| i.function == CellFunction::DffConv)
        .find_map(source)
        .ok_or_else(|| PowerError::NoClock(n.name.clone()))?;
    let data = n.inputs.iter().filter(|i| **i != clock).cloned().collect();
    Ok((clock, data))
}

/// Savings at each data activity, on seeded random data with every input
/// except the clock flipping with per-cycle probability `alpha`.
pub fn activity_sweep<T: Scalar>(
    gated_n: &Netlist,
    ungated_n: &Netlist,
    p: &LibraryProfile<T>,
    alphas: &[f64],
    cycles: usize,
    clock_period: T,
    seed: u64,
) -> Result<Vec<(f64, T)>, PowerError> {
    if cycles < MIN_SWEEP_CYCLES {
        return Err(PowerError::TooFewCycles(cycles));
    }
    if let Some(&a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(PowerError::BadActivity(a));
    }
    check_interfaces(gated_n, ungated_n)?;
    let (clock, data) = clock_and_data_inputs(ungated_n)?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let s = random_data_stimulus(&clock, &data, clock_period, cycles, alpha, seed);
            Ok((alpha, compare(gated_n, ungated_n, p, &s)?.savings_percent))
        })
        .collect()
}
