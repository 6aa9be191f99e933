// SPDX-License-Identifier: Apache-2.0

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;

use super::trace::{TimingViolation, Trace, ViolationKind};
use super::{LogicValue, Stimulus};
use crate::error::SimError;
use crate::netlist::{CellFunction, Netlist};
use crate::scalar::Scalar;
use crate::techlib::LibraryProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Start every flip-flop (and its Q net) at 0 instead of X.
    pub init_ff_zero: bool,
    /// Enforce flip-flop setup/hold windows; a violation drives Q to X.
    pub timing_checks: bool,
    /// Maximum number of processed events before the run is aborted.
    pub event_limit: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { init_ff_zero: false, timing_checks: false, event_limit: 50_000_000 }
    }
}

impl SimOptions {
    pub fn zero_init() -> Self {
        SimOptions { init_ff_zero: true, ..Default::default() }
    }
}

/// Per-instance `(rise, fall)` delays overriding the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayAnnotation<T> {
    pub delays: Vec<(T, T)>,
}

impl<T: Scalar> DelayAnnotation<T> {
    pub fn from_profile(n: &Netlist, p: &LibraryProfile<T>) -> Result<Self, SimError> {
        let delays =
            n.instances.iter().map(|i| p.cell(&i.cell_type).map(|c| (c.t_rise, c.t_fall))).collect::<Result<_, _>>()?;
        Ok(DelayAnnotation { delays })
    }

    /// Scales every rise and fall delay by an independent factor drawn
    /// uniformly from `[1 - fraction, 1 + fraction]`.
    pub fn perturbed<R: Rng>(&self, fraction: T, rng: &mut R) -> Self {
        let frac = fraction.as_f64();
        let mut factor = || T::of(1.0 + frac * (2.0 * rng.random::<f64>() - 1.0));
        DelayAnnotation { delays: self.delays.iter().map(|&(r, f)| (r * factor(), f * factor())).collect() }
    }
}

struct Cell<T> {
    function: CellFunction,
    inputs: Vec<usize>,
    output: usize,
    rise: T,
    fall: T,
    setup: T,
    hold: T,
}

struct Event<T> {
    time: T,
    net: usize,
    seq: u64,
    value: LogicValue,
    from_cell: bool,
}

impl<T: Scalar> Event<T> {
    fn key(&self, other: &Self) -> Ordering {
        self.time
            .partial_cmp(&other.time)
            .unwrap_or(Ordering::Equal)
            .then(self.net.cmp(&other.net))
            .then(self.seq.cmp(&other.seq))
    }
}

impl<T: Scalar> PartialEq for Event<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Event<T> {}
impl<T: Scalar> PartialOrd for Event<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Event<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key(other)
    }
}

struct Engine<T> {
    cells: Vec<Cell<T>>,
    values: Vec<LogicValue>,
    waveforms: Vec<Vec<(T, LogicValue)>>,
    toggles: Vec<u64>,
    x_changes: Vec<u64>,
    cell_toggles: Vec<u64>,
    driver: Vec<Option<usize>>,
    fanout: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<Event<T>>>,
    pending: Vec<Option<(u64, LogicValue)>>,
    seq: u64,
    ff_state: Vec<LogicValue>,
    last_d_change: Vec<Option<T>>,
    last_capture: Vec<Option<T>>,
    violations: Vec<TimingViolation<T>>,
    checks: bool,
}

impl<T: Scalar> Engine<T> {
    fn schedule(&mut self, net: usize, value: LogicValue, now: T, rise: T, fall: T) {
        match self.pending[net] {
            Some((_, v)) if v == value => return,
            Some(_) => self.pending[net] = None,
            None => {}
        }
        if value == self.values[net] {
            return;
        }
        let delay = match value {
            LogicValue::One => rise,
            LogicValue::Zero => fall,
            LogicValue::X => rise.min_of(fall),
        };
        self.seq += 1;
        self.pending[net] = Some((self.seq, value));
        self.heap.push(Reverse(Event { time: now + delay, net, seq: self.seq, value, from_cell: true }));
    }

    fn evaluate(&mut self, idx: usize, now: T, before: &[Option<LogicValue>], instance_names: &[String]) {
        let cell = &self.cells[idx];
        let v = |k: usize| self.values[cell.inputs[k]];
        let (out, rise, fall) = (cell.output, cell.rise, cell.fall);
        let next = match cell.function {
            CellFunction::Inv | CellFunction::LectorInv => !v(0),
            CellFunction::And2 | CellFunction::LectorAnd2 => v(0).and(v(1)),
            CellFunction::Nand2 => !v(0).and(v(1)),
            CellFunction::Xor2 => v(0).xor(v(1)),
            CellFunction::DffConv => {
                let (d, clk) = (cell.inputs[0], cell.inputs[1]);
                let (setup, hold) = (cell.setup, cell.hold);
                let clk_old = before[clk].unwrap_or(self.values[clk]);
                let clk_new = self.values[clk];
                let d_pre = before[d].unwrap_or(self.values[d]);
                let mut state = self.ff_state[idx];
                let captured = match (clk_old, clk_new) {
                    (LogicValue::Zero, LogicValue::One) => {
                        state = d_pre;
                        true
                    }
                    (LogicValue::X, LogicValue::One) | (LogicValue::Zero, LogicValue::X) => {
                        if d_pre != state {
                            state = LogicValue::X;
                        }
                        true
                    }
                    _ => false,
                };
                if captured {
                    if self.checks && self.last_d_change[idx].is_some_and(|t| now - t < setup) {
                        state = LogicValue::X;
                        self.violation(now, idx, ViolationKind::Setup, instance_names);
                    }
                    self.last_capture[idx] = Some(now);
                }
                if before[d].is_some() {
                    if self.checks && self.last_capture[idx].is_some_and(|t| now - t < hold) {
                        state = LogicValue::X;
                        self.violation(now, idx, ViolationKind::Hold, instance_names);
                    }
                    self.last_d_change[idx] = Some(now);
                }
                self.ff_state[idx] = state;
                state
            }
        };
        self.schedule(out, next, now, rise, fall);
    }

    fn violation(&mut self, time: T, idx: usize, kind: ViolationKind, instance_names: &[String]) {
        self.violations.push(TimingViolation { time, instance: instance_names[idx].clone(), kind });
    }

    fn commit(&mut self, net: usize, value: LogicValue, now: T, initial: bool) -> Option<LogicValue> {
        let old = self.values[net];
        if old == value {
            return None;
        }
        self.values[net] = value;
        if initial {
            self.waveforms[net][0].1 = value;
            return Some(old);
        }
        self.waveforms[net].push((now, value));
        if old.is_known() && value.is_known() {
            self.toggles[net] += 1;
            if let Some(d) = self.driver[net] {
                self.cell_toggles[d] += 1;
            }
        } else {
            self.x_changes[net] += 1;
        }
        Some(old)
    }
}

/// Simulates with the profile's nominal delays.
pub fn simulate<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
    opts: &SimOptions,
) -> Result<Trace<T>, SimError> {
    let delays = DelayAnnotation::from_profile(n, p)?;
    simulate_with_delays(n, p, s, opts, &delays)
}

/// Simulates with explicit per-instance delays.
pub fn simulate_with_delays<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
    opts: &SimOptions,
    delays: &DelayAnnotation<T>,
) -> Result<Trace<T>, SimError> {
    if delays.delays.len() != n.instances.len() {
        return Err(SimError::AnnotationMismatch { expected: n.instances.len(), got: delays.delays.len() });
    }
    s.check_against(n)?;
    let names: Vec<String> = n.nets.iter().cloned().collect();
    let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let net = |name: &str| index.get(name).copied().ok_or_else(|| SimError::UnknownNet(name.to_string()));

    let mut cells = Vec::with_capacity(n.instances.len());
    let mut driver = vec![None; names.len()];
    let mut fanout = vec![Vec::new(); names.len()];
    for (i, inst) in n.instances.iter().enumerate() {
        let spec = p.cell(&inst.cell_type)?;
        let inputs = inst
            .function
            .input_pins()
            .iter()
            .map(|pin| net(inst.pin(pin).ok_or_else(|| SimError::UnknownNet(format!("{}.{pin}", inst.name)))?))
            .collect::<Result<Vec<_>, _>>()?;
        let output = net(inst.output_net().ok_or_else(|| SimError::UnknownNet(format!("{}.out", inst.name)))?)?;
        for &k in &inputs {
            if !fanout[k].contains(&i) {
                fanout[k].push(i);
            }
        }
        driver[output] = Some(i);
        let (rise, fall) = delays.delays[i];
        cells.push(Cell { function: inst.function, inputs, output, rise, fall, setup: spec.setup, hold: spec.hold });
    }

    let count = names.len();
    let mut eng = Engine {
        values: vec![LogicValue::X; count],
        waveforms: vec![vec![(T::zero(), LogicValue::X)]; count],
        toggles: vec![0; count],
        x_changes: vec![0; count],
        cell_toggles: vec![0; cells.len()],
        driver,
        fanout,
        heap: BinaryHeap::new(),
        pending: vec![None; count],
        seq: 0,
        ff_state: vec![LogicValue::X; cells.len()],
        last_d_change: vec![None; cells.len()],
        last_capture: vec![None; cells.len()],
        violations: Vec::new(),
        checks: opts.timing_checks,
        cells,
    };
    if opts.init_ff_zero {
        for i in 0..eng.cells.len() {
            if eng.cells[i].function.is_sequential() {
                eng.ff_state[i] = LogicValue::Zero;
                let q = eng.cells[i].output;
                eng.values[q] = LogicValue::Zero;
                eng.waveforms[q][0].1 = LogicValue::Zero;
            }
        }
    }
    for ev in s.expanded() {
        eng.seq += 1;
        let k = net(&ev.net)?;
        eng.heap.push(Reverse(Event { time: ev.time, net: k, seq: eng.seq, value: ev.value, from_cell: false }));
    }

    let instance_names: Vec<String> = n.instances.iter().map(|i| i.name.clone()).collect();
    let mut before: Vec<Option<LogicValue>> = vec![None; count];
    let mut touched: Vec<usize> = Vec::new();
    let mut stamp = vec![0u64; eng.cells.len()];
    let mut batch_no = 0u64;
    let mut processed = 0u64;
    let mut initial = true;
    loop {
        let now = if initial {
            T::zero()
        } else {
            match eng.heap.peek() {
                Some(Reverse(ev)) if ev.time <= s.horizon => ev.time,
                _ => break,
            }
        };
        while let Some(Reverse(ev)) = eng.heap.peek() {
            if ev.time.partial_cmp(&now) != Some(Ordering::Equal) {
                break;
            }
            let Reverse(ev) = eng.heap.pop().expect("peeked");
            if ev.from_cell {
                if eng.pending[ev.net].map(|(seq, _)| seq) != Some(ev.seq) {
                    continue;
                }
                eng.pending[ev.net] = None;
            }
            processed += 1;
            if processed > opts.event_limit {
                return Err(SimError::EventLimit(opts.event_limit));
            }
            if let Some(old) = eng.commit(ev.net, ev.value, now, initial) {
                if before[ev.net].is_none() {
                    before[ev.net] = Some(old);
                    touched.push(ev.net);
                }
            }
        }

        batch_no += 1;
        let mut affected: Vec<usize> = if initial {
            (0..eng.cells.len()).collect()
        } else {
            let mut v = Vec::new();
            for &k in &touched {
                for &c in &eng.fanout[k] {
                    if stamp[c] != batch_no {
                        stamp[c] = batch_no;
                        v.push(c);
                    }
                }
            }
            v
        };
        affected.sort_unstable();
        for c in affected {
            eng.evaluate(c, now, &before, &instance_names);
        }
        for k in touched.drain(..) {
            before[k] = None;
        }
        initial = false;
    }

    Ok(Trace {
        module: n.name.clone(),
        nets: names.clone(),
        waveforms: eng.waveforms,
        toggles: eng.toggles,
        x_changes: eng.x_changes,
        cell_output_toggles: eng.cell_toggles,
        events: processed,
        horizon: s.horizon,
        clock_period: s.clock_period(),
        violations: eng.violations,
        index,
    })
}

/// First cycle-sampled output mismatch between two simulations.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence<T> {
    pub cycle: usize,
    pub time: T,
    pub net: String,
    pub left: LogicValue,
    pub right: LogicValue,
}

/// Simulates both netlists under `s` and compares their outputs at every
/// rising edge of the stimulus clock and at the horizon.
pub fn check_equivalence<T: Scalar>(
    left: &Netlist,
    right: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
    opts: &SimOptions,
) -> Result<Option<Divergence<T>>, SimError> {
    let a = simulate(left, p, s, opts)?;
    let b = simulate(right, p, s, opts)?;
    let mut times = s.sample_times();
    if times.last() != Some(&s.horizon) {
        times.push(s.horizon);
    }
    for (cycle, &t) in times.iter().enumerate() {
        for net in &left.outputs {
            let (l, r) = (a.value_at(net, t)?, b.value_at(net, t)?);
            if l != r {
                return Ok(Some(Divergence { cycle, time: t, net: net.clone(), left: l, right: r }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_register_demo, Instance};
    use crate::sim::parse_stimulus;

    fn inverter(delay: f64) -> (Netlist, LibraryProfile<f64>) {
        let mut n = Netlist::new("inv");
        n.add_input("a");
        n.add_output("y");
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "a"), ("Y", "y")]));
        let mut p = LibraryProfile::bundled("paper-match").unwrap();
        let inv = p.cells.get_mut("INV").unwrap();
        inv.t_rise = delay;
        inv.t_fall = delay;
        (n, p)
    }

    #[test]
    fn single_inverter_delay() {
        let (n, p) = inverter(10.0);
        let s = parse_stimulus("0 a 0\n100 a 1\nhorizon 200\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::default()).unwrap();
        assert_eq!(
            t.waveform("y").unwrap(),
            [(0.0, LogicValue::X), (10.0, LogicValue::One), (110.0, LogicValue::Zero)]
        );
        assert_eq!(t.count_toggles("y").unwrap(), 1);
        assert_eq!(t.waveform("a").unwrap()[0], (0.0, LogicValue::Zero));
    }

    #[test]
    fn inertial_delay_swallows_short_pulse() {
        let (n, p) = inverter(10.0);
        let s = parse_stimulus("0 a 0\n100 a 1\n104 a 0\n200 a 1\nhorizon 300\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::default()).unwrap();
        assert_eq!(t.falling_edges("y").unwrap(), [210.0]);
        assert_eq!(t.count_toggles("y").unwrap(), 1);
    }

    #[test]
    fn stable_x_loop_never_settles_and_never_oscillates() {
        let mut n = Netlist::new("ring");
        n.add_input("unused");
        n.add_wire("a");
        n.add_wire("b");
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "a"), ("Y", "b")]));
        n.add_instance(Instance::standard(CellFunction::Inv, "u2", &[("A", "b"), ("Y", "a")]));
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = parse_stimulus("0 unused 0\n10000 unused 1\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::default()).unwrap();
        assert_eq!(t.waveform("a").unwrap(), [(0.0, LogicValue::X)]);
        assert_eq!(t.waveform("b").unwrap(), [(0.0, LogicValue::X)]);
    }

    #[test]
    fn oscillation_hits_event_limit() {
        let mut n = Netlist::new("osc");
        n.add_input("en");
        n.add_output("y");
        n.add_instance(Instance::standard(CellFunction::Nand2, "u1", &[("A", "en"), ("B", "y"), ("Y", "y")]));
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = parse_stimulus("0 en 0\n100 en 1\nhorizon 1000000000\n").unwrap();
        let opts = SimOptions { event_limit: 10_000, ..Default::default() };
        assert!(matches!(simulate(&n, &p, &s, &opts), Err(SimError::EventLimit(10_000))));
    }

    #[test]
    fn stimulus_must_drive_inputs() {
        let (n, p) = inverter(10.0);
        let s = parse_stimulus("0 y 0\n").unwrap();
        assert!(matches!(simulate(&n, &p, &s, &SimOptions::default()), Err(SimError::NotAnInput(net)) if net == "y"));
    }

    #[test]
    fn flip_flop_captures_on_rising_edge() {
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = parse_stimulus("clock clk 1000\nhorizon 3000\n0 D1 1\n1200 D1 0\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::default()).unwrap();
        // Rising edges at 500, 1500, 2500; t_rise = 60, t_fall = 80.
        assert_eq!(
            t.waveform("Q1").unwrap(),
            [(0.0, LogicValue::X), (560.0, LogicValue::One), (1580.0, LogicValue::Zero)]
        );
    }

    #[test]
    fn data_at_the_edge_is_not_captured() {
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = parse_stimulus("clock clk 1000\nhorizon 1000\n0 D1 0\n500 D1 1\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        assert_eq!(t.value_at("Q1", 1000.0).unwrap(), LogicValue::Zero);
    }

    #[test]
    fn setup_violation_drives_x() {
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap(); // setup = 10
        let s = parse_stimulus("clock clk 1000\nhorizon 1000\n0 D1 0\n495 D1 1\n").unwrap();
        let opts = SimOptions { timing_checks: true, init_ff_zero: true, ..Default::default() };
        let t = simulate(&n, &p, &s, &opts).unwrap();
        assert_eq!(t.value_at("Q1", 1000.0).unwrap(), LogicValue::X);
        assert_eq!(t.violations.len(), 1);
        assert_eq!(t.violations[0].kind, ViolationKind::Setup);
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        assert_eq!(t.value_at("Q1", 1000.0).unwrap(), LogicValue::One);
    }

    #[test]
    fn hold_violation_drives_x() {
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap(); // hold = 5
        let s = parse_stimulus("clock clk 1000\nhorizon 1000\n0 D1 1\n503 D1 0\n").unwrap();
        let opts = SimOptions { timing_checks: true, init_ff_zero: true, ..Default::default() };
        let t = simulate(&n, &p, &s, &opts).unwrap();
        assert_eq!(t.value_at("Q1", 1000.0).unwrap(), LogicValue::X);
        assert_eq!(t.violations[0].kind, ViolationKind::Hold);
    }

    #[test]
    fn x_clock_edge_keeps_matching_state() {
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = parse_stimulus("0 clk 0\n0 D1 0\n100 clk x\n200 clk 1\n300 D1 1\n400 clk x\nhorizon 600\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        assert_eq!(t.value_at("Q1", 350.0).unwrap(), LogicValue::Zero);
        let s = parse_stimulus("0 clk 0\n0 D1 1\n100 clk x\nhorizon 600\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        assert_eq!(t.value_at("Q1", 600.0).unwrap(), LogicValue::X);
    }

    #[test]
    fn cell_toggles_match_output_net_toggles() {
        let n = build_register_demo(2).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let s = crate::sim::random_data_stimulus("clk", &["D1".into(), "D2".into()], 1000.0, 200, 0.5, 1);
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        for (i, inst) in n.instances.iter().enumerate() {
            assert_eq!(t.cell_output_toggles[i], t.count_toggles(inst.output_net().unwrap()).unwrap());
        }
        assert_eq!(t.count_toggles("clk").unwrap(), 2 * 200);
    }

    #[test]
    fn rational_time_simulation() {
        use num_rational::Ratio;
        let n = build_register_demo(1).unwrap();
        let p: LibraryProfile<Ratio<i64>> = LibraryProfile::bundled("symmetric").unwrap();
        let s = parse_stimulus("clock clk 1000\nhorizon 2000\n0 D1 1\n").unwrap();
        let t = simulate(&n, &p, &s, &SimOptions::zero_init()).unwrap();
        assert_eq!(t.rising_edges("Q1").unwrap(), [Ratio::from_integer(550)]);
    }

    #[test]
    fn perturbation_bounds() {
        use rand::SeedableRng;
        let n = build_register_demo(4).unwrap();
        let p: LibraryProfile<f64> = LibraryProfile::bundled("paper-match").unwrap();
        let nominal = DelayAnnotation::from_profile(&n, &p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pert = nominal.perturbed(0.02, &mut rng);
        for (&(r0, f0), &(r, f)) in nominal.delays.iter().zip(&pert.delays) {
            assert!((r / r0 - 1.0).abs() <= 0.02 && (f / f0 - 1.0).abs() <= 0.02);
        }
        assert_eq!(nominal.perturbed(0.0, &mut rng), nominal);
    }
}
