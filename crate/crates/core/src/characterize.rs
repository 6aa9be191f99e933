// SPDX-License-Identifier: Apache-2.0

//! Register timing characterization by simulated bisection, and delay
//! variation trials.
//!
//! A bench is a netlist with exactly one `DFF_CONV` whose `D` and clock
//! source are module inputs, optionally behind a LECTOR gate. Each trial
//! drives the bench with an explicit clock: a load edge at `P/2`, the
//! capturing edge at `T = 5P/2`, each high for `P/8`. Pass means `Q`
//! holds the intended value one period after `T`. Simulation runs with
//! flip-flops reset to 0 and setup/hold checks enabled.
//!
//! Setup and hold are measured against the reference edge `R`: the first
//! rising `ckg_bar` edge after `T` when the bench is gated, the flip-flop's
//! clock edge otherwise. A setup of `s` presents data at `R - s`; a hold of
//! `h` withdraws data, presented at `T - P/4`, at `R + h`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CharError;
use crate::gating::{gated_clock_of, insert_clock_gating, use_register_clock_names, GatingMode};
use crate::netlist::{CellFunction, Instance, Netlist};
use crate::scalar::{fixed, Scalar};
use crate::sim::{simulate, simulate_with_delays, DelayAnnotation, LogicValue, SimOptions, Stimulus, Trace};
use crate::techlib::LibraryProfile;

/// Default bisection resolution in ps.
pub const DEFAULT_EPSILON_PS: f64 = 1.0;
/// Default clock period in ps (1 GHz).
pub const DEFAULT_CLOCK_PERIOD_PS: f64 = 1000.0;
/// Points in the monotonicity pre-scan, endpoints included.
const PRESCAN_POINTS: u64 = 41;

/// Single flip-flop bench `ffbench` with inputs `clk`, `D` and output `Q`.
/// The gated variant names its probes `ckg` and `ckg_bar`.
pub fn build_ff_bench<T: Scalar>(gated: Option<&LibraryProfile<T>>) -> Result<Netlist, CharError> {
    let mut n = Netlist::new("ffbench");
    n.add_input("clk");
    n.add_input("D");
    n.add_output("Q");
    n.add_instance(Instance::standard(CellFunction::DffConv, "ff1", &[("D", "D"), ("CLK", "clk"), ("Q", "Q")]));
    let Some(p) = gated else { return Ok(n) };
    let (mut g, mut report) = insert_clock_gating(&n, p, GatingMode::PerFf)?;
    use_register_clock_names(&mut g, &mut report)?;
    Ok(g)
}

/// Probe nets of a single flip-flop bench.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bench {
    pub ff: String,
    pub clock: String,
    pub data: String,
    pub q: String,
    /// Net on the flip-flop's `CLK` pin.
    pub ff_clock: String,
    pub ckg_bar: Option<String>,
}

impl Bench {
    pub fn detect(n: &Netlist) -> Result<Self, CharError> {
        let bad = |m: String| CharError::Bench(m);
        let ffs: Vec<_> = n.instances.iter().filter(|i| i.function == CellFunction::DffConv).collect();
        let [ff] = ffs.as_slice() else {
            return Err(bad(format!("expected one flip-flop, found {}", ffs.len())));
        };
        let pin =
            |name: &str| ff.pin(name).map(str::to_string).ok_or_else(|| bad(format!("{}.{name} unbound", ff.name)));
        let (data, ff_clock, q) = (pin("D")?, pin("CLK")?, pin("Q")?);
        let (clock, ckg_bar) = match gated_clock_of(n, &ff.name) {
            Some(ckg) => {
                let gate = n.driver_of(ckg).expect("gated clock has a driver");
                let source = gate.pin("A").expect("gate binds A").to_string();
                let bar = n
                    .loads_of(ckg)
                    .find(|(i, _)| i.function == CellFunction::LectorInv)
                    .and_then(|(i, _)| i.output_net().map(str::to_string));
                if bar.is_none() {
                    return Err(bad(format!("gated clock `{ckg}` has no ckg_bar inverter")));
                }
                (source, bar)
            }
            None => (ff_clock.clone(), None),
        };
        for net in [&data, &clock] {
            if !n.is_input(net) {
                return Err(bad(format!("`{net}` must be a module input")));
            }
        }
        Ok(Bench { ff: ff.name.clone(), clock, data, q, ff_clock, ckg_bar })
    }

    /// The capturing clock edge `T`.
    pub fn capture_edge<T: Scalar>(period: T) -> T {
        period * T::of(2.5)
    }

    fn stimulus<T: Scalar>(&self, period: T, old: LogicValue, data: &[(T, LogicValue)]) -> Stimulus<T> {
        let t = Self::capture_edge(period);
        let high = period / T::of_int(8);
        let load = period.half();
        let mut s = Stimulus::new(t + period);
        for (time, v) in [
            (T::zero(), LogicValue::Zero),
            (load, LogicValue::One),
            (load + high, LogicValue::Zero),
            (t, LogicValue::One),
            (t + high, LogicValue::Zero),
        ] {
            s.push(time, &self.clock, v);
        }
        s.push(T::zero(), &self.data, old);
        for &(time, v) in data {
            s.push(time, &self.data, v);
        }
        s
    }

    fn run<T: Scalar>(
        &self,
        n: &Netlist,
        p: &LibraryProfile<T>,
        period: T,
        old: LogicValue,
        data: &[(T, LogicValue)],
    ) -> Result<Trace<T>, CharError> {
        let opts = SimOptions { init_ff_zero: true, timing_checks: true, ..Default::default() };
        Ok(simulate(n, p, &self.stimulus(period, old, data), &opts)?)
    }

    fn passes<T: Scalar>(
        &self,
        n: &Netlist,
        p: &LibraryProfile<T>,
        period: T,
        new: LogicValue,
        data: &[(T, LogicValue)],
    ) -> Result<bool, CharError> {
        let t = self.run(n, p, period, !new, data)?;
        Ok(t.value_at(&self.q, Self::capture_edge(period) + period)? == new)
    }

    /// Reference edge from a nominal run with data presented at `T - P/4`.
    fn reference_edge<T: Scalar>(
        &self,
        n: &Netlist,
        p: &LibraryProfile<T>,
        period: T,
        new: LogicValue,
    ) -> Result<T, CharError> {
        let capture = Self::capture_edge(period);
        let Some(bar) = &self.ckg_bar else { return Ok(capture) };
        let t = self.run(n, p, period, !new, &[(capture - period / T::of_int(4), new)])?;
        t.rising_edges(bar)?.into_iter().find(|&e| e >= capture).ok_or_else(|| CharError::NoTransition(bar.clone()))
    }
}

/// Bisects between a failing and a passing offset until they are at most
/// `eps` apart. Returns the passing end and the iteration count.
pub fn bisect_boundary<T, F>(mut fail: T, mut pass: T, eps: T, mut passes: F) -> Result<(T, u32), CharError>
where
    T: Scalar,
    F: FnMut(T) -> Result<bool, CharError>,
{
    if eps <= T::zero() {
        return Err(CharError::BadEpsilon);
    }
    let mut iterations = 0;
    while (pass - fail).abs() > eps {
        let mid = (pass + fail).half();
        if passes(mid)? {
            pass = mid;
        } else {
            fail = mid;
        }
        iterations += 1;
    }
    Ok((pass, iterations))
}

/// Smallest passing offset in `[lo, hi]` to within `eps`, after a pre-scan
/// confirms a single fail-to-pass transition.
fn search<T, F>(what: &'static str, lo: T, hi: T, eps: T, passes: F) -> Result<T, CharError>
where
    T: Scalar,
    F: Fn(T) -> Result<bool, CharError> + Sync,
{
    if eps <= T::zero() {
        return Err(CharError::BadEpsilon);
    }
    let points: Vec<T> =
        (0..PRESCAN_POINTS).map(|k| lo + (hi - lo) * T::of_int(k) / T::of_int(PRESCAN_POINTS - 1)).collect();
    let verdicts = points.par_iter().map(|&x| passes(x)).collect::<Result<Vec<bool>, _>>()?;
    let first_pass = verdicts.iter().position(|&v| v).ok_or(CharError::NeverPasses(what))?;
    if verdicts[first_pass..].iter().any(|&v| !v) {
        return Err(CharError::NonMonotone(what));
    }
    if first_pass == 0 {
        return Err(CharError::Unconstrained(what));
    }
    Ok(bisect_boundary(points[first_pass - 1], points[first_pass], eps, passes)?.0)
}

fn check_polarity(new: LogicValue) {
    assert!(new.is_known(), "data polarity must be 0 or 1");
}

/// Setup for one data polarity: `new` is the value being captured.
pub fn find_setup_for<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    clock_period: T,
    epsilon: T,
    new: LogicValue,
) -> Result<T, CharError> {
    check_polarity(new);
    let b = Bench::detect(n)?;
    let r = b.reference_edge(n, p, clock_period, new)?;
    search("setup", -clock_period, clock_period, epsilon, |s| b.passes(n, p, clock_period, new, &[(r - s, new)]))
}

/// Hold for one data polarity; negative when data may leave before `R`.
pub fn find_hold_for<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    clock_period: T,
    epsilon: T,
    new: LogicValue,
) -> Result<T, CharError> {
    check_polarity(new);
    let b = Bench::detect(n)?;
    let r = b.reference_edge(n, p, clock_period, new)?;
    let present = Bench::capture_edge(clock_period) - clock_period / T::of_int(4);
    search("hold", -clock_period, clock_period, epsilon, |h| {
        let revert = r + h;
        if revert <= present {
            return Ok(false);
        }
        b.passes(n, p, clock_period, new, &[(present, new), (revert, !new)])
    })
}

/// Worst case over both data polarities.
pub fn find_setup<T: Scalar>(n: &Netlist, p: &LibraryProfile<T>, clock_period: T, epsilon: T) -> Result<T, CharError> {
    let rise = find_setup_for(n, p, clock_period, epsilon, LogicValue::One)?;
    let fall = find_setup_for(n, p, clock_period, epsilon, LogicValue::Zero)?;
    Ok(rise.max_of(fall))
}

/// Worst case over both data polarities.
pub fn find_hold<T: Scalar>(n: &Netlist, p: &LibraryProfile<T>, clock_period: T, epsilon: T) -> Result<T, CharError> {
    let rise = find_hold_for(n, p, clock_period, epsilon, LogicValue::One)?;
    let fall = find_hold_for(n, p, clock_period, epsilon, LogicValue::Zero)?;
    Ok(rise.max_of(fall))
}

/// Clock-to-Q delay for rising and falling `Q`, measured from the edge on
/// the flip-flop's own clock pin. Returns `(rise, fall, mean)`.
pub fn measure_delay<T: Scalar>(n: &Netlist, p: &LibraryProfile<T>, clock_period: T) -> Result<(T, T, T), CharError> {
    let b = Bench::detect(n)?;
    let capture = Bench::capture_edge(clock_period);
    let present = capture - clock_period / T::of_int(4);
    let edge = |new: LogicValue| -> Result<T, CharError> {
        let t = b.run(n, p, clock_period, !new, &[(present, new)])?;
        let trigger = t
            .rising_edges(&b.ff_clock)?
            .into_iter()
            .find(|&e| e >= capture)
            .ok_or_else(|| CharError::NoTransition(b.ff_clock.clone()))?;
        let w = t.waveform(&b.q)?;
        let k = w.partition_point(|(time, _)| *time <= trigger);
        match w.get(k) {
            Some(&(_, LogicValue::X)) => Err(CharError::UnknownProbe(b.q.clone())),
            Some(&(time, v)) if v == new => Ok(time - trigger),
            _ => Err(CharError::NoTransition(b.q.clone())),
        }
    };
    let rise = edge(LogicValue::One)?;
    let fall = edge(LogicValue::Zero)?;
    Ok((rise, fall, (rise + fall).half()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Ns,
    Ps,
}

impl Units {
    pub fn suffix(self) -> &'static str {
        match self {
            Units::Ns => "ns",
            Units::Ps => "ps",
        }
    }

    pub fn from_ps<T: Scalar>(self, v: T) -> T {
        match self {
            Units::Ns => v / T::of_int(1000),
            Units::Ps => v,
        }
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ns" => Ok(Units::Ns),
            "ps" => Ok(Units::Ps),
            other => Err(format!("unknown units `{other}` (expected ns or ps)")),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// Register timing summary; all values in ps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport<T> {
    pub setup: T,
    pub hold: T,
    pub delay_rise: T,
    pub delay_fall: T,
    pub delay_mean: T,
    pub latency: T,
    pub epsilon: T,
    pub clock_period: T,
}

impl<T: Scalar> TimingReport<T> {
    /// Derives `delay_mean = (rise + fall) / 2` and `latency = setup + delay_mean`.
    pub fn new(setup: T, hold: T, delay_rise: T, delay_fall: T, epsilon: T, clock_period: T) -> Self {
        let delay_mean = (delay_rise + delay_fall).half();
        TimingReport {
            setup,
            hold,
            delay_rise,
            delay_fall,
            delay_mean,
            latency: setup + delay_mean,
            epsilon,
            clock_period,
        }
    }

    /// Table with rows Setup, Hold, Delay, Latency.
    pub fn render_table(&self, units: Units) -> String {
        render_timing_table(&[("Value", self)], units)
    }

    pub fn render_kv(&self, units: Units) -> String {
        let u = units.suffix();
        let mut out = String::new();
        for (key, v) in [
            ("setup", self.setup),
            ("hold", self.hold),
            ("delay_rise", self.delay_rise),
            ("delay_fall", self.delay_fall),
            ("delay_mean", self.delay_mean),
            ("latency", self.latency),
            ("epsilon", self.epsilon),
            ("clock_period", self.clock_period),
        ] {
            let _ = writeln!(out, "{key}_{u}={}", fixed(units.from_ps(v), 3));
        }
        out
    }
}

/// Side-by-side timing table, one column per labelled report.
pub fn render_timing_table<T: Scalar>(columns: &[(&str, &TimingReport<T>)], units: Units) -> String {
    let u = units.suffix();
    let mut out = format!("{:<16}", "Parameter");
    for (label, _) in columns {
        let _ = write!(out, "{label:>12}");
    }
    out.push('\n');
    type Row<T> = (&'static str, fn(&TimingReport<T>) -> T);
    let rows: [Row<T>; 4] =
        [("Setup", |r| r.setup), ("Hold", |r| r.hold), ("Delay", |r| r.delay_mean), ("Latency", |r| r.latency)];
    for (label, get) in rows {
        let _ = write!(out, "{:<16}", format!("{label} ({u})"));
        for (_, r) in columns {
            let _ = write!(out, "{:>12}", fixed(units.from_ps(get(r)), 3));
        }
        out.push('\n');
    }
    out
}

/// Setup, hold and clock-to-Q delay of a single flip-flop bench.
pub fn characterize_ff<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    clock_period: T,
    epsilon: T,
) -> Result<TimingReport<T>, CharError> {
    let setup = find_setup(n, p, clock_period, epsilon)?;
    let hold = find_hold(n, p, clock_period, epsilon)?;
    let (rise, fall, _) = measure_delay(n, p, clock_period)?;
    Ok(TimingReport::new(setup, hold, rise, fall, epsilon, clock_period))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationResult<T> {
    pub trials: usize,
    pub perturbation: T,
    pub failures: usize,
    pub seed: u64,
}

impl<T: Scalar> VariationResult<T> {
    pub fn render_kv(&self) -> String {
        format!(
            "trials={}\nperturbation_percent={}\nfailures={}\nseed={}\nstatus={}\n",
            self.trials,
            fixed(self.perturbation * T::of_int(100), 3),
            self.failures,
            self.seed,
            if self.failures == 0 { "stable" } else { "unstable" },
        )
    }
}

fn sampled_outputs<T: Scalar>(t: &Trace<T>, n: &Netlist, times: &[T]) -> Result<Vec<LogicValue>, CharError> {
    let mut out = Vec::with_capacity(times.len() * n.outputs.len());
    for &time in times {
        for net in &n.outputs {
            out.push(t.value_at(net, time)?);
        }
    }
    Ok(out)
}

/// Runs `trials` simulations with every cell's rise and fall delay scaled
/// by independent uniform factors in `[1 - perturbation, 1 + perturbation]`.
/// Trial `k` draws from a ChaCha8 stream seeded with `seed + k`. A trial
/// fails when its outputs, sampled at each rising clock edge and at the
/// horizon, differ from the nominal run.
pub fn run_variation<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    s: &Stimulus<T>,
    perturbation: T,
    trials: usize,
    seed: u64,
) -> Result<VariationResult<T>, CharError> {
    if perturbation < T::zero() || perturbation > T::half(T::one()) {
        return Err(CharError::BadPerturbation);
    }
    let opts = SimOptions { init_ff_zero: true, timing_checks: true, ..Default::default() };
    let mut times = s.sample_times();
    if times.last() != Some(&s.horizon) {
        times.push(s.horizon);
    }
    let nominal_delays = DelayAnnotation::from_profile(n, p)?;
    let nominal = sampled_outputs(&simulate_with_delays(n, p, s, &opts, &nominal_delays)?, n, &times)?;
    let failed = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let delays = nominal_delays.perturbed(perturbation, &mut rng);
            let t = simulate_with_delays(n, p, s, &opts, &delays)?;
            Ok(sampled_outputs(&t, n, &times)? != nominal)
        })
        .collect::<Result<Vec<bool>, CharError>>()?;
    Ok(VariationResult { trials, perturbation, failures: failed.iter().filter(|&&f| f).count(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::build_register_demo;
    use num_rational::Ratio;

    fn paper() -> LibraryProfile<f64> {
        LibraryProfile::bundled("paper-match").unwrap()
    }

    fn ungated() -> Netlist {
        build_ff_bench::<f64>(None).unwrap()
    }

    fn gated(p: &LibraryProfile<f64>) -> Netlist {
        build_ff_bench(Some(p)).unwrap()
    }

    #[test]
    fn bisection_iteration_bound() {
        let (x, iters) = bisect_boundary(0.0, 100.0, 1.0, |x| Ok(x >= 37.2)).unwrap();
        assert!(iters <= 7, "{iters}");
        assert!(x >= 37.2 && x - 37.2 <= 1.0);
        assert!(matches!(bisect_boundary(0.0, 1.0, 0.0, |_| Ok(true)), Err(CharError::BadEpsilon)));
    }

    #[test]
    fn prescan_classifies_shapes() {
        assert!(matches!(search("x", 0.0, 10.0, 0.1, |_| Ok(true)), Err(CharError::Unconstrained("x"))));
        assert!(matches!(search("x", 0.0, 10.0, 0.1, |_| Ok(false)), Err(CharError::NeverPasses("x"))));
        assert!(matches!(
            search("x", 0.0, 10.0, 0.1, |v| Ok((3.0..6.0).contains(&v))),
            Err(CharError::NonMonotone("x"))
        ));
    }

    #[test]
    fn bench_detection() {
        let p = paper();
        let b = Bench::detect(&gated(&p)).unwrap();
        assert_eq!((b.clock.as_str(), b.data.as_str(), b.ff_clock.as_str()), ("clk", "D", "ckg"));
        assert_eq!(b.ckg_bar.as_deref(), Some("ckg_bar"));
        assert_eq!(Bench::detect(&ungated()).unwrap().ckg_bar, None);
        assert!(matches!(Bench::detect(&build_register_demo(2).unwrap()), Err(CharError::Bench(_))));
    }

    // Ungated: the data edge is measured against clk itself, so setup and
    // hold are the cell's own window.
    #[test]
    fn ungated_bench_matches_cell_window() {
        let p = paper();
        let n = ungated();
        let setup = find_setup(&n, &p, 1000.0, 1.0).unwrap();
        let hold = find_hold(&n, &p, 1000.0, 1.0).unwrap();
        assert!((10.0..=11.0).contains(&setup), "{setup}");
        assert!((5.0..=6.0).contains(&hold), "{hold}");
        assert_eq!(measure_delay(&n, &p, 1000.0).unwrap(), (60.0, 80.0, 70.0));
    }

    // Gated paper-match bench, clk high for 125 ps after T:
    //   ckg_bar rises at T + 125 (clk fall) + 69 (AND fall) + 23 (INV rise) = T + 217.
    //   Data at d passes iff d + 30 (XOR) + 46 (AND rise) <= T + 125, so
    //   setup = 217 - 49 = 168.
    //   Capture at T + 46 plus the 5 ps cell hold gives hold = 51 - 217 = -166.
    #[test]
    fn gated_bench_path_oracle() {
        let p = paper();
        let n = gated(&p);
        let setup = find_setup(&n, &p, 1000.0, 1.0).unwrap();
        let hold = find_hold(&n, &p, 1000.0, 1.0).unwrap();
        assert!((168.0..=169.0).contains(&setup), "{setup}");
        assert!((-166.0..=-165.0).contains(&hold), "{hold}");
        assert_eq!(measure_delay(&n, &p, 1000.0).unwrap(), (60.0, 80.0, 70.0));
    }

    #[test]
    fn symmetric_delays_give_equal_rise_and_fall() {
        let p: LibraryProfile<f64> = LibraryProfile::bundled("symmetric").unwrap();
        let (r, f, m) = measure_delay(&gated(&p), &p, 1000.0).unwrap();
        assert_eq!((r, f, m), (50.0, 50.0, 50.0));
    }

    #[test]
    fn exact_rational_characterization() {
        let p: LibraryProfile<Ratio<i64>> = LibraryProfile::bundled("paper-match").unwrap();
        let n = ungated();
        let r = characterize_ff(&n, &p, Ratio::from_integer(1000), Ratio::from_integer(1)).unwrap();
        assert_eq!(r.latency - r.setup - r.delay_mean, Ratio::from_integer(0));
        assert_eq!(r.delay_mean, Ratio::from_integer(70));
        assert!(r.setup >= Ratio::from_integer(10) && r.setup <= Ratio::from_integer(11));
    }

    #[test]
    fn report_identity_and_rendering() {
        let r = TimingReport::new(47.0, -160.0, 1460.0, 1460.0, 1.0, 1000.0);
        assert_eq!(r.latency, 1507.0);
        let table = r.render_table(Units::Ns);
        assert!(table.contains("Setup (ns)") && table.contains("0.047"));
        assert!(table.contains("-0.160"));
        assert!(table.contains("1.507"));
        let rows: Vec<&str> = table.lines().skip(1).map(|l| l.split(' ').next().unwrap()).collect();
        assert_eq!(rows, ["Setup", "Hold", "Delay", "Latency"]);
        assert!(r.render_kv(Units::Ps).contains("hold_ps=-160.000"));
    }

    #[test]
    fn zero_perturbation_never_fails() {
        let p = paper();
        let (g, _) = insert_clock_gating(&build_register_demo(2).unwrap(), &p, GatingMode::PerFf).unwrap();
        let s = crate::sim::random_data_stimulus("clk", &["D1".into(), "D2".into()], 1000.0, 50, 0.5, 1);
        let v = run_variation(&g, &p, &s, 0.0, 8, 0).unwrap();
        assert_eq!(v.failures, 0);
        assert!(matches!(run_variation(&g, &p, &s, 0.6, 1, 0), Err(CharError::BadPerturbation)));
    }
}
