// SPDX-License-Identifier: Apache-2.0

//! `cgforge`: clock-gating insertion, simulation, timing and power reports.
//!
//! Exit codes: 0 success, 1 analysis failure, 2 usage error, 3 input-file error.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cgforge::characterize::{self, build_ff_bench, render_timing_table, run_variation};
use cgforge::gating::{insert_clock_gating, GatingMode};
use cgforge::netlist::{parse_netlist_unvalidated, parse_netlist_with, validate, write_netlist};
use cgforge::power::{activity_sweep, clock_and_data_inputs, compare_traces};
use cgforge::sim::{
    check_equivalence, parse_stimulus, random_data_stimulus, simulate, vcd_string, write_stimulus, SimOptions,
};
use cgforge::techlib::{load_profile, BUNDLED_PROFILES};
use cgforge::{build_register_demo, LibraryProfile, Netlist, Stimulus, Units};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{digest, header, RunConfig};

#[derive(Debug, Error)]
#[error("{message}")]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn analysis(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

type CliResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "cgforge", version, about = "LECTOR-based clock gating: insertion, simulation, timing and power")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a register netlist, its gated counterpart and a stimulus.
    Demo(DemoArgs),
    /// Check a netlist's structural invariants.
    Validate(ValidateArgs),
    /// Insert clock gating into a netlist.
    Gate(GateArgs),
    /// Simulate a netlist under a stimulus.
    Sim(SimArgs),
    /// Characterize a single flip-flop bench.
    Char(CharArgs),
    /// Compare gated and ungated power.
    Power(PowerArgs),
    /// Delay-variation trials.
    Mc(McArgs),
    /// Equivalence check, timing, power and variation in one run.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ProfileArg {
    /// Profile file, or a bundled profile name.
    #[arg(long, default_value = "paper-match")]
    profile: String,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4096))]
    width: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    netlist: PathBuf,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct GateArgs {
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long, default_value = "per-ff")]
    mode: GatingMode,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long)]
    stimulus: PathBuf,
    #[arg(long)]
    vcd: Option<PathBuf>,
    /// Reset flip-flops to 0 instead of X.
    #[arg(long)]
    zero_init: bool,
    #[arg(long)]
    timing_checks: bool,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct CharArgs {
    /// Bench netlist; the built-in gated bench when absent.
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long, default_value_t = characterize::DEFAULT_CLOCK_PERIOD_PS)]
    clock_period: f64,
    #[arg(long, default_value_t = characterize::DEFAULT_EPSILON_PS)]
    epsilon: f64,
    #[arg(long, default_value = "ns")]
    units: Units,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long)]
    gated: PathBuf,
    #[arg(long)]
    ungated: PathBuf,
    /// Stimulus file; required unless `--sweep` is given.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    /// Comma-separated data activities for a seeded sweep.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10_000)]
    cycles: usize,
    #[arg(long, default_value_t = characterize::DEFAULT_CLOCK_PERIOD_PS)]
    clock_period: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Externally quoted savings, printed beside the computed figure.
    #[arg(long)]
    claimed_savings: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Stimulus file; seeded random data when absent.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    perturbation: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    cycles: usize,
    #[arg(long, default_value_t = characterize::DEFAULT_CLOCK_PERIOD_PS)]
    clock_period: f64,
    #[command(flatten)]
    profile: ProfileArg,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long)]
    stimulus: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    clock_period: Option<f64>,
    #[arg(long)]
    mode: Option<GatingMode>,
    #[arg(long)]
    units: Option<Units>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    perturbation: Option<f64>,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

/// Loads a profile file, falling back to a bundled profile of that name.
/// Returns the profile and its source text.
fn profile(spec: &str) -> Result<(LibraryProfile, String), Failure> {
    let path = Path::new(spec);
    if path.exists() {
        let p = load_profile(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        return Ok((p, read(path)?));
    }
    match LibraryProfile::bundled(spec) {
        Some(p) => Ok((p, format!("bundled:{spec}"))),
        None => Err(Failure::input(format!(
            "profile {spec} not found (not a file, and not one of {})",
            BUNDLED_PROFILES.join(", ")
        ))),
    }
}

fn netlist(path: &Path, p: &LibraryProfile) -> Result<(Netlist, String), Failure> {
    let text = read(path)?;
    let n = parse_netlist_with(&text, p).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((n, text))
}

fn stimulus(path: &Path) -> Result<(Stimulus, String), Failure> {
    let text = read(path)?;
    let s = parse_stimulus(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((s, text))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn analysis<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure::analysis(format!("{stage}: {e}"))
}

fn demo_stimulus(n: &Netlist, period: f64, cycles: usize, seed: u64) -> Result<Stimulus, Failure> {
    let (clock, data) = clock_and_data_inputs(n).map_err(analysis("stimulus"))?;
    Ok(random_data_stimulus(&clock, &data, period, cycles, 0.5, seed))
}

fn cmd_demo(a: &DemoArgs) -> CliResult {
    let (p, _) = profile(&a.profile.profile)?;
    let width = a.width as usize;
    let n = build_register_demo(width).map_err(analysis("demo"))?;
    let (g, _) = insert_clock_gating(&n, &p, GatingMode::PerFf).map_err(analysis("gate"))?;
    let s = random_data_stimulus("clk", &n.inputs[1..], characterize::DEFAULT_CLOCK_PERIOD_PS, 64, 0.5, a.seed);
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let files = [
        (format!("register{width}.net"), write_netlist(&n)),
        (format!("register{width}_gated.net"), write_netlist(&g)),
        ("demo.stim".to_string(), write_stimulus(&s)),
    ];
    for (name, text) in &files {
        let path = a.out_dir.join(name);
        write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> CliResult {
    let (p, _) = profile(&a.profile.profile)?;
    let text = read(&a.netlist)?;
    let n =
        parse_netlist_unvalidated(&text, &p).map_err(|e| Failure::input(format!("{}: {e}", a.netlist.display())))?;
    let diags = validate(&n);
    if diags.is_empty() {
        println!("ok: module {} ({} instances, {} nets)", n.name, n.instances.len(), n.nets.len());
        return Ok(());
    }
    for d in &diags {
        println!("{}: {d}", a.netlist.display());
    }
    Err(Failure::analysis(format!("{} diagnostic(s)", diags.len())))
}

fn cmd_gate(a: &GateArgs) -> CliResult {
    let (p, _) = profile(&a.profile.profile)?;
    let (n, _) = netlist(&a.netlist, &p)?;
    let (g, r) = insert_clock_gating(&n, &p, a.mode).map_err(analysis("gate"))?;
    emit(a.out.as_deref(), &write_netlist(&g))?;
    eprintln!(
        "gated {} flip-flop(s) in {} mode: {} cells added, +{} transistors",
        r.gated_ffs.len(),
        r.mode,
        r.added_cells.len(),
        r.transistor_overhead
    );
    Ok(())
}

fn cmd_sim(a: &SimArgs) -> CliResult {
    let (p, _) = profile(&a.profile.profile)?;
    let (n, _) = netlist(&a.netlist, &p)?;
    let (s, _) = stimulus(&a.stimulus)?;
    let opts = SimOptions { init_ff_zero: a.zero_init, timing_checks: a.timing_checks, ..Default::default() };
    let t = simulate(&n, &p, &s, &opts).map_err(analysis("sim"))?;
    let mut out = format!("module={}\nevents={}\nhorizon_ps={}\n", t.module, t.events, t.horizon);
    let _ = writeln!(out, "{:<20}{:>10}{:>10}{:>7}", "net", "toggles", "x_changes", "final");
    for (i, net) in t.nets.iter().enumerate() {
        let last = t.waveforms[i].last().expect("waveforms start at t = 0").1;
        let _ = writeln!(out, "{net:<20}{:>10}{:>10}{last:>7}", t.toggles[i], t.x_changes[i]);
    }
    for v in &t.violations {
        let _ = writeln!(out, "violation {:?} {} at {} ps", v.kind, v.instance, v.time);
    }
    print!("{out}");
    if let Some(path) = &a.vcd {
        write(path, &vcd_string(&t).map_err(analysis("vcd"))?)?;
    }
    Ok(())
}

fn cmd_char(a: &CharArgs) -> CliResult {
    let (p, ptext) = profile(&a.profile.profile)?;
    let (n, ntext) = match &a.netlist {
        Some(path) => netlist(path, &p)?,
        None => {
            let n = build_ff_bench(Some(&p)).map_err(analysis("bench"))?;
            let text = write_netlist(&n);
            (n, text)
        }
    };
    let r = characterize::characterize_ff(&n, &p, a.clock_period, a.epsilon).map_err(analysis("timing"))?;
    let settings = format!("clock_period {}\nepsilon {}\nunits {}\n", a.clock_period, a.epsilon, a.units);
    let mut out = header(0, &digest(&[ptext.as_bytes(), ntext.as_bytes(), settings.as_bytes()]));
    out.push_str(&r.render_table(a.units));
    out.push_str(&r.render_kv(a.units));
    emit(a.out.as_deref(), &out)
}

fn cmd_power(a: &PowerArgs) -> CliResult {
    let (p, ptext) = profile(&a.profile.profile)?;
    let (g, gtext) = netlist(&a.gated, &p)?;
    let (u, utext) = netlist(&a.ungated, &p)?;
    let mut out;
    if let Some(alphas) = &a.sweep {
        let rows = activity_sweep(&g, &u, &p, alphas, a.cycles, a.clock_period, a.seed).map_err(analysis("power"))?;
        let settings = format!("sweep {alphas:?}\ncycles {}\nclock_period {}\n", a.cycles, a.clock_period);
        out = header(a.seed, &digest(&[ptext.as_bytes(), gtext.as_bytes(), utext.as_bytes(), settings.as_bytes()]));
        let _ = writeln!(out, "{:<10}{:>14}", "alpha", "savings (%)");
        for (alpha, savings) in rows {
            let _ = writeln!(out, "{alpha:<10.3}{savings:>14.3}");
        }
    } else {
        let path = a
            .stimulus
            .as_ref()
            .ok_or_else(|| Failure { code: 2, message: "power needs --stimulus or --sweep".into() })?;
        let (s, stext) = stimulus(path)?;
        let (mut r, _, _) = compare_traces(&g, &u, &p, &s).map_err(analysis("power"))?;
        if let Some(c) = a.claimed_savings {
            r = r.with_claimed_savings(c);
        }
        out = header(a.seed, &digest(&[ptext.as_bytes(), gtext.as_bytes(), utext.as_bytes(), stext.as_bytes()]));
        out.push_str(&r.render_table());
        out.push_str(&r.render_kv());
    }
    emit(a.out.as_deref(), &out)
}

fn cmd_mc(a: &McArgs) -> CliResult {
    if !(0.0..=0.5).contains(&a.perturbation) {
        return Err(Failure { code: 2, message: format!("--perturbation {} outside [0, 0.5]", a.perturbation) });
    }
    let (p, _) = profile(&a.profile.profile)?;
    let (n, _) = netlist(&a.netlist, &p)?;
    let s = match &a.stimulus {
        Some(path) => stimulus(path)?.0,
        None => demo_stimulus(&n, a.clock_period, a.cycles, a.seed)?,
    };
    let v = run_variation(&n, &p, &s, a.perturbation, a.trials, a.seed).map_err(analysis("variation"))?;
    print!("{}", v.render_kv());
    if v.failures > 0 {
        return Err(Failure::analysis(format!("variation: {} of {} trials failed", v.failures, v.trials)));
    }
    Ok(())
}

fn pipeline_config(a: &PipelineArgs) -> Result<RunConfig, Failure> {
    let mut c = RunConfig::default();
    if let Some(path) = &a.config {
        c.apply_file(path)?;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = &a.$flag { c.$field = v.clone(); })*
        };
    }
    set!(profile => profile_path, out_dir => output_dir, seed => seed, epsilon => epsilon_ps,
        clock_period => clock_period_ps, mode => mode, units => units, cycles => cycles,
        trials => trials, perturbation => perturbation);
    if a.netlist.is_some() {
        c.netlist_path = a.netlist.clone();
    }
    if a.stimulus.is_some() {
        c.stimulus_path = a.stimulus.clone();
    }
    Ok(c)
}

fn cmd_pipeline(a: &PipelineArgs) -> CliResult {
    let c = pipeline_config(a)?;
    let (p, ptext) = profile(&c.profile_path)?;
    let (u, utext) = match &c.netlist_path {
        Some(path) => netlist(path, &p)?,
        None => {
            let n = build_register_demo(2).map_err(analysis("demo"))?;
            let text = write_netlist(&n);
            (n, text)
        }
    };
    let (s, stext) = match &c.stimulus_path {
        Some(path) => stimulus(path)?,
        None => {
            let s = demo_stimulus(&u, c.clock_period_ps, c.cycles, c.seed)?;
            let text = write_stimulus(&s);
            (s, text)
        }
    };
    let hdr =
        header(c.seed, &digest(&[c.canonical().as_bytes(), ptext.as_bytes(), utext.as_bytes(), stext.as_bytes()]));
    let (g, _) = insert_clock_gating(&u, &p, c.mode).map_err(analysis("gate"))?;

    if let Some(d) = check_equivalence(&g, &u, &p, &s, &SimOptions::zero_init()).map_err(analysis("equivalence"))? {
        println!(
            "equivalence: first divergence at cycle {} (t = {} ps): {} gated={} ungated={}",
            d.cycle, d.time, d.net, d.left, d.right
        );
        return Err(Failure::analysis(format!("equivalence: {} mode output differs from ungated", c.mode)));
    }
    println!("equivalence: ok");

    std::fs::create_dir_all(&c.output_dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", c.output_dir.display())))?;
    let file = |name: &str| c.output_dir.join(name);

    let gated_bench = build_ff_bench(Some(&p)).map_err(analysis("timing"))?;
    let plain_bench = build_ff_bench::<f64>(None).map_err(analysis("timing"))?;
    let (tg, tu) = in_parallel(
        || characterize::characterize_ff(&gated_bench, &p, c.clock_period_ps, c.epsilon_ps),
        || characterize::characterize_ff(&plain_bench, &p, c.clock_period_ps, c.epsilon_ps),
    );
    let (tg, tu) = (tg.map_err(analysis("timing"))?, tu.map_err(analysis("timing"))?);
    let mut timing = hdr.clone();
    timing.push_str(&render_timing_table(&[("Gated", &tg), ("Non-gated", &tu)], c.units));
    for (side, r) in [("gated", &tg), ("ungated", &tu)] {
        for line in r.render_kv(c.units).lines() {
            let _ = writeln!(timing, "{side}_{line}");
        }
    }
    write(&file("timing.rpt"), &timing)?;

    let (cmp, trace_g, trace_u) = compare_traces(&g, &u, &p, &s).map_err(analysis("power"))?;
    write(&file("power.rpt"), &format!("{hdr}{}{}", cmp.render_table(), cmp.render_kv()))?;
    write(&file("gated.vcd"), &vcd_string(&trace_g).map_err(analysis("vcd"))?)?;
    write(&file("ungated.vcd"), &vcd_string(&trace_u).map_err(analysis("vcd"))?)?;

    let v = run_variation(&g, &p, &s, c.perturbation, c.trials, c.seed).map_err(analysis("variation"))?;
    write(&file("variation.rpt"), &format!("{hdr}{}", v.render_kv()))?;

    for name in ["timing.rpt", "power.rpt", "variation.rpt", "gated.vcd", "ungated.vcd"] {
        println!("{}", file(name).display());
    }
    if v.failures > 0 {
        return Err(Failure::analysis(format!("variation: {} of {} trials failed", v.failures, v.trials)));
    }
    Ok(())
}

fn in_parallel<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    std::thread::scope(|s| {
        let hb = s.spawn(b);
        let ra = a();
        (ra, hb.join().expect("timing worker panicked"))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Demo(a) => cmd_demo(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Gate(a) => cmd_gate(a),
        Command::Sim(a) => cmd_sim(a),
        Command::Char(a) => cmd_char(a),
        Command::Power(a) => cmd_power(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
