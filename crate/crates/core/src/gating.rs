// SPDX-License-Identifier: Apache-2.0

//! LECTOR-based clock-gating insertion.
//!
//! Per flip-flop `ff` with `D=d CLK=c Q=q`, the per-ff pass adds
//!
//! ```text
//! cell XOR2        ff_cmp A=d B=q        Y=en_ff
//! cell LECTOR_AND2 ff_cg  A=c B=en_ff    Y=ckg_ff
//! cell LECTOR_INV  ff_cgb A=ckg_ff       Y=ckg_bar_ff
//! ```
//!
//! and rebinds `ff.CLK` to `ckg_ff`. The clock pulse is suppressed exactly
//! when `D == Q`, where a capture would rewrite the held value anyway.
//!
//! The shared mode gates every flip-flop with the first flip-flop's
//! enable. It is wrong on purpose: bits other than the first miss captures
//! whenever their data changes while the first bit's does not.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::GatingError;
use crate::netlist::{CellFunction, Instance, Netlist};
use crate::scalar::Scalar;
use crate::techlib::LibraryProfile;

/// Stimulus on the 2-bit register where shared gating loses data: bit 1
/// holds still while bit 2 toggles every cycle.
pub const SHARED_WITNESS_STIMULUS: &str = include_str!("../fixtures/shared_witness.stim");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GatingMode {
    #[default]
    PerFf,
    Shared,
}

impl fmt::Display for GatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GatingMode::PerFf => "per-ff",
            GatingMode::Shared => "shared",
        })
    }
}

impl FromStr for GatingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-ff" => Ok(GatingMode::PerFf),
            "shared" => Ok(GatingMode::Shared),
            other => Err(format!("unknown gating mode `{other}` (expected per-ff or shared)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GatingReport {
    pub mode: GatingMode,
    pub gated_ffs: Vec<String>,
    /// `en`, `ckg`, `ckg_bar` per gating cell, in that order.
    pub new_nets: Vec<String>,
    pub added_cells: Vec<String>,
    /// Gated-clock net feeding each entry of `gated_ffs`.
    pub gated_clocks: Vec<String>,
    pub transistor_overhead: u64,
    /// `(wanted, used)` for names that collided and were suffixed.
    pub renamed: Vec<(String, String)>,
}

/// Flip-flop instance names in declaration order.
pub fn list_ffs(n: &Netlist) -> Vec<String> {
    n.instances.iter().filter(|i| i.function == CellFunction::DffConv).map(|i| i.name.clone()).collect()
}

/// The CLK net of `ff` when it is driven by a LECTOR_AND2.
pub fn gated_clock_of<'a>(n: &'a Netlist, ff: &str) -> Option<&'a str> {
    let clk = n.instance(ff)?.pin("CLK")?;
    let drv = n.driver_of(clk)?;
    (drv.function == CellFunction::LectorAnd2).then_some(clk)
}

struct Namer {
    taken: HashSet<String>,
    renamed: Vec<(String, String)>,
}

impl Namer {
    fn fresh(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        if name != base {
            self.renamed.push((base, name.clone()));
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Inserts LECTOR-based gating cells; see the module docs for the structure.
pub fn insert_clock_gating<T: Scalar>(
    n: &Netlist,
    p: &LibraryProfile<T>,
    mode: GatingMode,
) -> Result<(Netlist, GatingReport), GatingError> {
    let ffs = list_ffs(n);
    if ffs.is_empty() {
        return Err(GatingError::NoFlipFlops);
    }
    if let Some(ff) = ffs.iter().find(|ff| gated_clock_of(n, ff).is_some()) {
        return Err(GatingError::AlreadyGated(ff.clone()));
    }
    let xor = p.standard_cell(CellFunction::Xor2)?;
    let and = p.standard_cell(CellFunction::LectorAnd2)?;
    let inv = p.standard_cell(CellFunction::LectorInv)?;
    let per_cell = xor.transistors as u64 + and.transistors as u64 + inv.transistors as u64;

    let mut out = n.clone();
    let mut namer = Namer {
        taken: n.nets.iter().chain(n.instances.iter().map(|i| &i.name)).cloned().collect(),
        renamed: Vec::new(),
    };
    let mut report = GatingReport { mode, gated_ffs: ffs.clone(), ..Default::default() };

    let sources: &[String] = match mode {
        GatingMode::PerFf => &ffs,
        GatingMode::Shared => &ffs[..1],
    };
    let mut clocks = Vec::new();
    for ff in sources {
        let inst = n.instance(ff).expect("listed flip-flop exists");
        let pin = |name: &str| inst.pin(name).expect("valid netlist binds every flip-flop pin");
        let (d, c, q) = (pin("D"), pin("CLK"), pin("Q"));
        let en = namer.fresh(format!("en_{ff}"));
        let ckg = namer.fresh(format!("ckg_{ff}"));
        let ckg_bar = namer.fresh(format!("ckg_bar_{ff}"));
        let cmp = namer.fresh(format!("{ff}_cmp"));
        let cg = namer.fresh(format!("{ff}_cg"));
        let cgb = namer.fresh(format!("{ff}_cgb"));
        for net in [&en, &ckg, &ckg_bar] {
            out.add_wire(net);
        }
        out.add_instance(Instance::new(&xor.name, xor.function, &cmp, &[("A", d), ("B", q), ("Y", &en)]));
        out.add_instance(Instance::new(&and.name, and.function, &cg, &[("A", c), ("B", &en), ("Y", &ckg)]));
        out.add_instance(Instance::new(&inv.name, inv.function, &cgb, &[("A", &ckg), ("Y", &ckg_bar)]));
        report.new_nets.extend([en, ckg.clone(), ckg_bar]);
        report.added_cells.extend([cmp, cg, cgb]);
        report.transistor_overhead += per_cell;
        clocks.push(ckg);
    }
    for (i, ff) in ffs.iter().enumerate() {
        let ckg = match mode {
            GatingMode::PerFf => &clocks[i],
            GatingMode::Shared => &clocks[0],
        };
        out.instance_mut(ff).expect("listed flip-flop exists").pins.insert("CLK".into(), ckg.clone());
        report.gated_clocks.push(ckg.clone());
    }
    report.renamed = namer.renamed;
    Ok((out, report))
}

/// Renames per-ff gated clocks to the register's conventional names:
/// `ckg`, `ckg_1`, ... and `ckg_bar`, `ckg_bar_1`, ... in flip-flop order.
pub fn use_register_clock_names(n: &mut Netlist, report: &mut GatingReport) -> Result<(), GatingError> {
    let suffix = |i: usize| if i == 0 { String::new() } else { format!("_{i}") };
    let mut clocks: Vec<String> = Vec::new();
    for ckg in &report.gated_clocks {
        if !clocks.contains(ckg) {
            clocks.push(ckg.clone());
        }
    }
    let mut renames = Vec::new();
    for (idx, ckg) in clocks.iter().enumerate() {
        renames.push((ckg.clone(), format!("ckg{}", suffix(idx))));
        let bar = n
            .loads_of(ckg)
            .find(|(inst, _)| inst.function == CellFunction::LectorInv)
            .and_then(|(inst, _)| inst.output_net().map(str::to_string));
        if let Some(bar) = bar {
            renames.push((bar, format!("ckg_bar{}", suffix(idx))));
        }
    }
    for (old, new) in &renames {
        n.rename_net(old, new)?;
        for net in report.new_nets.iter_mut().chain(report.gated_clocks.iter_mut()) {
            if net == old {
                *net = new.clone();
            }
        }
    }
    Ok(())
}

/// Next flip-flop state with and without gating, at the state-machine level.
pub fn next_state(d: bool, q: bool, gated: bool) -> bool {
    let clock_enabled = !gated || (d ^ q);
    if clock_enabled {
        d
    } else {
        q
    }
}
