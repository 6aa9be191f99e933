// SPDX-License-Identifier: Apache-2.0

//! Flat structural netlist IR and its line-oriented text format.
//!
//! ```text
//! module inv1
//! input a
//! output y
//! cell INV u1 A=a Y=y
//! endmodule
//! ```

mod parse;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use parse::{parse_netlist, parse_netlist_unvalidated, parse_netlist_with, write_netlist};
pub use validate::{validate, Diagnostic, DiagnosticCategory};

use crate::error::NetlistError;

/// Behavior tag of a library cell. Fixes the pin interface and logic function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellFunction {
    Inv,
    And2,
    Nand2,
    Xor2,
    DffConv,
    LectorAnd2,
    LectorInv,
}

impl CellFunction {
    pub const ALL: [CellFunction; 7] = [
        CellFunction::Inv,
        CellFunction::And2,
        CellFunction::Nand2,
        CellFunction::Xor2,
        CellFunction::DffConv,
        CellFunction::LectorAnd2,
        CellFunction::LectorInv,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CellFunction::Inv => "INV",
            CellFunction::And2 => "AND2",
            CellFunction::Nand2 => "NAND2",
            CellFunction::Xor2 => "XOR2",
            CellFunction::DffConv => "DFF_CONV",
            CellFunction::LectorAnd2 => "LECTOR_AND2",
            CellFunction::LectorInv => "LECTOR_INV",
        }
    }

    pub fn input_pins(self) -> &'static [&'static str] {
        match self {
            CellFunction::Inv | CellFunction::LectorInv => &["A"],
            CellFunction::And2 | CellFunction::Nand2 | CellFunction::Xor2 | CellFunction::LectorAnd2 => &["A", "B"],
            CellFunction::DffConv => &["D", "CLK"],
        }
    }

    pub fn output_pin(self) -> &'static str {
        match self {
            CellFunction::DffConv => "Q",
            _ => "Y",
        }
    }

    /// Pins in canonical order: inputs, then the output.
    pub fn pins(self) -> impl Iterator<Item = &'static str> {
        self.input_pins().iter().copied().chain(std::iter::once(self.output_pin()))
    }

    pub fn has_pin(self, pin: &str) -> bool {
        self.pins().any(|p| p == pin)
    }

    pub fn is_sequential(self) -> bool {
        self == CellFunction::DffConv
    }

    /// The plain cell a LECTOR variant is derived from.
    pub fn plain_counterpart(self) -> Option<CellFunction> {
        match self {
            CellFunction::LectorAnd2 => Some(CellFunction::And2),
            CellFunction::LectorInv => Some(CellFunction::Inv),
            _ => None,
        }
    }

    pub fn is_lector(self) -> bool {
        self.plain_counterpart().is_some()
    }
}

impl fmt::Display for CellFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CellFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CellFunction::ALL.iter().copied().find(|f| f.tag() == s).ok_or_else(|| format!("unknown cell function `{s}`"))
    }
}

/// Resolves a cell-type name to its behavior tag.
pub trait CellResolver {
    fn resolve(&self, cell_type: &str) -> Option<CellFunction>;
}

/// Resolver that knows only the seven behavior tags as cell names.
#[derive(Debug, Default, Clone, Copy)]
pub struct StandardCells;

impl CellResolver for StandardCells {
    fn resolve(&self, cell_type: &str) -> Option<CellFunction> {
        cell_type.parse().ok()
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub cell_type: String,
    pub function: CellFunction,
    pub pins: BTreeMap<String, String>,
}

impl Instance {
    /// Instance whose cell name is the behavior tag itself.
    pub fn standard(function: CellFunction, name: &str, pins: &[(&str, &str)]) -> Self {
        Instance::new(function.tag(), function, name, pins)
    }

    pub fn new(cell_type: &str, function: CellFunction, name: &str, pins: &[(&str, &str)]) -> Self {
        Instance {
            name: name.to_string(),
            cell_type: cell_type.to_string(),
            function,
            pins: pins.iter().map(|(p, n)| (p.to_string(), n.to_string())).collect(),
        }
    }

    pub fn pin(&self, pin: &str) -> Option<&str> {
        self.pins.get(pin).map(String::as_str)
    }

    pub fn output_net(&self) -> Option<&str> {
        self.pin(self.function.output_pin())
    }

    pub fn input_nets(&self) -> impl Iterator<Item = &str> + '_ {
        self.function.input_pins().iter().filter_map(|p| self.pin(p))
    }
}

/// A flat module: ports, nets and cell instances.
///
/// Mutators do not check invariants; call [`validate`] (or go through
/// [`parse_netlist`]) to establish them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub nets: BTreeSet<String>,
    pub instances: Vec<Instance>,
}

impl Netlist {
    pub fn new(name: &str) -> Self {
        Netlist { name: name.to_string(), ..Default::default() }
    }

    pub fn add_input(&mut self, net: &str) {
        self.inputs.push(net.to_string());
        self.nets.insert(net.to_string());
    }

    pub fn add_output(&mut self, net: &str) {
        self.outputs.push(net.to_string());
        self.nets.insert(net.to_string());
    }

    pub fn add_wire(&mut self, net: &str) {
        self.nets.insert(net.to_string());
    }

    pub fn add_instance(&mut self, inst: Instance) {
        self.instances.push(inst);
    }

    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn instance_mut(&mut self, name: &str) -> Option<&mut Instance> {
        self.instances.iter_mut().find(|i| i.name == name)
    }

    pub fn is_input(&self, net: &str) -> bool {
        self.inputs.iter().any(|n| n == net)
    }

    /// Nets that are neither inputs nor outputs.
    pub fn wires(&self) -> impl Iterator<Item = &str> + '_ {
        self.nets.iter().filter(|n| !self.is_input(n) && !self.outputs.contains(n)).map(String::as_str)
    }

    /// First instance whose output pin drives `net`.
    pub fn driver_of(&self, net: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.output_net() == Some(net))
    }

    /// `(instance, pin)` pairs whose input pins read `net`.
    pub fn loads_of<'a>(&'a self, net: &'a str) -> impl Iterator<Item = (&'a Instance, &'static str)> + 'a {
        self.instances.iter().flat_map(move |inst| {
            inst.function.input_pins().iter().filter(move |p| inst.pin(p) == Some(net)).map(move |p| (inst, *p))
        })
    }

    /// Renames a net everywhere it appears. Fails when `new` already exists.
    pub fn rename_net(&mut self, old: &str, new: &str) -> Result<(), NetlistError> {
        if !self.nets.contains(old) {
            return Err(NetlistError::UnknownNet(old.to_string()));
        }
        if self.nets.contains(new) {
            return Err(NetlistError::NameCollision(new.to_string()));
        }
        self.nets.remove(old);
        self.nets.insert(new.to_string());
        for port in self.inputs.iter_mut().chain(self.outputs.iter_mut()) {
            if port == old {
                *port = new.to_string();
            }
        }
        for inst in &mut self.instances {
            for net in inst.pins.values_mut() {
                if net == old {
                    *net = new.to_string();
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Netlist {
    type Err = NetlistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_netlist(s)
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_netlist(self))
    }
}

/// `width` ungated DFF_CONV flip-flops sharing clock `clk`, with data
/// inputs `D1..Dwidth` and outputs `Q1..Qwidth`.
pub fn build_register_demo(width: usize) -> Result<Netlist, NetlistError> {
    if width == 0 {
        return Err(NetlistError::ZeroWidth);
    }
    let mut n = Netlist::new(&format!("register{width}"));
    n.add_input("clk");
    for i in 1..=width {
        n.add_input(&format!("D{i}"));
    }
    for i in 1..=width {
        n.add_output(&format!("Q{i}"));
    }
    for i in 1..=width {
        let (d, q) = (format!("D{i}"), format!("Q{i}"));
        n.add_instance(Instance::standard(
            CellFunction::DffConv,
            &format!("ff{i}"),
            &[("D", &d), ("CLK", "clk"), ("Q", &q)],
        ));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_demo_width_two() {
        let n = build_register_demo(2).unwrap();
        assert_eq!(n.instances.len(), 2);
        assert_eq!(n.inputs, ["clk", "D1", "D2"]);
        assert_eq!(n.outputs, ["Q1", "Q2"]);
        assert!(n.instances.iter().all(|i| i.cell_type == "DFF_CONV"));
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn register_demo_degenerate_and_zero() {
        assert_eq!(build_register_demo(1).unwrap().instances.len(), 1);
        assert!(matches!(build_register_demo(0), Err(NetlistError::ZeroWidth)));
    }

    #[test]
    fn register_demo_always_valid() {
        for w in 1..=64 {
            let n = build_register_demo(w).unwrap();
            assert_eq!(n.instances.len(), w);
            assert_eq!(n.nets.len(), 1 + 2 * w);
            assert!(validate(&n).is_empty(), "width {w}");
        }
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("_a9"));
        assert!(is_identifier("ckg_bar_ff1"));
        assert!(!is_identifier("9a"));
        assert!(!is_identifier("a-b"));
        assert!(!is_identifier(""));
    }

    #[test]
    fn rename_net_rewrites_pins_and_ports() {
        let mut n = build_register_demo(1).unwrap();
        n.rename_net("Q1", "out").unwrap();
        assert_eq!(n.outputs, ["out"]);
        assert_eq!(n.instances[0].pin("Q"), Some("out"));
        assert!(matches!(n.rename_net("D1", "clk"), Err(NetlistError::NameCollision(_))));
    }

    #[test]
    fn function_tags_round_trip() {
        for f in CellFunction::ALL {
            assert_eq!(f.tag().parse::<CellFunction>().unwrap(), f);
        }
        assert!("BUF".parse::<CellFunction>().is_err());
    }
}
