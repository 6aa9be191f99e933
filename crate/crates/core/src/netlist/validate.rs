// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::Netlist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticCategory {
    /// A pin names a net that is not declared.
    UndeclaredNet,
    /// A pin required by the cell interface is missing.
    UnboundPin,
    /// A pin that the cell interface does not have.
    UnknownPin,
    DuplicateInstance,
    MultiplyDrivenNet,
    UndrivenNet,
    CombinationalCycle,
}

impl DiagnosticCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCategory::UndeclaredNet => "undeclared-net",
            DiagnosticCategory::UnboundPin => "unbound-pin",
            DiagnosticCategory::UnknownPin => "unknown-pin",
            DiagnosticCategory::DuplicateInstance => "duplicate-instance",
            DiagnosticCategory::MultiplyDrivenNet => "multiply-driven-net",
            DiagnosticCategory::UndrivenNet => "undriven-net",
            DiagnosticCategory::CombinationalCycle => "combinational-cycle",
        }
    }
}

impl fmt::Display for DiagnosticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub category: DiagnosticCategory,
    /// Offending net or instance.
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.category, self.message)
    }
}

fn diag(category: DiagnosticCategory, entity: &str, message: String) -> Diagnostic {
    Diagnostic { category, entity: entity.to_string(), message }
}

/// Checks every structural invariant; an empty list means the netlist is valid.
pub fn validate(n: &Netlist) -> Vec<Diagnostic> {
    use DiagnosticCategory::*;
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for inst in &n.instances {
        if !seen.insert(inst.name.as_str()) {
            out.push(diag(DuplicateInstance, &inst.name, format!("instance `{}` declared twice", inst.name)));
        }
    }

    for inst in &n.instances {
        for pin in inst.function.pins() {
            if !inst.pins.contains_key(pin) {
                out.push(diag(
                    UnboundPin,
                    &inst.name,
                    format!("pin {pin} of `{}` ({}) is not bound", inst.name, inst.cell_type),
                ));
            }
        }
        for (pin, net) in &inst.pins {
            if !inst.function.has_pin(pin) {
                out.push(diag(
                    UnknownPin,
                    &inst.name,
                    format!("{} has no pin {pin} (on `{}`)", inst.cell_type, inst.name),
                ));
            } else if !n.nets.contains(net) {
                out.push(diag(
                    UndeclaredNet,
                    net,
                    format!("pin {pin} of `{}` binds undeclared net `{net}`", inst.name),
                ));
            }
        }
    }

    let mut drivers: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for input in &n.inputs {
        drivers.entry(input.as_str()).or_default().push(format!("input `{input}`"));
    }
    for inst in &n.instances {
        if let Some(net) = inst.output_net() {
            drivers.entry(net).or_default().push(format!("`{}`", inst.name));
        }
    }
    for net in &n.nets {
        match drivers.get(net.as_str()).map(Vec::len).unwrap_or(0) {
            0 => out.push(diag(UndrivenNet, net, format!("net `{net}` has no driver"))),
            1 => {}
            _ => out.push(diag(
                MultiplyDrivenNet,
                net,
                format!("net `{net}` is driven by {}", drivers[net.as_str()].join(", ")),
            )),
        }
    }

    if let Some(inst) = find_combinational_cycle(n) {
        out.push(diag(CombinationalCycle, &inst, format!("combinational cycle through `{inst}`")));
    }
    out
}

/// Depth-first search over non-sequential cells. Returns one instance on a
/// cycle, if any.
fn find_combinational_cycle(n: &Netlist) -> Option<String> {
    let comb: Vec<usize> = (0..n.instances.len()).filter(|&i| !n.instances[i].function.is_sequential()).collect();
    let mut by_output: HashMap<&str, Vec<usize>> = HashMap::new();
    for &i in &comb {
        if let Some(net) = n.instances[i].output_net() {
            by_output.entry(net).or_default().push(i);
        }
    }
    // Edges run from a cell to the cells driving its inputs.
    let preds = |i: usize| -> Vec<usize> {
        n.instances[i].input_nets().flat_map(|net| by_output.get(net).cloned().unwrap_or_default()).collect()
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; n.instances.len()];
    for &root in &comb {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, preds(root), 0usize)];
        mark[root] = Mark::Open;
        while let Some((node, next, idx)) = stack.last_mut() {
            if *idx < next.len() {
                let succ = next[*idx];
                *idx += 1;
                match mark[succ] {
                    Mark::Open => return Some(n.instances[succ].name.clone()),
                    Mark::New => {
                        mark[succ] = Mark::Open;
                        let p = preds(succ);
                        stack.push((succ, p, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[*node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_register_demo, CellFunction, Instance};

    fn categories(n: &Netlist) -> Vec<DiagnosticCategory> {
        validate(n).into_iter().map(|d| d.category).collect()
    }

    #[test]
    fn floating_net_is_undriven() {
        let mut n = build_register_demo(2).unwrap();
        n.add_wire("floating");
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].category, DiagnosticCategory::UndrivenNet);
        assert_eq!(d[0].entity, "floating");
    }

    #[test]
    fn self_loop_inverter_is_a_cycle() {
        let mut n = Netlist::new("loop");
        n.add_wire("y");
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "y"), ("Y", "y")]));
        assert_eq!(categories(&n), [DiagnosticCategory::CombinationalCycle]);
    }

    #[test]
    fn loop_through_flip_flop_is_fine() {
        let mut n = Netlist::new("toggle");
        n.add_input("clk");
        n.add_output("q");
        n.add_wire("qn");
        n.add_instance(Instance::standard(CellFunction::DffConv, "ff", &[("D", "qn"), ("CLK", "clk"), ("Q", "q")]));
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "q"), ("Y", "qn")]));
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn instance_driving_an_input_is_multiply_driven() {
        let mut n = Netlist::new("m");
        n.add_input("a");
        n.add_output("y");
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "a"), ("Y", "y")]));
        n.add_instance(Instance::standard(CellFunction::Inv, "u2", &[("A", "y"), ("Y", "a")]));
        let d = validate(&n);
        assert!(d.iter().any(|d| d.category == DiagnosticCategory::MultiplyDrivenNet && d.entity == "a"));
    }

    /// Brute-force cycle oracle: a cell is on a cycle iff it can reach itself
    /// through combinational fan-out.
    fn reaches_itself(n: &Netlist) -> bool {
        let k = n.instances.len();
        let mut reach = vec![vec![false; k]; k];
        for (i, a) in n.instances.iter().enumerate() {
            if a.function.is_sequential() {
                continue;
            }
            for (j, b) in n.instances.iter().enumerate() {
                if !b.function.is_sequential() && b.input_nets().any(|net| Some(net) == a.output_net()) {
                    reach[i][j] = true;
                }
            }
        }
        for m in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if reach[i][m] && reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..k).any(|i| reach[i][i])
    }

    #[test]
    fn cycle_detection_matches_transitive_closure() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let cells = rng.random_range(1..7);
            let mut n = Netlist::new("r");
            n.add_input("a");
            for c in 0..cells {
                n.add_wire(&format!("n{c}"));
            }
            for c in 0..cells {
                let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let k = rng.random_range(0..=cells);
                    if k == cells {
                        "a".to_string()
                    } else {
                        format!("n{k}")
                    }
                };
                let (a, b) = (pick(&mut rng), pick(&mut rng));
                let out = format!("n{c}");
                let inst = if rng.random_bool(0.3) {
                    Instance::standard(CellFunction::DffConv, &format!("c{c}"), &[("D", &a), ("CLK", "a"), ("Q", &out)])
                } else {
                    Instance::standard(CellFunction::Nand2, &format!("c{c}"), &[("A", &a), ("B", &b), ("Y", &out)])
                };
                n.add_instance(inst);
            }
            let has = categories(&n).contains(&DiagnosticCategory::CombinationalCycle);
            assert_eq!(has, reaches_itself(&n), "{n}");
        }
    }
}
