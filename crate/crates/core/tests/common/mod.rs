// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use cgforge::netlist::{CellFunction, Instance, Netlist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random valid netlist over every cell function. Cells read only nets
/// defined before them, except flip-flop `D` pins, which may read any net,
/// so every cycle passes through a flip-flop.
pub fn random_netlist(seed: u64, cells: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Netlist::new(&format!("rand{seed}"));
    let inputs = ["clk", "a0", "a1", "a2"];
    for i in inputs {
        n.add_input(i);
    }
    let data: Vec<String> = inputs[1..].iter().map(|s| s.to_string()).collect();
    let mut pool = data.clone();
    let cells = cells.max(CellFunction::ALL.len());
    let outs: Vec<String> = (0..cells).map(|k| format!("n{k}")).collect();
    for (k, out) in outs.iter().enumerate() {
        let f = if k < CellFunction::ALL.len() {
            CellFunction::ALL[k]
        } else {
            CellFunction::ALL[rng.random_range(0..CellFunction::ALL.len())]
        };
        let mut pins: Vec<(&str, String)> = Vec::new();
        for &pin in f.input_pins() {
            let net = match (f, pin) {
                (CellFunction::DffConv, "CLK") => "clk".to_string(),
                (CellFunction::DffConv, "D") => outs[rng.random_range(0..outs.len())].clone(),
                _ => pool[rng.random_range(0..pool.len())].clone(),
            };
            pins.push((pin, net));
        }
        pins.push((f.output_pin(), out.clone()));
        let refs: Vec<(&str, &str)> = pins.iter().map(|(p, s)| (*p, s.as_str())).collect();
        n.add_instance(Instance::standard(f, &format!("u{k}"), &refs));
        pool.push(out.clone());
    }
    for (k, out) in outs.iter().enumerate() {
        if k + 2 >= outs.len() {
            n.add_output(out);
        } else {
            n.add_wire(out);
        }
    }
    n
}

pub fn data_inputs(n: &Netlist) -> Vec<String> {
    n.inputs.iter().filter(|i| *i != "clk").cloned().collect()
}
