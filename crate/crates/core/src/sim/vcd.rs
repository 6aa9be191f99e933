// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;

use super::Trace;
use crate::error::SimError;
use crate::scalar::Scalar;

/// Short printable identifier code: base-94 over `!`..`~`.
fn id_code(mut k: usize) -> String {
    let mut out = String::new();
    loop {
        out.push((b'!' + (k % 94) as u8) as char);
        k /= 94;
        if k == 0 {
            return out;
        }
        k -= 1;
    }
}

/// Renders a trace as a value change dump with a 1 ps timescale. Event
/// times are rounded to the nearest picosecond.
pub fn vcd_string<T: Scalar>(t: &Trace<T>) -> Result<String, SimError> {
    if t.nets.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let ids: Vec<String> = (0..t.nets.len()).map(id_code).collect();
    let mut out = String::new();
    let _ = writeln!(out, "$version cgforge {} $end", env!("CARGO_PKG_VERSION"));
    out.push_str("$timescale 1ps $end\n");
    let _ = writeln!(out, "$scope module {} $end", t.module);
    for (net, id) in t.nets.iter().zip(&ids) {
        let _ = writeln!(out, "$var wire 1 {id} {net} $end");
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n#0\n$dumpvars\n");
    for (w, id) in t.waveforms.iter().zip(&ids) {
        let _ = writeln!(out, "{}{id}", w[0].1);
    }
    out.push_str("$end\n");

    let mut changes: Vec<(u64, usize, usize)> = Vec::new();
    for (net, w) in t.waveforms.iter().enumerate() {
        for (k, (time, _)) in w.iter().enumerate().skip(1) {
            changes.push((time.as_f64().round().max(0.0) as u64, net, k));
        }
    }
    changes.sort_unstable();
    let mut current = None;
    for (time, net, k) in changes {
        if current != Some(time) {
            let _ = writeln!(out, "#{time}");
            current = Some(time);
        }
        let _ = writeln!(out, "{}{}", t.waveforms[net][k].1, ids[net]);
    }
    Ok(out)
}

pub fn write_vcd<T: Scalar>(t: &Trace<T>, path: &Path) -> Result<(), SimError> {
    let text = vcd_string(t)?;
    std::fs::write(path, text)?;
    Ok(())
}
