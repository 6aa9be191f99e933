// SPDX-License-Identifier: Apache-2.0

//! Cell library profiles: delays, energies, leakage and transistor counts,
//! plus the LECTOR reduction factors relating LECTOR cells to their plain
//! counterparts.
//!
//! Units: delays and timing windows in ps, energies in fJ per transition,
//! leakage as static power in nW.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::ProfileError;
use crate::netlist::{CellFunction, CellResolver, Netlist};
use crate::scalar::{approx_eq, Scalar};

const FACTOR_TOLERANCE: f64 = 1e-9;

const PAPER_MATCH: &str = include_str!("../profiles/paper-match.profile");
const SYMMETRIC: &str = include_str!("../profiles/symmetric.profile");

/// Names of the profiles compiled into the library.
pub const BUNDLED_PROFILES: [&str; 2] = ["paper-match", "symmetric"];

#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec<T> {
    pub name: String,
    pub function: CellFunction,
    pub t_rise: T,
    pub t_fall: T,
    /// Energy per output transition.
    pub e_toggle: T,
    /// Short-circuit energy per output transition.
    pub e_contention: T,
    /// Internal clock-node energy per transition on the CLK pin (flip-flops).
    pub e_clock: T,
    pub p_leak: T,
    pub transistors: u32,
    /// Setup window checked before a capturing clock edge.
    pub setup: T,
    /// Hold window checked after a capturing clock edge.
    pub hold: T,
}

impl<T: Scalar> CellSpec<T> {
    pub fn delay_for(&self, rising: bool) -> T {
        if rising {
            self.t_rise
        } else {
            self.t_fall
        }
    }

    fn check(&self) -> Result<(), ProfileError> {
        let bad = |what: &str| Err(ProfileError::Invariant(format!("cell {}: {what}", self.name)));
        if self.t_rise <= T::zero() || self.t_fall <= T::zero() {
            return bad("delays must be positive");
        }
        if self.e_toggle < T::zero() || self.e_contention < T::zero() || self.e_clock < T::zero() {
            return bad("energies must be non-negative");
        }
        if self.p_leak < T::zero() {
            return bad("leakage must be non-negative");
        }
        if self.transistors == 0 {
            return bad("transistor count must be at least 1");
        }
        if self.setup < T::zero() || self.hold < T::zero() {
            return bad("setup/hold windows must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryProfile<T> {
    pub name: String,
    pub cells: BTreeMap<String, CellSpec<T>>,
    pub lector_leak_factor: T,
    pub lector_contention_factor: T,
    pub lector_delay_penalty: T,
    pub v_dd: T,
    pub notes: Vec<String>,
}

impl<T: Scalar> CellResolver for LibraryProfile<T> {
    fn resolve(&self, cell_type: &str) -> Option<CellFunction> {
        self.cells.get(cell_type).map(|c| c.function)
    }
}

impl<T: Scalar> LibraryProfile<T> {
    /// A profile compiled into the crate, by name.
    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name {
            "paper-match" => PAPER_MATCH,
            "symmetric" => SYMMETRIC,
            _ => return None,
        };
        Some(parse_profile(text).expect("bundled profile is valid"))
    }

    pub fn cell(&self, name: &str) -> Result<&CellSpec<T>, ProfileError> {
        self.cells.get(name).ok_or_else(|| ProfileError::UnknownCellType(name.to_string()))
    }

    /// The canonical cell for a behavior tag (the cell named after the tag).
    pub fn standard_cell(&self, function: CellFunction) -> Result<&CellSpec<T>, ProfileError> {
        self.cell(function.tag())
    }

    /// Verifies the per-cell invariants and the LECTOR factor relations.
    pub fn check_invariants(&self) -> Result<(), ProfileError> {
        let one = T::one();
        let in_unit = |v: T| v > T::zero() && v <= one;
        if !in_unit(self.lector_leak_factor) {
            return Err(ProfileError::Invariant("lector_leak_factor must lie in (0, 1]".into()));
        }
        if !in_unit(self.lector_contention_factor) {
            return Err(ProfileError::Invariant("lector_contention_factor must lie in (0, 1]".into()));
        }
        if self.lector_delay_penalty < one {
            return Err(ProfileError::Invariant("lector_delay_penalty must be at least 1".into()));
        }
        for function in CellFunction::ALL {
            match self.cells.get(function.tag()) {
                Some(c) if c.function == function => {}
                Some(c) => {
                    return Err(ProfileError::Invariant(format!(
                        "cell {} must have function {function}, has {}",
                        c.name, c.function
                    )))
                }
                None => return Err(ProfileError::MissingCell(function.tag().to_string())),
            }
        }
        let tol = FACTOR_TOLERANCE.max(8.0 * T::resolution());
        for cell in self.cells.values() {
            cell.check()?;
            let Some(plain_fn) = cell.function.plain_counterpart() else { continue };
            let plain = self.standard_cell(plain_fn)?;
            let relations = [
                ("p_leak", cell.p_leak, plain.p_leak, self.lector_leak_factor),
                ("e_contention", cell.e_contention, plain.e_contention, self.lector_contention_factor),
                ("t_rise", cell.t_rise, plain.t_rise, self.lector_delay_penalty),
                ("t_fall", cell.t_fall, plain.t_fall, self.lector_delay_penalty),
            ];
            for (what, got, base, factor) in relations {
                let want = base * factor;
                if !approx_eq(got, want, tol) {
                    return Err(ProfileError::Invariant(format!(
                        "{} {what} = {got}, expected {factor} x {} {what} = {want}",
                        cell.name, plain.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same profile with new LECTOR factors; every LECTOR cell's leakage,
    /// contention energy and delays are re-derived from its plain counterpart.
    pub fn with_lector_factors(&self, leak: T, contention: T, delay_penalty: T) -> Result<Self, ProfileError> {
        let mut out = self.clone();
        out.lector_leak_factor = leak;
        out.lector_contention_factor = contention;
        out.lector_delay_penalty = delay_penalty;
        let names: Vec<String> = out.cells.keys().cloned().collect();
        for name in names {
            let function = out.cells[&name].function;
            let Some(plain_fn) = function.plain_counterpart() else { continue };
            let plain = out.standard_cell(plain_fn)?.clone();
            let cell = out.cells.get_mut(&name).expect("key listed above");
            cell.p_leak = plain.p_leak * leak;
            cell.e_contention = plain.e_contention * contention;
            cell.t_rise = plain.t_rise * delay_penalty;
            cell.t_fall = plain.t_fall * delay_penalty;
        }
        out.check_invariants()?;
        Ok(out)
    }

    /// Multiplies every energy and leakage figure by `k`.
    pub fn scaled_energies(&self, k: T) -> Self {
        let mut out = self.clone();
        for c in out.cells.values_mut() {
            c.e_toggle = c.e_toggle * k;
            c.e_contention = c.e_contention * k;
            c.e_clock = c.e_clock * k;
            c.p_leak = c.p_leak * k;
        }
        out
    }

    /// Multiplies every cell delay by `k`.
    pub fn scaled_delays(&self, k: T) -> Self {
        let mut out = self.clone();
        for c in out.cells.values_mut() {
            c.t_rise = c.t_rise * k;
            c.t_fall = c.t_fall * k;
        }
        out
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> ProfileError {
    ProfileError::Parse { line, message: message.into() }
}

fn number<T: Scalar>(line: usize, key: &str, text: &str) -> Result<T, ProfileError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(T::of(v)),
        _ => Err(parse_err(line, format!("{key}: `{text}` is not a number"))),
    }
}

/// Parses the line-oriented profile format and checks all invariants.
pub fn parse_profile<T: Scalar>(text: &str) -> Result<LibraryProfile<T>, ProfileError> {
    let mut profile: Option<LibraryProfile<T>> = None;
    let mut ended = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if ended {
            return Err(parse_err(line, "statement after endprofile"));
        }
        let mut toks = body.split_whitespace();
        let head = toks.next().expect("non-empty line");
        let Some(p) = profile.as_mut() else {
            match (head, toks.next(), toks.next()) {
                ("profile", Some(name), None) => {
                    profile = Some(LibraryProfile {
                        name: name.to_string(),
                        cells: BTreeMap::new(),
                        lector_leak_factor: T::of(0.2),
                        lector_contention_factor: T::of(0.1),
                        lector_delay_penalty: T::of(1.15),
                        v_dd: T::of(1.1),
                        notes: Vec::new(),
                    });
                    continue;
                }
                _ => return Err(parse_err(line, "expected `profile <name>`")),
            }
        };
        match head {
            "param" => {
                let (Some(key), Some(value), None) = (toks.next(), toks.next(), toks.next()) else {
                    return Err(parse_err(line, "expected `param <key> <value>`"));
                };
                let v = number(line, key, value)?;
                match key {
                    "lector_leak_factor" => p.lector_leak_factor = v,
                    "lector_contention_factor" => p.lector_contention_factor = v,
                    "lector_delay_penalty" => p.lector_delay_penalty = v,
                    "v_dd" => p.v_dd = v,
                    other => return Err(parse_err(line, format!("unknown param `{other}`"))),
                }
            }
            "note" => p.notes.push(body["note".len()..].trim().to_string()),
            "cell" => {
                let (Some(name), Some(function)) = (toks.next(), toks.next()) else {
                    return Err(parse_err(line, "expected `cell <NAME> <FUNCTION> key=value...`"));
                };
                let function: CellFunction = function.parse().map_err(|e: String| parse_err(line, e))?;
                let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
                for kv in toks {
                    let Some((k, v)) = kv.split_once('=') else {
                        return Err(parse_err(line, format!("expected key=value, found `{kv}`")));
                    };
                    if fields.insert(k, v).is_some() {
                        return Err(parse_err(line, format!("`{k}` given twice")));
                    }
                }
                let mut take = |key: &str, default: Option<f64>| -> Result<T, ProfileError> {
                    match (fields.remove(key), default) {
                        (Some(v), _) => number(line, key, v),
                        (None, Some(d)) => Ok(T::of(d)),
                        (None, None) => Err(parse_err(line, format!("cell {name}: missing `{key}`"))),
                    }
                };
                let t_rise = take("t_rise", None)?;
                let t_fall = take("t_fall", None)?;
                let e_toggle = take("e_toggle", None)?;
                let e_contention = take("e_contention", None)?;
                let e_clock = take("e_clock", Some(0.0))?;
                let p_leak = take("p_leak", None)?;
                let setup = take("setup", Some(0.0))?;
                let hold = take("hold", Some(0.0))?;
                let transistors = match fields.remove("transistors").map(str::parse::<u32>) {
                    Some(Ok(t)) => t,
                    Some(Err(_)) => return Err(parse_err(line, "transistors must be an integer")),
                    None => return Err(parse_err(line, format!("cell {name}: missing `transistors`"))),
                };
                if let Some(k) = fields.keys().next() {
                    return Err(parse_err(line, format!("unknown cell field `{k}`")));
                }
                let spec = CellSpec {
                    name: name.to_string(),
                    function,
                    t_rise,
                    t_fall,
                    e_toggle,
                    e_contention,
                    e_clock,
                    p_leak,
                    transistors,
                    setup,
                    hold,
                };
                if p.cells.insert(name.to_string(), spec).is_some() {
                    return Err(parse_err(line, format!("cell {name} defined twice")));
                }
            }
            "endprofile" => ended = true,
            other => return Err(parse_err(line, format!("unknown statement `{other}`"))),
        }
    }
    let profile = profile.ok_or_else(|| parse_err(1, "missing `profile` header"))?;
    if !ended {
        return Err(parse_err(text.lines().count().max(1), "missing `endprofile`"));
    }
    profile.check_invariants()?;
    Ok(profile)
}

/// Loads a profile file from disk.
pub fn load_profile<T: Scalar>(path: &Path) -> Result<LibraryProfile<T>, ProfileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
    parse_profile(&text)
}

pub fn write_profile<T: Scalar>(p: &LibraryProfile<T>) -> String {
    let mut out = format!("profile {}\n", p.name);
    let _ = writeln!(out, "param lector_leak_factor {}", p.lector_leak_factor);
    let _ = writeln!(out, "param lector_contention_factor {}", p.lector_contention_factor);
    let _ = writeln!(out, "param lector_delay_penalty {}", p.lector_delay_penalty);
    let _ = writeln!(out, "param v_dd {}", p.v_dd);
    for note in &p.notes {
        let _ = writeln!(out, "note {note}");
    }
    for c in p.cells.values() {
        let _ = write!(
            out,
            "cell {} {} t_rise={} t_fall={} e_toggle={} e_contention={} e_clock={} p_leak={} transistors={}",
            c.name, c.function, c.t_rise, c.t_fall, c.e_toggle, c.e_contention, c.e_clock, c.p_leak, c.transistors
        );
        let _ = writeln!(out, " setup={} hold={}", c.setup, c.hold);
    }
    out.push_str("endprofile\n");
    out
}

/// Sum of per-instance transistor counts.
pub fn transistor_total<T: Scalar>(n: &Netlist, p: &LibraryProfile<T>) -> Result<u64, ProfileError> {
    n.instances.iter().try_fold(0u64, |acc, inst| Ok(acc + p.cell(&inst.cell_type)?.transistors as u64))
}

/// Total static power in nW. LECTOR cells already carry reduced values.
pub fn effective_leakage<T: Scalar>(n: &Netlist, p: &LibraryProfile<T>) -> Result<T, ProfileError> {
    n.instances.iter().try_fold(T::zero(), |acc, inst| Ok(acc + p.cell(&inst.cell_type)?.p_leak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_register_demo, Instance};

    fn paper() -> LibraryProfile<f64> {
        LibraryProfile::bundled("paper-match").unwrap()
    }

    #[test]
    fn bundled_profiles_load() {
        for name in BUNDLED_PROFILES {
            let p: LibraryProfile<f64> = LibraryProfile::bundled(name).unwrap();
            assert_eq!(p.name, name);
            p.check_invariants().unwrap();
        }
        let p = paper();
        assert_eq!(p.cell("DFF_CONV").unwrap().transistors, 21);
        let overhead: u32 = ["XOR2", "LECTOR_AND2", "LECTOR_INV"].iter().map(|c| p.cell(c).unwrap().transistors).sum();
        assert_eq!(overhead, 29);
        assert_eq!(p.cell("CKBUF").unwrap().transistors, 3);
    }

    #[test]
    fn bundled_profile_in_f32_and_rational() {
        let p: LibraryProfile<f32> = LibraryProfile::bundled("paper-match").unwrap();
        assert_eq!(p.cell("XOR2").unwrap().t_rise, 30.0);
        let r: LibraryProfile<num_rational::Ratio<i64>> = LibraryProfile::bundled("symmetric").unwrap();
        assert_eq!(r.cell("INV").unwrap().t_rise, num_rational::Ratio::from_integer(10));
    }

    #[test]
    fn identity_leak_factor_loads() {
        let p = paper().with_lector_factors(1.0, 0.1, 1.15).unwrap();
        let text = write_profile(&p);
        let q: LibraryProfile<f64> = parse_profile(&text).unwrap();
        assert_eq!(q.cell("LECTOR_INV").unwrap().p_leak, q.cell("INV").unwrap().p_leak);
        assert_eq!(q.cell("LECTOR_AND2").unwrap().p_leak, q.cell("AND2").unwrap().p_leak);
    }

    #[test]
    fn leakier_lector_inverter_is_rejected() {
        let text = PAPER_MATCH.replace(
            "cell LECTOR_INV LECTOR_INV t_rise=23 t_fall=46 e_toggle=0.6 e_contention=0.03 p_leak=1.2",
            "cell LECTOR_INV LECTOR_INV t_rise=23 t_fall=46 e_toggle=0.6 e_contention=0.03 p_leak=9",
        );
        assert_ne!(text, PAPER_MATCH);
        assert!(matches!(parse_profile::<f64>(&text), Err(ProfileError::Invariant(_))));
    }

    #[test]
    fn missing_cell_and_parse_errors() {
        let text: String =
            PAPER_MATCH.lines().filter(|l| !l.starts_with("cell XOR2")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_profile::<f64>(&text), Err(ProfileError::MissingCell(c)) if c == "XOR2"));
        let text = PAPER_MATCH.replace("t_rise=30", "t_rise=fast");
        assert!(matches!(parse_profile::<f64>(&text), Err(ProfileError::Parse { .. })));
        assert!(matches!(parse_profile::<f64>("profile x\n"), Err(ProfileError::Parse { .. })));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.profile");
        std::fs::write(&path, PAPER_MATCH).unwrap();
        assert_eq!(load_profile::<f64>(&path).unwrap(), paper());
        assert!(matches!(load_profile::<f64>(&dir.path().join("nope")), Err(ProfileError::Io { .. })));
    }

    #[test]
    fn transistor_totals() {
        let p = paper();
        assert_eq!(transistor_total(&build_register_demo(2).unwrap(), &p).unwrap(), 42);
        assert_eq!(transistor_total(&Netlist::new("e"), &p).unwrap(), 0);
        let mut n = Netlist::new("m");
        n.add_instance(Instance::new("NOPE", CellFunction::Inv, "u", &[]));
        assert!(matches!(transistor_total(&n, &p), Err(ProfileError::UnknownCellType(_))));
    }

    #[test]
    fn leakage_sums() {
        let p = paper();
        assert_eq!(effective_leakage(&Netlist::new("e"), &p).unwrap(), 0.0);
        let mut n = Netlist::new("m");
        n.add_input("a");
        n.add_output("y");
        n.add_instance(Instance::standard(CellFunction::Inv, "u1", &[("A", "a"), ("Y", "y")]));
        let mut q = p.clone();
        q.cells.get_mut("INV").unwrap().p_leak = 5.0;
        assert_eq!(effective_leakage(&n, &q).unwrap(), 5.0);
    }

    #[test]
    fn profile_text_round_trip() {
        let p = paper();
        let q: LibraryProfile<f64> = parse_profile(&write_profile(&p)).unwrap();
        assert_eq!(p, q);
    }
}
