// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{is_identifier, validate, CellResolver, Instance, Netlist, StandardCells};
use crate::error::NetlistError;

struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits on whitespace, keeping 1-based columns; `#` ends the line.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token { text: &line[s..i], column: line[..s].chars().count() + 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, column, message: message.into() }
}

fn ident<'a>(tok: &Token<'a>, line: usize, what: &str) -> Result<&'a str, NetlistError> {
    if is_identifier(tok.text) {
        Ok(tok.text)
    } else {
        Err(syntax(line, tok.column, format!("invalid {what} `{}`", tok.text)))
    }
}

/// Parses a netlist whose cell types are the standard behavior tags.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    parse_netlist_with(text, &StandardCells)
}

/// Parses a netlist, resolving cell types through `cells` (typically a
/// library profile), and checks every structural invariant.
pub fn parse_netlist_with(text: &str, cells: &dyn CellResolver) -> Result<Netlist, NetlistError> {
    let n = parse_netlist_unvalidated(text, cells)?;
    if let Some(first) = validate(&n).into_iter().next() {
        return Err(NetlistError::Invalid(first));
    }
    Ok(n)
}

/// Syntax-level parse only; pair with [`validate`] to see every diagnostic.
pub fn parse_netlist_unvalidated(text: &str, cells: &dyn CellResolver) -> Result<Netlist, NetlistError> {
    let mut netlist: Option<Netlist> = None;
    let mut ended = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        if ended {
            return Err(syntax(line, head.column, "statement after endmodule"));
        }
        let Some(n) = netlist.as_mut() else {
            if head.text != "module" {
                return Err(syntax(line, head.column, format!("expected `module`, found `{}`", head.text)));
            }
            match toks.as_slice() {
                [_, name] => netlist = Some(Netlist::new(ident(name, line, "module name")?)),
                [_] => return Err(syntax(line, head.column + head.text.len(), "missing module name")),
                [_, _, extra, ..] => return Err(syntax(line, extra.column, "unexpected token after module name")),
                [] => unreachable!(),
            }
            continue;
        };
        match head.text {
            "input" | "output" | "wire" => {
                if toks.len() < 2 {
                    return Err(syntax(line, head.column, format!("`{}` needs at least one net", head.text)));
                }
                for tok in &toks[1..] {
                    let net = ident(tok, line, "net name")?;
                    let dup = match head.text {
                        "input" => n.inputs.iter().any(|x| x == net),
                        "output" => n.outputs.iter().any(|x| x == net),
                        _ => false,
                    };
                    if dup {
                        return Err(syntax(line, tok.column, format!("{} `{net}` declared twice", head.text)));
                    }
                    match head.text {
                        "input" => n.add_input(net),
                        "output" => n.add_output(net),
                        _ => n.add_wire(net),
                    }
                }
            }
            "cell" => {
                if toks.len() < 3 {
                    return Err(syntax(line, head.column, "`cell` needs a type and an instance name"));
                }
                let cell_type = ident(&toks[1], line, "cell type")?;
                let function = cells
                    .resolve(cell_type)
                    .ok_or_else(|| NetlistError::UnknownCellType { line, cell_type: cell_type.to_string() })?;
                let name = ident(&toks[2], line, "instance name")?;
                let mut pins = BTreeMap::new();
                for tok in &toks[3..] {
                    let Some((pin, net)) = tok.text.split_once('=') else {
                        return Err(syntax(line, tok.column, format!("expected PIN=net, found `{}`", tok.text)));
                    };
                    let pin_tok = Token { text: pin, column: tok.column };
                    let pin = ident(&pin_tok, line, "pin name")?;
                    let net_tok = Token { text: net, column: tok.column + pin.len() + 1 };
                    let net = ident(&net_tok, line, "net name")?;
                    if !function.has_pin(pin) {
                        return Err(syntax(line, tok.column, format!("{cell_type} has no pin {pin}")));
                    }
                    if pins.insert(pin.to_string(), net.to_string()).is_some() {
                        return Err(syntax(line, tok.column, format!("pin {pin} bound twice")));
                    }
                }
                n.add_instance(Instance { name: name.to_string(), cell_type: cell_type.to_string(), function, pins });
            }
            "endmodule" => {
                if let Some(extra) = toks.get(1) {
                    return Err(syntax(line, extra.column, "unexpected token after endmodule"));
                }
                ended = true;
            }
            other => return Err(syntax(line, head.column, format!("unknown statement `{other}`"))),
        }
    }

    let Some(n) = netlist else {
        return Err(syntax(last_line.max(1), 1, "missing `module` header"));
    };
    if !ended {
        return Err(syntax(last_line.max(1), 1, "missing `endmodule`"));
    }
    Ok(n)
}

/// Canonical text form: ports in declaration order, wires sorted, pins in
/// interface order. Empty port sections are omitted.
pub fn write_netlist(n: &Netlist) -> String {
    let mut out = format!("module {}\n", n.name);
    let mut section = |kw: &str, nets: Vec<&str>| {
        if !nets.is_empty() {
            out.push_str(kw);
            for net in nets {
                out.push(' ');
                out.push_str(net);
            }
            out.push('\n');
        }
    };
    section("input", n.inputs.iter().map(String::as_str).collect());
    section("output", n.outputs.iter().map(String::as_str).collect());
    section("wire", n.wires().collect());
    for inst in &n.instances {
        out.push_str(&format!("cell {} {}", inst.cell_type, inst.name));
        for pin in inst.function.pins() {
            if let Some(net) = inst.pin(pin) {
                out.push_str(&format!(" {pin}={net}"));
            }
        }
        out.push('\n');
    }
    out.push_str("endmodule\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_register_demo, DiagnosticCategory};

    #[test]
    fn minimal_inverter() {
        let text = "module inv1\ninput a\noutput y\ncell INV u1 A=a Y=y\nendmodule\n";
        let n = parse_netlist(text).unwrap();
        assert_eq!(n.instances.len(), 1);
        assert_eq!(n.nets.len(), 2);
        let written = write_netlist(&n);
        assert_eq!(written.lines().count(), 5);
        assert_eq!(written, text);
    }

    #[test]
    fn empty_module_is_header_and_end() {
        let n = Netlist::new("empty");
        assert_eq!(write_netlist(&n), "module empty\nendmodule\n");
        assert_eq!(parse_netlist("module empty\nendmodule").unwrap(), n);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\nmodule m  # trailing\n\ninput a\noutput y\n  cell INV u1 A=a   Y=y\nendmodule\n";
        let n = parse_netlist(text).unwrap();
        assert_eq!(n.instances[0].pin("Y"), Some("y"));
    }

    #[test]
    fn register_round_trip() {
        let n = build_register_demo(2).unwrap();
        let text = write_netlist(&n);
        assert!(text.contains("cell DFF_CONV ff1 D=D1 CLK=clk Q=Q1"));
        assert_eq!(parse_netlist(&text).unwrap(), n);
    }

    #[test]
    fn double_driver_names_the_net() {
        let text = "module m\ninput a\noutput y\ncell INV u1 A=a Y=y\ncell INV u2 A=a Y=y\nendmodule\n";
        match parse_netlist(text) {
            Err(NetlistError::Invalid(d)) => {
                assert_eq!(d.category, DiagnosticCategory::MultiplyDrivenNet);
                assert_eq!(d.entity, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_netlist("module m\ninput a\n  bogus x\nendmodule\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 3, column: 3, .. }), "{err:?}");
        let err = parse_netlist("module m\ninput a\noutput y\ncell INV u1 A=a Y=9y\nendmodule\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 4, column: 19, .. }), "{err:?}");
        let err = parse_netlist("module m\ninput a\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { .. }));
    }

    #[test]
    fn unknown_cell_type() {
        let err = parse_netlist("module m\ninput a\noutput y\ncell BUF u1 A=a Y=y\nendmodule\n").unwrap_err();
        assert!(matches!(err, NetlistError::UnknownCellType { line: 4, ref cell_type } if cell_type == "BUF"));
    }

    #[test]
    fn structural_errors() {
        let cases = [
            ("module m\ninput a\noutput y\ncell INV u1 A=a\nendmodule\n", DiagnosticCategory::UnboundPin),
            (
                "module m\ninput a\noutput y z\ncell INV u1 A=a Y=y\ncell INV u1 A=a Y=z\nendmodule\n",
                DiagnosticCategory::DuplicateInstance,
            ),
            ("module m\noutput y\ncell INV u1 A=y Y=y\nendmodule\n", DiagnosticCategory::CombinationalCycle),
            ("module m\ninput a\noutput y\ncell INV u1 A=b Y=y\nendmodule\n", DiagnosticCategory::UndeclaredNet),
        ];
        for (text, cat) in cases {
            match parse_netlist(text) {
                Err(NetlistError::Invalid(d)) => assert_eq!(d.category, cat, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
