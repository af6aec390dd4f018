//! SPICE-like netlist parsing, validation and formatting.
//!
//! ```text
//! * comment line                            ; trailing comment
//! R<name> n+ n- <value>
//! C<name> n+ n- <value>
//! L<name> n+ n- <value>
//! V<name> n+ n- [DC <v>] [AC <mag> [<phase_deg>]] [SIN(<voff> <vamp> <freq>)]
//! E<name> out+ out- in+ in- <gain>
//! X<name> in+ in- out OPAMP [GAIN=<A>]
//! M<name> n+ n- RON=<v> ROFF=<v> D=<v> UV=<v> [X0=<v>] [P=<int>]
//! .ac dec <points_per_decade> <f_start> <f_stop>
//! .tran <t_step> <t_stop>
//! .op
//! .end
//! ```
//!
//! Values accept the engineering suffixes f, p, n, u, m, k, meg, g, t
//! (case-insensitive); unit letters after the suffix are ignored. The nodes
//! `0` and `gnd` are ground.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::devices::{
    Element, ElementKind, MemristorParams, Sine, VSource, DEFAULT_OPAMP_GAIN,
};
use crate::error::{Error, Result};

/// Dense node numbering with ground fixed at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for NodeTable {
    fn default() -> Self {
        let mut t = NodeTable {
            names: Vec::new(),
            index: HashMap::new(),
        };
        t.names.push("0".to_string());
        t.index.insert("0".to_string(), 0);
        t
    }
}

impl NodeTable {
    fn canonical(name: &str) -> &str {
        if name.eq_ignore_ascii_case("gnd") {
            "0"
        } else {
            name
        }
    }

    /// Index of `name`, inserting it if new.
    pub fn intern(&mut self, name: &str) -> usize {
        let name = Self::canonical(name);
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(Self::canonical(name)).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    /// Number of nodes including ground.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcSweep {
    pub points_per_decade: usize,
    pub f_start: f64,
    pub f_stop: f64,
}

impl AcSweep {
    /// Decade-logarithmic grid including both endpoints.
    pub fn frequencies(&self) -> Vec<f64> {
        let decades = (self.f_stop / self.f_start).log10();
        let ppd = self.points_per_decade as f64;
        let steps = (decades * ppd + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=steps)
            .map(|k| self.f_start * 10f64.powf(k as f64 / ppd))
            .collect();
        let last = *out.last().unwrap();
        if (last - self.f_stop).abs() <= 1e-9 * self.f_stop {
            *out.last_mut().unwrap() = self.f_stop;
        } else {
            out.push(self.f_stop);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientSpec {
    pub t_step: f64,
    pub t_stop: f64,
}

impl TransientSpec {
    pub fn steps(&self) -> usize {
        (self.t_stop / self.t_step).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalysisDirective {
    Ac(AcSweep),
    Transient(TransientSpec),
    OperatingPoint,
}

/// A parsed netlist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub title: String,
    pub elements: Vec<Element>,
    pub nodes: NodeTable,
    pub directives: Vec<AnalysisDirective>,
}

impl Circuit {
    pub fn new(title: impl Into<String>) -> Self {
        Circuit {
            title: title.into(),
            ..Default::default()
        }
    }

    /// Append an element connected to the named nodes.
    pub fn add(&mut self, name: &str, nodes: &[&str], kind: ElementKind) -> Result<()> {
        if self.element(name).is_some() {
            return Err(Error::Domain(format!("duplicate element name {name}")));
        }
        let nodes = nodes.iter().map(|n| self.nodes.intern(n)).collect();
        self.elements.push(Element::new(name, nodes, kind));
        Ok(())
    }

    /// Case-insensitive element lookup.
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn element_mut(&mut self, name: &str) -> Option<&mut Element> {
        self.elements
            .iter_mut()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// Indices (into `elements`) of all memristors, in order.
    pub fn memristor_indices(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.kind, ElementKind::Memristor(_)))
            .map(|(i, _)| i)
            .collect()
    }
}

const SUFFIXES: &[(&str, i32)] = &[
    ("meg", 6),
    ("f", -15),
    ("p", -12),
    ("n", -9),
    ("u", -6),
    ("m", -3),
    ("k", 3),
    ("g", 9),
    ("t", 12),
];

/// Parse a number with an optional engineering suffix.
pub fn parse_value(token: &str) -> Result<f64> {
    let err = || Error::Value {
        token: token.to_string(),
    };
    let bytes = token.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return Err(err());
    }
    let mantissa = &token[..i];
    let mut exponent: i32 = 0;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_digits = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits {
            exponent = token[i + 1..j].parse().map_err(|_| err())?;
            i = j;
        }
    }
    let rest = token[i..].to_ascii_lowercase();
    if let Some(&(_, shift)) = SUFFIXES.iter().find(|(s, _)| rest.starts_with(s)) {
        exponent += shift;
    } else if rest.starts_with(|c: char| !c.is_ascii_alphabetic()) {
        return Err(err());
    }
    // Re-read as one decimal literal so the multiplier does not add rounding.
    format!("{mantissa}e{exponent}").parse().map_err(|_| err())
}

/// Shortest suffixed representation that parses back to exactly `value`.
pub fn format_value(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:e}", value.abs());
    let (digits_part, exp_part) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp_part.parse().expect("exponent");
    let digits: String = digits_part.chars().filter(|c| *c != '.').collect();
    let shift = (exp.div_euclid(3) * 3).clamp(-15, 12);
    let suffix = match shift {
        -15 => "f",
        -12 => "p",
        -9 => "n",
        -6 => "u",
        -3 => "m",
        0 => "",
        3 => "k",
        6 => "meg",
        9 => "g",
        _ => "t",
    };
    // mantissa = digits[0].digits[1..] * 10^(exp - shift)
    let point = exp - shift + 1;
    let mantissa = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    let sign = if value < 0.0 { "-" } else { "" };
    format!("{sign}{mantissa}{suffix}")
}

/// Strip comments; `None` for lines carrying nothing.
fn strip(line: &str) -> Option<&str> {
    let line = line.split(';').next().unwrap_or("").trim();
    if line.is_empty() || line.starts_with('*') {
        None
    } else {
        Some(line)
    }
}

/// Split into tokens, treating parentheses and commas as blanks and gluing
/// `key = value` into a single `key=value` token.
fn tokenize(line: &str) -> Vec<String> {
    let cleaned: String = line
        .chars()
        .map(|c| if matches!(c, '(' | ')' | ',') { ' ' } else { c })
        .collect();
    let cleaned = cleaned.replace('=', " = ");
    let raw: Vec<&str> = cleaned.split_whitespace().collect();
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut k = 0;
    while k < raw.len() {
        if raw[k] == "=" && !out.is_empty() && k + 1 < raw.len() {
            let key = out.pop().unwrap();
            out.push(format!("{key}={}", raw[k + 1]));
            k += 2;
        } else {
            out.push(raw[k].to_string());
            k += 1;
        }
    }
    out
}

enum Line {
    Element(String, Vec<String>, ElementKind),
    Directive(AnalysisDirective),
    End,
}

fn need<'a>(tokens: &'a [String], idx: usize, what: &str) -> Result<&'a str, String> {
    tokens
        .get(idx)
        .map(|s| s.as_str())
        .ok_or_else(|| format!("missing {what}"))
}

fn value_at(tokens: &[String], idx: usize, what: &str) -> Result<f64, String> {
    let tok = need(tokens, idx, what)?;
    parse_value(tok).map_err(|e| format!("{what}: {e}"))
}

fn no_extra(tokens: &[String], expected: usize) -> Result<(), String> {
    match tokens.get(expected) {
        Some(t) => Err(format!("unexpected token '{t}'")),
        None => Ok(()),
    }
}

fn parse_line(tokens: &[String]) -> Result<Line, String> {
    let head = &tokens[0];
    if head.starts_with('.') {
        return parse_directive(tokens).map(|d| d.map_or(Line::End, Line::Directive));
    }
    let prefix = head.chars().next().unwrap().to_ascii_uppercase();
    let nodes = |n: usize| -> Result<Vec<String>, String> {
        (1..=n)
            .map(|i| need(tokens, i, "node").map(str::to_string))
            .collect()
    };
    let (nodes, kind) = match prefix {
        'R' | 'C' | 'L' => {
            let nodes = nodes(2)?;
            let v = value_at(tokens, 3, "value")?;
            no_extra(tokens, 4)?;
            let kind = match prefix {
                'R' => ElementKind::Resistor { r: v },
                'C' => ElementKind::Capacitor { c: v },
                _ => ElementKind::Inductor { l: v },
            };
            (nodes, kind)
        }
        'V' => (nodes(2)?, ElementKind::VSource(parse_source(&tokens[3..])?)),
        'E' => {
            let nodes = nodes(4)?;
            let gain = value_at(tokens, 5, "gain")?;
            no_extra(tokens, 6)?;
            (nodes, ElementKind::Vcvs { gain })
        }
        'X' => {
            let nodes = nodes(3)?;
            let model = need(tokens, 4, "model name")?;
            if !model.eq_ignore_ascii_case("opamp") {
                return Err(format!("unknown subcircuit model '{model}' (only OPAMP)"));
            }
            let mut gain = DEFAULT_OPAMP_GAIN;
            for tok in &tokens[5..] {
                let (key, val) = split_param(tok)?;
                if key.eq_ignore_ascii_case("gain") {
                    gain = parse_value(val).map_err(|e| e.to_string())?;
                } else {
                    return Err(format!("unknown op-amp parameter '{key}'"));
                }
            }
            (nodes, ElementKind::OpAmp { gain })
        }
        'M' => (nodes(2)?, ElementKind::Memristor(parse_memristor(&tokens[3..])?)),
        other => return Err(format!("unknown element prefix '{other}'")),
    };
    Ok(Line::Element(head.clone(), nodes, kind))
}

fn split_param(tok: &str) -> Result<(&str, &str), String> {
    tok.split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| format!("expected KEY=VALUE, found '{tok}'"))
}

fn parse_source(tokens: &[String]) -> Result<VSource, String> {
    let mut src = VSource::default();
    let mut k = 0;
    let num = |k: usize, what: &str| -> Result<f64, String> {
        let tok = tokens.get(k).ok_or_else(|| format!("missing {what}"))?;
        parse_value(tok).map_err(|e| format!("{what}: {e}"))
    };
    let is_number = |k: usize| tokens.get(k).is_some_and(|t| parse_value(t).is_ok());
    while k < tokens.len() {
        let tok = tokens[k].to_ascii_uppercase();
        match tok.as_str() {
            "DC" => {
                src.dc = num(k + 1, "DC value")?;
                k += 2;
            }
            "AC" => {
                src.ac_mag = num(k + 1, "AC magnitude")?;
                k += 2;
                if is_number(k) {
                    src.ac_phase_deg = num(k, "AC phase")?;
                    k += 1;
                }
            }
            "SIN" => {
                src.sin = Some(Sine {
                    offset: num(k + 1, "SIN offset")?,
                    amplitude: num(k + 2, "SIN amplitude")?,
                    freq_hz: num(k + 3, "SIN frequency")?,
                });
                k += 4;
            }
            _ if k == 0 && is_number(0) => {
                src.dc = num(0, "DC value")?;
                k += 1;
            }
            _ => return Err(format!("unexpected source token '{}'", tokens[k])),
        }
    }
    Ok(src)
}

fn parse_memristor(tokens: &[String]) -> Result<MemristorParams, String> {
    let mut r_on = None;
    let mut r_off = None;
    let mut d = None;
    let mut mu_v = None;
    let mut x0 = 0.5;
    let mut p = 1u32;
    for tok in tokens {
        let (key, val) = split_param(tok)?;
        let number = || parse_value(val).map_err(|e| format!("{key}: {e}"));
        match key.to_ascii_uppercase().as_str() {
            "RON" => r_on = Some(number()?),
            "ROFF" => r_off = Some(number()?),
            "D" => d = Some(number()?),
            "UV" => mu_v = Some(number()?),
            "X0" => x0 = number()?,
            "P" => {
                p = val
                    .parse()
                    .map_err(|_| format!("P must be a positive integer, found '{val}'"))?
            }
            _ => return Err(format!("unknown memristor parameter '{key}'")),
        }
    }
    let missing = |what: &str| format!("missing required memristor parameter {what}");
    Ok(MemristorParams {
        r_on: r_on.ok_or_else(|| missing("RON"))?,
        r_off: r_off.ok_or_else(|| missing("ROFF"))?,
        d: d.ok_or_else(|| missing("D"))?,
        mu_v: mu_v.ok_or_else(|| missing("UV"))?,
        x0,
        p,
    })
}

/// `Ok(None)` marks `.end`.
fn parse_directive(tokens: &[String]) -> Result<Option<AnalysisDirective>, String> {
    match tokens[0].to_ascii_lowercase().as_str() {
        ".end" => Ok(None),
        ".op" => {
            no_extra(tokens, 1)?;
            Ok(Some(AnalysisDirective::OperatingPoint))
        }
        ".ac" => {
            let scale = need(tokens, 1, "sweep scale")?;
            if !scale.eq_ignore_ascii_case("dec") {
                return Err(format!("unsupported sweep scale '{scale}' (only dec)"));
            }
            let ppd: usize = need(tokens, 2, "points per decade")?
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or("points per decade must be a positive integer")?;
            let f_start = value_at(tokens, 3, "start frequency")?;
            let f_stop = value_at(tokens, 4, "stop frequency")?;
            no_extra(tokens, 5)?;
            if !(f_start > 0.0) {
                return Err("start frequency must be positive".into());
            }
            if !(f_stop > f_start) {
                return Err("stop frequency must exceed start frequency".into());
            }
            Ok(Some(AnalysisDirective::Ac(AcSweep {
                points_per_decade: ppd,
                f_start,
                f_stop,
            })))
        }
        ".tran" => {
            let t_step = value_at(tokens, 1, "time step")?;
            let t_stop = value_at(tokens, 2, "stop time")?;
            no_extra(tokens, 3)?;
            if !(t_step > 0.0) {
                return Err("time step must be positive".into());
            }
            if !(t_stop >= t_step) {
                return Err("stop time must be at least one time step".into());
            }
            Ok(Some(AnalysisDirective::Transient(TransientSpec { t_step, t_stop })))
        }
        other => Err(format!("unknown directive '{other}'")),
    }
}

/// Parse netlist text into a [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit> {
    let mut circuit = Circuit::default();
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let Some(line) = strip(raw) else { continue };
        let tokens = tokenize(line);
        let parsed = parse_line(&tokens);
        let was_first = std::mem::replace(&mut first, false);
        let parsed = match parsed {
            Ok(p) => p,
            Err(_) if was_first => {
                circuit.title = line.to_string();
                continue;
            }
            Err(msg) => return Err(Error::parse(line_no, msg)),
        };
        match parsed {
            Line::End => break,
            Line::Directive(d) => circuit.directives.push(d),
            Line::Element(name, nodes, kind) => {
                if circuit.element(&name).is_some() {
                    return Err(Error::parse(line_no, format!("duplicate element name {name}")));
                }
                let nodes = nodes.iter().map(|n| circuit.nodes.intern(n)).collect();
                let mut e = Element::new(name, nodes, kind);
                e.line = Some(line_no);
                circuit.elements.push(e);
            }
        }
    }
    Ok(circuit)
}

/// A validation finding, optionally tied to a netlist line.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Structural and parameter checks. An empty list means the circuit can be
/// simulated.
pub fn validate(circuit: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |e: &Element, message: String| Diagnostic {
        line: e.line,
        message: format!("{}: {message}", e.name),
    };
    if circuit.elements.is_empty() {
        out.push(Diagnostic {
            line: None,
            message: "no elements".into(),
        });
        return out;
    }

    for e in &circuit.elements {
        match &e.kind {
            ElementKind::Resistor { r: v } | ElementKind::Capacitor { c: v } | ElementKind::Inductor { l: v } => {
                if !(*v > 0.0) || !v.is_finite() {
                    out.push(diag(e, format!("value must be positive and finite (got {v})")));
                }
            }
            ElementKind::Vcvs { gain } | ElementKind::OpAmp { gain } => {
                if *gain == 0.0 || !gain.is_finite() {
                    out.push(diag(e, "gain must be nonzero".into()));
                }
            }
            ElementKind::Memristor(p) => {
                out.extend(p.problems().into_iter().map(|m| diag(e, m)));
            }
            ElementKind::VSource(_) => {}
        }
    }

    let touches_ground = circuit.elements.iter().any(|e| {
        let (a, b) = e.terminals();
        a == 0 || b == 0 || e.control().is_some_and(|(c, d)| c == 0 || d == 0)
    });
    if !touches_ground {
        out.push(Diagnostic {
            line: None,
            message: "no element connects to ground node 0".into(),
        });
    } else {
        // Union-find over conducting terminal pairs.
        let n = circuit.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in &circuit.elements {
            let (a, b) = e.terminals();
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let ground = find(&mut parent, 0);
        let floating: Vec<&str> = (1..n)
            .filter(|&i| find(&mut parent, i) != ground)
            .map(|i| circuit.nodes.name(i))
            .collect();
        if !floating.is_empty() {
            out.push(Diagnostic {
                line: None,
                message: format!("no path to ground from node(s) {}", floating.join(", ")),
            });
        }
    }

    let needs_source = circuit
        .directives
        .iter()
        .any(|d| !matches!(d, AnalysisDirective::OperatingPoint));
    let has_source = circuit
        .elements
        .iter()
        .any(|e| matches!(e.kind, ElementKind::VSource(_)));
    if needs_source && !has_source {
        out.push(Diagnostic {
            line: None,
            message: "AC and transient analyses need at least one source".into(),
        });
    }
    out
}

/// Canonical netlist text; [`parse_netlist`] reads it back to an equal
/// circuit.
pub fn format_netlist(circuit: &Circuit) -> String {
    let mut out = String::new();
    let title = if circuit.title.is_empty() {
        "untitled"
    } else {
        circuit.title.as_str()
    };
    writeln!(out, "{title}").unwrap();
    let node = |i: usize| circuit.nodes.name(i);
    for e in &circuit.elements {
        let nodes: Vec<&str> = e.nodes.iter().map(|&i| node(i)).collect();
        let nodes = nodes.join(" ");
        let body = match &e.kind {
            ElementKind::Resistor { r: v } | ElementKind::Capacitor { c: v } | ElementKind::Inductor { l: v } => {
                format_value(*v)
            }
            ElementKind::VSource(s) => {
                let mut b = format!("DC {}", format_value(s.dc));
                if s.ac_mag != 0.0 || s.ac_phase_deg != 0.0 {
                    write!(b, " AC {} {}", format_value(s.ac_mag), format_value(s.ac_phase_deg)).unwrap();
                }
                if let Some(sin) = s.sin {
                    write!(
                        b,
                        " SIN({} {} {})",
                        format_value(sin.offset),
                        format_value(sin.amplitude),
                        format_value(sin.freq_hz)
                    )
                    .unwrap();
                }
                b
            }
            ElementKind::Vcvs { gain } => format_value(*gain),
            ElementKind::OpAmp { gain } => format!("OPAMP GAIN={}", format_value(*gain)),
            ElementKind::Memristor(p) => format!(
                "RON={} ROFF={} D={} UV={} X0={} P={}",
                format_value(p.r_on),
                format_value(p.r_off),
                format_value(p.d),
                format_value(p.mu_v),
                format_value(p.x0),
                p.p
            ),
        };
        writeln!(out, "{} {nodes} {body}", e.name).unwrap();
    }
    for d in &circuit.directives {
        match d {
            AnalysisDirective::Ac(ac) => writeln!(
                out,
                ".ac dec {} {} {}",
                ac.points_per_decade,
                format_value(ac.f_start),
                format_value(ac.f_stop)
            ),
            AnalysisDirective::Transient(t) => writeln!(
                out,
                ".tran {} {}",
                format_value(t.t_step),
                format_value(t.t_stop)
            ),
            AnalysisDirective::OperatingPoint => writeln!(out, ".op"),
        }
        .unwrap();
    }
    out.push_str(".end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MFB: &str = "\
MFB Bessel low-pass, 15k resistors
* input source
Vin in 0 AC 1
R1 in a 15k
R2 a out 15k
R3 a b 15k
C1 a 0 3n
C2 b out 1n
X1 0 b out OPAMP
.ac dec 20 100 1MEG
.end
";

    #[test]
    fn values_with_suffixes() {
        assert_eq!(parse_value("15k").unwrap(), 15000.0);
        assert_eq!(parse_value("1MEG").unwrap(), 1.0e6);
        assert_eq!(parse_value("2.5").unwrap(), 2.5);
        assert_eq!(parse_value("100n").unwrap(), 1.0e-7);
        assert_eq!(parse_value("15kOhm").unwrap(), 15000.0);
        assert_eq!(parse_value("1m").unwrap(), 1e-3);
        assert_eq!(parse_value("1e-14").unwrap(), 1e-14);
        assert_eq!(parse_value("-3.3").unwrap(), -3.3);
        assert_eq!(parse_value("10uF").unwrap(), 1e-5);
        assert_eq!(parse_value(".5").unwrap(), 0.5);
        for bad in ["", "k", "abc", "1.2.3", "--1", "1#"] {
            let err = parse_value(bad).unwrap_err();
            assert_eq!(err, Error::Value { token: bad.into() });
        }
    }

    #[test]
    fn canonical_suffix() {
        assert_eq!(format_value(15000.0), "15k");
        assert_eq!(format_value(100.0), "100");
        assert_eq!(format_value(1e-7), "100n");
        assert_eq!(format_value(1e6), "1meg");
        assert_eq!(format_value(8050.0), "8.05k");
        assert_eq!(format_value(0.5), "500m");
        assert_eq!(format_value(-2.2e-9), "-2.2n");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1e-18), "0.001f");
        assert_eq!(format_value(5e15), "5000t");
    }

    #[test]
    fn single_resistor() {
        let c = parse_netlist("R1 1 0 15k").unwrap();
        assert_eq!(c.elements.len(), 1);
        assert_eq!(c.nodes.names(), &["0".to_string(), "1".to_string()]);
        assert_eq!(c.elements[0].kind, ElementKind::Resistor { r: 15000.0 });
        assert_eq!(c.elements[0].nodes, vec![1, 0]);
        assert_eq!(c.title, "");
    }

    #[test]
    fn empty_text() {
        let c = parse_netlist("").unwrap();
        assert!(c.elements.is_empty());
        assert!(c.directives.is_empty());
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = parse_netlist("R1 1 0 1k\nR1 2 0 1k").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_netlist("t\nR1 1 0 1k\nr1 2 0 1k").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn mfb_example_counts() {
        let c = parse_netlist(MFB).unwrap();
        let count = |f: fn(&ElementKind) -> bool| c.elements.iter().filter(|e| f(&e.kind)).count();
        assert_eq!(count(|k| matches!(k, ElementKind::Resistor { .. })), 3);
        assert_eq!(count(|k| matches!(k, ElementKind::Capacitor { .. })), 2);
        assert_eq!(count(|k| matches!(k, ElementKind::OpAmp { .. })), 1);
        assert_eq!(count(|k| matches!(k, ElementKind::VSource(_))), 1);
        assert_eq!(c.directives.len(), 1);
        assert_eq!(c.title, "MFB Bessel low-pass, 15k resistors");
        assert_eq!(
            c.directives[0],
            AnalysisDirective::Ac(AcSweep {
                points_per_decade: 20,
                f_start: 100.0,
                f_stop: 1e6
            })
        );
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn error_lines_point_at_offender() {
        let cases = [
            ("title\nR1 1 0 1k\nQ1 1 2 3\n", 3),
            ("title\nR1 1 0\n", 2),
            ("title\n\n* c\nM1 1 0 RON=1 ROFF=2 D=1n UV=1 FOO=3\n", 4),
            ("title\nM1 1 0 RON=1 ROFF=2 D=1n\n", 2),
            ("title\n.ac lin 10 1 10\n", 2),
            ("title\n.ac dec 0 1 10\n", 2),
            ("title\n.tran 0 1\n", 2),
            ("title\nR1 1 0 1k\n.subckt foo\n", 3),
            ("title\nX1 a b c NAND\n", 2),
            ("title\nV1 a 0 DC\n", 2),
            ("title\nR1 1 0 1k extra\n", 2),
        ];
        for (text, line) in cases {
            match parse_netlist(text) {
                Err(Error::Parse { line: l, message }) => assert_eq!(l, line, "{text}: {message}"),
                other => panic!("{text}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn case_insensitive_keys_and_ground_alias() {
        let c = parse_netlist(
            "t\nm1 a GND ron=100 Roff=16K d=10N uv=1E-14 x0=0.25 p=2\nv1 a gnd dc 1 ac 1 90 sin(0 1 1k)\n.TRAN 1u 1m\n.op\n",
        )
        .unwrap();
        let ElementKind::Memristor(p) = c.elements[0].kind else {
            panic!()
        };
        assert_eq!(p.r_off, 16e3);
        assert_eq!(p.d, 1e-8);
        assert_eq!(p.x0, 0.25);
        assert_eq!(p.p, 2);
        assert_eq!(c.elements[0].nodes[1], 0);
        let ElementKind::VSource(s) = c.elements[1].kind else {
            panic!()
        };
        assert_eq!(s.ac_phase_deg, 90.0);
        assert_eq!(s.sin.unwrap().freq_hz, 1000.0);
        assert_eq!(c.directives.len(), 2);
    }

    #[test]
    fn end_stops_parsing() {
        let c = parse_netlist("t\nR1 1 0 1k\n.end\nR2 1 0 bogus\n").unwrap();
        assert_eq!(c.elements.len(), 1);
    }

    #[test]
    fn comments_and_param_spacing() {
        let c = parse_netlist("t\nR1 1 0 1k ; load\nX1 0 1 2 OPAMP GAIN = 2meg\nR2 2 1 1k\n").unwrap();
        assert_eq!(c.elements[1].kind, ElementKind::OpAmp { gain: 2e6 });
    }

    #[test]
    fn validation_findings() {
        let ok = parse_netlist("div\nV1 in 0 DC 10\nR1 in mid 1k\nR2 mid 0 1k\n.op\n").unwrap();
        assert!(validate(&ok).is_empty());

        let floating = parse_netlist("t\nR1 1 0 1k\nR2 2 2 1k\n").unwrap();
        let d = validate(&floating);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("node(s) 2"));

        let swapped = parse_netlist("t\nV1 1 0 DC 1\nM1 1 0 RON=16k ROFF=100 D=10n UV=1e-14\n").unwrap();
        let d = validate(&swapped);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("RON must be below ROFF"));
        assert_eq!(d[0].line, Some(3));

        let zero = parse_netlist("t\nV1 1 0 DC 1\nR1 1 0 0\nC1 1 0 1u\n").unwrap();
        assert_eq!(validate(&zero).len(), 1);

        let sourceless = parse_netlist("t\nR1 1 0 1k\n.ac dec 10 1 10\n").unwrap();
        assert_eq!(validate(&sourceless).len(), 1);

        assert_eq!(validate(&Circuit::default())[0].message, "no elements");
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_netlist(&Circuit::new("empty")), "empty\n.end\n");
        let c = parse_netlist("t\nR1 1 0 15000\n").unwrap();
        assert!(format_netlist(&c).contains("R1 1 0 15k\n"));
        let mfb = parse_netlist(MFB).unwrap();
        assert_eq!(parse_netlist(&format_netlist(&mfb)).unwrap(), mfb);
    }

    #[test]
    fn sweep_grid() {
        let ac = AcSweep {
            points_per_decade: 20,
            f_start: 100.0,
            f_stop: 1e6,
        };
        let f = ac.frequencies();
        assert_eq!(f.len(), 81);
        assert_eq!(f[0], 100.0);
        assert_eq!(*f.last().unwrap(), 1e6);
        assert!((f[20] - 1000.0).abs() < 1e-9);
        let partial = AcSweep {
            points_per_decade: 2,
            f_start: 1.0,
            f_stop: 20.0,
        };
        let f = partial.frequencies();
        assert_eq!(f.len(), 4);
        assert_eq!(*f.last().unwrap(), 20.0);
    }

    fn arb_value() -> impl Strategy<Value = f64> {
        (1.0f64..1000.0, -15i32..12).prop_map(|(m, e)| m * 10f64.powi(e))
    }

    fn arb_kind() -> impl Strategy<Value = (char, ElementKind)> {
        prop_oneof![
            arb_value().prop_map(|r| ('R', ElementKind::Resistor { r })),
            arb_value().prop_map(|c| ('C', ElementKind::Capacitor { c })),
            arb_value().prop_map(|l| ('L', ElementKind::Inductor { l })),
            (arb_value(), arb_value(), -180.0f64..180.0, proptest::option::of((arb_value(), arb_value(), arb_value())))
                .prop_map(|(dc, ac_mag, ac_phase_deg, sin)| ('V', ElementKind::VSource(VSource {
                    dc,
                    ac_mag,
                    ac_phase_deg,
                    sin: sin.map(|(offset, amplitude, freq_hz)| Sine { offset, amplitude, freq_hz }),
                }))),
            arb_value().prop_map(|gain| ('X', ElementKind::OpAmp { gain })),
            arb_value().prop_map(|gain| ('E', ElementKind::Vcvs { gain })),
            (arb_value(), arb_value(), 0.0f64..=1.0, 1u32..4).prop_map(|(r_on, d, x0, p)| ('M', ElementKind::Memristor(MemristorParams {
                r_on,
                r_off: r_on * 160.0,
                d,
                mu_v: 1e-14,
                x0,
                p,
            }))),
        ]
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        let node = prop_oneof![Just("0".to_string()), "[a-z][a-z0-9_]{0,4}", "[1-9][0-9]{0,2}"];
        (proptest::collection::vec((arb_kind(), proptest::collection::vec(node, 4)), 1..12), 1usize..50)
            .prop_map(|(items, ppd)| {
                let mut c = Circuit::new("random circuit");
                for (k, ((prefix, kind), nodes)) in items.into_iter().enumerate() {
                    let count = match kind {
                        ElementKind::Vcvs { .. } => 4,
                        ElementKind::OpAmp { .. } => 3,
                        _ => 2,
                    };
                    let refs: Vec<&str> = nodes[..count].iter().map(String::as_str).collect();
                    c.add(&format!("{prefix}{k}"), &refs, kind).unwrap();
                }
                c.directives.push(AnalysisDirective::Ac(AcSweep { points_per_decade: ppd, f_start: 100.0, f_stop: 1e6 }));
                c.directives.push(AnalysisDirective::Transient(TransientSpec { t_step: 1e-6, t_stop: 1e-3 }));
                c
            })
    }

    proptest! {
        #[test]
        fn value_round_trip(v in proptest::num::f64::NORMAL) {
            let back = parse_value(&format_value(v)).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn netlist_round_trip(c in arb_circuit()) {
            let text = format_netlist(&c);
            let back = parse_netlist(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
