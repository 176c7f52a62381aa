//! Line-oriented `.bench` files describing an optical-table layout.
//!
//! ```text
//! # circuit: teleport
//! prepare lg+ @path0
//! bs
//! dove @path1        # DP
//! hwp 45 @path1
//! bs
//! pbs
//! ```
//!
//! One statement per line. `#` starts a comment; a comment trailing an
//! element becomes that element's label, and a full-line `# circuit: NAME`
//! names the circuit. Angles are written in degrees.

use thiserror::Error;

use crate::elements::{Circuit, CircuitError, Element, ElementKind, Placement};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("line {line}: empty circuit")]
    Empty { line: usize },
}

impl BenchError {
    pub fn line(&self) -> usize {
        match self {
            BenchError::Syntax { line, .. } | BenchError::Semantic { line, .. } | BenchError::Empty { line } => *line,
        }
    }
}

const NAME_DIRECTIVE: &str = "circuit:";

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(code: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in code.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token { text: &code[b..byte], column: c + 1 });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token { text: &code[b..], column: c + 1 });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> BenchError {
    BenchError::Syntax { line, column, message: message.into() }
}

/// Parses raw bytes, reporting invalid UTF-8 with its position.
pub fn parse_bench_bytes(bytes: &[u8]) -> Result<Circuit, BenchError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_bench(text),
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let line = good.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = good.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            // valid_up_to() guarantees this prefix decodes.
            let column = std::str::from_utf8(&good[line_start..]).map_or(1, |s| s.chars().count() + 1);
            Err(syntax(line, column, "invalid UTF-8"))
        }
    }
}

pub fn parse_bench(source: &str) -> Result<Circuit, BenchError> {
    let mut elements = Vec::new();
    let mut lines_of = Vec::new();
    let mut name = None;
    let mut last_line = 1;

    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let (code, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(raw[pos + 1..].trim())),
            None => (raw, None),
        };
        let tokens = tokenize(code);
        if tokens.is_empty() {
            if let Some(rest) = comment.and_then(|c| c.strip_prefix(NAME_DIRECTIVE)) {
                let n = rest.trim();
                if !n.is_empty() {
                    name = Some(n.to_string());
                }
            }
            continue;
        }
        let mut element = parse_statement(line, &tokens)?;
        if let Some(label) = comment {
            element.label = label.to_string();
        }
        elements.push(element);
        lines_of.push(line);
    }

    if elements.is_empty() {
        return Err(BenchError::Empty { line: last_line });
    }
    let mut circuit = Circuit::new(elements).map_err(|e| match e {
        CircuitError::Empty => BenchError::Empty { line: last_line },
        CircuitError::InvalidPlacement { index, .. } | CircuitError::PbsNotTerminal { index } => {
            BenchError::Semantic { line: lines_of[index], message: e.to_string() }
        }
    })?;
    circuit.name = name;
    Ok(circuit)
}

fn parse_placement(line: usize, tok: &Token<'_>) -> Result<Placement, BenchError> {
    match tok.text.to_ascii_lowercase().as_str() {
        "@path0" => Ok(Placement::Path0),
        "@path1" => Ok(Placement::Path1),
        _ => Err(syntax(line, tok.column, format!("expected @path0 or @path1, found {:?}", tok.text))),
    }
}

fn parse_degrees(line: usize, tok: &Token<'_>) -> Result<f64, BenchError> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(line, tok.column, format!("expected an angle in degrees, found {:?}", tok.text))),
    }
}

/// Reduces into `[0, 180)`. Angles written with at most six decimals stay on
/// the 10⁻⁶-degree lattice, so canonical output parses back to the same value.
fn reduce_degrees(deg: f64, text: &str) -> f64 {
    let r = deg.rem_euclid(180.0);
    let short = !text.contains(['e', 'E']) && text.split_once('.').is_none_or(|(_, frac)| frac.len() <= 6);
    if !short || deg.abs() >= 1e9 {
        return r;
    }
    let micro = (r * 1e6).round();
    if micro >= 180e6 {
        0.0
    } else {
        micro / 1e6
    }
}

fn parse_statement(line: usize, tokens: &[Token<'_>]) -> Result<Element, BenchError> {
    let head = &tokens[0];
    let keyword = head.text.to_ascii_lowercase();
    let args = &tokens[1..];
    let too_many = |expected: usize| {
        let extra = &args[expected];
        syntax(line, extra.column, format!("unexpected {:?} after `{keyword}`", extra.text))
    };
    let missing = |what: &str| {
        let end = tokens.last().map_or(1, |t| t.column + t.text.chars().count());
        syntax(line, end, format!("`{keyword}` expects {what}"))
    };

    match keyword.as_str() {
        "bs" | "pbs" => {
            if !args.is_empty() {
                return Err(too_many(0));
            }
            Ok(if keyword == "bs" { Element::bs() } else { Element::pbs() })
        }
        "dove" => {
            let p = args.first().ok_or_else(|| missing("a placement (@path0 or @path1)"))?;
            if args.len() > 1 {
                return Err(too_many(1));
            }
            Ok(Element::dove(parse_placement(line, p)?))
        }
        "hwp" | "qwp" => {
            let angle = args.first().ok_or_else(|| missing("an angle in degrees"))?;
            let deg = parse_degrees(line, angle)?;
            let placement = match args.get(1) {
                None => Placement::BothPaths,
                Some(t) => parse_placement(line, t)?,
            };
            if args.len() > 2 {
                return Err(too_many(2));
            }
            let theta = degrees_to_angle(reduce_degrees(deg, angle.text));
            Ok(if keyword == "hwp" { Element::hwp(theta, placement) } else { Element::qwp(theta, placement) })
        }
        "prepare" => {
            let mode = args.first().ok_or_else(|| missing("the mode `lg+`"))?;
            if !mode.text.eq_ignore_ascii_case("lg+") {
                return Err(syntax(line, mode.column, format!("unknown mode {:?}; only `lg+` is supported", mode.text)));
            }
            let p = args.get(1).ok_or_else(|| missing("a placement (@path0)"))?;
            let placement = parse_placement(line, p)?;
            if args.len() > 2 {
                return Err(too_many(2));
            }
            Ok(Element::new(ElementKind::MaskPrepare, placement))
        }
        _ => Err(syntax(line, head.column, format!("unknown element {:?}", head.text))),
    }
}

/// Degrees from a source file to a plate angle in `[0, π)`.
pub fn degrees_to_angle(deg: f64) -> f64 {
    crate::elements::reduce_angle(deg.rem_euclid(180.0).to_radians())
}

fn format_degrees(theta: f64) -> String {
    let s = format!("{:.6}", theta.to_degrees());
    if s == "180.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Canonical text: lowercase keywords, single spaces, six-decimal angles.
pub fn serialize_bench(circuit: &Circuit) -> String {
    let mut out = String::new();
    if let Some(name) = &circuit.name {
        out.push_str(&format!("# {NAME_DIRECTIVE} {name}\n"));
    }
    for e in circuit.elements() {
        let placement = match e.placement {
            Placement::BothPaths => "",
            Placement::Path0 => " @path0",
            Placement::Path1 => " @path1",
        };
        let stmt = match e.kind {
            ElementKind::BeamSplitter => "bs".to_string(),
            ElementKind::PolarizingBeamSplitter => "pbs".to_string(),
            ElementKind::DovePrism => format!("dove{placement}"),
            ElementKind::HalfWavePlate(t) => format!("hwp {}{placement}", format_degrees(t)),
            ElementKind::QuarterWavePlate(t) => format!("qwp {}{placement}", format_degrees(t)),
            ElementKind::MaskPrepare => format!("prepare lg+{placement}"),
        };
        out.push_str(&stmt);
        if !e.label.is_empty() {
            out.push_str(" # ");
            out.push_str(&e.label);
        }
        out.push('\n');
    }
    out
}
