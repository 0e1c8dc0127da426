//! CPLEX-LP text format, restricted to what a minimisation MILP needs.
//!
//! Output layout (one item per line, fixed section order):
//!
//! ```text
//! \Problem name: <name>
//! Minimize
//!  obj: <expr>
//! Subject To
//!  <row>: <expr> <= | >= | = <rhs>
//! Bounds
//!  <one line per variable, sorted by name>
//! Generals
//!  <integer variables, sorted by name>
//! End
//! ```
//!
//! Terms are written as `coef name` joined by ` + ` / ` - `, omitting unit
//! coefficients. Numbers use the shortest decimal that reads back to the same
//! `f64`. Names keep `[A-Za-z0-9_]`; every other byte becomes `~XX` (upper
//! hex), as does a leading digit or a name that collides with a keyword.
//! The `Generals` section is omitted when there are no integer variables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{MilpProblem, Relation, VarKind};
use crate::error::{Error, Result};

const KEYWORDS: &[&str] = &[
    "inf", "infinity", "nan", "free", "end", "bound", "bounds", "general", "generals", "gen", "integer", "integers",
    "binary", "binaries", "bin", "minimize", "minimise", "minimum", "min", "maximize", "maximise", "maximum", "max",
    "subject", "such", "st", "semi", "semis", "semi-continuous", "sos",
];

pub fn escape_name(name: &str) -> String {
    let needs_first = name.is_empty()
        || name.as_bytes()[0].is_ascii_digit()
        || KEYWORDS.contains(&name.to_ascii_lowercase().as_str());
    let mut out = String::with_capacity(name.len());
    for (i, b) in name.bytes().enumerate() {
        let plain = b.is_ascii_alphanumeric() || b == b'_';
        if !plain || (i == 0 && needs_first) {
            write!(out, "~{b:02X}").expect("string write");
        } else {
            out.push(b as char);
        }
    }
    if name.is_empty() {
        out.push_str("~");
    }
    out
}

pub fn unescape_name(text: &str) -> std::result::Result<String, String> {
    if text == "~" {
        return Ok(String::new());
    }
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'~' {
            let hex = text.get(i + 1..i + 3).ok_or_else(|| format!("truncated escape in `{text}`"))?;
            out.push(u8::from_str_radix(hex, 16).map_err(|_| format!("bad escape `~{hex}` in `{text}`"))?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| format!("escaped name `{text}` is not UTF-8"))
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn write_expr(out: &mut String, problem: &MilpProblem, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        let neg = a.is_sign_negative() && a != 0.0;
        match (k, neg) {
            (0, false) => out.push(' '),
            (0, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        let mag = a.abs();
        if mag != 1.0 {
            out.push_str(&fmt_num(mag));
            out.push(' ');
        }
        out.push_str(&escape_name(&problem.variables()[j].name));
    }
}

/// Renders `problem` in the canonical LP layout.
pub fn write_lp_string(problem: &MilpProblem) -> String {
    let mut out = String::new();
    writeln!(out, "\\Problem name: {}", escape_name(&problem.name)).expect("string write");
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, problem, problem.objective());
    out.push_str("\nSubject To\n");
    for c in problem.constraints() {
        write!(out, " {}:", escape_name(&c.name)).expect("string write");
        write_expr(&mut out, problem, &c.terms);
        writeln!(out, " {} {}", c.relation.symbol(), fmt_num(c.rhs)).expect("string write");
    }
    out.push_str("Bounds\n");
    let mut order: Vec<usize> = (0..problem.num_vars()).collect();
    order.sort_by(|&a, &b| problem.variables()[a].name.cmp(&problem.variables()[b].name));
    for &j in &order {
        let v = &problem.variables()[j];
        let name = escape_name(&v.name);
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => format!(" {name} free"),
            (true, false) => format!(" {name} >= {}", fmt_num(v.lower)),
            (false, true) => format!(" -inf <= {name} <= {}", fmt_num(v.upper)),
            (true, true) if v.lower == v.upper => format!(" {name} = {}", fmt_num(v.lower)),
            (true, true) => format!(" {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    let ints: Vec<usize> = order.into_iter().filter(|&j| problem.variables()[j].kind == VarKind::Integer).collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for j in ints {
            writeln!(out, " {}", escape_name(&problem.variables()[j].name)).expect("string write");
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp(problem: &MilpProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_lp_string(problem)).map_err(|e| Error::io(path, e))
}

pub fn parse_lp(path: impl AsRef<Path>) -> Result<MilpProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lp_str(&text)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sign(f64),
    Rel(Relation),
    Colon,
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::LpSyntax { line, msg: msg.into() }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_~!\"#$%&()/,.;?@`'{}|[]".contains(c)
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' || c == '-' {
            toks.push(Tok::Sign(if c == '-' { -1.0 } else { 1.0 }));
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if "<>=!".contains(c) {
            let start = i;
            while i < chars.len() && "<>=!".contains(chars[i]) {
                i += 1;
            }
            let op: String = chars[start..i].iter().collect();
            let rel = match op.as_str() {
                "<=" | "=<" | "<" => Relation::Le,
                ">=" | "=>" | ">" => Relation::Ge,
                "=" => Relation::Eq,
                _ => return Err(syntax(line, format!("malformed relation token `{op}`"))),
            };
            toks.push(Tok::Rel(rel));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| syntax(line, format!("invalid number `{s}`")))?;
            toks.push(Tok::Num(v));
        } else if is_name_char(c) {
            let start = i;
            while i < chars.len() && is_name_char(chars[i]) {
                i += 1;
            }
            toks.push(Tok::Name(chars[start..i].iter().collect()));
        } else {
            return Err(syntax(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    Done,
}

fn section_header(line: &str) -> Option<std::result::Result<Section, &'static str>> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(Ok(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Section::Objective,
        "maximize" | "maximise" | "maximum" | "max" => return Some(Err("maximisation objective")),
        "subject to" | "such that" | "st" | "s.t." => Section::Constraints,
        "bounds" | "bound" => Section::Bounds,
        "generals" | "general" | "gen" | "integers" | "integer" => Section::Generals,
        "binaries" | "binary" | "bin" => Section::Binaries,
        "semi-continuous" | "semi" | "semis" => return Some(Err("semi-continuous section")),
        "sos" => return Some(Err("SOS section")),
        "end" => Section::Done,
        _ => return None,
    }))
}

struct Builder {
    vars: BTreeMap<String, (VarKind, f64, f64)>,
    objective: Vec<(String, f64)>,
    rows: Vec<(String, Vec<(String, f64)>, Relation, f64)>,
}

impl Builder {
    fn touch(&mut self, name: &str) {
        self.vars.entry(name.to_string()).or_insert((VarKind::Continuous, 0.0, f64::INFINITY));
    }
}

fn unescape(line: usize, raw: &str) -> Result<String> {
    unescape_name(raw).map_err(|m| syntax(line, m))
}

/// Parses `name? : expr` into an optional label and (name, coef) terms. A lone
/// `0` is the empty expression.
fn parse_expr(line: usize, toks: &[Tok]) -> Result<Vec<(String, f64)>> {
    if toks == [Tok::Num(0.0)] {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while let Some(Tok::Sign(s)) = toks.get(i) {
            sign *= s;
            saw_sign = true;
            i += 1;
        }
        if i > 0 && !saw_sign && !terms.is_empty() {
            return Err(syntax(line, "missing operator between terms"));
        }
        let mut coef = sign;
        if let Some(Tok::Num(v)) = toks.get(i) {
            coef *= v;
            i += 1;
        }
        match toks.get(i) {
            Some(Tok::Name(n)) => {
                terms.push((unescape(line, n)?, coef));
                i += 1;
            }
            Some(other) => return Err(syntax(line, format!("expected variable name, found {other:?}"))),
            None => return Err(Error::LpUnsupported { line, feature: "constant term in expression".into() }),
        }
    }
    Ok(terms)
}

fn split_label(toks: &[Tok]) -> (Option<&str>, &[Tok]) {
    match toks {
        [Tok::Name(n), Tok::Colon, rest @ ..] => (Some(n.as_str()), rest),
        _ => (None, toks),
    }
}

fn parse_constraint(line: usize, toks: &[Tok], auto: usize) -> Result<(String, Vec<(String, f64)>, Relation, f64)> {
    let (label, body) = split_label(toks);
    let name = match label {
        Some(l) => unescape(line, l)?,
        None => format!("R{auto}"),
    };
    let pos = body.iter().position(|t| matches!(t, Tok::Rel(_))).ok_or_else(|| syntax(line, "constraint has no relation"))?;
    let Tok::Rel(rel) = body[pos] else { unreachable!() };
    let terms = parse_expr(line, &body[..pos])?;
    let rhs = match &body[pos + 1..] {
        [Tok::Num(v)] => *v,
        [Tok::Sign(s), Tok::Num(v)] => s * v,
        _ => return Err(syntax(line, "right-hand side must be a single number")),
    };
    Ok((name, terms, rel, rhs))
}

fn bound_value(toks: &[Tok]) -> Option<(f64, usize)> {
    let (sign, rest) = match toks.first() {
        Some(Tok::Sign(s)) => (*s, &toks[1..]),
        _ => (1.0, toks),
    };
    match rest.first() {
        Some(Tok::Num(v)) => Some((sign * v, toks.len() - rest.len() + 1)),
        Some(Tok::Name(n)) if matches!(n.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
            Some((sign * f64::INFINITY, toks.len() - rest.len() + 1))
        }
        _ => None,
    }
}

fn flip(rel: Relation) -> Relation {
    match rel {
        Relation::Le => Relation::Ge,
        Relation::Ge => Relation::Le,
        Relation::Eq => Relation::Eq,
    }
}

fn apply_bound(b: &mut Builder, line: usize, name: &str, rel: Relation, value: f64) -> Result<()> {
    let name = unescape(line, name)?;
    b.touch(&name);
    let entry = b.vars.get_mut(&name).expect("touched");
    match rel {
        Relation::Ge => entry.1 = value,
        Relation::Le => entry.2 = value,
        Relation::Eq => {
            entry.1 = value;
            entry.2 = value;
        }
    }
    Ok(())
}

fn parse_bound(b: &mut Builder, line: usize, toks: &[Tok]) -> Result<()> {
    if let [Tok::Name(n), Tok::Name(kw)] = toks {
        if kw.eq_ignore_ascii_case("free") {
            let name = unescape(line, n)?;
            b.touch(&name);
            let e = b.vars.get_mut(&name).expect("touched");
            e.1 = f64::NEG_INFINITY;
            e.2 = f64::INFINITY;
            return Ok(());
        }
    }
    // name rel value
    if let [Tok::Name(n), Tok::Rel(rel), rest @ ..] = toks {
        if let Some((v, used)) = bound_value(rest) {
            if used == rest.len() {
                return apply_bound(b, line, n, *rel, v);
            }
        }
        return Err(syntax(line, "malformed bound"));
    }
    // value rel name [rel value]
    if let Some((lo, used)) = bound_value(toks) {
        if let [Tok::Rel(r1), Tok::Name(n), rest @ ..] = &toks[used..] {
            apply_bound(b, line, n, flip(*r1), lo)?;
            match rest {
                [] => return Ok(()),
                [Tok::Rel(r2), tail @ ..] => {
                    if let Some((hi, used2)) = bound_value(tail) {
                        if used2 == tail.len() {
                            return apply_bound(b, line, n, *r2, hi);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Err(syntax(line, "malformed bound"))
}

/// Parses the LP subset written by [`write_lp_string`]. Constraints may span
/// several lines; everything else is one item per line.
pub fn parse_lp_str(text: &str) -> Result<MilpProblem> {
    let mut section = Section::Preamble;
    let mut name = String::from("lp");
    let mut b = Builder { vars: BTreeMap::new(), objective: Vec::new(), rows: Vec::new() };
    let mut obj_toks: Vec<Tok> = Vec::new();
    let mut obj_line = 0;
    let mut pending: Option<(usize, Vec<Tok>)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(rest) = raw.trim_start().strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Problem name:") {
                name = unescape(line_no, n.trim())?;
            }
            continue;
        }
        let content = raw.split('\\').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if section == Section::Done {
            break;
        }
        if let Some(h) = section_header(content) {
            let next = h.map_err(|f| Error::LpUnsupported { line: line_no, feature: f.to_string() })?;
            if let Some((l, _)) = pending {
                return Err(syntax(l, "constraint has no relation"));
            }
            section = next;
            continue;
        }
        let toks = tokenize(content, line_no)?;
        match section {
            Section::Preamble => return Err(syntax(line_no, "content before the objective section")),
            Section::Objective => {
                if obj_toks.is_empty() {
                    obj_line = line_no;
                }
                obj_toks.extend(toks);
            }
            Section::Constraints => {
                let (start, mut acc) = pending.take().unwrap_or((line_no, Vec::new()));
                acc.extend(toks);
                let complete = acc
                    .iter()
                    .position(|t| matches!(t, Tok::Rel(_)))
                    .is_some_and(|p| acc[p + 1..].iter().any(|t| matches!(t, Tok::Num(_))));
                if complete {
                    let row = parse_constraint(start, &acc, b.rows.len() + 1)?;
                    b.rows.push(row);
                } else {
                    pending = Some((start, acc));
                }
            }
            Section::Bounds => parse_bound(&mut b, line_no, &toks)?,
            Section::Generals | Section::Binaries => {
                for t in toks {
                    let Tok::Name(n) = t else {
                        return Err(syntax(line_no, "expected variable names"));
                    };
                    let n = unescape(line_no, &n)?;
                    b.touch(&n);
                    let e = b.vars.get_mut(&n).expect("touched");
                    e.0 = VarKind::Integer;
                    if section == Section::Binaries {
                        e.1 = 0.0;
                        e.2 = 1.0;
                    }
                }
            }
            Section::Done => unreachable!(),
        }
    }
    if let Some((l, _)) = pending {
        return Err(syntax(l, "constraint has no relation"));
    }
    if section == Section::Preamble {
        return Err(syntax(1, "no objective section"));
    }
    let (_, body) = split_label(&obj_toks);
    b.objective = parse_expr(obj_line, body)?;
    for (n, _) in b.objective.clone() {
        b.touch(&n);
    }
    for (_, terms, _, _) in b.rows.clone() {
        for (n, _) in terms {
            b.touch(&n);
        }
    }

    let mut problem = MilpProblem::new(name);
    let mut ids = HashMap::new();
    for (n, (kind, lo, hi)) in &b.vars {
        let j = problem.add_variable(n.clone(), *kind, *lo, *hi)?;
        ids.insert(n.clone(), j);
    }
    let resolve = |terms: &[(String, f64)]| terms.iter().map(|(n, a)| (ids[n], *a)).collect::<Vec<_>>();
    problem.set_objective(resolve(&b.objective))?;
    for (n, terms, rel, rhs) in &b.rows {
        problem.add_constraint(n.clone(), resolve(terms), *rel, *rhs)?;
    }
    Ok(problem)
}
