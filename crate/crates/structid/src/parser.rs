//! The `.ode` model format.
//!
//! ```text
//! model name
//! params: a, b
//! inputs: u
//! states:
//!   x' = a*x + b*u
//! outputs:
//!   y = x^2
//! init:
//!   x = x0
//! ```
//!
//! `#` starts a comment. The `init:` section is optional and renames the
//! initial-condition symbol of a state (default `<state>*`).

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use structid_core::model::default_initial_name;
use structid_core::{DiffVar, Model, ModelError, Monomial, Poly, RatFunc};

/// Location of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    SyntaxError { span: SourceSpan, message: String },
    #[error("{span}: undeclared symbol `{name}`")]
    UndeclaredSymbol { span: SourceSpan, name: String },
    #[error("{span}: exponent must be a positive integer")]
    NonIntegerExponent { span: SourceSpan },
    #[error("{span}: division by zero")]
    DivisionByZeroConstant { span: SourceSpan },
    #[error("invalid model: {0}")]
    Invalid(#[from] ModelError),
}

/// Largest accepted exponent.
pub const MAX_EXPONENT: u32 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Prime,
    Equals,
    Comma,
    Colon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let span = |len: usize| SourceSpan {
            line,
            column: k + 1,
            length: len,
        };
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            out.push(Token {
                tok: Tok::Ident(s),
                span: SourceSpan {
                    line,
                    column: start + 1,
                    length: k - start,
                },
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            out.push(Token {
                tok: Tok::Int(s.parse().expect("digits")),
                span: SourceSpan {
                    line,
                    column: start + 1,
                    length: k - start,
                },
            });
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '\'' => Tok::Prime,
            '=' => Tok::Equals,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            _ => {
                return Err(ParseError::SyntaxError {
                    span: span(1),
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token { tok, span: span(1) });
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    States,
    Outputs,
    Init,
}

struct Equation {
    name: String,
    name_span: SourceSpan,
    rhs: Vec<Token>,
    end: SourceSpan,
}

struct Decls {
    name: Option<String>,
    params: Vec<(String, SourceSpan)>,
    inputs: Vec<(String, SourceSpan)>,
    states: Vec<Equation>,
    outputs: Vec<Equation>,
    init: Vec<Equation>,
}

fn end_span(line: usize, text: &str) -> SourceSpan {
    SourceSpan {
        line,
        column: text.chars().count() + 1,
        length: 0,
    }
}

fn syntax(span: SourceSpan, message: impl Into<String>) -> ParseError {
    ParseError::SyntaxError {
        span,
        message: message.into(),
    }
}

fn ident_list(toks: &[Token], end: SourceSpan) -> Result<Vec<(String, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        match &toks[k].tok {
            Tok::Ident(s) => out.push((s.clone(), toks[k].span)),
            _ => return Err(syntax(toks[k].span, "expected a name")),
        }
        k += 1;
        if k < toks.len() {
            if toks[k].tok != Tok::Comma {
                return Err(syntax(toks[k].span, "expected `,`"));
            }
            k += 1;
            if k == toks.len() {
                return Err(syntax(end, "expected a name after `,`"));
            }
        }
    }
    Ok(out)
}

fn split_header(toks: &[Token], keyword: &str) -> Option<usize> {
    match (toks.first(), toks.get(1)) {
        (
            Some(Token {
                tok: Tok::Ident(s), ..
            }),
            Some(Token { tok: Tok::Colon, .. }),
        ) if s == keyword => Some(2),
        _ => None,
    }
}

fn collect(text: &str) -> Result<Decls, ParseError> {
    let mut d = Decls {
        name: None,
        params: Vec::new(),
        inputs: Vec::new(),
        states: Vec::new(),
        outputs: Vec::new(),
        init: Vec::new(),
    };
    let mut section = Section::None;
    let mut seen_states = false;
    let mut seen_outputs = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let toks = lex_line(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let end = end_span(line, raw);
        if let Some(Token {
            tok: Tok::Ident(kw),
            span,
        }) = toks.first()
        {
            if kw == "model" && !matches!(toks.get(1).map(|t| &t.tok), Some(Tok::Equals | Tok::Prime)) {
                if d.name.is_some() {
                    return Err(syntax(*span, "duplicate `model` header"));
                }
                match toks.get(1..) {
                    Some([Token {
                        tok: Tok::Ident(n), ..
                    }]) => d.name = Some(n.clone()),
                    _ => return Err(syntax(*span, "expected `model <name>`")),
                }
                continue;
            }
        }
        let mut header = None;
        for kw in ["params", "inputs", "states", "outputs", "init"] {
            if let Some(start) = split_header(&toks, kw) {
                header = Some((kw, start));
                break;
            }
        }
        if let Some((kw, start)) = header {
            let rest = &toks[start..];
            match kw {
                "params" | "inputs" => {
                    let list = ident_list(rest, end)?;
                    if kw == "params" {
                        d.params.extend(list);
                    } else {
                        d.inputs.extend(list);
                    }
                    section = Section::None;
                }
                _ => {
                    if let Some(t) = rest.first() {
                        return Err(syntax(t.span, format!("`{kw}:` must be followed by a line break")));
                    }
                    section = match kw {
                        "states" => {
                            if seen_states {
                                return Err(syntax(toks[0].span, "duplicate `states:` section"));
                            }
                            seen_states = true;
                            Section::States
                        }
                        "outputs" => {
                            if seen_outputs {
                                return Err(syntax(toks[0].span, "duplicate `outputs:` section"));
                            }
                            seen_outputs = true;
                            Section::Outputs
                        }
                        _ => Section::Init,
                    };
                }
            }
            continue;
        }
        let (name, name_span) = match &toks[0].tok {
            Tok::Ident(n) => (n.clone(), toks[0].span),
            _ => return Err(syntax(toks[0].span, "expected a section header or an equation")),
        };
        let mut k = 1;
        match section {
            Section::None => {
                return Err(syntax(toks[0].span, "equation outside of a `states:`, `outputs:` or `init:` section"))
            }
            Section::States => {
                if toks.get(1).map(|t| &t.tok) != Some(&Tok::Prime) {
                    let sp = toks.get(1).map_or(end, |t| t.span);
                    return Err(syntax(sp, "expected `'` after the state name"));
                }
                k = 2;
            }
            Section::Outputs | Section::Init => {}
        }
        if toks.get(k).map(|t| &t.tok) != Some(&Tok::Equals) {
            let sp = toks.get(k).map_or(end, |t| t.span);
            return Err(syntax(sp, "expected `=`"));
        }
        let eq = Equation {
            name,
            name_span,
            rhs: toks[k + 1..].to_vec(),
            end,
        };
        match section {
            Section::States => d.states.push(eq),
            Section::Outputs => d.outputs.push(eq),
            Section::Init => d.init.push(eq),
            Section::None => unreachable!(),
        }
    }
    Ok(d)
}

struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
    end: SourceSpan,
    symbols: &'a HashMap<String, DiffVar>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map_or(self.end, |t| t.span)
    }

    fn expr(&mut self) -> Result<RatFunc, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RatFunc, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let span = self.span();
                    let rhs = self.unary()?;
                    acc = acc.div(&rhs).ok_or(ParseError::DivisionByZeroConstant { span })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RatFunc, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        if self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFunc, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let start = self.span();
        let e = self.exponent(start)?;
        if self.peek() == Some(&Tok::Caret) {
            return Err(syntax(self.span(), "chained `^` needs parentheses"));
        }
        Ok(base.pow(e))
    }

    /// `INT` or `( INT )`; anything else is not a positive integer.
    fn exponent(&mut self, start: SourceSpan) -> Result<u32, ParseError> {
        let bad = |end: &Self| ParseError::NonIntegerExponent {
            span: SourceSpan {
                length: if end.pos > 0 && end.toks[end.pos - 1].span.line == start.line {
                    let last = end.toks[end.pos - 1].span;
                    (last.column + last.length).saturating_sub(start.column).max(1)
                } else {
                    1
                },
                ..start
            },
        };
        let paren = self.peek() == Some(&Tok::LParen);
        if paren {
            self.pos += 1;
        }
        let value = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = n.clone();
                self.pos += 1;
                n
            }
            _ => {
                self.skip_exponent(paren);
                return Err(bad(self));
            }
        };
        if paren {
            if self.peek() != Some(&Tok::RParen) {
                self.skip_exponent(paren);
                return Err(bad(self));
            }
            self.pos += 1;
        }
        match u32::try_from(&value) {
            Ok(e) if (1..=MAX_EXPONENT).contains(&e) => Ok(e),
            _ => Err(bad(self)),
        }
    }

    fn skip_exponent(&mut self, paren: bool) {
        if !paren {
            return;
        }
        let mut depth = 1usize;
        while let Some(t) = self.peek().cloned() {
            self.pos += 1;
            match t {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    fn atom(&mut self) -> Result<RatFunc, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(RatFunc::from_poly(Poly::constant(n)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.symbols.get(&name) {
                    Some(v) => Ok(RatFunc::from_poly(Poly::var(*v))),
                    None => Err(ParseError::UndeclaredSymbol { span, name }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(syntax(self.span(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(t) => Err(syntax(span, format!("unexpected {}", describe(&t)))),
            None => Err(syntax(span, "unexpected end of expression")),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Prime => "`'`".into(),
        Tok::Equals => "`=`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
    }
}

fn parse_rhs(eq: &Equation, symbols: &HashMap<String, DiffVar>) -> Result<RatFunc, ParseError> {
    let mut p = ExprParser {
        toks: &eq.rhs,
        pos: 0,
        end: eq.end,
        symbols,
    };
    let r = p.expr()?;
    if p.pos < eq.rhs.len() {
        return Err(syntax(p.span(), format!("unexpected {}", describe(&eq.rhs[p.pos].tok))));
    }
    Ok(r)
}

fn check_unique(names: &[(String, SourceSpan)]) -> Result<(), ParseError> {
    let mut seen = HashMap::new();
    for (n, span) in names {
        if seen.insert(n.as_str(), *span).is_some() {
            return Err(syntax(*span, format!("`{n}` is declared twice")));
        }
    }
    Ok(())
}

/// Parses a model. The model name defaults to `model` when no header is
/// given.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let d = collect(text)?;
    let states: Vec<(String, SourceSpan)> = d.states.iter().map(|e| (e.name.clone(), e.name_span)).collect();
    let outputs: Vec<(String, SourceSpan)> = d.outputs.iter().map(|e| (e.name.clone(), e.name_span)).collect();
    let mut all: Vec<(String, SourceSpan)> = Vec::new();
    all.extend(d.params.iter().cloned());
    all.extend(d.inputs.iter().cloned());
    all.extend(states.iter().cloned());
    all.extend(outputs.iter().cloned());
    check_unique(&all)?;

    let mut initial: Vec<String> = states.iter().map(|(s, _)| default_initial_name(s)).collect();
    let mut renamed = vec![false; states.len()];
    for eq in &d.init {
        let Some(i) = states.iter().position(|(s, _)| *s == eq.name) else {
            return Err(ParseError::UndeclaredSymbol {
                span: eq.name_span,
                name: eq.name.clone(),
            });
        };
        if renamed[i] {
            return Err(syntax(eq.name_span, format!("initial condition of `{}` given twice", eq.name)));
        }
        match eq.rhs.as_slice() {
            [Token {
                tok: Tok::Ident(n),
                span,
            }] => {
                if all.iter().any(|(m, _)| m == n) || initial.iter().any(|m| m == n) {
                    return Err(syntax(*span, format!("`{n}` is declared twice")));
                }
                initial[i] = n.clone();
                renamed[i] = true;
            }
            [t, ..] => return Err(syntax(t.span, "expected a single name")),
            [] => return Err(syntax(eq.end, "expected a name")),
        }
    }

    let mut symbols = HashMap::new();
    for (k, (n, _)) in d.params.iter().enumerate() {
        symbols.insert(n.clone(), DiffVar::param(k as u32));
    }
    for (k, (n, _)) in d.inputs.iter().enumerate() {
        symbols.insert(n.clone(), DiffVar::input(k as u32, 0));
    }
    for (k, (n, _)) in states.iter().enumerate() {
        symbols.insert(n.clone(), DiffVar::state(k as u32, 0));
    }
    let state_rhs = d
        .states
        .iter()
        .map(|e| parse_rhs(e, &symbols))
        .collect::<Result<Vec<_>, _>>()?;
    let output_rhs = d
        .outputs
        .iter()
        .map(|e| parse_rhs(e, &symbols))
        .collect::<Result<Vec<_>, _>>()?;
    let model = Model {
        name: d.name.unwrap_or_else(|| "model".to_string()),
        params: d.params.into_iter().map(|(n, _)| n).collect(),
        inputs: d.inputs.into_iter().map(|(n, _)| n).collect(),
        states: states.into_iter().map(|(n, _)| n).collect(),
        initial,
        state_rhs,
        outputs: outputs.into_iter().map(|(n, _)| n).collect(),
        output_rhs,
    };
    model.validate()?;
    Ok(model)
}

fn write_monomial(out: &mut String, m: &Monomial, model: &Model) {
    for (k, &(v, e)) in m.factors().iter().enumerate() {
        if k > 0 {
            out.push('*');
        }
        out.push_str(&model.var_name(v));
        if e > 1 {
            out.push_str(&format!("^{e}"));
        }
    }
}

/// Writes `sum c_k m_k / d` with each coefficient reduced against `d`.
fn write_poly_over(out: &mut String, p: &Poly, d: &BigInt, model: &Model) {
    if p.is_zero() {
        out.push('0');
        return;
    }
    for (k, (m, c)) in p.graded_terms().into_iter().enumerate() {
        let g = num_integer::Integer::gcd(c, d);
        let (n, q) = (c / &g, d / &g);
        let neg = n.is_negative();
        let a = n.abs();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let coeff = if q.is_one() { a.to_string() } else { format!("{a}/{q}") };
        if m.is_one() {
            out.push_str(&coeff);
        } else {
            if !(a.is_one() && q.is_one()) {
                out.push_str(&coeff);
                out.push('*');
            }
            write_monomial(out, m, model);
        }
    }
}

/// Canonical text for a rational function in the names of `model`.
pub fn format_ratfunc(r: &RatFunc, model: &Model) -> String {
    let mut out = String::new();
    if let Some(d) = r.den().as_constant() {
        write_poly_over(&mut out, r.num(), &d, model);
    } else {
        out.push('(');
        write_poly_over(&mut out, r.num(), &BigInt::one(), model);
        out.push_str(")/(");
        write_poly_over(&mut out, r.den(), &BigInt::one(), model);
        out.push(')');
    }
    out
}

/// Canonical text of a model; parses back to an equal model.
pub fn serialize_model(model: &Model) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {}\n", model.name));
    out.push_str(&format!("params: {}\n", model.params.join(", ")));
    if !model.inputs.is_empty() {
        out.push_str(&format!("inputs: {}\n", model.inputs.join(", ")));
    }
    out.push_str("states:\n");
    for (n, r) in model.states.iter().zip(&model.state_rhs) {
        out.push_str(&format!("  {n}' = {}\n", format_ratfunc(r, model)));
    }
    out.push_str("outputs:\n");
    for (n, r) in model.outputs.iter().zip(&model.output_rhs) {
        out.push_str(&format!("  {n} = {}\n", format_ratfunc(r, model)));
    }
    let renamed: Vec<(&String, &String)> = model
        .states
        .iter()
        .zip(&model.initial)
        .filter(|(s, i)| default_initial_name(s) != **i)
        .collect();
    if !renamed.is_empty() {
        out.push_str("init:\n");
        for (s, i) in renamed {
            out.push_str(&format!("  {s} = {i}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "model ex\nparams: mu1, mu2\nstates:\n  x' = mu2*x + mu1\noutputs:\n  y = x^2\n";

    #[test]
    fn parses_small_model() {
        let m = parse_model(EXAMPLE).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.n_outputs(), 1);
        assert_eq!(m.params.len(), 2);
        assert_eq!(m.initial, vec!["x*".to_string()]);
        assert_eq!(m.degree_d0(), 2);
    }

    #[test]
    fn minimal_model_without_params() {
        let m = parse_model("states:\n x1' = x1\noutputs:\n y1 = x1").unwrap();
        assert_eq!(m.n_theta(), 1);
        assert_eq!(m.name, "model");
    }

    #[test]
    fn rejects_fractional_exponent() {
        let err = parse_model("states:\n x1' = x1\noutputs:\n y1 = x1^(1/2)").unwrap_err();
        assert_eq!(
            err,
            ParseError::NonIntegerExponent {
                span: SourceSpan {
                    line: 4,
                    column: 10,
                    length: 5
                }
            }
        );
        for bad in ["x1^0", "x1^-1", "x1^a", "x1^(2", "x1^256"] {
            let t = format!("states:\n x1' = x1\noutputs:\n y1 = {bad}");
            assert!(matches!(parse_model(&t), Err(ParseError::NonIntegerExponent { .. })), "{bad}");
        }
    }

    #[test]
    fn undeclared_symbol_span() {
        let err = parse_model("params: a\nstates:\n x' = a*b\noutputs:\n y = x").unwrap_err();
        assert_eq!(
            err,
            ParseError::UndeclaredSymbol {
                span: SourceSpan {
                    line: 3,
                    column: 9,
                    length: 1
                },
                name: "b".to_string()
            }
        );
    }

    #[test]
    fn division_by_zero() {
        let err = parse_model("states:\n x' = x/(2-2)\noutputs:\n y = x").unwrap_err();
        assert!(matches!(err, ParseError::DivisionByZeroConstant { .. }));
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "states:\n x = x\noutputs:\n y = x",
            "states:\n x' = x +\noutputs:\n y = x",
            "states:\n x' = (x\noutputs:\n y = x",
            "x' = x",
            "params: a,\nstates:\n x' = a\noutputs:\n y = x",
            "states:\n x' = x $\noutputs:\n y = x",
            "states:\n x' = x^2^3\noutputs:\n y = x",
        ] {
            assert!(matches!(parse_model(bad), Err(ParseError::SyntaxError { .. })), "{bad}");
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            parse_model("states:\n x' = x\n"),
            Err(ParseError::Invalid(ModelError::EmptyOutputs))
        ));
        assert!(matches!(
            parse_model("params: x\nstates:\n x' = x\noutputs:\n y = x"),
            Err(ParseError::SyntaxError { .. })
        ));
    }

    #[test]
    fn rational_literals_round_trip() {
        let m = parse_model("params: a\nstates:\n x' = 1/3*x - a/6 + 1/2\noutputs:\n y = x").unwrap();
        let text = serialize_model(&m);
        assert!(text.contains("x' = -1/6*a + 1/3*x + 1/2"), "{text}");
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn rational_function_round_trip() {
        let m = parse_model("params: k\nstates:\n x' = k*x/(1 + x) - 2/(x^2 + k)\noutputs:\n y = x").unwrap();
        let text = serialize_model(&m);
        let again = parse_model(&text).unwrap();
        assert_eq!(again, m);
        assert_eq!(serialize_model(&again), text);
    }

    #[test]
    fn init_section_renames() {
        let m = parse_model("params: t\nstates:\n x' = t\noutputs:\n y = x\ninit:\n x = x0").unwrap();
        assert_eq!(m.theta_names(), vec!["t".to_string(), "x0".to_string()]);
        let text = serialize_model(&m);
        assert!(text.contains("init:\n  x = x0\n"));
        assert_eq!(parse_model(&text).unwrap(), m);
        assert!(parse_model("params: t\nstates:\n x' = t\noutputs:\n y = x\ninit:\n z = x0").is_err());
        assert!(parse_model("params: t\nstates:\n x' = t\noutputs:\n y = x\ninit:\n x = t").is_err());
    }

    #[test]
    fn daisy_serialization_has_two_outputs() {
        let m = parse_model(
            "params: theta1\nstates:\n x1' = 0\noutputs:\n y1 = x1\n y2 = theta1*x1 + theta1^2\ninit:\n x1 = theta2",
        )
        .unwrap();
        let text = serialize_model(&m);
        assert!(text.contains("  y1 = x1\n"));
        assert!(text.contains("  y2 = theta1*x1 + theta1^2\n"), "{text}");
    }

    #[test]
    fn comments_and_blank_lines() {
        let m = parse_model("# header\nmodel m # name\n\nparams: a # one\nstates:\n  x' = -a*x # decay\noutputs:\n  y = x\n")
            .unwrap();
        assert_eq!(m.name, "m");
        assert_eq!(m.params, vec!["a".to_string()]);
    }
}
