//! The table of stably simple normal forms, loaded from a TOML data file.
//!
//! Entries are templates in integer parameters with side constraints. The
//! built-in table is compiled into the crate; a different file can be given
//! explicitly or through the `MULTIGERM_CATALOG` environment variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::germs::{ComponentGerm, Multigerm};
use crate::jet::{Jet, Rational};
use crate::semigroup::{invariant_pair, value_semigroup, InvariantPair};
use crate::tangent::orbit_dim_sequence;

const BUILTIN: &str = include_str!("../data/catalog.toml");

/// Environment variable naming a catalog file to use instead of the built-in one.
pub const CATALOG_ENV: &str = "MULTIGERM_CATALOG";

const PARAM_NAMES: [&str; 6] = ["m", "n", "k", "l", "s", "r"];

// ---------------------------------------------------------------------------
// Integer expressions and conditions

#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    Num(i64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

type Env = BTreeMap<String, i64>;

impl Expr {
    fn eval(&self, env: &Env) -> Result<i64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => *env
                .get(name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing parameter {name}")))?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Neg(a) => -a.eval(env)?,
        })
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Neg(a) => a.vars(out),
        }
    }

    fn is_constant(&self) -> bool {
        let mut v = BTreeSet::new();
        self.vars(&mut v);
        v.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Num(i64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token::Num(text.parse().map_err(|_| {
                Error::Catalog(format!("number out of range in {s:?}"))
            })?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Catalog(format!("unexpected {c:?} in expression {s:?}")));
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> ExprParser<'a> {
    fn parse(src: &'a str) -> Result<Expr> {
        let mut p = ExprParser {
            src,
            tokens: tokenize(src)?,
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }

    fn error(&self, what: &str) -> Error {
        Error::Catalog(format!("{what} in expression {:?}", self.src))
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Op('*')) => self.pos += 1,
                Some(Token::Num(_) | Token::Ident(_) | Token::Op('(')) => {}
                _ => break,
            }
            let rhs = self.unary()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("unexpected end"))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Ident(name) => Ok(Expr::Var(name)),
            Token::Op('(') => {
                let e = self.expr()?;
                match self.peek() {
                    Some(Token::Op(')')) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(self.error("missing ')'")),
                }
            }
            Token::Op(c) => Err(self.error(&format!("unexpected {c:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl Cmp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }
}

/// A chained comparison such as `m < n <= 2m`.
#[derive(Clone, Debug)]
struct Condition {
    text: String,
    operands: Vec<Expr>,
    ops: Vec<Cmp>,
}

impl Condition {
    fn parse(text: &str) -> Result<Condition> {
        let chars: Vec<char> = text.chars().collect();
        let mut operands = Vec::new();
        let mut ops = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (op, width) = match (chars[i], two.as_str()) {
                (_, "<=") => (Some(Cmp::Le), 2),
                (_, ">=") => (Some(Cmp::Ge), 2),
                (_, "!=") => (Some(Cmp::Ne), 2),
                (_, "==") => (Some(Cmp::Eq), 2),
                ('<', _) => (Some(Cmp::Lt), 1),
                ('>', _) => (Some(Cmp::Gt), 1),
                ('=', _) => (Some(Cmp::Eq), 1),
                _ => (None, 1),
            };
            if let Some(op) = op {
                let operand: String = chars[start..i].iter().collect();
                operands.push(ExprParser::parse(&operand)?);
                ops.push(op);
                start = i + width;
            }
            i += width;
        }
        let operand: String = chars[start..].iter().collect();
        operands.push(ExprParser::parse(&operand)?);
        if ops.is_empty() {
            return Err(Error::Catalog(format!("no comparison in condition {text:?}")));
        }
        Ok(Condition {
            text: text.trim().to_string(),
            operands,
            ops,
        })
    }

    fn holds(&self, env: &Env) -> Result<bool> {
        let values = self
            .operands
            .iter()
            .map(|e| e.eval(env))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .ops
            .iter()
            .zip(values.windows(2))
            .all(|(op, w)| op.holds(w[0], w[1])))
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        for e in &self.operands {
            e.vars(out);
        }
    }
}

/// A stated determinacy degree, possibly conditional.
#[derive(Clone, Debug)]
struct DeterminacyRule {
    text: String,
    value: Expr,
    condition: Option<Condition>,
    otherwise: Option<Expr>,
}

impl DeterminacyRule {
    fn parse(text: &str) -> Result<DeterminacyRule> {
        let (value, rest) = match text.split_once(" if ") {
            Some((v, rest)) => (v, Some(rest)),
            None => (text, None),
        };
        let (condition, otherwise) = match rest {
            None => (None, None),
            Some(rest) => match rest.split_once(" else ") {
                Some((c, e)) => (Some(Condition::parse(c)?), Some(ExprParser::parse(e)?)),
                None => (Some(Condition::parse(rest)?), None),
            },
        };
        Ok(DeterminacyRule {
            text: text.trim().to_string(),
            value: ExprParser::parse(value)?,
            condition,
            otherwise,
        })
    }

    fn eval(&self, env: &Env) -> Result<Option<u32>> {
        let chosen = match &self.condition {
            None => Some(&self.value),
            Some(c) if c.holds(env)? => Some(&self.value),
            Some(_) => self.otherwise.as_ref(),
        };
        chosen
            .map(|e| {
                let v = e.eval(env)?;
                u32::try_from(v)
                    .ok()
                    .filter(|v| *v >= 1)
                    .ok_or_else(|| Error::Catalog(format!("determinacy {v} is not positive")))
            })
            .transpose()
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        self.value.vars(out);
        if let Some(c) = &self.condition {
            c.vars(out);
        }
        if let Some(e) = &self.otherwise {
            e.vars(out);
        }
    }
}

// ---------------------------------------------------------------------------
// Templates

#[derive(Clone, Debug)]
struct Term {
    coeff: Rational,
    exponent: Expr,
}

#[derive(Clone, Debug)]
enum Slot {
    Sum(Vec<Term>),
    Repeat(Box<Slot>, Expr),
}

#[derive(Clone, Debug)]
enum ComponentTemplate {
    Slots(Vec<Slot>),
    Axes(Expr),
}

/// Split at `sep` outside brackets and braces.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '{' | '(' => depth += 1,
            ']' | '}' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_term(raw: &str, negative: bool) -> Result<Term> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let t = s
        .find('t')
        .ok_or_else(|| Error::Catalog(format!("term {raw:?} has no t")))?;
    let coeff_text = s[..t].trim_end_matches('*');
    let mut coeff = if coeff_text.is_empty() {
        Rational::from_integer(1.into())
    } else {
        coeff_text
            .parse::<Rational>()
            .map_err(|_| Error::Catalog(format!("bad coefficient in term {raw:?}")))?
    };
    if negative {
        coeff = -coeff;
    }
    let rest = &s[t + 1..];
    let exponent = if rest.is_empty() {
        Expr::Num(1)
    } else if let Some(e) = rest.strip_prefix('^') {
        if let Some(inner) = e.strip_prefix('{').and_then(|x| x.strip_suffix('}')) {
            ExprParser::parse(inner)?
        } else {
            ExprParser::parse(e)?
        }
    } else {
        return Err(Error::Catalog(format!("bad term {raw:?}")));
    };
    Ok(Term { coeff, exponent })
}

fn parse_slot(raw: &str) -> Result<Slot> {
    let s = raw.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
        let parts = split_top(inner, ';');
        if parts.len() != 2 {
            return Err(Error::Catalog(format!("repetition {s:?} needs [slot; count]")));
        }
        return Ok(Slot::Repeat(
            Box::new(parse_slot(parts[0])?),
            ExprParser::parse(parts[1])?,
        ));
    }
    if s == "0" {
        return Ok(Slot::Sum(Vec::new()));
    }
    if s.is_empty() {
        return Err(Error::Catalog("empty slot".into()));
    }
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut negative = false;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            '+' | '-' if depth == 0 => {
                let piece = &s[start..i];
                if !piece.trim().is_empty() {
                    terms.push(parse_term(piece, negative)?);
                }
                negative = c == '-';
                start = i + 1;
            }
            _ => {}
        }
    }
    terms.push(parse_term(&s[start..], negative)?);
    Ok(Slot::Sum(terms))
}

fn parse_component(raw: &str) -> Result<ComponentTemplate> {
    let s = raw.trim();
    if let Some(arg) = s.strip_prefix("@axes(").and_then(|x| x.strip_suffix(')')) {
        return Ok(ComponentTemplate::Axes(ExprParser::parse(arg)?));
    }
    if s.starts_with('@') {
        return Err(Error::Catalog(format!("unknown macro {s:?}")));
    }
    Ok(ComponentTemplate::Slots(
        split_top(s, ',').into_iter().map(parse_slot).collect::<Result<_>>()?,
    ))
}

impl Slot {
    fn expand(&self, env: &Env, out: &mut Vec<Vec<(u32, Rational)>>) -> Result<()> {
        match self {
            Slot::Sum(terms) => {
                let mut coord = Vec::with_capacity(terms.len());
                for t in terms {
                    let e = t.exponent.eval(env)?;
                    let e = u32::try_from(e)
                        .ok()
                        .filter(|e| *e >= 1)
                        .ok_or_else(|| Error::Catalog(format!("exponent {e} is not positive")))?;
                    coord.push((e, t.coeff.clone()));
                }
                out.push(coord);
            }
            Slot::Repeat(slot, count) => {
                let c = count.eval(env)?;
                if c < 0 {
                    return Err(Error::Catalog(format!("negative repetition count {c}")));
                }
                for _ in 0..c {
                    slot.expand(env, out)?;
                }
            }
        }
        Ok(())
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Slot::Sum(terms) => terms.iter().for_each(|t| t.exponent.vars(out)),
            Slot::Repeat(slot, count) => {
                slot.vars(out);
                count.vars(out);
            }
        }
    }
}

type RawComponent = Vec<Vec<(u32, Rational)>>;

impl ComponentTemplate {
    fn expand(&self, env: &Env) -> Result<Vec<RawComponent>> {
        match self {
            ComponentTemplate::Slots(slots) => {
                let mut coords = Vec::new();
                for s in slots {
                    s.expand(env, &mut coords)?;
                }
                Ok(vec![coords])
            }
            ComponentTemplate::Axes(n) => {
                let n = n.eval(env)?;
                if n < 1 {
                    return Err(Error::Catalog(format!("axes need n >= 1, got {n}")));
                }
                let n = n as usize;
                Ok((0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { vec![(1, Rational::from_integer(1.into()))] } else { Vec::new() })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ComponentTemplate::Slots(slots) => slots.iter().for_each(|s| s.vars(out)),
            ComponentTemplate::Axes(n) => n.vars(out),
        }
    }
}

// ---------------------------------------------------------------------------
// Data file schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHeader {
    components: Vec<String>,
    #[serde(default)]
    constraints: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEntry {
    id: String,
    #[serde(default)]
    params: Vec<String>,
    header: Option<String>,
    row: Option<String>,
    components: Option<Vec<String>>,
    #[serde(default)]
    constraints: Vec<String>,
    #[serde(default)]
    exclude: Vec<String>,
    #[serde(default)]
    lower: BTreeMap<String, i64>,
    determinacy: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    version: u32,
    #[serde(default)]
    header: BTreeMap<String, FileHeader>,
    entry: Vec<FileEntry>,
}

// ---------------------------------------------------------------------------
// Entries

/// A parameter assignment, kept in the entry's declared parameter order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Params(Vec<(String, i64)>);

impl Params {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, i64)>) -> Params {
        Params(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn pairs(&self) -> &[(String, i64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn env(&self) -> Env {
        self.0.iter().cloned().collect()
    }

    /// Parse `m=1,n=2` (spaces allowed).
    pub fn parse(s: &str) -> Result<Params> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected name=value, got {part:?}")))?;
            let v = v
                .trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer in {part:?}")))?;
            out.push((k.trim().to_string(), v));
        }
        Ok(Params(out))
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// One normal form of the table.
#[derive(Clone, Debug)]
pub struct NormalFormEntry {
    pub id: String,
    pub params: Vec<String>,
    /// Name of the header convention the entry was written against.
    pub header: String,
    /// Component templates after substituting the entry's row into its header.
    pub template: Vec<String>,
    lower: BTreeMap<String, i64>,
    components: Vec<ComponentTemplate>,
    /// Positions of the components that come from the entry's own row.
    row_positions: Vec<usize>,
    constraints: Vec<Condition>,
    exclusions: Vec<Condition>,
    determinacy: Option<DeterminacyRule>,
}

impl NormalFormEntry {
    /// Section label, e.g. `1.2` for `1.2.3` and `3` for `3.1`.
    pub fn section(&self) -> &str {
        self.id.rsplit_once('.').map_or(&self.id, |(s, _)| s)
    }

    /// Top-level part number, e.g. `1` for `1.2.3`.
    pub fn part(&self) -> &str {
        self.id.split('.').next().unwrap_or(&self.id)
    }

    pub fn constraint_texts(&self) -> Vec<&str> {
        self.constraints.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn exclusion_texts(&self) -> Vec<&str> {
        self.exclusions.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn determinacy_text(&self) -> Option<&str> {
        self.determinacy.as_ref().map(|d| d.text.as_str())
    }

    pub fn lower_bound(&self, name: &str) -> i64 {
        self.lower.get(name).copied().unwrap_or(1)
    }

    /// Put `params` in declared order and check every constraint.
    pub fn check(&self, params: &Params) -> Result<Params> {
        let violated = |constraint: String| Error::ConstraintViolated {
            id: self.id.clone(),
            constraint,
        };
        for (k, _) in params.pairs() {
            if !self.params.contains(k) {
                return Err(Error::InvalidArgument(format!(
                    "entry {} has no parameter {k}",
                    self.id
                )));
            }
        }
        let mut ordered = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let v = params.get(p).ok_or_else(|| {
                Error::InvalidArgument(format!("entry {} needs parameter {p}", self.id))
            })?;
            if v < self.lower_bound(p) {
                return Err(violated(format!("{p} >= {}", self.lower_bound(p))));
            }
            ordered.push((p.clone(), v));
        }
        let ordered = Params(ordered);
        let env = ordered.env();
        for c in &self.constraints {
            if !c.holds(&env)? {
                return Err(violated(format!("{} violated", c.text)));
            }
        }
        for c in &self.exclusions {
            if c.holds(&env)? {
                return Err(violated(format!("excluded: {}", c.text)));
            }
        }
        Ok(ordered)
    }

    pub fn admits(&self, params: &Params) -> bool {
        self.check(params).is_ok()
    }

    fn raw_components(&self, env: &Env) -> Result<Vec<(bool, RawComponent)>> {
        let mut out = Vec::new();
        for (pos, c) in self.components.iter().enumerate() {
            let row = self.row_positions.contains(&pos);
            out.extend(c.expand(env)?.into_iter().map(|rc| (row, rc)));
        }
        Ok(out)
    }

    /// Sum of the exponents of the entry's own row, plus the size of any
    /// parameter-dependent block of axes.
    pub fn weight(&self, params: &Params) -> Result<u32> {
        let params = self.check(params)?;
        self.weight_unchecked(&params.env())
    }

    fn weight_unchecked(&self, env: &Env) -> Result<u32> {
        let mut w = 0u32;
        for (pos, c) in self.components.iter().enumerate() {
            let row = self.row_positions.contains(&pos);
            match c {
                ComponentTemplate::Axes(n) => {
                    if row || !n.is_constant() {
                        w += n.eval(env)? as u32;
                    }
                }
                ComponentTemplate::Slots(_) if row => {
                    for rc in c.expand(env)? {
                        w += rc.iter().flatten().map(|(e, _)| *e).sum::<u32>();
                    }
                }
                ComponentTemplate::Slots(_) => {}
            }
        }
        Ok(w)
    }

    pub fn stated_determinacy(&self, params: &Params) -> Result<Option<u32>> {
        let params = self.check(params)?;
        match &self.determinacy {
            Some(d) => d.eval(&params.env()),
            None => Ok(None),
        }
    }

    pub fn instantiate(&self, params: &Params) -> Result<CatalogInstance> {
        let params = self.check(params)?;
        let env = params.env();
        let raw = self.raw_components(&env)?;
        let max_exp = raw
            .iter()
            .flat_map(|(_, c)| c.iter().flatten().map(|(e, _)| *e))
            .max()
            .unwrap_or(1);
        let comps = raw
            .into_iter()
            .map(|(_, coords)| {
                let jets = coords
                    .into_iter()
                    .map(|terms| Jet::from_terms(terms, max_exp))
                    .collect::<Result<Vec<_>>>()?;
                ComponentGerm::new(jets)
            })
            .collect::<Result<Vec<_>>>()?;
        let germ = Multigerm::new(comps)?;
        germ.check_nondegenerate()?;
        Ok(CatalogInstance {
            id: self.id.clone(),
            weight: self.weight_unchecked(&env)?,
            determinacy: match &self.determinacy {
                Some(d) => d.eval(&env)?,
                None => None,
            },
            params,
            max_exponent: max_exp,
            germ,
        })
    }

    /// Admissible assignments in increasing order of parameter sum, then
    /// lexicographically, up to `count` of them.
    pub fn smallest_assignments(&self, count: usize) -> Vec<Params> {
        const MAX_SUM: i64 = 64;
        let mut out = Vec::new();
        if self.params.is_empty() {
            out.push(Params::default());
            out.truncate(count);
            return out;
        }
        let lows: Vec<i64> = self.params.iter().map(|p| self.lower_bound(p)).collect();
        let min_sum: i64 = lows.iter().sum();
        for total in min_sum..=MAX_SUM {
            let mut found = Vec::new();
            compositions(&lows, total, &mut Vec::new(), &mut |vals| {
                let p = Params(self.params.iter().cloned().zip(vals.iter().copied()).collect());
                if self.admits(&p) {
                    found.push(p);
                }
            });
            found.sort();
            for p in found {
                out.push(p);
                if out.len() == count {
                    return out;
                }
            }
        }
        out
    }

    /// All admissible instances of weight at most `weight_bound`, ordered by
    /// weight and then by parameter values.
    pub fn enumerate(&self, weight_bound: u32) -> Vec<CatalogInstance> {
        let top = i64::from(weight_bound) + 2;
        let mut found: Vec<(u32, Vec<i64>, Params)> = Vec::new();
        let mut vals = Vec::new();
        self.box_walk(top, &mut vals, &mut |vals| {
            let p = Params(self.params.iter().cloned().zip(vals.iter().copied()).collect());
            if self.admits(&p) {
                if let Ok(w) = self.weight_unchecked(&p.env()) {
                    if w <= weight_bound {
                        found.push((w, vals.to_vec(), p));
                    }
                }
            }
        });
        found.sort();
        found
            .into_iter()
            .filter_map(|(_, _, p)| self.instantiate(&p).ok())
            .collect()
    }

    /// All admissible instances with `components` branches whose largest
    /// exponent is at most `max_exponent`.
    pub fn instances_within(&self, max_exponent: u32, components: usize) -> Vec<CatalogInstance> {
        let mut found: Vec<Params> = Vec::new();
        let mut vals = Vec::new();
        let top = i64::from(max_exponent).max(components as i64 + 1);
        self.box_walk(top, &mut vals, &mut |vals| {
            let p = Params(self.params.iter().cloned().zip(vals.iter().copied()).collect());
            if !self.admits(&p) {
                return;
            }
            let Ok(raw) = self.raw_components(&p.env()) else {
                return;
            };
            let top = raw
                .iter()
                .flat_map(|(_, c)| c.iter().flatten().map(|(e, _)| *e))
                .max()
                .unwrap_or(1);
            if raw.len() == components && top <= max_exponent {
                found.push(p);
            }
        });
        found.iter().filter_map(|p| self.instantiate(p).ok()).collect()
    }

    fn box_walk(&self, top: i64, vals: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        if vals.len() == self.params.len() {
            f(vals);
            return;
        }
        let lo = self.lower_bound(&self.params[vals.len()]);
        for v in lo..=top {
            vals.push(v);
            self.box_walk(top, vals, f);
            vals.pop();
        }
    }
}

fn compositions(lows: &[i64], total: i64, cur: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
    let i = cur.len();
    if i + 1 == lows.len() {
        if total >= lows[i] {
            cur.push(total);
            f(cur);
            cur.pop();
        }
        return;
    }
    let rest: i64 = lows[i + 1..].iter().sum();
    let mut v = lows[i];
    while v + rest <= total {
        cur.push(v);
        compositions(lows, total - v, cur, f);
        cur.pop();
        v += 1;
    }
}

/// A realized normal form.
#[derive(Clone, Debug)]
pub struct CatalogInstance {
    pub id: String,
    pub params: Params,
    pub germ: Multigerm,
    pub weight: u32,
    /// Stated determinacy degree, when the table gives one.
    pub determinacy: Option<u32>,
    /// Largest exponent in the realized germ.
    pub max_exponent: u32,
}

impl CatalogInstance {
    /// `id` followed by the assignment, e.g. `1.2.3(m=1, n=2)`.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.id.clone()
        } else {
            format!("{}({})", self.id, self.params)
        }
    }

    /// Fingerprint with the germ carried to a truncation where the branch
    /// semigroups of the templates are certified.
    pub fn fingerprint(&self, depth: u32) -> Result<Fingerprint> {
        let t = depth.max(2 * self.max_exponent);
        fingerprint(&self.germ.with_truncation(t), depth)
    }
}

// ---------------------------------------------------------------------------
// The catalog

#[derive(Clone, Debug)]
pub struct Catalog {
    pub version: u32,
    entries: Vec<NormalFormEntry>,
    index: HashMap<String, usize>,
}

fn check_vars(id: &str, what: &str, vars: &BTreeSet<String>, params: &[String]) -> Result<()> {
    match vars.iter().find(|v| !params.contains(v)) {
        Some(v) => Err(Error::Catalog(format!(
            "entry {id}: {what} uses undeclared parameter {v}"
        ))),
        None => Ok(()),
    }
}

impl Catalog {
    /// The table compiled into the crate.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::from_toml_str(BUILTIN).expect("built-in catalog is valid"))
    }

    /// The file at `path`, else the one named by [`CATALOG_ENV`], else the
    /// built-in table.
    pub fn load(path: Option<&Path>) -> Result<Catalog> {
        if let Some(p) = path {
            return Catalog::from_path(p);
        }
        match std::env::var_os(CATALOG_ENV) {
            Some(p) if !p.is_empty() => Catalog::from_path(Path::new(&p)),
            _ => Ok(Catalog::builtin().clone()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Catalog> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Catalog(format!("{}: {e}", path.display())))?;
        Catalog::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Catalog> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        if file.version != 1 {
            return Err(Error::Catalog(format!("unsupported catalog version {}", file.version)));
        }
        let mut entries = Vec::with_capacity(file.entry.len());
        let mut index = HashMap::new();
        for fe in file.entry {
            let entry = Catalog::build_entry(&file.header, fe)?;
            if index.insert(entry.id.clone(), entries.len()).is_some() {
                return Err(Error::Catalog(format!("duplicate entry {}", entry.id)));
            }
            entries.push(entry);
        }
        Ok(Catalog {
            version: file.version,
            entries,
            index,
        })
    }

    fn build_entry(headers: &BTreeMap<String, FileHeader>, fe: FileEntry) -> Result<NormalFormEntry> {
        let id = fe.id;
        if id.is_empty() || !id.split('.').all(|p| p.parse::<u32>().is_ok()) {
            return Err(Error::Catalog(format!("entry id {id:?} is not dotted numeric")));
        }
        let mut seen = BTreeSet::new();
        for p in &fe.params {
            if !PARAM_NAMES.contains(&p.as_str()) || !seen.insert(p) {
                return Err(Error::Catalog(format!("entry {id}: bad or repeated parameter {p:?}")));
            }
        }
        for k in fe.lower.keys() {
            if !fe.params.contains(k) {
                return Err(Error::Catalog(format!("entry {id}: lower bound for unknown {k}")));
            }
        }
        let (header_name, header_sources, header_constraints) = match (&fe.header, &fe.components) {
            (Some(h), None) => {
                let header = headers
                    .get(h)
                    .ok_or_else(|| Error::Catalog(format!("entry {id}: unknown header {h}")))?;
                (h.clone(), header.components.clone(), header.constraints.clone())
            }
            (None, Some(c)) => ("none".to_string(), c.clone(), Vec::new()),
            _ => {
                return Err(Error::Catalog(format!(
                    "entry {id}: give either a header with a row or explicit components"
                )))
            }
        };
        let mut template = Vec::new();
        let mut row_positions = Vec::new();
        for src in &header_sources {
            if src.trim() == "@row" {
                let row = fe
                    .row
                    .as_ref()
                    .ok_or_else(|| Error::Catalog(format!("entry {id}: header needs a row")))?;
                row_positions.push(template.len());
                template.push(row.clone());
            } else {
                template.push(src.clone());
            }
        }
        if fe.components.is_some() {
            if fe.row.is_some() {
                return Err(Error::Catalog(format!("entry {id}: row given with explicit components")));
            }
            row_positions = (0..template.len()).collect();
        } else if row_positions.is_empty() {
            return Err(Error::Catalog(format!("entry {id}: header {header_name} has no @row")));
        }
        let components = template
            .iter()
            .map(|s| parse_component(s))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Catalog(format!("entry {id}: {e}")))?;
        let parse_all = |texts: &[String]| {
            texts
                .iter()
                .map(|c| Condition::parse(c))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Catalog(format!("entry {id}: {e}")))
        };
        let mut constraints = parse_all(&header_constraints)?;
        constraints.extend(parse_all(&fe.constraints)?);
        let exclusions = parse_all(&fe.exclude)?;
        if exclusions.iter().any(|c| c.ops.iter().any(|o| *o != Cmp::Eq)) {
            return Err(Error::Catalog(format!("entry {id}: exclusions must be equalities")));
        }
        let determinacy = fe
            .determinacy
            .as_deref()
            .map(DeterminacyRule::parse)
            .transpose()
            .map_err(|e| Error::Catalog(format!("entry {id}: {e}")))?;

        let mut used = BTreeSet::new();
        components.iter().for_each(|c| c.vars(&mut used));
        check_vars(&id, "template", &used, &fe.params)?;
        let mut cv = BTreeSet::new();
        constraints.iter().chain(&exclusions).for_each(|c| c.vars(&mut cv));
        check_vars(&id, "constraint", &cv, &fe.params)?;
        if let Some(d) = &determinacy {
            let mut dv = BTreeSet::new();
            d.vars(&mut dv);
            check_vars(&id, "determinacy", &dv, &fe.params)?;
        }
        if let Some(p) = fe.params.iter().find(|p| !used.contains(*p)) {
            return Err(Error::Catalog(format!("entry {id}: parameter {p} is unused")));
        }
        Ok(NormalFormEntry {
            id,
            params: fe.params,
            header: header_name,
            template,
            lower: fe.lower,
            components,
            row_positions,
            constraints,
            exclusions,
            determinacy,
        })
    }

    pub fn entries(&self) -> &[NormalFormEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&NormalFormEntry> {
        self.index
            .get(id)
            .map(|i| &self.entries[*i])
            .ok_or_else(|| Error::UnknownEntry(id.to_string()))
    }

    pub fn instantiate(&self, id: &str, params: &Params) -> Result<CatalogInstance> {
        self.get(id)?.instantiate(params)
    }

    pub fn enumerate(&self, id: &str, weight_bound: u32) -> Result<Vec<CatalogInstance>> {
        Ok(self.get(id)?.enumerate(weight_bound))
    }

    /// Every instance of every entry at weight at most `weight_bound`.
    pub fn enumerate_all(&self, weight_bound: u32) -> Vec<CatalogInstance> {
        self.entries.iter().flat_map(|e| e.enumerate(weight_bound)).collect()
    }
}

/// Compare dotted numeric ids componentwise.
pub fn compare_ids(a: &str, b: &str) -> std::cmp::Ordering {
    let parse = |s: &str| s.split('.').map(|p| p.parse::<u32>().unwrap_or(u32::MAX)).collect::<Vec<_>>();
    parse(a).cmp(&parse(b))
}

// ---------------------------------------------------------------------------
// Fingerprints

/// Per-branch invariants read from `S_0` below the truncation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BranchKey {
    pub multiplicity: u32,
    pub pair: InvariantPair,
    pub gaps: Vec<u32>,
    /// Whether the conductor was certified below the truncation.
    pub complete: bool,
}

pub fn branch_key(c: &ComponentGerm) -> Result<BranchKey> {
    let multiplicity = c.multiplicity()?;
    let s = value_semigroup(c, 0, c.truncation())?;
    Ok(BranchKey {
        multiplicity,
        pair: invariant_pair(c)?,
        gaps: s.gaps(),
        complete: s.complete(),
    })
}

/// Invariants of a multigerm in its minimal embedding, sorted so that
/// component order does not matter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fingerprint {
    pub components: usize,
    pub ambient_dim: usize,
    pub branches: Vec<BranchKey>,
    /// Full orbit tangent rank at levels `1..=depth`.
    pub orbit_dims: Vec<usize>,
    /// For each pair of components (when there are at least three), the
    /// embedding dimension and orbit ranks of the pair; sorted.
    pub pairs: Vec<(usize, Vec<usize>)>,
}

impl Fingerprint {
    pub fn depth(&self) -> u32 {
        self.orbit_dims.len() as u32
    }
}

pub fn fingerprint(f: &Multigerm, depth: u32) -> Result<Fingerprint> {
    f.check_nondegenerate()?;
    if depth > f.truncation() {
        return Err(Error::LevelTooHigh {
            level: depth,
            truncation: f.truncation(),
        });
    }
    let (g, _) = f.reduce_embedding();
    let mut branches = g
        .components()
        .iter()
        .map(branch_key)
        .collect::<Result<Vec<_>>>()?;
    branches.sort();
    let mut pairs = Vec::new();
    if g.len() >= 3 {
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let (sub, _) = Multigerm::new(vec![g.component(i).clone(), g.component(j).clone()])?
                    .reduce_embedding();
                pairs.push((sub.ambient_dim(), orbit_dim_sequence(&sub, depth)?));
            }
        }
        pairs.sort();
    }
    Ok(Fingerprint {
        components: g.len(),
        ambient_dim: g.ambient_dim(),
        branches,
        orbit_dims: orbit_dim_sequence(&g, depth)?,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Params {
        Params::parse(s).unwrap()
    }

    #[test]
    fn expressions() {
        let env: Env = [("m".to_string(), 2), ("n".to_string(), 3)].into_iter().collect();
        let e = ExprParser::parse("2m+1").unwrap();
        assert_eq!(e.eval(&env).unwrap(), 5);
        assert_eq!(ExprParser::parse("n-1-m").unwrap().eval(&env).unwrap(), -0);
        assert_eq!(ExprParser::parse("3(m+n) - 2*n").unwrap().eval(&env).unwrap(), 9);
        assert!(Condition::parse("m < n <= 2m").unwrap().holds(&env).unwrap());
        assert!(!Condition::parse("n = m").unwrap().holds(&env).unwrap());
        let d = DeterminacyRule::parse("5 if m >= 3 else 7").unwrap();
        assert_eq!(d.eval(&env).unwrap(), Some(7));
        let d = DeterminacyRule::parse("2n+1 if n = m").unwrap();
        assert_eq!(d.eval(&env).unwrap(), None);
        assert!(ExprParser::parse("2m+").is_err());
    }

    #[test]
    fn builtin_loads() {
        let c = Catalog::builtin();
        assert!(c.len() > 140);
        assert_eq!(c.get("1.3.11").unwrap().exclusion_texts(), vec!["n = l = 2m-1"]);
        assert!(matches!(c.get("9.9"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn instantiation_examples() {
        let c = Catalog::builtin();
        let i = c.instantiate("1.2.3", &p("m=1, n=2")).unwrap();
        assert_eq!(i.germ, Multigerm::parse(&[&["t", "0", "0"], &["t^2", "t^3", "t^4"]], 4).unwrap());
        let i = c.instantiate("3.1", &p("n=3")).unwrap();
        assert_eq!(i.germ, Multigerm::axes(3, 1));
        let err = c.instantiate("1.2.2", &p("m=1, n=3")).unwrap_err();
        assert_eq!(err.to_string(), "constraint violated for 1.2.2: m < n < 2m violated");
        let err = c.instantiate("1.3.11", &p("m=2, n=3, l=3")).unwrap_err();
        assert!(err.to_string().contains("excluded"));
        let i = c.instantiate("4.1.5", &p("n=3, k=1")).unwrap();
        assert_eq!(i.germ.len(), 4);
        assert_eq!(i.germ.component(3).to_string(), "(t^2, t^4, 0, t^3)");
        let i = c.instantiate("5.1", &p("m=1")).unwrap();
        assert_eq!(i.germ.ambient_dim(), 5);
        assert_eq!(i.germ.component(2).to_string(), "(0, 0, t^2, t^3, 0)");
    }

    #[test]
    fn enumeration_and_weights() {
        let c = Catalog::builtin();
        let e = c.enumerate("1.2.1", 9).unwrap();
        let ms: Vec<i64> = e.iter().map(|i| i.params.get("m").unwrap()).collect();
        assert_eq!(ms, vec![1, 2, 3]);
        assert!(c.enumerate("1.2.1", 2).unwrap().is_empty());
        for i in c.enumerate("2.1.1", 9).unwrap() {
            assert!(i.params.get("m").unwrap() <= i.params.get("n").unwrap());
        }
        let d = c.get("4.1.8").unwrap();
        assert_eq!(d.stated_determinacy(&p("n=2, k=0")).unwrap(), Some(7));
        assert_eq!(d.stated_determinacy(&p("n=2, k=1")).unwrap(), Some(5));
    }

    #[test]
    fn smallest_assignments_are_admissible() {
        for e in Catalog::builtin().entries() {
            let a = e.smallest_assignments(3);
            assert_eq!(a.len(), if e.params.is_empty() { 1 } else { 3 }, "{}", e.id);
            for params in a {
                e.instantiate(&params).unwrap();
            }
        }
    }

    #[test]
    fn loader_rejects_bad_files() {
        let bad = [
            "version = 2\nentry = []",
            "version = 1\n[[entry]]\nid = \"1.1\"\ncomponents = [\"t^{q}\"]",
            "version = 1\n[[entry]]\nid = \"1.1\"\nheader = \"nope\"\nrow = \"t\"",
            "version = 1\n[[entry]]\nid = \"1.1\"\ncomponents = [\"t\"]\nfoo = 1",
            "version = 1\n[[entry]]\nid = \"x\"\ncomponents = [\"t\"]",
        ];
        for text in bad {
            assert!(matches!(Catalog::from_toml_str(text), Err(Error::Catalog(_))), "{text}");
        }
    }

    #[test]
    fn fingerprints_separate_simple_cases() {
        let g2 = Multigerm::axes(2, 4);
        let lp = Multigerm::parse(&[&["t", "0"], &["t", "t^2"]], 4).unwrap();
        assert_ne!(fingerprint(&g2, 3).unwrap(), fingerprint(&lp, 3).unwrap());
        let g3 = Multigerm::axes(3, 4);
        let perm = g3.permute_components(&[2, 0, 1]);
        assert_eq!(fingerprint(&g3, 3).unwrap(), fingerprint(&perm, 3).unwrap());
    }
}
