//! Signatures, terms, equations, letter maps and the line-oriented theory format.
//!
//! Variables are written with a leading `?`. A bare symbol that names a
//! declared nullary operation is a constant; any other bare symbol in a ground
//! term is a letter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresentationError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: operation `{op}` expects {expected} argument(s), got {got}")]
    Arity {
        line: usize,
        col: usize,
        op: String,
        expected: usize,
        got: usize,
    },
    #[error("{line}:{col}: undeclared operation `{op}`")]
    Undeclared { line: usize, col: usize, op: String },
    #[error("{line}:{col}: duplicate operation `{op}`")]
    Duplicate { line: usize, col: usize, op: String },
    #[error("unbound variable ?{0}")]
    UnboundVariable(String),
    #[error("letter map: {0}")]
    LetterMap(String),
}

type Result<T> = std::result::Result<T, PresentationError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Letter(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn letter(name: &str) -> Term {
        Term::Letter(name.to_string())
    }

    pub fn constant(op: &str) -> Term {
        Term::App(op.to_string(), Vec::new())
    }

    pub fn app(op: &str, children: Vec<Term>) -> Term {
        Term::App(op.to_string(), children)
    }

    pub fn app2(op: &str, l: Term, r: Term) -> Term {
        Term::App(op.to_string(), vec![l, r])
    }

    pub fn app1(op: &str, t: Term) -> Term {
        Term::App(op.to_string(), vec![t])
    }

    /// Number of operation nodes; leaves have size 0.
    pub fn size(&self) -> usize {
        match self {
            Term::App(_, kids) => 1 + kids.iter().map(Term::size).sum::<usize>(),
            _ => 0,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, kids) => 1 + kids.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn letters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_leaves(&mut |t| {
            if let Term::Letter(a) = t {
                out.insert(a.clone());
            }
        });
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_leaves(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Leaves (letters and variables) in left-to-right order.
    pub fn leaves(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
            match t {
                Term::App(_, kids) => kids.iter().for_each(|k| go(k, out)),
                leaf => out.push(leaf),
            }
        }
        go(self, &mut out);
        out
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Term::App(_, kids) => kids.iter().for_each(|k| k.visit_leaves(f)),
            leaf => f(leaf),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Letter(_) => true,
            Term::App(_, kids) => kids.iter().all(Term::is_ground),
        }
    }

    /// No variable occurs twice.
    pub fn is_linear(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.leaves().into_iter().all(|l| match l {
            Term::Var(v) => seen.insert(v.clone()),
            _ => true,
        })
    }

    /// Replaces every letter `a` by `f(a)`; letters missing from `f` are kept.
    pub fn map_letters(&self, f: &impl Fn(&str) -> Term) -> Term {
        match self {
            Term::Letter(a) => f(a),
            Term::Var(v) => Term::Var(v.clone()),
            Term::App(op, kids) => {
                Term::App(op.clone(), kids.iter().map(|k| k.map_letters(f)).collect())
            }
        }
    }

    /// Subterm at a child-index path.
    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => match self {
                Term::App(_, kids) => kids.get(i)?.at(rest),
                _ => None,
            },
        }
    }

    /// Copy with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(new),
            Some((&i, rest)) => match self {
                Term::App(op, kids) if i < kids.len() => {
                    let mut kids = kids.clone();
                    kids[i] = kids[i].replace_at(rest, new)?;
                    Some(Term::App(op.clone(), kids))
                }
                _ => None,
            },
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Letter(a) => write!(f, "{a}"),
            Term::App(op, kids) if kids.is_empty() => write!(f, "{op}"),
            Term::App(op, kids) => {
                write!(f, "({op}")?;
                for k in kids {
                    write!(f, " {k}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(ops: &[(&str, usize)]) -> Result<Signature> {
        let mut sig = Signature::default();
        for (name, arity) in ops {
            sig.add(name, *arity, 0, 0)?;
        }
        Ok(sig)
    }

    fn add(&mut self, name: &str, arity: usize, line: usize, col: usize) -> Result<()> {
        if self.arity(name).is_some() {
            return Err(PresentationError::Duplicate {
                line,
                col,
                op: name.to_string(),
            });
        }
        self.ops.push((name.to_string(), arity));
        Ok(())
    }

    pub fn ops(&self) -> &[(String, usize)] {
        &self.ops
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.ops.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    pub fn max_arity(&self) -> usize {
        self.ops.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Equation {
        Equation { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub name: String,
    pub signature: Signature,
    pub equations: Vec<Equation>,
}

impl Presentation {
    /// Parses a ground term; bare symbols that are not constants become letters.
    pub fn parse_term(&self, text: &str) -> Result<Term> {
        parse_sexpr_term(text, &self.signature, TermMode::Ground, 1)
    }

    /// Parses a term whose bare symbols must be variables or constants.
    pub fn parse_open_term(&self, text: &str) -> Result<Term> {
        parse_sexpr_term(text, &self.signature, TermMode::Equation, 1)
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_presentation(self))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TermMode {
    Ground,
    Equation,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Sym(String),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<(Tok, usize)>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                toks.push((Tok::Open, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::Close, col));
                i += 1;
            }
            '=' | '#' | ',' => {
                return Err(PresentationError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected `{c}`"),
                })
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | '=' | '#' | ',')
                {
                    i += 1;
                }
                toks.push((Tok::Sym(chars[start..i].iter().collect()), col));
            }
        }
    }
    Ok(toks)
}

fn parse_sexpr_term(text: &str, sig: &Signature, mode: TermMode, line: usize) -> Result<Term> {
    parse_sexpr_term_at(text, sig, mode, line, 0)
}

fn parse_sexpr_term_at(
    text: &str,
    sig: &Signature,
    mode: TermMode,
    line: usize,
    col_offset: usize,
) -> Result<Term> {
    let toks: Vec<(Tok, usize)> = tokenize(text, line)?
        .into_iter()
        .map(|(t, c)| (t, c + col_offset))
        .collect();
    let end_col = text.chars().count() + col_offset + 1;
    let mut pos = 0;
    let t = parse_tok_term(&toks, &mut pos, sig, mode, line, end_col)?;
    if pos < toks.len() {
        return Err(PresentationError::Syntax {
            line,
            col: toks[pos].1,
            msg: "trailing input after term".into(),
        });
    }
    Ok(t)
}

fn parse_tok_term(
    toks: &[(Tok, usize)],
    pos: &mut usize,
    sig: &Signature,
    mode: TermMode,
    line: usize,
    end_col: usize,
) -> Result<Term> {
    let Some((tok, col)) = toks.get(*pos).cloned() else {
        return Err(PresentationError::Syntax {
            line,
            col: end_col,
            msg: "unexpected end of input".into(),
        });
    };
    *pos += 1;
    match tok {
        Tok::Close => Err(PresentationError::Syntax {
            line,
            col,
            msg: "unexpected `)`".into(),
        }),
        Tok::Sym(s) => bare_symbol(&s, sig, mode, line, col),
        Tok::Open => {
            let Some((Tok::Sym(op), op_col)) = toks.get(*pos).cloned() else {
                let col = toks.get(*pos).map(|t| t.1).unwrap_or(end_col);
                return Err(PresentationError::Syntax {
                    line,
                    col,
                    msg: "expected operation name after `(`".into(),
                });
            };
            *pos += 1;
            let Some(arity) = sig.arity(&op) else {
                return Err(PresentationError::Undeclared { line, col: op_col, op });
            };
            let mut kids = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some((Tok::Close, _)) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => kids.push(parse_tok_term(toks, pos, sig, mode, line, end_col)?),
                    None => {
                        return Err(PresentationError::Syntax {
                            line,
                            col: end_col,
                            msg: "missing `)`".into(),
                        })
                    }
                }
            }
            if kids.len() != arity {
                return Err(PresentationError::Arity {
                    line,
                    col: op_col,
                    op,
                    expected: arity,
                    got: kids.len(),
                });
            }
            Ok(Term::App(op, kids))
        }
    }
}

fn bare_symbol(s: &str, sig: &Signature, mode: TermMode, line: usize, col: usize) -> Result<Term> {
    if let Some(v) = s.strip_prefix('?') {
        if v.is_empty() {
            return Err(PresentationError::Syntax {
                line,
                col,
                msg: "empty variable name".into(),
            });
        }
        return Ok(Term::Var(v.to_string()));
    }
    match sig.arity(s) {
        Some(0) => Ok(Term::constant(s)),
        Some(k) => Err(PresentationError::Arity {
            line,
            col,
            op: s.to_string(),
            expected: k,
            got: 0,
        }),
        None if mode == TermMode::Ground => Ok(Term::letter(s)),
        None => Err(PresentationError::Undeclared {
            line,
            col,
            op: s.to_string(),
        }),
    }
}

/// Parses the theory format: optional `name:`, one or more `ops:` lines and
/// any number of `eq: <term> = <term>` lines. `#` starts a comment.
pub fn parse_presentation(text: &str) -> Result<Presentation> {
    let mut name = None;
    let mut sig = Signature::default();
    let mut eq_lines = Vec::new();
    let mut saw_ops = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let body = content.trim_start();
        let Some(colon) = body.find(':') else {
            return Err(PresentationError::Syntax {
                line,
                col: indent + 1,
                msg: "expected `name:`, `ops:` or `eq:`".into(),
            });
        };
        let key = body[..colon].trim();
        let rest = &body[colon + 1..];
        let rest_col = indent + colon + 2;
        match key {
            "name" => {
                let n = rest.trim();
                if n.is_empty() || n.contains(char::is_whitespace) {
                    return Err(PresentationError::Syntax {
                        line,
                        col: rest_col,
                        msg: "name must be a single identifier".into(),
                    });
                }
                name = Some(n.to_string());
            }
            "ops" => {
                saw_ops = true;
                let mut offset = 0;
                for part in rest.split(',') {
                    let col = rest_col + offset + (part.len() - part.trim_start().len());
                    offset += part.len() + 1;
                    let part = part.trim();
                    if part.is_empty() {
                        if rest.trim().is_empty() {
                            continue;
                        }
                        return Err(PresentationError::Syntax {
                            line,
                            col,
                            msg: "empty operation declaration".into(),
                        });
                    }
                    let Some((op, arity)) = part.split_once('/') else {
                        return Err(PresentationError::Syntax {
                            line,
                            col,
                            msg: format!("expected name/arity, got `{part}`"),
                        });
                    };
                    let op = op.trim();
                    let valid = !op.is_empty()
                        && !op.starts_with('?')
                        && !op.contains(|c: char| c.is_whitespace() || "()=#,".contains(c));
                    let arity: usize = match arity.trim().parse() {
                        Ok(a) if valid => a,
                        _ => {
                            return Err(PresentationError::Syntax {
                                line,
                                col,
                                msg: format!("bad operation declaration `{part}`"),
                            })
                        }
                    };
                    sig.add(op, arity, line, col)?;
                }
            }
            "eq" => eq_lines.push((line, rest.to_string(), rest_col)),
            other => {
                return Err(PresentationError::Syntax {
                    line,
                    col: indent + 1,
                    msg: format!("unknown directive `{other}`"),
                })
            }
        }
    }
    if !saw_ops {
        return Err(PresentationError::Syntax {
            line: 1,
            col: 1,
            msg: "missing `ops:` line".into(),
        });
    }
    let mut equations = Vec::new();
    for (line, rest, col) in eq_lines {
        let parts: Vec<&str> = rest.split('=').collect();
        if parts.len() != 2 {
            return Err(PresentationError::Syntax {
                line,
                col,
                msg: "equation needs exactly one `=`".into(),
            });
        }
        let lhs = parse_sexpr_term_at(parts[0], &sig, TermMode::Equation, line, col - 1)?;
        let rhs_off = col + parts[0].chars().count();
        let rhs = parse_sexpr_term_at(parts[1], &sig, TermMode::Equation, line, rhs_off)?;
        equations.push(Equation { lhs, rhs });
    }
    Ok(Presentation {
        name: name.unwrap_or_else(|| "anonymous".to_string()),
        signature: sig,
        equations,
    })
}

pub fn print_presentation(p: &Presentation) -> String {
    let mut out = format!("name: {}\nops:", p.name);
    let decls: Vec<String> = p
        .signature
        .ops()
        .iter()
        .map(|(n, a)| format!("{n}/{a}"))
        .collect();
    if !decls.is_empty() {
        out.push(' ');
        out.push_str(&decls.join(", "));
    }
    out.push('\n');
    for e in &p.equations {
        out.push_str(&format!("eq: {e}\n"));
    }
    out
}

pub fn apply_substitution(t: &Term, binding: &BTreeMap<String, Term>) -> Result<Term> {
    match t {
        Term::Var(v) => binding
            .get(v)
            .cloned()
            .ok_or_else(|| PresentationError::UnboundVariable(v.clone())),
        Term::Letter(a) => Ok(Term::Letter(a.clone())),
        Term::App(op, kids) => Ok(Term::App(
            op.clone(),
            kids.iter()
                .map(|k| apply_substitution(k, binding))
                .collect::<Result<_>>()?,
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquationClass {
    pub regular: bool,
    pub linear: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub equations: Vec<EquationClass>,
    pub all_regular_linear: bool,
}

pub fn classify_equation(e: &Equation) -> EquationClass {
    EquationClass {
        regular: e.lhs.vars() == e.rhs.vars(),
        linear: e.lhs.is_linear() && e.rhs.is_linear(),
    }
}

pub fn classify_equations(p: &Presentation) -> Classification {
    let equations: Vec<EquationClass> = p.equations.iter().map(classify_equation).collect();
    let all_regular_linear = equations.iter().all(|c| c.regular && c.linear);
    Classification {
        equations,
        all_regular_linear,
    }
}

/// A total function between finite alphabets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetterMap {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub map: BTreeMap<String, String>,
    pub surjective: bool,
}

impl LetterMap {
    pub fn new(source: &[&str], target: &[&str], pairs: &[(&str, &str)]) -> Result<LetterMap> {
        let map = pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        LetterMap::from_parts(
            source.iter().map(|s| s.to_string()).collect(),
            target.iter().map(|s| s.to_string()).collect(),
            map,
        )
    }

    pub fn from_parts(
        source: Vec<String>,
        target: Vec<String>,
        map: BTreeMap<String, String>,
    ) -> Result<LetterMap> {
        for a in &source {
            match map.get(a) {
                None => return Err(PresentationError::LetterMap(format!("`{a}` is unmapped"))),
                Some(b) if !target.contains(b) => {
                    return Err(PresentationError::LetterMap(format!(
                        "`{a}` maps to `{b}` outside the target alphabet"
                    )))
                }
                _ => {}
            }
        }
        if let Some(extra) = map.keys().find(|k| !source.contains(k)) {
            return Err(PresentationError::LetterMap(format!(
                "`{extra}` is not in the source alphabet"
            )));
        }
        let image: BTreeSet<&String> = map.values().collect();
        let surjective = target.iter().all(|b| image.contains(b));
        Ok(LetterMap {
            source,
            target,
            map,
            surjective,
        })
    }

    pub fn identity(alphabet: &[String]) -> LetterMap {
        let map = alphabet.iter().map(|a| (a.clone(), a.clone())).collect();
        LetterMap {
            source: alphabet.to_vec(),
            target: alphabet.to_vec(),
            map,
            surjective: true,
        }
    }

    /// Parses `a->c,b->c`; the source is the set of keys and the target is
    /// `target` when given, else the image.
    pub fn parse(text: &str, target: Option<&[String]>) -> Result<LetterMap> {
        let mut map = BTreeMap::new();
        let mut source = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let Some((a, b)) = part.split_once("->") else {
                return Err(PresentationError::LetterMap(format!(
                    "expected `a->b`, got `{part}`"
                )));
            };
            let (a, b) = (a.trim().to_string(), b.trim().to_string());
            if a.is_empty() || b.is_empty() {
                return Err(PresentationError::LetterMap(format!("empty letter in `{part}`")));
            }
            if map.insert(a.clone(), b).is_some() {
                return Err(PresentationError::LetterMap(format!("`{a}` mapped twice")));
            }
            source.push(a);
        }
        source.sort();
        let target = match target {
            Some(t) => t.to_vec(),
            None => {
                let img: BTreeSet<String> = map.values().cloned().collect();
                img.into_iter().collect()
            }
        };
        LetterMap::from_parts(source, target, map)
    }

    pub fn apply(&self, a: &str) -> Option<&str> {
        self.map.get(a).map(String::as_str)
    }

    pub fn preimage(&self, b: &str) -> Vec<&str> {
        self.source
            .iter()
            .filter(|a| self.map.get(*a).map(String::as_str) == Some(b))
            .map(String::as_str)
            .collect()
    }
}

impl fmt::Display for LetterMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semigroup() -> Presentation {
        parse_presentation("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))").unwrap()
    }

    #[test]
    fn parses_semigroup() {
        let p = semigroup();
        assert_eq!(p.signature.ops().len(), 1);
        assert_eq!(p.equations.len(), 1);
    }

    #[test]
    fn parses_empty_theory() {
        let p = parse_presentation("ops:").unwrap();
        assert!(p.signature.ops().is_empty());
        assert!(p.equations.is_empty());
    }

    #[test]
    fn parses_not_quite_malcev() {
        let p = parse_presentation(
            "ops: p/3, s/1\neq: (p ?x ?x ?y) = (s ?y)\neq: (p ?y ?x ?x) = (s ?y)",
        )
        .unwrap();
        assert_eq!(p.signature.arity("p"), Some(3));
        assert_eq!(p.equations.len(), 2);
    }

    #[test]
    fn reports_errors_with_position() {
        let e = parse_presentation("ops: dot/2\neq: (dot ?x) = ?x").unwrap_err();
        assert!(matches!(e, PresentationError::Arity { line: 2, got: 1, .. }), "{e}");
        let e = parse_presentation("ops: dot/2\neq: (mul ?x ?y) = ?x").unwrap_err();
        assert!(matches!(e, PresentationError::Undeclared { line: 2, col: 6, .. }), "{e}");
        let e = parse_presentation("ops: dot/2, dot/1").unwrap_err();
        assert!(matches!(e, PresentationError::Duplicate { line: 1, .. }), "{e}");
        let e = parse_presentation("ops: dot/2\neq: (dot ?x ?y = ?x").unwrap_err();
        assert!(matches!(e, PresentationError::Syntax { line: 2, .. }), "{e}");
        let e = parse_presentation("ops: dot/2\neq: (dot ?x a) = ?x").unwrap_err();
        assert!(matches!(e, PresentationError::Undeclared { .. }), "{e}");
    }

    #[test]
    fn comments_and_constants() {
        let p = parse_presentation(
            "# monoid\nname: monoid\nops: dot/2\nops: e/0 # unit\neq: (dot e ?x) = ?x\neq: (dot ?x (e)) = ?x",
        )
        .unwrap();
        assert_eq!(p.name, "monoid");
        assert_eq!(p.equations[0].lhs, Term::app2("dot", Term::constant("e"), Term::var("x")));
        assert_eq!(p.equations[1].lhs, Term::app2("dot", Term::var("x"), Term::constant("e")));
    }

    #[test]
    fn ground_terms_have_letters() {
        let p = semigroup();
        let t = p.parse_term("(dot a (dot b c))").unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(t.letters().len(), 3);
        assert_eq!(t.to_string(), "(dot a (dot b c))");
    }

    #[test]
    fn substitution_examples() {
        let x = Term::var("x");
        let b: BTreeMap<String, Term> = [("x".to_string(), Term::letter("a"))].into();
        assert_eq!(
            apply_substitution(&Term::app2("dot", x.clone(), x.clone()), &b).unwrap(),
            Term::app2("dot", Term::letter("a"), Term::letter("a"))
        );
        let ab = Term::app2("dot", Term::letter("a"), Term::letter("b"));
        let b2: BTreeMap<String, Term> = [("x".to_string(), ab.clone())].into();
        assert_eq!(apply_substitution(&x, &b2).unwrap(), ab);
        let p3 = Term::app("p", vec![x.clone(), x.clone(), Term::var("y")]);
        let b3: BTreeMap<String, Term> = [
            ("x".to_string(), Term::letter("a")),
            ("y".to_string(), Term::letter("b")),
        ]
        .into();
        assert_eq!(
            apply_substitution(&p3, &b3).unwrap().to_string(),
            "(p a a b)"
        );
        assert_eq!(
            apply_substitution(&Term::var("z"), &b3),
            Err(PresentationError::UnboundVariable("z".into()))
        );
    }

    #[test]
    fn classification_examples() {
        let monoid = parse_presentation(
            "ops: dot/2, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x",
        )
        .unwrap();
        assert!(classify_equations(&monoid).all_regular_linear);
        let idem = parse_presentation("ops: dot/2\neq: (dot ?x ?x) = ?x").unwrap();
        let c = classify_equations(&idem);
        assert_eq!(c.equations[0], EquationClass { regular: true, linear: false });
        assert!(!c.all_regular_linear);
        let group = parse_presentation("ops: dot/2, inv/1, e/0\neq: (dot ?x (inv ?x)) = e").unwrap();
        assert!(!classify_equations(&group).equations[0].regular);
    }

    #[test]
    fn letter_maps() {
        let f = LetterMap::parse("a->c,b->c", None).unwrap();
        assert!(f.surjective);
        assert_eq!(f.preimage("c"), vec!["a", "b"]);
        let g = LetterMap::parse("a->c", Some(&["c".to_string(), "d".to_string()])).unwrap();
        assert!(!g.surjective);
        assert!(LetterMap::parse("a->c,a->d", None).is_err());
        assert!(LetterMap::new(&["a", "b"], &["c"], &[("a", "c")]).is_err());
    }
}
