//! Finite algebras as operation tables: evaluation, satisfaction, products,
//! congruences, quotients, subalgebras and exhaustive model search.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::presentation::{Equation, Presentation, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("letter `{0}` has no assigned value")]
    UnassignedLetter(String),
    #[error("operation `{0}` is not in the algebra")]
    UnknownOperation(String),
    #[error("term {0} contains a variable")]
    NotGround(String),
    #[error("algebra fails equation {0}")]
    FailsEquations(Box<Violation>),
    #[error("algebras have different presentations")]
    PresentationMismatch,
    #[error("element {0} is out of range")]
    OutOfRange(u32),
    #[error("table for `{op}` has {got} entries, expected {expected}")]
    TableSize { op: String, expected: usize, got: usize },
    #[error("congruence is not compatible with `{0}`")]
    NotCompatible(String),
    #[error("search space budget of {0} nodes exceeded")]
    Budget(u64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

type Result<T> = std::result::Result<T, AlgebraError>;

/// A failed equation instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub equation: usize,
    pub text: String,
    pub assignment: BTreeMap<String, u32>,
    pub lhs: u32,
    pub rhs: u32,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .map(|(v, a)| format!("?{v}={a}"))
            .collect();
        write!(
            f,
            "{} at {} ({} vs {})",
            self.text,
            parts.join(" "),
            self.lhs,
            self.rhs
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpTable {
    pub name: String,
    pub arity: usize,
    /// Row-major: the first argument is the most significant digit.
    pub table: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    pub presentation: Presentation,
    pub size: usize,
    pub ops: Vec<OpTable>,
    pub names: Option<Vec<String>>,
}

/// A term compiled to postfix code over letter slots and operation indices.
/// A single changed cell: `op(args) := value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub op: String,
    pub args: Vec<u32>,
    pub value: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub mutations: usize,
    /// Mutations under which the algebra still satisfies every equation.
    pub survivors: Vec<Mutation>,
}

#[derive(Clone, Debug)]
pub struct CompiledTerm {
    code: Vec<Instr>,
}

#[derive(Clone, Copy, Debug)]
enum Instr {
    Slot(usize),
    Op(usize, usize),
}

/// Compiles `t` against the signature order of `p`; leaves must be listed
/// in `slots`.
pub fn compile_term(p: &Presentation, t: &Term, slots: &[Term]) -> Result<CompiledTerm> {
    fn go(p: &Presentation, t: &Term, slots: &[Term], code: &mut Vec<Instr>) -> Result<()> {
        match t {
            Term::App(op, kids) => {
                for k in kids {
                    go(p, k, slots, code)?;
                }
                let i = p
                    .signature
                    .ops()
                    .iter()
                    .position(|(n, _)| n == op)
                    .ok_or_else(|| AlgebraError::UnknownOperation(op.clone()))?;
                code.push(Instr::Op(i, kids.len()));
            }
            leaf => {
                let s = slots.iter().position(|x| x == leaf).ok_or_else(|| match leaf {
                    Term::Letter(a) => AlgebraError::UnassignedLetter(a.clone()),
                    other => AlgebraError::NotGround(other.to_string()),
                })?;
                code.push(Instr::Slot(s));
            }
        }
        Ok(())
    }
    let mut code = Vec::new();
    go(p, t, slots, &mut code)?;
    Ok(CompiledTerm { code })
}

impl CompiledTerm {
    /// Evaluates over a carrier of size `n`; `cell(op, index)` reads the
    /// row-major table entry of an operation.
    #[inline]
    pub fn eval(&self, n: usize, cell: impl Fn(usize, usize) -> u32, values: &[u32]) -> u32 {
        let mut stack = [0u32; 64];
        let mut heap: Vec<u32>;
        let st: &mut [u32] = if self.code.len() <= 64 {
            &mut stack
        } else {
            heap = vec![0; self.code.len()];
            &mut heap
        };
        let mut top = 0usize;
        for ins in &self.code {
            match *ins {
                Instr::Slot(s) => {
                    st[top] = values[s];
                    top += 1;
                }
                Instr::Op(op, arity) => {
                    let base = top - arity;
                    let idx = st[base..top]
                        .iter()
                        .fold(0usize, |acc, &a| acc * n + a as usize);
                    st[base] = cell(op, idx);
                    top = base + 1;
                }
            }
        }
        st[0]
    }

    /// Evaluates against concatenated tables as produced by the model search;
    /// `base[op]` is the offset of each operation's table.
    #[inline]
    pub fn eval_raw(&self, n: usize, base: &[usize], tables: &[u32], values: &[u32]) -> u32 {
        self.eval(n, |op, idx| tables[base[op] + idx], values)
    }
}

/// Offsets of each operation table inside a concatenated table vector.
pub fn table_offsets(p: &Presentation, n: usize) -> Vec<usize> {
    let mut base = Vec::new();
    let mut acc = 0;
    for (_, arity) in p.signature.ops() {
        base.push(acc);
        acc += n.pow(*arity as u32);
    }
    base
}

impl FiniteAlgebra {
    /// Builds an algebra, checking that tables are total and in range.
    pub fn new(
        presentation: Presentation,
        size: usize,
        ops: Vec<OpTable>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        for (name, arity) in presentation.signature.ops() {
            let t = ops
                .iter()
                .find(|t| &t.name == name)
                .ok_or_else(|| AlgebraError::UnknownOperation(name.clone()))?;
            let expected = size.pow(*arity as u32);
            if t.arity != *arity || t.table.len() != expected {
                return Err(AlgebraError::TableSize {
                    op: name.clone(),
                    expected,
                    got: t.table.len(),
                });
            }
            if let Some(&bad) = t.table.iter().find(|&&v| v as usize >= size) {
                return Err(AlgebraError::OutOfRange(bad));
            }
        }
        if ops.len() != presentation.signature.ops().len() {
            return Err(AlgebraError::PresentationMismatch);
        }
        let mut ordered = Vec::new();
        for (name, _) in presentation.signature.ops() {
            ordered.push(ops.iter().find(|t| &t.name == name).unwrap().clone());
        }
        Ok(FiniteAlgebra::from_parts(presentation, size, ordered, names))
    }

    /// Unchecked constructor; operations must follow signature order.
    pub fn from_parts(
        presentation: Presentation,
        size: usize,
        ops: Vec<OpTable>,
        names: Option<Vec<String>>,
    ) -> Self {
        FiniteAlgebra {
            presentation,
            size,
            ops,
            names,
        }
    }

    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|t| t.name == name)
    }

    pub fn apply(&self, op: usize, args: &[u32]) -> u32 {
        let n = self.size;
        let idx = args.iter().fold(0usize, |acc, &a| acc * n + a as usize);
        self.ops[op].table[idx]
    }

    pub fn apply_named(&self, op: &str, args: &[u32]) -> Result<u32> {
        let i = self
            .op_index(op)
            .ok_or_else(|| AlgebraError::UnknownOperation(op.to_string()))?;
        Ok(self.apply(i, args))
    }

    pub fn name(&self, a: u32) -> String {
        match &self.names {
            Some(names) => names[a as usize].clone(),
            None => a.to_string(),
        }
    }

    pub fn element(&self, name: &str) -> Option<u32> {
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == name) {
                return Some(i as u32);
            }
        }
        name.parse::<u32>().ok().filter(|&v| (v as usize) < self.size)
    }

    /// Evaluates a term; letters and variables are looked up in `assign`.
    pub fn eval_with(&self, t: &Term, assign: &dyn Fn(&Term) -> Option<u32>) -> Result<u32> {
        match t {
            Term::App(op, kids) => {
                let i = self
                    .op_index(op)
                    .ok_or_else(|| AlgebraError::UnknownOperation(op.clone()))?;
                let mut args = Vec::with_capacity(kids.len());
                for k in kids {
                    args.push(self.eval_with(k, assign)?);
                }
                Ok(self.apply(i, &args))
            }
            leaf => assign(leaf).ok_or_else(|| match leaf {
                Term::Letter(a) => AlgebraError::UnassignedLetter(a.clone()),
                other => AlgebraError::NotGround(other.to_string()),
            }),
        }
    }

    /// Evaluates a ground term under a letter assignment.
    pub fn eval(&self, t: &Term, h0: &BTreeMap<String, u32>) -> Result<u32> {
        self.eval_with(t, &|leaf| match leaf {
            Term::Letter(a) => h0.get(a).copied(),
            _ => None,
        })
    }

    /// Compiles a term whose leaves are listed in `slots` (letters or variables).
    pub fn compile(&self, t: &Term, slots: &[Term]) -> Result<CompiledTerm> {
        compile_term(&self.presentation, t, slots)
    }

    pub fn eval_compiled(&self, ct: &CompiledTerm, values: &[u32]) -> u32 {
        ct.eval(self.size, |op, idx| self.ops[op].table[idx], values)
    }

    /// Exhaustive satisfaction check; the first failing instance on failure.
    pub fn check_satisfies(&self) -> std::result::Result<(), Violation> {
        for (i, eq) in self.presentation.equations.iter().enumerate() {
            if let Some(v) = self.equation_violation(i, eq) {
                return Err(v);
            }
        }
        Ok(())
    }

    pub fn satisfies(&self) -> bool {
        self.check_satisfies().is_ok()
    }

    fn equation_violation(&self, i: usize, eq: &Equation) -> Option<Violation> {
        let vars: Vec<String> = eq.vars().into_iter().collect();
        let slots: Vec<Term> = vars.iter().map(|v| Term::Var(v.clone())).collect();
        let l = self.compile(&eq.lhs, &slots).ok()?;
        let r = self.compile(&eq.rhs, &slots).ok()?;
        let n = self.size;
        let total = n.pow(vars.len() as u32);
        let mut vals = vec![0u32; vars.len()];
        for code in 0..total {
            let mut c = code;
            for slot in vals.iter_mut().rev() {
                *slot = (c % n) as u32;
                c /= n;
            }
            let (a, b) = (self.eval_compiled(&l, &vals), self.eval_compiled(&r, &vals));
            if a != b {
                return Some(Violation {
                    equation: i,
                    text: eq.to_string(),
                    assignment: vars.iter().cloned().zip(vals.iter().copied()).collect(),
                    lhs: a,
                    rhs: b,
                });
            }
        }
        None
    }

    /// Changes every table cell to every other value and records the
    /// changes after which all equations still hold.
    pub fn mutation_sweep(&self) -> MutationReport {
        let mut report = MutationReport::default();
        let mut m = self.clone();
        for (oi, op) in self.ops.iter().enumerate() {
            for cell in 0..op.table.len() {
                let orig = op.table[cell];
                for v in (0..self.size as u32).filter(|&v| v != orig) {
                    m.ops[oi].table[cell] = v;
                    report.mutations += 1;
                    if m.satisfies() {
                        let mut args = vec![0u32; op.arity];
                        let mut c = cell;
                        for slot in args.iter_mut().rev() {
                            *slot = (c % self.size) as u32;
                            c /= self.size;
                        }
                        report.survivors.push(Mutation {
                            op: op.name.clone(),
                            args,
                            value: v,
                        });
                    }
                }
                m.ops[oi].table[cell] = orig;
            }
        }
        report
    }

    /// The subalgebra generated by `gens`, renumbered in discovery order
    /// (generators first), and the embedding into `self`.
    pub fn subalgebra(&self, gens: &[u32]) -> (FiniteAlgebra, Vec<u32>) {
        let mut elems: Vec<u32> = Vec::new();
        let mut index = vec![u32::MAX; self.size];
        let add = |x: u32, elems: &mut Vec<u32>, index: &mut Vec<u32>| {
            if index[x as usize] == u32::MAX {
                index[x as usize] = elems.len() as u32;
                elems.push(x);
            }
        };
        for &g in gens {
            add(g, &mut elems, &mut index);
        }
        for (op, t) in self.ops.iter().enumerate() {
            if t.arity == 0 {
                add(self.apply(op, &[]), &mut elems, &mut index);
            }
        }
        loop {
            let before = elems.len();
            for (op, t) in self.ops.iter().enumerate() {
                if t.arity == 0 {
                    continue;
                }
                let k = elems.len();
                let mut args = vec![0u32; t.arity];
                for code in 0..k.pow(t.arity as u32) {
                    let mut c = code;
                    for a in args.iter_mut().rev() {
                        *a = elems[c % k];
                        c /= k;
                    }
                    add(self.apply(op, &args), &mut elems, &mut index);
                }
            }
            if elems.len() == before {
                break;
            }
        }
        let m = elems.len();
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(op, t)| {
                let mut table = Vec::with_capacity(m.pow(t.arity as u32));
                let mut args = vec![0u32; t.arity];
                for code in 0..m.pow(t.arity as u32) {
                    let mut c = code;
                    for a in args.iter_mut().rev() {
                        *a = elems[c % m];
                        c /= m;
                    }
                    table.push(index[self.apply(op, &args) as usize]);
                }
                OpTable {
                    name: t.name.clone(),
                    arity: t.arity,
                    table,
                }
            })
            .collect();
        let names = self
            .names
            .as_ref()
            .map(|ns| elems.iter().map(|&e| ns[e as usize].clone()).collect());
        (
            FiniteAlgebra::from_parts(self.presentation.clone(), m, ops, names),
            elems,
        )
    }

    /// Renders the algebra file format.
    pub fn to_file_format(&self) -> String {
        let mut out = format!("theory: {}\ncarrier: {}", self.presentation.name, self.size);
        if let Some(names) = &self.names {
            for n in names {
                out.push(' ');
                out.push_str(n);
            }
        }
        out.push('\n');
        for t in &self.ops {
            let cells: Vec<String> = t.table.iter().map(|&v| self.name(v)).collect();
            out.push_str(&format!("op {}: {}\n", t.name, cells.join(" ")));
        }
        out
    }
}

/// A homomorphism out of a free algebra, given by a letter assignment into a
/// finite algebra that satisfies its presentation.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    pub algebra: FiniteAlgebra,
    pub assignment: BTreeMap<String, u32>,
}

impl Homomorphism {
    pub fn eval_term(&self, t: &Term) -> Result<u32> {
        self.algebra.eval(t, &self.assignment)
    }
}

/// The unique homomorphic extension of `h0`.
pub fn extend_hom(a: &FiniteAlgebra, h0: &BTreeMap<String, u32>) -> Result<Homomorphism> {
    a.check_satisfies()
        .map_err(|v| AlgebraError::FailsEquations(Box::new(v)))?;
    if let Some((_, &bad)) = h0.iter().find(|(_, &v)| v as usize >= a.size) {
        return Err(AlgebraError::OutOfRange(bad));
    }
    Ok(Homomorphism {
        algebra: a.clone(),
        assignment: h0.clone(),
    })
}

/// Componentwise product; element `(x, y)` is `x * |B| + y`.
pub fn product(a: &FiniteAlgebra, b: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    if a.presentation != b.presentation {
        return Err(AlgebraError::PresentationMismatch);
    }
    let (n, m) = (a.size, b.size);
    let size = n * m;
    let ops = a
        .ops
        .iter()
        .enumerate()
        .map(|(op, t)| {
            let k = t.arity;
            let mut table = Vec::with_capacity(size.pow(k as u32));
            let (mut xs, mut ys) = (vec![0u32; k], vec![0u32; k]);
            for code in 0..size.pow(k as u32) {
                let mut c = code;
                for i in (0..k).rev() {
                    let e = c % size;
                    c /= size;
                    xs[i] = (e / m) as u32;
                    ys[i] = (e % m) as u32;
                }
                table.push(a.apply(op, &xs) * m as u32 + b.apply(op, &ys));
            }
            OpTable {
                name: t.name.clone(),
                arity: k,
                table,
            }
        })
        .collect();
    let names = match (&a.names, &b.names) {
        (None, None) => None,
        _ => Some(
            (0..size as u32)
                .map(|e| format!("({},{})", a.name(e / m as u32), b.name(e % m as u32)))
                .collect(),
        ),
    };
    Ok(FiniteAlgebra::from_parts(a.presentation.clone(), size, ops, names))
}

/// A partition of the carrier; `class[x]` is the least element of x's block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Congruence {
    pub class: Vec<u32>,
}

impl Congruence {
    pub fn discrete(n: usize) -> Congruence {
        Congruence {
            class: (0..n as u32).collect(),
        }
    }

    pub fn related(&self, x: u32, y: u32) -> bool {
        self.class[x as usize] == self.class[y as usize]
    }

    pub fn blocks(&self) -> Vec<Vec<u32>> {
        let mut blocks: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (x, &c) in self.class.iter().enumerate() {
            blocks.entry(c).or_default().push(x as u32);
        }
        blocks.into_values().collect()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks().len()
    }

    /// Checks compatibility with every operation by full enumeration over
    /// tuples that differ in one coordinate.
    pub fn is_compatible(&self, a: &FiniteAlgebra) -> std::result::Result<(), String> {
        let n = a.size;
        for (op, t) in a.ops.iter().enumerate() {
            let k = t.arity;
            let mut args = vec![0u32; k];
            for code in 0..n.pow(k as u32) {
                let mut c = code;
                for x in args.iter_mut().rev() {
                    *x = (c % n) as u32;
                    c /= n;
                }
                let base = a.apply(op, &args);
                for i in 0..k {
                    let orig = args[i];
                    for y in 0..n as u32 {
                        if y != orig && self.related(orig, y) {
                            args[i] = y;
                            if !self.related(base, a.apply(op, &args)) {
                                return Err(t.name.clone());
                            }
                        }
                    }
                    args[i] = orig;
                }
            }
        }
        Ok(())
    }
}

fn uf_find(p: &mut [u32], mut x: u32) -> u32 {
    while p[x as usize] != x {
        p[x as usize] = p[p[x as usize] as usize];
        x = p[x as usize];
    }
    x
}

/// The least congruence containing `pairs`.
pub fn generate_congruence(a: &FiniteAlgebra, pairs: &[(u32, u32)]) -> Result<Congruence> {
    let n = a.size;
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut work: Vec<(u32, u32)> = Vec::new();
    for &(x, y) in pairs {
        for v in [x, y] {
            if v as usize >= n {
                return Err(AlgebraError::OutOfRange(v));
            }
        }
        work.push((x, y));
    }
    while let Some((x, y)) = work.pop() {
        let (rx, ry) = (uf_find(&mut parent, x), uf_find(&mut parent, y));
        if rx == ry {
            continue;
        }
        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
        parent[hi as usize] = lo;
        // Compatibility: substituting x by y in any single argument position.
        for (op, t) in a.ops.iter().enumerate() {
            let k = t.arity;
            if k == 0 {
                continue;
            }
            let mut args = vec![0u32; k];
            for i in 0..k {
                for code in 0..n.pow(k as u32 - 1) {
                    let mut c = code;
                    for j in (0..k).rev() {
                        if j == i {
                            continue;
                        }
                        args[j] = (c % n) as u32;
                        c /= n;
                    }
                    args[i] = x;
                    let u = a.apply(op, &args);
                    args[i] = y;
                    let v = a.apply(op, &args);
                    if u != v {
                        work.push((u, v));
                    }
                }
            }
        }
    }
    let class = (0..n as u32).map(|x| uf_find(&mut parent, x)).collect();
    Ok(Congruence { class })
}

/// The quotient algebra, with blocks numbered by least element, and the
/// projection.
pub fn quotient(a: &FiniteAlgebra, theta: &Congruence) -> Result<(FiniteAlgebra, Vec<u32>)> {
    theta.is_compatible(a).map_err(AlgebraError::NotCompatible)?;
    let blocks = theta.blocks();
    let mut proj = vec![0u32; a.size];
    for (i, b) in blocks.iter().enumerate() {
        for &x in b {
            proj[x as usize] = i as u32;
        }
    }
    let m = blocks.len();
    let ops = a
        .ops
        .iter()
        .enumerate()
        .map(|(op, t)| {
            let k = t.arity;
            let mut args = vec![0u32; k];
            let mut table = Vec::with_capacity(m.pow(k as u32));
            for code in 0..m.pow(k as u32) {
                let mut c = code;
                for x in args.iter_mut().rev() {
                    *x = blocks[c % m][0];
                    c /= m;
                }
                table.push(proj[a.apply(op, &args) as usize]);
            }
            OpTable {
                name: t.name.clone(),
                arity: k,
                table,
            }
        })
        .collect();
    let names = a.names.as_ref().map(|_| {
        blocks
            .iter()
            .map(|b| {
                let ns: Vec<String> = b.iter().map(|&x| a.name(x)).collect();
                format!("[{}]", ns.join("|"))
            })
            .collect()
    });
    Ok((
        FiniteAlgebra::from_parts(a.presentation.clone(), m, ops, names),
        proj,
    ))
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Restrict the first table cell to its isomorphism-normal values.
    pub symmetry: bool,
    /// Maximum number of search nodes (decisions plus leaves).
    pub budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            symmetry: true,
            budget: 200_000_000,
        }
    }
}

const UNSET: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Partial {
    Known(u32),
    Blocked { cell: usize, root: bool },
}

#[derive(Clone)]
enum CPat {
    Var(usize),
    Op(usize, Vec<CPat>),
}

struct Instance {
    eq: usize,
    vals: Vec<u32>,
}

/// Backtracking model search with equation propagation.
struct ModelSearch {
    n: usize,
    arity: Vec<usize>,
    base: Vec<usize>,
    cells: usize,
    eqs: Vec<(CPat, CPat)>,
    instances: Vec<Instance>,
    values: Vec<u32>,
    trail: Vec<usize>,
    watches: Vec<Vec<u32>>,
    watch_trail: Vec<usize>,
    queue: Vec<(usize, u32)>,
    nodes: u64,
    budget: u64,
}

impl ModelSearch {
    fn new(p: &Presentation, n: usize, budget: u64) -> Self {
        let ops = p.signature.ops();
        let arity: Vec<usize> = ops.iter().map(|(_, a)| *a).collect();
        let mut base = Vec::new();
        let mut cells = 0;
        for &a in &arity {
            base.push(cells);
            cells += n.pow(a as u32);
        }
        let mut eqs = Vec::new();
        let mut instances = Vec::new();
        for (i, e) in p.equations.iter().enumerate() {
            let vars: Vec<String> = e.vars().into_iter().collect();
            let compile = |t: &Term| compile_cpat(t, &vars, p);
            eqs.push((compile(&e.lhs), compile(&e.rhs)));
            let total = n.pow(vars.len() as u32);
            for code in 0..total {
                let mut c = code;
                let mut vals = vec![0u32; vars.len()];
                for v in vals.iter_mut().rev() {
                    *v = (c % n) as u32;
                    c /= n;
                }
                instances.push(Instance { eq: i, vals });
            }
        }
        ModelSearch {
            n,
            arity,
            base,
            cells,
            eqs,
            instances,
            values: vec![UNSET; cells],
            trail: Vec::new(),
            watches: vec![Vec::new(); cells],
            watch_trail: Vec::new(),
            queue: Vec::new(),
            nodes: 0,
            budget,
        }
    }

    fn eval(&self, p: &CPat, vals: &[u32]) -> Partial {
        match p {
            CPat::Var(v) => Partial::Known(vals[*v]),
            CPat::Op(op, kids) => {
                let mut idx = 0usize;
                for k in kids {
                    match self.eval(k, vals) {
                        Partial::Known(x) => idx = idx * self.n + x as usize,
                        Partial::Blocked { cell, .. } => return Partial::Blocked { cell, root: false },
                    }
                }
                let cell = self.base[*op] + idx;
                match self.values[cell] {
                    UNSET => Partial::Blocked { cell, root: true },
                    v => Partial::Known(v),
                }
            }
        }
    }

    /// Re-examines one instance; false on conflict.
    fn examine(&mut self, inst: usize) -> bool {
        let (l, r) = {
            let i = &self.instances[inst];
            let (lp, rp) = &self.eqs[i.eq];
            (self.eval(lp, &i.vals), self.eval(rp, &i.vals))
        };
        match (l, r) {
            (Partial::Known(a), Partial::Known(b)) => a == b,
            (Partial::Known(v), Partial::Blocked { cell, root: true })
            | (Partial::Blocked { cell, root: true }, Partial::Known(v)) => {
                self.queue.push((cell, v));
                true
            }
            (Partial::Blocked { cell, .. }, _) | (_, Partial::Blocked { cell, .. }) => {
                self.watches[cell].push(inst as u32);
                self.watch_trail.push(cell);
                true
            }
        }
    }

    fn propagate(&mut self) -> bool {
        while let Some((cell, v)) = self.queue.pop() {
            match self.values[cell] {
                UNSET => {}
                w if w == v => continue,
                _ => {
                    self.queue.clear();
                    return false;
                }
            }
            self.values[cell] = v;
            self.trail.push(cell);
            let mut i = 0;
            while i < self.watches[cell].len() {
                let inst = self.watches[cell][i] as usize;
                if !self.examine(inst) {
                    self.queue.clear();
                    return false;
                }
                i += 1;
            }
        }
        true
    }

    fn undo(&mut self, trail_len: usize, watch_len: usize) {
        while self.trail.len() > trail_len {
            let c = self.trail.pop().unwrap();
            self.values[c] = UNSET;
        }
        while self.watch_trail.len() > watch_len {
            let c = self.watch_trail.pop().unwrap();
            self.watches[c].pop();
        }
    }

    fn run(
        &mut self,
        symmetry: bool,
        emit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> Result<()> {
        for i in 0..self.instances.len() {
            if !self.examine(i) {
                return Ok(());
            }
        }
        if !self.propagate() {
            return Ok(());
        }
        let first_allowed = if symmetry && self.cells > 0 && self.values[0] == UNSET {
            Some(if self.arity[0] == 0 { 1 } else { 2.min(self.n) })
        } else {
            None
        };
        self.dfs(0, first_allowed, emit).map(|_| ())
    }

    /// Returns false when the consumer asked to stop.
    fn dfs(
        &mut self,
        from: usize,
        first_allowed: Option<usize>,
        emit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(AlgebraError::Budget(self.budget));
        }
        let mut cell = from;
        while cell < self.cells && self.values[cell] != UNSET {
            cell += 1;
        }
        if cell == self.cells {
            return Ok(emit(&self.values));
        }
        let limit = if cell == 0 { first_allowed.unwrap_or(self.n) } else { self.n };
        for v in 0..limit as u32 {
            let (tl, wl) = (self.trail.len(), self.watch_trail.len());
            self.queue.push((cell, v));
            if self.propagate() && !self.dfs(cell + 1, None, emit)? {
                self.undo(tl, wl);
                return Ok(false);
            }
            self.undo(tl, wl);
        }
        Ok(true)
    }

}

/// Slices a concatenated table vector into an algebra.
pub fn tables_to_algebra(p: &Presentation, n: usize, base: &[usize], values: &[u32]) -> FiniteAlgebra {
    let ops = p
        .signature
        .ops()
        .iter()
        .enumerate()
        .map(|(i, (name, arity))| OpTable {
            name: name.clone(),
            arity: *arity,
            table: values[base[i]..base[i] + n.pow(*arity as u32)].to_vec(),
        })
        .collect();
    FiniteAlgebra::from_parts(p.clone(), n, ops, None)
}

fn compile_cpat(t: &Term, vars: &[String], p: &Presentation) -> CPat {
    match t {
        Term::Var(v) => CPat::Var(vars.iter().position(|x| x == v).unwrap()),
        Term::App(op, kids) => CPat::Op(
            p.signature.ops().iter().position(|(n, _)| n == op).unwrap(),
            kids.iter().map(|k| compile_cpat(k, vars, p)).collect(),
        ),
        Term::Letter(_) => unreachable!("equations contain no letters"),
    }
}

/// Streams every model of the given size to `emit` in search order; `emit`
/// returns false to stop early.
pub fn for_each_model(
    p: &Presentation,
    size: usize,
    opts: &SearchOptions,
    emit: &mut dyn FnMut(FiniteAlgebra) -> bool,
) -> Result<u64> {
    let mut search = ModelSearch::new(p, size, opts.budget);
    let base = search.base.clone();
    let mut count = 0u64;
    let mut sink = |values: &[u32]| {
        count += 1;
        emit(tables_to_algebra(p, size, &base, values))
    };
    search.run(opts.symmetry, &mut sink)?;
    Ok(count)
}

/// Streams raw table vectors (all operations concatenated in signature
/// order) without building algebra values.
pub fn for_each_model_tables(
    p: &Presentation,
    size: usize,
    opts: &SearchOptions,
    emit: &mut dyn FnMut(&[u32]) -> bool,
) -> Result<u64> {
    let mut search = ModelSearch::new(p, size, opts.budget);
    let mut count = 0u64;
    let mut sink = |values: &[u32]| {
        count += 1;
        emit(values)
    };
    search.run(opts.symmetry, &mut sink)?;
    Ok(count)
}

/// All models of one size, in deterministic search order.
pub fn search_models(p: &Presentation, size: usize) -> Result<Vec<FiniteAlgebra>> {
    search_models_with(p, size, &SearchOptions::default())
}

pub fn search_models_with(
    p: &Presentation,
    size: usize,
    opts: &SearchOptions,
) -> Result<Vec<FiniteAlgebra>> {
    let mut out = Vec::new();
    for_each_model(p, size, opts, &mut |a| {
        out.push(a);
        true
    })?;
    Ok(out)
}

/// Parses the algebra file format. `theory` resolves the `theory:` name.
pub fn parse_algebra(
    text: &str,
    theory: &dyn Fn(&str) -> Option<Presentation>,
) -> Result<FiniteAlgebra> {
    let mut presentation = None;
    let mut size = None;
    let mut names: Option<Vec<String>> = None;
    let mut ops: Vec<(String, usize, Vec<String>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |msg: String| AlgebraError::Parse { line, msg };
        if let Some(rest) = content.strip_prefix("theory:") {
            let name = rest.trim();
            presentation = Some(theory(name).ok_or_else(|| perr(format!("unknown theory `{name}`")))?);
        } else if let Some(rest) = content.strip_prefix("carrier:") {
            let mut toks = rest.split_whitespace();
            let n: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .filter(|&n| n > 0)
                .ok_or_else(|| perr("carrier needs a positive size".into()))?;
            let ns: Vec<String> = toks.map(str::to_string).collect();
            if !ns.is_empty() {
                if ns.len() != n {
                    return Err(perr(format!("{} names for {} elements", ns.len(), n)));
                }
                names = Some(ns);
            }
            size = Some(n);
        } else if let Some(rest) = content.strip_prefix("op ") {
            let (name, cells) = rest
                .split_once(':')
                .ok_or_else(|| perr("expected `op <name>: <entries>`".into()))?;
            ops.push((
                name.trim().to_string(),
                line,
                cells.split_whitespace().map(str::to_string).collect(),
            ));
        } else if let Some(last) = ops.last_mut() {
            last.2.extend(content.split_whitespace().map(str::to_string));
        } else {
            return Err(perr(format!("unexpected line `{content}`")));
        }
    }
    let presentation = presentation.ok_or(AlgebraError::Parse {
        line: 1,
        msg: "missing `theory:`".into(),
    })?;
    let size = size.ok_or(AlgebraError::Parse {
        line: 1,
        msg: "missing `carrier:`".into(),
    })?;
    let lookup = |tok: &str, line: usize| -> Result<u32> {
        if let Some(ns) = &names {
            if let Some(i) = ns.iter().position(|n| n == tok) {
                return Ok(i as u32);
            }
        }
        tok.parse::<u32>()
            .ok()
            .filter(|&v| (v as usize) < size)
            .ok_or_else(|| AlgebraError::Parse {
                line,
                msg: format!("unknown element `{tok}`"),
            })
    };
    let mut tables = Vec::new();
    for (name, line, cells) in ops {
        let arity = presentation
            .signature
            .arity(&name)
            .ok_or_else(|| AlgebraError::Parse {
                line,
                msg: format!("operation `{name}` not in theory"),
            })?;
        let table = cells
            .iter()
            .map(|c| lookup(c, line))
            .collect::<Result<Vec<u32>>>()?;
        tables.push(OpTable { name, arity, table });
    }
    FiniteAlgebra::new(presentation, size, tables, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;

    fn group() -> Presentation {
        parse_presentation(
            "name: group\nops: dot/2, inv/1, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x\neq: (dot ?x (inv ?x)) = e\neq: (dot (inv ?x) ?x) = e",
        )
        .unwrap()
    }

    fn zn(n: u32) -> FiniteAlgebra {
        let dot = (0..n * n).map(|i| (i / n + i % n) % n).collect();
        let inv = (0..n).map(|x| (n - x) % n).collect();
        FiniteAlgebra::new(
            group(),
            n as usize,
            vec![
                OpTable { name: "dot".into(), arity: 2, table: dot },
                OpTable { name: "inv".into(), arity: 1, table: inv },
                OpTable { name: "e".into(), arity: 0, table: vec![0] },
            ],
            None,
        )
        .unwrap()
    }

    /// Every table assignment, filtered by the satisfaction check.
    fn brute_force_models(p: &Presentation, n: usize) -> Vec<Vec<u32>> {
        let sizes: Vec<usize> = p.signature.ops().iter().map(|(_, a)| n.pow(*a as u32)).collect();
        let cells: usize = sizes.iter().sum();
        let mut out = Vec::new();
        for code in 0..n.pow(cells as u32) {
            let mut c = code;
            let mut vals = vec![0u32; cells];
            for v in vals.iter_mut().rev() {
                *v = (c % n) as u32;
                c /= n;
            }
            let mut ops = Vec::new();
            let mut off = 0;
            for ((name, arity), s) in p.signature.ops().iter().zip(&sizes) {
                ops.push(OpTable { name: name.clone(), arity: *arity, table: vals[off..off + s].to_vec() });
                off += s;
            }
            if FiniteAlgebra::from_parts(p.clone(), n, ops, None).satisfies() {
                out.push(vals);
            }
        }
        out
    }

    fn all_tables(p: &Presentation, n: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let opts = SearchOptions { symmetry: false, ..SearchOptions::default() };
        for_each_model_tables(p, n, &opts, &mut |v| {
            out.push(v.to_vec());
            true
        })
        .unwrap();
        out
    }

    #[test]
    fn cyclic_groups_satisfy() {
        assert!(zn(2).satisfies());
        assert!(zn(4).satisfies());
        let h = extend_hom(&zn(2), &[("a".to_string(), 1)].into()).unwrap();
        let t = Term::app2("dot", Term::letter("a"), Term::letter("a"));
        assert_eq!(h.eval_term(&t).unwrap(), 0);
    }

    #[test]
    fn violation_is_reported() {
        let mut a = zn(3);
        a.ops[1].table = vec![0, 1, 2];
        let v = a.check_satisfies().unwrap_err();
        assert_eq!(v.equation, 3);
        assert!(extend_hom(&a, &BTreeMap::new()).is_err());
    }

    #[test]
    fn products() {
        let p = product(&zn(2), &zn(2)).unwrap();
        assert_eq!(p.size, 4);
        assert!(p.satisfies());
        let trivial = zn(1);
        let q = product(&zn(3), &trivial).unwrap();
        assert_eq!(q.ops, zn(3).ops);
    }

    #[test]
    fn congruences_and_quotients() {
        let z4 = zn(4);
        let theta = generate_congruence(&z4, &[(0, 2)]).unwrap();
        assert_eq!(theta.blocks(), vec![vec![0, 2], vec![1, 3]]);
        theta.is_compatible(&z4).unwrap();
        let (q, proj) = quotient(&z4, &theta).unwrap();
        assert_eq!(q.ops, zn(2).ops);
        assert_eq!(proj, vec![0, 1, 0, 1]);
        let discrete = generate_congruence(&z4, &[]).unwrap();
        assert_eq!(discrete, Congruence::discrete(4));
        assert_eq!(quotient(&z4, &discrete).unwrap().0.ops, z4.ops);
        let total = generate_congruence(&z4, &[(0, 1)]).unwrap();
        assert_eq!(quotient(&z4, &total).unwrap().0.size, 1);
        assert!(generate_congruence(&z4, &[(0, 9)]).is_err());
    }

    #[test]
    fn generated_congruence_is_least() {
        let z6 = zn(6);
        let theta = generate_congruence(&z6, &[(0, 3)]).unwrap();
        assert_eq!(theta.num_blocks(), 3);
        // splitting any block breaks either the pair or compatibility
        for b in theta.blocks() {
            for &x in &b[1..] {
                let mut finer = theta.clone();
                finer.class[x as usize] = x;
                assert!(!finer.related(0, 3) || finer.is_compatible(&z6).is_err());
            }
        }
    }

    #[test]
    fn subalgebra_generation() {
        let z6 = zn(6);
        let (sub, emb) = z6.subalgebra(&[2]);
        assert_eq!(sub.size, 3);
        assert_eq!(emb, vec![2, 0, 4]);
        assert!(sub.satisfies());
    }

    #[test]
    fn search_matches_brute_force() {
        let semigroup = parse_presentation("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))").unwrap();
        let band = parse_presentation("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot ?x ?x) = ?x").unwrap();
        let unary = parse_presentation("ops: f/1, g/1, e/0\neq: (f (f ?x)) = e\neq: (g (g ?y)) = e").unwrap();
        for p in [semigroup, band, unary] {
            for n in 1..=2 {
                assert_eq!(all_tables(&p, n), brute_force_models(&p, n), "{p}");
            }
        }
        let band3 = parse_presentation("ops: dot/2\neq: (dot ?x (dot ?y ?x)) = ?x").unwrap();
        assert_eq!(all_tables(&band3, 3).len(), brute_force_models(&band3, 3).len());
    }

    #[test]
    fn symmetry_keeps_isomorphism_types() {
        let semigroup = parse_presentation("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))").unwrap();
        // 2-element semigroups: 8 labelled tables, 5 up to isomorphism.
        let pruned = search_models(&semigroup, 2).unwrap();
        assert!(pruned.len() >= 5 && pruned.len() <= 8);
        assert!(pruned.iter().all(|a| a.ops[0].table[0] <= 1));
    }

    #[test]
    fn fgfgg_only_trivial() {
        let p = parse_presentation(
            "ops: f/1, g/1\neq: (f (g (f (g (g ?x))))) = ?x\neq: (f (g (f (f (g (g ?x)))))) = (f (g (f (f (g (g ?y))))))",
        )
        .unwrap();
        assert_eq!(search_models(&p, 1).unwrap().len(), 1);
        assert!(search_models(&p, 2).unwrap().is_empty());
        assert!(search_models(&p, 3).unwrap().is_empty());
    }

    #[test]
    fn algebra_file_round_trip() {
        let a = zn(3);
        let text = a.to_file_format();
        let b = parse_algebra(&text, &|n| (n == "group").then(group)).unwrap();
        assert_eq!(a, b);
        assert!(parse_algebra("theory: group\ncarrier: 2\nop dot: 0 1 1", &|_| Some(group())).is_err());
        let err = parse_algebra("theory: nope", &|_| None).unwrap_err();
        assert!(matches!(err, AlgebraError::Parse { line: 1, .. }));
    }
}
