//! Bounded free algebras by congruence closure over a hash-consed term universe.
//!
//! The universe `U(bound)` holds every ground term over the alphabet with at
//! most `bound` operation nodes. Equation instances are found by matching
//! modulo the current partition and merged until a fixpoint; every merge is
//! logged so that [`BoundedFreeAlgebra::verify_proof`] can replay it.
//!
//! Nodes are numbered in the canonical order (size, symbol, children), where
//! letters rank before operations and both are ordered by name. The union-find
//! keeps the least node of a class as its root, so the root is the canonical
//! representative.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::finite_algebra::{FiniteAlgebra, OpTable};
use crate::presentation::{Equation, LetterMap, Presentation, Term};

pub type NodeId = u32;
pub type ClassId = u32;

const NONE: u32 = u32::MAX;
pub const MAX_ARITY: usize = 4;
const NO_GROWTH: i64 = i64::MIN / 4;
const INFINITE_GROWTH: i64 = i64::MAX / 4;

/// Node budget used when `RECMONAD_MAX_NODES` is unset.
pub const DEFAULT_MAX_NODES: usize = 3_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("universe for size bound {bound} exceeds the node budget of {budget}")]
    Budget { bound: usize, budget: usize },
    #[error("term {term} exceeds the size bound {bound}")]
    ExceedsBound { term: String, bound: usize },
    #[error("letter `{0}` is not in the alphabet")]
    UnknownLetter(String),
    #[error("operation `{0}` is not in the signature")]
    UnknownOperation(String),
    #[error("term {0} contains a variable")]
    NotGround(String),
    #[error("operation `{op}` has arity {arity}; at most {MAX_ARITY} is supported")]
    ArityTooLarge { op: String, arity: usize },
    #[error("unmapped letter `{0}`")]
    Unmapped(String),
    #[error("size bound must be at least 1")]
    ZeroBound,
}

type Result<T> = std::result::Result<T, EngineError>;

/// Head of a universe node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shallow<'a> {
    Letter(&'a str),
    App(&'a str, &'a [NodeId]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqVerdict {
    Equal,
    /// `definitive` is set when the classes are known to differ in the free
    /// algebra itself and not only inside the bound.
    NotProvenEqual { bound: usize, definitive: bool },
}

impl EqVerdict {
    pub fn is_equal(self) -> bool {
        self == EqVerdict::Equal
    }

    pub fn is_definitely_different(self) -> bool {
        matches!(self, EqVerdict::NotProvenEqual { definitive: true, .. })
    }
}

/// One logged union. Node lists are in preorder over the operation positions
/// of the matched pattern side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Merge {
    Axiom {
        eq: usize,
        flipped: bool,
        lhs_nodes: Vec<NodeId>,
        rhs_nodes: Vec<NodeId>,
        binding: Vec<NodeId>,
    },
    Congruence { a: NodeId, b: NodeId },
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub max_nodes: usize,
    /// Upper bound on class-table cells examined by the saturation check.
    pub max_table_cells: usize,
    pub max_rounds: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        let max_nodes = std::env::var("RECMONAD_MAX_NODES")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_MAX_NODES);
        BuildOptions {
            max_nodes,
            max_table_cells: 4_000_000,
            max_rounds: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    sym: u16,
    arity: u8,
    size: u16,
    kids: [u32; MAX_ARITY],
}

impl Node {
    fn kids(&self) -> &[u32] {
        &self.kids[..self.arity as usize]
    }

    fn key(&self) -> [u32; MAX_ARITY + 1] {
        let mut k = [NONE; MAX_ARITY + 1];
        k[0] = self.sym as u32;
        k[1..].copy_from_slice(&self.kids);
        k
    }
}

#[derive(Clone, Debug)]
enum Pat {
    Var(usize),
    Op(u16, Vec<Pat>),
}

impl Pat {
    fn op_count(&self) -> usize {
        match self {
            Pat::Var(_) => 0,
            Pat::Op(_, kids) => 1 + kids.iter().map(Pat::op_count).sum::<usize>(),
        }
    }

    fn vars(&self, out: &mut Vec<usize>) {
        match self {
            Pat::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Pat::Op(_, kids) => kids.iter().for_each(|k| k.vars(out)),
        }
    }
}

#[derive(Clone, Debug)]
struct CompiledEq {
    lhs: Pat,
    rhs: Pat,
    nvars: usize,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }
}

/// A finite approximation of the free algebra on an alphabet.
#[derive(Clone, Debug)]
pub struct BoundedFreeAlgebra {
    presentation: Presentation,
    alphabet: Vec<String>,
    size_bound: usize,
    /// Operations sorted by name; symbol code of op `i` is `alphabet.len() + i`.
    ops: Vec<(String, usize)>,
    nodes: Vec<Node>,
    index: HashMap<[u32; MAX_ARITY + 1], NodeId>,
    /// Dense class per node.
    class: Vec<ClassId>,
    /// Root node per dense class, ascending.
    roots: Vec<NodeId>,
    member_start: Vec<u32>,
    members: Vec<NodeId>,
    closed: Vec<bool>,
    proof: Vec<Merge>,
    eqs: Vec<CompiledEq>,
    tables: Option<Vec<Vec<ClassId>>>,
    rounds: usize,
}

impl BoundedFreeAlgebra {
    pub fn build(p: &Presentation, alphabet: &[&str], size_bound: usize) -> Result<Self> {
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.to_string()).collect();
        Self::build_with(p, &alphabet, size_bound, &BuildOptions::default())
    }

    pub fn build_with(
        p: &Presentation,
        alphabet: &[String],
        size_bound: usize,
        opts: &BuildOptions,
    ) -> Result<Self> {
        if size_bound == 0 {
            return Err(EngineError::ZeroBound);
        }
        let mut alphabet = alphabet.to_vec();
        alphabet.sort();
        alphabet.dedup();
        let mut ops: Vec<(String, usize)> = p.signature.ops().to_vec();
        ops.sort();
        for (op, arity) in &ops {
            if *arity > MAX_ARITY {
                return Err(EngineError::ArityTooLarge {
                    op: op.clone(),
                    arity: *arity,
                });
            }
        }
        let mut fa = BoundedFreeAlgebra {
            presentation: p.clone(),
            alphabet,
            size_bound,
            ops,
            nodes: Vec::new(),
            index: HashMap::new(),
            class: Vec::new(),
            roots: Vec::new(),
            member_start: Vec::new(),
            members: Vec::new(),
            closed: Vec::new(),
            proof: Vec::new(),
            eqs: Vec::new(),
            tables: None,
            rounds: 0,
        };
        fa.eqs = p.equations.iter().map(|e| fa.compile_eq(e)).collect();
        fa.enumerate_universe(opts.max_nodes)?;
        let mut uf = UnionFind::new(fa.nodes.len());
        fa.saturate_partition(&mut uf, opts.max_rounds);
        fa.freeze(&mut uf);
        fa.compute_closed();
        fa.tables = fa.derive_tables(opts.max_table_cells);
        Ok(fa)
    }

    fn compile_eq(&self, e: &Equation) -> CompiledEq {
        let mut names: Vec<String> = Vec::new();
        let lhs = self.compile_pat(&e.lhs, &mut names);
        let rhs = self.compile_pat(&e.rhs, &mut names);
        CompiledEq {
            lhs,
            rhs,
            nvars: names.len(),
        }
    }

    fn compile_pat(&self, t: &Term, names: &mut Vec<String>) -> Pat {
        match t {
            Term::Var(v) => match names.iter().position(|n| n == v) {
                Some(i) => Pat::Var(i),
                None => {
                    names.push(v.clone());
                    Pat::Var(names.len() - 1)
                }
            },
            Term::App(op, kids) => Pat::Op(
                self.op_sym(op).expect("validated presentation"),
                kids.iter().map(|k| self.compile_pat(k, names)).collect(),
            ),
            Term::Letter(_) => unreachable!("equations contain no letters"),
        }
    }

    fn op_sym(&self, op: &str) -> Option<u16> {
        self.ops
            .iter()
            .position(|(n, _)| n == op)
            .map(|i| (self.alphabet.len() + i) as u16)
    }

    fn letter_sym(&self, a: &str) -> Option<u16> {
        self.alphabet.iter().position(|n| n == a).map(|i| i as u16)
    }

    fn enumerate_universe(&mut self, budget: usize) -> Result<()> {
        let bound = self.size_bound;
        let push = |fa: &mut Self, node: Node| -> Result<()> {
            if fa.nodes.len() >= budget {
                return Err(EngineError::Budget { bound, budget });
            }
            let id = fa.nodes.len() as u32;
            fa.index.insert(node.key(), id);
            fa.nodes.push(node);
            Ok(())
        };
        for i in 0..self.alphabet.len() {
            push(
                self,
                Node {
                    sym: i as u16,
                    arity: 0,
                    size: 0,
                    kids: [NONE; MAX_ARITY],
                },
            )?;
        }
        // le[s] = number of nodes of size <= s
        let mut le = vec![self.nodes.len()];
        for s in 1..=bound {
            for (i, (_, arity)) in self.ops.clone().iter().enumerate() {
                let sym = (self.alphabet.len() + i) as u16;
                if *arity == 0 {
                    if s == 1 {
                        push(
                            self,
                            Node {
                                sym,
                                arity: 0,
                                size: 1,
                                kids: [NONE; MAX_ARITY],
                            },
                        )?;
                    }
                    continue;
                }
                let mut kids = [NONE; MAX_ARITY];
                self.enum_kids(sym, *arity, 0, s - 1, s, &le, &mut kids, &push)?;
            }
            le.push(self.nodes.len());
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn enum_kids(
        &mut self,
        sym: u16,
        arity: usize,
        pos: usize,
        remaining: usize,
        size: usize,
        le: &[usize],
        kids: &mut [u32; MAX_ARITY],
        push: &impl Fn(&mut Self, Node) -> Result<()>,
    ) -> Result<()> {
        if pos + 1 == arity {
            let lo = if remaining == 0 { 0 } else { le[remaining - 1] };
            for id in lo..le[remaining] {
                kids[pos] = id as u32;
                push(
                    self,
                    Node {
                        sym,
                        arity: arity as u8,
                        size: size as u16,
                        kids: *kids,
                    },
                )?;
            }
            return Ok(());
        }
        for id in 0..le[remaining] {
            let used = self.nodes[id].size as usize;
            kids[pos] = id as u32;
            self.enum_kids(sym, arity, pos + 1, remaining - used, size, le, kids, push)?;
        }
        kids[pos] = NONE;
        Ok(())
    }

    /// Congruence closure followed by equation matching, to a fixpoint.
    fn saturate_partition(&mut self, uf: &mut UnionFind, max_rounds: usize) {
        let orientations = self.orientations();
        loop {
            self.congruence_closure(uf);
            self.rounds += 1;
            if self.rounds > max_rounds {
                break;
            }
            let idx = EnodeIndex::build(self, uf);
            let mut pending = Vec::new();
            for &(e, flipped) in &orientations {
                let ce = &self.eqs[e];
                let (l, r) = if flipped { (&ce.rhs, &ce.lhs) } else { (&ce.lhs, &ce.rhs) };
                let mut lvars = Vec::new();
                l.vars(&mut lvars);
                let mut fresh = Vec::new();
                r.vars(&mut fresh);
                fresh.retain(|v| !lvars.contains(v));
                let mut binding = vec![NONE; ce.nvars];
                let mut lnodes = Vec::with_capacity(l.op_count());
                let top_classes: Vec<u32> = match l {
                    Pat::Op(sym, _) => idx.by_sym(*sym).iter().map(|&n| idx.root[n as usize]).collect(),
                    Pat::Var(_) => idx.roots.clone(),
                };
                let mut seen_top = Vec::new();
                for c in top_classes {
                    if seen_top.last() == Some(&c) && matches!(l, Pat::Var(_)) {
                        continue;
                    }
                    seen_top.push(c);
                    let _ = seen_top;
                    seen_top.clear();
                    idx.match_pat(l, c, &mut binding, &mut lnodes, &mut |b, ln| {
                        let mut b = b.to_vec();
                        self.for_fresh(&fresh, &idx, &mut b, &mut |b| {
                            let mut rnodes = Vec::new();
                            if let Some(rc) = idx.instantiate(r, b, &mut rnodes) {
                                if rc != c {
                                    pending.push(Merge::Axiom {
                                        eq: e,
                                        flipped,
                                        lhs_nodes: ln.to_vec(),
                                        rhs_nodes: rnodes,
                                        binding: b.to_vec(),
                                    });
                                }
                            }
                        });
                    });
                }
            }
            let mut changed = false;
            for m in pending {
                let (a, b) = self.merge_endpoints(&m);
                if uf.union(a, b) {
                    self.proof.push(m);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn for_fresh(
        &self,
        fresh: &[usize],
        idx: &EnodeIndex,
        b: &mut Vec<u32>,
        k: &mut dyn FnMut(&[u32]),
    ) {
        match fresh.split_first() {
            None => k(b),
            Some((&v, rest)) => {
                for &c in &idx.roots {
                    b[v] = c;
                    self.for_fresh(rest, idx, b, k);
                }
                b[v] = NONE;
            }
        }
    }

    /// Orientations used for matching: those with an operation on the left
    /// and no fresh variables on the right; an equation with fresh variables
    /// on both sides is matched left to right with the fresh ones enumerated.
    fn orientations(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for (i, e) in self.eqs.iter().enumerate() {
            let (mut lv, mut rv) = (Vec::new(), Vec::new());
            e.lhs.vars(&mut lv);
            e.rhs.vars(&mut rv);
            let l_ok = rv.iter().all(|v| lv.contains(v));
            let r_ok = lv.iter().all(|v| rv.contains(v));
            let mut any = false;
            if matches!(e.lhs, Pat::Op(..)) && l_ok {
                out.push((i, false));
                any = true;
            }
            if matches!(e.rhs, Pat::Op(..)) && r_ok {
                out.push((i, true));
                any = true;
            }
            if !any && !(l_ok && r_ok) {
                if matches!(e.lhs, Pat::Op(..)) || matches!(e.rhs, Pat::Var(_)) {
                    out.push((i, false));
                } else {
                    out.push((i, true));
                }
            }
        }
        out
    }

    fn merge_endpoints(&self, m: &Merge) -> (NodeId, NodeId) {
        match m {
            Merge::Congruence { a, b } => (*a, *b),
            Merge::Axiom {
                eq,
                flipped,
                lhs_nodes,
                rhs_nodes,
                binding,
            } => {
                let ce = &self.eqs[*eq];
                let (l, r) = if *flipped { (&ce.rhs, &ce.lhs) } else { (&ce.lhs, &ce.rhs) };
                let side = |p: &Pat, nodes: &[NodeId]| match p {
                    Pat::Var(v) => binding[*v],
                    Pat::Op(..) => nodes[0],
                };
                (side(l, lhs_nodes), side(r, rhs_nodes))
            }
        }
    }

    fn congruence_closure(&mut self, uf: &mut UnionFind) {
        loop {
            let mut table: HashMap<[u32; MAX_ARITY + 1], NodeId> =
                HashMap::with_capacity(self.nodes.len());
            let mut changed = false;
            for n in 0..self.nodes.len() as u32 {
                let node = self.nodes[n as usize];
                if node.arity == 0 {
                    continue;
                }
                let mut key = node.key();
                for k in key[1..=node.arity as usize].iter_mut() {
                    *k = uf.find(*k);
                }
                match table.get(&key) {
                    Some(&m) => {
                        if uf.union(m, n) {
                            self.proof.push(Merge::Congruence { a: m, b: n });
                            changed = true;
                        }
                    }
                    None => {
                        table.insert(key, n);
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn freeze(&mut self, uf: &mut UnionFind) {
        let n = self.nodes.len();
        let mut dense = vec![NONE; n];
        self.roots.clear();
        self.class = vec![0; n];
        for i in 0..n as u32 {
            let r = uf.find(i);
            if dense[r as usize] == NONE {
                dense[r as usize] = self.roots.len() as u32;
                self.roots.push(r);
            }
            self.class[i as usize] = dense[r as usize];
        }
        let k = self.roots.len();
        let mut counts = vec![0u32; k + 1];
        for &c in &self.class {
            counts[c as usize + 1] += 1;
        }
        for i in 0..k {
            counts[i + 1] += counts[i];
        }
        self.member_start = counts.clone();
        self.members = vec![0; n];
        let mut fill = counts;
        for i in 0..n {
            let c = self.class[i] as usize;
            self.members[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
    }

    /// Largest size change of one rewrite step anywhere inside each node.
    fn compute_closed(&mut self) {
        let n = self.nodes.len();
        let mut growth = vec![NO_GROWTH; n];
        let mut binding = Vec::new();
        for id in 0..n {
            let node = self.nodes[id];
            let mut g = node
                .kids()
                .iter()
                .map(|&k| growth[k as usize])
                .max()
                .unwrap_or(NO_GROWTH);
            for ce in &self.eqs {
                for (l, r) in [(&ce.lhs, &ce.rhs), (&ce.rhs, &ce.lhs)] {
                    binding.clear();
                    binding.resize(ce.nvars, NONE);
                    if self.syntactic_match(l, id as u32, &mut binding) {
                        let delta = match self.pat_size(r, &binding) {
                            Some(s) => s as i64 - node.size as i64,
                            None => INFINITE_GROWTH,
                        };
                        g = g.max(delta);
                    }
                }
            }
            growth[id] = g;
        }
        let bound = self.size_bound as i64;
        self.closed = (0..self.roots.len())
            .map(|c| {
                self.class_nodes(c as u32).iter().all(|&m| {
                    let g = growth[m as usize];
                    g == NO_GROWTH || (g < INFINITE_GROWTH && self.nodes[m as usize].size as i64 + g <= bound)
                })
            })
            .collect();
    }

    fn syntactic_match(&self, p: &Pat, n: NodeId, binding: &mut [u32]) -> bool {
        match p {
            Pat::Var(v) => {
                if binding[*v] == NONE {
                    binding[*v] = n;
                    true
                } else {
                    binding[*v] == n
                }
            }
            Pat::Op(sym, kids) => {
                let node = &self.nodes[n as usize];
                node.sym == *sym
                    && kids
                        .iter()
                        .zip(node.kids())
                        .all(|(kp, &kn)| self.syntactic_match(kp, kn, binding))
            }
        }
    }

    fn pat_size(&self, p: &Pat, binding: &[u32]) -> Option<usize> {
        match p {
            Pat::Var(v) => {
                let n = binding[*v];
                (n != NONE).then(|| self.nodes[n as usize].size as usize)
            }
            Pat::Op(_, kids) => {
                let mut s = 1;
                for k in kids {
                    s += self.pat_size(k, binding)?;
                }
                Some(s)
            }
        }
    }

    /// Fills the operation tables of the class algebra. Entries missing from
    /// the universe are derived by one equation step at the root, using the
    /// tables filled so far; the result is accepted only if every entry is
    /// derivable, no two derivations disagree, and the class algebra
    /// satisfies the equations.
    fn derive_tables(&self, max_cells: usize) -> Option<Vec<Vec<ClassId>>> {
        let k = self.roots.len();
        let mut tables = Vec::with_capacity(self.ops.len());
        let mut cells = 0usize;
        for (_, arity) in &self.ops {
            let len = k.checked_pow(*arity as u32)?;
            cells = cells.checked_add(len)?;
            if cells > max_cells {
                return None;
            }
            tables.push(vec![NONE; len]);
        }
        let nl = self.alphabet.len();
        for (id, node) in self.nodes.iter().enumerate() {
            if (node.sym as usize) < nl {
                continue;
            }
            let op = node.sym as usize - nl;
            let idx = node
                .kids()
                .iter()
                .fold(0usize, |acc, &c| acc * k + self.class[c as usize] as usize);
            tables[op][idx] = self.class[id];
        }
        let mut derivers: Vec<Vec<(&Pat, &Pat, usize)>> = vec![Vec::new(); self.ops.len()];
        for ce in &self.eqs {
            for (l, r) in [(&ce.lhs, &ce.rhs), (&ce.rhs, &ce.lhs)] {
                if let Pat::Op(sym, _) = l {
                    let mut lv = Vec::new();
                    l.vars(&mut lv);
                    let mut rv = Vec::new();
                    r.vars(&mut rv);
                    if rv.iter().all(|v| lv.contains(v)) {
                        derivers[*sym as usize - nl].push((l, r, ce.nvars));
                    }
                }
            }
        }
        loop {
            let mut progress = false;
            let mut missing = false;
            for op in 0..self.ops.len() {
                let arity = self.ops[op].1;
                for cell in (0..tables[op].len()).rev() {
                    if tables[op][cell] != NONE {
                        continue;
                    }
                    let mut args = [0u32; MAX_ARITY];
                    let mut rest = cell;
                    for i in (0..arity).rev() {
                        args[i] = (rest % k) as u32;
                        rest /= k;
                    }
                    let mut found = NONE;
                    for &(l, r, nvars) in &derivers[op] {
                        let Pat::Op(_, pats) = l else { continue };
                        let mut binding = vec![NONE; nvars];
                        let mut results = Vec::new();
                        self.class_match_args(pats, &args[..arity], &mut binding, &mut |b| {
                            if let Some(v) = self.eval_pat_tables(r, b, &tables) {
                                results.push(v);
                            }
                        });
                        for v in results {
                            if found == NONE {
                                found = v;
                            } else if found != v {
                                return None;
                            }
                        }
                    }
                    if found != NONE {
                        tables[op][cell] = found;
                        progress = true;
                    } else {
                        missing = true;
                    }
                }
            }
            if !missing {
                break;
            }
            if !progress {
                return None;
            }
        }
        if self.tables_satisfy(&tables, max_cells.saturating_mul(4)) {
            Some(tables)
        } else {
            None
        }
    }

    fn class_match_args(
        &self,
        pats: &[Pat],
        args: &[u32],
        binding: &mut Vec<u32>,
        k: &mut dyn FnMut(&[u32]),
    ) {
        match pats.split_first() {
            None => k(binding),
            Some((p, rest)) => {
                let snapshot = binding.clone();
                self.class_match(p, args[0], binding, &mut |b| {
                    let mut b2 = b.to_vec();
                    self.class_match_args(rest, &args[1..], &mut b2, k);
                });
                *binding = snapshot;
            }
        }
    }

    /// Matches a pattern against a dense class using the universe e-nodes.
    fn class_match(&self, p: &Pat, c: ClassId, binding: &mut Vec<u32>, k: &mut dyn FnMut(&[u32])) {
        match p {
            Pat::Var(v) => {
                if binding[*v] == NONE {
                    binding[*v] = c;
                    k(binding);
                    binding[*v] = NONE;
                } else if binding[*v] == c {
                    k(binding);
                }
            }
            Pat::Op(sym, pats) => {
                let mut seen: Vec<[u32; MAX_ARITY]> = Vec::new();
                for &m in self.class_nodes(c) {
                    let node = &self.nodes[m as usize];
                    if node.sym != *sym {
                        continue;
                    }
                    let mut sig = [NONE; MAX_ARITY];
                    for (i, &kid) in node.kids().iter().enumerate() {
                        sig[i] = self.class[kid as usize];
                    }
                    if seen.contains(&sig) {
                        continue;
                    }
                    seen.push(sig);
                    self.class_match_args(pats, &sig[..pats.len()], binding, k);
                }
            }
        }
    }

    fn eval_pat_tables(&self, p: &Pat, binding: &[u32], tables: &[Vec<ClassId>]) -> Option<ClassId> {
        match p {
            Pat::Var(v) => (binding[*v] != NONE).then_some(binding[*v]),
            Pat::Op(sym, kids) => {
                let op = *sym as usize - self.alphabet.len();
                let k = self.roots.len();
                let mut idx = 0usize;
                for kid in kids {
                    idx = idx * k + self.eval_pat_tables(kid, binding, tables)? as usize;
                }
                let v = tables[op][idx];
                (v != NONE).then_some(v)
            }
        }
    }

    fn tables_satisfy(&self, tables: &[Vec<ClassId>], budget: usize) -> bool {
        let k = self.roots.len();
        let mut work = 0usize;
        for ce in &self.eqs {
            let total = match k.checked_pow(ce.nvars as u32) {
                Some(t) => t,
                None => return false,
            };
            work = work.saturating_add(total);
            if work > budget {
                return false;
            }
            let mut b = vec![0u32; ce.nvars];
            for mut code in 0..total {
                for slot in b.iter_mut() {
                    *slot = (code % k) as u32;
                    code /= k;
                }
                if self.eval_pat_tables(&ce.lhs, &b, tables) != self.eval_pat_tables(&ce.rhs, &b, tables) {
                    return false;
                }
            }
        }
        true
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn size_bound(&self) -> usize {
        self.size_bound
    }

    /// True when the classes are exactly the free algebra: every class-table
    /// entry is derivable and the class algebra satisfies the equations.
    pub fn saturated(&self) -> bool {
        self.tables.is_some()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_classes(&self) -> usize {
        self.roots.len()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn proof(&self) -> &[Merge] {
        &self.proof
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        0..self.roots.len() as u32
    }

    fn class_nodes(&self, c: ClassId) -> &[NodeId] {
        let (s, e) = (
            self.member_start[c as usize] as usize,
            self.member_start[c as usize + 1] as usize,
        );
        &self.members[s..e]
    }

    pub fn class_size(&self, c: ClassId) -> usize {
        self.class_nodes(c).len()
    }

    /// A class is closed when every one-step rewrite of every member stays
    /// inside the bound; its members are then the whole equivalence class.
    pub fn is_closed(&self, c: ClassId) -> bool {
        self.closed[c as usize]
    }

    pub fn representative(&self, c: ClassId) -> Term {
        self.node_term(self.roots[c as usize])
    }

    pub fn representative_size(&self, c: ClassId) -> usize {
        self.nodes[self.roots[c as usize] as usize].size as usize
    }

    pub fn members(&self, c: ClassId) -> Vec<Term> {
        self.class_nodes(c).iter().map(|&n| self.node_term(n)).collect()
    }

    pub fn node_term(&self, n: NodeId) -> Term {
        let node = &self.nodes[n as usize];
        let nl = self.alphabet.len();
        if (node.sym as usize) < nl {
            return Term::Letter(self.alphabet[node.sym as usize].clone());
        }
        Term::App(
            self.ops[node.sym as usize - nl].0.clone(),
            node.kids().iter().map(|&k| self.node_term(k)).collect(),
        )
    }

    /// The head symbol and children of a node without building the term.
    pub fn node_shallow(&self, n: NodeId) -> Shallow<'_> {
        let node = &self.nodes[n as usize];
        let nl = self.alphabet.len();
        if (node.sym as usize) < nl {
            Shallow::Letter(&self.alphabet[node.sym as usize])
        } else {
            Shallow::App(&self.ops[node.sym as usize - nl].0, &self.nodes[n as usize].kids[..node.arity as usize])
        }
    }

    pub fn node_class(&self, n: NodeId) -> ClassId {
        self.class[n as usize]
    }

    pub fn node_size(&self, n: NodeId) -> usize {
        self.nodes[n as usize].size as usize
    }

    pub fn class_root(&self, c: ClassId) -> NodeId {
        self.roots[c as usize]
    }

    /// Universe node ids of the class, in canonical order.
    pub fn class_node_ids(&self, c: ClassId) -> &[NodeId] {
        self.class_nodes(c)
    }

    /// Looks a ground term up in the universe.
    pub fn node_of(&self, t: &Term) -> Result<NodeId> {
        self.try_node_of(t)?.ok_or_else(|| EngineError::ExceedsBound {
            term: t.to_string(),
            bound: self.size_bound,
        })
    }

    fn try_node_of(&self, t: &Term) -> Result<Option<NodeId>> {
        match t {
            Term::Var(_) => Err(EngineError::NotGround(t.to_string())),
            Term::Letter(a) => {
                let s = self
                    .letter_sym(a)
                    .ok_or_else(|| EngineError::UnknownLetter(a.clone()))?;
                Ok(Some(s as u32))
            }
            Term::App(op, kids) => {
                let sym = self
                    .op_sym(op)
                    .ok_or_else(|| EngineError::UnknownOperation(op.clone()))?;
                let mut key = [NONE; MAX_ARITY + 1];
                key[0] = sym as u32;
                let mut missing = false;
                for (i, k) in kids.iter().enumerate() {
                    match self.try_node_of(k)? {
                        Some(n) => key[i + 1] = n,
                        None => missing = true,
                    }
                }
                if missing {
                    return Ok(None);
                }
                Ok(self.index.get(&key).copied())
            }
        }
    }

    /// Class of a ground term. Outside the bound this needs saturation.
    pub fn class_of(&self, t: &Term) -> Result<ClassId> {
        if let Some(n) = self.try_node_of(t)? {
            return Ok(self.class[n as usize]);
        }
        match &self.tables {
            Some(tables) => self.eval_tables(t, tables),
            None => Err(EngineError::ExceedsBound {
                term: t.to_string(),
                bound: self.size_bound,
            }),
        }
    }

    pub fn try_class_of(&self, t: &Term) -> Option<ClassId> {
        self.class_of(t).ok()
    }

    fn eval_tables(&self, t: &Term, tables: &[Vec<ClassId>]) -> Result<ClassId> {
        match t {
            Term::Var(_) => Err(EngineError::NotGround(t.to_string())),
            Term::Letter(a) => {
                let s = self
                    .letter_sym(a)
                    .ok_or_else(|| EngineError::UnknownLetter(a.clone()))?;
                Ok(self.class[s as usize])
            }
            Term::App(op, kids) => {
                let sym = self
                    .op_sym(op)
                    .ok_or_else(|| EngineError::UnknownOperation(op.clone()))?;
                let k = self.roots.len();
                let mut idx = 0usize;
                for kid in kids {
                    idx = idx * k + self.eval_tables(kid, tables)? as usize;
                }
                Ok(tables[sym as usize - self.alphabet.len()][idx])
            }
        }
    }

    /// Applies an operation to classes: through the class tables when
    /// saturated, otherwise through a universe node with that signature.
    pub fn apply_op(&self, op: &str, args: &[ClassId]) -> Option<ClassId> {
        let sym = self.op_sym(op)?;
        let k = self.roots.len();
        if let Some(tables) = &self.tables {
            let idx = args.iter().fold(0usize, |acc, &c| acc * k + c as usize);
            return Some(tables[sym as usize - self.alphabet.len()][idx]);
        }
        let mut best: Option<ClassId> = None;
        self.for_signature_nodes(sym, args, &mut |n| {
            best = Some(self.class[n as usize]);
            true
        });
        best
    }

    fn for_signature_nodes(&self, sym: u16, args: &[ClassId], k: &mut dyn FnMut(NodeId) -> bool) {
        fn go(
            fa: &BoundedFreeAlgebra,
            args: &[ClassId],
            key: &mut [u32; MAX_ARITY + 1],
            pos: usize,
            k: &mut dyn FnMut(NodeId) -> bool,
        ) -> bool {
            if pos == args.len() {
                if let Some(&n) = fa.index.get(key) {
                    return k(n);
                }
                return false;
            }
            for &m in fa.class_nodes(args[pos]) {
                key[pos + 1] = m;
                if go(fa, args, key, pos + 1, k) {
                    return true;
                }
            }
            false
        }
        let mut key = [NONE; MAX_ARITY + 1];
        key[0] = sym as u32;
        go(self, args, &mut key, 0, k);
    }

    pub fn letter_class(&self, a: &str) -> Option<ClassId> {
        self.letter_sym(a).map(|s| self.class[s as usize])
    }

    pub fn decide_equal(&self, t: &Term, s: &Term) -> Result<EqVerdict> {
        let (ct, cs) = (self.class_of(t)?, self.class_of(s)?);
        Ok(self.compare_classes(ct, cs))
    }

    pub fn compare_classes(&self, ct: ClassId, cs: ClassId) -> EqVerdict {
        if ct == cs {
            EqVerdict::Equal
        } else {
            EqVerdict::NotProvenEqual {
                bound: self.size_bound,
                definitive: self.saturated() || self.is_closed(ct) || self.is_closed(cs),
            }
        }
    }

    /// All members of the class of `t` within the bound, in canonical order.
    pub fn enumerate_class(&self, t: &Term) -> Result<Vec<Term>> {
        let n = self.node_of(t)?;
        Ok(self.members(self.class[n as usize]))
    }

    /// Class algebra of a saturated free algebra, with operations in
    /// signature order and representatives as element names.
    pub fn class_algebra(&self) -> Option<FiniteAlgebra> {
        let tables = self.tables.as_ref()?;
        let ops = self
            .presentation
            .signature
            .ops()
            .iter()
            .map(|(name, arity)| {
                let i = self.ops.iter().position(|(n, _)| n == name).unwrap();
                OpTable {
                    name: name.clone(),
                    arity: *arity,
                    table: tables[i].clone(),
                }
            })
            .collect();
        let names = self.classes().map(|c| self.representative(c).to_string()).collect();
        Some(FiniteAlgebra::from_parts(
            self.presentation.clone(),
            self.roots.len(),
            ops,
            Some(names),
        ))
    }

    /// For each node, the node obtained by renaming its letters along `f`.
    /// The target must share the signature and have at least this bound.
    pub fn rename_nodes(&self, f: &LetterMap, target: &BoundedFreeAlgebra) -> Result<Vec<NodeId>> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let nl = self.alphabet.len();
        for node in &self.nodes {
            let id = if (node.sym as usize) < nl {
                let a = &self.alphabet[node.sym as usize];
                let b = f.apply(a).ok_or_else(|| EngineError::Unmapped(a.clone()))?;
                target
                    .letter_sym(b)
                    .ok_or_else(|| EngineError::UnknownLetter(b.to_string()))? as u32
            } else {
                let op = &self.ops[node.sym as usize - nl].0;
                let sym = target
                    .op_sym(op)
                    .ok_or_else(|| EngineError::UnknownOperation(op.clone()))?;
                let mut key = [NONE; MAX_ARITY + 1];
                key[0] = sym as u32;
                for (i, &k) in node.kids().iter().enumerate() {
                    key[i + 1] = out[k as usize];
                }
                *target.index.get(&key).ok_or_else(|| EngineError::ExceedsBound {
                    term: self.node_term(out.len() as u32).to_string(),
                    bound: target.size_bound,
                })?
            };
            out.push(id);
        }
        Ok(out)
    }

    /// Replays the proof log on a fresh union-find, checking each step
    /// against the universe, and compares the final partition.
    pub fn verify_proof(&self) -> std::result::Result<(), String> {
        let mut uf = UnionFind::new(self.nodes.len());
        for (i, m) in self.proof.iter().enumerate() {
            match m {
                Merge::Congruence { a, b } => {
                    let (na, nb) = (self.nodes[*a as usize], self.nodes[*b as usize]);
                    if na.sym != nb.sym
                        || na.kids().iter().zip(nb.kids()).any(|(&x, &y)| uf.find(x) != uf.find(y))
                    {
                        return Err(format!("step {i}: congruence {a} ~ {b} not justified"));
                    }
                }
                Merge::Axiom {
                    eq,
                    flipped,
                    lhs_nodes,
                    rhs_nodes,
                    binding,
                } => {
                    let ce = self.eqs.get(*eq).ok_or(format!("step {i}: no equation {eq}"))?;
                    let (l, r) = if *flipped { (&ce.rhs, &ce.lhs) } else { (&ce.lhs, &ce.rhs) };
                    if binding.len() != ce.nvars || binding.iter().any(|&b| b as usize >= self.nodes.len()) {
                        return Err(format!("step {i}: malformed binding"));
                    }
                    for (p, nodes) in [(l, lhs_nodes), (r, rhs_nodes)] {
                        let mut pos = 0;
                        if !self.check_instance(p, nodes, &mut pos, binding, &mut uf) || pos != nodes.len() {
                            return Err(format!("step {i}: instance of equation {eq} does not check"));
                        }
                    }
                }
            }
            let (a, b) = self.merge_endpoints(m);
            uf.union(a, b);
        }
        for n in 0..self.nodes.len() as u32 {
            let root = uf.find(n);
            if self.class[root as usize] != self.class[n as usize] || self.roots[self.class[n as usize] as usize] != root {
                return Err(format!("replayed partition differs at node {n}"));
            }
        }
        Ok(())
    }

    fn check_instance(
        &self,
        p: &Pat,
        nodes: &[NodeId],
        pos: &mut usize,
        binding: &[NodeId],
        uf: &mut UnionFind,
    ) -> bool {
        let Pat::Op(sym, kids) = p else { return true };
        let Some(&n) = nodes.get(*pos) else { return false };
        *pos += 1;
        let node = self.nodes[n as usize];
        if node.sym != *sym {
            return false;
        }
        for (kp, &kn) in kids.iter().zip(node.kids()) {
            let expect = match kp {
                Pat::Var(v) => binding[*v],
                Pat::Op(..) => match nodes.get(*pos) {
                    Some(&m) => m,
                    None => return false,
                },
            };
            if uf.find(kn) != uf.find(expect) {
                return false;
            }
            if !self.check_instance(kp, nodes, pos, binding, uf) {
                return false;
            }
        }
        true
    }
}

/// Canonical e-nodes (one per signature) grouped by symbol and by class,
/// indexed by union-find roots.
struct EnodeIndex {
    root: Vec<u32>,
    roots: Vec<u32>,
    sym_start: Vec<usize>,
    by_sym: Vec<NodeId>,
    class_start: HashMap<u32, (usize, usize)>,
    by_class: Vec<NodeId>,
    sig: HashMap<[u32; MAX_ARITY + 1], NodeId>,
    kid_roots: Vec<[u32; MAX_ARITY]>,
    syms: Vec<u16>,
}

impl EnodeIndex {
    fn build(fa: &BoundedFreeAlgebra, uf: &mut UnionFind) -> EnodeIndex {
        let n = fa.nodes.len();
        let root: Vec<u32> = (0..n as u32).map(|i| uf.find(i)).collect();
        let mut roots: Vec<u32> = (0..n as u32).filter(|&i| root[i as usize] == i).collect();
        roots.sort_unstable();
        let mut sig = HashMap::with_capacity(n);
        let mut canon = Vec::new();
        let mut kid_roots = vec![[NONE; MAX_ARITY]; n];
        for (i, (node, kr)) in fa.nodes.iter().zip(kid_roots.iter_mut()).enumerate() {
            let mut key = [NONE; MAX_ARITY + 1];
            key[0] = node.sym as u32;
            for (j, &k) in node.kids().iter().enumerate() {
                key[j + 1] = root[k as usize];
                kr[j] = root[k as usize];
            }
            if let std::collections::hash_map::Entry::Vacant(e) = sig.entry(key) {
                e.insert(i as u32);
                canon.push(i as u32);
            }
        }
        let nsyms = fa.alphabet.len() + fa.ops.len();
        let mut by_sym = canon.clone();
        by_sym.sort_by_key(|&i| (fa.nodes[i as usize].sym, i));
        let mut sym_start = vec![0; nsyms + 1];
        for &i in &by_sym {
            sym_start[fa.nodes[i as usize].sym as usize + 1] += 1;
        }
        for s in 0..nsyms {
            sym_start[s + 1] += sym_start[s];
        }
        let mut by_class = canon;
        by_class.sort_by_key(|&i| (root[i as usize], i));
        let mut class_start = HashMap::new();
        let mut s = 0;
        while s < by_class.len() {
            let r = root[by_class[s] as usize];
            let mut e = s;
            while e < by_class.len() && root[by_class[e] as usize] == r {
                e += 1;
            }
            class_start.insert(r, (s, e));
            s = e;
        }
        let syms = fa.nodes.iter().map(|n| n.sym).collect();
        EnodeIndex {
            root,
            roots,
            sym_start,
            by_sym,
            class_start,
            by_class,
            sig,
            kid_roots,
            syms,
        }
    }

    fn by_sym(&self, sym: u16) -> &[NodeId] {
        &self.by_sym[self.sym_start[sym as usize]..self.sym_start[sym as usize + 1]]
    }

    fn class_enodes(&self, c: u32) -> &[NodeId] {
        match self.class_start.get(&c) {
            Some(&(s, e)) => &self.by_class[s..e],
            None => &[],
        }
    }

    fn match_pat(
        &self,
        p: &Pat,
        c: u32,
        binding: &mut Vec<u32>,
        nodes: &mut Vec<NodeId>,
        k: &mut dyn FnMut(&[u32], &[NodeId]),
    ) {
        match p {
            Pat::Var(v) => {
                if binding[*v] == NONE {
                    binding[*v] = c;
                    k(binding, nodes);
                    binding[*v] = NONE;
                } else if binding[*v] == c {
                    k(binding, nodes);
                }
            }
            Pat::Op(sym, kids) => {
                for &n in self.class_enodes(c) {
                    if self.syms[n as usize] != *sym {
                        continue;
                    }
                    nodes.push(n);
                    let kr = self.kid_roots[n as usize];
                    self.match_kids(kids, &kr[..kids.len()], binding, nodes, k);
                    nodes.truncate(nodes.len() - 1);
                }
            }
        }
    }

    fn match_kids(
        &self,
        pats: &[Pat],
        classes: &[u32],
        binding: &mut Vec<u32>,
        nodes: &mut Vec<NodeId>,
        k: &mut dyn FnMut(&[u32], &[NodeId]),
    ) {
        match pats.split_first() {
            None => k(binding, nodes),
            Some((p, rest)) => {
                let depth = nodes.len();
                let saved = binding.clone();
                let mut inner = |b: &[u32], ns: &[NodeId]| {
                    let mut b2 = b.to_vec();
                    let mut ns2 = ns.to_vec();
                    self.match_kids(rest, &classes[1..], &mut b2, &mut ns2, k);
                };
                self.match_pat(p, classes[0], binding, nodes, &mut inner);
                *binding = saved;
                nodes.truncate(depth);
            }
        }
    }

    /// Finds a universe node for the pattern under a class binding, pushing
    /// the chosen nodes in preorder.
    fn instantiate(&self, p: &Pat, binding: &[u32], nodes: &mut Vec<NodeId>) -> Option<u32> {
        match p {
            Pat::Var(v) => Some(binding[*v]),
            Pat::Op(sym, kids) => {
                let at = nodes.len();
                nodes.push(NONE);
                let mut key = [NONE; MAX_ARITY + 1];
                key[0] = *sym as u32;
                for (i, kp) in kids.iter().enumerate() {
                    key[i + 1] = self.instantiate(kp, binding, nodes)?;
                }
                let n = *self.sig.get(&key)?;
                nodes[at] = n;
                Some(self.root[n as usize])
            }
        }
    }
}

/// Number of ground terms with at most `bound` operation nodes over
/// `letters` letters, saturating at `u128::MAX`.
pub fn universe_size(p: &Presentation, letters: usize, bound: usize) -> u128 {
    // exact[s] = number of terms with exactly s operation nodes
    let mut exact = vec![0u128; bound + 1];
    exact[0] = letters as u128;
    for s in 1..=bound {
        let mut total = 0u128;
        for (_, arity) in p.signature.ops() {
            if *arity == 0 {
                if s == 1 {
                    total = total.saturating_add(1);
                }
                continue;
            }
            // ways to split s - 1 nodes among `arity` children
            let mut ways = vec![0u128; s];
            ways[0] = 1;
            for _ in 0..*arity {
                let mut next = vec![0u128; s];
                for (used, &w) in ways.iter().enumerate() {
                    if w == 0 {
                        continue;
                    }
                    for (k, &e) in exact.iter().enumerate().take(s - used) {
                        next[used + k] = next[used + k].saturating_add(w.saturating_mul(e));
                    }
                }
                ways = next;
            }
            total = total.saturating_add(ways[s - 1]);
        }
        exact[s] = total;
    }
    exact.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// The unit: a letter as a term.
pub fn unit(letter: &str) -> Term {
    Term::letter(letter)
}

/// Relabels the letters of `t` along `f`.
pub fn rename(f: &LetterMap, t: &Term) -> Result<Term> {
    match t {
        Term::Letter(a) => f
            .apply(a)
            .map(Term::letter)
            .ok_or_else(|| EngineError::Unmapped(a.clone())),
        Term::Var(v) => Ok(Term::Var(v.clone())),
        Term::App(op, kids) => Ok(Term::App(
            op.clone(),
            kids.iter().map(|k| rename(f, k)).collect::<Result<_>>()?,
        )),
    }
}

/// Substitutes terms for the handle letters of `t`.
pub fn flatten(t: &Term, binding: &BTreeMap<String, Term>) -> Result<Term> {
    match t {
        Term::Letter(h) => binding
            .get(h)
            .cloned()
            .ok_or_else(|| EngineError::Unmapped(h.clone())),
        Term::Var(v) => Ok(Term::Var(v.clone())),
        Term::App(op, kids) => Ok(Term::App(
            op.clone(),
            kids.iter().map(|k| flatten(k, binding)).collect::<Result<_>>()?,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;

    fn thy(src: &str) -> Presentation {
        parse_presentation(src).unwrap()
    }

    fn semigroup() -> Presentation {
        thy("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))")
    }

    fn x3x2() -> Presentation {
        thy("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot ?x (dot ?x ?x)) = (dot ?x ?x)")
    }

    #[test]
    fn universe_counts_binary_trees() {
        // 1 + 1 + 2 + 5 binary trees over one letter up to 3 nodes
        let f = BoundedFreeAlgebra::build(&thy("ops: dot/2"), &["a"], 3).unwrap();
        assert_eq!(f.num_nodes(), 9);
        assert_eq!(f.num_classes(), 9);
    }

    #[test]
    fn semigroup_words_within_bound() {
        let p = semigroup();
        let f = BoundedFreeAlgebra::build(&p, &["a"], 3).unwrap();
        // a, aa, aaa, aaaa
        assert_eq!(f.num_classes(), 4);
        let l = p.parse_term("(dot (dot a a) a)").unwrap();
        let r = p.parse_term("(dot a (dot a a))").unwrap();
        assert_eq!(f.decide_equal(&l, &r).unwrap(), EqVerdict::Equal);
        f.verify_proof().unwrap();
    }

    #[test]
    fn semigroup_distinct_words_are_definitive() {
        let p = semigroup();
        let f = BoundedFreeAlgebra::build(&p, &["a", "b"], 4).unwrap();
        let ab = p.parse_term("(dot a b)").unwrap();
        let ba = p.parse_term("(dot b a)").unwrap();
        assert!(f.decide_equal(&ab, &ba).unwrap().is_definitely_different());
    }

    #[test]
    fn x3x2_collapses_powers() {
        let p = x3x2();
        let f = BoundedFreeAlgebra::build(&p, &["a"], 4).unwrap();
        let aa = p.parse_term("(dot a a)").unwrap();
        let aaa = p.parse_term("(dot a (dot a a))").unwrap();
        assert!(f.decide_equal(&aa, &aaa).unwrap().is_equal());
        assert!(f.saturated());
        assert_eq!(f.num_classes(), 2);
        let words: Vec<String> = f
            .enumerate_class(&aa)
            .unwrap()
            .into_iter()
            .filter(|t| matches!(t, Term::App(_, k) if matches!(k[0], Term::Letter(_))))
            .map(|t| t.to_string())
            .collect();
        assert!(words.contains(&"(dot a (dot a (dot a a)))".to_string()));
        f.verify_proof().unwrap();
    }

    #[test]
    fn band_has_six_classes() {
        let p = thy("ops: dot/2\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot ?x ?x) = ?x");
        let f = BoundedFreeAlgebra::build(&p, &["a", "b"], 5).unwrap();
        assert!(f.saturated());
        assert_eq!(f.num_classes(), 6);
        let reps: Vec<String> = f.classes().map(|c| f.representative(c).to_string()).collect();
        assert_eq!(
            reps,
            ["a", "b", "(dot a b)", "(dot b a)", "(dot a (dot b a))", "(dot b (dot a b))"]
        );
        f.verify_proof().unwrap();
    }

    #[test]
    fn group_inverse_is_unit() {
        let p = thy("ops: dot/2, inv/1, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x\neq: (dot ?x (inv ?x)) = e\neq: (dot (inv ?x) ?x) = e");
        let f = BoundedFreeAlgebra::build(&p, &["a"], 3).unwrap();
        let t = p.parse_term("(dot a (inv a))").unwrap();
        assert!(f.decide_equal(&t, &Term::constant("e")).unwrap().is_equal());
        f.verify_proof().unwrap();
    }

    #[test]
    fn empty_theory_classes_are_singletons() {
        let p = thy("ops: dot/2");
        let f = BoundedFreeAlgebra::build(&p, &["a", "b"], 2).unwrap();
        let t = p.parse_term("(dot a b)").unwrap();
        assert_eq!(f.enumerate_class(&t).unwrap(), vec![t]);
    }

    #[test]
    fn monoid_unit_class() {
        let p = thy("ops: dot/2, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x");
        let f = BoundedFreeAlgebra::build(&p, &["a"], 3).unwrap();
        let cls: Vec<String> = f
            .enumerate_class(&Term::letter("a"))
            .unwrap()
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert_eq!(cls[0], "a");
        assert!(cls.contains(&"(dot a e)".to_string()));
        assert!(cls.contains(&"(dot e a)".to_string()));
        assert!(!f.is_closed(f.letter_class("a").unwrap()));
    }

    #[test]
    fn budget_error_names_bound() {
        let opts = BuildOptions {
            max_nodes: 10,
            ..BuildOptions::default()
        };
        let err = BoundedFreeAlgebra::build_with(&semigroup(), &["a".into()], 5, &opts).unwrap_err();
        assert_eq!(err, EngineError::Budget { bound: 5, budget: 10 });
    }

    #[test]
    fn structure_maps() {
        let f = LetterMap::parse("a->c,b->c", None).unwrap();
        let t = Term::app2("dot", Term::letter("a"), Term::letter("b"));
        assert_eq!(rename(&f, &t).unwrap().to_string(), "(dot c c)");
        let u = Term::app2("dot", Term::letter("h1"), Term::letter("h2"));
        let b: BTreeMap<String, Term> = [("h1".to_string(), t.clone()), ("h2".to_string(), Term::letter("c"))].into();
        assert_eq!(flatten(&u, &b).unwrap().to_string(), "(dot (dot a b) c)");
        assert_eq!(rename(&f, &unit("a")).unwrap(), unit("c"));
        assert!(rename(&f, &Term::letter("z")).is_err());
    }

    #[test]
    fn universe_size_matches_enumeration() {
        let p = thy("ops: dot/2, inv/1, e/0");
        for bound in 1..=4 {
            let f = BoundedFreeAlgebra::build(&p, &["a", "b"], bound).unwrap();
            assert_eq!(universe_size(&p, 2, bound), f.num_nodes() as u128);
        }
    }
}
