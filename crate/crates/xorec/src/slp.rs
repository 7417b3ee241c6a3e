//! Straight-line XOR programs: representation, set semantics, and metrics.
//!
//! A program is a list of XOR instructions over *terms* — constants (the
//! input arrays), original variables, and temporals introduced by the
//! compressor — plus an ordered return list. Two forms share the
//! representation:
//!
//! * [`Form::Binary`]: an instruction `v ← t1 ⊕ t2 ⊕ … ⊕ tk` abbreviates a
//!   chain of k−1 two-operand XORs accumulating into `v`. Each of those XORs
//!   costs three memory accesses when run over byte arrays.
//! * [`Form::Multi`]: the same instruction is a single variadic XOR kernel
//!   call reading k blocks and writing one, i.e. k+1 accesses. Fusion is the
//!   pass that moves a program from the first form to the second.
//!
//! Semantics are set-based: a constant denotes the singleton set of itself
//! and `⊕` is symmetric difference, so a variable's value is the set of
//! constants that survive cancellation. Every optimization pass must
//! preserve [`Slp::result`] under this semantics.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::gf256::BitMatrix;

/// A constant, temporal variable, or original variable.
///
/// The derived `Ord` is the total order `≺` used everywhere for tie-breaking:
/// temporals in creation order, then original variables in definition order,
/// then constants by index.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Temp(u32),
    Var(u32),
    Const(u32),
}

impl Term {
    pub fn is_var(self) -> bool {
        !matches!(self, Term::Const(_))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Temp(i) => write!(f, "t{i}"),
            Term::Var(i) => write!(f, "v{i}"),
            Term::Const(i) => write!(f, "c{i}"),
        }
    }
}

/// `target ← operand_1 ⊕ … ⊕ operand_k`, k ≥ 2, no duplicate operands.
///
/// Operand order is preserved (it is the memory access order under the cache
/// model) but comparisons for the set semantics ignore it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instruction {
    pub target: Term,
    pub operands: Vec<Term>,
}

/// A goal that is verbatim one term — an identity row of a coding matrix.
/// Copies ride along outside the optimization pipeline and the metrics.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct CopyGoal {
    pub target: Term,
    pub source: Term,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Form {
    /// Nested binary XOR chains, one accumulator per instruction.
    Binary,
    /// Flat variadic XORs; no nesting remains.
    Multi,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Slp {
    pub num_consts: u32,
    pub form: Form,
    pub instrs: Vec<Instruction>,
    pub copies: Vec<CopyGoal>,
    pub returns: Vec<Term>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlpError {
    #[error("instruction {0} has fewer than two operands")]
    TooFewOperands(usize),
    #[error("instruction {0} repeats operand {1}")]
    DuplicateOperand(usize, Term),
    #[error("constant {0} cannot be assigned")]
    ConstTarget(Term),
    #[error("use of {0} before definition")]
    UseBeforeDef(Term),
    #[error("returned variable {0} is never defined")]
    UndefinedReturn(Term),
    #[error("constant index {0} out of range")]
    ConstOutOfRange(Term),
    #[error("bitmatrix row {0} is all zero: goal cannot be encoded")]
    ZeroRow(usize),
    #[error("program is not in single-assignment form: {0} is assigned twice")]
    NotSingleAssignment(Term),
    #[error("parse error at line {0}: {1}")]
    Parse(usize, String),
}

/// A set of constant indices: the denotation of a term under the symmetric
/// difference semantics.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ValueSet {
    bits: Vec<u64>,
}

impl ValueSet {
    pub fn empty(num_consts: u32) -> Self {
        ValueSet { bits: vec![0; (num_consts as usize + 63) / 64] }
    }

    pub fn singleton(num_consts: u32, c: u32) -> Self {
        let mut s = Self::empty(num_consts);
        s.toggle(c);
        s
    }

    pub fn from_indices(num_consts: u32, idx: &[u32]) -> Self {
        let mut s = Self::empty(num_consts);
        for &i in idx {
            s.toggle(i);
        }
        s
    }

    #[inline]
    pub fn toggle(&mut self, c: u32) {
        self.bits[c as usize / 64] ^= 1 << (c % 64);
    }

    #[inline]
    pub fn contains(&self, c: u32) -> bool {
        self.bits[c as usize / 64] >> (c % 64) & 1 == 1
    }

    /// Symmetric difference, in place.
    #[inline]
    pub fn xor_assign(&mut self, rhs: &ValueSet) {
        debug_assert_eq!(self.bits.len(), rhs.bits.len());
        for (a, b) in self.bits.iter_mut().zip(&rhs.bits) {
            *a ^= b;
        }
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Size of the symmetric difference with `rhs`, without allocating.
    pub fn xor_len(&self, rhs: &ValueSet) -> usize {
        self.bits.iter().zip(&rhs.bits).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| (w * 64 + b) as u32)
        })
    }
}

impl fmt::Debug for ValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, c) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "c{c}")?;
        }
        write!(f, "}}")
    }
}

impl Slp {
    pub fn new(num_consts: u32, form: Form) -> Self {
        Slp { num_consts, form, instrs: Vec::new(), copies: Vec::new(), returns: Vec::new() }
    }

    /// Structural well-formedness. Reassignment of a variable is legal (the
    /// scheduler reuses pebbles); use-before-definition is not.
    pub fn validate(&self) -> Result<(), SlpError> {
        let mut defined: HashSet<Term> = HashSet::new();
        let check_use = |t: Term, defined: &HashSet<Term>| match t {
            Term::Const(i) if i >= self.num_consts => Err(SlpError::ConstOutOfRange(t)),
            Term::Const(_) => Ok(()),
            v if defined.contains(&v) => Ok(()),
            v => Err(SlpError::UseBeforeDef(v)),
        };
        for (i, ins) in self.instrs.iter().enumerate() {
            if ins.operands.len() < 2 {
                return Err(SlpError::TooFewOperands(i));
            }
            let mut seen = HashSet::new();
            for &op in &ins.operands {
                if !seen.insert(op) {
                    return Err(SlpError::DuplicateOperand(i, op));
                }
                check_use(op, &defined)?;
            }
            if !ins.target.is_var() {
                return Err(SlpError::ConstTarget(ins.target));
            }
            defined.insert(ins.target);
        }
        for cp in &self.copies {
            check_use(cp.source, &defined)?;
            if !cp.target.is_var() {
                return Err(SlpError::ConstTarget(cp.target));
            }
            defined.insert(cp.target);
        }
        for &r in &self.returns {
            if !r.is_var() {
                return Err(SlpError::ConstTarget(r));
            }
            if !defined.contains(&r) {
                return Err(SlpError::UndefinedReturn(r));
            }
        }
        Ok(())
    }

    /// True when every variable is assigned exactly once.
    pub fn is_single_assignment(&self) -> bool {
        let mut seen = HashSet::new();
        self.instrs
            .iter()
            .map(|i| i.target)
            .chain(self.copies.iter().map(|c| c.target))
            .all(|t| seen.insert(t))
    }

    /// Forward pass assigning every variable its value set; returns the final
    /// binding of each variable.
    pub fn eval(&self) -> Result<HashMap<Term, ValueSet>, SlpError> {
        self.validate()?;
        let mut env: HashMap<Term, ValueSet> = HashMap::new();
        for ins in &self.instrs {
            let mut acc = ValueSet::empty(self.num_consts);
            for &op in &ins.operands {
                match op {
                    Term::Const(c) => acc.toggle(c),
                    v => acc.xor_assign(&env[&v]),
                }
            }
            env.insert(ins.target, acc);
        }
        for cp in &self.copies {
            let v = match cp.source {
                Term::Const(c) => ValueSet::singleton(self.num_consts, c),
                v => env[&v].clone(),
            };
            env.insert(cp.target, v);
        }
        Ok(env)
    }

    /// The returned value sets, in return order.
    pub fn result(&self) -> Result<Vec<ValueSet>, SlpError> {
        let env = self.eval()?;
        Ok(self.returns.iter().map(|r| env[r].clone()).collect())
    }

    /// Number of two-operand XOR operations: Σ (arity − 1).
    pub fn count_xor(&self) -> usize {
        self.instrs.iter().map(|i| i.operands.len() - 1).sum()
    }

    /// Memory accesses when run over byte arrays. A variadic XOR of arity k
    /// reads k blocks and writes one; a binary chain of the same arity pays
    /// three accesses per XOR.
    pub fn count_mem(&self) -> usize {
        match self.form {
            Form::Multi => self.instrs.iter().map(|i| i.operands.len() + 1).sum(),
            Form::Binary => 3 * self.count_xor(),
        }
    }

    /// Number of distinct assigned variables (copy goals excluded).
    pub fn nvar(&self) -> usize {
        self.instrs.iter().map(|i| i.target).collect::<HashSet<_>>().len()
    }

    /// XOR kernel invocations when interpreted: one per binary XOR in binary
    /// form, one per (fused) instruction in multi form. This is the count
    /// that stays comparable across the fusion boundary in reports.
    pub fn kernel_calls(&self) -> usize {
        match self.form {
            Form::Binary => self.count_xor(),
            Form::Multi => self.instrs.len(),
        }
    }

    /// Every term the program mentions, constants included.
    pub fn terms(&self) -> BTreeSet<Term> {
        let mut s = BTreeSet::new();
        for ins in &self.instrs {
            s.insert(ins.target);
            s.extend(ins.operands.iter().copied());
        }
        for cp in &self.copies {
            s.insert(cp.target);
            s.insert(cp.source);
        }
        s.extend(self.returns.iter().copied());
        s
    }
}

/// Lowers a bitmatrix to a program: one goal per row, XORing the input
/// packets at the row's set bits (ascending). Rows with a single set bit
/// become copy goals; an all-zero row has no encoding and is an error.
pub fn from_bitmatrix(m: &BitMatrix) -> Result<Slp, SlpError> {
    let mut slp = Slp::new(m.cols() as u32, Form::Binary);
    for r in 0..m.rows() {
        let cols = m.row_columns(r);
        let target = Term::Var(r as u32);
        match cols.len() {
            0 => return Err(SlpError::ZeroRow(r)),
            1 => slp.copies.push(CopyGoal { target, source: Term::Const(cols[0] as u32) }),
            _ => slp.instrs.push(Instruction {
                target,
                operands: cols.into_iter().map(|c| Term::Const(c as u32)).collect(),
            }),
        }
        slp.returns.push(target);
    }
    Ok(slp)
}

/// Adversarial optimizer input derived from a simple undirected graph: each
/// node gains two private neighbours, and every edge (x, y) of the augmented
/// graph becomes a three-term goal `ρ ⊕ x ⊕ y`. The cheapest equivalent
/// program must pay for a vertex cover, which makes these instances hard for
/// any memory-access minimizer.
///
/// Constants: `c0` = ρ, then one per node, then the two private neighbours
/// of each node in node order.
pub fn vcp_instance(num_nodes: usize, edges: &[(u32, u32)]) -> Result<Slp, SlpError> {
    let node = |a: u32| Term::Const(1 + a);
    let lambda = |a: u32| Term::Const(1 + num_nodes as u32 + 2 * a);
    let mu = |a: u32| Term::Const(1 + num_nodes as u32 + 2 * a + 1);
    let rho = Term::Const(0);

    let mut slp = Slp::new(1 + 3 * num_nodes as u32, Form::Binary);
    let mut seen = HashSet::new();
    let mut goal = 0u32;
    let mut push = |slp: &mut Slp, x: Term, y: Term| {
        let target = Term::Var(goal);
        goal += 1;
        slp.instrs.push(Instruction { target, operands: vec![rho, x, y] });
        slp.returns.push(target);
    };
    for &(a, b) in edges {
        if a == b || a as usize >= num_nodes || b as usize >= num_nodes {
            return Err(SlpError::Parse(0, format!("bad edge ({a}, {b})")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        push(&mut slp, node(a), node(b));
    }
    for a in 0..num_nodes as u32 {
        push(&mut slp, node(a), lambda(a));
        push(&mut slp, node(a), mu(a));
    }
    Ok(slp)
}

impl fmt::Display for Slp {
    /// The shared text format: one instruction per line
    /// `v0 = c1 ^ c2 [^ …]`, copies as `v3 = c7`, then `return v0 v3 …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instrs {
            write!(f, "{} =", ins.target)?;
            for (k, op) in ins.operands.iter().enumerate() {
                if k == 0 {
                    write!(f, " {op}")?;
                } else {
                    write!(f, " ^ {op}")?;
                }
            }
            writeln!(f)?;
        }
        for cp in &self.copies {
            writeln!(f, "{} = {}", cp.target, cp.source)?;
        }
        write!(f, "return")?;
        for r in &self.returns {
            write!(f, " {r}")?;
        }
        writeln!(f)
    }
}

fn parse_term(tok: &str, line: usize) -> Result<Term, SlpError> {
    let (kind, idx) = tok.split_at(1);
    let idx: u32 = idx
        .parse()
        .map_err(|_| SlpError::Parse(line, format!("bad term `{tok}`")))?;
    match kind {
        "c" => Ok(Term::Const(idx)),
        "t" => Ok(Term::Temp(idx)),
        "v" => Ok(Term::Var(idx)),
        _ => Err(SlpError::Parse(line, format!("bad term `{tok}`"))),
    }
}

/// Parses the text format. The program is read in binary form; run it
/// through fusion to reinterpret it as variadic kernels.
pub fn parse_text(input: &str) -> Result<Slp, SlpError> {
    let mut slp = Slp::new(0, Form::Binary);
    let mut max_const = 0u32;
    let mut saw_return = false;
    for (ln, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if saw_return {
            return Err(SlpError::Parse(ln + 1, "text after return".into()));
        }
        if let Some(rest) = line.strip_prefix("return") {
            for tok in rest.split_whitespace() {
                slp.returns.push(parse_term(tok, ln + 1)?);
            }
            saw_return = true;
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| SlpError::Parse(ln + 1, "expected `=`".into()))?;
        let target = parse_term(lhs.trim(), ln + 1)?;
        let mut operands = Vec::new();
        for tok in rhs.split('^') {
            let tok = tok.trim();
            if tok.is_empty() {
                return Err(SlpError::Parse(ln + 1, "empty operand".into()));
            }
            let t = parse_term(tok, ln + 1)?;
            if let Term::Const(i) = t {
                max_const = max_const.max(i + 1);
            }
            operands.push(t);
        }
        match operands.len() {
            0 => return Err(SlpError::Parse(ln + 1, "no operands".into())),
            1 => slp.copies.push(CopyGoal { target, source: operands[0] }),
            _ => slp.instrs.push(Instruction { target, operands }),
        }
    }
    if !saw_return {
        return Err(SlpError::Parse(0, "missing return line".into()));
    }
    slp.num_consts = max_const;
    slp.validate()?;
    Ok(slp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf256::{BitMatrix, GfMatrix};

    /// The worked three-goal example: v0 ← a⊕b; v1 ← b⊕c⊕d; v2 ← v0⊕v1.
    pub(crate) fn example_p() -> Slp {
        parse_text(
            "v0 = c0 ^ c1\n\
             v1 = c1 ^ c2 ^ c3\n\
             v2 = v0 ^ v1\n\
             return v1 v2 v0\n",
        )
        .unwrap()
    }

    /// Four nested prefixes plus a tail: the canonical compression example.
    pub(crate) fn example_p0() -> Slp {
        parse_text(
            "v0 = c0 ^ c1\n\
             v1 = c0 ^ c1 ^ c2\n\
             v2 = c0 ^ c1 ^ c2 ^ c3\n\
             v3 = c1 ^ c2 ^ c3\n\
             return v0 v1 v2 v3\n",
        )
        .unwrap()
    }

    fn vs(n: u32, idx: &[u32]) -> ValueSet {
        ValueSet::from_indices(n, idx)
    }

    #[test]
    fn eval_example() {
        let p = example_p();
        let env = p.eval().unwrap();
        assert_eq!(env[&Term::Var(0)], vs(4, &[0, 1]));
        assert_eq!(env[&Term::Var(1)], vs(4, &[1, 2, 3]));
        assert_eq!(env[&Term::Var(2)], vs(4, &[0, 2, 3]));
    }

    #[test]
    fn eval_rejects_duplicate_operands() {
        let p = Slp {
            num_consts: 1,
            form: Form::Binary,
            instrs: vec![Instruction {
                target: Term::Var(0),
                operands: vec![Term::Const(0), Term::Const(0)],
            }],
            copies: vec![],
            returns: vec![Term::Var(0)],
        };
        assert_eq!(p.eval().unwrap_err(), SlpError::DuplicateOperand(0, Term::Const(0)));
    }

    #[test]
    fn eval_cancellation() {
        let p = parse_text("v0 = c0 ^ c1\nv1 = v0 ^ c0\nreturn v1\n").unwrap();
        assert_eq!(p.result().unwrap(), vec![vs(2, &[1])]);
    }

    #[test]
    fn result_order_and_empty() {
        let p = example_p();
        assert_eq!(
            p.result().unwrap(),
            vec![vs(4, &[1, 2, 3]), vs(4, &[0, 2, 3]), vs(4, &[0, 1])]
        );

        let mut q = example_p();
        q.returns.clear();
        assert!(q.result().unwrap().is_empty());

        assert_eq!(
            example_p0().result().unwrap(),
            vec![vs(4, &[0, 1]), vs(4, &[0, 1, 2]), vs(4, &[0, 1, 2, 3]), vs(4, &[1, 2, 3])]
        );
    }

    #[test]
    fn metric_counts() {
        assert_eq!(example_p().count_xor(), 4);
        assert_eq!(example_p0().count_xor(), 8);
        let single = parse_text("v0 = c0 ^ c1\nreturn v0\n").unwrap();
        assert_eq!(single.count_xor(), 1);

        assert_eq!(example_p().nvar(), 3);
        assert_eq!(Slp::new(0, Form::Binary).nvar(), 0);

        // a variadic 4-way XOR reads four blocks and writes one
        let mut multi = parse_text("v0 = c0 ^ c1 ^ c2 ^ c3\nreturn v0\n").unwrap();
        multi.form = Form::Multi;
        assert_eq!(multi.count_mem(), 5);

        // the same text in binary form is three chained XORs
        let chain = parse_text("v0 = c0 ^ c1\nv1 = v0 ^ c2\nv2 = v1 ^ c3\nreturn v2\n").unwrap();
        assert_eq!(chain.count_mem(), 9);
    }

    #[test]
    fn mem_is_xor_plus_two_per_instr_in_multi_form() {
        let mut p = example_p();
        p.form = Form::Multi;
        assert_eq!(p.count_mem(), p.count_xor() + 2 * p.instrs.len());
    }

    #[test]
    fn eval_is_operand_order_independent() {
        let p = example_p();
        let mut q = p.clone();
        for ins in &mut q.instrs {
            ins.operands.reverse();
        }
        assert_eq!(p.result().unwrap(), q.result().unwrap());
    }

    #[test]
    fn from_bitmatrix_example() {
        // the 3×7 introduction matrix: rows {0,1}, {2,3,4,5}, {2,3,4,6}
        let mut m = BitMatrix::zero(8, 8);
        for c in [0, 1] {
            m.set(0, c, true);
        }
        for c in [2, 3, 4, 5] {
            m.set(1, c, true);
        }
        for c in [2, 3, 4, 6] {
            m.set(2, c, true);
        }
        for c in 0..8 {
            m.set(3, c, true); // filler rows to keep dimensions multiple of 8
        }
        for r in 4..8 {
            m.set(r, r, true);
        }
        let p = from_bitmatrix(&m).unwrap();
        assert_eq!(p.instrs.len() + p.copies.len(), 8);
        assert_eq!(p.instrs[0].operands, vec![Term::Const(0), Term::Const(1)]);
        assert_eq!(p.instrs[1].operands.len(), 4);
        // identity rows 4..8 became copy goals
        assert_eq!(p.copies.len(), 4);
        // a goal's value set is exactly the row's set bits
        let env = p.eval().unwrap();
        for r in 0..8 {
            let want =
                ValueSet::from_indices(8, &m.row_columns(r).iter().map(|&c| c as u32).collect::<Vec<_>>());
            assert_eq!(env[&p.returns[r]], want);
        }
    }

    #[test]
    fn from_bitmatrix_rejects_zero_row() {
        let m = BitMatrix::zero(8, 8);
        assert_eq!(from_bitmatrix(&m).unwrap_err(), SlpError::ZeroRow(0));
    }

    #[test]
    fn from_bitmatrix_xor_count_is_popcount_sum() {
        let m = GfMatrix::identity(2).to_bitmatrix();
        let p = from_bitmatrix(&m).unwrap();
        assert_eq!(p.count_xor(), 0);
        assert_eq!(p.copies.len(), 16);

        let v = crate::gf256::vandermonde(4, 2).unwrap();
        let b = crate::gf256::systematize(&v).unwrap().select_rows(&[4, 5]).to_bitmatrix();
        let p = from_bitmatrix(&b).unwrap();
        let want: usize = (0..b.rows()).map(|r| b.row_popcount(r) - 1).sum();
        assert_eq!(p.count_xor(), want);
    }

    #[test]
    fn vcp_goal_counts() {
        // empty graph on k nodes: only the 2k private edges
        let p = vcp_instance(5, &[]).unwrap();
        assert_eq!(p.returns.len(), 10);

        // the four-node worked graph with edges (a,b), (a,c), (c,d)
        let p = vcp_instance(4, &[(0, 1), (0, 2), (2, 3)]).unwrap();
        assert_eq!(p.returns.len(), 11);
        assert!(p.instrs.iter().all(|i| i.operands.len() == 3));
        assert!(p.instrs.iter().all(|i| i.operands[0] == Term::Const(0)));
    }

    #[test]
    fn text_roundtrip() {
        let p = example_p();
        let q = parse_text(&p.to_string()).unwrap();
        assert_eq!(p, q);

        assert!(parse_text("v0 = c0 ^\nreturn v0\n").is_err());
        assert!(parse_text("v0 = c0 ^ c1\n").is_err());
        assert!(parse_text("v0 = c0 ^ x1\nreturn v0\n").is_err());
    }

    #[test]
    fn validate_catches_use_before_def() {
        assert_eq!(
            parse_text("v0 = v1 ^ c0\nreturn v0\n").unwrap_err(),
            SlpError::UseBeforeDef(Term::Var(1))
        );
        assert_eq!(
            parse_text("v0 = c0 ^ c1\nreturn v2\n").unwrap_err(),
            SlpError::UndefinedReturn(Term::Var(2))
        );
    }

    #[test]
    fn order_on_terms_is_temporals_originals_constants() {
        assert!(Term::Temp(3) < Term::Var(0));
        assert!(Term::Var(9) < Term::Const(0));
        assert!(Term::Temp(0) < Term::Temp(1));
        assert!(Term::Const(2) < Term::Const(10));
    }
}
