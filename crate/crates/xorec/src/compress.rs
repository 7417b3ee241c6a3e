//! XOR-count reduction: recursive pairing, and pairing plus
//! cancellation-aware rebuilding.
//!
//! The compressor works on the *goals* of a program: each returned variable
//! is flattened to its value set over constants, becoming an "original"
//! definition. Pairing ([`apply_pair`]) replaces the most frequent
//! two-term combination across original definitions with a fresh temporal;
//! [`repair`] iterates that to a fixpoint. [`xor_repair`] additionally
//! rewrites originals through [`rebuild`], which XORs existing temporals
//! into a goal's value whenever cancellation shortens its definition — the
//! move plain pairing can never find.
//!
//! Both passes run until no original remains, so their output is a pure
//! chain of binary temporal definitions with the return list remapped onto
//! temporals. All ties are broken by the term order `≺` (pairs by its
//! lexicographic extension), which makes the passes deterministic.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::slp::{CopyGoal, Form, Instruction, Slp, SlpError, Term, ValueSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompressError {
    #[error(transparent)]
    Slp(#[from] SlpError),
    #[error("pair {0} occurs in no original definition")]
    PairAbsent(PairKey),
    #[error("goal {0} has the empty value set and cannot be encoded")]
    EmptyGoal(Term),
    #[error("{0} is not an original variable of the program")]
    NotOriginal(Term),
}

/// An unordered pair of terms, canonicalized so `lo ≺ hi`. The derived `Ord`
/// is the lexicographic extension `⊏` used to break frequency ties.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PairKey {
    pub lo: Term,
    pub hi: Term,
}

impl PairKey {
    pub fn new(a: Term, b: Term) -> PairKey {
        assert_ne!(a, b, "a pair needs two distinct terms");
        if a < b {
            PairKey { lo: a, hi: b }
        } else {
            PairKey { lo: b, hi: a }
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// What became of an original definition.
enum Fate {
    /// Still below the line, defined by this term set.
    Alive,
    /// Shrunk to a single temporal that now carries the goal.
    Alias(Term),
    /// Shrunk to a single constant: demoted to a copy goal.
    CopyOf(Term),
}

struct Orig {
    def: BTreeSet<Term>,
    value: ValueSet,
    fate: Fate,
}

/// Incremental frequency table over `PairKey`s, bucketed by count so the
/// most frequent, `⊏`-smallest pair is O(log) away.
#[derive(Default)]
struct PairTable {
    counts: HashMap<PairKey, usize>,
    buckets: Vec<BTreeSet<PairKey>>,
    max_count: usize,
}

impl PairTable {
    fn inc(&mut self, key: PairKey) {
        let c = self.counts.entry(key).or_insert(0);
        if *c > 0 {
            self.buckets[*c].remove(&key);
        }
        *c += 1;
        if self.buckets.len() <= *c {
            self.buckets.resize_with(*c + 1, BTreeSet::new);
        }
        self.buckets[*c].insert(key);
        self.max_count = self.max_count.max(*c);
    }

    fn dec(&mut self, key: PairKey) {
        let c = self.counts.get_mut(&key).expect("decrement of untracked pair");
        self.buckets[*c].remove(&key);
        *c -= 1;
        if *c == 0 {
            self.counts.remove(&key);
        } else {
            let c = *c;
            self.buckets[c].insert(key);
        }
    }

    fn most_frequent(&mut self) -> Option<PairKey> {
        while self.max_count > 0 && self.buckets[self.max_count].is_empty() {
            self.max_count -= 1;
        }
        if self.max_count == 0 {
            return None;
        }
        self.buckets[self.max_count].iter().next().copied()
    }

    fn count(&self, key: PairKey) -> usize {
        self.counts.get(&key).copied().unwrap_or(0)
    }
}

struct Compressor {
    num_consts: u32,
    /// Temporal definitions in creation order: `t_i ← lo ⊕ hi`.
    temps: Vec<(Term, Term, ValueSet)>,
    origs: Vec<Orig>,
    /// Alive originals containing a given term.
    occ: HashMap<Term, BTreeSet<usize>>,
    pairs: PairTable,
    alive: usize,
    /// Original return list, with each entry resolved at the end.
    returns: Vec<RetEntry>,
    copies: Vec<CopyGoal>,
}

enum RetEntry {
    Orig(usize),
    Passthrough(Term),
}

impl Compressor {
    fn setup(p: &Slp) -> Result<Compressor, CompressError> {
        let env = p.eval()?;
        let copy_targets: BTreeSet<Term> = p.copies.iter().map(|c| c.target).collect();

        // distinct returned variables, in definition order
        let mut order: HashMap<Term, usize> = HashMap::new();
        for (i, ins) in p.instrs.iter().enumerate() {
            order.entry(ins.target).or_insert(i);
        }
        let mut goals: Vec<Term> = p
            .returns
            .iter()
            .copied()
            .filter(|t| !copy_targets.contains(t))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        goals.sort_by_key(|t| order[t]);

        let mut c = Compressor {
            num_consts: p.num_consts,
            temps: Vec::new(),
            origs: Vec::new(),
            occ: HashMap::new(),
            pairs: PairTable::default(),
            alive: 0,
            returns: Vec::new(),
            copies: p.copies.clone(),
        };

        let mut of_goal: HashMap<Term, usize> = HashMap::new();
        for (o, &g) in goals.iter().enumerate() {
            let value = env[&g].clone();
            if value.is_empty() {
                return Err(CompressError::EmptyGoal(g));
            }
            let def: BTreeSet<Term> = value.iter().map(Term::Const).collect();
            let fate = if def.len() == 1 {
                Fate::CopyOf(*def.iter().next().unwrap())
            } else {
                c.alive += 1;
                for &t in &def {
                    c.occ.entry(t).or_default().insert(o);
                }
                let terms: Vec<Term> = def.iter().copied().collect();
                for i in 0..terms.len() {
                    for j in i + 1..terms.len() {
                        c.pairs.inc(PairKey::new(terms[i], terms[j]));
                    }
                }
                Fate::Alive
            };
            c.origs.push(Orig { def, value, fate });
            of_goal.insert(g, o);
        }
        c.returns = p
            .returns
            .iter()
            .map(|t| match of_goal.get(t) {
                Some(&o) => RetEntry::Orig(o),
                None => RetEntry::Passthrough(*t),
            })
            .collect();
        Ok(c)
    }

    fn value_of(&self, t: Term) -> ValueSet {
        match t {
            Term::Const(i) => ValueSet::singleton(self.num_consts, i),
            Term::Temp(i) => self.temps[i as usize].2.clone(),
            Term::Var(_) => unreachable!("definitions hold constants and temporals only"),
        }
    }

    /// Replaces the pair in every original definition containing both terms
    /// with a fresh temporal.
    fn apply_pair(&mut self, key: PairKey) -> Result<(), CompressError> {
        let affected: Vec<usize> = match (self.occ.get(&key.lo), self.occ.get(&key.hi)) {
            (Some(a), Some(b)) => a.intersection(b).copied().collect(),
            _ => Vec::new(),
        };
        if affected.is_empty() {
            return Err(CompressError::PairAbsent(key));
        }
        let mut value = self.value_of(key.lo);
        value.xor_assign(&self.value_of(key.hi));
        let t = Term::Temp(self.temps.len() as u32);
        self.temps.push((key.lo, key.hi, value));

        for o in affected {
            let def = &mut self.origs[o].def;
            def.remove(&key.lo);
            def.remove(&key.hi);
            for &z in def.iter() {
                self.pairs.dec(PairKey::new(z, key.lo));
                self.pairs.dec(PairKey::new(z, key.hi));
                self.pairs.inc(PairKey::new(z, t));
            }
            self.pairs.dec(key);
            self.occ.get_mut(&key.lo).unwrap().remove(&o);
            self.occ.get_mut(&key.hi).unwrap().remove(&o);
            self.origs[o].def.insert(t);
            self.occ.entry(t).or_default().insert(o);
            if self.origs[o].def.len() == 1 {
                self.retire(o, Fate::Alias(t));
            }
        }
        Ok(())
    }

    /// Removes an original from the live tables.
    fn retire(&mut self, o: usize, fate: Fate) {
        let def = std::mem::take(&mut self.origs[o].def);
        let terms: Vec<Term> = def.iter().copied().collect();
        for i in 0..terms.len() {
            self.occ.get_mut(&terms[i]).unwrap().remove(&o);
            for j in i + 1..terms.len() {
                self.pairs.dec(PairKey::new(terms[i], terms[j]));
            }
        }
        self.origs[o].fate = fate;
        self.alive -= 1;
    }

    /// Greedy cancellation-aware redefinition of original `o`: XOR in the
    /// temporal that shrinks the remainder most (ties to the `≺`-smallest),
    /// while any strictly shrinks it.
    fn rebuild_def(&self, o: usize) -> (ValueSet, Vec<u32>) {
        let mut rem = self.origs[o].value.clone();
        let mut picked: Vec<u32> = Vec::new();
        loop {
            let mut best: Option<(usize, u32)> = None;
            for (i, (_, _, val)) in self.temps.iter().enumerate() {
                let shrunk = rem.xor_len(val);
                if shrunk < best.map_or(rem.len(), |(s, _)| s) {
                    best = Some((shrunk, i as u32));
                }
            }
            match best {
                Some((_, i)) => {
                    rem.xor_assign(&self.temps[i as usize].2);
                    picked.push(i);
                }
                None => return (rem, picked),
            }
        }
    }

    /// One scan of step (3): replace any original whose rebuilt definition
    /// is strictly smaller.
    fn rebuild_pass(&mut self) {
        for o in 0..self.origs.len() {
            if !matches!(self.origs[o].fate, Fate::Alive) {
                continue;
            }
            let (rem, picked) = self.rebuild_def(o);
            let new_size = rem.len() + picked.len();
            // Accept a rebuild that does not grow the definition. The
            // equal-size case still restructures it towards temporals, which
            // later pairings exploit; rewriting a definition to itself is
            // skipped as a no-op.
            if new_size > self.origs[o].def.len() {
                continue;
            }
            if new_size == self.origs[o].def.len() {
                let same = rem.iter().map(Term::Const).all(|t| self.origs[o].def.contains(&t))
                    && picked.iter().all(|&i| self.origs[o].def.contains(&Term::Temp(i)));
                if same {
                    continue;
                }
            }
            // drop the old definition from the tables
            let old = std::mem::take(&mut self.origs[o].def);
            let terms: Vec<Term> = old.iter().copied().collect();
            for i in 0..terms.len() {
                self.occ.get_mut(&terms[i]).unwrap().remove(&o);
                for j in i + 1..terms.len() {
                    self.pairs.dec(PairKey::new(terms[i], terms[j]));
                }
            }
            let def: BTreeSet<Term> = rem
                .iter()
                .map(Term::Const)
                .chain(picked.iter().map(|&i| Term::Temp(i)))
                .collect();
            if def.len() == 1 {
                let only = *def.iter().next().unwrap();
                self.origs[o].fate = match only {
                    Term::Temp(_) => Fate::Alias(only),
                    Term::Const(_) => Fate::CopyOf(only),
                    Term::Var(_) => unreachable!(),
                };
                self.alive -= 1;
                continue;
            }
            let terms: Vec<Term> = def.iter().copied().collect();
            for i in 0..terms.len() {
                self.occ.entry(terms[i]).or_default().insert(o);
                for j in i + 1..terms.len() {
                    self.pairs.inc(PairKey::new(terms[i], terms[j]));
                }
            }
            self.origs[o].def = def;
        }
    }

    fn finish(mut self) -> Slp {
        let mut out = Slp::new(self.num_consts, Form::Binary);
        for (i, (lo, hi, _)) in self.temps.iter().enumerate() {
            out.instrs.push(Instruction { target: Term::Temp(i as u32), operands: vec![*lo, *hi] });
        }
        let mut alias: HashMap<usize, Term> = HashMap::new();
        for (o, orig) in self.origs.iter_mut().enumerate() {
            match &orig.fate {
                Fate::Alive => {
                    let target = Term::Var(o as u32);
                    out.instrs.push(Instruction {
                        target,
                        operands: orig.def.iter().copied().collect(),
                    });
                    alias.insert(o, target);
                }
                Fate::Alias(t) => {
                    alias.insert(o, *t);
                }
                Fate::CopyOf(src) => {
                    let target = Term::Var(o as u32);
                    self.copies.push(CopyGoal { target, source: *src });
                    alias.insert(o, target);
                }
            }
        }
        out.copies = self.copies;
        out.returns = self
            .returns
            .iter()
            .map(|r| match r {
                RetEntry::Orig(o) => alias[o],
                RetEntry::Passthrough(t) => *t,
            })
            .collect();
        debug_assert_eq!(out.validate(), Ok(()));
        out
    }
}

/// One pairing step as a standalone transform.
pub fn apply_pair(p: &Slp, key: PairKey) -> Result<Slp, CompressError> {
    let mut c = Compressor::setup(p)?;
    c.apply_pair(key)?;
    Ok(c.finish())
}

/// Recursive pairing to fixpoint: originals disappear one by one into a
/// chain of binary temporals.
pub fn repair(p: &Slp) -> Result<Slp, CompressError> {
    let mut c = Compressor::setup(p)?;
    while c.alive > 0 {
        let key = c.pairs.most_frequent().expect("alive originals expose at least one pair");
        c.apply_pair(key)?;
    }
    Ok(c.finish())
}

/// Pairing plus the cancellation-aware rebuild scan after every step. A
/// rebuilt definition replaces the current one whenever it is no larger;
/// the equal-size case swaps constants for temporals, which later pairings
/// compress further.
pub fn xor_repair(p: &Slp) -> Result<Slp, CompressError> {
    let mut c = Compressor::setup(p)?;
    while c.alive > 0 {
        let key = c.pairs.most_frequent().expect("alive originals expose at least one pair");
        c.apply_pair(key)?;
        c.rebuild_pass();
    }
    Ok(c.finish())
}

/// The rebuilt definition of original variable `v` in `p`: the set of
/// constants left after greedily XORing in the temporals of `p`, plus those
/// temporals. Returns the operands sorted by `≺`.
pub fn rebuild(p: &Slp, v: Term) -> Result<Vec<Term>, CompressError> {
    if !matches!(v, Term::Var(_)) {
        return Err(CompressError::NotOriginal(v));
    }
    let env = p.eval()?;
    let mut rem = env.get(&v).ok_or(CompressError::NotOriginal(v))?.clone();
    let mut temps: Vec<(u32, ValueSet)> = p
        .instrs
        .iter()
        .filter_map(|ins| match ins.target {
            Term::Temp(i) => Some((i, env[&ins.target].clone())),
            _ => None,
        })
        .collect();
    temps.sort_by_key(|(i, _)| *i);
    let mut picked: Vec<u32> = Vec::new();
    loop {
        let mut best: Option<(usize, u32)> = None;
        for (i, val) in &temps {
            let shrunk = rem.xor_len(val);
            if shrunk < best.map_or(rem.len(), |(s, _)| s) {
                best = Some((shrunk, *i));
            }
        }
        let Some((_, i)) = best else { break };
        rem.xor_assign(&temps.iter().find(|(j, _)| *j == i).unwrap().1);
        picked.push(i);
    }
    let def: BTreeSet<Term> =
        rem.iter().map(Term::Const).chain(picked.into_iter().map(Term::Temp)).collect();
    Ok(def.into_iter().collect())
}

/// Pair frequency as the compressor counts it: once per original definition
/// containing both terms.
pub fn pair_frequency(p: &Slp, key: PairKey) -> Result<usize, CompressError> {
    let c = Compressor::setup(p)?;
    Ok(c.pairs.count(key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slp::parse_text;

    fn p0() -> Slp {
        parse_text(
            "v0 = c0 ^ c1\n\
             v1 = c0 ^ c1 ^ c2\n\
             v2 = c0 ^ c1 ^ c2 ^ c3\n\
             v3 = c1 ^ c2 ^ c3\n\
             return v0 v1 v2 v3\n",
        )
        .unwrap()
    }

    #[test]
    fn pair_frequencies_counted_per_definition() {
        let c = |a, b| PairKey::new(Term::Const(a), Term::Const(b));
        assert_eq!(pair_frequency(&p0(), c(0, 1)).unwrap(), 3);
        assert_eq!(pair_frequency(&p0(), c(1, 2)).unwrap(), 3);
        assert_eq!(pair_frequency(&p0(), c(0, 3)).unwrap(), 1);
        assert_eq!(pair_frequency(&p0(), c(2, 3)).unwrap(), 2);
    }

    #[test]
    fn apply_pair_on_p0() {
        let q = apply_pair(&p0(), PairKey::new(Term::Const(0), Term::Const(1))).unwrap();
        // t0 ← a ⊕ b, v0 gone, three rewritten originals
        assert_eq!(q.instrs.len(), 4);
        assert_eq!(q.instrs[0].target, Term::Temp(0));
        assert_eq!(q.returns[0], Term::Temp(0));
        // the pair occurred three times: two XORs saved
        assert_eq!(q.count_xor(), 6);
        assert_eq!(q.result().unwrap(), p0().result().unwrap());
    }

    #[test]
    fn apply_pair_once_keeps_xor_count() {
        // (c0, c3) occurs once, in v2
        let before = p0().count_xor();
        let q = apply_pair(&p0(), PairKey::new(Term::Const(0), Term::Const(3))).unwrap();
        assert_eq!(q.count_xor(), before);
    }

    #[test]
    fn apply_pair_k_times_saves_k_minus_one() {
        let q = apply_pair(&p0(), PairKey::new(Term::Const(0), Term::Const(1))).unwrap();
        assert_eq!(q.count_xor(), p0().count_xor() - 2);
    }

    #[test]
    fn apply_pair_requires_presence() {
        let mut p = p0();
        p.num_consts = 6;
        assert_eq!(
            apply_pair(&p, PairKey::new(Term::Const(4), Term::Const(5))).unwrap_err(),
            CompressError::PairAbsent(PairKey::new(Term::Const(4), Term::Const(5)))
        );
    }

    #[test]
    fn repair_p0_gives_five_xors() {
        let q = repair(&p0()).unwrap();
        assert_eq!(q.count_xor(), 5);
        assert_eq!(q.result().unwrap(), p0().result().unwrap());
        // fully paired: nothing but temporals remain
        assert!(q.instrs.iter().all(|i| matches!(i.target, Term::Temp(_))));
        assert!(q.instrs.iter().all(|i| i.operands.len() == 2));
    }

    #[test]
    fn repair_of_disjoint_binary_goals_pairs_each_once() {
        let p = parse_text("v0 = c0 ^ c1\nv1 = c2 ^ c3\nreturn v0 v1\n").unwrap();
        let q = repair(&p).unwrap();
        assert_eq!(q.instrs.len(), 2);
        assert_eq!(q.count_xor(), 2);
        assert_eq!(q.result().unwrap(), p.result().unwrap());
    }

    #[test]
    fn rebuild_worked_example() {
        // t0 ← a⊕b; t1 ← t0⊕c; t2 ← t1⊕d; v3 ← b⊕c⊕d — rebuild(v3) = {a, t2}
        let p = parse_text(
            "t0 = c0 ^ c1\n\
             t1 = t0 ^ c2\n\
             t2 = t1 ^ c3\n\
             v3 = c1 ^ c2 ^ c3\n\
             return t0 t1 t2 v3\n",
        )
        .unwrap();
        assert_eq!(rebuild(&p, Term::Var(3)).unwrap(), vec![Term::Temp(2), Term::Const(0)]);
    }

    #[test]
    fn rebuild_without_temporals_returns_value() {
        let p = p0();
        assert_eq!(
            rebuild(&p, Term::Var(3)).unwrap(),
            vec![Term::Const(1), Term::Const(2), Term::Const(3)]
        );
    }

    #[test]
    fn rebuild_preserves_value() {
        let p = parse_text(
            "t0 = c0 ^ c1\n\
             t1 = t0 ^ c2\n\
             t2 = t1 ^ c3\n\
             v3 = c1 ^ c2 ^ c3\n\
             return t0 t1 t2 v3\n",
        )
        .unwrap();
        let env = p.eval().unwrap();
        let def = rebuild(&p, Term::Var(3)).unwrap();
        let mut got = ValueSet::empty(p.num_consts);
        for t in def {
            match t {
                Term::Const(c) => got.toggle(c),
                t => got.xor_assign(&env[&t]),
            }
        }
        assert_eq!(got, env[&Term::Var(3)]);
    }

    #[test]
    fn xor_repair_p0_gives_four_xors() {
        let q = xor_repair(&p0()).unwrap();
        assert_eq!(q.count_xor(), 4);
        assert_eq!(q.result().unwrap(), p0().result().unwrap());
    }

    #[test]
    fn deterministic_output() {
        let a = xor_repair(&p0()).unwrap();
        let b = xor_repair(&p0()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn copy_goals_ride_through() {
        let p = parse_text("v0 = c0\nv1 = c0 ^ c1 ^ c2\nv2 = c0 ^ c1\nreturn v0 v1 v2\n").unwrap();
        let q = xor_repair(&p).unwrap();
        assert_eq!(q.copies.len(), 1);
        assert_eq!(q.result().unwrap(), p.result().unwrap());
    }

    #[test]
    fn duplicate_goals_deduplicate() {
        let p = parse_text("v0 = c0 ^ c1\nv1 = c1 ^ c0\nreturn v0 v1\n").unwrap();
        let q = repair(&p).unwrap();
        assert_eq!(q.instrs.len(), 1);
        assert_eq!(q.returns, vec![Term::Temp(0), Term::Temp(0)]);
        assert_eq!(q.result().unwrap(), p.result().unwrap());
    }
}
