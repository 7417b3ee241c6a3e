//! Cache-aware rescheduling: the abstract LRU cache, the pebble game, and
//! two scheduling heuristics.
//!
//! Blocked execution runs one instruction stream per block index, so the
//! cache behaviour of the whole run is the behaviour of a single iteration.
//! [`simulate`] replays a program against an ordered LRU cache of a given
//! capacity: operands are loaded (or refreshed) in order, then the target is
//! allocated, and a full cache evicts its least recently used block.
//! From the trace come the two efficiency measures: [`ccap`], the smallest
//! capacity that never reloads an evicted block, and [`iocost`], the number
//! of transfers at a fixed capacity.
//!
//! Rescheduling is a pebble game on the value-dependency DAG: pebbles are
//! live buffers, computing a node places (or moves) a pebble, and a node may
//! never be computed twice. Any winning strategy reads back as an equivalent
//! program. [`dfs_schedule`] pebbles goals in postorder; [`greedy_schedule`]
//! repeatedly picks the ready node with the highest fraction of its inputs
//! already cached.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::slp::{CopyGoal, Form, Instruction, Slp, SlpError, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("capacity {got} cannot hold one instruction's working set (need {need})")]
    CapacityTooSmall { need: usize, got: usize },
    #[error(transparent)]
    Slp(#[from] SlpError),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("goal {0} is never pebbled")]
    UnpebbledGoal(Term),
}

/// One transfer or cache touch, in program order.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum IoEvent {
    /// Memory → cache transfer of an operand.
    Load(Term),
    /// Cache → memory write-back of the least recently used block.
    Evict(Term),
    /// Position refresh of a block already cached. Free.
    Touch(Term),
    /// Room made for a freshly written block. Free.
    Alloc(Term),
}

impl fmt::Display for IoEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoEvent::Load(t) => write!(f, "LOAD {t}"),
            IoEvent::Evict(t) => write!(f, "EVICT {t}"),
            IoEvent::Touch(t) => write!(f, "TOUCH {t}"),
            IoEvent::Alloc(t) => write!(f, "ALLOC {t}"),
        }
    }
}

/// The event log of one simulated run.
#[derive(Clone, Debug, Default)]
pub struct IoTrace {
    pub events: Vec<IoEvent>,
}

impl IoTrace {
    pub fn loads(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, IoEvent::Load(_))).count()
    }

    pub fn evictions(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, IoEvent::Evict(_))).count()
    }

    /// Loads plus evictions; touches and allocations are free.
    pub fn io_cost(&self) -> usize {
        self.loads() + self.evictions()
    }

    /// True when some block is loaded after having been evicted.
    pub fn has_reload(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for e in &self.events {
            match e {
                IoEvent::Load(t) => {
                    if !seen.insert(*t) {
                        return true;
                    }
                }
                IoEvent::Alloc(t) => {
                    seen.insert(*t);
                }
                _ => {}
            }
        }
        false
    }

    /// One event per line in the debug dump format.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }
}

/// An ordered LRU cache of blocks; the leftmost block is evicted first.
#[derive(Clone, Debug)]
pub struct CacheState {
    capacity: usize,
    // least recently used first
    order: Vec<Term>,
}

impl CacheState {
    pub fn new(capacity: usize) -> Self {
        CacheState { capacity, order: Vec::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, t: Term) -> bool {
        self.order.contains(&t)
    }

    pub fn blocks(&self) -> &[Term] {
        &self.order
    }

    /// Refreshes a cached block to most-recently-used.
    pub fn touch(&mut self, t: Term) {
        let pos = self.order.iter().position(|&b| b == t).expect("touch of absent block");
        self.order.remove(pos);
        self.order.push(t);
    }

    /// Inserts an absent block, returning the evicted block if the cache was
    /// full.
    pub fn insert(&mut self, t: Term) -> Option<Term> {
        debug_assert!(!self.contains(t), "insert of present block");
        let evicted =
            if self.order.len() == self.capacity { Some(self.order.remove(0)) } else { None };
        self.order.push(t);
        evicted
    }
}

fn min_capacity(p: &Slp) -> usize {
    match p.form {
        // a variadic instruction holds all operands plus the target at once
        Form::Multi => p.instrs.iter().map(|i| i.operands.len() + 1).max().unwrap_or(0),
        // a binary chain only ever holds two operands plus the accumulator
        Form::Binary => {
            if p.instrs.is_empty() {
                0
            } else {
                3
            }
        }
    }
}

struct Sim {
    cache: CacheState,
    trace: IoTrace,
}

impl Sim {
    fn read(&mut self, t: Term) {
        if self.cache.contains(t) {
            self.cache.touch(t);
            self.trace.events.push(IoEvent::Touch(t));
        } else {
            if let Some(victim) = self.cache.insert(t) {
                self.trace.events.push(IoEvent::Evict(victim));
            }
            self.trace.events.push(IoEvent::Load(t));
        }
    }

    fn write(&mut self, t: Term) {
        if self.cache.contains(t) {
            self.cache.touch(t);
            self.trace.events.push(IoEvent::Touch(t));
        } else {
            if let Some(victim) = self.cache.insert(t) {
                self.trace.events.push(IoEvent::Evict(victim));
            }
            self.trace.events.push(IoEvent::Alloc(t));
        }
    }
}

/// Replays `p` against a `capacity`-block LRU cache and returns the event
/// trace. Copy goals bypass the cache model entirely.
pub fn simulate(p: &Slp, capacity: usize) -> Result<IoTrace, ScheduleError> {
    let need = min_capacity(p);
    if capacity < need {
        return Err(ScheduleError::CapacityTooSmall { need, got: capacity });
    }
    let mut sim = Sim { cache: CacheState::new(capacity), trace: IoTrace::default() };
    // pre-size the event buffer: two fixups never outgrow this
    sim.trace.events.reserve(p.count_mem() * 2);
    for ins in &p.instrs {
        match p.form {
            Form::Multi => {
                for &op in &ins.operands {
                    sim.read(op);
                }
                sim.write(ins.target);
            }
            Form::Binary => {
                // v ← t1 ⊕ t2, then v ← v ⊕ ti for the rest
                sim.read(ins.operands[0]);
                sim.read(ins.operands[1]);
                sim.write(ins.target);
                for &op in &ins.operands[2..] {
                    sim.read(ins.target);
                    sim.read(op);
                    sim.write(ins.target);
                }
            }
        }
    }
    Ok(sim.trace)
}

/// Number of I/O transfers at the given capacity.
pub fn iocost(p: &Slp, capacity: usize) -> Result<usize, ScheduleError> {
    Ok(simulate(p, capacity)?.io_cost())
}

/// Smallest cache capacity that runs `p` without reloading an evicted block.
///
/// The reference stream is capacity-independent and LRU caches have the
/// stack-inclusion property, so reload-freeness is monotone in capacity and
/// binary search applies.
pub fn ccap(p: &Slp) -> usize {
    let mut lo = min_capacity(p);
    if lo == 0 {
        return 0;
    }
    let mut hi = p.terms().len();
    hi = hi.max(lo);
    debug_assert!(!simulate(p, hi).unwrap().has_reload());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if simulate(p, mid).unwrap().has_reload() {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One node of a computation graph: a constant leaf or one instruction.
#[derive(Clone, Debug)]
pub struct Node {
    pub term: Term,
    /// Operand order of the defining instruction; empty for leaves.
    pub children: Vec<usize>,
    pub parents: Vec<usize>,
    pub is_goal: bool,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Value-dependency DAG of a single-assignment program with its goal marks.
#[derive(Clone, Debug)]
pub struct CompGraph {
    pub nodes: Vec<Node>,
    /// Distinct goal nodes in first-return order.
    pub goals: Vec<usize>,
    num_consts: u32,
    returns: Vec<Term>,
    copies: Vec<CopyGoal>,
}

impl CompGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Builds the computation graph of a single-assignment program: one leaf per
/// used constant, one inner node per instruction, goal marks from the return
/// list. Copy goals stay outside the graph and ride through scheduling.
pub fn build_graph(p: &Slp) -> Result<CompGraph, ScheduleError> {
    p.validate()?;
    if !p.is_single_assignment() {
        let mut seen = std::collections::HashSet::new();
        let dup = p
            .instrs
            .iter()
            .map(|i| i.target)
            .chain(p.copies.iter().map(|c| c.target))
            .find(|&t| !seen.insert(t))
            .expect("duplicate exists");
        return Err(SlpError::NotSingleAssignment(dup).into());
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_of: HashMap<Term, usize> = HashMap::new();
    let mut leaf = |t: Term, nodes: &mut Vec<Node>, node_of: &mut HashMap<Term, usize>| {
        *node_of.entry(t).or_insert_with(|| {
            nodes.push(Node { term: t, children: vec![], parents: vec![], is_goal: false });
            nodes.len() - 1
        })
    };
    for ins in &p.instrs {
        let children: Vec<usize> = ins
            .operands
            .iter()
            .map(|&op| match op {
                Term::Const(_) => leaf(op, &mut nodes, &mut node_of),
                v => node_of[&v],
            })
            .collect();
        nodes.push(Node { term: ins.target, children: children.clone(), parents: vec![], is_goal: false });
        let id = nodes.len() - 1;
        node_of.insert(ins.target, id);
        for c in children {
            nodes[c].parents.push(id);
        }
    }
    let copy_targets: std::collections::HashSet<Term> =
        p.copies.iter().map(|c| c.target).collect();
    let mut goals = Vec::new();
    for &r in &p.returns {
        if copy_targets.contains(&r) {
            continue;
        }
        let id = node_of[&r];
        if !nodes[id].is_goal {
            nodes[id].is_goal = true;
            goals.push(id);
        }
    }
    Ok(CompGraph {
        nodes,
        goals,
        num_consts: p.num_consts,
        returns: p.returns.clone(),
        copies: p.copies.clone(),
    })
}

/// One move of a winning strategy: compute `node` into pebble `dest` from
/// the blocks currently holding its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyStep {
    pub node: usize,
    pub dest: Term,
    pub args: Vec<Term>,
}

/// A complete winning strategy plus the pebble returned for each original
/// return entry.
#[derive(Clone, Debug, Default)]
pub struct Strategy {
    pub steps: Vec<StrategyStep>,
    pub returns: Vec<Term>,
}

/// Replays a strategy against the game rules; errors on a rule violation.
pub fn validate_strategy(g: &CompGraph, s: &Strategy) -> Result<(), ScheduleError> {
    let n = g.nodes.len();
    let mut pebbled = vec![false; n];
    let mut holder: Vec<Option<Term>> = vec![None; n];
    for (i, node) in g.nodes.iter().enumerate() {
        if node.is_leaf() {
            pebbled[i] = true;
            holder[i] = Some(node.term);
        }
    }
    let mut node_of_pebble: HashMap<Term, usize> = HashMap::new();
    let err = |m: String| Err(ScheduleError::InvalidStrategy(m));
    for step in &s.steps {
        let node = &g.nodes[step.node];
        if node.is_leaf() {
            return err(format!("{} is a leaf", node.term));
        }
        if pebbled[step.node] {
            return err(format!("{} pebbled twice", node.term));
        }
        if step.args.len() != node.children.len() {
            return err(format!("arity mismatch at {}", node.term));
        }
        let have: std::collections::HashSet<Term> = step.args.iter().copied().collect();
        let want: Result<std::collections::HashSet<Term>, ScheduleError> = node
            .children
            .iter()
            .map(|&c| {
                holder[c].ok_or_else(|| {
                    ScheduleError::InvalidStrategy(format!(
                        "child {} of {} read after its pebble moved",
                        g.nodes[c].term, node.term
                    ))
                })
            })
            .collect();
        if have != want? {
            return err(format!("arguments of {} are not its children's pebbles", node.term));
        }
        if let Some(&src) = node_of_pebble.get(&step.dest) {
            // a move: the source must be dead
            if g.nodes[src].is_goal {
                return err(format!("moved the pebble off goal {}", g.nodes[src].term));
            }
            if !g.nodes[src].parents.iter().all(|&q| pebbled[q] || q == step.node) {
                return err(format!("moved pebble off live node {}", g.nodes[src].term));
            }
            holder[src] = None;
        }
        pebbled[step.node] = true;
        holder[step.node] = Some(step.dest);
        node_of_pebble.insert(step.dest, step.node);
    }
    for &gid in &g.goals {
        if holder[gid].is_none() {
            return Err(ScheduleError::UnpebbledGoal(g.nodes[gid].term));
        }
    }
    Ok(())
}

/// Reads a winning strategy back as a program: pebbles become variables and
/// the return list names, in the original order, the pebble resting on each
/// goal.
pub fn strategy_to_slp(s: &Strategy, g: &CompGraph) -> Slp {
    Slp {
        num_consts: g.num_consts,
        form: Form::Multi,
        instrs: s
            .steps
            .iter()
            .map(|st| Instruction { target: st.dest, operands: st.args.clone() })
            .collect(),
        copies: g.copies.clone(),
        returns: s.returns.clone(),
    }
}

struct Pebbler<'g> {
    g: &'g CompGraph,
    pebbled: Vec<bool>,
    holder: Vec<Option<Term>>,
    node_of_pebble: Vec<usize>,
    completion: Vec<usize>,
    next_pebble: u32,
    steps: Vec<StrategyStep>,
}

impl<'g> Pebbler<'g> {
    fn new(g: &'g CompGraph) -> Self {
        let n = g.nodes.len();
        let mut p = Pebbler {
            g,
            pebbled: vec![false; n],
            holder: vec![None; n],
            node_of_pebble: Vec::new(),
            completion: vec![usize::MAX; n],
            next_pebble: 0,
            steps: Vec::new(),
        };
        for (i, node) in g.nodes.iter().enumerate() {
            if node.is_leaf() {
                p.pebbled[i] = true;
                p.holder[i] = Some(node.term);
            }
        }
        p
    }

    /// A pebble on `m` can move while computing `current`: `m` is not a goal
    /// and every other reader of `m` is already done.
    fn movable(&self, m: usize, current: usize) -> bool {
        !self.g.nodes[m].is_leaf()
            && !self.g.nodes[m].is_goal
            && self.holder[m].is_some()
            && self.g.nodes[m].parents.iter().all(|&q| self.pebbled[q] || q == current)
    }

    fn place(&mut self, node: usize, dest: Term, args: Vec<Term>) {
        if let Term::Var(i) = dest {
            if (i as usize) < self.node_of_pebble.len() {
                let src = self.node_of_pebble[i as usize];
                self.holder[src] = None;
                self.node_of_pebble[i as usize] = node;
            } else {
                self.node_of_pebble.push(node);
            }
        }
        self.pebbled[node] = true;
        self.holder[node] = Some(dest);
        self.completion[node] = self.steps.len();
        self.steps.push(StrategyStep { node, dest, args });
    }

    fn fresh(&mut self) -> Term {
        let t = Term::Var(self.next_pebble);
        self.next_pebble += 1;
        t
    }

    fn finish(self) -> Strategy {
        let returns = self
            .g
            .returns
            .iter()
            .map(|&r| {
                if self.g.copies.iter().any(|c| c.target == r) {
                    r
                } else {
                    let id = self
                        .g
                        .nodes
                        .iter()
                        .position(|n| n.term == r && !n.is_leaf())
                        .expect("goal node");
                    self.holder[id].expect("goal pebbled")
                }
            })
            .collect();
        Strategy { steps: self.steps, returns }
    }
}

/// Postorder scheduling: goals in `≺` order, children in `≺` order, one
/// instruction per node at completion. The destination reuses the most
/// recently completed movable argument pebble of the instruction and
/// allocates a fresh pebble when no argument can donate one.
pub fn dfs_schedule(g: &CompGraph) -> Strategy {
    let mut p = Pebbler::new(g);
    let mut goals = g.goals.clone();
    goals.sort_by_key(|&id| g.nodes[id].term);
    for goal in goals {
        dfs_visit(&mut p, goal);
    }
    p.finish()
}

fn dfs_visit(p: &mut Pebbler, n: usize) {
    if p.pebbled[n] {
        return;
    }
    let mut kids = p.g.nodes[n].children.clone();
    kids.sort_by_key(|&c| p.g.nodes[c].term);
    for &c in &kids {
        dfs_visit(p, c);
    }
    let args: Vec<Term> = kids.iter().map(|&c| p.holder[c].expect("child pebbled")).collect();
    let pick = |candidates: &mut dyn Iterator<Item = usize>, p: &Pebbler| -> Option<Term> {
        candidates
            .filter(|&m| p.movable(m, n))
            .max_by_key(|&m| p.completion[m])
            .map(|m| p.holder[m].unwrap())
    };
    let dest = pick(&mut kids.iter().copied(), &p).unwrap_or_else(|| p.fresh());
    p.place(n, dest, args);
}

/// Bottom-up greedy scheduling against a private cache mirror of the given
/// capacity: repeatedly compute the ready node with the highest cached-input
/// ratio, accessing cached inputs first. The destination prefers the
/// `≺`-smallest movable cached pebble, then any movable pebble, then a fresh
/// one.
pub fn greedy_schedule(g: &CompGraph, capacity: usize) -> Result<Strategy, ScheduleError> {
    let need = g.nodes.iter().map(|n| n.children.len() + 1).max().unwrap_or(0);
    if capacity < need {
        return Err(ScheduleError::CapacityTooSmall { need, got: capacity });
    }
    let mut p = Pebbler::new(g);
    let mut cache = CacheState::new(capacity);

    let mut blocked = vec![0usize; g.nodes.len()];
    let mut ready: Vec<usize> = Vec::new();
    for (i, node) in g.nodes.iter().enumerate() {
        if node.is_leaf() {
            continue;
        }
        blocked[i] = node.children.iter().filter(|&&c| !g.nodes[c].is_leaf()).count();
        if blocked[i] == 0 {
            ready.push(i);
        }
    }
    // only what feeds a goal needs pebbling
    let mut live = vec![false; g.nodes.len()];
    let mut stack: Vec<usize> = g.goals.clone();
    while let Some(n) = stack.pop() {
        if !live[n] {
            live[n] = true;
            stack.extend(g.nodes[n].children.iter().copied());
        }
    }
    let mut remaining = g.goals.len();

    while remaining > 0 {
        let (&n, _) = ready
            .iter()
            .filter(|&&n| live[n])
            .map(|n| {
                let node = &g.nodes[*n];
                let cached = node
                    .children
                    .iter()
                    .filter(|&&c| cache.contains(p.holder[c].expect("child pebbled")))
                    .count();
                (n, (cached, node.children.len()))
            })
            .max_by(|(a, (h1, c1)), (b, (h2, c2))| {
                // compare h1/c1 with h2/c2; ties to the ≺-smaller node
                (h1 * c2)
                    .cmp(&(h2 * c1))
                    .then_with(|| g.nodes[**b].term.cmp(&g.nodes[**a].term))
            })
            .expect("a live ready node exists");

        let mut kids = g.nodes[n].children.clone();
        kids.sort_by_key(|&c| {
            let block = p.holder[c].expect("child pebbled");
            (!cache.contains(block), g.nodes[c].term)
        });
        let args: Vec<Term> = kids.iter().map(|&c| p.holder[c].unwrap()).collect();

        let movable_pebbles = |p: &Pebbler, want_cached: Option<&CacheState>| -> Option<Term> {
            (0..g.nodes.len())
                .filter(|&m| p.movable(m, n))
                .map(|m| p.holder[m].unwrap())
                .filter(|&b| want_cached.is_none_or(|c| c.contains(b)))
                .min()
        };
        let dest = movable_pebbles(&p, Some(&cache))
            .or_else(|| movable_pebbles(&p, None))
            .unwrap_or_else(|| p.fresh());

        for &a in &args {
            if cache.contains(a) {
                cache.touch(a);
            } else {
                cache.insert(a);
            }
        }
        if cache.contains(dest) {
            cache.touch(dest);
        } else {
            cache.insert(dest);
        }

        if g.nodes[n].is_goal {
            remaining -= 1;
        }
        ready.retain(|&m| m != n);
        for &q in &g.nodes[n].parents {
            blocked[q] -= 1;
            if blocked[q] == 0 {
                ready.push(q);
            }
        }
        p.place(n, dest, args);
    }
    Ok(p.finish())
}
