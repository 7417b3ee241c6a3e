//! Deforestation for XOR programs: inline every variable used exactly once.
//!
//! A binary chain materializes an intermediate array per XOR. Reading the
//! program as variadic kernels and splicing single-use definitions into
//! their sole use eliminates those intermediates: each unfold removes one
//! write and one read, i.e. exactly two memory accesses. Variables used more
//! than once are left alone — inlining them would duplicate work and undo
//! compression — and returned variables must materialize, so they are never
//! unfolded either.

use std::collections::HashMap;

use crate::slp::{Form, Slp, SlpError, Term};

/// Fusion with the unfold count, for callers that report savings.
pub fn fuse_with_stats(p: &Slp) -> Result<(Slp, usize), SlpError> {
    p.validate()?;
    if !p.is_single_assignment() {
        let mut seen = std::collections::HashSet::new();
        let dup = p
            .instrs
            .iter()
            .map(|i| i.target)
            .chain(p.copies.iter().map(|c| c.target))
            .find(|&t| !seen.insert(t))
            .expect("a duplicate assignment exists");
        return Err(SlpError::NotSingleAssignment(dup));
    }
    let mut q = p.clone();
    q.form = Form::Multi;

    let mut unfolds = 0usize;
    loop {
        let mut uses: HashMap<Term, Vec<usize>> = HashMap::new();
        for (i, ins) in q.instrs.iter().enumerate() {
            for &op in &ins.operands {
                if op.is_var() {
                    uses.entry(op).or_default().push(i);
                }
            }
        }
        // copy sources must stay materialized
        for cp in &q.copies {
            if cp.source.is_var() {
                uses.entry(cp.source).or_default().push(usize::MAX);
            }
        }
        let returned: std::collections::HashSet<Term> = q.returns.iter().copied().collect();

        let mut changed = false;
        let mut removed: Vec<usize> = Vec::new();
        for i in 0..q.instrs.len() {
            if removed.contains(&i) {
                continue;
            }
            let v = q.instrs[i].target;
            if returned.contains(&v) {
                continue;
            }
            let Some(sites) = uses.get(&v) else { continue };
            if sites.len() != 1 || sites[0] == usize::MAX {
                continue;
            }
            let user = sites[0];
            if removed.contains(&user) {
                continue;
            }
            // splicing must not create a duplicate operand
            let body = q.instrs[i].operands.clone();
            let dup = q.instrs[user]
                .operands
                .iter()
                .any(|t| *t != v && body.contains(t));
            if dup {
                continue;
            }
            let pos = q.instrs[user].operands.iter().position(|&t| t == v).unwrap();
            q.instrs[user].operands.splice(pos..pos + 1, body);
            // the spliced operands keep their single textual use each, so no
            // other candidacy changes
            removed.push(i);
            uses.remove(&v);
            unfolds += 1;
            changed = true;
        }
        removed.sort_unstable();
        for &i in removed.iter().rev() {
            q.instrs.remove(i);
        }
        if !changed {
            break;
        }
    }
    Ok((q, unfolds))
}

/// Inlines single-use, non-returned variables until none remain, turning a
/// binary program into a flat variadic one.
pub fn fuse(p: &Slp) -> Result<Slp, SlpError> {
    fuse_with_stats(p).map(|(q, _)| q)
}

/// Memory accesses saved by fusing `p`. Within multi form this is exactly
/// twice the number of unfolds; for a binary program it also includes the
/// accounting gain of reading nested chains as single kernels.
pub fn mem_savings(p: &Slp) -> Result<usize, SlpError> {
    Ok(p.count_mem() - fuse(p)?.count_mem())
}
