//! Choosing where to cut loops for assumption-based prediction.

use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::graph;
use crate::model::{CompIx, SystemModel};

/// Wires to assume so that the loop `members` (sorted component indices)
/// becomes acyclic under `adj`.
///
/// Repeatedly takes the first remaining cycle and cuts the finite-domain
/// wire flagged `loop_cut`, else the one with the most out-edges inside the
/// cycle, ties going to the smallest id. Fails with the members of a cycle
/// that has no finite-domain wire.
pub fn choose_cuts(model: &SystemModel, members: &[usize], adj: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let mut cuts: Vec<usize> = Vec::new();
    loop {
        let local: Vec<Vec<usize>> = members
            .iter()
            .map(|&u| {
                if cuts.contains(&u) {
                    return Vec::new();
                }
                adj[u].iter().filter_map(|v| members.binary_search(v).ok()).collect()
            })
            .collect();
        let Some(cycle) = graph::scc(&local).into_iter().find(|c| graph::is_loop(&local, c)) else {
            cuts.sort_unstable();
            return Ok(cuts);
        };
        let best = cycle
            .iter()
            .copied()
            .filter(|&l| model.component(CompIx(members[l] as u32)).domain.finite_values().is_some())
            .max_by_key(|&l| {
                let comp = model.component(CompIx(members[l] as u32));
                let inside = local[l].iter().filter(|v| cycle.binary_search(v).is_ok()).count();
                (comp.loop_cut, inside, Reverse(members[l]))
            });
        match best {
            Some(l) => cuts.push(members[l]),
            None => return Err(cycle.iter().map(|&l| members[l]).collect()),
        }
    }
}
