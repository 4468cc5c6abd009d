//! Strongly connected components over small adjacency lists.

use alloc::vec;
use alloc::vec::Vec;

/// Strongly connected components of the graph `adj` (node `u` has edges to
/// `adj[u]`), listed in topological order of the condensation: every edge
/// goes from an earlier component to the same or a later one. Members of
/// each component are sorted ascending.
pub fn scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0usize;
    // (node, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos == 0 && index[u] == UNSEEN {
                index[u] = next;
                low[u] = next;
                next += 1;
                stack.push(u);
                on_stack[u] = true;
            }
            if let Some(&v) = adj[u].get(*pos) {
                *pos += 1;
                if index[v] == UNSEEN {
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == u {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out.reverse();
    out
}

/// True when the component is a loop: more than one node, or one node
/// with a self-edge.
pub fn is_loop(adj: &[Vec<usize>], comp: &[usize]) -> bool {
    comp.len() > 1 || adj[comp[0]].contains(&comp[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_gives_singletons_in_topological_order() {
        let adj = vec![vec![1, 2], vec![3], vec![3], vec![]];
        let comps = scc(&adj);
        assert_eq!(comps.len(), 4);
        let pos = |x: usize| comps.iter().position(|c| c.contains(&x)).unwrap();
        assert!(pos(0) < pos(1) && pos(1) < pos(3) && pos(2) < pos(3));
        assert!(comps.iter().all(|c| !is_loop(&adj, c)));
    }

    #[test]
    fn cycles_are_grouped() {
        let adj = vec![vec![1], vec![2], vec![1, 3], vec![3]];
        let comps = scc(&adj);
        assert_eq!(comps, vec![vec![0], vec![1, 2], vec![3]]);
        assert!(is_loop(&adj, &comps[1]));
        assert!(is_loop(&adj, &comps[2]));
        assert!(!is_loop(&adj, &comps[0]));
    }

    #[test]
    fn long_chain_does_not_recurse() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n).map(|i| if i + 1 < n { vec![i + 1] } else { vec![] }).collect();
        assert_eq!(scc(&adj).len(), n);
    }
}
