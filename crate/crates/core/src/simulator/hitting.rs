//! Exhaustive minimal hitting sets, for small instances only.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

pub const MAX_MEMBERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HittingError {
    #[error("{count} distinct members exceed the limit of {MAX_MEMBERS}")]
    TooManyMembers { count: usize },
    #[error("an empty set cannot be hit")]
    EmptySet,
}

struct Encoded<T> {
    members: Vec<T>,
    masks: Vec<u32>,
}

fn encode<T: Ord + Clone>(sets: &[BTreeSet<T>]) -> Result<Encoded<T>, HittingError> {
    let members: Vec<T> = sets.iter().flatten().cloned().collect::<BTreeSet<T>>().into_iter().collect();
    if members.len() > MAX_MEMBERS {
        return Err(HittingError::TooManyMembers { count: members.len() });
    }
    let mut masks = Vec::with_capacity(sets.len());
    for s in sets {
        if s.is_empty() {
            return Err(HittingError::EmptySet);
        }
        let mask = s.iter().fold(0u32, |m, x| m | 1 << members.binary_search(x).expect("member"));
        masks.push(mask);
    }
    Ok(Encoded { members, masks })
}

fn hits(masks: &[u32], h: u32) -> bool {
    masks.iter().all(|m| m & h != 0)
}

fn decode<T: Clone + Ord>(members: &[T], h: u32) -> BTreeSet<T> {
    (0..members.len()).filter(|i| h >> i & 1 == 1).map(|i| members[i].clone()).collect()
}

/// Size of a smallest set meeting every input set, with the
/// lexicographically smallest such set as witness.
pub fn minimal_hitting_set<T: Ord + Clone>(sets: &[BTreeSet<T>]) -> Result<(usize, BTreeSet<T>), HittingError> {
    let e = encode(sets)?;
    let n = e.members.len();
    for k in 0..=n {
        // combinations of k indices in lexicographic order
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let h = idx.iter().fold(0u32, |m, &i| m | 1 << i);
            if hits(&e.masks, h) {
                return Ok((k, decode(&e.members, h)));
            }
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    unreachable!("the set of all members hits every non-empty set")
}

/// Every subset-minimal hitting set, sorted by size then members.
pub fn all_minimal_hitting_sets<T: Ord + Clone>(sets: &[BTreeSet<T>]) -> Result<Vec<BTreeSet<T>>, HittingError> {
    let e = encode(sets)?;
    let n = e.members.len();
    let mut out: Vec<BTreeSet<T>> = (0u32..1 << n)
        .filter(|&h| hits(&e.masks, h) && (0..n).all(|i| h >> i & 1 == 0 || !hits(&e.masks, h & !(1 << i))))
        .map(|h| decode(&e.members, h))
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
    Ok(out)
}
