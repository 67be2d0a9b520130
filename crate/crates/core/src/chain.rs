//! Logical worker chains: role assignment, the shared-seed head set, and the
//! greedy nearest-neighbour chain builder.
//!
//! Worker ids are 0-based. Worker `0` always starts the chain as a head and
//! worker `N − 1` always ends it.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::topology::CommCostMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Head,
    Tail,
}

/// Role of each chain position: even positions (1st, 3rd, ...) are heads.
pub fn assign_groups(n_workers: usize) -> Result<Vec<Role>> {
    if n_workers < 2 {
        return Err(Error::TooFewWorkers(n_workers));
    }
    Ok((0..n_workers).map(role_at).collect())
}

fn role_at(position: usize) -> Role {
    if position.is_multiple_of(2) {
        Role::Head
    } else {
        Role::Tail
    }
}

/// Visit order over all workers, with roles alternating from a head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Chain {
    /// `0, 1, ..., n−1`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    /// Validates that `order` is a permutation with fixed endpoints.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n < 2 {
            return Err(Error::TooFewWorkers(n));
        }
        let mut position = vec![usize::MAX; n];
        for (p, &w) in order.iter().enumerate() {
            if w >= n || position[w] != usize::MAX {
                return Err(Error::InvalidChain("order is not a permutation"));
            }
            position[w] = p;
        }
        if order[0] != 0 || order[n - 1] != n - 1 {
            return Err(Error::InvalidChain("endpoints must be the first and last worker"));
        }
        Ok(Self { order, position })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Worker at chain position `p`.
    pub fn worker(&self, p: usize) -> usize {
        self.order[p]
    }

    pub fn position_of(&self, worker: usize) -> usize {
        self.position[worker]
    }

    pub fn role_at(&self, p: usize) -> Role {
        role_at(p)
    }

    pub fn role_of(&self, worker: usize) -> Role {
        role_at(self.position[worker])
    }

    pub fn edges(&self) -> usize {
        self.order.len() - 1
    }

    /// `(left, right)` neighbours of `worker`.
    pub fn neighbors(&self, worker: usize) -> (Option<usize>, Option<usize>) {
        let p = self.position[worker];
        let left = p.checked_sub(1).map(|q| self.order[q]);
        let right = self.order.get(p + 1).copied();
        (left, right)
    }

    /// Neighbour ids of `worker`, left first.
    pub fn neighbor_list(&self, worker: usize) -> Vec<usize> {
        let (l, r) = self.neighbors(worker);
        l.into_iter().chain(r).collect()
    }

    pub fn degree(&self, worker: usize) -> usize {
        let p = self.position[worker];
        usize::from(p > 0) + usize::from(p + 1 < self.order.len())
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        a < self.len() && b < self.len() && self.position[a].abs_diff(self.position[b]) == 1
    }

    /// Chain positions holding heads.
    pub fn head_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).step_by(2)
    }

    pub fn tail_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.len()).step_by(2)
    }
}

/// Head set for refresh `epoch`: worker `0` plus `N/2 − 1` ids drawn without
/// replacement from `1..=N−2`. Every worker holding the same seed computes
/// the same set.
pub fn generate_head_set(shared_seed: u64, epoch: u64, n_workers: usize) -> Result<Vec<usize>> {
    if n_workers % 2 == 1 {
        return Err(Error::OddWorkerCount(n_workers));
    }
    if n_workers < 2 {
        return Err(Error::TooFewWorkers(n_workers));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shared_seed);
    rng.set_stream(epoch);
    let mut heads: Vec<usize> = rand::seq::index::sample(&mut rng, n_workers - 2, n_workers / 2 - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    heads.push(0);
    heads.sort_unstable();
    Ok(heads)
}

/// Greedy chain from worker `0`: repeatedly append the cheapest unvisited
/// worker of the opposite role, ties to the smallest id. The last worker is
/// held back until it is the only tail left, so the chain ends there.
pub fn build_chain(cost: &CommCostMatrix, heads: &[usize]) -> Result<Chain> {
    let n = cost.len();
    if n < 2 {
        return Err(Error::TooFewWorkers(n));
    }
    let mut is_head = vec![false; n];
    for &h in heads {
        if h >= n || is_head[h] {
            return Err(Error::InvalidArgument("head set has invalid or repeated ids"));
        }
        is_head[h] = true;
    }
    if heads.len() * 2 != n {
        return Err(Error::InvalidArgument("head set must hold exactly half the workers"));
    }
    if !is_head[0] || is_head[n - 1] {
        return Err(Error::InvalidArgument("worker 0 must be a head and the last worker a tail"));
    }

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = 0;
    visited[0] = true;
    order.push(0);
    let mut tails_left = n / 2;
    while order.len() < n {
        let want_head = order.len() % 2 == 0;
        let mut best: Option<(f64, usize)> = None;
        for w in 0..n {
            if visited[w] || is_head[w] != want_head {
                continue;
            }
            if !want_head && w == n - 1 && tails_left > 1 {
                continue;
            }
            let c = cost.get(current, w);
            if c.is_finite() && best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, w));
            }
        }
        let (_, next) = best.ok_or(Error::Disconnected { from: current })?;
        if !want_head {
            tails_left -= 1;
        }
        visited[next] = true;
        order.push(next);
        current = next;
    }
    Chain::new(order)
}
