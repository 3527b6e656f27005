//! Lazy enumeration of the combinatorial objects behind the moment and
//! cumulant formulas: set partitions without singletons, full cycles without
//! fixed points, direction assignments, and perfect matchings with forbidden
//! pairs (complete Feynman diagrams).
//!
//! Elements are 0-based: `{0, ..., k-1}` stands for `{1, ..., k}`.

use crate::error::{Error, Result};

/// A set partition; blocks are sorted and ordered by their minimum element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

/// Single-cycle permutation of a block, stored in canonical rotation
/// (minimum element first): `cycle[p] -> cycle[p+1]`, last back to first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclicPerm {
    pub cycle: Vec<usize>,
}

impl CyclicPerm {
    /// `σ(j)` for an element `j` of the block.
    pub fn apply(&self, j: usize) -> usize {
        let p = self
            .cycle
            .iter()
            .position(|&x| x == j)
            .expect("element not in cycle");
        self.cycle[(p + 1) % self.cycle.len()]
    }

    /// Pairs `(j, σ(j))` in cycle order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.cycle.len();
        (0..n).map(move |p| (self.cycle[p], self.cycle[(p + 1) % n]))
    }
}

/// Directions `eta[p] ∈ {0..d-1}` for the `p`-th element of a block.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectionAssignment {
    pub eta: Vec<usize>,
}

/// A perfect matching as sorted pairs `(a, b)` with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

/// Partitions of `{0..k-1}` whose blocks all have size at least 2, in
/// lexicographic order of their restricted growth strings. `k = 0` yields
/// the empty partition once.
pub fn partitions_no_singletons(k: usize) -> impl Iterator<Item = Partition> {
    PartitionIter::new(k, 2)
}

/// All partitions of `{0..k-1}`.
pub fn partitions(k: usize) -> impl Iterator<Item = Partition> {
    PartitionIter::new(k, 1)
}

struct PartitionIter {
    k: usize,
    min_block: usize,
    rgs: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    fn new(k: usize, min_block: usize) -> Self {
        PartitionIter {
            k,
            min_block,
            rgs: vec![0; k],
            maxes: vec![0; k],
            done: false,
        }
    }

    fn advance(&mut self) -> bool {
        // rgs[p] ≤ 1 + max(rgs[..p]); maxes[p] = max(rgs[..=p])
        let k = self.k;
        let mut p = k;
        while p > 1 {
            p -= 1;
            let bound = self.maxes[p - 1] + 1;
            if self.rgs[p] < bound {
                self.rgs[p] += 1;
                self.maxes[p] = self.maxes[p - 1].max(self.rgs[p]);
                for q in p + 1..k {
                    self.rgs[q] = 0;
                    self.maxes[q] = self.maxes[q - 1];
                }
                return true;
            }
        }
        false
    }

    fn current(&self) -> Option<Partition> {
        let nblocks = if self.k == 0 { 0 } else { self.maxes[self.k - 1] + 1 };
        let mut blocks = vec![Vec::new(); nblocks];
        for (j, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(j);
        }
        if blocks.iter().all(|b| b.len() >= self.min_block) {
            Some(Partition { blocks })
        } else {
            None
        }
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        while !self.done {
            let cur = self.current();
            if !self.advance() {
                self.done = true;
            }
            if cur.is_some() {
                return cur;
            }
        }
        None
    }
}

/// Full cycles of `block` without fixed points: none for `|B| = 1`,
/// otherwise `(|B|-1)!` cycles, each in canonical rotation.
pub fn full_cycles_no_fixed(block: &[usize]) -> impl Iterator<Item = CyclicPerm> {
    let mut sorted = block.to_vec();
    sorted.sort_unstable();
    let head = sorted.first().copied();
    let rest: Vec<usize> = sorted.iter().skip(1).copied().collect();
    let active = block.len() >= 2;
    let mut perm = rest;
    let mut first = true;
    std::iter::from_fn(move || {
        if !active {
            return None;
        }
        if !first && !next_permutation(&mut perm) {
            return None;
        }
        first = false;
        let mut cycle = vec![head.unwrap()];
        cycle.extend_from_slice(&perm);
        Some(CyclicPerm { cycle })
    })
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All `d^len` direction maps in lexicographic order.
pub fn direction_assignments(len: usize, d: usize) -> impl Iterator<Item = DirectionAssignment> {
    let mut eta = vec![0usize; len];
    let mut done = d == 0 && len > 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = DirectionAssignment { eta: eta.clone() };
        let mut p = len;
        loop {
            if p == 0 {
                done = true;
                break;
            }
            p -= 1;
            eta[p] += 1;
            if eta[p] < d {
                break;
            }
            eta[p] = 0;
        }
        Some(out)
    })
}

/// Perfect matchings of `{0..n-1}` avoiding pairs with `forbidden(a, b)`,
/// in lexicographic order.
pub fn perfect_matchings<F>(n: usize, forbidden: F) -> Result<impl Iterator<Item = Matching>>
where
    F: Fn(usize, usize) -> bool,
{
    if n % 2 == 1 {
        return Err(Error::OddSize(n));
    }
    Ok(Matchings {
        n,
        forbidden,
        used: vec![false; n],
        stack: Vec::with_capacity(n / 2),
        started: false,
        done: false,
    })
}

/// Predicate forbidding pairs inside the same group, `group[e]` being the
/// group of element `e`.
pub fn intra_group(group: Vec<usize>) -> impl Fn(usize, usize) -> bool {
    move |a, b| group[a] == group[b]
}

struct Matchings<F> {
    n: usize,
    forbidden: F,
    used: Vec<bool>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

impl<F: Fn(usize, usize) -> bool> Matchings<F> {
    fn partner_from(&self, i: usize, from: usize) -> Option<usize> {
        (from..self.n).find(|&j| j != i && !self.used[j] && !(self.forbidden)(i, j))
    }

    fn push(&mut self, i: usize, j: usize) {
        self.used[i] = true;
        self.used[j] = true;
        self.stack.push((i, j));
    }
}

impl<F: Fn(usize, usize) -> bool> Iterator for Matchings<F> {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.done {
            return None;
        }
        let mut backtrack = self.started;
        self.started = true;
        loop {
            if backtrack {
                let Some((i, j)) = self.stack.pop() else {
                    self.done = true;
                    return None;
                };
                self.used[i] = false;
                self.used[j] = false;
                if let Some(j2) = self.partner_from(i, j + 1) {
                    self.push(i, j2);
                    backtrack = false;
                }
            } else {
                match self.used.iter().position(|&u| !u) {
                    None => {
                        return Some(Matching {
                            pairs: self.stack.clone(),
                        })
                    }
                    Some(i) => match self.partner_from(i, i + 1) {
                        Some(j) => self.push(i, j),
                        None => backtrack = true,
                    },
                }
            }
        }
    }
}
