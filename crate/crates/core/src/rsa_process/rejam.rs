use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::lattice::Grid;

#[derive(Clone, Copy, PartialEq)]
struct Key {
    t: f64,
    even: bool,
    idx: usize,
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.even.cmp(&other.even))
            .then(self.idx.cmp(&other.idx))
    }
}

/// Re-resolves jamming after a single site's time changes, touching only the
/// sites whose state actually moves.
///
/// Sites are revisited in order of their new times. A site is occupied iff no
/// earlier neighbour is occupied, so once its earlier neighbours are final its
/// state is final too; a state change is passed on to later neighbours only.
pub struct Rejam<'a> {
    grid: &'a Grid,
    t: &'a [f64],
    base: &'a [bool],
    stamp: Vec<u32>,
    queued: Vec<u32>,
    overlay: Vec<bool>,
    epoch: u32,
    changed: Vec<usize>,
    heap: BinaryHeap<Reverse<Key>>,
}

impl<'a> Rejam<'a> {
    pub fn new(grid: &'a Grid, t: &'a [f64], base: &'a [bool]) -> Rejam<'a> {
        let n = grid.len();
        Rejam {
            grid,
            t,
            base,
            stamp: vec![0; n],
            queued: vec![0; n],
            overlay: vec![false; n],
            epoch: 0,
            changed: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn state(&self, i: usize) -> bool {
        if self.stamp[i] == self.epoch {
            self.overlay[i]
        } else {
            self.base[i]
        }
    }

    fn key(&self, i: usize, x: usize, tx: f64) -> Key {
        Key {
            t: if i == x { tx } else { self.t[i] },
            even: !self.grid.is_odd(i),
            idx: i,
        }
    }

    fn push(&mut self, i: usize, x: usize, tx: f64) {
        if self.queued[i] != self.epoch {
            self.queued[i] = self.epoch;
            let k = self.key(i, x, tx);
            self.heap.push(Reverse(k));
        }
    }

    /// Sites whose occupation flips when `t[x]` is replaced by `tx`.
    pub fn apply(&mut self, x: usize, tx: f64) -> Result<&[usize]> {
        self.epoch += 1;
        self.changed.clear();
        self.heap.clear();
        self.push(x, x, tx);
        for j in self.grid.neighbors(x).collect::<Vec<_>>() {
            self.push(j, x, tx);
        }
        while let Some(Reverse(k)) = self.heap.pop() {
            let y = k.idx;
            let mut occupied = true;
            let mut later = [usize::MAX; 4];
            let mut n_later = 0;
            for j in self.grid.neighbors(y) {
                let kj = self.key(j, x, tx);
                if kj.t == k.t && k.t > 0.0 {
                    return Err(Error::Tie(y.min(j), y.max(j)));
                }
                if kj < k {
                    if self.state(j) {
                        occupied = false;
                    }
                } else {
                    later[n_later] = j;
                    n_later += 1;
                }
            }
            if occupied != self.state(y) {
                if self.stamp[y] != self.epoch {
                    self.stamp[y] = self.epoch;
                    self.changed.push(y);
                }
                self.overlay[y] = occupied;
                for &j in &later[..n_later] {
                    self.push(j, x, tx);
                }
            }
        }
        self.changed.retain(|&i| self.overlay[i] != self.base[i]);
        Ok(&self.changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Rect, Window};
    use crate::rsa_process::{jam, ArrivalField, Params};
    use std::sync::Arc;

    #[test]
    fn matches_full_rejam() {
        let grid = Arc::new(Grid::new(Window::plane(Rect::new(0, 9, 0, 7).unwrap())));
        let params = Params::new(1.3, 0.5, 0.2).unwrap();
        for seed in 0..30 {
            let f = ArrivalField::sample(grid.clone(), seed, 1);
            let t = f.times(&params);
            let base = jam(&grid, &t).unwrap();
            let mut rj = Rejam::new(&grid, &t, &base);
            for x in (0..grid.len()).step_by(7) {
                for &tx in &[0.0, t[x] * 0.5, t[x] + 0.8, 3.0] {
                    let mut t2 = t.clone();
                    t2[x] = tx;
                    let full = jam(&grid, &t2).unwrap();
                    let changed = rj.apply(x, tx).unwrap().to_vec();
                    let mut inc = base.clone();
                    for &c in &changed {
                        inc[c] = !inc[c];
                    }
                    assert_eq!(inc, full, "seed {seed} site {x} tx {tx}");
                }
            }
        }
    }
}
