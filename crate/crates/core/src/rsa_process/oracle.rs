//! Exact jamming law on tiny graphs.
//!
//! By memorylessness, the next arrival among the still-empty sites `E` is at `i`
//! with probability `lambda_i / sum_E lambda`. An arrival occupies `i` and removes
//! its closed neighbourhood from `E`; arrivals at blocked sites change nothing, so
//! they are dropped. Odd sites with time 0 are placed first, summed over subsets.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{octagon_colours, FaceColours, Params};
use crate::error::{domain, Error, Result};
use crate::lattice::Grid;
use crate::poly::Poly;

/// Largest number of octagons the oracle accepts.
pub const ORACLE_CAP: usize = 9;
/// Largest number of diamonds whose colourings are enumerated.
pub const DIAMOND_CAP: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleGraph {
    adj: Vec<u32>,
    odd: Vec<bool>,
}

/// Per-site modification of the arrival law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Override {
    Free,
    /// Odd site with time 0.
    ForceZero,
    /// Odd site with its exponential time, never 0.
    ForcePositive,
    /// Arrival time increased by an independent exponential of the site's rate.
    ExtraDelay,
}

impl OracleGraph {
    pub fn new(adj: &[Vec<usize>], odd: Vec<bool>) -> Result<OracleGraph> {
        let n = odd.len();
        if n > ORACLE_CAP {
            return Err(Error::Size {
                what: "oracle sites",
                got: n,
                limit: ORACLE_CAP,
            });
        }
        if adj.len() != n {
            return domain("adjacency and parity lengths differ");
        }
        let mut masks = vec![0u32; n];
        for (i, list) in adj.iter().enumerate() {
            for &j in list {
                if j >= n || j == i {
                    return domain(format!("bad edge {i}-{j}"));
                }
                masks[i] |= 1 << j;
                masks[j] |= 1 << i;
            }
        }
        Ok(OracleGraph { adj: masks, odd })
    }

    pub fn from_grid(grid: &Grid) -> Result<OracleGraph> {
        if grid.len() > ORACLE_CAP {
            return Err(Error::Size {
                what: "oracle sites",
                got: grid.len(),
                limit: ORACLE_CAP,
            });
        }
        let adj: Vec<Vec<usize>> = (0..grid.len()).map(|i| grid.neighbors(i).collect()).collect();
        OracleGraph::new(&adj, (0..grid.len()).map(|i| grid.is_odd(i)).collect())
    }

    /// Path `0 - 1 - ... - (n-1)` with alternating parity, site 0 even.
    pub fn path(n: usize) -> Result<OracleGraph> {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| if i + 1 < n { vec![i + 1] } else { vec![] })
            .collect();
        OracleGraph::new(&adj, (0..n).map(|i| i % 2 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.odd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.odd.is_empty()
    }

    /// Same graph with sites renumbered: new site `perm[i]` is old site `i`.
    pub fn relabel(&self, perm: &[usize]) -> Result<OracleGraph> {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        let mut odd = vec![false; n];
        for i in 0..n {
            odd[perm[i]] = self.odd[i];
            for j in 0..n {
                if self.adj[i] >> j & 1 == 1 {
                    adj[perm[i]].push(perm[j]);
                }
            }
        }
        OracleGraph::new(&adj, odd)
    }
}

struct Solver<'a> {
    g: &'a OracleGraph,
    rate: Vec<f64>,
    delayed: Option<usize>,
    memo: HashMap<(u32, bool), Vec<(u32, f64)>>,
}

impl Solver<'_> {
    fn solve(&mut self, empty: u32, stage_done: bool) -> Vec<(u32, f64)> {
        if empty == 0 {
            return vec![(0, 1.0)];
        }
        if let Some(v) = self.memo.get(&(empty, stage_done)) {
            return v.clone();
        }
        let total: f64 = (0..self.g.len())
            .filter(|&i| empty >> i & 1 == 1)
            .map(|i| self.rate[i])
            .sum();
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for i in 0..self.g.len() {
            if empty >> i & 1 == 0 {
                continue;
            }
            let w = self.rate[i] / total;
            if self.delayed == Some(i) && !stage_done {
                for (m, q) in self.solve(empty, true) {
                    *acc.entry(m).or_default() += w * q;
                }
            } else {
                let rest = empty & !(1 << i) & !self.g.adj[i];
                for (m, q) in self.solve(rest, stage_done) {
                    *acc.entry(m | 1 << i).or_default() += w * q;
                }
            }
        }
        let out: Vec<(u32, f64)> = acc.into_iter().collect();
        self.memo.insert((empty, stage_done), out.clone());
        out
    }
}

/// Exact law of the occupied set (bitmask over sites) under `params`.
pub fn exact_oracle(g: &OracleGraph, params: &Params) -> Result<Vec<(u32, f64)>> {
    exact_oracle_with(g, params, &vec![Override::Free; g.len()])
}

pub fn exact_oracle_with(
    g: &OracleGraph,
    params: &Params,
    overrides: &[Override],
) -> Result<Vec<(u32, f64)>> {
    params.validate()?;
    let n = g.len();
    if overrides.len() != n {
        return domain("one override per site is required");
    }
    let mut delayed = None;
    let mut zero_prob = vec![0.0; n];
    for (i, o) in overrides.iter().enumerate() {
        match o {
            Override::Free => {
                if g.odd[i] {
                    zero_prob[i] = params.zero_prob();
                }
            }
            Override::ForceZero => {
                if !g.odd[i] {
                    return domain("only odd sites can be given time 0");
                }
                zero_prob[i] = 1.0;
            }
            Override::ForcePositive => {}
            Override::ExtraDelay => {
                if delayed.replace(i).is_some() {
                    return domain("at most one delayed site");
                }
            }
        }
    }
    let rate: Vec<f64> = (0..n)
        .map(|i| if g.odd[i] { 1.0 } else { params.lambda })
        .collect();
    let mut solver = Solver {
        g,
        rate,
        delayed,
        memo: HashMap::new(),
    };
    let candidates: Vec<usize> = (0..n).filter(|&i| zero_prob[i] > 0.0).collect();
    let full = (1u32 << n) - 1;
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for sub in 0u32..(1 << candidates.len()) {
        let mut weight = 1.0;
        let mut zeros = 0u32;
        for (b, &i) in candidates.iter().enumerate() {
            if sub >> b & 1 == 1 {
                weight *= zero_prob[i];
                zeros |= 1 << i;
            } else {
                weight *= 1.0 - zero_prob[i];
            }
        }
        if weight == 0.0 {
            continue;
        }
        let mut closed = zeros;
        for i in 0..n {
            if zeros >> i & 1 == 1 {
                closed |= g.adj[i];
            }
        }
        for (m, q) in solver.solve(full & !closed, false) {
            *acc.entry(m | zeros).or_default() += weight * q;
        }
    }
    let out: Vec<(u32, f64)> = acc.into_iter().collect();
    Ok(out)
}

/// Probability of `event` as a polynomial in `p`, exactly.
///
/// `fixed` pins chosen diamond slots to a colour; the remaining diamonds are
/// summed over with weight `p^black (1 - p)^white`. `params.p` is not used.
pub fn event_poly(
    grid: &Arc<Grid>,
    params: &Params,
    overrides: &[Override],
    fixed: &[(usize, bool)],
    event: impl Fn(&FaceColours) -> bool,
) -> Result<Poly> {
    let g = OracleGraph::from_grid(grid)?;
    let law = exact_oracle_with(&g, params, overrides)?;
    let slots: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.diamond_valid(i) && !fixed.iter().any(|f| f.0 == i))
        .collect();
    if slots.len() > DIAMOND_CAP {
        return Err(Error::Size {
            what: "oracle diamonds",
            got: slots.len(),
            limit: DIAMOND_CAP,
        });
    }
    let d = slots.len();
    let mut by_black = vec![0.0; d + 1];
    for (mask, prob) in law {
        let occupied: Vec<bool> = (0..grid.len()).map(|i| mask >> i & 1 == 1).collect();
        let oct = octagon_colours(grid, &occupied);
        let mut diamonds = vec![false; grid.len()];
        for &(i, c) in fixed {
            diamonds[i] = c;
        }
        let mut colours = FaceColours::new(grid.clone(), oct, diamonds)?;
        for c in 0u32..(1 << d) {
            for (b, &slot) in slots.iter().enumerate() {
                colours.diamond_black[slot] = c >> b & 1 == 1;
            }
            if event(&colours) {
                by_black[c.count_ones() as usize] += prob;
            }
        }
    }
    let mut poly = Poly::zero();
    for (a, &w) in by_black.iter().enumerate() {
        if w != 0.0 {
            poly = &poly + &Poly::bernstein(a, d - a).scale(w);
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob_of(law: &[(u32, f64)], pred: impl Fn(u32) -> bool) -> f64 {
        law.iter().filter(|e| pred(e.0)).map(|e| e.1).sum()
    }

    #[test]
    fn single_site() {
        let g = OracleGraph::path(1).unwrap();
        let law = exact_oracle(&g, &Params::new(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(law, vec![(1, 1.0)]);
    }

    #[test]
    fn three_path_centre() {
        let g = OracleGraph::path(3).unwrap();
        let law = exact_oracle(&g, &Params::new(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert!((prob_of(&law, |m| m & 2 != 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_path_competition() {
        let g = OracleGraph::path(2).unwrap();
        let law = exact_oracle(&g, &Params::new(2.0, 0.5, 0.0).unwrap()).unwrap();
        assert!((prob_of(&law, |m| m & 1 != 0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn delta_zero_subsets() {
        // odd site 1 is zero with prob 1-e^{-d}; otherwise a fair race
        let g = OracleGraph::path(2).unwrap();
        let d: f64 = 0.4;
        let law = exact_oracle(&g, &Params::new(1.0, 0.5, d).unwrap()).unwrap();
        let z = 1.0 - (-d).exp();
        assert!((prob_of(&law, |m| m & 2 != 0) - (z + (1.0 - z) * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn extra_delay_two_stage() {
        // even site 0 with rate l and an extra rate-l stage, against odd rate 1
        let g = OracleGraph::path(2).unwrap();
        let l = 1.5;
        let law = exact_oracle_with(
            &g,
            &Params::new(l, 0.5, 0.0).unwrap(),
            &[Override::ExtraDelay, Override::Free],
        )
        .unwrap();
        let want = (l / (l + 1.0)).powi(2);
        assert!((prob_of(&law, |m| m & 1 != 0) - want).abs() < 1e-12);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            OracleGraph::path(10),
            Err(Error::Size { .. })
        ));
    }
}
