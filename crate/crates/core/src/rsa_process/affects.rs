use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{domain, Result};
use crate::lattice::{Grid, Rect, Window};

#[derive(Clone, Copy, PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Search for a path whose odd-site times are nondecreasing.
///
/// Walks and self-avoiding paths are interchangeable here: cutting a loop out of
/// a walk removes a subsequence of its odd times, which stays nondecreasing. So
/// it is enough to keep, per site, the smallest "last odd time" of any walk
/// reaching it, which is a Dijkstra-style label.
fn monotone_reach(
    grid: &Grid,
    t: &[f64],
    sources: &[usize],
    allowed: impl Fn(usize) -> bool,
    target: impl Fn(usize) -> bool,
) -> bool {
    let mut best = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    let entry = |s: usize| if grid.is_odd(s) { t[s] } else { f64::NEG_INFINITY };
    for &s in sources {
        let l = entry(s);
        if l < best[s] {
            best[s] = l;
            heap.push(Reverse(Label(l, s)));
        }
    }
    while let Some(Reverse(Label(l, u))) = heap.pop() {
        if l > best[u] {
            continue;
        }
        if target(u) {
            return true;
        }
        for v in grid.neighbors(u) {
            if !allowed(v) {
                continue;
            }
            let next = if grid.is_odd(v) {
                if t[v] < l {
                    continue;
                }
                t[v]
            } else {
                l
            };
            if next < best[v] {
                best[v] = next;
                heap.push(Reverse(Label(next, v)));
            }
        }
    }
    false
}

/// Whether site `x` affects site `y` under effective times `t`.
///
/// Paths start at a neighbour of `x`, so every neighbour of `x` is affected.
/// Paths through `x` itself are skipped; any such path has a suffix starting at
/// another neighbour of `x` that is just as good.
pub fn affects(grid: &Grid, t: &[f64], x: usize, y: usize) -> Result<bool> {
    if x == y {
        return domain("affects needs distinct sites");
    }
    if x >= grid.len() || y >= grid.len() {
        return domain("site index outside window");
    }
    let sources: Vec<usize> = grid.neighbors(x).collect();
    Ok(monotone_reach(grid, t, &sources, |v| v != x, |v| v == y))
}

/// Generation index per site, `None` where the partition leaves a site unassigned.
pub type Generation = Option<usize>;

/// `G_0 = {root}`; a site joins `G_{k+1}` when its time beats every neighbour not
/// yet placed in `G_0, ..., G_k`.
pub fn generations(grid: &Grid, t: &[f64], root: usize) -> Result<Vec<Generation>> {
    if root >= grid.len() {
        return domain("root outside window");
    }
    let mut gen: Vec<Generation> = vec![None; grid.len()];
    gen[root] = Some(0);
    let mut rest: Vec<usize> = (0..grid.len()).filter(|&i| i != root).collect();
    let mut k = 0;
    loop {
        let fresh: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&z| grid.neighbors(z).all(|w| gen[w].is_some() || t[z] < t[w]))
            .collect();
        if fresh.is_empty() {
            break;
        }
        k += 1;
        for &z in &fresh {
            gen[z] = Some(k);
        }
        rest.retain(|&z| gen[z].is_none());
    }
    Ok(gen)
}

fn e_dense_impl(grid: &Grid, t: &[f64], r: &Rect, buffer: u32, open: bool) -> Result<bool> {
    let big = r.enlarged(buffer as i32);
    match grid.window() {
        Window::Plane(w) => {
            if !w.contains_rect(&big) {
                return domain("enlarged rectangle does not fit in the window");
            }
        }
        Window::Torus { side } => {
            if big.width() > *side as usize || big.height() > *side as usize {
                return domain("enlarged rectangle wraps around the torus");
            }
        }
    }
    let mut in_big = vec![false; grid.len()];
    let mut in_r = vec![false; grid.len()];
    for y in big.y_lo..=big.y_hi {
        for x in big.x_lo..=big.x_hi {
            let i = grid.index(x, y).expect("checked above");
            in_big[i] = true;
            in_r[i] = r.contains(x, y);
        }
    }
    let mut sources = Vec::new();
    for i in 0..grid.len() {
        if !in_big[i] {
            continue;
        }
        let exposed = grid.neighbors(i).any(|j| !in_big[j]) || (open && grid.on_boundary(i));
        if exposed {
            if in_r[i] {
                return Ok(false);
            }
            sources.push(i);
        }
    }
    Ok(!monotone_reach(grid, t, &sources, |v| in_big[v], |v| in_r[v]))
}

/// No site of `r` is affected by an in-window site outside `r` enlarged by `buffer`.
pub fn e_dense(grid: &Grid, t: &[f64], r: &Rect, buffer: u32) -> Result<bool> {
    e_dense_impl(grid, t, r, buffer, false)
}

/// As [`e_dense`], but the free boundary of a plane window also counts as
/// exposed, as it would be inside the infinite lattice.
pub fn e_dense_open(grid: &Grid, t: &[f64], r: &Rect, buffer: u32) -> Result<bool> {
    e_dense_impl(grid, t, r, buffer, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Window;

    fn line(n: i32) -> Grid {
        Grid::new(Window::plane(Rect::new(0, n - 1, 0, 0).unwrap()))
    }

    #[test]
    fn neighbours_always_affected() {
        let g = line(3);
        let t = [0.5, 0.1, 0.9];
        assert!(affects(&g, &t, 0, 1).unwrap());
        assert!(affects(&g, &t, 2, 1).unwrap());
    }

    #[test]
    fn decreasing_odd_sequence_blocks() {
        // sites 0..4 on a line: 1 and 3 are odd
        let g = line(5);
        let t = [0.5, 0.2, 0.5, 0.8, 0.5];
        // path 1,2,3 from neighbour of 0: odd times 0.2, 0.8 increasing
        assert!(affects(&g, &t, 0, 3).unwrap());
        let t = [0.5, 0.9, 0.5, 0.3, 0.5];
        assert!(!affects(&g, &t, 0, 3).unwrap());
        // y even: path 1,2 has a single odd site
        assert!(affects(&g, &t, 0, 2).unwrap());
        assert!(affects(&g, &t, 4, 2).unwrap());
        assert!(!affects(&g, &t, 0, 4).unwrap());
    }

    #[test]
    fn generation_basics() {
        let g = line(4);
        let t = [0.5, 0.1, 0.3, 0.7];
        let gen = generations(&g, &t, 0).unwrap();
        assert_eq!(gen[0], Some(0));
        assert_eq!(gen[1], Some(1));
        assert_eq!(gen[2], Some(2));
        assert_eq!(gen[3], Some(3));
    }

    #[test]
    fn buffer_zero_on_two_sites_fails() {
        let g = line(2);
        let r = Rect::new(0, 0, 0, 0).unwrap();
        // outside neighbour arrives first
        let t = [0.9, 0.1];
        let g2 = Grid::new(Window::plane(Rect::new(-1, 0, 0, 0).unwrap()));
        assert!(!e_dense(&g2, &t, &r, 0).unwrap());
        // whole window inside the enlarged rect
        let r = Rect::new(0, 1, 0, 0).unwrap();
        assert!(e_dense(&g, &t, &r, 0).unwrap());
        assert!(!e_dense_open(&g, &t, &r, 0).unwrap());
        assert!(e_dense(&g, &t, &Rect::new(0, 0, 0, 0).unwrap(), 3).is_err());
    }
}
