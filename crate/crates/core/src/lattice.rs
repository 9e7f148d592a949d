//! Geometry of the enhanced lattice: octagon sites on `Z^2`, diamond sites at
//! the cell corners, and the truncated square tiling whose faces they index.
//!
//! A diamond is named by its lower-left octagon: `Site::diamond(x, y)` is the
//! point `(x + 1/2, y + 1/2)`. All geometry is integer arithmetic.

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteKind {
    Octagon,
    Diamond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(x: i32, y: i32) -> Parity {
        if (x + y).rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub kind: SiteKind,
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn octagon(x: i32, y: i32) -> Site {
        Site {
            kind: SiteKind::Octagon,
            x,
            y,
        }
    }

    pub const fn diamond(x: i32, y: i32) -> Site {
        Site {
            kind: SiteKind::Diamond,
            x,
            y,
        }
    }

    pub fn is_octagon(&self) -> bool {
        self.kind == SiteKind::Octagon
    }

    /// Parity of an octagon; diamonds have none.
    pub fn parity(&self) -> Option<Parity> {
        match self.kind {
            SiteKind::Octagon => Some(Parity::of(self.x, self.y)),
            SiteKind::Diamond => None,
        }
    }
}

/// Inclusive rectangle of octagon coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x_lo: i32,
    pub x_hi: i32,
    pub y_lo: i32,
    pub y_hi: i32,
}

impl Rect {
    pub fn new(x_lo: i32, x_hi: i32, y_lo: i32, y_hi: i32) -> Result<Rect> {
        if x_hi < x_lo || y_hi < y_lo {
            return domain(format!(
                "empty rectangle [{x_lo},{x_hi}]x[{y_lo},{y_hi}]"
            ));
        }
        Ok(Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    /// `R(2n, rho) = [-floor(rho n), floor(rho n) - 1] x [-n, n - 1]`.
    pub fn crossing_box(n: u32, rho: f64) -> Result<Rect> {
        if n == 0 || !(rho > 0.0) || !rho.is_finite() {
            return domain(format!("invalid box geometry n={n}, rho={rho}"));
        }
        let half_width = (rho * n as f64).floor() as i32;
        if half_width < 1 {
            return domain(format!("floor(rho*n) must be >= 1 (n={n}, rho={rho})"));
        }
        let n = n as i32;
        Rect::new(-half_width, half_width - 1, -n, n - 1)
    }

    pub fn width(&self) -> usize {
        (self.x_hi - self.x_lo + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_hi - self.y_lo + 1) as usize
    }

    pub fn long_side(&self) -> usize {
        self.width().max(self.height())
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.x_lo, other.y_lo) && self.contains(other.x_hi, other.y_hi)
    }

    pub fn enlarged(&self, r: i32) -> Rect {
        Rect {
            x_lo: self.x_lo - r,
            x_hi: self.x_hi + r,
            y_lo: self.y_lo - r,
            y_hi: self.y_hi + r,
        }
    }

    /// Diamond `x'` lies strictly inside the face set iff `x` and `x + (1,1)` are in the rectangle.
    pub fn contains_diamond(&self, x: i32, y: i32) -> bool {
        self.contains(x, y) && self.contains(x + 1, y + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Finite piece of the plane with free boundary.
    Plane(Rect),
    /// `side x side` torus of octagons with coordinates taken mod `side`.
    Torus { side: i32 },
}

impl Window {
    pub fn plane(rect: Rect) -> Window {
        Window::Plane(rect)
    }

    pub fn torus(side: i32) -> Result<Window> {
        if side < 4 || side % 2 != 0 {
            return domain(format!("torus side must be even and >= 4, got {side}"));
        }
        Ok(Window::Torus { side })
    }

    pub fn contains(&self, s: &Site) -> bool {
        match (self, s.kind) {
            (Window::Torus { .. }, _) => true,
            (Window::Plane(r), SiteKind::Octagon) => r.contains(s.x, s.y),
            (Window::Plane(r), SiteKind::Diamond) => r.contains_diamond(s.x, s.y),
        }
    }

    /// Face adjacency in this window; on a torus coordinates are compared mod the side.
    pub fn adjacent(&self, a: &Site, b: &Site) -> bool {
        match self {
            Window::Plane(_) => face_adjacency(a, b),
            Window::Torus { side } => {
                let side = *side;
                let d = |u: i32, v: i32| (u - v).rem_euclid(side);
                match (a.kind, b.kind) {
                    (SiteKind::Octagon, SiteKind::Octagon) => {
                        let (dx, dy) = (d(a.x, b.x), d(a.y, b.y));
                        (dy == 0 && (dx == 1 || dx == side - 1))
                            || (dx == 0 && (dy == 1 || dy == side - 1))
                    }
                    (SiteKind::Diamond, SiteKind::Diamond) => false,
                    (SiteKind::Octagon, SiteKind::Diamond) => {
                        let (dx, dy) = (d(a.x, b.x), d(a.y, b.y));
                        dx <= 1 && dy <= 1
                    }
                    (SiteKind::Diamond, SiteKind::Octagon) => self.adjacent(b, a),
                }
            }
        }
    }
}

/// The four octagon neighbours at unit distance, then the four corner diamonds.
pub fn octagon_neighbors(s: &Site, w: &Window) -> Result<Vec<Site>> {
    if !s.is_octagon() {
        return domain("octagon_neighbors needs an octagon site");
    }
    if !w.contains(s) {
        return domain(format!("site ({}, {}) outside window", s.x, s.y));
    }
    let (x, y) = (s.x, s.y);
    let candidates = [
        Site::octagon(x + 1, y),
        Site::octagon(x - 1, y),
        Site::octagon(x, y + 1),
        Site::octagon(x, y - 1),
        Site::diamond(x, y),
        Site::diamond(x - 1, y),
        Site::diamond(x, y - 1),
        Site::diamond(x - 1, y - 1),
    ];
    Ok(candidates.into_iter().filter(|c| w.contains(c)).collect())
}

pub fn diamond_neighbors(s: &Site, w: &Window) -> Result<Vec<Site>> {
    if s.is_octagon() {
        return domain("diamond_neighbors needs a diamond site");
    }
    if !w.contains(s) {
        return domain(format!("diamond ({}, {})' outside window", s.x, s.y));
    }
    let (x, y) = (s.x, s.y);
    Ok(vec![
        Site::octagon(x, y),
        Site::octagon(x + 1, y),
        Site::octagon(x, y + 1),
        Site::octagon(x + 1, y + 1),
    ])
}

/// Two faces of the truncated square tiling share an edge.
pub fn face_adjacency(a: &Site, b: &Site) -> bool {
    match (a.kind, b.kind) {
        (SiteKind::Octagon, SiteKind::Octagon) => (a.x - b.x).abs() + (a.y - b.y).abs() == 1,
        (SiteKind::Diamond, SiteKind::Diamond) => false,
        (SiteKind::Octagon, SiteKind::Diamond) => {
            let (dx, dy) = (a.x - b.x, a.y - b.y);
            (0..=1).contains(&dx) && (0..=1).contains(&dy)
        }
        (SiteKind::Diamond, SiteKind::Octagon) => face_adjacency(b, a),
    }
}

/// Octagons of `r` followed by the diamonds strictly inside it.
pub fn rect_faces(r: &Rect, w: &Window) -> Result<Vec<Site>> {
    if r.x_hi < r.x_lo || r.y_hi < r.y_lo {
        return domain("empty rectangle");
    }
    if let Window::Plane(outer) = w {
        if !outer.contains_rect(r) {
            return domain("rectangle does not fit in window");
        }
    }
    let mut out = Vec::with_capacity(2 * r.width() * r.height());
    for y in r.y_lo..=r.y_hi {
        for x in r.x_lo..=r.x_hi {
            out.push(Site::octagon(x, y));
        }
    }
    for y in r.y_lo..r.y_hi {
        for x in r.x_lo..r.x_hi {
            out.push(Site::diamond(x, y));
        }
    }
    Ok(out)
}

pub(crate) const NO_SITE: u32 = u32::MAX;

/// Dense indexing of a window for the simulation hot loops.
///
/// Octagon `i` and diamond slot `i` share an index: the slot holds the diamond
/// whose lower-left octagon is `i`. On a plane window the slots in the last
/// row and column are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    window: Window,
    width: usize,
    height: usize,
    x0: i32,
    y0: i32,
    neighbors: Vec<[u32; 4]>,
    odd: Vec<bool>,
}

impl Grid {
    pub fn new(window: Window) -> Grid {
        let (width, height, x0, y0) = match window {
            Window::Plane(r) => (r.width(), r.height(), r.x_lo, r.y_lo),
            Window::Torus { side } => (side as usize, side as usize, 0, 0),
        };
        let mut grid = Grid {
            window,
            width,
            height,
            x0,
            y0,
            neighbors: Vec::with_capacity(width * height),
            odd: Vec::with_capacity(width * height),
        };
        for i in 0..width * height {
            let (x, y) = grid.coords(i);
            let nb = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
                .map(|(a, b)| grid.index(a, b).map_or(NO_SITE, |j| j as u32));
            grid.neighbors.push(nb);
            grid.odd.push(Parity::of(x, y) == Parity::Odd);
        }
        grid
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.window, Window::Torus { .. })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of octagon sites (and of diamond slots).
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: i32, y: i32) -> Option<usize> {
        let (mut dx, mut dy) = (x - self.x0, y - self.y0);
        if self.is_torus() {
            dx = dx.rem_euclid(self.width as i32);
            dy = dy.rem_euclid(self.height as i32);
        } else if dx < 0 || dy < 0 || dx >= self.width as i32 || dy >= self.height as i32 {
            return None;
        }
        Some(dy as usize * self.width + dx as usize)
    }

    pub fn coords(&self, i: usize) -> (i32, i32) {
        (
            self.x0 + (i % self.width) as i32,
            self.y0 + (i / self.width) as i32,
        )
    }

    #[inline]
    pub fn is_odd(&self, i: usize) -> bool {
        self.odd[i]
    }

    #[inline]
    pub(crate) fn raw_neighbors(&self, i: usize) -> &[u32; 4] {
        &self.neighbors[i]
    }

    /// Unit-distance octagon neighbours of octagon `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i]
            .iter()
            .filter(|&&j| j != NO_SITE)
            .map(|&j| j as usize)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn diamond_valid(&self, i: usize) -> bool {
        if self.is_torus() {
            return true;
        }
        i % self.width + 1 < self.width && i / self.width + 1 < self.height
    }

    /// Octagons at the corners of diamond slot `i`: `x, x+(1,0), x+(0,1), x+(1,1)`.
    pub fn diamond_corners(&self, i: usize) -> Option<[usize; 4]> {
        if !self.diamond_valid(i) {
            return None;
        }
        let (x, y) = self.coords(i);
        Some([
            i,
            self.index(x + 1, y)?,
            self.index(x, y + 1)?,
            self.index(x + 1, y + 1)?,
        ])
    }

    pub fn octagon_index(&self, s: &Site) -> Option<usize> {
        if !s.is_octagon() || !self.window.contains(s) {
            return None;
        }
        self.index(s.x, s.y)
    }

    pub fn diamond_index(&self, s: &Site) -> Option<usize> {
        if s.is_octagon() || !self.window.contains(s) {
            return None;
        }
        self.index(s.x, s.y).filter(|&i| self.diamond_valid(i))
    }

    /// Whether octagon `i` sits on the edge of a plane window.
    pub fn on_boundary(&self, i: usize) -> bool {
        self.neighbors[i].contains(&NO_SITE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn set(v: Vec<Site>) -> HashSet<Site> {
        v.into_iter().collect()
    }

    #[test]
    fn origin_on_torus_has_degree_eight() {
        let w = Window::torus(8).unwrap();
        let got = set(octagon_neighbors(&Site::octagon(0, 0), &w).unwrap());
        let want = set(vec![
            Site::octagon(1, 0),
            Site::octagon(-1, 0),
            Site::octagon(0, 1),
            Site::octagon(0, -1),
            Site::diamond(0, 0),
            Site::diamond(-1, 0),
            Site::diamond(0, -1),
            Site::diamond(-1, -1),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn diamond_touches_four_octagons() {
        let w = Window::torus(8).unwrap();
        let got = set(diamond_neighbors(&Site::diamond(2, 3), &w).unwrap());
        let want = set(vec![
            Site::octagon(2, 3),
            Site::octagon(3, 3),
            Site::octagon(2, 4),
            Site::octagon(3, 4),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn plane_corner_is_truncated() {
        let w = Window::plane(Rect::new(0, 3, 0, 3).unwrap());
        let nb = octagon_neighbors(&Site::octagon(0, 0), &w).unwrap();
        assert_eq!(nb.len(), 3);
        assert!(nb.iter().all(|s| w.contains(s)));
        assert!(octagon_neighbors(&Site::octagon(5, 0), &w).is_err());
    }

    #[test]
    fn adjacency_examples() {
        assert!(face_adjacency(&Site::octagon(0, 0), &Site::octagon(1, 0)));
        assert!(!face_adjacency(&Site::octagon(0, 0), &Site::octagon(1, 1)));
        assert!(face_adjacency(&Site::diamond(0, 0), &Site::octagon(1, 1)));
        assert!(!face_adjacency(&Site::diamond(0, 0), &Site::diamond(1, 0)));
        assert!(!face_adjacency(&Site::octagon(0, 0), &Site::octagon(0, 0)));
    }

    #[test]
    fn rect_face_counts() {
        let w = Window::plane(Rect::new(-5, 5, -5, 5).unwrap());
        let faces = rect_faces(&Rect::new(0, 1, 0, 1).unwrap(), &w).unwrap();
        assert_eq!(faces.iter().filter(|s| s.is_octagon()).count(), 4);
        assert_eq!(faces.iter().filter(|s| !s.is_octagon()).count(), 1);
        let faces = rect_faces(&Rect::new(0, 0, 0, 0).unwrap(), &w).unwrap();
        assert_eq!(faces.len(), 1);
        let r = Rect::crossing_box(2, 1.0).unwrap();
        assert_eq!(r, Rect::new(-2, 1, -2, 1).unwrap());
        let faces = rect_faces(&r, &w).unwrap();
        assert_eq!(faces.iter().filter(|s| s.is_octagon()).count(), 16);
        assert_eq!(faces.iter().filter(|s| !s.is_octagon()).count(), 9);
        assert!(Rect::new(1, 0, 0, 0).is_err());
    }

    #[test]
    fn crossing_box_shape() {
        let r = Rect::crossing_box(16, 3.0).unwrap();
        assert_eq!((r.width(), r.height()), (96, 32));
        assert!(Rect::crossing_box(4, 0.2).is_err());
    }

    #[test]
    fn torus_counts_and_handshake() {
        let n = 5;
        let grid = Grid::new(Window::torus(2 * n).unwrap());
        assert_eq!(grid.len(), (4 * n * n) as usize);
        let diamonds = (0..grid.len()).filter(|&i| grid.diamond_valid(i)).count();
        assert_eq!(diamonds, (4 * n * n) as usize);
        // each octagon: 4 octagon edges + 4 diamond edges; each diamond: 4 edges
        let octagon_degree: usize = (0..grid.len()).map(|i| grid.degree(i) + 4).sum();
        let edges = 2 * grid.len() + 4 * diamonds;
        assert_eq!(octagon_degree + 4 * diamonds, 2 * edges);
        for i in 0..grid.len() {
            let c = grid.diamond_corners(i).unwrap();
            let uniq: HashSet<_> = c.iter().collect();
            assert_eq!(uniq.len(), 4);
        }
    }

    #[test]
    fn torus_adjacency_is_translation_invariant() {
        let w = Window::torus(8).unwrap();
        let faces: Vec<Site> = (0..8)
            .flat_map(|x| (0..8).flat_map(move |y| [Site::octagon(x, y), Site::diamond(x, y)]))
            .collect();
        for a in faces.iter().step_by(3) {
            for b in faces.iter().step_by(5) {
                let adj = w.adjacent(a, b);
                assert_eq!(adj, w.adjacent(b, a));
                if a == b {
                    assert!(!adj);
                }
                let shift = |s: &Site| Site {
                    x: s.x + 2,
                    y: s.y - 4,
                    ..*s
                };
                assert_eq!(adj, w.adjacent(&shift(a), &shift(b)));
            }
        }
        assert!(w.adjacent(&Site::octagon(0, 0), &Site::octagon(7, 0)));
        assert!(w.adjacent(&Site::octagon(0, 0), &Site::diamond(7, 7)));
    }

    #[test]
    fn parity_is_consistent_on_even_torus() {
        let grid = Grid::new(Window::torus(6).unwrap());
        for i in 0..grid.len() {
            for j in grid.neighbors(i) {
                assert_ne!(grid.is_odd(i), grid.is_odd(j));
            }
        }
        assert!(Window::torus(7).is_err());
    }
}
