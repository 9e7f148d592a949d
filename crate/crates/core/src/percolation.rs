//! Crossing events on rectangles and Monte Carlo estimates of crossing probabilities.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::lattice::{Grid, Rect, Window};
use crate::rsa_process::{
    colour_with_times, e_dense_open, ArrivalField, FaceColours, JammedColouring, Params,
};
use crate::stats::{tally, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colour {
    Black,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingSpec {
    pub rect: Rect,
    pub orientation: Orientation,
    pub colour: Colour,
}

impl CrossingSpec {
    pub fn horizontal_black(rect: Rect) -> CrossingSpec {
        CrossingSpec {
            rect,
            orientation: Orientation::Horizontal,
            colour: Colour::Black,
        }
    }

    pub fn vertical_white(rect: Rect) -> CrossingSpec {
        CrossingSpec {
            rect,
            orientation: Orientation::Vertical,
            colour: Colour::White,
        }
    }
}

/// Face colours for a jammed state, with diamonds recoloured at threshold `p`.
pub fn colour_faces(j: &JammedColouring, f: &ArrivalField, p: f64) -> FaceColours {
    let mut c = j.colours.clone();
    c.diamond_black = f.diamond_black(p);
    c
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

fn check_fits(rect: &Rect, grid: &Grid) -> Result<()> {
    let ok = match grid.window() {
        Window::Plane(w) => w.contains_rect(rect),
        Window::Torus { side } => rect.width() <= *side as usize && rect.height() <= *side as usize,
    };
    if ok {
        Ok(())
    } else {
        domain("crossing rectangle does not fit in the window")
    }
}

/// Whether faces of `spec.colour` inside `spec.rect` connect the two opposite
/// sides. Endpoints are octagons in the first and last column (or row).
pub fn has_crossing(spec: &CrossingSpec, colours: &FaceColours) -> Result<bool> {
    let grid = colours.grid();
    check_fits(&spec.rect, grid)?;
    let r = spec.rect;
    let (w, h) = (r.width(), r.height());
    let want = spec.colour == Colour::Black;
    let mut gidx = Vec::with_capacity(w * h);
    for dy in 0..h as i32 {
        for dx in 0..w as i32 {
            gidx.push(grid.index(r.x_lo + dx, r.y_lo + dy).expect("rect fits"));
        }
    }
    let oct = |l: usize| colours.octagon_black[gidx[l]] == want;
    let mut uf = UnionFind::new(w * h);
    for dy in 0..h {
        for dx in 0..w {
            let l = dy * w + dx;
            if oct(l) {
                if dx + 1 < w && oct(l + 1) {
                    uf.union(l as u32, (l + 1) as u32);
                }
                if dy + 1 < h && oct(l + w) {
                    uf.union(l as u32, (l + w) as u32);
                }
            }
            if dx + 1 < w && dy + 1 < h && colours.diamond_black[gidx[l]] == want {
                // the diamond joins whichever of its four corners share its colour
                let corners = [l, l + 1, l + w, l + w + 1];
                let mut first: Option<u32> = None;
                for c in corners {
                    if oct(c) {
                        match first {
                            None => first = Some(c as u32),
                            Some(f) => uf.union(f, c as u32),
                        }
                    }
                }
            }
        }
    }
    let (starts, ends): (Vec<usize>, Vec<usize>) = match spec.orientation {
        Orientation::Horizontal => ((0..h).map(|y| y * w).collect(), (0..h).map(|y| y * w + w - 1).collect()),
        Orientation::Vertical => ((0..w).collect(), (0..w).map(|x| (h - 1) * w + x).collect()),
    };
    let mut hit = vec![false; w * h];
    for s in starts {
        if oct(s) {
            let root = uf.find(s as u32);
            hit[root as usize] = true;
        }
    }
    for e in ends {
        if oct(e) && hit[uf.find(e as u32) as usize] {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Buffer width used around a rectangle whose long side is `s`: `2 ceil(sqrt(s))`.
pub fn default_buffer(rect: &Rect) -> u32 {
    2 * (rect.long_side() as f64).sqrt().ceil() as u32
}

/// A target rectangle inside a plane window that leaves `buffer` sites on every side.
#[derive(Debug, Clone)]
pub struct BoxSetup {
    pub rect: Rect,
    pub buffer: u32,
    pub grid: Arc<Grid>,
}

impl BoxSetup {
    pub fn new(n: u32, rho: f64, buffer: Option<u32>) -> Result<BoxSetup> {
        BoxSetup::around(Rect::crossing_box(n, rho)?, buffer)
    }

    pub fn around(rect: Rect, buffer: Option<u32>) -> Result<BoxSetup> {
        let buffer = buffer.unwrap_or_else(|| default_buffer(&rect));
        BoxSetup::with_window(rect, buffer, rect.enlarged(buffer as i32))
    }

    pub fn with_window(rect: Rect, buffer: u32, window: Rect) -> Result<BoxSetup> {
        if !window.contains_rect(&rect.enlarged(buffer as i32)) {
            return domain("window must contain the buffered rectangle");
        }
        Ok(BoxSetup {
            rect,
            buffer,
            grid: Arc::new(Grid::new(Window::plane(window))),
        })
    }

    pub fn field(&self, seed: u64, stream: u64) -> ArrivalField {
        ArrivalField::sample(self.grid.clone(), seed, stream)
    }
}

/// Retry stride for the (probability zero) case of tied positive times.
const RESAMPLE_STRIDE: u64 = 1 << 40;

/// Evaluate `body` on the trial's field, moving to a fresh stream on a tie.
pub fn with_resample<T>(
    setup: &BoxSetup,
    seed: u64,
    trial: u64,
    mut body: impl FnMut(&ArrivalField) -> Result<T>,
) -> Result<T> {
    let mut stream = trial;
    loop {
        let f = setup.field(seed, stream);
        match body(&f) {
            Err(Error::Tie(..)) => stream = stream.wrapping_add(RESAMPLE_STRIDE),
            other => return other,
        }
    }
}

/// One sample of `H` plus whether the buffer certified locality.
pub fn crossing_sample(setup: &BoxSetup, spec: &CrossingSpec, f: &ArrivalField, params: &Params) -> Result<(bool, bool)> {
    let t = f.times(params);
    let j = colour_with_times(f, &t, params.p)?;
    let hit = has_crossing(spec, &j.colours)?;
    let dense = e_dense_open(&setup.grid, &t, &setup.rect, setup.buffer)?;
    Ok((hit, dense))
}

/// Monte Carlo probability of `spec` on `setup`.
pub fn estimate_crossing(
    setup: &BoxSetup,
    spec: &CrossingSpec,
    params: &Params,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    params.validate()?;
    if trials == 0 {
        return domain("need at least one trial");
    }
    check_fits(&spec.rect, &setup.grid)?;
    let counts = tally::<3, _>(trials, |i| {
        match with_resample(setup, seed, i, |f| crossing_sample(setup, spec, f, params)) {
            Ok((hit, dense)) => [hit as i64, (!dense) as i64, 0],
            Err(_) => [0, 0, 1],
        }
    });
    if counts[2] > 0 {
        return Err(Error::Diagnostics(format!("{} trials failed", counts[2])));
    }
    Ok(Estimate::from_counts(counts[0] as u64, trials, counts[1] as u64))
}

/// Minimum trial count accepted by [`estimate_h`].
pub const MIN_TRIALS: u64 = 100;

/// `h_rho(n, lambda, p, delta)`: horizontal black crossing of `R(2n, rho)`.
pub fn estimate_h(n: u32, rho: f64, params: &Params, trials: u64, seed: u64) -> Result<Estimate> {
    estimate_h_buffered(n, rho, params, trials, seed, None)
}

pub fn estimate_h_buffered(
    n: u32,
    rho: f64,
    params: &Params,
    trials: u64,
    seed: u64,
    buffer: Option<u32>,
) -> Result<Estimate> {
    if trials < MIN_TRIALS {
        return domain(format!("trials must be at least {MIN_TRIALS}"));
    }
    let setup = BoxSetup::new(n, rho, buffer)?;
    estimate_crossing(&setup, &CrossingSpec::horizontal_black(setup.rect), params, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colours(grid: &Arc<Grid>, oct: bool, dia: bool) -> FaceColours {
        FaceColours::new(grid.clone(), vec![oct; grid.len()], vec![dia; grid.len()]).unwrap()
    }

    #[test]
    fn all_black_and_all_white() {
        let r = Rect::new(0, 4, 0, 3).unwrap();
        let grid = Arc::new(Grid::new(Window::plane(r)));
        let spec = CrossingSpec::horizontal_black(r);
        assert!(has_crossing(&spec, &colours(&grid, true, true)).unwrap());
        assert!(!has_crossing(&spec, &colours(&grid, false, false)).unwrap());
    }

    #[test]
    fn diagonal_needs_diamond() {
        let r = Rect::new(0, 1, 0, 1).unwrap();
        let grid = Arc::new(Grid::new(Window::plane(r)));
        // black at (0,0) and (1,1) only
        let oct = vec![true, false, false, true];
        let mut c = FaceColours::new(grid.clone(), oct, vec![false; 4]).unwrap();
        let spec = CrossingSpec::horizontal_black(r);
        assert!(!has_crossing(&spec, &c).unwrap());
        c.diamond_black[0] = true;
        assert!(has_crossing(&spec, &c).unwrap());
    }

    #[test]
    fn rect_outside_window_is_rejected() {
        let grid = Arc::new(Grid::new(Window::plane(Rect::new(0, 2, 0, 2).unwrap())));
        let spec = CrossingSpec::horizontal_black(Rect::new(0, 3, 0, 2).unwrap());
        assert!(has_crossing(&spec, &colours(&grid, true, true)).is_err());
    }

    #[test]
    fn buffer_formula() {
        assert_eq!(default_buffer(&Rect::crossing_box(8, 1.0).unwrap()), 8);
        assert_eq!(default_buffer(&Rect::crossing_box(16, 3.0).unwrap()), 20);
    }

    #[test]
    fn too_few_trials() {
        let params = Params::new(1.0, 0.5, 0.0).unwrap();
        assert!(estimate_h(2, 1.0, &params, 10, 1).is_err());
    }
}
