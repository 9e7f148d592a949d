//! Time-block discretisation of the torus model and the crude crossing event.
//!
//! Each octagon's time axis is cut into blocks `[k delta, (k+1) delta)` for
//! `k = 0..=floor(n/delta)`. A cell takes a value in `{0,1,2,3}`: 3 marks an
//! arrival at an even site, 0 an arrival at an odd site, and slot `k = -1`
//! holds the diamond, black iff the value is 2 or 3.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp1};

use crate::error::{domain, Error, Result};
use crate::lattice::{Grid, Rect, Window};
use crate::percolation::{has_crossing, CrossingSpec};
use crate::rsa_process::{colour_with_times, jam, octagon_colours, ArrivalField, FaceColours, Params};
use crate::stats::{tally, trial_rng, Estimate, Family, MeanEstimate};

/// Cell law `P(X = 0..=3)`.
pub fn discrete_marginals(lambda0: f64, p_tilde: f64, lambda1: f64, delta: f64) -> Result<[f64; 4]> {
    if !(lambda0 > 0.0 && lambda1 > 0.0 && delta > 0.0) {
        return domain("rates and block length must be positive");
    }
    if !(0.0..=1.0).contains(&p_tilde) {
        return domain("p_tilde must lie in [0,1]");
    }
    let e0 = (-lambda0 * delta).exp();
    let e1 = (-lambda1 * delta).exp();
    let v = [-(-lambda1 * delta).exp_m1(), e1 - p_tilde, p_tilde + e0 - 1.0, -(-lambda0 * delta).exp_m1()];
    let names = ["P(X=0)", "P(X=1) = exp(-lambda1 delta) - p_tilde", "P(X=2) = p_tilde + exp(-lambda0 delta) - 1", "P(X=3)"];
    for (x, name) in v.iter().zip(names) {
        if *x < 0.0 {
            return domain(format!("infeasible block parameters: {name} = {x:.6} < 0"));
        }
    }
    Ok(v)
}

/// Parameters of the block model on the torus of side `20 n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockModel {
    pub n: u32,
    pub lambda0: f64,
    pub p_tilde: f64,
    pub lambda1: f64,
    pub delta: f64,
}

impl BlockModel {
    /// Block length `(log n)^(-1/2)` unless overridden; `n = 1` needs an override.
    pub fn new(n: u32, lambda0: f64, p_tilde: f64, lambda1: f64, delta: Option<f64>) -> Result<BlockModel> {
        if n == 0 {
            return domain("n must be positive");
        }
        let delta = match delta {
            Some(d) => d,
            None if n >= 2 => (n as f64).ln().powf(-0.5),
            None => return domain("default block length is infinite at n = 1; pass delta"),
        };
        let m = BlockModel {
            n,
            lambda0,
            p_tilde,
            lambda1,
            delta,
        };
        m.marginals()?;
        Ok(m)
    }

    pub fn marginals(&self) -> Result<[f64; 4]> {
        discrete_marginals(self.lambda0, self.p_tilde, self.lambda1, self.delta)
    }

    /// Last block index `floor(n / delta)`.
    pub fn last_block(&self) -> usize {
        (self.n as f64 / self.delta).floor() as usize
    }

    pub fn side(&self) -> i32 {
        20 * self.n as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XField {
    pub model: BlockModel,
    grid: Arc<Grid>,
    /// Row per octagon: the diamond cell, then blocks `0..=last_block`.
    values: Vec<u8>,
}

impl XField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn stride(&self) -> usize {
        self.model.last_block() + 2
    }

    /// Cell `(site, k)` with `k = -1` for the diamond.
    pub fn get(&self, site: usize, k: i64) -> u8 {
        self.values[site * self.stride() + (k + 1) as usize]
    }

    pub fn set(&mut self, site: usize, k: i64, v: u8) {
        let s = self.stride();
        self.values[site * s + (k + 1) as usize] = v.min(3);
    }

    pub fn cells(&self) -> &[u8] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Cell index to `(site, k)`.
    pub fn cell(&self, c: usize) -> (usize, i64) {
        (c / self.stride(), (c % self.stride()) as i64 - 1)
    }

    pub fn with_cells(model: BlockModel, values: Vec<u8>) -> Result<XField> {
        let grid = Arc::new(Grid::new(Window::torus(model.side())?));
        if values.len() != grid.len() * (model.last_block() + 2) || values.iter().any(|&v| v > 3) {
            return domain("cell vector has the wrong length or a value above 3");
        }
        Ok(XField { model, grid, values })
    }

    pub fn diamond_black(&self, site: usize) -> bool {
        self.get(site, -1) >= 2
    }

    /// First block with an arrival at `site` (3 for even, 0 for odd sites).
    pub fn first_arrival_block(&self, site: usize) -> Option<usize> {
        let mark = if self.grid.is_odd(site) { 0 } else { 3 };
        (0..=self.model.last_block()).find(|&k| self.get(site, k as i64) == mark)
    }
}

/// I.i.d. cells from the block law.
pub fn sample_x_field(model: &BlockModel, seed: u64, stream: u64) -> Result<XField> {
    let w = WeightedIndex::new(model.marginals()?).map_err(|e| Error::Domain(e.to_string()))?;
    let grid = Arc::new(Grid::new(Window::torus(model.side())?));
    let mut rng = trial_rng(seed, stream, Family::Aux);
    let values = (0..grid.len() * (model.last_block() + 2))
        .map(|_| w.sample(&mut rng) as u8)
        .collect();
    Ok(XField {
        model: *model,
        grid,
        values,
    })
}

/// Block field induced by a continuous field on the same torus: even sites at
/// rate `lambda0`, odd sites at rate `lambda1`, diamonds black below `p_tilde`.
/// Blocks before the first arrival are filled from the law conditioned on no
/// arrival; blocks after it are independent, like further arrivals.
pub fn project_to_x(f: &ArrivalField, model: &BlockModel, seed: u64, stream: u64) -> Result<XField> {
    let grid = f.grid().clone();
    if *grid.window() != Window::torus(model.side())? {
        return domain("projection needs the torus of side 20 n");
    }
    let m = model.marginals()?;
    let full = WeightedIndex::new(m).map_err(|e| Error::Domain(e.to_string()))?;
    let pick = |vals: &[usize]| -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(vals.iter().map(|&v| m[v])).map_err(|e| Error::Domain(e.to_string()))
    };
    let even_quiet = pick(&[0, 1, 2])?;
    let odd_quiet = pick(&[1, 2, 3])?;
    let black = pick(&[2, 3])?;
    let white = pick(&[0, 1])?;
    let mut rng = trial_rng(seed, stream, Family::Aux);
    let last = model.last_block();
    let mut values = Vec::with_capacity(grid.len() * (last + 2));
    for i in 0..grid.len() {
        values.push(if f.diamond_u[i] < model.p_tilde {
            [2u8, 3][black.sample(&mut rng)]
        } else {
            [0u8, 1][white.sample(&mut rng)]
        });
        let odd = grid.is_odd(i);
        let t = f.exp[i] / if odd { model.lambda1 } else { model.lambda0 };
        let first = (t / model.delta).floor();
        for k in 0..=last {
            let v = if (k as f64) < first {
                if odd {
                    [1u8, 2, 3][odd_quiet.sample(&mut rng)]
                } else {
                    [0u8, 1, 2][even_quiet.sample(&mut rng)]
                }
            } else if (k as f64) == first {
                if odd { 0 } else { 3 }
            } else {
                full.sample(&mut rng) as u8
            };
            values.push(v);
        }
    }
    Ok(XField {
        model: *model,
        grid,
        values,
    })
}

/// The 40 rectangles `18n x 2n` with lower-left corners at `(5n a, 2n b)`.
pub fn scan_rects(n: u32) -> Vec<Rect> {
    let n = n as i32;
    let mut out = Vec::with_capacity(40);
    for b in 0..10 {
        for a in 0..4 {
            let (x0, y0) = (5 * n * a, 2 * n * b);
            out.push(Rect {
                x_lo: x0,
                x_hi: x0 + 18 * n - 1,
                y_lo: y0,
                y_hi: y0 + 2 * n - 1,
            });
        }
    }
    out
}

fn any_crossing(colours: &FaceColours, n: u32) -> bool {
    scan_rects(n)
        .iter()
        .any(|r| has_crossing(&CrossingSpec::horizontal_black(*r), colours).unwrap_or(false))
}

/// Extremal witness times in half-block units, or `None` when the fast-arrival
/// condition fails. Even sites arrive at the start of their first arrival block
/// and are then delayed by `2 delta`; odd sites arrive at the end of theirs.
/// On a shared block boundary the odd arrival comes first.
pub fn witness_times(x: &XField) -> Option<Vec<f64>> {
    let grid = x.grid();
    let horizon = (x.model.n as f64).sqrt();
    let mut t = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let first = x.first_arrival_block(i);
        if grid.is_odd(i) {
            t.push(first.map_or(f64::INFINITY, |k| (2 * (k + 1)) as f64 - 1.0));
        } else {
            let k = first?;
            if k as f64 * x.model.delta >= horizon {
                return None;
            }
            t.push((2 * (k + 2)) as f64);
        }
    }
    Some(t)
}

/// Whether the delayed crossing event is possible given the block field,
/// evaluated on the extremal witness.
pub fn crude_event(x: &XField) -> bool {
    let Some(t) = witness_times(x) else {
        return false;
    };
    let grid = x.grid();
    let occupied = jam(grid, &t).expect("witness times never tie on adjacent sites");
    let diamonds = (0..grid.len()).map(|i| x.diamond_black(i)).collect();
    let colours = FaceColours::new(grid.clone(), octagon_colours(grid, &occupied), diamonds)
        .expect("sizes match");
    any_crossing(&colours, x.model.n)
}

/// Undelayed crossing for a random continuous realisation consistent with `x`.
pub fn f_n_event(x: &XField, seed: u64, stream: u64) -> bool {
    let grid = x.grid();
    let mut rng: ChaCha8Rng = trial_rng(seed, stream, Family::Aux);
    let d = x.model.delta;
    let end = (x.model.last_block() + 1) as f64 * d;
    let t: Vec<f64> = (0..grid.len())
        .map(|i| match x.first_arrival_block(i) {
            Some(k) => (k as f64 + rng.random::<f64>()) * d,
            None => {
                let rate = if grid.is_odd(i) { x.model.lambda1 } else { x.model.lambda0 };
                end + rng.sample::<f64, _>(Exp1) / rate
            }
        })
        .collect();
    let occupied = match jam(grid, &t) {
        Ok(o) => o,
        Err(_) => return f_n_event(x, seed, stream.wrapping_add(1 << 40)),
    };
    let diamonds = (0..grid.len()).map(|i| x.diamond_black(i)).collect();
    let colours = FaceColours::new(grid.clone(), octagon_colours(grid, &occupied), diamonds)
        .expect("sizes match");
    any_crossing(&colours, x.model.n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub torus: Estimate,
    pub plane: Estimate,
    /// `|P_torus - P_plane|`.
    pub gap: f64,
    /// Standard error of the paired per-trial difference.
    pub std_err: f64,
}

impl GapReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.gap <= sigmas * self.std_err
    }
}

/// Paired crossing frequencies on two windows of equal size that share variates.
pub fn window_gap(a: &Arc<Grid>, b: &Arc<Grid>, rect: &Rect, params: &Params, trials: u64, seed: u64) -> Result<GapReport> {
    params.validate()?;
    if a.len() != b.len() || a.width() != b.width() {
        return domain("windows must have the same shape");
    }
    if trials < 2 {
        return domain("need at least two trials");
    }
    let spec = CrossingSpec::horizontal_black(*rect);
    let c = tally::<5, _>(trials, |i| {
        let mut stream = i;
        loop {
            let fa = ArrivalField::sample(a.clone(), seed, stream);
            let fb = ArrivalField::from_parts(b.clone(), fa.exp.clone(), fa.odd_u.clone(), fa.diamond_u.clone())
                .expect("same size");
            let run = |f: &ArrivalField| -> Result<bool> {
                has_crossing(&spec, &colour_with_times(f, &f.times(params), params.p)?.colours)
            };
            match (run(&fa), run(&fb)) {
                (Ok(x), Ok(y)) => {
                    let d = x as i64 - y as i64;
                    return [x as i64, y as i64, d, d * d, 0];
                }
                (Err(Error::Tie(..)), _) | (_, Err(Error::Tie(..))) => stream = stream.wrapping_add(1 << 40),
                _ => return [0, 0, 0, 0, 1],
            }
        }
    });
    if c[4] > 0 {
        return Err(Error::Diagnostics(format!("{} trials failed", c[4])));
    }
    let d = MeanEstimate::from_int_sums(c[2], c[3], trials);
    Ok(GapReport {
        torus: Estimate::from_counts(c[0] as u64, trials, 0),
        plane: Estimate::from_counts(c[1] as u64, trials, 0),
        gap: d.mean.abs(),
        std_err: d.std_err,
    })
}

fn gap_windows(n: u32, rect: &Rect) -> Result<(Arc<Grid>, Arc<Grid>)> {
    let side = 2 * n as i32;
    let square = Rect::new(0, side - 1, 0, side - 1)?;
    if !square.contains_rect(rect) {
        return domain("rectangle must lie inside [0, 2n-1]^2");
    }
    Ok((
        Arc::new(Grid::new(Window::torus(side)?)),
        Arc::new(Grid::new(Window::plane(square))),
    ))
}

/// Torus `T(2n)` against the free-boundary square carrying the same variates.
pub fn torus_plane_gap(n: u32, rect: &Rect, params: &Params, trials: u64, seed: u64) -> Result<GapReport> {
    let side = 2.0 * n as f64;
    if rect.long_side() as f64 > side - 4.0 * side.sqrt() {
        return domain(format!(
            "rectangle long side {} exceeds 2n - 4 sqrt(2n) = {:.2}",
            rect.long_side(),
            side - 4.0 * side.sqrt()
        ));
    }
    let (torus, plane) = gap_windows(n, rect)?;
    window_gap(&torus, &plane, rect, params, trials, seed)
}

/// As [`torus_plane_gap`] without the size condition; the gap is only reported.
pub fn torus_plane_gap_unchecked(n: u32, rect: &Rect, params: &Params, trials: u64, seed: u64) -> Result<GapReport> {
    let (torus, plane) = gap_windows(n, rect)?;
    window_gap(&torus, &plane, rect, params, trials, seed)
}

/// Rectangle of the given size centred in the `2n` square.
pub fn centred_rect(n: u32, width: usize, height: usize) -> Result<Rect> {
    let side = 2 * n as i32;
    let (w, h) = (width as i32, height as i32);
    if w < 1 || h < 1 || w > side || h > side {
        return domain("rectangle does not fit in the torus");
    }
    let (x0, y0) = ((side - w) / 2, (side - h) / 2);
    Rect::new(x0, x0 + w - 1, y0, y0 + h - 1)
}
