//! Pivotal sites for the crossing event and the Margulis-Russo identities.
//!
//! Odd `x` is pivotal when `H` holds with `t_x = T_x` and fails with `t_x = 0`.
//! Even `x` is pivotal when `H` holds and fails once `t_x` is delayed by an extra
//! rate-`lambda` exponential. A diamond is pivotal when `H` holds with it black
//! and fails with it white. All three modifications can only shrink the black set.

use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Error, Result};
use crate::lattice::{Grid, Rect, Site, SiteKind, Window};
use crate::percolation::{default_buffer, has_crossing, with_resample, BoxSetup, CrossingSpec};
use crate::poly::Poly;
use crate::rsa_process::oracle::{event_poly, Override};
use crate::rsa_process::{colour_with_times, jam, ArrivalField, FaceColours, Params, Rejam};
use crate::stats::{tally, trial_rng, Estimate, Family, MeanEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteClass {
    OddOctagon,
    EvenOctagon,
    Diamond,
}

impl SiteClass {
    pub fn of(site: &Site) -> SiteClass {
        match site.kind {
            SiteKind::Diamond => SiteClass::Diamond,
            SiteKind::Octagon if (site.x + site.y).rem_euclid(2) == 1 => SiteClass::OddOctagon,
            SiteKind::Octagon => SiteClass::EvenOctagon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotalQuery {
    pub site: Site,
    pub class: SiteClass,
    pub spec: CrossingSpec,
}

impl PivotalQuery {
    pub fn new(site: Site, spec: CrossingSpec) -> PivotalQuery {
        PivotalQuery {
            site,
            class: SiteClass::of(&site),
            spec,
        }
    }
}

/// Aux delays for every octagon of a trial, already at rate `lambda`.
pub fn aux_delays(grid: &Grid, lambda: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = trial_rng(seed, stream, Family::Aux);
    (0..grid.len())
        .map(|_| rng.sample::<f64, _>(Exp1) / lambda)
        .collect()
}

/// Direct check: jam the base and the modified configuration and compare.
pub fn is_pivotal(q: &PivotalQuery, f: &ArrivalField, params: &Params, aux: Option<f64>) -> Result<bool> {
    if q.class != SiteClass::of(&q.site) {
        return domain("site class does not match the site");
    }
    let grid = f.grid();
    let t = f.times(params);
    match q.class {
        SiteClass::Diamond => {
            let i = grid
                .diamond_index(&q.site)
                .ok_or_else(|| Error::Domain("diamond outside window".into()))?;
            let j = colour_with_times(f, &t, params.p)?;
            let mut c = j.colours;
            c.diamond_black[i] = true;
            let black = has_crossing(&q.spec, &c)?;
            c.diamond_black[i] = false;
            Ok(black && !has_crossing(&q.spec, &c)?)
        }
        SiteClass::OddOctagon | SiteClass::EvenOctagon => {
            let i = grid
                .octagon_index(&q.site)
                .ok_or_else(|| Error::Domain("site outside window".into()))?;
            let (before, after) = if q.class == SiteClass::OddOctagon {
                (f.raw_time(i, params), 0.0)
            } else {
                let extra = aux.ok_or_else(|| {
                    Error::Domain("even-site pivotality needs the auxiliary delay".into())
                })?;
                (t[i], t[i] + extra)
            };
            let mut t1 = t.clone();
            t1[i] = before;
            let h1 = has_crossing(&q.spec, &colour_with_times(f, &t1, params.p)?.colours)?;
            t1[i] = after;
            let h2 = has_crossing(&q.spec, &colour_with_times(f, &t1, params.p)?.colours)?;
            Ok(h1 && !h2)
        }
    }
}

/// Window for a pivotality query: the buffered rectangle, widened to hold the site.
pub fn query_setup(q: &PivotalQuery) -> Result<BoxSetup> {
    let rect = q.spec.rect;
    let buffer = default_buffer(&rect);
    let big = rect.enlarged(buffer as i32);
    let (sx, sy) = match q.site.kind {
        SiteKind::Octagon => (q.site.x, q.site.y),
        SiteKind::Diamond => (q.site.x + 1, q.site.y + 1),
    };
    let window = Rect::new(
        big.x_lo.min(q.site.x - 1),
        big.x_hi.max(sx + 1),
        big.y_lo.min(q.site.y - 1),
        big.y_hi.max(sy + 1),
    )?;
    BoxSetup::with_window(rect, buffer, window)
}

pub fn estimate_phi(q: &PivotalQuery, params: &Params, trials: u64, seed: u64) -> Result<Estimate> {
    params.validate()?;
    if trials == 0 {
        return domain("need at least one trial");
    }
    let setup = query_setup(q)?;
    let counts = tally::<2, _>(trials, |i| {
        let r = with_resample(&setup, seed, i, |f| {
            let aux = match q.class {
                SiteClass::EvenOctagon => Some(aux_delays(&setup.grid, params.lambda, seed, i)[
                    setup.grid.octagon_index(&q.site).unwrap_or(0)
                ]),
                _ => None,
            };
            is_pivotal(q, f, params, aux)
        });
        match r {
            Ok(b) => [b as i64, 0],
            Err(_) => [0, 1],
        }
    });
    if counts[1] > 0 {
        return Err(Error::Diagnostics(format!("{} trials failed", counts[1])));
    }
    Ok(Estimate::from_counts(counts[0] as u64, trials, 0))
}

/// Number of pivotal sites of each class in one realisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PivotCounts {
    pub h: bool,
    pub diamonds: u32,
    pub even: u32,
    pub odd: u32,
}

fn recheck(
    spec: &CrossingSpec,
    colours: &mut FaceColours,
    grid: &Grid,
    changed: &[usize],
) -> Result<Option<bool>> {
    let touches = changed.iter().any(|&c| {
        let (x, y) = grid.coords(c);
        spec.rect.contains(x, y)
    });
    if !touches {
        return Ok(None);
    }
    for &c in changed {
        colours.octagon_black[c] = !colours.octagon_black[c];
    }
    let h = has_crossing(spec, colours);
    for &c in changed {
        colours.octagon_black[c] = !colours.octagon_black[c];
    }
    h.map(Some)
}

/// Pivot counts over the whole window, using incremental re-jamming.
/// `aux` holds the even-site delays; pass `None` to skip even sites.
pub fn pivot_counts(
    spec: &CrossingSpec,
    f: &ArrivalField,
    params: &Params,
    aux: Option<&[f64]>,
    odd: bool,
) -> Result<PivotCounts> {
    let grid: &Arc<Grid> = f.grid();
    let t = f.times(params);
    let occupied = jam(grid, &t)?;
    let mut colours = colour_with_times(f, &t, params.p)?.colours;
    let h = has_crossing(spec, &colours)?;
    let mut out = PivotCounts {
        h,
        ..Default::default()
    };
    let r = spec.rect;
    for y in r.y_lo..r.y_hi {
        for x in r.x_lo..r.x_hi {
            let d = grid.index(x, y).expect("rect inside window");
            let black = colours.diamond_black[d];
            if black != h {
                continue;
            }
            colours.diamond_black[d] = !black;
            let flipped = has_crossing(spec, &colours)?;
            colours.diamond_black[d] = black;
            if flipped != h {
                out.diamonds += 1;
            }
        }
    }
    let mut rejam = Rejam::new(grid, &t, &occupied);
    for i in 0..grid.len() {
        if grid.is_odd(i) {
            if !odd {
                continue;
            }
            let positive = f.exp[i];
            let is_zero = t[i] == 0.0;
            // H at t_x = T_x must hold and fail at t_x = 0
            if is_zero == h {
                continue;
            }
            let target = if is_zero { positive } else { 0.0 };
            let changed = rejam.apply(i, target)?.to_vec();
            let other = recheck(spec, &mut colours, grid, &changed)?.unwrap_or(h);
            if other != h {
                out.odd += 1;
            }
        } else if let Some(aux) = aux {
            if !h {
                continue;
            }
            let changed = rejam.apply(i, t[i] + aux[i])?.to_vec();
            if recheck(spec, &mut colours, grid, &changed)? == Some(false) {
                out.even += 1;
            }
        }
    }
    Ok(out)
}

/// Finite-difference steps for [`russo_residuals`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub p: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl Default for Steps {
    fn default() -> Self {
        Steps {
            p: 0.05,
            lambda: 0.05,
            delta: 0.05,
        }
    }
}

/// One identity: finite-difference derivative against its pivotal sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub derivative: MeanEstimate,
    pub pivot_sum: MeanEstimate,
    /// `|derivative - pivot_sum|`.
    pub residual: f64,
    /// Standard error of the paired per-trial difference.
    pub std_err: f64,
}

impl Residual {
    /// Build from integer tallies of `D` (crossing difference), `S` (pivot count)
    /// where the per-trial derivative is `D / denom` and the pivot term is `k S`.
    fn from_tallies(sums: &[i64], trials: u64, denom: f64, k: f64) -> Residual {
        let [sd, sd2, ss, ss2, sds] = [sums[0], sums[1], sums[2], sums[3], sums[4]].map(|v| v as f64);
        let derivative = MeanEstimate::from_sums(sd / denom, sd2 / (denom * denom), trials);
        let pivot_sum = MeanEstimate::from_sums(k * ss, k * k * ss2, trials);
        let sx = sd / denom - k * ss;
        let sx2 = sd2 / (denom * denom) - 2.0 * k * sds / denom + k * k * ss2;
        let diff = MeanEstimate::from_sums(sx, sx2, trials);
        Residual {
            derivative,
            pivot_sum,
            residual: diff.mean.abs(),
            std_err: diff.std_err,
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.residual <= sigmas * self.std_err
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RussoReport {
    pub h: Estimate,
    /// `dh/dp` against the diamond pivot sum.
    pub p: Residual,
    /// `dh/dlambda` against `lambda^-1` times the even pivot sum, both at `delta = 0`.
    pub lambda: Residual,
    /// `dh/ddelta` against `-exp(-delta)` times the odd pivot sum.
    pub delta: Residual,
}

fn difference(lo: f64, hi: f64, x: f64, h: f64) -> (f64, f64) {
    let a = (x - h).max(lo);
    let b = (x + h).min(hi);
    (a, b)
}

/// Monte Carlo check of the three derivative formulas with common random numbers.
pub fn russo_residuals(
    n: u32,
    rho: f64,
    params: &Params,
    steps: Steps,
    trials: u64,
    seed: u64,
) -> Result<RussoReport> {
    params.validate()?;
    if !(steps.p > 0.0 && steps.lambda > 0.0 && steps.delta > 0.0) {
        return domain("finite-difference steps must be positive");
    }
    if trials < 2 {
        return domain("need at least two trials");
    }
    let min_step = steps.p.min(steps.lambda).min(steps.delta);
    if min_step * (trials as f64).sqrt() < 1.0 {
        return Err(Error::Diagnostics(format!(
            "step {min_step} is below the Monte Carlo noise floor 1/sqrt({trials})"
        )));
    }
    if params.lambda <= steps.lambda {
        return domain("lambda step must be smaller than lambda");
    }
    let setup = BoxSetup::new(n, rho, None)?;
    let spec = CrossingSpec::horizontal_black(setup.rect);
    let (p_lo, p_hi) = difference(0.0, 1.0, params.p, steps.p);
    let (l_lo, l_hi) = (params.lambda - steps.lambda, params.lambda + steps.lambda);
    // central where possible; h is markedly convex in delta
    let d_lo = (params.delta - steps.delta).max(0.0);
    let d_hi = params.delta + steps.delta;
    let at = |lambda: f64, p: f64, delta: f64| Params { lambda, p, delta };
    let base0 = at(params.lambda, params.p, 0.0);
    let sums = tally::<16, _>(trials, |i| {
        let r = with_resample(&setup, seed, i, |f| {
            let hit = |q: Params| -> Result<bool> {
                let t = f.times(&q);
                has_crossing(&spec, &colour_with_times(f, &t, q.p)?.colours)
            };
            let aux = aux_delays(&setup.grid, params.lambda, seed, i);
            let base = pivot_counts(&spec, f, params, None, true)?;
            let even = pivot_counts(&spec, f, &base0, Some(&aux), false)?;
            let dp = hit(at(params.lambda, p_hi, params.delta))? as i64
                - hit(at(params.lambda, p_lo, params.delta))? as i64;
            let dl = hit(at(l_hi, params.p, 0.0))? as i64 - hit(at(l_lo, params.p, 0.0))? as i64;
            let dd = hit(at(params.lambda, params.p, d_hi))? as i64
                - hit(at(params.lambda, params.p, d_lo))? as i64;
            let (sp, sl, sd) = (base.diamonds as i64, even.even as i64, base.odd as i64);
            Ok([
                base.h as i64,
                dp, dp * dp, sp, sp * sp, dp * sp,
                dl, dl * dl, sl, sl * sl, dl * sl,
                dd, dd * dd, sd, sd * sd, dd * sd,
            ])
        });
        r.unwrap_or([i64::MIN / 4; 16])
    });
    if sums[0] < 0 {
        return Err(Error::Diagnostics("a trial failed".into()));
    }
    Ok(RussoReport {
        h: Estimate::from_counts(sums[0] as u64, trials, 0),
        p: Residual::from_tallies(&sums[1..6], trials, p_hi - p_lo, 1.0),
        lambda: Residual::from_tallies(&sums[6..11], trials, l_hi - l_lo, 1.0 / params.lambda),
        delta: Residual::from_tallies(&sums[11..16], trials, d_hi - d_lo, -(-params.delta).exp()),
    })
}

/// Crossing probability of a tiny rectangle as an exact polynomial in `p`.
pub fn exact_h(rect: &Rect, params: &Params, overrides: &[Override], fixed: &[(usize, bool)]) -> Result<Poly> {
    let grid = Arc::new(Grid::new(Window::plane(*rect)));
    let spec = CrossingSpec::horizontal_black(*rect);
    let overrides = if overrides.is_empty() {
        vec![Override::Free; grid.len()]
    } else {
        overrides.to_vec()
    };
    event_poly(&grid, params, &overrides, fixed, |c| {
        has_crossing(&spec, c).unwrap_or(false)
    })
}

/// Exact pivotal probability of `site` for the horizontal crossing of `rect`,
/// with the rectangle itself as the whole window.
pub fn exact_phi(rect: &Rect, params: &Params, site: &Site) -> Result<Poly> {
    let grid = Grid::new(Window::plane(*rect));
    let free = vec![Override::Free; grid.len()];
    match SiteClass::of(site) {
        SiteClass::Diamond => {
            let d = grid
                .diamond_index(site)
                .ok_or_else(|| Error::Domain("diamond outside rectangle".into()))?;
            Ok(&exact_h(rect, params, &free, &[(d, true)])? - &exact_h(rect, params, &free, &[(d, false)])?)
        }
        class => {
            let i = grid
                .octagon_index(site)
                .ok_or_else(|| Error::Domain("site outside rectangle".into()))?;
            let (mut a, mut b) = (free.clone(), free);
            if class == SiteClass::OddOctagon {
                a[i] = Override::ForcePositive;
                b[i] = Override::ForceZero;
            } else {
                b[i] = Override::ExtraDelay;
            }
            Ok(&exact_h(rect, params, &a, &[])? - &exact_h(rect, params, &b, &[])?)
        }
    }
}

/// The three identities evaluated exactly on a tiny rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRusso {
    pub h: Poly,
    /// Largest coefficient gap between `dh/dp` and the diamond pivot sum.
    pub p_gap: f64,
    pub lambda_derivative: f64,
    pub lambda_pivot_sum: f64,
    pub delta_derivative: f64,
    pub delta_pivot_sum: f64,
}

pub fn russo_exact(rect: &Rect, params: &Params) -> Result<ExactRusso> {
    let sites: Vec<Site> = crate::lattice::rect_faces(rect, &Window::plane(*rect))?;
    let h = exact_h(rect, params, &[], &[])?;
    let mut diamond_sum = Poly::zero();
    let mut even_sum = 0.0;
    let mut odd_sum = 0.0;
    let p0 = Params { delta: 0.0, ..*params };
    for s in &sites {
        match SiteClass::of(s) {
            SiteClass::Diamond => diamond_sum = &diamond_sum + &exact_phi(rect, params, s)?,
            SiteClass::EvenOctagon => even_sum += exact_phi(rect, &p0, s)?.eval(params.p),
            SiteClass::OddOctagon => odd_sum += exact_phi(rect, params, s)?.eval(params.p),
        }
    }
    let eval = |q: Params| -> Result<f64> { Ok(exact_h(rect, &q, &[], &[])?.eval(params.p)) };
    let e = 1e-5;
    let lambda_derivative = (eval(Params { lambda: params.lambda + e, ..p0 })?
        - eval(Params { lambda: params.lambda - e, ..p0 })?)
        / (2.0 * e);
    let delta_derivative = if params.delta >= e {
        (eval(Params { delta: params.delta + e, ..*params })?
            - eval(Params { delta: params.delta - e, ..*params })?)
            / (2.0 * e)
    } else {
        let f0 = eval(*params)?;
        let f1 = eval(Params { delta: params.delta + e, ..*params })?;
        let f2 = eval(Params { delta: params.delta + 2.0 * e, ..*params })?;
        (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * e)
    };
    Ok(ExactRusso {
        p_gap: h.derivative().max_abs_diff(&diamond_sum),
        h,
        lambda_derivative,
        lambda_pivot_sum: even_sum / params.lambda,
        delta_derivative,
        delta_pivot_sum: -(-params.delta).exp() * odd_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_black_diamond_not_pivotal() {
        let r = Rect::new(0, 1, 0, 1).unwrap();
        let grid = Arc::new(Grid::new(Window::plane(r)));
        // even sites (0,0),(1,1) early, odd late: every octagon black
        let mut exp = vec![0.0; 4];
        for i in 0..4 {
            exp[i] = if grid.is_odd(i) { 5.0 } else { 0.1 + i as f64 * 0.01 };
        }
        let f = ArrivalField::from_parts(grid.clone(), exp, vec![0.5; 4], vec![0.0; 4]).unwrap();
        let params = Params::new(1.0, 1.0, 0.0).unwrap();
        let q = PivotalQuery::new(Site::diamond(0, 0), CrossingSpec::horizontal_black(r));
        assert!(!is_pivotal(&q, &f, &params, None).unwrap());
    }

    #[test]
    fn bridging_diamond_is_pivotal() {
        // outside sites block every octagon of the 2x2 box early, leaving the odd
        // diagonal black and the even diagonal white
        let r = Rect::new(0, 1, 0, 1).unwrap();
        let grid = Arc::new(Grid::new(Window::plane(Rect::new(-1, 2, -1, 2).unwrap())));
        let mut exp: Vec<f64> = (0..grid.len()).map(|i| 2.0 + i as f64 * 0.01).collect();
        for (k, &(x, y)) in [(0, -1), (-1, 1), (1, 2), (2, 0)].iter().enumerate() {
            exp[grid.index(x, y).unwrap()] = 0.01 * (k + 1) as f64;
        }
        let mut u = vec![0.9; grid.len()];
        let d = grid.index(0, 0).unwrap();
        u[d] = 0.2;
        let f = ArrivalField::from_parts(grid.clone(), exp, vec![0.5; grid.len()], u).unwrap();
        let params = Params::new(1.0, 0.5, 0.0).unwrap();
        let spec = CrossingSpec::horizontal_black(r);
        let q = PivotalQuery::new(Site::diamond(0, 0), spec);
        assert!(is_pivotal(&q, &f, &params, None).unwrap());
        let j = crate::rsa_process::resolve_jamming(&f, &params).unwrap();
        assert!(has_crossing(&spec, &j.colours).unwrap());
        let counts = pivot_counts(&spec, &f, &params, None, false).unwrap();
        assert_eq!(counts.diamonds, 1);
    }

    #[test]
    fn even_needs_aux() {
        let r = Rect::new(0, 1, 0, 1).unwrap();
        let grid = Arc::new(Grid::new(Window::plane(r)));
        let f = ArrivalField::sample(grid, 1, 0);
        let q = PivotalQuery::new(Site::octagon(0, 0), CrossingSpec::horizontal_black(r));
        assert!(is_pivotal(&q, &f, &Params::new(1.0, 0.5, 0.0).unwrap(), None).is_err());
    }

    #[test]
    fn fast_counts_match_direct() {
        let setup = BoxSetup::new(3, 1.0, Some(2)).unwrap();
        let spec = CrossingSpec::horizontal_black(setup.rect);
        let params = Params::new(1.2, 0.45, 0.3).unwrap();
        for s in 0..40 {
            let f = setup.field(9, s);
            let aux = aux_delays(&setup.grid, params.lambda, 9, s);
            let fast = pivot_counts(&spec, &f, &params, Some(&aux), true).unwrap();
            let mut slow = PivotCounts {
                h: has_crossing(&spec, &crate::rsa_process::resolve_jamming(&f, &params).unwrap().colours).unwrap(),
                ..Default::default()
            };
            let grid = &setup.grid;
            for i in 0..grid.len() {
                let (x, y) = grid.coords(i);
                let site = Site::octagon(x, y);
                let q = PivotalQuery::new(site, spec);
                if is_pivotal(&q, &f, &params, Some(aux[i])).unwrap() {
                    if grid.is_odd(i) {
                        slow.odd += 1;
                    } else {
                        slow.even += 1;
                    }
                }
                if setup.rect.contains_diamond(x, y) {
                    let q = PivotalQuery::new(Site::diamond(x, y), spec);
                    if is_pivotal(&q, &f, &params, None).unwrap() {
                        slow.diamonds += 1;
                    }
                }
            }
            assert_eq!(fast, slow, "stream {s}");
        }
    }
}
