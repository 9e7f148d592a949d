//! Random sequential adsorption on the octagon sites, with diamond enhancement.
//!
//! Each octagon carries a standard exponential `E`; its arrival time is `E / lambda`
//! at even sites and `E` at odd sites, so all values of `lambda` share one field.
//! The delayed model is represented by giving an odd site time 0 with probability
//! `1 - exp(-delta)`.

mod affects;
pub mod oracle;
mod rejam;

pub use affects::{affects, e_dense, e_dense_open, generations, Generation};
pub use rejam::Rejam;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Exp1, Open01};

use crate::error::{domain, Error, Result};
use crate::lattice::{Grid, NO_SITE};
use crate::stats::{trial_rng, Family};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub p: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(lambda: f64, p: f64, delta: f64) -> Result<Params> {
        let params = Params { lambda, p, delta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return domain(format!("p must lie in [0,1], got {}", self.p));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return domain(format!("delta must be nonnegative, got {}", self.delta));
        }
        Ok(())
    }

    /// Probability that an odd site is given time 0.
    pub fn zero_prob(&self) -> f64 {
        -(-self.delta).exp_m1()
    }

    /// Componentwise order in `(lambda, p)` with equal `delta`.
    pub fn le(&self, other: &Params) -> bool {
        self.lambda <= other.lambda && self.p <= other.p && self.delta == other.delta
    }
}

/// Unit variates for one realisation on a finite window.
#[derive(Debug, Clone)]
pub struct ArrivalField {
    grid: Arc<Grid>,
    /// Standard exponential per octagon.
    pub exp: Vec<f64>,
    /// Uniform per octagon; consulted only at odd sites.
    pub odd_u: Vec<f64>,
    /// Uniform per diamond slot.
    pub diamond_u: Vec<f64>,
}

impl ArrivalField {
    /// Deterministic in `(seed, stream)`; each variate family has its own RNG stream.
    pub fn sample(grid: Arc<Grid>, seed: u64, stream: u64) -> ArrivalField {
        let n = grid.len();
        let mut re = trial_rng(seed, stream, Family::Exponential);
        let mut ru = trial_rng(seed, stream, Family::OddUniform);
        let mut rd = trial_rng(seed, stream, Family::DiamondUniform);
        ArrivalField {
            exp: (0..n).map(|_| re.sample::<f64, _>(Exp1)).collect(),
            odd_u: (0..n).map(|_| ru.sample::<f64, _>(Open01)).collect(),
            diamond_u: (0..n).map(|_| rd.sample::<f64, _>(Open01)).collect(),
            grid,
        }
    }

    pub fn from_parts(
        grid: Arc<Grid>,
        exp: Vec<f64>,
        odd_u: Vec<f64>,
        diamond_u: Vec<f64>,
    ) -> Result<ArrivalField> {
        let n = grid.len();
        if exp.len() != n || odd_u.len() != n || diamond_u.len() != n {
            return domain("variate vectors must match the window size");
        }
        Ok(ArrivalField {
            grid,
            exp,
            odd_u,
            diamond_u,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Raw arrival time `T_x`, ignoring the zero-time device.
    pub fn raw_time(&self, i: usize, params: &Params) -> f64 {
        if self.grid.is_odd(i) {
            self.exp[i]
        } else {
            self.exp[i] / params.lambda
        }
    }

    /// Effective time `t_x` for every octagon.
    pub fn times(&self, params: &Params) -> Vec<f64> {
        let z = params.zero_prob();
        (0..self.grid.len())
            .map(|i| {
                if self.grid.is_odd(i) {
                    if self.odd_u[i] <= z {
                        0.0
                    } else {
                        self.exp[i]
                    }
                } else {
                    self.exp[i] / params.lambda
                }
            })
            .collect()
    }

    pub fn diamond_black(&self, p: f64) -> Vec<bool> {
        (0..self.grid.len())
            .map(|i| self.grid.diamond_valid(i) && self.diamond_u[i] < p)
            .collect()
    }
}

/// Black/white state of every face of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceColours {
    grid: Arc<Grid>,
    pub octagon_black: Vec<bool>,
    /// Indexed by diamond slot; unused slots are white.
    pub diamond_black: Vec<bool>,
}

impl FaceColours {
    pub fn new(grid: Arc<Grid>, octagon_black: Vec<bool>, diamond_black: Vec<bool>) -> Result<Self> {
        if octagon_black.len() != grid.len() || diamond_black.len() != grid.len() {
            return domain("colour vectors must match the window size");
        }
        Ok(FaceColours {
            grid,
            octagon_black,
            diamond_black,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Black faces of `self` are black in `other`.
    pub fn black_subset_of(&self, other: &FaceColours) -> bool {
        let sub = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
        sub(&self.octagon_black, &other.octagon_black)
            && sub(&self.diamond_black, &other.diamond_black)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammedColouring {
    /// `true` for Occupied, `false` for Blocked.
    pub occupied: Vec<bool>,
    pub colours: FaceColours,
}

/// Octagon colour rule: black iff even and occupied, or odd and blocked.
pub fn octagon_colours(grid: &Grid, occupied: &[bool]) -> Vec<bool> {
    occupied
        .iter()
        .enumerate()
        .map(|(i, &occ)| occ != grid.is_odd(i))
        .collect()
}

/// Jamming state for the given effective times.
///
/// A site is occupied iff none of its earlier neighbours is occupied, which is
/// the outcome of processing arrivals in time order. The recursion runs on the
/// "earlier neighbour" DAG, so no global sort is needed. Equal positive times on
/// adjacent sites are reported as [`Error::Tie`]; ties at zero go odd-first, then
/// by index.
pub fn jam(grid: &Grid, t: &[f64]) -> Result<Vec<bool>> {
    const UNKNOWN: u8 = 0;
    const OCC: u8 = 1;
    const BLK: u8 = 2;
    let n = grid.len();
    let mut state = vec![UNKNOWN; n];
    let mut stack: Vec<usize> = Vec::new();
    let earlier = |a: usize, b: usize| -> Result<bool> {
        // is a before b
        let (ta, tb) = (t[a], t[b]);
        if ta != tb {
            return Ok(ta < tb);
        }
        if ta > 0.0 {
            return Err(Error::Tie(a.min(b), a.max(b)));
        }
        let (oa, ob) = (grid.is_odd(a), grid.is_odd(b));
        if oa != ob {
            return Ok(oa);
        }
        Ok(a < b)
    };
    for root in 0..n {
        if state[root] != UNKNOWN {
            continue;
        }
        stack.push(root);
        while let Some(&x) = stack.last() {
            if state[x] != UNKNOWN {
                stack.pop();
                continue;
            }
            let mut pending = None;
            let mut blocked = false;
            for &j in grid.raw_neighbors(x) {
                if j == NO_SITE {
                    continue;
                }
                let j = j as usize;
                if !earlier(j, x)? {
                    continue;
                }
                match state[j] {
                    OCC => {
                        blocked = true;
                        break;
                    }
                    BLK => {}
                    _ => pending = Some(j),
                }
            }
            if blocked {
                state[x] = BLK;
                stack.pop();
            } else if let Some(j) = pending {
                stack.push(j);
            } else {
                state[x] = OCC;
                stack.pop();
            }
        }
    }
    Ok(state.into_iter().map(|s| s == OCC).collect())
}

/// Jamming plus face colouring for a given set of effective times.
pub fn colour_with_times(f: &ArrivalField, t: &[f64], p: f64) -> Result<JammedColouring> {
    let grid = f.grid();
    let occupied = jam(grid, t)?;
    let colours = FaceColours {
        grid: grid.clone(),
        octagon_black: octagon_colours(grid, &occupied),
        diamond_black: f.diamond_black(p),
    };
    Ok(JammedColouring { occupied, colours })
}

pub fn resolve_jamming(f: &ArrivalField, params: &Params) -> Result<JammedColouring> {
    params.validate()?;
    colour_with_times(f, &f.times(params), params.p)
}

/// Colourings under two ordered parameter sets sharing the same variates.
pub fn coupled_colouring(
    f: &ArrivalField,
    lo: &Params,
    hi: &Params,
) -> Result<(JammedColouring, JammedColouring)> {
    lo.validate()?;
    hi.validate()?;
    if !lo.le(hi) {
        return domain("coupled_colouring needs params1 <= params2 in (lambda, p) with equal delta");
    }
    Ok((resolve_jamming(f, lo)?, resolve_jamming(f, hi)?))
}
