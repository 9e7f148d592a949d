//! Duality residuals and finite-size pseudo-critical points.
//!
//! The pseudo-critical `lambda` at fixed `n` is where the crossing probability of
//! `R(2n, rho)` passes a target level. It is a finite-size proxy only and says
//! nothing certified about the infinite-volume threshold.

use crate::error::{domain, Error, Result};
use crate::percolation::{crossing_sample, with_resample, BoxSetup, CrossingSpec};
use crate::rsa_process::Params;
use crate::stats::{tally, Estimate, MeanEstimate};
use crate::percolation::estimate_crossing;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub h: Estimate,
    pub h_dual: Estimate,
    /// `|h(lambda, p) + h(1/lambda, 1 - p) - 1|`.
    pub residual: f64,
    /// Standard error of the paired per-trial sum.
    pub std_err: f64,
    /// Samples (either side) where the buffer did not certify locality.
    pub dense_failures: u64,
}

impl DualityReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.residual <= sigmas * self.std_err
    }
}

/// Square-box duality check, both sides driven by the same per-trial variates.
pub fn duality_residual(n: u32, params: &Params, trials: u64, seed: u64) -> Result<DualityReport> {
    duality_residual_buffered(n, params, trials, seed, None)
}

pub fn duality_residual_buffered(
    n: u32,
    params: &Params,
    trials: u64,
    seed: u64,
    buffer: Option<u32>,
) -> Result<DualityReport> {
    params.validate()?;
    if trials < 2 {
        return domain("need at least two trials");
    }
    let dual = Params {
        lambda: 1.0 / params.lambda,
        p: 1.0 - params.p,
        delta: params.delta,
    };
    let setup = BoxSetup::new(n, 1.0, buffer)?;
    let spec = CrossingSpec::horizontal_black(setup.rect);
    let c = tally::<6, _>(trials, |i| {
        let a = with_resample(&setup, seed, i, |f| crossing_sample(&setup, &spec, f, params));
        let b = with_resample(&setup, seed, i, |f| crossing_sample(&setup, &spec, f, &dual));
        match (a, b) {
            (Ok((ha, da)), Ok((hb, db))) => {
                let x = ha as i64 + hb as i64 - 1;
                [ha as i64, hb as i64, x, x * x, (!da || !db) as i64, 0]
            }
            _ => [0, 0, 0, 0, 0, 1],
        }
    });
    if c[5] > 0 {
        return Err(Error::Diagnostics(format!("{} trials failed", c[5])));
    }
    let paired = MeanEstimate::from_int_sums(c[2], c[3], trials);
    let h = Estimate::from_counts(c[0] as u64, trials, c[4] as u64);
    let h_dual = Estimate::from_counts(c[1] as u64, trials, c[4] as u64);
    Ok(DualityReport {
        residual: (h.value + h_dual.value - 1.0).abs(),
        std_err: paired.std_err,
        h,
        h_dual,
        dense_failures: c[4] as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectConfig {
    pub rho: f64,
    pub target: f64,
    pub tol: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub trials: u64,
    /// Cap for the trial doubling used when a CI straddles the target.
    pub max_trials: u64,
    pub delta: f64,
}

impl Default for BisectConfig {
    fn default() -> Self {
        BisectConfig {
            rho: 3.0,
            target: 0.5,
            tol: 0.2,
            lambda_lo: 0.05,
            lambda_hi: 20.0,
            trials: 400,
            max_trials: 6400,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectResult {
    pub p: f64,
    pub n: u32,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Estimate at the geometric midpoint of the final bracket.
    pub h_at_mid: Estimate,
    pub trials: u64,
    pub seed: u64,
    /// False if some midpoint was still ambiguous at `max_trials` and was
    /// placed by its point estimate alone.
    pub converged: bool,
}

impl BisectResult {
    pub fn contains(&self, lambda: f64) -> bool {
        self.lambda_lo <= lambda && lambda <= self.lambda_hi
    }

    pub fn mid(&self) -> f64 {
        (self.lambda_lo * self.lambda_hi).sqrt()
    }
}

/// Side of the target, doubling the trials while the CI straddles it.
/// `None` means still ambiguous at the cap.
fn side(
    setup: &BoxSetup,
    spec: &CrossingSpec,
    params: &Params,
    cfg: &BisectConfig,
    seed: u64,
    trials: &mut u64,
) -> Result<(Option<bool>, Estimate)> {
    loop {
        let e = estimate_crossing(setup, spec, params, *trials, seed)?;
        if !e.straddles(cfg.target) {
            return Ok((Some(e.value > cfg.target), e));
        }
        if *trials * 2 > cfg.max_trials {
            return Ok((None, e));
        }
        *trials *= 2;
    }
}

/// Pseudo-critical `lambda` at fixed `p` and `n`, by geometric bisection on the
/// crossing probability. All evaluations share the seed, so the estimates are
/// monotone in `lambda` trial by trial.
pub fn bisect_lambda_c(p: f64, n: u32, cfg: &BisectConfig, seed: u64) -> Result<BisectResult> {
    if !(0.0..=1.0).contains(&p) {
        return domain("p must lie in [0,1]");
    }
    if !(cfg.lambda_lo > 0.0 && cfg.lambda_lo < cfg.lambda_hi) {
        return domain("bracket must satisfy 0 < lambda_lo < lambda_hi");
    }
    if !(cfg.tol > 0.0) || !(cfg.target > 0.0 && cfg.target < 1.0) || cfg.trials == 0 {
        return domain("tol, target and trials must be positive, target inside (0,1)");
    }
    let setup = BoxSetup::new(n, cfg.rho, None)?;
    let spec = CrossingSpec::horizontal_black(setup.rect);
    let at = |lambda: f64| Params::new(lambda, p, cfg.delta);
    let mut trials = cfg.trials;
    let (lo_side, lo_est) = side(&setup, &spec, &at(cfg.lambda_lo)?, cfg, seed, &mut trials)?;
    if lo_side != Some(false) {
        return domain(format!(
            "bracket invalid: h({}) = {:.4} is not below target {}",
            cfg.lambda_lo, lo_est.value, cfg.target
        ));
    }
    let (hi_side, hi_est) = side(&setup, &spec, &at(cfg.lambda_hi)?, cfg, seed, &mut trials)?;
    if hi_side != Some(true) {
        return domain(format!(
            "bracket invalid: h({}) = {:.4} is not above target {}",
            cfg.lambda_hi, hi_est.value, cfg.target
        ));
    }
    let (mut lo, mut hi) = (cfg.lambda_lo, cfg.lambda_hi);
    let mut converged = true;
    while hi - lo > cfg.tol {
        let mid = (lo * hi).sqrt();
        let (decided, est) = side(&setup, &spec, &at(mid)?, cfg, seed, &mut trials)?;
        // an ambiguous midpoint is placed by its point estimate and flagged
        converged &= decided.is_some();
        if decided.unwrap_or(est.value > cfg.target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h_at_mid = estimate_crossing(&setup, &spec, &at((lo * hi).sqrt())?, trials, seed)?;
    Ok(BisectResult {
        p,
        n,
        lambda_lo: lo,
        lambda_hi: hi,
        h_at_mid,
        trials,
        seed,
        converged,
    })
}

/// One row of a traced surface; `error` is set when bisection failed there.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub p: f64,
    pub result: Option<BisectResult>,
    pub error: Option<String>,
}

pub fn trace_surface(p_grid: &[f64], n: u32, cfg: &BisectConfig, seed: u64) -> Result<Vec<SurfaceRow>> {
    if p_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return domain("grid values must lie in (0,1)");
    }
    Ok(p_grid
        .iter()
        .map(|&p| match bisect_lambda_c(p, n, cfg, seed) {
            Ok(r) => SurfaceRow {
                p,
                result: Some(r),
                error: None,
            },
            Err(e) => SurfaceRow {
                p,
                result: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Pairs `(i, j)` with `p_i < p_j` whose brackets show `lambda_c` increasing
/// beyond overlap, i.e. the bracket at `p_i` lies strictly below the one at `p_j`.
pub fn monotonicity_violations(rows: &[SurfaceRow]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            if let (Some(ra), Some(rb)) = (&a.result, &b.result) {
                if a.p < b.p && ra.lambda_hi < rb.lambda_lo {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// Whether the product of the brackets at `p` and `1 - p` can equal 1.
pub fn dual_product_consistent(a: &BisectResult, b: &BisectResult) -> bool {
    a.lambda_lo * b.lambda_lo <= 1.0 && 1.0 <= a.lambda_hi * b.lambda_hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_dual_residual_is_two_h_minus_one() {
        let params = Params::new(1.0, 0.5, 0.0).unwrap();
        let r = duality_residual(3, &params, 400, 4).unwrap();
        assert_eq!(r.h, r.h_dual);
        assert!((r.residual - (2.0 * r.h.value - 1.0).abs()).abs() < 1e-15);
    }

    #[test]
    fn bad_bracket() {
        let cfg = BisectConfig {
            lambda_lo: 5.0,
            lambda_hi: 10.0,
            rho: 1.0,
            trials: 200,
            max_trials: 200,
            ..Default::default()
        };
        assert!(matches!(bisect_lambda_c(0.5, 3, &cfg, 1), Err(Error::Domain(_))));
        let cfg = BisectConfig {
            lambda_lo: 2.0,
            lambda_hi: 1.0,
            ..cfg
        };
        assert!(bisect_lambda_c(0.5, 3, &cfg, 1).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(trace_surface(&[0.0], 3, &BisectConfig::default(), 1).is_err());
    }
}
