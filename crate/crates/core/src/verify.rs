//! Seeded verification suites. Each check carries its tolerance in code and
//! reports one line; the command-line `verify` and the acceptance test share them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01};

use crate::critical_surface::{bisect_lambda_c, duality_residual, duality_residual_buffered, BisectConfig};
use crate::discrete_torus::{
    centred_rect, crude_event, f_n_event, project_to_x, sample_x_field, torus_plane_gap, BlockModel, XField,
};
use crate::lattice::{Grid, Rect, Window};
use crate::percolation::{default_buffer, estimate_h};
use crate::pivotal::{russo_exact, russo_residuals, Steps};
use crate::rsa_process::oracle::{exact_oracle, OracleGraph};
use crate::rsa_process::{affects, coupled_colouring, jam, ArrivalField, Params, Rejam};
use crate::sharp_threshold::{
    binary_influence_sum, check_leminfl, convolve_direct, discrete_mr_check, dominates, dyadic_lift, inverse_wht,
    key_bound_cases, lp_norm, noise, p_max_second, parseval_gap, sharpnm_hypothesis, spectral_level_sum, w_ell,
    wht, BooleanTable, ProbVector, SharpNmReason,
};
use crate::stats::{tally, trial_rng, wilson, within_sigmas, Family, Z95};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Acceptance criterion label, e.g. `"6a"`.
    pub criterion: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// False for figures that are reported without a pass/fail verdict.
    pub asserted: bool,
    pub detail: String,
}

impl Check {
    fn new(criterion: &'static str, name: &'static str, passed: bool, detail: String) -> Check {
        Check {
            criterion,
            name,
            passed,
            asserted: true,
            detail,
        }
    }

    fn info(criterion: &'static str, name: &'static str, detail: String) -> Check {
        Check {
            criterion,
            name,
            passed: true,
            asserted: false,
            detail,
        }
    }

    fn error(criterion: &'static str, name: &'static str, e: crate::Error) -> Check {
        Check::new(criterion, name, false, format!("error: {e}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.asserted, self.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        write!(f, "[{tag}] {:<3} {}: {}", self.criterion, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SelfDual,
    Duality,
    Oracle,
    Russo,
    Coupling,
    Critical,
    Affects,
    Fourier,
    Discrete,
    Infeasible,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 11] = [
        "self-dual",
        "duality",
        "oracle",
        "russo",
        "coupling",
        "critical",
        "affects",
        "fourier",
        "discrete",
        "infeasible",
        "all",
    ];

    pub fn parse(s: &str) -> Option<Suite> {
        use Suite::*;
        let all = [
            SelfDual, Duality, Oracle, Russo, Coupling, Critical, Affects, Fourier, Discrete, Infeasible, All,
        ];
        Suite::NAMES.iter().position(|&n| n == s).map(|i| all[i])
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::SelfDual => vec![self_dual(seed)],
        Suite::Duality => duality(seed),
        Suite::Oracle => oracle_corpus(seed),
        Suite::Russo => vec![delta_sign(seed)],
        Suite::Coupling => vec![monotone_coupling(seed)],
        Suite::Critical => critical(seed),
        Suite::Affects => vec![affects_locality(seed)],
        Suite::Fourier => fourier(seed),
        Suite::Discrete => discrete(seed),
        Suite::Infeasible => vec![infeasible()],
        Suite::All => [
            Suite::SelfDual,
            Suite::Duality,
            Suite::Oracle,
            Suite::Russo,
            Suite::Coupling,
            Suite::Critical,
            Suite::Affects,
            Suite::Fourier,
            Suite::Discrete,
            Suite::Infeasible,
        ]
        .iter()
        .flat_map(|&s| run_suite(s, seed))
        .collect(),
    }
}

fn params(lambda: f64, p: f64, delta: f64) -> Params {
    Params::new(lambda, p, delta).expect("fixed parameters are valid")
}

// ---------------------------------------------------------------------------
// crossing symmetry and duality

pub fn self_dual(seed: u64) -> Check {
    const TRIALS: u64 = 20_000;
    const SIGMAS: f64 = 4.0;
    match estimate_h(8, 1.0, &params(1.0, 0.5, 0.0), TRIALS, seed) {
        Ok(e) => {
            let (lo, hi) = wilson(e.successes, TRIALS, SIGMAS);
            Check::new(
                "1",
                "self-dual crossing h1(8,1,1/2) = 1/2",
                lo <= 0.5 && 0.5 <= hi,
                format!(
                    "h = {:.4} from {TRIALS} trials, 4-sigma Wilson [{lo:.4}, {hi:.4}], dense failures {}",
                    e.value, e.dense_failures
                ),
            )
        }
        Err(e) => Check::error("1", "self-dual crossing", e),
    }
}

pub fn duality(seed: u64) -> Vec<Check> {
    const TRIALS: u64 = 20_000;
    const SIGMAS: f64 = 4.0;
    const N: u32 = 8;
    let pp = params(2.0, 0.3, 0.0);
    let r = match duality_residual(N, &pp, TRIALS, seed) {
        Ok(r) => r,
        Err(e) => return vec![Check::error("2", "duality residual", e)],
    };
    let mut out = vec![Check::new(
        "2",
        "duality h1(8,2,0.3) + h1(8,0.5,0.7) = 1",
        r.within(SIGMAS),
        format!(
            "h = {:.4}, dual = {:.4}, residual {:.5} vs 4 sigma = {:.5}",
            r.h.value,
            r.h_dual.value,
            r.residual,
            SIGMAS * r.std_err
        ),
    )];
    let b = default_buffer(&Rect::crossing_box(N, 1.0).expect("valid box"));
    match duality_residual_buffered(N, &pp, TRIALS, seed, Some(2 * b)) {
        Ok(r2) => out.push(Check::info(
            "2",
            "duality residual with doubled buffer",
            format!(
                "buffer {b}: {:.5}; buffer {}: {:.5} (4 sigma = {:.5})",
                r.residual,
                2 * b,
                r2.residual,
                SIGMAS * r2.std_err
            ),
        )),
        Err(e) => out.push(Check::error("2", "duality residual with doubled buffer", e)),
    }
    out
}

// ---------------------------------------------------------------------------
// exact oracle

/// Small plane windows with their parameters. The first is the 3-path.
pub fn oracle_instances() -> Vec<(Rect, Params)> {
    let r = |x0, x1, y0, y1| Rect::new(x0, x1, y0, y1).expect("valid rect");
    vec![
        (r(0, 2, 0, 0), params(1.0, 0.5, 0.0)),
        (r(0, 1, 0, 0), params(2.0, 0.4, 0.0)),
        (r(0, 1, 0, 1), params(1.0, 0.5, 0.0)),
        (r(0, 1, 0, 1), params(0.5, 0.3, 0.4)),
        (r(1, 4, 0, 0), params(1.5, 0.6, 0.2)),
        (r(0, 2, 0, 1), params(1.0, 0.5, 0.0)),
        (r(0, 1, 0, 2), params(3.0, 0.7, 0.1)),
        (r(0, 4, 0, 0), params(0.7, 0.2, 0.0)),
        (r(0, 5, 0, 0), params(1.0, 0.5, 0.5)),
        (r(1, 3, 0, 1), params(2.0, 0.4, 1.0)),
        (r(0, 1, 1, 3), params(0.8, 0.9, 0.3)),
    ]
}

pub fn oracle_corpus(seed: u64) -> Vec<Check> {
    const TRIALS: u64 = 100_000;
    const SIGMAS: f64 = 4.0;
    const POLY_TOL: f64 = 1e-9;
    let mut compared = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let mut centre = String::new();
    let mut poly_worst = 0.0f64;
    let mut poly_bad = Vec::new();
    for (idx, (rect, pp)) in oracle_instances().iter().enumerate() {
        let grid = Arc::new(Grid::new(Window::plane(*rect)));
        let exact = match OracleGraph::from_grid(&grid).and_then(|g| exact_oracle(&g, pp)) {
            Ok(e) => e,
            Err(e) => return vec![Check::error("3", "oracle corpus", e)],
        };
        let counts = tally::<64, _>(TRIALS, |i| {
            let mut c = [0i64; 64];
            let f = ArrivalField::sample(grid.clone(), seed ^ idx as u64, i);
            if let Ok(occ) = jam(&grid, &f.times(pp)) {
                let mask = occ.iter().enumerate().fold(0usize, |m, (j, &o)| m | (o as usize) << j);
                c[mask] += 1;
            }
            c
        });
        let mut law: BTreeMap<u32, f64> = exact.into_iter().collect();
        for (m, &c) in counts.iter().enumerate() {
            if c > 0 {
                law.entry(m as u32).or_insert(0.0);
            }
        }
        for (&m, &p) in &law {
            let phat = counts[m as usize] as f64 / TRIALS as f64;
            compared += 1;
            let sd = (p * (1.0 - p) / TRIALS as f64).sqrt();
            if sd > 0.0 {
                worst = worst.max((phat - p).abs() / sd);
            }
            if !within_sigmas(phat, p, TRIALS, SIGMAS) {
                bad.push(format!("instance {idx} mask {m:b}: mc {phat:.5} exact {p:.5}"));
            }
        }
        if idx == 0 {
            let p_centre: f64 = law.iter().filter(|(&m, _)| m & 2 != 0).map(|(_, &p)| p).sum();
            centre = format!("3-path centre occupied {:.6} (1/3 = {:.6})", p_centre, 1.0 / 3.0);
            if (p_centre - 1.0 / 3.0).abs() > 1e-12 {
                bad.push(centre.clone());
            }
        }
        match russo_exact(rect, pp) {
            Ok(r) => {
                poly_worst = poly_worst.max(r.p_gap);
                if !(r.p_gap < POLY_TOL) {
                    poly_bad.push(format!("instance {idx}: gap {:e}", r.p_gap));
                }
            }
            Err(e) => poly_bad.push(format!("instance {idx}: {e}")),
        }
    }
    let n = oracle_instances().len();
    vec![
        Check::new(
            "3",
            "oracle equivalence",
            bad.is_empty(),
            format!(
                "{n} instances, {compared} occupied-set probabilities at {TRIALS} trials, worst |z| = {worst:.2} (limit 4); {centre}{}",
                if bad.is_empty() { String::new() } else { format!("; failures: {}", bad.join("; ")) }
            ),
        ),
        Check::new(
            "4a",
            "dh/dp equals the diamond pivot sum as polynomials",
            poly_bad.is_empty(),
            format!(
                "{n} instances, largest coefficient gap {poly_worst:.2e} (limit 1e-9){}",
                if poly_bad.is_empty() { String::new() } else { format!("; {}", poly_bad.join("; ")) }
            ),
        ),
    ]
}

/// Finite-difference `dh/ddelta` on the 8x8 box is not positive beyond its 95% CI.
pub fn delta_sign(seed: u64) -> Check {
    const TRIALS: u64 = 20_000;
    match russo_residuals(4, 1.0, &params(1.0, 0.5, 0.2), Steps::default(), TRIALS, seed) {
        Ok(r) => {
            let d = r.delta.derivative;
            Check::new(
                "4b",
                "dh/ddelta <= 0 on an 8x8 box",
                d.mean <= Z95 * d.std_err,
                format!(
                    "dh/ddelta = {:.4} +- {:.4} (95%), pivot side {:.4}, {TRIALS} trials",
                    d.mean,
                    Z95 * d.std_err,
                    r.delta.pivot_sum.mean
                ),
            )
        }
        Err(e) => Check::error("4b", "dh/ddelta sign", e),
    }
}

// ---------------------------------------------------------------------------
// coupling and locality

pub fn monotone_coupling(seed: u64) -> Check {
    const SAMPLES: u64 = 1000;
    let grid = Arc::new(Grid::new(Window::plane(Rect::new(0, 7, 0, 7).expect("valid"))));
    let base = params(1.0, 0.3, 0.0);
    let c = tally::<3, _>(SAMPLES, |i| {
        let f = ArrivalField::sample(grid.clone(), seed, i);
        let mut out = [0i64; 3];
        for (k, hi) in [params(2.0, 0.3, 0.0), params(1.0, 0.7, 0.0)].iter().enumerate() {
            match coupled_colouring(&f, &base, hi) {
                Ok((a, b)) => out[k] += !a.colours.black_subset_of(&b.colours) as i64,
                Err(_) => out[2] += 1,
            }
        }
        out
    });
    Check::new(
        "5",
        "monotone coupling on 8x8",
        c == [0, 0, 0],
        format!(
            "{SAMPLES} samples: violations {} vs (2,0.3), {} vs (1,0.7), errors {}",
            c[0], c[1], c[2]
        ),
    )
}

pub fn affects_locality(seed: u64) -> Check {
    const FIELDS: u64 = 1000;
    const RESAMPLES: usize = 10;
    let grid = Arc::new(Grid::new(Window::plane(Rect::new(0, 7, 0, 7).expect("valid"))));
    let pp = params(1.3, 0.5, 0.3);
    let c = tally::<3, _>(FIELDS, |i| {
        let f = ArrivalField::sample(grid.clone(), seed, i);
        let t = f.times(&pp);
        let Ok(base) = jam(&grid, &t) else {
            return [0, 0, 1];
        };
        let mut rng = trial_rng(seed, i, Family::Aux);
        let x = rng.random_range(0..grid.len());
        let quiet: Vec<usize> = (0..grid.len())
            .filter(|&y| y != x && !affects(&grid, &t, x, y).unwrap_or(true))
            .collect();
        let mut rj = Rejam::new(&grid, &t, &base);
        let mut violations = 0;
        for _ in 0..RESAMPLES {
            let tx = if grid.is_odd(x) && rng.random::<f64>() <= pp.zero_prob() {
                0.0
            } else {
                let e: f64 = rng.sample(Exp1);
                if grid.is_odd(x) { e } else { e / pp.lambda }
            };
            match rj.apply(x, tx) {
                Ok(changed) => violations += quiet.iter().filter(|y| changed.contains(y)).count() as i64,
                Err(_) => return [0, 0, 1],
            }
        }
        [violations, quiet.len() as i64, 0]
    });
    Check::new(
        "7",
        "affects locality",
        c[0] == 0 && c[2] == 0,
        format!(
            "{FIELDS} fields, {} unaffected pairs x {RESAMPLES} resamples: {} state changes, {} ties",
            c[1], c[0], c[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// pseudo-critical points

pub fn critical(seed: u64) -> Vec<Check> {
    let cfg = BisectConfig::default();
    let mut out = Vec::new();
    match bisect_lambda_c(0.5, 16, &cfg, seed) {
        Ok(r) => out.push(Check::new(
            "6a",
            "pseudo-critical lambda at p = 1/2, n = 16, rho = 3 contains 1",
            r.contains(1.0),
            format!(
                "[{:.4}, {:.4}], h(mid) = {:.4}, trials {}, converged {}",
                r.lambda_lo, r.lambda_hi, r.h_at_mid.value, r.trials, r.converged
            ),
        )),
        Err(e) => out.push(Check::error("6a", "pseudo-critical lambda at p = 1/2", e)),
    }
    // the default bracket has its geometric midpoint exactly at 1, where h = 1/2
    let square = BisectConfig {
        rho: 1.0,
        lambda_lo: 0.1,
        ..cfg
    };
    match bisect_lambda_c(0.5, 16, &square, seed) {
        Ok(r) => out.push(Check::info(
            "6a",
            "same bisection on the square box (rho = 1)",
            format!(
                "[{:.4}, {:.4}], contains 1: {}, h(mid) = {:.4}",
                r.lambda_lo,
                r.lambda_hi,
                r.contains(1.0),
                r.h_at_mid.value
            ),
        )),
        Err(e) => out.push(Check::error("6a", "square-box bisection", e)),
    }
    match bisect_lambda_c(0.0, 16, &cfg, seed) {
        Ok(r) => out.push(Check::new(
            "6b",
            "pseudo-critical lambda at p = 0, n = 16 is below 10",
            r.lambda_hi < 10.0,
            format!("[{:.4}, {:.4}], trials {}", r.lambda_lo, r.lambda_hi, r.trials),
        )),
        Err(e) => out.push(Check::error("6b", "pseudo-critical lambda at p = 0", e)),
    }
    out
}

// ---------------------------------------------------------------------------
// Fourier toolkit

/// Twenty strictly positive vectors of length `k+1`: the uniform one, the
/// `k+1` vectors with 0.9 on one entry, and seeded draws from the simplex.
pub fn pv_grid(k: usize) -> Vec<ProbVector> {
    let mut out = vec![ProbVector::new(vec![1.0 / (k + 1) as f64; k + 1]).expect("uniform")];
    for j in 0..=k {
        let mut v = vec![0.1 / k as f64; k + 1];
        v[j] = 0.9;
        out.push(ProbVector::new(v).expect("skewed"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20 + k as u64);
    while out.len() < 20 {
        let e: Vec<f64> = (0..=k).map(|_| -rng.sample::<f64, _>(Open01).ln()).collect();
        let s: f64 = e.iter().sum();
        let mut v: Vec<f64> = e.iter().map(|x| x / s).collect();
        let rest: f64 = v[..k].iter().sum();
        v[k] = 1.0 - rest;
        if let Ok(pv) = ProbVector::new(v) {
            if pv.all_positive() {
                out.push(pv);
            }
        }
    }
    out
}

fn random_table(rng: &mut ChaCha8Rng, m: u32) -> Vec<f64> {
    (0..1 << m).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn fourier(seed: u64) -> Vec<Check> {
    const IDENTITY_TOL: f64 = 1e-10;
    let mut out = Vec::new();

    // KeyBound: every f for k = 1, 2, 3 on the vector grid
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut bad = 0;
    for k in 1..=3 {
        for pv in pv_grid(k) {
            for c in key_bound_cases(&pv).expect("k is small") {
                cases += 1;
                worst = worst.max((c.w + c.tail) / c.bound);
                bad += !c.holds() as usize;
            }
        }
    }
    out.push(Check::new(
        "8",
        "digit-flip influence bound",
        bad == 0 && cases > 0,
        format!("{cases} (vector, f) pairs, {bad} counterexamples, largest (w + tail)/bound = {worst:.4}"),
    ));

    // influence lower bound: all 256 tables on {0,1}^3
    let vectors: Vec<ProbVector> = [[0.3, 0.7], [0.5, 0.5], [0.7, 0.3]]
        .iter()
        .map(|v| ProbVector::new(v.to_vec()).expect("valid"))
        .collect();
    let (mut applicable, mut violated, mut checked) = (0, 0, 0);
    for bits in 0..256u32 {
        let f = BooleanTable::new(1, 3, (0..8).map(|i| bits >> i & 1 == 1).collect()).expect("valid");
        for pv in &vectors {
            let pm = p_max_second(pv);
            for q in [pm, (pm + 1.0) / 2.0, 1.0] {
                let r = check_leminfl(&f, pv, q).expect("valid");
                checked += 1;
                applicable += r.hypothesis_met() as usize;
                violated += !r.consistent() as usize;
            }
        }
    }
    out.push(Check::new(
        "8",
        "influence lower bound under small influences",
        violated == 0,
        format!("{checked} (table, vector, q) cases, hypothesis met in {applicable}, violations {violated}"),
    ));

    // transform identities on random m = 8 tables
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut parseval, mut conv, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = random_table(&mut rng, 8);
        let h = random_table(&mut rng, 8);
        parseval = parseval.max(parseval_gap(&h).expect("m = 8"));
        let lhs = wht(&convolve_direct(&g, &h).expect("m = 8")).expect("m = 8");
        let (gh, hh) = (wht(&g).expect("m = 8"), wht(&h).expect("m = 8"));
        for s in 0..lhs.len() {
            conv = conv.max((lhs[s] - gh[s] * hh[s]).abs());
        }
        let back = inverse_wht(&hh).expect("m = 8");
        inv = inv.max(back.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let mut flip = 0.0f64;
    for _ in 0..1000 {
        let ell = rng.random_range(1..=30u32);
        let x: f64 = rng.random();
        let y = crate::sharp_threshold::digit_flip(ell, x).expect("valid");
        let z = crate::sharp_threshold::digit_flip(ell, y).expect("valid");
        flip = flip.max((z - x).abs().max(((y - x).abs() - 2f64.powi(-(ell as i32))).abs()));
    }
    out.push(Check::new(
        "8",
        "Parseval, convolution, inversion and digit-flip identities",
        parseval < IDENTITY_TOL && conv < IDENTITY_TOL && inv < IDENTITY_TOL && flip < IDENTITY_TOL,
        format!(
            "100 tables m = 8: Parseval {parseval:.1e}, convolution {conv:.1e}, inversion {inv:.1e}; 1000 flips {flip:.1e} (limit 1e-10)"
        ),
    ));

    // domination implies monotone probabilities, k = 1, n = 2
    let increasing: Vec<BooleanTable> = (0..16u32)
        .map(|bits| BooleanTable::new(1, 2, (0..4).map(|i| bits >> i & 1 == 1).collect()).expect("valid"))
        .filter(BooleanTable::is_increasing)
        .collect();
    let grid: Vec<[f64; 2]> = (0..=10).map(|i| [1.0 - i as f64 / 10.0, i as f64 / 10.0]).collect();
    let (mut pairs, mut bad) = (0, 0);
    for p in &grid {
        for q in &grid {
            if dominates(p, q).expect("same length") {
                for f in &increasing {
                    pairs += 1;
                    bad += (f.prob(q) < f.prob(p) - 1e-12) as usize;
                }
            }
        }
    }
    out.push(Check::new(
        "8",
        "domination gives monotone probabilities",
        bad == 0,
        format!("{} increasing tables, {pairs} dominated pairs checked, violations {bad}", increasing.len()),
    ));

    // level sum against binary influences, and the dyadic link to digit flips
    let mut tgw = 0.0f64;
    for _ in 0..100 {
        let h: Vec<bool> = (0..256).map(|_| rng.random()).collect();
        let hat = wht(&h.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>()).expect("m = 8");
        tgw = tgw.max((4.0 * spectral_level_sum(&hat) - binary_influence_sum(&h).expect("m = 8")).abs());
    }
    let mut dyadic = 0.0f64;
    let m = 6;
    for k in 1..=3usize {
        for _ in 0..10 {
            let mut cuts: Vec<u32> = (0..k).map(|_| rng.random_range(1..64u32)).collect();
            cuts.sort_unstable();
            let mut v = Vec::new();
            let mut last = 0;
            for &c in cuts.iter().chain(std::iter::once(&64)) {
                v.push((c - last) as f64 / 64.0);
                last = c;
            }
            let pv = ProbVector::new(v).expect("dyadic vector");
            for bits in 0..1u32 << (k + 1) {
                let g: Vec<bool> = (0..=k).map(|i| bits >> i & 1 == 1).collect();
                let lifted = dyadic_lift(&pv, &g, m).expect("dyadic");
                let w: f64 = (1..=m).map(|l| w_ell(&pv, &g, l).expect("valid")).sum();
                let tail: f64 = (m + 1..=20).map(|l| w_ell(&pv, &g, l).expect("valid")).sum();
                dyadic = dyadic.max((w - binary_influence_sum(&lifted).expect("m = 6")).abs() + tail);
            }
        }
    }
    out.push(Check::new(
        "8",
        "level sum equals a quarter of the binary influence sum",
        tgw < IDENTITY_TOL && dyadic < IDENTITY_TOL,
        format!("100 binary tables m = 8: gap {tgw:.1e}; dyadic vectors, digit flips vs lifted influences: gap {dyadic:.1e}"),
    ));

    // noise contraction
    let mut worst = f64::NEG_INFINITY;
    let mut bb = f64::NEG_INFINITY;
    for _ in 0..50 {
        let h = random_table(&mut rng, 8);
        let norm = lp_norm(&h, 2.0);
        for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
            worst = worst.max(lp_norm(&noise(eps, &h).expect("m = 8"), 2.0) - norm);
        }
        bb = bb.max(lp_norm(&noise(1.0 / 3f64.sqrt(), &h).expect("m = 8"), 2.0) - lp_norm(&h, 4.0 / 3.0));
    }
    out.push(Check::new(
        "8",
        "noise operator contracts the 2-norm",
        worst <= 1e-12,
        format!("50 tables, 5 noise levels: largest ||T h|| - ||h|| = {worst:.2e}"),
    ));
    out.push(Check::info(
        "8",
        "hypercontractive spot check ||T_(1/sqrt 3) h||_2 - ||h||_(4/3)",
        format!("largest value over 50 tables: {bb:.3e} (reported only)"),
    ));

    // discrete Russo formula on increasing tables, k = 2, n = 2
    let pv = ProbVector::new(vec![0.4, 0.35, 0.25]).expect("valid");
    let mut worst = 0.0f64;
    let mut count = 0;
    for bits in 0..512u32 {
        let f = BooleanTable::new(2, 2, (0..9).map(|i| bits >> i & 1 == 1).collect()).expect("valid");
        if !f.is_increasing() {
            continue;
        }
        count += 1;
        worst = worst.max(discrete_mr_check(&f, &pv, 0.3, 1e-4, 9).expect("increasing"));
    }
    out.push(Check::new(
        "8",
        "derivative along the shifted path equals total influence",
        worst < 1e-6,
        format!("{count} increasing tables k = 2, n = 2, step 1e-4: residual {worst:.2e} (limit 1e-6)"),
    ));
    out
}

// ---------------------------------------------------------------------------
// discrete torus model

/// A block model with a mix of true and false crude events.
pub fn pilot_model() -> BlockModel {
    BlockModel::new(1, 10.0, 0.8, 3.0, Some(0.02)).expect("feasible")
}

pub fn discrete(seed: u64) -> Vec<Check> {
    const CELLS: usize = 100_000;
    const SIGMAS: f64 = 4.0;
    const BUMPS: u64 = 1000;
    let model = pilot_model();
    let marg = model.marginals().expect("feasible");
    let mut out = Vec::new();

    // marginals of fields projected from the continuous process
    let grid = Arc::new(Grid::new(Window::torus(model.side()).expect("valid")));
    let mut counts = [0u64; 4];
    let mut cells = 0;
    let mut stream = 0;
    while cells < CELLS {
        let f = ArrivalField::sample(grid.clone(), seed, stream);
        let x = project_to_x(&f, &model, seed, stream).expect("torus matches");
        for &v in x.cells() {
            counts[v as usize] += 1;
        }
        cells += x.cell_count();
        stream += 1;
    }
    let ok = (0..4).all(|v| within_sigmas(counts[v] as f64 / cells as f64, marg[v], cells as u64, SIGMAS));
    out.push(Check::new(
        "9",
        "block-field marginals",
        ok,
        format!(
            "{cells} cells: empirical [{}] vs law [{}]",
            counts.iter().map(|&c| format!("{:.4}", c as f64 / cells as f64)).collect::<Vec<_>>().join(", "),
            marg.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", ")
        ),
    ));

    // single-coordinate bumps never destroy the crude event
    let c = tally::<4, _>(BUMPS, |i| {
        let mut x: XField = sample_x_field(&model, seed, i).expect("feasible");
        let mut rng = trial_rng(seed, i, Family::Exponential);
        let before = crude_event(&x);
        // a cell that can matter: the diamond, an even block up to the first
        // arrival, or an odd site's first arrival
        let site = rng.random_range(0..x.grid().len());
        let first = x.first_arrival_block(site);
        let k = match (rng.random_range(0..3), x.grid().is_odd(site), first) {
            (0, _, _) => -1,
            (_, false, f) => rng.random_range(0..=f.unwrap_or(x.model.last_block())) as i64,
            (_, true, Some(f)) => f as i64,
            (_, true, None) => rng.random_range(0..=x.model.last_block()) as i64,
        };
        let v = x.get(site, k);
        x.set(site, k, v + 1);
        let after = crude_event(&x);
        [(before && !after) as i64, (before != after) as i64, before as i64, 0]
    });
    out.push(Check::new(
        "9",
        "crude event is increasing",
        c[0] == 0,
        format!(
            "{BUMPS} bumps: {} violations, {} changed the event, event true before bump in {}",
            c[0], c[1], c[2]
        ),
    ));

    // crude event inside the undelayed event for a consistent realisation
    let c = tally::<3, _>(200, |i| {
        let x = sample_x_field(&model, seed.wrapping_add(1), i).expect("feasible");
        let crude = crude_event(&x);
        let f = f_n_event(&x, seed, i);
        [(crude && !f) as i64, crude as i64, f as i64]
    });
    out.push(Check::new(
        "9",
        "crude event implies an undelayed crossing",
        c[0] == 0,
        format!("200 fields: crude {}, undelayed {}, crude without undelayed {}", c[1], c[2], c[0]),
    ));

    let n = 32;
    let pp = params(1.0, 0.5, 0.0);
    const GAP_TRIALS: u64 = 2000;
    match centred_rect(n, 4, 4).and_then(|r| torus_plane_gap(n, &r, &pp, GAP_TRIALS, seed)) {
        Ok(g) => out.push(Check::new(
            "9",
            "torus vs plane, 4x4 box in the side-64 torus",
            g.within(SIGMAS),
            format!(
                "torus {:.4}, plane {:.4}, gap {:.5} vs 4 sigma = {:.5} ({GAP_TRIALS} paired trials)",
                g.torus.value,
                g.plane.value,
                g.gap,
                SIGMAS * g.std_err
            ),
        )),
        Err(e) => out.push(Check::error("9", "torus vs plane", e)),
    }
    out
}

// ---------------------------------------------------------------------------

/// Reports why the sharp-threshold conclusion is out of reach numerically.
pub fn infeasible() -> Check {
    let p = ProbVector::new(vec![0.5, 0.0, 0.05, 0.45]).expect("valid");
    let q = ProbVector::new(vec![0.45, 0.0, 0.05, 0.5]).expect("valid");
    let r = sharpnm_hypothesis(&p, &q, 0.05, u64::MAX, 0.1, 3);
    let flagged = r.reasons == [SharpNmReason::OrderTooSmall] && r.ln_m_min > 1e4;
    Check::new(
        "10",
        "not reproducible at desk scale",
        flagged,
        format!(
            "k = 3, gamma = 0.05, eta = 0.1, q_max = {}: symmetry order must reach exp({:.0}); \
             existence and Lipschitz statements and true critical values are covered only by the suites above",
            r.q_max, r.ln_m_min
        ),
    )
}

/// Convenience for callers: all checks that are asserted and failed.
pub fn failures(checks: &[Check]) -> Vec<&Check> {
    checks.iter().filter(|c| c.asserted && !c.passed).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in Suite::NAMES {
            assert!(Suite::parse(n).is_some());
        }
        assert!(Suite::parse("nope").is_none());
    }

    #[test]
    fn grid_shape() {
        for k in 1..=3 {
            let g = pv_grid(k);
            assert_eq!(g.len(), 20);
            assert!(g.iter().all(|p| p.all_positive() && p.k() == k));
        }
    }
}
