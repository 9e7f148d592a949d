//! Exact tools for sharp-threshold arguments on `{0,..,k}^n`: the staircase
//! encoding of a probability vector by a uniform variable, digit-flip
//! influences, exhaustive influences of small tables, and Walsh-Fourier
//! analysis on `{0,1}^m`. Nothing here samples.

mod table;
mod walsh;

pub use table::{
    check_leminfl, discrete_mr_check, dominates, influence, influences, sharpnm_hypothesis, total_influence,
    BooleanTable, LeminflReport, SharpNmReason, SharpNmReport, TABLE_CAP,
};
pub use walsh::{
    binary_influence_sum, convolve, convolve_direct, dyadic_lift, inverse_wht, lp_norm, noise, parseval_gap, spectral_level_sum,
    wht, WALSH_CAP,
};

use crate::error::{domain, Result};

/// Tolerance on `sum p_i = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// Fixed-point scale for the exact interval arithmetic: `2^124` units per 1.
const FIX_BITS: u32 = 124;
const ONE: u128 = 1 << FIX_BITS;

/// Digit-flip levels summed exactly before the tail bound takes over.
pub const L_CAP: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    p: Vec<f64>,
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<ProbVector> {
        if p.len() < 2 {
            return domain("probability vector needs at least two entries");
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return domain("probability entries must be finite and nonnegative");
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return domain(format!("entries sum to {s}, not 1"));
        }
        Ok(ProbVector { p })
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    /// Largest value `k`.
    pub fn k(&self) -> usize {
        self.p.len() - 1
    }

    /// `q_j = p_0 + .. + p_j` for `j = 0..k-1`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.p[..self.k()]
            .iter()
            .scan(0.0, |s, &x| {
                *s += x;
                Some(*s)
            })
            .collect()
    }

    pub fn all_positive(&self) -> bool {
        self.p.iter().all(|&x| x > 0.0)
    }
}

/// Largest `j` with `p_0 + .. + p_{j-1} <= x`.
pub fn beta_p(pv: &ProbVector, x: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&x) {
        return domain("beta_p needs x in [0,1)");
    }
    let mut j = 0;
    let mut c = 0.0;
    for (i, &p) in pv.p[..pv.k()].iter().enumerate() {
        c += p;
        if c <= x {
            j = i + 1;
        }
    }
    Ok(j)
}

/// Inverts the `ell`-th binary digit of `x`, terminating expansion.
/// Exact when `x` is a multiple of `2^-52`; otherwise the sum may round.
pub fn digit_flip(ell: u32, x: f64) -> Result<f64> {
    if ell == 0 || ell > 1000 {
        return domain("digit index must lie in 1..=1000");
    }
    if !(0.0..1.0).contains(&x) {
        return domain("digit_flip needs x in [0,1)");
    }
    let scale = 2f64.powi(ell as i32);
    let d = 1.0 / scale;
    Ok(if (x * scale).floor() % 2.0 == 1.0 { x - d } else { x + d })
}

fn to_fixed(x: f64) -> u128 {
    // exact for every f64 in [2^-71, 1]; smaller values round to the grid
    (x * 2f64.powi(FIX_BITS as i32)).round() as u128
}

fn fixed_to_f64(x: u128) -> f64 {
    x as f64 / 2f64.powi(FIX_BITS as i32)
}

/// Points where `f o beta_p` changes value, in fixed point. Coinciding jumps
/// are kept with multiplicity; only parity matters.
fn jumps(pv: &ProbVector, f: &[bool]) -> Vec<u128> {
    let mut c = 0u128;
    let mut out = Vec::new();
    for j in 1..=pv.k() {
        c += to_fixed(pv.p[j - 1]);
        if f[j] != f[j - 1] {
            out.push(c.min(ONE));
        }
    }
    out
}

/// Measure of `{x in [0, a) : digit ell of x is 0}`, with `d = 2^-ell` in fixed point.
fn zero_digit_measure(a: u128, d: u128) -> u128 {
    (a / (2 * d)) * d + (a % (2 * d)).min(d)
}

/// Exact `w_{ell,p}(f)` by splitting `[0,1)` where the flip outcome can change.
pub fn w_ell(pv: &ProbVector, f: &[bool], ell: u32) -> Result<f64> {
    if f.len() != pv.p.len() {
        return domain("f must have one value per entry of the vector");
    }
    if ell == 0 || ell > L_CAP {
        return domain(format!("digit index must lie in 1..={L_CAP}"));
    }
    let d: u128 = 1 << (FIX_BITS - ell);
    let b = jumps(pv, f);
    let mut pts: Vec<u128> = vec![0, ONE];
    for &x in &b {
        pts.push(x);
        if x >= d {
            pts.push(x - d);
        }
    }
    pts.sort_unstable();
    pts.dedup();
    let mut total = 0u128;
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        // jumps in (u, u + d] decide whether the flip x -> x + d changes f
        let odd = b.iter().filter(|&&x| x > u && x <= u + d).count() % 2 == 1;
        if odd {
            total += zero_digit_measure(v, d) - zero_digit_measure(u, d);
        }
    }
    // the pair (x, x + d) and its mirror contribute equally
    Ok(2.0 * fixed_to_f64(total))
}

/// `sum_{ell > l_cap} 2 sum_j min(q_j*, 2^-ell)`, which bounds the truncated tail.
pub fn w_tail_bound(pv: &ProbVector, l_cap: u32) -> f64 {
    pv.cumulative()
        .iter()
        .map(|&q| {
            let qs = q.min(1.0 - q).max(0.0);
            let mut s = 0.0;
            let mut ell = l_cap + 1;
            while qs > 0.0 && ell < 2000 {
                let t = 2f64.powi(-(ell as i32));
                if t <= qs {
                    s += 2.0 * t;
                    break;
                }
                s += qs;
                ell += 1;
            }
            2.0 * s
        })
        .sum()
}

/// `(sum_{ell <= L_CAP} w_ell, tail bound)`.
pub fn w_total(pv: &ProbVector, f: &[bool], l_cap: u32) -> Result<(f64, f64)> {
    let mut s = 0.0;
    for ell in 1..=l_cap {
        s += w_ell(pv, f, ell)?;
    }
    Ok((s, w_tail_bound(pv, l_cap)))
}

/// Second largest entry, counting ties.
pub fn p_max_second(pv: &ProbVector) -> f64 {
    let mut v = pv.p.clone();
    v.sort_by(|a, b| b.total_cmp(a));
    v[1]
}

/// `3 k^2 p log(4/p)` with `p` the second largest entry.
pub fn key_bound(pv: &ProbVector) -> f64 {
    let p = p_max_second(pv);
    let k = pv.k() as f64;
    if p == 0.0 {
        0.0
    } else {
        3.0 * k * k * p * (4.0 / p).ln()
    }
}

/// Outcome of one bound check: `w_total + tail <= key_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyBoundCase {
    pub pv: Vec<f64>,
    pub f: Vec<bool>,
    pub w: f64,
    pub tail: f64,
    pub bound: f64,
}

impl KeyBoundCase {
    pub fn holds(&self) -> bool {
        self.w + self.tail <= self.bound
    }
}

/// Every `f: {0..k} -> {0,1}` against the bound at `pv`.
pub fn key_bound_cases(pv: &ProbVector) -> Result<Vec<KeyBoundCase>> {
    let k = pv.k();
    if k > 12 {
        return domain("k too large for an exhaustive sweep");
    }
    let bound = key_bound(pv);
    (0..1u32 << (k + 1))
        .map(|bits| {
            let f: Vec<bool> = (0..=k).map(|i| bits >> i & 1 == 1).collect();
            let (w, tail) = w_total(pv, &f, L_CAP)?;
            Ok(KeyBoundCase {
                pv: pv.p.clone(),
                f,
                w,
                tail,
                bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn staircase() {
        let u = pv(&[0.25; 4]);
        assert_eq!(beta_p(&u, 0.6).unwrap(), 2);
        assert_eq!(beta_p(&u, 0.0).unwrap(), 0);
        assert_eq!(beta_p(&u, 0.5).unwrap(), 2);
        assert!(beta_p(&u, 1.0).is_err());
        // a zero entry is skipped
        assert_eq!(beta_p(&pv(&[0.5, 0.0, 0.5]), 0.5).unwrap(), 2);
    }

    #[test]
    fn flips() {
        assert!((digit_flip(1, 0.3).unwrap() - 0.8).abs() < 1e-15);
        assert!((digit_flip(2, 0.8).unwrap() - 0.55).abs() < 1e-15);
        assert_eq!(digit_flip(1, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn identity_on_halves() {
        let p = pv(&[0.5, 0.5]);
        let f = [false, true];
        assert_eq!(w_ell(&p, &f, 1).unwrap(), 1.0);
        for ell in 2..=L_CAP {
            assert_eq!(w_ell(&p, &f, ell).unwrap(), 0.0);
        }
        let (w, tail) = w_total(&p, &f, L_CAP).unwrap();
        assert_eq!(w, 1.0);
        assert!(tail < 1e-18);
    }

    #[test]
    fn constant_has_no_flips() {
        let p = pv(&[0.2, 0.3, 0.5]);
        for ell in 1..=10 {
            assert_eq!(w_ell(&p, &[true; 3], ell).unwrap(), 0.0);
        }
    }

    #[test]
    fn per_level_bound() {
        // w_ell <= 2 sum_j min(q_j*, 2^-ell)
        let p = pv(&[0.1, 0.37, 0.2, 0.33]);
        for bits in 0..16u32 {
            let f: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            for ell in 1..=20 {
                let b: f64 = p
                    .cumulative()
                    .iter()
                    .map(|&q| 2.0 * q.min(1.0 - q).min(2f64.powi(-ell)))
                    .sum();
                assert!(w_ell(&p, &f, ell as u32).unwrap() <= b + 1e-15);
            }
        }
    }

    #[test]
    fn second_largest() {
        assert_eq!(p_max_second(&pv(&[0.5, 0.3, 0.2])), 0.3);
        assert_eq!(p_max_second(&pv(&[0.5, 0.5])), 0.5);
    }
}
