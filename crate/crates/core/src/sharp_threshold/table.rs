use rayon::prelude::*;

use super::{p_max_second, ProbVector, SUM_TOL};
use crate::error::{domain, Error, Result};

/// Largest table size, `(k+1)^n <= 2^20`.
pub const TABLE_CAP: usize = 1 << 20;

/// `f: {0..k}^n -> {0,1}` in lexicographic order, first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanTable {
    pub k: usize,
    pub n: usize,
    table: Vec<bool>,
}

fn table_len(k: usize, n: usize) -> Result<usize> {
    if k == 0 || n == 0 {
        return domain("k and n must be positive");
    }
    let mut len = 1usize;
    for _ in 0..n {
        len = len.saturating_mul(k + 1);
        if len > TABLE_CAP {
            return Err(Error::Size {
                what: "(k+1)^n",
                got: len,
                limit: TABLE_CAP,
            });
        }
    }
    Ok(len)
}

impl BooleanTable {
    pub fn new(k: usize, n: usize, table: Vec<bool>) -> Result<BooleanTable> {
        let len = table_len(k, n)?;
        if table.len() != len {
            return domain(format!("table has {} entries, expected {len}", table.len()));
        }
        Ok(BooleanTable { k, n, table })
    }

    pub fn from_fn(k: usize, n: usize, f: impl Fn(&[usize]) -> bool) -> Result<BooleanTable> {
        let len = table_len(k, n)?;
        let mut x = vec![0; n];
        let table = (0..len)
            .map(|i| {
                decode(i, k, &mut x);
                f(&x)
            })
            .collect();
        Ok(BooleanTable { k, n, table })
    }

    /// Parses `k n` on the first line, then one 0/1 per line.
    pub fn parse(text: &str) -> Result<BooleanTable> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head = lines.next().ok_or_else(|| Error::Domain("empty table".into()))?;
        let nums: Vec<usize> = head
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Domain(format!("bad header '{head}'"))))
            .collect::<Result<_>>()?;
        let [k, n] = nums[..] else {
            return domain("header must be 'k n'");
        };
        let table = lines
            .map(|l| match l {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => domain(format!("table entry '{l}' is not 0 or 1")),
            })
            .collect::<Result<_>>()?;
        BooleanTable::new(k, n, table)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.table[i]
    }

    pub fn eval(&self, x: &[usize]) -> bool {
        self.table[encode(x, self.k)]
    }

    fn stride(&self, j: usize) -> usize {
        (self.k + 1).pow((self.n - 1 - j) as u32)
    }

    /// No single-coordinate increase lowers the value.
    pub fn is_increasing(&self) -> bool {
        (0..self.n).all(|j| {
            let s = self.stride(j);
            (0..self.len()).all(|i| (i / s) % (self.k + 1) == self.k || self.table[i] <= self.table[i + s])
        })
    }

    /// `P_p^n(f = 1)`.
    pub fn prob(&self, p: &[f64]) -> f64 {
        let mut x = vec![0; self.n];
        (0..self.len())
            .filter(|&i| self.table[i])
            .map(|i| {
                decode(i, self.k, &mut x);
                x.iter().map(|&v| p[v]).product::<f64>()
            })
            .sum()
    }
}

fn decode(mut i: usize, k: usize, x: &mut [usize]) {
    for v in x.iter_mut().rev() {
        *v = i % (k + 1);
        i /= k + 1;
    }
}

fn encode(x: &[usize], k: usize) -> usize {
    x.iter().fold(0, |a, &v| a * (k + 1) + v)
}

fn check_pv(f: &BooleanTable, p: &[f64]) -> Result<()> {
    if p.len() != f.k + 1 {
        return domain("vector length must be k+1");
    }
    Ok(())
}

/// Influences for a weight vector that need not sum to one.
fn influences_raw(f: &BooleanTable, p: &[f64]) -> Vec<f64> {
    let mut x = vec![0; f.n];
    (0..f.n)
        .map(|j| {
            let s = f.stride(j);
            let mut total = 0.0;
            for i in 0..f.len() {
                decode(i, f.k, &mut x);
                if x[j] != 0 {
                    continue;
                }
                let first = f.table[i];
                if (1..=f.k).any(|v| f.table[i + v * s] != first) {
                    total += x
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j)
                        .map(|(_, &v)| p[v])
                        .product::<f64>();
                }
            }
            total
        })
        .collect()
}

/// `I_{f,p}(j)` for every coordinate, 0-based.
pub fn influences(f: &BooleanTable, pv: &ProbVector) -> Result<Vec<f64>> {
    check_pv(f, pv.entries())?;
    Ok(influences_raw(f, pv.entries()))
}

/// Probability that coordinate `j` (0-based) is pivotal.
pub fn influence(f: &BooleanTable, pv: &ProbVector, j: usize) -> Result<f64> {
    if j >= f.n {
        return domain("coordinate out of range");
    }
    Ok(influences(f, pv)?[j])
}

pub fn total_influence(f: &BooleanTable, pv: &ProbVector) -> Result<f64> {
    Ok(influences(f, pv)?.iter().sum())
}

/// Whether `q` dominates `p`: every partial sum of `p - q` is nonnegative.
/// Accepts raw weight vectors so shifted vectors can be compared.
pub fn dominates(p: &[f64], q: &[f64]) -> Result<bool> {
    if p.len() != q.len() {
        return domain("vectors must have the same length");
    }
    let mut s = 0.0;
    for j in 0..p.len() - 1 {
        s += p[j] - q[j];
        if s < -SUM_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeminflReport {
    /// `P(f = 1)`.
    pub t: f64,
    pub total_influence: f64,
    pub max_influence: f64,
    /// `max_j I_j / (q^2 log^2(4/q))`.
    pub a_star: f64,
    /// Set when the bound does not apply; the conclusion is then not checked.
    pub not_applicable: Option<String>,
    /// `t(1-t) log(1/a) / (24 k^2 q log(4/q))`.
    pub bound: f64,
    /// `total_influence - bound`.
    pub margin: f64,
}

impl LeminflReport {
    pub fn hypothesis_met(&self) -> bool {
        self.not_applicable.is_none()
    }

    /// True when the hypothesis fails or the conclusion holds.
    pub fn consistent(&self) -> bool {
        !self.hypothesis_met() || self.margin >= -1e-12
    }
}

/// Influence lower bound under small maximal influence, checked at the
/// smallest admissible `a`.
pub fn check_leminfl(f: &BooleanTable, pv: &ProbVector, q: f64) -> Result<LeminflReport> {
    let infl = influences(f, pv)?;
    let t = f.prob(pv.entries());
    let total: f64 = infl.iter().sum();
    let max = infl.iter().cloned().fold(0.0, f64::max);
    let scale = q * q * (4.0 / q).ln().powi(2);
    let a_star = max / scale;
    let k = f.k as f64;
    let mut report = LeminflReport {
        t,
        total_influence: total,
        max_influence: max,
        a_star,
        not_applicable: None,
        bound: 0.0,
        margin: total,
    };
    report.not_applicable = if !pv.all_positive() {
        Some("vector has a zero entry".into())
    } else if !(q >= p_max_second(pv) && q <= 1.0) {
        Some(format!("q = {q} is outside [p_max, 1]"))
    } else if a_star > 1.0 / 16.0 {
        Some(format!("hypothesis not met: a* = {a_star:.6} > 1/16"))
    } else {
        None
    };
    if report.hypothesis_met() {
        // with all entries positive, zero influence means f is constant and
        // t(1-t) = 0; t itself may carry rounding there
        let spread = t * (1.0 - t);
        report.bound = if max == 0.0 || spread == 0.0 {
            0.0
        } else {
            spread * (1.0 / a_star).ln() / (24.0 * k * k * q * (4.0 / q).ln())
        };
        report.margin = total - report.bound;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharpNmReason {
    GammaNotPositive,
    EtaOutOfRange,
    LengthMismatch,
    P0BelowGamma,
    PkAboveOneMinusGamma,
    NotDominated,
    OrderTooSmall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpNmReport {
    pub holds: bool,
    pub reasons: Vec<SharpNmReason>,
    /// Second largest of `p_0, .., p_{k-1}, p_k + gamma`.
    pub q_max: f64,
    /// Smallest `log m` meeting the order condition, infinite when `gamma = 0`.
    pub ln_m_min: f64,
}

impl SharpNmReport {
    pub fn m_min(&self) -> f64 {
        self.ln_m_min.exp()
    }
}

/// Hypotheses of the sharp-threshold proposition for symmetry order `m`.
pub fn sharpnm_hypothesis(p: &ProbVector, q: &ProbVector, gamma: f64, m: u64, eta: f64, k: usize) -> SharpNmReport {
    let mut reasons = Vec::new();
    let pe = p.entries();
    if pe.len() != q.entries().len() || pe.len() != k + 1 {
        return SharpNmReport {
            holds: false,
            reasons: vec![SharpNmReason::LengthMismatch],
            q_max: f64::NAN,
            ln_m_min: f64::NAN,
        };
    }
    if !(gamma > 0.0) {
        reasons.push(SharpNmReason::GammaNotPositive);
    }
    if !(eta > 0.0 && eta < 0.5) {
        reasons.push(SharpNmReason::EtaOutOfRange);
    }
    if pe[0] < gamma {
        reasons.push(SharpNmReason::P0BelowGamma);
    }
    if pe[k] > 1.0 - gamma {
        reasons.push(SharpNmReason::PkAboveOneMinusGamma);
    }
    let mut shifted = pe.to_vec();
    shifted[0] -= gamma;
    shifted[k] += gamma;
    if !dominates(&shifted, q.entries()).unwrap_or(false) {
        reasons.push(SharpNmReason::NotDominated);
    }
    let mut v = pe.to_vec();
    v[k] += gamma;
    v.sort_by(|a, b| b.total_cmp(a));
    let q_max = v[1];
    let rhs = 200.0 * (k * k) as f64 * (1.0 / eta).ln() * q_max * (4.0 / q_max).ln();
    let ln_m_min = if gamma > 0.0 { rhs / gamma } else { f64::INFINITY };
    if !(gamma * (m as f64).ln() >= rhs) {
        reasons.push(SharpNmReason::OrderTooSmall);
    }
    SharpNmReport {
        holds: reasons.is_empty(),
        reasons,
        q_max,
        ln_m_min,
    }
}

/// Largest gap between a central difference of `g(h) = P_{r(h)}(f)`, with
/// `r(h) = p + (-h, 0, .., 0, h)`, and the exact total influence at `r(h)`,
/// over `points` values of `h` in `[step, gamma - step]`.
pub fn discrete_mr_check(f: &BooleanTable, pv: &ProbVector, gamma: f64, step: f64, points: usize) -> Result<f64> {
    check_pv(f, pv.entries())?;
    if !f.is_increasing() {
        return domain("f must be increasing");
    }
    let p = pv.entries();
    let k = f.k;
    if !(gamma > 0.0 && p[0] >= gamma) {
        return domain("path needs 0 < gamma <= p_0");
    }
    if !(step > 0.0 && 2.0 * step < gamma) || points == 0 {
        return domain("need 0 < 2 step < gamma and at least one point");
    }
    let r = |h: f64| {
        let mut v = p.to_vec();
        v[0] -= h;
        v[k] += h;
        v
    };
    let hs: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                gamma / 2.0
            } else {
                step + (gamma - 2.0 * step) * i as f64 / (points - 1) as f64
            }
        })
        .collect();
    Ok(hs
        .par_iter()
        .map(|&h| {
            let fd = (f.prob(&r(h + step)) - f.prob(&r(h - step))) / (2.0 * step);
            let exact: f64 = influences_raw(f, &r(h)).iter().sum();
            (fd - exact).abs()
        })
        .reduce(|| 0.0, f64::max))
}
