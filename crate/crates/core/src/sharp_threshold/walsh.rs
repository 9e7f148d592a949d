//! Walsh-Fourier analysis on `{0,1}^m` with the uniform inner product
//! `<g,h> = 2^-m sum_A g(A) h(A)`. A table is indexed by the bitmask of `A`.

use super::{beta_p, ProbVector};
use crate::error::{domain, Error, Result};

pub const WALSH_CAP: u32 = 20;

fn dim(len: usize, cap: u32) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return domain("table length must be a power of two");
    }
    let m = len.trailing_zeros();
    if m > cap {
        return Err(Error::Size {
            what: "m",
            got: m as usize,
            limit: cap as usize,
        });
    }
    Ok(m)
}

fn butterfly(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `h^(S) = <h, u_S>`.
pub fn wht(h: &[f64]) -> Result<Vec<f64>> {
    let m = dim(h.len(), WALSH_CAP)?;
    let mut v = h.to_vec();
    butterfly(&mut v);
    let s = 2f64.powi(-(m as i32));
    v.iter_mut().for_each(|x| *x *= s);
    Ok(v)
}

/// `h = sum_S h^(S) u_S`.
pub fn inverse_wht(hat: &[f64]) -> Result<Vec<f64>> {
    dim(hat.len(), WALSH_CAP)?;
    let mut v = hat.to_vec();
    butterfly(&mut v);
    Ok(v)
}

/// Convolution through the pointwise product of transforms.
pub fn convolve(g: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if g.len() != h.len() {
        return domain("tables must have the same length");
    }
    let (gh, hh) = (wht(g)?, wht(h)?);
    inverse_wht(&gh.iter().zip(&hh).map(|(a, b)| a * b).collect::<Vec<_>>())
}

/// `(h * g)(S) = 2^-m sum_A h(A) g(S ^ A)`, summed directly; `m <= 12`.
pub fn convolve_direct(g: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if g.len() != h.len() {
        return domain("tables must have the same length");
    }
    let m = dim(g.len(), 12)?;
    let s = 2f64.powi(-(m as i32));
    Ok((0..g.len())
        .map(|x| s * (0..g.len()).map(|a| h[a] * g[x ^ a]).sum::<f64>())
        .collect())
}

/// `T_eps h`: the level-`|S|` coefficient scaled by `eps^|S|`.
pub fn noise(eps: f64, h: &[f64]) -> Result<Vec<f64>> {
    let mut hat = wht(h)?;
    for (s, c) in hat.iter_mut().enumerate() {
        *c *= eps.powi(s.count_ones() as i32);
    }
    inverse_wht(&hat)
}

/// `(2^-m sum |h|^q)^(1/q)`.
pub fn lp_norm(h: &[f64], q: f64) -> f64 {
    (h.iter().map(|x| x.abs().powf(q)).sum::<f64>() / h.len() as f64).powf(1.0 / q)
}

/// `| ||h||_2^2 - sum_S h^(S)^2 |`.
pub fn parseval_gap(h: &[f64]) -> Result<f64> {
    let hat = wht(h)?;
    let lhs = h.iter().map(|x| x * x).sum::<f64>() / h.len() as f64;
    Ok((lhs - hat.iter().map(|x| x * x).sum::<f64>()).abs())
}

/// `sum_S h^(S)^2 |S|`.
pub fn spectral_level_sum(hat: &[f64]) -> f64 {
    hat.iter()
        .enumerate()
        .map(|(s, c)| c * c * s.count_ones() as f64)
        .sum()
}

/// `sum_l P(h(A) != h(A ^ {l}))` for `A` uniform.
pub fn binary_influence_sum(h: &[bool]) -> Result<f64> {
    let m = dim(h.len(), WALSH_CAP)?;
    let flips: usize = (0..m)
        .map(|l| (0..h.len()).filter(|&a| h[a] != h[a ^ (1 << l)]).count())
        .sum();
    Ok(flips as f64 / h.len() as f64)
}

/// `g o tau` on `{0,1}^m` for a vector with entries in `2^-m Z`: the set whose
/// binary digits spell `u` maps to `beta_p(u 2^-m)`. Digit `l` is bit `m - l`.
pub fn dyadic_lift(pv: &ProbVector, g: &[bool], m: u32) -> Result<Vec<bool>> {
    if m > WALSH_CAP {
        return Err(Error::Size {
            what: "m",
            got: m as usize,
            limit: WALSH_CAP as usize,
        });
    }
    if g.len() != pv.entries().len() {
        return domain("g must have one value per entry");
    }
    let scale = 2f64.powi(m as i32);
    if pv.entries().iter().any(|&p| (p * scale).fract() != 0.0) {
        return domain("entries must be multiples of 2^-m");
    }
    (0..1usize << m)
        .map(|u| Ok(g[beta_p(pv, u as f64 / scale)?]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_spectrum() {
        let hat = wht(&[1.0; 16]).unwrap();
        assert_eq!(hat[0], 1.0);
        assert!(hat[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn round_trip() {
        let h: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let back = inverse_wht(&wht(&h).unwrap()).unwrap();
        for (a, b) in h.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(wht(&[1.0; 3]).is_err());
    }

    #[test]
    fn dictator_levels() {
        // h(A) = 1{1 in A}: w = 1 and the spectrum sits on levels 0 and 1
        let h: Vec<bool> = (0..8).map(|a| a & 1 == 1).collect();
        let hat = wht(&h.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>()).unwrap();
        assert_eq!(binary_influence_sum(&h).unwrap(), 1.0);
        assert!((4.0 * spectral_level_sum(&hat) - 1.0).abs() < 1e-15);
    }
}
