//! Dense real polynomials in one variable, used for exact event probabilities in `p`.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    /// `coeffs[i]` multiplies `p^i`.
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Poly {
        Poly { coeffs: vec![c] }
    }

    /// `p^a (1 - p)^b`.
    pub fn bernstein(a: usize, b: usize) -> Poly {
        let mut out = Poly::constant(1.0);
        let p = Poly {
            coeffs: vec![0.0, 1.0],
        };
        let q = Poly {
            coeffs: vec![1.0, -1.0],
        };
        for _ in 0..a {
            out = &out * &p;
        }
        for _ in 0..b {
            out = &out * &q;
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly {
            coeffs: (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernstein_partition_of_unity() {
        let n = 5;
        let mut total = Poly::zero();
        for a in 0..=n {
            let binom = (0..a).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            total = &total + &Poly::bernstein(a, n - a).scale(binom);
        }
        assert!(total.max_abs_diff(&Poly::constant(1.0)) < 1e-12);
    }

    #[test]
    fn derivative_and_eval() {
        let p = Poly {
            coeffs: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative().coeffs, vec![2.0, 6.0]);
        assert_eq!(p.degree(), 2);
    }
}
