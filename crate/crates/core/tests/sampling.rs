//! Moments of the sampled variates and effective times.

use std::sync::Arc;

use ersa::lattice::{Grid, Rect, Window};
use ersa::rsa_process::{ArrivalField, Params};

fn field(seed: u64) -> ArrivalField {
    let g = Arc::new(Grid::new(Window::plane(Rect::new(0, 199, 0, 199).unwrap())));
    ArrivalField::sample(g, seed, 0)
}

fn mean(v: impl Iterator<Item = f64>) -> (f64, usize) {
    let (mut s, mut n) = (0.0, 0);
    for x in v {
        s += x;
        n += 1;
    }
    (s / n as f64, n)
}

#[test]
fn even_times_have_mean_one_over_lambda() {
    let f = field(3);
    let params = Params::new(2.5, 0.5, 0.7).unwrap();
    let t = f.times(&params);
    let g = f.grid();
    let (m, n) = mean((0..g.len()).filter(|&i| !g.is_odd(i)).map(|i| t[i]));
    // exponential: sd equals the mean
    assert!((m - 0.4).abs() <= 4.0 * 0.4 / (n as f64).sqrt(), "{m}");
}

#[test]
fn odd_zero_fraction() {
    let f = field(4);
    for delta in [0.1, 0.7, 2.0] {
        let params = Params::new(1.0, 0.5, delta).unwrap();
        let t = f.times(&params);
        let g = f.grid();
        let (frac, n) = mean((0..g.len()).filter(|&i| g.is_odd(i)).map(|i| (t[i] == 0.0) as u8 as f64));
        let z = 1.0 - (-delta).exp();
        assert!((frac - z).abs() <= 4.0 * (z * (1.0 - z) / n as f64).sqrt(), "delta {delta}: {frac} vs {z}");
        // positive odd times keep the unit-rate exponential law
        let (m, k) = mean((0..g.len()).filter(|&i| g.is_odd(i) && t[i] > 0.0).map(|i| t[i]));
        assert!((m - 1.0).abs() <= 4.0 / (k as f64).sqrt());
    }
}

#[test]
fn families_are_uncorrelated() {
    let f = field(5);
    let corr = |a: &[f64], b: &[f64]| {
        let (ma, _) = mean(a.iter().copied());
        let (mb, _) = mean(b.iter().copied());
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    };
    let bound = 4.0 / (f.exp.len() as f64).sqrt();
    assert!(corr(&f.exp, &f.odd_u).abs() < bound);
    assert!(corr(&f.exp, &f.diamond_u).abs() < bound);
    assert!(corr(&f.odd_u, &f.diamond_u).abs() < bound);
    assert!(corr(&f.exp[..f.exp.len() - 1], &f.exp[1..]).abs() < bound);
}

#[test]
fn diamond_fraction_is_p() {
    let f = field(6);
    let g = f.grid();
    let p = 0.37;
    let black = f.diamond_black(p);
    let (frac, n) = mean((0..g.len()).filter(|&i| g.diamond_valid(i)).map(|i| black[i] as u8 as f64));
    assert!((frac - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let g = Arc::new(Grid::new(Window::plane(Rect::new(0, 9, 0, 9).unwrap())));
    let a = ArrivalField::sample(g.clone(), 9, 1);
    let b = ArrivalField::sample(g.clone(), 9, 1);
    let c = ArrivalField::sample(g, 9, 2);
    assert_eq!(a.exp, b.exp);
    assert_ne!(a.exp, c.exp);
}
