//! The buffered locality event becomes typical as the rectangle grows.

use std::sync::Arc;

use ersa::lattice::{Grid, Rect, Window};
use ersa::rsa_process::{e_dense_open, ArrivalField, Params};

/// Side at which the pilot run first exceeded 0.99 (about 0.999 at 200 trials).
const PILOT_SIDE: i32 = 128;

fn frequency(s: i32, trials: u64) -> f64 {
    let r = Rect::new(1, s, 1, s).unwrap();
    let b = 2 * (s as f64).sqrt().floor() as u32;
    let grid = Arc::new(Grid::new(Window::plane(r.enlarged(b as i32))));
    let params = Params::new(1.0, 0.5, 0.0).unwrap();
    let ok = (0..trials)
        .filter(|&i| {
            let f = ArrivalField::sample(grid.clone(), 31, i);
            e_dense_open(&grid, &f.times(&params), &r, b).unwrap()
        })
        .count();
    ok as f64 / trials as f64
}

#[test]
fn dense_event_tends_to_one() {
    let trials = 1000;
    let freq: Vec<f64> = [16, 32, 64, PILOT_SIDE].iter().map(|&s| frequency(s, trials)).collect();
    println!("{freq:?}");
    assert!(freq.windows(2).all(|w| w[0] < w[1]), "{freq:?}");
    assert!(freq[3] > 0.99, "{freq:?}");
}
