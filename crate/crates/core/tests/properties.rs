//! Invariants checked against naive reference implementations.

use std::collections::VecDeque;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ersa::discrete_torus::discrete_marginals;
use ersa::lattice::{face_adjacency, rect_faces, Grid, Rect, Site, SiteKind, Window};
use ersa::percolation::{colour_faces, has_crossing, Colour, CrossingSpec, Orientation};
use ersa::rsa_process::{affects, coupled_colouring, jam, resolve_jamming, ArrivalField, FaceColours, Params, Rejam};
use ersa::sharp_threshold::{beta_p, digit_flip, dominates, noise, parseval_gap, wht, ProbVector};

fn grid(w: i32, h: i32) -> Arc<Grid> {
    Arc::new(Grid::new(Window::plane(Rect::new(0, w - 1, 0, h - 1).unwrap())))
}

fn params() -> impl Strategy<Value = Params> {
    (0.05f64..8.0, 0.0f64..=1.0, prop_oneof![Just(0.0), 0.0f64..3.0])
        .prop_map(|(l, p, d)| Params::new(l, p, d).unwrap())
}

/// Arrivals in time order, odd sites first on ties, each occupying its site
/// unless a neighbour already holds a particle.
fn sequential_rsa(g: &Grid, t: &[f64]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(g.is_odd(b).cmp(&g.is_odd(a))).then(a.cmp(&b)));
    let mut occ = vec![false; g.len()];
    for i in order {
        if !g.neighbors(i).any(|j| occ[j]) {
            occ[i] = true;
        }
    }
    occ
}

fn face_black(c: &FaceColours, s: &Site) -> bool {
    let g = c.grid();
    match s.kind {
        SiteKind::Octagon => c.octagon_black[g.octagon_index(s).unwrap()],
        SiteKind::Diamond => c.diamond_black[g.diamond_index(s).unwrap()],
    }
}

/// Breadth-first search over faces of the wanted colour inside the rectangle.
fn bfs_crossing(spec: &CrossingSpec, c: &FaceColours) -> bool {
    let r = spec.rect;
    let faces = rect_faces(&r, c.grid().window()).unwrap();
    let want = spec.colour == Colour::Black;
    let good: Vec<bool> = faces.iter().map(|s| face_black(c, s) == want).collect();
    let is_start = |s: &Site| {
        s.is_octagon()
            && match spec.orientation {
                Orientation::Horizontal => s.x == r.x_lo,
                Orientation::Vertical => s.y == r.y_lo,
            }
    };
    let is_end = |s: &Site| {
        s.is_octagon()
            && match spec.orientation {
                Orientation::Horizontal => s.x == r.x_hi,
                Orientation::Vertical => s.y == r.y_hi,
            }
    };
    let mut seen = vec![false; faces.len()];
    let mut queue = VecDeque::new();
    for (i, s) in faces.iter().enumerate() {
        if good[i] && is_start(s) {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        if is_end(&faces[i]) {
            return true;
        }
        for j in 0..faces.len() {
            if good[j] && !seen[j] && face_adjacency(&faces[i], &faces[j]) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn jam_matches_sequential_adsorption(w in 1i32..9, h in 1i32..9, pr in params(), seed in any::<u64>()) {
        let g = grid(w, h);
        let f = ArrivalField::sample(g.clone(), seed, 0);
        let t = f.times(&pr);
        prop_assert_eq!(jam(&g, &t).unwrap(), sequential_rsa(&g, &t));
    }

    #[test]
    fn coupling_is_monotone(
        w in 2i32..10, h in 2i32..10,
        pr in params(), dl in 0.0f64..4.0, dp in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let hi = Params::new(pr.lambda + dl, (pr.p + dp).min(1.0), pr.delta).unwrap();
        let f = ArrivalField::sample(grid(w, h), seed, 1);
        let (a, b) = coupled_colouring(&f, &pr, &hi).unwrap();
        prop_assert!(a.colours.black_subset_of(&b.colours));
    }

    #[test]
    fn crossing_matches_bfs(w in 2i32..9, h in 2i32..9, pr in params(), seed in any::<u64>()) {
        let g = grid(w + 2, h + 2);
        let f = ArrivalField::sample(g, seed, 2);
        let c = colour_faces(&resolve_jamming(&f, &pr).unwrap(), &f, pr.p);
        let r = Rect::new(1, w, 1, h).unwrap();
        for spec in [CrossingSpec::horizontal_black(r), CrossingSpec::vertical_white(r)] {
            prop_assert_eq!(has_crossing(&spec, &c).unwrap(), bfs_crossing(&spec, &c));
        }
    }

    #[test]
    fn exactly_one_crossing(w in 1i32..12, h in 1i32..12, pr in params(), seed in any::<u64>()) {
        let g = grid(w, h);
        let f = ArrivalField::sample(g, seed, 3);
        let c = colour_faces(&resolve_jamming(&f, &pr).unwrap(), &f, pr.p);
        let r = Rect::new(0, w - 1, 0, h - 1).unwrap();
        let black = has_crossing(&CrossingSpec::horizontal_black(r), &c).unwrap();
        let white = has_crossing(&CrossingSpec::vertical_white(r), &c).unwrap();
        prop_assert!(black != white);
    }

    #[test]
    fn rejam_matches_full_jam(w in 1i32..10, h in 1i32..10, pr in params(), seed in any::<u64>(), pick in any::<prop::sample::Index>(), tx in 0.0f64..5.0) {
        let g = grid(w, h);
        let f = ArrivalField::sample(g.clone(), seed, 4);
        let t = f.times(&pr);
        let base = jam(&g, &t).unwrap();
        let x = pick.index(g.len());
        let mut t2 = t.clone();
        t2[x] = tx;
        let full = jam(&g, &t2).unwrap();
        let mut rj = Rejam::new(&g, &t, &base);
        let mut changed = rj.apply(x, tx).unwrap().to_vec();
        changed.sort();
        let expect: Vec<usize> = (0..g.len()).filter(|&i| full[i] != base[i]).collect();
        prop_assert_eq!(changed, expect);
    }

    #[test]
    fn unaffected_sites_keep_their_state(w in 2i32..9, h in 2i32..9, pr in params(), seed in any::<u64>(), pick in any::<prop::sample::Index>(), tx in 0.0f64..5.0) {
        let g = grid(w, h);
        let f = ArrivalField::sample(g.clone(), seed, 5);
        let t = f.times(&pr);
        let x = pick.index(g.len());
        let mut t2 = t.clone();
        t2[x] = tx;
        let (a, b) = (jam(&g, &t).unwrap(), jam(&g, &t2).unwrap());
        for y in 0..g.len() {
            if y != x && a[y] != b[y] {
                prop_assert!(affects(&g, &t, x, y).unwrap(), "{} changed without being affected by {}", y, x);
            }
        }
    }

    #[test]
    fn digit_flip_is_an_involution(ell in 1u32..40, k in 0u64..1 << 52) {
        // on this grid both x and its flip are exact doubles
        let x = k as f64 / 2f64.powi(52);
        let y = digit_flip(ell, x).unwrap();
        prop_assert!((0.0..1.0).contains(&y));
        prop_assert_eq!(digit_flip(ell, y).unwrap(), x);
        prop_assert!(((y - x).abs() - 2f64.powi(-(ell as i32))).abs() < 1e-15);
    }

    #[test]
    fn parseval_and_noise(m in 0u32..9, seed in any::<u64>(), eps in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<f64> = (0..1usize << m).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assert!(parseval_gap(&h).unwrap() < 1e-10);
        let hat = wht(&h).unwrap();
        let th = noise(eps, &h).unwrap();
        let that = wht(&th).unwrap();
        for s in 0..hat.len() {
            let want = hat[s] * eps.powi(s.count_ones() as i32);
            prop_assert!((that[s] - want).abs() < 1e-10);
        }
        prop_assert!((noise(1.0, &h).unwrap().iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)) < 1e-12);
    }

    #[test]
    fn domination_is_a_preorder(k in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (a, b, c) = (draw(), draw(), draw());
        prop_assert!(dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
            prop_assert!(dominates(&a, &c).unwrap());
        }
    }

    #[test]
    fn block_marginals_sum_to_one(l0 in 0.01f64..20.0, pt in 0.0f64..=1.0, l1 in 0.01f64..20.0, d in 0.001f64..2.0) {
        if let Ok(m) = discrete_marginals(l0, pt, l1, d) {
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(m.iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn beta_pushes_lebesgue_to_the_vector() {
    let pv = ProbVector::new(vec![0.15, 0.4, 0.05, 0.4]).unwrap();
    let n = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0u64; 4];
    for _ in 0..n {
        counts[beta_p(&pv, rng.random::<f64>()).unwrap()] += 1;
    }
    for (j, &c) in counts.iter().enumerate() {
        let p = pv.entries()[j];
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() <= 4.0 * sigma, "entry {j}");
    }
}
