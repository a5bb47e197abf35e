mod common;

use std::collections::BTreeMap;

use common::seeded;
use conley_core::cubical::{Cube, CubeSet, Grid};
use conley_core::flow::{Expr, FlowModel};
use conley_core::index_pair::{
    build_index_pair, invariant_part, outer_approximation, verify_index_pair, MultivaluedCubeMap,
};
use proptest::prelude::*;
use rand::Rng;

fn random_map(rng: &mut rand_chacha::ChaCha8Rng, side: i32) -> (Grid, CubeSet, MultivaluedCubeMap) {
    let g = Grid::flat(2, 1);
    let dom = g.box_tops(&[0, 0], &[side, side]);
    let cubes: Vec<Cube> = dom.iter().copied().collect();
    let mut images = BTreeMap::new();
    for q in &cubes {
        let k = rng.gen_range(0..3);
        let img: Vec<Cube> = (0..k).map(|_| cubes[rng.gen_range(0..cubes.len())]).collect();
        images.insert(*q, img);
    }
    (g, dom, MultivaluedCubeMap::from_images(g, images))
}

/// Removes cubes without a successor or a predecessor inside the set until
/// nothing changes.
fn peel(s: &CubeSet, f: &MultivaluedCubeMap) -> CubeSet {
    let mut cur = s.clone();
    loop {
        let keep: CubeSet = cur
            .iter()
            .filter(|q| {
                let forward = f.image(q).iter().any(|r| cur.contains(r));
                let backward = cur.iter().any(|p| f.image(p).contains(q));
                forward && backward
            })
            .copied()
            .collect();
        if keep == cur {
            return cur;
        }
        cur = keep;
    }
}

fn subset(rng: &mut rand_chacha::ChaCha8Rng, s: &CubeSet, p: f64) -> CubeSet {
    s.iter().filter(|_| rng.gen_bool(p)).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn invariant_part_matches_peeling(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (_, dom, f) = random_map(&mut rng, 5);
        let s = subset(&mut rng, &dom, 0.7);
        prop_assert_eq!(invariant_part(&s, &f), peel(&s, &f));
    }

    #[test]
    fn invariant_part_is_monotone(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (_, dom, f) = random_map(&mut rng, 5);
        let big = subset(&mut rng, &dom, 0.8);
        let small = subset(&mut rng, &big, 0.7);
        let inv_small = invariant_part(&small, &f);
        let inv_big = invariant_part(&big, &f);
        prop_assert!(inv_small.is_subset(&inv_big));
    }
}

/// `ẋ = a·x·ln2` (and `ẏ = b·y·ln2`), `θ̇ = 1` on `[−1, 1]^k × S¹`.
struct Orbit {
    rates: Vec<f64>,
}

impl Orbit {
    fn model(&self, h: f64) -> FlowModel {
        let d = self.rates.len();
        let mut field: Vec<Expr> = self
            .rates
            .iter()
            .enumerate()
            .map(|(i, r)| Expr::mul(vec![Expr::c(*r), Expr::x(i), Expr::Ln2]))
            .collect();
        field.push(Expr::c(1.0));
        FlowModel::new(field, Some(d), 0.7, h)
    }

    fn grid(&self, s: u32) -> Grid {
        Grid::circular(self.rates.len() + 1, s, self.rates.len())
    }

    fn domain(&self, g: &Grid) -> CubeSet {
        let k = 1 << g.scale;
        let d = self.rates.len();
        let mut lo = vec![-k; d];
        let mut hi = vec![k; d];
        lo.push(0);
        hi.push(g.period());
        g.box_tops(&lo, &hi)
    }

    fn flow(&self, p: &[f64], t: f64) -> Vec<f64> {
        let mut q: Vec<f64> = self.rates.iter().zip(p).map(|(r, x)| x * (r * t).exp2()).collect();
        q.push((p[self.rates.len()] + t).rem_euclid(1.0));
        q
    }
}

fn orbits() -> Vec<Orbit> {
    vec![
        Orbit { rates: vec![-1.0] },
        Orbit { rates: vec![1.0] },
        Orbit { rates: vec![1.0, -1.0] },
    ]
}

fn in_union(g: &Grid, set: &CubeSet, p: &[f64]) -> bool {
    let b: Vec<(f64, f64)> = p.iter().map(|x| (*x, *x)).collect();
    g.box_inside(set, &b)
}

#[test]
fn built_pairs_verify_and_satisfy_the_conditions_pointwise() {
    let mut rng = seeded(11);
    for orbit in orbits() {
        for (s, h) in [(3, 0.125), (3, 0.0625), (4, 0.0625)] {
            let g = orbit.grid(s);
            let m = orbit.model(h);
            let dom = orbit.domain(&g);
            let f = outer_approximation(&g, &dom, &m).unwrap();
            let built = build_index_pair(&dom, &f, Some(&m)).unwrap();
            assert!(verify_index_pair(&built.pair, &f, Some(&m)).pass());
            let n = &built.pair.n;
            let l = &built.pair.l;
            let tops: Vec<Cube> = built.n_tops.iter().copied().collect();
            for _ in 0..2000 {
                let q = tops[rng.gen_range(0..tops.len())];
                let p: Vec<f64> = q.bounds(g.scale).iter().map(|(a, b)| rng.gen_range(*a..=*b)).collect();
                let img = orbit.flow(&p, h);
                let in_l = in_union(&g, l, &p);
                let img_in_n = in_union(&g, n, &img);
                if in_l && img_in_n {
                    assert!(in_union(&g, l, &img), "L is not positively invariant at {p:?}");
                }
                if !img_in_n {
                    assert!(in_l, "{p:?} leaves N without passing through L");
                }
            }
        }
    }
}

#[test]
fn finer_invariant_parts_nest_in_coarser_ones() {
    for orbit in orbits() {
        let h = 0.0625;
        let m = orbit.model(h);
        let parts: Vec<(Grid, CubeSet)> = [3, 4]
            .iter()
            .map(|&s| {
                let g = orbit.grid(s);
                let dom = orbit.domain(&g);
                let f = outer_approximation(&g, &dom, &m).unwrap();
                (g, invariant_part(&dom, &f))
            })
            .collect();
        let (coarse_g, coarse) = &parts[0];
        let (fine_g, fine) = &parts[1];
        let coarse_cells = coarse_g.closure(coarse);
        for q in fine {
            assert!(
                coarse_g.box_inside(&coarse_cells, &q.bounds(fine_g.scale)),
                "{q:?} escapes the coarse invariant part"
            );
        }
    }
}
