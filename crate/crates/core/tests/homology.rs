mod common;

use std::collections::BTreeMap;

use common::*;
use conley_core::algebra::{Field, Matrix};
use conley_core::cubical::{boundary_chain, lift_to_cover, section_restrict, Chain, Cube, CubePair, CubeSet, Grid};
use conley_core::homology::{homologous_decomposition, relative_homology};
use proptest::prelude::*;
use rand::Rng;

fn fields() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Rational), Just(Field::Prime(2)), Just(Field::Prime(3))]
}

fn nonzero(d: &BTreeMap<usize, usize>) -> BTreeMap<usize, usize> {
    d.iter().filter(|(_, n)| **n > 0).map(|(q, n)| (*q, *n)).collect()
}

fn random_chain(rng: &mut rand_chacha::ChaCha8Rng, cubes: &[Cube], q: usize, field: Field) -> Chain {
    let mut terms = Vec::new();
    for c in cubes.iter().filter(|c| c.dim() == q) {
        if rng.gen_bool(0.4) {
            terms.push((*c, field.from_i64(rng.gen_range(-2..=2))));
        }
    }
    Chain::from_terms(q, terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = seeded(seed);
        let g = Grid::flat(dim, 2);
        let cubes: Vec<Cube> = (0..rng.gen_range(0..12))
            .map(|_| {
                let base: Vec<i32> = (0..dim).map(|_| rng.gen_range(-3..3)).collect();
                Cube::new(&base, rng.gen_range(0..(1u16 << dim)) as u8)
            })
            .collect();
        let once = g.closure(&cubes);
        prop_assert!(closure_is_closed(&g, &once));
        prop_assert!(cubes.iter().all(|c| once.contains(c)));
        prop_assert_eq!(g.closure(&once), once);
    }

    #[test]
    fn boundary_of_boundary_vanishes(seed in any::<u64>(), dim in 1usize..=4, field in fields()) {
        let mut rng = seeded(seed);
        let g = Grid::flat(dim, 2);
        let base: Vec<i32> = (0..dim).map(|_| rng.gen_range(-5..5)).collect();
        let c = Cube::new(&base, rng.gen_range(0..(1u16 << dim)) as u8);
        let b = boundary_chain(&c, &g, field);
        prop_assert!(b.boundary(&g, field).is_zero());
    }

    #[test]
    fn section_of_lift_is_slab_zero(seed in any::<u64>(), dim in 2usize..=3) {
        let mut rng = seeded(seed);
        let axis = dim - 1;
        let g = Grid::circular(dim, 2, axis);
        let mut tops = Vec::new();
        for _ in 0..rng.gen_range(1..10) {
            let mut base: Vec<i32> = (0..dim).map(|_| rng.gen_range(-2..2)).collect();
            base[axis] = rng.gen_range(0..g.period());
            tops.push(Cube::top(&base));
        }
        let n = g.closure(&tops);
        let l = g.closure(&tops[..rng.gen_range(0..tops.len())].to_vec());
        let p = CubePair { grid: g, n, l };
        let cov = lift_to_cover(&p).unwrap();
        let s = section_restrict(&cov, 0).unwrap();
        let slab = |set: &CubeSet| -> CubeSet {
            set.iter().filter(|c| !c.extends(axis) && c.base()[axis] == 0).map(|c| c.drop_axis(axis)).collect()
        };
        prop_assert_eq!(&s.n, &slab(&p.n));
        prop_assert_eq!(&s.l, &slab(&p.l));
        prop_assert!(s.grid.check_closed(&s.n).is_ok());
        prop_assert!(s.grid.check_closed(&s.l).is_ok());
        let end = section_restrict(&cov, cov.period).unwrap();
        prop_assert_eq!(end.n, s.n);
    }

    #[test]
    fn homology_matches_dense_oracle(seed in any::<u64>(), dim in 1usize..=3, field in fields()) {
        let mut rng = seeded(seed);
        let p = random_pair(&mut rng, dim, 3, 200);
        let h = relative_homology(&p, field);
        prop_assert_eq!(nonzero(&h.dims()), nonzero(&dense_homology_dims(&p, field)));
    }

    #[test]
    fn euler_characteristic(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = seeded(seed);
        let p = random_pair(&mut rng, dim, 3, 200);
        let h = relative_homology(&p, Q);
        let chi_h: i64 = h.dims().iter().map(|(q, n)| if q % 2 == 0 { *n as i64 } else { -(*n as i64) }).sum();
        let chi_c: i64 = p.relative_cubes().map(|c| if c.dim() % 2 == 0 { 1 } else { -1 }).sum();
        prop_assert_eq!(chi_h, chi_c);
    }

    #[test]
    fn basis_cycles_are_relative_and_independent(seed in any::<u64>(), dim in 1usize..=3, field in fields()) {
        let mut rng = seeded(seed);
        let p = random_pair(&mut rng, dim, 3, 120);
        let h = relative_homology(&p, field);
        for (q, reps) in &h.basis().representatives {
            let mut cols = Vec::new();
            for z in reps {
                let bz = z.boundary(&p.grid, field);
                prop_assert!(bz.support().all(|c| p.l.contains(c)), "boundary leaves L in degree {}", q);
                prop_assert!(z.support().all(|c| p.n.contains(c) && !p.l.contains(c)));
                cols.push(h.coordinates(z).unwrap());
            }
            let m = Matrix::from_columns(field, reps.len(), &cols);
            prop_assert_eq!(m.rank(), reps.len());
        }
    }

    #[test]
    fn decomposition_identity_holds(seed in any::<u64>(), dim in 1usize..=3, field in fields()) {
        let mut rng = seeded(seed);
        let p = random_pair(&mut rng, dim, 3, 120);
        let h = relative_homology(&p, field);
        let cubes: Vec<Cube> = p.n.iter().copied().collect();
        let l_cubes: Vec<Cube> = p.l.iter().copied().collect();
        for q in 0..dim {
            let c = random_chain(&mut rng, &cubes, q + 1, field);
            let mut z = c.boundary(&p.grid, field);
            z.axpy(&field.one(), &random_chain(&mut rng, &l_cubes, q, field));
            let relative = z.restricted(|x| !p.l.contains(x));
            // A boundary: must decompose, and the pieces must add back up.
            let (fill, rest) = homologous_decomposition(&relative, &h).unwrap().expect("boundary is null-homologous");
            let mut back = fill.boundary(&p.grid, field);
            back.axpy(&field.one(), &rest);
            prop_assert_eq!(back.restricted(|x| !p.l.contains(x)), relative.clone());
            prop_assert!(rest.restricted(|x| !p.l.contains(x)).is_zero());
            // Adding a basis cycle makes the class nonzero.
            if let Some(u) = h.basis().representatives.get(&q).and_then(|r| r.first()) {
                let mut w = relative.clone();
                w.axpy(&field.one(), u);
                prop_assert!(homologous_decomposition(&w, &h).unwrap().is_none());
            }
        }
    }
}

#[test]
fn interval_relative_to_endpoints() {
    let g = Grid::flat(1, 1);
    let n = g.closure(&[Cube::top(&[0])]);
    let l: CubeSet = [Cube::vertex(&[0]), Cube::vertex(&[1])].into_iter().collect();
    let h = relative_homology(&CubePair { grid: g, n, l }, Q);
    assert_eq!(nonzero(&h.dims()), BTreeMap::from([(1, 1)]));
}

#[test]
fn annulus_has_one_loop() {
    let g = Grid::flat(2, 1);
    let tops: Vec<Cube> = g
        .box_tops(&[0, 0], &[3, 3])
        .into_iter()
        .filter(|c| c.base() != [1, 1])
        .collect();
    let p = CubePair {
        grid: g,
        n: g.closure(&tops),
        l: CubeSet::new(),
    };
    for field in [Field::Rational, Field::Prime(2)] {
        let h = relative_homology(&p, field);
        assert_eq!(nonzero(&h.dims()), BTreeMap::from([(0, 1), (1, 1)]));
        assert_eq!(
            nonzero(&dense_homology_dims(&p, field)),
            BTreeMap::from([(0, 1), (1, 1)])
        );
    }
}
