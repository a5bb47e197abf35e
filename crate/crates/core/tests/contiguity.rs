mod common;

use common::seeded;
use conley_core::algebra::Field;
use conley_core::contiguity::{check_solution, compose_halves, ContiguitySolution};
use conley_core::pipeline::{builtin, leray_factors, run_full, RunArtifacts, RunOptions, BUILTINS};
use proptest::prelude::*;
use rand::Rng;

fn coarse(name: &str) -> RunArtifacts {
    let mut c = builtin(name).unwrap();
    c.scale = 3;
    c.h = 0.125;
    c.cross_check = false;
    run_full(&c, &RunOptions::default()).unwrap()
}

fn combine(field: Field, l1: i64, s1: &ContiguitySolution, l2: i64, s2: &ContiguitySolution) -> ContiguitySolution {
    let (a, b) = (field.from_i64(l1), field.from_i64(l2));
    let mut c = s1.c.scaled(&a);
    c.axpy(&b, &s2.c);
    let mut d = s1.d.scaled(&a);
    d.axpy(&b, &s2.d);
    ContiguitySolution {
        degree: s1.degree,
        column: s1.column,
        coefficients: s1
            .coefficients
            .iter()
            .zip(&s2.coefficients)
            .map(|(x, y)| &(&a * x) + &(&b * y))
            .collect(),
        c,
        d,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Combining two witnesses of the same cycle with weights `λ₁, λ₂`
    /// witnesses `(λ₁ + λ₂)·u`.
    #[test]
    fn witnesses_combine_linearly(seed in any::<u64>(), which in 0usize..3) {
        let art = coarse(BUILTINS[which]);
        let run = art.contiguity.as_ref().unwrap();
        let mask = art.mask.as_ref().unwrap();
        let other = run.variant(&art.cov, seed).unwrap();
        let mut rng = seeded(seed);
        let (l1, l2) = (rng.gen_range(-3..=3), rng.gen_range(-3..=3));
        let field = art.field;
        for (q, reps) in &run.witness.basis {
            for (s1, s2) in run.witness.solutions[q].iter().zip(&other.solutions[q]) {
                let sol = combine(field, l1, s1, l2, s2);
                let source = reps[s1.column].scaled(&field.from_i64(l1 + l2));
                let r = check_solution(
                    &art.cov, field, &source, reps, (run.witness.from, run.witness.to), &sol,
                    &|c| mask.is_n_movable(c), &|c| mask.is_l_movable(c),
                );
                prop_assert!(r.is_ok(), "{:?}", r);
            }
        }
    }
}

#[test]
fn end_cycles_are_movable() {
    for name in BUILTINS {
        let art = coarse(name);
        let run = art.contiguity.as_ref().unwrap();
        let mask = art.mask.as_ref().unwrap();
        for reps in run.witness.basis.values() {
            for z in reps {
                for a in [0, art.cov.period] {
                    assert!(
                        z.support().all(|c| mask.is_n_movable(&art.cov.lift_section_cube(c, a))),
                        "{name}"
                    );
                }
            }
        }
    }
}

#[test]
fn distinct_solutions_give_one_index() {
    for name in BUILTINS {
        let art = coarse(name);
        let run = art.contiguity.as_ref().unwrap();
        let base = leray_factors(&run.witness.a).unwrap();
        let mut seen = vec![run.witness.solutions.clone()];
        for seed in 1..=5u64 {
            let w = run.variant(&art.cov, seed).unwrap();
            assert!(
                !seen.contains(&w.solutions),
                "{name}: variant {seed} repeats an earlier solution"
            );
            seen.push(w.solutions.clone());
            assert_eq!(leray_factors(&w.a).unwrap(), base, "{name}");
        }
    }
}

#[test]
fn half_period_solves_compose() {
    for name in BUILTINS {
        let art = coarse(name);
        let run = art.contiguity.as_ref().unwrap();
        let half = compose_halves(&art.cov, art.mask.as_ref().unwrap(), &run.basis, art.field).unwrap();
        assert_eq!(
            leray_factors(&half.product).unwrap(),
            leray_factors(&run.witness.a).unwrap(),
            "{name}"
        );
    }
}
