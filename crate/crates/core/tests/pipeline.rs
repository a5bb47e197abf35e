use std::fs;
use std::path::PathBuf;

use conley_core::contiguity::{ContiguityWitness, WitnessViolation};
use conley_core::cubical::Chain;
use conley_core::pipeline::{
    builtin, decode, encode, load_state, run, run_full, save_state, verify_bundle, verify_loaded, BundleError,
    CrossCheck, PipelineError, RunArtifacts, RunConfig, RunOptions, Stage, StageCache, Verdict, BUILTINS,
};
use serde_json::json;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conley-pipeline-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn coarse(name: &str) -> RunConfig {
    let mut c = builtin(name).unwrap();
    c.scale = 3;
    c.h = 0.125;
    c
}

fn run_coarse(name: &str) -> RunArtifacts {
    run_full(&coarse(name), &RunOptions::default()).unwrap()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for name in BUILTINS {
        let c = coarse(name);
        let a = run_full(&c, &RunOptions::default()).unwrap().report.to_json_pretty();
        let b = run_full(&c, &RunOptions::default()).unwrap().report.to_json_pretty();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn coarse_builtins_give_the_expected_index() {
    for (name, degree, lambda) in [("attracting", 0, "1"), ("repelling", 1, "-1"), ("saddle", 1, "-1")] {
        let r = run_coarse(name).report;
        let factors = &r.leray.as_ref().unwrap().invariant_factors;
        assert_eq!(factors.len(), 1, "{name}: {factors:?}");
        assert_eq!(factors[&degree], vec!["x - 1".to_string()], "{name}");
        assert!(
            r.lefschetz.as_ref().unwrap().iter().all(|l| l == lambda),
            "{name}: {:?}",
            r.lefschetz
        );
        assert_eq!(r.verdict, Some(Verdict::FixedPointDetected));
        assert!(
            matches!(r.cross_check, CrossCheck::Matching { .. }),
            "{name}: {:?}",
            r.cross_check
        );
    }
}

#[test]
fn refinement_ladder_is_consistent() {
    for name in ["attracting", "repelling"] {
        let mut seen = Vec::new();
        for s in [3, 4, 5] {
            for h in [0.125, 0.0625] {
                let mut c = builtin(name).unwrap();
                c.scale = s;
                c.h = h;
                c.cross_check = false;
                let r = run(&c).unwrap();
                seen.push(r.leray.unwrap().invariant_factors);
            }
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{name}: {seen:?}");
    }
    let mut c = coarse("saddle");
    c.cross_check = false;
    let coarse_factors = run(&c).unwrap().leray.unwrap().invariant_factors;
    c.h = 0.0625;
    assert_eq!(run(&c).unwrap().leray.unwrap().invariant_factors, coarse_factors);
}

#[test]
fn prime_field_agrees_with_rationals() {
    for name in BUILTINS {
        let mut c = coarse(name);
        c.cross_check = false;
        let q = run(&c).unwrap();
        c.coefficients = "Z/2".into();
        let z2 = run(&c).unwrap();
        let dims = |r: &conley_core::pipeline::ConleyReport| r.leray.as_ref().unwrap().reduced_dims.clone();
        assert_eq!(dims(&q), dims(&z2), "{name}");
        assert_eq!(q.homology_dims, z2.homology_dims);
        // −1 = 1 mod 2.
        for fs in z2.leray.as_ref().unwrap().invariant_factors.values() {
            assert_eq!(fs, &vec!["x + 1".to_string()]);
        }
        assert_eq!(z2.verdict, Some(Verdict::NotOverRationals));
        assert!(z2.lefschetz.is_none());
    }
}

#[test]
fn bundles_round_trip_and_verify() {
    let dir = scratch("round-trip");
    for name in BUILTINS {
        let b = run_coarse(name).bundle().unwrap();
        let path = dir.join(format!("{name}.bundle"));
        save_state(&path, &b).unwrap();
        assert_eq!(load_state(&path).unwrap(), b);
        assert_eq!(decode(&encode(&b)).unwrap(), b);
        let v = verify_bundle(&path);
        assert!(v.pass, "{name}: {:?}", v.failures);
    }
}

#[test]
fn damaged_bundles_are_rejected() {
    let dir = scratch("damaged");
    let b = run_coarse("repelling").bundle().unwrap();
    let path = dir.join("b.bundle");
    save_state(&path, &b).unwrap();
    let text = fs::read_to_string(&path).unwrap();

    fs::write(&path, &text[..text.len() - 40]).unwrap();
    assert!(matches!(load_state(&path), Err(BundleError::Checksum(_))));
    assert!(!verify_bundle(&path).pass);

    let flipped = text.replacen("\"repelling\"", "\"repelline\"", 1);
    fs::write(&path, flipped).unwrap();
    assert!(matches!(load_state(&path), Err(BundleError::Checksum(_))));

    fs::write(&path, text.replacen(" v1 ", " v2 ", 1)).unwrap();
    let err = load_state(&path).unwrap_err();
    assert!(matches!(err, BundleError::Version { .. }));
    assert!(err.to_string().contains("conley run --save"), "{err}");
    assert_eq!(PipelineError::from(err).exit_code(), 4);

    fs::write(&path, "not a bundle\n{}").unwrap();
    assert!(matches!(load_state(&path), Err(BundleError::Malformed(_))));
    assert!(matches!(load_state(&dir.join("missing")), Err(BundleError::Io(_))));
}

#[test]
fn perturbed_chain_coefficient_breaks_the_identity() {
    let dir = scratch("perturbed");
    let mut hit = false;
    for name in BUILTINS {
        let art = run_coarse(name);
        let mut b = art.bundle().unwrap();
        let Some(sol) = b
            .witness
            .solutions
            .values_mut()
            .flatten()
            .find(|s| !s.c.terms.is_empty())
        else {
            continue;
        };
        hit = true;
        let c = Chain::from_json(&sol.c, art.field).unwrap();
        let (cube, _) = c.terms().next().unwrap();
        let faces = Chain::cube(*cube, art.field)
            .boundary(&art.cov.lifted_pair.grid, art.field)
            .support_set();
        sol.c.terms[0].1 = "1001/7".into();
        let path = dir.join(format!("{name}.bundle"));
        save_state(&path, &b).unwrap();
        let v = verify_bundle(&path);
        assert!(!v.pass);
        let named: Vec<_> = v
            .violations
            .iter()
            .filter_map(|x| match x {
                WitnessViolation::Identity { cube, .. } => Some(*cube),
                _ => None,
            })
            .collect();
        assert!(!named.is_empty(), "{name}: {:?} {:?}", v.violations, v.failures);
        assert!(
            named.iter().all(|c| faces.contains(c)),
            "{name}: {named:?} are not faces of {cube:?}"
        );
    }
    assert!(hit, "no witness with a nonzero c to perturb");
}

#[test]
fn d_outside_the_exit_set_is_caught() {
    for name in BUILTINS {
        let art = run_coarse(name);
        let mask = art.mask.as_ref().unwrap();
        let mut b = art.bundle().unwrap();
        let mut w = ContiguityWitness::from_json(&b.witness).unwrap();
        let (q, sols) = w.solutions.iter_mut().next().unwrap();
        let stray = *art
            .cov
            .lifted_pair
            .n
            .iter()
            .find(|c| c.dim() == *q && !mask.is_l_movable(c))
            .expect("a cube that is not L-movable");
        sols[0].d.add_term(stray, &art.field.one());
        b.witness = w.to_json();
        let v = verify_loaded(&b);
        assert!(!v.pass);
        assert!(
            v.violations
                .iter()
                .any(|x| matches!(x, WitnessViolation::DSupport { cube, .. } if *cube == stray)),
            "{name}: {:?}",
            v.violations
        );
    }
}

#[test]
fn cached_stages_reproduce_the_report() {
    let dir = scratch("cache");
    let opts = RunOptions {
        cache: Some(StageCache::new(&dir)),
    };
    let c = coarse("saddle");
    let cold = run_full(&c, &opts).unwrap();
    assert!(cold.instrumentation.cache_hits.is_empty());
    let warm = run_full(&c, &opts).unwrap();
    assert_eq!(
        warm.instrumentation.cache_hits,
        vec![Stage::OuterApproximation, Stage::Movability]
    );
    assert_eq!(warm.report.to_json_pretty(), cold.report.to_json_pretty());
    let plain = run_full(&c, &RunOptions::default()).unwrap();
    assert_eq!(plain.report.to_json_pretty(), cold.report.to_json_pretty());

    // A different config never reads another config's entries.
    let mut other = c.clone();
    other.h = 0.0625;
    assert!(run_full(&other, &opts).unwrap().instrumentation.cache_hits.is_empty());
}

#[test]
fn partial_mode_keeps_the_early_stages() {
    // A fast attracting rate on a coarse grid leaves no movable vertex.
    let mut c = builtin("attracting").unwrap();
    c.field[0] = json!({"op": "mul", "args": [-8.0, "x0", {"op": "ln2"}]});
    c.scale = 2;
    c.h = 0.25;
    c.cross_check = false;
    let err = run(&c).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert_eq!(err.stage(), Some(Stage::Contiguity));

    c.allow_partial = true;
    let r = run(&c).unwrap();
    let p = r.partial.as_ref().expect("partial failure recorded");
    assert_eq!(p.stage, "contiguity");
    assert!(r.mask.is_some() && r.leray.is_none() && r.verdict.is_none());
    assert!(r.homology_dims.values().any(|n| *n > 0));
}

#[test]
fn bad_configs_exit_with_four() {
    let mut cases = Vec::new();
    let mut c = builtin("repelling").unwrap();
    c.coefficients = "Z/6".into();
    cases.push(c);
    let mut c = builtin("repelling").unwrap();
    c.region = vec![(-1.0, 0.97)];
    cases.push(c);
    let mut c = builtin("repelling").unwrap();
    c.field[0] = json!({"op": "tan", "args": ["x0"]});
    cases.push(c);
    let mut c = builtin("repelling").unwrap();
    c.h = 0.0;
    cases.push(c);
    let mut c = builtin("saddle").unwrap();
    c.angular_axis = 7;
    cases.push(c);
    for c in cases {
        let e = run(&c).unwrap_err();
        assert!(matches!(e, PipelineError::Config(_)), "{e}");
        assert_eq!(e.exit_code(), 4);
    }
}

#[test]
fn stopped_rotation_needs_refinement() {
    let mut c = builtin("attracting").unwrap();
    c.field[1] = json!({"op": "mul", "args": [2.0, "x0"]});
    let e = run(&c).unwrap_err();
    assert_eq!((e.exit_code(), e.stage()), (2, Some(Stage::Rotation)), "{e}");
}
