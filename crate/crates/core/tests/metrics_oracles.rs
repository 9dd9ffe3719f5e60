mod common;

use modalms::{ase, dist_point_set, equispaced_mesh, hausdorff, FiniteSet, ModalCurve, ModalSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(v: &[f64]) -> FiniteSet {
    FiniteSet::new(v.to_vec()).unwrap()
}

fn curve(mesh: &[Vec<f64>], branches: impl Fn(f64) -> Vec<f64>) -> ModalCurve {
    let sets = mesh
        .iter()
        .map(|x| {
            let modes = branches(x[0]);
            let densities = vec![1.0; modes.len()];
            ModalSet { x: x.clone(), modes, densities }
        })
        .collect();
    ModalCurve { mesh: mesh.to_vec(), sets }
}

fn finite_set() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..8)
}

#[test]
fn hausdorff_matches_pairwise_scan_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let la = rng.random_range(1..12);
        let lb = rng.random_range(1..12);
        let a: Vec<f64> = (0..la).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..lb).map(|_| rng.random_range(-5.0..5.0)).collect();
        assert_eq!(hausdorff(&set(&a), &set(&b)), common::brute_hausdorff(&a, &b));
        let probe = rng.random_range(-6.0..6.0);
        assert_eq!(dist_point_set(probe, &set(&a)), common::brute_point_set(probe, &a));
    }
}

#[test]
fn small_cases() {
    assert_eq!(dist_point_set(2.0, &set(&[0.0, 3.0])), 1.0);
    assert_eq!(dist_point_set(3.0, &set(&[0.0, 3.0])), 0.0);
    assert_eq!(hausdorff(&set(&[0.0]), &set(&[1.0])), 1.0);
    assert_eq!(hausdorff(&set(&[0.0, 2.0]), &set(&[1.0])), 1.0);
    assert!(FiniteSet::new(vec![]).is_err());
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric(a in finite_set(), b in finite_set(), c in finite_set()) {
        let (sa, sb, sc) = (set(&a), set(&b), set(&c));
        let ab = hausdorff(&sa, &sb);
        prop_assert_eq!(ab, hausdorff(&sb, &sa));
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(hausdorff(&sa, &sa), 0.0);
        prop_assert!(ab <= hausdorff(&sa, &sc) + hausdorff(&sc, &sb) + 1e-12);
        let equal = sa.values() == sb.values();
        prop_assert_eq!(ab == 0.0, equal);
    }

    #[test]
    fn ase_vanishes_only_on_agreement(offset in -1.0f64..1.0, m in 1usize..30) {
        let mesh = equispaced_mesh(m, 0.0, 1.0);
        let truth = curve(&mesh, |x| vec![x, x + 2.0]);
        let est = curve(&mesh, |x| vec![x + offset, x + 2.0]);
        let r = ase(&est, &truth, 1.0 / m as f64, 5.0).unwrap();
        prop_assert!(r.value >= 0.0);
        prop_assert_eq!(r.value == 0.0, offset == 0.0);
        prop_assert_eq!(ase(&truth, &truth, 1.0 / m as f64, 5.0).unwrap().value, 0.0);
    }
}

#[test]
fn constant_offset_gives_its_square() {
    let m = 200;
    let mesh = equispaced_mesh(m, 0.0, 1.0);
    let truth = curve(&mesh, |x| vec![(3.0 * x).sin()]);
    let est = curve(&mesh, |x| vec![(3.0 * x).sin() + 0.25]);
    let r = ase(&est, &truth, 1.0 / m as f64, 10.0).unwrap();
    assert!((r.value - 0.0625).abs() < 1e-12);
    assert_eq!(r.empty_points, 0);
}

#[test]
fn one_recovered_branch_pays_the_distance_to_the_other() {
    let m = 50;
    let delta = 1.0 / m as f64;
    let mesh = equispaced_mesh(m, 0.0, 1.0);
    let truth = curve(&mesh, |x| vec![x - 1.5, x + 1.5]);
    let est = curve(&mesh, |x| vec![x + 1.4]);
    let r = ase(&est, &truth, delta, 10.0).unwrap();
    let oracle: f64 = mesh
        .iter()
        .map(|x| common::brute_hausdorff(&[x[0] + 1.4], &[x[0] - 1.5, x[0] + 1.5]).powi(2) * delta)
        .sum();
    assert!((r.value - oracle).abs() < 1e-12);
    assert!((r.value - 2.9f64.powi(2)).abs() < 1e-9);
}

#[test]
fn empty_estimates_are_charged_and_counted() {
    let mesh = equispaced_mesh(4, 0.0, 1.0);
    let truth = curve(&mesh, |_| vec![0.0]);
    let mut est = curve(&mesh, |_| vec![0.0]);
    est.sets[1] = ModalSet::empty(mesh[1].clone());
    let r = ase(&est, &truth, 0.25, 6.0).unwrap();
    assert_eq!(r.empty_points, 1);
    assert!((r.value - 9.0).abs() < 1e-12);
}

#[test]
fn misaligned_meshes_are_rejected() {
    let truth = curve(&equispaced_mesh(4, 0.0, 1.0), |_| vec![0.0]);
    let est = curve(&equispaced_mesh(5, 0.0, 1.0), |_| vec![0.0]);
    assert!(ase(&est, &truth, 0.25, 1.0).is_err());
    let shifted = curve(&equispaced_mesh(4, 0.1, 1.0), |_| vec![0.0]);
    assert!(ase(&shifted, &truth, 0.25, 1.0).is_err());
    assert!(ase(&truth, &truth, 0.0, 1.0).is_err());
}
