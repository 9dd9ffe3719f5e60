mod common;

use modalms::kernel_density::LOG_KERNEL_CUTOFF;
use modalms::{
    conditional_density, density_y_gradient, joint_density, Bandwidths, CovariateSlice, Dataset,
    MeanShiftConfig, WeightVector,
};
use proptest::prelude::*;

fn sample_data() -> Dataset {
    let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.618_033_988_7) % 1.0).collect();
    let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (6.0 * v).sin() + if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Dataset::from_xy(&x, &y).unwrap()
}

#[test]
fn joint_density_integrates_to_one() {
    let ds = sample_data();
    let w = WeightVector::ones(&ds).unwrap();
    let bw = Bandwidths::new(0.08, 0.3).unwrap();
    let inner = |x: f64| common::trapezoid(|y| joint_density(&ds, &w, bw, &[x], y).unwrap(), -5.0, 5.0, 800);
    let total = common::trapezoid(inner, -0.6, 1.6, 800);
    assert!((total - 1.0).abs() < 1e-3, "integral {total}");
}

#[test]
fn conditional_density_integrates_to_one() {
    let ds = sample_data();
    let w = WeightVector::ones(&ds).unwrap();
    let bw = Bandwidths::new(0.08, 0.3).unwrap();
    for k in 0..10 {
        let x = 0.05 + 0.09 * k as f64;
        let total = common::trapezoid(|y| conditional_density(&ds, &w, bw, &[x], y).unwrap(), -6.0, 6.0, 2000);
        assert!((total - 1.0).abs() < 1e-3, "x = {x}: {total}");
    }
}

#[test]
fn kernel_cutoff_does_not_move_modes() {
    let ds = sample_data();
    let w = WeightVector::ones(&ds).unwrap();
    let bw = Bandwidths::new(0.03, 0.2).unwrap();
    let cfg = MeanShiftConfig::default();
    for k in 0..20 {
        let x = [k as f64 / 19.0];
        let slice = CovariateSlice::new(&ds, &w, bw, &x).unwrap();
        for y0 in modalms::starting_points(&ds, &cfg) {
            // Same trajectory with and without the truncation.
            let (mut a, mut b) = (y0, y0);
            for _ in 0..cfg.max_iter {
                a = slice.mean_shift_target_with_cutoff(a, LOG_KERNEL_CUTOFF).unwrap();
                b = slice.mean_shift_target_with_cutoff(b, f64::INFINITY).unwrap();
            }
            assert!((a - b).abs() < 1e-8, "x = {x:?}, start {y0}: {a} vs {b}");
        }
    }
}

proptest! {
    #[test]
    fn gradient_matches_central_difference(
        ds in common::dataset(3..30, true),
        x in 0.0f64..1.0,
        y in -4.0f64..4.0,
        h1 in 0.05f64..0.5,
        h2 in 0.2f64..1.5,
    ) {
        let w = WeightVector::observed(&ds);
        let bw = Bandwidths::new(h1, h2).unwrap();
        let f = |v: f64| joint_density(&ds, &w, bw, &[x], v).unwrap();
        let e = 1e-5 * h2;
        let fd = (f(y + e) - f(y - e)) / (2.0 * e);
        let g = density_y_gradient(&ds, &w, bw, &[x], y).unwrap();
        let scale = g.abs().max(f(y) / h2).max(1e-300);
        prop_assert!((g - fd).abs() <= 1e-6 * scale, "g = {g}, fd = {fd}");
    }

    #[test]
    fn weight_scaling_changes_nothing(
        ds in common::dataset(2..25, true),
        x in 0.0f64..1.0,
        y in -4.0f64..4.0,
        c in 0.01f64..100.0,
    ) {
        let w = WeightVector::observed(&ds);
        let wc = w.scaled(c).unwrap();
        let bw = Bandwidths::new(0.2, 0.6).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        prop_assert!(close(joint_density(&ds, &w, bw, &[x], y).unwrap(), joint_density(&ds, &wc, bw, &[x], y).unwrap()));
        prop_assert!(close(
            conditional_density(&ds, &w, bw, &[x], y).unwrap(),
            conditional_density(&ds, &wc, bw, &[x], y).unwrap()
        ));
        prop_assert!(close(
            density_y_gradient(&ds, &w, bw, &[x], y).unwrap(),
            density_y_gradient(&ds, &wc, bw, &[x], y).unwrap()
        ));
    }

    #[test]
    fn density_positive_and_matches_direct_sum(
        ds in common::dataset(1..20, false),
        x in -0.5f64..1.5,
        y in -6.0f64..6.0,
    ) {
        let w = WeightVector::ones(&ds).unwrap();
        let bw = Bandwidths::new(0.3, 0.8).unwrap();
        let f = joint_density(&ds, &w, bw, &[x], y).unwrap();
        // Independent evaluation straight from the formula.
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let direct: f64 = (0..ds.len())
            .map(|i| phi((x - ds.x(i)[0]).abs() / 0.3) * phi((y - ds.y(i).unwrap()) / 0.8))
            .sum::<f64>() / (0.3 * 0.8 * ds.len() as f64);
        prop_assert!(f > 0.0);
        prop_assert!((f - direct).abs() <= 1e-12 * direct);
    }
}
