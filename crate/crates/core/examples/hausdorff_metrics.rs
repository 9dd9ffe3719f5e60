//! Distances between finite mode sets.

use modalms::{dist_point_set, hausdorff, FiniteSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = FiniteSet::new(vec![-1.5, 1.5])?;
    let candidates = [vec![-1.4, 1.6], vec![-1.5], vec![-1.5, 0.1, 1.5], vec![1.5, -1.5]];
    for c in candidates {
        let est = FiniteSet::new(c)?;
        println!("{:?} vs {:?}: Hausdorff {:.3}", est.values(), truth.values(), hausdorff(&est, &truth));
    }
    println!("distance from 0.4 to {:?}: {:.3}", truth.values(), dist_point_set(0.4, &truth));
    Ok(())
}
