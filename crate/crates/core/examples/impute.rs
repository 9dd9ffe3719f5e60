//! Fills missing responses with a conditional mode, either the
//! highest-density one or a density-proportional random draw.

use modalms::simulate::{apply_missingness, gen_scenario, ScenarioSpec};
use modalms::{impute_random_draw, impute_single, Bandwidths, MeanShiftConfig, MissingModel, Provenance, SeedStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::scenario1(0.5, 200)?;
    let complete = gen_scenario(&spec, SeedStream::new(3));
    let masked = apply_missingness(&complete, MissingModel::M2, SeedStream::new(4));
    let bw = Bandwidths::new(0.08, 0.4)?;
    let cfg = MeanShiftConfig::default();

    let single = impute_single(&masked, bw, &cfg)?;
    let drawn = impute_random_draw(&masked, bw, &cfg, SeedStream::new(5))?;

    println!("{:>4} {:>7} {:>8} {:>8} {:>8}", "row", "x", "truth", "argmax", "draw");
    let missing = (0..masked.len()).filter(|&i| single.provenance[i] == Provenance::Imputed);
    for i in missing.take(12) {
        println!(
            "{i:>4} {:7.3} {:8.3} {:8.3} {:8.3}",
            masked.x(i)[0],
            complete.y(i).unwrap(),
            single.filled_y[i],
            drawn.filled_y[i]
        );
    }
    Ok(())
}
