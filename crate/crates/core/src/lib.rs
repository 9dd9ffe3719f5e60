//! Kernel mean-shift modal regression for samples whose response is missing
//! at random.
//!
//! The conditional mode set of `Y | X = x` is estimated by running a
//! conditional mean-shift ascent on a weighted Gaussian product-kernel
//! estimate of the joint density of `(X, Y)`. Five estimators share that
//! engine:
//!
//! * **C**: complete data, unit weights;
//! * **S**: rows with an observed response only (`w = δ`);
//! * **W**: inverse probability weighting (`w = δ / p(x)`);
//! * **SI**: single imputation by the highest-density conditional mode;
//! * **MI**: multiple imputation with randomized modal draws and a
//!   pooled-KDE combination of the resulting modal sets.
//!
//! Bandwidths can be selected by an IPW leave-one-out cross-validation
//! criterion, modal sets are compared by Hausdorff distance, and
//! [`simulate`] contains a seeded Monte Carlo harness for the benchmark
//! scenarios.
//!
//! Every major capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release --example fit_modal_curve
//! ```

pub mod bandwidth;
pub mod cli;
pub mod dataset;
pub mod imputation;
pub mod kernel_density;
pub mod meanshift;
pub mod metrics;
pub mod missing;
pub mod rng;
pub mod simulate;

mod stats;

pub use bandwidth::{
    cv_score, select_bandwidths, BandwidthError, BandwidthGrid, CovariateWeight, CvScore, ScoreRow,
    ScoreTable,
};
pub use dataset::{load_dataset, observed_fraction, ColumnSpec, Dataset, DatasetError, Sample};
pub use imputation::{
    combine_modal_sets, draw_proportional, impute_random_draw, impute_single,
    multiple_imputation_curve, ImputationError, ImputedDataset, PoolConfig, PooledModes, Provenance,
};
pub use kernel_density::{
    conditional_density, density_y_gradient, gaussian_kernel, joint_density, Bandwidths,
    CovariateSlice, KdeError, WeightVector,
};
pub use meanshift::{
    ascend, equispaced_mesh, mean_shift_step, modal_curve, modal_set, starting_points, Ascent,
    MeanShiftConfig, MeanShiftError, ModalCurve, ModalSet, StartRange, Tolerance, STATIONARITY,
};
pub use metrics::{ase, dist_point_set, hausdorff, AseReport, FiniteSet, MetricError};
pub use missing::{
    fit_propensity_kernel, fit_propensity_logistic, weights_for, EstimatorKind, MissingModel,
    Propensity, PropensityError, PropensityModel,
};
pub use rng::SeedStream;
