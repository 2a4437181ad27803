//! Numerical kernel for variable-exponent Lebesgue spaces L^p(.) on [0,1].

pub mod analysis;
pub mod error;
pub mod exponent;
pub mod families;
pub mod func;
pub mod measure;
pub mod modular;
pub mod norms;
pub mod parse;
mod quad;
pub mod runner;

pub use error::{Error, Result};
pub use exponent::{shuffle_exponent, Exponent, KozvReport, SpikedExponent};
pub use func::{truncate_to_level, Func, LocalPiece, Poly, SupNorm};
pub use measure::{Interval, MeasSet};
pub use modular::{
    integral_abs, integral_abs_product, integral_product, modular, modular_scaled,
    DivergenceWitness, ModularResult, QuadConfig,
};
pub use analysis::{
    closedness_constants, direct_sum_check, extension_bound, linfty_separation_check,
    proximinality_check, separation_delta, ClosednessReport, ClosednessVerdict, DirectSumReport,
    ExtensionReport, FunctionalSpec, LinftyReport, ProximinalityReport, SeparationReport,
};
pub use norms::{
    distance_to_e, holder_check, luxemburg_norm, orlicz_norm, theta, DistanceTrace, HolderCheck,
    NormResult,
};
pub use parse::{parse_exponent, parse_func};
pub use runner::{
    emit_plot_data, run_experiment, ExperimentConfig, OpSpec, PlotSeries, Provenance,
    ReportBundle, ReportRow, Verdict,
};
