//! Bundled problem instances and their file formats.

mod bimatrix;
mod examples;
mod gan;
mod traffic;

pub use bimatrix::{
    bench_grid, bimatrix_textbook, generate_random_bimatrix, make_bimatrix, textbook_game, BimatrixGame, BENCH_GRID,
};
pub use examples::{
    closed_form_gap_example_1_2, closed_form_gap_gradient_example_1_2, example_1_2, example_1_3, example_4_1,
    monotone_control, monotone_control_unbounded, zero_map,
};
pub use gan::{make_toy_gan, toy_gan};
pub use traffic::{
    load_tep_network, make_nguyen_dupuis, nguyen_dupuis_network, CostPreset, OdPair, TrafficNetwork,
    NGUYEN_DUPUIS_TEP, PATH_CAP,
};

use crate::error::{Error, Result};
use crate::problem::VIProblem;

/// Names accepted by [`builtin`] without parameters.
pub const BUILTIN_NAMES: [&str; 9] = [
    "example1_2",
    "example1_3",
    "example4_1",
    "bimatrix_textbook",
    "nguyen_dupuis",
    "toy_gan",
    "monotone_control",
    "monotone_control_unbounded",
    "zero_map",
];

/// Builds an instance from `name[:param[:param...]]`.
///
/// Parameterized forms: `zero_map:DIM`, `toy_gan:OMEGA`,
/// `nguyen_dupuis:PRESET` (`uniform_ones`, `paper_middle`, `random:SEED`) and
/// `bimatrix_random:N1:N2:MAX:SEED`.
pub fn builtin(spec: &str) -> Result<VIProblem> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let bad = |what: &str| Error::BadParameters(format!("bad parameter for `{name}`: {what}"));
    let no_params = |p: VIProblem| {
        if params.is_empty() {
            Ok(p)
        } else {
            Err(Error::BadParameters(format!("`{name}` takes no parameters")))
        }
    };
    match name {
        "example1_2" => no_params(example_1_2()),
        "example1_3" => no_params(example_1_3()),
        "example4_1" => no_params(example_4_1()),
        "bimatrix_textbook" => no_params(bimatrix_textbook()),
        "monotone_control" => no_params(monotone_control()),
        "monotone_control_unbounded" => no_params(monotone_control_unbounded()),
        "zero_map" => {
            let dim = if params.is_empty() { 1 } else { params.parse().map_err(|_| bad(params))? };
            if dim == 0 {
                return Err(bad("dimension must be positive"));
            }
            Ok(zero_map(dim))
        }
        "toy_gan" => {
            let omega: f64 = if params.is_empty() { -2.0 } else { params.parse().map_err(|_| bad(params))? };
            if !omega.is_finite() {
                return Err(bad(params));
            }
            Ok(toy_gan(omega))
        }
        "nguyen_dupuis" => {
            let preset = if params.is_empty() { CostPreset::UniformOnes } else { params.parse()? };
            Ok(make_nguyen_dupuis(preset))
        }
        "bimatrix_random" => {
            let fields: Vec<&str> = params.split(':').collect();
            if fields.len() != 4 {
                return Err(bad("expected N1:N2:MAX:SEED"));
            }
            let n1 = fields[0].parse().map_err(|_| bad(fields[0]))?;
            let n2 = fields[1].parse().map_err(|_| bad(fields[1]))?;
            let max_entry = fields[2].parse().map_err(|_| bad(fields[2]))?;
            let seed = fields[3].parse().map_err(|_| bad(fields[3]))?;
            Ok(make_bimatrix(&generate_random_bimatrix(n1, n2, max_entry, seed)?).renamed(spec))
        }
        _ => Err(Error::BadParameters(format!("unknown problem `{spec}`"))),
    }
}
