//! Fixtures shared by the acceptance suite in `tests/acceptance.rs`.
//!
//! Run it with `cargo test -p wrw-validation --test acceptance`; pass a
//! criterion number or a name fragment to run a subset.

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wrw_bench::ScenarioConfig;
use wrw_core::Matrix;

/// Directory of the checked-in benchmark scenarios.
pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../bench/scenarios")
}

/// Loads a checked-in scenario by file name; panics with the path on error.
pub fn scenario(name: &str) -> ScenarioConfig {
    let path = scenario_dir().join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Entries uniform in `(-scale, scale)`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix<f64> {
    let entries: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_row_slice(rows, cols, &entries).expect("entry count matches shape")
}

/// `B Bᵀ + δI` with `δ ∈ [1e-3, 1)`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    let b = random_matrix(rng, n, n, 1.0);
    let mut s = &b * &b.transpose();
    let lift = rng.random_range(1e-3..1.0);
    for i in 0..n {
        s[(i, i)] += lift;
    }
    s.symmetrize()
}
