//! Shared fixtures for the engine benchmarks.

use nalgebra::DMatrix;
use qbm_core::bath::{DiscreteBath, SpectralDensity};
use qbm_core::exact::{build_position_model, DriftMatrix, OscillatorParams};
use qbm_core::gaussian::separable_squeezed;
use qbm_core::CovarianceMatrix;

/// Ohmic bath with the default parameters (γ0 = 0.1, Λ = 20, m = Ω = 1).
pub fn ohmic_bath(modes: usize) -> DiscreteBath {
    SpectralDensity::ohmic(0.1, 20.0, 1.0)
        .and_then(|sd| sd.discretize(modes))
        .expect("default spectral density is valid")
}

pub fn position_model(modes: usize) -> (DiscreteBath, DriftMatrix) {
    let bath = ohmic_bath(modes);
    let drift = build_position_model(&OscillatorParams::resonant(1.0, 1.0), &bath, true)
        .expect("renormalized ohmic model is stable");
    (bath, drift)
}

pub fn squeezed_system(r: f64) -> CovarianceMatrix {
    separable_squeezed(r, 1.0, 1.0).expect("valid squeezing")
}

/// Deterministic symmetric positive-definite `n × n` matrix.
pub fn spd(n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
    &a * a.transpose() + DMatrix::identity(n, n) * n as f64
}
