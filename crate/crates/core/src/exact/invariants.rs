//! Conservation checks for exact trajectories.

use nalgebra::DMatrix;
use serde::Serialize;

use super::hamiltonian::DriftMatrix;
use super::trace::ReducedDynamics;
use crate::error::Result;
use crate::gaussian::{symplectic_eigenvalues_cholesky, symplectic_form};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantTolerances {
    /// `‖S J Sᵀ − J‖∞`
    pub symplecticity: f64,
    /// Relative drift of every symplectic eigenvalue of the full state.
    pub purity: f64,
    /// Relative drift of `tr(H V)`.
    pub energy: f64,
    /// Allowed undershoot of the reduced `ν_min` below 1/2.
    pub physicality: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            symplecticity: 1e-8,
            purity: 1e-6,
            energy: 1e-6,
            physicality: 1e-9,
        }
    }
}

/// Worst values observed over the checked samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub symplecticity: f64,
    pub purity: f64,
    pub energy: f64,
    pub min_reduced_nu: f64,
    pub checkpoints: usize,
    pub samples: usize,
}

impl InvariantReport {
    pub fn passes(&self, tol: &InvariantTolerances) -> bool {
        self.symplecticity <= tol.symplecticity
            && self.purity <= tol.purity
            && self.energy <= tol.energy
            && self.min_reduced_nu >= 0.5 - tol.physicality
    }

    pub fn failures(&self, tol: &InvariantTolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.symplecticity > tol.symplecticity {
            out.push(format!("symplecticity {:.3e} > {:.0e}", self.symplecticity, tol.symplecticity));
        }
        if self.purity > tol.purity {
            out.push(format!("purity drift {:.3e} > {:.0e}", self.purity, tol.purity));
        }
        if self.energy > tol.energy {
            out.push(format!("energy drift {:.3e} > {:.0e}", self.energy, tol.energy));
        }
        if self.min_reduced_nu < 0.5 - tol.physicality {
            out.push(format!("reduced state unphysical, ν_min = {}", self.min_reduced_nu));
        }
        out
    }
}

/// Max row-sum norm of `S J Sᵀ − J`.
pub fn symplecticity_error(s: &DMatrix<f64>) -> f64 {
    let j = symplectic_form(s.nrows()).expect("even dimension");
    let d = s * &j * s.transpose() - j;
    d.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_relative_drift(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Checks symplecticity, full-state spectrum and energy at `checkpoints`, and
/// reduced-state physicality at every time in `samples`.
pub fn check_trajectory(
    model: &DriftMatrix,
    dynamics: &ReducedDynamics,
    checkpoints: &[f64],
    samples: &[f64],
) -> Result<InvariantReport> {
    let v0 = dynamics.initial_full();
    let spectrum0 = symplectic_eigenvalues_cholesky(v0.entries())?;
    let e0 = model.energy(v0.entries());
    let mut report = InvariantReport {
        symplecticity: 0.0,
        purity: 0.0,
        energy: 0.0,
        min_reduced_nu: f64::INFINITY,
        checkpoints: checkpoints.len(),
        samples: samples.len(),
    };
    for &t in checkpoints {
        let s = dynamics.propagator().symplectic_matrix(t);
        report.symplecticity = report.symplecticity.max(symplecticity_error(&s));
        let sv = &s * v0.entries();
        let v = sv * s.transpose();
        let v = (&v + v.transpose()) * 0.5;
        let spectrum = symplectic_eigenvalues_cholesky(&v)?;
        report.purity = report.purity.max(max_relative_drift(&spectrum0, &spectrum));
        let e = model.energy(&v);
        report.energy = report.energy.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
    }
    for state in dynamics.states(samples)? {
        report.min_reduced_nu = report.min_reduced_nu.min(state.symplectic_eigenvalues()[0]);
    }
    Ok(report)
}
