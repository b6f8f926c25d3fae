//! Initial product states, partial trace over the bath and negativity traces.

use nalgebra::{DMatrix, Matrix4};
use rayon::prelude::*;
use serde::Serialize;

use super::hamiltonian::DriftMatrix;
use super::propagate::{evolve, EvolutionConfig, Integrator, Propagator};
use crate::bath::DiscreteBath;
use crate::error::{Error, Result};
use crate::gaussian::{basis_change, log_negativity, CovarianceMatrix, ModeOrdering, NormalMoments};

fn physical_system(system: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    match system.ordering() {
        ModeOrdering::Physical => Ok(system.clone()),
        ModeOrdering::Normal => basis_change(system, ModeOrdering::Normal, ModeOrdering::Physical),
        other => Err(Error::Ordering {
            expected: "Physical or Normal".into(),
            got: format!("{other:?}"),
        }),
    }
}

/// Direct sum of the system state and the thermal bath state (Full ordering).
pub fn initial_covariance(system: &CovarianceMatrix, bath: &DiscreteBath) -> Result<CovarianceMatrix> {
    let sys = physical_system(system)?;
    let n = bath.len();
    let mut m = DMatrix::zeros(4 + 2 * n, 4 + 2 * n);
    m.view_mut((0, 0), (4, 4)).copy_from(sys.entries());
    for (k, (q, p)) in bath.thermal_variances().into_iter().enumerate() {
        m[(4 + 2 * k, 4 + 2 * k)] = q;
        m[(5 + 2 * k, 5 + 2 * k)] = p;
    }
    Ok(CovarianceMatrix::from_parts(m, ModeOrdering::Full { bath_modes: n }))
}

/// Gaussian partial trace: the leading 4x4 block, validated as a physical state.
pub fn reduce_to_system(v: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if !matches!(v.ordering(), ModeOrdering::Full { .. }) {
        return Err(Error::Ordering {
            expected: "Full".into(),
            got: format!("{:?}", v.ordering()),
        });
    }
    CovarianceMatrix::new(v.entries().view((0, 0), (4, 4)).into_owned(), ModeOrdering::Physical)
}

/// `S_s V_sys S_sᵀ + Σ_k (δq_k² c_q c_qᵀ + δπ_k² c_π c_πᵀ)` from the 4 x dim system rows of `S(t)`.
pub fn reduced_from_rows(rows: &DMatrix<f64>, system0: &Matrix4<f64>, bath_variances: &[(f64, f64)]) -> DMatrix<f64> {
    let s = rows.columns(0, 4);
    let mut v = s * system0 * s.transpose();
    for (k, &(q, p)) in bath_variances.iter().enumerate() {
        let cq = rows.column(4 + 2 * k);
        let cp = rows.column(5 + 2 * k);
        v.ger(q, &cq, &cq, 1.0);
        v.ger(p, &cp, &cp, 1.0);
    }
    (&v + v.transpose()) * 0.5
}

/// One sample of a negativity trace; moments are in Normal ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub log_negativity: f64,
    pub moments: NormalMoments,
}

impl TraceRow {
    pub fn from_state(t: f64, state: &CovarianceMatrix) -> Result<Self> {
        Ok(Self {
            t,
            log_negativity: log_negativity(state)?,
            moments: NormalMoments::of(state)?,
        })
    }
}

/// Reduced system dynamics for a factorized initial state, evaluated directly
/// from the system rows of `S(t)` without forming the full covariance.
#[derive(Debug, Clone)]
pub struct ReducedDynamics {
    propagator: Propagator,
    system0: Matrix4<f64>,
    bath_variances: Vec<(f64, f64)>,
}

impl ReducedDynamics {
    pub fn new(system: &CovarianceMatrix, model: &DriftMatrix, bath: &DiscreteBath) -> Result<Self> {
        Self::with_propagator(system, Propagator::new(model)?, bath)
    }

    /// Reuses one decomposition for several initial states or temperatures.
    pub fn with_propagator(system: &CovarianceMatrix, propagator: Propagator, bath: &DiscreteBath) -> Result<Self> {
        if propagator.dim() != 4 + 2 * bath.len() {
            return Err(Error::Dimension {
                expected: 4 + 2 * bath.len(),
                got: propagator.dim(),
            });
        }
        let sys = physical_system(system)?;
        Ok(Self {
            propagator,
            system0: sys.as_matrix4()?,
            bath_variances: bath.thermal_variances(),
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn initial_full(&self) -> CovarianceMatrix {
        let n = self.bath_variances.len();
        let mut m = DMatrix::zeros(4 + 2 * n, 4 + 2 * n);
        m.view_mut((0, 0), (4, 4)).copy_from(&self.system0);
        for (k, &(q, p)) in self.bath_variances.iter().enumerate() {
            m[(4 + 2 * k, 4 + 2 * k)] = q;
            m[(5 + 2 * k, 5 + 2 * k)] = p;
        }
        CovarianceMatrix::from_parts(m, ModeOrdering::Full { bath_modes: n })
    }

    /// Reduced covariance at time `t` (Physical ordering), validated as physical.
    pub fn state_at(&self, t: f64) -> Result<CovarianceMatrix> {
        let v = reduced_from_rows(&self.propagator.system_rows(t), &self.system0, &self.bath_variances);
        CovarianceMatrix::new(v, ModeOrdering::Physical).map_err(|e| match e {
            Error::Unphysical(nu) => Error::Numerical(format!("reduced state at t = {t} is unphysical (ν_min = {nu})")),
            other => other,
        })
    }

    /// Samples evaluated in parallel; output order follows `times`.
    pub fn rows(&self, times: &[f64]) -> Result<Vec<TraceRow>> {
        times
            .par_iter()
            .map(|&t| TraceRow::from_state(t, &self.state_at(t)?))
            .collect()
    }

    pub fn states(&self, times: &[f64]) -> Result<Vec<CovarianceMatrix>> {
        times.par_iter().map(|&t| self.state_at(t)).collect()
    }
}

/// `(t, E_N, Δx+², Δp+², δx−², δp−², <{x+,p+}>)` samples of the exact dynamics.
pub fn negativity_trace(
    system_state: &CovarianceMatrix,
    model: &DriftMatrix,
    bath: &DiscreteBath,
    cfg: &EvolutionConfig,
) -> Result<Vec<TraceRow>> {
    cfg.validate(model)?;
    match cfg.integrator {
        Integrator::NormalMode => ReducedDynamics::new(system_state, model, bath)?.rows(&cfg.sample_times()),
        Integrator::Rk4 => {
            let v0 = initial_covariance(system_state, bath)?;
            evolve(&v0, model, cfg)?
                .iter()
                .map(|(t, v)| TraceRow::from_state(*t, &reduce_to_system(v)?))
                .collect()
        }
    }
}
