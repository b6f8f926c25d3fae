//! Second-moment equations of the damped `x+` mode with given master-equation
//! coefficients, and free evolution of the `x−` mode.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{free_rotation, AsymptoticCoefficients};
use crate::error::{Error, Result};
use crate::exact::hamiltonian::CouplingModel;
use crate::exact::propagate::EvolutionConfig;
use crate::gaussian::{basis_change, log_negativity, CovarianceMatrix, ModeOrdering, NormalMoments};

/// `dt ≤ 0.01 / max(Ω, γ)`.
pub const MOMENT_STEP_FACTOR: f64 = 0.01;
const DET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientSchedule {
    Constant(AsymptoticCoefficients),
    /// Linear interpolation on a strictly increasing grid, clamped at both ends.
    Tabulated {
        times: Vec<f64>,
        values: Vec<AsymptoticCoefficients>,
    },
}

impl CoefficientSchedule {
    pub fn tabulated(times: Vec<f64>, values: Vec<AsymptoticCoefficients>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::param(
                "schedule",
                format!("needs matching nonempty grids, got {} times and {} values", times.len(), values.len()),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("schedule.times", "must be strictly increasing"));
        }
        let same_model = values
            .windows(2)
            .all(|w| std::mem::discriminant(&w[0]) == std::mem::discriminant(&w[1]));
        if !same_model {
            return Err(Error::param("schedule.values", "mixes position and symmetric coefficients"));
        }
        Ok(CoefficientSchedule::Tabulated { times, values })
    }

    pub fn at(&self, t: f64) -> AsymptoticCoefficients {
        match self {
            CoefficientSchedule::Constant(c) => *c,
            CoefficientSchedule::Tabulated { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                lerp(&values[i], &values[i + 1], w)
            }
        }
    }

    /// Largest damping rate on the schedule, used for the step bound.
    pub fn max_gamma(&self) -> f64 {
        match self {
            CoefficientSchedule::Constant(c) => c.gamma().abs(),
            CoefficientSchedule::Tabulated { values, .. } => values.iter().map(|c| c.gamma().abs()).fold(0.0, f64::max),
        }
    }

    fn model(&self) -> CouplingModel {
        let c = match self {
            CoefficientSchedule::Constant(c) => c,
            CoefficientSchedule::Tabulated { values, .. } => &values[0],
        };
        match c {
            AsymptoticCoefficients::Position { .. } => CouplingModel::Position,
            AsymptoticCoefficients::Symmetric { .. } => CouplingModel::Symmetric,
        }
    }
}

fn lerp(a: &AsymptoticCoefficients, b: &AsymptoticCoefficients, w: f64) -> AsymptoticCoefficients {
    let l = |x: f64, y: f64| x + w * (y - x);
    match (*a, *b) {
        (
            AsymptoticCoefficients::Position { gamma: g1, d: d1, f: f1 },
            AsymptoticCoefficients::Position { gamma: g2, d: d2, f: f2 },
        ) => AsymptoticCoefficients::Position {
            gamma: l(g1, g2),
            d: l(d1, d2),
            f: l(f1, f2),
        },
        (AsymptoticCoefficients::Symmetric { gamma: g1, d: d1 }, AsymptoticCoefficients::Symmetric { gamma: g2, d: d2 }) => {
            AsymptoticCoefficients::Symmetric {
                gamma: l(g1, g2),
                d: l(d1, d2),
            }
        }
        _ => unreachable!("schedules are validated to a single model"),
    }
}

/// `(⟨x²⟩, ⟨p²⟩, ⟨{x,p}⟩)` of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBlock {
    pub x2: f64,
    pub p2: f64,
    pub xp: f64,
}

impl MomentBlock {
    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self {
            x2: m[(0, 0)],
            p2: m[(1, 1)],
            xp: m[(0, 1)] + m[(1, 0)],
        }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.x2, 0.5 * self.xp, 0.5 * self.xp, self.p2)
    }

    /// `⟨x²⟩⟨p²⟩ − ⟨{x,p}⟩²/4`, at least 1/4 for a physical state.
    pub fn det(&self) -> f64 {
        self.x2 * self.p2 - 0.25 * self.xp * self.xp
    }

    fn axpy(&self, a: f64, d: &MomentBlock) -> MomentBlock {
        MomentBlock {
            x2: self.x2 + a * d.x2,
            p2: self.p2 + a * d.p2,
            xp: self.xp + a * d.xp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub plus: MomentBlock,
    pub minus: MomentBlock,
    pub t: f64,
}

impl MomentState {
    /// Diagonal blocks of a two-mode state; the plus/minus cross block is dropped.
    pub fn from_covariance(v: &CovarianceMatrix, t: f64) -> Result<Self> {
        let n = NormalMoments::of(v)?;
        Ok(Self {
            plus: MomentBlock {
                x2: n.dx_plus2,
                p2: n.dp_plus2,
                xp: n.xp_plus,
            },
            minus: MomentBlock {
                x2: n.dx_minus2,
                p2: n.dp_minus2,
                xp: n.xp_minus,
            },
            t,
        })
    }

    pub fn moments(&self) -> NormalMoments {
        NormalMoments {
            dx_plus2: self.plus.x2,
            dp_plus2: self.plus.p2,
            xp_plus: self.plus.xp,
            dx_minus2: self.minus.x2,
            dp_minus2: self.minus.p2,
            xp_minus: self.minus.xp,
        }
    }
}

/// Time derivative of the plus block for the position-coupling equations.
pub fn position_rhs(b: &MomentBlock, c: &AsymptoticCoefficients, mass: f64, omega: f64) -> Result<MomentBlock> {
    let AsymptoticCoefficients::Position { gamma, d, f } = *c else {
        return Err(Error::param("schedule", "position model needs γ, D, f coefficients"));
    };
    let k = mass * omega * omega;
    Ok(MomentBlock {
        x2: b.xp / mass,
        p2: -k * b.xp - 4.0 * gamma * b.p2 + 2.0 * d,
        xp: 2.0 * b.p2 / mass - 2.0 * k * b.x2 - 2.0 * gamma * b.xp - 2.0 * f,
    })
}

/// Time derivative of the plus block for the symmetric-coupling equations.
pub fn symmetric_rhs(b: &MomentBlock, c: &AsymptoticCoefficients, mass: f64, omega: f64) -> Result<MomentBlock> {
    let AsymptoticCoefficients::Symmetric { gamma, d } = *c else {
        return Err(Error::param("schedule", "symmetric model needs γ̃, D̃ coefficients"));
    };
    let k = mass * omega * omega;
    Ok(MomentBlock {
        x2: b.xp / mass - 4.0 * gamma * b.x2 + 2.0 * d / (k * mass),
        p2: -k * b.xp - 4.0 * gamma * b.p2 + 2.0 * d,
        xp: 2.0 * b.p2 / mass - 2.0 * k * b.x2 - 4.0 * gamma * b.xp,
    })
}

type Rhs = fn(&MomentBlock, &AsymptoticCoefficients, f64, f64) -> Result<MomentBlock>;

fn step(
    rhs: Rhs,
    block: &MomentBlock,
    t: f64,
    coeffs: &CoefficientSchedule,
    mass: f64,
    omega: f64,
    dt: f64,
) -> Result<MomentBlock> {
    let bound = MOMENT_STEP_FACTOR / omega.max(coeffs.max_gamma());
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let (c0, ch, c1) = (coeffs.at(t), coeffs.at(t + 0.5 * dt), coeffs.at(t + dt));
    let k1 = rhs(block, &c0, mass, omega)?;
    let k2 = rhs(&block.axpy(0.5 * dt, &k1), &ch, mass, omega)?;
    let k3 = rhs(&block.axpy(0.5 * dt, &k2), &ch, mass, omega)?;
    let k4 = rhs(&block.axpy(dt, &k3), &c1, mass, omega)?;
    let next = MomentBlock {
        x2: block.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
        p2: block.p2 + dt / 6.0 * (k1.p2 + 2.0 * k2.p2 + 2.0 * k3.p2 + k4.p2),
        xp: block.xp + dt / 6.0 * (k1.xp + 2.0 * k2.xp + 2.0 * k3.xp + k4.xp),
    };
    let det = next.det();
    if !(det >= 0.25 - DET_TOL) || !(next.x2 > 0.0) {
        return Err(Error::Numerical(format!(
            "plus-mode moments unphysical at t = {}: ⟨x²⟩⟨p²⟩ − ⟨{{x,p}}⟩²/4 = {det}",
            t + dt
        )));
    }
    Ok(next)
}

/// One RK4 step of the position-coupling plus-mode moments.
pub fn step_position_model(
    state: &MomentState,
    coeffs: &CoefficientSchedule,
    mass: f64,
    omega: f64,
    dt: f64,
) -> Result<MomentState> {
    let plus = step(position_rhs, &state.plus, state.t, coeffs, mass, omega, dt)?;
    Ok(MomentState { plus, t: state.t + dt, ..*state })
}

/// One RK4 step of the symmetric-coupling plus-mode moments.
pub fn step_symmetric_model(
    state: &MomentState,
    coeffs: &CoefficientSchedule,
    mass: f64,
    omega: f64,
    dt: f64,
) -> Result<MomentState> {
    let plus = step(symmetric_rhs, &state.plus, state.t, coeffs, mass, omega, dt)?;
    Ok(MomentState { plus, t: state.t + dt, ..*state })
}

/// Free evolution of the minus block over `t`.
pub fn free_minus_evolution(minus: &MomentBlock, m_minus: f64, w_minus: f64, t: f64) -> MomentBlock {
    MomentBlock::from_matrix(&free_rotation(&minus.to_matrix(), m_minus, w_minus, t))
}

/// Log-negativity of the block-diagonal Normal-ordered state.
pub fn negativity_from_moments(state: &MomentState) -> Result<f64> {
    let n = CovarianceMatrix::from_normal_blocks(state.plus.to_matrix(), state.minus.to_matrix())?;
    log_negativity(&basis_change(&n, ModeOrdering::Normal, ModeOrdering::Physical)?)
}

/// Integrates the plus block on the sample grid of `cfg` (its `integrator`
/// field is ignored) and rotates the minus block freely from `initial`.
pub fn integrate(
    initial: &MomentState,
    coeffs: &CoefficientSchedule,
    plus_mode: (f64, f64),
    minus_mode: (f64, f64),
    cfg: &EvolutionConfig,
) -> Result<Vec<MomentState>> {
    if !(cfg.t_max > 0.0) || cfg.sample_stride == 0 {
        return Err(Error::param("evolution", "t_max must be positive and sample_stride at least 1"));
    }
    let (mass, omega) = plus_mode;
    let stepper = match coeffs.model() {
        CouplingModel::Position => step_position_model,
        CouplingModel::Symmetric => step_symmetric_model,
    };
    let t0 = initial.t;
    let steps = cfg.steps();
    let mut out = Vec::with_capacity(steps / cfg.sample_stride + 1);
    let mut state = *initial;
    for i in 0..=steps {
        if i % cfg.sample_stride == 0 {
            let minus = free_minus_evolution(&initial.minus, minus_mode.0, minus_mode.1, state.t - t0);
            out.push(MomentState { minus, ..state });
        }
        if i < steps {
            state = stepper(&state, coeffs, mass, omega, cfg.dt)?;
            // keep sample times identical to the exact engine's i·dt grid
            state.t = t0 + (i + 1) as f64 * cfg.dt;
        }
    }
    Ok(out)
}
