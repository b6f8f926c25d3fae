//! Covariance propagation: fixed-step RK4 on the Lyapunov equation and the
//! normal-mode symplectic propagator `S(t) = exp(K t)`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::hamiltonian::DriftMatrix;
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeOrdering};

/// RK4 step bound in units of the inverse cutoff.
pub const STEP_FACTOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    NormalMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_stride: usize,
    pub integrator: Integrator,
}

impl EvolutionConfig {
    pub fn validate(&self, k: &DriftMatrix) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("evolution.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::param("evolution.t_max", format!("must be >= 0, got {}", self.t_max)));
        }
        if self.sample_stride == 0 {
            return Err(Error::param("evolution.sample_stride", "must be at least 1"));
        }
        let bound = STEP_FACTOR / k.frequency_scale();
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        if let Some(t_rec) = k.recurrence_time() {
            if self.t_max > crate::bath::RECURRENCE_FRACTION * t_rec {
                return Err(Error::RecurrenceWindow {
                    t_max: self.t_max,
                    t_rec,
                });
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    /// Recorded times `k · stride · dt` up to `t_max`.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.steps())
            .step_by(self.sample_stride)
            .map(|s| s as f64 * self.dt)
            .collect()
    }
}

/// One classic fourth-order step of `dV/dt = KV + VKᵀ`.
pub fn rk4_step(k: &DriftMatrix, v: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let k1 = k.lyapunov_rhs(v);
    let k2 = k.lyapunov_rhs(&(v + &k1 * (0.5 * dt)));
    let k3 = k.lyapunov_rhs(&(v + &k2 * (0.5 * dt)));
    let k4 = k.lyapunov_rhs(&(v + &k3 * dt));
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

#[derive(Debug, Clone)]
enum Kind {
    /// `x = P y`, `p = P' η` with `y'' = −ω² y`; `P = L Q`, `P' = L⁻ᵀ Q`, `T = L Lᵀ`, `LᵀWL = Q ω² Qᵀ`.
    NormalMode {
        p: DMatrix<f64>,
        pp: DMatrix<f64>,
        p_t: DMatrix<f64>,
        pp_t: DMatrix<f64>,
        omega: DVector<f64>,
    },
    /// Generic generator, exponentiated by scaling and squaring.
    Dense { k: DMatrix<f64> },
}

/// `S(t) = exp(K t)` for a time-independent quadratic Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    kind: Kind,
}

impl Propagator {
    /// Uses the normal-mode decomposition when `H` has no `x p` cross terms and
    /// a positive-definite kinetic block, and the dense exponential otherwise.
    pub fn new(k: &DriftMatrix) -> Result<Self> {
        let dim = k.dim();
        if let Some((w, t)) = k.position_momentum_blocks() {
            if let Some(chol) = Cholesky::new(t) {
                return Self::normal_mode(dim, w, chol);
            }
        }
        Ok(Self {
            dim,
            kind: Kind::Dense { k: k.to_dense() },
        })
    }

    fn normal_mode(dim: usize, w: DMatrix<f64>, chol: Cholesky<f64, nalgebra::Dyn>) -> Result<Self> {
        let l = chol.l();
        let b = l.transpose() * &w * &l;
        let b = (&b + b.transpose()) * 0.5;
        let scale = b.amax().max(f64::MIN_POSITIVE);
        let eig = SymmetricEigen::new(b);
        let mut omega = DVector::zeros(eig.eigenvalues.len());
        for (i, &w2) in eig.eigenvalues.iter().enumerate() {
            if w2 < -1e-12 * scale {
                return Err(Error::Unstable(format!("normal mode with ω² = {w2:.6e}")));
            }
            omega[i] = w2.max(0.0).sqrt();
        }
        let q = eig.eigenvectors;
        let p = &l * &q;
        let pp = l
            .transpose()
            .solve_upper_triangular(&q)
            .ok_or_else(|| Error::Numerical("singular kinetic Cholesky factor".into()))?;
        Ok(Self {
            dim,
            kind: Kind::NormalMode {
                p_t: p.transpose(),
                pp_t: pp.transpose(),
                p,
                pp,
                omega,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normal_mode(&self) -> bool {
        matches!(self.kind, Kind::NormalMode { .. })
    }

    /// Normal-mode frequencies, ascending.
    pub fn frequencies(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::NormalMode { omega, .. } => {
                let mut w: Vec<f64> = omega.iter().copied().collect();
                w.sort_by(f64::total_cmp);
                Some(w)
            }
            Kind::Dense { .. } => None,
        }
    }

    fn trig(omega: &DVector<f64>, t: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let c = omega.map(|w| (w * t).cos());
        let sn = omega.map(|w| if w > 0.0 { (w * t).sin() / w } else { t });
        let sp = omega.map(|w| w * (w * t).sin());
        (c, sn, sp)
    }

    /// Full `S(t)` in Full (interleaved) ordering.
    pub fn symplectic_matrix(&self, t: f64) -> DMatrix<f64> {
        match &self.kind {
            Kind::Dense { k } => expm(&(k * t)),
            Kind::NormalMode {
                p,
                pp,
                p_t,
                pp_t,
                omega,
            } => {
                let (c, sn, sp) = Self::trig(omega, t);
                let xx = scale_cols(p, &c) * pp_t;
                let xp = scale_cols(p, &sn) * p_t;
                let px = -(scale_cols(pp, &sp) * pp_t);
                let ppm = scale_cols(pp, &c) * p_t;
                let n = self.dim / 2;
                DMatrix::from_fn(self.dim, self.dim, |i, j| {
                    let (a, b) = (i / 2, j / 2);
                    debug_assert!(a < n && b < n);
                    match (i % 2, j % 2) {
                        (0, 0) => xx[(a, b)],
                        (0, _) => xp[(a, b)],
                        (_, 0) => px[(a, b)],
                        _ => ppm[(a, b)],
                    }
                })
            }
        }
    }

    /// Rows of `S(t)` for `(x1, p1, x2, p2)`, a `4 × dim` matrix.
    pub fn system_rows(&self, t: f64) -> DMatrix<f64> {
        match &self.kind {
            Kind::Dense { .. } => self.symplectic_matrix(t).rows(0, 4).into_owned(),
            Kind::NormalMode {
                p,
                pp,
                p_t,
                pp_t,
                omega,
            } => {
                let (c, sn, sp) = Self::trig(omega, t);
                let n = omega.len();
                // rows: x1, x2, p1, p2
                let mut left_x = DMatrix::zeros(4, n);
                let mut left_p = DMatrix::zeros(4, n);
                for a in 0..n {
                    for r in 0..2 {
                        left_x[(r, a)] = p[(r, a)] * c[a];
                        left_p[(r, a)] = p[(r, a)] * sn[a];
                        left_x[(2 + r, a)] = -pp[(r, a)] * sp[a];
                        left_p[(2 + r, a)] = pp[(r, a)] * c[a];
                    }
                }
                let sx = left_x * pp_t;
                let sp_cols = left_p * p_t;
                let order = [0usize, 2, 1, 3];
                DMatrix::from_fn(4, self.dim, |i, j| {
                    let r = order[i];
                    if j % 2 == 0 {
                        sx[(r, j / 2)]
                    } else {
                        sp_cols[(r, j / 2)]
                    }
                })
            }
        }
    }
}

fn scale_cols(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= s[j];
    }
    out
}

/// Matrix exponential by scaling and squaring with a [6/6] Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a / 2f64.powi(squarings);
    let q = 6;
    let mut c = 1.0;
    let ident = DMatrix::<f64>::identity(n, n);
    let mut num = ident.clone();
    let mut den = ident.clone();
    let mut power = ident;
    for k in 1..=q {
        c *= (q - k + 1) as f64 / (k * (2 * q - k + 1)) as f64;
        power = &power * &x;
        num += &power * c;
        den += &power * (if k % 2 == 0 { c } else { -c });
    }
    let mut e = den.lu().solve(&num).expect("Padé denominator is nonsingular for ‖X‖ ≤ 1/2");
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

/// Propagates a Full-ordered covariance matrix and records it every `sample_stride` steps.
pub fn evolve(
    v0: &CovarianceMatrix,
    k: &DriftMatrix,
    cfg: &EvolutionConfig,
) -> Result<Vec<(f64, CovarianceMatrix)>> {
    cfg.validate(k)?;
    if v0.dim() != k.dim() {
        return Err(Error::Dimension {
            expected: k.dim(),
            got: v0.dim(),
        });
    }
    let ordering = ModeOrdering::Full {
        bath_modes: k.bath_modes(),
    };
    match cfg.integrator {
        Integrator::Rk4 => {
            let mut out = vec![(0.0, CovarianceMatrix::from_parts(v0.entries().clone(), ordering))];
            let mut v = v0.entries().clone();
            for step in 1..=cfg.steps() {
                v = rk4_step(k, &v, cfg.dt);
                if step % cfg.sample_stride == 0 {
                    let sym = (&v + v.transpose()) * 0.5;
                    out.push((step as f64 * cfg.dt, CovarianceMatrix::from_parts(sym, ordering)));
                }
            }
            Ok(out)
        }
        Integrator::NormalMode => {
            let prop = Propagator::new(k)?;
            Ok(cfg
                .sample_times()
                .into_iter()
                .map(|t| {
                    let s = prop.symplectic_matrix(t);
                    let v = &s * v0.entries() * s.transpose();
                    let sym = (&v + v.transpose()) * 0.5;
                    (t, CovarianceMatrix::from_parts(sym, ordering))
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralDensity;
    use crate::exact::hamiltonian::{build_position_model, OscillatorParams};
    use crate::exact::trace::initial_covariance;
    use crate::gaussian::{separable_squeezed, symplectic_form};
    use std::f64::consts::PI;

    fn cfg(dt: f64, t_max: f64, stride: usize, integrator: Integrator) -> EvolutionConfig {
        EvolutionConfig {
            dt,
            t_max,
            sample_stride: stride,
            integrator,
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        let e = expm(&a);
        let want = DMatrix::from_row_slice(2, 2, &[3f64.cos(), 3f64.sin(), -(3f64.sin()), 3f64.cos()]);
        assert!((e - want).amax() < 1e-13);
        assert_eq!(expm(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn zero_generator_is_identity() {
        let k = DriftMatrix::from_hamiltonian(&DMatrix::zeros(4, 4), 1.0).unwrap();
        let v0 = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.7, ModeOrdering::Full { bath_modes: 0 }).unwrap();
        for integ in [Integrator::Rk4, Integrator::NormalMode] {
            for (_, v) in evolve(&v0, &k, &cfg(0.01, 1.0, 10, integ)).unwrap() {
                assert!((v.entries() - v0.entries()).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn free_oscillators_are_periodic() {
        let bath = SpectralDensity::ohmic(0.1, 20.0, 1.0).unwrap().discretize(3).unwrap();
        let (m, w) = (1.0, 1.3);
        let mut diag = vec![m * w * w, 1.0 / m, m * w * w, 1.0 / m];
        for (&wk, &mk) in bath.frequencies().iter().zip(bath.masses()) {
            diag.extend([mk * wk * wk, 1.0 / mk]);
        }
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
        let k = DriftMatrix::from_hamiltonian(&h, 20.0).unwrap();
        let prop = Propagator::new(&k).unwrap();
        assert!(prop.is_normal_mode());
        let sys = separable_squeezed(0.8, m, w).unwrap();
        let v0 = initial_covariance(&sys, &bath).unwrap();
        let s = prop.symplectic_matrix(2.0 * PI / w);
        let sys_block = (&s * v0.entries() * s.transpose()).view((0, 0), (4, 4)).into_owned();
        assert!((sys_block - sys.entries()).amax() < 1e-9);
    }

    /// RK4 outside `evolve`, so the oracle comparison is not limited by the recurrence window.
    fn rk4_to(k: &DriftMatrix, v0: &DMatrix<f64>, dt: f64, t: f64) -> DMatrix<f64> {
        let steps = (t / dt).round() as usize;
        (0..steps).fold(v0.clone(), |v, _| rk4_step(k, &v, dt))
    }

    #[test]
    fn two_mode_bath_rk4_matches_normal_modes() {
        let bath = SpectralDensity::ohmic(0.1, 20.0, 1.0).unwrap().discretize(2).unwrap();
        let k = build_position_model(&OscillatorParams::resonant(1.0, 1.0), &bath, true).unwrap();
        let v0 = initial_covariance(&separable_squeezed(1.0, 1.0, 1.0).unwrap(), &bath).unwrap();
        let s = Propagator::new(&k).unwrap().symplectic_matrix(10.0);
        let exact = &s * v0.entries() * s.transpose();
        // two coarse modes couple strongly; the bound-sized step leaves 1e-4
        let err = (rk4_to(&k, v0.entries(), STEP_FACTOR / 20.0 / 32.0, 10.0) - exact).amax();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn bath_of_64_rk4_matches_normal_modes() {
        let bath = SpectralDensity::ohmic(0.1, 20.0, 1.0).unwrap().discretize(64).unwrap();
        let k = build_position_model(&OscillatorParams::resonant(1.0, 1.0), &bath, true).unwrap();
        let v0 = initial_covariance(&separable_squeezed(1.0, 1.0, 1.0).unwrap(), &bath).unwrap();
        let s = Propagator::new(&k).unwrap().symplectic_matrix(20.0);
        let exact = &s * v0.entries() * s.transpose();
        // global RK4 error is 6e-5 at the largest allowed step; it scales as dt⁴
        let err = (rk4_to(&k, v0.entries(), STEP_FACTOR / 20.0 / 8.0, 20.0) - exact).amax();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn dense_fallback_matches_normal_modes() {
        let bath = SpectralDensity::ohmic(0.1, 20.0, 1.0).unwrap().discretize(4).unwrap();
        let k = build_position_model(&OscillatorParams::resonant(1.0, 1.0), &bath, true).unwrap();
        let nm = Propagator::new(&k).unwrap();
        let dense = expm(&(k.to_dense() * 3.7));
        assert!((nm.symplectic_matrix(3.7) - &dense).amax() < 1e-9);
        assert!((nm.system_rows(3.7) - dense.rows(0, 4)).amax() < 1e-9);
        let j = symplectic_form(k.dim()).unwrap();
        assert!((&dense * &j * dense.transpose() - &j).amax() < 1e-10);
    }

    #[test]
    fn config_refusals() {
        let bath = SpectralDensity::ohmic(0.1, 20.0, 1.0).unwrap().discretize(10).unwrap();
        let k = build_position_model(&OscillatorParams::resonant(1.0, 1.0), &bath, true).unwrap();
        assert!(matches!(cfg(0.01, 1.0, 1, Integrator::Rk4).validate(&k), Err(Error::StepTooLarge { .. })));
        let t_rec = bath.recurrence_time();
        assert!(matches!(
            cfg(0.0025, 0.81 * t_rec, 1, Integrator::NormalMode).validate(&k),
            Err(Error::RecurrenceWindow { .. })
        ));
        assert!(cfg(0.0025, 0.79 * t_rec, 1, Integrator::NormalMode).validate(&k).is_ok());
        assert_eq!(cfg(0.5, 2.0, 2, Integrator::Rk4).sample_times(), vec![0.0, 1.0, 2.0]);
    }
}
