//! Drivers behind the CLI subcommands: negativity traces, moment runs,
//! asymptotic reports, phase-diagram grids and the validation suite.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::asymptotics::{
    asymptotic_negativity, coefficient_limits, critical_params, find_t0, ohmic_island, ohmic_position_variance,
    ohmic_weak_coupling, ohmic_zero_t_dispersions, oscillation_law, r1_r2, AsymptoticCoefficients, CriticalParams,
    IslandBounds, OhmicWeakCoupling, Phase, PhasePoint, Regime,
};
use crate::config::{DispersionSource, ModeCount, RunConfig};
use crate::error::{Error, Result};
use crate::exact::hamiltonian::CouplingModel;
use crate::exact::invariants::{check_trajectory, InvariantReport, InvariantTolerances};
use crate::exact::propagate::{rk4_step, Propagator};
use crate::exact::trace::{initial_covariance, negativity_trace, reduced_from_rows, ReducedDynamics, TraceRow};
use crate::gaussian::{
    basis_change, coherent, squeezing_of, symplectic_eigenvalues_general, symplectic_eigenvalues_two_mode,
    CovarianceMatrix, ModeOrdering, NormalMoments,
};
use crate::moments::{integrate, negativity_from_moments, CoefficientSchedule, MomentBlock, MomentState};

/// Plus and minus normal modes `((m+, ω+), (m−, ω−))` of the configured oscillators.
pub fn normal_modes(cfg: &RunConfig) -> Result<((f64, f64), (f64, f64))> {
    let osc = cfg.oscillator();
    if !osc.is_resonant() {
        return Err(Error::Detuned {
            omega1: osc.omega1,
            omega2: osc.omega2,
        });
    }
    Ok((osc.plus_mode(cfg.model)?, osc.minus_mode(cfg.model)?))
}

/// True when the exact ohmic `T = 0` forms apply.
fn ohmic_exact_applies(cfg: &RunConfig, temperature: f64) -> bool {
    cfg.model == CouplingModel::Position
        && cfg.spectral.n == 1.0
        && temperature == 0.0
        && cfg.system.c12 == 0.0
        && 2.0 * cfg.spectral.gamma0 < cfg.system.omega1
        && cfg.spectral.gamma0 > 0.0
}

/// Perturbative coefficients at `temperature`; the symmetric model covers every `T`.
pub fn coefficients_at(cfg: &RunConfig, temperature: f64) -> Result<AsymptoticCoefficients> {
    let ((_, w_plus), _) = normal_modes(cfg)?;
    let regime = match cfg.model {
        CouplingModel::Symmetric => Regime::ZeroT,
        CouplingModel::Position => Regime::auto(temperature, w_plus)?,
    };
    coefficient_limits(&cfg.spectral_density()?, cfg.model, w_plus, temperature, regime)
}

/// Plus-mode equilibrium `(Δx+, Δp+)` from closed forms.
pub fn closed_form_dispersions(cfg: &RunConfig, temperature: f64) -> Result<(f64, f64)> {
    let ((m_plus, w_plus), _) = normal_modes(cfg)?;
    if ohmic_exact_applies(cfg, temperature) {
        let (x2, p2) = ohmic_zero_t_dispersions(cfg.spectral.gamma0, cfg.spectral.cutoff, m_plus, w_plus)?;
        return Ok((x2.sqrt(), p2.sqrt()));
    }
    coefficients_at(cfg, temperature)
        .map_err(|e| match e {
            Error::UnsupportedRegime(msg) => Error::UnsupportedRegime(format!("T = {temperature}: {msg}")),
            other => other,
        })?
        .dispersions(m_plus, w_plus)
}

/// Plus-mode `(Δx+, Δp+)` averaged over the last two plus periods before `t_max`
/// of the exact dynamics, one entry per temperature. The propagator is shared.
pub fn exact_dispersions(cfg: &RunConfig, temperatures: &[f64]) -> Result<Vec<(f64, f64)>> {
    let ((m_plus, w_plus), _) = normal_modes(cfg)?;
    let bath = cfg.discrete_bath()?;
    let drift = cfg.drift(&bath)?;
    cfg.evolution_config().validate(&drift)?;
    let prop = Propagator::new(&drift)?;
    let t_max = cfg.evolution.t_max;
    let window = (2.0 * 2.0 * PI / w_plus).min(t_max);
    let samples = 200;
    let times: Vec<f64> = (0..samples).map(|i| t_max - window * i as f64 / samples as f64).collect();
    let vac = coherent(m_plus, w_plus)?.as_matrix4()?;
    let variances: Vec<Vec<(f64, f64)>> = temperatures
        .iter()
        .map(|&t| Ok(bath.clone().with_temperature(t)?.thermal_variances()))
        .collect::<Result<_>>()?;
    let per_time: Vec<Vec<(f64, f64)>> = times
        .par_iter()
        .map(|&t| {
            let rows = prop.system_rows(t);
            variances
                .iter()
                .map(|var| plus_moments(&reduced_from_rows(&rows, &vac, var)))
                .collect()
        })
        .collect();
    // summed in time order so the result does not depend on the thread count
    let mut sums = vec![(0.0, 0.0); temperatures.len()];
    for row in &per_time {
        for (acc, v) in sums.iter_mut().zip(row) {
            acc.0 += v.0;
            acc.1 += v.1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(x2, p2)| ((x2 / samples as f64).sqrt(), (p2 / samples as f64).sqrt()))
        .collect())
}

fn plus_moments(v: &DMatrix<f64>) -> (f64, f64) {
    // x+ = (x1 + x2)/√2
    (
        0.5 * (v[(0, 0)] + v[(2, 2)] + 2.0 * v[(0, 2)]),
        0.5 * (v[(1, 1)] + v[(3, 3)] + 2.0 * v[(1, 3)]),
    )
}

fn minus_product(cfg: &RunConfig) -> Result<(f64, f64)> {
    let n = NormalMoments::of(&cfg.initial_state()?)?;
    Ok((n.dx_minus2.sqrt(), n.dp_minus2.sqrt()))
}

fn crit_for(cfg: &RunConfig, dispersions: (f64, f64), minus: (f64, f64)) -> Result<CriticalParams> {
    let (_, (m_minus, w_minus)) = normal_modes(cfg)?;
    critical_params(dispersions.0, dispersions.1, minus.0, minus.1, m_minus, w_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub temperature: f64,
    pub s_crit: f64,
    pub abs_r_crit: f64,
    pub e_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub dispersion_source: DispersionSource,
    pub boundaries: Vec<BoundaryPoint>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub t0: Option<f64>,
    pub counts: PhaseCounts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCounts {
    pub sd: usize,
    pub sdr: usize,
    pub nsd: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGridResult {
    pub rows: Vec<PhasePoint>,
    pub summary: PhaseSummary,
}

/// Classifies every `(r, T)` cell of the sweep grid. `r` is the minus-mode
/// squeezing; the minus dispersion product is taken from the initial state.
pub fn phase_diagram(cfg: &RunConfig) -> Result<PhaseGridResult> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::config("sweep", "phase-diagram needs a [sweep] section"))?;
    let work = || -> Result<PhaseGridResult> {
        let (_, (_, w_minus)) = normal_modes(cfg)?;
        let (dxm, dpm) = minus_product(cfg)?;
        let product = dxm * dpm;
        let minus = (product.sqrt(), product.sqrt());
        let dispersions: Vec<(f64, f64)> = match sweep.dispersion_source {
            DispersionSource::ClosedForm => sweep
                .t_grid
                .par_iter()
                .map(|&t| closed_form_dispersions(cfg, t))
                .collect::<Result<_>>()?,
            DispersionSource::Exact => exact_dispersions(cfg, &sweep.t_grid)?,
        };
        let crits: Vec<CriticalParams> = dispersions
            .iter()
            .map(|&d| crit_for(cfg, d, minus))
            .collect::<Result<_>>()?;
        let cells: Vec<(f64, usize)> = sweep
            .r_grid
            .iter()
            .flat_map(|&r| (0..sweep.t_grid.len()).map(move |j| (r, j)))
            .collect();
        let mut rows: Vec<PhasePoint> = cells
            .par_iter()
            .map(|&(r, j)| PhasePoint::new(r, sweep.t_grid[j], &crits[j], w_minus))
            .collect();
        rows.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.temperature.total_cmp(&b.temperature)));
        let mut counts = PhaseCounts::default();
        for row in &rows {
            match row.phase {
                Phase::SuddenDeath => counts.sd += 1,
                Phase::SuddenDeathRevival => counts.sdr += 1,
                Phase::NoSuddenDeath => counts.nsd += 1,
            }
        }
        let mut boundaries: Vec<BoundaryPoint> = sweep
            .t_grid
            .iter()
            .zip(&crits)
            .map(|(&t, c)| BoundaryPoint {
                temperature: t,
                s_crit: c.s_crit,
                abs_r_crit: c.r_crit.abs(),
                e_c: c.e_c,
            })
            .collect();
        boundaries.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
        let ((m_plus, w_plus), _) = normal_modes(cfg)?;
        let (r1, r2) = match sweep.t_grid.iter().position(|&t| t == 0.0) {
            Some(j) => {
                let (dx, dp) = dispersions[j];
                let (a, b) = r1_r2(dx * dx, dp * dp, m_plus, w_plus);
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        Ok(PhaseGridResult {
            rows,
            summary: PhaseSummary {
                dispersion_source: sweep.dispersion_source,
                boundaries,
                r1,
                r2,
                t0: t0_for(cfg)?,
                counts,
            },
        })
    };
    if sweep.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(sweep.parallelism)
            .build()
            .map_err(|e| Error::config("sweep.parallelism", e.to_string()))?
            .install(work)
    } else {
        work()
    }
}

/// `T0` where defined: ohmic position coupling via the harmonic-number variance.
fn t0_for(cfg: &RunConfig) -> Result<Option<f64>> {
    if !ohmic_exact_applies(cfg, 0.0) {
        return Ok(None);
    }
    let ((m, w), _) = normal_modes(cfg)?;
    match find_t0(|t| ohmic_position_variance(t, cfg.spectral.gamma0, m, w), m, w, 10.0 * w) {
        Ok(t) => Ok(Some(t)),
        Err(Error::NoT0 { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One output row shared by `negativity-trace` and `moments`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub en_exact: Option<f64>,
    pub en_moments: Option<f64>,
    pub en_asymptotic: Option<f64>,
    pub moments: NormalMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceOutput {
    pub records: Vec<TraceRecord>,
    /// Columns that were requested but could not be computed, with the reason.
    pub warnings: Vec<String>,
}

fn soft<T>(r: Result<T>, what: &str, warnings: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        // an unphysical perturbative equilibrium (super-ohmic T = 0) or a moment
        // transient below the uncertainty bound only empties the auxiliary column
        Err(
            e @ (Error::UnsupportedRegime(_)
            | Error::NoEquilibrium(_)
            | Error::Detuned { .. }
            | Error::Unphysical(_)
            | Error::Numerical(_)),
        ) => {
            warnings.push(format!("{what} column left empty: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Moment solution from `start` to `t_max` on the configured sample grid.
fn moment_trajectory(cfg: &RunConfig, start: &MomentState) -> Result<Vec<MomentState>> {
    let (plus, minus) = normal_modes(cfg)?;
    let coeffs = coefficients_at(cfg, cfg.bath.temperature)?;
    let mut evo = cfg.evolution_config();
    evo.t_max -= start.t;
    integrate(start, &CoefficientSchedule::Constant(coeffs), plus, minus, &evo)
}

/// Equilibration time after which constant coefficients are trusted.
pub fn moments_start_time(cfg: &RunConfig) -> Result<f64> {
    Ok(10.0 / coefficients_at(cfg, cfg.bath.temperature)?.gamma())
}

/// Moment column of a trace: the moment equations are started from the exact
/// state at the first sample with `t ≥ 10/γ`; earlier rows stay empty.
fn moments_column(cfg: &RunConfig, exact: &[TraceRow]) -> Result<Vec<Option<f64>>> {
    let t_start = moments_start_time(cfg)?;
    let Some(i0) = exact.iter().position(|r| r.t >= t_start) else {
        return Err(Error::UnsupportedRegime(format!(
            "t_max = {} ends before the equilibration time 10/γ = {t_start}",
            cfg.evolution.t_max
        )));
    };
    let m = &exact[i0].moments;
    let start = MomentState {
        plus: MomentBlock { x2: m.dx_plus2, p2: m.dp_plus2, xp: m.xp_plus },
        minus: MomentBlock { x2: m.dx_minus2, p2: m.dp_minus2, xp: m.xp_minus },
        t: exact[i0].t,
    };
    let traj = moment_trajectory(cfg, &start)?;
    let mut out = vec![None; exact.len()];
    for (slot, state) in out[i0..].iter_mut().zip(&traj) {
        *slot = Some(negativity_from_moments(state)?);
    }
    Ok(out)
}

fn asymptotic_column(cfg: &RunConfig, initial: &CovarianceMatrix, times: &[f64]) -> Result<Vec<f64>> {
    let (_, (m_minus, w_minus)) = normal_modes(cfg)?;
    let (dx, dp) = closed_form_dispersions(cfg, cfg.bath.temperature)?;
    let n = basis_change(&physical(initial)?, ModeOrdering::Physical, ModeOrdering::Normal)?;
    let minus0: Matrix2<f64> = n.mode_block(1, 1);
    times
        .iter()
        .map(|&t| asymptotic_negativity(t, dx, dp, &minus0, m_minus, w_minus))
        .collect()
}

fn physical(v: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    match v.ordering() {
        ModeOrdering::Normal => basis_change(v, ModeOrdering::Normal, ModeOrdering::Physical),
        _ => Ok(v.clone()),
    }
}

/// Exact trace plus the requested moment and asymptotic columns.
pub fn negativity_trace_run(cfg: &RunConfig) -> Result<TraceOutput> {
    let bath = cfg.discrete_bath()?;
    let drift = cfg.drift(&bath)?;
    let initial = cfg.initial_state()?;
    let exact = negativity_trace(&initial, &drift, &bath, &cfg.evolution_config())?;
    let times: Vec<f64> = exact.iter().map(|r| r.t).collect();
    let mut warnings = Vec::new();
    let moments = if cfg.trace.moments {
        soft(moments_column(cfg, &exact), "en_moments", &mut warnings)?
    } else {
        None
    };
    let asym = if cfg.trace.asymptotic {
        soft(asymptotic_column(cfg, &initial, &times), "en_asymptotic", &mut warnings)?
    } else {
        None
    };
    let records = exact
        .iter()
        .enumerate()
        .map(|(i, row)| {
            Ok(TraceRecord {
                t: row.t,
                en_exact: Some(row.log_negativity),
                en_moments: moments.as_ref().and_then(|m| m[i]),
                en_asymptotic: asym.as_ref().map(|a| a[i]),
                moments: row.moments,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TraceOutput { records, warnings })
}

/// Moment equations only; moment columns come from the moment solution.
pub fn moments_run(cfg: &RunConfig) -> Result<TraceOutput> {
    let initial = cfg.initial_state()?;
    let traj = moment_trajectory(cfg, &MomentState::from_covariance(&initial, 0.0)?)?;
    let times: Vec<f64> = traj.iter().map(|s| s.t).collect();
    let mut warnings = Vec::new();
    let asym = if cfg.trace.asymptotic {
        soft(asymptotic_column(cfg, &initial, &times), "en_asymptotic", &mut warnings)?
    } else {
        None
    };
    let records = traj
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(TraceRecord {
                t: s.t,
                en_exact: None,
                en_moments: Some(negativity_from_moments(s)?),
                en_asymptotic: asym.as_ref().map(|a| a[i]),
                moments: s.moments(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TraceOutput { records, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OhmicComparison {
    pub exact: OhmicWeakCoupling,
    pub weak_coupling: OhmicWeakCoupling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub model: CouplingModel,
    pub temperature: f64,
    pub r: f64,
    pub coefficients: Option<AsymptoticCoefficients>,
    pub dx_plus: f64,
    pub dp_plus: f64,
    pub r_crit: f64,
    pub s_crit: f64,
    pub e_c: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub t0: Option<f64>,
    pub phase: Phase,
    pub e_mean: f64,
    pub e_amp: f64,
    pub ohmic_zero_t: Option<OhmicComparison>,
}

/// Closed-form asymptotic quantities for the configured state and temperature.
pub fn asymptotics_report(cfg: &RunConfig) -> Result<AsymptoticsReport> {
    let ((m_plus, w_plus), (m_minus, w_minus)) = normal_modes(cfg)?;
    let t = cfg.bath.temperature;
    let n = NormalMoments::of(&cfg.initial_state()?)?;
    let (dxm, dpm) = (n.dx_minus2.sqrt(), n.dp_minus2.sqrt());
    let r = squeezing_of(dxm, dpm, m_minus, w_minus)?;
    let (dx, dp) = closed_form_dispersions(cfg, t)?;
    let crit = critical_params(dx, dp, dxm, dpm, m_minus, w_minus)?;
    let point = PhasePoint::new(r, t, &crit, w_minus);
    let coefficients = match coefficients_at(cfg, t) {
        Ok(c) => Some(c),
        Err(Error::UnsupportedRegime(_)) => None,
        Err(e) => return Err(e),
    };
    let zero = if t == 0.0 {
        Some((dx, dp))
    } else {
        match closed_form_dispersions(cfg, 0.0) {
            Ok(d) => Some(d),
            Err(Error::NoEquilibrium(_) | Error::UnsupportedRegime(_)) => None,
            Err(e) => return Err(e),
        }
    };
    let (r1, r2) = match zero {
        Some((x, p)) => {
            let (a, b) = r1_r2(x * x, p * p, m_plus, w_plus);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let ohmic_zero_t = if ohmic_exact_applies(cfg, 0.0) {
        let IslandBounds { r1, r2, .. } = ohmic_island(cfg.spectral.gamma0, cfg.spectral.cutoff, m_plus, w_plus)?;
        Some(OhmicComparison {
            exact: OhmicWeakCoupling {
                r1,
                r2,
                r_crit: 0.5 * (r1 + r2),
                s_crit: 0.5 * (r2 - r1),
            },
            weak_coupling: ohmic_weak_coupling(2.0 * cfg.spectral.gamma0, cfg.spectral.cutoff, w_plus),
        })
    } else {
        None
    };
    Ok(AsymptoticsReport {
        model: cfg.model,
        temperature: t,
        r,
        coefficients,
        dx_plus: dx,
        dp_plus: dp,
        r_crit: crit.r_crit,
        s_crit: crit.s_crit,
        e_c: crit.e_c,
        r1,
        r2,
        t0: t0_for(cfg)?,
        phase: point.phase,
        e_mean: point.e_mean,
        e_amp: point.e_amp,
        ohmic_zero_t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub modes: usize,
    pub t_max: f64,
    pub invariants: InvariantReport,
    pub checks: Vec<ValidationCheck>,
    pub passed: bool,
}

const VALIDATION_MODES: usize = 40;

/// Refuses the full configuration on step-size or recurrence grounds, then
/// runs the invariant and oracle checks on a downsized copy.
pub fn validate_run(cfg: &RunConfig) -> Result<ValidationReport> {
    let bath = cfg.discrete_bath()?;
    let drift = cfg.drift(&bath)?;
    cfg.evolution_config().validate(&drift)?;

    let mut small = cfg.clone();
    let modes = cfg.mode_count().min(VALIDATION_MODES);
    small.bath.modes = ModeCount::Fixed(modes);
    let t_rec = 2.0 * PI * modes as f64 / cfg.spectral.cutoff;
    small.evolution.t_max = cfg.evolution.t_max.min(0.75 * t_rec);
    let t_max = small.evolution.t_max;
    let bath = small.discrete_bath()?;
    let drift = small.drift(&bath)?;
    let initial = small.initial_state()?;
    let dynamics = ReducedDynamics::new(&initial, &drift, &bath)?;
    let samples: Vec<f64> = (0..=100).map(|i| t_max * i as f64 / 100.0).collect();
    let tol = InvariantTolerances::default();
    let invariants = check_trajectory(&drift, &dynamics, &[0.5 * t_max, t_max], &samples)?;
    let mut checks = vec![ValidationCheck {
        name: "invariants".into(),
        passed: invariants.passes(&tol),
        detail: if invariants.passes(&tol) {
            format!(
                "symplecticity {:.2e}, purity {:.2e}, energy {:.2e}, min reduced ν {:.12}",
                invariants.symplecticity, invariants.purity, invariants.energy, invariants.min_reduced_nu
            )
        } else {
            invariants.failures(&tol).join("; ")
        },
    }];

    // cross-integrator oracle over a short window at a quarter of the step bound
    let horizon = t_max.min(2.0);
    let dt = small.dt() / 4.0;
    let steps = (horizon / dt).round() as usize;
    let v0 = initial_covariance(&initial, &bath)?;
    let rk = (0..steps).fold(v0.entries().clone(), |v, _| rk4_step(&drift, &v, dt));
    let t_end = steps as f64 * dt;
    let exact_sys = dynamics.state_at(t_end)?;
    let diff = (rk.view((0, 0), (4, 4)) - exact_sys.entries()).amax();
    checks.push(ValidationCheck {
        name: "rk4_vs_normal_modes".into(),
        passed: diff < 1e-7,
        detail: format!("max entry difference {diff:.2e} at t = {t_end}"),
    });

    // closed-form two-mode spectrum against the general route
    let mut worst = 0.0f64;
    for state in dynamics.states(&samples)? {
        let m4 = Matrix4::from_iterator(state.entries().iter().copied());
        let closed = symplectic_eigenvalues_two_mode(&m4);
        let general = symplectic_eigenvalues_general(state.entries());
        for (a, b) in closed.iter().zip(&general) {
            worst = worst.max((a - b).abs());
        }
    }
    checks.push(ValidationCheck {
        name: "two_mode_spectrum".into(),
        passed: worst < 1e-9,
        detail: format!("closed form vs general max difference {worst:.2e}"),
    });

    // oscillation law against the constructed asymptotic covariance
    if let Ok(((_, _), (m_minus, w_minus))) = normal_modes(cfg) {
        if let Ok((dx, dp)) = closed_form_dispersions(cfg, cfg.bath.temperature) {
            let n = NormalMoments::of(&initial)?;
            let (dxm, dpm) = (n.dx_minus2.sqrt(), n.dp_minus2.sqrt());
            let crit = critical_params(dx, dp, dxm, dpm, m_minus, w_minus)?;
            let r = squeezing_of(dxm, dpm, m_minus, w_minus)?;
            let minus0 = Matrix2::new(dxm * dxm, 0.0, 0.0, dpm * dpm);
            let mut worst = 0.0f64;
            for i in 0..200 {
                let t = PI / w_minus * i as f64 / 200.0;
                let law = oscillation_law(r, crit.r_crit, crit.s_crit, w_minus, t).max(0.0);
                let direct = asymptotic_negativity(t, dx, dp, &minus0, m_minus, w_minus)?;
                worst = worst.max((law - direct).abs());
            }
            checks.push(ValidationCheck {
                name: "oscillation_law".into(),
                passed: worst < 1e-8,
                detail: format!("law vs covariance max difference {worst:.2e}"),
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        modes,
        t_max,
        invariants,
        checks,
        passed,
    })
}
