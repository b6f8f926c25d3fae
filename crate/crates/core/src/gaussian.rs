//! Gaussian-state algebra on covariance matrices (ħ = 1).
//!
//! Phase-space vectors are interleaved per mode, `(x, p)` pairs, and every
//! matrix carries a [`ModeOrdering`] tag.

use nalgebra::{Cholesky, DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the smallest symplectic eigenvalue.
pub const PHYSICALITY_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeOrdering {
    /// `(x1, p1, x2, p2)`
    Physical,
    /// `(x+, p+, x-, p-)` with `x± = (x1 ± x2)/√2`
    Normal,
    /// `(x1, p1, x2, p2, q1, π1, …, qN, πN)`
    Full { bath_modes: usize },
    /// `(q1, π1, …, qN, πN)`
    Bath { modes: usize },
}

impl ModeOrdering {
    pub fn dim(&self) -> usize {
        match *self {
            ModeOrdering::Physical | ModeOrdering::Normal => 4,
            ModeOrdering::Full { bath_modes } => 4 + 2 * bath_modes,
            ModeOrdering::Bath { modes } => 2 * modes,
        }
    }

    fn name(&self) -> String {
        format!("{self:?}")
    }
}

/// Symmetrized second moments `V_ij = <{r_i, r_j}>/2` of a zero-mean Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    ordering: ModeOrdering,
}

impl CovarianceMatrix {
    /// Validates symmetry, positive definiteness and the uncertainty principle.
    pub fn new(entries: DMatrix<f64>, ordering: ModeOrdering) -> Result<Self> {
        let v = Self::checked_shape(entries, ordering)?;
        let nu_min = if v.dim() <= 4 {
            v.symplectic_eigenvalues()[0]
        } else {
            symplectic_eigenvalues_cholesky(&v.entries)?[0]
        };
        if nu_min < 0.5 - PHYSICALITY_TOL {
            return Err(Error::Unphysical(nu_min));
        }
        Ok(v)
    }

    /// Validates symmetry and positive definiteness only. Used for partially
    /// transposed matrices, which may violate the uncertainty principle.
    fn checked_shape(entries: DMatrix<f64>, ordering: ModeOrdering) -> Result<Self> {
        let dim = ordering.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        let asym = relative_asymmetry(&entries);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        if Cholesky::new(entries.clone()).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { entries, ordering })
    }

    /// Trusted constructor for matrices that are physical by construction.
    pub(crate) fn from_parts(entries: DMatrix<f64>, ordering: ModeOrdering) -> Self {
        debug_assert_eq!(entries.nrows(), ordering.dim());
        Self { entries, ordering }
    }

    pub(crate) fn from_matrix4(m: Matrix4<f64>, ordering: ModeOrdering) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        Self::from_parts(DMatrix::from_iterator(4, 4, sym.iter().copied()), ordering)
    }

    /// Block-diagonal Normal-ordered matrix from the plus and minus 2x2 blocks.
    pub fn from_normal_blocks(plus: Matrix2<f64>, minus: Matrix2<f64>) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&plus);
        m.view_mut((2, 2), (2, 2)).copy_from(&minus);
        Self::new(m, ModeOrdering::Normal)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn ordering(&self) -> ModeOrdering {
        self.ordering
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// The 2x2 block coupling modes `a` and `b`.
    pub fn mode_block(&self, a: usize, b: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * a, 2 * b).into_owned()
    }

    pub fn as_matrix4(&self) -> Result<Matrix4<f64>> {
        if self.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: self.dim(),
            });
        }
        Ok(Matrix4::from_iterator(self.entries.iter().copied()))
    }

    /// Ascending symplectic spectrum. Two-mode matrices use the closed form
    /// (Cholesky route when the two values nearly coincide), larger ones the
    /// general eigen-decomposition of `JV`.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let raw = match self.dim() {
            2 => vec![self.entries.determinant().max(0.0).sqrt()],
            4 => {
                let m = Matrix4::from_iterator(self.entries.iter().copied());
                let closed = symplectic_eigenvalues_two_mode(&m);
                // Near-degenerate spectra lose half the digits in the discriminant.
                if closed[1] - closed[0] < 1e-3 * closed[1] {
                    symplectic_eigenvalues_cholesky(&self.entries).unwrap_or_else(|_| closed.to_vec())
                } else {
                    closed.to_vec()
                }
            }
            _ => symplectic_eigenvalues_general(&self.entries),
        };
        raw.into_iter().map(clamp_half).collect()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues()
            .iter()
            .all(|nu| (nu - 0.5).abs() <= tol)
    }
}

fn clamp_half(nu: f64) -> f64 {
    if nu < 0.5 && nu > 0.5 - PHYSICALITY_TOL {
        0.5
    } else {
        nu
    }
}

fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Block-diagonal `J` with 2x2 blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(dim: usize) -> Result<DMatrix<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::param("dim", format!("must be even and positive, got {dim}")));
    }
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(j)
}

/// Symplectic spectrum of an arbitrary symmetric positive-definite matrix.
pub fn symplectic_eigenvalues(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    if v.nrows() != v.ncols() || v.nrows() % 2 != 0 || v.nrows() == 0 {
        return Err(Error::Dimension {
            expected: v.nrows() + v.nrows() % 2,
            got: v.ncols(),
        });
    }
    let ordering = match v.nrows() {
        4 => ModeOrdering::Physical,
        d => ModeOrdering::Bath { modes: d / 2 },
    };
    Ok(CovarianceMatrix::checked_shape(v.clone(), ordering)?.symplectic_eigenvalues())
}

/// Closed-form two-mode spectrum `ν±² = (Δ ± √(Δ² − 4 det V))/2`,
/// `Δ = det A + det B + 2 det C`. Returned ascending.
pub fn symplectic_eigenvalues_two_mode(v: &Matrix4<f64>) -> [f64; 2] {
    let a = v.fixed_view::<2, 2>(0, 0).determinant();
    let b = v.fixed_view::<2, 2>(2, 2).determinant();
    let c = v.fixed_view::<2, 2>(0, 2).determinant();
    let delta = a + b + 2.0 * c;
    let det = v.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let hi = 0.5 * (delta + disc);
    // det V = ν-² ν+² is better conditioned than the difference for ν-.
    let lo = if hi > 0.0 { det / hi } else { 0.5 * (delta - disc) };
    [lo.max(0.0).sqrt(), hi.max(0.0).sqrt()]
}

/// Moduli of the eigenvalues of `JV` via a general real Schur decomposition,
/// each conjugate pair reported once.
pub fn symplectic_eigenvalues_general(v: &DMatrix<f64>) -> Vec<f64> {
    let j = symplectic_form(v.nrows()).expect("even dimension");
    let mut moduli: Vec<f64> = (&j * v)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    pair_average(&mut moduli)
}

/// Symplectic spectrum from `L = chol(V)`: the eigenvalues of `(LᵀJL)ᵀ(LᵀJL)`
/// are the squared symplectic eigenvalues, each twice. Uses only symmetric
/// eigensolvers, so it scales to large bath dimensions.
pub fn symplectic_eigenvalues_cholesky(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = Cholesky::new(v.clone())
        .ok_or(Error::NotPositiveDefinite)?
        .l();
    let j = symplectic_form(v.nrows())?;
    let a = l.transpose() * j * &l;
    let g = a.transpose() * &a;
    let mut nu: Vec<f64> = g
        .symmetric_eigenvalues()
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    Ok(pair_average(&mut nu))
}

fn pair_average(values: &mut [f64]) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn require_ordering(v: &CovarianceMatrix, expected: ModeOrdering) -> Result<()> {
    if v.ordering() != expected {
        return Err(Error::Ordering {
            expected: expected.name(),
            got: v.ordering().name(),
        });
    }
    Ok(())
}

/// Flips the sign of `p2`. The result is positive definite but may violate the
/// uncertainty principle; that violation is the entanglement witness.
pub fn partial_transpose(v: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    require_ordering(v, ModeOrdering::Physical)?;
    let mut m = v.entries.clone();
    for k in 0..4 {
        if k != 3 {
            m[(3, k)] = -m[(3, k)];
            m[(k, 3)] = -m[(k, 3)];
        }
    }
    Ok(CovarianceMatrix::from_parts(m, ModeOrdering::Physical))
}

/// `E_N = max{0, −ln(2 ν_min(Vᵀᴮ))}`.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    let pt = partial_transpose(v)?;
    let nu_min = pt.symplectic_eigenvalues()[0];
    if !(nu_min > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive symplectic eigenvalue {nu_min} of the partial transpose"
        )));
    }
    Ok((-(2.0 * nu_min).ln()).max(0.0))
}

/// Orthogonal, symplectic and involutive map between Physical and Normal orderings.
fn mixing_matrix() -> Matrix4<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::new(
        s, 0.0, s, 0.0, //
        0.0, s, 0.0, s, //
        s, 0.0, -s, 0.0, //
        0.0, s, 0.0, -s,
    )
}

pub fn basis_change(
    v: &CovarianceMatrix,
    from: ModeOrdering,
    to: ModeOrdering,
) -> Result<CovarianceMatrix> {
    require_ordering(v, from)?;
    let two_mode = |o: ModeOrdering| matches!(o, ModeOrdering::Physical | ModeOrdering::Normal);
    if !two_mode(from) || !two_mode(to) {
        return Err(Error::Ordering {
            expected: "Physical or Normal".into(),
            got: if two_mode(from) { to.name() } else { from.name() },
        });
    }
    if from == to {
        return Ok(v.clone());
    }
    let b = mixing_matrix();
    let m = b * v.as_matrix4()? * b.transpose();
    Ok(CovarianceMatrix::from_matrix4(m, to))
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {x}")))
    }
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {x}")))
    }
}

/// Two-mode squeezed vacuum in Normal ordering, `E_N = 2|r|`.
pub fn two_mode_squeezed(r: f64, m: f64, omega: f64) -> Result<CovarianceMatrix> {
    finite("r", r)?;
    positive("m", m)?;
    positive("omega", omega)?;
    let mw = m * omega;
    let e = (2.0 * r).exp();
    let plus = Matrix2::new(e / (2.0 * mw), 0.0, 0.0, mw / (2.0 * e));
    let minus = Matrix2::new(1.0 / (2.0 * mw * e), 0.0, 0.0, mw * e / 2.0);
    CovarianceMatrix::from_normal_blocks(plus, minus)
}

/// Product of two identical single-mode squeezed vacua, `mΩ δx/δp = e^{2r}`.
pub fn separable_squeezed(r: f64, m: f64, omega: f64) -> Result<CovarianceMatrix> {
    finite("r", r)?;
    positive("m", m)?;
    positive("omega", omega)?;
    let mw = m * omega;
    let e = (2.0 * r).exp();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        e / (2.0 * mw),
        mw / (2.0 * e),
        e / (2.0 * mw),
        mw / (2.0 * e),
    ]));
    CovarianceMatrix::new(d, ModeOrdering::Physical)
}

/// Product of the two oscillator vacua.
pub fn coherent(m: f64, omega: f64) -> Result<CovarianceMatrix> {
    separable_squeezed(0.0, m, omega)
}

/// `f(σ) = (σ+½)ln(σ+½) − (σ−½)ln(σ−½)`, with `f(½) = 0`.
pub fn entropy_f(sigma: f64) -> Result<f64> {
    if !(sigma >= 0.5 - PHYSICALITY_TOL) || !sigma.is_finite() {
        return Err(Error::Unphysical(sigma));
    }
    let a = sigma + 0.5;
    let b = (sigma - 0.5).max(0.0);
    let tail = if b > 0.0 { b * b.ln() } else { 0.0 };
    Ok(a * a.ln() - tail)
}

/// Von Neumann entropy of a two-mode Gaussian state from its symplectic spectrum.
pub fn von_neumann_entropy(sigma_plus: f64, sigma_minus: f64) -> Result<f64> {
    Ok(entropy_f(sigma_plus)? + entropy_f(sigma_minus)?)
}

/// `r = ½ ln[m ω δx/δp]` with `δx`, `δp` standard deviations.
pub fn squeezing_of(dx: f64, dp: f64, m: f64, omega: f64) -> Result<f64> {
    positive("dx", dx)?;
    positive("dp", dp)?;
    positive("m", m)?;
    positive("omega", omega)?;
    Ok(0.5 * (m * omega * dx / dp).ln())
}

/// Second moments of the `x±` modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMoments {
    pub dx_plus2: f64,
    pub dp_plus2: f64,
    /// `<{x+, p+}>`
    pub xp_plus: f64,
    pub dx_minus2: f64,
    pub dp_minus2: f64,
    /// `<{x-, p-}>`
    pub xp_minus: f64,
}

impl NormalMoments {
    pub fn of(v: &CovarianceMatrix) -> Result<Self> {
        let n = match v.ordering() {
            ModeOrdering::Normal => v.clone(),
            ModeOrdering::Physical => basis_change(v, ModeOrdering::Physical, ModeOrdering::Normal)?,
            other => {
                return Err(Error::Ordering {
                    expected: "Physical or Normal".into(),
                    got: other.name(),
                })
            }
        };
        Ok(Self {
            dx_plus2: n.get(0, 0),
            dp_plus2: n.get(1, 1),
            xp_plus: 2.0 * n.get(0, 1),
            dx_minus2: n.get(2, 2),
            dp_minus2: n.get(3, 3),
            xp_minus: 2.0 * n.get(2, 3),
        })
    }
}
