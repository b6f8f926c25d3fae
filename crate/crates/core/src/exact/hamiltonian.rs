//! Quadratic Hamiltonians `H = ½ rᵀ H r` of the two oscillators plus bath,
//! and the drift matrix `K = J H`.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::bath::DiscreteBath;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingModel {
    /// `(x1 + x2) Σ c_k q_k`
    Position,
    /// Position coupling plus `(p1 + p2)/(mΩ) Σ c_k/(m_k w_k) π_k`.
    Symmetric,
}

/// System parameters. With renormalization on, these are the physical
/// (renormalized) values; otherwise they enter the Hamiltonian directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub mass: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Position-position coupling, frequency² units.
    pub c12: f64,
    /// Momentum-momentum coupling, frequency² units (symmetric model only).
    pub c12_tilde: f64,
}

impl OscillatorParams {
    pub fn resonant(mass: f64, omega: f64) -> Self {
        Self {
            mass,
            omega1: omega,
            omega2: omega,
            c12: 0.0,
            c12_tilde: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {x}")))
            }
        };
        pos("system.mass", self.mass)?;
        pos("system.omega1", self.omega1)?;
        pos("system.omega2", self.omega2)?;
        if !self.c12.is_finite() || !self.c12_tilde.is_finite() {
            return Err(Error::param("system.c12", "couplings must be finite"));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega1 - self.omega2).abs() <= 1e-12 * self.omega1.max(self.omega2)
    }

    /// Mass and squared frequency of the `x+` (sign = +1) or `x-` (sign = −1) mode.
    pub fn normal_mode(&self, model: CouplingModel, sign: f64) -> (f64, f64) {
        match model {
            CouplingModel::Position => {
                let avg = 0.5 * (self.omega1.powi(2) + self.omega2.powi(2));
                (self.mass, avg + sign * self.c12)
            }
            CouplingModel::Symmetric => {
                let w2 = self.omega1 * self.omega2;
                let mass = self.mass / (1.0 + sign * self.c12_tilde / w2);
                let freq2 = w2 * (1.0 + sign * self.c12 / w2) * (1.0 + sign * self.c12_tilde / w2);
                (mass, freq2)
            }
        }
    }

    /// `(m−, ω−)` of the decoupled minus mode.
    pub fn minus_mode(&self, model: CouplingModel) -> Result<(f64, f64)> {
        let (m, w2) = self.normal_mode(model, -1.0);
        if !(w2 > 0.0 && m > 0.0) {
            return Err(Error::Unstable(format!("minus mode has m = {m}, ω² = {w2}")));
        }
        Ok((m, w2.sqrt()))
    }

    /// `(m+, ω+)` of the plus mode.
    pub fn plus_mode(&self, model: CouplingModel) -> Result<(f64, f64)> {
        let (m, w2) = self.normal_mode(model, 1.0);
        if !(w2 > 0.0 && m > 0.0) {
            return Err(Error::Unstable(format!("plus mode has m = {m}, ω² = {w2}")));
        }
        Ok((m, w2.sqrt()))
    }
}

/// Symmetric sparse matrix in compressed-row form (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    fn from_dense(h: &DMatrix<f64>) -> Self {
        let dim = h.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = h[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Upper-triangle entries `(i, j, v)`, `i <= j`; mirrored on insertion.
    fn from_upper(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * entries.len());
        for &(i, j, v) in &entries {
            if v == 0.0 {
                continue;
            }
            all.push((i, j, v));
            if i != j {
                all.push((j, i, v));
            }
        }
        entries.clear();
        all.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        for &(i, _, _) in &all {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: all.iter().map(|e| e.1).collect(),
            vals: all.iter().map(|e| e.2).collect(),
        }
    }

    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Linear generator `K = J H` of a quadratic Hamiltonian in Full ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    h: SparseSymmetric,
    frequency_scale: f64,
    recurrence_time: Option<f64>,
}

impl DriftMatrix {
    /// Wraps an arbitrary symmetric Hamiltonian matrix in Full ordering.
    /// `frequency_scale` bounds the fastest mode and sets the RK4 step limit.
    pub fn from_hamiltonian(h: &DMatrix<f64>, frequency_scale: f64) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim || dim < 4 || dim % 2 != 0 {
            return Err(Error::Dimension {
                expected: dim.max(4) + dim % 2,
                got: h.ncols(),
            });
        }
        let scale = h.amax().max(f64::MIN_POSITIVE);
        let asym = (h - h.transpose()).amax() / scale;
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        if !(frequency_scale > 0.0) {
            return Err(Error::param("frequency_scale", "must be positive"));
        }
        let sym = (h + h.transpose()) * 0.5;
        Ok(Self {
            h: SparseSymmetric::from_dense(&sym),
            frequency_scale,
            recurrence_time: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.dim
    }

    pub fn bath_modes(&self) -> usize {
        self.dim() / 2 - 2
    }

    pub fn frequency_scale(&self) -> f64 {
        self.frequency_scale
    }

    pub fn recurrence_time(&self) -> Option<f64> {
        self.recurrence_time
    }

    pub fn nnz(&self) -> usize {
        self.h.nnz()
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        self.h.to_dense()
    }

    /// Dense `K = J H`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let h = self.h.to_dense();
        let mut k = DMatrix::zeros(self.dim(), self.dim());
        for a in 0..self.dim() / 2 {
            k.row_mut(2 * a).copy_from(&h.row(2 * a + 1));
            k.row_mut(2 * a + 1).copy_from(&(-h.row(2 * a)));
        }
        k
    }

    /// `K V` using the sparse Hamiltonian.
    pub fn apply(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, v.ncols());
        for a in 0..n / 2 {
            for (src, dst, sign) in [(2 * a + 1, 2 * a, 1.0), (2 * a, 2 * a + 1, -1.0)] {
                for (j, hv) in self.h.row(src) {
                    let coef = sign * hv;
                    for c in 0..v.ncols() {
                        out[(dst, c)] += coef * v[(j, c)];
                    }
                }
            }
        }
        out
    }

    /// `dV/dt = K V + V Kᵀ`.
    pub fn lyapunov_rhs(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let kv = self.apply(v);
        &kv + kv.transpose()
    }

    /// `⟨H⟩ = ½ tr(H V)` for a zero-mean state.
    pub fn energy(&self, v: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for (j, hv) in self.h.row(i) {
                acc += hv * v[(j, i)];
            }
        }
        0.5 * acc
    }

    /// `Jᵀ K` is symmetric for any Hamiltonian generator.
    pub fn hamiltonian_asymmetry(&self) -> f64 {
        let k = self.to_dense();
        let j = crate::gaussian::symplectic_form(self.dim()).expect("even dimension");
        let m = j.transpose() * k;
        (&m - m.transpose()).amax()
    }

    /// Position and momentum blocks `(W, T)` when `H` has no `x p` cross terms.
    pub fn position_momentum_blocks(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.dim() / 2;
        let mut w = DMatrix::zeros(n, n);
        let mut t = DMatrix::zeros(n, n);
        for i in 0..self.dim() {
            for (j, v) in self.h.row(i) {
                match (i % 2, j % 2) {
                    (0, 0) => w[(i / 2, j / 2)] = v,
                    (1, 1) => t[(i / 2, j / 2)] = v,
                    _ => return None,
                }
            }
        }
        Some((w, t))
    }
}

/// System-bath Hamiltonian assembled in (position, momentum) block form.
struct BlockHamiltonian {
    w_sys: Matrix2<f64>,
    t_sys: Matrix2<f64>,
    /// Coupling of each bath coordinate to x1 and to x2.
    w_couple: Vec<f64>,
    /// Coupling of each bath momentum to p1 and to p2.
    t_couple: Vec<f64>,
}

impl BlockHamiltonian {
    fn assemble(&self, bath: &DiscreteBath) -> DriftMatrix {
        let n = bath.len();
        let dim = 4 + 2 * n;
        let mut e = Vec::with_capacity(4 * n + 8);
        for a in 0..2 {
            for b in a..2 {
                e.push((2 * a, 2 * b, self.w_sys[(a, b)]));
                e.push((2 * a + 1, 2 * b + 1, self.t_sys[(a, b)]));
            }
        }
        for k in 0..n {
            let (q, pi) = (4 + 2 * k, 5 + 2 * k);
            let (w, mk) = (bath.frequencies()[k], bath.masses()[k]);
            for a in 0..2 {
                e.push((2 * a, q, self.w_couple[k]));
                e.push((2 * a + 1, pi, self.t_couple[k]));
            }
            e.push((q, q, mk * w * w));
            e.push((pi, pi, 1.0 / mk));
        }
        DriftMatrix {
            h: SparseSymmetric::from_upper(dim, e),
            frequency_scale: bath.frequencies().last().copied().unwrap_or(1.0),
            recurrence_time: Some(bath.recurrence_time()),
        }
    }

    /// Positive definiteness via the 2x2 Schur complements of the arrow-shaped blocks.
    fn check_stability(&self, bath: &DiscreteBath) -> Result<()> {
        let ones = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        let mut sw = 0.0;
        let mut st = 0.0;
        for k in 0..bath.len() {
            let (w, mk) = (bath.frequencies()[k], bath.masses()[k]);
            sw += self.w_couple[k].powi(2) / (mk * w * w);
            st += self.t_couple[k].powi(2) * mk;
        }
        for (name, block) in [
            ("potential", self.w_sys - ones * sw),
            ("kinetic", self.t_sys - ones * st),
        ] {
            let tr = block.trace();
            let det = block.determinant();
            let scale = block.abs().max().max(f64::MIN_POSITIVE);
            if !(tr > 0.0 && det > 1e-12 * scale * scale) {
                return Err(Error::Unstable(format!(
                    "effective {name} matrix after eliminating the bath is not positive definite \
                     (trace {tr:.6e}, determinant {det:.6e}); enable renormalization or reduce the coupling"
                )));
            }
        }
        Ok(())
    }
}

/// `(x1 + x2) Σ c_k q_k` coupling. With `renormalize`, the static bath shift
/// `κ = Σ c_k²/(m_k w_k²)` is added to the bare `ω_i²` and `c12` so that the
/// effective (bath-relaxed) parameters equal the requested ones.
pub fn build_position_model(
    osc: &OscillatorParams,
    bath: &DiscreteBath,
    renormalize: bool,
) -> Result<DriftMatrix> {
    osc.validate()?;
    let m = osc.mass;
    let shift = if renormalize { bath.static_shift() / m } else { 0.0 };
    let w1 = osc.omega1.powi(2) + shift;
    let w2 = osc.omega2.powi(2) + shift;
    let c12 = osc.c12 + shift;
    let block = BlockHamiltonian {
        w_sys: Matrix2::new(m * w1, m * c12, m * c12, m * w2),
        t_sys: Matrix2::new(1.0 / m, 0.0, 0.0, 1.0 / m),
        w_couple: bath.couplings().to_vec(),
        t_couple: vec![0.0; bath.len()],
    };
    block.check_stability(bath)?;
    Ok(block.assemble(bath))
}

/// Symmetric coupling: position coupling plus `(p1+p2)/(mΩ) Σ c_k/(m_k w_k) π_k`.
/// Renormalization shifts both the plus-mode stiffness and its inverse mass so
/// that the bath-relaxed plus mode has the requested `(m+, ω+)`.
pub fn build_symmetric_model(
    osc: &OscillatorParams,
    bath: &DiscreteBath,
    renormalize: bool,
) -> Result<DriftMatrix> {
    osc.validate()?;
    if !osc.is_resonant() {
        return Err(Error::Detuned {
            omega1: osc.omega1,
            omega2: osc.omega2,
        });
    }
    let (m, omega) = (osc.mass, osc.omega1);
    let (mp, wp2) = osc.normal_mode(CouplingModel::Symmetric, 1.0);
    let (mm, wm2) = osc.normal_mode(CouplingModel::Symmetric, -1.0);
    if !(mp > 0.0 && mm > 0.0) {
        return Err(Error::Unstable(format!(
            "momentum coupling c12_tilde = {} makes a normal-mode mass non-positive",
            osc.c12_tilde
        )));
    }
    let kappa = if renormalize { bath.static_shift() } else { 0.0 };
    let w_plus = mp * wp2 + 2.0 * kappa;
    let t_plus = 1.0 / mp + 2.0 * kappa / (m * omega).powi(2);
    let (w_minus, t_minus) = (mm * wm2, 1.0 / mm);
    let to_sites = |plus: f64, minus: f64| {
        let (s, d) = (0.5 * (plus + minus), 0.5 * (plus - minus));
        Matrix2::new(s, d, d, s)
    };
    let t_couple = bath
        .couplings()
        .iter()
        .zip(bath.frequencies())
        .zip(bath.masses())
        .map(|((&c, &w), &mk)| c / (m * omega * mk * w))
        .collect();
    let block = BlockHamiltonian {
        w_sys: to_sites(w_plus, w_minus),
        t_sys: to_sites(t_plus, t_minus),
        w_couple: bath.couplings().to_vec(),
        t_couple,
    };
    block.check_stability(bath)?;
    Ok(block.assemble(bath))
}

pub fn build_model(
    model: CouplingModel,
    osc: &OscillatorParams,
    bath: &DiscreteBath,
    renormalize: bool,
) -> Result<DriftMatrix> {
    match model {
        CouplingModel::Position => build_position_model(osc, bath, renormalize),
        CouplingModel::Symmetric => build_symmetric_model(osc, bath, renormalize),
    }
}
