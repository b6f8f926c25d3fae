//! Digamma and harmonic numbers for real and complex arguments.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// B_2k / 2k for k = 1..7
const ASYMPTOTIC: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

const SHIFT: f64 = 10.0;

fn series(z: Complex64) -> Complex64 {
    let w = 1.0 / (z * z);
    let mut poly = Complex64::new(0.0, 0.0);
    for c in ASYMPTOTIC.iter().rev() {
        poly = (poly + c) * w;
    }
    z.ln() - 0.5 / z - poly
}

/// Digamma of a complex argument. Uses reflection for `Re z < 1/2`, the
/// recurrence `ψ(z) = ψ(z+1) − 1/z` until `Re z ≥ 10`, then the asymptotic series.
pub fn digamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // ψ(1−z) − ψ(z) = π cot(πz)
        let pz = z * PI;
        return digamma_complex(1.0 - z) - PI * pz.cos() / pz.sin();
    }
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < SHIFT {
        acc -= 1.0 / z;
        z += 1.0;
    }
    acc + series(z)
}

pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    acc + series(Complex64::new(x, 0.0)).re
}

/// Harmonic number `H(z) = ψ(z+1) + γ_E`.
pub fn harmonic_number(z: Complex64) -> Complex64 {
    digamma_complex(z + 1.0) + EULER_GAMMA
}
