//! Benchmark nearest-neighbour gates and their exact smallest eigenvalues.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ising,
    HeisenbergS1,
    HeisenbergHalf,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ising => "ising",
            ModelKind::HeisenbergS1 => "heisenberg-s1",
            ModelKind::HeisenbergHalf => "heisenberg-half",
        }
    }

    pub fn d(self) -> usize {
        match self {
            ModelKind::HeisenbergS1 => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising" => Ok(ModelKind::Ising),
            "heisenberg-s1" => Ok(ModelKind::HeisenbergS1),
            "heisenberg-half" => Ok(ModelKind::HeisenbergHalf),
            other => Err(Error::InvalidParam(format!("unknown model '{other}'"))),
        }
    }
}

/// A model and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Transverse-field Ising chain with field `g`.
    Ising { g: f64 },
    /// Spin-1 XXZ chain with anisotropy `delta`.
    HeisenbergS1 { delta: f64 },
    /// Spin-1/2 isotropic Heisenberg chain.
    HeisenbergHalf,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Ising { .. } => ModelKind::Ising,
            ModelSpec::HeisenbergS1 { .. } => ModelKind::HeisenbergS1,
            ModelSpec::HeisenbergHalf => ModelKind::HeisenbergHalf,
        }
    }

    pub fn d(&self) -> usize {
        self.kind().d()
    }
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `X⊗X + Y⊗Y + Δ·Z⊗Z` with `Y = i·y`, so that `Y⊗Y = −y⊗y` is real.
fn xxz(x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let m = kron(x, x) - kron(y, y) + kron(z, z) * delta;
    (&m + m.transpose()) * 0.5
}

/// Spin-1 generators `(X, Y/i, Z)`.
pub fn spin_one() -> [DMatrix<f64>; 3] {
    let h = 1.0 / 2f64.sqrt();
    [
        DMatrix::from_row_slice(3, 3, &[0.0, h, 0.0, h, 0.0, h, 0.0, h, 0.0]),
        DMatrix::from_row_slice(3, 3, &[0.0, -h, 0.0, h, 0.0, -h, 0.0, h, 0.0]),
        DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
    ]
}

/// Spin-1/2 generators `(σx/2, σy/(2i), σz/2)`.
pub fn spin_half() -> [DMatrix<f64>; 3] {
    [
        DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
    ]
}

/// Real symmetric `d² × d²` two-site interaction matrix.
pub fn build_gate(spec: &ModelSpec) -> Result<DMatrix<f64>> {
    match *spec {
        ModelSpec::Ising { g } => {
            if !g.is_finite() {
                return Err(Error::InvalidParam(format!("field g = {g} must be finite")));
            }
            Ok(DMatrix::from_row_slice(
                4,
                4,
                &[
                    -1.0, -g, 0.0, 0.0, //
                    -g, 1.0, 0.0, 0.0, //
                    0.0, 0.0, 1.0, -g, //
                    0.0, 0.0, -g, -1.0,
                ],
            ))
        }
        ModelSpec::HeisenbergS1 { delta } => {
            if !delta.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "anisotropy Δ = {delta} must be finite"
                )));
            }
            let [x, y, z] = spin_one();
            Ok(xxz(&x, &y, &z, delta))
        }
        ModelSpec::HeisenbergHalf => {
            let [x, y, z] = spin_half();
            Ok(xxz(&x, &y, &z, 1.0))
        }
    }
}

/// Reference smallest eigenvalue per bond, when known.
pub fn exact_eigenvalue(spec: &ModelSpec) -> Option<f64> {
    match *spec {
        ModelSpec::Ising { g } if g.is_finite() => Some(ising_ground_energy(g)),
        ModelSpec::Ising { .. } => None,
        ModelSpec::HeisenbergS1 { delta: 1.0 } => Some(-1.401_484_038_971_2),
        ModelSpec::HeisenbergS1 { .. } => None,
        ModelSpec::HeisenbergHalf => Some(0.25 - 2f64.ln()),
    }
}

/// `−(1/2π) ∫_{−π}^{π} √(1 + g² − 2g cos x) dx`.
pub fn ising_ground_energy(g: f64) -> f64 {
    let f = |x: f64| (1.0 + g * g - 2.0 * g * x.cos()).max(0.0).sqrt();
    // even integrand; the only kink (g = ±1) sits at an endpoint
    -gauss_kronrod_adaptive(&f, 0.0, PI, 1e-14) / PI
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn gauss_kronrod_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (k, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return k;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 40)
}
