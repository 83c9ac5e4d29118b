//! Brute-force references: explicit transfer matrices, dense finite rings and
//! dense Trotter products. Exponential in the ring length, for validation
//! only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::itr::TransferOp;
use crate::itr2::Itr2State;
use crate::linalg::{
    dominant_eigenpair_with, expm_neg_sym, spectral_norm, EigConfig, FnOperator, Side,
};

pub const MAX_DENSE_RANK: usize = 8;
pub const MAX_RING_DIM: usize = 4096;

/// The explicit `r² × r²` matrix `Π_k Σ_i X_k(i) ⊗ X_k(i)` of a transfer
/// operator (weights already folded into its cores).
pub fn dense_transfer(op: &TransferOp) -> Result<DMatrix<f64>> {
    let r = op.bond_dim();
    if op
        .cores()
        .iter()
        .any(|c| c.r_left().max(c.r_right()) > MAX_DENSE_RANK)
    {
        return Err(Error::TooLarge(format!(
            "dense transfer matrix needs r ≤ {MAX_DENSE_RANK}"
        )));
    }
    let mut out = DMatrix::identity(r * r, r * r);
    for c in op.cores() {
        let mut t = DMatrix::zeros(c.r_left().pow(2), c.r_right().pow(2));
        for s in c.slices() {
            t += s.kronecker(s);
        }
        out *= t;
    }
    Ok(out)
}

fn ring_dim(d: usize, l: usize) -> Result<usize> {
    let mut n = 1usize;
    for _ in 0..l {
        n = n.saturating_mul(d);
        if n > MAX_RING_DIM {
            return Err(Error::TooLarge(format!("{d}^{l} exceeds {MAX_RING_DIM}")));
        }
    }
    Ok(n)
}

fn gate_d(m: &DMatrix<f64>) -> Result<usize> {
    let n = m.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if m.ncols() != n || d * d != n || d == 0 {
        return Err(Error::Shape(format!(
            "{:?} is not a two-site gate",
            m.shape()
        )));
    }
    Ok(d)
}

/// Applies a two-site matrix to sites `a` and `b` of a length-`l` ring.
/// Site 0 is the most significant digit of the basis index.
fn apply_bond(
    g: &DMatrix<f64>,
    d: usize,
    l: usize,
    a: usize,
    b: usize,
    x: &DVector<f64>,
) -> DVector<f64> {
    let sa = d.pow((l - 1 - a) as u32);
    let sb = d.pow((l - 1 - b) as u32);
    let mut out = DVector::zeros(x.len());
    for n in 0..x.len() {
        let (ia, ib) = ((n / sa) % d, (n / sb) % d);
        let base = n - ia * sa - ib * sb;
        let row = ia * d + ib;
        let mut acc = 0.0;
        for ka in 0..d {
            for kb in 0..d {
                let gv = g[(row, ka * d + kb)];
                if gv != 0.0 {
                    acc += gv * x[base + ka * sa + kb * sb];
                }
            }
        }
        out[n] = acc;
    }
    out
}

fn bonds(l: usize, periodic: bool) -> Vec<(usize, usize)> {
    let n = if periodic { l } else { l - 1 };
    (0..n).map(|k| (k, (k + 1) % l)).collect()
}

/// Applies the chain Hamiltonian `Σ_k M_{k,k+1}` to `x`.
pub fn apply_chain_hamiltonian(
    m: &DMatrix<f64>,
    l: usize,
    periodic: bool,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = gate_d(m)?;
    if x.len() != ring_dim(d, l)? {
        return Err(Error::Shape(format!(
            "vector of length {} on {l} sites of dimension {d}",
            x.len()
        )));
    }
    let mut out = DVector::zeros(x.len());
    for (a, b) in bonds(l, periodic) {
        out += apply_bond(m, d, l, a, b, x);
    }
    Ok(out)
}

/// Dense chain Hamiltonian.
pub fn chain_hamiltonian(m: &DMatrix<f64>, l: usize, periodic: bool) -> Result<DMatrix<f64>> {
    let d = gate_d(m)?;
    let n = ring_dim(d, l)?;
    let mut h = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        h.set_column(j, &apply_chain_hamiltonian(m, l, periodic, &e)?);
        e[j] = 0.0;
    }
    Ok(h)
}

/// Smallest eigenvalue `E₀` of the chain Hamiltonian and `E₀ / L`.
pub fn finite_chain_ground(m: &DMatrix<f64>, l: usize, periodic: bool) -> Result<(f64, f64)> {
    let d = gate_d(m)?;
    if l < 2 {
        return Err(Error::InvalidInput("chain needs at least two sites".into()));
    }
    let n = ring_dim(d, l)?;
    let nb = bonds(l, periodic).len() as f64;
    let shift = nb * spectral_norm(m);
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        x * shift - apply_chain_hamiltonian(m, l, periodic, x).expect("dimension checked")
    };
    let op = FnOperator::new(n, apply, apply);
    let cfg = EigConfig {
        tol: 1e-11,
        krylov_dim: 60,
        max_restarts: 2000,
        reject_degenerate: false,
        ..EigConfig::default()
    };
    let (mu, _) = dominant_eigenpair_with(&op, Side::Right, &cfg)?;
    let e0 = shift - mu;
    Ok((e0, e0 / l as f64))
}

/// `exp(−H_even t) exp(−H_odd t) x` on a ring of even length `l`: bonds
/// `(2k, 2k+1)` first, then `(2k+1, 2k+2)`.
pub fn dense_trotter_ring(
    m: &DMatrix<f64>,
    l: usize,
    t: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = gate_d(m)?;
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("ring length {l} must be even")));
    }
    if x.len() != ring_dim(d, l)? {
        return Err(Error::Shape(format!(
            "vector of length {} on {l} sites",
            x.len()
        )));
    }
    let g = expm_neg_sym(m, t)?;
    let mut y = x.clone();
    for k in (0..l).step_by(2) {
        y = apply_bond(&g, d, l, k, k + 1, &y);
    }
    for k in (1..l).step_by(2) {
        y = apply_bond(&g, d, l, k, (k + 1) % l, &y);
    }
    Ok(y)
}

/// `exp(−H t) x` for the periodic chain, by dense diagonalization.
pub fn dense_exact_ring(
    m: &DMatrix<f64>,
    l: usize,
    t: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let h = chain_hamiltonian(m, l, true)?;
    Ok(expm_neg_sym(&h, t)? * x)
}

/// Entries `tr(X(s₀) Y(s₁) X(s₂) ⋯)` of the two-core ring restricted to `l`
/// sites, with `X = QΣ` and `Y = UΩ`.
pub fn ring_vector(state: &Itr2State, l: usize) -> Result<DVector<f64>> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("ring length {l} must be even")));
    }
    let d = state.d();
    let n = ring_dim(d, l)?;
    let (x, y) = state.ring_cores();
    let mut out = DVector::zeros(n);
    for idx in 0..n {
        let mut rem = idx;
        let mut digits = vec![0; l];
        for k in (0..l).rev() {
            digits[k] = rem % d;
            rem /= d;
        }
        let mut acc = x.slice(digits[0]).clone();
        for (k, &s) in digits.iter().enumerate().skip(1) {
            acc = if k % 2 == 0 {
                acc * x.slice(s)
            } else {
                acc * y.slice(s)
            };
        }
        out[idx] = acc.trace();
    }
    Ok(out)
}

/// `⟨x, M_{a,a+1} x⟩ / ⟨x, x⟩` on a ring of length `l`.
pub fn ring_bond_expectation(
    m: &DMatrix<f64>,
    l: usize,
    a: usize,
    x: &DVector<f64>,
) -> Result<f64> {
    let d = gate_d(m)?;
    if x.len() != ring_dim(d, l)? {
        return Err(Error::Shape(format!(
            "vector of length {} on {l} sites",
            x.len()
        )));
    }
    Ok(x.dot(&apply_bond(m, d, l, a, (a + 1) % l, x)) / x.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_gate, ModelSpec};
    use crate::tensor::Core;

    #[test]
    fn scalar_and_identity_transfer() {
        let x = Core::scalar(&[2.0, 3.0]).unwrap();
        let t = dense_transfer(&TransferOp::plain(&x).unwrap()).unwrap();
        assert_eq!(t[(0, 0)], 13.0);
        let i = Core::new(vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)]).unwrap();
        let t = dense_transfer(&TransferOp::plain(&i).unwrap()).unwrap();
        assert_eq!(t, DMatrix::identity(4, 4));
    }

    #[test]
    fn guard_rejects_large_rank() {
        let x = Core::new(vec![DMatrix::identity(9, 9)]).unwrap();
        assert!(matches!(
            dense_transfer(&TransferOp::plain(&x).unwrap()),
            Err(Error::TooLarge(_))
        ));
        let m = build_gate(&ModelSpec::Ising { g: 1.0 }).unwrap();
        assert!(matches!(
            finite_chain_ground(&m, 14, true),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn two_site_ring() {
        let m = build_gate(&ModelSpec::Ising { g: 0.0 }).unwrap();
        let (e0, per) = finite_chain_ground(&m, 2, true).unwrap();
        assert!((e0 + 2.0).abs() < 1e-10 && (per + 1.0).abs() < 1e-10);
    }

    #[test]
    fn heisenberg_four_ring() {
        let m = build_gate(&ModelSpec::HeisenbergHalf).unwrap();
        let (e0, _) = finite_chain_ground(&m, 4, true).unwrap();
        assert!((e0 + 2.0).abs() < 1e-10, "{e0}");
        let dense = chain_hamiltonian(&m, 4, true).unwrap();
        let lo = dense.symmetric_eigenvalues().min();
        assert!((lo - e0).abs() < 1e-10);
    }

    #[test]
    fn trotter_at_zero_time() {
        let m = build_gate(&ModelSpec::Ising { g: 2.0 }).unwrap();
        let x = DVector::from_fn(64, |i, _| (i as f64).sin());
        assert!((dense_trotter_ring(&m, 6, 0.0, &x).unwrap() - &x).norm() < 1e-14);
    }

    #[test]
    fn commuting_split_is_exact() {
        let m = build_gate(&ModelSpec::Ising { g: 0.0 }).unwrap();
        let x = DVector::from_fn(64, |i, _| (i as f64 * 0.7).cos());
        let a = dense_trotter_ring(&m, 6, 0.3, &x).unwrap();
        let b = dense_exact_ring(&m, 6, 0.3, &x).unwrap();
        assert!((a - b).norm() < 1e-12);
    }
}
