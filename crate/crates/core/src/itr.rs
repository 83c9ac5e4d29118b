//! Single-core infinite tensor rings: transfer operators, the norm factor and
//! the canonical decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenpair, sym_eigen_ascending, truncated_svd, LinearOperator, Side};
use crate::tensor::{BondWeights, Core};

/// Relative cut below which eigenvalues of the symmetrized fixed points are
/// treated as zero.
pub const FIXED_POINT_CLAMP: f64 = 1e-14;

/// `Σ_i X(i) V X(i)ᵀ`.
pub fn transfer_right(x: &Core, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.r_left(), x.r_left());
    for s in x.slices() {
        out += s * v * s.transpose();
    }
    out
}

/// `Σ_i X(i)ᵀ V X(i)`.
pub fn transfer_left(x: &Core, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.r_right(), x.r_right());
    for s in x.slices() {
        out += s.transpose() * v * s;
    }
    out
}

/// How bond weights were folded into the core of a [`TransferOp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Plain,
    /// `Σ·X(i)`
    LeftWeighted,
    /// `X(i)·Σ`
    RightWeighted,
}

/// Matrix-free transfer operator `T_{X_1} T_{X_2} ⋯` acting on column-major
/// `vec(V)` of length `r²`.
#[derive(Debug, Clone)]
pub struct TransferOp {
    flavor: Flavor,
    cores: Vec<Core>,
}

impl TransferOp {
    /// Transfer operator of the ring `… X_1 X_2 ⋯ X_n X_1 …`.
    pub fn chain(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Shape("transfer operator needs a core".into()));
        }
        for w in cores.windows(2) {
            if w[0].r_right() != w[1].r_left() {
                return Err(Error::Shape(format!(
                    "consecutive cores have ranks {} and {}",
                    w[0].r_right(),
                    w[1].r_left()
                )));
            }
        }
        let (first, last) = (&cores[0], &cores[cores.len() - 1]);
        if first.r_left() != last.r_right() {
            return Err(Error::Shape(format!(
                "chain does not close: left rank {}, right rank {}",
                first.r_left(),
                last.r_right()
            )));
        }
        Ok(Self {
            flavor: Flavor::Plain,
            cores,
        })
    }

    pub fn plain(x: &Core) -> Result<Self> {
        Self::chain(vec![x.clone()])
    }

    pub fn left_weighted(x: &Core, w: &BondWeights) -> Result<Self> {
        let mut op = Self::chain(vec![x.left_diag(w.as_slice())])?;
        op.flavor = Flavor::LeftWeighted;
        Ok(op)
    }

    pub fn right_weighted(x: &Core, w: &BondWeights) -> Result<Self> {
        let mut op = Self::chain(vec![x.right_diag(w.as_slice())])?;
        op.flavor = Flavor::RightWeighted;
        Ok(op)
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn bond_dim(&self) -> usize {
        self.cores[0].r_left()
    }

    pub fn apply_matrix(&self, v: &DMatrix<f64>, side: Side) -> DMatrix<f64> {
        match side {
            Side::Right => self
                .cores
                .iter()
                .rev()
                .fold(v.clone(), |acc, c| transfer_right(c, &acc)),
            Side::Left => self
                .cores
                .iter()
                .fold(v.clone(), |acc, c| transfer_left(c, &acc)),
        }
    }
}

fn as_matrix(v: &DVector<f64>, r: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(r, r, v.as_slice())
}

fn as_vector(m: DMatrix<f64>) -> DVector<f64> {
    let n = m.len();
    DVector::from_vec(
        m.reshape_generic(nalgebra::Dyn(n), nalgebra::Const::<1>)
            .data
            .into(),
    )
}

impl LinearOperator for TransferOp {
    fn dim(&self) -> usize {
        self.bond_dim() * self.bond_dim()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        transfer_apply(self, x, Side::Right)
    }

    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        transfer_apply(self, x, Side::Left)
    }
}

/// Right action `Σ X V Xᵀ` or left action `Σ Xᵀ V X` on `vec(V)`.
pub fn transfer_apply(op: &TransferOp, v: &DVector<f64>, side: Side) -> DVector<f64> {
    let r = op.bond_dim();
    as_vector(op.apply_matrix(&as_matrix(v, r), side))
}

/// Normalized canonical single-core iTR: `Σ_i (ΣQ(i))ᵀ(ΣQ(i)) = I` and
/// `Σ_i (Q(i)Σ)(Q(i)Σ)ᵀ = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalItr {
    pub q: Core,
    pub sigma: BondWeights,
    /// Dominant transfer eigenvalue of `Q`; 1 after normalization.
    pub eta: f64,
    /// Dominant transfer eigenvalue of the input core.
    pub input_eta: f64,
}

/// Dominant eigenvalue `η` of `T_X`; the iTR is normalized iff `η = 1`.
pub fn itr_norm_factor(x: &Core) -> Result<f64> {
    let op = TransferOp::plain(x)?;
    Ok(dominant_eigenpair(&op, Side::Right, 1e-12)?.0)
}

/// `U Λ^{1/2}` of the symmetrized, sign-fixed fixed point, dropping clamped
/// directions. Also returns `U Λ^{-1/2}` (the transposed pseudo-inverse).
fn half_factor(
    v: &DVector<f64>,
    r: usize,
    which: &'static str,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = as_matrix(v, r);
    let mut sym = (&m + m.transpose()) * 0.5;
    if sym.trace() < 0.0 {
        sym.neg_mut();
    }
    let (vals, vecs) = sym_eigen_ascending(&sym);
    let lmax = vals[vals.len() - 1];
    if !(lmax.is_finite() && lmax > 0.0) {
        return Err(Error::IllConditioned {
            what: which,
            detail: format!("largest fixed-point eigenvalue is {lmax:e}"),
        });
    }
    let kept: Vec<usize> = (0..r)
        .filter(|&i| vals[i] > FIXED_POINT_CLAMP * lmax)
        .collect();
    let mut half = DMatrix::zeros(r, kept.len());
    let mut inv_half = DMatrix::zeros(r, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        let s = vals[i].sqrt();
        half.set_column(c, &(vecs.column(i) * s));
        inv_half.set_column(c, &(vecs.column(i) / s));
    }
    Ok((half, inv_half))
}

/// Canonical decomposition of a single-core iTR.
///
/// Fixed-point eigenvalues below `1e-14` of the largest are dropped, so the
/// returned bond dimension can be smaller than the input one when the fixed
/// points are numerically rank deficient.
pub fn canonicalize(x: &Core, tol: f64) -> Result<CanonicalItr> {
    if x.r_left() != x.r_right() {
        return Err(Error::Shape(format!(
            "single-core ring needs a square core, got {}×{}",
            x.r_left(),
            x.r_right()
        )));
    }
    let r = x.r_left();
    let op = TransferOp::plain(x)?;
    let (eta, v_r) = dominant_eigenpair(&op, Side::Right, tol)?;
    let (_, v_l) = dominant_eigenpair(&op, Side::Left, tol)?;
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::IllConditioned {
            what: "transfer operator",
            detail: format!("dominant eigenvalue {eta:e} is not positive"),
        });
    }
    let (ul, ul_pinv_t) = half_factor(&v_l, r, "left fixed point")?;
    let (ur, ur_pinv_t) = half_factor(&v_r, r, "right fixed point")?;

    let svd = truncated_svd(&(ul.transpose() * &ur), r)?;
    let s_norm = svd.s.iter().map(|s| s * s).sum::<f64>().sqrt();
    // L = Wᵀ Ũ_R⁺ and R = Ũ_L⁺ᵀ V
    let l = svd.v.transpose() * ur_pinv_t.transpose();
    let rr = ul_pinv_t * &svd.u;
    let scale = s_norm / eta.sqrt();
    let q = x.map_slices(|s| &l * s * &rr * scale);
    let sigma = BondWeights::new(svd.s.iter().map(|s| s / s_norm).collect())?;
    Ok(CanonicalItr {
        q,
        sigma,
        eta: 1.0,
        input_eta: eta,
    })
}

impl CanonicalItr {
    /// `‖Σ_i (ΣQ(i))ᵀ(ΣQ(i)) − I‖_F`.
    pub fn left_orthogonality_residual(&self) -> f64 {
        let ql = self.q.left_diag(self.sigma.as_slice());
        let k = ql.r_right();
        (transfer_left(&ql, &DMatrix::identity(k, k)) - DMatrix::identity(k, k) * self.eta).norm()
    }

    /// `‖Σ_i (Q(i)Σ)(Q(i)Σ)ᵀ − I‖_F`.
    pub fn right_orthogonality_residual(&self) -> f64 {
        let qr = self.q.right_diag(self.sigma.as_slice());
        let k = qr.r_left();
        (transfer_right(&qr, &DMatrix::identity(k, k)) - DMatrix::identity(k, k) * self.eta).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_core() {
        let x = Core::scalar(&[3.0, 4.0]).unwrap();
        assert!((itr_norm_factor(&x).unwrap() - 25.0).abs() < 1e-12);
        let c = canonicalize(&x, 1e-12).unwrap();
        assert!((c.q.slice(0)[(0, 0)] - 0.6).abs() < 1e-14);
        assert!((c.q.slice(1)[(0, 0)] - 0.8).abs() < 1e-14);
        assert_eq!(c.sigma.as_slice(), &[1.0]);
        assert_eq!(c.eta, 1.0);
    }

    #[test]
    fn identity_slice_is_identity_map() {
        let x = Core::new(vec![DMatrix::identity(3, 3), DMatrix::zeros(3, 3)]).unwrap();
        let op = TransferOp::plain(&x).unwrap();
        let v = DVector::from_fn(9, |i, _| i as f64 - 4.0);
        assert_eq!(transfer_apply(&op, &v, Side::Right), v);
        assert_eq!(transfer_apply(&op, &v, Side::Left), v);
    }

    #[test]
    fn chain_equals_composition() {
        let mut g = ChaCha8Rng::seed_from_u64(1);
        let x = Core::random(3, 2, 2, &mut g);
        let y = Core::random(2, 2, 3, &mut g);
        let op = TransferOp::chain(vec![x.clone(), y.clone()]).unwrap();
        let v = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let right = transfer_right(&x, &transfer_right(&y, &v));
        assert!((op.apply_matrix(&v, Side::Right) - right).norm() < 1e-12);
        let left = transfer_left(&y, &transfer_left(&x, &v));
        assert!((op.apply_matrix(&v, Side::Left) - left).norm() < 1e-12);
    }

    #[test]
    fn random_core_is_canonicalized() {
        let mut g = ChaCha8Rng::seed_from_u64(2);
        let x = Core::random(5, 3, 5, &mut g);
        let c = canonicalize(&x, 1e-12).unwrap();
        assert!(c.left_orthogonality_residual() < 1e-10);
        assert!(c.right_orthogonality_residual() < 1e-10);
        assert!((c.sigma.norm() - 1.0).abs() < 1e-14);
        // the ring represented is tr ∏ Q(i)Σ
        let e = itr_norm_factor(&c.q.right_diag(c.sigma.as_slice())).unwrap();
        assert!((e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaling_law() {
        let mut g = ChaCha8Rng::seed_from_u64(3);
        let x = Core::random(3, 2, 3, &mut g);
        let e = itr_norm_factor(&x).unwrap();
        let e2 = itr_norm_factor(&x.scaled(1.7)).unwrap();
        assert!((e2 - 1.7 * 1.7 * e).abs() < 1e-10 * e2);
    }

    #[test]
    fn degenerate_slices_rejected() {
        let x = Core::new(vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)]).unwrap();
        let err = canonicalize(&x, 1e-12).unwrap_err();
        assert!(matches!(err, Error::DegenerateDominance { .. }), "{err:?}");
    }

    #[test]
    fn rectangular_chain_rejected() {
        let mut g = ChaCha8Rng::seed_from_u64(4);
        let x = Core::random(2, 2, 3, &mut g);
        assert!(TransferOp::plain(&x).is_err());
    }
}
