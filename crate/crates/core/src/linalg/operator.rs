use nalgebra::{DMatrix, DVector};

/// Which eigenvector (or which action) of a non-symmetric operator is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A square linear map that is only available through its action.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64>;

    fn apply_side(&self, x: &DVector<f64>, side: Side) -> DVector<f64> {
        match side {
            Side::Right => self.apply(x),
            Side::Left => self.apply_transpose(x),
        }
    }

    /// Materializes the operator column by column. Intended for small
    /// dimensions only (tests and the dense fallback).
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e));
            e[j] = 0.0;
        }
        out
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols(), "operator must be square");
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }

    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply_transpose(x)
    }
}

/// Operator defined by a pair of closures (forward and transpose action).
pub struct FnOperator<F, G> {
    dim: usize,
    forward: F,
    transpose: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(dim: usize, forward: F, transpose: G) -> Self {
        Self {
            dim,
            forward,
            transpose,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.forward)(x)
    }
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.transpose)(x)
    }
}

/// `A - u vᵀ`: used to deflate the dominant spectral projector of a transfer
/// operator.
pub struct RankOneUpdate<O> {
    pub base: O,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl<O: LinearOperator> LinearOperator for RankOneUpdate<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.base.apply(x);
        y.axpy(-self.v.dot(x), &self.u, 1.0);
        y
    }
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.base.apply_transpose(x);
        y.axpy(-self.u.dot(x), &self.v, 1.0);
        y
    }
}

/// `I - A`.
pub struct IdentityMinus<O>(pub O);

impl<O: LinearOperator> LinearOperator for IdentityMinus<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x - self.0.apply(x)
    }
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        x - self.0.apply_transpose(x)
    }
}
