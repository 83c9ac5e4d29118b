use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real matrix. Column-major storage; `vec(A)` is `A.as_slice()`.
pub type DenseMatrix = DMatrix<f64>;

/// Relative threshold below which singular values count as zero.
const SVD_RANK_EPS: f64 = 1e-14;

/// Rank-`k` factorization `A ≈ u · diag(s) · vᵀ` with `k ≤ r`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Left singular vectors, `m × k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Kept singular values, descending.
    pub s: Vec<f64>,
    /// Right singular vectors, `n × k`, orthonormal columns.
    pub v: DenseMatrix,
    /// Sum of squares of every singular value that was dropped.
    pub discarded_sq: f64,
    /// Sum of squares of all singular values (`‖A‖_F²`).
    pub total_sq: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.transpose()
    }

    /// Relative discarded weight `sqrt(discarded / total)`.
    pub fn relative_error(&self) -> f64 {
        if self.total_sq > 0.0 {
            (self.discarded_sq / self.total_sq).sqrt()
        } else {
            0.0
        }
    }
}

fn ensure_finite(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )))
    }
}

/// Flips `v` so that its entry of largest magnitude is positive. Returns
/// `true` when a flip happened.
pub fn fix_sign(v: &mut [f64]) -> bool {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// Best rank-`r` approximation in the Frobenius norm.
///
/// Singular values below `1e-14 · s_max` are dropped even when `r` would
/// allow them; at least one triple is always returned. Each left singular
/// vector is sign-normalized (largest entry positive) together with its
/// right partner.
pub fn truncated_svd(a: &DenseMatrix, r: usize) -> Result<TruncatedSvd> {
    if r == 0 {
        return Err(Error::InvalidInput(
            "truncation rank must be positive".into(),
        ));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    ensure_finite(a, "SVD input")?;

    let fa = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = fa.thin_svd().map_err(|e| Error::IllConditioned {
        what: "SVD input",
        detail: format!("{e:?}"),
    })?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let sv: Vec<f64> = fs.iter().copied().collect();
    let u_full = DMatrix::from_fn(fu.nrows(), fu.ncols(), |i, j| fu[(i, j)]);
    let v_full = DMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]);

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));

    let total_sq: f64 = sv.iter().map(|s| s * s).sum();
    let s_max = sv[order[0]];
    let numerical_rank = order
        .iter()
        .take_while(|&&i| sv[i] > SVD_RANK_EPS * s_max)
        .count();
    let k = r.min(numerical_rank).max(1);

    let mut u = DMatrix::zeros(a.nrows(), k);
    let mut v = DMatrix::zeros(a.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let mut ucol: Vec<f64> = u_full.column(idx).iter().copied().collect();
        let mut vcol: Vec<f64> = v_full.column(idx).iter().copied().collect();
        if fix_sign(&mut ucol) {
            vcol.iter_mut().for_each(|x| *x = -*x);
        }
        u.set_column(col, &DVector::from_vec(ucol));
        v.set_column(col, &DVector::from_vec(vcol));
        s.push(sv[idx]);
    }
    let kept_sq: f64 = s.iter().map(|x| x * x).sum();
    Ok(TruncatedSvd {
        u,
        s,
        v,
        discarded_sq: (total_sq - kept_sq).max(0.0),
        total_sq,
    })
}

/// `‖A − Aᵀ‖_F`.
pub fn frobenius_asymmetry(a: &DenseMatrix) -> f64 {
    (a - a.transpose()).norm()
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn sym_eigen_ascending(a: &DenseMatrix) -> (DVector<f64>, DenseMatrix) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// `exp(−M t)` for symmetric `M`, via `M = V Λ Vᵀ`.
///
/// Any finite `t` is accepted; negative values give the inverse exponential.
pub fn expm_neg_sym(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expm_neg_sym needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("timestep {t} is not finite")));
    }
    ensure_finite(m, "matrix exponential input")?;
    let scale = m.norm();
    if frobenius_asymmetry(m) > 1e-12 * scale {
        return Err(Error::InvalidInput(
            "matrix exponential input is not symmetric".into(),
        ));
    }
    let (vals, vecs) = sym_eigen_ascending(m);
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut((-lam * t).exp());
    }
    let out = scaled * vecs.transpose();
    Ok((&out + out.transpose()) * 0.5)
}
