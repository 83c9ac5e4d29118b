//! Restarted GMRES for the environment equations `(I − T̃) x = b`.

use nalgebra::{DMatrix, DVector};

use super::operator::{IdentityMinus, LinearOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresConfig {
    /// Relative residual target `‖b − A x‖ ≤ tol · ‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restart: 30,
            max_iters: 3000,
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solves `A x = b` from the initial guess `x0` (zero when `None`).
pub fn gmres<O: LinearOperator + ?Sized>(
    a: &O,
    b: &DVector<f64>,
    x0: Option<&DVector<f64>>,
    cfg: &GmresConfig,
) -> Result<DVector<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Shape(format!(
            "rhs has length {}, operator {n}",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite right-hand side".into()));
    }
    let mut x = x0.cloned().unwrap_or_else(|| DVector::zeros(n));
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let target = cfg.tol * bnorm;
    let m = cfg.restart.max(1).min(n);
    let mut total = 0;
    let mut last_restart_resid = f64::INFINITY;

    loop {
        let r = b - a.apply(&x);
        let beta = r.norm();
        if beta <= target {
            return Ok(x);
        }
        if total >= cfg.max_iters || beta >= last_restart_resid * (1.0 - 1e-12) {
            return Err(Error::ConvergenceFailure {
                what: "GMRES",
                iterations: total,
                residual: beta / bnorm,
            });
        }
        last_restart_resid = beta;

        let mut v: Vec<DVector<f64>> = vec![r / beta];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let mut used = 0;

        for j in 0..m {
            let mut w = a.apply(&v[j]);
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = vi.dot(&w);
                    h[(i, j)] += c;
                    w.axpy(-c, vi, 1.0);
                }
            }
            let hn = w.norm();
            h[(j + 1, j)] = hn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let (c, s) = givens(h[(j, j)], h[(j + 1, j)]);
            cs[j] = c;
            sn[j] = s;
            h[(j, j)] = c * h[(j, j)] + s * h[(j + 1, j)];
            h[(j + 1, j)] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            used = j + 1;
            total += 1;
            // lucky breakdown: the Krylov space is invariant
            if g[j + 1].abs() <= target || hn <= 1e-14 * beta || total >= cfg.max_iters {
                break;
            }
            v.push(w / hn);
        }

        let mut y = DVector::<f64>::zeros(used);
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in (i + 1)..used {
                s -= h[(i, k)] * y[k];
            }
            if h[(i, i)] == 0.0 {
                return Err(Error::IllConditioned {
                    what: "GMRES",
                    detail: "singular Hessenberg projection".into(),
                });
            }
            y[i] = s / h[(i, i)];
        }
        for i in 0..used {
            x.axpy(y[i], &v[i], 1.0);
        }
    }
}

/// Solves `(I − T̃) x = b` for a deflated transfer operator `T̃`.
pub fn solve_deflated<O: LinearOperator>(
    t_tilde: O,
    b: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    let cfg = GmresConfig {
        tol,
        ..GmresConfig::default()
    };
    gmres(&IdentityMinus(t_tilde), b, None, &cfg)
}
