//! Finite residuals of infinite rings through deflated geometric sums, and
//! the projected averaged Hamiltonian.
//!
//! For a center core `C` with `k` cores of period to its left and right, the
//! contributions of all bond terms are collected in four pieces:
//!
//! ```text
//! L·C   all bonds strictly left of the neighbour bond   (left environment)
//! H₋₁C  the bond between the left neighbour and C
//! H₀C   the bond between C and the right neighbour
//! C·R   all bonds strictly right of the neighbour bond  (right environment)
//! ```
//!
//! `L` and `R` are infinite sums `Σ_ℓ T̃^ℓ s` of a deflated transfer operator
//! applied to a per-period seed, evaluated as one linear solve each.

use nalgebra::{DMatrix, DVector};

use super::rayleigh::rayleigh_quotient;
use super::state::{Centering, Itr2State};
use crate::error::{Error, Result};
use crate::itr::{CanonicalItr, TransferOp};
use crate::linalg::{
    dominant_eigenpair_with, solve_deflated, spectral_norm, EigConfig, FnOperator, LinearOperator,
    Side,
};
use crate::tensor::{apply_gate, merge, Core};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualConfig {
    /// Relative tolerance of the environment solves.
    pub solve_tol: f64,
    /// Worker threads for the independent environment solves.
    pub threads: usize,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            solve_tol: 1e-8,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// 2-norm of the concatenated `Q`- and `U`-centered residual parts.
    pub res_norm: f64,
    /// Mean of `theta1` and `theta2` (not the `theta` the residual was formed with).
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma_min: f64,
    pub omega_min: f64,
    pub q_part: Core,
    pub u_part: Core,
}

/// Transfer operator of one period with its dominant projector removed:
/// `v ↦ T(v) − I·tr(diag(w²)·V)`, acting on the given side.
#[derive(Debug, Clone)]
pub struct DeflatedTransfer {
    chain: TransferOp,
    weights_sq: Vec<f64>,
    side: Side,
}

impl DeflatedTransfer {
    fn new(chain: TransferOp, weights: &[f64], side: Side) -> Self {
        Self {
            chain,
            weights_sq: weights.iter().map(|w| w * w).collect(),
            side,
        }
    }

    fn r(&self) -> usize {
        self.weights_sq.len()
    }

    pub fn apply_matrix(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.chain.apply_matrix(v, self.side);
        let tr: f64 = self
            .weights_sq
            .iter()
            .enumerate()
            .map(|(k, w)| w * v[(k, k)])
            .sum();
        for k in 0..self.r() {
            out[(k, k)] -= tr;
        }
        out
    }

    fn apply_adjoint_matrix(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let other = match self.side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        let mut out = self.chain.apply_matrix(v, other);
        let tr = v.trace();
        for k in 0..self.r() {
            out[(k, k)] -= self.weights_sq[k] * tr;
        }
        out
    }
}

fn mat(v: &DVector<f64>, r: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(r, r, v.as_slice())
}

fn vect(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

impl LinearOperator for DeflatedTransfer {
    fn dim(&self) -> usize {
        self.r() * self.r()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        vect(&self.apply_matrix(&mat(x, self.r())))
    }

    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        vect(&self.apply_adjoint_matrix(&mat(x, self.r())))
    }
}

/// One side of a frame: its seed, deflated operator and solved environment.
#[derive(Debug, Clone)]
pub struct Environment {
    pub seed: DMatrix<f64>,
    pub op: DeflatedTransfer,
    pub env: DMatrix<f64>,
}

/// Environments around one center core.
#[derive(Debug, Clone)]
pub struct FrameEnvironment {
    pub left: Environment,
    pub right: Environment,
}

/// Cores of one period around a center, in the order of increasing distance.
struct Frame {
    center: Core,
    /// Left-orthonormal neighbours, nearest first.
    left: Vec<Core>,
    /// Right-orthonormal neighbours, nearest first.
    right: Vec<Core>,
    /// Weights between the center core and its left / right neighbour.
    w_left: Vec<f64>,
    w_right: Vec<f64>,
}

impl Frame {
    /// Ring `… A wA B wB A …` centered on `A`.
    fn two_core(s: &Itr2State) -> Self {
        let (a, wa, b, wb) = (&s.q, s.sigma.as_slice(), &s.u, s.omega.as_slice());
        Self {
            center: a.left_diag(wb).right_diag(wa),
            left: vec![b.left_diag(wa), a.left_diag(wb)],
            right: vec![b.right_diag(wb), a.right_diag(wa)],
            w_left: wb.to_vec(),
            w_right: wa.to_vec(),
        }
    }

    fn single(c: &CanonicalItr) -> Self {
        let w = c.sigma.as_slice();
        Self {
            center: c.q.left_diag(w).right_diag(w),
            left: vec![c.q.left_diag(w)],
            right: vec![c.q.right_diag(w)],
            w_left: w.to_vec(),
            w_right: w.to_vec(),
        }
    }
}

/// `Σ_{ij} P(ij) Z(ij)ᵀ` (right) or `Σ_{ij} Z(ij)ᵀ P(ij)` (left) with
/// `P = M·Z` and `Z = merge(X, Y)`.
fn bond_seed(m: &DMatrix<f64>, x: &Core, y: &Core, side: Side) -> Result<DMatrix<f64>> {
    let z = merge(x, y)?;
    let p = apply_gate(m, &z)?;
    let mut out = match side {
        Side::Right => DMatrix::zeros(z.r_left(), z.r_left()),
        Side::Left => DMatrix::zeros(z.r_right(), z.r_right()),
    };
    for (zs, ps) in z.slices().iter().zip(p.slices()) {
        match side {
            Side::Right => out += ps * zs.transpose(),
            Side::Left => out += zs.transpose() * ps,
        }
    }
    Ok(out)
}

/// Environment on one side of the frame. The seed collects the bonds of one
/// period beyond the neighbour bond, transported to the center:
/// `s_R = Σ_k T_{R_1}⋯T_{R_{k-1}} h_R(R_k, R_{k+1})` and its mirror image.
fn environment(f: &Frame, m: &DMatrix<f64>, side: Side, tol: f64) -> Result<Environment> {
    let (cores, weights) = match side {
        Side::Right => (&f.right, &f.w_right),
        Side::Left => (&f.left, &f.w_left),
    };
    let p = cores.len();
    let pair = |k: usize| -> Result<DMatrix<f64>> {
        let (near, far) = (&cores[k], &cores[(k + 1) % p]);
        match side {
            Side::Right => bond_seed(m, near, far, Side::Right),
            Side::Left => bond_seed(m, far, near, Side::Left),
        }
    };
    let mut seed = pair(p - 1)?;
    for k in (0..p - 1).rev() {
        seed = match side {
            Side::Right => crate::itr::transfer_right(&cores[k], &seed),
            Side::Left => crate::itr::transfer_left(&cores[k], &seed),
        } + pair(k)?;
    }
    let chain = match side {
        Side::Right => cores.clone(),
        Side::Left => cores.iter().rev().cloned().collect(),
    };
    let op = DeflatedTransfer::new(TransferOp::chain(chain)?, weights, side);
    let r = weights.len();
    let env = mat(&solve_deflated(&op, &vect(&seed), tol)?, r);
    Ok(Environment { seed, op, env })
}

fn frame_environment_of(f: &Frame, m: &DMatrix<f64>, tol: f64) -> Result<FrameEnvironment> {
    Ok(FrameEnvironment {
        left: environment(f, m, Side::Left, tol)?,
        right: environment(f, m, Side::Right, tol)?,
    })
}

/// Environments around the `Q` or `U` center of a canonical state.
pub fn frame_environment(
    state: &Itr2State,
    m: &DMatrix<f64>,
    centering: Centering,
    solve_tol: f64,
) -> Result<FrameEnvironment> {
    let s = match centering {
        Centering::Q => state.clone(),
        Centering::U => state.swapped(),
    };
    frame_environment_of(&Frame::two_core(&s), m, solve_tol)
}

/// `L·C + H₋₁C + H₀C + C·R` for an arbitrary core `c` in the frame basis.
fn frame_sum(f: &Frame, env: &FrameEnvironment, m: &DMatrix<f64>, c: &Core) -> Result<Core> {
    let d = c.d();
    let b_r = &f.right[0];
    let b_l = &f.left[0];
    let p0 = apply_gate(m, &merge(c, b_r)?)?;
    let pm = apply_gate(m, &merge(b_l, c)?)?;
    let slices = (0..d)
        .map(|i| {
            let mut out = &env.left.env * c.slice(i) + c.slice(i) * &env.right.env;
            for j in 0..d {
                out += p0.slice(i, j) * b_r.slice(j).transpose();
                out += b_l.slice(j).transpose() * pm.slice(j, i);
            }
            out
        })
        .collect();
    Core::new(slices)
}

fn axpy_core(a: &Core, alpha: f64, c: &Core, beta: f64) -> Core {
    let slices = a
        .slices()
        .iter()
        .zip(c.slices())
        .map(|(x, y)| x * alpha + y * beta)
        .collect();
    Core::new(slices).expect("same shapes")
}

/// Runs the jobs on up to `threads` scoped threads, preserving order.
fn run_jobs<T: Send>(jobs: Vec<Box<dyn FnOnce() -> T + Send + '_>>, threads: usize) -> Vec<T> {
    if threads <= 1 {
        return jobs.into_iter().map(|j| j()).collect();
    }
    let mut out = Vec::with_capacity(jobs.len());
    let mut it = jobs.into_iter().peekable();
    while it.peek().is_some() {
        let batch: Vec<_> = it.by_ref().take(threads).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = batch.into_iter().map(|j| s.spawn(j)).collect();
            for h in handles {
                out.push(h.join().expect("residual worker panicked"));
            }
        });
    }
    out
}

/// Residual of a canonical two-core state, using the default solver settings.
pub fn residual(state: &Itr2State, m: &DMatrix<f64>, theta: f64) -> Result<ResidualReport> {
    residual_with(state, m, theta, &ResidualConfig::default())
}

pub fn residual_with(
    state: &Itr2State,
    m: &DMatrix<f64>,
    theta: f64,
    cfg: &ResidualConfig,
) -> Result<ResidualReport> {
    let (t, t1, t2) = rayleigh_quotient(state, m)?;
    let swapped = state.swapped();
    let fq = Frame::two_core(state);
    let fu = Frame::two_core(&swapped);
    let tol = cfg.solve_tol;
    let jobs: Vec<Box<dyn FnOnce() -> Result<Environment> + Send + '_>> = vec![
        Box::new(|| environment(&fq, m, Side::Left, tol)),
        Box::new(|| environment(&fq, m, Side::Right, tol)),
        Box::new(|| environment(&fu, m, Side::Left, tol)),
        Box::new(|| environment(&fu, m, Side::Right, tol)),
    ];
    let mut envs = run_jobs(jobs, cfg.threads).into_iter();
    let mut next = || envs.next().expect("four environments");
    let eq = FrameEnvironment {
        left: next()?,
        right: next()?,
    };
    let eu = FrameEnvironment {
        left: next()?,
        right: next()?,
    };
    let part = |f: &Frame, e: &FrameEnvironment| -> Result<Core> {
        Ok(axpy_core(
            &frame_sum(f, e, m, &f.center)?,
            0.5,
            &f.center,
            -3.0 * theta,
        ))
    };
    let q_part = part(&fq, &eq)?;
    let u_part = part(&fu, &eu)?;
    let res_norm = (q_part.frobenius_norm().powi(2) + u_part.frobenius_norm().powi(2)).sqrt();
    if !res_norm.is_finite() {
        return Err(Error::IllConditioned {
            what: "residual",
            detail: "non-finite residual norm".into(),
        });
    }
    Ok(ResidualReport {
        res_norm,
        theta: t,
        theta1: t1,
        theta2: t2,
        sigma_min: state.sigma.min(),
        omega_min: state.omega.min(),
        q_part,
        u_part,
    })
}

/// Residual norm of a canonical single-core ring `tr ∏ Q Σ`.
pub fn residual_single(c: &CanonicalItr, m: &DMatrix<f64>, theta: f64) -> Result<f64> {
    Ok(residual_single_core(c, m, theta, 1e-8)?.frobenius_norm())
}

/// Residual core of a single-core ring: `L·C + H₋₁C + H₀C + C·R − 4θC`.
pub fn residual_single_core(
    c: &CanonicalItr,
    m: &DMatrix<f64>,
    theta: f64,
    tol: f64,
) -> Result<Core> {
    let f = Frame::single(c);
    let env = frame_environment_of(&f, m, tol)?;
    Ok(axpy_core(
        &frame_sum(&f, &env, m, &f.center)?,
        1.0,
        &f.center,
        -4.0 * theta,
    ))
}

/// Averaged frame-projected Hamiltonian on `Q`-centered cores,
/// `Ĥ C = ¼[(L − θ)C + H₋₁C + H₀C + C(R − θ)]`.
pub struct ProjectedHamiltonian<'a> {
    frame: Frame,
    env: FrameEnvironment,
    m: &'a DMatrix<f64>,
    theta: f64,
}

impl<'a> ProjectedHamiltonian<'a> {
    pub fn new(state: &Itr2State, m: &'a DMatrix<f64>, theta: f64, solve_tol: f64) -> Result<Self> {
        let frame = Frame::two_core(state);
        let env = frame_environment_of(&frame, m, solve_tol)?;
        Ok(Self {
            frame,
            env,
            m,
            theta,
        })
    }

    pub fn center(&self) -> &Core {
        &self.frame.center
    }

    pub fn apply_core(&self, c: &Core) -> Result<Core> {
        let s = frame_sum(&self.frame, &self.env, self.m, c)?;
        Ok(axpy_core(&s, 0.25, c, -0.5 * self.theta))
    }

    /// Upper bound on the spectral radius, used as the eigenvalue shift.
    fn shift(&self) -> f64 {
        let d = self.frame.center.d() as f64;
        let mn = spectral_norm(self.m);
        let eye = |n: usize| DMatrix::<f64>::identity(n, n) * self.theta;
        let l = spectral_norm(&(&self.env.left.env - eye(self.env.left.env.nrows())));
        let r = spectral_norm(&(&self.env.right.env - eye(self.env.right.env.nrows())));
        (d * mn + self.theta.abs()).max(1.1 * 0.25 * (l + r + 2.0 * mn))
    }
}

/// Smallest eigenvalue `θ̂` of the averaged projected Hamiltonian in the
/// `Q`-centered frame.
pub fn projected_avg_eigenvalue(state: &Itr2State, m: &DMatrix<f64>, theta: f64) -> Result<f64> {
    let h = ProjectedHamiltonian::new(state, m, theta, 1e-8)?;
    let c = h.center();
    let (rl, d, rr) = (c.r_left(), c.d(), c.r_right());
    let shift = h.shift();
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        let core = Core::from_vector(x, rl, d, rr).expect("dimension matches the frame");
        let hc = h
            .apply_core(&core)
            .expect("shapes fixed by the frame")
            .to_vector();
        x * shift - hc
    };
    let op = FnOperator::new(rl * d * rr, apply, apply);
    let cfg = EigConfig {
        tol: 1e-10,
        reject_degenerate: false,
        ..EigConfig::default()
    };
    let (mu, _) = dominant_eigenpair_with(&op, Side::Right, &cfg)?;
    Ok(shift - mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itr::canonicalize;
    use crate::itr2::state::canonicalize2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ising(g: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, -g, 0.0, 0.0, -g, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -g, 0.0, 0.0, -g, -1.0,
            ],
        )
    }

    fn up_state() -> Itr2State {
        let up = Core::scalar(&[1.0, 0.0]).unwrap();
        canonicalize2(&up, &up).unwrap()
    }

    #[test]
    fn product_eigenstate_has_zero_residual() {
        let rep = residual(&up_state(), &ising(0.0), -1.0).unwrap();
        assert!(rep.res_norm <= 1e-12, "{}", rep.res_norm);
        assert_eq!(rep.theta, -1.0);
    }

    #[test]
    fn environments_match_neumann_sums() {
        let s = Itr2State::random(4, 2, 31).unwrap();
        let m = ising(2.0);
        for centering in [Centering::Q, Centering::U] {
            let fe = frame_environment(&s, &m, centering, 1e-13).unwrap();
            for e in [&fe.left, &fe.right] {
                let mut term = e.seed.clone();
                let mut sum = term.clone();
                for _ in 0..200 {
                    term = e.op.apply_matrix(&term);
                    sum += &term;
                }
                assert!((&sum - &e.env).norm() <= 1e-8 * sum.norm().max(1.0));
            }
        }
    }

    #[test]
    fn perturbed_theta_increases_residual() {
        let s = Itr2State::random(4, 2, 32).unwrap();
        let m = ising(2.0);
        let (t, _, _) = rayleigh_quotient(&s, &m).unwrap();
        let a = residual(&s, &m, t).unwrap().res_norm;
        let b = residual(&s, &m, t + 0.1).unwrap().res_norm;
        assert!(b > a);
    }

    #[test]
    fn single_core_consistency() {
        let mut g = ChaCha8Rng::seed_from_u64(33);
        let c = canonicalize(&Core::random(3, 2, 3, &mut g), 1e-12).unwrap();
        let m = ising(1.5);
        let s = Itr2State::new(
            c.q.clone(),
            c.sigma.clone(),
            c.q.clone(),
            c.sigma.clone(),
            true,
        )
        .unwrap();
        let (t, _, _) = rayleigh_quotient(&s, &m).unwrap();
        let single = residual_single(&c, &m, t).unwrap();
        let two = residual(&s, &m, t).unwrap().res_norm;
        assert!((two - single / 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn projected_hamiltonian_quadratic_form() {
        let s = Itr2State::random(3, 2, 34).unwrap();
        let m = ising(2.0);
        let (t, _, _) = rayleigh_quotient(&s, &m).unwrap();
        let h = ProjectedHamiltonian::new(&s, &m, t, 1e-12).unwrap();
        let c = h.center().clone();
        let hc = h.apply_core(&c).unwrap();
        assert!((c.to_vector().dot(&hc.to_vector()) - t).abs() < 1e-8);
        let part = residual(&s, &m, t).unwrap().q_part;
        let expect = axpy_core(&hc, 2.0, &c, -2.0 * t);
        assert!((part.to_vector() - expect.to_vector()).norm() < 1e-8);
    }

    #[test]
    fn theta_hat_of_product_eigenstate() {
        let th = projected_avg_eigenvalue(&up_state(), &ising(0.0), -1.0).unwrap();
        assert!((th + 1.0).abs() < 1e-9, "{th}");
    }

    #[test]
    fn threaded_solves_are_identical() {
        let s = Itr2State::random(4, 2, 35).unwrap();
        let m = ising(2.0);
        let a = residual(&s, &m, -2.0).unwrap();
        let cfg = ResidualConfig {
            threads: 4,
            ..ResidualConfig::default()
        };
        let b = residual_with(&s, &m, -2.0, &cfg).unwrap();
        assert_eq!(a.res_norm.to_bits(), b.res_norm.to_bits());
    }
}
