//! Self-checks of the solver against brute-force references.
//!
//! Each probe returns the measured discrepancy; [`run_checks`] compares them
//! with fixed tolerances.

use itrpower_core::evolve::trotter_half_step;
use itrpower_core::itr::{transfer_apply, transfer_left, transfer_right};
use itrpower_core::itr2::{canonicalize2, frame_environment, residual};
use itrpower_core::linalg::expm_neg_sym;
use itrpower_core::oracle::{dense_exact_ring, dense_transfer, finite_chain_ground, ring_vector};
use itrpower_core::{
    build_gate, canonicalize, exact_eigenvalue, rayleigh_quotient, Centering, Core, Error,
    Itr2State, ModelSpec, Parity, Side, TransferOp, Variant,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Probe<T> = Result<T, Error>;

/// Largest deviation of the matrix-free transfer action from the dense
/// transfer matrix, over `count` random vectors with ranks 1 to 4.
pub fn transfer_consistency(count: usize, seed: u64) -> Probe<f64> {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..count {
        let r = 1 + k % 4;
        let d = 2 + k % 2;
        let x = Core::random(r, d, r, &mut g);
        let op = TransferOp::plain(&x)?;
        let dense = dense_transfer(&op)?;
        let v = DVector::from_fn(r * r, |_, _| g.gen_range(-1.0..1.0));
        worst = worst
            .max((transfer_apply(&op, &v, Side::Right) - &dense * &v).norm())
            .max((transfer_apply(&op, &v, Side::Left) - dense.tr_mul(&v)).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalStats {
    /// Worst orthogonality residual over both conditions.
    pub orthogonality: f64,
    /// Worst fixed-point residual of `Σ²` for `T_{ΣQ}` (right) and `T_{QΣ}` (left).
    pub fixed_point: f64,
    /// Worst difference of the `Σ` spectra of a core and a gauge transform of it.
    pub gauge: f64,
    /// Whether the `{I, 0}` core was rejected as degenerate.
    pub degenerate_rejected: bool,
}

/// Single-core canonical form on `count` seeded cores with `r ∈ {2, 4, 8}`
/// and `d ∈ {2, 3}`.
pub fn canonical_suite(count: usize, seed: u64) -> Probe<CanonicalStats> {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = CanonicalStats {
        orthogonality: 0.0,
        fixed_point: 0.0,
        gauge: 0.0,
        degenerate_rejected: false,
    };
    for k in 0..count {
        let r = [2, 4, 8][k % 3];
        let d = 2 + (k / 3) % 2;
        let x = Core::random(r, d, r, &mut g);
        let c = canonicalize(&x, 1e-12)?;
        stats.orthogonality = stats
            .orthogonality
            .max(c.left_orthogonality_residual())
            .max(c.right_orthogonality_residual());
        let w2 = DMatrix::from_diagonal(&DVector::from_vec(c.sigma.squared()));
        let ql = c.q.left_diag(c.sigma.as_slice());
        let qr = c.q.right_diag(c.sigma.as_slice());
        stats.fixed_point = stats
            .fixed_point
            .max((transfer_right(&ql, &w2) - &w2).norm())
            .max((transfer_left(&qr, &w2) - &w2).norm());

        let s = DMatrix::identity(r, r)
            + DMatrix::from_fn(r, r, |_, _| g.gen_range(-1.0..1.0)) * (0.3 / r as f64);
        let s_inv = s.clone().try_inverse().expect("diagonally dominant");
        let y = x.map_slices(|a| &s_inv * a * &s);
        let cy = canonicalize(&y, 1e-12)?;
        let diff = if cy.sigma.len() == c.sigma.len() {
            c.sigma
                .as_slice()
                .iter()
                .zip(cy.sigma.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        stats.gauge = stats.gauge.max(diff);
    }
    let degenerate = Core::new(vec![DMatrix::identity(3, 3), DMatrix::zeros(3, 3)])?;
    stats.degenerate_rejected = matches!(
        canonicalize(&degenerate, 1e-12),
        Err(Error::DegenerateDominance { .. })
    );
    Ok(stats)
}

/// Largest relative gap between the solved environments and 200-term
/// partial sums of their geometric series, over `count` random canonical
/// states.
pub fn neumann_agreement(count: usize, seed: u64) -> Probe<f64> {
    let m = build_gate(&ModelSpec::Ising { g: 2.0 })?;
    let mut worst = 0.0f64;
    for k in 0..count {
        let r = 2 + k % 3;
        let s = Itr2State::random(r, 2, seed + k as u64)?;
        for centering in [Centering::Q, Centering::U] {
            let fe = frame_environment(&s, &m, centering, 1e-13)?;
            for e in [&fe.left, &fe.right] {
                let mut term = e.seed.clone();
                let mut sum = term.clone();
                for _ in 0..200 {
                    term = e.op.apply_matrix(&term);
                    sum += &term;
                }
                worst = worst.max((&sum - &e.env).norm() / sum.norm().max(1.0));
            }
        }
    }
    Ok(worst)
}

/// Residual norm of the all-up product state, the exact ground state at `g = 0`.
pub fn product_state_residual() -> Probe<f64> {
    let up = Core::scalar(&[1.0, 0.0])?;
    let s = canonicalize2(&up, &up)?;
    let m = build_gate(&ModelSpec::Ising { g: 0.0 })?;
    let (theta, _, _) = rayleigh_quotient(&s, &m)?;
    Ok(residual(&s, &m, theta)?.res_norm)
}

fn ray_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (a, b) = (a / a.norm(), b / b.norm());
    (&a - &b).norm().min((&a + &b).norm())
}

/// Distance between the ring of length 6 read off a state after one odd and
/// one even half-step, and the exact `exp(−H t)` applied to the ring of the
/// initial state. No truncation takes place.
pub fn trotter_discrepancy(g_field: f64, t: f64) -> Probe<f64> {
    let m = build_gate(&ModelSpec::Ising { g: g_field })?;
    let s = Itr2State::random(2, 2, 7)?;
    let x = ring_vector(&s, 6)?;
    let gate = expm_neg_sym(&m, t)?;
    let half = trotter_half_step(&s, &gate, Parity::Odd, Variant::Fast, 64)?.0;
    let full = trotter_half_step(&half, &gate, Parity::Even, Variant::Fast, 64)?.0;
    let evolved = ring_vector(&full, 6)?;
    Ok(ray_distance(&evolved, &dense_exact_ring(&m, 6, t, &x)?))
}

/// Least-squares slope of `log(discrepancy)` against `log(t)` for `g = 2`.
pub fn trotter_slope(ts: &[f64]) -> Probe<f64> {
    let pts = ts
        .iter()
        .map(|&t| Ok((t.ln(), trotter_discrepancy(2.0, t)?.ln())))
        .collect::<Probe<Vec<(f64, f64)>>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Per-site ground energies of periodic Ising chains (`g = 2`) of lengths 8
/// and 12, and the infinite-chain value.
pub fn finite_chain_energies() -> Probe<(f64, f64, f64)> {
    let spec = ModelSpec::Ising { g: 2.0 };
    let m = build_gate(&spec)?;
    let lambda = exact_eigenvalue(&spec).expect("closed form for the Ising chain");
    Ok((
        finite_chain_ground(&m, 8, true)?.1,
        finite_chain_ground(&m, 12, true)?.1,
        lambda,
    ))
}

/// Rayleigh quotient and residual of the spin-1 valence-bond state for the
/// gate `S·S + (S·S)²/3`, of which it is an exact eigenvector with −2/3.
pub fn valence_bond_probe() -> Probe<(f64, f64)> {
    let a = (2.0f64 / 3.0).sqrt();
    let b = (1.0f64 / 3.0).sqrt();
    let c = Core::new(vec![
        DMatrix::from_row_slice(2, 2, &[0.0, a, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[-b, 0.0, 0.0, b]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -a, 0.0]),
    ])?;
    let ss = build_gate(&ModelSpec::HeisenbergS1 { delta: 1.0 })?;
    let m = &ss + &ss * &ss / 3.0;
    let s = canonicalize2(&c, &c)?;
    let (theta, _, _) = rayleigh_quotient(&s, &m)?;
    Ok((theta, residual(&s, &m, theta)?.res_norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check<T>(
    name: &'static str,
    probe: Probe<T>,
    judge: impl FnOnce(&T) -> (bool, String),
) -> Check {
    match probe {
        Ok(v) => {
            let (passed, detail) = judge(&v);
            Check {
                name,
                passed,
                detail,
            }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// All self-checks, in a fixed order.
pub fn run_checks() -> Vec<Check> {
    vec![
        check("transfer-vs-dense", transfer_consistency(20, 1), |&e| {
            (e <= 1e-12, format!("max deviation {e:.2e} (tol 1e-12)"))
        }),
        check("canonical-form", canonical_suite(50, 2), |s| {
            let ok = s.orthogonality <= 1e-10
                && s.fixed_point <= 1e-10
                && s.gauge <= 1e-8
                && s.degenerate_rejected;
            (
                ok,
                format!(
                    "orthogonality {:.2e}, fixed point {:.2e}, gauge {:.2e}, degenerate rejected {}",
                    s.orthogonality, s.fixed_point, s.gauge, s.degenerate_rejected
                ),
            )
        }),
        check("deflated-solves", neumann_agreement(20, 3), |&e| {
            (e <= 1e-8, format!("max relative gap {e:.2e} (tol 1e-8)"))
        }),
        check("product-eigenstate", product_state_residual(), |&r| {
            (r <= 1e-12, format!("residual {r:.2e} (tol 1e-12)"))
        }),
        check(
            "valence-bond-eigenstate",
            valence_bond_probe(),
            |&(theta, r)| {
                (
                    (theta + 2.0 / 3.0).abs() <= 1e-12 && r <= 1e-10,
                    format!("theta {theta:.15}, residual {r:.2e}"),
                )
            },
        ),
        check(
            "trotter-order",
            trotter_slope(&[1e-2, 5e-3, 2.5e-3]),
            |&s| {
                (
                    (s - 2.0).abs() <= 0.2,
                    format!("slope {s:.3} (want 2.0 ± 0.2)"),
                )
            },
        ),
        check("commuting-split", trotter_discrepancy(0.0, 0.1), |&e| {
            (e <= 1e-12, format!("discrepancy {e:.2e} (tol 1e-12)"))
        }),
        check("finite-chains", finite_chain_energies(), |&(e8, e12, l)| {
            (
                e8.min(l) <= e12 && e12 <= e8.max(l),
                format!("L=8 {e8:.12}, L=12 {e12:.12}, infinite {l:.12}"),
            )
        }),
    ]
}
