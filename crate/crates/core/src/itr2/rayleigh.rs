use nalgebra::{DMatrix, DVector};

use super::state::Itr2State;
use crate::error::{Error, Result};
use crate::itr::TransferOp;
use crate::linalg::{dominant_eigenpair, Side};
use crate::tensor::{apply_gate, merge, Core, SuperCore};

/// Orthogonality residual above which quotients on a state are flagged.
const CANONICAL_WARN: f64 = 1e-6;

fn check_gate(m: &DMatrix<f64>, d: usize) -> Result<()> {
    if m.shape() != (d * d, d * d) {
        return Err(Error::Shape(format!(
            "gate is {:?}, physical dimension {d} needs {}×{}",
            m.shape(),
            d * d,
            d * d
        )));
    }
    Ok(())
}

/// `Σ_{a,b} M[a,b] ⟨Z(a), Z(b)⟩_F`.
pub(crate) fn gate_quadratic_form(m: &DMatrix<f64>, z: &SuperCore) -> Result<f64> {
    let mz = apply_gate(m, z)?;
    Ok(z.slices()
        .iter()
        .zip(mz.slices())
        .map(|(a, b)| a.dot(b))
        .sum())
}

/// Two-site quotient on the `Q → U` bond of a canonical state.
pub(crate) fn bond_quotient(state: &Itr2State, m: &DMatrix<f64>) -> Result<f64> {
    let c = merge(
        &state
            .q
            .left_diag(state.omega.as_slice())
            .right_diag(state.sigma.as_slice()),
        &state.u.right_diag(state.omega.as_slice()),
    )?;
    gate_quadratic_form(m, &c)
}

/// `(θ, θ₁, θ₂)` of a canonical state: `θ₁` on the `Q → U` bond, `θ₂` on the
/// `U → Q` bond and `θ` their mean.
pub fn rayleigh_quotient(state: &Itr2State, m: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    check_gate(m, state.d())?;
    if !state.canonical {
        let res = state.max_orthogonality_residual();
        if res > CANONICAL_WARN {
            log::warn!("quotient of a state {res:.2e} away from canonical form");
        }
    }
    let t1 = bond_quotient(state, m)?;
    let t2 = bond_quotient(&state.swapped(), m)?;
    Ok((0.5 * (t1 + t2), t1, t2))
}

/// Quotient of one bond in a general (not necessarily canonical) ring
/// `… X Y X Y …`, centered on `X → Y`.
fn general_bond_term(x: &Core, y: &Core, m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let op = TransferOp::chain(vec![x.clone(), y.clone()])?;
    let (eta, v_r) = dominant_eigenpair(&op, Side::Right, tol)?;
    let (_, v_l) = dominant_eigenpair(&op, Side::Left, tol)?;
    let r = op.bond_dim();
    let vr = DMatrix::from_column_slice(r, r, v_r.as_slice());
    let vl = DMatrix::from_column_slice(r, r, v_l.as_slice());
    let z = merge(x, y)?;
    let mz = apply_gate(m, &z)?;
    // ⟨V_L, Σ_{ab} M[a,b] Z(a) V_R Z(b)ᵀ⟩
    let mut num = 0.0;
    for (za, mza) in z.slices().iter().zip(mz.slices()) {
        num += (vl.transpose() * mza * &vr).dot(za);
    }
    let den = eta * v_l.dot(&DVector::from_column_slice(vr.as_slice()));
    if den == 0.0 || !den.is_finite() {
        return Err(Error::IllConditioned {
            what: "Rayleigh quotient",
            detail: "left and right fixed points are orthogonal".into(),
        });
    }
    Ok(num / den)
}

/// Rayleigh quotient of the ring `tr ∏ X Y`, averaged over both bonds.
/// Invariant under rescaling of either core.
pub fn rayleigh_quotient_general(x: &Core, y: &Core, m: &DMatrix<f64>) -> Result<f64> {
    let (t, _, _) = rayleigh_quotient_general_terms(x, y, m)?;
    Ok(t)
}

/// `(θ, θ_e, θ_o)` with `θ_e` on `X → Y` and `θ_o` on `Y → X`.
pub fn rayleigh_quotient_general_terms(
    x: &Core,
    y: &Core,
    m: &DMatrix<f64>,
) -> Result<(f64, f64, f64)> {
    check_gate(m, x.d())?;
    let te = general_bond_term(x, y, m, 1e-12)?;
    let to = general_bond_term(y, x, m, 1e-12)?;
    Ok((0.5 * (te + to), te, to))
}
