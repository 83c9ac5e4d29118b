//! One Trotter half-step of `exp(−Ht)` on a two-core ring.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::itr2::{canonicalize2_with, Itr2State};
use crate::linalg::expm_neg_sym;
use crate::tensor::{apply_gate, merge, split};

/// Weights below this fraction of the largest are not inverted.
pub const WEIGHT_CLAMP: f64 = 1e-12;

/// Which family of bonds a half-step acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// `Q → U` bonds.
    Odd,
    /// `U → Q` bonds.
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Re-canonicalize after every half-step.
    Canonical,
    /// Keep the un-updated weight fixed and rely on alternating SVDs.
    Fast,
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Variant::Canonical),
            "fast" => Ok(Variant::Fast),
            other => Err(crate::Error::InvalidParam(format!(
                "unknown variant '{other}'"
            ))),
        }
    }
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Canonical => "canonical",
            Variant::Fast => "fast",
        }
    }
}

/// Applies `exp_mt` to every bond of the given parity and truncates the
/// updated bond to at most `r_max`. Returns the new state and the relative
/// discarded weight of the truncation.
pub fn trotter_half_step(
    state: &Itr2State,
    exp_mt: &DMatrix<f64>,
    parity: Parity,
    variant: Variant,
    r_max: usize,
) -> Result<(Itr2State, f64)> {
    trotter_half_step_with(state, exp_mt, parity, variant, r_max, 1e-12)
}

pub fn trotter_half_step_with(
    state: &Itr2State,
    exp_mt: &DMatrix<f64>,
    parity: Parity,
    variant: Variant,
    r_max: usize,
    eig_tol: f64,
) -> Result<(Itr2State, f64)> {
    match parity {
        Parity::Odd => odd_step(state, exp_mt, variant, r_max, eig_tol),
        Parity::Even => {
            let (s, err) = odd_step(&state.swapped(), exp_mt, variant, r_max, eig_tol)?;
            Ok((s.swapped(), err))
        }
    }
}

fn odd_step(
    state: &Itr2State,
    exp_mt: &DMatrix<f64>,
    variant: Variant,
    r_max: usize,
    eig_tol: f64,
) -> Result<(Itr2State, f64)> {
    let w = state.omega.as_slice();
    let left = state.q.left_diag(w).right_diag(state.sigma.as_slice());
    let right = state.u.right_diag(w);
    let center = apply_gate(exp_mt, &merge(&left, &right)?)?;
    let (c1, s, c2, err) = split(&center, r_max)?;
    let inv = state.omega.pinv(WEIGHT_CLAMP);
    let q = c1.left_diag(&inv);
    let u = c2.right_diag(&inv);
    let sigma = s.normalized()?;
    let next = match variant {
        Variant::Fast => Itr2State::new(q, sigma, u, state.omega.clone(), false)?,
        Variant::Canonical => {
            canonicalize2_with(&q.right_diag(sigma.as_slice()), &u.right_diag(w), eig_tol)?
        }
    };
    Ok((next, err))
}

/// `exp(−M t)` per timestep, computed once per distinct `t`.
#[derive(Debug, Clone)]
pub struct GateCache {
    m: DMatrix<f64>,
    cache: HashMap<u64, DMatrix<f64>>,
}

impl GateCache {
    pub fn new(m: DMatrix<f64>) -> Self {
        Self {
            m,
            cache: HashMap::new(),
        }
    }

    pub fn gate(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&mut self, t: f64) -> Result<&DMatrix<f64>> {
        let key = t.to_bits();
        if !self.cache.contains_key(&key) {
            let e = expm_neg_sym(&self.m, t)?;
            self.cache.insert(key, e);
        }
        Ok(&self.cache[&key])
    }
}
