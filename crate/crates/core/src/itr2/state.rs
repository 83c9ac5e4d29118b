use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::itr::{canonicalize, transfer_left, transfer_right};
use crate::tensor::{merge, split, BondWeights, Core, SuperCore};

/// Two-core ring `tr ∏ Q Σ U Ω`.
///
/// `Q` is `r_Ω × d × r_Σ` and `U` is `r_Σ × d × r_Ω`; the two bond dimensions
/// may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct Itr2State {
    pub q: Core,
    pub u: Core,
    /// Weights on the bond `Q → U`.
    pub sigma: BondWeights,
    /// Weights on the bond `U → Q`.
    pub omega: BondWeights,
    pub canonical: bool,
}

/// Which core a center core is built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Centering {
    /// `Ω·Q(i)·Σ`
    Q,
    /// `Σ·U(i)·Ω`
    U,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterCore {
    pub parity: Centering,
    pub tensor: Core,
}

impl Itr2State {
    pub fn new(
        q: Core,
        sigma: BondWeights,
        u: Core,
        omega: BondWeights,
        canonical: bool,
    ) -> Result<Self> {
        let ok = q.r_right() == sigma.len()
            && u.r_left() == sigma.len()
            && u.r_right() == omega.len()
            && q.r_left() == omega.len()
            && q.d() == u.d();
        if !ok {
            return Err(Error::Shape(format!(
                "Q {}×{}×{}, Σ {}, U {}×{}×{}, Ω {} do not close a ring",
                q.r_left(),
                q.d(),
                q.r_right(),
                sigma.len(),
                u.r_left(),
                u.d(),
                u.r_right(),
                omega.len()
            )));
        }
        Ok(Self {
            q,
            u,
            sigma,
            omega,
            canonical,
        })
    }

    /// Seeded random cores with entries in `[-1, 1]`, brought to canonical form.
    pub fn random(r: usize, d: usize, seed: u64) -> Result<Self> {
        if r == 0 || d == 0 {
            return Err(Error::InvalidInput(
                "rank and physical dimension must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Core::random(r, d, r, &mut rng);
        let y = Core::random(r, d, r, &mut rng);
        canonicalize2(&x, &y)
    }

    pub fn d(&self) -> usize {
        self.q.d()
    }

    /// The same ring read from the `U` core: `(Q, Σ) ↔ (U, Ω)`.
    pub fn swapped(&self) -> Self {
        Self {
            q: self.u.clone(),
            u: self.q.clone(),
            sigma: self.omega.clone(),
            omega: self.sigma.clone(),
            canonical: self.canonical,
        }
    }

    pub fn center(&self, parity: Centering) -> CenterCore {
        let tensor = match parity {
            Centering::Q => self
                .q
                .left_diag(self.omega.as_slice())
                .right_diag(self.sigma.as_slice()),
            Centering::U => self
                .u
                .left_diag(self.sigma.as_slice())
                .right_diag(self.omega.as_slice()),
        };
        CenterCore { parity, tensor }
    }

    /// `(QΣ, UΩ)`: the two cores of the ring without separate weights.
    pub fn ring_cores(&self) -> (Core, Core) {
        (
            self.q.right_diag(self.sigma.as_slice()),
            self.u.right_diag(self.omega.as_slice()),
        )
    }

    /// Frobenius residuals of the four orthogonality conditions, in the order
    /// `ΩQ` (left), `QΣ` (right), `ΣU` (left), `UΩ` (right).
    pub fn orthogonality_residuals(&self) -> [f64; 4] {
        let eye = |k: usize| DMatrix::<f64>::identity(k, k);
        let left = |c: &Core| (transfer_left(c, &eye(c.r_left())) - eye(c.r_right())).norm();
        let right = |c: &Core| (transfer_right(c, &eye(c.r_right())) - eye(c.r_left())).norm();
        let (s, w) = (self.sigma.as_slice(), self.omega.as_slice());
        [
            left(&self.q.left_diag(w)),
            right(&self.q.right_diag(s)),
            left(&self.u.left_diag(s)),
            right(&self.u.right_diag(w)),
        ]
    }

    pub fn max_orthogonality_residual(&self) -> f64 {
        self.orthogonality_residuals()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Canonical form of the two-core ring `tr ∏ X Y`.
///
/// The `Σ` bond keeps at most `X.r_right()` singular values.
pub fn canonicalize2(x: &Core, y: &Core) -> Result<Itr2State> {
    canonicalize2_with(x, y, 1e-12)
}

pub fn canonicalize2_with(x: &Core, y: &Core, eig_tol: f64) -> Result<Itr2State> {
    let d = x.d();
    let z = merge(x, y)?;
    let sup = canonicalize(&z.as_core(), eig_tol)?;
    let omega = sup.sigma;
    let w = omega.as_slice();
    let center = SuperCore::from_core(sup.q.left_diag(w).right_diag(w), d)?;
    let (v, s, wt, _) = split(&center, x.r_right())?;
    let inv = omega.pinv(0.0);
    let q = v.left_diag(&inv);
    let u = wt.right_diag(&inv);
    let sigma = s.normalized()?;
    Itr2State::new(q, sigma, u, omega, true)
}
