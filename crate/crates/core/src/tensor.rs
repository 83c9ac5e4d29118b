//! Cores, supercores, bond weights and the physical-index operations on them.
//!
//! Index conventions:
//! - a merged physical index is `i·d + j` (`i` from the left core);
//! - bond-physical reshapes use row `α·d + i` and column `j·r_right + β`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::truncated_svd;

/// Third-order tensor `r_left × d × r_right`, stored as `d` matrix slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    slices: Vec<DMatrix<f64>>,
}

fn check_slices(slices: &[DMatrix<f64>], what: &str) -> Result<()> {
    let first = slices
        .first()
        .ok_or_else(|| Error::Shape(format!("{what} needs at least one slice")))?;
    let (r, c) = first.shape();
    if r == 0 || c == 0 {
        return Err(Error::Shape(format!("{what} has an empty bond dimension")));
    }
    for (i, s) in slices.iter().enumerate() {
        if s.shape() != (r, c) {
            return Err(Error::Shape(format!(
                "{what} slice {i} is {:?}, expected {:?}",
                s.shape(),
                (r, c)
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{what} slice {i} has non-finite entries"
            )));
        }
    }
    Ok(())
}

impl Core {
    pub fn new(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        check_slices(&slices, "core")?;
        Ok(Self { slices })
    }

    /// Rank-1 core with scalar slices.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| DMatrix::from_element(1, 1, v))
                .collect(),
        )
    }

    /// Entries drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(r_left: usize, d: usize, r_right: usize, rng: &mut R) -> Self {
        let slices = (0..d)
            .map(|_| DMatrix::from_fn(r_left, r_right, |_, _| rng.gen_range(-1.0..=1.0)))
            .collect();
        Self { slices }
    }

    pub fn r_left(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn r_right(&self) -> usize {
        self.slices[0].ncols()
    }

    pub fn d(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, i: usize) -> &DMatrix<f64> {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<DMatrix<f64>> {
        self.slices
    }

    pub fn map_slices(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self {
            slices: self.slices.iter().map(f).collect(),
        }
    }

    /// `A · X(i)` for every slice.
    pub fn left_mul(&self, a: &DMatrix<f64>) -> Self {
        self.map_slices(|s| a * s)
    }

    /// `X(i) · A` for every slice.
    pub fn right_mul(&self, a: &DMatrix<f64>) -> Self {
        self.map_slices(|s| s * a)
    }

    /// `diag(w) · X(i)`.
    pub fn left_diag(&self, w: &[f64]) -> Self {
        self.map_slices(|s| {
            let mut out = s.clone();
            for (mut row, &wi) in out.row_iter_mut().zip(w) {
                row *= wi;
            }
            out
        })
    }

    /// `X(i) · diag(w)`.
    pub fn right_diag(&self, w: &[f64]) -> Self {
        self.map_slices(|s| {
            let mut out = s.clone();
            for (mut col, &wi) in out.column_iter_mut().zip(w) {
                col *= wi;
            }
            out
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_slices(|s| s * c)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Concatenation of the column-major slice vectors, slice 0 first.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.slices.len() * self.slices[0].len(),
            self.slices.iter().flat_map(|s| s.iter().copied()),
        )
    }

    /// Inverse of [`Core::to_vector`].
    pub fn from_vector(v: &DVector<f64>, r_left: usize, d: usize, r_right: usize) -> Result<Self> {
        let n = r_left * r_right;
        if v.len() != n * d {
            return Err(Error::Shape(format!(
                "vector of length {} cannot hold a {r_left}×{d}×{r_right} core",
                v.len()
            )));
        }
        Self::new(
            (0..d)
                .map(|i| {
                    DMatrix::from_column_slice(r_left, r_right, &v.as_slice()[i * n..(i + 1) * n])
                })
                .collect(),
        )
    }
}

/// Two merged cores: `d²` slices indexed by `i·d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperCore {
    d: usize,
    slices: Vec<DMatrix<f64>>,
}

impl SuperCore {
    pub fn new(d: usize, slices: Vec<DMatrix<f64>>) -> Result<Self> {
        if d == 0 || slices.len() != d * d {
            return Err(Error::Shape(format!(
                "supercore with {} slices is not d² for d = {d}",
                slices.len()
            )));
        }
        check_slices(&slices, "supercore")?;
        Ok(Self { d, slices })
    }

    /// Physical dimension of one constituent core.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_sq(&self) -> usize {
        self.d * self.d
    }

    pub fn r_left(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn r_right(&self) -> usize {
        self.slices[0].ncols()
    }

    pub fn slice(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.slices[i * self.d + j]
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    /// The supercore viewed as a single core of physical dimension `d²`.
    pub fn as_core(&self) -> Core {
        Core {
            slices: self.slices.clone(),
        }
    }

    pub fn from_core(core: Core, d: usize) -> Result<Self> {
        Self::new(d, core.slices)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Reshape to the `(r_left·d) × (d·r_right)` matrix with row `α·d + i`
    /// and column `j·r_right + β`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let (rl, rr, d) = (self.r_left(), self.r_right(), self.d);
        let mut out = DMatrix::zeros(rl * d, d * rr);
        for i in 0..d {
            for j in 0..d {
                let s = self.slice(i, j);
                for b in 0..rr {
                    for a in 0..rl {
                        out[(a * d + i, j * rr + b)] = s[(a, b)];
                    }
                }
            }
        }
        out
    }
}

/// Non-negative diagonal bond weights (Σ or Ω), normally descending with unit
/// 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BondWeights {
    values: Vec<f64>,
}

impl BondWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("empty bond weights".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "bond weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `r` equal weights of unit total norm.
    pub fn uniform(r: usize) -> Self {
        Self {
            values: vec![1.0 / (r as f64).sqrt(); r],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::IllConditioned {
                what: "bond weights",
                detail: "all weights vanish".into(),
            });
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.values))
    }

    pub fn squared(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    /// Entrywise inverse; weights at or below `rel · max` map to zero.
    pub fn pinv(&self, rel: f64) -> Vec<f64> {
        let cut = rel * self.max();
        self.values
            .iter()
            .map(|&v| if v > cut { 1.0 / v } else { 0.0 })
            .collect()
    }
}

/// Supercore with slices `X(i) · Y(j)`.
pub fn merge(x: &Core, y: &Core) -> Result<SuperCore> {
    if x.r_right() != y.r_left() {
        return Err(Error::Shape(format!(
            "cannot merge: left core has right rank {}, right core has left rank {}",
            x.r_right(),
            y.r_left()
        )));
    }
    if x.d() != y.d() {
        return Err(Error::Shape(format!(
            "cannot merge cores of physical dimensions {} and {}",
            x.d(),
            y.d()
        )));
    }
    let slices = x
        .slices
        .iter()
        .flat_map(|a| y.slices.iter().map(move |b| a * b))
        .collect();
    Ok(SuperCore { d: x.d(), slices })
}

/// Truncated SVD split of a supercore into two cores with the kept singular
/// values in between. The weights are returned unnormalized, with the
/// relative discarded weight as the last element.
pub fn split(z: &SuperCore, r_max: usize) -> Result<(Core, BondWeights, Core, f64)> {
    let (rl, rr, d) = (z.r_left(), z.r_right(), z.d());
    let svd = truncated_svd(&z.to_matrix(), r_max)?;
    let k = svd.rank();
    let left = (0..d)
        .map(|i| DMatrix::from_fn(rl, k, |a, c| svd.u[(a * d + i, c)]))
        .collect();
    let right = (0..d)
        .map(|j| DMatrix::from_fn(k, rr, |c, b| svd.v[(j * rr + b, c)]))
        .collect();
    let err = svd.relative_error();
    Ok((
        Core { slices: left },
        BondWeights { values: svd.s },
        Core { slices: right },
        err,
    ))
}

/// Contracts the gate with the fused physical index: out slice `k` is
/// `Σ_m G[k, m] · Z(m)`.
pub fn apply_gate(g: &DMatrix<f64>, z: &SuperCore) -> Result<SuperCore> {
    let n = z.d_sq();
    if g.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "gate is {:?}, supercore needs {n}×{n}",
            g.shape()
        )));
    }
    let (rl, rr) = (z.r_left(), z.r_right());
    let slices = (0..n)
        .map(|k| {
            let mut acc = DMatrix::zeros(rl, rr);
            for (m, zm) in z.slices.iter().enumerate() {
                let gkm = g[(k, m)];
                if gkm != 0.0 {
                    acc += zm * gkm;
                }
            }
            acc
        })
        .collect();
    Ok(SuperCore { d: z.d, slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_neg_sym;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn scalar_merge_is_outer_product() {
        let x = Core::scalar(&[2.0, 3.0]).unwrap();
        let y = Core::scalar(&[5.0, 7.0]).unwrap();
        let z = merge(&x, &y).unwrap();
        let vals: Vec<f64> = z.slices().iter().map(|s| s[(0, 0)]).collect();
        assert_eq!(vals, vec![10.0, 14.0, 15.0, 21.0]);
    }

    #[test]
    fn merge_with_zero_slice() {
        let x = Core::new(vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)]).unwrap();
        let z = merge(&x, &x).unwrap();
        assert_eq!(z.slice(0, 0), &DMatrix::<f64>::identity(2, 2));
        for (i, j) in [(0, 1), (1, 0), (1, 1)] {
            assert_eq!(z.slice(i, j).norm(), 0.0);
        }
    }

    #[test]
    fn merge_contracts_like_sequential_product() {
        let mut g = rng(1);
        let x = Core::random(3, 2, 3, &mut g);
        let y = Core::random(3, 2, 3, &mut g);
        let a = DVector::from_fn(3, |_, _| g.gen_range(-1.0..1.0));
        let b = DVector::from_fn(3, |_, _| g.gen_range(-1.0..1.0));
        let z = merge(&x, &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut seq = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        for s in 0..3 {
                            seq += a[p] * x.slice(i)[(p, q)] * y.slice(j)[(q, s)] * b[s];
                        }
                    }
                }
                let merged = (a.transpose() * z.slice(i, j) * &b)[(0, 0)];
                assert!((seq - merged).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merge_rejects_mismatch() {
        let mut g = rng(2);
        let x = Core::random(2, 2, 3, &mut g);
        let y = Core::random(2, 2, 2, &mut g);
        assert!(matches!(merge(&x, &y), Err(Error::Shape(_))));
    }

    #[test]
    fn split_exact_rank_round_trip() {
        let mut g = rng(3);
        let x = Core::random(3, 2, 3, &mut g);
        let y = Core::random(3, 2, 3, &mut g);
        let z = merge(&x, &y).unwrap();
        let (c1, w, c2, err) = split(&z, 6).unwrap();
        assert!(err < 1e-14);
        let rebuilt = merge(&c1.right_diag(w.as_slice()), &c2).unwrap();
        for (a, b) in rebuilt.slices().iter().zip(z.slices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn split_rank_one_outer_product() {
        let x = Core::scalar(&[1.0, 2.0]).unwrap();
        let y = Core::scalar(&[3.0, -1.0]).unwrap();
        let z = merge(&x, &y).unwrap();
        let (_, w, _, err) = split(&z, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert!(err < 1e-15);
    }

    #[test]
    fn split_error_matches_spectrum_tail() {
        let mut g = rng(4);
        let slices = (0..4)
            .map(|_| DMatrix::from_fn(4, 4, |_, _| g.gen_range(-1.0..1.0)))
            .collect();
        let z = SuperCore::new(2, slices).unwrap();
        let full = z.to_matrix().singular_values();
        let mut s: Vec<f64> = full.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let tail: f64 = s[4..].iter().map(|v| v * v).sum();
        let total: f64 = s.iter().map(|v| v * v).sum();
        let (_, w, _, err) = split(&z, 4).unwrap();
        assert!((err - (tail / total).sqrt()).abs() < 1e-12);
        assert!(w.as_slice().windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn gate_identity_and_swap() {
        let mut g = rng(5);
        let slices = (0..4)
            .map(|_| DMatrix::from_fn(2, 3, |_, _| g.gen_range(-1.0..1.0)))
            .collect();
        let z = SuperCore::new(2, slices).unwrap();
        assert_eq!(apply_gate(&DMatrix::identity(4, 4), &z).unwrap(), z);
        let mut swap = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(j * 2 + i, i * 2 + j)] = 1.0;
            }
        }
        let twice = apply_gate(&swap, &apply_gate(&swap, &z).unwrap()).unwrap();
        assert_eq!(twice, z);
    }

    #[test]
    fn gate_matches_dense_flattened_product() {
        let mut g = rng(6);
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, -2.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -2.0, 0.0, 0.0, -2.0,
                -1.0,
            ],
        );
        let e = expm_neg_sym(&m, 0.01).unwrap();
        let slices = (0..4)
            .map(|_| DMatrix::from_fn(3, 3, |_, _| g.gen_range(-1.0..1.0)))
            .collect();
        let z = SuperCore::new(2, slices).unwrap();
        let out = apply_gate(&e, &z).unwrap();
        // flattened: rows = physical index, columns = bond entries
        let flat = DMatrix::from_fn(4, 9, |k, p| z.slices()[k][p]);
        let dense = &e * flat;
        for k in 0..4 {
            for p in 0..9 {
                assert!((out.slices()[k][p] - dense[(k, p)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn core_vector_round_trip() {
        let mut g = rng(7);
        let x = Core::random(2, 3, 4, &mut g);
        let back = Core::from_vector(&x.to_vector(), 2, 3, 4).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn bond_weight_pinv_clamps() {
        let w = BondWeights::new(vec![1.0, 1e-3, 1e-14]).unwrap();
        assert_eq!(w.pinv(1e-12), vec![1.0, 1e3, 0.0]);
        assert!(BondWeights::new(vec![-1.0]).is_err());
    }
}
