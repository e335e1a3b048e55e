//! Dense `(p, q)` double forms on an orthonormal frame of an
//! `n`-dimensional inner-product space.
//!
//! A double form is stored as the matrix of its values `ω(e_I; e_J)` on
//! increasing multi-indices `I` (length `p`) and `J` (length `q`), rows and
//! columns in lexicographic basis order. Antisymmetry within each slot
//! group is therefore structural.
//!
//! The exterior (Kulkarni–Nomizu) product is normalized so that
//! `g²(e0, e1; e0, e1) = 2`, which makes `(κ/2)·g²` the curvature tensor of
//! constant sectional curvature `κ`. The inner product is the plain sum
//! over increasing basis pairs, which makes multiplication by `g` the
//! adjoint of the contraction `c`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{
    basis_masks, binomial, insertion_sign, mask_rank, shuffle_sign, sort_tuple, MultiIndex, MAX_DIM,
};

/// Default relative tolerance for floating-point predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct DoubleForm {
    n: usize,
    p: usize,
    q: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for DoubleForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoubleForm")
            .field("n", &self.n)
            .field("degree", &(self.p, self.q))
            .field("norm", &self.norm())
            .finish()
    }
}

impl DoubleForm {
    /// The zero `(p, q)` form. Degrees above `n` give a form with no
    /// coefficients at all.
    pub fn zeros(n: usize, p: usize, q: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds MAX_DIM");
        let len = binomial(n, p) * binomial(n, q);
        Self {
            n,
            p,
            q,
            coeffs: vec![0.0; len],
        }
    }

    /// A `(0, 0)` form, identified with its single coefficient.
    pub fn scalar(n: usize, value: f64) -> Self {
        let mut s = Self::zeros(n, 0, 0);
        s.coeffs[0] = value;
        s
    }

    /// The metric `g` as a `(1, 1)` form with identity coefficients.
    pub fn metric(n: usize) -> Self {
        let mut g = Self::zeros(n, 1, 1);
        for i in 0..n {
            g.coeffs[i * n + i] = 1.0;
        }
        g
    }

    /// `g^k`, computed as the iterated product `g · g^{k-1}`. For `k > n`
    /// this is the (coefficient-free) zero form.
    pub fn metric_power(n: usize, k: usize) -> Self {
        let g = Self::metric(n);
        let mut acc = Self::scalar(n, 1.0);
        for _ in 0..k {
            acc = g.product(&acc).expect("same dimension");
        }
        acc
    }

    /// Like [`DoubleForm::metric_power`] but rejects `k > n`.
    pub fn metric_power_strict(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::Domain { n, p: k });
        }
        Ok(Self::metric_power(n, k))
    }

    /// Builds a form from `(I, J, value)` triples; unlisted coefficients are zero.
    pub fn from_entries<E>(n: usize, p: usize, q: usize, entries: E) -> Result<Self>
    where
        E: IntoIterator<Item = (MultiIndex, MultiIndex, f64)>,
    {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let mut form = Self::zeros(n, p, q);
        let mut seen = vec![false; form.coeffs.len()];
        for (left, right, value) in entries {
            for (index, degree) in [(&left, p), (&right, q)] {
                index.check_dimension(n)?;
                if index.len() != degree {
                    return Err(Error::MalformedIndex {
                        indices: index.indices().to_vec(),
                        reason: format!("expected {degree} indices"),
                    });
                }
            }
            let slot = form.slot(left.to_mask(), right.to_mask());
            if seen[slot] {
                return Err(Error::DuplicateKey {
                    left: left.indices().to_vec(),
                    right: right.indices().to_vec(),
                });
            }
            seen[slot] = true;
            form.coeffs[slot] = value;
        }
        Ok(form)
    }

    /// Builds a form from a coefficient callback on basis masks.
    pub(crate) fn from_mask_fn(n: usize, p: usize, q: usize, mut f: impl FnMut(u32, u32) -> f64) -> Self {
        let rows = basis_masks(n, p);
        let cols = basis_masks(n, q);
        let mut coeffs = Vec::with_capacity(rows.len() * cols.len());
        for &r in &rows {
            for &c in &cols {
                coeffs.push(f(r, c));
            }
        }
        Self { n, p, q, coeffs }
    }

    /// Builds a form from a raw row-major coefficient vector.
    pub fn from_coeffs(n: usize, p: usize, q: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = binomial(n, p) * binomial(n, q);
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "({p},{q}) form in dimension {n} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { n, p, q, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn rows(&self) -> usize {
        binomial(self.n, self.p)
    }

    pub fn cols(&self) -> usize {
        binomial(self.n, self.q)
    }

    /// Row-major coefficients `ω(e_I; e_J)`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn as_scalar(&self) -> Option<f64> {
        (self.p == 0 && self.q == 0).then(|| self.coeffs[0])
    }

    fn slot(&self, left: u32, right: u32) -> usize {
        mask_rank(left, self.n) * self.cols() + mask_rank(right, self.n)
    }

    pub(crate) fn get_mask(&self, left: u32, right: u32) -> f64 {
        self.coeffs[self.slot(left, right)]
    }

    pub(crate) fn add_mask(&mut self, left: u32, right: u32, value: f64) {
        let slot = self.slot(left, right);
        self.coeffs[slot] += value;
    }

    /// Coefficient at the basis pair `(e_I, e_J)`.
    pub fn get(&self, left: &MultiIndex, right: &MultiIndex) -> f64 {
        assert_eq!(left.len(), self.p, "left degree mismatch");
        assert_eq!(right.len(), self.q, "right degree mismatch");
        self.get_mask(left.to_mask(), right.to_mask())
    }

    /// Value on arbitrary (not necessarily increasing) basis-vector tuples.
    pub fn entry(&self, left: &[usize], right: &[usize]) -> f64 {
        assert_eq!(left.len(), self.p, "left degree mismatch");
        assert_eq!(right.len(), self.q, "right degree mismatch");
        match (sort_tuple(left), sort_tuple(right)) {
            (Some((sl, ml)), Some((sr, mr))) => sl * sr * self.get_mask(ml, mr),
            _ => 0.0,
        }
    }

    /// Nonzero coefficients as `(left mask, right mask, value)`.
    pub(crate) fn nonzero(&self) -> Vec<(u32, u32, f64)> {
        let rows = basis_masks(self.n, self.p);
        let cols = basis_masks(self.n, self.q);
        let mut out = Vec::new();
        for (r, &rm) in rows.iter().enumerate() {
            for (c, &cm) in cols.iter().enumerate() {
                let v = self.coeffs[r * cols.len() + c];
                if v != 0.0 {
                    out.push((rm, cm, v));
                }
            }
        }
        out
    }

    /// `(I, J, value)` for every nonzero coefficient, in basis order.
    pub fn entries(&self) -> Vec<(MultiIndex, MultiIndex, f64)> {
        self.nonzero()
            .into_iter()
            .map(|(l, r, v)| (MultiIndex::from_mask(l), MultiIndex::from_mask(r), v))
            .collect()
    }

    /// Evaluates `ω(u_1, …, u_p; v_1, …, v_q)` on arbitrary vectors.
    pub fn eval<U, V>(&self, u: &[U], v: &[V]) -> Result<f64>
    where
        U: AsRef<[f64]>,
        V: AsRef<[f64]>,
    {
        let left = self.minors(u, self.p)?;
        let right = self.minors(v, self.q)?;
        let cols = right.len();
        let mut total = 0.0;
        for (r, &a) in left.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.coeffs[r * cols..(r + 1) * cols];
            total += a * row.iter().zip(&right).map(|(w, b)| w * b).sum::<f64>();
        }
        Ok(total)
    }

    /// `e^I(vectors)` for every basis element `I` of degree `degree`.
    fn minors<U: AsRef<[f64]>>(&self, vectors: &[U], degree: usize) -> Result<Vec<f64>> {
        let n = self.n;
        if vectors.len() != degree || vectors.iter().any(|v| v.as_ref().len() != n) {
            return Err(Error::VectorMismatch {
                expected: degree,
                n,
                got: format!("{:?}", vectors.iter().map(|v| v.as_ref().len()).collect::<Vec<_>>()),
            });
        }
        Ok(basis_masks(n, degree)
            .into_iter()
            .map(|mask| {
                let idx: Vec<usize> = crate::exterior::mask_indices(mask).collect();
                DMatrix::from_fn(degree, degree, |a, b| vectors[a].as_ref()[idx[b]]).determinant()
            })
            .collect())
    }

    /// Exterior (Kulkarni–Nomizu) product. The result has degree
    /// `(p1 + p2, q1 + q2)`; it has no coefficients if that exceeds `n`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "product of forms in dimensions {} and {}",
                self.n, other.n
            )));
        }
        let mut out = Self::zeros(self.n, self.p + other.p, self.q + other.q);
        if out.coeffs.is_empty() {
            return Ok(out);
        }
        let rhs = other.nonzero();
        for (l1, r1, a) in self.nonzero() {
            for &(l2, r2, b) in &rhs {
                if l1 & l2 != 0 || r1 & r2 != 0 {
                    continue;
                }
                let sign = shuffle_sign(l1, l2) * shuffle_sign(r1, r2);
                out.add_mask(l1 | l2, r1 | r2, sign * a * b);
            }
        }
        Ok(out)
    }

    /// `self^k` under the exterior product (`1` for `k = 0`).
    pub fn power(&self, k: usize) -> Self {
        let mut acc = Self::scalar(self.n, 1.0);
        for _ in 0..k {
            acc = acc.product(self).expect("same dimension");
        }
        acc
    }

    /// First contraction `(cω)(x…; y…) = Σ_j ω(e_j, x…; e_j, y…)`.
    pub fn contract(&self) -> Result<Self> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::DegreeUnderflow {
                p: self.p,
                q: self.q,
                k: 1,
            });
        }
        let n = self.n;
        Ok(Self::from_mask_fn(n, self.p - 1, self.q - 1, |l, r| {
            let mut sum = 0.0;
            for j in 0..n {
                let bit = 1u32 << j;
                if (l | r) & bit != 0 {
                    continue;
                }
                let v = self.get_mask(l | bit, r | bit);
                if v != 0.0 {
                    sum += insertion_sign(j, l) * insertion_sign(j, r) * v;
                }
            }
            sum
        }))
    }

    /// `c^k ω`.
    pub fn contract_k(&self, k: usize) -> Result<Self> {
        if k > self.p.min(self.q) {
            return Err(Error::DegreeUnderflow {
                p: self.p,
                q: self.q,
                k,
            });
        }
        let mut acc = self.clone();
        for _ in 0..k {
            acc = acc.contract()?;
        }
        Ok(acc)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.n, self.p, self.q) != (other.n, other.p, other.q) {
            return Err(Error::ShapeMismatch(format!(
                "({},{}) in dimension {} vs ({},{}) in dimension {}",
                self.p, self.q, self.n, other.p, other.q, other.n
            )));
        }
        Ok(())
    }

    /// `⟨ω, θ⟩ = Σ_{I,J} ω(I; J) θ(I; J)` over increasing basis pairs.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Generalized Hodge star, applied factor-wise:
    /// `(*ω)(Ic; Jc) = sign(I) sign(J) ω(I; J)`.
    pub fn star(&self) -> Self {
        let n = self.n;
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut out = Self::zeros(n, n - self.p.min(n), n - self.q.min(n));
        if self.p > n || self.q > n {
            return out;
        }
        for (l, r, v) in self.nonzero() {
            let (lc, rc) = (full & !l, full & !r);
            let sign = shuffle_sign(l, lc) * shuffle_sign(r, rc);
            out.add_mask(lc, rc, sign * v);
        }
        out
    }

    /// Exchanges the two slot groups.
    pub fn transpose(&self) -> Self {
        let (rows, cols) = (self.rows(), self.cols());
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for r in 0..rows {
            for c in 0..cols {
                coeffs[c * rows + r] = self.coeffs[r * cols + c];
            }
        }
        Self {
            n: self.n,
            p: self.q,
            q: self.p,
            coeffs,
        }
    }

    /// Largest `|ω(I; J) − ω(J; I)|`; infinite when `p ≠ q`.
    pub fn asymmetry(&self) -> f64 {
        if self.p != self.q {
            return f64::INFINITY;
        }
        let dim = self.rows();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r + 1..dim {
                worst = worst.max((self.coeffs[r * dim + c] - self.coeffs[c * dim + r]).abs());
            }
        }
        worst
    }

    /// Symmetric under exchange of the slot groups, up to `tol` relative to
    /// the largest coefficient.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.p == self.q && self.asymmetry() <= tol * self.max_abs()
    }

    /// Symmetric part `(ω + ωᵀ)/2` of a `(p, p)` form.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.p, self.q, "symmetrization needs p = q");
        (self + &self.transpose()) * 0.5
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self * factor
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }
}

impl Add for &DoubleForm {
    type Output = DoubleForm;

    fn add(self, rhs: &DoubleForm) -> DoubleForm {
        self.check_same_shape(rhs).expect("adding mismatched double forms");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        DoubleForm { coeffs, ..*self }
    }
}

impl Sub for &DoubleForm {
    type Output = DoubleForm;

    fn sub(self, rhs: &DoubleForm) -> DoubleForm {
        self.check_same_shape(rhs).expect("subtracting mismatched double forms");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        DoubleForm { coeffs, ..*self }
    }
}

impl Mul<f64> for &DoubleForm {
    type Output = DoubleForm;

    fn mul(self, rhs: f64) -> DoubleForm {
        DoubleForm {
            coeffs: self.coeffs.iter().map(|a| a * rhs).collect(),
            ..*self
        }
    }
}

impl Mul<f64> for DoubleForm {
    type Output = DoubleForm;

    fn mul(mut self, rhs: f64) -> DoubleForm {
        self.coeffs.iter_mut().for_each(|a| *a *= rhs);
        self
    }
}

impl Neg for &DoubleForm {
    type Output = DoubleForm;

    fn neg(self) -> DoubleForm {
        self * -1.0
    }
}
