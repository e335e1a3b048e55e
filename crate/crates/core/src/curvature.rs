//! Algebraic curvature tensors: model examples, Thorpe powers, the
//! Schouten tensor and `q`-sectional curvatures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::{binomial, factorial, MultiIndex};
use crate::form::{DoubleForm, DEFAULT_TOL};

/// Bianchi tolerance applied by [`AlgebraicCurvature::new`].
pub const BIANCHI_TOL: f64 = 1e-8;

/// Absolute tolerance on the Gram matrix of a frame.
pub const FRAME_TOL: f64 = 1e-10;

/// A symmetric `(2, 2)` double form satisfying the first Bianchi identity.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicCurvature {
    form: DoubleForm,
}

impl AlgebraicCurvature {
    /// Validates symmetry and the first Bianchi identity (to [`BIANCHI_TOL`],
    /// scaled by the largest coefficient when that exceeds one).
    pub fn new(form: DoubleForm) -> Result<Self> {
        Self::with_tolerance(form, BIANCHI_TOL)
    }

    pub fn with_tolerance(form: DoubleForm, tol: f64) -> Result<Self> {
        if form.degrees() != (2, 2) {
            return Err(Error::ShapeMismatch(format!(
                "curvature must be a (2,2) form, got {:?}",
                form.degrees()
            )));
        }
        if !form.is_symmetric(DEFAULT_TOL) {
            return Err(Error::NotSymmetric(form.asymmetry()));
        }
        let residual = bianchi_residual(&form);
        if residual > tol * form.max_abs().max(1.0) {
            return Err(Error::Bianchi(residual));
        }
        Ok(Self { form })
    }

    /// Wraps a form the caller knows to be an algebraic curvature tensor.
    pub fn from_form_unchecked(form: DoubleForm) -> Self {
        Self { form }
    }

    pub fn form(&self) -> &DoubleForm {
        &self.form
    }

    pub fn into_form(self) -> DoubleForm {
        self.form
    }

    pub fn n(&self) -> usize {
        self.form.n()
    }

    /// `cR`.
    pub fn ricci(&self) -> DoubleForm {
        self.form.contract().expect("(2,2) form")
    }

    /// `c²R`.
    pub fn scalar_curvature(&self) -> f64 {
        self.form.contract_k(2).expect("(2,2) form").coeffs()[0]
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    /// `R + S`, staying inside the curvature space.
    pub fn add(&self, other: &Self) -> Self {
        Self::from_form_unchecked(&self.form + &other.form)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_form_unchecked(&self.form * factor)
    }
}

/// `(κ/2) g²`, the curvature of constant sectional curvature `κ`.
pub fn constant_curvature(n: usize, kappa: f64) -> AlgebraicCurvature {
    AlgebraicCurvature::from_form_unchecked(DoubleForm::metric_power(n, 2) * (kappa / 2.0))
}

fn plane(a: usize, b: usize) -> MultiIndex {
    MultiIndex::new(vec![a, b]).expect("a < b")
}

/// Builds a curvature tensor in dimension `n` from diagonal plane
/// curvatures `R(e_a, e_b; e_a, e_b)`.
pub fn from_plane_curvatures(n: usize, planes: &[((usize, usize), f64)]) -> Result<AlgebraicCurvature> {
    let entries = planes
        .iter()
        .map(|&((a, b), v)| Ok((MultiIndex::in_dimension(vec![a, b], n)?, plane(a, b), v)))
        .collect::<Result<Vec<_>>>()?;
    AlgebraicCurvature::new(DoubleForm::from_entries(n, 2, 2, entries)?)
}

/// A Ricci-flat, generally non-flat curvature tensor in dimension four:
/// `R_{0101} = R_{2323} = c1`, `R_{0202} = R_{1313} = c2`,
/// `R_{0303} = R_{1212} = c3`, with `c1 + c2 + c3 = 0`.
pub fn ricci_flat_4d(c1: f64, c2: f64, c3: f64) -> Result<AlgebraicCurvature> {
    let sum = c1 + c2 + c3;
    if sum.abs() > 1e-12 * (c1.abs() + c2.abs() + c3.abs()).max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "plane curvatures must sum to zero, got {sum}"
        )));
    }
    from_plane_curvatures(
        4,
        &[
            ((0, 1), c1),
            ((2, 3), c1),
            ((0, 2), c2),
            ((1, 3), c2),
            ((0, 3), c3),
            ((1, 2), c3),
        ],
    )
}

/// A three-dimensional curvature tensor with `Ric = diag(1, 1, 0)`.
pub fn non_einstein_3d() -> AlgebraicCurvature {
    from_plane_curvatures(3, &[((0, 1), 1.0)]).expect("valid plane curvature")
}

/// Curvature of `M × T^k`: the coefficients of `R` on the first `n`
/// indices, zero on anything touching the `k` new flat directions.
pub fn extend_flat(r: &AlgebraicCurvature, k: usize) -> AlgebraicCurvature {
    let n = r.n() + k;
    let form = DoubleForm::from_entries(n, 2, 2, r.form.entries()).expect("indices stay valid");
    AlgebraicCurvature::from_form_unchecked(form)
}

/// Curvature of a Riemannian product `M1 × M2`, the second factor's
/// indices shifted past the first's.
pub fn direct_sum(first: &AlgebraicCurvature, second: &AlgebraicCurvature) -> AlgebraicCurvature {
    let offset = first.n();
    let shift =
        |m: &MultiIndex| MultiIndex::new(m.indices().iter().map(|i| i + offset).collect()).expect("shift keeps order");
    let entries = first.form.entries().into_iter().chain(
        second
            .form
            .entries()
            .into_iter()
            .map(|(l, r, v)| (shift(&l), shift(&r), v)),
    );
    let form = DoubleForm::from_entries(offset + second.n(), 2, 2, entries).expect("disjoint supports");
    AlgebraicCurvature::from_form_unchecked(form)
}

/// Schouten tensor `A = (cR − c²R/(2(n−1)) g)/(n−2)`.
pub fn schouten(r: &AlgebraicCurvature) -> Result<DoubleForm> {
    let n = r.n();
    if n <= 2 {
        return Err(Error::InvalidParameter(format!(
            "the Schouten tensor needs n ≥ 3, got {n}"
        )));
    }
    let trace_term = DoubleForm::metric(n) * (r.scalar_curvature() / (2.0 * (n as f64 - 1.0)));
    Ok((&r.ricci() - &trace_term) * (1.0 / (n as f64 - 2.0)))
}

/// `A·g` for a symmetric `(1, 1)` form `A`.
pub fn from_schouten(a: &DoubleForm) -> Result<AlgebraicCurvature> {
    if a.degrees() != (1, 1) {
        return Err(Error::ShapeMismatch(format!(
            "Schouten tensor must be (1,1), got {:?}",
            a.degrees()
        )));
    }
    if !a.is_symmetric(DEFAULT_TOL) {
        return Err(Error::NotSymmetric(a.asymmetry()));
    }
    let form = a.product(&DoubleForm::metric(a.n()))?;
    Ok(AlgebraicCurvature::from_form_unchecked(form.symmetrized()))
}

/// A random symmetric `(1, 1)` form with entries in `[-1, 1)`.
pub fn random_symmetric_11(n: usize, rng: &mut impl Rng) -> DoubleForm {
    let mut coeffs = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            coeffs[i * n + j] = v;
            coeffs[j * n + i] = v;
        }
    }
    DoubleForm::from_coeffs(n, 1, 1, coeffs).expect("n × n coefficients")
}

/// A deterministic pseudo-random algebraic curvature tensor: a sum of
/// `n + 2` products `h·h'` of random symmetric `(1, 1)` forms, which satisfy
/// the first Bianchi identity structurally.
pub fn random_curvature(n: usize, seed: u64) -> AlgebraicCurvature {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = DoubleForm::zeros(n, 2, 2);
    for _ in 0..n + 2 {
        let h = random_symmetric_11(n, &mut rng);
        let k = random_symmetric_11(n, &mut rng);
        acc = &acc + &h.product(&k).expect("same dimension");
    }
    AlgebraicCurvature::from_form_unchecked(acc.symmetrized())
}

/// `R^q`, the `q`-fold exterior power. Coefficient-free when `2q > n`.
pub fn thorpe_power(r: &AlgebraicCurvature, q: usize) -> DoubleForm {
    r.form.power(q)
}

/// Thorpe's tensor `R_{2q} = (2^q/(2q)!) R^q`, addressed by its order `2q`.
pub fn thorpe_tensor(r: &AlgebraicCurvature, order: usize) -> Result<DoubleForm> {
    if order == 0 || !order.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "Thorpe tensor order must be even and positive, got {order}"
        )));
    }
    let q = order / 2;
    Ok(thorpe_power(r, q) * (2f64.powi(q as i32) / factorial(order)))
}

/// Largest deviation of the Gram matrix of `frame` from the identity.
pub fn orthonormality_defect<V: AsRef<[f64]>>(frame: &[V]) -> f64 {
    let mut worst = 0.0f64;
    for (a, u) in frame.iter().enumerate() {
        for (b, v) in frame.iter().enumerate() {
            let dot: f64 = u.as_ref().iter().zip(v.as_ref()).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// `R_{2q}(f_1, …, f_{2q}; f_1, …, f_{2q})` on an orthonormal `2q`-frame.
pub fn q_sectional<V: AsRef<[f64]>>(r: &AlgebraicCurvature, q: usize, frame: &[V]) -> Result<f64> {
    if q == 0 || frame.len() != 2 * q {
        return Err(Error::InvalidParameter(format!(
            "a {q}-sectional curvature needs {} frame vectors, got {}",
            2 * q,
            frame.len()
        )));
    }
    let defect = orthonormality_defect(frame);
    if defect > FRAME_TOL {
        return Err(Error::NonOrthonormalFrame(defect));
    }
    thorpe_tensor(r, 2 * q)?.eval(frame, frame)
}

/// A random orthonormal `k`-frame in `ℝ^n` (Gram–Schmidt on Gaussian-ish
/// vectors).
pub fn random_frame(n: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    assert!(k <= n, "cannot fit {k} orthonormal vectors in dimension {n}");
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // two passes of Gram-Schmidt keep the Gram matrix at round-off level
        for _ in 0..2 {
            for u in &frame {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            v.iter_mut().for_each(|x| *x /= norm);
            frame.push(v);
        }
    }
    frame
}

/// Largest `|R(x,y;z,t) + R(y,z;x,t) + R(z,x;y,t)|` over basis 4-tuples.
pub fn bianchi_residual(form: &DoubleForm) -> f64 {
    assert_eq!(form.degrees(), (2, 2), "Bianchi residual needs a (2,2) form");
    let n = form.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for t in 0..n {
                    let s = form.entry(&[x, y], &[z, t]) + form.entry(&[y, z], &[x, t]) + form.entry(&[z, x], &[y, t]);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Dimension `n²(n²−1)/12` of the space of algebraic curvature tensors.
pub fn curvature_space_dimension(n: usize) -> usize {
    let pairs = binomial(n, 2);
    pairs * (pairs + 1) / 2 - binomial(n, 4)
}
