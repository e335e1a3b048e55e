//! Residual minimization for generalized Einstein and Thorpe conditions
//! over linear spaces of curvature tensors.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{is_pq_einstein, thorpe_star_residual};
use crate::curvature::AlgebraicCurvature;
use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::form::DoubleForm;

/// Linear space the search moves in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchSpace {
    /// All algebraic curvature tensors.
    Bianchi,
    /// Tensors `A·g` with `A` a symmetric `(1, 1)` form.
    ConformallyFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    FiniteDifference,
    Analytic,
}

/// Target condition for [`minimize_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `c^p R^q ∝ g^{2q-p}`.
    PqEinstein { p: usize, q: usize },
    /// `*(g^{n/2-2q} R^q) = g^{n/2-2q} R^q`.
    Thorpe { q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Multiplier on the Polyak step `f/‖∇f‖²`.
    pub step: f64,
    /// Target relative residual.
    pub tol: f64,
    /// Seeds the perturbations tried when the line search stalls.
    pub seed: u64,
    pub space: SearchSpace,
    pub gradient: GradientMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step: 1.0,
            tol: 1e-6,
            seed: 0,
            space: SearchSpace::Bianchi,
            gradient: GradientMethod::FiniteDifference,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step and tol must be positive, got step = {}, tol = {}",
                self.step, self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub curvature: AlgebraicCurvature,
    /// Relative residual before the first step and after each accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn residual(&self) -> f64 {
        *self.trace.last().expect("trace holds the start")
    }
}

/// Orthonormal basis (columns) of a subspace of coefficient vectors of
/// `(2, 2)` forms in dimension `n`.
#[derive(Debug)]
pub struct Subspace {
    n: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `Bᵀ ω`.
    pub fn coords(&self, form: &DoubleForm) -> DVector<f64> {
        self.basis.tr_mul(&DVector::from_column_slice(form.coeffs()))
    }

    /// `B x`.
    pub fn form(&self, x: &DVector<f64>) -> DoubleForm {
        let v = &self.basis * x;
        DoubleForm::from_coeffs(self.n, 2, 2, v.as_slice().to_vec()).expect("basis rows match")
    }

    /// `B Bᵀ ω`.
    pub fn project(&self, form: &DoubleForm) -> DoubleForm {
        self.form(&self.coords(form))
    }

    fn direction(&self, i: usize) -> DoubleForm {
        self.form(&DVector::from_fn(self.dim(), |j, _| if i == j { 1.0 } else { 0.0 }))
    }
}

type Cache = RwLock<HashMap<(usize, u8), Arc<Subspace>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn memoized(n: usize, kind: u8, build: impl FnOnce() -> Subspace) -> Arc<Subspace> {
    if let Some(s) = cache().read().expect("cache lock").get(&(n, kind)) {
        return s.clone();
    }
    let s = Arc::new(build());
    cache()
        .write()
        .expect("cache lock")
        .entry((n, kind))
        .or_insert(s)
        .clone()
}

/// Eigenvectors of `MᵀM` with eigenvalue below `eps·max(1, largest)`.
fn null_space(m: &DMatrix<f64>, cols: usize) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let eig = SymmetricEigen::new(m.tr_mul(m));
    let top = eig.eigenvalues.amax().max(1.0);
    let keep: Vec<usize> = (0..cols).filter(|&i| eig.eigenvalues[i] <= 1e-10 * top).collect();
    DMatrix::from_fn(cols, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Orthonormal basis of the column span of `v`.
fn orthonormal_span(v: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(v.tr_mul(v));
    let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..v.ncols()).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    let w = DMatrix::from_fn(v.ncols(), keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
    });
    v * w
}

/// Symmetric `(2, 2)` coordinates: one per unordered pair of basis 2-vectors,
/// embedded isometrically into the coefficient vector.
fn symmetric_embedding(n: usize) -> DMatrix<f64> {
    let m = binomial(n, 2);
    let sym = m * (m + 1) / 2;
    let mut e = DMatrix::zeros(m * m, sym);
    let mut col = 0;
    for a in 0..m {
        for b in a..m {
            if a == b {
                e[(a * m + a, col)] = 1.0;
            } else {
                e[(a * m + b, col)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(b * m + a, col)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            col += 1;
        }
    }
    e
}

fn pair_rank(a: usize, b: usize, n: usize) -> usize {
    // lexicographic rank of {a < b} among 2-subsets of [0, n)
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// The space of algebraic curvature tensors in dimension `n`.
pub fn bianchi_subspace(n: usize) -> Arc<Subspace> {
    memoized(n, 0, || {
        let m = binomial(n, 2);
        let embed = symmetric_embedding(n);
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        let mut row = DVector::zeros(m * m);
                        let at = |i: usize, j: usize| i * m + j;
                        row[at(pair_rank(a, b, n), pair_rank(c, d, n))] += 1.0;
                        row[at(pair_rank(a, c, n), pair_rank(b, d, n))] -= 1.0;
                        row[at(pair_rank(a, d, n), pair_rank(b, c, n))] += 1.0;
                        rows.push(embed.tr_mul(&row));
                    }
                }
            }
        }
        let constraints = DMatrix::from_fn(rows.len(), embed.ncols(), |r, c| rows[r][c]);
        let kernel = null_space(&constraints, embed.ncols());
        Subspace {
            n,
            basis: &embed * kernel,
        }
    })
}

/// The span of `E_{ab}·g` over symmetric `(1, 1)` forms `E_{ab}`.
pub fn conformally_flat_subspace(n: usize) -> Arc<Subspace> {
    memoized(n, 1, || {
        let g = DoubleForm::metric(n);
        let mut columns = Vec::new();
        for a in 0..n {
            for b in a..n {
                let mut coeffs = vec![0.0; n * n];
                coeffs[a * n + b] = 1.0;
                coeffs[b * n + a] = 1.0;
                let e = DoubleForm::from_coeffs(n, 1, 1, coeffs).expect("n × n");
                columns.push(e.product(&g).expect("same dimension").into_coeffs());
            }
        }
        let len = binomial(n, 2).pow(2);
        let v = DMatrix::from_fn(len, columns.len(), |r, c| columns[c][r]);
        Subspace {
            n,
            basis: orthonormal_span(&v),
        }
    })
}

/// Algebraic curvature tensors whose Ricci contraction is a multiple of `g`.
pub fn einstein_subspace(n: usize) -> Arc<Subspace> {
    memoized(n, 2, || {
        let bianchi = bianchi_subspace(n);
        let mut rows = Vec::new();
        for i in 0..bianchi.dim() {
            let ric = bianchi.direction(i).contract().expect("(2,2) form");
            let trace: f64 = (0..n).map(|k| ric.coeffs()[k * n + k]).sum();
            let traceless = &ric - &(DoubleForm::metric(n) * (trace / n as f64));
            rows.push(traceless.into_coeffs());
        }
        let l = DMatrix::from_fn(n * n, bianchi.dim(), |r, c| rows[c][r]);
        let kernel = null_space(&l, bianchi.dim());
        Subspace {
            n,
            basis: bianchi.basis() * kernel,
        }
    })
}

pub fn subspace(n: usize, space: SearchSpace) -> Arc<Subspace> {
    match space {
        SearchSpace::Bianchi => bianchi_subspace(n),
        SearchSpace::ConformallyFlat => conformally_flat_subspace(n),
    }
}

/// Orthogonal projection of a `(2, 2)` form onto algebraic curvature tensors.
pub fn bianchi_project(form: &DoubleForm) -> Result<AlgebraicCurvature> {
    if form.degrees() != (2, 2) {
        return Err(Error::ShapeMismatch(format!(
            "expected a (2,2) form, got {:?}",
            form.degrees()
        )));
    }
    Ok(AlgebraicCurvature::from_form_unchecked(
        bianchi_subspace(form.n()).project(form),
    ))
}

/// Orthogonal projection onto `{R : cR ∝ g}`.
pub fn einstein_project(r: &AlgebraicCurvature) -> Result<AlgebraicCurvature> {
    if r.n() < 3 {
        return Err(Error::InvalidParameter(format!(
            "the Einstein projection needs n ≥ 3, got {}",
            r.n()
        )));
    }
    Ok(AlgebraicCurvature::from_form_unchecked(
        einstein_subspace(r.n()).project(r.form()),
    ))
}

/// `R + size·‖R‖·N` for `N` a unit-norm random curvature tensor in the given space.
pub fn perturb(r: &AlgebraicCurvature, size: f64, seed: u64, space: SearchSpace) -> AlgebraicCurvature {
    let sub = subspace(r.n(), space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(sub.dim(), |_, _| rng.gen_range(-1.0..1.0));
    x /= x.norm();
    let scale = r.form().norm().max(1.0);
    r.add(&AlgebraicCurvature::from_form_unchecked(
        sub.form(&(x * (size * scale))),
    ))
}

/// The form `e` whose defect `L e` the condition asks to vanish.
fn condition_parts(r: &DoubleForm, condition: Condition, power: &DoubleForm) -> DoubleForm {
    match condition {
        Condition::PqEinstein { p, .. } => power.contract_k(p).expect("validated degrees"),
        Condition::Thorpe { q } => {
            let m = r.n() / 2 - 2 * q;
            DoubleForm::metric_power(r.n(), m)
                .product(power)
                .expect("same dimension")
        }
    }
}

fn defect(e: &DoubleForm, condition: Condition) -> DoubleForm {
    match condition {
        Condition::PqEinstein { .. } => {
            let gm = DoubleForm::metric_power(e.n(), e.p());
            let gm_sq = gm.norm().powi(2);
            let lambda = e.inner(&gm).expect("same shape") / gm_sq;
            e - &(&gm * lambda)
        }
        Condition::Thorpe { .. } => &e.star() - e,
    }
}

fn power_of(r: &DoubleForm, condition: Condition) -> DoubleForm {
    let q = match condition {
        Condition::PqEinstein { q, .. } | Condition::Thorpe { q } => q,
    };
    r.power(q)
}

/// Relative residual `‖L e‖/‖e‖` of the condition (0 when `e = 0`).
pub fn condition_residual(r: &DoubleForm, condition: Condition) -> f64 {
    let e = condition_parts(r, condition, &power_of(r, condition));
    let norm = e.norm();
    if norm == 0.0 {
        return 0.0;
    }
    defect(&e, condition).norm() / norm
}

fn validate(r: &AlgebraicCurvature, condition: Condition) -> Result<()> {
    match condition {
        Condition::PqEinstein { p, q } => is_pq_einstein(r, p, q, 0.0).map(|_| ()),
        Condition::Thorpe { q } => thorpe_star_residual(r, q).map(|_| ()),
    }
}

fn objective(r0: &DoubleForm, sub: &Subspace, x: &DVector<f64>, condition: Condition) -> f64 {
    let r = r0 + &sub.form(x);
    condition_residual(&r, condition).powi(2)
}

/// Central-difference gradient of the squared relative residual with
/// respect to subspace coordinates at `R0 + B x`.
pub fn numeric_gradient(
    r0: &DoubleForm,
    sub: &Subspace,
    x: &DVector<f64>,
    condition: Condition,
    h: f64,
) -> DVector<f64> {
    DVector::from_fn(sub.dim(), |i, _| {
        let mut plus = x.clone();
        plus[i] += h;
        let mut minus = x.clone();
        minus[i] -= h;
        (objective(r0, sub, &plus, condition) - objective(r0, sub, &minus, condition)) / (2.0 * h)
    })
}

/// Exact gradient from `d(R^q) = q R^{q-1} δR`:
/// `df = 2⟨Le, L de⟩/‖e‖² − 2‖Le‖²⟨e, de⟩/‖e‖⁴`.
pub fn analytic_gradient(r0: &DoubleForm, sub: &Subspace, x: &DVector<f64>, condition: Condition) -> DVector<f64> {
    let r = r0 + &sub.form(x);
    let q = match condition {
        Condition::PqEinstein { q, .. } | Condition::Thorpe { q } => q,
    };
    let e = condition_parts(&r, condition, &r.power(q));
    let e_sq = e.norm().powi(2);
    if e_sq == 0.0 {
        return DVector::zeros(sub.dim());
    }
    let le = defect(&e, condition);
    let le_sq = le.norm().powi(2);
    let lower = r.power(q - 1) * q as f64;
    DVector::from_fn(sub.dim(), |i, _| {
        let d_power = lower.product(&sub.direction(i)).expect("same dimension");
        let de = condition_parts(&r, condition, &d_power);
        let lde = defect(&de, condition);
        2.0 * le.inner(&lde).expect("same shape") / e_sq
            - 2.0 * le_sq * e.inner(&de).expect("same shape") / (e_sq * e_sq)
    })
}

const MIN_STEP: f64 = 1e-12;
const STALL_ATTEMPTS: usize = 8;

/// Gradient descent with backtracking on the squared relative residual,
/// moving from `r0` along the chosen search space.
pub fn minimize_residual(r0: &AlgebraicCurvature, condition: Condition, opts: &SolveOptions) -> Result<SolveResult> {
    opts.validate()?;
    validate(r0, condition)?;
    let n = r0.n();
    let sub = subspace(n, opts.space);
    let base = r0.form();
    let scale = base.norm().max(1.0);
    let fd_step = 1e-6 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut x = DVector::zeros(sub.dim());
    let mut f = objective(base, &sub, &x, condition);
    let mut trace = vec![f.sqrt()];
    let mut iterations = 0;

    while iterations < opts.max_iterations && f.sqrt() > opts.tol {
        let grad = match opts.gradient {
            GradientMethod::FiniteDifference => numeric_gradient(base, &sub, &x, condition, fd_step),
            GradientMethod::Analytic => analytic_gradient(base, &sub, &x, condition),
        };
        let g_sq = grad.norm_squared();
        let mut accepted = None;
        if g_sq > 0.0 {
            let mut t = opts.step * f / g_sq;
            while t * grad.norm() > MIN_STEP * scale {
                let candidate = &x - &grad * t;
                let fc = objective(base, &sub, &candidate, condition);
                if fc < f {
                    accepted = Some((candidate, fc));
                    break;
                }
                t *= 0.5;
            }
        }
        if accepted.is_none() {
            let radius = f.sqrt() * scale;
            for _ in 0..STALL_ATTEMPTS {
                let mut d = DVector::from_fn(sub.dim(), |_, _| rng.gen_range(-1.0..1.0));
                d *= radius / d.norm();
                let candidate = &x + &d;
                let fc = objective(base, &sub, &candidate, condition);
                if fc < f {
                    accepted = Some((candidate, fc));
                    break;
                }
            }
        }
        let Some((next, fc)) = accepted else { break };
        x = next;
        f = fc;
        iterations += 1;
        trace.push(f.sqrt());
    }

    let curvature = if iterations == 0 {
        r0.clone()
    } else {
        AlgebraicCurvature::from_form_unchecked(base + &sub.form(&x))
    };
    Ok(SolveResult {
        curvature,
        converged: f.sqrt() <= opts.tol,
        trace,
        iterations,
    })
}
