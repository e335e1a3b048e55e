//! Orthogonal splitting `ω = Σ_i g^i ω_{p-i}` of a `(p, p)` double form
//! into trace-free components, and division by the metric.
//!
//! Both are least-squares problems. They are solved block by block: the
//! maps `η ↦ g·η` and `ω ↦ cω` never change the index sets `I \ J` and
//! `J \ I`, and after a sign normalization each block `(A, B)` is a copy of
//! the subset lattice of `U = [0, n) \ (A ∪ B)`, where multiplication by
//! `g` adds one element of `U` and the contraction removes one. Blocks of
//! the same shape share a least-squares plan, which is memoized.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exterior::{basis_masks, binomial, factorial, mask_indices, mask_rank, shuffle_sign};
use crate::form::{DoubleForm, DEFAULT_TOL};

/// Relative residual below which a form counts as divisible by `g`.
pub const DIVISIBILITY_TOL: f64 = 1e-8;

/// Components `[ω_p, ω_{p-1}, …, ω_0]` of a `(p, p)` form, each trace-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    n: usize,
    components: Vec<DoubleForm>,
}

impl Decomposition {
    /// Wraps components given in descending degree `p, p-1, …, 0`.
    pub fn new(components: Vec<DoubleForm>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::ShapeMismatch("empty decomposition".into()));
        };
        let n = first.n();
        let p = components.len() - 1;
        for (i, w) in components.iter().enumerate() {
            if w.n() != n || w.degrees() != (p - i, p - i) {
                return Err(Error::ShapeMismatch(format!(
                    "component {i} should be a ({0},{0}) form in dimension {n}, got {1:?} in dimension {2}",
                    p - i,
                    w.degrees(),
                    w.n()
                )));
            }
        }
        Ok(Self { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Degree `p` of the decomposed form.
    pub fn degree(&self) -> usize {
        self.components.len() - 1
    }

    /// All components, highest degree first.
    pub fn components(&self) -> &[DoubleForm] {
        &self.components
    }

    /// The trace-free component `ω_r` of degree `r`.
    pub fn component(&self, r: usize) -> &DoubleForm {
        &self.components[self.degree() - r]
    }

    /// The summand `g^{p-r} ω_r`.
    pub fn summand(&self, r: usize) -> DoubleForm {
        DoubleForm::metric_power(self.n, self.degree() - r)
            .product(self.component(r))
            .expect("same dimension")
    }

    /// `‖ω_r‖` for `r = p, p-1, …, 0`.
    pub fn component_norms(&self) -> Vec<f64> {
        self.components.iter().map(DoubleForm::norm).collect()
    }

    /// `Σ_i g^i ω_{p-i}`.
    pub fn assemble(&self) -> DoubleForm {
        let p = self.degree();
        let mut acc = DoubleForm::zeros(self.n, p, p);
        for (i, w) in self.components.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            acc = &acc + &DoubleForm::metric_power(self.n, i).product(w).expect("same dimension");
        }
        acc
    }
}

/// Reassembles `Σ_i g^i ω_{p-i}` from components listed highest degree first.
pub fn assemble(components: Vec<DoubleForm>) -> Result<DoubleForm> {
    Ok(Decomposition::new(components)?.assemble())
}

/// Splits a symmetric `(p, p)` form into trace-free components.
pub fn split(omega: &DoubleForm) -> Result<Decomposition> {
    let (n, p) = (omega.n(), omega.p());
    if omega.p() != omega.q() || !omega.is_symmetric(DEFAULT_TOL) {
        return Err(Error::NotSymmetric(omega.asymmetry()));
    }
    if p > n {
        return Err(Error::Domain { n, p });
    }
    let mut components: Vec<DoubleForm> = (0..=p).map(|i| DoubleForm::zeros(n, p - i, p - i)).collect();
    for block in Block::layout(n, p, p) {
        let plan = split_plan(block.universe, block.s);
        let local = block.gather(omega);
        let coords = &plan.pinv * &local;
        for (i, (offset, basis)) in plan.components.iter().enumerate() {
            if basis.ncols() == 0 {
                continue;
            }
            let x = coords.rows(*offset, basis.ncols());
            let values = basis * x;
            block.scatter(&mut components[i], block.s - i, values.as_slice());
        }
    }
    Decomposition::new(components)
}

/// Returns `η` with `g·η = ω` when that system is consistent to within
/// [`DIVISIBILITY_TOL`] relative to `‖ω‖`.
pub fn divide_by_g(omega: &DoubleForm) -> Result<DoubleForm> {
    divide_by_g_with_tol(omega, DIVISIBILITY_TOL)
}

pub fn divide_by_g_with_tol(omega: &DoubleForm, tol: f64) -> Result<DoubleForm> {
    let (n, p, q) = (omega.n(), omega.p(), omega.q());
    if p == 0 || q == 0 {
        return Err(Error::DegreeUnderflow { p, q, k: 1 });
    }
    let mut quotient = DoubleForm::zeros(n, p - 1, q - 1);
    let mut residual_sq = 0.0;
    for block in Block::layout(n, p, q) {
        let local = block.gather(omega);
        if block.s == 0 {
            residual_sq += local.norm_squared();
            continue;
        }
        let plan = divide_plan(block.universe, block.s);
        let eta = &plan.pinv * &local;
        residual_sq += (&plan.up * &eta - &local).norm_squared();
        block.scatter(&mut quotient, block.s - 1, eta.as_slice());
    }
    let scale = omega.norm();
    let residual = if scale > 0.0 { residual_sq.sqrt() / scale } else { 0.0 };
    if residual > tol {
        return Err(Error::NotDivisible { residual });
    }
    Ok(quotient)
}

/// `α_{ik}` in `c^k ω = Σ_{i ≥ k} α_{ik} g^{i-k} ω_{p-i}` for a `(p, p)` form
/// in dimension `n`.
pub fn contraction_coefficient(n: usize, p: usize, i: usize, k: usize) -> f64 {
    if k > i {
        return 0.0;
    }
    let falling = factorial(i) / factorial(i - k);
    let base = n as f64 - 2.0 * p as f64 + i as f64;
    (1..=k).fold(falling, |acc, j| acc * (base + j as f64))
}

// ---------------------------------------------------------------------------
// Block structure.

/// Coefficients `ω(A ∪ C; B ∪ C)` of one block, indexed by the rank of `C`
/// among the `s`-subsets of `U`.
struct Block {
    a: u32,
    b: u32,
    universe_mask: u32,
    universe: usize,
    s: usize,
}

impl Block {
    fn layout(n: usize, p: usize, q: usize) -> Vec<Block> {
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut keys: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for &l in &basis_masks(n, p) {
            for &r in &basis_masks(n, q) {
                let common = l & r;
                keys.entry((l & !common, r & !common))
                    .or_insert(common.count_ones() as usize);
            }
        }
        keys.into_iter()
            .map(|((a, b), s)| {
                let universe_mask = full & !(a | b);
                Block {
                    a,
                    b,
                    universe_mask,
                    universe: universe_mask.count_ones() as usize,
                    s,
                }
            })
            .collect()
    }

    /// Maps a subset of `[0, |U|)` to the corresponding subset of `U`.
    fn expand(&self, local: u32) -> u32 {
        mask_indices(self.universe_mask)
            .enumerate()
            .filter(|(k, _)| local & (1 << k) != 0)
            .fold(0, |m, (_, i)| m | (1 << i))
    }

    fn sign(&self, common: u32) -> f64 {
        shuffle_sign(self.a, common) * shuffle_sign(self.b, common)
    }

    fn gather(&self, omega: &DoubleForm) -> DVector<f64> {
        let locals = basis_masks(self.universe, self.s);
        DVector::from_iterator(
            locals.len(),
            locals.iter().map(|&local| {
                let c = self.expand(local);
                self.sign(c) * omega.get_mask(self.a | c, self.b | c)
            }),
        )
    }

    /// Writes block values on `t`-subsets of `U` into `target`.
    fn scatter(&self, target: &mut DoubleForm, t: usize, values: &[f64]) {
        for (&local, &v) in basis_masks(self.universe, t).iter().zip(values) {
            if v != 0.0 {
                let c = self.expand(local);
                target.add_mask(self.a | c, self.b | c, self.sign(c) * v);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Least-squares plans on the subset lattice of [0, N).

/// `up_t`: functions on `(t-1)`-subsets to functions on `t`-subsets,
/// `(up f)(S) = Σ_{a ∈ S} f(S \ a)`.
fn up_matrix(universe: usize, t: usize) -> DMatrix<f64> {
    let rows = basis_masks(universe, t);
    let cols = if t == 0 {
        Vec::new()
    } else {
        basis_masks(universe, t - 1)
    };
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (r, &s) in rows.iter().enumerate() {
        for a in mask_indices(s) {
            m[(r, mask_rank(s & !(1 << a), universe))] = 1.0;
        }
    }
    m
}

/// Orthonormal basis of the kernel of `up_tᵀ` (the trace-free functions).
fn trace_free_basis(universe: usize, t: usize) -> DMatrix<f64> {
    let dim = binomial(universe, t);
    if t == 0 {
        return DMatrix::identity(dim, dim);
    }
    let up = up_matrix(universe, t);
    let gram = &up * up.transpose();
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k].abs() <= 1e-9 * scale).collect();
    DMatrix::from_fn(dim, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

struct SplitPlan {
    /// `(offset, Z_{s-i})` for each summand `g^i ω_{p-i}`.
    components: Vec<(usize, DMatrix<f64>)>,
    pinv: DMatrix<f64>,
}

struct DividePlan {
    up: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

type Cache<T> = OnceLock<RwLock<HashMap<(usize, usize), Arc<T>>>>;

fn cached<T>(cache: &'static Cache<T>, key: (usize, usize), build: impl FnOnce() -> T) -> Arc<T> {
    let lock = cache.get_or_init(Default::default);
    if let Some(plan) = lock.read().expect("plan cache poisoned").get(&key) {
        return Arc::clone(plan);
    }
    let plan = Arc::new(build());
    lock.write()
        .expect("plan cache poisoned")
        .entry(key)
        .or_insert(plan)
        .clone()
}

/// `(MᵀM)⁺ Mᵀ` from the eigendecomposition of `MᵀM`, dropping eigenvalues
/// below `1e-10` of the largest.
fn pseudo_inverse(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let eig = SymmetricEigen::new(m.tr_mul(&m));
    let top = eig.eigenvalues.amax();
    let inverted = eig.eigenvalues.map(|v| if v > 1e-10 * top { 1.0 / v } else { 0.0 });
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&inverted) * v.transpose() * m.transpose()
}

fn split_plan(universe: usize, s: usize) -> Arc<SplitPlan> {
    static CACHE: Cache<SplitPlan> = OnceLock::new();
    cached(&CACHE, (universe, s), || {
        let rows = binomial(universe, s);
        let mut columns: Vec<DMatrix<f64>> = Vec::with_capacity(s + 1);
        let mut components = Vec::with_capacity(s + 1);
        let mut offset = 0;
        for i in 0..=s {
            let z = trace_free_basis(universe, s - i);
            let mut image = z.clone();
            for t in (s - i + 1)..=s {
                image = up_matrix(universe, t) * image;
            }
            components.push((offset, z));
            offset += image.ncols();
            columns.push(image);
        }
        // images g^i Z_{s-i} are mutually orthogonal multiples of isometries
        let mut pinv = DMatrix::zeros(offset, rows);
        let mut row = 0;
        for image in &columns {
            let k = image.ncols();
            if k > 0 {
                let c_sq = image.column(0).norm_squared();
                if c_sq > 1e-12 {
                    pinv.rows_mut(row, k).copy_from(&(image.transpose() / c_sq));
                }
            }
            row += k;
        }
        SplitPlan { components, pinv }
    })
}

fn divide_plan(universe: usize, s: usize) -> Arc<DividePlan> {
    static CACHE: Cache<DividePlan> = OnceLock::new();
    cached(&CACHE, (universe, s), || {
        let up = up_matrix(universe, s);
        DividePlan {
            pinv: pseudo_inverse(up.clone()),
            up,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::MultiIndex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DoubleForm {
        let len = binomial(n, p).pow(2);
        DoubleForm::from_coeffs(n, p, p, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
            .symmetrized()
    }

    fn trace_free(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DoubleForm {
        let w = random_symmetric(rng, n, p);
        split(&w).unwrap().component(p).clone()
    }

    #[test]
    fn split_plans_are_exact_projections() {
        for universe in 1..10 {
            for s in 0..=universe {
                let plan = split_plan(universe, s);
                let rows = binomial(universe, s);
                let mut system = DMatrix::zeros(rows, 0);
                for (i, (_, z)) in plan.components.iter().enumerate() {
                    let image = ((s - i + 1)..=s).fold(z.clone(), |acc, t| up_matrix(universe, t) * acc);
                    let col = system.ncols();
                    system = system.insert_columns(col, image.ncols(), 0.0);
                    system.columns_mut(col, image.ncols()).copy_from(&image);
                }
                let err = (&system * &plan.pinv - DMatrix::identity(rows, rows)).amax();
                assert!(err < 1e-12, "N={universe} s={s}: {err:e}");
            }
        }
    }

    #[test]
    fn split_of_metric_powers() {
        let d = split(&DoubleForm::metric_power(4, 2)).unwrap();
        let norms = d.component_norms();
        assert!(norms[0] < 1e-12 && norms[1] < 1e-12);
        assert!((d.component(0).as_scalar().unwrap() - 1.0).abs() < 1e-12);
        let half = split(&(DoubleForm::metric_power(4, 2) * 0.5)).unwrap();
        assert!((half.component(0).as_scalar().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn split_in_dimension_three_has_no_top_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let w = random_symmetric(&mut rng, 3, 2);
            let d = split(&w).unwrap();
            assert!(d.component(2).norm() < 1e-12);
            assert!((&d.assemble() - &w).max_abs() < 1e-12);
        }
    }

    #[test]
    fn split_rejects_asymmetric_input() {
        let w = DoubleForm::from_entries(
            4,
            2,
            2,
            vec![(
                MultiIndex::new(vec![0, 1]).unwrap(),
                MultiIndex::new(vec![2, 3]).unwrap(),
                1.0,
            )],
        )
        .unwrap();
        assert!(matches!(split(&w), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn assemble_examples() {
        let n = 4;
        let parts = vec![
            DoubleForm::zeros(n, 2, 2),
            DoubleForm::zeros(n, 1, 1),
            DoubleForm::scalar(n, 1.0),
        ];
        assert_eq!(assemble(parts).unwrap(), DoubleForm::metric_power(n, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = trace_free(&mut rng, n, 2);
        let parts = vec![w.clone(), DoubleForm::zeros(n, 1, 1), DoubleForm::scalar(n, 0.0)];
        assert_eq!(assemble(parts).unwrap(), w);
        assert!(assemble(vec![DoubleForm::zeros(n, 2, 2), DoubleForm::zeros(n, 2, 2)]).is_err());
    }

    #[test]
    fn components_are_trace_free_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, p) in [(4, 2), (5, 2), (6, 3), (5, 3), (3, 3), (7, 3)] {
            let w = random_symmetric(&mut rng, n, p);
            let d = split(&w).unwrap();
            for r in 1..=p {
                assert!(
                    d.component(r).contract().unwrap().max_abs() < 1e-10,
                    "n={n} p={p} r={r}"
                );
                assert!(d.component(r).is_symmetric(1e-10));
            }
            let total: f64 = (0..=p).map(|r| d.summand(r).norm().powi(2)).sum();
            assert!((total - w.norm().powi(2)).abs() < 1e-9 * total);
            assert!((&d.assemble() - &w).max_abs() < 1e-10);
            for r in (n.saturating_sub(p) + 1)..=p {
                assert!(d.component(r).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn divide_examples() {
        let n = 4;
        let g = DoubleForm::metric(n);
        let q = divide_by_g(&DoubleForm::metric_power(n, 2)).unwrap();
        assert!((&q - &g).max_abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = trace_free(&mut rng, n, 1);
        let q = divide_by_g(&g.product(&w).unwrap()).unwrap();
        assert!((&q - &w).max_abs() < 1e-12);

        let w = trace_free(&mut rng, 5, 2);
        assert!(matches!(divide_by_g(&w), Err(Error::NotDivisible { .. })));
        assert!(divide_by_g(&DoubleForm::scalar(3, 1.0)).is_err());
    }

    #[test]
    fn alpha_coefficients_sign_pattern() {
        for n in 1..9 {
            for p in 1..=n.min(4) {
                for i in 0..=p {
                    assert_eq!(contraction_coefficient(n, p, i, 0), 1.0);
                    for k in 1..=i {
                        let a = contraction_coefficient(n, p, i, k);
                        if n >= 2 * p {
                            assert!(a > 0.0);
                        } else if a <= 0.0 {
                            // only where the component ω_{p-i} vanishes anyway
                            assert!(i + n < 2 * p, "n={n} p={p} i={i} k={k}");
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn split_assemble_roundtrip(seed in any::<u64>(), n in 1usize..7, p in 1usize..4) {
            prop_assume!(p <= n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_symmetric(&mut rng, n, p);
            let d = split(&w).unwrap();
            prop_assert!((&d.assemble() - &w).max_abs() < 1e-10);
            let again = split(&d.assemble()).unwrap();
            for (a, b) in again.components().iter().zip(d.components()) {
                prop_assert!((a - b).max_abs() < 1e-10);
            }
        }
    }
}
