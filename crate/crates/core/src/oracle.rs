//! Slow brute-force reference implementations.
//!
//! Nothing here calls the product or contraction of [`DoubleForm`]; values
//! are computed from the defining index sums over full coefficient arrays.

use crate::error::{Error, Result};
use crate::exterior::{enumerate_basis, rank, MultiIndex};
use crate::form::DoubleForm;

/// Largest coefficient array the oracle will allocate.
pub const MAX_ENTRIES: u128 = 100_000_000;

/// Largest `p` accepted by [`thorpe_permutation`].
pub const DEFAULT_MAX_P: usize = 2;

/// A `(p, q)` tensor stored over every index tuple `(i_1..i_p; j_1..j_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    n: usize,
    p: usize,
    q: usize,
    data: Vec<f64>,
}

fn checked_len(n: usize, order: usize) -> Result<usize> {
    let len = (n as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
    if len > MAX_ENTRIES {
        return Err(Error::SizeOverflow(len));
    }
    Ok(len as usize)
}

/// Parity of a sequence of distinct integers by counting inversions.
fn parity(seq: &[usize]) -> f64 {
    let mut inversions = 0;
    for a in 0..seq.len() {
        for b in a + 1..seq.len() {
            if seq[a] > seq[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out.into_iter()
        .map(|perm| {
            let s = parity(&perm);
            (perm, s)
        })
        .collect()
}

fn has_repeat(seq: &[usize]) -> bool {
    (0..seq.len()).any(|a| (a + 1..seq.len()).any(|b| seq[a] == seq[b]))
}

impl DenseTensor {
    pub fn zeros(n: usize, p: usize, q: usize) -> Result<Self> {
        let len = checked_len(n, p + q)?;
        Ok(Self {
            n,
            p,
            q,
            data: vec![0.0; len],
        })
    }

    /// The metric `δ_{ij}` as a `(1, 1)` tensor.
    pub fn metric(n: usize) -> Result<Self> {
        let mut t = Self::zeros(n, 1, 1)?;
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    fn tuple(&self, mut offset: usize) -> Vec<usize> {
        let order = self.p + self.q;
        let mut t = vec![0; order];
        for slot in (0..order).rev() {
            t[slot] = offset % self.n;
            offset /= self.n;
        }
        t
    }

    /// Value at `(left; right)`.
    pub fn get(&self, left: &[usize], right: &[usize]) -> f64 {
        assert_eq!((left.len(), right.len()), (self.p, self.q), "tuple lengths");
        let mut t = left.to_vec();
        t.extend_from_slice(right);
        self.data[self.offset(&t)]
    }

    /// Expands a double form by alternation over each slot group.
    pub fn from_form(form: &DoubleForm) -> Result<Self> {
        let (n, p, q) = (form.n(), form.p(), form.q());
        let mut t = Self::zeros(n, p, q)?;
        let cols = form.cols();
        for offset in 0..t.data.len() {
            let tuple = t.tuple(offset);
            let (left, right) = tuple.split_at(p);
            if has_repeat(left) || has_repeat(right) {
                continue;
            }
            let (mut ls, mut rs) = (left.to_vec(), right.to_vec());
            ls.sort_unstable();
            rs.sort_unstable();
            let sign = parity(left) * parity(right);
            let row = rank(&MultiIndex::new(ls)?, n);
            let col = rank(&MultiIndex::new(rs)?, n);
            t.data[offset] = sign * form.coeffs()[row * cols + col];
        }
        Ok(t)
    }

    /// Reads the coefficients on increasing index tuples.
    pub fn to_form(&self) -> Result<DoubleForm> {
        if self.p > self.n || self.q > self.n {
            return Ok(DoubleForm::zeros(self.n, self.p, self.q));
        }
        let rows = enumerate_basis(self.n, self.p)?;
        let cols = enumerate_basis(self.n, self.q)?;
        let mut coeffs = Vec::with_capacity(rows.len() * cols.len());
        for i in &rows {
            for j in &cols {
                coeffs.push(self.get(i.indices(), j.indices()));
            }
        }
        DoubleForm::from_coeffs(self.n, self.p, self.q, coeffs)
    }

    /// Multilinear evaluation `Σ t_{a..;b..} u_1^{a_1}… v_1^{b_1}…`.
    pub fn evaluate<U: AsRef<[f64]>, V: AsRef<[f64]>>(&self, u: &[U], v: &[V]) -> f64 {
        assert_eq!((u.len(), v.len()), (self.p, self.q), "vector counts");
        let vectors: Vec<&[f64]> = u.iter().map(AsRef::as_ref).chain(v.iter().map(AsRef::as_ref)).collect();
        let mut total = 0.0;
        for (offset, &value) in self.data.iter().enumerate() {
            if value == 0.0 {
                continue;
            }
            let tuple = self.tuple(offset);
            total += value * tuple.iter().zip(&vectors).map(|(&i, w)| w[i]).product::<f64>();
        }
        total
    }
}

/// `(cω)(x; y) = Σ_j ω(e_j, x; e_j, y)`.
pub fn dense_contract(t: &DenseTensor) -> Result<DenseTensor> {
    if t.p == 0 || t.q == 0 {
        return Err(Error::DegreeUnderflow { p: t.p, q: t.q, k: 1 });
    }
    let mut out = DenseTensor::zeros(t.n, t.p - 1, t.q - 1)?;
    for offset in 0..out.data.len() {
        let tuple = out.tuple(offset);
        let (left, right) = tuple.split_at(t.p - 1);
        out.data[offset] = (0..t.n)
            .map(|j| {
                let mut l = vec![j];
                l.extend_from_slice(left);
                let mut r = vec![j];
                r.extend_from_slice(right);
                t.get(&l, &r)
            })
            .sum();
    }
    Ok(out)
}

/// Exterior product by the antisymmetrized shuffle sum
/// `1/(p1! p2! q1! q2!) Σ_{σ,τ} ε(σ)ε(τ) ω(x_σ; y_τ) θ(x_σ; y_τ)`.
pub fn dense_product(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    if a.n != b.n {
        return Err(Error::ShapeMismatch(format!("dimensions {} and {}", a.n, b.n)));
    }
    let (p, q) = (a.p + b.p, a.q + b.q);
    let mut out = DenseTensor::zeros(a.n, p, q)?;
    let sigmas = permutations(p);
    let taus = permutations(q);
    let norm: f64 = [a.p, b.p, a.q, b.q]
        .iter()
        .map(|&k| (1..=k).product::<usize>() as f64)
        .product();
    for offset in 0..out.data.len() {
        let tuple = out.tuple(offset);
        let (x, y) = tuple.split_at(p);
        if has_repeat(x) || has_repeat(y) {
            continue;
        }
        let mut total = 0.0;
        for (sigma, es) in &sigmas {
            let xs: Vec<usize> = sigma.iter().map(|&i| x[i]).collect();
            for (tau, et) in &taus {
                let ys: Vec<usize> = tau.iter().map(|&i| y[i]).collect();
                total += es * et * a.get(&xs[..a.p], &ys[..a.q]) * b.get(&xs[a.p..], &ys[a.q..]);
            }
        }
        out.data[offset] = total / norm;
    }
    Ok(out)
}

/// Literal permutation sum
/// `R_{2p}(u; v) = 2^{-p}/(2p)! Σ_{α,β ∈ S_{2p}} ε(α)ε(β) Π_i R(u_{α(2i-1)}, u_{α(2i)}; v_{β(2i-1)}, v_{β(2i)})`
/// over the first `2p` vectors of `u` and `v`. Limited to `p ≤ 2`.
pub fn thorpe_permutation<U, V>(r: &DoubleForm, p: usize, u: &[U], v: &[V]) -> Result<f64>
where
    U: AsRef<[f64]>,
    V: AsRef<[f64]>,
{
    thorpe_permutation_with_limit(r, p, u, v, DEFAULT_MAX_P)
}

/// As [`thorpe_permutation`] with an explicit bound on `p`; at `p = 3` one
/// evaluation is a sum of `518400` terms.
pub fn thorpe_permutation_with_limit<U, V>(r: &DoubleForm, p: usize, u: &[U], v: &[V], max_p: usize) -> Result<f64>
where
    U: AsRef<[f64]>,
    V: AsRef<[f64]>,
{
    if p == 0 || p > max_p {
        return Err(Error::InvalidParameter(format!(
            "permutation oracle limited to 1 ≤ p ≤ {max_p}, got {p}"
        )));
    }
    if r.degrees() != (2, 2) {
        return Err(Error::ShapeMismatch(format!(
            "expected a (2,2) form, got {:?}",
            r.degrees()
        )));
    }
    let m = 2 * p;
    if u.len() < m || v.len() < m {
        return Err(Error::VectorMismatch {
            expected: m,
            n: r.n(),
            got: format!("{} and {}", u.len(), v.len()),
        });
    }
    if u.iter().any(|w| w.as_ref().len() != r.n()) || v.iter().any(|w| w.as_ref().len() != r.n()) {
        return Err(Error::VectorMismatch {
            expected: m,
            n: r.n(),
            got: "vectors of the wrong length".into(),
        });
    }
    let dense = DenseTensor::from_form(r)?;
    // R(u_a, u_b; v_c, v_d) for every index quadruple
    let mut table = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    table[((a * m + b) * m + c) * m + d] =
                        dense.evaluate(&[u[a].as_ref(), u[b].as_ref()], &[v[c].as_ref(), v[d].as_ref()]);
                }
            }
        }
    }
    let perms = permutations(m);
    let mut total = 0.0;
    for (alpha, ea) in &perms {
        for (beta, eb) in &perms {
            let mut term = ea * eb;
            for i in 0..p {
                let (a, b) = (alpha[2 * i], alpha[2 * i + 1]);
                let (c, d) = (beta[2 * i], beta[2 * i + 1]);
                term *= table[((a * m + b) * m + c) * m + d];
            }
            total += term;
        }
    }
    let fact: f64 = (1..=m).product::<usize>() as f64;
    Ok(total / (2f64.powi(p as i32) * fact))
}
