//! Generalized Einstein predicates, Gauss–Bonnet curvatures, the
//! `(p, q)`-curvature tensor and Thorpe-condition residuals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::{q_sectional, random_frame, schouten, thorpe_power, thorpe_tensor, AlgebraicCurvature};
use crate::decomposition::split;
use crate::error::{Error, Result};
use crate::exterior::factorial;
use crate::form::DoubleForm;

/// Default relative tolerance for "proportional to a metric power".
pub const DEFAULT_TOL: f64 = 1e-9;

/// Forms whose norm is below this fraction of their natural scale are
/// treated as zero.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Number of random frames sampled when testing sectional constancy.
pub const SECTIONAL_SAMPLES: usize = 16;

const SECTIONAL_SEED: u64 = 0x5EC7_1057;

/// Best fit of a `(m, m)` form by a multiple of `g^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionalityResult {
    pub lambda: f64,
    pub residual: f64,
    pub relative_residual: f64,
    /// The form vanished (to the zero floor); every condition holds with `λ = 0`.
    pub degenerate: bool,
}

impl ProportionalityResult {
    pub fn holds(&self, tol: f64) -> bool {
        self.degenerate || self.relative_residual <= tol
    }
}

/// A predicate verdict together with the underlying fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub fit: ProportionalityResult,
}

/// Least-squares projection of a `(m, m)` form onto `g^m`.
pub fn proportionality(omega: &DoubleForm) -> ProportionalityResult {
    proportionality_with_scale(omega, 0.0)
}

/// As [`proportionality`], treating `omega` as zero when
/// `‖omega‖ ≤ ZERO_FLOOR · scale`.
pub fn proportionality_with_scale(omega: &DoubleForm, scale: f64) -> ProportionalityResult {
    let norm = omega.norm();
    let gm = DoubleForm::metric_power(omega.n(), omega.p());
    let gm_sq = gm.norm().powi(2);
    if norm == 0.0 || norm <= ZERO_FLOOR * scale || gm_sq == 0.0 {
        let degenerate = norm == 0.0 || norm <= ZERO_FLOOR * scale;
        return ProportionalityResult {
            lambda: 0.0,
            residual: norm,
            relative_residual: if degenerate { 0.0 } else { 1.0 },
            degenerate,
        };
    }
    let lambda = omega.inner(&gm).expect("same shape") / gm_sq;
    let residual = (omega - &(&gm * lambda)).norm();
    ProportionalityResult {
        lambda,
        residual,
        relative_residual: residual / norm,
        degenerate: false,
    }
}

fn power_scale(r: &AlgebraicCurvature, rq: &DoubleForm, q: usize) -> f64 {
    rq.norm().max(r.form().norm().powi(q as i32))
}

/// Range check `0 < p < 2q < n`.
fn check_pq(n: usize, p: usize, q: usize) -> Result<()> {
    if p == 0 || p >= 2 * q || 2 * q >= n {
        return Err(Error::InvalidParameter(format!(
            "(p,q) = ({p},{q}) needs 0 < p < 2q < n = {n}"
        )));
    }
    Ok(())
}

fn contracted_fit(r: &AlgebraicCurvature, rq: &DoubleForm, p: usize, q: usize) -> ProportionalityResult {
    let n = r.n() as f64;
    let contracted = rq.contract_k(p).expect("p < 2q");
    proportionality_with_scale(&contracted, power_scale(r, rq, q) * n.powi(p as i32))
}

/// `(p, q)`-Einstein: `c^p R^q = λ g^{2q-p}`.
pub fn is_pq_einstein(r: &AlgebraicCurvature, p: usize, q: usize, tol: f64) -> Result<Verdict> {
    check_pq(r.n(), p, q)?;
    let fit = contracted_fit(r, &thorpe_power(r, q), p, q);
    Ok(Verdict {
        holds: fit.holds(tol),
        fit,
    })
}

/// Hyper `(2k)`-Einstein: the `(1, k)` condition.
pub fn is_hyper_2k_einstein(r: &AlgebraicCurvature, k: usize, tol: f64) -> Result<Verdict> {
    is_pq_einstein(r, 1, k, tol)
}

/// `(2k)`-Einstein: `c^{2k-1} R^k = λ g`.
pub fn is_2k_einstein(r: &AlgebraicCurvature, k: usize, tol: f64) -> Result<Verdict> {
    if k == 0 {
        return Err(Error::InvalidParameter("2k-Einstein needs k ≥ 1".into()));
    }
    is_pq_einstein(r, 2 * k - 1, k, tol)
}

/// `(2q-p)!(n-1)!/(n-2q+p)!`: the constant relating a `(p, q)`-Einstein
/// `λ` to the `(2q)`-Einstein constant of the same tensor.
pub fn implication_constant(n: usize, p: usize, q: usize) -> f64 {
    factorial(2 * q - p) * factorial(n - 1) / factorial(n - 2 * q + p)
}

/// Both ends of the implication `(p, q)`-Einstein ⇒ `(2q)`-Einstein.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Implication {
    pub pq: Verdict,
    pub two_q: Verdict,
    /// `implication_constant · λ_{(p,q)}`.
    pub expected_lambda: f64,
}

impl Implication {
    /// Relative mismatch between the implied and the measured `(2q)` constant.
    pub fn lambda_mismatch(&self) -> f64 {
        let (a, b) = (self.two_q.fit.lambda, self.expected_lambda);
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }
}

pub fn implication(r: &AlgebraicCurvature, p: usize, q: usize, tol: f64) -> Result<Implication> {
    let pq = is_pq_einstein(r, p, q, tol)?;
    let two_q = is_pq_einstein(r, 2 * q - 1, q, tol)?;
    let expected_lambda = implication_constant(r.n(), p, q) * pq.fit.lambda;
    Ok(Implication {
        pq,
        two_q,
        expected_lambda,
    })
}

/// `h_{2k} = c^{2k} R^k / (2k)!`, so that `h_2 = Scal/2`.
pub fn gauss_bonnet(r: &AlgebraicCurvature, k: usize) -> Result<f64> {
    let n = r.n();
    if 2 * k > n {
        return Err(Error::InvalidParameter(format!(
            "h_{} is undefined in dimension {n}",
            2 * k
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let full = thorpe_power(r, k).contract_k(2 * k)?;
    Ok(full.coeffs()[0] / factorial(2 * k))
}

/// `R_{(p,q)} = *(g^{n-2q-p}/(n-2q-p)! · R^q)`.
pub fn pq_curvature(r: &AlgebraicCurvature, p: usize, q: usize) -> Result<DoubleForm> {
    let n = r.n();
    if n < p + 2 * q {
        return Err(Error::InvalidParameter(format!(
            "R_(p,q) needs n ≥ p + 2q, got n = {n}, p = {p}, q = {q}"
        )));
    }
    let m = n - 2 * q - p;
    let gm = DoubleForm::metric_power(n, m) * (1.0 / factorial(m));
    Ok(gm.product(&thorpe_power(r, q))?.star())
}

/// Whether `R_{(p,q)}` is proportional to `g^p`.
pub fn pq_curvature_verdict(r: &AlgebraicCurvature, p: usize, q: usize, tol: f64) -> Result<Verdict> {
    let rpq = pq_curvature(r, p, q)?;
    let rq = thorpe_power(r, q);
    let m = r.n() - 2 * q - p;
    // ‖g^m‖ in dimension n with the 1/m! normalization
    let gm_scale = DoubleForm::metric_power(r.n(), m).norm() / factorial(m);
    let fit = proportionality_with_scale(&rpq, power_scale(r, &rq, q) * gm_scale);
    Ok(Verdict {
        holds: fit.holds(tol),
        fit,
    })
}

/// Whether the trace-free components `ω_r`, `1 ≤ r ≤ 2q - p`, of `R^q`
/// all vanish relative to `‖R^q‖`.
pub fn split_verdict(r: &AlgebraicCurvature, p: usize, q: usize, tol: f64) -> Result<bool> {
    let rq = thorpe_power(r, q);
    if 2 * q > r.n() {
        return Ok(true);
    }
    let scale = rq.norm();
    if scale <= ZERO_FLOOR * power_scale(r, &rq, q) {
        return Ok(true);
    }
    let parts = split(&rq)?;
    Ok((1..=2 * q - p).all(|i| parts.component(i).norm() <= tol * scale))
}

/// `(1/(n-4k)!)·(n!·‖(R^k)_0‖² + (n-2k)!·‖(R^k)_{2k}‖²/(2k)!)`.
pub fn avez_h4k_two_term(r: &AlgebraicCurvature, k: usize) -> Result<f64> {
    let n = r.n();
    if k == 0 || n < 4 * k {
        return Err(Error::InvalidParameter(format!(
            "the two-term formula needs n ≥ 4k with k ≥ 1, got n = {n}, k = {k}"
        )));
    }
    let parts = split(&thorpe_power(r, k))?;
    let scalar = parts.component(0).coeffs()[0];
    let top = parts.component(2 * k).norm().powi(2) / factorial(2 * k);
    Ok((factorial(n) * scalar * scalar + factorial(n - 2 * k) * top) / factorial(n - 4 * k))
}

fn check_thorpe(n: usize, q: usize) -> Result<usize> {
    if q == 0 || !n.is_multiple_of(2) || n < 4 * q {
        return Err(Error::InvalidParameter(format!(
            "Thorpe's condition needs an even n ≥ 4q, got n = {n}, q = {q}"
        )));
    }
    Ok(n / 2)
}

/// `‖*(g^{p-2q} R^q) - g^{p-2q} R^q‖` with `n = 2p`.
pub fn thorpe_star_residual(r: &AlgebraicCurvature, q: usize) -> Result<f64> {
    let p = check_thorpe(r.n(), q)?;
    let w = DoubleForm::metric_power(r.n(), p - 2 * q).product(&thorpe_power(r, q))?;
    Ok((&w.star() - &w).norm())
}

pub fn einstein_star_residual(r: &AlgebraicCurvature) -> Result<f64> {
    thorpe_star_residual(r, 1)
}

/// Norm of `Σ_{r=1}^{2q} (-1)^r (p-2q+1)!/(r!(p-2q+r)!) g^{r-1} c^r R^q`
/// with `n = 2p`.
pub fn thorpe_contraction_residual(r: &AlgebraicCurvature, q: usize) -> Result<f64> {
    let p = check_thorpe(r.n(), q)?;
    let n = r.n();
    let rq = thorpe_power(r, q);
    let mut acc = DoubleForm::zeros(n, 2 * q - 1, 2 * q - 1);
    let mut contracted = rq;
    for k in 1..=2 * q {
        contracted = contracted.contract()?;
        let coefficient = factorial(p - 2 * q + 1) / (factorial(k) * factorial(p - 2 * q + k));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = DoubleForm::metric_power(n, k - 1).product(&contracted)?;
        acc = &acc + &(term * (sign * coefficient));
    }
    Ok(acc.norm())
}

/// `R^k` is divisible by `g`: `‖(R^k)_{2k}‖ ≤ tol · ‖R^k‖`.
pub fn k_conformally_flat(r: &AlgebraicCurvature, k: usize, tol: f64) -> Result<bool> {
    let n = r.n();
    if k == 0 || n < 4 * k {
        return Err(Error::InvalidParameter(format!(
            "k-conformal flatness needs n ≥ 4k with k ≥ 1, got n = {n}, k = {k}"
        )));
    }
    let rk = thorpe_power(r, k);
    let scale = rk.norm();
    if scale <= ZERO_FLOOR * power_scale(r, &rk, k) {
        return Ok(true);
    }
    Ok(split(&rk)?.component(2 * k).norm() <= tol * scale)
}

/// Spread of `q`-sectional curvature over sampled orthonormal frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionalSpread {
    pub min: f64,
    pub max: f64,
    /// `(max - min)` relative to `‖R_{2q}‖`, or 0 when that vanishes.
    pub relative_spread: f64,
}

impl SectionalSpread {
    pub fn is_constant(&self, tol: f64) -> bool {
        self.relative_spread <= tol
    }
}

/// Samples `q_sectional` over the coordinate frame and `samples` random
/// orthonormal frames drawn from `seed`.
pub fn sectional_spread(r: &AlgebraicCurvature, q: usize, samples: usize, seed: u64) -> Result<SectionalSpread> {
    let n = r.n();
    if q == 0 || 2 * q > n {
        return Err(Error::InvalidParameter(format!(
            "{q}-sectional curvature needs 1 ≤ 2q ≤ n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coordinate: Vec<Vec<f64>> = (0..2 * q)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut values = vec![q_sectional(r, q, &coordinate)?];
    for _ in 0..samples {
        values.push(q_sectional(r, q, &random_frame(n, 2 * q, &mut rng))?);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = thorpe_tensor(r, 2 * q)?.norm();
    let relative_spread = if scale > 0.0 { (max - min) / scale } else { 0.0 };
    Ok(SectionalSpread {
        min,
        max,
        relative_spread,
    })
}

/// Residual of `h_n = ((n-2k)(n-2k-1)/(n(n-1))) h_{2k} h_2` at
/// `n = 2k + 2`, the Gauss–Bonnet identity of conformally flat
/// `(2k)`-Einstein tensors, relative to the larger side or `‖R‖^{k+1}`.
pub fn gauss_bonnet_product_residual(r: &AlgebraicCurvature, k: usize) -> Result<f64> {
    let n = r.n();
    if k == 0 || n != 2 * k + 2 {
        return Err(Error::InvalidParameter(format!(
            "the product identity needs n = 2k + 2, got n = {n}, k = {k}"
        )));
    }
    let coefficient = ((n - 2 * k) * (n - 2 * k - 1)) as f64 / (n * (n - 1)) as f64;
    let lhs = gauss_bonnet(r, k + 1)?;
    let rhs = coefficient * gauss_bonnet(r, k)? * gauss_bonnet(r, 1)?;
    let scale = lhs.abs().max(rhs.abs()).max(r.form().norm().powi(k as i32 + 1));
    Ok(if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 })
}

/// `(2k-1)λ tr A - λ Scal + h_{2k} h_2` for `R = A·g` with `A` the Schouten
/// tensor and `c^{2k-1}R^k/(2k-1)! = λ g`; equals `h_{2k+2}` for conformally
/// flat `(2k)`-Einstein tensors in dimension `2k + 2`.
pub fn gauss_bonnet_chain(r: &AlgebraicCurvature, k: usize) -> Result<f64> {
    let n = r.n();
    if k == 0 || n != 2 * k + 2 {
        return Err(Error::InvalidParameter(format!(
            "the chain needs n = 2k + 2, got n = {n}, k = {k}"
        )));
    }
    let a = schouten(r)?;
    let trace: f64 = (0..n).map(|i| a.coeffs()[i * n + i]).sum();
    let lambda = is_2k_einstein(r, k, DEFAULT_TOL)?.fit.lambda / factorial(2 * k - 1);
    let scal = r.scalar_curvature();
    Ok((2 * k - 1) as f64 * lambda * trace - lambda * scal + gauss_bonnet(r, k)? * gauss_bonnet(r, 1)?)
}

/// One `(p, q)` cell of a [`ClassificationReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqEntry {
    pub p: usize,
    pub q: usize,
    pub holds: bool,
    /// Set when the verdict was inherited from `(p - 1, q)` rather than measured.
    pub implied: bool,
    pub fit: ProportionalityResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThorpeEntry {
    pub q: usize,
    pub star_residual: f64,
    pub contraction_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionalEntry {
    pub q: usize,
    pub constant: bool,
    pub spread: SectionalSpread,
}

/// Every applicable verdict for one curvature tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub n: usize,
    pub tol: f64,
    pub degenerate: bool,
    pub pq: Vec<PqEntry>,
    /// `(k, hyper (2k)-Einstein)`.
    pub hyper: Vec<(usize, bool)>,
    /// `(k, (2k)-Einstein)`.
    pub two_k: Vec<(usize, bool)>,
    pub thorpe: Vec<ThorpeEntry>,
    /// `(k, h_{2k})` for `1 ≤ 2k ≤ n`.
    pub gauss_bonnet: Vec<(usize, f64)>,
    /// `(k, k-conformally flat)` for `4k ≤ n`.
    pub conformally_flat: Vec<(usize, bool)>,
    pub sectional: Vec<SectionalEntry>,
}

impl ClassificationReport {
    pub fn pq(&self, p: usize, q: usize) -> Option<&PqEntry> {
        self.pq.iter().find(|e| e.p == p && e.q == q)
    }

    pub fn h(&self, k: usize) -> Option<f64> {
        self.gauss_bonnet.iter().find(|(j, _)| *j == k).map(|(_, h)| *h)
    }

    pub fn thorpe(&self, q: usize) -> Option<&ThorpeEntry> {
        self.thorpe.iter().find(|e| e.q == q)
    }
}

/// Fills every applicable verdict, enforcing `(p, q) ⇒ (p + 1, q)`.
pub fn classify_all(r: &AlgebraicCurvature, tol: f64) -> ClassificationReport {
    let n = r.n();
    let mut pq = Vec::new();
    for q in 1..n.div_ceil(2) {
        if 2 * q >= n {
            break;
        }
        let rq = thorpe_power(r, q);
        let mut inherited = false;
        for p in 1..2 * q {
            let fit = contracted_fit(r, &rq, p, q);
            let measured = fit.holds(tol);
            pq.push(PqEntry {
                p,
                q,
                holds: measured || inherited,
                implied: inherited && !measured,
                fit,
            });
            inherited |= measured;
        }
    }
    let lookup = |p: usize, q: usize| pq.iter().find(|e| e.p == p && e.q == q).map(|e| e.holds);
    let ks: Vec<usize> = (1..).take_while(|k| 2 * k < n).collect();
    let hyper = ks.iter().filter_map(|&k| lookup(1, k).map(|h| (k, h))).collect();
    let two_k = ks
        .iter()
        .filter_map(|&k| lookup(2 * k - 1, k).map(|h| (k, h)))
        .collect();

    let thorpe = (1..)
        .take_while(|q| n.is_multiple_of(2) && 4 * q <= n)
        .map(|q| ThorpeEntry {
            q,
            star_residual: thorpe_star_residual(r, q).expect("checked range"),
            contraction_residual: thorpe_contraction_residual(r, q).expect("checked range"),
        })
        .collect();
    let gauss_bonnet = (1..)
        .take_while(|k| 2 * k <= n)
        .map(|k| (k, self::gauss_bonnet(r, k).expect("checked range")))
        .collect();
    let conformally_flat = (1..)
        .take_while(|k| 4 * k <= n)
        .map(|k| (k, k_conformally_flat(r, k, tol).expect("checked range")))
        .collect();
    let sectional = (1..)
        .take_while(|q| 2 * q <= n)
        .map(|q| {
            let spread = sectional_spread(r, q, SECTIONAL_SAMPLES, SECTIONAL_SEED).expect("checked range");
            SectionalEntry {
                q,
                constant: spread.is_constant(tol),
                spread,
            }
        })
        .collect();

    ClassificationReport {
        n,
        tol,
        degenerate: r.is_zero(),
        pq,
        hyper,
        two_k,
        thorpe,
        gauss_bonnet,
        conformally_flat,
        sectional,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{
        constant_curvature, extend_flat, from_schouten, non_einstein_3d, random_curvature, random_symmetric_11,
        ricci_flat_4d,
    };

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn constant_lambda(n: usize, kappa: f64, p: usize, q: usize) -> f64 {
        (kappa / 2.0).powi(q as i32) * factorial(2 * q) / factorial(2 * q - p) * factorial(n - 2 * q + p)
            / factorial(n - 2 * q)
    }

    #[test]
    fn proportionality_examples() {
        let fit = proportionality(&(DoubleForm::metric(4) * 3.0));
        assert!(close(fit.lambda, 3.0, 1e-14) && fit.residual < 1e-14);
        let fit = proportionality(&constant_curvature(4, 1.0).ricci());
        assert!(close(fit.lambda, 3.0, 1e-14) && fit.residual < 1e-14);
        let fit = proportionality(&non_einstein_3d().ricci());
        assert!(close(fit.lambda, 2.0 / 3.0, 1e-14));
        assert!(fit.relative_residual > 0.1);
        let zero = proportionality(&DoubleForm::zeros(4, 2, 2));
        assert!(zero.degenerate && zero.lambda == 0.0 && zero.relative_residual == 0.0);
    }

    #[test]
    fn constant_curvature_lambdas() {
        for n in 3..8 {
            let r = constant_curvature(n, 1.3);
            for q in 1..n.div_ceil(2) {
                if 2 * q >= n {
                    break;
                }
                for p in 1..2 * q {
                    let v = is_pq_einstein(&r, p, q, DEFAULT_TOL).unwrap();
                    assert!(v.holds, "n={n} p={p} q={q}");
                    assert!(close(v.fit.lambda, constant_lambda(n, 1.3, p, q), 1e-11));
                }
            }
        }
        assert!(is_pq_einstein(&constant_curvature(4, 1.0), 2, 1, DEFAULT_TOL).is_err());
        assert!(is_pq_einstein(&constant_curvature(4, 1.0), 1, 2, DEFAULT_TOL).is_err());
    }

    #[test]
    fn flat_extension_examples() {
        let r = extend_flat(&ricci_flat_4d(1.0, 1.0, -2.0).unwrap(), 1);
        let v = is_pq_einstein(&r, 1, 1, DEFAULT_TOL).unwrap();
        assert!(v.holds && v.fit.lambda == 0.0);
        for p in 1..4 {
            assert!(!is_pq_einstein(&r, p, 2, DEFAULT_TOL).unwrap().holds, "p={p}");
        }
        let r = extend_flat(&non_einstein_3d(), 2);
        let v = is_2k_einstein(&r, 2, DEFAULT_TOL).unwrap();
        assert!(v.holds && v.fit.lambda == 0.0 && v.fit.degenerate);
        assert!(
            is_2k_einstein(&constant_curvature(5, 1.0), 2, DEFAULT_TOL)
                .unwrap()
                .holds
        );
        assert!(!is_2k_einstein(&non_einstein_3d(), 1, DEFAULT_TOL).unwrap().holds);
    }

    #[test]
    fn implication_constants() {
        let r = constant_curvature(6, 1.0);
        let imp = implication(&r, 1, 2, DEFAULT_TOL).unwrap();
        assert!(imp.pq.holds && imp.two_q.holds);
        assert!(imp.lambda_mismatch() < 1e-12);
        for n in 5..8 {
            let r = constant_curvature(n, 0.7);
            for q in 1..3 {
                if 2 * q >= n {
                    continue;
                }
                for p in 1..2 * q {
                    assert!(implication(&r, p, q, DEFAULT_TOL).unwrap().lambda_mismatch() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn gauss_bonnet_values() {
        let r = constant_curvature(4, 1.0);
        assert!(close(gauss_bonnet(&r, 1).unwrap(), 6.0, 1e-13));
        assert!(close(gauss_bonnet(&r, 2).unwrap(), 6.0, 1e-13));
        let r = constant_curvature(6, 1.0);
        let h: Vec<f64> = (1..4).map(|k| gauss_bonnet(&r, k).unwrap()).collect();
        assert!(close(h[0], 15.0, 1e-13) && close(h[1], 90.0, 1e-13) && close(h[2], 90.0, 1e-13));
        assert!(gauss_bonnet(&r, 4).is_err());
        let r = random_curvature(5, 2);
        assert!(close(gauss_bonnet(&r, 1).unwrap(), r.scalar_curvature() / 2.0, 1e-13));
    }

    #[test]
    fn pq_curvature_examples() {
        for n in 3..7 {
            let r = constant_curvature(n, 1.1);
            for q in 1..=n / 2 {
                for p in 0..=n - 2 * q {
                    let fit = proportionality(&pq_curvature(&r, p, q).unwrap());
                    assert!(fit.relative_residual < 1e-12, "n={n} p={p} q={q}");
                }
            }
        }
        let r = random_curvature(5, 4);
        assert!(!pq_curvature_verdict(&r, 1, 1, DEFAULT_TOL).unwrap().holds);
        let ricci_flat = extend_flat(&ricci_flat_4d(1.0, 1.0, -2.0).unwrap(), 1);
        assert!(pq_curvature_verdict(&ricci_flat, 1, 1, DEFAULT_TOL).unwrap().holds);
        assert!(pq_curvature(&r, 2, 2).is_err());
    }

    #[test]
    fn pq_curvature_is_trace_reversed_ricci() {
        // R_(1,1) = *(g^{n-3}/(n-3)! R) = (Scal/2) g - Ric
        let r = random_curvature(5, 8);
        let expected = &(DoubleForm::metric(5) * (r.scalar_curvature() / 2.0)) - &r.ricci();
        assert!((&pq_curvature(&r, 1, 1).unwrap() - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn avez_examples() {
        let r = constant_curvature(4, 1.0);
        assert!(close(avez_h4k_two_term(&r, 1).unwrap(), 6.0, 1e-12));
        assert_eq!(avez_h4k_two_term(&constant_curvature(4, 0.0), 1).unwrap(), 0.0);
        let r = ricci_flat_4d(1.0, 1.0, -2.0).unwrap();
        let avez = avez_h4k_two_term(&r, 1).unwrap();
        assert!(avez > 0.0);
        assert!(close(avez, gauss_bonnet(&r, 2).unwrap(), 1e-12));
        assert!(avez_h4k_two_term(&constant_curvature(3, 1.0), 1).is_err());
    }

    #[test]
    fn thorpe_residual_examples() {
        let r = constant_curvature(4, 1.0);
        assert!(thorpe_star_residual(&r, 1).unwrap() < 1e-13);
        assert!(thorpe_contraction_residual(&r, 1).unwrap() < 1e-13);
        let r = ricci_flat_4d(1.0, 1.0, -2.0).unwrap();
        assert!(einstein_star_residual(&r).unwrap() < 1e-13);
        assert_eq!(thorpe_contraction_residual(&r, 1).unwrap(), 0.0);
        let r = random_curvature(4, 6);
        assert!(thorpe_star_residual(&r, 1).unwrap() > 1e-3);
        assert!(thorpe_contraction_residual(&r, 1).unwrap() > 1e-3);
        assert!(thorpe_star_residual(&constant_curvature(5, 1.0), 1).is_err());
        assert!(thorpe_star_residual(&constant_curvature(6, 1.0), 2).is_err());
    }

    #[test]
    fn conformal_flatness_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 4..7 {
            assert!(k_conformally_flat(&constant_curvature(n, 2.0), 1, DEFAULT_TOL).unwrap());
            let a = random_symmetric_11(n, &mut rng);
            assert!(k_conformally_flat(&from_schouten(&a).unwrap(), 1, DEFAULT_TOL).unwrap());
        }
        assert!(k_conformally_flat(&constant_curvature(8, 1.0), 2, DEFAULT_TOL).unwrap());
        assert!(!k_conformally_flat(&random_curvature(4, 1), 1, DEFAULT_TOL).unwrap());
        assert!(k_conformally_flat(&constant_curvature(7, 1.0), 2, DEFAULT_TOL).is_err());
    }

    #[test]
    fn product_identity_on_conformally_flat_inputs() {
        let r = constant_curvature(6, 1.0);
        assert!(gauss_bonnet_product_residual(&r, 2).unwrap() < 1e-13);
        let a = DoubleForm::from_coeffs(
            6,
            1,
            1,
            (0..36)
                .map(|i| {
                    if i % 7 != 0 {
                        0.0
                    } else if i < 14 {
                        3.0
                    } else {
                        -1.0
                    }
                })
                .collect(),
        )
        .unwrap();
        let r = from_schouten(&a).unwrap();
        assert!(is_2k_einstein(&r, 2, DEFAULT_TOL).unwrap().holds);
        assert!(!is_2k_einstein(&r, 1, DEFAULT_TOL).unwrap().holds);
        assert!(gauss_bonnet(&r, 1).unwrap().abs() > 1.0);
        assert!(gauss_bonnet_product_residual(&r, 2).unwrap() < 1e-12);
        for r in [constant_curvature(6, 1.0), r] {
            let chain = gauss_bonnet_chain(&r, 2).unwrap();
            assert!(close(chain, gauss_bonnet(&r, 3).unwrap(), 1e-12));
        }
        let r = constant_curvature(4, 0.5);
        assert!(close(
            gauss_bonnet_chain(&r, 1).unwrap(),
            gauss_bonnet(&r, 2).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn classify_constant_curvature() {
        let report = classify_all(&constant_curvature(6, 1.0), DEFAULT_TOL);
        assert!(report.pq.iter().all(|e| e.holds && !e.implied));
        assert_eq!(report.pq.len(), 1 + 3);
        assert!(report
            .thorpe
            .iter()
            .all(|t| t.star_residual < 1e-12 && t.contraction_residual < 1e-12));
        assert!(report.sectional.iter().all(|s| s.constant));
        assert_eq!(report.h(3), Some(90.0));
        assert!(report.conformally_flat.iter().all(|(_, f)| *f));
    }

    #[test]
    fn classify_counterexamples() {
        let report = classify_all(&extend_flat(&non_einstein_3d(), 1), DEFAULT_TOL);
        assert!(!report.pq(1, 1).unwrap().holds);
        assert!(report.thorpe(1).unwrap().star_residual > 0.1);

        let report = classify_all(&extend_flat(&ricci_flat_4d(1.0, 1.0, -2.0).unwrap(), 1), DEFAULT_TOL);
        assert!(report.pq(1, 1).unwrap().holds);
        assert!((1..4).all(|p| !report.pq(p, 2).unwrap().holds));
        assert_eq!(report.hyper, vec![(1, true), (2, false)]);
        assert!(report.thorpe.is_empty());
    }

    #[test]
    fn classify_is_monotone() {
        for seed in 0..6 {
            let report = classify_all(&random_curvature(6, seed), DEFAULT_TOL);
            for e in &report.pq {
                if e.holds && e.p + 1 < 2 * e.q {
                    assert!(report.pq(e.p + 1, e.q).unwrap().holds);
                }
            }
        }
        let report = classify_all(&constant_curvature(2, 0.0), DEFAULT_TOL);
        assert!(report.degenerate && report.pq.is_empty());
    }
}
