//! `key=value` reports with a fixed line order.

use std::fmt::Write;
use std::path::Path;

use doubleform::classify::ClassificationReport;
use doubleform::curvature::thorpe_power;
use doubleform::decomposition::split;
use doubleform::solver::{Condition, SolveResult};
use doubleform::AlgebraicCurvature;

use crate::CliError;

/// Shortest round-trip decimal, switching to exponent form for very small or large values.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

struct Lines(String);

impl Lines {
    fn put(&mut self, key: impl std::fmt::Display, value: impl std::fmt::Display) {
        writeln!(self.0, "{key}={value}").expect("writing to a string");
    }
}

pub fn classification(report: &ClassificationReport) -> String {
    let mut out = Lines(String::new());
    out.put("n", report.n);
    out.put("tol", num(report.tol));
    out.put("degenerate", report.degenerate);
    for e in &report.pq {
        let key = format!("pq.{}.{}", e.p, e.q);
        out.put(format!("{key}.holds"), e.holds);
        out.put(format!("{key}.implied"), e.implied);
        out.put(format!("{key}.lambda"), num(e.fit.lambda));
        out.put(format!("{key}.residual"), num(e.fit.residual));
        out.put(format!("{key}.relative_residual"), num(e.fit.relative_residual));
        out.put(format!("{key}.degenerate"), e.fit.degenerate);
    }
    for (k, holds) in &report.hyper {
        out.put(format!("hyper.{}", 2 * k), holds);
    }
    for (k, holds) in &report.two_k {
        out.put(format!("einstein.{}", 2 * k), holds);
    }
    for e in &report.thorpe {
        out.put(format!("thorpe.{}.star_residual", e.q), num(e.star_residual));
        out.put(
            format!("thorpe.{}.contraction_residual", e.q),
            num(e.contraction_residual),
        );
    }
    for (k, h) in &report.gauss_bonnet {
        out.put(format!("h.{}", 2 * k), num(*h));
    }
    for (k, flat) in &report.conformally_flat {
        out.put(format!("conformally_flat.{k}"), flat);
    }
    for e in &report.sectional {
        let key = format!("sectional.{}", e.q);
        out.put(format!("{key}.constant"), e.constant);
        out.put(format!("{key}.min"), num(e.spread.min));
        out.put(format!("{key}.max"), num(e.spread.max));
        out.put(format!("{key}.relative_spread"), num(e.spread.relative_spread));
    }
    out.0
}

/// Norms `‖ω_r‖` of the trace-free components of `R^q` and, for each `k`,
/// whether `g^k` divides `R^q`.
pub fn decomposition(r: &AlgebraicCurvature, q: usize, tol: f64) -> Result<String, CliError> {
    let n = r.n();
    let degree = 2 * q;
    let mut out = Lines(String::new());
    out.put("n", n);
    out.put("q", q);
    out.put("degree", degree);
    let rq = (degree <= n).then(|| thorpe_power(r, q));
    let Some(rq) = rq.filter(|rq| !rq.is_zero()) else {
        out.put("degenerate", true);
        for r in (0..=degree.min(n.saturating_sub(degree))).rev() {
            out.put(format!("norm.{r}"), 0);
        }
        for k in 1..=degree {
            out.put(format!("divisible.{k}"), true);
        }
        return Ok(out.0);
    };
    out.put("degenerate", false);
    let parts = split(&rq)?;
    let scale = rq.norm();
    let top = parts.degree().min(n - degree);
    for r in (0..=top).rev() {
        out.put(format!("norm.{r}"), num(parts.component(r).norm()));
    }
    for k in 1..=degree {
        let divisible = (degree + 1 - k..=top).all(|r| parts.summand(r).norm() <= tol * scale);
        out.put(format!("divisible.{k}"), divisible);
    }
    Ok(out.0)
}

pub fn solve(condition: Condition, result: &SolveResult, output: &Path) -> String {
    let mut out = Lines(String::new());
    match condition {
        Condition::PqEinstein { p, q } => {
            out.put("condition", "pq-einstein");
            out.put("p", p);
            out.put("q", q);
        }
        Condition::Thorpe { q } => {
            out.put("condition", "thorpe");
            out.put("q", q);
        }
    }
    out.put("n", result.curvature.n());
    out.put("iterations", result.iterations);
    out.put("converged", result.converged);
    out.put("initial_residual", num(result.trace[0]));
    out.put("residual", num(result.residual()));
    out.put("output", output.display());
    for (i, r) in result.trace.iter().enumerate() {
        out.put(format!("trace.{i}"), num(*r));
    }
    out.0
}
