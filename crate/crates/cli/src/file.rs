//! JSON curvature files: `{"n": 4, "entries": [{"i": [0, 1], "j": [0, 1], "v": 1.0}, …]}`
//! where each entry sets `R(e_a, e_b; e_c, e_d)` for `i = [a, b]`, `j = [c, d]`.

use std::collections::BTreeMap;

use doubleform::exterior::enumerate_basis;
use doubleform::{AlgebraicCurvature, DoubleForm, MultiIndex};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureFile {
    pub n: usize,
    pub entries: Vec<Entry>,
}

impl CurvatureFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Builds the symmetric `(2, 2)` form; omitted entries are zero and
    /// each entry also fills its transpose.
    pub fn to_form(&self) -> Result<DoubleForm, CliError> {
        let n = self.n;
        if n < 2 {
            return Err(CliError::Parse(format!("n = {n} must be at least 2")));
        }
        let mut values: BTreeMap<(Vec<usize>, Vec<usize>), (usize, f64)> = BTreeMap::new();
        for (k, e) in self.entries.iter().enumerate() {
            let bad = |reason: String| CliError::Parse(format!("entry {k} (i={:?}, j={:?}): {reason}", e.i, e.j));
            for pair in [&e.i, &e.j] {
                if pair.len() != 2 {
                    return Err(bad(format!("index {pair:?} must have two components")));
                }
                if pair[0] >= pair[1] {
                    return Err(bad(format!("index {pair:?} must be strictly increasing")));
                }
                if pair[1] >= n {
                    return Err(bad(format!("index {pair:?} out of range for n = {n}")));
                }
            }
            if !e.v.is_finite() {
                return Err(bad("value must be finite".into()));
            }
            for key in [(e.i.clone(), e.j.clone()), (e.j.clone(), e.i.clone())] {
                match values.get(&key) {
                    Some(&(first, v)) if v != e.v => {
                        return Err(bad(format!("contradicts entry {first} (value {v} vs {})", e.v)));
                    }
                    Some(_) => {}
                    None => {
                        values.insert(key, (k, e.v));
                    }
                }
            }
        }
        let entries = values.into_iter().map(|((i, j), (_, v))| {
            let index = |x: Vec<usize>| MultiIndex::new(x).expect("validated above");
            (index(i), index(j), v)
        });
        DoubleForm::from_entries(n, 2, 2, entries).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Loads an algebraic curvature tensor, checking the first Bianchi
    /// identity unless `check_bianchi` is false.
    pub fn load(&self, check_bianchi: bool) -> Result<AlgebraicCurvature, CliError> {
        let form = self.to_form()?;
        if check_bianchi {
            AlgebraicCurvature::new(form).map_err(|e| CliError::Invariant(e.to_string()))
        } else {
            Ok(AlgebraicCurvature::from_form_unchecked(form))
        }
    }

    /// Nonzero coefficients with `i ≤ j` in basis order.
    pub fn from_curvature(r: &AlgebraicCurvature) -> Self {
        let n = r.n();
        let basis = enumerate_basis(n, 2).expect("n ≥ 2");
        let mut entries = Vec::new();
        for (a, i) in basis.iter().enumerate() {
            for j in &basis[a..] {
                let v = r.form().get(i, j);
                if v != 0.0 {
                    entries.push(Entry {
                        i: i.indices().to_vec(),
                        j: j.indices().to_vec(),
                        v,
                    });
                }
            }
        }
        Self { n, entries }
    }

    /// One entry per line.
    pub fn render(&self) -> String {
        let lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("    {}", serde_json::to_string(e).expect("plain data")))
            .collect();
        if lines.is_empty() {
            return format!("{{\n  \"n\": {},\n  \"entries\": []\n}}\n", self.n);
        }
        format!(
            "{{\n  \"n\": {},\n  \"entries\": [\n{}\n  ]\n}}\n",
            self.n,
            lines.join(",\n")
        )
    }
}
