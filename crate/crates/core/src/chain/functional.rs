use std::collections::BTreeMap;

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::{step_mean, ChainSpec};
use crate::error::{Error, Result};

/// Exact lattice structure: `L * f_n(x, y)` is an integer for every entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub l: i64,
    pub numerators: Vec<Array2<i64>>,
}

impl Lattice {
    /// Exact value of `f_n(x, y)` as a rational (1-based `n`).
    pub fn value(&self, n: usize, x: usize, y: usize) -> BigRational {
        BigRational::new(BigInt::from(self.numerators[n - 1][[x, y]]), BigInt::from(self.l))
    }
}

/// Additive functional `S_N = sum_{n=1}^N f_n(X_n, X_{n+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFunctional {
    tables: Vec<Array2<f64>>,
    lattice: Option<Lattice>,
    labels: BTreeMap<String, String>,
}

/// Label key recording whether the functional is known to be irreducible.
pub const REDUCIBILITY_LABEL: &str = "reducibility";

impl AdditiveFunctional {
    /// Real-valued functional from the tables `f_1..f_N`.
    pub fn new(tables: Vec<Array2<f64>>) -> Result<Self> {
        if let Some(n) = tables.iter().position(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidSpec(format!("f_{} has a non-finite entry", n + 1)));
        }
        Ok(Self {
            tables,
            lattice: None,
            labels: BTreeMap::new(),
        })
    }

    /// Lattice-valued functional `f_n = numerators_n / L`.
    pub fn from_lattice(l: i64, numerators: Vec<Array2<i64>>) -> Result<Self> {
        if l <= 0 {
            return Err(Error::InvalidSpec(format!("lattice denominator {l} must be positive")));
        }
        let tables = numerators.iter().map(|t| t.mapv(|k| k as f64 / l as f64)).collect();
        Ok(Self {
            tables,
            lattice: Some(Lattice { l, numerators }),
            labels: BTreeMap::new(),
        })
    }

    pub fn with_label(mut self, key: &str, value: &str) -> Self {
        self.labels.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, String>) -> Self {
        self.labels.extend(labels);
        self
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    /// `Some(true)` for functionals labelled irreducible, `Some(false)` for
    /// reducible ones, `None` when unlabelled.
    pub fn is_irreducible(&self) -> Option<bool> {
        match self.labels.get(REDUCIBILITY_LABEL).map(String::as_str) {
            Some("irreducible") => Some(true),
            Some("reducible") => Some(false),
            _ => None,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[Array2<f64>] {
        &self.tables
    }

    /// Table of `f_n` (1-based).
    pub fn table(&self, n: usize) -> &Array2<f64> {
        &self.tables[n - 1]
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    /// `||f_n||_inf` (1-based).
    pub fn norm_sup_at(&self, n: usize) -> f64 {
        self.tables[n - 1].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_n ||f_n||_inf`.
    pub fn norm_sup(&self) -> f64 {
        (1..=self.n_steps()).map(|n| self.norm_sup_at(n)).fold(0.0, f64::max)
    }

    /// Checks that the tables match the chain's state spaces.
    pub fn check_compatible(&self, chain: &ChainSpec) -> Result<()> {
        if self.n_steps() != chain.n_steps() {
            return Err(Error::DimensionMismatch(format!(
                "functional has {} steps, chain has {}",
                self.n_steps(),
                chain.n_steps()
            )));
        }
        for (idx, t) in self.tables.iter().enumerate() {
            let want = (chain.sizes()[idx], chain.sizes()[idx + 1]);
            if t.dim() != want {
                return Err(Error::DimensionMismatch(format!(
                    "f_{} has shape {:?}, expected {:?}",
                    idx + 1,
                    t.dim(),
                    want
                )));
            }
        }
        Ok(())
    }

    /// Steps `start..start+len` (1-based), matching [`ChainSpec::window`].
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let n = self.n_steps();
        if start == 0 || len == 0 || start + len - 1 > n {
            return Err(Error::IndexOutOfRange {
                what: "window",
                index: start + len.saturating_sub(1),
                min: 1,
                max: n,
            });
        }
        let r = start - 1..start - 1 + len;
        Ok(Self {
            tables: self.tables[r.clone()].to_vec(),
            lattice: self.lattice.as_ref().map(|lat| Lattice {
                l: lat.l,
                numerators: lat.numerators[r].to_vec(),
            }),
            labels: self.labels.clone(),
        })
    }

    /// Per-step means `E f_n(X_n, X_{n+1})`, `n = 1..=N`.
    pub fn step_means(&self, chain: &ChainSpec) -> Result<Vec<f64>> {
        self.check_compatible(chain)?;
        let laws = chain.marginal_laws();
        Ok((1..=self.n_steps())
            .map(|n| step_mean(&laws[n - 1], chain.kernel(n), self.table(n)))
            .collect())
    }

    /// The functional with each step centred, so `E S_N = 0`. Lattice
    /// structure is dropped because centring generally breaks it.
    pub fn centered(&self, chain: &ChainSpec) -> Result<Self> {
        let means = self.step_means(chain)?;
        let tables = self
            .tables
            .iter()
            .zip(means.iter())
            .map(|(t, &m)| t.mapv(|v| v - m))
            .collect();
        Ok(Self {
            tables,
            lattice: None,
            labels: self.labels.clone(),
        })
    }

    /// Multiplies every table by `c` (lattice structure is dropped).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            tables: self.tables.iter().map(|t| t.mapv(|v| v * c)).collect(),
            lattice: None,
            labels: self.labels.clone(),
        }
    }
}
