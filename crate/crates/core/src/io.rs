//! Chain files and CSV output.
//!
//! A chain file is JSON:
//!
//! ```text
//! {"version": 1, "sizes": [...], "kernels": [[row-major]...],
//!  "reference": [[...]...] | null, "mu1": [...], "f": [[row-major]...] | null,
//!  "lattice": {"L": int} | null, "eps0": real, "labels": {...},
//!  "provenance": {...}}
//! ```
//!
//! With a lattice every `f` entry is written as `{"num": int, "den": int}`
//! and must equal `k / L` exactly on reading.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::error::{Error, Result};

pub const CHAIN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Rational { num: i64, den: i64 },
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeMeta {
    #[serde(rename = "L")]
    pub l: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub version: u32,
    pub sizes: Vec<usize>,
    pub kernels: Vec<Vec<f64>>,
    #[serde(default)]
    pub reference: Option<Vec<Vec<f64>>>,
    pub mu1: Vec<f64>,
    #[serde(default)]
    pub f: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    pub lattice: Option<LatticeMeta>,
    pub eps0: f64,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.as_standard_layout().iter().copied().collect()
}

impl ChainFile {
    pub fn from_model(chain: &ChainSpec, f: Option<&AdditiveFunctional>, provenance: Option<serde_json::Value>) -> Self {
        let lattice = f.and_then(|f| f.lattice());
        let f_entries = f.map(|f| match lattice {
            Some(lat) => lat
                .numerators
                .iter()
                .map(|t| t.iter().map(|&k| Entry::Rational { num: k, den: lat.l }).collect())
                .collect(),
            None => f.tables().iter().map(|t| flat(t).into_iter().map(Entry::Real).collect()).collect(),
        });
        Self {
            version: CHAIN_SCHEMA_VERSION,
            sizes: chain.sizes().to_vec(),
            kernels: chain.kernels().iter().map(flat).collect(),
            reference: Some(chain.references().iter().map(|r| r.to_vec()).collect()),
            mu1: chain.mu1().to_vec(),
            f: f_entries,
            lattice: lattice.map(|lat| LatticeMeta { l: lat.l }),
            eps0: chain.eps0(),
            labels: f.map(|f| f.labels().clone()).unwrap_or_default(),
            provenance,
        }
    }

    pub fn to_model(&self) -> Result<(ChainSpec, Option<AdditiveFunctional>)> {
        if self.version != CHAIN_SCHEMA_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported chain file version {} (expected {CHAIN_SCHEMA_VERSION})",
                self.version
            )));
        }
        let n = self.kernels.len();
        if self.sizes.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} kernels need {} sizes, got {}",
                n,
                n + 1,
                self.sizes.len()
            )));
        }
        let matrix = |j: usize, data: Vec<f64>, what: &str| -> Result<Array2<f64>> {
            let shape = (self.sizes[j], self.sizes[j + 1]);
            Array2::from_shape_vec(shape, data).map_err(|_| {
                Error::DimensionMismatch(format!("{what} {} is not {}x{}", j + 1, shape.0, shape.1))
            })
        };
        let kernels = self
            .kernels
            .iter()
            .enumerate()
            .map(|(j, k)| matrix(j, k.clone(), "kernel"))
            .collect::<Result<Vec<_>>>()?;
        let reference = self
            .reference
            .as_ref()
            .map(|r| r.iter().map(|v| Array1::from(v.clone())).collect());
        let chain = ChainSpec::new(kernels, reference, Array1::from(self.mu1.clone()), self.eps0)?;
        let f = match &self.f {
            None => None,
            Some(tables) => {
                if tables.len() != n {
                    return Err(Error::DimensionMismatch(format!("{} f tables for {} steps", tables.len(), n)));
                }
                let f = match self.lattice {
                    Some(LatticeMeta { l }) => {
                        let nums = tables
                            .iter()
                            .enumerate()
                            .map(|(j, t)| {
                                let ks = t
                                    .iter()
                                    .map(|e| lattice_numerator(e, l, j + 1))
                                    .collect::<Result<Vec<_>>>()?;
                                let shape = (self.sizes[j], self.sizes[j + 1]);
                                Array2::from_shape_vec(shape, ks).map_err(|_| {
                                    Error::DimensionMismatch(format!("f {} is not {}x{}", j + 1, shape.0, shape.1))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        AdditiveFunctional::from_lattice(l, nums)?
                    }
                    None => {
                        let reals = tables
                            .iter()
                            .enumerate()
                            .map(|(j, t)| {
                                let v = t
                                    .iter()
                                    .map(|e| match *e {
                                        Entry::Real(v) => v,
                                        Entry::Rational { num, den } => num as f64 / den as f64,
                                    })
                                    .collect();
                                matrix(j, v, "f")
                            })
                            .collect::<Result<Vec<_>>>()?;
                        AdditiveFunctional::new(reals)?
                    }
                };
                Some(f.with_labels(self.labels.clone()))
            }
        };
        Ok((chain, f))
    }
}

fn lattice_numerator(e: &Entry, l: i64, step: usize) -> Result<i64> {
    match *e {
        Entry::Rational { num, den } => {
            if den <= 0 || (num as i128 * l as i128) % den as i128 != 0 {
                return Err(Error::InvalidSpec(format!("f_{step} entry {num}/{den} is not on the lattice (1/{l})Z")));
            }
            Ok((num as i128 * l as i128 / den as i128) as i64)
        }
        Entry::Real(v) => {
            let k = (v * l as f64).round();
            if (k - v * l as f64).abs() > 1e-9 {
                return Err(Error::InvalidSpec(format!("f_{step} entry {v} is not on the lattice (1/{l})Z")));
            }
            Ok(k as i64)
        }
    }
}

pub fn read_chain_file(path: &Path) -> Result<(ChainSpec, Option<AdditiveFunctional>)> {
    let text = std::fs::read_to_string(path)?;
    let file: ChainFile = serde_json::from_str(&text)?;
    file.to_model()
}

pub fn write_chain_file(
    path: &Path,
    chain: &ChainSpec,
    f: Option<&AdditiveFunctional>,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let file = ChainFile::from_model(chain, f, provenance);
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Writes a CSV file with a header row.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_coin_chain, make_elliptic_random_chain, RandomChainParams};

    #[test]
    fn round_trip_real() {
        let (chain, f) = make_elliptic_random_chain(&RandomChainParams::new(3, 1.0, 4, 5)).unwrap();
        let file = ChainFile::from_model(&chain, Some(&f), None);
        let text = serde_json::to_string(&file).unwrap();
        let back: ChainFile = serde_json::from_str(&text).unwrap();
        let (c2, f2) = back.to_model().unwrap();
        assert_eq!(c2, chain);
        assert_eq!(f2.unwrap(), f);
    }

    #[test]
    fn round_trip_lattice() {
        let (chain, f) = make_coin_chain(3, 1, 2).unwrap();
        let file = ChainFile::from_model(&chain, Some(&f), None);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"num\":-1,\"den\":2"));
        let (_, f2) = serde_json::from_str::<ChainFile>(&text).unwrap().to_model().unwrap();
        assert_eq!(f2.unwrap().lattice(), f.lattice());
    }

    #[test]
    fn off_lattice_rejected() {
        let e = Entry::Rational { num: 1, den: 3 };
        assert!(lattice_numerator(&e, 2, 1).is_err());
        assert_eq!(lattice_numerator(&Entry::Rational { num: 1, den: 2 }, 4, 1).unwrap(), 2);
    }

    #[test]
    fn wrong_version() {
        let (chain, _) = make_coin_chain(2, 1, 2).unwrap();
        let mut file = ChainFile::from_model(&chain, None, None);
        file.version = 2;
        assert!(matches!(file.to_model(), Err(Error::InvalidSpec(_))));
    }
}
