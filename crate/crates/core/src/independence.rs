//! Conditional-independence queries with a test counter.
//!
//! Two backends answer queries: a graph oracle (m-separation) and Fisher's z
//! test on the partial correlation of a data set. The engine counts every
//! query its backend evaluates. With the cache enabled, repeated queries are
//! answered from memory and are not counted again.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LcsError, Result};
use crate::graph::{GraphKind, MixedGraph, NodeSet};

pub const DEFAULT_ALPHA: f64 = 0.05;
const R_CLAMP: f64 = 1.0 - 1e-12;
const COND_LIMIT: f64 = 1e12;

/// Observed data, one column per variable.
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<String>,
    /// rows x columns
    data: DMatrix<f64>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if columns.len() != data.ncols() {
            return Err(LcsError::Format(format!(
                "{} column labels for {} data columns",
                columns.len(),
                data.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(LcsError::DuplicateNode(c.clone()));
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LcsError::Format("non-finite value in data".into()));
        }
        Ok(Dataset { columns, data })
    }

    /// Reads a CSV whose header row names the variables.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| LcsError::Format(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let p = columns.len();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| LcsError::Format(e.to_string()))?;
            if rec.len() != p {
                return Err(LcsError::Format(format!("row {} has {} fields, expected {p}", i + 2, rec.len())));
            }
            for field in rec.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| LcsError::Format(format!("row {}: `{field}` is not a number", i + 2)))?;
                values.push(v);
            }
        }
        let n = values.len() / p.max(1);
        Self::new(columns, DMatrix::from_row_slice(n, p, &values))
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let fmt_err = |e: csv::Error| LcsError::Format(e.to_string());
        w.write_record(&self.columns).map_err(fmt_err)?;
        for r in 0..self.n_samples() {
            w.write_record(self.data.row(r).iter().map(|v| v.to_string())).map_err(fmt_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column_index(&self, label: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| LcsError::UnknownNode(label.to_string()))
    }

    /// Sample correlation matrix. Fails on a zero-variance column.
    pub fn correlation(&self) -> Result<DMatrix<f64>> {
        let n = self.n_samples();
        if n < 2 {
            return Err(LcsError::DegenerateData("fewer than two samples".into()));
        }
        let p = self.data.ncols();
        let mut centered = self.data.clone();
        for j in 0..p {
            let mean = centered.column(j).mean();
            centered.column_mut(j).add_scalar_mut(-mean);
        }
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let sd: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
        for (j, s) in sd.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(LcsError::DegenerateData(format!("column `{}` has zero variance", self.columns[j])));
            }
        }
        Ok(DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { cov[(i, j)] / (sd[i] * sd[j]) }))
    }
}

#[derive(Debug, Clone)]
pub struct FisherZ {
    corr: DMatrix<f64>,
    n: usize,
    alpha: f64,
    critical: f64,
}

impl FisherZ {
    pub fn new(data: &Dataset, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(LcsError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        Ok(FisherZ { corr: data.correlation()?, n: data.n_samples(), alpha, critical: normal.inverse_cdf(1.0 - alpha / 2.0) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Partial correlation of `x` and `y` given `z`, and whether the
    /// conditioning submatrix needed a pseudo-inverse.
    pub fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> (f64, bool) {
        let idx: Vec<usize> = [x, y].into_iter().chain(z.iter().copied()).collect();
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |i, j| self.corr[(idx[i], idx[j])]);
        let sv = sub.clone().svd(false, false).singular_values;
        let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        let ill = smin <= 0.0 || smax / smin > COND_LIMIT;
        let prec = if ill {
            sub.pseudo_inverse(1e-12).expect("pseudo-inverse of a symmetric matrix")
        } else {
            sub.try_inverse().expect("well-conditioned matrix is invertible")
        };
        let denom = (prec[(0, 0)] * prec[(1, 1)]).sqrt();
        let r = if denom > 0.0 { -prec[(0, 1)] / denom } else { 0.0 };
        (r, ill)
    }

    /// `(independent, |z statistic|, ill-conditioned)`.
    pub fn test(&self, x: usize, y: usize, z: &[usize]) -> Result<(bool, f64, bool)> {
        if self.n <= z.len() + 3 {
            return Err(LcsError::DegenerateData(format!(
                "{} samples cannot support a conditioning set of size {}",
                self.n,
                z.len()
            )));
        }
        let (r, ill) = self.partial_correlation(x, y, z);
        let r = r.clamp(-R_CLAMP, R_CLAMP);
        let stat = 0.5 * ((1.0 + r) / (1.0 - r)).ln() * ((self.n - z.len() - 3) as f64).sqrt();
        Ok((stat.abs() <= self.critical, stat.abs(), ill))
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    GraphOracle(MixedGraph),
    FisherZ(FisherZ),
}

#[derive(Debug, Clone, Serialize)]
pub struct CiRecord {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub independent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub ill_conditioned: bool,
}

/// Ordered pair plus the conditioning set packed as a bitset.
type CacheKey = (u32, u32, Box<[u64]>);

fn cache_key(a: usize, b: usize, z: &[usize], n: usize) -> CacheKey {
    let mut bits = vec![0u64; n.div_ceil(64)];
    for &v in z {
        bits[v / 64] |= 1 << (v % 64);
    }
    (a as u32, b as u32, bits.into_boxed_slice())
}

/// Answers conditional-independence queries over a fixed variable list.
#[derive(Debug, Clone)]
pub struct CiEngine {
    backend: Backend,
    labels: Vec<String>,
    count: u64,
    cache: Option<HashMap<CacheKey, bool>>,
    log: Option<Vec<CiRecord>>,
    mask: Vec<bool>,
    budget: Option<u64>,
}

impl CiEngine {
    /// m-separation on a DAG or MAG. Latent nodes of a DAG may be present;
    /// callers simply never query them.
    pub fn oracle(graph: MixedGraph) -> Result<Self> {
        if graph.kind() == GraphKind::Pag {
            return Err(LcsError::WrongKind { expected: "dag or mag".into(), found: graph.kind().to_string() });
        }
        let labels = graph.labels().to_vec();
        let n = labels.len();
        Ok(CiEngine { backend: Backend::GraphOracle(graph), labels, count: 0, cache: None, log: None, mask: vec![false; n], budget: None })
    }

    pub fn fisher_z(data: &Dataset, alpha: f64) -> Result<Self> {
        let fz = FisherZ::new(data, alpha)?;
        let labels = data.columns().to_vec();
        let n = labels.len();
        Ok(CiEngine { backend: Backend::FisherZ(fz), labels, count: 0, cache: None, log: None, mask: vec![false; n], budget: None })
    }

    pub fn with_cache(mut self) -> Self {
        self.cache = Some(HashMap::new());
        self
    }

    /// Fail with `BudgetExhausted` instead of running test number `max + 1`.
    pub fn with_budget(mut self, max: u64) -> Self {
        self.budget = Some(max);
        self
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| LcsError::UnknownNode(label.to_string()))
    }

    pub fn test_count(&self) -> u64 {
        self.count
    }

    pub fn reset_count(&mut self) {
        self.count = 0;
    }

    pub fn take_log(&mut self) -> Vec<CiRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn is_independent(&mut self, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
        let n = self.labels.len();
        for &v in [x, y].iter().chain(z.iter()) {
            if v >= n {
                return Err(LcsError::NodeOutOfRange(v));
            }
        }
        if x == y || z.contains(&x) || z.contains(&y) {
            return Err(LcsError::InvalidArguments("x, y and Z must be pairwise disjoint".into()));
        }
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        let zv: Vec<usize> = z.iter().copied().collect();
        let key = self.cache.as_ref().map(|_| cache_key(a, b, &zv, n));
        if let (Some(c), Some(k)) = (self.cache.as_ref(), key.as_ref()) {
            if let Some(hit) = c.get(k) {
                return Ok(*hit);
            }
        }
        if let Some(max) = self.budget.filter(|&m| self.count >= m) {
            return Err(LcsError::BudgetExhausted(max));
        }
        let (answer, statistic, ill) = match &self.backend {
            Backend::GraphOracle(g) => {
                for &v in &zv {
                    self.mask[v] = true;
                }
                let sep = !g.m_connected_mask(a, b, &self.mask);
                for &v in &zv {
                    self.mask[v] = false;
                }
                (sep, None, false)
            }
            Backend::FisherZ(fz) => {
                let (ind, stat, ill) = fz.test(a, b, &zv)?;
                (ind, Some(stat), ill)
            }
        };
        self.count += 1;
        if ill {
            log::warn!("ill-conditioned correlation submatrix for ({}, {})", self.labels[a], self.labels[b]);
        }
        if let Some(log) = self.log.as_mut() {
            log.push(CiRecord {
                x: self.labels[a].clone(),
                y: self.labels[b].clone(),
                z: zv.iter().map(|&v| self.labels[v].clone()).collect(),
                independent: answer,
                statistic,
                ill_conditioned: ill,
            });
        }
        if let (Some(c), Some(k)) = (self.cache.as_mut(), key) {
            c.insert(k, answer);
        }
        Ok(answer)
    }
}
