//! Least-squares adjustment estimator and linear-SCM ground truth.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{LcsError, Result};
use crate::graph::{GraphKind, MixedGraph, NodeSet};
use crate::independence::Dataset;

/// Relative singular-value threshold below which the design is rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Linear structural causal model with Gaussian noise.
#[derive(Debug, Clone)]
pub struct ScmSpec {
    dag: MixedGraph,
    weights: BTreeMap<(usize, usize), f64>,
    noise_sd: Vec<f64>,
    latents: NodeSet,
}

impl ScmSpec {
    pub fn new(dag: MixedGraph, weights: BTreeMap<(usize, usize), f64>, noise_sd: Vec<f64>, latents: NodeSet) -> Result<Self> {
        if dag.kind() != GraphKind::Dag {
            return Err(LcsError::WrongKind { expected: "dag".into(), found: dag.kind().to_string() });
        }
        if noise_sd.len() != dag.n() || noise_sd.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(LcsError::InvalidArguments("noise_sd must hold one positive value per node".into()));
        }
        let arcs: Vec<(usize, usize)> = dag.edges().iter().map(|e| if dag.is_directed(e.a, e.b) { (e.a, e.b) } else { (e.b, e.a) }).collect();
        if arcs.len() != weights.len() || arcs.iter().any(|k| !weights.contains_key(k)) {
            return Err(LcsError::InvalidArguments("weights must be defined exactly on the DAG edges".into()));
        }
        if let Some(&l) = latents.iter().find(|&&l| l >= dag.n()) {
            return Err(LcsError::NodeOutOfRange(l));
        }
        Ok(ScmSpec { dag, weights, noise_sd, latents })
    }

    /// Unit noise, unit weights on every edge.
    pub fn unit(dag: MixedGraph) -> Result<Self> {
        let weights = dag.edges().iter().map(|e| (if dag.is_directed(e.a, e.b) { (e.a, e.b) } else { (e.b, e.a) }, 1.0)).collect();
        let n = dag.n();
        Self::new(dag, weights, vec![1.0; n], NodeSet::new())
    }

    pub fn with_latents(mut self, latents: NodeSet) -> Result<Self> {
        if let Some(&l) = latents.iter().find(|&&l| l >= self.dag.n()) {
            return Err(LcsError::NodeOutOfRange(l));
        }
        self.latents = latents;
        Ok(self)
    }

    pub fn dag(&self) -> &MixedGraph {
        &self.dag
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.weights.get(&(from, to)).copied()
    }

    pub fn weights(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.weights
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    pub fn latents(&self) -> &NodeSet {
        &self.latents
    }

    pub fn observed(&self) -> NodeSet {
        (0..self.dag.n()).filter(|v| !self.latents.contains(v)).collect()
    }

    /// `B[(child, parent)]` holds the edge weight, so `V = B V + E`.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let n = self.dag.n();
        let mut b = DMatrix::zeros(n, n);
        for (&(p, c), &w) in &self.weights {
            b[(c, p)] = w;
        }
        b
    }

    /// Covariance of all variables, `(I - B)^-1 D (I - B)^-T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.dag.n();
        let a = (DMatrix::identity(n, n) - self.coefficient_matrix())
            .try_inverse()
            .expect("I - B is unit lower triangular up to permutation");
        let d = DMatrix::from_diagonal(&DVector::from_iterator(n, self.noise_sd.iter().map(|s| s * s)));
        &a * d * a.transpose()
    }
}

/// Coefficient of `x` in the least-squares regression of `y` on `x`, `z` and
/// an intercept.
pub fn estimate_effect_ols<S: AsRef<str>>(data: &Dataset, x: &str, y: &str, z: &[S]) -> Result<f64> {
    let xi = data.column_index(x)?;
    let yi = data.column_index(y)?;
    let zi = z.iter().map(|c| data.column_index(c.as_ref())).collect::<Result<Vec<_>>>()?;
    let n = data.n_samples();
    if n <= zi.len() + 2 {
        return Err(LcsError::InvalidArguments(format!("{n} samples cannot fit {} regressors", zi.len() + 2)));
    }
    let m = data.matrix();
    let cols: Vec<usize> = std::iter::once(xi).chain(zi.iter().copied()).collect();
    let mut design = DMatrix::from_element(n, cols.len() + 1, 1.0);
    for (j, &c) in cols.iter().enumerate() {
        design.set_column(j + 1, &m.column(c));
    }
    let target: DVector<f64> = m.column(yi).into_owned();

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * RANK_TOL * (n.max(cols.len() + 1) as f64);
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(LcsError::RankDeficient(dependent_columns(&design, &cols, data, tol)));
    }
    let beta = svd.solve(&target, tol).map_err(|e| LcsError::InvalidArguments(e.to_string()))?;
    Ok(beta[1])
}

/// Columns that add no rank when appended left to right after the intercept.
fn dependent_columns(design: &DMatrix<f64>, cols: &[usize], data: &Dataset, tol: f64) -> Vec<String> {
    let mut kept = vec![0usize];
    let mut bad = Vec::new();
    for j in 1..design.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        let sub = design.select_columns(trial.iter());
        if sub.rank(tol) == trial.len() {
            kept.push(j);
        } else {
            bad.push(data.columns()[cols[j - 1]].clone());
        }
    }
    bad
}

/// Total effect of `x` on `y`: the sum over directed paths of weight products.
pub fn true_effect(scm: &ScmSpec, x: usize, y: usize) -> Result<f64> {
    let g = scm.dag();
    g.check(x)?;
    g.check(y)?;
    let order = g.topological_order().ok_or_else(|| LcsError::InvalidGraph("cycle".into()))?;
    let mut effect = vec![0.0; g.n()];
    effect[x] = 1.0;
    let start = order.iter().position(|&v| v == x).expect("x is in the order");
    for &v in &order[start + 1..] {
        effect[v] = g.parents(v).iter().map(|&p| scm.weight(p, v).unwrap_or(0.0) * effect[p]).sum();
    }
    Ok(effect[y])
}

/// Population value of the least-squares coefficient of `x` when `y` is
/// regressed on `x` and `z`, solved from the model covariance.
pub fn population_effect(scm: &ScmSpec, x: usize, y: usize, z: &NodeSet) -> Result<f64> {
    let g = scm.dag();
    g.check(x)?;
    g.check(y)?;
    let cov = scm.covariance();
    let regs: Vec<usize> = std::iter::once(x).chain(z.iter().copied()).collect();
    let sxx = DMatrix::from_fn(regs.len(), regs.len(), |i, j| cov[(regs[i], regs[j])]);
    let sxy = DVector::from_fn(regs.len(), |i, _| cov[(regs[i], y)]);
    let beta = sxx
        .cholesky()
        .ok_or_else(|| LcsError::RankDeficient(regs.iter().map(|&v| g.label(v).to_string()).collect()))?
        .solve(&sxy);
    Ok(beta[0])
}

/// `|estimate - truth| / |truth|` in percent.
pub fn relative_error(estimate: f64, truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(LcsError::ZeroTruth);
    }
    Ok(((estimate - truth) / truth).abs() * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paths_oracle(scm: &ScmSpec, from: usize, to: usize) -> f64 {
        if from == to {
            return 1.0;
        }
        scm.dag().children(from).iter().map(|&c| scm.weight(from, c).unwrap() * paths_oracle(scm, c, to)).sum()
    }

    #[test]
    fn single_path_product() {
        let dag = MixedGraph::dag_from_labels(&["X", "A", "Y"], &[("X", "A"), ("A", "Y")]).unwrap();
        let w = [((0, 1), 0.5), ((1, 2), 1.5)].into_iter().collect();
        let scm = ScmSpec::new(dag, w, vec![1.0; 3], NodeSet::new()).unwrap();
        assert_relative_eq!(true_effect(&scm, 0, 2).unwrap(), 0.75);
        assert_eq!(true_effect(&scm, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn diamond_matches_path_enumeration() {
        let dag = MixedGraph::dag_from_labels(
            &["a", "b", "c", "d", "e"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("a", "d"), ("d", "e"), ("b", "e")],
        )
        .unwrap();
        let w: BTreeMap<_, _> = dag
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let k = if dag.is_directed(e.a, e.b) { (e.a, e.b) } else { (e.b, e.a) };
                (k, 0.3 + 0.2 * i as f64)
            })
            .collect();
        let scm = ScmSpec::new(dag, w, vec![1.0; 5], NodeSet::new()).unwrap();
        for x in 0..5 {
            for y in 0..5 {
                assert_relative_eq!(true_effect(&scm, x, y).unwrap(), paths_oracle(&scm, x, y), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn population_regression_on_parents_recovers_total_effect() {
        let dag = MixedGraph::dag_from_labels(
            &["a", "b", "x", "m", "y"],
            &[("a", "x"), ("b", "x"), ("a", "y"), ("x", "m"), ("m", "y"), ("x", "y"), ("b", "m")],
        )
        .unwrap();
        let w: BTreeMap<_, _> = [((0, 2), 0.7), ((1, 2), 1.1), ((0, 4), 0.9), ((2, 3), 1.3), ((3, 4), 0.6), ((2, 4), 0.8), ((1, 3), 1.4)]
            .into_iter()
            .collect();
        let scm = ScmSpec::new(dag, w, vec![1.0, 0.5, 1.2, 0.8, 1.0], NodeSet::new()).unwrap();
        let pa: NodeSet = [0, 1].into_iter().collect();
        let want = 0.8 + 1.3 * 0.6;
        assert_relative_eq!(true_effect(&scm, 2, 4).unwrap(), want, epsilon = 1e-12);
        assert_relative_eq!(population_effect(&scm, 2, 4, &pa).unwrap(), want, epsilon = 1e-9);
        // dropping the confounder biases the coefficient
        assert!((population_effect(&scm, 2, 4, &NodeSet::new()).unwrap() - want).abs() > 0.05);
    }

    #[test]
    fn weights_must_cover_edges() {
        let dag = MixedGraph::dag_from_labels(&["X", "Y"], &[("X", "Y")]).unwrap();
        assert!(ScmSpec::new(dag, BTreeMap::new(), vec![1.0; 2], NodeSet::new()).is_err());
    }

    #[test]
    fn identical_columns_give_unit_slope() {
        let col = DMatrix::from_fn(20, 1, |i, _| (i as f64).sin());
        let m = DMatrix::from_fn(20, 2, |i, _| col[(i, 0)]);
        let d = Dataset::new(vec!["x".into(), "y".into()], m).unwrap();
        let b = estimate_effect_ols::<&str>(&d, "x", "y", &[]).unwrap();
        assert_relative_eq!(b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_covariate_is_reported() {
        let m = DMatrix::from_fn(30, 3, |i, j| match j {
            0 => (i as f64).cos(),
            1 => 2.0 * (i as f64).cos(),
            _ => (i as f64).sin(),
        });
        let d = Dataset::new(vec!["x".into(), "z".into(), "y".into()], m).unwrap();
        match estimate_effect_ols(&d, "x", "y", &["z"]) {
            Err(LcsError::RankDeficient(cols)) => assert_eq!(cols, vec!["z".to_string()]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn relative_error_values() {
        assert_eq!(relative_error(2.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(relative_error(1.5, 2.0).unwrap(), 25.0);
        assert!(matches!(relative_error(1.0, 0.0), Err(LcsError::ZeroTruth)));
    }
}
