//! Spectrum of the Dolbeault Laplacian in every degree.
//!
//! For nondegenerate g^{-1}H with eigenvalues mu_i (ascending, p of them
//! negative), the degree-k spectrum is the set of lambda = 2 pi sum n_i |mu_i|
//! over integer tuples n_i >= 0. A tuple with a := #{i <= p : n_i = 0} and
//! f := #{i : n_i != 0} contributes |chi| * binom(f, k - a) to dim E_lambda^k:
//! indices i <= p with n_i = 0 are forced into the wedge, indices i > p with
//! n_i = 0 are excluded, and the f remaining indices are free.

use crate::bundle::TorusBundle;
use crate::error::Error;
use crate::Result;

/// Routing rule: |mu_i| below this fraction of max |mu_j| marks the bundle
/// degenerate.
pub const ZERO_THRESHOLD_REL: f64 = 1e-9;

/// Relative tolerance for merging coincident eigenvalues.
pub const MERGE_REL: f64 = 1e-9;

/// Gaps between merged and distinct, relative: flagged with a warning.
const AMBIGUOUS_REL: f64 = 1e-6;

/// Ceiling on enumerated tuples per table.
pub const TUPLE_BUDGET: u64 = 10_000_000;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Eigenvalues of g^{-1}H together with the derived global invariants.
#[derive(Debug, Clone)]
pub struct EigenData {
    /// Ascending; all nonzero in the nondegenerate path.
    pub mu: Vec<f64>,
    /// Number of strictly negative entries of `mu`.
    pub p: usize,
    pub vol: f64,
    pub chi: i64,
}

impl EigenData {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn chi_abs(&self) -> i64 {
        self.chi.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumLine {
    pub lambda: f64,
    /// dim E_lambda^k for k = 0..n.
    pub dims: Vec<i64>,
    /// Integer tuples contributing to this lambda, lexicographic.
    pub generators: Vec<Vec<i64>>,
}

/// How a table was built; decides which integer identities apply to it.
#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    /// Theorem-style tuple enumeration with the given p and |chi| scale.
    Tuples { p: usize, chi_abs: i64 },
    /// Shifted dual-lattice spectrum of a flat bundle.
    Flat,
    /// Minkowski/convolution combination of two tables.
    Combined,
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub lines: Vec<SpectrumLine>,
    pub cutoff: f64,
    pub warnings: Vec<String>,
    pub source: TableSource,
}

pub(crate) fn binom(n: usize, k: i64) -> i64 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as usize).min(n - k as usize);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

/// Eigen-decomposition entry point for the nondegenerate path.
pub fn hermitian_eigen(bundle: &TorusBundle) -> Result<EigenData> {
    let (mu, _) = bundle.pencil()?;
    let scale = mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for &m in &mu {
        // scale = 0 (H = 0) lands here too: 0 <= 0
        if m.abs() <= ZERO_THRESHOLD_REL * scale {
            return Err(Error::NearZeroEigenvalue { value: m, scale });
        }
    }
    let p = mu.iter().filter(|&&m| m < 0.0).count();
    let chi = bundle.euler_characteristic()?;
    Ok(EigenData { mu, p, vol: bundle.volume(), chi })
}

/// Degree-0 eigenspace dimension contributed by one tuple: |chi| when every
/// index i <= p has n_i >= 1, else 0.
pub fn degree0_dimension(eigen: &EigenData, tuple: &[i64]) -> i64 {
    assert_eq!(tuple.len(), eigen.n());
    if tuple.iter().take(eigen.p).all(|&n| n >= 1) {
        eigen.chi_abs()
    } else {
        0
    }
}

/// Per-degree dimensions contributed by one tuple.
pub fn tuple_degree_dims(eigen: &EigenData, tuple: &[i64]) -> Vec<i64> {
    assert_eq!(tuple.len(), eigen.n());
    let a = tuple.iter().take(eigen.p).filter(|&&n| n == 0).count();
    let f = tuple.iter().filter(|&&n| n != 0).count();
    let chi_abs = eigen.chi_abs();
    (0..=eigen.n()).map(|k| chi_abs * binom(f, k as i64 - a as i64)).collect()
}

/// All spectrum lines with lambda <= cutoff, merged and sorted.
pub fn enumerate_spectrum(eigen: &EigenData, cutoff: f64) -> Result<SpectrumTable> {
    assert!(cutoff > 0.0, "cutoff must be positive");
    let n = eigen.n();
    let abs_mu: Vec<f64> = eigen.mu.iter().map(|m| m.abs()).collect();
    // largest rate outermost so partial sums prune earliest
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| abs_mu[b].partial_cmp(&abs_mu[a]).unwrap());

    let bound = cutoff / TWO_PI;
    let mut tuples: Vec<(f64, Vec<i64>)> = Vec::new();
    let mut tuple = vec![0i64; n];
    let mut visited: u64 = 0;
    dfs(&abs_mu, &order, 0, bound, &mut tuple, &mut visited, &mut tuples, cutoff)?;

    let points =
        tuples.into_iter().map(|(lambda, t)| (lambda, tuple_degree_dims(eigen, &t), t)).collect();
    let (lines, warnings) = merge_points(points);
    Ok(SpectrumTable {
        lines,
        cutoff,
        warnings,
        source: TableSource::Tuples { p: eigen.p, chi_abs: eigen.chi_abs() },
    })
}

/// Merge (lambda, dims, tuple) points into sorted lines: points within
/// MERGE_REL coalesce, gaps inside AMBIGUOUS_REL stay separate but warn.
pub(crate) fn merge_points(
    mut points: Vec<(f64, Vec<i64>, Vec<i64>)>,
) -> (Vec<SpectrumLine>, Vec<String>) {
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.2.cmp(&b.2)));
    let mut lines: Vec<SpectrumLine> = Vec::new();
    let mut warnings = Vec::new();
    for (lambda, dims, t) in points {
        match lines.last_mut() {
            Some(last) if lambda - last.lambda <= MERGE_REL * lambda.max(1.0) => {
                for (d, add) in last.dims.iter_mut().zip(&dims) {
                    *d += add;
                }
                last.generators.push(t);
            }
            _ => {
                if let Some(last) = lines.last() {
                    let gap = lambda - last.lambda;
                    if gap <= AMBIGUOUS_REL * lambda.max(1.0) {
                        warnings.push(format!(
                            "near-collision: lambda {:.12e} and {:.12e} kept separate (relative gap {:.3e})",
                            last.lambda,
                            lambda,
                            gap / lambda.max(1.0)
                        ));
                    }
                }
                lines.push(SpectrumLine { lambda, dims, generators: vec![t] });
            }
        }
    }
    for line in &mut lines {
        line.generators.sort();
    }
    (lines, warnings)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    abs_mu: &[f64],
    order: &[usize],
    depth: usize,
    remaining: f64,
    tuple: &mut Vec<i64>,
    visited: &mut u64,
    out: &mut Vec<(f64, Vec<i64>)>,
    cutoff: f64,
) -> Result<()> {
    if depth == order.len() {
        // recompute lambda in ascending index order so equal tuples collide
        // bit-identically
        let lambda: f64 = TWO_PI * tuple.iter().zip(abs_mu).map(|(&n, &m)| n as f64 * m).sum::<f64>();
        if lambda <= cutoff * (1.0 + 1e-12) {
            out.push((lambda, tuple.clone()));
        }
        return Ok(());
    }
    let i = order[depth];
    let max_n = ((remaining / abs_mu[i]) * (1.0 + 1e-12)).floor() as i64;
    for v in 0..=max_n {
        *visited += 1;
        if *visited > TUPLE_BUDGET {
            return Err(Error::CutoffTooLarge { cutoff, budget: TUPLE_BUDGET });
        }
        tuple[i] = v;
        dfs(abs_mu, order, depth + 1, remaining - v as f64 * abs_mu[i], tuple, visited, out, cutoff)?;
    }
    tuple[i] = 0;
    Ok(())
}

/// Same eigenvalues on (q, k)-forms: every multiplicity scales by binom(n, q).
pub fn pq_spectrum(table: &SpectrumTable, q: usize) -> SpectrumTable {
    let n = table.lines.first().map_or(0, |l| l.dims.len() - 1);
    let factor = binom(n, q as i64);
    let lines = table
        .lines
        .iter()
        .map(|l| SpectrumLine {
            lambda: l.lambda,
            dims: l.dims.iter().map(|d| d * factor).collect(),
            generators: l.generators.clone(),
        })
        .collect();
    let source = match &table.source {
        TableSource::Tuples { p, chi_abs } => {
            TableSource::Tuples { p: *p, chi_abs: chi_abs * factor }
        }
        other => other.clone(),
    };
    SpectrumTable { lines, cutoff: table.cutoff, warnings: table.warnings.clone(), source }
}
