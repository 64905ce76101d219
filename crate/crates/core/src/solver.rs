//! Eigensolver backend for the grid discretization: a Hermitian matrix with
//! cyclic block-tridiagonal structure (N blocks of size N), factored once per
//! shift by bordered block elimination, then shift-invert subspace iteration
//! with Rayleigh-Ritz extraction. Small problems go through a dense solve.

use crate::error::Error;
use crate::linalg::{C64, CMat, CVec};
use crate::Result;

/// Hermitian operator with blocks A_j on the diagonal, B_j = M[j, j+1] above
/// it, and a wrap-around block C = M[N-1, 0]. The mirror blocks are implied.
pub(crate) struct CyclicBlockMatrix {
    pub n: usize,
    pub diag: Vec<CMat>,
    pub upper: Vec<CMat>,
    pub corner: CMat,
}

impl CyclicBlockMatrix {
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        let n = self.n;
        let mut y = CVec::zeros(n * n);
        for j in 0..n {
            let mut seg = &self.diag[j] * x.rows(j * n, n);
            if j + 1 < n {
                seg += &self.upper[j] * x.rows((j + 1) * n, n);
            }
            if j > 0 {
                seg += self.upper[j - 1].ad_mul(&x.rows((j - 1) * n, n).into_owned());
            }
            if j == n - 1 {
                seg += &self.corner * x.rows(0, n);
            }
            if j == 0 {
                seg += self.corner.ad_mul(&x.rows((n - 1) * n, n).into_owned());
            }
            y.rows_mut(j * n, n).copy_from(&seg);
        }
        y
    }

}

/// Bordered factorization of (M - sigma I): the leading (N-1) block rows form
/// a block tridiagonal system T, the last block row and column are eliminated
/// through the Schur complement.
pub(crate) struct CyclicFactor<'a> {
    m: &'a CyclicBlockMatrix,
    d_lu: Vec<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    y: Vec<CMat>,
    s_lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

pub(crate) fn factor(m: &CyclicBlockMatrix, sigma: f64) -> Result<CyclicFactor<'_>> {
    let n = m.n;
    assert!(n >= 3, "need at least three block rows");
    let shift = CMat::identity(n, n) * C64::new(sigma, 0.0);

    // block tridiagonal LU over rows 0..n-2, keeping the Schur complements
    let mut d_lu = Vec::with_capacity(n - 1);
    let mut d_cur = &m.diag[0] - &shift;
    for j in 0..n - 1 {
        let lu = d_cur.clone().lu();
        if lu.determinant().norm() == 0.0 {
            return Err(Error::BadInput(format!(
                "singular diagonal block {j} in shifted factorization (sigma = {sigma})"
            )));
        }
        if j + 1 < n - 1 {
            // D_{j+1} = A_{j+1} - B_j^H D_j^{-1} B_j
            let solved = lu.solve(&m.upper[j]).expect("block solve after det check");
            d_cur = &m.diag[j + 1] - &shift - m.upper[j].ad_mul(&solved);
        }
        d_lu.push(lu);
    }

    // Y = T^{-1} F where F_0 = C^H, F_{n-2} = B_{n-2}, other blocks zero
    let mut w: Vec<CMat> = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mut f_j = if j == 0 { m.corner.adjoint() } else { CMat::zeros(n, n) };
        if j == n - 2 {
            f_j += &m.upper[n - 2];
        }
        if j > 0 {
            // subtract L_j w_{j-1} with L_j = B_{j-1}^H D_{j-1}^{-1}
            let t = d_lu[j - 1].solve(&w[j - 1]).expect("forward block solve");
            f_j -= m.upper[j - 1].ad_mul(&t);
        }
        w.push(f_j);
    }
    let mut y: Vec<CMat> = vec![CMat::zeros(0, 0); n - 1];
    y[n - 2] = d_lu[n - 2].solve(&w[n - 2]).expect("back block solve");
    for j in (0..n - 2).rev() {
        let rhs = &w[j] - &m.upper[j] * &y[j + 1];
        y[j] = d_lu[j].solve(&rhs).expect("back block solve");
    }

    // Schur complement of the border row: S = A_{n-1} - G Y with
    // G_0 = C, G_{n-2} = B_{n-2}^H
    let mut s = &m.diag[n - 1] - &shift;
    s -= &m.corner * &y[0];
    s -= m.upper[n - 2].ad_mul(&y[n - 2]);
    let s_lu = s.lu();
    if s_lu.determinant().norm() == 0.0 {
        return Err(Error::BadInput(format!(
            "singular border block in shifted factorization (sigma = {sigma})"
        )));
    }
    Ok(CyclicFactor { m, d_lu, y, s_lu })
}

impl CyclicFactor<'_> {
    pub fn solve(&self, b: &CVec) -> CVec {
        let n = self.m.n;
        // forward sweep on the tridiagonal part
        let mut w: Vec<CVec> = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let mut b_j = b.rows(j * n, n).into_owned();
            if j > 0 {
                let t = self.d_lu[j - 1].solve(&w[j - 1]).expect("forward solve");
                b_j -= self.m.upper[j - 1].ad_mul(&t);
            }
            w.push(b_j);
        }
        // back sweep: y_top = T^{-1} b_top
        let mut y_top: Vec<CVec> = vec![CVec::zeros(0); n - 1];
        y_top[n - 2] = self.d_lu[n - 2].solve(&w[n - 2]).expect("back solve");
        for j in (0..n - 2).rev() {
            let rhs = &w[j] - &self.m.upper[j] * &y_top[j + 1];
            y_top[j] = self.d_lu[j].solve(&rhs).expect("back solve");
        }
        // border unknowns
        let mut rhs_b = b.rows((n - 1) * n, n).into_owned();
        rhs_b -= &self.m.corner * &y_top[0];
        rhs_b -= self.m.upper[n - 2].ad_mul(&y_top[n - 2]);
        let x_b = self.s_lu.solve(&rhs_b).expect("border solve");
        // assemble
        let mut x = CVec::zeros(n * n);
        for j in 0..n - 1 {
            let seg = &y_top[j] - &self.y[j] * &x_b;
            x.rows_mut(j * n, n).copy_from(&seg);
        }
        x.rows_mut((n - 1) * n, n).copy_from(&x_b);
        x
    }
}

/// All eigenvalues from a dense assembly; used for small grids and as the
/// reference path in tests.
pub(crate) fn dense_eigenvalues(m: &CyclicBlockMatrix) -> Vec<f64> {
    let n = m.n;
    let dim = n * n;
    let mut full = CMat::zeros(dim, dim);
    for j in 0..n {
        full.view_mut((j * n, j * n), (n, n)).copy_from(&m.diag[j]);
        if j + 1 < n {
            full.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&m.upper[j]);
            full.view_mut(((j + 1) * n, j * n), (n, n)).copy_from(&m.upper[j].adjoint());
        }
    }
    full.view_mut(((n - 1) * n, 0), (n, n)).copy_from(&m.corner);
    full.view_mut((0, (n - 1) * n), (n, n)).copy_from(&m.corner.adjoint());
    let mut vals: Vec<f64> = full.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Deterministic start block for the iteration.
fn seeded_columns(dim: usize, k: usize) -> CMat {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    };
    CMat::from_fn(dim, k, |_, _| C64::new(next(), next()))
}

/// Lowest `count` eigenvalues by shift-invert subspace iteration.
///
/// `sigma` must sit strictly below the spectrum. Residuals are driven to
/// tol * (1 + |lambda|) with tol = 1e-9.
pub(crate) fn lowest_eigenvalues_iterative(
    m: &CyclicBlockMatrix,
    count: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-9;
    const MAX_ITERS: usize = 500;
    let dim = m.dim();
    assert!(count >= 1 && count + 10 <= dim, "subspace does not fit the operator");
    let k = count + 8;
    let f = factor(m, sigma)?;

    let mut x = seeded_columns(dim, k).qr().q();
    let mut worst = f64::INFINITY;
    for iter in 1..=MAX_ITERS {
        let mut z = CMat::zeros(dim, k);
        for c in 0..k {
            let col = f.solve(&x.column(c).into_owned());
            z.column_mut(c).copy_from(&col);
        }
        x = z.qr().q();

        // Rayleigh-Ritz on the current subspace
        let mut w = CMat::zeros(dim, k);
        for c in 0..k {
            let col = m.apply(&x.column(c).into_owned());
            w.column_mut(c).copy_from(&col);
        }
        let mut s = x.ad_mul(&w);
        // symmetrize against roundoff
        s = (&s + s.adjoint()) * C64::new(0.5, 0.0);
        let eig = s.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let mut rot = CMat::zeros(k, k);
        for (pos, &idx) in order.iter().enumerate() {
            rot.column_mut(pos).copy_from(&eig.eigenvectors.column(idx));
        }
        x = &x * &rot;
        let wr = &w * &rot;

        worst = 0.0;
        for c in 0..count {
            let lambda = eig.eigenvalues[order[c]];
            let res = (wr.column(c) - x.column(c) * C64::new(lambda, 0.0)).norm();
            worst = worst.max(res / (1.0 + lambda.abs()));
        }
        if worst <= TOL {
            return Ok(order[..count].iter().map(|&i| eig.eigenvalues[i]).collect());
        }
        if iter == MAX_ITERS {
            break;
        }
    }
    Err(Error::ConvergenceFailure { residual: worst, iterations: MAX_ITERS })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Random Hermitian cyclic block matrix, diagonally dominated.
    fn test_matrix(n: usize, seed: u64) -> CyclicBlockMatrix {
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(99991);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut rand_mat = |n: usize| CMat::from_fn(n, n, |_, _| C64::new(next(), next()));
        let diag: Vec<CMat> = (0..n)
            .map(|_| {
                let a = rand_mat(n);
                let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
                herm + CMat::identity(n, n) * C64::new(8.0 + 2.0 * n as f64, 0.0)
            })
            .collect();
        let upper: Vec<CMat> = (0..n - 1).map(|_| rand_mat(n)).collect();
        CyclicBlockMatrix { n, diag, upper, corner: rand_mat(n) }
    }

    #[test]
    fn apply_matches_dense_assembly() {
        let m = test_matrix(5, 7);
        let dim = m.dim();
        // reconstruct columns through apply and compare eigenvalues
        let mut full = CMat::zeros(dim, dim);
        for c in 0..dim {
            let mut e = CVec::zeros(dim);
            e[c] = C64::new(1.0, 0.0);
            full.column_mut(c).copy_from(&m.apply(&e));
        }
        let defect = (&full - full.adjoint()).norm();
        assert!(defect < 1e-12, "apply is not Hermitian: {defect}");
        let dense = dense_eigenvalues(&m);
        let mut via_apply: Vec<f64> =
            full.symmetric_eigen().eigenvalues.iter().copied().collect();
        via_apply.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in dense.iter().zip(&via_apply) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn factored_solve_inverts_the_shifted_matrix() {
        let m = test_matrix(6, 13);
        let sigma = -0.7;
        let f = factor(&m, sigma).unwrap();
        let dim = m.dim();
        let b = CVec::from_fn(dim, |i, _| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
        let x = f.solve(&b);
        let residual = (m.apply(&x) - &x * C64::new(sigma, 0.0) - &b).norm();
        assert!(residual < 1e-9 * b.norm(), "solve residual {residual}");
    }

    #[test]
    fn subspace_iteration_agrees_with_dense() {
        let m = test_matrix(8, 21);
        let dense = dense_eigenvalues(&m);
        let sigma = dense[0] - 1.0;
        let low = lowest_eigenvalues_iterative(&m, 6, sigma).unwrap();
        for (a, b) in low.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}
