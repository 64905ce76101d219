//! Dense complex linear algebra helpers over nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::Error;
use crate::Result;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest deviation of `m` from its own adjoint.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Check Hermitian symmetry relative to the matrix scale.
pub fn check_hermitian(name: &'static str, m: &CMat, tol: f64) -> Result<()> {
    let defect = hermitian_defect(m);
    if defect > tol * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian { name, defect });
    }
    Ok(())
}

/// Cholesky factor L with `g = L L^H`, L lower triangular with positive
/// real diagonal. Reports the first nonpositive pivot on failure.
pub fn cholesky_lower(g: &CMat) -> Result<CMat> {
    let n = g.nrows();
    let mut l = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                let pivot = s.re;
                if pivot <= 0.0 || !pivot.is_finite() {
                    return Err(Error::NotPositive { pivot, index: i });
                }
                l[(i, i)] = C64::new(pivot.sqrt(), 0.0);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Eigenpairs of the pencil `m x = mu g x` with `g` positive definite and
/// `m` Hermitian. Eigenvalues come back ascending; the eigenvector columns
/// are g-orthonormal: `x_j^H g x_k = delta_jk`.
pub fn generalized_hermitian_eigen(m: &CMat, g: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    let l = cholesky_lower(g)?;
    // b = l^{-1} m l^{-H}, Hermitian with the same eigenvalues
    let w = l
        .solve_lower_triangular(m)
        .ok_or_else(|| Error::BadInput("singular Cholesky factor".into()))?;
    let b_h = l
        .solve_lower_triangular(&w.adjoint())
        .ok_or_else(|| Error::BadInput("singular Cholesky factor".into()))?;
    let mut b = b_h.adjoint();
    // symmetrize to keep the eigensolver honest about roundoff
    let bt = b.adjoint();
    b = (b + bt) * C64::new(0.5, 0.0);

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[c]).unwrap());

    let y = CMat::from_columns(
        &order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>(),
    );
    let x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::BadInput("singular Cholesky factor".into()))?;
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    Ok((vals, x))
}
