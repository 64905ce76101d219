//! Degenerate route: when H has kernel, the torus splits into a flat factor
//! T' = V'/U' carrying a flat line bundle and a quotient torus T'' carrying
//! the nondegenerate part. Spectra combine by Minkowski sum with degree
//! convolution; torsion multiplies.

use nalgebra::DMatrix;

use crate::bundle::TorusBundle;
use crate::elliptic;
use crate::error::Error;
use crate::intmat::{integer_kernel, lattice_completion, IMat};
use crate::linalg::{C64, CMat, CVec};
use crate::spectrum::{
    binom, merge_points, SpectrumTable, TableSource, TUPLE_BUDGET, ZERO_THRESHOLD_REL,
};
use crate::torsion::{TorsionMethod, TorsionResult};
use crate::Result;

const PI: f64 = std::f64::consts::PI;

/// A lattice element carried both as generator coefficients and as a point
/// of C^n.
#[derive(Debug, Clone)]
pub struct LatticeVector {
    pub coeffs: Vec<i64>,
    pub vector: CVec,
}

/// The flat factor of a degenerate bundle.
///
/// `kernel_basis` spans Ker(g^{-1}H) and `coker_basis` its g-orthogonal
/// complement, both g-orthonormal, so coordinates in either basis carry the
/// standard Hermitian inner product. The `*_coords` fields are those
/// kernel-basis coordinates; ambient vectors are kept alongside for callers
/// working in C^n.
#[derive(Debug, Clone)]
pub struct FlatData {
    pub n_prime: usize,
    pub kernel_basis: Vec<CVec>,
    pub coker_basis: Vec<CVec>,
    /// Generators of U' = U intersect V', rank 2 n_prime.
    pub u_prime: Vec<LatticeVector>,
    pub u_prime_coords: Vec<CVec>,
    /// Basis of the dual lattice: Im g(v^k, u'_j) = delta_jk.
    pub dual_basis: Vec<CVec>,
    pub dual_coords: Vec<CVec>,
    /// Character point: Im g(ell_alpha, u'_j) = a_j mod 1.
    pub ell_alpha: CVec,
    pub ell_alpha_coords: CVec,
    /// Phases a_j in [0, 1) with alpha(u'_j) = e^{2 pi i a_j}.
    pub alpha_on_u_prime: Vec<f64>,
    /// True when every a_j is an integer within tolerance.
    pub trivial_p: bool,
}

/// Split a degenerate bundle into its flat factor and, unless H vanishes
/// identically, the quotient bundle carrying the nonzero eigenvalues.
///
/// The quotient is expressed in coker-basis coordinates: its metric is the
/// identity, its form is diagonal with the nonzero mu, and its lattice is
/// the projection of a completion of U' to a basis of U.
pub fn kernel_decomposition(bundle: &TorusBundle) -> Result<(FlatData, Option<TorusBundle>)> {
    let n = bundle.n();
    let tol = bundle.tol();
    let (mu, x) = bundle.pencil()?;
    let scale = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero: Vec<usize> = (0..n).filter(|&i| mu[i].abs() <= ZERO_THRESHOLD_REL * scale).collect();
    let n_prime = zero.len();
    if n_prime == 0 {
        let min_abs_mu = mu.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        return Err(Error::NondegenerateInput { min_abs_mu });
    }

    // U' from the exact integer kernel of E on the lattice; its rank must
    // match the analytic kernel found above
    let kernel_coeffs = integer_kernel(bundle.e_lattice());
    if kernel_coeffs.len() != 2 * n_prime {
        return Err(Error::RankMismatch {
            integer_rank: kernel_coeffs.len(),
            kernel_dim: 2 * n_prime,
        });
    }

    let kernel_basis: Vec<CVec> = zero.iter().map(|&i| x.column(i).into_owned()).collect();
    let nonzero: Vec<usize> = (0..n).filter(|i| !zero.contains(i)).collect();
    let coker_basis: Vec<CVec> = nonzero.iter().map(|&i| x.column(i).into_owned()).collect();

    let mut u_prime = Vec::with_capacity(2 * n_prime);
    for c in &kernel_coeffs {
        let coeffs: Vec<i64> = c
            .iter()
            .map(|&v| {
                i64::try_from(v)
                    .map_err(|_| Error::BadInput(format!("kernel coefficient {v} overflows i64")))
            })
            .collect::<Result<_>>()?;
        let vector = bundle.lattice_vector(&coeffs);
        debug_assert!(
            (bundle.form() * &vector).norm() <= 1e-6 * (1.0 + scale * vector.norm()),
            "integer kernel vector escapes Ker H"
        );
        u_prime.push(LatticeVector { coeffs, vector });
    }

    let coords_in = |v: &CVec, basis: &[CVec]| -> CVec {
        CVec::from_iterator(basis.len(), basis.iter().map(|b| bundle.g_form(v, b)))
    };
    let u_prime_coords: Vec<CVec> =
        u_prime.iter().map(|u| coords_in(&u.vector, &kernel_basis)).collect();
    for (u, c) in u_prime.iter().zip(&u_prime_coords) {
        let mut recon = CVec::zeros(n);
        for (b, z) in kernel_basis.iter().zip(c.iter()) {
            recon += b * *z;
        }
        debug_assert!(
            (&recon - &u.vector).norm() <= 1e-6 * (1.0 + u.vector.norm()),
            "integer kernel vector leaves the analytic kernel span"
        );
        let _ = recon;
    }

    let dual_coords = dual_basis_coords(&u_prime_coords, n_prime, tol)?;
    let dual_basis: Vec<CVec> = dual_coords
        .iter()
        .map(|d| {
            let mut v = CVec::zeros(n);
            for (b, z) in kernel_basis.iter().zip(d.iter()) {
                v += b * *z;
            }
            v
        })
        .collect();

    // character phases on the U' generators, then the point solving the
    // pairing equations
    let alpha_on_u_prime: Vec<f64> = u_prime
        .iter()
        .map(|u| {
            let mut a = bundle.alpha_extend(&u.coeffs).arg() / (2.0 * PI);
            if a < 0.0 {
                a += 1.0;
            }
            if a >= 1.0 {
                a -= 1.0;
            }
            a
        })
        .collect();
    let mut ell_alpha_coords = CVec::zeros(n_prime);
    for (a, d) in alpha_on_u_prime.iter().zip(&dual_coords) {
        ell_alpha_coords += d * C64::new(*a, 0.0);
    }
    let mut ell_alpha = CVec::zeros(n);
    for (b, z) in kernel_basis.iter().zip(ell_alpha_coords.iter()) {
        ell_alpha += b * *z;
    }
    let trivial_p =
        alpha_on_u_prime.iter().all(|&a| a.min(1.0 - a).abs() <= tol);

    let quotient = if n_prime < n {
        let mut kmat = IMat::zeros(2 * n, 2 * n_prime);
        for (j, c) in kernel_coeffs.iter().enumerate() {
            for i in 0..2 * n {
                kmat[(i, j)] = c[i];
            }
        }
        let n2 = n - n_prime;
        let lat2: Vec<CVec> = lattice_completion(&kmat)
            .iter()
            .map(|c| {
                let coeffs: Vec<i64> = c
                    .iter()
                    .map(|&v| {
                        i64::try_from(v).map_err(|_| {
                            Error::BadInput(format!("completion coefficient {v} overflows i64"))
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(coords_in(&bundle.lattice_vector(&coeffs), &coker_basis))
            })
            .collect::<Result<_>>()?;
        let h2 = CMat::from_fn(n2, n2, |b, a| {
            bundle.h_form(&coker_basis[a], &coker_basis[b])
        });
        Some(TorusBundle::new(
            n2,
            lat2,
            CMat::identity(n2, n2),
            h2,
            vec![0.0; 2 * n2],
            Some(tol),
        )?)
    } else {
        None
    };

    Ok((
        FlatData {
            n_prime,
            kernel_basis,
            coker_basis,
            u_prime,
            u_prime_coords,
            dual_basis,
            dual_coords,
            ell_alpha,
            ell_alpha_coords,
            alpha_on_u_prime,
            trivial_p,
        },
        quotient,
    ))
}

/// Solve Im<v^k, u'_j> = delta_jk in kernel coordinates; the pairing matrix
/// is invertible exactly when U' has full rank in V'.
fn dual_basis_coords(u_coords: &[CVec], n_prime: usize, tol: f64) -> Result<Vec<CVec>> {
    let m = 2 * n_prime;
    // unknowns interleaved (Re d_0, Im d_0, ...); Im(conj(u) d) contributes
    // -Im(u) Re(d) + Re(u) Im(d) per component
    let p = DMatrix::<f64>::from_fn(m, m, |j, col| {
        let u = u_coords[j][col / 2];
        if col % 2 == 0 {
            -u.im
        } else {
            u.re
        }
    });
    let det = p.determinant();
    let hadamard: f64 = (0..m)
        .map(|j| p.row(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .product();
    if det.abs() <= tol * hadamard.max(1.0) {
        return Err(Error::SingularPairing { det });
    }
    let lu = p.lu();
    (0..m)
        .map(|k| {
            let mut rhs = DMatrix::<f64>::zeros(m, 1);
            rhs[(k, 0)] = 1.0;
            let sol = lu.solve(&rhs).ok_or(Error::SingularPairing { det })?;
            Ok(CVec::from_iterator(
                n_prime,
                (0..n_prime).map(|t| C64::new(sol[(2 * t, 0)], sol[(2 * t + 1, 0)])),
            ))
        })
        .collect()
}

/// Spectrum of the flat factor: lambda = 2 pi^2 |sum_j (m_j + a_j) v^j|^2
/// over integer tuples, every level with dims binom(n', k).
pub fn flat_spectrum(flat: &FlatData, cutoff: f64) -> Result<SpectrumTable> {
    assert!(cutoff > 0.0, "cutoff must be positive");
    let m = 2 * flat.n_prime;
    let r2 = cutoff / (2.0 * PI * PI);

    // axis bounds |m_j + a_j| <= sqrt(r2 (Q^{-1})_jj) from the dual Gram
    let q = DMatrix::<f64>::from_fn(m, m, |j, k| {
        (flat.dual_coords[k].adjoint() * &flat.dual_coords[j])[(0, 0)].re
    });
    let q_inv = q.try_inverse().expect("dual Gram is positive definite");
    let mut lo = vec![0i64; m];
    let mut hi = vec![0i64; m];
    let mut count: u64 = 1;
    for j in 0..m {
        let b = (r2 * q_inv[(j, j)]).sqrt() * (1.0 + 1e-12);
        let a = flat.alpha_on_u_prime[j];
        lo[j] = (-a - b).floor() as i64;
        hi[j] = (-a + b).ceil() as i64;
        count = count.saturating_mul((hi[j] - lo[j] + 1) as u64);
        if count > TUPLE_BUDGET {
            return Err(Error::CutoffTooLarge { cutoff, budget: TUPLE_BUDGET });
        }
    }

    let dims: Vec<i64> = (0..=flat.n_prime).map(|k| binom(flat.n_prime, k as i64)).collect();
    let mut points = Vec::new();
    let mut mvec = lo.clone();
    loop {
        // fixed summation order keeps equal lambdas bit-identical
        let mut w = CVec::zeros(flat.n_prime);
        for j in 0..m {
            w += &flat.dual_coords[j] * C64::new(mvec[j] as f64 + flat.alpha_on_u_prime[j], 0.0);
        }
        let lambda = 2.0 * PI * PI * w.norm_squared();
        if lambda <= cutoff * (1.0 + 1e-12) {
            points.push((lambda, dims.clone(), mvec.clone()));
        }
        let mut d = 0;
        loop {
            if d == m {
                break;
            }
            mvec[d] += 1;
            if mvec[d] <= hi[d] {
                break;
            }
            mvec[d] = lo[d];
            d += 1;
        }
        if d == m {
            break;
        }
    }

    let (lines, warnings) = merge_points(points);
    Ok(SpectrumTable { lines, cutoff, warnings, source: TableSource::Flat })
}

/// Minkowski sum of two spectra with degree convolution of multiplicities.
/// Both inputs must have been enumerated at least up to the requested cutoff.
pub fn combined_spectrum(
    flat: &SpectrumTable,
    quotient: &SpectrumTable,
    cutoff: f64,
) -> Result<SpectrumTable> {
    if flat.cutoff < cutoff || quotient.cutoff < cutoff {
        return Err(Error::InsufficientCutoff {
            needed: cutoff,
            flat_cutoff: flat.cutoff,
            quotient_cutoff: quotient.cutoff,
        });
    }
    let mut points = Vec::new();
    for lf in &flat.lines {
        for lq in &quotient.lines {
            let lambda = lf.lambda + lq.lambda;
            if lambda > cutoff * (1.0 + 1e-12) {
                break; // quotient lines ascend
            }
            points.push((lambda, convolve(&lf.dims, &lq.dims), Vec::new()));
        }
    }
    let (mut lines, mut warnings) = merge_points(points);
    for line in &mut lines {
        line.generators.clear();
    }
    warnings.extend(flat.warnings.iter().cloned());
    warnings.extend(quotient.warnings.iter().cloned());
    Ok(SpectrumTable { lines, cutoff, warnings, source: TableSource::Combined })
}

fn convolve(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Analytic torsion of a degenerate bundle.
///
/// For n' >= 2 the flat factor's zeta contributions cancel degree by degree
/// and the torsion is exactly 1. For n' = 1 it is the elliptic theta value
/// raised to chi of the quotient; a trivial character makes the flat factor
/// non-acyclic and is refused.
pub fn degenerate_torsion(
    flat: &FlatData,
    quotient: Option<&TorusBundle>,
) -> Result<TorsionResult> {
    if flat.n_prime >= 2 {
        return Ok(TorsionResult::new(0.0, TorsionMethod::ProductFormula));
    }
    if flat.trivial_p {
        return Err(Error::TrivialFlatFactor);
    }
    let params = elliptic::params_from_flat(flat)?;
    let base = elliptic::ray_singer_torsion(&params)?;
    let chi2 = match quotient {
        Some(q) => q.euler_characteristic()?,
        None => 1,
    };
    Ok(TorsionResult::new(chi2 as f64 * base.log_t0, TorsionMethod::ProductFormula))
}
