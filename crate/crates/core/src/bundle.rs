//! Validated Appell-Humbert data for a line bundle on a complex torus.
//!
//! A bundle is described by a full lattice U in C^n, a positive Hermitian
//! metric g, a Hermitian form H whose imaginary part E = Im H takes integer
//! values on U x U, and semicharacter phases a_j with alpha(u_j) = e^{2 pi i a_j}
//! on the generators. Both g and H are linear in the first argument and
//! antilinear in the second: H(z, w) = w^H M z in matrix terms.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::intmat::{pfaffian, IMat};
use crate::linalg::{check_hermitian, cholesky_lower, generalized_hermitian_eigen, C64, CMat, CVec};
use crate::Result;

pub const DEFAULT_TOL: f64 = 1e-9;

/// Agreement tolerance between the spectral and Pfaffian Euler numbers.
const CHI_AGREE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct TorusBundle {
    n: usize,
    lattice: Vec<CVec>,
    g: CMat,
    h: CMat,
    alpha: Vec<f64>,
    tol: f64,
    e_lattice: IMat,
    // |det| and sign of the realified generator matrix in a g-orthonormal
    // frame; the sign orients U relative to the complex orientation of V
    volume: f64,
    orientation: i64,
}

/// First Chern data of the bundle: E on generator pairs and c_1 = -E.
#[derive(Debug, Clone)]
pub struct ChernData {
    pub e_on_lattice: IMat,
    pub c1: DMatrix<f64>,
}

impl TorusBundle {
    pub fn new(
        n: usize,
        lattice: Vec<CVec>,
        g: CMat,
        h: CMat,
        alpha: Vec<f64>,
        tol: Option<f64>,
    ) -> Result<Self> {
        let tol = tol.unwrap_or(DEFAULT_TOL);
        if n == 0 {
            return Err(Error::BadInput("complex dimension n must be positive".into()));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::BadInput(format!("tolerance must be positive, got {tol}")));
        }
        if lattice.len() != 2 * n {
            return Err(Error::BadInput(format!(
                "expected {} lattice generators, got {}",
                2 * n,
                lattice.len()
            )));
        }
        if lattice.iter().any(|u| u.len() != n) {
            return Err(Error::BadInput(format!("lattice vectors must have length {n}")));
        }
        if g.nrows() != n || g.ncols() != n || h.nrows() != n || h.ncols() != n {
            return Err(Error::BadInput(format!("g and H must be {n}x{n}")));
        }
        if alpha.len() != 2 * n {
            return Err(Error::BadInput(format!(
                "expected {} alpha phases, got {}",
                2 * n,
                alpha.len()
            )));
        }
        let finite = lattice.iter().flat_map(|u| u.iter()).chain(g.iter()).chain(h.iter());
        if finite.clone().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || alpha.iter().any(|a| !a.is_finite())
        {
            return Err(Error::BadInput("non-finite entry in bundle data".into()));
        }

        // lattice must span V over R; det is measured against the Hadamard
        // bound so the check is scale-free
        let det_plain = realified_det(&lattice, n);
        let hadamard: f64 = lattice.iter().map(|u| u.norm()).product();
        if det_plain.abs() <= tol * hadamard.max(1.0) {
            return Err(Error::DegenerateLattice { det: det_plain });
        }

        check_hermitian("g", &g, tol)?;
        let l = cholesky_lower(&g)?;
        check_hermitian("H", &h, tol)?;

        // E = Im H on generator pairs, rounded after the integrality check
        let mut e_lattice = IMat::zeros(2 * n, 2 * n);
        for j in 0..2 * n {
            for k in j..2 * n {
                let val = (lattice[k].adjoint() * &h * &lattice[j])[(0, 0)].im;
                let rounded = val.round();
                let offset = val - rounded;
                if offset.abs() > tol {
                    return Err(Error::NonIntegralE { i: j, j: k, value: val, offset });
                }
                e_lattice[(j, k)] = rounded as i128;
                e_lattice[(k, j)] = -(rounded as i128);
            }
        }

        // volume and orientation from the generators in a g-orthonormal frame
        let ortho: Vec<CVec> = lattice.iter().map(|u| l.adjoint() * u).collect();
        let det_g = realified_det(&ortho, n);
        let volume = det_g.abs();
        let orientation = if det_g >= 0.0 { 1 } else { -1 };

        Ok(TorusBundle { n, lattice, g, h, alpha, tol, e_lattice, volume, orientation })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lattice(&self) -> &[CVec] {
        &self.lattice
    }

    pub fn metric(&self) -> &CMat {
        &self.g
    }

    pub fn form(&self) -> &CMat {
        &self.h
    }

    pub fn alpha_phases(&self) -> &[f64] {
        &self.alpha
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn e_lattice(&self) -> &IMat {
        &self.e_lattice
    }

    /// Vol_g(T): fundamental-domain volume in the metric g.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn chern(&self) -> ChernData {
        let m = 2 * self.n;
        let c1 = DMatrix::from_fn(m, m, |i, j| -(self.e_lattice[(i, j)] as f64));
        ChernData { e_on_lattice: self.e_lattice.clone(), c1 }
    }

    /// g(z, w) = w^H G z.
    pub fn g_form(&self, z: &CVec, w: &CVec) -> C64 {
        (w.adjoint() * &self.g * z)[(0, 0)]
    }

    /// H(z, w) = w^H M z.
    pub fn h_form(&self, z: &CVec, w: &CVec) -> C64 {
        (w.adjoint() * &self.h * z)[(0, 0)]
    }

    /// E(z, w) = Im H(z, w).
    pub fn e_form(&self, z: &CVec, w: &CVec) -> f64 {
        self.h_form(z, w).im
    }

    pub fn lattice_vector(&self, coeffs: &[i64]) -> CVec {
        assert_eq!(coeffs.len(), 2 * self.n);
        let mut v = CVec::zeros(self.n);
        for (m, u) in coeffs.iter().zip(&self.lattice) {
            v += u * C64::new(*m as f64, 0.0);
        }
        v
    }

    /// alpha on the lattice element with the given generator coefficients,
    /// extended multiplicatively up to the cocycle exp(i pi E(u, u')).
    pub fn alpha_extend(&self, coeffs: &[i64]) -> C64 {
        assert_eq!(coeffs.len(), 2 * self.n);
        let s: f64 = coeffs.iter().zip(&self.alpha).map(|(&m, &a)| m as f64 * a).sum();
        // the cocycle contribution is exp(i pi k) with k an exact integer,
        // so only its parity survives
        let mut parity: i128 = 0;
        for j in 0..2 * self.n {
            for k in (j + 1)..2 * self.n {
                parity += coeffs[j] as i128 * coeffs[k] as i128 * self.e_lattice[(j, k)];
            }
        }
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let ang = 2.0 * std::f64::consts::PI * s.fract();
        C64::new(ang.cos(), ang.sin()) * sign
    }

    /// Eigenpairs of H x = mu g x, ascending, with g-orthonormal columns.
    pub fn pencil(&self) -> Result<(Vec<f64>, CMat)> {
        generalized_hermitian_eigen(&self.h, &self.g)
    }

    /// chi(L) as the orientation-corrected Pfaffian of -E on the lattice.
    pub fn chi_pfaffian(&self) -> Result<i64> {
        let m = 2 * self.n;
        let mut neg = IMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                neg[(i, j)] = -self.e_lattice[(i, j)];
            }
        }
        let pf = pfaffian(&neg)? * self.orientation as i128;
        i64::try_from(pf).map_err(|_| Error::BadInput(format!("Euler number {pf} overflows i64")))
    }

    /// chi(L) computed as prod(mu_i) Vol_g(T) and, independently, as the
    /// Pfaffian of -E; the two must agree.
    pub fn euler_characteristic(&self) -> Result<i64> {
        let (mu, _) = self.pencil()?;
        let spectral: f64 = mu.iter().product::<f64>() * self.volume;
        let pf = self.chi_pfaffian()?;
        if (spectral - pf as f64).abs() > CHI_AGREE_TOL * (1.0 + pf.unsigned_abs() as f64) {
            return Err(Error::ChiMismatch { spectral, pfaffian: pf });
        }
        Ok(pf)
    }
}

/// Determinant of the 2n x 2n real matrix whose columns are the vectors in
/// the interleaved real coordinates (Re z_1, Im z_1, ..., Re z_n, Im z_n);
/// that ordering is positively oriented for the complex structure.
fn realified_det(vectors: &[CVec], n: usize) -> f64 {
    let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = vectors[c][r / 2];
        if r % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    m.determinant()
}
