//! Dimension-one special values: Dedekind eta, a theta product, and the
//! analytic torsion of a nontrivial flat line bundle on an elliptic curve,
//! cross-checked by a regularized-determinant lattice sum.
//!
//! The curve is T = C/(Z + tau Z) with Im tau > 0; a flat bundle corresponds
//! to a point z-hat of the dual torus C/Gamma-hat, Gamma-hat = (Z + tau Z)/Im tau.

use num_complex::Complex64 as C64;

use crate::error::Error;
use crate::flat::FlatData;
use crate::torsion::{TorsionMethod, TorsionResult};
use crate::Result;

/// Below this Im tau the q-products are refused rather than truncated.
pub const IM_TAU_FLOOR: f64 = 0.05;

/// Truncation target for all q-products and lattice tails; final results
/// keep three digits of headroom over the 1e-12 acceptance tolerances.
const TAIL: f64 = 1e-15;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct EllipticParams {
    pub tau: C64,
    pub z_hat: C64,
}

impl EllipticParams {
    pub fn new(tau: C64, z_hat: C64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::BadInput(format!("Im tau must be positive, got {}", tau.im)));
        }
        Ok(EllipticParams { tau, z_hat })
    }
}

fn check_floor(tau: C64) -> Result<()> {
    if !(tau.im > 0.0) {
        return Err(Error::BadInput(format!("Im tau must be positive, got {}", tau.im)));
    }
    if tau.im < IM_TAU_FLOOR {
        return Err(Error::SlowConvergence { im_tau: tau.im, floor: IM_TAU_FLOOR });
    }
    Ok(())
}

/// Number of factors after which the remaining product differs from 1 by
/// less than TAIL: |q|^K amp / (1 - |q|) < TAIL.
fn product_cut(q_abs: f64, amplitude: f64) -> usize {
    let k = ((TAIL * (1.0 - q_abs) / amplitude.max(TAIL)).ln() / q_abs.ln()).ceil();
    (k.max(1.0) as usize).min(2_000_000)
}

/// eta(tau) = e^{i pi tau/12} prod_{k>=1} (1 - e^{2 pi i k tau}).
pub fn dedekind_eta(tau: C64) -> Result<C64> {
    check_floor(tau)?;
    let q = (C64::i() * 2.0 * PI * tau).exp();
    let mut acc = (C64::i() * PI * tau / 12.0).exp();
    let mut q_pow = C64::new(1.0, 0.0);
    for _ in 0..product_cut(q.norm(), 1.0) {
        q_pow *= q;
        acc *= C64::new(1.0, 0.0) - q_pow;
    }
    Ok(acc)
}

/// Product form of the theta factor entering the torsion:
/// -eta(tau) e^{i pi (tau/6 - z Im tau)} prod_{k in Z} (1 - e^{2 pi i(|k| tau + z Im tau sgn(k+1/2))}).
///
/// Equivalently i theta_1(z Im tau | tau) in the classical normalization;
/// the unit tests pin that identity against the theta_1 sine series.
pub fn theta_product(params: &EllipticParams) -> Result<C64> {
    let EllipticParams { tau, z_hat } = *params;
    check_floor(tau)?;
    let w = z_hat * tau.im;
    let q = (C64::i() * 2.0 * PI * tau).exp();
    let zeta = (C64::i() * 2.0 * PI * w).exp();
    let zeta_inv = (-C64::i() * 2.0 * PI * w).exp();

    let amp = zeta.norm().max(zeta_inv.norm());
    let cut = product_cut(q.norm(), amp);
    // k = 0 factor, then paired k and -k
    let mut prod = C64::new(1.0, 0.0) - zeta;
    let mut q_pow = C64::new(1.0, 0.0);
    for _ in 1..=cut {
        q_pow *= q;
        prod *= (C64::new(1.0, 0.0) - q_pow * zeta) * (C64::new(1.0, 0.0) - q_pow * zeta_inv);
    }
    let prefactor = (C64::i() * PI * (tau / 6.0 - w)).exp();
    Ok(-dedekind_eta(tau)? * prefactor * prod)
}

/// Distance from z-hat to the dual lattice (Z + tau Z)/Im tau.
fn dual_lattice_distance(tau: C64, z_hat: C64) -> f64 {
    let w = z_hat * tau.im;
    let x2 = w.im / tau.im;
    let x1 = w.re - x2 * tau.re;
    let d1 = x1 - x1.round();
    let d2 = x2 - x2.round();
    (C64::new(d1, 0.0) + C64::new(d2, 0.0) * tau).norm() / tau.im
}

/// T_0 = |theta_tau(z-hat) / eta(tau)| e^{-pi Im tau (Im z-hat)^2} for a
/// nontrivial flat bundle.
pub fn ray_singer_torsion(params: &EllipticParams) -> Result<TorsionResult> {
    let dist = dual_lattice_distance(params.tau, params.z_hat);
    if dist <= 1e-9 * (1.0 + params.z_hat.norm()) {
        return Err(Error::TrivialBundle { distance: dist });
    }
    let theta = theta_product(params)?;
    let eta = dedekind_eta(params.tau)?;
    let log_t0 =
        theta.norm().ln() - eta.norm().ln() - PI * params.tau.im * params.z_hat.im.powi(2);
    Ok(TorsionResult::new(log_t0, TorsionMethod::ThetaFormula))
}

/// |gamma| = 1/|eta(tau)|: modulus of the normalization constant of the
/// canonical section whose Quillen norm realizes the torsion.
pub fn quillen_constant(tau: C64) -> Result<f64> {
    Ok(1.0 / dedekind_eta(tau)?.norm())
}

/// Normalize a one-dimensional flat factor to (tau, z-hat) coordinates.
///
/// With U' = w_1 Z + w_2 Z in the unit-kernel coordinate and r the
/// character point, tau = w_2/w_1 (generators swapped if needed to put tau
/// in the upper half plane) and z-hat = conj(w_1) r; both are invariant
/// under rescaling the coordinate, so the torsion below is too.
pub fn params_from_flat(flat: &FlatData) -> Result<EllipticParams> {
    if flat.n_prime != 1 {
        return Err(Error::BadInput(format!(
            "elliptic normalization needs a one-dimensional flat factor, got n' = {}",
            flat.n_prime
        )));
    }
    let mut w1 = flat.u_prime_coords[0][0];
    let mut w2 = flat.u_prime_coords[1][0];
    if (w2 / w1).im < 0.0 {
        std::mem::swap(&mut w1, &mut w2);
    }
    let r = flat.ell_alpha_coords[0];
    EllipticParams::new(w2 / w1, w1.conj() * r)
}

/// Exponential integral E_1 by series (x <= 1) or modified Lentz continued
/// fraction (x > 1); absolute accuracy ~1e-16 on the range used here.
fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut sum = 0.0f64;
        let mut term = 1.0f64;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * (1.0 + sum.abs()) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E_1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...))))
        let tiny = 1e-300;
        let mut f = tiny;
        let mut c = f;
        let mut d = 0.0f64;
        for i in 0..200 {
            let (a, b) = if i == 0 {
                (1.0, x + 1.0)
            } else {
                (-(i as f64) * (i as f64), x + 2.0 * i as f64 + 1.0)
            };
            d = b + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x).exp() * f
    }
}

/// log det' of the flat-factor Laplacian by Mellin split at t = 1:
/// zeta'(0) = sum_{v in L+w} E_1(2 pi^2 |v|^2)
///          + (1/(2 pi covol)) [ -1 + sum_{k in L*, k != 0} cos(2 pi <k, w>) e^{-|k|^2/2} 2/|k|^2 ],
/// where L is the realified dual lattice of U' and L* = i U' its dual.
/// Both tails are Gaussian and cut at 1e-15.
pub fn epstein_zeta_prime_0(flat: &FlatData) -> Result<f64> {
    if flat.n_prime != 1 {
        return Err(Error::BadInput(format!(
            "regularized-determinant oracle needs n' = 1, got n' = {}",
            flat.n_prime
        )));
    }
    let v1 = flat.dual_coords[0][0];
    let v2 = flat.dual_coords[1][0];
    let a = [flat.alpha_on_u_prime[0], flat.alpha_on_u_prime[1]];

    // direct half: v = (m1 + a1) v1 + (m2 + a2) v2 over the shifted lattice
    let cap = 38.0f64; // e^{-38} ~ 3e-17 per boundary term
    let r2_direct = cap / (2.0 * PI * PI);
    let (b1, b2) = box_bounds(v1, v2, r2_direct);
    let mut direct = 0.0f64;
    let mut min_norm2 = f64::INFINITY;
    for m1 in -(b1 + 1)..=(b1 + 1) {
        for m2 in -(b2 + 1)..=(b2 + 1) {
            let v = v1 * (m1 as f64 + a[0]) + v2 * (m2 as f64 + a[1]);
            let n2 = v.norm_sqr();
            min_norm2 = min_norm2.min(n2);
            if n2 > 0.0 && 2.0 * PI * PI * n2 <= cap {
                direct += exp_integral_e1(2.0 * PI * PI * n2);
            }
        }
    }
    if min_norm2 <= 1e-18 {
        return Err(Error::TrivialBundle { distance: min_norm2.sqrt() });
    }

    // transformed half over kappa = i(k1 u'_1 + k2 u'_2); the character
    // pairing <kappa, w> reduces exactly to k1 a1 + k2 a2
    let u1 = flat.u_prime_coords[0][0];
    let u2 = flat.u_prime_coords[1][0];
    let covol = (v1.conj() * v2).im.abs();
    let r2_dual = 2.0 * cap;
    let (c1, c2) = box_bounds(u1, u2, r2_dual);
    let mut dual = 0.0f64;
    for k1 in -(c1 + 1)..=(c1 + 1) {
        for k2 in -(c2 + 1)..=(c2 + 1) {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let kappa2 = (u1 * k1 as f64 + u2 * k2 as f64).norm_sqr();
            if kappa2 / 2.0 > cap {
                continue;
            }
            let phase = 2.0 * PI * (k1 as f64 * a[0] + k2 as f64 * a[1]);
            dual += phase.cos() * (-kappa2 / 2.0).exp() * 2.0 / kappa2;
        }
    }
    Ok(direct + (dual - 1.0) / (2.0 * PI * covol))
}

/// Torsion through the lattice sum: T_0 = exp(-zeta'(0)/2). Calibrated once
/// against the theta formula on the square-torus half-phase bundle; the
/// agreement on fresh (tau, z-hat) pairs is an acceptance criterion.
pub fn epstein_regdet(flat: &FlatData) -> Result<f64> {
    Ok((-0.5 * epstein_zeta_prime_0(flat)?).exp())
}

/// Integer ranges covering the ellipse |x1 b1 + x2 b2|^2 <= r2.
fn box_bounds(b1: C64, b2: C64, r2: f64) -> (i64, i64) {
    // Gram inverse diagonal gives the axis-aligned bounding box
    let g11 = b1.norm_sqr();
    let g22 = b2.norm_sqr();
    let g12 = (b1 * b2.conj()).re;
    let det = g11 * g22 - g12 * g12;
    assert!(det > 0.0, "degenerate lattice basis");
    let e1 = (r2 * g22 / det).sqrt();
    let e2 = (r2 * g11 / det).sqrt();
    (e1.ceil() as i64, e2.ceil() as i64)
}
