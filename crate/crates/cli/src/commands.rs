//! Command bodies. Each returns the rendered stdout plus an exit code;
//! errors bubble up as `torspec_core::Error` and are classified by
//! `Error::exit_code` in main.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use torspec_core::elliptic::{
    EllipticParams, dedekind_eta, epstein_regdet, params_from_flat, quillen_constant,
    ray_singer_torsion, theta_product,
};
use torspec_core::flat::{
    FlatData, combined_spectrum, degenerate_torsion, flat_spectrum, kernel_decomposition,
};
use torspec_core::io;
use torspec_core::oracle::{compare_with_theory, dolbeault_levels, oscillator_spectrum};
use torspec_core::spectrum::{
    self, enumerate_spectrum, hermitian_eigen, pq_spectrum,
};
use torspec_core::torsion::{
    TorsionMethod, bost_torsion, torsion_closed_form, torsion_degree_p, torsion_via_zeta,
    verify_identities, zeta_expression,
};
use torspec_core::{Error, Result, SpectrumTable, TableSource, TorusBundle};

use crate::json::{Json, float_arr, fmt_float, int_arr};

/// Environment variable overriding the bundle tolerance field.
pub const TOL_ENV: &str = "TORSPEC_TOL";

pub fn load(path: &Path) -> Result<TorusBundle> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", path.display())))?;
    let hint = path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("toml"));
    let mut file = io::parse_bundle_file(&text, hint)?;
    if let Ok(raw) = std::env::var(TOL_ENV) {
        let tol: f64 = raw
            .parse()
            .map_err(|_| Error::BadInput(format!("{TOL_ENV} must be a number, got {raw:?}")))?;
        file.tolerance = Some(tol);
    }
    file.into_bundle()
}

/// Route a bundle to the spectrum table its type calls for: tuple enumeration
/// when g^{-1}H is invertible, the shifted dual-lattice table for flat
/// bundles, and the Minkowski convolution for mixed ones.
fn routed_table(bundle: &TorusBundle, cutoff: f64) -> Result<SpectrumTable> {
    match hermitian_eigen(bundle) {
        Ok(eigen) => enumerate_spectrum(&eigen, cutoff),
        Err(Error::NearZeroEigenvalue { .. }) => {
            let (flat, quotient) = kernel_decomposition(bundle)?;
            let flat_table = flat_spectrum(&flat, cutoff)?;
            match quotient {
                None => Ok(flat_table),
                Some(q) => {
                    let quotient_table = enumerate_spectrum(&hermitian_eigen(&q)?, cutoff)?;
                    combined_spectrum(&flat_table, &quotient_table, cutoff)
                }
            }
        }
        Err(e) => Err(e),
    }
}

/// Grow the cutoff until the table covers `min_lines` spectrum lines.
fn grown_table(bundle: &TorusBundle, min_lines: usize) -> Result<SpectrumTable> {
    let mut cutoff = 20.0;
    for _ in 0..40 {
        let table = routed_table(bundle, cutoff)?;
        if table.lines.len() >= min_lines {
            return Ok(table);
        }
        cutoff *= 2.0;
    }
    Err(Error::BadInput(format!("no cutoff reached {min_lines} spectrum lines")))
}

fn source_name(source: &TableSource) -> &'static str {
    match source {
        TableSource::Tuples { .. } => "tuples",
        TableSource::Flat => "flat",
        TableSource::Combined => "combined",
    }
}

fn method_name(method: TorsionMethod) -> &'static str {
    match method {
        TorsionMethod::ClosedForm => "closed_form",
        TorsionMethod::ZetaPath => "zeta_path",
        TorsionMethod::ProductFormula => "product_formula",
        TorsionMethod::ThetaFormula => "theta_formula",
    }
}

fn table_fields(table: &SpectrumTable) -> Vec<(&'static str, Json)> {
    vec![
        ("cutoff", Json::Float(table.cutoff)),
        ("source", Json::Str(source_name(&table.source).into())),
        (
            "lines",
            Json::Arr(
                table
                    .lines
                    .iter()
                    .map(|l| {
                        Json::Obj(vec![
                            ("lambda", Json::Float(l.lambda)),
                            ("dims", int_arr(l.dims.iter().copied())),
                            (
                                "generators",
                                Json::Arr(
                                    l.generators
                                        .iter()
                                        .map(|g| int_arr(g.iter().copied()))
                                        .collect(),
                                ),
                            ),
                        ])
                    })
                    .collect(),
            ),
        ),
        ("warnings", Json::Arr(table.warnings.iter().map(|w| Json::Str(w.clone())).collect())),
    ]
}

fn complex_json(z: C64) -> Json {
    float_arr([z.re, z.im])
}

pub fn validate(path: &Path) -> Result<String> {
    let bundle = load(path)?;
    let chi = bundle.euler_characteristic()?;
    let (mu, _) = bundle.pencil()?;
    let scale = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let degenerate =
        mu.iter().any(|v| v.abs() <= spectrum::ZERO_THRESHOLD_REL * scale) || scale == 0.0;
    let negative = mu
        .iter()
        .filter(|&&v| v < -spectrum::ZERO_THRESHOLD_REL * scale)
        .count();
    let doc = Json::Obj(vec![
        ("n", Json::Int(bundle.n() as i64)),
        ("volume", Json::Float(bundle.volume())),
        ("chi", Json::Int(chi)),
        ("mu", float_arr(mu.iter().copied())),
        ("negative_count", Json::Int(negative as i64)),
        ("degenerate", Json::Bool(degenerate)),
        ("tolerance", Json::Float(bundle.tol())),
    ]);
    Ok(doc.render())
}

pub fn spectrum_cmd(path: &Path, cutoff: f64, pq: Option<usize>, tsv: bool) -> Result<String> {
    if cutoff <= 0.0 {
        return Err(Error::BadInput(format!("cutoff must be positive, got {cutoff}")));
    }
    let bundle = load(path)?;
    let mut table = routed_table(&bundle, cutoff)?;
    if let Some(q) = pq {
        if q > bundle.n() {
            return Err(Error::BadInput(format!(
                "pq degree {q} exceeds complex dimension {}",
                bundle.n()
            )));
        }
        table = pq_spectrum(&table, q);
    }
    if tsv {
        let mut out = String::new();
        for line in &table.lines {
            out.push_str(&fmt_float(line.lambda));
            for d in &line.dims {
                out.push('\t');
                out.push_str(&d.to_string());
            }
            out.push('\n');
        }
        return Ok(out);
    }
    let mut fields = vec![
        ("n", Json::Int(bundle.n() as i64)),
        ("pq", pq.map(|q| Json::Int(q as i64)).unwrap_or(Json::Null)),
    ];
    fields.extend(table_fields(&table));
    Ok(Json::Obj(fields).render())
}

pub fn torsion_cmd(path: &Path, cutoff: Option<f64>) -> Result<String> {
    let bundle = load(path)?;
    let n = bundle.n();
    let (result, zeta_log, agreement, bost, note) = match hermitian_eigen(&bundle) {
        Ok(eigen) => {
            let closed = torsion_closed_form(&eigen);
            let zeta = torsion_via_zeta(&zeta_expression(&eigen));
            let agreement = (closed.log_t0 - zeta.log_t0).abs();
            let bost = if eigen.p == 0 { Some(bost_torsion(&eigen)?) } else { None };
            (closed, Some(zeta.log_t0), Some(agreement), bost, None)
        }
        Err(Error::NearZeroEigenvalue { .. }) => {
            let (flat, quotient) = kernel_decomposition(&bundle)?;
            let result = degenerate_torsion(&flat, quotient.as_ref())?;
            (result, None, None, None, convention_note(&flat, n))
        }
        Err(e) => return Err(e),
    };
    let table = match cutoff {
        Some(c) if c > 0.0 => routed_table(&bundle, c)?,
        Some(c) => return Err(Error::BadInput(format!("cutoff must be positive, got {c}"))),
        None => grown_table(&bundle, 30)?,
    };
    let report = verify_identities(&table)?;
    let t_p: Vec<f64> = (0..=n).map(|q| torsion_degree_p(&result, n, q).t0).collect();
    let doc = Json::Obj(vec![
        ("n", Json::Int(n as i64)),
        ("method", Json::Str(method_name(result.method).into())),
        ("log_t0", Json::Float(result.log_t0)),
        ("t0", Json::Float(result.t0)),
        ("zeta_log_t0", zeta_log.map(Json::Float).unwrap_or(Json::Null)),
        ("route_agreement", agreement.map(Json::Float).unwrap_or(Json::Null)),
        ("bost", bost.map(Json::Float).unwrap_or(Json::Null)),
        ("note", note.map(Json::Str).unwrap_or(Json::Null)),
        ("t_p", float_arr(t_p)),
        (
            "identity_report",
            Json::Obj(vec![
                ("lines", Json::Int(report.lines as i64)),
                ("acyclic_lines", Json::Int(report.acyclic_lines as i64)),
                ("harmonic_checked", Json::Bool(report.harmonic_checked)),
                ("localized_lines", Json::Int(report.localized_lines as i64)),
                ("binomial_identities", Json::Int(report.binomial_identities as i64)),
            ]),
        ),
    ]);
    Ok(doc.render())
}

pub fn flat_cmd(path: &Path, cutoff: f64, with_torsion: bool) -> Result<String> {
    if cutoff <= 0.0 {
        return Err(Error::BadInput(format!("cutoff must be positive, got {cutoff}")));
    }
    let bundle = load(path)?;
    let (flat, quotient) = kernel_decomposition(&bundle)?;
    let flat_table = flat_spectrum(&flat, cutoff)?;
    let (quotient_chi, combined) = match &quotient {
        Some(q) => {
            let chi = q.euler_characteristic()?;
            let quotient_table = enumerate_spectrum(&hermitian_eigen(q)?, cutoff)?;
            (Some(chi), Some(combined_spectrum(&flat_table, &quotient_table, cutoff)?))
        }
        None => (None, None),
    };
    let torsion = if with_torsion {
        let t = degenerate_torsion(&flat, quotient.as_ref())?;
        Some(Json::Obj(vec![
            ("method", Json::Str(method_name(t.method).into())),
            ("log_t0", Json::Float(t.log_t0)),
            ("t0", Json::Float(t.t0)),
            (
                "note",
                convention_note(&flat, bundle.n()).map(Json::Str).unwrap_or(Json::Null),
            ),
        ]))
    } else {
        None
    };
    let doc = Json::Obj(vec![
        ("n", Json::Int(bundle.n() as i64)),
        ("n_prime", Json::Int(flat.n_prime as i64)),
        (
            "u_prime",
            Json::Arr(flat.u_prime.iter().map(|u| int_arr(u.coeffs.iter().copied())).collect()),
        ),
        ("alpha_on_u_prime", float_arr(flat.alpha_on_u_prime.iter().copied())),
        ("ell_alpha", Json::Arr(flat.ell_alpha.iter().map(|&z| complex_json(z)).collect())),
        ("trivial_character", Json::Bool(flat.trivial_p)),
        ("quotient_chi", quotient_chi.map(Json::Int).unwrap_or(Json::Null)),
        ("flat_spectrum", Json::Obj(table_fields(&flat_table))),
        (
            "combined_spectrum",
            combined.map(|t| Json::Obj(table_fields(&t))).unwrap_or(Json::Null),
        ),
        ("torsion", torsion.unwrap_or(Json::Null)),
    ]);
    Ok(doc.render())
}

/// Two published conventions disagree for a one-dimensional flat factor
/// inside a higher-dimensional torus: the product formula gives the
/// elliptic value to the power chi of the quotient, while a
/// dimension-based reading assigns 1 to every degenerate bundle beyond
/// curves. The output follows the product formula and says so.
fn convention_note(flat: &FlatData, n: usize) -> Option<String> {
    (flat.n_prime == 1 && n > 1).then(|| {
        "product formula: elliptic torsion of the flat factor raised to chi of the quotient; \
         a dimension-based convention would report exactly 1 here"
            .into()
    })
}

/// Flat square-lattice bundle on {1, tau} carrying the given semicharacter
/// phases; the bridge used by the elliptic command.
fn flat_curve(tau: C64, a1: f64, a2: f64) -> Result<FlatData> {
    if tau.im <= 0.0 {
        return Err(Error::BadInput(format!("tau must have positive imaginary part, got {tau}")));
    }
    let lattice = vec![
        DVector::from_element(1, C64::new(1.0, 0.0)),
        DVector::from_element(1, tau),
    ];
    let bundle = TorusBundle::new(
        1,
        lattice,
        DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
        DMatrix::from_element(1, 1, C64::new(0.0, 0.0)),
        vec![a1.rem_euclid(1.0), a2.rem_euclid(1.0)],
        None,
    )?;
    let (flat, _) = kernel_decomposition(&bundle)?;
    Ok(flat)
}

pub fn elliptic_cmd(
    tau: (f64, f64),
    zhat: Option<(f64, f64)>,
    alpha: Option<(f64, f64)>,
    with_oracle: bool,
) -> Result<String> {
    let tau = C64::new(tau.0, tau.1);
    let (params, flat) = match (zhat, alpha) {
        (Some(z), None) => {
            let z = C64::new(z.0, z.1);
            let params = EllipticParams::new(tau, z)?;
            // recover the semicharacter phases so the lattice-sum oracle can
            // run from the same data
            let flat = if with_oracle {
                let a1 = z.im;
                let a2 = (tau.conj() * z).im;
                Some(flat_curve(tau, a1, a2)?)
            } else {
                None
            };
            (params, flat)
        }
        (None, Some(a)) => {
            let flat = flat_curve(tau, a.0, a.1)?;
            let params = params_from_flat(&flat)?;
            (params, Some(flat))
        }
        _ => {
            return Err(Error::BadInput(
                "provide exactly one of --zhat or --alpha".into(),
            ));
        }
    };
    let eta = dedekind_eta(params.tau)?;
    let theta = theta_product(&params)?;
    let torsion = ray_singer_torsion(&params)?;
    let quillen = quillen_constant(params.tau)?;
    let epstein = match (with_oracle, flat) {
        (true, Some(flat)) => {
            let value = epstein_regdet(&flat)?;
            let log_value = value.ln();
            Some(Json::Obj(vec![
                ("log_t0", Json::Float(log_value)),
                ("t0", Json::Float(value)),
                ("agreement", Json::Float((torsion.log_t0 - log_value).abs())),
            ]))
        }
        _ => None,
    };
    let doc = Json::Obj(vec![
        ("tau", complex_json(params.tau)),
        ("zhat", complex_json(params.z_hat)),
        ("eta", complex_json(eta)),
        ("theta", complex_json(theta)),
        ("log_t0", Json::Float(torsion.log_t0)),
        ("t0", Json::Float(torsion.t0)),
        ("quillen", Json::Float(quillen)),
        ("epstein", epstein.unwrap_or(Json::Null)),
    ]);
    Ok(doc.render())
}

pub fn oracle_cmd(path: &Path, grids: &[usize], levels: usize) -> Result<String> {
    let bundle = load(path)?;
    let cmp = compare_with_theory(&bundle, grids, levels)?;
    let doc = Json::Obj(vec![
        ("grids", int_arr(cmp.grids.iter().map(|&g| g as i64))),
        (
            "levels",
            Json::Arr(
                cmp.levels
                    .iter()
                    .map(|l| {
                        Json::Obj(vec![
                            ("theory", Json::Float(l.theory)),
                            ("theory_multiplicity", Json::Int(l.theory_multiplicity)),
                            ("estimated", Json::Float(l.estimated)),
                            ("estimated_multiplicity", Json::Int(l.estimated_multiplicity as i64)),
                            ("order", Json::Float(l.order)),
                            ("rel_error", Json::Float(l.rel_error)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ]);
    Ok(doc.render())
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn oscillator_check(mu: &[f64]) -> Outcome {
    let mut worst = 0.0f64;
    for &m in mu {
        for (a, b) in oscillator_spectrum(m, 12).iter().zip(&dolbeault_levels(m, 12)) {
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    if worst <= 1e-12 {
        Outcome::Pass(format!("{} ladders coincide (worst deviation {:.3e})", mu.len(), worst))
    } else {
        Outcome::Fail(format!("ladder deviation {worst:.3e} exceeds 1e-12"))
    }
}

fn discretization_check(bundle: &TorusBundle, grids: &[usize]) -> Result<Outcome> {
    if bundle.n() != 1 {
        return Ok(Outcome::Skip(format!("complex dimension {} unsupported", bundle.n())));
    }
    let cmp = compare_with_theory(bundle, grids, 3)?;
    let mut worst = 0.0f64;
    for l in &cmp.levels {
        if l.estimated_multiplicity as i64 != l.theory_multiplicity {
            return Ok(Outcome::Fail(format!(
                "multiplicity {} vs predicted {} at level {:.6e}",
                l.estimated_multiplicity, l.theory_multiplicity, l.theory
            )));
        }
        worst = worst.max(l.rel_error);
    }
    if worst < 0.01 {
        Ok(Outcome::Pass(format!("3 levels within {worst:.3e} of the closed form")))
    } else {
        Ok(Outcome::Fail(format!("worst relative error {worst:.3e} exceeds 1%")))
    }
}

pub fn verify_cmd(path: &Path, cutoff: Option<f64>, grids: &[usize]) -> Result<(String, i32)> {
    let bundle = load(path)?;
    let mut checks: Vec<(&'static str, Outcome)> = Vec::new();

    let chi_outcome = match bundle.euler_characteristic() {
        Ok(chi) => Outcome::Pass(format!("chi = {chi} by spectral product and integer Pfaffian")),
        Err(e @ Error::ChiMismatch { .. }) => Outcome::Fail(e.to_string()),
        Err(e) => return Err(e),
    };
    checks.push(("euler characteristic", chi_outcome));

    let table = match cutoff {
        Some(c) if c > 0.0 => routed_table(&bundle, c)?,
        Some(c) => return Err(Error::BadInput(format!("cutoff must be positive, got {c}"))),
        None => grown_table(&bundle, 30)?,
    };
    let identity_outcome = match verify_identities(&table) {
        Ok(r) => Outcome::Pass(format!(
            "{} lines: {} acyclic, {} localized, {} binomial identities",
            r.lines, r.acyclic_lines, r.localized_lines, r.binomial_identities
        )),
        Err(e @ Error::IdentityViolation { .. }) => Outcome::Fail(e.to_string()),
        Err(e) => return Err(e),
    };
    checks.push(("integer identities", identity_outcome));

    match hermitian_eigen(&bundle) {
        Ok(eigen) => {
            let closed = torsion_closed_form(&eigen);
            let zeta = torsion_via_zeta(&zeta_expression(&eigen));
            let diff = (closed.log_t0 - zeta.log_t0).abs();
            let outcome = if diff <= 1e-12 * (1.0 + closed.log_t0.abs()) {
                Outcome::Pass(format!(
                    "log T0 = {}, zeta route differs by {diff:.3e}",
                    fmt_float(closed.log_t0)
                ))
            } else {
                Outcome::Fail(format!("closed form and zeta route differ by {diff:.3e}"))
            };
            checks.push(("torsion dual route", outcome));

            checks.push(("oscillator ladders", oscillator_check(&eigen.mu)));

            let bost_outcome = if eigen.p == 0 {
                match bost_torsion(&eigen) {
                    Ok(b) => {
                        let diff = (-2.0 * closed.log_t0 - b).abs();
                        if diff <= 1e-12 * (1.0 + b.abs()) {
                            Outcome::Pass(format!(
                                "-2 log T0 matches chi/2 log(chi/Vol) within {diff:.3e}"
                            ))
                        } else {
                            Outcome::Fail(format!("Bost identity off by {diff:.3e}"))
                        }
                    }
                    Err(e @ Error::ChiMismatch { .. }) => Outcome::Fail(e.to_string()),
                    Err(e) => return Err(e),
                }
            } else {
                Outcome::Skip(format!("needs an ample bundle (p = {})", eigen.p))
            };
            checks.push(("Bost identity", bost_outcome));

            checks.push(("discretization", discretization_check(&bundle, grids)?));
        }
        Err(Error::NearZeroEigenvalue { .. }) => {
            match kernel_decomposition(&bundle) {
                Ok((flat, quotient)) => {
                    checks.push((
                        "kernel rank",
                        Outcome::Pass(format!(
                            "integer kernel rank {} matches n' = {}",
                            2 * flat.n_prime,
                            flat.n_prime
                        )),
                    ));
                    let torsion_outcome = if flat.n_prime >= 2 {
                        let t = degenerate_torsion(&flat, quotient.as_ref())?;
                        if t.log_t0 == 0.0 {
                            Outcome::Pass(format!("T = 1 exactly (n' = {})", flat.n_prime))
                        } else {
                            Outcome::Fail(format!("expected T = 1, got log T = {}", t.log_t0))
                        }
                    } else if flat.trivial_p {
                        Outcome::Skip("trivial character on the kernel torus".into())
                    } else {
                        let base = ray_singer_torsion(&params_from_flat(&flat)?)?;
                        let lattice_sum = epstein_regdet(&flat)?.ln();
                        let diff = (base.log_t0 - lattice_sum).abs();
                        if diff < 1e-8 {
                            Outcome::Pass(format!(
                                "theta value and lattice sum agree within {diff:.3e}"
                            ))
                        } else {
                            Outcome::Fail(format!(
                                "theta route {} vs lattice sum {}",
                                fmt_float(base.log_t0),
                                fmt_float(lattice_sum)
                            ))
                        }
                    };
                    checks.push(("degenerate torsion", torsion_outcome));

                    if let Some(q) = &quotient {
                        let eigen = hermitian_eigen(q)?;
                        checks.push(("oscillator ladders", oscillator_check(&eigen.mu)));
                    }
                    checks.push(("discretization", discretization_check(&bundle, grids)?));
                }
                Err(e @ Error::RankMismatch { .. }) => {
                    checks.push(("kernel rank", Outcome::Fail(e.to_string())));
                }
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    }

    let mut out = String::new();
    let (mut passed, mut failed, mut skipped) = (0u32, 0u32, 0u32);
    for (name, outcome) in &checks {
        match outcome {
            Outcome::Pass(detail) => {
                passed += 1;
                out.push_str(&format!("PASS {name}: {detail}\n"));
            }
            Outcome::Fail(detail) => {
                failed += 1;
                out.push_str(&format!("FAIL {name}: {detail}\n"));
            }
            Outcome::Skip(detail) => {
                skipped += 1;
                out.push_str(&format!("SKIP {name}: {detail}\n"));
            }
        }
    }
    out.push_str(&format!("verify: {passed} passed, {failed} failed, {skipped} skipped\n"));
    Ok((out, if failed > 0 { 3 } else { 0 }))
}
