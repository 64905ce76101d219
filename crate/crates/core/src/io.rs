//! Bundle input files. One schema serves every command, in JSON or TOML:
//! `n`, `lattice` (2n arrays of n `[re, im]` pairs), `g` and `H` (n x n
//! arrays of `[re, im]`), `alpha` (2n reals), optional `tolerance`.

use std::path::Path;

use serde::Deserialize;

use crate::bundle::TorusBundle;
use crate::error::Error;
use crate::linalg::{C64, CMat, CVec};
use crate::Result;

#[derive(Debug, Clone, Deserialize)]
pub struct BundleFile {
    pub n: usize,
    pub lattice: Vec<Vec<[f64; 2]>>,
    pub g: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<[f64; 2]>>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl BundleFile {
    pub fn into_bundle(self) -> Result<TorusBundle> {
        let lattice: Vec<CVec> = self
            .lattice
            .iter()
            .map(|row| CVec::from_vec(row.iter().map(|p| C64::new(p[0], p[1])).collect()))
            .collect();
        let g = matrix_from_rows(&self.g, "g")?;
        let h = matrix_from_rows(&self.h, "H")?;
        TorusBundle::new(self.n, lattice, g, h, self.alpha, self.tolerance)
    }
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], name: &str) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::BadInput(format!("{name} must be square")));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Parse a bundle description; `toml_hint` selects the format, otherwise
/// JSON is tried first and TOML as fallback.
pub fn parse_bundle(text: &str, toml_hint: Option<bool>) -> Result<TorusBundle> {
    parse_bundle_file(text, toml_hint)?.into_bundle()
}

/// Same parse, stopping before validation so callers can adjust fields.
pub fn parse_bundle_file(text: &str, toml_hint: Option<bool>) -> Result<BundleFile> {
    let file: BundleFile = match toml_hint {
        Some(true) => {
            toml::from_str(text).map_err(|e| Error::BadInput(format!("TOML parse: {e}")))?
        }
        Some(false) => serde_json::from_str(text)
            .map_err(|e| Error::BadInput(format!("JSON parse: {e}")))?,
        None => match serde_json::from_str(text) {
            Ok(f) => f,
            Err(json_err) => toml::from_str(text).map_err(|toml_err| {
                Error::BadInput(format!(
                    "input is neither JSON ({json_err}) nor TOML ({toml_err})"
                ))
            })?,
        },
    };
    Ok(file)
}

pub fn load_bundle(path: &Path) -> Result<TorusBundle> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", path.display())))?;
    let hint = path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("toml"));
    parse_bundle(&text, hint)
}
