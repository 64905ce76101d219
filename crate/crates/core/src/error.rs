//! Crate-wide error type.
//!
//! Variants are grouped by the stage that raises them; the CLI maps input
//! validation to exit code 1, computation failures to 2, and verification
//! failures to 3.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    // ---- input validation ----
    #[error("lattice vectors do not span R^{{2n}}: realified determinant {det:.3e}")]
    DegenerateLattice { det: f64 },
    #[error("{name} is not Hermitian: max |M - M^H| = {defect:.3e}")]
    NotHermitian { name: &'static str, defect: f64 },
    #[error("metric is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositive { pivot: f64, index: usize },
    #[error("E = Im H is not integral on the lattice: E(u_{i}, u_{j}) = {value} is {offset:.3e} from the nearest integer")]
    NonIntegralE {
        i: usize,
        j: usize,
        value: f64,
        offset: f64,
    },
    #[error("invalid input: {0}")]
    BadInput(String),

    // ---- computation ----
    #[error("Euler characteristic mismatch: spectral product gives {spectral:.12e}, integer Pfaffian gives {pfaffian}")]
    ChiMismatch { spectral: f64, pfaffian: i64 },
    #[error("g^{{-1}}H has a near-zero eigenvalue (|mu| = {value:.3e} vs scale {scale:.3e}); use the degenerate decomposition")]
    NearZeroEigenvalue { value: f64, scale: f64 },
    #[error("spectrum enumeration exceeds the tuple budget ({budget}) at cutoff {cutoff}")]
    CutoffTooLarge { cutoff: f64, budget: u64 },
    #[error("Bost's identity requires an ample bundle (all mu_i > 0); found p = {p} negative eigenvalues")]
    NotAmple { p: usize },
    #[error("bundle is nondegenerate (smallest |mu| = {min_abs_mu:.3e}); the flat decomposition does not apply")]
    NondegenerateInput { min_abs_mu: f64 },
    #[error("integer kernel of E has rank {integer_rank} but Ker H has complex dimension {kernel_dim}")]
    RankMismatch {
        integer_rank: usize,
        kernel_dim: usize,
    },
    #[error("dual-lattice pairing matrix is singular (|det| = {det:.3e})")]
    SingularPairing { det: f64 },
    #[error("flat factor has a trivial character; the torsion ratio T0(T',P) is not defined for n' = 1")]
    TrivialFlatFactor,
    #[error("series for Im tau = {im_tau:.3e} converges too slowly (floor {floor})")]
    SlowConvergence { im_tau: f64, floor: f64 },
    #[error("theta vanishes: z-hat is a lattice point of the dual torus (distance {distance:.3e})")]
    TrivialBundle { distance: f64 },
    #[error("discretization oracle supports complex dimension 1 only (got n = {n}, grid {n_grid})")]
    DimensionUnsupported { n: usize, n_grid: usize },
    #[error("eigensolver failed to converge: residual {residual:.3e} after {iterations} iterations")]
    ConvergenceFailure { residual: f64, iterations: usize },
    #[error("combined spectrum needs factor tables enumerated past {needed}; got cutoffs {flat_cutoff} and {quotient_cutoff}")]
    InsufficientCutoff {
        needed: f64,
        flat_cutoff: f64,
        quotient_cutoff: f64,
    },

    // ---- verification ----
    #[error("multiplicity identity violated at lambda = {lambda:.12e}: dims = {dims:?} ({check})")]
    IdentityViolation {
        lambda: f64,
        dims: Vec<i64>,
        check: &'static str,
    },
}

impl Error {
    /// CLI exit-code class: 1 validation, 2 computation, 3 verification.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            DegenerateLattice { .. } | NotHermitian { .. } | NotPositive { .. }
            | NonIntegralE { .. } | BadInput(_) => 1,
            IdentityViolation { .. } => 3,
            _ => 2,
        }
    }
}
