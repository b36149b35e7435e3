//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested wavelength triple admits no closed k-vector triangle.
    #[error("geometry infeasible: no beam angles close k_p + k_s = k_w for \
             wavelengths {lambda_p:.4e}/{lambda_s:.4e}/{lambda_w:.4e} m \
             (|cos| = {cos_excess:.6} > 1)")]
    GeometryInfeasible {
        lambda_p: f64,
        lambda_s: f64,
        lambda_w: f64,
        cos_excess: f64,
    },

    /// The Liouvillian null space has more than the trace degree of freedom.
    #[error("degenerate steady state: {0}")]
    DegenerateSteadyState(String),

    /// Linear solve failed (singular matrix outside the steady-state path).
    #[error("singular linear system: {0}")]
    Singular(String),

    /// Least-squares peak fit did not converge.
    #[error("fit failed after {iterations} iterations (residual {residual:.3e}); \
             last iterate: center {center:.6e} Hz, fwhm {fwhm:.6e} Hz")]
    FitFailed {
        iterations: usize,
        residual: f64,
        center: f64,
        fwhm: f64,
    },

    /// Config file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A velocity-node solve failed inside the thermal average.
    #[error("solver failure at velocity node (a = {a:.4e}, b = {b:.4e} rad/s): {source}")]
    VelocityNode {
        a: f64,
        b: f64,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    /// Attach the velocity-node context to an inner failure.
    pub fn at_node(self, a: f64, b: f64) -> Self {
        SimError::VelocityNode {
            a,
            b,
            source: Box::new(self),
        }
    }
}
