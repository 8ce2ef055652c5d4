use serde::{Deserialize, Serialize};

/// Classification thresholds shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Gaussian curvature below which a point counts as parabolic.
    pub eps_k: f64,
    /// Relative principal-curvature gap below which a point counts as umbilic.
    pub eps_umbilic: f64,
    /// Minimum |grad K| for a regular parabolic point.
    pub eps_regular: f64,
    /// Relative tolerance for the exact-zero sets of the umbilic classifier.
    pub eps_boundary: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_k: 1e-10,
            eps_umbilic: 1e-8,
            eps_regular: 1e-8,
            eps_boundary: 1e-9,
        }
    }
}

/// Settings for line-field tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Largest arclength step.
    pub step_target: f64,
    pub max_arclength: f64,
    /// Stop when K drops below this value.
    pub stop_k: f64,
    /// Stop when the relative principal gap drops below this value.
    pub stop_umbilic: f64,
    /// Distance (in space) below which a trace is declared closed.
    pub closure_tol: f64,
    /// Local error tolerance of the embedded Runge-Kutta pair.
    pub rk_tol: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            step_target: 0.02,
            max_arclength: 10.0,
            stop_k: 1e-10,
            stop_umbilic: 1e-6,
            closure_tol: 1e-4,
            rk_tol: 1e-10,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.step_target,
            self.max_arclength,
            self.stop_k,
            self.stop_umbilic,
            self.closure_tol,
            self.rk_tol,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(crate::GmcError::InvalidArgument(
                "trace configuration values must be positive".into(),
            ))
        }
    }
}

/// Settings for the endpoint-singular quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Target relative accuracy.
    pub tol: f64,
    /// Initial tanh-sinh step; halved per level.
    pub h0: f64,
    pub max_levels: usize,
    /// Panels of the substitution-based Gauss rule.
    pub gauss_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            h0: 0.5,
            max_levels: 12,
            gauss_panels: 16,
        }
    }
}
