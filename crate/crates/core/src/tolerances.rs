use serde::{Deserialize, Serialize};

/// Environment variable multiplying every residual tolerance.
pub const TOL_SCALE_ENV: &str = "CONJLAB_TOL_SCALE";

/// Residual tolerances and certificate slacks used by the verification checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// relative slack on sampled certificate bounds (‖A‖ ≤ M, |f| ≤ μ, Lipschitz γ)
    pub eps_cert: f64,
    pub uas: f64,
    pub num: f64,
    pub equiv: f64,
    pub inv: f64,
    pub conj: f64,
    /// relative slack on sampled inequalities
    pub rel: f64,
    pub jac: f64,
    pub eq: f64,
    pub lyap: f64,
    /// analytic Df against finite differences (relative)
    pub fd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_cert: 1e-9,
            uas: 1e-7,
            num: 1e-7,
            equiv: 1e-7,
            inv: 1e-6,
            conj: 1e-6,
            rel: 1e-3,
            jac: 1e-4,
            eq: 1e-8,
            lyap: 1e-6,
            fd: 1e-5,
        }
    }
}

impl Tolerances {
    /// Multiplies the residual tolerances (not the certificate slack).
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in [
            &mut self.uas,
            &mut self.num,
            &mut self.equiv,
            &mut self.inv,
            &mut self.conj,
            &mut self.jac,
            &mut self.eq,
            &mut self.lyap,
            &mut self.fd,
        ] {
            *v *= factor;
        }
        self
    }

    /// Applies `CONJLAB_TOL_SCALE` when it is set to a positive number.
    pub fn from_env(self) -> Self {
        match std::env::var(TOL_SCALE_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
        {
            Some(f) if f > 0.0 && f.is_finite() => self.scaled(f),
            _ => self,
        }
    }
}
