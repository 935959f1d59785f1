//! The linear system `x' = A(t)x` with its uniform asymptotic stability
//! certificate `(M, K, α)`, transition matrices, and certificate checks.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, op_norm};
use crate::ode::{self, FlowSample, IntegratorConfig, Trajectory};
use crate::report::{anchors, ReportEntry};

/// Scalar coefficient functions allowed on the diagonal of `A(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn {
    Const(f64),
    /// `mean + amp·sin(freq·t)`
    Osc {
        mean: f64,
        amp: f64,
        freq: f64,
    },
}

impl ScalarFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ScalarFn::Const(c) => c,
            ScalarFn::Osc { mean, amp, freq } => mean + amp * (freq * t).sin(),
        }
    }

    /// Supremum of `|·|` over `t ≥ 0`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            ScalarFn::Const(c) => c.abs(),
            ScalarFn::Osc { mean, amp, .. } => mean.abs() + amp.abs(),
        }
    }
}

type MatrixFn = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

/// `A(t)`: a constant matrix, a diagonal of scalar functions, or a custom closure.
#[derive(Clone)]
pub enum CoefficientMatrix {
    Constant(DMatrix<f64>),
    Diagonal(Vec<ScalarFn>),
    Custom {
        dim: usize,
        label: String,
        f: Arc<MatrixFn>,
    },
}

impl fmt::Debug for CoefficientMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientMatrix::Constant(m) => write!(f, "Constant({:?})", m.as_slice()),
            CoefficientMatrix::Diagonal(d) => write!(f, "Diagonal({d:?})"),
            CoefficientMatrix::Custom { dim, label, .. } => write!(f, "Custom({label}, n={dim})"),
        }
    }
}

impl CoefficientMatrix {
    pub fn scalar(a: f64) -> Self {
        CoefficientMatrix::Constant(DMatrix::from_element(1, 1, a))
    }

    /// `[[a, b], [−b, a]]`: damping `a` with rotation rate `b`.
    pub fn rot(a: f64, b: f64) -> Self {
        CoefficientMatrix::Constant(DMatrix::from_row_slice(2, 2, &[a, b, -b, a]))
    }

    pub fn custom<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        CoefficientMatrix::Custom {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CoefficientMatrix::Constant(m) => m.nrows(),
            CoefficientMatrix::Diagonal(d) => d.len(),
            CoefficientMatrix::Custom { dim, .. } => *dim,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        match self {
            CoefficientMatrix::Constant(_) => true,
            CoefficientMatrix::Diagonal(d) => d.iter().all(|s| matches!(s, ScalarFn::Const(_))),
            CoefficientMatrix::Custom { .. } => false,
        }
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match self {
            CoefficientMatrix::Constant(m) => m.clone(),
            CoefficientMatrix::Diagonal(d) => DMatrix::from_diagonal(
                &nalgebra::DVector::from_iterator(d.len(), d.iter().map(|s| s.eval(t))),
            ),
            CoefficientMatrix::Custom { f, .. } => f(t),
        }
    }

    /// `out = A(t)·x`
    pub fn apply(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            CoefficientMatrix::Constant(m) => {
                let n = m.nrows();
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += m[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
            CoefficientMatrix::Diagonal(d) => {
                for (i, s) in d.iter().enumerate() {
                    out[i] = s.eval(t) * x[i];
                }
            }
            CoefficientMatrix::Custom { f, .. } => {
                let m = f(t);
                let n = m.nrows();
                for i in 0..n {
                    out[i] = (0..n).map(|j| m[(i, j)] * x[j]).sum();
                }
            }
        }
    }

    /// Applies `A(t)` to every column of a column-major `n×n` block.
    pub fn apply_columns(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        match self {
            CoefficientMatrix::Custom { f, .. } => {
                let m = f(t);
                for c in 0..n {
                    for i in 0..n {
                        out[c * n + i] = (0..n).map(|j| m[(i, j)] * x[c * n + j]).sum();
                    }
                }
            }
            _ => {
                for c in 0..n {
                    self.apply(t, &x[c * n..(c + 1) * n], &mut out[c * n..(c + 1) * n]);
                }
            }
        }
    }
}

fn quantize(t: f64) -> i64 {
    (t * (1u64 << 40) as f64).round() as i64
}

type CacheKey = (i64, i64, u64, u64);

/// Read-through cache of transition matrices, keyed by quantized `(t, s)`
/// and the integrator tolerances.
#[derive(Default)]
struct TransitionCache {
    map: RwLock<HashMap<CacheKey, Arc<DMatrix<f64>>>>,
}

const CACHE_LIMIT: usize = 1 << 16;

/// `x' = A(t)x` with certified constants: `sup‖A(t)‖ = M`, and
/// `‖Φ(t,s)‖ ≤ K·exp(−α(t−s))` for `t ≥ s ≥ 0`.
#[derive(Clone)]
pub struct LinearSystem {
    a: CoefficientMatrix,
    m: f64,
    k: f64,
    alpha: f64,
    cache: Arc<TransitionCache>,
}

impl fmt::Debug for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearSystem")
            .field("a", &self.a)
            .field("m", &self.m)
            .field("k", &self.k)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl LinearSystem {
    pub fn new(a: CoefficientMatrix, m: f64, k: f64, alpha: f64) -> Result<Self> {
        if a.dim() == 0 {
            return Err(Error::InvalidArgument(
                "A(t) must have dimension ≥ 1".into(),
            ));
        }
        if let CoefficientMatrix::Constant(c) = &a {
            if !c.is_square() {
                return Err(Error::InvalidArgument("A must be square".into()));
            }
        }
        if !(m > 0.0) {
            return Err(Error::CertificateRejected {
                inequality: "M > 0".into(),
                detail: format!("M = {m}"),
            });
        }
        if !(k >= 1.0) {
            return Err(Error::CertificateRejected {
                inequality: "K ≥ 1".into(),
                detail: format!("K = {k}"),
            });
        }
        if !(alpha > 0.0) {
            return Err(Error::CertificateRejected {
                inequality: "α > 0".into(),
                detail: format!("α = {alpha}"),
            });
        }
        if alpha > m {
            return Err(Error::CertificateRejected {
                inequality: "α ≤ M".into(),
                detail: format!("α = {alpha} > M = {m}"),
            });
        }
        Ok(Self {
            a,
            m,
            k,
            alpha,
            cache: Arc::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn coefficients(&self) -> &CoefficientMatrix {
        &self.a
    }

    pub fn a_at(&self, t: f64) -> DMatrix<f64> {
        self.a.at(t)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Right-hand side of `x' = A(t)x`.
    pub fn rhs(&self) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        move |t, x, out| self.a.apply(t, x, out)
    }

    /// `x(t, τ, ξ) = Φ(t,τ)ξ` by integrating the vector equation.
    pub fn flow(&self, t: f64, tau: f64, xi: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
        self.check_dim(xi.len())?;
        if t == tau {
            return Ok(xi.to_vec());
        }
        Ok(ode::integrate(self.rhs(), tau, xi, t, cfg)?
            .terminal()
            .to_vec())
    }

    /// Dense linear trajectory through `(τ, ξ)` covering `[lo, hi]`.
    pub fn trajectory(
        &self,
        tau: f64,
        xi: &[f64],
        lo: f64,
        hi: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory> {
        self.check_dim(xi.len())?;
        Trajectory::through(self.rhs(), tau, xi, lo, hi, cfg)
    }

    /// Transition matrix `Φ(t,s)`, obtained from `X' = A(τ)X`, `X(s) = I`.
    pub fn transition(&self, t: f64, s: f64, cfg: &IntegratorConfig) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transition matrix requires t, s ≥ 0 (got t = {t}, s = {s})"
            )));
        }
        let n = self.dim();
        if t == s {
            return Ok(DMatrix::identity(n, n));
        }
        let key = (
            quantize(t),
            quantize(s),
            cfg.rtol.to_bits(),
            cfg.atol.to_bits(),
        );
        if let Some(m) = self.cache.map.read().unwrap().get(&key) {
            return Ok((**m).clone());
        }
        // Integrate Ψ = e^{α(t−s)}Φ, which stays O(K) forward in time, so
        // the absolute tolerance does not swamp an exponentially small Φ.
        let alpha = self.alpha;
        let x0 = linalg::flatten(&DMatrix::identity(n, n));
        let sample = ode::integrate(
            |tt, x: &[f64], out: &mut [f64]| {
                self.a.apply_columns(tt, x, out);
                out.iter_mut().zip(x).for_each(|(o, v)| *o += alpha * v);
            },
            s,
            &x0,
            t,
            cfg,
        )?;
        let phi = linalg::unflatten(n, sample.terminal()) * (-alpha * (t - s)).exp();
        let mut map = self.cache.map.write().unwrap();
        if map.len() < CACHE_LIMIT {
            map.insert(key, Arc::new(phi.clone()));
        }
        Ok(phi)
    }

    /// Dense sample of `s ↦ Φ(t,s)` (column-major) from `s = t` to `s = s_end`,
    /// from the adjoint equation `∂Φ(t,s)/∂s = −Φ(t,s)A(s)`.
    pub fn transition_row_sample(
        &self,
        t: f64,
        s_end: f64,
        cfg: &IntegratorConfig,
    ) -> Result<FlowSample> {
        let n = self.dim();
        let x0 = linalg::flatten(&DMatrix::identity(n, n));
        ode::integrate(
            |s, x: &[f64], out: &mut [f64]| {
                let a = self.a.at(s);
                for j in 0..n {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += x[k * n + i] * a[(k, j)];
                        }
                        out[j * n + i] = -acc;
                    }
                }
            },
            t,
            &x0,
            s_end,
            cfg,
        )
    }

    /// `‖Φ(t,s)‖ − K·exp(−α(t−s))` over the given pairs; passes iff every
    /// residual is at most `slack`.
    pub fn verify_uas(
        &self,
        pairs: &[(f64, f64)],
        cfg: &IntegratorConfig,
        slack: f64,
    ) -> ReportEntry {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_pair = (0.0, 0.0);
        for &(t, s) in pairs {
            if !(t >= s && s >= 0.0) {
                return ReportEntry::failure(
                    "linear.uas_bound",
                    anchors::UAS_BOUND,
                    format!("pair (t, s) = ({t}, {s}) violates t ≥ s ≥ 0"),
                );
            }
            match self.transition(t, s, cfg) {
                Ok(phi) => {
                    let r = op_norm(&phi) - self.k * (-self.alpha * (t - s)).exp();
                    if r > worst || r.is_nan() {
                        worst = r;
                        worst_pair = (t, s);
                    }
                }
                Err(e) => {
                    return ReportEntry::failure(
                        "linear.uas_bound",
                        anchors::UAS_BOUND,
                        e.to_string(),
                    )
                }
            }
        }
        ReportEntry::at_most("linear.uas_bound", anchors::UAS_BOUND, worst, slack).with_note(
            format!(
                "{} pairs, worst at (t, s) = ({}, {})",
                pairs.len(),
                worst_pair.0,
                worst_pair.1
            ),
        )
    }

    /// Sampled check of `‖A(t)‖ ≤ M(1 + eps_cert)`; reports `max ‖A(t)‖/M − 1`.
    pub fn verify_bound(&self, times: &[f64], eps_cert: f64) -> ReportEntry {
        let worst = times
            .iter()
            .map(|&t| op_norm(&self.a.at(t)) / self.m - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        ReportEntry::at_most("linear.a_bound", anchors::A_BOUND, worst, eps_cert).with_note(
            format!("{} sample times, measured max ‖A(t)‖/M − 1", times.len()),
        )
    }

    /// `max ‖Φ(t,s)Φ(s,r) − Φ(t,r)‖` over the triples `(t, s, r)`.
    pub fn verify_cocycle(
        &self,
        triples: &[(f64, f64, f64)],
        cfg: &IntegratorConfig,
        tol: f64,
    ) -> ReportEntry {
        let mut worst = 0.0f64;
        for &(t, s, r) in triples {
            let res = (|| -> Result<f64> {
                let lhs = self.transition(t, s, cfg)? * self.transition(s, r, cfg)?;
                Ok(op_norm(&(lhs - self.transition(t, r, cfg)?)))
            })();
            match res {
                Ok(v) => worst = worst.max(v),
                Err(e) => {
                    return ReportEntry::failure("linear.cocycle", anchors::COCYCLE, e.to_string())
                }
            }
        }
        ReportEntry::at_most("linear.cocycle", anchors::COCYCLE, worst, tol)
            .with_note(format!("{} triples", triples.len()))
    }

    /// `min det Φ(t,s)` over the pairs; must stay positive.
    pub fn verify_det(&self, pairs: &[(f64, f64)], cfg: &IntegratorConfig) -> ReportEntry {
        let mut worst = f64::INFINITY;
        for &(t, s) in pairs {
            match self.transition(t, s, cfg) {
                Ok(phi) => worst = worst.min(phi.determinant()),
                Err(e) => {
                    return ReportEntry::failure("linear.det_phi", anchors::DET_PHI, e.to_string())
                }
            }
        }
        ReportEntry::above("linear.det_phi", anchors::DET_PHI, worst, 0.0)
            .with_note(format!("{} pairs", pairs.len()))
    }

    /// Worst ratio `|Φ(t,s)(ξ−ξ̄)| / (e^{M|t−s|}|ξ−ξ̄|)` over time pairs and state pairs.
    pub fn verify_linear_ci(
        &self,
        times: &[(f64, f64)],
        states: &[(Vec<f64>, Vec<f64>)],
        cfg: &IntegratorConfig,
        rel: f64,
    ) -> ReportEntry {
        let mut worst = 0.0f64;
        for &(t, s) in times {
            let phi = match self.transition(t, s, cfg) {
                Ok(p) => p,
                Err(e) => {
                    return ReportEntry::failure(
                        "linear.continuity",
                        anchors::LINEAR_CI,
                        e.to_string(),
                    )
                }
            };
            for (a, b) in states {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let dn = linalg::norm(&d);
                if dn > 0.0 {
                    let img = linalg::norm(&linalg::mat_vec(&phi, &d));
                    worst = worst.max(img / (dn * (self.m * (t - s).abs()).exp()));
                }
            }
        }
        ReportEntry::at_most("linear.continuity", anchors::LINEAR_CI, worst, 1.0 + rel)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_decay() -> LinearSystem {
        LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn scalar_transition() {
        let sys = scalar_decay();
        let phi = sys
            .transition(2.0, 0.0, &IntegratorConfig::default())
            .unwrap();
        assert!((phi[(0, 0)] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn identity_on_diagonal() {
        let sys = LinearSystem::new(CoefficientMatrix::rot(-1.0, 0.5), 1.2, 1.0, 1.0).unwrap();
        let phi = sys
            .transition(1.5, 1.5, &IntegratorConfig::default())
            .unwrap();
        assert_eq!(phi, DMatrix::identity(2, 2));
    }

    #[test]
    fn rejects_bad_certificates() {
        assert!(LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 0.5, 1.0).is_err());
        assert!(LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 0.0).is_err());
        let err = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("α ≤ M"));
    }

    #[test]
    fn negative_time_rejected() {
        let sys = scalar_decay();
        assert!(sys
            .transition(-1.0, 0.0, &IntegratorConfig::default())
            .is_err());
    }

    #[test]
    fn uas_tight_bound_passes() {
        let sys = scalar_decay();
        let e = sys.verify_uas(
            &[(1.0, 0.0), (5.0, 2.0)],
            &IntegratorConfig::default(),
            1e-7,
        );
        assert!(e.pass, "{e:?}");
    }

    #[test]
    fn wrong_alpha_fails() {
        // a deliberately wrong certificate: alpha = 2 with M = 2 to pass the constructor
        let sys = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 2.0, 1.0, 2.0).unwrap();
        let e = sys.verify_uas(&[(1.0, 0.0)], &IntegratorConfig::default(), 1e-7);
        assert!(!e.pass);
        assert!((e.measured - ((-1.0f64).exp() - (-2.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn adjoint_sample_matches_transition() {
        let a = CoefficientMatrix::Diagonal(vec![
            ScalarFn::Const(-1.0),
            ScalarFn::Osc {
                mean: -1.5,
                amp: 0.3,
                freq: 2.0,
            },
        ]);
        let sys = LinearSystem::new(a, 1.8, 1.5, 1.0).unwrap();
        let cfg = IntegratorConfig::default();
        let sample = sys.transition_row_sample(3.0, 0.0, &cfg).unwrap();
        for s in [0.0, 0.7, 2.2] {
            let direct = sys.transition(3.0, s, &cfg).unwrap();
            let adj = linalg::unflatten(2, &sample.eval(s));
            assert!(linalg::max_abs_diff(&direct, &adj) < 1e-8);
        }
    }

    #[test]
    fn cache_is_consistent() {
        let sys = scalar_decay();
        let cfg = IntegratorConfig::default();
        let a = sys.transition(4.0, 1.0, &cfg).unwrap();
        let b = sys.transition(4.0, 1.0, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
