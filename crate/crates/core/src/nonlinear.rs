//! The perturbation `f(t, y)` with its certificate `(γ, μ)`, the perturbed
//! flow `y' = A(t)y + f(t,y)`, and first-order sensitivities.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conjugacy::PicardConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::linear::LinearSystem;
use crate::ode::{self, FlowSample, IntegratorConfig, Trajectory};
use crate::report::{anchors, ReportEntry};

/// A vector field `f(t, y)` usable as a perturbation.
pub trait PerturbationField: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Analytic `∂f/∂y`, when known.
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Required state dimension, if the field only makes sense for one.
    fn dim(&self) -> Option<usize> {
        None
    }

    fn label(&self) -> String;
}

/// Built-in perturbations. All act componentwise except `ConstantShift`.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Zero,
    /// `c·(π/2 − arctan(t + |y|))`; for `t ≥ 0` this is the half-line reading of `|t|`.
    JiangArctan(f64),
    /// `c·sin(y)`
    ScaledSin(f64),
    /// `c·tanh(y)`
    ScaledTanh(f64),
    /// `f ≡ c`
    ConstantShift(Vec<f64>),
}

impl PerturbationField for Builtin {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        match self {
            Builtin::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Builtin::JiangArctan(c) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * (FRAC_PI_2 - (t + v.abs()).atan());
                }
            }
            Builtin::ScaledSin(c) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * v.sin();
                }
            }
            Builtin::ScaledTanh(c) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * v.tanh();
                }
            }
            Builtin::ConstantShift(c) => out.copy_from_slice(c),
        }
    }

    fn jacobian(&self, t: f64, y: &[f64]) -> Option<DMatrix<f64>> {
        let n = y.len();
        let diag = |d: &dyn Fn(f64) -> f64| {
            Some(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                y.iter().map(|&v| d(v)),
            )))
        };
        match self {
            Builtin::Zero | Builtin::ConstantShift(_) => Some(DMatrix::zeros(n, n)),
            // not differentiable at y = 0; the symmetric value 0 is used there
            Builtin::JiangArctan(c) => diag(&|v: f64| {
                let s = t + v.abs();
                -c * v.signum() * if v == 0.0 { 0.0 } else { 1.0 / (1.0 + s * s) }
            }),
            Builtin::ScaledSin(c) => diag(&|v: f64| c * v.cos()),
            Builtin::ScaledTanh(c) => diag(&|v: f64| {
                let th = v.tanh();
                c * (1.0 - th * th)
            }),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Builtin::ConstantShift(c) => Some(c.len()),
            _ => None,
        }
    }

    fn label(&self) -> String {
        match self {
            Builtin::Zero => "zero".into(),
            Builtin::JiangArctan(c) => format!("jiang_arctan({c})"),
            Builtin::ScaledSin(c) => format!("scaled_sin({c})"),
            Builtin::ScaledTanh(c) => format!("scaled_tanh({c})"),
            Builtin::ConstantShift(c) => format!("constant_shift({c:?})"),
        }
    }
}

type FieldFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
type JacFn = dyn Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync;

/// A perturbation given by closures.
#[derive(Clone)]
pub struct FnField {
    label: String,
    f: Arc<FieldFn>,
    df: Option<Arc<JacFn>>,
}

impl FnField {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_jacobian<J>(mut self, df: J) -> Self
    where
        J: Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({})", self.label)
    }
}

impl PerturbationField for FnField {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.f)(t, y, out)
    }

    fn jacobian(&self, t: f64, y: &[f64]) -> Option<DMatrix<f64>> {
        self.df.as_ref().map(|d| d(t, y))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `g(t, z) = f(t, z + ȳ) − f(t, ȳ)`.
#[derive(Debug, Clone)]
pub struct Translated {
    inner: Arc<dyn PerturbationField>,
    shift: Vec<f64>,
}

impl Translated {
    pub fn new(inner: Arc<dyn PerturbationField>, shift: Vec<f64>) -> Self {
        Self { inner, shift }
    }
}

impl PerturbationField for Translated {
    fn eval(&self, t: f64, z: &[f64], out: &mut [f64]) {
        let n = z.len();
        let shifted: Vec<f64> = z.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        let mut base = vec![0.0; n];
        self.inner.eval(t, &shifted, out);
        self.inner.eval(t, &self.shift, &mut base);
        for (o, b) in out.iter_mut().zip(&base) {
            *o -= b;
        }
    }

    fn jacobian(&self, t: f64, z: &[f64]) -> Option<DMatrix<f64>> {
        let shifted: Vec<f64> = z.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        self.inner.jacobian(t, &shifted)
    }

    fn dim(&self) -> Option<usize> {
        Some(self.shift.len())
    }

    fn label(&self) -> String {
        format!("{} translated by {:?}", self.inner.label(), self.shift)
    }
}

/// Central finite-difference Jacobian with step `rel_step·(1 + |y|)`.
pub fn fd_jacobian<F>(f: F, y: &[f64], rel_step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let h = rel_step * (1.0 + norm(y));
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        yp[j] = y[j] + h;
        f(&yp, &mut fp);
        yp[j] = y[j] - h;
        f(&yp, &mut fm);
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Step used for the finite-difference fallback of `Df`.
pub const DF_FD_STEP: f64 = 1e-6;

/// `f` with its certificate: `|f(t,y) − f(t,ȳ)| ≤ γ|y − ȳ|` and `|f(t,y)| ≤ μ`.
#[derive(Clone, Debug)]
pub struct Perturbation {
    field: Arc<dyn PerturbationField>,
    gamma: f64,
    mu: f64,
    smoothness: u32,
    fd_fallback: bool,
}

impl Perturbation {
    pub fn new(
        field: Arc<dyn PerturbationField>,
        gamma: f64,
        mu: f64,
        smoothness: u32,
    ) -> Result<Self> {
        if !(gamma >= 0.0) || !(mu >= 0.0) || !gamma.is_finite() || !mu.is_finite() {
            return Err(Error::CertificateRejected {
                inequality: "γ ≥ 0, μ ≥ 0".into(),
                detail: format!("γ = {gamma}, μ = {mu}"),
            });
        }
        Ok(Self {
            field,
            gamma,
            mu,
            smoothness,
            fd_fallback: true,
        })
    }

    pub fn builtin(b: Builtin, gamma: f64, mu: f64, smoothness: u32) -> Result<Self> {
        Self::new(Arc::new(b), gamma, mu, smoothness)
    }

    /// `g(t,z) = f(t,z+ȳ) − f(t,ȳ)`, certified with `γ` and `2μ`.
    pub fn translated(&self, ybar: &[f64]) -> Self {
        Self {
            field: Arc::new(Translated::new(self.field.clone(), ybar.to_vec())),
            gamma: self.gamma,
            mu: 2.0 * self.mu,
            smoothness: self.smoothness,
            fd_fallback: self.fd_fallback,
        }
    }

    pub fn zero() -> Self {
        Self::builtin(Builtin::Zero, 0.0, 0.0, u32::MAX).unwrap()
    }

    /// Disables the finite-difference substitute for a missing `Df`.
    pub fn without_fd_fallback(mut self) -> Self {
        self.fd_fallback = false;
        self
    }

    pub fn field(&self) -> &Arc<dyn PerturbationField> {
        &self.field
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.field
            .jacobian(0.0, &vec![0.0; self.field.dim().unwrap_or(1)])
            .is_some()
    }

    pub fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.field.eval(t, y, out)
    }

    pub fn value(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.field.eval(t, y, &mut out);
        out
    }

    pub fn jacobian_available(&self) -> bool {
        self.smoothness >= 1 || self.fd_fallback
    }

    /// `Df(t, y)`: analytic when provided, otherwise central differences.
    pub fn jacobian(&self, t: f64, y: &[f64]) -> Result<DMatrix<f64>> {
        if !self.jacobian_available() {
            return Err(Error::MissingJacobian);
        }
        if let Some(j) = self.field.jacobian(t, y) {
            return Ok(j);
        }
        Ok(fd_jacobian(
            |v, out| self.field.eval(t, v, out),
            y,
            DF_FD_STEP,
        ))
    }

    /// Sampled falsification of the certificate on `samples` random triples
    /// `(t, y, ȳ)` with `t ∈ [0, t_max]` and states in `[−radius, radius]ⁿ`.
    #[allow(clippy::too_many_arguments)]
    pub fn verify(
        &self,
        dim: usize,
        t_max: f64,
        radius: f64,
        samples: usize,
        seed: u64,
        eps_cert: f64,
        tau_fd: f64,
    ) -> Vec<ReportEntry> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_f = 0.0f64;
        let mut max_lip = 0.0f64;
        let mut max_fd = 0.0f64;
        let mut fa = vec![0.0; dim];
        let mut fb = vec![0.0; dim];
        let analytic = self.field.jacobian(0.0, &vec![1.0; dim]).is_some();
        for k in 0..samples {
            let t = rng.random_range(0.0..=t_max);
            let y: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(-radius..=radius))
                .collect();
            // alternate far pairs with near pairs probing the local slope
            let scale = if k % 2 == 0 { radius } else { 1e-3 };
            let yb: Vec<f64> = y
                .iter()
                .map(|v| v + rng.random_range(-scale..=scale))
                .collect();
            self.field.eval(t, &y, &mut fa);
            self.field.eval(t, &yb, &mut fb);
            max_f = max_f.max(norm(&fa)).max(norm(&fb));
            let d = dist(&y, &yb);
            if d > 0.0 {
                max_lip = max_lip.max(dist(&fa, &fb) / d);
            }
            if analytic {
                let exact = self.field.jacobian(t, &y).unwrap();
                let fd = fd_jacobian(|v, out| self.field.eval(t, v, out), &y, DF_FD_STEP);
                let rel = linalg::max_abs_diff(&exact, &fd) / (1.0 + linalg::op_norm(&exact));
                max_fd = max_fd.max(rel);
            }
        }
        let mut out = vec![
            ReportEntry::at_most(
                "perturbation.mu_bound",
                anchors::F_BOUND,
                max_f,
                self.mu * (1.0 + eps_cert),
            )
            .with_note(format!("{samples} samples, measured max |f|")),
            ReportEntry::at_most(
                "perturbation.gamma_lipschitz",
                anchors::F_LIPSCHITZ,
                max_lip,
                self.gamma * (1.0 + eps_cert),
            )
            .with_note(format!("{samples} pairs, measured max difference quotient")),
        ];
        if analytic {
            out.push(
                ReportEntry::at_most("perturbation.df_fd", anchors::DF_FD, max_fd, tau_fd)
                    .with_note("max |Df − FD| / (1 + ‖Df‖)"),
            );
        }
        out
    }
}

/// A linear system and a perturbation satisfying `Kγ/α < 1`.
#[derive(Clone, Debug)]
pub struct ConjugacyProblem {
    pub linear: LinearSystem,
    pub pert: Perturbation,
    pub cfg: IntegratorConfig,
    pub t_max: f64,
    /// stopping rule for the literal `H` path
    pub picard: PicardConfig,
}

impl ConjugacyProblem {
    pub fn new(
        linear: LinearSystem,
        pert: Perturbation,
        cfg: IntegratorConfig,
        t_max: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some(d) = pert.field.dim() {
            if d != linear.dim() {
                return Err(Error::DimensionMismatch {
                    expected: linear.dim(),
                    got: d,
                });
            }
        }
        let ratio = linear.k() * pert.gamma() / linear.alpha();
        if !(ratio < 1.0) {
            return Err(Error::CertificateRejected {
                inequality: "Kγ/α < 1".into(),
                detail: format!(
                    "Kγ/α = {ratio} with K = {}, γ = {}, α = {}",
                    linear.k(),
                    pert.gamma(),
                    linear.alpha()
                ),
            });
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max must be positive (got {t_max})"
            )));
        }
        Ok(Self {
            linear,
            pert,
            cfg,
            t_max,
            picard: PicardConfig::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    /// Contraction factor `q = Kγ/α`.
    pub fn q(&self) -> f64 {
        self.linear.k() * self.pert.gamma() / self.linear.alpha()
    }

    /// `Kμ/α`, the bound on `|H(t,ξ) − ξ|` and `|G(t,η) − η|`.
    pub fn proximity_bound(&self) -> f64 {
        self.linear.k() * self.pert.mu() / self.linear.alpha()
    }

    /// Right-hand side of `y' = A(t)y + f(t,y)`.
    pub fn rhs(&self) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        move |t, y, out| {
            self.linear.coefficients().apply(t, y, out);
            let mut fy = [0.0f64; 4];
            if y.len() <= fy.len() {
                let fy = &mut fy[..y.len()];
                self.pert.eval(t, y, fy);
                out.iter_mut().zip(fy.iter()).for_each(|(o, v)| *o += v);
            } else {
                let fy = self.pert.value(t, y);
                out.iter_mut().zip(&fy).for_each(|(o, v)| *o += v);
            }
        }
    }

    pub(crate) fn check_state(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_time(&self, label: &str, t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{label} must be ≥ 0 (got {t})"
            )))
        }
    }

    /// `y(t, τ, η)` together with the dense sample from `τ` to `t`.
    pub fn flow_y(&self, t: f64, tau: f64, eta: &[f64]) -> Result<(Vec<f64>, FlowSample)> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        self.check_time("τ", tau)?;
        let sample = ode::integrate(self.rhs(), tau, eta, t, &self.cfg)?;
        Ok((sample.terminal().to_vec(), sample))
    }

    /// Dense perturbed trajectory through `(τ, η)` covering `[lo, hi]`.
    pub fn trajectory_y(&self, tau: f64, eta: &[f64], lo: f64, hi: f64) -> Result<Trajectory> {
        self.check_state(eta)?;
        Trajectory::through(self.rhs(), tau, eta, lo, hi, &self.cfg)
    }

    /// `∂y/∂η (t, τ, η)` from the variational equation, co-integrated with
    /// the base flow.
    pub fn variational_y(&self, t: f64, tau: f64, eta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        self.check_time("τ", tau)?;
        let n = self.dim();
        if !self.pert.jacobian_available() {
            return Err(Error::MissingJacobian);
        }
        if t == tau {
            return Ok(DMatrix::identity(n, n));
        }
        let mut x0 = eta.to_vec();
        x0.extend(linalg::flatten(&DMatrix::identity(n, n)));
        let base = self.rhs();
        let sample = ode::integrate(
            |s, x: &[f64], out: &mut [f64]| {
                let (y, big_y) = x.split_at(n);
                let (dy, dbig) = out.split_at_mut(n);
                base(s, y, dy);
                let a = self.linear.a_at(s);
                let df = self
                    .pert
                    .jacobian(s, y)
                    .expect("jacobian availability checked");
                let m = a + df;
                for c in 0..n {
                    for i in 0..n {
                        dbig[c * n + i] = (0..n).map(|k| m[(i, k)] * big_y[c * n + k]).sum();
                    }
                }
            },
            tau,
            &x0,
            t,
            &self.cfg,
        )?;
        Ok(linalg::unflatten(n, &sample.terminal()[n..]))
    }

    /// Sampled Gronwall estimate `|y(s,t,η) − y(s,t,η̄)| ≤ |η−η̄|·e^{(M+γ)(t−s)}`;
    /// reports the worst ratio of left to right side.
    pub fn verify_gronwall(
        &self,
        t: f64,
        pairs: &[(Vec<f64>, Vec<f64>)],
        ss: &[f64],
        rel: f64,
    ) -> ReportEntry {
        let rate = self.linear.m() + self.pert.gamma();
        let mut worst = 0.0f64;
        for (a, b) in pairs {
            let d0 = dist(a, b);
            if d0 == 0.0 {
                continue;
            }
            let (ta, tb) = match (
                self.trajectory_y(t, a, 0.0, t),
                self.trajectory_y(t, b, 0.0, t),
            ) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => {
                    return ReportEntry::failure(
                        "nonlinear.gronwall",
                        anchors::GRONWALL,
                        e.to_string(),
                    )
                }
            };
            for &s in ss.iter().filter(|&&s| s <= t && s >= 0.0) {
                let lhs = dist(&ta.eval(s), &tb.eval(s));
                let rhs = d0 * (rate * (t - s)).exp();
                worst = worst.max(lhs / rhs);
            }
        }
        ReportEntry::at_most("nonlinear.gronwall", anchors::GRONWALL, worst, 1.0 + rel)
            .with_note("max ratio of lhs to rhs")
    }

    /// Flow property `y(t, r, y(r, τ, η)) = y(t, τ, η)`.
    pub fn verify_chain(&self, tau: f64, eta: &[f64], rs: &[f64], t: f64, tol: f64) -> ReportEntry {
        let run = || -> Result<f64> {
            let (direct, _) = self.flow_y(t, tau, eta)?;
            let mut worst = 0.0f64;
            for &r in rs {
                let (mid, _) = self.flow_y(r, tau, eta)?;
                let (via, _) = self.flow_y(t, r, &mid)?;
                worst = worst.max(dist(&via, &direct) / (1.0 + norm(&direct)));
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => ReportEntry::at_most("nonlinear.flow_chain", anchors::FLOW_CHAIN, w, tol)
                .with_note("relative to 1 + |y|"),
            Err(e) => {
                ReportEntry::failure("nonlinear.flow_chain", anchors::FLOW_CHAIN, e.to_string())
            }
        }
    }

    /// `|f(t, y(t))| ≤ μ` at every accepted step of the given samples.
    pub fn verify_f_along(&self, samples: &[FlowSample], eps_cert: f64) -> ReportEntry {
        let mut worst = 0.0f64;
        let mut steps = 0usize;
        for s in samples {
            for i in 0..s.len() {
                worst = worst.max(norm(&self.pert.value(s.times()[i], s.state(i))));
                steps += 1;
            }
        }
        ReportEntry::at_most(
            "nonlinear.f_bound_along_flow",
            anchors::F_BOUND,
            worst,
            self.pert.mu() * (1.0 + eps_cert),
        )
        .with_note(format!("{steps} accepted steps"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::CoefficientMatrix;

    fn scalar(pert: Perturbation) -> ConjugacyProblem {
        let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
        ConjugacyProblem::new(lin, pert, IntegratorConfig::default(), 50.0).unwrap()
    }

    fn jiang() -> ConjugacyProblem {
        scalar(
            Perturbation::builtin(
                Builtin::JiangArctan(0.2),
                0.2,
                std::f64::consts::PI / 5.0,
                1,
            )
            .unwrap(),
        )
    }

    #[test]
    fn rejects_violated_contraction_hypothesis() {
        let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
        let pert = Perturbation::builtin(Builtin::ScaledSin(2.0), 2.0, 2.0, 1).unwrap();
        let err = ConjugacyProblem::new(lin, pert, IntegratorConfig::default(), 10.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Kγ/α < 1") && msg.contains("= 2"), "{msg}");
    }

    #[test]
    fn zero_perturbation_matches_linear_flow() {
        let p = scalar(Perturbation::zero());
        let (y, _) = p.flow_y(3.0, 0.5, &[2.0]).unwrap();
        assert!((y[0] - 2.0 * (-2.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn origin_equilibrium_is_preserved() {
        let p = scalar(Perturbation::builtin(Builtin::ScaledSin(0.2), 0.2, 0.2, 1).unwrap());
        let (y, _) = p.flow_y(7.0, 0.0, &[0.0]).unwrap();
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn variational_identity_at_anchor() {
        let p = jiang();
        assert_eq!(
            p.variational_y(1.3, 1.3, &[0.4]).unwrap(),
            DMatrix::identity(1, 1)
        );
    }

    #[test]
    fn variational_zero_perturbation_is_transition() {
        let p = scalar(Perturbation::zero());
        let v = p.variational_y(2.0, 0.5, &[1.0]).unwrap();
        assert!((v[(0, 0)] - (-1.5f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn variational_matches_central_differences() {
        let p = jiang();
        let v = p.variational_y(2.0, 0.0, &[0.3]).unwrap()[(0, 0)];
        let h = 1e-5;
        let (yp, _) = p.flow_y(2.0, 0.0, &[0.3 + h]).unwrap();
        let (ym, _) = p.flow_y(2.0, 0.0, &[0.3 - h]).unwrap();
        let fd = (yp[0] - ym[0]) / (2.0 * h);
        assert!((v - fd).abs() / fd.abs() < 1e-4, "{v} vs {fd}");
    }

    #[test]
    fn missing_jacobian() {
        let field = FnField::new("cubic-free", |_t, y: &[f64], out: &mut [f64]| {
            out[0] = 0.1 * y[0].sin()
        });
        let pert = Perturbation::new(Arc::new(field), 0.1, 0.1, 0)
            .unwrap()
            .without_fd_fallback();
        let p = scalar(pert);
        assert!(matches!(
            p.variational_y(1.0, 0.0, &[0.2]),
            Err(Error::MissingJacobian)
        ));
    }

    #[test]
    fn fd_fallback_substitutes_jacobian() {
        let field = FnField::new("sin", |_t, y: &[f64], out: &mut [f64]| {
            out[0] = 0.1 * y[0].sin()
        });
        let pert = Perturbation::new(Arc::new(field), 0.1, 0.1, 1).unwrap();
        let j = pert.jacobian(0.0, &[0.5]).unwrap();
        assert!((j[(0, 0)] - 0.1 * 0.5f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn jiang_certificate_holds_on_samples() {
        let p = jiang();
        for e in p.pert.verify(1, 50.0, 5.0, 256, 0x5EED, 1e-9, 1e-5) {
            assert!(e.pass, "{e:?}");
        }
    }

    #[test]
    fn falsified_mu_is_caught() {
        let pert = Perturbation::builtin(Builtin::ScaledSin(0.2), 0.2, 0.1, 1).unwrap();
        let entries = pert.verify(1, 10.0, 5.0, 256, 1, 1e-9, 1e-5);
        assert!(!entries[0].pass);
    }

    #[test]
    fn translation_vanishes_at_origin() {
        let inner: Arc<dyn PerturbationField> = Arc::new(Builtin::JiangArctan(0.2));
        let g = Translated::new(inner, vec![0.7]);
        let mut out = [1.0];
        for t in [0.0, 1.0, 9.0] {
            g.eval(t, &[0.0], &mut out);
            assert_eq!(out[0], 0.0);
        }
    }

    #[test]
    fn gronwall_and_chain_on_jiang() {
        let p = jiang();
        let pairs = vec![(vec![0.5], vec![0.6]), (vec![-1.0], vec![1.0])];
        assert!(
            p.verify_gronwall(4.0, &pairs, &[0.0, 1.0, 2.0, 3.5], 1e-3)
                .pass
        );
        assert!(
            p.verify_chain(0.0, &[0.8], &[0.5, 2.0, 6.0], 4.0, 1e-7)
                .pass
        );
    }
}
