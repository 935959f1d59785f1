//! Equilibria of the perturbed system and converse-Lyapunov certificates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conjugacy::MapPath;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::linear::LinearSystem;
use crate::nonlinear::ConjugacyProblem;
use crate::ode::{self, FlowSample, IntegratorConfig};
use crate::report::{anchors, ReportEntry};

pub const NEWTON_MAX_ITER: usize = 50;
/// Grid spacing for the discrete Lyapunov checks.
pub const LYAPUNOV_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCandidate {
    pub ybar: Vec<f64>,
    /// `max_t |A(t)ȳ + f(t,ȳ)|` over the grid
    pub residual_ode: f64,
    /// `max_t |ȳ − Φ(t,0)ȳ − ∫₀ᵗ Φ(t,s)f(s,ȳ)ds|` over the grid
    pub residual_fpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EquilibriumSearch {
    Found(EquilibriumCandidate),
    /// The root at the first grid time failed validation on the rest of the grid.
    NotFound(EquilibriumCandidate),
}

impl EquilibriumSearch {
    pub fn found(&self) -> Option<&EquilibriumCandidate> {
        match self {
            Self::Found(c) => Some(c),
            Self::NotFound(_) => None,
        }
    }

    pub fn candidate(&self) -> &EquilibriumCandidate {
        match self {
            Self::Found(c) | Self::NotFound(c) => c,
        }
    }
}

/// Damped Newton for `F(y) = 0` with Jacobian `dF`; halves the step while
/// the residual grows.
pub fn damped_newton<F, J>(mut f: F, mut df: J, guess: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
    J: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut y = guess.to_vec();
    let mut r = f(&y);
    for _ in 0..NEWTON_MAX_ITER {
        let rn = norm(&r);
        if rn <= tol {
            return Ok(y);
        }
        let jac = df(&y)?;
        let step = jac
            .lu()
            .solve(&linalg::to_dvector(&r))
            .ok_or(Error::NewtonDiverged {
                iterations: 0,
                residual: rn,
            })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a - lambda * s)
                .collect();
            let rt = f(&trial);
            if norm(&rt) < rn || lambda < 1e-10 {
                let moved = lambda * step.norm();
                y = trial;
                r = rt;
                if moved <= 1e-15 * (1.0 + norm(&y)) {
                    return Ok(y);
                }
                break;
            }
            lambda *= 0.5;
        }
    }
    let rn = norm(&r);
    if rn <= tol {
        Ok(y)
    } else {
        Err(Error::NewtonDiverged {
            iterations: NEWTON_MAX_ITER,
            residual: rn,
        })
    }
}

impl ConjugacyProblem {
    /// Root of `A(t₀)y + f(t₀,y) = 0` at `t₀ = time_grid[0]`, validated on the
    /// whole grid against both the pointwise and the fixed-point characterisation.
    pub fn find_equilibrium(
        &self,
        guess: &[f64],
        time_grid: &[f64],
        tol_eq: f64,
    ) -> Result<EquilibriumSearch> {
        self.check_state(guess)?;
        let &t0 = time_grid
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty time grid".into()))?;
        for &t in time_grid {
            self.check_time("t", t)?;
        }
        let field = |t: f64, y: &[f64]| {
            let mut out = vec![0.0; y.len()];
            self.linear.coefficients().apply(t, y, &mut out);
            let fy = self.pert.value(t, y);
            out.iter_mut().zip(&fy).for_each(|(o, v)| *o += v);
            out
        };
        let ybar = damped_newton(
            |y| field(t0, y),
            |y| Ok(self.linear.a_at(t0) + self.pert.jacobian(t0, y)?),
            guess,
            1e-14,
        )?;
        let residual_ode = time_grid
            .iter()
            .map(|&t| norm(&field(t, &ybar)))
            .fold(0.0, f64::max);
        let mut residual_fpe = 0.0f64;
        for &t in time_grid {
            residual_fpe = residual_fpe.max(self.fpe_residual(t, &ybar)?);
        }
        let c = EquilibriumCandidate {
            ybar,
            residual_ode,
            residual_fpe,
        };
        Ok(if residual_ode <= tol_eq && residual_fpe <= tol_eq {
            EquilibriumSearch::Found(c)
        } else {
            EquilibriumSearch::NotFound(c)
        })
    }

    /// `|u − Φ(t,0)u − ∫₀ᵗ Φ(t,s)f(s,u)ds|`.
    pub fn fpe_residual(&self, t: f64, u: &[f64]) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let n = self.dim();
        let phi = self.linear.transition(t, 0.0, &self.cfg)?;
        let rows = self.linear.transition_row_sample(t, 0.0, &self.cfg)?;
        let mut buf = vec![0.0; n * n];
        let integral = ode::quad(
            |s| {
                rows.eval_into(s, &mut buf);
                let fv = self.pert.value(s, u);
                (0..n)
                    .map(|i| (0..n).map(|k| buf[k * n + i] * fv[k]).sum())
                    .collect()
            },
            0.0,
            t,
            1e-13,
        )?;
        let pu = linalg::mat_vec(&phi, u);
        let r: Vec<f64> = (0..n).map(|i| u[i] - pu[i] - integral[i]).collect();
        Ok(norm(&r))
    }

    /// Equilibrium entries: residuals, ball membership.
    pub fn check_equilibrium(
        &self,
        c: &EquilibriumCandidate,
        tol_eq: f64,
        tol_num: f64,
    ) -> Vec<ReportEntry> {
        vec![
            ReportEntry::at_most(
                "stability.equilibrium.residual_ode",
                anchors::EQUILIBRIUM,
                c.residual_ode,
                tol_eq,
            ),
            ReportEntry::at_most(
                "stability.equilibrium.residual_fpe",
                anchors::EQUILIBRIUM_FPE,
                c.residual_fpe,
                tol_eq,
            ),
            ReportEntry::at_most(
                "stability.equilibrium.ball",
                anchors::EQUILIBRIUM_BALL,
                norm(&c.ybar),
                self.proximity_bound() + tol_num,
            ),
        ]
    }

    /// Two accepted equilibria must coincide.
    pub fn check_uniqueness(
        &self,
        e1: &EquilibriumCandidate,
        e2: &EquilibriumCandidate,
        tol_eq: f64,
    ) -> ReportEntry {
        ReportEntry::at_most(
            "stability.equilibrium.unique",
            anchors::EQUILIBRIUM_UNIQUE,
            dist(&e1.ybar, &e2.ybar),
            2.0 * tol_eq,
        )
    }

    /// `G(t,ȳ) = Φ(t,0)ȳ` and `|H(t,0) − ȳ| ≤ K|ȳ|e^{−αt} + e^{(Kγ−α)t}` at each `t`.
    pub fn equilibrium_limits(
        &self,
        e: &EquilibriumCandidate,
        ts: &[f64],
        tol_num: f64,
    ) -> Vec<ReportEntry> {
        let (k, a, g) = (self.linear.k(), self.linear.alpha(), self.pert.gamma());
        let zero = vec![0.0; self.dim()];
        let mut out = Vec::new();
        for &t in ts {
            let gid = format!("stability.limits.g.t={t}");
            let hid = format!("stability.limits.h.t={t}");
            let r = (|| -> Result<(f64, f64)> {
                let gy = self.g_map(t, &e.ybar, MapPath::FlowComposition)?;
                let py = linalg::mat_vec(&self.linear.transition(t, 0.0, &self.cfg)?, &e.ybar);
                let h0 = self.h_map(t, &zero, MapPath::FlowComposition)?;
                Ok((dist(&gy, &py), dist(&h0, &e.ybar)))
            })();
            match r {
                Ok((dg, dh)) => {
                    out.push(ReportEntry::at_most(
                        gid,
                        anchors::G_AT_EQUILIBRIUM,
                        dg,
                        tol_num,
                    ));
                    let bound = k * norm(&e.ybar) * (-a * t).exp() + ((k * g - a) * t).exp();
                    out.push(ReportEntry::at_most(
                        hid,
                        anchors::H_AT_ZERO,
                        dh,
                        bound + tol_num,
                    ));
                }
                Err(err) => out.push(ReportEntry::failure(
                    gid,
                    anchors::G_AT_EQUILIBRIUM,
                    err.to_string(),
                )),
            }
        }
        out
    }

    /// The system for `z = y − ȳ`: perturbation `g(t,z) = f(t,z+ȳ) − f(t,ȳ)`
    /// with certificates `γ` and `2μ`.
    pub fn translate_system(&self, e: &EquilibriumCandidate) -> Result<ConjugacyProblem> {
        self.check_state(&e.ybar)?;
        let mut p = ConjugacyProblem::new(
            self.linear.clone(),
            self.pert.translated(&e.ybar),
            self.cfg,
            self.t_max,
        )?;
        p.picard = self.picard;
        Ok(p)
    }

    /// `max_t |f(t,0)|` over `times`.
    pub fn check_vanishes_at_origin(&self, times: &[f64], tol: f64) -> ReportEntry {
        let zero = vec![0.0; self.dim()];
        let worst = times
            .iter()
            .map(|&t| norm(&self.pert.value(t, &zero)))
            .fold(0.0, f64::max);
        ReportEntry::at_most(
            "stability.translated.origin",
            anchors::TRANSLATED,
            worst,
            tol,
        )
        .with_note(format!("{} sample times", times.len()))
    }

    /// Decay time `T(ε,c)` measured on trajectories from `t₀ ∈ t0s`, against
    /// `|y(t)| ≤ K|y(t₀)|e^{−(α−Kγ)(t−t₀)}`, which gives `T ≤ ln(Kc/ε)/(α−Kγ)`.
    /// Initial states are the directions of `ics` scaled to `0.999·c`.
    pub fn uas_empirical(
        &self,
        eps_levels: &[f64],
        c_levels: &[f64],
        ics: &[Vec<f64>],
        t0s: &[f64],
    ) -> Vec<ReportEntry> {
        let zero = vec![0.0; self.dim()];
        if t0s.iter().any(|&t| norm(&self.pert.value(t, &zero)) > 0.0) {
            return vec![ReportEntry::failure(
                "stability.uas",
                anchors::UAS_EMPIRICAL,
                "f(t,0) ≠ 0: translate to the equilibrium first",
            )];
        }
        let (k, a, g) = (self.linear.k(), self.linear.alpha(), self.pert.gamma());
        let rate = a - k * g;
        let mut out = Vec::new();
        for &c in c_levels {
            for &eps in eps_levels {
                let id = format!("stability.uas.T.eps={eps},c={c}");
                let bound = if eps >= c {
                    0.0
                } else {
                    ((k * c / eps).ln() / rate).max(0.0)
                };
                let horizon = bound + 5.0;
                let mut worst = 0.0f64;
                let mut per_t0 = Vec::new();
                let mut failure = None;
                for &t0 in t0s {
                    let mut t_worst = 0.0f64;
                    for ic in ics {
                        let r = norm(ic);
                        if r == 0.0 {
                            continue;
                        }
                        let y0: Vec<f64> = ic.iter().map(|v| v * 0.999 * c / r).collect();
                        match ode::integrate(self.rhs(), t0, &y0, t0 + horizon, &self.cfg) {
                            Ok(s) => t_worst = t_worst.max(last_exit(&s, eps) - t0),
                            Err(e) => failure = Some(e),
                        }
                    }
                    per_t0.push(t_worst);
                    worst = worst.max(t_worst);
                }
                out.push(match failure {
                    Some(e) => ReportEntry::failure(id, anchors::UAS_EMPIRICAL, e.to_string()),
                    None => {
                        let spread = per_t0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                            - per_t0.iter().cloned().fold(f64::INFINITY, f64::min);
                        ReportEntry::at_most(id, anchors::UAS_EMPIRICAL, worst, bound + LYAPUNOV_DT)
                            .with_note(format!("T per t₀ {per_t0:?}, spread {spread:.3e}"))
                    }
                });
            }
        }
        out
    }
}

/// Last grid time (spacing `LYAPUNOV_DT`) at which `|y| ≥ eps`, or the start time.
fn last_exit(s: &FlowSample, eps: f64) -> f64 {
    let (t0, t1) = (s.t_start(), s.t_end());
    let n = ((t1 - t0) / LYAPUNOV_DT).ceil() as usize;
    let mut buf = vec![0.0; s.dim()];
    let mut last = t0;
    for i in 0..=n {
        let t = (t0 + i as f64 * LYAPUNOV_DT).min(t1);
        s.eval_into(t, &mut buf);
        if norm(&buf) >= eps {
            last = t;
        }
    }
    last
}

/// The weight `Q(t)` of the quadratic form, with `q⁻I ≤ Q(t) ≤ q⁺I`.
#[derive(Clone)]
pub enum QForm {
    Constant(DMatrix<f64>),
    Custom {
        dim: usize,
        q_minus: f64,
        q_plus: f64,
        f: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
    },
}

impl fmt::Debug for QForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::Custom {
                dim,
                q_minus,
                q_plus,
                ..
            } => f
                .debug_struct("Custom")
                .field("dim", dim)
                .field("q_minus", q_minus)
                .field("q_plus", q_plus)
                .finish_non_exhaustive(),
        }
    }
}

impl QForm {
    pub fn scalar(q: f64, dim: usize) -> Self {
        Self::Constant(DMatrix::identity(dim, dim) * q)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(m) => m.nrows(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Custom { f, .. } => f(t),
        }
    }

    /// `(q⁻, q⁺)`; extreme eigenvalues for a constant form.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Constant(m) => {
                let e = SymmetricEigen::new(m.clone()).eigenvalues;
                (e.min(), e.max())
            }
            Self::Custom {
                q_minus, q_plus, ..
            } => (*q_minus, *q_plus),
        }
    }
}

/// `P(t) = ∫_t^∞ Φ(τ,t)ᵀQ(τ)Φ(τ,t)dτ`, truncated where the UAS bound makes
/// the tail smaller than `tol_tail`, and symmetrised.
pub fn lyapunov_p(
    sys: &LinearSystem,
    q: &QForm,
    t: f64,
    tol_tail: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let n = sys.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.dim(),
        });
    }
    let (q_minus, q_plus) = q.bounds();
    if !(q_minus > 0.0) {
        return Err(Error::CertificateRejected {
            inequality: "q⁻ > 0".into(),
            detail: format!("q⁻ = {q_minus}"),
        });
    }
    let (k, a) = (sys.k(), sys.alpha());
    let t_tail = t + ((k * k * q_plus / (2.0 * a * tol_tail)).ln() / (2.0 * a)).max(0.0);
    let x0 = linalg::flatten(&DMatrix::identity(n, n));
    let coeffs = sys.coefficients();
    let x = ode::integrate(
        |s, x: &[f64], out: &mut [f64]| coeffs.apply_columns(s, x, out),
        t,
        &x0,
        t_tail,
        cfg,
    )?;
    let integral = ode::quad_along(
        &x,
        |s, flat| {
            let xm = linalg::unflatten(n, flat);
            linalg::flatten(&(xm.transpose() * q.at(s) * &xm))
        },
        t,
        t_tail,
        0.1 * tol_tail,
    )?;
    let p = linalg::unflatten(n, &integral);
    Ok((&p + p.transpose()) * 0.5)
}

#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub q: QForm,
    pub q_minus: f64,
    pub q_plus: f64,
    /// `q⁻/(2M)`
    pub p_minus: f64,
    /// `K²q⁺/(2α)`
    pub p_plus: f64,
    /// `q⁻ − 2γp⁺`
    pub decay_margin: f64,
    pub tol_tail: f64,
    sys: LinearSystem,
    cfg: IntegratorConfig,
}

impl LyapunovCertificate {
    pub fn new(sys: &LinearSystem, q: QForm, gamma: f64, cfg: &IntegratorConfig) -> Result<Self> {
        let (q_minus, q_plus) = q.bounds();
        if !(q_minus > 0.0 && q_plus >= q_minus) {
            return Err(Error::CertificateRejected {
                inequality: "0 < q⁻ ≤ q⁺".into(),
                detail: format!("q⁻ = {q_minus}, q⁺ = {q_plus}"),
            });
        }
        let p_minus = q_minus / (2.0 * sys.m());
        let p_plus = sys.k() * sys.k() * q_plus / (2.0 * sys.alpha());
        Ok(Self {
            q,
            q_minus,
            q_plus,
            p_minus,
            p_plus,
            decay_margin: q_minus - 2.0 * gamma * p_plus,
            tol_tail: 1e-10,
            sys: sys.clone(),
            cfg: *cfg,
        })
    }

    pub fn with_tol_tail(mut self, tol_tail: f64) -> Self {
        self.tol_tail = tol_tail;
        self
    }

    pub fn p_at(&self, t: f64) -> Result<DMatrix<f64>> {
        lyapunov_p(&self.sys, &self.q, t, self.tol_tail, &self.cfg)
    }

    /// `P` does not depend on `t` when `A` and `Q` are constant.
    pub fn is_stationary(&self) -> bool {
        self.sys.coefficients().is_autonomous() && self.q.is_constant()
    }

    /// Spectrum of `P(t)` inside `[p⁻ − tol, p⁺ + tol]` at each `t`.
    pub fn check_bounds(&self, ts: &[f64], tol: f64) -> Vec<ReportEntry> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in ts {
            match self.p_at(t) {
                Ok(p) => {
                    let e = SymmetricEigen::new(p).eigenvalues;
                    lo = lo.min(e.min());
                    hi = hi.max(e.max());
                }
                Err(e) => {
                    return vec![ReportEntry::failure(
                        "stability.lyapunov.bounds",
                        anchors::LYAP_BOUNDS,
                        e.to_string(),
                    )]
                }
            }
        }
        vec![
            ReportEntry::at_least(
                "stability.lyapunov.p_min",
                anchors::LYAP_BOUNDS,
                lo,
                self.p_minus - tol,
            ),
            ReportEntry::at_most(
                "stability.lyapunov.p_max",
                anchors::LYAP_BOUNDS,
                hi,
                self.p_plus + tol,
            ),
        ]
    }

    /// `max |Ṗ + AᵀP + PA + Q|` with `Ṗ` from central differences of step `h`.
    pub fn identity_residual(&self, ts: &[f64], h: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for &t in ts {
            let lo = (t - h).max(0.0);
            let hi = t + h;
            let dp = (self.p_at(hi)? - self.p_at(lo)?) / (hi - lo);
            let p = self.p_at(t)?;
            let a = self.sys.a_at(t);
            let r = dp + a.transpose() * &p + &p * a + self.q.at(t);
            worst = worst.max(r.amax());
        }
        Ok(worst)
    }

    pub fn check_identity(&self, ts: &[f64], tol: f64) -> ReportEntry {
        match self.identity_residual(ts, 1e-3) {
            Ok(r) => ReportEntry::at_most(
                "stability.lyapunov.identity",
                anchors::LYAP_IDENTITY,
                r,
                tol,
            ),
            Err(e) => ReportEntry::failure(
                "stability.lyapunov.identity",
                anchors::LYAP_IDENTITY,
                e.to_string(),
            ),
        }
    }

    /// Decrease of `V(t) = y(t)ᵀP(t)y(t)` along trajectories on a grid of
    /// spacing `LYAPUNOV_DT`: `ΔV/Δt ≤ −margin·avg|y|² + tol(1+|y|²)` per
    /// step (the average by Simpson's rule), and `V` nonincreasing within `tol`.
    pub fn derivative_check(&self, trajectories: &[FlowSample], tol: f64) -> Vec<ReportEntry> {
        let mut excess = f64::NEG_INFINITY;
        let mut rise = f64::NEG_INFINITY;
        let stationary = if self.is_stationary() {
            match self.p_at(0.0) {
                Ok(p) => Some(p),
                Err(e) => {
                    return vec![ReportEntry::failure(
                        "stability.lyapunov.decrease",
                        anchors::LYAP_DECREASE,
                        e.to_string(),
                    )]
                }
            }
        } else {
            None
        };
        for s in trajectories {
            let (t0, t1) = s.span();
            let (t0, t1) = (t0.min(t1), t0.max(t1));
            let n = ((t1 - t0) / LYAPUNOV_DT).round().max(1.0) as usize;
            let dt = (t1 - t0) / n as f64;
            let mut prev: Option<(f64, Vec<f64>)> = None;
            for i in 0..=n {
                let t = if i == n { t1 } else { t0 + i as f64 * dt };
                let y = s.eval(t);
                let p = match &stationary {
                    Some(p) => p.clone(),
                    None => match self.p_at(t) {
                        Ok(p) => p,
                        Err(e) => {
                            return vec![ReportEntry::failure(
                                "stability.lyapunov.decrease",
                                anchors::LYAP_DECREASE,
                                e.to_string(),
                            )]
                        }
                    },
                };
                let yv = linalg::to_dvector(&y);
                let v = (yv.transpose() * &p * &yv)[(0, 0)];
                if let Some((v_prev, y_prev)) = prev {
                    let mid = s.eval(t - 0.5 * dt);
                    let sq = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>();
                    let avg = (sq(&y_prev) + 4.0 * sq(&mid) + sq(&y)) / 6.0;
                    let scale = 1.0 + sq(&y_prev);
                    excess = excess.max(((v - v_prev) / dt + self.decay_margin * avg) / scale);
                    rise = rise.max(v - v_prev);
                }
                prev = Some((v, y));
            }
        }
        let note = format!(
            "{} trajectories, margin q⁻ − 2γp⁺ = {:.6}",
            trajectories.len(),
            self.decay_margin
        );
        vec![
            ReportEntry::above(
                "stability.lyapunov.margin",
                anchors::LYAP_MARGIN,
                self.decay_margin,
                0.0,
            ),
            ReportEntry::at_most(
                "stability.lyapunov.decrease",
                anchors::LYAP_DECREASE,
                excess,
                tol,
            )
            .with_note(note.clone()),
            ReportEntry::at_most(
                "stability.lyapunov.monotone",
                anchors::LYAP_MONOTONE,
                rise,
                tol,
            )
            .with_note(note),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::CoefficientMatrix;
    use crate::nonlinear::{Builtin, Perturbation};

    fn scalar(b: Builtin, g: f64, mu: f64) -> ConjugacyProblem {
        let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
        ConjugacyProblem::new(
            lin,
            Perturbation::builtin(b, g, mu, 1).unwrap(),
            IntegratorConfig::default(),
            50.0,
        )
        .unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..=20).map(|i| i as f64).collect()
    }

    #[test]
    fn constant_shift_equilibrium() {
        let p = scalar(Builtin::ConstantShift(vec![0.3]), 0.0, 0.3);
        let e = p.find_equilibrium(&[10.0], &grid(), 1e-8).unwrap();
        let c = e.found().expect("equilibrium");
        assert!((c.ybar[0] - 0.3).abs() <= 1e-10);
    }

    #[test]
    fn jiang_has_no_equilibrium() {
        let p = scalar(Builtin::JiangArctan(0.2), 0.2, std::f64::consts::PI / 5.0);
        let e = p.find_equilibrium(&[0.0], &grid(), 1e-8).unwrap();
        assert!(matches!(e, EquilibriumSearch::NotFound(_)));
        assert!(e.candidate().residual_ode > 1e-3);
    }

    #[test]
    fn origin_for_odd_field() {
        let p = scalar(Builtin::ScaledSin(0.2), 0.2, 0.2);
        let c = p.find_equilibrium(&[0.5], &grid(), 1e-8).unwrap();
        let c = c.found().unwrap();
        assert!(c.ybar[0].abs() <= 1e-12 && c.residual_ode <= 1e-12);
    }

    #[test]
    fn newton_reports_divergence() {
        let r = damped_newton(
            |y| vec![y[0] * y[0] + 1.0],
            |y| Ok(DMatrix::from_element(1, 1, 2.0 * y[0])),
            &[1.0],
            1e-12,
        );
        assert!(matches!(r, Err(Error::NewtonDiverged { .. })));
    }

    #[test]
    fn scalar_lyapunov_matrix_is_one_half() {
        let sys = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
        let p = lyapunov_p(
            &sys,
            &QForm::scalar(1.0, 1),
            3.0,
            1e-10,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!((p[(0, 0)] - 0.5).abs() <= 1e-8, "{p}");
        let cert = LyapunovCertificate::new(
            &sys,
            QForm::scalar(1.0, 1),
            0.2,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!((cert.p_minus, cert.p_plus), (0.5, 0.5));
        assert!((cert.decay_margin - 0.8).abs() < 1e-15);
    }

    #[test]
    fn translation_of_constant_field_vanishes() {
        let p = scalar(Builtin::ConstantShift(vec![0.3]), 0.0, 0.3);
        let c = p.find_equilibrium(&[1.0], &grid(), 1e-8).unwrap();
        let tr = p.translate_system(c.found().unwrap()).unwrap();
        assert_eq!(tr.pert.value(4.0, &[1.7]), vec![0.0]);
        assert!((tr.pert.mu() - 0.6).abs() < 1e-15);
    }
}
