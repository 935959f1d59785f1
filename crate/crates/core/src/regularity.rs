//! Quantitative continuity and differentiability of the conjugacy.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conjugacy::MapPath;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::nonlinear::ConjugacyProblem;
use crate::report::{anchors, ReportEntry};

/// Exponents smaller than this in magnitude take the removable-singularity branch.
pub const SINGULAR_EXPONENT: f64 = 1e-12;
pub const JACOBIAN_FD_STEP: f64 = 1e-5;
pub const HESSIAN_FD_STEP: f64 = 1e-3;

/// `(e^{ct} − 1)/c`, continuous across `c = 0`.
fn expm1_over(c: f64, t: f64) -> f64 {
    if c.abs() < SINGULAR_EXPONENT {
        t
    } else {
        (c * t).exp_m1() / c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityBudget {
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub theta_star: f64,
    pub theta0_star: f64,
    pub delta: f64,
    /// true when `ε ≥ 4μK/α` forced `L = 0`
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEvaluation {
    pub t: f64,
    pub eta: Vec<f64>,
    pub j: DMatrix<f64>,
    pub det_j: f64,
    /// max entrywise deviation from central differences of `G`
    pub fd_residual: f64,
}

impl JacobianEvaluation {
    /// `fd_residual` relative to the largest entry of `J` (at least 1).
    pub fn fd_relative(&self) -> f64 {
        self.fd_residual / self.j.amax().max(1.0)
    }
}

/// Central-difference Jacobian of `g` at `x`, step `h·(1 + |x|)`.
pub fn central_jacobian<F>(mut g: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let step = h * (1.0 + norm(x));
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        xp[k] = x[k] + step;
        let plus = g(&xp)?;
        xp[k] = x[k] - step;
        let minus = g(&xp)?;
        xp[k] = x[k];
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

impl ConjugacyProblem {
    /// `θ(t) = 1 + Kγ(e^{(M+γ−α)t} − 1)/(M+γ−α)`.
    pub fn theta(&self, t: f64) -> f64 {
        let (k, m, a, g) = self.constants();
        1.0 + k * g * expm1_over(m + g - a, t)
    }

    /// `θ₀(t) = Kγ(e^{(M−α)t} − 1)/(M−α)` for `α < M`, and `Kγ` when `α = M`.
    pub fn theta0(&self, t: f64) -> f64 {
        let (k, m, a, g) = self.constants();
        if (m - a).abs() < SINGULAR_EXPONENT {
            k * g
        } else {
            k * g * (((m - a) * t).exp_m1() / (m - a))
        }
    }

    /// `C(t) = 1 + Kγ(1 − e^{(M+γ−α)t})/(α−M−γ)`, or `1 + Kγt` when `α = M+γ`.
    pub fn lipschitz_factor_c(&self, t: f64) -> f64 {
        let (k, m, a, g) = self.constants();
        let c = m + g - a;
        if c.abs() < SINGULAR_EXPONENT {
            1.0 + k * g * t
        } else {
            1.0 + k * g * (-(c * t).exp_m1()) / (-c)
        }
    }

    fn constants(&self) -> (f64, f64, f64, f64) {
        (
            self.linear.k(),
            self.linear.m(),
            self.linear.alpha(),
            self.pert.gamma(),
        )
    }

    /// `L(ε) = (1/α)ln(4μK/(αε))`, `θ* = θ(L)`, `θ₀* = θ₀(L)`, `δ = ε/(2θ*)`.
    pub fn continuity_budget(&self, eps: f64) -> Result<ContinuityBudget> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be > 0 (got {eps})")));
        }
        let (k, _, a, _) = self.constants();
        let mu = self.pert.mu();
        let arg = 4.0 * mu * k / (a * eps);
        let clamped = arg <= 1.0;
        let l = if clamped { 0.0 } else { arg.ln() / a };
        let theta_star = self.theta(l);
        Ok(ContinuityBudget {
            eps,
            l,
            theta_star,
            theta0_star: self.theta0(l),
            delta: eps / (2.0 * theta_star),
            clamped,
        })
    }

    /// Confirms `|η−η̄| < δ(ε) ⇒ |G(t,η)−G(t,η̄)| < ε` (and the same for `H`)
    /// on the supplied pairs. Pairs outside the contract are reported separately.
    pub fn check_uniform_continuity(
        &self,
        eps: f64,
        pairs: &[(Vec<f64>, Vec<f64>)],
        ts: &[f64],
    ) -> Vec<ReportEntry> {
        let budget = match self.continuity_budget(eps) {
            Ok(b) => b,
            Err(e) => {
                return vec![ReportEntry::failure(
                    "regularity.continuity",
                    anchors::UNIFORM_CONTINUITY_G,
                    e.to_string(),
                )]
            }
        };
        let inside: Vec<_> = pairs
            .iter()
            .filter(|(a, b)| dist(a, b) < budget.delta)
            .collect();
        let outside = pairs.len() - inside.len();
        let mut out = Vec::new();
        for (kind, anchor) in [
            ("g", anchors::UNIFORM_CONTINUITY_G),
            ("h", anchors::UNIFORM_CONTINUITY_H),
        ] {
            let mut worst = 0.0f64;
            let mut err = None;
            'outer: for &t in ts {
                for (a, b) in &inside {
                    let r = if kind == "g" {
                        self.g_map(t, a, MapPath::FlowComposition).and_then(|ga| {
                            Ok(dist(&ga, &self.g_map(t, b, MapPath::FlowComposition)?))
                        })
                    } else {
                        self.h_map(t, a, MapPath::FlowComposition).and_then(|ha| {
                            Ok(dist(&ha, &self.h_map(t, b, MapPath::FlowComposition)?))
                        })
                    };
                    match r {
                        Ok(d) => worst = worst.max(d),
                        Err(e) => {
                            err = Some(e);
                            break 'outer;
                        }
                    }
                }
            }
            let id = format!("regularity.uniform_continuity_{kind}.eps={eps}");
            let entry = match err {
                Some(e) => ReportEntry::failure(id, anchor, e.to_string()),
                None => ReportEntry::below(id, anchor, worst, eps).with_note(format!(
                    "δ = {:.6e}, {} pairs × {} times, {} pairs outside |η−η̄| < δ skipped",
                    budget.delta,
                    inside.len(),
                    ts.len(),
                    outside
                )),
            };
            out.push(entry);
        }
        out.push(ReportEntry::info(
            format!("regularity.budget.L.eps={eps}"),
            anchors::BUDGET,
            budget.l,
        ));
        out.push(ReportEntry::info(
            format!("regularity.budget.theta_star.eps={eps}"),
            anchors::BUDGET,
            budget.theta_star,
        ));
        out.push(ReportEntry::info(
            format!("regularity.budget.delta.eps={eps}"),
            anchors::BUDGET,
            budget.delta,
        ));
        out
    }

    /// Sampled `|G(t,η)−G(t,η̄)| ≤ C(t)|η−η̄|`; reports the worst ratio against `1 + rel`.
    pub fn check_lipschitz_c(
        &self,
        t: f64,
        pairs: &[(Vec<f64>, Vec<f64>)],
        rel: f64,
    ) -> ReportEntry {
        let c = self.lipschitz_factor_c(t);
        let mut worst = 0.0f64;
        for (a, b) in pairs {
            let d = dist(a, b);
            if d == 0.0 {
                continue;
            }
            let r = self
                .g_map(t, a, MapPath::FlowComposition)
                .and_then(|ga| Ok(dist(&ga, &self.g_map(t, b, MapPath::FlowComposition)?)));
            match r {
                Ok(dg) => worst = worst.max(dg / (c * d)),
                Err(e) => {
                    return ReportEntry::failure(
                        format!("regularity.lipschitz_c.t={t}"),
                        anchors::LIPSCHITZ_C,
                        e.to_string(),
                    )
                }
            }
        }
        ReportEntry::at_most(
            format!("regularity.lipschitz_c.t={t}"),
            anchors::LIPSCHITZ_C,
            worst,
            1.0 + rel,
        )
        .with_note(format!("C(t) = {c:.9}"))
    }

    /// `∂G/∂η(t,η) = Φ(t,0)·∂y(0,t,η)/∂η`, with its determinant and a
    /// central-difference cross-check.
    pub fn jacobian_g(&self, t: f64, eta: &[f64]) -> Result<JacobianEvaluation> {
        let j = self.jacobian_g_matrix(t, eta)?;
        let fd = central_jacobian(
            |v| self.g_map(t, v, MapPath::FlowComposition),
            eta,
            JACOBIAN_FD_STEP,
        )?;
        Ok(JacobianEvaluation {
            t,
            eta: eta.to_vec(),
            det_j: j.determinant(),
            fd_residual: linalg::max_abs_diff(&j, &fd),
            j,
        })
    }

    /// `∂G/∂η(t,η)` without the finite-difference check.
    pub fn jacobian_g_matrix(&self, t: f64, eta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        if !self.pert.jacobian_available() {
            return Err(Error::MissingJacobian);
        }
        let n = self.dim();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let phi = self.linear.transition(t, 0.0, &self.cfg)?;
        Ok(phi * self.variational_y(0.0, t, eta)?)
    }

    /// `∂H/∂ξ(t,ξ)` as the inverse of `∂G/∂η` at `H(t,ξ)`.
    pub fn jacobian_h(&self, t: f64, xi: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.h_map(t, xi, MapPath::FlowComposition)?;
        let jg = self.jacobian_g_matrix(t, &h)?;
        jg.try_inverse().ok_or_else(|| Error::CertificateRejected {
            inequality: "det ∂G/∂η ≠ 0".into(),
            detail: format!("singular Jacobian at t = {t}"),
        })
    }

    /// Jacobian checks at each `(t, η)`: FD agreement, `det > 0`, and
    /// `∂H/∂ξ(t,G(t,η))·∂G/∂η(t,η) = I`, plus the FD check of `∂H/∂ξ`.
    pub fn check_jacobians(
        &self,
        points: &[(f64, Vec<f64>)],
        tol_jac: f64,
        tol_inv: f64,
    ) -> Vec<ReportEntry> {
        let mut fd_rel = 0.0f64;
        let mut det_min = f64::INFINITY;
        let mut inv = 0.0f64;
        let mut h_rel = 0.0f64;
        for (t, eta) in points {
            let r = (|| -> Result<(f64, f64, f64, f64)> {
                let jg = self.jacobian_g(*t, eta)?;
                let g = self.g_map(*t, eta, MapPath::FlowComposition)?;
                let jh = self.jacobian_h(*t, &g)?;
                let prod = &jh * &jg.j;
                let n = prod.nrows();
                let inv_res = linalg::max_abs_diff(&prod, &DMatrix::identity(n, n));
                let fd_h = central_jacobian(
                    |v| self.h_map(*t, v, MapPath::FlowComposition),
                    &g,
                    JACOBIAN_FD_STEP,
                )?;
                let h_res = linalg::max_abs_diff(&jh, &fd_h) / jh.amax().max(1.0);
                Ok((jg.fd_relative(), jg.det_j, inv_res, h_res))
            })();
            match r {
                Ok((a, d, i, h)) => {
                    fd_rel = fd_rel.max(a);
                    det_min = det_min.min(d);
                    inv = inv.max(i);
                    h_rel = h_rel.max(h);
                }
                Err(e) => {
                    return vec![ReportEntry::failure(
                        format!("regularity.jacobian_g.t={t},η={eta:?}"),
                        anchors::JACOBIAN_G,
                        e.to_string(),
                    )]
                }
            }
        }
        let note = format!("{} points", points.len());
        vec![
            ReportEntry::at_most(
                "regularity.jacobian_g.fd_relative",
                anchors::JACOBIAN_G,
                fd_rel,
                tol_jac,
            )
            .with_note(note.clone()),
            ReportEntry::above(
                "regularity.jacobian_g.det_min",
                anchors::DET_JACOBIAN,
                det_min,
                0.0,
            )
            .with_note(note.clone()),
            ReportEntry::at_most(
                "regularity.jacobian_h.inverse_product",
                anchors::JACOBIAN_H,
                inv,
                tol_inv,
            )
            .with_note(note.clone()),
            ReportEntry::at_most(
                "regularity.jacobian_h.fd_relative",
                anchors::JACOBIAN_H,
                h_rel,
                tol_jac,
            )
            .with_note(note),
        ]
    }

    /// `max |∂²G_i/∂η_j∂η_k − ∂²G_i/∂η_k∂η_j|` from central differences of
    /// the analytic Jacobian, step `1e-3·(1 + |η|)`.
    pub fn hessian_asymmetry(&self, t: f64, eta: &[f64]) -> Result<f64> {
        let n = self.dim();
        let step = HESSIAN_FD_STEP * (1.0 + norm(eta));
        let mut slices = Vec::with_capacity(n);
        let mut e = eta.to_vec();
        for k in 0..n {
            e[k] = eta[k] + step;
            let plus = self.jacobian_g_matrix(t, &e)?;
            e[k] = eta[k] - step;
            let minus = self.jacobian_g_matrix(t, &e)?;
            e[k] = eta[k];
            slices.push((plus - minus) / (2.0 * step));
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((slices[k][(i, j)] - slices[j][(i, k)]).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Coercivity `min_{|η|=R} |G(t,η)| ≥ R − Kμ/α − tol` on sphere samples.
    pub fn properness_check(
        &self,
        t: f64,
        radii: &[f64],
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> Vec<ReportEntry> {
        let n = self.dim();
        let bound = self.proximity_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs: Vec<Vec<f64>> = match n {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..samples.max(4))
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / samples.max(4) as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            _ => (0..samples.max(2))
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let r = norm(&v).max(1e-300);
                    v.into_iter().map(|x| x / r).collect()
                })
                .collect(),
        };
        radii
            .iter()
            .map(|&r| {
                let id = format!("regularity.properness.t={t},R={r}");
                let mut min = f64::INFINITY;
                for d in &dirs {
                    let eta: Vec<f64> = d.iter().map(|x| x * r).collect();
                    match self.g_map(t, &eta, MapPath::FlowComposition) {
                        Ok(g) => min = min.min(norm(&g)),
                        Err(e) => {
                            return ReportEntry::failure(id, anchors::PROPERNESS, e.to_string())
                        }
                    }
                }
                if r <= bound {
                    ReportEntry::info(id, anchors::PROPERNESS, min)
                        .with_note("R ≤ Kμ/α, bound is vacuous")
                } else {
                    ReportEntry::at_least(id, anchors::PROPERNESS, min, r - bound - tol)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{CoefficientMatrix, LinearSystem};
    use crate::nonlinear::{Builtin, Perturbation};
    use crate::ode::IntegratorConfig;

    fn jiang() -> ConjugacyProblem {
        let lin = LinearSystem::new(CoefficientMatrix::scalar(-1.0), 1.0, 1.0, 1.0).unwrap();
        let f = Perturbation::builtin(
            Builtin::JiangArctan(0.2),
            0.2,
            std::f64::consts::PI / 5.0,
            1,
        )
        .unwrap();
        ConjugacyProblem::new(lin, f, IntegratorConfig::default(), 50.0).unwrap()
    }

    #[test]
    fn moduli_for_jiang_constants() {
        let p = jiang();
        assert!((p.theta(1.0) - 0.2f64.exp()).abs() < 1e-12);
        assert_eq!(p.theta(0.0), 1.0);
        assert_eq!(p.theta0(0.0), 0.2);
        assert_eq!(p.theta0(7.0), 0.2);
        assert!((p.lipschitz_factor_c(2.0) - 1.491_824_697_641_27).abs() < 1e-12);
        assert_eq!(p.lipschitz_factor_c(0.0), 1.0);
    }

    #[test]
    fn budget_for_jiang_constants() {
        let b = jiang().continuity_budget(0.1).unwrap();
        assert!((b.l - 3.224_171_427_529_236).abs() < 1e-12, "{b:?}");
        assert!(
            (b.theta_star - 1.905_671_205_764_494).abs() < 1e-12,
            "{b:?}"
        );
        assert!((b.delta - 0.026_237_474_674_935_65).abs() < 1e-12, "{b:?}");
        let c = jiang().continuity_budget(10.0).unwrap();
        assert!(c.clamped && c.l == 0.0 && c.theta_star == 1.0 && c.delta == 5.0);
    }

    #[test]
    fn equal_exponent_branch_is_the_limit() {
        // α = M + γ is unreachable for a valid certificate; check the limit form only
        for t in [0.5, 3.0, 10.0] {
            assert_eq!(expm1_over(0.0, t), t);
            assert!((expm1_over(1e-7, t) - t).abs() <= 1e-6 * t * t);
        }
    }

    #[test]
    fn jacobian_at_zero_time_is_identity() {
        let j = jiang().jacobian_g(0.0, &[0.7]).unwrap();
        assert_eq!(j.j, DMatrix::identity(1, 1));
    }

    #[test]
    fn jacobian_matches_differences() {
        let j = jiang().jacobian_g(2.0, &[0.4]).unwrap();
        assert!(j.det_j > 0.0);
        assert!(j.fd_relative() <= 1e-4, "{j:?}");
    }
}
