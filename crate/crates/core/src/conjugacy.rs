//! Construction of the conjugating maps `H` and `G`.
//!
//! Each map has two independent evaluation routes:
//!
//! * **integral definition**: `H(t,ξ) = ξ + z*(t;(t,ξ))` where `z*` is the
//!   fixed point of `Γ_(τ,ξ)φ(t) = ∫₀ᵗ Φ(t,s) f(s, x(s,τ,ξ) + φ(s)) ds`,
//!   found by Picard iteration from `z₀ = 0`; and `G(t,η) = η + w*(t;(t,η))`
//!   with `w*(t;(τ,η)) = −∫₀ᵗ Φ(t,s) f(s, y(s,τ,η)) ds`.
//! * **flow composition**: `H(t,ξ) = y(t, 0, x(0,t,ξ))` and
//!   `G(t,η) = Φ(t,0)·y(0,t,η)`.
//!
//! The two agree by variation of parameters; their disagreement is the
//! main consistency oracle of the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::nonlinear::ConjugacyProblem;
use crate::ode::{self, FlowSample, Trajectory};
use crate::report::{anchors, ReportEntry};

/// Stopping rule of the Picard iteration for `z*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// sup-norm tolerance on successive iterates
    pub tol_fix: f64,
    pub max_iter: usize,
    /// uniform nodes on `[0, t]` at which the sup-norm is taken
    pub grid_pts: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol_fix: 1e-10,
            max_iter: 200,
            grid_pts: 257,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol_fix > 0.0 && self.max_iter >= 1 && self.grid_pts >= 2 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid Picard config {self:?}"
            )))
        }
    }
}

/// Successive sup-norm differences `‖z_{j+1} − z_j‖`, starting with `‖z₁ − z₀‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub diffs: Vec<f64>,
}

impl PicardTrace {
    pub fn iterations(&self) -> usize {
        self.diffs.len()
    }

    /// `‖z_{j+1} − z_j‖ / ‖z_j − z_{j−1}‖` for `j ≥ 1`.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// Largest ratio among steps whose previous difference exceeds `floor`.
    /// Differences near the integrator's noise level carry no contraction
    /// information.
    pub fn max_ratio_above(&self, floor: f64) -> Option<f64> {
        self.diffs
            .windows(2)
            .filter(|w| w[0] > floor)
            .map(|w| w[1] / w[0])
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    /// Radii `δ_{j+1} = min{δ_j, ε(1 − q)/(2θ₀*)}` of the inductive
    /// uniform-continuity argument over the iterates, one per trace entry.
    /// `δ₀` is unbounded since `z₀ = 0`.
    pub fn delta_column(&self, eps: f64, theta0_star: f64, q: f64) -> Vec<f64> {
        let step = if theta0_star > 0.0 {
            eps * (1.0 - q) / (2.0 * theta0_star)
        } else {
            f64::INFINITY
        };
        let mut delta = f64::INFINITY;
        self.diffs
            .iter()
            .map(|_| {
                delta = delta.min(step);
                delta
            })
            .collect()
    }
}

/// Fixed point `z*(·;(τ,ξ))` on `[0, t]`.
#[derive(Debug, Clone)]
pub struct ZStar {
    /// `z*(t;(τ,ξ))`
    pub value: Vec<f64>,
    /// dense sample of the final iterate on `[0, t]`
    pub iterate: FlowSample,
    pub trace: PicardTrace,
}

impl ZStar {
    pub fn at(&self, s: f64) -> Vec<f64> {
        self.iterate.eval(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapPath {
    FlowComposition,
    IntegralDefinition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    H,
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEvaluation {
    pub t: f64,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub path: MapPath,
    /// `|output − other path|`, when both routes were evaluated
    pub residual_vs_other_path: Option<f64>,
}

fn uniform_grid(t: f64, pts: usize) -> Vec<f64> {
    (0..pts)
        .map(|k| {
            if k + 1 == pts {
                t
            } else {
                t * k as f64 / (pts - 1) as f64
            }
        })
        .collect()
}

fn sup_diff(a: &FlowSample, b: Option<&FlowSample>, grid: &[f64]) -> f64 {
    let n = a.dim();
    let mut va = vec![0.0; n];
    let mut vb = vec![0.0; n];
    grid.iter()
        .map(|&s| {
            a.eval_into(s, &mut va);
            match b {
                Some(b) => {
                    b.eval_into(s, &mut vb);
                    dist(&va, &vb)
                }
                None => norm(&va),
            }
        })
        .fold(0.0, f64::max)
}

impl ConjugacyProblem {
    /// `Γφ` on `[0, t_end]` for the linear trajectory `x`: the solution of
    /// `z' = A(s)z + f(s, x(s) + φ(s))`, `z(0) = 0`.
    pub fn gamma_apply<P>(&self, x: &Trajectory, t_end: f64, phi: P) -> Result<FlowSample>
    where
        P: Fn(f64, &mut [f64]),
    {
        let n = self.dim();
        if t_end == 0.0 {
            return Ok(FlowSample::point(0.0, &vec![0.0; n]));
        }
        let a = self.linear.coefficients();
        let rhs = |s: f64, z: &[f64], out: &mut [f64]| {
            let mut arg = vec![0.0; n];
            let mut shift = vec![0.0; n];
            x.eval_into(s, &mut arg);
            phi(s, &mut shift);
            arg.iter_mut().zip(&shift).for_each(|(a, b)| *a += b);
            let mut fv = vec![0.0; n];
            self.pert.eval(s, &arg, &mut fv);
            a.apply(s, z, out);
            out.iter_mut().zip(&fv).for_each(|(o, v)| *o += v);
        };
        ode::integrate(rhs, 0.0, &vec![0.0; n], t_end, &self.cfg)
    }

    /// Picard iteration for `z*(·;(τ,ξ))` on `[0, t]`, from `z₀ = 0`.
    pub fn z_star(&self, t: f64, tau: f64, xi: &[f64], pc: &PicardConfig) -> Result<ZStar> {
        self.check_state(xi)?;
        self.check_time("t", t)?;
        self.check_time("τ", tau)?;
        pc.validate()?;
        let x = self.linear.trajectory(tau, xi, 0.0, t, &self.cfg)?;
        self.z_star_along(&x, t, pc)
    }

    fn z_star_along(&self, x: &Trajectory, t: f64, pc: &PicardConfig) -> Result<ZStar> {
        let n = self.dim();
        let grid = uniform_grid(t, pc.grid_pts);
        let mut current = self.gamma_apply(x, t, |_, out| out.iter_mut().for_each(|v| *v = 0.0))?;
        let mut diffs = vec![sup_diff(&current, None, &grid)];
        while *diffs.last().unwrap() > pc.tol_fix {
            if diffs.len() >= pc.max_iter {
                return Err(Error::NoConvergence {
                    iterations: diffs.len(),
                    last_diff: *diffs.last().unwrap(),
                });
            }
            let prev = current;
            current = self.gamma_apply(x, t, |s, out| prev.eval_into(s, out))?;
            diffs.push(sup_diff(&current, Some(&prev), &grid));
        }
        let mut value = vec![0.0; n];
        current.eval_into(t, &mut value);
        Ok(ZStar {
            value,
            iterate: current,
            trace: PicardTrace { diffs },
        })
    }

    /// `w*(t;(τ,η))` from `w' = A(t)w − f(t, y(t,τ,η))`, `w(0) = 0`.
    pub fn w_star(&self, t: f64, tau: f64, eta: &[f64]) -> Result<Vec<f64>> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        self.check_time("τ", tau)?;
        let y = self.trajectory_y(tau, eta, 0.0, t)?;
        Ok(self.w_star_sample(&y, t)?.terminal().to_vec())
    }

    /// Dense `s ↦ w*(s;(τ,η))` on `[0, t]` along a perturbed trajectory.
    pub fn w_star_sample(&self, y: &Trajectory, t: f64) -> Result<FlowSample> {
        let n = self.dim();
        if t == 0.0 {
            return Ok(FlowSample::point(0.0, &vec![0.0; n]));
        }
        let a = self.linear.coefficients();
        let rhs = |s: f64, w: &[f64], out: &mut [f64]| {
            let mut ys = vec![0.0; n];
            let mut fv = vec![0.0; n];
            y.eval_into(s, &mut ys);
            self.pert.eval(s, &ys, &mut fv);
            a.apply(s, w, out);
            out.iter_mut().zip(&fv).for_each(|(o, v)| *o -= v);
        };
        ode::integrate(rhs, 0.0, &vec![0.0; n], t, &self.cfg)
    }

    /// `w*(t;(τ,η))` by adaptive quadrature of `−∫₀ᵗ Φ(t,s) f(s, y(s,τ,η)) ds`,
    /// with `Φ(t,·)` taken from the adjoint equation.
    pub fn w_star_quadrature(&self, t: f64, tau: f64, eta: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        self.check_time("τ", tau)?;
        let n = self.dim();
        if t == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let y = self.trajectory_y(tau, eta, 0.0, t)?;
        let phi_row = self.linear.transition_row_sample(t, 0.0, &self.cfg)?;
        let mut phi = vec![0.0; n * n];
        let mut ys = vec![0.0; n];
        let mut fv = vec![0.0; n];
        ode::quad(
            |s| {
                phi_row.eval_into(s, &mut phi);
                y.eval_into(s, &mut ys);
                self.pert.eval(s, &ys, &mut fv);
                (0..n)
                    .map(|i| -(0..n).map(|k| phi[k * n + i] * fv[k]).sum::<f64>())
                    .collect()
            },
            0.0,
            t,
            tol,
        )
    }

    /// `H(t,ξ)` along the requested path.
    pub fn h_map(&self, t: f64, xi: &[f64], path: MapPath) -> Result<Vec<f64>> {
        self.check_state(xi)?;
        self.check_time("t", t)?;
        if t == 0.0 {
            return Ok(xi.to_vec());
        }
        match path {
            MapPath::FlowComposition => {
                let phi = self.linear.transition(0.0, t, &self.cfg)?;
                let x0 = linalg::mat_vec(&phi, xi);
                Ok(self.flow_y(t, 0.0, &x0)?.0)
            }
            MapPath::IntegralDefinition => {
                let z = self.z_star(t, t, xi, &self.picard)?;
                Ok(xi.iter().zip(&z.value).map(|(a, b)| a + b).collect())
            }
        }
    }

    /// `G(t,η)` along the requested path.
    pub fn g_map(&self, t: f64, eta: &[f64], path: MapPath) -> Result<Vec<f64>> {
        self.check_state(eta)?;
        self.check_time("t", t)?;
        if t == 0.0 {
            return Ok(eta.to_vec());
        }
        match path {
            MapPath::FlowComposition => {
                let (y0, _) = self.flow_y(0.0, t, eta)?;
                let phi = self.linear.transition(t, 0.0, &self.cfg)?;
                Ok(linalg::mat_vec(&phi, &y0))
            }
            MapPath::IntegralDefinition => {
                let w = self.w_star(t, t, eta)?;
                Ok(eta.iter().zip(&w).map(|(a, b)| a + b).collect())
            }
        }
    }

    /// Evaluates `kind` along both paths; the output is the flow-composition value.
    pub fn map_both(&self, kind: MapKind, t: f64, v: &[f64]) -> Result<MapEvaluation> {
        let eval = |path| match kind {
            MapKind::H => self.h_map(t, v, path),
            MapKind::G => self.g_map(t, v, path),
        };
        let fast = eval(MapPath::FlowComposition)?;
        let literal = eval(MapPath::IntegralDefinition)?;
        Ok(MapEvaluation {
            t,
            input: v.to_vec(),
            residual_vs_other_path: Some(dist(&fast, &literal)),
            output: fast,
            path: MapPath::FlowComposition,
        })
    }

    /// Round trips `H(t,G(t,η)) = η` and `G(t,H(t,ξ)) = ξ` over the samples.
    pub fn check_bijection(&self, t: f64, samples: &[Vec<f64>], tol: f64) -> Vec<ReportEntry> {
        let mut hg = 0.0f64;
        let mut gh = 0.0f64;
        for s in samples {
            let r = (|| -> Result<(f64, f64)> {
                let g = self.g_map(t, s, MapPath::FlowComposition)?;
                let hg = self.h_map(t, &g, MapPath::FlowComposition)?;
                let h = self.h_map(t, s, MapPath::FlowComposition)?;
                let gh = self.g_map(t, &h, MapPath::FlowComposition)?;
                Ok((dist(&hg, s), dist(&gh, s)))
            })();
            match r {
                Ok((a, b)) => {
                    hg = hg.max(a);
                    gh = gh.max(b);
                }
                Err(e) => {
                    return vec![ReportEntry::failure(
                        format!("conjugacy.bijection.t={t}"),
                        anchors::ROUND_TRIP_HG,
                        e.to_string(),
                    )]
                }
            }
        }
        let note = format!("{} samples at t = {t}", samples.len());
        vec![
            ReportEntry::at_most(
                format!("conjugacy.round_trip_hg.t={t}"),
                anchors::ROUND_TRIP_HG,
                hg,
                tol,
            )
            .with_note(note.clone()),
            ReportEntry::at_most(
                format!("conjugacy.round_trip_gh.t={t}"),
                anchors::ROUND_TRIP_GH,
                gh,
                tol,
            )
            .with_note(note),
        ]
    }

    /// `H[t, x(t,τ,ξ)] = y(t,τ,H(τ,ξ))` and `G[t, y(t,τ,ξ)] = Φ(t,τ)G(τ,ξ)`
    /// at each `t` in `ts`; returns the worst residual of each identity.
    pub fn solution_mapping_residuals(
        &self,
        tau: f64,
        xi: &[f64],
        ts: &[f64],
    ) -> Result<(f64, f64)> {
        let h_tau = self.h_map(tau, xi, MapPath::FlowComposition)?;
        let g_tau = self.g_map(tau, xi, MapPath::FlowComposition)?;
        let mut worst_h = 0.0f64;
        let mut worst_g = 0.0f64;
        for &t in ts {
            let x_t = self.linear.flow(t, tau, xi, &self.cfg)?;
            let lhs = self.h_map(t, &x_t, MapPath::FlowComposition)?;
            let (rhs, _) = self.flow_y(t, tau, &h_tau)?;
            worst_h = worst_h.max(dist(&lhs, &rhs));

            let (y_t, _) = self.flow_y(t, tau, xi)?;
            let lhs = self.g_map(t, &y_t, MapPath::FlowComposition)?;
            let rhs = linalg::mat_vec(&self.linear.transition(t, tau, &self.cfg)?, &g_tau);
            worst_g = worst_g.max(dist(&lhs, &rhs));
        }
        Ok((worst_h, worst_g))
    }

    pub fn check_solution_mapping(
        &self,
        tau: f64,
        xi: &[f64],
        ts: &[f64],
        tol: f64,
    ) -> Vec<ReportEntry> {
        let id = format!("τ={tau},ξ={xi:?}");
        match self.solution_mapping_residuals(tau, xi, ts) {
            Ok((h, g)) => vec![
                ReportEntry::at_most(format!("conjugacy.conj_h.{id}"), anchors::CONJ_H, h, tol),
                ReportEntry::at_most(format!("conjugacy.conj_g.{id}"), anchors::CONJ_G, g, tol),
            ],
            Err(e) => vec![ReportEntry::failure(
                format!("conjugacy.conj.{id}"),
                anchors::CONJ_H,
                e.to_string(),
            )],
        }
    }

    /// `sup|Γφ₁ − Γφ₂| / (q·sup|φ₁ − φ₂|)` for random piecewise-linear `φ`
    /// with values in `[−3, 3]ⁿ`; the worst ratio over `trials`.
    pub fn contraction_ratio(
        &self,
        t: f64,
        tau: f64,
        xi: &[f64],
        trials: usize,
        seed: u64,
        grid_pts: usize,
    ) -> Result<f64> {
        let n = self.dim();
        let q = self.q();
        let x = self.linear.trajectory(tau, xi, 0.0, t, &self.cfg)?;
        let grid = uniform_grid(t, grid_pts);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let knots = 9usize;
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let mut draw = || -> Vec<Vec<f64>> {
                (0..knots)
                    .map(|_| (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect())
                    .collect()
            };
            let (v1, v2) = (draw(), draw());
            let pl = |vals: &Vec<Vec<f64>>, s: f64, out: &mut [f64]| {
                let u = if t > 0.0 {
                    (s / t).clamp(0.0, 1.0) * (knots - 1) as f64
                } else {
                    0.0
                };
                let i = (u.floor() as usize).min(knots - 2);
                let w = u - i as f64;
                for k in 0..n {
                    out[k] = (1.0 - w) * vals[i][k] + w * vals[i + 1][k];
                }
            };
            let g1 = self.gamma_apply(&x, t, |s, out| pl(&v1, s, out))?;
            let g2 = self.gamma_apply(&x, t, |s, out| pl(&v2, s, out))?;
            let lhs = sup_diff(&g1, Some(&g2), &grid);
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            let rhs = grid
                .iter()
                .map(|&s| {
                    pl(&v1, s, &mut a);
                    pl(&v2, s, &mut b);
                    dist(&a, &b)
                })
                .fold(0.0, f64::max);
            if q > 0.0 && rhs > 0.0 {
                worst = worst.max(lhs / (q * rhs));
            } else if lhs > 0.0 {
                worst = f64::INFINITY;
            }
        }
        Ok(worst)
    }

    /// `max_s |z*(s;(τ,ξ)) − z*(s;(r, x(r,τ,ξ)))|` over a uniform grid on `[0, t]`.
    pub fn identity_z_residual(
        &self,
        t: f64,
        tau: f64,
        xi: &[f64],
        r: f64,
        pc: &PicardConfig,
    ) -> Result<f64> {
        let a = self.z_star(t, tau, xi, pc)?;
        let moved = self.linear.flow(r, tau, xi, &self.cfg)?;
        let b = self.z_star(t, r, &moved, pc)?;
        Ok(sup_diff(
            &a.iterate,
            Some(&b.iterate),
            &uniform_grid(t, pc.grid_pts),
        ))
    }

    /// `max_s |w*(s;(τ,ν)) − w*(s;(r, y(r,τ,ν)))|` over a uniform grid on `[0, t]`.
    pub fn identity_w_residual(
        &self,
        t: f64,
        tau: f64,
        nu: &[f64],
        r: f64,
        grid_pts: usize,
    ) -> Result<f64> {
        let ya = self.trajectory_y(tau, nu, 0.0, t)?;
        let a = self.w_star_sample(&ya, t)?;
        let (moved, _) = self.flow_y(r, tau, nu)?;
        let yb = self.trajectory_y(r, &moved, 0.0, t)?;
        let b = self.w_star_sample(&yb, t)?;
        Ok(sup_diff(&a, Some(&b), &uniform_grid(t, grid_pts)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{CoefficientMatrix, LinearSystem};
    use crate::nonlinear::{Builtin, Perturbation};
    use crate::ode::IntegratorConfig;

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
    fn zero_perturbation_gives_identity_maps() {
        let p = scalar(Perturbation::zero());
        assert_eq!(p.w_star(3.0, 1.0, &[0.4]).unwrap(), vec![0.0]);
        let z = p
            .z_star(2.0, 2.0, &[0.4], &PicardConfig::default())
            .unwrap();
        assert_eq!(z.value, vec![0.0]);
        assert_eq!(z.trace.iterations(), 1);
        assert_eq!(
            p.h_map(4.0, &[0.7], MapPath::IntegralDefinition).unwrap(),
            vec![0.7]
        );
        let h = p.h_map(4.0, &[0.7], MapPath::FlowComposition).unwrap();
        assert!((h[0] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn t_zero_is_identity() {
        let p = jiang();
        assert_eq!(
            p.h_map(0.0, &[1.3], MapPath::FlowComposition).unwrap(),
            vec![1.3]
        );
        assert_eq!(
            p.g_map(0.0, &[1.3], MapPath::IntegralDefinition).unwrap(),
            vec![1.3]
        );
    }

    #[test]
    fn w_star_routes_agree() {
        let p = jiang();
        let ivp = p.w_star(3.0, 3.0, &[0.5]).unwrap();
        let q = p.w_star_quadrature(3.0, 3.0, &[0.5], 1e-11).unwrap();
        assert!((ivp[0] - q[0]).abs() <= 1e-8, "{ivp:?} {q:?}");
    }

    #[test]
    fn paths_agree_on_jiang() {
        let p = jiang();
        for t in [1.0, 4.0, 10.0] {
            let h = p.map_both(MapKind::H, t, &[0.7]).unwrap();
            let g = p.map_both(MapKind::G, t, &[0.7]).unwrap();
            assert!(h.residual_vs_other_path.unwrap() <= 1e-7, "{h:?}");
            assert!(g.residual_vs_other_path.unwrap() <= 1e-7, "{g:?}");
        }
    }

    #[test]
    fn picard_contracts_on_jiang() {
        let p = jiang();
        let z = p
            .z_star(2.0, 2.0, &[0.0], &PicardConfig::default())
            .unwrap();
        for r in z.trace.ratios() {
            assert!(r <= 0.25, "{:?}", z.trace);
        }
    }

    #[test]
    fn no_convergence_is_reported() {
        let p = jiang();
        let pc = PicardConfig {
            max_iter: 2,
            ..PicardConfig::default()
        };
        assert!(matches!(
            p.z_star(3.0, 3.0, &[0.5], &pc),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn delta_column_is_nonincreasing() {
        let trace = PicardTrace {
            diffs: vec![1.0, 0.1, 0.01],
        };
        let col = trace.delta_column(0.1, 0.2, 0.2);
        assert_eq!(col.len(), 3);
        assert!((col[0] - 0.1 * 0.8 / 0.4).abs() < 1e-15);
        assert!(col.windows(2).all(|w| w[1] <= w[0]));
    }
}
