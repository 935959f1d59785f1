//! Verification suites over a loaded [`Scenario`].
//!
//! Each suite is a list of independent checks. They run on the rayon pool
//! and the entries are merged in check-id order, so a report depends only on
//! the scenario text, the seed and the tolerances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conjugacy::{MapKind, MapPath};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::nonlinear::ConjugacyProblem;
use crate::ode::{self, FlowSample};
use crate::report::{anchors, CertificateReport, Environment, ReportEntry};
use crate::scenario::Scenario;
use crate::stability::{EquilibriumSearch, LyapunovCertificate};

/// Quadrature tolerance for the `w*` cross-check.
const W_QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Conjugacy,
    Continuity,
    Smoothness,
    Stability,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Conjugacy,
        Suite::Continuity,
        Suite::Smoothness,
        Suite::Stability,
        Suite::All,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Conjugacy => "conjugacy",
            Suite::Continuity => "continuity",
            Suite::Smoothness => "smoothness",
            Suite::Stability => "stability",
            Suite::All => "all",
        }
    }

    fn includes(&self, other: Suite) -> bool {
        *self == Suite::All || *self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown suite '{s}' (conjugacy, continuity, smoothness, stability, all)"
                ))
            })
    }
}

type Check<'a> = Box<dyn Fn() -> Vec<ReportEntry> + Send + Sync + 'a>;

/// Runs `suite` and returns the merged report, entries sorted by check id.
pub fn run_suite(sc: &Scenario, suite: Suite) -> CertificateReport {
    let mut checks: Vec<Check<'_>> = Vec::new();
    base_checks(sc, &mut checks);
    if suite.includes(Suite::Conjugacy) {
        conjugacy_checks(sc, &mut checks);
    }
    if suite.includes(Suite::Continuity) {
        continuity_checks(sc, &mut checks);
    }
    if suite.includes(Suite::Smoothness) {
        smoothness_checks(sc, &mut checks);
    }
    if suite.includes(Suite::Stability) {
        stability_checks(sc, &mut checks);
    }
    let mut entries: Vec<ReportEntry> = checks.par_iter().flat_map_iter(|c| c()).collect();
    entries.sort_by(|a, b| a.check_id.cmp(&b.check_id));

    let mut report = CertificateReport::new(sc.name.clone(), suite.as_str(), environment(sc));
    report.extend(entries);
    report
}

pub fn environment(sc: &Scenario) -> Environment {
    Environment {
        integrator: sc.problem.cfg,
        tolerances: sc.tolerances,
        seed: sc.seed,
        matrix_norm: "operator 2-norm".into(),
    }
}

fn clip(sc: &Scenario, t: f64) -> f64 {
    t.min(sc.problem.t_max)
}

fn base_checks<'a>(sc: &'a Scenario, checks: &mut Vec<Check<'a>>) {
    checks.push(Box::new(move || sc.certificate.clone()));
    checks.push(Box::new(move || {
        let p = &sc.problem;
        let triples: Vec<(f64, f64, f64)> = [
            (5.0, 1.0, 0.0),
            (10.0, 5.0, 1.0),
            (3.0, 0.0, 2.0),
            (50.0, 10.0, 0.0),
        ]
        .into_iter()
        .filter(|&(t, s, r): &(f64, f64, f64)| t.max(s).max(r) <= p.t_max)
        .collect();
        let pairs: Vec<(f64, f64)> = sc
            .probes
            .times
            .iter()
            .map(|&t| (t, 0.0))
            .chain([(0.0, clip(sc, 5.0))])
            .collect();
        vec![
            p.linear.verify_cocycle(&triples, &p.cfg, sc.tolerances.num),
            p.linear.verify_det(&pairs, &p.cfg),
        ]
    }));
}

// ---------------------------------------------------------------- conjugacy

/// Literal-path and composition-path evaluations of one map at one time.
fn path_group(sc: &Scenario, kind: MapKind, t: f64) -> Vec<ReportEntry> {
    let p = &sc.problem;
    let tol = &sc.tolerances;
    let (name, path_anchor, prox_anchor) = match kind {
        MapKind::H => ("h", anchors::PATH_H, anchors::PROXIMITY_H),
        MapKind::G => ("g", anchors::PATH_G, anchors::PROXIMITY_G),
    };
    let eval = |v: &[f64], path| match kind {
        MapKind::H => p.h_map(t, v, path),
        MapKind::G => p.g_map(t, v, path),
    };
    let path_id = format!("conjugacy.path_{name}.t={t}");
    let prox_id = format!("conjugacy.proximity_{name}.t={t}");
    let mut prox = 0.0f64;
    let mut prox_err = None;
    let mut worst = 0.0f64;
    let mut worst_at = None;
    let mut path_err: Option<(usize, Error)> = None;
    for (i, v) in sc.probes.states.iter().enumerate() {
        let fast = match eval(v, MapPath::FlowComposition) {
            Ok(out) => out,
            Err(e) => {
                prox_err.get_or_insert(e);
                continue;
            }
        };
        prox = prox.max(dist(&fast, v));
        // after the first literal failure the remaining probes of this group are not retried
        if path_err.is_some() {
            continue;
        }
        match eval(v, MapPath::IntegralDefinition) {
            Ok(lit) => {
                let r = dist(&fast, &lit);
                if r > worst || worst_at.is_none() {
                    worst = worst.max(r);
                    worst_at = Some(i);
                }
            }
            Err(e) => path_err = Some((i, e)),
        }
    }
    let n = sc.probes.states.len();
    let path = match path_err {
        Some((i, e)) => ReportEntry::failure(
            path_id,
            path_anchor,
            format!(
                "literal path failed at probe {i}: {e}; {} of {n} probes not evaluated",
                n - i - 1
            ),
        ),
        None => ReportEntry::at_most(path_id, path_anchor, worst, tol.equiv).with_note(format!(
            "{n} probes, worst at {:?}",
            worst_at.map_or(&[][..], |i| &sc.probes.states[i][..])
        )),
    };
    let prox = match prox_err {
        Some(e) => ReportEntry::failure(prox_id, prox_anchor, e.to_string()),
        None => ReportEntry::at_most(prox_id, prox_anchor, prox, p.proximity_bound() + tol.num)
            .with_note(format!("{n} probes, Kμ/α = {:.9}", p.proximity_bound())),
    };
    vec![path, prox]
}

fn solution_mapping_times(horizon: f64) -> Vec<f64> {
    [0.025, 0.05, 0.1, 0.25, 0.5, 1.0]
        .iter()
        .map(|f| f * horizon)
        .collect()
}

fn conjugacy_checks<'a>(sc: &'a Scenario, checks: &mut Vec<Check<'a>>) {
    let p = &sc.problem;
    let tol = sc.tolerances;
    for &t in &sc.probes.times {
        for kind in [MapKind::H, MapKind::G] {
            checks.push(Box::new(move || path_group(sc, kind, t)));
        }
        checks.push(Box::new(move || {
            p.check_bijection(t, &sc.probes.states, tol.inv)
        }));
    }

    let horizon = clip(sc, sc.probes.horizon);
    for (k, xi) in sc.probes.trajectories.iter().enumerate() {
        checks.push(Box::new(move || {
            let ts = solution_mapping_times(horizon);
            let id = |m: &str| format!("conjugacy.conj_{m}.traj={k}");
            let note = format!("τ = 0, ξ = {xi:?}, t ∈ {ts:?}");
            match p.solution_mapping_residuals(0.0, xi, &ts) {
                Ok((h, g)) => vec![
                    ReportEntry::at_most(id("h"), anchors::CONJ_H, h, tol.conj)
                        .with_note(note.clone()),
                    ReportEntry::at_most(id("g"), anchors::CONJ_G, g, tol.conj).with_note(note),
                ],
                Err(e) => vec![ReportEntry::failure(
                    id("h"),
                    anchors::CONJ_H,
                    e.to_string(),
                )],
            }
        }));
    }

    let t_p = clip(sc, 2.0);
    checks.push(Box::new(move || picard_entries(sc, t_p)));

    let states = &sc.probes.states;
    if let Some(xi) = sc.probes.trajectories.first() {
        checks.push(Box::new(move || {
            let id = "conjugacy.contraction";
            match p.contraction_ratio(t_p, t_p, xi, 8, sc.seed, sc.picard.grid_pts) {
                Ok(r) => vec![
                    ReportEntry::at_most(id, anchors::CONTRACTION, r, 1.0 + tol.rel).with_note(
                        format!("sup|Γφ₁−Γφ₂| / (q·sup|φ₁−φ₂|), 8 trials, q = {:.6}", p.q()),
                    ),
                ],
                Err(e) => vec![ReportEntry::failure(
                    id,
                    anchors::CONTRACTION,
                    e.to_string(),
                )],
            }
        }));
        let t_i = clip(sc, 3.0);
        checks.push(Box::new(move || {
            let r = t_i / 2.0;
            let mut out = Vec::new();
            let id = "conjugacy.identity_z";
            out.push(match p.identity_z_residual(t_i, t_i, xi, r, &sc.picard) {
                Ok(v) => ReportEntry::at_most(id, anchors::IDENTITY_Z, v, tol.equiv)
                    .with_note(format!("t = τ = {t_i}, r = {r}, ξ = {xi:?}")),
                Err(e) => ReportEntry::failure(id, anchors::IDENTITY_Z, e.to_string()),
            });
            let id = "conjugacy.identity_w";
            out.push(
                match p.identity_w_residual(t_i, t_i, xi, r, sc.picard.grid_pts) {
                    Ok(v) => ReportEntry::at_most(id, anchors::IDENTITY_W, v, tol.equiv)
                        .with_note(format!("t = τ = {t_i}, r = {r}, ν = {xi:?}")),
                    Err(e) => ReportEntry::failure(id, anchors::IDENTITY_W, e.to_string()),
                },
            );
            out
        }));
        checks.push(Box::new(move || {
            let id = "conjugacy.w_star_quadrature";
            let run = || -> Result<f64> {
                let mut worst = 0.0f64;
                for eta in states.iter().take(4) {
                    let a = p.w_star(t_i, t_i, eta)?;
                    let b = p.w_star_quadrature(t_i, t_i, eta, W_QUAD_TOL)?;
                    worst = worst.max(dist(&a, &b));
                }
                Ok(worst)
            };
            vec![match run() {
                Ok(v) => ReportEntry::at_most(id, anchors::W_STAR, v, tol.equiv)
                    .with_note(format!("ODE route vs adaptive quadrature at t = τ = {t_i}")),
                Err(e) => ReportEntry::failure(id, anchors::W_STAR, e.to_string()),
            }]
        }));
    }
    checks.push(Box::new(move || {
        let samples: Result<Vec<FlowSample>> = sc
            .probes
            .trajectories
            .iter()
            .map(|xi| ode::integrate(p.rhs(), 0.0, xi, horizon, &p.cfg))
            .collect();
        match samples {
            Ok(s) => vec![p.verify_f_along(&s, tol.eps_cert)],
            Err(e) => vec![ReportEntry::failure(
                "nonlinear.f_along",
                anchors::F_BOUND,
                e.to_string(),
            )],
        }
    }));
}

fn picard_entries(sc: &Scenario, t: f64) -> Vec<ReportEntry> {
    let p = &sc.problem;
    let q = p.q();
    let floor = 10.0 * sc.picard.tol_fix;
    let mut ratio = 0.0f64;
    let mut model = 0.0f64;
    let mut iterations = 0usize;
    let mut traces = Vec::new();
    for xi in sc.probes.trajectories.iter().take(3) {
        let z = match p.z_star(t, t, xi, &sc.picard) {
            Ok(z) => z,
            Err(e) => {
                return vec![ReportEntry::failure(
                    "conjugacy.picard.ratio",
                    anchors::PICARD_RATIO,
                    e.to_string(),
                )]
            }
        };
        let d = &z.trace.diffs;
        if let Some(r) = z.trace.max_ratio_above(floor) {
            ratio = ratio.max(r);
        }
        if let Some(&d0) = d.first() {
            for (j, &dj) in d.iter().enumerate().skip(1) {
                if d0 > 0.0 && d[j - 1] > floor {
                    model = model.max(dj / (q.powi(j as i32) / (1.0 - q) * d0));
                }
            }
        }
        iterations = iterations.max(z.trace.iterations());
        traces.push(z.trace.ratios());
    }
    vec![
        ReportEntry::at_most(
            "conjugacy.picard.ratio",
            anchors::PICARD_RATIO,
            ratio,
            q + 0.05,
        )
        .with_note(format!("t = τ = {t}, ratios per start {traces:.4?}")),
        ReportEntry::at_most(
            "conjugacy.picard.error_model",
            anchors::PICARD_ERROR,
            model,
            1.0 + sc.tolerances.rel,
        )
        .with_note("max ‖z_{j+1}−z_j‖ / (q^j/(1−q)·‖z_1−z_0‖)"),
        ReportEntry::info(
            "conjugacy.picard.iterations",
            anchors::Z_STAR,
            iterations as f64,
        ),
    ]
}

// ---------------------------------------------------------------- continuity

type Pairs = Vec<(Vec<f64>, Vec<f64>)>;

/// Pairs with base points in the probe box and separations in `[lo, hi]`.
pub fn random_pairs(n: usize, radius: f64, count: usize, lo: f64, hi: f64, seed: u64) -> Pairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..=radius)).collect();
            let mut dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let r = norm(&dir);
            if r < 1e-12 {
                dir = vec![0.0; n];
                dir[0] = 1.0;
            } else {
                dir.iter_mut().for_each(|v| *v /= r);
            }
            let d = rng.random_range(lo..=hi);
            let b = a.iter().zip(&dir).map(|(x, u)| x + d * u).collect();
            (a, b)
        })
        .collect()
}

fn continuity_checks<'a>(sc: &'a Scenario, checks: &mut Vec<Check<'a>>) {
    let p = &sc.problem;
    let tol = sc.tolerances;
    let n = sc.dim();
    let radius = sc.probe_radius();
    let eps = sc.probes.continuity_eps;
    let t_last = sc.probes.times.iter().cloned().fold(0.0, f64::max);
    checks.push(Box::new(move || {
        let budget = match p.continuity_budget(eps) {
            Ok(b) => b,
            Err(e) => {
                return vec![ReportEntry::failure(
                    "regularity.continuity",
                    anchors::BUDGET,
                    e.to_string(),
                )]
            }
        };
        let pairs = random_pairs(
            n,
            radius,
            sc.probes.pairs,
            0.9 * budget.delta,
            0.9 * budget.delta,
            sc.seed ^ 0xC0,
        );
        let mut ts: Vec<f64> = vec![0.0, 1.0, budget.l, 2.0 * budget.l, t_last];
        ts.iter_mut().for_each(|t| *t = clip(sc, *t));
        p.check_uniform_continuity(eps, &pairs, &ts)
    }));
    let lip = random_pairs(n, radius, 16, 0.01, 1.0, sc.seed ^ 0x11);
    for t in [1.0, 2.0, 5.0] {
        let t = clip(sc, t);
        let lip = lip.clone();
        checks.push(Box::new(
            move || vec![p.check_lipschitz_c(t, &lip, tol.rel)],
        ));
    }
    checks.push(Box::new(move || {
        p.properness_check(clip(sc, 3.0), &[5.0, 10.0, 50.0], 16, sc.seed, tol.num)
    }));
    checks.push(Box::new(move || {
        let t = clip(sc, 5.0);
        let ss: Vec<f64> = [0.0, 0.2, 0.4, 0.8].iter().map(|f| f * t).collect();
        let rs: Vec<f64> = [0.1, 0.3, 0.6].iter().map(|f| f * t).collect();
        let eta = sc
            .probes
            .states
            .first()
            .cloned()
            .unwrap_or_else(|| vec![1.0; n]);
        let pairs_t: Vec<(f64, f64)> = [(1.0, 0.0), (0.0, 1.0), (5.0, 2.0), (2.0, 5.0)]
            .into_iter()
            .filter(|&(a, b): &(f64, f64)| a.max(b) <= p.t_max)
            .collect();
        vec![
            p.verify_gronwall(t, &lip, &ss, tol.rel),
            p.verify_chain(0.0, &eta, &rs, t, tol.num),
            p.linear.verify_linear_ci(&pairs_t, &lip, &p.cfg, tol.rel),
        ]
    }));
}

// ---------------------------------------------------------------- smoothness

fn smoothness_checks<'a>(sc: &'a Scenario, checks: &mut Vec<Check<'a>>) {
    let p = &sc.problem;
    let tol = sc.tolerances;
    if sc.constants.r == 0 || sc.probes.jacobian.is_empty() {
        checks.push(Box::new(move || {
            vec![ReportEntry::info(
                "regularity.jacobian.skipped",
                anchors::JACOBIAN_G,
                sc.constants.r as f64,
            )
            .with_note("r = 0 or no Jacobian probes declared")]
        }));
        return;
    }
    checks.push(Box::new(move || {
        p.check_jacobians(&sc.probes.jacobian, tol.jac, tol.inv)
    }));
    if sc.constants.r >= 2 {
        checks.push(Box::new(move || {
            let id = "regularity.hessian_symmetry";
            let mut worst = 0.0f64;
            for (t, eta) in sc.probes.jacobian.iter().take(4) {
                match p.hessian_asymmetry(*t, eta) {
                    Ok(v) => worst = worst.max(v),
                    Err(e) => {
                        return vec![ReportEntry::failure(
                            id,
                            anchors::HESSIAN_SYMMETRY,
                            e.to_string(),
                        )]
                    }
                }
            }
            vec![ReportEntry::at_most(
                id,
                anchors::HESSIAN_SYMMETRY,
                worst,
                tol.jac,
            )]
        }));
    }
}

// ---------------------------------------------------------------- stability

/// Validation grid for equilibrium candidates.
pub fn equilibrium_grid(t_max: f64) -> Vec<f64> {
    let hi = t_max.min(20.0);
    (0..=40).map(|i| hi * i as f64 / 40.0).collect()
}

fn stability_checks<'a>(sc: &'a Scenario, checks: &mut Vec<Check<'a>>) {
    let p = &sc.problem;
    let tol = sc.tolerances;
    checks.push(Box::new(move || equilibrium_entries(sc)));
    checks.push(Box::new(move || {
        let cert = match LyapunovCertificate::new(&p.linear, sc.q.clone(), p.pert.gamma(), &p.cfg) {
            Ok(c) => c,
            Err(e) => {
                return vec![ReportEntry::failure(
                    "stability.lyapunov.bounds",
                    anchors::LYAP_BOUNDS,
                    e.to_string(),
                )]
            }
        };
        let mut out = cert.check_bounds(&[0.0, clip(sc, 1.0), clip(sc, 5.0)], tol.lyap);
        // 1e-5 at the default τ_lyap
        out.push(cert.check_identity(&[0.5, clip(sc, 1.0), clip(sc, 5.0)], 10.0 * tol.lyap));
        out
    }));
}

/// The problem in coordinates where the origin is the equilibrium, if there is one.
pub fn origin_problem(sc: &Scenario) -> Result<Option<ConjugacyProblem>> {
    let p = &sc.problem;
    let zero = vec![0.0; sc.dim()];
    let grid = equilibrium_grid(p.t_max);
    if grid.iter().all(|&t| norm(&p.pert.value(t, &zero)) == 0.0) {
        return Ok(Some(p.clone()));
    }
    match p.find_equilibrium(&zero, &grid, sc.tolerances.eq)? {
        EquilibriumSearch::Found(c) => Ok(Some(p.translate_system(&c)?)),
        EquilibriumSearch::NotFound(_) => Ok(None),
    }
}

fn equilibrium_entries(sc: &Scenario) -> Vec<ReportEntry> {
    let p = &sc.problem;
    let tol = sc.tolerances;
    let n = sc.dim();
    let grid = equilibrium_grid(p.t_max);
    let search = match p.find_equilibrium(&vec![0.0; n], &grid, tol.eq) {
        Ok(s) => s,
        Err(e) => {
            return vec![ReportEntry::failure(
                "stability.equilibrium.search",
                anchors::EQUILIBRIUM,
                e.to_string(),
            )]
        }
    };
    let c = match search {
        EquilibriumSearch::NotFound(c) => {
            return vec![ReportEntry::info(
                "stability.equilibrium.search",
                anchors::EQUILIBRIUM,
                c.residual_ode,
            )
            .with_note(format!(
                "no equilibrium: the per-time root {:?} fails validation on [0, {}]",
                c.ybar,
                grid.last().unwrap()
            ))]
        }
        EquilibriumSearch::Found(c) => c,
    };
    let mut out = vec![ReportEntry::info(
        "stability.equilibrium.search",
        anchors::EQUILIBRIUM,
        c.residual_ode,
    )
    .with_note(format!("found ȳ = {:?}", c.ybar))];
    out.extend(p.check_equilibrium(&c, tol.eq, tol.num));

    let mut worst: Option<ReportEntry> = None;
    for g in [10.0, -10.0] {
        let guess = vec![g; n];
        let e = match p.find_equilibrium(&guess, &grid, tol.eq) {
            Ok(EquilibriumSearch::Found(e)) => p.check_uniqueness(&c, &e, tol.eq),
            Ok(EquilibriumSearch::NotFound(e)) => ReportEntry::failure(
                "stability.equilibrium.unique",
                anchors::EQUILIBRIUM_UNIQUE,
                format!("restart from {guess:?} rejected candidate {:?}", e.ybar),
            ),
            Err(e) => ReportEntry::failure(
                "stability.equilibrium.unique",
                anchors::EQUILIBRIUM_UNIQUE,
                e.to_string(),
            ),
        };
        let replace = match &worst {
            None => true,
            Some(w) => w.pass && (!e.pass || e.measured > w.measured),
        };
        if replace {
            worst = Some(e);
        }
    }
    out.extend(worst.map(|w| w.with_note("restarts from ±10·1")));

    let ts: Vec<f64> = [1.0, 5.0, 10.0, 20.0]
        .into_iter()
        .filter(|&t| t <= p.t_max)
        .collect();
    out.extend(p.equilibrium_limits(&c, &ts, tol.num));

    let tp = match p.translate_system(&c) {
        Ok(tp) => tp,
        Err(e) => {
            out.push(ReportEntry::failure(
                "stability.translated.g_at_zero",
                anchors::TRANSLATED,
                e.to_string(),
            ));
            return out;
        }
    };
    let times: Vec<f64> = (0..64).map(|i| p.t_max * i as f64 / 63.0).collect();
    out.push(tp.check_vanishes_at_origin(&times, tol.num));
    out.extend(origin_dynamics(sc, &tp));
    out
}

/// UAS decay times and Lyapunov decrease for a problem with `f(t,0) = 0`.
fn origin_dynamics(sc: &Scenario, tp: &ConjugacyProblem) -> Vec<ReportEntry> {
    let tol = sc.tolerances;
    let t0s: Vec<f64> = [0.0, 2.0, 5.0]
        .into_iter()
        .filter(|&t| t < tp.t_max)
        .collect();
    let mut out = tp.uas_empirical(&[1e-3], &[2.0], &sc.probes.trajectories, &t0s);
    let cert = match LyapunovCertificate::new(&tp.linear, sc.q.clone(), tp.pert.gamma(), &tp.cfg) {
        Ok(c) => c,
        Err(e) => {
            out.push(ReportEntry::failure(
                "stability.lyapunov.decrease",
                anchors::LYAP_DECREASE,
                e.to_string(),
            ));
            return out;
        }
    };
    let horizon = clip(sc, sc.probes.horizon).min(10.0);
    let starts = spread_states(&sc.probes.states, 8);
    let samples: Result<Vec<FlowSample>> = starts
        .iter()
        .map(|y0| ode::integrate(tp.rhs(), 0.0, y0, horizon, &tp.cfg))
        .collect();
    match samples {
        Ok(s) => out.extend(cert.derivative_check(&s, tol.lyap)),
        Err(e) => out.push(ReportEntry::failure(
            "stability.lyapunov.decrease",
            anchors::LYAP_DECREASE,
            e.to_string(),
        )),
    }
    out
}

fn spread_states(states: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    if states.len() <= k {
        return states.to_vec();
    }
    (0..k)
        .map(|i| states[i * (states.len() - 1) / (k - 1)].clone())
        .collect()
}
