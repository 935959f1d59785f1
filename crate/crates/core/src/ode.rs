//! Adaptive Dormand–Prince 5(4) integration with dense output, and adaptive
//! Simpson quadrature.
//!
//! Every other module runs on top of these two primitives. Backward
//! integration (`t1 < t0`) is carried out by reversing time in the
//! right-hand side, so there is a single stepping loop.

use crate::error::{Error, Result};

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; a non-positive value selects it automatically.
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 0.0,
            h_max: 0.5,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0 && self.atol > 0.0 && self.h_max > 0.0 && self.max_steps > 0;
        if ok && self.rtol.is_finite() && self.atol.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "integrator config requires rtol, atol, h_max, max_steps > 0 (got {self:?})"
            )))
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Shampine's free 4th-order interpolant).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output trajectory produced by [`integrate`].
///
/// Nodes are stored in the order they were reached, so `times()` is strictly
/// increasing for forward integration and strictly decreasing for backward
/// integration. Each interval carries five coefficient vectors of the
/// continuous extension.
#[derive(Debug, Clone)]
pub struct FlowSample {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    coeffs: Vec<f64>,
}

impl FlowSample {
    /// A sample consisting of a single node.
    pub fn point(t: f64, x: &[f64]) -> Self {
        Self {
            dim: x.len(),
            times: vec![t],
            states: x.to_vec(),
            coeffs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Closed interval covered by the sample, as `(lo, hi)`.
    pub fn span(&self) -> (f64, f64) {
        let (a, b) = (self.t_start(), self.t_end());
        (a.min(b), a.max(b))
    }

    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    fn slack(&self) -> f64 {
        let (lo, hi) = self.span();
        1e-12 * (1.0 + lo.abs().max(hi.abs()))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.span();
        let s = self.slack();
        t >= lo - s && t <= hi + s
    }

    /// Evaluates the interpolant at `t`, or `None` outside the span.
    pub fn try_eval_into(&self, t: f64, out: &mut [f64]) -> Option<()> {
        if !self.contains(t) {
            return None;
        }
        let n = self.dim;
        if self.len() == 1 {
            out.copy_from_slice(self.state(0));
            return Some(());
        }
        let ascending = self.t_end() > self.t_start();
        // first index whose time is strictly past t in integration order
        let k = if ascending {
            self.times.partition_point(|&s| s <= t)
        } else {
            self.times.partition_point(|&s| s >= t)
        };
        if k > 0 && self.times[k - 1] == t {
            out.copy_from_slice(self.state(k - 1));
            return Some(());
        }
        let i = k.clamp(1, self.len() - 1) - 1;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let theta = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let c = &self.coeffs[i * 5 * n..(i + 1) * 5 * n];
        for j in 0..n {
            let (r1, r2, r3, r4, r5) = (c[j], c[n + j], c[2 * n + j], c[3 * n + j], c[4 * n + j]);
            out[j] = r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
        }
        Some(())
    }

    /// Evaluates the interpolant at `t`.
    ///
    /// # Panics
    /// If `t` lies outside the sampled span.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.try_eval_into(t, out).is_none() {
            let (lo, hi) = self.span();
            panic!("t = {t} outside sampled span [{lo}, {hi}]");
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }
}

/// A solution through `(tau, x_tau)` covering an interval that may extend on
/// both sides of `tau`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    tau: f64,
    parts: Vec<FlowSample>,
}

impl Trajectory {
    /// Integrates from `tau` down to `lo` and up to `hi` (whichever lie on the
    /// other side of `tau`).
    pub fn through<F>(
        rhs: F,
        tau: f64,
        x_tau: &[f64],
        lo: f64,
        hi: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Self>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let mut parts = Vec::with_capacity(2);
        if lo < tau {
            parts.push(integrate(&rhs, tau, x_tau, lo, cfg)?);
        }
        if hi > tau {
            parts.push(integrate(&rhs, tau, x_tau, hi, cfg)?);
        }
        if parts.is_empty() {
            parts.push(FlowSample::point(tau, x_tau));
        }
        Ok(Self { tau, parts })
    }

    pub fn anchor(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn parts(&self) -> &[FlowSample] {
        &self.parts
    }

    pub fn span(&self) -> (f64, f64) {
        self.parts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                let (lo, hi) = p.span();
                (a.min(lo), b.max(hi))
            })
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for p in &self.parts {
            if p.try_eval_into(t, out).is_some() {
                return;
            }
        }
        let (lo, hi) = self.span();
        panic!("t = {t} outside trajectory span [{lo}, {hi}]");
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Accepted step count summed over both directions.
    pub fn steps(&self) -> usize {
        self.parts.iter().map(FlowSample::steps).sum()
    }
}

fn error_norm(y: &[f64], y1: &[f64], e: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let sum: f64 = y
        .iter()
        .zip(y1)
        .zip(e)
        .map(|((a, b), err)| {
            let sk = atol + rtol * a.abs().max(b.abs());
            (err / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(f: &F, y0: &[f64], f0: &[f64], cfg: &IntegratorConfig, span: f64) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let scale = |i: usize, v: &[f64]| cfg.atol + cfg.rtol * v[i].abs();
    let d0 = ((0..n).map(|i| (y0[i] / scale(i, y0)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = ((0..n).map(|i| (f0[i] / scale(i, y0)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(cfg.h_max).min(span);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(h0, &y1, &mut f1);
    let d2 = ((0..n)
        .map(|i| ((f1[i] - f0[i]) / scale(i, y0)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.h_max).min(span)
}

/// Integrates `x' = rhs(t, x)` from `(t0, x0)` to `t1`.
///
/// `t1 < t0` is allowed. The returned sample spans `[t0, t1]` and its terminal
/// state is the solution at `t1` (the last node is placed at `t1` exactly).
pub fn integrate<F>(
    rhs: F,
    t0: f64,
    x0: &[f64],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowSample>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    if !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite integration span [{t0}, {t1}]"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t: t0 });
    }
    let n = x0.len();
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(FlowSample::point(t0, x0));
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let time = |sigma: f64| t0 + dir * sigma;
    // time-reversed right-hand side in the step variable sigma >= 0
    let f = |sigma: f64, u: &[f64], out: &mut [f64]| {
        rhs(time(sigma), u, out);
        if dir < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
    };

    let mut sample = FlowSample {
        dim: n,
        times: vec![t0],
        states: x0.to_vec(),
        coeffs: Vec::new(),
    };

    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; n];
    f(0.0, &y, &mut k1);
    let mut h = if cfg.h_init > 0.0 {
        cfg.h_init.min(cfg.h_max).min(span)
    } else {
        initial_step(&f, &y, &k1, cfg, span)
    };

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut sigma = 0.0;
    let mut attempts = 0usize;
    let mut last_rejected = false;
    loop {
        if attempts >= cfg.max_steps {
            return Err(Error::StepBudgetExceeded {
                max_steps: cfg.max_steps,
                t: time(sigma),
            });
        }
        attempts += 1;

        let remaining = span - sigma;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= f64::EPSILON * sigma.abs().max(1.0) {
            return Err(Error::StepBudgetExceeded {
                max_steps: attempts,
                t: time(sigma),
            });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(sigma + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(sigma + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(sigma + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(sigma + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(sigma + h, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(sigma + h, &y1, &mut k7);
        for i in 0..n {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }

        let finite = y1.iter().chain(k7.iter()).all(|v| v.is_finite());
        let e = if finite {
            error_norm(&y, &y1, &err, cfg.rtol, cfg.atol)
        } else {
            f64::INFINITY
        };

        if e <= 1.0 {
            // continuous extension coefficients for [sigma, sigma + h]
            let base = sample.coeffs.len();
            sample.coeffs.resize(base + 5 * n, 0.0);
            let c = &mut sample.coeffs[base..];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                c[i] = y[i];
                c[n + i] = ydiff;
                c[2 * n + i] = bspl;
                c[3 * n + i] = ydiff - h * k7[i] - bspl;
                c[4 * n + i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sigma = if last { span } else { sigma + h };
            sample.times.push(if last { t1 } else { time(sigma) });
            sample.states.extend_from_slice(&y1);
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                return Ok(sample);
            }
            let mut fac = if e == 0.0 { 10.0 } else { 0.9 * e.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(cfg.h_max);
            last_rejected = false;
        } else {
            if !finite && h < 1e-12 * span {
                return Err(Error::NonFiniteState { t: time(sigma) });
            }
            let fac = if e.is_finite() {
                (0.9 * e.powf(-0.2)).clamp(0.1, 1.0)
            } else {
                0.1
            };
            h *= fac;
            last_rejected = true;
        }
    }
}

/// Adaptive Simpson quadrature with Richardson correction for vector-valued
/// integrands. Returns the integral over `[a, b]` with estimated error `<= tol`.
pub fn quad<F>(mut integrand: F, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Vec<f64>,
{
    if !(a <= b) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "quad requires a <= b and tol > 0 (got [{a}, {b}], tol {tol})"
        )));
    }
    let fa = integrand(a);
    let dim = fa.len();
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    const INITIAL_PANELS: usize = 8;
    const MAX_DEPTH: u32 = 48;
    const MAX_EVALS: usize = 4_000_000;

    struct Panel {
        a: f64,
        b: f64,
        fa: Vec<f64>,
        fm: Vec<f64>,
        fb: Vec<f64>,
        whole: Vec<f64>,
        depth: u32,
    }

    let simpson = |a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]| -> Vec<f64> {
        let w = (b - a) / 6.0;
        (0..fa.len())
            .map(|i| w * (fa[i] + 4.0 * fm[i] + fb[i]))
            .collect()
    };

    let total = b - a;
    let mut evals = 1usize;
    let mut stack: Vec<Panel> = Vec::new();
    let mut left_f = fa;
    for p in 0..INITIAL_PANELS {
        let pa = a + total * p as f64 / INITIAL_PANELS as f64;
        let pb = if p + 1 == INITIAL_PANELS {
            b
        } else {
            a + total * (p + 1) as f64 / INITIAL_PANELS as f64
        };
        let fm = integrand(0.5 * (pa + pb));
        let fb = integrand(pb);
        evals += 2;
        let whole = simpson(pa, pb, &left_f, &fm, &fb);
        stack.push(Panel {
            a: pa,
            b: pb,
            fa: left_f,
            fm,
            fb: fb.clone(),
            whole,
            depth: 0,
        });
        left_f = fb;
    }
    stack.reverse();

    let mut sum = vec![0.0; dim];
    let mut err_total = 0.0;
    let mut exhausted = false;
    while let Some(panel) = stack.pop() {
        let m = 0.5 * (panel.a + panel.b);
        let flm = integrand(0.5 * (panel.a + m));
        let frm = integrand(0.5 * (m + panel.b));
        evals += 2;
        let left = simpson(panel.a, m, &panel.fa, &flm, &panel.fm);
        let right = simpson(m, panel.b, &panel.fm, &frm, &panel.fb);
        let mut diff = 0.0f64;
        for i in 0..dim {
            diff = diff.max((left[i] + right[i] - panel.whole[i]).abs());
        }
        let local_err = diff / 15.0;
        let local_tol = tol * (panel.b - panel.a) / total;
        let at_limit = panel.depth >= MAX_DEPTH || evals >= MAX_EVALS;
        if local_err <= local_tol || at_limit {
            if local_err > local_tol {
                exhausted = true;
            }
            for i in 0..dim {
                let refined = left[i] + right[i];
                sum[i] += refined + (refined - panel.whole[i]) / 15.0;
            }
            err_total += local_err;
            if !diff.is_finite() {
                exhausted = true;
            }
        } else {
            let depth = panel.depth + 1;
            stack.push(Panel {
                a: m,
                b: panel.b,
                fa: panel.fm.clone(),
                fm: frm,
                fb: panel.fb,
                whole: right,
                depth,
            });
            stack.push(Panel {
                a: panel.a,
                b: m,
                fa: panel.fa,
                fm: flm,
                fb: panel.fm,
                whole: left,
                depth,
            });
        }
    }
    if exhausted || !err_total.is_finite() {
        return Err(Error::ToleranceNotMet {
            a,
            b,
            tol,
            estimate: err_total,
        });
    }
    Ok(sum)
}

/// Scalar convenience wrapper over [`quad`].
pub fn quad_scalar<F>(mut integrand: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    quad(|t| vec![integrand(t)], a, b, tol).map(|v| v[0])
}

/// Integrates a vector quantity along a dense sample over `[a, b]`, sampling
/// only the interpolant.
pub fn quad_along<F>(
    sample: &FlowSample,
    mut integrand: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let mut buf = vec![0.0; sample.dim()];
    quad(
        |t| {
            sample.eval_into(t, &mut buf);
            integrand(t, &buf)
        },
        a,
        b,
        tol,
    )
}
