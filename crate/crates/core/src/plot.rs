//! Long-format CSV (`t,quantity,value,scenario`) for plotting curves over time.

use std::fmt;
use std::str::FromStr;

use crate::conjugacy::MapPath;
use crate::error::{Error, Result};
use crate::linalg::{self, dist};
use crate::ode;
use crate::scenario::Scenario;
use crate::stability::LyapunovCertificate;
use crate::suite::origin_problem;

pub const PLOT_HEADER: &str = "t,quantity,value,scenario";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `θ(t)`
    Theta,
    /// `C(t)`
    C,
    /// `max |H(t,ξ) − ξ|` over the probe states, with the `Kμ/α` line
    Henv,
    /// `V(t) = y(t)ᵀP(t)y(t)` along the first trajectory probe
    V,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Theta => "theta",
            Quantity::C => "C",
            Quantity::Henv => "Henv",
            Quantity::V => "V",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Quantity::Theta, Quantity::C, Quantity::Henv, Quantity::V]
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("unknown quantity '{s}' (theta, C, Henv, V)"))
            })
    }
}

/// `n` uniform times on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub quantity: Quantity,
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl SweepSpec {
    pub fn times(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.t0],
            n => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        self.t1
                    } else {
                        self.t0 + (self.t1 - self.t0) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub t: f64,
    pub quantity: String,
    pub value: f64,
    pub scenario: String,
}

/// Evaluates a sweep. `V` needs the origin to be (or be translatable to) an equilibrium.
pub fn sweep(sc: &Scenario, spec: &SweepSpec) -> Result<Vec<PlotRow>> {
    let p = &sc.problem;
    let ts = spec.times();
    if let Some(&bad) = ts.iter().find(|&&t| !(0.0..=p.t_max).contains(&t)) {
        return Err(Error::InvalidArgument(format!(
            "sweep time {bad} outside [0, {}]",
            p.t_max
        )));
    }
    let row = |t: f64, q: &str, value: f64| PlotRow {
        t,
        quantity: q.to_string(),
        value,
        scenario: sc.name.clone(),
    };
    let mut rows = Vec::new();
    match spec.quantity {
        Quantity::Theta => rows.extend(ts.iter().map(|&t| row(t, "theta", p.theta(t)))),
        Quantity::C => rows.extend(ts.iter().map(|&t| row(t, "C", p.lipschitz_factor_c(t)))),
        Quantity::Henv => {
            for &t in &ts {
                let mut env = 0.0f64;
                for xi in &sc.probes.states {
                    env = env.max(dist(&p.h_map(t, xi, MapPath::FlowComposition)?, xi));
                }
                rows.push(row(t, "Henv", env));
                rows.push(row(t, "Kmu_over_alpha", p.proximity_bound()));
            }
        }
        Quantity::V => {
            if ts.is_empty() {
                return Ok(rows);
            }
            let op = origin_problem(sc)?.ok_or_else(|| {
                Error::InvalidArgument("V needs an equilibrium; this scenario has none".into())
            })?;
            let y0 = sc
                .probes
                .trajectories
                .first()
                .cloned()
                .unwrap_or_else(|| vec![1.0; sc.dim()]);
            let cert =
                LyapunovCertificate::new(&op.linear, sc.q.clone(), op.pert.gamma(), &op.cfg)?;
            let stationary = if cert.is_stationary() {
                Some(cert.p_at(0.0)?)
            } else {
                None
            };
            let (lo, hi) = (spec.t0.min(spec.t1), spec.t0.max(spec.t1));
            let traj = ode::integrate(op.rhs(), 0.0, &y0, hi.max(lo), &op.cfg)?;
            for &t in &ts {
                let p_t = match &stationary {
                    Some(m) => m.clone(),
                    None => cert.p_at(t)?,
                };
                let y = linalg::to_dvector(&traj.eval(t));
                rows.push(row(t, "V", (y.transpose() * p_t * &y)[(0, 0)]));
            }
        }
    }
    Ok(rows)
}

/// Renders rows as CSV; no rows gives the header alone.
pub fn emit_plotdata(rows: &[PlotRow]) -> String {
    let mut out = format!("{PLOT_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.17e},{}\n",
            r.t, r.quantity, r.value, r.scenario
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(emit_plotdata(&[]), format!("{PLOT_HEADER}\n"));
        let s = SweepSpec {
            quantity: Quantity::Theta,
            t0: 0.0,
            t1: 5.0,
            n: 0,
        };
        assert!(s.times().is_empty());
    }

    #[test]
    fn grid_hits_endpoints() {
        let s = SweepSpec {
            quantity: Quantity::C,
            t0: 0.0,
            t1: 5.0,
            n: 101,
        };
        let t = s.times();
        assert_eq!(t.len(), 101);
        assert_eq!(t[100], 5.0);
        assert!((t[50] - 2.5).abs() < 1e-15);
    }
}
