//! Certificate reports: one entry per verified inequality or identity.

use serde::{Deserialize, Serialize};

use crate::ode::IntegratorConfig;
use crate::tolerances::Tolerances;

pub const FORMAT_VERSION: u32 = 1;

/// How `measured` is compared against `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// strict `measured < bound`
    Below,
    /// strict `measured > bound`
    Above,
    /// Recorded for context; always passes.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub check_id: String,
    /// The relation being verified, written as a formula.
    pub anchor: String,
    #[serde(with = "nullable_f64")]
    pub measured: f64,
    #[serde(with = "nullable_f64")]
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

// JSON has no NaN; failed evaluations are written as null and read back as NaN.
mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl ReportEntry {
    fn new(
        check_id: impl Into<String>,
        anchor: &str,
        measured: f64,
        bound: f64,
        relation: Relation,
    ) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= bound,
            Relation::AtLeast => measured >= bound,
            Relation::Below => measured < bound,
            Relation::Above => measured > bound,
            Relation::Info => true,
        };
        Self {
            check_id: check_id.into(),
            anchor: anchor.to_string(),
            measured,
            bound,
            relation,
            pass,
            note: None,
        }
    }

    pub fn at_most(check_id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(check_id, anchor, measured, bound, Relation::AtMost)
    }

    pub fn at_least(check_id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(check_id, anchor, measured, bound, Relation::AtLeast)
    }

    pub fn below(check_id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(check_id, anchor, measured, bound, Relation::Below)
    }

    pub fn above(check_id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(check_id, anchor, measured, bound, Relation::Above)
    }

    pub fn info(check_id: impl Into<String>, anchor: &str, measured: f64) -> Self {
        Self::new(check_id, anchor, measured, f64::NAN, Relation::Info)
    }

    /// A hard failure that has no numeric measurement (e.g. an integrator error).
    pub fn failure(check_id: impl Into<String>, anchor: &str, note: impl Into<String>) -> Self {
        let mut e = Self::new(check_id, anchor, f64::NAN, f64::NAN, Relation::AtMost);
        e.pass = false;
        e.note = Some(note.into());
        e
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Forces a failure, keeping the measurement.
    pub fn failed(mut self, note: impl Into<String>) -> Self {
        self.pass = false;
        self.note = Some(note.into());
        self
    }
}

/// Anchor formulas shared by checks across modules.
pub mod anchors {
    pub const UAS_BOUND: &str = "‖Φ(t,s)‖ ≤ K·exp(−α(t−s)), t ≥ s ≥ 0";
    pub const A_BOUND: &str = "sup‖A(t)‖ = M";
    pub const ALPHA_LE_M: &str = "α ≤ M";
    pub const COCYCLE: &str = "Φ(t,s)Φ(s,r) = Φ(t,r)";
    pub const DET_PHI: &str = "det Φ(t,s) > 0";
    pub const LINEAR_CI: &str = "|x(s,t,ξ) − x(s,t,ξ̄)| ≤ |ξ−ξ̄|·exp(M|t−s|)";
    pub const F_BOUND: &str = "|f(t,y)| ≤ μ";
    pub const F_LIPSCHITZ: &str = "|f(t,y) − f(t,ȳ)| ≤ γ|y−ȳ|";
    pub const DF_FD: &str = "Df(t,y) = ∂f/∂y (finite differences)";
    pub const CONTRACTION_HYP: &str = "Kγ/α < 1";
    pub const GRONWALL: &str = "|y(s,t,η) − y(s,t,η̄)| ≤ |η−η̄|·exp((M+γ)(t−s))";
    pub const FLOW_CHAIN: &str = "y(t,r,y(r,τ,η)) = y(t,τ,η)";
    pub const W_STAR: &str = "w*(t;(τ,η)) = −∫₀ᵗ Φ(t,s)f(s,y(s,τ,η))ds";
    pub const Z_STAR: &str = "z* = Γ_(τ,ξ) z*";
    pub const PICARD_RATIO: &str = "‖z_{j+1}−z_j‖ ≤ (Kγ/α)‖z_j−z_{j−1}‖";
    pub const PICARD_ERROR: &str = "‖z_{j+1}−z_j‖ ≤ q^j/(1−q)·‖z_1−z_0‖";
    pub const CONTRACTION: &str = "‖Γφ₁−Γφ₂‖ ≤ (Kγ/α)‖φ₁−φ₂‖";
    pub const IDENTITY_Z: &str = "z*(t;(τ,ξ)) = z*(t;(r,x(r,τ,ξ)))";
    pub const IDENTITY_W: &str = "w*(t;(τ,ν)) = w*(t;(r,y(r,τ,ν)))";
    pub const PATH_H: &str = "ξ + z*(t;(t,ξ)) = y(t,0,x(0,t,ξ))";
    pub const PATH_G: &str = "η + w*(t;(t,η)) = Φ(t,0)y(0,t,η)";
    pub const CONJ_H: &str = "H[t,x(t,τ,ξ)] = y(t,τ,H(τ,ξ))";
    pub const CONJ_G: &str = "G[t,y(t,τ,η)] = Φ(t,τ)G(τ,η)";
    pub const PROXIMITY_H: &str = "|H(t,ξ)−ξ| ≤ Kμ/α";
    pub const PROXIMITY_G: &str = "|G(t,η)−η| ≤ Kμ/α";
    pub const ROUND_TRIP_HG: &str = "H(t,G(t,η)) = η";
    pub const ROUND_TRIP_GH: &str = "G(t,H(t,ξ)) = ξ";
    pub const THETA: &str = "θ(t) = 1 + Kγ(e^{(M+γ−α)t}−1)/(M+γ−α)";
    pub const THETA0: &str = "θ₀(t) = Kγ(e^{(M−α)t}−1)/(M−α), Kγ if α = M";
    pub const BUDGET: &str = "L(ε) = ln(4μK/(αε))/α, δ(ε) = ε/(2θ*)";
    pub const UNIFORM_CONTINUITY_G: &str = "|η−η̄| < δ(ε) ⇒ |G(t,η)−G(t,η̄)| < ε";
    pub const UNIFORM_CONTINUITY_H: &str = "|ξ−ξ̄| < δ(ε) ⇒ |H(t,ξ)−H(t,ξ̄)| < ε";
    pub const LIPSCHITZ_C: &str = "|G(t,η)−G(t,η̄)| ≤ C(t)|η−η̄|";
    pub const JACOBIAN_G: &str = "∂G/∂η(t,η) = Φ(t,0)·∂y(0,t,η)/∂η";
    pub const DET_JACOBIAN: &str = "det ∂G/∂η(t,η) > 0";
    pub const JACOBIAN_H: &str = "∂H/∂ξ(t,ξ) = [∂G/∂η(t,H(t,ξ))]⁻¹";
    pub const VARIATIONAL: &str = "d/dt ∂y/∂η = (A(t)+Df(t,y))·∂y/∂η";
    pub const HESSIAN_SYMMETRY: &str = "∂²G/∂η_j∂η_k = ∂²G/∂η_k∂η_j";
    pub const PROPERNESS: &str = "min_{|η|=R}|G(t,η)| ≥ R − Kμ/α";
    pub const EQUILIBRIUM: &str = "A(t)ȳ + f(t,ȳ) = 0 for all t ≥ 0";
    pub const EQUILIBRIUM_FPE: &str = "ȳ = Φ(t,0)ȳ + ∫₀ᵗ Φ(t,s)f(s,ȳ)ds";
    pub const EQUILIBRIUM_BALL: &str = "|ȳ| ≤ Kμ/α";
    pub const EQUILIBRIUM_UNIQUE: &str = "at most one equilibrium when Kγ/α < 1";
    pub const G_AT_EQUILIBRIUM: &str = "G(t,ȳ) = Φ(t,0)ȳ";
    pub const H_AT_ZERO: &str = "|H(t,0)−ȳ| ≤ K|ȳ|e^{−αt} + e^{(Kγ−α)t}";
    pub const TRANSLATED: &str = "g(t,z) = f(t,z+ȳ) − f(t,ȳ), g(t,0) = 0";
    pub const UAS_EMPIRICAL: &str = "|y(t₀)| < c ⇒ |y(t)| < ε for t > t₀ + T(ε,c)";
    pub const LYAP_BOUNDS: &str = "p⁻I ≤ P(t) ≤ p⁺I, p⁻ = q⁻/(2M), p⁺ = K²q⁺/(2α)";
    pub const LYAP_IDENTITY: &str = "−Ṗ = AᵀP + PA + Q";
    pub const LYAP_DECREASE: &str = "V̇ ≤ −(q⁻ − 2γp⁺)|y|²";
    pub const LYAP_MONOTONE: &str = "V(t) nonincreasing along trajectories";
    pub const LYAP_MARGIN: &str = "γ < α/K² ⇒ q⁻ − 2γp⁺ > 0";
}

/// Settings that determine a report's content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub integrator: IntegratorConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub matrix_norm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub format_version: u32,
    pub scenario: String,
    pub suite: String,
    pub environment: Environment,
    pub entries: Vec<ReportEntry>,
}

impl CertificateReport {
    pub fn new(
        scenario: impl Into<String>,
        suite: impl Into<String>,
        environment: Environment,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario: scenario.into(),
            suite: suite.into(),
            environment,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, e: ReportEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = ReportEntry>) {
        self.entries.extend(es);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn entry(&self, check_id: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.check_id == check_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,anchor,measured,bound,relation,pass\n");
        for e in &self.entries {
            let relation = match e.relation {
                Relation::AtMost => "at_most",
                Relation::AtLeast => "at_least",
                Relation::Below => "below",
                Relation::Above => "above",
                Relation::Info => "info",
            };
            out.push_str(&format!(
                "{},\"{}\",{:e},{:e},{},{}\n",
                e.check_id,
                e.anchor.replace('"', "\"\""),
                e.measured,
                e.bound,
                relation,
                e.pass
            ));
        }
        out
    }

    /// Fixed-width table for terminal output.
    pub fn to_table(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|e| e.check_id.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let mut out = format!(
            "scenario {} | suite {} | seed {:#x}\n",
            self.scenario, self.suite, self.environment.seed
        );
        out.push_str(&format!(
            "{:<width$}  {:>13}  {:>2}  {:>13}  {}\n",
            "check", "measured", "", "bound", "result"
        ));
        for e in &self.entries {
            let (op, bound) = match e.relation {
                Relation::AtMost => ("<=", format!("{:13.6e}", e.bound)),
                Relation::AtLeast => (">=", format!("{:13.6e}", e.bound)),
                Relation::Below => ("<", format!("{:13.6e}", e.bound)),
                Relation::Above => (">", format!("{:13.6e}", e.bound)),
                Relation::Info => ("", String::from("-")),
            };
            out.push_str(&format!(
                "{:<width$}  {:13.6e}  {:>2}  {:>13}  {}",
                e.check_id,
                e.measured,
                op,
                bound,
                if e.pass { "ok" } else { "FAIL" }
            ));
            if let Some(n) = &e.note {
                out.push_str(&format!("  ({n})"));
            }
            out.push('\n');
        }
        let failed = self.failures().count();
        out.push_str(&format!(
            "{} entries, {} failed\n",
            self.entries.len(),
            failed
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(ReportEntry::at_most("a", "x", 1.0, 1.0).pass);
        assert!(!ReportEntry::at_most("a", "x", f64::NAN, 1.0).pass);
        assert!(ReportEntry::at_least("a", "x", 2.0, 1.0).pass);
        assert!(!ReportEntry::at_least("a", "x", 0.5, 1.0).pass);
        assert!(ReportEntry::info("a", "x", 3.0).pass);
        assert!(!ReportEntry::failure("a", "x", "boom").pass);
    }

    #[test]
    fn failed_entries_survive_json() {
        let mut r = CertificateReport::new(
            "s",
            "all",
            Environment {
                integrator: IntegratorConfig::default(),
                tolerances: Tolerances::default(),
                seed: 1,
                matrix_norm: "spectral".into(),
            },
        );
        r.push(ReportEntry::failure("a", "x", "boom"));
        let back: CertificateReport = serde_json::from_str(&r.to_json()).unwrap();
        assert!(back.entries[0].measured.is_nan());
        assert!(!back.entries[0].pass);
    }
}
