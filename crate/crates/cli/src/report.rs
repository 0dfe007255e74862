use lptype_core::distributed::LoadReport;
use lptype_core::solver::Derived;
use lptype_core::Solution;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::config::RunConfig;

pub const SCHEMA: &str = "lptype-report/1";

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solution,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedRecord {
    /// Net universe size, in decimal; it may exceed 64 bits.
    pub universe: String,
    pub s: f64,
    pub class_step: f64,
    pub mu: f64,
    pub m: usize,
    pub max_iterations: usize,
}

impl From<&Derived> for DerivedRecord {
    fn from(d: &Derived) -> Self {
        DerivedRecord {
            universe: d.universe.to_string(),
            s: d.s,
            class_step: d.class_step,
            mu: d.mu,
            m: d.m,
            max_iterations: d.max_iterations,
        }
    }
}

/// Comparison against a reference optimum. `value` is the reported
/// solution's objective: radius (meb), ‖u‖² (svm), cᵀx (lp), σ (classify,
/// saddle) or ⟨C, X⟩ (sdp).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheck {
    pub method: String,
    pub live_items: usize,
    pub oracle_feasible: bool,
    pub value: Option<f64>,
    pub oracle_value: Option<f64>,
    /// `value − oracle_value`.
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub config: RunConfig,
    pub status: Status,
    pub solution: Solution,
    pub iterations: usize,
    pub successful_iterations: usize,
    pub budget_exhausted: bool,
    pub passes: Option<usize>,
    pub setup_passes: Option<usize>,
    pub rounds: Option<usize>,
    pub peak_words: usize,
    pub derived: DerivedRecord,
    pub center: Option<Vec<f64>>,
    pub r_max: Option<f64>,
    pub load: Option<LoadReport>,
    /// `value / oracle_value`; verify mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or(0.0));
            *v = Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null);
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

impl Report {
    /// Pretty JSON in declaration order with rounded floats.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        round_value(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub fn summary(&self) -> String {
        let what = match &self.solution {
            Solution::Ball { radius, .. } => format!("ball of radius {radius:.6}"),
            Solution::Hyperplane { u, b } => format!("hyperplane u = {u:.6?}, b = {b:.6}"),
            Solution::Infeasible => "infeasible".to_string(),
            Solution::LpPoint { x } => format!("point x = {x:.6?}"),
            Solution::SdpMatrix {
                entries, margin, ..
            } => match margin {
                Some(m) => format!("matrix {entries:.6?}, margin {m:.6}"),
                None => format!("matrix {entries:.6?}"),
            },
        };
        let mut s = format!(
            "{:?} / {:?}: {what}; {} iterations ({} successful)",
            self.config.problem, self.config.model, self.iterations, self.successful_iterations
        )
        .to_lowercase();
        if let Some(p) = self.passes {
            s += &format!(", {p} passes");
        }
        if let Some(r) = self.rounds {
            s += &format!(", {r} rounds");
        }
        s += &format!(", peak {} words", self.peak_words);
        if let Some(l) = &self.load {
            s += &format!(", max round load {} words", l.max_round_load);
        }
        if let Some(r) = self.oracle_ratio {
            s += &format!(", oracle ratio {r:.6}");
        }
        s
    }
}
