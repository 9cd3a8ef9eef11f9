//! Report structures and their table / CSV / JSON renderings.
//!
//! JSON is the lossless format: serializing and re-parsing a report gives
//! back the same struct field-for-field (missing quantities are `null`,
//! never NaN). CSV carries 12 significant digits and always starts with a
//! schema line `# gradnoise-csv v1 kind=<report|curve|trajectory>` so
//! downstream tooling can dispatch on it.

use serde::{Deserialize, Serialize};

pub const CSV_SCHEMA: &str = "gradnoise-csv v1";

pub fn schema_line(kind: &str) -> String {
    format!("# {CSV_SCHEMA} kind={kind}\n")
}

/// 12 significant digits, enough to check the tightest (1e-9) tolerances.
pub fn csv_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_num).unwrap_or_default()
}

fn table_num(x: f64) -> String {
    format!("{x}")
}

fn table_opt(x: Option<f64>) -> String {
    x.map(table_num).unwrap_or_else(|| "-".into())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports contain no NaN");
    s.push('\n');
    s
}

fn kv_table(fields: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (name, value) in fields {
        s.push_str(&format!("{name:<16} {value}\n"));
    }
    s
}

fn kv_csv(fields: &[(&str, String)]) -> String {
    let mut s = schema_line("report");
    s.push_str("field,value\n");
    for (name, value) in fields {
        s.push_str(&format!("{name},{value}\n"));
    }
    s
}

// ---------------------------------------------------------------------------
// Point analyses.

/// Full single-point analysis: stability verdict, rate, robustness indices,
/// the GD lower bound when it applies, and the closed-form vs. H2 residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub mu: f64,
    pub l: f64,
    pub inside: bool,
    pub region: String,
    pub margin: f64,
    pub rho: f64,
    pub j: Option<f64>,
    pub jprime: Option<f64>,
    pub lower_bound: Option<f64>,
    pub h2_residual: Option<f64>,
}

impl AnalyzeReport {
    fn fields(&self, num: fn(f64) -> String, opt: fn(Option<f64>) -> String) -> Vec<(&'static str, String)> {
        vec![
            ("method", self.method.clone()),
            ("alpha", num(self.alpha)),
            ("beta", num(self.beta)),
            ("d", self.d.to_string()),
            ("mu", num(self.mu)),
            ("L", num(self.l)),
            ("inside", self.inside.to_string()),
            ("region", self.region.clone()),
            ("margin", num(self.margin)),
            ("rho", num(self.rho)),
            ("J", opt(self.j)),
            ("Jprime", opt(self.jprime)),
            ("lower_bound", opt(self.lower_bound)),
            ("h2_residual", opt(self.h2_residual)),
        ]
    }

    pub fn to_table(&self) -> String {
        kv_table(&self.fields(table_num, table_opt))
    }

    pub fn to_csv(&self) -> String {
        kv_csv(&self.fields(csv_num, csv_opt))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub l: f64,
    pub inside: bool,
    pub region: String,
    pub margin: f64,
    pub rho: f64,
}

impl StabilityReport {
    fn fields(&self, num: fn(f64) -> String) -> Vec<(&'static str, String)> {
        vec![
            ("method", self.method.clone()),
            ("alpha", num(self.alpha)),
            ("beta", num(self.beta)),
            ("mu", num(self.mu)),
            ("L", num(self.l)),
            ("inside", self.inside.to_string()),
            ("region", self.region.clone()),
            ("margin", num(self.margin)),
            ("rho", num(self.rho)),
        ]
    }

    pub fn to_table(&self) -> String {
        kv_table(&self.fields(table_num))
    }

    pub fn to_csv(&self) -> String {
        kv_csv(&self.fields(csv_num))
    }
}

/// One certificate at a fixed stepsize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub l: f64,
    pub d: usize,
    /// Certified rate (GD: smallest feasible rate; AG: the momentum-curve rate).
    pub rho: f64,
    /// Certified robustness bound over the whole objective class.
    pub bound_r: f64,
    /// Verified minimum eigenvalue of the certificate slack.
    pub slack_min_eig: f64,
}

impl CertifyReport {
    fn fields(&self, num: fn(f64) -> String) -> Vec<(&'static str, String)> {
        vec![
            ("method", self.method.clone()),
            ("alpha", num(self.alpha)),
            ("beta", num(self.beta)),
            ("mu", num(self.mu)),
            ("L", num(self.l)),
            ("d", self.d.to_string()),
            ("rho", num(self.rho)),
            ("bound_R", num(self.bound_r)),
            ("slack_min_eig", num(self.slack_min_eig)),
        ]
    }

    pub fn to_table(&self) -> String {
        kv_table(&self.fields(table_num))
    }

    pub fn to_csv(&self) -> String {
        kv_csv(&self.fields(csv_num))
    }
}

// ---------------------------------------------------------------------------
// Curves.

/// One row of a sweep: the sweep parameter, the achieved (or requested)
/// rate, and the robustness value with its parameters when feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub param: f64,
    pub rho: f64,
    pub j: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// "ok" or "infeasible".
    pub status: String,
}

impl CurvePoint {
    pub fn ok(param: f64, rho: f64, j: f64, alpha: f64, beta: f64) -> Self {
        CurvePoint {
            param,
            rho,
            j: Some(j),
            alpha: Some(alpha),
            beta: Some(beta),
            status: "ok".into(),
        }
    }

    pub fn infeasible(param: f64, rho: f64) -> Self {
        CurvePoint {
            param,
            rho,
            j: None,
            alpha: None,
            beta: None,
            status: "infeasible".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub command: String,
    pub method: String,
    pub provenance: String,
    pub mu: f64,
    pub l: f64,
    pub d: usize,
    pub points: Vec<CurvePoint>,
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = schema_line("curve");
    s.push_str("rho,J,alpha,beta,param\n");
    for p in points {
        let j = if p.status == "ok" {
            csv_opt(p.j)
        } else {
            "INFEASIBLE".into()
        };
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_num(p.rho),
            j,
            csv_opt(p.alpha),
            csv_opt(p.beta),
            csv_num(p.param)
        ));
    }
    s
}

fn curve_table(points: &[CurvePoint]) -> String {
    let mut s = format!(
        "{:>18} {:>22} {:>22} {:>22} {:>22} {:>11}\n",
        "param", "rho", "J", "alpha", "beta", "status"
    );
    for p in points {
        s.push_str(&format!(
            "{:>18} {:>22} {:>22} {:>22} {:>22} {:>11}\n",
            table_num(p.param),
            table_num(p.rho),
            table_opt(p.j),
            table_opt(p.alpha),
            table_opt(p.beta),
            if p.status == "ok" { "ok" } else { "INFEASIBLE" },
        ));
    }
    s
}

impl CurveReport {
    pub fn to_table(&self) -> String {
        let mut s = kv_table(&[
            ("command", self.command.clone()),
            ("method", self.method.clone()),
            ("provenance", self.provenance.clone()),
            ("mu", table_num(self.mu)),
            ("L", table_num(self.l)),
            ("d", self.d.to_string()),
        ]);
        s.push('\n');
        s.push_str(&curve_table(&self.points));
        s
    }

    pub fn to_csv(&self) -> String {
        curve_csv(&self.points)
    }
}

// ---------------------------------------------------------------------------
// GD/AG Pareto comparison.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub mu: f64,
    pub l: f64,
    pub d: usize,
    /// GD Pareto points; `param` is the penalty weight tau.
    pub gd: Vec<CurvePoint>,
    /// Best AG point at each GD rate; `param` is the GD rate used as cap.
    pub ag: Vec<CurvePoint>,
    /// True when every AG point is at least as robust as its GD peer.
    pub ag_dominates: bool,
    /// Largest `J_AG - J_GD` over the matched pairs (negative: AG better
    /// everywhere).
    pub max_j_gap: f64,
}

impl ParetoReport {
    pub fn to_table(&self) -> String {
        let mut s = kv_table(&[
            ("mu", table_num(self.mu)),
            ("L", table_num(self.l)),
            ("d", self.d.to_string()),
            ("ag_dominates", self.ag_dominates.to_string()),
            ("max_j_gap", table_num(self.max_j_gap)),
        ]);
        s.push_str("\ngd pareto curve (param = tau)\n");
        s.push_str(&curve_table(&self.gd));
        s.push_str("\nag at matched rate caps (param = gd rho)\n");
        s.push_str(&curve_table(&self.ag));
        s
    }

    /// CSV keeps the AG rows: their `param` column carries the GD rate cap,
    /// so the GD curve is recoverable by re-running `tradeoff --method gd`.
    pub fn to_csv(&self) -> String {
        curve_csv(&self.ag)
    }
}

// ---------------------------------------------------------------------------
// Simulation.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub objective: String,
    pub d: usize,
    pub sigma: f64,
    pub replicas: usize,
    pub k_max: usize,
    /// Requested burn-in; `null` means the rate-based default.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub jhat: Option<f64>,
    pub jhat_stderr: Option<f64>,
    pub jprime_hat: Option<f64>,
    pub jprime_stderr: Option<f64>,
    pub initial_subopt: Option<f64>,
    pub final_subopt: Option<f64>,
    pub final_dist2: Option<f64>,
}

impl SimulateReport {
    fn fields(&self, num: fn(f64) -> String, opt: fn(Option<f64>) -> String) -> Vec<(&'static str, String)> {
        vec![
            ("method", self.method.clone()),
            ("alpha", num(self.alpha)),
            ("beta", num(self.beta)),
            ("objective", self.objective.clone()),
            ("d", self.d.to_string()),
            ("sigma", num(self.sigma)),
            ("replicas", self.replicas.to_string()),
            ("k_max", self.k_max.to_string()),
            (
                "burn_in",
                self.burn_in.map(|b| b.to_string()).unwrap_or_else(|| "auto".into()),
            ),
            ("seed", self.seed.to_string()),
            ("Jhat", opt(self.jhat)),
            ("Jhat_stderr", opt(self.jhat_stderr)),
            ("Jprime_hat", opt(self.jprime_hat)),
            ("Jprime_stderr", opt(self.jprime_stderr)),
            ("initial_subopt", opt(self.initial_subopt)),
            ("final_subopt", opt(self.final_subopt)),
            ("final_dist2", opt(self.final_dist2)),
        ]
    }

    pub fn to_table(&self) -> String {
        kv_table(&self.fields(table_num, table_opt))
    }

    pub fn to_csv(&self) -> String {
        kv_csv(&self.fields(csv_num, csv_opt))
    }
}

/// Per-replica trajectory export.
pub fn trajectory_csv(rows: &[(usize, usize, f64, f64)]) -> String {
    let mut s = schema_line("trajectory");
    s.push_str("k,replica,subopt,dist2\n");
    for &(k, replica, subopt, dist2) in rows {
        s.push_str(&format!(
            "{k},{replica},{},{}\n",
            csv_num(subopt),
            csv_num(dist2)
        ));
    }
    s
}
