//! Self-verifying diagnostic reports.
//!
//! Every pass/fail flag is stored next to the [`Rule`] that produced it,
//! and the rule carries all of its numbers, so [`DiagnosticReport::verify`]
//! can recompute each flag from the report alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// Absolute slack added to SE-based tolerances, so that zero-variance
/// comparisons are not failed by round-off.
const ROUND_OFF: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// `|observed − expected| ≤ z·se`.
    Within { observed: f64, expected: f64, se: f64, z: f64 },
    /// `observed ≤ bound + z·se`.
    AtMost { observed: f64, bound: f64, se: f64, z: f64 },
    /// `observed == expected`, bit for bit.
    Exactly { observed: f64, expected: f64 },
    /// `values[i+1] < values[i]` for every i.
    StrictlyDecreasing { values: Vec<f64> },
    /// Decreasing, except that up to `max_ties` steps may rise by at most
    /// `tie_z·ses[i+1]`.
    DecreasingWithTies {
        values: Vec<f64>,
        ses: Vec<f64>,
        tie_z: f64,
        max_ties: usize,
    },
}

impl Rule {
    pub fn holds(&self) -> bool {
        match self {
            Rule::Within { observed, expected, se, z } => {
                (observed - expected).abs() <= z * se + ROUND_OFF * expected.abs().max(1.0)
            }
            Rule::AtMost { observed, bound, se, z } => {
                *observed <= bound + z * se + ROUND_OFF * bound.abs().max(1.0)
            }
            Rule::Exactly { observed, expected } => observed == expected,
            Rule::StrictlyDecreasing { values } => values.windows(2).all(|w| w[1] < w[0]),
            Rule::DecreasingWithTies {
                values,
                ses,
                tie_z,
                max_ties,
            } => {
                if values.len() != ses.len() {
                    return false;
                }
                let mut ties = 0;
                for i in 1..values.len() {
                    if values[i] < values[i - 1] {
                        continue;
                    }
                    if values[i] - values[i - 1] > tie_z * ses[i] {
                        return false;
                    }
                    ties += 1;
                }
                ties <= *max_ties
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            Rule::Within { observed, expected, se, z } => {
                format!("|{observed:.6} - {expected:.6}| <= {z}*{se:.3e}")
            }
            Rule::AtMost { observed, bound, se, z } => {
                format!("{observed:.6} <= {bound:.6} + {z}*{se:.3e}")
            }
            Rule::Exactly { observed, expected } => format!("{observed} == {expected}"),
            Rule::StrictlyDecreasing { values } => format!("strictly decreasing {}", fmt_list(values)),
            Rule::DecreasingWithTies {
                values, tie_z, max_ties, ..
            } => format!(
                "decreasing {} (<= {max_ties} tie within {tie_z} SE)",
                fmt_list(values)
            ),
        }
    }
}

fn fmt_list(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{v:.5}")).collect();
    format!("[{}]", inner.join(", "))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub rule: Rule,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, rule: Rule) -> Self {
        let pass = rule.holds();
        Self {
            name: name.into(),
            rule,
            pass,
        }
    }
}

/// Two-sample KS distance between `W_n(t)` and the diffusion marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n: usize,
    pub t: f64,
    pub ks: f64,
    /// Null-distribution SE at these sample sizes.
    pub se: f64,
    /// 1% asymptotic critical value.
    pub critical: f64,
    pub replicates: usize,
    pub reference_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summary {
    Max,
    Median,
    Mean,
}

/// Summary over paths of one proof-condition statistic at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: Condition,
    pub n: usize,
    pub horizon: f64,
    pub theta: Option<f64>,
    pub summary: Summary,
    pub value: f64,
    pub se: Option<f64>,
    pub paths: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    /// `|observed − expected| ≤ z·se`.
    TwoSided,
    /// `observed ≤ expected + z·se`.
    Upper,
}

/// Monte Carlo estimate against a closed-form target or bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub se: f64,
    pub tolerance_se: f64,
    pub sided: Sided,
    pub pass: bool,
}

impl MomentRow {
    pub fn new(label: impl Into<String>, observed: f64, expected: f64, se: f64, tolerance_se: f64, sided: Sided) -> Self {
        let mut row = Self {
            label: label.into(),
            observed,
            expected,
            se,
            tolerance_se,
            sided,
            pass: false,
        };
        row.pass = row.rule().holds();
        row
    }

    pub fn rule(&self) -> Rule {
        match self.sided {
            Sided::TwoSided => Rule::Within {
                observed: self.observed,
                expected: self.expected,
                se: self.se,
                z: self.tolerance_se,
            },
            Sided::Upper => Rule::AtMost {
                observed: self.observed,
                bound: self.expected,
                se: self.se,
                z: self.tolerance_se,
            },
        }
    }

    /// Distance from the target in SE units (signed, observed − expected).
    pub fn z_score(&self) -> f64 {
        if self.se > 0.0 {
            (self.observed - self.expected) / self.se
        } else if self.observed == self.expected {
            0.0
        } else {
            f64::INFINITY.copysign(self.observed - self.expected)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub metadata: BTreeMap<String, String>,
    pub ks_rows: Vec<KsRow>,
    pub condition_rows: Vec<ConditionRow>,
    pub moment_rows: Vec<MomentRow>,
    pub checks: Vec<Check>,
}

impl DiagnosticReport {
    pub fn new(title: &str) -> Self {
        let mut report = Self::default();
        report.meta("report", title);
        report
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_owned(), value.to_string());
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: DiagnosticReport) {
        self.metadata.extend(other.metadata);
        self.ks_rows.extend(other.ks_rows);
        self.condition_rows.extend(other.condition_rows);
        self.moment_rows.extend(other.moment_rows);
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.moment_rows.iter().all(|r| r.pass)
    }

    /// True when every stored flag equals the flag recomputed from the
    /// stored numbers.
    pub fn verify(&self) -> bool {
        self.checks.iter().all(|c| c.pass == c.rule.holds())
            && self.moment_rows.iter().all(|r| r.pass == r.rule().holds())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Plot-ready convergence table with header `n,t,ks,se`.
    pub fn write_ks_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,t,ks,se")?;
        for r in &self.ks_rows {
            writeln!(out, "{},{},{},{}", r.n, r.t, r.ks, r.se)?;
        }
        Ok(())
    }

    /// Aligned-column text for humans.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k:<24} {v}");
        }
        if !self.ks_rows.is_empty() {
            let _ = writeln!(s, "\nmarginal convergence");
            let _ = writeln!(
                s,
                "{:>6} {:>8} {:>10} {:>10} {:>10} {:>9} {:>9}",
                "n", "t", "ks", "se", "crit(1%)", "reps", "ref"
            );
            for r in &self.ks_rows {
                let _ = writeln!(
                    s,
                    "{:>6} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>9} {:>9}",
                    r.n, r.t, r.ks, r.se, r.critical, r.replicates, r.reference_size
                );
            }
        }
        if !self.condition_rows.is_empty() {
            let _ = writeln!(s, "\nproof conditions");
            let _ = writeln!(
                s,
                "{:>4} {:>6} {:>6} {:>8} {:>8} {:>13} {:>11} {:>6}",
                "cond", "n", "T", "theta", "summary", "value", "se", "paths"
            );
            for r in &self.condition_rows {
                let theta = r.theta.map_or("-".to_owned(), |t| format!("{t}"));
                let se = r.se.map_or("-".to_owned(), |v| format!("{v:.4e}"));
                let _ = writeln!(
                    s,
                    "{:>4} {:>6} {:>6} {:>8} {:>8} {:>13.6e} {:>11} {:>6}",
                    format!("{:?}", r.condition).to_lowercase(),
                    r.n,
                    r.horizon,
                    theta,
                    format!("{:?}", r.summary).to_lowercase(),
                    r.value,
                    se,
                    r.paths
                );
            }
        }
        if !self.moment_rows.is_empty() {
            let width = self.moment_rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(5).max(5);
            let _ = writeln!(s, "\nmoment checks");
            let _ = writeln!(
                s,
                "{:<width$} {:>14} {:>14} {:>11} {:>6} {:>5} {:>5}",
                "label", "observed", "expected", "se", "tol", "side", "pass"
            );
            for r in &self.moment_rows {
                let side = match r.sided {
                    Sided::TwoSided => "±",
                    Sided::Upper => "≤",
                };
                let _ = writeln!(
                    s,
                    "{:<width$} {:>14.6} {:>14.6} {:>11.4e} {:>6} {:>5} {:>5}",
                    r.label,
                    r.observed,
                    r.expected,
                    r.se,
                    r.tolerance_se,
                    side,
                    if r.pass { "ok" } else { "FAIL" }
                );
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(s, "\nchecks");
            for c in &self.checks {
                let _ = writeln!(s, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.rule.describe());
            }
        }
        let _ = writeln!(s, "\noverall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        s
    }
}
