//! One report shape for all run modes, rendered as JSON or CSV.
//!
//! Rendering is deliberately hand-rolled: fixed key order and a fixed float
//! format (`{:.16e}`) make reports byte-identical across runs with the same
//! seed. Wall-clock timing never enters the report body for the same reason.

use super::exec::{AssertionRecord, RunReport};
use super::sweep::SweepOutcome;
use crate::protocols::{ProtocolReport, StageReport};

#[derive(Clone, Debug)]
pub struct ReportBranch {
    pub label: String,
    pub probability: f64,
    pub correction: Option<String>,
    pub fidelity: Option<f64>,
    pub statement: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub branches: Vec<ReportBranch>,
    pub assertions: Vec<AssertionRecord>,
    pub success_probability: f64,
    pub violations: usize,
}

impl Report {
    pub fn from_run(run: &RunReport) -> Report {
        Report {
            scenario: run.scenario.clone(),
            seed: run.seed,
            stages: Vec::new(),
            branches: run
                .branches
                .iter()
                .map(|b| ReportBranch {
                    label: b.label.clone(),
                    probability: b.probability,
                    correction: None,
                    fidelity: None,
                    statement: Some(b.statement),
                })
                .collect(),
            assertions: run.assertions.clone(),
            success_probability: run.success_probability,
            violations: run.violations,
        }
    }

    pub fn from_protocol(protocol: &ProtocolReport, seed: u64) -> Report {
        Report {
            scenario: protocol.protocol.clone(),
            seed,
            stages: protocol.stages.clone(),
            branches: protocol
                .branches
                .iter()
                .map(|b| ReportBranch {
                    label: b.label.clone(),
                    probability: b.probability,
                    correction: b.correction.clone(),
                    fidelity: Some(b.fidelity),
                    statement: None,
                })
                .collect(),
            assertions: Vec::new(),
            success_probability: protocol.success_probability,
            violations: 0,
        }
    }

    pub fn from_sweep(name: &str, sweep: &SweepOutcome, seed: u64) -> Report {
        let samples = sweep.samples.max(1) as f64;
        Report {
            scenario: name.to_string(),
            seed,
            stages: Vec::new(),
            branches: Vec::new(),
            assertions: Vec::new(),
            success_probability: (sweep.samples - sweep.violations) as f64 / samples,
            violations: sweep.violations,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"scenario\": {},\n", json_string(&self.scenario)));
        out.push_str(&format!("  \"seed\": {},\n", self.seed));

        out.push_str("  \"stages\": [");
        for (i, stage) in self.stages.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n    {{\"label\": {}, \"particle_entropy\": {}, \"geometric\": {}, \"mode_entropies\": {{",
                json_string(&stage.label),
                json_float(stage.particle_entropy),
                json_float(stage.geometric)
            ));
            for (j, (name, value)) in stage.mode_entropies.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{}: {}", json_string(name), json_float(*value)));
            }
            out.push_str("}}");
        }
        out.push_str(if self.stages.is_empty() { "],\n" } else { "\n  ],\n" });

        out.push_str("  \"branches\": [");
        for (i, branch) in self.branches.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n    {{\"label\": {}, \"probability\": {}, \"correction\": {}, \"fidelity\": {}, \"statement\": {}}}",
                json_string(&branch.label),
                json_float(branch.probability),
                branch.correction.as_deref().map_or("null".to_string(), json_string),
                branch.fidelity.map_or("null".to_string(), json_float),
                branch.statement.map_or("null".to_string(), |s| s.to_string())
            ));
        }
        out.push_str(if self.branches.is_empty() { "],\n" } else { "\n  ],\n" });

        out.push_str("  \"assertions\": [");
        for (i, a) in self.assertions.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n    {{\"statement\": {}, \"kind\": {}, \"expected\": {}, \"actual\": {}, \"tol\": {}, \"pass\": {}}}",
                a.statement,
                json_string(&a.kind),
                json_float(a.expected),
                json_float(a.actual),
                json_float(a.tol),
                a.pass
            ));
        }
        out.push_str(if self.assertions.is_empty() { "],\n" } else { "\n  ],\n" });

        out.push_str(&format!(
            "  \"success_probability\": {},\n",
            json_float(self.success_probability)
        ));
        out.push_str(&format!("  \"violations\": {},\n", self.violations));
        out.push_str("  \"timing_ms\": 0\n}\n");
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        let mut row = |section: &str, key: &str, value: String| {
            out.push_str(&format!("{section},{},{}\n", csv_field(key), csv_field(&value)));
        };
        row("meta", "scenario", self.scenario.clone());
        row("meta", "seed", self.seed.to_string());
        for stage in &self.stages {
            row("stage", &format!("{}.particle_entropy", stage.label), json_float(stage.particle_entropy));
            row("stage", &format!("{}.geometric", stage.label), json_float(stage.geometric));
            for (name, value) in &stage.mode_entropies {
                row("stage", &format!("{}.mode_entropy.{name}", stage.label), json_float(*value));
            }
        }
        for branch in &self.branches {
            row("branch", &format!("{}.probability", branch.label), json_float(branch.probability));
            if let Some(correction) = &branch.correction {
                row("branch", &format!("{}.correction", branch.label), correction.clone());
            }
            if let Some(fidelity) = branch.fidelity {
                row("branch", &format!("{}.fidelity", branch.label), json_float(fidelity));
            }
        }
        for a in &self.assertions {
            row(
                "assertion",
                &format!("{}.{}", a.statement, a.kind),
                format!("expected={};actual={};tol={};pass={}",
                    json_float(a.expected), json_float(a.actual), json_float(a.tol), a.pass),
            );
        }
        row("meta", "success_probability", json_float(self.success_probability));
        row("meta", "violations", self.violations.to_string());
        row("meta", "timing_ms", "0".to_string());
        out
    }
}

fn json_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn json_string(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            scenario: "demo".to_string(),
            seed: 7,
            stages: vec![StageReport {
                label: "combined".to_string(),
                particle_entropy: 0.0,
                geometric: 0.0,
                mode_entropies: vec![("A".to_string(), 0.75)],
            }],
            branches: vec![ReportBranch {
                label: "a=1".to_string(),
                probability: 0.25,
                correction: Some("pi_pulse".to_string()),
                fidelity: Some(1.0),
                statement: None,
            }],
            assertions: vec![AssertionRecord {
                statement: 4,
                kind: "prob".to_string(),
                expected: 0.25,
                actual: 0.25,
                tol: 1e-9,
                pass: true,
            }],
            success_probability: 0.5,
            violations: 0,
        }
    }

    #[test]
    fn json_has_fixed_keys_and_pinned_timing() {
        let json = sample().to_json();
        for key in [
            "\"scenario\"", "\"seed\"", "\"stages\"", "\"branches\"", "\"assertions\"",
            "\"success_probability\"", "\"violations\"", "\"timing_ms\": 0",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        assert!(json.contains("2.5000000000000000e-1"));
    }

    #[test]
    fn json_is_deterministic() {
        assert_eq!(sample().to_json(), sample().to_json());
    }

    #[test]
    fn csv_mirrors_numeric_content() {
        let csv = sample().to_csv();
        assert!(csv.contains("stage,combined.mode_entropy.A,7.5000000000000000e-1"));
        assert!(csv.contains("meta,success_probability,5.0000000000000000e-1"));
        assert!(csv.contains("meta,timing_ms,0"));
    }

    #[test]
    fn sweep_conversion_reports_pass_fraction() {
        let sweep = SweepOutcome { samples: 200, violations: 0, min_slack: 0.01 };
        let report = Report::from_sweep("sweep_inequality", &sweep, 3);
        assert_eq!(report.success_probability, 1.0);
        assert!(report.all_pass());
    }
}
