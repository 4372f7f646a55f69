//! Text and JSON renderings of a report.

use num_traits::ToPrimitive;
use serde::Serialize;
use structid_core::analyzer::IdentifiabilityReport;

use crate::analysis::Timings;

#[derive(Debug, Serialize)]
pub struct JsonDiagnostics {
    pub s: usize,
    pub d0: u32,
    #[serde(rename = "D1")]
    pub d1: String,
    #[serde(rename = "D2")]
    pub d2: String,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    #[serde(rename = "E_size")]
    pub e_size: usize,
    #[serde(rename = "Et_size")]
    pub et_size: usize,
    pub retries: usize,
}

#[derive(Debug, Serialize)]
pub struct JsonTimings {
    pub prepare_seconds: f64,
    pub step4_seconds: f64,
    pub per_parameter_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
pub struct JsonReport {
    pub model: String,
    pub p: f64,
    pub seed: String,
    pub method: String,
    pub globally_identifiable: Vec<String>,
    pub locally_only: Vec<String>,
    pub not_locally_identifiable: Vec<String>,
    pub diagnostics: JsonDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<JsonTimings>,
}

pub fn to_json(report: &IdentifiabilityReport, timings: Option<&Timings>) -> JsonReport {
    let d = &report.diagnostics;
    JsonReport {
        model: report.model.clone(),
        p: report.probability.value().to_f64().unwrap_or(f64::NAN),
        seed: d.seed.to_string(),
        method: report.method.name().to_string(),
        globally_identifiable: report.globally_identifiable.clone(),
        locally_only: report.locally_only.clone(),
        not_locally_identifiable: report.not_locally_identifiable.clone(),
        diagnostics: JsonDiagnostics {
            s: d.s,
            d0: d.d0,
            d1: d.d1.to_string(),
            d2: d.d2.to_string(),
            alpha: d.alpha.clone(),
            beta: d.beta.clone(),
            e_size: d.e_size,
            et_size: d.et_size,
            retries: d.retries,
        },
        timings: timings.map(|t| JsonTimings {
            prepare_seconds: t.prepare.as_secs_f64(),
            step4_seconds: t.step4.as_secs_f64(),
            per_parameter_seconds: t
                .per_parameter
                .iter()
                .map(|(n, d)| (n.clone(), d.as_secs_f64()))
                .collect(),
        }),
    }
}

pub fn render_json(report: &IdentifiabilityReport, timings: Option<&Timings>) -> String {
    serde_json::to_string_pretty(&to_json(report, timings)).expect("plain data serializes")
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

pub fn render_text(report: &IdentifiabilityReport, timings: Option<&Timings>) -> String {
    let d = &report.diagnostics;
    let mut out = String::new();
    out.push_str(&format!("model: {}\n", report.model));
    out.push_str(&format!("globally identifiable:     {}\n", set(&report.globally_identifiable)));
    out.push_str(&format!("locally identifiable only: {}\n", set(&report.locally_only)));
    out.push_str(&format!("not locally identifiable:  {}\n", set(&report.not_locally_identifiable)));
    out.push_str(&format!(
        "probability >= {}, method {}, seed {}\n",
        report.probability,
        report.method.name(),
        d.seed
    ));
    out.push_str(&format!(
        "s = {}, d0 = {}, D1 = {}, D2 = {}, alpha = {:?}, beta = {:?}, |E| = {}, |Et| = {}, retries = {}\n",
        d.s, d.d0, d.d1, d.d2, d.alpha, d.beta, d.e_size, d.et_size, d.retries
    ));
    if let Some(t) = timings {
        out.push_str(&format!(
            "time: prepare {:.3}s, checks {:.3}s\n",
            t.prepare.as_secs_f64(),
            t.step4.as_secs_f64()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use std::time::Duration;
    use structid_core::analyzer::{run, AnalysisConfig};

    fn report() -> IdentifiabilityReport {
        let m = parse_model("model demo\nparams: a\nstates:\n  x' = a*x\noutputs:\n  y = x\n").unwrap();
        run(&m, &AnalysisConfig { seed: 3, ..AnalysisConfig::default() }).unwrap()
    }

    #[test]
    fn json_schema_keys() {
        let v: serde_json::Value = serde_json::from_str(&render_json(&report(), None)).unwrap();
        assert_eq!(v["model"], "demo");
        assert_eq!(v["p"], 0.99);
        assert_eq!(v["seed"], "3");
        assert_eq!(v["globally_identifiable"], serde_json::json!(["a", "x*"]));
        assert!(v["diagnostics"]["D1"].as_str().unwrap().parse::<u64>().is_ok());
        assert_eq!(v["diagnostics"]["E_size"], 6);
        assert!(v.get("timings").is_none());
    }

    #[test]
    fn timings_are_optional() {
        let t = Timings {
            prepare: Duration::from_millis(5),
            step4: Duration::from_millis(7),
            per_parameter: vec![("a".into(), Duration::from_millis(3))],
        };
        let v: serde_json::Value = serde_json::from_str(&render_json(&report(), Some(&t))).unwrap();
        assert_eq!(v["timings"]["per_parameter_seconds"][0][0], "a");
        assert!(render_text(&report(), Some(&t)).contains("time: prepare 0.005s, checks 0.007s"));
    }

    #[test]
    fn text_lists_sets() {
        let text = render_text(&report(), None);
        assert!(text.starts_with("model: demo\n"));
        assert!(text.contains("globally identifiable:     {a, x*}\n"));
        assert!(text.contains("not locally identifiable:  {}\n"));
    }
}
