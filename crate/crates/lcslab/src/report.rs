//! Report assembly and serialization: exact scalars as term lists with a
//! float rendering, forms as literals, byte-stable JSON, and a plain-text
//! summary. Wall-clock timing is deliberately kept out of the JSON body so
//! identical runs serialize identically.

use serde_json::{json, Map, Value};

use crate::coeff::CoeffFn;
use crate::form::Form;
use crate::manifest::{coeff_to_literal, form_to_literal};
use crate::scalar::{rational_to_string, ExpScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct JobReport {
    pub name: String,
    pub verdict: Verdict,
    pub data: Map<String, Value>,
}

impl JobReport {
    pub fn new(name: &str) -> Self {
        JobReport { name: name.to_string(), verdict: Verdict::Pass, data: Map::new() }
    }

    pub fn fail(mut self) -> Self {
        self.verdict = Verdict::Fail;
        self
    }

    pub fn error(name: &str, message: String) -> Self {
        let mut report = JobReport::new(name);
        report.verdict = Verdict::Error;
        report.data.insert("error".into(), Value::String(message));
        report
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.data.insert(key.into(), value);
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub jobs: Vec<JobReport>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.jobs.iter().all(|j| j.verdict == Verdict::Pass)
    }

    /// 0 when every job passes, 1 otherwise (schema and I/O problems exit
    /// earlier, before a report exists).
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let jobs: Vec<Value> = self
            .jobs
            .iter()
            .map(|j| {
                let mut obj = Map::new();
                obj.insert("job".into(), Value::String(j.name.clone()));
                obj.insert("verdict".into(), Value::String(j.verdict.as_str().into()));
                for (k, v) in &j.data {
                    obj.insert(k.clone(), v.clone());
                }
                Value::Object(obj)
            })
            .collect();
        serde_json::to_string(&json!({ "jobs": jobs })).expect("report serialization")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for j in &self.jobs {
            out.push_str(&format!("[{}] {}\n", j.verdict.as_str().to_uppercase(), j.name));
            for (k, v) in &j.data {
                out.push_str(&format!("  {k}: {}\n", render_value(v)));
            }
        }
        if self.jobs.is_empty() {
            out.push_str("(no jobs)\n");
        }
        out.push_str(&format!("overall: {}\n", if self.all_pass() { "PASS" } else { "FAIL" }));
        out
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `{"terms":[{"q":...,"r":...}],"float":...}` with decimal-string
/// rationals.
pub fn exp_scalar_json(s: &ExpScalar) -> Value {
    let terms: Vec<Value> = s
        .terms()
        .iter()
        .map(|(q, r)| json!({ "q": rational_to_string(q), "r": rational_to_string(r) }))
        .collect();
    json!({ "terms": terms, "float": s.eval() })
}

pub fn coeff_json(f: &CoeffFn) -> Value {
    serde_json::to_value(coeff_to_literal(f)).expect("coeff literal")
}

pub fn form_json(form: &Form) -> Value {
    serde_json::to_value(form_to_literal(form)).expect("form literal")
}
