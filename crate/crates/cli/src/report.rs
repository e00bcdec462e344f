use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

pub const SCHEMA_VERSION: u32 = 1;

/// A float serialized with 17 significant digits, so it parses back to the same bits.
///
/// Non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Sig17 {
    pub fn text(self) -> String {
        if self.0.is_finite() {
            format!("{:.16e}", self.0)
        } else {
            "null".into()
        }
    }
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.text()).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

/// How a deviation is judged against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when `max_deviation <= tolerance`.
    AtMost,
    /// Pass when `max_deviation >= tolerance`; used by checks that assert a law breaks.
    AtLeast,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::AtMost => "at_most",
            Comparison::AtLeast => "at_least",
        }
    }

    pub fn holds(self, deviation: f64, tolerance: f64) -> bool {
        deviation.is_finite()
            && match self {
                Comparison::AtMost => deviation <= tolerance,
                Comparison::AtLeast => deviation >= tolerance,
            }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyRecord {
    pub id: String,
    pub section: String,
    pub subject: String,
    pub lambda: Sig17,
    pub expected_factor: Option<Sig17>,
    pub observed_factor: Option<Sig17>,
    pub max_deviation: Sig17,
    pub tolerance: Sig17,
    pub comparison: Comparison,
    pub expected_failure: bool,
    pub cases: usize,
    pub pass: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub registered: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub seed: u64,
    pub lambda: Sig17,
    pub eta: Sig17,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub environment: Environment,
    pub summary: Summary,
    pub records: Vec<PropertyRecord>,
}

impl VerificationReport {
    /// Builds the summary from `records`. A count mismatch against the registry counts as a failure.
    pub fn new(environment: Environment, records: Vec<PropertyRecord>, registered: usize) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let mut failed = records.len() - passed;
        if records.len() != registered {
            failed += 1;
        }
        Self {
            schema_version: SCHEMA_VERSION,
            environment,
            summary: Summary { total: records.len(), passed, failed, registered },
            records,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "section",
            "subject",
            "lambda",
            "expected_factor",
            "observed_factor",
            "max_deviation",
            "tolerance",
            "comparison",
            "expected_failure",
            "cases",
            "pass",
            "detail",
        ])?;
        let opt = |x: Option<Sig17>| x.map(Sig17::text).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.id.clone(),
                r.section.clone(),
                r.subject.clone(),
                r.lambda.text(),
                opt(r.expected_factor),
                opt(r.observed_factor),
                r.max_deviation.text(),
                r.tolerance.text(),
                r.comparison.as_str().to_string(),
                r.expected_failure.to_string(),
                r.cases.to_string(),
                r.pass.to_string(),
                r.detail.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
