//! Crossed inner/outer array plans and the response tables measured on them.
//!
//! Control factors sit on columns of an orthogonal array (the inner array);
//! every inner run is repeated at each level of a single noise factor (the
//! outer array).

use std::collections::HashSet;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oa::{self, OaError, OrthogonalArray};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("plan file is not valid: {0}")]
    Parse(String),
    #[error(transparent)]
    Array(#[from] OaError),
    #[error("factor `{code}` needs at least 2 levels, has {levels}")]
    TooFewLevels { code: String, levels: usize },
    #[error("factor `{code}` repeats level label `{label}`")]
    DuplicateLabel { code: String, label: String },
    #[error("factor `{code}` has a non-finite level value")]
    NonFiniteLevel { code: String },
    #[error("factor code `{0}` is used more than once")]
    DuplicateCode(String),
    #[error("factor code `{0}` must be non-empty alphabetic text")]
    BadCode(String),
    #[error("factor `{code}` is a {found} factor, expected {expected}")]
    WrongKind {
        code: String,
        found: FactorKind,
        expected: FactorKind,
    },
    #[error("level mismatch: factor `{code}` has {levels} levels but array {array} has no {levels}-level column")]
    LevelMismatch {
        code: String,
        levels: usize,
        array: String,
    },
    #[error("too many factors: array {array} cannot host {count} control factors")]
    TooManyFactors { array: String, count: usize },
    #[error("a plan needs at least one control factor")]
    NoControls,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("response data is malformed: {0}")]
    Parse(String),
    #[error("cell (run {run}, noise level {noise_level}) is outside the plan")]
    OutOfRange { run: usize, noise_level: usize },
    #[error("cell ({run}, {noise_level}) appears more than once")]
    Duplicate { run: usize, noise_level: usize },
    #[error("cell ({run}, {noise_level}) has non-finite response {value}")]
    NonFinite {
        run: usize,
        noise_level: usize,
        value: f64,
    },
    #[error("cell ({run}, {noise_level}) has negative response {value} for a magnitude")]
    Negative {
        run: usize,
        noise_level: usize,
        value: f64,
    },
    #[error("missing cells (run, noise level): {}", format_cells(.0))]
    Missing(Vec<(usize, usize)>),
    #[error("table shape {got:?} does not match the plan's {expected:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

fn format_cells(cells: &[(usize, usize)]) -> String {
    cells
        .iter()
        .map(|(r, n)| format!("({r}, {n})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Control,
    Noise,
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorKind::Control => "control",
            FactorKind::Noise => "noise",
        })
    }
}

/// A level: a label plus an optional numeric value and unit. Noise levels
/// that are ranges ("Low (1.0-1.2)") carry their midpoint, if anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl LevelValue {
    pub fn label(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            value: None,
            unit: None,
        }
    }

    pub fn numeric(label: impl Into<String>, value: f64, unit: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            value: Some(value),
            unit: Some(unit.into()),
        }
    }
}

impl fmt::Display for LevelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// A factor as written in a plan file; the kind comes from where it appears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub code: String,
    pub levels: Vec<LevelValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub code: String,
    pub kind: FactorKind,
    pub levels: Vec<LevelValue>,
}

impl Factor {
    pub fn new(spec: FactorSpec, kind: FactorKind) -> Result<Self, PlanError> {
        let FactorSpec { name, code, levels } = spec;
        if code.is_empty() || !code.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(PlanError::BadCode(code));
        }
        if levels.len() < 2 {
            return Err(PlanError::TooFewLevels {
                code,
                levels: levels.len(),
            });
        }
        let mut seen = HashSet::new();
        for l in &levels {
            if !seen.insert(l.label.as_str()) {
                return Err(PlanError::DuplicateLabel {
                    code: code.clone(),
                    label: l.label.clone(),
                });
            }
            if l.value.is_some_and(|v| !v.is_finite()) {
                return Err(PlanError::NonFiniteLevel { code });
            }
        }
        Ok(Self {
            name,
            code,
            kind,
            levels,
        })
    }

    pub fn control(spec: FactorSpec) -> Result<Self, PlanError> {
        Self::new(spec, FactorKind::Control)
    }

    pub fn noise(spec: FactorSpec) -> Result<Self, PlanError> {
        Self::new(spec, FactorKind::Noise)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// The value of a 1-based level.
    pub fn level(&self, level: usize) -> Option<&LevelValue> {
        level.checked_sub(1).and_then(|i| self.levels.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub name: String,
    pub unit: String,
    /// The response is a magnitude, so negative measurements are rejected.
    #[serde(default)]
    pub nonnegative: bool,
}

/// The JSON plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub response: ResponseSpec,
    pub controls: Vec<FactorSpec>,
    pub noise: FactorSpec,
    /// Catalog array name; chosen with [`oa::select_array`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<String>,
    /// Free-text notes on conditions held constant.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

impl PlanFile {
    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        serde_json::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    response: ResponseSpec,
    inner: OrthogonalArray,
    controls: Vec<Factor>,
    /// 0-based inner-array column per control factor.
    columns: Vec<usize>,
    noise: Factor,
    annotations: Vec<String>,
}

/// Binds control factors to the lowest-indexed compatible columns of `oa`
/// and attaches the noise factor as the outer array.
pub fn build_plan(
    response: ResponseSpec,
    controls: Vec<Factor>,
    noise: Factor,
    oa: OrthogonalArray,
) -> Result<Plan, PlanError> {
    if controls.is_empty() {
        return Err(PlanError::NoControls);
    }
    for c in &controls {
        if c.kind != FactorKind::Control {
            return Err(PlanError::WrongKind {
                code: c.code.clone(),
                found: c.kind,
                expected: FactorKind::Control,
            });
        }
    }
    if noise.kind != FactorKind::Noise {
        return Err(PlanError::WrongKind {
            code: noise.code.clone(),
            found: noise.kind,
            expected: FactorKind::Noise,
        });
    }
    let mut codes = HashSet::new();
    for code in controls.iter().chain([&noise]).map(|f| f.code.as_str()) {
        if !codes.insert(code) {
            return Err(PlanError::DuplicateCode(code.to_string()));
        }
    }
    if noise.num_levels() < 2 {
        return Err(PlanError::TooFewLevels {
            code: noise.code.clone(),
            levels: noise.num_levels(),
        });
    }
    for c in &controls {
        if !oa.column_levels().contains(&c.num_levels()) {
            return Err(PlanError::LevelMismatch {
                code: c.code.clone(),
                levels: c.num_levels(),
                array: oa.name().to_string(),
            });
        }
    }
    let levels: Vec<usize> = controls.iter().map(Factor::num_levels).collect();
    let columns = oa
        .assign_columns(&levels)
        .ok_or_else(|| PlanError::TooManyFactors {
            array: oa.name().to_string(),
            count: controls.len(),
        })?;
    Ok(Plan {
        response,
        inner: oa,
        controls,
        columns,
        noise,
        annotations: Vec::new(),
    })
}

impl Plan {
    /// Validates a parsed plan file and binds it to its array.
    pub fn from_file(file: PlanFile) -> Result<Self, PlanError> {
        let controls = file
            .controls
            .into_iter()
            .map(Factor::control)
            .collect::<Result<Vec<_>, _>>()?;
        let noise = Factor::noise(file.noise)?;
        let oa = match &file.array {
            Some(name) => oa::lookup(name)?,
            None => {
                if controls.is_empty() {
                    return Err(PlanError::NoControls);
                }
                let levels: Vec<usize> = controls.iter().map(Factor::num_levels).collect();
                oa::select_array(&levels)?.array
            }
        };
        let mut plan = build_plan(file.response, controls, noise, oa)?;
        plan.annotations = file.annotations;
        Ok(plan)
    }

    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        Self::from_file(PlanFile::from_json(text)?)
    }

    pub fn response(&self) -> &ResponseSpec {
        &self.response
    }

    pub fn inner(&self) -> &OrthogonalArray {
        &self.inner
    }

    pub fn controls(&self) -> &[Factor] {
        &self.controls
    }

    pub fn noise(&self) -> &Factor {
        &self.noise
    }

    pub fn annotations(&self) -> &[String] {
        &self.annotations
    }

    /// 0-based inner-array column hosting each control factor.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn num_runs(&self) -> usize {
        self.inner.num_runs()
    }

    pub fn num_noise_levels(&self) -> usize {
        self.noise.num_levels()
    }

    pub fn num_measurements(&self) -> usize {
        self.num_runs() * self.num_noise_levels()
    }

    /// Level (1-based) of control factor `factor` in 0-based inner `run`.
    pub fn control_level(&self, run: usize, factor: usize) -> usize {
        self.inner.level(run, self.columns[factor])
    }

    pub fn control_index(&self, code: &str) -> Option<usize> {
        self.controls.iter().position(|f| f.code == code)
    }

    /// 0-based inner run whose control levels equal `levels`, if any.
    pub fn find_run(&self, levels: &[usize]) -> Option<usize> {
        (0..self.num_runs()).find(|&r| {
            levels
                .iter()
                .enumerate()
                .all(|(f, &l)| self.control_level(r, f) == l)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub code: String,
    pub level: usize,
    pub value: LevelValue,
}

/// One scheduled measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledRun {
    /// 1-based inner run.
    pub run: usize,
    /// 1-based noise level.
    pub noise_level: usize,
    pub controls: Vec<Setting>,
    pub noise: LevelValue,
}

/// Every measurement of the plan, inner-run major.
pub fn run_schedule(plan: &Plan) -> Vec<ScheduledRun> {
    let mut out = Vec::with_capacity(plan.num_measurements());
    for run in 0..plan.num_runs() {
        let controls: Vec<Setting> = plan
            .controls
            .iter()
            .enumerate()
            .map(|(f, factor)| {
                let level = plan.control_level(run, f);
                Setting {
                    code: factor.code.clone(),
                    level,
                    value: factor.levels[level - 1].clone(),
                }
            })
            .collect();
        for (n, noise) in plan.noise.levels.iter().enumerate() {
            out.push(ScheduledRun {
                run: run + 1,
                noise_level: n + 1,
                controls: controls.clone(),
                noise: noise.clone(),
            });
        }
    }
    out
}

/// Writes the schedule as CSV: `run,noise_level,<control codes...>` with
/// level labels in the control columns.
pub fn write_schedule_csv<W: io::Write>(plan: &Plan, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string(), "noise_level".to_string()];
    header.extend(plan.controls.iter().map(|f| f.code.clone()));
    w.write_record(&header)?;
    for entry in run_schedule(plan) {
        let mut rec = vec![entry.run.to_string(), entry.noise_level.to_string()];
        rec.extend(entry.controls.iter().map(|s| s.value.label.clone()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a response file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ResponseRecord {
    pub run: usize,
    pub noise_level: usize,
    pub response: f64,
}

/// Inner-run by noise-level matrix of measured responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTable {
    values: Vec<Vec<f64>>,
    unit: String,
}

impl ResponseTable {
    /// Checks a complete matrix against the plan.
    pub fn new(plan: &Plan, values: Vec<Vec<f64>>) -> Result<Self, ResponseError> {
        let expected = (plan.num_runs(), plan.num_noise_levels());
        let got = (values.len(), values.first().map_or(0, Vec::len));
        if got != expected || values.iter().any(|r| r.len() != expected.1) {
            return Err(ResponseError::Shape { expected, got });
        }
        for (r, row) in values.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                check_value(plan, r + 1, n + 1, v)?;
            }
        }
        Ok(Self {
            values,
            unit: plan.response.unit.clone(),
        })
    }

    /// Assembles a table from `(run, noise_level, response)` records.
    pub fn from_records<I>(plan: &Plan, records: I) -> Result<Self, ResponseError>
    where
        I: IntoIterator<Item = ResponseRecord>,
    {
        let (runs, noise) = (plan.num_runs(), plan.num_noise_levels());
        let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; noise]; runs];
        for rec in records {
            let ResponseRecord {
                run,
                noise_level,
                response,
            } = rec;
            if !(1..=runs).contains(&run) || !(1..=noise).contains(&noise_level) {
                return Err(ResponseError::OutOfRange { run, noise_level });
            }
            check_value(plan, run, noise_level, response)?;
            let cell = &mut cells[run - 1][noise_level - 1];
            if cell.is_some() {
                return Err(ResponseError::Duplicate { run, noise_level });
            }
            *cell = Some(response);
        }
        let missing: Vec<(usize, usize)> = cells
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| v.is_none())
                    .map(move |(n, _)| (r + 1, n + 1))
            })
            .collect();
        if !missing.is_empty() {
            return Err(ResponseError::Missing(missing));
        }
        let values = cells
            .into_iter()
            .map(|row| row.into_iter().map(Option::unwrap).collect())
            .collect();
        Ok(Self {
            values,
            unit: plan.response.unit.clone(),
        })
    }

    /// Reads a `run,noise_level,response` CSV.
    pub fn read_csv<R: io::Read>(plan: &Plan, input: R) -> Result<Self, ResponseError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| ResponseError::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["run", "noise_level", "response"] {
            return Err(ResponseError::Parse(format!(
                "expected header `run,noise_level,response`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let records = reader
            .deserialize::<ResponseRecord>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ResponseError::Parse(e.to_string()))?;
        Self::from_records(plan, records)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["run", "noise_level", "response"])?;
        for (r, row) in self.values.iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                w.write_record(&[(r + 1).to_string(), (n + 1).to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn num_runs(&self) -> usize {
        self.values.len()
    }

    pub fn num_noise_levels(&self) -> usize {
        self.values[0].len()
    }

    /// Responses of 0-based inner `run` across the noise levels.
    pub fn run(&self, run: usize) -> &[f64] {
        &self.values[run]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Responses at 0-based `noise_level` across all inner runs.
    pub fn noise_column(&self, noise_level: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[noise_level]).collect()
    }

    pub fn get(&self, run: usize, noise_level: usize) -> f64 {
        self.values[run][noise_level]
    }
}

fn check_value(plan: &Plan, run: usize, noise_level: usize, value: f64) -> Result<(), ResponseError> {
    if !value.is_finite() {
        return Err(ResponseError::NonFinite {
            run,
            noise_level,
            value,
        });
    }
    if plan.response.nonnegative && value < 0.0 {
        return Err(ResponseError::Negative {
            run,
            noise_level,
            value,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(code: &str, n: usize) -> FactorSpec {
        FactorSpec {
            name: format!("factor {code}"),
            code: code.into(),
            levels: (1..=n).map(|i| LevelValue::label(format!("{code}{i}"))).collect(),
        }
    }

    fn response() -> ResponseSpec {
        ResponseSpec {
            name: "y".into(),
            unit: "g".into(),
            nonnegative: true,
        }
    }

    fn plan(noise_levels: usize) -> Plan {
        build_plan(
            response(),
            vec![Factor::control(spec("A", 3)).unwrap(), Factor::control(spec("B", 3)).unwrap()],
            Factor::noise(spec("X", noise_levels)).unwrap(),
            oa::lookup("L9").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn measurement_counts() {
        assert_eq!(plan(3).num_measurements(), 27);
        assert_eq!(plan(2).num_measurements(), 18);
        assert_eq!(plan(3).columns(), &[0, 1]);
    }

    #[test]
    fn single_level_noise_is_rejected() {
        assert!(matches!(
            Factor::noise(spec("X", 1)),
            Err(PlanError::TooFewLevels { .. })
        ));
    }

    #[test]
    fn factor_validation() {
        let mut s = spec("A", 3);
        s.levels[2].label = "A1".into();
        assert!(matches!(Factor::control(s), Err(PlanError::DuplicateLabel { .. })));
        let mut s = spec("A", 2);
        s.levels[0].value = Some(f64::INFINITY);
        assert!(matches!(Factor::control(s), Err(PlanError::NonFiniteLevel { .. })));
        assert!(matches!(Factor::control(spec("A1", 2)), Err(PlanError::BadCode(_))));
    }

    #[test]
    fn build_plan_errors() {
        let l9 = oa::lookup("L9").unwrap();
        let err = build_plan(
            response(),
            vec![Factor::control(spec("A", 4)).unwrap()],
            Factor::noise(spec("X", 3)).unwrap(),
            l9.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::LevelMismatch { levels: 4, .. }));

        let five: Vec<Factor> = ["A", "B", "C", "D", "E"]
            .iter()
            .map(|c| Factor::control(spec(c, 3)).unwrap())
            .collect();
        let err = build_plan(response(), five, Factor::noise(spec("X", 3)).unwrap(), l9.clone())
            .unwrap_err();
        assert!(matches!(err, PlanError::TooManyFactors { count: 5, .. }));

        let err = build_plan(
            response(),
            vec![Factor::control(spec("X", 3)).unwrap()],
            Factor::noise(spec("X", 3)).unwrap(),
            l9.clone(),
        )
        .unwrap_err();
        assert_eq!(err, PlanError::DuplicateCode("X".into()));

        let err = build_plan(
            response(),
            vec![Factor::noise(spec("A", 3)).unwrap()],
            Factor::noise(spec("X", 3)).unwrap(),
            l9,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::WrongKind { .. }));
    }

    #[test]
    fn schedule_order_and_settings() {
        let p = plan(3);
        let s = run_schedule(&p);
        assert_eq!(s.len(), 27);
        assert_eq!((s[0].run, s[0].noise_level), (1, 1));
        assert_eq!((s[1].run, s[1].noise_level), (1, 2));
        assert_eq!((s[3].run, s[3].noise_level), (2, 1));
        let r4 = &s[9];
        assert_eq!((r4.run, r4.noise_level), (4, 1));
        assert_eq!(
            r4.controls.iter().map(|c| c.level).collect::<Vec<_>>(),
            vec![2, 1]
        );
    }

    #[test]
    fn schedule_groups_are_balanced() {
        let p = plan(2);
        let s = run_schedule(&p);
        for f in 0..2 {
            let mut counts = [0; 3];
            for e in &s {
                counts[e.controls[f].level - 1] += 1;
            }
            assert_eq!(counts, [6, 6, 6]);
        }
    }

    fn records(p: &Plan) -> Vec<ResponseRecord> {
        run_schedule(p)
            .iter()
            .map(|e| ResponseRecord {
                run: e.run,
                noise_level: e.noise_level,
                response: (e.run * 10 + e.noise_level) as f64,
            })
            .collect()
    }

    #[test]
    fn ingest_complete_table() {
        let p = plan(3);
        let t = ResponseTable::from_records(&p, records(&p)).unwrap();
        assert_eq!(t.get(8, 2), 93.0);
        assert_eq!(t.noise_column(0)[1], 21.0);
        assert_eq!(t.unit(), "g");
    }

    #[test]
    fn ingest_reports_gaps_and_duplicates() {
        let p = plan(3);
        let mut recs = records(&p);
        let removed = recs.remove(25); // run 9, noise 2
        assert_eq!((removed.run, removed.noise_level), (9, 2));
        let err = ResponseTable::from_records(&p, recs.clone()).unwrap_err();
        assert_eq!(err, ResponseError::Missing(vec![(9, 2)]));
        assert!(err.to_string().contains("(9, 2)"));

        recs.push(recs[0]);
        assert!(matches!(
            ResponseTable::from_records(&p, recs).unwrap_err(),
            ResponseError::Duplicate { run: 1, noise_level: 1 }
        ));
    }

    #[test]
    fn ingest_rejects_bad_values() {
        let p = plan(3);
        let text = "run,noise_level,response\n1,1,NaN\n";
        assert!(matches!(
            ResponseTable::read_csv(&p, text.as_bytes()).unwrap_err(),
            ResponseError::NonFinite { run: 1, noise_level: 1, .. }
        ));
        let text = "run,noise_level,response\n1,1,-2\n";
        assert!(matches!(
            ResponseTable::read_csv(&p, text.as_bytes()).unwrap_err(),
            ResponseError::Negative { .. }
        ));
        let text = "run,noise_level,response\n10,1,2\n";
        assert!(matches!(
            ResponseTable::read_csv(&p, text.as_bytes()).unwrap_err(),
            ResponseError::OutOfRange { run: 10, .. }
        ));
        let text = "run,level,response\n1,1,2\n";
        assert!(matches!(
            ResponseTable::read_csv(&p, text.as_bytes()).unwrap_err(),
            ResponseError::Parse(_)
        ));
        let text = "run,noise_level,response\n1,1,abc\n";
        assert!(matches!(
            ResponseTable::read_csv(&p, text.as_bytes()).unwrap_err(),
            ResponseError::Parse(_)
        ));
    }

    #[test]
    fn plan_file_selects_array_when_absent() {
        let json = r#"{
            "response": {"name": "y", "unit": "g"},
            "controls": [{"name": "a", "code": "A", "levels": [{"label": "lo"}, {"label": "hi"}]}],
            "noise": {"name": "n", "code": "N", "levels": [{"label": "1"}, {"label": "2"}]}
        }"#;
        let p = Plan::from_json(json).unwrap();
        assert_eq!(p.inner().name(), "L4");
        assert_eq!(p.num_measurements(), 8);
    }

    #[test]
    fn plan_file_unknown_array() {
        let json = r#"{
            "response": {"name": "y", "unit": "g"},
            "controls": [{"name": "a", "code": "A", "levels": [{"label": "lo"}, {"label": "hi"}]}],
            "noise": {"name": "n", "code": "N", "levels": [{"label": "1"}, {"label": "2"}]},
            "array": "L99"
        }"#;
        let err = Plan::from_json(json).unwrap_err();
        assert!(err.to_string().contains("unknown array"), "{err}");
    }
}
