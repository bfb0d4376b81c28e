//! The full analysis pipeline and its JSON/Markdown renderings.
//!
//! Markdown is always rendered from an [`AnalysisBundle`], so a bundle read
//! back from `report.json` renders the same Markdown as the original.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anova::{one_way_anova, tukey_hsd, AnovaTable, TukeyResult};
use crate::design::{Factor, FactorKind, Plan, ResponseSpec, ResponseTable};
use crate::optimize::{
    analyze_confirmation, optimal_levels, predict, ConfirmationReport, ConfirmationRuns,
    OptimalSelection, OptimizeError, Prediction, DEFAULT_DELTA_DB,
};
use crate::stats::{main_effects, run_summaries, MainEffects, SnrCriterion, StatsError};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Confirmation(#[from] OptimizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub criterion: SnrCriterion,
    pub delta_db: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            criterion: SnrCriterion::SmallerTheBetter,
            delta_db: DEFAULT_DELTA_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFactor {
    #[serde(flatten)]
    pub factor: Factor,
    /// 1-based inner-array column.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSection {
    pub array: String,
    pub runs: usize,
    pub measurements: usize,
    pub response: ResponseSpec,
    pub controls: Vec<BoundFactor>,
    pub noise: Factor,
    #[serde(default)]
    pub annotations: Vec<String>,
}

impl PlanSection {
    pub fn from_plan(plan: &Plan) -> Self {
        Self {
            array: plan.inner().name().to_string(),
            runs: plan.num_runs(),
            measurements: plan.num_measurements(),
            response: plan.response().clone(),
            controls: plan
                .controls()
                .iter()
                .zip(plan.columns())
                .map(|(f, &c)| BoundFactor {
                    factor: f.clone(),
                    column: c + 1,
                })
                .collect(),
            noise: plan.noise().clone(),
            annotations: plan.annotations().to_vec(),
        }
    }
}

/// One completed row of the inner array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaRow {
    pub run: usize,
    pub levels: Vec<usize>,
    pub responses: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorAnova {
    pub factor: String,
    pub kind: FactorKind,
    pub table: AnovaTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTukey {
    pub factor: String,
    pub result: TukeyResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub settings: AnalysisOptions,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>, settings: AnalysisOptions) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            settings,
        }
    }
}

/// Everything derived from one plan and response table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub plan: PlanSection,
    pub oa_table: Vec<OaRow>,
    pub main_effects: MainEffects,
    pub anova: Vec<FactorAnova>,
    /// Only for factors whose ANOVA is significant at `alpha`.
    pub tukey: Vec<FactorTukey>,
    pub optimal: OptimalSelection,
    pub predictions: Vec<Prediction>,
    pub confirmation: Option<ConfirmationReport>,
    pub provenance: Provenance,
}

/// All responses grouped by the levels of each factor (controls in plan
/// order, then the noise factor).
pub fn factor_groups(plan: &Plan, table: &ResponseTable) -> Vec<(String, FactorKind, Vec<Vec<f64>>)> {
    let mut out = Vec::new();
    for (f, factor) in plan.controls().iter().enumerate() {
        let mut groups = vec![Vec::new(); factor.num_levels()];
        for r in 0..plan.num_runs() {
            groups[plan.control_level(r, f) - 1].extend_from_slice(table.run(r));
        }
        out.push((factor.code.clone(), FactorKind::Control, groups));
    }
    let groups = (0..plan.num_noise_levels()).map(|n| table.noise_column(n)).collect();
    out.push((plan.noise().code.clone(), FactorKind::Noise, groups));
    out
}

/// Runs the whole analysis. Tukey comparisons are computed only for
/// factors whose ANOVA p-value is below `alpha`.
pub fn analyze(
    plan: &Plan,
    table: &ResponseTable,
    confirmation: Option<&ConfirmationRuns>,
    options: AnalysisOptions,
    provenance: Provenance,
) -> Result<AnalysisBundle, AnalysisError> {
    let summaries = run_summaries(table, options.criterion)?;
    let oa_table = summaries
        .iter()
        .enumerate()
        .map(|(r, s)| OaRow {
            run: r + 1,
            levels: (0..plan.controls().len()).map(|f| plan.control_level(r, f)).collect(),
            responses: table.run(r).to_vec(),
            mean: s.mean,
            sd: s.sd,
            snr: s.snr,
        })
        .collect();
    let effects = main_effects(plan, table, options.criterion)?;

    let mut anova = Vec::new();
    let mut tukey = Vec::new();
    for (code, kind, groups) in factor_groups(plan, table) {
        let t = one_way_anova(&groups)?;
        if t.is_significant(options.alpha) {
            tukey.push(FactorTukey {
                factor: code.clone(),
                result: tukey_hsd(&groups, options.alpha)?,
            });
        }
        anova.push(FactorAnova {
            factor: code,
            kind,
            table: t,
        });
    }

    let optimal = optimal_levels(&effects, options.delta_db);
    let predictions = optimal
        .recommended
        .iter()
        .map(|c| predict(&effects, c))
        .collect::<Result<Vec<_>, _>>()?;
    let confirmation = confirmation
        .map(|runs| analyze_confirmation(plan, table, &effects, runs))
        .transpose()?;

    Ok(AnalysisBundle {
        plan: PlanSection::from_plan(plan),
        oa_table,
        main_effects: effects,
        anova,
        tukey,
        optimal,
        predictions,
        confirmation,
        provenance,
    })
}

impl AnalysisBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn anova_for(&self, code: &str) -> Option<&AnovaTable> {
        self.anova.iter().find(|a| a.factor == code).map(|a| &a.table)
    }

    pub fn tukey_for(&self, code: &str) -> Option<&TukeyResult> {
        self.tukey.iter().find(|t| t.factor == code).map(|t| &t.result)
    }

    pub fn to_markdown(&self) -> String {
        render_markdown(self)
    }
}

fn fmt2(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // avoid "-0.00"
        let s = format!("{v:.2}");
        if s == "-0.00" { "0.00".into() } else { s }
    }
}

fn mean_sd(mean: f64, sd: Option<f64>) -> String {
    match sd {
        Some(sd) => format!("{} ({})", fmt2(mean), fmt2(sd)),
        None => fmt2(mean),
    }
}

/// Renders the full report. Tables use two decimals.
pub fn render_markdown(b: &AnalysisBundle) -> String {
    let mut md = String::new();
    let p = &b.plan;
    let noise = &p.noise;
    let _ = writeln!(md, "# Robust parameter design report\n");
    let _ = writeln!(
        md,
        "Response: {} ({}). Inner array {} with {} runs, crossed with {} noise levels: {} measurements.\n",
        p.response.name,
        p.response.unit,
        p.array,
        p.runs,
        noise.levels.len(),
        p.measurements
    );
    md.push_str("## Factors\n\n| Type | Factor | Code | Column | Levels |\n|---|---|---|---|---|\n");
    for c in &p.controls {
        let _ = writeln!(
            md,
            "| control | {} | {} | {} | {} |",
            c.factor.name,
            c.factor.code,
            c.column,
            level_list(&c.factor)
        );
    }
    let _ = writeln!(md, "| noise | {} | {} | outer | {} |", noise.name, noise.code, level_list(noise));
    if !p.annotations.is_empty() {
        md.push_str("\nHeld constant:\n\n");
        for a in &p.annotations {
            let _ = writeln!(md, "- {a}");
        }
    }

    md.push_str("\n## Orthogonal array\n\n| Run |");
    for c in &p.controls {
        let _ = write!(md, " {} |", c.factor.code);
    }
    for n in 1..=noise.levels.len() {
        let _ = write!(md, " {}{n} |", noise.code);
    }
    md.push_str(" Mean | SD | S/N |\n|");
    for _ in 0..(p.controls.len() + noise.levels.len() + 4) {
        md.push_str("---|");
    }
    md.push('\n');
    for row in &b.oa_table {
        let _ = write!(md, "| {} |", row.run);
        for l in &row.levels {
            let _ = write!(md, " {l} |");
        }
        for y in &row.responses {
            let _ = write!(md, " {} |", fmt2(*y));
        }
        let _ = writeln!(md, " {} | {} | {} |", fmt2(row.mean), fmt2(row.sd), fmt2(row.snr));
    }

    render_effects(&mut md, &b.main_effects);

    md.push_str("\n## ANOVA\n");
    for a in &b.anova {
        let _ = writeln!(md, "\n### Factor {} ({})\n", a.factor, a.kind);
        render_anova(&mut md, &a.table);
        let alpha = b.provenance.settings.alpha;
        let verdict = if a.table.is_significant(alpha) { "significant" } else { "not significant" };
        let _ = writeln!(
            md,
            "\nF({}, {}) = {}, p = {}: {verdict} at alpha = {alpha}.",
            a.table.df_factor,
            a.table.df_error,
            fmt2(a.table.f),
            fmt2(a.table.p)
        );
        if a.table.degenerate {
            md.push_str("\nWithin-group variation is zero; F is not a proper ratio.\n");
        }
    }

    md.push_str("\n## Tukey HSD\n");
    if b.tukey.is_empty() {
        md.push_str("\nNo factor reached significance; no post-hoc comparisons.\n");
    }
    for t in &b.tukey {
        let _ = writeln!(md, "\n### Factor {}\n", t.factor);
        render_tukey(&mut md, &t.factor, &t.result);
    }

    render_selection(&mut md, &b.optimal, &b.predictions);

    if let Some(c) = &b.confirmation {
        render_confirmation_section(&mut md, c, &noise.code, noise.levels.len());
    }

    let _ = writeln!(
        md,
        "\n---\n\n{} {}, criterion {}.",
        b.provenance.tool, b.provenance.version, b.provenance.settings.criterion
    );
    for i in &b.provenance.inputs {
        let _ = writeln!(md, "- {} `{}` sha256 `{}`", i.role, i.file, i.sha256);
    }
    md
}

fn level_list(f: &Factor) -> String {
    f.levels
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{}: {}", i + 1, l.label))
        .collect::<Vec<_>>()
        .join("; ")
}

fn render_effects(md: &mut String, e: &MainEffects) {
    md.push_str("\n## Main effects\n\nMean (SD) per level:\n\n| Level |");
    for f in &e.factors {
        let _ = write!(md, " {} |", f.code);
    }
    md.push_str("\n|---|");
    for _ in &e.factors {
        md.push_str("---|");
    }
    md.push('\n');
    let max_levels = e.factors.iter().map(|f| f.levels.len()).max().unwrap_or(0);
    for l in 0..max_levels {
        let _ = write!(md, "| {} |", l + 1);
        for f in &e.factors {
            match f.levels.get(l) {
                Some(x) => {
                    let _ = write!(md, " {} |", mean_sd(x.mean, Some(x.spread)));
                }
                None => md.push_str(" |"),
            }
        }
        md.push('\n');
    }
    let _ = writeln!(md, "\nS/N ({}) per level, dB:\n", e.criterion);
    md.push_str("| Level |");
    for f in &e.factors {
        let _ = write!(md, " {} |", f.code);
    }
    md.push_str("\n|---|");
    for _ in &e.factors {
        md.push_str("---|");
    }
    md.push('\n');
    for l in 0..max_levels {
        let _ = write!(md, "| {} |", l + 1);
        for f in &e.factors {
            match f.levels.get(l) {
                Some(x) => {
                    let _ = write!(md, " {} |", fmt2(x.snr));
                }
                None => md.push_str(" |"),
            }
        }
        md.push('\n');
    }
    let _ = writeln!(
        md,
        "\nGrand mean {}, grand S/N {} dB.",
        fmt2(e.grand_mean),
        fmt2(e.grand_snr)
    );
}

fn render_anova(md: &mut String, t: &AnovaTable) {
    md.push_str("| Source | df | SS | MS | F | p |\n|---|---|---|---|---|---|\n");
    let opt = |v: Option<f64>| v.map(fmt2).unwrap_or_default();
    for row in t.rows() {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} |",
            row.source,
            row.df,
            fmt2(row.ss),
            opt(row.ms),
            opt(row.f),
            opt(row.p)
        );
    }
}

fn render_tukey(md: &mut String, code: &str, t: &TukeyResult) {
    let _ = writeln!(
        md,
        "alpha = {}, q = {:.3}, HSD = {} (n = {}, df = {})\n",
        t.alpha,
        t.q_critical,
        fmt2(t.pairs.first().map_or(0.0, |p| p.hsd_threshold)),
        t.group_size,
        t.df_error
    );
    md.push_str("| Pair | Mean difference | Significant |\n|---|---|---|\n");
    for p in &t.pairs {
        let _ = writeln!(
            md,
            "| {code}{} vs {code}{} | {} | {} |",
            p.first,
            p.second,
            fmt2(p.mean_diff),
            if p.significant { "yes" } else { "no" }
        );
    }
}

fn render_selection(md: &mut String, sel: &OptimalSelection, predictions: &[Prediction]) {
    let _ = writeln!(md, "\n## Optimal levels\n\nNear-optimal window: {} dB below the best S/N.\n", sel.delta_db);
    md.push_str("| Factor | Best level | Best S/N | Near-optimal | Ranking |\n|---|---|---|---|---|\n");
    for f in &sel.factors {
        let join = |v: &[usize]| v.iter().map(|l| format!("{}{l}", f.code)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            md,
            "| {} | {}{} | {} | {} | {} |",
            f.code,
            f.code,
            f.best_level,
            fmt2(f.best_snr),
            join(&f.near_optimal),
            join(&f.ranking)
        );
    }
    md.push_str("\n| Combination | Predicted mean | Predicted S/N |\n|---|---|---|\n");
    for p in predictions {
        let _ = writeln!(
            md,
            "| {} | {} | {} |",
            p.combination,
            fmt2(p.predicted_mean),
            fmt2(p.predicted_snr)
        );
    }
}

fn render_confirmation_section(md: &mut String, c: &ConfirmationReport, noise_code: &str, noise_levels: usize) {
    md.push_str("\n## Confirmation runs\n\n| Combination |");
    for n in 1..=noise_levels {
        let _ = write!(md, " {noise_code}{n} |");
    }
    md.push_str(" S/N |\n|---|");
    for _ in 0..=noise_levels {
        md.push_str("---|");
    }
    md.push('\n');
    for r in &c.combinations {
        let _ = write!(md, "| {} |", r.combination);
        for cell in &r.cells {
            let _ = write!(md, " {} |", mean_sd(cell.mean, cell.sd));
        }
        let _ = writeln!(md, " {} |", fmt2(r.snr));
    }
    md.push_str("\nDeltas are confirmation minus reference.\n\n");
    md.push_str("| Combination | Main-array run | Mean delta | S/N delta | Predicted mean | Predicted S/N | Mean delta vs prediction | S/N delta vs prediction |\n");
    md.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in &c.combinations {
        let (run, dm, ds) = match &r.versus_row {
            Some(row) => (row.run.to_string(), fmt2(row.mean_delta), fmt2(row.snr_delta)),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let v = &r.versus_prediction;
        let _ = writeln!(
            md,
            "| {} | {run} | {dm} | {ds} | {} | {} | {} | {} |",
            r.combination,
            fmt2(v.predicted_mean),
            fmt2(v.predicted_snr),
            fmt2(v.mean_delta),
            fmt2(v.snr_delta)
        );
    }
}

/// Markdown for an optimal-level selection alone.
pub fn selection_markdown(sel: &OptimalSelection, predictions: &[Prediction]) -> String {
    let mut md = String::new();
    render_selection(&mut md, sel, predictions);
    md.trim_start().to_string()
}

/// Markdown for a confirmation report alone, in a Mean (SD) grid.
pub fn confirmation_markdown(c: &ConfirmationReport, plan: &Plan) -> String {
    let mut md = String::new();
    render_confirmation_section(&mut md, c, &plan.noise().code, plan.num_noise_levels());
    md.trim_start().to_string()
}
