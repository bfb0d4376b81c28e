//! Optimal-level selection, additive prediction, quality loss and
//! confirmation-run analysis.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::design::{Plan, ResponseTable};
use crate::stats::{mean, sample_sd, snr, MainEffects, SnrCriterion, StatsError};

/// Default S/N window, in dB, for a level to count as near-optimal.
pub const DEFAULT_DELTA_DB: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("malformed combination `{0}` (expected e.g. `A2-B1`)")]
    BadCombination(String),
    #[error("unknown factor code `{0}`")]
    UnknownFactor(String),
    #[error("factor `{code}` has no level {level}")]
    UnknownLevel { code: String, level: usize },
    #[error("combination `{combination}` does not set factor `{code}`")]
    MissingFactor { combination: String, code: String },
    #[error("factor `{0}` appears twice in a combination")]
    RepeatedFactor(String),
    #[error("noise level {0} is outside the plan")]
    NoiseOutOfRange(usize),
    #[error("non-finite confirmation response for `{0}`")]
    NonFinite(String),
    #[error("no confirmation runs for `{combination}` at noise level {noise_level}")]
    EmptyCell {
        combination: String,
        noise_level: usize,
    },
    #[error("confirmation data is empty")]
    Empty,
    #[error("confirmation data is malformed: {0}")]
    Parse(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One level per control factor, e.g. `A2-B1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combination(Vec<(String, usize)>);

impl Combination {
    pub fn new(levels: Vec<(String, usize)>) -> Self {
        Self(levels)
    }

    pub fn levels(&self) -> &[(String, usize)] {
        &self.0
    }

    pub fn level_of(&self, code: &str) -> Option<usize> {
        self.0.iter().find(|(c, _)| c == code).map(|&(_, l)| l)
    }

    /// Parses `A2-B1` against the plan's control factors and returns the
    /// combination in plan order.
    pub fn parse(text: &str, plan: &Plan) -> Result<Self, OptimizeError> {
        let text = text.trim();
        let mut levels: Vec<Option<usize>> = vec![None; plan.controls().len()];
        if text.is_empty() {
            return Err(OptimizeError::BadCombination(text.to_string()));
        }
        for token in text.split('-') {
            let split = token
                .find(|c: char| c.is_ascii_digit())
                .filter(|&i| i > 0)
                .ok_or_else(|| OptimizeError::BadCombination(text.to_string()))?;
            let (code, digits) = token.split_at(split);
            if !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(OptimizeError::BadCombination(text.to_string()));
            }
            let level: usize = digits
                .parse()
                .map_err(|_| OptimizeError::BadCombination(text.to_string()))?;
            let f = plan
                .control_index(code)
                .ok_or_else(|| OptimizeError::UnknownFactor(code.to_string()))?;
            if plan.controls()[f].level(level).is_none() {
                return Err(OptimizeError::UnknownLevel {
                    code: code.to_string(),
                    level,
                });
            }
            if levels[f].replace(level).is_some() {
                return Err(OptimizeError::RepeatedFactor(code.to_string()));
            }
        }
        let levels = plan
            .controls()
            .iter()
            .zip(levels)
            .map(|(factor, level)| {
                level.map(|l| (factor.code.clone(), l)).ok_or_else(|| {
                    OptimizeError::MissingFactor {
                        combination: text.to_string(),
                        code: factor.code.clone(),
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(levels))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (code, level)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{code}{level}")?;
        }
        Ok(())
    }
}

impl Serialize for Combination {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Combination {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Combination {
    type Err = OptimizeError;

    /// Plan-free parse: each token is alphabetic code + level digits.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || OptimizeError::BadCombination(text.to_string());
        text.split('-')
            .map(|token| {
                let split = token
                    .find(|c: char| c.is_ascii_digit())
                    .filter(|&i| i > 0)
                    .ok_or_else(bad)?;
                let (code, digits) = token.split_at(split);
                if !code.chars().all(|c| c.is_ascii_alphabetic()) {
                    return Err(bad());
                }
                Ok((code.to_string(), digits.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSelection {
    pub code: String,
    pub best_level: usize,
    pub best_snr: f64,
    pub near_optimal: Vec<usize>,
    /// Levels by S/N, best first.
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSelection {
    pub delta_db: f64,
    pub factors: Vec<FactorSelection>,
    /// Cross product of the near-optimal sets, lexicographic.
    pub recommended: Vec<Combination>,
}

/// Picks, per control factor, the level with the highest S/N (ties go to
/// the lower level) and every level within `delta_db` of it.
///
/// `delta_db` must be non-negative; negative values are treated as zero.
pub fn optimal_levels(effects: &MainEffects, delta_db: f64) -> OptimalSelection {
    let delta_db = delta_db.max(0.0);
    let factors: Vec<FactorSelection> = effects
        .controls()
        .map(|f| {
            let mut ranking: Vec<usize> = f.levels.iter().map(|l| l.level).collect();
            let snr_of = |level: usize| f.levels[level - 1].snr;
            // stable sort keeps lower levels first on ties
            ranking.sort_by(|&a, &b| snr_of(b).total_cmp(&snr_of(a)));
            let best_level = ranking[0];
            let best_snr = snr_of(best_level);
            let near_optimal = f
                .levels
                .iter()
                .filter(|l| l.snr >= best_snr - delta_db)
                .map(|l| l.level)
                .collect();
            FactorSelection {
                code: f.code.clone(),
                best_level,
                best_snr,
                near_optimal,
                ranking,
            }
        })
        .collect();

    let mut recommended: Vec<Vec<(String, usize)>> = vec![Vec::new()];
    for f in &factors {
        recommended = recommended
            .into_iter()
            .flat_map(|prefix| {
                f.near_optimal.iter().map(move |&l| {
                    let mut next = prefix.clone();
                    next.push((f.code.clone(), l));
                    next
                })
            })
            .collect();
    }

    OptimalSelection {
        delta_db,
        factors,
        recommended: recommended.into_iter().map(Combination).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub combination: Combination,
    pub predicted_snr: f64,
    pub predicted_mean: f64,
}

/// Additive main-effects prediction: grand value plus each factor's
/// deviation at its chosen level.
pub fn predict(effects: &MainEffects, combination: &Combination) -> Result<Prediction, OptimizeError> {
    let mut predicted_snr = effects.grand_snr;
    let mut predicted_mean = effects.grand_mean;
    for (code, level) in combination.levels() {
        let factor = effects
            .factor(code)
            .ok_or_else(|| OptimizeError::UnknownFactor(code.clone()))?;
        let at = level
            .checked_sub(1)
            .and_then(|i| factor.levels.get(i))
            .ok_or_else(|| OptimizeError::UnknownLevel {
                code: code.clone(),
                level: *level,
            })?;
        predicted_snr += at.snr - effects.grand_snr;
        predicted_mean += at.mean - effects.grand_mean;
    }
    Ok(Prediction {
        combination: combination.clone(),
        predicted_snr,
        predicted_mean,
    })
}

/// Average quadratic quality loss with cost constant `k`.
pub fn quality_loss(responses: &[f64], criterion: SnrCriterion, k: f64) -> Result<f64, StatsError> {
    if responses.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(StatsError::Domain("loss constant must be positive".into()));
    }
    let n = responses.len() as f64;
    let avg = match criterion {
        SnrCriterion::SmallerTheBetter => responses.iter().map(|y| y * y).sum::<f64>() / n,
        SnrCriterion::NominalTheBest { target } => {
            responses.iter().map(|y| (y - target).powi(2)).sum::<f64>() / n
        }
        SnrCriterion::LargerTheBetter => {
            if responses.iter().any(|&y| y == 0.0) {
                return Err(StatsError::Domain(
                    "larger-the-better loss is undefined for a zero response".into(),
                ));
            }
            responses.iter().map(|y| 1.0 / (y * y)).sum::<f64>() / n
        }
    };
    Ok(k * avg)
}

/// Confirmation measurements grouped by combination and noise level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfirmationRuns {
    cells: BTreeMap<Combination, Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
struct ConfirmationRecord {
    combination: String,
    noise_level: usize,
    response: f64,
}

impl ConfirmationRuns {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one run; `noise_level` is 1-based.
    pub fn push(
        &mut self,
        plan: &Plan,
        combination: Combination,
        noise_level: usize,
        response: f64,
    ) -> Result<(), OptimizeError> {
        if !(1..=plan.num_noise_levels()).contains(&noise_level) {
            return Err(OptimizeError::NoiseOutOfRange(noise_level));
        }
        if !response.is_finite() {
            return Err(OptimizeError::NonFinite(combination.to_string()));
        }
        self.cells
            .entry(combination)
            .or_insert_with(|| vec![Vec::new(); plan.num_noise_levels()])[noise_level - 1]
            .push(response);
        Ok(())
    }

    /// Reads `combination,noise_level,response` CSV.
    pub fn read_csv<R: io::Read>(plan: &Plan, input: R) -> Result<Self, OptimizeError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| OptimizeError::Parse(e.to_string()))?
            .clone();
        if headers.is_empty() {
            return Err(OptimizeError::Empty);
        }
        if headers.iter().collect::<Vec<_>>() != ["combination", "noise_level", "response"] {
            return Err(OptimizeError::Parse(format!(
                "expected header `combination,noise_level,response`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut runs = Self::new();
        for rec in reader.deserialize::<ConfirmationRecord>() {
            let rec = rec.map_err(|e| OptimizeError::Parse(e.to_string()))?;
            let combination = Combination::parse(&rec.combination, plan)?;
            runs.push(plan, combination, rec.noise_level, rec.response)?;
        }
        if runs.cells.is_empty() {
            return Err(OptimizeError::Empty);
        }
        Ok(runs)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Combination, &Vec<Vec<f64>>)> {
        self.cells.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub noise_level: usize,
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Absent with a single run.
    pub sd: Option<f64>,
}

/// Signed differences (confirmation minus main-array row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowComparison {
    /// 1-based inner run.
    pub run: usize,
    pub row_responses: Vec<f64>,
    pub row_mean: f64,
    pub row_snr: f64,
    /// Per noise level: cell mean minus the row's response.
    pub cell_deltas: Vec<f64>,
    pub mean_delta: f64,
    pub snr_delta: f64,
}

/// Signed differences (confirmation minus prediction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionComparison {
    pub predicted_mean: f64,
    pub predicted_snr: f64,
    pub mean_delta: f64,
    pub snr_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationReport {
    pub combination: Combination,
    pub cells: Vec<CellSummary>,
    /// Mean over every run of the combination.
    pub mean: f64,
    /// S/N over every run of the combination, pooled across noise levels.
    pub snr: f64,
    pub versus_row: Option<RowComparison>,
    pub versus_prediction: PredictionComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub criterion: SnrCriterion,
    pub combinations: Vec<CombinationReport>,
}

/// Summarizes confirmation runs and compares them with the main array and
/// with the additive prediction from `effects`.
pub fn analyze_confirmation(
    plan: &Plan,
    reference: &ResponseTable,
    effects: &MainEffects,
    runs: &ConfirmationRuns,
) -> Result<ConfirmationReport, OptimizeError> {
    if runs.is_empty() {
        return Err(OptimizeError::Empty);
    }
    let criterion = effects.criterion;
    let mut combinations = Vec::new();
    for (combination, per_noise) in runs.iter() {
        let mut cells = Vec::with_capacity(per_noise.len());
        for (n, values) in per_noise.iter().enumerate() {
            if values.is_empty() {
                return Err(OptimizeError::EmptyCell {
                    combination: combination.to_string(),
                    noise_level: n + 1,
                });
            }
            cells.push(CellSummary {
                noise_level: n + 1,
                runs: values.clone(),
                mean: mean(values),
                sd: sample_sd(values),
            });
        }
        let pooled: Vec<f64> = per_noise.iter().flatten().copied().collect();
        let overall_mean = mean(&pooled);
        let overall_snr = snr(&pooled, criterion)?;

        let levels: Vec<usize> = combination.levels().iter().map(|&(_, l)| l).collect();
        let versus_row = plan.find_run(&levels).map(|r| {
            let row = reference.run(r);
            let row_mean = mean(row);
            let row_snr = snr(row, criterion)?;
            Ok::<_, StatsError>(RowComparison {
                run: r + 1,
                row_responses: row.to_vec(),
                row_mean,
                row_snr,
                cell_deltas: cells.iter().zip(row).map(|(c, y)| c.mean - y).collect(),
                mean_delta: overall_mean - row_mean,
                snr_delta: overall_snr - row_snr,
            })
        });
        let versus_row = versus_row.transpose()?;

        let p = predict(effects, combination)?;
        combinations.push(CombinationReport {
            combination: combination.clone(),
            cells,
            mean: overall_mean,
            snr: overall_snr,
            versus_row,
            versus_prediction: PredictionComparison {
                predicted_mean: p.predicted_mean,
                predicted_snr: p.predicted_snr,
                mean_delta: overall_mean - p.predicted_mean,
                snr_delta: overall_snr - p.predicted_snr,
            },
        });
    }
    Ok(ConfirmationReport {
        criterion,
        combinations,
    })
}
