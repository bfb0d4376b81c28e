//! Signal-to-noise ratios, per-run summaries and main-effects tables.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{FactorKind, Plan, ResponseTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("Tukey HSD needs equal group sizes, got {0:?}")]
    UnequalGroups(Vec<usize>),
}

/// Quality characteristic the S/N ratio rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SnrCriterion {
    SmallerTheBetter,
    LargerTheBetter,
    NominalTheBest { target: f64 },
}

impl Default for SnrCriterion {
    fn default() -> Self {
        SnrCriterion::SmallerTheBetter
    }
}

impl SnrCriterion {
    pub fn nominal(target: f64) -> Result<Self, StatsError> {
        if target.is_finite() {
            Ok(SnrCriterion::NominalTheBest { target })
        } else {
            Err(StatsError::Domain("nominal-the-best target must be finite".into()))
        }
    }
}

impl fmt::Display for SnrCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnrCriterion::SmallerTheBetter => f.write_str("smaller-the-better"),
            SnrCriterion::LargerTheBetter => f.write_str("larger-the-better"),
            SnrCriterion::NominalTheBest { target } => write!(f, "nominal-the-best({target})"),
        }
    }
}

impl FromStr for SnrCriterion {
    type Err = StatsError;

    /// `smaller-the-better`, `larger-the-better` or `nominal-the-best:<target>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "smaller-the-better" | "stb" => Ok(SnrCriterion::SmallerTheBetter),
            "larger-the-better" | "ltb" => Ok(SnrCriterion::LargerTheBetter),
            other => {
                let target = other
                    .strip_prefix("nominal-the-best:")
                    .or_else(|| other.strip_prefix("ntb:"))
                    .ok_or_else(|| StatsError::Domain(format!("unknown criterion `{other}`")))?;
                let target: f64 = target
                    .parse()
                    .map_err(|_| StatsError::Domain(format!("bad target `{target}`")))?;
                SnrCriterion::nominal(target)
            }
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 divisor); `None` for fewer than two values.
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Taguchi S/N ratio in decibels.
///
/// ```
/// use robust_doe::stats::{snr, SnrCriterion};
///
/// let db = snr(&[2.90, 6.56, 10.75], SnrCriterion::SmallerTheBetter).unwrap();
/// assert!((db - -17.456).abs() < 1e-3);
/// ```
pub fn snr(responses: &[f64], criterion: SnrCriterion) -> Result<f64, StatsError> {
    if responses.is_empty() {
        return Err(StatsError::Empty);
    }
    if responses.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Domain("responses must be finite".into()));
    }
    let n = responses.len() as f64;
    match criterion {
        SnrCriterion::SmallerTheBetter => {
            let msq = responses.iter().map(|y| y * y).sum::<f64>() / n;
            if msq == 0.0 {
                return Err(StatsError::Domain(
                    "smaller-the-better S/N is undefined when every response is zero".into(),
                ));
            }
            Ok(-10.0 * msq.log10())
        }
        SnrCriterion::LargerTheBetter => {
            if responses.iter().any(|&y| y <= 0.0) {
                return Err(StatsError::Domain(
                    "larger-the-better S/N needs strictly positive responses".into(),
                ));
            }
            let m = responses.iter().map(|y| 1.0 / (y * y)).sum::<f64>() / n;
            Ok(-10.0 * m.log10())
        }
        SnrCriterion::NominalTheBest { .. } => {
            let var = sample_sd(responses)
                .ok_or_else(|| {
                    StatsError::Domain("nominal-the-best S/N needs at least two responses".into())
                })?
                .powi(2);
            let m = mean(responses);
            if var == 0.0 || m == 0.0 {
                return Err(StatsError::Domain(
                    "nominal-the-best S/N needs non-zero mean and variance".into(),
                ));
            }
            Ok(10.0 * (m * m / var).log10())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    pub sd: f64,
    pub snr: f64,
}

/// Mean, sample SD and S/N of each inner run across the noise levels.
pub fn run_summaries(
    responses: &ResponseTable,
    criterion: SnrCriterion,
) -> Result<Vec<RunSummary>, StatsError> {
    responses
        .rows()
        .iter()
        .map(|row| {
            Ok(RunSummary {
                mean: mean(row),
                sd: sample_sd(row).unwrap_or(0.0),
                snr: snr(row, criterion)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEffect {
    /// 1-based level.
    pub level: usize,
    pub label: String,
    pub mean: f64,
    pub spread: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEffects {
    pub code: String,
    pub name: String,
    pub kind: FactorKind,
    pub levels: Vec<LevelEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffects {
    pub criterion: SnrCriterion,
    /// Control factors in plan order, then the noise factor.
    pub factors: Vec<FactorEffects>,
    /// Mean of the run means.
    pub grand_mean: f64,
    /// Mean of the run S/N ratios.
    pub grand_snr: f64,
}

impl MainEffects {
    pub fn factor(&self, code: &str) -> Option<&FactorEffects> {
        self.factors.iter().find(|f| f.code == code)
    }

    pub fn controls(&self) -> impl Iterator<Item = &FactorEffects> {
        self.factors.iter().filter(|f| f.kind == FactorKind::Control)
    }

    /// Writes `factor,level,mean,spread,snr` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["factor", "level", "mean", "spread", "snr"])?;
        for f in &self.factors {
            for l in &f.levels {
                w.write_record(&[
                    f.code.clone(),
                    l.level.to_string(),
                    l.mean.to_string(),
                    l.spread.to_string(),
                    l.snr.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-factor, per-level response means, spreads and S/N ratios.
///
/// A control level summarizes the runs at that level: the mean and sample SD
/// of their run means, and the mean of their run S/N ratios. A noise level
/// summarizes the raw responses in its column directly.
pub fn main_effects(
    plan: &Plan,
    responses: &ResponseTable,
    criterion: SnrCriterion,
) -> Result<MainEffects, StatsError> {
    let summaries = run_summaries(responses, criterion)?;
    let mut factors = Vec::with_capacity(plan.controls().len() + 1);

    for (f, factor) in plan.controls().iter().enumerate() {
        let levels = factor
            .levels
            .iter()
            .enumerate()
            .map(|(i, value)| {
                let level = i + 1;
                let runs: Vec<&RunSummary> = summaries
                    .iter()
                    .enumerate()
                    .filter(|(r, _)| plan.control_level(*r, f) == level)
                    .map(|(_, s)| s)
                    .collect();
                let means: Vec<f64> = runs.iter().map(|s| s.mean).collect();
                let snrs: Vec<f64> = runs.iter().map(|s| s.snr).collect();
                LevelEffect {
                    level,
                    label: value.label.clone(),
                    mean: mean(&means),
                    spread: sample_sd(&means).unwrap_or(0.0),
                    snr: mean(&snrs),
                }
            })
            .collect();
        factors.push(FactorEffects {
            code: factor.code.clone(),
            name: factor.name.clone(),
            kind: FactorKind::Control,
            levels,
        });
    }

    let noise = plan.noise();
    let levels = noise
        .levels
        .iter()
        .enumerate()
        .map(|(i, value)| {
            let column = responses.noise_column(i);
            Ok(LevelEffect {
                level: i + 1,
                label: value.label.clone(),
                mean: mean(&column),
                spread: sample_sd(&column).unwrap_or(0.0),
                snr: snr(&column, criterion)?,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    factors.push(FactorEffects {
        code: noise.code.clone(),
        name: noise.name.clone(),
        kind: FactorKind::Noise,
        levels,
    });

    let run_means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let run_snrs: Vec<f64> = summaries.iter().map(|s| s.snr).collect();
    Ok(MainEffects {
        criterion,
        factors,
        grand_mean: mean(&run_means),
        grand_snr: mean(&run_snrs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STB: SnrCriterion = SnrCriterion::SmallerTheBetter;

    #[test]
    fn smaller_the_better_examples() {
        assert!((snr(&[2.90, 6.56, 10.75], STB).unwrap() - -17.45).abs() < 0.01);
        assert!((snr(&[3.08, 6.50, 8.59], STB).unwrap() - -16.21).abs() < 0.01);
        assert_eq!(snr(&[1.0, 1.0, 1.0], STB).unwrap(), 0.0);
    }

    #[test]
    fn equal_responses_give_minus_twenty_log() {
        let c: f64 = 4.0;
        let v = snr(&[c, c, c], STB).unwrap();
        assert!((v + 20.0 * c.log10()).abs() < 1e-12);
    }

    #[test]
    fn other_criteria() {
        // 1/y^2 average of (1, 2) is 0.625
        let v = snr(&[1.0, 2.0], SnrCriterion::LargerTheBetter).unwrap();
        assert!((v - -10.0 * 0.625f64.log10()).abs() < 1e-12);
        assert!(snr(&[1.0, 0.0], SnrCriterion::LargerTheBetter).is_err());
        // mean 2, sample variance 1
        let v = snr(&[1.0, 2.0, 3.0], SnrCriterion::nominal(2.0).unwrap()).unwrap();
        assert!((v - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!(snr(&[2.0, 2.0], SnrCriterion::nominal(2.0).unwrap()).is_err());
        assert!(SnrCriterion::nominal(f64::NAN).is_err());
    }

    #[test]
    fn domain_errors() {
        assert_eq!(snr(&[], STB), Err(StatsError::Empty));
        assert!(matches!(snr(&[0.0, 0.0], STB), Err(StatsError::Domain(_))));
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("smaller-the-better".parse::<SnrCriterion>().unwrap(), STB);
        assert_eq!(
            "nominal-the-best:5".parse::<SnrCriterion>().unwrap(),
            SnrCriterion::NominalTheBest { target: 5.0 }
        );
        assert!("nominal-the-best:inf".parse::<SnrCriterion>().is_err());
        assert!("best".parse::<SnrCriterion>().is_err());
    }

    #[test]
    fn sample_sd_small_inputs() {
        assert_eq!(sample_sd(&[3.0]), None);
        assert_eq!(sample_sd(&[3.0, 3.0]), Some(0.0));
        assert!((sample_sd(&[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
