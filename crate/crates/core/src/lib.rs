//! Taguchi robust parameter design.
//!
//! The workflow runs through the modules in order:
//!
//! - [`oa`]: standard orthogonal arrays, array selection and verification;
//! - [`design`]: crossed inner/outer plans, run schedules and response tables;
//! - [`stats`]: S/N ratios, per-run summaries and main effects;
//! - [`anova`]: one-way ANOVA, F p-values, studentized range and Tukey HSD;
//! - [`optimize`]: optimal levels, additive prediction, quality loss and
//!   confirmation runs;
//! - [`report`]: the end-to-end analysis bundle with JSON and Markdown output.
//!
//! ```
//! use robust_doe::design::{build_plan, Factor, FactorSpec, LevelValue, ResponseSpec, ResponseTable};
//! use robust_doe::{oa, report};
//!
//! let three = |code: &str| FactorSpec {
//!     name: code.to_lowercase(),
//!     code: code.into(),
//!     levels: ["1", "2", "3"].map(LevelValue::label).to_vec(),
//! };
//! let plan = build_plan(
//!     ResponseSpec { name: "wear".into(), unit: "mm".into(), nonnegative: true },
//!     vec![Factor::control(three("A"))?, Factor::control(three("B"))?],
//!     Factor::noise(three("N"))?,
//!     oa::lookup("L9")?,
//! )?;
//! let rows = (0..9).map(|r| vec![1.0 + r as f64 * 0.1, 2.0, 3.5]).collect();
//! let table = ResponseTable::new(&plan, rows)?;
//! let options = report::AnalysisOptions::default();
//! let bundle = report::analyze(&plan, &table, None, options, report::Provenance::new(vec![], options))?;
//! assert_eq!(bundle.optimal.factors[0].best_level, 1);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod anova;
pub mod design;
pub mod oa;
pub mod optimize;
pub mod report;
pub mod special;
pub mod stats;

pub use anova::{f_p_value, one_way_anova, studentized_range_q, tukey_hsd, AnovaTable, TukeyResult};
pub use design::{build_plan, run_schedule, Factor, Plan, ResponseTable};
pub use oa::{lookup, select_array, verify, OrthogonalArray};
pub use optimize::{analyze_confirmation, optimal_levels, predict, quality_loss, Combination};
pub use stats::{main_effects, run_summaries, snr, MainEffects, SnrCriterion};

// Code blocks in the guide compile and run as doctests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/orthogonal-arrays.md")]
    mod orthogonal_arrays {}
    #[doc = include_str!("../../../book/src/crossed-designs.md")]
    mod crossed_designs {}
    #[doc = include_str!("../../../book/src/signal-to-noise.md")]
    mod signal_to_noise {}
    #[doc = include_str!("../../../book/src/anova.md")]
    mod anova {}
    #[doc = include_str!("../../../book/src/studentized-range.md")]
    mod studentized_range {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/confirmation.md")]
    mod confirmation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
