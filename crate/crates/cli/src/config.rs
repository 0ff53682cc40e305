//! Experiment configuration files.
//!
//! One TOML document can drive every subcommand; each section is optional
//! and command-line flags override whatever the file provides:
//!
//! ```toml
//! [system]
//! n = 100
//! m = 20
//! k = 10
//! lambda = 1.0
//! mu_up = 1.0
//! mu_down = "instant"   # or a positive rate
//! c = 1.0
//!
//! [run]
//! scheme = "earliest-k-of-m"
//! iterations = 100000
//! warmup = 1000
//! seed = 7
//!
//! [sweep]
//! m = { lo = 1, hi = 100 }  # or a single integer
//! objective = "analytic"
//!
//! [fl]
//! k = 10
//! seed = 7
//! ```
//!
//! Unknown keys anywhere in the document are rejected at parse time with
//! the offending line quoted in the error. Result envelopes embed the
//! fully resolved configuration in this same shape, so the
//! `metadata.config` of any emitted JSON can be written back to a file
//! and replayed through `--config`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use timely_fl::age_model::SystemParams;
use timely_fl::fl_bench::FLConfig;
use timely_fl::protocol_sim::SchemeKind;
use timely_fl::sweep_opt::{FigureId, IntRange, Objective};

use crate::CliError;

/// Top-level configuration document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl: Option<FLConfig>,
}

/// Horizon, scheme, and seeding knobs shared by the stochastic commands.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Grid bounds and objective for `sweep`. Setting `figure` switches the
/// command to one of the standard figure families instead of a custom
/// grid; the two modes are mutually exclusive.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<RangeOrFixed>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<RangeOrFixed>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_iterations: Option<usize>,
}

impl SweepSection {
    /// A figure request cannot be combined with custom-grid keys.
    pub fn validate(&self) -> Result<(), CliError> {
        let has_grid_keys = self.m.is_some()
            || self.k.is_some()
            || self.objective.is_some()
            || self.sim_iterations.is_some();
        if self.figure.is_some() && has_grid_keys {
            return Err(CliError::Usage(
                "[sweep] cannot combine `figure` with grid keys (m, k, objective, sim_iterations)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// A grid dimension: a single value or an inclusive `{ lo, hi }` span.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeOrFixed {
    Fixed(usize),
    Span { lo: usize, hi: usize },
}

impl RangeOrFixed {
    pub fn to_range(self) -> IntRange {
        match self {
            RangeOrFixed::Fixed(v) => IntRange::fixed(v),
            RangeOrFixed::Span { lo, hi } => IntRange::new(lo, hi),
        }
    }

    pub fn from_range(range: IntRange) -> Self {
        if range.lo == range.hi {
            RangeOrFixed::Fixed(range.lo)
        } else {
            RangeOrFixed::Span {
                lo: range.lo,
                hi: range.hi,
            }
        }
    }
}

/// Flag syntax: a bare integer (`40`) or an inclusive span (`1..100`,
/// `1..=100` also accepted).
impl FromStr for RangeOrFixed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once("..") {
            Some((lo, hi)) => {
                let lo = lo
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid range bound {lo:?} in {s:?}"))?;
                let hi = hi.trim().trim_start_matches('=');
                let hi = hi
                    .parse()
                    .map_err(|_| format!("invalid range bound {hi:?} in {s:?}"))?;
                Ok(RangeOrFixed::Span { lo, hi })
            }
            None => s
                .trim()
                .parse()
                .map(RangeOrFixed::Fixed)
                .map_err(|_| format!("expected an integer or lo..hi range, got {s:?}")),
        }
    }
}

/// A parsed document plus presence facts that serde defaults would mask.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Whether `[fl] seed = ...` appeared literally. `FLConfig` fills a
    /// default seed otherwise, which must not count as an explicit one.
    pub fl_seed_present: bool,
}

impl Default for LoadedConfig {
    fn default() -> Self {
        Self {
            config: ExperimentConfig::default(),
            fl_seed_present: false,
        }
    }
}

/// Reads and parses a configuration file. Parse and validation problems
/// map to usage errors (exit code 2), unreadable files to I/O errors
/// (exit code 3).
pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    // Reparse untyped for presence checks; defaulted fields are invisible
    // in the typed struct.
    let raw: toml::Value = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let fl_seed_present = raw.get("fl").and_then(|fl| fl.get("seed")).is_some();
    if let Some(system) = &config.system {
        system.validate().map_err(CliError::from)?;
    }
    if let Some(sweep) = &config.sweep {
        sweep.validate()?;
    }
    Ok(LoadedConfig {
        config,
        fl_seed_present,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document_parses() {
        let text = r#"
            [system]
            n = 100
            m = 20
            k = 10
            lambda = 1.0
            mu_up = 1.0
            mu_down = "instant"
            c = 1.0

            [run]
            scheme = "random-k"
            iterations = 50000
            seed = 7

            [sweep]
            m = 40
            k = { lo = 1, hi = 40 }
            objective = "simulated"
            sim_iterations = 1000

            [fl]
            k = 31
            seed = 3
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        let system = config.system.unwrap();
        assert_eq!((system.n, system.m, system.k), (100, 20, 10));
        assert!(system.mu_down.is_instant());
        let run = config.run.unwrap();
        assert_eq!(run.scheme, Some(SchemeKind::RandomK));
        assert_eq!(run.seed, Some(7));
        let sweep = config.sweep.unwrap();
        assert_eq!(sweep.m.unwrap().to_range(), IntRange::fixed(40));
        assert_eq!(sweep.k.unwrap().to_range(), IntRange::new(1, 40));
        assert_eq!(sweep.objective, Some(Objective::Simulated));
        let fl = config.fl.unwrap();
        assert_eq!((fl.k, fl.seed), (31, 3));
        assert_eq!(fl.d, 1000); // untouched fields keep their defaults
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "[run]\nseeed = 1\n";
        let err = toml::from_str::<ExperimentConfig>(text).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("seeed"), "{message}");
        assert!(message.contains("line 2"), "{message}");
    }

    #[test]
    fn finite_downlink_round_trips() {
        let text = "[system]\nn = 4\nm = 2\nk = 1\nlambda = 1.0\nmu_up = 1.0\nmu_down = 2.5\nc = 0.0\n";
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        let back = toml::to_string(&config).unwrap();
        let again: ExperimentConfig = toml::from_str(&back).unwrap();
        assert_eq!(config.system, again.system);
    }

    #[test]
    fn range_or_fixed_round_trips() {
        for original in [RangeOrFixed::Fixed(7), RangeOrFixed::Span { lo: 2, hi: 9 }] {
            let range = original.to_range();
            let back = RangeOrFixed::from_range(range);
            assert_eq!(back.to_range(), range);
        }
    }

    #[test]
    fn range_flag_syntax() {
        assert_eq!("40".parse::<RangeOrFixed>().unwrap().to_range(), IntRange::fixed(40));
        assert_eq!(
            "1..100".parse::<RangeOrFixed>().unwrap().to_range(),
            IntRange::new(1, 100)
        );
        assert_eq!(
            "1..=100".parse::<RangeOrFixed>().unwrap().to_range(),
            IntRange::new(1, 100)
        );
        assert!("".parse::<RangeOrFixed>().is_err());
        assert!("1..".parse::<RangeOrFixed>().is_err());
        assert!("x..2".parse::<RangeOrFixed>().is_err());
        assert!("-3".parse::<RangeOrFixed>().is_err());
    }

    #[test]
    fn figure_excludes_grid_keys() {
        let text = "[sweep]\nfigure = \"fig3\"\nm = 40\n";
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        assert!(config.sweep.unwrap().validate().is_err());
        let alone: ExperimentConfig = toml::from_str("[sweep]\nfigure = \"fig6\"\n").unwrap();
        assert!(alone.sweep.unwrap().validate().is_ok());
    }
}
