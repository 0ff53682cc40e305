//! Grid sweeps and argmin search over the protocol parameters `(m, k)`.
//!
//! The long-run average age is evaluated on an integer grid either from
//! the closed form (exact, deterministic, the default) or by running the
//! event-driven simulator at each grid point. The argmin favors cheaper
//! operating points on exact ties: smaller `k` first, then smaller `m`.
//!
//! [`reproduce_figure`] packages the four standard experiment families —
//! sweeping the uplink rate, the availability rate, the compute duration,
//! or the availability quorum itself — and emits one age-versus-`k` curve
//! per family member, anchored at that member's optimal `m`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::age_model::{age_exact, iteration_time_moments, SystemParams};
use crate::error::{Error, Result};
use crate::protocol_sim::{default_warmup, simulate, SchemeKind};

/// Inclusive integer range; a fixed value is the degenerate `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

impl IntRange {
    pub fn fixed(v: usize) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }
}

/// How grid points are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Closed-form age (exact and deterministic).
    Analytic,
    /// Monte-Carlo age from the simulator.
    Simulated,
}

/// One grid-sweep request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Population and rate parameters; the `m` and `k` fields are
    /// placeholders overridden at every grid point.
    pub base: SystemParams,
    pub sweep_m: IntRange,
    /// `None` sweeps all `k <= m` at each `m`; an explicit range is
    /// intersected with `k <= m` pointwise.
    pub sweep_k: Option<IntRange>,
    pub objective: Objective,
    /// Simulation horizon per grid point (simulated objective only).
    pub sim_iterations: usize,
    /// Warmup override; `None` applies the default convention.
    pub warmup: Option<usize>,
    pub seed: u64,
}

impl SweepSpec {
    /// Analytic full-`(m, k)` sweep over `1..=n`.
    pub fn full_grid(base: SystemParams) -> Self {
        Self {
            sweep_m: IntRange::new(1, base.n),
            sweep_k: None,
            objective: Objective::Analytic,
            sim_iterations: 0,
            warmup: None,
            seed: 0,
            base,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.base.n;
        for (name, range) in [("m", Some(self.sweep_m)), ("k", self.sweep_k)] {
            if let Some(IntRange { lo, hi }) = range {
                if lo < 1 || hi > n || lo > hi {
                    return Err(Error::Domain(format!(
                        "swept {name} range {lo}..={hi} must lie within 1..={n}"
                    )));
                }
            }
        }
        if self.objective == Objective::Simulated && self.sim_iterations == 0 {
            return Err(Error::Domain(
                "simulated sweeps need sim_iterations > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub k: usize,
    pub age: f64,
    pub mean_iteration_time: f64,
}

/// All evaluated grid points plus the located optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Every valid grid point, ascending by `(m, k)`.
    pub rows: Vec<SweepRow>,
    pub argmin: SweepRow,
    pub objective: Objective,
}

/// Picks the row with the smallest age; exact ties go to the smaller `k`,
/// then the smaller `m`.
pub fn select_argmin(rows: &[SweepRow]) -> Option<SweepRow> {
    let mut best: Option<SweepRow> = None;
    for &row in rows {
        let replace = match best {
            None => true,
            Some(b) => row.age < b.age || (row.age == b.age && (row.k, row.m) < (b.k, b.m)),
        };
        if replace {
            best = Some(row);
        }
    }
    best
}

/// Per-grid-point seed: varies the master seed by both coordinates so no
/// two points of one sweep share random draws.
fn point_seed(seed: u64, m: usize, k: usize) -> u64 {
    seed ^ (((m as u64) << 32) | k as u64)
}

/// Evaluates the age objective over the requested grid and returns all
/// rows plus the argmin. Grid points with `k > m` are skipped.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    for m in spec.sweep_m.lo..=spec.sweep_m.hi {
        let k_range = spec.sweep_k.unwrap_or(IntRange::new(1, m));
        for k in k_range.lo..=k_range.hi.min(m) {
            let params = SystemParams { m, k, ..spec.base };
            params.validate()?;
            let row = match spec.objective {
                Objective::Analytic => {
                    let breakdown = age_exact(&params)?;
                    SweepRow {
                        m,
                        k,
                        age: breakdown.total,
                        mean_iteration_time: iteration_time_moments(&params)?.0,
                    }
                }
                Objective::Simulated => {
                    let warmup = spec
                        .warmup
                        .unwrap_or_else(|| default_warmup(spec.sim_iterations));
                    let result = simulate(
                        &params,
                        SchemeKind::EarliestKofM,
                        spec.sim_iterations,
                        warmup,
                        point_seed(spec.seed, m, k),
                    )?;
                    SweepRow {
                        m,
                        k,
                        age: result.mean_avg_age,
                        mean_iteration_time: result.mean_iteration_time,
                    }
                }
            };
            rows.push(row);
        }
    }
    let argmin = select_argmin(&rows).ok_or_else(|| {
        Error::Domain("sweep grid is empty (no point satisfies k <= m)".into())
    })?;
    Ok(SweepResult {
        rows,
        argmin,
        objective: spec.objective,
    })
}

/// The four standard sweep families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Vary the uplink rate over {0.1, 0.2, 0.5, 1, 5}.
    Fig3,
    /// Vary the availability rate over {0.1, 0.2, 0.5, 1, 5}.
    Fig4,
    /// Vary the compute duration over {0.1, 1, 5, 10}.
    Fig5,
    /// Fix the quorum m at {20, 40, 60, 80, 100} and sweep k only.
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(FigureId::Fig3),
            "fig4" => Ok(FigureId::Fig4),
            "fig5" => Ok(FigureId::Fig5),
            "fig6" => Ok(FigureId::Fig6),
            other => Err(Error::Domain(format!(
                "unknown figure {other:?}; expected fig3, fig4, fig5, or fig6"
            ))),
        }
    }
}

/// One curve of a figure family: age versus `k` at the curve's quorum
/// `m`, annotated with the family member's optimal operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureCurve {
    /// Which parameter this family varies ("mu_up", "lambda", "c", "m").
    pub param_name: &'static str,
    pub param_value: f64,
    pub optimal_m: usize,
    pub optimal_k: usize,
    pub optimal_age: f64,
    /// Age at every `k <= m` with `m` fixed at the curve's quorum.
    pub rows: Vec<SweepRow>,
}

/// Runs one figure family analytically: for each member, finds the
/// age-optimal `(m, k)` (over the full grid, or at the member's fixed `m`
/// for the quorum family) and extracts the age-versus-`k` curve at that
/// `m`. Members whose fixed `m` exceeds `n` are skipped.
pub fn reproduce_figure(figure: FigureId, n: usize, seed: u64) -> Result<Vec<FigureCurve>> {
    if n < 2 {
        return Err(Error::Domain(format!("figure sweeps need n >= 2, got {n}")));
    }
    let base = |lambda: f64, mu_up: f64, c: f64| SystemParams {
        n,
        m: n,
        k: 1,
        lambda,
        mu_up,
        mu_down: crate::age_model::Downlink::Instant,
        c,
    };
    let mut curves = Vec::new();
    match figure {
        FigureId::Fig3 => {
            for mu_up in [0.1, 0.2, 0.5, 1.0, 5.0] {
                curves.push(full_grid_curve("mu_up", mu_up, base(1.0, mu_up, 1.0), seed)?);
            }
        }
        FigureId::Fig4 => {
            for lambda in [0.1, 0.2, 0.5, 1.0, 5.0] {
                curves.push(full_grid_curve("lambda", lambda, base(lambda, 1.0, 1.0), seed)?);
            }
        }
        FigureId::Fig5 => {
            for c in [0.1, 1.0, 5.0, 10.0] {
                curves.push(full_grid_curve("c", c, base(1.0, 1.0, c), seed)?);
            }
        }
        FigureId::Fig6 => {
            for m in [20usize, 40, 60, 80, 100] {
                if m > n {
                    continue;
                }
                let spec = SweepSpec {
                    sweep_m: IntRange::fixed(m),
                    seed,
                    ..SweepSpec::full_grid(base(1.0, 1.0, 1.0))
                };
                let result = sweep(&spec)?;
                curves.push(FigureCurve {
                    param_name: "m",
                    param_value: m as f64,
                    optimal_m: result.argmin.m,
                    optimal_k: result.argmin.k,
                    optimal_age: result.argmin.age,
                    rows: result.rows,
                });
            }
        }
    }
    Ok(curves)
}

fn full_grid_curve(
    param_name: &'static str,
    param_value: f64,
    base: SystemParams,
    seed: u64,
) -> Result<FigureCurve> {
    let spec = SweepSpec {
        seed,
        ..SweepSpec::full_grid(base)
    };
    let result = sweep(&spec)?;
    let best = result.argmin;
    let rows = result
        .rows
        .into_iter()
        .filter(|row| row.m == best.m)
        .collect();
    Ok(FigureCurve {
        param_name,
        param_value,
        optimal_m: best.m,
        optimal_k: best.k,
        optimal_age: best.age,
        rows,
    })
}
