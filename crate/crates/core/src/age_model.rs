//! Closed-form average age of information per client.
//!
//! The protocol proceeds in iterations. In each iteration the server waits
//! for `m` of the `n` clients to become available (availability gaps are
//! i.i.d. exponential with rate `lambda`, so the wait is the order statistic
//! `Z_{m:n}`), broadcasts the current model, and aggregates the earliest `k`
//! of the `m` returned updates. Each selected client spends a deterministic
//! compute time `c` followed by an exponential uplink delay with rate
//! `mu_up`; the service phase therefore lasts `S = c + X_{k:m}` and a whole
//! iteration lasts `Y = Z_{m:n} + S`.
//!
//! A given client delivers in an iteration with probability `k/n`, so the
//! number of iterations between its consecutive deliveries is geometric.
//! Substituting the geometric moments and the exponential order-statistic
//! moments into the age-area decomposition gives the exact long-run average
//! age of a client as a sum of three terms:
//!
//! ```text
//! age = delta1 + delta2 + delta3
//! delta1 = (1/k) sum_{i=1}^{k} E[X_{i:m}]      (mean uplink delay of a
//!                                               delivering client)
//! delta2 = ((2n - k) / (2k)) * E[Y]
//! delta3 = Var[Y] / (2 E[Y])
//! ```
//!
//! The analytic model requires the downlink broadcast to be instantaneous;
//! a finite downlink rate is supported by the event-driven simulator only.
//!
//! [`age_approx`] evaluates the large-population limit of the same quantity
//! at fixed fractions `alpha = m/n` and `beta = k/m`, where the harmonic
//! sums are replaced by logarithms and `delta3` vanishes.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::{exp_order_mean, exp_order_var, mean_order_prefix_avg};

/// Downlink discipline: the analytic model assumes the broadcast reaches
/// clients instantly; the simulator additionally supports an exponential
/// per-client downlink delay with a finite rate.
///
/// Serialized as the string `"instant"` or as the positive rate itself,
/// matching the config-file syntax.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Downlink {
    #[default]
    Instant,
    Finite(f64),
}

impl Downlink {
    pub fn is_instant(&self) -> bool {
        matches!(self, Downlink::Instant)
    }
}

impl Serialize for Downlink {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Downlink::Instant => serializer.serialize_str("instant"),
            Downlink::Finite(rate) => serializer.serialize_f64(*rate),
        }
    }
}

impl<'de> Deserialize<'de> for Downlink {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct DownlinkVisitor;

        impl Visitor<'_> for DownlinkVisitor {
            type Value = Downlink;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"instant\" or a positive downlink rate")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Downlink, E> {
                if v == "instant" {
                    Ok(Downlink::Instant)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Downlink, E> {
                if v.is_finite() && v > 0.0 {
                    Ok(Downlink::Finite(v))
                } else {
                    Err(E::invalid_value(de::Unexpected::Float(v), &self))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Downlink, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Downlink, E> {
                self.visit_f64(v as f64)
            }
        }

        deserializer.deserialize_any(DownlinkVisitor)
    }
}

/// Population and stochastic parameters of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Total number of clients.
    pub n: usize,
    /// Availability quorum: the server waits for `m` available clients.
    pub m: usize,
    /// Aggregation count: the earliest `k` updates close an iteration.
    pub k: usize,
    /// Rate of the exponential availability gaps.
    pub lambda: f64,
    /// Rate of the exponential uplink delay.
    pub mu_up: f64,
    /// Downlink discipline (instantaneous unless configured otherwise).
    #[serde(default)]
    pub mu_down: Downlink,
    /// Deterministic local compute duration.
    pub c: f64,
}

impl SystemParams {
    /// Convenience constructor for the instantaneous-downlink model;
    /// validates all constraints.
    pub fn new(n: usize, m: usize, k: usize, lambda: f64, mu_up: f64, c: f64) -> Result<Self> {
        let params = Self {
            n,
            m,
            k,
            lambda,
            mu_up,
            mu_down: Downlink::Instant,
            c,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks `1 <= k <= m <= n`, positive rates, and `c >= 0`.
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > self.m || self.m > self.n {
            return Err(Error::Domain(format!(
                "client counts must satisfy 1 <= k <= m <= n, got k={}, m={}, n={}",
                self.k, self.m, self.n
            )));
        }
        for (name, rate) in [("lambda", self.lambda), ("mu_up", self.mu_up)] {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be a positive rate, got {rate}"
                )));
            }
        }
        if let Downlink::Finite(rate) = self.mu_down {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::Domain(format!(
                    "mu_down must be a positive rate or \"instant\", got {rate}"
                )));
            }
        }
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(Error::Domain(format!(
                "compute duration c must be >= 0, got {}",
                self.c
            )));
        }
        Ok(())
    }

    fn require_instant_downlink(&self) -> Result<()> {
        if self.mu_down.is_instant() {
            Ok(())
        } else {
            Err(Error::FiniteDownlink)
        }
    }
}

/// Moments of the per-client update cycle: the number of iterations `M`
/// between a client's consecutive deliveries is geometric (support starting
/// at 1) with success probability `p = p1 * p2`, where `p1` is the chance of
/// being among the `m` available clients and `p2` the chance of being among
/// the earliest `k` of those.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateCycleModel {
    pub p1: f64,
    pub p2: f64,
    pub p: f64,
    pub mean_m: f64,
    pub second_moment_m: f64,
}

/// Geometric moments of the inter-delivery iteration count for a delivery
/// probability of `k/n` per iteration.
///
/// This entry point sees only the overall probability, so the two-stage
/// split is degenerate: `p1 = 1`, `p2 = k/n`. Use [`UpdateCycleModel::from_params`]
/// for the availability/aggregation factorization.
pub fn geometric_moments(n: usize, k: usize) -> Result<UpdateCycleModel> {
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "delivery count must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    Ok(UpdateCycleModel::from_split(1.0, k as f64 / n as f64))
}

impl UpdateCycleModel {
    /// Two-stage factorization `p1 = m/n` (availability), `p2 = k/m`
    /// (earliest-k aggregation).
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::from_split(
            params.m as f64 / params.n as f64,
            params.k as f64 / params.m as f64,
        ))
    }

    fn from_split(p1: f64, p2: f64) -> Self {
        let p = p1 * p2;
        Self {
            p1,
            p2,
            p,
            mean_m: 1.0 / p,
            second_moment_m: (2.0 - p) / (p * p),
        }
    }
}

/// The three additive terms of the exact average age, plus the iteration-time
/// moments they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeBreakdown {
    /// Mean uplink delay of a delivering client, `(1/k) sum E[X_{i:m}]`.
    pub delta1: f64,
    /// `((2n - k) / (2k)) * E[Y]`.
    pub delta2: f64,
    /// `Var[Y] / (2 E[Y])`.
    pub delta3: f64,
    /// `delta1 + delta2 + delta3`.
    pub total: f64,
    /// `E[Y] = c + E[X_{k:m}] + E[Z_{m:n}]`.
    pub mean_y: f64,
    /// `Var[Y] = Var[X_{k:m}] + Var[Z_{m:n}]`.
    pub var_y: f64,
}

/// Continuous selection fractions for the large-population approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    /// Availability fraction `m/n`, strictly inside (0, 1).
    pub alpha: f64,
    /// Aggregation fraction `k/m`, strictly inside (0, 1).
    pub beta: f64,
}

impl ApproxParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Both fractions must lie strictly inside (0, 1): the approximation's
    /// logarithms diverge at the boundary.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::Domain(format!(
                    "{name} must lie strictly in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean and variance of the iteration duration
/// `Y = Z_{m:n} + c + X_{k:m}` under instantaneous downlink.
///
/// The wait and service phases are independent, so the variances add.
pub fn iteration_time_moments(params: &SystemParams) -> Result<(f64, f64)> {
    params.validate()?;
    params.require_instant_downlink()?;
    let mean = params.c
        + exp_order_mean(params.k, params.m, params.mu_up)?
        + exp_order_mean(params.m, params.n, params.lambda)?;
    let var = exp_order_var(params.k, params.m, params.mu_up)?
        + exp_order_var(params.m, params.n, params.lambda)?;
    Ok((mean, var))
}

/// Mean uplink delay of a client *conditioned on delivering*: the delivering
/// client is equally likely to be any of the `k` earliest among `m`, so this
/// is the average of the first `k` order-statistic means.
pub fn mean_conditional_uplink(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    mean_order_prefix_avg(params.k, params.m, params.mu_up)
}

/// Exact long-run average age of information of a single client.
pub fn age_exact(params: &SystemParams) -> Result<AgeBreakdown> {
    params.validate()?;
    params.require_instant_downlink()?;
    let (mean_y, var_y) = iteration_time_moments(params)?;
    let delta1 = mean_conditional_uplink(params)?;
    let delta2 = (2 * params.n - params.k) as f64 / (2 * params.k) as f64 * mean_y;
    let delta3 = var_y / (2.0 * mean_y);
    Ok(AgeBreakdown {
        delta1,
        delta2,
        delta3,
        total: delta1 + delta2 + delta3,
        mean_y,
        var_y,
    })
}

/// Large-population limit of [`age_exact`] at fixed fractions
/// `alpha = m/n`, `beta = k/m`:
///
/// ```text
/// age ~ 1/mu_up + (2 - ab) c / (2ab)
///       - ((2 - ab) / (2ab lambda))      * ln(1 - alpha)
///       + ((alpha (2 - beta) - 2) / (2ab mu_up)) * ln(1 - beta)
/// ```
///
/// with `ab = alpha * beta`. Natural logarithms throughout.
pub fn age_approx(approx: &ApproxParams, lambda: f64, mu_up: f64, c: f64) -> Result<f64> {
    approx.validate()?;
    for (name, rate) in [("lambda", lambda), ("mu_up", mu_up)] {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::Domain(format!(
                "{name} must be a positive rate, got {rate}"
            )));
        }
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Domain(format!(
            "compute duration c must be >= 0, got {c}"
        )));
    }
    let (alpha, beta) = (approx.alpha, approx.beta);
    let ab = alpha * beta;
    Ok(1.0 / mu_up + (2.0 - ab) * c / (2.0 * ab)
        - (2.0 - ab) / (2.0 * ab * lambda) * (1.0 - alpha).ln()
        + (alpha * (2.0 - beta) - 2.0) / (2.0 * ab * mu_up) * (1.0 - beta).ln())
}
