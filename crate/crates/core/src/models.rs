//! Parametric competing-risks models.
//!
//! A [`CompetingRisksModel`] holds one cause-specific distribution per cause.
//! Event times are generated as independent latent times whose minimum is
//! observed, so the all-cause survival is the product of the two marginal
//! survival functions and the cumulative incidence of cause `j` is
//!
//! ```text
//! F_j(t) = ∫₀ᵗ S(u) λ_j(u) du,     S(u) = S₁(u) S₂(u).
//! ```
//!
//! Truth values (CIF, restricted mean time lost, variance of restricted time
//! lost) are computed by adaptive quadrature for every family. For Weibull
//! causes sharing one shape there are also closed forms in terms of the
//! incomplete gamma function; those are derived from the integrals above and
//! kept only as a cross-check and fast path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    gamma, integrate_split, normal_cdf, normal_pdf, normal_quantile, regularized_lower_gamma,
    RngStream, ToleranceConfig,
};

/// Which of the two causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    /// The event of interest (`j = 1`).
    Interest,
    /// The competing event (`j = 2`).
    Competing,
}

impl Cause {
    pub fn code(self) -> u8 {
        match self {
            Cause::Interest => 1,
            Cause::Competing => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Cause::Interest),
            2 => Ok(Cause::Competing),
            other => Err(Error::Input(format!("cause must be 1 or 2, got {other}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Cause::Interest => Cause::Competing,
            Cause::Competing => Cause::Interest,
        }
    }
}

/// One cause-specific event-time distribution.
///
/// Weibull uses the rate parameterisation `λ(t) = k ρᵏ tᵏ⁻¹`, so `1/ρ` is the
/// scale. Gompertz has hazard `b·exp(a t)` with `shape = a`, `rate = b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CauseSpecificParams {
    Weibull { shape: f64, rate: f64 },
    Gompertz { shape: f64, rate: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
}

impl CauseSpecificParams {
    pub fn weibull(shape: f64, rate: f64) -> Self {
        CauseSpecificParams::Weibull { shape, rate }
    }

    pub fn exponential(rate: f64) -> Self {
        CauseSpecificParams::Weibull { shape: 1.0, rate }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            CauseSpecificParams::Weibull { shape, rate } => ok(shape) && ok(rate),
            CauseSpecificParams::Gompertz { shape, rate } => ok(shape) && ok(rate),
            CauseSpecificParams::LogNormal { meanlog, sdlog } => meanlog.is_finite() && ok(sdlog),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid cause-specific parameters: {self:?}")))
        }
    }

    /// Cause-specific hazard λ(t).
    pub fn hazard(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("hazard requires t >= 0, got {t}")));
        }
        Ok(match *self {
            CauseSpecificParams::Weibull { shape, rate } => {
                if t == 0.0 {
                    if shape < 1.0 {
                        return Err(Error::Domain(
                            "Weibull hazard with shape < 1 is unbounded at t = 0".into(),
                        ));
                    }
                    if shape == 1.0 {
                        rate
                    } else {
                        0.0
                    }
                } else {
                    shape * rate.powf(shape) * t.powf(shape - 1.0)
                }
            }
            CauseSpecificParams::Gompertz { shape, rate } => rate * (shape * t).exp(),
            CauseSpecificParams::LogNormal { .. } => {
                if t == 0.0 {
                    0.0
                } else {
                    self.hazard_times_t(t) / t
                }
            }
        })
    }

    /// `t·λ(t)`, bounded near zero for every family; used to integrate
    /// against Weibull hazards with shape below one.
    fn hazard_times_t(&self, t: f64) -> f64 {
        match *self {
            CauseSpecificParams::Weibull { shape, rate } => shape * (rate * t).powf(shape),
            CauseSpecificParams::Gompertz { shape, rate } => rate * t * (shape * t).exp(),
            CauseSpecificParams::LogNormal { meanlog, sdlog } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let z = (t.ln() - meanlog) / sdlog;
                let surv = normal_cdf(-z);
                if surv > 0.0 {
                    normal_pdf(z) / (sdlog * surv)
                } else {
                    // Mills-ratio asymptote
                    z / sdlog
                }
            }
        }
    }

    /// Cumulative hazard Λ(t).
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            CauseSpecificParams::Weibull { shape, rate } => (rate * t).powf(shape),
            CauseSpecificParams::Gompertz { shape, rate } => rate / shape * (shape * t).exp_m1(),
            CauseSpecificParams::LogNormal { meanlog, sdlog } => {
                -normal_cdf(-(t.ln() - meanlog) / sdlog).ln()
            }
        }
    }

    /// Marginal survival exp(-Λ(t)) of the latent time.
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            CauseSpecificParams::LogNormal { meanlog, sdlog } if t > 0.0 => {
                normal_cdf(-(t.ln() - meanlog) / sdlog)
            }
            _ => (-self.cumulative_hazard(t)).exp(),
        }
    }

    /// Latent time with marginal survival equal to `u` (inverse-CDF draw).
    pub fn time_at_survival(&self, u: f64) -> f64 {
        match *self {
            CauseSpecificParams::Weibull { shape, rate } => (-u.ln()).powf(1.0 / shape) / rate,
            CauseSpecificParams::Gompertz { shape, rate } => {
                (shape * (-u.ln()) / rate).ln_1p() / shape
            }
            CauseSpecificParams::LogNormal { meanlog, sdlog } => {
                // u is in (0, 1) so the quantile is always defined
                let z = -normal_quantile(u).unwrap_or(0.0);
                (meanlog + sdlog * z).exp()
            }
        }
    }

    /// Shape exponent `a < 1` for which `t = u^{1/a}` removes an integrable
    /// singularity of the hazard at the origin.
    fn singular_exponent(&self) -> Option<f64> {
        match *self {
            CauseSpecificParams::Weibull { shape, .. } if shape < 1.0 => Some(shape),
            _ => None,
        }
    }
}

/// Two-cause parametric model for one trial arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetingRisksModel {
    pub cause1: CauseSpecificParams,
    pub cause2: CauseSpecificParams,
}

fn check_time(t: f64, what: &str) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a nonnegative time, got {t}")))
    }
}

impl CompetingRisksModel {
    pub fn new(cause1: CauseSpecificParams, cause2: CauseSpecificParams) -> Result<Self> {
        let model = CompetingRisksModel { cause1, cause2 };
        model.validate()?;
        Ok(model)
    }

    /// Both causes Weibull.
    pub fn weibull(shape1: f64, rate1: f64, shape2: f64, rate2: f64) -> Result<Self> {
        Self::new(
            CauseSpecificParams::weibull(shape1, rate1),
            CauseSpecificParams::weibull(shape2, rate2),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.cause1.validate()?;
        self.cause2.validate()
    }

    pub fn params(&self, cause: Cause) -> &CauseSpecificParams {
        match cause {
            Cause::Interest => &self.cause1,
            Cause::Competing => &self.cause2,
        }
    }

    pub fn hazard(&self, cause: Cause, t: f64) -> Result<f64> {
        self.params(cause).hazard(t)
    }

    pub fn all_cause_survival(&self, t: f64) -> Result<f64> {
        check_time(t, "all-cause survival")?;
        Ok(self.cause1.survival(t) * self.cause2.survival(t))
    }

    fn surv_unchecked(&self, t: f64) -> f64 {
        self.cause1.survival(t) * self.cause2.survival(t)
    }

    /// `∫_lo^hi w(t) S(t) λ_cause(t) dt`, i.e. the expectation of `w(T)` over
    /// the cause-specific sub-density. Kinks of `w` must be listed in
    /// `breakpoints`.
    pub fn integrate_subdensity<W: Fn(f64) -> f64>(
        &self,
        cause: Cause,
        lo: f64,
        hi: f64,
        weight: W,
        breakpoints: &[f64],
        cfg: &ToleranceConfig,
    ) -> Result<f64> {
        check_time(lo, "sub-density integration")?;
        if hi <= lo {
            return Ok(0.0);
        }
        let params = *self.params(cause);
        match params.singular_exponent() {
            None => {
                let f = |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    weight(t) * self.surv_unchecked(t) * params.hazard_times_t(t) / t
                };
                integrate_split(f, lo, hi, breakpoints, cfg)
            }
            Some(a) => {
                // t = u^{1/a}: dt = (1/a) t/u du, and t·λ(t) ~ u is bounded
                let inv = 1.0 / a;
                let f = |u: f64| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    let t = u.powf(inv);
                    weight(t) * self.surv_unchecked(t) * params.hazard_times_t(t) * inv / u
                };
                let cuts: Vec<f64> = breakpoints.iter().map(|b| b.max(0.0).powf(a)).collect();
                integrate_split(f, lo.powf(a), hi.powf(a), &cuts, cfg)
            }
        }
    }

    /// Cumulative incidence F_j(t).
    pub fn cif(&self, cause: Cause, t: f64) -> Result<f64> {
        self.cif_with(cause, t, &ToleranceConfig::default())
    }

    pub fn cif_with(&self, cause: Cause, t: f64, cfg: &ToleranceConfig) -> Result<f64> {
        check_time(t, "cif")?;
        self.integrate_subdensity(cause, 0.0, t, |_| 1.0, &[], cfg)
    }

    /// Subdistribution hazard f_j(t) / (1 - F_j(t)).
    pub fn subdistribution_hazard(&self, cause: Cause, t: f64) -> Result<f64> {
        let density = self.surv_unchecked(t) * self.hazard(cause, t)?;
        Ok(density / (1.0 - self.cif(cause, t)?))
    }

    /// Restricted mean time lost μ_j(τ) = ∫₀^τ F_j(t) dt = E[(τ - T)⁺; cause j].
    pub fn rmtl(&self, cause: Cause, tau: f64) -> Result<f64> {
        self.rmtl_with(cause, tau, &ToleranceConfig::default())
    }

    pub fn rmtl_with(&self, cause: Cause, tau: f64, cfg: &ToleranceConfig) -> Result<f64> {
        check_time(tau, "rmtl")?;
        self.integrate_subdensity(cause, 0.0, tau, |u| tau - u, &[], cfg)
    }

    /// Variance σ_j²(τ) of the restricted time lost `X = (τ - T)⁺·1{cause j}`.
    pub fn rtl_variance(&self, cause: Cause, tau: f64) -> Result<f64> {
        self.rtl_variance_with(cause, tau, &ToleranceConfig::default())
    }

    pub fn rtl_variance_with(&self, cause: Cause, tau: f64, cfg: &ToleranceConfig) -> Result<f64> {
        check_time(tau, "rtl variance")?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        let mu = self.rmtl_with(cause, tau, cfg)?;
        let mass = self.cif_with(cause, tau, cfg)?;
        // Centred second moment: no cancellation between E[X²] and μ².
        let centred =
            self.integrate_subdensity(cause, 0.0, tau, |u| (tau - u - mu).powi(2), &[], cfg)?;
        Ok((centred + mu * mu * (1.0 - mass)).max(0.0))
    }

    /// Restricted standard deviation √σ_j²(τ).
    pub fn rsd(&self, cause: Cause, tau: f64) -> Result<f64> {
        Ok(self.rtl_variance(cause, tau)?.sqrt())
    }

    /// Closed forms, available when both causes are Weibull with one shape.
    pub fn common_weibull_shape(&self) -> Option<(f64, f64, f64)> {
        match (self.cause1, self.cause2) {
            (
                CauseSpecificParams::Weibull { shape: k1, rate: r1 },
                CauseSpecificParams::Weibull { shape: k2, rate: r2 },
            ) if k1 == k2 => Some((k1, r1, r2)),
            _ => None,
        }
    }

    /// Draw one `(time, cause)` from independent latent cause times; a tie
    /// goes to the event of interest.
    pub fn sample_event(&self, rng: &mut RngStream) -> (f64, Cause) {
        let t1 = self.cause1.time_at_survival(rng.uniform());
        let t2 = self.cause2.time_at_survival(rng.uniform());
        if t1 <= t2 {
            (t1, Cause::Interest)
        } else {
            (t2, Cause::Competing)
        }
    }
}

fn closed_form_args(shape: f64, rho1: f64, rho2: f64, tau: f64) -> Result<()> {
    for (name, v) in [("shape", shape), ("rho1", rho1), ("rho2", rho2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Input(format!("{name} must be positive and finite, got {v}")));
        }
    }
    check_time(tau, "closed-form rmtl")
}

struct CommonShape {
    /// ρ_j^k / (ρ₁^k + ρ₂^k): eventual probability of cause j.
    share: f64,
    /// ∫₀^τ S(t) dt
    surv_area: f64,
    /// ∫₀^τ t S(t) dt
    surv_moment: f64,
}

fn common_shape_integrals(shape: f64, rho1: f64, rho2: f64, cause: Cause, tau: f64) -> Result<CommonShape> {
    let w1 = rho1.powf(shape);
    let w2 = rho2.powf(shape);
    let total = w1 + w2;
    let share = match cause {
        Cause::Interest => w1 / total,
        Cause::Competing => w2 / total,
    };
    // With u = Λ t^k:  ∫₀^τ t^m e^{-Λ t^k} dt = γ((m+1)/k, Λ τ^k) / (k Λ^{(m+1)/k})
    let x = total * tau.powf(shape);
    let a1 = 1.0 / shape;
    let a2 = 2.0 / shape;
    let surv_area = if tau == 0.0 {
        0.0
    } else {
        gamma(a1) * regularized_lower_gamma(a1, x)? / (shape * total.powf(a1))
    };
    let surv_moment = if tau == 0.0 {
        0.0
    } else {
        gamma(a2) * regularized_lower_gamma(a2, x)? / (shape * total.powf(a2))
    };
    Ok(CommonShape { share, surv_area, surv_moment })
}

/// Closed-form μ_j(τ) when both causes are Weibull with common shape `k`.
///
/// With `Λ = ρ₁ᵏ + ρ₂ᵏ`, `F_j(t) = (ρ_jᵏ/Λ)(1 - e^{-Λtᵏ})`, hence
/// `μ_j(τ) = (ρ_jᵏ/Λ) [τ - γ(1/k, Λτᵏ) / (k Λ^{1/k})]`.
pub fn rmtl_weibull_closed(shape: f64, rho1: f64, rho2: f64, cause: Cause, tau: f64) -> Result<f64> {
    closed_form_args(shape, rho1, rho2, tau)?;
    let c = common_shape_integrals(shape, rho1, rho2, cause, tau)?;
    Ok(c.share * (tau - c.surv_area))
}

/// Closed-form σ_j²(τ) when both causes are Weibull with common shape `k`:
/// `σ² = 2τμ - μ² - 2(ρ_jᵏ/Λ)[τ²/2 - γ(2/k, Λτᵏ) / (k Λ^{2/k})]`.
pub fn rtl_variance_weibull_closed(
    shape: f64,
    rho1: f64,
    rho2: f64,
    cause: Cause,
    tau: f64,
) -> Result<f64> {
    closed_form_args(shape, rho1, rho2, tau)?;
    let c = common_shape_integrals(shape, rho1, rho2, cause, tau)?;
    let mu = c.share * (tau - c.surv_area);
    let t_moment = c.share * (0.5 * tau * tau - c.surv_moment);
    Ok((2.0 * tau * mu - 2.0 * t_moment - mu * mu).max(0.0))
}

impl CompetingRisksModel {
    /// Closed-form μ_j(τ); errors unless both causes share a Weibull shape.
    pub fn rmtl_closed(&self, cause: Cause, tau: f64) -> Result<f64> {
        let (k, r1, r2) = self.common_weibull_shape().ok_or_else(unequal_shapes)?;
        rmtl_weibull_closed(k, r1, r2, cause, tau)
    }

    pub fn rtl_variance_closed(&self, cause: Cause, tau: f64) -> Result<f64> {
        let (k, r1, r2) = self.common_weibull_shape().ok_or_else(unequal_shapes)?;
        rtl_variance_weibull_closed(k, r1, r2, cause, tau)
    }
}

fn unequal_shapes() -> Error {
    Error::Unsupported(
        "closed forms need Weibull causes with a common shape; use rmtl/rtl_variance (quadrature)"
            .into(),
    )
}
