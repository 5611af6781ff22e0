use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value violates the domain of its parameter.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The inputs are individually valid but do not form a consistent set.
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    /// The closed form has no finite value (undamped resonance, zero impedance).
    #[error("singular evaluation: {0}")]
    Singular(&'static str),

    #[error("invalid sweep data: {0}")]
    InvalidSweep(String),

    #[error("half-power bandwidth not bracketed by the sweep ({side} crossing missing)")]
    BandwidthNotBracketed { side: &'static str },

    #[error("load optimum not bracketed: maximum at the sweep boundary ({r_load_ohm} ohm)")]
    OptimumNotBracketed { r_load_ohm: f64 },

    #[error(
        "simulation did not settle: last two peaks differ by {drift_percent:.3}% (limit 1%)"
    )]
    NotSettled { drift_percent: f64 },

    #[error("simulation energy balance residual {residual:e} exceeds 1e-3")]
    EnergyBalance { residual: f64 },

    #[error("sweep point at omega = {omega_rad_per_s} rad/s failed: {source}")]
    SweepPoint {
        omega_rad_per_s: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True when the failure is a simulation that never reached steady state,
    /// including a sweep point that failed that way.
    pub fn is_not_settled(&self) -> bool {
        match self {
            Error::NotSettled { .. } => true,
            Error::SweepPoint { source, .. } => source.is_not_settled(),
            _ => false,
        }
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, value, "must be finite"))
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, value, "must be > 0"))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<f64> {
    require_finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, value, "must be >= 0"))
    }
}
