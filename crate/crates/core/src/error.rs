use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} must be {requirement}, got {value}")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("non-physical sideband ratio {0}: must exceed 1")]
    NonPhysicalRatio(f64),
    #[error("damped linewidth {gamma_m_hz} Hz leaves the Γ0 ≪ Γm ≪ κ regime (κ = {kappa_hz} Hz)")]
    RegimeViolation { gamma_m_hz: f64, kappa_hz: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no peak above the scatter of the spectrum")]
    FlatSpectrum,
    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("singular normal matrix")]
    SingularNormalMatrix,
    #[error("region contains no bins")]
    EmptyRegion,
    #[error("band [{lo_hz}, {hi_hz}] Hz is not inside the periodogram window")]
    BandOutsideWindow { lo_hz: f64, hi_hz: f64 },
    #[error("calibration tone not found")]
    MissingTone,
    #[error("extrapolation needs >= 3 points spanning >= 3x in damping power (got {points} points, span {span:.2}x)")]
    InsufficientSpan { points: usize, span: f64 },
    #[error("{0} slope is not positive")]
    NegativeSlope(&'static str),
    #[error("all abscissae are equal")]
    DegenerateAbscissa,
}

impl Error {
    pub(crate) fn domain(name: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            name,
            requirement,
            value,
        }
    }
}
