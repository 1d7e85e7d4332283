use thiserror::Error;

/// Errors raised by the numerics, geometry, dynamics and nest layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid precision: {0}")]
    InvalidPrecision(String),
    #[error("square root of a negative value")]
    NegativeRadicand,
    #[error("logarithm of a non-positive value")]
    NonPositiveLogarithm,
    #[error("no sign change on the bracket")]
    NoSignChange,
    #[error("cannot parse `{0}` as a real number")]
    Parse(String),

    #[error("interval endpoints are not increasing")]
    EmptyInterval,
    #[error("point lies outside the open line")]
    OutsideLine,
    #[error("flank of the gap configuration has zero length")]
    DegenerateFlank,
    #[error("endpoints of the gap configuration are not ordered")]
    Unordered,
    #[error("intervals are not strictly nested")]
    NotNested,
    #[error("configuration crosses the critical point")]
    NegativeCoordinate,
    #[error("gap contains the critical point")]
    GapContainsCritical,

    #[error("parameter c = {0} is outside (-2, 1/4)")]
    InvalidParameter(String),
    #[error("orbit hits the critical point at step {0}")]
    CriticalOrbitPoint(usize),
    #[error("pullback folds at non-final step {step}")]
    FoldEncountered { step: usize },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("point outside the branch domain")]
    OutsideDomain,

    #[error("critical value escapes the dynamical interval")]
    Escape,
    #[error("critical value lands on a fixed point; nest is degenerate")]
    Degenerate,
    #[error("critical point does not return within {0} iterates")]
    NonRecurrent(usize),
    #[error("nest bookkeeping violated: {0}")]
    Bookkeeping(String),

    #[error("level {0} has not been built")]
    MissingLevel(usize),
    #[error("level {0} has no non-central interval")]
    NoNonCentral(usize),
    #[error("interval abuts the critical point")]
    DistanceZero,
    #[error("level {0} has no admissible pair of intervals")]
    NoAdmissiblePair(usize),
    #[error("interval is not reachable from any central interval")]
    Unreachable,

    #[error("itinerary could not be realized: {0}")]
    NotRealized(String),
    #[error("need at least {needed} levels beyond the fit start, have {have}")]
    InsufficientLevels { needed: usize, have: usize },
    #[error("nest terminated early: {0}")]
    TerminatedEarly(String),
}

pub type Result<T> = std::result::Result<T, Error>;
