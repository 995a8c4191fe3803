use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("tree description is not a valid filtration tree: {0}")]
    NonTreeShape(String),
    #[error("leaf probabilities sum to {0}, expected 1")]
    ProbNotNormalized(String),
    #[error("node `{0}` has zero probability")]
    ZeroProbabilityNode(String),
    #[error("conditional values are anchored at different stopping times")]
    AnchorMismatch,
    #[error("{count} stopping times exceed the enumeration cap of {cap}")]
    EnumerationCapExceeded { count: String, cap: usize },
    #[error("window violates tau <= theta: {0}")]
    WindowOrderViolation(String),
    #[error("objects live on different filtration trees")]
    TreeMismatch,
    #[error("node set is not a subset of the stopping time's stop nodes")]
    NotAntichainSubset,
    #[error("not a density: {0}")]
    NotADensity(String),
    #[error("bad time weights: {0}")]
    BadWeights(String),
    #[error("{count} subsets exceed the enumeration cap of {cap}")]
    SubsetEnumerationCapExceeded { count: usize, cap: usize },
    #[error("evaluation time outside the functional's window: {0}")]
    WindowViolation(String),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("scenario density must be strictly positive: {0}")]
    NonPositiveDensity(String),
    #[error("base functional is not one-step consistent: {0}")]
    BaseNotOneStepConsistent(String),
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("penalty is not normalized at node `{0}` (max over scenarios must be 0)")]
    NormalizationViolation(String),
    #[error("input process is not time-consistent: {0}")]
    InputNotConsistent(String),
    #[error("horizon mismatch: {0}")]
    HorizonMismatch(String),
    #[error("process is not in the acceptance set at node `{0}`")]
    NotAccepted(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation needs floating point arithmetic: {0}")]
    InexactArithmetic(String),
    #[error("fixture error: {0}")]
    FixtureParse(String),
    #[error("not a stopping time: {0}")]
    NotAStoppingTime(String),
    #[error("value is infinite where a finite value is required: {0}")]
    InfiniteValue(String),
}
