use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rhs overflow at t = {t}, index {index}")]
    RhsOverflow { t: f64, index: usize },
    #[error("step diverged at stage {stage}")]
    StepDiverged { stage: usize },
    #[error("integration failed at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("unstable configuration on the {mesh} mesh (h = {h}): {source}")]
    Unstable {
        mesh: &'static str,
        h: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("solutions identical; h too small or model degenerate")]
    DegenerateOrder,
    #[error("model '{0}' has no analytic solution")]
    NoAnalyticSolution(String),
    #[error("bound unattainable: h fell below {h_min} at theta = {theta:?}")]
    BoundUnattainable { h_min: f64, theta: alloc::vec::Vec<f64> },
    #[error("forward solve failed at theta = {theta:?}: {source}")]
    ForwardMap {
        theta: alloc::vec::Vec<f64>,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("no samples after burn-in")]
    EmptyChain,
    #[error("{0}")]
    Invalid(&'static str),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: alloc::boxed::Box::new(self),
        }
    }
}
