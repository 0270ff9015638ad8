use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("not a probability vector ({context}): {detail}")]
    NonProbability { context: String, detail: String },

    #[error("generation {generation} gives positive mass {mass} to zero offspring")]
    ZeroOffspring { generation: usize, mass: f64 },

    #[error("law is not scheduled at generation {n}{}", .k.map(|k| format!(", k = {k}")).unwrap_or_default())]
    NotScheduled { n: usize, k: Option<usize> },

    #[error("marginal tail not resolved before the grid edge: mass {mass:e} at or beyond x_max (generation {n}, k = {k})")]
    GridTooNarrow { n: usize, k: usize, mass: f64 },

    #[error("tail curve leaked past the {edge} grid edge at m = {m}: boundary value {value:e}")]
    GridOverflow {
        m: usize,
        edge: &'static str,
        value: f64,
    },

    #[error("value outside its domain: {0}")]
    DomainError(String),

    #[error("explicit joint laws support k <= 4, got k = {0}")]
    KTooLarge(usize),

    #[error("operation requires a structured joint family: {0}")]
    UnsupportedFamily(String),

    #[error("population cap exceeded: more than {cap} nodes visited")]
    PopulationCapExceeded { cap: usize },

    #[error("run does not contain the `{0}` curves")]
    MissingMode(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no admissible parameters: constraint {constraint} failed ({detail})")]
    Infeasible { constraint: String, detail: String },

    #[error("premise unmet: L(v) = {l_v} does not exceed C = {cap}")]
    PremiseUnmet { l_v: f64, cap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
