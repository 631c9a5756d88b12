use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chart `{chart}` is degenerate at ({xi}, {zeta}): |r_xi x r_zeta| = {cross_norm:e}")]
    DegenerateChart {
        chart: String,
        xi: f64,
        zeta: f64,
        cross_norm: f64,
    },

    #[error("point ({xi}, {zeta}) lies outside the domain of chart `{chart}`")]
    OutOfDomain { chart: String, xi: f64, zeta: f64 },

    #[error("invalid parameters for `{surface}`: {constraint}")]
    InvalidParams { surface: String, constraint: String },

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("chart `{0}` carries no closed-form reference data")]
    MissingReference(String),

    #[error("grid with {points} points along coordinate {coord} is coarser than the {width}-point stencil")]
    GridTooCoarse {
        coord: usize,
        points: usize,
        width: usize,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("ordering factor f_{axis} is not positive ({value:e}) at node ({i}, {j})")]
    FactorNonpositive {
        axis: char,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error("factor ODE for axis {axis} has no usable coordinate line: coefficient vanishes near {location}")]
    SingularOde { axis: char, location: f64 },

    #[error("chart `{0}` is not a surface of revolution about z")]
    NotRevolution(String),

    #[error("dense assembly limited to {limit} nodes, grid has {nodes}")]
    DenseTooLarge { nodes: usize, limit: usize },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
