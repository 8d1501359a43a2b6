use thiserror::Error;

use crate::mesh::Region;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid user-supplied sizes, dimensions or parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A region rectangle selected no element centroid.
    #[error("region {region} is empty: rectangle ({xmin}, {ymin}, {xmax}, {ymax}) contains no element centroid")]
    EmptyRegion {
        region: Region,
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    },

    #[error("ill-posed problem: {0}")]
    WellPosedness(String),

    /// A design value outside [-1, 1].
    #[error("design value {value} of `{name}` lies outside [-1, 1]")]
    Domain { name: &'static str, value: f64 },

    /// Symmetric part of the conductivity tensor is not positive definite.
    #[error("inadmissible conductivity tensor in element {element}: trace {trace}, determinant {det} of symmetric part")]
    InadmissibleTensor {
        element: usize,
        trace: f64,
        det: f64,
    },

    #[error("numerical error: {message} (relative residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    /// Mismatched array sizes between cooperating inputs.
    #[error("size mismatch in {context}: expected {expected}, got {actual}")]
    Size {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
}
