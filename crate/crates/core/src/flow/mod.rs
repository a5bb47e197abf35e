//! Interval evaluation of vector fields, the rotating-condition check, and
//! validated enclosures of flow tubes, time-`h` images and translations
//! between angular sections.

mod enclosure;
mod expr;
mod interval;
mod model;

pub use enclosure::{
    rough_enclosure, rough_enclosure_over, time_h_image, translation_between, translation_enclosure, EnclosureResult,
    RoughEnclosure,
};
pub use expr::Expr;
pub use interval::{box_from_bounds, box_hull, box_intersect, box_max_width, box_subset, Interval, IntervalBox};
pub use model::{rotating_check, EnclosureMeter, FlowModel, RotatingCheck, DEFAULT_EPS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid expression: {0}")]
    Expr(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("flow model has no angular axis")]
    NoAngularAxis,
    #[error("refinement needed: {0}")]
    Refinement(String),
    #[error("enclosure width {width} exceeds cap {cap}; refine the grid or the time step")]
    Blowup { width: f64, cap: f64 },
    #[error("translation undefined: {0}")]
    UndefinedTranslation(String),
    #[error("angular speed lower bound {0} is not positive")]
    NotRotating(f64),
}
