//! Dyadic point sets, strong maximal function pairings and sparse collections
//! of dyadic rectangles.

pub mod certified;
pub mod dyadic;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod geometry;
pub mod haar;
pub mod index;
pub mod lemmas;
pub mod maximal;
pub mod measure;
pub mod orlicz;
pub mod pointsets;
pub mod sparse;

pub use dyadic::{Coord, DyadicInterval, DyadicPoint, DyadicRect, LogDyadic};
pub use error::{Error, Result};
pub use experiment::{run_pipeline, sweep, ExperimentConfig, Report};
pub use measure::{AtomicMeasure, OrliczGauge, SimpleFunction};
pub use pointsets::{PointSetP, ZSet};
