//! Numerical Finsler geometry on a single chart.
//!
//! A [`FinslerStructure`] is a Lagrangian `L(x, y)` written against
//! truncated multivariate Taylor arithmetic ([`Jet`]). Every object downstream
//! (metric, spray, Barthel and Cartan connections, curvatures, the
//! π-exterior derivative) is obtained from exact jet partials of `L`, and each
//! one comes with residual certificates that can be swept over sample points.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod connection;
pub mod curvature;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jet;
pub mod metric;
pub mod pi;
pub mod point;
pub mod probes;
pub mod spec;
pub mod tensor;
pub mod verify;

pub use error::{FinslerError, Result};
pub use field::ScalarField;
pub use geometry::LocalGeometry;
pub use jet::{Jet, JetSpace};
pub use metric::{CovectorField, FinslerStructure, MetricField, PositionFunction};
pub use pi::{PiForm, PiVectorField};
pub use point::{ChartPoint, SampleDomain};
