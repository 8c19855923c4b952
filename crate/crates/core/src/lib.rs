#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant, clippy::unusual_byte_groupings))]

//! Limiting free energies of random energy models and their generalizations,
//! with finite-N simulators to check them against.

pub mod analytic_bk;
pub mod analytic_grem;
pub mod analytic_rem;
pub mod curve;
pub mod error;
pub mod external_field;
pub mod model;
pub mod numeric;
pub mod rates;
pub mod simulator;

pub use analytic_bk::{BkSpec, ChainResult};
pub use analytic_grem::{BetaLadder, GremSpec, LevelKind, Levels, RecoveryFamily};
pub use analytic_rem::{Objective, RemModel, Sign, TruncKind};
pub use curve::{FreeEnergyCurve, Segment, SegmentKind};
pub use error::{Error, Result};
pub use external_field::{FieldParams, Word, WordSpec};
pub use model::ModelSpec;
pub use rates::{DrivingDistribution, RateDescriptor, RateFunction};
pub use simulator::{simulate, SimConfig, SimResult, TreeKind};
