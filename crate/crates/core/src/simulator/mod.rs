//! Finite-N simulation: exact enumeration, configuration sampling, random
//! trees and empirical large deviations.

mod checks;
mod converge;
mod engine;
mod ldp;
mod rng;
mod tree;

pub use checks::{poisson_ratio_checks, MomentCheck};
pub use converge::{converge, median, ConvergeRow, ConvergeTable};
pub use engine::{energies, simulate, SimConfig, SimMode, SimResult, ENUMERATION_CAP};
pub use ldp::{empirical_ldp, uniform_edges, EmpiricalHistogram};
pub use rng::{Source, StreamKey, CHUNK};
pub use tree::{build_tree, die_counts, partition, Tree, TreeDraw, TreeKind, TreeStats, NODE_CAP};
