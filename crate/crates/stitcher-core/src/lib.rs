//! Optimization-free kinodynamic trajectory planner for multirotor-class
//! vehicles.
//!
//! The planner produces a full-state, collision-free, constraint-satisfying
//! trajectory through a 3D voxel world by chaining three stages:
//!
//! 1. **Geometric search** ([`geometric_path`]): A* on the occupancy grid,
//!    sparsified into waypoints connected by free line segments.
//! 2. **Backward velocity search** ([`velocity_graph`]): velocities are
//!    sampled at every waypoint and backward dynamic programming over
//!    minimum-time double-integrator edges yields an optimal cost-to-go
//!    table, which doubles as an admissible search heuristic.
//! 3. **Forward motion-primitive search** ([`mp_search`]): A* over
//!    closed-form jerk-optimal primitives ([`primitives`]), guided by the
//!    stage-2 heuristic, with sampled constraint checks and adaptive
//!    collision checks ([`checks`]) pruning infeasible candidates.
//!
//! Every trajectory segment is a closed-form solution of a small optimal
//! control problem, so no stage performs numerical optimization and both
//! graph size and search effort are bounded a priori.

pub mod checks;
pub mod config;
pub mod environment;
pub mod geometric_path;
pub mod harness;
pub mod math;
pub mod mp_search;
pub mod planner;
pub mod primitives;
pub mod velocity_graph;

pub use checks::{ConstraintLimits, SafeSphereCache, Violation, ViolationKind};
pub use config::{ConfigError, GridSource, PlannerConfig};
pub use harness::{BenchmarkReport, BenchmarkSummary, TrialRecord, TrialStatus};
pub use mp_search::{SearchContext, SearchCounters, SearchError, StitchedTrajectory};
pub use planner::{plan, PlanError, PlanResult, Telemetry};
pub use environment::{DistanceIndex, GridError, VoxelGrid};
pub use geometric_path::{GeometricPath, PathError, WaypointPath};
pub use primitives::{BoundaryState, PolynomialTrajectory, PrimitiveError};
pub use velocity_graph::{VelocityGraph, VelocitySampleConfig};

/// 3D vector in SI units used throughout the planner.
pub type Vec3 = nalgebra::Vector3<f64>;
