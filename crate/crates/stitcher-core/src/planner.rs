//! End-to-end pipeline: world preparation, the three planning stages, and
//! machine-readable artifact writers.
//!
//! Planning treats the vehicle as a point against a grid inflated by the
//! configured vehicle radius. Per-stage wall times and search counters are
//! collected into [`Telemetry`] so runs can be broken down by component.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::checks::flat_outputs;
use crate::config::{GridSource, PlannerConfig};
use crate::environment::{DistanceIndex, GridError, VoxelGrid};
use crate::geometric_path::{astar_grid, sparsify, PathError};
use crate::mp_search::{astar_mp, SearchContext, SearchCounters, SearchError, StitchedTrajectory};
use crate::velocity_graph::{build_velocity_graph, sample_velocities};
use crate::checks::SafeSphereCache;
use crate::config::ConfigError;
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    /// The grid file could not be read; configuration-level failure.
    #[error("cannot load grid: {0}")]
    Grid(#[from] GridError),
    /// The configured start state itself is infeasible.
    #[error("invalid start state: {0:?}")]
    InvalidStart(crate::checks::Violation),
    #[error("no geometric path: {0}")]
    NoGeometricPath(#[from] PathError),
    #[error("motion-primitive graph disconnected")]
    Disconnected { counters: SearchCounters },
}

/// Wall-time and work breakdown of one planning run, all times in seconds.
#[derive(Debug, Clone, Serialize)]
pub struct Telemetry {
    /// Geometric A* plus sparsification.
    pub stage1_s: f64,
    /// Velocity sampling, graph construction, and backward cost-to-go.
    pub stage2_s: f64,
    /// Motion-primitive search including all checks.
    pub stage3_s: f64,
    /// Nearest-obstacle index construction.
    pub distance_build_s: f64,
    /// Whole-pipeline wall time (excludes grid loading/generation).
    pub total_s: f64,
    /// Time inside envelope checks during stage 3.
    pub constraint_check_s: f64,
    /// Time inside collision checks during stage 3.
    pub collision_check_s: f64,
    pub nodes_expanded: u64,
    pub edges_generated: u64,
    pub edges_pruned_collision: u64,
    pub edges_pruned_constraint: u64,
    pub waypoint_count: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub distance_queries: u64,
}

/// Successful planning output.
pub struct PlanResult {
    pub trajectory: StitchedTrajectory,
    /// Positions the trajectory passes at segment boundaries, including the
    /// exact configured start and goal.
    pub waypoints: Vec<Vec3>,
    pub telemetry: Telemetry,
}

/// Loads or generates the world described by the config (uninflated).
pub fn load_grid(cfg: &PlannerConfig) -> Result<VoxelGrid, PlanError> {
    match &cfg.grid {
        GridSource::File { path } => Ok(VoxelGrid::load(path)?),
        GridSource::Perlin {
            dims,
            resolution,
            threshold,
            octaves,
        } => Ok(crate::environment::generate_perlin(
            cfg.seed,
            *dims,
            *resolution,
            *threshold,
            *octaves,
        )),
    }
}

/// Validates the config, prepares the world, and plans.
pub fn plan(cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let grid = load_grid(cfg)?;
    plan_on_grid(cfg, &grid)
}

/// Stage 1 + 2 output shared by planning and benchmarking: the inflated
/// world, its distance index, the anchored waypoints, and the velocity
/// graph with cost-to-go tables.
pub struct PreparedSearch {
    pub grid: VoxelGrid,
    pub distance: DistanceIndex,
    pub waypoints: crate::geometric_path::WaypointPath,
    pub graph: crate::velocity_graph::VelocityGraph,
    pub stage1_s: f64,
    pub stage2_s: f64,
    pub distance_build_s: f64,
}

/// Runs only the geometric stage against an already-inflated grid: grid A*,
/// sparsification, and endpoint anchoring. Useful for sizing an instance
/// before paying for graph construction.
pub fn geometric_waypoints(
    grid: &VoxelGrid,
    start: &Vec3,
    goal: &Vec3,
) -> Result<crate::geometric_path::WaypointPath, PathError> {
    let grid_path = astar_grid(grid, start, goal)?;
    let mut waypoints = sparsify(grid, &grid_path.points);
    anchor_endpoints(grid, &mut waypoints.waypoints, start, goal);
    Ok(waypoints)
}

/// Runs stage 1 and stage 2 on an already-loaded (uninflated) grid. The
/// config must already be validated when bypassing [`plan`].
pub fn prepare(cfg: &PlannerConfig, raw_grid: &VoxelGrid) -> Result<PreparedSearch, PlanError> {
    let grid = if cfg.inflation_radius > 0.0 {
        raw_grid.inflated(cfg.inflation_radius)
    } else {
        raw_grid.clone()
    };
    let start = cfg.start.to_state();
    let goal = cfg.goal.to_state();

    let t0 = Instant::now();
    let waypoints = geometric_waypoints(&grid, &start.position, &goal.position)?;
    let stage1_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let samples = sample_velocities(&waypoints, &cfg.velocity_samples);
    let mut graph = build_velocity_graph(&waypoints, &samples, &start, &goal);
    graph.compute_cost_to_go(&cfg.limits.axis_accel_bounds());
    let stage2_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let distance = DistanceIndex::build(&grid);
    let distance_build_s = t0.elapsed().as_secs_f64();

    Ok(PreparedSearch {
        grid,
        distance,
        waypoints,
        graph,
        stage1_s,
        stage2_s,
        distance_build_s,
    })
}

/// Plans on an already-loaded (uninflated) grid. The config must already be
/// validated when bypassing [`plan`].
pub fn plan_on_grid(cfg: &PlannerConfig, raw_grid: &VoxelGrid) -> Result<PlanResult, PlanError> {
    let t_total = Instant::now();
    let prep = prepare(cfg, raw_grid)?;

    let cache = SafeSphereCache::new();
    let ctx = SearchContext {
        grid: &prep.grid,
        distance: &prep.distance,
        cache: cfg.use_sphere_cache.then_some(&cache),
        limits: &cfg.limits,
        rho: cfg.rho,
        constraint_dt: cfg.constraint_dt,
        use_heuristic: true,
    };
    let t0 = Instant::now();
    let outcome = match astar_mp(&prep.graph, &ctx) {
        Ok(out) => out,
        Err(SearchError::InvalidStart(v)) => return Err(PlanError::InvalidStart(v)),
        Err(SearchError::Disconnected { counters }) => {
            return Err(PlanError::Disconnected { counters })
        }
    };
    let stage3_s = t0.elapsed().as_secs_f64();
    let total_s = t_total.elapsed().as_secs_f64();

    let trajectory = outcome.trajectory;
    let passage: Vec<Vec3> = trajectory
        .boundary_times()
        .iter()
        .map(|&t| trajectory.position(t).expect("boundary time in domain"))
        .collect();
    let telemetry = Telemetry {
        stage1_s: prep.stage1_s,
        stage2_s: prep.stage2_s,
        stage3_s,
        distance_build_s: prep.distance_build_s,
        total_s,
        constraint_check_s: outcome.counters.constraint_check_s,
        collision_check_s: outcome.counters.collision_check_s,
        nodes_expanded: outcome.counters.nodes_expanded,
        edges_generated: outcome.counters.edges_generated,
        edges_pruned_collision: outcome.counters.edges_pruned_collision,
        edges_pruned_constraint: outcome.counters.edges_pruned_constraint,
        waypoint_count: prep.waypoints.len(),
        graph_nodes: prep.graph.node_count(),
        graph_edges: prep.graph.edge_count(),
        distance_queries: prep.distance.query_count(),
    };
    Ok(PlanResult {
        trajectory,
        waypoints: passage,
        telemetry,
    })
}

// Replace the endpoint voxel centers with the exact configured positions.
// When the exact position loses line-of-sight to its neighbor waypoint, the
// voxel center is kept as an extra waypoint instead of being replaced, so
// consecutive waypoints stay raycast-free.
fn anchor_endpoints(grid: &VoxelGrid, waypoints: &mut Vec<Vec3>, start: &Vec3, goal: &Vec3) {
    debug_assert!(waypoints.len() >= 2);
    if waypoints.len() >= 2 && !grid.raycast_free(start, &waypoints[1]) {
        waypoints.insert(1, waypoints[0]);
    }
    waypoints[0] = *start;
    let n = waypoints.len();
    if n >= 2 && !grid.raycast_free(&waypoints[n - 2], goal) {
        waypoints.insert(n - 1, waypoints[n - 1]);
    }
    let n = waypoints.len();
    waypoints[n - 1] = *goal;
}

/// Serializable trajectory document: exact segment coefficients plus
/// summary quantities, sufficient to reproduce the trajectory bit-for-bit.
#[derive(Serialize)]
struct TrajectoryDoc {
    total_duration_s: f64,
    total_cost: f64,
    boundary_times_s: Vec<f64>,
    waypoints: Vec<[f64; 3]>,
    segments: Vec<SegmentDoc>,
}

#[derive(Serialize)]
struct SegmentDoc {
    duration_s: f64,
    /// Ascending-power polynomial coefficients per axis (x, y, z).
    coefficients: [Vec<f64>; 3],
}

/// Writes the trajectory JSON document. Output is deterministic: identical
/// trajectories produce byte-identical files.
pub fn write_trajectory_json(result: &PlanResult, path: &Path) -> std::io::Result<()> {
    let traj = &result.trajectory;
    let segments = traj
        .segments()
        .iter()
        .map(|s| {
            assert_eq!(s.piece_count(), 1, "stage-3 primitives are single-piece");
            SegmentDoc {
                duration_s: s.duration(),
                coefficients: [
                    s.piece_coeffs(0, 0).to_vec(),
                    s.piece_coeffs(1, 0).to_vec(),
                    s.piece_coeffs(2, 0).to_vec(),
                ],
            }
        })
        .collect();
    let doc = TrajectoryDoc {
        total_duration_s: traj.duration(),
        total_cost: traj.cost(),
        boundary_times_s: traj.boundary_times(),
        waypoints: result.waypoints.iter().map(|w| [w.x, w.y, w.z]).collect(),
        segments,
    };
    write_json(&doc, path)
}

pub fn write_telemetry_json(telemetry: &Telemetry, path: &Path) -> std::io::Result<()> {
    write_json(telemetry, path)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("document serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// Writes the sampled-state CSV: one row per sample on the same time grid
/// the envelope check uses (`k*dt` plus the final time), with the flat
/// outputs alongside the state derivatives.
pub fn write_states_csv(
    traj: &StitchedTrajectory,
    gravity: f64,
    dt: f64,
    path: &Path,
) -> std::io::Result<()> {
    assert!(dt > 0.0);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,thrust_norm,tilt_deg,omega_norm"
    )?;
    let t_final = traj.duration();
    let mut k = 0u64;
    loop {
        let at_end = k as f64 * dt >= t_final - 1e-12 * (1.0 + t_final);
        let t = if at_end { t_final } else { k as f64 * dt };
        let p = traj.evaluate(t, 0).expect("sample in domain");
        let v = traj.evaluate(t, 1).expect("sample in domain");
        let a = traj.evaluate(t, 2).expect("sample in domain");
        let j = traj.evaluate(t, 3).expect("sample in domain");
        let (thrust, tilt_deg, omega) = match flat_outputs(&a, &j, gravity) {
            Some(f) => {
                let norm = f.thrust.norm();
                let tilt = (f.thrust.z / norm).clamp(-1.0, 1.0).acos().to_degrees();
                (norm, tilt, f.omega_norm)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        writeln!(
            out,
            "{t:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{thrust:.6},{tilt_deg:.6},{omega:.6}",
            p.x, p.y, p.z, v.x, v.y, v.z, a.x, a.y, a.z, j.x, j.y, j.z
        )?;
        if at_end {
            break;
        }
        k += 1;
    }
    out.flush()
}
