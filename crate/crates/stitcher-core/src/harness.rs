//! Seeded Monte Carlo harness for the benchmark mode: generates random
//! planning instances, runs the motion-primitive search twice on the
//! identical graph (with the cost-to-go heuristic and uninformed), and
//! re-verifies every returned trajectory independently of the search's own
//! checks.
//!
//! Instance generation resamples start/goal placements until the sparsified
//! waypoint count hits a per-trial target, so a batch exercises a controlled
//! spread of problem sizes. Every quantity recorded here is derived from the
//! trial seed alone; repeated batches produce byte-identical reports.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checks::check_constraints;
use crate::config::{PlannerConfig, StateSpec};
use crate::environment::VoxelGrid;
use crate::mp_search::{astar_mp, SearchContext, SearchError, SearchOutcome, StitchedTrajectory};
use crate::planner::{geometric_waypoints, load_grid, prepare, write_json, PlanError};
use crate::Vec3;

/// Relative tolerance for "A* cost equals uninformed-search cost".
pub const COST_EQUALITY_TOL: f64 = 1e-9;

/// Sample spacing for independent envelope re-verification, seconds.
pub const RECHECK_DT: f64 = 0.1;

/// Sample spacing for dense point-in-voxel collision re-verification, seconds.
pub const DENSE_DT: f64 = 1e-3;

/// Maximum allowed distance between a trajectory and each waypoint it is
/// meant to pass through, meters.
pub const WAYPOINT_TOL: f64 = 1e-6;

/// Start/goal draws attempted before a trial is marked as failed to generate.
const MAX_PLACEMENT_ATTEMPTS: usize = 160;

/// Free-voxel draws inside one placement attempt.
const MAX_VOXEL_DRAWS: usize = 4000;

/// One entry of a benchmark batch: which world to generate and what instance
/// shape to aim for.
#[derive(Debug, Clone, Copy)]
pub struct TrialPlan {
    /// Seed for both the procedural world and the endpoint sampler.
    pub seed: u64,
    /// Desired sparsified waypoint count N (start + interior + goal).
    pub target_waypoints: usize,
    /// Number of speed samples handed to `VelocitySampleConfig::evenly_spaced`;
    /// 3 and 5 yield per-waypoint sample counts of 7 and 13.
    pub magnitude_count: usize,
}

/// The base configuration the Monte Carlo suite runs against: chunky
/// procedural terrain over a 28 m x 28 m x 8 m volume with an aggressive
/// rotational envelope and a wide sampling cone. These worlds leave enough
/// kinodynamically feasible junk off the optimal corridor for the heuristic
/// to show a measurable expansion advantage, while staying dense enough that
/// roughly 40% of random instances admit a full-state plan.
pub fn standard_batch_config() -> PlannerConfig {
    let mut cfg = PlannerConfig::example();
    cfg.rho = 1200.0;
    cfg.limits.omega_max = 16.0;
    let mut samples = crate::velocity_graph::VelocitySampleConfig::evenly_spaced(8.0, 5);
    samples.cone_half_angle_deg = 40.0;
    cfg.velocity_samples = samples;
    cfg.grid = crate::config::GridSource::Perlin {
        dims: [112, 112, 32],
        resolution: 0.25,
        threshold: 0.18,
        octaves: 2,
    };
    cfg
}

/// Default batch layout: waypoint targets cycle over 4..=8 and the two
/// sample densities alternate, so 50 trials cover every combination five
/// times. Trial seeds are consecutive from `base_seed`.
pub fn trial_plans(base_seed: u64, trials: usize) -> Vec<TrialPlan> {
    (0..trials)
        .map(|i| TrialPlan {
            seed: base_seed.wrapping_add(i as u64),
            target_waypoints: 4 + i % 5,
            magnitude_count: if i % 2 == 0 { 3 } else { 5 },
        })
        .collect()
}

/// How far a trial got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    /// Both searches returned a trajectory.
    Planned,
    /// No start/goal placement reached the waypoint target (or the world had
    /// no free voxels to draw from).
    GenerationFailed,
    /// Grid A* found no path for the accepted placement.
    NoGeometricPath,
    /// Both searches exhausted the graph without reaching the goal.
    Disconnected,
    /// The start state failed the envelope precheck.
    InvalidStart,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Planned => "planned",
            TrialStatus::GenerationFailed => "generation_failed",
            TrialStatus::NoGeometricPath => "no_geometric_path",
            TrialStatus::Disconnected => "disconnected",
            TrialStatus::InvalidStart => "invalid_start",
        }
    }
}

/// Everything measured on one trial. Numeric fields are zero when the trial
/// did not get far enough to measure them; `status` says which ones apply.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub target_waypoints: usize,
    /// Waypoint count of the accepted placement (0 when generation failed).
    pub waypoints: usize,
    pub magnitude_count: usize,
    /// Per-waypoint velocity sample count M implied by `magnitude_count`.
    pub layer_size: usize,
    /// Start/goal draws consumed before accepting a placement.
    pub placement_attempts: usize,
    pub start: [f64; 3],
    pub goal: [f64; 3],
    /// Length of the sparsified waypoint polyline, meters.
    pub polyline_m: f64,
    pub astar_cost: f64,
    pub dijkstra_cost: f64,
    /// |J_A* - J_Dijkstra| / J_Dijkstra.
    pub cost_rel_diff: f64,
    pub astar_edges: u64,
    pub dijkstra_edges: u64,
    /// 100 * (dijkstra_edges - astar_edges) / dijkstra_edges.
    pub edge_reduction_pct: f64,
    pub astar_expanded: u64,
    pub dijkstra_expanded: u64,
    pub astar_pruned_constraint: u64,
    pub astar_pruned_collision: u64,
    pub dijkstra_pruned_constraint: u64,
    pub dijkstra_pruned_collision: u64,
    /// Stage 1 + 2 + distance-index wall time, seconds.
    pub prepare_s: f64,
    pub astar_s: f64,
    pub dijkstra_s: f64,
    /// Duration of the returned trajectory, seconds.
    pub trajectory_s: f64,
    /// Envelope violations found by independent re-checking at `RECHECK_DT`.
    pub constraint_violations: u64,
    /// Occupied samples found by dense point-in-voxel checking at `DENSE_DT`.
    pub collisions: u64,
    /// Largest distance from the trajectory to any waypoint at its boundary
    /// time, meters.
    pub max_waypoint_miss_m: f64,
    /// Largest position/velocity/acceleration jump across segment joints.
    pub max_seam_jump: f64,
    /// True when exactly one of the two searches found a path; must never
    /// happen on a shared graph.
    pub search_disagreement: bool,
}

impl TrialRecord {
    fn new(trial: usize, plan: &TrialPlan) -> Self {
        TrialRecord {
            trial,
            seed: plan.seed,
            status: TrialStatus::GenerationFailed,
            target_waypoints: plan.target_waypoints,
            waypoints: 0,
            magnitude_count: plan.magnitude_count,
            layer_size: 3 * (plan.magnitude_count.saturating_sub(1)) + 1,
            placement_attempts: 0,
            start: [0.0; 3],
            goal: [0.0; 3],
            polyline_m: 0.0,
            astar_cost: 0.0,
            dijkstra_cost: 0.0,
            cost_rel_diff: 0.0,
            astar_edges: 0,
            dijkstra_edges: 0,
            edge_reduction_pct: 0.0,
            astar_expanded: 0,
            dijkstra_expanded: 0,
            astar_pruned_constraint: 0,
            astar_pruned_collision: 0,
            dijkstra_pruned_constraint: 0,
            dijkstra_pruned_collision: 0,
            prepare_s: 0.0,
            astar_s: 0.0,
            dijkstra_s: 0.0,
            trajectory_s: 0.0,
            constraint_violations: 0,
            collisions: 0,
            max_waypoint_miss_m: 0.0,
            max_seam_jump: 0.0,
            search_disagreement: false,
        }
    }
}

/// Draws the center of a random free voxel whose 3x3x3 neighborhood is also
/// free, keeping one voxel of slack from the grid boundary. Returns `None`
/// when the world is too cluttered to find one.
fn draw_clear_center(grid: &VoxelGrid, rng: &mut ChaCha8Rng) -> Option<Vec3> {
    let dims = grid.dims();
    if dims.iter().any(|&d| d < 5) {
        return None;
    }
    for _ in 0..MAX_VOXEL_DRAWS {
        let idx = [
            rng.gen_range(2..dims[0] - 2),
            rng.gen_range(2..dims[1] - 2),
            rng.gen_range(2..dims[2] - 2),
        ];
        let clear = (0..27).all(|k| {
            let off = [k % 3, k / 3 % 3, k / 9];
            !grid.is_occupied_index([
                idx[0] + off[0] - 1,
                idx[1] + off[1] - 1,
                idx[2] + off[2] - 1,
            ])
        });
        if clear {
            return Some(grid.index_to_center(idx));
        }
    }
    None
}

/// An accepted instance: the placement plus the waypoint count it produced.
struct Placement {
    start: Vec3,
    goal: Vec3,
    waypoints: usize,
    attempts: usize,
}

/// Waypoint counts a benchmark instance is allowed to have. Fallback
/// placements outside this window are rejected so every instance in a batch
/// stays inside the problem family the batch is meant to cover.
const WAYPOINT_WINDOW: std::ops::RangeInclusive<usize> = 4..=8;

/// Resamples rest-to-rest start/goal placements until the sparsified
/// waypoint count equals the target. Placements closer than 45% of the
/// horizontal world diagonal are rejected before running grid A*. If the cap
/// is reached, the attempt whose waypoint count came closest to the target
/// (ties resolved toward the earlier attempt) is kept, as long as some
/// attempt landed inside [`WAYPOINT_WINDOW`].
fn sample_placement(grid: &VoxelGrid, seed: u64, target: usize) -> Option<Placement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = grid.dims();
    let res = grid.resolution();
    let min_separation =
        0.45 * ((dims[0] as f64 * res).powi(2) + (dims[1] as f64 * res).powi(2)).sqrt();

    let mut best: Option<Placement> = None;
    for attempt in 1..=MAX_PLACEMENT_ATTEMPTS {
        let start = draw_clear_center(grid, &mut rng)?;
        let goal = draw_clear_center(grid, &mut rng)?;
        if (goal - start).norm() < min_separation {
            continue;
        }
        let Ok(path) = geometric_waypoints(grid, &start, &goal) else {
            continue;
        };
        let n = path.len();
        let candidate = Placement {
            start,
            goal,
            waypoints: n,
            attempts: attempt,
        };
        if n == target {
            return Some(candidate);
        }
        if !WAYPOINT_WINDOW.contains(&n) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => n.abs_diff(target) < b.waypoints.abs_diff(target),
        };
        if better {
            best = Some(candidate);
        }
    }
    best
}

fn search_once(
    prep: &crate::planner::PreparedSearch,
    cfg: &PlannerConfig,
    use_heuristic: bool,
) -> (Result<SearchOutcome, SearchError>, f64) {
    let ctx = SearchContext {
        grid: &prep.grid,
        distance: &prep.distance,
        cache: None,
        limits: &cfg.limits,
        rho: cfg.rho,
        constraint_dt: cfg.constraint_dt,
        use_heuristic,
    };
    let t0 = Instant::now();
    let out = astar_mp(&prep.graph, &ctx);
    (out, t0.elapsed().as_secs_f64())
}

/// Re-checks a returned trajectory from scratch: envelope limits on the
/// planner's own check grid, occupancy at dense 1 ms samples, waypoint
/// passage, and seam continuity. Results land in the record's safety fields.
fn verify_trajectory(
    traj: &StitchedTrajectory,
    grid: &VoxelGrid,
    waypoints: &[Vec3],
    cfg: &PlannerConfig,
    record: &mut TrialRecord,
) {
    for seg in traj.segments() {
        if check_constraints(seg, &cfg.limits, RECHECK_DT).is_some() {
            record.constraint_violations += 1;
        }
    }

    let t_final = traj.duration();
    let mut k = 0u64;
    loop {
        let t = (k as f64 * DENSE_DT).min(t_final);
        let p = traj.position(t).expect("dense sample stays in domain");
        if grid.is_occupied_point(&p) {
            record.collisions += 1;
        }
        if t >= t_final {
            break;
        }
        k += 1;
    }

    let times = traj.boundary_times();
    assert_eq!(
        times.len(),
        waypoints.len(),
        "one boundary time per waypoint"
    );
    record.max_waypoint_miss_m = times
        .iter()
        .zip(waypoints)
        .map(|(&t, w)| (traj.position(t).expect("boundary time in domain") - w).norm())
        .fold(0.0, f64::max);
    record.max_seam_jump = traj.max_seam_jump();
}

/// Runs one seeded trial end to end. Failures are recorded in the returned
/// record; this function does not panic on infeasible instances.
pub fn run_trial(base: &PlannerConfig, trial: usize, plan: &TrialPlan) -> TrialRecord {
    let mut record = TrialRecord::new(trial, plan);

    let mut cfg = base.clone();
    cfg.seed = plan.seed;
    // Per-trial sample density; speed span and cone geometry stay as the
    // base config documents them.
    let span = cfg
        .velocity_samples
        .magnitudes
        .iter()
        .fold(0.0f64, |a, &m| a.max(m));
    let mut samples =
        crate::velocity_graph::VelocitySampleConfig::evenly_spaced(span, plan.magnitude_count);
    samples.cone_half_angle_deg = cfg.velocity_samples.cone_half_angle_deg;
    samples.boundary_direction_count = cfg.velocity_samples.boundary_direction_count;
    cfg.velocity_samples = samples;

    let raw = match load_grid(&cfg) {
        Ok(g) => g,
        Err(_) => return record,
    };
    let world = if cfg.inflation_radius > 0.0 {
        raw.inflated(cfg.inflation_radius)
    } else {
        raw
    };
    // Placement and search both see the inflated world, so inflation is not
    // applied a second time below.
    cfg.inflation_radius = 0.0;

    let Some(placement) = sample_placement(&world, plan.seed, plan.target_waypoints) else {
        return record;
    };
    record.waypoints = placement.waypoints;
    record.placement_attempts = placement.attempts;
    record.start = placement.start.into();
    record.goal = placement.goal.into();
    cfg.start = StateSpec::at_rest(record.start);
    cfg.goal = StateSpec::at_rest(record.goal);

    let t0 = Instant::now();
    let prep = match prepare(&cfg, &world) {
        Ok(p) => p,
        Err(PlanError::NoGeometricPath(_)) => {
            record.status = TrialStatus::NoGeometricPath;
            return record;
        }
        Err(_) => {
            record.status = TrialStatus::GenerationFailed;
            return record;
        }
    };
    record.prepare_s = t0.elapsed().as_secs_f64();
    record.waypoints = prep.waypoints.len();
    record.polyline_m = prep
        .waypoints
        .waypoints
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .sum();

    let (astar, astar_s) = search_once(&prep, &cfg, true);
    let (dijkstra, dijkstra_s) = search_once(&prep, &cfg, false);
    record.astar_s = astar_s;
    record.dijkstra_s = dijkstra_s;

    match (astar, dijkstra) {
        (Ok(a), Ok(d)) => {
            record.status = TrialStatus::Planned;
            record.astar_cost = a.trajectory.cost();
            record.dijkstra_cost = d.trajectory.cost();
            record.cost_rel_diff =
                (record.astar_cost - record.dijkstra_cost).abs() / record.dijkstra_cost;
            record.astar_edges = a.counters.edges_generated;
            record.dijkstra_edges = d.counters.edges_generated;
            record.astar_expanded = a.counters.nodes_expanded;
            record.dijkstra_expanded = d.counters.nodes_expanded;
            record.astar_pruned_constraint = a.counters.edges_pruned_constraint;
            record.astar_pruned_collision = a.counters.edges_pruned_collision;
            record.dijkstra_pruned_constraint = d.counters.edges_pruned_constraint;
            record.dijkstra_pruned_collision = d.counters.edges_pruned_collision;
            if record.dijkstra_edges > 0 {
                record.edge_reduction_pct = 100.0
                    * (record.dijkstra_edges as f64 - record.astar_edges as f64)
                    / record.dijkstra_edges as f64;
            }
            record.trajectory_s = a.trajectory.duration();
            verify_trajectory(
                &a.trajectory,
                &prep.grid,
                &prep.waypoints.waypoints,
                &cfg,
                &mut record,
            );
        }
        (Err(SearchError::InvalidStart(_)), _) | (_, Err(SearchError::InvalidStart(_))) => {
            record.status = TrialStatus::InvalidStart;
        }
        (Err(_), Err(_)) => {
            record.status = TrialStatus::Disconnected;
        }
        (Ok(_), Err(_)) | (Err(_), Ok(_)) => {
            record.status = TrialStatus::Disconnected;
            record.search_disagreement = true;
        }
    }
    record
}

/// Batch-level aggregates over the per-trial records. Search-quality and
/// safety statistics cover planned trials only.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary {
    pub trials: usize,
    pub planned: usize,
    pub generation_failed: usize,
    pub no_geometric_path: usize,
    pub disconnected: usize,
    pub invalid_start: usize,
    pub search_disagreements: usize,
    /// Planned trials whose A*/uninformed costs differ by more than
    /// `COST_EQUALITY_TOL` relative.
    pub cost_mismatches: usize,
    /// Planned trials where A* generated more edges than the uninformed run.
    pub negative_reductions: usize,
    pub mean_edge_reduction_pct: f64,
    pub min_edge_reduction_pct: f64,
    pub max_edge_reduction_pct: f64,
    pub constraint_violations: u64,
    pub collisions: u64,
    pub max_waypoint_miss_m: f64,
    pub max_seam_jump: f64,
    pub mean_astar_s: f64,
    pub mean_dijkstra_s: f64,
}

impl BenchmarkSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let planned: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.status == TrialStatus::Planned)
            .collect();
        let n = planned.len();
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                planned.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        let count = |s: TrialStatus| records.iter().filter(|r| r.status == s).count();
        BenchmarkSummary {
            trials: records.len(),
            planned: n,
            generation_failed: count(TrialStatus::GenerationFailed),
            no_geometric_path: count(TrialStatus::NoGeometricPath),
            disconnected: count(TrialStatus::Disconnected),
            invalid_start: count(TrialStatus::InvalidStart),
            search_disagreements: records.iter().filter(|r| r.search_disagreement).count(),
            cost_mismatches: planned
                .iter()
                .filter(|r| r.cost_rel_diff > COST_EQUALITY_TOL)
                .count(),
            negative_reductions: planned
                .iter()
                .filter(|r| r.astar_edges > r.dijkstra_edges)
                .count(),
            mean_edge_reduction_pct: mean(&|r| r.edge_reduction_pct),
            min_edge_reduction_pct: planned
                .iter()
                .map(|r| r.edge_reduction_pct)
                .fold(if n == 0 { 0.0 } else { f64::INFINITY }, f64::min),
            max_edge_reduction_pct: planned
                .iter()
                .map(|r| r.edge_reduction_pct)
                .fold(0.0, f64::max),
            constraint_violations: planned.iter().map(|r| r.constraint_violations).sum(),
            collisions: planned.iter().map(|r| r.collisions).sum(),
            max_waypoint_miss_m: planned
                .iter()
                .map(|r| r.max_waypoint_miss_m)
                .fold(0.0, f64::max),
            max_seam_jump: planned.iter().map(|r| r.max_seam_jump).fold(0.0, f64::max),
            mean_astar_s: mean(&|r| r.astar_s),
            mean_dijkstra_s: mean(&|r| r.dijkstra_s),
        }
    }
}

/// Records plus their aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub records: Vec<TrialRecord>,
    pub summary: BenchmarkSummary,
}

/// Runs `trials` seeded trials from the base config, spreading them over up
/// to `threads` worker threads. Trials share nothing mutable; records come
/// back ordered by trial index regardless of scheduling.
pub fn run_benchmark(base: &PlannerConfig, trials: usize, threads: usize) -> BenchmarkReport {
    let plans = trial_plans(base.seed, trials);
    let workers = threads.clamp(1, trials.max(1));
    let mut records: Vec<(usize, TrialRecord)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let plans = &plans;
                scope.spawn(move || {
                    plans
                        .iter()
                        .enumerate()
                        .skip(w)
                        .step_by(workers)
                        .map(|(i, plan)| (i, run_trial(base, i, plan)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("benchmark worker panicked"))
            .collect()
    });
    records.sort_by_key(|(i, _)| *i);
    let records: Vec<TrialRecord> = records.into_iter().map(|(_, r)| r).collect();
    let summary = BenchmarkSummary::from_records(&records);
    BenchmarkReport { records, summary }
}

/// Writes one row per trial. Floats use shortest-roundtrip formatting so the
/// file is lossless and byte-stable across runs.
pub fn write_benchmark_csv(records: &[TrialRecord], path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(
        "trial,seed,status,target_waypoints,waypoints,magnitude_count,layer_size,\
         placement_attempts,start_x,start_y,start_z,goal_x,goal_y,goal_z,polyline_m,\
         astar_cost,dijkstra_cost,cost_rel_diff,astar_edges,dijkstra_edges,\
         edge_reduction_pct,astar_expanded,dijkstra_expanded,astar_pruned_constraint,\
         astar_pruned_collision,dijkstra_pruned_constraint,dijkstra_pruned_collision,\
         prepare_s,astar_s,dijkstra_s,trajectory_s,constraint_violations,collisions,\
         max_waypoint_miss_m,max_seam_jump,search_disagreement\n",
    );
    for r in records {
        use std::fmt::Write as _;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.status.as_str(),
            r.target_waypoints,
            r.waypoints,
            r.magnitude_count,
            r.layer_size,
            r.placement_attempts,
            r.start[0],
            r.start[1],
            r.start[2],
            r.goal[0],
            r.goal[1],
            r.goal[2],
            r.polyline_m,
            r.astar_cost,
            r.dijkstra_cost,
            r.cost_rel_diff,
            r.astar_edges,
            r.dijkstra_edges,
            r.edge_reduction_pct,
            r.astar_expanded,
            r.dijkstra_expanded,
            r.astar_pruned_constraint,
            r.astar_pruned_collision,
            r.dijkstra_pruned_constraint,
            r.dijkstra_pruned_collision,
            r.prepare_s,
            r.astar_s,
            r.dijkstra_s,
            r.trajectory_s,
            r.constraint_violations,
            r.collisions,
            r.max_waypoint_miss_m,
            r.max_seam_jump,
            r.search_disagreement,
        )
        .expect("writing to String cannot fail");
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

/// Writes the aggregate as pretty JSON.
pub fn write_summary_json(summary: &BenchmarkSummary, path: &Path) -> std::io::Result<()> {
    write_json(summary, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridSource;

    fn dense_base() -> PlannerConfig {
        let mut cfg = PlannerConfig::example();
        cfg.grid = GridSource::Perlin {
            dims: [80, 80, 16],
            resolution: 0.25,
            threshold: 0.14,
            octaves: 3,
        };
        cfg
    }

    #[test]
    fn trial_plans_cycle_targets_and_densities() {
        let plans = trial_plans(100, 10);
        assert_eq!(plans.len(), 10);
        assert_eq!(plans[0].seed, 100);
        assert_eq!(plans[9].seed, 109);
        let targets: Vec<usize> = plans.iter().map(|p| p.target_waypoints).collect();
        assert_eq!(targets, vec![4, 5, 6, 7, 8, 4, 5, 6, 7, 8]);
        let counts: Vec<usize> = plans.iter().map(|p| p.magnitude_count).collect();
        assert_eq!(counts, vec![3, 5, 3, 5, 3, 5, 3, 5, 3, 5]);
        // Layer sizes implied by the two densities.
        let record = TrialRecord::new(0, &plans[0]);
        assert_eq!(record.layer_size, 7);
        let record = TrialRecord::new(1, &plans[1]);
        assert_eq!(record.layer_size, 13);
    }

    #[test]
    fn placement_sampling_is_deterministic_and_separated() {
        let cfg = standard_batch_config();
        let world = load_grid(&cfg).unwrap();
        let (target, a) = (4..=8)
            .find_map(|t| sample_placement(&world, cfg.seed, t).map(|p| (t, p)))
            .expect("some target in the window is placeable");
        let b = sample_placement(&world, cfg.seed, target).expect("placement found");
        assert_eq!(a.start, b.start);
        assert_eq!(a.goal, b.goal);
        assert_eq!(a.waypoints, b.waypoints);
        assert!(WAYPOINT_WINDOW.contains(&a.waypoints));
        assert!(world.is_free_point(&a.start));
        assert!(world.is_free_point(&a.goal));
        assert!((a.goal - a.start).norm() >= 0.45 * (28.0f64.powi(2) * 2.0).sqrt());
    }

    #[test]
    fn single_trial_produces_equal_costs_and_verified_safety() {
        let base = dense_base();
        let plans = trial_plans(base.seed, 4);
        let mut planned = None;
        for (i, plan) in plans.iter().enumerate() {
            let record = run_trial(&base, i, plan);
            assert!(!record.search_disagreement);
            if record.status == TrialStatus::Planned {
                planned = Some(record);
                break;
            }
        }
        let r = planned.expect("at least one of four seeds plans successfully");
        assert!(r.cost_rel_diff <= COST_EQUALITY_TOL);
        assert!(r.astar_edges <= r.dijkstra_edges);
        assert!(r.edge_reduction_pct >= 0.0);
        assert_eq!(r.constraint_violations, 0);
        assert_eq!(r.collisions, 0);
        assert!(r.max_waypoint_miss_m <= WAYPOINT_TOL);
        assert!(r.max_seam_jump < crate::mp_search::SEAM_TOL);
        assert!(r.trajectory_s > 0.0);
        assert!(r.polyline_m > 10.0);
    }

    #[test]
    fn batch_is_deterministic_across_thread_counts() {
        let base = dense_base();
        let serial = run_benchmark(&base, 3, 1);
        let parallel = run_benchmark(&base, 3, 3);
        assert_eq!(serial.records.len(), 3);
        let ser = serde_json::to_string(&serial).unwrap();
        let par = serde_json::to_string(&parallel).unwrap();
        // Wall-clock fields differ between runs; compare everything else.
        let strip = |s: &str| {
            let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
            for r in v["records"].as_array_mut().unwrap() {
                for key in ["prepare_s", "astar_s", "dijkstra_s"] {
                    r[key] = serde_json::Value::from(0.0);
                }
            }
            v["summary"]["mean_astar_s"] = serde_json::Value::from(0.0);
            v["summary"]["mean_dijkstra_s"] = serde_json::Value::from(0.0);
            v
        };
        assert_eq!(strip(&ser), strip(&par));
    }

    #[test]
    fn csv_report_has_one_row_per_trial() {
        let base = dense_base();
        let report = run_benchmark(&base, 2, 2);
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("trials.csv");
        let json_path = dir.path().join("summary.json");
        write_benchmark_csv(&report.records, &csv_path).unwrap();
        write_summary_json(&report.summary, &json_path).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let header_cols = lines[0].split(',').count();
        assert!(lines[0].starts_with("trial,seed,status"));
        for row in &lines[1..] {
            assert_eq!(row.split(',').count(), header_cols);
        }

        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(summary["trials"], 2);
        assert_eq!(
            summary["planned"].as_u64().unwrap()
                + summary["generation_failed"].as_u64().unwrap()
                + summary["no_geometric_path"].as_u64().unwrap()
                + summary["disconnected"].as_u64().unwrap()
                + summary["invalid_start"].as_u64().unwrap(),
            2
        );
    }

    #[test]
    fn summary_counts_are_consistent_with_records() {
        let mut records = vec![];
        for (i, plan) in trial_plans(7, 5).iter().enumerate() {
            let mut r = TrialRecord::new(i, plan);
            if i < 3 {
                r.status = TrialStatus::Planned;
                r.astar_cost = 100.0;
                r.dijkstra_cost = 100.0;
                r.astar_edges = 80 + i as u64;
                r.dijkstra_edges = 100;
                r.edge_reduction_pct =
                    100.0 * (100.0 - r.astar_edges as f64) / 100.0;
            } else if i == 3 {
                r.status = TrialStatus::Disconnected;
            }
            records.push(r);
        }
        let s = BenchmarkSummary::from_records(&records);
        assert_eq!(s.trials, 5);
        assert_eq!(s.planned, 3);
        assert_eq!(s.disconnected, 1);
        assert_eq!(s.generation_failed, 1);
        assert_eq!(s.cost_mismatches, 0);
        assert_eq!(s.negative_reductions, 0);
        assert!((s.mean_edge_reduction_pct - 19.0).abs() < 1e-12);
        assert!((s.min_edge_reduction_pct - 18.0).abs() < 1e-12);
        assert!((s.max_edge_reduction_pct - 20.0).abs() < 1e-12);
    }
}
