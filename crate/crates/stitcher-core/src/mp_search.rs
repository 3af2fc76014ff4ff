//! Stage 3: best-first search over jerk-optimal motion primitives.
//!
//! The search runs on the stage-2 velocity graph. Expanding a node generates
//! one quintic primitive per outgoing edge, rooted at the node's arrival
//! acceleration with free terminal acceleration; primitives failing the
//! envelope or collision checks are pruned. A node's arrival acceleration is
//! frozen greedily the first time it is settled, inherited from its optimal
//! incoming primitive, which keeps the search graph exactly the size of the
//! velocity graph instead of exploding over acceleration values.
//!
//! The heuristic is the time-scaled cost-to-go `ρ·V_d*`. Every surviving
//! primitive satisfies the acceleration envelope, and the envelope is
//! contained in the box bounds used for the double-integrator times behind
//! `V_d*`, so the heuristic never overestimates the remaining cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::Serialize;

use crate::checks::{
    check_collision, check_constraints, flat_outputs, ConstraintLimits, SafeSphereCache,
    Violation, ViolationKind,
};
use crate::environment::{DistanceIndex, VoxelGrid};
use crate::primitives::{lqmt_optimal, BoundaryState, PolynomialTrajectory, PrimitiveError};
use crate::velocity_graph::VelocityGraph;
use crate::Vec3;

/// Tolerance on position/velocity/acceleration mismatch at segment joints.
pub const SEAM_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    /// Every path to the goal lost all its primitives to pruning.
    #[error("motion-primitive graph disconnected: open set exhausted before the goal")]
    Disconnected { counters: SearchCounters },
    /// The initial state itself violates the envelope or starts inside an
    /// obstacle; no trajectory can begin there.
    #[error("start state infeasible: {kind:?} = {value} exceeds {limit}", kind = .0.kind, value = .0.value, limit = .0.limit)]
    InvalidStart(Violation),
}

#[derive(Debug, thiserror::Error)]
#[error("segment {segment} starts {jump:.3e} away from its predecessor (order {order})")]
pub struct StitchError {
    pub segment: usize,
    pub order: usize,
    pub jump: f64,
}

/// Work and time accounting for one search run.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SearchCounters {
    pub nodes_expanded: u64,
    pub edges_generated: u64,
    pub edges_pruned_collision: u64,
    pub edges_pruned_constraint: u64,
    /// Wall time spent inside envelope checks, seconds.
    pub constraint_check_s: f64,
    /// Wall time spent inside collision checks, seconds.
    pub collision_check_s: f64,
}

/// Everything the search needs besides the graph itself.
pub struct SearchContext<'a> {
    pub grid: &'a VoxelGrid,
    pub distance: &'a DistanceIndex,
    /// Shared safe-sphere cache; `None` disables caching, making verdicts
    /// independent of edge evaluation order.
    pub cache: Option<&'a SafeSphereCache>,
    pub limits: &'a ConstraintLimits,
    /// Time penalty of the primitive objective.
    pub rho: f64,
    /// Envelope check sample spacing, seconds.
    pub constraint_dt: f64,
    /// `false` runs the identical search with a zero heuristic (Dijkstra).
    pub use_heuristic: bool,
}

/// Search result: the stitched trajectory plus work counters.
pub struct SearchOutcome {
    pub trajectory: StitchedTrajectory,
    pub counters: SearchCounters,
}

// Max-heap entry ordered for min-f extraction; ties prefer the smaller
// heuristic (deeper node), then the smaller node id for determinism.
#[derive(Copy, Clone, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    g: f64,
    node: u32,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn start_state_violation(
    start: &BoundaryState,
    grid: &VoxelGrid,
    limits: &ConstraintLimits,
) -> Option<Violation> {
    if grid.is_occupied_point(&start.position) {
        return Some(Violation {
            time_s: 0.0,
            kind: ViolationKind::Collision,
            value: 0.0,
            limit: 0.0,
        });
    }
    let speed = start.velocity.norm();
    if speed > limits.v_max {
        return Some(Violation {
            time_s: 0.0,
            kind: ViolationKind::Velocity,
            value: speed,
            limit: limits.v_max,
        });
    }
    let accel = start.accel_or_zero();
    match flat_outputs(&accel, &Vec3::zeros(), limits.gravity) {
        None => Some(Violation {
            time_s: 0.0,
            kind: ViolationKind::Singular,
            value: 0.0,
            limit: crate::checks::SINGULAR_THRUST_EPS,
        }),
        Some(out) => {
            let f_norm = out.thrust.norm();
            if f_norm > limits.f_max || f_norm < limits.f_min {
                return Some(Violation {
                    time_s: 0.0,
                    kind: ViolationKind::Thrust,
                    value: f_norm,
                    limit: if f_norm > limits.f_max { limits.f_max } else { limits.f_min },
                });
            }
            if out.thrust.z < f_norm * limits.theta_max_deg.to_radians().cos() {
                return Some(Violation {
                    time_s: 0.0,
                    kind: ViolationKind::Tilt,
                    value: (out.thrust.z / f_norm).clamp(-1.0, 1.0).acos().to_degrees(),
                    limit: limits.theta_max_deg,
                });
            }
            None
        }
    }
}

/// Best-first search from the start node to the goal node, stitching the
/// optimal incoming primitives into one trajectory.
///
/// `nodes_expanded` counts settled nodes (including the goal);
/// `edges_generated` counts every primitive solved, pruned or not.
pub fn astar_mp(graph: &VelocityGraph, ctx: &SearchContext) -> Result<SearchOutcome, SearchError> {
    assert!(graph.has_cost_to_go(), "stage-2 cost-to-go tables required");
    assert!(ctx.rho > 1.0 && ctx.rho.is_finite(), "rho must exceed 1");
    let n = graph.node_count();
    assert!(n < u32::MAX as usize, "graph too large for u32 node ids");

    if let Some(v) = start_state_violation(graph.start_state(), ctx.grid, ctx.limits) {
        return Err(SearchError::InvalidStart(v));
    }

    let h = |id: usize| {
        if ctx.use_heuristic {
            ctx.rho * graph.cost_to_go(id)
        } else {
            0.0
        }
    };

    let mut counters = SearchCounters::default();
    let mut g = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut arrival_accel = vec![Vec3::zeros(); n];
    let mut parent = vec![usize::MAX; n];
    let mut incoming: Vec<Option<PolynomialTrajectory>> = vec![None; n];
    let mut open = BinaryHeap::new();

    let start = graph.start_id();
    let goal = graph.goal_id();
    g[start] = 0.0;
    open.push(Open {
        f: h(start),
        h: h(start),
        g: 0.0,
        node: start as u32,
    });

    while let Some(Open { g: gc, node, .. }) = open.pop() {
        let node = node as usize;
        // lazy deletion: stale or already-settled entries are skipped
        if settled[node] || gc != g[node] {
            continue;
        }
        settled[node] = true;
        counters.nodes_expanded += 1;
        // greedy freeze: the arrival acceleration becomes part of the node
        arrival_accel[node] = if node == start {
            graph.start_state().accel_or_zero()
        } else {
            let traj = incoming[node].as_ref().expect("settled nodes have an incoming primitive");
            traj.evaluate(traj.duration(), 2).expect("terminal time in domain")
        };
        if node == goal {
            let mut chain = vec![];
            let mut at = goal;
            while at != start {
                chain.push(incoming[at].take().expect("path segments recorded"));
                at = parent[at];
            }
            chain.reverse();
            let trajectory = StitchedTrajectory::stitch(chain, g[goal])
                .expect("adjacent primitives share boundary states by construction");
            return Ok(SearchOutcome {
                trajectory,
                counters,
            });
        }

        let x0 = BoundaryState::with_acceleration(
            graph.position_of(node),
            graph.node(node).velocity,
            arrival_accel[node],
        );
        for succ in graph.successors(node) {
            if settled[succ] {
                continue;
            }
            let xf = graph.state_of(succ);
            counters.edges_generated += 1;
            let sol = match lqmt_optimal(&x0, &xf, ctx.rho) {
                Ok(sol) => sol,
                // numerically unsolvable boundary pairs cannot become
                // trajectory segments; treat them like envelope failures
                Err(PrimitiveError::IllConditioned { .. } | PrimitiveError::RootFailure) => {
                    counters.edges_pruned_constraint += 1;
                    continue;
                }
                Err(e) => panic!("primitive generation failed structurally: {e}"),
            };

            let t0 = Instant::now();
            let constraint = check_constraints(&sol.trajectory, ctx.limits, ctx.constraint_dt);
            counters.constraint_check_s += t0.elapsed().as_secs_f64();
            if constraint.is_some() {
                counters.edges_pruned_constraint += 1;
                continue;
            }

            let pair = (graph.node(node).waypoint_index, graph.node(succ).waypoint_index);
            let t0 = Instant::now();
            let collision = check_collision(
                &sol.trajectory,
                ctx.grid,
                ctx.distance,
                ctx.cache,
                pair,
                ctx.limits.v_max,
            );
            counters.collision_check_s += t0.elapsed().as_secs_f64();
            if collision.is_some() {
                counters.edges_pruned_collision += 1;
                continue;
            }

            let tentative = gc + sol.cost;
            if tentative < g[succ] {
                g[succ] = tentative;
                parent[succ] = node;
                incoming[succ] = Some(sol.trajectory);
                open.push(Open {
                    f: tentative + h(succ),
                    h: h(succ),
                    g: tentative,
                    node: succ as u32,
                });
            }
        }
    }

    Err(SearchError::Disconnected { counters })
}

/// Ordered primitive segments glued into one trajectory over global time.
///
/// Joint states agree to [`SEAM_TOL`]; global evaluation at a joint uses
/// the right segment's local t = 0.
#[derive(Debug, Clone)]
pub struct StitchedTrajectory {
    segments: Vec<PolynomialTrajectory>,
    /// Global start time of each segment; `starts[0] == 0`.
    starts: Vec<f64>,
    total_duration: f64,
    total_cost: f64,
}

impl StitchedTrajectory {
    /// Concatenates segments, validating that every joint matches in
    /// position, velocity, and acceleration to [`SEAM_TOL`].
    pub fn stitch(
        segments: Vec<PolynomialTrajectory>,
        total_cost: f64,
    ) -> Result<Self, StitchError> {
        assert!(!segments.is_empty(), "need at least one segment");
        for (i, pair) in segments.windows(2).enumerate() {
            for order in 0..=2 {
                let left = pair[0].evaluate(pair[0].duration(), order).expect("in domain");
                let right = pair[1].evaluate(0.0, order).expect("in domain");
                let jump = (left - right).norm();
                if jump > SEAM_TOL {
                    return Err(StitchError {
                        segment: i + 1,
                        order,
                        jump,
                    });
                }
            }
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut t = 0.0;
        for s in &segments {
            starts.push(t);
            t += s.duration();
        }
        Ok(StitchedTrajectory {
            segments,
            starts,
            total_duration: t,
            total_cost,
        })
    }

    pub fn duration(&self) -> f64 {
        self.total_duration
    }

    pub fn cost(&self) -> f64 {
        self.total_cost
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[PolynomialTrajectory] {
        &self.segments
    }

    /// Global times of segment boundaries, `[0, t_1, ..., duration]`; the
    /// trajectory passes its waypoints exactly at these times.
    pub fn boundary_times(&self) -> Vec<f64> {
        let mut out = self.starts.clone();
        out.push(self.total_duration);
        out
    }

    // A joint time belongs to the segment starting there.
    fn segment_index(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Value of the `order`-th derivative at global time `t`.
    pub fn evaluate(&self, t: f64, order: usize) -> Result<Vec3, PrimitiveError> {
        let slack = 1e-12 * (1.0 + self.total_duration);
        if t < -slack || t > self.total_duration + slack {
            return Err(PrimitiveError::OutOfDomain {
                t,
                duration: self.total_duration,
            });
        }
        let t = t.clamp(0.0, self.total_duration);
        let i = self.segment_index(t);
        let local = (t - self.starts[i]).min(self.segments[i].duration());
        self.segments[i].evaluate(local, order)
    }

    pub fn position(&self, t: f64) -> Result<Vec3, PrimitiveError> {
        self.evaluate(t, 0)
    }

    pub fn state_at(&self, t: f64) -> Result<BoundaryState, PrimitiveError> {
        Ok(BoundaryState::with_acceleration(
            self.evaluate(t, 0)?,
            self.evaluate(t, 1)?,
            self.evaluate(t, 2)?,
        ))
    }

    /// Largest position/velocity/acceleration mismatch over all segment
    /// joints and in-segment breakpoints, from the coefficients.
    pub fn max_seam_jump(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.segments {
            worst = worst.max(s.max_seam_jump(2));
        }
        for pair in self.segments.windows(2) {
            for order in 0..=2 {
                let left = pair[0].evaluate(pair[0].duration(), order).expect("in domain");
                let right = pair[1].evaluate(0.0, order).expect("in domain");
                worst = worst.max((left - right).norm());
            }
        }
        worst
    }

    /// Total squared-jerk integral over all segments.
    pub fn jerk_cost(&self) -> f64 {
        self.segments.iter().map(PolynomialTrajectory::jerk_cost).sum()
    }
}
