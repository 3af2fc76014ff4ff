//! Stage 2: layered velocity graph and backward cost-to-go.
//!
//! Every interior waypoint is populated with sampled candidate velocities;
//! consecutive layers are completely connected and each edge is priced by the
//! minimum-time double integrator between its endpoint states. Backward
//! dynamic programming from the goal then yields, per node, the optimal
//! cost-to-go `V_d*` (in seconds) together with the full ranked list of
//! per-edge values. Stage 3 multiplies `V_d*` by the time penalty to obtain
//! its admissible heuristic, so nothing here checks collisions or state
//! constraints — pruning candidates this early would break the bound.

use std::ops::Range;

use serde_json::json;

use crate::geometric_path::WaypointPath;
use crate::math::orthonormal_to;
use crate::primitives::{min_time_3d, BoundaryState};
use crate::Vec3;

/// How candidate velocities are sampled at interior waypoints: a set of
/// magnitudes crossed with a direction cone around the local path direction.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VelocitySampleConfig {
    /// Candidate speeds in m/s; zero collapses to a single zero-velocity
    /// sample regardless of direction count.
    pub magnitudes: Vec<f64>,
    /// Half-angle of the direction cone, degrees, in `[0, 90)`.
    pub cone_half_angle_deg: f64,
    /// Number of extra directions evenly azimuth-spaced on the cone
    /// boundary; the cone center is always included.
    pub boundary_direction_count: usize,
}

impl VelocitySampleConfig {
    /// `count` speeds evenly spaced over `[0, v_max]` with a 20-degree cone
    /// and two boundary directions (three directions total).
    pub fn evenly_spaced(v_max: f64, count: usize) -> Self {
        assert!(count >= 1);
        let magnitudes = (0..count)
            .map(|k| v_max * k as f64 / (count - 1).max(1) as f64)
            .collect();
        VelocitySampleConfig {
            magnitudes,
            cone_half_angle_deg: 20.0,
            boundary_direction_count: 2,
        }
    }

    pub fn validate(&self, v_max: f64) -> Result<(), String> {
        if self.magnitudes.is_empty() {
            return Err("velocity magnitudes must not be empty".into());
        }
        for &m in &self.magnitudes {
            if !m.is_finite() || m < 0.0 || m > v_max + 1e-12 {
                return Err(format!("velocity magnitude {m} outside [0, v_max={v_max}]"));
            }
        }
        if !(0.0..90.0).contains(&self.cone_half_angle_deg) {
            return Err(format!(
                "cone half-angle {} must lie in [0, 90) degrees",
                self.cone_half_angle_deg
            ));
        }
        Ok(())
    }

    /// Per-waypoint sample count M after deduplication, assuming distinct
    /// nonzero magnitudes and a nondegenerate cone.
    pub fn nominal_sample_count(&self) -> usize {
        let nonzero = self.magnitudes.iter().filter(|&&m| m > 0.0).count();
        let zero = self.magnitudes.len() - nonzero;
        nonzero * (1 + self.boundary_direction_count) + zero.min(1)
    }
}

// Interior-waypoint direction set: the unit vector along w_next - w_prev,
// plus evenly spaced vectors on the cone boundary around it. The in-plane
// basis comes from the deterministic smallest-axis rule so repeated runs
// sample identical graphs.
fn directions(center: Vec3, cfg: &VelocitySampleConfig) -> Vec<Vec3> {
    let c = center.normalize();
    let mut out = vec![c];
    let half = cfg.cone_half_angle_deg.to_radians();
    if half == 0.0 || cfg.boundary_direction_count == 0 {
        return out;
    }
    let u = orthonormal_to(&c);
    let v = c.cross(&u);
    for k in 0..cfg.boundary_direction_count {
        let az = 2.0 * std::f64::consts::PI * k as f64 / cfg.boundary_direction_count as f64;
        out.push(half.cos() * c + half.sin() * (az.cos() * u + az.sin() * v));
    }
    out
}

/// Candidate velocity sets for the `N - 2` interior waypoints.
///
/// The cone center at waypoint `i` points from `w_{i-1}` to `w_{i+1}`; when
/// those coincide it falls back to the direction toward `w_{i+1}`.
/// Duplicate velocities (all zero-magnitude samples in particular) collapse
/// to one.
pub fn sample_velocities(path: &WaypointPath, cfg: &VelocitySampleConfig) -> Vec<Vec<Vec3>> {
    let w = &path.waypoints;
    assert!(w.len() >= 2, "need at least start and goal waypoints");
    let mut layers = Vec::with_capacity(w.len().saturating_sub(2));
    for i in 1..w.len() - 1 {
        let mut center = w[i + 1] - w[i - 1];
        if center.norm() < 1e-12 {
            center = w[i + 1] - w[i];
        }
        if center.norm() < 1e-12 {
            center = Vec3::x();
        }
        let dirs = directions(center, cfg);
        let mut set: Vec<Vec3> = Vec::new();
        for &m in &cfg.magnitudes {
            for d in &dirs {
                let v = m * d;
                if !set.iter().any(|q| (q - v).norm() < 1e-9) {
                    set.push(v);
                }
            }
        }
        layers.push(set);
    }
    layers
}

/// One node of the layered graph: a waypoint paired with a candidate
/// velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityNode {
    pub waypoint_index: usize,
    pub velocity: Vec3,
    pub node_id: usize,
}

/// Layered velocity graph with complete bipartite connections between
/// consecutive layers and, once computed, the backward cost-to-go tables.
///
/// Node ids are assigned layer by layer: id 0 is the start node (fixed start
/// velocity), the last id is the goal node (fixed goal velocity).
#[derive(Debug, Clone)]
pub struct VelocityGraph {
    nodes: Vec<VelocityNode>,
    layers: Vec<Range<usize>>,
    positions: Vec<Vec3>,
    start_state: BoundaryState,
    goal_state: BoundaryState,
    /// `V_d*` per node, seconds; empty until [`Self::compute_cost_to_go`].
    cost_to_go: Vec<f64>,
    /// Per node, ascending `(l(n,e) + V_d*(succ), succ_id)`.
    ranked: Vec<Vec<(f64, usize)>>,
}

/// Assembles the layered graph for the waypoint path: singleton start and
/// goal layers from the fixed boundary velocities, one layer per interior
/// waypoint from `samples`. No feasibility filtering happens here.
pub fn build_velocity_graph(
    path: &WaypointPath,
    samples: &[Vec<Vec3>],
    start_state: &BoundaryState,
    goal_state: &BoundaryState,
) -> VelocityGraph {
    let n = path.waypoints.len();
    assert!(n >= 2, "need at least start and goal waypoints");
    assert_eq!(samples.len(), n - 2, "one sample set per interior waypoint");
    assert!(
        samples.iter().all(|s| !s.is_empty()),
        "interior layers must be non-empty"
    );

    let mut nodes = Vec::new();
    let mut layers = Vec::with_capacity(n);
    let push_layer = |nodes: &mut Vec<VelocityNode>, wp: usize, vels: &[Vec3]| {
        let lo = nodes.len();
        for &v in vels {
            nodes.push(VelocityNode {
                waypoint_index: wp,
                velocity: v,
                node_id: nodes.len(),
            });
        }
        lo..nodes.len()
    };
    layers.push(push_layer(&mut nodes, 0, &[start_state.velocity]));
    for (k, set) in samples.iter().enumerate() {
        layers.push(push_layer(&mut nodes, k + 1, set));
    }
    layers.push(push_layer(&mut nodes, n - 1, &[goal_state.velocity]));

    let mut positions = path.waypoints.clone();
    positions[0] = start_state.position;
    positions[n - 1] = goal_state.position;

    VelocityGraph {
        nodes,
        layers,
        positions,
        start_state: *start_state,
        goal_state: *goal_state,
        cost_to_go: Vec::new(),
        ranked: Vec::new(),
    }
}

impl VelocityGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Complete-bipartite edge count between consecutive layers.
    pub fn edge_count(&self) -> usize {
        self.layers
            .windows(2)
            .map(|w| w[0].len() * w[1].len())
            .sum()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn nodes(&self) -> &[VelocityNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &VelocityNode {
        &self.nodes[id]
    }

    pub fn layer(&self, i: usize) -> &[VelocityNode] {
        &self.nodes[self.layers[i].clone()]
    }

    pub fn start_id(&self) -> usize {
        0
    }

    pub fn goal_id(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start_state(&self) -> &BoundaryState {
        &self.start_state
    }

    pub fn goal_state(&self) -> &BoundaryState {
        &self.goal_state
    }

    /// Waypoint position of a node (exact boundary positions at start/goal).
    pub fn position_of(&self, id: usize) -> Vec3 {
        self.positions[self.nodes[id].waypoint_index]
    }

    /// Double-integrator state of a node.
    pub fn state_of(&self, id: usize) -> BoundaryState {
        BoundaryState::new(self.position_of(id), self.nodes[id].velocity)
    }

    /// Node ids reachable from `id`: the whole next layer (empty for the
    /// goal layer).
    pub fn successors(&self, id: usize) -> Range<usize> {
        let layer = self.nodes[id].waypoint_index;
        if layer + 1 < self.layers.len() {
            self.layers[layer + 1].clone()
        } else {
            0..0
        }
    }

    /// Minimum-time edge cost between two nodes under per-axis bounds.
    pub fn edge_cost(&self, from: usize, to: usize, u_max: &Vec3) -> f64 {
        min_time_3d(&self.state_of(from), &self.state_of(to), u_max)
            .expect("double-integrator edge cost with validated u_max")
            .t_final
    }

    /// Backward Bellman sweep from the goal; fills `V_d*` and the ranked
    /// per-edge lists.
    pub fn compute_cost_to_go(&mut self, u_max: &Vec3) {
        assert!(
            u_max.iter().all(|&u| u > 0.0 && u.is_finite()),
            "per-axis u_max must be positive"
        );
        let n = self.nodes.len();
        self.cost_to_go = vec![f64::INFINITY; n];
        self.ranked = vec![Vec::new(); n];
        self.cost_to_go[n - 1] = 0.0;
        for layer in (0..self.layers.len() - 1).rev() {
            for id in self.layers[layer].clone() {
                let mut list: Vec<(f64, usize)> = self
                    .successors(id)
                    .map(|succ| (self.edge_cost(id, succ, u_max) + self.cost_to_go[succ], succ))
                    .collect();
                list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                self.cost_to_go[id] = list[0].0;
                self.ranked[id] = list;
            }
        }
    }

    pub fn has_cost_to_go(&self) -> bool {
        !self.cost_to_go.is_empty()
    }

    /// `V_d*` in seconds; panics if the backward sweep has not run.
    pub fn cost_to_go(&self, id: usize) -> f64 {
        self.cost_to_go[id]
    }

    /// Ascending `(edge cost + successor cost-to-go, successor id)` list.
    pub fn ranked_cost_to_go(&self, id: usize) -> &[(f64, usize)] {
        &self.ranked[id]
    }

    /// Debug dump of nodes, layer structure, and cost-to-go for external
    /// tooling.
    pub fn dump_json(&self) -> serde_json::Value {
        json!({
            "layers": self.layers.iter().map(|r| [r.start, r.end]).collect::<Vec<_>>(),
            "edge_count": self.edge_count(),
            "nodes": self.nodes.iter().map(|n| {
                json!({
                    "id": n.node_id,
                    "waypoint_index": n.waypoint_index,
                    "position": self.positions[n.waypoint_index].as_slice(),
                    "velocity": n.velocity.as_slice(),
                    "cost_to_go": self.cost_to_go.get(n.node_id),
                })
            }).collect::<Vec<_>>(),
        })
    }
}
