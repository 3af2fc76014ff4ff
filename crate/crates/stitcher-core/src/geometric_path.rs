//! Stage 1: geometric A* over the voxel grid plus waypoint sparsification.
//!
//! The grid graph uses 26-connectivity with exact Euclidean edge costs, with
//! one restriction: a diagonal move is allowed only when every voxel of the
//! axis-aligned box swept between the two cells is free. This forbids corner
//! cutting and guarantees that the segment between consecutive path centers
//! is itself obstacle-free, which [`sparsify`] relies on to always make
//! forward progress.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::environment::VoxelGrid;
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum PathError {
    #[error("{which} position ({position:?}) is occupied or outside the grid")]
    InvalidEndpoint { which: &'static str, position: Vec3 },
    #[error("no collision-free grid path between start and goal")]
    Disconnected,
}

/// Dense voxel-center path from grid A*, including its Euclidean cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricPath {
    pub points: Vec<Vec3>,
    pub cost: f64,
}

/// Sparse waypoint sequence; consecutive waypoints are connected by
/// collision-free line segments. Degenerate single-point paths occur only
/// when start and goal share a voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath {
    pub waypoints: Vec<Vec3>,
}

impl WaypointPath {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

// Max-heap entry ordered for min-f extraction; ties prefer the larger g
// (deeper node), then the smaller node index for determinism.
#[derive(Copy, Clone, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    node: u32,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// The 26 neighbor moves with, for each, the voxels of the swept box that
// must additionally be free (excluding source and target).
struct Move {
    delta: [i64; 3],
    cost: f64,
    swept: Vec<[i64; 3]>,
}

fn moves(resolution: f64) -> Vec<Move> {
    let mut out = Vec::with_capacity(26);
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let delta = [dx, dy, dz];
                let mut swept = Vec::new();
                for sz in [0, dz] {
                    for sy in [0, dy] {
                        for sx in [0, dx] {
                            let s = [sx, sy, sz];
                            if s != [0, 0, 0] && s != delta && !swept.contains(&s) {
                                swept.push(s);
                            }
                        }
                    }
                }
                let norm = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                out.push(Move {
                    delta,
                    cost: norm * resolution,
                    swept,
                });
            }
        }
    }
    out
}

fn endpoint_index(
    grid: &VoxelGrid,
    p: &Vec3,
    which: &'static str,
) -> Result<[usize; 3], PathError> {
    match grid.world_to_index(p) {
        Some(idx) if !grid.is_occupied_index(idx) => Ok(idx),
        _ => Err(PathError::InvalidEndpoint {
            which,
            position: *p,
        }),
    }
}

/// Shortest 26-connected voxel-center path from `start` to `goal` under
/// Euclidean edge costs, with the straight-line distance as heuristic.
pub fn astar_grid(grid: &VoxelGrid, start: &Vec3, goal: &Vec3) -> Result<GeometricPath, PathError> {
    let start_idx = endpoint_index(grid, start, "start")?;
    let goal_idx = endpoint_index(grid, goal, "goal")?;
    if start_idx == goal_idx {
        return Ok(GeometricPath {
            points: vec![grid.index_to_center(start_idx)],
            cost: 0.0,
        });
    }

    let [nx, ny, nz] = grid.dims();
    let n = nx * ny * nz;
    assert!(n < u32::MAX as usize, "grid too large for u32 node ids");
    let linear = |idx: [usize; 3]| (idx[0] + nx * (idx[1] + ny * idx[2])) as u32;
    let unlinear = |i: u32| {
        let i = i as usize;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    };

    let goal_center = grid.index_to_center(goal_idx);
    let h = |idx: [usize; 3]| (grid.index_to_center(idx) - goal_center).norm();

    let moves = moves(grid.resolution());
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    let s = linear(start_idx);
    g[s as usize] = 0.0;
    open.push(Open {
        f: h(start_idx),
        g: 0.0,
        node: s,
    });

    let goal_node = linear(goal_idx);
    while let Some(Open { g: gc, node, .. }) = open.pop() {
        if closed[node as usize] {
            continue;
        }
        closed[node as usize] = true;
        if node == goal_node {
            break;
        }
        let idx = unlinear(node);
        'moves: for m in &moves {
            let mut t = [0usize; 3];
            for k in 0..3 {
                let c = idx[k] as i64 + m.delta[k];
                if c < 0 || c >= grid.dims()[k] as i64 {
                    continue 'moves;
                }
                t[k] = c as usize;
            }
            if grid.is_occupied_index(t) {
                continue;
            }
            for s in &m.swept {
                let sv = [
                    (idx[0] as i64 + s[0]) as usize,
                    (idx[1] as i64 + s[1]) as usize,
                    (idx[2] as i64 + s[2]) as usize,
                ];
                if grid.is_occupied_index(sv) {
                    continue 'moves;
                }
            }
            let tn = linear(t);
            let tentative = gc + m.cost;
            if tentative < g[tn as usize] {
                g[tn as usize] = tentative;
                parent[tn as usize] = node;
                open.push(Open {
                    f: tentative + h(t),
                    g: tentative,
                    node: tn,
                });
            }
        }
    }

    if !closed[goal_node as usize] {
        return Err(PathError::Disconnected);
    }
    let mut chain = vec![goal_node];
    while let Some(&last) = chain.last() {
        let p = parent[last as usize];
        if p == u32::MAX {
            break;
        }
        chain.push(p);
    }
    chain.reverse();
    Ok(GeometricPath {
        points: chain.iter().map(|&i| grid.index_to_center(unlinear(i))).collect(),
        cost: g[goal_node as usize],
    })
}

/// Greedy forward sparsification: from the current anchor, keep the farthest
/// later point reachable by a free line segment and continue from it.
/// Endpoints are always retained. Adjacent input points must be mutually
/// visible, which [`astar_grid`] output guarantees.
pub fn sparsify(grid: &VoxelGrid, points: &[Vec3]) -> WaypointPath {
    if points.len() <= 1 {
        return WaypointPath {
            waypoints: points.to_vec(),
        };
    }
    let mut waypoints = vec![points[0]];
    let mut i = 0;
    while i < points.len() - 1 {
        let mut j = points.len() - 1;
        while j > i + 1 && !grid.raycast_free(&points[i], &points[j]) {
            j -= 1;
        }
        waypoints.push(points[j]);
        i = j;
    }
    WaypointPath { waypoints }
}
