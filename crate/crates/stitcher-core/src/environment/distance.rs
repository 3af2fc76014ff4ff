//! Nearest-obstacle clearance queries.

use std::sync::atomic::{AtomicU64, Ordering};

use rstar::RTree;

use super::VoxelGrid;
use crate::math::half_diagonal;
use crate::Vec3;

/// Spatial index over occupied-voxel centers answering conservative
/// free-distance queries.
///
/// A query returns the Euclidean distance from the point to the nearest
/// occupied center minus half the voxel diagonal, clamped at zero — a lower
/// bound on the distance to the nearest occupied voxel surface. Immutable
/// once built; queries are thread-safe.
///
/// Occupancy grids routinely contain walls and floors — thousands of points
/// sharing one coordinate — so the index must stay correct on such
/// degenerate inputs; the R*-tree's bulk loading handles them without
/// special-casing.
pub struct DistanceIndex {
    tree: RTree<[f64; 3]>,
    occupied: usize,
    surface_margin: f64,
    queries: AtomicU64,
}

impl DistanceIndex {
    /// Builds the index from all occupied voxels of `grid`.
    pub fn build(grid: &VoxelGrid) -> Self {
        let points: Vec<[f64; 3]> = grid.occupied_centers().map(|c| [c.x, c.y, c.z]).collect();
        DistanceIndex {
            occupied: points.len(),
            tree: RTree::bulk_load(points),
            surface_margin: half_diagonal(grid.resolution()),
            queries: AtomicU64::new(0),
        }
    }

    /// Conservative free distance from `p` to the nearest occupied voxel
    /// surface. Returns `f64::INFINITY` when the grid has no obstacles.
    pub fn nearest_obstacle_distance(&self, p: &Vec3) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let q = [p.x, p.y, p.z];
        let Some(nearest) = self.tree.nearest_neighbor(&q) else {
            return f64::INFINITY;
        };
        let d2: f64 = (0..3).map(|k| (nearest[k] - q[k]) * (nearest[k] - q[k])).sum();
        (d2.sqrt() - self.surface_margin).max(0.0)
    }

    /// Number of occupied voxels indexed.
    pub fn obstacle_count(&self) -> usize {
        self.occupied
    }

    /// Total nearest-neighbor queries served so far.
    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_returns_infinity() {
        let g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [10, 10, 10]);
        let idx = DistanceIndex::build(&g);
        assert_eq!(idx.obstacle_count(), 0);
        assert_eq!(idx.nearest_obstacle_distance(&Vec3::new(1.0, 1.0, 1.0)), f64::INFINITY);
    }

    #[test]
    fn point_inside_obstacle_voxel_is_zero() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [10, 10, 10]);
        g.set_occupied([3, 3, 3], true);
        let idx = DistanceIndex::build(&g);
        let c = g.index_to_center([3, 3, 3]);
        assert_eq!(idx.nearest_obstacle_distance(&c), 0.0);
    }

    #[test]
    fn single_obstacle_matches_brute_force() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.2, [40, 40, 40]);
        g.set_occupied([30, 7, 21], true);
        let idx = DistanceIndex::build(&g);
        let p = Vec3::new(1.0, 1.0, 1.0);
        let c = g.index_to_center([30, 7, 21]);
        let expect = (c - p).norm() - half_diagonal(0.2);
        let got = idx.nearest_obstacle_distance(&p);
        assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");
    }

    #[test]
    fn random_grid_matches_brute_force_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut g = VoxelGrid::new_free(Vec3::new(-2.0, 0.0, 1.0), 0.3, [22, 18, 12]);
        for _ in 0..60 {
            let idx = [rng.gen_range(0..22), rng.gen_range(0..18), rng.gen_range(0..12)];
            g.set_occupied(idx, true);
        }
        let index = DistanceIndex::build(&g);
        let centers: Vec<Vec3> = g.occupied_centers().collect();
        for _ in 0..200 {
            let p = Vec3::new(
                rng.gen_range(-2.0..4.6),
                rng.gen_range(0.0..5.4),
                rng.gen_range(1.0..4.6),
            );
            let brute = centers
                .iter()
                .map(|c| (c - p).norm())
                .fold(f64::INFINITY, f64::min)
                - half_diagonal(0.3);
            let expect = brute.max(0.0);
            let got = index.nearest_obstacle_distance(&p);
            assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");
        }
    }

    #[test]
    fn solid_wall_many_coplanar_points() {
        // walls put thousands of occupied centers on one plane; the index
        // must neither panic nor misreport on such degenerate inputs
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.25, [40, 40, 40]);
        for iy in 0..40 {
            for iz in 0..40 {
                g.set_occupied([20, iy, iz], true);
            }
        }
        let idx = DistanceIndex::build(&g);
        assert_eq!(idx.obstacle_count(), 1600);
        let p = Vec3::new(1.0, 5.0, 5.0);
        // nearest center is (5.125, 4.875, 4.875)
        let expect = (Vec3::new(5.125, 4.875, 4.875) - p).norm() - half_diagonal(0.25);
        let got = idx.nearest_obstacle_distance(&p);
        assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");
    }

    #[test]
    fn query_counter_increments() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [4, 4, 4]);
        g.set_occupied([0, 0, 0], true);
        let idx = DistanceIndex::build(&g);
        assert_eq!(idx.query_count(), 0);
        idx.nearest_obstacle_distance(&Vec3::new(1.0, 1.0, 1.0));
        idx.nearest_obstacle_distance(&Vec3::new(1.5, 1.0, 1.0));
        assert_eq!(idx.query_count(), 2);
    }

    #[test]
    fn distance_raycast_consistency() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [24, 24, 10]);
        for _ in 0..120 {
            let idx = [rng.gen_range(0..24), rng.gen_range(0..24), rng.gen_range(0..10)];
            g.set_occupied(idx, true);
        }
        let index = DistanceIndex::build(&g);
        let diag = 3.0f64.sqrt() * 0.5;
        for _ in 0..300 {
            let p = Vec3::new(rng.gen_range(0.1..11.9), rng.gen_range(0.1..11.9), rng.gen_range(0.1..4.9));
            let b = Vec3::new(rng.gen_range(0.1..11.9), rng.gen_range(0.1..11.9), rng.gen_range(0.1..4.9));
            let d = index.nearest_obstacle_distance(&p);
            if d > (b - p).norm() + diag {
                assert!(g.raycast_free(&p, &b), "clearance {d} but raycast blocked {p:?}->{b:?}");
            }
        }
    }
}
