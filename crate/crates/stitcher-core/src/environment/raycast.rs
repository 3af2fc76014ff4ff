//! Free-space raycasting by voxel traversal.

use super::VoxelGrid;
use crate::Vec3;

impl VoxelGrid {
    /// True iff every voxel traversed by the segment `a -> b` is free.
    ///
    /// Uses axis-stepping DDA traversal; when the segment crosses a voxel
    /// edge or corner exactly, the tied axes are advanced one at a time so
    /// the grazed voxels are included (conservative). Endpoints outside the
    /// grid make the result false.
    pub fn raycast_free(&self, a: &Vec3, b: &Vec3) -> bool {
        let (Some(ia), Some(ib)) = (self.world_to_index(a), self.world_to_index(b)) else {
            return false;
        };
        if self.is_occupied_index(ia) {
            return false;
        }
        if ia == ib {
            return true;
        }

        let d = b - a;
        let mut cur = [ia[0] as i64, ia[1] as i64, ia[2] as i64];
        let goal = [ib[0] as i64, ib[1] as i64, ib[2] as i64];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            if d[k] > 0.0 {
                step[k] = 1;
                let boundary = self.origin[k] + (cur[k] + 1) as f64 * self.resolution;
                t_max[k] = (boundary - a[k]) / d[k];
                t_delta[k] = self.resolution / d[k];
            } else if d[k] < 0.0 {
                step[k] = -1;
                let boundary = self.origin[k] + cur[k] as f64 * self.resolution;
                t_max[k] = (boundary - a[k]) / d[k];
                t_delta[k] = self.resolution / -d[k];
            }
        }

        // Worst case the ray enters every voxel layer once per axis.
        let max_steps: i64 = (0..3).map(|k| (goal[k] - cur[k]).abs()).sum::<i64>() + 6;
        for _ in 0..max_steps {
            // Advance the axis with the smallest crossing time; exact ties
            // resolve in x,y,z order, which visits the grazed voxel too.
            let mut axis = 0;
            for k in 1..3 {
                if t_max[k] < t_max[axis] {
                    axis = k;
                }
            }
            cur[axis] += step[axis];
            t_max[axis] += t_delta[axis];
            if !self.in_bounds_index(cur) {
                return false;
            }
            if self.is_occupied_index([cur[0] as usize, cur[1] as usize, cur[2] as usize]) {
                return false;
            }
            if cur == goal {
                return true;
            }
        }
        // Traversal failed to land on the goal voxel; treat as blocked.
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_grid() -> VoxelGrid {
        VoxelGrid::new_free(Vec3::zeros(), 1.0, [10, 10, 10])
    }

    #[test]
    fn zero_length_ray_in_free_voxel() {
        let g = free_grid();
        let p = g.index_to_center([4, 4, 4]);
        assert!(g.raycast_free(&p, &p));
    }

    #[test]
    fn zero_length_ray_in_occupied_voxel() {
        let mut g = free_grid();
        g.set_occupied([4, 4, 4], true);
        let p = g.index_to_center([4, 4, 4]);
        assert!(!g.raycast_free(&p, &p));
    }

    #[test]
    fn all_free_grid_any_segment() {
        let g = free_grid();
        let a = g.index_to_center([0, 0, 0]);
        let b = g.index_to_center([9, 9, 9]);
        assert!(g.raycast_free(&a, &b));
        assert!(g.raycast_free(&b, &a));
    }

    #[test]
    fn blocked_by_occupied_voxel() {
        let mut g = free_grid();
        g.set_occupied([5, 5, 5], true);
        let a = g.index_to_center([1, 5, 5]);
        let b = g.index_to_center([9, 5, 5]);
        assert!(!g.raycast_free(&a, &b));
        // a parallel row stays clear
        let a2 = g.index_to_center([1, 6, 5]);
        let b2 = g.index_to_center([9, 6, 5]);
        assert!(g.raycast_free(&a2, &b2));
    }

    #[test]
    fn out_of_bounds_endpoint_is_blocked() {
        let g = free_grid();
        let a = g.index_to_center([5, 5, 5]);
        assert!(!g.raycast_free(&a, &Vec3::new(20.0, 5.0, 5.0)));
        assert!(!g.raycast_free(&Vec3::new(-1.0, 5.0, 5.0), &a));
    }

    #[test]
    fn diagonal_corner_graze_is_conservative() {
        // Exact diagonal through a checkerboard gap: both side voxels are
        // occupied, the segment only touches their shared corner. The
        // conservative tie rule reports it blocked.
        let mut g = free_grid();
        g.set_occupied([5, 4, 4], true);
        g.set_occupied([4, 5, 4], true);
        let a = g.index_to_center([4, 4, 4]);
        let b = g.index_to_center([5, 5, 4]);
        assert!(!g.raycast_free(&a, &b));
    }

    #[test]
    fn matches_dense_sampling_on_random_segments() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [20, 20, 8]);
        for _ in 0..180 {
            let idx = [rng.gen_range(0..20), rng.gen_range(0..20), rng.gen_range(0..8)];
            g.set_occupied(idx, true);
        }
        let mut checked = 0;
        for _ in 0..400 {
            let a = Vec3::new(
                rng.gen_range(0.01..9.99),
                rng.gen_range(0.01..9.99),
                rng.gen_range(0.01..3.99),
            );
            let b = Vec3::new(
                rng.gen_range(0.01..9.99),
                rng.gen_range(0.01..9.99),
                rng.gen_range(0.01..3.99),
            );
            if !g.raycast_free(&a, &b) {
                continue;
            }
            checked += 1;
            // dense point sampling along the segment must find only free voxels
            let n = 1000;
            for i in 0..=n {
                let p = a + (b - a) * (i as f64 / n as f64);
                assert!(!g.is_occupied_point(&p), "raycast ok but {p:?} occupied");
            }
        }
        assert!(checked > 20, "too few free segments exercised ({checked})");
    }
}
