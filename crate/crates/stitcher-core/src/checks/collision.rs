//! Adaptive time-of-collision checking with a reusable safe-sphere cache.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::environment::{DistanceIndex, VoxelGrid};
use crate::primitives::PolynomialTrajectory;
use crate::Vec3;

use super::{Violation, ViolationKind};

/// Minimum advance of the adaptive stepper, in seconds; guarantees
/// termination when a trajectory skims an obstacle surface.
pub const MIN_ADVANCE_S: f64 = 1e-3;

/// Obstacle-free ball certified by a clearance query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeSphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Concurrently readable store of safe spheres keyed by the waypoint pair
/// whose primitives discovered them. Spheres certified while checking one
/// candidate primitive let later candidates between the same waypoints skip
/// clearance queries entirely.
#[derive(Debug, Default)]
pub struct SafeSphereCache {
    map: RwLock<HashMap<(usize, usize), Vec<SafeSphere>>>,
}

impl SafeSphereCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Radius and center distance of the cached sphere strictly containing
    /// `p` with the most escape room (radius minus center distance), if any.
    /// Picking the deepest containment keeps the collision stepper's
    /// advances large when certified spheres overlap.
    fn containing(&self, key: (usize, usize), p: &Vec3) -> Option<(f64, f64)> {
        let map = self.map.read().unwrap();
        let mut best: Option<(f64, f64)> = None;
        for s in map.get(&key)? {
            let dist = (p - s.center).norm();
            if dist < s.radius && best.map_or(true, |(r, d)| s.radius - dist > r - d) {
                best = Some((s.radius, dist));
            }
        }
        best
    }

    fn insert(&self, key: (usize, usize), sphere: SafeSphere) {
        self.map
            .write()
            .unwrap()
            .entry(key)
            .or_default()
            .push(sphere);
    }

    /// Snapshot of the spheres stored under `key`.
    pub fn spheres(&self, key: (usize, usize)) -> Vec<SafeSphere> {
        self.map
            .read()
            .unwrap()
            .get(&key)
            .cloned()
            .unwrap_or_default()
    }

    /// Snapshot of every stored sphere.
    pub fn all_spheres(&self) -> Vec<SafeSphere> {
        self.map
            .read()
            .unwrap()
            .values()
            .flatten()
            .copied()
            .collect()
    }

    /// Total number of stored spheres.
    pub fn len(&self) -> usize {
        self.map.read().unwrap().values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn collision_at(t: f64, clearance: f64) -> Violation {
    Violation {
        time_s: t,
        kind: ViolationKind::Collision,
        value: clearance,
        limit: 0.0,
    }
}

/// Certifies the trajectory obstacle-free or reports the first colliding
/// sample. From each sample the stepper advances by the time needed to leave
/// the local certified-free ball at `v_max`: the ball comes from the cache
/// when the sample already lies inside a stored sphere, otherwise from a
/// fresh clearance query whose result is stored under `pair_key`. Advances
/// are floored at [`MIN_ADVANCE_S`] and the final time is always sampled.
/// Out-of-bounds samples count as collisions, and certified balls are capped
/// at the distance to the grid's outer box so sphere skipping can never hide
/// an excursion outside the mapped volume.
///
/// An `ok` verdict means no point of the trajectory enters an occupied
/// voxel — provided the trajectory respects `v_max`, which
/// [`check_constraints`](super::check_constraints) establishes first.
/// Verdicts are conservative: clearance queries under-report by half a voxel
/// diagonal, so a trajectory grazing within that margin of an occupied
/// voxel may be reported as colliding.
pub fn check_collision(
    traj: &PolynomialTrajectory,
    grid: &VoxelGrid,
    distance: &DistanceIndex,
    cache: Option<&SafeSphereCache>,
    pair_key: (usize, usize),
    v_max: f64,
) -> Option<Violation> {
    assert!(v_max > 0.0 && v_max.is_finite(), "v_max must be positive");
    let t_final = traj.duration();
    let mut t = 0.0;
    loop {
        let at_end = t >= t_final;
        let t_sample = if at_end { t_final } else { t };
        let p = traj.position(t_sample).expect("sample time within domain");
        if grid.is_occupied_point(&p) {
            return Some(collision_at(t_sample, 0.0));
        }
        let escape_time = match cache.and_then(|c| c.containing(pair_key, &p)) {
            Some((radius, dist)) => (radius - dist) / v_max,
            None => {
                let d = distance
                    .nearest_obstacle_distance(&p)
                    .min(grid.boundary_distance(&p));
                if d <= 0.0 {
                    return Some(collision_at(t_sample, d));
                }
                if let Some(c) = cache {
                    c.insert(pair_key, SafeSphere { center: p, radius: d });
                }
                d / v_max
            }
        };
        if at_end {
            return None;
        }
        t = t_sample + escape_time.max(MIN_ADVANCE_S);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::generate_perlin;
    use crate::primitives::{lqmt_fixed_t, BoundaryState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn straight_segment(a: Vec3, b: Vec3, duration: f64) -> PolynomialTrajectory {
        let coeffs = |p0: f64, p1: f64| vec![p0, (p1 - p0) / duration];
        PolynomialTrajectory::single_piece(
            duration,
            [
                coeffs(a.x, b.x),
                coeffs(a.y, b.y),
                coeffs(a.z, b.z),
            ],
        )
    }

    /// In-bounds occupied-voxel membership sampled every millisecond.
    fn dense_first_hit(traj: &PolynomialTrajectory, grid: &VoxelGrid) -> Option<f64> {
        let mut k = 0u64;
        loop {
            let t = (k as f64 * 1e-3).min(traj.duration());
            let p = traj.position(t).unwrap();
            if let Some(idx) = grid.world_to_index(&p) {
                if grid.is_occupied_index(idx) {
                    return Some(t);
                }
            }
            if t >= traj.duration() {
                return None;
            }
            k += 1;
        }
    }

    fn dense_max_speed(traj: &PolynomialTrajectory) -> f64 {
        let mut vmax = 0.0f64;
        let mut k = 0u64;
        loop {
            let t = (k as f64 * 1e-3).min(traj.duration());
            vmax = vmax.max(traj.evaluate(t, 1).unwrap().norm());
            if t >= traj.duration() {
                return vmax;
            }
            k += 1;
        }
    }

    #[test]
    fn empty_grid_certified_by_boundary_capped_spheres() {
        let g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [10, 10, 10]);
        let index = DistanceIndex::build(&g);
        let cache = SafeSphereCache::new();
        let traj = straight_segment(Vec3::new(1.0, 1.0, 1.0), Vec3::new(4.0, 4.0, 4.0), 2.0);
        let verdict = check_collision(&traj, &g, &index, Some(&cache), (0, 1), 10.0);
        assert_eq!(verdict, None);
        // no obstacles, so every query is paid to the boundary cap alone
        let queries = index.query_count();
        assert!((1..=40).contains(&queries), "unexpected query count {queries}");
        assert_eq!(cache.len() as u64, queries);
        for s in cache.spheres((0, 1)) {
            assert!(s.radius.is_finite() && s.radius > 0.0);
            for k in 0..3 {
                assert!(s.center[k] - s.radius >= -1e-12);
                assert!(s.center[k] + s.radius <= 5.0 + 1e-12);
            }
        }
    }

    #[test]
    fn second_primitive_between_same_waypoints_hits_cache_only() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [20, 20, 6]);
        g.set_occupied([10, 10, 3], true);
        let index = DistanceIndex::build(&g);
        let cache = SafeSphereCache::new();
        let a = Vec3::new(0.5, 0.5, 0.5);
        let b = Vec3::new(6.0, 0.5, 0.5);
        let first = straight_segment(a, b, 1.0);
        assert_eq!(check_collision(&first, &g, &index, Some(&cache), (2, 3), 10.0), None);
        let queries_after_first = index.query_count();
        assert!(queries_after_first >= 1);
        assert_eq!(cache.len() as u64, queries_after_first);

        // same path retraced on a different time law: every sample lies
        // strictly inside a sphere certified by the first pass
        let second = straight_segment(a, b, 1.7);
        assert_eq!(check_collision(&second, &g, &index, Some(&cache), (2, 3), 10.0), None);
        assert_eq!(index.query_count(), queries_after_first);

        // a different waypoint pair does not see those spheres
        let third = straight_segment(a, b, 1.0);
        assert_eq!(check_collision(&third, &g, &index, Some(&cache), (4, 5), 10.0), None);
        assert!(index.query_count() > queries_after_first);
    }

    #[test]
    fn wall_crossing_is_reported_near_entry() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [20, 12, 6]);
        for iy in 0..12 {
            for iz in 0..6 {
                g.set_occupied([10, iy, iz], true);
            }
        }
        let index = DistanceIndex::build(&g);
        let traj = straight_segment(Vec3::new(1.0, 3.0, 1.5), Vec3::new(9.0, 3.0, 1.5), 2.0);
        let verdict = check_collision(&traj, &g, &index, None, (0, 1), 10.0).unwrap();
        assert_eq!(verdict.kind, ViolationKind::Collision);
        let dense = dense_first_hit(&traj, &g).expect("oracle must also see the wall");
        // conservative clearance fires at or slightly before voxel entry;
        // the floored advance can overshoot by at most v_max * MIN_ADVANCE_S
        assert!(
            verdict.time_s <= dense + 2.0 * MIN_ADVANCE_S,
            "reported {} vs dense {dense}",
            verdict.time_s
        );
    }

    #[test]
    fn leaving_the_grid_is_collision_at_the_crossing() {
        let g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [10, 10, 10]);
        let index = DistanceIndex::build(&g);
        let traj = straight_segment(Vec3::new(2.5, 2.5, 2.5), Vec3::new(8.0, 2.5, 2.5), 1.0);
        let verdict = check_collision(&traj, &g, &index, None, (0, 1), 10.0).unwrap();
        assert_eq!(verdict.kind, ViolationKind::Collision);
        // x(t) = 2.5 + 5.5 t crosses the x = 5 face at t = 5/11
        let crossing = 2.5 / 5.5;
        assert!(
            verdict.time_s >= crossing && verdict.time_s <= crossing + 5.0 * MIN_ADVANCE_S,
            "reported {} vs crossing {crossing}",
            verdict.time_s
        );
    }

    #[test]
    fn excursion_outside_grid_between_samples_is_caught() {
        // Free grid: obstacle clearance alone would certify everything in one
        // query and the stepper would jump straight to the final sample. The
        // arc below leaves through the ceiling mid-flight and returns, so
        // only boundary-capped spheres can catch it.
        let g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [10, 10, 10]);
        let index = DistanceIndex::build(&g);
        let traj = PolynomialTrajectory::single_piece(
            1.0,
            [
                vec![2.5],
                vec![2.5],
                vec![1.0, 20.0, -20.0],
            ],
        );
        assert!(traj.position(0.5).unwrap().z > 5.0, "arc must exit the box");
        assert!(g.is_free_point(&traj.position(0.0).unwrap()));
        assert!(g.is_free_point(&traj.position(1.0).unwrap()));
        let verdict = check_collision(&traj, &g, &index, None, (0, 1), 21.0).unwrap();
        assert_eq!(verdict.kind, ViolationKind::Collision);
        // z(t) = 1 + 20 t - 20 t^2 crosses z = 5 at t = (5 - sqrt(5))/10
        let crossing = (5.0 - 5.0f64.sqrt()) / 10.0;
        assert!(
            verdict.time_s >= crossing && verdict.time_s <= crossing + 5.0 * MIN_ADVANCE_S,
            "reported {} vs crossing {crossing}",
            verdict.time_s
        );
    }

    #[test]
    fn ok_verdicts_are_sound_against_dense_sampling() {
        let mut instances = 0;
        let mut certified = 0;
        for seed in [5u64, 17, 40, 71] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
            let g = generate_perlin(seed, [24, 24, 10], 0.5, 0.3, 3);
            let index = DistanceIndex::build(&g);
            let free_point = |rng: &mut ChaCha8Rng| loop {
                let p = Vec3::new(
                    rng.gen_range(0.5..11.5),
                    rng.gen_range(0.5..11.5),
                    rng.gen_range(0.5..4.5),
                );
                if g.is_free_point(&p) {
                    break p;
                }
            };
            for _ in 0..8 {
                let p0 = free_point(&mut rng);
                let p1 = free_point(&mut rng);
                let vel = |rng: &mut ChaCha8Rng| {
                    Vec3::new(
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-1.0..1.0),
                    )
                };
                let x0 = BoundaryState::new(p0, vel(&mut rng));
                let xf = BoundaryState::new(p1, vel(&mut rng));
                let traj = lqmt_fixed_t(&x0, &xf, 2.0).unwrap();
                instances += 1;
                let cache = SafeSphereCache::new();
                let v_bound = dense_max_speed(&traj) + 1e-9;
                if check_collision(&traj, &g, &index, Some(&cache), (0, 1), v_bound).is_none() {
                    certified += 1;
                    assert_eq!(
                        dense_first_hit(&traj, &g),
                        None,
                        "adaptive ok but dense sampling found an occupied voxel (seed {seed})"
                    );
                }
            }
        }
        assert!(
            certified >= instances / 4,
            "only {certified}/{instances} certified; property vacuous"
        );
    }

    #[test]
    fn cached_spheres_contain_no_occupied_voxel() {
        // distance from a point to a voxel's axis-aligned box
        fn aabb_distance(g: &VoxelGrid, idx: [usize; 3], p: &Vec3) -> f64 {
            let lo = g.index_to_center(idx) - Vec3::repeat(g.resolution() / 2.0);
            let hi = lo + Vec3::repeat(g.resolution());
            let mut d2 = 0.0;
            for k in 0..3 {
                let c = p[k].clamp(lo[k], hi[k]);
                d2 += (p[k] - c) * (p[k] - c);
            }
            d2.sqrt()
        }

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = generate_perlin(31, [20, 20, 8], 0.5, 0.25, 3);
        let index = DistanceIndex::build(&g);
        let cache = SafeSphereCache::new();
        for pair in 0..10 {
            let p0 = Vec3::new(rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5), rng.gen_range(0.5..3.5));
            let p1 = Vec3::new(rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5), rng.gen_range(0.5..3.5));
            let traj = straight_segment(p0, p1, 1.0);
            check_collision(&traj, &g, &index, Some(&cache), (pair, pair + 1), 10.0);
        }
        let spheres = cache.all_spheres();
        assert!(!spheres.is_empty());
        let [nx, ny, nz] = g.dims();
        for s in &spheres {
            assert!(s.radius.is_finite(), "boundary cap keeps radii finite");
            for k in 0..3 {
                let hi = g.origin()[k] + g.dims()[k] as f64 * g.resolution();
                assert!(s.center[k] - s.radius >= g.origin()[k] - 1e-9);
                assert!(s.center[k] + s.radius <= hi + 1e-9);
            }
            for ix in 0..nx {
                for iy in 0..ny {
                    for iz in 0..nz {
                        let idx = [ix, iy, iz];
                        if g.is_occupied_index(idx) {
                            assert!(
                                aabb_distance(&g, idx, &s.center) >= s.radius - 1e-9,
                                "occupied voxel {idx:?} intrudes into sphere at {:?} r={}",
                                s.center,
                                s.radius
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn stationary_trajectory_single_sample() {
        let mut g = VoxelGrid::new_free(Vec3::zeros(), 0.5, [8, 8, 8]);
        g.set_occupied([7, 7, 7], true);
        let index = DistanceIndex::build(&g);
        let traj = PolynomialTrajectory::stationary(Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(check_collision(&traj, &g, &index, None, (0, 0), 5.0), None);
        assert_eq!(index.query_count(), 1);
        let occupied = PolynomialTrajectory::stationary(Vec3::new(3.75, 3.75, 3.75));
        let v = check_collision(&occupied, &g, &index, None, (0, 0), 5.0).unwrap();
        assert_eq!(v.kind, ViolationKind::Collision);
        assert_eq!(v.time_s, 0.0);
    }
}
