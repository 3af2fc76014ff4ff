//! Procedural occupancy from seeded 3D gradient noise.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::VoxelGrid;
use crate::Vec3;

/// Wavelength of the lowest noise octave, in meters. Chosen so a ~50 m arena
/// contains a handful of large obstacle clusters; higher octaves add detail
/// at half the scale each.
const BASE_WAVELENGTH_M: f64 = 10.0;

/// Amplitude falloff per octave.
const PERSISTENCE: f64 = 0.5;

/// Generates an occupancy grid by thresholding fractal gradient noise at the
/// voxel centers: a voxel is occupied iff the noise value is >= `threshold`.
///
/// Deterministic for a fixed `(seed, dims, resolution, threshold, octaves)`
/// tuple. Noise values lie strictly inside (-1, 1), so a threshold above 1
/// yields an all-free grid and one below -1 an all-occupied grid.
pub fn generate_perlin(
    seed: u64,
    dims: [usize; 3],
    resolution: f64,
    threshold: f64,
    octaves: u32,
) -> VoxelGrid {
    assert!(octaves >= 1, "octaves must be >= 1");
    let noise = PerlinNoise::new(seed);
    let mut grid = VoxelGrid::new_free(Vec3::zeros(), resolution, dims);
    let amplitude_sum: f64 = (0..octaves).map(|o| PERSISTENCE.powi(o as i32)).sum();
    let [nx, ny, nz] = dims;
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let c = grid.index_to_center([ix, iy, iz]);
                let mut value = 0.0;
                let mut freq = 1.0 / BASE_WAVELENGTH_M;
                let mut amp = 1.0;
                for _ in 0..octaves {
                    value += amp * noise.sample(c.x * freq, c.y * freq, c.z * freq);
                    freq *= 2.0;
                    amp *= PERSISTENCE;
                }
                if value / amplitude_sum >= threshold {
                    grid.set_occupied([ix, iy, iz], true);
                }
            }
        }
    }
    grid
}

/// Classic permutation-table gradient noise with a seed-shuffled table.
struct PerlinNoise {
    perm: [u8; 512],
}

impl PerlinNoise {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table: Vec<u8> = (0..=255).collect();
        table.shuffle(&mut rng);
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        PerlinNoise { perm }
    }

    fn sample(&self, x: f64, y: f64, z: f64) -> f64 {
        let (xf, yf, zf) = (x.floor(), y.floor(), z.floor());
        let xi = (xf as i64 & 255) as usize;
        let yi = (yf as i64 & 255) as usize;
        let zi = (zf as i64 & 255) as usize;
        let (x, y, z) = (x - xf, y - yf, z - zf);
        let (u, v, w) = (fade(x), fade(y), fade(z));
        let p = &self.perm;

        let a = p[xi] as usize + yi;
        let aa = p[a] as usize + zi;
        let ab = p[a + 1] as usize + zi;
        let b = p[xi + 1] as usize + yi;
        let ba = p[b] as usize + zi;
        let bb = p[b + 1] as usize + zi;

        lerp(
            w,
            lerp(
                v,
                lerp(u, grad(p[aa], x, y, z), grad(p[ba], x - 1.0, y, z)),
                lerp(u, grad(p[ab], x, y - 1.0, z), grad(p[bb], x - 1.0, y - 1.0, z)),
            ),
            lerp(
                v,
                lerp(u, grad(p[aa + 1], x, y, z - 1.0), grad(p[ba + 1], x - 1.0, y, z - 1.0)),
                lerp(
                    u,
                    grad(p[ab + 1], x, y - 1.0, z - 1.0),
                    grad(p[bb + 1], x - 1.0, y - 1.0, z - 1.0),
                ),
            ),
        )
    }
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

fn grad(hash: u8, x: f64, y: f64, z: f64) -> f64 {
    let h = hash & 15;
    let u = if h < 8 { x } else { y };
    let v = if h < 4 {
        y
    } else if h == 12 || h == 14 {
        x
    } else {
        z
    };
    (if h & 1 == 0 { u } else { -u }) + (if h & 2 == 0 { v } else { -v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_above_range_gives_all_free() {
        let g = generate_perlin(3, [20, 20, 6], 0.5, 1.0 + 1e-9, 4);
        assert_eq!(g.occupancy_fraction(), 0.0);
    }

    #[test]
    fn threshold_below_range_gives_all_occupied() {
        let g = generate_perlin(3, [20, 20, 6], 0.5, -1.0 - 1e-9, 4);
        assert_eq!(g.occupancy_fraction(), 1.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = generate_perlin(7, [100, 100, 10], 0.25, 0.2, 4);
        let b = generate_perlin(7, [100, 100, 10], 0.25, 0.2, 4);
        assert_eq!(a, b);
        let c = generate_perlin(8, [100, 100, 10], 0.25, 0.2, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn occupancy_fraction_non_increasing_in_threshold() {
        let mut last = f64::INFINITY;
        for &th in &[-0.5, -0.1, 0.0, 0.1, 0.2, 0.4, 0.8] {
            let g = generate_perlin(11, [40, 40, 10], 0.5, th, 3);
            let f = g.occupancy_fraction();
            assert!(f <= last, "occupancy grew from {last} to {f} at threshold {th}");
            last = f;
        }
    }

    #[test]
    fn noise_values_within_unit_range() {
        let n = PerlinNoise::new(42);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..20_000 {
            let t = i as f64 * 0.137;
            let v = n.sample(t.sin() * 40.0, t * 0.31, t.cos() * 17.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo > -1.0 && hi < 1.0, "range [{lo}, {hi}] escapes (-1, 1)");
        assert!(hi > 0.3 && lo < -0.3, "range [{lo}, {hi}] suspiciously narrow");
    }
}
