//! Voxel occupancy world: procedural generation, file I/O, occupancy and
//! clearance queries, free-space raycasting.

mod distance;
mod io;
mod perlin;
mod raycast;

pub use distance::DistanceIndex;
pub use io::GridError;
pub use perlin::generate_perlin;

use crate::Vec3;

/// Dense 3D occupancy grid with uniform resolution.
///
/// Occupancy is stored bit-packed in x-fastest, then y, then z order with
/// LSB-first packing inside each byte, which is also the on-disk payload
/// layout. Anything outside the grid bounds is treated as occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    bits: Vec<u8>,
    inflation_radius: f64,
}

impl VoxelGrid {
    /// Creates an all-free grid. `dims` components must be >= 1 and
    /// `resolution` > 0.
    pub fn new_free(origin: Vec3, resolution: f64, dims: [usize; 3]) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        assert!(dims.iter().all(|&d| d >= 1), "dims must be >= 1");
        let n = dims[0] * dims[1] * dims[2];
        VoxelGrid {
            origin,
            resolution,
            dims,
            bits: vec![0u8; n.div_ceil(8)],
            inflation_radius: 0.0,
        }
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Obstacle dilation radius already applied to this grid, in meters.
    pub fn inflation_radius(&self) -> f64 {
        self.inflation_radius
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub(crate) fn payload(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn from_parts(
        origin: Vec3,
        resolution: f64,
        dims: [usize; 3],
        bits: Vec<u8>,
    ) -> Self {
        let mut g = VoxelGrid {
            origin,
            resolution,
            dims,
            bits,
            inflation_radius: 0.0,
        };
        g.clear_padding_bits();
        g
    }

    // Padding bits past the last voxel must stay zero so that saved files are
    // byte-identical for identical grids.
    fn clear_padding_bits(&mut self) {
        let n = self.voxel_count();
        let used = n % 8;
        if used != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u8 << used) - 1;
            }
        }
    }

    #[inline]
    fn linear(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn in_bounds_index(&self, idx: [i64; 3]) -> bool {
        (0..3).all(|k| idx[k] >= 0 && (idx[k] as usize) < self.dims[k])
    }

    /// World position -> voxel index via `floor((p - origin)/resolution)`.
    /// Returns `None` when the point lies outside the grid.
    pub fn world_to_index(&self, p: &Vec3) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let i = ((p[k] - self.origin[k]) / self.resolution).floor();
            if i < 0.0 || i >= self.dims[k] as f64 {
                return None;
            }
            idx[k] = i as usize;
        }
        Some(idx)
    }

    /// Center of the voxel at `idx`, in world coordinates.
    pub fn index_to_center(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (idx[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (idx[2] as f64 + 0.5) * self.resolution,
        )
    }

    #[inline]
    pub fn is_occupied_index(&self, idx: [usize; 3]) -> bool {
        let i = self.linear(idx);
        self.bits[i >> 3] & (1 << (i & 7)) != 0
    }

    /// Occupancy at a world point; out-of-bounds counts as occupied.
    pub fn is_occupied_point(&self, p: &Vec3) -> bool {
        match self.world_to_index(p) {
            Some(idx) => self.is_occupied_index(idx),
            None => true,
        }
    }

    /// True when `p` maps to an in-bounds free voxel.
    pub fn is_free_point(&self, p: &Vec3) -> bool {
        !self.is_occupied_point(p)
    }

    /// Distance from `p` to the nearest face of the grid's outer box;
    /// negative when `p` lies outside the mapped volume.
    pub fn boundary_distance(&self, p: &Vec3) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..3 {
            let lo = self.origin[k];
            let hi = self.origin[k] + self.dims[k] as f64 * self.resolution;
            d = d.min(p[k] - lo).min(hi - p[k]);
        }
        d
    }

    pub fn set_occupied(&mut self, idx: [usize; 3], occupied: bool) {
        let i = self.linear(idx);
        if occupied {
            self.bits[i >> 3] |= 1 << (i & 7);
        } else {
            self.bits[i >> 3] &= !(1 << (i & 7));
        }
    }

    /// Fraction of occupied voxels.
    pub fn occupancy_fraction(&self) -> f64 {
        let occ: u32 = self.bits.iter().map(|b| b.count_ones()).sum();
        occ as f64 / self.voxel_count() as f64
    }

    /// Iterator over the centers of all occupied voxels.
    pub fn occupied_centers(&self) -> impl Iterator<Item = Vec3> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz).flat_map(move |iz| {
            (0..ny).flat_map(move |iy| {
                (0..nx).filter_map(move |ix| {
                    let idx = [ix, iy, iz];
                    self.is_occupied_index(idx).then(|| self.index_to_center(idx))
                })
            })
        })
    }

    /// Returns a copy where every voxel whose center lies within `radius`
    /// (center-to-center) of an originally occupied voxel is occupied.
    pub fn inflated(&self, radius: f64) -> Self {
        assert!(radius >= 0.0, "inflation radius must be non-negative");
        let mut out = self.clone();
        out.inflation_radius = radius;
        if radius == 0.0 {
            return out;
        }
        let r_vox = (radius / self.resolution).floor() as i64;
        let r2 = (radius / self.resolution) * (radius / self.resolution);
        let mut ball = Vec::new();
        for dz in -r_vox..=r_vox {
            for dy in -r_vox..=r_vox {
                for dx in -r_vox..=r_vox {
                    if (dx * dx + dy * dy + dz * dz) as f64 <= r2 {
                        ball.push([dx, dy, dz]);
                    }
                }
            }
        }
        let [nx, ny, nz] = self.dims;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    if !self.is_occupied_index([ix, iy, iz]) {
                        continue;
                    }
                    for d in &ball {
                        let t = [ix as i64 + d[0], iy as i64 + d[1], iz as i64 + d[2]];
                        if out.in_bounds_index(t) {
                            out.set_occupied([t[0] as usize, t[1] as usize, t[2] as usize], true);
                        }
                    }
                }
            }
        }
        out
    }
}
