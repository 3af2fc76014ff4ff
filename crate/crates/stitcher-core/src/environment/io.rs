//! Grid file format.
//!
//! A grid file is a single ASCII header line
//!
//! ```text
//! stitchgrid v1 <nx> <ny> <nz> <resolution> <ox> <oy> <oz>\n
//! ```
//!
//! followed by exactly `ceil(nx*ny*nz/8)` raw bytes of occupancy bits in
//! x-fastest, then y, then z order, packed LSB-first within each byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::VoxelGrid;
use crate::Vec3;

const MAGIC: &str = "stitchgrid";
const VERSION: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("unreadable grid file: {0}")]
    Unreadable(#[from] std::io::Error),
    #[error("malformed grid header: {0}")]
    MalformedHeader(String),
    #[error("grid payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSize { expected: usize, found: usize },
}

impl VoxelGrid {
    pub fn save(&self, path: &Path) -> Result<(), GridError> {
        let mut w = BufWriter::new(File::create(path)?);
        let [nx, ny, nz] = self.dims();
        let o = self.origin();
        writeln!(
            w,
            "{MAGIC} {VERSION} {nx} {ny} {nz} {} {} {} {}",
            self.resolution(),
            o.x,
            o.y,
            o.z
        )?;
        w.write_all(self.payload())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            match r.read(&mut byte)? {
                0 => return Err(GridError::MalformedHeader("missing newline".into())),
                _ => {
                    if byte[0] == b'\n' {
                        break;
                    }
                    if header.len() > 256 {
                        return Err(GridError::MalformedHeader("header too long".into()));
                    }
                    header.push(byte[0]);
                }
            }
        }
        let header = String::from_utf8(header)
            .map_err(|_| GridError::MalformedHeader("non-UTF-8 header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 9 || fields[0] != MAGIC || fields[1] != VERSION {
            return Err(GridError::MalformedHeader(format!(
                "expected `{MAGIC} {VERSION}` with 7 fields, got `{header}`"
            )));
        }
        let dim = |s: &str| -> Result<usize, GridError> {
            let d: usize = s
                .parse()
                .map_err(|_| GridError::MalformedHeader(format!("bad dimension `{s}`")))?;
            if d == 0 {
                return Err(GridError::MalformedHeader("zero dimension".into()));
            }
            Ok(d)
        };
        let num = |s: &str| -> Result<f64, GridError> {
            s.parse()
                .map_err(|_| GridError::MalformedHeader(format!("bad number `{s}`")))
        };
        let dims = [dim(fields[2])?, dim(fields[3])?, dim(fields[4])?];
        let resolution = num(fields[5])?;
        if !(resolution > 0.0) {
            return Err(GridError::MalformedHeader(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let origin = Vec3::new(num(fields[6])?, num(fields[7])?, num(fields[8])?);

        let expected = (dims[0] * dims[1] * dims[2]).div_ceil(8);
        let mut bits = Vec::new();
        r.read_to_end(&mut bits)?;
        if bits.len() != expected {
            return Err(GridError::PayloadSize {
                expected,
                found: bits.len(),
            });
        }
        Ok(VoxelGrid::from_parts(origin, resolution, dims, bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::generate_perlin;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.grid");
        let g = generate_perlin(5, [33, 17, 9], 0.25, 0.1, 3);
        g.save(&path).unwrap();
        let loaded = VoxelGrid::load(&path).unwrap();
        assert_eq!(g, loaded);
        // a second save is byte-identical
        let path2 = dir.path().join("g2.grid");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_payload_is_size_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.grid");
        let g = generate_perlin(5, [16, 16, 4], 0.5, 0.0, 2);
        g.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match VoxelGrid::load(&path) {
            Err(GridError::PayloadSize { expected, found }) => {
                assert_eq!(expected, 16 * 16 * 4 / 8);
                assert_eq!(found, expected - 7);
            }
            other => panic!("expected payload-size error, got {other:?}"),
        }
    }

    #[test]
    fn bad_resolution_is_header_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.grid");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "stitchgrid v1 4 4 4 -0.5 0 0 0").unwrap();
        f.write_all(&[0u8; 8]).unwrap();
        assert!(matches!(VoxelGrid::load(&path), Err(GridError::MalformedHeader(_))));
    }

    #[test]
    fn wrong_magic_is_header_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.grid");
        std::fs::write(&path, b"voxels v1 1 1 1 0.1 0 0 0\n\0").unwrap();
        assert!(matches!(VoxelGrid::load(&path), Err(GridError::MalformedHeader(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            VoxelGrid::load(Path::new("/nonexistent/nowhere.grid")),
            Err(GridError::Unreadable(_))
        ));
    }
}
