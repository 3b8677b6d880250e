//! Run artifacts: CSV tables, field exports, the binary dump and the JSON
//! manifest.

use crate::error::{LabError, Result};
use crate::grid::{Grid2D, Grid3D, ScalarField2D, VectorField3D};
use ndarray::{Array2, Array3};
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(LabError::guard("csv", format!("row has {} cells, header {}", row.len(), header.len())));
        }
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::Io(io),
        other => LabError::guard("csv", format!("{other:?}")),
    }
}

/// One row per node: `x1, x2, w`, plain samples.
pub fn write_scalar_csv<P: AsRef<Path>>(path: P, w: &ScalarField2D) -> Result<()> {
    let c = w.grid.coords();
    let rows: Vec<Vec<String>> =
        w.plain().indexed_iter().map(|((i, j), v)| vec![fmt_f64(c[i]), fmt_f64(c[j]), fmt_f64(*v)]).collect();
    write_csv(path, &["x1", "x2", "w"], &rows)
}

/// One row per node: `x1, x2, x3, w1, w2, w3`.
pub fn write_vector_csv<P: AsRef<Path>>(path: P, w: &VectorField3D) -> Result<()> {
    let c = w.grid.horizontal().coords();
    let c3 = w.grid.coords3();
    let rows: Vec<Vec<String>> = w.comps[0]
        .indexed_iter()
        .map(|((k, i, j), _)| {
            vec![
                fmt_f64(c[i]),
                fmt_f64(c[j]),
                fmt_f64(c3[k]),
                fmt_f64(w.comps[0][[k, i, j]]),
                fmt_f64(w.comps[1][[k, i, j]]),
                fmt_f64(w.comps[2][[k, i, j]]),
            ]
        })
        .collect();
    write_csv(path, &["x1", "x2", "x3", "w1", "w2", "w3"], &rows)
}

const DUMP_MAGIC: &[u8; 8] = b"BVLDUMP1";

/// A field as stored in the binary dump.
#[derive(Debug, Clone)]
pub enum FieldDump {
    Planar(ScalarField2D),
    Spatial(VectorField3D),
}

/// Layout, all little-endian: magic, `u64` dimension (2 or 3), `u64 n`,
/// `f64 radius`, `u64 n3`, `f64 half_height`, `u64` component count, then
/// each component in row-major order (`[x3][x1][x2]` for 3D).
pub fn write_dump<P: AsRef<Path>>(path: P, field: &FieldDump) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(DUMP_MAGIC)?;
    match field {
        FieldDump::Planar(f) => {
            for v in [2u64, f.grid.n() as u64] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&f.grid.radius().to_le_bytes())?;
            w.write_all(&0u64.to_le_bytes())?;
            w.write_all(&0f64.to_le_bytes())?;
            w.write_all(&1u64.to_le_bytes())?;
            for v in f.plain().iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        FieldDump::Spatial(f) => {
            let g = f.grid;
            for v in [3u64, g.n() as u64] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&g.horizontal().radius().to_le_bytes())?;
            w.write_all(&(g.n3() as u64).to_le_bytes())?;
            w.write_all(&g.half_height().to_le_bytes())?;
            w.write_all(&3u64.to_le_bytes())?;
            for c in &f.comps {
                for v in c.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dump<P: AsRef<Path>>(path: P) -> Result<FieldDump> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(LabError::guard("dump", "not a field dump (bad magic)"));
    }
    let mut word = [0u8; 8];
    let mut next_u = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let dim = next_u(&mut r)?;
    let n = next_u(&mut r)? as usize;
    let radius = f64::from_bits(next_u(&mut r)?);
    let n3 = next_u(&mut r)? as usize;
    let half_height = f64::from_bits(next_u(&mut r)?);
    let comps = next_u(&mut r)? as usize;
    let values = |count: usize, r: &mut BufReader<File>| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; 8 * count];
        r.read_exact(&mut buf)?;
        Ok(buf.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    };
    match (dim, comps) {
        (2, 1) => {
            let grid = Grid2D::new(n, radius)?;
            let data = Array2::from_shape_vec((n, n), values(n * n, &mut r)?)
                .map_err(|e| LabError::guard("dump", e.to_string()))?;
            Ok(FieldDump::Planar(ScalarField2D::new(grid, data)?))
        }
        (3, 3) => {
            let grid = Grid3D::new(n, radius, n3, half_height)?;
            let mut out = VectorField3D::zeros(grid);
            for c in 0..3 {
                out.comps[c] = Array3::from_shape_vec(grid.shape(), values(n3 * n * n, &mut r)?)
                    .map_err(|e| LabError::guard("dump", e.to_string()))?;
            }
            Ok(FieldDump::Spatial(out))
        }
        _ => Err(LabError::guard("dump", format!("unsupported layout: dimension {dim}, {comps} components"))),
    }
}

/// Everything needed to reproduce a run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize, R: Serialize> {
    pub command: String,
    pub library_version: &'static str,
    pub config: C,
    pub wall_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub results: R,
}

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

impl<C: Serialize, R: Serialize> Manifest<C, R> {
    pub fn write<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| LabError::guard("manifest", e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{eval_g, grad_g};

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE, 2.0f64.sqrt()] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn dumps_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g2 = Grid2D::new(16, 6.0).unwrap();
        let planar = ScalarField2D::from_fn(g2, eval_g);
        let p = dir.path().join("w.bin");
        write_dump(&p, &FieldDump::Planar(planar.clone())).unwrap();
        match read_dump(&p).unwrap() {
            FieldDump::Planar(back) => assert_eq!(back.data, planar.data),
            other => panic!("{other:?}"),
        }
        let g3 = Grid3D::new(8, 5.0, 8, 3.0).unwrap();
        let spatial = VectorField3D::from_fn(g3, |x, y, z| [z * eval_g(x, y), 0.5, grad_g(x, y)[1]]);
        write_dump(&p, &FieldDump::Spatial(spatial.clone())).unwrap();
        match read_dump(&p).unwrap() {
            FieldDump::Spatial(back) => {
                assert!(back.grid.same_as(&g3));
                for c in 0..3 {
                    assert_eq!(back.comps[c], spatial.comps[c]);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.bin");
        std::fs::write(&p, b"not a dump at all").unwrap();
        assert!(matches!(read_dump(&p), Err(LabError::Guard { guard: "dump", .. })));
    }

    #[test]
    fn field_csv_has_one_row_per_node() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let g3 = Grid3D::new(8, 2.0, 8, 1.0).unwrap();
        write_vector_csv(&p, &VectorField3D::zeros(g3)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1 + 8 * 8 * 8);
        assert!(text.starts_with("x1,x2,x3,w1,w2,w3"));
    }
}
