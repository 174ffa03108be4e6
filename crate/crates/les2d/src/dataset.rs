//! Time-indexed velocity snapshot datasets and their bit-exact binary file
//! format (`.lesd`).
//!
//! Layout (all integers little-endian):
//! magic `LESD`, format version `u32`, `nx: u32`, `ny: u32`,
//! `n_snapshots: u32`, `dt_between_snapshots: f64`, `nu: f64`,
//! `forcing tag: u8`, `rng seed: u64`, then per snapshot: `time: f64`,
//! the u lattice (`f64`, row-major with x fastest), the v lattice.

use crate::field::ScalarField;
use crate::grid::Grid;
use crate::integrator::TrajectoryRecord;
use crate::ops::ForcingSpec;
use crate::velocity::StaggeredVelocity;
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LESD";
const VERSION: u32 = 1;

/// Filtered (or coarse-native) velocity snapshots with simulation metadata.
/// All datasets live on the standard `[-pi, pi]^2` domain.
#[derive(Debug, Clone)]
pub struct SnapshotDataset {
    pub nx: usize,
    pub ny: usize,
    /// Time between consecutive snapshots.
    pub dt_between: f64,
    pub nu: f64,
    pub forcing: ForcingSpec,
    /// Seed of the generating simulation; the fine trajectory is
    /// regenerable from it.
    pub seed: u64,
    pub times: Vec<f64>,
    pub velocities: Vec<StaggeredVelocity>,
}

impl SnapshotDataset {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.nx, self.ny, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)
    }

    /// Wrap a coarse-resolution trajectory directly (no filtering); used
    /// for planted-reference experiments where the "truth" is itself an LES.
    pub fn from_coarse_trajectory(traj: &TrajectoryRecord, seed: u64) -> Self {
        let grid = traj.snapshots[0].vel.grid;
        SnapshotDataset {
            nx: grid.nx,
            ny: grid.ny,
            dt_between: traj.dt * traj.snapshot_stride as f64,
            nu: traj.nu,
            forcing: traj.forcing,
            seed,
            times: traj.snapshots.iter().map(|s| s.t).collect(),
            velocities: traj.snapshots.iter().map(|s| s.vel.clone()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.nx as u32).to_le_bytes())?;
        w.write_all(&(self.ny as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u32).to_le_bytes())?;
        w.write_all(&self.dt_between.to_le_bytes())?;
        w.write_all(&self.nu.to_le_bytes())?;
        w.write_all(&[self.forcing.tag()])?;
        w.write_all(&self.seed.to_le_bytes())?;
        for (t, vel) in self.times.iter().zip(&self.velocities) {
            w.write_all(&t.to_le_bytes())?;
            for x in vel.u.as_slice() {
                w.write_all(&x.to_le_bytes())?;
            }
            for x in vel.v.as_slice() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = BufReader::new(file);

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a LESD file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported LESD version {version}")));
        }
        let nx = read_u32(&mut r)? as usize;
        let ny = read_u32(&mut r)? as usize;
        let n_snapshots = read_u32(&mut r)? as usize;
        let dt_between = read_f64(&mut r)?;
        let nu = read_f64(&mut r)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let forcing = ForcingSpec::from_tag(tag[0])
            .ok_or_else(|| Error::Format(format!("unknown forcing tag {}", tag[0])))?;
        let seed = read_u64(&mut r)?;

        let grid = Grid::new(nx, ny, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
        let mut times = Vec::with_capacity(n_snapshots);
        let mut velocities = Vec::with_capacity(n_snapshots);
        for _ in 0..n_snapshots {
            times.push(read_f64(&mut r)?);
            let u = read_lattice(&mut r, nx, ny)?;
            let v = read_lattice(&mut r, nx, ny)?;
            velocities.push(StaggeredVelocity::new(grid, u, v));
        }
        Ok(SnapshotDataset {
            nx,
            ny,
            dt_between,
            nu,
            forcing,
            seed,
            times,
            velocities,
        })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_lattice(r: &mut impl Read, nx: usize, ny: usize) -> Result<ScalarField> {
    let mut bytes = vec![0u8; nx * ny * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ScalarField::from_vec(nx, ny, data))
}
