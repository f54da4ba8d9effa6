//! Flat binary checkpoints of a [`HistoryState`].
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | content                                             |
//! |--------|------|-----------------------------------------------------|
//! | 0      | 8    | magic `VWELLCKP`                                    |
//! | 8      | 4    | format version (`1`)                                |
//! | 12     | 4    | spatial dimension                                   |
//! | 16     | 16   | interior node counts per axis (`u64`, `1` if unused)|
//! | 32     | 1    | backend: 0 none, 1 Prony, 2 quadrature              |
//! | 33     | 7    | zero padding                                        |
//! | 40     | 8    | `t` (`f64`)                                         |
//! | 48     | 8    | step count (`u64`)                                  |
//! | 56     | 8    | field length `n` (`u64`)                            |
//! | 64     | 8    | block count `b` (`u64`)                             |
//! | 72     | ...  | `u`, `u_prev`, `v`: `3n` `f64`                      |
//!
//! followed by `b` blocks: per Prony mode `psi` (`n` values) then `chi`; per
//! quadrature snapshot `n` values, newest first. Kernel-derived coefficients
//! are rebuilt from the model on restore.

use crate::error::SimError;
use crate::model::Model;

use super::memory::MemoryState;
use super::{init_state, HistoryState, SolverConfig};

const MAGIC: &[u8; 8] = b"VWELLCKP";
const VERSION: u32 = 1;
const HEADER: usize = 72;

fn backend_code(m: &MemoryState) -> u8 {
    match m {
        MemoryState::Inactive => 0,
        MemoryState::Prony(_) => 1,
        MemoryState::Quadrature(_) => 2,
    }
}

pub fn dump_checkpoint(state: &HistoryState, model: &Model) -> Vec<u8> {
    let grid = &model.grid;
    let n = state.u.len();
    let mut out = Vec::with_capacity(HEADER + 8 * 3 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dimension() as u32).to_le_bytes());
    for axis in 0..2 {
        let count = grid.nodes().get(axis).copied().unwrap_or(1) as u64;
        out.extend_from_slice(&count.to_le_bytes());
    }
    out.push(backend_code(&state.memory));
    out.extend_from_slice(&[0u8; 7]);
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&state.steps.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let blocks = match &state.memory {
        MemoryState::Inactive => 0,
        MemoryState::Prony(modes) => modes.len(),
        MemoryState::Quadrature(q) => q.snapshots.len(),
    };
    out.extend_from_slice(&(blocks as u64).to_le_bytes());
    let mut put = |xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    put(&state.u);
    put(&state.u_prev);
    put(&state.v);
    match &state.memory {
        MemoryState::Inactive => {}
        MemoryState::Prony(modes) => {
            for m in modes {
                put(&m.psi);
                put(&[m.chi]);
            }
        }
        MemoryState::Quadrature(q) => q.snapshots.iter().for_each(|s| put(s)),
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SimError> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| SimError::Checkpoint("truncated record".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, SimError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64, SimError> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, SimError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn field(&mut self, n: usize) -> Result<Vec<f64>, SimError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Rebuilds a state for `model` and `config` from a record written by
/// [`dump_checkpoint`], rejecting records for a different grid or backend.
pub fn restore_checkpoint(bytes: &[u8], model: &Model, config: &SolverConfig) -> Result<HistoryState, SimError> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<8>()? != MAGIC {
        return Err(SimError::Checkpoint("not a checkpoint record".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(SimError::Checkpoint(format!("unsupported version {version}")));
    }
    let dim = c.u32()? as usize;
    let counts = [c.u64()? as usize, c.u64()? as usize];
    let grid = &model.grid;
    let expected: Vec<usize> = (0..2).map(|a| grid.nodes().get(a).copied().unwrap_or(1)).collect();
    if dim != grid.dimension() || counts[..] != expected[..] {
        return Err(SimError::Checkpoint(format!("grid mismatch: record {dim}D {counts:?}, model {expected:?}")));
    }
    let backend = c.take::<8>()?[0];
    let t = c.f64()?;
    let steps = c.u64()?;
    let n = c.u64()? as usize;
    let blocks = c.u64()? as usize;
    if n != grid.len() {
        return Err(SimError::Checkpoint(format!("field length {n} does not match grid size {}", grid.len())));
    }

    let mut state = init_state(model, config)?;
    if backend_code(&state.memory) != backend {
        return Err(SimError::Checkpoint(format!("backend code {backend} does not match the configuration")));
    }
    state.t = t;
    state.steps = steps;
    state.u = c.field(n)?;
    state.u_prev = c.field(n)?;
    state.v = c.field(n)?;
    match &mut state.memory {
        MemoryState::Inactive => {}
        MemoryState::Prony(modes) => {
            if modes.len() != blocks {
                return Err(SimError::Checkpoint(format!("{blocks} modes recorded, kernel has {}", modes.len())));
            }
            for m in modes.iter_mut() {
                m.psi = c.field(n)?;
                m.chi = c.f64()?;
            }
        }
        MemoryState::Quadrature(q) => {
            q.snapshots.clear();
            for _ in 0..blocks {
                let s = c.field(n)?;
                q.snapshots.push_back(s);
            }
            q.level = steps;
        }
    }
    if c.pos != bytes.len() {
        return Err(SimError::Checkpoint("trailing bytes after record".into()));
    }
    Ok(state)
}
