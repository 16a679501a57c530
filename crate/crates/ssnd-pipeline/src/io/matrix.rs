//! Binary matrix dump with a small self-describing header.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `SSNDMTX1`                        |
//! | 8      | 4    | u32 kind code                           |
//! | 12     | 4    | u32 grid shift in ms (0 = no grid)      |
//! | 16     | 4    | u32 grid window in ms                   |
//! | 20     | 4    | u32 reserved, zero                      |
//! | 24     | 8    | u64 rows                                |
//! | 32     | 8    | u64 cols                                |
//! | 40     | 8rc  | f64 values, row-major                   |

use std::io::{Read, Write};
use std::path::Path;

use ssnd_core::types::{FrameGrid, Matrix};

use crate::{PipelineError, Result};

const MAGIC: &[u8; 8] = b"SSNDMTX1";

/// What the rows of a dumped matrix mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Raw,
    LogMel,
    Spliced,
    Ipd,
    Fused,
    Posteriors,
    Embeddings,
}

impl MatrixKind {
    fn code(self) -> u32 {
        match self {
            MatrixKind::Raw => 0,
            MatrixKind::LogMel => 1,
            MatrixKind::Spliced => 2,
            MatrixKind::Ipd => 3,
            MatrixKind::Fused => 4,
            MatrixKind::Posteriors => 5,
            MatrixKind::Embeddings => 6,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => MatrixKind::Raw,
            1 => MatrixKind::LogMel,
            2 => MatrixKind::Spliced,
            3 => MatrixKind::Ipd,
            4 => MatrixKind::Fused,
            5 => MatrixKind::Posteriors,
            6 => MatrixKind::Embeddings,
            _ => return None,
        })
    }
}

pub fn write_matrix(
    path: impl AsRef<Path>,
    matrix: &Matrix,
    kind: MatrixKind,
    grid: Option<FrameGrid>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(g) = grid {
        assert_eq!(g.n_frames, matrix.rows(), "grid frames must match matrix rows");
    }
    let mut file =
        std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let io_err = |e| PipelineError::io(path, e);
    file.write_all(MAGIC).map_err(io_err)?;
    file.write_all(&kind.code().to_le_bytes()).map_err(io_err)?;
    file.write_all(&grid.map_or(0, |g| g.shift_ms).to_le_bytes()).map_err(io_err)?;
    file.write_all(&grid.map_or(0, |g| g.window_ms).to_le_bytes()).map_err(io_err)?;
    file.write_all(&0u32.to_le_bytes()).map_err(io_err)?;
    file.write_all(&(matrix.rows() as u64).to_le_bytes()).map_err(io_err)?;
    file.write_all(&(matrix.cols() as u64).to_le_bytes()).map_err(io_err)?;
    let mut bytes = Vec::with_capacity(matrix.data().len() * 8);
    for v in matrix.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&bytes).map_err(io_err)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<(Matrix, MatrixKind, Option<FrameGrid>)> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| PipelineError::io(path, e))?;
    let bad = |message: &str| PipelineError::Format { path: path.into(), message: message.into() };
    if bytes.len() < 40 || &bytes[0..8] != MAGIC {
        return Err(bad("not a matrix dump (bad magic or truncated header)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let kind = MatrixKind::from_code(u32_at(8)).ok_or_else(|| bad("unknown matrix kind"))?;
    let shift_ms = u32_at(12);
    let window_ms = u32_at(16);
    let rows = u64_at(24) as usize;
    let cols = u64_at(32) as usize;
    let expected = 40 + rows * cols * 8;
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[40..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let grid = if shift_ms > 0 {
        Some(FrameGrid { shift_ms, window_ms: window_ms.max(1), n_frames: rows })
    } else {
        None
    };
    Ok((Matrix::from_flat(rows, cols, data), kind, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let mut rng = ssnd_core::rng::Rng::new(4);
        let matrix = Matrix::from_rows((0..13).map(|_| rng.normal_vec(5)).collect());
        let grid = FrameGrid::hop_aligned(50, 13);
        write_matrix(&path, &matrix, MatrixKind::Posteriors, Some(grid)).unwrap();
        let (back, kind, got_grid) = read_matrix(&path).unwrap();
        assert_eq!(back, matrix);
        assert_eq!(kind, MatrixKind::Posteriors);
        assert_eq!(got_grid, Some(grid));
    }

    #[test]
    fn gridless_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let matrix = Matrix::zeros(2, 3);
        write_matrix(&path, &matrix, MatrixKind::Embeddings, None).unwrap();
        let (_, kind, grid) = read_matrix(&path).unwrap();
        assert_eq!(kind, MatrixKind::Embeddings);
        assert_eq!(grid, None);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"not a matrix").unwrap();
        assert!(matches!(read_matrix(&path), Err(PipelineError::Format { .. })));
    }
}
