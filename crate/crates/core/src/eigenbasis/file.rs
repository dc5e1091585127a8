//! Binary basis file.
//!
//! ```text
//! "NSAB" | version u8 | domain u8 (0 torus, 1 square)
//! n_modes u64 | grid_resolution u64 | floats_per_mode u64      (little endian)
//! eigenvalues: n_modes × f64
//! mode data:   n_modes × floats_per_mode × f64
//! ```
//!
//! Torus mode data is `(k_x, k_y, parity)`; square mode data is the stream
//! function on the `(N+1)²` mesh nodes.

use std::io::{Read, Write};

use super::square::SquareModes;
use super::torus::{self, Parity, TorusMode};
use super::{EigenBasis, Modes};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NSAB";
pub const VERSION: u8 = 1;

pub fn write_basis<W: Write>(basis: &EigenBasis, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    let (domain, per_mode) = match basis.modes() {
        Modes::Torus { .. } => (0u8, 3usize),
        Modes::Square(sq) => (1u8, (sq.intervals() + 1).pow(2)),
    };
    out.write_all(&[domain])?;
    for count in [basis.len(), basis.grid_resolution(), per_mode] {
        out.write_all(&(count as u64).to_le_bytes())?;
    }
    for &l in basis.eigenvalues() {
        out.write_all(&l.to_le_bytes())?;
    }
    match basis.modes() {
        Modes::Torus { modes, .. } => {
            for m in modes {
                for v in [m.k[0] as f64, m.k[1] as f64, m.parity as u8 as f64] {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Modes::Square(sq) => {
            for j in 0..sq.len() {
                for v in sq.stream_function(j) {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn read_basis<R: Read>(mut input: R) -> Result<EigenBasis> {
    let mut head = [0u8; 6];
    input.read_exact(&mut head).map_err(|_| Error::Format("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("not a basis file (bad magic)".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported basis file version {}", head[4])));
    }
    let n = read_u64(&mut input)? as usize;
    let grid = read_u64(&mut input)? as usize;
    let per_mode = read_u64(&mut input)? as usize;
    if n == 0 || n > 1 << 24 || per_mode > 1 << 26 {
        return Err(Error::Format(format!("implausible counts n={n}, floats/mode={per_mode}")));
    }
    let eigenvalues = read_f64s(&mut input, n)?;
    let data = read_f64s(&mut input, n * per_mode)?;
    match head[5] {
        0 => {
            if per_mode != 3 {
                return Err(Error::Format("torus modes need 3 floats each".into()));
            }
            let modes = data
                .chunks_exact(3)
                .map(|c| {
                    let parity = match c[2] as u8 {
                        0 => Parity::Cos,
                        1 => Parity::Sin,
                        p => return Err(Error::Format(format!("bad parity {p}"))),
                    };
                    Ok(TorusMode {
                        k: [c[0] as i64, c[1] as i64],
                        parity,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let basis = torus::from_modes(modes, grid)?;
            if basis.eigenvalues() != eigenvalues.as_slice() {
                return Err(Error::Format("torus eigenvalues inconsistent with wavevectors".into()));
            }
            Ok(basis)
        }
        1 => {
            if per_mode != (grid + 1) * (grid + 1) {
                return Err(Error::Format("square mode size does not match mesh".into()));
            }
            let psi = data.chunks_exact(per_mode).map(<[f64]>::to_vec).collect();
            Ok(EigenBasis::from_parts(
                eigenvalues,
                Modes::Square(SquareModes::from_stream_functions(grid, psi)),
            ))
        }
        d => Err(Error::Format(format!("unknown domain byte {d}"))),
    }
}
