//! Solver checkpoints.
//!
//! ```text
//! "NSA1" | version u8 | n u64 | ν f64 | α f64 | t f64 | v: n × f64   (little endian)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SpectralField;

pub const MAGIC: &[u8; 4] = b"NSA1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nu: f64,
    pub alpha: f64,
    pub t: f64,
    /// Coefficients of the filtered variable `v = (I + α²A)u`.
    pub v: SpectralField,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&[VERSION])?;
        out.write_all(&(self.v.len() as u64).to_le_bytes())?;
        for x in [self.nu, self.alpha, self.t] {
            out.write_all(&x.to_le_bytes())?;
        }
        for c in self.v.coeffs() {
            out.write_all(&c.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut head = [0u8; 5];
        input
            .read_exact(&mut head)
            .map_err(|_| Error::Format("truncated checkpoint header".into()))?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {}", head[4])));
        }
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> Result<[u8; 8]> {
            input
                .read_exact(&mut word)
                .map_err(|_| Error::Format("truncated checkpoint".into()))?;
            Ok(word)
        };
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        if n == 0 || n > 1 << 24 {
            return Err(Error::Format(format!("implausible mode count {n}")));
        }
        let nu = f64::from_le_bytes(next(&mut input)?);
        let alpha = f64::from_le_bytes(next(&mut input)?);
        let t = f64::from_le_bytes(next(&mut input)?);
        let v = (0..n)
            .map(|_| next(&mut input).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Checkpoint {
            nu,
            alpha,
            t,
            v: SpectralField::from_vec(v),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::config(format!("cannot open checkpoint {}: {e}", path.display())))?;
        Self::read_from(BufReader::new(file))
    }
}
