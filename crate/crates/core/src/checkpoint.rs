//! Versioned binary checkpoints for trained encoder parameters and,
//! optionally, the optimizer moments needed to resume training.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic           8 bytes   b"WSNETCKP"
//! version         u32       currently 1
//! config hash     u32 len + UTF-8 bytes
//! epoch           u64
//! n_params        u32
//! per parameter   u32 name len + name, u64 rows, u64 cols, rows·cols f64
//! optimizer flag  u8        0 = absent, 1 = present
//! if present      u64 step count, then first and second moments as raw
//!                 f64 blocks in parameter order (shapes match the params)
//! ```
//!
//! Loading validates the magic tag, the version, every length field, and
//! that no bytes trail the payload, so truncated or doctored files fail
//! loudly instead of yielding garbage parameters.

use crate::nn::{EncoderParams, PARAM_NAMES};
use crate::{error::CoreError, Result};
use ndarray::Array2;
use std::fs;
use std::io::Write as _;
use std::path::Path;

const MAGIC: [u8; 8] = *b"WSNETCKP";
const VERSION: u32 = 1;

/// Optimizer moments captured alongside the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step_count: u64,
    pub m: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
}

/// Everything a resumed or deployed run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Hash of the configuration that produced the parameters; consumers
    /// can refuse to resume under a different configuration.
    pub config_hash: String,
    /// Epochs completed when the snapshot was taken.
    pub epoch: u64,
    pub params: EncoderParams,
    pub optimizer: Option<OptimizerState>,
}

impl Checkpoint {
    /// Serializes to the binary layout above.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if let Some(opt) = &self.optimizer {
            let dims: Vec<(usize, usize)> =
                self.params.as_slice().iter().map(|p| p.dim()).collect();
            for (which, moments) in [("first", &opt.m), ("second", &opt.v)] {
                if moments.len() != dims.len() {
                    return Err(CoreError::DimensionMismatch {
                        context: "optimizer moment count",
                        expected: dims.len(),
                        actual: moments.len(),
                    });
                }
                for (arr, &dim) in moments.iter().zip(&dims) {
                    if arr.dim() != dim {
                        return Err(CoreError::InvalidParameter {
                            name: "optimizer",
                            message: format!(
                                "{which}-moment shape {:?} does not match parameter shape {dim:?}",
                                arr.dim()
                            ),
                        });
                    }
                }
            }
        }
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        write_str(&mut out, &self.config_hash)?;
        out.extend_from_slice(&self.epoch.to_le_bytes());
        let params = self.params.as_slice();
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for (name, arr) in PARAM_NAMES.iter().zip(params) {
            write_str(&mut out, name)?;
            out.extend_from_slice(&(arr.nrows() as u64).to_le_bytes());
            out.extend_from_slice(&(arr.ncols() as u64).to_le_bytes());
            write_f64s(&mut out, arr);
        }
        match &self.optimizer {
            None => out.push(0),
            Some(opt) => {
                out.push(1);
                out.extend_from_slice(&opt.step_count.to_le_bytes());
                for arr in opt.m.iter().chain(&opt.v) {
                    write_f64s(&mut out, arr);
                }
            }
        }
        Ok(out)
    }

    /// Parses the binary layout, validating structure along the way.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(CoreError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CoreError::UnsupportedVersion { found: version, expected: VERSION });
        }
        let config_hash = r.string()?;
        let epoch = r.u64()?;
        let n_params = r.u32()? as usize;
        if n_params != PARAM_NAMES.len() {
            return Err(CoreError::CorruptCheckpoint(format!(
                "expected {} parameters, found {n_params}",
                PARAM_NAMES.len()
            )));
        }
        let mut arrays = Vec::with_capacity(n_params);
        for expected_name in PARAM_NAMES {
            let name = r.string()?;
            if name != expected_name {
                return Err(CoreError::CorruptCheckpoint(format!(
                    "expected parameter {expected_name:?}, found {name:?}"
                )));
            }
            let rows = r.dim()?;
            let cols = r.dim()?;
            arrays.push(r.matrix(rows, cols)?);
        }
        let dims: Vec<(usize, usize)> = arrays.iter().map(|a| a.dim()).collect();
        let params = EncoderParams::from_vec(arrays)?;
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let step_count = r.u64()?;
                let read_moments = |r: &mut Reader| -> Result<Vec<Array2<f64>>> {
                    dims.iter().map(|&(rows, cols)| r.matrix(rows, cols)).collect()
                };
                let m = read_moments(&mut r)?;
                let v = read_moments(&mut r)?;
                Some(OptimizerState { step_count, m, v })
            }
            flag => {
                return Err(CoreError::CorruptCheckpoint(format!(
                    "optimizer flag must be 0 or 1, found {flag}"
                )))
            }
        };
        if r.pos != bytes.len() {
            return Err(CoreError::CorruptCheckpoint(format!(
                "{} unexpected trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { config_hash, epoch, params, optimizer })
    }

    /// Writes the checkpoint to `path` atomically enough for single-writer
    /// use (full buffer, single `write_all`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut file = fs::File::create(path)?;
        file.write_all(&bytes)?;
        file.flush()?;
        Ok(())
    }

    /// Reads and parses a checkpoint file.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u32::try_from(s.len()).map_err(|_| CoreError::InvalidParameter {
        name: "checkpoint string",
        message: format!("string of {} bytes exceeds the format limit", s.len()),
    })?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn write_f64s(out: &mut Vec<u8>, arr: &Array2<f64>) {
    out.reserve(arr.len() * 8);
    for &v in arr.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Bounds-checked cursor over the raw bytes.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(
            || {
                CoreError::CorruptCheckpoint(format!(
                    "truncated: wanted {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            },
        )?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn dim(&mut self) -> Result<usize> {
        let raw = self.u64()?;
        usize::try_from(raw).ok().filter(|&d| d <= 1 << 32).ok_or_else(|| {
            CoreError::CorruptCheckpoint(format!("implausible dimension {raw}"))
        })
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| CoreError::CorruptCheckpoint("string is not valid UTF-8".into()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let n = rows.checked_mul(cols).ok_or_else(|| {
            CoreError::CorruptCheckpoint(format!("matrix {rows}×{cols} overflows"))
        })?;
        let raw = self.take(n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Array2::from_shape_vec((rows, cols), data).map_err(|e| {
            CoreError::CorruptCheckpoint(format!("matrix {rows}×{cols}: {e}"))
        })
    }
}
