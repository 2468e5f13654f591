//! Versioned text checkpoints.
//!
//! ```text
//! dialsent-checkpoint v1
//! param <name> <rank> <extent>...
//! <values, space separated, shortest round-trip exponent form>
//! ```
//!
//! Values are written with `{:e}`, which round-trips `f64` exactly, so a
//! reload reproduces predictions bit for bit.

use std::fmt::Write as _;

use super::param::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "dialsent-checkpoint v1";

pub fn write_checkpoint(params: &ParamStore) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_HEADER);
    out.push('\n');
    for p in params.iter() {
        let shape = p.value.shape();
        let _ = write!(out, "param {} {}", p.name, shape.len());
        for d in shape {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        let mut first = true;
        for v in p.value.data() {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    out
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: "checkpoint".into(),
        line,
        message: msg.into(),
    }
}

/// Parses a checkpoint into a fresh store, parameters in file order.
pub fn read_checkpoint(text: &str) -> Result<ParamStore> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == CHECKPOINT_HEADER => {}
        _ => return Err(bad(1, format!("missing header {CHECKPOINT_HEADER:?}"))),
    }
    let mut store = ParamStore::new();
    while let Some((n, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() < 3 || fields[0] != "param" {
            return Err(bad(n, "expected `param <name> <rank> <extents>`"));
        }
        let rank: usize = fields[2].parse().map_err(|_| bad(n, "bad rank"))?;
        if fields.len() != 3 + rank {
            return Err(bad(n, format!("rank {rank} needs {rank} extents")));
        }
        let shape = fields[3..]
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| bad(n, format!("bad extent {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let (vn, values) = lines.next().ok_or_else(|| bad(n + 1, "missing values"))?;
        let data = if values.is_empty() {
            Vec::new()
        } else {
            values
                .split(' ')
                .map(|s| s.parse::<f64>().map_err(|_| bad(vn, format!("bad value {s:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        let t = Tensor::new(shape, data).map_err(|e| bad(vn, e.to_string()))?;
        store.add(fields[1], t)?;
    }
    Ok(store)
}
