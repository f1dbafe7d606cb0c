//! Plain-text model file:
//!
//! ```text
//! experts N dim
//! <kind>
//! <dim space-separated weights>
//! ...
//! ```
//!
//! Weights are written with 17 significant digits so they parse back to the
//! same bits.

use std::io::{BufRead, Write};

use super::{ExpertKind, ExpertPool, LinearExpert};
use crate::error::{Error, Result};

pub fn write_model<W: Write>(pool: &ExpertPool, mut out: W) -> Result<()> {
    writeln!(out, "experts {} {}", pool.len(), pool.dim())?;
    for e in pool.experts() {
        writeln!(out, "{}", e.kind())?;
        let line = e
            .weights()
            .iter()
            .map(|w| format!("{w:.16e}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_model<R: BufRead>(input: R) -> Result<ExpertPool> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Model(format!("unexpected end of file, expected {what}")))?
            .map_err(Error::from)
    };
    let header = next("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, dim) = match fields.as_slice() {
        ["experts", n, dim] => (
            n.parse::<usize>()
                .map_err(|_| Error::Model(format!("bad expert count {n:?}")))?,
            dim.parse::<usize>()
                .map_err(|_| Error::Model(format!("bad dimension {dim:?}")))?,
        ),
        _ => return Err(Error::Model(format!("bad header {header:?}"))),
    };
    let mut experts = Vec::with_capacity(n);
    for i in 0..n {
        let kind: ExpertKind = next("expert kind")?.trim().parse()?;
        let weights = next("weights")?
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Model(format!("expert {i}: bad weight {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if weights.len() != dim {
            return Err(Error::Model(format!(
                "expert {i}: {} weights, header says {dim}",
                weights.len()
            )));
        }
        experts.push(LinearExpert::new(kind, weights)?);
    }
    ExpertPool::new(experts)
}
