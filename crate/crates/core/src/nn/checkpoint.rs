//! `CKPT v1` parameter files: one `<name> <rank> <dims...>` line per tensor
//! followed by a line of its values.

use super::{Param, Tensor};
use crate::error::{Error, Result};
use crate::io::{fmt_real, parse_real, parse_usize};

pub fn write_checkpoint(params: &[Param]) -> String {
    let mut out = String::from("CKPT v1\n");
    for p in params {
        let shape = p.value.shape();
        let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
        out.push_str(&format!("{} {} {}\n", p.name, shape.len(), dims.join(" ")));
        let values: Vec<String> = p.value.data().iter().map(|&v| fmt_real(v)).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<Vec<(String, Tensor)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("CKPT v1") {
        return Err(Error::Parse("expected header `CKPT v1`".into()));
    }
    let mut tensors = Vec::new();
    while let Some(header) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (name, rest) = fields
            .split_first()
            .ok_or_else(|| Error::Parse("empty tensor header".into()))?;
        let rank = parse_usize(rest.first().copied().unwrap_or(""))?;
        if rest.len() != rank + 1 {
            return Err(Error::Parse(format!(
                "tensor {name}: rank {rank} but {} dims",
                rest.len() - 1
            )));
        }
        let shape = rest[1..]
            .iter()
            .map(|d| parse_usize(d))
            .collect::<Result<Vec<_>>>()?;
        let body = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("tensor {name}: missing values")))?;
        let values = body
            .split_whitespace()
            .map(parse_real)
            .collect::<Result<Vec<_>>>()?;
        let tensor =
            Tensor::new(shape, values).map_err(|e| Error::Parse(format!("tensor {name}: {e}")))?;
        tensors.push((name.to_string(), tensor));
    }
    Ok(tensors)
}
