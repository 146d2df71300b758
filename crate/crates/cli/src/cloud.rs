//! Point-cloud files: a `#`-prefixed JSON header line, then one
//! space-separated record per point. With explicit weights the first field of
//! each record is the weight.

use std::fmt::Write as _;
use std::path::Path;

use chsw_core::{Descriptor, DiscreteMeasure, Geometry, Manifold};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Uniform,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub descriptor: Descriptor,
    pub count: usize,
    pub weights: WeightMode,
}

pub fn parse(text: &str, source: &str) -> CliResult<DiscreteMeasure> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| CliError::schema(format!("{source}: empty file")))?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| CliError::schema(format!("{source}: first line must be a '#' header")))?;
    let header: Header =
        serde_json::from_str(json.trim()).map_err(|e| CliError::schema(format!("{source}: header: {e}")))?;
    let manifold = Manifold::from_descriptor(&header.descriptor)
        .map_err(|e| CliError::schema(format!("{source}: header descriptor: {e}")))?;
    let width = manifold.point_len() + usize::from(header.weights == WeightMode::Explicit);

    let mut points = Vec::with_capacity(header.count);
    let mut weights = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let record = points.len();
        let bad = |msg: String| CliError::schema(format!("{source}: record {record} (line {}): {msg}", lineno + 1));
        let fields = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("not a number: {f:?}"))))
            .collect::<CliResult<Vec<f64>>>()?;
        if fields.len() != width {
            return Err(bad(format!("expected {width} fields, found {}", fields.len())));
        }
        if let Some(f) = fields.iter().find(|f| !f.is_finite()) {
            return Err(bad(format!("non-finite value {f}")));
        }
        let coords = match header.weights {
            WeightMode::Explicit => {
                weights.push(fields[0]);
                fields[1..].to_vec()
            }
            WeightMode::Uniform => fields,
        };
        manifold.check_point(&coords).map_err(|e| bad(e.to_string()))?;
        points.push(coords);
    }
    if points.len() != header.count {
        return Err(CliError::schema(format!(
            "{source}: header declares {} records, found {}",
            header.count,
            points.len()
        )));
    }
    let weights = (header.weights == WeightMode::Explicit).then_some(weights);
    DiscreteMeasure::new(manifold, points, weights).map_err(|e| CliError::schema(format!("{source}: {e}")))
}

pub fn read(path: &Path) -> CliResult<DiscreteMeasure> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Shortest decimal text that parses back to the same `f64`.
fn push_float(out: &mut String, x: f64) {
    write!(out, "{x:?}").unwrap();
}

pub fn render(m: &DiscreteMeasure) -> String {
    let header = Header {
        descriptor: m.descriptor(),
        count: m.len(),
        weights: if m.is_uniform() {
            WeightMode::Uniform
        } else {
            WeightMode::Explicit
        },
    };
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    let weights = (!m.is_uniform()).then(|| m.weights());
    for (i, p) in m.points().enumerate() {
        let mut first = true;
        if let Some(w) = &weights {
            push_float(&mut out, w[i]);
            first = false;
        }
        for &x in p {
            if !first {
                out.push(' ');
            }
            push_float(&mut out, x);
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, m: &DiscreteMeasure) -> CliResult<()> {
    std::fs::write(path, render(m)).map_err(|e| CliError::io(path, e))
}
