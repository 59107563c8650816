//! GRD1 text grid format.
//!
//! ```text
//! GRD1
//! kind=<cloudmask|precip|population|targetmask>
//! width=<int> height=<int> res_km=<float>
//! <height lines of width whitespace-separated values, row 0 first>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::grid::{EnvGrid, GridKind};
use crate::error::{Error, Result};

const MAGIC: &str = "GRD1";

/// Render a grid as GRD1 text. `f64` Display is the shortest representation
/// that parses back to the same value, so the encoding is lossless.
pub fn encode_grid(grid: &EnvGrid) -> String {
    let mut out = String::with_capacity(grid.len() * 4 + 64);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "kind={}", grid.kind().as_str());
    let _ = writeln!(
        out,
        "width={} height={} res_km={}",
        grid.width(),
        grid.height(),
        grid.resolution_km()
    );
    for row in grid.values().chunks(grid.width()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn decode_grid(text: &str, path: &Path) -> Result<EnvGrid> {
    let err = |line: usize, msg: String| Error::Format {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        Some((n, l)) => return Err(err(n, format!("expected {MAGIC}, found {l:?}"))),
        None => return Err(err(1, "empty file".into())),
    }

    let (n, l) = lines
        .next()
        .ok_or_else(|| err(2, "missing kind line".into()))?;
    let kind = l
        .trim()
        .strip_prefix("kind=")
        .and_then(GridKind::parse)
        .ok_or_else(|| err(n, format!("bad kind line {l:?}")))?;

    let (n, l) = lines
        .next()
        .ok_or_else(|| err(3, "missing dimension line".into()))?;
    let mut width = None;
    let mut height = None;
    let mut res = None;
    for field in l.split_whitespace() {
        let (key, val) = field
            .split_once('=')
            .ok_or_else(|| err(n, format!("malformed field {field:?}")))?;
        let bad = |_| err(n, format!("bad value for {key}: {val:?}"));
        match key {
            "width" => width = Some(val.parse::<usize>().map_err(bad)?),
            "height" => height = Some(val.parse::<usize>().map_err(bad)?),
            "res_km" => {
                res = Some(
                    val.parse::<f64>()
                        .map_err(|_| err(n, format!("bad res_km {val:?}")))?,
                )
            }
            _ => return Err(err(n, format!("unknown field {key:?}"))),
        }
    }
    let (width, height, res) = match (width, height, res) {
        (Some(w), Some(h), Some(r)) => (w, h, r),
        _ => {
            return Err(err(
                n,
                "dimension line needs width, height and res_km".into(),
            ))
        }
    };
    if width == 0 || height == 0 {
        return Err(err(n, "dimensions must be nonzero".into()));
    }
    if !(res.is_finite() && res > 0.0) {
        return Err(err(n, format!("res_km must be positive, got {res}")));
    }

    let mut values = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        if rows == height {
            return Err(err(n, format!("more than {height} data rows")));
        }
        let before = values.len();
        for tok in l.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(n, format!("bad number {tok:?}")))?;
            let ok = if kind.is_binary() {
                v == 0.0 || v == 1.0
            } else {
                v.is_finite() && v >= 0.0
            };
            if !ok {
                return Err(err(
                    n,
                    format!("value {tok} invalid for kind {}", kind.as_str()),
                ));
            }
            values.push(v);
        }
        if values.len() - before != width {
            return Err(err(
                n,
                format!("expected {width} values, found {}", values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != height {
        return Err(err(
            3 + rows + 1,
            format!("expected {height} data rows, found {rows}"),
        ));
    }
    EnvGrid::new(kind, width, height, res, values)
}

pub fn save_grid(grid: &EnvGrid, path: &Path) -> Result<()> {
    fs::write(path, encode_grid(grid))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_grid(path: &Path) -> Result<EnvGrid> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_grid(&text, path)
}
