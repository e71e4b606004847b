//! CSV and PGM (P2) readers and writers for fields, masks and shapes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::field::ScalarField;
use super::grid::GridDomain;
use super::shape::ShapeSpec;
use crate::error::{Error, Result};

pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// row-major, row 0 first
    pub pixels: Vec<u32>,
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_shape(path: impl AsRef<Path>) -> Result<ShapeSpec> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut shape: ShapeSpec = serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))?;
    // mask paths are relative to the shape file
    if let ShapeSpec::CustomMask { path: mask } = &mut shape {
        if mask.is_relative() {
            if let Some(dir) = path.parent() {
                *mask = dir.join(&*mask);
            }
        }
    }
    Ok(shape)
}

/// Node-keyed CSV body: `ix[,iy],<column>` rows for every active node.
pub(crate) fn node_csv(domain: &GridDomain, column: &str, values: &[f64]) -> String {
    let mut out = String::new();
    if domain.dim() == 1 {
        let _ = writeln!(out, "ix,{column}");
    } else {
        let _ = writeln!(out, "ix,iy,{column}");
    }
    for (i, v) in values.iter().enumerate() {
        let (ix, iy) = domain.coords(i);
        if domain.dim() == 1 {
            let _ = writeln!(out, "{ix},{v}");
        } else {
            let _ = writeln!(out, "{ix},{iy},{v}");
        }
    }
    out
}

/// Parses a node-keyed CSV. Nodes may appear at most once; unless
/// `require_all`, missing nodes read as zero.
pub(crate) fn parse_node_csv(domain: &GridDomain, path: &Path, text: &str, require_all: bool) -> Result<Vec<f64>> {
    let coords = domain.dim();
    let mut values = vec![if require_all { f64::NAN } else { 0.0 }; domain.len()];
    let mut seen = vec![false; domain.len()];
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.split(',').count() == coords + 1 => {}
        _ => return Err(Error::format(path, 1, format!("expected a header with {} columns", coords + 1))),
    }
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != coords + 1 {
            return Err(Error::format(path, line_no, format!("expected {} columns, found {}", coords + 1, cols.len())));
        }
        let parse_i = |s: &str| s.parse::<i64>().map_err(|_| Error::format(path, line_no, format!("bad index `{s}`")));
        let ix = parse_i(cols[0])?;
        let iy = if coords == 2 { parse_i(cols[1])? } else { 0 };
        let v: f64 =
            cols[coords].parse().map_err(|_| Error::format(path, line_no, format!("bad value `{}`", cols[coords])))?;
        if !v.is_finite() {
            return Err(Error::format(path, line_no, "value is not finite"));
        }
        let node = domain
            .node_at(ix, iy)
            .ok_or_else(|| Error::format(path, line_no, format!("({ix}, {iy}) is not a domain node")))?;
        if seen[node] {
            return Err(Error::format(path, line_no, format!("node ({ix}, {iy}) listed twice")));
        }
        seen[node] = true;
        values[node] = v;
    }
    if let Some(i) = seen.iter().position(|s| !s).filter(|_| require_all) {
        let (ix, iy) = domain.coords(i);
        return Err(Error::format(path, text.lines().count(), format!("node ({ix}, {iy}) missing")));
    }
    Ok(values)
}

pub fn save_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &node_csv(field.domain(), "value", field.values()))
}

pub fn load_field(domain: &Arc<GridDomain>, path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let values = parse_node_csv(domain, path, &text, true)?;
    ScalarField::new(domain.clone(), values)
}

/// Gray level of `v` under the linear map `[min, max] -> [0, 255]`, floored.
pub fn pgm_level(v: f64, min: f64, max: f64) -> u32 {
    if max <= min {
        return 0;
    }
    (((v - min) / (max - min)) * 255.0).floor().clamp(0.0, 255.0) as u32
}

/// Heatmap export on the full lattice; exterior pixels are 0.
pub fn save_pgm(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let (min, max) = (field.min(), field.max());
    let levels: Vec<u32> = field.values().iter().map(|&v| pgm_level(v, min, max)).collect();
    write_pgm_levels(field.domain(), &levels, path.as_ref())
}

/// Indicator export: member nodes 255, everything else 0.
pub fn save_indicator_pgm(domain: &GridDomain, members: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut levels = vec![0u32; domain.len()];
    for &i in members {
        levels[i] = 255;
    }
    write_pgm_levels(domain, &levels, path.as_ref())
}

fn write_pgm_levels(domain: &GridDomain, levels: &[u32], path: &Path) -> Result<()> {
    let (nx, ny) = domain.lattice_shape();
    let mut px = vec![0u32; nx * ny];
    for (i, &l) in levels.iter().enumerate() {
        let (ix, iy) = domain.coords(i);
        px[iy as usize * nx + ix as usize] = l;
    }
    let mut out = format!("P2\n{nx} {ny}\n255\n");
    for row in px.chunks(nx) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut tokens = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(|t| (n + 1, t)));
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P2")) => {}
        Some((l, t)) => return Err(Error::format(path, l, format!("expected P2 magic, found `{t}`"))),
        None => return Err(Error::format(path, 1, "empty file")),
    }
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        let (l, t) = it.next().ok_or_else(|| Error::format(path, 1, "truncated header"))?;
        *slot = t.parse().map_err(|_| Error::format(path, l, format!("bad header field `{t}`")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 {
        return Err(Error::format(path, 1, "degenerate image header"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for (l, t) in it {
        let v: u32 = t.parse().map_err(|_| Error::format(path, l, format!("bad pixel `{t}`")))?;
        if v as usize > maxval {
            return Err(Error::format(path, l, format!("pixel {v} exceeds maxval {maxval}")));
        }
        pixels.push(v);
    }
    if pixels.len() != width * height {
        return Err(Error::format(
            path,
            text.lines().count(),
            format!("expected {} pixels, found {}", width * height, pixels.len()),
        ));
    }
    Ok(PgmImage { width, height, maxval: maxval as u32, pixels })
}
