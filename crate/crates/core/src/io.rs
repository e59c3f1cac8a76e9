//! On-disk formats: WKBM binary matrices, mesh text, grid CSV, PGM heatmaps.
//!
//! WKBM layout: `b"WKBM"`, one version byte, rows and cols as little-endian
//! `u32`, then row-major `(re, im)` pairs of little-endian `f64`.
//!
//! Mesh text: a header line `<count> <closed>` (`closed` is `0` or `1`), then
//! one line per element: center (3), normal (3), area, and 9 or 12 vertex
//! coordinates, each printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Element, Mesh};
use crate::numerics::ComplexMatrix;
use crate::wavespace::WavenumberGrid;

pub const WKBM_MAGIC: &[u8; 4] = b"WKBM";
pub const WKBM_VERSION: u8 = 1;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn encode_wkbm(m: &ComplexMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Format("too many rows for WKBM".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Format("too many columns for WKBM".into()))?;
    let mut out = Vec::with_capacity(13 + 16 * m.data().len());
    out.extend_from_slice(WKBM_MAGIC);
    out.push(WKBM_VERSION);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for z in m.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_wkbm(bytes: &[u8]) -> Result<ComplexMatrix> {
    if bytes.len() < 13 || &bytes[..4] != WKBM_MAGIC {
        return Err(Error::Format("missing WKBM header".into()));
    }
    if bytes[4] != WKBM_VERSION {
        return Err(Error::Format(format!("unsupported WKBM version {}", bytes[4])));
    }
    let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let body = &bytes[13..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| Error::Format("WKBM dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "WKBM {rows}x{cols} needs {expected} data bytes, found {}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

pub fn write_wkbm(path: &Path, m: &ComplexMatrix) -> Result<()> {
    write_atomic(path, &encode_wkbm(m)?)
}

pub fn read_wkbm(path: &Path) -> Result<ComplexMatrix> {
    decode_wkbm(&fs::read(path)?)
}

fn push_num(line: &mut String, x: f64) {
    if !line.is_empty() {
        line.push(' ');
    }
    let _ = write!(line, "{x:.16e}");
}

pub fn encode_mesh(mesh: &Mesh) -> String {
    let mut out = format!("{} {}\n", mesh.len(), u8::from(mesh.closed));
    for e in &mesh.elements {
        let mut line = String::new();
        for x in e.center.iter().chain(&e.normal).chain(std::iter::once(&e.area)) {
            push_num(&mut line, *x);
        }
        for x in e.vertices.iter().flatten() {
            push_num(&mut line, *x);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn decode_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty mesh file".into()))?;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad mesh header {header:?}")))?;
    let closed = match parts.next() {
        Some("1") => true,
        Some("0") => false,
        _ => return Err(Error::Format(format!("bad mesh header {header:?}"))),
    };
    let mut elements = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("mesh line {}: {e}", i + 2)))?;
        if nums.len() != 16 && nums.len() != 19 {
            return Err(Error::Format(format!(
                "mesh line {} has {} numbers, expected 16 or 19",
                i + 2,
                nums.len()
            )));
        }
        elements.push(Element {
            center: [nums[0], nums[1], nums[2]],
            normal: [nums[3], nums[4], nums[5]],
            area: nums[6],
            vertices: nums[7..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        });
    }
    if elements.len() != count {
        return Err(Error::Format(format!(
            "mesh header declares {count} elements, file has {}",
            elements.len()
        )));
    }
    Mesh::new(elements, closed)
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    write_atomic(path, encode_mesh(mesh).as_bytes())
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    decode_mesh(&fs::read_to_string(path)?)
}

pub fn encode_grid_csv(grid: &WavenumberGrid) -> String {
    let mut out = String::from("index,kx,ky,kz,theta,phi,weight\n");
    for (i, m) in grid.modes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            m.kx, m.ky, m.kz, m.theta, m.phi, m.weight
        );
    }
    out
}

/// 8-bit binary PGM of `values` (row-major, `width * height`), scaled
/// linearly so the largest value maps to 255.
pub fn encode_pgm(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != width * height || width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    let max = values.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|v| {
        if v.is_finite() {
            (v.max(0.0) * scale).round().min(255.0) as u8
        } else {
            0
        }
    }));
    Ok(out)
}

pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    write_atomic(path, &encode_pgm(width, height, values)?)
}
