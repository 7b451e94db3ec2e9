//! The `axfield-v1` field format and atomic CSV output.
//!
//! A field file is six header lines followed by one value per node in storage
//! order (`z` fastest), each with 17 significant digits:
//!
//! ```text
//! axfield-v1
//! axial            # line | radial | axial
//! 121 201          # ns nz (axial) or n
//! 1e-1 1e-1        # hs hz (axial) or h
//! 0e0 -1e1         # s and z origins (axial) or the single origin
//! 3                # ambient dimension
//! ```
//!
//! The mask lives in a parallel file `<path>.mask` holding `0` or `1` per node.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{AxialGrid, Grid, LineGrid, RadialGrid, ScalarField};

pub const FIELD_TAG: &str = "axfield-v1";

/// Path of the mask file that accompanies `path`.
pub fn mask_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".mask");
    PathBuf::from(s)
}

/// Writes `contents` to a temporary sibling of `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()
    };
    if let Err(e) = write() {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Header line plus rows, newline terminated, written atomically.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    write_atomic(path, &out)
}

fn header(g: &Grid) -> [String; 5] {
    match *g {
        Grid::Line(l) => [
            "line".into(),
            l.n.to_string(),
            format!("{:.16e}", l.h),
            format!("{:.16e}", l.origin),
            "1".into(),
        ],
        Grid::Radial(r) => [
            "radial".into(),
            r.n.to_string(),
            format!("{:.16e}", r.h),
            format!("{:.16e}", 0.0),
            r.dim.to_string(),
        ],
        Grid::Axial(a) => [
            "axial".into(),
            format!("{} {}", a.ns, a.nz),
            format!("{:.16e} {:.16e}", a.hs, a.hz),
            format!("{:.16e} {:.16e}", 0.0, a.z0),
            a.dim.to_string(),
        ],
    }
}

/// Field file contents and mask file contents.
pub fn encode_field(u: &ScalarField) -> (String, String) {
    let mut body = String::with_capacity(24 * (u.values().len() + 6));
    body.push_str(FIELD_TAG);
    body.push('\n');
    for line in header(u.grid()) {
        body.push_str(&line);
        body.push('\n');
    }
    for v in u.values() {
        body.push_str(&format!("{v:.16e}\n"));
    }
    let mut mask = String::with_capacity(2 * u.mask().len());
    for &m in u.mask() {
        mask.push_str(if m { "1\n" } else { "0\n" });
    }
    (body, mask)
}

/// Writes `path` and `<path>.mask`.
pub fn write_field(path: &Path, u: &ScalarField) -> Result<()> {
    let (body, mask) = encode_field(u);
    write_atomic(&mask_path(path), &mask)?;
    write_atomic(path, &body)
}

fn nums<T: std::str::FromStr>(line: &str, count: usize, what: &str) -> std::result::Result<Vec<T>, String> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|t| t.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("cannot parse {what} from {line:?}"))?;
    if v.len() != count {
        return Err(format!("expected {count} {what} entries, got {}", v.len()));
    }
    Ok(v)
}

fn decode_grid(lines: &[&str]) -> std::result::Result<Grid, String> {
    let dim: usize = nums(lines[4], 1, "dimension")?[0];
    let grid = match lines[0] {
        "line" => {
            let n = nums::<usize>(lines[1], 1, "dims")?[0];
            let h = nums::<f64>(lines[2], 1, "spacing")?[0];
            let origin = nums::<f64>(lines[3], 1, "origin")?[0];
            if dim != 1 {
                return Err(format!("line grid with dimension {dim}"));
            }
            Grid::Line(LineGrid { h, n, origin })
        }
        "radial" => {
            let n = nums::<usize>(lines[1], 1, "dims")?[0];
            let h = nums::<f64>(lines[2], 1, "spacing")?[0];
            let origin = nums::<f64>(lines[3], 1, "origin")?[0];
            if origin != 0.0 {
                return Err(format!("radial origin must be 0, got {origin}"));
            }
            if dim < 2 {
                return Err(format!("radial grid with dimension {dim}"));
            }
            Grid::Radial(RadialGrid { h, n, dim })
        }
        "axial" => {
            let d = nums::<usize>(lines[1], 2, "dims")?;
            let h = nums::<f64>(lines[2], 2, "spacings")?;
            let o = nums::<f64>(lines[3], 2, "origins")?;
            if o[0] != 0.0 {
                return Err(format!("axial s origin must be 0, got {}", o[0]));
            }
            if dim < 3 {
                return Err(format!("axial grid with dimension {dim}"));
            }
            Grid::Axial(AxialGrid { hs: h[0], hz: h[1], ns: d[0], nz: d[1], z0: o[1], dim })
        }
        other => return Err(format!("unknown grid kind {other:?}")),
    };
    let spacings = match grid {
        Grid::Line(l) => [l.h, l.h],
        Grid::Radial(r) => [r.h, r.h],
        Grid::Axial(a) => [a.hs, a.hz],
    };
    if spacings.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err("spacings must be positive".into());
    }
    if grid.is_empty() {
        return Err("grid has no nodes".into());
    }
    Ok(grid)
}

/// Parses field and mask file contents. Errors carry no path; see
/// [`read_field`].
pub fn decode_field(body: &str, mask: &str) -> std::result::Result<ScalarField, String> {
    let mut lines = body.lines();
    if lines.next().map(str::trim) != Some(FIELD_TAG) {
        return Err(format!("first line must be {FIELD_TAG}"));
    }
    let head: Vec<&str> = lines.by_ref().take(5).map(str::trim).collect();
    if head.len() < 5 {
        return Err("truncated header".into());
    }
    let grid = decode_grid(&head)?;
    let values: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| l.trim().parse::<f64>().map_err(|_| format!("bad value {l:?} at node {k}")))
        .collect::<std::result::Result<_, _>>()?;
    let mask: Vec<bool> = mask
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("bad mask entry {other:?} at node {k}")),
        })
        .collect::<std::result::Result<_, _>>()?;
    if values.len() != grid.len() || mask.len() != grid.len() {
        return Err(format!(
            "grid has {} nodes, found {} values and {} mask entries",
            grid.len(),
            values.len(),
            mask.len()
        ));
    }
    if values.iter().zip(&mask).any(|(&v, &m)| !m && v != 0.0) {
        return Err("nonzero value outside the mask".into());
    }
    ScalarField::new(grid, values, mask).map_err(|e| e.to_string())
}

/// Reads `path` and `<path>.mask`. A missing file is an I/O error, malformed
/// contents a format error.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mpath = mask_path(path);
    let mask = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    decode_field(&body, &mask).map_err(|msg| Error::Format { path: path.to_path_buf(), msg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    #[test]
    fn header_layout() {
        let g = build_grid(GridSpec::Axial { hs: 0.5, hz: 0.25, s_max: 1.0, z_min: -1.0, z_max: 0.0, dim: 3 }).unwrap();
        let u = ScalarField::from_fn(g, g.interior_mask(), |s, z| s - z).unwrap();
        let (body, mask) = encode_field(&u);
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "axfield-v1");
        assert_eq!(lines[1], "axial");
        assert_eq!(lines[2], "3 5");
        assert_eq!(lines[5], "3");
        assert_eq!(lines.len(), 6 + 15);
        assert_eq!(mask.lines().count(), 15);
        assert_eq!(decode_field(&body, &mask).unwrap(), u);
    }

    #[test]
    fn malformed_inputs() {
        let g = build_grid(GridSpec::Line { h: 0.5, x_min: 0.0, x_max: 1.0 }).unwrap();
        let u = ScalarField::from_fn(g, g.full_mask(), |_, x| x).unwrap();
        let (body, mask) = encode_field(&u);
        assert!(decode_field(&body.replace("axfield-v1", "axfield-v2"), &mask).is_err());
        assert!(decode_field(&body, "1\n1\n").is_err());
        assert!(decode_field(&body, "1\n2\n1\n").is_err());
        assert!(decode_field(&body.replace("line", "cube"), &mask).is_err());
        assert!(decode_field(&format!("{body}1.0\n"), &mask).is_err());
        assert!(decode_field(&body, "1\n1\n0\n").is_err());
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.axf");
        assert!(matches!(read_field(&p), Err(Error::Io { .. })));
        fs::write(&p, "axfield-v1\n").unwrap();
        assert!(matches!(read_field(&p), Err(Error::Io { .. })));
        fs::write(mask_path(&p), "").unwrap();
        assert!(matches!(read_field(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn atomic_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        write_csv(&p, "a,b", &["1,2".into()]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,2\n");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
