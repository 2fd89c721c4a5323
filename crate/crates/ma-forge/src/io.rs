//! File formats: plain-text polytopes and segment lists, CSV field dumps,
//! legacy VTK volumes, and the JSON run manifest.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{make_polytope, Polytope};
use crate::grid::TensorGrid;
use crate::solver::SolveResult;
use crate::{Error, Result};

/// Write a polytope as text: header `n d V E`, then V vertex rows, then E
/// edge index pairs.
pub fn write_polytope(path: &Path, p: &Polytope) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        p.ambient,
        p.dim,
        p.vertices.len(),
        p.edges.len()
    );
    for v in &p.vertices {
        let row: Vec<String> = v.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    for (i, j) in &p.edges {
        let _ = writeln!(out, "{i} {j}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read the text format back. The hull structure is recomputed from the
/// vertices; the stored dimensions and edge count must agree with it.
pub fn read_polytope(path: &Path) -> Result<Polytope> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty polytope file".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad_header(header)))
        .collect::<std::result::Result<_, _>>()?;
    if head.len() != 4 {
        return Err(bad_header(header));
    }
    let (n, d, nv, ne) = (head[0], head[1], head[2], head[3]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| Error::Config("polytope file ends inside the vertex block".into()))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Config(format!("bad vertex row '{line}'")))
            })
            .collect::<std::result::Result<_, _>>()?;
        if row.len() != n {
            return Err(Error::Config(format!(
                "vertex row '{line}' has {} coordinates, expected {n}",
                row.len()
            )));
        }
        vertices.push(row);
    }
    let p = make_polytope(&vertices)?;
    if p.dim != d || p.edges.len() != ne {
        return Err(Error::Config(format!(
            "polytope header promises dim {d} with {ne} edges, hull has dim {} with {}",
            p.dim,
            p.edges.len()
        )));
    }
    Ok(p)
}

fn bad_header(line: &str) -> Error {
    Error::Config(format!("bad polytope header '{line}', expected 'n d V E'"))
}

/// Read segment directions: one row of coordinates per segment, `#`
/// comments allowed.
pub fn read_segments(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Config(format!("bad segment row '{line}'")))
            })
            .collect::<std::result::Result<_, _>>()?;
        if row.len() != n {
            return Err(Error::Config(format!(
                "segment row '{line}' has {} coordinates, expected {n}",
                row.len()
            )));
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::Config("segment file holds no directions".into()));
    }
    Ok(out)
}

/// Write node fields as CSV: one coordinate column per axis, then the
/// named columns, axis-0 fastest.
pub fn write_fields_csv(path: &Path, grid: &TensorGrid, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, data) in columns {
        if data.len() != grid.len() {
            return Err(Error::Config(format!(
                "column '{name}' has {} values for {} nodes",
                data.len(),
                grid.len()
            )));
        }
    }
    let mut out = String::new();
    let coords: Vec<String> = (1..=grid.dim).map(|d| format!("x{d}")).collect();
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "{},{}", coords.join(","), names.join(","));
    for flat in 0..grid.len() {
        let p = grid.point(flat);
        for c in &p[..grid.dim] {
            let _ = write!(out, "{c:?},");
        }
        let row: Vec<String> = columns.iter().map(|(_, d)| format!("{:?}", d[flat])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a CSV written by `write_fields_csv`: header names and columns.
pub fn read_fields_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut k = 0;
        for tok in line.split(',') {
            if k >= cols.len() {
                return Err(Error::Config(format!("CSV row '{line}' is too long")));
            }
            cols[k].push(
                tok.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad CSV value '{tok}'")))?,
            );
            k += 1;
        }
        if k != cols.len() {
            return Err(Error::Config(format!("CSV row '{line}' is too short")));
        }
    }
    Ok((names, cols))
}

/// Write a legacy VTK structured-points volume of the named node fields.
/// Three-dimensional grids only; axis-0 runs fastest, matching VTK.
pub fn write_vtk(path: &Path, grid: &TensorGrid, columns: &[(&str, &[f64])]) -> Result<()> {
    if grid.dim != 3 {
        return Err(Error::Config(format!(
            "VTK export needs a 3d grid, got {}d",
            grid.dim
        )));
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("obstacle run fields\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", grid.m, grid.m, grid.m);
    let _ = writeln!(
        out,
        "ORIGIN {:?} {:?} {:?}",
        -grid.half_width, -grid.half_width, -grid.half_width
    );
    let h = grid.h();
    let _ = writeln!(out, "SPACING {h:?} {h:?} {h:?}");
    let _ = writeln!(out, "POINT_DATA {}", grid.len());
    for (name, data) in columns {
        if data.len() != grid.len() {
            return Err(Error::Config(format!(
                "column '{name}' has {} values for {} nodes",
                data.len(),
                grid.len()
            )));
        }
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in data.iter() {
            let _ = writeln!(out, "{v:?}");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write the run manifest: parameters, convergence record, and invariant
/// measurements as JSON.
pub fn write_manifest(path: &Path, result: &SolveResult) -> Result<()> {
    let doc = serde_json::json!({
        "params": result.params,
        "sweeps": result.sweeps,
        "final_update": result.final_update,
        "residual_history": result.residual_history,
        "invariants": result.invariants,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Grid shape recorded in a manifest, for re-export.
pub fn manifest_grid(path: &Path) -> Result<TensorGrid> {
    let text = std::fs::read_to_string(path)?;
    let doc: serde_json::Value = serde_json::from_str(&text)?;
    let p = &doc["params"];
    let (Some(n), Some(m), Some(half)) = (
        p["n"].as_u64(),
        p["m"].as_u64(),
        p["half_width"].as_f64(),
    ) else {
        return Err(Error::Config(format!(
            "manifest {} lacks grid parameters",
            path.display()
        )));
    };
    TensorGrid::new(n as usize, half, m as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::preset;
    use crate::grid::ScalarField;

    #[test]
    fn polytope_text_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tetra.txt");
        let p = preset("tetrahedron", 3).unwrap();
        write_polytope(&path, &p).unwrap();
        let q = read_polytope(&path).unwrap();
        assert_eq!(q.vertices, p.vertices);
        assert_eq!(q.edges, p.edges);
        assert_eq!(q.dim, 3);
    }

    #[test]
    fn corrupt_polytope_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "3 3 1\n0 0 0\n").unwrap();
        assert!(read_polytope(&path).is_err());
        std::fs::write(&path, "2 1 2 1\n0 0\n0 nope\n0 1\n").unwrap();
        assert!(read_polytope(&path).is_err());
    }

    #[test]
    fn segment_rows_parse_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y3.txt");
        std::fs::write(&path, "# three legs\n2 0 0\n-1 2 0 # tilted\n-1 -2 0\n").unwrap();
        let segs = read_segments(&path, 3).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[1], vec![-1.0, 2.0, 0.0]);
        assert!(read_segments(&path, 2).is_err());
    }

    #[test]
    fn csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let g = TensorGrid::new(2, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] * 0.3 + x[1] * x[1]);
        let c: Vec<f64> = (0..g.len()).map(|f| (f % 2) as f64).collect();
        write_fields_csv(&path, &g, &[("u_star", &u.data), ("contact", &c)]).unwrap();
        let (names, cols) = read_fields_csv(&path).unwrap();
        assert_eq!(names, vec!["x1", "x2", "u_star", "contact"]);
        assert_eq!(cols[2], u.data);
        assert_eq!(cols[3], c);
        // Coordinate columns reproduce the grid.
        for flat in 0..g.len() {
            let p = g.point(flat);
            assert_eq!(cols[0][flat], p[0]);
            assert_eq!(cols[1][flat], p[1]);
        }
    }

    #[test]
    fn vtk_has_the_structured_points_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.vtk");
        let g = TensorGrid::new(3, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] + x[1] + x[2]);
        write_vtk(&path, &g, &[("u_star", &u.data)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DATASET STRUCTURED_POINTS"));
        assert!(text.contains("DIMENSIONS 5 5 5"));
        assert!(text.contains("POINT_DATA 125"));
        assert!(text.contains("SCALARS u_star double 1"));
        let g2 = TensorGrid::new(2, 1.0, 5).unwrap();
        assert!(write_vtk(&path, &g2, &[]).is_err());
    }
}
