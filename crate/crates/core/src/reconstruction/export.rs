//! ASCII PLY and CSV point-cloud files.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use super::ReconstructionError;

pub fn write_ply(path: impl AsRef<Path>, points: &[Point3<f64>]) -> Result<(), ReconstructionError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", points.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    writeln!(w, "end_header")?;
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `x y z` vertex properties of an ASCII PLY file.
pub fn read_ply(path: impl AsRef<Path>) -> Result<Vec<Point3<f64>>, ReconstructionError> {
    let bad = |m: &str| ReconstructionError::PointCloud(m.to_string());
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    if lines.next().transpose()?.as_deref() != Some("ply") {
        return Err(bad("missing ply magic"));
    }
    let mut count = None;
    let mut properties = Vec::new();
    loop {
        let line = lines.next().transpose()?.ok_or_else(|| bad("unterminated header"))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => return Err(bad("only ascii PLY is supported")),
            ["element", "vertex", n] => count = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?),
            ["property", _, name] if count.is_some() => properties.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element"))?;
    let column = |name: &str| {
        properties
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| bad(&format!("missing property {name}")))
    };
    let (cx, cy, cz) = (column("x")?, column("y")?, column("z")?);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next().transpose()?.ok_or_else(|| bad("truncated vertex list"))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad("bad vertex value"))?;
        if values.len() < properties.len() {
            return Err(bad("short vertex line"));
        }
        points.push(Point3::new(values[cx], values[cy], values[cz]));
    }
    Ok(points)
}

pub fn write_csv(path: impl AsRef<Path>, points: &[Point3<f64>]) -> Result<(), ReconstructionError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,z")?;
    for p in points {
        writeln!(w, "{},{},{}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ply_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let pts = vec![Point3::new(0.1, -0.2, 1.0 / 3.0), Point3::new(1e-9, 5.0, -7.25)];
        write_ply(&path, &pts).unwrap();
        assert_eq!(read_ply(&path).unwrap(), pts);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_csv(&path, &[Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,y,z\n1,2,3\n");
    }

    #[test]
    fn rejects_binary_ply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ply");
        std::fs::write(&path, "ply\nformat binary_little_endian 1.0\nend_header\n").unwrap();
        assert!(read_ply(&path).is_err());
    }
}
