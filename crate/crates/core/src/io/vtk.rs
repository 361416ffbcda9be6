//! Legacy ASCII VTK (version 3.0) snapshots with cell data.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// One piecewise-constant field.
#[derive(Debug, Clone, PartialEq)]
pub enum CellField {
    Scalar(String, Vec<f64>),
    Vector(String, Vec<[f64; 2]>),
}

impl CellField {
    fn len(&self) -> usize {
        match self {
            CellField::Scalar(_, v) => v.len(),
            CellField::Vector(_, v) => v.len(),
        }
    }

    fn name(&self) -> &str {
        match self {
            CellField::Scalar(n, _) | CellField::Vector(n, _) => n,
        }
    }
}

/// Write the mesh followed by every field as `CELL_DATA`.
pub fn write_snapshot<W: Write>(out: &mut W, mesh: &Mesh, title: &str, fields: &[CellField]) -> Result<()> {
    for f in fields {
        if f.len() != mesh.num_cells() {
            return Err(Error::DimensionMismatch(format!(
                "cell field `{}` has {} values for {} cells",
                f.name(),
                f.len(),
                mesh.num_cells()
            )));
        }
        if f.name().is_empty() || f.name().contains(char::is_whitespace) {
            return Err(Error::config("vtk", format!("invalid field name `{}`", f.name())));
        }
    }
    mesh.write_vtk(out, title, &[])?;
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "CELL_DATA {}", mesh.num_cells())?;
    for f in fields {
        match f {
            CellField::Scalar(name, data) => {
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for x in data {
                    writeln!(out, "{x:?}")?;
                }
            }
            CellField::Vector(name, data) => {
                writeln!(out, "VECTORS {name} double")?;
                for v in data {
                    writeln!(out, "{:?} {:?} 0", v[0], v[1])?;
                }
            }
        }
    }
    Ok(())
}

pub fn snapshot_string(mesh: &Mesh, title: &str, fields: &[CellField]) -> Result<String> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, mesh, title, fields)?;
    Ok(String::from_utf8(buf).expect("VTK output is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn header_and_sections() {
        let mesh = Mesh::uniform_grid(1, Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        let text = snapshot_string(
            &mesh,
            "test",
            &[
                CellField::Scalar("div".into(), vec![0.5, 1.0]),
                CellField::Vector("D".into(), vec![[1.0, 2.0], [3.0, 4.0]]),
            ],
        )
        .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[2], "ASCII");
        assert!(text.contains("CELL_DATA 2\nSCALARS div double 1\nLOOKUP_TABLE default\n0.5\n1.0\n"));
        assert!(text.ends_with("VECTORS D double\n1.0 2.0 0\n3.0 4.0 0\n"));
    }

    #[test]
    fn rejects_wrong_lengths_and_names() {
        let mesh = Mesh::uniform_grid(1, Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert!(snapshot_string(&mesh, "t", &[CellField::Scalar("x".into(), vec![1.0])]).is_err());
        assert!(snapshot_string(&mesh, "t", &[CellField::Scalar("a b".into(), vec![1.0, 2.0])]).is_err());
    }
}
