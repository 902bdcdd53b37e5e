//! VTK legacy and CSV writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::impes::SimulationState;
use crate::mesh::Grid;
use crate::velocity::eval_velocity;

/// Write `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Pressure, velocity and speed at each element center; `None` before the first pressure solve.
pub struct CellFields {
    pub centers: Vec<[f64; 2]>,
    pub saturation: Vec<f64>,
    pub pressure: Vec<f64>,
    pub velocity: Vec<[f64; 2]>,
}

pub fn cell_fields(grid: &Grid, state: &SimulationState) -> Option<CellFields> {
    let (Some(p), Some(op), Some(flux)) = (&state.pressure, &state.operator, &state.flux) else {
        return None;
    };
    let centers: Vec<[f64; 2]> = (0..grid.n_elements()).map(|e| grid.element_center(e)).collect();
    Some(CellFields {
        saturation: centers
            .iter()
            .enumerate()
            .map(|(e, &x)| state.saturation.value_at(grid, e, x))
            .collect(),
        pressure: centers
            .iter()
            .enumerate()
            .map(|(e, &x)| op.eval_pressure(grid, p, e, x).0)
            .collect(),
        velocity: centers
            .iter()
            .enumerate()
            .map(|(e, &x)| eval_velocity(grid, e, &flux.local[e], x))
            .collect(),
        centers,
    })
}

/// Structured-points file with the vertex saturation, plus cell pressure and speed when known.
pub fn vtk_structured_points(grid: &Grid, state: &SimulationState, title: &str) -> String {
    let mut out = String::new();
    let o = grid.origin();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{}", title.replace('\n', " "));
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", grid.nx() + 1, grid.ny() + 1);
    let _ = writeln!(out, "ORIGIN {} {} 0", o[0], o[1]);
    let _ = writeln!(out, "SPACING {} {} 1", grid.hx(), grid.hy());
    let _ = writeln!(out, "POINT_DATA {}", grid.n_vertices());
    let _ = writeln!(out, "SCALARS S float 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in &state.saturation.values {
        let _ = writeln!(out, "{}", *v as f32);
    }
    if let Some(cells) = cell_fields(grid, state) {
        let _ = writeln!(out, "CELL_DATA {}", grid.n_elements());
        let _ = writeln!(out, "SCALARS p float 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for p in &cells.pressure {
            let _ = writeln!(out, "{}", *p as f32);
        }
        let _ = writeln!(out, "SCALARS speed float 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for u in &cells.velocity {
            let _ = writeln!(out, "{}", u[0].hypot(u[1]) as f32);
        }
    }
    out
}

/// `x,y,S,p,ux,uy` at element centers.
pub fn fields_csv(grid: &Grid, state: &SimulationState) -> Option<String> {
    let cells = cell_fields(grid, state)?;
    let mut out = String::from("x,y,S,p,ux,uy\n");
    for e in 0..grid.n_elements() {
        let [x, y] = cells.centers[e];
        let [ux, uy] = cells.velocity[e];
        let _ = writeln!(
            out,
            "{x:.6e},{y:.6e},{:.9e},{:.9e},{ux:.9e},{uy:.9e}",
            cells.saturation[e], cells.pressure[e]
        );
    }
    Some(out)
}

/// File-name label for a time: integers print without decimals.
pub fn time_label(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        format!("{t:.3}")
    }
}
