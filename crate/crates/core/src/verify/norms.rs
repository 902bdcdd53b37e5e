//! L² and broken H¹ errors of the discrete saturation, pressure and velocity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::ElementQuadrature;
use crate::impes::SimulationState;
use crate::mesh::{Grid, Interface, Point};
use crate::velocity::eval_velocity;

use super::cases::ManufacturedCase;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldErrors {
    pub s_l2: f64,
    pub p_l2: f64,
    pub u_l2: f64,
    /// Broken H¹ seminorms.
    pub s_h1: f64,
    pub p_h1: f64,
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Errors of the state at time `t` against the exact solution.
///
/// Exact fields take their side from the level set; the discrete pressure takes the piece on the
/// quadrature point's side of the chord.
pub fn error_norms(
    grid: &Grid,
    interface: &Interface,
    case: &ManufacturedCase,
    state: &SimulationState,
    t: f64,
) -> Result<FieldErrors> {
    let (Some(pressure), Some(op), Some(flux)) = (&state.pressure, &state.operator, &state.flux) else {
        return Err(Error::Contract("error norms need a state produced by at least one step".into()));
    };
    let s = &state.saturation;
    let parts: Vec<[f64; 5]> = (0..grid.n_elements())
        .into_par_iter()
        .map(|e| {
            let quad = ElementQuadrature::new(grid, interface, e);
            let dofs = pressure.local(grid, e);
            let mut acc = [0.0; 5];
            for (x, w, side) in quad.iter() {
                let true_side = case.side(x);
                let se = case.saturation_jet(x, t, true_side);
                let pe = case.pressure_jet(x, t, true_side);
                let ue = case.velocity_on(x, t, true_side);
                let (sh, gsh) = s.eval(grid, e, x);
                let (ph, gph) = op.bases[e].eval_combination(&dofs, x, side);
                let uh = eval_velocity(grid, e, &flux.local[e], x);
                acc[0] += w * (se.value - sh).powi(2);
                acc[1] += w * (pe.value - ph).powi(2);
                acc[2] += w * dist2(ue, uh);
                acc[3] += w * dist2(se.grad, gsh);
                acc[4] += w * dist2(pe.grad, gph);
            }
            acc
        })
        .collect();
    let mut total = [0.0; 5];
    for part in &parts {
        for k in 0..5 {
            total[k] += part[k];
        }
    }
    let [s_l2, p_l2, u_l2, s_h1, p_h1] = total.map(f64::sqrt);
    Ok(FieldErrors {
        s_l2,
        p_l2,
        u_l2,
        s_h1,
        p_h1,
    })
}
