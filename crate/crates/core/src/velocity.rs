//! Local recovery of the lowest-order Raviart–Thomas velocity from a solved pressure.
//!
//! For every element and local edge `e_i`,
//! `|e_i| (u_h·n)|_{e_i} = ∫_Q f̄_h φ_i - ∫_Q β ∇p_h · ∇φ_i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::EdgeScalarField;
use crate::mesh::{Grid, Point, BOTTOM, LEFT, RIGHT, TOP};
use crate::pressure::PressureOperator;

/// Normal fluxes `|e|(u_h·n)` per element (outward normals) and per edge (global orientation).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFluxField {
    /// `local[e][k]`: outward flux through local edge `k` of element `e`.
    pub local: Vec<[f64; 4]>,
    /// Flux through each edge along its global normal, taken from the lower-numbered element.
    pub edge: Vec<f64>,
    /// Largest `|F_left + F_right|` over interior edges.
    pub max_mismatch: f64,
    /// Largest interior mismatch relative to the largest flux magnitude.
    pub relative_mismatch: f64,
}

pub fn recover(grid: &Grid, op: &PressureOperator, pressure: &EdgeScalarField) -> Result<EdgeFluxField> {
    if pressure.operator_token() != op.token() {
        return Err(Error::Contract(format!(
            "pressure field was solved with operator {} but recovery uses operator {}",
            pressure.operator_token(),
            op.token()
        )));
    }
    let local: Vec<[f64; 4]> = (0..grid.n_elements())
        .into_par_iter()
        .map(|e| {
            // stiffness rows sum to zero, so removing the local mean only avoids cancellation
            let p = pressure.local_deviation(grid, e);
            let mean = p.iter().sum::<f64>() / 4.0;
            let load = op.load(e);
            let k = &op.stiffness[e];
            std::array::from_fn(|i| load[i] - (0..4).map(|j| k[i][j] * (p[j] - mean)).sum::<f64>())
        })
        .collect();
    let mut edge = vec![0.0; grid.n_edges()];
    let mut max_mismatch: f64 = 0.0;
    let mut max_flux: f64 = 0.0;
    for (idx, val) in edge.iter_mut().enumerate() {
        let [lo, hi] = grid.edge_elements(idx);
        // global normal is outward for the lower element and inward for the upper one
        let from_lo = lo.map(|e| local[e][slot_of(grid, e, idx)]);
        let from_hi = hi.map(|e| -local[e][slot_of(grid, e, idx)]);
        *val = from_lo.or(from_hi).unwrap();
        max_flux = max_flux.max(val.abs());
        if let (Some(a), Some(b)) = (from_lo, from_hi) {
            max_mismatch = max_mismatch.max((a - b).abs());
        }
    }
    Ok(EdgeFluxField {
        local,
        edge,
        max_mismatch,
        relative_mismatch: if max_flux > 0.0 { max_mismatch / max_flux } else { 0.0 },
    })
}

fn slot_of(grid: &Grid, e: usize, edge: usize) -> usize {
    grid.element_edges(e).iter().position(|&k| k == edge).unwrap()
}

/// RT0 velocity inside element `e` built from its four outward fluxes.
pub fn eval_velocity(grid: &Grid, e: usize, flux: &[f64; 4], p: Point) -> Point {
    let (hx, hy) = (grid.hx(), grid.hy());
    let o = grid.element_corners(e)[0];
    let s = (p[0] - o[0]) / hx;
    let t = (p[1] - o[1]) / hy;
    let ux_left = -flux[LEFT] / hy;
    let ux_right = flux[RIGHT] / hy;
    let uy_bottom = -flux[BOTTOM] / hx;
    let uy_top = flux[TOP] / hx;
    [ux_left + s * (ux_right - ux_left), uy_bottom + t * (uy_top - uy_bottom)]
}

/// Constant divergence of the RT0 field: net outflux over area.
pub fn divergence(grid: &Grid, flux: &[f64; 4]) -> f64 {
    flux.iter().sum::<f64>() / grid.element_area()
}
