//! Piecewise rotated-Q1 shape functions on cut elements.
//!
//! Each function is a pair `(φ⁺, φ⁻)` of rotated-Q1 polynomials sharing the quadratic
//! coefficient. The eight coefficients are fixed by the four edge averages, continuity at the
//! chord end points `E` and `F`, the shared quadratic term, and the flux balance
//! `β⁺ ∂φ⁺/∂n = β⁻ ∂φ⁻/∂n` at the chord midpoint `G`.

use super::basis::{Coeffs, LocalFrame};
use super::quadrature::segment_rule;
use crate::error::{Error, Result};
use crate::linalg::{condition_1, DenseLu};
use crate::mesh::{ElementCut, Grid, Point, Side};

/// Upper bound on the (row-equilibrated) condition estimate of the 8x8 system.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct ImmersedBasis {
    pub element: usize,
    pub frame: LocalFrame,
    pub g: Point,
    pub normal: Point,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub plus: [Coeffs; 4],
    pub minus: [Coeffs; 4],
    pub condition: f64,
}

/// Rows of the 8x8 system: 4 edge averages, continuity at `E` and `F`, `d⁺ = d⁻`, flux at `G`.
/// Unknowns are `[a⁺, b⁺, c⁺, d⁺, a⁻, b⁻, c⁻, d⁻]`. Row-major.
pub fn immersed_system(grid: &Grid, cut: &ElementCut, beta_plus: f64, beta_minus: f64) -> [f64; 64] {
    let frame = LocalFrame::new(grid, cut.element);
    let mut a = [0.0; 64];
    for k in 0..4 {
        let [p0, p1] = grid.local_edge_endpoints(cut.element, k);
        let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        for ([s0, s1], side) in cut.edge_pieces(grid, k) {
            let off = if side == Side::Plus { 0 } else { 4 };
            let rule = segment_rule(s0, s1);
            for (&p, &w) in rule.points.iter().zip(&rule.weights) {
                let m = frame.monomials(p);
                for j in 0..4 {
                    a[k * 8 + off + j] += w * m[j] / len;
                }
            }
        }
    }
    for (row, p) in [(4, cut.e), (5, cut.f)] {
        let m = frame.monomials(p);
        for j in 0..4 {
            a[row * 8 + j] = m[j];
            a[row * 8 + 4 + j] = -m[j];
        }
    }
    a[6 * 8 + 3] = 1.0;
    a[6 * 8 + 7] = -1.0;
    let grads = frame.monomial_gradients(cut.g);
    for j in 0..4 {
        let dn = grads[j][0] * cut.normal[0] + grads[j][1] * cut.normal[1];
        a[7 * 8 + j] = beta_plus * dn;
        a[7 * 8 + 4 + j] = -beta_minus * dn;
    }
    a
}

fn equilibrate(a: &mut [f64; 64]) -> [f64; 8] {
    let mut scale = [1.0; 8];
    for r in 0..8 {
        let m = a[r * 8..r * 8 + 8].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            scale[r] = 1.0 / m;
            for v in &mut a[r * 8..r * 8 + 8] {
                *v /= m;
            }
        }
    }
    scale
}

impl ImmersedBasis {
    pub fn build(grid: &Grid, cut: &ElementCut, beta_plus: f64, beta_minus: f64) -> Result<Self> {
        let mut a = immersed_system(grid, cut, beta_plus, beta_minus);
        let scale = equilibrate(&mut a);
        let condition = condition_1(8, &a);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::DegenerateCut {
                element: cut.element,
                condition,
            });
        }
        let lu = DenseLu::factor(8, &a).ok_or(Error::DegenerateCut {
            element: cut.element,
            condition,
        })?;
        let mut plus = [[0.0; 4]; 4];
        let mut minus = [[0.0; 4]; 4];
        for i in 0..4 {
            let mut rhs = [0.0; 8];
            rhs[i] = scale[i];
            let x = lu.solve(&rhs);
            plus[i].copy_from_slice(&x[..4]);
            minus[i].copy_from_slice(&x[4..]);
        }
        Ok(ImmersedBasis {
            element: cut.element,
            frame: LocalFrame::new(grid, cut.element),
            g: cut.g,
            normal: cut.normal,
            beta_plus,
            beta_minus,
            plus,
            minus,
            condition,
        })
    }

    pub fn side_of(&self, p: Point) -> Side {
        let d = (p[0] - self.g[0]) * self.normal[0] + (p[1] - self.g[1]) * self.normal[1];
        if d >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn piece(&self, i: usize, side: Side) -> &Coeffs {
        match side {
            Side::Plus => &self.plus[i],
            Side::Minus => &self.minus[i],
        }
    }

    /// Coefficient vector `[plus.., minus..]` of function `i`.
    pub fn unknowns(&self, i: usize) -> [f64; 8] {
        let mut x = [0.0; 8];
        x[..4].copy_from_slice(&self.plus[i]);
        x[4..].copy_from_slice(&self.minus[i]);
        x
    }
}

/// Residuals of the four condition groups for function `i` with target edge data `δ_ij`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionResiduals {
    pub edge_average: f64,
    pub continuity: f64,
    pub quadratic: f64,
    /// Flux mismatch relative to `max(β) |∇φ|` at `G`.
    pub flux: f64,
}

impl ConditionResiduals {
    pub fn max(&self) -> f64 {
        self.edge_average.max(self.continuity).max(self.quadratic).max(self.flux)
    }
}

/// Checks the four condition groups directly from the geometry, without reusing the assembled system.
pub fn condition_residuals(grid: &Grid, cut: &ElementCut, basis: &ImmersedBasis, i: usize) -> ConditionResiduals {
    let frame = &basis.frame;
    let mut edge_average: f64 = 0.0;
    for k in 0..4 {
        let [p0, p1] = grid.local_edge_endpoints(cut.element, k);
        let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        let mut avg = 0.0;
        for ([s0, s1], side) in cut.edge_pieces(grid, k) {
            let c = basis.piece(i, side);
            avg += segment_rule(s0, s1).integrate(|p| frame.value(c, p)) / len;
        }
        let target = if k == i { 1.0 } else { 0.0 };
        edge_average = edge_average.max((avg - target).abs());
    }
    let continuity = [cut.e, cut.f]
        .iter()
        .map(|&p| (frame.value(&basis.plus[i], p) - frame.value(&basis.minus[i], p)).abs())
        .fold(0.0, f64::max);
    let quadratic = (basis.plus[i][3] - basis.minus[i][3]).abs();
    let gp = frame.gradient(&basis.plus[i], cut.g);
    let gm = frame.gradient(&basis.minus[i], cut.g);
    let n = cut.normal;
    let fp = basis.beta_plus * (gp[0] * n[0] + gp[1] * n[1]);
    let fm = basis.beta_minus * (gm[0] * n[0] + gm[1] * n[1]);
    let scale = basis.beta_plus.max(basis.beta_minus)
        * gp[0].hypot(gp[1]).max(gm[0].hypot(gm[1])).max(2.0 / frame.hx.min(frame.hy));
    ConditionResiduals {
        edge_average,
        continuity,
        quadratic,
        flux: (fp - fm).abs() / scale,
    }
}
