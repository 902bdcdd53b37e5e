//! Finite element spaces for the pressure: standard rotated-Q1 on uncut elements and the
//! immersed piecewise variant on cut elements.

pub mod basis;
pub mod immersed;
pub mod quadrature;

pub use basis::{reference_basis, Coeffs, LocalFrame, RotatedQ1Basis};
pub use immersed::{condition_residuals, immersed_system, ConditionResiduals, ImmersedBasis};
pub use quadrature::{rectangle_rule, segment_rule, triangle_rule, ElementQuadrature, QuadratureRule};

use crate::mesh::{Grid, Point, Side};

/// Shape functions of one element.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementBasis {
    Standard(LocalFrame),
    Immersed(Box<ImmersedBasis>),
}

impl ElementBasis {
    pub fn standard(grid: &Grid, e: usize) -> Self {
        ElementBasis::Standard(LocalFrame::new(grid, e))
    }

    pub fn frame(&self) -> &LocalFrame {
        match self {
            ElementBasis::Standard(f) => f,
            ElementBasis::Immersed(b) => &b.frame,
        }
    }

    /// Coefficients of function `i` on the given side of the chord.
    pub fn coeffs(&self, i: usize, side: Side) -> &Coeffs {
        match self {
            ElementBasis::Standard(_) => &reference_basis().coeffs[i],
            ElementBasis::Immersed(b) => b.piece(i, side),
        }
    }

    /// Side of the chord a point falls on (always plus for standard elements).
    pub fn side_of(&self, p: Point) -> Side {
        match self {
            ElementBasis::Standard(_) => Side::Plus,
            ElementBasis::Immersed(b) => b.side_of(p),
        }
    }

    /// Value and gradient of function `i` at `p`, using the piece on `side`.
    pub fn eval_on(&self, i: usize, p: Point, side: Side) -> (f64, Point) {
        let c = self.coeffs(i, side);
        let f = self.frame();
        (f.value(c, p), f.gradient(c, p))
    }

    /// Value and gradient of function `i` at `p`, choosing the piece by the side of `EF`.
    pub fn eval(&self, i: usize, p: Point) -> (f64, Point) {
        self.eval_on(i, p, self.side_of(p))
    }

    /// Value and gradient of the combination `Σ dofs_i φ_i`.
    pub fn eval_combination(&self, dofs: &[f64; 4], p: Point, side: Side) -> (f64, Point) {
        let f = self.frame();
        let mut c = [0.0; 4];
        for (i, d) in dofs.iter().enumerate() {
            let ci = self.coeffs(i, side);
            for m in 0..4 {
                c[m] += d * ci[m];
            }
        }
        (f.value(&c, p), f.gradient(&c, p))
    }
}
