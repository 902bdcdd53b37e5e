//! Rotated-Q1 (Rannacher–Turek) shape functions on axis-aligned rectangles.
//!
//! Local functions live in reference coordinates `(s, t) ∈ [-1, 1]^2` of each element and are
//! stored as coefficients `[a, b, c, d]` of `a + b s + c t + d (s² - t²)`.

use std::sync::OnceLock;

use crate::linalg::DenseLu;
use crate::mesh::{Grid, Point};

pub type Coeffs = [f64; 4];

/// Affine map between an element and the reference square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub center: Point,
    pub hx: f64,
    pub hy: f64,
}

impl LocalFrame {
    pub fn new(grid: &Grid, e: usize) -> Self {
        LocalFrame {
            center: grid.element_center(e),
            hx: grid.hx(),
            hy: grid.hy(),
        }
    }

    pub fn to_reference(&self, p: Point) -> Point {
        [2.0 * (p[0] - self.center[0]) / self.hx, 2.0 * (p[1] - self.center[1]) / self.hy]
    }

    /// Monomials `1, s, t, s² - t²` at a physical point.
    pub fn monomials(&self, p: Point) -> Coeffs {
        let [s, t] = self.to_reference(p);
        [1.0, s, t, s * s - t * t]
    }

    /// Physical gradients of the monomials.
    pub fn monomial_gradients(&self, p: Point) -> [Point; 4] {
        let [s, t] = self.to_reference(p);
        let (gx, gy) = (2.0 / self.hx, 2.0 / self.hy);
        [[0.0, 0.0], [gx, 0.0], [0.0, gy], [2.0 * s * gx, -2.0 * t * gy]]
    }

    pub fn value(&self, c: &Coeffs, p: Point) -> f64 {
        let m = self.monomials(p);
        c[0] * m[0] + c[1] * m[1] + c[2] * m[2] + c[3] * m[3]
    }

    pub fn gradient(&self, c: &Coeffs, p: Point) -> Point {
        let [s, t] = self.to_reference(p);
        [
            (c[1] + 2.0 * c[3] * s) * 2.0 / self.hx,
            (c[2] - 2.0 * c[3] * t) * 2.0 / self.hy,
        ]
    }
}

/// Edge averages of the monomials on the reference square, rows `[bottom, right, top, left]`.
pub fn reference_dof_matrix() -> [[f64; 4]; 4] {
    // average of s² over an edge is 1/3
    [
        [1.0, 0.0, -1.0, 1.0 / 3.0 - 1.0],
        [1.0, 1.0, 0.0, 1.0 - 1.0 / 3.0],
        [1.0, 0.0, 1.0, 1.0 / 3.0 - 1.0],
        [1.0, -1.0, 0.0, 1.0 - 1.0 / 3.0],
    ]
}

/// The four standard shape functions, dual to the edge averages.
#[derive(Clone, Debug, PartialEq)]
pub struct RotatedQ1Basis {
    /// `coeffs[i]` are the coefficients of the function attached to local edge `i`.
    pub coeffs: [Coeffs; 4],
}

pub fn reference_basis() -> &'static RotatedQ1Basis {
    static BASIS: OnceLock<RotatedQ1Basis> = OnceLock::new();
    BASIS.get_or_init(|| {
        let d = reference_dof_matrix();
        let flat: Vec<f64> = d.iter().flatten().copied().collect();
        let inv = DenseLu::factor(4, &flat).expect("rotated Q1 dofs are unisolvent").inverse();
        let mut coeffs = [[0.0; 4]; 4];
        for (i, c) in coeffs.iter_mut().enumerate() {
            for m in 0..4 {
                c[m] = inv[m * 4 + i];
            }
        }
        RotatedQ1Basis { coeffs }
    })
}
