//! Discrete fields: edge-average pressures and nodal saturations.

use crate::mesh::{Grid, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofMarker {
    Free,
    Dirichlet,
}

/// One value per edge (edge averages of the nonconforming pressure).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeScalarField {
    pub values: Vec<f64>,
    pub markers: Vec<DofMarker>,
    /// `values - offset` as solved, kept separately so large constant levels do not eat precision.
    pub(crate) deviation: Vec<f64>,
    pub(crate) offset: f64,
    /// Identifies the pressure operator the field was solved with.
    pub(crate) operator: u64,
}

impl EdgeScalarField {
    pub fn new(values: Vec<f64>, markers: Vec<DofMarker>) -> Self {
        EdgeScalarField {
            deviation: values.clone(),
            values,
            markers,
            offset: 0.0,
            operator: 0,
        }
    }

    pub fn operator_token(&self) -> u64 {
        self.operator
    }

    /// Local DOFs of element `e`, ordered `[bottom, right, top, left]`.
    pub fn local(&self, grid: &Grid, e: usize) -> [f64; 4] {
        grid.element_edges(e).map(|k| self.values[k])
    }

    /// Local DOFs minus the field's constant offset.
    pub fn local_deviation(&self, grid: &Grid, e: usize) -> [f64; 4] {
        grid.element_edges(e).map(|k| self.deviation[k])
    }
}

/// Nodal values of a bilinear (Q1-conforming) function.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexScalarField {
    pub values: Vec<f64>,
    pub markers: Vec<DofMarker>,
}

impl VertexScalarField {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        VertexScalarField {
            values: vec![value; grid.n_vertices()],
            markers: vec![DofMarker::Free; grid.n_vertices()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        VertexScalarField {
            values: (0..grid.n_vertices()).map(|v| f(grid.vertex(v))).collect(),
            markers: vec![DofMarker::Free; grid.n_vertices()],
        }
    }

    /// Marks every boundary vertex as Dirichlet.
    pub fn with_dirichlet_boundary(mut self, grid: &Grid) -> Self {
        for v in 0..grid.n_vertices() {
            if grid.is_boundary_vertex(v) {
                self.markers[v] = DofMarker::Dirichlet;
            }
        }
        self
    }

    /// Bilinear interpolant and its gradient at a point of element `e`.
    pub fn eval(&self, grid: &Grid, e: usize, p: Point) -> (f64, Point) {
        let [a, b, c, d] = grid.element_vertices(e).map(|v| self.values[v]);
        let o = grid.vertex(grid.element_vertices(e)[0]);
        let (hx, hy) = (grid.hx(), grid.hy());
        let s = (p[0] - o[0]) / hx;
        let t = (p[1] - o[1]) / hy;
        let value = a * (1.0 - s) * (1.0 - t) + b * s * (1.0 - t) + c * s * t + d * (1.0 - s) * t;
        let gx = ((b - a) * (1.0 - t) + (c - d) * t) / hx;
        let gy = ((d - a) * (1.0 - s) + (c - b) * s) / hy;
        (value, [gx, gy])
    }

    pub fn value_at(&self, grid: &Grid, e: usize, p: Point) -> f64 {
        self.eval(grid, e, p).0
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}
