//! Quadrature rules on segments, rectangles and triangles, plus per-element rules that
//! follow the sub-triangulation of cut elements.

use crate::mesh::{triangle_area, Grid, Interface, Point, Side};

const GAUSS3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

// 6-point rule exact for degree 4: (barycentric a, weight) for the two orbits of (a, a, 1 - 2a)
const TRI6: [(f64, f64); 2] = [
    (0.445_948_490_915_965, 0.223_381_589_678_011),
    (0.091_576_213_509_771, 0.109_951_743_655_322),
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn extend(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// 3-point Gauss rule on the segment `[a, b]`, weights scaled by its length.
pub fn segment_rule(a: Point, b: Point) -> QuadratureRule {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let mut rule = QuadratureRule::default();
    for k in 0..3 {
        let t = 0.5 * (1.0 + GAUSS3_X[k]);
        rule.points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        rule.weights.push(0.5 * len * GAUSS3_W[k]);
    }
    rule
}

/// Tensor 3x3 Gauss rule on an axis-aligned rectangle.
pub fn rectangle_rule(lo: Point, hi: Point) -> QuadratureRule {
    let (hx, hy) = (hi[0] - lo[0], hi[1] - lo[1]);
    let mut rule = QuadratureRule::default();
    for j in 0..3 {
        for i in 0..3 {
            rule.points.push([
                lo[0] + 0.5 * hx * (1.0 + GAUSS3_X[i]),
                lo[1] + 0.5 * hy * (1.0 + GAUSS3_X[j]),
            ]);
            rule.weights.push(0.25 * hx * hy * GAUSS3_W[i] * GAUSS3_W[j]);
        }
    }
    rule
}

/// Degree-4 six-point rule on a triangle.
pub fn triangle_rule(t: &[Point; 3]) -> QuadratureRule {
    let area = triangle_area(t).abs();
    let mut rule = QuadratureRule::default();
    for &(a, w) in &TRI6 {
        let b = 1.0 - 2.0 * a;
        for bary in [[a, a, b], [a, b, a], [b, a, a]] {
            rule.points.push([
                bary[0] * t[0][0] + bary[1] * t[1][0] + bary[2] * t[2][0],
                bary[0] * t[0][1] + bary[1] * t[1][1] + bary[2] * t[2][1],
            ]);
            rule.weights.push(w * area);
        }
    }
    rule
}

/// Quadrature over one element with each point tagged by its discrete side.
#[derive(Clone, Debug, Default)]
pub struct ElementQuadrature {
    pub rule: QuadratureRule,
    pub sides: Vec<Side>,
}

impl ElementQuadrature {
    pub fn new(grid: &Grid, interface: &Interface, e: usize) -> Self {
        match interface.cut(e) {
            None => {
                let c = grid.element_corners(e);
                let rule = rectangle_rule(c[0], c[2]);
                let side = interface.element_side(e).unwrap();
                let sides = vec![side; rule.points.len()];
                ElementQuadrature { rule, sides }
            }
            Some(cut) => {
                let mut rule = QuadratureRule::default();
                let mut sides = Vec::new();
                for side in [Side::Plus, Side::Minus] {
                    for tri in cut.triangles(side) {
                        let sub = triangle_rule(tri);
                        sides.extend(std::iter::repeat_n(side, sub.points.len()));
                        rule.extend(sub);
                    }
                }
                ElementQuadrature { rule, sides }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64, Side)> + '_ {
        self.rule
            .points
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.sides)
            .map(|((&p, &w), &s)| (p, w, s))
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }
}
