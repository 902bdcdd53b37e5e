//! Manufactured two-phase solutions with a material interface.
//!
//! Each case prescribes a pressure and saturation on both sides of the interface; the sources
//! are obtained by applying the pressure and saturation equations analytically.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::VertexScalarField;
use crate::fluid::FluidModel;
use crate::impes::{SimulationConfig, TwoPhaseProblem};
use crate::linalg::SolverSettings;
use crate::mesh::{Grid, LevelSet, Point, Side};
use crate::transport::TransportSettings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// Two straight interfaces `x + y = 1` and `x + y = 3`.
    Ex1,
    /// Circular inclusion.
    Ex2,
    /// Straight interface `x + y = 2` with capillarity, `(K⁺, K⁻) = (0.02, 0.008)`.
    Ex3a,
    /// As `Ex3a` with `(K⁺, K⁻) = (0.1, 0.001)`.
    Ex3b,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Ex1, CaseId::Ex2, CaseId::Ex3a, CaseId::Ex3b];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Ex1 => "ex1",
            CaseId::Ex2 => "ex2",
            CaseId::Ex3a => "ex3a",
            CaseId::Ex3b => "ex3b",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// Value, gradient, Laplacian and time derivative of a field at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Point,
    pub lap: f64,
    pub dt: f64,
}

impl Jet {
    /// `a(t) F(x + y) + c` from `F, F', F''` and `a, a'`.
    fn of_sum(f: [f64; 3], a: f64, da: f64, c: f64) -> Jet {
        Jet {
            value: a * f[0] + c,
            grad: [a * f[1], a * f[1]],
            lap: 2.0 * a * f[2],
            dt: da * f[0],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub id: CaseId,
    pub k_plus: f64,
    pub k_minus: f64,
    pub fluid: FluidModel,
    pub level_set: LevelSet,
    /// Square domain `[x0, x0 + length]²`.
    pub x0: f64,
    pub length: f64,
    pub final_time: f64,
}

impl ManufacturedCase {
    pub fn new(id: CaseId) -> Self {
        let (k_plus, k_minus) = match id {
            CaseId::Ex1 | CaseId::Ex2 => (1.0, 0.001),
            CaseId::Ex3a => (0.02, 0.008),
            CaseId::Ex3b => (0.1, 0.001),
        };
        let level_set = match id {
            CaseId::Ex1 => LevelSet::new(|x, y| (x + y - 1.0) * (x + y - 3.0)),
            CaseId::Ex2 => LevelSet::new(|x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) - 1.0 / 16.0),
            CaseId::Ex3a | CaseId::Ex3b => LevelSet::new(|x, y| 2.0 - x - y),
        };
        let entry_pressure = match id {
            CaseId::Ex3a | CaseId::Ex3b => 1.0,
            _ => 0.0,
        };
        ManufacturedCase {
            id,
            k_plus,
            k_minus,
            fluid: FluidModel {
                entry_pressure,
                ..FluidModel::default()
            },
            level_set,
            x0: 0.0,
            length: FRAC_PI_2,
            final_time: 1.0,
        }
    }

    pub fn build(id: &str) -> Result<Self> {
        Ok(Self::new(id.parse()?))
    }

    /// Time step `16 / n²`.
    pub fn default_dt(n: usize) -> f64 {
        16.0 / (n * n) as f64
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::square(n, self.x0, self.length)
    }

    pub fn side(&self, x: Point) -> Side {
        self.level_set.side(x)
    }

    pub fn permeability(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.k_plus,
            Side::Minus => self.k_minus,
        }
    }

    /// Exact pressure continued smoothly from the given side.
    pub fn pressure_jet(&self, x: Point, t: f64, side: Side) -> Jet {
        let (kp, km) = (self.k_plus, self.k_minus);
        let l = x[0] + x[1];
        let a = 2.0 - t;
        match self.id {
            CaseId::Ex1 => {
                let f = match side {
                    Side::Plus if l < 2.0 => [(l - 1.0) * (l - 2.0) * km, (2.0 * l - 3.0) * km, 2.0 * km],
                    Side::Plus => [
                        -(l - 3.0) * (l - 2.0) * km - 2.0 / 3.0 * kp,
                        -(2.0 * l - 5.0) * km,
                        -2.0 * km,
                    ],
                    Side::Minus => {
                        let m = l - 1.0;
                        [
                            -(m * m * m / 3.0 - m * m + m) * kp,
                            -(m - 1.0).powi(2) * kp,
                            -2.0 * (m - 1.0) * kp,
                        ]
                    }
                };
                Jet::of_sum(f, a, -1.0, 100.0)
            }
            CaseId::Ex2 => {
                let lv = self.level_set.eval(x);
                let lx = [2.0 * (x[0] - 0.5), 2.0 * (x[1] - 0.5)];
                // g = L (x - 1)
                let g = lv * (x[0] - 1.0);
                let gg = [lx[0] * (x[0] - 1.0) + lv, lx[1] * (x[0] - 1.0)];
                let glap = 4.0 * (x[0] - 1.0) + 2.0 * lx[0];
                match side {
                    Side::Plus => {
                        let c = -10.0 * km;
                        Jet {
                            value: c * a * g + 100.0,
                            grad: [c * a * gg[0], c * a * gg[1]],
                            lap: c * a * glap,
                            dt: -c * g,
                        }
                    }
                    Side::Minus => {
                        let c = 10.0 * kp;
                        let e = g.exp();
                        Jet {
                            value: c * a * (1.0 - e) + 100.0,
                            grad: [-c * a * e * gg[0], -c * a * e * gg[1]],
                            lap: -c * a * e * (gg[0] * gg[0] + gg[1] * gg[1] + glap),
                            dt: -c * (1.0 - e),
                        }
                    }
                }
            }
            CaseId::Ex3a | CaseId::Ex3b => {
                let k = match side {
                    Side::Plus => km,
                    Side::Minus => kp,
                };
                let (s, c) = l.sin_cos();
                let f = [
                    -10.0 * (2.0 - l) * c,
                    10.0 * c + 10.0 * (2.0 - l) * s,
                    -20.0 * s + 10.0 * (2.0 - l) * c,
                ];
                Jet::of_sum(f.map(|v| v * k), a, -1.0, 100.0)
            }
        }
    }

    /// Exact saturation continued smoothly from the given side.
    pub fn saturation_jet(&self, x: Point, t: f64, side: Side) -> Jet {
        let l = x[0] + x[1];
        match self.id {
            CaseId::Ex1 => {
                let f = [1.0 - l / 8.0 - l * l / 20.0, -1.0 / 8.0 - l / 10.0, -1.0 / 10.0];
                Jet::of_sum(f, 0.5 + 0.5 * t, 0.5, 0.0)
            }
            CaseId::Ex2 => {
                let a = 0.2 + 0.5 * t;
                let (s, c) = x[0].sin_cos();
                Jet {
                    value: c * a,
                    grad: [-s * a, 0.0],
                    lap: -c * a,
                    dt: 0.5 * c,
                }
            }
            CaseId::Ex3a | CaseId::Ex3b => {
                let (kp, km) = (self.k_plus, self.k_minus);
                let r = [l + 0.25 * (l - 2.0).powi(2), 1.0 + 0.5 * (l - 2.0), 0.5];
                let f = match side {
                    Side::Plus => [1.0 - 4.0 * r[0] * km, -4.0 * r[1] * km, -4.0 * r[2] * km],
                    // shifted so that S and K ∂S/∂n match across x + y = 2
                    Side::Minus => [
                        1.0 - 8.0 * km + 8.0 * kp - 4.0 * r[0] * kp,
                        -4.0 * r[1] * kp,
                        -4.0 * r[2] * kp,
                    ],
                };
                Jet::of_sum(f, 1.0 - 0.5 * t, -0.5, 0.0)
            }
        }
    }

    pub fn pressure(&self, x: Point, t: f64) -> f64 {
        self.pressure_jet(x, t, self.side(x)).value
    }

    pub fn saturation(&self, x: Point, t: f64) -> f64 {
        self.saturation_jet(x, t, self.side(x)).value
    }

    /// Total velocity `-λ(S) K ∇p` from the given side.
    pub fn velocity_on(&self, x: Point, t: f64, side: Side) -> Point {
        let p = self.pressure_jet(x, t, side);
        let s = self.saturation_jet(x, t, side);
        let c = -self.fluid.total_mobility(s.value) * self.permeability(side);
        [c * p.grad[0], c * p.grad[1]]
    }

    pub fn velocity(&self, x: Point, t: f64) -> Point {
        self.velocity_on(x, t, self.side(x))
    }

    /// `(q_w + q_n, q_w)` from the given side, sharing the jets of both fields.
    fn sources_on(&self, x: Point, t: f64, side: Side) -> (f64, f64) {
        let fl = &self.fluid;
        let p = self.pressure_jet(x, t, side);
        let s = self.saturation_jet(x, t, side);
        let k = self.permeability(side);
        let lam = fl.total_mobility(s.value);
        let sp = s.grad[0] * p.grad[0] + s.grad[1] * p.grad[1];
        // q_t = -∇·(λ K ∇p)
        let qt = -k * (fl.dtotal_mobility(s.value) * sp + lam * p.lap);
        // ∇f_w · u with u = -λ K ∇p
        let advective = fl.dfrac_w(s.value) * (-lam * k * sp) + fl.frac_w(s.value) * qt;
        let capillary = if fl.has_capillarity() {
            let grad2 = s.grad[0] * s.grad[0] + s.grad[1] * s.grad[1];
            k * (fl.dcapillary_coefficient(s.value) * grad2 + fl.capillary_coefficient(s.value) * s.lap)
        } else {
            0.0
        };
        (qt, fl.porosity * s.dt + advective + capillary)
    }

    /// `q_w + q_n = -∇·(λ(S) K ∇p)` from the given side.
    pub fn total_source_on(&self, x: Point, t: f64, side: Side) -> f64 {
        self.sources_on(x, t, side).0
    }

    /// `q_w = Φ ∂S/∂t + ∇·(f_w u + λ_n f_w K ∇p_c)` from the given side.
    pub fn wetting_source_on(&self, x: Point, t: f64, side: Side) -> f64 {
        self.sources_on(x, t, side).1
    }

    pub fn total_source(&self, x: Point, t: f64) -> f64 {
        self.total_source_on(x, t, self.side(x))
    }

    pub fn wetting_source(&self, x: Point, t: f64) -> f64 {
        self.wetting_source_on(x, t, self.side(x))
    }

    /// Points on the interface inside the domain together with a unit normal pointing into `Ω⁺`.
    pub fn interface_samples(&self, count: usize) -> Vec<(Point, Point)> {
        let len = self.length;
        let on_line = |c: f64, k: usize, sign: f64| -> Option<(Point, Point)> {
            // points of x + y = c spread along the chord inside the square
            let lo = (c - len).max(0.0);
            let hi = c.min(len);
            if hi <= lo {
                return None;
            }
            let x = lo + (hi - lo) * (k as f64 + 0.5) / count as f64;
            let r = std::f64::consts::FRAC_1_SQRT_2;
            Some(([x, c - x], [sign * r, sign * r]))
        };
        match self.id {
            CaseId::Ex1 => (0..count)
                .flat_map(|k| [on_line(1.0, k, -1.0), on_line(3.0, k, 1.0)])
                .flatten()
                .collect(),
            CaseId::Ex2 => (0..count)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / count as f64;
                    let (s, c) = th.sin_cos();
                    ([0.5 + 0.25 * c, 0.5 + 0.25 * s], [c, s])
                })
                .collect(),
            CaseId::Ex3a | CaseId::Ex3b => (0..count).filter_map(|k| on_line(2.0, k, -1.0)).collect(),
        }
    }

    /// Simulation setup on an `n × n` grid with Dirichlet data on the whole boundary.
    pub fn simulation_config(&self, n: usize, dt: f64, final_time: f64, tol: f64, lumped_mass: bool) -> Result<SimulationConfig> {
        let grid = self.grid(n)?;
        let steps = SimulationConfig::steps_for(final_time, dt)?;
        let initial = VertexScalarField::from_fn(&grid, |x| self.saturation(x, 0.0)).with_dirichlet_boundary(&grid);
        Ok(SimulationConfig {
            grid,
            level_set: self.level_set.clone(),
            k_plus: self.k_plus,
            k_minus: self.k_minus,
            fluid: self.fluid.clone(),
            initial,
            t0: 0.0,
            dt,
            steps,
            pressure_solver: SolverSettings {
                rel_tol: tol,
                ..SolverSettings::default()
            },
            transport: TransportSettings::default(),
            lumped_mass,
        })
    }
}

impl TwoPhaseProblem for ManufacturedCase {
    fn total_source(&self, x: Point, t: f64) -> f64 {
        ManufacturedCase::total_source(self, x, t)
    }
    fn wetting_source(&self, x: Point, t: f64, _s: f64) -> f64 {
        ManufacturedCase::wetting_source(self, x, t)
    }
    fn pressure_dirichlet(&self, x: Point, t: f64) -> f64 {
        self.pressure(x, t)
    }
    fn saturation_dirichlet(&self, x: Point, t: f64) -> f64 {
        self.saturation(x, t)
    }
}
