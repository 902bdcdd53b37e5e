//! Brooks–Corey constitutive relations (pore-size index 2) for an
//! incompressible wetting/non-wetting pair.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FluidModel {
    /// Wetting viscosity (Pa·s).
    pub mu_w: f64,
    /// Non-wetting viscosity (Pa·s).
    pub mu_n: f64,
    pub porosity: f64,
    /// Densities are carried for completeness; incompressible flow never reads them.
    pub rho_w: f64,
    pub rho_n: f64,
    /// Capillary entry pressure (Pa); zero disables capillarity.
    pub entry_pressure: f64,
    /// Lower clamp applied to the saturation inside the capillary law.
    pub sat_clamp: f64,
}

/// Mobilities and fractional flow at one saturation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobilities {
    pub wetting: f64,
    pub non_wetting: f64,
    pub total: f64,
    pub frac_w: f64,
}

impl Default for FluidModel {
    fn default() -> Self {
        FluidModel {
            mu_w: 1.0,
            mu_n: 1.0,
            porosity: 1.0,
            rho_w: 1000.0,
            rho_n: 1000.0,
            entry_pressure: 0.0,
            sat_clamp: 1e-6,
        }
    }
}

fn clamp01(s: f64) -> f64 {
    s.clamp(0.0, 1.0)
}

pub fn k_rw(s: f64) -> f64 {
    clamp01(s).powi(4)
}

pub fn k_rn(s: f64) -> f64 {
    let s = clamp01(s);
    (1.0 - s).powi(2) * (1.0 - s * s)
}

/// Derivative of `k_rw` (zero outside `[0, 1]`, where the clamp is active).
pub fn dk_rw(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    4.0 * s.powi(3)
}

pub fn dk_rn(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    -2.0 * (1.0 - s) * (1.0 + s - 2.0 * s * s)
}

impl FluidModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_w > 0.0
            && self.mu_n > 0.0
            && self.porosity > 0.0
            && self.porosity <= 1.0
            && self.entry_pressure >= 0.0
            && self.sat_clamp > 0.0
            && self.sat_clamp <= 1e-3;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid fluid parameters {self:?}")))
        }
    }

    pub fn mobilities(&self, s: f64) -> Mobilities {
        let lw = k_rw(s) / self.mu_w;
        let ln = k_rn(s) / self.mu_n;
        let total = lw + ln;
        Mobilities {
            wetting: lw,
            non_wetting: ln,
            total,
            frac_w: lw / total,
        }
    }

    pub fn total_mobility(&self, s: f64) -> f64 {
        self.mobilities(s).total
    }

    pub fn frac_w(&self, s: f64) -> f64 {
        self.mobilities(s).frac_w
    }

    pub fn lambda_n(&self, s: f64) -> f64 {
        k_rn(s) / self.mu_n
    }

    pub fn dtotal_mobility(&self, s: f64) -> f64 {
        dk_rw(s) / self.mu_w + dk_rn(s) / self.mu_n
    }

    pub fn dfrac_w(&self, s: f64) -> f64 {
        let m = self.mobilities(s);
        let dlw = dk_rw(s) / self.mu_w;
        (dlw * m.total - m.wetting * self.dtotal_mobility(s)) / (m.total * m.total)
    }

    fn clamp_capillary(&self, s: f64) -> f64 {
        s.clamp(self.sat_clamp, 1.0)
    }

    pub fn capillary_pressure(&self, s: f64) -> f64 {
        self.entry_pressure / self.clamp_capillary(s).sqrt()
    }

    pub fn dcapillary_pressure(&self, s: f64) -> f64 {
        let s = self.clamp_capillary(s);
        -0.5 * self.entry_pressure * s.powf(-1.5)
    }

    pub fn d2capillary_pressure(&self, s: f64) -> f64 {
        let s = self.clamp_capillary(s);
        0.75 * self.entry_pressure * s.powf(-2.5)
    }

    pub fn has_capillarity(&self) -> bool {
        self.entry_pressure > 0.0
    }

    /// Capillary diffusion coefficient `λ_n f_w p_c'(S)` (multiply by `K ∇S` for the flux).
    pub fn capillary_coefficient(&self, s: f64) -> f64 {
        let m = self.mobilities(s);
        m.non_wetting * m.frac_w * self.dcapillary_pressure(s)
    }

    pub fn dcapillary_coefficient(&self, s: f64) -> f64 {
        let m = self.mobilities(s);
        let dlw = dk_rw(s) / self.mu_w;
        let dln = dk_rn(s) / self.mu_n;
        // λ_n f_w = λ_n λ_w / λ
        let prod = m.non_wetting * m.wetting / m.total;
        let dprod = (dln * m.wetting + m.non_wetting * dlw) / m.total
            - m.non_wetting * m.wetting * (dlw + dln) / (m.total * m.total);
        dprod * self.dcapillary_pressure(s) + prod * self.d2capillary_pressure(s)
    }
}
