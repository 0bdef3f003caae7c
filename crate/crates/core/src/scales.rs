//! Characteristic scales and conversion to and from the dimensionless system.
//!
//! Every solver works in dimensionless units built from four independent
//! values: the macroscopic length `L`, the cell size `d`, the fluid viscosity
//! `mu_c` and a force `f_c`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scale separation above which the two-scale expansion is considered unreliable.
pub const MAX_SEPARATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales {
    /// Macroscopic length (m).
    #[serde(rename = "L")]
    pub l: f64,
    /// Cell length (m).
    pub d: f64,
    /// Dynamic viscosity (Pa s).
    pub mu_c: f64,
    /// Force (N).
    pub f_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub velocity_scale: f64,
    pub time_scale: f64,
    pub stress_scale: f64,
    pub conductivity_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Length,
    Displacement,
    Stress,
    Modulus,
    Pressure,
    Time,
    Velocity,
    Conductivity,
    Viscosity,
    Force,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Length,
        Kind::Displacement,
        Kind::Stress,
        Kind::Modulus,
        Kind::Pressure,
        Kind::Time,
        Kind::Velocity,
        Kind::Conductivity,
        Kind::Viscosity,
        Kind::Force,
    ];
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "length" => Kind::Length,
            "displacement" => Kind::Displacement,
            "stress" => Kind::Stress,
            "modulus" => Kind::Modulus,
            "pressure" => Kind::Pressure,
            "time" => Kind::Time,
            "velocity" => Kind::Velocity,
            "conductivity" => Kind::Conductivity,
            "viscosity" => Kind::Viscosity,
            "force" => Kind::Force,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown quantity kind '{other}'"
                )))
            }
        })
    }
}

impl CharacteristicScales {
    pub fn new(l: f64, d: f64, mu_c: f64, f_c: f64) -> Result<Self> {
        let cs = CharacteristicScales { l, d, mu_c, f_c };
        cs.validate()?;
        Ok(cs)
    }

    /// Identity scales, used when inputs are already dimensionless.
    pub fn unit() -> Self {
        CharacteristicScales {
            l: 1.0,
            d: 1.0,
            mu_c: 1.0,
            f_c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("L", self.l),
            ("d", self.d),
            ("mu_c", self.mu_c),
            ("f_c", self.f_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "characteristic scale {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.separation() >= MAX_SEPARATION {
            log::warn!(
                "scale separation d/L = {:.3e} is not small; homogenised model may be inaccurate",
                self.separation()
            );
        }
        Ok(())
    }

    /// `d / L`.
    pub fn separation(&self) -> f64 {
        self.d / self.l
    }

    /// Scale of one quantity kind.
    pub fn scale_of(&self, kind: Kind) -> f64 {
        let ds = derive_unchecked(self);
        match kind {
            Kind::Length | Kind::Displacement => self.l,
            Kind::Stress | Kind::Modulus | Kind::Pressure => ds.stress_scale,
            Kind::Time => ds.time_scale,
            Kind::Velocity => ds.velocity_scale,
            Kind::Conductivity => ds.conductivity_scale,
            Kind::Viscosity => self.mu_c,
            Kind::Force => self.f_c,
        }
    }
}

fn derive_unchecked(cs: &CharacteristicScales) -> DerivedScales {
    let d2 = cs.d * cs.d;
    let l3 = cs.l * cs.l * cs.l;
    DerivedScales {
        velocity_scale: cs.f_c * d2 / (l3 * cs.mu_c),
        time_scale: l3 * cs.l * cs.mu_c / (cs.f_c * d2),
        stress_scale: cs.f_c / (cs.l * cs.l),
        conductivity_scale: d2 / cs.mu_c,
    }
}

pub fn derive_scales(cs: &CharacteristicScales) -> Result<DerivedScales> {
    cs.validate()?;
    Ok(derive_unchecked(cs))
}

pub fn to_dimensionless(value: f64, kind: Kind, cs: &CharacteristicScales) -> f64 {
    value / cs.scale_of(kind)
}

pub fn from_dimensionless(value: f64, kind: Kind, cs: &CharacteristicScales) -> f64 {
    value * cs.scale_of(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brain() -> CharacteristicScales {
        CharacteristicScales::new(1e-3, 20e-6, 1e-3, 1e-3).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unit_scales_are_identity() {
        let ds = derive_scales(&CharacteristicScales::unit()).unwrap();
        assert_eq!(ds.velocity_scale, 1.0);
        assert_eq!(ds.time_scale, 1.0);
        assert_eq!(ds.stress_scale, 1.0);
        assert_eq!(ds.conductivity_scale, 1.0);
    }

    #[test]
    fn brain_stress_and_time_scales() {
        let ds = derive_scales(&brain()).unwrap();
        assert!(rel(ds.stress_scale, 1e3) < 1e-12);
        // 1e-12 * 1e-3 / (1e-3 * 4e-10)
        assert!(rel(ds.time_scale, 2.5e-3) < 1e-12);
    }

    #[test]
    fn velocity_times_time_is_length() {
        let cs = brain();
        let ds = derive_scales(&cs).unwrap();
        assert!(rel(ds.velocity_scale * ds.time_scale, cs.l) < 1e-12);
    }

    #[test]
    fn moduli_to_dimensionless() {
        // L = 1 m, f_c = 1e6 N gives a 1 MPa stress scale.
        let soil = CharacteristicScales::new(1.0, 1e-4, 1e-3, 1e6).unwrap();
        assert!(rel(to_dimensionless(15e6, Kind::Modulus, &soil), 15.0) < 1e-12);
        assert!(rel(to_dimensionless(13.5e3, Kind::Modulus, &brain()), 13.5) < 1e-12);
        assert_eq!(to_dimensionless(0.0, Kind::Time, &brain()), 0.0);
    }

    #[test]
    fn rejects_non_positive_scales() {
        assert!(CharacteristicScales::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(CharacteristicScales::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(CharacteristicScales::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!("temperature".parse::<Kind>().is_err());
        assert_eq!("pressure".parse::<Kind>().unwrap(), Kind::Pressure);
    }

    proptest! {
        #[test]
        fn round_trip_every_kind(
            v in -1e9f64..1e9,
            l in 1e-4f64..1e2, d in 1e-7f64..1e-3, mu in 1e-4f64..1e1, f in 1e-6f64..1e9,
        ) {
            let cs = CharacteristicScales { l, d, mu_c: mu, f_c: f };
            for kind in Kind::ALL {
                let back = from_dimensionless(to_dimensionless(v, kind, &cs), kind, &cs);
                prop_assert!((back - v).abs() <= 4.0 * f64::EPSILON * v.abs());
            }
        }

        #[test]
        fn conversion_is_linear(a in -1e6f64..1e6, b in -1e6f64..1e6, s in -10.0f64..10.0) {
            let cs = brain();
            for kind in Kind::ALL {
                let lhs = to_dimensionless(a + s * b, kind, &cs);
                let rhs = to_dimensionless(a, kind, &cs) + s * to_dimensionless(b, kind, &cs);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs() + 1.0));
            }
        }
    }
}
