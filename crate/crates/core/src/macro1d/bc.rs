use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar load history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant {
        value: f64,
    },
    /// Linear from 0 at `t = 0` to `value` at `duration`, then held.
    Ramp {
        value: f64,
        duration: f64,
    },
    /// Periodic triangle between 0 and `max`, peaking at mid-period.
    Triangle {
        max: f64,
        period: f64,
    },
}

impl TimeFunction {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::Ramp { value, duration } => {
                if t >= duration {
                    value
                } else {
                    value * (t / duration).max(0.0)
                }
            }
            TimeFunction::Triangle { max, period } => {
                let s = (t / period).rem_euclid(1.0);
                max * (1.0 - (2.0 * s - 1.0).abs())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TimeFunction::Ramp { duration, .. } if !(duration > 0.0) => Err(Error::InvalidInput(
                format!("ramp duration must be positive, got {duration}"),
            )),
            TimeFunction::Triangle { period, .. } if !(period > 0.0) => Err(Error::InvalidInput(
                format!("triangle period must be positive, got {period}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanical {
    Displacement(TimeFunction),
    /// Axial traction `sigma n` with outward normal `n`; compression is negative.
    Traction(TimeFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hydraulic {
    Pressure(TimeFunction),
    Impermeable,
    /// Outflow `K (p - env) / dx`.
    FreeDrainage {
        dx: f64,
        env: f64,
    },
}

/// One mechanical and one hydraulic condition for a column end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCondition {
    pub mechanical: Mechanical,
    pub hydraulic: Hydraulic,
}

impl EndCondition {
    pub fn new(mechanical: Mechanical, hydraulic: Hydraulic) -> Self {
        EndCondition {
            mechanical,
            hydraulic,
        }
    }

    /// Fixed at zero displacement and impermeable.
    pub fn fixed_impermeable() -> Self {
        EndCondition::new(
            Mechanical::Displacement(TimeFunction::Constant { value: 0.0 }),
            Hydraulic::Impermeable,
        )
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match &self.mechanical {
            Mechanical::Displacement(f) | Mechanical::Traction(f) => f.validate()?,
        }
        match self.hydraulic {
            Hydraulic::Pressure(f) => f.validate(),
            Hydraulic::FreeDrainage { dx, .. } if !(dx > 0.0) => Err(Error::InvalidInput(format!(
                "drainage length must be positive, got {dx}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Outflow through a free-drainage face.
pub fn free_drainage_flux(k11: f64, p_surface: f64, env: f64, dx: f64) -> f64 {
    k11 * (p_surface - env) / dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_examples() {
        assert_eq!(free_drainage_flux(2.0, 1.5, 1.5, 0.1), 0.0);
        let a = free_drainage_flux(2.0, 3.0, 1.0, 0.1);
        let b = free_drainage_flux(2.0, 3.0, 1.0, 0.2);
        assert!((a - 2.0 * b).abs() < 1e-14 && a > 0.0);
    }

    #[test]
    fn time_functions() {
        let r = TimeFunction::Ramp {
            value: 3.0,
            duration: 2.0,
        };
        assert_eq!(
            (r.at(0.0), r.at(1.0), r.at(2.0), r.at(5.0)),
            (0.0, 1.5, 3.0, 3.0)
        );
        let t = TimeFunction::Triangle {
            max: 2.0,
            period: 4.0,
        };
        assert_eq!(
            (
                t.at(0.0),
                t.at(1.0),
                t.at(2.0),
                t.at(3.0),
                t.at(4.0),
                t.at(6.0)
            ),
            (0.0, 1.0, 2.0, 1.0, 0.0, 2.0)
        );
        assert!(EndCondition::new(
            Mechanical::Traction(r),
            Hydraulic::FreeDrainage { dx: 0.0, env: 0.0 }
        )
        .validate()
        .is_err());
    }

    #[test]
    fn conditions_parse_from_toml() {
        let e: EndCondition = toml::from_str(
            "mechanical = { traction = { kind = \"ramp\", value = -3.0, duration = 0.1 } }\n\
             hydraulic = { free_drainage = { dx = 0.01, env = 0.0 } }",
        )
        .unwrap();
        assert_eq!(e.hydraulic, Hydraulic::FreeDrainage { dx: 0.01, env: 0.0 });
        assert_eq!(
            e.mechanical,
            Mechanical::Traction(TimeFunction::Ramp {
                value: -3.0,
                duration: 0.1
            })
        );
    }
}
