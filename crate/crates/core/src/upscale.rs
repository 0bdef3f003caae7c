//! Effective Biot coefficients from cell-averaged tensors.

use serde::{Deserialize, Serialize};

use crate::microcell::{CellSolution, REFERENCE_E};
use crate::tensor::SquareSym4;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    /// Drained elasticity tensor.
    pub c: SquareSym4,
    /// Isotropic Biot coefficient.
    pub alpha: f64,
    /// Biot modulus.
    pub biot_modulus: f64,
    /// Hydraulic conductivity.
    pub k11: f64,
}

impl EffectiveCoefficients {
    /// Checks positive definiteness, `phi <= alpha <= 1` and positivity of M and K.
    pub fn validate(&self, phi: f64) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::NonPhysical {
                phi,
                nu: f64::NAN,
                reason,
            })
        };
        if !self.c.is_positive_definite() {
            return bad(format!(
                "drained tensor not positive definite: {:?}",
                self.c
            ));
        }
        if !(phi - 1e-12..=1.0 + 1e-12).contains(&self.alpha) {
            return bad(format!("Biot coefficient {} outside [phi, 1]", self.alpha));
        }
        if !(self.biot_modulus > 0.0) || !(self.k11 > 0.0) {
            return bad(format!("M = {}, K = {}", self.biot_modulus, self.k11));
        }
        Ok(())
    }

    /// Uniaxial-strain drained modulus.
    pub fn oedometric(&self) -> f64 {
        self.c.c11
    }

    /// Uniaxial-strain undrained modulus.
    pub fn undrained_oedometric(&self) -> f64 {
        undrained_tensor(self).c11
    }
}

/// `C~ = (1 - phi) C + C:<M>`, `alpha = phi - tr<M>`, `M = -1 / <tr Q>` with
/// `Q` rescaled from the reference modulus to `solid_e`, `K = <W11>`.
pub fn effective_from_cell(
    cell: &CellSolution,
    solid_e: f64,
    solid_nu: f64,
    phi: f64,
) -> Result<EffectiveCoefficients> {
    if !(solid_e > 0.0) {
        return Err(Error::InvalidInput(format!(
            "solid modulus must be positive, got {solid_e}"
        )));
    }
    let c = SquareSym4::isotropic(solid_e, solid_nu);
    let c_tilde = c.scale(1.0 - phi).add(&c.compose(&cell.m));
    let alpha = phi - cell.m.trace_contraction();
    let tr_q = 2.0 * cell.q11 * REFERENCE_E / solid_e;
    if !(tr_q < 0.0) {
        return Err(Error::NonPhysical {
            phi,
            nu: solid_nu,
            reason: format!("<tr Q> = {tr_q} must be negative"),
        });
    }
    Ok(EffectiveCoefficients {
        c: c_tilde,
        alpha,
        biot_modulus: -1.0 / tr_q,
        k11: cell.k11,
    })
}

/// `C~ + M alpha (x) alpha`.
pub fn undrained_tensor(eff: &EffectiveCoefficients) -> SquareSym4 {
    let add = eff.biot_modulus * eff.alpha * eff.alpha;
    SquareSym4::new(eff.c.c11 + add, eff.c.c12 + add, eff.c.c44)
}

/// Isotropic `(E, nu)` from a stiffness pair:
/// `E = (C11 (C11 + C12) - 2 C12^2) / (C11 + C12)`, `nu = C12 / (C11 + C12)`.
pub fn isotropic_moduli(c11: f64, c12: f64) -> Result<(f64, f64)> {
    let s = c11 + c12;
    if s == 0.0 || !s.is_finite() {
        return Err(Error::InvalidInput(format!(
            "C11 + C12 = {s}; moduli undefined"
        )));
    }
    Ok(((c11 * s - 2.0 * c12 * c12) / s, c12 / s))
}
