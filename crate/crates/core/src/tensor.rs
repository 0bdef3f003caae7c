//! Small fixed-size tensors in 2D.
//!
//! Components are tensor components, not Voigt: `Sym2::xy` is `e_12`, and
//! `SquareSym4::c44` is `T_1212`.

use serde::{Deserialize, Serialize};

/// Symmetric second-rank tensor in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        yy: 1.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub fn diag(xx: f64, yy: f64) -> Self {
        Sym2 { xx, yy, xy: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.yy * s, self.xy * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx + self.yy * self.yy + 2.0 * self.xy * self.xy).sqrt()
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }
}

/// Fourth-rank tensor with the square symmetry class, stored as
/// (T_1111 = T_2222, T_1122 = T_2211, T_1212) with full minor symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SquareSym4 {
    pub c11: f64,
    pub c12: f64,
    pub c44: f64,
}

impl SquareSym4 {
    pub const ZERO: SquareSym4 = SquareSym4 {
        c11: 0.0,
        c12: 0.0,
        c44: 0.0,
    };

    pub fn new(c11: f64, c12: f64, c44: f64) -> Self {
        SquareSym4 { c11, c12, c44 }
    }

    /// Isotropic plane-strain stiffness from Lamé constants.
    pub fn isotropic_lame(lambda: f64, mu: f64) -> Self {
        SquareSym4::new(lambda + 2.0 * mu, lambda, mu)
    }

    /// Isotropic plane-strain stiffness from Young's modulus and Poisson ratio.
    pub fn isotropic(e: f64, nu: f64) -> Self {
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        SquareSym4::isotropic_lame(lambda, mu)
    }

    /// `T : e`.
    pub fn apply(&self, e: &Sym2) -> Sym2 {
        Sym2::new(
            self.c11 * e.xx + self.c12 * e.yy,
            self.c12 * e.xx + self.c11 * e.yy,
            2.0 * self.c44 * e.xy,
        )
    }

    /// `self : other`, closed within the symmetry class.
    pub fn compose(&self, o: &SquareSym4) -> SquareSym4 {
        SquareSym4::new(
            self.c11 * o.c11 + self.c12 * o.c12,
            self.c11 * o.c12 + self.c12 * o.c11,
            2.0 * self.c44 * o.c44,
        )
    }

    pub fn add(&self, o: &SquareSym4) -> SquareSym4 {
        SquareSym4::new(self.c11 + o.c11, self.c12 + o.c12, self.c44 + o.c44)
    }

    pub fn scale(&self, s: f64) -> SquareSym4 {
        SquareSym4::new(self.c11 * s, self.c12 * s, self.c44 * s)
    }

    /// Scalar of `T_kkij = tr * delta_ij`.
    pub fn trace_contraction(&self) -> f64 {
        self.c11 + self.c12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.c11 > self.c12.abs() && self.c44 > 0.0
    }
}
