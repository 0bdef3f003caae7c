//! Uniaxial-stress check of the incremental remodelling procedure against the
//! closed-form neo-Hookean response.

use std::io::Write;

use serde::Serialize;

use crate::remodel::{NeoHookeanParams, Tangent3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniaxialRecord {
    pub stretch: f64,
    pub nominal_stress: f64,
    /// Uniaxial tangent modulus used for the increment ending here.
    pub e_t: f64,
    pub nu_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniaxialRun {
    pub n: usize,
    pub target_stretch: f64,
    /// Starts at the undeformed state.
    pub records: Vec<UniaxialRecord>,
}

impl UniaxialRun {
    pub fn final_stress(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.nominal_stress)
    }
}

/// Tangent moduli for uniaxial stress with equal free lateral directions:
/// `E_t = C1111 - 2 C1122^2 / (C2222 + C2233)`, `nu_t = C1122 / (C2222 + C2233)`.
pub fn uniaxial_tangent(t: &Tangent3) -> Result<(f64, f64)> {
    let t = &t.0;
    let lat = t[1][1][1][1] + t[1][1][2][2];
    if !(lat > 0.0) {
        return Err(Error::Indefinite(format!("lateral stiffness {lat} <= 0")));
    }
    let e_t = t[0][0][0][0] - 2.0 * t[0][0][1][1] * t[0][0][1][1] / lat;
    if !(e_t > 0.0) {
        return Err(Error::Indefinite(format!("uniaxial tangent {e_t} <= 0")));
    }
    Ok((e_t, t[0][0][1][1] / lat))
}

fn check_target(target_stretch: f64) -> Result<()> {
    if !(0.5..=2.0).contains(&target_stretch) {
        return Err(Error::InvalidInput(format!(
            "target stretch {target_stretch} outside [0.5, 2]"
        )));
    }
    Ok(())
}

/// `N` equal stretch increments, each a linear uniaxial-stress step with the
/// tangent at the start of the step. The first increment is the linear
/// elastic line with the initial tangent.
pub fn incremental_uniaxial(
    params: &NeoHookeanParams,
    target_stretch: f64,
    n: usize,
) -> Result<UniaxialRun> {
    check_target(target_stretch)?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "increment count must be at least 1".into(),
        ));
    }
    let d_lambda = (target_stretch - 1.0) / n as f64;
    let (mut lambda, mut lateral, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
    let mut records = Vec::with_capacity(n + 1);
    records.push(UniaxialRecord {
        stretch: 1.0,
        nominal_stress: 0.0,
        e_t: f64::NAN,
        nu_t: f64::NAN,
    });
    for step in 1..=n {
        let l2 = lateral * lateral;
        let c = [[lambda * lambda, 0.0, 0.0], [0.0, l2, 0.0], [0.0, 0.0, l2]];
        let (e_t, nu_t) = uniaxial_tangent(&params.tangent(&c)?)?;
        let s11 = p / lambda;
        p += (s11 + lambda * lambda * e_t) * d_lambda;
        let next = 1.0 + step as f64 * d_lambda;
        let d_e11 = 0.5 * (next * next - lambda * lambda);
        let e22 = 0.5 * (l2 - 1.0) - nu_t * d_e11;
        if !(1.0 + 2.0 * e22 > 0.0) {
            return Err(Error::Indefinite(format!(
                "lateral stretch collapsed at step {step}"
            )));
        }
        lateral = (1.0 + 2.0 * e22).sqrt();
        lambda = next;
        records.push(UniaxialRecord {
            stretch: lambda,
            nominal_stress: p,
            e_t,
            nu_t,
        });
    }
    Ok(UniaxialRun {
        n,
        target_stretch,
        records,
    })
}

/// Lateral stretch with zero transverse stress at axial stretch `lambda`.
pub fn lateral_stretch(params: &NeoHookeanParams, lambda: f64) -> Result<f64> {
    // lambda_t^2 S22 = 2 C10 (lambda_t^2 - 1) + (2/D1) ln(lambda lambda_t^2), increasing in lambda_t
    let g =
        |lt: f64| 2.0 * params.c10 * (lt * lt - 1.0) + 2.0 / params.d1 * (lambda * lt * lt).ln();
    let (mut lo, mut hi) = (1e-6, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Solver("lateral stretch not bracketed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Total-Lagrangian nominal stress `P11 = lambda S11` in uniaxial stress.
pub fn oracle_nominal_stress(params: &NeoHookeanParams, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "stretch must be positive, got {lambda}"
        )));
    }
    let lt = lateral_stretch(params, lambda)?;
    let c = [
        [lambda * lambda, 0.0, 0.0],
        [0.0, lt * lt, 0.0],
        [0.0, 0.0, lt * lt],
    ];
    Ok(lambda * params.pk2(&c)?[0][0])
}

pub const CSV_HEADER: &str = "N,stretch,nominal_stress";

pub fn write_csv<W: Write>(mut out: W, runs: &[UniaxialRun]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for run in runs {
        for r in &run.records {
            writeln!(
                out,
                "{},{:.10e},{:.10e}",
                run.n, r.stretch, r.nominal_stress
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> NeoHookeanParams {
        NeoHookeanParams::from_moduli(15.0, 0.3).unwrap()
    }

    #[test]
    fn oracle_value_at_thirty_percent() {
        let p = oracle_nominal_stress(&params(), 1.3).unwrap();
        assert!((p - 3.8101).abs() < 1e-4, "{p}");
        assert!(oracle_nominal_stress(&params(), 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_increment_is_initial_tangent_line() {
        let run = incremental_uniaxial(&params(), 1.3, 1).unwrap();
        let e0 = run.records[1].e_t;
        assert!((e0 - 15.49).abs() < 5e-3);
        assert!((run.final_stress() - e0 * 0.3).abs() < 1e-12);
        assert_eq!(run.records.len(), 2);
    }

    #[test]
    fn increments_converge_to_oracle() {
        let exact = oracle_nominal_stress(&params(), 1.3).unwrap();
        let line = incremental_uniaxial(&params(), 1.3, 1)
            .unwrap()
            .final_stress();
        let mut prev_err = (line - exact).abs();
        let mut prev = line;
        for n in [10, 100, 1000] {
            let p = incremental_uniaxial(&params(), 1.3, n)
                .unwrap()
                .final_stress();
            let err = (p - exact).abs();
            // between the linear line and the oracle, and moving toward it
            assert!(p < prev && p > exact, "N={n}: {p}");
            assert!(
                err <= 1.05 * prev_err / if n == 10 { 1.0 } else { 10.0 },
                "N={n}: {err} vs {prev_err}"
            );
            prev_err = err;
            prev = p;
        }
        assert!(prev_err / exact < 0.01);
    }

    #[test]
    fn compression_path_also_converges() {
        let exact = oracle_nominal_stress(&params(), 0.8).unwrap();
        let p = incremental_uniaxial(&params(), 0.8, 1000)
            .unwrap()
            .final_stress();
        assert!(exact < 0.0 && ((p - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(incremental_uniaxial(&params(), 2.5, 10).is_err());
        assert!(incremental_uniaxial(&params(), 1.3, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let run = incremental_uniaxial(&params(), 1.1, 2).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[run]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,1.1"));
    }
}
