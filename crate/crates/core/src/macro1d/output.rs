use std::io::Write;

use super::{Column, MacroState};

pub const NODAL_HEADER: &str = "t,node,x,u,p";
pub const POINT_HEADER: &str = "t,qp,x,phi,E,nu,C11_eff,alpha,M_biot,K11";

/// Writes the header when `header` is set, then one row per element vertex.
pub fn write_nodal_csv<W: Write>(
    out: &mut W,
    column: &Column,
    state: &MacroState,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{NODAL_HEADER}")?;
    }
    for (i, x) in column.vertices.iter().enumerate() {
        writeln!(
            out,
            "{:.10e},{i},{x:.10e},{:.10e},{:.10e}",
            state.t,
            state.u[2 * i],
            state.p[i]
        )?;
    }
    Ok(())
}

pub fn write_point_csv<W: Write>(
    out: &mut W,
    state: &MacroState,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{POINT_HEADER}")?;
    }
    for (i, q) in state.points.iter().enumerate() {
        let m = &q.material;
        writeln!(
            out,
            "{:.10e},{i},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            state.t, q.x, m.phi, m.e, m.nu, m.eff.c.c11, m.eff.alpha, m.eff.biot_modulus, m.eff.k11
        )?;
    }
    Ok(())
}
