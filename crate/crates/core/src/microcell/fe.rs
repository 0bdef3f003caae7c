//! Quadratic triangle kinematics and periodic degree-of-freedom numbering.

use super::mesh::{CellMesh, Phase, Triangle};

/// Edge-midpoint rule, exact for quadratics. Barycentric points.
pub const QUAD_POINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Geometry of one affine triangle with P2 node ids on the refined periodic grid.
/// Local node order: three vertices, then midpoints of edges 01, 12, 20.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
    pub nodes: [usize; 6],
}

impl Element {
    pub fn new(mesh: &CellMesh, t: &Triangle) -> Self {
        let n2 = 2 * mesh.n();
        let p = t.v.map(|v| mesh.vertex(v));
        let det =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let inv = 1.0 / det;
        let grad_l = [
            [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
            [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
            [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
        ];
        let id = |i: usize, j: usize| (i % n2) + (j % n2) * n2;
        let v = t.v;
        let mid = |a: usize, b: usize| id(v[a].0 + v[b].0, v[a].1 + v[b].1);
        let nodes = [
            id(2 * v[0].0, 2 * v[0].1),
            id(2 * v[1].0, 2 * v[1].1),
            id(2 * v[2].0, 2 * v[2].1),
            mid(0, 1),
            mid(1, 2),
            mid(2, 0),
        ];
        Element {
            area: 0.5 * det,
            grad_l,
            nodes,
        }
    }

    /// Quadratic shape function values at barycentric point `l`.
    pub fn shape_p2(l: &[f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    /// Quadratic shape function gradients at barycentric point `l`.
    pub fn grad_p2(&self, l: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_l;
        let mut out = [[0.0; 2]; 6];
        for k in 0..2 {
            out[0][k] = (4.0 * l[0] - 1.0) * g[0][k];
            out[1][k] = (4.0 * l[1] - 1.0) * g[1][k];
            out[2][k] = (4.0 * l[2] - 1.0) * g[2][k];
            out[3][k] = 4.0 * (l[0] * g[1][k] + l[1] * g[0][k]);
            out[4][k] = 4.0 * (l[1] * g[2][k] + l[2] * g[1][k]);
            out[5][k] = 4.0 * (l[2] * g[0][k] + l[0] * g[2][k]);
        }
        out
    }

    pub fn weight(&self) -> f64 {
        self.area / 3.0
    }
}

/// Maps refined periodic grid nodes to equation numbers.
#[derive(Debug, Clone)]
pub struct Numbering {
    map: Vec<usize>,
    count: usize,
}

impl Numbering {
    pub const NONE: usize = usize::MAX;

    /// Numbers the nodes used by triangles of `phase`. `p1` restricts to
    /// vertices; `exclude` flags nodes carrying a homogeneous Dirichlet value.
    pub fn new(mesh: &CellMesh, phase: Phase, p1: bool, exclude: Option<&[bool]>) -> Self {
        let n2 = 2 * mesh.n();
        let mut map = vec![Self::NONE; n2 * n2];
        let mut count = 0;
        let upto = if p1 { 3 } else { 6 };
        for t in mesh.triangles.iter().filter(|t| t.phase == phase) {
            let e = Element::new(mesh, t);
            for &node in &e.nodes[..upto] {
                if map[node] == Self::NONE && !exclude.is_some_and(|x| x[node]) {
                    map[node] = count;
                    count += 1;
                }
            }
        }
        Numbering { map, count }
    }

    #[inline]
    pub fn get(&self, node: usize) -> Option<usize> {
        let k = self.map[node];
        (k != Self::NONE).then_some(k)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Refined-grid nodes lying on the solid/fluid interface.
pub fn interface_nodes(mesh: &CellMesh) -> Vec<bool> {
    let n2 = 2 * mesh.n();
    let id = |i: usize, j: usize| (i % n2) + (j % n2) * n2;
    let mut on = vec![false; n2 * n2];
    for e in &mesh.interface {
        let (a, b) = (e[0], e[1]);
        on[id(2 * a.0, 2 * a.1)] = true;
        on[id(2 * b.0, 2 * b.1)] = true;
        on[id(a.0 + b.0, a.1 + b.1)] = true;
    }
    on
}
