//! Bilinear quadrilateral finite elements with 2x2 Gauss quadrature.
//!
//! The conductivity bilinear form `∫ ∇φ_i · (k̂ ∇φ_j) dΩ` is assembled with a
//! tensor evaluated pointwise at quadrature points, so a nonsymmetric `k̂`
//! yields a nonsymmetric matrix. Dirichlet data is homogeneous and removed by
//! row/column elimination.

use crate::error::{Error, Result};
use crate::material::{
    effective_tensor_unchecked, ConductivityTensor, DesignFields, DesignPoint, MaterialParams,
};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, FactoredMatrix};

/// One value per mesh node.
pub type ScalarField = Vec<f64>;

/// Elementwise-constant volumetric heat source.
pub type SourceField = Vec<f64>;

/// Per-element heat flux `q = -k̂ ∇T` at the element center.
pub type FluxField = Vec<[f64; 2]>;

pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
const GAUSS_POINTS: [[f64; 2]; 4] = [
    [-GAUSS, -GAUSS],
    [GAUSS, -GAUSS],
    [GAUSS, GAUSS],
    [-GAUSS, GAUSS],
];
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Geometry and shape data of an element at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub element: usize,
    /// Reference coordinates in `[-1, 1]^2`.
    pub local: [f64; 2],
    /// Physical coordinates.
    pub x: [f64; 2],
    /// Shape function values, ordered like the element's nodes.
    pub shape: [f64; 4],
    /// Physical shape function gradients.
    pub grad: [[f64; 2]; 4],
    /// Quadrature weight times Jacobian determinant.
    pub weight: f64,
}

impl QuadPoint {
    pub fn new(mesh: &Mesh, element: usize, local: [f64; 2], weight: f64) -> Self {
        let p = mesh.element_nodes(element);
        let [r, s] = local;
        let mut shape = [0.0; 4];
        let mut dref = [[0.0; 2]; 4];
        for (k, c) in CORNERS.iter().enumerate() {
            shape[k] = 0.25 * (1.0 + c[0] * r) * (1.0 + c[1] * s);
            dref[k] = [
                0.25 * c[0] * (1.0 + c[1] * s),
                0.25 * c[1] * (1.0 + c[0] * r),
            ];
        }
        let mut jac = [[0.0; 2]; 2];
        let mut x = [0.0; 2];
        for k in 0..4 {
            for a in 0..2 {
                x[a] += shape[k] * p[k][a];
                for b in 0..2 {
                    // jac[a][b] = d x_b / d r_a
                    jac[a][b] += dref[k][a] * p[k][b];
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let grad = dref.map(|d| {
            [
                inv[0][0] * d[0] + inv[0][1] * d[1],
                inv[1][0] * d[0] + inv[1][1] * d[1],
            ]
        });
        Self {
            element,
            local,
            x,
            shape,
            grad,
            weight: weight * det,
        }
    }

    pub fn interpolate(&self, nodes: &[usize; 4], field: &[f64]) -> f64 {
        (0..4).map(|k| self.shape[k] * field[nodes[k]]).sum()
    }

    pub fn gradient(&self, nodes: &[usize; 4], field: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..4 {
            let v = field[nodes[k]];
            g[0] += self.grad[k][0] * v;
            g[1] += self.grad[k][1] * v;
        }
        g
    }
}

/// The four 2x2 Gauss points of element `e`.
pub fn gauss_points(mesh: &Mesh, e: usize) -> [QuadPoint; 4] {
    GAUSS_POINTS.map(|local| QuadPoint::new(mesh, e, local, 1.0))
}

/// Evaluation point at the element center, weight = element area.
pub fn center_point(mesh: &Mesh, e: usize) -> QuadPoint {
    QuadPoint::new(mesh, e, [0.0, 0.0], 4.0)
}

/// Assembles `∫ ∇φ_i · (k̂ ∇φ_j) dΩ` for any tensor field, admissible or not.
pub fn assemble_bilinear_form<F>(mesh: &Mesh, mut tensor_at: F) -> CsrMatrix
where
    F: FnMut(&QuadPoint) -> ConductivityTensor,
{
    let n = mesh.node_count();
    let mut triplets = Vec::with_capacity(16 * mesh.element_count());
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let mut local = [[0.0; 4]; 4];
        for qp in gauss_points(mesh, e) {
            let k = tensor_at(&qp);
            for j in 0..4 {
                let kg = k.apply(qp.grad[j]);
                for i in 0..4 {
                    local[i][j] += qp.weight * (qp.grad[i][0] * kg[0] + qp.grad[i][1] * kg[1]);
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                triplets.push((nodes[i], nodes[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Conductivity stiffness matrix; rejects tensors whose symmetric part is not
/// positive definite.
pub fn assemble_stiffness<F>(mesh: &Mesh, mut tensor_at: F) -> Result<CsrMatrix>
where
    F: FnMut(&QuadPoint) -> ConductivityTensor,
{
    let mut bad: Option<Error> = None;
    let matrix = assemble_bilinear_form(mesh, |qp| {
        let k = tensor_at(qp);
        if bad.is_none() && !k.is_admissible() {
            let s = k.sym();
            bad = Some(Error::InadmissibleTensor {
                element: qp.element,
                trace: s.trace(),
                det: s.det(),
            });
        }
        k
    });
    match bad {
        Some(err) => Err(err),
        None => Ok(matrix),
    }
}

/// Isotropic Laplacian stiffness `∫ ∇φ_i · ∇φ_j dΩ`.
pub fn assemble_laplacian(mesh: &Mesh) -> CsrMatrix {
    assemble_bilinear_form(mesh, |_| ConductivityTensor::isotropic(1.0))
}

/// Consistent mass matrix `∫ φ_i φ_j dΩ`.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.node_count();
    let mut triplets = Vec::with_capacity(16 * mesh.element_count());
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let mut local = [[0.0; 4]; 4];
        for qp in gauss_points(mesh, e) {
            for i in 0..4 {
                for j in 0..4 {
                    local[i][j] += qp.weight * qp.shape[i] * qp.shape[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                triplets.push((nodes[i], nodes[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// `∫ φ_i Q dΩ` for an elementwise-constant source.
pub fn assemble_load(mesh: &Mesh, source: &[f64]) -> Result<Vec<f64>> {
    if source.len() != mesh.element_count() {
        return Err(Error::Size {
            context: "source field length",
            expected: mesh.element_count(),
            actual: source.len(),
        });
    }
    Ok(assemble_load_with(mesh, |qp| source[qp.element]))
}

/// `∫ φ_i f dΩ` with `f` evaluated at quadrature points.
pub fn assemble_load_with<F>(mesh: &Mesh, mut f: F) -> Vec<f64>
where
    F: FnMut(&QuadPoint) -> f64,
{
    let mut load = vec![0.0; mesh.node_count()];
    for (e, nodes) in mesh.elements().iter().enumerate() {
        for qp in gauss_points(mesh, e) {
            let value = f(&qp);
            if value == 0.0 {
                continue;
            }
            for k in 0..4 {
                load[nodes[k]] += qp.weight * qp.shape[k] * value;
            }
        }
    }
    load
}

/// A system reduced to the free (non-Dirichlet) nodes.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Mesh node of each free index.
    pub free_nodes: Vec<usize>,
    pub node_count: usize,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.free_nodes.len()
    }

    /// Scatters a free-node vector into a nodal field, zero on Dirichlet nodes.
    pub fn expand(&self, reduced: &[f64]) -> ScalarField {
        expand(&self.free_nodes, self.node_count, reduced)
    }
}

fn expand(free_nodes: &[usize], node_count: usize, reduced: &[f64]) -> ScalarField {
    let mut full = vec![0.0; node_count];
    for (&node, &v) in free_nodes.iter().zip(reduced) {
        full[node] = v;
    }
    full
}

/// Free-node numbering; errors when the mesh has no Dirichlet edge.
pub fn free_nodes(mesh: &Mesh) -> Result<Vec<usize>> {
    if mesh.dirichlet_edge_count() == 0 {
        return Err(Error::WellPosedness(
            "no Dirichlet boundary edge: the temperature is determined only up to a constant"
                .into(),
        ));
    }
    let mask = mesh.dirichlet_mask();
    Ok((0..mesh.node_count()).filter(|&n| !mask[n]).collect())
}

fn restrict_matrix(matrix: &CsrMatrix, free: &[usize], node_count: usize) -> CsrMatrix {
    let mut map = vec![usize::MAX; node_count];
    for (k, &n) in free.iter().enumerate() {
        map[n] = k;
    }
    let triplets = matrix
        .entries()
        .filter_map(|(i, j, v)| {
            let (ri, rj) = (map[i], map[j]);
            (ri != usize::MAX && rj != usize::MAX).then_some((ri, rj, v))
        })
        .collect();
    CsrMatrix::from_triplets(free.len(), free.len(), triplets)
}

/// Eliminates the rows and columns of Dirichlet nodes (homogeneous data).
pub fn apply_dirichlet(matrix: &CsrMatrix, rhs: &[f64], mesh: &Mesh) -> Result<LinearSystem> {
    let free = free_nodes(mesh)?;
    let node_count = mesh.node_count();
    if matrix.nrows() != node_count || rhs.len() != node_count {
        return Err(Error::Size {
            context: "system size before Dirichlet elimination",
            expected: node_count,
            actual: rhs.len().min(matrix.nrows()),
        });
    }
    Ok(LinearSystem {
        matrix: restrict_matrix(matrix, &free, node_count),
        rhs: free.iter().map(|&n| rhs[n]).collect(),
        free_nodes: free,
        node_count,
    })
}

/// Direct solve with residual verification; returns the full nodal field.
pub fn solve_linear(system: &LinearSystem, tol: f64) -> Result<ScalarField> {
    if system.dim() == 0 {
        return Ok(vec![0.0; system.node_count]);
    }
    let factored = FactoredMatrix::new(system.matrix.clone())?;
    let x = factored.solve(&system.rhs, tol)?;
    Ok(system.expand(&x))
}

/// Reduced stiffness factored once, reused for forward and transposed solves.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    factored: Option<FactoredMatrix>,
    free_nodes: Vec<usize>,
    node_count: usize,
    tol: f64,
}

impl FactoredSystem {
    pub fn new(matrix: &CsrMatrix, mesh: &Mesh, tol: f64) -> Result<Self> {
        let free = free_nodes(mesh)?;
        let reduced = restrict_matrix(matrix, &free, mesh.node_count());
        let factored = if free.is_empty() {
            None
        } else {
            Some(FactoredMatrix::new(reduced)?)
        };
        Ok(Self {
            factored,
            free_nodes: free,
            node_count: mesh.node_count(),
            tol,
        })
    }

    /// Solves `K T = rhs` on the free nodes.
    pub fn solve(&self, rhs: &[f64]) -> Result<ScalarField> {
        self.solve_impl(rhs, false)
    }

    /// Solves `K^T λ = rhs` on the free nodes.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<ScalarField> {
        self.solve_impl(rhs, true)
    }

    fn solve_impl(&self, rhs: &[f64], transpose: bool) -> Result<ScalarField> {
        if rhs.len() != self.node_count {
            return Err(Error::Size {
                context: "nodal right-hand side",
                expected: self.node_count,
                actual: rhs.len(),
            });
        }
        let Some(factored) = &self.factored else {
            return Ok(vec![0.0; self.node_count]);
        };
        let reduced: Vec<f64> = self.free_nodes.iter().map(|&n| rhs[n]).collect();
        let x = if transpose {
            factored.solve_transpose(&reduced, self.tol)?
        } else {
            factored.solve(&reduced, self.tol)?
        };
        Ok(expand(&self.free_nodes, self.node_count, &x))
    }
}

/// Per-element flux `-k̂ ∇T` evaluated at the element center.
pub fn recover_flux<F>(mesh: &Mesh, mut tensor_at: F, temperature: &[f64]) -> FluxField
where
    F: FnMut(&QuadPoint) -> ConductivityTensor,
{
    (0..mesh.element_count())
        .map(|e| {
            let qp = center_point(mesh, e);
            let grad = qp.gradient(&mesh.elements()[e], temperature);
            let q = tensor_at(&qp).apply(grad);
            [-q[0], -q[1]]
        })
        .collect()
}

/// `M + Δt R² K_lap`, the implicit reaction-diffusion operator. No boundary
/// conditions are imposed (design fields obey natural conditions).
pub fn assemble_update_system(mesh: &Mesh, dt: f64, radius: f64) -> Result<CsrMatrix> {
    if !(dt > 0.0) || !(radius >= 0.0) {
        return Err(Error::Config(format!(
            "update system needs dt > 0 and R >= 0, got dt = {dt}, R = {radius}"
        )));
    }
    let mass = assemble_mass(mesh);
    if radius == 0.0 {
        return Ok(mass);
    }
    Ok(mass.add_scaled(dt * radius * radius, &assemble_laplacian(mesh)))
}

/// Heat leaving through Dirichlet nodes, `Σ_D (f - K T)_i`.
pub fn boundary_outflux(matrix: &CsrMatrix, temperature: &[f64], load: &[f64], mesh: &Mesh) -> f64 {
    let kt = matrix.matvec(temperature);
    mesh.dirichlet_mask()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(i, _)| load[i] - kt[i])
        .sum()
}

/// Which Hall field feeds the tensor: `a` (state 1) or `a'` (state 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HallField {
    A,
    APrime,
}

/// Effective tensor field obtained by bilinear interpolation of nodal design
/// fields to the evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct DesignTensorField<'a> {
    pub mesh: &'a Mesh,
    pub design: &'a DesignFields,
    pub params: &'a MaterialParams,
    pub hall: HallField,
}

impl<'a> DesignTensorField<'a> {
    pub fn new(
        mesh: &'a Mesh,
        design: &'a DesignFields,
        params: &'a MaterialParams,
        hall: HallField,
    ) -> Self {
        Self {
            mesh,
            design,
            params,
            hall,
        }
    }

    /// Interpolated design variables, clamped to [-1, 1] against roundoff.
    pub fn design_at(&self, qp: &QuadPoint) -> DesignPoint {
        let nodes = &self.mesh.elements()[qp.element];
        let value = |field: &[f64]| qp.interpolate(nodes, field).clamp(-1.0, 1.0);
        let a = match self.hall {
            HallField::A => &self.design.a,
            HallField::APrime => self
                .design
                .a_prime
                .as_ref()
                .expect("second Hall field requested on a design without one"),
        };
        DesignPoint::new(
            value(&self.design.xi),
            value(&self.design.eta),
            value(&self.design.s),
            value(a),
        )
    }

    pub fn tensor_at(&self, qp: &QuadPoint) -> ConductivityTensor {
        effective_tensor_unchecked(self.design_at(qp), self.params)
    }
}
