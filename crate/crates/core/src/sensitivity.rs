//! Discrete adjoint gradients of the objectives with respect to the nodal
//! design fields.
//!
//! For `K(φ) T = f` and `J = lᵀ T` the adjoint `λ` solves `Kᵀ λ = l` and
//!
//! ```text
//! dJ/dφ_n = -λᵀ (∂K/∂φ_n) T
//!         = -Σ_e Σ_q w_q ∇λ · (∂k̂/∂φ N_n(q)) ∇T
//! ```
//!
//! Because `k̂` may be nonsymmetric, the adjoint uses the transposed operator.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness, gauss_points, DesignTensorField, FactoredSystem, HallField, ScalarField,
};
use crate::material::{
    tensor_derivatives, ConductivityTensor, DesignFields, FieldId, MaterialParams,
};
use crate::mesh::Mesh;
use crate::objectives::{adjoint_rhs, evaluate, ObjectiveKind, ObjectiveValue};

/// Nodal gradients, laid out like [`DesignFields`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFields {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub a_prime: Option<Vec<f64>>,
}

impl GradientFields {
    pub fn zeros(nodes: usize, with_a_prime: bool) -> Self {
        Self {
            xi: vec![0.0; nodes],
            eta: vec![0.0; nodes],
            s: vec![0.0; nodes],
            a: vec![0.0; nodes],
            a_prime: with_a_prime.then(|| vec![0.0; nodes]),
        }
    }

    pub fn field(&self, id: FieldId) -> Option<&[f64]> {
        match id {
            FieldId::Xi => Some(&self.xi),
            FieldId::Eta => Some(&self.eta),
            FieldId::S => Some(&self.s),
            FieldId::A => Some(&self.a),
            FieldId::APrime => self.a_prime.as_deref(),
        }
    }

    /// Largest absolute entry over all fields.
    pub fn max_abs(&self) -> f64 {
        FieldId::ALL
            .iter()
            .filter_map(|&id| self.field(id))
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradient contributions of one solved state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGradient {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: Vec<f64>,
    /// With respect to the Hall field this state reads (`a` or `a'`).
    pub hall: Vec<f64>,
}

/// Solves `Kᵀ λ = rhs` with homogeneous Dirichlet data.
pub fn solve_adjoint<F>(mesh: &Mesh, tensor_at: F, rhs: &[f64], tol: f64) -> Result<ScalarField>
where
    F: FnMut(&crate::fem::QuadPoint) -> ConductivityTensor,
{
    let k = assemble_stiffness(mesh, tensor_at)?;
    FactoredSystem::new(&k, mesh, tol)?.solve_transpose(rhs)
}

/// `-Σ w ∇λ · (∂k̂/∂φ N_n) ∇T` for each nodal design value.
pub fn pointwise_gradient(
    mesh: &Mesh,
    temperature: &[f64],
    adjoint: &[f64],
    design: &DesignFields,
    params: &MaterialParams,
    hall: HallField,
) -> Result<StateGradient> {
    let n = mesh.node_count();
    for (context, len) in [
        ("temperature length", temperature.len()),
        ("adjoint length", adjoint.len()),
    ] {
        if len != n {
            return Err(Error::Size {
                context,
                expected: n,
                actual: len,
            });
        }
    }
    design.validate(n)?;
    if hall == HallField::APrime && design.a_prime.is_none() {
        return Err(Error::Config(
            "gradient for a' requested on a design without a'".into(),
        ));
    }

    let field = DesignTensorField::new(mesh, design, params, hall);
    let mut g = StateGradient {
        xi: vec![0.0; n],
        eta: vec![0.0; n],
        s: vec![0.0; n],
        hall: vec![0.0; n],
    };
    for (e, nodes) in mesh.elements().iter().enumerate() {
        for qp in gauss_points(mesh, e) {
            let grad_t = qp.gradient(nodes, temperature);
            let grad_l = qp.gradient(nodes, adjoint);
            if grad_t == [0.0; 2] || grad_l == [0.0; 2] {
                continue;
            }
            let d = tensor_derivatives(field.design_at(&qp), params);
            let c_xi = -qp.weight * d.d_xi.bilinear(grad_l, grad_t);
            let c_eta = -qp.weight * d.d_eta.bilinear(grad_l, grad_t);
            let c_s = -qp.weight * d.d_s.bilinear(grad_l, grad_t);
            let c_a = -qp.weight * d.d_a.bilinear(grad_l, grad_t);
            for k in 0..4 {
                let node = nodes[k];
                let w = qp.shape[k];
                g.xi[node] += w * c_xi;
                g.eta[node] += w * c_eta;
                g.s[node] += w * c_s;
                g.hall[node] += w * c_a;
            }
        }
    }
    Ok(g)
}

/// Temperature-minimization gradient from a single state.
pub fn temp_min_gradient(state: StateGradient) -> GradientFields {
    GradientFields {
        xi: state.xi,
        eta: state.eta,
        s: state.s,
        a: state.hall,
        a_prime: None,
    }
}

/// Combines the two switching states: shared fields add, `a` comes from
/// state 1 only and `a'` from state 2 only.
pub fn switching_gradient(first: StateGradient, second: StateGradient) -> GradientFields {
    let add = |a: Vec<f64>, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();
    GradientFields {
        xi: add(first.xi, &second.xi),
        eta: add(first.eta, &second.eta),
        s: add(first.s, &second.s),
        a: first.hall,
        a_prime: Some(second.hall),
    }
}

/// Hall field read by each state of an objective.
pub fn state_hall_fields(kind: ObjectiveKind) -> &'static [HallField] {
    match kind {
        ObjectiveKind::TempMin => &[HallField::A],
        ObjectiveKind::Switching => &[HallField::A, HallField::APrime],
    }
}

/// A forward state together with its factored operator.
#[derive(Debug, Clone)]
pub struct SolvedState {
    pub temperature: ScalarField,
    pub system: FactoredSystem,
}

/// Assembles, factors and solves every state of the objective.
pub fn solve_states(
    kind: ObjectiveKind,
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    load: &[f64],
    tol: f64,
) -> Result<Vec<SolvedState>> {
    design.validate(mesh.node_count())?;
    state_hall_fields(kind)
        .iter()
        .map(|&hall| {
            if hall == HallField::APrime && design.a_prime.is_none() {
                return Err(Error::Config(
                    "switching problem needs the a' design field".into(),
                ));
            }
            let field = DesignTensorField::new(mesh, design, params, hall);
            let k = assemble_stiffness(mesh, |qp| field.tensor_at(qp))?;
            let system = FactoredSystem::new(&k, mesh, tol)?;
            let temperature = system.solve(load)?;
            Ok(SolvedState {
                temperature,
                system,
            })
        })
        .collect()
}

/// Objective value of the solved states.
pub fn objective_of(
    kind: ObjectiveKind,
    mesh: &Mesh,
    states: &[SolvedState],
) -> Result<ObjectiveValue> {
    let temps: Vec<Vec<f64>> = states.iter().map(|s| s.temperature.clone()).collect();
    evaluate(kind, &temps, mesh)
}

/// Adjoint solves and gradient assembly for already solved states.
pub fn gradient_of(
    kind: ObjectiveKind,
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    states: &[SolvedState],
) -> Result<GradientFields> {
    let mut per_state = Vec::with_capacity(states.len());
    for (index, (state, &hall)) in states.iter().zip(state_hall_fields(kind)).enumerate() {
        let rhs = adjoint_rhs(kind, index, mesh)?;
        let adjoint = state.system.solve_transpose(&rhs)?;
        per_state.push(pointwise_gradient(
            mesh,
            &state.temperature,
            &adjoint,
            design,
            params,
            hall,
        )?);
    }
    let mut per_state = per_state.into_iter();
    let first = per_state.next().expect("at least one state");
    Ok(match kind {
        ObjectiveKind::TempMin => temp_min_gradient(first),
        ObjectiveKind::Switching => {
            switching_gradient(first, per_state.next().expect("second state"))
        }
    })
}

/// Objective value alone, for finite-difference checks and reporting.
pub fn objective_value(
    kind: ObjectiveKind,
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    load: &[f64],
    tol: f64,
) -> Result<ObjectiveValue> {
    let states = solve_states(kind, mesh, design, params, load, tol)?;
    objective_of(kind, mesh, &states)
}

/// Objective value and its gradient.
pub fn objective_and_gradient(
    kind: ObjectiveKind,
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    load: &[f64],
    tol: f64,
) -> Result<(ObjectiveValue, GradientFields)> {
    let states = solve_states(kind, mesh, design, params, load, tol)?;
    let objective = objective_of(kind, mesh, &states)?;
    let gradient = gradient_of(kind, mesh, design, params, &states)?;
    Ok((objective, gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_load, QuadPoint};
    use crate::material::DesignPoint;
    use crate::mesh::{BoundaryKind, Region, RegionSpec, Side};
    use crate::sparse::dot;

    fn setup(nx: usize) -> (Mesh, Vec<f64>) {
        let mut mesh = Mesh::structured(nx, nx, 1.0, 1.0).unwrap();
        mesh.tag_boundary(Side::Bottom, 0.0, 1.0, BoundaryKind::Dirichlet)
            .unwrap();
        mesh.tag_region(&RegionSpec::centered(0.5, 0.625, 0.25, Region::Heat))
            .unwrap();
        mesh.tag_region(&RegionSpec::new(0.0, 0.0, 0.5, 0.25, Region::Protected))
            .unwrap();
        mesh.tag_region(&RegionSpec::new(
            0.5,
            0.0,
            1.0,
            0.25,
            Region::ProtectedPrime,
        ))
        .unwrap();
        let source: Vec<f64> = mesh
            .regions()
            .iter()
            .map(|r| if *r == Region::Heat { 1e5 } else { 0.0 })
            .collect();
        let load = assemble_load(&mesh, &source).unwrap();
        (mesh, load)
    }

    #[test]
    fn single_point_contribution() {
        // one unit element, ∇T = (1, 0) and ∇λ = (0, 1) everywhere
        let mesh = Mesh::structured(1, 1, 1.0, 1.0).unwrap();
        let t: Vec<f64> = mesh.coords().iter().map(|p| p[0]).collect();
        let l: Vec<f64> = mesh.coords().iter().map(|p| p[1]).collect();
        let params = MaterialParams::new(10.0, 20.0, 0.3, 1e-4, 1e-4).unwrap();
        let design = DesignFields::zeros(4, false);
        let g = pointwise_gradient(&mesh, &t, &l, &design, &params, HallField::A).unwrap();
        // Σ over nodes of N_n-weighted contributions = total weight 1 times -3
        let total: f64 = g.hall.iter().sum();
        assert!((total + 3.0).abs() < 1e-14);
        for v in &g.hall {
            assert!((v + 0.75).abs() < 1e-14);
        }
    }

    #[test]
    fn b_zero_kills_hall_gradient() {
        let (mesh, load) = setup(6);
        let params = MaterialParams::new(10.0, 20.0, 0.0, 1e-4, 1e-4).unwrap();
        let mut design = DesignFields::uniform(
            mesh.node_count(),
            DesignPoint::new(0.2, -0.3, 0.4, 0.5),
            Some(-0.5),
        );
        design.xi[10] = 0.9;
        let (_, g) = objective_and_gradient(
            ObjectiveKind::Switching,
            &mesh,
            &design,
            &params,
            &load,
            1e-12,
        )
        .unwrap();
        assert!(g.a.iter().all(|&v| v == 0.0));
        assert!(g.a_prime.as_ref().unwrap().iter().all(|&v| v == 0.0));
        // both states coincide when b = 0 and their adjoint loads are opposite
        let scale = g.max_abs().max(1e-300);
        assert!(g.xi.iter().all(|v| v.abs() <= 1e-12 * scale.max(1.0)));

        let (_, g) = objective_and_gradient(
            ObjectiveKind::TempMin,
            &mesh,
            &design,
            &params,
            &load,
            1e-12,
        )
        .unwrap();
        assert!(g.a.iter().all(|&v| v == 0.0));
        assert!(g.xi.iter().any(|&v| v != 0.0));
        assert!(g.s.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn symmetric_design_adjoint_matches_forward_operator() {
        let (mesh, _) = setup(4);
        let params = MaterialParams::new(10.0, 20.0, 0.3, 1e-4, 1e-4).unwrap();
        let design = DesignFields::uniform(
            mesh.node_count(),
            DesignPoint::new(0.1, 0.6, -0.7, 0.0),
            None,
        );
        let field = DesignTensorField::new(&mesh, &design, &params, HallField::A);
        let k = assemble_stiffness(&mesh, |qp| field.tensor_at(qp)).unwrap();
        assert!(k.max_abs_diff(&k.transpose()) <= 1e-14 * k.frobenius_norm());
    }

    #[test]
    fn zero_rhs_adjoint_is_zero() {
        let (mesh, _) = setup(4);
        let l = solve_adjoint(
            &mesh,
            |_: &QuadPoint| ConductivityTensor::new(10.0, -3.0, 3.0, 10.0),
            &vec![0.0; 25],
            1e-10,
        )
        .unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_identity_gives_same_objective() {
        // lᵀ T = λᵀ f when Kᵀ λ = l and K T = f
        let (mesh, load) = setup(8);
        let params = MaterialParams::new(10.0, 20.0, 0.3, 1e-4, 1e-4).unwrap();
        let design = DesignFields::uniform(
            mesh.node_count(),
            DesignPoint::new(0.3, -0.2, 0.5, 0.8),
            None,
        );
        let states = solve_states(
            ObjectiveKind::TempMin,
            &mesh,
            &design,
            &params,
            &load,
            1e-12,
        )
        .unwrap();
        let l = adjoint_rhs(ObjectiveKind::TempMin, 0, &mesh).unwrap();
        let lambda = states[0].system.solve_transpose(&l).unwrap();
        let lhs = dot(&l, &states[0].temperature);
        let rhs = dot(&lambda, &load);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
    }

    #[test]
    fn directional_derivative_matches_central_difference() {
        let (mesh, load) = setup(6);
        let params = MaterialParams::new(10.0, 20.0, 0.3, 1e-4, 1e-4).unwrap();
        let n = mesh.node_count();
        let mut design = DesignFields::zeros(n, true);
        for i in 0..n {
            let t = i as f64;
            design.xi[i] = 0.6 * (0.7 * t).sin();
            design.eta[i] = 0.6 * (1.3 * t).cos();
            design.s[i] = 0.5 * (0.4 * t).sin();
            design.a[i] = 0.7 * (0.9 * t).cos();
            design.a_prime.as_mut().unwrap()[i] = -0.6 * (0.5 * t).sin();
        }
        let dir: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 / 7.0 - 0.5).collect();
        for kind in [ObjectiveKind::TempMin, ObjectiveKind::Switching] {
            let (_, g) =
                objective_and_gradient(kind, &mesh, &design, &params, &load, 1e-13).unwrap();
            for id in design.field_ids() {
                if kind == ObjectiveKind::TempMin && id == FieldId::APrime {
                    continue;
                }
                let delta = 1e-6;
                let shifted = |sign: f64| {
                    let mut d = design.clone();
                    for (v, step) in d.field_mut(id).unwrap().iter_mut().zip(&dir) {
                        *v += sign * delta * step;
                    }
                    objective_value(kind, &mesh, &d, &params, &load, 1e-13)
                        .unwrap()
                        .value
                };
                let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * delta);
                let analytic = dot(g.field(id).unwrap(), &dir);
                let scale = fd.abs().max(analytic.abs());
                assert!(
                    (fd - analytic).abs() <= 1e-4 * scale,
                    "{kind:?} {id:?}: fd {fd:e} vs adjoint {analytic:e}"
                );
            }
        }
    }
}
