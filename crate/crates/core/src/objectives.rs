//! Objective functionals and their adjoint loads.
//!
//! Region integrals use the same 2x2 Gauss rule as the assembly, so `J = lᵀ T`
//! with `l` the region load vector holds to roundoff and the discrete adjoint
//! is exact for the discrete objective.

use crate::error::{Error, Result};
use crate::fem::{assemble_load_with, gauss_points};
use crate::mesh::{Mesh, Region};

/// Scalar objective with its signed per-term breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub terms: Vec<f64>,
}

impl ObjectiveValue {
    fn from_terms(terms: Vec<f64>) -> Self {
        Self {
            value: terms.iter().sum(),
            terms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `∫_{Ω_p} T dΩ`.
    TempMin,
    /// `I_p(T) - I_p'(T) + I_p'(T') - I_p(T')`.
    Switching,
}

impl ObjectiveKind {
    pub fn state_count(self) -> usize {
        match self {
            ObjectiveKind::TempMin => 1,
            ObjectiveKind::Switching => 2,
        }
    }

    pub fn required_regions(self) -> &'static [Region] {
        match self {
            ObjectiveKind::TempMin => &[Region::Protected],
            ObjectiveKind::Switching => &[Region::Protected, Region::ProtectedPrime],
        }
    }
}

fn require_region(mesh: &Mesh, region: Region) -> Result<()> {
    if mesh.has_region(region) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "region `{region}` is not tagged on the mesh"
        )))
    }
}

/// Checks the mesh carries every region the objective reads.
pub fn check_regions(kind: ObjectiveKind, mesh: &Mesh) -> Result<()> {
    for &region in kind.required_regions() {
        require_region(mesh, region)?;
    }
    Ok(())
}

/// Integral of the bilinear interpolant of `field` over the tagged elements.
pub fn region_integral(field: &[f64], mesh: &Mesh, region: Region) -> Result<f64> {
    require_region(mesh, region)?;
    if field.len() != mesh.node_count() {
        return Err(Error::Size {
            context: "region integral field",
            expected: mesh.node_count(),
            actual: field.len(),
        });
    }
    let mut total = 0.0;
    for e in mesh.region_elements(region) {
        let nodes = &mesh.elements()[e];
        for qp in gauss_points(mesh, e) {
            total += qp.weight * qp.interpolate(nodes, field);
        }
    }
    Ok(total)
}

/// `∫_region φ_i dΩ` for every node.
pub fn region_load(mesh: &Mesh, region: Region) -> Result<Vec<f64>> {
    require_region(mesh, region)?;
    let regions = mesh.regions();
    Ok(assemble_load_with(mesh, |qp| {
        if regions[qp.element] == region {
            1.0
        } else {
            0.0
        }
    }))
}

pub fn temp_min_objective(temperature: &[f64], mesh: &Mesh) -> Result<ObjectiveValue> {
    let term = region_integral(temperature, mesh, Region::Protected)?;
    Ok(ObjectiveValue::from_terms(vec![term]))
}

/// Heat-path switching functional for states `T` (field `a`) and `T'` (field `a'`).
pub fn switching_objective(t: &[f64], t_prime: &[f64], mesh: &Mesh) -> Result<ObjectiveValue> {
    check_regions(ObjectiveKind::Switching, mesh)?;
    let terms = vec![
        region_integral(t, mesh, Region::Protected)?,
        -region_integral(t, mesh, Region::ProtectedPrime)?,
        region_integral(t_prime, mesh, Region::ProtectedPrime)?,
        -region_integral(t_prime, mesh, Region::Protected)?,
    ];
    Ok(ObjectiveValue::from_terms(terms))
}

/// Evaluates the objective over the solved states (one for temp-min, two for switching).
pub fn evaluate(kind: ObjectiveKind, states: &[Vec<f64>], mesh: &Mesh) -> Result<ObjectiveValue> {
    if states.len() != kind.state_count() {
        return Err(Error::Size {
            context: "number of solved states",
            expected: kind.state_count(),
            actual: states.len(),
        });
    }
    match kind {
        ObjectiveKind::TempMin => temp_min_objective(&states[0], mesh),
        ObjectiveKind::Switching => switching_objective(&states[0], &states[1], mesh),
    }
}

/// `∂J/∂T_state` as a nodal load vector.
pub fn adjoint_rhs(kind: ObjectiveKind, state: usize, mesh: &Mesh) -> Result<Vec<f64>> {
    match (kind, state) {
        (ObjectiveKind::TempMin, 0) => region_load(mesh, Region::Protected),
        (ObjectiveKind::Switching, 0 | 1) => {
            let p = region_load(mesh, Region::Protected)?;
            let pp = region_load(mesh, Region::ProtectedPrime)?;
            let sign = if state == 0 { 1.0 } else { -1.0 };
            Ok(p.iter().zip(&pp).map(|(a, b)| sign * (a - b)).collect())
        }
        _ => Err(Error::Size {
            context: "adjoint state index",
            expected: kind.state_count(),
            actual: state,
        }),
    }
}
