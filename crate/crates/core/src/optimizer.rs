//! Optimization loop: moment-based design sensitivity and the implicit
//! reaction-diffusion design update.
//!
//! Each design field `φ` evolves in fictitious time as
//!
//! ```text
//! ∂φ/∂t = -L' + R² ∇²φ,    L' = v / sqrt(s_m + ϵ)
//! ```
//!
//! where `v` and `s_m` are exponentially decayed first and second moments of
//! the nodal gradient (no bias correction). The implicit step solves
//! `(M + Δt R² K) φ_new = M (φ_old - Δt L')` and clamps to `[-1, 1]`.

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_update_system, ScalarField};
use crate::material::{DesignFields, FieldId, MaterialParams};
use crate::mesh::Mesh;
use crate::objectives::{check_regions, ObjectiveKind, ObjectiveValue};
use crate::sensitivity::{gradient_of, objective_of, solve_states, GradientFields};
use crate::sparse::{CsrMatrix, FactoredMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    /// Zero-division guard of the sensitivity.
    pub eps: f64,
    /// Fictitious time step, shared by moments and diffusion.
    pub dt: f64,
    /// Diffusion radius; `None` means twice the element size.
    pub radius: Option<f64>,
    pub max_iters: usize,
    /// Relative objective change that stops the loop.
    pub tol: f64,
    /// Relative residual required from every linear solve.
    pub solver_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            dt: 1e-2,
            radius: None,
            max_iters: 1000,
            tol: 1e-6,
            solver_tol: crate::fem::DEFAULT_SOLVER_TOL,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("optimizer: {what}")));
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decay rates must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if let Some(r) = self.radius {
            if !(r >= 0.0) {
                return bad("radius must be nonnegative");
            }
        }
        if !(self.tol > 0.0) || !(self.solver_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }

    pub fn radius_for(&self, mesh: &Mesh) -> f64 {
        self.radius.unwrap_or(2.0 * mesh.element_size())
    }
}

/// First and second gradient moments of one nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMoments {
    pub v: Vec<f64>,
    pub s_m: Vec<f64>,
}

impl FieldMoments {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            v: vec![0.0; nodes],
            s_m: vec![0.0; nodes],
        }
    }

    /// `v ← β₁ v + (1 - β₁) G`, `s_m ← β₂ s_m + (1 - β₂) G²`.
    pub fn update(&mut self, gradient: &[f64], config: &OptimizerConfig) {
        assert_eq!(
            gradient.len(),
            self.v.len(),
            "gradient layout differs from moments"
        );
        for ((v, s), &g) in self.v.iter_mut().zip(self.s_m.iter_mut()).zip(gradient) {
            *v = config.beta1 * *v + (1.0 - config.beta1) * g;
            *s = config.beta2 * *s + (1.0 - config.beta2) * g * g;
        }
    }

    /// `L' = v / sqrt(s_m + ϵ)` nodewise.
    pub fn sensitivity(&self, config: &OptimizerConfig) -> Vec<f64> {
        self.v
            .iter()
            .zip(&self.s_m)
            .map(|(v, s)| v / (s + config.eps).sqrt())
            .collect()
    }
}

/// Moments of every active design field plus the update counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub fields: Vec<(FieldId, FieldMoments)>,
    pub iteration: usize,
}

impl AdamState {
    pub fn new(fields: &[FieldId], nodes: usize) -> Self {
        Self {
            fields: fields
                .iter()
                .map(|&id| (id, FieldMoments::zeros(nodes)))
                .collect(),
            iteration: 0,
        }
    }

    pub fn update_moments(
        &mut self,
        gradient: &GradientFields,
        config: &OptimizerConfig,
    ) -> Result<()> {
        for (id, moments) in &mut self.fields {
            let g = gradient.field(*id).ok_or_else(|| {
                Error::Config(format!("gradient lacks the `{}` field", id.name()))
            })?;
            if g.len() != moments.v.len() {
                return Err(Error::Size {
                    context: "gradient field length",
                    expected: moments.v.len(),
                    actual: g.len(),
                });
            }
            moments.update(g, config);
        }
        self.iteration += 1;
        Ok(())
    }

    pub fn design_sensitivity(&self, config: &OptimizerConfig) -> Vec<(FieldId, Vec<f64>)> {
        self.fields
            .iter()
            .map(|(id, m)| (*id, m.sensitivity(config)))
            .collect()
    }
}

/// Factored implicit reaction-diffusion operator for one mesh.
#[derive(Debug, Clone)]
pub struct ReactionDiffusion {
    mass: CsrMatrix,
    system: FactoredMatrix,
    dt: f64,
    tol: f64,
}

impl ReactionDiffusion {
    pub fn new(mesh: &Mesh, dt: f64, radius: f64, tol: f64) -> Result<Self> {
        let system = FactoredMatrix::new(assemble_update_system(mesh, dt, radius)?)?;
        Ok(Self {
            mass: assemble_mass(mesh),
            system,
            dt,
            tol,
        })
    }

    /// Solves `(M + Δt R² K) φ = M (φ_old - Δt L')` without clamping.
    pub fn solve_unclamped(&self, phi_old: &[f64], sensitivity: &[f64]) -> Result<Vec<f64>> {
        if phi_old.len() != self.mass.nrows() || sensitivity.len() != self.mass.nrows() {
            return Err(Error::Size {
                context: "reaction-diffusion field length",
                expected: self.mass.nrows(),
                actual: phi_old.len().min(sensitivity.len()),
            });
        }
        let target: Vec<f64> = phi_old
            .iter()
            .zip(sensitivity)
            .map(|(p, l)| p - self.dt * l)
            .collect();
        let rhs = self.mass.matvec(&target);
        self.system.solve(&rhs, self.tol)
    }

    /// One design update, clamped nodewise to `[-1, 1]`.
    pub fn step(&self, phi_old: &[f64], sensitivity: &[f64]) -> Result<Vec<f64>> {
        let mut phi = self.solve_unclamped(phi_old, sensitivity)?;
        phi.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        Ok(phi)
    }
}

/// Stopping rule `|J(t) - J(t-Δt)| / |J(t-Δt)| <= tol` on the last two entries.
pub fn converged(history: &[f64], tol: f64) -> bool {
    match history {
        [.., previous, current] => {
            if *previous == 0.0 {
                *current == 0.0
            } else {
                (current - previous).abs() <= tol * previous.abs()
            }
        }
        _ => false,
    }
}

/// Relative change of the last two entries, when defined.
pub fn convergence_ratio(history: &[f64]) -> Option<f64> {
    match history {
        [.., previous, current] if *previous != 0.0 => {
            Some((current - previous).abs() / previous.abs())
        }
        [.., previous, current] if *current == *previous => Some(0.0),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Stopped at the iteration limit; not a failure.
    MaxIterations,
}

/// One evaluated design and the update that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: ObjectiveValue,
    /// Largest nodal change over all fields in the update after this
    /// evaluation; zero for the final record.
    pub max_change: f64,
    pub ratio: Option<f64>,
}

impl IterationRecord {
    /// Single-line summary for run logs.
    pub fn log_line(&self) -> String {
        let terms: Vec<String> = self
            .objective
            .terms
            .iter()
            .map(|t| format!("{t:.6e}"))
            .collect();
        let ratio = self
            .ratio
            .map(|r| format!("{r:.3e}"))
            .unwrap_or_else(|| "-".to_string());
        format!(
            "iter {:5}  J = {:.9e}  terms = [{}]  max|dphi| = {:.3e}  ratio = {}",
            self.iteration,
            self.objective.value,
            terms.join(", "),
            self.max_change,
            ratio
        )
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub design: DesignFields,
    pub history: Vec<IterationRecord>,
    pub status: Status,
    /// Temperatures of the final design, one per state.
    pub temperatures: Vec<ScalarField>,
}

impl OptimizationOutcome {
    pub fn objective_history(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.objective.value).collect()
    }

    pub fn final_objective(&self) -> &ObjectiveValue {
        &self
            .history
            .last()
            .expect("at least one evaluation")
            .objective
    }
}

/// Design fields the optimizer updates for an objective.
pub fn active_fields(kind: ObjectiveKind) -> &'static [FieldId] {
    match kind {
        ObjectiveKind::TempMin => &[FieldId::Xi, FieldId::Eta, FieldId::S, FieldId::A],
        ObjectiveKind::Switching => &[
            FieldId::Xi,
            FieldId::Eta,
            FieldId::S,
            FieldId::A,
            FieldId::APrime,
        ],
    }
}

/// Runs the loop from the all-zero design:
/// map to tensors, solve the state(s), evaluate `J`, stop on convergence,
/// otherwise solve the adjoint(s), update moments and move every field by one
/// reaction-diffusion step. `observer` sees every record as it is finalized.
pub fn optimize<F>(
    kind: ObjectiveKind,
    mesh: &Mesh,
    params: &MaterialParams,
    load: &[f64],
    config: &OptimizerConfig,
    observer: F,
) -> Result<OptimizationOutcome>
where
    F: FnMut(&IterationRecord),
{
    let design = DesignFields::zeros(mesh.node_count(), kind == ObjectiveKind::Switching);
    optimize_from(kind, mesh, params, load, config, design, observer)
}

/// As [`optimize`], starting from the given design.
pub fn optimize_from<F>(
    kind: ObjectiveKind,
    mesh: &Mesh,
    params: &MaterialParams,
    load: &[f64],
    config: &OptimizerConfig,
    mut design: DesignFields,
    mut observer: F,
) -> Result<OptimizationOutcome>
where
    F: FnMut(&IterationRecord),
{
    config.validate()?;
    params.validate()?;
    check_regions(kind, mesh)?;
    design.validate(mesh.node_count())?;
    if load.len() != mesh.node_count() {
        return Err(Error::Size {
            context: "load vector length",
            expected: mesh.node_count(),
            actual: load.len(),
        });
    }

    let fields = active_fields(kind);
    let update =
        ReactionDiffusion::new(mesh, config.dt, config.radius_for(mesh), config.solver_tol)?;
    let mut moments = AdamState::new(fields, mesh.node_count());
    let mut values: Vec<f64> = Vec::new();
    let mut history: Vec<IterationRecord> = Vec::new();

    let mut iteration = 0;
    loop {
        let states = solve_states(kind, mesh, &design, params, load, config.solver_tol)?;
        let objective = objective_of(kind, mesh, &states)?;
        values.push(objective.value);
        let mut record = IterationRecord {
            iteration,
            objective,
            max_change: 0.0,
            ratio: convergence_ratio(&values),
        };

        let status = if converged(&values, config.tol) {
            Some(Status::Converged)
        } else if iteration >= config.max_iters {
            Some(Status::MaxIterations)
        } else {
            None
        };
        if let Some(status) = status {
            observer(&record);
            history.push(record);
            return Ok(OptimizationOutcome {
                design,
                history,
                status,
                temperatures: states.into_iter().map(|s| s.temperature).collect(),
            });
        }

        let gradient = gradient_of(kind, mesh, &design, params, &states)?;
        moments.update_moments(&gradient, config)?;
        for (id, sensitivity) in moments.design_sensitivity(config) {
            let field = design.field_mut(id).expect("active field present");
            let updated = update.step(field, &sensitivity)?;
            let change = field
                .iter()
                .zip(&updated)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            record.max_change = record.max_change.max(change);
            *field = updated;
        }

        observer(&record);
        history.push(record);
        iteration += 1;
    }
}
