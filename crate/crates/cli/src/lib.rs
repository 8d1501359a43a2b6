//! Configuration-driven runs of the asymfmo toolkit: forward analyses,
//! temperature minimization and heat-path switching, with CSV and VTK export.

pub mod config;
mod error;
pub mod export;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use asymfmo::fem::{
    assemble_load, center_point, recover_flux, DesignTensorField, FluxField, HallField,
};
use asymfmo::material::{aniso_tensor, orientation_angle, FieldId};
use asymfmo::objectives::{evaluate, ObjectiveKind, ObjectiveValue};
use asymfmo::optimizer::{optimize, IterationRecord, Status};
use asymfmo::presets::region_source;
use asymfmo::sensitivity::solve_states;
use asymfmo::{DesignFields, MaterialParams, Mesh};

pub use config::{Mode, RunConfig};
pub use error::CliError;
use export::{write_element_csv, write_nodal_csv, write_vtk, VtkData};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub quiet: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// `None` for forward analyses.
    pub status: Option<Status>,
    pub history: Vec<f64>,
    /// Objective of the final design, when the mode defines one.
    pub objective: Option<ObjectiveValue>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        match self.status {
            Some(Status::MaxIterations) => 4,
            _ => 0,
        }
    }
}

fn objective_kind(mode: Mode) -> Option<ObjectiveKind> {
    match mode {
        Mode::Forward => None,
        Mode::TempMin => Some(ObjectiveKind::TempMin),
        Mode::Switching => Some(ObjectiveKind::Switching),
    }
}

pub fn run(config: &RunConfig, options: RunOptions) -> Result<RunSummary, CliError> {
    let mesh = config.build_mesh()?;
    let load = assemble_load(&mesh, &region_source(&mesh, config.q))?;
    let out = &config.output;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let (design, temperatures, status, history, objective) = match objective_kind(config.mode) {
        None => {
            let fixed = config.design.expect("forward config carries a design");
            let design = DesignFields::uniform(mesh.node_count(), fixed.point, fixed.a_prime);
            // a second Hall field means a second state
            let kind = if fixed.a_prime.is_some() {
                ObjectiveKind::Switching
            } else {
                ObjectiveKind::TempMin
            };
            let states = solve_states(
                kind,
                &mesh,
                &design,
                &config.material,
                &load,
                config.solver_tol,
            )?;
            let temps: Vec<Vec<f64>> = states.into_iter().map(|s| s.temperature).collect();
            if !options.quiet {
                for (t, name) in temps.iter().zip(["T", "T'"]) {
                    let max = t.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                    println!("forward: max {name} = {max:.9e}");
                }
            }
            (design, temps, None, Vec::new(), None)
        }
        Some(kind) => {
            let log_path = out.join("history.log");
            let mut log =
                BufWriter::new(File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?);
            let mut log_error = None;
            let outcome = optimize(
                kind,
                &mesh,
                &config.material,
                &load,
                &config.optimizer,
                |r: &IterationRecord| {
                    let line = r.log_line();
                    if !options.quiet {
                        println!("{line}");
                    }
                    if log_error.is_none() {
                        log_error = writeln!(log, "{line}").err();
                    }
                },
            )?;
            if let Some(e) = log_error {
                return Err(CliError::io(&log_path, e));
            }
            log.flush().map_err(|e| CliError::io(&log_path, e))?;
            let history = outcome.objective_history();
            let objective = evaluate(kind, &outcome.temperatures, &mesh)?;
            if !options.quiet {
                let status = match outcome.status {
                    Status::Converged => "converged",
                    Status::MaxIterations => "stopped at the iteration limit",
                };
                println!(
                    "{status} after {} iterations, J = {:.9e}",
                    history.len() - 1,
                    objective.value
                );
            }
            (
                outcome.design,
                outcome.temperatures,
                Some(outcome.status),
                history,
                Some(objective),
            )
        }
    };

    let files = export_all(out, &mesh, &design, &config.material, &temperatures)?;
    Ok(RunSummary {
        status,
        history,
        objective,
        files,
    })
}

/// Tensor components, flux and orientation at element centers for one state.
struct ElementFields {
    flux: FluxField,
    flux_x: Vec<f64>,
    flux_y: Vec<f64>,
    k: [Vec<f64>; 4],
}

fn element_fields(
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    hall: HallField,
    t: &[f64],
) -> ElementFields {
    let field = DesignTensorField::new(mesh, design, params, hall);
    let flux = recover_flux(mesh, |qp| field.tensor_at(qp), t);
    let mut k: [Vec<f64>; 4] = Default::default();
    for e in 0..mesh.element_count() {
        let tensor = field.tensor_at(&center_point(mesh, e));
        for (slot, v) in k
            .iter_mut()
            .zip([tensor.k11(), tensor.k12(), tensor.k21(), tensor.k22()])
        {
            slot.push(v);
        }
    }
    ElementFields {
        flux_x: flux.iter().map(|q| q[0]).collect(),
        flux_y: flux.iter().map(|q| q[1]).collect(),
        flux,
        k,
    }
}

fn export_all(
    out: &Path,
    mesh: &Mesh,
    design: &DesignFields,
    params: &MaterialParams,
    temperatures: &[Vec<f64>],
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let suffixes = ["", "_prime"];
    let halls = [HallField::A, HallField::APrime];

    let mut nodal: Vec<(String, &[f64])> = Vec::new();
    for (t, suffix) in temperatures.iter().zip(suffixes) {
        nodal.push((format!("temperature{suffix}"), t));
    }
    for id in FieldId::ALL {
        if let Some(f) = design.field(id) {
            nodal.push((id.name().to_string(), f));
        }
    }
    for (name, values) in &nodal {
        let path = out.join(format!("{name}.csv"));
        write_nodal_csv(&path, mesh, values)?;
        files.push(path);
    }

    let states: Vec<ElementFields> = temperatures
        .iter()
        .zip(halls)
        .map(|(t, hall)| element_fields(mesh, design, params, hall, t))
        .collect();
    let orientation: Vec<f64> = (0..mesh.element_count())
        .map(|e| {
            let field = DesignTensorField::new(mesh, design, params, HallField::A);
            orientation_angle(&aniso_tensor(
                field.design_at(&center_point(mesh, e)),
                params,
            ))
        })
        .collect();
    let region: Vec<f64> = mesh.regions().iter().map(|r| f64::from(r.id())).collect();

    let mut names: Vec<String> = vec!["region".into(), "orientation".into()];
    for suffix in &suffixes[..states.len()] {
        for base in ["flux_x", "flux_y", "k11", "k12", "k21", "k22"] {
            names.push(format!("{base}{suffix}"));
        }
    }
    let mut columns: Vec<(&str, &[f64])> = vec![(&names[0], &region), (&names[1], &orientation)];
    let mut name_iter = names[2..].iter();
    for s in &states {
        for values in [&s.flux_x, &s.flux_y, &s.k[0], &s.k[1], &s.k[2], &s.k[3]] {
            columns.push((name_iter.next().expect("one name per column"), values));
        }
    }
    let path = out.join("elements.csv");
    write_element_csv(&path, mesh, &columns)?;
    files.push(path);

    let flux_names: Vec<String> = suffixes.iter().map(|s| format!("flux{s}")).collect();
    let data = VtkData {
        point_scalars: nodal.iter().map(|(n, v)| (n.as_str(), *v)).collect(),
        cell_scalars: columns
            .iter()
            .filter(|(n, _)| *n != "region")
            .copied()
            .collect(),
        cell_ints: vec![(
            "region",
            mesh.regions().iter().map(|r| i32::from(r.id())).collect(),
        )],
        cell_vectors: states
            .iter()
            .zip(&flux_names)
            .map(|(s, n)| (n.as_str(), s.flux.as_slice()))
            .collect(),
    };
    let path = out.join("fields.vtk");
    write_vtk(&path, mesh, "asymfmo fields", &data)?;
    files.push(path);
    Ok(files)
}
