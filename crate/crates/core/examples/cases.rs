use asymfmo::objectives::ObjectiveKind;
use asymfmo::optimizer::{optimize, OptimizerConfig};
use asymfmo::presets::{heat_load, temp_min_mesh, TempMinCase, SOURCE_MAGNITUDE};
use std::time::Instant;

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(32);
    let iters: usize = std::env::args()
        .nth(2)
        .map(|s| s.parse().unwrap())
        .unwrap_or(1000);
    let mesh = temp_min_mesh(n).unwrap();
    let load = heat_load(&mesh, SOURCE_MAGNITUDE).unwrap();
    let config = OptimizerConfig {
        max_iters: iters,
        ..OptimizerConfig::default()
    };
    for case in TempMinCase::ALL {
        let start = Instant::now();
        let out = optimize(
            ObjectiveKind::TempMin,
            &mesh,
            &case.params(),
            &load,
            &config,
            |r| {
                if r.iteration % 100 == 0 {
                    eprintln!("{:?} {}", case, r.log_line());
                }
            },
        )
        .unwrap();
        let h = out.objective_history();
        println!(
            "{:?}: J0 = {:.4e}  Jfinal = {:.4e}  iters = {}  status = {:?}  {:.1?}",
            case,
            h[0],
            h[h.len() - 1],
            h.len() - 1,
            out.status,
            start.elapsed()
        );
    }
}
