use asymfmo::mesh::Region;
use asymfmo::objectives::{region_integral, ObjectiveKind};
use asymfmo::optimizer::{optimize, OptimizerConfig};
use asymfmo::presets::{heat_load, switching_mesh, SOURCE_MAGNITUDE};
use asymfmo::MaterialParams;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(32);
    let mesh = switching_mesh(n).unwrap();
    let load = heat_load(&mesh, SOURCE_MAGNITUDE).unwrap();
    let params = MaterialParams::new(10.0, 20.0, 0.3, 1e-4, 1e-4).unwrap();
    let config = OptimizerConfig::default();
    let out = optimize(
        ObjectiveKind::Switching,
        &mesh,
        &params,
        &load,
        &config,
        |r| {
            if r.iteration % 100 == 0 {
                eprintln!("{}", r.log_line());
            }
        },
    )
    .unwrap();
    let t = &out.temperatures[0];
    let tp = &out.temperatures[1];
    let ip = |f: &[f64], r| region_integral(f, &mesh, r).unwrap();
    println!("status {:?} iters {}", out.status, out.history.len() - 1);
    println!(
        "mode1: Ip {:.4e} Ip' {:.4e}",
        ip(t, Region::Protected),
        ip(t, Region::ProtectedPrime)
    );
    println!(
        "mode2: Ip {:.4e} Ip' {:.4e}",
        ip(tp, Region::Protected),
        ip(tp, Region::ProtectedPrime)
    );
    println!(
        "mean a {:.4e} mean a' {:.4e}",
        mean(&out.design.a),
        mean(out.design.a_prime.as_ref().unwrap())
    );
}
