//! Default experiment geometries on the unit square.
//!
//! The heat source sits in a centered square of side 0.1 and the whole bottom
//! side is held at `T = 0`. For temperature minimization the protected square
//! (side 0.2) sits straight below the source; for switching the two protected
//! squares sit left and right of the vertical mid-line.

use crate::error::Result;
use crate::fem::assemble_load;
use crate::material::MaterialParams;
use crate::mesh::{BoundaryKind, Mesh, Region, RegionSpec, Side};

pub const SOURCE_MAGNITUDE: f64 = 1.0e5;
pub const HEAT_SIDE: f64 = 0.1;
pub const PROTECTED_SIDE: f64 = 0.2;

pub fn heat_region() -> RegionSpec {
    RegionSpec::centered(0.5, 0.5, HEAT_SIDE, Region::Heat)
}

pub fn temp_min_regions() -> Vec<RegionSpec> {
    vec![
        heat_region(),
        RegionSpec::centered(0.5, 0.25, PROTECTED_SIDE, Region::Protected),
    ]
}

pub fn switching_regions() -> Vec<RegionSpec> {
    vec![
        heat_region(),
        RegionSpec::new(0.15, 0.15, 0.35, 0.35, Region::Protected),
        RegionSpec::new(0.65, 0.15, 0.85, 0.35, Region::ProtectedPrime),
    ]
}

/// Unit-square mesh with the given regions and a Dirichlet bottom side.
pub fn unit_square(n: usize, regions: &[RegionSpec]) -> Result<Mesh> {
    let mut mesh = Mesh::structured(n, n, 1.0, 1.0)?;
    mesh.tag_boundary(Side::Bottom, 0.0, 1.0, BoundaryKind::Dirichlet)?;
    for spec in regions {
        mesh.tag_region(spec)?;
    }
    Ok(mesh)
}

pub fn temp_min_mesh(n: usize) -> Result<Mesh> {
    unit_square(n, &temp_min_regions())
}

pub fn switching_mesh(n: usize) -> Result<Mesh> {
    unit_square(n, &switching_regions())
}

/// Elementwise source: `q` on the heat region, zero elsewhere.
pub fn region_source(mesh: &Mesh, q: f64) -> Vec<f64> {
    mesh.regions()
        .iter()
        .map(|&r| if r == Region::Heat { q } else { 0.0 })
        .collect()
}

pub fn heat_load(mesh: &Mesh, q: f64) -> Result<Vec<f64>> {
    assemble_load(mesh, &region_source(mesh, q))
}

/// Material constants of the four temperature-minimization cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TempMinCase {
    /// Isotropic, symmetric.
    IsoSym,
    /// Anisotropic, symmetric.
    AnisoSym,
    /// Isotropic, with Hall term.
    IsoHall,
    /// Anisotropic, with Hall term.
    AnisoHall,
}

impl TempMinCase {
    pub const ALL: [TempMinCase; 4] = [
        TempMinCase::IsoSym,
        TempMinCase::AnisoSym,
        TempMinCase::IsoHall,
        TempMinCase::AnisoHall,
    ];

    pub fn params(self) -> MaterialParams {
        let (b, eps) = match self {
            TempMinCase::IsoSym => (0.0, 1.0),
            TempMinCase::AnisoSym => (0.0, 1e-4),
            TempMinCase::IsoHall => (0.3, 1.0),
            TempMinCase::AnisoHall => (0.3, 1e-4),
        };
        MaterialParams {
            k: 10.0,
            c: 20.0,
            b,
            eps,
            eps_prime: eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_regions_on_32() {
        let mesh = temp_min_mesh(32).unwrap();
        assert_eq!(mesh.region_elements(Region::Heat).count(), 16);
        assert!((mesh.region_area(Region::Protected) - 0.04).abs() < 0.01);
        let load = heat_load(&mesh, SOURCE_MAGNITUDE).unwrap();
        let total: f64 = load.iter().sum();
        let area = mesh.region_area(Region::Heat);
        assert!((total - SOURCE_MAGNITUDE * area).abs() < 1e-9 * total);

        let sw = switching_mesh(32).unwrap();
        for e in sw.region_elements(Region::Protected) {
            assert_eq!(sw.regions()[sw.mirror_element_x(e)], Region::ProtectedPrime);
        }
    }

    #[test]
    fn case_params_are_valid() {
        for case in TempMinCase::ALL {
            case.params().validate().unwrap();
        }
    }
}
