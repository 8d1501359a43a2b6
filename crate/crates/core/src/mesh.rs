//! Structured quadrilateral meshes of a rectangular domain.
//!
//! Nodes are numbered row by row from the lower-left corner,
//! `node(i, j) = j * (nx + 1) + i`, and elements list their four corners
//! counterclockwise starting at the lower-left one. With this ordering the
//! half-bandwidth of every assembled operator is `nx + 2`.

use std::fmt;

use crate::error::{Error, Result};

/// Element region tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Bulk,
    /// Heat source domain.
    Heat,
    /// Protected domain, the one whose temperature is minimized.
    Protected,
    /// Second protected domain of the switching problem.
    ProtectedPrime,
}

impl Region {
    pub fn id(self) -> u8 {
        match self {
            Region::Bulk => 0,
            Region::Heat => 1,
            Region::Protected => 2,
            Region::ProtectedPrime => 3,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Region::Bulk => "bulk",
            Region::Heat => "heat",
            Region::Protected => "protected",
            Region::ProtectedPrime => "protected_prime",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// Homogeneous Dirichlet, `T = 0`.
    Dirichlet,
    /// Homogeneous (insulated) Neumann.
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub element: usize,
    pub side: Side,
    pub kind: BoundaryKind,
}

/// Axis-aligned rectangle selecting the elements whose centroid it contains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
    pub region: Region,
}

impl RegionSpec {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64, region: Region) -> Self {
        Self {
            xmin,
            ymin,
            xmax,
            ymax,
            region,
        }
    }

    /// Square of side `side` centered at `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, side: f64, region: Region) -> Self {
        let half = 0.5 * side;
        Self::new(cx - half, cy - half, cx + half, cy + half, region)
    }

    fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.xmin - tol
            && p[0] <= self.xmax + tol
            && p[1] >= self.ymin - tol
            && p[1] <= self.ymax + tol
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    coords: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    regions: Vec<Region>,
    boundary: Vec<BoundaryEdge>,
}

impl Mesh {
    /// Builds an `nx` x `ny` grid of rectangles over `[0, width] x [0, height]`.
    /// All elements start as [`Region::Bulk`] and all boundary edges as Neumann.
    pub fn structured(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "mesh needs at least one element per direction, got {nx} x {ny}"
            )));
        }
        if !(width > 0.0 && width.is_finite()) || !(height > 0.0 && height.is_finite()) {
            return Err(Error::Config(format!(
                "mesh dimensions must be positive, got {width} x {height}"
            )));
        }

        let hx = width / nx as f64;
        let hy = height / ny as f64;
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny { height } else { j as f64 * hy };
            for i in 0..=nx {
                let x = if i == nx { width } else { i as f64 * hx };
                coords.push([x, y]);
            }
        }

        let node = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([
                    node(i, j),
                    node(i + 1, j),
                    node(i + 1, j + 1),
                    node(i, j + 1),
                ]);
            }
        }

        let elem = |i: usize, j: usize| j * nx + i;
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        let mut push = |nodes, element, side| {
            boundary.push(BoundaryEdge {
                nodes,
                element,
                side,
                kind: BoundaryKind::Neumann,
            })
        };
        for i in 0..nx {
            push([node(i, 0), node(i + 1, 0)], elem(i, 0), Side::Bottom);
        }
        for j in 0..ny {
            push([node(nx, j), node(nx, j + 1)], elem(nx - 1, j), Side::Right);
        }
        for i in (0..nx).rev() {
            push([node(i + 1, ny), node(i, ny)], elem(i, ny - 1), Side::Top);
        }
        for j in (0..ny).rev() {
            push([node(0, j + 1), node(0, j)], elem(0, j), Side::Left);
        }

        Ok(Self {
            nx,
            ny,
            width,
            height,
            coords,
            elements,
            regions: vec![Region::Bulk; nx * ny],
            boundary,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Smallest element edge length.
    pub fn element_size(&self) -> f64 {
        (self.width / self.nx as f64).min(self.height / self.ny as f64)
    }

    pub fn element_nodes(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.coords[n])
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let p = self.element_nodes(e);
        [
            0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
            0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
        ]
    }

    /// Shoelace area of element `e`.
    pub fn element_area(&self, e: usize) -> f64 {
        let p = self.element_nodes(e);
        let mut twice = 0.0;
        for k in 0..4 {
            let a = p[k];
            let b = p[(k + 1) % 4];
            twice += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * twice
    }

    pub fn region_elements(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        self.regions
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == region)
            .map(|(e, _)| e)
    }

    pub fn has_region(&self, region: Region) -> bool {
        self.regions.contains(&region)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        self.region_elements(region)
            .map(|e| self.element_area(e))
            .sum()
    }

    /// Tags every element whose centroid lies in the rectangle and returns how
    /// many elements were tagged. Other elements keep their tag.
    pub fn tag_region(&mut self, spec: &RegionSpec) -> Result<usize> {
        if !(spec.xmin < spec.xmax && spec.ymin < spec.ymax) {
            return Err(Error::Config(format!(
                "region {} rectangle ({}, {}, {}, {}) is degenerate",
                spec.region, spec.xmin, spec.ymin, spec.xmax, spec.ymax
            )));
        }
        let tol = 1e-12 * self.width.max(self.height);
        if spec.xmin < -tol
            || spec.ymin < -tol
            || spec.xmax > self.width + tol
            || spec.ymax > self.height + tol
        {
            return Err(Error::Config(format!(
                "region {} rectangle ({}, {}, {}, {}) leaves the domain [0, {}] x [0, {}]",
                spec.region, spec.xmin, spec.ymin, spec.xmax, spec.ymax, self.width, self.height
            )));
        }

        let selected: Vec<usize> = (0..self.element_count())
            .filter(|&e| spec.contains(self.centroid(e), tol))
            .collect();
        if selected.is_empty() {
            return Err(Error::EmptyRegion {
                region: spec.region,
                xmin: spec.xmin,
                ymin: spec.ymin,
                xmax: spec.xmax,
                ymax: spec.ymax,
            });
        }
        for &e in &selected {
            self.regions[e] = spec.region;
        }
        Ok(selected.len())
    }

    /// Sets the kind of every boundary edge on `side` whose midpoint lies in
    /// `[lo, hi]`, measured along the side (x for bottom/top, y for left/right).
    pub fn tag_boundary(
        &mut self,
        side: Side,
        lo: f64,
        hi: f64,
        kind: BoundaryKind,
    ) -> Result<usize> {
        let len = match side {
            Side::Bottom | Side::Top => self.width,
            Side::Left | Side::Right => self.height,
        };
        let tol = 1e-12 * len;
        if !(lo <= hi) || lo < -tol || hi > len + tol {
            return Err(Error::Config(format!(
                "boundary interval [{lo}, {hi}] is not within the {side:?} side [0, {len}]"
            )));
        }
        let axis = match side {
            Side::Bottom | Side::Top => 0,
            Side::Left | Side::Right => 1,
        };
        let mut count = 0;
        for edge in self.boundary.iter_mut().filter(|edge| edge.side == side) {
            let mid = 0.5 * (self.coords[edge.nodes[0]][axis] + self.coords[edge.nodes[1]][axis]);
            if mid >= lo - tol && mid <= hi + tol {
                edge.kind = kind;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Config(format!(
                "boundary interval [{lo}, {hi}] on the {side:?} side selects no edge"
            )));
        }
        Ok(count)
    }

    /// Per-node flag: true when the node lies on a Dirichlet edge.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        for edge in self
            .boundary
            .iter()
            .filter(|e| e.kind == BoundaryKind::Dirichlet)
        {
            mask[edge.nodes[0]] = true;
            mask[edge.nodes[1]] = true;
        }
        mask
    }

    pub fn dirichlet_edge_count(&self) -> usize {
        self.boundary
            .iter()
            .filter(|e| e.kind == BoundaryKind::Dirichlet)
            .count()
    }

    /// Index of the node mirrored across the vertical center line.
    pub fn mirror_node_x(&self, n: usize) -> usize {
        let i = n % (self.nx + 1);
        let j = n / (self.nx + 1);
        j * (self.nx + 1) + (self.nx - i)
    }

    /// Index of the element mirrored across the vertical center line.
    pub fn mirror_element_x(&self, e: usize) -> usize {
        let i = e % self.nx;
        let j = e / self.nx;
        j * self.nx + (self.nx - 1 - i)
    }
}
