//! Four-field parameterization of the effective conductivity tensor
//!
//! ```text
//! k̂ = [ k + k11(ξ, η)     k12(ξ, η, s) - a b k ]
//!     [ k12(ξ, η, s) + a b k     k + k22(ξ, η) ]
//! ```
//!
//! `(k11, k22)` is the bilinear image of `(ξ, η)` over the quadrilateral with
//! vertices `(cε/2, cε/2)`, `(c - cε/2, cε/2)`, `(cε/2, c - cε/2)`, `(c/2, c/2)`,
//! so `cε <= k11 + k22 <= c`. The off-diagonal entry
//! `k12 = s sqrt((1 - ε') k11 k22)` keeps `det(k_aniso) >= ε' k11 k22 > 0`,
//! and `a b k` is the thermal Hall contribution bounded by `b k`.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Constants of the tensor parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Isotropic conductivity of the Hall-active material.
    pub k: f64,
    /// Upper bound on the trace of the anisotropic part.
    pub c: f64,
    /// Bound on the Hall product `|R_TH B_z|`.
    pub b: f64,
    /// Trace floor constant.
    pub eps: f64,
    /// Determinant floor constant.
    pub eps_prime: f64,
}

impl MaterialParams {
    pub fn new(k: f64, c: f64, b: f64, eps: f64, eps_prime: f64) -> Result<Self> {
        let params = Self {
            k,
            c,
            b,
            eps,
            eps_prime,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.k > 0.0
            && self.c > 0.0
            && self.b >= 0.0
            && self.eps > 0.0
            && self.eps <= 1.0
            && self.eps_prime > 0.0
            && self.eps_prime <= 1.0
            && [self.k, self.c, self.b].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "material parameters violate k > 0, c > 0, b >= 0, 0 < eps <= 1, 0 < eps_prime <= 1: {self:?}"
            )))
        }
    }

    /// Corner vertices of the diagonal design space, in the order matching
    /// the corners `(-1,-1)`, `(1,-1)`, `(-1,1)`, `(1,1)` of `(ξ, η)`.
    pub fn diagonal_vertices(&self) -> [[f64; 2]; 4] {
        let c = self.c;
        let lo = 0.5 * c * self.eps;
        [[lo, lo], [c - lo, lo], [lo, c - lo], [0.5 * c, 0.5 * c]]
    }
}

/// A 2x2 tensor stored row-major, `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConductivityTensor {
    pub m: [[f64; 2]; 2],
}

impl ConductivityTensor {
    pub const ZERO: Self = Self { m: [[0.0; 2]; 2] };

    pub fn new(k11: f64, k12: f64, k21: f64, k22: f64) -> Self {
        Self {
            m: [[k11, k12], [k21, k22]],
        }
    }

    pub fn isotropic(k: f64) -> Self {
        Self::new(k, 0.0, 0.0, k)
    }

    /// `[[0, -w], [w, 0]]`.
    pub fn rotation_generator(w: f64) -> Self {
        Self::new(0.0, -w, w, 0.0)
    }

    pub fn k11(&self) -> f64 {
        self.m[0][0]
    }
    pub fn k12(&self) -> f64 {
        self.m[0][1]
    }
    pub fn k21(&self) -> f64 {
        self.m[1][0]
    }
    pub fn k22(&self) -> f64 {
        self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.k11(), self.k21(), self.k12(), self.k22())
    }

    pub fn sym(&self) -> Self {
        let off = 0.5 * (self.k12() + self.k21());
        Self::new(self.k11(), off, off, self.k22())
    }

    pub fn antisym(&self) -> Self {
        let w = 0.5 * (self.k21() - self.k12());
        Self::rotation_generator(w)
    }

    /// `(k21 - k12) / 2`, the Hall magnitude of the tensor.
    pub fn antisym_part(&self) -> f64 {
        0.5 * (self.k21() - self.k12())
    }

    pub fn trace(&self) -> f64 {
        self.k11() + self.k22()
    }

    pub fn det(&self) -> f64 {
        self.k11() * self.k22() - self.k12() * self.k21()
    }

    /// True when the symmetric part is positive definite.
    pub fn is_admissible(&self) -> bool {
        let s = self.sym();
        s.trace() > 0.0 && s.det() > 0.0
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `u · (K v)`.
    pub fn bilinear(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let kv = self.apply(v);
        u[0] * kv[0] + u[1] * kv[1]
    }
}

impl Add for ConductivityTensor {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for ConductivityTensor {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs * -1.0
    }
}

impl Mul<f64> for ConductivityTensor {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self {
            m: self.m.map(|row| row.map(|v| v * rhs)),
        }
    }
}

/// Design variables evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignPoint {
    pub xi: f64,
    pub eta: f64,
    pub s: f64,
    pub a: f64,
}

impl DesignPoint {
    pub fn new(xi: f64, eta: f64, s: f64, a: f64) -> Self {
        Self { xi, eta, s, a }
    }

    pub fn check(&self) -> Result<()> {
        for (name, value) in [
            ("xi", self.xi),
            ("eta", self.eta),
            ("s", self.s),
            ("a", self.a),
        ] {
            check_unit(name, value)?;
        }
        Ok(())
    }
}

/// Identifies one nodal design field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldId {
    Xi,
    Eta,
    S,
    A,
    APrime,
}

impl FieldId {
    pub const ALL: [FieldId; 5] = [
        FieldId::Xi,
        FieldId::Eta,
        FieldId::S,
        FieldId::A,
        FieldId::APrime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldId::Xi => "xi",
            FieldId::Eta => "eta",
            FieldId::S => "s",
            FieldId::A => "a",
            FieldId::APrime => "a_prime",
        }
    }
}

/// Nodal design fields, each valued in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignFields {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    /// Hall field of the second state of the switching problem.
    pub a_prime: Option<Vec<f64>>,
}

impl DesignFields {
    pub fn zeros(nodes: usize, with_a_prime: bool) -> Self {
        Self::uniform(nodes, DesignPoint::default(), with_a_prime.then_some(0.0))
    }

    pub fn uniform(nodes: usize, p: DesignPoint, a_prime: Option<f64>) -> Self {
        Self {
            xi: vec![p.xi; nodes],
            eta: vec![p.eta; nodes],
            s: vec![p.s; nodes],
            a: vec![p.a; nodes],
            a_prime: a_prime.map(|v| vec![v; nodes]),
        }
    }

    pub fn node_count(&self) -> usize {
        self.xi.len()
    }

    pub fn field_ids(&self) -> Vec<FieldId> {
        let mut ids = vec![FieldId::Xi, FieldId::Eta, FieldId::S, FieldId::A];
        if self.a_prime.is_some() {
            ids.push(FieldId::APrime);
        }
        ids
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

    pub fn field_mut(&mut self, id: FieldId) -> Option<&mut Vec<f64>> {
        match id {
            FieldId::Xi => Some(&mut self.xi),
            FieldId::Eta => Some(&mut self.eta),
            FieldId::S => Some(&mut self.s),
            FieldId::A => Some(&mut self.a),
            FieldId::APrime => self.a_prime.as_mut(),
        }
    }

    /// Same-length and in-range check.
    pub fn validate(&self, nodes: usize) -> Result<()> {
        for id in self.field_ids() {
            let field = self.field(id).expect("listed field exists");
            if field.len() != nodes {
                return Err(Error::Size {
                    context: "design field length",
                    expected: nodes,
                    actual: field.len(),
                });
            }
            if let Some(&bad) = field.iter().find(|v| !(v.abs() <= 1.0)) {
                return Err(Error::Domain {
                    name: id.name(),
                    value: bad,
                });
            }
        }
        Ok(())
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if value.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name, value })
    }
}

fn corner_weights(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
    ]
}

fn corner_weights_dxi(eta: f64) -> [f64; 4] {
    [
        -0.25 * (1.0 - eta),
        0.25 * (1.0 - eta),
        -0.25 * (1.0 + eta),
        0.25 * (1.0 + eta),
    ]
}

fn corner_weights_deta(xi: f64) -> [f64; 4] {
    [
        -0.25 * (1.0 - xi),
        -0.25 * (1.0 + xi),
        0.25 * (1.0 - xi),
        0.25 * (1.0 + xi),
    ]
}

fn blend(weights: [f64; 4], vertices: &[[f64; 2]; 4]) -> (f64, f64) {
    let mut out = (0.0, 0.0);
    for (w, v) in weights.iter().zip(vertices) {
        out.0 += w * v[0];
        out.1 += w * v[1];
    }
    out
}

/// Diagonal entries `(k11, k22)` of the anisotropic part.
pub fn diag_from_xi_eta(xi: f64, eta: f64, params: &MaterialParams) -> Result<(f64, f64)> {
    check_unit("xi", xi)?;
    check_unit("eta", eta)?;
    Ok(diag_unchecked(xi, eta, params))
}

fn diag_unchecked(xi: f64, eta: f64, params: &MaterialParams) -> (f64, f64) {
    blend(corner_weights(xi, eta), &params.diagonal_vertices())
}

/// Off-diagonal entry `k12 = s sqrt((1 - ε') k11 k22)`.
pub fn offdiag_from_s(s: f64, k11: f64, k22: f64, params: &MaterialParams) -> f64 {
    s * ((1.0 - params.eps_prime) * k11 * k22).sqrt()
}

/// Hall contribution `w = a b k`.
pub fn hall_term(a: f64, params: &MaterialParams) -> f64 {
    a * params.b * params.k
}

/// Effective tensor without range checks; callers guarantee `|φ| <= 1`.
pub fn effective_tensor_unchecked(p: DesignPoint, params: &MaterialParams) -> ConductivityTensor {
    let (k11, k22) = diag_unchecked(p.xi, p.eta, params);
    let k12 = offdiag_from_s(p.s, k11, k22, params);
    let w = hall_term(p.a, params);
    let k = params.k;
    ConductivityTensor::new(k + k11, k12 - w, k12 + w, k + k22)
}

pub fn effective_tensor(p: DesignPoint, params: &MaterialParams) -> Result<ConductivityTensor> {
    p.check()?;
    Ok(effective_tensor_unchecked(p, params))
}

/// Anisotropic part `[[k11, k12], [k12, k22]]` alone.
pub fn aniso_tensor(p: DesignPoint, params: &MaterialParams) -> ConductivityTensor {
    let (k11, k22) = diag_unchecked(p.xi, p.eta, params);
    let k12 = offdiag_from_s(p.s, k11, k22, params);
    ConductivityTensor::new(k11, k12, k12, k22)
}

/// Partial derivatives of the effective tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorDerivatives {
    pub d_xi: ConductivityTensor,
    pub d_eta: ConductivityTensor,
    pub d_s: ConductivityTensor,
    pub d_a: ConductivityTensor,
}

/// Analytic partial derivatives of [`effective_tensor`] with respect to
/// `ξ`, `η`, `s` and `a`.
pub fn tensor_derivatives(p: DesignPoint, params: &MaterialParams) -> TensorDerivatives {
    let vertices = params.diagonal_vertices();
    let (k11, k22) = diag_unchecked(p.xi, p.eta, params);
    let (d11_xi, d22_xi) = blend(corner_weights_dxi(p.eta), &vertices);
    let (d11_eta, d22_eta) = blend(corner_weights_deta(p.xi), &vertices);

    let scale = (1.0 - params.eps_prime).sqrt();
    let root = (k11 * k22).sqrt();
    // d(s sqrt(P)) = s d(P) / (2 sqrt(P)), P = k11 k22 >= (cε/2)^2 > 0
    let dk12 = |d11: f64, d22: f64| {
        if root > 0.0 {
            p.s * scale * (d11 * k22 + k11 * d22) / (2.0 * root)
        } else {
            0.0
        }
    };
    let d12_xi = dk12(d11_xi, d22_xi);
    let d12_eta = dk12(d11_eta, d22_eta);
    let d12_s = scale * root;

    TensorDerivatives {
        d_xi: ConductivityTensor::new(d11_xi, d12_xi, d12_xi, d22_xi),
        d_eta: ConductivityTensor::new(d11_eta, d12_eta, d12_eta, d22_eta),
        d_s: ConductivityTensor::new(0.0, d12_s, d12_s, 0.0),
        d_a: ConductivityTensor::rotation_generator(params.b * params.k),
    }
}

/// Angle in radians of the principal eigenvector (largest eigenvalue) of the
/// symmetric anisotropic tensor, in `(-π/2, π/2]`.
pub fn orientation_angle(aniso: &ConductivityTensor) -> f64 {
    let s = aniso.sym();
    0.5 * (2.0 * s.k12()).atan2(s.k11() - s.k22())
}
