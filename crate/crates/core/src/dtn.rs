//! Truncated Dirichlet-to-Neumann operators on a circular outer boundary.
//!
//! Operators act on the orthonormal real trigonometric basis of
//! `L²(∂B_R)` ordered `1/√(2πR), cos θ/√(πR), sin θ/√(πR), cos 2θ/√(πR), ...`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_j_prime};
use crate::fem::{assemble, DirichletSolver, Materials, Source};
use crate::meshgen::{angles_of, Curve, Mesh};
use crate::{Error, Result};

/// Smallest `|J_n(ωR)|` accepted by [`dtn_free_analytic`].
pub const FREE_RESONANCE_TOL: f64 = 1e-8;

/// A `(2N+1) × (2N+1)` DtN matrix in the trigonometric basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtNMatrix {
    pub omega: f64,
    pub modes: usize,
    pub radius: f64,
    /// Row-major entries.
    pub entries: Vec<Vec<f64>>,
}

impl DtNMatrix {
    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let a = self.to_matrix();
        let diff = (&a - a.transpose()).amax();
        diff / a.amax().max(f64::MIN_POSITIVE)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("DtN matrices serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DtNMatrix = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let n = m.dim();
        if m.entries.len() != n || m.entries.iter().any(|r| r.len() != n) {
            return Err(Error::Format(format!("entries must be {n} x {n}")));
        }
        Ok(m)
    }
}

/// Fourier order of basis index `k` (0 for the constant).
pub fn mode_order(k: usize) -> usize {
    k.div_ceil(2)
}

/// Value of basis function `k` at angle `theta` on the circle of radius `r`.
pub fn basis_value(k: usize, theta: f64, r: f64) -> f64 {
    if k == 0 {
        return 1.0 / (2.0 * PI * r).sqrt();
    }
    let n = mode_order(k) as f64;
    let trig = if k % 2 == 1 {
        (n * theta).cos()
    } else {
        (n * theta).sin()
    };
    trig / (PI * r).sqrt()
}

fn outer_radius(mesh: &Mesh) -> Result<f64> {
    match mesh.geometry().map(|g| g.outer) {
        Some(Curve::Circle { radius }) => Ok(radius),
        Some(Curve::Ellipse { .. }) => Err(Error::Parameter("DtN maps need a circular outer boundary".into())),
        None => {
            let ring = mesh.outer_boundary();
            let radii: Vec<f64> = ring.iter().map(|&b| mesh.nodes()[b].norm()).collect();
            let mean = radii.iter().sum::<f64>() / radii.len() as f64;
            if radii.iter().any(|r| (r - mean).abs() > 1e-9 * mean) {
                return Err(Error::Parameter("DtN maps need a circular outer boundary".into()));
            }
            Ok(mean)
        }
    }
}

/// Discrete DtN map of the medium on `mesh` at frequency `omega`, with an
/// optional source on region 0.
///
/// Column `k` holds the boundary functional of the solution with Dirichlet
/// data `ψ_k`, paired with the interpolated basis functions. With a source,
/// every column includes the source response.
pub fn dtn_matrix(
    mesh: &Mesh,
    materials: &Materials,
    omega: f64,
    modes: usize,
    source: Option<&Source>,
) -> Result<DtNMatrix> {
    let radius = outer_radius(mesh)?;
    let ring = mesh.outer_boundary();
    if ring.len() < 8 * modes.max(1) {
        return Err(Error::Parameter(format!(
            "boundary ring of {} nodes cannot resolve {modes} modes (need {})",
            ring.len(),
            8 * modes.max(1)
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Parameter(format!("omega must be positive, got {omega}")));
    }
    let sys = assemble(mesh, materials, source)?;
    let solver = DirichletSolver::new(&sys, omega * omega)?;
    dtn_with_solver(&solver, radius, omega, modes)
}

/// DtN matrix from an existing factorization.
pub fn dtn_with_solver(solver: &DirichletSolver<'_>, radius: f64, omega: f64, modes: usize) -> Result<DtNMatrix> {
    let ring = solver_ring(solver);
    let angles = angles_of(ring.iter().copied())?;
    let dim = 2 * modes + 1;
    let samples: Vec<Vec<f64>> = (0..dim)
        .map(|k| angles.iter().map(|&t| basis_value(k, t, radius)).collect())
        .collect();
    let columns: Vec<Result<Vec<f64>>> = samples
        .par_iter()
        .map(|data| {
            let u = solver.solve(data)?;
            let r = solver.boundary_residual(&u);
            Ok(samples.iter().map(|psi| crate::linalg::dot(psi, &r)).collect())
        })
        .collect();
    let mut entries = vec![vec![0.0; dim]; dim];
    for (k, col) in columns.into_iter().enumerate() {
        for (j, v) in col?.into_iter().enumerate() {
            entries[j][k] = v;
        }
    }
    Ok(DtNMatrix {
        omega,
        modes,
        radius,
        entries,
    })
}

fn solver_ring(solver: &DirichletSolver<'_>) -> Vec<crate::Point> {
    let mesh = solver.mesh();
    mesh.outer_boundary().iter().map(|&b| mesh.nodes()[b]).collect()
}

/// DtN map of the free medium `(I, 1)` on the disk of radius `radius`:
/// diagonal with `ω J_n'(ωR) / J_n(ωR)`.
pub fn dtn_free_analytic(omega: f64, modes: usize, radius: f64) -> Result<DtNMatrix> {
    if !(omega > 0.0 && radius > 0.0) {
        return Err(Error::Parameter(format!(
            "need omega > 0 and radius > 0, got {omega}, {radius}"
        )));
    }
    let dim = 2 * modes + 1;
    let x = omega * radius;
    let mut diag = Vec::with_capacity(modes + 1);
    for n in 0..=modes as u32 {
        let j = bessel_j(n, x)?;
        let dj = bessel_j_prime(n, x)?;
        // Newton distance to the nearest root, so high orders with tiny J_n are not flagged
        if j.abs() < FREE_RESONANCE_TOL * dj.abs() {
            return Err(Error::Resonance {
                lambda: omega * omega,
                detail: format!("J_{n}({x}) vanishes: free Dirichlet resonance in mode {n}"),
            });
        }
        diag.push(omega * dj / j);
    }
    let mut entries = vec![vec![0.0; dim]; dim];
    for (k, row) in entries.iter_mut().enumerate() {
        row[k] = diag[mode_order(k)];
    }
    Ok(DtNMatrix {
        omega,
        modes,
        radius,
        entries,
    })
}

/// `‖A - B‖₂ / ‖B‖₂`.
pub fn dtn_error(a: &DtNMatrix, b: &DtNMatrix) -> Result<f64> {
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
    if a.modes != b.modes || !same(a.omega, b.omega) || !same(a.radius, b.radius) {
        return Err(Error::Parameter(format!(
            "DtN metadata differ: (omega {}, modes {}, radius {}) vs ({}, {}, {})",
            a.omega, a.modes, a.radius, b.omega, b.modes, b.radius
        )));
    }
    let denom = spectral_norm(&b.to_matrix());
    if denom == 0.0 {
        return Err(Error::Parameter("reference DtN matrix is zero".into()));
    }
    Ok(spectral_norm(&(a.to_matrix() - b.to_matrix())) / denom)
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().fold(0.0, |m, s| m.max(*s))
}
