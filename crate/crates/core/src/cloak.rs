//! Regularized cloaking experiments on the disk of radius 2.
//!
//! The shell `1 < |y| < 2` carries `(F_ε)_*(I, 1)`, the unit disk carries a
//! target medium and optionally a source; the exterior DtN map is compared
//! with the free one.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dtn::{dtn_error, dtn_free_analytic, dtn_with_solver, DtNMatrix};
use crate::fem::{assemble, DirichletSolver, Materials, Source};
use crate::linalg::{self, CsrMatrix};
use crate::meshgen::{first_shell_layer_width, make_graded_cloak_disk, Mesh};
use crate::spectra::resonance_eigs;
use crate::xform::{push_forward, reg_cloak_map, MaterialField};
use crate::{Error, Point, Result};

pub const CLOAK_RADIUS: f64 = 2.0;

/// Source in the cloaked region.
#[derive(Clone)]
pub enum CloakSource {
    Function(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
    /// Nodal values on the region-0 submesh of the composite mesh (the same
    /// for every ε at fixed `h`).
    Interior(Vec<f64>),
}

impl std::fmt::Debug for CloakSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CloakSource::Function(_) => f.write_str("CloakSource::Function"),
            CloakSource::Interior(v) => write!(f, "CloakSource::Interior({} values)", v.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CloakExperiment {
    pub epsilon: f64,
    pub omega: f64,
    pub target: MaterialField,
    pub source: Option<CloakSource>,
    pub modes: usize,
    pub mesh_h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub dtn_error: f64,
    pub dofs: usize,
    pub factor_seconds: f64,
}

/// Composite mesh for `exp`, checking the grading rule: the first shell
/// layer, pulled back to the pre-image frame, is at most `ε/4` wide.
pub fn cloak_mesh(epsilon: f64, h: f64) -> Result<Mesh> {
    let mesh = make_graded_cloak_disk(epsilon, h)?;
    let width =
        first_shell_layer_width(&mesh).ok_or_else(|| Error::Internal("composite mesh has no interface".into()))?;
    let slope = 1.0 / (2.0 - epsilon);
    if width / slope > epsilon / 4.0 * (1.0 + 1e-9) {
        return Err(Error::Resolution(format!(
            "first shell layer {:.3e} exceeds epsilon/4 = {:.3e} in the pre-image frame",
            width / slope,
            epsilon / 4.0
        )));
    }
    Ok(mesh)
}

fn expand_source(mesh: &Mesh, source: &CloakSource) -> Result<Source> {
    match source {
        CloakSource::Function(f) => Ok(Source::Function(f.clone())),
        CloakSource::Interior(values) => {
            let (sub, parent) = mesh.submesh(0)?;
            if values.len() != sub.num_nodes() {
                return Err(Error::Parameter(format!(
                    "interior source has {} values, region 0 has {} nodes",
                    values.len(),
                    sub.num_nodes()
                )));
            }
            let mut nodal = vec![0.0; mesh.num_nodes()];
            for (&p, &v) in parent.iter().zip(values) {
                nodal[p] = v;
            }
            Ok(Source::Nodal(nodal))
        }
    }
}

/// Materials of the composite: target inside, pushed free medium in the
/// shell.
pub fn cloak_materials(epsilon: f64, target: &MaterialField) -> Result<Materials> {
    let shell = push_forward(&reg_cloak_map(epsilon)?, &MaterialField::free());
    Ok(Materials::by_region(vec![target.clone(), shell]))
}

/// DtN map of the cloaked medium and its distance to the free map.
pub fn run_cloak(exp: &CloakExperiment) -> Result<(DtNMatrix, SweepRecord)> {
    if exp.modes < 1 {
        return Err(Error::Parameter("at least one Fourier mode is required".into()));
    }
    let mesh = cloak_mesh(exp.epsilon, exp.mesh_h)?;
    let materials = cloak_materials(exp.epsilon, &exp.target)?;
    let source = exp.source.as_ref().map(|s| expand_source(&mesh, s)).transpose()?;
    let reference = dtn_free_analytic(exp.omega, exp.modes, CLOAK_RADIUS)?;
    let sys = assemble(&mesh, &materials, source.as_ref())?;
    let start = Instant::now();
    let solver = DirichletSolver::new(&sys, exp.omega * exp.omega)?;
    let factor_seconds = start.elapsed().as_secs_f64();
    let dtn = dtn_with_solver(&solver, CLOAK_RADIUS, exp.omega, exp.modes)?;
    let record = SweepRecord {
        epsilon: exp.epsilon,
        dtn_error: dtn_error(&dtn, &reference)?,
        dofs: solver.dofs(),
        factor_seconds,
    };
    Ok((dtn, record))
}

/// Runs `base` at every ε of `epsilons`; results keep the input order.
pub fn run_sweep(base: &CloakExperiment, epsilons: &[f64]) -> Result<Vec<(DtNMatrix, SweepRecord)>> {
    epsilons
        .par_iter()
        .map(|&epsilon| {
            run_cloak(&CloakExperiment {
                epsilon,
                ..base.clone()
            })
        })
        .collect()
}

/// `q`-weighted `L²` split of `f` against the span of `basis`: returns the
/// norms of the in-span and orthogonal components.
pub fn source_projection(f: &[f64], basis: &[Vec<f64>], mass: &CsrMatrix) -> Result<(f64, f64)> {
    let mf = mass.mul_vec(f);
    let f_norm = linalg::dot(f, &mf).max(0.0).sqrt();
    if basis.is_empty() {
        return Ok((0.0, f_norm));
    }
    let p = basis.len();
    let mb: Vec<Vec<f64>> = basis.iter().map(|b| mass.mul_vec(b)).collect();
    let gram = nalgebra::DMatrix::from_fn(p, p, |i, j| linalg::dot(&basis[i], &mb[j]));
    let rhs = nalgebra::DVector::from_fn(p, |i, _| linalg::dot(&basis[i], &mf));
    let coef = gram
        .cholesky()
        .ok_or_else(|| Error::Parameter("projection basis is linearly dependent".into()))?
        .solve(&rhs);
    let mut inside = vec![0.0; f.len()];
    for (b, c) in basis.iter().zip(coef.iter()) {
        inside.iter_mut().zip(b).for_each(|(x, bi)| *x += c * bi);
    }
    let outside: Vec<f64> = f.iter().zip(&inside).map(|(a, b)| a - b).collect();
    let norm_m = |v: &[f64]| linalg::dot(v, &mass.mul_vec(v)).max(0.0).sqrt();
    Ok((norm_m(&inside), norm_m(&outside)))
}

/// Radially symmetric interior resonance of the target `(I, q)` on the
/// region-0 submesh of the composite mesh at resolution `h`.
#[derive(Debug, Clone)]
pub struct RadialResonance {
    /// Discrete resonance frequency.
    pub omega: f64,
    /// Nodal values on the region-0 submesh, unit `L²(q)` norm.
    pub values: Vec<f64>,
    /// Continuum frequency `j_{1,1}/√q`.
    pub oracle_omega: f64,
}

/// The `m = 0` tied-boundary eigenfunction of `(I, q)` at the first zero of
/// `J_1`. Within its cluster (shared with the `m = 1` pair, whose traces
/// vanish) the combination with maximal boundary trace is selected.
pub fn radial_resonance(q: f64, h: f64) -> Result<RadialResonance> {
    let composite = make_graded_cloak_disk(1.0, h)?;
    let (disk, _) = composite.submesh(0)?;
    let target: Materials = MaterialField::isotropic(1.0, q)?.into();
    let spectrum = resonance_eigs(&disk, &target, 6)?;
    let oracle_omega = crate::bessel::bessel_root(1, 1)? / q.sqrt();
    let eig = &spectrum.eigen;
    let cluster = eig
        .clusters
        .iter()
        .find(|c| {
            c.iter()
                .any(|&k| (eig.values[k].sqrt() / oracle_omega - 1.0).abs() < 0.05)
        })
        .ok_or_else(|| Error::Solver("no tied resonance near j_{1,1}/sqrt(q)".into()))?;
    let ring = disk.outer_boundary()[0];
    let traces: Vec<f64> = cluster.iter().map(|&k| eig.nodal_vector(k)[ring]).collect();
    let mut values = vec![0.0; disk.num_nodes()];
    for (&k, &t) in cluster.iter().zip(&traces) {
        values
            .iter_mut()
            .zip(eig.nodal_vector(k))
            .for_each(|(v, x)| *v += t * x);
    }
    let sys = assemble(&disk, &target, None)?;
    let mv = sys.mass.mul_vec(&values);
    let norm = linalg::dot(&values, &mv).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Solver("resonance cluster has no radial member".into()));
    }
    values.iter_mut().for_each(|v| *v /= norm);
    let kv = sys.stiffness.mul_vec(&values);
    let lambda = linalg::dot(&values, &kv);
    Ok(RadialResonance {
        omega: lambda.sqrt(),
        values,
        oracle_omega,
    })
}
