//! Overdetermined and two-field eigenvalue problems: the Schiffer scan,
//! interior resonances with a constant boundary trace, and interior
//! transmission eigenvalues with a constant boundary coupling matrix.

use nalgebra::DVector;
use serde::Serialize;

use crate::bessel::bessel_root;
use crate::fem::{self, assemble, boundary_mass, Constraint, DofMap, EigenResult, Materials};
use crate::linalg::{self, CsrMatrix, EigenOptions, PencilEigen};
use crate::meshgen::Mesh;
use crate::xform::{sym_eigenvalues, MaterialField};
use crate::{Error, Mat2, Result};

/// Mesh points per wavelength required by the Schiffer scan.
pub const SCHIFFER_POINTS_PER_WAVELENGTH: f64 = 10.0;

/// Mesh points per wavelength below which ITE eigenvalues are not
/// reported as resolved.
pub const ITE_POINTS_PER_WAVELENGTH: f64 = 20.0;

/// Relative size of the imaginary part tolerated for a real eigenvalue.
pub const REALNESS_TOL: f64 = 1e-8;

/// Largest DOF count handled by the dense nonsymmetric ITE path.
pub const GENERAL_ITE_DENSE_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchifferCandidate {
    pub lambda: f64,
    pub boundary_flatness: f64,
    pub mode_index: usize,
}

/// Full Neumann spectrum below the scan limit with flatness per mode.
#[derive(Debug, Clone, Serialize)]
pub struct SchifferReport {
    pub lambda_max: f64,
    pub flatness_tol: f64,
    /// `(lambda, flatness)` for every mode up to `lambda_max`, zero mode
    /// included with flatness 0.
    pub spectrum: Vec<(f64, f64)>,
    pub candidates: Vec<SchifferCandidate>,
}

/// Largest `q / λ_min(g)` over element centroids, the squared ratio of
/// local wavenumber to `√λ`.
fn max_wavenumber_factor(mesh: &Mesh, materials: &Materials) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = tri.iter().map(|&i| mesh.nodes()[i]).sum::<crate::Point>() / 3.0;
        let m = materials
            .for_tag(mesh.region_tag()[t])
            .ok_or_else(|| Error::Parameter(format!("no material for triangle {t}")))?;
        let (g, q) = m.eval(c)?;
        worst = worst.max(q / sym_eigenvalues(&g).0);
    }
    Ok(worst)
}

/// `∫_∂Ω` weights of the boundary hat functions (lumped boundary mass).
fn boundary_weights(mesh: &Mesh) -> Vec<f64> {
    let mb = boundary_mass(mesh);
    mb.mul_vec(&vec![1.0; mb.n_rows()])
}

/// Standard deviation of the boundary trace over arc length divided by the
/// `L²(Ω)` norm of `u`.
pub fn boundary_flatness(mesh: &Mesh, unit_mass: &CsrMatrix, u: &[f64]) -> f64 {
    let ring = mesh.outer_boundary();
    let mb = boundary_mass(mesh);
    let weights = boundary_weights(mesh);
    let length: f64 = weights.iter().sum();
    let trace: Vec<f64> = ring.iter().map(|&b| u[b]).collect();
    let mean = linalg::dot(&weights, &trace) / length;
    let centered: Vec<f64> = trace.iter().map(|t| t - mean).collect();
    let var = linalg::dot(&centered, &mb.mul_vec(&centered)) / length;
    let norm = linalg::dot(u, &unit_mass.mul_vec(u)).sqrt();
    var.max(0.0).sqrt() / norm
}

/// Neumann eigenpairs up to `lambda_max` and the modes whose boundary trace
/// is constant within `flatness_tol`.
pub fn schiffer_scan(mesh: &Mesh, materials: &Materials, lambda_max: f64, flatness_tol: f64) -> Result<SchifferReport> {
    if !(flatness_tol > 0.0 && flatness_tol <= 0.1) {
        return Err(Error::Parameter(format!(
            "flatness tolerance must lie in (0, 0.1], got {flatness_tol}"
        )));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let factor = max_wavenumber_factor(mesh, materials)?;
    let wavelength = 2.0 * std::f64::consts::PI / (lambda_max * factor).sqrt();
    let h = mesh.max_edge_length();
    if wavelength / h < SCHIFFER_POINTS_PER_WAVELENGTH {
        return Err(Error::Resolution(format!(
            "lambda_max = {lambda_max} gives {:.1} points per wavelength (need {SCHIFFER_POINTS_PER_WAVELENGTH})",
            wavelength / h
        )));
    }
    let sys = assemble(mesh, materials, None)?;
    let unit = assemble(mesh, &MaterialField::free().into(), None)?.mass;
    let n_dofs = mesh.num_nodes();
    // Weyl: N(λ) ≈ |Ω| λ / 4π + |∂Ω| √λ / 4π for the unit medium
    let perimeter: f64 = boundary_weights(mesh).iter().sum();
    let weyl = (mesh.total_area() * lambda_max * factor + perimeter * (lambda_max * factor).sqrt())
        / (4.0 * std::f64::consts::PI);
    let mut count = ((1.5 * weyl).ceil() as usize + 6).min(n_dofs / 4);
    let eig = loop {
        let eig = fem::solve_eig(&sys, count, Constraint::None)?;
        if *eig.values.last().unwrap() > lambda_max || count == n_dofs / 4 {
            break eig;
        }
        count = (2 * count).min(n_dofs / 4);
    };
    let zero_tol = 1e-8 * lambda_max;
    let mut spectrum = Vec::new();
    let mut candidates = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > lambda_max {
            break;
        }
        if lambda <= zero_tol {
            spectrum.push((lambda, 0.0));
            continue;
        }
        let flatness = boundary_flatness(mesh, &unit, &eig.nodal_vector(k));
        spectrum.push((lambda, flatness));
        if flatness <= flatness_tol {
            candidates.push(SchifferCandidate {
                lambda,
                boundary_flatness: flatness,
                mode_index: k,
            });
        }
    }
    Ok(SchifferReport {
        lambda_max,
        flatness_tol,
        spectrum,
        candidates,
    })
}

/// Tied-boundary spectrum; `values` are `ω²`.
#[derive(Debug, Clone)]
pub struct ResonanceSpectrum {
    pub eigen: EigenResult,
    /// Indices of the zero modes (constants), kept in the spectrum.
    pub zero_modes: Vec<usize>,
}

impl ResonanceSpectrum {
    pub fn omegas(&self) -> Vec<f64> {
        self.eigen.values.iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Interior resonances: `∇·(g∇w) + ω² q w = 0` with constant trace and zero
/// total conormal flux.
pub fn resonance_eigs(mesh: &Mesh, materials: &Materials, count: usize) -> Result<ResonanceSpectrum> {
    let sys = assemble(mesh, materials, None)?;
    let eigen = fem::solve_eig(&sys, count, Constraint::TiedBoundary)?;
    let scale = eigen.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let zero_modes = (0..eigen.values.len())
        .filter(|&k| eigen.values[k].abs() <= 1e-8 * scale)
        .collect();
    Ok(ResonanceSpectrum { eigen, zero_modes })
}

/// Two media on one domain coupled through the boundary by
/// `a11 u + a12 v = 0` (traces) and `a21 ∂u + a22 ∂v = 0` (conormal fluxes).
#[derive(Debug, Clone)]
pub struct ITEConfig {
    pub first: MaterialField,
    pub second: MaterialField,
    pub coupling: Mat2,
}

impl ITEConfig {
    /// `distinct` records the caller's assertion that the two media differ.
    pub fn new(first: MaterialField, second: MaterialField, coupling: Mat2, distinct: bool) -> Result<Self> {
        if !distinct {
            return Err(Error::Configuration("the two media must differ".into()));
        }
        let scale = coupling.abs().max();
        if !(coupling.determinant().abs() > 1e-12 * scale * scale) {
            return Err(Error::Configuration(format!(
                "coupling matrix {coupling:?} is singular"
            )));
        }
        Ok(ITEConfig {
            first,
            second,
            coupling,
        })
    }

    /// `Δv = 0` coupled to `Δw + ω² q w = 0` by `v = w`, `∂v + ∂w = 0`.
    pub fn conformal(q: f64) -> Result<Self> {
        Self::new(
            MaterialField::isotropic(1.0, 0.0)?,
            MaterialField::isotropic(1.0, q)?,
            Mat2::new(1.0, -1.0, 1.0, 1.0),
            true,
        )
    }
}

/// Largest ω whose local wavelength in either medium spans at least
/// [`ITE_POINTS_PER_WAVELENGTH`] mesh edges.
pub fn ite_resolution_cutoff(mesh: &Mesh, cfg: &ITEConfig) -> Result<f64> {
    let f1 = max_wavenumber_factor(mesh, &cfg.first.clone().into())?;
    let f2 = max_wavenumber_factor(mesh, &cfg.second.clone().into())?;
    let factor = f1.max(f2);
    Ok(2.0 * std::f64::consts::PI / (ITE_POINTS_PER_WAVELENGTH * mesh.max_edge_length() * factor.sqrt()))
}

/// Node maps for the two-field space on `2n` nodes (first field then
/// second). Boundary node `b` carries one shared DOF weighted by `dir`.
fn coupled_map(mesh: &Mesh, dir: (f64, f64)) -> Result<DofMap> {
    let n = mesh.num_nodes();
    let mut on_boundary = vec![false; n];
    for &b in mesh.outer_boundary() {
        on_boundary[b] = true;
    }
    let mut entries = vec![None; 2 * n];
    let mut next = 0;
    for field in 0..2 {
        for i in (0..n).filter(|&i| !on_boundary[i]) {
            entries[field * n + i] = Some((next, 1.0));
            next += 1;
        }
    }
    for &b in mesh.outer_boundary() {
        for (field, c) in [(0, dir.0), (1, dir.1)] {
            if c != 0.0 {
                entries[field * n + b] = Some((next, c));
            }
        }
        next += 1;
    }
    DofMap::from_entries(entries, next, vec![])
}

fn block_diag(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let n = a.n_rows();
    let t = a
        .triplets()
        .chain(b.triplets().map(|(i, j, v)| (i + n, j + n, v)))
        .collect();
    CsrMatrix::from_triplets(2 * n, 2 * n, t)
}

/// Smallest `count` real nonzero transmission eigenvalues `ω²`.
///
/// When the trace and flux rows of the coupling give parallel boundary
/// directions the pencil is symmetric with semidefinite mass and is solved
/// by shift-invert iteration; infinite eigenvalues (the Laplace block with
/// zero mass) and the kernel of `K` are excluded. Otherwise a dense
/// Petrov-Galerkin pencil is decomposed and only real eigenvalues are kept;
/// fewer than `count` values is not an error.
pub fn ite_eigs(mesh: &Mesh, cfg: &ITEConfig, count: usize) -> Result<EigenResult> {
    let a = cfg.coupling;
    let trial = (a[(0, 1)], -a[(0, 0)]);
    let test = (a[(1, 0)], a[(1, 1)]);
    let tn = trial.0.hypot(trial.1);
    let sn = test.0.hypot(test.1);
    if tn == 0.0 || sn == 0.0 {
        return Err(Error::Configuration("coupling matrix has a zero row".into()));
    }
    if count == 0 {
        return Err(Error::Parameter("eigenpair count must be positive".into()));
    }
    let s1 = assemble(mesh, &cfg.first.clone().into(), None)?;
    let s2 = assemble(mesh, &cfg.second.clone().into(), None)?;
    let k = block_diag(&s1.stiffness, &s2.stiffness);
    let m = block_diag(&s1.mass, &s2.mass);
    if m.max_abs() == 0.0 {
        return Err(Error::Configuration("both media have zero bulk modulus".into()));
    }
    let trial = (trial.0 / tn, trial.1 / tn);
    let test = (test.0 / sn, test.1 / sn);
    let cross = trial.0 * test.1 - trial.1 * test.0;
    let trial_map = coupled_map(mesh, trial)?;
    if cross.abs() <= 1e-12 {
        // parallel directions: the trial map serves as test map too (an
        // opposite orientation flips both sides of the pencil)
        let kr = DofMap::project(&k, &trial_map, &trial_map);
        let mr = DofMap::project(&m, &trial_map, &trial_map);
        symmetric_ite(kr, mr, count, trial_map)
    } else {
        let test_map = coupled_map(mesh, test)?;
        let kr = DofMap::project(&k, &test_map, &trial_map);
        let mr = DofMap::project(&m, &test_map, &trial_map);
        general_ite(&kr, &mr, count, trial_map)
    }
}

fn symmetric_ite(k: CsrMatrix, m: CsrMatrix, count: usize, map: DofMap) -> Result<EigenResult> {
    if count + 1 > map.n_dofs() / 4 {
        return Err(Error::Parameter(format!(
            "eigenpair count {count} too large for {} DOFs",
            map.n_dofs()
        )));
    }
    let opts = EigenOptions {
        mass_normalize: false,
        ..Default::default()
    };
    // the kernel of K (constant pairs) may contribute one zero eigenvalue
    let eig = linalg::smallest_eigenpairs(&k, &m, count + 1, &[], opts)?;
    let scale = eig.values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i].abs() > 1e-8 * scale)
        .take(count)
        .collect();
    let pick = |v: &Vec<f64>| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let filtered = PencilEigen {
        values: pick(&eig.values),
        residuals: pick(&eig.residuals),
        vectors: keep.iter().map(|&i| eig.vectors[i].clone()).collect(),
    };
    fem::finish_eigen(filtered, map)
}

fn general_ite(k: &CsrMatrix, m: &CsrMatrix, count: usize, map: DofMap) -> Result<EigenResult> {
    let n = k.n_rows();
    if n > GENERAL_ITE_DENSE_LIMIT {
        return Err(Error::Parameter(format!(
            "non-symmetric coupling is solved densely and supports at most {GENERAL_ITE_DENSE_LIMIT} DOFs, got {n}"
        )));
    }
    let kd = k.to_dense();
    let md = m.to_dense();
    let mut sigma = linalg::default_shift(k, m);
    let lu = loop {
        let lu = (&kd - &md * sigma).lu();
        if lu.is_invertible() {
            break lu;
        }
        sigma *= 1.7;
        if sigma.abs() > 1e12 {
            return Err(Error::Solver(
                "no regular shift found for the transmission pencil".into(),
            ));
        }
    };
    let c = lu
        .solve(&md)
        .ok_or_else(|| Error::Solver("shifted pencil solve failed".into()))?;
    let mus = c.complex_eigenvalues();
    let mu_max = mus.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let mut values: Vec<f64> = mus
        .iter()
        .filter(|z| z.norm() > 1e-12 * mu_max)
        .map(|z| {
            let lam = sigma + 1.0 / z;
            (lam.re, lam.im)
        })
        .filter(|(re, im)| im.abs() < REALNESS_TOL * re.abs())
        .map(|(re, _)| re)
        .collect();
    values.sort_by(f64::total_cmp);
    let scale = values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    values.retain(|v| v.abs() > 1e-8 * scale);
    values.truncate(count);
    let k_norm = k.norm_inf();
    let m_norm = m.norm_inf();
    let mut vectors = Vec::with_capacity(values.len());
    let mut residuals = Vec::with_capacity(values.len());
    for &lam in &values {
        let shifted = &kd - &md * (lam * (1.0 + 1e-12) + 1e-300);
        let lu = shifted.lu();
        let mut x = DVector::from_element(n, 1.0);
        for _ in 0..3 {
            if let Some(y) = lu.solve(&(&md * &x)) {
                let nrm = y.norm();
                if nrm > 0.0 && nrm.is_finite() {
                    x = y / nrm;
                }
            }
        }
        let r = &kd * &x - &md * &x * lam;
        residuals.push(r.norm() / ((k_norm + lam.abs() * m_norm) * x.norm()));
        vectors.push(x.iter().copied().collect());
    }
    fem::finish_eigen(
        PencilEigen {
            values,
            vectors,
            residuals,
        },
        map,
    )
}

/// Closed-form transmission eigenfrequencies of the conformal instance on
/// the unit disk with `g = I` and constant `q`: `ω = root/√q` over the
/// zeros of `J_{m-1}` (`m ≥ 1`) and of `J_1` (`m = 0`). Sorted by `ω`.
pub fn ite_disk_oracle(q: f64, m_max: u32, k_max: usize) -> Result<Vec<(u32, f64)>> {
    if !(q > 0.0) {
        return Err(Error::Parameter(format!("q must be positive, got {q}")));
    }
    let mut out = Vec::new();
    for m in 0..=m_max {
        let order = if m == 0 { 1 } else { m - 1 };
        for k in 1..=k_max {
            out.push((m, bessel_root(order, k)? / q.sqrt()));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Closed-form tied-boundary resonances on the disk of radius `radius` with
/// `g = c I` and constant `q`: `ω = root/(R√(q/c))` over the zeros of `J_1`
/// (`m = 0`, zero flux) and of `J_m` (`m ≥ 1`, zero trace). Sorted by `ω`;
/// `m ≥ 1` entries stand for a cos/sin pair.
pub fn resonance_disk_oracle(c: f64, q: f64, radius: f64, m_max: u32, k_max: usize) -> Result<Vec<(u32, f64)>> {
    if !(c > 0.0 && q > 0.0 && radius > 0.0) {
        return Err(Error::Parameter(format!(
            "need c, q, radius > 0, got {c}, {q}, {radius}"
        )));
    }
    let scale = radius * (q / c).sqrt();
    let mut out = Vec::new();
    for m in 0..=m_max {
        let order = if m == 0 { 1 } else { m };
        for k in 1..=k_max {
            out.push((m, bessel_root(order, k)? / scale));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::{make_disk, make_ellipse};

    fn free() -> Materials {
        MaterialField::free().into()
    }

    #[test]
    fn oracle_examples() {
        let a = ite_disk_oracle(4.0, 1, 1).unwrap();
        assert!(a.iter().any(|&(m, w)| m == 1 && (w - 2.4048 / 2.0).abs() < 1e-4));
        let b = ite_disk_oracle(1.0, 0, 1).unwrap();
        assert!(b.iter().any(|&(m, w)| m == 0 && (w - 3.83171).abs() < 1e-5));
        let c = ite_disk_oracle(4.0, 2, 1).unwrap();
        assert!(c.iter().any(|&(m, w)| m == 2 && (w - 3.83171 / 2.0).abs() < 1e-5));
        assert!(c.windows(2).all(|p| p[0].1 <= p[1].1));
        let r = resonance_disk_oracle(1.0, 1.0, 1.0, 2, 1).unwrap();
        assert_eq!(r.iter().filter(|&&(_, w)| (w - 3.83171).abs() < 1e-5).count(), 2);
        assert!(r.iter().any(|&(m, w)| m == 2 && (w - 5.13562).abs() < 1e-5));
        let s = resonance_disk_oracle(2.0, 8.0, 0.5, 0, 1).unwrap();
        assert!((s[0].1 - 3.83171).abs() < 1e-5);
    }

    #[test]
    fn disk_schiffer_scan_finds_the_radial_mode() {
        let mesh = make_disk(1.0, 0.05, None).unwrap();
        let report = schiffer_scan(&mesh, &free(), 40.0, 1e-2).unwrap();
        assert_eq!(report.candidates.len(), 1, "{report:?}");
        assert!((report.candidates[0].lambda / 14.682 - 1.0).abs() <= 0.015);
        for &(lambda, flat) in &report.spectrum {
            if lambda > 1e-6 && (lambda / 14.682 - 1.0).abs() > 0.05 {
                assert!(flat > 0.2, "{lambda}: {flat}");
            }
        }
        // 0, 3.39 x2, 9.33 x2, 14.68, 17.65 x2, 28.28 x2, 28.42 x2
        assert_eq!(report.spectrum.len(), 12);
    }

    #[test]
    fn ellipse_scan_has_no_candidates() {
        let mesh = make_ellipse(1.3, 0.8, 0.05).unwrap();
        let report = schiffer_scan(&mesh, &free(), 40.0, 1e-2).unwrap();
        assert!(report.candidates.is_empty(), "{:?}", report.candidates);
    }

    #[test]
    fn schiffer_guards() {
        let mesh = make_disk(1.0, 0.25, None).unwrap();
        assert!(matches!(
            schiffer_scan(&mesh, &free(), 40.0, 0.5),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            schiffer_scan(&mesh, &free(), 400.0, 1e-2),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn resonance_scaling_law() {
        let mesh = make_disk(1.0, 0.1, None).unwrap();
        let a = resonance_eigs(&mesh, &free(), 6).unwrap();
        let b = resonance_eigs(&mesh, &MaterialField::isotropic(1.0, 4.0).unwrap().into(), 6).unwrap();
        assert_eq!(a.zero_modes, vec![0]);
        for (wa, wb) in a.omegas().iter().zip(b.omegas()).skip(1) {
            assert!((wa / 2.0 - wb).abs() <= 1e-6 * wb);
        }
    }

    #[test]
    fn conformal_ite_matches_oracle_on_coarse_mesh() {
        let mesh = make_disk(1.0, 0.06, None).unwrap();
        let cfg = ITEConfig::conformal(4.0).unwrap();
        let res = ite_eigs(&mesh, &cfg, 4).unwrap();
        let w: Vec<f64> = res.values.iter().map(|v| v.sqrt()).collect();
        // 1.2024 (m=1, two modes), then 1.9159 (m=0 and m=2, three modes)
        assert!((w[0] / 1.20241 - 1.0).abs() <= 0.015, "{w:?}");
        assert!((w[1] / 1.20241 - 1.0).abs() <= 0.015, "{w:?}");
        assert!((w[2] / 1.91585 - 1.0).abs() <= 0.015, "{w:?}");
    }

    #[test]
    fn general_coupling_agrees_with_symmetric_path() {
        // scaling the flux row leaves the problem unchanged but a tiny
        // rotation of the trace row forces the dense path; compare with the
        // symmetric solve on a coarse mesh
        let mesh = make_disk(1.0, 0.2, None).unwrap();
        let sym = ITEConfig::conformal(4.0).unwrap();
        let mut gen = sym.clone();
        gen.coupling = Mat2::new(1.0, -1.0, 1.0, 1.0 + 1e-9);
        let a = ite_eigs(&mesh, &sym, 3).unwrap();
        let b = ite_eigs(&mesh, &gen, 3).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-6 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn configuration_errors() {
        let f = MaterialField::free();
        let g = MaterialField::isotropic(2.0, 1.0).unwrap();
        assert!(ITEConfig::new(f.clone(), g.clone(), Mat2::new(1.0, 1.0, 1.0, 1.0), true).is_err());
        assert!(ITEConfig::new(f.clone(), g.clone(), Mat2::identity(), false).is_err());
        let mesh = make_disk(1.0, 0.25, None).unwrap();
        let cfg = ITEConfig {
            first: f,
            second: g,
            coupling: Mat2::new(0.0, 0.0, 1.0, 1.0),
        };
        assert!(matches!(ite_eigs(&mesh, &cfg, 2), Err(Error::Configuration(_))));
    }

    #[test]
    fn equal_media_kernel_is_excluded() {
        let mesh = make_disk(1.0, 0.2, None).unwrap();
        let cfg = ITEConfig::new(
            MaterialField::free(),
            MaterialField::free(),
            Mat2::new(1.0, -1.0, 1.0, 1.0),
            true,
        )
        .unwrap();
        let res = ite_eigs(&mesh, &cfg, 3).unwrap();
        assert!(res.values.iter().all(|v| *v > 1e-6));
    }
}
