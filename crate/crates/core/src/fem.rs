//! P1 finite elements for `∇·(g∇u) + λ q u = f`.
//!
//! Element integrals use the 3-point interior rule (exact for quadratics).
//! With `K[i][j] = ∫ g∇φ_j·∇φ_i`, `M[i][j] = ∫ q φ_j φ_i` and
//! `F[i] = ∫ f φ_i`, the discrete equations read `(K - λM) u = -F`, and the
//! conormal derivative on the boundary is represented by the functional
//! `ψ -> a(u, Eψ) - λ (q u, Eψ) + (f, Eψ)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::linalg::{self, CsrMatrix, EigenOptions, SkylineLdl};
use crate::meshgen::Mesh;
use crate::xform::{sym_eigenvalues, MaterialField};
use crate::{Error, Mat2, Point, Result};

/// Barycentric coordinates of the quadrature points; equal weights 1/3.
const QUAD: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Relative tolerance on interior equations accepted by [`boundary_flux`].
pub const INTERIOR_RESIDUAL_TOL: f64 = 1e-8;

/// Largest accepted backward error of a reported eigenpair.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Relative gap below which neighbouring eigenvalues form a cluster.
pub const CLUSTER_TOL: f64 = 5e-3;

/// Coefficients per region tag. A single field applies to every region.
#[derive(Debug, Clone)]
pub struct Materials {
    fields: Vec<MaterialField>,
}

impl Materials {
    pub fn uniform(m: MaterialField) -> Self {
        Materials { fields: vec![m] }
    }

    /// `fields[tag]` is used on triangles carrying `tag`.
    pub fn by_region(fields: Vec<MaterialField>) -> Self {
        assert!(!fields.is_empty());
        Materials { fields }
    }

    pub fn for_tag(&self, tag: u8) -> Option<&MaterialField> {
        if self.fields.len() == 1 {
            self.fields.first()
        } else {
            self.fields.get(tag as usize)
        }
    }
}

impl From<MaterialField> for Materials {
    fn from(m: MaterialField) -> Self {
        Materials::uniform(m)
    }
}

/// Right-hand side `f`, applied on region 0 only.
#[derive(Clone)]
pub enum Source {
    Function(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
    /// Nodal values of a P1 function on the mesh being assembled.
    Nodal(Vec<f64>),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Function(_) => f.write_str("Source::Function"),
            Source::Nodal(v) => write!(f, "Source::Nodal({} values)", v.len()),
        }
    }
}

impl Source {
    pub fn function<F: Fn(Point) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Source::Function(Arc::new(f))
    }
}

/// Node-level stiffness, mass and load for one mesh and coefficient set.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    mesh: Mesh,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub load: Vec<f64>,
}

impl AssembledSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }
}

struct Element {
    ke: [[f64; 3]; 3],
    me: [[f64; 3]; 3],
    fe: [f64; 3],
}

fn element(mesh: &Mesh, t: usize, m: &MaterialField, source: Option<&Source>) -> Result<Element> {
    let tri = mesh.triangles()[t];
    let p = tri.map(|i| mesh.nodes()[i]);
    let area = 0.5 * ((p[1] - p[0]).perp(&(p[2] - p[0])));
    if !(area > 0.0) {
        return Err(Error::Assembly {
            triangle: t,
            detail: "degenerate or inverted triangle".into(),
        });
    }
    // ∇φ_i = perp(p_k - p_j) / (2 area) for (i, j, k) cyclic
    let grads: [Point; 3] = std::array::from_fn(|i| {
        let (pj, pk) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        Point::new(pj.y - pk.y, pk.x - pj.x) / (2.0 * area)
    });
    let mut g_mean = Mat2::zeros();
    let mut me = [[0.0; 3]; 3];
    let mut fe = [0.0; 3];
    for bary in QUAD {
        let x = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
        let (g, q) = m.eval(x).map_err(|e| Error::Assembly {
            triangle: t,
            detail: e.to_string(),
        })?;
        let (lo, hi) = sym_eigenvalues(&g);
        if !(lo > 0.0 && hi.is_finite() && q >= 0.0 && q.is_finite()) {
            return Err(Error::Assembly {
                triangle: t,
                detail: format!(
                    "coefficients not elliptic at {:?}: eig(g) = ({lo}, {hi}), q = {q}",
                    (x.x, x.y)
                ),
            });
        }
        g_mean += g / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                me[i][j] += area / 3.0 * q * bary[i] * bary[j];
            }
        }
        if let Some(src) = source {
            let f = match src {
                Source::Function(f) => f(x),
                Source::Nodal(v) => bary[0] * v[tri[0]] + bary[1] * v[tri[1]] + bary[2] * v[tri[2]],
            };
            for i in 0..3 {
                fe[i] += area / 3.0 * f * bary[i];
            }
        }
    }
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = area * grads[i].dot(&(g_mean * grads[j]));
        }
    }
    Ok(Element { ke, me, fe })
}

/// Assembles `K`, `M` and `F`. The source acts on region-0 triangles only.
pub fn assemble(mesh: &Mesh, materials: &Materials, source: Option<&Source>) -> Result<AssembledSystem> {
    if let Some(Source::Nodal(v)) = source {
        if v.len() != mesh.num_nodes() {
            return Err(Error::Parameter(format!(
                "nodal source has {} values for {} nodes",
                v.len(),
                mesh.num_nodes()
            )));
        }
    }
    let tags = mesh.region_tag();
    let elements: Vec<Result<Element>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let m = materials.for_tag(tags[t]).ok_or_else(|| Error::Assembly {
                triangle: t,
                detail: format!("no material for region {}", tags[t]),
            })?;
            element(mesh, t, m, if tags[t] == 0 { source } else { None })
        })
        .collect();
    let n = mesh.num_nodes();
    let mut kt = Vec::with_capacity(9 * elements.len());
    let mut mt = Vec::with_capacity(9 * elements.len());
    let mut load = vec![0.0; n];
    for (t, el) in elements.into_iter().enumerate() {
        let el = el?;
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            load[tri[i]] += el.fe[i];
            for j in 0..3 {
                kt.push((tri[i], tri[j], el.ke[i][j]));
                mt.push((tri[i], tri[j], el.me[i][j]));
            }
        }
    }
    Ok(AssembledSystem {
        mesh: mesh.clone(),
        stiffness: CsrMatrix::from_triplets(n, n, kt),
        mass: CsrMatrix::from_triplets(n, n, mt),
        load,
    })
}

/// Constraint on the discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Natural (Neumann) boundary condition.
    None,
    /// Outer boundary values fixed to zero.
    Dirichlet,
    /// All outer boundary nodes share one degree of freedom.
    TiedBoundary,
}

/// Node to degree-of-freedom map: node `i` carries `coeff * x[dof]`, or
/// nothing when eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    entries: Vec<Option<(usize, f64)>>,
    n_dofs: usize,
    dense: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, constraint: Constraint) -> Self {
        let n = mesh.num_nodes();
        let mut on_boundary = vec![false; n];
        for &b in mesh.outer_boundary() {
            on_boundary[b] = true;
        }
        let mut entries = vec![None; n];
        let mut next = 0;
        for (i, e) in entries.iter_mut().enumerate() {
            if constraint == Constraint::None || !on_boundary[i] {
                *e = Some((next, 1.0));
                next += 1;
            }
        }
        let mut dense = Vec::new();
        if constraint == Constraint::TiedBoundary {
            for &b in mesh.outer_boundary() {
                entries[b] = Some((next, 1.0));
            }
            dense.push(next);
            next += 1;
        }
        DofMap {
            entries,
            n_dofs: next,
            dense,
        }
    }

    /// Arbitrary map; `dense` lists DOFs shared by many nodes.
    pub fn from_entries(entries: Vec<Option<(usize, f64)>>, n_dofs: usize, dense: Vec<usize>) -> Result<Self> {
        if entries.iter().flatten().any(|&(d, _)| d >= n_dofs) {
            return Err(Error::Internal("DOF index out of range".into()));
        }
        Ok(DofMap { entries, n_dofs, dense })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_nodes(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, node: usize) -> Option<(usize, f64)> {
        self.entries[node]
    }

    pub fn dense_dofs(&self) -> &[usize] {
        &self.dense
    }

    /// Nodal values of a DOF vector (zero on eliminated nodes).
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|e| e.map_or(0.0, |(d, c)| c * x[d])).collect()
    }

    /// `Pᵀ f` for a nodal vector `f`.
    pub fn restrict_vector(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs];
        for (e, v) in self.entries.iter().zip(f) {
            if let Some((d, c)) = e {
                out[*d] += c * v;
            }
        }
        out
    }

    /// `P_testᵀ A P_trial`.
    pub fn project(a: &CsrMatrix, test: &DofMap, trial: &DofMap) -> CsrMatrix {
        let t = a
            .triplets()
            .filter_map(|(i, j, v)| {
                let (ti, ci) = test.entries[i]?;
                let (tj, cj) = trial.entries[j]?;
                Some((ti, tj, ci * cj * v))
            })
            .collect();
        CsrMatrix::from_triplets(test.n_dofs, trial.n_dofs, t)
    }
}

/// Factorization of the interior block of `K - λM` shared by any number of
/// Dirichlet solves at the same `λ`.
#[derive(Debug)]
pub struct DirichletSolver<'a> {
    sys: &'a AssembledSystem,
    lambda: f64,
    interior: Vec<usize>,
    dof_of: Vec<Option<usize>>,
    operator: CsrMatrix,
    interior_block: CsrMatrix,
    factor: SkylineLdl,
}

impl<'a> DirichletSolver<'a> {
    pub fn new(sys: &'a AssembledSystem, lambda: f64) -> Result<Self> {
        let mesh = sys.mesh();
        let n = mesh.num_nodes();
        let mut dof_of = vec![None; n];
        let mut on_boundary = vec![false; n];
        for &b in mesh.outer_boundary() {
            on_boundary[b] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&i| !on_boundary[i]).collect();
        for (d, &i) in interior.iter().enumerate() {
            dof_of[i] = Some(d);
        }
        let operator = sys.stiffness.linear_combination(1.0, &sys.mass, -lambda);
        let t = operator
            .triplets()
            .filter_map(|(i, j, v)| Some((dof_of[i]?, dof_of[j]?, v)))
            .collect();
        let interior_block = CsrMatrix::from_triplets(interior.len(), interior.len(), t);
        let factor = SkylineLdl::factor(&interior_block, &[]).map_err(|f| Error::Resonance {
            lambda,
            detail: format!(
                "relative pivot {:.3e} at node {} (Dirichlet eigenvalue nearby)",
                f.pivot / f.scale,
                interior[f.row]
            ),
        })?;
        Ok(DirichletSolver {
            sys,
            lambda,
            interior,
            dof_of,
            operator,
            interior_block,
            factor,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mesh(&self) -> &Mesh {
        self.sys.mesh()
    }

    /// Number of interior unknowns.
    pub fn dofs(&self) -> usize {
        self.interior.len()
    }

    /// Nodal solution with the given values on the outer boundary nodes (in
    /// `outer_boundary` order).
    pub fn solve(&self, boundary_values: &[f64]) -> Result<Vec<f64>> {
        let mesh = self.sys.mesh();
        let ring = mesh.outer_boundary();
        if boundary_values.len() != ring.len() {
            return Err(Error::Parameter(format!(
                "{} boundary values for {} boundary nodes",
                boundary_values.len(),
                ring.len()
            )));
        }
        let mut u = vec![0.0; mesh.num_nodes()];
        for (&b, &v) in ring.iter().zip(boundary_values) {
            u[b] = v;
        }
        let mut rhs: Vec<f64> = self.interior.iter().map(|&i| -self.sys.load[i]).collect();
        for &b in ring {
            if u[b] == 0.0 {
                continue;
            }
            for (j, v) in self.operator.row(b) {
                // symmetric operator: column b of row j equals row b column j
                if let Some(d) = self.dof_of[j] {
                    rhs[d] -= v * u[b];
                }
            }
        }
        let x = self.factor.solve_refined(&self.interior_block, &rhs);
        for (&i, xi) in self.interior.iter().zip(x) {
            u[i] = xi;
        }
        Ok(u)
    }

    /// Boundary functional `(K - λM) u + F` restricted to the outer ring.
    pub fn boundary_residual(&self, u: &[f64]) -> Vec<f64> {
        residual_on(self.sys, &self.operator, u, self.sys.mesh().outer_boundary())
    }
}

fn residual_on(sys: &AssembledSystem, operator: &CsrMatrix, u: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .map(|&i| operator.row(i).map(|(j, v)| v * u[j]).sum::<f64>() + sys.load[i])
        .collect()
}

/// Solves the Dirichlet problem at `λ`; returns nodal values.
pub fn solve_dirichlet(sys: &AssembledSystem, boundary_values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    DirichletSolver::new(sys, lambda)?.solve(boundary_values)
}

/// Mass matrix of the piecewise linear functions on the closed outer
/// boundary polygon (in `outer_boundary` order).
pub fn boundary_mass(mesh: &Mesh) -> CsrMatrix {
    let ring = mesh.outer_boundary();
    let nb = ring.len();
    let mut t = Vec::with_capacity(4 * nb);
    for k in 0..nb {
        let l = (mesh.nodes()[ring[(k + 1) % nb]] - mesh.nodes()[ring[k]]).norm();
        let (a, b) = (k, (k + 1) % nb);
        t.push((a, a, l / 3.0));
        t.push((b, b, l / 3.0));
        t.push((a, b, l / 6.0));
        t.push((b, a, l / 6.0));
    }
    CsrMatrix::from_triplets(nb, nb, t)
}

/// Variationally consistent conormal derivative `Σ n_i g^{ij} ∂_j u` at the
/// outer boundary nodes.
///
/// The residual functional of the interior equations tested with boundary
/// hat functions is converted to nodal values through the boundary mass
/// matrix.
pub fn boundary_flux(sys: &AssembledSystem, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mesh = sys.mesh();
    if u.len() != mesh.num_nodes() {
        return Err(Error::Parameter(format!(
            "{} values for {} nodes",
            u.len(),
            mesh.num_nodes()
        )));
    }
    let operator = sys.stiffness.linear_combination(1.0, &sys.mass, -lambda);
    let mut on_boundary = vec![false; mesh.num_nodes()];
    for &b in mesh.outer_boundary() {
        on_boundary[b] = true;
    }
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in (0..mesh.num_nodes()).filter(|&i| !on_boundary[i]) {
        let mut r = sys.load[i];
        let mut s = sys.load[i].abs();
        for (j, v) in operator.row(i) {
            r += v * u[j];
            s += (v * u[j]).abs();
        }
        worst = worst.max(r.abs());
        scale = scale.max(s);
    }
    if worst > INTERIOR_RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Inconsistency(format!(
            "interior residual {worst:.3e} exceeds {INTERIOR_RESIDUAL_TOL:e} relative to {scale:.3e}"
        )));
    }
    let r = residual_on(sys, &operator, u, mesh.outer_boundary());
    linalg::conjugate_gradient(&boundary_mass(mesh), &r, 1e-14, 10 * r.len() + 50)
}

/// Eigenpairs of `K v = λ M v` on a constrained space.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// DOF vectors; map to nodes with `dof_map.expand`.
    pub vectors: Vec<Vec<f64>>,
    /// Backward errors `|Kv - λMv| / ((|K| + |λ||M|)|v|)`.
    pub residuals: Vec<f64>,
    /// Index groups of values within [`CLUSTER_TOL`] of each other.
    pub clusters: Vec<Vec<usize>>,
    pub dof_map: DofMap,
}

impl EigenResult {
    pub fn nodal_vector(&self, k: usize) -> Vec<f64> {
        self.dof_map.expand(&self.vectors[k])
    }
}

/// Groups ascending values whose consecutive relative gaps are below `tol`.
/// Values within `zero_tol` of zero form their own group.
pub fn cluster_values(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-8 * scale.max(1.0);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let joins = i > 0 && {
            let prev = values[i - 1];
            if prev.abs() <= zero_tol || v.abs() <= zero_tol {
                prev.abs() <= zero_tol && v.abs() <= zero_tol
            } else {
                (v - prev).abs() <= tol * v.abs().max(prev.abs())
            }
        };
        if joins {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Smallest `count` eigenpairs of `(K, M)` under `constraint`.
pub fn solve_eig(sys: &AssembledSystem, count: usize, constraint: Constraint) -> Result<EigenResult> {
    let map = DofMap::new(sys.mesh(), constraint);
    solve_eig_mapped(sys, count, map)
}

pub(crate) fn solve_eig_mapped(sys: &AssembledSystem, count: usize, map: DofMap) -> Result<EigenResult> {
    if count == 0 || count > map.n_dofs() / 4 {
        return Err(Error::Parameter(format!(
            "eigenpair count must lie in 1..={} for {} DOFs, got {count}",
            map.n_dofs() / 4,
            map.n_dofs()
        )));
    }
    let k = DofMap::project(&sys.stiffness, &map, &map);
    let m = DofMap::project(&sys.mass, &map, &map);
    if m.diagonal().iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Solver(
            "mass matrix is not positive definite on the constrained space".into(),
        ));
    }
    let eig = linalg::smallest_eigenpairs(&k, &m, count, map.dense_dofs(), EigenOptions::default())?;
    finish_eigen(eig, map)
}

pub(crate) fn finish_eigen(eig: linalg::PencilEigen, map: DofMap) -> Result<EigenResult> {
    if let Some((i, r)) = eig.residuals.iter().enumerate().find(|(_, r)| **r > EIGEN_RESIDUAL_TOL) {
        return Err(Error::Solver(format!("eigenpair {i} has residual {r:.3e}")));
    }
    Ok(EigenResult {
        clusters: cluster_values(&eig.values, CLUSTER_TOL),
        values: eig.values,
        vectors: eig.vectors,
        residuals: eig.residuals,
        dof_map: map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{bessel_j, bessel_j_prime, bessel_root};
    use crate::meshgen::{make_disk, refine};

    fn free() -> Materials {
        MaterialField::free().into()
    }

    fn boundary_data(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
        mesh.outer_boundary().iter().map(|&b| f(mesh.nodes()[b])).collect()
    }

    #[test]
    fn partition_of_unity_and_kernel() {
        let mesh = make_disk(1.0, 0.1, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        let total: f64 = sys.mass.triplets().map(|t| t.2).sum();
        assert!((total - mesh.total_area()).abs() <= 1e-10);
        let k1 = sys.stiffness.mul_vec(&vec![1.0; mesh.num_nodes()]);
        assert!(k1.iter().all(|v| v.abs() <= 1e-10));
        assert!(sys.stiffness.asymmetry() <= 1e-12 * sys.stiffness.max_abs());
        assert!(sys.mass.asymmetry() <= 1e-12 * sys.mass.max_abs());
        let doubled = assemble(&mesh, &MaterialField::isotropic(2.0, 1.0).unwrap().into(), None).unwrap();
        for ((_, _, a), (_, _, b)) in sys.stiffness.triplets().zip(doubled.stiffness.triplets()) {
            assert_eq!(2.0 * a, b);
        }
    }

    #[test]
    fn linear_and_constant_data_are_reproduced() {
        let mesh = make_disk(2.0, 0.2, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        let u = solve_dirichlet(&sys, &boundary_data(&mesh, |p| p.x), 0.0).unwrap();
        for (p, v) in mesh.nodes().iter().zip(&u) {
            assert!((p.x - v).abs() <= 1e-10);
        }
        let one = solve_dirichlet(&sys, &vec![1.0; mesh.outer_boundary().len()], 0.0).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).abs() <= 1e-12));
        let flux = boundary_flux(&sys, &one, 0.0).unwrap();
        assert!(flux.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn manufactured_bessel_solution_converges() {
        let omega = 1.0;
        let exact = |p: Point| bessel_j(0, omega * p.norm()).unwrap();
        let mut mesh = make_disk(2.0, 0.2, None).unwrap();
        let mut errors = Vec::new();
        for _ in 0..3 {
            let sys = assemble(&mesh, &free(), None).unwrap();
            let solver = DirichletSolver::new(&sys, omega * omega).unwrap();
            let u = solver.solve(&boundary_data(&mesh, exact)).unwrap();
            // Galerkin orthogonality on interior rows
            let op = sys.stiffness.linear_combination(1.0, &sys.mass, -omega * omega);
            let r = op.mul_vec(&u);
            let boundary: std::collections::HashSet<usize> = mesh.outer_boundary().iter().copied().collect();
            for (i, ri) in r.iter().enumerate() {
                if !boundary.contains(&i) {
                    assert!(ri.abs() <= 1e-10);
                }
            }
            let err = mesh
                .nodes()
                .iter()
                .zip(&u)
                .map(|(p, v)| (exact(*p) - v).abs())
                .fold(0.0, f64::max);
            errors.push(err);
            mesh = refine(&mesh);
        }
        assert!(
            errors[0] / errors[1] >= 3.0 && errors[1] / errors[2] >= 3.0,
            "{errors:?}"
        );
    }

    #[test]
    fn flux_of_linear_function_converges() {
        let mut mesh = make_disk(2.0, 0.2, None).unwrap();
        let mut errors = Vec::new();
        for _ in 0..3 {
            let sys = assemble(&mesh, &free(), None).unwrap();
            let u = solve_dirichlet(&sys, &boundary_data(&mesh, |p| p.x), 0.0).unwrap();
            let flux = boundary_flux(&sys, &u, 0.0).unwrap();
            let err = mesh
                .outer_boundary()
                .iter()
                .zip(&flux)
                .map(|(&b, f)| (mesh.nodes()[b].x / 2.0 - f).abs())
                .fold(0.0, f64::max);
            errors.push(err);
            mesh = refine(&mesh);
        }
        assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
        assert!(errors[2] < 0.01);
    }

    #[test]
    fn flux_of_radial_helmholtz_solution() {
        let omega = 1.0;
        let mesh = make_disk(2.0, 0.05, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        let u = solve_dirichlet(&sys, &boundary_data(&mesh, |p| bessel_j(0, p.norm()).unwrap()), 1.0).unwrap();
        let flux = boundary_flux(&sys, &u, 1.0).unwrap();
        let want = omega * bessel_j_prime(0, 2.0 * omega).unwrap();
        for f in flux {
            assert!((f - want).abs() <= 0.02 * want.abs(), "{f} vs {want}");
        }
    }

    #[test]
    fn inconsistent_solution_is_rejected() {
        let mesh = make_disk(1.0, 0.2, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|p| p.x * p.x).collect();
        assert!(matches!(boundary_flux(&sys, &u, 0.0), Err(Error::Inconsistency(_))));
    }

    #[test]
    fn resonance_is_detected() {
        let mesh = make_disk(1.0, 0.1, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        let eig = solve_eig(&sys, 1, Constraint::Dirichlet).unwrap();
        let err = DirichletSolver::new(&sys, eig.values[0]).unwrap_err();
        assert!(matches!(err, Error::Resonance { .. }), "{err}");
    }

    #[test]
    fn disk_spectra() {
        let mesh = make_disk(1.0, 0.03, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();

        let neumann = solve_eig(&sys, 4, Constraint::None).unwrap();
        assert!(neumann.values[0].abs() <= 1e-8);
        let v0 = neumann.nodal_vector(0);
        assert!(v0.iter().all(|v| (v - v0[0]).abs() <= 1e-8 * v0[0].abs()));

        let dirichlet = solve_eig(&sys, 2, Constraint::Dirichlet).unwrap();
        let j01 = bessel_root(0, 1).unwrap();
        assert!((dirichlet.values[0] / (j01 * j01) - 1.0).abs() <= 0.01);

        let tied = solve_eig(&sys, 6, Constraint::TiedBoundary).unwrap();
        assert!(tied.values[0].abs() <= 1e-8);
        let j11 = bessel_root(1, 1).unwrap();
        assert_eq!(tied.clusters[1], vec![1, 2, 3]);
        for k in 1..4 {
            assert!((tied.values[k].sqrt() / j11 - 1.0).abs() <= 0.01);
        }
        let j21 = bessel_root(2, 1).unwrap();
        assert!((tied.values[4].sqrt() / j21 - 1.0).abs() <= 0.01);
        assert!(tied.residuals.iter().all(|r| *r <= EIGEN_RESIDUAL_TOL));
    }

    #[test]
    fn tied_eigenvalues_decrease_under_refinement() {
        let coarse = make_disk(1.0, 0.1, None).unwrap();
        let fine = refine(&coarse);
        let a = solve_eig(&assemble(&coarse, &free(), None).unwrap(), 6, Constraint::TiedBoundary).unwrap();
        let b = solve_eig(&assemble(&fine, &free(), None).unwrap(), 6, Constraint::TiedBoundary).unwrap();
        let oracle = [
            bessel_root(1, 1),
            bessel_root(1, 1),
            bessel_root(1, 1),
            bessel_root(2, 1),
            bessel_root(2, 1),
        ];
        for k in 1..6 {
            let want = oracle[k - 1].as_ref().unwrap().powi(2);
            assert!(b.values[k] <= a.values[k] * (1.0 + 1e-3), "{k}");
            assert!(b.values[k] >= want * (1.0 - 1e-3), "{k}: {} < {want}", b.values[k]);
        }
    }

    #[test]
    fn clusters_group_close_values() {
        assert_eq!(
            cluster_values(&[0.0, 1e-12, 14.68, 14.69, 14.70, 26.4], 5e-3),
            vec![vec![0, 1], vec![2, 3, 4], vec![5]]
        );
    }

    #[test]
    fn count_limit_is_enforced() {
        let mesh = make_disk(1.0, 0.25, None).unwrap();
        let sys = assemble(&mesh, &free(), None).unwrap();
        assert!(matches!(
            solve_eig(&sys, mesh.num_nodes(), Constraint::None),
            Err(Error::Parameter(_))
        ));
    }

    mod props {
        use super::super::*;
        use crate::meshgen::make_ellipse;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn constants_span_the_stiffness_kernel(a in 0.6f64..1.5, b in 0.6f64..1.5, c in 0.2f64..5.0) {
                let mesh = make_ellipse(a, b, 0.15 * a.min(b)).unwrap();
                let sys = assemble(&mesh, &MaterialField::diagonal(c, 1.0 / c, 2.0).unwrap().into(), None).unwrap();
                let ones = vec![1.0; mesh.num_nodes()];
                let k1 = sys.stiffness.mul_vec(&ones);
                prop_assert!(k1.iter().all(|v| v.abs() <= 1e-10 * c.max(1.0 / c)));
                let m1: f64 = sys.mass.mul_vec(&ones).iter().sum();
                prop_assert!((m1 - 2.0 * mesh.total_area()).abs() <= 1e-12 * m1);
                prop_assert!(sys.stiffness.asymmetry() <= 1e-14 && sys.mass.asymmetry() <= 1e-14);
            }
        }
    }
}
