//! Deterministic ring meshes of disks, annuli and ellipses.
//!
//! Nodes are laid out on concentric rings; consecutive rings are stitched
//! with the shorter-diagonal rule, so any pair of ring counts produces a
//! conforming strip. Interface circles are rings, hence exactly
//! representable.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

pub const MESH_FORMAT_VERSION: u32 = 1;

const DUPLICATE_TOL: f64 = 1e-12;

/// Exact boundary curve used to project new boundary nodes on refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

impl Curve {
    /// Closest-in-parameter point on the curve.
    pub fn project(&self, p: Point) -> Point {
        match *self {
            Curve::Circle { radius } => {
                let r = p.norm();
                if r == 0.0 {
                    p
                } else {
                    p * (radius / r)
                }
            }
            Curve::Ellipse { a, b } => {
                let t = (p.y / b).atan2(p.x / a);
                Point::new(a * t.cos(), b * t.sin())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub outer: Curve,
    pub inner: Option<Curve>,
    pub interface: Option<Curve>,
}

/// Planar triangulation with an ordered outer boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    outer_boundary: Vec<usize>,
    inner_boundary: Option<Vec<usize>>,
    region_tag: Vec<u8>,
    geometry: Option<Geometry>,
}

impl Mesh {
    /// Builds a mesh and checks its structural invariants.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        outer_boundary: Vec<usize>,
        inner_boundary: Option<Vec<usize>>,
        region_tag: Vec<u8>,
        geometry: Option<Geometry>,
    ) -> Result<Self> {
        let mesh = Mesh {
            nodes,
            triangles,
            outer_boundary,
            inner_boundary,
            region_tag,
            geometry,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn outer_boundary(&self) -> &[usize] {
        &self.outer_boundary
    }

    pub fn inner_boundary(&self) -> Option<&[usize]> {
        self.inner_boundary.as_deref()
    }

    pub fn region_tag(&self) -> &[u8] {
        &self.region_tag
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb - pa).perp(&(pc - pa)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(i, j)| (self.nodes[i] - self.nodes[j]).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut worst = 180.0f64;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[tri[k]];
                let u = self.nodes[tri[(k + 1) % 3]] - p;
                let v = self.nodes[tri[(k + 2) % 3]] - p;
                let cos = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
                worst = worst.min(cos.acos().to_degrees());
            }
        }
        worst
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| ordered(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `nodes - edges + triangles`.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    /// Nodes touched by triangles of both region 0 and region 1, sorted.
    pub fn interface_nodes(&self) -> Vec<usize> {
        let mut seen = vec![0u8; self.nodes.len()];
        for (tri, &tag) in self.triangles.iter().zip(&self.region_tag) {
            let bit = if tag == 0 { 1 } else { 2 };
            for &n in tri {
                seen[n] |= bit;
            }
        }
        (0..self.nodes.len()).filter(|&n| seen[n] == 3).collect()
    }

    /// Nodes used by any triangle carrying `tag`, sorted.
    pub fn region_nodes(&self, tag: u8) -> Vec<usize> {
        let mut used = vec![false; self.nodes.len()];
        for (tri, &t) in self.triangles.iter().zip(&self.region_tag) {
            if t == tag {
                for &n in tri {
                    used[n] = true;
                }
            }
        }
        (0..self.nodes.len()).filter(|&n| used[n]).collect()
    }

    /// Extracts the triangles carrying `tag` as a standalone mesh whose outer
    /// boundary is the region's outer interface ring. Returns the mesh and,
    /// for each of its nodes, the index of that node in `self`.
    pub fn submesh(&self, tag: u8) -> Result<(Mesh, Vec<usize>)> {
        let parent = self.region_nodes(tag);
        if parent.is_empty() {
            return Err(Error::Geometry(format!("no triangles with region tag {tag}")));
        }
        let mut local = vec![usize::MAX; self.nodes.len()];
        for (i, &p) in parent.iter().enumerate() {
            local[p] = i;
        }
        let mut triangles = Vec::new();
        for (tri, &t) in self.triangles.iter().zip(&self.region_tag) {
            if t == tag {
                triangles.push([local[tri[0]], local[tri[1]], local[tri[2]]]);
            }
        }
        let nodes: Vec<Point> = parent.iter().map(|&p| self.nodes[p]).collect();
        let ring = boundary_ring(&triangles, nodes.len())?;
        let outer = self
            .geometry
            .and_then(|g| g.interface)
            .filter(|_| tag == 0)
            .or_else(|| self.geometry.map(|g| g.outer));
        let geometry = outer.map(|outer| Geometry {
            outer,
            inner: None,
            interface: None,
        });
        let n_tri = triangles.len();
        let mesh = Mesh::new(nodes, triangles, ring, None, vec![0; n_tri], geometry)?;
        Ok((mesh, parent))
    }

    /// Checks the invariants listed on the type.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.region_tag.len() != self.triangles.len() {
            return Err(Error::Geometry("region_tag length differs from triangle count".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::Geometry(format!("triangle {t} references a missing node")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Geometry(format!("triangle {t} has non-positive area")));
            }
        }
        let edges = self.edges();
        let check_ring = |ring: &[usize], what: &str| -> Result<()> {
            if ring.len() < 3 {
                return Err(Error::Geometry(format!("{what} boundary has fewer than 3 nodes")));
            }
            let mut sorted = ring.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ring.len() || sorted.last().is_some_and(|&m| m >= n) {
                return Err(Error::Geometry(format!("{what} boundary is not a simple ring")));
            }
            for k in 0..ring.len() {
                let e = ordered(ring[k], ring[(k + 1) % ring.len()]);
                if edges.binary_search(&e).is_err() {
                    return Err(Error::Geometry(format!(
                        "{what} boundary nodes {} and {} share no triangle",
                        e.0, e.1
                    )));
                }
            }
            Ok(())
        };
        check_ring(&self.outer_boundary, "outer")?;
        if let Some(inner) = &self.inner_boundary {
            check_ring(inner, "inner")?;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.nodes[a].x.total_cmp(&self.nodes[b].x));
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if self.nodes[j].x - self.nodes[i].x > DUPLICATE_TOL {
                    break;
                }
                if (self.nodes[j] - self.nodes[i]).norm() <= DUPLICATE_TOL {
                    return Err(Error::Geometry(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the versioned mesh JSON format (17 significant digits).
    pub fn to_json(&self) -> String {
        let mut s = String::with_capacity(64 * self.nodes.len());
        let _ = write!(s, "{{\"version\":{MESH_FORMAT_VERSION},\"nodes\":[");
        for (i, p) in self.nodes.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{:.16e},{:.16e}]", p.x, p.y);
        }
        s.push_str("],\"triangles\":[");
        for (i, t) in self.triangles.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{},{},{}]", t[0], t[1], t[2]);
        }
        s.push_str("],\"outer_boundary\":");
        s.push_str(&serde_json::to_string(&self.outer_boundary).expect("index list"));
        s.push_str(",\"inner_boundary\":");
        s.push_str(&serde_json::to_string(&self.inner_boundary).expect("index list"));
        s.push_str(",\"region_tag\":");
        s.push_str(&serde_json::to_string(&self.region_tag).expect("tag list"));
        s.push_str(",\"geometry\":");
        s.push_str(&serde_json::to_string(&self.geometry).expect("geometry"));
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("mesh file: {e}")))?;
        if file.version != MESH_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported mesh version {}", file.version)));
        }
        Mesh::new(
            file.nodes.iter().map(|p| Point::new(p[0], p[1])).collect(),
            file.triangles,
            file.outer_boundary,
            file.inner_boundary,
            file.region_tag,
            file.geometry,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Deserialize)]
struct MeshFile {
    version: u32,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    outer_boundary: Vec<usize>,
    inner_boundary: Option<Vec<usize>>,
    region_tag: Vec<u8>,
    #[serde(default)]
    geometry: Option<Geometry>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Outer boundary ring (counterclockwise) of a simply connected triangulation.
fn boundary_ring(triangles: &[[usize; 3]], n: usize) -> Result<Vec<usize>> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            *count.entry(ordered(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    // Directed boundary edges keep the triangle's counterclockwise sense.
    let mut next = vec![usize::MAX; n];
    let mut start = usize::MAX;
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&ordered(a, b)] == 1 {
                next[a] = b;
                start = start.min(a);
            }
        }
    }
    if start == usize::MAX {
        return Err(Error::Geometry("triangulation has no boundary".into()));
    }
    let mut ring = vec![start];
    let mut cur = next[start];
    while cur != start {
        if cur == usize::MAX || ring.len() > n {
            return Err(Error::Geometry("boundary is not a single closed ring".into()));
        }
        ring.push(cur);
        cur = next[cur];
    }
    Ok(ring)
}

struct Ring {
    radius: f64,
    count: usize,
    offset: f64,
}

/// Assembles nodes and triangles from a list of rings, innermost first.
/// With `center`, a node at the origin is fanned to the first ring.
/// Returns (nodes, triangles, first node index of each ring).
fn stitch_rings(rings: &[Ring], center: bool) -> (Vec<Point>, Vec<[usize; 3]>, Vec<usize>) {
    let mut nodes = Vec::new();
    let mut starts = Vec::with_capacity(rings.len());
    if center {
        nodes.push(Point::new(0.0, 0.0));
    }
    for ring in rings {
        starts.push(nodes.len());
        for i in 0..ring.count {
            let theta = ring.offset + 2.0 * PI * i as f64 / ring.count as f64;
            nodes.push(Point::new(ring.radius * theta.cos(), ring.radius * theta.sin()));
        }
    }
    let mut triangles = Vec::new();
    if center {
        let n = rings[0].count;
        for i in 0..n {
            triangles.push([0, starts[0] + i, starts[0] + (i + 1) % n]);
        }
    }
    for k in 1..rings.len() {
        stitch_strip(
            &nodes,
            starts[k - 1],
            rings[k - 1].count,
            starts[k],
            rings[k].count,
            &mut triangles,
        );
    }
    (nodes, triangles, starts)
}

fn stitch_strip(nodes: &[Point], a0: usize, na: usize, b0: usize, nb: usize, out: &mut Vec<[usize; 3]>) {
    let a = |i: usize| a0 + i % na;
    let b = |j: usize| b0 + j % nb;
    let angle = |p: Point| p.y.atan2(p.x);
    let theta_a = angle(nodes[a0]);
    // outer-ring node closest in angle to the first inner node
    let mut j0 = 0;
    let mut best = f64::INFINITY;
    for j in 0..nb {
        let mut d = (angle(nodes[b0 + j]) - theta_a).abs();
        d = d.min(2.0 * PI - d);
        if d < best {
            best = d;
            j0 = j;
        }
    }
    let (mut i, mut j) = (0usize, j0);
    let (mut di, mut dj) = (0usize, 0usize);
    while di < na || dj < nb {
        let advance_a = if di == na {
            false
        } else if dj == nb {
            true
        } else {
            let diag_a = (nodes[a(i + 1)] - nodes[b(j)]).norm();
            let diag_b = (nodes[b(j + 1)] - nodes[a(i)]).norm();
            diag_a <= diag_b
        };
        if advance_a {
            out.push([a(i), b(j), a(i + 1)]);
            i += 1;
            di += 1;
        } else {
            out.push([a(i), b(j), b(j + 1)]);
            j += 1;
            dj += 1;
        }
    }
}

fn ring_count(radius: f64, spacing: f64) -> usize {
    ((2.0 * PI * radius / spacing).round() as usize).max(6)
}

/// Radii and spacings of rings covering `[r0, r1]` with step close to `h`.
fn segment_radii(r0: f64, r1: f64, h: f64) -> (Vec<f64>, f64) {
    let layers = ((r1 - r0) / h - 1e-9).ceil().max(1.0) as usize;
    let step = (r1 - r0) / layers as f64;
    ((1..=layers).map(|k| r0 + step * k as f64).collect(), step)
}

fn rings_for(radii: &[f64], steps: &[f64]) -> Vec<Ring> {
    radii
        .iter()
        .zip(steps)
        .enumerate()
        .map(|(k, (&r, &s))| {
            let count = ring_count(r, s);
            Ring {
                radius: r,
                count,
                offset: if k % 2 == 1 { PI / count as f64 } else { 0.0 },
            }
        })
        .collect()
}

/// Disk of `radius` centered at the origin, optionally with a node ring on
/// the circle of `interface_radius` separating region 0 (inside) from
/// region 1 (outside).
pub fn make_disk(radius: f64, h: f64, interface_radius: Option<f64>) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("disk radius must be positive, got {radius}")));
    }
    if !(h > 0.0 && h <= radius / 4.0) {
        return Err(Error::Parameter(format!("h must lie in (0, radius/4], got {h}")));
    }
    if let Some(r1) = interface_radius {
        if !(r1 > 0.0 && r1 < radius) {
            return Err(Error::Parameter(format!(
                "interface radius must lie in (0, {radius}), got {r1}"
            )));
        }
        if r1 < h || radius - r1 < h {
            return Err(Error::Parameter(format!(
                "interface radius {r1} leaves a layer thinner than h = {h}"
            )));
        }
    }
    let (mut radii, mut steps) = (Vec::new(), Vec::new());
    let mut interface_ring = None;
    match interface_radius {
        None => {
            let (r, s) = segment_radii(0.0, radius, h);
            steps.extend(std::iter::repeat_n(s, r.len()));
            radii = r;
        }
        Some(r1) => {
            let (ri, si) = segment_radii(0.0, r1, h);
            let (ro, so) = segment_radii(r1, radius, h);
            interface_ring = Some(ri.len() - 1);
            steps.extend(std::iter::repeat_n(si, ri.len()));
            steps.extend(std::iter::repeat_n(so, ro.len()));
            let last = steps.len();
            steps[ri.len() - 1] = si.min(so);
            debug_assert_eq!(last, ri.len() + ro.len());
            radii.extend(ri);
            radii.extend(ro);
        }
    }
    let rings = rings_for(&radii, &steps);
    let (nodes, triangles, starts) = stitch_rings(&rings, true);
    let outer_start = *starts.last().expect("at least one ring");
    let outer_boundary: Vec<usize> = (outer_start..nodes.len()).collect();
    let region_tag = match interface_ring {
        None => vec![0; triangles.len()],
        Some(k) => {
            let split = starts[k] + rings[k].count;
            triangles
                .iter()
                .map(|t| if t.iter().all(|&i| i < split) { 0 } else { 1 })
                .collect()
        }
    };
    Mesh::new(
        nodes,
        triangles,
        outer_boundary,
        None,
        region_tag,
        Some(Geometry {
            outer: Curve::Circle { radius },
            inner: None,
            interface: interface_radius.map(|radius| Curve::Circle { radius }),
        }),
    )
}

/// Annulus `inner < |x| < outer`; the inner boundary ring is listed
/// counterclockwise like the outer one.
pub fn make_annulus(inner: f64, outer: f64, h: f64) -> Result<Mesh> {
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::Parameter(format!(
            "annulus needs 0 < inner < outer, got {inner}, {outer}"
        )));
    }
    if !(h > 0.0 && h <= (outer - inner) / 2.0) {
        return Err(Error::Parameter(format!("h must lie in (0, (outer-inner)/2], got {h}")));
    }
    let (r, step) = segment_radii(inner, outer, h);
    let mut radii = vec![inner];
    radii.extend(r);
    let steps = vec![step; radii.len()];
    let rings = rings_for(&radii, &steps);
    let (nodes, triangles, starts) = stitch_rings(&rings, false);
    let inner_boundary: Vec<usize> = (0..rings[0].count).collect();
    let outer_boundary: Vec<usize> = (*starts.last().unwrap()..nodes.len()).collect();
    let n_tri = triangles.len();
    Mesh::new(
        nodes,
        triangles,
        outer_boundary,
        Some(inner_boundary),
        vec![0; n_tri],
        Some(Geometry {
            outer: Curve::Circle { radius: outer },
            inner: Some(Curve::Circle { radius: inner }),
            interface: None,
        }),
    )
}

/// Ellipse `x²/a² + y²/b² <= 1`: a unit-disk ring mesh stretched by
/// `(a, b)` with boundary nodes projected onto the exact ellipse.
pub fn make_ellipse(a: f64, b: f64, h: f64) -> Result<Mesh> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Parameter(format!(
            "ellipse semi-axes must be positive, got {a}, {b}"
        )));
    }
    if !(h > 0.0 && h <= a.min(b) / 4.0) {
        return Err(Error::Parameter(format!("h must lie in (0, min(a,b)/4], got {h}")));
    }
    let disk = make_disk(1.0, h / a.max(b), None)?;
    let curve = Curve::Ellipse { a, b };
    let mut nodes: Vec<Point> = disk.nodes.iter().map(|p| Point::new(a * p.x, b * p.y)).collect();
    for &i in &disk.outer_boundary {
        nodes[i] = curve.project(nodes[i]);
    }
    Mesh::new(
        nodes,
        disk.triangles,
        disk.outer_boundary,
        None,
        disk.region_tag,
        Some(Geometry {
            outer: curve,
            inner: None,
            interface: None,
        }),
    )
}

/// Composite mesh of the disk of radius 2 for the regularized cloak with
/// parameter `eps`.
///
/// Region 0 is the unit disk meshed like `make_disk(1, h)`. The shell is the
/// image under the radial map `rho -> a + s*rho` (`a = 2(1-eps)/(2-eps)`,
/// `s = 1/(2-eps)`) of geometrically graded rings on `eps <= rho <= 2`, so
/// its elements are shape-regular in the pre-image frame and aligned with
/// the shell's anisotropy. The first shell layer is thinner than `eps/4`.
pub fn make_graded_cloak_disk(eps: f64, h: f64) -> Result<Mesh> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::Parameter(format!("h must lie in (0, 0.25], got {h}")));
    }
    let (inner_radii, inner_step) = segment_radii(0.0, 1.0, h);
    let n_interface = ring_count(1.0, inner_step);
    let a = 2.0 * (1.0 - eps) / (2.0 - eps);
    let s = 1.0 / (2.0 - eps);
    let to_y = |rho: f64| a + s * rho;

    // Pre-image radii: step = min(tangential spacing, h/s).
    let mut rho = vec![eps];
    let mut counts = vec![n_interface];
    loop {
        let r = *rho.last().unwrap();
        let n = *counts.last().unwrap();
        let step = (r * 2.0 * PI / n as f64).min(inner_step / s);
        let next = r + step;
        if next >= 2.0 - 0.5 * step {
            break;
        }
        rho.push(next);
        counts.push(n.max(ring_count(to_y(next), inner_step)));
    }
    let last = *rho.last().unwrap();
    let stretch = (2.0 - eps) / (last - eps).max(f64::MIN_POSITIVE);
    let mut shell: Vec<f64> = rho.iter().map(|&r| eps + (r - eps) * stretch).collect();
    if shell.len() == 1 {
        shell.push(2.0);
        counts.push(ring_count(2.0, inner_step));
    } else {
        *shell.last_mut().unwrap() = 2.0;
    }

    let mut rings = rings_for(&inner_radii, &vec![inner_step; inner_radii.len()]);
    let interface_ring = rings.len() - 1;
    rings[interface_ring].count = n_interface;
    for (k, (&r, &n)) in shell.iter().zip(&counts).enumerate().skip(1) {
        let radius = if k == shell.len() - 1 { 2.0 } else { to_y(r) };
        rings.push(Ring {
            radius,
            count: n,
            offset: if k % 2 == 1 { PI / n as f64 } else { 0.0 },
        });
    }
    let (nodes, triangles, starts) = stitch_rings(&rings, true);
    let split = starts[interface_ring] + rings[interface_ring].count;
    let region_tag = triangles
        .iter()
        .map(|t| if t.iter().all(|&i| i < split) { 0 } else { 1 })
        .collect();
    let outer_boundary: Vec<usize> = (*starts.last().unwrap()..nodes.len()).collect();
    Mesh::new(
        nodes,
        triangles,
        outer_boundary,
        None,
        region_tag,
        Some(Geometry {
            outer: Curve::Circle { radius: 2.0 },
            inner: None,
            interface: Some(Curve::Circle { radius: 1.0 }),
        }),
    )
}

/// Radial width of the thinnest layer of region-1 triangles touching the
/// interface ring.
pub fn first_shell_layer_width(mesh: &Mesh) -> Option<f64> {
    let iface = mesh.interface_nodes();
    if iface.is_empty() {
        return None;
    }
    let mut on_iface = vec![false; mesh.num_nodes()];
    for &i in &iface {
        on_iface[i] = true;
    }
    let r_iface = iface.iter().map(|&i| mesh.nodes[i].norm()).sum::<f64>() / iface.len() as f64;
    let mut width = f64::INFINITY;
    for (tri, &tag) in mesh.triangles.iter().zip(&mesh.region_tag) {
        if tag != 1 || !tri.iter().any(|&i| on_iface[i]) {
            continue;
        }
        for &i in tri {
            if !on_iface[i] {
                width = width.min(mesh.nodes[i].norm() - r_iface);
            }
        }
    }
    width.is_finite().then_some(width)
}

/// Uniform red refinement; new boundary and interface nodes are projected
/// onto the exact curves when the mesh carries geometry.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |i: usize, j: usize, nodes: &mut Vec<Point>| -> usize {
        *midpoint.entry(ordered(i, j)).or_insert_with(|| {
            nodes.push(0.5 * (nodes[i] + nodes[j]));
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut region_tag = Vec::with_capacity(4 * mesh.triangles.len());
    for (tri, &tag) in mesh.triangles.iter().zip(&mesh.region_tag) {
        let [a, b, c] = *tri;
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        region_tag.extend([tag; 4]);
    }
    let refine_ring = |ring: &[usize], curve: Option<Curve>, nodes: &mut Vec<Point>| {
        let mut out = Vec::with_capacity(2 * ring.len());
        for k in 0..ring.len() {
            let (i, j) = (ring[k], ring[(k + 1) % ring.len()]);
            let m = midpoint[&ordered(i, j)];
            if let Some(c) = curve {
                nodes[m] = c.project(nodes[m]);
            }
            out.push(i);
            out.push(m);
        }
        out
    };
    let geometry = mesh.geometry;
    let outer_boundary = refine_ring(&mesh.outer_boundary, geometry.map(|g| g.outer), &mut nodes);
    let inner_boundary = mesh
        .inner_boundary
        .as_ref()
        .map(|ring| refine_ring(ring, geometry.and_then(|g| g.inner), &mut nodes));
    if let Some(curve) = geometry.and_then(|g| g.interface) {
        let mut tags: HashMap<(usize, usize), u8> = HashMap::new();
        let mut interface_edges = Vec::new();
        for (tri, &tag) in mesh.triangles.iter().zip(&mesh.region_tag) {
            for k in 0..3 {
                let e = ordered(tri[k], tri[(k + 1) % 3]);
                match tags.get(&e) {
                    Some(&other) if other != tag => interface_edges.push(e),
                    _ => {
                        tags.insert(e, tag);
                    }
                }
            }
        }
        for e in interface_edges {
            let m = midpoint[&e];
            nodes[m] = curve.project(nodes[m]);
        }
    }
    Mesh {
        nodes,
        triangles,
        outer_boundary,
        inner_boundary,
        region_tag,
        geometry,
    }
}

/// Polar angles of the outer boundary nodes in ring order, rotated so the
/// list starts at the smallest angle.
pub fn boundary_angles(mesh: &Mesh) -> Result<Vec<f64>> {
    angles_of(mesh.outer_boundary.iter().map(|&i| mesh.nodes[i]))
}

pub(crate) fn angles_of(points: impl Iterator<Item = Point>) -> Result<Vec<f64>> {
    let mut angles = Vec::new();
    for p in points {
        if p.norm() == 0.0 {
            return Err(Error::Geometry("boundary node at the origin has no polar angle".into()));
        }
        let mut t = p.y.atan2(p.x);
        if t < 0.0 {
            t += 2.0 * PI;
        }
        if t >= 2.0 * PI {
            t -= 2.0 * PI;
        }
        angles.push(t);
    }
    if angles.is_empty() {
        return Err(Error::Geometry("outer boundary is empty".into()));
    }
    let start = angles
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();
    angles.rotate_left(start);
    Ok(angles)
}
