//! Diffeomorphisms of the plane and the push-forward of acoustic material
//! parameters.
//!
//! For a map `F` with Jacobian `DF`, the pushed parameters at `y = F(x)` are
//!
//! ```text
//! (F_* g)(y) = DF(x) g(x) DF(x)^T / |det DF(x)|
//! (F_* q)(y) = q(x) / |det DF(x)|
//! ```
//!
//! so that `u ∘ F^{-1}` solves the pushed equation whenever `u` solves the
//! original one. Maps and fields are immutable closures and may be shared
//! across threads.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Mat2, Point, Result};

type PointFn = Arc<dyn Fn(Point) -> Result<Point> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(Point) -> Result<Mat2> + Send + Sync>;
type Predicate = Arc<dyn Fn(Point) -> bool + Send + Sync>;
type MaterialFn = Arc<dyn Fn(Point) -> Result<(Mat2, f64)> + Send + Sync>;

/// Outer radius of every domain used with the cloak constructions.
const OUTER_RADIUS: f64 = 2.0;
const RADIUS_SLACK: f64 = 1e-9;

/// Support radius of [`bump_diffeo`].
pub const BUMP_SUPPORT: f64 = 1.8;
/// Operator-norm bound the bump field is scaled to; `|t| * BUMP_LIPSCHITZ`
/// stays below 0.25 for admissible `t`.
pub const BUMP_LIPSCHITZ: f64 = 1.2;
pub const BUMP_MAX_T: f64 = 0.2;

/// A named invertible map with closed-form Jacobian.
#[derive(Clone)]
pub struct DiffeoSpec {
    name: String,
    map: PointFn,
    jacobian: JacobianFn,
    inverse: PointFn,
    domain: Predicate,
    /// Bounds on the singular values of `DF` over the domain, when known.
    stretch: Option<(f64, f64)>,
}

impl std::fmt::Debug for DiffeoSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffeoSpec")
            .field("name", &self.name)
            .field("stretch", &self.stretch)
            .finish_non_exhaustive()
    }
}

impl DiffeoSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn map(&self, x: Point) -> Result<Point> {
        (self.map)(x)
    }

    pub fn jacobian(&self, x: Point) -> Result<Mat2> {
        (self.jacobian)(x)
    }

    pub fn inverse(&self, y: Point) -> Result<Point> {
        (self.inverse)(y)
    }

    /// Membership in the map's nominal domain.
    pub fn domain_check(&self, x: Point) -> bool {
        (self.domain)(x)
    }

    pub fn stretch_bounds(&self) -> Option<(f64, f64)> {
        self.stretch
    }

    pub fn identity() -> Self {
        DiffeoSpec {
            name: "identity".into(),
            map: Arc::new(Ok),
            jacobian: Arc::new(|_| Ok(Mat2::identity())),
            inverse: Arc::new(Ok),
            domain: Arc::new(|_| true),
            stretch: Some((1.0, 1.0)),
        }
    }

    /// `x -> c x`.
    pub fn scaling(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parameter(format!("scaling factor must be positive, got {c}")));
        }
        Ok(DiffeoSpec {
            name: format!("scale:{c}"),
            map: Arc::new(move |x| Ok(x * c)),
            jacobian: Arc::new(move |_| Ok(Mat2::identity() * c)),
            inverse: Arc::new(move |y| Ok(y / c)),
            domain: Arc::new(|_| true),
            stretch: Some((c, c)),
        })
    }

    /// The map with roles of `map` and `inverse` exchanged.
    pub fn inverted(&self) -> Self {
        let fwd = self.clone();
        let inv_jac = self.clone();
        let dom = self.clone();
        DiffeoSpec {
            name: format!("inv({})", self.name),
            map: Arc::new(move |y| fwd.inverse(y)),
            jacobian: Arc::new(move |y| {
                let x = inv_jac.inverse(y)?;
                inv_jac
                    .jacobian(x)?
                    .try_inverse()
                    .ok_or_else(|| Error::Domain(format!("singular Jacobian at {x:?}")))
            }),
            inverse: self.map.clone(),
            domain: Arc::new(move |y| dom.inverse(y).is_ok_and(|x| dom.domain_check(x))),
            stretch: self.stretch.map(|(lo, hi)| (1.0 / hi, 1.0 / lo)),
        }
    }

    /// Parses a registry name: `identity`, `cloak`, `regcloak:<eps>`,
    /// `inversion`, `bump:<t>:<seed>`, `bump:<t>:<seed>@<radius>`.
    pub fn from_name(name: &str) -> Result<Self> {
        let (name, radius) = match name.split_once('@') {
            Some((base, r)) if base.starts_with("bump:") => (base, Some(r)),
            _ => (name, None),
        };
        let parts: Vec<&str> = name.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number '{s}' in map name '{name}'")))
        };
        match parts.as_slice() {
            ["identity"] => Ok(Self::identity()),
            ["cloak"] => Ok(cloak_map()),
            ["regcloak", eps] => reg_cloak_map(num(eps)?),
            ["inversion"] => Ok(inversion_map()),
            ["bump", t, seed] => {
                let seed = seed
                    .parse::<u64>()
                    .map_err(|_| Error::Parameter(format!("bad seed '{seed}' in map name '{name}'")))?;
                match radius {
                    Some(r) => bump_on_disk(num(t)?, seed, num(r)?),
                    None => bump_diffeo(num(t)?, seed),
                }
            }
            _ => Err(Error::Parameter(format!("unknown map '{name}'"))),
        }
    }
}

/// Orthogonal projection onto the radial direction, `x x^T / |x|^2`.
pub fn radial_projector(x: Point) -> Mat2 {
    x * x.transpose() / x.norm_squared()
}

/// `x -> (offset + slope |x|) x/|x|` on `0 < |x| <= 2`.
///
/// Evaluation also accepts the analytic extension inside the nominal inner
/// radius, which keeps quadrature points of chord-bounded elements next to
/// the cloaking interface valid. The inverse requires `|y| > offset`.
fn radial_affine(name: String, offset: f64, slope: f64, inner: f64) -> DiffeoSpec {
    let in_formula_domain = move |x: Point| {
        let r = x.norm();
        r > 0.0 && r <= OUTER_RADIUS * (1.0 + RADIUS_SLACK)
    };
    let map_name = name.clone();
    let jac_name = name.clone();
    let inv_name = name.clone();
    let sigma_max = if inner > 0.0 {
        offset / inner + slope
    } else {
        f64::INFINITY
    };
    let sigma_min = slope.min(offset / OUTER_RADIUS + slope);
    DiffeoSpec {
        name,
        map: Arc::new(move |x| {
            if !in_formula_domain(x) {
                return Err(Error::Domain(format!("{map_name} undefined at {:?}", (x.x, x.y))));
            }
            let r = x.norm();
            Ok(x * ((offset + slope * r) / r))
        }),
        jacobian: Arc::new(move |x| {
            if !in_formula_domain(x) {
                return Err(Error::Domain(format!("{jac_name} undefined at {:?}", (x.x, x.y))));
            }
            let r = x.norm();
            let p = radial_projector(x);
            Ok(p * slope + (Mat2::identity() - p) * ((offset + slope * r) / r))
        }),
        inverse: Arc::new(move |y| {
            let r = y.norm();
            if r <= offset || r == 0.0 || r > OUTER_RADIUS * (1.0 + RADIUS_SLACK) {
                return Err(Error::Domain(format!(
                    "{inv_name}: point {:?} outside the range",
                    (y.x, y.y)
                )));
            }
            Ok(y * ((r - offset) / slope / r))
        }),
        domain: Arc::new(move |x| {
            let r = x.norm();
            r > inner && r <= OUTER_RADIUS * (1.0 + RADIUS_SLACK)
        }),
        stretch: Some((sigma_min, sigma_max)),
    }
}

/// Singular cloak map `F(x) = (1 + |x|/2) x/|x|`, `B_2 \ {0} -> B_2 \ B_1`.
pub fn cloak_map() -> DiffeoSpec {
    radial_affine("cloak".into(), 1.0, 0.5, 0.0)
}

/// Regularized cloak map blowing up `B_eps` onto `B_1`:
/// `F_eps(x) = (2(1-eps)/(2-eps) + |x|/(2-eps)) x/|x|`.
pub fn reg_cloak_map(eps: f64) -> Result<DiffeoSpec> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    let offset = 2.0 * (1.0 - eps) / (2.0 - eps);
    let slope = 1.0 / (2.0 - eps);
    Ok(radial_affine(format!("regcloak:{eps}"), offset, slope, eps))
}

fn inversion_point(p: Point) -> Result<Point> {
    let r2 = p.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Domain("inversion undefined at the origin".into()));
    }
    Ok(Point::new(p.x, -p.y) / r2)
}

/// `z -> 1/z` on `R² \ {0}`: `(x, y) -> (x, -y)/(x² + y²)`.
///
/// This is an involution: `1/(1/z) = z`.
pub fn inversion_map() -> DiffeoSpec {
    DiffeoSpec {
        name: "inversion".into(),
        map: Arc::new(inversion_point),
        jacobian: Arc::new(|p| {
            let r2 = p.norm_squared();
            if r2 == 0.0 {
                return Err(Error::Domain("inversion undefined at the origin".into()));
            }
            let (x, y) = (p.x, p.y);
            let r4 = r2 * r2;
            Ok(Mat2::new(y * y - x * x, -2.0 * x * y, 2.0 * x * y, y * y - x * x) / r4)
        }),
        inverse: Arc::new(inversion_point),
        domain: Arc::new(|p| p.norm_squared() > 0.0),
        stretch: None,
    }
}

/// `G ∘ F`, with chain-rule Jacobian and inverse `F^{-1} ∘ G^{-1}`.
pub fn compose(g: &DiffeoSpec, f: &DiffeoSpec) -> DiffeoSpec {
    let (gm, fm) = (g.clone(), f.clone());
    let (gj, fj) = (g.clone(), f.clone());
    let (gi, fi) = (g.clone(), f.clone());
    let (gd, fd) = (g.clone(), f.clone());
    let stretch = match (g.stretch, f.stretch) {
        (Some((gl, gh)), Some((fl, fh))) => Some((gl * fl, gh * fh)),
        _ => None,
    };
    DiffeoSpec {
        name: format!("{}.{}", g.name, f.name),
        map: Arc::new(move |x| gm.map(fm.map(x)?)),
        jacobian: Arc::new(move |x| {
            let fx = fj.map(x)?;
            Ok(gj.jacobian(fx)? * fj.jacobian(x)?)
        }),
        inverse: Arc::new(move |y| fi.inverse(gi.inverse(y)?)),
        domain: Arc::new(move |x| fd.domain_check(x) && fd.map(x).is_ok_and(|y| gd.domain_check(y))),
        stretch,
    }
}

/// [`bump_diffeo`] rescaled to the disk of `radius`:
/// `x -> (R/2) F(2x/R)`, the identity for `|x| >= 0.9 R`.
pub fn bump_on_disk(t: f64, seed: u64, radius: f64) -> Result<DiffeoSpec> {
    let inner = compose(&bump_diffeo(t, seed)?, &DiffeoSpec::scaling(OUTER_RADIUS / radius)?);
    let mut f = compose(&DiffeoSpec::scaling(radius / OUTER_RADIUS)?, &inner);
    f.name = format!("bump:{t}:{seed}@{radius}");
    Ok(f)
}

/// Smooth vector bump `b` supported in `|x| <= 1.8`: a cutoff
/// `(1 - |x|²/1.8²)³` times a quadratic polynomial field with seeded
/// coefficients, scaled so `sup |Db| = BUMP_LIPSCHITZ`.
#[derive(Debug, Clone)]
struct Bump {
    coef: [[f64; 6]; 2],
}

impl Bump {
    fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = [[0.0; 6]; 2];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.random_range(-1.0..=1.0);
            }
        }
        let mut bump = Bump { coef };
        let sup = bump.sup_jacobian_norm();
        let scale = if sup > 0.0 { BUMP_LIPSCHITZ / sup } else { 0.0 };
        for row in bump.coef.iter_mut() {
            for c in row.iter_mut() {
                *c *= scale;
            }
        }
        bump
    }

    /// Polynomial part and its gradient for one component.
    fn poly(&self, k: usize, p: Point) -> (f64, Point) {
        let c = &self.coef[k];
        let (x, y) = (p.x, p.y);
        let v = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
        let grad = Point::new(c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y);
        (v, grad)
    }

    fn cutoff(p: Point) -> (f64, Point) {
        let s = 1.0 - p.norm_squared() / (BUMP_SUPPORT * BUMP_SUPPORT);
        if s <= 0.0 {
            return (0.0, Point::zeros());
        }
        let grad = p * (-6.0 * s * s / (BUMP_SUPPORT * BUMP_SUPPORT));
        (s * s * s, grad)
    }

    fn value(&self, p: Point) -> Point {
        let (chi, _) = Self::cutoff(p);
        if chi == 0.0 {
            return Point::zeros();
        }
        Point::new(self.poly(0, p).0, self.poly(1, p).0) * chi
    }

    fn jacobian(&self, p: Point) -> Mat2 {
        let (chi, dchi) = Self::cutoff(p);
        if chi == 0.0 && dchi == Point::zeros() {
            return Mat2::zeros();
        }
        let mut jac = Mat2::zeros();
        for k in 0..2 {
            let (v, grad) = self.poly(k, p);
            let row = grad * chi + dchi * v;
            jac[(k, 0)] = row.x;
            jac[(k, 1)] = row.y;
        }
        jac
    }

    fn sup_jacobian_norm(&self) -> f64 {
        let mut sup: f64 = 0.0;
        let (nr, nt) = (180, 360);
        for i in 0..nr {
            let r = BUMP_SUPPORT * i as f64 / nr as f64;
            for j in 0..nt {
                let t = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
                let jac = self.jacobian(Point::new(r * t.cos(), r * t.sin()));
                sup = sup.max(spectral_norm(&jac));
            }
        }
        sup
    }
}

fn spectral_norm(m: &Mat2) -> f64 {
    let mtm = m.transpose() * m;
    let tr = mtm.trace();
    let det = mtm.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr + disc).max(0.0).sqrt()
}

/// `F(x) = x + t b(x)` with `b` a seeded smooth bump supported in
/// `|x| <= 1.8`; `F` is the identity near `∂B_2` and invertible for
/// `|t| <= 0.2` since `|t| sup|Db| < 1`.
pub fn bump_diffeo(t: f64, seed: u64) -> Result<DiffeoSpec> {
    if !(t.abs() <= BUMP_MAX_T) {
        return Err(Error::Parameter(format!(
            "bump amplitude |t| must not exceed {BUMP_MAX_T}, got {t}"
        )));
    }
    let bump = Arc::new(Bump::random(seed));
    let (bm, bj, bi) = (bump.clone(), bump.clone(), bump);
    let in_domain = |x: Point| x.norm() <= OUTER_RADIUS * (1.0 + RADIUS_SLACK);
    let lip = t.abs() * BUMP_LIPSCHITZ;
    Ok(DiffeoSpec {
        name: format!("bump:{t}:{seed}"),
        map: Arc::new(move |x| {
            if !in_domain(x) {
                return Err(Error::Domain(format!("bump map undefined at {:?}", (x.x, x.y))));
            }
            Ok(x + bm.value(x) * t)
        }),
        jacobian: Arc::new(move |x| {
            if !in_domain(x) {
                return Err(Error::Domain(format!("bump map undefined at {:?}", (x.x, x.y))));
            }
            Ok(Mat2::identity() + bj.jacobian(x) * t)
        }),
        inverse: Arc::new(move |y| {
            if !in_domain(y) {
                return Err(Error::Domain(format!("bump inverse undefined at {:?}", (y.x, y.y))));
            }
            if y.norm() >= BUMP_SUPPORT || t == 0.0 {
                return Ok(y);
            }
            let mut x = y;
            for _ in 0..60 {
                let residual = x + bi.value(x) * t - y;
                if residual.norm() <= 1e-15 {
                    break;
                }
                let jac = Mat2::identity() + bi.jacobian(x) * t;
                let step = jac
                    .try_inverse()
                    .ok_or_else(|| Error::Internal("singular bump Jacobian".into()))?
                    * residual;
                x -= step;
            }
            Ok(x)
        }),
        domain: Arc::new(in_domain),
        stretch: Some((1.0 - lip, 1.0 + lip)),
    })
}

/// Symmetric density tensor `g` and bulk modulus `q` as functions of
/// position, with ellipticity bounds (`lower` may be 0 for degenerate
/// fields).
#[derive(Clone)]
pub struct MaterialField {
    eval: MaterialFn,
    lower: f64,
    upper: f64,
}

impl std::fmt::Debug for MaterialField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaterialField")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl MaterialField {
    pub fn new<E>(eval: E, lower: f64, upper: f64) -> Self
    where
        E: Fn(Point) -> Result<(Mat2, f64)> + Send + Sync + 'static,
    {
        MaterialField {
            eval: Arc::new(eval),
            lower,
            upper,
        }
    }

    /// Constant coefficients. `q = 0` is allowed (pure Laplace block).
    pub fn constant(g: Mat2, q: f64) -> Result<Self> {
        if (g[(0, 1)] - g[(1, 0)]).abs() > 1e-14 * g.norm() {
            return Err(Error::Parameter("material tensor must be symmetric".into()));
        }
        let (lo, hi) = sym_eigenvalues(&g);
        if !(lo > 0.0) || !(q >= 0.0) || !q.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!(
                "material must be elliptic: eig(g) = ({lo}, {hi}), q = {q}"
            )));
        }
        let lower = if q > 0.0 { lo.min(q) } else { 0.0 };
        Ok(MaterialField::new(move |_| Ok((g, q)), lower, hi.max(q)))
    }

    /// `(c I, q)`.
    pub fn isotropic(c: f64, q: f64) -> Result<Self> {
        Self::constant(Mat2::identity() * c, q)
    }

    /// `(diag(a, b), q)`.
    pub fn diagonal(a: f64, b: f64, q: f64) -> Result<Self> {
        Self::constant(Mat2::new(a, 0.0, 0.0, b), q)
    }

    /// `(I, 1)`.
    pub fn free() -> Self {
        Self::isotropic(1.0, 1.0).expect("unit medium is elliptic")
    }

    pub fn eval(&self, p: Point) -> Result<(Mat2, f64)> {
        (self.eval)(p)
    }

    pub fn g(&self, p: Point) -> Result<Mat2> {
        Ok(self.eval(p)?.0)
    }

    pub fn q(&self, p: Point) -> Result<f64> {
        Ok(self.eval(p)?.1)
    }

    pub fn lower_ellipticity(&self) -> f64 {
        self.lower
    }

    pub fn upper_ellipticity(&self) -> f64 {
        self.upper
    }

    /// Multiplies `q` by `c > 0`.
    pub fn scale_q(&self, c: f64) -> Self {
        let inner = self.clone();
        MaterialField::new(
            move |p| {
                let (g, q) = inner.eval(p)?;
                Ok((g, c * q))
            },
            self.lower * c.min(1.0),
            self.upper * c.max(1.0),
        )
    }
}

/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Pushed-forward field `y -> (F_* g, F_* q)(y)` evaluated through
/// `x = F^{-1}(y)`. The tensor is symmetrized after the triple product.
pub fn push_forward(f: &DiffeoSpec, m: &MaterialField) -> MaterialField {
    let (lower, upper) = match f.stretch_bounds() {
        Some((smin, smax)) if smin > 0.0 && smax.is_finite() => {
            let ratio = smax / smin;
            let g_lo = m.lower / ratio;
            let g_hi = m.upper * ratio;
            (g_lo.min(m.lower / (smax * smax)), g_hi.max(m.upper / (smin * smin)))
        }
        _ => (0.0, f64::INFINITY),
    };
    let f = f.clone();
    let m = m.clone();
    MaterialField::new(
        move |y| {
            let x = f.inverse(y)?;
            let jac = f.jacobian(x)?;
            let det = jac.determinant().abs();
            if !(det > 0.0) {
                return Err(Error::Domain(format!("degenerate Jacobian at {:?}", (x.x, x.y))));
            }
            let (g, q) = m.eval(x)?;
            let pushed = jac * g * jac.transpose() / det;
            Ok((0.5 * (pushed + pushed.transpose()), q / det))
        },
        lower,
        upper,
    )
}
