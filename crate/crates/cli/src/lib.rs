//! Command-line front end. [`dispatch`] runs one command and maps errors to
//! exit codes: 0 ok, 1 io, 2 parameter, 3 numerical, 4 resolution.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cloak_core::cloak::{run_sweep, CloakExperiment};
use cloak_core::dtn::{dtn_error, dtn_free_analytic, dtn_matrix};
use cloak_core::fem::{cluster_values, Materials, CLUSTER_TOL};
use cloak_core::meshgen::{make_annulus, make_disk, make_ellipse, Mesh};
use cloak_core::spectra::{
    ite_disk_oracle, ite_eigs, ite_resolution_cutoff, resonance_disk_oracle, resonance_eigs, schiffer_scan, ITEConfig,
};
use cloak_core::xform::{push_forward, DiffeoSpec, MaterialField};
use cloak_core::{Error, Point, Result};

#[derive(Parser, Debug)]
#[command(name = "cloak", about = "Meshes, DtN maps, cloak sweeps and spectral scans", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mesh file.
    #[command(allow_negative_numbers = true)]
    Mesh(Flags),
    /// Sample push-forward coefficients at triangle centroids.
    #[command(allow_negative_numbers = true)]
    Pushforward(Flags),
    /// Discrete DtN map against the free analytic one.
    #[command(allow_negative_numbers = true)]
    Dtn(Flags),
    /// Regularized cloak sweep over ε.
    #[command(allow_negative_numbers = true)]
    Sweep(Flags),
    /// Neumann eigenfunctions with flat boundary trace.
    #[command(allow_negative_numbers = true)]
    Schiffer(Flags),
    /// Tied-boundary interior resonances.
    #[command(allow_negative_numbers = true)]
    Resonance(Flags),
    /// Transmission eigenvalues of the conformal two-field problem.
    #[command(allow_negative_numbers = true)]
    Ite(Flags),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Shape {
    Disk,
    Annulus,
    Ellipse,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Interface radius for disks, inner radius for annuli.
    #[arg(long)]
    interface: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    /// Comma-separated ε values.
    #[arg(long)]
    eps: Option<String>,
    /// `iso:<c>` or `diag:<a>:<b>`.
    #[arg(long = "target-g")]
    target_g: Option<String>,
    #[arg(long = "target-q")]
    target_q: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    #[arg(long = "flatness-tol")]
    flatness_tol: Option<f64>,
    /// Registry name: identity, cloak, regcloak:<eps>, inversion,
    /// bump:<t>[:<seed>][@<radius>] (radius 2 when omitted).
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "dump-dtn")]
    dump_dtn: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Flags {
    /// Rejects flags the command does not read.
    fn only(&self, command: &str, allowed: &[&str]) -> Result<()> {
        let set = [
            ("shape", self.shape.is_some()),
            ("radius", self.radius.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("h", self.h.is_some()),
            ("interface", self.interface.is_some()),
            ("omega", self.omega.is_some()),
            ("modes", self.modes.is_some()),
            ("eps", self.eps.is_some()),
            ("target-g", self.target_g.is_some()),
            ("target-q", self.target_q.is_some()),
            ("q", self.q.is_some()),
            ("count", self.count.is_some()),
            ("lambda-max", self.lambda_max.is_some()),
            ("flatness-tol", self.flatness_tol.is_some()),
            ("map", self.map.is_some()),
            ("seed", self.seed.is_some()),
            ("dump-dtn", self.dump_dtn),
            ("format", self.format.is_some()),
        ];
        match set.iter().find(|(name, on)| *on && !allowed.contains(name)) {
            Some((name, _)) => Err(Error::Parameter(format!("--{name} is not used by '{command}'"))),
            None => Ok(()),
        }
    }

    fn format(&self, allowed: &[Format], default: Format) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::Parameter(format!(
                "format {f:?} is not available for this command"
            )))
        }
    }

    fn mesh(&self, default_radius: f64, default_h: f64) -> Result<(Mesh, Value)> {
        let h = self.h.unwrap_or(default_h);
        let shape = self.shape.unwrap_or(Shape::Disk);
        let radius = self.radius.unwrap_or(default_radius);
        let (mesh, desc) = match shape {
            Shape::Disk => {
                if self.a.is_some() || self.b.is_some() {
                    return Err(Error::Parameter("--a/--b apply to ellipses".into()));
                }
                let m = make_disk(radius, h, self.interface)?;
                (
                    m,
                    json!({"shape": "disk", "radius": radius, "interface": self.interface, "h": h}),
                )
            }
            Shape::Annulus => {
                let inner = self
                    .interface
                    .ok_or_else(|| Error::Parameter("annulus needs --interface (inner radius)".into()))?;
                let m = make_annulus(inner, radius, h)?;
                (m, json!({"shape": "annulus", "inner": inner, "radius": radius, "h": h}))
            }
            Shape::Ellipse => {
                if self.radius.is_some() || self.interface.is_some() {
                    return Err(Error::Parameter("ellipses take --a and --b".into()));
                }
                let (a, b) = match (self.a, self.b) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::Parameter("ellipse needs --a and --b".into())),
                };
                (
                    make_ellipse(a, b, h)?,
                    json!({"shape": "ellipse", "a": a, "b": b, "h": h}),
                )
            }
        };
        Ok((mesh, desc))
    }

    fn diffeo(&self) -> Result<Option<DiffeoSpec>> {
        let Some(name) = &self.map else {
            if self.seed.is_some() {
                return Err(Error::Parameter("--seed needs --map bump:<t>".into()));
            }
            return Ok(None);
        };
        let (base, radius) = match name.split_once('@') {
            Some((b, r)) => (b, format!("@{r}")),
            None => (name.as_str(), String::new()),
        };
        let parts: Vec<&str> = base.split(':').collect();
        let full = match (parts.as_slice(), self.seed) {
            (["bump", t], seed) => format!("bump:{t}:{}{radius}", seed.unwrap_or(0)),
            (["bump", _, _], Some(_)) => return Err(Error::Parameter("seed given twice: in --map and --seed".into())),
            (_, None) => name.clone(),
            (_, Some(_)) => return Err(Error::Parameter("--seed only applies to bump maps".into())),
        };
        DiffeoSpec::from_name(&full).map(Some)
    }

    fn target_g(&self) -> Result<Option<TargetG>> {
        self.target_g.as_deref().map(TargetG::parse).transpose()
    }
}

#[derive(Copy, Clone, Debug)]
enum TargetG {
    Iso(f64),
    Diag(f64, f64),
}

impl TargetG {
    fn parse(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number '{t}' in --target-g '{s}'")))
        };
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["iso", c] => Ok(TargetG::Iso(num(c)?)),
            ["diag", a, b] => Ok(TargetG::Diag(num(a)?, num(b)?)),
            _ => Err(Error::Parameter(format!(
                "--target-g expects iso:<c> or diag:<a>:<b>, got '{s}'"
            ))),
        }
    }

    fn field(self, q: f64) -> Result<MaterialField> {
        match self {
            TargetG::Iso(c) => MaterialField::isotropic(c, q),
            TargetG::Diag(a, b) => MaterialField::diagonal(a, b, q),
        }
    }

    fn describe(self) -> Value {
        match self {
            TargetG::Iso(c) => json!(format!("iso:{c}")),
            TargetG::Diag(a, b) => json!(format!("diag:{a}:{b}")),
        }
    }
}

fn medium(g: Option<TargetG>, q: f64, map: Option<&DiffeoSpec>) -> Result<MaterialField> {
    let base = g.unwrap_or(TargetG::Iso(1.0)).field(q)?;
    Ok(match map {
        Some(f) => push_forward(f, &base),
        None => base,
    })
}

/// Output of one command: the main file and optional companions.
struct Output {
    files: Vec<(PathBuf, String)>,
}

impl Output {
    fn single(path: &Path, text: String) -> Self {
        Output {
            files: vec![(path.to_path_buf(), text)],
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes every file to a temporary sibling, then renames them all.
fn write_atomic(out: &Output) -> Result<()> {
    let mut temps = Vec::new();
    let result = (|| -> Result<()> {
        for (path, text) in &out.files {
            let tmp = temp_path(path);
            temps.push(tmp.clone());
            let mut f = std::fs::File::create(&tmp).map_err(|e| with_path(e, path))?;
            f.write_all(text.as_bytes()).map_err(|e| with_path(e, path))?;
            f.sync_all().map_err(|e| with_path(e, path))?;
        }
        for ((path, _), tmp) in out.files.iter().zip(&temps) {
            std::fs::rename(tmp, path).map_err(|e| with_path(e, path))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for tmp in &temps {
            let _ = std::fs::remove_file(tmp);
        }
    }
    result
}

fn run_mesh(f: &Flags) -> Result<Output> {
    f.only("mesh", &["shape", "radius", "a", "b", "h", "interface", "format"])?;
    f.format(&[Format::Json], Format::Json)?;
    let (mesh, _) = f.mesh(1.0, 0.1)?;
    Ok(Output::single(&f.out, mesh.to_json()))
}

fn run_pushforward(f: &Flags) -> Result<Output> {
    f.only(
        "pushforward",
        &[
            "shape",
            "radius",
            "a",
            "b",
            "h",
            "interface",
            "map",
            "seed",
            "target-g",
            "target-q",
            "format",
        ],
    )?;
    let format = f.format(&[Format::Json, Format::Csv], Format::Json)?;
    let map = f
        .diffeo()?
        .ok_or_else(|| Error::Parameter("pushforward needs --map".into()))?;
    let (mesh, mesh_desc) = f.mesh(2.0, 0.1)?;
    let base_g = f.target_g()?;
    let field = medium(base_g, f.target_q.unwrap_or(1.0), Some(&map))?;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for t in mesh.triangles() {
        let c: Point = t.iter().map(|&i| mesh.nodes()[i]).sum::<Point>() / 3.0;
        match field.eval(c) {
            Ok((g, q)) => rows.push((c, g, q)),
            Err(_) => skipped += 1,
        }
    }
    let text = match format {
        Format::Csv => {
            let mut s = String::from("x,y,g11,g12,g22,q\n");
            for (c, g, q) in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.x,
                    c.y,
                    g[(0, 0)],
                    g[(0, 1)],
                    g[(1, 1)],
                    q
                ));
            }
            s
        }
        Format::Json => json_text(&json!({
            "problem": "pushforward",
            "config": {
                "map": map.name(),
                "mesh": mesh_desc,
                "target_g": base_g.map(TargetG::describe),
                "target_q": f.target_q.unwrap_or(1.0),
            },
            "stretch_bounds": map.stretch_bounds(),
            "ellipticity": [field.lower_ellipticity(), field.upper_ellipticity()],
            "skipped": skipped,
            "samples": rows.iter().map(|(c, g, q)| json!({
                "x": c.x, "y": c.y, "g": [g[(0, 0)], g[(0, 1)], g[(1, 1)]], "q": q,
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Output::single(&f.out, text))
}

fn run_dtn(f: &Flags) -> Result<Output> {
    f.only(
        "dtn",
        &[
            "shape",
            "radius",
            "h",
            "interface",
            "omega",
            "modes",
            "map",
            "seed",
            "target-g",
            "target-q",
            "format",
        ],
    )?;
    f.format(&[Format::Json], Format::Json)?;
    if f.shape.is_some_and(|s| s != Shape::Disk) {
        return Err(Error::Parameter("the DtN map is defined on disks".into()));
    }
    let omega = f.omega.unwrap_or(1.0);
    let modes = f.modes.unwrap_or(8);
    let map = f.diffeo()?;
    let (mesh, mesh_desc) = f.mesh(2.0, 0.05)?;
    let radius = f.radius.unwrap_or(2.0);
    let field = medium(f.target_g()?, f.target_q.unwrap_or(1.0), map.as_ref())?;
    let d = dtn_matrix(&mesh, &Materials::uniform(field), omega, modes, None)?;
    let free = dtn_free_analytic(omega, modes, radius)?;
    let err = dtn_error(&d, &free)?;
    let v = json!({
        "problem": "dtn",
        "config": {
            "mesh": mesh_desc,
            "omega": omega,
            "modes": modes,
            "map": map.as_ref().map(|m| m.name().to_string()),
            "target_g": f.target_g()?.map(TargetG::describe),
            "target_q": f.target_q.unwrap_or(1.0),
        },
        "dofs": mesh.num_nodes(),
        "dtn_error": err,
        "asymmetry": d.relative_asymmetry(),
        "dtn": d,
        "free": free,
    });
    Ok(Output::single(&f.out, json_text(&v)))
}

fn parse_eps(list: &str) -> Result<Vec<f64>> {
    let eps = list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad ε '{t}' in --eps")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::Parameter(format!(
            "--eps values must lie in (0, 1], got '{list}'"
        )));
    }
    Ok(eps)
}

fn run_sweep_command(f: &Flags) -> Result<Output> {
    f.only(
        "sweep",
        &[
            "eps", "omega", "modes", "target-g", "target-q", "h", "dump-dtn", "format",
        ],
    )?;
    f.format(&[Format::Csv], Format::Csv)?;
    let eps = parse_eps(
        f.eps
            .as_deref()
            .ok_or_else(|| Error::Parameter("sweep needs --eps".into()))?,
    )?;
    let base = CloakExperiment {
        epsilon: eps[0],
        omega: f.omega.unwrap_or(1.0),
        target: medium(f.target_g()?, f.target_q.unwrap_or(1.0), None)?,
        source: None,
        modes: f.modes.unwrap_or(8),
        mesh_h: f.h.unwrap_or(0.05),
    };
    let results = run_sweep(&base, &eps)?;
    let mut csv = String::from("epsilon,dtn_error,dofs,omega,modes\n");
    for (_, r) in &results {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epsilon, r.dtn_error, r.dofs, base.omega, base.modes
        ));
    }
    let mut out = Output::single(&f.out, csv);
    if f.dump_dtn {
        let free = dtn_free_analytic(base.omega, base.modes, cloak_core::cloak::CLOAK_RADIUS)?;
        let v = json!({
            "free": free,
            "sweep": results.iter().map(|(d, r)| json!({"epsilon": r.epsilon, "dtn": d})).collect::<Vec<_>>(),
        });
        out.files.insert(0, (dump_path(&f.out), json_text(&v)));
    }
    Ok(out)
}

/// `s.csv` → `s.dtn.json`.
pub fn dump_path(out: &Path) -> PathBuf {
    out.with_extension("dtn.json")
}

/// Matches each oracle value (pairs for `m ≥ 1`) below `cutoff` to the
/// nearest unused computed value. Values the requested count cannot reach
/// are `truncated`, others without a partner are `missing`.
fn oracle_comparison(computed: &[f64], oracle: &[(u32, f64)], cutoff: f64) -> Value {
    let top = computed.iter().copied().fold(0.0, f64::max);
    let mut used = vec![false; computed.len()];
    let mut matches = Vec::new();
    for &(m, w) in oracle.iter().filter(|&&(_, w)| w <= cutoff) {
        for _ in 0..if m == 0 { 1 } else { 2 } {
            let best = (0..computed.len())
                .filter(|&k| !used[k])
                .min_by(|&a, &b| (computed[a] - w).abs().total_cmp(&(computed[b] - w).abs()));
            let entry = match best {
                Some(k) => {
                    used[k] = true;
                    let err = (computed[k] - w).abs() / w;
                    json!({"m": m, "oracle": w, "computed": computed[k], "relative_error": err, "status": "matched"})
                }
                None => {
                    let status = if w < top * (1.0 - CLUSTER_TOL) {
                        "missing"
                    } else {
                        "truncated"
                    };
                    json!({"m": m, "oracle": w, "computed": null, "relative_error": null, "status": status})
                }
            };
            matches.push(entry);
        }
    }
    let unmatched: Vec<Value> = (0..computed.len())
        .filter(|&k| !used[k] && computed[k] <= cutoff)
        .map(|k| {
            let nearest = oracle
                .iter()
                .map(|&(_, w)| (computed[k] - w).abs() / w)
                .fold(f64::INFINITY, f64::min);
            json!({"computed": computed[k], "nearest_relative_distance": nearest})
        })
        .collect();
    json!({"cutoff": cutoff, "matches": matches, "unmatched_computed": unmatched})
}

fn is_disk_with(f: &Flags) -> bool {
    f.shape.unwrap_or(Shape::Disk) == Shape::Disk && f.interface.is_none()
}

fn run_schiffer(f: &Flags) -> Result<Output> {
    f.only(
        "schiffer",
        &[
            "shape",
            "radius",
            "a",
            "b",
            "h",
            "lambda-max",
            "flatness-tol",
            "map",
            "seed",
            "target-g",
            "q",
            "format",
        ],
    )?;
    let format = f.format(&[Format::Json, Format::Csv], Format::Json)?;
    let lambda_max = f.lambda_max.unwrap_or(40.0);
    let tol = f.flatness_tol.unwrap_or(1e-2);
    let q = f.q.unwrap_or(1.0);
    let g = f.target_g()?;
    let map = f.diffeo()?;
    let (mesh, mesh_desc) = f.mesh(1.0, 0.03)?;
    let report = schiffer_scan(&mesh, &Materials::uniform(medium(g, q, map.as_ref())?), lambda_max, tol)?;
    let lambdas: Vec<f64> = report.spectrum.iter().map(|s| s.0).collect();
    if format == Format::Csv {
        let mut s = String::from("index,lambda,flatness,candidate\n");
        for (k, (l, fl)) in report.spectrum.iter().enumerate() {
            s.push_str(&format!("{k},{l},{fl},{}\n", fl <= &tol));
        }
        return Ok(Output::single(&f.out, s));
    }
    // radial Neumann modes with J_1(kR) = 0 are the known witnesses on disks
    let oracle = match (is_disk_with(f), g.unwrap_or(TargetG::Iso(1.0))) {
        (true, TargetG::Iso(c)) => {
            let r = f.radius.unwrap_or(1.0);
            let mut witnesses = Vec::new();
            for k in 1..=20 {
                let j = cloak_core::bessel::bessel_root(1, k)?;
                let l = c * j * j / (q * r * r);
                if l > lambda_max {
                    break;
                }
                witnesses.push(l);
            }
            json!({"radial_witnesses": witnesses})
        }
        _ => Value::Null,
    };
    let v = json!({
        "problem": "schiffer",
        "config": {
            "mesh": mesh_desc,
            "lambda_max": lambda_max,
            "flatness_tol": tol,
            "target_g": g.map(TargetG::describe),
            "q": q,
            "map": map.as_ref().map(|m| m.name().to_string()),
        },
        "eigenvalues": lambdas,
        "flatness": report.spectrum.iter().map(|s| s.1).collect::<Vec<_>>(),
        "clusters": cluster_values(&lambdas, CLUSTER_TOL),
        "candidates": report.candidates,
        "oracle_comparison": oracle,
    });
    Ok(Output::single(&f.out, json_text(&v)))
}

fn run_resonance(f: &Flags) -> Result<Output> {
    f.only(
        "resonance",
        &[
            "shape", "radius", "a", "b", "h", "count", "map", "seed", "target-g", "q", "format",
        ],
    )?;
    let format = f.format(&[Format::Json, Format::Csv], Format::Json)?;
    let q = f.q.unwrap_or(1.0);
    let count = f.count.unwrap_or(8);
    let g = f.target_g()?;
    let map = f.diffeo()?;
    let (mesh, mesh_desc) = f.mesh(1.0, 0.03)?;
    let res = resonance_eigs(&mesh, &Materials::uniform(medium(g, q, map.as_ref())?), count)?;
    let omegas = res.omegas();
    if format == Format::Csv {
        let mut s = String::from("index,omega,residual\n");
        for (k, w) in omegas.iter().enumerate() {
            s.push_str(&format!("{k},{w},{}\n", res.eigen.residuals[k]));
        }
        return Ok(Output::single(&f.out, s));
    }
    let oracle = match (is_disk_with(f), g.unwrap_or(TargetG::Iso(1.0))) {
        (true, TargetG::Iso(c)) => {
            let table = resonance_disk_oracle(c, q, f.radius.unwrap_or(1.0), 20, 6)?;
            let positive: Vec<f64> = omegas
                .iter()
                .enumerate()
                .filter(|(k, _)| !res.zero_modes.contains(k))
                .map(|(_, &w)| w)
                .collect();
            let top = positive.last().copied().unwrap_or(0.0);
            oracle_comparison(&positive, &table, top * (1.0 + CLUSTER_TOL))
        }
        _ => Value::Null,
    };
    let v = json!({
        "problem": "resonance",
        "config": {
            "mesh": mesh_desc,
            "count": count,
            "target_g": g.map(TargetG::describe),
            "q": q,
            "map": map.as_ref().map(|m| m.name().to_string()),
        },
        "eigenvalues": omegas,
        "lambda": res.eigen.values,
        "residuals": res.eigen.residuals,
        "zero_modes": res.zero_modes,
        "clusters": res.eigen.clusters,
        "candidates": Value::Null,
        "oracle_comparison": oracle,
    });
    Ok(Output::single(&f.out, json_text(&v)))
}

fn run_ite(f: &Flags) -> Result<Output> {
    f.only("ite", &["shape", "radius", "a", "b", "h", "q", "count", "format"])?;
    let format = f.format(&[Format::Json, Format::Csv], Format::Json)?;
    let q = f.q.unwrap_or(4.0);
    let count = f.count.unwrap_or(6);
    let (mesh, mesh_desc) = f.mesh(1.0, 0.03)?;
    let cfg = ITEConfig::conformal(q)?;
    let cutoff = ite_resolution_cutoff(&mesh, &cfg)?;
    let eig = ite_eigs(&mesh, &cfg, count)?;
    let omegas: Vec<f64> = eig.values.iter().map(|v| v.sqrt()).collect();
    if format == Format::Csv {
        let mut s = String::from("index,omega,residual\n");
        for (k, w) in omegas.iter().enumerate() {
            s.push_str(&format!("{k},{w},{}\n", eig.residuals[k]));
        }
        return Ok(Output::single(&f.out, s));
    }
    let unit_disk = is_disk_with(f) && f.radius.unwrap_or(1.0) == 1.0;
    let oracle = if unit_disk {
        let top = omegas.last().copied().unwrap_or(0.0);
        oracle_comparison(
            &omegas,
            &ite_disk_oracle(q, 21, 8)?,
            cutoff.min(top * (1.0 + CLUSTER_TOL)),
        )
    } else {
        Value::Null
    };
    let v = json!({
        "problem": "ite",
        "config": {"mesh": mesh_desc, "q": q, "count": count, "coupling": [[1.0, -1.0], [1.0, 1.0]]},
        "resolution_cutoff": cutoff,
        "eigenvalues": omegas,
        "lambda": eig.values,
        "residuals": eig.residuals,
        "clusters": eig.clusters,
        "candidates": Value::Null,
        "oracle_comparison": oracle,
    });
    Ok(Output::single(&f.out, json_text(&v)))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Resonance { .. }
        | Error::Solver(_)
        | Error::Inconsistency(_)
        | Error::Assembly { .. }
        | Error::Internal(_) => 3,
        Error::Resolution(_) => 4,
        _ => 2,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `argv` (program name first), runs one command, and returns the
/// process exit code. Errors print `error: <class>: <detail>` on stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: parameter: {}", one_line(first));
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Mesh(f) => run_mesh(f),
        Command::Pushforward(f) => run_pushforward(f),
        Command::Dtn(f) => run_dtn(f),
        Command::Sweep(f) => run_sweep_command(f),
        Command::Schiffer(f) => run_schiffer(f),
        Command::Resonance(f) => run_resonance(f),
        Command::Ite(f) => run_ite(f),
    }
    .and_then(|out| write_atomic(&out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {}", e.class(), one_line(&e.to_string()));
            exit_code(&e)
        }
    }
}
