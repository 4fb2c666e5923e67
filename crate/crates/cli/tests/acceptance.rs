//! Acceptance run: one PASS/FAIL line per criterion, then a hard assert.
//! Commands go through `dispatch` so the files checked for determinism are
//! the ones a user would get.

use std::path::{Path, PathBuf};

use serde_json::Value;

use cloak_cli::dispatch;
use cloak_core::bessel::{bessel_j, bessel_root};
use cloak_core::cloak::{radial_resonance, run_sweep, CloakExperiment, CloakSource, SweepRecord};
use cloak_core::dtn::{dtn_error, DtNMatrix};
use cloak_core::xform::MaterialField;
use cloak_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

struct Runner {
    dir: tempfile::TempDir,
}

impl Runner {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Runs a command writing to `name`; returns the parsed JSON.
    fn json(&self, name: &str, args: &[&str]) -> Value {
        let out = self.path(name);
        self.exec(&out, args);
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
    }

    fn exec(&self, out: &Path, args: &[&str]) {
        let argv = std::iter::once("cloak")
            .chain(args.iter().copied())
            .chain(["--out", out.to_str().unwrap()]);
        let code = dispatch(argv);
        assert_eq!(code, 0, "command {args:?} exited {code}");
    }
}

fn dtn_of(v: &Value) -> DtNMatrix {
    serde_json::from_value(v["dtn"].clone()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

const C2_COARSE: &[&str] = &["dtn", "--radius", "2", "--h", "0.05", "--omega", "1", "--modes", "8"];
const C2_FINE: &[&str] = &["dtn", "--radius", "2", "--h", "0.025", "--omega", "1", "--modes", "8"];
const C4: &[&str] = &["resonance", "--q", "1", "--count", "8", "--h", "0.03"];
const C5: &[&str] = &["ite", "--q", "4", "--count", "20", "--h", "0.03"];

fn criterion1() -> Result<Outcome> {
    let root = bessel_root(0, 1)?;
    let at_root = bessel_j(0, root)?.abs();
    let mut worst = 0.0f64;
    for n in 1..20 {
        for i in 1..=120 {
            let x = 0.25 * i as f64;
            let r = bessel_j(n - 1, x)? + bessel_j(n + 1, x)? - 2.0 * n as f64 / x * bessel_j(n, x)?;
            worst = worst.max(r.abs());
        }
    }
    outcome(
        at_root <= 1e-8 && worst <= 1e-8,
        format!("|J_0(j_01)| = {at_root:.1e}, recurrence residual {worst:.1e}"),
    )
}

fn criterion2(r: &Runner) -> Result<(Outcome, f64)> {
    let coarse = r.json("c2_coarse.json", C2_COARSE);
    let fine = r.json("c2_fine.json", C2_FINE);
    let (e1, e2) = (
        coarse["dtn_error"].as_f64().unwrap(),
        fine["dtn_error"].as_f64().unwrap(),
    );
    let self_error = dtn_error(&dtn_of(&coarse), &dtn_of(&fine))?;
    let o = outcome(
        e1 <= 0.02 && e1 / e2 >= 2.5,
        format!("error {e1:.3e} at h=0.05, {e2:.3e} at h=0.025, ratio {:.2}", e1 / e2),
    )?;
    Ok((o, self_error))
}

fn criterion3(r: &Runner, self_error: f64) -> Result<Outcome> {
    let plain = dtn_of(&r.json("c3_plain.json", C2_COARSE));
    let mut worst = 0.0f64;
    for seed in ["1", "2"] {
        let mut args = C2_COARSE.to_vec();
        args.extend(["--map", "bump:0.15", "--seed", seed]);
        let pushed = dtn_of(&r.json(&format!("c3_{seed}.json"), &args));
        worst = worst.max(dtn_error(&pushed, &plain)?);
    }
    outcome(
        worst <= 3.0 * self_error,
        format!("pushed vs plain {worst:.3e}, bound 3 x {self_error:.3e}"),
    )
}

fn criterion4(r: &Runner) -> Result<Outcome> {
    let v = r.json("c4.json", C4);
    let w = floats(&v["eigenvalues"]);
    let near = |target: f64| w.iter().filter(|&&x| rel(x, target) <= 0.01).count();
    let (a, b) = (near(3.83171), near(5.13562));
    outcome(
        a == 3 && b >= 1,
        format!("{a} values within 1% of 3.83171, {b} within 1% of 5.13562"),
    )
}

fn criterion5(r: &Runner) -> Result<Outcome> {
    let v = r.json("c5.json", C5);
    let w = floats(&v["eigenvalues"]);
    let cutoff = v["resolution_cutoff"].as_f64().unwrap();
    let cmp = &v["oracle_comparison"];
    let matches = cmp["matches"].as_array().unwrap();
    let all_matched = matches.iter().all(|m| m["status"] == "matched");
    let worst = matches
        .iter()
        .filter_map(|m| m["relative_error"].as_f64())
        .fold(0.0f64, f64::max);
    let m0 = matches
        .iter()
        .find(|m| m["m"] == 0)
        .and_then(|m| m["computed"].as_f64())
        .unwrap_or(f64::NAN);
    let window_complete = cmp["cutoff"].as_f64().unwrap() == cutoff;
    let stray = cmp["unmatched_computed"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|u| u["nearest_relative_distance"].as_f64().unwrap() > 0.03)
        .count();
    outcome(
        rel(w[0], 1.20241) <= 0.015
            && rel(m0, 1.91585) <= 0.015
            && all_matched
            && window_complete
            && worst <= 0.015
            && stray == 0,
        format!(
            "smallest {:.5}, m=0 {m0:.5}, {} oracle values below cutoff {cutoff:.3} matched (worst {:.2}%), {stray} stray",
            w[0],
            matches.len(),
            100.0 * worst
        ),
    )
}

fn criterion6(r: &Runner) -> Result<Outcome> {
    let disk = r.json(
        "c6_disk.json",
        &["schiffer", "--lambda-max", "40", "--flatness-tol", "1e-2"],
    );
    let ellipse = r.json(
        "c6_ellipse.json",
        &[
            "schiffer",
            "--shape",
            "ellipse",
            "--a",
            "1.3",
            "--b",
            "0.8",
            "--lambda-max",
            "40",
            "--flatness-tol",
            "1e-2",
        ],
    );
    let found: Vec<f64> = disk["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["lambda"].as_f64().unwrap())
        .collect();
    let none = ellipse["candidates"].as_array().unwrap().len();
    outcome(
        found.len() == 1 && rel(found[0], 14.682) <= 0.015 && none == 0,
        format!("disk candidates {found:?}, ellipse candidates {none}"),
    )
}

fn criterion7(r: &Runner) -> Result<Outcome> {
    let plain = floats(&r.json("c7_plain.json", C4)["eigenvalues"]);
    let mut worst = 0.0f64;
    for seed in ["1", "2"] {
        let mut args = C4.to_vec();
        args.extend(["--map", "bump:0.15@1", "--seed", seed]);
        let pushed = floats(&r.json(&format!("c7_{seed}.json"), &args)["eigenvalues"]);
        for (a, b) in plain.iter().zip(&pushed).skip(1) {
            worst = worst.max(rel(*b, *a));
        }
    }
    outcome(worst <= 0.02, format!("largest relative change {:.3}%", 100.0 * worst))
}

const SWEEP: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

fn sweep_errors(records: &[(DtNMatrix, SweepRecord)]) -> Vec<f64> {
    records.iter().map(|(_, r)| r.dtn_error).collect()
}

/// Source-free and resonant-source curves for the target `(I, q)` at its
/// discrete radial resonance.
fn resonant_pair(q: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let res = radial_resonance(q, 0.05)?;
    let base = CloakExperiment {
        epsilon: SWEEP[0],
        omega: res.omega,
        target: MaterialField::isotropic(1.0, q)?,
        source: None,
        modes: 8,
        mesh_h: 0.05,
    };
    let control = sweep_errors(&run_sweep(&base, &SWEEP)?);
    let driven = CloakExperiment {
        source: Some(CloakSource::Interior(res.values)),
        ..base
    };
    let broken = sweep_errors(&run_sweep(&driven, &SWEEP)?);
    Ok((res.omega, control, broken))
}

fn criterion8(r: &Runner) -> Result<Outcome> {
    let out = r.path("c8.csv");
    let eps = SWEEP.map(|e| e.to_string()).join(",");
    r.exec(
        &out,
        &[
            "sweep",
            "--eps",
            &eps,
            "--omega",
            "1",
            "--modes",
            "8",
            "--target-g",
            "iso:3",
            "--target-q",
            "2",
        ],
    );
    let control: Vec<f64> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let decreasing = control.len() == 4 && control.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    println!("  (3I,2) control at omega 1: {}", fmt(&control));
    // Reported, not asserted. The (I,3) resonance avoids the free-disk
    // Dirichlet resonance that (I,4) sits on (J_1(2 j_11/2) = 0).
    for q in [3.0, 4.0] {
        let (omega, matched, broken) = resonant_pair(q)?;
        println!(
            "  (I,{q}) at its resonance omega {omega:.5}: control {} | with source {}",
            fmt(&matched),
            fmt(&broken)
        );
        println!(
            "  (I,{q}) final ratio: {:.2} vs its own control, {:.2} vs the (3I,2) control",
            broken[3] / matched[3],
            broken[3] / control[3]
        );
    }
    outcome(decreasing, format!("control strictly decreasing: {decreasing}"))
}

fn criterion9(r: &Runner) -> Result<Outcome> {
    let mut same = Vec::new();
    for (name, args) in [
        ("c2_coarse.json", C2_COARSE),
        ("c2_fine.json", C2_FINE),
        ("c4.json", C4),
        ("c5.json", C5),
    ] {
        let again = r.path(&format!("again_{name}"));
        r.exec(&again, args);
        same.push(std::fs::read(r.path(name)).unwrap() == std::fs::read(again).unwrap());
    }
    outcome(same.iter().all(|&s| s), format!("byte-identical reruns: {same:?}"))
}

/// Runs one criterion; a panic inside it counts as a failure.
/// Returns the pass flag and the criterion's by-product, if it ran.
fn report<T>(id: usize, run: impl FnOnce() -> Result<(Outcome, T)>) -> (bool, Option<T>) {
    let line = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(Ok((o, extra))) => {
            println!("criterion {id} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            return (o.pass, Some(extra));
        }
        Ok(Err(e)) => format!("{}: {e}", e.class()),
        Err(_) => "panicked".to_string(),
    };
    println!("criterion {id} FAIL: {line}");
    (false, None)
}

fn plain(r: Result<Outcome>) -> Result<(Outcome, ())> {
    r.map(|o| (o, ()))
}

fn main() {
    let r = Runner {
        dir: tempfile::tempdir().unwrap(),
    };
    let c1 = report(1, || plain(criterion1())).0;
    let (c2, self_error) = report(2, || criterion2(&r));
    let self_error = self_error.unwrap_or(f64::NAN);
    let results = [
        c1,
        c2,
        report(3, || plain(criterion3(&r, self_error))).0,
        report(4, || plain(criterion4(&r))).0,
        report(5, || plain(criterion5(&r))).0,
        report(6, || plain(criterion6(&r))).0,
        report(7, || plain(criterion7(&r))).0,
        report(8, || plain(criterion8(&r))).0,
        report(9, || plain(criterion9(&r))).0,
    ];
    let failed: Vec<usize> = (1..=9).filter(|i| !results[i - 1]).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
