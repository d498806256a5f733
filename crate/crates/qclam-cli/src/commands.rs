use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::options::Options;
use crate::output::OutDir;
use qclam::approximation::{run_pipeline, ApproxConfig};
use qclam::beltrami::{principal_solution, BeltramiField, DEFAULT_TOL};
use qclam::currents::{
    closedness_residual, default_dictionary, directedness_residual, mass, radon_nikodym, reconstruct,
    refine_subdivide, write_trace_csv, CurrentSpec, TestForm,
};
use qclam::expr::{Bindings, Expr};
use qclam::field_ops::{ComplexField, Disk};
use qclam::motion::{
    beltrami_of_holonomy, check_disjointness, check_schwarz, disk_samples, harnack_sweep, holder_exponent, holonomy,
    HolomorphicMotion, BUILTIN_FAMILIES,
};
use qclam::{Error, Result, C64};

pub enum Outcome {
    Success,
    /// Ran to completion, but a reported check did not pass.
    ChecksFailed,
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::validation(format!("cannot read {path}: {e}")))
}

fn load_motion(arg: &str) -> Result<HolomorphicMotion> {
    if BUILTIN_FAMILIES.iter().any(|(n, _)| *n == arg) {
        HolomorphicMotion::builtin(arg)
    } else {
        HolomorphicMotion::from_json(&read(arg)?)
    }
}

fn load_current(path: &str) -> Result<CurrentSpec> {
    CurrentSpec::from_json(&read(path)?)
}

pub fn beltrami_solve(opts: &Options, field: &str) -> Result<Outcome> {
    opts.only("beltrami-solve", &["grid-n", "grid-l", "tol"])?;
    let spec = opts.grid(256)?;
    let tol = opts.tol(DEFAULT_TOL)?;
    let is_file = field.ends_with(".csv") || Path::new(field).is_file();
    let mu = if is_file {
        let values = ComplexField::<f64>::read_csv(fs::File::open(field)?, spec.half_width())?;
        if values.spec() != spec && opts.grid_n.is_some() {
            return Err(Error::validation(format!("{field} holds an N = {} grid", values.spec().n())));
        }
        BeltramiField::tight(values)?
    } else {
        BeltramiField::builtin(field, spec)?
    };
    let out = OutDir::create(&opts.out)?;
    let map = principal_solution(&mu, tol)?;
    let mut diag = serde_json::to_value(map.diagnostics(tol))?;
    diag["field"] = json!(field);
    if field.starts_with("radial-stretch") {
        // mu = k w / conj(w) inside the disk; the solution is w |w|^(K - 1).
        let k = mu.kappa_bound();
        let big_k = (1.0 + k) / (1.0 - k);
        let exact = ComplexField::from_fn(mu.spec(), |w| if w.norm() < 1.0 { w * w.norm().powf(big_k - 1.0) } else { w })?;
        diag["relative_l2_error"] = json!(map.h.relative_l2_error(&exact)?);
    }
    out.with_writer("solution.csv", |f| map.h.write_csv(f))?;
    out.json("diagnostics.json", &diag)?;
    let n = mu.spec().n();
    let disp: Vec<f64> = map.h.values().iter().zip(mu.spec().nodes()).map(|(h, (_, _, w))| (h - w).norm()).collect();
    out.heatmap("displacement", n, n, &disp)?;
    Ok(Outcome::Success)
}

fn check_value<T: Serialize>(r: Result<T>, passed: impl Fn(&T) -> bool, all: &mut bool) -> Result<Value> {
    match r {
        Ok(v) => {
            *all &= passed(&v);
            Ok(serde_json::to_value(&v)?)
        }
        Err(e) => {
            *all = false;
            Ok(json!({ "passed": false, "error": e.to_string() }))
        }
    }
}

pub fn motion_check(opts: &Options, motion: &str) -> Result<Outcome> {
    opts.only("motion-check", &[])?;
    let m = load_motion(motion)?;
    let mut zs = disk_samples(4, 16, 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..16 {
        zs.push(C64::from_polar(0.9 * rng.gen::<f64>().sqrt(), std::f64::consts::TAU * rng.gen::<f64>()));
    }
    let out = OutDir::create(&opts.out)?;
    let mut all = true;
    let disjointness = check_value(check_disjointness(&m, &zs), |r| r.passed, &mut all)?;
    let hol = m.holomorphy(&zs);
    all &= hol.passed;
    let schwarz = if m.is_global() {
        let nonzero: Vec<C64> = zs.iter().copied().filter(|z| z.norm() > 0.0).collect();
        check_value(check_schwarz(&m, &nonzero, &disk_samples(3, 8, 0.9)), |r| r.passed, &mut all)?
    } else {
        json!({ "skipped": "needs a global motion" })
    };
    let harnack = check_value(harnack_sweep(&m, 8, 16, 0.9), |r| r.passed, &mut all)?;
    let holder = check_value(holder_exponent(&m, C64::new(0.5, 0.0)), |r| r.within, &mut all)?;
    let report = json!({
        "motion": m.to_spec(),
        "seed": opts.seed,
        "base_samples": zs.len(),
        "disjointness": disjointness,
        "holomorphy": hol,
        "schwarz": schwarz,
        "harnack": harnack,
        "holder": holder,
        "passed": all,
    });
    out.json("motion_check.json", &report)?;
    Ok(if all { Outcome::Success } else { Outcome::ChecksFailed })
}

pub fn motion_holonomy(opts: &Options, motion: &str, source: C64, target: C64) -> Result<Outcome> {
    opts.only("motion-holonomy", &["grid-n", "grid-l"])?;
    let m = load_motion(motion)?;
    let spec = opts.grid(128)?;
    if !m.is_global() {
        return Err(Error::validation("holonomy on a fiber grid needs a global motion"));
    }
    let out = OutDir::create(&opts.out)?;
    let map = holonomy(&m, source, target, Some(spec))?;
    let bel = beltrami_of_holonomy(&m, target, spec)?;
    let grid = map.grid.as_ref().expect("grid requested");
    out.with_writer("holonomy.csv", |f| grid.write_csv(f))?;
    out.with_writer("beltrami.csv", |f| bel.field.mu().write_csv(f))?;
    let n = spec.n();
    let mags: Vec<f64> = bel.field.mu().values().iter().map(|v| v.norm()).collect();
    out.heatmap("beltrami_abs", n, n, &mags)?;
    let leaf_points: Vec<[[f64; 2]; 2]> = map.leaf_points.iter().map(|(a, b)| [[a.re, a.im], [b.re, b.im]]).collect();
    out.json(
        "holonomy.json",
        &json!({
            "source": [source.re, source.im],
            "target": [target.re, target.im],
            "leaf_points": leaf_points,
            "mu_sup": bel.sup,
            "mu_sup_outside": bel.sup_outside,
            "schwarz_bound": target.norm(),
        }),
    )?;
    Ok(Outcome::Success)
}

pub fn current_mass(opts: &Options, path: &str, center: C64, radius: f64) -> Result<Outcome> {
    opts.only("current-mass", &[])?;
    let s = load_current(path)?.current()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::validation(format!("radius {radius} must be positive")));
    }
    let region = Disk::new(center, radius);
    let out = OutDir::create(&opts.out)?;
    let total = mass(&s, region)?;
    let per_leaf = (0..s.base().weights().len()).map(|k| s.leaf_mass(k, region)).collect::<Result<Vec<_>>>()?;
    out.json(
        "mass.json",
        &json!({ "center": [center.re, center.im], "radius": radius, "mass": total, "leaf_area": per_leaf }),
    )?;
    Ok(Outcome::Success)
}

pub fn current_residuals(opts: &Options, path: &str) -> Result<Outcome> {
    opts.only("current-residuals", &[])?;
    let spec = load_current(path)?;
    let s = spec.current()?;
    let graphs = if spec.graphs.is_empty() { None } else { Some(spec.graph_current()?) };
    let out = OutDir::create(&opts.out)?;
    let closed = closedness_residual(&s, &default_dictionary())?;
    let directed = match &graphs {
        Some(g) => Some(directedness_residual(g)?),
        None => None,
    };
    out.json("residuals.json", &json!({ "closedness": closed, "directedness": directed.unwrap_or(0.0) }))?;
    Ok(Outcome::Success)
}

pub fn current_decompose(opts: &Options, s_path: &str, t_path: &str) -> Result<Outcome> {
    opts.only("current-decompose", &[])?;
    let (s, t) = (load_current(s_path)?, load_current(t_path)?);
    if s.tau != t.tau || s.formula != t.formula {
        return Err(Error::validation("S and T must be carried by the same leaves"));
    }
    // Both specs must describe valid currents before anything is written.
    s.current()?;
    t.current()?;
    let f = radon_nikodym(&s.weights, &t.weights)?;
    let out = OutDir::create(&opts.out)?;
    let back = reconstruct(&f, &t.weights);
    let gap = back.iter().zip(&s.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.json("decomposition.json", &json!({ "density": f, "reconstruction_error": gap }))?;
    out.with_writer("decomposition.csv", |w| {
        writeln!(w, "leaf,tau_re,tau_im,s,t,density")?;
        for (k, tau) in s.tau.iter().enumerate() {
            let c: C64 = (*tau).into();
            writeln!(w, "{k},{},{},{},{},{}", c.re, c.im, s.weights[k], t.weights[k], f[k])?;
        }
        Ok(())
    })?;
    Ok(Outcome::Success)
}

pub fn current_refine(opts: &Options, path: &str, depth: usize, form: &str) -> Result<Outcome> {
    opts.only("current-refine", &[])?;
    let s = load_current(path)?.current()?;
    if depth == 0 {
        return Err(Error::validation("refinement depth must be at least 1"));
    }
    let psi = Arc::new(Expr::parse(form)?);
    // Fail on a bad formula before any work.
    psi.eval_with(&Bindings { alpha: C64::new(0.0, 0.0), z: C64::new(0.1, 0.1), w: Some(C64::new(0.1, -0.1)) })?;
    let e = psi.clone();
    let test = TestForm::two_with_bump(
        move |z, w| e.eval_with(&Bindings { alpha: C64::new(0.0, 0.0), z, w: Some(w) }).map_or(f64::NAN, |v| v.re),
        0.9,
    );
    test.check_support()?;
    let out = OutDir::create(&opts.out)?;
    let steps = refine_subdivide(&s, &test, depth)?;
    out.with_writer("refinement.csv", |w| write_trace_csv(&steps, w))?;
    out.json("refinement.json", &steps)?;
    Ok(Outcome::Success)
}

pub fn approx_run(opts: &Options, config: Option<&str>) -> Result<Outcome> {
    opts.only("approx-run", &["grid-n", "grid-l", "p", "eps-list", "delta"])?;
    let mut cfg = match config {
        Some(path) => ApproxConfig::from_json(&read(path)?)?,
        None => ApproxConfig::default(),
    };
    if let Some(n) = opts.grid_n {
        cfg.grid_n = n;
    }
    if let Some(l) = opts.grid_l {
        cfg.grid_l = l;
    }
    if let Some(p) = opts.p {
        cfg.p = p;
    }
    if let Some(e) = &opts.eps_list {
        cfg.epsilons = e.clone();
    }
    if let Some(d) = opts.delta {
        cfg.delta = d;
    }
    cfg.validate()?;
    let out = OutDir::create(&opts.out)?;
    let run = run_pipeline(&cfg)?;
    out.json("config.json", &cfg)?;
    out.with_writer("convergence.csv", |w| {
        writeln!(w, "epsilon,sup_error,w1p_error,nu_sup,nu_within,grad_pi_lp,leaf_deviation,out_of_regime")?;
        for r in &run.reports {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{:e},{:e},{}",
                r.epsilon, r.sup_error, r.w1p_error, r.nu_sup, r.nu_within, r.grad_pi_lp, r.leaf_deviation, r.out_of_regime
            )?;
        }
        Ok(())
    })?;
    for (i, r) in run.reports.iter().enumerate() {
        out.json(&format!("report_{i}.json"), r)?;
        out.with_writer(&format!("table_{i}.csv"), |w| run.tables[i].write_csv(w))?;
        let (width, height, values) = run.heatmap(i);
        out.heatmap(&format!("error_{i}"), width, height, &values)?;
    }
    if let Some(r) = run.reports.first().filter(|r| r.out_of_regime) {
        eprintln!("qclam: warning: p = {} is at or above p_max = {}; convergence is not expected", r.p, r.p_max);
    }
    Ok(Outcome::Success)
}
