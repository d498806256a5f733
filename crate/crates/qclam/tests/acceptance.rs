//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Tolerances are pinned here and nowhere else.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qclam::approximation::{
    run_pipeline, transversal_dilatation, ApproxConfig, HolomorphicExpansion, MollifiedLamination, Transversal,
};
use qclam::beltrami::{principal_solution, BeltramiField};
use qclam::currents::{
    closedness_residual, default_dictionary, directedness_residual, radon_nikodym, reconstruct, refine_subdivide,
    GraphCurrent, LaminarCurrent, TestForm, WeightedCurrent,
};
use qclam::expr::Expr;
use qclam::field_ops::{beurling_transform, cauchy_transform, periodic_beurling_transform, ComplexField, GridSpec};
use qclam::lamination::Lamination;
use qclam::motion::{check_schwarz, disk_samples, harnack_sweep, holder_exponent, HolomorphicMotion};
use qclam::C64;

const RADIAL_TOL: f64 = 1e-2;
const RADIAL_TIME: Duration = Duration::from_secs(30);
const TRANSFORM_TOL: f64 = 5e-3;
const ISOMETRY_TOL: f64 = 1e-10;
const SCHWARZ_SHARP: f64 = 1e-6;
const SCHWARZ_SLACK: f64 = 5e-2;
const CLOSEDNESS_TOL: f64 = 1e-6;
const ROGUE_MIN: f64 = 0.5;
const SPLIT_TOL: f64 = 1e-10;
const MASS_TOL: f64 = 1e-12;
const APPROX_FINAL: f64 = 0.1;
const APPROX_TIME: Duration = Duration::from_secs(300);
const DILATATION_SLACK: f64 = 5e-2;
const NU_FRACTION: f64 = 0.99;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn radial_stretch() -> Outcome {
    let spec = GridSpec::new(2.0, 512).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mu = BeltramiField::<f64>::radial_stretch(spec, 2.0).map_err(|e| e.to_string())?;
    let map = principal_solution(&mu, 1e-10).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let exact = ComplexField::from_fn(spec, |w| if w.norm() < 1.0 { w * w.norm() } else { w }).unwrap();
    let err = map.h.relative_l2_error(&exact).unwrap();
    check(err <= RADIAL_TOL && elapsed <= RADIAL_TIME, format!("relative L2 error {err:.3e}, {elapsed:.2?}"))
}

fn transforms() -> Outcome {
    let spec = GridSpec::new(2.0, 512).unwrap();
    let one = ComplexField::from_fn(spec, |w| c(if w.norm() <= 1.0 { 1.0 } else { 0.0 }, 0.0)).unwrap();
    let c_exact = ComplexField::from_fn(spec, |w| if w.norm() <= 1.0 { w.conj() } else { 1.0 / w }).unwrap();
    let b_exact = ComplexField::from_fn(spec, |w| if w.norm() <= 1.0 { c(0.0, 0.0) } else { -1.0 / (w * w) }).unwrap();
    let c_err = cauchy_transform(&one).unwrap().relative_l2_error(&c_exact).unwrap();
    let b_err = beurling_transform(&one).unwrap().relative_l2_error(&b_exact).unwrap();

    let small = GridSpec::new(2.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut v: Vec<C64> = small
            .nodes()
            .map(|(_, _, w)| if w.norm() <= 1.0 { c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { c(0.0, 0.0) })
            .collect();
        let inside: Vec<usize> = small.nodes().enumerate().filter(|(_, n)| n.2.norm() <= 1.0).map(|(k, _)| k).collect();
        let mean = inside.iter().map(|&k| v[k]).sum::<C64>() / inside.len() as f64;
        inside.iter().for_each(|&k| v[k] -= mean);
        let f = ComplexField::new(small, v).unwrap();
        let b = periodic_beurling_transform(&f).unwrap();
        worst = worst.max((b.l2_norm() - f.l2_norm()).abs() / f.l2_norm());
    }
    check(
        c_err <= TRANSFORM_TOL && b_err <= TRANSFORM_TOL && worst <= ISOMETRY_TOL,
        format!("Cauchy {c_err:.3e}, Beurling {b_err:.3e} (all nodes), isometry defect {worst:.1e}"),
    )
}

fn schwarz() -> Outcome {
    let shear = HolomorphicMotion::builtin("shear").unwrap();
    let ws = disk_samples(3, 8, 0.9);
    let mut sharp: f64 = 0.0;
    for r in [0.1, 0.3, 0.6] {
        let rep = check_schwarz(&shear, &[c(r, 0.0)], &ws).map_err(|e| e.to_string())?;
        sharp = sharp.max((rep.fibers[0].sup_mu - r).abs());
    }
    let zs: Vec<C64> = disk_samples(4, 16, 0.9).into_iter().filter(|z| z.norm() > 0.0).collect();
    let mut worst = f64::INFINITY;
    for (name, m) in HolomorphicMotion::builtins() {
        let rep = check_schwarz(&m, &zs, &ws).map_err(|e| format!("{name}: {e}"))?;
        worst = worst.min(rep.worst_margin);
    }
    check(
        sharp <= SCHWARZ_SHARP && worst >= -SCHWARZ_SLACK,
        format!("shear | sup mu - |z| | <= {sharp:.1e}; worst margin over built-ins {worst:.3e}"),
    )
}

fn harnack() -> Outcome {
    let (mut checks, mut violations) = (0, 0);
    let mut holder_ok = true;
    for (name, m) in HolomorphicMotion::builtins() {
        let s = harnack_sweep(&m, 50, 50, 0.9).map_err(|e| format!("{name}: {e}"))?;
        checks += s.checks;
        violations += s.violations;
        for z in [c(0.1, 0.0), c(0.0, 0.5), c(-0.6, 0.3), c(0.8, 0.0)] {
            holder_ok &= holder_exponent(&m, z).map_err(|e| format!("{name}: {e}"))?.within;
        }
    }
    check(
        violations == 0 && holder_ok,
        format!("{violations} violations in {checks} checks; Holder exponents within bounds: {holder_ok}"),
    )
}

fn lam(formula: &str, tau: Vec<C64>) -> Arc<Lamination> {
    Arc::new(Lamination::new(HolomorphicMotion::from_formula(Expr::parse(formula).unwrap(), tau, 0.05, true).unwrap()))
}

fn currents() -> Outcome {
    let tau = vec![c(0.3, 0.0), c(0.0, 0.1), c(-0.2, 0.15), c(0.1, -0.25)];
    let dict = default_dictionary();
    let (mut directed, mut closed): (f64, f64) = (0.0, 0.0);
    for (_, formula) in qclam::motion::BUILTIN_FAMILIES {
        let t = LaminarCurrent::new(lam(formula, tau.clone()), vec![1.0, 0.5, 2.0, 0.25]).map_err(|e| e.to_string())?;
        directed = directed.max(directedness_residual(&GraphCurrent::from(t.clone())).map_err(|e| e.to_string())?);
        closed = closed.max(closedness_residual(&WeightedCurrent::from(t), &dict).map_err(|e| e.to_string())?);
    }
    let flat = LaminarCurrent::new(lam("alpha", vec![c(0.0, 0.0), c(0.5, 0.0)]), vec![1.0, 1.0]).unwrap();
    let rogue = GraphCurrent { current: flat, graphs: vec![(Expr::parse("z").unwrap(), 1.0)] };
    let r = directedness_residual(&rogue).map_err(|e| e.to_string())?;
    check(
        directed == 0.0 && closed <= CLOSEDNESS_TOL && r >= ROGUE_MIN,
        format!("directedness {directed:e}, closedness {closed:.2e}, rogue graph {r:.3}"),
    )
}

fn exact(x: f64) -> BigRational {
    qclam::currents::to_exact(x).unwrap()
}

fn domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pair in 0..50 {
        let n = rng.gen_range(1..=20);
        let t: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..10.0) }).collect();
        let s: Vec<f64> = t.iter().map(|&x| x * rng.gen_range(0.0..=1.0)).collect();
        let (se, te): (Vec<BigRational>, Vec<BigRational>) = (s.iter().map(|&x| exact(x)).collect(), t.iter().map(|&x| exact(x)).collect());
        let f = radon_nikodym(&se, &te).map_err(|e| format!("pair {pair}: {e}"))?;
        let zero = BigRational::from_integer(BigInt::from(0));
        let one = BigRational::from_integer(BigInt::from(1));
        if f.iter().any(|x| *x < zero || *x > one) {
            return Err(format!("pair {pair}: density outside [0, 1]"));
        }
        if reconstruct(&f, &te) != se {
            return Err(format!("pair {pair}: f T differs from S"));
        }
    }
    Ok("50 pairs: 0 <= f <= 1 and f T = S exactly".into())
}

fn refinement() -> Outcome {
    let tau: Vec<C64> = (0..12).map(|i| C64::from_polar(0.05 + 0.003 * i as f64, i as f64)).collect();
    let s: WeightedCurrent<f64> =
        LaminarCurrent::new(lam("alpha", tau), (0..12).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap().into();
    let form = TestForm::two_with_bump(|_, w| 1.0 - 4.0 * w.re, 0.9);
    let steps = refine_subdivide(&s, &form, 4).map_err(|e| e.to_string())?;
    let mut ok = steps.len() == 4;
    let (mut mass_gap, mut split, mut ratio): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for st in &steps {
        let bound = 10f64.powi(-(st.k as i32));
        ok &= st.support_diameter <= bound;
        ratio = ratio.max(st.support_diameter / bound);
        mass_gap = mass_gap.max((st.mass - 1.0).abs());
        split = split.max(st.splitting_error);
    }
    ok &= mass_gap <= MASS_TOL && split <= SPLIT_TOL;
    check(ok, format!("mass gap {mass_gap:.1e}, max diameter / 10^-k {ratio:.3}, splitting error {split:.1e}"))
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

struct Sweep {
    reports: Vec<qclam::approximation::PipelineReport>,
    elapsed: Duration,
}

fn sweep() -> Result<Sweep, String> {
    let cfg = ApproxConfig::from_json(
        r#"{"motion": "shear", "radius": 0.1, "function": "alpha", "epsilons": [0.2, 0.1, 0.05], "p": 4, "delta": 0.1}"#,
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let run = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    Ok(Sweep { reports: run.reports, elapsed: start.elapsed() })
}

fn approximation(s: &Result<Sweep, String>) -> Outcome {
    let s = s.as_ref().map_err(|e| e.clone())?;
    let sup: Vec<f64> = s.reports.iter().map(|r| r.sup_error).collect();
    let w1p: Vec<f64> = s.reports.iter().map(|r| r.w1p_error).collect();
    let r0 = &s.reports[0];
    let ok = strictly_decreasing(&sup)
        && strictly_decreasing(&w1p)
        && *w1p.last().unwrap() <= APPROX_FINAL
        && r0.p < r0.p_max
        && s.elapsed <= APPROX_TIME;
    check(
        ok,
        format!(
            "kappa {:.4}, p_max {:.3}; sup {}; W1p {}; {:.2?}",
            r0.kappa, r0.p_max, list(&sup), list(&w1p), s.elapsed
        ),
    )
}

fn dilatation() -> Outcome {
    let spec = GridSpec::new(2.0, 128).unwrap();
    let r = 0.1;
    let kappa = 2.0 * r / (1.0 + r * r);
    let d1 = Transversal::Vertical { z: c(0.5, 0.0) };
    let d2 = Transversal::graph(Expr::parse("2*z - 1").unwrap()).unwrap();
    let samples = disk_samples(3, 8, 0.4);
    let (mut worst, mut flagged, mut count) = (0.0f64, 0, 0);
    for (name, m) in HolomorphicMotion::builtins() {
        let m = m.rescale_base(r).unwrap();
        let exp = HolomorphicExpansion::new(&m, spec).map_err(|e| format!("{name}: {e}"))?;
        let moll = MollifiedLamination::from_expansion(&exp, 0.1, m.tau()).map_err(|e| format!("{name}: {e}"))?;
        let rep = transversal_dilatation(&moll, &d1, &d2, &samples).map_err(|e| format!("{name}: {e}"))?;
        worst = worst.max(rep.sup);
        flagged += rep.flagged.len();
        count += rep.values.len();
    }
    check(
        worst <= kappa + DILATATION_SLACK,
        format!("sup dilatation {worst:.3e} vs kappa {kappa:.4} over {count} samples ({flagged} flagged)"),
    )
}

fn projection(s: &Result<Sweep, String>) -> Outcome {
    let s = s.as_ref().map_err(|e| e.clone())?;
    let within = s.reports.iter().map(|r| r.nu_within).fold(1.0, f64::min);
    let leaves = s.reports[0].grad_pi_lp_per_leaf.len();
    let decreasing = (0..leaves).all(|k| {
        let v: Vec<f64> = s.reports.iter().map(|r| r.grad_pi_lp_per_leaf[k]).collect();
        strictly_decreasing(&v)
    });
    let grad: Vec<f64> = s.reports.iter().map(|r| r.grad_pi_lp).collect();
    check(
        within >= NU_FRACTION && decreasing,
        format!("nu within kappa + slack at {:.2}% of samples; L4 grad pi {}, per-leaf decreasing: {decreasing}", 100.0 * within, list(&grad)),
    )
}

fn main() {
    let runs: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("radial-stretch oracle", Box::new(radial_stretch)),
        ("transform oracles and isometry", Box::new(transforms)),
        ("Schwarz bound", Box::new(schwarz)),
        ("Harnack and Holder estimates", Box::new(harnack)),
        ("directedness and closedness", Box::new(currents)),
        ("domination densities", Box::new(domination)),
        ("refinement to depth 4", Box::new(refinement)),
    ];
    let mut failed = 0;
    let mut report = |k: usize, name: &str, out: Outcome| {
        let (tag, detail) = match out {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {k:>2} {tag} {name}: {detail}");
    };
    for (k, (name, f)) in runs.iter().enumerate() {
        report(k + 1, name, f());
    }
    let s = sweep();
    report(8, "approximation convergence", approximation(&s));
    report(9, "transversal dilatation", dilatation());
    report(10, "projection trace", projection(&s));
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
