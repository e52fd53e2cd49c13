//! Run orchestration: single runs, the full experiment matrix, and the
//! selftest checks.

use std::error::Error;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ilg::{
    admissible_delta_interval, run_adaptive, AdaptConfig, AdaptRunRecord, DampingControl,
    EstimatorChoice, Mesh, ProblemSpec, SchemeConfig, SchemeKind,
};

use crate::args::{EstimatorArg, ExperimentArg, RunSpec, SchemeArg};
use crate::{csv, svg};

type RunResult = Result<(), Box<dyn Error + Send + Sync>>;

fn build_config(spec: &RunSpec) -> (ProblemSpec, AdaptConfig) {
    let problem = ProblemSpec::make_experiment(spec.experiment.to_experiment());
    let kind = spec.scheme.to_kind();
    let damping = DampingControl {
        kappa: spec.kappa,
        epsilon: spec.epsilon,
        delta0: if kind == SchemeKind::Newton { spec.delta } else { 1.0 },
    };
    let scheme = SchemeConfig::with_damping(kind, &problem, spec.delta, damping);
    let mut config = AdaptConfig::new(scheme, spec.estimator.to_choice());
    config.vartheta = spec.vartheta;
    config.theta_doerfler = spec.theta_doerfler;
    config.max_elements = spec.max_elements;
    (problem, config)
}

fn warn_if_outside_theory(spec: &RunSpec, problem: &ProblemSpec) {
    let kind = spec.scheme.to_kind();
    if kind == SchemeKind::Kacanov {
        return;
    }
    let (lo, hi) = admissible_delta_interval(kind, problem);
    if spec.delta <= lo || spec.delta >= hi {
        log::warn!(
            "{} delta {} lies outside the guaranteed-convergence interval ({lo:.4}, {hi:.4}); the runs converge empirically regardless",
            spec.scheme.name(),
            spec.delta,
        );
    }
}

pub fn execute(spec: &RunSpec) -> Result<AdaptRunRecord, Box<dyn Error + Send + Sync>> {
    let (problem, config) = build_config(spec);
    warn_if_outside_theory(spec, &problem);
    let record = run_adaptive(&problem, &config)?;

    std::fs::create_dir_all(&spec.out)?;
    let stem = spec.stem();
    csv::emit_csv(&record, &spec.out.join(format!("{stem}.csv")))?;
    svg::emit_convergence_svg(
        &record,
        &format!(
            "{} / {} / {} estimator",
            spec.experiment.name(),
            spec.scheme.name(),
            spec.estimator.name()
        ),
        &spec.out.join(format!("{stem}.svg")),
    )?;

    if spec.dump_mesh {
        let mut text = Vec::new();
        record.final_mesh.dump(&mut text)?;
        csv::write_atomic(
            &spec.out.join(format!("{stem}_mesh.txt")),
            std::str::from_utf8(&text)?,
        )?;
    }
    Ok(record)
}

pub fn run_single(spec: &RunSpec) -> RunResult {
    let record = execute(spec)?;
    let last = record
        .levels
        .last()
        .ok_or("run produced no levels")?;
    log::info!(
        "finished {}: {} levels, {} steps, {} elements, error {:?}",
        spec.stem(),
        record.levels.len(),
        last.total_steps,
        last.elements,
        last.error_h1,
    );
    Ok(())
}

/// All experiment x scheme x estimator combinations.
pub fn matrix_specs(max_elements: usize, out: &Path) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    for experiment in [
        ExperimentArg::Smooth,
        ExperimentArg::Singular,
        ExperimentArg::SingularIncreasing,
    ] {
        for scheme in [
            SchemeArg::Zarantonello,
            SchemeArg::Kacanov,
            SchemeArg::Newton,
        ] {
            for estimator in [EstimatorArg::Linear, EstimatorArg::Nonlinear] {
                let delta = match scheme {
                    SchemeArg::Newton => 1.0,
                    _ => experiment.default_delta(),
                };
                specs.push(RunSpec {
                    experiment,
                    scheme,
                    estimator,
                    delta,
                    epsilon: 1e-6,
                    kappa: 0.5,
                    vartheta: 2.0,
                    theta_doerfler: 0.5,
                    max_elements,
                    out: out.to_path_buf(),
                    seed: 0,
                    dump_mesh: false,
                });
            }
        }
    }
    specs
}

/// Worker-thread cap: `ILG_THREADS` if set, else the available parallelism.
fn worker_threads(jobs: usize) -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("ILG_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

pub fn run_matrix(max_elements: usize, out: &Path) -> RunResult {
    let specs = matrix_specs(max_elements, out);
    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..worker_threads(specs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let spec = &specs[i];
                log::info!("matrix: starting {}", spec.stem());
                if let Err(e) = execute(spec) {
                    failures
                        .lock()
                        .expect("failure list poisoned")
                        .push(format!("{}: {e}", spec.stem()));
                }
            });
        }
    });

    let failures = failures.into_inner().expect("failure list poisoned");
    if failures.is_empty() {
        log::info!("matrix: all {} runs completed", 18);
        Ok(())
    } else {
        Err(format!("{} runs failed: {}", failures.len(), failures.join("; ")).into())
    }
}

/// Fast internal consistency checks; prints one line per check.
pub fn selftest() -> RunResult {
    let mut failed = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "ok" } else { "FAILED" });
        if !ok {
            failed += 1;
        }
    };

    let base = Mesh::lshape(0);
    check(
        "base mesh counts (12 elements, 11 vertices, 22 edges)",
        base.num_elements() == 12 && base.num_vertices() == 11 && base.num_edges() == 22,
    );
    let initial = Mesh::lshape(2);
    check(
        "initial experiment mesh has 192 elements",
        initial.num_elements() == 192,
    );
    check(
        "mesh area is 3",
        (initial.total_area() - 3.0).abs() < 1e-12,
    );

    let marked: Vec<usize> = (0..initial.num_elements()).step_by(7).collect();
    let refined = initial.bisect(&marked);
    check(
        "bisection closure keeps the mesh conforming",
        refined
            .as_ref()
            .map(|m| {
                let v = m.num_vertices() as i64;
                let e = m.num_edges() as i64;
                let f = m.num_elements() as i64;
                v - e + f == 1 && (m.total_area() - 3.0).abs() < 1e-12
            })
            .unwrap_or(false),
    );

    let problem = ProblemSpec::smooth_benchmark();
    let scheme = SchemeConfig::new(SchemeKind::Newton, &problem, 1.0);
    let mut config = AdaptConfig::new(scheme, EstimatorChoice::Linear);
    config.max_elements = 1500;
    let run = run_adaptive(&problem, &config);
    check(
        "small smooth Newton run converges with one step per mesh",
        run.as_ref()
            .map(|r| {
                let last = r.levels.last().unwrap();
                last.total_steps <= r.levels.len() + 2
                    && last.error_h1.unwrap() < r.levels[0].error_h1.unwrap()
            })
            .unwrap_or(false),
    );

    if failed == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(format!("selftest: {failed} check(s) failed").into())
    }
}
