use std::time::Instant;

use ilg::{
    run_adaptive, AdaptConfig, EstimatorChoice, Experiment, ProblemSpec, SchemeConfig, SchemeKind,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let max_elements: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);

    for (exp, delta) in [
        (Experiment::Smooth, 0.85),
        (Experiment::Singular, 0.5),
        (Experiment::SingularIncreasing, 0.4),
    ] {
        for kind in [SchemeKind::Zarantonello, SchemeKind::Kacanov, SchemeKind::Newton] {
            for estimator in [EstimatorChoice::Linear, EstimatorChoice::Nonlinear] {
                let problem = ProblemSpec::make_experiment(exp);
                let d = if kind == SchemeKind::Newton { 1.0 } else { delta };
                let scheme = SchemeConfig::new(kind, &problem, d);
                let mut config = AdaptConfig::new(scheme, estimator);
                config.max_elements = max_elements;
                let t0 = Instant::now();
                let record = run_adaptive(&problem, &config).unwrap();
                let dt = t0.elapsed().as_secs_f64();
                let last = record.levels.last().unwrap();
                let nmax = last.elements as f64;
                // least-squares slope of log(err) vs log(N) over the last decade
                let pts: Vec<(f64, f64)> = record
                    .levels
                    .iter()
                    .filter(|r| (r.elements as f64) >= nmax / 10.0)
                    .map(|r| ((r.elements as f64).ln(), r.error_h1.unwrap().ln()))
                    .collect();
                let n = pts.len() as f64;
                let sx: f64 = pts.iter().map(|p| p.0).sum();
                let sy: f64 = pts.iter().map(|p| p.1).sum();
                let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
                let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
                let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                let effs: Vec<f64> = record
                    .levels
                    .iter()
                    .skip(3)
                    .filter_map(|r| r.effectivity)
                    .collect();
                let (emin, emax) = effs
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                        (lo.min(e), hi.max(e))
                    });
                println!(
                    "{:<20} {:<13} {:<9} levels {:>3} steps {:>3} N {:>7} err {:.3e} slope {:>6.3} eff [{:.2},{:.2}] {:>6.1}s",
                    format!("{exp:?}"),
                    kind.name(),
                    estimator.name(),
                    record.levels.len(),
                    last.total_steps,
                    last.elements,
                    last.error_h1.unwrap(),
                    slope,
                    emin,
                    emax,
                    dt
                );
            }
        }
    }
}
