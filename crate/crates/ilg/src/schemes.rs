//! Iterative linearization steps: Zarantonello, Kacanov and damped Newton.
//!
//! Every step solves one SPD system for the next iterate. All three schemes
//! are descent methods for the convex energy
//! `H(u) = int psi(|grad u|^2) - <g, u>`; Kacanov decreases it
//! unconditionally (for decreasing `mu`) and the Newton damping controller
//! enforces an explicit energy-decrease test per step.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{
    assemble_load, assemble_newton_matrix, assemble_weighted_stiffness, dot, solve_spd_with,
    DenseVector, LinalgError, SolveOptions, SparseSpd,
};
use crate::problems::ProblemSpec;
use crate::space::{FeFunction, FeSpace, QuadratureRule, SpaceError};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("Newton damping correction loop exhausted ({0} corrections): problem assumptions violated")]
    DampingStalled(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    Zarantonello,
    Kacanov,
    Newton,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Zarantonello => "zarantonello",
            SchemeKind::Kacanov => "kacanov",
            SchemeKind::Newton => "newton",
        }
    }
}

/// Damping parameters for the Newton prediction/correction strategy.
#[derive(Clone, Copy, Debug)]
pub struct DampingControl {
    /// Correction factor in (0, 1).
    pub kappa: f64,
    /// Energy-decrease threshold in the acceptance test.
    pub epsilon: f64,
    /// Initial damping value seeding the history.
    pub delta0: f64,
}

impl Default for DampingControl {
    fn default() -> Self {
        DampingControl {
            kappa: 0.5,
            epsilon: 1e-6,
            delta0: 1.0,
        }
    }
}

impl DampingControl {
    /// Correction floor `alpha_F' (epsilon + L_F / 2)^{-1}`; at or below it
    /// the energy-decrease test is guaranteed to pass.
    pub fn floor(&self, problem: &ProblemSpec) -> f64 {
        problem.nu() / (self.epsilon + 0.5 * problem.lipschitz())
    }
}

/// One correction of the damping parameter: `max(floor, kappa * delta)`.
pub fn corrected_delta(floor: f64, kappa: f64, delta: f64) -> f64 {
    (kappa * delta).max(floor)
}

/// Scheme selection together with its coercivity/boundedness pair.
#[derive(Clone, Copy, Debug)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Zarantonello step weight, or the initial Newton damping; unused by
    /// Kacanov.
    pub delta: f64,
    pub damping: DampingControl,
    /// Coercivity constant of the step bilinear form.
    pub alpha: f64,
    /// Boundedness constant of the step bilinear form.
    pub beta: f64,
    /// Relative residual target of the inner linear solves.
    pub solver_tol: f64,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, problem: &ProblemSpec, delta: f64) -> SchemeConfig {
        let damping = DampingControl {
            delta0: if kind == SchemeKind::Newton { delta } else { 1.0 },
            ..DampingControl::default()
        };
        Self::with_damping(kind, problem, delta, damping)
    }

    pub fn with_damping(
        kind: SchemeKind,
        problem: &ProblemSpec,
        delta: f64,
        damping: DampingControl,
    ) -> SchemeConfig {
        assert!(delta > 0.0);
        let (m, cap_m) = (problem.slope_min, problem.slope_max);
        let (alpha, beta) = match kind {
            SchemeKind::Zarantonello => (1.0 / delta, 1.0 / delta),
            SchemeKind::Kacanov => (m, cap_m),
            SchemeKind::Newton => {
                // alpha_F' = m_mu, beta_F' = 2 M_mu - m_mu; delta ranges in
                // [correction floor, 1].
                let delta_max = 1.0;
                let delta_min = damping.floor(problem);
                (m / delta_max, (2.0 * cap_m - m) / delta_min)
            }
        };
        SchemeConfig {
            kind,
            delta,
            damping,
            alpha,
            beta,
            solver_tol: 1e-10,
        }
    }
}

/// Theoretical damping/step-size interval for guaranteed convergence;
/// advisory (the experiment runner warns outside it).
pub fn admissible_delta_interval(kind: SchemeKind, problem: &ProblemSpec) -> (f64, f64) {
    let nu = problem.nu();
    let lf = problem.lipschitz();
    match kind {
        SchemeKind::Zarantonello => (0.0, 2.0 * nu / (lf * lf)),
        SchemeKind::Kacanov => (0.0, f64::INFINITY),
        SchemeKind::Newton => (0.0, 2.0 * nu / lf),
    }
}

/// Iteration state: the two most recent iterates plus bookkeeping.
#[derive(Clone, Debug)]
pub struct SchemeState {
    pub current: FeFunction,
    pub previous: FeFunction,
    /// `|u^{n+1} - u^n|_{H^1}` of the latest step.
    pub step_norm: f64,
    /// Number of steps taken.
    pub n: usize,
    /// Energy of the current iterate.
    pub energy: f64,
    /// Last accepted Newton damping value.
    pub newton_delta: f64,
    /// Accepted damping history `[delta(u^{n-1}), delta(u^{n-2})]`.
    pub delta_hist: [f64; 2],
}

/// Outcome of a single linearization step.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub step_norm: f64,
    pub energy: f64,
    /// Damping value that produced the step (Newton only).
    pub accepted_delta: Option<f64>,
    /// Number of damping corrections before acceptance (Newton only).
    pub corrections: usize,
}

/// Per-mesh driver caching the load vector and, for Zarantonello, the fixed
/// stiffness matrix across steps.
pub struct SchemeDriver<'a> {
    space: Arc<FeSpace>,
    problem: &'a ProblemSpec,
    pub cfg: SchemeConfig,
    load: DenseVector,
    plain_stiffness: std::cell::OnceCell<SparseSpd>,
}

impl<'a> SchemeDriver<'a> {
    pub fn new(space: Arc<FeSpace>, problem: &'a ProblemSpec, cfg: SchemeConfig) -> Self {
        let rule = QuadratureRule::degree5();
        let load = assemble_load(&space, |x, y| problem.forcing_at(x, y), &rule);
        SchemeDriver {
            space,
            problem,
            cfg,
            load,
            plain_stiffness: std::cell::OnceCell::new(),
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    fn plain_stiffness(&self) -> &SparseSpd {
        self.plain_stiffness.get_or_init(|| {
            let ones = vec![1.0; self.space.num_elements()];
            assemble_weighted_stiffness(&self.space, &ones).expect("unit weights are positive")
        })
    }

    fn solve_opts(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.cfg.solver_tol,
            ..SolveOptions::default()
        }
    }

    pub fn energy_of(&self, u: &FeFunction) -> f64 {
        energy_with_load(&self.space, u, self.problem, &self.load)
    }

    /// Discrete residual `<F(u), phi_i> = (mu(|grad u|^2) grad u, grad phi_i) - (g, phi_i)`.
    pub fn residual(&self, u: &FeFunction) -> DenseVector {
        let flux: Vec<[f64; 2]> = (0..self.space.num_elements())
            .map(|k| {
                let g = u.gradient_on_element(k);
                let mu = self.problem.mu(g[0] * g[0] + g[1] * g[1]);
                [mu * g[0], mu * g[1]]
            })
            .collect();
        let mut r = crate::linalg::assemble_flux_load(&self.space, &flux);
        for (ri, li) in r.iter_mut().zip(&self.load) {
            *ri -= li;
        }
        r
    }

    pub fn initial_state(&self, u0: FeFunction) -> SchemeState {
        let energy = self.energy_of(&u0);
        let delta0 = self.cfg.damping.delta0;
        SchemeState {
            previous: u0.clone(),
            current: u0,
            step_norm: 0.0,
            n: 0,
            energy,
            newton_delta: delta0,
            delta_hist: [delta0, delta0],
        }
    }

    /// Transplants a state onto this driver's (finer) mesh, keeping the
    /// damping history. `carried` must live on this driver's space.
    pub fn carry_state(&self, old: &SchemeState, carried: FeFunction) -> SchemeState {
        let energy = self.energy_of(&carried);
        SchemeState {
            previous: carried.clone(),
            current: carried,
            step_norm: 0.0,
            n: old.n,
            energy,
            newton_delta: old.newton_delta,
            delta_hist: old.delta_hist,
        }
    }

    pub fn step(&self, state: &mut SchemeState) -> Result<StepInfo, SchemeError> {
        match self.cfg.kind {
            SchemeKind::Zarantonello => self.zarantonello_step(state),
            SchemeKind::Kacanov => self.kacanov_step(state),
            SchemeKind::Newton => self.newton_step(state),
        }
    }

    /// `(grad u^{n+1}, grad v) = (grad u^n, grad v)
    ///   - delta [ (mu(|grad u^n|^2) grad u^n, grad v) - (g, v) ]`.
    fn zarantonello_step(&self, state: &mut SchemeState) -> Result<StepInfo, SchemeError> {
        let a = self.plain_stiffness();
        let delta = self.cfg.delta;
        let au = a.apply(state.current.coeffs());
        let resid = self.residual(&state.current);
        let rhs: DenseVector = au
            .iter()
            .zip(&resid)
            .map(|(aui, ri)| aui - delta * ri)
            .collect();
        let x = solve_spd_with(a, &rhs, Some(state.current.coeffs()), self.solve_opts())?;
        let info = self.commit(state, x, None, 0)?;
        Ok(info)
    }

    /// Frozen-coefficient step: `A[u^n] u^{n+1} = g` with the weight
    /// `mu(|grad u^n|^2)` per element.
    fn kacanov_step(&self, state: &mut SchemeState) -> Result<StepInfo, SchemeError> {
        let weights: Vec<f64> = (0..self.space.num_elements())
            .map(|k| {
                let g = state.current.gradient_on_element(k);
                self.problem.mu(g[0] * g[0] + g[1] * g[1])
            })
            .collect();
        let a = assemble_weighted_stiffness(&self.space, &weights)?;
        let x = solve_spd_with(&a, &self.load, Some(state.current.coeffs()), self.solve_opts())?;
        let info = self.commit(state, x, None, 0)?;
        Ok(info)
    }

    /// Damped Newton step with the prediction/correction controller. The
    /// damping enters only the right-hand side
    /// `F'(u^n) u^{n+1} = F'(u^n) u^n - delta F(u^n)`, so corrections reuse
    /// the assembled matrix.
    fn newton_step(&self, state: &mut SchemeState) -> Result<StepInfo, SchemeError> {
        let ctrl = &self.cfg.damping;
        let a = assemble_newton_matrix(&self.space, &state.current, self.problem, 1.0)?;
        let au = a.apply(state.current.coeffs());
        let resid = self.residual(&state.current);

        let [d_prev1, d_prev2] = state.delta_hist;
        let mut delta = if d_prev2 <= d_prev1 {
            (d_prev1 / ctrl.kappa).min(1.0)
        } else {
            d_prev1
        };
        let floor = ctrl.floor(self.problem);
        let scale = state.current.h1_seminorm().max(1.0);

        let mut corrections = 0usize;
        loop {
            let rhs: DenseVector = au
                .iter()
                .zip(&resid)
                .map(|(aui, ri)| aui - delta * ri)
                .collect();
            let x = solve_spd_with(&a, &rhs, Some(state.current.coeffs()), self.solve_opts())?;
            let candidate = self.space.function_from_coeffs(x);
            let step_norm = candidate.sub(&state.current)?.h1_seminorm();

            // At a discrete fixed point the energy difference is pure
            // rounding noise; accept the (null) step without a damping fight.
            let converged = step_norm <= 1e-12 * scale;
            let accepted = if converged {
                true
            } else {
                let energy_new = self.energy_of(&candidate);
                state.energy - energy_new >= ctrl.epsilon * step_norm * step_norm
            };

            if accepted {
                state.delta_hist = [delta, d_prev1];
                state.newton_delta = delta;
                let info = self.commit_function(state, candidate, Some(delta), corrections)?;
                return Ok(info);
            }

            corrections += 1;
            if corrections > 64 {
                return Err(SchemeError::DampingStalled(corrections));
            }
            delta = corrected_delta(floor, ctrl.kappa, delta);
        }
    }

    fn commit(
        &self,
        state: &mut SchemeState,
        coeffs: Vec<f64>,
        accepted_delta: Option<f64>,
        corrections: usize,
    ) -> Result<StepInfo, SchemeError> {
        let next = self.space.function_from_coeffs(coeffs);
        self.commit_function(state, next, accepted_delta, corrections)
    }

    fn commit_function(
        &self,
        state: &mut SchemeState,
        next: FeFunction,
        accepted_delta: Option<f64>,
        corrections: usize,
    ) -> Result<StepInfo, SchemeError> {
        let step_norm = next.sub(&state.current)?.h1_seminorm();
        let energy = self.energy_of(&next);
        state.previous = std::mem::replace(&mut state.current, next);
        state.step_norm = step_norm;
        state.n += 1;
        state.energy = energy;
        Ok(StepInfo {
            step_norm,
            energy,
            accepted_delta,
            corrections,
        })
    }
}

/// Energy functional `H(u) = sum_K |K| psi(|grad u|_K^2) - <g, u>` with a
/// precomputed load vector for the pairing term.
pub fn energy_with_load(
    space: &FeSpace,
    u: &FeFunction,
    problem: &ProblemSpec,
    load: &[f64],
) -> f64 {
    let mut bulk = 0.0;
    for k in 0..space.num_elements() {
        let g = u.gradient_on_element(k);
        bulk += space.geometry(k).area * problem.psi(g[0] * g[0] + g[1] * g[1]);
    }
    bulk - dot(load, u.coeffs())
}

/// Energy functional assembling the load with the default degree-5 rule.
pub fn energy(space: &FeSpace, u: &FeFunction, problem: &ProblemSpec) -> f64 {
    let rule = QuadratureRule::degree5();
    let load = assemble_load(space, |x, y| problem.forcing_at(x, y), &rule);
    energy_with_load(space, u, problem, &load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_spd;
    use crate::mesh::Mesh;

    fn space_192() -> Arc<FeSpace> {
        FeSpace::new(Arc::new(Mesh::lshape(2)))
    }

    fn driver<'a>(
        space: &Arc<FeSpace>,
        problem: &'a ProblemSpec,
        kind: SchemeKind,
        delta: f64,
    ) -> SchemeDriver<'a> {
        SchemeDriver::new(Arc::clone(space), problem, SchemeConfig::new(kind, problem, delta))
    }

    /// Coefficients of the discrete Poisson solution `-c lap u = g`.
    fn discrete_poisson(space: &Arc<FeSpace>, problem: &ProblemSpec, c: f64) -> FeFunction {
        let rule = QuadratureRule::degree5();
        let load = assemble_load(space, |x, y| problem.forcing_at(x, y), &rule);
        let weights = vec![c; space.num_elements()];
        let a = assemble_weighted_stiffness(space, &weights).unwrap();
        space.function_from_coeffs(solve_spd(&a, &load).unwrap())
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let space = space_192();
        let problem = ProblemSpec::smooth_benchmark();
        assert_eq!(energy(&space, &space.zero_function(), &problem), 0.0);
    }

    #[test]
    fn energy_matches_quadratic_formula_for_constant_mu() {
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(1.0);
        let u = space.interpolate(|x, y| x * y * (1.0 - x));
        let rule = QuadratureRule::degree5();
        let load = assemble_load(&space, |x, y| problem.forcing_at(x, y), &rule);
        let h = energy_with_load(&space, &u, &problem, &load);
        let want = 0.5 * u.h1_seminorm().powi(2) - dot(&load, u.coeffs());
        assert!((h - want).abs() < 1e-12);
    }

    #[test]
    fn energy_degree5_vs_degree7_loads() {
        // The psi term is exact for P1; the quadrature degree only affects
        // the pairing term, whose defect shrinks like h^6. The mesh below
        // puts it near 1e-10 relative.
        let space = FeSpace::new(Arc::new(Mesh::lshape(6)));
        let problem = ProblemSpec::smooth_benchmark();
        let u = space.interpolate(|x, y| (PI_ * x).sin() * (PI_ * y).sin());
        let load5 = assemble_load(&space, |x, y| problem.forcing_at(x, y), &QuadratureRule::degree5());
        let load7 = assemble_load(&space, |x, y| problem.forcing_at(x, y), &QuadratureRule::degree7());
        let h5 = energy_with_load(&space, &u, &problem, &load5);
        let h7 = energy_with_load(&space, &u, &problem, &load7);
        assert!(
            (h5 - h7).abs() <= 1e-8 * h7.abs(),
            "degree-5 vs degree-7 energies differ: {h5} vs {h7}"
        );
    }

    const PI_: f64 = std::f64::consts::PI;

    #[test]
    fn zarantonello_unit_delta_is_one_shot_for_constant_mu() {
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(1.0);
        let drv = driver(&space, &problem, SchemeKind::Zarantonello, 1.0);
        let mut state = drv.initial_state(space.zero_function());
        drv.step(&mut state).unwrap();
        let exact = discrete_poisson(&space, &problem, 1.0);
        let diff = state.current.sub(&exact).unwrap().h1_seminorm();
        assert!(diff < 1e-8, "distance to Galerkin solution: {diff}");
    }

    #[test]
    fn zarantonello_half_delta_halves_steps_for_constant_mu() {
        // u^{n+1} = (1 - delta) u^n + delta u*, so step norms contract by
        // exactly 1 - delta = 0.5 per iteration.
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(1.0);
        let drv = driver(&space, &problem, SchemeKind::Zarantonello, 0.5);
        let mut state = drv.initial_state(space.zero_function());
        let mut norms = Vec::new();
        for _ in 0..5 {
            drv.step(&mut state).unwrap();
            norms.push(state.step_norm);
        }
        for w in norms.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio - 0.5).abs() < 1e-8, "ratio {ratio}");
        }
    }

    #[test]
    fn kacanov_first_step_solves_constant_coefficient_problem() {
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(2.0);
        let drv = driver(&space, &problem, SchemeKind::Kacanov, 1.0);
        let mut state = drv.initial_state(space.zero_function());
        drv.step(&mut state).unwrap();
        let exact = discrete_poisson(&space, &problem, 2.0);
        let diff = state.current.sub(&exact).unwrap().h1_seminorm();
        assert!(diff < 1e-8);
    }

    #[test]
    fn newton_is_exact_on_linear_problems() {
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(1.5);
        let drv = driver(&space, &problem, SchemeKind::Newton, 1.0);
        let mut state = drv.initial_state(space.zero_function());
        let info = drv.step(&mut state).unwrap();
        assert_eq!(info.corrections, 0);
        assert_eq!(info.accepted_delta, Some(1.0));
        let exact = discrete_poisson(&space, &problem, 1.5);
        let diff = state.current.sub(&exact).unwrap().h1_seminorm();
        assert!(diff < 1e-8);
    }

    #[test]
    fn newton_full_step_accepted_on_initial_smooth_mesh() {
        let space = space_192();
        let problem = ProblemSpec::smooth_benchmark();
        let drv = driver(&space, &problem, SchemeKind::Newton, 1.0);
        let mut state = drv.initial_state(space.zero_function());
        let info = drv.step(&mut state).unwrap();
        assert_eq!(info.corrections, 0, "first smooth Newton step needed corrections");
        assert_eq!(info.accepted_delta, Some(1.0));
    }

    #[test]
    fn correction_sequence_matches_recursion() {
        let (floor, kappa) = (0.3, 0.5);
        let mut delta = 1.0;
        let mut seq = vec![delta];
        for _ in 0..3 {
            delta = corrected_delta(floor, kappa, delta);
            seq.push(delta);
        }
        assert_eq!(seq, vec![1.0, 0.5, 0.3, 0.3]);
    }

    #[test]
    fn fixed_point_is_preserved_by_all_schemes() {
        let space = space_192();
        let problem = ProblemSpec::smooth_benchmark();
        // Converge with Newton first, then check each scheme stays put.
        let newton = driver(&space, &problem, SchemeKind::Newton, 1.0);
        let mut state = newton.initial_state(space.zero_function());
        for _ in 0..12 {
            newton.step(&mut state).unwrap();
            if state.step_norm < 1e-12 {
                break;
            }
        }
        let fixed = state.current.clone();
        for kind in [SchemeKind::Zarantonello, SchemeKind::Kacanov, SchemeKind::Newton] {
            let drv = driver(&space, &problem, kind, 0.85);
            let mut st = drv.initial_state(fixed.clone());
            drv.step(&mut st).unwrap();
            assert!(
                st.step_norm < 1e-8,
                "{} moved a fixed point by {}",
                kind.name(),
                st.step_norm
            );
        }
    }

    #[test]
    fn zarantonello_contracts_at_rate_gamma_for_admissible_delta() {
        let space = space_192();
        let problem = ProblemSpec::smooth_benchmark();
        let (nu, lf) = (problem.nu(), problem.lipschitz());
        let delta = nu / (lf * lf); // optimal choice inside the interval
        let (lo, hi) = admissible_delta_interval(SchemeKind::Zarantonello, &problem);
        assert!(delta > lo && delta < hi);
        let gamma = 1.0 - 2.0 * delta * nu + delta * delta * lf * lf;

        let drv = driver(&space, &problem, SchemeKind::Zarantonello, delta);
        let mut state = drv.initial_state(space.zero_function());
        drv.step(&mut state).unwrap();
        let mut prev = state.step_norm;
        for _ in 0..4 {
            drv.step(&mut state).unwrap();
            let ratio_sq = (state.step_norm / prev).powi(2);
            assert!(
                ratio_sq <= gamma + 1e-8,
                "contraction ratio^2 {ratio_sq} exceeds gamma {gamma}"
            );
            prev = state.step_norm;
        }
    }

    #[test]
    fn kacanov_decreases_energy_with_the_coercivity_gap() {
        let space = space_192();
        for problem in [
            ProblemSpec::smooth_benchmark(),
            ProblemSpec::singular_benchmark(),
        ] {
            let drv = driver(&space, &problem, SchemeKind::Kacanov, 1.0);
            let mut state = drv.initial_state(space.zero_function());
            let mut last_energy = state.energy;
            for _ in 0..8 {
                drv.step(&mut state).unwrap();
                let gap = last_energy - state.energy;
                let bound = 0.5 * drv.cfg.alpha * state.step_norm * state.step_norm;
                assert!(
                    gap >= bound - 1e-8,
                    "energy decrease {gap} below alpha/2 * step^2 = {bound}"
                );
                last_energy = state.energy;
            }
        }
    }

    #[test]
    fn newton_acceptance_test_holds_at_every_accepted_step() {
        let space = space_192();
        let problem = ProblemSpec::singular_benchmark();
        let drv = driver(&space, &problem, SchemeKind::Newton, 1.0);
        let mut state = drv.initial_state(space.zero_function());
        let eps = drv.cfg.damping.epsilon;
        for _ in 0..6 {
            let before = state.energy;
            let info = drv.step(&mut state).unwrap();
            if info.step_norm < 1e-12 {
                break;
            }
            assert!(
                before - info.energy >= eps * info.step_norm * info.step_norm - 1e-12,
                "acceptance inequality violated"
            );
        }
    }

    #[test]
    fn schemes_share_the_fixed_point_for_constant_mu() {
        let space = space_192();
        let problem = ProblemSpec::constant_coefficient(1.0);
        let exact = discrete_poisson(&space, &problem, 1.0);
        for kind in [SchemeKind::Zarantonello, SchemeKind::Kacanov, SchemeKind::Newton] {
            let drv = driver(&space, &problem, kind, 1.0);
            let mut state = drv.initial_state(space.zero_function());
            for _ in 0..3 {
                drv.step(&mut state).unwrap();
            }
            let diff = state.current.sub(&exact).unwrap().h1_seminorm();
            assert!(diff < 1e-8, "{}: {diff}", kind.name());
        }
    }

    #[test]
    fn admissible_intervals_for_smooth_benchmark() {
        let problem = ProblemSpec::smooth_benchmark();
        let (_, z) = admissible_delta_interval(SchemeKind::Zarantonello, &problem);
        assert!((z - 1.0 / 27.0).abs() < 1e-15);
        let (_, n) = admissible_delta_interval(SchemeKind::Newton, &problem);
        assert!((n - 1.0 / 6.0).abs() < 1e-15);
        let (_, k) = admissible_delta_interval(SchemeKind::Kacanov, &problem);
        assert!(k.is_infinite());
    }
}
