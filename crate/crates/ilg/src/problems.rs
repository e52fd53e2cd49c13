//! Benchmark problem definitions for the quasilinear diffusion equation
//! `-div( mu(|grad u|^2) grad u ) = g` on the L-shaped domain.
//!
//! Each benchmark carries the diffusion coefficient `mu` with its derivative
//! and antiderivative `psi(s) = (1/2) int_0^s mu`, the monotonicity constants
//! bounding the slope of `t -> mu(t^2) t`, an exact solution with closed-form
//! derivatives, and the manufactured forcing derived from it.

use std::f64::consts::PI;

/// The three experiment configurations exposed by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Smooth,
    Singular,
    SingularIncreasing,
}

/// Diffusion coefficient families. `Constant` is a test-only spec that turns
/// the equation into the Poisson problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diffusion {
    /// `mu(t) = (t + 1)^{-1} + 1/2`, monotone decreasing.
    InverseShifted,
    /// `mu(t) = 1 + exp(-t)`, monotone decreasing.
    ExpDecay,
    /// `mu(t) = 2 - exp(-t)`, monotone increasing (stress case).
    ExpGrowth,
    Constant(f64),
}

impl Diffusion {
    pub fn mu(self, t: f64) -> f64 {
        match self {
            Diffusion::InverseShifted => 1.0 / (t + 1.0) + 0.5,
            Diffusion::ExpDecay => 1.0 + (-t).exp(),
            Diffusion::ExpGrowth => 2.0 - (-t).exp(),
            Diffusion::Constant(c) => c,
        }
    }

    pub fn mu_prime(self, t: f64) -> f64 {
        match self {
            Diffusion::InverseShifted => -1.0 / ((t + 1.0) * (t + 1.0)),
            Diffusion::ExpDecay => -(-t).exp(),
            Diffusion::ExpGrowth => (-t).exp(),
            Diffusion::Constant(_) => 0.0,
        }
    }

    /// `psi(s) = (1/2) int_0^s mu(t) dt` in closed form.
    pub fn psi(self, s: f64) -> f64 {
        match self {
            Diffusion::InverseShifted => 0.5 * ((1.0 + s).ln() + 0.5 * s),
            Diffusion::ExpDecay => 0.5 * (s + 1.0 - (-s).exp()),
            Diffusion::ExpGrowth => 0.5 * (2.0 * s - 1.0 + (-s).exp()),
            Diffusion::Constant(c) => 0.5 * c * s,
        }
    }
}

/// Exact solutions with value, gradient and Hessian in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactSolution {
    /// `sin(pi x) sin(pi y)`, smooth, zero on the whole boundary.
    ProductSine,
    /// `r^{2/3} sin(2 phi / 3) (1 - x^2)(1 - y^2) cos(phi)` with the polar
    /// angle taken in `[0, 3 pi / 2]`, so both reentrant edges are zero
    /// lines. The gradient blows up like `r^{-1/3}` at the origin.
    CornerSingular,
}

/// Value with first and second derivatives; products follow Leibniz' rule.
#[derive(Clone, Copy, Debug)]
struct Jet2 {
    v: f64,
    gx: f64,
    gy: f64,
    hxx: f64,
    hxy: f64,
    hyy: f64,
}

impl Jet2 {
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            gx: self.gx * o.v + self.v * o.gx,
            gy: self.gy * o.v + self.v * o.gy,
            hxx: self.hxx * o.v + 2.0 * self.gx * o.gx + self.v * o.hxx,
            hxy: self.hxy * o.v + self.gx * o.gy + self.gy * o.gx + self.v * o.hxy,
            hyy: self.hyy * o.v + 2.0 * self.gy * o.gy + self.v * o.hyy,
        }
    }
}

/// Polar angle in `[0, 3 pi / 2]` measured from the positive x-axis.
fn branch_angle(x: f64, y: f64) -> f64 {
    let phi = y.atan2(x);
    if phi < 0.0 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// Jet of `Im(z^a) = r^a sin(a phi)` on the branch above; harmonic for any a.
fn harmonic_power_jet(x: f64, y: f64, a: f64) -> Jet2 {
    let r = x.hypot(y);
    let phi = branch_angle(x, y);
    let ra = r.powf(a);
    let ra1 = a * r.powf(a - 1.0);
    let ra2 = a * (a - 1.0) * r.powf(a - 2.0);
    Jet2 {
        v: ra * (a * phi).sin(),
        gx: ra1 * ((a - 1.0) * phi).sin(),
        gy: ra1 * ((a - 1.0) * phi).cos(),
        hxx: ra2 * ((a - 2.0) * phi).sin(),
        hxy: ra2 * ((a - 2.0) * phi).cos(),
        hyy: -ra2 * ((a - 2.0) * phi).sin(),
    }
}

/// Jet of `cos(phi) = x / r`.
fn cos_angle_jet(x: f64, y: f64) -> Jet2 {
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    let r3 = r * r2;
    let r5 = r3 * r2;
    Jet2 {
        v: x / r,
        gx: y * y / r3,
        gy: -x * y / r3,
        hxx: -3.0 * x * y * y / r5,
        hxy: y * (2.0 * x * x - y * y) / r5,
        hyy: x * (2.0 * y * y - x * x) / r5,
    }
}

/// Jet of the bubble `(1 - x^2)(1 - y^2)`.
fn bubble_jet(x: f64, y: f64) -> Jet2 {
    let (bx, by) = (1.0 - x * x, 1.0 - y * y);
    Jet2 {
        v: bx * by,
        gx: -2.0 * x * by,
        gy: -2.0 * y * bx,
        hxx: -2.0 * by,
        hxy: 4.0 * x * y,
        hyy: -2.0 * bx,
    }
}

impl ExactSolution {
    pub fn value(self, x: f64, y: f64) -> f64 {
        match self {
            ExactSolution::ProductSine => (PI * x).sin() * (PI * y).sin(),
            ExactSolution::CornerSingular => {
                if x == 0.0 && y == 0.0 {
                    return 0.0;
                }
                self.jet(x, y).v
            }
        }
    }

    pub fn gradient(self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ExactSolution::ProductSine => [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ],
            ExactSolution::CornerSingular => {
                let j = self.jet(x, y);
                [j.gx, j.gy]
            }
        }
    }

    /// Second partials as `[u_xx, u_xy, u_yy]`.
    pub fn hessian(self, x: f64, y: f64) -> [f64; 3] {
        match self {
            ExactSolution::ProductSine => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let p2 = PI * PI;
                [-p2 * sx * sy, p2 * cx * cy, -p2 * sx * sy]
            }
            ExactSolution::CornerSingular => {
                let j = self.jet(x, y);
                [j.hxx, j.hxy, j.hyy]
            }
        }
    }

    fn jet(self, x: f64, y: f64) -> Jet2 {
        debug_assert!(
            x != 0.0 || y != 0.0,
            "corner singularity derivatives are undefined at the origin"
        );
        harmonic_power_jet(x, y, 2.0 / 3.0)
            .mul(bubble_jet(x, y))
            .mul(cos_angle_jet(x, y))
    }
}

/// A complete benchmark: coefficient, constants, exact solution, forcing.
#[derive(Clone, Copy, Debug)]
pub struct ProblemSpec {
    pub diffusion: Diffusion,
    pub exact: Option<ExactSolution>,
    /// Lower bound on the slope of `t -> mu(t^2) t` (strong monotonicity).
    pub slope_min: f64,
    /// Upper bound on the slope of `t -> mu(t^2) t` (Lipschitz bound).
    pub slope_max: f64,
}

impl ProblemSpec {
    /// Smooth benchmark: `mu(t) = (t+1)^{-1} + 1/2`, exact solution
    /// `sin(pi x) sin(pi y)`. The slope `(1 - s)/(1 + s)^2 + 1/2` of
    /// `mu(t^2) t` attains its minimum 3/8 at `s = t^2 = 3` and its maximum
    /// 3/2 at `s = 0`.
    pub fn smooth_benchmark() -> ProblemSpec {
        ProblemSpec {
            diffusion: Diffusion::InverseShifted,
            exact: Some(ExactSolution::ProductSine),
            slope_min: 3.0 / 8.0,
            slope_max: 3.0 / 2.0,
        }
    }

    /// Singular benchmark: `mu(t) = 1 + exp(-t)` with the corner singularity
    /// solution. Slope extrema: minimum `1 - 2 exp(-3/2)` at `s = 3/2`,
    /// maximum 2 at `s = 0`.
    pub fn singular_benchmark() -> ProblemSpec {
        ProblemSpec {
            diffusion: Diffusion::ExpDecay,
            exact: Some(ExactSolution::CornerSingular),
            slope_min: 1.0 - 2.0 * (-1.5_f64).exp(),
            slope_max: 2.0,
        }
    }

    /// Increasing-diffusion stress case: `mu(t) = 2 - exp(-t)` with the
    /// corner singularity solution. Slope extrema: minimum 1 at `s = 0`,
    /// maximum `2 + 2 exp(-3/2)` at `s = 3/2`.
    pub fn singular_increasing_benchmark() -> ProblemSpec {
        ProblemSpec {
            diffusion: Diffusion::ExpGrowth,
            exact: Some(ExactSolution::CornerSingular),
            slope_min: 1.0,
            slope_max: 2.0 + 2.0 * (-1.5_f64).exp(),
        }
    }

    /// Test-only spec with constant coefficient: the Poisson problem scaled
    /// by `c`, still with the smooth exact solution.
    pub fn constant_coefficient(c: f64) -> ProblemSpec {
        assert!(c > 0.0);
        ProblemSpec {
            diffusion: Diffusion::Constant(c),
            exact: Some(ExactSolution::ProductSine),
            slope_min: c,
            slope_max: c,
        }
    }

    pub fn make_experiment(which: Experiment) -> ProblemSpec {
        match which {
            Experiment::Smooth => Self::smooth_benchmark(),
            Experiment::Singular => Self::singular_benchmark(),
            Experiment::SingularIncreasing => Self::singular_increasing_benchmark(),
        }
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.diffusion.mu(t)
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        self.diffusion.mu_prime(t)
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.diffusion.psi(s)
    }

    /// Strong monotonicity constant of the divergence-form operator.
    pub fn nu(&self) -> f64 {
        self.slope_min
    }

    /// Lipschitz constant of the divergence-form operator.
    pub fn lipschitz(&self) -> f64 {
        3.0 * self.slope_max
    }

    /// Manufactured forcing
    /// `g = -2 mu'(q) (H grad u) . grad u - mu(q) laplace u`, `q = |grad u|^2`,
    /// from the exact solution's closed-form derivatives. Undefined at the
    /// origin for the singular benchmarks; quadrature nodes never hit it.
    pub fn forcing_at(&self, x: f64, y: f64) -> f64 {
        let exact = self
            .exact
            .expect("forcing requires a manufactured exact solution");
        let g = exact.gradient(x, y);
        let h = exact.hessian(x, y);
        let q = g[0] * g[0] + g[1] * g[1];
        let hg = [h[0] * g[0] + h[1] * g[1], h[1] * g[0] + h[2] * g[1]];
        let laplace = h[0] + h[2];
        -2.0 * self.mu_prime(q) * (hg[0] * g[0] + hg[1] * g[1]) - self.mu(q) * laplace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D oracle for the slope extrema of `t -> mu(t^2) t`: coarse grid scan
    /// of `f(s) = 2 mu'(s) s + mu(s)` followed by golden-section refinement.
    fn slope_range_oracle(d: Diffusion) -> (f64, f64) {
        let f = |s: f64| 2.0 * d.mu_prime(s) * s + d.mu(s);
        let mut min = (f64::INFINITY, 0.0);
        let mut max = (f64::NEG_INFINITY, 0.0);
        let grid: Vec<f64> = (0..=6000).map(|i| i as f64 * 0.01).collect();
        for &s in &grid {
            let v = f(s);
            if v < min.0 {
                min = (v, s);
            }
            if v > max.0 {
                max = (v, s);
            }
        }
        let golden = |mut lo: f64, mut hi: f64, maximize: bool| -> f64 {
            let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let a = hi - ratio * (hi - lo);
                let b = lo + ratio * (hi - lo);
                let (fa, fb) = (f(a), f(b));
                let keep_low = if maximize { fa > fb } else { fa < fb };
                if keep_low {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            f(0.5 * (lo + hi))
        };
        let lo_min = golden((min.1 - 0.02).max(0.0), min.1 + 0.02, false);
        let hi_max = golden((max.1 - 0.02).max(0.0), max.1 + 0.02, true);
        (lo_min.min(min.0), hi_max.max(max.0))
    }

    #[test]
    fn hard_coded_constants_match_the_oracle() {
        for (problem, name) in [
            (ProblemSpec::smooth_benchmark(), "smooth"),
            (ProblemSpec::singular_benchmark(), "singular"),
            (
                ProblemSpec::singular_increasing_benchmark(),
                "singular_increasing",
            ),
        ] {
            let (lo, hi) = slope_range_oracle(problem.diffusion);
            assert!(
                (lo - problem.slope_min).abs() < 1e-9,
                "{name}: slope_min {} vs oracle {lo}",
                problem.slope_min
            );
            assert!(
                (hi - problem.slope_max).abs() < 1e-9,
                "{name}: slope_max {} vs oracle {hi}",
                problem.slope_max
            );
        }
    }

    #[test]
    fn smooth_mu_values() {
        let p = ProblemSpec::smooth_benchmark();
        assert!((p.mu(0.0) - 1.5).abs() < 1e-15);
        assert!((p.mu(1.0) - 1.0).abs() < 1e-15);
        assert_eq!((p.slope_min, p.slope_max), (0.375, 1.5));
    }

    #[test]
    fn psi_vanishes_at_zero_and_matches_mu() {
        for d in [
            Diffusion::InverseShifted,
            Diffusion::ExpDecay,
            Diffusion::ExpGrowth,
            Diffusion::Constant(0.75),
        ] {
            assert_eq!(d.psi(0.0), 0.0);
            // psi'(s) = mu(s) / 2 by finite differences.
            for &s in &[0.1_f64, 0.5, 1.0, 3.0, 10.0] {
                let h = 1e-6 * s.max(1.0);
                let fd = (d.psi(s + h) - d.psi(s - h)) / (2.0 * h);
                let want = 0.5 * d.mu(s);
                assert!((fd - want).abs() < 1e-6 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mu_bounds_hold_on_wide_sample() {
        for p in [
            ProblemSpec::smooth_benchmark(),
            ProblemSpec::singular_benchmark(),
            ProblemSpec::singular_increasing_benchmark(),
        ] {
            for i in 0..=600 {
                let t = 10f64.powf(-3.0 + i as f64 * 0.015); // up to 1e6
                let m = p.mu(t);
                assert!(m >= p.slope_min - 1e-12 && m <= p.slope_max + 1e-12);
            }
        }
    }

    #[test]
    fn difference_quotients_stay_in_slope_band() {
        for p in [
            ProblemSpec::smooth_benchmark(),
            ProblemSpec::singular_benchmark(),
            ProblemSpec::singular_increasing_benchmark(),
        ] {
            let samples: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
            for &t in &samples {
                for &s in &samples {
                    if t == s {
                        continue;
                    }
                    let quot = (p.mu(t * t) * t - p.mu(s * s) * s) / (t - s);
                    assert!(
                        quot >= p.slope_min - 1e-10 && quot <= p.slope_max + 1e-10,
                        "quotient {quot} at (t, s) = ({t}, {s})"
                    );
                }
            }
        }
    }

    #[test]
    fn increasing_diffusion_violates_decreasing_assumption() {
        let p = ProblemSpec::singular_increasing_benchmark();
        assert!(p.mu_prime(1.0) > 0.0);
    }

    #[test]
    fn smooth_forcing_at_center_of_square() {
        let p = ProblemSpec::smooth_benchmark();
        // grad u = 0 and laplace u = -2 pi^2 there, so g = 3 pi^2.
        let g = p.forcing_at(0.5, 0.5);
        assert!((g - 3.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn constant_mu_forcing_is_scaled_laplacian() {
        let p = ProblemSpec::constant_coefficient(2.0);
        for &(x, y) in &[(0.3, 0.7), (-0.5, 0.2), (-0.9, -0.1)] {
            let h = ExactSolution::ProductSine.hessian(x, y);
            let want = -2.0 * (h[0] + h[2]);
            assert!((p.forcing_at(x, y) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_solution_boundary_and_origin() {
        let u = ExactSolution::CornerSingular;
        assert_eq!(u.value(0.0, 0.0), 0.0);
        assert!(u.value(-1.0, 0.5).abs() < 1e-15);
        assert!(u.value(0.5, 1.0).abs() < 1e-15);
        // Reentrant edges.
        for &t in &[0.25, 0.5, 0.75] {
            assert!(u.value(t, 0.0).abs() < 1e-13, "y = 0 edge at x = {t}");
            assert!(u.value(0.0, -t).abs() < 1e-13, "x = 0 edge at y = -{t}");
        }
    }

    #[test]
    fn singular_gradient_grows_like_r_to_minus_third() {
        let u = ExactSolution::CornerSingular;
        let phi = 3.0 * PI / 4.0;
        let at = |r: f64| {
            let g = u.gradient(r * phi.cos(), r * phi.sin());
            g[0].hypot(g[1])
        };
        let ratio = at(1e-4) / at(1e-2);
        let expect = 100.0_f64.powf(1.0 / 3.0);
        assert!(
            (ratio / expect - 1.0).abs() < 0.05,
            "ratio {ratio}, expected about {expect}"
        );
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        for exact in [ExactSolution::ProductSine, ExactSolution::CornerSingular] {
            for &(x, y) in &[
                (0.37, 0.61),
                (-0.52, 0.33),
                (-0.41, -0.73),
                (0.11, 0.93),
                (-0.97, -0.05),
            ] {
                let h = 1e-5;
                let g = exact.gradient(x, y);
                let fdx = (exact.value(x + h, y) - exact.value(x - h, y)) / (2.0 * h);
                let fdy = (exact.value(x, y + h) - exact.value(x, y - h)) / (2.0 * h);
                assert!((g[0] - fdx).abs() < 2e-6 * (1.0 + fdx.abs()), "ux at ({x},{y})");
                assert!((g[1] - fdy).abs() < 2e-6 * (1.0 + fdy.abs()), "uy at ({x},{y})");

                let hess = exact.hessian(x, y);
                let gxp = exact.gradient(x + h, y);
                let gxm = exact.gradient(x - h, y);
                let gyp = exact.gradient(x, y + h);
                let gym = exact.gradient(x, y - h);
                let fd_xx = (gxp[0] - gxm[0]) / (2.0 * h);
                let fd_xy = (gyp[0] - gym[0]) / (2.0 * h);
                let fd_yy = (gyp[1] - gym[1]) / (2.0 * h);
                assert!((hess[0] - fd_xx).abs() < 5e-6 * (1.0 + fd_xx.abs()));
                assert!((hess[1] - fd_xy).abs() < 5e-6 * (1.0 + fd_xy.abs()));
                assert!((hess[2] - fd_yy).abs() < 5e-6 * (1.0 + fd_yy.abs()));
            }
        }
    }
}
