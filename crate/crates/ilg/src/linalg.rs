//! Sparse SPD linear algebra: assembly of the bilinear forms used by the
//! linearization schemes and estimators, and a Jacobi-preconditioned
//! conjugate gradient solver.
//!
//! All matrices act on the free dofs only: Dirichlet rows and columns are
//! eliminated during assembly, so every assembled operator is symmetric
//! positive definite by construction.

use thiserror::Error;

use crate::problems::ProblemSpec;
use crate::space::{FeFunction, FeSpace, QuadratureRule};

pub type DenseVector = Vec<f64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("nonpositive element weight {weight:e} on element {element}")]
    NonPositiveWeight { element: usize, weight: f64 },
    #[error("element {element}: diffusion coefficient violates the monotonicity bounds (mu = {mu:e}, mu + 2 q mu' = {omega:e})")]
    IndefiniteCoefficient { element: usize, mu: f64, omega: f64 },
    #[error("matrix/vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("conjugate gradients hit a non-SPD pivot at iteration {0}")]
    NotSpd(usize),
    #[error("conjugate gradients exhausted {0} iterations (relative residual {1:e})")]
    IterationBudget(usize, f64),
}

/// Compressed sparse row storage of a symmetric positive definite matrix.
/// The full symmetric pattern is stored to keep the matvec branch-free.
#[derive(Clone, Debug)]
pub struct SparseSpd {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpd {
    /// Builds the matrix from unordered `(row, col, value)` triplets;
    /// duplicate positions are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseSpd {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
            row_ptr[i + 1] = col_idx.len();
        }
        // Rows without entries inherit the running offset.
        for i in 1..=dim {
            row_ptr[i] = row_ptr[i].max(row_ptr[i - 1]);
        }
        SparseSpd {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(off) => self.values[range.start + off],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for off in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[off] * x[self.col_idx[off]];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> DenseVector {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> DenseVector {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(&self.apply(x), x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn triplet_capacity(space: &FeSpace) -> usize {
    9 * space.num_elements()
}

/// Stiffness matrix with a constant weight per element:
/// `sum_K w_K int_K grad(phi_i) . grad(phi_j)`.
pub fn assemble_weighted_stiffness(
    space: &FeSpace,
    weight: &[f64],
) -> Result<SparseSpd, LinalgError> {
    assert_eq!(weight.len(), space.num_elements());
    let mesh = space.mesh();
    let mut triplets = Vec::with_capacity(triplet_capacity(space));
    for k in 0..space.num_elements() {
        let w = weight[k];
        if !(w > 0.0) {
            return Err(LinalgError::NonPositiveWeight {
                element: k,
                weight: w,
            });
        }
        let geom = space.geometry(k);
        let elem = mesh.elements[k];
        for a in 0..3 {
            let Some(i) = space.dof_of_vertex(elem[a]) else {
                continue;
            };
            for b in 0..3 {
                let Some(j) = space.dof_of_vertex(elem[b]) else {
                    continue;
                };
                let ga = geom.shape_gradients[a];
                let gb = geom.shape_gradients[b];
                triplets.push((i, j, w * geom.area * (ga[0] * gb[0] + ga[1] * gb[1])));
            }
        }
    }
    Ok(SparseSpd::from_triplets(space.num_dofs(), triplets))
}

/// Scaled Newton system matrix
/// `delta^{-1} sum_K int_K [ 2 mu'(q)(grad u . grad phi_i)(grad u . grad phi_j)
///                           + mu(q) grad phi_i . grad phi_j ]`
/// with `q = |grad u|^2`; exact per element for P1.
pub fn assemble_newton_matrix(
    space: &FeSpace,
    u: &FeFunction,
    problem: &ProblemSpec,
    delta: f64,
) -> Result<SparseSpd, LinalgError> {
    assert!(delta > 0.0);
    let mesh = space.mesh();
    let inv_delta = 1.0 / delta;
    let mut triplets = Vec::with_capacity(triplet_capacity(space));
    for k in 0..space.num_elements() {
        let geom = space.geometry(k);
        let gu = u.gradient_on_element(k);
        let q = gu[0] * gu[0] + gu[1] * gu[1];
        let mu = problem.mu(q);
        let dmu = problem.mu_prime(q);
        // Element eigenvalues are mu and mu + 2 q mu'; both must stay positive
        // for an SPD system, which the monotonicity bounds guarantee.
        let omega = mu + 2.0 * q * dmu;
        if !(mu > 0.0) || !(omega > 0.0) {
            return Err(LinalgError::IndefiniteCoefficient {
                element: k,
                mu,
                omega,
            });
        }
        let elem = mesh.elements[k];
        let dots: Vec<f64> = (0..3)
            .map(|a| {
                let g = geom.shape_gradients[a];
                gu[0] * g[0] + gu[1] * g[1]
            })
            .collect();
        for a in 0..3 {
            let Some(i) = space.dof_of_vertex(elem[a]) else {
                continue;
            };
            for b in 0..3 {
                let Some(j) = space.dof_of_vertex(elem[b]) else {
                    continue;
                };
                let ga = geom.shape_gradients[a];
                let gb = geom.shape_gradients[b];
                let val = geom.area
                    * (2.0 * dmu * dots[a] * dots[b] + mu * (ga[0] * gb[0] + ga[1] * gb[1]));
                triplets.push((i, j, inv_delta * val));
            }
        }
    }
    Ok(SparseSpd::from_triplets(space.num_dofs(), triplets))
}

/// L2 mass matrix from the exact local block `(|K|/12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn assemble_mass(space: &FeSpace) -> SparseSpd {
    let mesh = space.mesh();
    let mut triplets = Vec::with_capacity(triplet_capacity(space));
    for k in 0..space.num_elements() {
        let scale = space.geometry(k).area / 12.0;
        let elem = mesh.elements[k];
        for a in 0..3 {
            let Some(i) = space.dof_of_vertex(elem[a]) else {
                continue;
            };
            for b in 0..3 {
                let Some(j) = space.dof_of_vertex(elem[b]) else {
                    continue;
                };
                let local = if a == b { 2.0 } else { 1.0 };
                triplets.push((i, j, scale * local));
            }
        }
    }
    SparseSpd::from_triplets(space.num_dofs(), triplets)
}

/// Load vector `int f phi_i` by quadrature.
pub fn assemble_load(
    space: &FeSpace,
    f: impl Fn(f64, f64) -> f64,
    rule: &QuadratureRule,
) -> DenseVector {
    let mesh = space.mesh();
    let mut load = vec![0.0; space.num_dofs()];
    for k in 0..space.num_elements() {
        let [a, b, c] = mesh.elements[k];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let area = space.geometry(k).area;
        for &(bary, w) in &rule.points {
            let x = bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0];
            let y = bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1];
            let fv = w * area * f(x, y);
            for (local, &v) in mesh.elements[k].iter().enumerate() {
                if let Some(i) = space.dof_of_vertex(v) {
                    load[i] += fv * bary[local];
                }
            }
        }
    }
    load
}

/// Load vector of an elementwise-constant flux: `sum_K |K| q_K . grad phi_i`.
pub fn assemble_flux_load(space: &FeSpace, flux: &[[f64; 2]]) -> DenseVector {
    assert_eq!(flux.len(), space.num_elements());
    let mesh = space.mesh();
    let mut load = vec![0.0; space.num_dofs()];
    for k in 0..space.num_elements() {
        let geom = space.geometry(k);
        let q = flux[k];
        for (local, &v) in mesh.elements[k].iter().enumerate() {
            if let Some(i) = space.dof_of_vertex(v) {
                let g = geom.shape_gradients[local];
                load[i] += geom.area * (q[0] * g[0] + q[1] * g[1]);
            }
        }
    }
    load
}

/// Options for [`solve_spd_with`]; `solve_spd` uses the defaults.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative residual target on `||Ax - b|| / ||b||`.
    pub tolerance: f64,
    /// Iteration cap as a multiple of the dimension.
    pub budget_factor: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            budget_factor: 20,
        }
    }
}

/// Solves `A x = b` by conjugate gradients with Jacobi preconditioning.
pub fn solve_spd(a: &SparseSpd, b: &[f64]) -> Result<DenseVector, LinalgError> {
    solve_spd_with(a, b, None, SolveOptions::default())
}

/// CG with an optional warm start. The returned iterate satisfies
/// `||Ax - b|| <= tolerance * ||b||` (checked on the true residual); a zero
/// right-hand side returns the zero vector.
pub fn solve_spd_with(
    a: &SparseSpd,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<DenseVector, LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(n, b.len()));
    }
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = opts.tolerance * norm_b;
    let budget = opts.budget_factor.saturating_mul(n).max(32);

    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();

    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    let mut r = {
        let ax = a.apply(&x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()
    };
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..budget {
        if norm2(&r) <= target {
            // The recurrence residual can drift; accept only if the true
            // residual agrees, otherwise restart the recurrence from x.
            let ax = a.apply(&x);
            let true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if norm2(&true_r) <= target {
                return Ok(x);
            }
            r = true_r;
            z = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
            p = z.clone();
            rz = dot(&r, &z);
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinalgError::NotSpd(it));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let ax = a.apply(&x);
    let res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai).powi(2))
        .sum::<f64>()
        .sqrt();
    if res <= target {
        Ok(x)
    } else {
        Err(LinalgError::IterationBudget(budget, res / norm_b))
    }
}
