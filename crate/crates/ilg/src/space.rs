//! P1 conforming finite element space with homogeneous Dirichlet conditions.
//!
//! Degrees of freedom live on interior vertices only; boundary values are
//! implicitly zero. Gradients of P1 functions are constant per element, which
//! the assembly and estimator code exploits throughout.

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("function does not belong to this space")]
    SpaceMismatch,
    #[error("target space is not a hierarchical refinement of the source space")]
    NotNested,
}

/// Per-element geometry used in every elementwise loop.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the three nodal shape functions (constant on the element).
    pub shape_gradients: [[f64; 2]; 3],
    /// Element diameter `h_K`.
    pub diameter: f64,
}

/// P1 space over a [`Mesh`] with Dirichlet elimination.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    /// dof index per vertex, `usize::MAX` for boundary vertices.
    dof_of_vertex: Vec<usize>,
    /// vertex id per dof.
    vertex_of_dof: Vec<usize>,
    geometry: Vec<ElementGeometry>,
}

const BOUNDARY: usize = usize::MAX;

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>) -> Arc<FeSpace> {
        let mut dof_of_vertex = vec![BOUNDARY; mesh.num_vertices()];
        let mut vertex_of_dof = Vec::new();
        for (v, &on_boundary) in mesh.boundary_vertex.iter().enumerate() {
            if !on_boundary {
                dof_of_vertex[v] = vertex_of_dof.len();
                vertex_of_dof.push(v);
            }
        }

        let geometry = (0..mesh.num_elements())
            .map(|k| {
                let [a, b, c] = mesh.elements[k];
                let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
                let area = mesh.element_area(k);
                let inv2a = 1.0 / (2.0 * area);
                // grad of the barycentric coordinate at vertex i, from the
                // opposite edge rotated by 90 degrees.
                let shape_gradients = [
                    [(pb[1] - pc[1]) * inv2a, (pc[0] - pb[0]) * inv2a],
                    [(pc[1] - pa[1]) * inv2a, (pa[0] - pc[0]) * inv2a],
                    [(pa[1] - pb[1]) * inv2a, (pb[0] - pa[0]) * inv2a],
                ];
                ElementGeometry {
                    area,
                    shape_gradients,
                    diameter: mesh.element_diameter(k),
                }
            })
            .collect();

        Arc::new(FeSpace {
            mesh,
            dof_of_vertex,
            vertex_of_dof,
            geometry,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// dof index of a vertex, or `None` on the boundary.
    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        let d = self.dof_of_vertex[v];
        (d != BOUNDARY).then_some(d)
    }

    pub fn vertex_of_dof(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    /// Nodal interpolation of `f`; boundary nodes are dropped.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn(f64, f64) -> f64) -> FeFunction {
        let coeffs = self
            .vertex_of_dof
            .iter()
            .map(|&v| {
                let p = self.mesh.vertices[v];
                f(p[0], p[1])
            })
            .collect();
        FeFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }

    pub fn zero_function(self: &Arc<Self>) -> FeFunction {
        FeFunction {
            space: Arc::clone(self),
            coeffs: vec![0.0; self.num_dofs()],
        }
    }

    pub fn function_from_coeffs(self: &Arc<Self>, coeffs: Vec<f64>) -> FeFunction {
        assert_eq!(coeffs.len(), self.num_dofs());
        FeFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }
}

/// A P1 function given by its coefficients on the free (interior) nodes.
#[derive(Clone, Debug)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn same_space(&self, other: &FeFunction) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    /// Nodal value at a vertex (zero on the boundary).
    pub fn vertex_value(&self, v: usize) -> f64 {
        match self.space.dof_of_vertex(v) {
            Some(d) => self.coeffs[d],
            None => 0.0,
        }
    }

    /// The constant gradient on element `k`.
    pub fn gradient_on_element(&self, k: usize) -> [f64; 2] {
        let geom = &self.space.geometry[k];
        let elem = self.space.mesh.elements[k];
        let mut g = [0.0, 0.0];
        for (local, &v) in elem.iter().enumerate() {
            let val = self.vertex_value(v);
            g[0] += val * geom.shape_gradients[local][0];
            g[1] += val * geom.shape_gradients[local][1];
        }
        g
    }

    /// Point evaluation; `k` must contain `(x, y)` for the result to be the
    /// function value (barycentric extrapolation otherwise).
    pub fn eval_on_element(&self, k: usize, x: f64, y: f64) -> f64 {
        let elem = self.space.mesh.elements[k];
        let bary = barycentric(self.space.mesh(), k, x, y);
        (0..3).map(|i| bary[i] * self.vertex_value(elem[i])).sum()
    }

    /// `|f|_{H^1}` via the exact elementwise formula.
    pub fn h1_seminorm(&self) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.space.num_elements() {
            let g = self.gradient_on_element(k);
            sum += self.space.geometry[k].area * (g[0] * g[0] + g[1] * g[1]);
        }
        sum.sqrt()
    }

    /// `||f||_{L^2}` using the exact P1 element mass matrix.
    pub fn l2_norm(&self) -> f64 {
        let mesh = self.space.mesh();
        let mut sum = 0.0;
        for k in 0..self.space.num_elements() {
            let [a, b, c] = mesh.elements[k];
            let (fa, fb, fc) = (
                self.vertex_value(a),
                self.vertex_value(b),
                self.vertex_value(c),
            );
            let area = self.space.geometry[k].area;
            sum += area / 6.0
                * (fa * fa + fb * fb + fc * fc + fa * fb + fb * fc + fc * fa);
        }
        sum.sqrt()
    }

    /// `H^1`-seminorm distance to an exact gradient, elementwise by quadrature.
    pub fn error_h1(
        &self,
        exact_grad: impl Fn(f64, f64) -> [f64; 2],
        rule: &QuadratureRule,
    ) -> f64 {
        let mesh = self.space.mesh();
        let mut sum = 0.0;
        for k in 0..self.space.num_elements() {
            let gh = self.gradient_on_element(k);
            let [a, b, c] = mesh.elements[k];
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let area = self.space.geometry[k].area;
            for &(bary, w) in &rule.points {
                let x = bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0];
                let y = bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1];
                let ge = exact_grad(x, y);
                let dx = ge[0] - gh[0];
                let dy = ge[1] - gh[1];
                sum += w * area * (dx * dx + dy * dy);
            }
        }
        sum.sqrt()
    }

    /// Coefficient-wise difference; both functions must share the space.
    pub fn sub(&self, other: &FeFunction) -> Result<FeFunction, SpaceError> {
        if !self.same_space(other) {
            return Err(SpaceError::SpaceMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(FeFunction {
            space: Arc::clone(&self.space),
            coeffs,
        })
    }

    /// Carries the function to a hierarchical refinement of its mesh. P1
    /// inclusion is exact: every new vertex is an edge midpoint, so its value
    /// is the average of the parent values.
    pub fn prolongate(&self, fine: &Arc<FeSpace>) -> Result<FeFunction, SpaceError> {
        let coarse_mesh = self.space.mesh();
        let fine_mesh = fine.mesh();
        let nv_coarse = coarse_mesh.num_vertices();
        if fine_mesh.num_vertices() < nv_coarse
            || fine_mesh.vertices[..nv_coarse] != coarse_mesh.vertices[..]
        {
            return Err(SpaceError::NotNested);
        }

        let mut values = vec![0.0; fine_mesh.num_vertices()];
        for v in 0..nv_coarse {
            values[v] = self.vertex_value(v);
        }
        for v in nv_coarse..fine_mesh.num_vertices() {
            let Some([a, b]) = fine_mesh.vertex_parents[v] else {
                return Err(SpaceError::NotNested);
            };
            values[v] = 0.5 * (values[a] + values[b]);
        }

        let coeffs = (0..fine.num_dofs())
            .map(|d| values[fine.vertex_of_dof(d)])
            .collect();
        Ok(FeFunction {
            space: Arc::clone(fine),
            coeffs,
        })
    }
}

/// Barycentric coordinates of `(x, y)` with respect to element `k`.
pub fn barycentric(mesh: &Mesh, k: usize, x: f64, y: f64) -> [f64; 3] {
    let [a, b, c] = mesh.elements[k];
    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let l1 = ((pb[0] - x) * (pc[1] - y) - (pc[0] - x) * (pb[1] - y)) / det;
    let l2 = ((pc[0] - x) * (pa[1] - y) - (pa[0] - x) * (pc[1] - y)) / det;
    [l1, l2, 1.0 - l1 - l2]
}

/// Symmetric quadrature rule on the reference triangle in barycentric form.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// `(barycentric coordinates, weight)`; weights sum to one.
    pub points: Vec<([f64; 3], f64)>,
    pub degree: usize,
}

impl QuadratureRule {
    /// 7-point rule, exact up to total degree 5. The workhorse for loads,
    /// error norms and energies.
    pub fn degree5() -> QuadratureRule {
        let s15 = 15.0_f64.sqrt();
        let a = (6.0 - s15) / 21.0;
        let b = (6.0 + s15) / 21.0;
        let wa = (155.0 - s15) / 1200.0;
        let wb = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        let mut points = vec![([third, third, third], 9.0 / 40.0)];
        points.extend(symmetric_orbit(a, wa));
        points.extend(symmetric_orbit(b, wb));
        QuadratureRule { points, degree: 5 }
    }

    /// 13-point rule, exact up to total degree 7; used to cross-check the
    /// degree-5 rule in the energy identity tests.
    pub fn degree7() -> QuadratureRule {
        let third = 1.0 / 3.0;
        let mut points = vec![([third, third, third], -0.149570044467670)];
        points.extend(symmetric_orbit(0.260345966079038, 0.175615257433204));
        points.extend(symmetric_orbit(0.065130102902216, 0.053347235608839));
        let (a, b) = (0.312865496004875, 0.048690315425316);
        let c = 1.0 - a - b;
        let w = 0.077113760890257;
        for perm in [
            [a, b, c],
            [b, c, a],
            [c, a, b],
            [a, c, b],
            [c, b, a],
            [b, a, c],
        ] {
            points.push((perm, w));
        }
        QuadratureRule { points, degree: 7 }
    }

    /// Integrates `f` over element `k`.
    pub fn integrate_on_element(
        &self,
        mesh: &Mesh,
        k: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        let [a, b, c] = mesh.elements[k];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let area = mesh.element_area(k);
        let mut sum = 0.0;
        for &(bary, w) in &self.points {
            let x = bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0];
            let y = bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1];
            sum += w * f(x, y);
        }
        area * sum
    }
}

fn symmetric_orbit(a: f64, w: f64) -> Vec<([f64; 3], f64)> {
    let c = 1.0 - 2.0 * a;
    vec![([c, a, a], w), ([a, c, a], w), ([a, a, c], w)]
}
