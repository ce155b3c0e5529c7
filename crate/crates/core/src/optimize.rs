//! Minimization of the discrete energy over director fields on a fixed complex.
//!
//! Each edge value is parametrized in its edge frame: n = n₀ + s·w on the
//! pseudo-unit line, n = cos θ·n₀ + sin θ·w on the unit circle.

use nalgebra::{DVector, Vector3};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directors::{
    angle_parametrize, feasible_arc, triangle_values, CrBasis, DirectorField, EdgeFrame, Family,
};
use crate::energy::{barycentric_point, discrete_energy, Integrand};
use crate::error::{Error, Result};
use crate::mesh::TriangularComplex3D;
use crate::quadrature::triangle_rule;

const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
}

impl Tolerances {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::PseudoUnit => Self {
                grad_tol: 1e-10,
                step_tol: 1e-14,
                max_iters: 20_000,
            },
            Family::Unit => Self {
                grad_tol: 1e-8,
                step_tol: 1e-14,
                max_iters: 20_000,
            },
        }
    }
}

/// Which edges the solver may move.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDirectors {
    #[default]
    Free,
    /// Boundary edges keep their initial values.
    Fixed,
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub complex: TriangularComplex3D,
    pub integrand: Integrand,
    pub initial: DirectorField,
    pub tolerances: Tolerances,
    pub quad_order: usize,
    pub boundary: BoundaryDirectors,
}

impl OptimizationProblem {
    /// Problem with default tolerances for the family of `initial`.
    pub fn new(
        complex: TriangularComplex3D,
        integrand: Integrand,
        initial: DirectorField,
    ) -> Result<Self> {
        initial.validate(&complex)?;
        let tolerances = Tolerances::for_family(initial.family());
        Ok(Self {
            complex,
            integrand,
            initial,
            tolerances,
            quad_order: 4,
            boundary: BoundaryDirectors::Free,
        })
    }

    pub fn family(&self) -> Family {
        self.initial.family()
    }

    fn frames(&self) -> Vec<EdgeFrame> {
        (0..self.complex.num_edges())
            .map(|e| angle_parametrize(&self.complex, e))
            .collect()
    }

    fn is_free(&self, e: usize) -> bool {
        match self.boundary {
            BoundaryDirectors::Free => true,
            BoundaryDirectors::Fixed => self.complex.base().edges()[e].is_interior(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub field: DirectorField,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative CG residual for the pseudo-unit solver, sup-norm of the
    /// clamped angle gradient for the unit solver.
    pub kkt_residual: f64,
    /// Objective after every accepted iterate, starting with the initial one.
    pub history: Vec<f64>,
}

/// ∂E/∂n(e) for every edge, through the linear dependence of Dn_κ on the
/// three edge values of κ.
pub fn director_gradient(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    integrand: &Integrand,
    quad_order: usize,
) -> Result<Vec<Vector3<f64>>> {
    let rule = triangle_rule(quad_order)?;
    let x_dependent = integrand.meta().x_dependent;
    let local: Vec<[Vector3<f64>; 3]> = (0..complex.num_triangles())
        .into_par_iter()
        .map(|t| {
            let basis = CrBasis::new(complex, t);
            let shape = basis.shape_operator(&triangle_values(complex, field, t));
            let normal = complex.normal(t);
            let pts = complex.triangle_points(t);
            let dense = if x_dependent {
                rule.iter().fold(nalgebra::Matrix3::zeros(), |acc, (l, w)| {
                    acc + w * integrand.grad_a(&barycentric_point(&pts, l), &normal, &shape)
                })
            } else {
                integrand.grad_a(&barycentric_point(&pts, &[1.0 / 3.0; 3]), &normal, &shape)
            };
            let area = complex.triangle_area(t);
            basis.shape.map(|c| area * (dense * c))
        })
        .collect();
    let mut grad = vec![Vector3::zeros(); complex.num_edges()];
    for (t, contrib) in local.iter().enumerate() {
        for (i, e) in complex.base().triangle_edges(t).into_iter().enumerate() {
            grad[e] += contrib[i];
        }
    }
    Ok(grad)
}

/// Gradient of the energy with respect to the per-edge parameters of the
/// field's family (s for pseudo-unit, θ for unit), evaluated at `field`.
pub fn objective_gradient(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    integrand: &Integrand,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let grad = director_gradient(complex, field, integrand, quad_order)?;
    Ok((0..complex.num_edges())
        .map(|e| {
            let frame = angle_parametrize(complex, e);
            let tangent = match field.family() {
                Family::PseudoUnit => frame.w,
                Family::Unit => frame.unit_derivative(frame.angle_of(&field.value(e))),
            };
            grad[e].dot(&tangent)
        })
        .collect())
}

/// The quadratic sᵀKs + 2bᵀs + c in the free pseudo-unit slopes for a density
/// ω(x)|A|², with ω lumped to its value at each lifted centroid.
#[derive(Debug, Clone)]
pub struct PseudoUnitSystem {
    pub matrix: CsrMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    /// Edge index of every unknown.
    pub free_edges: Vec<usize>,
    frames: Vec<EdgeFrame>,
    fixed: Vec<Option<Vector3<f64>>>,
}

impl PseudoUnitSystem {
    pub fn assemble(problem: &OptimizationProblem) -> Result<Self> {
        let complex = &problem.complex;
        let meta = problem.integrand.meta();
        if !meta.quadratic_in_a {
            return Err(Error::UnsupportedIntegrand(meta.name));
        }
        let frames = problem.frames();
        let fixed: Vec<Option<Vector3<f64>>> = (0..complex.num_edges())
            .map(|e| (!problem.is_free(e)).then(|| problem.initial.value(e)))
            .collect();
        let mut unknown = vec![usize::MAX; complex.num_edges()];
        let mut free_edges = Vec::new();
        for e in 0..complex.num_edges() {
            if fixed[e].is_none() {
                unknown[e] = free_edges.len();
                free_edges.push(e);
            }
        }

        // per triangle: 3×3 block in local edge order, linear terms, constant
        let local = (0..complex.num_triangles())
            .into_par_iter()
            .map(|t| {
                let pts = complex.triangle_points(t);
                let centroid = barycentric_point(&pts, &[1.0 / 3.0; 3]);
                let weight = problem
                    .integrand
                    .quadratic_weight(&centroid)
                    .ok_or_else(|| Error::UnsupportedIntegrand(meta.name.clone()))?;
                let scale = complex.triangle_area(t) * weight;
                let basis = CrBasis::new(complex, t);
                let edges = complex.base().triangle_edges(t);
                // n(e) = offset + s·direction, direction = 0 on fixed edges
                let offset = edges.map(|e| fixed[e].unwrap_or(frames[e].n0));
                let direction = edges.map(|e| {
                    if fixed[e].is_some() {
                        Vector3::zeros()
                    } else {
                        frames[e].w
                    }
                });
                let mut block = [[0.0; 3]; 3];
                let mut linear = [0.0; 3];
                let mut constant = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let c = scale * basis.shape[i].dot(&basis.shape[j]);
                        block[i][j] = c * direction[i].dot(&direction[j]);
                        linear[i] += c * direction[i].dot(&offset[j]);
                        constant += c * offset[i].dot(&offset[j]);
                    }
                }
                Ok((edges, block, linear, constant))
            })
            .collect::<Result<Vec<_>>>()?;

        let n = free_edges.len();
        let mut coo = CooMatrix::new(n, n);
        let mut linear = DVector::zeros(n);
        let mut constant = 0.0;
        for (edges, block, lin, c) in &local {
            constant += c;
            for i in 0..3 {
                let row = unknown[edges[i]];
                if row == usize::MAX {
                    continue;
                }
                linear[row] += lin[i];
                for j in 0..3 {
                    let col = unknown[edges[j]];
                    if col != usize::MAX {
                        coo.push(row, col, block[i][j]);
                    }
                }
            }
        }
        Ok(Self {
            matrix: CsrMatrix::from(&coo),
            linear,
            constant,
            free_edges,
            frames,
            fixed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.free_edges.len()
    }

    pub fn objective(&self, s: &DVector<f64>) -> f64 {
        s.dot(&matvec(&self.matrix, s)) + 2.0 * self.linear.dot(s) + self.constant
    }

    /// 2(Ks + b), the gradient of the objective.
    pub fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        2.0 * (matvec(&self.matrix, s) + &self.linear)
    }

    /// Slopes of the free edges of a pseudo-unit field.
    pub fn slopes_of(&self, field: &DirectorField) -> DVector<f64> {
        DVector::from_iterator(
            self.dimension(),
            self.free_edges
                .iter()
                .map(|&e| field.value(e).dot(&self.frames[e].w)),
        )
    }

    pub fn field(&self, s: &DVector<f64>) -> DirectorField {
        let mut values: Vec<Vector3<f64>> = self
            .fixed
            .iter()
            .zip(&self.frames)
            .map(|(fixed, frame)| fixed.unwrap_or(frame.n0))
            .collect();
        for (k, &e) in self.free_edges.iter().enumerate() {
            values[e] = self.frames[e].pseudo(s[k]);
        }
        DirectorField::new_unchecked(values, Family::PseudoUnit)
    }
}

fn matvec(matrix: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let offsets = matrix.row_offsets();
    let cols = matrix.col_indices();
    let vals = matrix.values();
    let out: Vec<f64> = (0..matrix.nrows())
        .into_par_iter()
        .map(|r| {
            (offsets[r]..offsets[r + 1])
                .map(|k| vals[k] * x[cols[k]])
                .sum()
        })
        .collect();
    DVector::from_vec(out)
}

/// Jacobi-preconditioned conjugate gradients for Ks = rhs starting at zero.
/// Returns the solution, iteration count and final relative residual.
fn conjugate_gradient(
    matrix: &CsrMatrix<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<(DVector<f64>, usize, f64)> {
    let n = rhs.len();
    let mut x = DVector::zeros(n);
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut diag = DVector::from_element(n, 1.0);
    for (r, c, v) in matrix.triplet_iter() {
        if r == c && *v > 0.0 {
            diag[r] = *v;
        }
    }
    let mut r = rhs.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for k in 0..max_iters {
        let relative = r.norm() / rhs_norm;
        if relative <= tol {
            return Ok((x, k, relative));
        }
        let ap = matvec(matrix, &p);
        let curvature = p.dot(&ap);
        if curvature <= 0.0 {
            // p lies in the kernel; the current iterate is a minimizer
            return Ok((x, k, relative));
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = r.component_div(&diag);
        let rz_next = r.dot(&z);
        p = &z + (rz_next / rz) * &p;
        rz = rz_next;
    }
    let relative = r.norm() / rhs_norm;
    if relative <= tol {
        return Ok((x, max_iters, relative));
    }
    Err(Error::SolverStall {
        iterations: max_iters,
        residual: relative,
    })
}

/// Global minimizer over the pseudo-unit family of a density ω(x)|A|².
/// The reported objective is the lumped quadratic, which equals the discrete
/// energy whenever ω is constant.
pub fn solve_pseudo_unit_quadratic(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    if problem.family() != Family::PseudoUnit {
        return Err(Error::InvalidInput(
            "pseudo-unit solver needs a pseudo-unit initial field".into(),
        ));
    }
    let system = PseudoUnitSystem::assemble(problem)?;
    let start = system.slopes_of(&problem.initial);
    let initial_objective = system.objective(&start);
    let (s, iterations, residual) = conjugate_gradient(
        &system.matrix,
        &(-&system.linear),
        problem.tolerances.grad_tol,
        problem.tolerances.max_iters,
    )?;
    let objective = system.objective(&s);
    Ok(OptimizationResult {
        field: system.field(&s),
        objective,
        initial_objective,
        iterations,
        converged: true,
        kkt_residual: residual,
        history: vec![initial_objective, objective],
    })
}

/// Projected gradient descent on the edge angles of a unit field with
/// Barzilai–Borwein trial steps and Armijo backtracking.
pub fn solve_unit_projected(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    if problem.family() != Family::Unit {
        return Err(Error::InvalidInput(
            "unit solver needs a unit initial field".into(),
        ));
    }
    let complex = &problem.complex;
    let integrand = &problem.integrand;
    let order = problem.quad_order;
    let tol = problem.tolerances;
    let frames = problem.frames();
    let arcs: Vec<(f64, f64)> = (0..complex.num_edges())
        .map(|e| feasible_arc(complex, e, &frames[e]))
        .collect();
    let free: Vec<bool> = (0..complex.num_edges()).map(|e| problem.is_free(e)).collect();

    let clamp = |theta: &[f64]| -> Vec<f64> {
        theta
            .iter()
            .zip(&arcs)
            .map(|(t, &(lo, hi))| t.clamp(lo, hi))
            .collect()
    };
    let field_of = |theta: &[f64]| {
        let values = theta
            .iter()
            .zip(&frames)
            .enumerate()
            .map(|(e, (t, frame))| {
                if free[e] {
                    frame.unit(*t)
                } else {
                    problem.initial.value(e)
                }
            })
            .collect();
        DirectorField::new_unchecked(values, Family::Unit)
    };
    let energy = |field: &DirectorField| -> Result<f64> {
        Ok(discrete_energy(complex, field, integrand, order)?.total)
    };
    let angle_gradient = |theta: &[f64], field: &DirectorField| -> Result<Vec<f64>> {
        let grad = director_gradient(complex, field, integrand, order)?;
        Ok((0..theta.len())
            .map(|e| {
                if free[e] {
                    grad[e].dot(&frames[e].unit_derivative(theta[e]))
                } else {
                    0.0
                }
            })
            .collect())
    };
    // stationarity measure: gradient with components pushing out of the arc removed
    let clamped_norm = |theta: &[f64], g: &[f64]| -> f64 {
        theta
            .iter()
            .zip(g)
            .zip(&arcs)
            .map(|((t, g), &(lo, hi))| {
                let blocked = (*t <= lo && *g > 0.0) || (*t >= hi && *g < 0.0);
                if blocked {
                    0.0
                } else {
                    g.abs()
                }
            })
            .fold(0.0, f64::max)
    };

    let initial_theta: Vec<f64> = problem
        .initial
        .values()
        .iter()
        .zip(&frames)
        .map(|(v, frame)| frame.angle_of(v))
        .collect();
    let mut theta = clamp(&initial_theta);
    let mut field = field_of(&theta);
    let initial_objective = energy(&problem.initial)?;
    let mut objective = energy(&field)?;
    let mut history = vec![objective];
    let mut grad = angle_gradient(&theta, &field)?;
    let mut kkt = clamped_norm(&theta, &grad);
    let mut step = {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax > 0.0 {
            0.1 / gmax
        } else {
            1.0
        }
    };
    let mut iterations = 0;
    while kkt > tol.grad_tol && iterations < tol.max_iters {
        let mut alpha = step;
        let accepted = loop {
            let trial: Vec<f64> = clamp(
                &theta
                    .iter()
                    .zip(&grad)
                    .map(|(t, g)| t - alpha * g)
                    .collect::<Vec<_>>(),
            );
            let decrease: f64 = grad
                .iter()
                .zip(trial.iter().zip(&theta))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let trial_field = field_of(&trial);
            let trial_objective = energy(&trial_field)?;
            if trial_objective <= objective + ARMIJO * decrease && trial_objective <= objective {
                break Some((trial, trial_field, trial_objective));
            }
            alpha *= 0.5;
            if alpha < tol.step_tol {
                break None;
            }
        };
        let Some((next, next_field, next_objective)) = accepted else {
            break;
        };
        let next_grad = angle_gradient(&next, &next_field)?;
        let ds: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let ss: f64 = ds.iter().map(|d| d * d).sum();
        let sy: f64 = ds.iter().zip(&dy).map(|(a, b)| a * b).sum();
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            2.0 * alpha
        };
        theta = next;
        field = next_field;
        objective = next_objective;
        grad = next_grad;
        history.push(objective);
        iterations += 1;
        kkt = clamped_norm(&theta, &grad);
    }
    Ok(OptimizationResult {
        field,
        objective,
        initial_objective,
        iterations,
        converged: kkt <= tol.grad_tol,
        kkt_residual: kkt,
        history,
    })
}

/// Dispatches on the family of the initial field.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    match problem.family() {
        Family::PseudoUnit => solve_pseudo_unit_quadratic(problem),
        Family::Unit => solve_unit_projected(problem),
    }
}
