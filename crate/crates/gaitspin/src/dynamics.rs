//! Quasi-static force balance and local-connection extraction.
//!
//! Each stance foot drags against the ground with regularized Coulomb
//! friction. At the crawling speeds of interest inertia is negligible, so for
//! any shape velocity the body velocity ξ = (ξx, ξy, ξθ) is the one that
//! makes the net ground-reaction force and torque vanish. Solving that
//! balance for the shape-basis directions yields the local connection
//! A(r): the 3×2 matrix with ξ = A(r)·ṙ.
//!
//! For isotropic friction the balance residual is exactly the gradient of
//! the convex, coercive dissipation function
//! `D(ξ) = Σ_i μN_i·φ(|v_i|)` with `φ(s) = s − ε·ln(1 + s/ε)`,
//! so the solver is damped Newton on ∇D = 0 with the analytic positive
//! semi-definite Hessian, Armijo backtracking, and continuation in the
//! regularization speed ε (coarse to sharp, warm-starting each stage).
//! Convexity makes convergence global; the continuation keeps iteration
//! counts low when feet "stick" (near-zero slip speed at the solution, where
//! the Coulomb curvature is steepest). Anisotropic friction is not a
//! gradient field; it reuses the isotropic solution as a warm start and
//! finishes with damped Newton on the true residual.

use nalgebra::{Matrix2, Matrix3, SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{foot_positions, ContactPattern, RobotSpec, ShapeBasis, ShapePoint};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

/// Shape-velocity magnitude used to probe each connection column, rad/s.
/// Far above the regularization speed, far below any inertial regime.
pub const PROBE_SPEED: f64 = 0.1;

/// Normalized residual tolerance for a converged force balance.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

const MAX_STAGE_ITERATIONS: usize = 160;

/// Body-frame velocity (ξx m/s, ξy m/s, ξθ rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub xi: [f64; 3],
}

impl BodyVelocity {
    pub fn zero() -> Self {
        Self { xi: [0.0; 3] }
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self { xi: [v.x, v.y, v.z] }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.xi[0], self.xi[1], self.xi[2])
    }
}

/// Friction parameters for the ground-reaction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceModel {
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Smoothing speed ε of the Coulomb direction, m/s.
    pub regularization_speed: f64,
    /// Scale on the drag component perpendicular to the segment tangent;
    /// 1.0 recovers isotropic Coulomb friction.
    pub anisotropy_ratio: f64,
}

impl ForceModel {
    pub fn from_robot(spec: &RobotSpec) -> Self {
        Self {
            mu: spec.friction_mu,
            regularization_speed: spec.friction_regularization,
            anisotropy_ratio: spec.anisotropy_ratio,
        }
    }
}

/// The local connection at one (shape, pattern) state: ξ = matrix · ṙ.
///
/// Rows are the forward (A^x), lateral (A^y), and rotational (A^θ)
/// connection rows; columns follow the shape coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalConnection {
    pub matrix: SMatrix<f64, 3, 2>,
    pub shape: ShapePoint,
    pub pattern: ContactPattern,
}

/// One stance foot prepared for the balance solve: body velocity maps to the
/// foot velocity through `b`, the shape-rate contribution is the constant
/// offset `u`, and `weight` is μ·N_i.
struct Foot {
    b: SMatrix<f64, 2, 3>,
    u: Vector2<f64>,
    weight: f64,
    tangent: Vector2<f64>,
}

/// Assembled force-balance problem for one (shape, pattern, ṙ) query.
struct Balance {
    feet: Vec<Foot>,
    /// Componentwise normalization: (μmg, μmg, μmg·L/2).
    scale: Vector3<f64>,
    ratio: f64,
}

impl Balance {
    fn build(
        spec: &RobotSpec,
        basis: &ShapeBasis,
        shape: &ShapePoint,
        pattern: &ContactPattern,
        rdot: &Vector2<f64>,
        fm: &ForceModel,
    ) -> Result<Self> {
        if pattern.n_legs() != spec.n_legs() {
            return Err(Error::argument(format!(
                "pattern covers {} legs, robot has {}",
                pattern.n_legs(),
                spec.n_legs()
            )));
        }
        let stance_count = pattern.stance_count();
        if stance_count == 0 {
            return Err(Error::InfeasibleContact(
                "no stance legs: the body is unsupported".into(),
            ));
        }
        let layout = foot_positions(spec, basis, shape)?;
        let normal_load = spec.mass * GRAVITY / stance_count as f64;
        let feet = pattern
            .stance_legs()
            .map(|leg| {
                let q = layout.positions[leg];
                let b = SMatrix::<f64, 2, 3>::new(1.0, 0.0, -q.y, 0.0, 1.0, q.x);
                Foot {
                    b,
                    u: layout.jacobians[leg] * rdot,
                    weight: fm.mu * normal_load,
                    tangent: layout.tangents[leg],
                }
            })
            .collect();
        let f0 = fm.mu * spec.mass * GRAVITY;
        Ok(Self {
            feet,
            scale: Vector3::new(f0, f0, f0 * spec.body_length() / 2.0),
            ratio: fm.anisotropy_ratio,
        })
    }

    /// Anisotropy matrix for a foot: identity at ratio 1, otherwise scales
    /// the component perpendicular to the segment tangent.
    fn drag_matrix(&self, foot: &Foot) -> Matrix2<f64> {
        let t = foot.tangent;
        let n = Vector2::new(-t.y, t.x);
        t * t.transpose() + n * n.transpose() * self.ratio
    }

    /// Net (force, torque) of the full anisotropic friction model.
    fn net_wrench(&self, xi: &Vector3<f64>, eps: f64) -> Vector3<f64> {
        let mut net = Vector3::zeros();
        for foot in &self.feet {
            let v = foot.b * xi + foot.u;
            let speed = v.norm();
            let f = -(self.drag_matrix(foot) * v) * (foot.weight / (speed + eps));
            net += foot.b.transpose() * f;
        }
        net
    }

    /// Normalized residual of the balance equations.
    fn residual(&self, xi: &Vector3<f64>, eps: f64) -> Vector3<f64> {
        self.net_wrench(xi, eps).component_div(&self.scale)
    }

    /// Isotropic dissipation value, gradient, and Hessian at ξ.
    ///
    /// The gradient equals the negated net wrench of the isotropic model, so
    /// driving it to zero is exactly the force balance.
    fn dissipation(&self, xi: &Vector3<f64>, eps: f64) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let mut value = 0.0;
        let mut grad = Vector3::zeros();
        let mut hess = Matrix3::zeros();
        for foot in &self.feet {
            let v = foot.b * xi + foot.u;
            let speed = v.norm();
            value += foot.weight * (speed - eps * (speed / eps).ln_1p());
            let g = 1.0 / (speed + eps);
            grad += foot.b.transpose() * (v * (foot.weight * g));
            let hv = if speed > 0.0 {
                Matrix2::identity() * (foot.weight * g)
                    - v * v.transpose() * (foot.weight * g * g / speed)
            } else {
                Matrix2::identity() * (foot.weight / eps)
            };
            hess += foot.b.transpose() * hv * foot.b;
        }
        (value, grad, hess)
    }

    /// Jacobian of the anisotropic net wrench with respect to ξ.
    fn wrench_jacobian(&self, xi: &Vector3<f64>, eps: f64) -> Matrix3<f64> {
        let mut jac = Matrix3::zeros();
        for foot in &self.feet {
            let v = foot.b * xi + foot.u;
            let speed = v.norm();
            let g = 1.0 / (speed + eps);
            let m = self.drag_matrix(foot);
            let dv = if speed > 0.0 {
                m * (Matrix2::identity() * g - v * v.transpose() * (g * g / speed))
            } else {
                m * g
            };
            jac -= foot.b.transpose() * (dv * foot.weight) * foot.b;
        }
        jac
    }

    /// ε schedule for continuation: coarse stages above the model's own
    /// regularization, then the model value itself.
    fn continuation(&self, eps_final: f64) -> Vec<f64> {
        let mut stages: Vec<f64> = [1e-2, 1e-4]
            .into_iter()
            .filter(|stage| *stage > eps_final * 10.0)
            .collect();
        stages.push(eps_final);
        stages
    }

    /// Damped Newton on the convex isotropic dissipation.
    fn solve_isotropic_stage(
        &self,
        mut xi: Vector3<f64>,
        eps: f64,
        tol: f64,
    ) -> (Vector3<f64>, f64) {
        let (mut value, mut grad, mut hess) = self.dissipation(&xi, eps);
        let mut res = grad.component_div(&self.scale).norm();
        for _ in 0..MAX_STAGE_ITERATIONS {
            if res < tol {
                break;
            }
            let step = newton_step(&hess, &grad);
            let slope = grad.dot(&step);
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-14 {
                let candidate = xi + step * lambda;
                let (v2, g2, h2) = self.dissipation(&candidate, eps);
                if v2 <= value + 1e-4 * lambda * slope + 1e-13 * (1.0 + value.abs()) {
                    xi = candidate;
                    value = v2;
                    grad = g2;
                    hess = h2;
                    res = grad.component_div(&self.scale).norm();
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (xi, res)
    }

    /// Damped Newton on the anisotropic residual (warm start required).
    fn solve_anisotropic_stage(
        &self,
        mut xi: Vector3<f64>,
        eps: f64,
        tol: f64,
    ) -> (Vector3<f64>, f64) {
        let mut res_vec = self.residual(&xi, eps);
        let mut res = res_vec.norm();
        for _ in 0..MAX_STAGE_ITERATIONS {
            if res < tol {
                break;
            }
            let jac = self.wrench_jacobian(&xi, eps);
            let scaled = Matrix3::from_fn(|r, c| jac[(r, c)] / self.scale[r]);
            let step = match scaled.lu().solve(&(-res_vec)) {
                Some(step) => step,
                None => break,
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-14 {
                let candidate = xi + step * lambda;
                let r2 = self.residual(&candidate, eps);
                if r2.norm() < res * (1.0 - 1e-4 * lambda) + 1e-15 {
                    xi = candidate;
                    res_vec = r2;
                    res = res_vec.norm();
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (xi, res)
    }

    fn solve(&self, fm: &ForceModel) -> Result<Vector3<f64>> {
        let eps_final = fm.regularization_speed;
        let isotropic = (self.ratio - 1.0).abs() == 0.0;
        let mut xi = Vector3::zeros();
        for (idx, eps) in self.continuation(eps_final).iter().enumerate() {
            let last = *eps == eps_final;
            let tol = if last { BALANCE_TOLERANCE } else { 1e-7 };
            let _ = idx;
            xi = if isotropic {
                self.solve_isotropic_stage(xi, *eps, tol).0
            } else {
                let warm = self.solve_isotropic_stage(xi, *eps, tol).0;
                self.solve_anisotropic_stage(warm, *eps, tol).0
            };
        }
        let res = self.residual(&xi, eps_final).norm();
        if res < BALANCE_TOLERANCE * 10.0 {
            Ok(xi)
        } else {
            Err(Error::Solver {
                residual: res,
                context: "quasi-static balance".into(),
            })
        }
    }
}

/// Newton direction for an SPD (or nearly SPD) Hessian, with a tiny Tikhonov
/// floor so degenerate stance geometries stay solvable.
fn newton_step(hess: &Matrix3<f64>, grad: &Vector3<f64>) -> Vector3<f64> {
    let floor = 1e-13 * hess.trace().abs().max(1e-300);
    let damped = hess + Matrix3::identity() * floor;
    if let Some(chol) = damped.cholesky() {
        chol.solve(&(-grad))
    } else {
        damped
            .lu()
            .solve(&(-grad))
            .unwrap_or_else(|| -grad / (1.0 + hess.trace().abs()))
    }
}

/// Sums the per-foot ground-reaction forces and torques at the given body
/// and shape velocities. Torque is taken about the body-frame origin.
pub fn ground_reaction(
    spec: &RobotSpec,
    basis: &ShapeBasis,
    shape: &ShapePoint,
    pattern: &ContactPattern,
    xi: &BodyVelocity,
    rdot: &Vector2<f64>,
    fm: &ForceModel,
) -> Result<(Vector2<f64>, f64)> {
    let balance = Balance::build(spec, basis, shape, pattern, rdot, fm)?;
    let wrench = balance.net_wrench(&xi.as_vector(), fm.regularization_speed);
    Ok((Vector2::new(wrench.x, wrench.y), wrench.z))
}

/// Solves the quasi-static balance for the body velocity induced by `rdot`.
///
/// Returns ξ with the normalized residual below [`BALANCE_TOLERANCE`]; a zero
/// shape rate short-circuits to the exact root ξ = 0.
pub fn solve_body_velocity(
    spec: &RobotSpec,
    basis: &ShapeBasis,
    shape: &ShapePoint,
    pattern: &ContactPattern,
    rdot: &Vector2<f64>,
    fm: &ForceModel,
) -> Result<BodyVelocity> {
    let balance = Balance::build(spec, basis, shape, pattern, rdot, fm)?;
    if rdot.x == 0.0 && rdot.y == 0.0 {
        return Ok(BodyVelocity::zero());
    }
    balance.solve(fm).map(BodyVelocity::from_vector)
}

/// Extracts the local connection at (shape, pattern) by solving the balance
/// for each shape-basis direction at [`PROBE_SPEED`].
pub fn local_connection(
    spec: &RobotSpec,
    basis: &ShapeBasis,
    shape: &ShapePoint,
    pattern: &ContactPattern,
    fm: &ForceModel,
) -> Result<LocalConnection> {
    let mut matrix = SMatrix::<f64, 3, 2>::zeros();
    for k in 0..2 {
        let mut rdot = Vector2::zeros();
        rdot[k] = PROBE_SPEED;
        let xi = solve_body_velocity(spec, basis, shape, pattern, &rdot, fm)?;
        matrix.set_column(k, &(xi.as_vector() / PROBE_SPEED));
    }
    Ok(LocalConnection {
        matrix,
        shape: *shape,
        pattern: pattern.clone(),
    })
}
