//! The blown-up action on the loop space and the reduction that corrects the
//! relative equilibrium `Z` into a periodic solution of the rescaled system.
//!
//! Unknowns are handled in `H¹`-orthonormal coordinates: a loop with flat
//! coefficient vector `c` is represented by `ĉ = W^{1/2} c`, where `W` holds
//! the `H¹` weights of the Fourier columns. The space `X = Ż^⊥` gets an
//! orthonormal basis whose first columns span `N_Z` and whose last two span
//! the constant loops `D`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::hamiltonian::{eval_hr_at, grad_hr_at, hess_f, hess_hr_at};
use crate::loops::{h1_weight, sigma_project, Loop, LoopFrame, Nodes, DEFAULT_MODES};
use crate::system::{lift, min_separation, Mat2, Vec2, VortexSystem};

/// Condition number above which a block of the linearization counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
/// Largest share of the `H¹` norm tolerated in the top quarter of the modes.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    FixedPoint,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub modes: usize,
    pub fp_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub contraction_guard: f64,
    pub mode: SolverMode,
    pub r_max: f64,
    pub r_min: f64,
    pub r_steps: usize,
    /// Optional permutation; iterates are averaged over its cyclic group.
    pub symmetry: Option<Vec<usize>>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            modes: DEFAULT_MODES,
            fp_tol: 1e-11,
            newton_tol: 1e-11,
            max_iter: 200,
            contraction_guard: 0.9,
            mode: SolverMode::FixedPoint,
            r_max: 0.2,
            r_min: 1e-3,
            r_steps: 30,
            symmetry: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.modes == 0 {
            return bad("modes must be positive");
        }
        if !(self.fp_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.contraction_guard > 0.0 && self.contraction_guard < 1.0) {
            return bad("contraction_guard must lie in (0, 1)");
        }
        if !(self.r_min > 0.0 && self.r_max > self.r_min) || self.r_steps < 2 {
            return bad("r grid needs 0 < r_min < r_max and at least two points");
        }
        Ok(())
    }

    /// Geometric grid from `r_max` down to `r_min`.
    pub fn r_grid(&self) -> Vec<f64> {
        let ratio = (self.r_min / self.r_max).powf(1.0 / (self.r_steps - 1) as f64);
        (0..self.r_steps)
            .map(|i| match i {
                0 => self.r_max,
                i if i == self.r_steps - 1 => self.r_min,
                i => self.r_max * ratio.powi(i as i32),
            })
            .collect()
    }
}

/// The blown-up problem at one scale `r` around the centre `a0`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    sys: VortexSystem,
    domain: DomainModel,
    a0: Vec2,
    r: f64,
    modes: usize,
    nodes: Nodes,
    sqrt_w: DVector<f64>,
    /// `M_Γ J_N`.
    k_mat: DMatrix<f64>,
}

impl ReducedProblem {
    pub fn new(sys: &VortexSystem, domain: &DomainModel, a0: Vec2, r: f64, modes: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale r = {r} must be positive")));
        }
        if modes == 0 {
            return Err(Error::InvalidParameter("at least one mode is required".into()));
        }
        domain.check(&a0)?;
        let d = sys.dim();
        let sqrt_w = DVector::from_fn(d * (2 * modes + 1), |i, _| h1_weight(i / d).sqrt());
        Ok(Self {
            sys: sys.clone(),
            domain: domain.clone(),
            a0,
            r,
            modes,
            nodes: Nodes::dealiased(modes),
            sqrt_w,
            k_mat: sys.weight_matrix() * sys.symplectic_matrix(),
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sys(&self) -> &VortexSystem {
        &self.sys
    }

    pub fn domain(&self) -> &DomainModel {
        &self.domain
    }

    pub fn a0(&self) -> Vec2 {
        self.a0
    }

    fn check_loop(&self, u: &Loop) -> Result<()> {
        if u.n() != self.sys.n() {
            return Err(Error::DimensionMismatch { expected: self.sys.dim(), found: u.dim() });
        }
        if u.modes() != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, found: u.modes() });
        }
        Ok(())
    }

    pub fn to_hat(&self, u: &Loop) -> DVector<f64> {
        u.as_vector().component_mul(&self.sqrt_w)
    }

    pub fn from_hat(&self, v: &DVector<f64>) -> Loop {
        Loop::from_vector(self.sys.n(), self.modes, &v.component_div(&self.sqrt_w))
            .expect("hat vector has the problem's dimension")
    }

    /// `½ ∫ M_Γ u̇ · J_N u dt = π Σ_k k b_k · M_Γ J_N a_k`, exact.
    pub fn symplectic_term(&self, u: &Loop) -> f64 {
        (1..=u.modes())
            .map(|k| std::f64::consts::PI * k as f64 * u.sin_coeff(k).dot(&(&self.k_mat * u.cos_coeff(k))))
            .sum()
    }

    fn at_nodes<T>(&self, u: &Loop, mut f: impl FnMut(&DVector<f64>) -> Result<T>) -> Result<Vec<T>> {
        let samples = self.nodes.sample(u);
        (0..samples.ncols())
            .map(|j| f(&samples.column(j).into_owned()).map_err(|e| Error::AtNode { node: j, source: Box::new(e) }))
            .collect()
    }

    /// `𝔍_r(u) = ½∫ M_Γ u̇·J_N u - ∫ H_r(u)`, trapezoidal in the second term.
    pub fn action(&self, u: &Loop) -> Result<f64> {
        self.check_loop(u)?;
        let values = self.at_nodes(u, |x| eval_hr_at(&self.sys, &self.domain, self.a0, self.r, x))?;
        Ok(self.symplectic_term(u) - self.nodes.integrate(&values))
    }

    /// `L²` gradient `-M_Γ J_N u̇ - ∇H_r(u)`, the nonlinear part projected
    /// onto the retained modes.
    pub fn l2_gradient(&self, u: &Loop) -> Result<Loop> {
        self.check_loop(u)?;
        let grads = self.at_nodes(u, |x| grad_hr_at(&self.sys, &self.domain, self.a0, self.r, x))?;
        let samples = DMatrix::from_columns(&grads);
        let field = self.nodes.transform(&samples)?;
        Ok(-(&u.differentiate().map_coeffs(&self.k_mat) + &field))
    }

    /// `H¹` gradient `∇𝔍_r(u) = (id - Δ)^{-1}` of the `L²` gradient.
    pub fn gradient(&self, u: &Loop) -> Result<Loop> {
        Ok(self.l2_gradient(u)?.inv_id_minus_laplace())
    }

    pub fn gradient_hat(&self, u: &Loop) -> Result<DVector<f64>> {
        Ok(self.to_hat(&self.gradient(u)?))
    }

    /// Matrix of `(w, w') ↦ Σ_j (2π/m) w(t_j)·K_j w'(t_j)` on flat coefficients.
    fn pointwise_form(&self, kernels: &[DMatrix<f64>]) -> DMatrix<f64> {
        let d = self.sys.dim();
        let cols = 2 * self.modes + 1;
        let basis = self.nodes.basis();
        let quad = 2.0 * std::f64::consts::PI / self.nodes.len() as f64;
        let mut out = DMatrix::zeros(d * cols, d * cols);
        for a in 0..d {
            for b in a..d {
                let mut scaled = basis.clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= quad * kernels[j][(a, b)];
                }
                let block = &scaled * basis.transpose();
                for p in 0..cols {
                    for q in 0..cols {
                        out[(p * d + a, q * d + b)] = block[(p, q)];
                        out[(q * d + b, p * d + a)] = block[(p, q)];
                    }
                }
            }
        }
        out
    }

    fn to_hat_form(&self, form: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = form.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] /= self.sqrt_w[i] * self.sqrt_w[j];
            }
        }
        (&m + m.transpose()) * 0.5
    }

    /// Second derivative of the symplectic term on flat coefficients.
    fn symplectic_form(&self) -> DMatrix<f64> {
        let d = self.sys.dim();
        let cols = 2 * self.modes + 1;
        let mut out = DMatrix::zeros(d * cols, d * cols);
        for k in 1..=self.modes {
            let (a, b) = ((2 * k - 1) * d, 2 * k * d);
            let scaled = &self.k_mat * (std::f64::consts::PI * k as f64);
            out.view_mut((b, a), (d, d)).copy_from(&scaled);
            out.view_mut((a, b), (d, d)).copy_from(&scaled.transpose());
        }
        out
    }

    /// `H¹` Hessian `𝔍_r''(u)` in hat coordinates (symmetric).
    pub fn hessian_hat(&self, u: &Loop) -> Result<DMatrix<f64>> {
        self.check_loop(u)?;
        let kernels = self.at_nodes(u, |x| hess_hr_at(&self.sys, &self.domain, self.a0, self.r, x))?;
        let form = self.symplectic_form() - self.pointwise_form(&kernels);
        Ok(self.to_hat_form(&form))
    }

    /// `(id - Δ)^{-1} F''(a0 + r u)` in hat coordinates.
    pub fn f_operator_hat(&self, u: &Loop) -> Result<DMatrix<f64>> {
        self.check_loop(u)?;
        let kernels = self.at_nodes(u, |x| {
            let z = lift(self.a0, self.sys.n()) + x * self.r;
            hess_f(&self.sys, &self.domain, &z)
        })?;
        Ok(self.to_hat_form(&self.pointwise_form(&kernels)))
    }

    /// The same operator at `r = 0`, where `F''` is frozen at the lifted centre.
    pub fn f_operator_limit_hat(&self) -> Result<DMatrix<f64>> {
        let kernel = hess_f(&self.sys, &self.domain, &lift(self.a0, self.sys.n()))?;
        let kernels = vec![kernel; self.nodes.len()];
        Ok(self.to_hat_form(&self.pointwise_form(&kernels)))
    }
}

pub fn action_j_r(sys: &VortexSystem, domain: &DomainModel, a0: Vec2, r: f64, u: &Loop) -> Result<f64> {
    ReducedProblem::new(sys, domain, a0, r, u.modes())?.action(u)
}

pub fn grad_j_r(sys: &VortexSystem, domain: &DomainModel, a0: Vec2, r: f64, u: &Loop) -> Result<Loop> {
    ReducedProblem::new(sys, domain, a0, r, u.modes())?.gradient(u)
}

/// Orthonormal bases of `N_Z` and `D` in hat coordinates.
#[derive(Debug, Clone)]
pub struct XBasis {
    /// Columns: `N_Z` first, then the two normalized constant loops.
    pub x: DMatrix<f64>,
    pub zdot_hat: DVector<f64>,
    pub nz_dim: usize,
}

impl XBasis {
    pub fn new(problem: &ReducedProblem, frame: &LoopFrame) -> Result<Self> {
        if frame.modes() != problem.modes || frame.n() != problem.sys.n() {
            return Err(Error::DimensionMismatch { expected: problem.modes, found: frame.modes() });
        }
        let zdot_hat = problem.to_hat(frame.zdot());
        let deltas: Vec<DVector<f64>> = (0..2)
            .map(|i| problem.to_hat(&frame.e_hat(i)).normalize())
            .collect();
        let nc = zdot_hat.len();
        let mut seed = DMatrix::zeros(nc, nc + 3);
        seed.set_column(0, &zdot_hat.normalize());
        seed.set_column(1, &deltas[0]);
        seed.set_column(2, &deltas[1]);
        seed.view_mut((0, 3), (nc, nc)).fill_with_identity();
        let q = seed.qr().q();
        let nz_dim = nc - 3;
        let mut x = DMatrix::zeros(nc, nc - 1);
        x.view_mut((0, 0), (nc, nz_dim)).copy_from(&q.columns(3, nz_dim));
        x.set_column(nz_dim, &deltas[0]);
        x.set_column(nz_dim + 1, &deltas[1]);
        Ok(Self { x, zdot_hat, nz_dim })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn nz(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.x.columns(0, self.nz_dim)
    }

    pub fn d(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.x.columns(self.nz_dim, 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub a_norm: f64,
    pub b_norm: f64,
    pub c_norm: f64,
    pub d_norm: f64,
    pub a_condition: f64,
    pub d_condition: f64,
    /// `P_D (id - Δ)^{-1} F''(a0 + rZ)` on `D`, in the basis `ê_i/|ê_i|`.
    pub d_r: Mat2,
    pub b0_norm: f64,
    pub c0_norm: f64,
    pub d0: Mat2,
}

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    /// `L_r = P_X 𝔍_r''(Z)` on `X`, in the basis of [`XBasis`].
    pub matrix: DMatrix<f64>,
    pub blocks: BlockReport,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn mat2(m: &DMatrix<f64>) -> Mat2 {
    Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.singular_values().max()
    }
}

/// Blocks of `L_r` with respect to `X = N_Z ⊕ D`:
/// `L_r = [[A_r, r² B_r], [r² C_r, r² D_r]]`, `B_r, C_r, D_r` being the
/// corresponding pieces of `(id - Δ)^{-1} F''(a0 + rZ)`.
pub fn block_report(problem: &ReducedProblem, frame: &LoopFrame, basis: &XBasis) -> Result<(DMatrix<f64>, BlockReport)> {
    let hess = problem.hessian_hat(frame.z())?;
    let l = basis.x.transpose() * &hess * &basis.x;
    let (nz, d) = (basis.nz(), basis.d());
    let a = nz.transpose() * &hess * nz;
    let t = problem.f_operator_hat(frame.z())?;
    let b = nz.transpose() * &t * d;
    let c = d.transpose() * &t * nz;
    let dr = d.transpose() * &t * d;
    let t0 = problem.f_operator_limit_hat()?;
    let b0 = nz.transpose() * &t0 * d;
    let c0 = d.transpose() * &t0 * nz;
    let d0 = d.transpose() * &t0 * d;
    let report = BlockReport {
        a_norm: spectral_norm(&a),
        b_norm: spectral_norm(&b),
        c_norm: spectral_norm(&c),
        d_norm: spectral_norm(&dr),
        a_condition: condition_number(&a),
        d_condition: condition_number(&dr),
        d_r: mat2(&dr),
        b0_norm: spectral_norm(&b0),
        c0_norm: spectral_norm(&c0),
        d0: mat2(&d0),
    };
    Ok((l, report))
}

/// Assembles `L_r` and rejects it when a diagonal block is numerically
/// singular. In the plane `F ≡ 0`, so the `D` block vanishes identically and
/// only `A_r` is checked.
pub fn assemble_l_r(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    r: f64,
    frame: &LoopFrame,
) -> Result<LinearizedOperator> {
    let problem = ReducedProblem::new(sys, domain, a0, r, frame.modes())?;
    let basis = XBasis::new(&problem, frame)?;
    assemble_with(&problem, frame, &basis)
}

fn assemble_with(problem: &ReducedProblem, frame: &LoopFrame, basis: &XBasis) -> Result<LinearizedOperator> {
    let (matrix, blocks) = block_report(problem, frame, basis)?;
    if blocks.a_condition > SINGULAR_CONDITION {
        return Err(Error::SingularOperator { block: "A", condition: blocks.a_condition });
    }
    if !problem.domain.is_plane() && blocks.d_condition > SINGULAR_CONDITION {
        return Err(Error::SingularOperator { block: "D", condition: blocks.d_condition });
    }
    Ok(LinearizedOperator { matrix, blocks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSolution {
    pub r: f64,
    pub v: Loop,
    pub u: Loop,
    /// `H¹` norm of the full gradient at `u`.
    pub residual_grad: f64,
    /// `H¹` norm of its projection onto `X`.
    pub projected_residual: f64,
    pub phase_defect: f64,
    pub vnorm: f64,
    pub iterations: usize,
    pub spectral_tail: f64,
    /// Largest ratio of successive fixed-point steps (fixed-point mode only).
    pub contraction_estimate: Option<f64>,
    /// `⟨v̇, Ż⟩_{H¹}`, reported without a threshold.
    pub velocity_overlap: f64,
}

fn exit(e: Error) -> Error {
    match e {
        Error::AtNode { .. } | Error::Collision { .. } | Error::Domain { .. } | Error::Boundary { .. } => {
            Error::DomainExit(e.to_string())
        }
        other => other,
    }
}

struct Solver<'a> {
    problem: ReducedProblem,
    frame: &'a LoopFrame,
    basis: XBasis,
    params: &'a SolverParams,
    eps: f64,
}

impl Solver<'_> {
    fn loop_of(&self, y: &DVector<f64>) -> Loop {
        self.problem.from_hat(&(&self.basis.x * y))
    }

    fn coords(&self, v: &Loop) -> DVector<f64> {
        self.basis.x.transpose() * self.problem.to_hat(v)
    }

    fn guard(&self, y: &DVector<f64>) -> Result<()> {
        if y.norm() > self.eps {
            return Err(Error::DomainExit(format!(
                "|v| = {:.3e} left the ball of radius {:.3e}",
                y.norm(),
                self.eps
            )));
        }
        Ok(())
    }

    fn full_gradient(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.guard(y)?;
        let u = self.frame.z() + &self.loop_of(y);
        self.problem.gradient_hat(&u).map_err(exit)
    }

    fn projected(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.basis.x.transpose() * self.full_gradient(y)?)
    }

    fn symmetrize(&self, y: DVector<f64>) -> Result<DVector<f64>> {
        match &self.params.symmetry {
            None => Ok(y),
            Some(sigma) => {
                let v = sigma_project(sigma, self.problem.sys.gammas(), &self.loop_of(&y))?;
                Ok(self.coords(&v))
            }
        }
    }

    fn fixed_point(&self, mut y: DVector<f64>) -> Result<(DVector<f64>, usize, Option<f64>)> {
        let lin = assemble_with(&self.problem, self.frame, &self.basis)?;
        let lu = lin.matrix.lu();
        let mut prev_step: Option<f64> = None;
        let mut estimate: Option<f64> = None;
        for it in 1..=self.params.max_iter {
            let f = self.projected(&y)?;
            let dy = lu
                .solve(&f)
                .ok_or(Error::SingularOperator { block: "L", condition: f64::INFINITY })?;
            let next = self.symmetrize(&y - dy)?;
            let step = (&next - &y).norm();
            y = next;
            if let Some(prev) = prev_step.filter(|p| *p > 100.0 * self.params.fp_tol) {
                let q = step / prev;
                estimate = Some(estimate.map_or(q, |e: f64| e.max(q)));
                if q > self.params.contraction_guard {
                    return Err(Error::ContractionFailure { factor: q, guard: self.params.contraction_guard });
                }
            }
            if step <= self.params.fp_tol {
                self.guard(&y)?;
                return Ok((y, it, estimate));
            }
            prev_step = Some(step);
        }
        Err(Error::NoConvergence { iterations: self.params.max_iter, residual: self.projected(&y)?.norm() })
    }

    fn newton(&self, mut y: DVector<f64>) -> Result<(DVector<f64>, usize)> {
        // conditioning of the blocks is checked once at v = 0
        assemble_with(&self.problem, self.frame, &self.basis)?;
        let mut f = self.projected(&y)?;
        for it in 1..=self.params.max_iter {
            let u = self.frame.z() + &self.loop_of(&y);
            let hess = self.problem.hessian_hat(&u).map_err(exit)?;
            let jac = self.basis.x.transpose() * hess * &self.basis.x;
            let dy = jac
                .lu()
                .solve(&f)
                .ok_or(Error::SingularOperator { block: "L", condition: f64::INFINITY })?;
            let mut scale = 1.0;
            let mut halvings = 0;
            let (trial, f_trial) = loop {
                let trial = self.symmetrize(&y - &dy * scale)?;
                match self.projected(&trial) {
                    Ok(ft) if ft.norm() <= f.norm() * (1.0 + 1e-6) + self.params.newton_tol => break (trial, ft),
                    Ok(_) | Err(Error::DomainExit(_)) if halvings < 20 => {
                        halvings += 1;
                        scale *= 0.5;
                    }
                    Ok(_) => return Err(Error::LeftDomain { halvings }),
                    Err(e) => return Err(e),
                }
            };
            let step = (&trial - &y).norm();
            y = trial;
            f = f_trial;
            if step <= self.params.newton_tol {
                return Ok((y, it));
            }
        }
        Err(Error::NoConvergence { iterations: self.params.max_iter, residual: f.norm() })
    }
}

/// Solves `P_X ∇𝔍_r(Z + v) = 0` for `v ∈ X` and checks that the component
/// along `Ż` vanishes as well.
pub fn solve_reduced(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    r: f64,
    frame: &LoopFrame,
    params: &SolverParams,
    warm_start: Option<&Loop>,
) -> Result<ReducedSolution> {
    params.validate()?;
    if frame.modes() != params.modes {
        return Err(Error::DimensionMismatch { expected: params.modes, found: frame.modes() });
    }
    let problem = ReducedProblem::new(sys, domain, a0, r, params.modes)?;
    let basis = XBasis::new(&problem, frame)?;
    let z0 = frame.z().eval(0.0);
    let solver = Solver { problem, frame, basis, params, eps: 0.5 * min_separation(&z0) };
    let y0 = match warm_start {
        Some(w) => solver.coords(w),
        None => DVector::zeros(solver.basis.dim()),
    };

    let (y, iterations, contraction_estimate) = if domain.is_plane() {
        // F ≡ 0: Z itself solves the blown-up system
        (DVector::zeros(solver.basis.dim()), 0, None)
    } else {
        match params.mode {
            SolverMode::FixedPoint => solver.fixed_point(y0)?,
            SolverMode::Newton => {
                let (y, it) = solver.newton(y0)?;
                (y, it, None)
            }
        }
    };

    let g = solver.full_gradient(&y)?;
    let projected_residual = (solver.basis.x.transpose() * &g).norm();
    let residual_grad = g.norm();
    let tol = match params.mode {
        SolverMode::FixedPoint => params.fp_tol,
        SolverMode::Newton => params.newton_tol,
    };
    if residual_grad > 10.0 * projected_residual.max(tol) {
        return Err(Error::PhaseDefect { full: residual_grad, projected: projected_residual });
    }
    if residual_grad > 10.0 * tol {
        return Err(Error::NoConvergence { iterations, residual: residual_grad });
    }
    let v = solver.loop_of(&y);
    let u = frame.z() + &v;
    let phase_defect = g.dot(&solver.basis.zdot_hat).abs();
    let velocity_overlap = v.differentiate().h1_inner(frame.zdot())?;
    Ok(ReducedSolution {
        r,
        vnorm: y.norm(),
        spectral_tail: u.spectral_tail(),
        v,
        u,
        residual_grad,
        projected_residual,
        phase_defect,
        iterations,
        contraction_estimate,
        velocity_overlap,
    })
}
