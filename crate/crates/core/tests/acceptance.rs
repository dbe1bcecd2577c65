//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Runs without the libtest harness so the lines always print;
//! the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortex_orbits::continuation::{continue_path, local_uniqueness_probe, theta_grid, ContinuationPath};
use vortex_orbits::dynamics::{integrate, invariants_along, validate_orbit, Tolerances};
use vortex_orbits::equilibria::{
    make_pair, make_thomson, make_triangle, monodromy, normalize_period, residual_hs0, triangle_conditions,
    RelativeEquilibrium,
};
use vortex_orbits::hamiltonian::{eval_f, eval_h0, grad_f, grad_h0, hess_f, Field};
use vortex_orbits::loops::{Loop, LoopFrame, Nodes};
use vortex_orbits::orbit::unrescale;
use vortex_orbits::reduction::{
    assemble_l_r, solve_reduced, ReducedProblem, SolverMode, SolverParams, XBasis,
};
use vortex_orbits::robin::find_critical_point_h;
use vortex_orbits::system::{lift, min_separation, Mat2, Vec2};
use vortex_orbits::{DomainModel, VortexSystem};

/// Sub-checks of one criterion.
struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, ok)| *ok)
    }

    fn print(&self) {
        for (what, ok) in &self.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "!!" });
        }
        println!("{} criterion {}: {}", if self.passed() { "PASS" } else { "FAIL" }, self.id, self.title);
    }
}

fn normalized_pair() -> RelativeEquilibrium {
    normalize_period(&make_pair(1.0, 1.0, 2.0).unwrap())
}

fn reference_params(mode: SolverMode) -> SolverParams {
    SolverParams { modes: 32, r_max: 0.2, r_min: 1e-3, r_steps: 30, mode, ..SolverParams::default() }
}

fn disk_anchor() -> Vec2 {
    find_critical_point_h(&DomainModel::UnitDisk, Vec2::new(0.3, -0.2), 1e-12).unwrap().a0
}

fn equilibrium_residuals() -> Criterion {
    let mut c = Criterion::new(1, "equilibrium residuals");
    let pair = make_pair(1.0, 1.0, 2.0).unwrap();
    let res = residual_hs0(&pair).unwrap();
    c.check(res <= 1e-10, format!("pair (1,1), d = 2: residual {res:.2e} <= 1e-10"));
    let want = 2.0 / (PI * 4.0);
    let err = (pair.omega - want).abs();
    c.check(err <= 1e-12, format!("pair omega {:.15} vs (G1+G2)/(pi d^2): |diff| {err:.2e} <= 1e-12", pair.omega));
    let tri = make_triangle(1.0, 2.0, 3.0, 1.0).unwrap();
    let res = residual_hs0(&tri).unwrap();
    c.check(res <= 1e-10, format!("triangle (1,2,3), s = 1: residual {res:.2e} <= 1e-10"));
    for n in 2..=6 {
        let res = residual_hs0(&make_thomson(n, 1.0, 1.0).unwrap()).unwrap();
        c.check(res <= 1e-10, format!("Thomson N = {n}: residual {res:.2e} <= 1e-10"));
    }
    c
}

/// Vorticities in [-3, 3]^3 kept away from the degenerate set by `margin`.
fn vorticity_grid(count: usize, margin: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let c = triangle_conditions(g[0], g[1], g[2]);
        let clear = g.iter().all(|x| x.abs() > margin)
            && c.total.abs() > margin
            && c.angular_momentum.abs() > margin
            && (c.angular_momentum - c.sum_squares).abs() > margin;
        if clear {
            out.push(g);
        }
    }
    out
}

fn nondegeneracy() -> Criterion {
    let mut c = Criterion::new(2, "nondegeneracy via monodromy");
    let k = monodromy(&normalized_pair()).unwrap().kernel_dim;
    c.check(k == 3, format!("pair (1,1): kernel_dim {k} == 3"));
    let tri = normalize_period(&make_triangle(1.0, 2.0, 3.0, 1.0).unwrap());
    let k = monodromy(&tri).unwrap().kernel_dim;
    c.check(k == 3, format!("triangle (1,2,3): kernel_dim {k} == 3"));
    let flat = normalize_period(&make_triangle(1.0, 1.0, -0.5, 1.0).unwrap());
    let report = monodromy(&flat).unwrap();
    c.check(
        report.kernel_dim > 3,
        format!(
            "triangle (1,1,-1/2), L = 0: kernel_dim {} > 3 (multiplier 1 has algebraic multiplicity {})",
            report.kernel_dim, report.unit_multiplier_count
        ),
    );
    let grid = vorticity_grid(20, 0.1, 7);
    let mut disagreements = Vec::new();
    for g in &grid {
        let predicted = triangle_conditions(g[0], g[1], g[2]).predicted_nondegenerate;
        let eq = normalize_period(&make_triangle(g[0], g[1], g[2], 1.0).unwrap());
        let verdict = monodromy(&eq).unwrap().nondegenerate;
        if predicted != verdict {
            disagreements.push(format!("({:.3},{:.3},{:.3})", g[0], g[1], g[2]));
        }
    }
    c.check(
        disagreements.is_empty(),
        format!("triangle_conditions vs monodromy on 20 vorticity triples: {} disagreements {:?}", disagreements.len(), disagreements),
    );
    c
}

fn block_identities() -> Criterion {
    let mut c = Criterion::new(3, "block-operator identities");
    let eq = normalized_pair();
    let sys = eq.sys.clone();
    let domain = DomainModel::UnitDisk;
    let a0 = disk_anchor();
    let frame = LoopFrame::from_equilibrium(&eq, 8).unwrap();
    let h2 = domain.hess_h(&a0).unwrap();
    let total = sys.gamma_total();
    let n = sys.n() as f64;

    let lin = assemble_l_r(&sys, &domain, a0, 1e-3, &frame).unwrap();
    let want = h2 * (total * total / (2.0 * n));
    let err = (lin.blocks.d0 - want).amax();
    c.check(
        err <= 1e-8,
        format!("D0 = {:.6} I vs (G^2/2N) h''(0) = {:.6} I: |diff| {err:.2e} <= 1e-8", lin.blocks.d0[(0, 0)], want[(0, 0)]),
    );

    for (label, gammas) in [("(1,1)", vec![1.0, 1.0]), ("(1,2,3)", vec![1.0, 2.0, 3.0])] {
        let s = VortexSystem::new(gammas.clone()).unwrap();
        let hf = hess_f(&s, &domain, &lift(a0, s.n())).unwrap();
        let mut want = DMatrix::zeros(s.dim(), s.dim());
        for j in 0..s.n() {
            for k in 0..s.n() {
                let block: Mat2 = h2 * (0.5 * gammas[j] * gammas[k]);
                want.view_mut((2 * j, 2 * k), (2, 2)).copy_from(&block);
            }
        }
        let err = (&hf - &want).amax();
        c.check(err <= 1e-8, format!("F''(0) for G = {label} vs 1/2 (G_j G_k) h''(0): |diff| {err:.2e} <= 1e-8"));
    }

    for (label, eq) in [
        ("pair", normalized_pair()),
        ("triangle (1,2,3)", normalize_period(&make_triangle(1.0, 2.0, 3.0, 1.0).unwrap())),
    ] {
        let frame = LoopFrame::from_equilibrium(&eq, 8).unwrap();
        let p = ReducedProblem::new(&eq.sys, &domain, a0, 1e-3, 8).unwrap();
        let basis = XBasis::new(&p, &frame).unwrap();
        let image = p.f_operator_limit_hat().unwrap() * p.to_hat(frame.z());
        let d = basis.d();
        let err = (d * (d.transpose() * &image)).norm();
        c.check(err <= 1e-10, format!("{label}: |P_D (id - Lap)^-1 F''(0)[Z]| {err:.2e} <= 1e-10"));
    }
    c
}

fn log_log_slope(path: &ContinuationPath) -> f64 {
    let pts: Vec<(f64, f64)> = path.solutions.iter().map(|s| (s.r.ln(), s.vnorm.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn reduction_reference() -> Criterion {
    let mut c = Criterion::new(4, "reduction solver, reference run");
    let eq = normalized_pair();
    let a0 = disk_anchor();
    let frame = LoopFrame::from_equilibrium(&eq, 32).unwrap();
    let domain = DomainModel::UnitDisk;
    let fp = continue_path(&eq.sys, &domain, a0, &frame, &reference_params(SolverMode::FixedPoint)).unwrap();
    let nt = continue_path(&eq.sys, &domain, a0, &frame, &reference_params(SolverMode::Newton)).unwrap();

    let good = fp.solutions.iter().filter(|s| s.residual_grad <= 1e-9).count();
    let total = fp.grid.len();
    c.check(
        good as f64 >= 0.8 * total as f64,
        format!("{good}/{total} grid points converged with residual <= 1e-9 (need 80%)"),
    );
    let worst_phase = fp.solutions.iter().map(|s| s.phase_defect).fold(0.0, f64::max);
    c.check(worst_phase <= 1e-8, format!("max phase defect {worst_phase:.2e} <= 1e-8"));
    let slope = log_log_slope(&fp);
    c.check((0.9..=1.5).contains(&slope), format!("log-log slope of |v| vs r = {slope:.3} in [0.9, 1.5]"));
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for a in &fp.solutions {
        if let Some(b) = nt.solutions.iter().find(|b| b.r == a.r) {
            worst = worst.max((&a.v - &b.v).h1_norm());
            compared += 1;
        }
    }
    c.check(
        compared == total && worst <= 1e-9,
        format!("FixedPoint vs Newton on {compared}/{total} points: max |diff| {worst:.2e} <= 1e-9"),
    );
    c
}

fn physical_validation() -> Criterion {
    let mut c = Criterion::new(5, "end-to-end physical validation");
    let eq = normalized_pair();
    let a0 = disk_anchor();
    let domain = DomainModel::UnitDisk;
    let frame = LoopFrame::from_equilibrium(&eq, 32).unwrap();
    let params = reference_params(SolverMode::FixedPoint);
    for r in [0.1, 0.05, 0.02] {
        let outcome = solve_reduced(&eq.sys, &domain, a0, r, &frame, &params, None)
            .and_then(|s| unrescale(&eq.sys, &domain, a0, r, &s.u, 64))
            .and_then(|orbit| validate_orbit(&orbit, 1e-10).map(|v| (orbit, v)));
        match outcome {
            Ok((orbit, v)) => {
                let inside = orbit.samples.iter().chain(&v.trajectory.states).all(|z| {
                    (0..eq.sys.n()).all(|k| domain.contains(&Vec2::new(z[2 * k], z[2 * k + 1])))
                });
                let sep = orbit.min_separation().min(v.trajectory.min_separation);
                c.check(
                    v.closure_error <= 1e-6 && inside && sep > 0.0,
                    format!(
                        "r = {r}: closure {:.2e} <= 1e-6 over period {:.4e}, inside disk {inside}, min separation {sep:.3e}",
                        v.closure_error, orbit.period
                    ),
                );
            }
            Err(e) => c.check(false, format!("r = {r}: {e}")),
        }
    }
    c
}

fn uniqueness_probe() -> Criterion {
    let mut c = Criterion::new(6, "S1 uniqueness probe");
    let eq = normalized_pair();
    let a0 = disk_anchor();
    let domain = DomainModel::UnitDisk;
    let frame = LoopFrame::from_equilibrium(&eq, 32).unwrap();
    let params = reference_params(SolverMode::FixedPoint);
    for r in [0.2, 0.05] {
        let s = solve_reduced(&eq.sys, &domain, a0, r, &frame, &params, None).unwrap();
        let probe = local_uniqueness_probe(&eq.sys, &domain, a0, &frame, &params, &s, &theta_grid(8)).unwrap();
        c.check(
            probe.max_mismatch <= 1e-8,
            format!("r = {r}: 8-point theta mismatch {:.2e} <= 1e-8", probe.max_mismatch),
        );
    }
    c
}

fn random_loop(rng: &mut ChaCha8Rng, n: usize, modes: usize, scale: f64) -> Loop {
    let coeffs = DMatrix::from_fn(2 * n, 2 * modes + 1, |_, j| {
        let k = j.div_ceil(2) as f64;
        scale * rng.random_range(-1.0..1.0) / (1.0 + k * k)
    });
    Loop::from_coeffs(n, modes, coeffs).unwrap()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn hygiene() -> Criterion {
    let mut c = Criterion::new(7, "numerical hygiene");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-6;
    let tri = make_triangle(1.0, 2.0, 3.0, 1.0).unwrap();
    let sys = tri.sys.clone();
    let domains = [DomainModel::UnitDisk, DomainModel::HalfPlane, DomainModel::synthetic(Mat2::new(1.0, 0.3, 0.3, -0.5)).unwrap()];

    // gradients and Hessians against central differences
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let z = &tri.z * 0.1 + lift(Vec2::new(0.1, 0.4), 3);
        let w = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let fd = (eval_h0(&sys, &(&z + &w * eps)).unwrap() - eval_h0(&sys, &(&z - &w * eps)).unwrap()) / (2.0 * eps);
        worst = worst.max(relative(fd, grad_h0(&sys, &z).unwrap().dot(&w)));
        for domain in &domains {
            let fd = (eval_f(&sys, domain, &(&z + &w * eps)).unwrap() - eval_f(&sys, domain, &(&z - &w * eps)).unwrap())
                / (2.0 * eps);
            worst = worst.max(relative(fd, grad_f(&sys, domain, &z).unwrap().dot(&w)));
            let fd = (grad_f(&sys, domain, &(&z + &w * eps)).unwrap() - grad_f(&sys, domain, &(&z - &w * eps)).unwrap())
                / (2.0 * eps);
            let exact = hess_f(&sys, domain, &z).unwrap() * &w;
            worst = worst.max((&fd - &exact).norm() / exact.norm().max(1e-12));
        }
    }
    let eq = normalized_pair();
    let frame = LoopFrame::from_equilibrium(&eq, 6).unwrap();
    let p = ReducedProblem::new(&eq.sys, &DomainModel::UnitDisk, Vec2::zeros(), 0.3, 6).unwrap();
    for _ in 0..3 {
        let u = frame.z() + &random_loop(&mut rng, 2, 6, 0.05);
        let w = random_loop(&mut rng, 2, 6, 1.0);
        let fd = (p.action(&(&u + &(&w * eps))).unwrap() - p.action(&(&u - &(&w * eps))).unwrap()) / (2.0 * eps);
        worst = worst.max(relative(fd, p.gradient(&u).unwrap().h1_inner(&w).unwrap()));
        let uh = p.to_hat(&u);
        let dir = DVector::from_fn(uh.len(), |_, _| rng.random_range(-1.0..1.0));
        let fd = (p.gradient_hat(&p.from_hat(&(&uh + &dir * eps))).unwrap()
            - p.gradient_hat(&p.from_hat(&(&uh - &dir * eps))).unwrap())
            / (2.0 * eps);
        let exact = p.hessian_hat(&u).unwrap() * &dir;
        worst = worst.max((&fd - &exact).norm() / exact.norm());
    }
    c.check(worst <= 1e-5, format!("finite-difference checks: max relative error {worst:.2e} <= 1e-5"));

    // loop-space invariants
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = random_loop(&mut rng, 3, 8, 1.0);
        let nodes = Nodes::dealiased(8);
        let samples = nodes.sample(&u);
        let pointwise: Vec<f64> = (0..nodes.len()).map(|j| samples.column(j).norm_squared()).collect();
        let parseval = nodes.integrate(&pointwise);
        worst = worst.max(relative(parseval, u.l2_norm().powi(2)));
        worst = worst.max((nodes.transform(&samples).unwrap() - u.clone()).coeffs().amax());
        let theta = rng.random_range(0.0..2.0 * PI);
        let shifted = u.time_shift(theta);
        worst = worst.max(relative(shifted.h1_norm(), u.h1_norm()));
        worst = worst.max((shifted.eval(0.3) - u.eval(0.3 + theta)).amax());
        worst = worst.max((shifted.time_shift(-theta) - u.clone()).coeffs().amax());
    }
    c.check(worst <= 1e-10, format!("Parseval, projection and shift invariants: max defect {worst:.2e} <= 1e-10"));

    // plane benchmarks over one period
    let mut worst: f64 = 0.0;
    for eq in [normalized_pair(), normalize_period(&make_thomson(3, 1.0, 1.0).unwrap()), normalize_period(&tri)] {
        let traj = integrate(&eq.sys, &DomainModel::Plane, Field::Plane, &eq.z, 2.0 * PI, Tolerances::default()).unwrap();
        let inv = invariants_along(&eq.sys, &DomainModel::Plane, &traj).unwrap();
        worst = worst
            .max(inv.energy_drift)
            .max(inv.center_of_vorticity_drift.unwrap_or(0.0))
            .max(inv.angular_impulse_drift.unwrap_or(0.0));
        assert!(min_separation(traj.last()) > 0.0);
    }
    c.check(worst <= 1e-9, format!("integrator invariant drifts on plane benchmarks: max {worst:.2e} <= 1e-9"));
    c
}

fn main() {
    let start = Instant::now();
    let runs: [fn() -> Criterion; 7] = [
        equilibrium_residuals,
        nondegeneracy,
        block_identities,
        reduction_reference,
        physical_validation,
        uniqueness_probe,
        hygiene,
    ];
    let mut failed = 0;
    for run in runs {
        let t = Instant::now();
        let c = run();
        c.print();
        println!("    ({:.1} s)", t.elapsed().as_secs_f64());
        if !c.passed() {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1} s", runs.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
