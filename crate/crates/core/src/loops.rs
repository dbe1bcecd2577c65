//! Truncated Fourier model of the space of `2π`-periodic loops in `R^{2N}`.
//!
//! A loop of order `M` is `u(t) = a0 + Σ_{k=1}^M (a_k cos kt + b_k sin kt)`.
//! Coefficients are stored as the columns `[a0, a1, b1, ..., aM, bM]` of a
//! `2N x (2M+1)` matrix, so the column-major storage doubles as a flat vector.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibria::RelativeEquilibrium;
use crate::error::{Error, Result};
use crate::system::{apply_j, point, set_point, Vec2};

pub const DEFAULT_MODES: usize = 32;

/// Fraction of the highest modes inspected by [`Loop::spectral_tail`].
pub const TAIL_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LoopRecord", into = "LoopRecord")]
pub struct Loop {
    n: usize,
    modes: usize,
    coeffs: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct LoopRecord {
    n: usize,
    modes: usize,
    coeffs: Vec<Vec<f64>>,
}

impl From<Loop> for LoopRecord {
    fn from(u: Loop) -> Self {
        let coeffs = u.coeffs.column_iter().map(|c| c.iter().copied().collect()).collect();
        LoopRecord { n: u.n, modes: u.modes, coeffs }
    }
}

impl TryFrom<LoopRecord> for Loop {
    type Error = Error;

    fn try_from(rec: LoopRecord) -> Result<Self> {
        let cols = 2 * rec.modes + 1;
        if rec.n == 0 {
            return Err(Error::Parse("loop must have at least one vortex".into()));
        }
        if rec.coeffs.len() != cols {
            return Err(Error::DimensionMismatch { expected: cols, found: rec.coeffs.len() });
        }
        let d = 2 * rec.n;
        if let Some(bad) = rec.coeffs.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
        }
        if rec.coeffs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite loop coefficient".into()));
        }
        let coeffs = DMatrix::from_fn(d, cols, |i, j| rec.coeffs[j][i]);
        Ok(Loop { n: rec.n, modes: rec.modes, coeffs })
    }
}

/// Index of the column holding mode `k`: cosine part, sine part at `+1`.
#[inline]
fn cos_col(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        2 * k - 1
    }
}

#[inline]
fn mode_of_col(p: usize) -> usize {
    p.div_ceil(2)
}

impl Loop {
    pub fn zeros(n: usize, modes: usize) -> Self {
        Self { n, modes, coeffs: DMatrix::zeros(2 * n, 2 * modes + 1) }
    }

    pub fn from_coeffs(n: usize, modes: usize, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: coeffs.nrows() });
        }
        if coeffs.ncols() != 2 * modes + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * modes + 1, found: coeffs.ncols() });
        }
        Ok(Self { n, modes, coeffs })
    }

    /// Inverse of [`Loop::as_vector`].
    pub fn from_vector(n: usize, modes: usize, v: &DVector<f64>) -> Result<Self> {
        let len = 2 * n * (2 * modes + 1);
        if v.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: v.len() });
        }
        Ok(Self { n, modes, coeffs: DMatrix::from_column_slice(2 * n, 2 * modes + 1, v.as_slice()) })
    }

    pub fn constant(c: &DVector<f64>, modes: usize) -> Self {
        let mut u = Self::zeros(c.len() / 2, modes);
        u.coeffs.set_column(0, c);
        u
    }

    /// Constant loop with every vortex at `a`.
    pub fn lifted(a: Vec2, n: usize, modes: usize) -> Self {
        Self::constant(&crate::system::lift(a, n), modes)
    }

    /// `c cos kt + s sin kt`.
    pub fn harmonic(k: usize, c: &DVector<f64>, s: &DVector<f64>, modes: usize) -> Result<Self> {
        if k == 0 || k > modes {
            return Err(Error::InvalidParameter(format!("mode {k} outside 1..={modes}")));
        }
        let mut u = Self::zeros(c.len() / 2, modes);
        u.coeffs.set_column(cos_col(k), c);
        u.coeffs.set_column(cos_col(k) + 1, s);
        Ok(u)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Flat coefficient vector `[a0; a1; b1; ...]`.
    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.coeffs.as_slice())
    }

    pub fn mean(&self) -> DVector<f64> {
        self.coeffs.column(0).into_owned()
    }

    pub fn cos_coeff(&self, k: usize) -> DVector<f64> {
        self.coeffs.column(cos_col(k)).into_owned()
    }

    pub fn sin_coeff(&self, k: usize) -> DVector<f64> {
        assert!(k >= 1, "mode 0 has no sine part");
        self.coeffs.column(cos_col(k) + 1).into_owned()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut out = self.mean();
        for k in 1..=self.modes {
            let (s, c) = (k as f64 * t).sin_cos();
            out += self.coeffs.column(cos_col(k)) * c + self.coeffs.column(cos_col(k) + 1) * s;
        }
        out
    }

    /// Zero-pads or truncates to order `modes`.
    pub fn resized(&self, modes: usize) -> Self {
        let mut out = Self::zeros(self.n, modes);
        let cols = (2 * modes + 1).min(self.coeffs.ncols());
        out.coeffs.columns_mut(0, cols).copy_from(&self.coeffs.columns(0, cols));
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    fn weighted_inner(&self, other: &Self, weight: impl Fn(usize) -> f64) -> Result<f64> {
        self.check_compatible(other)?;
        let cols = self.coeffs.ncols().min(other.coeffs.ncols());
        Ok((0..cols)
            .map(|p| weight(p) * self.coeffs.column(p).dot(&other.coeffs.column(p)))
            .sum())
    }

    /// `∫_0^{2π} u·v dt`.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.weighted_inner(other, l2_weight)
    }

    /// `∫_0^{2π} (u·v + u̇·v̇) dt`.
    pub fn h1_inner(&self, other: &Self) -> Result<f64> {
        self.weighted_inner(other, h1_weight)
    }

    pub fn h1_norm(&self) -> f64 {
        self.h1_inner(self).unwrap_or(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).unwrap_or(0.0).sqrt()
    }

    fn scale_modes(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for p in 0..out.coeffs.ncols() {
            let s = f(mode_of_col(p));
            out.coeffs.column_mut(p).scale_mut(s);
        }
        out
    }

    pub fn differentiate(&self) -> Self {
        let mut out = Self::zeros(self.n, self.modes);
        for k in 1..=self.modes {
            let kf = k as f64;
            let (a, b) = (cos_col(k), cos_col(k) + 1);
            out.coeffs.set_column(a, &(self.coeffs.column(b) * kf));
            out.coeffs.set_column(b, &(self.coeffs.column(a) * -kf));
        }
        out
    }

    /// `w - ẅ`.
    pub fn id_minus_laplace(&self) -> Self {
        self.scale_modes(|k| 1.0 + (k * k) as f64)
    }

    pub fn inv_id_minus_laplace(&self) -> Self {
        self.scale_modes(|k| 1.0 / (1.0 + (k * k) as f64))
    }

    /// `θ∗u (t) = u(t + θ)`.
    pub fn time_shift(&self, theta: f64) -> Self {
        let mut out = self.clone();
        for k in 1..=self.modes {
            let (s, c) = (k as f64 * theta).sin_cos();
            let (ia, ib) = (cos_col(k), cos_col(k) + 1);
            let a = self.coeffs.column(ia);
            let b = self.coeffs.column(ib);
            out.coeffs.set_column(ia, &(a * c + b * s));
            out.coeffs.set_column(ib, &(b * c - a * s));
        }
        out
    }

    /// Applies a linear map to every time sample, i.e. to each coefficient vector.
    pub fn map_coeffs(&self, m: &DMatrix<f64>) -> Self {
        Self { n: self.n, modes: self.modes, coeffs: m * &self.coeffs }
    }

    /// Share of the H¹ norm carried by the highest [`TAIL_FRACTION`] of the modes.
    pub fn spectral_tail(&self) -> f64 {
        let total = self.h1_norm();
        if total == 0.0 || self.modes == 0 {
            return 0.0;
        }
        let first = self.modes - ((self.modes as f64 * TAIL_FRACTION).ceil() as usize).min(self.modes) + 1;
        let tail: f64 = (first..=self.modes)
            .map(|k| {
                let w = PI * (1.0 + (k * k) as f64);
                w * (self.coeffs.column(cos_col(k)).norm_squared()
                    + self.coeffs.column(cos_col(k) + 1).norm_squared())
            })
            .sum();
        tail.sqrt() / total
    }

    /// Values at `t_j = 2πj/m`, one column per node.
    pub fn sample(&self, m: usize) -> DMatrix<f64> {
        Nodes::new(self.modes, m).sample(self)
    }

    /// Least-squares (for `m ≥ 2M+1`: exact) inverse of [`Loop::sample`].
    pub fn from_samples(values: &DMatrix<f64>, modes: usize) -> Result<Self> {
        Nodes::try_new(modes, values.ncols())?.transform(values)
    }

    /// Pseudo-spectral image of `u` under a pointwise map.
    pub fn map_pointwise<F>(&self, nodes: &Nodes, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &DVector<f64>) -> Result<DVector<f64>>,
    {
        let samples = nodes.sample(self);
        let mut out = DMatrix::zeros(samples.nrows(), samples.ncols());
        for j in 0..samples.ncols() {
            let v = f(j, &samples.column(j).into_owned())?;
            out.set_column(j, &v);
        }
        nodes.transform(&out)
    }
}

pub fn l2_weight(p: usize) -> f64 {
    if p == 0 {
        2.0 * PI
    } else {
        PI
    }
}

pub fn h1_weight(p: usize) -> f64 {
    let k = mode_of_col(p) as f64;
    l2_weight(p) * (1.0 + k * k)
}

/// Default node count for nonlinear terms, `4(2M+1)`.
pub fn dealiased_nodes(modes: usize) -> usize {
    4 * (2 * modes + 1)
}

/// True if products of two order-`modes` loops are resolved by `m` nodes.
pub fn alias_free(modes: usize, m: usize) -> bool {
    m > 4 * modes
}

/// Equispaced nodes with the trigonometric basis tabulated on them.
#[derive(Debug, Clone)]
pub struct Nodes {
    modes: usize,
    /// `basis[(p, j)] = φ_p(t_j)`.
    basis: DMatrix<f64>,
}

impl Nodes {
    pub fn new(modes: usize, m: usize) -> Self {
        let basis = DMatrix::from_fn(2 * modes + 1, m, |p, j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            let k = mode_of_col(p) as f64;
            if p == 0 {
                1.0
            } else if p % 2 == 1 {
                (k * t).cos()
            } else {
                (k * t).sin()
            }
        });
        Self { modes, basis }
    }

    pub fn try_new(modes: usize, m: usize) -> Result<Self> {
        if m < 2 * modes + 1 {
            return Err(Error::InvalidParameter(format!(
                "{m} nodes cannot resolve {modes} modes (need at least {})",
                2 * modes + 1
            )));
        }
        Ok(Self::new(modes, m))
    }

    pub fn dealiased(modes: usize) -> Self {
        Self::new(modes, dealiased_nodes(modes))
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn time(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    /// `φ_p(t_j)`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Discrete projection weight of column `p`: `1/m` for the mean, `2/m` otherwise.
    pub fn projection_weight(&self, p: usize) -> f64 {
        if p == 0 {
            1.0 / self.len() as f64
        } else {
            2.0 / self.len() as f64
        }
    }

    pub fn sample(&self, u: &Loop) -> DMatrix<f64> {
        if u.modes == self.modes {
            &u.coeffs * &self.basis
        } else {
            &u.resized(self.modes).coeffs * &self.basis
        }
    }

    pub fn transform(&self, values: &DMatrix<f64>) -> Result<Loop> {
        if values.ncols() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: values.ncols() });
        }
        let mut coeffs = values * self.basis.transpose();
        for p in 0..coeffs.ncols() {
            let w = self.projection_weight(p);
            coeffs.column_mut(p).scale_mut(w);
        }
        Loop::from_coeffs(values.nrows() / 2, self.modes, coeffs)
    }

    /// Trapezoidal approximation of `∫_0^{2π} f(t) dt` from node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        2.0 * PI * values.iter().sum::<f64>() / self.len() as f64
    }
}

impl Add for &Loop {
    type Output = Loop;

    fn add(self, rhs: &Loop) -> Loop {
        assert_eq!(self.n, rhs.n, "loops of different vortex counts");
        let modes = self.modes.max(rhs.modes);
        let mut out = self.resized(modes);
        out.coeffs += rhs.resized(modes).coeffs;
        out
    }
}

impl Add for Loop {
    type Output = Loop;

    fn add(self, rhs: Loop) -> Loop {
        &self + &rhs
    }
}

impl Sub for &Loop {
    type Output = Loop;

    fn sub(self, rhs: &Loop) -> Loop {
        self + &(-rhs)
    }
}

impl Sub for Loop {
    type Output = Loop;

    fn sub(self, rhs: Loop) -> Loop {
        &self - &rhs
    }
}

impl Neg for &Loop {
    type Output = Loop;

    fn neg(self) -> Loop {
        self * -1.0
    }
}

impl Neg for Loop {
    type Output = Loop;

    fn neg(self) -> Loop {
        -&self
    }
}

impl Mul<f64> for &Loop {
    type Output = Loop;

    fn mul(self, s: f64) -> Loop {
        Loop { n: self.n, modes: self.modes, coeffs: &self.coeffs * s }
    }
}

impl Mul<f64> for Loop {
    type Output = Loop;

    fn mul(self, s: f64) -> Loop {
        &self * s
    }
}

/// The relative equilibrium as a loop, with the data needed to split the
/// loop space into `D ⊕ RŻ ⊕ N_Z`.
#[derive(Debug, Clone)]
pub struct LoopFrame {
    z: Loop,
    zdot: Loop,
    zdot_norm2: f64,
}

impl LoopFrame {
    /// Frame of a normalized equilibrium: `Z(t) = cos t z - ω sin t Jz`.
    pub fn from_equilibrium(eq: &RelativeEquilibrium, modes: usize) -> Result<Self> {
        if (eq.omega.abs() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "loop frame expects a normalized equilibrium (|ω| = 1)".into(),
            ));
        }
        if modes == 0 {
            return Err(Error::InvalidParameter("at least one mode is required".into()));
        }
        let n = eq.sys.n();
        let mut sine = DVector::zeros(2 * n);
        for k in 0..n {
            set_point(&mut sine, k, -eq.omega * apply_j(point(&eq.z, k)));
        }
        Self::from_loop(Loop::harmonic(1, &eq.z, &sine, modes)?)
    }

    pub fn from_loop(z: Loop) -> Result<Self> {
        let zdot = z.differentiate();
        let zdot_norm2 = zdot.h1_inner(&zdot)?;
        if zdot_norm2.sqrt() < 1e-12 {
            return Err(Error::DegenerateFrame { norm: zdot_norm2.sqrt() });
        }
        Ok(Self { z, zdot, zdot_norm2 })
    }

    /// Frame of `θ∗Z`.
    pub fn shifted(&self, theta: f64) -> Self {
        Self { z: self.z.time_shift(theta), zdot: self.zdot.time_shift(theta), zdot_norm2: self.zdot_norm2 }
    }

    pub fn z(&self) -> &Loop {
        &self.z
    }

    pub fn zdot(&self) -> &Loop {
        &self.zdot
    }

    pub fn n(&self) -> usize {
        self.z.n
    }

    pub fn modes(&self) -> usize {
        self.z.modes
    }

    /// Constant loop `ê_i` (i = 0, 1), every vortex displaced along axis `i`.
    pub fn e_hat(&self, i: usize) -> Loop {
        let mut a = Vec2::zeros();
        a[i] = 1.0;
        Loop::lifted(a, self.n(), self.modes())
    }

    /// `H¹`-orthogonal projection onto the constant loops `â`.
    pub fn project_d(&self, u: &Loop) -> Loop {
        let mean = u.mean();
        let n = self.n();
        let c: Vec2 = (0..n).map(|k| point(&mean, k)).sum::<Vec2>() / n as f64;
        Loop::lifted(c, n, u.modes)
    }

    pub fn project_phase(&self, u: &Loop) -> Result<Loop> {
        Ok(&self.zdot * (u.h1_inner(&self.zdot)? / self.zdot_norm2))
    }

    pub fn project_x(&self, u: &Loop) -> Result<Loop> {
        Ok(u - &self.project_phase(u)?)
    }

    pub fn project_nz(&self, u: &Loop) -> Result<Loop> {
        Ok(&(u - &self.project_phase(u)?) - &self.project_d(u))
    }

    /// `⟨u, Ż⟩_{H¹}`.
    pub fn phase_component(&self, u: &Loop) -> Result<f64> {
        u.h1_inner(&self.zdot)
    }

    pub fn zdot_norm(&self) -> f64 {
        self.zdot_norm2.sqrt()
    }
}

/// Order of a permutation; `None` if `sigma` is not one.
fn permutation_order(sigma: &[usize]) -> Option<usize> {
    let n = sigma.len();
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || seen[s] {
            return None;
        }
        seen[s] = true;
    }
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let mut order = 1;
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = sigma[i];
            len += 1;
        }
        order = order / gcd(order, len) * len;
    }
    Some(order)
}

/// `σ∗u`: block `σ(i)` of the result is `u_i(t + 2π/ord σ)`.
pub fn sigma_act(sigma: &[usize], u: &Loop) -> Result<Loop> {
    let order = permutation_order(sigma)
        .filter(|_| sigma.len() == u.n)
        .ok_or_else(|| Error::InvalidParameter("sigma is not a permutation of the vortices".into()))?;
    let shifted = u.time_shift(2.0 * PI / order as f64);
    let mut out = Loop::zeros(u.n, u.modes);
    for (i, &s) in sigma.iter().enumerate() {
        out.coeffs.rows_mut(2 * s, 2).copy_from(&shifted.coeffs.rows(2 * i, 2));
    }
    Ok(out)
}

/// Average of `σ^i∗u` over the cyclic group generated by `σ`, the projection
/// onto the `σ`-invariant loops.
pub fn sigma_project(sigma: &[usize], gammas: &[f64], u: &Loop) -> Result<Loop> {
    if sigma.len() != gammas.len() {
        return Err(Error::DimensionMismatch { expected: gammas.len(), found: sigma.len() });
    }
    let order = permutation_order(sigma)
        .ok_or_else(|| Error::InvalidParameter("sigma is not a permutation".into()))?;
    if sigma.iter().enumerate().any(|(i, &s)| gammas[s] != gammas[i]) {
        return Err(Error::VorticityMismatch);
    }
    let mut acc = u.clone();
    let mut term = u.clone();
    for _ in 1..order {
        term = sigma_act(sigma, &term)?;
        acc = &acc + &term;
    }
    Ok(acc * (1.0 / order as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_pair, make_thomson, normalize_period};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_loop(rng: &mut ChaCha8Rng, n: usize, modes: usize) -> Loop {
        let coeffs = DMatrix::from_fn(2 * n, 2 * modes + 1, |_, p| {
            rng.random_range(-1.0..1.0) / (1.0 + mode_of_col(p) as f64).powi(2)
        });
        Loop::from_coeffs(n, modes, coeffs).unwrap()
    }

    fn quad_h1(u: &Loop, v: &Loop, m: usize) -> f64 {
        let nodes = Nodes::new(u.modes.max(v.modes), m);
        let (su, sv) = (nodes.sample(u), nodes.sample(v));
        let (du, dv) = (nodes.sample(&u.differentiate()), nodes.sample(&v.differentiate()));
        let vals: Vec<f64> = (0..m)
            .map(|j| su.column(j).dot(&sv.column(j)) + du.column(j).dot(&dv.column(j)))
            .collect();
        nodes.integrate(&vals)
    }

    fn pair_frame(modes: usize) -> LoopFrame {
        LoopFrame::from_equilibrium(&normalize_period(&make_pair(1.0, 1.0, 2.0).unwrap()), modes).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let frame = pair_frame(4);
        let (e1, e2) = (frame.e_hat(0), frame.e_hat(1));
        assert!((e1.h1_inner(&e1).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert_eq!(e1.h1_inner(&e2).unwrap(), 0.0);
        let mut e = DVector::zeros(4);
        e[2] = 1.0;
        let u = Loop::harmonic(1, &e, &DVector::zeros(4), 3).unwrap();
        assert!((u.h1_inner(&u).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((quad_h1(&u, &u, 16) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for modes in [1, 5, 12] {
            let u = random_loop(&mut rng, 3, modes);
            let v = random_loop(&mut rng, 3, modes);
            let exact = u.h1_inner(&v).unwrap();
            let quad = quad_h1(&u, &v, 8 * modes);
            assert!((exact - quad).abs() <= 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn mixed_orders_zero_pad() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_loop(&mut rng, 2, 3);
        let v = random_loop(&mut rng, 2, 6);
        let a = u.h1_inner(&v).unwrap();
        let b = u.resized(6).h1_inner(&v).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(u.h1_inner(&random_loop(&mut rng, 3, 3)).is_err());
    }

    #[test]
    fn derivative_and_inverse_examples() {
        let c = Loop::constant(&DVector::from_vec(vec![1.0, 2.0]), 3);
        assert_eq!(c.differentiate().h1_norm(), 0.0);
        assert_eq!(c.inv_id_minus_laplace(), c);
        let e = DVector::from_vec(vec![1.0, 0.0]);
        let u = Loop::harmonic(1, &e, &DVector::zeros(2), 3).unwrap();
        assert_eq!(u.inv_id_minus_laplace(), &u * 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_loop(&mut rng, 2, 9);
        assert!((w.id_minus_laplace().inv_id_minus_laplace() - w.clone()).coeffs.amax() < 1e-13);
        // second derivative is minus the Laplacian part
        let ddw = w.differentiate().differentiate();
        assert!((&(&w - &ddw) - &w.id_minus_laplace()).coeffs.amax() < 1e-12);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let u = random_loop(&mut rng, 2, 7);
            let v = random_loop(&mut rng, 2, 7);
            let lhs = u.inv_id_minus_laplace().h1_inner(&v).unwrap();
            let rhs = u.l2_inner(&v).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn time_shift_examples() {
        let e = DVector::from_vec(vec![0.0, 1.0]);
        let u = Loop::harmonic(1, &e, &DVector::zeros(2), 2).unwrap();
        assert_eq!(u.time_shift(0.0), u);
        assert!((u.time_shift(PI) + u.clone()).coeffs.amax() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_loop(&mut rng, 2, 6);
        for theta in [0.3, 1.7, 4.0] {
            let s = w.time_shift(theta);
            assert!((quad_h1(&s, &s, 64) - w.h1_inner(&w).unwrap()).abs() < 1e-10);
            assert!((s.l2_norm() - w.l2_norm()).abs() < 1e-12);
            for t in [0.0, 0.9, 2.5] {
                assert!((s.eval(t) - w.eval(t + theta)).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn periodic_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_loop(&mut rng, 2, 5);
        assert!((w.eval(0.4) - w.eval(0.4 + 2.0 * PI)).amax() < 1e-13);
    }

    #[test]
    fn frame_matches_equilibrium() {
        let eq = normalize_period(&make_thomson(4, 1.0, 1.0).unwrap());
        let frame = LoopFrame::from_equilibrium(&eq, 4).unwrap();
        for t in [0.0, 0.8, 3.1] {
            assert!((frame.z().eval(t) - eq.at(t)).amax() < 1e-14);
            assert!((frame.zdot().eval(t) - eq.velocity_at(t)).amax() < 1e-14);
        }
        // Z is mean free, hence orthogonal to D
        assert!(frame.phase_component(&frame.e_hat(0)).unwrap().abs() < 1e-14);
        assert!(matches!(LoopFrame::from_loop(Loop::zeros(2, 3)), Err(Error::DegenerateFrame { .. })));
    }

    #[test]
    fn projection_examples() {
        let frame = pair_frame(5);
        let e1 = frame.e_hat(0);
        assert_eq!(frame.project_d(&e1), e1);
        assert!(frame.project_x(frame.zdot()).unwrap().h1_norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let u = random_loop(&mut rng, 2, 5);
            let nz = frame.project_nz(&u).unwrap();
            for i in 0..2 {
                assert!(nz.h1_inner(&frame.e_hat(i)).unwrap().abs() < 1e-10);
            }
            assert!(nz.h1_inner(frame.zdot()).unwrap().abs() < 1e-10);
            let sum = &(&frame.project_d(&u) + &nz) + &frame.project_phase(&u).unwrap();
            assert!((sum - u.clone()).coeffs.amax() < 1e-10);
        }
    }

    #[test]
    fn projections_are_idempotent_and_self_adjoint() {
        let frame = pair_frame(4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_loop(&mut rng, 2, 4);
        let v = random_loop(&mut rng, 2, 4);
        let projs: [&dyn Fn(&Loop) -> Loop; 4] = [
            &|w| frame.project_d(w),
            &|w| frame.project_phase(w).unwrap(),
            &|w| frame.project_x(w).unwrap(),
            &|w| frame.project_nz(w).unwrap(),
        ];
        for p in projs {
            assert!((p(&p(&u)) - p(&u)).coeffs.amax() < 1e-12);
            let lhs = p(&u).h1_inner(&v).unwrap();
            let rhs = u.h1_inner(&p(&v)).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_equivariance() {
        let frame = pair_frame(6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_loop(&mut rng, 2, 6);
        let theta = 1.1;
        let shifted = frame.shifted(theta);
        let us = u.time_shift(theta);
        assert!((u.differentiate().time_shift(theta) - us.differentiate()).coeffs.amax() < 1e-10);
        assert!(
            (u.inv_id_minus_laplace().time_shift(theta) - us.inv_id_minus_laplace()).coeffs.amax() < 1e-10
        );
        let a = frame.project_nz(&u).unwrap().time_shift(theta);
        let b = shifted.project_nz(&us).unwrap();
        assert!((a - b).coeffs.amax() < 1e-10);
        let a = frame.project_d(&u).time_shift(theta);
        assert!((a - shifted.project_d(&us)).coeffs.amax() < 1e-10);
    }

    #[test]
    fn sampling_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = random_loop(&mut rng, 3, 6);
        for m in [13, 20, dealiased_nodes(6)] {
            let back = Loop::from_samples(&u.sample(m), 6).unwrap();
            assert!((back - u.clone()).coeffs.amax() < 1e-12);
        }
        assert!(Loop::from_samples(&u.sample(12), 6).is_err());
        let c = Loop::constant(&DVector::from_vec(vec![0.5, -1.0]), 3);
        let s = c.sample(8);
        assert!(s.column_iter().all(|col| (col - c.mean()).amax() < 1e-15));
        let e = DVector::from_vec(vec![1.0, 0.0]);
        let cos = Loop::harmonic(1, &e, &DVector::zeros(2), 1).unwrap().sample(8);
        for j in 0..8 {
            assert!((cos[(0, j)] - (2.0 * PI * j as f64 / 8.0).cos()).abs() < 1e-15);
        }
        assert!(alias_free(6, dealiased_nodes(6)));
        assert!(!alias_free(6, 13));
    }

    #[test]
    fn sigma_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_loop(&mut rng, 3, 4);
        let g = [1.0, 1.0, 1.0];
        assert_eq!(sigma_project(&[0, 1, 2], &g, &u).unwrap(), u);
        let eq = normalize_period(&make_thomson(3, 1.0, 1.0).unwrap());
        let z = LoopFrame::from_equilibrium(&eq, 4).unwrap().z().clone();
        let sigma = [1, 2, 0];
        assert!((sigma_project(&sigma, &g, &z).unwrap() - z.clone()).coeffs.amax() < 1e-12);
        let p = sigma_project(&sigma, &g, &u).unwrap();
        assert!((sigma_act(&sigma, &p).unwrap() - p.clone()).coeffs.amax() < 1e-12);
        assert!((sigma_project(&sigma, &g, &p).unwrap() - p.clone()).coeffs.amax() < 1e-12);
        let th = 2.0 * PI / 3.0;
        let a = sigma_project(&sigma, &g, &u.time_shift(th)).unwrap();
        assert!((a - p.time_shift(th)).coeffs.amax() < 1e-12);
        assert_eq!(sigma_project(&sigma, &[1.0, 2.0, 1.0], &u), Err(Error::VorticityMismatch));
        assert!(sigma_project(&[0, 0, 1], &g, &u).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = random_loop(&mut rng, 2, 3);
        let s = serde_json::to_string(&u).unwrap();
        let back: Loop = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        let bad = r#"{"n":2,"modes":1,"coeffs":[[0,0,0,0],[1,1,1,1]]}"#;
        assert!(serde_json::from_str::<Loop>(bad).is_err());
    }

    fn arb_loop(n: usize, modes: usize) -> impl Strategy<Value = Loop> {
        prop::collection::vec(-2.0..2.0f64, 2 * n * (2 * modes + 1))
            .prop_map(move |v| Loop::from_vector(n, modes, &DVector::from_vec(v)).unwrap())
    }

    proptest! {
        #[test]
        fn flat_vector_round_trip(u in arb_loop(2, 3)) {
            prop_assert_eq!(Loop::from_vector(2, 3, &u.as_vector()).unwrap(), u);
        }

        #[test]
        fn shift_composes(u in arb_loop(2, 4), a in 0.0..6.0f64, b in 0.0..6.0f64) {
            let lhs = u.time_shift(a).time_shift(b);
            let rhs = u.time_shift(a + b);
            prop_assert!((lhs - rhs).coeffs.amax() < 1e-12);
        }

        #[test]
        fn projections_split_identity(u in arb_loop(2, 4)) {
            let frame = pair_frame(4);
            let sum = &(&frame.project_d(&u) + &frame.project_nz(&u).unwrap()) + &frame.project_phase(&u).unwrap();
            prop_assert!((sum - u.clone()).coeffs.amax() < 1e-10);
        }

        #[test]
        fn h1_dominates_l2(u in arb_loop(1, 5)) {
            prop_assert!(u.h1_norm() >= u.l2_norm() - 1e-12);
        }
    }
}
