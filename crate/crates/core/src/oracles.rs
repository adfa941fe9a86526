//! Reference computations that do not use the block scattering formulas.
//!
//! * Fixed-step RK4 integration of `−φ″ + Vφ = k²φ` for `a(k)`, `b(k)` and
//!   norming constants.
//! * Trapezoid quadrature of residues on a circle.
//! * A split-step Fourier integrator for `u_t − 6uu_x + u_xxx = 0`.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::discretize::SampledPotential;
use crate::error::{Error, Result};
use crate::fragmentation::BlockPotential;
use crate::real::{imag_unit, is_finite_c, lit, on_imag_axis, to_f64, Real};

/// Samples of `φ` and `φ′` on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ODESolution<T> {
    pub grid: Vec<T>,
    pub phi: Vec<Complex<T>>,
    pub dphi: Vec<Complex<T>>,
}

impl<T: Real> ODESolution<T> {
    fn last(&self) -> (Complex<T>, Complex<T>) {
        (*self.phi.last().unwrap(), *self.dphi.last().unwrap())
    }
}

/// One RK4 step of `(φ, φ′)′ = (φ′, (V − k²)φ)` with constant `V`.
fn rk4_step<T: Real>(
    phi: Complex<T>,
    dphi: Complex<T>,
    coeff: Complex<T>,
    h: T,
) -> (Complex<T>, Complex<T>) {
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let two = lit::<T>(2.0);
    let (k1p, k1d) = (dphi, coeff * phi);
    let (p2, d2) = (phi + k1p * (half * h), dphi + k1d * (half * h));
    let (k2p, k2d) = (d2, coeff * p2);
    let (p3, d3) = (phi + k2p * (half * h), dphi + k2d * (half * h));
    let (k3p, k3d) = (d3, coeff * p3);
    let (p4, d4) = (phi + k3p * h, dphi + k3d * h);
    let (k4p, k4d) = (d4, coeff * p4);
    (
        phi + (k1p + k2p * two + k3p * two + k4p) * (h * sixth),
        dphi + (k1d + k2d * two + k3d * two + k4d) * (h * sixth),
    )
}

/// Integrates across the blocks, each split into `⌈hₙ/step⌉` equal RK4
/// steps, in the direction given by `leftward`.
fn integrate<T: Real>(
    k: Complex<T>,
    pot: &BlockPotential<T>,
    step: T,
    start: (Complex<T>, Complex<T>),
    leftward: bool,
) -> Result<ODESolution<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidArgument(format!("step = {step} must be positive")));
    }
    let (lo, hi) = pot.support();
    // blocks left to right
    let blocks: Vec<(T, T)> = pot
        .depth_roots()
        .iter()
        .zip(pot.widths())
        .rev()
        .map(|(&a, &h)| (a, h))
        .collect();
    let order: Vec<usize> = if leftward {
        (0..blocks.len()).rev().collect()
    } else {
        (0..blocks.len()).collect()
    };
    let k2 = k * k;
    let mut x = if leftward { hi } else { lo };
    let (mut phi, mut dphi) = start;
    let mut sol = ODESolution {
        grid: vec![x],
        phi: vec![phi],
        dphi: vec![dphi],
    };
    for j in order {
        let (a, h) = blocks[j];
        let n = (h / step).ceil().to_usize().unwrap_or(1).max(1);
        let dx = h / T::from_usize(n).unwrap();
        let signed = if leftward { -dx } else { dx };
        let coeff = Complex::new(-(a * a), T::zero()) - k2;
        for _ in 0..n {
            (phi, dphi) = rk4_step(phi, dphi, coeff, signed);
            x += signed;
            sol.grid.push(x);
            sol.phi.push(phi);
            sol.dphi.push(dphi);
        }
        if !(is_finite_c(phi) && is_finite_c(dphi)) {
            return Err(Error::BlowUp(format!(
                "Schrodinger integration overflowed near x = {x}"
            )));
        }
    }
    Ok(sol)
}

/// `φ` with `φ = e^{−ikx}` left of the support, integrated to its right
/// end `β`.
pub fn solve_from_left<T: Real>(
    k: Complex<T>,
    pot: &BlockPotential<T>,
    step: T,
) -> Result<ODESolution<T>> {
    let alpha = pot.support().0;
    let i = imag_unit::<T>();
    let e = (-i * k * alpha).exp();
    integrate(k, pot, step, (e, -i * k * e), false)
}

/// `(a(k), b(k))` from `φ(x) = a e^{−ikx} − b e^{ikx}` right of the support:
///
/// ```text
/// (a, b) = ½ [[e^{ikβ}, i e^{ikβ}/k], [−e^{−ikβ}, i e^{−ikβ}/k]] (φ(β), φ′(β))
/// ```
///
/// The matrix is applied at `β`, where the plane-wave form holds.
pub fn ab_by_integration<T: Real>(
    k: Complex<T>,
    pot: &BlockPotential<T>,
    step: T,
) -> Result<(Complex<T>, Complex<T>)> {
    if k.norm() == T::zero() {
        return Err(Error::SingularRetrieval);
    }
    let sol = solve_from_left(k, pot, step)?;
    let beta = pot.support().1;
    let (phi, dphi) = sol.last();
    let i = imag_unit::<T>();
    let half = lit::<T>(0.5);
    let ep = (i * k * beta).exp();
    let em = (-i * k * beta).exp();
    let a = (ep * phi + i * ep / k * dphi) * half;
    let b = (-em * phi + i * em / k * dphi) * half;
    Ok((a, b))
}

/// `c² = i b(iκ)/a′(iκ)` with `a′` by a central difference of step `eta`
/// along the imaginary axis.
pub fn norming_by_ab_integration<T: Real>(
    kappa: T,
    pot: &BlockPotential<T>,
    step: T,
    eta: T,
) -> Result<T> {
    let k = on_imag_axis(kappa);
    let half = on_imag_axis(eta * lit::<T>(0.5));
    let (_, b) = ab_by_integration(k, pot, step)?;
    let (a_plus, _) = ab_by_integration(k + half, pot, step)?;
    let (a_minus, _) = ab_by_integration(k - half, pot, step)?;
    let da = (a_plus - a_minus) / (imag_unit::<T>() * eta);
    if da.norm() == T::zero() {
        return Err(Error::VanishingDerivative {
            kappa: to_f64(kappa),
        });
    }
    let c2 = imag_unit::<T>() * b / da;
    if !(c2.re > T::zero()) {
        return Err(Error::InvalidNorming {
            kappa: to_f64(kappa),
            re: to_f64(c2.re),
            im: to_f64(c2.im),
        });
    }
    Ok(c2.re)
}

/// Which power of `‖φ‖` a norming constant is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Reading {
    /// `c² = ‖φ‖⁻²`.
    InverseSquare,
    /// `c² = ‖φ‖⁻¹`.
    InverseNorm,
}

/// Both readings of the `L²` norming constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Norming<T> {
    /// `‖φ‖²` including the analytic tails.
    pub norm_sq: T,
    pub inverse_square: T,
    pub inverse_norm: T,
    /// `|κφ − φ′|/|κφ + φ′|` at the left end: the share of the solution
    /// growing towards `−∞`. Zero at an exact bound state.
    pub leak: T,
}

impl<T: Real> L2Norming<T> {
    /// Reading closest to `reference` in relative terms.
    pub fn closest(&self, reference: T) -> L2Reading {
        let rel = |v: T| ((v - reference) / reference).abs();
        if rel(self.inverse_square) <= rel(self.inverse_norm) {
            L2Reading::InverseSquare
        } else {
            L2Reading::InverseNorm
        }
    }

    pub fn value(&self, reading: L2Reading) -> T {
        match reading {
            L2Reading::InverseSquare => self.inverse_square,
            L2Reading::InverseNorm => self.inverse_norm,
        }
    }
}

/// Largest [`L2Norming::leak`] accepted before `κ` is declared not to be a
/// bound state.
pub const L2_LEAK_LIMIT: f64 = 1e-2;

/// Norming constant from `‖φ‖`, `φ = e^{−κx}` right of the support,
/// integrated leftwards.
///
/// Tails are added in closed form: `e^{−2κβ}/(2κ)` on the right and
/// `φ(α)²/(2κ)` on the left. The backward integration amplifies the
/// component growing to the left, so the method is inaccurate; `leak`
/// reports how far the solution is from decaying.
pub fn norming_by_l2<T: Real>(kappa: T, pot: &BlockPotential<T>, step: T) -> Result<L2Norming<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    let (alpha, beta) = pot.support();
    let k = on_imag_axis(kappa);
    let e = (-kappa * beta).exp();
    let start = (Complex::new(e, T::zero()), Complex::new(-kappa * e, T::zero()));
    let sol = integrate(k, pot, step, start, true)?;
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let mut inner = T::zero();
    for j in 1..sol.grid.len() {
        // Simpson on each RK4 step using the derivative at the ends
        // (cubic Hermite), exact for the cubic the scheme tracks
        let h = (sol.grid[j - 1] - sol.grid[j]).abs();
        let (p0, p1) = (sol.phi[j - 1].re, sol.phi[j].re);
        let (d0, d1) = (sol.dphi[j - 1].re, sol.dphi[j].re);
        let s = if sol.grid[j] < sol.grid[j - 1] { -T::one() } else { T::one() };
        // φ at the midpoint from the Hermite cubic
        let mid = half * (p0 + p1) + s * h * (d0 - d1) / lit::<T>(8.0);
        inner += h / lit::<T>(6.0) * (p0 * p0 + lit::<T>(4.0) * mid * mid + p1 * p1);
    }
    let (pa, da) = sol.last();
    let (pa, da) = (pa.re, da.re);
    if !(pa.is_finite() && da.is_finite()) {
        return Err(Error::BlowUp(format!("kappa = {kappa}")));
    }
    let right_tail = (-two * kappa * beta).exp() / (two * kappa);
    let left_tail = pa * pa / (two * kappa);
    let norm_sq = inner + right_tail + left_tail;
    let denom = (kappa * pa + da).abs();
    let leak = if denom > T::zero() {
        (kappa * pa - da).abs() / denom
    } else {
        T::infinity()
    };
    if !(leak <= lit::<T>(L2_LEAK_LIMIT)) {
        return Err(Error::BlowUp(format!(
            "kappa = {kappa} is not a bound state: growing component {leak} at x = {alpha}"
        )));
    }
    Ok(L2Norming {
        norm_sq,
        inverse_square: norm_sq.recip(),
        inverse_norm: norm_sq.sqrt().recip(),
        leak,
    })
}

/// Trapezoid approximation of `(1/2πi)∮ f dk` on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourResidue<T> {
    pub value: Complex<T>,
    /// `|value(2n nodes) − value(n nodes)|`.
    pub doubling_change: T,
    /// Whether the doubling change is within `1e-10·max(1, |value|)`.
    pub converged: bool,
}

fn circle_sum<T: Real>(
    f: &impl Fn(Complex<T>) -> Complex<T>,
    center: Complex<T>,
    radius: T,
    nodes: usize,
) -> Complex<T> {
    let n = T::from_usize(nodes).unwrap();
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..nodes {
        let theta = lit::<T>(2.0) * T::PI() * T::from_usize(j).unwrap() / n;
        let e = Complex::from_polar(T::one(), theta);
        acc = acc + f(center + e * radius) * e;
    }
    acc * (radius / n)
}

/// Residue of `f` inside the circle, with a node-doubling check.
pub fn contour_residue<T: Real>(
    f: impl Fn(Complex<T>) -> Complex<T>,
    center: Complex<T>,
    radius: T,
    nodes: usize,
) -> Result<ContourResidue<T>> {
    if !(radius > T::zero()) || nodes < 2 {
        return Err(Error::InvalidArgument(
            "contour needs a positive radius and at least two nodes".into(),
        ));
    }
    let value = circle_sum(&f, center, radius, nodes);
    let doubled = circle_sum(&f, center, radius, 2 * nodes);
    if !(is_finite_c(value) && is_finite_c(doubled)) {
        return Err(Error::BlowUp("integrand not finite on the contour".into()));
    }
    let change = (doubled - value).norm();
    Ok(ContourResidue {
        value: doubled,
        doubling_change: change,
        converged: change <= lit::<T>(1e-10) * value.norm().max(T::one()),
    })
}

/// Output of [`split_step_kdv`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStepResult<T> {
    pub xs: Vec<T>,
    pub u: Vec<T>,
    pub steps: usize,
    /// `∫u dx` at the start (after projection) and at the end.
    pub mass: (T, T),
    /// `∫u² dx` at the start (after projection) and at the end.
    pub energy: (T, T),
}

/// Periodic domain used by [`split_step_kdv`] when none is given: the
/// support's centre with four times its width.
pub fn default_domain<T: Real>(u0: &SampledPotential<T>) -> (T, T) {
    let (lo, hi) = u0.support();
    let mid = lit::<T>(0.5) * (lo + hi);
    let w = hi - lo;
    (mid - lit::<T>(2.0) * w, mid + lit::<T>(2.0) * w)
}

struct Spectral {
    n: usize,
    wavenumbers: Vec<f64>,
    mask: Vec<f64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Spectral {
    fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        // 2/3 rule; the Nyquist mode is dropped too
        let cutoff = n as f64 / 3.0;
        let mask = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { n as f64 - j as f64 };
                if m < cutoff && !(n % 2 == 0 && j == n / 2) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            n,
            wavenumbers,
            mask,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn to_physical(&self, spec: &[Complex<f64>]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn to_spectral(&self, u: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Spectrum of `3(u²)_x`, dealiased.
    fn nonlinear(&self, spec: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let u = self.to_physical(spec);
        let sq: Vec<f64> = u.iter().map(|v| 3.0 * v * v).collect();
        let s = self.to_spectral(&sq);
        s.iter()
            .zip(&self.wavenumbers)
            .zip(&self.mask)
            .map(|((c, &k), &m)| Complex::new(0.0, k) * c * m)
            .collect()
    }
}

/// Strang splitting for `u_t = 3(u²)_x − u_xxx` on a periodic grid.
///
/// The linear flow is exact in Fourier space (`û ← e^{iξ³dt}û`); the
/// nonlinear flow takes one RK4 step per time step with the 2/3 rule.
/// The initial samples are projected onto the dealiased modes, so the
/// reported invariants refer to the projected data. Computed in `f64`.
pub fn split_step_kdv<T: Real>(
    u0: &SampledPotential<T>,
    t_end: T,
    dt: T,
    grid: usize,
    domain: Option<(T, T)>,
) -> Result<SplitStepResult<T>> {
    let (lo, hi) = domain.unwrap_or_else(|| default_domain(u0));
    let (lo, hi) = (to_f64(lo), to_f64(hi));
    let (t_end, dt) = (to_f64(t_end), to_f64(dt));
    if grid < 16 || !grid.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid {grid} must be a power of two >= 16"
        )));
    }
    if !(hi > lo) || !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(
            "need a nonempty domain, dt > 0 and t_end >= 0".into(),
        ));
    }
    let length = hi - lo;
    let h = length / grid as f64;
    let xs: Vec<f64> = (0..grid).map(|j| lo + j as f64 * h).collect();
    let sp = Spectral::new(grid, length);
    let mut spec = sp.to_spectral(&xs.iter().map(|&x| to_f64(u0.eval(lit(x)))).collect::<Vec<_>>());
    for (c, m) in spec.iter_mut().zip(&sp.mask) {
        *c *= m;
    }
    let invariants = |spec: &[Complex<f64>]| {
        let u = sp.to_physical(spec);
        (
            u.iter().sum::<f64>() * h,
            u.iter().map(|v| v * v).sum::<f64>() * h,
        )
    };
    let start = invariants(&spec);

    let steps = (t_end / dt).round() as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let half_linear: Vec<Complex<f64>> = sp
        .wavenumbers
        .iter()
        .map(|&k| Complex::from_polar(1.0, k * k * k * dt * 0.5))
        .collect();
    let apply = |spec: &mut [Complex<f64>], phase: &[Complex<f64>]| {
        for (c, p) in spec.iter_mut().zip(phase) {
            *c *= p;
        }
    };
    for step in 0..steps {
        apply(&mut spec, &half_linear);
        let k1 = sp.nonlinear(&spec);
        let s2: Vec<_> = spec.iter().zip(&k1).map(|(s, k)| s + k * (0.5 * dt)).collect();
        let k2 = sp.nonlinear(&s2);
        let s3: Vec<_> = spec.iter().zip(&k2).map(|(s, k)| s + k * (0.5 * dt)).collect();
        let k3 = sp.nonlinear(&s3);
        let s4: Vec<_> = spec.iter().zip(&k3).map(|(s, k)| s + k * dt).collect();
        let k4 = sp.nonlinear(&s4);
        for j in 0..grid {
            spec[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        apply(&mut spec, &half_linear);
        if spec.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp(format!(
                "split-step solution not finite at t = {} (step {} of {steps}, dt = {dt}); \
                 reduce dt or enlarge the grid",
                (step + 1) as f64 * dt,
                step + 1
            )));
        }
    }
    let end = invariants(&spec);
    let u = sp.to_physical(&spec);
    Ok(SplitStepResult {
        xs: xs.into_iter().map(lit).collect(),
        u: u.into_iter().map(lit).collect(),
        steps,
        mass: (lit(start.0), lit(end.0)),
        energy: (lit(start.1), lit(end.1)),
    })
}

/// Local minimum of `u` nearest to each guess within `window`, refined by a
/// parabola through the three lowest samples. Returns `(x, u)` pairs.
pub fn locate_minima<T: Real>(xs: &[T], u: &[T], guesses: &[T], window: T) -> Vec<Option<(T, T)>> {
    guesses
        .iter()
        .map(|&g| {
            let mut best: Option<usize> = None;
            for j in 1..xs.len().saturating_sub(1) {
                if (xs[j] - g).abs() > window {
                    continue;
                }
                if u[j] <= u[j - 1] && u[j] <= u[j + 1] && best.is_none_or(|b| u[j] < u[b]) {
                    best = Some(j);
                }
            }
            best.map(|j| {
                let (y0, y1, y2) = (u[j - 1], u[j], u[j + 1]);
                let h = xs[j + 1] - xs[j];
                let denom = y0 - lit::<T>(2.0) * y1 + y2;
                if denom > T::zero() {
                    let off = lit::<T>(0.5) * (y0 - y2) / denom;
                    let depth = y1 - lit::<T>(0.25) * (y0 - y2) * off;
                    (xs[j] + off * h, depth)
                } else {
                    (xs[j], y1)
                }
            })
        })
        .collect()
}
