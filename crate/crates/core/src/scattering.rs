//! Closed-form scattering quantities of a single nonpositive block well.
//!
//! A block of depth root `a` and width `h` whose right edge sits at the
//! origin has
//!
//! ```text
//! R = ω²(1 − ξ)/(ξ − ω⁴),   L = R·e^{−iah(ω − 1/ω)},   T = (1 − ω⁴)e^{iah/ω}/(ξ − ω⁴)
//! ω = k/a + √((k/a)² + 1),  ξ = e^{+iah(ω + 1/ω)}
//! ```
//!
//! The sign in the exponent of `ξ` is fixed to `+`: it is the only choice
//! for which the poles of `R` in the upper half plane coincide with the
//! bound states of the well and `|R|² + |T|² = 1` on the real axis. With
//! the opposite sign the same expression evaluates `R(−k)` instead.
//!
//! The square root is taken on the branch with its cut on the imaginary
//! segment `[−ia, ia]` and `√((k/a)² + 1) ~ k/a` at infinity. Points on the
//! cut itself are evaluated as the limit from `Re k > 0`; `R`, `L` and `T`
//! are continuous across the cut, so the side does not matter for them as
//! long as the tilde quantities are derived from the same `ω`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{imag_unit, lit, to_f64, Real};

/// A well `V = −a²` on `[right_edge − width, right_edge]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockWell<T> {
    depth_root: T,
    width: T,
    right_edge: T,
}

impl<T: Real> BlockWell<T> {
    pub fn new(depth_root: T, width: T, right_edge: T) -> Result<Self> {
        if !(depth_root.is_finite() && depth_root >= T::zero()) {
            return Err(Error::InvalidBlock(format!(
                "depth root must be finite and nonnegative, got {depth_root}"
            )));
        }
        if !(width.is_finite() && width > T::zero()) {
            return Err(Error::InvalidBlock(format!(
                "width must be finite and positive, got {width}"
            )));
        }
        if !(right_edge.is_finite() && right_edge <= T::zero()) {
            return Err(Error::InvalidBlock(format!(
                "right edge must be finite and <= 0, got {right_edge}"
            )));
        }
        Ok(Self {
            depth_root,
            width,
            right_edge,
        })
    }

    /// Block on `[−width, 0]`.
    pub fn at_origin(depth_root: T, width: T) -> Result<Self> {
        Self::new(depth_root, width, T::zero())
    }

    pub fn depth_root(&self) -> T {
        self.depth_root
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn right_edge(&self) -> T {
        self.right_edge
    }

    pub fn left_edge(&self) -> T {
        self.right_edge - self.width
    }

    /// Potential value inside the block, `−a²`.
    pub fn depth(&self) -> T {
        -(self.depth_root * self.depth_root)
    }

    pub fn is_transparent(&self) -> bool {
        self.depth_root == T::zero()
    }

    /// Same block moved so that its right edge is at the origin.
    pub fn to_origin(&self) -> Self {
        Self {
            right_edge: T::zero(),
            ..*self
        }
    }
}

/// `ω(k)`, `1/ω(k)` and `ξ(k)` for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedAux<T> {
    pub omega: Complex<T>,
    pub inv_omega: Complex<T>,
    pub xi: Complex<T>,
}

/// `√(w² + 1)` on the branch cut along `[−i, i]`, asymptotic to `w`.
///
/// The function is odd in `w`. On the cut the limit from `Re w > 0` is
/// returned.
pub fn branch_sqrt<T: Real>(w: Complex<T>) -> Complex<T> {
    let one = T::one();
    if w.re > T::zero() {
        (w * w + one).sqrt()
    } else if w.re < T::zero() {
        -(w * w + one).sqrt()
    } else {
        let y = w.im;
        if y.abs() < one {
            Complex::new(((one - y) * (one + y)).sqrt(), T::zero())
        } else {
            let r = ((y - one) * (y + one)).sqrt();
            Complex::new(T::zero(), r * y.signum())
        }
    }
}

/// `ω = k/a + √((k/a)² + 1)` and `ξ = e^{iah(ω + 1/ω)}`.
///
/// Errors with [`Error::TransparentBlock`] when `a = 0`; callers treat such
/// blocks as the identity.
pub fn omega_xi<T: Real>(k: Complex<T>, well: &BlockWell<T>) -> Result<BranchedAux<T>> {
    let a = well.depth_root;
    if a == T::zero() {
        return Err(Error::TransparentBlock);
    }
    Ok(aux(k, a, well.width))
}

fn aux<T: Real>(k: Complex<T>, a: T, h: T) -> BranchedAux<T> {
    let w = k / a;
    let omega = w + branch_sqrt(w);
    let inv_omega = omega.inv();
    let xi = (imag_unit::<T>() * (omega + inv_omega) * (a * h)).exp();
    BranchedAux {
        omega,
        inv_omega,
        xi,
    }
}

/// Scattering coefficients of one block at `k`, with `R̃(k) = R(−k)` and
/// `T̃(k) = T(−k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringEvaluation<T> {
    pub k: Complex<T>,
    pub r: Complex<T>,
    pub l: Complex<T>,
    pub t: Complex<T>,
    pub r_tilde: Complex<T>,
    pub t_tilde: Complex<T>,
}

fn near_zero<T: Real>(den: Complex<T>, scale: T) -> bool {
    den.norm() <= lit::<T>(16.0) * T::epsilon() * scale.max(T::one())
}

/// Closed-form `R`, `L`, `T`, `R̃`, `T̃` of a single block at its position.
pub fn block_scattering<T: Real>(
    k: Complex<T>,
    well: &BlockWell<T>,
) -> Result<ScatteringEvaluation<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    if well.is_transparent() {
        return Ok(ScatteringEvaluation {
            k,
            r: zero,
            l: zero,
            t: one,
            r_tilde: zero,
            t_tilde: one,
        });
    }
    let a = well.depth_root;
    let h = well.width;
    let BranchedAux {
        omega,
        inv_omega,
        xi,
    } = aux(k, a, h);
    let i = imag_unit::<T>();
    let w2 = omega * omega;
    let w4 = w2 * w2;
    let den = xi - w4;
    let den_tilde = xi * w4 - one;
    if near_zero(den, xi.norm().max(w4.norm())) || near_zero(den_tilde, (xi * w4).norm()) {
        return Err(pole(1, k));
    }
    let num = w2 * (one - xi);
    let r0 = num / den;
    let l0 = r0 * (-i * (omega - inv_omega) * (a * h)).exp();
    let t0 = (one - w4) * (i * inv_omega * (a * h)).exp() / den;
    let r0_tilde = num / den_tilde;
    let t0_tilde = xi * (one - w4) * (-i * inv_omega * (a * h)).exp() / (one - xi * w4);

    let p = well.right_edge;
    let two = lit::<T>(2.0);
    let phase = (i * k * (two * p)).exp();
    Ok(ScatteringEvaluation {
        k,
        r: r0 / phase,
        l: l0 * phase,
        t: t0,
        r_tilde: r0_tilde * phase,
        t_tilde: t0_tilde,
    })
}

pub(crate) fn pole<T: Real>(block: usize, k: Complex<T>) -> Error {
    Error::BlockPole {
        block,
        re: to_f64(k.re),
        im: to_f64(k.im),
    }
}

/// `R⁰(k)`, `R̃⁰(k)` of a block moved to the origin, optionally with their
/// `k`-derivatives.
///
/// `ratio = R⁰/R̃⁰ = (ξω⁴ − 1)/(ξ − ω⁴)` and `inv_r = 1/R⁰` are evaluated
/// directly, so they stay finite where `R⁰` and `R̃⁰` vanish together and
/// at the poles of `R⁰` respectively. `r` and `r_tilde` are left non-finite
/// at their poles; callers decide whether that is an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair<T> {
    pub r: Complex<T>,
    pub r_tilde: Complex<T>,
    pub ratio: Complex<T>,
    pub inv_r: Complex<T>,
    pub dr: Complex<T>,
    pub dr_tilde: Complex<T>,
    /// `d(1/R⁰)/dk`, finite at the poles of `R⁰`.
    pub dinv_r: Complex<T>,
}

/// Origin-shifted reflection pair with analytic derivatives.
///
/// Uses `dω/dk = ω/(a√((k/a)²+1))` and `dξ/dk = 2ihξ·(k/a)/√((k/a)²+1)`.
/// `block` only labels the error raised at a branch point.
pub fn origin_reflection_pair<T: Real>(
    k: Complex<T>,
    depth_root: T,
    width: T,
    with_derivative: bool,
    block: usize,
) -> Result<ReflectionPair<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    if depth_root == T::zero() {
        let inf = Complex::new(T::infinity(), T::zero());
        return Ok(ReflectionPair {
            r: zero,
            r_tilde: zero,
            ratio: Complex::new(T::nan(), T::nan()),
            inv_r: inf,
            dr: zero,
            dr_tilde: zero,
            dinv_r: zero,
        });
    }
    let a = depth_root;
    let h = width;
    let one = Complex::new(T::one(), T::zero());
    let w = k / a;
    let s = branch_sqrt(w);
    let omega = w + s;
    let xi = (imag_unit::<T>() * (omega + omega.inv()) * (a * h)).exp();
    let w2 = omega * omega;
    let w4 = w2 * w2;
    let num = w2 * (one - xi);
    let den = xi - w4;
    let den_tilde = xi * w4 - one;
    let r = num / den;
    let r_tilde = num / den_tilde;
    let ratio = den_tilde / den;
    let inv_r = den / num;
    if !with_derivative {
        return Ok(ReflectionPair {
            r,
            r_tilde,
            ratio,
            inv_r,
            dr: zero,
            dr_tilde: zero,
            dinv_r: zero,
        });
    }
    if near_zero(s, T::one()) {
        // k = ±ia: branch point, derivative of ω is unbounded.
        return Err(pole(block, k));
    }
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let d_omega = omega / (s * a);
    let d_xi = imag_unit::<T>() * xi * (w / s) * (two * h);
    let d_num = omega * d_omega * (one - xi) * two - w2 * d_xi;
    let w3 = w2 * omega;
    let d_den = d_xi - w3 * d_omega * four;
    let d_den_tilde = d_xi * w4 + xi * w3 * d_omega * four;
    let dr = (d_num * den - num * d_den) / (den * den);
    let dr_tilde = (d_num * den_tilde - num * d_den_tilde) / (den_tilde * den_tilde);
    let dinv_r = (d_den * num - den * d_num) / (num * num);
    Ok(ReflectionPair {
        r,
        r_tilde,
        ratio,
        inv_r,
        dr,
        dr_tilde,
        dinv_r,
    })
}

/// Entries `a(k) = 1/T`, `b(k) = −R/T` and their reflections `a(−k)`,
/// `b(−k)` for one block at its position.
///
/// These are entire in `k` apart from the branch points `k = ±ia`, so they
/// stay finite at the block's own bound states.
pub(crate) fn transition_entries<T: Real>(
    k: Complex<T>,
    well: &BlockWell<T>,
    block: usize,
) -> Result<[[Complex<T>; 2]; 2]> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    if well.is_transparent() {
        return Ok([[one, zero], [zero, one]]);
    }
    let a = well.depth_root;
    let h = well.width;
    let BranchedAux {
        omega,
        inv_omega,
        xi,
    } = aux(k, a, h);
    let i = imag_unit::<T>();
    let w2 = omega * omega;
    let w4 = w2 * w2;
    let one_minus_w4 = one - w4;
    if near_zero(one_minus_w4, w4.norm()) {
        return Err(pole(block, k));
    }
    let e_plus = (i * inv_omega * (a * h)).exp();
    let e_minus = e_plus.inv();
    let two = lit::<T>(2.0);
    let shift = (i * k * (two * well.right_edge)).exp();
    let a_k = (xi - w4) * e_minus / one_minus_w4;
    let b_k = -(w2 * (one - xi) * e_minus / one_minus_w4) / shift;
    let a_mk = (one - xi * w4) * e_plus / (xi * one_minus_w4);
    let b_mk = w2 * (one - xi) * e_plus / (xi * one_minus_w4) * shift;
    Ok([[a_k, b_k], [b_mk, a_mk]])
}

fn bound_state_residual<T: Real>(y: T, ah: T, n: usize) -> T {
    let one = T::one();
    let s = ((one - y) * (one + y)).sqrt();
    let pi = T::PI();
    ah / pi * s - lit::<T>(2.0) / pi * y.asin() - T::from_usize(n - 1).unwrap()
}

/// Number of bound states of one block, `⌈ah/π⌉`.
pub fn block_bound_state_count<T: Real>(well: &BlockWell<T>) -> usize {
    if well.is_transparent() {
        return 0;
    }
    let ratio = well.depth_root * well.width / T::PI();
    ratio.ceil().to_usize().unwrap_or(0).max(1)
}

/// All bound states `κ₁ > … > κ_K` of one block.
///
/// Each `κ = a·y` solves `(ah/π)√(1−y²) − (2/π)arcsin y = n − 1`; the left
/// side is strictly decreasing in `y`, so bisection on `(0, 1)` brackets
/// every root and a Newton step polishes it.
pub fn block_bound_states<T: Real>(well: &BlockWell<T>) -> Vec<T> {
    let count = block_bound_state_count(well);
    let a = well.depth_root;
    let ah = a * well.width;
    let one = T::one();
    let half = lit::<T>(0.5);
    let pi = T::PI();
    (1..=count)
        .map(|n| {
            let (mut lo, mut hi) = (T::zero(), one);
            for _ in 0..200 {
                let mid = half * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if bound_state_residual(mid, ah, n) > T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut y = half * (lo + hi);
            for _ in 0..3 {
                let s = ((one - y) * (one + y)).sqrt();
                if s <= T::zero() {
                    break;
                }
                let f = bound_state_residual(y, ah, n);
                let df = -(ah / pi) * (y / s) - lit::<T>(2.0) / (pi * s);
                let next = y - f / df;
                if next > T::zero()
                    && next < one
                    && bound_state_residual(next, ah, n).abs() <= f.abs()
                {
                    y = next;
                } else {
                    break;
                }
            }
            a * y
        })
        .collect()
}

/// Left norming constants `c² = 2κ(1 − (κ/a)²)/(2 + hκ)` of one block,
/// scaled by `e^{2κ·right_edge}` for a block away from the origin.
pub fn block_norming_constants<T: Real>(well: &BlockWell<T>, kappas: &[T]) -> Result<Vec<T>> {
    let a = well.depth_root;
    let one = T::one();
    let two = lit::<T>(2.0);
    kappas
        .iter()
        .map(|&kappa| {
            if !(kappa > T::zero() && kappa < a) {
                return Err(Error::InvalidBoundState {
                    kappa: to_f64(kappa),
                    depth_root: to_f64(a),
                });
            }
            let y = kappa / a;
            let c2 = two * kappa * ((one - y) * (one + y)) / (two + well.width * kappa);
            Ok(c2 * (two * kappa * well.right_edge).exp())
        })
        .collect()
}
