//! Layer stripping over a potential made of contiguous blocks.
//!
//! Blocks are numbered from the right: block 1 occupies `[−b₁, 0]`, block
//! `n` occupies `[−bₙ, −bₙ₋₁]`. Everything here works in these internal
//! coordinates; [`BlockPotential::origin`] records where the right end of
//! the support sits physically and is only used to translate norming
//! constants and reflection coefficients back.
//!
//! Three independent routes are provided:
//!
//! * [`compose_lambda`]: the product `Λ = Λ_N ⋯ Λ₁` of transition matrices.
//! * [`recursion_step`]: nonlinear recursions for `R₁…ₙ`, `Aₙ` and the
//!   Möbius recursion for `Bₙ = L₁…ₙ e^{2ikbₙ}`.
//! * [`pq_propagate`]: the linear `(p, q)` recurrence with
//!   `Bₙ = −(R⁰ₙ/R̃⁰ₙ)(pₙ/qₙ)`, optionally with `k`-derivatives.
//!
//! Zero-depth blocks are transparent. They only rotate the phases of `A`
//! and `B` by `e^{2ikh}`, which the `(p, q)` recurrence absorbs as a
//! diagonal factor on `p`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{imag_unit, is_finite_c, lit, on_imag_axis, to_f64, Real};
use crate::scattering::{origin_reflection_pair, pole, transition_entries, BlockWell};

/// Potential built from `N` contiguous nonpositive blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPotential<T> {
    depth_roots: Vec<T>,
    widths: Vec<T>,
    origin: T,
}

impl<T: Real> BlockPotential<T> {
    /// Blocks listed right to left: `depth_roots[0]` is the block at the
    /// origin. `origin` is the physical coordinate of the right end.
    pub fn new(depth_roots: Vec<T>, widths: Vec<T>, origin: T) -> Result<Self> {
        if depth_roots.is_empty() {
            return Err(Error::InvalidPotential("no blocks".into()));
        }
        if depth_roots.len() != widths.len() {
            return Err(Error::InvalidPotential(format!(
                "{} depth roots but {} widths",
                depth_roots.len(),
                widths.len()
            )));
        }
        for (n, (&a, &h)) in depth_roots.iter().zip(&widths).enumerate() {
            if !(a.is_finite() && a >= T::zero()) {
                return Err(Error::InvalidPotential(format!(
                    "block {} has invalid depth root {a}",
                    n + 1
                )));
            }
            if !(h.is_finite() && h > T::zero()) {
                return Err(Error::InvalidPotential(format!(
                    "block {} has invalid width {h}",
                    n + 1
                )));
            }
        }
        if !origin.is_finite() {
            return Err(Error::InvalidPotential("origin must be finite".into()));
        }
        Ok(Self {
            depth_roots,
            widths,
            origin,
        })
    }

    /// Single well `−a²` on `[−h, 0]`.
    pub fn single(depth_root: T, width: T) -> Result<Self> {
        Self::new(vec![depth_root], vec![width], T::zero())
    }

    /// Contiguous wells in right-to-left order, the first ending at 0.
    pub fn from_wells(wells: &[BlockWell<T>]) -> Result<Self> {
        let Some(first) = wells.first() else {
            return Err(Error::InvalidPotential("no blocks".into()));
        };
        let tol = lit::<T>(1e3) * T::epsilon();
        if first.right_edge().abs() > tol {
            return Err(Error::InvalidPotential(
                "first block must end at the origin".into(),
            ));
        }
        for (n, pair) in wells.windows(2).enumerate() {
            let gap = pair[1].right_edge() - pair[0].left_edge();
            if gap.abs() > tol * (T::one() + pair[0].left_edge().abs()) {
                return Err(Error::InvalidPotential(format!(
                    "blocks {} and {} are not contiguous",
                    n + 1,
                    n + 2
                )));
            }
        }
        Self::new(
            wells.iter().map(|w| w.depth_root()).collect(),
            wells.iter().map(|w| w.width()).collect(),
            T::zero(),
        )
    }

    /// Uniform partition of `[left, right]` with potential values (`≤ 0`)
    /// listed left to right.
    pub fn uniform(left: T, right: T, values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPotential("no blocks".into()));
        }
        if !(right > left) {
            return Err(Error::InvalidPotential(format!(
                "empty support [{left}, {right}]"
            )));
        }
        let n = T::from_usize(values.len()).unwrap();
        let h = (right - left) / n;
        let mut roots = Vec::with_capacity(values.len());
        for (j, &v) in values.iter().enumerate().rev() {
            if !(v <= T::zero()) {
                return Err(Error::InvalidPotential(format!(
                    "value {v} at cell {j} is positive"
                )));
            }
            roots.push((-v).sqrt());
        }
        Self::new(roots, vec![h; values.len()], right)
    }

    /// Moves the support so its right end sits at `origin`.
    pub fn with_origin(mut self, origin: T) -> Self {
        self.origin = origin;
        self
    }

    pub fn n_blocks(&self) -> usize {
        self.depth_roots.len()
    }

    /// Depth roots `aₙ`, right to left.
    pub fn depth_roots(&self) -> &[T] {
        &self.depth_roots
    }

    /// Widths `hₙ`, right to left.
    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn origin(&self) -> T {
        self.origin
    }

    /// `b₀ = 0, b₁, …, b_N`.
    pub fn grid(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.widths.len() + 1);
        let mut b = T::zero();
        out.push(b);
        for &h in &self.widths {
            b += h;
            out.push(b);
        }
        out
    }

    pub fn total_width(&self) -> T {
        self.widths.iter().copied().sum()
    }

    /// Physical support `[origin − b_N, origin]`.
    pub fn support(&self) -> (T, T) {
        (self.origin - self.total_width(), self.origin)
    }

    /// `n`-th block (0-based, from the right) in internal coordinates.
    pub fn well(&self, n: usize) -> BlockWell<T> {
        let right: T = self.widths[..n].iter().copied().sum();
        BlockWell::new(self.depth_roots[n], self.widths[n], -right)
            .expect("validated on construction")
    }

    pub fn wells(&self) -> Vec<BlockWell<T>> {
        let mut right = T::zero();
        self.depth_roots
            .iter()
            .zip(&self.widths)
            .map(|(&a, &h)| {
                let w = BlockWell::new(a, h, -right).expect("validated on construction");
                right += h;
                w
            })
            .collect()
    }

    pub fn max_depth_root(&self) -> T {
        self.depth_roots
            .iter()
            .copied()
            .fold(T::zero(), |m, a| m.max(a))
    }

    pub fn is_free(&self) -> bool {
        self.depth_roots.iter().all(|&a| a == T::zero())
    }

    /// Potential at physical `x`; each block covers `[left, right)`.
    pub fn value_at(&self, x: T) -> T {
        let mut right = self.origin;
        for (&a, &h) in self.depth_roots.iter().zip(&self.widths) {
            let left = right - h;
            if x >= left && x < right {
                return -(a * a);
            }
            right = left;
        }
        T::zero()
    }

    /// Potential values left to right.
    pub fn values_left_to_right(&self) -> Vec<T> {
        self.depth_roots.iter().rev().map(|&a| -(a * a)).collect()
    }

    /// Splits every block into `parts` equal sub-blocks.
    pub fn refine(&self, parts: usize) -> Self {
        let parts = parts.max(1);
        let p = T::from_usize(parts).unwrap();
        let mut roots = Vec::with_capacity(self.n_blocks() * parts);
        let mut widths = Vec::with_capacity(self.n_blocks() * parts);
        for (&a, &h) in self.depth_roots.iter().zip(&self.widths) {
            for _ in 0..parts {
                roots.push(a);
                widths.push(h / p);
            }
        }
        Self {
            depth_roots: roots,
            widths,
            origin: self.origin,
        }
    }

    /// Converts an internal reflection coefficient `R(k)` to the physical
    /// position of the support.
    pub fn physical_reflection(&self, k: Complex<T>, r: Complex<T>) -> Complex<T> {
        let two = lit::<T>(2.0);
        r * (-imag_unit::<T>() * k * (two * self.origin)).exp()
    }

    /// Factor `e^{2κ·origin}` turning an internal norming constant into the
    /// physical one.
    pub fn norming_shift(&self, kappa: T) -> T {
        (lit::<T>(2.0) * kappa * self.origin).exp()
    }
}

/// `Λ = [[1/T, −R/T], [L/T, 1/T̃]] = [[a, b], [b̃, ã]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix<T> {
    pub entries: [[Complex<T>; 2]; 2],
}

impl<T: Real> TransitionMatrix<T> {
    pub fn identity() -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        Self {
            entries: [[one, zero], [zero, one]],
        }
    }

    /// `a = 1/T`.
    pub fn a(&self) -> Complex<T> {
        self.entries[0][0]
    }

    /// `b = −R/T`.
    pub fn b(&self) -> Complex<T> {
        self.entries[0][1]
    }

    pub fn reflection(&self) -> Complex<T> {
        -self.b() / self.a()
    }

    pub fn transmission(&self) -> Complex<T> {
        self.a().inv()
    }

    pub fn left_reflection(&self) -> Complex<T> {
        self.entries[1][0] / self.a()
    }

    pub fn det(&self) -> Complex<T> {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { entries: out }
    }
}

/// Transition matrix of one block at its position.
pub fn block_transition<T: Real>(
    k: Complex<T>,
    well: &BlockWell<T>,
) -> Result<TransitionMatrix<T>> {
    Ok(TransitionMatrix {
        entries: transition_entries(k, well, 1)?,
    })
}

/// `Λ = Λ_N ⋯ Λ₁` for the whole potential (internal coordinates).
///
/// The factorization is an identity on the real axis; every entry is
/// analytic, so the same product continues `a(k)` and `b(k)` into ℂ.
pub fn compose_lambda<T: Real>(k: Complex<T>, pot: &BlockPotential<T>) -> Result<TransitionMatrix<T>> {
    let mut acc = TransitionMatrix::identity();
    for (n, well) in pot.wells().iter().enumerate() {
        if well.is_transparent() {
            continue;
        }
        let entries = transition_entries(k, well, n + 1)?;
        acc = TransitionMatrix { entries }.mul(&acc);
    }
    Ok(acc)
}

/// Reflection data of the first `level` blocks.
///
/// `r = R₁…ₙ`, `a = Aₙ = (L₁…ₙ/R₁…ₙ)e^{2ikbₙ}`, `b = Bₙ = Aₙ R₁…ₙ`; the
/// tilde fields hold the same quantities at `−k`, which the `R`/`A`
/// recursions need. Before the first nonzero block nothing reflects and
/// `started` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionState<T> {
    pub r: Complex<T>,
    pub r_tilde: Complex<T>,
    pub a: Complex<T>,
    pub a_tilde: Complex<T>,
    pub b: Complex<T>,
    pub level: usize,
    pub position: T,
    pub started: bool,
}

impl<T: Real> RecursionState<T> {
    pub fn empty() -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        Self {
            r: zero,
            r_tilde: zero,
            a: one,
            a_tilde: one,
            b: zero,
            level: 0,
            position: T::zero(),
            started: false,
        }
    }
}

fn recursion_pole<T: Real>(level: usize, k: Complex<T>) -> Error {
    Error::RecursionPole {
        level,
        re: to_f64(k.re),
        im: to_f64(k.im),
    }
}

/// Adds the next block (to the left) to the recursion state.
///
/// Only the depth root and width of `next_block` are used; its position is
/// the state's running `bₙ`.
pub fn recursion_step<T: Real>(
    state: &RecursionState<T>,
    k: Complex<T>,
    next_block: &BlockWell<T>,
) -> Result<RecursionState<T>> {
    let i = imag_unit::<T>();
    let two = lit::<T>(2.0);
    let h = next_block.width();
    let level = state.level + 1;
    let position = state.position + h;
    if next_block.is_transparent() {
        if !state.started {
            return Ok(RecursionState {
                level,
                position,
                ..*state
            });
        }
        let phase = (i * k * (two * h)).exp();
        return Ok(RecursionState {
            a: state.a * phase,
            a_tilde: state.a_tilde / phase,
            b: state.b * phase,
            level,
            position,
            ..*state
        });
    }
    let pair = origin_reflection_pair(k, next_block.depth_root(), h, false, level)?;
    if !(is_finite_c(pair.r) && is_finite_c(pair.r_tilde)) {
        return Err(pole(level, k));
    }
    let (r0, r0t) = (pair.r, pair.r_tilde);
    let next = if !state.started {
        let shift = (i * k * (two * state.position)).exp();
        RecursionState {
            r: r0 * shift,
            r_tilde: r0t / shift,
            a: shift.inv(),
            a_tilde: shift,
            b: r0,
            level,
            position,
            started: true,
        }
    } else {
        let one = Complex::new(T::one(), T::zero());
        let RecursionState {
            r,
            r_tilde: rt,
            a,
            a_tilde: at,
            b,
            ..
        } = *state;
        let new_r = -(r / rt) * (a * r0 - rt) / (one - a * r0 * r);
        let new_rt = -(rt / r) * (at * r0t - r) / (one - at * r0t * rt);
        let new_a = pair.ratio * (rt / r) * (a * r - r0t) / (a * r0 - rt);
        let new_at = (r / (pair.ratio * rt)) * (at * rt - r0) / (at * r0t - r);
        let new_b = -pair.ratio * (b - r0t) / (one - r0 * b);
        RecursionState {
            r: new_r,
            r_tilde: new_rt,
            a: new_a,
            a_tilde: new_at,
            b: new_b,
            level,
            position,
            started: true,
        }
    };
    let ok = [next.r, next.r_tilde, next.a, next.a_tilde, next.b]
        .into_iter()
        .all(is_finite_c);
    if !ok {
        return Err(recursion_pole(level, k));
    }
    Ok(next)
}

/// Runs [`recursion_step`] across all blocks.
pub fn run_recursion<T: Real>(k: Complex<T>, pot: &BlockPotential<T>) -> Result<RecursionState<T>> {
    pot.wells()
        .iter()
        .try_fold(RecursionState::empty(), |s, w| recursion_step(&s, k, w))
}

/// `L₁…ₙ = Bₙ e^{−2ikbₙ}`.
pub fn left_reflection<T: Real>(state: &RecursionState<T>, k: Complex<T>) -> Complex<T> {
    let two = lit::<T>(2.0);
    state.b * (-imag_unit::<T>() * k * (two * state.position)).exp()
}

fn last_nonzero<T: Real>(pot: &BlockPotential<T>) -> Option<usize> {
    pot.depth_roots().iter().rposition(|&a| a > T::zero())
}

/// `1/R₁…_N(k)` and `1/B_N(k)`, with the last nonzero block folded in
/// reciprocal form so both are finite at the bound states.
pub fn reciprocal_targets<T: Real>(
    k: Complex<T>,
    pot: &BlockPotential<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    let Some(last) = last_nonzero(pot) else {
        let inf = Complex::new(T::infinity(), T::zero());
        return Ok((inf, inf));
    };
    let wells = pot.wells();
    let mut state = RecursionState::empty();
    for w in &wells[..last] {
        state = recursion_step(&state, k, w)?;
    }
    let i = imag_unit::<T>();
    let two = lit::<T>(2.0);
    let one = Complex::new(T::one(), T::zero());
    let well = &wells[last];
    let pair = origin_reflection_pair(k, well.depth_root(), well.width(), false, last + 1)?;
    let (inv_r, mut inv_b) = if !state.started {
        let shift = (i * k * (two * state.position)).exp();
        (pair.inv_r / shift, pair.inv_r)
    } else {
        let (r0, r0t) = (pair.r, pair.r_tilde);
        if !(is_finite_c(r0) && is_finite_c(r0t)) {
            return Err(pole(last + 1, k));
        }
        let RecursionState {
            r, r_tilde: rt, a, b, ..
        } = state;
        let inv_r = -(rt / r) * (one - a * r0 * r) / (a * r0 - rt);
        let inv_b = -pair.ratio.inv() * (one - r0 * b) / (b - r0t);
        (inv_r, inv_b)
    };
    let trailing: T = wells[last + 1..].iter().map(|w| w.width()).sum();
    if trailing > T::zero() {
        inv_b = inv_b * (-i * k * (two * trailing)).exp();
    }
    if !(is_finite_c(inv_r) && is_finite_c(inv_b)) {
        return Err(recursion_pole(last + 1, k));
    }
    Ok((inv_r, inv_b))
}

/// `A_N(k)`; finite at the bound states, where `R₁…_N` itself has a pole.
pub fn amplitude_ratio<T: Real>(k: Complex<T>, pot: &BlockPotential<T>) -> Result<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    let Some(last) = last_nonzero(pot) else {
        return Ok(one);
    };
    let wells = pot.wells();
    let mut state = RecursionState::empty();
    for w in &wells[..last] {
        state = recursion_step(&state, k, w)?;
    }
    let well = &wells[last];
    let mut a_n = if !state.started {
        (-imag_unit::<T>() * k * (lit::<T>(2.0) * state.position)).exp()
    } else {
        let pair = origin_reflection_pair(k, well.depth_root(), well.width(), false, last + 1)?;
        let (r0, r0t) = (pair.r, pair.r_tilde);
        let RecursionState {
            r, r_tilde: rt, a, ..
        } = state;
        pair.ratio * (rt / r) * (a * r - r0t) / (a * r0 - rt)
    };
    let trailing: T = wells[last + 1..].iter().map(|w| w.width()).sum();
    if trailing > T::zero() {
        a_n = a_n * (imag_unit::<T>() * k * (lit::<T>(2.0) * trailing)).exp();
    }
    if !is_finite_c(a_n) {
        return Err(recursion_pole(last + 1, k));
    }
    Ok(a_n)
}

/// Output of the `(p, q)` recurrence.
///
/// `B_N = prefactor · p/q` with `prefactor = −(R⁰_N/R̃⁰_N)e^{2ik·g}`, `g`
/// being the width of transparent blocks left of the last well. `dp`, `dq`
/// are `k`-derivatives (zero unless requested). The vector is rescaled as
/// it propagates, so only ratios are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQState<T> {
    pub p: Complex<T>,
    pub q: Complex<T>,
    pub dp: Complex<T>,
    pub dq: Complex<T>,
    pub prefactor: Complex<T>,
    /// `1/prefactor`, built from `R̃⁰_N/R⁰_N` so it stays finite where
    /// `R⁰_N` itself has a pole.
    pub inv_prefactor: Complex<T>,
    /// Number of nonzero blocks.
    pub wells: usize,
}

impl<T: Real> PQState<T> {
    /// `B_N(k)`.
    pub fn b(&self) -> Complex<T> {
        self.prefactor * self.p / self.q
    }

    /// `Res B_N = prefactor · p/q′` (meaningful at a simple zero of `q`).
    pub fn residue(&self) -> Complex<T> {
        self.prefactor * self.p / self.dq
    }

    /// Real function on the imaginary axis whose zeros are the poles of `B_N`
    /// away from exceptional points.
    ///
    /// With two or more wells this is `q` scaled by the size of `(p, q)`.
    /// With one well the `M` product is empty, `q ≡ 1`, and the pole sits in
    /// the prefactor; `q/prefactor` is returned instead.
    pub fn pole_target(&self) -> Complex<T> {
        if self.wells >= 2 {
            self.normalized_q()
        } else {
            self.q * self.inv_prefactor
        }
    }

    /// `q` relative to the size of `(p, q)`.
    pub fn normalized_q(&self) -> Complex<T> {
        let s = self.p.norm().max(self.q.norm());
        if s > T::zero() {
            self.q / s
        } else {
            self.q
        }
    }
}

const RESCALE_HIGH: f64 = 1e100;
const RESCALE_LOW: f64 = 1e-100;

/// Propagates `(p, q)` (and optionally `(p′, q′)`) through
/// `M_n = [[−R⁰ₙ, −R̃⁰ₙ₊₁R̃⁰ₙ], [R⁰ₙ₊₁R⁰ₙ, R̃⁰ₙ]]` starting from `(−R̃⁰₁, 1)`.
///
/// Transparent blocks between two wells contribute `diag(e^{2ikg}, 1)` on
/// the right of `M_n`. The state is rescaled by its largest component
/// whenever that leaves `[1e-100, 1e100]`.
pub fn pq_propagate<T: Real>(
    k: Complex<T>,
    pot: &BlockPotential<T>,
    with_derivative: bool,
) -> Result<PQState<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = imag_unit::<T>();
    let two = lit::<T>(2.0);

    // (block index, depth root, width, gap of transparent blocks before it)
    let mut wells = Vec::new();
    let mut gap = T::zero();
    for (n, (&a, &h)) in pot.depth_roots().iter().zip(pot.widths()).enumerate() {
        if a == T::zero() {
            gap += h;
        } else {
            wells.push((n + 1, a, h, gap));
            gap = T::zero();
        }
    }
    let trailing = gap;
    if wells.is_empty() {
        return Ok(PQState {
            p: zero,
            q: one,
            dp: zero,
            dq: zero,
            prefactor: zero,
            inv_prefactor: zero,
            wells: 0,
        });
    }
    // a lone well only enters through R̃⁰ and 1/R⁰, so its own pole is fine
    let lone = wells.len() == 1;
    let pairs = wells
        .iter()
        .map(|&(n, a, h, _)| {
            let pair = origin_reflection_pair(k, a, h, with_derivative, n)?;
            let needed = if lone {
                [pair.inv_r, pair.r_tilde, pair.dr_tilde, pair.r_tilde]
            } else {
                [pair.r, pair.r_tilde, pair.dr, pair.dr_tilde]
            };
            if needed.into_iter().all(is_finite_c) {
                Ok(pair)
            } else {
                Err(pole(n, k))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut p = -pairs[0].r_tilde;
    let mut q = one;
    let mut dp = -pairs[0].dr_tilde;
    let mut dq = zero;
    let high = lit::<T>(RESCALE_HIGH);
    let low = lit::<T>(RESCALE_LOW);
    for j in 0..pairs.len() - 1 {
        let cur = &pairs[j];
        let nxt = &pairs[j + 1];
        let g = wells[j + 1].3;
        let (e, de) = if g > T::zero() {
            let e = (i * k * (two * g)).exp();
            (e, i * e * (two * g))
        } else {
            (one, zero)
        };
        let m11 = -cur.r * e;
        let m12 = -nxt.r_tilde * cur.r_tilde;
        let m21 = nxt.r * cur.r * e;
        let m22 = cur.r_tilde;
        let (np, nq) = (m11 * p + m12 * q, m21 * p + m22 * q);
        if with_derivative {
            let d11 = -(cur.dr * e + cur.r * de);
            let d12 = -(nxt.dr_tilde * cur.r_tilde + nxt.r_tilde * cur.dr_tilde);
            let d21 = (nxt.dr * cur.r + nxt.r * cur.dr) * e + nxt.r * cur.r * de;
            let d22 = cur.dr_tilde;
            let ndp = m11 * dp + m12 * dq + d11 * p + d12 * q;
            let ndq = m21 * dp + m22 * dq + d21 * p + d22 * q;
            dp = ndp;
            dq = ndq;
        }
        p = np;
        q = nq;
        let scale = p.norm().max(q.norm()).max(dp.norm()).max(dq.norm());
        if scale > high || (scale < low && scale > T::zero()) {
            p = p / scale;
            q = q / scale;
            dp = dp / scale;
            dq = dq / scale;
        }
    }
    let last = pairs.last().unwrap();
    let mut prefactor = -last.ratio;
    let mut inv_prefactor = -(last.r_tilde * last.inv_r);
    if trailing > T::zero() {
        let e = (i * k * (two * trailing)).exp();
        prefactor = prefactor * e;
        inv_prefactor = inv_prefactor / e;
    }
    Ok(PQState {
        p,
        q,
        dp,
        dq,
        prefactor,
        inv_prefactor,
        wells: pairs.len(),
    })
}

/// `κ > 0` with `det(M_{N−1} ⋯ M₁)(iκ) = 0`, descending.
///
/// These are `κ = a_N` and `κ = √(aₙ² − (πm/hₙ)²)` for every well but the
/// last and `0 ≤ m ≤ ⌊aₙhₙ/π⌋`; transparent blocks are skipped.
pub fn exceptional_points<T: Real>(pot: &BlockPotential<T>) -> Vec<T> {
    let wells: Vec<(T, T)> = pot
        .depth_roots()
        .iter()
        .zip(pot.widths())
        .filter(|(&a, _)| a > T::zero())
        .map(|(&a, &h)| (a, h))
        .collect();
    let Some(&(a_last, _)) = wells.last() else {
        return Vec::new();
    };
    let mut out = vec![a_last];
    for &(a, h) in &wells[..wells.len() - 1] {
        let m_max = (a * h / T::PI()).floor().to_usize().unwrap_or(0);
        for m in 0..=m_max {
            let t = T::PI() * T::from_usize(m).unwrap() / h;
            let kappa2 = (a - t) * (a + t);
            if kappa2 > T::zero() {
                out.push(kappa2.sqrt());
            }
        }
    }
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let tol = lit::<T>(1e-12);
    out.dedup_by(|x, y| (*x - *y).abs() <= tol * y.abs());
    out
}

/// Whether `kappa` lies within `rel_tol` of an exceptional point.
pub fn is_exceptional<T: Real>(kappa: T, exceptional: &[T], rel_tol: T) -> bool {
    exceptional
        .iter()
        .any(|&e| (kappa - e).abs() <= rel_tol * kappa.abs().max(T::one()))
}

const EXCEPTIONAL_TOL: f64 = 1e-10;

/// `Res_{k=iκ} B_N = −(R⁰_N/R̃⁰_N)·p_N/q′_N`.
pub fn residue_b<T: Real>(kappa: T, pot: &BlockPotential<T>) -> Result<Complex<T>> {
    let exc = exceptional_points(pot);
    if is_exceptional(kappa, &exc, lit(EXCEPTIONAL_TOL)) {
        return Err(Error::ExceptionalPoint {
            kappa: to_f64(kappa),
        });
    }
    let k = on_imag_axis(kappa);
    let wells = pot.depth_roots().iter().filter(|&&a| a > T::zero()).count();
    if wells == 1 {
        return single_well_residue(k, pot);
    }
    let st = pq_propagate(k, pot, true)?;
    let p_abs = st.p.norm();
    let dq_abs = st.dq.norm();
    if !(dq_abs * kappa.max(T::one()) > lit::<T>(1e-12) * p_abs) || !dq_abs.is_finite() {
        return Err(Error::NonSimplePole {
            kappa: to_f64(kappa),
            dq_abs: to_f64(dq_abs),
            p_abs: to_f64(p_abs),
        });
    }
    Ok(st.residue())
}

/// With a single nonzero block `B_N = R⁰ e^{2ik·g}`, `g` the width of the
/// transparent blocks to its left, so `Res B_N = e^{2ik·g}/(1/R⁰)′`.
fn single_well_residue<T: Real>(k: Complex<T>, pot: &BlockPotential<T>) -> Result<Complex<T>> {
    let last = last_nonzero(pot).expect("one nonzero block");
    let well = pot.well(last);
    let pair = origin_reflection_pair(k, well.depth_root(), well.width(), true, last + 1)?;
    let trailing: T = pot.widths()[last + 1..].iter().copied().sum();
    let phase = (imag_unit::<T>() * k * (lit::<T>(2.0) * trailing)).exp();
    let res = phase / pair.dinv_r;
    if !is_finite_c(res) || pair.inv_r.norm() > lit::<T>(1e-6) {
        return Err(Error::NonSimplePole {
            kappa: to_f64(k.im),
            dq_abs: to_f64(pair.dinv_r.norm()),
            p_abs: to_f64(pair.inv_r.norm()),
        });
    }
    Ok(res)
}

/// Relative tolerance on the imaginary part of a computed norming constant.
pub const NORMING_IMAG_TOL: f64 = 1e-8;

/// Checks a complex norming candidate and returns its real part.
pub(crate) fn real_positive_norming<T: Real>(kappa: T, c2: Complex<T>) -> Result<T> {
    let tol = lit::<T>(NORMING_IMAG_TOL);
    if !(c2.re > T::zero()) || !(c2.im.abs() <= tol * c2.re.abs()) {
        return Err(Error::InvalidNorming {
            kappa: to_f64(kappa),
            re: to_f64(c2.re),
            im: to_f64(c2.im),
        });
    }
    Ok(c2.re)
}

/// Left norming constant `c² = Res B_N / (i A_N(iκ))`, translated to the
/// physical position of the potential.
pub fn norming_from_residue<T: Real>(kappa: T, pot: &BlockPotential<T>) -> Result<T> {
    let k = on_imag_axis(kappa);
    let residue = residue_b(kappa, pot)?;
    let a_n = amplitude_ratio(k, pot)?;
    let c2 = residue / (imag_unit::<T>() * a_n);
    Ok(real_positive_norming(kappa, c2)? * pot.norming_shift(kappa))
}
