//! Bound states and norming constants of a block potential.
//!
//! Bound states are the `κ > 0` for which `iκ` is a pole of `R₁…_N`. On the
//! imaginary axis `R`, `B` and the `(p, q)` recurrence are real, so each
//! method reduces to a real root problem in `κ`:
//!
//! * [`BoundStateMethod::InvR`]: zeros of `1/R₁…_N(iκ)`.
//! * [`BoundStateMethod::InvB`]: zeros of `1/B_N(iκ)`.
//! * [`BoundStateMethod::QZero`]: zeros of `q_N(iκ)`, minus exceptional
//!   points that are not confirmed as poles of `B_N`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fragmentation::{
    compose_lambda, exceptional_points, is_exceptional, norming_from_residue, pq_propagate,
    real_positive_norming, reciprocal_targets, BlockPotential,
};
use crate::real::{imag_unit, lit, on_imag_axis, to_f64, Real};

/// Root target used by [`find_bound_states`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundStateMethod {
    InvR,
    InvB,
    QZero,
}

impl BoundStateMethod {
    pub const ALL: [BoundStateMethod; 3] = [Self::InvR, Self::InvB, Self::QZero];

    pub fn name(self) -> &'static str {
        match self {
            Self::InvR => "invR",
            Self::InvB => "invB",
            Self::QZero => "qzero",
        }
    }
}

impl std::str::FromStr for BoundStateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "invr" | "inv_r" => Ok(Self::InvR),
            "invb" | "inv_b" => Ok(Self::InvB),
            "qzero" | "q_zero" => Ok(Self::QZero),
            other => Err(Error::InvalidArgument(format!(
                "unknown bound-state method {other:?} (expected invR, invB or qzero)"
            ))),
        }
    }
}

/// How norming constants are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormingMethod<T> {
    /// `c² = Res B_N / (i A_N)` from the `(p, q)` recurrence.
    Residue,
    /// `c² = i b(iκ)/a′(iκ)` with a central difference of step `eta` in `κ`.
    AbRatio { eta: T },
}

impl<T: Real> NormingMethod<T> {
    pub fn ab_ratio_default() -> Self {
        Self::AbRatio { eta: lit(1e-3) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Residue => "residue",
            Self::AbRatio { .. } => "ab",
        }
    }
}

/// Where a seed list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    SpectralMatrix,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedEstimates<T> {
    pub kappas_guess: Vec<T>,
    pub source: SeedSource,
}

impl<T: Real> SeedEstimates<T> {
    /// Drops nonpositive guesses and clamps the rest to `(0, kappa_max]`.
    pub fn new(mut kappas: Vec<T>, source: SeedSource, kappa_max: T) -> Self {
        kappas.retain(|k| k.is_finite() && *k > T::zero());
        for k in &mut kappas {
            *k = k.min(kappa_max);
        }
        kappas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Self {
            kappas_guess: kappas,
            source,
        }
    }

    pub fn user(kappas: Vec<T>, pot: &BlockPotential<T>) -> Self {
        Self::new(kappas, SeedSource::User, pot.max_depth_root())
    }

    pub fn is_empty(&self) -> bool {
        self.kappas_guess.is_empty()
    }
}

/// Provenance of one `(κ, c²)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodTag<T> {
    /// `None` when the `κ` were supplied by the caller.
    pub bound_states: Option<BoundStateMethod>,
    pub norming: NormingMethod<T>,
}

/// `κ₁ > … > κ_K > 0` with norming constants `c²ₙ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum<T> {
    kappas: Vec<T>,
    norming: Vec<T>,
    method_tags: Vec<MethodTag<T>>,
}

impl<T: Real> DiscreteSpectrum<T> {
    pub fn new(kappas: Vec<T>, norming: Vec<T>, method_tags: Vec<MethodTag<T>>) -> Result<Self> {
        if kappas.len() != norming.len() || kappas.len() != method_tags.len() {
            return Err(Error::InvalidArgument(
                "kappas, norming constants and tags differ in length".into(),
            ));
        }
        for (j, (&k, &c)) in kappas.iter().zip(&norming).enumerate() {
            if !(k > T::zero() && k.is_finite()) {
                return Err(Error::InvalidArgument(format!("kappa {k} is not positive")));
            }
            if !(c > T::zero() && c.is_finite()) {
                return Err(Error::InvalidNorming {
                    kappa: to_f64(k),
                    re: to_f64(c),
                    im: 0.0,
                });
            }
            if j > 0 && !(k < kappas[j - 1]) {
                return Err(Error::InvalidArgument(format!(
                    "kappas not strictly descending: {} then {k}",
                    kappas[j - 1]
                )));
            }
        }
        Ok(Self {
            kappas,
            norming,
            method_tags,
        })
    }

    /// Spectrum given directly, e.g. for a known soliton train.
    pub fn from_data(kappas: Vec<T>, norming: Vec<T>) -> Result<Self> {
        let tags = vec![
            MethodTag {
                bound_states: None,
                norming: NormingMethod::Residue,
            };
            kappas.len()
        ];
        Self::new(kappas, norming, tags)
    }

    pub fn empty() -> Self {
        Self {
            kappas: Vec::new(),
            norming: Vec::new(),
            method_tags: Vec::new(),
        }
    }

    pub fn kappas(&self) -> &[T] {
        &self.kappas
    }

    pub fn norming(&self) -> &[T] {
        &self.norming
    }

    pub fn method_tags(&self) -> &[MethodTag<T>] {
        &self.method_tags
    }

    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    /// Records which root target produced the `κ`.
    pub fn with_bound_state_method(mut self, method: BoundStateMethod) -> Self {
        for tag in &mut self.method_tags {
            tag.bound_states = Some(method);
        }
        self
    }
}

/// Negative eigenvalues of a Fourier collocation discretization of
/// `−d²/dx² + V` on the periodic domain, as `κ = √(−λ)`.
///
/// `sample` is evaluated at `x_j = left + jL/n`. Eigenvalues are computed in
/// `f64`.
pub fn spectral_seed_samples(
    sample: impl Fn(f64) -> f64,
    grid_size: usize,
    domain: (f64, f64),
) -> Result<Vec<f64>> {
    if grid_size < 64 || !grid_size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid size {grid_size} must be a power of two >= 64"
        )));
    }
    let (left, right) = domain;
    if !(right > left) {
        return Err(Error::InvalidArgument(format!(
            "empty domain [{left}, {right}]"
        )));
    }
    let n = grid_size;
    let length = right - left;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let scale = (2.0 * std::f64::consts::PI / length).powi(2);
    let diag = -std::f64::consts::PI.powi(2) / (3.0 * step * step) - 1.0 / 6.0;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = left + i as f64 * length / n as f64;
        h[(i, i)] = -diag * scale + sample(x);
        for j in 0..i {
            let d = i - j;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            let s = (d as f64 * step / 2.0).sin();
            // D2 entry is −(−1)^d / (2 sin²); H = −D2
            let v = sign / (2.0 * s * s) * scale;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(h).eigenvalues;
    let biggest = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = -64.0 * f64::EPSILON * biggest;
    let mut kappas: Vec<f64> = eig.iter().filter(|&&l| l < cutoff).map(|l| (-l).sqrt()).collect();
    kappas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(kappas)
}

/// Seeds from the Fourier matrix of the block potential on `domain`.
pub fn spectral_seed<T: Real>(
    pot: &BlockPotential<T>,
    grid_size: usize,
    domain: (T, T),
) -> Result<SeedEstimates<T>> {
    let (lo, hi) = pot.support();
    let tol = lit::<T>(1e-12) * (T::one() + lo.abs().max(hi.abs()));
    if domain.0 > lo + tol || domain.1 < hi - tol {
        return Err(Error::InvalidArgument(format!(
            "domain [{}, {}] does not contain the support [{lo}, {hi}]",
            domain.0, domain.1
        )));
    }
    let kappas = spectral_seed_samples(
        |x| to_f64(pot.value_at(lit(x))),
        grid_size,
        (to_f64(domain.0), to_f64(domain.1)),
    )?;
    Ok(SeedEstimates::new(
        kappas.into_iter().map(lit).collect(),
        SeedSource::SpectralMatrix,
        pot.max_depth_root(),
    ))
}

/// Controls for [`find_bound_states`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindOptions {
    /// Iteration cap for each polished root.
    pub max_iter: usize,
    /// Points of the supplementary scan below the smallest root found.
    /// Zero disables it.
    pub scan_points: usize,
    /// Scan the whole interval `(0, max aₙ)` instead of relying on seeds.
    pub exhaustive: bool,
}

impl Default for FindOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            scan_points: 400,
            exhaustive: false,
        }
    }
}

/// Result of [`find_bound_states`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateReport<T> {
    /// Descending.
    pub kappas: Vec<T>,
    /// Seeds around which no root could be confirmed.
    pub failed_seeds: Vec<T>,
    /// Roots reached from more than one starting point, reported once.
    pub duplicates: Vec<T>,
    /// Zeros of `q_N` rejected as exceptional points.
    pub rejected_exceptional: Vec<T>,
}

/// Real target on the imaginary axis, `None` where it cannot be evaluated.
///
/// The targets are real in exact arithmetic, and a value whose imaginary
/// part exceeds `1e-3·max(|v|, scale)` is treated as unavailable. When
/// sampling for sign changes `scale` is negligible, which keeps noise near
/// `κ = 0` from producing sign changes. Inside a bracket the imaginary part
/// is roundoff of the function's overall size and dwarfs the value near the
/// root, so `scale` is the size of the bracket values instead. A pole of the
/// target still fails the test there: its imaginary part blows up too.
fn target<T: Real>(pot: &BlockPotential<T>, method: BoundStateMethod, kappa: T, scale: T) -> Option<T> {
    let k = on_imag_axis(kappa);
    let v = match method {
        BoundStateMethod::InvR => reciprocal_targets(k, pot).ok()?.0,
        BoundStateMethod::InvB => reciprocal_targets(k, pot).ok()?.1,
        BoundStateMethod::QZero => pq_propagate(k, pot, false).ok()?.pole_target(),
    };
    let realness = v.im.abs() <= lit::<T>(1e-3) * v.norm().max(scale).max(lit(1e-8));
    (v.re.is_finite() && realness).then_some(v.re)
}

/// Moves `kappa` off the branch points `κ = aₙ`, where the block formulas
/// are 0/0.
fn nudge<T: Real>(kappa: T, roots: &[T]) -> T {
    let tol = lit::<T>(64.0) * T::epsilon();
    let mut k = kappa;
    for &a in roots {
        if (k - a).abs() <= tol * a {
            k = a * (T::one() - lit::<T>(1e3) * T::epsilon());
        }
    }
    k
}

struct Evaluator<'a, T> {
    pot: &'a BlockPotential<T>,
    method: BoundStateMethod,
    roots: Vec<T>,
}

impl<T: Real> Evaluator<'_, T> {
    /// For sampling.
    fn eval(&self, kappa: T) -> Option<T> {
        target(self.pot, self.method, nudge(kappa, &self.roots), T::zero())
    }

    /// Inside a bracket whose values have size `scale`.
    fn eval_near(&self, kappa: T, scale: T) -> Option<T> {
        target(self.pot, self.method, nudge(kappa, &self.roots), scale)
    }

    /// Safeguarded Newton inside a sign-change bracket; returns the root if
    /// it is a genuine zero rather than a pole or jump.
    fn polish(&self, mut lo: T, mut glo: T, mut hi: T, ghi: T, max_iter: usize) -> Option<T> {
        if glo == T::zero() {
            return self.confirm(lo);
        }
        if ghi == T::zero() {
            return self.confirm(hi);
        }
        let half = lit::<T>(0.5);
        let eps = T::epsilon();
        let fd = eps.sqrt();
        let scale = glo.abs().min(ghi.abs());
        let mut x = half * (lo + hi);
        let mut gx = self.eval_near(x, scale)?;
        for _ in 0..max_iter {
            if gx == T::zero() {
                break;
            }
            if (gx > T::zero()) == (glo > T::zero()) {
                lo = x;
                glo = gx;
            } else {
                hi = x;
            }
            if hi - lo <= lit::<T>(4.0) * eps * x {
                break;
            }
            let d = fd * x;
            let slope = match (self.eval_near(x + d, scale), self.eval_near(x - d, scale)) {
                (Some(p), Some(m)) => (p - m) / (d + d),
                _ => T::nan(),
            };
            let newton = x - gx / slope;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                half * (lo + hi)
            };
            let gn = self.eval_near(next, scale)?;
            // fall back to bisection when Newton stalls
            let (next, gn) = if gn.abs() > half * gx.abs() && next != half * (lo + hi) {
                let mid = half * (lo + hi);
                (mid, self.eval_near(mid, scale)?)
            } else {
                (next, gn)
            };
            if next == x {
                break;
            }
            x = next;
            gx = gn;
        }
        self.confirm(x)
    }

    fn confirm(&self, x: T) -> Option<T> {
        is_genuine_root(|k| self.eval(k), |k, s| self.eval_near(k, s), x).then_some(x)
    }
}

/// `|g(x)|` must be far below `|g(x ± d)|`; rejects poles and jumps, which
/// also change sign. The neighbours are sampled strictly and set the scale
/// for `g(x)`.
fn is_genuine_root<T: Real>(
    strict: impl Fn(T) -> Option<T>,
    near: impl Fn(T, T) -> Option<T>,
    x: T,
) -> bool {
    // wide enough that f32 neighbours clear roundoff
    let eps = T::epsilon();
    let d = lit::<T>(1e-6).max(lit::<T>(1e3) * eps) * x;
    let ratio = lit::<T>(1e-3).max(lit::<T>(1e5) * eps);
    let (Some(gp), Some(gm)) = (strict(x + d), strict(x - d)) else {
        return false;
    };
    let Some(g0) = near(x, gp.abs().min(gm.abs())) else {
        return false;
    };
    g0.abs() <= ratio * gp.abs().min(gm.abs()) && gp * gm < T::zero()
}

/// Levels of local refinement around peaks of `|g|` in [`scan`].
const PEAK_DEPTH: usize = 4;
const PEAK_POINTS: usize = 32;

/// Sign changes of `g` on a sorted grid, refined to roots.
///
/// A pole or jump of the target can sit next to a root, closer than the
/// grid spacing, so that the pair shows no net sign change. Every local
/// maximum of `|g|`, and every local minimum without a sign change, is
/// therefore rescanned on a finer grid, a few levels deep.
fn scan<T: Real>(ev: &Evaluator<'_, T>, grid: &[T], max_iter: usize) -> Vec<T> {
    let mut roots = scan_level(ev, grid, max_iter, PEAK_DEPTH);
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // refinement revisits roots already found on the coarser grid
    let tol = grid.last().map_or(T::zero(), |&u| u * lit::<T>(1e-12));
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol.max(lit::<T>(8.0) * T::epsilon() * *b));
    roots
}

fn scan_level<T: Real>(ev: &Evaluator<'_, T>, grid: &[T], max_iter: usize, depth: usize) -> Vec<T> {
    let mut out = Vec::new();
    let samples: Vec<(T, Option<T>)> = grid.iter().map(|&x| (x, ev.eval(x))).collect();
    for w in samples.windows(2) {
        let ((xp, gp), (x, gx)) = (w[0], w[1]);
        if let (Some(gp), Some(gx)) = (gp, gx) {
            if gp == T::zero() || (gp > T::zero()) != (gx > T::zero()) {
                if let Some(r) = ev.polish(xp, gp, x, gx, max_iter) {
                    out.push(r);
                }
            }
        }
    }
    if depth == 0 {
        return out;
    }
    let contrast = lit::<T>(1e-6).max(lit::<T>(1e3) * T::epsilon());
    for w in samples.windows(3) {
        let (Some(g0), Some(g1), Some(g2)) = (w[0].1, w[1].1, w[2].1) else {
            continue;
        };
        // extrema must clear roundoff, which is noisy on fine grids
        let (a0, a1, a2) = (g0.abs(), g1.abs(), g2.abs());
        let peak = a1 * (T::one() - contrast) > a0.max(a2);
        let same_sign = (g0 > T::zero()) == (g1 > T::zero()) && (g1 > T::zero()) == (g2 > T::zero());
        let dip = same_sign && a1 < (T::one() - contrast) * a0.min(a2);
        if peak || dip {
            let (lo, hi) = (w[0].0, w[2].0);
            let n = T::from_usize(PEAK_POINTS).unwrap();
            let fine: Vec<T> = (0..=PEAK_POINTS)
                .map(|j| lo + (hi - lo) * T::from_usize(j).unwrap() / n)
                .collect();
            out.extend(scan_level(ev, &fine, max_iter, depth - 1));
        }
    }
    out
}

/// Uniform plus geometric points on `(floor, upper)`.
fn scan_grid<T: Real>(upper: T, floor: T, points: usize) -> Vec<T> {
    let points = points.max(2);
    let n = T::from_usize(points).unwrap();
    let mut grid: Vec<T> = (1..points)
        .map(|j| upper * T::from_usize(j).unwrap() / n)
        .collect();
    // geometric refinement towards 0, where states cluster. The targets are
    // 0/0 at k = 0 with relative error growing like ε/κ², so the scan stops
    // at 1e-6 of the deepest branch point.
    let first = upper / n;
    let mut x = first * lit::<T>(0.5);
    while x > floor {
        grid.push(x);
        x = x * lit::<T>(0.5);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Polishes each seed to a bound state and scans for missed shallow states.
pub fn find_bound_states<T: Real>(
    pot: &BlockPotential<T>,
    seeds: &SeedEstimates<T>,
    method: BoundStateMethod,
    options: &FindOptions,
) -> Result<BoundStateReport<T>> {
    let mut report = BoundStateReport {
        kappas: Vec::new(),
        failed_seeds: Vec::new(),
        duplicates: Vec::new(),
        rejected_exceptional: Vec::new(),
    };
    let kappa_max = pot.max_depth_root();
    if pot.is_free() || kappa_max <= T::zero() {
        return Ok(report);
    }
    if seeds.is_empty() && !options.exhaustive && options.scan_points == 0 {
        return Err(Error::InvalidArgument(
            "no seeds and no scan requested".into(),
        ));
    }
    let ev = Evaluator {
        pot,
        method,
        roots: pot.depth_roots().to_vec(),
    };
    let upper = kappa_max * (T::one() - lit::<T>(1e3) * T::epsilon());
    let mut found: Vec<T> = Vec::new();

    // each seed searches up to halfway to its neighbours, but at least 1%
    // around itself so that clustered seeds still reach their root
    let guesses = &seeds.kappas_guess;
    let margin = lit::<T>(1e-2);
    for (j, &seed) in guesses.iter().enumerate() {
        let hi = if j == 0 {
            upper
        } else {
            (lit::<T>(0.5) * (guesses[j - 1] + seed))
                .max(seed * (T::one() + margin))
                .min(upper)
        };
        let lo = guesses
            .get(j + 1)
            .map_or(seed * lit::<T>(0.5), |&next| lit::<T>(0.5) * (next + seed))
            .min(seed * (T::one() - margin));
        match polish_seed(&ev, seed, (lo, hi), options.max_iter) {
            Some(r) => found.push(r),
            None => report.failed_seeds.push(seed),
        }
    }

    let scan_upper = if options.exhaustive {
        Some(upper)
    } else if options.scan_points > 0 {
        Some(
            found
                .iter()
                .copied()
                .fold(upper, |m, k| m.min(k))
                .min(upper),
        )
    } else {
        None
    };
    if let Some(top) = scan_upper {
        let points = if options.exhaustive {
            options.scan_points.max(2000)
        } else {
            options.scan_points
        };
        found.extend(scan(&ev, &scan_grid(top, upper * lit::<T>(1e-6), points), options.max_iter));
    }

    found.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let gap = lit::<T>(1e-8) * kappa_max;
    for r in found {
        match report.kappas.last() {
            Some(&last) if (last - r).abs() <= gap => report.duplicates.push(r),
            _ => report.kappas.push(r),
        }
    }

    if method == BoundStateMethod::QZero {
        let (keep, reject) = screen_exceptional(pot, &report.kappas);
        report.kappas = keep;
        report.rejected_exceptional = reject;
    }
    report.duplicates.dedup_by(|a, b| (*a - *b).abs() <= gap);
    Ok(report)
}

/// Splits zeros of `q_N` into bound states and rejected exceptional points.
///
/// A zero within `1e-10` (relative) of an exceptional point is kept only if
/// `1/B_N` also has a genuine zero there.
pub fn screen_exceptional<T: Real>(pot: &BlockPotential<T>, kappas: &[T]) -> (Vec<T>, Vec<T>) {
    let exc = exceptional_points(pot);
    let tol = lit::<T>(1e-10);
    let inv_b = Evaluator {
        pot,
        method: BoundStateMethod::InvB,
        roots: pot.depth_roots().to_vec(),
    };
    kappas.iter().partition(|&&k| {
        !is_exceptional(k, &exc, tol) || is_genuine_root(|x| inv_b.eval(x), |x, s| inv_b.eval_near(x, s), k)
    })
}

/// Expands a bracket around `seed` within `window` until a confirmed root
/// is found.
fn polish_seed<T: Real>(
    ev: &Evaluator<'_, T>,
    seed: T,
    window: (T, T),
    max_iter: usize,
) -> Option<T> {
    let (floor, upper) = window;
    let seed = seed.min(upper);
    let g0 = ev.eval(seed)?;
    if g0 == T::zero() && ev.confirm(seed).is_some() {
        return Some(seed);
    }
    let mut d = lit::<T>(1e-7) * seed.max(T::one());
    let (mut left, mut gl) = (seed, g0);
    let (mut right, mut gr) = (seed, g0);
    for _ in 0..80 {
        let cand_l = (seed - d).max(floor);
        let cand_r = (seed + d).min(upper);
        if cand_r > right {
            if let Some(g) = ev.eval(cand_r) {
                if (g > T::zero()) != (gr > T::zero()) {
                    if let Some(r) = ev.polish(right, gr, cand_r, g, max_iter) {
                        return Some(r);
                    }
                }
                right = cand_r;
                gr = g;
            }
        }
        if cand_l < left {
            if let Some(g) = ev.eval(cand_l) {
                if (g > T::zero()) != (gl > T::zero()) {
                    if let Some(r) = ev.polish(cand_l, g, left, gl, max_iter) {
                        return Some(r);
                    }
                }
                left = cand_l;
                gl = g;
            }
        }
        if left <= floor && right >= upper {
            break;
        }
        d = d * lit::<T>(2.0);
    }
    None
}

/// Seeds from the spectral matrix on `domain`, polished with `method`.
pub fn bound_states_with_spectral_seeds<T: Real>(
    pot: &BlockPotential<T>,
    grid_size: usize,
    domain: (T, T),
    method: BoundStateMethod,
    options: &FindOptions,
) -> Result<BoundStateReport<T>> {
    let seeds = spectral_seed(pot, grid_size, domain)?;
    find_bound_states(pot, &seeds, method, options)
}

/// `c² = i b(iκ)/a′(iκ)` with `a′ ≈ (a(i(κ + η/2)) − a(i(κ − η/2)))/(iη)`.
pub fn norming_by_ab_ratio<T: Real>(kappa: T, pot: &BlockPotential<T>, eta: T) -> Result<T> {
    if !(eta > T::zero()) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    let k = on_imag_axis(kappa);
    let half = on_imag_axis(eta * lit::<T>(0.5));
    let b = compose_lambda(k, pot)?.b();
    let a_plus = compose_lambda(k + half, pot)?.a();
    let a_minus = compose_lambda(k - half, pot)?.a();
    // step along the imaginary axis: a′(iκ) = (1/i) d/dκ a(iκ)
    let da = (a_plus - a_minus) / (imag_unit::<T>() * eta);
    if !(da.norm() > T::epsilon() * (T::one() + a_plus.norm())) {
        return Err(Error::VanishingDerivative {
            kappa: to_f64(kappa),
        });
    }
    let c2 = imag_unit::<T>() * b / da;
    Ok(real_positive_norming(kappa, c2)? * pot.norming_shift(kappa))
}

/// Norming constants at the given bound states.
pub fn norming_constants<T: Real>(
    pot: &BlockPotential<T>,
    kappas: &[T],
    method: NormingMethod<T>,
) -> Result<DiscreteSpectrum<T>> {
    let mut sorted = kappas.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let norming = sorted
        .iter()
        .map(|&k| match method {
            NormingMethod::Residue => norming_from_residue(k, pot),
            NormingMethod::AbRatio { eta } => norming_by_ab_ratio(k, pot, eta),
        })
        .collect::<Result<Vec<T>>>()?;
    let tags = vec![
        MethodTag {
            bound_states: None,
            norming: method,
        };
        sorted.len()
    ];
    DiscreteSpectrum::new(sorted, norming, tags)
}
