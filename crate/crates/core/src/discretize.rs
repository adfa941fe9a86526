//! Initial profiles, their block approximations, and the Haar transform.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fragmentation::BlockPotential;
use crate::real::{lit, to_f64, Real};

/// Nonpositive profile with bounded support.
#[derive(Clone)]
pub enum SampledPotential<T> {
    /// Linear interpolation through `(x, v)` pairs, zero outside.
    Samples { xs: Vec<T>, vs: Vec<T> },
    /// `V = value` on `[left, right]`.
    Block { value: T, left: T, right: T },
    /// `V = −amplitude·sech²((x − center)/width)` truncated to `support`.
    Sech2 {
        amplitude: T,
        width: T,
        center: T,
        support: (T, T),
    },
    /// Arbitrary profile on `support`.
    Function {
        f: Arc<dyn Fn(T) -> T + Send + Sync>,
        support: (T, T),
    },
}

impl<T: Real> fmt::Debug for SampledPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Samples { xs, .. } => write!(f, "Samples({} points)", xs.len()),
            Self::Block { value, left, right } => write!(f, "Block({value} on [{left}, {right}])"),
            Self::Sech2 {
                amplitude,
                width,
                center,
                support,
            } => write!(
                f,
                "Sech2(-{amplitude} sech^2((x - {center})/{width}) on [{}, {}])",
                support.0, support.1
            ),
            Self::Function { support, .. } => {
                write!(f, "Function(on [{}, {}])", support.0, support.1)
            }
        }
    }
}

impl<T: Real> SampledPotential<T> {
    pub fn samples(xs: Vec<T>, vs: Vec<T>) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(Error::Input(format!(
                "need at least two (x, v) pairs of equal length, got {} and {}",
                xs.len(),
                vs.len()
            )));
        }
        if let Some(w) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Input(format!(
                "x is not strictly increasing at row {}",
                w + 2
            )));
        }
        if xs.iter().chain(&vs).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite sample".into()));
        }
        Ok(Self::Samples { xs, vs })
    }

    /// Reads a two-column `x,v` CSV file with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (row, rec) in reader.deserialize::<(f64, f64)>().enumerate() {
            let (x, v) = rec.map_err(|e| {
                Error::Input(format!("{}: row {}: {e}", path.display(), row + 2))
            })?;
            xs.push(lit(x));
            vs.push(lit(v));
        }
        Self::samples(xs, vs).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    /// `−2 sech²(x)`-type profile.
    pub fn sech2(amplitude: T, width: T, center: T, support: (T, T)) -> Result<Self> {
        if !(amplitude >= T::zero() && width > T::zero() && support.1 > support.0) {
            return Err(Error::InvalidArgument(
                "sech2 needs amplitude >= 0, width > 0 and a nonempty support".into(),
            ));
        }
        Ok(Self::Sech2 {
            amplitude,
            width,
            center,
            support,
        })
    }

    pub fn block(value: T, left: T, right: T) -> Result<Self> {
        if !(right > left) {
            return Err(Error::InvalidArgument(format!(
                "empty block [{left}, {right}]"
            )));
        }
        if value > T::zero() {
            return Err(Error::PositiveProfile {
                x: to_f64(left),
                v: to_f64(value),
            });
        }
        Ok(Self::Block { value, left, right })
    }

    pub fn function(f: impl Fn(T) -> T + Send + Sync + 'static, support: (T, T)) -> Self {
        Self::Function {
            f: Arc::new(f),
            support,
        }
    }

    pub fn support(&self) -> (T, T) {
        match self {
            Self::Samples { xs, .. } => (xs[0], xs[xs.len() - 1]),
            Self::Block { left, right, .. } => (*left, *right),
            Self::Sech2 { support, .. } | Self::Function { support, .. } => *support,
        }
    }

    /// Profile value at `x`; zero outside the support.
    pub fn eval(&self, x: T) -> T {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return T::zero();
        }
        match self {
            Self::Samples { xs, vs } => {
                let j = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[j - 1], xs[j]);
                let t = (x - x0) / (x1 - x0);
                vs[j - 1] + t * (vs[j] - vs[j - 1])
            }
            Self::Block { value, .. } => *value,
            Self::Sech2 {
                amplitude,
                width,
                center,
                ..
            } => -*amplitude * sech2((x - *center) / *width),
            Self::Function { f, .. } => f(x),
        }
    }
}

/// `sech²(z)` without overflowing `cosh`.
pub fn sech2<T: Real>(z: T) -> T {
    let e = (-lit::<T>(2.0) * z.abs()).exp();
    let s = lit::<T>(2.0) * (-z.abs()).exp() / (T::one() + e);
    s * s
}

/// How a cell value is taken from the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizationRule {
    Midpoint,
    /// Trapezoid average over 32 sub-intervals.
    CellAverage,
}

impl std::str::FromStr for DiscretizationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Self::Midpoint),
            "cell_average" | "average" => Ok(Self::CellAverage),
            other => Err(Error::InvalidArgument(format!(
                "unknown rule {other:?} (expected midpoint or cell_average)"
            ))),
        }
    }
}

const AVERAGE_PANELS: usize = 32;

/// Cell values of `profile` on a uniform partition of its support, left to
/// right, checked for positivity and clamped to `≤ 0`.
pub fn cell_values<T: Real>(
    profile: &SampledPotential<T>,
    n_blocks: usize,
    rule: DiscretizationRule,
) -> Result<Vec<T>> {
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("n_blocks must be >= 1".into()));
    }
    let (lo, hi) = profile.support();
    let n = T::from_usize(n_blocks).unwrap();
    let h = (hi - lo) / n;
    let half = lit::<T>(0.5);
    let values: Vec<(T, T)> = (0..n_blocks)
        .map(|j| {
            let left = lo + h * T::from_usize(j).unwrap();
            let mid = left + half * h;
            let v = match rule {
                DiscretizationRule::Midpoint => profile.eval(mid),
                DiscretizationRule::CellAverage => {
                    let m = T::from_usize(AVERAGE_PANELS).unwrap();
                    let dx = h / m;
                    let mut acc = half * (profile.eval(left) + profile.eval(left + h));
                    for s in 1..AVERAGE_PANELS {
                        acc += profile.eval(left + dx * T::from_usize(s).unwrap());
                    }
                    acc / m
                }
            };
            (mid, v)
        })
        .collect();
    let scale = values.iter().fold(T::zero(), |m, &(_, v)| m.max(v.abs()));
    let tol = lit::<T>(64.0) * T::epsilon() * scale.max(T::min_positive_value());
    values
        .into_iter()
        .map(|(x, v)| {
            if !v.is_finite() {
                return Err(Error::Input(format!("profile is not finite at x = {x}")));
            }
            if v > tol {
                return Err(Error::PositiveProfile {
                    x: to_f64(x),
                    v: to_f64(v),
                });
            }
            Ok(v.min(T::zero()))
        })
        .collect()
}

/// Uniform block approximation of `profile` with `n_blocks` cells.
pub fn to_blocks<T: Real>(
    profile: &SampledPotential<T>,
    n_blocks: usize,
    rule: DiscretizationRule,
) -> Result<BlockPotential<T>> {
    let values = cell_values(profile, n_blocks, rule)?;
    let (lo, hi) = profile.support();
    BlockPotential::uniform(lo, hi, &values)
}

/// Haar coefficients of a vector of `2ⁿ` cell values.
///
/// `coeffs[0]` multiplies the scaling function; `coeffs[2ʲ + k]` multiplies
/// the wavelet `w_{j,k}` that is `+1` on the left and `−1` on the right half
/// of the `k`-th dyadic interval of length `2⁻ʲ`. Columns are unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoefficients<T> {
    pub coeffs: Vec<T>,
    pub level: u32,
}

impl<T: Real> HaarCoefficients<T> {
    /// `‖column r‖²` in the standard basis: `2ⁿ` for the scaling function,
    /// `2^{n−j}` for wavelets at level `j`.
    pub fn column_norm_sq(&self, r: usize) -> T {
        let n = self.level;
        let j = if r == 0 { 0 } else { r.ilog2() };
        T::from_u64(1u64 << (n - j)).unwrap()
    }

    /// `Σ c_r² ‖column r‖²`, equal to `‖v‖²` by orthogonality.
    pub fn weighted_norm_sq(&self) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(r, &c)| c * c * self.column_norm_sq(r))
            .sum()
    }
}

fn level_of(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { len });
    }
    Ok(len.ilog2())
}

/// Pyramid algorithm for `c = W⁻¹v`.
pub fn haar_forward<T: Real>(values: &[T]) -> Result<HaarCoefficients<T>> {
    let level = level_of(values.len())?;
    let half = lit::<T>(0.5);
    let mut out = vec![T::zero(); values.len()];
    let mut s = values.to_vec();
    while s.len() > 1 {
        let m = s.len() / 2;
        let mut next = Vec::with_capacity(m);
        for k in 0..m {
            let (a, b) = (s[2 * k], s[2 * k + 1]);
            next.push(half * (a + b));
            out[m + k] = half * (a - b);
        }
        s = next;
    }
    out[0] = s[0];
    Ok(HaarCoefficients { coeffs: out, level })
}

/// `v = W c`.
pub fn haar_inverse<T: Real>(coeffs: &HaarCoefficients<T>) -> Result<Vec<T>> {
    let level = level_of(coeffs.coeffs.len())?;
    if level != coeffs.level {
        return Err(Error::InvalidArgument(format!(
            "level {} does not match {} coefficients",
            coeffs.level,
            coeffs.coeffs.len()
        )));
    }
    let c = &coeffs.coeffs;
    let mut s = vec![c[0]];
    while s.len() < c.len() {
        let m = s.len();
        let mut next = Vec::with_capacity(2 * m);
        for (k, &avg) in s.iter().enumerate() {
            next.push(avg + c[m + k]);
            next.push(avg - c[m + k]);
        }
        s = next;
    }
    Ok(s)
}

/// Outcome of [`haar_compress`].
#[derive(Debug, Clone, PartialEq)]
pub struct Compression<T> {
    pub potential: BlockPotential<T>,
    pub coefficients: HaarCoefficients<T>,
    /// Fraction of nonzero coefficients kept.
    pub kept_fraction: T,
    /// Sum of `|c_r|·max|column r|` over dropped coefficients; bounds the
    /// pointwise reconstruction error.
    pub dropped_magnitude: T,
    /// Largest change of a cell value (before clamping).
    pub max_error: T,
}

/// Cell averages at `2^level` cells, thresholded in the Haar basis and
/// transformed back.
pub fn haar_compress<T: Real>(
    profile: &SampledPotential<T>,
    level: u32,
    threshold: T,
) -> Result<Compression<T>> {
    if level > 30 {
        return Err(Error::InvalidArgument(format!("level {level} too large")));
    }
    if !(threshold >= T::zero()) {
        return Err(Error::InvalidArgument("threshold must be >= 0".into()));
    }
    let n = 1usize << level;
    let values = cell_values(profile, n, DiscretizationRule::CellAverage)?;
    let mut coeffs = haar_forward(&values)?;
    let nonzero = coeffs.coeffs.iter().filter(|c| **c != T::zero()).count();
    let mut dropped = T::zero();
    for c in coeffs.coeffs.iter_mut() {
        if c.abs() < threshold {
            dropped += c.abs();
            *c = T::zero();
        }
    }
    let kept = coeffs.coeffs.iter().filter(|c| **c != T::zero()).count();
    let rebuilt = haar_inverse(&coeffs)?;
    let max_error = rebuilt
        .iter()
        .zip(&values)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let clamped: Vec<T> = rebuilt.iter().map(|v| v.min(T::zero())).collect();
    let (lo, hi) = profile.support();
    let kept_fraction = if nonzero == 0 {
        T::one()
    } else {
        T::from_usize(kept).unwrap() / T::from_usize(nonzero).unwrap()
    };
    Ok(Compression {
        potential: BlockPotential::uniform(lo, hi, &clamped)?,
        coefficients: coeffs,
        kept_fraction,
        dropped_magnitude: dropped,
        max_error,
    })
}

/// Smallest threshold keeping at most `fraction` of the coefficients.
pub fn threshold_for_fraction<T: Real>(coeffs: &HaarCoefficients<T>, fraction: T) -> T {
    let mut mags: Vec<T> = coeffs.coeffs.iter().map(|c| c.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let keep = (fraction * T::from_usize(mags.len()).unwrap())
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(mags.len());
    if keep == 0 {
        return mags.first().map_or(T::zero(), |&m| m + T::one());
    }
    if keep == mags.len() {
        return T::zero();
    }
    // strictly above the first dropped magnitude keeps exactly `keep` when
    // there are no ties
    let cut = mags[keep];
    let above = mags[keep - 1];
    if above > cut {
        lit::<T>(0.5) * (above + cut)
    } else {
        above
    }
}
