use std::path::PathBuf;

use kdv_core::{
    compose_lambda,
    discretize::{cell_values, haar_compress, haar_forward, haar_inverse, threshold_for_fraction, to_blocks},
    evolve,
    oracles::{ab_by_integration, contour_residue, norming_by_ab_integration, norming_by_l2, split_step_kdv, L2Reading},
    pq_propagate, residue_b, spectral_seed, u_asymptotic, u_determinant, BlockPotential, BoundStateMethod,
    BoundStateReport, DiscreteSpectrum, DiscretizationRule, FindOptions, NormingMethod, SeedEstimates,
};
use num_complex::Complex64 as C;
use serde_json::{json, Value};

use crate::config::{norming_by_name, RunConfig};
use crate::failure::Failure;
use crate::output::{num, nums, write_csv, write_report};

/// Files written and the problems that make the run unconverged.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub problems: Vec<String>,
}

impl Outcome {
    pub fn into_result(self) -> Result<Vec<PathBuf>, Failure> {
        if self.problems.is_empty() {
            Ok(self.files)
        } else {
            Err(Failure::numerics(format!(
                "not converged: {} (reports written to {})",
                self.problems.join("; "),
                self.files
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

fn grid_metadata(pot: &BlockPotential<f64>) -> Value {
    let widths = pot.widths();
    let uniform = widths.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0].abs().max(1.0));
    let (lo, hi) = pot.support();
    json!({
        "n_blocks": widths.len(),
        "h": if uniform { widths.first().copied().map(num).unwrap_or(Value::Null) } else { Value::Null },
        "support": [lo, hi],
    })
}

fn blocks_json(pot: &BlockPotential<f64>) -> Value {
    json!({
        "depth_roots": nums(pot.depth_roots()),
        "widths": nums(pot.widths()),
        "origin": pot.origin(),
    })
}

/// Seeds and search options from the configuration.
fn seeding(cfg: &RunConfig, pot: &BlockPotential<f64>) -> Result<(SeedEstimates<f64>, FindOptions), Failure> {
    let mut options = FindOptions {
        scan_points: cfg.seeds.scan_points,
        ..FindOptions::default()
    };
    let seeds = if cfg.seeds.grid > 0 {
        spectral_seed(pot, cfg.seeds.grid, cfg.seed_domain(pot))?
    } else {
        options.exhaustive = true;
        SeedEstimates::user(vec![], pot)
    };
    Ok((seeds, options))
}

/// Bound states of `pot` with the configured seeding.
pub fn bound_states(
    cfg: &RunConfig,
    pot: &BlockPotential<f64>,
    method: BoundStateMethod,
) -> Result<BoundStateReport<f64>, Failure> {
    let (seeds, options) = seeding(cfg, pot)?;
    Ok(kdv_core::find_bound_states(pot, &seeds, method, &options)?)
}

fn max_gap(a: &[f64], b: &[f64]) -> Option<f64> {
    (a.len() == b.len()).then(|| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// `f` over `items` in contiguous chunks, one scoped thread per chunk.
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len()).max(1);
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn scatter(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (_, pot) = cfg.potential()?;
    let ks = cfg.kgrid.points();
    let evals = par_map(&ks, |&k| {
        let kc = C::new(k, 0.0);
        compose_lambda(kc, &pot).map(|lam| (pot.physical_reflection(kc, lam.reflection()), lam.transmission()))
    });
    let (mut r_re, mut r_im, mut t_re, mut t_im, mut resid) = (vec![], vec![], vec![], vec![], vec![]);
    let mut problems = Vec::new();
    for (k, e) in ks.iter().zip(evals) {
        match e {
            Ok((r, t)) => {
                r_re.push(r.re);
                r_im.push(r.im);
                t_re.push(t.re);
                t_im.push(t.im);
                resid.push((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
            }
            Err(e) => {
                problems.push(format!("k = {k}: {e}"));
                for v in [&mut r_re, &mut r_im, &mut t_re, &mut t_im, &mut resid] {
                    v.push(f64::NAN);
                }
            }
        }
    }
    let worst = resid.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let body = json!({
        "grid": grid_metadata(&pot),
        "blocks": blocks_json(&pot),
        "k": nums(&ks),
        "reflection": {"re": nums(&r_re), "im": nums(&r_im)},
        "transmission": {"re": nums(&t_re), "im": nums(&t_im)},
        "unitarity_residual": nums(&resid),
        "max_unitarity_residual": worst,
    });
    let file = write_report(&cfg.outputs, "scatter.json", "scatter", cfg, body)?;
    Ok(Outcome { files: vec![file], problems })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (_, pot) = cfg.potential()?;
    let primary = cfg.bound_method()?;
    let mut problems = Vec::new();
    let mut per_method = serde_json::Map::new();
    let mut primary_kappas = Vec::new();
    let (seeds, options) = seeding(cfg, &pot)?;
    // primary first so the others can be compared with it
    let mut order = vec![primary];
    order.extend(BoundStateMethod::ALL.iter().copied().filter(|&m| m != primary));
    for m in order {
        let rep = kdv_core::find_bound_states(&pot, &seeds, m, &options)?;
        let delta = if m == primary {
            primary_kappas = rep.kappas.clone();
            if !rep.failed_seeds.is_empty() {
                problems.push(format!("{}: no root near seeds {:?}", m.name(), rep.failed_seeds));
            }
            Some(0.0)
        } else {
            let d = max_gap(&rep.kappas, &primary_kappas);
            match d {
                Some(d) if d <= cfg.tolerances.method_agreement => {}
                Some(d) => problems.push(format!("{} differs from {} by {d:e}", m.name(), primary.name())),
                None => problems.push(format!(
                    "{} finds {} states, {} finds {}",
                    m.name(),
                    rep.kappas.len(),
                    primary.name(),
                    primary_kappas.len()
                )),
            }
            d
        };
        per_method.insert(
            m.name().to_string(),
            json!({
                "kappas": nums(&rep.kappas),
                "failed_seeds": nums(&rep.failed_seeds),
                "rejected_exceptional": nums(&rep.rejected_exceptional),
                "max_delta_from_primary": delta.map(num),
            }),
        );
    }

    let mut norming = serde_json::Map::new();
    let requested = cfg.norming_method()?;
    let mut values: Vec<Option<Vec<f64>>> = Vec::new();
    for name in ["residue", "ab"] {
        let method = norming_by_name(name, cfg.eta)?;
        let entry = match kdv_core::norming_constants(&pot, &primary_kappas, method) {
            Ok(s) => {
                values.push(Some(s.norming().to_vec()));
                json!({"c2": nums(s.norming())})
            }
            Err(e) => {
                if method.name() == requested.name() {
                    problems.push(format!("norming ({name}): {e}"));
                }
                values.push(None);
                json!({"error": e.to_string()})
            }
        };
        norming.insert(name.to_string(), entry);
    }
    let norming_delta = match (&values[0], &values[1]) {
        (Some(a), Some(b)) => a
            .iter()
            .zip(b)
            .map(|(x, y)| num((x - y).abs() / x.abs()))
            .collect::<Vec<_>>()
            .into(),
        _ => Value::Null,
    };

    let body = json!({
        "grid": grid_metadata(&pot),
        "primary_method": primary.name(),
        "norming_method": requested.name(),
        "eta": cfg.eta,
        "seeds": nums(&seeds.kappas_guess),
        "kappas": nums(&primary_kappas),
        "methods": per_method,
        "norming": norming,
        "norming_relative_delta": norming_delta,
    });
    let file = write_report(&cfg.outputs, "spectrum.json", "spectrum", cfg, body)?;
    Ok(Outcome { files: vec![file], problems })
}

/// Primary bound states and norming constants.
fn discrete_spectrum(cfg: &RunConfig, pot: &BlockPotential<f64>) -> Result<(DiscreteSpectrum<f64>, Vec<String>), Failure> {
    let rep = bound_states(cfg, pot, cfg.bound_method()?)?;
    let mut problems = Vec::new();
    if !rep.failed_seeds.is_empty() {
        problems.push(format!("no root near seeds {:?}", rep.failed_seeds));
    }
    let spec = kdv_core::norming_constants(pot, &rep.kappas, cfg.norming_method()?)?;
    Ok((spec.with_bound_state_method(cfg.bound_method()?), problems))
}

/// Linear interpolation of a periodic grid sample; `NaN` outside it.
fn resample(xs: &[f64], u: &[f64], at: &[f64]) -> Vec<f64> {
    let (Some(&lo), Some(&last)) = (xs.first(), xs.last()) else {
        return vec![f64::NAN; at.len()];
    };
    let h = if xs.len() > 1 { xs[1] - xs[0] } else { 1.0 };
    let hi = last + h;
    at.iter()
        .map(|&x| {
            if x < lo || x > hi {
                return f64::NAN;
            }
            let s = (x - lo) / h;
            let j = (s.floor() as usize).min(xs.len() - 1);
            let frac = s - j as f64;
            let next = u[(j + 1) % u.len()];
            u[j] * (1.0 - frac) + next * frac
        })
        .collect()
}

fn linf(a: &[f64], b: &[f64]) -> Value {
    let gap = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    num(gap)
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (profile, pot) = cfg.potential()?;
    let (spec, problems) = discrete_spectrum(cfg, &pot)?;
    let xs = cfg.xgrid.points();
    let at_time = |&t: &f64| -> Result<_, kdv_core::Error> {
        let train = evolve(&spec, t)?;
        let ua = u_asymptotic(&train, &xs);
        let ud = u_determinant(&spec, t, &xs, cfg.tolerances.dx)?;
        let split = match &cfg.splitstep {
            Some(s) => {
                let run = split_step_kdv(&profile, t, s.dt, s.grid, s.domain.map(|[a, b]| (a, b)))?;
                Some((resample(&run.xs, &run.u, &xs), run))
            }
            None => None,
        };
        Ok((train, ua, ud, split))
    };
    let results = par_map(&cfg.times, at_time);
    let mut files = Vec::new();
    let mut per_time = Vec::new();
    for (j, (&t, r)) in cfg.times.iter().zip(results).enumerate() {
        let (train, ua, ud, split) = r.map_err(|e| Failure::numerics(format!("t = {t}: {e}")))?;
        let name = format!("solution_{j:03}.csv");
        let file = match &split {
            Some((us, _)) => write_csv(
                &cfg.outputs,
                &name,
                &["x", "u_asymptotic", "u_determinant", "u_splitstep"],
                &[&xs, &ua, &ud, us],
            )?,
            None => write_csv(&cfg.outputs, &name, &["x", "u_asymptotic", "u_determinant"], &[&xs, &ua, &ud])?,
        };
        files.push(file);
        let mut gaps = json!({"asymptotic_determinant": linf(&ua, &ud)});
        let mut entry = json!({
            "t": t,
            "file": name,
            "centers": nums(&train.centers()),
            "amplitudes": nums(&train.amplitudes()),
            "phases": nums(&train.phases),
        });
        if let Some((us, run)) = &split {
            gaps["asymptotic_splitstep"] = linf(&ua, us);
            gaps["determinant_splitstep"] = linf(&ud, us);
            entry["splitstep"] = json!({
                "steps": run.steps,
                "mass": [run.mass.0, run.mass.1],
                "energy": [run.energy.0, run.energy.1],
            });
        }
        entry["linf_gaps"] = gaps;
        per_time.push(entry);
    }
    let body = json!({
        "grid": grid_metadata(&pot),
        "kappas": nums(spec.kappas()),
        "norming": nums(spec.norming()),
        "times": per_time,
    });
    files.insert(0, write_report(&cfg.outputs, "solve.json", "solve", cfg, body)?);
    Ok(Outcome { files, problems })
}

pub fn haar(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let profile = cfg.profile()?;
    let level = cfg.haar.level;
    if level > 24 {
        return Err(Failure::invalid(format!("haar.level = {level} is too large")));
    }
    let values = cell_values(&profile, 1usize << level, DiscretizationRule::CellAverage)?;
    let coeffs = haar_forward(&values)?;
    let back = haar_inverse(&coeffs)?;
    let round_trip = values.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let threshold = match (cfg.haar.threshold, cfg.haar.keep_fraction) {
        (Some(t), _) => t,
        (None, Some(f)) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(Failure::invalid(format!("haar.keep_fraction = {f} must lie in [0, 1]")));
            }
            threshold_for_fraction(&coeffs, f)
        }
        (None, None) => 0.0,
    };
    let comp = haar_compress(&profile, level, threshold)?;
    let nonzero = |c: &[f64]| c.iter().filter(|v| **v != 0.0).count();
    let mut problems = Vec::new();
    let mut body = json!({
        "level": level,
        "threshold": threshold,
        "coefficients": nums(&coeffs.coeffs),
        "nonzero_before": nonzero(&coeffs.coeffs),
        "nonzero_after": nonzero(&comp.coefficients.coeffs),
        "kept_fraction": comp.kept_fraction,
        "dropped_magnitude": comp.dropped_magnitude,
        "max_reconstruction_error": comp.max_error,
        "round_trip_error": round_trip,
    });
    if cfg.haar.respectrum {
        let full = to_blocks(&profile, 1usize << level, DiscretizationRule::CellAverage)?;
        let method = cfg.bound_method()?;
        let a = bound_states(cfg, &full, method)?;
        let b = bound_states(cfg, &comp.potential, method)?;
        let delta = max_gap(&a.kappas, &b.kappas);
        if delta.is_none() {
            problems.push(format!(
                "compressed potential has {} states, uncompressed {}",
                b.kappas.len(),
                a.kappas.len()
            ));
        }
        body["spectrum"] = json!({
            "method": method.name(),
            "uncompressed": nums(&a.kappas),
            "compressed": nums(&b.kappas),
            "max_delta": delta.map(num),
        });
    }
    let file = write_report(&cfg.outputs, "haar.json", "haar", cfg, body)?;
    Ok(Outcome { files: vec![file], problems })
}

/// Library results against the independent oracles.
pub fn compare(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (_, pot) = cfg.potential()?;
    let rep = bound_states(cfg, &pot, cfg.bound_method()?)?;
    let step = cfg.tolerances.ode_step;
    let mut problems = Vec::new();
    if !rep.failed_seeds.is_empty() {
        problems.push(format!("no root near seeds {:?}", rep.failed_seeds));
    }

    let mut states = Vec::new();
    for (n, &kappa) in rep.kappas.iter().enumerate() {
        let text = |r: Result<f64, kdv_core::Error>| match r {
            Ok(v) => num(v),
            Err(e) => json!({"error": e.to_string()}),
        };
        let residue = kdv_core::norming_from_residue(kappa, &pot);
        let ab = kdv_core::norming_constants(&pot, &[kappa], NormingMethod::AbRatio { eta: cfg.eta }).map(|s| s.norming()[0]);
        let ab_ode = norming_by_ab_integration(kappa, &pot, step, cfg.eta);
        let l2 = norming_by_l2(kappa, &pot, step).map(|l| l.value(L2Reading::InverseSquare));
        // circle around iκ clear of the neighbouring poles
        let gap = rep
            .kappas
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .fold(kappa, |m, (_, &x)| m.min((x - kappa).abs()));
        let contour = contour_residue(
            |k| pq_propagate(k, &pot, false).map(|s| s.b()).unwrap_or(C::new(f64::NAN, f64::NAN)),
            C::new(0.0, kappa),
            0.3 * gap,
            256,
        );
        let closed = residue_b(kappa, &pot);
        let contour_delta = match (&contour, &closed) {
            (Ok(c), Ok(r)) => json!({
                "relative_delta": num((c.value - *r).norm() / r.norm().max(1.0)),
                "doubling_change": num(c.doubling_change),
                "converged": c.converged,
            }),
            (Err(e), _) => json!({"error": e.to_string()}),
            (_, Err(e)) => json!({"error": e.to_string()}),
        };
        states.push(json!({
            "kappa": kappa,
            "c2_residue": text(residue),
            "c2_ab_ratio": text(ab),
            "c2_ab_integration": text(ab_ode),
            "c2_l2_inverse_square": text(l2),
            "residue_b": closed.as_ref().map(|r| json!([r.re, r.im])).unwrap_or(Value::Null),
            "contour_residue": contour_delta,
        }));
    }

    let mut scattering = Vec::new();
    for k in cfg.kgrid.points().into_iter().step_by((cfg.kgrid.count / 10).max(1)) {
        let kc = C::new(k, 0.0);
        let (Ok(lam), Ok((a, b))) = (compose_lambda(kc, &pot), ab_by_integration(kc, &pot, step)) else {
            problems.push(format!("k = {k}: scattering oracle failed"));
            continue;
        };
        let b_lam = lam.b() * (C::new(0.0, -2.0) * kc * pot.origin()).exp();
        scattering.push(json!({
            "k": k,
            "a_delta": (a - lam.a()).norm(),
            "b_delta": (b - b_lam).norm(),
        }));
    }

    let body = json!({
        "grid": grid_metadata(&pot),
        "ode_step": step,
        "kappas": nums(&rep.kappas),
        "bound_states": states,
        "scattering": scattering,
    });
    let file = write_report(&cfg.outputs, "compare.json", "compare", cfg, body)?;
    Ok(Outcome { files: vec![file], problems })
}
