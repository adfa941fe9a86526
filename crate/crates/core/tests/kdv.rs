use kdv_core::discretize::sech2;
use kdv_core::fragmentation::BlockPotential;
use kdv_core::kdv::{evolve, u_asymptotic, u_determinant};
use kdv_core::spectrum::{norming_constants, DiscreteSpectrum, NormingMethod};
use kdv_core::scattering::{block_bound_states, BlockWell};
use proptest::prelude::*;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

fn trapezoid(xs: &[f64], u: &[f64]) -> f64 {
    xs.windows(2).zip(u.windows(2)).map(|(x, u)| 0.5 * (x[1] - x[0]) * (u[0] + u[1])).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_soliton_is_exact(kappa in 0.3f64..2.5, c2 in 1e-3f64..50.0, t in 0.0f64..1.5) {
        let s = DiscreteSpectrum::from_data(vec![kappa], vec![c2]).unwrap();
        let train = evolve(&s, t).unwrap();
        let centre = train.centers()[0];
        let xs = grid(centre - 6.0 / kappa, centre + 6.0 / kappa, 41);
        let ua = u_asymptotic(&train, &xs);
        let ud = u_determinant(&s, t, &xs, 1e-3).unwrap();
        // x₀ from c²: e^{2κx₀} = c²/(2κ)
        let x0 = (c2 / (2.0 * kappa)).ln() / (2.0 * kappa);
        for ((&x, a), d) in xs.iter().zip(&ua).zip(&ud) {
            let exact = -2.0 * kappa * kappa * sech2(kappa * (x - x0 - 4.0 * kappa * kappa * t));
            prop_assert!((a - exact).abs() < 1e-10 * kappa * kappa);
            prop_assert!((d - exact).abs() < 1e-5 * kappa.powi(4).max(1.0), "{x}: {d} vs {exact}");
        }
    }
}

#[test]
fn mass_is_conserved() {
    let s = DiscreteSpectrum::from_data(vec![1.6, 1.1, 0.5], vec![0.2, 0.7, 0.3]).unwrap();
    let mass = -4.0 * (1.6 + 1.1 + 0.5);
    for t in [0.0, 0.5, 2.0] {
        let xs = grid(-40.0, 4.0 * 1.6f64.powi(2) * t + 40.0, 20001);
        let u = u_determinant(&s, t, &xs, 1e-3).unwrap();
        let m = trapezoid(&xs, &u);
        assert!((m - mass).abs() < 1e-4, "t = {t}: {m}");
    }
}

#[test]
fn deeper_solitons_end_up_in_front() {
    let well = BlockWell::<f64>::at_origin(2.0, 4.0).unwrap();
    let kappas = block_bound_states(&well);
    let pot = BlockPotential::single(2.0, 4.0).unwrap();
    let spec = norming_constants(&pot, &kappas, NormingMethod::Residue).unwrap();
    let train = evolve(&spec, 3.0).unwrap();
    let centres = train.centers();
    assert!(centres.windows(2).all(|w| w[0] > w[1]), "{centres:?}");
    // each peak of the soliton sum sits at its centre with depth −2κ²
    let u = u_asymptotic(&train, &centres);
    for ((uk, k), amp) in u.iter().zip(&train.kappas).zip(train.amplitudes()) {
        assert!((uk - amp).abs() < 1e-6 * k * k, "{uk} vs {amp}");
    }
}
