use std::f64::consts::PI;

use proptest::prelude::*;

use muskat::cli_io::{self, parse_config, RunConfig};
use muskat::constants::{FluidParams, Model};
use muskat::dynamics;
use muskat::experiments::{fit_decay, strip_estimate, StaircaseSpec, TrajectoryRow};
use muskat::interface_ops::QuadratureScheme;
use muskat::spectral::{self, Lattice, NormSpec, Snapshot, SpectralInterface};

fn lattice_1d(n: usize) -> Lattice {
    Lattice::new(1, n, 2.0 * PI).unwrap()
}

fn grid_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

/// Curve `Σ_{k=1}^{4} (a_k cos kx + b_k sin kx)` with small amplitudes.
fn curve_strategy() -> impl Strategy<Value = SpectralInterface> {
    (prop::collection::vec(-0.03f64..0.03, 4), prop::collection::vec(-0.03f64..0.03, 4)).prop_map(|(a, b)| {
        SpectralInterface::from_fn(lattice_1d(32), move |x| {
            (0..4).map(|k| {
                let kx = (k + 1) as f64 * x[0];
                a[k] * kx.cos() + b[k] * kx.sin()
            })
            .sum()
        })
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_data_is_hermitian(values in grid_strategy(64)) {
        let f = SpectralInterface::from_grid(lattice_1d(64), &values, 0.0).unwrap();
        prop_assert_eq!(f.invariant_defect(), 0.0);
        let lat2 = Lattice::new(2, 8, 3.0).unwrap();
        let g = SpectralInterface::from_grid(lat2, &values, 0.0).unwrap();
        prop_assert_eq!(g.invariant_defect(), 0.0);
    }

    #[test]
    fn wiener_norm_is_subadditive_and_homogeneous(
        a in grid_strategy(64),
        b in grid_strategy(64),
        s in 0.0f64..3.0,
        c in -5.0f64..5.0,
    ) {
        let lat = lattice_1d(64);
        let f = SpectralInterface::from_grid(lat, &a, 0.0).unwrap();
        let g = SpectralInterface::from_grid(lat, &b, 0.0).unwrap();
        let spec = NormSpec::wiener(s);
        let sum = spectral::wiener_norm(&f.axpy(1.0, &g).unwrap(), &spec).unwrap();
        let nf = spectral::wiener_norm(&f, &spec).unwrap();
        let ng = spectral::wiener_norm(&g, &spec).unwrap();
        prop_assert!(sum <= (nf + ng) * (1.0 + 1e-12));
        let scaled = spectral::wiener_norm(&f.scale(c), &spec).unwrap();
        prop_assert!(rel(scaled, c.abs() * nf) <= 1e-12);
    }

    #[test]
    fn norms_are_translation_invariant(values in grid_strategy(64), shift in -10.0f64..10.0, nu in 0.0f64..0.5) {
        let f = SpectralInterface::from_grid(Lattice::new(2, 8, 2.0 * PI).unwrap(), &values, 1.0).unwrap();
        let g = f.translate([shift, 0.5 * shift]);
        for spec in [NormSpec::wiener(1.0).weighted(nu, 1.0), NormSpec::wiener(0.0)] {
            prop_assert!(rel(spectral::wiener_norm(&f, &spec).unwrap(), spectral::wiener_norm(&g, &spec).unwrap()) <= 1e-12);
        }
        let h = NormSpec::sobolev(0.5);
        prop_assert!(rel(spectral::sobolev_norm(&f, &h).unwrap(), spectral::sobolev_norm(&g, &h).unwrap()) <= 1e-12);
    }

    #[test]
    fn decay_fit_ignores_amplitude(p in -3.0f64..-0.2, c in 1e-6f64..1e6, wobble in 0.0f64..0.05) {
        let t: Vec<f64> = (0..60).map(|i| 1.0 + i as f64).collect();
        let y: Vec<f64> = t.iter().map(|ti| ti.powf(p) * (1.0 + wobble * ti.sin())).collect();
        let scaled: Vec<f64> = y.iter().map(|v| c * v).collect();
        let a = fit_decay(&t, &y, (5.0, 50.0)).unwrap();
        let b = fit_decay(&t, &scaled, (5.0, 50.0)).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() <= 1e-9);
        if wobble == 0.0 {
            prop_assert!((a.exponent - p).abs() <= 1e-10);
        }
    }

    #[test]
    fn strip_estimate_ignores_amplitude(rate in 0.1f64..0.4, c in 1e-3f64..1e3) {
        let lat = lattice_1d(64);
        let f = SpectralInterface::from_fn(lat, |x| {
            (1..32).map(|k| (-rate * k as f64).exp() * (k as f64 * x[0] + 0.3 * k as f64).cos()).sum()
        });
        let a = strip_estimate(&f).unwrap();
        let b = strip_estimate(&f.scale(c)).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        prop_assert!((a - rate).abs() <= 1e-6);
    }

    #[test]
    fn staircase_borderline_is_exact_for_dyadic_exponents(
        sigma8 in -8i32..24,
        gamma8 in 0i32..64,
        delta_pow in -1i32..2,
        n in 1_000u64..1_000_000,
    ) {
        let sigma = sigma8 as f64 / 8.0;
        let gamma = gamma8 as f64 / 8.0;
        let delta = 2f64.powi(delta_pow);
        // Solve 2σ + δ(2s − 1) − γ = −1 for s; exact in binary arithmetic.
        let s = ((gamma - 1.0 - 2.0 * sigma) / delta + 1.0) / 2.0;
        let spec = StaircaseSpec { sigma_exp: sigma, delta_exp: delta, gamma_exp: gamma, s_target: s, n_shells: 10 };
        prop_assert_eq!(spec.hs_exponent(), -1.0);
        let admissible = s > 0.0 && spec.f11_exponent() < -1.0 && spec.l2_exponent() < -1.0;
        prop_assert_eq!(spec.validate().is_ok(), admissible);
        let off = StaircaseSpec { s_target: s + 1.0 / 1024.0, ..spec };
        prop_assert!(off.validate().is_err());
        if admissible && gamma > delta {
            let scaled = n as f64 * spec.hs_shell(n);
            prop_assert!((scaled / spec.hs_shell_constant() - 1.0).abs() <= 5e-2);
        }
    }

    #[test]
    fn config_serialization_round_trips(
        a_mu in -1.0f64..=1.0,
        a_rho in prop_oneof![0.01f64..10.0, -10.0f64..-0.01],
        log_n in 2u32..10,
        period in 0.1f64..1000.0,
        dt in 1e-6f64..1.0,
        eps in prop::collection::vec(1e-6f64..1.0, 3..6),
        three_d in any::<bool>(),
    ) {
        let model = if three_d { Model::ThreeD } else { Model::TwoD };
        let list: Vec<String> = eps.iter().map(|e| format!("{e:?}")).collect();
        let text = format!(
            "model={model}\nn={}\na_mu={a_mu:?}\na_rho={a_rho:?}\nperiod={period:?}\ndt_max={dt:?}\neps_list={}\n",
            1usize << log_n,
            list.join(",")
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.to_text(), again.to_text());
        prop_assert_eq!(cfg.a_mu, a_mu);
    }

    #[test]
    fn csv_reemission_is_byte_identical(rows in prop::collection::vec(prop::array::uniform11(any::<f64>()), 0..8), flag in any::<bool>()) {
        let rows: Vec<TrajectoryRow> = rows
            .into_iter()
            .map(|v| TrajectoryRow::from_values(v, if flag { vec!["blowup".into(), "outside_threshold".into()] } else { vec![] }))
            .collect();
        let text = cli_io::trajectory_csv(&rows);
        let back = cli_io::parse_trajectory_csv(&text).unwrap();
        prop_assert_eq!(cli_io::trajectory_csv(&back), text);
        for (a, b) in rows.iter().zip(&back) {
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(values in grid_strategy(64), t in 0.0f64..100.0) {
        let f = SpectralInterface::from_grid(Lattice::new(2, 8, 2.0 * PI).unwrap(), &values, t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        cli_io::checkpoint_write(&path, &f.to_snapshot()).unwrap();
        let back: Snapshot = cli_io::checkpoint_read(&path).unwrap();
        let g = back.to_interface().unwrap();
        prop_assert_eq!(g.time().to_bits(), t.to_bits());
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rhs_is_odd_in_a_rho(f in curve_strategy(), a_mu in -1.0f64..1.0, a_rho in 0.1f64..3.0) {
        let scheme = QuadratureScheme::default();
        let up = dynamics::rhs(&f, &FluidParams::new(a_mu, a_rho), &scheme).unwrap().total.to_grid();
        let down = dynamics::rhs(&f, &FluidParams::new(a_mu, -a_rho), &scheme).unwrap().total.to_grid();
        let defect: Vec<f64> = up.iter().zip(&down).map(|(a, b)| a + b).collect();
        prop_assert!(sup(&defect) <= 1e-12 * sup(&up).max(1e-300));
    }

    #[test]
    fn rhs_is_translation_equivariant(f in curve_strategy(), a_mu in -1.0f64..1.0, m in 1usize..31) {
        let scheme = QuadratureScheme::default();
        let params = FluidParams::new(a_mu, 1.0);
        let shift = m as f64 * f.lattice().spacing();
        let a = dynamics::rhs(&f.translate([shift, 0.0]), &params, &scheme).unwrap().total.to_grid();
        let b = dynamics::rhs(&f, &params, &scheme).unwrap().total.translate([shift, 0.0]).to_grid();
        let defect: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(sup(&defect) <= 1e-11 * sup(&a).max(1e-300));
    }

    #[test]
    fn rhs_preserves_parity_and_mean(a in prop::collection::vec(-0.03f64..0.03, 4), a_mu in -1.0f64..1.0) {
        let lat = lattice_1d(32);
        let f = SpectralInterface::from_fn(lat, |x| (0..4).map(|k| a[k] * ((k + 1) as f64 * x[0]).cos()).sum());
        let rhs = dynamics::rhs(&f, &FluidParams::new(a_mu, 1.0), &QuadratureScheme::default()).unwrap();
        let total = &rhs.total;
        let scale = total.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let odd = total.coeffs().iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        prop_assert!(odd <= 1e-12 * scale.max(1e-300));
        prop_assert_eq!(total.coeff([0, 0]).norm(), 0.0);
        prop_assert_eq!(total.invariant_defect(), 0.0);
    }
}

#[test]
fn resolution_refinement_shrinks_the_difference() {
    let params = FluidParams::new(0.5, 1.0);
    let scheme = QuadratureScheme::default();
    let stepper = dynamics::StepperConfig { t_end: 0.2, dt_max: 0.005, ..Default::default() };
    let profile = |x: [f64; 2]| 0.06 * x[0].cos() + 0.03 * (2.0 * x[0] + 0.4).sin() + 0.01 * (5.0 * x[0]).cos();
    let solve = |n: usize| {
        let mut f = SpectralInterface::from_fn(lattice_1d(n), profile);
        while f.time() < stepper.t_end {
            f = dynamics::step_with_dt(&f, &params, &scheme, &stepper, stepper.dt_max).unwrap();
        }
        f
    };
    let mut diffs = Vec::new();
    for n in [16usize, 32, 64] {
        let (a, b) = (solve(n), solve(2 * n));
        let diff = spectral::wiener_norm(&a, &NormSpec::wiener(0.0)).unwrap()
            - spectral::wiener_norm(&b, &NormSpec::wiener(0.0)).unwrap();
        diffs.push(diff.abs());
    }
    assert!(diffs[1] < diffs[0] && diffs[2] <= diffs[1], "{diffs:?}");
}

#[test]
fn unstable_run_grows_in_f11() {
    let f0 = SpectralInterface::from_fn(lattice_1d(64), |x| 1e-3 * (x[0].cos() + 0.3 * (2.0 * x[0]).sin()));
    let stepper = dynamics::StepperConfig { t_end: 0.3, ..Default::default() };
    let rec = dynamics::run(
        &f0,
        &FluidParams::new(0.3, -1.0),
        &QuadratureScheme::default(),
        &stepper,
        &dynamics::RunOptions::new(Model::TwoD),
    )
    .unwrap();
    assert!(rec.rows.windows(2).all(|w| w[1].f11 > w[0].f11));
}

#[test]
fn zero_interface_stays_zero() {
    let f0 = SpectralInterface::zeros(lattice_1d(32));
    let stepper = dynamics::StepperConfig { t_end: 0.1, ..Default::default() };
    let rec = dynamics::run(
        &f0,
        &FluidParams::new(0.5, 1.0),
        &QuadratureScheme::default(),
        &stepper,
        &dynamics::RunOptions::new(Model::TwoD),
    )
    .unwrap();
    assert!(rec.rows.iter().all(|r| r.f11 == 0.0 && r.l2 == 0.0));
    assert!(rec.rows.last().unwrap().t >= 0.1);
}

#[test]
fn run_config_defaults() {
    let d = RunConfig::default();
    assert_eq!((d.cfl_c, d.window_periods, d.nu_fraction), (0.25, 1, 0.1));
}
