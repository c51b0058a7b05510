//! Independent cross-checks between propagators, bands and the cavity map.

use std::f64::consts::{FRAC_PI_2, PI};

use metacrystal::band::DispersionSpec;
use metacrystal::cavity::{self, CavityConfig, CavityField, CavityGrid, GratingProfile, InjectionSpec, MaskProfile};
use metacrystal::lattice::{self, DenseEvolution, PotentialKind, PotentialProfile};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn defect(sites: usize, origin: i64) -> PotentialProfile {
    PotentialProfile::build(PotentialKind::SiteDelta { site: 0, strength: 2.0 }, sites, origin).unwrap()
}

#[test]
fn sawtooth_ring_spectrum_is_the_band_on_the_dft_grid() {
    for sites in [16usize, 64, 128] {
        let spec = DispersionSpec::sawtooth(1.0, 1.0).unwrap();
        let h = lattice::build_hamiltonian(&spec.ring_hoppings(sites).unwrap(), &PotentialProfile::none(sites).unwrap(), sites).unwrap();
        let mut got: Vec<f64> = DenseEvolution::new(&h).unwrap().energies().iter().copied().collect();
        let mut want: Vec<f64> = lattice::dft_wavenumbers(sites, 1.0).iter().map(|&k| spec.evaluate(k).unwrap()).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        // Closed form on the grid: E_j = 2 j / N for j in [-N/2, N/2), with the edge at 0.
        let mut direct: Vec<f64> = (-(sites as i64) / 2..sites as i64 / 2)
            .map(|j| if j == -(sites as i64) / 2 { 0.0 } else { 2.0 * j as f64 / sites as f64 })
            .collect();
        direct.sort_by(f64::total_cmp);
        for ((g, w), d) in got.iter().zip(&want).zip(&direct) {
            assert!((g - w).abs() < 1e-10, "N={sites}: {g} vs {w}");
            assert!((w - d).abs() < 1e-14);
        }
    }
}

#[test]
fn truncated_table_misses_the_grid_spectrum() {
    // Cutting the hopping series at M = N/2 leaves a Gibbs overshoot near the
    // zone edge that does not shrink with N; only the ring-periodized table
    // reproduces the band on the grid.
    let spec = DispersionSpec::sawtooth(1.0, 1.0).unwrap();
    let gap = |sites: usize| {
        let none = PotentialProfile::none(sites).unwrap();
        let e = |hops| {
            let h = lattice::build_hamiltonian(&hops, &none, sites).unwrap();
            let mut v: Vec<f64> = DenseEvolution::new(&h).unwrap().energies().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let (a, b) = (e(spec.hoppings(sites / 2).unwrap()), e(spec.ring_hoppings(sites).unwrap()));
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let (g32, g128) = (gap(32), gap(128));
    assert!(g32 > 0.1 && g128 > 0.1, "{g32} -> {g128}");
}

#[test]
fn free_sawtooth_splitstep_matches_dense() {
    let sites = 128;
    let spec = DispersionSpec::sawtooth(1.0, 1.0).unwrap();
    let state = lattice::gaussian_packet(sites, -20.0, 16.0, FRAC_PI_2).unwrap();
    let none = PotentialProfile::none(sites).unwrap();
    let h = lattice::build_hamiltonian(&spec.ring_hoppings(sites).unwrap(), &none, sites).unwrap();
    let exact = lattice::propagate_dense(&state, &h, 10.0).unwrap();
    let traj = lattice::propagate_splitstep(&state, &spec, &none, 10.0, 0.05, 1000, false).unwrap();
    assert!(traj.final_state().unwrap().max_distance(&exact) <= 1e-10);
}

#[test]
fn strang_error_ratio() {
    for spec in [DispersionSpec::sawtooth(1.0, 1.0).unwrap(), DispersionSpec::sinusoidal(1.0, 1.0).unwrap()] {
        let sites = 128;
        let state = lattice::gaussian_packet(sites, -20.0, 16.0, FRAC_PI_2).unwrap();
        let pot = defect(sites, state.origin());
        let h = lattice::build_hamiltonian(&spec.ring_hoppings(sites).unwrap(), &pot, sites).unwrap();
        let exact = lattice::propagate_dense(&state, &h, 10.0).unwrap();
        let err = |dt: f64| {
            let traj = lattice::propagate_splitstep(&state, &spec, &pot, 10.0, dt, 100_000, false).unwrap();
            traj.final_state().unwrap().max_distance(&exact)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.5..=4.5).contains(&ratio), "{}: ratio {ratio}", spec.name());
    }
}

#[test]
fn dense_evolution_trivial_cases() {
    let sites = 8;
    let state = lattice::gaussian_packet(sites, 0.5, 2.0, 0.3).unwrap();
    let zero = DMatrix::<Complex64>::zeros(sites, sites);
    let same = lattice::propagate_dense(&state, &zero, 7.0).unwrap();
    assert!(same.max_distance(&state) < 1e-14);

    let u: Vec<f64> = (0..sites).map(|i| 0.3 * i as f64 - 1.0).collect();
    let h = DMatrix::from_fn(sites, sites, |r, c| if r == c { Complex64::new(u[r], 0.0) } else { Complex64::new(0.0, 0.0) });
    let out = lattice::propagate_dense(&state, &h, 2.5).unwrap();
    for i in 0..sites {
        let expected = state.amplitudes()[i] * Complex64::from_polar(1.0, -u[i] * 2.5);
        assert!((out.amplitudes()[i] - expected).norm() < 1e-13);
    }
}

#[test]
fn frozen_lattice_reflects_everything() {
    let spec = DispersionSpec::sinusoidal(0.0, 1.0).unwrap();
    let sites = 64;
    let state = lattice::gaussian_packet(sites, -15.0, 4.0, FRAC_PI_2).unwrap();
    let traj = lattice::propagate_splitstep(&state, &spec, &PotentialProfile::none(sites).unwrap(), 5.0, 0.1, 10, true).unwrap();
    let s = lattice::transmission_reflection(&traj, 0, 5.0).unwrap();
    assert!(s.transmitted < 1e-20);
    assert!((s.reflected - 1.0).abs() < 1e-12);
    assert!((s.transmitted + s.reflected + s.trapped - 1.0).abs() < 1e-12);
}

fn small_cavity(grating: GratingProfile) -> CavityConfig {
    let mut cfg = CavityConfig::reference(grating, MaskProfile::None);
    let a = cfg.metacrystal_period();
    cfg.grid = CavityGrid { samples: 1024, window: 16.0 * a };
    cfg
}

#[test]
fn cavity_kinetic_factor_matches_band() {
    let j = 0.5;
    let cfg = small_cavity(GratingProfile::Sawtooth { amplitude: j });
    let a = cfg.metacrystal_period();
    let spec = DispersionSpec::sawtooth(j, a).unwrap();
    let (periods, _) = cfg.lattice_alignment().unwrap();
    let window = cfg.grid.window;
    for q in -(periods as i64) / 2..periods as i64 / 2 {
        let k = 2.0 * PI * q as f64 / window;
        let field = CavityField::from_fn(&cfg, |x| Complex64::from_polar(1.0, k * x));
        let out = cavity::round_trip(&field, &cfg).unwrap();
        let phase = Complex64::from_polar(1.0, -spec.evaluate(k).unwrap());
        for (o, i) in out.samples().iter().zip(field.samples()) {
            assert!((o - i * phase).norm() < 1e-12, "q={q}");
        }
    }
}

#[test]
fn driven_map_limits() {
    let cfg = small_cavity(GratingProfile::Sinusoidal { amplitude: 0.3 });
    let a = cfg.metacrystal_period();
    let inj = InjectionSpec {
        center_trip: 0.0,
        ..InjectionSpec::reference()
    };
    // Dark cavity at the pulse peak: the map reduces to the injection.
    let out = cavity::driven_round_trip(&CavityField::zeros(&cfg), &cfg, &inj).unwrap();
    let positions = cfg.positions();
    for (o, &x) in out.samples().iter().zip(&positions) {
        assert!((o - inj.profile(x, a) * cfg.transmittance.sqrt()).norm() < 1e-15);
    }

    let lossless = CavityConfig { transmittance: 0.0, ..cfg.clone() };
    let field = CavityField::from_fn(&cfg, |x| inj.profile(x, a));
    let d = cavity::driven_round_trip(&field, &lossless, &inj).unwrap();
    let u = cavity::round_trip(&field, &lossless).unwrap();
    assert_eq!(d.samples(), u.samples());
}

#[test]
fn linearized_phase_is_not_unitary() {
    let mut cfg = small_cavity(GratingProfile::Sawtooth { amplitude: 0.5 });
    cfg.exact_phase = false;
    let a = cfg.metacrystal_period();
    let field = CavityField::from_fn(&cfg, |x| InjectionSpec::reference().profile(x, a));
    let out = cavity::round_trip(&field, &cfg).unwrap();
    assert!(out.power() > field.power() * 1.01);
}

#[test]
fn correspondence_rejects_strong_gratings() {
    let cfg = small_cavity(GratingProfile::Sawtooth { amplitude: 0.5 });
    let a = cfg.metacrystal_period();
    let (periods, _) = cfg.lattice_alignment().unwrap();
    let r = cavity::correspondence_check(
        &cfg,
        &DispersionSpec::sawtooth(0.5, a).unwrap(),
        &PotentialProfile::none(periods).unwrap(),
        &InjectionSpec::reference(),
        5,
    );
    assert!(matches!(r, Err(metacrystal::Error::GratingTooStrong(_))));
}

#[test]
fn correspondence_with_a_defect_mask() {
    // With a mask the cavity is a Lie splitting of the lattice step, so the
    // agreement is first order in the (small) potential.
    let mut cfg = CavityConfig::reference(
        GratingProfile::Sawtooth { amplitude: 0.05 },
        MaskProfile::GaussianWell {
            depth: 0.02,
            center: 1600e-6,
            width: 600e-6,
        },
    );
    cfg.grid = CavityGrid { samples: 4096, window: 32.0 * cfg.metacrystal_period() };
    let a = cfg.metacrystal_period();
    let pot = cfg.lattice_potential().unwrap();
    let c = cavity::correspondence_check(&cfg, &DispersionSpec::sawtooth(0.05, a).unwrap(), &pot, &InjectionSpec::reference(), 100)
        .unwrap();
    assert!(c.overlap > 0.99, "{c:?}");
    assert!(c.max_error < 0.05, "{c:?}");
}
