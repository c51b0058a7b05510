//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p metacrystal --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use metacrystal::band::DispersionSpec;
use metacrystal::cavity::{self, CavityConfig, CavityField, GratingProfile, InjectionSpec, MaskProfile, RoundTripMap};
use metacrystal::ensemble;
use metacrystal::lattice::{self, LatticeScenario, PacketSpec, PotentialKind, PotentialProfile, Propagator};
use metacrystal::scenario;
use num_complex::Complex64;
use serde_json::Value;

fn verdict(id: u32, title: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn scenario_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn caption_packet() -> PacketSpec {
    PacketSpec {
        center: -20.0,
        sigma_sq: 16.0,
        k0a: FRAC_PI_2,
    }
}

fn free_run(band: DispersionSpec, packet: PacketSpec, duration: f64) -> lattice::Trajectory {
    LatticeScenario {
        sites: 256,
        band,
        packet,
        potential: PotentialKind::None,
        duration,
        dt: 0.01,
        sample_every: 10,
        propagator: Propagator::SplitStep,
        keep_snapshots: true,
    }
    .run()
    .unwrap()
}

#[test]
fn criterion_01_hopping_closed_form() {
    let j = 1.0;
    let hops = DispersionSpec::sawtooth(j, 1.0).unwrap().hoppings(64).unwrap();
    let mut worst = hops.get(0).norm();
    for n in (-64i64..=64).filter(|&n| n != 0) {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        // (−1)^(n+1) J / (π i n)
        let expected = Complex64::new(sign * j / (PI * n as f64), 0.0) / Complex64::i();
        worst = worst.max((hops.get(n) - expected).norm());
    }
    let e = DispersionSpec::sawtooth(j, 1.0).unwrap().hoppings(200).unwrap().reconstruct(FRAC_PI_2).unwrap();
    let pass = worst <= 1e-15 && (e - 0.5 * j).abs() <= 2e-3;
    verdict(
        1,
        "hopping closed form",
        pass,
        format!("max |J_n - closed form| = {worst:.2e} (<= 1e-15); E_200(pi/2) = {e:.6} (|err| = {:.2e} <= 2e-3)", (e - 0.5).abs()),
    );
}

#[test]
fn criterion_02_group_velocities() {
    let saw = free_run(DispersionSpec::sawtooth(1.0, 1.0).unwrap(), caption_packet(), 20.0)
        .com_slope(0.0, 20.0)
        .unwrap();
    // Group velocity of the sinusoidal band is a narrow-band quantity: a packet of
    // width sigma_sq has mean velocity J sin(k0 a) exp(-1/(2 sigma_sq)).
    let narrow = PacketSpec { sigma_sq: 64.0, ..caption_packet() };
    let sin_narrow = free_run(DispersionSpec::sinusoidal(1.0, 1.0).unwrap(), narrow, 20.0)
        .com_slope(0.0, 20.0)
        .unwrap();
    let sin_caption = free_run(DispersionSpec::sinusoidal(1.0, 1.0).unwrap(), caption_packet(), 20.0)
        .com_slope(0.0, 20.0)
        .unwrap();
    let caption_expected = (-1.0f64 / 32.0).exp();
    let saw_err = (saw * PI - 1.0).abs();
    let sin_err = (sin_narrow - 1.0).abs();
    let pass = saw_err <= 0.01 && sin_err <= 0.01 && (sin_caption - caption_expected).abs() <= 1e-3;
    verdict(
        2,
        "group velocities",
        pass,
        format!(
            "sawtooth slope {saw:.6} (rel err {saw_err:.2e}); sinusoidal slope {sin_narrow:.6} at sigma_sq=64 (rel err {sin_err:.2e}); caption packet {sin_caption:.6} vs J exp(-1/32) = {caption_expected:.6}"
        ),
    );
}

#[test]
fn criterion_03_dispersionless_sawtooth() {
    let traj = free_run(DispersionSpec::sawtooth(1.0, 1.0).unwrap(), caption_packet(), 50.0);
    let s0 = traj.snapshot_near(0.0).unwrap().spread().unwrap();
    let s1 = traj.final_state().unwrap().spread().unwrap();
    let drift = (s1 / s0 - 1.0).abs();
    verdict(
        3,
        "dispersionless sawtooth transport",
        drift < 0.02,
        format!("spread {s0:.6} -> {s1:.6} over t = 50, drift {drift:.2e} (< 2e-2)"),
    );
}

fn golden() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig2a_dense.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn criterion_04_defect_robustness() {
    let g = golden();
    let mut lines = Vec::new();
    let mut at = |band: &str, t: f64| -> (f64, f64) {
        let cfg = scenario::parse_config(scenario_file(&format!("fig2a_{band}.json"))).unwrap();
        let traj = cfg.lattice.as_ref().unwrap().to_scenario(cfg.seed, cfg.sample_every).unwrap().run().unwrap();
        let s = lattice::transmission_reflection(&traj, 0, t).unwrap();
        let oracle = g[band]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["t"].as_f64() == Some(t))
            .expect("golden entry");
        let gap = (s.transmitted - oracle["transmission"].as_f64().unwrap())
            .abs()
            .max((s.reflected - oracle["reflection"].as_f64().unwrap()).abs());
        assert!(gap < 1e-4, "split-step departs from the dense oracle by {gap:e}");
        lines.push(format!("{band} t={t}: T={:.4} R={:.4}", s.transmitted, s.reflected));
        (s.transmitted, s.reflected)
    };
    let (saw_t, saw_r) = at("sawtooth", 60.0);
    let (_, sin_r) = at("sinusoidal", 60.0);
    // Same scenario once the sawtooth packet has cleared the defect.
    let (late_t, late_r) = at("sawtooth", 100.0);
    let pass = saw_t >= 0.95 && saw_r <= 0.02 && sin_r >= 0.1;
    println!(
        "criterion  4 supplementary: sawtooth at t=100 T={late_t:.6} R={late_r:.2e} ({})",
        if late_t >= 0.95 && late_r <= 0.02 { "meets thresholds" } else { "misses thresholds" }
    );
    verdict(
        4,
        "defect robustness at t = 60",
        pass,
        format!("{} (need sawtooth T>=0.95, R<=0.02; sinusoidal R>=0.1)", lines.join("; ")),
    );
}

#[test]
fn criterion_05_disorder_ensemble() {
    let run = |name: &str| {
        let cfg = scenario::parse_config(scenario_file(name)).unwrap();
        ensemble::run_ensemble(&cfg.ensemble_spec().unwrap(), None).unwrap()
    };
    let saw = run("fig2b_sawtooth.json");
    let sin = run("fig2b_sinusoidal.json");
    assert_eq!(saw.records.len(), 20);
    let saw_slope = saw.stat("com_slope[0,40]").unwrap().mean;
    let early = sin.stat("com_slope[0,10]").unwrap().mean;
    let late = sin.stat("com_slope[20,40]").unwrap().mean;
    let ratio = saw_slope * PI;
    let pass = (ratio - 1.0).abs() <= 0.1 && late < 0.5 * early;
    verdict(
        5,
        "disorder ensemble",
        pass,
        format!("sawtooth mean slope {saw_slope:.5} = {ratio:.4} J/pi; sinusoidal early {early:.4}, late {late:.4}"),
    );
}

fn oracle_gap(band: &DispersionSpec, dt: f64) -> f64 {
    let sites = 128;
    let state = lattice::gaussian_packet(sites, -20.0, 16.0, FRAC_PI_2).unwrap();
    let pot = PotentialProfile::build(PotentialKind::SiteDelta { site: 0, strength: 2.0 }, sites, state.origin()).unwrap();
    let h = lattice::build_hamiltonian(&band.ring_hoppings(sites).unwrap(), &pot, sites).unwrap();
    let exact = lattice::propagate_dense(&state, &h, 10.0).unwrap();
    let traj = lattice::propagate_splitstep(&state, band, &pot, 10.0, dt, 1000, false).unwrap();
    traj.final_state().unwrap().max_distance(&exact)
}

#[test]
fn criterion_06_propagator_cross_validation() {
    let mut parts = Vec::new();
    let mut pass = true;
    for band in [DispersionSpec::sawtooth(1.0, 1.0).unwrap(), DispersionSpec::sinusoidal(1.0, 1.0).unwrap()] {
        let gap = oracle_gap(&band, 1e-3);
        let coarse = oracle_gap(&band, 0.02);
        let fine = oracle_gap(&band, 0.01);
        let order = (coarse / fine).log2();
        pass &= gap <= 1e-6 && (order - 2.0).abs() <= 0.5;
        parts.push(format!("{}: gap {gap:.2e} at dt=1e-3, order {order:.3}", band.name()));
    }
    verdict(6, "propagator cross-validation", pass, parts.join("; "));
}

#[test]
fn criterion_07_unitarity() {
    let band = DispersionSpec::sawtooth(1.0, 1.0).unwrap();
    let state = lattice::gaussian_packet(256, -20.0, 16.0, FRAC_PI_2).unwrap();
    let pot = PotentialProfile::build(PotentialKind::SiteDelta { site: 0, strength: 2.0 }, 256, state.origin()).unwrap();
    let traj = lattice::propagate_splitstep(&state, &band, &pot, 100.0, 0.01, 100, false).unwrap();
    let lattice_drift = traj.norm_drift();

    let cfg = CavityConfig::reference(
        GratingProfile::Sawtooth { amplitude: 0.5 },
        MaskProfile::GaussianWell {
            depth: 0.2,
            center: 1600e-6,
            width: 600e-6,
        },
    );
    let inj = InjectionSpec::reference();
    let a = cfg.metacrystal_period();
    let mut field = CavityField::from_fn(&cfg, |x| inj.profile(x, a));
    let mut map = RoundTripMap::new(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let before = field.power();
        map.apply(&mut field).unwrap();
        worst = worst.max((field.power() / before - 1.0).abs());
    }
    let pass = lattice_drift <= 1e-10 && worst <= 1e-12;
    verdict(
        7,
        "unitarity",
        pass,
        format!("lattice drift {lattice_drift:.2e} over 1e4 steps (<= 1e-10); cavity per-trip drift {worst:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_08_cavity_constants() {
    let a = cavity::metacrystal_period(633e-9, 0.02, 30e-6).unwrap();
    let three = format!("{a:.2e}");
    let cfg = CavityConfig::reference(GratingProfile::Sawtooth { amplitude: 0.5 }, MaskProfile::None);
    let run = cavity::run_driven(&cfg, &InjectionSpec::reference(), 100, None).unwrap();
    let ratio = run.mean_power_ratio(50, 100).unwrap();
    let pass = three == "4.22e-4" && (0.975..=0.985).contains(&ratio);
    verdict(
        8,
        "cavity constants",
        pass,
        format!("a = {a:.6e} m ({three}); mean power ratio over trips 50-100 = {ratio:.6} (target 0.9801)"),
    );
}

#[test]
fn criterion_09_lattice_cavity_correspondence() {
    let mut parts = Vec::new();
    let mut pass = true;
    for (grating, label) in [
        (GratingProfile::Sawtooth { amplitude: 0.05 }, "sawtooth"),
        (GratingProfile::Sinusoidal { amplitude: 0.05 }, "sinusoidal"),
    ] {
        let cfg = CavityConfig::reference(grating, MaskProfile::None);
        let a = cfg.metacrystal_period();
        let spec = cfg.grating.dispersion(a).unwrap();
        let (periods, _) = cfg.lattice_alignment().unwrap();
        let c = cavity::correspondence_check(&cfg, &spec, &PotentialProfile::none(periods).unwrap(), &InjectionSpec::reference(), 100)
            .unwrap();
        pass &= c.overlap >= 0.95;
        parts.push(format!("{label}: overlap {:.6}, max error {:.2e}", c.overlap, c.max_error));
    }
    verdict(9, "lattice-cavity correspondence", pass, parts.join("; "));
}

#[test]
fn criterion_10_cavity_defect_reproduction() {
    let well = MaskProfile::GaussianWell {
        depth: 0.2,
        center: 1600e-6,
        width: 600e-6,
    };
    let inj = InjectionSpec::reference();
    let slope = |mask: MaskProfile| {
        let cfg = CavityConfig::reference(GratingProfile::Sawtooth { amplitude: 0.5 }, mask);
        let run = cavity::run_driven(&cfg, &inj, 110, None).unwrap();
        run.centroid_slope(50, 110).unwrap() / cfg.metacrystal_period()
    };
    let free = slope(MaskProfile::None);
    let defect = slope(well.clone());
    let retained = defect / free;

    // The sinusoidal packet wraps around the window after ~80 trips; probe at 60.
    let cfg = CavityConfig::reference(GratingProfile::Sinusoidal { amplitude: 0.5 }, well);
    let run = cavity::run_driven(&cfg, &inj, 60, None).unwrap();
    let backward = run.final_field.power_fraction(&run.positions, |x| x < -2.0 * inj.waist);
    let pass = retained >= 0.9 && backward >= 0.1;
    verdict(
        10,
        "cavity defect reproduction",
        pass,
        format!(
            "sawtooth slope {defect:.4} a/trip vs free {free:.4} (retained {retained:.4} >= 0.9); sinusoidal backward lobe {backward:.4} of power at trip 60 (>= 0.1)"
        ),
    );
}
