//! Transverse field dynamics in a 4-f self-imaging ring resonator.
//!
//! One round trip multiplies the angular spectrum of `ψ(x)` by the
//! Fourier-plane grating transmission `t₁` evaluated at `−λ f k / 2π`, then
//! multiplies the field by the image-plane mask `t₂(x)`. The grating profile
//! therefore plays the role of a band `E(k)` with period `a = λ f / A`, and the
//! mask plays the role of an on-site potential `U(x)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::band::{self, DispersionSpec};
use crate::error::{Error, Result};
use crate::lattice::{self, LatticeState, PotentialProfile};

/// Largest grating amplitude accepted by [`correspondence_check`].
pub const SMALL_PHASE_LIMIT: f64 = 0.1;

/// Real-space period `λ f / A` of the emulated lattice.
pub fn metacrystal_period(wavelength: f64, focal: f64, grating_period: f64) -> Result<f64> {
    for (name, v) in [("wavelength", wavelength), ("focal", focal), ("grating_period", grating_period)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    Ok(wavelength * focal / grating_period)
}

/// Phase profile `φ₁(x)` of the Fourier-plane grating, periodic in `A`.
#[derive(Clone, Debug, PartialEq)]
pub enum GratingProfile {
    /// `φ₁(x) = −J cos(2πx/A)`.
    Sinusoidal { amplitude: f64 },
    /// `φ₁(x) = −2J x/A` on `(−A/2, A/2)`, zero on the discontinuity.
    Sawtooth { amplitude: f64 },
    /// Values on `x = iA/n`, `i = 0..n`, linearly interpolated.
    Samples(Vec<f64>),
}

impl GratingProfile {
    pub fn phase(&self, x: f64, grating_period: f64) -> f64 {
        match self {
            GratingProfile::Sinusoidal { amplitude } => -amplitude * (2.0 * PI * x / grating_period).cos(),
            GratingProfile::Sawtooth { amplitude } => {
                let p = band::fold_fraction(-x / grating_period);
                if p.edge {
                    0.0
                } else {
                    2.0 * amplitude * p.fraction
                }
            }
            GratingProfile::Samples(values) => {
                let n = values.len();
                let u = (x / grating_period).rem_euclid(1.0) * n as f64;
                let i = (u.floor() as usize).min(n - 1);
                let w = u - i as f64;
                values[i] * (1.0 - w) + values[(i + 1) % n] * w
            }
        }
    }

    /// Largest `|φ₁|`.
    pub fn max_abs(&self) -> f64 {
        match self {
            GratingProfile::Sinusoidal { amplitude } | GratingProfile::Sawtooth { amplitude } => amplitude.abs(),
            GratingProfile::Samples(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// The band `E(k) = φ₁(−λ f k / 2π)` on a lattice of period `a`, when it has a closed form.
    pub fn dispersion(&self, period: f64) -> Option<DispersionSpec> {
        match self {
            GratingProfile::Sinusoidal { amplitude } => DispersionSpec::sinusoidal(*amplitude, period).ok(),
            GratingProfile::Sawtooth { amplitude } => DispersionSpec::sawtooth(*amplitude, period).ok(),
            GratingProfile::Samples(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GratingProfile::Sinusoidal { amplitude } | GratingProfile::Sawtooth { amplitude } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::invalid("grating.amplitude", "must be non-negative"));
                }
            }
            GratingProfile::Samples(v) => {
                if v.len() < 2 || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("grating.samples", "need at least two finite samples"));
                }
            }
        }
        Ok(())
    }
}

/// Phase profile `φ₂(x)` of the image-plane mask.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskProfile {
    None,
    /// `φ₂(x) = −depth · exp[−(x − center)²/width²]`.
    GaussianWell { depth: f64, center: f64, width: f64 },
    /// One uniform draw in `(−half_width, half_width)` per cell of width
    /// `cell`, cells centred on `x = n·cell`.
    PiecewiseDisorder { half_width: f64, cell: f64, seed: u64 },
}

impl MaskProfile {
    fn validate(&self) -> Result<()> {
        match self {
            MaskProfile::None => Ok(()),
            MaskProfile::GaussianWell { width, .. } if !(*width > 0.0) => Err(Error::invalid("mask.width", "must be positive")),
            MaskProfile::GaussianWell { .. } => Ok(()),
            MaskProfile::PiecewiseDisorder { half_width, cell, .. } => {
                if !(*cell > 0.0) {
                    return Err(Error::invalid("mask.cell", "must be positive"));
                }
                if !(*half_width >= 0.0 && half_width.is_finite()) {
                    return Err(Error::invalid("mask.half_width", "must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// `φ₂` at each position.
    pub fn sample(&self, positions: &[f64]) -> Vec<f64> {
        match self {
            MaskProfile::None => vec![0.0; positions.len()],
            MaskProfile::GaussianWell { depth, center, width } => positions
                .iter()
                .map(|x| -depth * (-((x - center) / width).powi(2)).exp())
                .collect(),
            MaskProfile::PiecewiseDisorder { half_width, cell, seed } => {
                let cell_of = |x: f64| (x / cell).round() as i64;
                let first = positions.iter().map(|&x| cell_of(x)).min().unwrap_or(0);
                let last = positions.iter().map(|&x| cell_of(x)).max().unwrap_or(0);
                let draws = lattice::uniform_disorder((last - first + 1) as usize, *half_width, *seed);
                positions.iter().map(|&x| draws[(cell_of(x) - first) as usize]).collect()
            }
        }
    }
}

/// Transverse sampling: `samples` points over a periodic window of `window` metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityGrid {
    pub samples: usize,
    pub window: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavityConfig {
    pub wavelength: f64,
    pub focal: f64,
    pub grating_period: f64,
    /// Power transmittance of the coupling mirror.
    pub transmittance: f64,
    pub grating: GratingProfile,
    pub mask: MaskProfile,
    pub grid: CavityGrid,
    /// `exp(−iφ)` when true, `1 − iφ` otherwise.
    pub exact_phase: bool,
}

impl CavityConfig {
    /// The resonator used for the one-way transport demonstrations:
    /// λ = 633 nm, f = 2 cm, A = 30 μm, T = 2 %, window of 64 periods on 8192 samples.
    pub fn reference(grating: GratingProfile, mask: MaskProfile) -> Self {
        let (wavelength, focal, grating_period) = (633e-9, 0.02, 30e-6);
        let a = wavelength * focal / grating_period;
        Self {
            wavelength,
            focal,
            grating_period,
            transmittance: 0.02,
            grating,
            mask,
            grid: CavityGrid {
                samples: 8192,
                window: 64.0 * a,
            },
            exact_phase: true,
        }
    }

    pub fn metacrystal_period(&self) -> f64 {
        self.wavelength * self.focal / self.grating_period
    }

    pub fn validate(&self) -> Result<()> {
        let a = metacrystal_period(self.wavelength, self.focal, self.grating_period)?;
        if !(self.transmittance >= 0.0 && self.transmittance < 1.0) {
            return Err(Error::invalid("transmittance", format!("must lie in [0, 1), got {}", self.transmittance)));
        }
        let n = self.grid.samples;
        if n < 1024 || !n.is_power_of_two() {
            return Err(Error::invalid("grid.samples", format!("must be a power of two >= 1024, got {n}")));
        }
        if !(self.grid.window.is_finite() && self.grid.window >= 16.0 * a) {
            return Err(Error::invalid("grid.window", "must span at least 16 lattice periods"));
        }
        self.grating.validate()?;
        self.mask.validate()
    }

    pub fn dx(&self) -> f64 {
        self.grid.window / self.grid.samples as f64
    }

    /// `x_j = −L/2 + j L/N`.
    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.grid.samples)
            .map(|j| -self.grid.window / 2.0 + j as f64 * dx)
            .collect()
    }

    /// Whole number of lattice periods in the window, when the lattice
    /// points `x = n a` fall on grid samples.
    pub fn lattice_alignment(&self) -> Result<(usize, usize)> {
        let a = self.metacrystal_period();
        let ratio = self.grid.window / a;
        let periods = ratio.round();
        if (ratio - periods).abs() > 1e-9 * ratio {
            return Err(Error::GridMisaligned(format!("window holds {ratio} periods")));
        }
        let periods = periods as usize;
        if !periods.is_multiple_of(2) || periods < 8 || !self.grid.samples.is_multiple_of(periods) {
            return Err(Error::GridMisaligned(format!(
                "{periods} periods on {} samples",
                self.grid.samples
            )));
        }
        Ok((periods, self.grid.samples / periods))
    }

    /// The mask sampled at the lattice points `x = n a`, `n = −P/2 .. P/2 − 1`.
    pub fn lattice_potential(&self) -> Result<PotentialProfile> {
        let (periods, _) = self.lattice_alignment()?;
        let a = self.metacrystal_period();
        let half = (periods / 2) as i64;
        let xs: Vec<f64> = (-half..half).map(|n| n as f64 * a).collect();
        PotentialProfile::from_values(self.mask.sample(&xs))
    }
}

/// Intracavity envelope `ψₘ(x_j)` after `m` round trips.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityField {
    samples: Vec<Complex64>,
    round_trip: u64,
    dx: f64,
}

impl CavityField {
    pub fn new(samples: Vec<Complex64>, dx: f64) -> Result<Self> {
        if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("samples", "non-finite value"));
        }
        Ok(Self {
            samples,
            round_trip: 0,
            dx,
        })
    }

    pub fn zeros(cfg: &CavityConfig) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); cfg.grid.samples],
            round_trip: 0,
            dx: cfg.dx(),
        }
    }

    /// Field equal to `profile(x_j)` on the grid of `cfg`.
    pub fn from_fn(cfg: &CavityConfig, profile: impl Fn(f64) -> Complex64) -> Self {
        Self {
            samples: cfg.positions().into_iter().map(profile).collect(),
            round_trip: 0,
            dx: cfg.dx(),
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn round_trip(&self) -> u64 {
        self.round_trip
    }

    pub fn power(&self) -> f64 {
        intracavity_power(self)
    }

    /// Intensity-weighted mean position; `None` for a dark field.
    pub fn centroid(&self, positions: &[f64]) -> Option<f64> {
        let total: f64 = self.samples.iter().map(|c| c.norm_sqr()).sum();
        (total > 0.0).then(|| {
            self.samples
                .iter()
                .zip(positions)
                .map(|(c, x)| x * c.norm_sqr())
                .sum::<f64>()
                / total
        })
    }

    /// Share of the power located at positions satisfying `pred`.
    pub fn power_fraction(&self, positions: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
        let total: f64 = self.samples.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.samples
            .iter()
            .zip(positions)
            .filter(|(_, &x)| pred(x))
            .map(|(c, _)| c.norm_sqr())
            .sum::<f64>()
            / total
    }
}

/// `Σ|ψ(x_j)|² Δx`.
pub fn intracavity_power(field: &CavityField) -> f64 {
    field.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * field.dx
}

/// Pulsed, tilted Gaussian beam `Eₘ(x) = F(m) G(x)` injected through the coupler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InjectionSpec {
    pub waist: f64,
    /// Tilt phase per lattice period, `k₀a`.
    pub tilt: f64,
    pub center_trip: f64,
    pub duration: f64,
    pub amplitude: f64,
}

impl InjectionSpec {
    /// w = 800 μm, k₀a = π/2, t₀ = 20, τ = 10, unit peak amplitude.
    pub fn reference() -> Self {
        Self {
            waist: 800e-6,
            tilt: 0.5 * PI,
            center_trip: 20.0,
            duration: 10.0,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0) {
            return Err(Error::invalid("injection.waist", "must be positive"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("injection.duration", "must be positive"));
        }
        Ok(())
    }

    /// `G(x) = amplitude · exp(−x²/w² + i k₀a x / a)`.
    pub fn profile(&self, x: f64, period: f64) -> Complex64 {
        Complex64::from_polar(
            self.amplitude * (-(x / self.waist).powi(2)).exp(),
            self.tilt * x / period,
        )
    }

    /// `F(m) = exp[−(m − t₀)²/τ²]`.
    pub fn envelope(&self, trip: f64) -> f64 {
        (-((trip - self.center_trip) / self.duration).powi(2)).exp()
    }
}

fn transmission(phase: f64, exact: bool) -> Complex64 {
    if exact {
        Complex64::from_polar(1.0, -phase)
    } else {
        Complex64::new(1.0, -phase)
    }
}

/// Precomputed round-trip operator for one configuration.
pub struct RoundTripMap {
    grating: Vec<Complex64>,
    mask: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    positions: Vec<f64>,
    transmittance: f64,
    period: f64,
}

impl RoundTripMap {
    pub fn new(cfg: &CavityConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid.samples;
        let scale = 1.0 / n as f64;
        let grating = lattice::dft_wavenumbers(n, cfg.dx())
            .into_iter()
            .map(|k| {
                let argument = -cfg.wavelength * cfg.focal * k / (2.0 * PI);
                transmission(cfg.grating.phase(argument, cfg.grating_period), cfg.exact_phase) * scale
            })
            .collect();
        let positions = cfg.positions();
        let mask = cfg
            .mask
            .sample(&positions)
            .into_iter()
            .map(|phi| transmission(phi, cfg.exact_phase))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            grating,
            mask,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            positions,
            transmittance: cfg.transmittance,
            period: cfg.metacrystal_period(),
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    fn check(&self, field: &CavityField) -> Result<()> {
        if field.samples.len() != self.grating.len() {
            return Err(Error::invalid("field", "length does not match the grid"));
        }
        Ok(())
    }

    fn propagate(&mut self, samples: &mut [Complex64]) {
        self.forward.process_with_scratch(samples, &mut self.scratch);
        for (x, t) in samples.iter_mut().zip(&self.grating) {
            *x *= t;
        }
        self.inverse.process_with_scratch(samples, &mut self.scratch);
        for (x, t) in samples.iter_mut().zip(&self.mask) {
            *x *= t;
        }
    }

    /// `ψ ← t₂ · t₁[ψ]`.
    pub fn apply(&mut self, field: &mut CavityField) -> Result<()> {
        self.check(field)?;
        self.propagate(&mut field.samples);
        field.round_trip += 1;
        Ok(())
    }

    /// `ψ ← t₂ · t₁[ψ] + √T F(m) G − (T/2) ψ` with `m` the current trip index.
    pub fn apply_driven(&mut self, field: &mut CavityField, inj: &InjectionSpec) -> Result<()> {
        self.check(field)?;
        let previous = field.samples.clone();
        self.propagate(&mut field.samples);
        let drive = self.transmittance.sqrt() * inj.envelope(field.round_trip as f64);
        let loss = self.transmittance / 2.0;
        for ((x, old), pos) in field.samples.iter_mut().zip(&previous).zip(&self.positions) {
            *x += inj.profile(*pos, self.period) * drive - old * loss;
        }
        field.round_trip += 1;
        Ok(())
    }
}

/// One undriven round trip.
pub fn round_trip(field: &CavityField, cfg: &CavityConfig) -> Result<CavityField> {
    let mut out = field.clone();
    RoundTripMap::new(cfg)?.apply(&mut out)?;
    Ok(out)
}

/// One round trip with injection and output-coupler loss.
pub fn driven_round_trip(field: &CavityField, cfg: &CavityConfig, inj: &InjectionSpec) -> Result<CavityField> {
    inj.validate()?;
    let mut out = field.clone();
    RoundTripMap::new(cfg)?.apply_driven(&mut out, inj)?;
    Ok(out)
}

/// Per-trip observables of a cavity run.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityRun {
    pub trips: Vec<u64>,
    pub powers: Vec<f64>,
    /// Beam centroid in metres, `NaN` while the cavity is dark.
    pub centroids: Vec<f64>,
    pub snapshots: Option<Vec<CavityField>>,
    pub final_field: CavityField,
    pub positions: Vec<f64>,
}

impl CavityRun {
    /// Powers divided by their maximum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let peak = self.powers.iter().copied().fold(0.0, f64::max);
        self.powers
            .iter()
            .map(|p| if peak > 0.0 { p / peak } else { 0.0 })
            .collect()
    }

    /// Mean of `P(m+1)/P(m)` over trips `from ≤ m < to`.
    pub fn mean_power_ratio(&self, from: u64, to: u64) -> Option<f64> {
        let ratios: Vec<f64> = self
            .trips
            .windows(2)
            .zip(self.powers.windows(2))
            .filter(|(m, p)| m[1] == m[0] + 1 && m[0] >= from && m[0] < to && p[0] > 0.0)
            .map(|(_, p)| p[1] / p[0])
            .collect();
        (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
    }

    /// Least-squares slope of the centroid (metres per trip) over `from ≤ m ≤ to`.
    pub fn centroid_slope(&self, from: u64, to: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .trips
            .iter()
            .zip(&self.centroids)
            .filter(|(&m, c)| m >= from && m <= to && c.is_finite())
            .map(|(&m, &c)| (m as f64, c))
            .collect();
        lattice::linear_slope(&pts)
    }

    pub fn snapshot_at(&self, trip: u64) -> Option<&CavityField> {
        self.snapshots.as_ref()?.iter().find(|f| f.round_trip == trip)
    }
}

/// Runs `n_trips` of the driven map from a dark cavity, recording power and
/// centroid every trip and snapshots every `snapshot_every` trips.
pub fn run_driven(cfg: &CavityConfig, inj: &InjectionSpec, n_trips: u64, snapshot_every: Option<u64>) -> Result<CavityRun> {
    inj.validate()?;
    let mut map = RoundTripMap::new(cfg)?;
    let mut field = CavityField::zeros(cfg);
    let positions = map.positions().to_vec();
    let mut run = CavityRun {
        trips: vec![0],
        powers: vec![0.0],
        centroids: vec![f64::NAN],
        snapshots: snapshot_every.map(|_| vec![field.clone()]),
        final_field: field.clone(),
        positions: Vec::new(),
    };
    for _ in 0..n_trips {
        map.apply_driven(&mut field, inj)?;
        run.trips.push(field.round_trip);
        run.powers.push(field.power());
        run.centroids.push(field.centroid(&positions).unwrap_or(f64::NAN));
        if let (Some(every), Some(snaps)) = (snapshot_every, run.snapshots.as_mut()) {
            if every > 0 && field.round_trip.is_multiple_of(every) {
                snaps.push(field.clone());
            }
        }
    }
    run.final_field = field;
    run.positions = positions;
    Ok(run)
}

/// Agreement between the cavity and the lattice it emulates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    /// Largest amplitude difference between the two unit-normalised profiles.
    pub max_error: f64,
    /// `|⟨cavity|lattice⟩|` of the unit-normalised profiles.
    pub overlap: f64,
}

/// Evolves the probe beam through `n_trips` exact-phase round trips and the
/// lattice `(spec, pot)` for time `n_trips` from the probe sampled at
/// `x = n a`, then compares the cavity samples at `x = n a` with the lattice.
pub fn correspondence_check(
    cfg: &CavityConfig,
    spec: &DispersionSpec,
    pot: &PotentialProfile,
    probe: &InjectionSpec,
    n_trips: u64,
) -> Result<Correspondence> {
    let strength = cfg.grating.max_abs();
    if strength > SMALL_PHASE_LIMIT {
        return Err(Error::GratingTooStrong(strength));
    }
    let cfg = CavityConfig {
        exact_phase: true,
        ..cfg.clone()
    };
    cfg.validate()?;
    probe.validate()?;
    let (periods, stride) = cfg.lattice_alignment()?;
    if pot.len() != periods {
        return Err(Error::invalid("potential", format!("expected {periods} sites, got {}", pot.len())));
    }
    let a = cfg.metacrystal_period();
    if (spec.period() - a).abs() > 1e-9 * a {
        return Err(Error::invalid("spec", "lattice period differs from λf/A"));
    }
    for k in lattice::dft_wavenumbers(periods, a) {
        let grating = cfg.grating.phase(-cfg.wavelength * cfg.focal * k / (2.0 * PI), cfg.grating_period);
        if (spec.evaluate(k)? - grating).abs() > 1e-9 {
            return Err(Error::invalid("spec", "band does not match the grating profile"));
        }
    }

    let mut field = CavityField::from_fn(&cfg, |x| probe.profile(x, a));
    let mut map = RoundTripMap::new(&cfg)?;
    for _ in 0..n_trips {
        map.apply(&mut field)?;
    }
    let offset = cfg.grid.samples / 2;
    let half = (periods / 2) as i64;
    let cavity: Vec<Complex64> = (-half..half)
        .map(|n| field.samples[(offset as i64 + n * stride as i64) as usize])
        .collect();

    let initial: Vec<Complex64> = (-half..half).map(|n| probe.profile(n as f64 * a, a)).collect();
    let state = LatticeState::new(initial, -half)?;
    let h = lattice::build_hamiltonian(&spec.ring_hoppings(periods)?, pot, periods)?;
    let evolved = lattice::propagate_dense(&state, &h, n_trips as f64)?;

    let unit = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(v.iter().map(|c| c / norm).collect())
    };
    let c = unit(&cavity)?;
    let l = unit(evolved.amplitudes())?;
    let max_error = c.iter().zip(&l).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let overlap = c.iter().zip(&l).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm();
    Ok(Correspondence { max_error, overlap })
}

/// A driven cavity run from a dark resonator.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityScenario {
    pub config: CavityConfig,
    pub injection: InjectionSpec,
    pub n_trips: u64,
    pub snapshot_every: Option<u64>,
}

impl CavityScenario {
    /// Same scenario with the mask disorder seed replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        if let MaskProfile::PiecewiseDisorder { seed: s, .. } = &mut out.config.mask {
            *s = seed;
        }
        out
    }

    pub fn run(&self) -> Result<CavityRun> {
        run_driven(&self.config, &self.injection, self.n_trips, self.snapshot_every)
    }
}
