//! Discrete Schrödinger dynamics `i ḟ(n) = Σ_d J_d f(n+d) + U(n) f(n)` on a
//! periodic ring, with two independent propagators:
//!
//! * [`DenseEvolution`] diagonalises the full Hermitian matrix once and
//!   applies `exp(−iHt)` exactly. It is the reference.
//! * [`SplitStep`] applies Strang splitting: the potential is diagonal on
//!   sites, the band is diagonal on the DFT grid, where `E(k)` is evaluated
//!   in closed form without truncating the hopping range.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::band::{DispersionSpec, HoppingSet};
use crate::error::{Error, Result};

/// Sites on either side of a barrier excluded from transmission and reflection.
pub const BARRIER_MARGIN: i64 = 3;
/// Allowed deviation of `H` from its conjugate transpose.
pub const MATRIX_HERMITIAN_TOL: f64 = 1e-13;

fn check_sites(sites: usize) -> Result<()> {
    if sites < 8 || !sites.is_multiple_of(2) {
        return Err(Error::invalid("sites", format!("must be even and >= 8, got {sites}")));
    }
    Ok(())
}

/// Complex amplitudes `f(n)` on a ring of `N` sites. Index `i` carries the
/// physical label `origin + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    amplitudes: Vec<Complex64>,
    origin: i64,
    time: f64,
}

impl LatticeState {
    pub fn new(amplitudes: Vec<Complex64>, origin: i64) -> Result<Self> {
        check_sites(amplitudes.len())?;
        if amplitudes.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("amplitudes", "non-finite value"));
        }
        Ok(Self {
            amplitudes,
            origin,
            time: 0.0,
        })
    }

    /// Single occupied site with unit amplitude.
    pub fn localized(sites: usize, origin: i64, site: i64) -> Result<Self> {
        check_sites(sites)?;
        let index = site - origin;
        if index < 0 || index >= sites as i64 {
            return Err(Error::invalid("site", format!("{site} outside the lattice")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); sites];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes, origin)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn label(&self, index: usize) -> i64 {
        self.origin + index as i64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Intensity-weighted mean site label `⟨n⟩`.
    pub fn center_of_mass(&self) -> Result<f64> {
        let norm = self.norm_sqr();
        if norm <= 0.0 {
            return Err(Error::ZeroState);
        }
        let weighted: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| self.label(i) as f64 * c.norm_sqr())
            .sum();
        Ok(weighted / norm)
    }

    /// Standard deviation of `|f|²` about `⟨n⟩`.
    pub fn spread(&self) -> Result<f64> {
        let center = self.center_of_mass()?;
        let norm = self.norm_sqr();
        let var: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| (self.label(i) as f64 - center).powi(2) * c.norm_sqr())
            .sum();
        Ok((var / norm).sqrt())
    }

    /// Largest `|f(n) − g(n)|`.
    pub fn max_distance(&self, other: &LatticeState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Normalised packet `f(n) ∝ exp[−(n − center)²/sigma_sq + i k₀a n]` on a
/// ring whose labels run from `−N/2` to `N/2 − 1`.
pub fn gaussian_packet(sites: usize, center: f64, sigma_sq: f64, k0a: f64) -> Result<LatticeState> {
    check_sites(sites)?;
    if !(sigma_sq >= 1.0) {
        return Err(Error::DegenerateWidth(sigma_sq));
    }
    if !(k0a.abs() <= PI) {
        return Err(Error::invalid("k0a", format!("|k0a| must be <= π, got {k0a}")));
    }
    let origin = -(sites as i64 / 2);
    let mut amplitudes: Vec<Complex64> = (0..sites)
        .map(|i| {
            let n = (origin + i as i64) as f64;
            Complex64::from_polar((-(n - center).powi(2) / sigma_sq).exp(), k0a * n)
        })
        .collect();
    let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amplitudes {
        *c /= norm;
    }
    LatticeState::new(amplitudes, origin)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    None,
    /// `U(n) = strength · δ(n, site)`.
    SiteDelta { site: i64, strength: f64 },
    /// `U(n) = −depth · exp[−(n − center)²/width²]`.
    GaussianWell { depth: f64, center: f64, width: f64 },
    /// Independent uniform draws in `(−half_width, half_width)`.
    UniformDisorder { half_width: f64, seed: u64 },
}

/// On-site energies `U(n)` together with the recipe that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialProfile {
    values: Vec<f64>,
    kind: PotentialKind,
}

/// `count` uniform draws in the open interval `(−half_width, half_width)`
/// from a ChaCha8 stream keyed on `seed`.
pub fn uniform_disorder(count: usize, half_width: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break half_width * (2.0 * u - 1.0);
            }
        })
        .collect()
}

impl PotentialProfile {
    pub fn build(kind: PotentialKind, sites: usize, origin: i64) -> Result<Self> {
        check_sites(sites)?;
        let label = |i: usize| (origin + i as i64) as f64;
        let values = match &kind {
            PotentialKind::None => vec![0.0; sites],
            PotentialKind::SiteDelta { site, strength } => {
                let index = site - origin;
                if index < 0 || index >= sites as i64 {
                    return Err(Error::invalid("site", format!("{site} outside the lattice")));
                }
                let mut v = vec![0.0; sites];
                v[index as usize] = *strength;
                v
            }
            PotentialKind::GaussianWell { depth, center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::invalid("width", "must be positive"));
                }
                (0..sites)
                    .map(|i| -depth * (-((label(i) - center) / width).powi(2)).exp())
                    .collect()
            }
            PotentialKind::UniformDisorder { half_width, seed } => {
                if !(*half_width >= 0.0 && half_width.is_finite()) {
                    return Err(Error::invalid("half_width", "must be non-negative"));
                }
                uniform_disorder(sites, *half_width, *seed)
            }
        };
        Ok(Self { values, kind })
    }

    pub fn none(sites: usize) -> Result<Self> {
        Self::build(PotentialKind::None, sites, 0)
    }

    /// Explicit values; the descriptor is recorded as `None`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        check_sites(values.len())?;
        Ok(Self {
            values,
            kind: PotentialKind::None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dense ring Hamiltonian `H[m][(m+d) mod N] += J_d`, plus `U` on the
/// diagonal. With `M = N/2` the two antipodal hoppings add on the same element.
pub fn build_hamiltonian(hops: &HoppingSet, pot: &PotentialProfile, sites: usize) -> Result<DMatrix<Complex64>> {
    check_sites(sites)?;
    if pot.len() != sites {
        return Err(Error::invalid("potential", format!("length {} != {sites}", pot.len())));
    }
    if hops.max_offset() > sites / 2 {
        return Err(Error::RangeExceedsLattice {
            range: hops.max_offset(),
            sites,
        });
    }
    if !hops.is_hermitian() {
        let offset = hops
            .iter()
            .find(|&(n, c)| (hops.get(-n) - c.conj()).norm() > crate::band::HERMITIAN_TOL)
            .map(|(n, _)| n)
            .unwrap_or(0);
        return Err(Error::NonHermitian { offset });
    }
    let n = sites as i64;
    let mut h = DMatrix::<Complex64>::zeros(sites, sites);
    for m in 0..sites {
        for (d, value) in hops.iter() {
            if value == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = (m as i64 + d).rem_euclid(n) as usize;
            h[(m, col)] += value;
        }
        h[(m, m)] += Complex64::new(pot.values()[m], 0.0);
    }
    Ok(h)
}

fn hermitian_deviation(h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, reused for any evolution time.
#[derive(Clone, Debug)]
pub struct DenseEvolution {
    vectors: DMatrix<Complex64>,
    energies: DVector<f64>,
}

impl DenseEvolution {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::invalid("hamiltonian", "matrix is not square"));
        }
        let deviation = hermitian_deviation(h);
        if !(deviation <= MATRIX_HERMITIAN_TOL) {
            return Err(Error::NonHermitianMatrix { deviation });
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self {
            vectors: eig.eigenvectors,
            energies: eig.eigenvalues,
        })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `exp(−iHt) f`.
    pub fn evolve(&self, state: &LatticeState, duration: f64) -> Result<LatticeState> {
        if !(duration >= 0.0) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        if state.sites() != self.vectors.nrows() {
            return Err(Error::invalid("state", "size does not match the Hamiltonian"));
        }
        let f = DVector::from_column_slice(state.amplitudes());
        let mut coeffs = self.vectors.ad_mul(&f);
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= Complex64::from_polar(1.0, -e * duration);
        }
        let out = &self.vectors * coeffs;
        Ok(LatticeState {
            amplitudes: out.iter().copied().collect(),
            origin: state.origin,
            time: state.time + duration,
        })
    }

    /// Samples the exact evolution every `interval` up to `duration`.
    pub fn trajectory(&self, state: &LatticeState, duration: f64, interval: f64, keep_snapshots: bool) -> Result<Trajectory> {
        if !(interval > 0.0) {
            return Err(Error::invalid("interval", "must be positive"));
        }
        let count = (duration / interval).round() as usize;
        let mut traj = Trajectory::new(keep_snapshots);
        for i in 0..=count {
            let s = self.evolve(state, interval * i as f64)?;
            traj.record(&s)?;
        }
        Ok(traj)
    }
}

/// `exp(−iH·duration) f` by eigendecomposition.
pub fn propagate_dense(state: &LatticeState, h: &DMatrix<Complex64>, duration: f64) -> Result<LatticeState> {
    DenseEvolution::new(h)?.evolve(state, duration)
}

/// Observables sampled along a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub centers_of_mass: Vec<f64>,
    pub snapshots: Option<Vec<LatticeState>>,
    final_state: Option<LatticeState>,
}

impl Trajectory {
    fn new(keep_snapshots: bool) -> Self {
        Self {
            times: Vec::new(),
            norms: Vec::new(),
            centers_of_mass: Vec::new(),
            snapshots: keep_snapshots.then(Vec::new),
            final_state: None,
        }
    }

    fn record(&mut self, state: &LatticeState) -> Result<()> {
        self.times.push(state.time);
        self.norms.push(state.norm_sqr());
        self.centers_of_mass.push(state.center_of_mass()?);
        if let Some(snaps) = &mut self.snapshots {
            snaps.push(state.clone());
        }
        self.final_state = Some(state.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State at the last sample.
    pub fn final_state(&self) -> Option<&LatticeState> {
        self.final_state.as_ref()
    }

    /// Snapshot closest in time to `t`.
    pub fn snapshot_near(&self, t: f64) -> Result<&LatticeState> {
        self.snapshots
            .as_ref()
            .and_then(|snaps| {
                snaps
                    .iter()
                    .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            })
            .ok_or(Error::NoSnapshot)
    }

    /// Least-squares slope of `⟨n⟩(t)` over samples with `from ≤ t ≤ to`.
    pub fn com_slope(&self, from: f64, to: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.centers_of_mass)
            .filter(|(&t, _)| t >= from - 1e-9 && t <= to + 1e-9)
            .map(|(&t, &c)| (t, c))
            .collect();
        linear_slope(&pts).ok_or_else(|| Error::invalid("window", format!("fewer than two samples in [{from}, {to}]")))
    }

    /// Largest `|norm(t) − norm(0)|`.
    pub fn norm_drift(&self) -> f64 {
        let first = self.norms.first().copied().unwrap_or(0.0);
        self.norms.iter().map(|n| (n - first).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// DFT wavenumbers `2πj/(N a)` with `j` in `[−N/2, N/2)`.
pub fn dft_wavenumbers(sites: usize, period: f64) -> Vec<f64> {
    let n = sites as i64;
    (0..n)
        .map(|j| {
            let signed = if j < n / 2 { j } else { j - n };
            2.0 * PI * signed as f64 / (n as f64 * period)
        })
        .collect()
}

/// Strang split-step propagator for a fixed band, potential and step.
pub struct SplitStep {
    kinetic: Vec<Complex64>,
    half_potential: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    dt: f64,
}

impl SplitStep {
    pub fn new(spec: &DispersionSpec, pot: &PotentialProfile, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let sites = pot.len();
        check_sites(sites)?;
        let scale = 1.0 / sites as f64;
        let kinetic = dft_wavenumbers(sites, spec.period())
            .into_iter()
            .map(|k| Ok(Complex64::from_polar(scale, -spec.evaluate(k)? * dt)))
            .collect::<Result<Vec<_>>>()?;
        let half_potential = pot
            .values()
            .iter()
            .map(|&u| Complex64::from_polar(1.0, -u * dt / 2.0))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(sites);
        let inverse = planner.plan_fft_inverse(sites);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            kinetic,
            half_potential,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One Strang step in place: half potential, full band, half potential.
    pub fn step(&mut self, f: &mut [Complex64]) {
        for (x, p) in f.iter_mut().zip(&self.half_potential) {
            *x *= p;
        }
        self.forward.process_with_scratch(f, &mut self.scratch);
        for (x, p) in f.iter_mut().zip(&self.kinetic) {
            *x *= p;
        }
        self.inverse.process_with_scratch(f, &mut self.scratch);
        for (x, p) in f.iter_mut().zip(&self.half_potential) {
            *x *= p;
        }
    }

    /// Advances `state` by `round(duration/dt)` steps, sampling observables
    /// every `sample_every` steps and at the final step.
    pub fn run(&mut self, state: &LatticeState, duration: f64, sample_every: usize, keep_snapshots: bool) -> Result<Trajectory> {
        if !(duration >= 0.0) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        if sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be at least 1"));
        }
        if state.sites() != self.kinetic.len() {
            return Err(Error::invalid("state", "size does not match the potential"));
        }
        let steps = (duration / self.dt).round() as usize;
        let t0 = state.time;
        let mut current = state.clone();
        let mut traj = Trajectory::new(keep_snapshots);
        traj.record(&current)?;
        for s in 1..=steps {
            self.step(&mut current.amplitudes);
            if s % sample_every == 0 || s == steps {
                current.time = t0 + s as f64 * self.dt;
                traj.record(&current)?;
            }
        }
        current.time = t0 + steps as f64 * self.dt;
        traj.final_state = Some(current);
        Ok(traj)
    }
}

/// Split-step evolution of `state` for `duration` with step `dt`.
pub fn propagate_splitstep(
    state: &LatticeState,
    spec: &DispersionSpec,
    pot: &PotentialProfile,
    duration: f64,
    dt: f64,
    sample_every: usize,
    keep_snapshots: bool,
) -> Result<Trajectory> {
    if pot.len() != state.sites() {
        return Err(Error::invalid("potential", "length does not match the state"));
    }
    SplitStep::new(spec, pot, dt)?.run(state, duration, sample_every, keep_snapshots)
}

/// Weight beyond, before and on a barrier site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scattering {
    pub transmitted: f64,
    pub reflected: f64,
    pub trapped: f64,
}

/// Partitions `|f|²` into `n > b + 3`, `n < b − 3` and the sites in between.
pub fn scattering_split(state: &LatticeState, barrier_site: i64) -> Scattering {
    let (mut t, mut r, mut trapped) = (0.0, 0.0, 0.0);
    for (i, c) in state.amplitudes().iter().enumerate() {
        let n = state.label(i);
        let w = c.norm_sqr();
        if n > barrier_site + BARRIER_MARGIN {
            t += w;
        } else if n < barrier_site - BARRIER_MARGIN {
            r += w;
        } else {
            trapped += w;
        }
    }
    Scattering {
        transmitted: t,
        reflected: r,
        trapped,
    }
}

/// Transmission and reflection from the snapshot nearest `t_eval`.
pub fn transmission_reflection(traj: &Trajectory, barrier_site: i64, t_eval: f64) -> Result<Scattering> {
    Ok(scattering_split(traj.snapshot_near(t_eval)?, barrier_site))
}

/// Initial packet parameters, see [`gaussian_packet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacketSpec {
    pub center: f64,
    pub sigma_sq: f64,
    pub k0a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    SplitStep,
    Dense,
}

/// A complete lattice run: band, packet, potential and time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeScenario {
    pub sites: usize,
    pub band: DispersionSpec,
    pub packet: PacketSpec,
    pub potential: PotentialKind,
    pub duration: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub propagator: Propagator,
    pub keep_snapshots: bool,
}

impl LatticeScenario {
    pub fn origin(&self) -> i64 {
        -(self.sites as i64 / 2)
    }

    pub fn initial_state(&self) -> Result<LatticeState> {
        gaussian_packet(self.sites, self.packet.center, self.packet.sigma_sq, self.packet.k0a)
    }

    pub fn potential_profile(&self) -> Result<PotentialProfile> {
        PotentialProfile::build(self.potential.clone(), self.sites, self.origin())
    }

    /// Same scenario with the disorder seed replaced; other potentials are untouched.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        if let PotentialKind::UniformDisorder { seed: s, .. } = &mut out.potential {
            *s = seed;
        }
        out
    }

    pub fn run(&self) -> Result<Trajectory> {
        let state = self.initial_state()?;
        let pot = self.potential_profile()?;
        match self.propagator {
            Propagator::SplitStep => {
                propagate_splitstep(&state, &self.band, &pot, self.duration, self.dt, self.sample_every, self.keep_snapshots)
            }
            Propagator::Dense => {
                if !(self.dt > 0.0) || self.sample_every == 0 {
                    return Err(Error::invalid("dt", "sampling interval must be positive"));
                }
                let h = build_hamiltonian(&self.band.ring_hoppings(self.sites)?, &pot, self.sites)?;
                DenseEvolution::new(&h)?.trajectory(&state, self.duration, self.dt * self.sample_every as f64, self.keep_snapshots)
            }
        }
    }
}
