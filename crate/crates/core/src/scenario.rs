//! Declarative JSON scenarios and their file exports.
//!
//! A scenario document names one of four run kinds and carries the matching
//! section. Parsing rejects unknown keys and out-of-range values with a JSON
//! pointer to the offending field. Every output file carries the SHA-256 of
//! the resolved configuration (defaults applied, seed override folded in).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::band::DispersionSpec;
use crate::cavity::{CavityConfig, CavityGrid, CavityRun, CavityScenario, GratingProfile, InjectionSpec, MaskProfile};
use crate::ensemble::{self, EnsembleReport, EnsembleScenario, EnsembleSpec, Observable};
use crate::error::{Error, Result};
use crate::lattice::{self, LatticeScenario, PacketSpec, PotentialKind, Propagator, Trajectory};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BandReport,
    LatticeRun,
    CavityRun,
    EnsembleRun,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::BandReport => "band_report",
            ScenarioKind::LatticeRun => "lattice_run",
            ScenarioKind::CavityRun => "cavity_run",
            ScenarioKind::EnsembleRun => "ensemble_run",
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_version() -> u32 {
    1
}
fn default_sample_every() -> usize {
    100
}
fn default_sites() -> usize {
    256
}
fn default_dt() -> f64 {
    0.01
}
fn default_hopping_range() -> usize {
    64
}
fn default_band_samples() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub name: Option<String>,
    /// Disorder seed for single runs, base seed for ensembles.
    #[serde(default)]
    pub seed: u64,
    /// Lattice: integration steps between samples. Cavity: trips between heatmap rows.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandShapeDoc {
    Sinusoidal,
    Sawtooth,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub offset: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDoc {
    pub shape: BandShapeDoc,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<CoefficientDoc>,
    /// Hopping range listed by band reports.
    #[serde(default = "default_hopping_range")]
    pub hopping_range: usize,
    /// Wavenumbers tabulated by band reports.
    #[serde(default = "default_band_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketDoc {
    pub center: f64,
    pub sigma_sq: f64,
    pub k0a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDoc {
    None,
    SiteDelta { site: i64, strength: f64 },
    GaussianWell { depth: f64, center: f64, width: f64 },
    UniformDisorder { half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorDoc {
    SplitStep,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDoc {
    #[serde(default = "default_sites")]
    pub sites: usize,
    pub band: BandDoc,
    pub packet: PacketDoc,
    pub potential: PotentialDoc,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_propagator")]
    pub propagator: PropagatorDoc,
    #[serde(default)]
    pub barrier_site: Option<i64>,
    /// Times at which transmission and reflection are reported.
    #[serde(default)]
    pub evaluate_at: Vec<f64>,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_propagator() -> PropagatorDoc {
    PropagatorDoc::SplitStep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GratingDoc {
    Sinusoidal { amplitude: f64 },
    Sawtooth { amplitude: f64 },
    Samples { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskDoc {
    None,
    GaussianWell { depth: f64, center: f64, width: f64 },
    /// `cell` defaults to the lattice period `λf/A`.
    PiecewiseDisorder {
        half_width: f64,
        #[serde(default)]
        cell: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    #[serde(default = "default_grid_samples")]
    pub samples: usize,
    #[serde(default = "default_window_periods")]
    pub window_periods: f64,
}

fn default_grid_samples() -> usize {
    8192
}
fn default_window_periods() -> f64 {
    64.0
}
fn default_grid() -> GridDoc {
    GridDoc {
        samples: default_grid_samples(),
        window_periods: default_window_periods(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionDoc {
    pub waist: f64,
    pub tilt: f64,
    pub center_trip: f64,
    pub duration: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityDoc {
    pub wavelength: f64,
    pub focal: f64,
    pub grating_period: f64,
    #[serde(rename = "T")]
    pub transmittance: f64,
    pub grating: GratingDoc,
    pub mask: MaskDoc,
    #[serde(default = "default_grid")]
    pub grid: GridDoc,
    #[serde(default = "yes")]
    pub exact_phase: bool,
    pub injection: InjectionDoc,
    pub round_trips: u64,
    /// Keep every `heatmap_stride`-th transverse sample in the heatmap.
    #[serde(default = "default_heatmap_stride")]
    pub heatmap_stride: usize,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_heatmap_stride() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableDoc {
    ComSlope {
        from: f64,
        to: f64,
    },
    Transmission {
        barrier: f64,
        #[serde(default)]
        at: Option<f64>,
    },
    Reflection {
        barrier: f64,
        #[serde(default)]
        at: Option<f64>,
    },
    FinalNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDoc {
    pub realizations: usize,
    pub observables: Vec<ObservableDoc>,
}

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn require(cond: bool, pointer: &str, message: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(schema(pointer, message))
    }
}

fn positive(v: f64, pointer: &str) -> Result<()> {
    require(v.is_finite() && v > 0.0, pointer, "must be a positive number")
}

fn non_negative(v: f64, pointer: &str) -> Result<()> {
    require(v.is_finite() && v >= 0.0, pointer, "must be a non-negative number")
}

fn to_pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        use serde_path_to_error::Segment;
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates a scenario document.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = to_pointer(e.path());
        schema(&pointer, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl BandDoc {
    fn validate(&self, at: &str) -> Result<()> {
        non_negative(self.amplitude, &format!("{at}/amplitude"))?;
        positive(self.period, &format!("{at}/period"))?;
        require(self.hopping_range >= 1, &format!("{at}/hopping_range"), "must be at least 1")?;
        require(self.samples >= 16, &format!("{at}/samples"), "must be at least 16")?;
        match self.shape {
            BandShapeDoc::Custom => require(!self.coefficients.is_empty(), &format!("{at}/coefficients"), "custom band needs coefficients")?,
            _ => require(self.coefficients.is_empty(), &format!("{at}/coefficients"), "only custom bands take coefficients")?,
        }
        self.to_spec().map_err(|e| schema(at, e.to_string()))?;
        Ok(())
    }

    pub fn to_spec(&self) -> Result<DispersionSpec> {
        match self.shape {
            BandShapeDoc::Sinusoidal => DispersionSpec::sinusoidal(self.amplitude, self.period),
            BandShapeDoc::Sawtooth => DispersionSpec::sawtooth(self.amplitude, self.period),
            BandShapeDoc::Custom => DispersionSpec::custom(
                self.period,
                self.coefficients.iter().map(|c| (c.offset, Complex64::new(c.re, c.im))),
            ),
        }
    }
}

impl LatticeDoc {
    fn validate(&self, at: &str) -> Result<()> {
        require(self.sites >= 8 && self.sites.is_multiple_of(2), &format!("{at}/sites"), "must be even and at least 8")?;
        self.band.validate(&format!("{at}/band"))?;
        require(self.packet.sigma_sq >= 1.0, &format!("{at}/packet/sigma_sq"), "must be at least 1")?;
        require(self.packet.k0a.abs() <= std::f64::consts::PI, &format!("{at}/packet/k0a"), "must lie in [-π, π]")?;
        require(self.packet.center.is_finite(), &format!("{at}/packet/center"), "must be finite")?;
        non_negative(self.duration, &format!("{at}/duration"))?;
        positive(self.dt, &format!("{at}/dt"))?;
        let half = self.sites as i64 / 2;
        let inside = |site: i64| site >= -half && site < half;
        match &self.potential {
            PotentialDoc::SiteDelta { site, .. } => require(inside(*site), &format!("{at}/potential/site"), "outside the lattice")?,
            PotentialDoc::GaussianWell { width, .. } => positive(*width, &format!("{at}/potential/width"))?,
            PotentialDoc::UniformDisorder { half_width } => non_negative(*half_width, &format!("{at}/potential/half_width"))?,
            PotentialDoc::None => {}
        }
        if let Some(b) = self.barrier_site {
            require(inside(b), &format!("{at}/barrier_site"), "outside the lattice")?;
        }
        require(self.evaluate_at.is_empty() || self.barrier_site.is_some(), &format!("{at}/evaluate_at"), "needs barrier_site")?;
        for (i, t) in self.evaluate_at.iter().enumerate() {
            require(*t >= 0.0 && *t <= self.duration, &format!("{at}/evaluate_at/{i}"), "must lie within the run")?;
        }
        Ok(())
    }

    pub fn to_scenario(&self, seed: u64, sample_every: usize) -> Result<LatticeScenario> {
        let potential = match &self.potential {
            PotentialDoc::None => PotentialKind::None,
            PotentialDoc::SiteDelta { site, strength } => PotentialKind::SiteDelta {
                site: *site,
                strength: *strength,
            },
            PotentialDoc::GaussianWell { depth, center, width } => PotentialKind::GaussianWell {
                depth: *depth,
                center: *center,
                width: *width,
            },
            PotentialDoc::UniformDisorder { half_width } => PotentialKind::UniformDisorder {
                half_width: *half_width,
                seed,
            },
        };
        Ok(LatticeScenario {
            sites: self.sites,
            band: self.band.to_spec()?,
            packet: PacketSpec {
                center: self.packet.center,
                sigma_sq: self.packet.sigma_sq,
                k0a: self.packet.k0a,
            },
            potential,
            duration: self.duration,
            dt: self.dt,
            sample_every,
            propagator: match self.propagator {
                PropagatorDoc::SplitStep => Propagator::SplitStep,
                PropagatorDoc::Dense => Propagator::Dense,
            },
            keep_snapshots: true,
        })
    }
}

impl CavityDoc {
    fn validate(&self, at: &str) -> Result<()> {
        positive(self.wavelength, &format!("{at}/wavelength"))?;
        positive(self.focal, &format!("{at}/focal"))?;
        positive(self.grating_period, &format!("{at}/grating_period"))?;
        require(
            self.transmittance.is_finite() && (0.0..1.0).contains(&self.transmittance),
            &format!("{at}/T"),
            "must lie in [0, 1)",
        )?;
        require(
            self.grid.samples >= 1024 && self.grid.samples.is_power_of_two(),
            &format!("{at}/grid/samples"),
            "must be a power of two >= 1024",
        )?;
        require(
            self.grid.window_periods.is_finite() && self.grid.window_periods >= 16.0,
            &format!("{at}/grid/window_periods"),
            "must be at least 16",
        )?;
        match &self.grating {
            GratingDoc::Sinusoidal { amplitude } | GratingDoc::Sawtooth { amplitude } => {
                non_negative(*amplitude, &format!("{at}/grating/amplitude"))?
            }
            GratingDoc::Samples { values } => require(
                values.len() >= 2 && values.iter().all(|v| v.is_finite()),
                &format!("{at}/grating/values"),
                "need at least two finite values",
            )?,
        }
        match &self.mask {
            MaskDoc::GaussianWell { width, .. } => positive(*width, &format!("{at}/mask/width"))?,
            MaskDoc::PiecewiseDisorder { half_width, cell } => {
                non_negative(*half_width, &format!("{at}/mask/half_width"))?;
                if let Some(c) = cell {
                    positive(*c, &format!("{at}/mask/cell"))?;
                }
            }
            MaskDoc::None => {}
        }
        positive(self.injection.waist, &format!("{at}/injection/waist"))?;
        positive(self.injection.duration, &format!("{at}/injection/duration"))?;
        require(self.injection.tilt.is_finite(), &format!("{at}/injection/tilt"), "must be finite")?;
        require(self.round_trips >= 1, &format!("{at}/round_trips"), "must be at least 1")?;
        require(self.heatmap_stride >= 1, &format!("{at}/heatmap_stride"), "must be at least 1")?;
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.wavelength * self.focal / self.grating_period
    }

    pub fn to_scenario(&self, seed: u64, snapshot_every: Option<u64>) -> Result<CavityScenario> {
        let a = self.period();
        let config = CavityConfig {
            wavelength: self.wavelength,
            focal: self.focal,
            grating_period: self.grating_period,
            transmittance: self.transmittance,
            grating: match &self.grating {
                GratingDoc::Sinusoidal { amplitude } => GratingProfile::Sinusoidal { amplitude: *amplitude },
                GratingDoc::Sawtooth { amplitude } => GratingProfile::Sawtooth { amplitude: *amplitude },
                GratingDoc::Samples { values } => GratingProfile::Samples(values.clone()),
            },
            mask: match &self.mask {
                MaskDoc::None => MaskProfile::None,
                MaskDoc::GaussianWell { depth, center, width } => MaskProfile::GaussianWell {
                    depth: *depth,
                    center: *center,
                    width: *width,
                },
                MaskDoc::PiecewiseDisorder { half_width, cell } => MaskProfile::PiecewiseDisorder {
                    half_width: *half_width,
                    cell: cell.unwrap_or(a),
                    seed,
                },
            },
            grid: CavityGrid {
                samples: self.grid.samples,
                window: self.grid.window_periods * a,
            },
            exact_phase: self.exact_phase,
        };
        config.validate()?;
        Ok(CavityScenario {
            config,
            injection: InjectionSpec {
                waist: self.injection.waist,
                tilt: self.injection.tilt,
                center_trip: self.injection.center_trip,
                duration: self.injection.duration,
                amplitude: self.injection.amplitude,
            },
            n_trips: self.round_trips,
            snapshot_every,
        })
    }
}

impl ObservableDoc {
    fn to_observable(&self) -> Observable {
        match *self {
            ObservableDoc::ComSlope { from, to } => Observable::ComSlope { from, to },
            ObservableDoc::Transmission { barrier, at } => Observable::Transmission { barrier, at },
            ObservableDoc::Reflection { barrier, at } => Observable::Reflection { barrier, at },
            ObservableDoc::FinalNorm => Observable::FinalNorm,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.version == 1, "/version", "only version 1 is supported")?;
        require(self.sample_every >= 1, "/sample_every", "must be at least 1")?;
        let present = [
            ("band", self.band.is_some()),
            ("lattice", self.lattice.is_some()),
            ("cavity", self.cavity.is_some()),
            ("ensemble", self.ensemble.is_some()),
        ];
        let allowed: &[&str] = match self.kind {
            ScenarioKind::BandReport => &["band"],
            ScenarioKind::LatticeRun => &["lattice"],
            ScenarioKind::CavityRun => &["cavity"],
            ScenarioKind::EnsembleRun => &["ensemble", "lattice", "cavity"],
        };
        for (name, is_present) in present {
            if is_present && !allowed.contains(&name) {
                return Err(schema(&format!("/{name}"), format!("not allowed for kind {}", self.kind.as_str())));
            }
        }
        match self.kind {
            ScenarioKind::BandReport => {
                self.band.as_ref().ok_or_else(|| schema("/band", "missing section"))?.validate("/band")?;
            }
            ScenarioKind::LatticeRun => {
                self.lattice.as_ref().ok_or_else(|| schema("/lattice", "missing section"))?.validate("/lattice")?;
            }
            ScenarioKind::CavityRun => {
                self.cavity.as_ref().ok_or_else(|| schema("/cavity", "missing section"))?.validate("/cavity")?;
            }
            ScenarioKind::EnsembleRun => {
                let ens = self.ensemble.as_ref().ok_or_else(|| schema("/ensemble", "missing section"))?;
                require(ens.realizations >= 1, "/ensemble/realizations", "must be at least 1")?;
                require(!ens.observables.is_empty(), "/ensemble/observables", "at least one observable")?;
                match (&self.lattice, &self.cavity) {
                    (Some(l), None) => l.validate("/lattice")?,
                    (None, Some(c)) => c.validate("/cavity")?,
                    _ => return Err(schema("/", "ensemble needs exactly one of `lattice` or `cavity`")),
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    /// Canonical JSON of the resolved configuration.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::resolved_json`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.resolved_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let ens = self.ensemble.as_ref().ok_or_else(|| schema("/ensemble", "missing section"))?;
        let scenario = match (&self.lattice, &self.cavity) {
            (Some(l), None) => EnsembleScenario::Lattice(l.to_scenario(self.seed, self.sample_every)?),
            (None, Some(c)) => EnsembleScenario::Cavity(c.to_scenario(self.seed, Some(self.sample_every as u64))?),
            _ => return Err(schema("/", "ensemble needs exactly one of `lattice` or `cavity`")),
        };
        Ok(EnsembleSpec {
            scenario,
            n_realizations: ens.realizations,
            base_seed: self.seed,
            observables: ens.observables.iter().map(ObservableDoc::to_observable).collect(),
        })
    }
}

/// Doubles with 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Exporter {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Exporter {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            written: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "# config_sha256={}", self.hash)?;
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, mut value: Value) -> Result<()> {
        if let Value::Object(map) = &mut value {
            map.insert("config_sha256".into(), Value::String(self.hash.clone()));
        }
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(&value).expect("summary serializes");
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    /// Raw little-endian `(re, im)` frames plus a JSON sidecar.
    fn snapshots<'a>(&mut self, frames: impl Iterator<Item = &'a [Complex64]>, times: &[f64], length: usize, interval: f64, extra: Value) -> Result<()> {
        let path = self.dir.join("snapshots.bin");
        let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
        let mut count = 0usize;
        for frame in frames {
            for c in frame {
                out.write_all(&c.re.to_le_bytes())?;
                out.write_all(&c.im.to_le_bytes())?;
            }
            count += 1;
        }
        out.flush()?;
        self.written.push(path);
        self.json(
            "snapshots.json",
            json!({
                "format": "f64le interleaved re,im",
                "N": length,
                "frames": count,
                "dt": interval,
                "times": times,
                "grid": extra,
            }),
        )
    }
}

/// Files written by [`run_scenario`] and the summary document.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn header(cfg: &ScenarioConfig) -> Value {
    json!({
        "tool": "metacrystal",
        "tool_version": TOOL_VERSION,
        "kind": cfg.kind.as_str(),
        "name": cfg.name,
        "seed": cfg.seed,
        "config": serde_json::from_str::<Value>(&cfg.resolved_json()).expect("valid json"),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// Executes a validated scenario and writes its outputs into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path, workers: Option<usize>) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut ex = Exporter::new(out_dir, cfg.hash())?;
    let summary = match cfg.kind {
        ScenarioKind::BandReport => band_report(cfg, &mut ex)?,
        ScenarioKind::LatticeRun => lattice_run(cfg, &mut ex)?,
        ScenarioKind::CavityRun => cavity_run(cfg, &mut ex)?,
        ScenarioKind::EnsembleRun => ensemble_run(cfg, &mut ex, workers)?,
    };
    let summary = merge(header(cfg), summary);
    ex.json("summary.json", summary.clone())?;
    Ok(RunOutcome {
        files: ex.written,
        summary,
    })
}

fn band_report(cfg: &ScenarioConfig, ex: &mut Exporter) -> Result<Value> {
    let doc = cfg.band.as_ref().expect("validated");
    let spec = doc.to_spec()?;
    let hops = spec.hoppings(doc.hopping_range)?;
    let cert = spec.one_way_certificate(doc.samples)?;
    let symmetric = spec.time_reversal_symmetric(doc.samples, 1e-12)?;
    let a = spec.period();
    let ks: Vec<f64> = (0..doc.samples)
        .map(|i| -std::f64::consts::PI / a + 2.0 * std::f64::consts::PI * i as f64 / (a * doc.samples as f64))
        .collect();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in &ks {
        rows.push(vec![
            num(k),
            num(spec.evaluate(k)?),
            num(hops.reconstruct(k)?),
            num(spec.group_velocity(k)),
        ]);
    }
    ex.csv(
        "dispersion.csv",
        &["k".into(), "energy".into(), "reconstructed".into(), "group_velocity".into()],
        rows.into_iter(),
    )?;
    let table: Vec<Value> = hops.iter().map(|(n, c)| json!({"n": n, "re": c.re, "im": c.im})).collect();
    Ok(json!({
        "band": spec.name(),
        "hermitian": hops.is_hermitian(),
        "time_reversal_symmetric": symmetric,
        "one_way": {"one_way": cert.one_way, "v_min": cert.v_min, "v_max": cert.v_max},
        "hoppings": table,
    }))
}

fn lattice_heatmap(ex: &mut Exporter, traj: &Trajectory) -> Result<()> {
    let snaps = traj.snapshots.as_ref().ok_or(Error::NoSnapshot)?;
    let first = snaps.first().ok_or(Error::NoSnapshot)?;
    let mut head = vec!["t".to_string()];
    head.extend((0..first.sites()).map(|i| first.label(i).to_string()));
    ex.csv(
        "heatmap.csv",
        &head,
        snaps.iter().map(|s| {
            let mut row = vec![num(s.time())];
            row.extend(s.amplitudes().iter().map(|c| num(c.norm_sqr())));
            row
        }),
    )
}

fn lattice_run(cfg: &ScenarioConfig, ex: &mut Exporter) -> Result<Value> {
    let doc = cfg.lattice.as_ref().expect("validated");
    let scenario = doc.to_scenario(cfg.seed, cfg.sample_every)?;
    let traj = scenario.run()?;
    ex.csv(
        "trace.csv",
        &["t".into(), "norm".into(), "com".into()],
        traj.times
            .iter()
            .zip(&traj.norms)
            .zip(&traj.centers_of_mass)
            .map(|((t, n), c)| vec![num(*t), num(*n), num(*c)]),
    )?;
    lattice_heatmap(ex, &traj)?;
    if doc.snapshots {
        let snaps = traj.snapshots.as_ref().ok_or(Error::NoSnapshot)?;
        ex.snapshots(
            snaps.iter().map(|s| s.amplitudes()),
            &traj.times,
            scenario.sites,
            scenario.dt * scenario.sample_every as f64,
            json!({"origin": scenario.origin()}),
        )?;
    }
    let fin = traj.final_state().ok_or(Error::NoSnapshot)?;
    let mut scattering = Vec::new();
    if let Some(b) = doc.barrier_site {
        for &t in &doc.evaluate_at {
            let s = lattice::transmission_reflection(&traj, b, t)?;
            scattering.push(json!({"t": t, "transmission": s.transmitted, "reflection": s.reflected, "trapped": s.trapped}));
        }
        let s = lattice::scattering_split(fin, b);
        scattering.push(json!({"t": fin.time(), "transmission": s.transmitted, "reflection": s.reflected, "trapped": s.trapped}));
    }
    Ok(json!({
        "band": scenario.band.name(),
        "samples": traj.len(),
        "final_time": fin.time(),
        "final_center_of_mass": fin.center_of_mass()?,
        "final_spread": fin.spread()?,
        "norm_drift": traj.norm_drift(),
        "com_slope": traj.com_slope(0.0, fin.time()).ok(),
        "scattering": scattering,
    }))
}

fn cavity_summary(doc: &CavityDoc, run: &CavityRun) -> Value {
    let a = doc.period();
    let settle = (doc.injection.center_trip + 3.0 * doc.injection.duration).ceil().max(0.0) as u64;
    let end = *run.trips.last().unwrap_or(&0);
    let window_end = (settle + 50).min(end);
    let peak = run.powers.iter().copied().fold(0.0, f64::max);
    let backward_cut = -2.0 * doc.injection.waist;
    json!({
        "lattice_period": a,
        "peak_power": peak,
        "final_power_normalized": if peak > 0.0 { run.final_field.power() / peak } else { 0.0 },
        "decay_window": [settle, window_end],
        "mean_power_ratio": run.mean_power_ratio(settle, window_end),
        "centroid_slope_periods_per_trip": run.centroid_slope(settle, end).map(|s| s / a),
        "final_centroid_periods": run.centroids.last().map(|c| c / a),
        "backward_fraction": run.final_field.power_fraction(&run.positions, |x| x < backward_cut),
    })
}

fn cavity_run(cfg: &ScenarioConfig, ex: &mut Exporter) -> Result<Value> {
    let doc = cfg.cavity.as_ref().expect("validated");
    let scenario = doc.to_scenario(cfg.seed, Some(cfg.sample_every as u64))?;
    let run = scenario.run()?;
    let normalized = run.normalized_powers();
    ex.csv(
        "trace.csv",
        &["m".into(), "power".into()],
        run.trips.iter().zip(&normalized).map(|(m, p)| vec![m.to_string(), num(*p)]),
    )?;
    let a = doc.period();
    let snaps = run.snapshots.as_ref().ok_or(Error::NoSnapshot)?;
    let peak_intensity = snaps
        .iter()
        .flat_map(|f| f.samples().iter().map(|c| c.norm_sqr()))
        .fold(0.0, f64::max);
    let stride = doc.heatmap_stride;
    let mut head = vec!["m".to_string()];
    head.extend(run.positions.iter().step_by(stride).map(|x| num(x / a)));
    ex.csv(
        "heatmap.csv",
        &head,
        snaps.iter().map(|f| {
            let mut row = vec![f.round_trip().to_string()];
            row.extend(f.samples().iter().step_by(stride).map(|c| {
                num(if peak_intensity > 0.0 { c.norm_sqr() / peak_intensity } else { 0.0 })
            }));
            row
        }),
    )?;
    if doc.snapshots {
        let times: Vec<f64> = snaps.iter().map(|f| f.round_trip() as f64).collect();
        ex.snapshots(
            snaps.iter().map(|f| f.samples()),
            &times,
            doc.grid.samples,
            cfg.sample_every as f64,
            json!({"x0": run.positions[0], "dx": scenario.config.dx()}),
        )?;
    }
    Ok(cavity_summary(doc, &run))
}

fn ensemble_run(cfg: &ScenarioConfig, ex: &mut Exporter, workers: Option<usize>) -> Result<Value> {
    let spec = cfg.ensemble_spec()?;
    let report = ensemble::run_ensemble(&spec, workers)?;
    write_ensemble(ex, &report)?;
    Ok(json!({
        "base_seed": report.base_seed,
        "realizations": report.records.len(),
        "statistics": report.stats.iter().map(|s| json!({
            "observable": s.label, "mean": s.mean, "std": s.std, "min": s.min, "max": s.max,
        })).collect::<Vec<_>>(),
        "seeds": report.records.iter().map(|r| r.seed).collect::<Vec<_>>(),
    }))
}

fn write_ensemble(ex: &mut Exporter, report: &EnsembleReport) -> Result<()> {
    let mut head = vec!["index".to_string(), "seed".to_string()];
    head.extend(report.stats.iter().map(|s| s.label.clone()));
    ex.csv(
        "realizations.csv",
        &head,
        report.records.iter().map(|r| {
            let mut row = vec![r.index.to_string(), r.seed.to_string()];
            row.extend(r.values.iter().map(|v| num(*v)));
            row
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kind": "lattice_run",
        "lattice": {
            "sites": 64,
            "band": {"shape": "sawtooth"},
            "packet": {"center": -10, "sigma_sq": 16, "k0a": 1.5707963267948966},
            "potential": {"type": "site_delta", "site": 0, "strength": 2.0},
            "duration": 2.0,
            "dt": 0.05
        }
    }"#;

    #[test]
    fn defaults_are_resolved() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.sample_every, 100);
        assert_eq!(cfg.seed, 0);
        let l = cfg.lattice.as_ref().unwrap();
        assert_eq!(l.band.amplitude, 1.0);
        assert_eq!(l.propagator, PropagatorDoc::SplitStep);
        let echoed: Value = serde_json::from_str(&cfg.resolved_json()).unwrap();
        assert_eq!(echoed["lattice"]["band"]["period"], json!(1.0));
        assert_eq!(echoed["version"], json!(1));
    }

    #[test]
    fn empty_document_is_schema_error() {
        assert!(matches!(parse_config_str(""), Err(Error::Schema { .. })));
        assert!(matches!(parse_config_str("{}"), Err(Error::Schema { .. })));
    }

    #[test]
    fn unknown_key_reports_pointer() {
        let text = MINIMAL.replace("\"dt\": 0.05", "\"dt\": 0.05, \"bogus\": 1");
        match parse_config_str(&text) {
            Err(Error::Schema { pointer, .. }) => assert!(pointer.starts_with("/lattice"), "{pointer}"),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("\"type\": \"site_delta\",", "\"type\": \"site_delta\", \"depth\": 3,");
        assert!(matches!(parse_config_str(&text), Err(Error::Schema { .. })));
    }

    #[test]
    fn range_errors_report_pointer() {
        let text = MINIMAL.replace("\"dt\": 0.05", "\"dt\": -0.05");
        match parse_config_str(&text) {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/lattice/dt"),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("\"sites\": 64", "\"sites\": 63");
        assert!(matches!(parse_config_str(&text), Err(Error::Schema { pointer, .. }) if pointer == "/lattice/sites"));
    }

    #[test]
    fn section_must_match_kind() {
        let text = MINIMAL.replace("lattice_run", "cavity_run");
        assert!(matches!(parse_config_str(&text), Err(Error::Schema { .. })));
    }

    #[test]
    fn seed_override_changes_hash() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        let h0 = cfg.hash();
        assert_eq!(h0.len(), 64);
        assert_eq!(cfg.clone().with_seed(None).hash(), h0);
        assert_ne!(cfg.with_seed(Some(5)).hash(), h0);
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
