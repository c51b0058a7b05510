//! Seeded batches of disorder realizations.
//!
//! Realization `i` draws its disorder from ChaCha8 stream `i` of the base
//! seed, so results are a pure function of the spec: adding realizations
//! never perturbs earlier ones, and the worker count has no effect.
//! Statistics are reduced in index order after all tasks finish.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cavity::{CavityRun, CavityScenario};
use crate::error::{Error, Result};
use crate::lattice::{self, LatticeScenario, Trajectory, BARRIER_MARGIN};

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleScenario {
    Lattice(LatticeScenario),
    Cavity(CavityScenario),
}

/// Per-realization quantity. Positions and times are in lattice units
/// (sites and `1/J`) for lattice runs, and in periods `a` and round trips for
/// cavity runs.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// Least-squares slope of the centre of mass over `[from, to]`.
    ComSlope { from: f64, to: f64 },
    /// Weight beyond `barrier + 3`, at time `at` or at the end of the run.
    Transmission { barrier: f64, at: Option<f64> },
    /// Weight before `barrier − 3`.
    Reflection { barrier: f64, at: Option<f64> },
    /// Final norm (lattice) or final power relative to the run maximum (cavity).
    FinalNorm,
}

impl Observable {
    pub fn label(&self) -> String {
        let at = |at: &Option<f64>| at.map(|t| format!("@{t}")).unwrap_or_default();
        match self {
            Observable::ComSlope { from, to } => format!("com_slope[{from},{to}]"),
            Observable::Transmission { barrier, at: t } => format!("transmission({barrier}){}", at(t)),
            Observable::Reflection { barrier, at: t } => format!("reflection({barrier}){}", at(t)),
            Observable::FinalNorm => "final_norm".to_string(),
        }
    }

    fn on_lattice(&self, traj: &Trajectory) -> Result<f64> {
        let state_at = |at: &Option<f64>| match at {
            Some(t) => traj.snapshot_near(*t),
            None => traj.final_state().ok_or(Error::NoSnapshot),
        };
        match self {
            Observable::ComSlope { from, to } => traj.com_slope(*from, *to),
            Observable::Transmission { barrier, at } => {
                Ok(lattice::scattering_split(state_at(at)?, barrier.round() as i64).transmitted)
            }
            Observable::Reflection { barrier, at } => {
                Ok(lattice::scattering_split(state_at(at)?, barrier.round() as i64).reflected)
            }
            Observable::FinalNorm => Ok(traj.final_state().ok_or(Error::NoSnapshot)?.norm_sqr()),
        }
    }

    fn on_cavity(&self, run: &CavityRun, period: f64) -> Result<f64> {
        let field_at = |at: &Option<f64>| match at {
            Some(t) => run.snapshot_at(t.round() as u64).ok_or(Error::NoSnapshot),
            None => Ok(&run.final_field),
        };
        let margin = BARRIER_MARGIN as f64;
        match self {
            Observable::ComSlope { from, to } => run
                .centroid_slope(from.round() as u64, to.round() as u64)
                .map(|s| s / period)
                .ok_or_else(|| Error::invalid("window", "fewer than two lit trips")),
            Observable::Transmission { barrier, at } => {
                let cut = (barrier + margin) * period;
                Ok(field_at(at)?.power_fraction(&run.positions, |x| x > cut))
            }
            Observable::Reflection { barrier, at } => {
                let cut = (barrier - margin) * period;
                Ok(field_at(at)?.power_fraction(&run.positions, |x| x < cut))
            }
            Observable::FinalNorm => {
                let peak = run.powers.iter().copied().fold(0.0, f64::max);
                Ok(if peak > 0.0 { run.final_field.power() / peak } else { 0.0 })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub scenario: EnsembleScenario,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub observables: Vec<Observable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableStats {
    pub label: String,
    pub mean: f64,
    /// Sample standard deviation; zero for a single realization.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleReport {
    pub base_seed: u64,
    pub stats: Vec<ObservableStats>,
    pub records: Vec<RealizationRecord>,
}

impl EnsembleReport {
    pub fn stat(&self, label: &str) -> Option<&ObservableStats> {
        self.stats.iter().find(|s| s.label == label)
    }
}

/// Disorder seed of realization `index`: first word of ChaCha8 stream `index`.
pub fn realization_seed(base_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

fn run_realization(spec: &EnsembleSpec, index: usize) -> Result<RealizationRecord> {
    let seed = realization_seed(spec.base_seed, index);
    let values = match &spec.scenario {
        EnsembleScenario::Lattice(sc) => {
            let traj = sc.with_seed(seed).run()?;
            spec.observables.iter().map(|o| o.on_lattice(&traj)).collect::<Result<Vec<_>>>()?
        }
        EnsembleScenario::Cavity(sc) => {
            let run = sc.with_seed(seed).run()?;
            let period = sc.config.metacrystal_period();
            spec.observables
                .iter()
                .map(|o| o.on_cavity(&run, period))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(RealizationRecord { index, seed, values })
}

fn summarize(label: String, values: &[f64]) -> ObservableStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    ObservableStats {
        label,
        mean,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Runs every realization on a pool of `workers` threads (`None` for one per core).
pub fn run_ensemble(spec: &EnsembleSpec, workers: Option<usize>) -> Result<EnsembleReport> {
    if spec.n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    if spec.observables.is_empty() {
        return Err(Error::invalid("observables", "at least one observable is required"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let results: Vec<Result<RealizationRecord>> =
        pool.install(|| (0..spec.n_realizations).into_par_iter().map(|i| run_realization(spec, i)).collect());

    let mut records = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        records.push(r.map_err(|e| Error::Realization {
            index,
            source: Box::new(e),
        })?);
    }
    let stats = spec
        .observables
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let column: Vec<f64> = records.iter().map(|r| r.values[j]).collect();
            summarize(o.label(), &column)
        })
        .collect();
    Ok(EnsembleReport {
        base_seed: spec.base_seed,
        stats,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::DispersionSpec;
    use crate::lattice::{PacketSpec, PotentialKind, Propagator};

    fn disordered(band: DispersionSpec) -> LatticeScenario {
        LatticeScenario {
            sites: 64,
            band,
            packet: PacketSpec {
                center: -10.0,
                sigma_sq: 16.0,
                k0a: std::f64::consts::FRAC_PI_2,
            },
            potential: PotentialKind::UniformDisorder { half_width: 0.5, seed: 0 },
            duration: 4.0,
            dt: 0.05,
            sample_every: 4,
            propagator: Propagator::SplitStep,
            keep_snapshots: false,
        }
    }

    fn spec(n: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            scenario: EnsembleScenario::Lattice(disordered(DispersionSpec::sinusoidal(1.0, 1.0).unwrap())),
            n_realizations: n,
            base_seed: seed,
            observables: vec![
                Observable::ComSlope { from: 0.0, to: 4.0 },
                Observable::Reflection { barrier: 0.0, at: None },
                Observable::FinalNorm,
            ],
        }
    }

    #[test]
    fn seeds_are_prefix_stable() {
        let a: Vec<u64> = (0..5).map(|i| realization_seed(9, i)).collect();
        let b: Vec<u64> = (0..8).map(|i| realization_seed(9, i)).collect();
        assert_eq!(a, b[..5]);
        assert_ne!(realization_seed(9, 0), realization_seed(10, 0));
        let mut unique = b.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), b.len());
    }

    #[test]
    fn single_realization_report_is_the_run() {
        let s = spec(1, 4);
        let report = run_ensemble(&s, Some(1)).unwrap();
        let EnsembleScenario::Lattice(sc) = &s.scenario else { unreachable!() };
        let traj = sc.with_seed(realization_seed(4, 0)).run().unwrap();
        let slope = traj.com_slope(0.0, 4.0).unwrap();
        let st = &report.stats[0];
        assert_eq!((st.mean, st.min, st.max, st.std), (slope, slope, slope, 0.0));
        assert_eq!(report.records.len(), 1);
    }

    #[test]
    fn deterministic_across_workers() {
        let s = spec(6, 11);
        let one = run_ensemble(&s, Some(1)).unwrap();
        let many = run_ensemble(&s, Some(4)).unwrap();
        let again = run_ensemble(&s, None).unwrap();
        assert_eq!(one, many);
        assert_eq!(one, again);
    }

    #[test]
    fn base_seed_only_moves_disorder() {
        let a = run_ensemble(&spec(3, 1), Some(2)).unwrap();
        let b = run_ensemble(&spec(3, 2), Some(2)).unwrap();
        assert_ne!(a.stats[0].mean, b.stats[0].mean);

        let mut clean = spec(3, 1);
        if let EnsembleScenario::Lattice(sc) = &mut clean.scenario {
            sc.potential = PotentialKind::SiteDelta { site: 0, strength: 2.0 };
        }
        let c = run_ensemble(&clean, Some(2)).unwrap();
        clean.base_seed = 2;
        let d = run_ensemble(&clean, Some(2)).unwrap();
        assert_eq!(c.stats, d.stats);
    }

    #[test]
    fn errors_carry_realization_index() {
        let mut s = spec(2, 1);
        s.observables = vec![Observable::Transmission { barrier: 0.0, at: Some(1.0) }];
        match run_ensemble(&s, Some(1)) {
            Err(Error::Realization { index: 0, source }) => assert!(matches!(*source, Error::NoSnapshot)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(run_ensemble(&spec(0, 1), None).is_err());
    }
}
