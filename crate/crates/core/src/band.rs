//! Band dispersion curves and their long-range hopping tables.
//!
//! A band `E(k)` on a lattice of period `a` is periodic in `k` with period
//! `2π/a` and is the Fourier series of its hopping amplitudes,
//! `E(k) = Σₙ Jₙ exp(i n a k)`. Two closed forms are built in: the
//! nearest-neighbour cosine band `−J cos(ka)` and the one-way sawtooth band
//! `J a k / π`, whose hoppings are purely imaginary and decay as `1/n`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Imaginary residue tolerated when a custom coefficient sum is taken as real.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;
/// Tolerance of the `J₋ₙ = conj(Jₙ)` check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Distance (in zone fractions) within which a wavenumber snaps to the zone edge.
const EDGE_SNAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum BandShape {
    /// `E(k) = −J cos(ka)`.
    Sinusoidal,
    /// `E(k) = J a k / π` on the zone, midpoint value 0 at the edge.
    Sawtooth,
    /// Explicit hopping coefficients keyed by signed offset.
    Custom(BTreeMap<i64, Complex64>),
}

/// A single-band dispersion curve with amplitude `J` and lattice period `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionSpec {
    shape: BandShape,
    amplitude: f64,
    period: f64,
}

/// Position of a wavenumber inside the Brillouin zone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZonePoint {
    /// `k a / 2π` folded into `[−1/2, 1/2)`.
    pub fraction: f64,
    /// True when the wavenumber sits on the zone edge `k = −π/a`.
    pub edge: bool,
}

/// Folds `k` into the zone `[−π/a, π/a)`, snapping values within rounding
/// distance of the edge onto `−π/a`.
pub fn zone_point(k: f64, period: f64) -> ZonePoint {
    fold_fraction(k * period / (2.0 * PI))
}

/// Folds a zone coordinate `u = k a / 2π` into `[−1/2, 1/2)`.
pub fn fold_fraction(u: f64) -> ZonePoint {
    let mut frac = u - (u + 0.5).floor();
    let edge = (frac + 0.5).abs() <= EDGE_SNAP || (frac - 0.5).abs() <= EDGE_SNAP;
    if edge {
        frac = -0.5;
    }
    ZonePoint {
        fraction: frac,
        edge,
    }
}

/// Folds `k` into `[−π/a, π/a)`.
pub fn fold_wavenumber(k: f64, period: f64) -> f64 {
    2.0 * PI * zone_point(k, period).fraction / period
}

/// `k` values strictly inside the zone, symmetric about zero.
fn interior_samples(n_samples: usize, period: f64) -> impl Iterator<Item = f64> {
    let step = 2.0 * PI / (period * (n_samples as f64 + 1.0));
    (0..n_samples).map(move |i| -PI / period + (i as f64 + 1.0) * step)
}

fn check_period(period: f64) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::invalid("period", format!("must be positive, got {period}")));
    }
    Ok(())
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(
            "amplitude",
            format!("must be non-negative, got {amplitude}"),
        ));
    }
    Ok(())
}

impl DispersionSpec {
    pub fn sinusoidal(amplitude: f64, period: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_period(period)?;
        Ok(Self {
            shape: BandShape::Sinusoidal,
            amplitude,
            period,
        })
    }

    pub fn sawtooth(amplitude: f64, period: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_period(period)?;
        Ok(Self {
            shape: BandShape::Sawtooth,
            amplitude,
            period,
        })
    }

    /// A band given directly by its hopping coefficients. Repeated offsets are summed.
    pub fn custom(period: f64, coefficients: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        check_period(period)?;
        let mut map = BTreeMap::new();
        for (n, c) in coefficients {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::invalid("coefficients", format!("non-finite entry at n = {n}")));
            }
            *map.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let amplitude = map.values().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(Self {
            shape: BandShape::Custom(map),
            amplitude,
            period,
        })
    }

    pub fn shape(&self) -> &BandShape {
        &self.shape
    }

    /// Half-bandwidth `J` (for custom bands, the largest coefficient modulus).
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            BandShape::Sinusoidal => "sinusoidal",
            BandShape::Sawtooth => "sawtooth",
            BandShape::Custom(_) => "custom",
        }
    }

    fn custom_sum(coefficients: &BTreeMap<i64, Complex64>, period: f64, k: f64) -> Complex64 {
        coefficients
            .iter()
            .map(|(&n, &c)| c * Complex64::from_polar(1.0, n as f64 * period * k))
            .sum()
    }

    /// `E(k)` with `k` folded into the zone first.
    pub fn evaluate(&self, k: f64) -> Result<f64> {
        let (j, a) = (self.amplitude, self.period);
        match &self.shape {
            BandShape::Sinusoidal => Ok(-j * (fold_wavenumber(k, a) * a).cos()),
            BandShape::Sawtooth => {
                let p = zone_point(k, a);
                Ok(if p.edge { 0.0 } else { 2.0 * j * p.fraction })
            }
            BandShape::Custom(coefficients) => {
                let kf = fold_wavenumber(k, a);
                let e = Self::custom_sum(coefficients, a, kf);
                if e.im.abs() >= IMAG_RESIDUE_TOL {
                    return Err(Error::NonHermitianCustom { k, imag: e.im });
                }
                Ok(e.re)
            }
        }
    }

    /// Group velocity `dE/dk`; analytic for closed forms, centred difference
    /// with step `1e−6·π/a` for custom bands.
    pub fn group_velocity(&self, k: f64) -> f64 {
        let (j, a) = (self.amplitude, self.period);
        match &self.shape {
            BandShape::Sinusoidal => j * a * (k * a).sin(),
            BandShape::Sawtooth => j * a / PI,
            BandShape::Custom(coefficients) => {
                let h = 1e-6 * PI / a;
                let plus = Self::custom_sum(coefficients, a, k + h).re;
                let minus = Self::custom_sum(coefficients, a, k - h).re;
                (plus - minus) / (2.0 * h)
            }
        }
    }

    /// Hopping amplitudes `Jₙ` for `|n| ≤ max_offset`.
    pub fn hoppings(&self, max_offset: usize) -> Result<HoppingSet> {
        if max_offset == 0 {
            return Err(Error::invalid("max_offset", "must be at least 1"));
        }
        let j = self.amplitude;
        let m = max_offset as i64;
        let entries = (-m..=m)
            .map(|n| {
                let value = match &self.shape {
                    BandShape::Sinusoidal if n.abs() == 1 => Complex64::new(-j / 2.0, 0.0),
                    BandShape::Sinusoidal => Complex64::new(0.0, 0.0),
                    BandShape::Sawtooth if n == 0 => Complex64::new(0.0, 0.0),
                    // (−1)^(n+1) J / (π i n) = i (−1)^n J / (π n)
                    BandShape::Sawtooth => {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        Complex64::new(0.0, sign * j / (PI * n as f64))
                    }
                    BandShape::Custom(c) => c.get(&n).copied().unwrap_or_default(),
                };
                (n, value)
            })
            .collect();
        Ok(HoppingSet {
            entries,
            max_offset,
            period: self.period,
        })
    }

    /// Hopping table of the full-range band on a periodic ring of `sites`
    /// sites: every offset `n` is aliased onto `n mod sites` in
    /// `(−sites/2, sites/2]`, and the antipodal entry is split evenly between
    /// `±sites/2`. Its eigenvalues on the ring are exactly `E(k)` on the DFT grid.
    pub fn ring_hoppings(&self, sites: usize) -> Result<HoppingSet> {
        if sites < 4 || !sites.is_multiple_of(2) {
            return Err(Error::invalid("sites", format!("ring size must be even and >= 4, got {sites}")));
        }
        let half = (sites / 2) as i64;
        let n_ring = sites as i64;
        let j = self.amplitude;
        let mut entries: BTreeMap<i64, Complex64> =
            (-half..=half).map(|n| (n, Complex64::new(0.0, 0.0))).collect();
        match &self.shape {
            BandShape::Sinusoidal => {
                entries.insert(1, Complex64::new(-j / 2.0, 0.0));
                entries.insert(-1, Complex64::new(-j / 2.0, 0.0));
            }
            BandShape::Sawtooth => {
                // Σ_l 1/(d + lN) = (π/N) cot(πd/N), and (−1)^(lN) = 1 for even N.
                for d in 1..half {
                    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                    let cot = 1.0 / (PI * d as f64 / n_ring as f64).tan();
                    let value = Complex64::new(0.0, sign * j * cot / n_ring as f64);
                    entries.insert(d, value);
                    entries.insert(-d, value.conj());
                }
            }
            BandShape::Custom(coefficients) => {
                for (&n, &c) in coefficients {
                    let mut d = n.rem_euclid(n_ring);
                    if d > half {
                        d -= n_ring;
                    }
                    if d == half {
                        *entries.get_mut(&half).unwrap() += c * 0.5;
                        *entries.get_mut(&-half).unwrap() += c * 0.5;
                    } else {
                        *entries.get_mut(&d).unwrap() += c;
                    }
                }
            }
        }
        Ok(HoppingSet {
            entries,
            max_offset: sites / 2,
            period: self.period,
        })
    }

    /// True iff `|E(k) − E(−k)| ≤ tol` on `n_samples` interior wavenumbers.
    pub fn time_reversal_symmetric(&self, n_samples: usize, tol: f64) -> Result<bool> {
        if n_samples < 8 {
            return Err(Error::invalid("n_samples", "need at least 8 samples"));
        }
        let a = self.period;
        let value = |k: f64| -> Complex64 {
            match &self.shape {
                BandShape::Custom(c) => Self::custom_sum(c, a, k),
                _ => Complex64::new(self.evaluate(k).unwrap_or(f64::NAN), 0.0),
            }
        };
        Ok(interior_samples(n_samples, a).all(|k| (value(k) - value(-k)).norm() <= tol))
    }

    /// Samples the group velocity across the zone and reports whether it
    /// keeps one strict sign.
    pub fn one_way_certificate(&self, n_samples: usize) -> Result<OneWayCertificate> {
        if n_samples < 16 {
            return Err(Error::invalid("n_samples", "need at least 16 samples"));
        }
        let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in interior_samples(n_samples, self.period) {
            let v = self.group_velocity(k);
            v_min = v_min.min(v);
            v_max = v_max.max(v);
        }
        Ok(OneWayCertificate {
            one_way: v_min > 0.0 || v_max < 0.0,
            v_min,
            v_max,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneWayCertificate {
    pub one_way: bool,
    pub v_min: f64,
    pub v_max: f64,
}

/// Complex hopping amplitudes `Jₙ` for `|n| ≤ M`, every offset present.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingSet {
    entries: BTreeMap<i64, Complex64>,
    max_offset: usize,
    period: f64,
}

impl HoppingSet {
    /// Builds a table from explicit entries; missing offsets up to the
    /// largest `|n|` are filled with zero.
    pub fn from_entries(period: f64, entries: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        check_period(period)?;
        let mut map: BTreeMap<i64, Complex64> = entries.into_iter().collect();
        let max_offset = map.keys().map(|n| n.unsigned_abs()).max().unwrap_or(0).max(1) as usize;
        let m = max_offset as i64;
        for n in -m..=m {
            map.entry(n).or_default();
        }
        Ok(Self {
            entries: map,
            max_offset,
            period,
        })
    }

    pub fn get(&self, offset: i64) -> Complex64 {
        self.entries.get(&offset).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.entries.iter().map(|(&n, &c)| (n, c))
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// First offset violating `J₋ₙ = conj(Jₙ)`, if any.
    fn hermitian_violation(&self) -> Option<i64> {
        self.entries
            .iter()
            .find(|(&n, &c)| (self.get(-n) - c.conj()).norm() > HERMITIAN_TOL)
            .map(|(&n, _)| n)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_violation().is_none()
    }

    /// True iff every amplitude is real within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.entries.values().all(|c| c.im.abs() <= tol)
    }

    /// Partial Fourier sum `Σ_{|n|≤M} Jₙ exp(i n a k)`.
    pub fn reconstruct(&self, k: f64) -> Result<f64> {
        if let Some(offset) = self.hermitian_violation() {
            return Err(Error::NonHermitian { offset });
        }
        // Pair ±n so the imaginary parts cancel term by term.
        let a = self.period;
        let mut sum = self.get(0).re;
        for n in 1..=self.max_offset as i64 {
            let phase = Complex64::from_polar(1.0, n as f64 * a * k);
            sum += (self.get(n) * phase + self.get(-n) * phase.conj()).re;
        }
        Ok(sum)
    }
}
