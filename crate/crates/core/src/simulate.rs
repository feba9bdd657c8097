//! Ground-truthed test signals.
//!
//! [`generate_sse_like`] produces slow-slip-like displacement records: a linear
//! loading trend interrupted by short events during which the trend reverses along a
//! smooth ramp. The start and end of each event are the change-points. The noiseless
//! signal is standardised before any noise is added.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{zscore_normalize, GroundTruth, TimeSeries};

/// Within-event transition from 0 to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    /// Logistic curve between its 1% and 99% points, rescaled to end exactly at 0 and 1.
    #[default]
    SmoothSigmoid,
    /// Piecewise-quadratic ease-in/ease-out.
    QuadraticEase,
    Linear,
}

impl RampShape {
    /// Ramp value at relative position `u` in the event; clamps outside `[0, 1]`.
    pub fn eval(self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match self {
            RampShape::SmoothSigmoid => {
                let tail: f64 = 0.01;
                let half_width = ((1.0 - tail) / tail).ln();
                let z = (2.0 * u - 1.0) * half_width;
                let g = 1.0 / (1.0 + (-z).exp());
                (g - tail) / (1.0 - 2.0 * tail)
            }
            RampShape::QuadraticEase => {
                if u < 0.5 {
                    2.0 * u * u
                } else {
                    1.0 - 2.0 * (1.0 - u) * (1.0 - u)
                }
            }
            RampShape::Linear => u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SseSignalSpec {
    /// Number of daily samples.
    pub length_days: usize,
    pub n_events: usize,
    /// Event duration in days.
    pub event_duration: f64,
    /// Spacing between event starts in days.
    pub recurrence: f64,
    /// Start of the first event; half a recurrence when `None`.
    pub first_event: Option<f64>,
    /// Background trend per day.
    pub inter_event_slope: f64,
    /// Displacement reversed by each event: one value for all events or one per event.
    pub event_amplitudes: Vec<f64>,
    pub ramp_shape: RampShape,
}

impl Default for SseSignalSpec {
    /// One year with five week-long events every 74 days.
    fn default() -> Self {
        Self {
            length_days: 365,
            n_events: 5,
            event_duration: 7.0,
            recurrence: 74.0,
            first_event: None,
            inter_event_slope: 1.0,
            event_amplitudes: vec![74.0],
            ramp_shape: RampShape::SmoothSigmoid,
        }
    }
}

impl SseSignalSpec {
    /// Two events far apart whose reversals differ five-fold.
    pub fn two_events_unequal() -> Self {
        Self {
            length_days: 480,
            n_events: 2,
            event_duration: 7.0,
            recurrence: 240.0,
            first_event: Some(120.0),
            inter_event_slope: 0.1,
            event_amplitudes: vec![10.0, 50.0],
            ramp_shape: RampShape::SmoothSigmoid,
        }
    }

    /// Same geometry as [`Self::two_events_unequal`] with equal reversals.
    pub fn two_events_equal() -> Self {
        Self {
            event_amplitudes: vec![30.0],
            ..Self::two_events_unequal()
        }
    }

    fn amplitude(&self, i: usize) -> f64 {
        if self.event_amplitudes.len() == 1 {
            self.event_amplitudes[0]
        } else {
            self.event_amplitudes[i]
        }
    }

    fn first_start(&self) -> f64 {
        self.first_event.unwrap_or(self.recurrence / 2.0)
    }

    /// Event start times.
    pub fn event_starts(&self) -> Vec<f64> {
        let first = self.first_start();
        (0..self.n_events)
            .map(|i| first + i as f64 * self.recurrence)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_days < 4 {
            return Err(Error::Spec(format!("length {} too short", self.length_days)));
        }
        if self.n_events == 0 {
            return Ok(());
        }
        if !(self.event_duration > 0.0 && self.recurrence > 0.0) {
            return Err(Error::Spec("duration and recurrence must be > 0".into()));
        }
        if self.event_duration >= self.recurrence {
            return Err(Error::Spec(format!(
                "events overlap: duration {} >= recurrence {}",
                self.event_duration, self.recurrence
            )));
        }
        if self.n_events as f64 * self.recurrence > self.length_days as f64 + self.recurrence {
            return Err(Error::Spec(format!(
                "{} events every {} days do not fit in {} days",
                self.n_events, self.recurrence, self.length_days
            )));
        }
        if self.event_amplitudes.len() != 1 && self.event_amplitudes.len() != self.n_events {
            return Err(Error::Spec(format!(
                "expected 1 or {} amplitudes, got {}",
                self.n_events,
                self.event_amplitudes.len()
            )));
        }
        if self.event_amplitudes.iter().any(|a| !a.is_finite()) || !self.inter_event_slope.is_finite() {
            return Err(Error::Spec("amplitudes and slope must be finite".into()));
        }
        let first = self.first_start();
        let last_end = first + (self.n_events - 1) as f64 * self.recurrence + self.event_duration;
        if first.round() < 1.0 || last_end.round() > (self.length_days - 2) as f64 {
            return Err(Error::Spec(format!(
                "events span [{first}, {last_end}] but must lie inside [1, {}]",
                self.length_days - 2
            )));
        }
        Ok(())
    }
}

/// Noiseless standardised signal and its change-points.
pub fn generate_sse_like(spec: &SseSignalSpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let starts = spec.event_starts();
    let values: Vec<f64> = (0..spec.length_days)
        .map(|t| {
            let t = t as f64;
            let reversal: f64 = starts
                .iter()
                .enumerate()
                .map(|(i, &s)| spec.amplitude(i) * spec.ramp_shape.eval((t - s) / spec.event_duration))
                .sum();
            spec.inter_event_slope * t - reversal
        })
        .collect();
    let signal = zscore_normalize(&TimeSeries::new(values)?)?;
    let truth: Vec<usize> = starts
        .iter()
        .flat_map(|&s| [s.round() as usize, (s + spec.event_duration).round() as usize])
        .collect();
    let truth = GroundTruth::new(truth, spec.length_days)?;
    Ok((signal, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the additive white noise.
    pub c_wn: f64,
    pub seed: u64,
}

/// Add i.i.d. Gaussian noise with standard deviation `c_wn`.
pub fn add_noise(signal: &TimeSeries, noise: &NoiseSpec) -> Result<TimeSeries> {
    if !(noise.c_wn.is_finite() && noise.c_wn >= 0.0) {
        return Err(Error::invalid(format!("noise level must be >= 0, got {}", noise.c_wn)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let values = signal
        .values()
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + noise.c_wn * z
        })
        .collect();
    signal.map_values(values)
}

/// One segment of a continuous family signal, in global sample coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Piece {
    /// `a + b t`
    Linear { a: f64, b: f64 },
    /// `a + b t + c t^2`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `a + b exp(c t)`
    Exponential { a: f64, b: f64, c: f64 },
    /// `a + b sin(omega t + phase)`
    Sinusoidal { a: f64, b: f64, omega: f64, phase: f64 },
}

impl Piece {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Piece::Linear { a, b } => a + b * t,
            Piece::Quadratic { a, b, c } => a + b * t + c * t * t,
            Piece::Exponential { a, b, c } => a + b * (c * t).exp(),
            Piece::Sinusoidal { a, b, omega, phase } => a + b * (omega * t + phase).sin(),
        }
    }

    fn with_offset(self, delta: f64) -> Self {
        match self {
            Piece::Linear { a, b } => Piece::Linear { a: a + delta, b },
            Piece::Quadratic { a, b, c } => Piece::Quadratic { a: a + delta, b, c },
            Piece::Exponential { a, b, c } => Piece::Exponential { a: a + delta, b, c },
            Piece::Sinusoidal { a, b, omega, phase } => Piece::Sinusoidal { a: a + delta, b, omega, phase },
        }
    }

    fn family(&self) -> FamilyKind {
        match self {
            Piece::Linear { .. } => FamilyKind::PiecewiseLinear,
            Piece::Quadratic { .. } => FamilyKind::PiecewiseQuadratic,
            Piece::Exponential { .. } => FamilyKind::PiecewiseExponential,
            Piece::Sinusoidal { .. } => FamilyKind::Sinusoidal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    PiecewiseLinear,
    PiecewiseQuadratic,
    PiecewiseExponential,
    Sinusoidal,
}

/// Piecewise signal with `pieces.len() == knots.len() + 1`; piece `i` covers
/// `[knots[i-1], knots[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub length: usize,
    pub knots: Vec<usize>,
    pub pieces: Vec<Piece>,
}

impl FamilySpec {
    /// Chain the given pieces, shifting each one vertically so it meets its
    /// predecessor at the shared knot.
    pub fn continuous(kind: FamilyKind, length: usize, knots: Vec<usize>, pieces: Vec<Piece>) -> Self {
        let mut chained: Vec<Piece> = Vec::with_capacity(pieces.len());
        for (i, piece) in pieces.into_iter().enumerate() {
            let piece = match (i.checked_sub(1).and_then(|j| knots.get(j)), chained.last()) {
                (Some(&k), Some(prev)) => {
                    let t = k as f64;
                    piece.with_offset(prev.eval(t) - piece.eval(t))
                }
                _ => piece,
            };
            chained.push(piece);
        }
        Self {
            kind,
            length,
            knots,
            pieces: chained,
        }
    }

    /// Continuous broken line through the origin with the given per-segment slopes.
    pub fn piecewise_linear(length: usize, knots: Vec<usize>, slopes: &[f64]) -> Self {
        let pieces = slopes.iter().map(|&b| Piece::Linear { a: 0.0, b }).collect();
        Self::continuous(FamilyKind::PiecewiseLinear, length, knots, pieces)
    }

    fn validate(&self) -> Result<()> {
        if self.length < 4 {
            return Err(Error::Spec(format!("length {} too short", self.length)));
        }
        if self.pieces.len() != self.knots.len() + 1 {
            return Err(Error::Spec(format!(
                "{} knots need {} pieces, got {}",
                self.knots.len(),
                self.knots.len() + 1,
                self.pieces.len()
            )));
        }
        if let Some(p) = self.pieces.iter().find(|p| p.family() != self.kind) {
            return Err(Error::Spec(format!("piece {p:?} does not belong to {:?}", self.kind)));
        }
        GroundTruth::new(self.knots.clone(), self.length)
            .map_err(|e| Error::Spec(format!("knots: {e}")))?;
        for (i, &k) in self.knots.iter().enumerate() {
            let t = k as f64;
            let left = self.pieces[i].eval(t);
            let right = self.pieces[i + 1].eval(t);
            let tol = 1e-9 * (1.0 + left.abs().max(right.abs()));
            if !left.is_finite() || !right.is_finite() || (left - right).abs() > tol {
                return Err(Error::Spec(format!(
                    "discontinuity at knot {k}: {left} vs {right}"
                )));
            }
        }
        Ok(())
    }
}

pub fn generate_family(spec: &FamilySpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let mut piece = 0;
    let values: Vec<f64> = (0..spec.length)
        .map(|t| {
            while piece < spec.knots.len() && t > spec.knots[piece] {
                piece += 1;
            }
            spec.pieces[piece].eval(t as f64)
        })
        .collect();
    let series = TimeSeries::new(values)?;
    Ok((series, GroundTruth::new(spec.knots.clone(), spec.length)?))
}
