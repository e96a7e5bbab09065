//! Certifying a chain pair from measurements at its ends only.
//!
//! Only four functions matter for conclusive transfer: the amplitudes to
//! arrive at Bob's site (`f_{N,1}`, `g_{N,1}`) and to stay there (`f_{N,N}`,
//! `g_{N,N}`). Expanding the projectors gives
//!
//! ```text
//! F(l) = f_{N,1}(τ_l) - Σ_{k<l} F(k) f_{N,N}(τ_l - τ_k),   τ_l = t_1 + … + t_l
//! ```
//!
//! and the same recursion for G, so a schedule can be searched for without
//! knowing anything about the middle of the chains.
//!
//! Endpoint amplitudes are expressed in the vacuum gauge, i.e. relative to
//! the phase `e^{-iE_vac t}` of `|0…0⟩`, which is what a coherence measurement
//! against the vacuum sees.

use alloc::vec::Vec;
use core::cell::Cell;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dynamics::{ProjectedTrace, SpectralPropagator};
use crate::scheduler::{build_schedule_with, MeasurementSchedule, SchedulerConfig, StepProbe};
use crate::{Error, Result, C64};

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

/// Number of repetitions per measurement setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Infinite-shot limit: true amplitudes.
    Exact,
    Finite(u64),
}

/// Uniform time grid `0, step, 2·step, …, (points-1)·step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub step: f64,
    pub points: usize,
}

impl TimeGrid {
    /// Grid with spacing `step` covering at least `[0, horizon]`.
    pub fn covering(step: f64, horizon: f64) -> Self {
        Self { step, points: (horizon / step).ceil() as usize + 1 }
    }

    pub fn horizon(&self) -> f64 {
        (self.points - 1) as f64 * self.step
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }
}

/// Endpoint amplitudes of one chain on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEndpoints {
    /// `⟨N|U(t)|1⟩` in the vacuum gauge.
    pub arrive: Vec<C64>,
    /// `⟨N|U(t)|N⟩` in the vacuum gauge.
    pub stay: Vec<C64>,
    /// Standard errors of `|arrive|²` and `|stay|²`; zero in exact mode.
    pub arrive_error: Vec<f64>,
    pub stay_error: Vec<f64>,
}

/// The four endpoint functions of a chain pair: chain 1 gives `f`, chain 2 gives `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointFunctions {
    pub grid: TimeGrid,
    pub chain1: ChainEndpoints,
    pub chain2: ChainEndpoints,
}

/// Tomography estimate of one endpoint amplitude `a` from three settings:
/// excitation probability on `|1⟩`-type preparations, and `σ_x`, `σ_y` on
/// `(|0…0⟩ + |start⟩)/√2` preparations.
fn sample_amplitude<R: Rng + ?Sized>(exact: C64, shots: u64, rng: &mut R) -> (C64, f64) {
    let n = shots as f64;
    let draw = |p: f64, rng: &mut R| -> f64 {
        let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).expect("probability in [0, 1]");
        dist.sample(rng) as f64 / n
    };
    let p = draw(exact.norm_sqr(), rng);
    let x = 2.0 * draw(0.5 * (1.0 + exact.re), rng) - 1.0;
    let y = 2.0 * draw(0.5 * (1.0 + exact.im), rng) - 1.0;
    let estimate = C64::from_polar(p.sqrt(), y.atan2(x));
    (estimate, (p * (1.0 - p) / n).sqrt())
}

/// Measures `f_{N,1}` and `f_{N,N}` of one chain on `grid`.
pub fn estimate_endpoints<R: Rng + ?Sized>(
    prop: &SpectralPropagator,
    shots: Shots,
    grid: TimeGrid,
    rng: &mut R,
) -> ChainEndpoints {
    let last = prop.sites();
    let mut out = ChainEndpoints {
        arrive: Vec::with_capacity(grid.points),
        stay: Vec::with_capacity(grid.points),
        arrive_error: Vec::with_capacity(grid.points),
        stay_error: Vec::with_capacity(grid.points),
    };
    for j in 0..grid.points {
        let t = grid.time(j);
        let arrive = prop.gauge_amplitude(1, last, t).expect("valid sites");
        let stay = prop.gauge_amplitude(last, last, t).expect("valid sites");
        match shots {
            Shots::Exact => {
                out.arrive.push(arrive);
                out.stay.push(stay);
                out.arrive_error.push(0.0);
                out.stay_error.push(0.0);
            }
            Shots::Finite(n) => {
                let (a, ea) = sample_amplitude(arrive, n.max(1), rng);
                let (s, es) = sample_amplitude(stay, n.max(1), rng);
                out.arrive.push(a);
                out.stay.push(s);
                out.arrive_error.push(ea);
                out.stay_error.push(es);
            }
        }
    }
    out
}

impl EndpointFunctions {
    pub fn new(grid: TimeGrid, chain1: ChainEndpoints, chain2: ChainEndpoints) -> Result<Self> {
        if grid.points < 4 || !(grid.step > 0.0) {
            return Err(Error::Endpoints("grid needs at least 4 points and a positive step"));
        }
        for c in [&chain1, &chain2] {
            let n = grid.points;
            if c.arrive.len() != n || c.stay.len() != n || c.arrive_error.len() != n || c.stay_error.len() != n {
                return Err(Error::Endpoints("every series must have one value per grid point"));
            }
        }
        Ok(Self { grid, chain1, chain2 })
    }

    pub fn estimate<R: Rng + ?Sized>(
        prop1: &SpectralPropagator,
        prop2: &SpectralPropagator,
        shots: Shots,
        grid: TimeGrid,
        rng: &mut R,
    ) -> Result<Self> {
        let chain1 = estimate_endpoints(prop1, shots, grid, rng);
        let chain2 = estimate_endpoints(prop2, shots, grid, rng);
        Self::new(grid, chain1, chain2)
    }
}

/// Value of a gridded series at `t`, plus an estimate of the interpolation error.
///
/// On-grid times are returned exactly; otherwise a cubic through the four
/// nearest points is used and compared with the quadratic through three.
pub fn interpolate(grid: &TimeGrid, values: &[C64], t: f64) -> Result<(C64, f64)> {
    let horizon = grid.horizon();
    let slack = 1e-9 * grid.step;
    if !(t >= -slack && t <= horizon + slack) {
        return Err(Error::OutsideGrid { time: t, horizon });
    }
    let x = (t / grid.step).clamp(0.0, (grid.points - 1) as f64);
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        return Ok((values[nearest as usize], 0.0));
    }
    let base = (x.floor() as usize).saturating_sub(1).min(grid.points - 4);
    let lagrange = |start: usize, count: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &value) in values.iter().enumerate().skip(start).take(count) {
            let mut w = 1.0;
            for j in (start..start + count).filter(|&j| j != i) {
                w *= (x - j as f64) / (i as f64 - j as f64);
            }
            acc += value * w;
        }
        acc
    };
    let cubic = lagrange(base, 4);
    let quad_start = if x - (base as f64) < 1.5 { base } else { base + 1 };
    let quadratic = lagrange(quad_start, 3);
    Ok((cubic, (cubic - quadratic).norm()))
}

/// [`StepProbe`] driven purely by endpoint functions.
#[derive(Debug, Clone)]
pub struct EndpointProbe<'a> {
    endpoints: &'a EndpointFunctions,
    times: Vec<f64>,
    f: Vec<C64>,
    g: Vec<C64>,
    worst_interpolation: Cell<f64>,
}

impl<'a> EndpointProbe<'a> {
    pub fn new(endpoints: &'a EndpointFunctions) -> Self {
        Self { endpoints, times: Vec::new(), f: Vec::new(), g: Vec::new(), worst_interpolation: Cell::new(0.0) }
    }

    fn elapsed(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Largest interpolation error estimate met so far.
    pub fn interpolation_error(&self) -> f64 {
        self.worst_interpolation.get()
    }

    /// `(F, G)` for a measurement at absolute time `tau` after the recorded history.
    pub fn amplitudes_at(&self, tau: f64) -> Result<(C64, C64)> {
        let grid = &self.endpoints.grid;
        let mut worst = self.worst_interpolation.get();
        let mut eval = |values: &[C64], t: f64| -> Result<C64> {
            let (v, err) = interpolate(grid, values, t)?;
            worst = worst.max(err);
            Ok(v)
        };
        let (c1, c2) = (&self.endpoints.chain1, &self.endpoints.chain2);
        let mut f = eval(&c1.arrive, tau)?;
        let mut g = eval(&c2.arrive, tau)?;
        for ((&tk, &fk), &gk) in self.times.iter().zip(&self.f).zip(&self.g) {
            f -= fk * eval(&c1.stay, tau - tk)?;
            g -= gk * eval(&c2.stay, tau - tk)?;
        }
        self.worst_interpolation.set(worst);
        Ok((f, g))
    }

    fn record(&mut self, dt: f64) -> (C64, C64, f64) {
        let tau = self.elapsed() + dt;
        let (f, g) = self.amplitudes_at(tau).expect("committed times lie on the grid");
        self.times.push(tau);
        self.f.push(f);
        self.g.push(g);
        (f, g, tau)
    }
}

impl StepProbe for EndpointProbe<'_> {
    fn probe(&self, dt: f64) -> Option<(C64, C64)> {
        self.amplitudes_at(self.elapsed() + dt).ok()
    }

    fn commit(&mut self, dt: f64, trace: &mut ProjectedTrace) {
        let (f, g, _) = self.record(dt);
        // vacuum-gauge amplitudes carry the physical relative phase directly
        trace.push(dt, f, g, g.arg() - f.arg(), None);
    }
}

/// Trace rebuilt from endpoint functions for given measurement intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub trace: ProjectedTrace,
    /// Largest interpolation error estimate over all evaluations.
    pub interpolation_error: f64,
    /// Set when `interpolation_error` exceeds the requested budget.
    pub coarse_grid_warning: bool,
}

/// Rebuilds `F(l)`, `G(l)` and the failure probabilities from endpoint data.
pub fn reconstruct_f_g(endpoints: &EndpointFunctions, intervals: &[f64], error_budget: f64) -> Result<Reconstruction> {
    for (index, &value) in intervals.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Interval { index, value });
        }
    }
    let mut probe = EndpointProbe::new(endpoints);
    let mut trace = ProjectedTrace::new();
    for &dt in intervals {
        probe.amplitudes_at(probe.elapsed() + dt)?;
        probe.commit(dt, &mut trace);
    }
    let interpolation_error = probe.interpolation_error();
    Ok(Reconstruction { trace, interpolation_error, coarse_grid_warning: interpolation_error > error_budget })
}

/// Verdict of the end-only capability check.
#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityReport {
    pub capable: bool,
    pub schedule: MeasurementSchedule,
    pub interpolation_error: f64,
}

/// Runs the scheduler against endpoint data alone.
pub fn certify(endpoints: &EndpointFunctions, config: &SchedulerConfig) -> Result<CapabilityReport> {
    if endpoints.grid.horizon() < config.horizon {
        return Err(Error::Endpoints("endpoint grid is shorter than the scheduler horizon"));
    }
    let mut probe = EndpointProbe::new(endpoints);
    let schedule = build_schedule_with(&mut probe, config)?;
    Ok(CapabilityReport { capable: schedule.achieved, interpolation_error: probe.interpolation_error(), schedule })
}
