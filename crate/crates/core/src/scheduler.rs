//! Greedy search for unbiased measurement times.
//!
//! At every step the next wait `t_l` is chosen on a uniform grid over
//! `(0, horizon]`: candidates are the grid points where `|F| ≈ |G|` already
//! holds and the roots of `|F| - |G|` bracketed by sign changes between grid
//! points (located by bisection). The candidate with the largest conditional
//! success probability wins. Steps are appended until the joint failure
//! probability drops below the target.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

use crate::dynamics::{BranchPair, ProjectedTrace, SpectralPropagator};
use crate::hamiltonians::Convention;
use crate::{Error, Result, C64};

/// How a measurement time is scored among the unbiased candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Largest conditional success probability `|F(l)|² / P(l-1)`.
    StepSuccess,
    /// Largest success rate `-ln(1 - |F(l)|²/P(l-1)) / t_l`.
    SuccessRate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    /// Grid resolution in ħ/J.
    pub time_step: f64,
    /// Longest wait considered per step, ħ/J.
    pub horizon: f64,
    /// ε: a time is unbiased when `| |F| - |G| | ≤ ε · max(|F|, |G|, amplitude_floor)`.
    pub amplitude_tolerance: f64,
    pub amplitude_floor: f64,
    /// When set, also require `| d|F|/dt - d|G|/dt | ≤ slope_tolerance`.
    pub slope_tolerance: Option<f64>,
    /// Stop once the joint failure probability is at most this.
    pub target_failure: f64,
    pub max_measurements: usize,
    /// Candidates whose conditional success is below this are useless.
    pub min_step_success: f64,
    pub objective: Objective,
}

impl SchedulerConfig {
    /// Defaults for Pauli-convention chains of `len` sites.
    pub fn for_length(len: usize) -> Self {
        Self::for_chain(len, Convention::Pauli)
    }

    /// Grid step 0.05, ε = 1e-3 with floor 1e-6, target failure 0.01, and a
    /// horizon of `len / hopping`, about twice the ballistic arrival time.
    pub fn for_chain(len: usize, convention: Convention) -> Self {
        Self {
            time_step: 0.05,
            horizon: (len as f64 / convention.hopping()).max(1.0),
            amplitude_tolerance: 1e-3,
            amplitude_floor: 1e-6,
            slope_tolerance: None,
            target_failure: 0.01,
            max_measurements: 1000,
            min_step_success: 1e-6,
            objective: Objective::StepSuccess,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.time_step) {
            return Err(Error::SchedulerConfig("time step must be positive"));
        }
        if !positive(self.horizon) || self.horizon < self.time_step {
            return Err(Error::SchedulerConfig("horizon must be at least one time step"));
        }
        if !positive(self.amplitude_tolerance) || !positive(self.amplitude_floor) {
            return Err(Error::SchedulerConfig("amplitude tolerance and floor must be positive"));
        }
        if let Some(s) = self.slope_tolerance {
            if !positive(s) {
                return Err(Error::SchedulerConfig("slope tolerance must be positive"));
            }
        }
        if !(self.target_failure > 0.0 && self.target_failure <= 1.0) {
            return Err(Error::SchedulerConfig("target failure must lie in (0, 1]"));
        }
        if self.max_measurements == 0 {
            return Err(Error::SchedulerConfig("max measurements must be positive"));
        }
        if !(self.min_step_success >= 0.0 && self.min_step_success < 1.0) {
            return Err(Error::SchedulerConfig("minimal step success must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Whether `(F, G)` is unbiased within tolerance.
    pub fn amplitudes_match(&self, f: C64, g: C64) -> bool {
        let (a, b) = (f.norm(), g.norm());
        (a - b).abs() <= self.amplitude_tolerance * a.max(b).max(self.amplitude_floor)
    }
}

/// Source of the next-step amplitudes `(F(l), G(l))` as a function of the
/// wait since the previous measurement.
pub trait StepProbe {
    /// `(F, G)` if measurement l happens `dt` after measurement l-1, or
    /// `None` when `dt` lies beyond the data this probe can evaluate.
    fn probe(&self, dt: f64) -> Option<(C64, C64)>;

    /// `(d|F|/dt, d|G|/dt)` at `dt`.
    fn modulus_rates(&self, dt: f64) -> Option<(f64, f64)> {
        let h = 1e-6;
        let lo = (dt - h).max(0.0);
        let (f0, g0) = self.probe(lo)?;
        let (f1, g1) = self.probe(dt + h)?;
        let span = dt + h - lo;
        Some(((f1.norm() - f0.norm()) / span, (g1.norm() - g0.norm()) / span))
    }

    /// Perform the (failed) measurement after `dt` and record it.
    fn commit(&mut self, dt: f64, trace: &mut ProjectedTrace);
}

/// Probe backed by the chains' spectral propagators.
#[derive(Debug, Clone)]
pub struct PropagatorProbe<'a> {
    pair: BranchPair<'a>,
}

impl<'a> PropagatorProbe<'a> {
    pub fn new(prop1: &'a SpectralPropagator, prop2: &'a SpectralPropagator) -> Self {
        Self { pair: BranchPair::launch(prop1, prop2) }
    }
}

impl StepProbe for PropagatorProbe<'_> {
    fn probe(&self, dt: f64) -> Option<(C64, C64)> {
        Some(self.pair.probe(dt))
    }

    fn modulus_rates(&self, dt: f64) -> Option<(f64, f64)> {
        let rate = |(a, da): (C64, C64)| {
            let m = a.norm();
            if m == 0.0 {
                da.norm()
            } else {
                (a.conj() * da).re / m
            }
        };
        Some((rate(self.pair.first.bob_amplitude_with_rate(dt)), rate(self.pair.second.bob_amplitude_with_rate(dt))))
    }

    fn commit(&mut self, dt: f64, trace: &mut ProjectedTrace) {
        self.pair.measure(dt, trace);
    }
}

/// An accepted measurement time with its amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChoice {
    pub interval: f64,
    pub f: C64,
    pub g: C64,
    /// Conditional success probability `(|F|² + |G|²) / 2 / P(l-1)`.
    pub step_success: f64,
}

#[derive(Clone, Copy)]
struct Sample {
    dt: f64,
    f: C64,
    g: C64,
}

impl Sample {
    fn mismatch(&self) -> f64 {
        self.f.norm() - self.g.norm()
    }
}

const BISECTION_STEPS: usize = 60;
const GOLDEN_STEPS: usize = 40;

fn step_success(f: C64, g: C64, survival: f64) -> f64 {
    0.5 * (f.norm_sqr() + g.norm_sqr()) / survival
}

fn score(objective: Objective, success: f64, dt: f64) -> f64 {
    match objective {
        Objective::StepSuccess => success,
        Objective::SuccessRate => -(1.0 - success.min(1.0 - 1e-15)).ln() / dt,
    }
}

fn accepts<P: StepProbe + ?Sized>(probe: &P, config: &SchedulerConfig, s: &Sample) -> bool {
    if !config.amplitudes_match(s.f, s.g) {
        return false;
    }
    match config.slope_tolerance {
        None => true,
        Some(tol) => probe.modulus_rates(s.dt).is_some_and(|(df, dg)| (df - dg).abs() <= tol),
    }
}

fn bisect_crossing<P: StepProbe + ?Sized>(probe: &P, lo: &Sample, hi: &Sample) -> Option<Sample> {
    let (mut a, mut b) = (lo.dt, hi.dt);
    let sign_a = lo.mismatch() > 0.0;
    let mut best = None;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let (f, g) = probe.probe(mid)?;
        let s = Sample { dt: mid, f, g };
        let positive = s.mismatch() > 0.0;
        if s.mismatch() == 0.0 {
            return Some(s);
        }
        if positive == sign_a {
            a = mid;
        } else {
            b = mid;
        }
        best = Some(s);
    }
    best
}

/// Golden-section maximization of the score inside `[lo, hi]`, keeping only
/// points that stay unbiased.
fn refine_maximum<P: StepProbe + ?Sized>(
    probe: &P,
    config: &SchedulerConfig,
    survival: f64,
    lo: f64,
    hi: f64,
    start: Sample,
) -> Sample {
    let value = |dt: f64| -> Option<(f64, Sample)> {
        let (f, g) = probe.probe(dt)?;
        let s = Sample { dt, f, g };
        Some((score(config.objective, step_success(f, g, survival), dt), s))
    };
    let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (Some(mut v1), Some(mut v2)) = (value(x1), value(x2)) else {
        return start;
    };
    for _ in 0..GOLDEN_STEPS {
        if v1.0 > v2.0 {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - ratio * (b - a);
            match value(x1) {
                Some(v) => v1 = v,
                None => break,
            }
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + ratio * (b - a);
            match value(x2) {
                Some(v) => v2 = v,
                None => break,
            }
        }
    }
    let start_score = score(config.objective, step_success(start.f, start.g, survival), start.dt);
    let candidate = if v1.0 > v2.0 { v1 } else { v2 };
    if candidate.0 > start_score && candidate.1.dt > 0.0 && accepts(probe, config, &candidate.1) {
        candidate.1
    } else {
        start
    }
}

/// Picks the next measurement wait for the current probe state, given the
/// survival probability `P(l-1)` reached so far. `None` when no unbiased
/// time in `(0, horizon]` is worth measuring at.
pub fn find_next_time<P: StepProbe + ?Sized>(probe: &P, survival: f64, config: &SchedulerConfig) -> Option<StepChoice> {
    if !(survival > 0.0) {
        return None;
    }
    let steps = (config.horizon / config.time_step + 1e-9).floor() as usize;
    let mut samples = Vec::with_capacity(steps);
    for j in 1..=steps {
        let dt = j as f64 * config.time_step;
        match probe.probe(dt) {
            Some((f, g)) => samples.push(Sample { dt, f, g }),
            None => break,
        }
    }

    let rank = |s: &Sample| score(config.objective, step_success(s.f, s.g, survival), s.dt);
    // (score, sample, refinable grid point index)
    let mut best: Option<(f64, Sample, Option<usize>)> = None;
    let offer = |s: Sample, grid: Option<usize>, best: &mut Option<(f64, Sample, Option<usize>)>| {
        let r = rank(&s);
        if best.as_ref().is_none_or(|(b, _, _)| r > *b) {
            *best = Some((r, s, grid));
        }
    };

    for (j, s) in samples.iter().enumerate() {
        if accepts(probe, config, s) {
            offer(*s, Some(j), &mut best);
        }
        if let Some(next) = samples.get(j + 1) {
            let (a, b) = (s.mismatch(), next.mismatch());
            if (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0) {
                if let Some(root) = bisect_crossing(probe, s, next) {
                    if accepts(probe, config, &root) {
                        offer(root, None, &mut best);
                    }
                }
            }
        }
    }

    let (_, mut chosen, grid) = best?;
    if let Some(j) = grid {
        let lo = if j == 0 { 0.5 * samples[0].dt } else { samples[j - 1].dt };
        let hi = samples.get(j + 1).map_or(chosen.dt, |s| s.dt);
        chosen = refine_maximum(probe, config, survival, lo, hi, chosen);
    }
    let success = step_success(chosen.f, chosen.g, survival);
    if success < config.min_step_success || !(success > 0.0) {
        return None;
    }
    Some(StepChoice { interval: chosen.dt, f: chosen.f, g: chosen.g, step_success: success })
}

/// A measurement schedule and the trace it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    pub trace: ProjectedTrace,
    /// Whether the joint failure probability reached the target.
    pub achieved: bool,
    pub target_failure: f64,
}

impl MeasurementSchedule {
    pub fn intervals(&self) -> &[f64] {
        &self.trace.intervals
    }

    /// Number of measurements M.
    pub fn measurements(&self) -> usize {
        self.trace.len()
    }

    pub fn total_time(&self) -> f64 {
        self.trace.total_time()
    }

    /// Joint failure probability after the last measurement (worse branch).
    pub fn final_failure(&self) -> f64 {
        self.trace.worst_survival()
    }
}

/// Greedy schedule driven by any [`StepProbe`].
pub fn build_schedule_with<P: StepProbe + ?Sized>(
    probe: &mut P,
    config: &SchedulerConfig,
) -> Result<MeasurementSchedule> {
    config.validate()?;
    let mut trace = ProjectedTrace::new();
    loop {
        let survival = trace.worst_survival();
        if survival <= config.target_failure {
            return Ok(MeasurementSchedule { trace, achieved: true, target_failure: config.target_failure });
        }
        if trace.len() >= config.max_measurements {
            break;
        }
        match find_next_time(probe, survival, config) {
            Some(step) => probe.commit(step.interval, &mut trace),
            None => break,
        }
    }
    Ok(MeasurementSchedule { trace, achieved: false, target_failure: config.target_failure })
}

/// Greedy schedule for the chain pair `(prop1 → F, prop2 → G)`.
pub fn build_schedule(
    prop1: &SpectralPropagator,
    prop2: &SpectralPropagator,
    config: &SchedulerConfig,
) -> Result<MeasurementSchedule> {
    build_schedule_with(&mut PropagatorProbe::new(prop1, prop2), config)
}

#[cfg(test)]
mod tests {
    use core::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::dynamics::appendix_identities;
    use crate::hamiltonians::{build_chain, ChainSpec, DisorderConfig};

    fn prop(spec: &ChainSpec) -> SpectralPropagator {
        SpectralPropagator::from_chain(spec).unwrap()
    }

    #[test]
    fn two_site_identical_picks_pi_over_four() {
        let p = prop(&ChainSpec::uniform(2).unwrap());
        let mut config = SchedulerConfig::for_length(2);
        config.horizon = 1.5;
        let probe = PropagatorProbe::new(&p, &p);
        let step = find_next_time(&probe, 1.0, &config).unwrap();
        assert!((step.interval - FRAC_PI_4).abs() < 1e-6, "{}", step.interval);
        assert!((step.step_success - 1.0).abs() < 1e-10);
    }

    #[test]
    fn never_returns_zero_wait() {
        let p = prop(&ChainSpec::uniform(5).unwrap());
        let probe = PropagatorProbe::new(&p, &p);
        let step = find_next_time(&probe, 1.0, &SchedulerConfig::for_length(5)).unwrap();
        assert!(step.interval > 0.0);
        assert!(step.step_success > 0.0);
    }

    #[test]
    fn unrelated_chains_still_cross() {
        let a = prop(&build_chain(3, &DisorderConfig::new(0.3, 0.5, 1)).unwrap());
        let b = prop(&build_chain(7, &DisorderConfig::new(0.3, 0.5, 2)).unwrap());
        let config = SchedulerConfig::for_length(7);
        let probe = PropagatorProbe::new(&a, &b);
        let step = find_next_time(&probe, 1.0, &config).unwrap();
        assert!(config.amplitudes_match(step.f, step.g));
        // an independent look at the grid confirms a sign change brackets it
        let h = config.time_step;
        let lo = (step.interval / h).floor() * h;
        let d = |t: f64| a.amplitude(1, 3, t).unwrap().norm() - b.amplitude(1, 7, t).unwrap().norm();
        assert!(d(lo) * d(lo + h) <= 0.0 || d(step.interval).abs() < 1e-6);
    }

    #[test]
    fn target_one_is_immediately_achieved() {
        let p = prop(&ChainSpec::uniform(4).unwrap());
        let mut config = SchedulerConfig::for_length(4);
        config.target_failure = 1.0;
        let s = build_schedule(&p, &p, &config).unwrap();
        assert!(s.achieved);
        assert_eq!(s.measurements(), 0);
        assert_eq!(s.total_time(), 0.0);
    }

    #[test]
    fn identical_four_site_chains_reach_target() {
        let p = prop(&ChainSpec::uniform(4).unwrap());
        let mut config = SchedulerConfig::for_length(4);
        config.target_failure = 0.05;
        let s = build_schedule(&p, &p, &config).unwrap();
        assert!(s.achieved);
        assert!(s.trace.final_joint() <= 0.05);
        assert!(s.trace.joint_failure.windows(2).all(|w| w[1] < w[0]));
        assert!(s.trace.step_failure.iter().all(|&p| p < 1.0));
        assert!(appendix_identities(&s.trace).max_identity_residual() < 1e-10);
    }

    #[test]
    fn disordered_schedule_is_unbiased_and_deterministic() {
        let a = prop(&build_chain(8, &DisorderConfig::new(0.05, 0.5, 3)).unwrap());
        let b = prop(&build_chain(8, &DisorderConfig::new(0.05, 0.5, 4)).unwrap());
        let config = SchedulerConfig::for_length(8);
        let s = build_schedule(&a, &b, &config).unwrap();
        assert!(s.achieved);
        for (f, g) in s.trace.f.iter().zip(&s.trace.g) {
            assert!(config.amplitudes_match(*f, *g));
        }
        assert!(appendix_identities(&s.trace).max_identity_residual() < 1e-10);
        assert_eq!(s, build_schedule(&a, &b, &config).unwrap());
    }

    #[test]
    fn slope_matching_restricts_candidates() {
        let a = prop(&build_chain(6, &DisorderConfig::new(0.1, 0.5, 5)).unwrap());
        let b = prop(&build_chain(6, &DisorderConfig::new(0.1, 0.5, 6)).unwrap());
        let mut config = SchedulerConfig::for_length(6);
        config.slope_tolerance = Some(0.2);
        let probe = PropagatorProbe::new(&a, &b);
        if let Some(step) = find_next_time(&probe, 1.0, &config) {
            let (df, dg) = probe.modulus_rates(step.interval).unwrap();
            assert!((df - dg).abs() <= 0.2);
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let mut c = SchedulerConfig::for_length(4);
        c.time_step = 0.0;
        assert!(c.validate().is_err());
        let mut c = SchedulerConfig::for_length(4);
        c.target_failure = 0.0;
        assert!(c.validate().is_err());
    }
}
