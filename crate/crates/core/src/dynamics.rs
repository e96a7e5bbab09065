//! Exact single-excitation evolution and the measurement-interleaved
//! quantities F(l), G(l), v(l), w(l), p_l and P(l).
//!
//! Each chain is diagonalized once; afterwards evolving by any t costs O(N²)
//! for a full state and O(N) for the amplitude at Bob's site. The two
//! logical branches never mix (excitation number is conserved per chain), so
//! the failed-measurement projector Q reduces to zeroing the last site of each
//! branch independently.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

use crate::eigen::symmetric_eigen;
use crate::hamiltonians::{single_excitation_matrix, ChainSpec, SingleExcitationHamiltonian};
use crate::{Error, Result, C64};

/// Eigendecomposition of one chain's excitation block.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    sites: usize,
    values: Vec<f64>,
    /// Row-major `sites × sites`; `(i, k)` is component of site i+1 in mode k.
    vectors: Vec<f64>,
    vacuum_energy: f64,
}

/// Diagonalizes the excitation block; eigenpairs come out in ascending order.
pub fn diagonalize(h: &SingleExcitationHamiltonian) -> Result<SpectralPropagator> {
    let block = h.excitation_block();
    let eig = symmetric_eigen(&block)?;
    Ok(SpectralPropagator {
        sites: block.dim(),
        values: eig.values,
        vectors: eig.vectors,
        vacuum_energy: h.vacuum_energy(),
    })
}

#[inline]
fn phase(angle: f64) -> C64 {
    let (s, c) = angle.sin_cos();
    C64::new(c, s)
}

impl SpectralPropagator {
    pub fn from_chain(spec: &ChainSpec) -> Result<Self> {
        diagonalize(&single_excitation_matrix(spec))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Component of site `site` (1-based) in eigenmode `mode` (0-based).
    #[inline]
    pub fn mode_component(&self, site: usize, mode: usize) -> f64 {
        self.vectors[(site - 1) * self.sites + mode]
    }

    pub fn vacuum_energy(&self) -> f64 {
        self.vacuum_energy
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return Err(Error::Site { site, len: self.sites });
        }
        Ok(())
    }

    /// `⟨to| e^{-iHt} |from⟩` in the raw block frame (no vacuum rotation removed).
    pub fn amplitude(&self, from: usize, to: usize, t: f64) -> Result<C64> {
        self.check_site(from)?;
        self.check_site(to)?;
        Ok((0..self.sites)
            .map(|k| phase(-self.values[k] * t) * (self.mode_component(to, k) * self.mode_component(from, k)))
            .sum())
    }

    /// Same amplitude measured relative to the vacuum, i.e. evolution under `H - E_vac`.
    pub fn gauge_amplitude(&self, from: usize, to: usize, t: f64) -> Result<C64> {
        Ok(self.amplitude(from, to, t)? * phase(self.vacuum_energy * t))
    }

    /// Site amplitudes → mode coefficients.
    pub fn to_modes(&self, state: &[C64]) -> Vec<C64> {
        let n = self.sites;
        (0..n).map(|k| (0..n).map(|i| state[i] * self.vectors[i * n + k]).sum()).collect()
    }

    /// Mode coefficients → site amplitudes.
    pub fn from_modes(&self, coeffs: &[C64]) -> Vec<C64> {
        let n = self.sites;
        (0..n).map(|i| (0..n).map(|k| coeffs[k] * self.vectors[i * n + k]).sum()).collect()
    }

    /// `e^{-iHt} ψ` for a state in the site basis.
    pub fn evolve(&self, state: &[C64], t: f64) -> Vec<C64> {
        let coeffs: Vec<C64> =
            self.to_modes(state).into_iter().zip(&self.values).map(|(c, &e)| c * phase(-e * t)).collect();
        self.from_modes(&coeffs)
    }

    /// `max |V Λ Vᵀ - H|` against the block the propagator was built from.
    pub fn reconstruction_error(&self, h: &SingleExcitationHamiltonian) -> f64 {
        let n = self.sites;
        let block = h.excitation_block();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let rec: f64 = (0..n).map(|k| self.vectors[i * n + k] * self.values[k] * self.vectors[j * n + k]).sum();
                worst = worst.max((rec - block.get(i, j)).abs());
            }
        }
        worst
    }

    /// `max |V Vᵀ - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.sites;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.vectors[i * n + k] * self.vectors[j * n + k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// One logical branch (an excitation on one chain) under repeated
/// evolve-then-fail steps. Stored in the eigenbasis of its chain.
#[derive(Debug, Clone)]
pub struct Branch<'a> {
    prop: &'a SpectralPropagator,
    modes: Vec<C64>,
    /// `V[N, k] c_k`: Bob's amplitude after dt is `Σ_k bob[k] e^{-iλ_k dt}`.
    bob: Vec<C64>,
}

impl<'a> Branch<'a> {
    /// Excitation placed on `site` (1-based).
    pub fn launch(prop: &'a SpectralPropagator, site: usize) -> Result<Self> {
        prop.check_site(site)?;
        let mut state = vec![C64::new(0.0, 0.0); prop.sites];
        state[site - 1] = C64::new(1.0, 0.0);
        Ok(Self::from_sites(prop, &state))
    }

    pub fn from_sites(prop: &'a SpectralPropagator, state: &[C64]) -> Self {
        let modes = prop.to_modes(state);
        let bob = Self::bob_weights(prop, &modes);
        Self { prop, modes, bob }
    }

    fn bob_weights(prop: &SpectralPropagator, modes: &[C64]) -> Vec<C64> {
        let last = prop.sites;
        modes.iter().enumerate().map(|(k, &c)| c * prop.mode_component(last, k)).collect()
    }

    pub fn propagator(&self) -> &'a SpectralPropagator {
        self.prop
    }

    /// Amplitude at the last site if the branch evolves for `dt` from now.
    pub fn bob_amplitude(&self, dt: f64) -> C64 {
        self.bob.iter().zip(&self.prop.values).map(|(&w, &e)| w * phase(-e * dt)).sum()
    }

    /// Bob's amplitude and its time derivative after `dt`.
    pub fn bob_amplitude_with_rate(&self, dt: f64) -> (C64, C64) {
        let mut amp = C64::new(0.0, 0.0);
        let mut rate = C64::new(0.0, 0.0);
        for (&w, &e) in self.bob.iter().zip(&self.prop.values) {
            let term = w * phase(-e * dt);
            amp += term;
            rate += term * C64::new(0.0, -e);
        }
        (amp, rate)
    }

    /// Squared norm of the branch; evolution preserves it, projections shrink it.
    pub fn norm_sqr(&self) -> f64 {
        self.modes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Evolve for `dt` without measuring.
    pub fn evolve(&mut self, dt: f64) {
        for (c, &e) in self.modes.iter_mut().zip(&self.prop.values) {
            *c *= phase(-e * dt);
        }
        self.bob = Self::bob_weights(self.prop, &self.modes);
    }

    /// Evolve for `dt`, then remove the last-site component (a failed
    /// heralding measurement). Returns the removed amplitude.
    pub fn evolve_and_project(&mut self, dt: f64) -> C64 {
        self.evolve(dt);
        let last = self.prop.sites;
        let at_bob: C64 = self.bob.iter().sum();
        for (k, c) in self.modes.iter_mut().enumerate() {
            *c -= at_bob * self.prop.mode_component(last, k);
        }
        self.bob = Self::bob_weights(self.prop, &self.modes);
        at_bob
    }

    /// Current site amplitudes.
    pub fn sites(&self) -> Vec<C64> {
        self.prop.from_modes(&self.modes)
    }
}

/// Wraps an angle to `(-π, π]`.
pub(crate) fn wrap_phase(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// The record of a sequence of failed heralding measurements.
///
/// `f` is the β branch (launched on chain 1), `g` the α branch (chain 2).
/// They are stored in the frame of whichever route produced them: the raw
/// block frame for Hamiltonian-level traces, the vacuum gauge for traces
/// rebuilt from endpoint tomography. Moduli agree across frames and
/// `phases` is always the physical relative phase Bob has to undo.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectedTrace {
    /// t_l, the wait before measurement l.
    pub intervals: Vec<f64>,
    /// τ_l = Σ_{i≤l} t_i.
    pub cumulative: Vec<f64>,
    pub f: Vec<C64>,
    pub g: Vec<C64>,
    /// v(1), …, v(M+1): squared norm of the β branch just before measurement l.
    pub v: Vec<f64>,
    /// w(1), …, w(M+1), same for the α branch.
    pub w: Vec<f64>,
    /// p_l = 1 - |F(l)|² / P(l-1).
    pub step_failure: Vec<f64>,
    /// P(1), …, P(M).
    pub joint_failure: Vec<f64>,
    /// φ_l = arg G(l) - arg F(l) in the vacuum gauge, wrapped to (-π, π].
    pub phases: Vec<f64>,
}

impl ProjectedTrace {
    pub fn new() -> Self {
        Self { v: vec![1.0], w: vec![1.0], ..Self::default() }
    }

    /// Number of measurements M.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// P(l) with P(0) = 1.
    pub fn joint(&self, l: usize) -> f64 {
        if l == 0 {
            1.0
        } else {
            self.joint_failure[l - 1]
        }
    }

    /// P(M), or 1 for an empty trace.
    pub fn final_joint(&self) -> f64 {
        self.joint(self.len())
    }

    pub fn total_time(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Survival of the worse branch after all measurements: `max(v(M+1), w(M+1))`.
    pub fn worst_survival(&self) -> f64 {
        self.v.last().copied().unwrap_or(1.0).max(self.w.last().copied().unwrap_or(1.0))
    }

    /// Appends measurement l = M + 1. `norms` are `(v(l+1), w(l+1))` when the
    /// route can compute them directly; otherwise they follow from `|F|²` and `|G|²`.
    pub fn push(&mut self, interval: f64, f: C64, g: C64, phase: f64, norms: Option<(f64, f64)>) {
        let prev_joint = self.final_joint();
        let (v_next, w_next) = norms.unwrap_or_else(|| {
            ((self.v.last().unwrap() - f.norm_sqr()).max(0.0), (self.w.last().unwrap() - g.norm_sqr()).max(0.0))
        });
        let step = if prev_joint > 0.0 { 1.0 - f.norm_sqr() / prev_joint } else { 1.0 };
        let step = step.clamp(0.0, 1.0);
        self.intervals.push(interval);
        self.cumulative.push(self.total_time() + interval);
        self.f.push(f);
        self.g.push(g);
        self.v.push(v_next);
        self.w.push(w_next);
        self.step_failure.push(step);
        self.joint_failure.push(prev_joint * step);
        self.phases.push(wrap_phase(phase));
    }
}

/// The two branches of a dual-rail transfer evolving side by side.
#[derive(Debug, Clone)]
pub struct BranchPair<'a> {
    /// β branch, chain 1.
    pub first: Branch<'a>,
    /// α branch, chain 2.
    pub second: Branch<'a>,
    elapsed: f64,
}

impl<'a> BranchPair<'a> {
    pub fn launch(prop1: &'a SpectralPropagator, prop2: &'a SpectralPropagator) -> Self {
        Self {
            first: Branch::launch(prop1, 1).expect("chains have at least one site"),
            second: Branch::launch(prop2, 1).expect("chains have at least one site"),
            elapsed: 0.0,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// `(F, G)` at Bob's sites if the next measurement happens after `dt`.
    pub fn probe(&self, dt: f64) -> (C64, C64) {
        (self.first.bob_amplitude(dt), self.second.bob_amplitude(dt))
    }

    /// Physical relative phase of G against F at absolute time `tau`.
    pub fn physical_phase(&self, f: C64, g: C64, tau: f64) -> f64 {
        let shift = self.second.propagator().vacuum_energy() - self.first.propagator().vacuum_energy();
        g.arg() - f.arg() + shift * tau
    }

    /// Evolve both branches by `dt` and apply Q; appends the step to `trace`.
    pub fn measure(&mut self, dt: f64, trace: &mut ProjectedTrace) {
        let f = self.first.evolve_and_project(dt);
        let g = self.second.evolve_and_project(dt);
        self.elapsed += dt;
        let phase = self.physical_phase(f, g, self.elapsed);
        trace.push(dt, f, g, phase, Some((self.first.norm_sqr(), self.second.norm_sqr())));
    }
}

/// Runs the evolve-then-project recursion for the given intervals on the pair
/// `(chain 1 → F, chain 2 → G)`.
pub fn projected_trace(
    prop1: &SpectralPropagator,
    prop2: &SpectralPropagator,
    intervals: &[f64],
) -> Result<ProjectedTrace> {
    for (index, &value) in intervals.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Interval { index, value });
        }
    }
    let mut pair = BranchPair::launch(prop1, prop2);
    let mut trace = ProjectedTrace::new();
    for &dt in intervals {
        pair.measure(dt, &mut trace);
    }
    Ok(trace)
}

/// Residuals of the norm identities relating F, G, v, w and P.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixReport {
    /// `max_l | |F(l)|² - (v(l) - v(l+1)) |`
    pub f_residual: f64,
    /// `max_l | |G(l)|² - (w(l) - w(l+1)) |`
    pub g_residual: f64,
    /// `max_l | P(l) - v(l+1) |`
    pub joint_residual: f64,
    /// `max_l | |F(l)| - |G(l)| |`
    pub amplitude_mismatch: f64,
    /// `max_l | v(l) - w(l) |`
    pub norm_mismatch: f64,
}

impl AppendixReport {
    pub fn max_identity_residual(&self) -> f64 {
        self.f_residual.max(self.g_residual).max(self.joint_residual)
    }
}

pub fn appendix_identities(trace: &ProjectedTrace) -> AppendixReport {
    let mut r = AppendixReport {
        f_residual: 0.0,
        g_residual: 0.0,
        joint_residual: 0.0,
        amplitude_mismatch: 0.0,
        norm_mismatch: 0.0,
    };
    for l in 0..trace.len() {
        r.f_residual = r.f_residual.max((trace.f[l].norm_sqr() - (trace.v[l] - trace.v[l + 1])).abs());
        r.g_residual = r.g_residual.max((trace.g[l].norm_sqr() - (trace.w[l] - trace.w[l + 1])).abs());
        r.joint_residual = r.joint_residual.max((trace.joint_failure[l] - trace.v[l + 1]).abs());
        r.amplitude_mismatch = r.amplitude_mismatch.max((trace.f[l].norm() - trace.g[l].norm()).abs());
    }
    for (v, w) in trace.v.iter().zip(&trace.w) {
        r.norm_mismatch = r.norm_mismatch.max((v - w).abs());
    }
    r
}
