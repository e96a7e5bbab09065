//! End-to-end conclusive transfer of one logical qubit.
//!
//! Alice writes `α|0,1⟩ + β|1,0⟩`: β rides an excitation on chain 1, α one on
//! chain 2. Bob waits, applies a CNOT between his two end qubits (chain 1's
//! as control), and measures chain 2's end qubit. Outcome 1 heralds success
//! and leaves `e^{iφ}α|0⟩ + β|1⟩` on chain 1's end qubit; outcome 0 projects the
//! chains with Q and the excitation keeps travelling.
//!
//! Amplitudes are tracked per branch, never as a 2^(2N) state vector. Each
//! branch carries the vacuum phase of the idle chain so that relative phases
//! are physical.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::{wrap_phase, ProjectedTrace, SpectralPropagator};
use crate::scheduler::MeasurementSchedule;
use crate::{Error, Result, C64};

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

/// A normalized logical qubit `α|0⟩ + β|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalQubit {
    alpha: C64,
    beta: C64,
}

impl LogicalQubit {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { alpha, beta })
    }

    /// Point on the Bloch sphere: `cos(θ/2)|0⟩ + e^{iϕ} sin(θ/2)|1⟩`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { alpha: C64::new(c, 0.0), beta: C64::from_polar(s, phi) }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// `|⟨self|other⟩|²` for a normalized pair of amplitudes.
    pub fn fidelity(&self, amplitudes: [C64; 2]) -> f64 {
        (self.alpha.conj() * amplitudes[0] + self.beta.conj() * amplitudes[1]).norm_sqr()
    }
}

/// State of the chains during a transfer.
///
/// `chain1` is the unit-weight β branch `Π{U(t_i)Q}|1,0⟩` and `chain2` the
/// α branch `Π{U(t_i)Q}|0,1⟩`, both including the idle chain's vacuum
/// phase. The physical (unnormalized) state is `β·chain1 ⊕ α·chain2`; its
/// squared norm is the probability that every measurement so far failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationState {
    qubit: LogicalQubit,
    chain1: Vec<C64>,
    chain2: Vec<C64>,
    elapsed: f64,
}

/// Alice's encoding on chains of `len1` and `len2` sites.
pub fn encode(qubit: LogicalQubit, len1: usize, len2: usize) -> Result<ExcitationState> {
    if len1 == 0 || len2 == 0 {
        return Err(Error::ChainTooShort { min: 1, got: 0 });
    }
    let mut chain1 = vec![C64::new(0.0, 0.0); len1];
    let mut chain2 = vec![C64::new(0.0, 0.0); len2];
    chain1[0] = C64::new(1.0, 0.0);
    chain2[0] = C64::new(1.0, 0.0);
    Ok(ExcitationState { qubit, chain1, chain2, elapsed: 0.0 })
}

impl ExcitationState {
    pub fn qubit(&self) -> LogicalQubit {
        self.qubit
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Physical amplitudes of `|n,0⟩`, i.e. `β` times the chain-1 branch.
    pub fn chain1_amplitudes(&self) -> Vec<C64> {
        self.chain1.iter().map(|&a| a * self.qubit.beta).collect()
    }

    /// Physical amplitudes of `|0,n⟩`, i.e. `α` times the chain-2 branch.
    pub fn chain2_amplitudes(&self) -> Vec<C64> {
        self.chain2.iter().map(|&a| a * self.qubit.alpha).collect()
    }

    /// Squared norm of the physical state: the survival probability so far.
    pub fn norm_sqr(&self) -> f64 {
        let n1: f64 = self.chain1.iter().map(|a| a.norm_sqr()).sum();
        let n2: f64 = self.chain2.iter().map(|a| a.norm_sqr()).sum();
        self.qubit.beta.norm_sqr() * n1 + self.qubit.alpha.norm_sqr() * n2
    }

    /// The renormalized post-failure state `(chain 1, chain 2)`.
    pub fn normalized_amplitudes(&self) -> (Vec<C64>, Vec<C64>) {
        let scale = 1.0 / self.norm_sqr().sqrt();
        (
            self.chain1_amplitudes().into_iter().map(|a| a * scale).collect(),
            self.chain2_amplitudes().into_iter().map(|a| a * scale).collect(),
        )
    }

    /// Unit-weight branch amplitudes at Bob's two end sites: `(F, G)` up to vacuum phases.
    pub fn bob_branch_amplitudes(&self) -> (C64, C64) {
        (*self.chain1.last().unwrap(), *self.chain2.last().unwrap())
    }
}

/// What Bob does in one round: wait `interval`, then measure; on success
/// undo the relative phase `phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundPlan {
    pub interval: f64,
    pub phase: f64,
    /// Relative amplitude tolerance ε for the bias flag.
    pub tolerance: f64,
}

impl RoundPlan {
    /// Round `l` (1-based) of a recorded trace.
    pub fn from_trace(trace: &ProjectedTrace, l: usize, tolerance: f64) -> Self {
        Self { interval: trace.intervals[l - 1], phase: trace.phases[l - 1], tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundOutcome {
    Success {
        /// Bob's logical qubit after the phase gate.
        output: [C64; 2],
        /// `|⟨input|output⟩|²`.
        fidelity: f64,
        /// Angle of the applied gate `diag(1, e^{i·correction})`.
        correction: f64,
    },
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundReport {
    pub outcome: RoundOutcome,
    /// Conditional success probability of this round for this input.
    pub success_probability: f64,
    /// `| |F| - |G| |` at the measurement.
    pub mismatch: f64,
    /// The measurement leaked information about (α, β).
    pub biased: bool,
}

const BIAS_FLOOR: f64 = 1e-6;

/// One wait-decode-measure round.
pub fn run_round<R: Rng + ?Sized>(
    mut state: ExcitationState,
    prop1: &SpectralPropagator,
    prop2: &SpectralPropagator,
    plan: RoundPlan,
    rng: &mut R,
) -> Result<(RoundReport, ExcitationState)> {
    if !(plan.interval >= 0.0) || !plan.interval.is_finite() {
        return Err(Error::Interval { index: 0, value: plan.interval });
    }
    if state.chain1.len() != prop1.sites() {
        return Err(Error::Site { site: state.chain1.len(), len: prop1.sites() });
    }
    if state.chain2.len() != prop2.sites() {
        return Err(Error::Site { site: state.chain2.len(), len: prop2.sites() });
    }
    let t = plan.interval;
    let idle2 = C64::from_polar(1.0, -prop2.vacuum_energy() * t);
    let idle1 = C64::from_polar(1.0, -prop1.vacuum_energy() * t);
    state.chain1 = prop1.evolve(&state.chain1, t).into_iter().map(|a| a * idle2).collect();
    state.chain2 = prop2.evolve(&state.chain2, t).into_iter().map(|a| a * idle1).collect();
    state.elapsed += t;

    let (f, g) = state.bob_branch_amplitudes();
    let (alpha, beta) = (state.qubit.alpha, state.qubit.beta);
    // after the CNOT, chain 1's end qubit holds |0⟩ for the α branch and |1⟩ for β
    let bob = [alpha * g, beta * f];
    let arrived = bob[0].norm_sqr() + bob[1].norm_sqr();
    let survival = state.norm_sqr();
    let success_probability = if survival > 0.0 { (arrived / survival).min(1.0) } else { 0.0 };
    let mismatch = (f.norm() - g.norm()).abs();
    let biased = mismatch > plan.tolerance * f.norm().max(g.norm()).max(BIAS_FLOOR);

    let outcome = if rng.random::<f64>() < success_probability {
        let scale = 1.0 / arrived.sqrt();
        let correction = wrap_phase(plan.phase);
        let output = [bob[0] * scale, bob[1] * scale * C64::from_polar(1.0, correction)];
        let fidelity = state.qubit.fidelity(output);
        for a in state.chain1.iter_mut().chain(state.chain2.iter_mut()) {
            *a = C64::new(0.0, 0.0);
        }
        RoundOutcome::Success { output, fidelity, correction }
    } else {
        *state.chain1.last_mut().unwrap() = C64::new(0.0, 0.0);
        *state.chain2.last_mut().unwrap() = C64::new(0.0, 0.0);
        RoundOutcome::Failure
    };
    Ok((RoundReport { outcome, success_probability, mismatch, biased }, state))
}

/// Result of running a whole schedule on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub input: LogicalQubit,
    pub rounds: Vec<RoundReport>,
    /// 1-based round of the heralded success, if any.
    pub success_round: Option<usize>,
    /// Bob's corrected logical qubit on success.
    pub output: Option<[C64; 2]>,
    pub fidelity: Option<f64>,
    pub correction: Option<f64>,
}

impl TransferRecord {
    pub fn succeeded(&self) -> bool {
        self.success_round.is_some()
    }
}

/// Runs the schedule's rounds until Bob's measurement heralds success.
pub fn run_transfer<R: Rng + ?Sized>(
    qubit: LogicalQubit,
    schedule: &MeasurementSchedule,
    tolerance: f64,
    prop1: &SpectralPropagator,
    prop2: &SpectralPropagator,
    rng: &mut R,
) -> Result<TransferRecord> {
    let mut state = encode(qubit, prop1.sites(), prop2.sites())?;
    let mut record = TransferRecord {
        input: qubit,
        rounds: Vec::with_capacity(schedule.measurements()),
        success_round: None,
        output: None,
        fidelity: None,
        correction: None,
    };
    for l in 1..=schedule.measurements() {
        let plan = RoundPlan::from_trace(&schedule.trace, l, tolerance);
        let (report, next) = run_round(state, prop1, prop2, plan, rng)?;
        state = next;
        record.rounds.push(report);
        if let RoundOutcome::Success { output, fidelity, correction } = report.outcome {
            record.success_round = Some(l);
            record.output = Some(output);
            record.fidelity = Some(fidelity);
            record.correction = Some(correction);
            break;
        }
    }
    Ok(record)
}
