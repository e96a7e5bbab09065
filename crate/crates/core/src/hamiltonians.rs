//! Disordered Heisenberg chains and their single-excitation matrices.
//!
//! A chain of `N` qubits carries `N - 1` bonds with Hamiltonian
//! `Σ_n J_n σ_n · σ_{n+1}` (Pauli matrices, not spin-½ operators). Total `σ_z`
//! is conserved, so the all-down state `|0…0⟩` is an eigenstate and a single
//! flipped spin `|m⟩` stays in the `N`-dimensional single-excitation sector.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::SymmetricMatrix;
use crate::{Error, Result};

/// Normalization of the exchange term `J_n σ_n · σ_{n+1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `H = Σ J_n σ_n·σ_{n+1}`: hopping `2J`, ZZ energies `±J`.
    #[default]
    Pauli,
    /// `H = Σ (J_n/2) σ_n·σ_{n+1}`: hopping `J`, ZZ energies `±J/2`. Every
    /// time scale is twice the Pauli one.
    HalfPauli,
}

impl Convention {
    /// Factor multiplying the Pauli-convention Hamiltonian.
    pub fn scale(self) -> f64 {
        match self {
            Convention::Pauli => 1.0,
            Convention::HalfPauli => 0.5,
        }
    }

    /// Single-excitation hopping amplitude for a unit coupling.
    pub fn hopping(self) -> f64 {
        2.0 * self.scale()
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Pauli => "pauli",
            Convention::HalfPauli => "half-pauli",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pauli" => Some(Convention::Pauli),
            "half-pauli" | "half" => Some(Convention::HalfPauli),
            _ => None,
        }
    }
}

/// One chain: its bond couplings in units of J. The chain has `couplings.len() + 1` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    couplings: Vec<f64>,
    convention: Convention,
}

impl ChainSpec {
    /// Couplings must be finite and non-negative. A zero coupling cuts the
    /// chain; disordered chains from [`build_chain`] are always strictly positive.
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        for (index, &value) in couplings.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Coupling { index, value });
            }
        }
        Ok(Self { couplings, convention: Convention::Pauli })
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Uniform chain with every coupling equal to J = 1.
    pub fn uniform(len: usize) -> Result<Self> {
        if len < 1 {
            return Err(Error::ChainTooShort { min: 1, got: len });
        }
        Self::new(vec![1.0; len - 1])
    }

    /// Number of qubits N.
    pub fn len(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Energy of `|0…0⟩`: every bond contributes its ZZ term `+J_b` (times the convention scale).
    pub fn vacuum_energy(&self) -> f64 {
        self.convention.scale() * self.couplings.iter().sum::<f64>()
    }
}

/// Parameters of the coupling disorder `J_n = 1 + δ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderConfig {
    /// Δ: every δ_n lies in `[-Δ, Δ]`.
    pub strength: f64,
    /// c: probability that δ_n has the same sign as δ_{n-1}. 0.5 means uncorrelated.
    pub sign_correlation: f64,
    pub seed: u64,
}

impl DisorderConfig {
    pub fn new(strength: f64, sign_correlation: f64, seed: u64) -> Self {
        Self { strength, sign_correlation, seed }
    }

    pub fn clean() -> Self {
        Self::new(0.0, 0.5, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.strength) {
            return Err(Error::DisorderStrength(self.strength));
        }
        if !(0.0..=1.0).contains(&self.sign_correlation) {
            return Err(Error::SignCorrelation(self.sign_correlation));
        }
        Ok(())
    }
}

/// Draws `bonds` fluctuations δ_n.
///
/// Magnitudes are uniform on `[0, Δ]`. The first sign is a fair coin; each
/// later sign repeats its predecessor with probability c and flips otherwise.
/// At c = 0.5 this is exactly δ_n uniform on `[-Δ, Δ]`.
pub fn sample_disorder(config: &DisorderConfig, bonds: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if bonds == 0 {
        return Err(Error::ChainTooShort { min: 2, got: 1 });
    }
    if config.strength == 0.0 {
        return Ok(vec![0.0; bonds]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(bonds);
    let mut positive = rng.random_bool(0.5);
    for n in 0..bonds {
        if n > 0 && !rng.random_bool(config.sign_correlation) {
            positive = !positive;
        }
        let magnitude = config.strength * rng.random::<f64>();
        out.push(if positive { magnitude } else { -magnitude });
    }
    Ok(out)
}

/// Builds a disordered chain of `len` qubits with couplings `1 + δ_n`.
pub fn build_chain(len: usize, config: &DisorderConfig) -> Result<ChainSpec> {
    if len < 2 {
        return Err(Error::ChainTooShort { min: 2, got: len });
    }
    let deltas = sample_disorder(config, len - 1)?;
    ChainSpec::new(deltas.into_iter().map(|d| 1.0 + d).collect())
}

/// The chain Hamiltonian restricted to `span{|0…0⟩, |1⟩, …, |N⟩}`.
///
/// Row/column 0 is the vacuum, row/column m is the excitation at site m.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationHamiltonian {
    matrix: SymmetricMatrix,
}

impl SingleExcitationHamiltonian {
    /// Wraps an `(N+1)×(N+1)` matrix whose row 0 is the decoupled vacuum.
    pub fn from_matrix(matrix: SymmetricMatrix) -> Result<Self> {
        matrix.check_symmetric(1e-12)?;
        if matrix.dim() < 2 {
            return Err(Error::ChainTooShort { min: 1, got: 0 });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    /// Number of sites N.
    pub fn sites(&self) -> usize {
        self.matrix.dim() - 1
    }

    pub fn vacuum_energy(&self) -> f64 {
        self.matrix.get(0, 0)
    }

    /// The N×N excitation block, site m at index m - 1.
    pub fn excitation_block(&self) -> SymmetricMatrix {
        let n = self.sites();
        let mut block = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                block.set(i, j, self.matrix.get(i + 1, j + 1));
            }
        }
        block
    }
}

/// In the Pauli convention: hopping `2 J_b` between the sites of bond b, and
/// on-site energy `Σ_b J_b s_b(m)` with `s_b(m) = -1` when b touches m. Other
/// conventions rescale every entry.
pub fn single_excitation_matrix(spec: &ChainSpec) -> SingleExcitationHamiltonian {
    let n = spec.len();
    let scale = spec.convention().scale();
    let couplings: Vec<f64> = spec.couplings().iter().map(|j| scale * j).collect();
    let vacuum = spec.vacuum_energy();
    let mut matrix = SymmetricMatrix::zeros(n + 1);
    matrix.set(0, 0, vacuum);
    for m in 1..=n {
        // bonds are 1-based: bond b joins sites b and b+1
        let touching: f64 =
            couplings.iter().enumerate().filter(|(b, _)| b + 1 == m || b + 2 == m).map(|(_, j)| j).sum();
        matrix.set(m, m, vacuum - 2.0 * touching);
    }
    for (b, &j) in couplings.iter().enumerate() {
        matrix.set(b + 1, b + 2, 2.0 * j);
        matrix.set(b + 2, b + 1, 2.0 * j);
    }
    SingleExcitationHamiltonian { matrix }
}
