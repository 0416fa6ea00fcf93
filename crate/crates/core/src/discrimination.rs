//! Distinguishability of pure and mixed chain states.
//!
//! Overlaps of eigenvalue distributions, the system purity rate, the
//! interference-term analysis and the search for an observable that has the
//! entangled chain state and both product branches as eigenstates with
//! distinct eigenvalues.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{branch_mixture, mixture_density, system_mixture, EventStreams, Gemenge};
use crate::error::{Error, Result};
use crate::hilbert::{
    eigen_residual, embed_matrix, embed_operator, is_eigenstate, outcome_distribution, sigma_x,
    sigma_y, sigma_z, CMatrix, DensityMatrix, Observable, QuantumState, SpaceLayout, StateVector,
    C64,
};
use crate::model::{
    self, branch_state, chain_layout, interference_ms, interference_sd, measurement_chain,
    pointer_algebra, prepare_system, spin_a, system_detector_state, Amplitudes, Branch,
    InterferenceCoefficients, ZooParams, DETECTOR, OBSERVER, SYSTEM,
};

/// Eigenvalues closer than this are not "distinct" for the no-go predicate.
pub const DISTINCT_EIGENVALUE_GAP: f64 = 1e-6;
/// Smallest total candidate count accepted by [`nogo_search`].
pub const MIN_NOGO_SAMPLES: usize = 10_000;
/// Uniform grid size of the phase scans.
pub const PHASE_GRID: usize = 3600;
/// Number of Bloch directions swept on the detector side.
pub const DETECTOR_DIRECTIONS: usize = 1000;
/// Identity checks in the forcing argument are exact up to this.
pub const FORCING_TOL: f64 = 1e-12;
/// Purity rates below this leave the optimal phase undefined.
pub const INDETERMINATE_RATE: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Overlap

/// Probabilities of one eigenvalue in the two compared states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightPair {
    pub eigenvalue: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Overlap of the eigenvalue distributions of one observable in two states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub observable_name: String,
    /// `K = Σ min(w₁, w₂)`: the common part of the two distributions.
    pub k_value: f64,
    /// `Σ √(w₁w₂)`, reported alongside for comparison.
    pub bhattacharyya: f64,
    pub weights: Vec<WeightPair>,
}

impl OverlapReport {
    pub fn from_weights(name: impl Into<String>, weights: Vec<WeightPair>) -> Self {
        let k: f64 = weights.iter().map(|w| w.w1.min(w.w2)).sum();
        let b: f64 = weights.iter().map(|w| (w.w1 * w.w2).sqrt()).sum();
        Self {
            observable_name: name.into(),
            k_value: k.clamp(0.0, 1.0),
            bhattacharyya: b.clamp(0.0, 1.0),
            weights,
        }
    }
}

/// Overlap of `op`'s outcome distributions in `first` and `second`.
pub fn overlap<A, B>(name: &str, op: &Observable, first: &A, second: &B) -> Result<OverlapReport>
where
    A: QuantumState + ?Sized,
    B: QuantumState + ?Sized,
{
    let d1 = outcome_distribution(first, op)?;
    let d2 = outcome_distribution(second, op)?;
    let weights = d1
        .iter()
        .zip(&d2)
        .map(|(x, y)| WeightPair {
            eigenvalue: x.eigenvalue,
            w1: x.probability,
            w2: y.probability,
        })
        .collect();
    Ok(OverlapReport::from_weights(name, weights))
}

// ---------------------------------------------------------------------------
// Purity rate

fn require_single_qubit(layout: &SpaceLayout) -> Result<()> {
    if layout.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "expected a single-qubit state, got layout {layout}"
        )));
    }
    Ok(())
}

/// `r_p = 2|Tr(ρ S_a(γ))|`.
pub fn purity_rate<S: QuantumState + ?Sized>(rho: &S, gamma: f64) -> Result<f64> {
    require_single_qubit(rho.layout())?;
    Ok(2.0 * rho.expect(&spin_a(gamma)).re.abs())
}

/// Result of the phase scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseOptimum {
    /// Maximizing phase in `[0, 2π)`; `None` when the rate vanishes for every phase.
    pub gamma: Option<f64>,
    pub purity_rate: f64,
}

/// Maximizes `⟨S_a(γ)⟩` over a uniform grid of [`PHASE_GRID`] phases followed
/// by golden-section refinement around the best grid point.
pub fn optimal_phase<S: QuantumState + ?Sized>(rho: &S) -> Result<PhaseOptimum> {
    require_single_qubit(rho.layout())?;
    let (gamma, value) = scan_max(|g| rho.expect(&spin_a(g)).re, PHASE_GRID);
    let purity_rate = 2.0 * value.max(0.0);
    Ok(PhaseOptimum {
        gamma: (purity_rate > INDETERMINATE_RATE).then_some(gamma),
        purity_rate,
    })
}

/// Grid scan of a periodic function on `[0, 2π)` plus golden-section
/// refinement; returns the maximizer and maximum.
fn scan_max<F: Fn(f64) -> f64>(f: F, grid: usize) -> (f64, f64) {
    let step = TAU / grid as f64;
    let (best_k, _) = (0..grid)
        .map(|k| (k, f(k as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let center = best_k as f64 * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    let candidates = [(center, f(center)), (x1, f1), (x2, f2)];
    let (x, fx) = candidates
        .into_iter()
        .fold((center, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    (x.rem_euclid(TAU), fx)
}

// ---------------------------------------------------------------------------
// Eigenvalue discrimination predicate

/// Eigenvalues of a discriminating observable: `g₀` on the target state,
/// `g₁, g₂` on the branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenTriple {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl EigenTriple {
    /// `min(|g₀ − g₁|, |g₀ − g₂|)`.
    pub fn min_gap(&self) -> f64 {
        (self.g0 - self.g1).abs().min((self.g0 - self.g2).abs())
    }

    pub fn is_discriminating(&self) -> bool {
        self.min_gap() > DISTINCT_EIGENVALUE_GAP
    }
}

/// Returns the eigenvalue triple when `target` and both `branches` are
/// eigenstates of `g` at `tol` and `g₀` differs from both `g₁` and `g₂`.
pub fn eigen_discrimination_test(
    g: &Observable,
    target: &StateVector,
    branches: [&StateVector; 2],
    tol: f64,
) -> Result<Option<EigenTriple>> {
    check_orthonormal(branches)?;
    let Some(g0) = is_eigenstate(g, target, tol)? else {
        return Ok(None);
    };
    let Some(g1) = is_eigenstate(g, branches[0], tol)? else {
        return Ok(None);
    };
    let Some(g2) = is_eigenstate(g, branches[1], tol)? else {
        return Ok(None);
    };
    let triple = EigenTriple { g0, g1, g2 };
    Ok(triple.is_discriminating().then_some(triple))
}

fn check_orthonormal(branches: [&StateVector; 2]) -> Result<()> {
    let ip = branches[0].inner(branches[1])?;
    if ip.norm() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "branch states are not orthogonal (overlap {ip})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// No-go search

/// The chain state and its two product branches.
#[derive(Clone, Debug, PartialEq)]
pub struct NogoStates {
    pub target: StateVector,
    pub branches: [StateVector; 2],
}

impl NogoStates {
    pub fn new(target: StateVector, branches: [StateVector; 2]) -> Result<Self> {
        check_orthonormal([&branches[0], &branches[1]])?;
        target.inner(&branches[0])?;
        Ok(Self { target, branches })
    }

    /// `(Ψ_MS, Ψ₁, Ψ₂)` for the given amplitudes.
    pub fn chain(amplitudes: &Amplitudes) -> Result<Self> {
        let layout = chain_layout();
        Self::new(
            measurement_chain(amplitudes)?,
            [
                branch_state(Branch::One, &layout)?,
                branch_state(Branch::Two, &layout)?,
            ],
        )
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.target.layout()
    }

    /// Components `aᵢ = ⟨Ψᵢ|Ψ⟩` of the target along the branches.
    pub fn components(&self) -> [C64; 2] {
        [0, 1].map(|i| self.branches[i].amplitudes().dotc(self.target.amplitudes()))
    }

    /// `‖Ψ − Σ aᵢΨᵢ‖`.
    pub fn decomposition_residual(&self) -> f64 {
        let a = self.components();
        let mut r = self.target.amplitudes().clone();
        for (ai, b) in a.iter().zip(&self.branches) {
            r -= b.amplitudes() * *ai;
        }
        r.norm()
    }

    pub fn regime(&self) -> Regime {
        let a = self.components();
        if self.decomposition_residual() > FORCING_TOL {
            Regime::OutsideBranchSpan
        } else if a[0].norm() * a[1].norm() <= model::AMPLITUDE_TOL {
            Regime::ProductState
        } else {
            Regime::Entangled
        }
    }
}

/// Family of candidate observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NogoScope {
    /// `d₀V + d₁V^x + d₂V^y` on the observer.
    ObserverOnly,
    /// `d₀Q + d₁Q^x + d₂Q^y` on the detector.
    DetectorOnly,
    /// Random Hermitian matrices on the whole chain plus the structured zoo.
    FullChain,
}

impl NogoScope {
    pub const ALL: [NogoScope; 3] = [
        NogoScope::ObserverOnly,
        NogoScope::DetectorOnly,
        NogoScope::FullChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NogoScope::ObserverOnly => "observer-only",
            NogoScope::DetectorOnly => "detector-only",
            NogoScope::FullChain => "full-chain",
        }
    }
}

/// Candidate counts: `grid` deterministic members and `random` seeded draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NogoSampling {
    pub grid: usize,
    pub random: usize,
    pub seed: u64,
}

impl NogoSampling {
    pub fn total(&self) -> usize {
        self.grid + self.random
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Both amplitudes nonzero: the no-go claim applies.
    Entangled,
    /// One amplitude vanishes; the target is itself a branch.
    ProductState,
    /// The target is not a superposition of the branches.
    OutsideBranchSpan,
}

/// A candidate that passed the discrimination predicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub candidate: String,
    pub eigenvalues: EigenTriple,
}

/// Record of the linear-forcing argument over a candidate family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForcingSummary {
    /// `‖Ψ − Σ aᵢΨᵢ‖`.
    pub decomposition_residual: f64,
    /// Candidates having both branches as eigenstates.
    pub branch_eigen_candidates: usize,
    /// Largest `‖GΨ − Σ aᵢgᵢΨᵢ‖` over those candidates.
    pub max_forcing_residual: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminationVerdict {
    pub scope: NogoScope,
    pub family_description: String,
    pub regime: Regime,
    pub n_candidates_tested: usize,
    /// Candidates with all three states as eigenstates at `tol`.
    pub n_eigen_candidates: usize,
    pub found: bool,
    pub witness: Option<Witness>,
    /// Largest `min(|g₀−g₁|, |g₀−g₂|)` over candidates that passed the
    /// eigenstate predicate; 0 when none did.
    pub max_min_gap: f64,
    pub tol: f64,
    pub forcing: ForcingSummary,
}

#[derive(Clone, Debug, Default)]
struct SearchAcc {
    first_witness: Option<(usize, Witness)>,
    n_eigen: usize,
    max_gap: f64,
    n_branch_eigen: usize,
    max_forcing: f64,
}

impl SearchAcc {
    fn merge(mut self, other: SearchAcc) -> SearchAcc {
        self.first_witness = match (self.first_witness, other.first_witness) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self.n_eigen += other.n_eigen;
        self.max_gap = self.max_gap.max(other.max_gap);
        self.n_branch_eigen += other.n_branch_eigen;
        self.max_forcing = self.max_forcing.max(other.max_forcing);
        self
    }
}

/// Searches `scope`'s observable family for a witness of eigenvalue
/// discrimination between the target and its branches.
pub fn nogo_search(
    scope: NogoScope,
    states: &NogoStates,
    sampling: &NogoSampling,
    tol: f64,
) -> Result<DiscriminationVerdict> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if sampling.total() < MIN_NOGO_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "no-go search needs at least {MIN_NOGO_SAMPLES} candidates, got {}",
            sampling.total()
        )));
    }
    let family = CandidateFamily::new(scope, states.layout(), sampling)?;
    let decomposition_residual = states.decomposition_residual();
    let regime = states.regime();

    if regime == Regime::ProductState {
        return Ok(DiscriminationVerdict {
            scope,
            family_description: format!("{} (not searched: product-state input)", family.describe()),
            regime: Regime::ProductState,
            n_candidates_tested: 0,
            n_eigen_candidates: 0,
            found: false,
            witness: None,
            max_min_gap: 0.0,
            tol,
            forcing: ForcingSummary {
                decomposition_residual,
                branch_eigen_candidates: 0,
                max_forcing_residual: 0.0,
                holds: decomposition_residual <= FORCING_TOL,
            },
        });
    }

    let a = states.components();
    let n = family.len();
    let acc = (0..n)
        .into_par_iter()
        .fold(SearchAcc::default, |mut acc, k| {
            let g = family.candidate(k);
            let (g1, r1) = eigen_residual(&g, &states.branches[0]);
            let (g2, r2) = eigen_residual(&g, &states.branches[1]);
            if r1 > tol || r2 > tol {
                return acc;
            }
            acc.n_branch_eigen += 1;
            let mut predicted = states.branches[0].amplitudes() * (a[0] * g1);
            predicted += states.branches[1].amplitudes() * (a[1] * g2);
            let forcing = (&g * states.target.amplitudes() - predicted).norm();
            acc.max_forcing = acc.max_forcing.max(forcing);

            let (g0, r0) = eigen_residual(&g, &states.target);
            if r0 <= tol {
                let triple = EigenTriple { g0, g1, g2 };
                acc.n_eigen += 1;
                acc.max_gap = acc.max_gap.max(triple.min_gap());
                if triple.is_discriminating() && acc.first_witness.is_none() {
                    acc.first_witness = Some((
                        k,
                        Witness {
                            candidate: family.describe_candidate(k),
                            eigenvalues: triple,
                        },
                    ));
                }
            }
            acc
        })
        .reduce(SearchAcc::default, SearchAcc::merge);

    Ok(DiscriminationVerdict {
        scope,
        family_description: family.describe(),
        regime,
        n_candidates_tested: n,
        n_eigen_candidates: acc.n_eigen,
        found: acc.first_witness.is_some(),
        witness: acc.first_witness.map(|(_, w)| w),
        max_min_gap: acc.max_gap,
        tol,
        forcing: ForcingSummary {
            decomposition_residual,
            branch_eigen_candidates: acc.n_branch_eigen,
            max_forcing_residual: acc.max_forcing,
            holds: decomposition_residual <= FORCING_TOL && acc.max_forcing <= FORCING_TOL,
        },
    })
}

const ZOO_NAMES: [&str; 14] = [
    "S_z", "S_x", "S_y", "S_a", "Q", "Q_x", "Q_y", "V", "V_x", "V_y", "A", "S_zQ", "B_SD", "B",
];

/// Index-addressable candidate generator; candidate `k` is a pure function
/// of `(family, k)` so the search can run in any order.
struct CandidateFamily {
    scope: NogoScope,
    layout: SpaceLayout,
    sampling: NogoSampling,
    grid_dirs: Vec<[f64; 3]>,
    streams: EventStreams,
    pointer_pos: usize,
}

impl CandidateFamily {
    fn new(scope: NogoScope, layout: &SpaceLayout, sampling: &NogoSampling) -> Result<Self> {
        let pointer = match scope {
            NogoScope::ObserverOnly => OBSERVER,
            NogoScope::DetectorOnly => DETECTOR,
            NogoScope::FullChain => SYSTEM,
        };
        let pointer_pos = layout.require(pointer)?;
        if scope == NogoScope::FullChain {
            for l in [SYSTEM, DETECTOR, OBSERVER] {
                layout.require(l)?;
            }
        }
        Ok(Self {
            scope,
            layout: layout.clone(),
            sampling: *sampling,
            grid_dirs: sphere_grid(sampling.grid),
            streams: EventStreams::new(sampling.seed),
            pointer_pos,
        })
    }

    fn len(&self) -> usize {
        self.sampling.total()
    }

    fn describe(&self) -> String {
        let s = &self.sampling;
        match self.scope {
            NogoScope::ObserverOnly => format!(
                "observer algebra d0*V + d1*V_x + d2*V_y, |d| = 1: {} grid + {} random directions",
                s.grid, s.random
            ),
            NogoScope::DetectorOnly => format!(
                "detector algebra d0*Q + d1*Q_x + d2*Q_y, |d| = 1: {} grid + {} random directions",
                s.grid, s.random
            ),
            NogoScope::FullChain => format!(
                "full chain: {} structured zoo members + {} Gaussian Hermitian {}x{} matrices",
                s.grid,
                s.random,
                self.layout.total_dim(),
                self.layout.total_dim()
            ),
        }
    }

    fn describe_candidate(&self, k: usize) -> String {
        match self.scope {
            NogoScope::ObserverOnly | NogoScope::DetectorOnly => {
                let d = self.direction(k);
                format!("d = [{:.6}, {:.6}, {:.6}]", d[0], d[1], d[2])
            }
            NogoScope::FullChain if k < self.sampling.grid => {
                let (name, p) = self.zoo_params(k);
                format!("{name}(gamma = {:.6}, c phase = {:.6}, d = {:?})", p.gamma, p.c.phase(), p.d)
            }
            NogoScope::FullChain => format!("gaussian hermitian #{}", k - self.sampling.grid),
        }
    }

    fn rng(&self, k: usize) -> ChaCha8Rng {
        self.streams.stream(k as u64)
    }

    fn direction(&self, k: usize) -> [f64; 3] {
        if k < self.sampling.grid {
            self.grid_dirs[k]
        } else {
            random_direction(&mut self.rng(k))
        }
    }

    fn zoo_params(&self, k: usize) -> (&'static str, ZooParams) {
        let name = ZOO_NAMES[k % ZOO_NAMES.len()];
        let j = k / ZOO_NAMES.len();
        let m = self.sampling.grid.div_ceil(ZOO_NAMES.len()).max(1);
        let t = j as f64 / m as f64;
        let params = ZooParams {
            gamma: TAU * t,
            c: InterferenceCoefficients::from_phase(TAU * t),
            d: self.grid_dirs.get(j).copied().unwrap_or([1.0, 0.0, 0.0]),
        };
        (name, params)
    }

    fn candidate(&self, k: usize) -> CMatrix {
        match self.scope {
            NogoScope::ObserverOnly | NogoScope::DetectorOnly => {
                let local = pointer_algebra(self.direction(k)).expect("unit direction");
                embed_matrix(&local, &[self.pointer_pos], &self.layout)
            }
            NogoScope::FullChain if k < self.sampling.grid => {
                let (name, params) = self.zoo_params(k);
                zoo_matrix(name, &params, &self.layout)
            }
            NogoScope::FullChain => random_hermitian(self.layout.total_dim(), &mut self.rng(k)),
        }
    }
}

fn zoo_matrix(name: &str, params: &ZooParams, layout: &SpaceLayout) -> CMatrix {
    let pos = |l: &str| layout.position(l).expect("chain layout");
    let s = pos(SYSTEM);
    let d = pos(DETECTOR);
    let o = pos(OBSERVER);
    let (local, targets): (CMatrix, Vec<usize>) = match name {
        "S_z" => (model::spin_z(), vec![s]),
        "S_x" => (model::spin_x(), vec![s]),
        "S_y" => (model::spin_y(), vec![s]),
        "S_a" => (spin_a(params.gamma), vec![s]),
        "Q" => (sigma_z(), vec![d]),
        "Q_x" => (sigma_x(), vec![d]),
        "Q_y" => (sigma_y(), vec![d]),
        "V" => (sigma_z(), vec![o]),
        "V_x" => (sigma_x(), vec![o]),
        "V_y" => (sigma_y(), vec![o]),
        "A" => (pointer_algebra(params.d).expect("unit direction"), vec![o]),
        "S_zQ" => (model::spin_z().kronecker(&sigma_z()), vec![s, d]),
        "B_SD" => (interference_sd(params.c), vec![s, d]),
        "B" => (interference_ms(params.c), vec![s, d, o]),
        _ => unreachable!("unknown zoo member {name}"),
    };
    embed_matrix(&local, &targets, layout)
}

/// Deterministic, roughly uniform unit vectors: the six axis directions
/// followed by a Fibonacci lattice.
pub fn sphere_grid(n: usize) -> Vec<[f64; 3]> {
    let axes = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let mut out: Vec<[f64; 3]> = axes.iter().copied().take(n).collect();
    let m = n.saturating_sub(out.len());
    let golden = PI * (3.0 - 5f64.sqrt());
    for k in 0..m {
        let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        out.push([z, r * phi.cos(), r * phi.sin()]);
    }
    out
}

fn random_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.map(|x| x / n);
        }
    }
}

/// Gaussian Hermitian matrix: independent standard normal real and
/// imaginary parts, symmetrized.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let adj = a.adjoint();
    (a + adj) * C64::new(0.5, 0.0)
}

/// Hermitian matrix with `branches` as exact eigenvectors (eigenvalues
/// `g1`, `g2`) and a random Gaussian block on their orthogonal complement.
pub fn hermitian_with_branch_eigenvectors<R: Rng>(
    branches: [&StateVector; 2],
    g1: f64,
    g2: f64,
    rng: &mut R,
) -> CMatrix {
    let dim = branches[0].layout().total_dim();
    let p1 = branches[0].to_density().into_matrix();
    let p2 = branches[1].to_density().into_matrix();
    let complement = CMatrix::identity(dim, dim) - &p1 - &p2;
    let h = random_hermitian(dim, rng);
    &p1 * C64::new(g1, 0.0) + &p2 * C64::new(g2, 0.0) + &complement * h * &complement
}

/// Quantities of the linear-forcing argument for one observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForcingCheck {
    pub g1: f64,
    pub g2: f64,
    /// `‖GΨ − Σ aᵢgᵢΨᵢ‖`.
    pub forcing_residual: f64,
    /// `‖GΨ − ⟨G⟩Ψ‖` for the target.
    pub target_residual: f64,
    /// `|g₁ − g₂| · |a₁||a₂|`.
    pub gap_product: f64,
}

/// Evaluates the forcing identity for `g`; `None` if a branch is not an
/// eigenvector of `g` at `tol`.
pub fn forcing_check(g: &CMatrix, states: &NogoStates, tol: f64) -> Option<ForcingCheck> {
    let (g1, r1) = eigen_residual(g, &states.branches[0]);
    let (g2, r2) = eigen_residual(g, &states.branches[1]);
    if r1 > tol || r2 > tol {
        return None;
    }
    let a = states.components();
    let mut predicted = states.branches[0].amplitudes() * (a[0] * g1);
    predicted += states.branches[1].amplitudes() * (a[1] * g2);
    let forcing_residual = (g * states.target.amplitudes() - predicted).norm();
    let (_, target_residual) = eigen_residual(g, &states.target);
    Some(ForcingCheck {
        g1,
        g2,
        forcing_residual,
        target_residual,
        gap_product: (g1 - g2).abs() * a[0].norm() * a[1].norm(),
    })
}

/// Forcing identity over random observables built with the branches as
/// exact eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForcingSweep {
    pub samples: usize,
    /// Largest `| ‖GΨ − ⟨G⟩Ψ‖ − |g₁ − g₂|·|a₁||a₂| |`.
    pub max_identity_deviation: f64,
    /// Largest `‖GΨ − Σ aᵢgᵢΨᵢ‖`.
    pub max_forcing_residual: f64,
    /// Smallest `|g₁ − g₂|·|a₁||a₂|` seen; positive means no sampled `G`
    /// had the target as an eigenstate.
    pub min_gap_product: f64,
}

pub fn forcing_sweep(states: &NogoStates, samples: usize, seed: u64) -> Result<ForcingSweep> {
    if samples == 0 {
        return Err(Error::InvalidParameter("forcing sweep needs at least one sample".into()));
    }
    let streams = EventStreams::new(seed);
    let branches = [&states.branches[0], &states.branches[1]];
    let checks: Vec<ForcingCheck> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream(k as u64);
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            let g = hermitian_with_branch_eigenvectors(branches, g1, g2, &mut rng);
            forcing_check(&g, states, 1e-9).ok_or_else(|| {
                Error::InvalidParameter("constructed observable lost a branch eigenvector".into())
            })
        })
        .collect::<Result<_>>()?;
    Ok(ForcingSweep {
        samples,
        max_identity_deviation: checks
            .iter()
            .map(|c| (c.target_residual - c.gap_product).abs())
            .fold(0.0, f64::max),
        max_forcing_residual: checks.iter().map(|c| c.forcing_residual).fold(0.0, f64::max),
        min_gap_product: checks.iter().map(|c| c.gap_product).fold(f64::INFINITY, f64::min),
    })
}

// ---------------------------------------------------------------------------
// Interference terms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceScope {
    /// `B(c)` on system, detector and observer.
    Chain,
    /// `B^{S,D}(c)` on system and detector.
    SystemDetector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub scope: InterferenceScope,
    pub c_phase: f64,
    /// Distinct eigenvalues with multiplicities.
    pub b_eigenvalues: Vec<(f64, usize)>,
    /// Eigenvalue when the pure state is a `B` eigenstate.
    pub pure_eigenvalue: Option<f64>,
    pub expectation_pure: f64,
    pub expectation_mixed: f64,
    pub overlap: OverlapReport,
}

fn interference_setup(
    amplitudes: &Amplitudes,
    scope: InterferenceScope,
) -> Result<(StateVector, DensityMatrix)> {
    match scope {
        InterferenceScope::Chain => Ok((
            measurement_chain(amplitudes)?,
            mixture_density(&branch_mixture(amplitudes)?)?,
        )),
        InterferenceScope::SystemDetector => {
            let pure = system_detector_state(amplitudes)?;
            let layout = pure.layout().clone();
            let w = amplitudes.weights();
            let g = Gemenge::new(vec![
                (branch_state(Branch::One, &layout)?, w[0]),
                (branch_state(Branch::Two, &layout)?, w[1]),
            ])?;
            Ok((pure, mixture_density(&g)?))
        }
    }
}

fn interference_observable(c: InterferenceCoefficients, scope: InterferenceScope, layout: &SpaceLayout) -> Result<Observable> {
    let m = match scope {
        InterferenceScope::Chain => interference_ms(c),
        InterferenceScope::SystemDetector => interference_sd(c),
    };
    Observable::new(m, layout)
}

/// Spectrum, expectations and pure-vs-mixture overlap of `B(c)` (or
/// `B^{S,D}(c)`) with `c₁ = e^{i·c_phase}`.
pub fn interference_analysis(
    c_phase: f64,
    amplitudes: &Amplitudes,
    scope: InterferenceScope,
) -> Result<InterferenceReport> {
    let (pure, mixed) = interference_setup(amplitudes, scope)?;
    let c = InterferenceCoefficients::from_phase(c_phase);
    let b = interference_observable(c, scope, pure.layout())?;
    let name = match scope {
        InterferenceScope::Chain => "B",
        InterferenceScope::SystemDetector => "B_SD",
    };
    Ok(InterferenceReport {
        scope,
        c_phase,
        b_eigenvalues: b.eigenvalues(),
        pure_eigenvalue: is_eigenstate(&b, &pure, crate::hilbert::DEFAULT_EIGEN_TOL)?,
        expectation_pure: crate::hilbert::expectation(&pure, &b)?,
        expectation_mixed: crate::hilbert::expectation(&mixed, &b)?,
        overlap: overlap(name, &b, &pure, &mixed)?,
    })
}

/// Phase of `c` minimizing the interference-term overlap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferenceOptimum {
    pub c_phase: f64,
    pub k_value: f64,
}

/// Sweeps `c₁ = e^{iφ}` over [`PHASE_GRID`] phases with refinement and
/// returns the smallest overlap `K(B)`.
pub fn optimal_interference(amplitudes: &Amplitudes, scope: InterferenceScope) -> Result<InterferenceOptimum> {
    let (pure, mixed) = interference_setup(amplitudes, scope)?;
    let layout = pure.layout().clone();
    let k_of = |phi: f64| -> f64 {
        interference_observable(InterferenceCoefficients::from_phase(phi), scope, &layout)
            .and_then(|b| overlap("B", &b, &pure, &mixed))
            .map(|r| r.k_value)
            .unwrap_or(f64::INFINITY)
    };
    let (c_phase, neg_k) = scan_max(|phi| -k_of(phi), PHASE_GRID);
    Ok(InterferenceOptimum {
        c_phase,
        k_value: -neg_k,
    })
}

// ---------------------------------------------------------------------------
// Channel information

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelReport {
    /// `K(S_z)` between the two system eigenstates.
    pub k_sz_eigenstates: f64,
    /// Smallest `K(S_a(γ))` between `ψ_s` and its test mixture.
    pub input_min_k: f64,
    pub input_best_gamma: f64,
    /// Smallest overlap over the detector-observable sweep between the
    /// premeasured pure state and the premeasured mixture.
    pub detector_min_k: f64,
    pub detector_directions: usize,
}

pub fn channel_information(amplitudes: &Amplitudes) -> Result<ChannelReport> {
    let s_layout = SpaceLayout::qubits([SYSTEM])?;
    let sz = Observable::new(model::spin_z(), &s_layout)?;
    let up = prepare_system(&Amplitudes::real(1.0, 0.0)?)?;
    let down = prepare_system(&Amplitudes::real(0.0, 1.0)?)?;
    let k_sz_eigenstates = overlap("S_z", &sz, &up, &down)?.k_value;

    let psi = prepare_system(amplitudes)?;
    let mix = mixture_density(&system_mixture(amplitudes)?)?;
    let k_sa = |g: f64| -> f64 {
        Observable::new(spin_a(g), &s_layout)
            .and_then(|op| overlap("S_a", &op, &psi, &mix))
            .map(|r| r.k_value)
            .unwrap_or(f64::INFINITY)
    };
    let (input_best_gamma, neg_k) = scan_max(|g| -k_sa(g), PHASE_GRID);

    let (pure_sd, mixed_sd) = interference_setup(amplitudes, InterferenceScope::SystemDetector)?;
    let sd_layout = pure_sd.layout().clone();
    let d_layout = SpaceLayout::qubits([DETECTOR])?;
    let dirs = sphere_grid(DETECTOR_DIRECTIONS);
    let detector_min_k = dirs
        .par_iter()
        .map(|d| -> Result<f64> {
            let local = Observable::new(pointer_algebra(*d)?, &d_layout)?;
            let op = embed_operator(&local, &[DETECTOR], &sd_layout)?;
            Ok(overlap("Q_n", &op, &pure_sd, &mixed_sd)?.k_value)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    Ok(ChannelReport {
        k_sz_eigenstates,
        input_min_k: -neg_k,
        input_best_gamma,
        detector_min_k,
        detector_directions: dirs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::DEFAULT_EIGEN_TOL;
    use crate::model::{zoo, ZooParams};
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_2;

    fn real(a1: f64, a2: f64) -> Amplitudes {
        Amplitudes::real(a1, a2).unwrap()
    }

    #[test]
    fn overlap_sx_symmetric_is_one_half() {
        let a = Amplitudes::symmetric();
        let l = SpaceLayout::qubits([SYSTEM]).unwrap();
        let sx = Observable::new(model::spin_x(), &l).unwrap();
        let psi = prepare_system(&a).unwrap();
        let mix = mixture_density(&system_mixture(&a).unwrap()).unwrap();
        let r = overlap("S_x", &sx, &psi, &mix).unwrap();
        assert!((r.k_value - 0.5).abs() < 1e-15);
        // Σ√(w₁w₂) = √½ for the same pair
        assert!((r.bhattacharyya - 0.5f64.sqrt()).abs() < 1e-15);
        let same = overlap("S_x", &sx, &psi, &psi).unwrap();
        assert!((same.k_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detector_pointer_overlaps_are_complete() {
        let a = real(0.6, 0.8);
        let (pure, mixed) = interference_setup(&a, InterferenceScope::SystemDetector).unwrap();
        let z = zoo(pure.layout(), &ZooParams::default()).unwrap();
        for name in ["Q", "Q_x", "Q_y"] {
            let r = overlap(name, z.get(name).unwrap(), &pure, &mixed).unwrap();
            assert!((r.k_value - 1.0).abs() < 1e-12, "{name}: {}", r.k_value);
        }
    }

    #[test]
    fn purity_rate_examples() {
        let sym = prepare_system(&Amplitudes::symmetric()).unwrap();
        assert!((purity_rate(&sym, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let mix = mixture_density(&system_mixture(&real(0.6, 0.8)).unwrap()).unwrap();
        for g in [0.0, 0.3, 2.0] {
            assert!(purity_rate(&mix, g).unwrap().abs() < 1e-15);
        }
        let p = prepare_system(&real(0.6, 0.8)).unwrap();
        assert!((purity_rate(&p, 0.0).unwrap() - 0.96).abs() < 1e-15);
        let two = measurement_chain(&Amplitudes::symmetric()).unwrap();
        assert!(purity_rate(&two, 0.0).is_err());
    }

    #[test]
    fn optimal_phase_examples() {
        let a = Amplitudes::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let opt = optimal_phase(&prepare_system(&a).unwrap()).unwrap();
        assert!((opt.gamma.unwrap() - FRAC_PI_2).abs() < TAU / PHASE_GRID as f64);
        assert!((opt.purity_rate - 0.96).abs() < 1e-9);

        let opt = optimal_phase(&prepare_system(&real(0.6, 0.8)).unwrap()).unwrap();
        let g = opt.gamma.unwrap();
        assert!(g.min(TAU - g) < 1e-6, "gamma = {g}");

        let mixed = mixture_density(&system_mixture(&Amplitudes::symmetric()).unwrap()).unwrap();
        let opt = optimal_phase(&mixed).unwrap();
        assert_eq!(opt.gamma, None);
        assert!(opt.purity_rate.abs() < 1e-15);
    }

    #[test]
    fn eigen_discrimination_examples() {
        let states = NogoStates::chain(&Amplitudes::symmetric()).unwrap();
        let b = [&states.branches[0], &states.branches[1]];
        let z = zoo(states.layout(), &ZooParams::default()).unwrap();
        assert_eq!(
            eigen_discrimination_test(z.get("V").unwrap(), &states.target, b, DEFAULT_EIGEN_TOL).unwrap(),
            None
        );
        let id = Observable::identity(states.layout());
        assert_eq!(
            eigen_discrimination_test(&id, &states.target, b, DEFAULT_EIGEN_TOL).unwrap(),
            None
        );

        // S_z·Q on (S, D): every Ψ_{S,D} is an eigenstate, but degenerate with the branches
        let a = real(0.6, 0.8);
        let sd = system_detector_state(&a).unwrap();
        let l = sd.layout().clone();
        let szq = zoo(&l, &ZooParams::default()).unwrap().get("S_zQ").unwrap().clone();
        let c1 = branch_state(Branch::One, &l).unwrap();
        let c2 = branch_state(Branch::Two, &l).unwrap();
        assert!((is_eigenstate(&szq, &sd, DEFAULT_EIGEN_TOL).unwrap().unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(
            eigen_discrimination_test(&szq, &sd, [&c1, &c2], DEFAULT_EIGEN_TOL).unwrap(),
            None
        );
    }

    #[test]
    fn eigen_discrimination_finds_product_regime_witness() {
        // with a₂ = 0 the "target" is branch 1 itself and a constructed G
        // separating it from both branches cannot exist; V gives g0 = g1.
        let states = NogoStates::chain(&real(1.0, 0.0)).unwrap();
        let v = zoo(states.layout(), &ZooParams::default()).unwrap().get("V").unwrap().clone();
        for s in [&states.target, &states.branches[0], &states.branches[1]] {
            assert!(is_eigenstate(&v, s, DEFAULT_EIGEN_TOL).unwrap().is_some());
        }
    }

    #[test]
    fn non_orthogonal_branches_rejected() {
        let states = NogoStates::chain(&Amplitudes::symmetric()).unwrap();
        let id = Observable::identity(states.layout());
        assert!(eigen_discrimination_test(
            &id,
            &states.target,
            [&states.branches[0], &states.target],
            DEFAULT_EIGEN_TOL
        )
        .is_err());
    }

    #[test]
    fn nogo_rejects_small_samples_and_flags_product_regime() {
        let states = NogoStates::chain(&Amplitudes::symmetric()).unwrap();
        let small = NogoSampling { grid: 100, random: 100, seed: 1 };
        assert!(nogo_search(NogoScope::ObserverOnly, &states, &small, 1e-9).is_err());

        let product = NogoStates::chain(&real(1.0, 0.0)).unwrap();
        let s = NogoSampling { grid: 5_000, random: 5_000, seed: 1 };
        let v = nogo_search(NogoScope::FullChain, &product, &s, 1e-9).unwrap();
        assert_eq!(v.regime, Regime::ProductState);
        assert!(!v.found);
    }

    #[test]
    fn observer_scope_sees_branch_eigen_candidates_only_on_axes() {
        let states = NogoStates::chain(&real(0.6, 0.8)).unwrap();
        let s = NogoSampling { grid: 5_000, random: 5_000, seed: 3 };
        let v = nogo_search(NogoScope::ObserverOnly, &states, &s, 1e-9).unwrap();
        assert!(!v.found);
        assert_eq!(v.n_eigen_candidates, 0);
        assert_eq!(v.max_min_gap, 0.0);
        // ±V are the only algebra members with both branches as eigenstates
        assert_eq!(v.forcing.branch_eigen_candidates, 2);
        assert!(v.forcing.holds);
    }

    #[test]
    fn search_detects_a_planted_witness() {
        // A target that is *not* a superposition of the branches can be
        // separated: the search machinery must find such a witness.
        let layout = chain_layout();
        let b1 = branch_state(Branch::One, &layout).unwrap();
        let b2 = branch_state(Branch::Two, &layout).unwrap();
        let other = StateVector::basis(layout.clone(), 3).unwrap();
        let states = NogoStates::new(other, [b1, b2]).unwrap();
        let s = NogoSampling { grid: 10_000, random: 0, seed: 0 };
        let v = nogo_search(NogoScope::FullChain, &states, &s, 1e-9).unwrap();
        assert!(v.found, "{v:?}");
        let w = v.witness.unwrap();
        assert!(w.eigenvalues.is_discriminating());
    }

    #[test]
    fn forcing_identity_on_constructed_observables() {
        let a = Amplitudes::from_angles(0.4, 1.1);
        let states = NogoStates::chain(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            let g = hermitian_with_branch_eigenvectors([&states.branches[0], &states.branches[1]], g1, g2, &mut rng);
            let f = forcing_check(&g, &states, 1e-12).unwrap();
            assert!(f.forcing_residual < 1e-12);
            assert!((f.target_residual - f.gap_product).abs() < 1e-12);
        }
    }

    #[test]
    fn forcing_sweep_is_reproducible() {
        let states = NogoStates::chain(&Amplitudes::symmetric()).unwrap();
        let a = forcing_sweep(&states, 200, 9).unwrap();
        assert_eq!(a, forcing_sweep(&states, 200, 9).unwrap());
        assert!(a.max_identity_deviation < 1e-12);
        assert!(a.max_forcing_residual < 1e-12);
        assert!(a.min_gap_product > 0.0);
    }

    #[test]
    fn interference_symmetric_values() {
        let r = interference_analysis(0.0, &Amplitudes::symmetric(), InterferenceScope::Chain).unwrap();
        assert!((r.pure_eigenvalue.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.overlap.k_value - 0.5).abs() < 1e-12);
        assert!(r.expectation_mixed.abs() < 1e-15);
        let w: Vec<_> = r.overlap.weights.iter().filter(|w| w.eigenvalue.abs() > 0.5).collect();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|w| (w.w2 - 0.5).abs() < 1e-12));
        assert_eq!(r.b_eigenvalues.iter().map(|e| e.1).sum::<usize>(), 8);
    }

    #[test]
    fn interference_mixture_expectation_vanishes() {
        for phase in [0.0, 0.7, 2.5, 4.0] {
            for scope in [InterferenceScope::Chain, InterferenceScope::SystemDetector] {
                let r = interference_analysis(phase, &Amplitudes::from_angles(0.3, 0.9), scope).unwrap();
                assert!(r.expectation_mixed.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn optimal_interference_reaches_minimum() {
        let opt = optimal_interference(&real(0.6, 0.8), InterferenceScope::Chain).unwrap();
        assert!((opt.k_value - 0.52).abs() < 1e-4);
        let opt = optimal_interference(&real(0.6, 0.8), InterferenceScope::SystemDetector).unwrap();
        assert!((opt.k_value - 0.52).abs() < 1e-4);
    }

    #[test]
    fn channel_information_symmetric() {
        let r = channel_information(&Amplitudes::symmetric()).unwrap();
        assert_eq!(r.k_sz_eigenstates, 0.0);
        assert!((r.input_min_k - 0.5).abs() < 1e-9);
        assert!((r.detector_min_k - 1.0).abs() < 1e-9);
        assert!(r.detector_directions >= 1000);
    }

    #[test]
    fn sphere_grid_is_unit_and_sized() {
        let g = sphere_grid(1000);
        assert_eq!(g.len(), 1000);
        assert!(g.iter().all(|d| (d.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
        assert_eq!(sphere_grid(3).len(), 3);
    }
}
