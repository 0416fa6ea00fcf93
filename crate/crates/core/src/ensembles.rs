//! Mixtures with an explicit decomposition (gemenges), event-by-event
//! sampling, Born-frequency statistics and the two restriction maps onto
//! the observer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    embed_operator, outcome_distribution, sigma_z, DensityMatrix, Observable, QuantumState,
    SpaceLayout, StateVector, C64,
};
use crate::model::{
    branch_state, chain_layout, measurement_chain, prepare_system, Amplitudes, Branch,
    ModelConfig, OBSERVER,
};

/// Tolerance on gemenge probabilities summing to one.
pub const PROBABILITY_TOL: f64 = 1e-12;
/// Number of binomial standard errors accepted between frequency and weight.
pub const SIGMA_GATE: f64 = 4.0;
/// Largest off-diagonal pointer coherence tolerated by [`restrict_stochastic`].
pub const POINTER_COHERENCE_TOL: f64 = 1e-12;
/// Weights at or below this are dropped from a stochastic restriction.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

/// Finite list of individual states with their probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Gemenge {
    members: Vec<(StateVector, f64)>,
}

impl Gemenge {
    pub fn new(members: Vec<(StateVector, f64)>) -> Result<Self> {
        let Some((first, _)) = members.first() else {
            return Err(Error::InvalidParameter("gemenge needs at least one member".into()));
        };
        let layout = first.layout().clone();
        let mut total = 0.0;
        for (state, p) in &members {
            if state.layout() != &layout {
                return Err(Error::LayoutMismatch {
                    left: layout.to_string(),
                    right: state.layout().to_string(),
                });
            }
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(StateVector, f64)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.members[0].0.layout()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.members.iter().map(|(_, p)| *p).collect()
    }

    /// Applies `f` to every member state, keeping the probabilities.
    pub fn evolve<F>(&self, f: F) -> Result<Gemenge>
    where
        F: Fn(&StateVector) -> Result<StateVector>,
    {
        let members = self
            .members
            .iter()
            .map(|(s, p)| Ok((f(s)?, *p)))
            .collect::<Result<Vec<_>>>()?;
        Gemenge::new(members)
    }
}

/// `W^s = {|sᵢ⟩, |aᵢ|²}`: the test mixture with the same `S̄_z` as `ψ_s`.
pub fn system_mixture(amplitudes: &Amplitudes) -> Result<Gemenge> {
    let w = amplitudes.weights();
    Gemenge::new(vec![
        (prepare_system(&Amplitudes::real(1.0, 0.0)?)?, w[0]),
        (prepare_system(&Amplitudes::real(0.0, 1.0)?)?, w[1]),
    ])
}

/// `W^{MS} = {Ψᵢ, |aᵢ|²}` over the product branches on (S, D, O).
pub fn branch_mixture(amplitudes: &Amplitudes) -> Result<Gemenge> {
    let w = amplitudes.weights();
    let layout = chain_layout();
    Gemenge::new(vec![
        (branch_state(Branch::One, &layout)?, w[0]),
        (branch_state(Branch::Two, &layout)?, w[1]),
    ])
}

/// `Σ Pᵢ |ψᵢ⟩⟨ψᵢ|`.
pub fn mixture_density(g: &Gemenge) -> Result<DensityMatrix> {
    let terms: Vec<(f64, DensityMatrix)> = g
        .members
        .iter()
        .map(|(s, p)| (*p, s.to_density()))
        .collect();
    DensityMatrix::mixture(&terms)
}

/// One sampled measurement event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub event_index: u64,
    pub branch: Branch,
    /// Observer pointer eigenvalue `v_branch`.
    pub pointer_value: f64,
    /// ChaCha stream the event's randomness was drawn from.
    pub seed_stream: u64,
}

/// Counter-based random source: event `k` reads ChaCha8 stream `k` under a
/// key derived from the seed, so events can be replayed in any order.
#[derive(Clone, Debug)]
pub struct EventStreams {
    base: ChaCha8Rng,
}

impl EventStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator positioned at the start of `stream`.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(stream);
        rng
    }

    /// Uniform draw in `[0, 1)` for `event_index`.
    pub fn uniform(&self, event_index: u64) -> f64 {
        self.stream(event_index).random::<f64>()
    }
}

/// Draws branches from a one- or two-member gemenge.
#[derive(Clone, Debug)]
pub struct EventSampler {
    streams: EventStreams,
    p_first: f64,
}

impl EventSampler {
    pub fn new(g: &Gemenge, seed: u64) -> Result<Self> {
        if g.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "event sampling needs at most two branches, gemenge has {}",
                g.len()
            )));
        }
        Ok(Self {
            streams: EventStreams::new(seed),
            p_first: g.members[0].1,
        })
    }

    pub fn sample(&self, event_index: u64) -> EventRecord {
        let u = self.streams.uniform(event_index);
        let branch = if u < self.p_first {
            Branch::One
        } else {
            Branch::Two
        };
        EventRecord {
            event_index,
            branch,
            pointer_value: branch.pointer_value(),
            seed_stream: event_index,
        }
    }
}

/// Samples member `i` of `g` with probability `Pᵢ` from the stream keyed by
/// `(seed, event_index)`.
pub fn sample_event(g: &Gemenge, seed: u64, event_index: u64) -> Result<EventRecord> {
    Ok(EventSampler::new(g, seed)?.sample(event_index))
}

/// Aggregated branch statistics of an ensemble run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub n_events: u64,
    pub counts: [u64; 2],
    pub frequencies: [f64; 2],
    /// Born weights the events were drawn with.
    pub expected: [f64; 2],
    /// Binomial standard error `√(p(1−p)/n)` at the expected weight.
    pub std_errors: [f64; 2],
    pub sigma_gate: f64,
    /// Whether every `|frequency − expected| ≤ sigma_gate · std_error`
    /// (never tighter than [`PROBABILITY_TOL`]).
    pub within_gate: bool,
}

impl FrequencyReport {
    pub fn from_counts(counts: [u64; 2], expected: [f64; 2]) -> Self {
        let n_events = counts[0] + counts[1];
        let n = n_events as f64;
        let frequencies = counts.map(|c| c as f64 / n);
        let std_errors = expected.map(|p| (p * (1.0 - p) / n).max(0.0).sqrt());
        // the absolute floor absorbs rounding in weights of exactly 0 or 1
        let within_gate = (0..2).all(|i| {
            (frequencies[i] - expected[i]).abs() <= (SIGMA_GATE * std_errors[i]).max(PROBABILITY_TOL)
        });
        Self {
            n_events,
            counts,
            frequencies,
            expected,
            std_errors,
            sigma_gate: SIGMA_GATE,
            within_gate,
        }
    }
}

/// Born weights of the observer pointer `V` in the chain state.
pub fn pointer_weights<S: QuantumState + ?Sized>(state: &S) -> Result<[f64; 2]> {
    let local = SpaceLayout::qubits([OBSERVER])?;
    let v = embed_operator(&Observable::new(sigma_z(), &local)?, &[OBSERVER], state.layout())?;
    let mut w = [0.0; 2];
    for o in outcome_distribution(state, &v)? {
        let slot = if o.eigenvalue > 0.0 { 0 } else { 1 };
        w[slot] += o.probability;
    }
    Ok(w)
}

/// Runs `n_events` independent measurement events on the chain prepared
/// from `config` and counts the observer outcomes.
pub fn run_ensemble(config: &ModelConfig, n_events: u64) -> Result<FrequencyReport> {
    if n_events == 0 {
        return Err(Error::InvalidParameter("n_events must be at least 1".into()));
    }
    let psi = measurement_chain(&config.amplitudes)?;
    let weights = pointer_weights(&psi)?;
    let layout = chain_layout();
    let g = Gemenge::new(vec![
        (branch_state(Branch::One, &layout)?, weights[0]),
        (branch_state(Branch::Two, &layout)?, weights[1]),
    ])?;
    let sampler = EventSampler::new(&g, config.rng_seed)?;
    let first = (0..n_events)
        .into_par_iter()
        .filter(|&k| sampler.sample(k).branch == Branch::One)
        .count() as u64;
    Ok(FrequencyReport::from_counts([first, n_events - first], weights))
}

/// Statistical restriction: the reduced state of `observer`.
pub fn restrict_statistical<S: QuantumState + ?Sized>(state: &S, observer: &str) -> Result<DensityMatrix> {
    state.restrict(&[observer])
}

/// Input accepted by [`restrict_stochastic`].
#[derive(Clone, Copy, Debug)]
pub enum StochasticInput<'a> {
    Pure(&'a StateVector),
    Ensemble(&'a Gemenge),
}

impl<'a> From<&'a StateVector> for StochasticInput<'a> {
    fn from(s: &'a StateVector) -> Self {
        StochasticInput::Pure(s)
    }
}

impl<'a> From<&'a Gemenge> for StochasticInput<'a> {
    fn from(g: &'a Gemenge) -> Self {
        StochasticInput::Ensemble(g)
    }
}

/// Stochastic restriction: the gemenge `{(|Oᵢ⟩, Pᵢ)}` of observer pointer
/// states, each weighted by its Born probability.
///
/// Every member's observer restriction must be diagonal in the pointer
/// basis; otherwise the pointer states are not the decomposition the
/// restriction refers to and [`Error::NotPointerDiagonal`] is returned.
pub fn restrict_stochastic<'a>(input: impl Into<StochasticInput<'a>>, observer: &str) -> Result<Gemenge> {
    let single;
    let members: &[(StateVector, f64)] = match input.into() {
        StochasticInput::Pure(s) => {
            single = [(s.clone(), 1.0)];
            &single
        }
        StochasticInput::Ensemble(g) => g.members(),
    };
    let mut weights = [0.0f64; 2];
    for (state, p) in members {
        let rho = state.reduced(&[observer])?;
        let m = rho.matrix();
        if m[(0, 1)].norm() > POINTER_COHERENCE_TOL {
            return Err(Error::NotPointerDiagonal(observer.to_string()));
        }
        weights[0] += p * m[(0, 0)].re;
        weights[1] += p * m[(1, 1)].re;
    }
    let out = Branch::ALL
        .iter()
        .zip(weights)
        .filter(|(_, w)| *w > NEGLIGIBLE_WEIGHT)
        .map(|(b, w)| {
            let mut amps = [C64::new(0.0, 0.0); 2];
            amps[b.bit()] = C64::new(1.0, 0.0);
            Ok((StateVector::qubit(observer, amps[0], amps[1])?, w))
        })
        .collect::<Result<Vec<_>>>()?;
    Gemenge::new(out)
}
