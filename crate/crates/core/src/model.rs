//! Concrete states, premeasurement dynamics, environment decoherence and
//! the observables of the system–detector–observer chain.
//!
//! Basis encoding: `|s₁⟩ = |0⟩`, `|s₂⟩ = |1⟩` for the system and likewise
//! `|D₁⟩, |D₂⟩` and `|O₁⟩, |O₂⟩` for detector and observer. Factor order is
//! S, D, O, E1, …, EN.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    embed_operator, ket_bra, sigma_x, sigma_y, sigma_z, CMatrix, CVector, DensityMatrix,
    Observable, QuantumState, SpaceLayout, StateVector, C64,
};

pub const SYSTEM: &str = "S";
pub const DETECTOR: &str = "D";
pub const OBSERVER: &str = "O";

/// Upper bound on environment qubits; keeps the joint space at ≤ 8192.
pub const MAX_ENV: usize = 10;
/// Tolerance on `|a₁|² + |a₂|² = 1`.
pub const AMPLITUDE_TOL: f64 = 1e-12;
/// Tolerance used to recognise a pointer in its ready state.
pub const READY_TOL: f64 = 1e-12;

/// Label of the `j`-th environment qubit (1-based).
pub fn env_label(j: usize) -> String {
    format!("E{j}")
}

/// One of the two measurement branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Branch {
    One,
    Two,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::One, Branch::Two];

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Branch::One),
            2 => Ok(Branch::Two),
            _ => Err(Error::InvalidParameter(format!("branch index must be 1 or 2, got {i}"))),
        }
    }

    /// 1 or 2.
    pub fn index(self) -> usize {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }

    /// Computational-basis value encoding this branch.
    pub fn bit(self) -> usize {
        self.index() - 1
    }

    /// Pointer eigenvalue `q_i = v_i`: +1 for branch 1, −1 for branch 2.
    pub fn pointer_value(self) -> f64 {
        match self {
            Branch::One => 1.0,
            Branch::Two => -1.0,
        }
    }
}

/// Amplitudes `(a₁, a₂)` of the measured system state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Amplitudes {
    pub a1: C64,
    pub a2: C64,
}

impl Amplitudes {
    pub fn new(a1: C64, a2: C64) -> Result<Self> {
        let n = a1.norm_sqr() + a2.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::NotNormalized(n.sqrt()));
        }
        Ok(Self { a1, a2 })
    }

    pub fn real(a1: f64, a2: f64) -> Result<Self> {
        Self::new(C64::new(a1, 0.0), C64::new(a2, 0.0))
    }

    pub fn symmetric() -> Self {
        Self {
            a1: C64::new(FRAC_1_SQRT_2, 0.0),
            a2: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// `|a|` split as `(cos t, e^{iφ} sin t)`.
    pub fn from_angles(t: f64, phase: f64) -> Self {
        Self {
            a1: C64::new(t.cos(), 0.0),
            a2: C64::from_polar(t.sin(), phase),
        }
    }

    pub fn get(&self, branch: Branch) -> C64 {
        match branch {
            Branch::One => self.a1,
            Branch::Two => self.a2,
        }
    }

    /// Born weights `(|a₁|², |a₂|²)`.
    pub fn weights(&self) -> [f64; 2] {
        [self.a1.norm_sqr(), self.a2.norm_sqr()]
    }

    /// `|a₁||a₂|`.
    pub fn product_magnitude(&self) -> f64 {
        self.a1.norm() * self.a2.norm()
    }

    /// True when one of the amplitudes vanishes, i.e. the input is a pointer eigenstate.
    pub fn is_product_regime(&self) -> bool {
        self.product_magnitude() <= AMPLITUDE_TOL
    }

    /// Relative phase `arg(a₁* a₂)`.
    pub fn relative_phase(&self) -> f64 {
        (self.a1.conj() * self.a2).arg()
    }
}

/// Parameters of one simulated experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub amplitudes: Amplitudes,
    pub n_env: usize,
    pub env_overlap: f64,
    pub rng_seed: u64,
}

impl ModelConfig {
    pub fn new(amplitudes: Amplitudes, n_env: usize, env_overlap: f64, rng_seed: u64) -> Result<Self> {
        check_overlap(env_overlap)?;
        if n_env > MAX_ENV {
            return Err(Error::InvalidParameter(format!(
                "n_env = {n_env} exceeds the maximum of {MAX_ENV}"
            )));
        }
        Ok(Self {
            amplitudes,
            n_env,
            env_overlap,
            rng_seed,
        })
    }
}

fn check_overlap(o: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&o) {
        return Err(Error::InvalidParameter(format!(
            "environment overlap must lie in [0, 1], got {o}"
        )));
    }
    Ok(())
}

/// `ψ_s = a₁|s₁⟩ + a₂|s₂⟩`.
pub fn prepare_system(amplitudes: &Amplitudes) -> Result<StateVector> {
    StateVector::qubit(SYSTEM, amplitudes.a1, amplitudes.a2)
}

/// Ready state `(|P₁⟩ + |P₂⟩)/√2` of a pointer factor.
pub fn ready_pointer(label: &str) -> Result<StateVector> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::qubit(label, h, h)
}

/// Correlates `pointer` with `source`: `|i⟩|P₀⟩ → |i⟩|Pᵢ⟩`.
///
/// The unitary is `|0⟩⟨0| ⊗ H + |1⟩⟨1| ⊗ XH` on (source, pointer), so the
/// map is linear and norm preserving on the whole space. Only inputs whose
/// pointer factor is in the ready state are accepted.
pub fn premeasure(state: &StateVector, source: &str, pointer: &str) -> Result<StateVector> {
    let layout = state.layout();
    let src = layout.require(source)?;
    let ptr = layout.require(pointer)?;
    if src == ptr {
        return Err(Error::InvalidParameter("source and pointer must differ".into()));
    }
    let src_mask = layout.qubit_mask(src);
    let ptr_mask = layout.qubit_mask(ptr);
    let amps = state.amplitudes();

    let ready = (0..layout.total_dim())
        .filter(|i| i & ptr_mask == 0)
        .all(|i| (amps[i] - amps[i | ptr_mask]).norm() <= READY_TOL);
    if !ready {
        return Err(Error::PointerNotReady(pointer.to_string()));
    }

    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut out = CVector::zeros(layout.total_dim());
    for i0 in (0..layout.total_dim()).filter(|i| i & ptr_mask == 0) {
        let i1 = i0 | ptr_mask;
        let (x0, x1) = (amps[i0], amps[i1]);
        let (y0, y1) = ((x0 + x1) * h, (x0 - x1) * h);
        if i0 & src_mask == 0 {
            out[i0] = y0;
            out[i1] = y1;
        } else {
            out[i0] = y1;
            out[i1] = y0;
        }
    }
    StateVector::from_vector(layout.clone(), out)
}

/// `Ψ_{S,D} = Σ aᵢ|sᵢ⟩|Dᵢ⟩`.
pub fn system_detector_state(amplitudes: &Amplitudes) -> Result<StateVector> {
    let sd = prepare_system(amplitudes)?.tensor(&ready_pointer(DETECTOR)?)?;
    premeasure(&sd, SYSTEM, DETECTOR)
}

/// `Ψ_MS = Σ aᵢ|sᵢ⟩|Dᵢ⟩|Oᵢ⟩`: the system–detector premeasurement followed by
/// the detector–observer one.
pub fn measurement_chain(amplitudes: &Amplitudes) -> Result<StateVector> {
    let sdo = system_detector_state(amplitudes)?.tensor(&ready_pointer(OBSERVER)?)?;
    premeasure(&sdo, DETECTOR, OBSERVER)
}

/// Layout `(S, D, O)`.
pub fn chain_layout() -> SpaceLayout {
    SpaceLayout::qubits([SYSTEM, DETECTOR, OBSERVER]).expect("static layout")
}

/// Product branch `|sᵢ⟩|Dᵢ⟩|Oᵢ⟩` restricted to the factors of `layout`,
/// which may only contain S, D and O. Environment factors are attached by
/// [`decohere`].
pub fn branch_state(branch: Branch, layout: &SpaceLayout) -> Result<StateVector> {
    if let Some(bad) = layout
        .labels()
        .find(|l| ![SYSTEM, DETECTOR, OBSERVER].contains(l))
    {
        return Err(Error::InvalidParameter(format!(
            "branch states are defined on S, D, O factors only, found `{bad}`"
        )));
    }
    let index = match branch {
        Branch::One => 0,
        Branch::Two => layout.total_dim() - 1,
    };
    StateVector::basis(layout.clone(), index)
}

/// Couples `n_env` environment qubits to the observer pointer.
pub fn decohere(state: &StateVector, n_env: usize, env_overlap: f64) -> Result<StateVector> {
    decohere_on(state, OBSERVER, n_env, env_overlap)
}

/// Couples `n_env` environment qubits to the qubit `control`:
/// `|…i…⟩ → |…i…⟩ ⊗ Π_j |E_i^j⟩` with `|E₁⟩ = |0⟩`,
/// `|E₂⟩ = cosθ|0⟩ + sinθ|1⟩` and `cosθ = env_overlap`.
pub fn decohere_on(
    state: &StateVector,
    control: &str,
    n_env: usize,
    env_overlap: f64,
) -> Result<StateVector> {
    check_overlap(env_overlap)?;
    if n_env == 0 || n_env > MAX_ENV {
        return Err(Error::InvalidParameter(format!(
            "n_env must lie in 1..={MAX_ENV}, got {n_env}"
        )));
    }
    let layout = state.layout();
    let ctl_mask = layout.qubit_mask(layout.require(control)?);
    let env_layout = SpaceLayout::qubits((1..=n_env).map(env_label))?;
    let joint = layout.concat(&env_layout)?;

    let e1 = environment_state(Branch::One, n_env, env_overlap)?;
    let e2 = environment_state(Branch::Two, n_env, env_overlap)?;
    let env_dim = env_layout.total_dim();
    let amps = state.amplitudes();
    let out = CVector::from_fn(joint.total_dim(), |i, _| {
        let (b, k) = (i / env_dim, i % env_dim);
        let env = if b & ctl_mask == 0 { &e1 } else { &e2 };
        amps[b] * env.amplitude(k)
    });
    StateVector::from_vector(joint, out)
}

/// `Π_j |E_i^j⟩` over `E1..EN`.
pub fn environment_state(branch: Branch, n_env: usize, env_overlap: f64) -> Result<StateVector> {
    check_overlap(env_overlap)?;
    let (c, s) = match branch {
        Branch::One => (1.0, 0.0),
        Branch::Two => (env_overlap, (1.0 - env_overlap * env_overlap).max(0.0).sqrt()),
    };
    let qubits: Vec<StateVector> = (1..=n_env)
        .map(|j| StateVector::qubit(&env_label(j), C64::new(c, 0.0), C64::new(s, 0.0)))
        .collect::<Result<_>>()?;
    crate::hilbert::tensor_state(&qubits)
}

/// `⟨Ψ₁|ρ|Ψ₂⟩` for a density matrix on pointer factors (S, D, O or a subset).
pub fn branch_coherence(rho: &DensityMatrix) -> Result<C64> {
    let one = branch_state(Branch::One, rho.layout())?;
    let two = branch_state(Branch::Two, rho.layout())?;
    Ok(one.amplitudes().dotc(&(rho.matrix() * two.amplitudes())))
}

/// Effect of environment coupling on the chain state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecoherenceReport {
    pub n_env: usize,
    pub env_overlap: f64,
    /// `⟨Ψ₁|ρ|Ψ₂⟩` after / before coupling; `None` when the state has no coherence to scale.
    pub coherence_factor: Option<f64>,
    /// `env_overlap^n_env`.
    pub predicted_factor: f64,
    /// `|⟨Ψ₁|ρ|Ψ₂⟩|` of the reduced S, D, O state.
    pub coherence_magnitude: f64,
    /// `Tr ρ²` of the reduced S, D, O state.
    pub reduced_purity: f64,
    /// Reduced S, D, O purity when each pointer branch alone is coupled.
    pub branch_purities: [f64; 2],
}

pub fn decoherence_report(amplitudes: &Amplitudes, n_env: usize, env_overlap: f64) -> Result<DecoherenceReport> {
    let keep = [SYSTEM, DETECTOR, OBSERVER];
    let psi = measurement_chain(amplitudes)?;
    let before = branch_coherence(&psi.to_density())?;
    let reduced = decohere(&psi, n_env, env_overlap)?.reduced(&keep)?;
    let after = branch_coherence(&reduced)?;
    let coherence_factor = (before.norm() > AMPLITUDE_TOL).then(|| (after / before).re);

    let mut branch_purities = [0.0; 2];
    for (slot, b) in branch_purities.iter_mut().zip(Branch::ALL) {
        let branch = branch_state(b, &chain_layout())?;
        *slot = decohere(&branch, n_env, env_overlap)?.reduced(&keep)?.purity();
    }
    Ok(DecoherenceReport {
        n_env,
        env_overlap,
        coherence_factor,
        predicted_factor: env_overlap.powi(n_env as i32),
        coherence_magnitude: after.norm(),
        reduced_purity: reduced.purity(),
        branch_purities,
    })
}

// ---------------------------------------------------------------------------
// Observables

/// `S_z = σ_z / 2`.
pub fn spin_z() -> CMatrix {
    sigma_z() * C64::new(0.5, 0.0)
}

/// `S_x = σ_x / 2`.
pub fn spin_x() -> CMatrix {
    sigma_x() * C64::new(0.5, 0.0)
}

/// `S_y = σ_y / 2`.
pub fn spin_y() -> CMatrix {
    sigma_y() * C64::new(0.5, 0.0)
}

/// `S_a(γ) = S_x cos γ + S_y sin γ`.
pub fn spin_a(gamma: f64) -> CMatrix {
    spin_x() * C64::new(gamma.cos(), 0.0) + spin_y() * C64::new(gamma.sin(), 0.0)
}

/// `d₀σ_z + d₁σ_x + d₂σ_y` with `Σ dᵢ² = 1`: the general nontrivial
/// single-qubit pointer observable.
pub fn pointer_algebra(d: [f64; 3]) -> Result<CMatrix> {
    let n: f64 = d.iter().map(|x| x * x).sum();
    if !n.is_finite() || (n - 1.0).abs() > AMPLITUDE_TOL {
        return Err(Error::InvalidParameter(format!(
            "algebra coefficients must satisfy Σd² = 1, got {n}"
        )));
    }
    Ok(sigma_z() * C64::new(d[0], 0.0)
        + sigma_x() * C64::new(d[1], 0.0)
        + sigma_y() * C64::new(d[2], 0.0))
}

/// Interference-term coefficients `(c₁, c₂)` with `c₂ = c₁*`, `|c₁| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferenceCoefficients {
    pub c1: C64,
    pub c2: C64,
}

impl InterferenceCoefficients {
    pub fn new(c1: C64, c2: C64) -> Result<Self> {
        if (c1.norm() - 1.0).abs() > AMPLITUDE_TOL || (c2 - c1.conj()).norm() > AMPLITUDE_TOL {
            return Err(Error::NotHermitian((c2 - c1.conj()).norm().max((c1.norm() - 1.0).abs())));
        }
        Ok(Self { c1, c2 })
    }

    pub fn from_phase(phase: f64) -> Self {
        let c1 = C64::from_polar(1.0, phase);
        Self { c1, c2: c1.conj() }
    }

    pub fn phase(&self) -> f64 {
        self.c1.arg()
    }
}

impl Default for InterferenceCoefficients {
    fn default() -> Self {
        Self::from_phase(0.0)
    }
}

/// `c₁|Π₁⟩⟨Π₂| + c₂|Π₂⟩⟨Π₁|` where `Π_i` is branch `i` on `n` pointer qubits.
fn interference_term(n_qubits: usize, c: InterferenceCoefficients) -> CMatrix {
    let dim = 1 << n_qubits;
    ket_bra(dim, 0, dim - 1) * c.c1 + ket_bra(dim, dim - 1, 0) * c.c2
}

/// `B(c)` on `(S, D, O)`.
pub fn interference_ms(c: InterferenceCoefficients) -> CMatrix {
    interference_term(3, c)
}

/// `B^{S,D}(c)` on `(S, D)`.
pub fn interference_sd(c: InterferenceCoefficients) -> CMatrix {
    interference_term(2, c)
}

/// Parameters of the observable zoo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZooParams {
    pub gamma: f64,
    pub c: InterferenceCoefficients,
    pub d: [f64; 3],
}

impl Default for ZooParams {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            c: InterferenceCoefficients::default(),
            d: [1.0, 0.0, 0.0],
        }
    }
}

/// Named observables of the chain embedded in one layout.
///
/// Members whose factors are missing from the layout are left out: a
/// system-only layout carries the `S_*` family alone.
#[derive(Clone, Debug)]
pub struct ObservableZoo {
    members: BTreeMap<&'static str, Observable>,
}

impl ObservableZoo {
    pub fn get(&self, name: &str) -> Option<&Observable> {
        self.members.get(name)
    }

    /// Like [`get`](Self::get) but reports missing members as an error.
    pub fn require(&self, name: &str) -> Result<&Observable> {
        self.get(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no observable `{name}` in this zoo")))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.members.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Observable)> {
        self.members.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn zoo(layout: &SpaceLayout, params: &ZooParams) -> Result<ObservableZoo> {
    // validate up front even when the O factor is absent
    let algebra = pointer_algebra(params.d)?;
    let c = InterferenceCoefficients::new(params.c.c1, params.c.c2)?;

    let mut members = BTreeMap::new();
    let mut add = |name: &'static str, m: CMatrix, targets: &[&str]| -> Result<()> {
        if targets.iter().all(|t| layout.contains(t)) {
            let local = SpaceLayout::qubits(targets.iter().copied())?;
            let obs = Observable::new(m, &local)?;
            members.insert(name, embed_operator(&obs, targets, layout)?);
        }
        Ok(())
    };

    add("S_z", spin_z(), &[SYSTEM])?;
    add("S_x", spin_x(), &[SYSTEM])?;
    add("S_y", spin_y(), &[SYSTEM])?;
    add("S_a", spin_a(params.gamma), &[SYSTEM])?;
    add("Q", sigma_z(), &[DETECTOR])?;
    add("Q_x", sigma_x(), &[DETECTOR])?;
    add("Q_y", sigma_y(), &[DETECTOR])?;
    add("V", sigma_z(), &[OBSERVER])?;
    add("V_x", sigma_x(), &[OBSERVER])?;
    add("V_y", sigma_y(), &[OBSERVER])?;
    add("A", algebra, &[OBSERVER])?;
    add("S_zQ", spin_z().kronecker(&sigma_z()), &[SYSTEM, DETECTOR])?;
    add("B_SD", interference_sd(c), &[SYSTEM, DETECTOR])?;
    add("B", interference_ms(c), &[SYSTEM, DETECTOR, OBSERVER])?;
    Ok(ObservableZoo { members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, is_eigenstate, DEFAULT_EIGEN_TOL};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn prepare_system_examples() {
        let up = prepare_system(&Amplitudes::real(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(up.amplitude(0), c(1.0));
        let l = SpaceLayout::qubits([SYSTEM]).unwrap();
        let sz = Observable::new(spin_z(), &l).unwrap();
        let sym = prepare_system(&Amplitudes::symmetric()).unwrap();
        assert!(expectation(&sym, &sz).unwrap().abs() < 1e-15);
        let p = prepare_system(&Amplitudes::real(0.6, 0.8).unwrap()).unwrap();
        assert!((expectation(&p, &sz).unwrap() + 0.14).abs() < 1e-15);
        assert!(Amplitudes::real(0.6, 0.6).is_err());
    }

    #[test]
    fn eigenstate_premeasurement_gives_product() {
        let s1 = prepare_system(&Amplitudes::real(1.0, 0.0).unwrap()).unwrap();
        let out = premeasure(&s1.tensor(&ready_pointer(DETECTOR).unwrap()).unwrap(), SYSTEM, DETECTOR)
            .unwrap();
        // |s₁⟩|D₁⟩ = |00⟩
        assert!((out.amplitude(0) - c(1.0)).norm() < 1e-15);
        let s2 = prepare_system(&Amplitudes::real(0.0, 1.0).unwrap()).unwrap();
        let out = premeasure(&s2.tensor(&ready_pointer(DETECTOR).unwrap()).unwrap(), SYSTEM, DETECTOR)
            .unwrap();
        assert!((out.amplitude(3) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn chain_has_amplitudes_on_diagonal_branches_only() {
        let a = Amplitudes::new(c(0.6), C64::new(0.0, 0.8)).unwrap();
        let sd = system_detector_state(&a).unwrap();
        assert!((sd.amplitude(0) - a.a1).norm() < 1e-15);
        assert!((sd.amplitude(3) - a.a2).norm() < 1e-15);
        let ms = measurement_chain(&a).unwrap();
        for i in 0..8 {
            let want = match i {
                0 => a.a1,
                7 => a.a2,
                _ => c(0.0),
            };
            assert!((ms.amplitude(i) - want).norm() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn premeasure_rejects_unready_pointer() {
        let s = prepare_system(&Amplitudes::symmetric()).unwrap();
        let d1 = StateVector::qubit(DETECTOR, c(1.0), c(0.0)).unwrap();
        assert_eq!(
            premeasure(&s.tensor(&d1).unwrap(), SYSTEM, DETECTOR).unwrap_err(),
            Error::PointerNotReady(DETECTOR.into())
        );
    }

    #[test]
    fn branch_states() {
        let l = chain_layout();
        let one = branch_state(Branch::One, &l).unwrap();
        let two = branch_state(Branch::Two, &l).unwrap();
        assert_eq!(one.amplitude(0), c(1.0));
        assert_eq!(two.amplitude(7), c(1.0));
        assert_eq!(one.inner(&two).unwrap(), c(0.0));
        let with_env = SpaceLayout::qubits([SYSTEM, "E1"]).unwrap();
        assert!(branch_state(Branch::One, &with_env).is_err());
    }

    #[test]
    fn decohere_validates_parameters() {
        let psi = measurement_chain(&Amplitudes::symmetric()).unwrap();
        assert!(decohere(&psi, 2, 1.5).is_err());
        assert!(decohere(&psi, 2, -0.1).is_err());
        assert!(decohere(&psi, 0, 0.5).is_err());
        assert!(decohere(&psi, 11, 0.5).is_err());
    }

    #[test]
    fn decoherence_example_values() {
        let r = decoherence_report(&Amplitudes::symmetric(), 5, 0.5).unwrap();
        assert!((r.coherence_factor.unwrap() - 0.03125).abs() < 1e-12);
        let r = decoherence_report(&Amplitudes::symmetric(), 3, 1.0).unwrap();
        assert!((r.coherence_factor.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.reduced_purity - 1.0).abs() < 1e-12);
        let r = decoherence_report(&Amplitudes::real(1.0, 0.0).unwrap(), 4, 0.3).unwrap();
        assert!(r.coherence_factor.is_none());
        assert!((r.reduced_purity - 1.0).abs() < 1e-12);
        assert!(r.branch_purities.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn full_overlap_leaves_reduced_state_unchanged() {
        let a = Amplitudes::real(0.6, 0.8).unwrap();
        let psi = measurement_chain(&a).unwrap();
        let reduced = decohere(&psi, 4, 1.0)
            .unwrap()
            .reduced(&[SYSTEM, DETECTOR, OBSERVER])
            .unwrap();
        assert!((reduced.matrix() - psi.to_density().matrix()).norm() < 1e-14);
    }

    #[test]
    fn zoo_identities() {
        let l = chain_layout();
        let z = zoo(&l, &ZooParams::default()).unwrap();
        assert_eq!(z.len(), 14);
        assert_eq!(z.get("S_a").unwrap().matrix(), z.get("S_x").unwrap().matrix());
        assert_eq!(z.get("A").unwrap().matrix(), z.get("V").unwrap().matrix());
        let psi = measurement_chain(&Amplitudes::symmetric()).unwrap();
        let b = z.get("B").unwrap();
        assert!((expectation(&psi, b).unwrap() - 1.0).abs() < 1e-14);
        let g = is_eigenstate(b, &psi, DEFAULT_EIGEN_TOL).unwrap().unwrap();
        assert!((g - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zoo_on_partial_layout_skips_missing_factors() {
        let l = SpaceLayout::qubits([SYSTEM]).unwrap();
        let z = zoo(&l, &ZooParams::default()).unwrap();
        let names: Vec<_> = z.names().collect();
        assert_eq!(names, vec!["S_a", "S_x", "S_y", "S_z"]);
    }

    #[test]
    fn zoo_rejects_bad_parameters() {
        let l = chain_layout();
        let p = ZooParams {
            d: [1.0, 1.0, 0.0],
            ..Default::default()
        };
        assert!(zoo(&l, &p).is_err());
        assert!(InterferenceCoefficients::new(c(1.0), C64::new(0.0, 1.0)).is_err());
        assert!(InterferenceCoefficients::new(c(2.0), c(2.0)).is_err());
        let p = ZooParams {
            c: InterferenceCoefficients {
                c1: C64::new(0.0, 1.0),
                c2: C64::new(0.0, 1.0),
            },
            ..Default::default()
        };
        assert!(matches!(zoo(&l, &p), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn pointer_commutators() {
        let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
        let two_i = C64::new(0.0, 2.0);
        assert!((comm(&sigma_z(), &sigma_x()) - sigma_y() * two_i).norm() < 1e-15);
        assert!((comm(&sigma_z(), &sigma_y()) + sigma_x() * two_i).norm() < 1e-15);
    }
}
