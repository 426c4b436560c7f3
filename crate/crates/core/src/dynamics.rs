//! GKSL generators and fixed-step RK4 propagation of density matrices.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{
    bohr_decompose, build_hamiltonian, coupling_operator, default_group_tol, gamma, pauli, qubit_hamiltonian, BathSpec,
    BohrChannel, SystemSpec,
};
use crate::qmat::{kron, partial_trace_mat, CMat, DensityMatrix, HERMITIAN_TOL};

/// Eigenvalues below this after a step abort the integration.
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_EVERY: usize = 100;

/// `L(rho) = -i[H, rho] + sum_k gamma_k (A_k rho A_k^dag - {A_k^dag A_k, rho}/2)`.
#[derive(Clone, Debug)]
pub struct Generator {
    hamiltonian: CMat,
    channels: Vec<BohrChannel>,
    rates: Vec<f64>,
    // H - (i/2) sum gamma A^dag A
    h_eff: CMat,
    active: Vec<(f64, CMat)>,
}

impl Generator {
    pub fn new(hamiltonian: CMat, channels: Vec<BohrChannel>, rates: Vec<f64>) -> Result<Self> {
        if channels.len() != rates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} channels but {} rates",
                channels.len(),
                rates.len()
            )));
        }
        if !hamiltonian.is_hermitian(HERMITIAN_TOL * hamiltonian.max_abs().max(1.0)) {
            return Err(Error::NonHermitian(hamiltonian.hermiticity_error()));
        }
        let n = hamiltonian.dim();
        let mut h_eff = hamiltonian.clone();
        let mut active = Vec::new();
        for (ch, &rate) in channels.iter().zip(&rates) {
            if ch.jump.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator is {}x{}, Hamiltonian {n}x{n}",
                    ch.jump.dim(),
                    ch.jump.dim()
                )));
            }
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::param(
                    "rates",
                    format!("rate {rate} is not a finite non-negative number"),
                ));
            }
            if rate > 0.0 {
                let ada = ch.jump.adjoint().matmul(&ch.jump);
                h_eff.add_scaled(C64::new(0.0, -0.5 * rate), &ada);
                active.push((rate, ch.jump.clone()));
            }
        }
        Ok(Generator {
            hamiltonian,
            channels,
            rates,
            h_eff,
            active,
        })
    }

    /// Born-Markov generator of the qubit pair in the common bath: channels
    /// from the Bohr decomposition of `sum_i sigma_x^i`, each with its own
    /// `gamma(omega)` for both signs of omega.
    pub fn global(system: &SystemSpec, bath: &BathSpec) -> Result<Self> {
        system.validate()?;
        bath.validate()?;
        let h = build_hamiltonian(system);
        let dec = bohr_decompose(&h, &coupling_operator(), default_group_tol(&h)?)?;
        let rates = dec.channels.iter().map(|c| gamma(c.omega, bath)).collect();
        Self::new(h, dec.channels, rates)
    }

    /// Purely coherent evolution.
    pub fn unitary(hamiltonian: CMat) -> Result<Self> {
        Self::new(hamiltonian, Vec::new(), Vec::new())
    }

    /// Same channels with every rate set to zero.
    pub fn without_dissipation(&self) -> Result<Self> {
        Self::new(
            self.hamiltonian.clone(),
            self.channels.clone(),
            vec![0.0; self.rates.len()],
        )
    }

    /// `L (x) id` on an ancilla of dimension `dim_ancilla`, appended on the right.
    pub fn with_ancilla(&self, dim_ancilla: usize) -> Result<Self> {
        let id = CMat::identity(dim_ancilla);
        let channels = self
            .channels
            .iter()
            .map(|c| BohrChannel {
                omega: c.omega,
                jump: kron(&c.jump, &id),
            })
            .collect();
        Self::new(kron(&self.hamiltonian, &id), channels, self.rates.clone())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[BohrChannel] {
        &self.channels
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Smallest non-zero channel rate, if any.
    pub fn min_rate(&self) -> Option<f64> {
        self.rates.iter().copied().filter(|&r| r > 0.0).reduce(f64::min)
    }

    /// Only the dissipative part `D(rho)`.
    pub fn dissipator(&self, rho: &CMat) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n);
        for (ch, &rate) in self.channels.iter().zip(&self.rates) {
            if rate == 0.0 {
                continue;
            }
            let a = &ch.jump;
            let ada = a.adjoint().matmul(a);
            out.add_scaled(C64::new(rate, 0.0), &a.matmul(rho).matmul_adj(a));
            out.add_scaled(C64::new(-0.5 * rate, 0.0), &ada.matmul(rho));
            out.add_scaled(C64::new(-0.5 * rate, 0.0), &rho.matmul(&ada));
        }
        out
    }

    pub(crate) fn apply_raw(&self, rho: &CMat) -> CMat {
        let i = C64::new(0.0, 1.0);
        let mut out = self.h_eff.matmul(rho).scale_c(-i);
        out.add_scaled(i, &rho.matmul_adj(&self.h_eff));
        for (rate, a) in &self.active {
            out.add_scaled(C64::new(*rate, 0.0), &a.matmul(rho).matmul_adj(a));
        }
        out
    }
}

/// `d rho / dt` under the generator.
pub fn apply_generator(gen: &Generator, rho: &CMat) -> Result<CMat> {
    if rho.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, generator acts on dimension {}",
            rho.dim(),
            rho.dim(),
            gen.dim()
        )));
    }
    Ok(gen.apply_raw(rho))
}

/// Generator of a qubit coupled to the bath on its own: emission through
/// `sigma_minus` at `+omega_i` and absorption through `sigma_plus` at `-omega_i`.
pub fn lone_qubit_generator(omega_i: f64, bath: &BathSpec) -> Result<Generator> {
    if !(omega_i.is_finite() && omega_i > 0.0) {
        return Err(Error::param("omega_i", "must be > 0"));
    }
    bath.validate()?;
    let channels = vec![
        BohrChannel {
            omega: omega_i,
            jump: pauli::minus(),
        },
        BohrChannel {
            omega: -omega_i,
            jump: pauli::plus(),
        },
    ];
    let rates = vec![gamma(omega_i, bath), gamma(-omega_i, bath)];
    Generator::new(qubit_hamiltonian(omega_i), channels, rates)
}

/// `d rho~_i / dt = Tr_j L(rho_12)`: the reduced dynamics of qubit `i` is only
/// defined through the full two-qubit state.
pub fn reduced_derivative(gen12: &Generator, rho12: &CMat, i: usize) -> Result<CMat> {
    if gen12.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "reduced derivative needs a two-qubit generator".into(),
        ));
    }
    let keep = match i {
        1 => 0,
        2 => 1,
        _ => return Err(Error::param("i", "qubit index must be 1 or 2")),
    };
    let d = apply_generator(gen12, rho12)?;
    partial_trace_mat(&d, &[2, 2], &[keep])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stepping {
    pub dt: f64,
    /// Keep every `record_every`-th state (the final state is always kept).
    pub record_every: usize,
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping {
            dt: DEFAULT_DT,
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

impl Stepping {
    pub fn new(dt: f64, record_every: usize) -> Self {
        Stepping { dt, record_every }
    }

    /// Number of steps used to reach `t_end`: `round(t_end / dt)`, at least 1.
    pub fn steps_for(&self, t_end: f64) -> usize {
        ((t_end / self.dt).round() as usize).max(1)
    }

    pub fn is_recorded(&self, step: usize, n_steps: usize) -> bool {
        step.is_multiple_of(self.record_every) || step == n_steps
    }

    fn validate(&self, t_end: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be > 0"));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::param("t_end", "must be > 0"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Integrator step index of every recorded state.
    pub steps: Vec<usize>,
    /// Most negative eigenvalue seen before clamping, over all steps.
    pub min_eigenvalue: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Reduced trajectory on the kept subsystems.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Trajectory> {
        let states = self
            .states
            .iter()
            .map(|s| crate::qmat::partial_trace(s, dims, keep))
            .collect::<Result<_>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            steps: self.steps.clone(),
            min_eigenvalue: self.min_eigenvalue,
        })
    }
}

fn rk4_step(gen: &Generator, rho: &CMat, h: f64) -> CMat {
    let k1 = gen.apply_raw(rho);
    let mut y = rho.clone();
    y.add_scaled(C64::new(0.5 * h, 0.0), &k1);
    let k2 = gen.apply_raw(&y);
    let mut y = rho.clone();
    y.add_scaled(C64::new(0.5 * h, 0.0), &k2);
    let k3 = gen.apply_raw(&y);
    let mut y = rho.clone();
    y.add_scaled(C64::new(h, 0.0), &k3);
    let k4 = gen.apply_raw(&y);
    let mut out = rho.clone();
    out.add_scaled(C64::new(h / 6.0, 0.0), &k1);
    out.add_scaled(C64::new(h / 3.0, 0.0), &k2);
    out.add_scaled(C64::new(h / 3.0, 0.0), &k3);
    out.add_scaled(C64::new(h / 6.0, 0.0), &k4);
    out
}

/// Fixed-step RK4 from `rho0` to `t_end`, recording per `stepping`.
pub fn evolve(gen: &Generator, rho0: &DensityMatrix, t_end: f64, stepping: Stepping) -> Result<Trajectory> {
    evolve_observed(gen, rho0, t_end, stepping, |_, _, _| {})
}

/// As [`evolve`], calling `observer(step, t, state)` after every step
/// (including step 0) whether or not the state is recorded.
pub fn evolve_observed(
    gen: &Generator,
    rho0: &DensityMatrix,
    t_end: f64,
    stepping: Stepping,
    mut observer: impl FnMut(usize, f64, &DensityMatrix),
) -> Result<Trajectory> {
    stepping.validate(t_end)?;
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state is {}x{}, generator acts on dimension {}",
            rho0.dim(),
            rho0.dim(),
            gen.dim()
        )));
    }
    let n_steps = stepping.steps_for(t_end);
    let dt = stepping.dt;
    let mut traj = Trajectory {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let mut rho = rho0.clone();
    observer(0, 0.0, &rho);
    traj.times.push(0.0);
    traj.states.push(rho.clone());
    traj.steps.push(0);
    for step in 1..=n_steps {
        let next = rk4_step(gen, rho.as_mat(), dt);
        let (state, min_eig) = DensityMatrix::clamp_psd(&next);
        let t = step as f64 * dt;
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::PositivityLoss {
                step,
                time: t,
                min_eigenvalue: min_eig,
            });
        }
        traj.min_eigenvalue = traj.min_eigenvalue.min(min_eig);
        rho = state;
        observer(step, t, &rho);
        if stepping.is_recorded(step, n_steps) {
            traj.times.push(t);
            traj.states.push(rho.clone());
            traj.steps.push(step);
        }
    }
    Ok(traj)
}

/// Evolve a (qubit 1, qubit 2, ancilla) state under `L_12 (x) id`.
pub fn evolve_with_ancilla(
    gen12: &Generator,
    rho_12a: &DensityMatrix,
    t_end: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    let d = gen12.dim();
    if !rho_12a.dim().is_multiple_of(d) || rho_12a.dim() == d {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} has no ancilla factor beyond the system dimension {d}",
            rho_12a.dim()
        )));
    }
    let extended = gen12.with_ancilla(rho_12a.dim() / d)?;
    evolve(&extended, rho_12a, t_end, stepping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{thermal_state, Interaction};
    use crate::qmat::{partial_trace, trace_distance};
    use approx::assert_abs_diff_eq;

    fn bath() -> BathSpec {
        BathSpec {
            temperature: 127.33,
            lambda: 1e-4,
        }
    }

    fn system(interaction: Interaction) -> SystemSpec {
        SystemSpec {
            omega1: 50.0,
            omega2: 55.0,
            interaction,
            coupling: 0.8,
            delta: 0.5,
        }
    }

    fn random_state(dim: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = g.matmul_adj(&g);
        let tr = m.trace().re;
        DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
    }

    #[test]
    fn generator_output_is_traceless_and_hermitian() {
        for inter in [Interaction::None, Interaction::Ising, Interaction::Xy, Interaction::Xyz] {
            let gen = Generator::global(&system(inter), &bath()).unwrap();
            for seed in 0..5 {
                let rho = random_state(4, seed);
                let d = apply_generator(&gen, &rho).unwrap();
                assert!(d.trace().norm() < 1e-12);
                assert!(d.hermiticity_error() < 1e-12);
            }
        }
    }

    #[test]
    fn gibbs_state_is_a_fixed_point() {
        for inter in [Interaction::None, Interaction::Ising, Interaction::Xy, Interaction::Xyz] {
            let gen = Generator::global(&system(inter), &bath()).unwrap();
            let th = thermal_state(gen.hamiltonian(), bath().temperature).unwrap();
            assert!(apply_generator(&gen, &th).unwrap().max_abs() < 1e-9, "{inter:?}");
        }
    }

    #[test]
    fn generator_is_linear() {
        let gen = Generator::global(&system(Interaction::Xyz), &bath()).unwrap();
        let (a, b) = (random_state(4, 1), random_state(4, 2));
        let alpha = 0.3;
        let mix = &a.scale(alpha) + &b.scale(1.0 - alpha);
        let lhs = apply_generator(&gen, &mix).unwrap();
        let rhs =
            &apply_generator(&gen, &a).unwrap().scale(alpha) + &apply_generator(&gen, &b).unwrap().scale(1.0 - alpha);
        assert!((&lhs - &rhs).max_abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let gen = Generator::global(&system(Interaction::Ising), &bath()).unwrap();
        assert!(apply_generator(&gen, &CMat::identity(2)).is_err());
        assert!(evolve(&gen, &DensityMatrix::maximally_mixed(2), 1.0, Stepping::default()).is_err());
        assert!(evolve(&gen, &DensityMatrix::maximally_mixed(4), -1.0, Stepping::default()).is_err());
        assert!(reduced_derivative(&gen, &CMat::identity(4), 3).is_err());
    }

    #[test]
    fn unitary_limit_keeps_purity() {
        let gen = Generator::global(&system(Interaction::Xyz), &bath())
            .unwrap()
            .without_dissipation()
            .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| C64::new(x, 0.0);
        let rho0 = DensityMatrix::from_ket(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        // RK4 damps a coherence at frequency W by ~(W dt)^6/144 per step; the
        // |00><11| coherence here rotates at ~105, so dt is taken small.
        let traj = evolve(&gen, &rho0, 1.0, Stepping::new(1e-4, 500)).unwrap();
        for st in &traj.states {
            assert_abs_diff_eq!(st.purity(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(st.trace().re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lone_qubit_channels_and_fixed_point() {
        let b = bath();
        let gen = lone_qubit_generator(50.0, &b).unwrap();
        assert_eq!(gen.channels().len(), 2);
        assert_eq!(gen.channels()[0].omega, 50.0);
        assert_eq!(gen.channels()[0].jump, pauli::minus());
        assert_eq!(gen.channels()[1].omega, -50.0);
        assert_eq!(gen.channels()[1].jump, pauli::plus());
        assert_eq!(gen.rates()[0], gamma(50.0, &b));
        let th = thermal_state(&qubit_hamiltonian(50.0), b.temperature).unwrap();
        assert!(apply_generator(&gen, &th).unwrap().max_abs() < 1e-9);

        // Two-level rate balance: p_e gamma(+) = (1 - p_e) gamma(-) gives
        // p_e = n / (2n + 1).
        let n = crate::model::bose(50.0, b.temperature);
        assert_abs_diff_eq!(th.as_mat()[(0, 0)].re, n / (2.0 * n + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn lone_qubit_excited_population_decays_monotonically() {
        let b = bath();
        let gen = lone_qubit_generator(50.0, &b).unwrap();
        let c = |x: f64| C64::new(x, 0.0);
        let rho0 = DensityMatrix::from_ket(&[c(1.0), c(0.0)]).unwrap();
        let traj = evolve(&gen, &rho0, 40.0, Stepping::new(1e-3, 500)).unwrap();
        let n = crate::model::bose(50.0, b.temperature);
        let p_inf = n / (2.0 * n + 1.0);
        let rate = gamma(50.0, &b) + gamma(-50.0, &b);
        let mut prev = f64::INFINITY;
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let p = st.as_mat()[(0, 0)].re;
            assert!(p <= prev + 1e-15 && p >= p_inf);
            // closed form: p(t) = p_inf + (1 - p_inf) e^{-rate t}
            assert_abs_diff_eq!(p, p_inf + (1.0 - p_inf) * (-rate * t).exp(), epsilon = 1e-10);
            prev = p;
        }
    }

    #[test]
    fn reduced_derivative_matches_partial_trace() {
        let gen = Generator::global(&system(Interaction::Xyz), &bath()).unwrap();
        let rho = random_state(4, 9);
        let full = apply_generator(&gen, &rho).unwrap();
        for (i, keep) in [(1, 0), (2, 1)] {
            let red = reduced_derivative(&gen, &rho, i).unwrap();
            assert!((&red - &partial_trace_mat(&full, &[2, 2], &[keep]).unwrap()).max_abs() < 1e-15);
            assert!(red.trace().norm() < 1e-12);
            assert!(red.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn ancilla_marginal_is_untouched() {
        let gen = Generator::global(&system(Interaction::Xyz), &bath()).unwrap();
        let rho = random_state(8, 4);
        let traj = evolve_with_ancilla(&gen, &rho, 1.0, Stepping::new(1e-3, 100)).unwrap();
        let anc0 = partial_trace(&rho, &[2, 2, 2], &[2]).unwrap();
        for st in &traj.states {
            let anc = partial_trace(st, &[2, 2, 2], &[2]).unwrap();
            assert!((anc.as_mat() - anc0.as_mat()).max_abs() < 1e-9);
        }
    }

    #[test]
    fn global_trace_distance_contracts() {
        let gen = Generator::global(&system(Interaction::Xyz), &bath()).unwrap();
        let st = Stepping::new(1e-3, 50);
        let a = evolve(&gen, &random_state(4, 11), 5.0, st).unwrap();
        let b = evolve(&gen, &random_state(4, 12), 5.0, st).unwrap();
        let mut prev = f64::INFINITY;
        for (x, y) in a.states.iter().zip(&b.states) {
            let d = trace_distance(x, y);
            assert!(d <= prev + 1e-9);
            prev = d;
        }
    }

    #[test]
    fn recording_schedule() {
        let gen = lone_qubit_generator(50.0, &bath()).unwrap();
        let traj = evolve(&gen, &DensityMatrix::maximally_mixed(2), 1.05, Stepping::new(0.01, 10)).unwrap();
        assert_eq!(traj.steps, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 105]);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 1.05, epsilon = 1e-12);
    }
}
