//! Entropy balance bookkeeping: heat currents, entropy production rates,
//! current deficits and the bounds they obey.
//!
//! Sign conventions: a positive heat current means heat leaves the system
//! into the bath. All quantities are in units with `k_B = 1`.
//!
//! Two pictures of the single-qubit dynamics are supported:
//!
//! * [`LocalMode::LoneQubit`]: each qubit is propagated by its own Markovian
//!   generator from the initial marginal, ignoring the partner.
//! * [`LocalMode::NonMarkovianReduced`]: each qubit state is the partial trace
//!   of the global two-qubit state and its time derivative the partial trace
//!   of the global generator.

use crate::dynamics::{apply_generator, evolve_observed, lone_qubit_generator, Generator, Stepping, Trajectory};
use crate::error::{Error, Result};
use crate::model::{embed, qubit_hamiltonian, thermal_state, BathSpec, SystemSpec};
use crate::qmat::{partial_trace, partial_trace_mat, rel_entropy, vn_entropy, CMat, DensityMatrix, ZERO_EIG};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalMode {
    LoneQubit,
    NonMarkovianReduced,
}

impl LocalMode {
    pub fn label(&self) -> &'static str {
        match self {
            LocalMode::LoneQubit => "lone",
            LocalMode::NonMarkovianReduced => "reduced",
        }
    }
}

/// `J = -Tr[H dρ/dt] / T`. The commutator part of a GKSL derivative is
/// traceless against H, so the full derivative and the dissipator alone give
/// the same value.
pub fn heat_current(h_sys: &CMat, derivative: &CMat, temperature: f64) -> f64 {
    -h_sys.trace_product(derivative).re / temperature
}

/// `dS/dt = -Tr[dρ/dt ln ρ]`, with the logarithm taken on the support of ρ.
pub fn entropy_rate(rho: &DensityMatrix, derivative: &CMat) -> f64 {
    -derivative.trace_product(&rho.log_on_support()).re
}

/// `ln(sigma)` after checking that `rho` lives on the support of `sigma`.
fn log_reference(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<CMat> {
    let spec = sigma.clamped_spectrum();
    let weights = spec.diagonal_of(rho);
    if spec
        .eigenvalues
        .iter()
        .zip(&weights)
        .any(|(&l, &w)| l <= ZERO_EIG && w > ZERO_EIG)
    {
        return Err(Error::DivergentSupport);
    }
    Ok(spec.map(|l| if l > ZERO_EIG { l.ln() } else { 0.0 }))
}

/// Markovian entropy production rate `-d/dt S(ρ || ρ_th) = -Tr[dρ/dt (ln ρ - ln ρ_th)]`.
pub fn epr_markov(rho: &DensityMatrix, rho_th: &DensityMatrix, derivative: &CMat) -> Result<f64> {
    let ln_th = log_reference(rho, rho_th)?;
    let diff = &rho.log_on_support() - &ln_th;
    Ok(-derivative.trace_product(&diff).re)
}

/// Entropy production rate of a qubit inside the pair:
/// `-d/dt S(ρ~ || ρ~_th) - Tr[dρ~/dt (H_i / T + ln ρ~_th)]`, where `ρ~_th` is the
/// marginal of the global Gibbs state.
pub fn epr_local_nm(
    rho_i: &DensityMatrix,
    rho_th_i_tilde: &DensityMatrix,
    reduced_derivative: &CMat,
    h_i: &CMat,
    temperature: f64,
) -> Result<f64> {
    let ln_th = log_reference(rho_i, rho_th_i_tilde)?;
    let rel_rate = -reduced_derivative.trace_product(&(&rho_i.log_on_support() - &ln_th)).re;
    let mut offset = h_i.scale(1.0 / temperature);
    offset += &ln_th;
    Ok(rel_rate - reduced_derivative.trace_product(&offset).re)
}

/// `I = S(ρ_1) + S(ρ_2) - S(ρ_12)`
pub fn mutual_information(rho12: &DensityMatrix) -> Result<f64> {
    if rho12.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "mutual information needs a two-qubit state".into(),
        ));
    }
    let r1 = partial_trace(rho12, &[2, 2], &[0])?;
    let r2 = partial_trace(rho12, &[2, 2], &[1])?;
    Ok(vn_entropy(&r1) + vn_entropy(&r2) - vn_entropy(rho12))
}

pub fn heat_current_deficit(j_global: f64, j_1: f64, j_2: f64) -> f64 {
    j_global - j_1 - j_2
}

/// Entropy, heat current and entropy production of the pair and of each
/// qubit at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoSample {
    pub time: f64,
    pub s_global: f64,
    pub s_1: f64,
    pub s_2: f64,
    pub j_global: f64,
    pub j_1: f64,
    pub j_2: f64,
    pub sigma_global: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    /// Analytic `dS/dt` for (pair, qubit 1, qubit 2).
    pub entropy_rates: [f64; 3],
    pub mode: LocalMode,
}

impl ThermoSample {
    pub fn delta_j(&self) -> f64 {
        heat_current_deficit(self.j_global, self.j_1, self.j_2)
    }

    /// `|dS/dt + J - σ|` for (pair, qubit 1, qubit 2).
    pub fn balance_residuals(&self) -> [f64; 3] {
        [
            (self.entropy_rates[0] + self.j_global - self.sigma_global).abs(),
            (self.entropy_rates[1] + self.j_1 - self.sigma_1).abs(),
            (self.entropy_rates[2] + self.j_2 - self.sigma_2).abs(),
        ]
    }

    pub fn balance_residual_max(&self) -> f64 {
        self.balance_residuals().into_iter().fold(0.0, f64::max)
    }
}

/// Time-integrated deficits at one time, by direct quadrature and through
/// entropies.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficitReport {
    pub time: f64,
    /// Instantaneous heat current deficit.
    pub delta_j: f64,
    /// Quadrature of the instantaneous deficit from 0 to `time`.
    pub total_deficit_direct: f64,
    /// Same quantity from the entropy and relative-entropy changes.
    pub total_deficit_chi: f64,
    pub markovian_like_part: f64,
    pub nm_part: f64,
    pub chi_12: f64,
    pub chi_1: f64,
    pub chi_2: f64,
    pub mutual_info_0: f64,
    pub mutual_info_t: f64,
    pub b_nm: f64,
    /// `S(ρ_12(0) || ρ_th,12)`
    pub rel_entropy_12_0: f64,
    /// `S(ρ_12(t) || ρ_th,12)`
    pub rel_entropy_12_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundId {
    /// Upper bound on the total deficit in the lone-qubit picture.
    DeficitUpper,
    /// Total deficit plus relative entropy of entanglement, lone-qubit picture.
    Complementarity,
    /// Upper bound on the total deficit in the reduced picture.
    DeficitUpperNm,
    /// Complementarity with the extra reduced-picture term.
    ComplementarityNm,
}

impl BoundId {
    pub fn label(&self) -> &'static str {
        match self {
            BoundId::DeficitUpper => "deficit_upper",
            BoundId::Complementarity => "complementarity",
            BoundId::DeficitUpperNm => "deficit_upper_nm",
            BoundId::ComplementarityNm => "complementarity_nm",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundEval {
    pub time: f64,
    pub id: BoundId,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; non-negative when the bound holds.
    pub slack: f64,
}

/// Evaluate the deficit bounds at one time. `e_r` is the relative entropy of
/// entanglement of `ρ_12(t)`; pass it only when the global Gibbs state is
/// separable, since the complementarity relations rely on that.
pub fn bound_report(deficit: &DeficitReport, mode: LocalMode, e_r: Option<f64>) -> Vec<BoundEval> {
    let d = deficit;
    let info_change = -d.mutual_info_0 + d.mutual_info_t;
    let extra = match mode {
        LocalMode::LoneQubit => 0.0,
        LocalMode::NonMarkovianReduced => d.b_nm,
    };
    let (upper_id, comp_id) = match mode {
        LocalMode::LoneQubit => (BoundId::DeficitUpper, BoundId::Complementarity),
        LocalMode::NonMarkovianReduced => (BoundId::DeficitUpperNm, BoundId::ComplementarityNm),
    };
    let eval = |id, lhs: f64, rhs: f64| BoundEval {
        time: d.time,
        id,
        lhs,
        rhs,
        slack: rhs - lhs,
    };
    let mut out = vec![eval(
        upper_id,
        d.total_deficit_direct,
        d.rel_entropy_12_0 - d.rel_entropy_12_t + info_change + extra,
    )];
    if let Some(er) = e_r {
        out.push(eval(
            comp_id,
            d.total_deficit_direct + er,
            d.rel_entropy_12_0 + info_change + extra,
        ));
    }
    out
}

/// Cumulative integral of uniformly spaced samples at every grid point.
///
/// Each interval uses the cubic through its four nearest samples, so the
/// error is O(h^4) even for currents oscillating at the Bohr frequencies.
pub fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len().saturating_sub(1);
    let mut out = vec![0.0; f.len()];
    for k in 0..n {
        let piece = if n < 3 {
            0.5 * h * (f[k] + f[k + 1])
        } else if k == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k == n - 1 {
            h / 24.0 * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
        } else {
            h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k + 1] = out[k] + piece;
    }
    out
}

/// Fixed ingredients of the two-qubit problem.
#[derive(Clone, Debug)]
pub struct PairModel {
    pub system: SystemSpec,
    pub bath: BathSpec,
    pub gen12: Generator,
    pub h12: CMat,
    pub thermal12: DensityMatrix,
    /// `H_i` as 2x2 matrices.
    pub h_local: [CMat; 2],
    /// Gibbs states of the lone qubits.
    pub thermal_lone: [DensityMatrix; 2],
    /// Marginals of the global Gibbs state.
    pub thermal_reduced: [DensityMatrix; 2],
    pub lone_gen: [Generator; 2],
}

impl PairModel {
    pub fn new(system: &SystemSpec, bath: &BathSpec) -> Result<Self> {
        let gen12 = Generator::global(system, bath)?;
        let h12 = gen12.hamiltonian().clone();
        let thermal12 = thermal_state(&h12, bath.temperature)?;
        let h_local = [qubit_hamiltonian(system.omega1), qubit_hamiltonian(system.omega2)];
        let thermal_lone = [
            thermal_state(&h_local[0], bath.temperature)?,
            thermal_state(&h_local[1], bath.temperature)?,
        ];
        let thermal_reduced = [
            partial_trace(&thermal12, &[2, 2], &[0])?,
            partial_trace(&thermal12, &[2, 2], &[1])?,
        ];
        let lone_gen = [
            lone_qubit_generator(system.omega1, bath)?,
            lone_qubit_generator(system.omega2, bath)?,
        ];
        Ok(PairModel {
            system: *system,
            bath: *bath,
            gen12,
            h12,
            thermal12,
            h_local,
            thermal_lone,
            thermal_reduced,
            lone_gen,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.bath.temperature
    }

    /// `12 / gamma_min`, long enough to reach the steady-state plateau.
    pub fn default_t_end(&self) -> f64 {
        12.0 / self.gen12.min_rate().unwrap_or(1.0)
    }
}

/// Thermodynamic analysis of one run in one local picture.
#[derive(Clone, Debug)]
pub struct ThermoRun {
    pub mode: LocalMode,
    pub dt: f64,
    pub global: Trajectory,
    /// Lone-qubit trajectories, or marginals of `global`, per qubit.
    pub local: [Trajectory; 2],
    pub samples: Vec<ThermoSample>,
    /// Quadrature of the heat current deficit at each recorded point.
    pub integrated_deficit: Vec<f64>,
}

/// Evolve `rho12(0)` and evaluate entropies, currents and EPRs in one picture.
///
/// The deficit is integrated over every integrator step rather than over the
/// recorded samples only.
pub fn run_thermo(
    model: &PairModel,
    rho0: &DensityMatrix,
    mode: LocalMode,
    t_end: f64,
    stepping: Stepping,
) -> Result<ThermoRun> {
    if rho0.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "initial state must be a two-qubit state".into(),
        ));
    }
    let n_steps = stepping.steps_for(t_end);
    let temp = model.temperature();
    let reduced = mode == LocalMode::NonMarkovianReduced;

    let h1 = embed(&model.h_local[0], 1);
    let h2 = embed(&model.h_local[1], 2);
    let mut currents: [Vec<f64>; 3] = [(); 3].map(|_| Vec::with_capacity(n_steps + 1));
    let global = evolve_observed(&model.gen12, rho0, t_end, stepping, |_, _, rho| {
        let d = model.gen12.apply_raw(rho);
        currents[0].push(heat_current(&model.h12, &d, temp));
        if reduced {
            currents[1].push(heat_current(&h1, &d, temp));
            currents[2].push(heat_current(&h2, &d, temp));
        }
    })?;

    let local: [Trajectory; 2] = if reduced {
        [
            global.partial_trace(&[2, 2], &[0])?,
            global.partial_trace(&[2, 2], &[1])?,
        ]
    } else {
        let mut lone = Vec::with_capacity(2);
        for q in 0..2 {
            let gen = &model.lone_gen[q];
            let h = &model.h_local[q];
            let rho_q0 = partial_trace(rho0, &[2, 2], &[q])?;
            let sink = &mut currents[q + 1];
            lone.push(evolve_observed(gen, &rho_q0, t_end, stepping, |_, _, rho| {
                sink.push(heat_current(h, &gen.apply_raw(rho), temp));
            })?);
        }
        let second = lone.pop().expect("two lone trajectories");
        let first = lone.pop().expect("two lone trajectories");
        [first, second]
    };

    let deficit_fine: Vec<f64> = (0..=n_steps)
        .map(|k| heat_current_deficit(currents[0][k], currents[1][k], currents[2][k]))
        .collect();
    let cumulative = cumulative_integral(&deficit_fine, stepping.dt);

    let mut samples = Vec::with_capacity(global.len());
    let mut integrated_deficit = Vec::with_capacity(global.len());
    for (k, &step) in global.steps.iter().enumerate() {
        let locals = [&local[0].states[k], &local[1].states[k]];
        let t = global.times[k];
        samples.push(sample_at(model, mode, t, &global.states[k], locals).map_err(|e| e.at_step(step, t))?);
        integrated_deficit.push(cumulative[step]);
    }

    Ok(ThermoRun {
        mode,
        dt: stepping.dt,
        global,
        local,
        samples,
        integrated_deficit,
    })
}

/// Evaluate every instantaneous quantity at one time. `local` holds the
/// lone-qubit states or the marginals of `rho12`, according to `mode`.
pub fn sample_at(
    model: &PairModel,
    mode: LocalMode,
    time: f64,
    rho12: &DensityMatrix,
    local: [&DensityMatrix; 2],
) -> Result<ThermoSample> {
    let temp = model.temperature();
    let d12 = apply_generator(&model.gen12, rho12)?;
    let mut s = [0.0; 2];
    let mut j = [0.0; 2];
    let mut sigma = [0.0; 2];
    let mut rates = [entropy_rate(rho12, &d12), 0.0, 0.0];
    for q in 0..2 {
        let rho_q = local[q];
        let h = &model.h_local[q];
        s[q] = vn_entropy(rho_q);
        match mode {
            LocalMode::LoneQubit => {
                let d = apply_generator(&model.lone_gen[q], rho_q)?;
                j[q] = heat_current(h, &d, temp);
                sigma[q] = epr_markov(rho_q, &model.thermal_lone[q], &d)?;
                rates[q + 1] = entropy_rate(rho_q, &d);
            }
            LocalMode::NonMarkovianReduced => {
                let d = partial_trace_mat(&d12, &[2, 2], &[q])?;
                j[q] = heat_current(h, &d, temp);
                sigma[q] = epr_local_nm(rho_q, &model.thermal_reduced[q], &d, h, temp)?;
                rates[q + 1] = entropy_rate(rho_q, &d);
            }
        }
    }
    Ok(ThermoSample {
        time,
        s_global: vn_entropy(rho12),
        s_1: s[0],
        s_2: s[1],
        j_global: heat_current(&model.h12, &d12, temp),
        j_1: j[0],
        j_2: j[1],
        sigma_global: epr_markov(rho12, &model.thermal12, &d12)?,
        sigma_1: sigma[0],
        sigma_2: sigma[1],
        entropy_rates: rates,
        mode,
    })
}

/// `χ = S(ρ(0)||th) + S(ρ(0)) - S(ρ(t)||th) - S(ρ(t))`
fn chi(rho_0: &DensityMatrix, rho_t: &DensityMatrix, th: &DensityMatrix) -> Result<f64> {
    Ok(rel_entropy(rho_0, th)? + vn_entropy(rho_0) - rel_entropy(rho_t, th)? - vn_entropy(rho_t))
}

/// Deficit bookkeeping at recorded point `k` of a run.
pub fn total_deficit(model: &PairModel, run: &ThermoRun, k: usize) -> Result<DeficitReport> {
    let g0 = &run.global.states[0];
    let gt = &run.global.states[k];
    let chi_12 = chi(g0, gt, &model.thermal12)?;
    let rel_entropy_12_0 = rel_entropy(g0, &model.thermal12)?;
    let rel_entropy_12_t = rel_entropy(gt, &model.thermal12)?;
    let l0 = [&run.local[0].states[0], &run.local[1].states[0]];
    let lt = [&run.local[0].states[k], &run.local[1].states[k]];
    let mutual_info_0 = vn_entropy(l0[0]) + vn_entropy(l0[1]) - vn_entropy(g0);
    let mutual_info_t = vn_entropy(lt[0]) + vn_entropy(lt[1]) - vn_entropy(gt);

    let refs = match run.mode {
        LocalMode::LoneQubit => &model.thermal_lone,
        LocalMode::NonMarkovianReduced => &model.thermal_reduced,
    };
    let chi_1 = chi(l0[0], lt[0], &refs[0])?;
    let chi_2 = chi(l0[1], lt[1], &refs[1])?;
    let mut rel_drop = 0.0;
    for q in 0..2 {
        rel_drop += rel_entropy(l0[q], &refs[q])? - rel_entropy(lt[q], &refs[q])?;
    }
    let markovian_like_part = chi_12 - chi_1 - chi_2;
    let nm_part = match run.mode {
        LocalMode::LoneQubit => 0.0,
        LocalMode::NonMarkovianReduced => {
            let mut acc = 0.0;
            for q in 0..2 {
                let mut w = model.h_local[q].scale(1.0 / model.temperature());
                w += &refs[q].log_on_support();
                let change = lt[q].as_mat() - l0[q].as_mat();
                acc += w.trace_product(&change).re;
            }
            acc
        }
    };
    Ok(DeficitReport {
        time: run.global.times[k],
        delta_j: run.samples[k].delta_j(),
        total_deficit_direct: run.integrated_deficit[k],
        total_deficit_chi: markovian_like_part + nm_part,
        markovian_like_part,
        nm_part,
        chi_12,
        chi_1,
        chi_2,
        mutual_info_0,
        mutual_info_t,
        b_nm: -rel_drop + nm_part,
        rel_entropy_12_0,
        rel_entropy_12_t,
    })
}

/// [`total_deficit`] at every recorded point.
pub fn deficit_series(model: &PairModel, run: &ThermoRun) -> Result<Vec<DeficitReport>> {
    (0..run.global.len()).map(|k| total_deficit(model, run, k)).collect()
}

/// Agreement test used for the two deficit routes: relative tolerance, or
/// absolute `1e-8` when the reference is near zero.
pub fn agrees(a: f64, b: f64, rel_tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 / rel_tol {
        (a - b).abs() <= 1e-8
    } else {
        (a - b).abs() <= rel_tol * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interaction;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;

    fn bath() -> BathSpec {
        BathSpec {
            temperature: 127.33,
            lambda: 1e-4,
        }
    }

    fn model(interaction: Interaction) -> PairModel {
        let sys = SystemSpec {
            omega1: 50.0,
            omega2: 55.0,
            interaction,
            coupling: 0.8,
            delta: 0.5,
        };
        PairModel::new(&sys, &bath()).unwrap()
    }

    fn phi_plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        DensityMatrix::from_ket(&[C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap()
    }

    fn mixed_state() -> DensityMatrix {
        let m = CMat::from_fn(4, |r, c| {
            if r == c {
                C64::new([0.4, 0.3, 0.2, 0.1][r], 0.0)
            } else if (r, c) == (0, 3) {
                C64::new(0.05, 0.02)
            } else if (r, c) == (3, 0) {
                C64::new(0.05, -0.02)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn gibbs_state_has_no_current_or_production() {
        let m = model(Interaction::Xyz);
        let d = apply_generator(&m.gen12, &m.thermal12).unwrap();
        assert_abs_diff_eq!(heat_current(&m.h12, &d, m.temperature()), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(epr_markov(&m.thermal12, &m.thermal12, &d).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn commutator_carries_no_heat() {
        // Tr[H [H, ρ]] = 0, so the current sees only the dissipator.
        let rho = mixed_state();
        for interaction in [Interaction::Ising, Interaction::Xy, Interaction::Xyz] {
            let m = model(interaction);
            let full = apply_generator(&m.gen12, &rho).unwrap();
            let diss = m.gen12.dissipator(rho.as_mat());
            let (a, b) = (heat_current(&m.h12, &full, 1.0), heat_current(&m.h12, &diss, 1.0));
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{interaction:?}: {a} vs {b}");
            assert!(a.abs() > 1e-8);
        }
    }

    #[test]
    fn markov_epr_is_minus_rate_of_relative_entropy() {
        let m = model(Interaction::Xy);
        let rho = mixed_state();
        let d = apply_generator(&m.gen12, &rho).unwrap();
        let sigma = epr_markov(&rho, &m.thermal12, &d).unwrap();
        let h = 1e-3;
        let rel_f = rel_entropy(&hop(&m.gen12, &rho, h), &m.thermal12).unwrap();
        let rel_b = rel_entropy(&hop(&m.gen12, &rho, -h), &m.thermal12).unwrap();
        let fd = -(rel_f - rel_b) / (2.0 * h);
        assert!((sigma - fd).abs() < 1e-5, "sigma {sigma} fd {fd}");
        assert!(sigma > 0.0);
    }

    /// Fine RK4 over a signed time span.
    fn hop(gen: &Generator, rho: &DensityMatrix, span: f64) -> DensityMatrix {
        let n = 200;
        let h = span / n as f64;
        let mut y = rho.as_mat().clone();
        for _ in 0..n {
            let k1 = gen.apply_raw(&y);
            let mut t = y.clone();
            t.add_scaled(C64::new(0.5 * h, 0.0), &k1);
            let k2 = gen.apply_raw(&t);
            let mut t = y.clone();
            t.add_scaled(C64::new(0.5 * h, 0.0), &k2);
            let k3 = gen.apply_raw(&t);
            let mut t = y.clone();
            t.add_scaled(C64::new(h, 0.0), &k3);
            let k4 = gen.apply_raw(&t);
            for (k, w) in [(k1, h / 6.0), (k2, h / 3.0), (k3, h / 3.0), (k4, h / 6.0)] {
                y.add_scaled(C64::new(w, 0.0), &k);
            }
        }
        DensityMatrix::clamp_psd(&y).0
    }

    #[test]
    fn balance_holds_analytically_in_every_picture() {
        let m = model(Interaction::Xyz);
        let rho = mixed_state();
        for mode in [LocalMode::LoneQubit, LocalMode::NonMarkovianReduced] {
            let r1 = partial_trace(&rho, &[2, 2], &[0]).unwrap();
            let r2 = partial_trace(&rho, &[2, 2], &[1]).unwrap();
            let s = sample_at(&m, mode, 0.0, &rho, [&r1, &r2]).unwrap();
            assert!(
                s.balance_residual_max() < 1e-12,
                "{mode:?}: {:?}",
                s.balance_residuals()
            );
        }
    }

    #[test]
    fn local_nm_epr_reduces_to_markov_form_for_product_reference() {
        // With a Gibbs reference of H_i itself the extra term is -ln Z Tr[dρ/dt] = 0.
        let m = model(Interaction::None);
        let rho = mixed_state();
        let r1 = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        let d1 = reduced_derivative_for_test(&m, &rho);
        let nm = epr_local_nm(&r1, &m.thermal_reduced[0], &d1, &m.h_local[0], m.temperature()).unwrap();
        let mk = epr_markov(&r1, &m.thermal_lone[0], &d1).unwrap();
        assert_abs_diff_eq!(nm, mk, epsilon = 1e-12);
    }

    fn reduced_derivative_for_test(m: &PairModel, rho: &DensityMatrix) -> CMat {
        crate::dynamics::reduced_derivative(&m.gen12, rho, 1).unwrap()
    }

    #[test]
    fn singular_reference_is_reported() {
        let rho = DensityMatrix::maximally_mixed(2);
        let pure = DensityMatrix::from_ket(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let d = CMat::zeros(2);
        assert_eq!(epr_markov(&rho, &pure, &d), Err(Error::DivergentSupport));
    }

    #[test]
    fn mutual_information_examples() {
        assert_abs_diff_eq!(
            mutual_information(&phi_plus()).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-10
        );
        let prod = DensityMatrix::new(crate::qmat::kron(
            &CMat::from_real_diag(&[0.7, 0.3]),
            &CMat::from_real_diag(&[0.4, 0.6]),
        ))
        .unwrap();
        assert_abs_diff_eq!(mutual_information(&prod).unwrap(), 0.0, epsilon = 1e-12);
        assert!(mutual_information(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn quadrature_is_exact_on_cubics_and_fourth_order() {
        let h = 0.1;
        let f: Vec<f64> = (0..=20)
            .map(|k| {
                let x = k as f64 * h;
                x * x * x - 2.0 * x + 1.0
            })
            .collect();
        let cum = cumulative_integral(&f, h);
        for (k, v) in cum.iter().enumerate() {
            let x = k as f64 * h;
            assert_abs_diff_eq!(*v, x.powi(4) / 4.0 - x * x + x, epsilon = 1e-12);
        }
        let err = |n: usize| {
            let h = std::f64::consts::PI / n as f64;
            let f: Vec<f64> = (0..=n).map(|k| (k as f64 * h).sin()).collect();
            (cumulative_integral(&f, h)[n] - 2.0).abs()
        };
        let order = (err(40) / err(80)).log2();
        assert!((3.5..4.6).contains(&order), "order {order}");
        assert_abs_diff_eq!(cumulative_integral(&[1.0, 3.0], 0.5)[1], 1.0);
    }

    #[test]
    fn deficits_vanish_at_start_and_routes_agree() {
        let m = model(Interaction::Ising);
        for mode in [LocalMode::LoneQubit, LocalMode::NonMarkovianReduced] {
            let run = run_thermo(&m, &phi_plus(), mode, 5.0, Stepping::new(1e-3, 500)).unwrap();
            let d0 = total_deficit(&m, &run, 0).unwrap();
            for v in [
                d0.total_deficit_direct,
                d0.total_deficit_chi,
                d0.markovian_like_part,
                d0.nm_part,
                d0.b_nm,
            ] {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
            for d in deficit_series(&m, &run).unwrap() {
                assert!(
                    agrees(d.total_deficit_direct, d.total_deficit_chi, 1e-4),
                    "{mode:?} {d:?}"
                );
                assert_abs_diff_eq!(d.total_deficit_chi, d.markovian_like_part + d.nm_part, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn lone_mode_has_no_nm_part() {
        let m = model(Interaction::Xyz);
        let run = run_thermo(&m, &phi_plus(), LocalMode::LoneQubit, 2.0, Stepping::new(1e-3, 1000)).unwrap();
        let d = total_deficit(&m, &run, run.global.len() - 1).unwrap();
        assert_eq!(d.nm_part, 0.0);
        assert_eq!(run.integrated_deficit.len(), run.samples.len());
    }

    #[test]
    fn bound_report_labels_and_slack() {
        let d = DeficitReport {
            time: 1.0,
            delta_j: 0.0,
            total_deficit_direct: 0.1,
            total_deficit_chi: 0.1,
            markovian_like_part: 0.1,
            nm_part: 0.0,
            chi_12: 0.0,
            chi_1: 0.0,
            chi_2: 0.0,
            mutual_info_0: 0.5,
            mutual_info_t: 0.2,
            b_nm: -0.05,
            rel_entropy_12_0: 1.0,
            rel_entropy_12_t: 0.3,
        };
        let lone = bound_report(&d, LocalMode::LoneQubit, Some(0.1));
        assert_eq!(lone.len(), 2);
        assert_eq!(lone[0].id.label(), "deficit_upper");
        assert_abs_diff_eq!(lone[0].rhs, 0.7 - 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(lone[1].lhs, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(lone[1].slack, 1.0 - 0.3 - 0.2, epsilon = 1e-15);
        let red = bound_report(&d, LocalMode::NonMarkovianReduced, None);
        assert_eq!(red.len(), 1);
        assert_eq!(red[0].id, BoundId::DeficitUpperNm);
        assert_abs_diff_eq!(red[0].rhs, 0.4 - 0.05, epsilon = 1e-15);
    }

    #[test]
    fn agreement_rule() {
        assert!(agrees(1.0, 1.00005, 1e-4));
        assert!(!agrees(1.0, 1.001, 1e-4));
        assert!(agrees(1e-10, -1e-10, 1e-4));
        assert!(!agrees(1e-6, 3e-6, 1e-4));
    }
}
