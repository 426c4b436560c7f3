//! Non-Markovianity witnesses and two-qubit entanglement measures.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{evolve, evolve_with_ancilla, Stepping, Trajectory};
use crate::error::{Error, Result};
use crate::model::pauli;
use crate::qmat::{
    herm_eig, kron, kron_ket, partial_trace, partial_transpose, rel_entropy, singular_values, trace_distance,
    vn_entropy, CMat, DensityMatrix,
};
use crate::thermo::{LocalMode, PairModel};

/// Witness values above this count as non-Markovian.
pub const WITNESS_EPS: f64 = 1e-6;
/// Partial-transpose eigenvalues down to `-PPT_TOL` count as non-negative.
pub const PPT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Blp,
    Rhp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    MarkovianConsistent,
    NonMarkovian,
}

impl Verdict {
    fn from_value(value: f64) -> Self {
        if value > WITNESS_EPS {
            Verdict::NonMarkovian
        } else {
            Verdict::MarkovianConsistent
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub measure: Measure,
    pub value: f64,
    /// `(t, D(t))` for BLP, `(t, E(t))` for RHP.
    pub series: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

fn total_rise(series: &[(f64, f64)]) -> f64 {
    series.windows(2).map(|w| (w[1].1 - w[0].1).max(0.0)).sum()
}

/// Accumulated increase of the trace distance between two single-qubit
/// trajectories on the same time grid.
pub fn blp_accumulate(a: &Trajectory, b: &Trajectory) -> Result<WitnessReport> {
    if a.times != b.times {
        return Err(Error::DimensionMismatch(
            "BLP trajectories have different time grids".into(),
        ));
    }
    if a.states.iter().zip(&b.states).any(|(x, y)| x.dim() != y.dim()) {
        return Err(Error::DimensionMismatch(
            "BLP trajectories act on different dimensions".into(),
        ));
    }
    let series: Vec<(f64, f64)> = a
        .times
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .map(|(&t, (x, y))| (t, trace_distance(x, y)))
        .collect();
    let value = total_rise(&series);
    Ok(WitnessReport {
        measure: Measure::Blp,
        value,
        series,
        verdict: Verdict::from_value(value),
    })
}

/// Qubit-1 trajectory in the given picture. A 2x2 input is a qubit-1 state
/// and only makes sense for lone-qubit dynamics.
fn qubit1_trajectory(
    model: &PairModel,
    mode: LocalMode,
    rho: &DensityMatrix,
    t_end: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    match (mode, rho.dim()) {
        (LocalMode::LoneQubit, 2) => evolve(&model.lone_gen[0], rho, t_end, stepping),
        (LocalMode::LoneQubit, 4) => {
            let r1 = partial_trace(rho, &[2, 2], &[0])?;
            evolve(&model.lone_gen[0], &r1, t_end, stepping)
        }
        (LocalMode::NonMarkovianReduced, 4) => evolve(&model.gen12, rho, t_end, stepping)?.partial_trace(&[2, 2], &[0]),
        (_, d) => Err(Error::DimensionMismatch(format!(
            "BLP initial state of dimension {d} does not fit the {} picture",
            mode.label()
        ))),
    }
}

/// BLP value for one pair of initial states, measured on qubit 1.
pub fn blp_pair(
    model: &PairModel,
    mode: LocalMode,
    a: &DensityMatrix,
    b: &DensityMatrix,
    t_end: f64,
    stepping: Stepping,
) -> Result<WitnessReport> {
    let ta = qubit1_trajectory(model, mode, a, t_end, stepping)?;
    let tb = qubit1_trajectory(model, mode, b, t_end, stepping)?;
    blp_accumulate(&ta, &tb)
}

/// Haar-random pure state of dimension `dim`.
pub fn haar_ket(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

#[derive(Clone, Debug)]
pub struct BlpSearch {
    pub best: WitnessReport,
    pub best_index: usize,
    pub best_pair: [Vec<C64>; 2],
    /// BLP value of every sampled pair, in sample order.
    pub values: Vec<f64>,
}

/// Sample `n_samples` Haar-random pure two-qubit pairs and keep the one with
/// the largest BLP value. Sample `i` draws from its own stream of `seed`, so
/// results do not depend on thread scheduling.
pub fn blp_search(
    model: &PairModel,
    mode: LocalMode,
    t_end: f64,
    stepping: Stepping,
    n_samples: usize,
    seed: u64,
) -> Result<BlpSearch> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be >= 1"));
    }
    let results: Vec<(WitnessReport, [Vec<C64>; 2])> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let pair = [haar_ket(4, &mut rng), haar_ket(4, &mut rng)];
            let a = DensityMatrix::from_ket(&pair[0])?;
            let b = DensityMatrix::from_ket(&pair[1])?;
            Ok((blp_pair(model, mode, &a, &b, t_end, stepping)?, pair))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = results.iter().map(|(r, _)| r.value).collect();
    let best_index = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });
    let (best, best_pair) = results.into_iter().nth(best_index).expect("n_samples >= 1");
    Ok(BlpSearch {
        best,
        best_index,
        best_pair,
        values,
    })
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch("concurrence needs a two-qubit state".into()));
    }
    // With ρ = Ψ Ψ†, the square roots of spec(ρ ρ~) are the singular values
    // of Ψ^T (Y⊗Y) Ψ. Working with them directly avoids square roots of
    // eigenvalues at the rounding floor.
    let yy = kron(&pauli::y(), &pauli::y());
    let spec = rho.clamped_spectrum();
    let psi = CMat::from_fn(4, |r, k| spec.eigenvectors[(r, k)] * spec.eigenvalues[k].sqrt());
    let b = psi.transpose().matmul(&yy).matmul(&psi);
    let l = singular_values(&b);
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Which entanglement monotone the RHP witness tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntanglementMeasure {
    Concurrence,
    RelEntropy,
}

/// RHP witness from an entanglement series: `Σ|ΔE| - (E(t_0) - E(t_end))`,
/// evaluated as twice the accumulated rise so that a non-increasing series
/// gives exactly zero.
pub fn rhp_from_series(series: Vec<(f64, f64)>) -> WitnessReport {
    let value = 2.0 * total_rise(&series);
    WitnessReport {
        measure: Measure::Rhp,
        value,
        series,
        verdict: Verdict::from_value(value),
    }
}

/// RHP witness on the (qubit 1, ancilla) concurrence. Takes an 8x8
/// (qubit 1, qubit 2, ancilla) trajectory, or a 4x4 (qubit 1, ancilla) one.
pub fn rhp_measure(traj: &Trajectory) -> Result<WitnessReport> {
    rhp_measure_with(traj, EntanglementMeasure::Concurrence, &ErOptions::default())
}

pub fn rhp_measure_with(traj: &Trajectory, measure: EntanglementMeasure, er: &ErOptions) -> Result<WitnessReport> {
    let marginal = |rho: &DensityMatrix| match rho.dim() {
        8 => partial_trace(rho, &[2, 2, 2], &[0, 2]),
        4 => Ok(rho.clone()),
        d => Err(Error::DimensionMismatch(format!(
            "RHP needs a 4x4 or 8x8 trajectory, got {d}x{d}"
        ))),
    };
    let mut series = Vec::with_capacity(traj.len());
    let mut warm: Option<Vec<f64>> = None;
    for (&t, rho) in traj.times.iter().zip(&traj.states) {
        let r = marginal(rho)?;
        let e = match measure {
            EntanglementMeasure::Concurrence => concurrence(&r)?,
            EntanglementMeasure::RelEntropy => {
                if ppt_check(&r)?.separable {
                    0.0
                } else {
                    let opts = ErOptions {
                        warm_start: warm.clone(),
                        ..er.clone()
                    };
                    let res = rel_entropy_entanglement(&r, &opts)?;
                    warm = Some(res.params);
                    res.value
                }
            }
        };
        series.push((t, e));
    }
    Ok(rhp_from_series(series))
}

/// Evolve a (qubit 1, qubit 2, ancilla) state in the given picture and
/// return the trajectory that [`rhp_measure`] expects: the full 8x8 one for
/// reduced dynamics, the (qubit 1, ancilla) one under the lone-qubit
/// generator otherwise.
pub fn rhp_trajectory(
    model: &PairModel,
    mode: LocalMode,
    rho_12a: &DensityMatrix,
    t_end: f64,
    stepping: Stepping,
) -> Result<Trajectory> {
    if rho_12a.dim() != 8 {
        return Err(Error::DimensionMismatch(
            "RHP initial state must be (qubit 1, qubit 2, ancilla)".into(),
        ));
    }
    match mode {
        LocalMode::NonMarkovianReduced => evolve_with_ancilla(&model.gen12, rho_12a, t_end, stepping),
        LocalMode::LoneQubit => {
            let r1a = partial_trace(rho_12a, &[2, 2, 2], &[0, 2])?;
            evolve_with_ancilla(&model.lone_gen[0], &r1a, t_end, stepping)
        }
    }
}

/// `|φ+>` on (qubit 1, ancilla) with qubit 2 in `|0>`, ordered (1, 2, A).
pub fn rhp_default_state() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    // index = 4 q1 + 2 q2 + a
    amps[0] = C64::new(s, 0.0);
    amps[5] = C64::new(s, 0.0);
    DensityMatrix::from_ket(&amps).expect("normalized")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PptReport {
    pub separable: bool,
    pub min_pt_eigenvalue: f64,
}

/// Peres–Horodecki test, exact for two qubits.
pub fn ppt_check(rho: &DensityMatrix) -> Result<PptReport> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch("PPT check needs a two-qubit state".into()));
    }
    let pt = partial_transpose(rho, &[2, 2], 1)?;
    let min = herm_eig(&pt)?.min();
    Ok(PptReport {
        separable: min >= -PPT_TOL,
        min_pt_eigenvalue: min,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErOptions {
    pub n_product_terms: usize,
    pub n_restarts: usize,
    pub seed: u64,
    pub max_iters: u64,
    /// Parameters of a previous optimum, tried as an extra starting point.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for ErOptions {
    fn default() -> Self {
        ErOptions {
            n_product_terms: 8,
            n_restarts: 16,
            seed: 0,
            max_iters: 400,
            warm_start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ErResult {
    pub value: f64,
    pub sigma_star: DensityMatrix,
    /// Optimizer coordinates of `sigma_star`: per term the Bloch angles
    /// `(θ_a, φ_a, θ_b, φ_b)`, then one softmax logit per term.
    pub params: Vec<f64>,
}

fn bloch_ket(theta: f64, phi: f64) -> [C64; 2] {
    [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// Product-state mixture encoded by `params`.
pub fn separable_from_params(params: &[f64], n_terms: usize) -> CMat {
    let logits = &params[4 * n_terms..5 * n_terms];
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let norm: f64 = w.iter().sum();
    let mut out = CMat::zeros(4);
    for k in 0..n_terms {
        let p = &params[4 * k..4 * k + 4];
        let v = kron_ket(&bloch_ket(p[0], p[1]), &bloch_ket(p[2], p[3]));
        out.add_scaled(C64::new(w[k] / norm, 0.0), &CMat::outer(&v, &v));
    }
    out
}

struct ErObjective<'a> {
    rho: &'a DensityMatrix,
    neg_entropy: f64,
    n_terms: usize,
}

impl ErObjective<'_> {
    fn value(&self, p: &[f64]) -> std::result::Result<f64, argmin::core::Error> {
        let sigma = separable_from_params(p, self.n_terms);
        let spec = herm_eig(&sigma).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        let ln_sigma = spec.map(|l| l.max(f64::MIN_POSITIVE).ln());
        Ok(self.neg_entropy - self.rho.trace_product(&ln_sigma).re)
    }
}

impl CostFunction for ErObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.value(p)
    }
}

impl Gradient for ErObjective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        const H: f64 = 1e-4;
        let mut x = p.clone();
        let mut g = vec![0.0; p.len()];
        for i in 0..p.len() {
            x[i] = p[i] + H;
            let up = self.value(&x)?;
            x[i] = p[i] - H;
            let down = self.value(&x)?;
            x[i] = p[i];
            g[i] = (up - down) / (2.0 * H);
        }
        Ok(g)
    }
}

fn random_params(n_terms: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p = Vec::with_capacity(5 * n_terms);
    for _ in 0..n_terms {
        p.push(rng.random::<f64>() * std::f64::consts::PI);
        p.push(rng.random::<f64>() * std::f64::consts::TAU);
        p.push(rng.random::<f64>() * std::f64::consts::PI);
        p.push(rng.random::<f64>() * std::f64::consts::TAU);
    }
    p.extend((0..n_terms).map(|_| rng.random::<f64>() - 0.5));
    p
}

fn local_descent(obj: &ErObjective<'_>, x0: Vec<f64>, max_iters: u64) -> (f64, Vec<f64>) {
    let n = x0.len();
    let start_cost = obj.value(&x0).unwrap_or(f64::INFINITY);
    let inv_hessian: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new())
        .with_tolerance_cost(1e-14)
        .expect("valid tolerance");
    let run = Executor::new(obj.clone_ref(), solver)
        .configure(|s| s.param(x0.clone()).inv_hessian(inv_hessian).max_iters(max_iters))
        .run();
    match run {
        Ok(res) => {
            let state = res.state();
            match state.get_best_param() {
                Some(p) if state.get_best_cost() <= start_cost => (state.get_best_cost(), p.clone()),
                _ => (start_cost, x0),
            }
        }
        Err(_) => (start_cost, x0),
    }
}

impl<'a> ErObjective<'a> {
    fn clone_ref(&self) -> ErObjective<'a> {
        ErObjective {
            rho: self.rho,
            neg_entropy: self.neg_entropy,
            n_terms: self.n_terms,
        }
    }
}

/// Relative entropy of entanglement by multi-start local descent over
/// mixtures of `n_product_terms` pure product states. The result is an
/// upper bound on the true minimum; restarts make it tight in practice.
pub fn rel_entropy_entanglement(rho: &DensityMatrix, opts: &ErOptions) -> Result<ErResult> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch("E_R needs a two-qubit state".into()));
    }
    if opts.n_product_terms < 4 {
        return Err(Error::param("n_product_terms", "must be >= 4"));
    }
    if opts.n_restarts == 0 {
        return Err(Error::param("n_restarts", "must be >= 1"));
    }
    let n = opts.n_product_terms;
    let obj = ErObjective {
        rho,
        neg_entropy: -vn_entropy(rho),
        n_terms: n,
    };
    let mut starts: Vec<Vec<f64>> = (0..opts.n_restarts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            random_params(n, &mut rng)
        })
        .collect();
    if let Some(w) = &opts.warm_start {
        if w.len() != 5 * n {
            return Err(Error::param("warm_start", format!("expected {} parameters", 5 * n)));
        }
        starts.insert(0, w.clone());
    }
    let results: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|x0| local_descent(&obj, x0, opts.max_iters))
        .collect();
    let (value, params) = results
        .into_iter()
        .reduce(|best, r| if r.0 < best.0 { r } else { best })
        .expect("at least one restart");
    let sigma_star = DensityMatrix::clamp_psd(&separable_from_params(&params, n)).0;
    Ok(ErResult {
        value: value.max(0.0),
        sigma_star,
        params,
    })
}

/// E_R at each state of a sequence, e.g. along a trajectory. PPT states get
/// exactly zero. After the first entangled state, each optimization starts
/// from the previous optimum plus a single fresh restart. `feasible` is an
/// optional separable state whose relative entropy caps the estimate.
pub fn er_series(states: &[DensityMatrix], feasible: Option<&DensityMatrix>, opts: &ErOptions) -> Result<Vec<f64>> {
    if let Some(f) = feasible {
        if !ppt_check(f)?.separable {
            return Err(Error::param("feasible", "reference state is entangled"));
        }
    }
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(states.len());
    for rho in states {
        if ppt_check(rho)?.separable {
            out.push(0.0);
            continue;
        }
        let o = match &warm {
            Some(w) => ErOptions {
                n_restarts: 1,
                warm_start: Some(w.clone()),
                ..opts.clone()
            },
            None => opts.clone(),
        };
        let res = rel_entropy_entanglement(rho, &o)?;
        let mut value = res.value;
        warm = Some(res.params);
        if let Some(f) = feasible {
            match rel_entropy(rho, f) {
                Ok(cap) => value = value.min(cap),
                Err(Error::DivergentSupport) => {}
                Err(e) => return Err(e),
            }
        }
        out.push(value);
    }
    Ok(out)
}
