//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qthermo::dynamics::{apply_generator, Generator};
use qthermo::model::{BathSpec, Interaction, SystemSpec};
use qthermo::qmat::{kron_ket, partial_trace_mat, vn_entropy, CMat, DensityMatrix};
use qthermo::thermo::{LocalMode, PairModel, ThermoSample};
use rand::Rng;
use rand_distr::StandardNormal;

pub const OMEGA1: f64 = 50.0;
pub const OMEGA2: f64 = 55.0;
pub const COUPLING: f64 = 0.8;
pub const DELTA: f64 = 0.5;
pub const TEMPERATURE: f64 = 127.33;
pub const LAMBDA: f64 = 1e-4;

pub const ALL_MODELS: [Interaction; 4] = [Interaction::None, Interaction::Ising, Interaction::Xy, Interaction::Xyz];

pub fn system(interaction: Interaction) -> SystemSpec {
    SystemSpec {
        omega1: OMEGA1,
        omega2: OMEGA2,
        interaction,
        coupling: COUPLING,
        delta: DELTA,
    }
}

pub fn bath() -> BathSpec {
    BathSpec {
        temperature: TEMPERATURE,
        lambda: LAMBDA,
    }
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn ket_state(amps: &[C64]) -> DensityMatrix {
    DensityMatrix::from_ket(amps).unwrap()
}

pub fn phi_plus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket_state(&[c(s), c(0.0), c(0.0), c(s)])
}

/// Computational basis product state `|ab>`.
pub fn basis_state(a: usize, b: usize) -> DensityMatrix {
    let mut amps = vec![c(0.0); 4];
    amps[2 * a + b] = c(1.0);
    ket_state(&amps)
}

/// Classical RK4 over `span` (either sign) in `substeps` steps, no clamping.
/// Used only as a fine-grained reference, independent of the library
/// integrator.
pub fn reference_propagate(gen: &Generator, rho: &CMat, span: f64, substeps: usize) -> CMat {
    let h = C64::new(span / substeps as f64, 0.0);
    let half = h * 0.5;
    let mut y = rho.clone();
    for _ in 0..substeps {
        let k1 = apply_generator(gen, &y).unwrap();
        let mut t = y.clone();
        t.add_scaled(half, &k1);
        let k2 = apply_generator(gen, &t).unwrap();
        let mut t = y.clone();
        t.add_scaled(half, &k2);
        let k3 = apply_generator(gen, &t).unwrap();
        let mut t = y.clone();
        t.add_scaled(h, &k3);
        let k4 = apply_generator(gen, &t).unwrap();
        y.add_scaled(h / 6.0, &k1);
        y.add_scaled(h / 3.0, &k2);
        y.add_scaled(h / 3.0, &k3);
        y.add_scaled(h / 6.0, &k4);
    }
    y
}

fn entropy_of(m: &CMat) -> f64 {
    vn_entropy(&DensityMatrix::clamp_psd(m).0)
}

/// Five-point centered derivative of `f` at 0 from values at -2h, -h, h, 2h.
pub fn centered5(f: [f64; 4], h: f64) -> f64 {
    (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
}

/// Balance residuals `|ΔS/Δt + J - σ|` for (pair, qubit 1, qubit 2), with the
/// entropy differenced at spacing `h` around the given states. The stencil
/// points come from a fine reference propagation of the states themselves, so
/// the check isolates the balance identity from the integrator error of the
/// trajectory that produced them.
pub fn fd_balance_residuals(
    model: &PairModel,
    sample: &ThermoSample,
    rho12: &DensityMatrix,
    lone: [&DensityMatrix; 2],
    h: f64,
) -> [f64; 3] {
    let global = stencil_states(&model.gen12, rho12.as_mat(), h);
    let s12 = global.clone().map(|m| entropy_of(&m));
    let (s1, s2) = match sample.mode {
        LocalMode::LoneQubit => (
            stencil_states(&model.lone_gen[0], lone[0].as_mat(), h).map(|m| entropy_of(&m)),
            stencil_states(&model.lone_gen[1], lone[1].as_mat(), h).map(|m| entropy_of(&m)),
        ),
        LocalMode::NonMarkovianReduced => {
            let marginal = |q: usize| {
                global
                    .clone()
                    .map(|m| entropy_of(&partial_trace_mat(&m, &[2, 2], &[q]).unwrap()))
            };
            (marginal(0), marginal(1))
        }
    };
    [
        (centered5(s12, h) + sample.j_global - sample.sigma_global).abs(),
        (centered5(s1, h) + sample.j_1 - sample.sigma_1).abs(),
        (centered5(s2, h) + sample.j_2 - sample.sigma_2).abs(),
    ]
}

/// States at offsets -2h, -h, h, 2h from `rho` by fine reference propagation.
pub fn stencil_states(gen: &Generator, rho: &CMat, h: f64) -> [CMat; 4] {
    const SUB: usize = 20;
    [-2.0, -1.0, 1.0, 2.0].map(|o: f64| reference_propagate(gen, rho, o * h, SUB * o.abs() as usize))
}

/// Ginibre-random full-rank state of dimension `dim`.
pub fn random_mixed_state(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = CMat::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = g.matmul_adj(&g);
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
}

/// Mixture of `n` random pure product states, separable by construction.
pub fn random_product_mixture(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let mut acc = CMat::zeros(4);
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a = qthermo::witness::haar_ket(2, rng);
        let b = qthermo::witness::haar_ket(2, rng);
        let ket = kron_ket(&a, &b);
        acc.add_scaled(c(w / total), &CMat::outer(&ket, &ket));
    }
    DensityMatrix::new(acc).unwrap()
}

/// Bell-diagonal state with weights on (φ+, φ-, ψ+, ψ-).
pub fn bell_diagonal(p: [f64; 4]) -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0);
    let bells = [
        [c(s), z, z, c(s)],
        [c(s), z, z, c(-s)],
        [z, c(s), c(s), z],
        [z, c(s), c(-s), z],
    ];
    let mut acc = CMat::zeros(4);
    for (w, k) in p.iter().zip(&bells) {
        acc.add_scaled(c(*w), &CMat::outer(k, k));
    }
    DensityMatrix::new(acc).unwrap()
}
