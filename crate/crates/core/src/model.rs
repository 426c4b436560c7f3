//! System Hamiltonians, eigenoperator decomposition of the bath coupling,
//! Ohmic rates and Gibbs states.
//!
//! Units: hbar = k_B = 1 and every frequency is measured in the reference
//! frequency, so energies, rates and temperatures are plain numbers.
//!
//! Basis convention for each qubit: `|0>` is the excited state (energy
//! `+omega/2`), `|1>` the ground state, so `sigma_z = diag(1, -1)` and the
//! lowering operator is `sigma_minus = |1><0|`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{commutator, herm_eig, kron, CMat, DensityMatrix};

pub mod pauli {
    use super::*;

    fn m(a: [[C64; 2]; 2]) -> CMat {
        CMat::from_fn(2, |r, c| a[r][c])
    }

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn x() -> CMat {
        m([[O, ONE], [ONE, O]])
    }

    pub fn y() -> CMat {
        m([[O, -I], [I, O]])
    }

    pub fn z() -> CMat {
        m([[ONE, O], [O, -ONE]])
    }

    /// `|0><1|`: raises the energy.
    pub fn plus() -> CMat {
        m([[O, ONE], [O, O]])
    }

    /// `|1><0|`: lowers the energy.
    pub fn minus() -> CMat {
        m([[O, O], [ONE, O]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    None,
    Ising,
    Xy,
    Xyz,
}

impl std::str::FromStr for Interaction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Interaction::None),
            "ising" => Ok(Interaction::Ising),
            "xy" => Ok(Interaction::Xy),
            "xyz" => Ok(Interaction::Xyz),
            other => Err(Error::param("interaction", format!("unknown interaction `{other}`"))),
        }
    }
}

/// Two-qubit system: splittings, interaction type and couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega1: f64,
    pub omega2: f64,
    pub interaction: Interaction,
    /// `J_z` for Ising, `J` for XY and XYZ.
    pub coupling: f64,
    /// Anisotropy of the XY part: `J_x = J(1 + delta)`, `J_y = J(1 - delta)`.
    pub delta: f64,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {w}")));
            }
        }
        if !self.coupling.is_finite() {
            return Err(Error::param("coupling", "must be finite"));
        }
        if !(-1.0..=1.0).contains(&self.delta) {
            return Err(Error::param(
                "delta",
                format!("must lie in [-1, 1], got {}", self.delta),
            ));
        }
        Ok(())
    }

    pub fn omega(&self, qubit: usize) -> f64 {
        match qubit {
            1 => self.omega1,
            2 => self.omega2,
            _ => panic!("qubit index must be 1 or 2"),
        }
    }

    /// Same splittings with the interaction switched off.
    pub fn without_interaction(&self) -> Self {
        SystemSpec {
            interaction: Interaction::None,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathSpec {
    pub temperature: f64,
    /// Dimensionless Ohmic prefactor: `J(omega) = lambda * omega`.
    pub lambda: f64,
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::param("temperature", "must be > 0"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::param("lambda", "must be > 0"));
        }
        Ok(())
    }
}

/// One dissipation channel: Bohr frequency and its jump operator `A(omega)`.
#[derive(Clone, Debug)]
pub struct BohrChannel {
    pub omega: f64,
    pub jump: CMat,
}

/// Local Hamiltonian `(omega/2) sigma_z` of a lone qubit.
pub fn qubit_hamiltonian(omega: f64) -> CMat {
    pauli::z().scale(omega / 2.0)
}

/// `op` acting on qubit `qubit` (1 or 2) of the pair.
pub fn embed(op: &CMat, qubit: usize) -> CMat {
    match qubit {
        1 => kron(op, &CMat::identity(2)),
        2 => kron(&CMat::identity(2), op),
        _ => panic!("qubit index must be 1 or 2"),
    }
}

pub fn build_hamiltonian(spec: &SystemSpec) -> CMat {
    let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
    let mut h = &embed(&qubit_hamiltonian(spec.omega1), 1) + &embed(&qubit_hamiltonian(spec.omega2), 2);
    let j = spec.coupling;
    let one = C64::new(1.0, 0.0);
    match spec.interaction {
        Interaction::None => {}
        Interaction::Ising => h.add_scaled(one * j, &kron(&z, &z)),
        Interaction::Xy | Interaction::Xyz => {
            h.add_scaled(one * (j * (1.0 + spec.delta)), &kron(&x, &x));
            h.add_scaled(one * (j * (1.0 - spec.delta)), &kron(&y, &y));
            if spec.interaction == Interaction::Xyz {
                h.add_scaled(one * j, &kron(&z, &z));
            }
        }
    }
    h
}

/// `sum_i (sigma_plus^i + sigma_minus^i)`: the system side of the bath coupling.
pub fn coupling_operator() -> CMat {
    &embed(&pauli::x(), 1) + &embed(&pauli::x(), 2)
}

/// Result of splitting a coupling operator into Bohr-frequency eigenoperators.
#[derive(Clone, Debug)]
pub struct BohrDecomposition {
    /// Sorted by ascending frequency.
    pub channels: Vec<BohrChannel>,
    /// Pairs of eigenvalue indices closer than the grouping tolerance. The
    /// eigenbasis inside such a pair is whatever the eigensolver returned.
    pub near_degenerate: Vec<(usize, usize)>,
}

/// Default grouping tolerance for a Hamiltonian: `1e-8 * max |E|`.
pub fn default_group_tol(h: &CMat) -> Result<f64> {
    let spec = herm_eig(h)?;
    let emax = spec.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
    Ok(1e-8 * emax.max(1e-300))
}

/// `A(omega) = sum_{E_l - E_j = omega} |j><j| X |l><l|`, grouped by frequency
/// within `tol_group`. Zero operators are dropped.
pub fn bohr_decompose(h: &CMat, coupling_op: &CMat, tol_group: f64) -> Result<BohrDecomposition> {
    if h.dim() != coupling_op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian is {}x{}, coupling operator {}x{}",
            h.dim(),
            h.dim(),
            coupling_op.dim(),
            coupling_op.dim()
        )));
    }
    let spec = herm_eig(h)?;
    let n = h.dim();
    let energies = &spec.eigenvalues;
    let vecs: Vec<Vec<C64>> = (0..n).map(|k| spec.eigenvector(k)).collect();

    let mut near_degenerate = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if (energies[a] - energies[b]).abs() < tol_group {
                near_degenerate.push((a, b));
            }
        }
    }
    if !near_degenerate.is_empty() {
        log::warn!("Hamiltonian has near-degenerate levels {near_degenerate:?}; eigenoperators use the solver's basis");
    }

    // Matrix elements <j|X|l> in the eigenbasis.
    let x_l: Vec<Vec<C64>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|r| (0..n).map(|c| coupling_op[(r, c)] * vecs[l][c]).sum())
                .collect()
        })
        .collect();
    let mut transitions: Vec<(f64, usize, usize, C64)> = Vec::new();
    for j in 0..n {
        for l in 0..n {
            let elem: C64 = (0..n).map(|r| vecs[j][r].conj() * x_l[l][r]).sum();
            if elem.norm() > 1e-14 {
                transitions.push((energies[l] - energies[j], j, l, elem));
            }
        }
    }
    transitions.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut channels: Vec<BohrChannel> = Vec::new();
    let mut group: Vec<(f64, usize, usize, C64)> = Vec::new();
    let flush = |group: &mut Vec<(f64, usize, usize, C64)>, channels: &mut Vec<BohrChannel>| {
        if group.is_empty() {
            return;
        }
        let omega = group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64;
        let mut jump = CMat::zeros(n);
        for &(_, j, l, elem) in group.iter() {
            jump.add_scaled(elem, &CMat::outer(&vecs[j], &vecs[l]));
        }
        if jump.max_abs() >= 1e-12 {
            channels.push(BohrChannel { omega, jump });
        }
        group.clear();
    };
    for t in transitions {
        if let Some(first) = group.first() {
            if (t.0 - first.0).abs() > tol_group {
                flush(&mut group, &mut channels);
            }
        }
        group.push(t);
    }
    flush(&mut group, &mut channels);

    Ok(BohrDecomposition {
        channels,
        near_degenerate,
    })
}

/// Max-abs residual of `[H, A] + omega A` for a channel.
pub fn eigenoperator_residual(h: &CMat, ch: &BohrChannel) -> f64 {
    let mut r = commutator(h, &ch.jump);
    r.add_scaled(C64::new(ch.omega, 0.0), &ch.jump);
    r.max_abs()
}

/// Bose-Einstein occupation `1 / (e^{omega/T} - 1)` for `omega > 0`.
pub fn bose(omega: f64, temperature: f64) -> f64 {
    1.0 / (omega / temperature).exp_m1()
}

/// Ohmic transition rate: emission for `omega > 0`, absorption for `omega < 0`.
pub fn gamma(omega: f64, bath: &BathSpec) -> f64 {
    let pref = 2.0 * PI * bath.lambda;
    if omega.abs() < 1e-9 {
        pref * bath.temperature
    } else if omega > 0.0 {
        pref * omega * (bose(omega, bath.temperature) + 1.0)
    } else {
        pref * (-omega) * bose(-omega, bath.temperature)
    }
}

/// Gibbs state `exp(-H/T) / Z`.
pub fn thermal_state(h: &CMat, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::param("temperature", "must be > 0"));
    }
    let spec = herm_eig(h)?;
    let e0 = spec.eigenvalues[0];
    let w: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|e| (-(e - e0) / temperature).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    Ok(DensityMatrix::new_unchecked(spec.with_values(&p).hermitian_part()))
}
