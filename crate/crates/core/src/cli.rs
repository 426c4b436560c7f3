//! Scenario files and the analysis pipeline behind the `qthermo` binary.
//!
//! A scenario is a flat JSON object:
//!
//! ```json
//! {
//!   "omega1": 50, "omega2": 55, "interaction": "xyz", "coupling": 0.8, "delta": 0.5,
//!   "temperature": 127.33, "lambda": 1e-4,
//!   "initial_state": "phi_plus", "mode": "both", "t_end": "auto",
//!   "dt": 1e-3, "record_every": 100, "seed": 1,
//!   "outputs": ["thermo", "deficits", "bounds", "blp", "rhp", "thermal"]
//! }
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Stepping;
use crate::error::{Error, Result};
use crate::model::{BathSpec, Interaction, SystemSpec};
use crate::qmat::{herm_eig, partial_trace, DensityMatrix};
use crate::thermo::{bound_report, deficit_series, run_thermo, LocalMode, PairModel};
use crate::witness::{
    blp_pair, blp_search, er_series, ppt_check, rhp_measure_with, rhp_trajectory, EntanglementMeasure, ErOptions,
    WitnessReport,
};

pub const THERMO_HEADER: &str = "t,S12,S1,S2,J12,J1,J2,sigma12,sigma1,sigma2,deltaJ,balance_residual_max";
pub const DEFICITS_HEADER: &str = "t,total_direct,total_chi,markovian_like,nm_part,mutual_info,B_nM";
pub const BOUNDS_HEADER: &str = "t,bound_id,lhs,rhs,slack";
pub const SERIES_HEADER: &str = "t,value";

const NORM_WARN_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Lone,
    Reduced,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(&self) -> Vec<LocalMode> {
        match self {
            ModeSelection::Lone => vec![LocalMode::LoneQubit],
            ModeSelection::Reduced => vec![LocalMode::NonMarkovianReduced],
            ModeSelection::Both => vec![LocalMode::LoneQubit, LocalMode::NonMarkovianReduced],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Thermo,
    Deficits,
    Bounds,
    Blp,
    Rhp,
    Thermal,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum StateSpec {
    Named(String),
    Amplitudes(Vec<Amplitude>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum TEndSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    omega1: f64,
    omega2: f64,
    interaction: Interaction,
    coupling: Option<f64>,
    delta: Option<f64>,
    temperature: f64,
    lambda: f64,
    initial_state: StateSpec,
    #[serde(default)]
    mode: ModeSelection,
    t_end: TEndSpec,
    dt: Option<f64>,
    record_every: Option<usize>,
    #[serde(default)]
    seed: u64,
    outputs: Option<Vec<Output>>,
    er_terms: Option<usize>,
    er_restarts: Option<usize>,
    blp_pairs: Option<Vec<[StateSpec; 2]>>,
    blp_samples: Option<usize>,
    rhp_state: Option<StateSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSpan {
    /// `12 / gamma_min`
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct StatePair {
    pub label: String,
    pub a: DensityMatrix,
    pub b: DensityMatrix,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub system: SystemSpec,
    pub bath: BathSpec,
    pub initial_label: String,
    pub initial_state: DensityMatrix,
    pub mode: ModeSelection,
    pub t_end: TimeSpan,
    pub dt: f64,
    pub record_every: usize,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub er_terms: usize,
    pub er_restarts: usize,
    /// `None` means the default pair of each picture.
    pub blp_pairs: Option<Vec<StatePair>>,
    pub blp_samples: usize,
    pub rhp_state: DensityMatrix,
}

impl Scenario {
    pub fn stepping(&self) -> Stepping {
        Stepping::new(self.dt, self.record_every)
    }

    pub fn t_end_for(&self, model: &PairModel) -> f64 {
        match self.t_end {
            TimeSpan::Auto => model.default_t_end(),
            TimeSpan::Fixed(t) => t,
        }
    }

    pub fn er_options(&self) -> ErOptions {
        ErOptions {
            n_product_terms: self.er_terms,
            n_restarts: self.er_restarts,
            seed: self.seed,
            ..ErOptions::default()
        }
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

fn named_state(name: &str) -> Option<Vec<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
    Some(match name {
        "zero" => r(&[1.0, 0.0]),
        "one" => r(&[0.0, 1.0]),
        "plus" => r(&[s, s]),
        "minus" => r(&[s, -s]),
        "phi_plus" => r(&[s, 0.0, 0.0, s]),
        "phi_minus" => r(&[s, 0.0, 0.0, -s]),
        "psi_plus" => r(&[0.0, s, s, 0.0]),
        "psi_minus" => r(&[0.0, s, -s, 0.0]),
        "psi_00" => r(&[1.0, 0.0, 0.0, 0.0]),
        "psi_01" => r(&[0.0, 1.0, 0.0, 0.0]),
        "psi_10" => r(&[0.0, 0.0, 1.0, 0.0]),
        "psi_11" => r(&[0.0, 0.0, 0.0, 1.0]),
        "plus_plus" => r(&[0.5, 0.5, 0.5, 0.5]),
        // (qubit 1, qubit 2, ancilla): |φ+> on (1, A), qubit 2 in |0>.
        "phi_plus_1a" => r(&[s, 0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0]),
        _ => return None,
    })
}

fn resolve_state(spec: &StateSpec, field: &str, dims: &[usize]) -> Result<(String, DensityMatrix)> {
    let (label, amps) = match spec {
        StateSpec::Named(name) => {
            let amps = named_state(name).ok_or_else(|| Error::param(field, format!("unknown state `{name}`")))?;
            (name.clone(), amps)
        }
        StateSpec::Amplitudes(list) => {
            let amps: Vec<C64> = list
                .iter()
                .map(|a| match a {
                    Amplitude::Real(x) => C64::new(*x, 0.0),
                    Amplitude::Complex([re, im]) => C64::new(*re, *im),
                })
                .collect();
            ("explicit".to_string(), amps)
        }
    };
    if !dims.contains(&amps.len()) {
        return Err(Error::param(
            field,
            format!("state has {} amplitudes, expected one of {dims:?}", amps.len()),
        ));
    }
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::param(field, "amplitudes must be finite"));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::param(field, "state vector is zero"));
    }
    if (norm - 1.0).abs() > NORM_WARN_TOL {
        log::warn!("{field}: amplitudes have norm {norm}, normalizing");
    }
    let amps: Vec<C64> = amps.into_iter().map(|a| a / norm).collect();
    Ok((label, DensityMatrix::from_ket(&amps)?))
}

fn positive(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::param(field, "must be a finite number > 0"))
    }
}

/// Parse and validate a scenario from JSON text.
pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let needs_coupling = raw.interaction != Interaction::None;
    let needs_delta = matches!(raw.interaction, Interaction::Xy | Interaction::Xyz);
    let coupling = match raw.coupling {
        Some(j) => j,
        None if needs_coupling => return Err(Error::param("coupling", "required for an interacting model")),
        None => 0.0,
    };
    let delta = match raw.delta {
        Some(d) => d,
        None if needs_delta => return Err(Error::param("delta", "required for the xy and xyz models")),
        None => 0.0,
    };
    let system = SystemSpec {
        omega1: raw.omega1,
        omega2: raw.omega2,
        interaction: raw.interaction,
        coupling,
        delta,
    };
    system.validate()?;
    let bath = BathSpec {
        temperature: raw.temperature,
        lambda: raw.lambda,
    };
    bath.validate()?;
    let (initial_label, initial_state) = resolve_state(&raw.initial_state, "initial_state", &[4])?;
    let t_end = match raw.t_end {
        TEndSpec::Value(t) => TimeSpan::Fixed(positive("t_end", t)?),
        TEndSpec::Keyword(k) if k == "auto" => TimeSpan::Auto,
        TEndSpec::Keyword(k) => {
            return Err(Error::param(
                "t_end",
                format!("expected a number or \"auto\", got `{k}`"),
            ))
        }
    };
    let dt = positive("dt", raw.dt.unwrap_or(crate::dynamics::DEFAULT_DT))?;
    if let TimeSpan::Fixed(t) = t_end {
        if dt > t {
            return Err(Error::param("dt", "must not exceed t_end"));
        }
    }
    let record_every = raw.record_every.unwrap_or(crate::dynamics::DEFAULT_RECORD_EVERY);
    if record_every == 0 {
        return Err(Error::param("record_every", "must be >= 1"));
    }
    let mut outputs = raw
        .outputs
        .unwrap_or_else(|| vec![Output::Thermo, Output::Deficits, Output::Bounds]);
    outputs.sort();
    outputs.dedup();
    if outputs.is_empty() {
        return Err(Error::param("outputs", "select at least one artifact"));
    }
    let er_terms = raw.er_terms.unwrap_or(8);
    if er_terms < 4 {
        return Err(Error::param("er_terms", "must be >= 4"));
    }
    let er_restarts = raw.er_restarts.unwrap_or(16);
    if er_restarts == 0 {
        return Err(Error::param("er_restarts", "must be >= 1"));
    }
    let blp_pairs = match raw.blp_pairs {
        None => None,
        Some(list) => {
            if list.is_empty() {
                return Err(Error::param("blp_pairs", "list is empty"));
            }
            let mut out = Vec::with_capacity(list.len());
            for [a, b] in &list {
                let (la, ra) = resolve_state(a, "blp_pairs", &[2, 4])?;
                let (lb, rb) = resolve_state(b, "blp_pairs", &[2, 4])?;
                if ra.dim() != rb.dim() {
                    return Err(Error::param(
                        "blp_pairs",
                        "both states of a pair need the same dimension",
                    ));
                }
                out.push(StatePair {
                    label: format!("{la}/{lb}"),
                    a: ra,
                    b: rb,
                });
            }
            Some(out)
        }
    };
    let blp_samples = raw.blp_samples.unwrap_or(50);
    if blp_samples == 0 {
        return Err(Error::param("blp_samples", "must be >= 1"));
    }
    let rhp_state = match &raw.rhp_state {
        Some(spec) => resolve_state(spec, "rhp_state", &[8])?.1,
        None => resolve_state(&StateSpec::Named("phi_plus_1a".into()), "rhp_state", &[8])?.1,
    };
    Ok(Scenario {
        system,
        bath,
        initial_label,
        initial_state,
        mode: raw.mode,
        t_end,
        dt,
        record_every,
        seed: raw.seed,
        outputs,
        er_terms,
        er_restarts,
        blp_pairs,
        blp_samples,
        rhp_state,
    })
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Options that come from the command line rather than the scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Random BLP search with this many pairs instead of the listed pairs.
    pub blp_search: Option<usize>,
    pub rhp_measure: EntanglementMeasure,
    /// Report RHP entanglement in units of ln 2.
    pub ln2_units: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            blp_search: None,
            rhp_measure: EntanglementMeasure::Concurrence,
            ln2_units: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Human-readable result lines.
    pub lines: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: &[String], summary: &mut RunSummary) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 200 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text)?;
    summary.files.push(path.to_path_buf());
    Ok(())
}

fn series_rows(series: &[(f64, f64)], scale: f64) -> Vec<String> {
    series
        .iter()
        .map(|&(t, v)| format!("{},{}", num(t), num(v * scale)))
        .collect()
}

#[derive(Serialize)]
struct PptJson {
    separable: bool,
    min_pt_eigenvalue: f64,
}

#[derive(Serialize)]
struct ThermalJson {
    interaction: Interaction,
    temperature: f64,
    hamiltonian_eigenvalues: Vec<f64>,
    thermal_eigenvalues: Vec<f64>,
    thermal_diagonal: Vec<f64>,
    reduced_thermal_eigenvalues: [Vec<f64>; 2],
    ppt: PptJson,
}

fn thermal_json(model: &PairModel) -> Result<String> {
    let ppt = ppt_check(&model.thermal12)?;
    let doc = ThermalJson {
        interaction: model.system.interaction,
        temperature: model.temperature(),
        hamiltonian_eigenvalues: herm_eig(&model.h12)?.eigenvalues,
        thermal_eigenvalues: model.thermal12.clamped_spectrum().eigenvalues,
        thermal_diagonal: (0..4).map(|i| model.thermal12[(i, i)].re).collect(),
        reduced_thermal_eigenvalues: [
            model.thermal_reduced[0].clamped_spectrum().eigenvalues,
            model.thermal_reduced[1].clamped_spectrum().eigenvalues,
        ],
        ppt: PptJson {
            separable: ppt.separable,
            min_pt_eigenvalue: ppt.min_pt_eigenvalue,
        },
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
}

fn default_pairs(mode: LocalMode) -> Vec<StatePair> {
    let state = |n: &str| DensityMatrix::from_ket(&named_state(n).expect("known state")).expect("normalized");
    let (a, b) = match mode {
        LocalMode::LoneQubit => ("plus", "minus"),
        LocalMode::NonMarkovianReduced => ("psi_01", "psi_00"),
    };
    vec![StatePair {
        label: format!("{a}/{b}"),
        a: state(a),
        b: state(b),
    }]
}

/// Run every selected analysis and write the artifacts under `out_dir`.
/// With both pictures selected, per-picture files go to `lone/` and
/// `reduced/` subdirectories.
pub fn run_scenario(s: &Scenario, out_dir: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let model = PairModel::new(&s.system, &s.bath)?;
    let mut summary = RunSummary::default();
    fs::create_dir_all(out_dir)?;
    if s.wants(Output::Thermal) {
        let path = out_dir.join("thermal.json");
        fs::write(&path, thermal_json(&model)? + "\n")?;
        summary.files.push(path);
    }
    let t_end = s.t_end_for(&model);
    let stepping = s.stepping();
    let modes = s.mode.modes();
    let thermal_ppt = ppt_check(&model.thermal12)?;
    for &mode in &modes {
        let dir = if modes.len() > 1 {
            out_dir.join(mode.label())
        } else {
            out_dir.to_path_buf()
        };
        let label = mode.label();
        if [Output::Thermo, Output::Deficits, Output::Bounds]
            .iter()
            .any(|&o| s.wants(o))
        {
            fs::create_dir_all(&dir)?;
            log::info!("{label}: evolving to t = {t_end} with dt = {}", s.dt);
            let run = run_thermo(&model, &s.initial_state, mode, t_end, stepping)?;
            if s.wants(Output::Thermo) {
                let rows: Vec<String> = run
                    .samples
                    .iter()
                    .skip(1)
                    .map(|x| {
                        [
                            x.time,
                            x.s_global,
                            x.s_1,
                            x.s_2,
                            x.j_global,
                            x.j_1,
                            x.j_2,
                            x.sigma_global,
                            x.sigma_1,
                            x.sigma_2,
                            x.delta_j(),
                            x.balance_residual_max(),
                        ]
                        .map(num)
                        .join(",")
                    })
                    .collect();
                write_csv(&dir.join("thermo.csv"), THERMO_HEADER, &rows, &mut summary)?;
            }
            if s.wants(Output::Deficits) || s.wants(Output::Bounds) {
                let deficits = deficit_series(&model, &run)?;
                if s.wants(Output::Deficits) {
                    let rows: Vec<String> = deficits
                        .iter()
                        .map(|d| {
                            [
                                d.time,
                                d.total_deficit_direct,
                                d.total_deficit_chi,
                                d.markovian_like_part,
                                d.nm_part,
                                d.mutual_info_t,
                                d.b_nm,
                            ]
                            .map(num)
                            .join(",")
                        })
                        .collect();
                    write_csv(&dir.join("deficits.csv"), DEFICITS_HEADER, &rows, &mut summary)?;
                    if let Some(last) = deficits.last() {
                        summary.lines.push(format!(
                            "{label}: total deficit at t = {:.3}: direct {:.6e}, entropy route {:.6e}",
                            last.time, last.total_deficit_direct, last.total_deficit_chi
                        ));
                    }
                }
                if s.wants(Output::Bounds) {
                    let e_r = if thermal_ppt.separable {
                        er_series(&run.global.states, Some(&model.thermal12), &s.er_options())?
                            .into_iter()
                            .map(Some)
                            .collect()
                    } else {
                        log::warn!("global Gibbs state is entangled; complementarity bounds skipped");
                        vec![None; deficits.len()]
                    };
                    let mut rows = Vec::new();
                    let mut worst = f64::INFINITY;
                    for (d, er) in deficits.iter().zip(e_r) {
                        for b in bound_report(d, mode, er) {
                            worst = worst.min(b.slack);
                            rows.push(format!(
                                "{},{},{},{},{}",
                                num(b.time),
                                b.id.label(),
                                num(b.lhs),
                                num(b.rhs),
                                num(b.slack)
                            ));
                        }
                    }
                    write_csv(&dir.join("bounds.csv"), BOUNDS_HEADER, &rows, &mut summary)?;
                    summary.lines.push(format!("{label}: minimum bound slack {worst:.6e}"));
                }
            }
        }
        if s.wants(Output::Blp) {
            fs::create_dir_all(&dir)?;
            let best = match opts.blp_search {
                Some(n) => {
                    let found = blp_search(&model, mode, t_end, stepping, n, s.seed)?;
                    summary.lines.push(format!(
                        "{label}: BLP search over {n} pairs: best value {:.6e} (sample {})",
                        found.best.value, found.best_index
                    ));
                    found.best
                }
                None => {
                    let pairs = s.blp_pairs.clone().unwrap_or_else(|| default_pairs(mode));
                    let mut best: Option<WitnessReport> = None;
                    for p in &pairs {
                        if mode == LocalMode::NonMarkovianReduced && p.a.dim() == 2 {
                            return Err(Error::param(
                                "blp_pairs",
                                "single-qubit pairs only apply to lone-qubit dynamics",
                            ));
                        }
                        let r = blp_pair(&model, mode, &p.a, &p.b, t_end, stepping)?;
                        summary
                            .lines
                            .push(format!("{label}: BLP {}: {:.6e} ({:?})", p.label, r.value, r.verdict));
                        if best.as_ref().is_none_or(|b| r.value > b.value) {
                            best = Some(r);
                        }
                    }
                    best.expect("at least one pair")
                }
            };
            write_csv(
                &dir.join("blp.csv"),
                SERIES_HEADER,
                &series_rows(&best.series, 1.0),
                &mut summary,
            )?;
        }
        if s.wants(Output::Rhp) {
            fs::create_dir_all(&dir)?;
            let traj = rhp_trajectory(&model, mode, &s.rhp_state, t_end, stepping)?;
            let r = rhp_measure_with(&traj, opts.rhp_measure, &s.er_options())?;
            let scale = if opts.ln2_units {
                1.0 / std::f64::consts::LN_2
            } else {
                1.0
            };
            summary
                .lines
                .push(format!("{label}: RHP {:.6e} ({:?})", r.value * scale, r.verdict));
            write_csv(
                &dir.join("rhp.csv"),
                SERIES_HEADER,
                &series_rows(&r.series, scale),
                &mut summary,
            )?;
        }
    }
    if s.wants(Output::Thermal) {
        summary.lines.push(format!(
            "thermal state: {} (min partial-transpose eigenvalue {:.6e})",
            if thermal_ppt.separable {
                "separable"
            } else {
                "entangled"
            },
            thermal_ppt.min_pt_eigenvalue
        ));
    }
    Ok(summary)
}

/// One-paragraph description of a parsed scenario.
pub fn describe(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{:?} pair: omega = ({}, {}), J = {}, delta = {}; bath T = {}, lambda = {}; initial {}; mode {:?}; ",
        s.system.interaction,
        s.system.omega1,
        s.system.omega2,
        s.system.coupling,
        s.system.delta,
        s.bath.temperature,
        s.bath.lambda,
        s.initial_label,
        s.mode
    );
    let _ = match s.t_end {
        TimeSpan::Auto => write!(out, "t_end auto"),
        TimeSpan::Fixed(t) => write!(out, "t_end {t}"),
    };
    let _ = write!(
        out,
        ", dt {}, record every {}, outputs {:?}",
        s.dt, s.record_every, s.outputs
    );
    out
}

/// Marginal of qubit `q` (0 or 1) of the scenario's initial state.
pub fn initial_marginal(s: &Scenario, q: usize) -> Result<DensityMatrix> {
    partial_trace(&s.initial_state, &[2, 2], &[q])
}
