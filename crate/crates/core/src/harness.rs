//! Experiment orchestration: validated experiment descriptions, replica
//! fan-out, aggregation into convergence tables, and CSV/plot emission.
//!
//! An experiment compares simulated observables against their scaling-limit
//! references across a ladder of lattice sizes. Validation rejects
//! parameter sets outside the regime hypotheses before any simulation
//! starts, and a fixed base seed makes every emitted byte reproducible.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, TimeScaleRegime};
use crate::measure::{box_average_profile, empirical_pi, pair};
use crate::oracle::{
    entropy_production_decomposition, initial_entropy_bound_check, reference_measure,
    yau_default_dt, yau_inequality_check, STATE_SPACE_SITE_CAP,
};
use crate::pde::{solve_continuous_heat, solve_discrete_heat, DensityField, DEFAULT_FOURIER_CUTOFF};
use crate::profile::{Profile, ProfileSpec, TestFunction};
use crate::quadrature;
use crate::simulate::{
    box_average_trajectories, configurations_at_times, mean_stderr, mixing_statistic,
    replacement_statistic, speedup_factor, ReplicaPlan, DEFAULT_EVENT_BUDGET,
};
use crate::stats::{
    default_theta_grid, ell_dependent_sum_check, hoeffding_check, subgaussian_product_check,
    w_subgaussian_check, FiniteDistribution, MovingAverageFamily, ProductCheckMethod,
};

/// Exact column header of every emitted table.
pub const CSV_HEADER: &str = "experiment,name,n,k,alpha,beta,theta,macro_time,observable,box_or_mode,simulated,reference,abs_error,stderr,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Box-level fluctuation statistic under subcritical acceleration.
    Mixing,
    /// Frozen profile of box averages under subcritical acceleration.
    Frozen,
    /// Box averages against the ring heat equation at the critical scale.
    DiscreteHeat,
    /// Site empirical measure against the torus heat equation, growing k.
    ContinuousHeat,
    /// Boundary-replacement statistic at the critical scale.
    Replacement,
    /// Exact-state-space certification checks.
    OracleSuite,
    /// Concentration-bound certification checks.
    AppendixSuite,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Mixing => "mixing",
            ExperimentKind::Frozen => "frozen",
            ExperimentKind::DiscreteHeat => "discrete-heat",
            ExperimentKind::ContinuousHeat => "continuous-heat",
            ExperimentKind::Replacement => "replacement",
            ExperimentKind::OracleSuite => "oracle-suite",
            ExperimentKind::AppendixSuite => "appendix-suite",
        }
    }

    /// Kinds that run the stochastic simulator.
    pub fn is_simulation(self) -> bool {
        !matches!(self, ExperimentKind::OracleSuite | ExperimentKind::AppendixSuite)
    }

    fn is_subcritical(self) -> bool {
        matches!(self, ExperimentKind::Mixing | ExperimentKind::Frozen)
    }

    fn needs_test_functions(self) -> bool {
        matches!(
            self,
            ExperimentKind::Mixing | ExperimentKind::ContinuousHeat | ExperimentKind::Replacement
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixing" => Ok(ExperimentKind::Mixing),
            "frozen" => Ok(ExperimentKind::Frozen),
            "discrete-heat" => Ok(ExperimentKind::DiscreteHeat),
            "continuous-heat" => Ok(ExperimentKind::ContinuousHeat),
            "replacement" => Ok(ExperimentKind::Replacement),
            "oracle-suite" => Ok(ExperimentKind::OracleSuite),
            "appendix-suite" => Ok(ExperimentKind::AppendixSuite),
            other => Err(Error::Parse(format!("unknown experiment kind {other:?}"))),
        }
    }
}

fn default_macro_times() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

fn default_replicas() -> usize {
    200
}

/// Full description of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentKind,
    /// Ladder of lattice sizes `(n, k)`.
    pub sizes: Vec<(usize, usize)>,
    pub alpha: f64,
    pub beta: f64,
    /// Subcritical exponent; only meaningful for subcritical kinds.
    #[serde(default)]
    pub theta: Option<f64>,
    pub profile: ProfileSpec,
    #[serde(default = "default_macro_times")]
    pub macro_times: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub test_functions: Vec<String>,
    #[serde(default)]
    pub event_budget: Option<u64>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    fn budget(&self) -> u64 {
        self.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET)
    }
}

/// Rejects parameter sets outside the regime hypotheses, reporting every
/// violation at once.
pub fn validate(spec: &ExperimentSpec) -> Result<()> {
    let mut problems = Vec::new();
    if !(spec.alpha.is_finite() && spec.alpha > 0.0) {
        problems.push(format!("alpha must be positive and finite, got {}", spec.alpha));
    }
    if !(spec.beta.is_finite() && spec.beta > 1.0) {
        problems.push(format!(
            "the slow-bond exponent must satisfy beta > 1 for every experiment, got {}",
            spec.beta
        ));
    }
    if spec.sizes.is_empty() {
        problems.push("need at least one lattice size".into());
    }
    for &(n, k) in &spec.sizes {
        if n < 2 || k < 1 {
            problems.push(format!("lattice size (n={n}, k={k}) needs n >= 2 and k >= 1"));
        }
    }
    if spec.macro_times.is_empty() {
        problems.push("need at least one macro time".into());
    }
    if spec.macro_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        problems.push("macro times must be finite and >= 0".into());
    }
    if spec.macro_times.windows(2).any(|w| w[1] <= w[0]) {
        problems.push("macro times must be strictly increasing".into());
    }

    match spec.name {
        ExperimentKind::Frozen | ExperimentKind::Mixing => match spec.theta {
            None => problems.push(format!(
                "{} runs on the subcritical time scale and needs theta",
                spec.name
            )),
            Some(theta) => {
                if !(theta.is_finite() && theta > 0.0) {
                    problems.push(format!("theta must be positive and finite, got {theta}"));
                }
                if spec.name == ExperimentKind::Frozen && theta >= spec.beta - 1.0 {
                    problems.push(format!(
                        "the frozen regime needs theta < beta - 1; theta = beta - 1 already \
                         reaches the critical time scale (theta {theta}, beta {})",
                        spec.beta
                    ));
                }
            }
        },
        ExperimentKind::DiscreteHeat
        | ExperimentKind::ContinuousHeat
        | ExperimentKind::Replacement => {
            if spec.theta.is_some() {
                problems.push(format!(
                    "{} runs at the critical time scale; theta does not apply",
                    spec.name
                ));
            }
        }
        ExperimentKind::OracleSuite => {
            if let Some(theta) = spec.theta {
                if !(theta.is_finite() && theta > 0.0) {
                    problems.push(format!("theta must be positive and finite, got {theta}"));
                }
            }
            for &(n, k) in &spec.sizes {
                if n * k > STATE_SPACE_SITE_CAP {
                    problems.push(format!(
                        "exact checks enumerate all configurations; n*k = {} exceeds the cap {}",
                        n * k,
                        STATE_SPACE_SITE_CAP
                    ));
                }
            }
            if spec.macro_times.first().is_some_and(|&t| t <= 0.0) {
                problems.push(
                    "exact checks differentiate the entropy centrally and need macro times > 0"
                        .into(),
                );
            }
        }
        ExperimentKind::AppendixSuite => {}
    }

    match spec.name {
        ExperimentKind::Frozen | ExperimentKind::DiscreteHeat
            if spec.sizes.windows(2).any(|w| w[0].1 != w[1].1) =>
        {
            problems.push(format!("{} holds k fixed while n grows", spec.name));
        }
        ExperimentKind::ContinuousHeat if spec.sizes.windows(2).any(|w| w[1].1 <= w[0].1) => {
            problems.push("continuous-heat requires k to increase strictly along sizes".into());
        }
        _ => {}
    }

    if spec.name.is_simulation() && spec.replicas < 2 {
        problems.push(format!("standard errors need at least 2 replicas, got {}", spec.replicas));
    }
    if spec.name.needs_test_functions() {
        if spec.test_functions.is_empty() {
            problems.push(format!("{} needs at least one test function", spec.name));
        }
        for name in &spec.test_functions {
            if TestFunction::by_name(name).is_err() {
                problems.push(format!("unknown test function {name:?}"));
            }
        }
    }
    if let Err(e) = spec.profile.build() {
        problems.push(format!("profile: {e}"));
    }

    if spec.name.is_simulation() {
        if let (Some(&t_max), false) = (spec.macro_times.last(), spec.sizes.is_empty()) {
            for &(n, k) in &spec.sizes {
                if let Ok(lattice) = LatticeSpec::new(n, k, spec.alpha.max(f64::MIN_POSITIVE), spec.beta.max(0.0)) {
                    let regime = match spec.theta {
                        Some(theta) if spec.name.is_subcritical() && theta > 0.0 => {
                            TimeScaleRegime::Subcritical { theta }
                        }
                        _ => TimeScaleRegime::Critical,
                    };
                    let projected = t_max * speedup_factor(&lattice, regime) * lattice.total_rate();
                    if projected > spec.budget() as f64 {
                        problems.push(format!(
                            "projected events per replica at (n={n}, k={k}) are about \
                             {projected:.3e}, beyond the budget {}",
                            spec.budget()
                        ));
                    }
                }
            }
        }
    }

    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// One aggregated observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub experiment: String,
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub theta: Option<f64>,
    pub macro_time: f64,
    pub observable: String,
    pub box_or_mode: String,
    pub simulated: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub stderr: f64,
    pub seed: u64,
}

impl TableRow {
    #[allow(clippy::too_many_arguments)]
    fn new(
        spec: &ExperimentSpec,
        (n, k): (usize, usize),
        theta: Option<f64>,
        macro_time: f64,
        observable: &str,
        box_or_mode: String,
        simulated: f64,
        reference: f64,
        stderr: f64,
    ) -> Self {
        Self {
            experiment: spec.name.label().to_string(),
            name: spec.profile.label().to_string(),
            n,
            k,
            alpha: spec.alpha,
            beta: spec.beta,
            theta,
            macro_time,
            observable: observable.to_string(),
            box_or_mode,
            simulated,
            reference,
            abs_error: (simulated - reference).abs(),
            stderr,
            seed: spec.base_seed,
        }
    }

    fn to_csv(&self) -> String {
        let theta = self.theta.map(|t| t.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.name,
            self.n,
            self.k,
            self.alpha,
            self.beta,
            theta,
            self.macro_time,
            self.observable,
            self.box_or_mode,
            self.simulated,
            self.reference,
            self.abs_error,
            self.stderr,
            self.seed
        )
    }

    fn from_csv(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(Error::Parse(format!("expected 15 fields, got {}", fields.len())));
        }
        let float = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse(format!("bad {what} value {s:?}")))
        };
        let int = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse(format!("bad {what} value {s:?}")))
        };
        let theta = if fields[6].is_empty() { None } else { Some(float(fields[6], "theta")?) };
        let row = Self {
            experiment: fields[0].to_string(),
            name: fields[1].to_string(),
            n: int(fields[2], "n")?,
            k: int(fields[3], "k")?,
            alpha: float(fields[4], "alpha")?,
            beta: float(fields[5], "beta")?,
            theta,
            macro_time: float(fields[7], "macro_time")?,
            observable: fields[8].to_string(),
            box_or_mode: fields[9].to_string(),
            simulated: float(fields[10], "simulated")?,
            reference: float(fields[11], "reference")?,
            abs_error: float(fields[12], "abs_error")?,
            stderr: float(fields[13], "stderr")?,
            seed: fields[14]
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed value {:?}", fields[14])))?,
        };
        if row.abs_error.to_bits() != (row.simulated - row.reference).abs().to_bits() {
            return Err(Error::Parse(format!(
                "abs_error {} does not match |simulated - reference|",
                row.abs_error
            )));
        }
        Ok(row)
    }
}

/// Aggregated experiment output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    rows: Vec<TableRow>,
}

impl ConvergenceTable {
    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == CSV_HEADER => {}
            other => {
                return Err(Error::Parse(format!("bad or missing CSV header: {other:?}")));
            }
        }
        let rows: Vec<TableRow> =
            lines.filter(|l| !l.is_empty()).map(TableRow::from_csv).collect::<Result<_>>()?;
        Ok(Self { rows })
    }
}

/// Runs a validated experiment and aggregates every replica.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ConvergenceTable> {
    validate(spec)?;
    let profile = spec.profile.build()?;
    let mut rows = Vec::new();
    match spec.name {
        ExperimentKind::Frozen | ExperimentKind::DiscreteHeat => {
            run_box_averages(spec, &profile, &mut rows)?
        }
        ExperimentKind::ContinuousHeat => run_pairings(spec, &profile, &mut rows)?,
        ExperimentKind::Mixing | ExperimentKind::Replacement => {
            run_statistics(spec, &profile, &mut rows)?
        }
        ExperimentKind::OracleSuite => run_oracle_suite(spec, &profile, &mut rows)?,
        ExperimentKind::AppendixSuite => run_appendix_suite(spec, &profile, &mut rows)?,
    }
    Ok(ConvergenceTable { rows })
}

fn subcritical_regime(spec: &ExperimentSpec) -> Result<TimeScaleRegime> {
    TimeScaleRegime::subcritical(
        spec.theta.ok_or_else(|| Error::Usage("missing theta".into()))?,
    )
}

fn run_box_averages(
    spec: &ExperimentSpec,
    profile: &Profile,
    rows: &mut Vec<TableRow>,
) -> Result<()> {
    let frozen = spec.name == ExperimentKind::Frozen;
    for &(n, k) in &spec.sizes {
        let lattice = LatticeSpec::new(n, k, spec.alpha, spec.beta)?;
        let regime =
            if frozen { subcritical_regime(spec)? } else { TimeScaleRegime::Critical };
        let plan = ReplicaPlan::new(spec.replicas, spec.base_seed, regime)?
            .with_event_budget(spec.budget());
        let traj = box_average_trajectories(&lattice, profile, &plan, &spec.macro_times)?;
        let gamma_bar = box_average_profile(profile, k)?;
        for (ti, &t) in spec.macro_times.iter().enumerate() {
            let reference = if frozen {
                gamma_bar.clone()
            } else {
                solve_discrete_heat(&gamma_bar, spec.alpha, t)?
            };
            for b in 0..k {
                let samples: Vec<f64> = traj.iter().map(|r| r[ti][b]).collect();
                let est = mean_stderr(&samples);
                rows.push(TableRow::new(
                    spec,
                    (n, k),
                    spec.theta.filter(|_| frozen),
                    t,
                    "box-average",
                    b.to_string(),
                    est.mean,
                    reference[b],
                    est.stderr,
                ));
            }
        }
    }
    Ok(())
}

fn run_pairings(
    spec: &ExperimentSpec,
    profile: &Profile,
    rows: &mut Vec<TableRow>,
) -> Result<()> {
    let functions: Vec<TestFunction> = spec
        .test_functions
        .iter()
        .map(|name| TestFunction::by_name(name))
        .collect::<Result<_>>()?;
    for &(n, k) in &spec.sizes {
        let lattice = LatticeSpec::new(n, k, spec.alpha, spec.beta)?;
        let plan = ReplicaPlan::new(spec.replicas, spec.base_seed, TimeScaleRegime::Critical)?
            .with_event_budget(spec.budget());
        let snaps = configurations_at_times(&lattice, profile, &plan, &spec.macro_times)?;
        for (ti, &t) in spec.macro_times.iter().enumerate() {
            let field = solve_continuous_heat(profile, spec.alpha, t, DEFAULT_FOURIER_CUTOFF)?;
            for g in &functions {
                let reference = pairing_reference(&field, g)?;
                let samples: Vec<f64> = snaps
                    .iter()
                    .map(|r| Ok(pair(&empirical_pi(&lattice, &r[ti])?, g)))
                    .collect::<Result<_>>()?;
                let est = mean_stderr(&samples);
                rows.push(TableRow::new(
                    spec,
                    (n, k),
                    None,
                    t,
                    "pairing",
                    g.name().to_string(),
                    est.mean,
                    reference,
                    est.stderr,
                ));
            }
        }
    }
    Ok(())
}

/// `int G(u) rho_t(u) du` for a spectral field, by adaptive quadrature.
fn pairing_reference(field: &DensityField, g: &TestFunction) -> Result<f64> {
    let DensityField::FourierOnTorus { mean, modes, .. } = field else {
        return Err(Error::Usage("pairing references need a torus field".into()));
    };
    let eval = |u: f64| {
        let mut v = *mean;
        for m in modes {
            let w = 2.0 * std::f64::consts::PI * m.frequency as f64 * u;
            v += m.cos_coeff * w.cos() + m.sin_coeff * w.sin();
        }
        v * g.at(u)
    };
    // Panels shorter than every oscillation present in G * rho_t, so the
    // quadrature's dyadic sampling cannot alias a high mode to a constant.
    let panels = modes.iter().map(|m| m.frequency).max().unwrap_or(0) + 3;
    let tol = 1e-10 / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let a = j as f64 / panels as f64;
        let b = (j + 1) as f64 / panels as f64;
        total += quadrature::integrate(&eval, a, b, tol)?;
    }
    Ok(total)
}

fn run_statistics(
    spec: &ExperimentSpec,
    profile: &Profile,
    rows: &mut Vec<TableRow>,
) -> Result<()> {
    let mixing = spec.name == ExperimentKind::Mixing;
    let functions: Vec<TestFunction> = spec
        .test_functions
        .iter()
        .map(|name| TestFunction::by_name(name))
        .collect::<Result<_>>()?;
    for &(n, k) in &spec.sizes {
        let lattice = LatticeSpec::new(n, k, spec.alpha, spec.beta)?;
        let regime =
            if mixing { subcritical_regime(spec)? } else { TimeScaleRegime::Critical };
        let plan = ReplicaPlan::new(spec.replicas, spec.base_seed, regime)?
            .with_event_budget(spec.budget());
        for &t in &spec.macro_times {
            for g in &functions {
                let est = if mixing {
                    mixing_statistic(&lattice, profile, &plan, g, t)?
                } else {
                    replacement_statistic(&lattice, profile, &plan, g, t)?
                };
                rows.push(TableRow::new(
                    spec,
                    (n, k),
                    spec.theta.filter(|_| mixing),
                    t,
                    if mixing { "mixing" } else { "replacement" },
                    g.name().to_string(),
                    est.mean,
                    0.0,
                    est.stderr,
                ));
            }
        }
    }
    Ok(())
}

fn run_oracle_suite(
    spec: &ExperimentSpec,
    profile: &Profile,
    rows: &mut Vec<TableRow>,
) -> Result<()> {
    for &(n, k) in &spec.sizes {
        let lattice = LatticeSpec::new(n, k, spec.alpha, spec.beta)?;
        let bound = initial_entropy_bound_check(&lattice, profile)?;
        rows.push(TableRow::new(
            spec,
            (n, k),
            None,
            0.0,
            "initial-entropy",
            String::new(),
            bound.entropy,
            bound.bound,
            0.0,
        ));
        for &t in &spec.macro_times {
            let dt = yau_default_dt(&lattice, TimeScaleRegime::Critical);
            let critical =
                yau_inequality_check(&lattice, TimeScaleRegime::Critical, profile, t, dt)?;
            rows.push(TableRow::new(
                spec,
                (n, k),
                None,
                t,
                "yau-gap",
                "critical".into(),
                critical.gap,
                0.0,
                0.0,
            ));
            if let Some(theta) = spec.theta {
                let regime = TimeScaleRegime::subcritical(theta)?;
                let dt = yau_default_dt(&lattice, regime);
                let sub = yau_inequality_check(&lattice, regime, profile, t, dt)?;
                rows.push(TableRow::new(
                    spec,
                    (n, k),
                    Some(theta),
                    t,
                    "yau-gap",
                    "subcritical".into(),
                    sub.gap,
                    0.0,
                    0.0,
                ));
            }
            let nu = reference_measure(&lattice, profile, t, spec.alpha)?;
            let adj = crate::oracle::adjoint_one(&lattice, &nu)?;
            rows.push(TableRow::new(
                spec,
                (n, k),
                None,
                t,
                "adjoint-gap",
                String::new(),
                adj.route_gap,
                0.0,
                0.0,
            ));
            let dec = entropy_production_decomposition(&lattice, profile, t)?;
            rows.push(TableRow::new(
                spec,
                (n, k),
                None,
                t,
                "decomposition-residual",
                String::new(),
                dec.residual,
                0.0,
                0.0,
            ));
            rows.push(TableRow::new(
                spec,
                (n, k),
                None,
                t,
                "decomposition-remainder",
                String::new(),
                dec.remainder,
                0.0,
                0.0,
            ));
        }
    }
    Ok(())
}

fn run_appendix_suite(
    spec: &ExperimentSpec,
    profile: &Profile,
    rows: &mut Vec<TableRow>,
) -> Result<()> {
    let (n, k) = spec.sizes[0];
    let grid = default_theta_grid();
    let margin_row = |observable: &str, margin: f64, stderr: f64, rows: &mut Vec<TableRow>| {
        rows.push(TableRow::new(
            spec,
            (n, k),
            None,
            0.0,
            observable,
            String::new(),
            margin,
            0.0,
            stderr,
        ));
    };

    let bernoulli = FiniteDistribution::bernoulli(0.5)?;
    let hoeffding = hoeffding_check(&bernoulli, &grid)?;
    margin_row("hoeffding-margin", hoeffding.margin, 0.0, rows);

    let rho = profile.at(0.0);
    let eps0 = profile.epsilon0();
    for set_size in 1..=3 {
        let report = w_subgaussian_check(rho, eps0, set_size, &grid)?;
        margin_row(&format!("w-margin:{set_size}"), report.margin, 0.0, rows);
    }

    let gaussian =
        subgaussian_product_check(1.0, 1.0, 0.25, ProductCheckMethod::GaussianClosedForm)?;
    margin_row("product-margin:gaussian", gaussian.margin, 0.0, rows);
    let two_point =
        subgaussian_product_check(1.0, 1.0, 0.25, ProductCheckMethod::TwoPointSymmetric)?;
    margin_row("product-margin:two-point", two_point.margin, 0.0, rows);
    let monte = subgaussian_product_check(
        1.0,
        1.0,
        0.25,
        ProductCheckMethod::MonteCarloGaussian { samples: 1_000_000, seed: spec.base_seed },
    )?;
    margin_row("product-margin:monte-carlo", monte.margin, monte.halfwidth, rows);

    let family = MovingAverageFamily::new(0.5, 8, 2)?;
    let weights: Vec<f64> =
        (0..8).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 8.0).sin()).collect();
    let family_report = ell_dependent_sum_check(&family, &weights, &grid)?;
    margin_row("family-margin", family_report.margin, 0.0, rows);
    Ok(())
}

/// Writes the CSV (and optionally the log-log error plot) into `dir`,
/// returning the created paths.
pub fn emit(table: &ConvergenceTable, dir: &Path, with_plot: bool) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::Usage("refusing to emit an empty table".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join("table.csv");
    fs::write(&csv_path, table.to_csv())?;
    written.push(csv_path);
    if with_plot {
        let plot_path = dir.join("error_vs_n.svg");
        fs::write(&plot_path, render_plot(table))?;
        written.push(plot_path);
    }
    Ok(written)
}

const PLOT_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-log scatter of the worst absolute error per lattice size, one
/// polyline per macro time.
pub fn render_plot(table: &ConvergenceTable) -> String {
    // Worst error per (macro_time, n), keyed deterministically.
    let mut times: Vec<f64> = table.rows.iter().map(|r| r.macro_time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut series: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for &t in &times {
        let mut ns: Vec<usize> = table
            .rows
            .iter()
            .filter(|r| r.macro_time == t)
            .map(|r| r.n)
            .collect();
        ns.sort_unstable();
        ns.dedup();
        let points: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let worst = table
                    .rows
                    .iter()
                    .filter(|r| r.macro_time == t && r.n == n)
                    .map(|r| r.abs_error)
                    .fold(0.0f64, f64::max);
                (n as f64, worst.max(1e-16))
            })
            .collect();
        series.push((t, points));
    }

    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let lx: Vec<f64> = all.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = all.iter().map(|p| p.1.log10()).collect();
    let span = |vals: &[f64]| -> (f64, f64) {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if (hi - lo).abs() < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = span(&ly);
    let px = |x: f64| ml + (x.log10() - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y.log10() - y0) / (y1 - y0) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">n</text>\n",
        (ml + w - mr) / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 16 {0})\">max abs error</text>\n",
        (mt + h - mb) / 2.0
    ));

    // Decade ticks on the error axis, size ticks at observed n.
    let mut decade = y0.floor();
    while decade <= y1.ceil() {
        let value = 10f64.powf(decade);
        if value.log10() >= y0 - 1e-9 && value.log10() <= y1 + 1e-9 {
            let y = py(value);
            svg.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{y}\" x2=\"{1}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n",
                ml,
                w - mr
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">1e{}</text>\n",
                ml - 6.0,
                y + 4.0,
                decade as i64
            ));
        }
        decade += 1.0;
    }
    let mut all_n: Vec<f64> = all.iter().map(|p| p.0).collect();
    all_n.sort_by(f64::total_cmp);
    all_n.dedup();
    for &nval in &all_n {
        let x = px(nval);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{0}\" x2=\"{x}\" y2=\"{1}\" stroke=\"#cccccc\"/>\n",
            h - mb,
            mt
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            h - mb + 16.0,
            nval
        ));
    }

    for (si, (t, points)) in series.iter().enumerate() {
        let color = PLOT_COLORS[si % PLOT_COLORS.len()];
        let path: Vec<String> =
            points.iter().map(|&(n, e)| format!("{:.2},{:.2}", px(n), py(e))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        for &(n, e) in points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(n),
                py(e)
            ));
        }
        let ly = mt + 16.0 + 16.0 * si as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            w - mr - 90.0,
            ly - 9.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">t={t}</text>\n",
            w - mr - 76.0,
            ly
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
