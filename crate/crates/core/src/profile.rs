//! Initial density profiles on the unit torus and spatial test functions.
//!
//! A profile is a map `gamma: [0,1) -> [eps0, 1-eps0]` with Lipschitz
//! constant `kappa`. The margin `eps0` and `kappa` are declared by the
//! caller and verified on a grid of 10^4 points at construction; they feed
//! the explicit initial relative-entropy bound `n * kappa / eps0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_POINTS: usize = 10_000;
const GRID_SLACK: f64 = 1e-9;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Density profile with a verified margin and Lipschitz constant.
#[derive(Clone)]
pub struct Profile {
    eval: Evaluator,
    epsilon0: f64,
    kappa: f64,
}

impl Profile {
    /// Wraps an evaluator after checking, on a 10^4-point grid, that values
    /// stay in `[eps0, 1-eps0]` and that adjacent grid increments respect
    /// the declared Lipschitz constant.
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        epsilon0: f64,
        kappa: f64,
    ) -> Result<Self> {
        if !(epsilon0 > 0.0 && epsilon0 < 0.5) {
            return Err(Error::Domain(format!("eps0 must lie in (0, 1/2), got {epsilon0}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Domain(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        let h = 1.0 / GRID_POINTS as f64;
        let mut prev = eval(0.0);
        for j in 0..=GRID_POINTS {
            let u = (j % GRID_POINTS) as f64 * h;
            let v = eval(u);
            if !v.is_finite() || v < epsilon0 - GRID_SLACK || v > 1.0 - epsilon0 + GRID_SLACK {
                return Err(Error::Domain(format!(
                    "profile value {v} at u = {u} escapes [eps0, 1-eps0] = [{epsilon0}, {}]",
                    1.0 - epsilon0
                )));
            }
            if j > 0 && (v - prev).abs() > kappa * h * (1.0 + GRID_SLACK) + GRID_SLACK {
                return Err(Error::Domain(format!(
                    "profile increment {:.3e} at u = {u} exceeds declared Lipschitz bound {kappa} * {h}",
                    (v - prev).abs()
                )));
            }
            prev = v;
        }
        Ok(Self { eval: Arc::new(eval), epsilon0, kappa })
    }

    /// Value at `u`, reduced modulo 1.
    pub fn at(&self, u: f64) -> f64 {
        (self.eval)(u.rem_euclid(1.0))
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile")
            .field("epsilon0", &self.epsilon0)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

/// Catalog of admissible profiles, each analytic on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ProfileSpec {
    /// `gamma(u) = value`.
    Constant { value: f64 },
    /// `gamma(u) = offset + amplitude * sin(2 pi frequency u)`.
    Sine { offset: f64, amplitude: f64, frequency: u32 },
    /// Smooth periodic bump
    /// `gamma(u) = base + amplitude * exp(concentration * (cos(2 pi (u - center)) - 1))`.
    Bump { base: f64, amplitude: f64, center: f64, concentration: f64 },
}

impl ProfileSpec {
    /// Catalog label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Sine { .. } => "sine",
            Self::Bump { .. } => "bump",
        }
    }

    pub fn build(&self) -> Result<Profile> {
        match *self {
            Self::Constant { value } => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(Error::Domain(format!("constant profile needs value in (0,1), got {value}")));
                }
                let eps0 = value.min(1.0 - value).min(0.499);
                Profile::new(move |_| value, eps0, 0.0)
            }
            Self::Sine { offset, amplitude, frequency } => {
                if amplitude < 0.0 || frequency == 0 {
                    return Err(Error::Domain(
                        "sine profile needs amplitude >= 0 and frequency >= 1".into(),
                    ));
                }
                let (lo, hi) = (offset - amplitude, offset + amplitude);
                if !(lo > 0.0 && hi < 1.0) {
                    return Err(Error::Domain(format!(
                        "sine profile range [{lo}, {hi}] escapes (0, 1)"
                    )));
                }
                let eps0 = lo.min(1.0 - hi).min(0.499);
                let kappa = 2.0 * std::f64::consts::PI * frequency as f64 * amplitude;
                let w = 2.0 * std::f64::consts::PI * frequency as f64;
                Profile::new(move |u| offset + amplitude * (w * u).sin(), eps0, kappa)
            }
            Self::Bump { base, amplitude, center, concentration } => {
                if amplitude < 0.0 || concentration <= 0.0 {
                    return Err(Error::Domain(
                        "bump profile needs amplitude >= 0 and concentration > 0".into(),
                    ));
                }
                let lo = base + amplitude * (-2.0 * concentration).exp();
                let hi = base + amplitude;
                if !(base > 0.0 && hi < 1.0) {
                    return Err(Error::Domain(format!(
                        "bump profile range [{lo}, {hi}] escapes (0, 1)"
                    )));
                }
                let eps0 = lo.min(1.0 - hi).min(0.499);
                let tau = 2.0 * std::f64::consts::PI;
                let kappa = tau * amplitude * concentration;
                Profile::new(
                    move |u| base + amplitude * (concentration * ((tau * (u - center)).cos() - 1.0)).exp(),
                    eps0,
                    kappa,
                )
            }
        }
    }
}

type TestEvaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth test function on the unit torus, with an optional closed-form
/// second derivative.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    eval: TestEvaluator,
    second_derivative: Option<TestEvaluator>,
}

impl TestFunction {
    /// Wraps an evaluator after a grid check that it closes up periodically.
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second_derivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Result<Self> {
        let grid = 2048usize;
        let h = 1.0 / grid as f64;
        let mut max_step = 0.0f64;
        let mut prev = eval(0.0);
        // Interior increments only; the wrap step is judged against them.
        for j in 1..grid {
            let v = eval(j as f64 * h);
            max_step = max_step.max((v - prev).abs());
            prev = v;
        }
        let wrap_gap = (eval(0.0) - prev).abs();
        if wrap_gap > 4.0 * max_step + 1e-9 {
            return Err(Error::Domain(format!(
                "test function does not close up on the torus (gap {wrap_gap:.3e})"
            )));
        }
        Ok(Self { name: name.into(), eval: Arc::new(eval), second_derivative })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn at(&self, u: f64) -> f64 {
        (self.eval)(u.rem_euclid(1.0))
    }

    pub fn second_derivative_at(&self, u: f64) -> Option<f64> {
        self.second_derivative.as_ref().map(|d| d(u.rem_euclid(1.0)))
    }

    /// Catalog: constant 1, `sin(2 pi u)`, `cos(2 pi u)`, `sin(4 pi u)`.
    pub fn catalog() -> Vec<TestFunction> {
        ["one", "sin2pi", "cos2pi", "sin4pi"]
            .iter()
            .map(|name| Self::by_name(name).expect("catalog entries are valid"))
            .collect()
    }

    pub fn by_name(name: &str) -> Result<TestFunction> {
        use std::f64::consts::PI;
        match name {
            "one" => Self::new("one", |_| 1.0, Some(Arc::new(|_| 0.0))),
            "sin2pi" => Self::new(
                "sin2pi",
                |u| (2.0 * PI * u).sin(),
                Some(Arc::new(|u| -4.0 * PI * PI * (2.0 * PI * u).sin())),
            ),
            "cos2pi" => Self::new(
                "cos2pi",
                |u| (2.0 * PI * u).cos(),
                Some(Arc::new(|u| -4.0 * PI * PI * (2.0 * PI * u).cos())),
            ),
            "sin4pi" => Self::new(
                "sin4pi",
                |u| (4.0 * PI * u).sin(),
                Some(Arc::new(|u| -16.0 * PI * PI * (4.0 * PI * u).sin())),
            ),
            other => Err(Error::Usage(format!("unknown test function '{other}'"))),
        }
    }
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}
