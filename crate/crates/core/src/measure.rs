//! Empirical measures on the unit torus and profile discretizations.
//!
//! Three empirical measures are attached to a configuration `eta`:
//!
//! * `Pi`: mass `1/(n*k)` at `x/(n*k)` for each occupied site `x`;
//! * `Pi~`: mass `(box average)/(n*k)` at `x/(n*k)` for every site `x`;
//! * `pi`: `k` atoms, atom `i` at `i/k` with mass `(box average)/k`.
//!
//! All three carry the same total mass, the particle density. Pairing with a
//! test function `G` is the plain sum of `mass * G(position)`.

use crate::error::{Error, Result};
use crate::lattice::{Configuration, LatticeSpec};
use crate::profile::{Profile, TestFunction};
use crate::quadrature;

/// Tolerance for the per-box profile averages.
pub const BOX_AVERAGE_TOL: f64 = 1e-10;

/// Finite atomic measure on the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<(f64, f64)>,
}

impl EmpiricalMeasure {
    /// Atoms are `(position, mass)` with distinct positions in `[0, 1)` and
    /// total mass at most 1.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for &(pos, mass) in &atoms {
            if !(0.0..1.0).contains(&pos) {
                return Err(Error::Domain(format!("atom position {pos} outside [0, 1)")));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::Domain(format!("atom mass {mass} invalid")));
            }
            total += mass;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("total mass {total} exceeds 1")));
        }
        let mut sorted: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate atom positions".into()));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Two-column CSV dump, one atom per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,mass\n");
        for &(pos, mass) in &self.atoms {
            out.push_str(&format!("{pos},{mass}\n"));
        }
        out
    }
}

/// Pairs a measure with a test function: `sum mass * G(position)`.
pub fn pair(m: &EmpiricalMeasure, g: &TestFunction) -> f64 {
    m.atoms.iter().map(|&(pos, mass)| mass * g.at(pos)).sum()
}

/// Site-level empirical measure `Pi`: one atom per occupied site.
pub fn empirical_pi(spec: &LatticeSpec, eta: &Configuration) -> Result<EmpiricalMeasure> {
    check_sites(spec, eta)?;
    let nk = spec.sites() as f64;
    let atoms = (0..spec.sites())
        .filter(|&x| eta.get(x))
        .map(|x| (x as f64 / nk, 1.0 / nk))
        .collect();
    EmpiricalMeasure::new(atoms)
}

/// Box-smoothed measure `Pi~`: every site carries its box average over `n*k`.
pub fn empirical_pi_tilde(spec: &LatticeSpec, eta: &Configuration) -> Result<EmpiricalMeasure> {
    check_sites(spec, eta)?;
    let nk = spec.sites() as f64;
    let n = spec.n() as f64;
    let counts = eta.box_counts(spec);
    let atoms = (0..spec.sites())
        .map(|x| (x as f64 / nk, counts[x / spec.n()] as f64 / n / nk))
        .collect();
    EmpiricalMeasure::new(atoms)
}

/// Box-atom measure `pi`: `k` atoms, atom `i` at `i/k` with mass
/// `(box average)/k`.
pub fn empirical_pi_boxes(spec: &LatticeSpec, eta: &Configuration) -> Result<EmpiricalMeasure> {
    check_sites(spec, eta)?;
    let n = spec.n() as f64;
    let k = spec.k() as f64;
    let counts = eta.box_counts(spec);
    let atoms = (0..spec.k())
        .map(|i| (i as f64 / k, counts[i] as f64 / n / k))
        .collect();
    EmpiricalMeasure::new(atoms)
}

/// Box averages of a profile: `avg(i) = k * integral of gamma over
/// [i/k, (i+1)/k]`, each integral resolved to `1e-10`.
pub fn box_average_profile(gamma: &Profile, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Usage("box averages need k >= 1".into()));
    }
    let kf = k as f64;
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let a = i as f64 / kf;
        let b = (i + 1) as f64 / kf;
        let f = |u: f64| gamma.at(u);
        let avg = kf * quadrature::integrate(&f, a, b, BOX_AVERAGE_TOL)?;
        if avg < gamma.epsilon0() - 1e-8 || avg > 1.0 - gamma.epsilon0() + 1e-8 {
            return Err(Error::Numeric(format!(
                "box average {avg} escapes the profile range for box {i}"
            )));
        }
        out.push(avg);
    }
    Ok(out)
}

/// Discrete Laplacian on the `k`-node ring:
/// `(Delta rho)(i) = k^2 [rho(i+1) + rho(i-1) - 2 rho(i)]`.
pub fn discrete_laplacian(rho: &[f64]) -> Result<Vec<f64>> {
    let k = rho.len();
    if k == 0 {
        return Err(Error::Usage("discrete Laplacian of an empty vector".into()));
    }
    let k2 = (k * k) as f64;
    Ok((0..k)
        .map(|i| k2 * (rho[(i + 1) % k] + rho[(i + k - 1) % k] - 2.0 * rho[i]))
        .collect())
}

fn check_sites(spec: &LatticeSpec, eta: &Configuration) -> Result<()> {
    if eta.sites() != spec.sites() {
        return Err(Error::Usage(format!(
            "configuration has {} sites but the lattice has {}",
            eta.sites(),
            spec.sites()
        )));
    }
    Ok(())
}
