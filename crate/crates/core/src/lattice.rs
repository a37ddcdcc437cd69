//! Torus geometry, particle configurations, and the exclusion generator.
//!
//! Sites are `0 .. n*k` with periodic neighbours; box `i` is the block
//! `i*n ..= (i+1)*n - 1`. Edge `x` joins `x` and `x+1 mod n*k`. The edge
//! leaving box `i` to the right, i.e. `x = (i+1)*n - 1`, is a slow bond with
//! conductance `alpha * n^(-beta)`; every other edge has conductance 1.
//!
//! The exclusion generator acts on functions `f` of a configuration `eta` by
//!
//! ```text
//! (L f)(eta) = sum_x xi(x) * [ f(eta^x) - f(eta) ]
//! ```
//!
//! where `eta^x` swaps the occupations at `x` and `x+1` and `xi(x)` is the
//! conductance. Swapping two equal occupations is a no-op, so `L` conserves
//! the particle number.

use crate::error::{Error, Result};

/// Geometry and rate parameters of the slow-bond torus.
///
/// `n >= 2` sites per box, `k >= 1` boxes, `alpha > 0`, `beta >= 0`. The
/// headline scaling regimes all take `beta > 1`; smaller exponents are
/// accepted here and screened out at the experiment level.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    n: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    slow_rate: f64,
}

impl LatticeSpec {
    pub fn new(n: usize, k: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2 sites per box, got {n}")));
        }
        if k < 1 {
            return Err(Error::Domain("need k >= 1 boxes".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")));
        }
        let slow_rate = alpha * (n as f64).powf(-beta);
        Ok(Self { n, k, alpha, beta, slow_rate })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Total number of sites `n*k`.
    pub fn sites(&self) -> usize {
        self.n * self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Conductance of every slow bond, `alpha * n^(-beta)`.
    pub fn slow_rate(&self) -> f64 {
        self.slow_rate
    }

    /// True when edge `(x, x+1)` is one of the `k` slow bonds.
    pub fn is_slow_edge(&self, x: usize) -> bool {
        debug_assert!(x < self.sites());
        (x + 1).is_multiple_of(self.n)
    }

    /// Conductance of edge `(x, x+1 mod n*k)`.
    pub fn conductance(&self, x: usize) -> Result<f64> {
        self.check_site(x)?;
        Ok(if self.is_slow_edge(x) { self.slow_rate } else { 1.0 })
    }

    /// Index of the box containing site `x`.
    pub fn box_index(&self, x: usize) -> Result<usize> {
        self.check_site(x)?;
        Ok(x / self.n)
    }

    /// Sum of all edge conductances, the total jump rate of the embedded
    /// clock: `(n*k - k) + k * slow_rate`.
    pub fn total_rate(&self) -> f64 {
        (self.sites() - self.k) as f64 + self.k as f64 * self.slow_rate
    }

    fn check_site(&self, x: usize) -> Result<()> {
        if x < self.sites() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: x, limit: self.sites(), kind: "sites" })
        }
    }
}

/// Time acceleration applied to the exclusion dynamics.
///
/// Subcritical runs speed time up by `k^2 * n^(2+theta)`; critical runs by
/// `k^2 * n^(1+beta)`. The frozen behaviour additionally needs
/// `theta < beta - 1`, which is enforced where experiments are validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScaleRegime {
    Subcritical { theta: f64 },
    Critical,
}

impl TimeScaleRegime {
    pub fn subcritical(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::Domain(format!("theta must be finite and > 0, got {theta}")));
        }
        Ok(Self::Subcritical { theta })
    }
}

impl std::fmt::Display for TimeScaleRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Subcritical { theta } => write!(f, "subcritical:{theta}"),
            Self::Critical => write!(f, "critical"),
        }
    }
}

/// Occupation state of the torus, packed one bit per site.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Configuration {
    words: Vec<u64>,
    sites: usize,
    particles: usize,
}

impl Configuration {
    pub fn empty(sites: usize) -> Self {
        Self { words: vec![0; sites.div_ceil(64)], sites, particles: 0 }
    }

    pub fn from_fn(sites: usize, mut occ: impl FnMut(usize) -> bool) -> Self {
        let mut c = Self::empty(sites);
        for x in 0..sites {
            if occ(x) {
                c.words[x / 64] |= 1u64 << (x % 64);
                c.particles += 1;
            }
        }
        c
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |x| bits[x])
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    #[inline]
    pub fn get(&self, x: usize) -> bool {
        debug_assert!(x < self.sites);
        (self.words[x / 64] >> (x % 64)) & 1 == 1
    }

    /// Occupation as 0/1.
    #[inline]
    pub fn occ(&self, x: usize) -> u64 {
        debug_assert!(x < self.sites);
        (self.words[x / 64] >> (x % 64)) & 1
    }

    /// Swaps the occupations across edge `(x, x+1 mod sites)` in place.
    /// Returns whether the configuration changed.
    #[inline]
    pub fn swap_in_place(&mut self, x: usize) -> bool {
        let y = if x + 1 == self.sites { 0 } else { x + 1 };
        let (bx, by) = (self.occ(x), self.occ(y));
        if bx == by {
            return false;
        }
        self.words[x / 64] ^= 1u64 << (x % 64);
        self.words[y / 64] ^= 1u64 << (y % 64);
        true
    }

    /// The configuration with the occupations at `x` and `x+1` exchanged.
    pub fn swapped(&self, x: usize) -> Result<Self> {
        if x >= self.sites {
            return Err(Error::IndexOutOfRange { index: x, limit: self.sites, kind: "sites" });
        }
        let mut c = self.clone();
        c.swap_in_place(x);
        Ok(c)
    }

    /// Number of particles in each of the `k` boxes of `n` sites.
    pub fn box_counts(&self, spec: &LatticeSpec) -> Vec<usize> {
        assert_eq!(self.sites, spec.sites(), "configuration size must match the lattice");
        let mut counts = vec![0usize; spec.k()];
        for x in 0..self.sites {
            counts[x / spec.n()] += self.occ(x) as usize;
        }
        counts
    }
}

/// Applies the exclusion generator to `f` at `eta`:
/// `sum_x xi(x) [f(eta^x) - f(eta)]`.
pub fn generator_apply(
    spec: &LatticeSpec,
    f: impl Fn(&Configuration) -> f64,
    eta: &Configuration,
) -> Result<f64> {
    if eta.sites() != spec.sites() {
        return Err(Error::Usage(format!(
            "configuration has {} sites but the lattice has {}",
            eta.sites(),
            spec.sites()
        )));
    }
    let base = f(eta);
    let mut acc = 0.0;
    for x in 0..spec.sites() {
        let flipped = eta.swapped(x)?;
        acc += spec.conductance(x)? * (f(&flipped) - base);
    }
    Ok(acc)
}
