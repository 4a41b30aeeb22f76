//! Population dynamics for the recursive distributional equation of the
//! root resolvent on the Poisson weighted infinite tree.
//!
//! The law of `R_star(z)` is the fixed point of
//!
//! ```text
//! R_star  =law=  -( z + sum_j xi_j R_j )^{-1},
//! ```
//!
//! where `(xi_j)` is a Poisson process on (0, inf) with intensity
//! `(alpha/2) x^{-alpha/2-1} dx` and the `R_j` are i.i.d. copies of `R_star`.
//! A pool of samples approximates the law; each generation resamples every
//! entry through the map above with the process truncated at `xi >= omega`.
//! From a converged pool we read off `y(z) = E[(-i R)^{alpha/2}]`, the
//! self-energy stable parameters, and the boundary pair `(a(E), b(E))`.

use crate::quad::power_exp_contour;
use crate::rng::Rng;
use crate::special::gamma;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum RdeError {
    EmptyPool,
    PoolTooSmall { have: usize, need: usize },
    InvalidCutoff(f64),
    /// A truncated Poisson draw would exceed the configured point budget.
    PointBudgetExceeded { expected: f64, budget: usize },
    /// `|y - phi(y)|` exceeded the configured tolerance.
    FixedPointResidual { residual: f64, tol: f64 },
    /// Extrapolated y(E) fell outside the cone spanned by (-i)^{a/2}, i^{a/2}.
    OutsideCone { a: f64, b: f64 },
    DegenerateBoundary,
}

impl fmt::Display for RdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdeError::EmptyPool => write!(f, "resolvent pool is empty"),
            RdeError::PoolTooSmall { have, need } => {
                write!(f, "pool has {have} entries, need at least {need}")
            }
            RdeError::InvalidCutoff(w) => write!(f, "cutoff omega = {w} must be positive"),
            RdeError::PointBudgetExceeded { expected, budget } => {
                write!(f, "expected {expected:.1} Poisson points exceeds budget {budget}")
            }
            RdeError::FixedPointResidual { residual, tol } => {
                write!(f, "y residual {residual:.3e} exceeds tolerance {tol:.3e}")
            }
            RdeError::OutsideCone { a, b } => {
                write!(f, "boundary pair (a={a:.3e}, b={b:.3e}) outside the positive cone")
            }
            RdeError::DegenerateBoundary => write!(f, "a = b = 0 does not define a law"),
        }
    }
}

impl std::error::Error for RdeError {}

/// Pool of complex samples approximating the law of `R_star(z)`.
#[derive(Clone, Debug)]
pub struct ResolventPopulation {
    pub z: Complex64,
    pub alpha: f64,
    pub pool: Vec<Complex64>,
    pub cutoff: f64,
    pub generation: u32,
}

/// Stable parameters of the self-energy components (kappa_0, theta_0).
#[derive(Clone, Copy, Debug)]
pub struct SelfEnergyParams {
    pub sigma_kappa: f64,
    pub beta_kappa: f64,
    pub sigma_theta: f64,
}

/// Where a boundary pair came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySource {
    Population,
    FixedPoint,
}

/// The pair (a(E), b(E)) decomposing y(E) over the basis {(-i)^{a/2}, i^{a/2}}.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPair {
    pub energy: f64,
    pub a: f64,
    pub b: f64,
    pub source: BoundarySource,
}

/// Expected number of Poisson points above the cutoff (intensity mass).
pub fn truncated_point_mean(alpha: f64, omega: f64) -> f64 {
    omega.powf(-alpha / 2.0)
}

impl ResolventPopulation {
    /// Fresh pool with every entry at the trivial value `-1/z`.
    pub fn new(z: Complex64, alpha: f64, size: usize, cutoff: f64) -> Result<Self, RdeError> {
        if size == 0 {
            return Err(RdeError::EmptyPool);
        }
        if !(cutoff > 0.0) {
            return Err(RdeError::InvalidCutoff(cutoff));
        }
        let init = -z.inv();
        Ok(ResolventPopulation {
            z,
            alpha,
            pool: vec![init; size],
            cutoff,
            generation: 0,
        })
    }

    /// One synchronous generation: every entry is rebuilt from the previous
    /// pool (double-buffered, deterministic given seed regardless of worker
    /// count).
    pub fn update(&mut self, seed: u64, max_points: usize) -> Result<(), RdeError> {
        let mean = truncated_point_mean(self.alpha, self.cutoff);
        if mean > max_points as f64 / 4.0 {
            return Err(RdeError::PointBudgetExceeded {
                expected: mean,
                budget: max_points,
            });
        }
        let prev = std::mem::take(&mut self.pool);
        let z = self.z;
        let alpha = self.alpha;
        let omega = self.cutoff;
        let generation = self.generation;
        let next: Vec<Complex64> = (0..prev.len())
            .into_par_iter()
            .map(|i| {
                let mut rng = Rng::stream(seed, &[0x9de, generation as u64, i as u64]);
                sample_rde_map(z, alpha, omega, &prev, &mut rng)
            })
            .collect();
        self.pool = next;
        self.generation += 1;
        Ok(())
    }

    /// Run `burn_in` generations, then average `measure` generations of the
    /// observable `f` (called on the pool after each measured generation).
    pub fn run<F: FnMut(&ResolventPopulation)>(
        &mut self,
        seed: u64,
        burn_in: u32,
        measure: u32,
        max_points: usize,
        mut f: F,
    ) -> Result<(), RdeError> {
        for _ in 0..burn_in {
            self.update(seed, max_points)?;
        }
        for _ in 0..measure {
            self.update(seed, max_points)?;
            f(self);
        }
        Ok(())
    }
}

/// One draw of `-(z + sum_j xi_j R_j)^{-1}` with `xi >= omega`.
fn sample_rde_map(
    z: Complex64,
    alpha: f64,
    omega: f64,
    pool: &[Complex64],
    rng: &mut Rng,
) -> Complex64 {
    let mean = truncated_point_mean(alpha, omega);
    let count = rng.poisson(mean);
    let mut self_energy = Complex64::new(0.0, 0.0);
    for _ in 0..count {
        // P(xi > x | xi >= omega) = (x/omega)^{-alpha/2}
        let xi = omega * rng.uniform_open0().powf(-2.0 / alpha);
        self_energy += pool[rng.index(pool.len())] * xi;
    }
    -(z + self_energy).inv()
}

/// Moment-based stable parameters of the self-energy:
/// `sigma = E[|Re R|^{a/2}]^{2/a}`, `beta` from the signed moments,
/// `sigma_theta = E[(Im R)^{a/2}]^{2/a}`.
pub fn self_energy_params(pop: &ResolventPopulation) -> Result<SelfEnergyParams, RdeError> {
    if pop.pool.len() < 1000 {
        return Err(RdeError::PoolTooSmall {
            have: pop.pool.len(),
            need: 1000,
        });
    }
    let half = pop.alpha / 2.0;
    let n = pop.pool.len() as f64;
    let (mut pos, mut neg, mut imag) = (0.0, 0.0, 0.0);
    for r in &pop.pool {
        if r.re > 0.0 {
            pos += r.re.powf(half);
        } else if r.re < 0.0 {
            neg += (-r.re).powf(half);
        }
        imag += r.im.max(0.0).powf(half);
    }
    pos /= n;
    neg /= n;
    imag /= n;
    let total = pos + neg;
    Ok(SelfEnergyParams {
        sigma_kappa: total.powf(2.0 / pop.alpha),
        beta_kappa: if total > 0.0 { (pos - neg) / total } else { 0.0 },
        sigma_theta: imag.powf(2.0 / pop.alpha),
    })
}

/// The deterministic fixed-point map `phi_{alpha,z}(x)` whose unique solution
/// is `y(z)`:
/// `phi = Gamma(a/2)^{-1} int_0^inf t^{a/2-1} e^{itz} exp(-Gamma(1-a/2) t^{a/2} x) dt`.
pub fn phi_fixed_point(alpha: f64, z: Complex64, x: Complex64) -> Complex64 {
    let b = alpha / 2.0;
    power_exp_contour(b, b, z, x * gamma(1.0 - b)) / gamma(b)
}

/// Like [`estimate_y`], failing when the fixed-point residual exceeds `tol`.
pub fn estimate_y_checked(
    pop: &ResolventPopulation,
    tol: f64,
) -> Result<(Complex64, f64), RdeError> {
    let (y, residual) = estimate_y(pop)?;
    if residual > tol {
        return Err(RdeError::FixedPointResidual { residual, tol });
    }
    Ok((y, residual))
}

/// Pool estimate of `y(z) = E[(-iR)^{alpha/2}]` together with the fixed-point
/// residual `|y - phi_{alpha,z}(y)|`.
pub fn estimate_y(pop: &ResolventPopulation) -> Result<(Complex64, f64), RdeError> {
    if pop.pool.len() < 1000 {
        return Err(RdeError::PoolTooSmall {
            have: pop.pool.len(),
            need: 1000,
        });
    }
    let half = Complex64::new(pop.alpha / 2.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in &pop.pool {
        acc += (minus_i * r).powc(half);
    }
    let y = acc / pop.pool.len() as f64;
    let residual = (y - phi_fixed_point(pop.alpha, pop.z, y)).norm();
    Ok((y, residual))
}

/// `y` against the basis `{(-i)^{a/2}, i^{a/2}}`:
/// `y = (a+b) cos(pi a/4) + i (b-a) sin(pi a/4)`.
pub fn decompose_y(alpha: f64, y: Complex64) -> (f64, f64) {
    let c = (PI * alpha / 4.0).cos();
    let s = (PI * alpha / 4.0).sin();
    let a = 0.5 * (y.re / c - y.im / s);
    let b = 0.5 * (y.re / c + y.im / s);
    (a, b)
}

/// Boundary pair by running pools along a decreasing eta ladder at fixed `E`
/// and extrapolating `y(E + i eta)` linearly in eta to the real axis.
pub struct BoundaryLadder {
    pub energy: f64,
    pub etas: Vec<f64>,
    pub ys: Vec<Complex64>,
}

pub fn boundary_ab(ladder: &BoundaryLadder, alpha: f64) -> Result<BoundaryPair, RdeError> {
    assert!(ladder.etas.len() == ladder.ys.len() && ladder.etas.len() >= 2);
    // Least-squares linear fit y(eta) = y0 + c eta, take y0.
    let n = ladder.etas.len() as f64;
    let sx: f64 = ladder.etas.iter().sum();
    let sxx: f64 = ladder.etas.iter().map(|e| e * e).sum();
    let sy: Complex64 = ladder.ys.iter().sum();
    let sxy: Complex64 = ladder
        .etas
        .iter()
        .zip(&ladder.ys)
        .map(|(&e, &y)| y * e)
        .sum();
    let denom = n * sxx - sx * sx;
    let slope = (sxy * n - sy * sx) / denom;
    let y0 = (sy - slope * sx) / n;
    let (a, b) = decompose_y(alpha, y0);
    // Monte Carlo scatter sets the tolerance for slightly negative values.
    let tol = 0.02 * (a.abs() + b.abs()).max(1e-12);
    if a < -tol || b < -tol {
        return Err(RdeError::OutsideCone { a, b });
    }
    Ok(BoundaryPair {
        energy: ladder.energy,
        a: a.max(0.0),
        b: b.max(0.0),
        source: BoundarySource::Population,
    })
}

/// Convenience driver: run the population over the eta ladder and extract the
/// boundary pair.
///
/// The cutoff shrinks with eta (`omega = min(cutoff, eta/10)`) so the
/// discarded Poisson mass stays negligible relative to the self-energy, and
/// rungs where the y-sequence stops contracting are dropped: finite pools
/// develop a systematic drift once eta falls below a pool-size-dependent
/// threshold, and feeding those rungs to the extrapolation would poison it.
#[allow(clippy::too_many_arguments)]
pub fn boundary_ab_population(
    energy: f64,
    alpha: f64,
    etas: &[f64],
    pool_size: usize,
    cutoff: f64,
    burn_in: u32,
    measure: u32,
    seed: u64,
) -> Result<BoundaryPair, RdeError> {
    let mut ys: Vec<Complex64> = Vec::with_capacity(etas.len());
    let mut ses: Vec<f64> = Vec::with_capacity(etas.len());
    for (k, &eta) in etas.iter().enumerate() {
        let z = Complex64::new(energy, eta);
        let omega = cutoff.min(eta / 10.0);
        let mut pop = ResolventPopulation::new(z, alpha, pool_size, omega)?;
        let mut gen_means: Vec<Complex64> = Vec::new();
        pop.run(seed ^ ((k as u64) << 32), burn_in, measure, 1_000_000, |p| {
            let half = Complex64::new(alpha / 2.0, 0.0);
            let minus_i = Complex64::new(0.0, -1.0);
            let mut s = Complex64::new(0.0, 0.0);
            for r in &p.pool {
                s += (minus_i * r).powc(half);
            }
            gen_means.push(s / p.pool.len() as f64);
        })?;
        let n = gen_means.len() as f64;
        let mean: Complex64 = gen_means.iter().sum::<Complex64>() / n;
        let var = gen_means
            .iter()
            .map(|y| (y - mean).norm_sqr())
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        ys.push(mean);
        ses.push((var / n).sqrt());
    }
    // Keep the leading rungs while successive differences keep contracting.
    let mut keep = 2usize.min(ys.len());
    while keep < ys.len() {
        let prev = (ys[keep - 1] - ys[keep - 2]).norm();
        let next = (ys[keep] - ys[keep - 1]).norm();
        let noise = 3.0 * (ses[keep] + ses[keep - 1]);
        if next <= 1.6 * prev.max(noise) {
            keep += 1;
        } else {
            break;
        }
    }
    boundary_ab(
        &BoundaryLadder {
            energy,
            etas: etas[..keep].to_vec(),
            ys: ys[..keep].to_vec(),
        },
        alpha,
    )
}

/// Parameters of `kappa_loc(E) = a^{2/alpha} S1 - b^{2/alpha} S2`: an
/// `alpha/2`-stable law with scale `(a+b)^{2/alpha}` and skewness
/// `(a-b)/(a+b)`.
pub fn kappa_loc_params(
    a: f64,
    b: f64,
    alpha: f64,
) -> Result<crate::stable::StableParams, RdeError> {
    if a == 0.0 && b == 0.0 {
        return Err(RdeError::DegenerateBoundary);
    }
    crate::stable::StableParams::new(alpha / 2.0, (a + b).powf(2.0 / alpha), (a - b) / (a + b))
        .map_err(|_| RdeError::DegenerateBoundary)
}

/// i.i.d. samples of `R_loc(E) = -1/(E + kappa_loc(E))`.
pub fn sample_r_loc(
    energy: f64,
    pair: &BoundaryPair,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, RdeError> {
    let one_sided = crate::stable::StableParams::new(alpha / 2.0, 1.0, 1.0)
        .map_err(|_| RdeError::DegenerateBoundary)?;
    let sa = pair.a.powf(2.0 / alpha);
    let sb = pair.b.powf(2.0 / alpha);
    let mut rng = Rng::stream(seed, &[0x10c]);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let kappa = sa * one_sided.sample_one(&mut rng) - sb * one_sided.sample_one(&mut rng);
        out.push(-1.0 / (energy + kappa));
    }
    Ok(out)
}

/// Closed form `y(0) = sqrt(2 sin(pi alpha/2) / (pi alpha))`.
pub fn y_at_zero(alpha: f64) -> f64 {
    (2.0 * (PI * alpha / 2.0).sin() / (PI * alpha)).sqrt()
}

/// Closed form `a(0) = b(0) = y(0) / (2 cos(alpha pi / 4))`.
pub fn ab_at_zero(alpha: f64) -> f64 {
    y_at_zero(alpha) / (2.0 * (alpha * PI / 4.0).cos())
}
