//! Transfer operator `T` and its Perron-Frobenius eigenvalue.
//!
//! Changing variables `u = h^2 (E+y)^{-1}` in
//!
//! ```text
//! Tf(x) = (alpha/2) int f(y) |1/(E+y)|^s |h|^{s-alpha-1} p_E(x + h^2/(E+y)) dh dy
//! ```
//!
//! separates the variables:
//!
//! ```text
//! Tf = I_1(f) F_1 + I_2(f) F_2,
//! I_1(f) = (alpha/2) int_{-E}^inf f(y) |E+y|^{-(s+alpha)/2} dy,
//! I_2(f) = (alpha/2) int_{-inf}^{-E} f(y) |E+y|^{-(s+alpha)/2} dy,
//! F_1(x) = int_0^inf u^{(s-alpha)/2-1} p_E(x+u) du,
//! F_2(x) = int_{-inf}^0 |u|^{(s-alpha)/2-1} p_E(x+u) du,
//! ```
//!
//! so `T` has rank two and its spectral radius is the largest eigenvalue of
//! the 2x2 pairing matrix `[[I_1(F_1), I_1(F_2)], [I_2(F_1), I_2(F_2)]]`.
//! This gives an evaluation of `lambda(E, s, alpha)` that never touches the
//! Fourier-side formulas, cross-checking the edge module.

use crate::edge::{frac_moment_integral, EdgeConstants};
use crate::kappa::KappaDensity;
use crate::quad::GaussLegendre;
use crate::rde::BoundaryPair;
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TransferError {
    InvalidArguments(String),
    KernelBuild(String),
    /// Power iteration ratios failed to settle.
    OscillatingRatios { last: f64, prev: f64 },
}

impl fmt::Display for TransferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferError::InvalidArguments(s) => write!(f, "invalid arguments: {s}"),
            TransferError::KernelBuild(s) => write!(f, "kernel build failed: {s}"),
            TransferError::OscillatingRatios { last, prev } => {
                write!(f, "power iteration oscillates: {prev} -> {last}")
            }
        }
    }
}

impl std::error::Error for TransferError {}

/// Tabulated rank-2 kernel of `T` at one `(E, s, alpha)` with a solved pair.
pub struct TransferKernel {
    pub energy: f64,
    pub s: f64,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `[[I_1(F_1), I_1(F_2)], [I_2(F_1), I_2(F_2)]]`
    pub pairing: [[f64; 2]; 2],
    kd: KappaDensity,
}

impl TransferKernel {
    /// Weight of the Banach-space norm: `w(x) = 1 + |x|^{(alpha-s)/2 + 1}`.
    pub fn weight(&self, x: f64) -> f64 {
        1.0 + x.abs().powf((self.alpha - self.s) / 2.0 + 1.0)
    }

    /// Weighted sup norm over the grid.
    pub fn norm(&self, vals: &[f64]) -> f64 {
        vals.iter()
            .zip(&self.grid)
            .map(|(&v, &x)| (v * self.weight(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `F_1`, `F_2` at an arbitrary point (recomputed, not interpolated).
    pub fn f_exact(&self, x: f64) -> (f64, f64) {
        let g = 1.0 - (self.s - self.alpha) / 2.0;
        (
            frac_moment_integral(&self.kd, x, 1.0, g),
            frac_moment_integral(&self.kd, x, -1.0, g),
        )
    }

    /// Apply `T` to grid values via the rank-2 representation.
    pub fn apply(&self, vals: &[f64]) -> Vec<f64> {
        let (i1, i2) = self.pair_with(vals);
        self.f1
            .iter()
            .zip(&self.f2)
            .map(|(&a, &b)| i1 * a + i2 * b)
            .collect()
    }

    /// `I_1(f)`, `I_2(f)` for `f` given by its grid values.
    pub fn pair_with(&self, vals: &[f64]) -> (f64, f64) {
        let f = |y: f64| grid_interp(&self.grid, vals, y);
        let tail = tail_coefficients(&self.grid, vals, self.s, self.alpha);
        (
            pairing_integral(self.energy, self.s, self.alpha, &f, tail, Half::Above),
            pairing_integral(self.energy, self.s, self.alpha, &f, tail, Half::Below),
        )
    }

    pub fn density(&self) -> &KappaDensity {
        &self.kd
    }
}

/// Build the kernel: tabulate `F_1`, `F_2` on a log ladder and compute the
/// four pairings by singular quadrature.
pub fn build_kernel(
    energy: f64,
    s: f64,
    alpha: f64,
    pair: &BoundaryPair,
) -> Result<TransferKernel, TransferError> {
    EdgeConstants::new(alpha, s).map_err(|e| TransferError::InvalidArguments(e.to_string()))?;
    let kd = KappaDensity::new(pair.a, pair.b, alpha, energy.abs().max(1.0))
        .map_err(|e| TransferError::KernelBuild(e.to_string()))?;
    let grid = build_grid(energy, kd.scale());
    let g = 1.0 - (s - alpha) / 2.0;
    let f1: Vec<f64> = grid
        .iter()
        .map(|&x| frac_moment_integral(&kd, x, 1.0, g))
        .collect();
    let f2: Vec<f64> = grid
        .iter()
        .map(|&x| frac_moment_integral(&kd, x, -1.0, g))
        .collect();
    let mut kernel = TransferKernel {
        energy,
        s,
        alpha,
        grid,
        f1,
        f2,
        pairing: [[0.0; 2]; 2],
        kd,
    };
    let (i1f1, i2f1) = kernel.pair_with(&kernel.f1);
    let (i1f2, i2f2) = kernel.pair_with(&kernel.f2);
    kernel.pairing = [[i1f1, i1f2], [i2f1, i2f2]];
    Ok(kernel)
}

/// Sign-symmetric log ladder with refinement around x = 0 and x = -E.
fn build_grid(energy: f64, sigma: f64) -> Vec<f64> {
    let mut pts = vec![0.0f64];
    let span_hi = (energy.abs().max(sigma)) * 2e6;
    let lo = sigma * 2f64.powi(-40);
    // 8 points per octave keeps cubic interpolation error ~ 1e-6 relative.
    let ratio = 2f64.powf(0.125);
    let mut x = lo;
    while x < span_hi {
        pts.push(x);
        pts.push(-x);
        x *= ratio;
    }
    if energy != 0.0 {
        let c = -energy;
        let mut h = sigma / 16.0;
        while h < 4.0 * energy.abs() {
            pts.push(c + h);
            pts.push(c - h);
            h *= ratio;
        }
        pts.push(c);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * (b.abs() + 1e-300));
    pts
}

/// Monotone-safe local cubic interpolation on an irregular grid, linear
/// fallback at the ends; zero outside.
fn grid_interp(grid: &[f64], vals: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] || x >= grid[n - 1] {
        return 0.0; // callers complete the tails analytically
    }
    let mut i = grid.partition_point(|&g| g < x);
    i = i.clamp(1, n - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let t = (x - x0) / (x1 - x0);
    if i < 2 || i > n - 2 {
        return vals[i - 1] * (1.0 - t) + vals[i] * t;
    }
    // Catmull-Rom with non-uniform knots via finite-difference slopes.
    let (xm, xp) = (grid[i - 2], grid[i + 1]);
    let (ym, y0, y1, yp) = (vals[i - 2], vals[i - 1], vals[i], vals[i + 1]);
    let h = x1 - x0;
    let m0 = (y1 - ym) / (x1 - xm) * h;
    let m1 = (yp - y0) / (xp - x0) * h;
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1;
    v.max(0.0)
}

/// Tail coefficients `f(y) ~ C_+- |y|^{-q}` with the slow exponent
/// `q = 1 - (s-alpha)/2`, fitted at the grid ends. The kernel functions decay
/// like `|y|^{(s-alpha)/2-1}` on the side opposite their defining half-line
/// and faster (by `|y|^{-alpha/2}`) on the matching side; modeling both with
/// the slow exponent is exact where it matters and only overestimates a
/// piece that is already negligible on the fast side. The coefficient itself
/// carries an O(|y|^{-alpha/2}) correction, removed by Richardson
/// extrapolation between two fitting radii.
fn tail_coefficients(grid: &[f64], vals: &[f64], s: f64, alpha: f64) -> (f64, f64) {
    let n = grid.len();
    let q = 1.0 - (s - alpha) / 2.0;
    let beta = alpha / 2.0;
    let fit = |i_far: usize, i_mid: usize| -> f64 {
        let (y_far, y_mid) = (grid[i_far].abs(), grid[i_mid].abs());
        let c_far = vals[i_far] * y_far.powf(q);
        let c_mid = vals[i_mid] * y_mid.powf(q);
        let r = (y_far / y_mid).powf(beta);
        if r > 1.0 + 1e-9 && c_mid > 0.0 {
            (c_far - c_mid / r) / (1.0 - 1.0 / r)
        } else {
            c_far
        }
    };
    // ~2 decades between fitting radii (grid has 8 points per octave).
    let gap = 53usize.min(n / 4);
    (fit(n - 2, n - 2 - gap), fit(1, 1 + gap))
}

enum Half {
    /// y > -E
    Above,
    /// y < -E
    Below,
}

/// `(alpha/2) int f(y) |E+y|^{-(s+alpha)/2} dy` over one side of the pole.
fn pairing_integral(
    energy: f64,
    s: f64,
    alpha: f64,
    f: &impl Fn(f64) -> f64,
    tail: (f64, f64),
    half: Half,
) -> f64 {
    let pole = -energy;
    let dir = match half {
        Half::Above => 1.0,
        Half::Below => -1.0,
    };
    let g = (s + alpha) / 2.0;
    let gl = GaussLegendre::new(24);
    let scale0 = energy.abs().max(1e-3);
    let t_lo = scale0 * 1e-13;
    // Integrable pole head with f frozen at the pole.
    let mut acc = f(pole + dir * 0.5 * t_lo) * t_lo.powf(1.0 - g) / (1.0 - g);
    let mut bps: Vec<f64> = Vec::new();
    let mut t = t_lo;
    while t < 1e280 {
        bps.push(t);
        t *= 2.0;
    }
    // Refine around y = 0 where f carries multi-scale structure; the ladder
    // spans every octave from far below the pole scale up to the crossing
    // distance.
    let t_zero = -pole * dir;
    if t_zero > t_lo {
        bps.push(t_zero);
        let mut h = (scale0 * 2f64.powi(-55)).max(t_zero * 1e-16);
        while h < 2.0 * t_zero.max(scale0) {
            if t_zero - h > t_lo {
                bps.push(t_zero - h);
            }
            bps.push(t_zero + h);
            h *= 2.0;
        }
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs());
    let mut edge = *bps.last().unwrap();
    for win in bps.windows(2) {
        let (left, right) = (win[0], win[1]);
        let cell = gl.integrate_real(left, right, |t| t.powf(-g) * f(pole + dir * t));
        acc += cell;
        // Once f's interpolation support ends the integrand is identically
        // zero; switch to the analytic power tail from there.
        if cell == 0.0 && right > 8.0 * (pole.abs().max(scale0)) {
            edge = left;
            break;
        }
    }
    // Slow-tail completion: int_edge^inf t^{-g} C t^{-q} dt.
    let c = if dir > 0.0 { tail.0 } else { tail.1 };
    let q = 1.0 - (s - alpha) / 2.0;
    let expo = g + q - 1.0;
    if expo > 0.0 && c > 0.0 {
        acc += c * edge.powf(-expo) / expo;
    }
    0.5 * alpha * acc
}

/// Largest eigenvalue and Perron vector of the 2x2 pairing matrix.
pub fn perron_rank2(kernel: &TransferKernel) -> (f64, [f64; 2]) {
    let m = kernel.pairing;
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let lambda = 0.5 * (tr + disc);
    // (M - lambda I) v = 0 -> v = (M12, lambda - M11), normalized.
    let mut v = [m[0][1], lambda - m[0][0]];
    if v[0].abs() + v[1].abs() == 0.0 {
        v = [1.0, 0.0];
    }
    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
    (lambda, [v[0] / norm, v[1] / norm])
}

/// The eigenvalue through the `(I_+, I_-)` linear system built from
/// `ell_+ = ell(E)` and `ell_- = conj(ell(E))`:
/// largest root of `det(K [[t_a l+, t_s l+],[t_s l-, t_a l-]] - lambda) = 0`.
pub fn isumi_lambda(consts: &EdgeConstants, ell: Complex64) -> f64 {
    let k = consts.k_alpha_s;
    let (ta, ts) = (consts.t_alpha, consts.t_s);
    let lp = ell;
    let lm = ell.conj();
    let tr = k * (ta * lp + ta * lm);
    let det = k * k * (ta * ta - ts * ts) * (lp * lm);
    // Both trace and determinant are real; the quadratic has a unique
    // positive root.
    let disc = (tr * tr - 4.0 * det).sqrt();
    0.5 * (tr + disc).re
}

pub struct PowerIteration {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub eigenfunction: Vec<f64>,
}

/// Power iteration on the grid representation starting from the
/// weight-normalized positive constant.
pub fn perron_grid(
    kernel: &TransferKernel,
    max_iters: usize,
) -> Result<PowerIteration, TransferError> {
    let mut f: Vec<f64> = kernel.grid.iter().map(|&x| 1.0 / kernel.weight(x)).collect();
    let mut norm = kernel.norm(&f);
    for v in &mut f {
        *v /= norm;
    }
    let mut lambda_prev = f64::NAN;
    for it in 0..max_iters {
        let tf = kernel.apply(&f);
        let tf_norm = kernel.norm(&tf);
        let lambda = tf_norm;
        let residual = {
            let mut diff = tf.clone();
            for (d, v) in diff.iter_mut().zip(&f) {
                *d -= lambda * v;
            }
            kernel.norm(&diff) / kernel.norm(&f).max(1e-300)
        };
        f = tf;
        norm = tf_norm;
        for v in &mut f {
            *v /= norm;
        }
        if it > 1 && (lambda - lambda_prev).abs() < 1e-10 * lambda {
            if residual / lambda > 1e-6 {
                return Err(TransferError::OscillatingRatios {
                    last: lambda,
                    prev: lambda_prev,
                });
            }
            return Ok(PowerIteration {
                lambda,
                iterations: it + 1,
                residual: residual / lambda,
                eigenfunction: f,
            });
        }
        lambda_prev = lambda;
    }
    Err(TransferError::OscillatingRatios {
        last: lambda_prev,
        prev: f64::NAN,
    })
}
