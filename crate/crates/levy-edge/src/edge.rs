//! The deterministic mobility-edge pipeline.
//!
//! Chain: the boundary pair `(a(E), b(E))` solves the fixed point
//! `a = F_{alpha/2}(E,a,b)`, `b = G_{alpha/2}(E,a,b)` with
//!
//! ```text
//! F_g(E,x,y) = E[ (E + x^{2/a} S - y^{2/a} T)_-^{-g} ],
//! G_g(E,x,y) = E[ (E + x^{2/a} S - y^{2/a} T)_+^{-g} ];
//! ```
//!
//! from the pair one forms `ell(E)` (two independent routes), then the
//! Perron-Frobenius eigenvalue
//!
//! ```text
//! lambda(E,s,alpha) = K_{alpha,s} ( t_a Re l + sqrt( t_s^2 (Re l)^2 + (t_s^2 - t_a^2) (Im l)^2 ) ),
//! ```
//!
//! and the mobility edge is the largest root of `lambda(E, alpha) = 1`.
//!
//! Two implementations of `(F_g, G_g)` are kept deliberately:
//!
//! * [`fg_gamma`] integrates `|E+w|^{-g}` against the two-sided stable
//!   density with a power-law substitution at the pole (slow, transparent);
//! * [`fg_gamma_laplace`] uses the boundary-value identity
//!   `E[(E+kappa+i0)^{-g}] = G_g + e^{-i pi g} F_g` together with the rotated
//!   contour for `int t^{g-1} e^{itE} p_hat(t) dt`, which is fast and stable
//!   at every scale of `E`. The two agree to quadrature accuracy and are
//!   cross-checked in the tests; the root scans use the second.
//!
//! Below `alpha ~ 0.15` the fixed point collapses onto exponential
//! functionals of Gumbel variables and the closed forms `F~`, `G~` take over
//! (`method = SmallAlpha`).

use crate::kappa::KappaDensity;
use crate::quad::{power_exp_contour, GaussLegendre};
use crate::rde::{ab_at_zero, BoundaryPair, BoundarySource};
use crate::special::gamma;
use crate::stable::cf_rate;
use num_complex::Complex64;
use std::fmt;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeError {
    InvalidArguments(String),
    FixedPointNonConvergence { energy: f64, residual: f64 },
    QuadratureNonConvergence { what: &'static str },
    RouteDisagreement { fourier: Complex64, moment: Complex64, rel: f64 },
    NoBracket { alpha: f64, scanned_to: f64 },
}

impl fmt::Display for EdgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeError::InvalidArguments(s) => write!(f, "invalid arguments: {s}"),
            EdgeError::FixedPointNonConvergence { energy, residual } => {
                write!(f, "fixed point at E={energy} stalled (residual {residual:.3e})")
            }
            EdgeError::QuadratureNonConvergence { what } => {
                write!(f, "{what} quadrature failed to converge")
            }
            EdgeError::RouteDisagreement { fourier, moment, rel } => write!(
                f,
                "ell routes disagree: fourier={fourier}, moment={moment}, rel={rel:.3e}"
            ),
            EdgeError::NoBracket { alpha, scanned_to } => write!(
                f,
                "no sign change of lambda-1 found for alpha={alpha} up to E={scanned_to:.3e}"
            ),
        }
    }
}

impl std::error::Error for EdgeError {}

/// `K_alpha`, `K_{alpha,s}`, `t_alpha`, `t_s` bundle.
#[derive(Debug, Clone, Copy)]
pub struct EdgeConstants {
    pub alpha: f64,
    pub s: f64,
    pub k_alpha: f64,
    pub k_alpha_s: f64,
    pub t_alpha: f64,
    pub t_s: f64,
}

impl EdgeConstants {
    pub fn new(alpha: f64, s: f64) -> Result<Self, EdgeError> {
        if !(alpha > 0.0 && alpha < 1.0 && s > alpha && s <= 1.0) {
            return Err(EdgeError::InvalidArguments(format!(
                "need 0 < alpha < s <= 1, got alpha={alpha}, s={s}"
            )));
        }
        Ok(EdgeConstants {
            alpha,
            s,
            k_alpha: 0.5 * alpha * gamma((1.0 - alpha) / 2.0).powi(2),
            k_alpha_s: 0.5 * alpha * gamma((s - alpha) / 2.0) * gamma(1.0 - (alpha + s) / 2.0),
            t_alpha: (PI * alpha / 2.0).sin(),
            t_s: (PI * s / 2.0).sin(),
        })
    }
}

/// How an edge solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMethod {
    Quad,
    Mc,
    SmallAlpha,
}

impl fmt::Display for EdgeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeMethod::Quad => write!(f, "quad"),
            EdgeMethod::Mc => write!(f, "mc"),
            EdgeMethod::SmallAlpha => write!(f, "smallalpha"),
        }
    }
}

/// One solved energy: the pair, ell, and the eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSolution {
    pub energy: f64,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub ell: Complex64,
    pub lambda_s: f64,
    pub lambda: f64,
    pub method: EdgeMethod,
}

// ---------------------------------------------------------------------------
// F_gamma / G_gamma
// ---------------------------------------------------------------------------

/// Contour-integral route. Exact identity: for `kappa` the stable law of
/// `x^{2/a} S - y^{2/a} T` (index `a/2`, scale `(x+y)^{2/a}`, skewness
/// `(x-y)/(x+y)`),
///
/// ```text
/// Psi = E[(E + kappa + i0)^{-g}]
///     = e^{-i pi g/2} / Gamma(g) * int_0^inf t^{g-1} e^{itE} p_hat(t) dt
///     = G_g + e^{-i pi g} F_g,
/// ```
///
/// so `F_g = -Im Psi / sin(pi g)` and `G_g = Re Psi - cos(pi g) F_g`.
pub fn fg_gamma_laplace(
    energy: f64,
    x: f64,
    y: f64,
    g: f64,
    alpha: f64,
) -> Result<(f64, f64), EdgeError> {
    validate_fg_args(x, y, g, alpha)?;
    if energy < 0.0 {
        // F_g(E,x,y) = G_g(-E,y,x) and vice versa.
        let (fv, gv) = fg_gamma_laplace(-energy, y, x, g, alpha)?;
        return Ok((gv, fv));
    }
    let beta = alpha / 2.0;
    let sigma_beta = x + y; // scale^beta of kappa
    let skew = (x - y) / (x + y);
    let u_beta = (PI * beta / 2.0).tan();
    let w = Complex64::new(1.0, -skew * u_beta) * (cf_rate(beta) * sigma_beta);
    let integral = power_exp_contour(g, beta, Complex64::new(energy, 0.0), w);
    let psi = Complex64::from_polar(1.0, -0.5 * PI * g) * integral / gamma(g);
    let f_val = (-psi.im / (PI * g).sin()).max(0.0);
    let g_val = (psi.re - (PI * g).cos() * f_val).max(0.0);
    Ok((f_val, g_val))
}

fn validate_fg_args(x: f64, y: f64, g: f64, alpha: f64) -> Result<(), EdgeError> {
    if !(x >= 0.0 && y >= 0.0 && x + y > 0.0) {
        return Err(EdgeError::InvalidArguments(format!(
            "need x, y >= 0 and not both zero, got x={x}, y={y}"
        )));
    }
    if !(g > 0.0 && g < 1.0) {
        return Err(EdgeError::InvalidArguments(format!(
            "moment exponent gamma={g} outside (0, 1)"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EdgeError::InvalidArguments(format!(
            "alpha={alpha} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Density-quadrature route: integrate `|E+w|^{-g}` against the tabulated
/// density of `kappa`, removing the pole at `w = -E` with the substitution
/// `w = -E -+ v^{1/(1-g)}`.
pub fn fg_gamma(
    energy: f64,
    x: f64,
    y: f64,
    g: f64,
    alpha: f64,
) -> Result<(f64, f64), EdgeError> {
    validate_fg_args(x, y, g, alpha)?;
    let kd = KappaDensity::new(x, y, alpha, energy.abs().max(1.0))
        .map_err(|_| EdgeError::QuadratureNonConvergence { what: "kappa density" })?;
    let f_val = fg_one_side(&kd, energy, g, Side::Minus)?;
    let g_val = fg_one_side(&kd, energy, g, Side::Plus)?;
    Ok((f_val, g_val))
}

/// `F_gamma`/`G_gamma` against an already-built density table.
pub fn fg_gamma_with(
    kd: &KappaDensity,
    energy: f64,
    g: f64,
) -> Result<(f64, f64), EdgeError> {
    let f_val = fg_one_side(kd, energy, g, Side::Minus)?;
    let g_val = fg_one_side(kd, energy, g, Side::Plus)?;
    Ok((f_val, g_val))
}

enum Side {
    /// integrate over w < -E (the F functional)
    Minus,
    /// integrate over w > -E (the G functional)
    Plus,
}

fn fg_one_side(kd: &KappaDensity, energy: f64, g: f64, side: Side) -> Result<f64, EdgeError> {
    let pole = -energy;
    let dir = match side {
        Side::Minus => -1.0,
        Side::Plus => 1.0,
    };
    Ok(frac_moment_integral(kd, pole, dir, g))
}

/// `int_0^inf t^{-g} p(pole + dir t) dt` for `g` in (0,1): the building block
/// of both `F_gamma`/`G_gamma` and the transfer-kernel functions `F_1`/`F_2`
/// (the latter use `g = 1 - (s-alpha)/2`).
pub(crate) fn frac_moment_integral(kd: &KappaDensity, pole: f64, dir: f64, g: f64) -> f64 {
    let sigma = kd.scale();
    let outer = sigma.max(pole.abs());
    // Everything in t = |w - pole|. Two structures need dedicated
    // resolution: the integrable pole at t = 0 and the density's narrow
    // concentration around w = 0 (t = t_zero when that point lies on this
    // side). Cells are geometric around both.
    let t_lo = (sigma.min(outer) * 1e-14).max(1e-290);
    let mut acc = kd.density(pole + dir * 0.5 * t_lo) * t_lo.powf(1.0 - g) / (1.0 - g);

    let mut bps: Vec<f64> = Vec::new();
    let mut t = t_lo;
    while t < 1e280 {
        bps.push(t);
        t *= 2.0;
    }
    let t_zero = -pole * dir; // distance to w = 0 along this side
    if t_zero > t_lo {
        // Geometric ladder around the crossing, from below the table floor up
        // to the crossing distance itself: the density bulk around w = 0
        // spans all those octaves.
        bps.push(t_zero);
        let mut h = (kd.w_floor() * 0.5).max(t_zero * 1e-16);
        while h < 2.0 * t_zero.max(sigma) {
            if t_zero - h > t_lo {
                bps.push(t_zero - h);
            }
            bps.push(t_zero + h);
            h *= 2.0;
        }
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs());

    let gl = GaussLegendre::new(24);
    let beta = kd.alpha / 2.0;
    for win in bps.windows(2) {
        let (left, right) = (win[0], win[1]);
        let cell = gl.integrate_real(left, right, |t| t.powf(-g) * kd.density(pole + dir * t));
        acc += cell;
        // Remainder bound once both factors are in the power regime:
        // int_L^inf t^{-g} c |w(t)|^{-1-beta} dt <= c' L^{-g-beta}.
        if right > 4.0 * outer {
            let c = kd.tail(dir * right) * right.powf(1.0 + beta);
            let remainder = c * right.powf(-g - beta) / (g + beta);
            if remainder < 1e-13 * acc.max(1e-300) {
                break;
            }
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Fixed point for (a(E), b(E))
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AbSolution {
    pub pair: BoundaryPair,
    pub residual: f64,
    pub iterations: usize,
    /// All distinct fixed points located by the multi-start sweep.
    pub all: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Secant (Anderson depth-1) acceleration after this many iterations.
    pub accelerate_after: usize,
    pub warm_start: Option<(f64, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 600,
            damping: 0.5,
            accelerate_after: 20,
            warm_start: None,
        }
    }
}

/// Damped fixed-point iteration for `a = F_{a/2}(E,a,b)`, `b = G_{a/2}(E,a,b)`
/// with multi-start and optional warm start. Negative energies use the
/// `E <-> -E`, `a <-> b` symmetry.
pub fn solve_ab(energy: f64, alpha: f64, opts: &SolveOptions) -> Result<AbSolution, EdgeError> {
    if energy < 0.0 {
        let mirrored = solve_ab(-energy, alpha, &SolveOptions {
            warm_start: opts.warm_start.map(|(a, b)| (b, a)),
            ..*opts
        })?;
        return Ok(AbSolution {
            pair: BoundaryPair {
                energy,
                a: mirrored.pair.b,
                b: mirrored.pair.a,
                source: BoundarySource::FixedPoint,
            },
            all: mirrored.all.iter().map(|&(a, b)| (b, a)).collect(),
            ..mirrored
        });
    }
    let g = alpha / 2.0;
    let mut starts: Vec<(f64, f64)> = Vec::new();
    if let Some(wsd) = opts.warm_start {
        starts.push(wsd);
    }
    let ab0 = ab_at_zero(alpha);
    starts.push((ab0, ab0));
    starts.push((0.5, 0.5));
    if energy > 1.0 {
        let be = energy.powf(-alpha / 2.0);
        starts.push((1e-3 * be, be));
    }

    let mut found: Vec<(f64, f64, f64, usize)> = Vec::new(); // (a, b, residual, iters)
    for &(a0, b0) in &starts {
        if let Some(sol) = iterate_ab(energy, alpha, g, a0, b0, opts) {
            let dup = found
                .iter()
                .any(|&(a, b, _, _)| (a - sol.0).abs() + (b - sol.1).abs() < 1e-6 * (a + b + 1.0));
            if !dup {
                found.push(sol);
            }
        }
    }
    if found.is_empty() {
        // Report the best stalled residual.
        return Err(EdgeError::FixedPointNonConvergence {
            energy,
            residual: f64::NAN,
        });
    }
    let best = found[0];
    Ok(AbSolution {
        pair: BoundaryPair {
            energy,
            a: best.0,
            b: best.1,
            source: BoundarySource::FixedPoint,
        },
        residual: best.2,
        iterations: best.3,
        all: found.iter().map(|&(a, b, _, _)| (a, b)).collect(),
    })
}

fn iterate_ab(
    energy: f64,
    alpha: f64,
    g: f64,
    a0: f64,
    b0: f64,
    opts: &SolveOptions,
) -> Option<(f64, f64, f64, usize)> {
    let mut a = a0.max(1e-12);
    let mut b = b0.max(1e-12);
    let mut prev: Option<([f64; 2], [f64; 2])> = None; // (x, f(x) - x)
    for it in 0..opts.max_iter {
        let (fa, gb) = fg_gamma_laplace(energy, a, b, g, alpha).ok()?;
        let res = [fa - a, gb - b];
        let rn = res[0].abs().max(res[1].abs());
        if rn < opts.tol * (1.0 + a.abs() + b.abs()) {
            return Some((a, b, rn, it));
        }
        let (mut na, mut nb) = (
            a + opts.damping * res[0],
            b + opts.damping * res[1],
        );
        if it >= opts.accelerate_after {
            if let Some((px, pf)) = prev {
                // Depth-1 Anderson mixing on the residual sequence.
                let df = [res[0] - pf[0], res[1] - pf[1]];
                let denom = df[0] * df[0] + df[1] * df[1];
                if denom > 1e-30 {
                    let theta = (res[0] * df[0] + res[1] * df[1]) / denom;
                    let theta = theta.clamp(-5.0, 5.0);
                    na = a + res[0] - theta * ((a + res[0]) - (px[0] + pf[0]));
                    nb = b + res[1] - theta * ((b + res[1]) - (px[1] + pf[1]));
                }
            }
        }
        prev = Some(([a, b], res));
        a = na.max(0.0);
        b = nb.max(0.0);
        if a == 0.0 && b == 0.0 {
            return None;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// ell(E) by two routes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllRoute {
    /// Oscillatory integral `(1/pi) int_0^inf e^{iE xi} xi^{alpha-1} p_hat(xi) d xi`
    /// evaluated on the rotated contour.
    Fourier,
    /// Moment formulas `Re l = Gamma(a) cos(pi a/2) (F_a + G_a) / pi`,
    /// `Im l = Gamma(a) sin(pi a/2) (G_a - F_a) / pi` with `(F_a, G_a)` from
    /// the density quadrature.
    Moment,
}

/// `ell(E)` for the pair `(a, b)`; the two routes are algorithmically
/// independent (contour integral of the characteristic function vs. density
/// quadrature of the fractional moments).
pub fn ell(
    energy: f64,
    alpha: f64,
    pair: &BoundaryPair,
    route: EllRoute,
) -> Result<Complex64, EdgeError> {
    match route {
        EllRoute::Fourier => ell_fourier(energy, alpha, pair.a, pair.b),
        EllRoute::Moment => {
            let (f_a, g_a) = fg_gamma(energy, pair.a, pair.b, alpha, alpha)?;
            Ok(ell_from_moments(alpha, f_a, g_a))
        }
    }
}

/// Both routes with a relative-agreement check.
pub fn ell_checked(
    energy: f64,
    alpha: f64,
    pair: &BoundaryPair,
    rel_tol: f64,
) -> Result<Complex64, EdgeError> {
    let four = ell(energy, alpha, pair, EllRoute::Fourier)?;
    let mom = ell(energy, alpha, pair, EllRoute::Moment)?;
    let rel = (four - mom).norm() / four.norm().max(1e-300);
    if rel > rel_tol {
        return Err(EdgeError::RouteDisagreement {
            fourier: four,
            moment: mom,
            rel,
        });
    }
    Ok(four)
}

fn ell_fourier(energy: f64, alpha: f64, a: f64, b: f64) -> Result<Complex64, EdgeError> {
    if a + b <= 0.0 {
        return Err(EdgeError::InvalidArguments("a + b must be positive".into()));
    }
    let beta = alpha / 2.0;
    let skew = (a - b) / (a + b);
    let u_beta = (PI * beta / 2.0).tan();
    let w = Complex64::new(1.0, -skew * u_beta) * (cf_rate(beta) * (a + b));
    if energy >= 0.0 {
        Ok(power_exp_contour(alpha, beta, Complex64::new(energy, 0.0), w) / PI)
    } else {
        // ell(-E) = conj(ell(E)) with the sides swapped (kappa -> -kappa).
        let swapped = ell_fourier(-energy, alpha, b, a)?;
        Ok(swapped.conj())
    }
}

/// Assemble `ell` from the alpha-moments of `R_loc`:
/// `E|R_loc|^a = F_a + G_a` and `E[|R_loc|^a sgn(-R_loc)] = G_a - F_a`.
pub fn ell_from_moments(alpha: f64, f_a: f64, g_a: f64) -> Complex64 {
    let pref = gamma(alpha) / PI;
    Complex64::new(
        pref * (PI * alpha / 2.0).cos() * (f_a + g_a),
        pref * (PI * alpha / 2.0).sin() * (g_a - f_a),
    )
}

// ---------------------------------------------------------------------------
// lambda
// ---------------------------------------------------------------------------

/// Positive root of
/// `l^2 - 2 t_a K Re(ell) l + K^2 (t_a^2 - t_s^2) |ell|^2 = 0`,
/// in the closed form `K (t_a Re l + sqrt(t_s^2 (Re l)^2 + (t_s^2 - t_a^2) (Im l)^2))`.
pub fn lambda_from_ell(k: f64, t_alpha: f64, t_s: f64, ell: Complex64) -> f64 {
    let re = ell.re;
    let im = ell.im;
    k * (t_alpha * re + (t_s * t_s * re * re + (t_s * t_s - t_alpha * t_alpha) * im * im).sqrt())
}

/// Same root via the quadratic formula (kept as an independent algebraic
/// route for the identity tests).
pub fn lambda_from_quadratic(k: f64, t_alpha: f64, t_s: f64, ell: Complex64) -> f64 {
    let bq = -2.0 * t_alpha * k * ell.re;
    let cq = k * k * (t_alpha * t_alpha - t_s * t_s) * ell.norm_sqr();
    // c < 0, so the roots are real with opposite signs; take the positive one.
    let disc = (bq * bq - 4.0 * cq).sqrt();
    let q = -0.5 * (bq + bq.signum() * disc);
    let r1 = q;
    let r2 = cq / q;
    r1.max(r2)
}

pub fn lambda_s_value(energy_constants: &EdgeConstants, ell: Complex64) -> f64 {
    lambda_from_ell(
        energy_constants.k_alpha_s,
        energy_constants.t_alpha,
        energy_constants.t_s,
        ell,
    )
}

pub fn lambda_value(alpha: f64, ell: Complex64) -> f64 {
    let t_alpha = (PI * alpha / 2.0).sin();
    let k_alpha = 0.5 * alpha * gamma((1.0 - alpha) / 2.0).powi(2);
    lambda_from_ell(k_alpha, t_alpha, 1.0, ell)
}

/// Closed form
/// `lambda(0,alpha) = [alpha/(2 sin(pi a/2))] Gamma((1-a)/2)^2 Gamma(1-a/2)^{-2} (sin(pi a/2)+1)`.
pub fn lambda_zero_closed(alpha: f64) -> f64 {
    let sa = (PI * alpha / 2.0).sin();
    alpha / (2.0 * sa) * gamma((1.0 - alpha) / 2.0).powi(2) * gamma(1.0 - alpha / 2.0).powi(-2)
        * (sa + 1.0)
}

/// Full pipeline at one energy: fixed point, ell (contour route), lambda and
/// lambda_s.
pub fn solve_energy(
    energy: f64,
    alpha: f64,
    s: f64,
    opts: &SolveOptions,
) -> Result<EdgeSolution, EdgeError> {
    let consts = EdgeConstants::new(alpha, s)?;
    let sol = solve_ab(energy, alpha, opts)?;
    let l = ell_fourier(energy, alpha, sol.pair.a, sol.pair.b)?;
    let lam = lambda_value(alpha, l);
    let lam_s = if s < 1.0 {
        lambda_s_value(&consts, l)
    } else {
        lam
    };
    Ok(EdgeSolution {
        energy,
        a: sol.pair.a,
        b: sol.pair.b,
        residual: sol.residual,
        ell: l,
        lambda_s: lam_s,
        lambda: lam,
        method: EdgeMethod::Quad,
    })
}

// ---------------------------------------------------------------------------
// Small-alpha closed forms (Gumbel regime)
// ---------------------------------------------------------------------------

/// Which tilde functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TildeKind {
    /// `F~_{alpha/2}`
    FHalf,
    /// `G~_{alpha/2}`
    GHalf,
    /// `F~_alpha`
    FAlpha,
    /// `G~_alpha`
    GAlpha,
}

/// Closed-form Gumbel-limit functionals (`u = E^{alpha/2}`):
///
/// ```text
/// F~_{a/2}(u,x,y) = y/(x+y)^2 - e^{-(x+y)/u} ( y/(x+y)^2 + y/((x+y)u) )
/// G~_{a/2}(u,x,y) = x/(x+y)^2 + e^{-(x+y)/u} ( y/(u(x+y)) - x/(x+y)^2 )
/// ```
///
/// and their gamma = alpha analogues obtained the same way (integrating
/// `t^2 e^{-t}` instead of `t e^{-t}` against the Gumbel layers); the sum
/// `F~_a + G~_a = 2/(x+y)^2 - 2 (1/(u(x+y)) + 1/(x+y)^2) e^{-(x+y)/u}`
/// is used as an identity check in the tests.
pub fn fg_tilde(u: f64, x: f64, y: f64, which: TildeKind) -> f64 {
    assert!(u > 0.0 && x > 0.0 && y > 0.0);
    let s = x + y;
    let e = (-s / u).exp();
    match which {
        TildeKind::FHalf => y / (s * s) - e * (y / (s * s) + y / (s * u)),
        TildeKind::GHalf => x / (s * s) + e * (y / (u * s) - x / (s * s)),
        TildeKind::FAlpha => {
            // y^{-2} [ e^{-x/u} gam2(y/u) + int_0^{x/u} e^{-t} gam2(y t / x) dt ]
            let gam2 = |m: f64| 2.0 - (-m).exp() * (m * m + 2.0 * m + 2.0);
            let k = s / x;
            let x_over_u = x / u;
            let i0 = (1.0 - (-k * x_over_u).exp()) / k;
            let i1 = (1.0 - (-k * x_over_u).exp() * (k * x_over_u + 1.0)) / (k * k);
            let i2 = gam2(k * x_over_u) / (k * k * k);
            let c = y / x;
            let inner = 2.0 * (1.0 - (-x_over_u).exp()) - (c * c * i2 + 2.0 * c * i1 + 2.0 * i0);
            ((-x_over_u).exp() * gam2(y / u) + inner) / (y * y)
        }
        TildeKind::GAlpha => {
            let gam2 = |m: f64| 2.0 - (-m).exp() * (m * m + 2.0 * m + 2.0);
            let k = s / x;
            let x_over_u = x / u;
            gam2(k * x_over_u) / (k * k * k) / (x * x) + e / (u * u)
        }
    }
}

/// Fixed point of the tilde system at `u = E^{alpha/2}`.
pub fn solve_ab_tilde(u: f64) -> Result<(f64, f64), EdgeError> {
    let (mut a, mut b) = (0.5f64, 0.5f64);
    for _ in 0..500 {
        let fa = fg_tilde(u, a, b, TildeKind::FHalf);
        let gb = fg_tilde(u, a, b, TildeKind::GHalf);
        let res = (fa - a).abs().max((gb - b).abs());
        a += 0.7 * (fa - a);
        b += 0.7 * (gb - b);
        if res < 1e-13 {
            return Ok((a, b));
        }
    }
    Err(EdgeError::FixedPointNonConvergence {
        energy: u,
        residual: f64::NAN,
    })
}

/// `lambda(E, alpha)` in the Gumbel regime, as a function of `u = E^{alpha/2}`.
pub fn lambda_tilde(u: f64, alpha: f64) -> Result<(f64, f64, f64), EdgeError> {
    let (a, b) = solve_ab_tilde(u)?;
    let m = fg_tilde(u, a, b, TildeKind::FAlpha) + fg_tilde(u, a, b, TildeKind::GAlpha);
    let n = fg_tilde(u, a, b, TildeKind::GAlpha) - fg_tilde(u, a, b, TildeKind::FAlpha);
    let t_a = (PI * alpha / 2.0).sin();
    let k_a = 0.5 * alpha * gamma((1.0 - alpha) / 2.0).powi(2);
    let root = (1.0 - t_a * t_a).sqrt();
    let lam = k_a * gamma(alpha) / PI
        * (t_a * root * m + root * (m * m + t_a * t_a * n * n).sqrt());
    Ok((lam, a, b))
}

/// `c_star = 4 log 2 + pi`, the first-order coefficient in
/// `E|R_loc(E_mob)|^alpha = 2 - c_star alpha + O(alpha^2)`.
pub fn c_star() -> f64 {
    4.0 * std::f64::consts::LN_2 + PI
}

// ---------------------------------------------------------------------------
// Mobility edge
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MobilityEdge {
    pub alpha: f64,
    pub e_mob: f64,
    pub bracket: (f64, f64),
    pub all_roots: Vec<f64>,
    pub method: EdgeMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
    pub root_tol: f64,
    /// Use the Gumbel closed forms below this alpha.
    pub small_alpha_switch: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            e_min: 1e-6,
            e_max: 1e3,
            points: 400,
            root_tol: 1e-6,
            small_alpha_switch: 0.15,
        }
    }
}

/// Largest root of `lambda(E, alpha) = 1` plus every sign change found.
pub fn mobility_edge(alpha: f64, scan: &ScanOptions) -> Result<MobilityEdge, EdgeError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EdgeError::InvalidArguments(format!("alpha={alpha}")));
    }
    if alpha <= scan.small_alpha_switch {
        return mobility_edge_small_alpha(alpha, scan);
    }
    let opts = SolveOptions::default();
    let mut e_max = scan.e_max;
    for _expansion in 0..4 {
        // March up a log grid with warm starts; E = 0 anchors lambda > 1.
        let mut energies = vec![0.0f64];
        let n = scan.points;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            energies.push(scan.e_min * (e_max / scan.e_min).powf(t));
        }
        let mut lambdas = Vec::with_capacity(energies.len());
        let mut warm: Option<(f64, f64)> = None;
        for &e in &energies {
            let sol = solve_ab(e, alpha, &SolveOptions { warm_start: warm, ..opts })?;
            warm = Some((sol.pair.a, sol.pair.b));
            let l = ell_fourier(e, alpha, sol.pair.a, sol.pair.b)?;
            lambdas.push(lambda_value(alpha, l));
        }
        let mut roots = Vec::new();
        let mut bracket = (0.0, 0.0);
        for i in 1..energies.len() {
            let (f0, f1) = (lambdas[i - 1] - 1.0, lambdas[i] - 1.0);
            if f0 == 0.0 {
                roots.push(energies[i - 1]);
            } else if f0 * f1 < 0.0 {
                let lo = energies[i - 1].max(scan.e_min * 0.5);
                let root = refine_root(alpha, lo, energies[i], scan.root_tol, &opts)?;
                roots.push(root);
                bracket = (energies[i - 1], energies[i]);
            }
        }
        if !roots.is_empty() {
            let e_mob = *roots.last().unwrap();
            return Ok(MobilityEdge {
                alpha,
                e_mob,
                bracket,
                all_roots: roots,
                method: EdgeMethod::Quad,
            });
        }
        if *lambdas.last().unwrap() > 1.0 {
            e_max *= 100.0;
            continue;
        }
        break;
    }
    Err(EdgeError::NoBracket {
        alpha,
        scanned_to: e_max,
    })
}

fn lambda_at(energy: f64, alpha: f64, opts: &SolveOptions) -> Result<f64, EdgeError> {
    let sol = solve_ab(energy, alpha, opts)?;
    let l = ell_fourier(energy, alpha, sol.pair.a, sol.pair.b)?;
    Ok(lambda_value(alpha, l))
}

/// Bisection with secant speedups (Brent-lite) on `lambda(E) - 1`.
fn refine_root(
    alpha: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    opts: &SolveOptions,
) -> Result<f64, EdgeError> {
    let mut f_lo = lambda_at(lo, alpha, opts)? - 1.0;
    let mut f_hi = lambda_at(hi, alpha, opts)? - 1.0;
    if f_lo * f_hi > 0.0 {
        return Err(EdgeError::NoBracket { alpha, scanned_to: hi });
    }
    for _ in 0..200 {
        // Secant candidate clipped into the bracket interior.
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let width = hi - lo;
        if !(mid > lo + 0.01 * width && mid < hi - 0.01 * width) {
            mid = 0.5 * (lo + hi);
        }
        let f_mid = lambda_at(mid, alpha, opts)? - 1.0;
        if f_mid.abs() < tol || (hi - lo) < 1e-12 * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if f_lo * f_mid <= 0.0 {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn mobility_edge_small_alpha(alpha: f64, scan: &ScanOptions) -> Result<MobilityEdge, EdgeError> {
    // lambda is a function of u = E^{alpha/2}; scan u over (0, 1.5] and refine.
    let n = 600usize;
    let u_min = 0.02;
    let u_max = 1.5;
    let mut prev_u = u_min;
    let mut prev_f = lambda_tilde(prev_u, alpha)?.0 - 1.0;
    let mut roots_u = Vec::new();
    for i in 1..=n {
        let u = u_min + (u_max - u_min) * i as f64 / n as f64;
        let f = lambda_tilde(u, alpha)?.0 - 1.0;
        if prev_f * f < 0.0 {
            let (mut lo, mut hi, mut f_lo) = (prev_u, u, prev_f);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = lambda_tilde(mid, alpha)?.0 - 1.0;
                if fm.abs() < scan.root_tol {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if f_lo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    f_lo = fm;
                }
            }
            roots_u.push(0.5 * (lo + hi));
        }
        prev_u = u;
        prev_f = f;
    }
    if roots_u.is_empty() {
        return Err(EdgeError::NoBracket {
            alpha,
            scanned_to: u_max,
        });
    }
    let u_root = *roots_u.last().unwrap();
    Ok(MobilityEdge {
        alpha,
        e_mob: u_root.powf(2.0 / alpha),
        bracket: (
            (u_root * 0.99).powf(2.0 / alpha),
            (u_root * 1.01).powf(2.0 / alpha),
        ),
        all_roots: roots_u.iter().map(|u| u.powf(2.0 / alpha)).collect(),
        method: EdgeMethod::SmallAlpha,
    })
}

// ---------------------------------------------------------------------------
// Asymptotic regime report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub alpha: f64,
    pub e_mob: f64,
    /// `(1 - alpha) E_mob` for the near-one regime.
    pub near_one_scale: Option<f64>,
    /// Relative error of `K_alpha ~ 2 alpha / (1-alpha)^2` near one.
    pub k_alpha_rel_err: Option<f64>,
    /// `u = E_mob^{alpha/2}` and the predicted `1/|log alpha|` for small alpha.
    pub small_alpha_u: Option<(f64, f64)>,
    /// `E|R_loc|^alpha` at the edge and the prediction `2 - c_star alpha`.
    pub moment_at_edge: Option<(f64, f64)>,
    /// Residuals of the reduced system `d = d^{-1}(1 - e^{-d/u})` and
    /// `e^{-d/u}/u = (c_star/2) alpha d`.
    pub reduced_residuals: Option<(f64, f64)>,
    pub band_ok: bool,
}

/// Compare the computed edge with the predictions of whichever asymptotic
/// regime the given alpha belongs to.
pub fn edge_asymptotics(alpha: f64, scan: &ScanOptions) -> Result<AsymptoticsReport, EdgeError> {
    let me = mobility_edge(alpha, scan)?;
    let mut report = AsymptoticsReport {
        alpha,
        e_mob: me.e_mob,
        near_one_scale: None,
        k_alpha_rel_err: None,
        small_alpha_u: None,
        moment_at_edge: None,
        reduced_residuals: None,
        band_ok: true,
    };
    if alpha >= 0.9 {
        let scale = (1.0 - alpha) * me.e_mob;
        let k_alpha = 0.5 * alpha * gamma((1.0 - alpha) / 2.0).powi(2);
        let k_approx = 2.0 * alpha / ((1.0 - alpha) * (1.0 - alpha));
        report.near_one_scale = Some(scale);
        report.k_alpha_rel_err = Some((k_alpha - k_approx).abs() / k_alpha);
        report.band_ok = scale > 0.05 && scale < 20.0;
    }
    if alpha <= 0.2 {
        let u = me.e_mob.powf(alpha / 2.0);
        let u_pred = 1.0 / alpha.ln().abs();
        let (lam, a, b) = lambda_tilde(u, alpha)?;
        debug_assert!((lam - 1.0).abs() < 1e-4);
        let m = fg_tilde(u, a, b, TildeKind::FAlpha) + fg_tilde(u, a, b, TildeKind::GAlpha);
        let m_pred = 2.0 - c_star() * alpha;
        let d = a + b;
        let r1 = (d - (1.0 - (-d / u).exp()) / d).abs();
        // Substituting the summed equation into the moment identity gives
        // e^{-d/u}/u = (c_star/2) alpha d up to O(alpha^2 log^2 alpha).
        let r2 = ((-d / u).exp() / u - 0.5 * c_star() * alpha * d).abs();
        report.small_alpha_u = Some((u, u_pred));
        report.moment_at_edge = Some((m, m_pred));
        report.reduced_residuals = Some((r1, r2));
        let band = alpha.ln().abs().ln() / alpha.ln().abs().powi(2) * 5.0;
        report.band_ok = report.band_ok && (u - u_pred).abs() <= band;
    }
    Ok(report)
}
