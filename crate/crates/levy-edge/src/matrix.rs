//! Finite Lévy-matrix laboratory: sampling, resolvent diagonals,
//! eigenvector statistics, and the localization/delocalization diagnostic.

use crate::linalg::{cholesky, cholesky_solve, invert_complex, matmul, sym_eigen, SymEigen};
use crate::rng::Rng;
use crate::stable::StableParams;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixError {
    InvalidArguments(String),
    EmptyInterval { lo: f64, hi: f64 },
    Eigensolver(&'static str),
    IllConditioned,
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::InvalidArguments(s) => write!(f, "invalid arguments: {s}"),
            MatrixError::EmptyInterval { lo, hi } => {
                write!(f, "no eigenvalues in [{lo}, {hi}]")
            }
            MatrixError::Eigensolver(s) => write!(f, "eigensolver failed: {s}"),
            MatrixError::IllConditioned => write!(f, "resolvent solve is ill-conditioned"),
        }
    }
}

impl std::error::Error for MatrixError {}

/// Symmetric matrix with i.i.d. `N^{-1/alpha} X` entries, `X` the
/// `(alpha; 1; 0)`-stable law.
pub struct LevyMatrix {
    pub n: usize,
    pub alpha: f64,
    /// Row-major storage, exactly symmetric.
    pub entries: Vec<f64>,
}

pub fn sample_matrix(n: usize, alpha: f64, seed: u64) -> Result<LevyMatrix, MatrixError> {
    if n < 2 {
        return Err(MatrixError::InvalidArguments(format!("N={n} too small")));
    }
    let law = StableParams::new(alpha, 1.0, 0.0)
        .map_err(|e| MatrixError::InvalidArguments(e.to_string()))?;
    let scale = (n as f64).powf(-1.0 / alpha);
    let mut rng = Rng::stream(seed, &[0x3a7]);
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let x = law.sample_one(&mut rng) * scale;
            m[i * n + j] = x;
            m[j * n + i] = x;
        }
    }
    Ok(LevyMatrix {
        n,
        alpha,
        entries: m,
    })
}

/// Selected diagonal resolvent entries `G_jj(z)` through the real-SPD route:
/// `M = (H-E)^2 + eta^2 I`, `G_jj = ((H-E) w)_j + i eta w_j` with `M w = e_j`.
pub fn resolvent_diag(
    h: &LevyMatrix,
    z: Complex64,
    indices: &[usize],
) -> Result<Vec<Complex64>, MatrixError> {
    if z.im <= 0.0 {
        return Err(MatrixError::InvalidArguments("need Im z > 0".into()));
    }
    let n = h.n;
    let mut shifted = h.entries.clone();
    for d in 0..n {
        shifted[d * n + d] -= z.re;
    }
    let mut m = matmul(&shifted, &shifted, n);
    let eta2 = z.im * z.im;
    for d in 0..n {
        m[d * n + d] += eta2;
    }
    cholesky(&mut m, n).map_err(|_| MatrixError::IllConditioned)?;
    let mut out = Vec::with_capacity(indices.len());
    for &j in indices {
        let mut w = vec![0.0f64; n];
        w[j] = 1.0;
        cholesky_solve(&m, n, &mut w);
        let mut re = 0.0;
        for k in 0..n {
            re += shifted[j * n + k] * w[k];
        }
        out.push(Complex64::new(re, z.im * w[j]));
    }
    Ok(out)
}

/// Diagonal entries across a whole eta ladder, reusing the `(H-E)^2`
/// product (one matmul, one Cholesky per eta).
pub fn resolvent_diag_ladder(
    h: &LevyMatrix,
    energy: f64,
    etas: &[f64],
    indices: &[usize],
) -> Result<Vec<Vec<Complex64>>, MatrixError> {
    let n = h.n;
    let mut shifted = h.entries.clone();
    for d in 0..n {
        shifted[d * n + d] -= energy;
    }
    let squared = matmul(&shifted, &shifted, n);
    let mut out = Vec::with_capacity(etas.len());
    for &eta in etas {
        if eta <= 0.0 {
            return Err(MatrixError::InvalidArguments("need eta > 0".into()));
        }
        let mut m = squared.clone();
        for d in 0..n {
            m[d * n + d] += eta * eta;
        }
        cholesky(&mut m, n).map_err(|_| MatrixError::IllConditioned)?;
        let mut level = Vec::with_capacity(indices.len());
        for &j in indices {
            let mut w = vec![0.0f64; n];
            w[j] = 1.0;
            cholesky_solve(&m, n, &mut w);
            let mut re = 0.0;
            for k in 0..n {
                re += shifted[j * n + k] * w[k];
            }
            level.push(Complex64::new(re, eta * w[j]));
        }
        out.push(level);
    }
    Ok(out)
}

/// Full complex resolvent (dense inverse); for Ward-identity checks at
/// modest sizes.
pub fn resolvent_full(h: &LevyMatrix, z: Complex64) -> Result<Vec<Complex64>, MatrixError> {
    if z.im <= 0.0 {
        return Err(MatrixError::InvalidArguments("need Im z > 0".into()));
    }
    let n = h.n;
    if n > 2500 {
        return Err(MatrixError::InvalidArguments(format!(
            "N={n} too large for a dense inverse"
        )));
    }
    let mut g: Vec<Complex64> = h
        .entries
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    for d in 0..n {
        g[d * n + d] -= z;
    }
    invert_complex(&mut g, n);
    Ok(g)
}

/// `max_v | eta sum_w |G_vw|^2 - Im G_vv |` over the full resolvent.
pub fn ward_residual_matrix(h: &LevyMatrix, z: Complex64) -> Result<f64, MatrixError> {
    let g = resolvent_full(h, z)?;
    let n = h.n;
    let mut worst = 0.0f64;
    for v in 0..n {
        let sum: f64 = (0..n).map(|w| g[v * n + w].norm_sqr()).sum();
        worst = worst.max((z.im * sum - g[v * n + v].im).abs());
    }
    Ok(worst)
}

/// Eigen-data of one sampled matrix.
pub struct SpectralSample {
    pub eigen: SymEigen,
}

pub fn spectral(h: &LevyMatrix) -> Result<SpectralSample, MatrixError> {
    let eigen = sym_eigen(&h.entries, h.n).map_err(MatrixError::Eigensolver)?;
    Ok(SpectralSample { eigen })
}

/// Localization statistics of eigenvectors with eigenvalues in `[lo, hi]`:
/// `P_I(j) = (N/|Lambda_I|) sum_{lambda_i in I} u_i(j)^2`, `Q_I = mean P^2`,
/// `Q_I(s) = mean P^s`.
pub fn ipr(sample: &SpectralSample, lo: f64, hi: f64, s: f64) -> Result<(f64, f64), MatrixError> {
    ipr_counted(sample, lo, hi, s).map(|(q2, qs, _)| (q2, qs))
}

/// Like [`ipr`] but also reporting `|Lambda_I|`, needed to compare `Q_I`
/// against the maximal-localization ceiling `N / |Lambda_I|`.
pub fn ipr_counted(
    sample: &SpectralSample,
    lo: f64,
    hi: f64,
    s: f64,
) -> Result<(f64, f64, usize), MatrixError> {
    let n = sample.eigen.n;
    let in_window: Vec<usize> = (0..n)
        .filter(|&k| sample.eigen.values[k] >= lo && sample.eigen.values[k] <= hi)
        .collect();
    if in_window.is_empty() {
        return Err(MatrixError::EmptyInterval { lo, hi });
    }
    let count = in_window.len() as f64;
    let mut q2 = 0.0;
    let mut qs = 0.0;
    for j in 0..n {
        let mut p = 0.0;
        for &k in &in_window {
            let u = sample.eigen.vectors[j * n + k];
            p += u * u;
        }
        p *= n as f64 / count;
        q2 += p * p;
        qs += p.powf(s);
    }
    Ok((q2 / n as f64, qs / n as f64, in_window.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Localized,
    Delocalized,
    Undetermined,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Localized => write!(f, "localized"),
            Phase::Delocalized => write!(f, "delocalized"),
            Phase::Undetermined => write!(f, "undetermined"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseRow {
    pub energy: f64,
    /// Median `Im G_jj` for each ladder eta, averaged over replicas.
    pub med_im_g: Vec<f64>,
    /// Site-to-site spread `median / 25th-percentile` of `Im G_jj` at the
    /// second-smallest eta: the finite-size phase discriminator.
    pub spread: f64,
    /// `Q_I` at the full and halved interval widths.
    pub q2_wide: f64,
    pub q2_narrow: f64,
    /// Mean eigenvalue counts in the two windows.
    pub count_wide: f64,
    pub count_narrow: f64,
    /// `Q_I(s/2)` at the wide interval, for the duality diagnostics.
    pub q_half_s: f64,
    pub class: Phase,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseOptions {
    pub n: usize,
    pub reps: usize,
    pub interval_width: f64,
    pub s: f64,
    /// Number of diagonal entries sampled per replica for `Im G`.
    pub probes: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            n: 800,
            reps: 2,
            interval_width: 0.4,
            s: 0.5,
            probes: 24,
        }
    }
}

/// Median-drop rule: localized when the median `Im G` drops by >= 10x
/// between the two smallest ladder etas, delocalized when it moves by < 2x.
///
/// At desk-scale N and alpha well below 1 this rule reports almost
/// everything as localized or undetermined: the typical local DOS in the
/// Lévy delocalized phase is itself strongly suppressed and keeps falling
/// with eta at every reachable scale. It is retained for reference; the
/// production classifier is [`classify_spread`].
pub fn classify(med_im: &[f64]) -> Phase {
    let k = med_im.len();
    if k < 2 {
        return Phase::Undetermined;
    }
    let ratio = med_im[k - 1] / med_im[k - 2].max(1e-300);
    if ratio <= 0.1 {
        Phase::Localized
    } else if (0.5..=2.0).contains(&ratio) {
        Phase::Delocalized
    } else {
        Phase::Undetermined
    }
}

/// Spread rule: in the localized phase `Im G_jj ~ eta * |R_loc|^2` is tight
/// around its median across sites (ratio to the lower quartile near 1),
/// while delocalized eigenstates produce a broad multifractal local DOS
/// whose lower quartile sits far below the median.
pub fn classify_spread(spread: f64) -> Phase {
    if spread >= 4.0 {
        Phase::Delocalized
    } else if spread <= 2.0 {
        Phase::Localized
    } else {
        Phase::Undetermined
    }
}

/// Run the finite-size localization diagnostic on an energy list.
pub fn phase_diagnostic(
    alpha: f64,
    energies: &[f64],
    eta_ladder: &[f64],
    opts: &PhaseOptions,
    seed: u64,
) -> Result<Vec<PhaseRow>, MatrixError> {
    let mut etas = eta_ladder.to_vec();
    etas.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending
    // Spectra are shared across energies; compute once per replica.
    let spectra: Result<Vec<(LevyMatrix, SpectralSample)>, MatrixError> = (0..opts.reps)
        .into_par_iter()
        .map(|r| {
            let h = sample_matrix(opts.n, alpha, seed ^ ((r as u64) << 17))?;
            let s = spectral(&h)?;
            Ok((h, s))
        })
        .collect();
    let spectra = spectra?;
    // One (rep, energy) task per ladder so the (H-E)^2 product is shared
    // across etas; deterministic regardless of worker count.
    let mut tasks: Vec<(usize, usize)> = Vec::new();
    for ei in 0..energies.len() {
        for r in 0..spectra.len() {
            tasks.push((ei, r));
        }
    }
    let ladders: Result<Vec<Vec<Vec<Complex64>>>, MatrixError> = tasks
        .par_iter()
        .map(|&(ei, r)| {
            let mut rng = Rng::stream(seed, &[0xd1a6, ei as u64, r as u64]);
            let idx: Vec<usize> = (0..opts.probes).map(|_| rng.index(opts.n)).collect();
            resolvent_diag_ladder(&spectra[r].0, energies[ei], &etas, &idx)
        })
        .collect();
    let ladders = ladders?;
    let mut rows = Vec::with_capacity(energies.len());
    for (ei, &energy) in energies.iter().enumerate() {
        let mut med_im = Vec::with_capacity(etas.len());
        let mut spread = f64::NAN;
        let spread_level = etas.len().saturating_sub(2);
        for (k, _eta) in etas.iter().enumerate() {
            let mut ims: Vec<f64> = Vec::new();
            for r in 0..spectra.len() {
                let task_idx = ei * spectra.len() + r;
                ims.extend(ladders[task_idx][k].iter().map(|g| g.im));
            }
            ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
            med_im.push(ims[ims.len() / 2]);
            if k == spread_level {
                let q25 = ims[ims.len() / 4].max(1e-300);
                spread = ims[ims.len() / 2] / q25;
            }
        }
        // Spectral windows far in the tail can be empty at finite N; widen a
        // few times before giving up and flagging the Q statistics as NaN.
        let mut q_stats: Option<(f64, f64, f64, f64, f64)> = None;
        for widen in 0..4 {
            let w = opts.interval_width * f64::powi(2.0, widen);
            let (mut q2w, mut q2n, mut qhs) = (0.0, 0.0, 0.0);
            let (mut cw, mut cn) = (0.0, 0.0);
            let mut have = 0.0;
            for (_, sample) in &spectra {
                let wide = ipr_counted(sample, energy - w / 2.0, energy + w / 2.0, opts.s / 2.0);
                let narrow =
                    ipr_counted(sample, energy - w / 4.0, energy + w / 4.0, opts.s / 2.0);
                if let (Ok((a2, ahs, kw)), Ok((b2, _, kn))) = (wide, narrow) {
                    q2w += a2;
                    q2n += b2;
                    qhs += ahs;
                    cw += kw as f64;
                    cn += kn as f64;
                    have += 1.0;
                }
            }
            if have > 0.0 {
                q_stats = Some((q2w / have, q2n / have, qhs / have, cw / have, cn / have));
                break;
            }
        }
        let (q2_wide, q2_narrow, q_half_s, count_wide, count_narrow) =
            q_stats.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        rows.push(PhaseRow {
            energy,
            class: classify_spread(spread),
            med_im_g: med_im,
            spread,
            q2_wide,
            q2_narrow,
            count_wide,
            count_narrow,
            q_half_s,
        });
    }
    Ok(rows)
}
