//! LMMSE successive interference cancellation and QPSK achievable rates.
//!
//! With effective channel `A = U_r G U_t^H Q^{1/2}` the received vector is
//! `y = √γ̃ A b + w`. Stage `m` sees the undetected symbols `m+1..M` as
//! interference, so its SINR is `ρ_m = γ̃ a_m^H Ξ_m a_m` with
//! `Ξ_m = (I + γ̃ Σ_{m'>m} a_{m'} a_{m'}^H)^{-1}`.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::arraykit::{dft_basis, ArrayGeometry};
use crate::capacity::CovarianceSpec;
use crate::channel::AngularChannel;
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, CMatrix, CVector};

pub const GAUSS_HERMITE_NODES: usize = 129;
pub const PSD_ROOT_TOLERANCE: f64 = 1e-8;
pub const MAX_BRUTE_FORCE_STREAMS: usize = 6;
const BRUTE_FORCE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub a: CMatrix,
    pub gamma_tilde: f64,
}

impl EffectiveChannel {
    pub fn new(a: CMatrix, gamma_tilde: f64) -> Result<Self> {
        if !(gamma_tilde > 0.0 && gamma_tilde.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "normalized SNR must be positive and finite, got {gamma_tilde}"
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("effective channel has non-finite entries".into()));
        }
        Ok(Self { a, gamma_tilde })
    }

    pub fn streams(&self) -> usize {
        self.a.ncols()
    }

    pub fn column_norm_sq(&self, m: usize) -> f64 {
        self.a.column(m).norm_squared()
    }
}

/// `A = U_r G U_t^H Q^{1/2}`. Since `Q^{1/2} = U_t Σ^{1/2} U_t^H`, this equals
/// `U_r G Σ^{1/2} U_t^H`.
pub fn effective_matrix(
    ch: &AngularChannel,
    cov: &CovarianceSpec,
    gamma_tilde: f64,
) -> Result<EffectiveChannel> {
    if cov.dim() != ch.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} covariance", ch.cols()),
            actual: format!("{0}x{0}", cov.dim()),
        });
    }
    let root = psd_sqrt(cov.matrix(), PSD_ROOT_TOLERANCE)?;
    let ur = dft_basis(&ch.geom_r);
    let ut = dft_basis(&ch.geom_t);
    EffectiveChannel::new(ur * &ch.gains * root * ut.adjoint(), gamma_tilde)
}

/// Per-stage SINRs by the backward rank-one recursion
/// `Ξ_{m-1} = Ξ_m - γ̃ Ξ_m a_m a_m^H Ξ_m / (1 + γ̃ a_m^H Ξ_m a_m)`.
pub fn sic_sinrs(eff: &EffectiveChannel) -> Vec<f64> {
    let (n, m) = eff.a.shape();
    let g = eff.gamma_tilde;
    let mut xi = CMatrix::identity(n, n);
    let mut rho = vec![0.0; m];
    for stage in (0..m).rev() {
        let a = eff.a.column(stage);
        let xa: CVector = &xi * a;
        let quad = a.dotc(&xa).re.max(0.0);
        rho[stage] = g * quad;
        if stage > 0 {
            let denom = 1.0 + g * quad;
            xi -= (&xa * xa.adjoint()) * Complex64::new(g / denom, 0.0);
        }
    }
    rho
}

/// Per-stage SINRs by direct inversion of each `I + γ̃ Σ_{m'>m} a a^H`.
pub fn sic_sinrs_direct(eff: &EffectiveChannel) -> Vec<f64> {
    let (n, m) = eff.a.shape();
    let g = Complex64::new(eff.gamma_tilde, 0.0);
    (0..m)
        .map(|stage| {
            let mut k = CMatrix::identity(n, n);
            for later in stage + 1..m {
                let col = eff.a.column(later);
                k += (col * col.adjoint()) * g;
            }
            let inv = k.try_inverse().expect("I + γ̃ A A^H is invertible");
            let a = eff.a.column(stage);
            eff.gamma_tilde * a.dotc(&(inv * a)).re.max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicTrace {
    pub sinrs: Vec<f64>,
    pub gaussian_rate_nats: f64,
    pub qpsk_rate_nats: f64,
    /// `ρ_m / (Δ_t γ̃)`.
    pub multiuser_efficiencies: Vec<f64>,
}

impl SicTrace {
    pub fn from_sinrs(sinrs: Vec<f64>, delta_t: f64, gamma_tilde: f64) -> Self {
        let gaussian_rate_nats = sinrs.iter().map(|r| r.ln_1p()).sum();
        let qpsk_rate_nats = sinrs.iter().map(|&r| qpsk_mi_unchecked(r)).sum();
        let multiuser_efficiencies = sinrs.iter().map(|r| r / (delta_t * gamma_tilde)).collect();
        Self {
            sinrs,
            gaussian_rate_nats,
            qpsk_rate_nats,
            multiuser_efficiencies,
        }
    }

    pub fn max_multiuser_efficiency(&self) -> f64 {
        self.multiuser_efficiencies.iter().copied().fold(0.0, f64::max)
    }
}

pub fn sic_trace(eff: &EffectiveChannel, delta_t: f64) -> SicTrace {
    SicTrace::from_sinrs(sic_sinrs(eff), delta_t, eff.gamma_tilde)
}

/// `Σ_m log(1 + ρ_m)`.
pub fn gaussian_sic_rate(trace: &SicTrace) -> f64 {
    trace.sinrs.iter().map(|r| r.ln_1p()).sum()
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} g(x) dx`, computed once by
/// Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite_rule(GAUSS_HERMITE_NODES))
}

fn gauss_hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Mutual information (nats) of `y = √snr·b + n` with equiprobable `b = ±1`
/// and unit-variance real Gaussian `n`:
/// `log 2 - E[log(1 + exp(-2 snr - 2√snr n))]`.
pub fn bpsk_awgn_mi(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be non-negative, got {snr}")));
    }
    Ok(bpsk_mi_unchecked(snr))
}

fn bpsk_mi_unchecked(snr: f64) -> f64 {
    if snr == 0.0 {
        return 0.0;
    }
    if snr.is_infinite() {
        return LN_2;
    }
    let (x, w) = gauss_hermite();
    let root = snr.sqrt();
    let expectation: f64 = x
        .iter()
        .zip(w)
        .map(|(&xi, &wi)| wi * softplus(-2.0 * snr - 2.0 * root * std::f64::consts::SQRT_2 * xi))
        .sum::<f64>()
        / PI.sqrt();
    (LN_2 - expectation).clamp(0.0, LN_2)
}

/// Unit-power QPSK over unit-variance complex AWGN: two independent BPSK
/// channels, each at SNR `ρ`.
pub fn qpsk_awgn_mi(rho: f64) -> Result<f64> {
    Ok(2.0 * bpsk_awgn_mi(rho)?)
}

fn qpsk_mi_unchecked(rho: f64) -> f64 {
    2.0 * bpsk_mi_unchecked(rho.max(0.0))
}

/// `Σ_m I_QPSK(ρ_m)`, the unnormalized QPSK LMMSE-SIC lower bound.
pub fn qpsk_sic_lower_bound(eff: &EffectiveChannel) -> f64 {
    sic_sinrs(eff).into_iter().map(qpsk_mi_unchecked).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `I(b; y)` for QPSK inputs, by exhaustive
/// enumeration of the `4^M` constellation:
/// `M log 4 - E[log Σ_{b'} exp(-‖y - √γ̃ A b'‖² + ‖w‖²)]`.
///
/// Samples are split into fixed-size chunks with one RNG stream each, seeded
/// from a single draw of `rng`, so the estimate does not depend on the
/// number of worker threads.
pub fn brute_force_qpsk_mi<R: Rng + ?Sized>(
    eff: &EffectiveChannel,
    sample_count: usize,
    rng: &mut R,
) -> Result<MiEstimate> {
    let (n, m) = eff.a.shape();
    if m > MAX_BRUTE_FORCE_STREAMS {
        return Err(Error::ConstellationTooLarge(m));
    }
    if sample_count < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let symbol = |s: usize| Complex64::new(if s & 1 == 0 { amp } else { -amp }, if s & 2 == 0 { amp } else { -amp });
    let points = 1usize << (2 * m);
    let scale = Complex64::new(eff.gamma_tilde.sqrt(), 0.0);
    let images: Vec<CVector> = (0..points)
        .map(|idx| {
            let b = CVector::from_fn(m, |k, _| symbol((idx >> (2 * k)) & 3));
            &eff.a * b * scale
        })
        .collect();
    let base: u64 = rng.random();
    let chunks = sample_count.div_ceil(BRUTE_FORCE_CHUNK);
    let partial = crate::par::map_indexed(chunks, |c| {
        let mut stream = ChaCha8Rng::seed_from_u64(base);
        stream.set_stream(c as u64);
        let len = BRUTE_FORCE_CHUNK.min(sample_count - c * BRUTE_FORCE_CHUNK);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let noise_sd = std::f64::consts::FRAC_1_SQRT_2;
        let mut exps = vec![0.0; points];
        for _ in 0..len {
            let sent = stream.random_range(0..points);
            let w = CVector::from_fn(n, |_, _| {
                let re: f64 = StandardNormal.sample(&mut stream);
                let im: f64 = StandardNormal.sample(&mut stream);
                Complex64::new(noise_sd * re, noise_sd * im)
            });
            let y = &images[sent] + &w;
            let w_norm = w.norm_squared();
            let mut top = f64::NEG_INFINITY;
            for (e, img) in exps.iter_mut().zip(&images) {
                *e = -(&y - img).norm_squared() + w_norm;
                top = top.max(*e);
            }
            let lse = top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
            let v = m as f64 * 4f64.ln() - lse;
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let count = sample_count as f64;
    let mean = sum / count;
    let var = ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0);
    Ok(MiEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples: sample_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrDiagnostics {
    /// `ρ_m / γ̃` per stage.
    pub normalized_sinrs: Vec<f64>,
    /// `‖a_m‖² = ‖G U^H Q^{1/2} e_m‖²` per stage.
    pub column_bounds: Vec<f64>,
    /// Stages `m < M-1` where `ρ_m/γ̃ < ‖a_m‖²` fails to hold strictly.
    pub strict_violations: Vec<usize>,
    /// Relative gap `|ρ_{M-1}/γ̃ - ‖a_{M-1}‖²| / ‖a_{M-1}‖²` at the last stage,
    /// where `Ξ = I` and the bound is attained.
    pub last_stage_relative_gap: f64,
    pub max_multiuser_efficiency: f64,
    /// `max_m 2 L_t ‖Q^{1/2} e_m‖² / Δ_t`.
    pub max_assumption3: f64,
}

impl SinrDiagnostics {
    pub fn bound_holds(&self, last_stage_tolerance: f64) -> bool {
        self.strict_violations.is_empty() && self.last_stage_relative_gap <= last_stage_tolerance
    }
}

pub fn sinr_diagnostics(
    eff: &EffectiveChannel,
    geom_t: &ArrayGeometry,
    cov: &CovarianceSpec,
) -> SinrDiagnostics {
    let sinrs = sic_sinrs(eff);
    let m = sinrs.len();
    let normalized_sinrs: Vec<f64> = sinrs.iter().map(|r| r / eff.gamma_tilde).collect();
    let column_bounds: Vec<f64> = (0..m).map(|k| eff.column_norm_sq(k)).collect();
    let strict_violations = (0..m.saturating_sub(1))
        .filter(|&k| normalized_sinrs[k] >= column_bounds[k])
        .collect();
    let last_stage_relative_gap = match m {
        0 => 0.0,
        _ if column_bounds[m - 1] == 0.0 => normalized_sinrs[m - 1].abs(),
        _ => (normalized_sinrs[m - 1] - column_bounds[m - 1]).abs() / column_bounds[m - 1],
    };
    let delta_t = geom_t.delta();
    let max_multiuser_efficiency = sinrs
        .iter()
        .map(|r| r / (delta_t * eff.gamma_tilde))
        .fold(0.0, f64::max);
    let ut = dft_basis(geom_t);
    let q = &ut * cov.matrix() * ut.adjoint();
    let two_lt = 2.0 * geom_t.length() as f64;
    let max_assumption3 = (0..q.nrows())
        .map(|k| two_lt * q[(k, k)].re / delta_t)
        .fold(0.0, f64::max);
    SinrDiagnostics {
        normalized_sinrs,
        column_bounds,
        strict_violations,
        last_stage_relative_gap,
        max_multiuser_efficiency,
        max_assumption3,
    }
}
