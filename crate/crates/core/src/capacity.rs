//! Gaussian constrained capacity, water-filling and the normalized capacity
//! gaps between critically and densely spaced transmit arrays.
//!
//! All covariances live in the angular domain, `Σ = U^H Q U`. Capacities are
//! in nats.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arraykit::ArrayGeometry;
use crate::channel::{angular_gains, extend_matrix, truncate, AngularChannel, PathSet};
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_sq, hermitian_asymmetry, hermitian_eigenvalues, trace_re, CMatrix,
    NEGATIVE_EIGENVALUE_CLIP,
};

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const WATER_LEVEL_ITERATIONS: usize = 200;
pub const WATER_LEVEL_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    IdentityScaled,
    MainLobeUniform,
    WaterFilled,
    Explicit,
}

impl fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IdentityScaled => "identity_scaled",
            Self::MainLobeUniform => "main_lobe_uniform",
            Self::WaterFilled => "water_filled",
            Self::Explicit => "explicit",
        })
    }
}

/// Angular-domain input covariance with `Tr Σ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    kind: CovarianceKind,
    matrix: CMatrix,
}

impl CovarianceSpec {
    /// Validates a user-supplied covariance: square, Hermitian, PSD and within
    /// the power constraint.
    pub fn explicit(matrix: CMatrix) -> Result<Self> {
        validate(&matrix)?;
        Ok(Self {
            kind: CovarianceKind::Explicit,
            matrix,
        })
    }

    pub(crate) fn trusted(kind: CovarianceKind, matrix: CMatrix) -> Self {
        Self { kind, matrix }
    }

    pub fn zero(dim: usize) -> Self {
        Self::trusted(CovarianceKind::Explicit, CMatrix::zeros(dim, dim))
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.matrix)
    }

    /// Largest eigenvalue of `2 L_t Σ`, the quantity bounded by Assumption 2.
    pub fn scaled_max_eigenvalue(&self, length_t: u32) -> f64 {
        let top = hermitian_eigenvalues(&self.matrix).first().copied().unwrap_or(0.0);
        2.0 * length_t as f64 * top
    }
}

fn validate(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let asym = hermitian_asymmetry(m);
    if asym > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    if let Some(&min) = hermitian_eigenvalues(m).last() {
        if min < -NEGATIVE_EIGENVALUE_CLIP {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let tr = trace_re(m);
    if tr > 1.0 + TRACE_TOLERANCE {
        return Err(Error::PowerConstraint { trace: tr });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub nats: f64,
    /// `nats / (2 min{L_t, L_r})`.
    pub normalized: f64,
    /// Eigenvalues of `G Σ G^H`, descending, negatives within tolerance clipped.
    pub eigenvalues: Vec<f64>,
}

impl CapacityResult {
    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }

    pub fn normalized_bits(&self) -> f64 {
        self.normalized / std::f64::consts::LN_2
    }
}

fn check_gamma(gamma_tilde: f64) -> Result<()> {
    if gamma_tilde > 0.0 && gamma_tilde.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "normalized SNR must be positive and finite, got {gamma_tilde}"
        )))
    }
}

/// `log det(I + γ̃ G Σ G^H)` from the eigenvalues of the symmetrized product.
pub fn constrained_capacity(
    ch: &AngularChannel,
    cov: &CovarianceSpec,
    gamma_tilde: f64,
) -> Result<CapacityResult> {
    check_gamma(gamma_tilde)?;
    if cov.dim() != ch.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} covariance", ch.cols()),
            actual: format!("{0}x{0}", cov.dim()),
        });
    }
    let product = &ch.gains * cov.matrix() * ch.gains.adjoint();
    let mut eigenvalues = hermitian_eigenvalues(&product);
    if let Some(&min) = eigenvalues.last() {
        let scale = eigenvalues[0].abs().max(1.0);
        if min < -NEGATIVE_EIGENVALUE_CLIP * scale {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    for v in &mut eigenvalues {
        *v = v.max(0.0);
    }
    let nats: f64 = eigenvalues.iter().map(|&l| (gamma_tilde * l).ln_1p()).sum();
    Ok(CapacityResult {
        nats,
        normalized: nats / ch.degrees_of_freedom(),
        eigenvalues,
    })
}

/// Water-filling allocation over parallel channels with gains `d_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub level: f64,
    pub powers: Vec<f64>,
}

/// Solves `p_i = max(0, μ - 1/(γ̃ d_i²))`, `Σ p_i = 1` by bisection on `μ`,
/// then recomputes `μ` exactly on the resulting active set.
pub fn water_level(gains_sq: &[f64], gamma_tilde: f64) -> Result<WaterFill> {
    check_gamma(gamma_tilde)?;
    let floors: Vec<f64> = gains_sq
        .iter()
        .map(|&g| if g > 0.0 { 1.0 / (gamma_tilde * g) } else { f64::INFINITY })
        .collect();
    let lowest = floors.iter().copied().fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(Error::ZeroChannel);
    }
    let filled = |mu: f64| floors.iter().map(|&c| (mu - c).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (lowest, lowest + 1.0);
    for _ in 0..WATER_LEVEL_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let excess = filled(mid) - 1.0;
        if excess.abs() < WATER_LEVEL_RESIDUAL {
            lo = mid;
            hi = mid;
            break;
        }
        if excess > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let guess = 0.5 * (lo + hi);
    let active: Vec<usize> = (0..floors.len()).filter(|&i| floors[i] < guess).collect();
    let active = if active.is_empty() {
        floors
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == lowest)
            .map(|(i, _)| i)
            .collect()
    } else {
        active
    };
    let level = (1.0 + active.iter().map(|&i| floors[i]).sum::<f64>()) / active.len() as f64;
    let powers = floors.iter().map(|&c| (level - c).max(0.0)).collect();
    Ok(WaterFill { level, powers })
}

/// Largest violation of the water-filling optimality conditions.
pub fn kkt_residual(gains_sq: &[f64], gamma_tilde: f64, wf: &WaterFill) -> f64 {
    let mut worst = (wf.powers.iter().sum::<f64>() - 1.0).abs();
    for (&g, &p) in gains_sq.iter().zip(&wf.powers) {
        if g <= 0.0 {
            worst = worst.max(p.abs());
            continue;
        }
        let floor = 1.0 / (gamma_tilde * g);
        if p > 0.0 {
            worst = worst.max((p + floor - wf.level).abs());
        } else {
            worst = worst.max((wf.level - floor).max(0.0));
        }
    }
    worst
}

/// Capacity-achieving covariance: power `p_i` on the `i`-th right singular
/// vector of `G`.
pub fn water_filling(ch: &AngularChannel, gamma_tilde: f64) -> Result<CovarianceSpec> {
    check_gamma(gamma_tilde)?;
    let svd = ch.gains.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let gains_sq: Vec<f64> = svd.singular_values.iter().map(|d| d * d).collect();
    let wf = water_level(&gains_sq, gamma_tilde)?;
    let m = ch.cols();
    let mut sigma = CMatrix::zeros(m, m);
    for (i, &p) in wf.powers.iter().enumerate() {
        if p > 0.0 {
            let row = v_t.row(i);
            // v_i = row^H, contributes p v_i v_i^H
            sigma += row.adjoint() * row * Complex64::new(p, 0.0);
        }
    }
    Ok(CovarianceSpec::trusted(CovarianceKind::WaterFilled, crate::linalg::symmetrize(&sigma)))
}

/// CSIR presets. `IdentityScaled` is `I/M`; `MainLobeUniform` spreads power
/// `1/(2L_t+1)` over the main-lobe indices `[0:L_t] ∪ [M-L_t:M)`. For
/// `Δ_t = 1/2` those indices cover all `2L_t` beams and the preset is `I/(2L_t)`.
pub fn preset_covariance(kind: CovarianceKind, geom_t: &ArrayGeometry) -> Result<CovarianceSpec> {
    let m = geom_t.n();
    let mut diag = vec![0.0; m];
    match kind {
        CovarianceKind::IdentityScaled => diag.iter_mut().for_each(|d| *d = 1.0 / m as f64),
        CovarianceKind::MainLobeUniform => {
            let mask = geom_t.main_lobe_mask();
            let count = mask.iter().filter(|&&b| b).count();
            for (d, on) in diag.iter_mut().zip(mask) {
                if on {
                    *d = 1.0 / count as f64;
                }
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!("{other} is not a preset covariance")));
        }
    }
    let matrix = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        diag.into_iter().map(|d| Complex64::new(d, 0.0)),
    ));
    Ok(CovarianceSpec::trusted(kind, matrix))
}

/// `|C(G) - C(G̃)| / (2 min{L_t, L_r})` with the same covariance on both.
pub fn theorem1_gap(ch: &AngularChannel, cov: &CovarianceSpec, gamma_tilde: f64) -> Result<f64> {
    let full = constrained_capacity(ch, cov, gamma_tilde)?;
    let trunc = constrained_capacity(&truncate(ch), cov, gamma_tilde)?;
    Ok((full.nats - trunc.nats).abs() / ch.degrees_of_freedom())
}

/// Embeds a `(2L_t+1)`-square covariance over the main-lobe indices into the
/// `M × M` angular layout: `E_{L_t+1, M-2L_t-1}(Σ)`. For `Δ_t = 1/2` there is
/// no room for the extra index, so row and column `L_t` are dropped instead.
pub fn embed_dense_covariance(cov_dense: &CMatrix, geom_t: &ArrayGeometry) -> Result<CMatrix> {
    let lt = geom_t.length() as usize;
    let m = geom_t.n();
    if cov_dense.nrows() != 2 * lt + 1 || cov_dense.ncols() != 2 * lt + 1 {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", 2 * lt + 1),
            actual: format!("{}x{}", cov_dense.nrows(), cov_dense.ncols()),
        });
    }
    if m > 2 * lt {
        extend_matrix(cov_dense, lt + 1, m - 2 * lt - 1)
    } else {
        Ok(cov_dense.clone().remove_row(lt).remove_column(lt))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Gap {
    /// Normalized absolute capacity difference.
    pub gap: f64,
    /// `‖E_{L_t,1}(Σ_{2L_t}) - Σ_{2L_t+1}‖²_F`.
    pub condition_residual: f64,
    pub critical: CapacityResult,
    pub dense: CapacityResult,
}

/// Compares `C(Σ_{2L_t}; G_{1/2,1/2})` with `C(Σ_M; G̃_{Δ_t,Δ_r})`, both built
/// from the same path set. `geom_t`/`geom_r` give the dense geometries; their
/// critically spaced counterparts share the array lengths.
pub fn theorem2_gap(
    paths: &PathSet,
    geom_t: &ArrayGeometry,
    geom_r: &ArrayGeometry,
    cov_half: &CovarianceSpec,
    cov_dense: &CovarianceSpec,
    gamma_tilde: f64,
) -> Result<Theorem2Gap> {
    let lt = geom_t.length() as usize;
    if cov_half.dim() != 2 * lt {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", 2 * lt),
            actual: format!("{0}x{0}", cov_half.dim()),
        });
    }
    let sigma_m = embed_dense_covariance(cov_dense.matrix(), geom_t)?;
    let half_t = geom_t.critical_counterpart();
    let half_r = geom_r.critical_counterpart();
    let g_half = angular_gains(paths, &half_t, &half_r);
    let g_dense = truncate(&angular_gains(paths, geom_t, geom_r));
    let critical = constrained_capacity(&g_half, cov_half, gamma_tilde)?;
    let dense = constrained_capacity(
        &g_dense,
        &CovarianceSpec::trusted(cov_dense.kind(), sigma_m),
        gamma_tilde,
    )?;
    let extended = extend_matrix(cov_half.matrix(), lt, 1)?;
    let condition_residual = frobenius_sq(&(extended - cov_dense.matrix()));
    Ok(Theorem2Gap {
        gap: (critical.nats - dense.nats).abs() / g_half.degrees_of_freedom(),
        condition_residual,
        critical,
        dense,
    })
}

/// Uniform covariance over `2L_t+1` main-lobe indices, i.e. `I/(2L_t+1)`.
pub fn uniform_dense_covariance(length_t: u32) -> CovarianceSpec {
    let n = 2 * length_t as usize + 1;
    CovarianceSpec::trusted(
        CovarianceKind::MainLobeUniform,
        CMatrix::identity(n, n).unscale(n as f64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraykit::dft_basis;
    use crate::channel::rayleigh_instance;
    use crate::linalg::c;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(l: u32, n: u32) -> ArrayGeometry {
        ArrayGeometry::new(l, n).unwrap()
    }

    fn instance(seed: u64, gt: ArrayGeometry, gr: ArrayGeometry) -> (PathSet, AngularChannel) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = 4 * (2 * gt.length().min(gr.length())) as usize;
        let paths = rayleigh_instance(p, &gt, &gr, None, &mut rng).unwrap();
        let ch = angular_gains(&paths, &gt, &gr);
        (paths, ch)
    }

    #[test]
    fn explicit_validation() {
        assert!(CovarianceSpec::explicit(CMatrix::identity(2, 2).unscale(2.0)).is_ok());
        assert!(matches!(
            CovarianceSpec::explicit(CMatrix::identity(2, 2)),
            Err(Error::PowerConstraint { .. })
        ));
        let mut m = CMatrix::identity(2, 2).unscale(4.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(CovarianceSpec::explicit(m), Err(Error::NotHermitian { .. })));
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(-0.1, 0.0)]));
        assert!(matches!(CovarianceSpec::explicit(neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn zero_channel_capacity() {
        let g = geom(2, 8);
        let ch = angular_gains(&PathSet::default(), &g, &geom(2, 4));
        let cov = preset_covariance(CovarianceKind::IdentityScaled, &g).unwrap();
        assert_eq!(constrained_capacity(&ch, &cov, 10.0).unwrap().nats, 0.0);
        assert!(matches!(water_filling(&ch, 1.0), Err(Error::ZeroChannel)));
    }

    #[test]
    fn rank_one_scalar_reduction() {
        let g = geom(1, 4);
        let ch = angular_gains(&PathSet::single(c(0.8, 0.3), 0.27, -0.61), &g, &g);
        let sigma = crate::linalg::max_singular_value(&ch.gains);
        let cov = preset_covariance(CovarianceKind::IdentityScaled, &g).unwrap();
        let got = constrained_capacity(&ch, &cov, 3.0).unwrap().nats;
        assert!((got - (1.0 + 3.0 * sigma * sigma / 4.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn capacity_monotone_in_snr() {
        let (gt, gr) = (geom(4, 16), geom(2, 4));
        let (_, ch) = instance(5, gt, gr);
        let cov = preset_covariance(CovarianceKind::MainLobeUniform, &gt).unwrap();
        let mut prev = 0.0;
        for i in 0..10 {
            let c = constrained_capacity(&ch, &cov, 10f64.powf(i as f64 / 2.0 - 1.0)).unwrap();
            assert!(c.nats >= prev);
            assert!((c.normalized - c.nats / 4.0).abs() < 1e-15);
            prev = c.nats;
        }
    }

    #[test]
    fn water_level_two_bins_against_grid_search() {
        let gains = [4.0, 1.0];
        let wf = water_level(&gains, 1.0).unwrap();
        assert!((wf.level - 9.0 / 8.0).abs() < 1e-12);
        assert!((wf.powers[0] - 7.0 / 8.0).abs() < 1e-12);
        let cap = |p: f64| (1.0 + 4.0 * p).ln() + (1.0 + (1.0 - p)).ln();
        let best = (0..=1_000_000)
            .map(|i| cap(i as f64 * 1e-6))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((cap(wf.powers[0]) - best).abs() < 1e-9);
        assert!(kkt_residual(&gains, 1.0, &wf) < 1e-12);
    }

    #[test]
    fn water_level_edge_cases() {
        let wf = water_level(&[2.5, 0.0, 0.0], 0.1).unwrap();
        assert_eq!(wf.powers, vec![1.0, 0.0, 0.0]);
        let wf = water_level(&[3.0, 2.0, 0.5], 1e6).unwrap();
        for p in &wf.powers {
            assert!((p - 1.0 / 3.0).abs() < 1e-3);
        }
        assert!(water_level(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn water_filling_dominates_presets() {
        let (gt, gr) = (geom(2, 8), geom(2, 4));
        for seed in 0..20 {
            let (_, ch) = instance(seed, gt, gr);
            for gamma in [0.1, 1.0, 100.0] {
                let wf = water_filling(&ch, gamma).unwrap();
                assert!((wf.trace() - 1.0).abs() < 1e-10);
                let best = constrained_capacity(&ch, &wf, gamma).unwrap().nats;
                for kind in [CovarianceKind::IdentityScaled, CovarianceKind::MainLobeUniform] {
                    let preset = preset_covariance(kind, &gt).unwrap();
                    assert!(best >= constrained_capacity(&ch, &preset, gamma).unwrap().nats - 1e-10);
                }
            }
        }
    }

    #[test]
    fn presets() {
        let g = geom(2, 8);
        let id = preset_covariance(CovarianceKind::IdentityScaled, &g).unwrap();
        assert!((id.trace() - 1.0).abs() < 1e-15);
        let ml = preset_covariance(CovarianceKind::MainLobeUniform, &g).unwrap();
        let diag: Vec<f64> = (0..8).map(|i| ml.matrix()[(i, i)].re).collect();
        let fifth = 1.0 / 5.0;
        assert_eq!(diag, vec![fifth, fifth, fifth, 0.0, 0.0, 0.0, fifth, fifth]);
        assert!(id.scaled_max_eigenvalue(2) <= 2.0);
        assert!(ml.scaled_max_eigenvalue(2) <= 2.0);
        let half = preset_covariance(CovarianceKind::MainLobeUniform, &geom(2, 4)).unwrap();
        assert_eq!(half.matrix(), &CMatrix::identity(4, 4).unscale(4.0));
        assert!(preset_covariance(CovarianceKind::WaterFilled, &g).is_err());
    }

    #[test]
    fn antenna_domain_rebasing() {
        // log det(I + γ̃ (U_r G U_t^H) Q (U_r G U_t^H)^H) with Q = U_t Σ U_t^H
        let (gt, gr) = (geom(2, 8), geom(2, 4));
        let (_, ch) = instance(11, gt, gr);
        let cov = water_filling(&ch, 5.0).unwrap();
        let (ut, ur) = (dft_basis(&gt), dft_basis(&gr));
        let q = &ut * cov.matrix() * ut.adjoint();
        let h = &ur * &ch.gains * ut.adjoint();
        let ev = hermitian_eigenvalues(&(&h * q * h.adjoint()));
        let antenna: f64 = ev.iter().map(|&l| (5.0 * l.max(0.0)).ln_1p()).sum();
        let angular = constrained_capacity(&ch, &cov, 5.0).unwrap().nats;
        assert!((antenna - angular).abs() < 1e-9);
    }

    #[test]
    fn theorem1_gap_cases() {
        let h = geom(4, 8);
        let (_, ch) = instance(2, h, h);
        let cov = water_filling(&ch, 10.0).unwrap();
        assert_eq!(theorem1_gap(&ch, &cov, 10.0).unwrap(), 0.0);

        let (gt, gr) = (geom(8, 32), geom(4, 8));
        let (_, ch) = instance(2, gt, gr);
        let cov = water_filling(&ch, 1e3).unwrap();
        assert!(theorem1_gap(&ch, &cov, 1e3).unwrap() > 0.0);
    }

    #[test]
    fn embedding_layouts() {
        let gt = geom(2, 8);
        let dense = uniform_dense_covariance(2);
        let e = embed_dense_covariance(dense.matrix(), &gt).unwrap();
        let ml = preset_covariance(CovarianceKind::MainLobeUniform, &gt).unwrap();
        assert_eq!(&e, ml.matrix());
        let half = geom(2, 4);
        let hc = preset_covariance(CovarianceKind::IdentityScaled, &half).unwrap();
        let ext = extend_matrix(hc.matrix(), 2, 1).unwrap();
        assert_eq!(&embed_dense_covariance(&ext, &half).unwrap(), hc.matrix());
    }

    #[test]
    fn theorem2_identical_channels() {
        let h = geom(4, 8);
        let (paths, _) = instance(3, h, h);
        let cov_half = preset_covariance(CovarianceKind::IdentityScaled, &h).unwrap();
        let cov_dense = CovarianceSpec::explicit(extend_matrix(cov_half.matrix(), 4, 1).unwrap()).unwrap();
        let r = theorem2_gap(&paths, &h, &h, &cov_half, &cov_dense, 10.0).unwrap();
        assert!(r.gap < 1e-10);
        assert!(r.condition_residual < 1e-30);
    }

    #[test]
    fn theorem2_uniform_residual_closed_form() {
        let (gt, gr) = (geom(4, 16), geom(2, 4));
        let (paths, _) = instance(4, gt, gr);
        let cov_half = preset_covariance(CovarianceKind::IdentityScaled, &gt.critical_counterpart()).unwrap();
        let cov_dense = uniform_dense_covariance(4);
        let r = theorem2_gap(&paths, &gt, &gr, &cov_half, &cov_dense, 1.0).unwrap();
        let (a, b) = (1.0 / 8.0, 1.0 / 9.0);
        assert!((r.condition_residual - (8.0 * (a - b) * (a - b) + b * b)).abs() < 1e-15);
        assert!(r.gap >= 0.0);
        let bad = preset_covariance(CovarianceKind::IdentityScaled, &gt).unwrap();
        assert!(theorem2_gap(&paths, &gt, &gr, &bad, &cov_dense, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn capacity_invariants(seed in 0u64..10_000, db in -10.0f64..40.0) {
            let (gt, gr) = (geom(2, 8), geom(2, 4));
            let (_, ch) = instance(seed, gt, gr);
            let gamma = 10f64.powf(db / 10.0);
            let wf = water_filling(&ch, gamma).unwrap();
            let gains: Vec<f64> = crate::linalg::singular_values(&ch.gains).iter().map(|d| d * d).collect();
            prop_assert!(kkt_residual(&gains, gamma, &water_level(&gains, gamma).unwrap()) < 1e-8);
            let best = constrained_capacity(&ch, &wf, gamma).unwrap();
            prop_assert!(best.eigenvalues.iter().all(|&l| l >= 0.0));
            for kind in [CovarianceKind::IdentityScaled, CovarianceKind::MainLobeUniform] {
                let c = constrained_capacity(&ch, &preset_covariance(kind, &gt).unwrap(), gamma).unwrap();
                prop_assert!(best.nats >= c.nats - 1e-10);
            }
            let again = constrained_capacity(&ch, &wf, gamma).unwrap();
            prop_assert_eq!(again.nats.to_bits(), best.nats.to_bits());
        }
    }
}
