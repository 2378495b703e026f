//! Physical channel instances and their angular-domain representation.
//!
//! A channel instance is a finite set of propagation paths, each with a complex
//! attenuation and transmit/receive directional cosines. The spatial channel is
//!
//! ```text
//! H = √(NM) Σ_p a_p s_r(ω_r,p) s_t(ω_t,p)^H
//! ```
//!
//! and its angular-domain gains satisfy `H = U_r G U_t^H / (2√(Δ_t Δ_r))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::arraykit::{dft_basis, f_from_index, signature, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{max_singular_value, CMatrix};

/// Per-path draw limit for rejection sampling into a restricted domain.
pub const MAX_REJECTION_DRAWS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub re: f64,
    pub im: f64,
    pub omega_t: f64,
    pub omega_r: f64,
}

impl Path {
    pub fn attenuation(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Finite set of propagation paths. Serializes as
/// `{"paths": [{"re", "im", "omega_t", "omega_r"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn single(a: Complex64, omega_t: f64, omega_r: f64) -> Self {
        Self::new(vec![Path {
            re: a.re,
            im: a.im,
            omega_t,
            omega_r,
        }])
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// `Σ_p |a_p|²`.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.re * p.re + p.im * p.im).sum()
    }

    /// Whether every path lies inside the restricted domains.
    pub fn within(&self, tx: &Restriction, rx: &Restriction) -> bool {
        self.paths
            .iter()
            .all(|p| tx.contains(p.omega_t) && rx.contains(p.omega_r))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// The slowly diverging sequence value `s_L` used to restrict directional
/// cosines to `D_L = [-(1 - s_L/L), 1 - s_L/L]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRestriction {
    pub s_l: u32,
}

impl DomainRestriction {
    pub fn new(s_l: u32, length: u32) -> Result<Self> {
        if s_l == 0 || s_l > length {
            return Err(Error::InvalidArgument(format!(
                "s_L = {s_l} must satisfy 1 <= s_L <= L = {length}"
            )));
        }
        Ok(Self { s_l })
    }

    /// Default rule `s_L = ⌈√L⌉`.
    pub fn sqrt_rule(length: u32) -> Self {
        Self {
            s_l: sqrt_rule(length),
        }
    }

    pub fn bind(self, length: u32) -> Restriction {
        Restriction {
            half_width: 1.0 - self.s_l as f64 / length as f64,
        }
    }
}

/// `⌈√L⌉`, computed in integers.
pub fn sqrt_rule(length: u32) -> u32 {
    let mut s = (length as f64).sqrt() as u32;
    while (s as u64) * (s as u64) < length as u64 {
        s += 1;
    }
    while s > 1 && ((s - 1) as u64) * ((s - 1) as u64) >= length as u64 {
        s -= 1;
    }
    s.max(1)
}

/// A restriction bound to a concrete array length: `|Ω| <= half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restriction {
    pub half_width: f64,
}

impl Restriction {
    pub fn unrestricted() -> Self {
        Self { half_width: 1.0 }
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega.abs() <= self.half_width
    }

    /// `n` evenly spaced points spanning the domain (endpoints included).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => (0..n)
                .map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Draws a `P`-path Rayleigh instance: attenuations i.i.d. CN(0, 1/P), angles
/// uniform on `[0, 2π)`. With a restriction, each angle is redrawn until its
/// cosine falls inside the corresponding `D_L`.
pub fn rayleigh_instance<R: Rng + ?Sized>(
    p_count: usize,
    geom_t: &ArrayGeometry,
    geom_r: &ArrayGeometry,
    restriction: Option<DomainRestriction>,
    rng: &mut R,
) -> Result<PathSet> {
    if p_count == 0 {
        return Err(Error::InvalidArgument("path count must be >= 1".into()));
    }
    let (tx, rx) = match restriction {
        Some(r) => {
            DomainRestriction::new(r.s_l, geom_t.length())?;
            DomainRestriction::new(r.s_l, geom_r.length())?;
            (r.bind(geom_t.length()), r.bind(geom_r.length()))
        }
        None => (Restriction::unrestricted(), Restriction::unrestricted()),
    };
    let sd = (0.5 / p_count as f64).sqrt();
    let mut paths = Vec::with_capacity(p_count);
    for _ in 0..p_count {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let omega_t = draw_cosine(rng, &tx)?;
        let omega_r = draw_cosine(rng, &rx)?;
        paths.push(Path {
            re: sd * re,
            im: sd * im,
            omega_t,
            omega_r,
        });
    }
    Ok(PathSet::new(paths))
}

fn draw_cosine<R: Rng + ?Sized>(rng: &mut R, domain: &Restriction) -> Result<f64> {
    for _ in 0..MAX_REJECTION_DRAWS {
        let phi: f64 = rng.random::<f64>() * 2.0 * PI;
        let omega = phi.cos();
        if domain.contains(omega) {
            return Ok(omega);
        }
    }
    Err(Error::DegenerateRestriction {
        draws: MAX_REJECTION_DRAWS,
    })
}

/// Angular-domain channel `G` (`N × M`) with its two geometries.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularChannel {
    pub gains: CMatrix,
    pub geom_t: ArrayGeometry,
    pub geom_r: ArrayGeometry,
}

/// Assumption-1 style bookkeeping for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceFlags {
    pub total_power: f64,
    /// Largest singular value of `min{2L_t, 2L_r}^{-1/2} G`.
    pub sigma_max: f64,
    pub within_power_bound: bool,
    pub within_sigma_bound: bool,
}

impl AngularChannel {
    pub fn new(gains: CMatrix, geom_t: ArrayGeometry, geom_r: ArrayGeometry) -> Result<Self> {
        if gains.nrows() != geom_r.n() || gains.ncols() != geom_t.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", geom_r.n(), geom_t.n()),
                actual: format!("{}x{}", gains.nrows(), gains.ncols()),
            });
        }
        Ok(Self {
            gains,
            geom_t,
            geom_r,
        })
    }

    pub fn rows(&self) -> usize {
        self.gains.nrows()
    }

    pub fn cols(&self) -> usize {
        self.gains.ncols()
    }

    /// `2·min{L_t, L_r}`, the spatial degrees of freedom.
    pub fn degrees_of_freedom(&self) -> f64 {
        2.0 * self.geom_t.length().min(self.geom_r.length()) as f64
    }

    /// Largest singular value of the normalized gain matrix.
    pub fn normalized_sigma_max(&self) -> f64 {
        max_singular_value(&self.gains) / self.degrees_of_freedom().sqrt()
    }

    /// Checks the instance against configured bounds. Violations are reported,
    /// never corrected.
    pub fn flags(&self, paths: &PathSet, power_bound: f64, sigma_bound: f64) -> InstanceFlags {
        let total_power = paths.total_power();
        let sigma_max = self.normalized_sigma_max();
        InstanceFlags {
            total_power,
            sigma_max,
            within_power_bound: total_power <= power_bound,
            within_sigma_bound: sigma_max <= sigma_bound,
        }
    }
}

/// Angular gains `g_{n,m} = √(4 L_t L_r) Σ_p a_p f_r(ω_r - n/L_r) f_t*(ω_t - m/L_t)`.
///
/// The kernel arguments are oriented so that `G = 2√(Δ_t Δ_r) U_r^H H U_t`
/// holds exactly for the spatial channel `H`.
pub fn angular_gains(paths: &PathSet, geom_t: &ArrayGeometry, geom_r: &ArrayGeometry) -> AngularChannel {
    let (n, m, p) = (geom_r.n(), geom_t.n(), paths.len());
    let scale = (4.0 * geom_t.length() as f64 * geom_r.length() as f64).sqrt();
    let rx = CMatrix::from_fn(n, p, |row, q| {
        let path = &paths.paths[q];
        path.attenuation() * f_from_index(geom_r, row as i64, path.omega_r) * scale
    });
    let tx = CMatrix::from_fn(m, p, |col, q| {
        f_from_index(geom_t, col as i64, paths.paths[q].omega_t)
    });
    let gains = if p == 0 {
        CMatrix::zeros(n, m)
    } else {
        rx * tx.adjoint()
    };
    AngularChannel {
        gains,
        geom_t: *geom_t,
        geom_r: *geom_r,
    }
}

/// Spatial channel from the angular representation: `U_r G U_t^H / (2√(Δ_t Δ_r))`.
pub fn spatial_channel(ch: &AngularChannel) -> CMatrix {
    let ur = dft_basis(&ch.geom_r);
    let ut = dft_basis(&ch.geom_t);
    let denom = 2.0 * (ch.geom_t.delta() * ch.geom_r.delta()).sqrt();
    (ur * &ch.gains * ut.adjoint()).unscale(denom)
}

/// Spatial channel summed path by path: `√(NM) Σ_p a_p s_r(ω_r) s_t(ω_t)^H`.
pub fn spatial_channel_direct(paths: &PathSet, geom_t: &ArrayGeometry, geom_r: &ArrayGeometry) -> CMatrix {
    let (n, m) = (geom_r.n(), geom_t.n());
    let scale = ((n * m) as f64).sqrt();
    let mut h = CMatrix::zeros(n, m);
    for path in &paths.paths {
        let sr = signature(geom_r, path.omega_r);
        let st = signature(geom_t, path.omega_t);
        h += (sr * st.adjoint()) * (path.attenuation() * scale);
    }
    h
}

/// Normalized SNR `γ̃ = γ / (4 Δ_t Δ_r)`.
pub fn normalized_snr(gamma: f64, geom_t: &ArrayGeometry, geom_r: &ArrayGeometry) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be positive, got {gamma}")));
    }
    let (pt, qt) = geom_t.separation();
    let (pr, qr) = geom_r.separation();
    // γ q_t q_r / (4 p_t p_r), with the rational part formed exactly
    let num = qt as u64 * qr as u64;
    let den = 4 * pt as u64 * pr as u64;
    Ok(gamma * num as f64 / den as f64)
}

/// Zeroes every gain outside `N × M` (the main-lobe index sets).
pub fn truncate(ch: &AngularChannel) -> AngularChannel {
    let rows = ch.geom_r.main_lobe_mask();
    let cols = ch.geom_t.main_lobe_mask();
    let mut gains = ch.gains.clone();
    for j in 0..gains.ncols() {
        for i in 0..gains.nrows() {
            if !(rows[i] && cols[j]) {
                gains[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    AngularChannel {
        gains,
        geom_t: ch.geom_t,
        geom_r: ch.geom_r,
    }
}

/// Inserts `k` zero rows and `k` zero columns after the first `n` rows and
/// columns of `a`.
pub fn extend_matrix(a: &CMatrix, n: usize, k: usize) -> Result<CMatrix> {
    if n > a.nrows().min(a.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "split index {n} exceeds matrix dimensions {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let map = |i: usize| if i < n { Some(i) } else if i < n + k { None } else { Some(i - k) };
    Ok(CMatrix::from_fn(a.nrows() + k, a.ncols() + k, |i, j| match (map(i), map(j)) {
        (Some(r), Some(c)) => a[(r, c)],
        _ => Complex64::new(0.0, 0.0),
    }))
}

/// Index map `κ_{L,Δ}` for an `N`-element array: `[0:2L] → K₁ ∪ {L}`.
pub fn kappa_index(length: usize, elements: usize, k: usize) -> usize {
    if k < length {
        k
    } else if k < 2 * length {
        k + elements - 2 * length
    } else {
        length
    }
}

/// Source index of each row of the `(2L+1)`-sized shrunk/extended layout:
/// `κ(k)` for dense arrays, identity plus one zero slot for critical arrays.
fn bar_source(geom: &ArrayGeometry) -> Vec<Option<usize>> {
    let l = geom.length() as usize;
    (0..=2 * l)
        .map(|k| {
            if geom.is_critical() {
                (k < 2 * l).then_some(k)
            } else {
                Some(kappa_index(l, geom.n(), k))
            }
        })
        .collect()
}

/// Shrunk channel `(2L_r+1) × (2L_t+1)` of a truncated, densely spaced
/// channel: zero rows/columns removed, then row `L_r` and column `L_t` moved
/// last.
pub fn shrink(ch_truncated: &AngularChannel) -> Result<CMatrix> {
    if ch_truncated.geom_t.is_critical() || ch_truncated.geom_r.is_critical() {
        return Err(Error::InvalidArgument(
            "shrink requires Δ_t, Δ_r < 1/2".into(),
        ));
    }
    if ch_truncated.rows() != ch_truncated.geom_r.n() || ch_truncated.cols() != ch_truncated.geom_t.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", ch_truncated.geom_r.n(), ch_truncated.geom_t.n()),
            actual: format!("{}x{}", ch_truncated.rows(), ch_truncated.cols()),
        });
    }
    let rows = ch_truncated.geom_r.main_lobe_mask();
    let cols = ch_truncated.geom_t.main_lobe_mask();
    for j in 0..ch_truncated.cols() {
        for i in 0..ch_truncated.rows() {
            if !(rows[i] && cols[j]) && ch_truncated.gains[(i, j)].norm() != 0.0 {
                return Err(Error::NotTruncated { row: i, col: j });
            }
        }
    }
    Ok(bar_matrix(ch_truncated))
}

/// Inverse of [`shrink`]: embeds a shrunk matrix back into the `N × M` layout.
pub fn unshrink(bar: &CMatrix, geom_t: &ArrayGeometry, geom_r: &ArrayGeometry) -> Result<CMatrix> {
    let (lr, lt) = (geom_r.length() as usize, geom_t.length() as usize);
    if bar.nrows() != 2 * lr + 1 || bar.ncols() != 2 * lt + 1 {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", 2 * lr + 1, 2 * lt + 1),
            actual: format!("{}x{}", bar.nrows(), bar.ncols()),
        });
    }
    let mut out = CMatrix::zeros(geom_r.n(), geom_t.n());
    let rs = bar_source(geom_r);
    let cs = bar_source(geom_t);
    for (i, r) in rs.iter().enumerate() {
        for (j, c) in cs.iter().enumerate() {
            if let (Some(r), Some(c)) = (r, c) {
                out[(*r, *c)] = bar[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `(2L_r+1) × (2L_t+1)` layout used to compare critical and dense arrays.
/// Dense sides are shrunk through `κ`; critical sides keep their `2L`
/// indices and gain one trailing zero row/column.
pub fn bar_matrix(ch: &AngularChannel) -> CMatrix {
    let rs = bar_source(&ch.geom_r);
    let cs = bar_source(&ch.geom_t);
    CMatrix::from_fn(rs.len(), cs.len(), |i, j| match (rs[i], cs[j]) {
        (Some(r), Some(c)) => ch.gains[(r, c)],
        _ => Complex64::new(0.0, 0.0),
    })
}
