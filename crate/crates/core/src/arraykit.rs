//! Uniform linear array primitives.
//!
//! An array of normalized length `L` (in carrier wavelengths) carries `N`
//! elements at normalized separation `Δ = L/N`. The separation is never stored
//! as a float: every antenna-index computation stays in integers so the comb
//! identities of the array kernel (`f(k/L) = 1` when `N | k`, else `0`) hold to
//! rounding error.
//!
//! The inner-product kernel is
//!
//! ```text
//! f(Ω) = (1/N) Σ_{n=0}^{N-1} exp(-2πj n Δ Ω) = exp(-πj (L-Δ) Ω) · sinc_N(L Ω)
//! ```
//!
//! with `sinc_N(x) = sin(πx) / (N sin(πx/N))`. Directional cosines physically
//! live in `[-1, 1]`, but every function here accepts any real `Ω` so the
//! periodic extension can be probed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Width of the window around `x = kN` where `sinc_n` returns its removable
/// singularity value.
pub const SINC_SINGULAR_WINDOW: f64 = 1e-9;

/// Uniform linear array: integer length `L`, `N` elements, `Δ = L/N ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayGeometry {
    length: u32,
    elements: u32,
}

impl ArrayGeometry {
    /// Geometry from the array length and element count.
    pub fn new(length: u32, elements: u32) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidGeometry("array length must be >= 1".into()));
        }
        if (elements as u64) < 2 * length as u64 {
            return Err(Error::InvalidGeometry(format!(
                "N = {elements} < 2L = {}: separation exceeds 1/2",
                2 * length as u64
            )));
        }
        Ok(Self { length, elements })
    }

    /// Geometry from the array length and separation `num/den`. Fails when
    /// `L·den/num` is not an integer.
    pub fn with_separation(length: u32, num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidGeometry("separation must be positive".into()));
        }
        let scaled = length as u64 * den as u64;
        if scaled % num as u64 != 0 {
            return Err(Error::InvalidGeometry(format!(
                "L = {length} is not an integer multiple of Δ = {num}/{den}"
            )));
        }
        let elements = u32::try_from(scaled / num as u64)
            .map_err(|_| Error::InvalidGeometry("element count overflows u32".into()))?;
        Self::new(length, elements)
    }

    /// Critically spaced array (`Δ = 1/2`).
    pub fn critical(length: u32) -> Result<Self> {
        Self::new(length, 2 * length)
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn elements(&self) -> u32 {
        self.elements
    }

    pub fn n(&self) -> usize {
        self.elements as usize
    }

    /// `Δ` as a float (derived; never used for index arithmetic).
    pub fn delta(&self) -> f64 {
        self.length as f64 / self.elements as f64
    }

    /// `Δ` as a reduced fraction `(num, den)`.
    pub fn separation(&self) -> (u32, u32) {
        let g = gcd(self.length, self.elements);
        (self.length / g, self.elements / g)
    }

    pub fn is_critical(&self) -> bool {
        self.elements == 2 * self.length
    }

    /// The same array length at critical spacing.
    pub fn critical_counterpart(&self) -> Self {
        Self {
            length: self.length,
            elements: 2 * self.length,
        }
    }

    /// Angular indices whose beams have a main lobe: `[0:L] ∪ [N-L:N)`.
    pub fn main_lobe_mask(&self) -> Vec<bool> {
        let l = self.length as usize;
        let n = self.n();
        (0..n).map(|k| k <= l || k >= n - l).collect()
    }
}

impl std::fmt::Display for ArrayGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (p, q) = self.separation();
        write!(f, "L={} Δ={}/{} N={}", self.length, p, q, self.elements)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Unit spatial signature: entry `n` is `exp(-2πj nΔΩ)/√N`.
pub fn signature(geom: &ArrayGeometry, omega: f64) -> CVector {
    let n = geom.n();
    let scale = 1.0 / (n as f64).sqrt();
    let step = geom.delta() * omega;
    CVector::from_fn(n, |i, _| Complex64::from_polar(scale, -2.0 * PI * i as f64 * step))
}

/// `sinc_N(x) = sin(πx)/(N sin(πx/N))`, defined as `1` at `x = kN`.
///
/// For even `N` and odd `k` the continuous limit at `x = kN` is `-1`; the
/// value `1` is kept as the definition. [`f_kernel`] never hits that case
/// because it reduces its argument to one period first.
pub fn sinc_n(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "sinc_n requires N >= 1");
    let nf = n as f64;
    let k = (x / nf).round();
    if (x - k * nf).abs() < SINC_SINGULAR_WINDOW {
        return 1.0;
    }
    (PI * x).sin() / (nf * (PI * x / nf).sin())
}

/// `sinc_N` at the rational point `x = num/den`, with an exact integer test
/// for the removable singularity.
pub fn sinc_n_rational(n: u32, num: i64, den: u64) -> f64 {
    assert!(n >= 1 && den >= 1);
    if num.rem_euclid(n as i64 * den as i64) == 0 {
        return 1.0;
    }
    let x = num as f64 / den as f64;
    (PI * x).sin() / (n as f64 * (PI * x / n as f64).sin())
}

/// Kernel as a function of `x = LΩ`, closed form on the reduced period.
pub(crate) fn kernel_at_scaled(geom: &ArrayGeometry, x: f64) -> Complex64 {
    let nf = geom.elements as f64;
    let r = x - nf * (x / nf).round();
    // (L - Δ)Ω = r (1 - 1/N) after reduction; the sign follows the sum
    let phase = -PI * r * (1.0 - 1.0 / nf);
    Complex64::from_polar(sinc_n(geom.elements, r), phase)
}

/// Array kernel `f_{L,Δ}(Ω)` via the closed form.
pub fn f_kernel(geom: &ArrayGeometry, omega: f64) -> Complex64 {
    kernel_at_scaled(geom, geom.length as f64 * omega)
}

/// `f(k/L - Ω)`, evaluated without forming `k/L` in floating point.
pub fn f_at_index(geom: &ArrayGeometry, k: i64, omega: f64) -> Complex64 {
    kernel_at_scaled(geom, k as f64 - geom.length as f64 * omega)
}

/// `f(Ω - k/L)`, the basis coefficient of `signature(Ω)` along `signature(k/L)`.
pub fn f_from_index(geom: &ArrayGeometry, k: i64, omega: f64) -> Complex64 {
    kernel_at_scaled(geom, geom.length as f64 * omega - k as f64)
}

/// Array kernel by direct summation over the `N` elements (verification path).
pub fn f_kernel_direct(geom: &ArrayGeometry, omega: f64) -> Complex64 {
    let n = geom.n();
    let x = geom.length as f64 * omega;
    let nf = n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        acc += Complex64::from_polar(1.0, -2.0 * PI * i as f64 * x / nf);
    }
    acc / nf
}

/// Kernel evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    #[default]
    ClosedForm,
    DirectSum,
}

pub fn f_kernel_with(geom: &ArrayGeometry, omega: f64, mode: KernelMode) -> Complex64 {
    match mode {
        KernelMode::ClosedForm => f_kernel(geom, omega),
        KernelMode::DirectSum => f_kernel_direct(geom, omega),
    }
}

/// Angular basis `U`: column `k` is `signature(k/L)`, i.e. the unitary
/// `N`-point DFT matrix (entry `(i, k) = exp(-2πj ik/N)/√N`).
pub fn dft_basis(geom: &ArrayGeometry) -> CMatrix {
    let n = geom.n();
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |i, k| {
        let r = (i * k) % n;
        Complex64::from_polar(scale, -2.0 * PI * r as f64 / n as f64)
    })
}

/// Coefficients of `signature(Ω)` in the angular basis.
///
/// Coefficient `k` is `s(k/L)^H s(Ω) = f(Ω - k/L) = conj f(k/L - Ω)`, so that
/// `Σ_k coeff_k · signature(k/L)` reproduces `signature(Ω)`.
pub fn basis_expand(geom: &ArrayGeometry, omega: f64) -> CVector {
    CVector::from_fn(geom.n(), |k, _| f_from_index(geom, k as i64, omega))
}

/// Beamforming pattern `|f(k/L - cos φ)|` sampled over `phi_grid`.
pub fn beam_pattern(geom: &ArrayGeometry, k: u32, phi_grid: &[f64]) -> Result<Vec<f64>> {
    if k >= geom.elements {
        return Err(Error::InvalidArgument(format!(
            "beam index {k} outside [0, {})",
            geom.elements
        )));
    }
    Ok(phi_grid
        .iter()
        .map(|&phi| f_at_index(geom, k as i64, phi.cos()).norm())
        .collect())
}
