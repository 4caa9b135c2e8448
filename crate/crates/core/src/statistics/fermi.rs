//! Complete Fermi–Dirac integrals of order 1/2 and −1/2 (normalized so that
//! `d/dz F_{1/2} = F_{-1/2}`).
//!
//! Three regimes:
//! * `z < -2`: alternating exponential series,
//! * `-2 <= z < 100`: piecewise Chebyshev interpolants (see `tools/gen_fermi_table.py`),
//! * `z >= 100`: Sommerfeld expansion; the exponentially small remainder is below 1e-40.
//!
//! [`half_by_quadrature`] evaluates the defining integral directly and is the
//! reference against which the fast path is checked.

use super::fermi_table::{BREAKS, HALF, MINUS_HALF};
use crate::math::{exp, powf, sqrt};
use crate::quadrature::integrate;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const PI2: f64 = core::f64::consts::PI * core::f64::consts::PI;
const SERIES_LIMIT: f64 = -2.0;
const ASYMPTOTIC_LIMIT: f64 = 100.0;

pub(crate) fn half(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        series(z, 1.5)
    } else if z >= ASYMPTOTIC_LIMIT {
        sommerfeld(z, 0.5)
    } else {
        chebyshev(&HALF, z)
    }
}

pub(crate) fn minus_half(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        series(z, 0.5)
    } else if z >= ASYMPTOTIC_LIMIT {
        sommerfeld(z, -0.5)
    } else {
        chebyshev(&MINUS_HALF, z)
    }
}

/// `(F_{1/2}(z), F_{-1/2}(z))` sharing the exponential or the table lookup.
pub(crate) fn half_pair(z: f64) -> (f64, f64) {
    if z < SERIES_LIMIT {
        let r = exp(z);
        let mut term_pow = r;
        let (mut s32, mut s12) = (0.0, 0.0);
        let mut sign = 1.0;
        for (w32, w12) in INV_K_POW_3_2.iter().zip(&INV_K_POW_1_2) {
            s32 += sign * term_pow * w32;
            s12 += sign * term_pow * w12;
            if term_pow * w12 < 1e-18 * s12 {
                break;
            }
            sign = -sign;
            term_pow *= r;
        }
        (s32, s12)
    } else if z >= ASYMPTOTIC_LIMIT {
        (sommerfeld(z, 0.5), sommerfeld(z, -0.5))
    } else {
        let idx = BREAKS[1..].partition_point(|&b| b <= z).min(HALF.len() - 1);
        (
            chebyshev_piece(&HALF, idx, z),
            chebyshev_piece(&MINUS_HALF, idx, z),
        )
    }
}

/// Σ_{k≥1} (−1)^{k+1} e^{kz} / k^p for z < −2, where 40 terms reach full precision.
fn series(z: f64, p: f64) -> f64 {
    let weights = if p == 1.5 {
        &INV_K_POW_3_2
    } else {
        &INV_K_POW_1_2
    };
    let r = exp(z);
    let mut term_pow = r;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for w in weights {
        let term = term_pow * w;
        sum += sign * term;
        if term < 1e-18 * sum {
            break;
        }
        sign = -sign;
        term_pow *= r;
    }
    sum
}

/// `k^{-3/2}`, `k = 1..=40`.
const INV_K_POW_3_2: [f64; 40] = [
    1.0,
    0.35355339059327373,
    0.19245008972987526,
    0.125,
    0.08944271909999159,
    0.06804138174397717,
    0.05399492471560388,
    0.044194173824159216,
    0.037037037037037035,
    0.03162277660168379,
    0.027410122234342145,
    0.024056261216234408,
    0.021334622931739582,
    0.019090088708030313,
    0.01721325931647741,
    0.015625,
    0.01426680147272547,
    0.013094570021973104,
    0.012074512308976933,
    0.011180339887498949,
    0.010391328106475828,
    0.009690941652527747,
    0.009065844089438033,
    0.008505172717997146,
    0.008,
    0.00754292827454554,
    0.007127781101106491,
    0.006749365589450485,
    0.006403287523346617,
    0.006085806194501846,
    0.005793719420218546,
    0.005524271728019902,
    0.0052750804835059945,
    0.005044076033603201,
    0.004829452884162952,
    0.004629629629629629,
    0.004443215873117765,
    0.004268984766599014,
    0.004105850097566336,
    0.003952847075210474,
];
/// `k^{-1/2}`, `k = 1..=40`.
const INV_K_POW_1_2: [f64; 40] = [
    1.0,
    0.7071067811865475,
    0.5773502691896258,
    0.5,
    0.4472135954999579,
    0.4082482904638631,
    0.3779644730092272,
    0.35355339059327373,
    0.3333333333333333,
    0.31622776601683794,
    0.30151134457776363,
    0.2886751345948129,
    0.2773500981126146,
    0.2672612419124244,
    0.2581988897471611,
    0.25,
    0.24253562503633297,
    0.23570226039551587,
    0.22941573387056174,
    0.22360679774997896,
    0.2182178902359924,
    0.21320071635561041,
    0.20851441405707477,
    0.20412414523193154,
    0.2,
    0.19611613513818404,
    0.19245008972987526,
    0.1889822365046136,
    0.18569533817705186,
    0.18257418583505536,
    0.1796053020267749,
    0.17677669529663687,
    0.17407765595569785,
    0.17149858514250882,
    0.1690308509457033,
    0.16666666666666666,
    0.1643989873053573,
    0.16222142113076254,
    0.16012815380508713,
    0.15811388300841897,
];

fn chebyshev<const D: usize>(table: &[[f64; D]], z: f64) -> f64 {
    let idx = BREAKS[1..]
        .partition_point(|&b| b <= z)
        .min(table.len() - 1);
    chebyshev_piece(table, idx, z)
}

fn chebyshev_piece<const D: usize>(table: &[[f64; D]], idx: usize, z: f64) -> f64 {
    let (a, b) = (BREAKS[idx], BREAKS[idx + 1]);
    let t = (2.0 * z - a - b) / (b - a);
    let c = &table[idx];
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c[1..].iter().rev() {
        let tmp = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = tmp;
    }
    t * b1 - b2 + c[0]
}

/// z^{j+1}/Γ(j+2) · [1 + Σ_k 2(1−2^{1−2k}) ζ(2k) (j+1)j⋯(j+2−2k) z^{−2k}], k ≤ 4.
fn sommerfeld(z: f64, j: f64) -> f64 {
    let zeta_even = [
        PI2 / 6.0,
        PI2 * PI2 / 90.0,
        PI2 * PI2 * PI2 / 945.0,
        PI2 * PI2 * PI2 * PI2 / 9450.0,
    ];
    let gamma = if j == 0.5 {
        0.75 * SQRT_PI
    } else {
        0.5 * SQRT_PI
    };
    let inv_z2 = 1.0 / (z * z);
    let mut falling = 1.0;
    let mut zpow = 1.0;
    let mut sum = 1.0;
    for (k, zeta) in zeta_even.iter().enumerate() {
        let m = 2 * k as i32;
        falling *= (j + 1.0 - m as f64) * (j - m as f64);
        zpow *= inv_z2;
        let two_k = 2.0 * (k as f64 + 1.0);
        sum += 2.0 * (1.0 - powf(2.0, 1.0 - two_k)) * zeta * falling * zpow;
    }
    powf(z, j + 1.0) / gamma * sum
}

fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + exp(-y))
    } else {
        let e = exp(y);
        e / (1.0 + e)
    }
}

/// Panel breakpoints in `t = sqrt(ξ)` bracketing the Fermi edge at `ξ = z`.
fn panels(z: f64) -> [f64; 8] {
    let mut xi = [
        0.0,
        z - 30.0,
        z - 10.0,
        z - 3.0,
        z,
        z + 3.0,
        z + 10.0,
        z.max(0.0) + 50.0,
    ];
    for x in xi.iter_mut() {
        *x = sqrt(x.max(0.0));
    }
    xi
}

/// F_{1/2}(z) = (2/√π) ∫₀^∞ ξ^{1/2} / (exp(ξ−z)+1) dξ by adaptive Gauss–Legendre
/// quadrature after the substitution ξ = t².
pub fn half_by_quadrature(z: f64) -> f64 {
    let f = |t: f64| t * t * logistic(z - t * t);
    let p = panels(z);
    let mut acc = 0.0;
    for w in p.windows(2) {
        acc += integrate(&f, w[0], w[1], 1e-14, 0.0);
    }
    4.0 / SQRT_PI * acc
}

/// F_{-1/2}(z) by the same quadrature.
pub fn minus_half_by_quadrature(z: f64) -> f64 {
    let f = |t: f64| logistic(z - t * t);
    let p = panels(z);
    let mut acc = 0.0;
    for w in p.windows(2) {
        acc += integrate(&f, w[0], w[1], 1e-14, 0.0);
    }
    2.0 / SQRT_PI * acc
}
