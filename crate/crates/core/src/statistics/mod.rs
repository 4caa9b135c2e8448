//! Carrier statistics: the functions mapping a (shifted) chemical potential to a
//! normalized density, their derivatives and inverses.
//!
//! Electrons and holes use unbounded statistics (Boltzmann or Fermi–Dirac of
//! order 1/2); ionic vacancies use the bounded Blakemore family
//! `F(z) = 1 / (exp(-z) + γ)` whose values stay below `1/γ`.

mod axioms;
mod fermi;
#[rustfmt::skip]
mod fermi_table;

pub use axioms::{verify_axioms, Axiom, AxiomEntry, AxiomFamily, AxiomReport};
pub use fermi::{
    half_by_quadrature as fermi_dirac_half_quadrature,
    minus_half_by_quadrature as fermi_dirac_minus_half_quadrature,
};

use crate::math::{exp, ln, ln_1p, powf};
use serde::{Deserialize, Serialize};

/// Relative distance to an open range endpoint below which inverses refuse to work.
pub const RANGE_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum StatisticsError {
    #[error("non-finite argument {0}")]
    NonFinite(f64),
    #[error("density {value} outside the open range ({lower}, {upper})")]
    OutOfRange { value: f64, lower: f64, upper: f64 },
    #[error("Blakemore parameter gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("density of states must be positive, got {0}")]
    InvalidDensityOfStates(f64),
}

/// Statistics function family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatisticsKind {
    Boltzmann,
    FermiDiracHalf,
    Blakemore { gamma: f64 },
}

impl StatisticsKind {
    pub fn blakemore(gamma: f64) -> Result<Self, StatisticsError> {
        let kind = StatisticsKind::Blakemore { gamma };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<(), StatisticsError> {
        match *self {
            StatisticsKind::Blakemore { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(StatisticsError::InvalidGamma(gamma))
            }
            _ => Ok(()),
        }
    }

    /// Supremum of the range of `F`; `None` when unbounded.
    pub fn upper_limit(&self) -> Option<f64> {
        match *self {
            StatisticsKind::Blakemore { gamma } => Some(1.0 / gamma),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.upper_limit().is_some()
    }

    pub fn eval(&self, z: f64) -> Result<f64, StatisticsError> {
        finite(z)?;
        Ok(match *self {
            StatisticsKind::Boltzmann => exp(z),
            StatisticsKind::FermiDiracHalf => fermi::half(z),
            StatisticsKind::Blakemore { gamma } => {
                if z >= 0.0 {
                    1.0 / (exp(-z) + gamma)
                } else {
                    let e = exp(z);
                    e / (1.0 + gamma * e)
                }
            }
        })
    }

    pub fn deriv(&self, z: f64) -> Result<f64, StatisticsError> {
        finite(z)?;
        Ok(match *self {
            StatisticsKind::Boltzmann => exp(z),
            StatisticsKind::FermiDiracHalf => fermi::minus_half(z),
            StatisticsKind::Blakemore { gamma } => {
                if z >= 0.0 {
                    let e = exp(-z);
                    e / ((e + gamma) * (e + gamma))
                } else {
                    let e = exp(z);
                    e / ((1.0 + gamma * e) * (1.0 + gamma * e))
                }
            }
        })
    }

    /// Second derivative; closed form except for Fermi–Dirac, where a central
    /// difference of the (smooth) first derivative is used.
    pub fn second_deriv(&self, z: f64) -> Result<f64, StatisticsError> {
        finite(z)?;
        Ok(match *self {
            StatisticsKind::Boltzmann => exp(z),
            StatisticsKind::FermiDiracHalf => {
                let h = 1e-4 * z.abs().max(1.0);
                (fermi::minus_half(z + h) - fermi::minus_half(z - h)) / (2.0 * h)
            }
            StatisticsKind::Blakemore { gamma } => {
                let f = self.eval(z)?;
                let fp = self.deriv(z)?;
                // 1 − 2γF, with 1 − γF = e^{−z}F for z ≥ 0 to keep digits.
                let one_minus = if z >= 0.0 {
                    exp(-z) * f
                } else {
                    1.0 - gamma * f
                };
                fp * (one_minus - gamma * f)
            }
        })
    }

    /// Inverse of `F` on its range.
    pub fn inverse(&self, u: f64) -> Result<f64, StatisticsError> {
        finite(u)?;
        match *self {
            StatisticsKind::Boltzmann => {
                if u <= 0.0 {
                    return Err(out_of_range(u, None));
                }
                Ok(ln(u))
            }
            StatisticsKind::FermiDiracHalf => {
                if u <= 0.0 {
                    return Err(out_of_range(u, None));
                }
                Ok(invert_fermi_half(u))
            }
            StatisticsKind::Blakemore { gamma } => {
                let upper = 1.0 / gamma;
                if u <= RANGE_GUARD * upper || u >= upper * (1.0 - RANGE_GUARD) {
                    return Err(out_of_range(u, Some(upper)));
                }
                Ok(ln(u) - ln_1p(-gamma * u))
            }
        }
    }

    /// `ln w − F^{-1}(w)`: the log of the degeneracy factor `F(s)/e^s`.
    /// Zero for Boltzmann, negative otherwise.
    pub fn log_degeneracy(&self, w: f64) -> Result<f64, StatisticsError> {
        match *self {
            StatisticsKind::Boltzmann => {
                self.inverse(w)?;
                Ok(0.0)
            }
            StatisticsKind::Blakemore { gamma } => {
                self.inverse(w)?;
                Ok(ln_1p(-gamma * w))
            }
            StatisticsKind::FermiDiracHalf => Ok(ln(w) - self.inverse(w)?),
        }
    }
}

fn finite(x: f64) -> Result<(), StatisticsError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(StatisticsError::NonFinite(x))
    }
}

fn out_of_range(value: f64, upper: Option<f64>) -> StatisticsError {
    StatisticsError::OutOfRange {
        value,
        lower: 0.0,
        upper: upper.unwrap_or(f64::INFINITY),
    }
}

/// Bracketed Newton iteration for `F_{1/2}(z) = u` with bisection fallback.
fn invert_fermi_half(u: f64) -> f64 {
    // F ≤ e^z gives the lower end; for z ≤ 0, F ≥ e^z (1 − e^z/2^{3/2}) ≥ 0.64 e^z,
    // and for z > 0 the Sommerfeld leading term is a lower bound on F.
    const SOMMERFELD_LEAD: f64 = 0.752_252_778_063_675; // 4 / (3 √π)
    let mut lo = ln(u);
    let mut hi = (ln(u) - ln(0.64)).max(powf(u / SOMMERFELD_LEAD, 2.0 / 3.0));
    if hi <= lo {
        hi = lo + 1.0;
    }
    // Joyce–Dixon expansion below u = 8, accurate to about 1e-6 there.
    let mut z = if u < 8.0 {
        ln(u)
            + u * (0.353_553_390_593_273_8
                + u * (-4.950_089_729_875_25e-3
                    + u * (1.483_857_712_216_2e-4 - u * 4.425_630_061_733_4e-6)))
    } else {
        powf(u / SOMMERFELD_LEAD, 2.0 / 3.0)
    };
    if !(z > lo && z < hi) {
        z = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let (half, minus_half) = fermi::half_pair(z);
        let f = half - u;
        if f == 0.0 {
            return z;
        }
        if f > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let step = f / minus_half;
        let mut next = z - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let tol = 4.0 * f64::EPSILON * next.abs().max(1.0);
        if (next - z).abs() <= tol || hi - lo <= tol {
            return next;
        }
        z = next;
    }
    z
}

/// Statistics of one species: `e(y) = F(y + ζ)` scaled by the density of states `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedStatistics {
    pub kind: StatisticsKind,
    /// Band-edge shift ζ.
    pub zeta: f64,
    /// Density of states (maximal vacancy density for Blakemore species).
    pub n_states: f64,
}

/// Everything the discretization needs about a density value, from a single inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStatistics {
    /// Chemical potential `v = e^{-1}(u/N)`.
    pub v: f64,
    /// `ln(u/N) − (v + ζ)`.
    pub log_degeneracy: f64,
    /// `d log_degeneracy / du`.
    pub log_degeneracy_du: f64,
    /// `dv/du`.
    pub dv_du: f64,
}

impl ShiftedStatistics {
    pub fn new(kind: StatisticsKind, zeta: f64, n_states: f64) -> Result<Self, StatisticsError> {
        kind.validate()?;
        if !(n_states > 0.0 && n_states.is_finite()) {
            return Err(StatisticsError::InvalidDensityOfStates(n_states));
        }
        finite(zeta)?;
        Ok(Self {
            kind,
            zeta,
            n_states,
        })
    }

    /// Supremum of admissible densities (`N/γ` for Blakemore).
    pub fn density_limit(&self) -> Option<f64> {
        self.kind.upper_limit().map(|l| l * self.n_states)
    }

    /// `u = N e(v)`.
    pub fn carrier_density(&self, v: f64) -> Result<f64, StatisticsError> {
        Ok(self.n_states * self.kind.eval(v + self.zeta)?)
    }

    /// `v = e^{-1}(u/N) = F^{-1}(u/N) − ζ`.
    pub fn chemical_potential(&self, u: f64) -> Result<f64, StatisticsError> {
        Ok(self.kind.inverse(u / self.n_states)? - self.zeta)
    }

    /// `g(u) = (u/N)·(e^{-1})'(u/N)`; the factor turning `u ∇v` into `g(u) ∇u`.
    pub fn diffusion_enhancement(&self, u: f64) -> Result<f64, StatisticsError> {
        let w = u / self.n_states;
        match self.kind {
            StatisticsKind::Boltzmann => {
                self.kind.inverse(w)?;
                Ok(1.0)
            }
            StatisticsKind::Blakemore { gamma } => {
                self.kind.inverse(w)?;
                Ok(1.0 / (1.0 - gamma * w))
            }
            StatisticsKind::FermiDiracHalf => {
                let s = self.kind.inverse(w)?;
                Ok(w / fermi::minus_half(s))
            }
        }
    }

    pub fn local(&self, u: f64) -> Result<LocalStatistics, StatisticsError> {
        let n = self.n_states;
        let w = u / n;
        match self.kind {
            StatisticsKind::Boltzmann => {
                let s = self.kind.inverse(w)?;
                Ok(LocalStatistics {
                    v: s - self.zeta,
                    log_degeneracy: 0.0,
                    log_degeneracy_du: 0.0,
                    dv_du: 1.0 / u,
                })
            }
            StatisticsKind::Blakemore { gamma } => {
                let s = self.kind.inverse(w)?;
                let one_minus = 1.0 - gamma * w;
                Ok(LocalStatistics {
                    v: s - self.zeta,
                    log_degeneracy: ln_1p(-gamma * w),
                    log_degeneracy_du: -gamma / (n * one_minus),
                    dv_du: 1.0 / (u * one_minus),
                })
            }
            StatisticsKind::FermiDiracHalf => {
                let s = self.kind.inverse(w)?;
                let fp = fermi::minus_half(s);
                let dv_du = 1.0 / (n * fp);
                Ok(LocalStatistics {
                    v: s - self.zeta,
                    log_degeneracy: ln(w) - s,
                    log_degeneracy_du: 1.0 / u - dv_du,
                    dv_du,
                })
            }
        }
    }

    /// Antiderivative of `e` (up to a constant), used for chemical free energies.
    /// `None` for families without a closed form.
    pub fn primitive(&self, y: f64) -> Option<f64> {
        let s = y + self.zeta;
        match self.kind {
            StatisticsKind::Boltzmann => Some(exp(s)),
            StatisticsKind::Blakemore { gamma } => {
                Some(crate::math::softplus(s + ln(gamma)) / gamma)
            }
            StatisticsKind::FermiDiracHalf => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use alloc::vec::Vec;

    const B1: StatisticsKind = StatisticsKind::Blakemore { gamma: 1.0 };
    const FD: StatisticsKind = StatisticsKind::FermiDiracHalf;
    const BZ: StatisticsKind = StatisticsKind::Boltzmann;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Independent oracle for F_{1/2}: composite Simpson in the original ξ variable
    // with the √ξ endpoint handled by ξ = t² only on [0, 1].
    fn simpson_oracle(z: f64) -> f64 {
        let f = |xi: f64| libm::sqrt(xi) / (libm::exp(xi - z) + 1.0);
        let head = |t: f64| 2.0 * t * t / (libm::exp(t * t - z) + 1.0);
        let simpson = |g: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = g(a) + g(b);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + k as f64 * h);
            }
            s * h / 3.0
        };
        let top = z.max(0.0) + 60.0;
        let body = simpson(&head, 0.0, 1.0, 2000) + simpson(&f, 1.0, top, 200_000);
        body * 2.0 / libm::sqrt(core::f64::consts::PI)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(B1.eval(0.0).unwrap(), 0.5);
        assert!(rel(BZ.eval(1.0).unwrap(), core::f64::consts::E) < 1e-15);
        assert!(rel(FD.eval(0.0).unwrap(), simpson_oracle(0.0)) < 1e-10);
        assert!(rel(FD.eval(-20.0).unwrap(), libm::exp(-20.0)) < 1e-6);
        assert!(matches!(
            FD.eval(f64::NAN),
            Err(StatisticsError::NonFinite(_))
        ));
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(B1.deriv(0.0).unwrap(), 0.25);
        for z in [-3.0, 0.0, 2.5] {
            assert_eq!(BZ.deriv(z).unwrap(), BZ.eval(z).unwrap());
        }
        let h = 1e-5;
        let fd = (FD.eval(h).unwrap() - FD.eval(-h).unwrap()) / (2.0 * h);
        assert!((FD.deriv(0.0).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(B1.inverse(0.5).unwrap(), 0.0);
        for k in 1..100 {
            let u = k as f64 / 100.0;
            let z = B1.inverse(u).unwrap();
            assert!((z - libm::log(u / (1.0 - u))).abs() < 1e-13);
            assert!(rel(B1.eval(z).unwrap(), u) < 1e-14);
        }
        let u = FD.eval(1.3).unwrap();
        assert!((FD.inverse(u).unwrap() - 1.3).abs() < 1e-10);
        assert!(matches!(
            B1.inverse(1.0),
            Err(StatisticsError::OutOfRange { .. })
        ));
        assert!(matches!(
            B1.inverse(-0.1),
            Err(StatisticsError::OutOfRange { .. })
        ));
        assert!(matches!(
            FD.inverse(0.0),
            Err(StatisticsError::OutOfRange { .. })
        ));
        assert!(StatisticsKind::blakemore(0.0).is_err());
    }

    #[test]
    fn shifted_examples() {
        let s = ShiftedStatistics::new(BZ, 0.0, 2.0).unwrap();
        assert_eq!(s.carrier_density(0.0).unwrap(), 2.0);
        let s = ShiftedStatistics::new(B1, 0.0, 1.0).unwrap();
        assert!((s.carrier_density(40.0).unwrap() - 1.0).abs() < 1e-12);
        let s = ShiftedStatistics::new(FD, 0.5, 1.0).unwrap();
        assert_eq!(s.carrier_density(0.0).unwrap(), FD.eval(0.5).unwrap());

        assert_eq!(
            ShiftedStatistics::new(BZ, 0.0, 1.0)
                .unwrap()
                .chemical_potential(1.0)
                .unwrap(),
            0.0
        );
        assert_eq!(
            ShiftedStatistics::new(B1, 0.0, 4.0)
                .unwrap()
                .chemical_potential(2.0)
                .unwrap(),
            0.0
        );
        for kind in [BZ, FD, B1] {
            let s = ShiftedStatistics::new(kind, 0.3, 1.7).unwrap();
            let mut v = -30.0;
            while v <= 30.0 {
                let u = s.carrier_density(v).unwrap();
                if kind.is_bounded() && u >= s.density_limit().unwrap() * (1.0 - 1e-12) {
                    v += 0.25;
                    continue;
                }
                let back = s.carrier_density(s.chemical_potential(u).unwrap()).unwrap();
                assert!(rel(back, u) < 1e-12, "{kind:?} v={v}");
                v += 0.25;
            }
        }
        assert!(ShiftedStatistics::new(BZ, 0.0, 0.0).is_err());
    }

    #[test]
    fn diffusion_enhancement_examples() {
        let s = ShiftedStatistics::new(BZ, 0.2, 3.0).unwrap();
        for u in [1e-8, 0.5, 40.0] {
            assert_eq!(s.diffusion_enhancement(u).unwrap(), 1.0);
        }
        let s = ShiftedStatistics::new(B1, 0.0, 1.0).unwrap();
        assert!((s.diffusion_enhancement(0.5).unwrap() - 2.0).abs() < 1e-14);
        // finite-difference of the inverse: g = w (e^{-1})'(w)
        let h = 1e-6;
        let d = (B1.inverse(0.5 + h).unwrap() - B1.inverse(0.5 - h).unwrap()) / (2.0 * h);
        assert!((0.5 * d - 2.0).abs() < 1e-8);
        assert!(s.diffusion_enhancement(1.0).is_err());

        let s = ShiftedStatistics::new(FD, 0.0, 1.0).unwrap();
        let u = FD.eval(0.0).unwrap();
        let expected = u / FD.deriv(0.0).unwrap();
        assert!((s.diffusion_enhancement(u).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn blakemore_closed_forms_match_numeric_path() {
        for gamma in [0.5, 1.0, 2.0] {
            let kind = StatisticsKind::Blakemore { gamma };
            let s = ShiftedStatistics::new(kind, 0.0, 1.0).unwrap();
            for k in 1..50 {
                let u = k as f64 / 50.0 / gamma;
                let z = kind.inverse(u).unwrap();
                assert!((z - libm::log(u / (1.0 - gamma * u))).abs() < 1e-12);
                let h = 1e-7 * u;
                let num =
                    u * (kind.inverse(u + h).unwrap() - kind.inverse(u - h).unwrap()) / (2.0 * h);
                let g = s.diffusion_enhancement(u).unwrap();
                assert!((g - 1.0 / (1.0 - gamma * u)).abs() < 1e-12 * g);
                assert!((g - num).abs() < 1e-5 * g);
            }
        }
    }

    #[test]
    fn local_statistics_consistent() {
        for kind in [BZ, FD, B1] {
            let s = ShiftedStatistics::new(kind, -0.4, 1.3).unwrap();
            for u in [0.01, 0.3, 0.9] {
                let l = s.local(u).unwrap();
                assert!(rel(s.carrier_density(l.v).unwrap(), u) < 1e-13);
                let h = 1e-5 * u;
                let lp = s.local(u + h).unwrap();
                let lm = s.local(u - h).unwrap();
                let d_eta = (lp.log_degeneracy - lm.log_degeneracy) / (2.0 * h);
                let d_v = (lp.v - lm.v) / (2.0 * h);
                assert!(
                    (d_eta - l.log_degeneracy_du).abs() < 1e-6 * l.log_degeneracy_du.abs().max(1.0),
                    "{kind:?} u={u}: {d_eta} vs {}",
                    l.log_degeneracy_du
                );
                assert!((d_v - l.dv_du).abs() < 1e-6 * l.dv_du.abs());
                let g = s.diffusion_enhancement(u).unwrap();
                assert!((g - u * l.dv_du).abs() < 1e-12 * g);
            }
        }
    }

    #[test]
    fn primitive_differentiates_to_statistics() {
        for kind in [BZ, StatisticsKind::Blakemore { gamma: 1.7 }] {
            let s = ShiftedStatistics::new(kind, 0.25, 1.0).unwrap();
            for y in [-5.0, -0.5, 0.0, 2.0, 15.0] {
                let f = |t: f64| s.kind.eval(t + s.zeta).unwrap();
                let integral = integrate(&f, 0.0, y, 1e-14, 0.0);
                let diff = s.primitive(y).unwrap() - s.primitive(0.0).unwrap();
                assert!((integral - diff).abs() < 1e-12 * diff.abs().max(1.0));
            }
        }
        assert!(ShiftedStatistics::new(FD, 0.0, 1.0)
            .unwrap()
            .primitive(0.0)
            .is_none());
    }

    #[test]
    fn second_derivatives() {
        for kind in [BZ, FD, B1, StatisticsKind::Blakemore { gamma: 0.3 }] {
            for z in [-4.0, -0.5, 0.0, 1.0, 6.0] {
                let h = 1e-5;
                let num = (kind.deriv(z + h).unwrap() - kind.deriv(z - h).unwrap()) / (2.0 * h);
                let an = kind.second_deriv(z).unwrap();
                assert!(
                    (num - an).abs() < 1e-7 * an.abs().max(1e-3),
                    "{kind:?} z={z}"
                );
            }
        }
    }

    #[test]
    fn fd_quadrature_reference_agrees_with_simpson() {
        let zs: Vec<f64> = (0..7).map(|k| -6.0 + 5.0 * k as f64).collect();
        for z in zs {
            assert!(rel(fermi_dirac_half_quadrature(z), simpson_oracle(z)) < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kinds() -> impl Strategy<Value = StatisticsKind> {
            prop_oneof![
                Just(StatisticsKind::Boltzmann),
                Just(StatisticsKind::FermiDiracHalf),
                (0.1f64..4.0).prop_map(|gamma| StatisticsKind::Blakemore { gamma }),
            ]
        }

        proptest! {
            #[test]
            fn monotone(kind in kinds(), z in -30.0f64..30.0, dz in 1e-3f64..5.0) {
                prop_assert!(kind.eval(z).unwrap() < kind.eval(z + dz).unwrap());
            }

            #[test]
            fn carrier_bounds(kind in prop_oneof![Just(BZ), Just(FD)], z in -30.0f64..30.0) {
                let f = kind.eval(z).unwrap();
                let fp = kind.deriv(z).unwrap();
                prop_assert!(fp > 0.0);
                prop_assert!(fp <= f * (1.0 + 1e-12));
                prop_assert!(f <= libm::exp(z) * (1.0 + 1e-12));
            }

            #[test]
            fn blakemore_range(gamma in 0.1f64..4.0, z in -30.0f64..30.0) {
                let kind = StatisticsKind::Blakemore { gamma };
                let f = kind.eval(z).unwrap();
                prop_assert!(f > 0.0 && f < 1.0 / gamma);
            }

            #[test]
            fn round_trip(kind in kinds(), log_w in -27.6f64..0.0) {
                // 12 decades below the top of the range
                let w = match kind.upper_limit() {
                    Some(top) => top * libm::exp(log_w) * (1.0 - 1e-6),
                    None => libm::exp(log_w + 2.0),
                };
                let z = kind.inverse(w).unwrap();
                prop_assert!(((kind.eval(z).unwrap() - w) / w).abs() <= 1e-12);
            }

            #[test]
            fn derivative_consistency(kind in kinds(), z in -30.0f64..30.0) {
                let h = 1e-5;
                let fd = (kind.eval(z + h).unwrap() - kind.eval(z - h).unwrap()) / (2.0 * h);
                let d = kind.deriv(z).unwrap();
                prop_assert!((d - fd).abs() <= 1e-6 * d.max(1.0));
            }
        }
    }
}
