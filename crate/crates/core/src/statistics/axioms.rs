//! Pointwise checks of the structural assumptions on statistics functions.
//!
//! Carrier statistics (electrons, holes) must satisfy
//!   (i)   F ∈ C¹, F → 0 at −∞, F → +∞ at +∞,
//!   (ii)  z ≤ c (1 + F(z)) on ℝ₊,
//!   (iii) 0 < F' ≤ F ≤ eᶻ.
//! Vacancy statistics must satisfy
//!   (i)   F ∈ C², F → 0 at −∞, F → 1 at +∞,
//!   (ii)  F' < F < eᶻ,
//!   (iii) F'' < 0 and |F''|/F' < 1 on ℝ₊,
//!   (iv)  1 < (eᶻ F')⁻¹ < c on ℝ₊.
//! ℝ₊ is taken as the open half-line z > 0. Existential constants are reported
//! as the smallest value that works on the grid.

use super::StatisticsKind;
use crate::math::exp;
use alloc::vec::Vec;

const SLACK: f64 = 1e-12;
const FD_STEP: f64 = 1e-5;
const TAIL: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomFamily {
    Carrier,
    Vacancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    CarrierRegularity,
    CarrierLimits,
    CarrierGrowth,
    CarrierBounds,
    VacancyRegularity,
    VacancyLimits,
    VacancyBounds,
    VacancyConcavity,
    VacancyDerivativeRatio,
}

impl Axiom {
    pub fn label(&self) -> &'static str {
        match self {
            Axiom::CarrierRegularity => "carrier_i_regularity",
            Axiom::CarrierLimits => "carrier_i_limits",
            Axiom::CarrierGrowth => "carrier_ii_growth",
            Axiom::CarrierBounds => "carrier_iii_bounds",
            Axiom::VacancyRegularity => "vacancy_i_regularity",
            Axiom::VacancyLimits => "vacancy_i_limits",
            Axiom::VacancyBounds => "vacancy_ii_bounds",
            Axiom::VacancyConcavity => "vacancy_iii_concavity",
            Axiom::VacancyDerivativeRatio => "vacancy_iv_derivative_ratio",
        }
    }
}

/// One evaluated condition. `value` is the witnessed quantity (a ratio, a
/// discrepancy, or a function value, depending on the axiom).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomEntry {
    pub axiom: Axiom,
    pub z: f64,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub kind: StatisticsKind,
    pub family: AxiomFamily,
    pub entries: Vec<AxiomEntry>,
    /// Smallest constant satisfying the growth condition on the grid
    /// (carrier (ii) or vacancy (iv)); `None` if no grid point lies in ℝ₊.
    pub empirical_constant: Option<f64>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AxiomEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.entries.iter().filter(|e| e.axiom == axiom).count()
    }
}

pub fn verify_axioms(kind: StatisticsKind, grid: &[f64]) -> AxiomReport {
    let family = if kind.is_bounded() {
        AxiomFamily::Vacancy
    } else {
        AxiomFamily::Carrier
    };
    let mut entries = Vec::new();
    let mut constant: Option<f64> = None;
    let mut push = |axiom, z, value, passed| {
        entries.push(AxiomEntry {
            axiom,
            z,
            value,
            passed,
        })
    };

    let f = |z: f64| kind.eval(z).unwrap_or(f64::NAN);
    let fp = |z: f64| kind.deriv(z).unwrap_or(f64::NAN);

    let mut previous: Option<f64> = None;
    for &z in grid {
        if !z.is_finite() {
            let axiom = if family == AxiomFamily::Carrier {
                Axiom::CarrierRegularity
            } else {
                Axiom::VacancyRegularity
            };
            push(axiom, z, f64::NAN, false);
            continue;
        }
        let fz = f(z);
        let dz = fp(z);
        let central = (f(z + FD_STEP) - f(z - FD_STEP)) / (2.0 * FD_STEP);
        let discrepancy = (dz - central).abs() / dz.max(1.0);
        let increasing = previous.map_or(true, |p| fz > p);
        previous = Some(fz);
        match family {
            AxiomFamily::Carrier => {
                push(
                    Axiom::CarrierRegularity,
                    z,
                    discrepancy,
                    fz > 0.0 && discrepancy <= 1e-6 && increasing,
                );
                if z > 0.0 {
                    let ratio = z / (1.0 + fz);
                    constant = Some(constant.map_or(ratio, |c: f64| c.max(ratio)));
                    push(Axiom::CarrierGrowth, z, ratio, ratio.is_finite());
                }
                let ok = dz > 0.0 && dz <= fz * (1.0 + SLACK) && fz <= exp(z) * (1.0 + SLACK);
                push(Axiom::CarrierBounds, z, fz, ok);
            }
            AxiomFamily::Vacancy => {
                let d2 = kind.second_deriv(z).unwrap_or(f64::NAN);
                let d2_num = (fp(z + FD_STEP) - fp(z - FD_STEP)) / (2.0 * FD_STEP);
                let c2 = (d2 - d2_num).abs() / d2.abs().max(1.0);
                push(
                    Axiom::VacancyRegularity,
                    z,
                    discrepancy.max(c2),
                    fz > 0.0 && fz < 1.0 && discrepancy <= 1e-6 && c2 <= 1e-6 && increasing,
                );
                push(Axiom::VacancyBounds, z, fz, dz < fz && fz < exp(z));
                if z > 0.0 {
                    let ratio = d2.abs() / dz;
                    push(Axiom::VacancyConcavity, z, ratio, d2 < 0.0 && ratio < 1.0);
                    let inv = match kind {
                        StatisticsKind::Blakemore { gamma } => {
                            let e = exp(-z) + gamma;
                            e * e
                        }
                        _ => 1.0 / (exp(z) * dz),
                    };
                    constant = Some(constant.map_or(inv, |c: f64| c.max(inv)));
                    push(
                        Axiom::VacancyDerivativeRatio,
                        z,
                        inv,
                        inv > 1.0 && inv.is_finite(),
                    );
                }
            }
        }
    }

    let low = f(-TAIL);
    let high = f(TAIL);
    match family {
        AxiomFamily::Carrier => {
            push(Axiom::CarrierLimits, -TAIL, low, low <= 1e-300);
            push(Axiom::CarrierLimits, TAIL, high, high > 1e3);
        }
        AxiomFamily::Vacancy => {
            push(Axiom::VacancyLimits, -TAIL, low, low <= 1e-300);
            push(
                Axiom::VacancyLimits,
                TAIL,
                high,
                (high - 1.0).abs() <= 1e-12,
            );
        }
    }

    AxiomReport {
        kind,
        family,
        entries,
        empirical_constant: constant,
    }
}
