//! Shared fixtures for unit tests.

use alloc::collections::BTreeMap;
use alloc::vec;

use crate::device::*;
use crate::statistics::StatisticsKind;

pub(crate) fn pin_config(cells: usize) -> DeviceConfig {
    let mat = |name: &str, x: [f64; 2], doping: f64, perovskite: bool| MaterialConfig {
        name: name.into(),
        x,
        y: None,
        permittivity: 0.1,
        doping,
        perovskite,
        mobility: BTreeMap::new(),
    };
    let carrier = |id: &str, role| SpeciesConfig {
        id: id.into(),
        role,
        charge: None,
        mobility: 1.0,
        statistics: StatisticsKind::FermiDiracHalf,
        zeta: -4.0,
        n_states: 1.0,
        initial: None,
    };
    DeviceConfig {
        geometry: GeometryConfig {
            x: AxisConfig { length: 1.0, cells },
            y: None,
        },
        materials: vec![
            mat("etl", [0.0, 0.3], 1.0, false),
            mat("perovskite", [0.3, 0.7], -0.5, true),
            mat("htl", [0.7, 1.0], -1.0, false),
        ],
        species: vec![
            carrier("n", SpeciesRole::Electron),
            carrier("p", SpeciesRole::Hole),
            SpeciesConfig {
                id: "vac".into(),
                role: SpeciesRole::Vacancy,
                charge: Some(1),
                mobility: 0.01,
                statistics: StatisticsKind::Blakemore { gamma: 1.0 },
                zeta: 0.0,
                n_states: 1.0,
                initial: Some(0.5),
            },
        ],
        contacts: vec![
            ContactConfig {
                name: "cathode".into(),
                side: Side::Left,
                span: None,
                psi: ContactPsi::Rule(PsiRule::Neutral),
                phi: 0.0,
                biased: false,
            },
            ContactConfig {
                name: "anode".into(),
                side: Side::Right,
                span: None,
                psi: ContactPsi::Rule(PsiRule::Neutral),
                phi: 0.0,
                biased: true,
            },
        ],
        generation: None,
        recombination: RecombinationSpec::default(),
        initial: InitialConfig::default(),
        bias: 0.0,
        bias_ramp: 0.0,
    }
}
