use perovsim::checkpoint::{self, CheckpointError};
use perovsim::config::bundled;
use perovsim_core::solver;

fn device(name: &str) -> perovsim_core::device::Device {
    bundled(name).unwrap().build_device().unwrap()
}

#[test]
fn round_trip_is_bitwise() {
    let d = device("pin_perovskite_1d");
    let mut state = solver::initial_state(&d).unwrap();
    state.t = 0.1 + 0.2;
    state.psi[3] = -1.0 / 3.0;
    state.densities[0][7] = 1e-300;
    let text = checkpoint::save(&d, &state);
    assert_eq!(checkpoint::load(&d, &text).unwrap(), state);
}

#[test]
fn foreign_device_is_rejected() {
    let d = device("pin_perovskite_1d");
    let other = device("light_transient");
    let text = checkpoint::save(&d, &solver::initial_state(&d).unwrap());
    assert!(matches!(
        checkpoint::load(&other, &text),
        Err(CheckpointError::DeviceMismatch { .. })
    ));
}

#[test]
fn corrupted_files_are_rejected() {
    let d = device("equilibrium_1d");
    let text = checkpoint::save(&d, &solver::initial_state(&d).unwrap());
    let bad_version = text.replacen("perovsim-checkpoint 1", "perovsim-checkpoint 9", 1);
    assert_eq!(
        checkpoint::load(&d, &bad_version),
        Err(CheckpointError::Version(9))
    );
    let truncated: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
    assert!(matches!(
        checkpoint::load(&d, &truncated),
        Err(CheckpointError::Malformed { .. })
    ));
    let garbled = text.replacen(" 0.", " x.", 1);
    assert!(matches!(
        checkpoint::load(&d, &garbled),
        Err(CheckpointError::Malformed { .. })
    ));
    assert!(checkpoint::load(&d, "hello").is_err());
}
