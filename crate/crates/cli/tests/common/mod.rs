//! Helpers shared by the command-line tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

/// The bundled `equilibrium_1d` scenario shrunk to a few cells and steps.
pub fn small_scenario(kind: &str, extra_params: &str) -> String {
    let text = perovsim::config::bundled_text("equilibrium_1d").unwrap();
    text.replace(
        "kind = \"equilibrium_decay\"",
        &format!("kind = \"{kind}\""),
    )
    .replace("cells = 100", "cells = 20")
    .replace(
        "t_end = 10.0\ndt_sweep = [1e-3, 1e-2, 1e-1, 1.0]",
        &format!("t_end = 0.5\ndt_sweep = [0.1, 0.25]\n{extra_params}"),
    )
}

/// Writes `text` as `name` in `dir`, pointing the output at `dir/out`.
pub fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let out = dir.join("out");
    let text = format!("output = {:?}\n{text}", out.display().to_string());
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Largest finite-difference discrepancy of the Jacobian of `assemble_system` at `x`.
///
/// Columns are grouped so that no two columns of a group share a row outside
/// the dense mass rows; each group is probed with one central difference.
/// For banded rows this recovers single entries, for dense rows a directional
/// derivative. Each row's error is relative to `Σ |J_rj| h_j` with a floor of
/// one in Jacobian units.
pub fn jacobian_discrepancy(
    device: &perovsim_core::device::Device,
    x: &[f64],
    time: perovsim_core::assembly::TimeTerm<'_>,
) -> f64 {
    use perovsim_core::assembly::{assemble_system, AssemblyOptions};
    let opts = AssemblyOptions::default();
    let res = assemble_system(device, x, 0.0, time, &opts).unwrap();
    let jac = res.jacobian.as_ref().unwrap();
    let n = x.len();
    let dense: std::collections::HashSet<usize> = res.dense_rows.iter().copied().collect();

    let mut rows_of_col: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for p in jac.row_ptr[r]..jac.row_ptr[r + 1] {
            rows_of_col[jac.cols[p]].push(r);
        }
    }
    let mut color = vec![usize::MAX; n];
    let mut row_colors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        let taken: std::collections::HashSet<usize> = rows_of_col[j]
            .iter()
            .filter(|r| !dense.contains(r))
            .flat_map(|&r| row_colors[r].iter().copied())
            .collect();
        let c = (0..).find(|c| !taken.contains(c)).unwrap();
        color[j] = c;
        for &r in &rows_of_col[j] {
            row_colors[r].push(c);
        }
    }
    let groups = color.iter().max().map_or(0, |m| m + 1);

    let opts_res = AssemblyOptions {
        jacobian: false,
        ..opts
    };
    let eval = |y: &[f64]| {
        assemble_system(device, y, 0.0, time, &opts_res)
            .unwrap()
            .values
    };
    let step: Vec<f64> = x.iter().map(|v| 1e-6 * v.abs().max(1e-2)).collect();
    let mut worst = 0.0f64;
    for g in 0..groups {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        let mut h_max = 0.0f64;
        for j in (0..n).filter(|&j| color[j] == g) {
            xp[j] += step[j];
            xm[j] -= step[j];
            h_max = h_max.max(step[j]);
        }
        let (fp, fm) = (eval(&xp), eval(&xm));
        for r in 0..n {
            let (mut analytic, mut scale) = (0.0, 0.0);
            for p in jac.row_ptr[r]..jac.row_ptr[r + 1] {
                let j = jac.cols[p];
                if color[j] == g {
                    analytic += jac.vals[p] * step[j];
                    scale += (jac.vals[p] * step[j]).abs();
                }
            }
            let numeric = (fp[r] - fm[r]) / 2.0;
            worst = worst.max((numeric - analytic).abs() / scale.max(h_max));
        }
    }
    worst
}

/// A random admissible state near `x`: densities scaled by up to ±50 %,
/// vacancies moved in logit space, potentials shifted by up to ±0.2.
pub fn perturbed_state(
    device: &perovsim_core::device::Device,
    x: &[f64],
    rng: &mut impl rand::Rng,
) -> Vec<f64> {
    let layout = &device.layout;
    let mut y = x.to_vec();
    for &i in &layout.psi {
        y[i] += rng.gen_range(-0.2..0.2);
    }
    for (s, sp) in device.species.iter().enumerate() {
        for &k in &layout.region[s] {
            let j = layout.density[s][k];
            let r: f64 = rng.gen_range(-0.5..0.5);
            y[j] = match sp.statistics.density_limit() {
                None => x[j] * r.exp(),
                Some(cap) => {
                    let w = x[j] / cap;
                    cap / (1.0 + (((1.0 - w) / w).ln() - r).exp())
                }
            };
        }
    }
    y
}
