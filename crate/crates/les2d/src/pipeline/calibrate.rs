//! Smagorinsky-constant calibration against filtered reference spectra.

use crate::closures::ClosureModel;
use crate::dataset::SnapshotDataset;
use crate::diagnostics::energy_spectrum;
use crate::integrator::{simulate, SimConfig};

/// Candidate grid: 0.00 to 0.30 in steps of 0.01.
pub fn candidate_constants() -> Vec<f64> {
    (0..=30).map(|k| k as f64 * 0.01).collect()
}

/// Squared L2 distance of per-bin `log10` energies (zero bins excluded
/// pairwise).
fn log_spectrum_distance_sq(a: &crate::diagnostics::Spectrum, b: &crate::diagnostics::Spectrum) -> f64 {
    a.energy
        .iter()
        .zip(&b.energy)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| {
            let d = x.log10() - y.log10();
            d * d
        })
        .sum()
}

/// Outcome of the calibration sweep.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub best_cs: f64,
    /// `(cs, summed log-spectrum distance)` per candidate; infinite distance
    /// marks an unstable candidate run.
    pub sweep: Vec<(f64, f64)>,
}

/// Pick the Smagorinsky constant whose LES best reproduces the reference
/// energy spectra at `t_compare`, in `log10` space, summed over datasets.
/// Each candidate simulates from the dataset's first snapshot with the
/// dataset's own snapshot spacing as the LES step, so LES states land
/// exactly on snapshot times. Ties break toward the smaller constant.
pub fn calibrate_smagorinsky(datasets: &[SnapshotDataset], t_compare: f64) -> CalibrationResult {
    assert!(!datasets.is_empty());
    let mut sweep = Vec::new();
    let mut best = (f64::INFINITY, 0.0);

    // reference spectra and the comparison index per dataset
    let refs: Vec<_> = datasets
        .iter()
        .map(|ds| {
            let idx = ((t_compare / ds.dt_between).round() as usize).min(ds.len() - 1);
            (idx, energy_spectrum(&ds.velocities[idx]))
        })
        .collect();

    for cs in candidate_constants() {
        let mut err = 0.0;
        for (ds, (idx, ref_spec)) in datasets.iter().zip(&refs) {
            let cfg = SimConfig::new(ds.dt_between, *idx, ds.nu)
                .with_forcing(ds.forcing)
                .with_stride((*idx).max(1))
                .with_closure(ClosureModel::Smagorinsky { cs });
            let traj = simulate(&ds.velocities[0], &cfg);
            if !traj.completed() {
                err = f64::INFINITY;
                break;
            }
            let spec = energy_spectrum(&traj.final_state().vel);
            err += log_spectrum_distance_sq(&spec, ref_spec);
        }
        sweep.push((cs, err));
        if err < best.0 {
            best = (err, cs);
        }
    }

    CalibrationResult {
        best_cs: best.1,
        sweep,
    }
}
