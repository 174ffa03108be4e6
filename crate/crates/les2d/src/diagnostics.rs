//! Turbulence diagnostics: dyadically binned energy spectra, trajectory and
//! spectrum error metrics, and a Gaussian kernel density estimate.

use crate::fft::Fft2;
use crate::velocity::StaggeredVelocity;

/// Kinetic-energy spectrum over dyadic wavenumber-magnitude bins. Bin `b`
/// covers `|kappa| in [2^b, 2^{b+1})`; the zero mode is excluded. Energies
/// are normalized so the bin total equals the domain-mean kinetic energy of
/// the mean-free field.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bin_lo: Vec<f64>,
    pub bin_hi: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Spectrum {
    pub fn num_bins(&self) -> usize {
        self.energy.len()
    }

    pub fn total_energy(&self) -> f64 {
        self.energy.iter().sum()
    }

    /// Index of the bin containing wavenumber magnitude `kappa`.
    pub fn bin_of(kappa: f64) -> usize {
        debug_assert!(kappa >= 1.0);
        kappa.log2().floor() as usize
    }
}

/// Modal kinetic energy `(|u_hat|^2 + |v_hat|^2) / (2 N^2)` summed into
/// dyadic bins by `floor(log2 |kappa|)` with integer wavenumbers.
pub fn energy_spectrum(vel: &StaggeredVelocity) -> Spectrum {
    let (nx, ny) = (vel.grid.nx, vel.grid.ny);
    let fft = Fft2::new(nx, ny);
    let u_hat = fft.forward(vel.u.as_slice());
    let v_hat = fft.forward(vel.v.as_slice());

    let kappa_max = ((nx / 2) as f64).hypot((ny / 2) as f64);
    let n_bins = (kappa_max.log2().floor() as usize) + 1;
    let mut energy = vec![0.0; n_bins];

    let norm = 1.0 / (2.0 * ((nx * ny) as f64) * ((nx * ny) as f64));
    for j in 0..ny {
        let ky = Fft2::signed_wavenumber(j, ny) as f64;
        for i in 0..nx {
            if i == 0 && j == 0 {
                continue;
            }
            let kx = Fft2::signed_wavenumber(i, nx) as f64;
            let kappa = kx.hypot(ky);
            let idx = j * nx + i;
            let e = (u_hat[idx].norm_sqr() + v_hat[idx].norm_sqr()) * norm;
            energy[Spectrum::bin_of(kappa)] += e;
        }
    }

    Spectrum {
        bin_lo: (0..n_bins).map(|b| (1u64 << b) as f64).collect(),
        bin_hi: (0..n_bins).map(|b| (1u64 << (b + 1)) as f64).collect(),
        energy,
    }
}

/// Pointwise relative trajectory error per aligned snapshot pair:
/// `sqrt(||ref - model||^2 / ||ref||^2)`. Truncates at the shorter input
/// (a blown-up model trajectory simply ends early).
pub fn trajectory_error(
    model: &[StaggeredVelocity],
    reference: &[StaggeredVelocity],
) -> Vec<f64> {
    model
        .iter()
        .zip(reference)
        .map(|(m, r)| (m.sub(r).norm_sq() / r.norm_sq()).sqrt())
        .collect()
}

/// Floor for the log-MSE spectrum error of identical spectra.
pub const SPECTRUM_ERROR_FLOOR: f64 = -300.0;

/// Spectrum error: mean squared difference of the per-bin `log10` energies,
/// reported in `log10`. Bins where either spectrum has zero energy are
/// excluded pairwise.
pub fn spectrum_error(model: &Spectrum, reference: &Spectrum) -> f64 {
    assert_eq!(model.num_bins(), reference.num_bins(), "bin layouts differ");
    let mut mse = 0.0;
    let mut count = 0usize;
    for (em, er) in model.energy.iter().zip(&reference.energy) {
        if *em > 0.0 && *er > 0.0 {
            let d = em.log10() - er.log10();
            mse += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return SPECTRUM_ERROR_FLOOR;
    }
    let mse = mse / count as f64;
    if mse <= 0.0 {
        SPECTRUM_ERROR_FLOOR
    } else {
        mse.log10().max(SPECTRUM_ERROR_FLOOR)
    }
}

/// Gaussian kernel density estimate with Silverman's rule-of-thumb
/// bandwidth, evaluated at the given points.
pub fn gaussian_kde(samples: &[f64], eval_points: &[f64]) -> Vec<f64> {
    assert!(samples.len() >= 2, "KDE needs at least two samples");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    };
    let iqr = quantile(0.75) - quantile(0.25);

    let spread = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    let h = if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        // degenerate sample: fall back to a tiny positive bandwidth
        1e-12 * mean.abs().max(1.0)
    };

    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    eval_points
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect()
}
