//! The FBI inversion formula on a chart: Gaussian-regularized double
//! quadrature over the real structure bundle, Richardson-extrapolated in the
//! regularization parameter.

use super::{bracket, fbi_transform, ChiCutoff, Distribution, FbiKernel, FbiOptions};
use crate::error::{Error, Result};
use crate::manifold::{MaximallyRealChart, WellPositionedCertificate};
use crate::numeric::{extrapolate_to_zero, gauss_legendre_on, KahanSumC};
use num_complex::Complex64;
use rayon::prelude::*;

/// Controls for the inversion quadrature.
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    pub chi: ChiCutoff,
    /// |zeta| <= cutoff_sigmas / sqrt(eps): beyond it e^{-eps <zeta>^2} is dust.
    pub cutoff_sigmas: f64,
    /// nodes for the half-line frequency rule (after the xi = w^2 substitution)
    pub freq_nodes: usize,
    /// nodes for the surface integral per frequency
    pub surface_nodes: usize,
    /// window half-width of the outer kernel in units of 1/sqrt(|zeta|)
    pub window_sigmas: f64,
    /// inner-transform quadrature controls
    pub fbi: FbiOptions,
}

impl Default for InversionOptions {
    fn default() -> Self {
        let chi = ChiCutoff { r1: 0.55, r2: 0.85 };
        Self {
            chi,
            cutoff_sigmas: 6.0,
            freq_nodes: 120,
            surface_nodes: 260,
            window_sigmas: 7.0,
            fbi: FbiOptions {
                chi,
                ..Default::default()
            },
        }
    }
}

/// chi(x) u(x) reconstructed by the inversion integral at each epsilon of the
/// ladder, then polynomial-extrapolated to eps -> 0 (order = ladder length - 1).
///
/// The well-positioned certificate of the chart is a precondition; pass the
/// one from `check_well_positioned`.
pub fn inversion(
    u: &Distribution,
    chart: &MaximallyRealChart,
    x: &[f64],
    eps_ladder: &[f64],
    cert: &WellPositionedCertificate,
    opts: &InversionOptions,
) -> Result<Complex64> {
    if !cert.ok {
        return Err(Error::MissingCertificate(chart.name.clone()));
    }
    if eps_ladder.len() < 3 {
        return Err(Error::ShortLadder {
            min: 3,
            got: eps_ladder.len(),
        });
    }
    if chart.m != 1 {
        return Err(Error::Unsupported(
            "inversion is implemented at desk scale m = 1".into(),
        ));
    }
    let vals: Result<Vec<Complex64>> = eps_ladder
        .iter()
        .map(|&eps| reconstruct_once(u, chart, x, eps, opts))
        .collect();
    Ok(extrapolate_to_zero(eps_ladder, &vals?))
}

fn reconstruct_once(
    u: &Distribution,
    chart: &MaximallyRealChart,
    x: &[f64],
    eps: f64,
    opts: &InversionOptions,
) -> Result<Complex64> {
    let kernel = FbiKernel::new(1.0, chart.clone());
    let z = chart.z(x);
    let r_xi = opts.cutoff_sigmas / eps.sqrt();
    // substitute xi = sign w^2: absorbs the sqrt(<zeta>) kink at 0
    let (wn, ww) = gauss_legendre_on(opts.freq_nodes, 0.0, r_xi.sqrt());
    let freq_cells: Vec<(f64, f64)> = wn
        .iter()
        .zip(&ww)
        .flat_map(|(&w, &wt)| [(w, wt), (-w, wt)])
        .collect();
    let contributions: Result<Vec<Complex64>> = freq_cells
        .par_iter()
        .map(|&(w, wt)| -> Result<Complex64> {
            let xi = w.abs() * w; // sign(w) w^2
            if xi == 0.0 {
                return Ok(Complex64::ZERO);
            }
            let jac = 2.0 * w.abs(); // dxi = 2|w| dw
            let xi_abs = xi.abs();
            // surface integral over x' with the kernel's own Gaussian window
            let half = chart.u_box[0].1.min(opts.chi.r2) + opts.window_sigmas / xi_abs.sqrt();
            let (xs, xw) = gauss_legendre_on(opts.surface_nodes, x[0] - half, x[0] + half);
            let mut acc = KahanSumC::new();
            for (xp, wxp) in xs.iter().zip(&xw) {
                // the F.B.I. transform of chi u lives on Z(R^m); phi is
                // extended by 0 outside the chart box, so beyond it the
                // surface is the real axis
                let inside = chart.contains(&[*xp]);
                let (zp, det, zeta) = if inside {
                    let zp = chart.z(&[*xp]);
                    let det = chart.det_zx(&[*xp]);
                    let fiber = crate::manifold::structure_direction(chart, &[*xp], &[1.0])?;
                    (zp, det, vec![fiber.zeta[0] * xi])
                } else {
                    (
                        vec![Complex64::new(*xp, 0.0)],
                        Complex64::ONE,
                        vec![Complex64::new(xi, 0.0)],
                    )
                };
                let br = bracket(&zeta)?;
                let fb = fbi_transform(u, &kernel, &zp, &zeta, &opts.fbi)?;
                if fb == Complex64::ZERO {
                    continue;
                }
                let d: Vec<Complex64> = z.iter().zip(&zp).map(|(a, b)| a - b).collect();
                let phase = Complex64::i() * crate::numeric::cdot(&zeta, &d)
                    - br * crate::numeric::cdot(&d, &d)
                    - eps * br * br;
                // measure: dz' = det Zx dx', dzeta = det(t Zx^{-1}) dxi
                let dz_measure = det;
                let dzeta_measure = if inside {
                    Complex64::ONE / chart.det_zx(&[*xp])
                } else {
                    Complex64::ONE
                };
                acc.add(phase.exp() * fb * br.sqrt() * dz_measure * dzeta_measure * *wxp);
            }
            Ok(acc.value() * jac * wt)
        })
        .collect();
    let mut total = KahanSumC::new();
    for v in contributions? {
        total.add(v);
    }
    // (2 pi^3)^{-m/2}
    let norm_const = (2.0 * std::f64::consts::PI.powi(3)).powf(-(chart.m as f64) / 2.0);
    Ok(total.value() * norm_const)
}

/// The default epsilon ladder {0.1, 0.03, 0.01} scaled by scale^2.
pub fn default_eps_ladder(scale: f64) -> Vec<f64> {
    vec![0.1 * scale * scale, 0.03 * scale * scale, 0.01 * scale * scale]
}
