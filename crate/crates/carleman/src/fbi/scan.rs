//! Wave-front scanning: FBI sampling over (point, direction, rung) grids and
//! the classification of the non-regular set.

use super::decay::{decay_fit, ClassifierParams, DecayClassification, EnvelopeNorm, FbiSampleSet};
use super::{fbi_euclidean, fbi_transform, Distribution, FbiKernel, FbiOptions};
use crate::error::Result;
use crate::manifold::{structure_direction, MaximallyRealChart};
use crate::sequence::RegularSequence;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Default dyadic ladder 8, 16, ..., 256.
pub fn default_ladder() -> Vec<f64> {
    (0..6).map(|j| 8.0 * 2f64.powi(j)).collect()
}

#[derive(Debug, Clone)]
pub struct WavefrontReport {
    pub samples: FbiSampleSet,
    pub classification: DecayClassification,
    /// (point index, direction index) pairs that are not regular
    pub flagged: Vec<(usize, usize)>,
}

/// Scan a distribution on a chart: directions are real unit covectors mapped
/// into the structure bundle via zeta = t(Z_x)^{-1} xi; flat charts reduce to
/// the Euclidean transform with the Delta factor.
pub fn wavefront_scan(
    u: &Distribution,
    chart: &MaximallyRealChart,
    points: &[Vec<f64>],
    dirs: &[Vec<f64>],
    seq: &RegularSequence,
    ladder: &[f64],
    opts: &FbiOptions,
    params: &ClassifierParams,
) -> Result<WavefrontReport> {
    let kernel = FbiKernel::new(1.0, chart.clone());
    let mut cells = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for (di, d) in dirs.iter().enumerate() {
            cells.push((pi, di, p.clone(), d.clone()));
        }
    }
    let computed: Result<Vec<((usize, usize), Vec<Complex64>)>> = cells
        .par_iter()
        .map(|(pi, di, p, d)| {
            let z = chart.z(p);
            let fiber = structure_direction(chart, p, d)?;
            let mut ladder_vals = Vec::with_capacity(ladder.len());
            for &rung in ladder {
                let zeta: Vec<Complex64> = fiber.zeta.iter().map(|w| w * rung).collect();
                ladder_vals.push(fbi_transform(u, &kernel, &z, &zeta, opts)?);
            }
            Ok(((*pi, *di), ladder_vals))
        })
        .collect();
    let computed = computed?;
    let mut values = vec![vec![Vec::new(); dirs.len()]; points.len()];
    for ((pi, di), vals) in computed {
        values[pi][di] = vals;
    }
    let samples = FbiSampleSet {
        points: points.to_vec(),
        dirs: dirs.to_vec(),
        ladder: ladder.to_vec(),
        values,
    };
    let classification = decay_fit(&samples, seq, 8, EnvelopeNorm::BigM, params)?;
    let flagged = classification.flagged();
    Ok(WavefrontReport {
        samples,
        classification,
        flagged,
    })
}

/// A sampled field on R^2 for the nonlinear experiments, with an optional
/// kink line x . normal = offset that the quadrature splits on.
#[derive(Clone)]
pub struct ScanField {
    pub eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
    /// unit normal of the kink line, if any
    pub kink_normal: Option<[f64; 2]>,
}

/// Euclidean FBI of a 2-D field with kink-aligned quadrature: coordinates are
/// rotated so the kink becomes an axis, then each half is integrated by a
/// tensor Gauss-Legendre rule sized to the phase.
pub fn fbi_euclidean_field(
    field: &ScanField,
    x: &[f64],
    xi: &[f64],
    opts: &FbiOptions,
) -> Result<Complex64> {
    let xi_abs = crate::numeric::norm(xi);
    let r2 = opts.chi.r2;
    let window = opts.window_sigmas / xi_abs.sqrt();
    // rotated frame: p along the kink normal, q along the kink
    let (np_, nq) = match field.kink_normal {
        Some(n) => {
            let l = (n[0] * n[0] + n[1] * n[1]).sqrt();
            ([n[0] / l, n[1] / l], [-n[1] / l, n[0] / l])
        }
        None => ([1.0, 0.0], [0.0, 1.0]),
    };
    let p0 = x[0] * np_[0] + x[1] * np_[1];
    let q0 = x[0] * nq[0] + x[1] * nq[1];
    let pa = (p0 - window).max(-r2);
    let pb = (p0 + window).min(r2);
    let qa = (q0 - window).max(-r2);
    let qb = (q0 + window).min(r2);
    if pa >= pb || qa >= qb {
        return Ok(Complex64::ZERO);
    }
    let cycles = xi_abs * (pb - pa).max(qb - qa) / (2.0 * std::f64::consts::PI);
    let n = ((opts.nodes_per_cycle * cycles).ceil() as usize).max(opts.min_nodes);
    let p_segments: Vec<(f64, f64)> = if field.kink_normal.is_some() && pa < 0.0 && 0.0 < pb {
        vec![(pa, 0.0), (0.0, pb)]
    } else {
        vec![(pa, pb)]
    };
    let (qs, qw) = crate::numeric::gauss_legendre_on(n, qa, qb);
    let mut acc = crate::numeric::KahanSumC::new();
    for (sa, sb) in p_segments {
        let frac = (sb - sa) / (pb - pa);
        let np_nodes = ((n as f64 * frac).ceil() as usize).max(24);
        let (ps, pw) = crate::numeric::gauss_legendre_on(np_nodes, sa, sb);
        for (p, wp) in ps.iter().zip(&pw) {
            for (q, wq) in qs.iter().zip(&qw) {
                let y = [p * np_[0] + q * nq[0], p * np_[1] + q * nq[1]];
                let chi = opts.chi.value(&y);
                if chi == 0.0 {
                    continue;
                }
                let dx = [x[0] - y[0], x[1] - y[1]];
                let d2 = dx[0] * dx[0] + dx[1] * dx[1];
                let phase = Complex64::new(-xi_abs * d2, dx[0] * xi[0] + dx[1] * xi[1]).exp();
                acc.add(chi * (field.eval)(&y) * phase * wp * wq);
            }
        }
    }
    Ok(acc.value())
}

/// Scan a 2-D field over directions of the unit circle.
pub fn wavefront_scan_field(
    field: &ScanField,
    points: &[Vec<f64>],
    dirs: &[Vec<f64>],
    seq: &RegularSequence,
    ladder: &[f64],
    opts: &FbiOptions,
    params: &ClassifierParams,
) -> Result<WavefrontReport> {
    let mut cells = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for (di, d) in dirs.iter().enumerate() {
            cells.push((pi, di, p.clone(), d.clone()));
        }
    }
    let computed: Result<Vec<((usize, usize), Vec<Complex64>)>> = cells
        .par_iter()
        .map(|(pi, di, p, d)| {
            let mut ladder_vals = Vec::with_capacity(ladder.len());
            for &rung in ladder {
                let xi: Vec<f64> = d.iter().map(|t| t * rung).collect();
                ladder_vals.push(fbi_euclidean_field(field, p, &xi, opts)?);
            }
            Ok(((*pi, *di), ladder_vals))
        })
        .collect();
    let computed = computed?;
    let mut values = vec![vec![Vec::new(); dirs.len()]; points.len()];
    for ((pi, di), vals) in computed {
        values[pi][di] = vals;
    }
    let samples = FbiSampleSet {
        points: points.to_vec(),
        dirs: dirs.to_vec(),
        ladder: ladder.to_vec(),
        values,
    };
    let classification = decay_fit(&samples, seq, 8, EnvelopeNorm::BigM, params)?;
    let flagged = classification.flagged();
    Ok(WavefrontReport {
        samples,
        classification,
        flagged,
    })
}

/// One-dimensional Euclidean scan of a corpus distribution.
pub fn wavefront_scan_euclidean(
    u: &Distribution,
    points: &[Vec<f64>],
    dirs: &[Vec<f64>],
    seq: &RegularSequence,
    ladder: &[f64],
    opts: &FbiOptions,
    params: &ClassifierParams,
) -> Result<WavefrontReport> {
    let mut cells = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for (di, d) in dirs.iter().enumerate() {
            cells.push((pi, di, p.clone(), d.clone()));
        }
    }
    let computed: Result<Vec<((usize, usize), Vec<Complex64>)>> = cells
        .par_iter()
        .map(|(pi, di, p, d)| {
            let mut ladder_vals = Vec::with_capacity(ladder.len());
            for &rung in ladder {
                let xi: Vec<f64> = d.iter().map(|t| t * rung).collect();
                ladder_vals.push(fbi_euclidean(u, p, &xi, opts)?);
            }
            Ok(((*pi, *di), ladder_vals))
        })
        .collect();
    let computed = computed?;
    let mut values = vec![vec![Vec::new(); dirs.len()]; points.len()];
    for ((pi, di), vals) in computed {
        values[pi][di] = vals;
    }
    let samples = FbiSampleSet {
        points: points.to_vec(),
        dirs: dirs.to_vec(),
        ladder: ladder.to_vec(),
        values,
    };
    let classification = decay_fit(&samples, seq, 8, EnvelopeNorm::BigM, params)?;
    let flagged = classification.flagged();
    Ok(WavefrontReport {
        samples,
        classification,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbi::ChiCutoff;

    fn seq() -> RegularSequence {
        RegularSequence::gevrey(2.0, 60).unwrap()
    }

    #[test]
    fn gevrey_bump_scan_is_clean() {
        let u = Distribution::Smooth(crate::corpus::gevrey_bump());
        let chart = MaximallyRealChart::flat(1, 1.2);
        let points = vec![vec![0.0], vec![0.3]];
        let dirs = vec![vec![1.0], vec![-1.0]];
        let rep = wavefront_scan(
            &u,
            &chart,
            &points,
            &dirs,
            &seq(),
            &default_ladder(),
            &FbiOptions::default(),
            &ClassifierParams::default(),
        )
        .unwrap();
        assert!(rep.flagged.is_empty(), "flagged {:?}", rep.flagged);
    }

    #[test]
    fn heaviside_flagged_both_directions_at_origin() {
        let u = Distribution::Heaviside;
        let chart = MaximallyRealChart::flat(1, 1.2);
        let points = vec![vec![0.0]];
        let dirs = vec![vec![1.0], vec![-1.0]];
        let rep = wavefront_scan(
            &u,
            &chart,
            &points,
            &dirs,
            &seq(),
            &default_ladder(),
            &FbiOptions::default(),
            &ClassifierParams::default(),
        )
        .unwrap();
        assert_eq!(rep.flagged.len(), 2, "flagged {:?}", rep.flagged);
    }

    #[test]
    fn cauchy_boundary_one_sided() {
        // 1/(x + i0): flagged at 0 only for xi > 0
        let u = Distribution::CauchyBoundary { sign: 1.0 };
        let chart = MaximallyRealChart::flat(1, 1.2);
        let points = vec![vec![0.0]];
        let dirs = vec![vec![1.0], vec![-1.0]];
        let rep = wavefront_scan(
            &u,
            &chart,
            &points,
            &dirs,
            &seq(),
            &default_ladder(),
            &FbiOptions::default(),
            &ClassifierParams::default(),
        )
        .unwrap();
        assert_eq!(rep.flagged, vec![(0, 0)], "flagged {:?}", rep.flagged);
    }

    #[test]
    fn transport_kink_flags_characteristic_directions_only() {
        // u = |x - t|^3 on R^2: flagged exactly along tau = -xi
        let field = ScanField {
            eval: Arc::new(|y: &[f64]| {
                let s = (y[0] - y[1]).abs();
                Complex64::new(s * s * s, 0.0)
            }),
            kink_normal: Some([std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]),
        };
        let points = vec![vec![0.0, 0.0]];
        let dirs: Vec<Vec<f64>> = (0..16)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let opts = FbiOptions {
            chi: ChiCutoff { r1: 0.45, r2: 0.8 },
            ..Default::default()
        };
        let rep = wavefront_scan_field(
            &field,
            &points,
            &dirs,
            &seq(),
            &default_ladder(),
            &opts,
            &ClassifierParams::default(),
        )
        .unwrap();
        // directions 6 and 14 are (-1,1)/sqrt2 and (1,-1)/sqrt2
        let flagged_dirs: Vec<usize> = rep.flagged.iter().map(|(_, d)| *d).collect();
        assert_eq!(flagged_dirs, vec![6, 14], "flagged {flagged_dirs:?}");
    }
}
