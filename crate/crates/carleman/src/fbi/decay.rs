//! Decay classification of FBI samples along a |zeta|-ladder against
//! Denjoy-Carleman envelopes A^{k+1} M_k / |zeta|^k.

use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::sequence::RegularSequence;
use num_complex::Complex64;
use serde::Serialize;

/// Which weight convention the envelope uses; the two normalizations in
/// circulation differ by k! (M_k versus m_k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeNorm {
    BigM,
    SmallM,
}

/// Classifier thresholds; defaults are pinned by the acceptance suite.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierParams {
    /// |F| below this is treated as quadrature noise and dropped.
    pub noise_floor: f64,
    /// Largest relative RMS residual the exponential-model fit may have.
    pub exp_residual_max: f64,
    /// Envelope-constant stability (relative) under dropping the top rung.
    pub a_stability: f64,
    /// Minimum rungs above the floor for a model fit.
    pub min_rungs: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            noise_floor: 1e-13,
            exp_residual_max: 0.10,
            a_stability: 0.15,
            min_rungs: 4,
        }
    }
}

/// FBI values over a (base point, direction, |zeta| rung) grid.
#[derive(Debug, Clone)]
pub struct FbiSampleSet {
    pub points: Vec<Vec<f64>>,
    pub dirs: Vec<Vec<f64>>,
    /// strictly increasing, at least 6 rungs
    pub ladder: Vec<f64>,
    /// values[point][dir][rung]
    pub values: Vec<Vec<Vec<Complex64>>>,
}

impl FbiSampleSet {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 6 {
            return Err(Error::ShortLadder {
                min: 6,
                got: self.ladder.len(),
            });
        }
        if !self.ladder.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Domain("ladder must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayClass {
    /// |F| <= A^{k+1} M_k / |zeta|^k for all k <= k_test, stable A.
    MRegular { a: f64 },
    /// log |F| fits -rate |zeta| (rate > 0).
    Exponential { rate: f64 },
    /// Neither envelope holds.
    Irregular,
}

impl DecayClass {
    /// Both envelope classes certify microlocal regularity.
    pub fn is_regular(&self) -> bool {
        !matches!(self, DecayClass::Irregular)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedCell {
    pub class: DecayClass,
    /// for-all-k envelope constant over the full ladder
    pub a_envelope: f64,
    /// same with the top rung dropped
    pub a_dropped: f64,
    /// relative RMS residuals of the (linear, sqrt, log) models
    pub fit_residuals: (f64, f64, f64),
}

#[derive(Debug, Clone)]
pub struct DecayClassification {
    pub norm: EnvelopeNorm,
    pub k_test: usize,
    /// per_cell[point][dir]
    pub per_cell: Vec<Vec<ClassifiedCell>>,
}

impl DecayClassification {
    pub fn all_regular(&self) -> bool {
        self.per_cell
            .iter()
            .all(|row| row.iter().all(|c| c.class.is_regular()))
    }

    pub fn flagged(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.per_cell.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if !cell.class.is_regular() {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn ln_weight(seq: &RegularSequence, k: usize, norm: EnvelopeNorm) -> f64 {
    match norm {
        EnvelopeNorm::BigM => seq.ln_big_m(k).unwrap(),
        EnvelopeNorm::SmallM => seq.ln_m(k).unwrap(),
    }
}

/// For-all-k envelope constant: max over (rung, k) of
/// (|F| |zeta|^k / M_k)^{1/(k+1)}.
fn envelope_constant(
    ladder: &[f64],
    values: &[Complex64],
    seq: &RegularSequence,
    k_test: usize,
    norm: EnvelopeNorm,
) -> f64 {
    let mut ln_a = f64::NEG_INFINITY;
    for (&z, v) in ladder.iter().zip(values) {
        let mag = v.norm().max(1e-300);
        let ln_mag = mag.ln();
        let ln_z = z.ln();
        for k in 0..=k_test {
            let cand = (ln_mag + k as f64 * ln_z - ln_weight(seq, k, norm)) / (k as f64 + 1.0);
            ln_a = ln_a.max(cand);
        }
    }
    ln_a.exp()
}

/// Classify one ladder of magnitudes.
pub fn classify_ladder(
    ladder: &[f64],
    values: &[Complex64],
    seq: &RegularSequence,
    k_test: usize,
    norm: EnvelopeNorm,
    params: &ClassifierParams,
) -> ClassifiedCell {
    let a_envelope = envelope_constant(ladder, values, seq, k_test, norm);
    let a_dropped = envelope_constant(
        &ladder[..ladder.len() - 1],
        &values[..values.len() - 1],
        seq,
        k_test,
        norm,
    );
    let kept: Vec<(f64, f64)> = ladder
        .iter()
        .zip(values)
        .filter(|(_, v)| v.norm() > params.noise_floor)
        .map(|(&z, v)| (z, v.norm().ln()))
        .collect();
    if kept.len() < params.min_rungs {
        // decayed below the floor almost immediately: faster than any
        // measurable envelope
        return ClassifiedCell {
            class: DecayClass::Exponential { rate: f64::INFINITY },
            a_envelope,
            a_dropped,
            fit_residuals: (0.0, 0.0, 0.0),
        };
    }
    let zs: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1).collect();
    let (_, slope_lin, r_lin) = linear_fit(&zs, &ys);
    let sqrt_zs: Vec<f64> = zs.iter().map(|z| z.sqrt()).collect();
    let (_, _, r_sqrt) = linear_fit(&sqrt_zs, &ys);
    let log_zs: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let (_, _, r_log) = linear_fit(&log_zs, &ys);
    let residuals = (r_lin, r_sqrt, r_log);

    if r_lin <= r_sqrt && r_lin <= r_log && r_lin < params.exp_residual_max && slope_lin < 0.0 {
        return ClassifiedCell {
            class: DecayClass::Exponential { rate: -slope_lin },
            a_envelope,
            a_dropped,
            fit_residuals: residuals,
        };
    }
    let stable = (a_envelope - a_dropped).abs() <= params.a_stability * a_envelope.max(1e-300);
    if stable {
        ClassifiedCell {
            class: DecayClass::MRegular { a: a_envelope },
            a_envelope,
            a_dropped,
            fit_residuals: residuals,
        }
    } else {
        ClassifiedCell {
            class: DecayClass::Irregular,
            a_envelope,
            a_dropped,
            fit_residuals: residuals,
        }
    }
}

/// Classify every (point, direction) cell of a sample set.
pub fn decay_fit(
    samples: &FbiSampleSet,
    seq: &RegularSequence,
    k_test: usize,
    norm: EnvelopeNorm,
    params: &ClassifierParams,
) -> Result<DecayClassification> {
    samples.validate()?;
    let per_cell = samples
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|ladder_vals| {
                    classify_ladder(&samples.ladder, ladder_vals, seq, k_test, norm, params)
                })
                .collect()
        })
        .collect();
    Ok(DecayClassification {
        norm,
        k_test,
        per_cell,
    })
}
