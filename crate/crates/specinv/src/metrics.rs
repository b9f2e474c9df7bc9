//! Scale-invariant signal-to-distortion ratio and separation reports.

use serde::Serialize;

use crate::{Error, Result, TimeSignal};

/// Cap applied when the error (or the projected signal) vanishes, keeping
/// reports finite and comparable.
const SI_SDR_CAP_DB: f64 = 300.0;

/// SI-SDR in dB: project the estimate onto the reference, then compare the
/// projected energy to the residual energy. Signals are trimmed to their
/// common length first.
pub fn si_sdr(estimate: &TimeSignal, reference: &TimeSignal) -> Result<f64> {
    let len = estimate.len().min(reference.len());
    let est = &estimate.samples[..len];
    let reference_full_energy: f64 = reference.samples.iter().map(|r| r * r).sum();
    if reference_full_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let reff = &reference.samples[..len];
    let ref_energy: f64 = reff.iter().map(|r| r * r).sum();
    if ref_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let est_energy: f64 = est.iter().map(|e| e * e).sum();
    if est_energy == 0.0 {
        return Ok(-SI_SDR_CAP_DB);
    }
    let alpha = est.iter().zip(reff).map(|(e, r)| e * r).sum::<f64>() / ref_energy;
    let target_energy = alpha * alpha * ref_energy;
    let error_energy: f64 = est
        .iter()
        .zip(reff)
        .map(|(e, r)| {
            let d = alpha * r - e;
            d * d
        })
        .sum();
    if error_energy < 1e-30 {
        return Ok(SI_SDR_CAP_DB);
    }
    if target_energy < 1e-30 {
        return Ok(-SI_SDR_CAP_DB);
    }
    Ok(10.0 * (target_energy / error_energy).log10())
}

/// SI-SDR improvement over using the raw mixture as the estimate.
pub fn si_sdr_improvement(
    estimate: &TimeSignal,
    reference: &TimeSignal,
    mixture: &TimeSignal,
) -> Result<f64> {
    Ok(si_sdr(estimate, reference)? - si_sdr(mixture, reference)?)
}

/// Per-source separation quality for one algorithm run.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub algorithm: String,
    /// SI-SDR of each estimate against its reference, in dB.
    pub si_sdr_db: Vec<f64>,
    /// Per-source improvement over the mixture-as-estimate, in dB.
    pub si_sdri_db: Vec<f64>,
    pub mean_si_sdri_db: f64,
    /// Algorithmic latency in samples; `None` for offline algorithms.
    pub latency_samples: Option<usize>,
    /// Objective value per iteration, when the algorithm exposes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_trace: Option<Vec<f64>>,
}

impl SeparationReport {
    /// Score index-aligned estimates against their references.
    pub fn evaluate(
        algorithm: impl Into<String>,
        estimates: &[TimeSignal],
        references: &[TimeSignal],
        mixture: &TimeSignal,
        latency_samples: Option<usize>,
        loss_trace: Option<Vec<f64>>,
    ) -> Result<Self> {
        if estimates.len() != references.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} estimates vs {} references",
                estimates.len(),
                references.len()
            )));
        }
        let mut si_sdr_db = Vec::with_capacity(estimates.len());
        let mut si_sdri_db = Vec::with_capacity(estimates.len());
        for (est, reference) in estimates.iter().zip(references) {
            si_sdr_db.push(si_sdr(est, reference)?);
            si_sdri_db.push(si_sdr_improvement(est, reference, mixture)?);
        }
        let mean_si_sdri_db = si_sdri_db.iter().sum::<f64>() / si_sdri_db.len().max(1) as f64;
        Ok(Self {
            algorithm: algorithm.into(),
            si_sdr_db,
            si_sdri_db,
            mean_si_sdri_db,
            latency_samples,
            loss_trace,
        })
    }
}
