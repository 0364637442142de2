//! Geometric search for a spatial bound that happens to satisfy a
//! frequency target: the usual way to get spectral fidelity without a
//! correction stage.

use serde::Serialize;

use super::baseline::{BaseCompressor, BaseOutput};
use crate::error::{Error, Result};
use crate::projection::FrequencyBound;
use crate::transform::{ScalarField, Transformer};

pub const DEFAULT_SHRINK_FACTOR: f64 = 0.5;

/// One compression attempt of the search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneStep {
    pub step: usize,
    pub error_bound: f64,
    /// `max(|Re delta_k| - D_re(k), |Im delta_k| - D_im(k))`; `<= 0` on success.
    pub max_freq_excess: f64,
    pub payload_bytes: u64,
    pub satisfied: bool,
}

#[derive(Clone, Debug)]
pub struct TuneOutcome {
    /// First bound of the sequence whose reconstruction meets the target.
    pub error_bound: f64,
    pub output: BaseOutput,
    pub trace: Vec<TuneStep>,
}

fn target_at(target: &FrequencyBound, k: usize) -> (f64, f64) {
    match target {
        FrequencyBound::Global(d) => (*d, *d),
        FrequencyBound::PerComponent { re, im } => (re[k], im[k]),
    }
}

/// Compress with `E = initial_bound * shrink_factor^i` for `i = 0, 1, ...`
/// until every frequency error lies within `target`. Fails once `E` drops
/// below the base compressor's smallest lossy bound.
pub fn trial_and_error_tune(
    field: &ScalarField,
    target: &FrequencyBound,
    base: &dyn BaseCompressor,
    initial_bound: f64,
    shrink_factor: f64,
) -> Result<TuneOutcome> {
    if !(shrink_factor > 0.0 && shrink_factor < 1.0) {
        return Err(Error::validation(format!(
            "shrink factor must lie in (0, 1), got {shrink_factor}"
        )));
    }
    if !(initial_bound > 0.0 && initial_bound.is_finite()) {
        return Err(Error::validation(format!(
            "initial bound must be positive and finite, got {initial_bound}"
        )));
    }
    if let FrequencyBound::PerComponent { re, im } = target {
        if re.len() != field.len() || im.len() != field.len() {
            return Err(Error::validation("frequency target does not match the field size"));
        }
    }
    let transformer = Transformer::new(field.dims())?;
    let floor = base.min_error_bound(field);
    let mut trace = Vec::new();
    let mut bound = initial_bound;
    while bound >= floor {
        let output = base.compress(field, bound)?;
        let error: Vec<f64> = output
            .decompressed
            .values()
            .iter()
            .zip(field.values())
            .map(|(d, o)| d - o)
            .collect();
        let delta = transformer.forward_real(&error);
        let max_freq_excess = delta
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let (br, bi) = target_at(target, k);
                (d.re.abs() - br).max(d.im.abs() - bi)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let satisfied = max_freq_excess <= 0.0;
        trace.push(TuneStep {
            step: trace.len(),
            error_bound: bound,
            max_freq_excess,
            payload_bytes: output.payload_bytes,
            satisfied,
        });
        if satisfied {
            return Ok(TuneOutcome {
                error_bound: bound,
                output,
                trace,
            });
        }
        bound *= shrink_factor;
    }
    Err(Error::TuningFailed { trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_field, SynthKind, UniformQuantizer};

    #[test]
    fn huge_target_needs_no_shrinking() {
        let f = synth_field(SynthKind::WhiteNoise, &[64], 3).unwrap();
        let t = trial_and_error_tune(&f, &FrequencyBound::Global(1e6), &UniformQuantizer, 0.01, 0.5).unwrap();
        assert_eq!(t.trace.len(), 1);
        assert_eq!(t.error_bound, 0.01);
    }

    #[test]
    fn zero_target_fails_with_trace() {
        let f = synth_field(SynthKind::WhiteNoise, &[64], 3).unwrap();
        match trial_and_error_tune(&f, &FrequencyBound::Global(0.0), &UniformQuantizer, 0.01, 0.5) {
            Err(Error::TuningFailed { trace }) => {
                assert!(trace.len() > 10);
                assert!(trace.iter().all(|s| !s.satisfied));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shrink_factor_is_validated() {
        let f = synth_field(SynthKind::WhiteNoise, &[8], 3).unwrap();
        assert!(trial_and_error_tune(&f, &FrequencyBound::Global(1.0), &UniformQuantizer, 0.1, 1.0).is_err());
    }
}
