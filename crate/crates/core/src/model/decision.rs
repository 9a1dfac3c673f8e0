use crate::error::{Error, Result};
use crate::label::KernelLabel;

/// The decision rule: `p ≤ 0.5` is Abnormal, anything above is Normal.
pub fn classify(probability: f64) -> Result<KernelLabel> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::invalid(format!(
            "probability {probability} outside [0, 1]"
        )));
    }
    Ok(if probability <= 0.5 {
        KernelLabel::Abnormal
    } else {
        KernelLabel::Normal
    })
}

/// Fraction of positions where prediction and ground truth agree.
pub fn accuracy(predictions: &[KernelLabel], actuals: &[KernelLabel]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != actuals.len() {
        return Err(Error::invalid(format!(
            "accuracy needs equal, non-empty label lists (got {} and {})",
            predictions.len(),
            actuals.len()
        )));
    }
    let hits = predictions
        .iter()
        .zip(actuals)
        .filter(|(p, a)| p == a)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use KernelLabel::{Abnormal, Normal};

    #[test]
    fn threshold_values() {
        assert_eq!(classify(0.0).unwrap(), Abnormal);
        assert_eq!(classify(0.5).unwrap(), Abnormal);
        assert_eq!(classify(0.857).unwrap(), Normal);
        assert_eq!(classify(0.023).unwrap(), Abnormal);
        assert_eq!(classify(1.0).unwrap(), Normal);
        assert!(classify(-0.01).is_err());
        assert!(classify(1.01).is_err());
        assert!(classify(f64::NAN).is_err());
    }

    #[test]
    fn label_encoding_classifies_back() {
        for label in KernelLabel::ALL {
            assert_eq!(classify(label.encode()).unwrap(), label);
        }
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(
            accuracy(
                &[Normal, Abnormal, Normal, Abnormal],
                &[Normal, Normal, Normal, Normal]
            )
            .unwrap(),
            0.5
        );
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[Normal], &[Normal, Abnormal]).is_err());
    }
}
