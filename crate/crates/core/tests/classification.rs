#[path = "support/confusion_cases.rs"]
mod confusion_cases;

use ample_core::metrics::{classification_metrics, confusion_matrix, MetricsError};

#[test]
fn hand_counted_matrices() {
    for (i, case) in confusion_cases::cases().iter().enumerate() {
        let cm = confusion_matrix(case.predictions, case.labels).unwrap();
        assert_eq!((cm.tp, cm.fp, cm.tn, cm.fn_), case.counts, "case {i}");
        let s = classification_metrics(case.predictions, case.labels).unwrap();
        assert_eq!([s.accuracy, s.precision, s.recall, s.f1], case.scores, "case {i}");
    }
}

#[test]
fn malformed_inputs() {
    assert!(matches!(confusion_matrix(&[1, 0], &[1]), Err(MetricsError::LengthMismatch(2, 1))));
    assert!(matches!(confusion_matrix(&[], &[]), Err(MetricsError::EmptyInput)));
    assert!(matches!(confusion_matrix(&[2], &[1]), Err(MetricsError::NotBinary(2))));
}
