//! Confusion matrices counted by hand, with their scores as exact fractions.

pub struct Case {
    pub predictions: &'static [u8],
    pub labels: &'static [u8],
    /// (tp, fp, tn, fn)
    pub counts: (usize, usize, usize, usize),
    /// accuracy, precision, recall, f1
    pub scores: [f64; 4],
}

pub fn cases() -> Vec<Case> {
    vec![
        Case { predictions: &[1, 1, 0, 0], labels: &[1, 0, 0, 1], counts: (1, 1, 1, 1), scores: [2.0 / 4.0, 1.0 / 2.0, 1.0 / 2.0, 2.0 / 4.0] },
        Case { predictions: &[1, 1, 1], labels: &[1, 1, 1], counts: (3, 0, 0, 0), scores: [1.0, 1.0, 1.0, 1.0] },
        Case { predictions: &[0, 0, 0, 0], labels: &[0, 0, 0, 0], counts: (0, 0, 4, 0), scores: [1.0, 0.0, 0.0, 0.0] },
        Case { predictions: &[0, 0, 0], labels: &[1, 1, 0], counts: (0, 0, 1, 2), scores: [1.0 / 3.0, 0.0, 0.0, 0.0] },
        Case { predictions: &[1, 1, 1, 1], labels: &[0, 0, 0, 1], counts: (1, 3, 0, 0), scores: [1.0 / 4.0, 1.0 / 4.0, 1.0, 2.0 / 5.0] },
        Case {
            predictions: &[1, 0, 1, 0, 1, 0],
            labels: &[1, 1, 1, 0, 0, 0],
            counts: (2, 1, 2, 1),
            scores: [4.0 / 6.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 6.0],
        },
        Case {
            predictions: &[1, 1, 0, 0, 0, 1, 1, 0],
            labels: &[1, 1, 1, 1, 0, 0, 0, 0],
            counts: (2, 2, 2, 2),
            scores: [4.0 / 8.0, 2.0 / 4.0, 2.0 / 4.0, 4.0 / 8.0],
        },
        Case {
            predictions: &[1, 1, 1, 1, 1, 0, 0, 0, 0, 0],
            labels: &[1, 1, 1, 1, 0, 1, 0, 0, 0, 0],
            counts: (4, 1, 4, 1),
            scores: [8.0 / 10.0, 4.0 / 5.0, 4.0 / 5.0, 8.0 / 10.0],
        },
        Case { predictions: &[0, 1], labels: &[1, 0], counts: (0, 1, 0, 1), scores: [0.0, 0.0, 0.0, 0.0] },
        Case {
            predictions: &[1, 1, 1, 0, 1, 1, 1],
            labels: &[1, 1, 1, 1, 1, 1, 0],
            counts: (5, 1, 0, 1),
            scores: [5.0 / 7.0, 5.0 / 6.0, 5.0 / 6.0, 10.0 / 12.0],
        },
    ]
}
