//! Published second-order probability matrices, scale factors already applied.

use crate::matrix::ProbabilityMatrix;

/// Four-element series system; each element is its own cut set.
pub fn four_element_series() -> ProbabilityMatrix {
    ProbabilityMatrix::from_upper_triangle(
        &[
            &[0.27425312, 0.17106964, 0.13021655, 0.09525911],
            &[0.21185540, 0.10920296, 0.08120990],
            &[0.15865525, 0.06566078],
            &[0.11506967],
        ],
        1.0,
    )
    .expect("published matrix is valid")
}

/// First-order probabilities of the four-event correlation sweep.
pub const DELTA_SWEEP_FIRST_ORDER: [f64; 4] = [0.01, 0.025, 0.03, 0.07];

/// Offsets used with [`DELTA_SWEEP_FIRST_ORDER`]: positive, none, negative correlation.
pub const DELTA_SWEEP_DELTAS: [f64; 3] = [0.0001, 0.0, -0.0001];

/// Five cut-set system (entries given in percent).
pub fn five_cut_sets() -> ProbabilityMatrix {
    ProbabilityMatrix::from_upper_triangle(
        &[
            &[4.548, 1.776, 1.790, 1.559, 0.119],
            &[2.360, 1.358, 1.133, 0.212],
            &[3.031, 1.786, 0.123],
            &[2.744, 0.269],
            &[1.469],
        ],
        0.01,
    )
    .expect("published matrix is valid")
}

/// Seven-member determinate truss, member yielding (entries given in units of 1e-5).
pub fn seven_member_truss() -> ProbabilityMatrix {
    ProbabilityMatrix::from_upper_triangle(
        &[
            &[18.8, 5.73, 4.35, 5.42, 4.59, 5.13, 4.85],
            &[18.8, 6.08, 7.79, 6.47, 7.42, 6.87],
            &[18.8, 5.75, 4.86, 5.43, 5.14],
            &[18.8, 6.10, 6.88, 6.48],
            &[18.8, 5.76, 5.44],
            &[18.8, 6.11],
            &[18.8],
        ],
        1e-5,
    )
    .expect("published matrix is valid")
}

/// Exact failure probability of the truss from multivariate normal integration (reference only).
pub const SEVEN_MEMBER_TRUSS_EXACT: f64 = 6.9988e-4;

/// Exact failure probability of the four-element series system (reference only).
pub const FOUR_ELEMENT_SERIES_EXACT: f64 = 0.349120;

/// A randomly drawn 6x6 conditional-uniform matrix (entries given in units of 1e-3).
pub fn random_six_event() -> ProbabilityMatrix {
    ProbabilityMatrix::from_upper_triangle(
        &[
            &[4.74467793, 1.35693940, 3.02042750, 3.17568001, 2.17177994, 1.80796900],
            &[2.34044502, 0.58219757, 0.38739530, 0.19132633, 1.39092307],
            &[3.60105675, 0.44924975, 0.33655831, 1.88047290],
            &[3.63910007, 1.24586511, 3.61723941],
            &[4.42818259, 2.03204045],
            &[6.94666654],
        ],
        1e-3,
    )
    .expect("published matrix is valid")
}
