//! Projection of a (smoothed) count table onto the noisy-OR family.
//!
//! Maximizes `sum_rows a_r ln F_r + b_r ln(1 - F_r)` where
//! `F_r = (1 - leak) * prod_{i active in r} (1 - link_i)` is the probability
//! of the child being false, `a_r`/`b_r` the false/true counts. This is the
//! count-weighted KL projection. Each coordinate sub-problem is concave in
//! `q = 1 - parameter` and is solved by bisection on its derivative; sweeps
//! start from the current parameters so the objective never decreases.

use crate::bn::{parent_active, NoisyOrCpd};

const MAX_SWEEPS: usize = 100;
const BISECTION_STEPS: usize = 100;
const SWEEP_TOLERANCE: f64 = 1e-13;

pub(crate) fn project_noisy_or(current: &NoisyOrCpd, counts: &[[f64; 2]]) -> NoisyOrCpd {
    let k = current.parents.len();
    debug_assert_eq!(counts.len(), 1 << k);
    // q[0] = 1 - leak, q[i + 1] = 1 - link_i
    let mut q: Vec<f64> = std::iter::once(1.0 - current.leak)
        .chain(current.link_probs.iter().map(|p| 1.0 - p))
        .collect();
    let active = |row: usize, coord: usize| coord == 0 || parent_active(row, coord - 1, k);

    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for coord in 0..=k {
            // Per affected row: (a, b, c) with F_r = c * q[coord].
            let terms: Vec<(f64, f64, f64)> = (0..counts.len())
                .filter(|&r| active(r, coord))
                .map(|r| {
                    let c: f64 = (0..=k)
                        .filter(|&j| j != coord && active(r, j))
                        .map(|j| q[j])
                        .product();
                    (counts[r][0], counts[r][1], c)
                })
                .collect();
            let new_q = solve_coordinate(&terms);
            max_change = max_change.max((new_q - q[coord]).abs());
            q[coord] = new_q;
        }
        if max_change < SWEEP_TOLERANCE {
            break;
        }
    }
    NoisyOrCpd {
        leak: (1.0 - q[0]).clamp(0.0, 1.0),
        link_probs: q[1..].iter().map(|x| (1.0 - x).clamp(0.0, 1.0)).collect(),
        ..current.clone()
    }
}

/// Maximizer over `q in [0, 1]` of `sum a ln(c q) + b ln(1 - c q)`.
fn solve_coordinate(terms: &[(f64, f64, f64)]) -> f64 {
    let a_total: f64 = terms.iter().filter(|t| t.2 > 0.0).map(|t| t.0).sum();
    let b_weighted: f64 = terms.iter().map(|t| t.1 * t.2).sum();
    if a_total <= 0.0 {
        return 0.0;
    }
    if b_weighted <= 0.0 {
        return 1.0;
    }
    // Strictly decreasing derivative.
    let derivative = |q: f64| {
        terms
            .iter()
            .filter(|t| t.2 > 0.0)
            .map(|&(a, b, c)| a / q - b * c / (1.0 - c * q))
            .sum::<f64>()
    };
    if derivative(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let d = derivative(mid);
        if d.is_nan() || d < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
