use serde::Serialize;

use super::OrbitFourierError;
use crate::scalar::Real;

/// `-alpha beta / (beta (1 + alpha) + 2 alpha + 1)`, the optimized decay exponent.
pub fn predicted_exponent<F: Real>(alpha: F, beta: F) -> Result<F, OrbitFourierError> {
    if !(alpha > F::zero() && alpha <= beta && beta.is_finite()) {
        return Err(OrbitFourierError::InvalidExponentInput);
    }
    let one = F::one();
    let two = F::lit(2.0);
    Ok(-(alpha * beta) / (beta * (one + alpha) + two * alpha + one))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentOptimum<F> {
    pub gamma: F,
    pub delta: F,
    pub value: F,
    /// Grid spacing of the final zoom level.
    pub spacing: F,
}

fn objective<F: Real>(alpha: F, beta: F, gamma: F, delta: F) -> F {
    let one = F::one();
    let half = F::lit(0.5);
    let a = -delta * alpha;
    let b = (-one - delta * (alpha - one) + gamma * delta) * half;
    let c = delta * (one - gamma * beta) * half;
    a.max(b).max(c)
}

fn scan<F: Real>(alpha: F, beta: F, (g0, g1): (F, F), (d0, d1): (F, F), resolution: usize) -> ExponentOptimum<F> {
    let steps = F::from_usize(resolution).expect("small");
    let (hg, hd) = ((g1 - g0) / steps, (d1 - d0) / steps);
    let mut best = ExponentOptimum { gamma: g1, delta: d1, value: F::infinity(), spacing: hg.max(hd) };
    for i in 1..=resolution {
        let g = g0 + hg * F::from_usize(i).expect("small");
        for j in 1..=resolution {
            let d = d0 + hd * F::from_usize(j).expect("small");
            let v = objective(alpha, beta, g, d);
            if v < best.value {
                best.gamma = g;
                best.delta = d;
                best.value = v;
            }
        }
    }
    best
}

/// Minimize `max{-d a, (-1 - d(a-1) + g d)/2, d(1 - g b)/2}` over `(g, d) in (0, 10]^2`.
///
/// A uniform scan at `resolution` points per axis is refined by `zooms` rescans
/// centered on the incumbent, each with a window a quarter the width of the last.
/// The optimum sits at the tip of a narrow valley, so a window of a few cells can
/// trap the search on the valley floor.
pub fn optimize_exponent_grid<F: Real>(
    alpha: F,
    beta: F,
    resolution: usize,
    zooms: usize,
) -> Result<ExponentOptimum<F>, OrbitFourierError> {
    if resolution < 100 {
        return Err(OrbitFourierError::CoarseGrid);
    }
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(OrbitFourierError::InvalidExponentInput);
    }
    let ten = F::lit(10.0);
    let mut best = scan(alpha, beta, (F::zero(), ten), (F::zero(), ten), resolution);
    let mut half = F::lit(2.5);
    for _ in 0..zooms {
        let g = (best.gamma - half).max(F::zero());
        let d = (best.delta - half).max(F::zero());
        let next = scan(alpha, beta, (g, (best.gamma + half).min(ten)), (d, (best.delta + half).min(ten)), resolution);
        if next.value <= best.value {
            best = next;
        } else {
            best.spacing = next.spacing;
        }
        half = half * F::lit(0.25);
    }
    Ok(best)
}
