//! Empirical order of convergence from an iterate sequence.

use crate::error::{Error, Result};
use crate::linalg;

use super::OptimizerTrace;

/// Errors below this are treated as converged to rounding.
const ERROR_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Triples needed for a usable estimate.
const MIN_ITERATIONS: usize = 4;

/// Contraction-weighted mean of `q_k = log(e_{k+1}/e_k) / log(e_k/e_{k-1})`
/// over the contracting tail of `e_k = ‖ξ_k - ξ_final‖₂`.
pub fn convergence_order(trace: &OptimizerTrace, xi_final: &[f64]) -> Result<f64> {
    convergence_order_above(trace, xi_final, ERROR_FLOOR)
}

/// As [`convergence_order`], ignoring errors at or below `floor`; callers
/// whose `ξ_final` is only known to some resolution pass that resolution.
pub fn convergence_order_above(trace: &OptimizerTrace, xi_final: &[f64], floor: f64) -> Result<f64> {
    if trace.iterations() < MIN_ITERATIONS {
        return Err(Error::InsufficientIterations {
            needed: MIN_ITERATIONS,
            found: trace.iterations(),
        });
    }
    let errors: Vec<f64> = trace
        .iterates
        .iter()
        .map(|x| {
            let d: Vec<f64> = x.iter().zip(xi_final).map(|(a, b)| a - b).collect();
            linalg::norm2(&d)
        })
        .collect();
    errors_order(&errors, floor.max(ERROR_FLOOR))
}

/// Order estimate from an error sequence.
///
/// Uses the final monotonically contracting run of errors above the floor.
/// Each `q_k` is weighted by `log(e_k/e_{k-1})`, so the sum telescopes to
/// `log(e_K/e_{m+1}) / log(e_{K-1}/e_m)`. Small pre-asymptotic steps carry
/// little weight, and a zig-zag of alternating fast and slow steps averages
/// to its true rate instead of to the mean of its ratios.
pub fn convergence_order_from_errors(errors: &[f64]) -> Result<f64> {
    errors_order(errors, ERROR_FLOOR)
}

fn errors_order(errors: &[f64], floor: f64) -> Result<f64> {
    let usable: Vec<f64> = errors
        .iter()
        .copied()
        .take_while(|e| e.is_finite() && *e > floor)
        .collect();
    let mut start = usable.len().saturating_sub(1);
    while start > 0 && usable[start] < usable[start - 1] {
        start -= 1;
    }
    let tail = &usable[start..];
    if tail.len() < 3 {
        return Err(Error::InsufficientIterations {
            needed: 3,
            found: tail.len(),
        });
    }
    let k = tail.len() - 1;
    let q = (tail[k] / tail[1]).ln() / (tail[k - 1] / tail[0]).ln();
    if q.is_finite() {
        Ok(q)
    } else {
        Err(Error::InsufficientIterations {
            needed: 3,
            found: tail.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_sequence() {
        let e: Vec<f64> = (0..6).map(|k| 10f64.powf(-(2f64.powi(k)))).collect();
        let q = convergence_order_from_errors(&e).unwrap();
        assert!((q - 2.0).abs() < 1e-12, "{q}");
    }

    #[test]
    fn exact_linear_sequence() {
        let e: Vec<f64> = (1..12).map(|k| 10f64.powi(-k)).collect();
        let q = convergence_order_from_errors(&e).unwrap();
        assert!((q - 1.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn preasymptotic_growth_is_skipped() {
        let quad: Vec<f64> = (0..6).map(|k| 0.5f64.powi(1 << k)).collect();
        let mut e = vec![1.0, 3.0];
        e.extend(&quad);
        let with_bump = convergence_order_from_errors(&e).unwrap();
        let mut from_peak = vec![3.0];
        from_peak.extend(&quad);
        assert_eq!(with_bump, convergence_order_from_errors(&from_peak).unwrap());
    }

    #[test]
    fn slow_start_carries_little_weight() {
        let mut e = vec![1.6, 0.9, 0.8, 0.7];
        e.extend((0..6).map(|k| 0.5f64.powi(1 << k)));
        let q = convergence_order_from_errors(&e).unwrap();
        let plain: Vec<f64> = e.windows(3).map(|w| (w[2] / w[1]).ln() / (w[1] / w[0]).ln()).collect();
        let plain = plain.iter().sum::<f64>() / plain.len() as f64;
        assert!(q > 1.85 && q < 2.0, "{q}");
        assert!(q > plain, "{q} vs {plain}");
    }

    #[test]
    fn zigzag_linear_reads_as_linear() {
        let mut e = vec![1.0];
        for k in 0..16 {
            let r = if k % 2 == 0 { 0.01 } else { 0.5 };
            e.push(e[k] * r);
        }
        let q = convergence_order_from_errors(&e[..16]).unwrap();
        assert!((q - 1.0).abs() < 0.1, "{q}");
    }

    #[test]
    fn floor_drops_reference_noise() {
        let mut e: Vec<f64> = (0..5).map(|k| 0.5f64.powi(1 << k)).collect();
        e.push(3e-13);
        assert!((convergence_order_from_errors(&e).unwrap() - 2.0).abs() > 0.1);
        assert!((errors_order(&e, 1e-12).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_short() {
        assert!(convergence_order_from_errors(&[1.0, 0.1]).is_err());
    }
}
