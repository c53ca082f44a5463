//! Strong Wolfe line search by bracketing and zooming.

use crate::error::{Error, Result};

use super::is_domain_error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub initial_step: f64,
    /// Budget of trial evaluations.
    pub max_evals: usize,
    /// Values within `value_tol·|φ(0)|` of `φ(0)` count as no increase, so
    /// steps near an optimum are judged by slope once the decrease is below
    /// rounding resolution.
    pub value_tol: f64,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            initial_step: 1.0,
            max_evals: 60,
            value_tol: 1e-10,
        }
    }
}

/// The accepted step; it is always the last point `φ` was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeStep {
    pub step: f64,
    pub value: f64,
    pub slope: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    s: f64,
    /// `None` when the trial point was infeasible.
    fd: Option<(f64, f64)>,
}

/// Finds `s` with `φ(s) ≤ φ(0) + c₁sφ'(0)` and `|φ'(s)| ≤ c₂|φ'(0)|`.
///
/// The decrease condition is relaxed to `φ(s) ≤ φ(0) + value_tol·|φ(0)|`
/// (an approximate Wolfe condition), which only matters once `φ` is flat to
/// working precision.
///
/// `phi` returns `(φ(s), φ'(s))`. Trial points that fail with a domain-type
/// error count as `+∞` and are bisected away from.
pub fn wolfe_line_search<F>(mut phi: F, phi0: f64, dphi0: f64, params: &WolfeParams) -> Result<WolfeStep>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(dphi0 < 0.0) || !phi0.is_finite() {
        return Err(Error::LineSearchFailure(format!(
            "not a descent direction: φ'(0) = {dphi0}"
        )));
    }
    if !(params.initial_step > 0.0)
        || !(0.0 < params.c1 && params.c1 < params.c2 && params.c2 < 1.0)
        || !(params.value_tol >= 0.0)
    {
        return Err(Error::InvalidInput("invalid Wolfe parameters".into()));
    }
    let mut evals = 0;
    let band = params.value_tol * phi0.abs();
    let armijo = |s: f64, f: f64| f <= phi0 + params.c1 * s * dphi0 || f <= phi0 + band;
    let worse = |f: f64, f_ref: f64| if band > 0.0 { f > f_ref + band } else { f >= f_ref };
    let curvature = |d: f64| d.abs() <= -params.c2 * dphi0;
    let accept = |t: Trial, evals: usize| {
        let (value, slope) = t.fd.expect("feasible");
        WolfeStep {
            step: t.s,
            value,
            slope,
            evaluations: evals,
        }
    };

    let mut lo = Trial {
        s: 0.0,
        fd: Some((phi0, dphi0)),
    };
    let mut s = params.initial_step;
    let mut first = true;
    let (mut lo, mut hi) = loop {
        if evals >= params.max_evals {
            return Err(Error::LineSearchFailure("bracketing budget exhausted".into()));
        }
        let t = probe(&mut phi, &mut evals, s)?;
        match t.fd {
            None => break (lo, t),
            Some((f, d)) => {
                let f_lo = lo.fd.expect("feasible").0;
                if !armijo(s, f) || (!first && worse(f, f_lo)) {
                    break (lo, t);
                }
                if curvature(d) {
                    return Ok(accept(t, evals));
                }
                if d >= 0.0 {
                    break (t, lo);
                }
                lo = t;
                s *= 2.0;
                first = false;
            }
        }
    };

    loop {
        if evals >= params.max_evals {
            return Err(Error::LineSearchFailure("zoom budget exhausted".into()));
        }
        if (hi.s - lo.s).abs() <= 1e-16 * lo.s.abs().max(1.0) {
            return Err(Error::LineSearchFailure("bracket collapsed".into()));
        }
        let s = interpolate(lo, hi, band);
        let t = probe(&mut phi, &mut evals, s)?;
        let (f_lo, _) = lo.fd.expect("lo is always feasible");
        match t.fd {
            None => hi = t,
            Some((f, d)) => {
                if !armijo(s, f) || worse(f, f_lo) {
                    hi = t;
                } else {
                    if curvature(d) {
                        return Ok(accept(t, evals));
                    }
                    if d * (hi.s - lo.s) >= 0.0 {
                        hi = lo;
                    }
                    lo = t;
                }
            }
        }
    }
}

fn probe<F>(phi: &mut F, evals: &mut usize, s: f64) -> Result<Trial>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    *evals += 1;
    match phi(s) {
        Ok((f, d)) if f.is_finite() && d.is_finite() => Ok(Trial { s, fd: Some((f, d)) }),
        Ok(_) => Ok(Trial { s, fd: None }),
        Err(e) if is_domain_error(&e) => Ok(Trial { s, fd: None }),
        Err(e) => Err(e),
    }
}

/// Safeguarded cubic interpolation, or the slope secant when the two values
/// are indistinguishable; bisection when neither is usable.
fn interpolate(lo: Trial, hi: Trial, band: f64) -> f64 {
    let mid = 0.5 * (lo.s + hi.s);
    let (Some((f0, d0)), Some((f1, d1))) = (lo.fd, hi.fd) else {
        return mid;
    };
    let (a, b) = (lo.s, hi.s);
    let s = if (f1 - f0).abs() <= band && d0 * d1 < 0.0 {
        a - d0 * (b - a) / (d1 - d0)
    } else {
        let e1 = d0 + d1 - 3.0 * (f0 - f1) / (a - b);
        let disc = e1 * e1 - d0 * d1;
        if !(disc >= 0.0) {
            return mid;
        }
        let e2 = (b - a).signum() * disc.sqrt();
        b - (b - a) * (d1 + e2 - e1) / (d1 - d0 + 2.0 * e2)
    };
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if s.is_finite() && s > left + margin && s < right - margin {
        s
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_wolfe(phi: impl Fn(f64) -> (f64, f64), step: &WolfeStep, p: &WolfeParams) {
        let (f0, d0) = phi(0.0);
        let (f, d) = phi(step.step);
        assert!(f <= f0 + p.c1 * step.step * d0);
        assert!(d.abs() <= p.c2 * d0.abs());
    }

    #[test]
    fn exact_minimum_accepted_immediately() {
        let phi = |s: f64| (0.5 * (1.0 - s).powi(2), s - 1.0);
        let p = WolfeParams::default();
        let step = wolfe_line_search(|s| Ok(phi(s)), 0.5, -1.0, &p).unwrap();
        assert_eq!(step.step, 1.0);
        assert_eq!(step.evaluations, 1);
    }

    #[test]
    fn quartic_satisfies_both_conditions() {
        let phi = |s: f64| ((s - 2.0).powi(4), 4.0 * (s - 2.0).powi(3));
        let p = WolfeParams::default();
        let step = wolfe_line_search(|s| Ok(phi(s)), 16.0, -32.0, &p).unwrap();
        assert!(step.value < 16.0);
        check_wolfe(phi, &step, &p);
    }

    #[test]
    fn overshoot_is_zoomed() {
        // Steep narrow valley: s = 1 overshoots far past the minimum at 0.01.
        let phi = |s: f64| (50.0 * (s - 0.01).powi(2), 100.0 * (s - 0.01));
        let p = WolfeParams::default();
        let (f0, d0) = phi(0.0);
        let step = wolfe_line_search(|s| Ok(phi(s)), f0, d0, &p).unwrap();
        check_wolfe(phi, &step, &p);
    }

    #[test]
    fn expands_when_initial_step_too_short() {
        let phi = |s: f64| ((s - 100.0).powi(2), 2.0 * (s - 100.0));
        let p = WolfeParams::default();
        let (f0, d0) = phi(0.0);
        let step = wolfe_line_search(|s| Ok(phi(s)), f0, d0, &p).unwrap();
        assert!(step.step > 1.0);
        check_wolfe(phi, &step, &p);
    }

    #[test]
    fn infeasible_region_is_bisected() {
        let phi = |s: f64| -> Result<(f64, f64)> {
            if s > 0.3 {
                Err(Error::DomainViolation("outside".into()))
            } else {
                Ok(((s - 0.2).powi(2), 2.0 * (s - 0.2)))
            }
        };
        let p = WolfeParams::default();
        let step = wolfe_line_search(phi, 0.04, -0.4, &p).unwrap();
        assert!(step.step <= 0.3);
        check_wolfe(|s| phi(s).unwrap(), &step, &p);
    }

    #[test]
    fn flat_values_fall_back_to_slopes() {
        // Values rounded to a grid far coarser than the true decrease.
        let exact = |s: f64| (1e4 + 1e-12 * (s - 3.0).powi(2), 2e-12 * (s - 3.0));
        let rounded = |s: f64| {
            let (f, d) = exact(s);
            ((f * 1e6).round() / 1e6, d)
        };
        let p = WolfeParams::default();
        let (f0, d0) = rounded(0.0);
        let step = wolfe_line_search(|s| Ok(rounded(s)), f0, d0, &p).unwrap();
        assert!(step.slope.abs() <= p.c2 * d0.abs());
        assert!(exact(step.step).0 <= exact(0.0).0);
    }

    #[test]
    fn rejects_ascent_direction() {
        let r = wolfe_line_search(|s| Ok((s, 1.0)), 0.0, 1.0, &WolfeParams::default());
        assert!(matches!(r, Err(Error::LineSearchFailure(_))));
    }

    #[test]
    fn everywhere_infeasible_fails() {
        let r = wolfe_line_search(
            |_| Err(Error::DomainViolation("never".into())),
            0.0,
            -1.0,
            &WolfeParams::default(),
        );
        assert!(matches!(r, Err(Error::LineSearchFailure(_))));
    }
}
