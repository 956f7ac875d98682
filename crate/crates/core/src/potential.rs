//! Split double-well potential `f = f1 + f2` on `(0, 1)`.
//!
//! `f1` is convex with a derivative that blows up at both endpoints; `f2` is
//! smooth with bounded curvature. The built-in family is
//!
//! ```text
//! f1(r) = theta * (r ln r + (1 - r) ln(1 - r))
//! f2(r) = theta_c * r (1 - r)
//! ```
//!
//! which is a double well iff `theta_c > 2 theta`. Other potentials can be
//! supplied as plain function pointers through [`PotentialParts`].
//!
//! The Yosida approximation of the monotone graph `f1'` is provided through
//! its resolvent `J_lambda = (I + lambda f1')^{-1}`.

use core::fmt;

use crate::math;

/// Evaluations closer than this to 0 or 1 are rejected.
pub const ENDPOINT_GUARD: f64 = 1e-14;

/// Absolute tolerance of the scalar resolvent solve.
pub const RESOLVENT_TOL: f64 = 1e-12;

const RESOLVENT_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialError {
    /// `r` is not in the open interval `(0, 1)`.
    Domain { r: f64 },
    /// `r` is inside `(0, 1)` but within [`ENDPOINT_GUARD`] of an endpoint.
    Range { r: f64 },
    /// The resolvent bracket did not shrink; the supplied `f1'` is not monotone.
    IterationLimit { r: f64, lambda: f64 },
    /// A constructor argument is out of range.
    InvalidParameter(&'static str),
    /// A structural assumption failed on sampling.
    Assumption(&'static str),
}

impl fmt::Display for PotentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain { r } => write!(f, "potential evaluated outside (0,1) at r = {r}"),
            Self::Range { r } => write!(
                f,
                "potential evaluated within {ENDPOINT_GUARD:e} of an endpoint at r = {r}"
            ),
            Self::IterationLimit { r, lambda } => write!(
                f,
                "resolvent solve did not converge for r = {r}, lambda = {lambda} (is f1' monotone?)"
            ),
            Self::InvalidParameter(what) => write!(f, "invalid potential parameter: {what}"),
            Self::Assumption(what) => write!(f, "potential violates assumption: {what}"),
        }
    }
}

impl core::error::Error for PotentialError {}

/// User-supplied pieces of a split potential. All functions are only ever
/// called on `(0, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct PotentialParts {
    pub f1: fn(f64) -> f64,
    pub f1_prime: fn(f64) -> f64,
    pub f1_second: fn(f64) -> f64,
    pub f2: fn(f64) -> f64,
    pub f2_prime: fn(f64) -> f64,
    pub f2_second: fn(f64) -> f64,
}

#[derive(Clone, Copy, Debug)]
enum Family {
    Logarithmic,
    Custom(PotentialParts),
}

/// The potential `f = f1 + f2`.
#[derive(Clone, Copy, Debug)]
pub struct PotentialSpec {
    theta: f64,
    theta_c: f64,
    family: Family,
}

/// All derivatives of the potential at one point of `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialEval {
    pub f: f64,
    pub f_prime: f64,
    pub f1_prime: f64,
    pub f1_second: f64,
    pub f2_prime: f64,
    pub f2_second: f64,
}

impl PotentialEval {
    pub fn f_second(&self) -> f64 {
        self.f1_second + self.f2_second
    }
}

impl PotentialSpec {
    /// The logarithmic family with singular strength `theta > 0` and concave
    /// strength `theta_c >= 0`.
    pub fn logarithmic(theta: f64, theta_c: f64) -> Result<Self, PotentialError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(PotentialError::InvalidParameter("theta must be positive and finite"));
        }
        if !(theta_c.is_finite() && theta_c >= 0.0) {
            return Err(PotentialError::InvalidParameter("theta_c must be nonnegative and finite"));
        }
        Ok(Self { theta, theta_c, family: Family::Logarithmic })
    }

    /// A potential built from user callables. The structural assumptions are
    /// checked by sampling before the potential is accepted.
    pub fn custom(parts: PotentialParts) -> Result<Self, PotentialError> {
        let spec = Self { theta: f64::NAN, theta_c: f64::NAN, family: Family::Custom(parts) };
        spec.check_assumptions(4096)?;
        Ok(spec)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }

    pub fn is_logarithmic(&self) -> bool {
        matches!(self.family, Family::Logarithmic)
    }

    // Raw pieces. No domain checks: callers guarantee 0 < r < 1.

    pub(crate) fn raw_f1(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => {
                let a = if r > 0.0 { r * math::ln(r) } else { 0.0 };
                let b = if r < 1.0 { (1.0 - r) * math::ln_1p(-r) } else { 0.0 };
                self.theta * (a + b)
            }
            Family::Custom(p) => (p.f1)(r),
        }
    }

    pub(crate) fn raw_f1_prime(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => self.theta * (math::ln(r) - math::ln_1p(-r)),
            Family::Custom(p) => (p.f1_prime)(r),
        }
    }

    pub(crate) fn raw_f1_second(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => self.theta / (r * (1.0 - r)),
            Family::Custom(p) => (p.f1_second)(r),
        }
    }

    pub(crate) fn raw_f2(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => self.theta_c * r * (1.0 - r),
            Family::Custom(p) => (p.f2)(r),
        }
    }

    pub(crate) fn raw_f2_prime(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => self.theta_c * (1.0 - 2.0 * r),
            Family::Custom(p) => (p.f2_prime)(r),
        }
    }

    pub(crate) fn raw_f2_second(&self, r: f64) -> f64 {
        match self.family {
            Family::Logarithmic => -2.0 * self.theta_c,
            Family::Custom(p) => (p.f2_second)(r),
        }
    }

    /// `f(r)`, guarded.
    pub fn f(&self, r: f64) -> Result<f64, PotentialError> {
        check_point(r)?;
        Ok(self.raw_f1(r) + self.raw_f2(r))
    }

    /// `f1'(r)`, guarded.
    pub fn f1_prime(&self, r: f64) -> Result<f64, PotentialError> {
        check_point(r)?;
        Ok(self.raw_f1_prime(r))
    }

    /// `f2'(r)`, guarded.
    pub fn f2_prime(&self, r: f64) -> Result<f64, PotentialError> {
        check_point(r)?;
        Ok(self.raw_f2_prime(r))
    }

    /// `(f'(r), f''(r))` with `f1'` replaced by its Yosida approximation when
    /// `lambda > 0`. `lambda == 0` is the exact singular potential.
    pub fn derivatives(&self, r: f64, lambda: f64) -> Result<(f64, f64), PotentialError> {
        check_point(r)?;
        if lambda > 0.0 {
            let j = self.resolvent(r, lambda)?;
            let d1 = (r - j) / lambda;
            let c = self.raw_f1_second(j);
            let d2 = c / (1.0 + lambda * c);
            Ok((d1 + self.raw_f2_prime(r), d2 + self.raw_f2_second(r)))
        } else {
            Ok((
                self.raw_f1_prime(r) + self.raw_f2_prime(r),
                self.raw_f1_second(r) + self.raw_f2_second(r),
            ))
        }
    }

    /// Samples `f1'' >= 0`, `|f2''|` bounded, and the endpoint blow-up of
    /// `f1'` on a uniform grid of `samples` interior points.
    pub fn check_assumptions(&self, samples: usize) -> Result<AssumptionReport, PotentialError> {
        let n = samples.max(8);
        let mut min_f1_second = f64::INFINITY;
        let mut max_abs_f2_second: f64 = 0.0;
        for k in 1..n {
            let r = k as f64 / n as f64;
            let c = self.raw_f1_second(r);
            let b = self.raw_f2_second(r);
            if !c.is_finite() || !b.is_finite() {
                return Err(PotentialError::Assumption("non-finite second derivative"));
            }
            min_f1_second = min_f1_second.min(c);
            max_abs_f2_second = max_abs_f2_second.max(math::abs(b));
        }
        if min_f1_second < 0.0 {
            return Err(PotentialError::Assumption("f1 is not convex"));
        }
        // The blow-up at the endpoints is checked by looking at how far f1'
        // gets at the guard band: it has to clearly exceed the range it takes
        // in the bulk.
        let bulk = math::abs(self.raw_f1_prime(0.25)).max(math::abs(self.raw_f1_prime(0.75)));
        let lo = self.raw_f1_prime(ENDPOINT_GUARD);
        let hi = self.raw_f1_prime(1.0 - ENDPOINT_GUARD);
        let threshold = 10.0 * (1.0 + bulk);
        if !(lo < -threshold) {
            return Err(PotentialError::Assumption("f1' does not diverge to -inf at 0"));
        }
        if !(hi > threshold) {
            return Err(PotentialError::Assumption("f1' does not diverge to +inf at 1"));
        }
        Ok(AssumptionReport {
            min_f1_second,
            max_abs_f2_second,
            f1_prime_near_zero: lo,
            f1_prime_near_one: hi,
        })
    }

    /// Resolvent of `f1'`: the unique `y` in `(0, 1)` with `y + lambda f1'(y) = r`.
    fn resolvent(&self, r: f64, lambda: f64) -> Result<f64, PotentialError> {
        let lo = f64::EPSILON;
        let hi = 1.0 - f64::EPSILON;
        let h = |y: f64| y + lambda * self.raw_f1_prime(y) - r;
        // The true root lies within machine epsilon of an endpoint here, which
        // is inside the tolerance.
        if h(lo) >= 0.0 {
            return Ok(lo);
        }
        if h(hi) <= 0.0 {
            return Ok(hi);
        }
        let (mut a, mut b) = (lo, hi);
        let mut y = r.clamp(0.25, 0.75);
        for _ in 0..RESOLVENT_MAX_ITER {
            let hy = h(y);
            if hy == 0.0 {
                return Ok(y);
            }
            if hy > 0.0 {
                b = y;
            } else {
                a = y;
            }
            let slope = 1.0 + lambda * self.raw_f1_second(y);
            let mut next = y - hy / slope;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if math::abs(next - y) < 0.1 * RESOLVENT_TOL || b - a < RESOLVENT_TOL {
                return Ok(next);
            }
            y = next;
        }
        Err(PotentialError::IterationLimit { r, lambda })
    }
}

/// Result of [`PotentialSpec::check_assumptions`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssumptionReport {
    pub min_f1_second: f64,
    pub max_abs_f2_second: f64,
    pub f1_prime_near_zero: f64,
    pub f1_prime_near_one: f64,
}

fn check_point(r: f64) -> Result<(), PotentialError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(PotentialError::Domain { r });
    }
    if !(ENDPOINT_GUARD..=1.0 - ENDPOINT_GUARD).contains(&r) {
        return Err(PotentialError::Range { r });
    }
    Ok(())
}

pub fn eval_potential(spec: &PotentialSpec, r: f64) -> Result<PotentialEval, PotentialError> {
    check_point(r)?;
    let f1_prime = spec.raw_f1_prime(r);
    let f2_prime = spec.raw_f2_prime(r);
    Ok(PotentialEval {
        f: spec.raw_f1(r) + spec.raw_f2(r),
        f_prime: f1_prime + f2_prime,
        f1_prime,
        f1_second: spec.raw_f1_second(r),
        f2_prime,
        f2_second: spec.raw_f2_second(r),
    })
}

/// `J_lambda(r)`; defined for every real `r`.
pub fn yosida_resolvent(spec: &PotentialSpec, r: f64, lambda: f64) -> Result<f64, PotentialError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PotentialError::InvalidParameter("lambda must be positive"));
    }
    if !r.is_finite() {
        return Err(PotentialError::Domain { r });
    }
    spec.resolvent(r, lambda)
}

/// `(f1')_lambda(r) = (r - J_lambda(r)) / lambda`.
pub fn yosida_f1_prime(spec: &PotentialSpec, r: f64, lambda: f64) -> Result<f64, PotentialError> {
    let j = yosida_resolvent(spec, r, lambda)?;
    Ok((r - j) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(theta: f64, theta_c: f64) -> PotentialSpec {
        PotentialSpec::logarithmic(theta, theta_c).unwrap()
    }

    // Plain bisection, independent of the safeguarded Newton.
    fn bisect(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn midpoint_is_symmetric() {
        let e = eval_potential(&log(1.0, 3.0), 0.5).unwrap();
        assert_eq!(e.f1_prime, 0.0);
        assert_eq!(e.f2_prime, 0.0);
        assert_eq!(e.f_prime, 0.0);
        assert_eq!(e.f_second(), -2.0);
        assert_eq!(e.f1_second, 4.0);
    }

    #[test]
    fn logit_inverse() {
        let e1 = core::f64::consts::E;
        let r = e1 / (1.0 + e1);
        let e = eval_potential(&log(1.0, 0.0), r).unwrap();
        assert!((e.f1_prime - 1.0).abs() < 1e-14);
        assert_eq!(e.f_prime, e.f1_prime + e.f2_prime);
    }

    #[test]
    fn endpoints_rejected() {
        let p = log(1.0, 3.0);
        assert!(matches!(eval_potential(&p, 0.0), Err(PotentialError::Domain { .. })));
        assert!(matches!(eval_potential(&p, 1.2), Err(PotentialError::Domain { .. })));
        assert!(matches!(eval_potential(&p, f64::NAN), Err(PotentialError::Domain { .. })));
        assert!(matches!(eval_potential(&p, 1e-15), Err(PotentialError::Range { .. })));
        assert!(matches!(eval_potential(&p, 1.0 - 1e-15), Err(PotentialError::Range { .. })));
        assert!(eval_potential(&p, 1e-13).is_ok());
    }

    #[test]
    fn bad_parameters() {
        assert!(PotentialSpec::logarithmic(0.0, 1.0).is_err());
        assert!(PotentialSpec::logarithmic(1.0, -1.0).is_err());
        assert!(yosida_resolvent(&log(1.0, 0.0), 0.3, 0.0).is_err());
    }

    #[test]
    fn resolvent_fixed_point_at_midpoint() {
        let p = log(1.0, 3.0);
        for lambda in [1e-6, 0.1, 1.0, 10.0] {
            assert!((yosida_resolvent(&p, 0.5, lambda).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!(yosida_f1_prime(&p, 0.5, 0.1).unwrap().abs() < 1e-10);
    }

    #[test]
    fn resolvent_matches_bisection() {
        let p = log(1.0, 0.0);
        let oracle = bisect(1e-300, 1.0 - 1e-16, |y| y + (y / (1.0 - y)).ln() - 2.0);
        let y = yosida_resolvent(&p, 2.0, 1.0).unwrap();
        assert!((y - oracle).abs() < 1e-12, "{y} vs {oracle}");
        assert!((y - 0.77325).abs() < 1e-4, "{y}");
    }

    #[test]
    fn resolvent_far_outside() {
        let p = log(1.0, 0.0);
        let y = yosida_resolvent(&p, 1e6, 1e-3).unwrap();
        assert!(y < 1.0 && y > 0.5);
        let y = yosida_resolvent(&p, -1e6, 1e-3).unwrap();
        assert!(y > 0.0 && y < 0.5);
    }

    #[test]
    fn resolvent_tends_to_identity() {
        let p = log(1.0, 0.0);
        let mut prev = f64::INFINITY;
        for lambda in [1e-2, 1e-4, 1e-6, 1e-8] {
            let err = (yosida_resolvent(&p, 0.3, lambda).unwrap() - 0.3).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn yosida_bounded_by_exact() {
        let p = log(1.0, 0.0);
        let v = yosida_f1_prime(&p, 0.9, 0.01).unwrap();
        let exact = 9f64.ln();
        assert!(v <= exact && v > 0.0);
        let j = bisect(0.5, 0.9, |y| y + 0.01 * (y / (1.0 - y)).ln() - 0.9);
        assert!((v - (0.9 - j) / 0.01).abs() < 1e-8);
    }

    #[test]
    fn yosida_converges_as_lambda_shrinks() {
        let p = log(1.0, 3.0);
        for r in [0.05, 0.3, 0.77, 0.99] {
            let exact = p.f1_prime(r).unwrap();
            let errs: [f64; 3] =
                [1e-2, 1e-4, 1e-6].map(|l| (yosida_f1_prime(&p, r, l).unwrap() - exact).abs());
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{r}: {errs:?}");
        }
    }

    #[test]
    fn derivatives_regularized_consistent() {
        let p = log(1.0, 3.0);
        let (d1, d2) = p.derivatives(0.3, 0.0).unwrap();
        let (y1, y2) = p.derivatives(0.3, 1e-9).unwrap();
        assert!((d1 - y1).abs() < 1e-6);
        assert!((d2 - y2).abs() < 1e-6);
        // derivative of the Yosida approximation by central differences
        let lam = 0.05;
        let h = 1e-6;
        let fd = (yosida_f1_prime(&p, 0.4 + h, lam).unwrap() - yosida_f1_prime(&p, 0.4 - h, lam).unwrap())
            / (2.0 * h);
        let (_, c) = p.derivatives(0.4, lam).unwrap();
        assert!((c + 6.0 - fd).abs() < 1e-5, "{} vs {fd}", c + 6.0);
    }

    #[test]
    fn default_family_assumptions() {
        let p = log(1.0, 3.0);
        let rep = p.check_assumptions(10_000).unwrap();
        assert!(rep.min_f1_second >= 0.0);
        assert_eq!(rep.max_abs_f2_second, 6.0);
        for k in 1..1000 {
            let r = k as f64 / 1000.0;
            let e = eval_potential(&p, r).unwrap();
            assert!(e.f1_second >= 0.0);
            assert_eq!(e.f2_second.abs(), 6.0);
        }
    }

    #[test]
    fn custom_potential_checked() {
        fn zero(_: f64) -> f64 {
            0.0
        }
        fn quartic(r: f64) -> f64 {
            (r * r - 1.0) * (r * r - 1.0)
        }
        let bad = PotentialParts {
            f1: quartic,
            f1_prime: zero,
            f1_second: zero,
            f2: zero,
            f2_prime: zero,
            f2_second: zero,
        };
        assert!(matches!(PotentialSpec::custom(bad), Err(PotentialError::Assumption(_))));

        fn f1(r: f64) -> f64 {
            2.0 * (r * r.ln() + (1.0 - r) * (1.0 - r).ln())
        }
        fn f1p(r: f64) -> f64 {
            2.0 * (r / (1.0 - r)).ln()
        }
        fn f1s(r: f64) -> f64 {
            2.0 / (r * (1.0 - r))
        }
        let good = PotentialParts {
            f1,
            f1_prime: f1p,
            f1_second: f1s,
            f2: zero,
            f2_prime: zero,
            f2_second: zero,
        };
        let p = PotentialSpec::custom(good).unwrap();
        let q = log(2.0, 0.0);
        let a = eval_potential(&p, 0.2).unwrap();
        let b = eval_potential(&q, 0.2).unwrap();
        assert!((a.f_prime - b.f_prime).abs() < 1e-12);
        assert!((yosida_f1_prime(&p, 0.9, 0.1).unwrap() - yosida_f1_prime(&q, 0.9, 0.1).unwrap()).abs() < 1e-10);
    }
}
