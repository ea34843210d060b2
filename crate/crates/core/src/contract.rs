//! Incentive-compatibility kernel: the agent's best response to a premium,
//! its inverse, the feasible action interval, and the second-best benchmark.
//!
//! Along the incentive-compatible curve the agent's effort `a(ρ)` solves the
//! stationarity condition `ρ·exp(−ηρ(a + θ̂)) = a`. All root finding is plain
//! bisection with [`Scalar::root_tolerance`] and a hard cap of
//! [`MAX_BISECTION_STEPS`]; reaching the cap means a non-finite input.

use serde::{Deserialize, Serialize};

use crate::model::{agent_utility, Benchmark};
use crate::scalar::Scalar;

pub const MAX_BISECTION_STEPS: usize = 200;

/// Feasible effort interval `[lower, upper]` from one actor's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds<S> {
    pub lower: S,
    pub upper: S,
}

impl<S: Scalar> ActionBounds<S> {
    pub fn clamp(&self, effort: S) -> S {
        effort.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, effort: S) -> bool {
        effort >= self.lower && effort <= self.upper
    }
}

/// Smallest point of `[lo, hi]` where the monotone predicate turns true.
///
/// `pred(lo)` is assumed false and `pred(hi)` true; neither is evaluated.
fn bisect<S: Scalar>(mut lo: S, mut hi: S, mut pred: impl FnMut(S) -> bool) -> (S, S) {
    let tol = S::root_tolerance();
    let two = S::lit(2.0);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            return (lo, hi);
        }
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            // interval exhausted at this precision
            return (lo, hi);
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    panic!("bisection did not converge in {MAX_BISECTION_STEPS} steps on [{lo}, {hi}]");
}

/// Effort maximizing the agent's utility under `premium` given his belief.
pub fn best_response<S: Scalar>(premium: S, belief_theta: S, eta: S) -> S {
    debug_assert!(
        premium >= S::zero() && premium <= S::one(),
        "premium {premium} outside [0,1]"
    );
    if premium <= S::zero() {
        return S::zero();
    }
    let stationarity = |a: S| premium * (-eta * premium * (a + belief_theta)).exp() - a;
    let hi = premium * (-eta * premium * belief_theta).exp() + S::one();
    let (lo, hi) = bisect(S::zero(), hi, |a| stationarity(a) <= S::zero());
    // One Newton step inside the bracket makes a(ρ) smooth to rounding level.
    let mid = (lo + hi) / S::lit(2.0);
    let slope = -eta * premium * premium * (-eta * premium * (mid + belief_theta)).exp() - S::one();
    let polished = mid - stationarity(mid) / slope;
    if polished >= lo && polished <= hi {
        polished
    } else {
        mid
    }
}

/// Smallest premium whose best response equals `target_effort`.
///
/// `None` when the target lies beyond the best response to `premium = 1`.
/// A non-positive target is incited by the null contract `premium = 0`.
pub fn premium_for_effort<S: Scalar>(target_effort: S, belief_theta: S, eta: S) -> Option<S> {
    if target_effort <= S::zero() {
        return Some(S::zero());
    }
    if best_response(S::one(), belief_theta, eta) < target_effort {
        return None;
    }
    // ρ ↦ ρ·exp(−ηρ(a + θ̂)) − a increases up to ρ = 1/(η(a + θ̂)).
    let level = target_effort + belief_theta;
    let peak = if level > S::zero() {
        (S::one() / (eta * level)).min(S::one())
    } else {
        S::one()
    };
    let excess = |rho: S| rho * (-eta * rho * level).exp() - target_effort;
    if excess(peak) < S::zero() {
        // within root tolerance of the frontier
        return Some(peak);
    }
    let (_, hi) = bisect(S::zero(), peak, |rho| excess(rho) >= S::zero());
    Some(hi)
}

/// Agent's utility at premium `premium` when he best-responds under `belief_theta`.
pub fn incentive_compatible_utility<S: Scalar>(premium: S, belief_theta: S, eta: S) -> S {
    let effort = best_response(premium, belief_theta, eta);
    agent_utility(premium * (effort + belief_theta), effort, eta)
}

/// Feasible effort interval under a point belief about the exogenous factor.
///
/// The upper end is the best response to the full share. The lower end is the
/// smallest effort whose incentive-compatible premium still meets the
/// reservation utility. Along the incentive-compatible curve the agent's
/// utility falls while `a(ρ) + θ̂ < 0` and rises afterwards, so the
/// participating premiums form a single interval reaching up to 1 unless
/// participation already holds as `ρ -> 0`.
pub fn action_bounds<S: Scalar>(
    belief_theta: S,
    eta: S,
    reservation_utility: S,
) -> Option<ActionBounds<S>> {
    let upper = best_response(S::one(), belief_theta, eta);
    let utility_at = |rho: S| incentive_compatible_utility(rho, belief_theta, eta);

    let participates_near_zero = reservation_utility < S::zero()
        || (reservation_utility == S::zero() && belief_theta >= S::zero());
    if participates_near_zero {
        return Some(ActionBounds {
            lower: S::zero(),
            upper,
        });
    }
    if utility_at(S::one()) < reservation_utility {
        return None;
    }
    let (_, rho) = bisect(S::zero(), S::one(), |rho| {
        utility_at(rho) >= reservation_utility
    });
    let lower = best_response(rho, belief_theta, eta).min(upper);
    Some(ActionBounds { lower, upper })
}

/// Principal's expected utility when offering `premium` under `belief_theta`.
fn principal_value<S: Scalar>(premium: S, eta: S) -> S {
    (S::one() - premium) * best_response(premium, S::zero(), eta)
}

/// Second-best contract with the exogenous factor at its mean of zero.
///
/// Coarse scan of the premium on a `1e-3` grid followed by golden-section
/// refinement around the best grid point; participating premiums only.
pub fn solve_second_best<S: Scalar>(eta: S) -> Benchmark<S> {
    assert!(eta > S::zero(), "eta must be positive, got {eta}");
    const GRID: usize = 1000;
    let step = S::one() / S::lit(GRID as f64);
    let participates = |rho: S| incentive_compatible_utility(rho, S::zero(), eta) >= S::zero();

    let mut best = (S::zero(), S::neg_infinity());
    let mut best_index = 0;
    for i in 0..=GRID {
        let rho = S::lit(i as f64) * step;
        if !participates(rho) {
            continue;
        }
        let value = principal_value(rho, eta);
        if value > best.1 {
            best = (rho, value);
            best_index = i;
        }
    }

    let lo = S::lit(best_index.saturating_sub(1) as f64) * step;
    let hi = (S::lit((best_index + 1) as f64) * step).min(S::one());
    let refined = golden_section_max(lo, hi, |rho| principal_value(rho, eta));
    if participates(refined) && principal_value(refined, eta) >= best.1 {
        best = (refined, principal_value(refined, eta));
    }

    let premium_star = best.0;
    let effort_star = best_response(premium_star, S::zero(), eta);
    Benchmark {
        premium_star,
        effort_star,
        outcome_star: effort_star,
        utility_principal_star: (S::one() - premium_star) * effort_star,
        utility_agent_star: agent_utility(premium_star * effort_star, effort_star, eta),
    }
}

fn golden_section_max<S: Scalar>(mut lo: S, mut hi: S, f: impl Fn(S) -> S) -> S {
    let inv_phi = S::lit((5f64.sqrt() - 1.0) / 2.0);
    let tol = S::lit(1e-9).max(S::epsilon() * S::lit(8.0));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / S::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn best_response(rho: f64, theta: f64, eta: f64) -> f64 {
        super::best_response(rho, theta, eta)
    }

    fn premium_for_effort(a: f64, theta: f64, eta: f64) -> Option<f64> {
        super::premium_for_effort(a, theta, eta)
    }

    fn action_bounds(theta: f64, eta: f64, ubar: f64) -> Option<ActionBounds<f64>> {
        super::action_bounds(theta, eta, ubar)
    }

    fn solve_second_best(eta: f64) -> Benchmark<f64> {
        super::solve_second_best(eta)
    }

    /// Grid maximization of the agent's deterministic utility, step `1e-6`.
    fn brute_force_response(premium: f64, theta: f64, eta: f64, upper: f64) -> f64 {
        let n = (upper / 1e-6).round() as usize;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let a = i as f64 * 1e-6;
            let u = agent_utility(premium * (a + theta), a, eta);
            if u > best.1 {
                best = (a, u);
            }
        }
        best.0
    }

    #[test]
    fn best_response_examples() {
        assert_eq!(best_response(0.0, 0.3, 0.5), 0.0);
        assert_eq!(best_response(0.0, -7.0, 0.5), 0.0);
        // brute force on [0,1] at 1e-6: 0.447120 and 0.703467
        assert!((best_response(0.5, 0.0, 0.5) - 0.447_12).abs() < 2e-6);
        assert!((best_response(1.0, 0.0, 0.5) - 0.703_467).abs() < 2e-6);
    }

    #[test]
    fn best_response_matches_grid_oracle() {
        for eta in [0.25, 0.5, 1.0] {
            for theta in [-0.5, 0.0, 0.5] {
                for k in 1..=10 {
                    let rho = k as f64 / 10.0;
                    let fast = best_response(rho, theta, eta);
                    let slow = brute_force_response(rho, theta, eta, 1.5);
                    assert!(
                        (fast - slow).abs() < 1e-5,
                        "rho={rho} theta={theta} eta={eta}: {fast} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn best_response_positive_for_positive_premium() {
        for rho in [1e-6, 0.01, 0.3, 1.0] {
            for theta in [-2.0, 0.0, 2.0] {
                assert!(best_response(rho, theta, 0.5) > 0.0);
            }
        }
    }

    #[test]
    fn premium_for_effort_examples() {
        let rho = premium_for_effort(0.4472, 0.0, 0.5).unwrap();
        assert!((rho - 0.5).abs() < 1e-3, "{rho}");
        assert!((best_response(rho, 0.0, 0.5) - 0.4472).abs() < 1e-8);

        let frontier = best_response(1.0, 0.0, 0.5);
        let rho = premium_for_effort(frontier, 0.0, 0.5).unwrap();
        assert!((rho - 1.0).abs() < 1e-6, "{rho}");

        assert_eq!(premium_for_effort(0.9, 0.0, 0.5), None);
        // 0.7035 sits 3.3e-5 beyond the frontier 0.703467
        assert_eq!(premium_for_effort(0.7035, 0.0, 0.5), None);
    }

    #[test]
    fn premium_for_effort_round_trip() {
        for eta in [0.25, 0.5, 1.0] {
            for theta in [-0.3, 0.0, 0.2, 0.6] {
                let upper = best_response(1.0, theta, eta);
                for i in 1..100 {
                    let a = upper * i as f64 / 100.0;
                    let rho = premium_for_effort(a, theta, eta).unwrap();
                    assert!((0.0..=1.0).contains(&rho));
                    assert!((best_response(rho, theta, eta) - a).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn action_bounds_examples() {
        let b = action_bounds(0.0, 0.5, 0.0).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!((b.upper - 0.703_467).abs() < 2e-6);

        let b = action_bounds(10.0, 0.5, 0.0).unwrap();
        assert_eq!(b.lower, 0.0);

        assert_eq!(action_bounds(-50.0, 0.5, 0.0), None);
    }

    #[test]
    fn action_bounds_lower_is_participation_threshold() {
        // Brute force over a fine effort grid: smallest participating effort.
        for theta in [-0.05, -0.1, -0.2] {
            let b = action_bounds(theta, 0.5, 0.0).unwrap();
            assert!(b.lower > 0.0 && b.lower <= b.upper);
            let n = 20_000;
            let mut first = None;
            for i in 1..=n {
                let a = b.upper * i as f64 / n as f64;
                let rho = premium_for_effort(a, theta, 0.5).unwrap();
                if agent_utility(rho * (a + theta), a, 0.5) >= 0.0 {
                    first = Some(a);
                    break;
                }
            }
            let first = first.unwrap();
            assert!(
                (first - b.lower).abs() <= b.upper / n as f64 + 1e-8,
                "{theta}: {first} vs {}",
                b.lower
            );
        }
    }

    #[test]
    fn action_bounds_infeasible_matches_grid_search() {
        // No (rho, a) pair on a grid yields non-negative utility at theta = -50.
        for i in 0..=100 {
            let rho = i as f64 / 100.0;
            for j in 1..=100 {
                let a = j as f64 / 50.0;
                assert!(agent_utility(rho * (a - 50.0), a, 0.5) < 0.0);
            }
        }
        assert!(action_bounds(-50.0, 0.5, 0.0).is_none());
    }

    #[test]
    fn second_best_at_half_eta() {
        // Grid oracle (rho step 1e-4, bisection for a(rho)): rho = 0.4532,
        // a = 0.412736, U_P = 0.22568392. Bounded scalar minimization
        // (scipy, xatol 1e-12): rho* = 0.45323116, a* = 0.41275929,
        // U_P* = 0.22568392, U_A* = 0.09340749.
        let b = solve_second_best(0.5);
        assert!((b.premium_star - 0.4532).abs() < 1e-4);
        assert!((b.effort_star - 0.412_736).abs() < 1e-4);
        assert!((b.utility_principal_star - 0.225_683_92).abs() < 1e-6);
        assert!((b.premium_star - 0.453_231_16).abs() < 1e-6);
        assert!((b.effort_star - 0.412_759_29).abs() < 1e-6);
        assert!((b.utility_agent_star - 0.093_407_49).abs() < 1e-7);
        assert_eq!(b.outcome_star, b.effort_star);
        assert_eq!(
            b.utility_principal_star,
            (1.0 - b.premium_star) * b.effort_star
        );
    }

    #[test]
    fn second_best_risk_neutral_limit() {
        let b = solve_second_best(1e-8);
        assert!((b.premium_star - 0.5).abs() < 1e-6);
        assert!((b.effort_star - 0.5).abs() < 1e-6);
        assert!((b.utility_principal_star - 0.25).abs() < 1e-8);
    }

    #[test]
    fn second_best_shrinks_with_risk_aversion() {
        let half = solve_second_best(0.5);
        let one = solve_second_best(1.0);
        assert!(one.premium_star < half.premium_star);
        assert!(one.effort_star < half.effort_star);
    }

    #[test]
    fn second_best_beats_coarse_grid() {
        for eta in [0.25, 0.5, 1.0, 2.0] {
            let b = solve_second_best(eta);
            for i in 0..=1000 {
                let rho = i as f64 / 1000.0;
                assert!(principal_value(rho, eta) <= b.utility_principal_star + 1e-15);
            }
        }
    }

    #[test]
    fn single_precision_kernel() {
        let a: f32 = super::best_response(0.5, 0.0, 0.5);
        assert!((a - 0.447_12).abs() < 1e-5);
        let rho = super::premium_for_effort(a, 0.0, 0.5).unwrap();
        assert!((rho - 0.5).abs() < 1e-4);
        let b = super::solve_second_best(0.5f32);
        assert!((b.premium_star - 0.4532).abs() < 1e-3);
    }
}
