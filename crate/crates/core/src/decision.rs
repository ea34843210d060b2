//! Per-period decisions: the principal's local candidate search over incited
//! effort and the agent's accept/effort choice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{action_bounds, best_response, premium_for_effort};
use crate::model::{agent_utility, Contract};
use crate::scalar::Scalar;

/// Index of the incumbent (last period's incited effort) in the candidate set.
pub const INCUMBENT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal<S> {
    pub contract: Contract<S>,
    /// Two random discoveries followed by the incumbent.
    pub candidates: [S; 3],
    /// Principal's expected outcome at the chosen candidate.
    pub predicted_outcome: S,
    /// Principal's expected utility at the chosen candidate.
    pub predicted_utility: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Response<S> {
    pub accepted: bool,
    pub effort: S,
    pub predicted_utility: S,
}

/// A candidate effort evaluated under the principal's belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<S> {
    pub effort: S,
    pub premium: S,
    pub predicted_outcome: S,
    pub predicted_utility: S,
}

/// Evaluates one candidate; `None` if it cannot be incited or breaks participation.
pub fn evaluate_candidate<S: Scalar>(
    effort: S,
    belief_theta: S,
    eta: S,
    reservation_utility: S,
) -> Option<Evaluation<S>> {
    let premium = premium_for_effort(effort, belief_theta, eta)?;
    let predicted_outcome = effort + belief_theta;
    let agent = agent_utility(premium * predicted_outcome, effort, eta);
    if agent < reservation_utility {
        return None;
    }
    Some(Evaluation {
        effort,
        premium,
        predicted_outcome,
        predicted_utility: (S::one() - premium) * predicted_outcome,
    })
}

/// Principal's choice among two discovered efforts and the (already clamped) incumbent.
///
/// Ties go to the incumbent, then to the smaller effort.
pub fn propose_from_candidates<S: Scalar>(
    discovered: [S; 2],
    incumbent: S,
    belief_theta: S,
    eta: S,
    reservation_utility: S,
) -> Option<Proposal<S>> {
    let candidates = [discovered[0], discovered[1], incumbent];
    let mut order = [INCUMBENT, 0, 1];
    if candidates[1] < candidates[0] {
        order.swap(1, 2);
    }

    let mut best: Option<Evaluation<S>> = None;
    for idx in order {
        let Some(eval) =
            evaluate_candidate(candidates[idx], belief_theta, eta, reservation_utility)
        else {
            continue;
        };
        if best.is_none_or(|b| eval.predicted_utility > b.predicted_utility) {
            best = Some(eval);
        }
    }

    best.map(|e| Proposal {
        contract: Contract {
            premium: e.premium,
            incited_effort: e.effort,
        },
        candidates,
        predicted_outcome: e.predicted_outcome,
        predicted_utility: e.predicted_utility,
    })
}

/// Principal's contract for this period.
///
/// Draws two efforts uniformly from her feasible interval, adds last period's
/// incited effort clamped into that interval, and keeps the candidate with
/// the highest expected utility. `None` means no contract can be offered.
pub fn principal_propose<S: Scalar, R: Rng + ?Sized>(
    belief_theta: S,
    previous_incited: S,
    eta: S,
    reservation_utility: S,
    rng: &mut R,
) -> Option<Proposal<S>> {
    let bounds = action_bounds(belief_theta, eta, reservation_utility)?;
    let width = bounds.upper - bounds.lower;
    let mut draw = || bounds.lower + width * S::lit(rng.gen::<f64>());
    let discovered = [draw(), draw()];
    propose_from_candidates(
        discovered,
        bounds.clamp(previous_incited),
        belief_theta,
        eta,
        reservation_utility,
    )
}

/// Agent's participation decision and effort for an offered contract.
pub fn agent_respond<S: Scalar>(
    contract: &Contract<S>,
    belief_theta: S,
    eta: S,
    reservation_utility: S,
) -> Response<S> {
    let effort = best_response(contract.premium, belief_theta, eta);
    let predicted_utility = agent_utility(contract.premium * (effort + belief_theta), effort, eta);
    let accepted = predicted_utility >= reservation_utility;
    Response {
        accepted,
        effort: if accepted { effort } else { S::zero() },
        predicted_utility,
    }
}
