use rand::Rng;

use super::index::{kl_value, ulcb_value};
use super::{argmax, index_rule, AgentState, PolicyKind, PolicySpec, QTable, Rule};
use crate::error::{Error, Result};
use crate::model::binary_index;
use crate::scalar::Scalar;

/// Picks the arm `spec` plays in `state`.
///
/// Every kind except the genie first plays each arm once in index order.
/// Index kinds then take the arm with the largest state-dependent index,
/// lowest index on ties; Q-learning kinds read `qtable`, and Q-EPS draws from
/// `rng`. Q-UCB needs a resolved `H` (see [`PolicySpec::resolve`]).
pub fn select_action<S: Scalar, R: Rng + ?Sized>(
    spec: &PolicySpec<S>,
    state: S,
    agent: &AgentState,
    qtable: Option<&QTable<S>>,
    rng: &mut R,
) -> Result<usize> {
    spec.validate()?;
    if !(state >= S::zero() && state <= S::one()) {
        return Err(Error::InvalidState(state.as_f64()));
    }
    if spec.kind == PolicyKind::Genie {
        return Ok(0);
    }
    if let Some(arm) = agent.first_unpulled() {
        return Ok(arm);
    }
    match spec.kind {
        PolicyKind::QEps => {
            let table = qtable.ok_or(Error::MissingQTable("Q-EPS"))?;
            Ok(table.epsilon_greedy(binary_index(state)?, spec.epsilon, rng))
        }
        PolicyKind::QUcb => {
            let table = qtable.ok_or(Error::MissingQTable("Q-UCB"))?;
            let horizon = spec
                .horizon
                .ok_or_else(|| Error::Policy("Q-UCB needs H; resolve the spec first".into()))?;
            Ok(table.ucb_choice(binary_index(state)?, spec.bonus_c, horizon, agent.t()))
        }
        _ => {
            let ln_t = S::from_count(agent.t()).ln();
            let means = (0..agent.num_arms()).map(|a| (agent.mean::<S>(a).unwrap_or_default(), agent.count(a)));
            Ok(match index_rule(spec, state, ln_t)? {
                Rule::Linear { coeff, radicand } => argmax(means.map(|(m, n)| ulcb_value(m, n, coeff, radicand))),
                Rule::Kl { side, threshold } => argmax(means.map(|(m, n)| kl_value(m, n, threshold, side))),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Orientation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn round_robin_first() {
        let spec = PolicySpec::<f64>::kl_ulcb();
        let mut agent = AgentState::new(3);
        for expect in 0..3 {
            let state = if expect == 1 { 0.0 } else { 1.0 };
            assert_eq!(select_action(&spec, state, &agent, None, &mut rng()).unwrap(), expect);
            agent.update(expect, 1).unwrap();
        }
        assert!(agent.counts().iter().all(|&n| n == 1));
    }

    #[test]
    fn ties_go_to_lowest_arm() {
        let mut agent = AgentState::new(2);
        for arm in [0, 1, 0, 1] {
            agent.update(arm, 1).unwrap();
        }
        for spec in [PolicySpec::<f64>::ulcb(), PolicySpec::kl_ulcb(), PolicySpec::ucb()] {
            assert_eq!(select_action(&spec, 1.0, &agent, None, &mut rng()).unwrap(), 0);
        }
    }

    #[test]
    fn state_changes_the_choice() {
        // arm 0: many pulls, mean 0.6; arm 1: few pulls, mean 0.5
        let mut agent = AgentState::new(2);
        for i in 0..100 {
            agent.update(0, u8::from(i % 5 < 3)).unwrap();
        }
        for i in 0..4 {
            agent.update(1, u8::from(i % 2 == 0)).unwrap();
        }
        for spec in [PolicySpec::<f64>::ulcb(), PolicySpec::kl_ulcb()] {
            assert_eq!(
                select_action(&spec, 1.0, &agent, None, &mut rng()).unwrap(),
                1,
                "{}",
                spec.kind
            );
            assert_eq!(
                select_action(&spec, 0.0, &agent, None, &mut rng()).unwrap(),
                0,
                "{}",
                spec.kind
            );
            let opp = spec.clone().oriented(Orientation::Opposite);
            assert_eq!(select_action(&opp, 1.0, &agent, None, &mut rng()).unwrap(), 0);
            assert_eq!(select_action(&opp, 0.0, &agent, None, &mut rng()).unwrap(), 1);
        }
        // the midpoint of the continuous rule is greedy
        assert_eq!(
            select_action(&PolicySpec::cont_ulcb(), 0.5, &agent, None, &mut rng()).unwrap(),
            0
        );
    }

    #[test]
    fn q_kinds_need_tables() {
        let mut agent = AgentState::new(2);
        agent.update(0, 1).unwrap();
        agent.update(1, 1).unwrap();
        let spec = PolicySpec::<f64>::q_eps();
        assert_eq!(
            select_action(&spec, 1.0, &agent, None, &mut rng()),
            Err(Error::MissingQTable("Q-EPS"))
        );
        let mut table = QTable::new(2, 0.0);
        let q_spec = PolicySpec { epsilon: 0.0, ..spec };
        qlearn_fill(&mut table);
        assert_eq!(
            select_action(&q_spec, 1.0, &agent, Some(&table), &mut rng()).unwrap(),
            1
        );
        assert_eq!(
            select_action(&PolicySpec::genie(), 0.3, &AgentState::new(2), None, &mut rng()).unwrap(),
            0
        );
        assert!(select_action(&PolicySpec::<f64>::ucb(), 1.5, &agent, None, &mut rng()).is_err());
    }

    fn qlearn_fill(table: &mut QTable<f64>) {
        let spec = PolicySpec::<f64>::q_eps();
        crate::policy::qlearn_step(table, 1.0, 1, 1, crate::model::NextState::Terminal, &spec).unwrap();
    }
}
