//! Binary preference relations over pairs of utility vectors, deciding
//! whether a deviation's target structure is preferred.

use crate::error::{Error, Result};
use crate::partition::Coalition;

/// Strictness tolerance for utility comparisons (bits/s/Hz). Floating-point
/// rate recomputation must not flip decisions: x beats y only when
/// x - y > EPSILON, and x is weakly no worse than y when x - y >= -EPSILON.
pub const STRICT_EPSILON: f64 = 1e-9;

/// Per-player utilities for one coalition structure.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector {
    values: Vec<f64>,
}

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(player) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteUtility { player });
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("utility vector"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, player: usize) -> Result<f64> {
        self.values.get(player).copied().ok_or(Error::UnknownPlayer {
            player,
            n: self.values.len(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn strictly_better(new: f64, old: f64) -> bool {
    new - old > STRICT_EPSILON
}

fn weakly_no_worse(new: f64, old: f64) -> bool {
    new - old >= -STRICT_EPSILON
}

fn check_same_players(a: &UtilityVector, b: &UtilityVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Pareto order over the deviators: every deviator weakly improves and at
/// least one strictly improves.
pub fn pareto_preferred(
    u_new: &UtilityVector,
    u_old: &UtilityVector,
    deviators: &Coalition,
) -> Result<bool> {
    check_same_players(u_new, u_old)?;
    let mut any_strict = false;
    for &i in deviators.members() {
        let new = u_new.get(i)?;
        let old = u_old.get(i)?;
        if !weakly_no_worse(new, old) {
            return Ok(false);
        }
        any_strict |= strictly_better(new, old);
    }
    Ok(any_strict)
}

/// Preference of an individual move: the deviating player strictly improves
/// and every member of the coalition it joins weakly improves. `destination`
/// may be empty (`None`), in which case only the strict clause applies.
pub fn individual_preferred(
    u_new: &UtilityVector,
    u_old: &UtilityVector,
    player: usize,
    destination: Option<&Coalition>,
) -> Result<bool> {
    check_same_players(u_new, u_old)?;
    if destination.is_some_and(|s| s.contains(player)) {
        return Err(Error::DeviatorInDestination { player });
    }
    if !strictly_better(u_new.get(player)?, u_old.get(player)?) {
        return Ok(false);
    }
    if let Some(dest) = destination {
        for &j in dest.members() {
            if !weakly_no_worse(u_new.get(j)?, u_old.get(j)?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uv(values: &[f64]) -> UtilityVector {
        UtilityVector::new(values.to_vec()).unwrap()
    }

    fn coalition(members: &[usize]) -> Coalition {
        Coalition::new(members.iter().copied()).unwrap()
    }

    #[test]
    fn pareto_examples() {
        let t = coalition(&[0, 1]);
        assert!(pareto_preferred(&uv(&[1.0, 3.0]), &uv(&[1.0, 2.0]), &t).unwrap());
        assert!(!pareto_preferred(&uv(&[1.0, 2.0]), &uv(&[1.0, 2.0]), &t).unwrap());
        assert!(!pareto_preferred(&uv(&[0.5, 4.0]), &uv(&[1.0, 2.0]), &t).unwrap());
    }

    #[test]
    fn pareto_length_mismatch_is_an_error() {
        let t = coalition(&[0]);
        assert!(matches!(
            pareto_preferred(&uv(&[1.0]), &uv(&[1.0, 2.0]), &t),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn pareto_tolerance_suppresses_noise() {
        let t = coalition(&[0]);
        // an improvement below the strictness tolerance is not strict
        assert!(!pareto_preferred(&uv(&[1.0 + 1e-12]), &uv(&[1.0]), &t).unwrap());
        // a loss within the tolerance still counts as weakly no worse
        let both = coalition(&[0, 1]);
        assert!(pareto_preferred(&uv(&[1.0 - 1e-12, 3.0]), &uv(&[1.0, 2.0]), &both).unwrap());
    }

    #[test]
    fn individual_examples() {
        let s = coalition(&[1]);
        assert!(individual_preferred(&uv(&[2.0, 2.0]), &uv(&[1.0, 2.0]), 0, Some(&s)).unwrap());
        assert!(!individual_preferred(&uv(&[1.5, 1.9]), &uv(&[1.0, 2.0]), 0, Some(&s)).unwrap());
        assert!(!individual_preferred(&uv(&[1.0]), &uv(&[1.0]), 0, None).unwrap());
    }

    #[test]
    fn individual_rejects_player_inside_destination() {
        let s = coalition(&[0, 1]);
        assert!(matches!(
            individual_preferred(&uv(&[2.0, 2.0]), &uv(&[1.0, 2.0]), 0, Some(&s)),
            Err(Error::DeviatorInDestination { player: 0 })
        ));
    }

    #[test]
    fn utility_vector_rejects_non_finite() {
        assert!(matches!(
            UtilityVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteUtility { player: 1 })
        ));
        assert!(UtilityVector::new(vec![]).is_err());
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<usize>)> {
        (2usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(0..n, 1..=n),
            )
        })
    }

    proptest! {
        #[test]
        fn pareto_is_irreflexive(values in prop::collection::vec(-10.0f64..10.0, 1..6)) {
            let u = uv(&values);
            let everyone = coalition(&(0..values.len()).collect::<Vec<_>>());
            prop_assert!(!pareto_preferred(&u, &u, &everyone).unwrap());
        }

        #[test]
        fn pareto_is_asymmetric((a, b, members) in arb_pair()) {
            let mut members = members;
            members.sort_unstable();
            members.dedup();
            let t = coalition(&members);
            let ab = pareto_preferred(&uv(&a), &uv(&b), &t).unwrap();
            let ba = pareto_preferred(&uv(&b), &uv(&a), &t).unwrap();
            prop_assert!(!(ab && ba));
        }

        #[test]
        fn pareto_is_monotone((a, b, members) in arb_pair()) {
            let mut members = members;
            members.sort_unstable();
            members.dedup();
            let t = coalition(&members);
            if pareto_preferred(&uv(&a), &uv(&b), &t).unwrap() {
                let boosted: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
                prop_assert!(pareto_preferred(&uv(&boosted), &uv(&b), &t).unwrap());
            }
        }

        #[test]
        fn individual_with_empty_destination_is_strict_improvement(
            a in prop::collection::vec(-10.0f64..10.0, 1..5),
            b in prop::collection::vec(-10.0f64..10.0, 1..5),
        ) {
            prop_assume!(a.len() == b.len());
            let preferred = individual_preferred(&uv(&a), &uv(&b), 0, None).unwrap();
            prop_assert_eq!(preferred, a[0] - b[0] > STRICT_EPSILON);
        }
    }
}
