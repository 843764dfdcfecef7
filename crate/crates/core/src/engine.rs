//! The generic coalition formation loop: first-improvement acceptance over a
//! deterministic candidate enumeration, stability detection, and a
//! brute-force stability oracle for small instances.

use std::collections::HashMap;

use crate::deviation::{reachable, Deviation, DeviationKind, DeviationModel, HistoryLedger};
use crate::error::{Error, Result};
use crate::partition::{enumerate_all_structures, Coalition, CoalitionStructure, PlayerSet};
use crate::preference::{individual_preferred, pareto_preferred, UtilityVector};

/// The partition function: maps a coalition structure to per-player
/// utilities. Must be deterministic for a fixed realization.
pub trait UtilityOracle {
    fn utilities(&mut self, cs: &CoalitionStructure) -> Result<UtilityVector>;
}

/// Memoizes an oracle by canonical structure. One cache is scoped to one
/// realization; sharing it across deviation models within a realization
/// avoids re-evaluating beamformers for revisited candidates.
pub struct CachedOracle<O> {
    inner: O,
    cache: HashMap<CoalitionStructure, UtilityVector>,
}

impl<O: UtilityOracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: HashMap::new(),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

impl<O: UtilityOracle> UtilityOracle for CachedOracle<O> {
    fn utilities(&mut self, cs: &CoalitionStructure) -> Result<UtilityVector> {
        if let Some(hit) = self.cache.get(cs) {
            return Ok(hit.clone());
        }
        let value = self.inner.utilities(cs)?;
        self.cache.insert(cs.clone(), value.clone());
        Ok(value)
    }
}

/// Adapts a plain function to the oracle trait; handy for abstract games and
/// tests.
pub struct FnOracle<F> {
    f: F,
}

impl<F> FnOracle<F>
where
    F: FnMut(&CoalitionStructure) -> Vec<f64>,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> UtilityOracle for FnOracle<F>
where
    F: FnMut(&CoalitionStructure) -> Vec<f64>,
{
    fn utilities(&mut self, cs: &CoalitionStructure) -> Result<UtilityVector> {
        UtilityVector::new((self.f)(cs))
    }
}

/// Default cap on accepted steps: 10 * 2^n. All supported models terminate
/// well below this; hitting it indicates an invariant violation.
pub fn default_max_steps(n: usize) -> u64 {
    let shifted = 1u128.checked_shl(n as u32).unwrap_or(u128::MAX);
    u64::try_from(shifted.saturating_mul(10)).unwrap_or(u64::MAX)
}

#[derive(Debug, Clone, Default)]
pub struct FormationOptions {
    /// Override for the accepted-step guard; `None` uses [`default_max_steps`].
    pub max_steps: Option<u64>,
}

/// State of the formation dynamics after zero or more accepted deviations.
#[derive(Debug, Clone)]
pub struct GameState {
    pub current: CoalitionStructure,
    pub ledger: HistoryLedger,
    /// Utilities of `current` under the installed oracle.
    pub utilities: UtilityVector,
    /// Accepted deviations so far.
    pub step_count: usize,
    /// Candidate targets evaluated so far (including cache hits).
    pub candidate_evals: usize,
}

/// One accepted deviation along the formation trace.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub step: usize,
    pub source: CoalitionStructure,
    pub target: CoalitionStructure,
    pub kind: DeviationKind,
    pub formed: Vec<Coalition>,
    pub deviators: Coalition,
    pub sum_before: f64,
    pub sum_after: f64,
}

impl TraceStep {
    /// One-line export: step index, kind, formed coalitions, deviator set,
    /// utility sum before/after.
    pub fn render(&self) -> String {
        let formed = self
            .formed
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("|");
        format!(
            "{} {} formed={} deviators={} sum_before={:.6} sum_after={:.6}",
            self.step,
            self.kind.label(),
            formed,
            self.deviators,
            self.sum_before,
            self.sum_after
        )
    }
}

#[derive(Debug, Clone)]
pub struct FormationOutcome {
    pub state: GameState,
    pub trace: Vec<TraceStep>,
    /// Whether the final structure is also stable when the history
    /// restriction is lifted (diagnostic; differs from the primary result
    /// only for the individual and merge&split models).
    pub unrestricted_stable: bool,
}

impl FormationOutcome {
    pub fn stable_structure(&self) -> &CoalitionStructure {
        &self.state.current
    }

    pub fn render_trace(&self) -> String {
        self.trace
            .iter()
            .map(TraceStep::render)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Does the deviation's own preference relation accept the move?
/// Merge and split deviations use the Pareto order over the deviators;
/// individual deviations require strict improvement for the mover and weak
/// improvement for the joined coalition.
pub fn deviation_preferred(
    deviation: &Deviation,
    u_new: &UtilityVector,
    u_old: &UtilityVector,
) -> Result<bool> {
    match &deviation.kind {
        DeviationKind::Merge | DeviationKind::Split => {
            pareto_preferred(u_new, u_old, &deviation.deviators)
        }
        DeviationKind::Individual {
            player,
            destination,
        } => individual_preferred(u_new, u_old, *player, destination.as_ref()),
    }
}

/// Run the formation dynamics from `init` until no reachable deviation is
/// preferred: enumerate candidates in deterministic order, evaluate the
/// oracle on each target, accept the first preferred candidate, record the
/// visit, and restart the enumeration from the new structure.
pub fn run_formation(
    oracle: &mut dyn UtilityOracle,
    model: &DeviationModel,
    init: &CoalitionStructure,
    options: &FormationOptions,
) -> Result<FormationOutcome> {
    let n = init.n_players();
    let max_steps = options.max_steps.unwrap_or_else(|| default_max_steps(n));
    let mut state = GameState {
        current: init.clone(),
        ledger: HistoryLedger::seeded(init),
        utilities: oracle.utilities(init)?,
        step_count: 0,
        candidate_evals: 0,
    };
    let mut trace = Vec::new();

    loop {
        let mut accepted: Option<(Deviation, UtilityVector)> = None;
        for deviation in reachable(&state.current, model, &state.ledger) {
            state.candidate_evals += 1;
            let u_new = oracle.utilities(&deviation.target)?;
            if deviation_preferred(&deviation, &u_new, &state.utilities)? {
                accepted = Some((deviation, u_new));
                break;
            }
        }
        let Some((deviation, u_new)) = accepted else {
            break;
        };
        if state.step_count as u64 >= max_steps {
            return Err(Error::StepLimit { limit: max_steps });
        }
        state.step_count += 1;
        trace.push(TraceStep {
            step: state.step_count,
            source: state.current.clone(),
            target: deviation.target.clone(),
            kind: deviation.kind.clone(),
            formed: deviation.formed.clone(),
            deviators: deviation.deviators.clone(),
            sum_before: state.utilities.sum(),
            sum_after: u_new.sum(),
        });
        state.current = deviation.target;
        state.utilities = u_new;
        state.ledger.record_visit(&state.current);
    }

    let unrestricted_stable = is_stable(
        &state.current,
        oracle,
        model,
        &HistoryLedger::empty(PlayerSet::new(n)?),
    )?;
    Ok(FormationOutcome {
        state,
        trace,
        unrestricted_stable,
    })
}

/// True iff no structure reachable from `cs` under `model` (given `ledger`)
/// is preferred by its deviators.
pub fn is_stable(
    cs: &CoalitionStructure,
    oracle: &mut dyn UtilityOracle,
    model: &DeviationModel,
    ledger: &HistoryLedger,
) -> Result<bool> {
    let u_old = oracle.utilities(cs)?;
    for deviation in reachable(cs, model, ledger) {
        let u_new = oracle.utilities(&deviation.target)?;
        if deviation_preferred(&deviation, &u_new, &u_old)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Ground truth for stability on small instances: filter every structure of
/// n players by [`is_stable`] under the given ledger.
pub fn brute_force_stable_set(
    oracle: &mut dyn UtilityOracle,
    model: &DeviationModel,
    n: usize,
    ledger: &HistoryLedger,
) -> Result<Vec<CoalitionStructure>> {
    let mut stable = Vec::new();
    for cs in enumerate_all_structures(n, 7)? {
        if is_stable(&cs, oracle, model, ledger)? {
            stable.push(cs);
        }
    }
    Ok(stable)
}
