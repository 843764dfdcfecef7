//! Reachability relations: enumerate, in deterministic order, the structures
//! reachable from a given structure under each deviation model, with
//! feasibility filters and history restrictions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::partition::{for_each_partition_assignment, Coalition, CoalitionStructure, PlayerSet};

/// Which reachability relation generates candidate structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Up to q coalitions merge into one.
    Merge,
    /// One coalition splits into up to q coalitions.
    Split,
    /// Alternation of history-restricted merges and unrestricted splits.
    MergeSplit,
    /// A single player leaves its coalition and joins another (or none).
    Individual,
}

impl ModelKind {
    pub fn uses_q(self) -> bool {
        !matches!(self, ModelKind::Individual)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Merge => "merge",
            ModelKind::Split => "split",
            ModelKind::MergeSplit => "merge_split",
            ModelKind::Individual => "individual",
        };
        write!(f, "{s}")
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge" => Ok(ModelKind::Merge),
            "split" => Ok(ModelKind::Split),
            "merge_split" => Ok(ModelKind::MergeSplit),
            "individual" => Ok(ModelKind::Individual),
            other => Err(Error::InvalidParameter(format!(
                "unknown deviation model '{other}' (expected merge, split, merge_split, or individual)"
            ))),
        }
    }
}

/// Enumeration policy for reachable structures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationModel {
    kind: ModelKind,
    q: usize,
    max_coalition_size: Option<usize>,
}

impl DeviationModel {
    /// `q` must be >= 2 for merge/split kinds; it is ignored (and stored as 0)
    /// for the individual kind.
    pub fn new(kind: ModelKind, q: usize) -> Result<Self> {
        if kind.uses_q() && q < 2 {
            return Err(Error::InvalidParameter(format!(
                "deviation bound q must be at least 2, got {q}"
            )));
        }
        Ok(Self {
            kind,
            q: if kind.uses_q() { q } else { 0 },
            max_coalition_size: None,
        })
    }

    pub fn merge(q: usize) -> Result<Self> {
        Self::new(ModelKind::Merge, q)
    }

    pub fn split(q: usize) -> Result<Self> {
        Self::new(ModelKind::Split, q)
    }

    pub fn merge_split(q: usize) -> Result<Self> {
        Self::new(ModelKind::MergeSplit, q)
    }

    pub fn individual() -> Self {
        Self {
            kind: ModelKind::Individual,
            q: 0,
            max_coalition_size: None,
        }
    }

    /// Upper bound on any formed coalition; `None` means unlimited. In the
    /// MISO backend this defaults to the number of transmit antennas, beyond
    /// which zero-forcing is infeasible for generic channels.
    pub fn with_max_coalition_size(mut self, cap: Option<usize>) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::InvalidParameter(
                "max coalition size must be at least 1".into(),
            ));
        }
        self.max_coalition_size = cap;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn max_coalition_size(&self) -> Option<usize> {
        self.max_coalition_size
    }

    fn size_allowed(&self, size: usize) -> bool {
        self.max_coalition_size.is_none_or(|cap| size <= cap)
    }
}

/// How a deviation changes the structure, carrying what its preference
/// relation needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviationKind {
    Merge,
    Split,
    Individual {
        player: usize,
        /// The coalition joined; `None` means the player exits to a singleton.
        destination: Option<Coalition>,
    },
}

impl DeviationKind {
    pub fn label(&self) -> &'static str {
        match self {
            DeviationKind::Merge => "merge",
            DeviationKind::Split => "split",
            DeviationKind::Individual { .. } => "individual",
        }
    }
}

/// One feasible change of the coalition structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    /// The structure after the deviation; always differs from the source.
    pub target: CoalitionStructure,
    /// The players whose consent the preference relation requires.
    pub deviators: Coalition,
    /// The coalitions newly created by this step (blocks of `target`).
    pub formed: Vec<Coalition>,
    pub kind: DeviationKind,
}

/// Coalitions that have existed in any visited structure, and per player the
/// coalitions it has belonged to. Grows monotonically during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryLedger {
    seen: BTreeSet<Coalition>,
    memberships: Vec<BTreeSet<Coalition>>,
}

impl HistoryLedger {
    pub fn empty(players: PlayerSet) -> Self {
        Self {
            seen: BTreeSet::new(),
            memberships: vec![BTreeSet::new(); players.len()],
        }
    }

    /// Ledger initialized from the structure the dynamics start at.
    pub fn seeded(initial: &CoalitionStructure) -> Self {
        let mut ledger = Self::empty(initial.player_set());
        ledger.record_visit(initial);
        ledger
    }

    /// Add every block of `cs` to the seen set and to the membership set of
    /// each of its members. Idempotent.
    pub fn record_visit(&mut self, cs: &CoalitionStructure) {
        for block in cs.blocks() {
            for &m in block.members() {
                self.memberships[m].insert(block.clone());
            }
            self.seen.insert(block.clone());
        }
    }

    pub fn has_seen(&self, coalition: &Coalition) -> bool {
        self.seen.contains(coalition)
    }

    pub fn was_member_of(&self, player: usize, coalition: &Coalition) -> bool {
        self.memberships[player].contains(coalition)
    }

    pub fn seen_count(&self) -> usize {
        self.seen.len()
    }
}

/// All merges of 2..=q existing coalitions, ordered by lexicographic order of
/// the target structure.
///
/// Merges whose formed coalition exceeds the model's size cap are omitted;
/// when `history` is supplied (merge&split alternation), merges re-forming a
/// previously existing coalition are omitted as well.
pub fn enumerate_merge(
    cs: &CoalitionStructure,
    model: &DeviationModel,
    history: Option<&HistoryLedger>,
) -> Vec<Deviation> {
    let m = cs.num_blocks();
    let mut out = Vec::new();
    let max_pick = model.q().min(m);
    let mut picked = Vec::new();
    for size in 2..=max_pick {
        for_each_combination(m, size, &mut picked, &mut |subset| {
            let mut members = Vec::new();
            for &bi in subset {
                members.extend_from_slice(cs.blocks()[bi].members());
            }
            members.sort_unstable();
            let merged = Coalition::from_sorted_unchecked(members);
            if !model.size_allowed(merged.len()) {
                return;
            }
            if history.is_some_and(|h| h.has_seen(&merged)) {
                return;
            }
            let target = cs.replace_blocks(subset, vec![merged.clone()]);
            out.push(Deviation {
                target,
                deviators: merged.clone(),
                formed: vec![merged],
                kind: DeviationKind::Merge,
            });
        });
    }
    out.sort_by_cached_key(|d| d.target.assignment());
    out
}

/// All splits of one coalition into 2..=q parts, ordered by (block, lexicographic
/// order of the target structure).
pub fn enumerate_split(cs: &CoalitionStructure, model: &DeviationModel) -> Vec<Deviation> {
    let mut out = Vec::new();
    for (bi, block) in cs.blocks().iter().enumerate() {
        let size = block.len();
        if size < 2 {
            continue;
        }
        let mut block_deviations = Vec::new();
        for_each_partition_assignment(size, &mut |assignment| {
            let parts_count = assignment.iter().max().unwrap() + 1;
            if parts_count < 2 || parts_count > model.q() {
                return;
            }
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); parts_count];
            for (pos, &label) in assignment.iter().enumerate() {
                parts[label].push(block.members()[pos]);
            }
            let parts: Vec<Coalition> = parts
                .into_iter()
                .map(Coalition::from_sorted_unchecked)
                .collect();
            let target = cs.replace_blocks(&[bi], parts.clone());
            block_deviations.push(Deviation {
                target,
                deviators: block.clone(),
                formed: parts,
                kind: DeviationKind::Split,
            });
        });
        block_deviations.sort_by_cached_key(|d| d.target.assignment());
        out.extend(block_deviations);
    }
    out
}

/// All moves of a single player to another coalition or out to a singleton,
/// ordered by (player, lexicographic order of the target structure).
///
/// No-op moves (a singleton exiting to a singleton) are omitted; moves into a
/// coalition the player has belonged to before are omitted (convergence
/// restriction); moves whose destination would exceed the size cap are
/// omitted.
pub fn enumerate_individual(
    cs: &CoalitionStructure,
    model: &DeviationModel,
    ledger: &HistoryLedger,
) -> Vec<Deviation> {
    let mut out = Vec::new();
    for player in 0..cs.n_players() {
        let own_idx = cs.block_index_of(player).expect("player in structure");
        let own = &cs.blocks()[own_idx];
        let remainder = own.without_member(player);

        let mut player_deviations = Vec::new();
        // destinations: every other block, plus the empty set
        let destinations = cs
            .blocks()
            .iter()
            .enumerate()
            .filter(|&(bi, _)| bi != own_idx)
            .map(|(bi, b)| (Some(bi), Some(b)))
            .chain(std::iter::once((None, None)));
        for (dest_idx, dest) in destinations {
            if dest.is_none() && remainder.is_none() {
                continue; // singleton exiting to a singleton: no-op
            }
            let joined = match dest {
                Some(s) => s.with_member(player),
                None => Coalition::singleton(player),
            };
            if !model.size_allowed(joined.len()) {
                continue;
            }
            if ledger.was_member_of(player, &joined) {
                continue;
            }
            let mut remove = vec![own_idx];
            if let Some(di) = dest_idx {
                remove.push(di);
            }
            let mut add = vec![joined.clone()];
            let mut formed = vec![joined.clone()];
            if let Some(rem) = remainder.clone() {
                add.push(rem.clone());
                formed.push(rem);
            }
            formed.sort_by_key(Coalition::min_member);
            let target = cs.replace_blocks(&remove, add);
            player_deviations.push(Deviation {
                target,
                deviators: joined,
                formed,
                kind: DeviationKind::Individual {
                    player,
                    destination: dest.cloned(),
                },
            });
        }
        player_deviations.sort_by_cached_key(|d| d.target.assignment());
        out.extend(player_deviations);
    }
    out
}

/// The structures reachable from `cs` under `model`, in deterministic order.
///
/// Merge&split concatenates history-filtered merge deviations and then split
/// deviations; the plain merge and split kinds ignore the ledger.
pub fn reachable(
    cs: &CoalitionStructure,
    model: &DeviationModel,
    ledger: &HistoryLedger,
) -> Vec<Deviation> {
    match model.kind() {
        ModelKind::Merge => enumerate_merge(cs, model, None),
        ModelKind::Split => enumerate_split(cs, model),
        ModelKind::MergeSplit => {
            let mut out = enumerate_merge(cs, model, Some(ledger));
            out.extend(enumerate_split(cs, model));
            out
        }
        ModelKind::Individual => enumerate_individual(cs, model, ledger),
    }
}

/// Visit every k-subset of {0..m-1} in lexicographic order.
fn for_each_combination(
    m: usize,
    k: usize,
    picked: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if picked.len() == k {
        visit(picked);
        return;
    }
    let start = picked.last().map_or(0, |&p| p + 1);
    let remaining = k - picked.len();
    for i in start..=m.saturating_sub(remaining) {
        picked.push(i);
        for_each_combination(m, k, picked, visit);
        picked.pop();
    }
}
