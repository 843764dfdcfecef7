//! Canonical representation, algebra, and enumeration of coalition structures
//! (partitions of the player set).
//!
//! A structure is kept in canonical form: members sorted within each block,
//! blocks sorted by their minimum member. Canonical form makes structure
//! equality a plain comparison and matches the order induced by
//! restricted-growth strings, which is the order used everywhere a
//! deterministic enumeration is required.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default cap for exhaustive structure enumeration; B(10) = 115975 keeps
/// brute-force oracles tractable.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// The set of players {0, .., n-1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlayerSet {
    n: usize,
}

impl PlayerSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "player set must contain at least one player".into(),
            ));
        }
        Ok(Self { n })
    }

    pub fn len(self) -> usize {
        self.n
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn players(self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn contains(self, player: usize) -> bool {
        player < self.n
    }
}

/// A non-empty set of players, stored strictly sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition {
    members: Vec<usize>,
}

impl Coalition {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if members.is_empty() {
            return Err(Error::InvalidPartition("empty coalition".into()));
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition(format!(
                "duplicate member in coalition {:?}",
                members
            )));
        }
        Ok(Self { members })
    }

    pub fn singleton(player: usize) -> Self {
        Self {
            members: vec![player],
        }
    }

    /// Members, strictly ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, player: usize) -> bool {
        self.members.binary_search(&player).is_ok()
    }

    pub fn min_member(&self) -> usize {
        self.members[0]
    }

    /// New coalition with `player` inserted.
    pub fn with_member(&self, player: usize) -> Coalition {
        debug_assert!(!self.contains(player));
        let mut members = self.members.clone();
        let pos = members.partition_point(|&m| m < player);
        members.insert(pos, player);
        Coalition { members }
    }

    /// New coalition with `player` removed, or `None` if it would be empty.
    pub fn without_member(&self, player: usize) -> Option<Coalition> {
        if self.members.len() == 1 {
            debug_assert_eq!(self.members[0], player);
            return None;
        }
        let members = self
            .members
            .iter()
            .copied()
            .filter(|&m| m != player)
            .collect();
        Some(Coalition { members })
    }

    pub(crate) fn from_sorted_unchecked(members: Vec<usize>) -> Self {
        debug_assert!(!members.is_empty());
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self { members }
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, m) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// A partition of the player set into pairwise disjoint coalitions, in
/// canonical form.
///
/// Equality, hashing, and `Ord` all agree with the restricted-growth-string
/// encoding; `Ord` is only meaningful between structures over the same
/// player set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoalitionStructure {
    n: usize,
    blocks: Vec<Coalition>,
}

impl CoalitionStructure {
    /// Canonicalize an unordered collection of blocks into a structure over
    /// `players`, rejecting overlaps, gaps, and out-of-range members.
    pub fn canonicalize(
        blocks: impl IntoIterator<Item = Coalition>,
        players: PlayerSet,
    ) -> Result<Self> {
        let n = players.len();
        let mut blocks: Vec<Coalition> = blocks.into_iter().collect();
        let mut assigned = vec![false; n];
        for block in &blocks {
            for &m in block.members() {
                if m >= n {
                    return Err(Error::UnknownPlayer { player: m, n });
                }
                if assigned[m] {
                    return Err(Error::InvalidPartition(format!(
                        "player {m} appears in more than one coalition"
                    )));
                }
                assigned[m] = true;
            }
        }
        if let Some(missing) = assigned.iter().position(|&a| !a) {
            return Err(Error::InvalidPartition(format!(
                "player {missing} is not covered by any coalition"
            )));
        }
        blocks.sort_by_key(Coalition::min_member);
        Ok(Self { n, blocks })
    }

    /// Convenience wrapper over [`canonicalize`](Self::canonicalize) taking
    /// raw member lists.
    pub fn from_blocks(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let players = PlayerSet::new(n)?;
        let blocks = blocks
            .into_iter()
            .map(Coalition::new)
            .collect::<Result<Vec<_>>>()?;
        Self::canonicalize(blocks, players)
    }

    /// Blocks are known disjoint and covering; only sort into canonical form.
    pub(crate) fn from_disjoint_blocks_unchecked(mut blocks: Vec<Coalition>, n: usize) -> Self {
        blocks.sort_by_key(Coalition::min_member);
        let cs = Self { n, blocks };
        debug_assert!(cs.check_valid().is_ok());
        cs
    }

    fn check_valid(&self) -> Result<()> {
        Self::canonicalize(self.blocks.iter().cloned(), PlayerSet::new(self.n)?).map(|_| ())
    }

    /// The all-singletons structure {{0}, {1}, ..}.
    pub fn singletons(players: PlayerSet) -> Self {
        let blocks = players.players().map(Coalition::singleton).collect();
        Self {
            n: players.len(),
            blocks,
        }
    }

    /// The grand coalition {{0, 1, ..}}.
    pub fn grand(players: PlayerSet) -> Self {
        let members: Vec<usize> = players.players().collect();
        Self {
            n: players.len(),
            blocks: vec![Coalition::from_sorted_unchecked(members)],
        }
    }

    pub fn n_players(&self) -> usize {
        self.n
    }

    pub fn player_set(&self) -> PlayerSet {
        PlayerSet { n: self.n }
    }

    /// Blocks in canonical order (ascending minimum member).
    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// The unique block containing `player`.
    pub fn coalition_of(&self, player: usize) -> Result<&Coalition> {
        let idx = self.block_index_of(player)?;
        Ok(&self.blocks[idx])
    }

    pub fn block_index_of(&self, player: usize) -> Result<usize> {
        if player >= self.n {
            return Err(Error::UnknownPlayer { player, n: self.n });
        }
        self.blocks
            .iter()
            .position(|b| b.contains(player))
            .ok_or_else(|| Error::InvalidPartition(format!("player {player} not covered")))
    }

    /// Restricted-growth encoding: `a[i]` is the index of the block containing
    /// player `i`. With canonical block order this is a restricted growth
    /// string (`a[0] = 0`, `a[i] <= max(a[..i]) + 1`).
    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![0usize; self.n];
        for (idx, block) in self.blocks.iter().enumerate() {
            for &m in block.members() {
                a[m] = idx;
            }
        }
        a
    }

    /// Inverse of [`assignment`](Self::assignment); accepts arbitrary block
    /// labels and canonicalizes.
    pub fn from_assignment(assignment: &[usize]) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidPartition("empty assignment".into()));
        }
        let mut label_to_block: Vec<(usize, Vec<usize>)> = Vec::new();
        for (player, &label) in assignment.iter().enumerate() {
            match label_to_block.iter_mut().find(|(l, _)| *l == label) {
                Some((_, members)) => members.push(player),
                None => label_to_block.push((label, vec![player])),
            }
        }
        let blocks = label_to_block
            .into_iter()
            .map(|(_, members)| Coalition::from_sorted_unchecked(members))
            .collect();
        Ok(Self::from_disjoint_blocks_unchecked(
            blocks,
            assignment.len(),
        ))
    }

    /// Structure with the blocks at `remove` (indices into `blocks()`)
    /// replaced by `add`. Internal building block for deviation targets.
    pub(crate) fn replace_blocks(&self, remove: &[usize], add: Vec<Coalition>) -> Self {
        let mut blocks: Vec<Coalition> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| !remove.contains(i))
            .map(|(_, b)| b.clone())
            .collect();
        blocks.extend(add);
        Self::from_disjoint_blocks_unchecked(blocks, self.n)
    }
}

impl PartialOrd for CoalitionStructure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CoalitionStructure {
    /// Lexicographic order of the restricted-growth encodings. Only
    /// meaningful between structures over the same player set; use
    /// [`lex_order`] for a checked comparison.
    fn cmp(&self, other: &Self) -> Ordering {
        self.assignment().cmp(&other.assignment())
    }
}

impl fmt::Display for CoalitionStructure {
    /// Text encoding for logs and CSV: blocks separated by `|`, members by
    /// `,`, e.g. `0,3|1|2,4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            write!(f, "{block}")?;
        }
        Ok(())
    }
}

impl FromStr for CoalitionStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |message: String| Error::ParseStructure {
            text: s.to_string(),
            message,
        };
        let mut blocks = Vec::new();
        let mut max_player = 0usize;
        for part in s.split('|') {
            let mut members = Vec::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    return Err(parse_err("empty member".into()));
                }
                let m: usize = tok
                    .parse()
                    .map_err(|e| parse_err(format!("invalid player index '{tok}': {e}")))?;
                max_player = max_player.max(m);
                members.push(m);
            }
            blocks.push(members);
        }
        Self::from_blocks(blocks, max_player + 1)
    }
}

/// Total order on structures over the same player set, consistent with
/// restricted-growth-string comparison.
pub fn lex_order(a: &CoalitionStructure, b: &CoalitionStructure) -> Result<Ordering> {
    if a.n != b.n {
        return Err(Error::PlayerSetMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok(a.cmp(b))
}

/// Every partition of {0..n-1} exactly once, in lexicographic order of the
/// restricted-growth encoding. The count equals the Bell number B(n).
pub fn enumerate_all_structures(n: usize, cap: usize) -> Result<Vec<CoalitionStructure>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot enumerate structures of an empty player set".into(),
        ));
    }
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let mut out = Vec::new();
    for_each_partition_assignment(n, &mut |a| {
        // first-appearance labels are already canonical block indices
        out.push(CoalitionStructure::from_assignment(a).expect("valid restricted growth string"));
    });
    Ok(out)
}

/// Visit the restricted-growth string of every partition of an n-set, in
/// lexicographic order.
pub(crate) fn for_each_partition_assignment(n: usize, visit: &mut impl FnMut(&[usize])) {
    let mut assignment = vec![0usize; n];
    fill_restricted_growth(&mut assignment, 1, 0, visit);
}

fn fill_restricted_growth(
    assignment: &mut [usize],
    pos: usize,
    max_used: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos == assignment.len() {
        visit(assignment);
        return;
    }
    for label in 0..=max_used + 1 {
        assignment[pos] = label;
        fill_restricted_growth(assignment, pos + 1, max_used.max(label), visit);
    }
}
