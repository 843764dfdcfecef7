//! Closed-form deviation-enumeration complexity and the Stirling/Bell
//! combinatorics behind it, in exact arbitrary-precision arithmetic.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::partition::CoalitionStructure;

/// Stirling number of the second kind S(n, l): partitions of an n-set into l
/// non-empty blocks. Computed by the recurrence
/// S(n, l) = l * S(n-1, l) + S(n-1, l-1), which avoids the cancellation of the
/// inclusion-exclusion closed form.
pub fn stirling2(n: usize, l: usize) -> BigUint {
    if l > n {
        return BigUint::zero();
    }
    stirling2_row(n)[l].clone()
}

/// The full row S(n, 0..=n).
pub fn stirling2_row(n: usize) -> Vec<BigUint> {
    let mut row: Vec<BigUint> = vec![BigUint::one()]; // S(0,0)
    for _ in 1..=n {
        let mut next = vec![BigUint::zero(); row.len() + 1];
        for (l, value) in row.iter().enumerate() {
            // S(m, l) contributes l * S(m, l) to S(m+1, l) and S(m, l-1) to S(m+1, l)
            next[l] += value * BigUint::from(l);
            next[l + 1] += value;
        }
        row = next;
    }
    row
}

/// Bell number B(n): the number of partitions of an n-set.
pub fn bell(n: usize) -> BigUint {
    stirling2_row(n).into_iter().sum()
}

/// Binomial coefficient C(n, k), exact.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut result = BigUint::one();
    for j in 0..k {
        result = result * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    result
}

/// Number of ways to merge at least two and at most q coalitions of an
/// m-block structure: D(m, q) = sum_{j=2..min(q,m)} C(m, j). D(1, q) = 0.
pub fn merge_complexity(m: usize, q: usize) -> BigUint {
    let mut total = BigUint::zero();
    for j in 2..=q.min(m) {
        total += binomial(m, j);
    }
    total
}

/// Number of ways to split an m-set into at least two and at most q parts:
/// T(m, q) = sum_{l=2..q} S(m, l).
pub fn split_complexity(m: usize, q: usize) -> BigUint {
    let row = stirling2_row(m);
    let mut total = BigUint::zero();
    for value in row.iter().take(q.min(m) + 1).skip(2) {
        total += value;
    }
    total
}

/// Split-search complexity of a whole structure: sum over its blocks of
/// T(|block|, q).
pub fn structure_split_complexity(cs: &CoalitionStructure, q: usize) -> BigUint {
    cs.blocks()
        .iter()
        .map(|b| split_complexity(b.len(), q))
        .sum()
}

/// One row of the complexity table: worst-case merge complexity D(n, q)
/// (n singleton blocks) and split complexity T(n, q) (grand coalition).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityRow {
    pub n: usize,
    pub q: usize,
    pub merge: BigUint,
    pub split: BigUint,
}

/// D(n, q) and T(n, q) for n = 1..=n_max and each q in `qs`.
pub fn complexity_table(n_max: usize, qs: &[usize]) -> Vec<ComplexityRow> {
    let mut rows = Vec::with_capacity(n_max * qs.len());
    for n in 1..=n_max {
        for &q in qs {
            rows.push(ComplexityRow {
                n,
                q,
                merge: merge_complexity(n, q),
                split: split_complexity(n, q),
            });
        }
    }
    rows
}

/// CSV rendering of a complexity table, columns `n,q,D,T`.
pub fn complexity_table_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from("n,q,D,T\n");
    for row in rows {
        out.push_str(&format!("{},{},{},{}\n", row.n, row.q, row.merge, row.split));
    }
    out
}
