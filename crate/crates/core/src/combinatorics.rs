//! Partition counts behind the moment formulas: `γ` (set partitions with
//! prescribed even block sizes), `β` and `α` (alternating two-colour
//! partitions) and the row sums `s_p(k)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::scalar::{binomial, factorial};

/// A nonincreasing tuple `(n_1 ≥ … ≥ n_k)` of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionShape {
    parts: Vec<usize>,
}

impl PartitionShape {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "shape parts must be positive and nonempty, got {parts:?}"
            )));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(PartitionShape { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn p(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    /// Multiplicities of the distinct part sizes, largest size first.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &n in &self.parts {
            match out.last_mut() {
                Some((m, c)) if *m == n => *c += 1,
                _ => out.push((n, 1)),
            }
        }
        out
    }
}

impl fmt::Display for PartitionShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        f.write_str(&s.join(","))
    }
}

impl FromStr for PartitionShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad shape {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PartitionShape::new(parts)
    }
}

impl Serialize for PartitionShape {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartitionShape {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PartitionShape::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// All integer partitions of `p`, largest first part first:
/// `p = 3` gives `[(3), (2,1), (1,1,1)]`.
pub fn shapes(p: usize) -> Vec<PartitionShape> {
    fn rec(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<PartitionShape>) {
        if rest == 0 {
            out.push(PartitionShape {
                parts: prefix.clone(),
            });
            return;
        }
        for n in (1..=rest.min(max)).rev() {
            prefix.push(n);
            rec(rest - n, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if p > 0 {
        rec(p, p, &mut Vec::new(), &mut out);
    }
    out
}

/// `γ(p; n_1..n_k) = (2p)! / (∏ (2n_i)! · ∏ m_j!)`.
pub fn gamma(shape: &PartitionShape) -> BigUint {
    let num = factorial(2 * shape.p() as u64);
    let den = shape
        .parts
        .iter()
        .fold(BigUint::one(), |acc, &n| acc * factorial(2 * n as u64));
    let mult = shape
        .multiplicities()
        .iter()
        .fold(BigUint::one(), |acc, &(_, m)| acc * factorial(m as u64));
    num / (den * mult)
}

/// `γ` by peeling off the largest part size with its multiplicity `r`:
/// `γ(p; n^r, rest) = (1/r!) ∏_{i<r} C(2p − 2in, 2n) · γ(p − rn; rest)`.
pub fn gamma_recursive(shape: &PartitionShape) -> BigUint {
    fn rec(p: usize, groups: &[(usize, usize)]) -> BigUint {
        let Some(&(n, r)) = groups.first() else {
            return BigUint::one();
        };
        let mut acc = BigUint::one();
        for i in 0..r {
            acc *= binomial((2 * p - 2 * i * n) as u64, 2 * n as u64);
        }
        acc / factorial(r as u64) * rec(p - r * n, &groups[1..])
    }
    rec(shape.p(), &shape.multiplicities())
}

/// Visits every set partition of `{0..n}` as a restricted growth string.
pub fn for_each_set_partition(n: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        f(&[]);
        return;
    }
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        f(&a);
        // advance to the next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] <= maxes[i - 1] {
                a[i] += 1;
                maxes[i] = maxes[i - 1].max(a[i]);
                for j in i + 1..n {
                    a[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// `γ` by enumerating set partitions of `{1..2p}`; exponential, for checks.
pub fn gamma_bruteforce(shape: &PartitionShape) -> BigUint {
    let n = 2 * shape.p();
    let mut want: Vec<usize> = shape.parts.iter().map(|x| 2 * x).collect();
    want.sort_unstable();
    let mut count = BigUint::zero();
    for_each_set_partition(n, |rgs| {
        let blocks = rgs.iter().max().map_or(0, |m| m + 1);
        if blocks != want.len() {
            return;
        }
        let mut sizes = vec![0usize; blocks];
        for &b in rgs {
            sizes[b] += 1;
        }
        sizes.sort_unstable();
        if sizes == want {
            count += 1u32;
        }
    });
    count
}

fn check_beta_args(p: usize, n: usize) -> Result<()> {
    if n == 0 || n > p {
        return Err(Error::InvalidInput(format!(
            "β(p;n) needs 1 ≤ n ≤ p, got p={p}, n={n}"
        )));
    }
    Ok(())
}

/// Number of alternating, colour-balanced blocks of size `2n` among `2p`
/// elements (reds at odd positions), by the red-position sum
///
/// `2^{-n} ( Σ_{r_1<…<r_n} ∏(r_{i+1}−r_i)·(2p+1−r_n) + Σ_{3≤r_1<…<r_n} (r_1−1) ∏(r_{i+1}−r_i) )`
///
/// with `r_i` ranging over the odd positions `1, 3, …, 2p−1`.
pub fn beta(p: usize, n: usize) -> Result<BigUint> {
    check_beta_args(p, n)?;
    let reds: Vec<u64> = (0..p).map(|j| 2 * j as u64 + 1).collect();
    // red_start[j] / white_start[j]: weighted chains whose last red is reds[j]
    let mut red_start: Vec<BigUint> = vec![BigUint::one(); p];
    let mut white_start: Vec<BigUint> = reds.iter().map(|&r| BigUint::from(r - 1)).collect();
    for _ in 1..n {
        let mut rs = vec![BigUint::zero(); p];
        let mut ws = vec![BigUint::zero(); p];
        for j in 0..p {
            for i in 0..j {
                let d = BigUint::from(reds[j] - reds[i]);
                rs[j] += &red_start[i] * &d;
                ws[j] += &white_start[i] * &d;
            }
        }
        red_start = rs;
        white_start = ws;
    }
    let end = |j: usize| BigUint::from(2 * p as u64 + 1 - reds[j]);
    let mut total = BigUint::zero();
    for j in 0..p {
        total += &red_start[j] * end(j) + &white_start[j];
    }
    let scale = BigUint::one() << n;
    debug_assert!((&total % &scale).is_zero());
    Ok(total / scale)
}

/// `β` by enumerating subsets of the `2p` positions.
pub fn beta_bruteforce(p: usize, n: usize) -> Result<BigUint> {
    check_beta_args(p, n)?;
    if p > 14 {
        return Err(Error::CapExceeded {
            what: "brute-force β size p",
            requested: p,
            cap: 14,
            estimate: format!("2^{} subsets", 2 * p),
        });
    }
    let len = 2 * p;
    let mut count = 0u64;
    for mask in 0u32..(1u32 << len) {
        if mask.count_ones() as usize != 2 * n {
            continue;
        }
        // position i (0-based) is red when i is even
        let mut last: Option<bool> = None;
        let mut ok = true;
        for i in 0..len {
            if mask >> i & 1 == 1 {
                let red = i % 2 == 0;
                if last == Some(red) {
                    ok = false;
                    break;
                }
                last = Some(red);
            }
        }
        if ok {
            count += 1;
        }
    }
    Ok(BigUint::from(count))
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct OpenBlock {
    target: usize,
    count: usize,
    starts_red: bool,
}

impl OpenBlock {
    fn next_is_red(&self) -> bool {
        // colours alternate, so the next colour is fixed by start and parity
        if self.count.is_multiple_of(2) {
            self.starts_red
        } else {
            !self.starts_red
        }
    }
}

type AlphaKey = (usize, Vec<OpenBlock>, Vec<usize>);

fn alpha_rec(
    pos: usize,
    len: usize,
    open: Vec<OpenBlock>,
    unused: Vec<usize>,
    memo: &mut HashMap<AlphaKey, BigUint>,
) -> BigUint {
    if pos == len {
        return if open.is_empty() && unused.is_empty() {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    let needed: usize = open.iter().map(|b| 2 * b.target - b.count).sum::<usize>()
        + unused.iter().map(|n| 2 * n).sum::<usize>();
    if needed != len - pos {
        return BigUint::zero();
    }
    let key = (pos, open, unused);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let (_, open, unused) = &key;
    let red = pos.is_multiple_of(2);
    let mut total = BigUint::zero();

    // join an open block; identical open states are still distinct blocks
    let mut i = 0;
    while i < open.len() {
        let mut j = i + 1;
        while j < open.len() && open[j] == open[i] {
            j += 1;
        }
        if open[i].next_is_red() == red {
            let mut next = open.clone();
            let mut grown = next.remove(i);
            grown.count += 1;
            if grown.count < 2 * grown.target {
                next.push(grown);
                next.sort();
            }
            total += alpha_rec(pos + 1, len, next, unused.clone(), memo) * (j - i);
        }
        i = j;
    }

    // open a new block with one of the unused (indistinguishable) sizes
    let mut sizes = unused.clone();
    sizes.dedup();
    for n in sizes {
        let mut rest = unused.clone();
        let at = rest.iter().position(|&x| x == n).unwrap();
        rest.remove(at);
        let mut next = open.clone();
        if n > 0 {
            next.push(OpenBlock {
                target: n,
                count: 1,
                starts_red: red,
            });
            next.sort();
        }
        total += alpha_rec(pos + 1, len, next, rest, memo);
    }

    memo.insert(key, total.clone());
    total
}

/// `α(p; n_1..n_k)`: partitions of `2p` alternately coloured elements into
/// blocks of sizes `2n_i`, each colour-balanced with alternating colours.
/// Exact count by memoized backtracking over the set of open blocks.
pub fn alpha(shape: &PartitionShape, caps: &Caps) -> Result<BigUint> {
    caps.check_alpha(shape.p())?;
    let mut memo = HashMap::new();
    Ok(alpha_rec(
        0,
        2 * shape.p(),
        Vec::new(),
        shape.parts.clone(),
        &mut memo,
    ))
}

/// `s_p(k)`: sum of `α` over the shapes of `p` with exactly `k` parts.
pub fn s_sum(p: usize, k: usize, caps: &Caps) -> Result<BigUint> {
    if k == 0 || k > p {
        return Err(Error::InvalidInput(format!(
            "s_p(k) needs 1 ≤ k ≤ p, got p={p}, k={k}"
        )));
    }
    let mut acc = BigUint::zero();
    for s in shapes(p).iter().filter(|s| s.k() == k) {
        acc += alpha(s, caps)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub shape: PartitionShape,
    pub k: usize,
    #[serde(with = "big_string")]
    pub gamma: BigUint,
    #[serde(with = "big_string")]
    pub alpha: BigUint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub p: usize,
    pub rows: Vec<CountRow>,
    /// `(k, s_p(k))` for `k = 1..=p`.
    #[serde(with = "big_pairs")]
    pub sums: Vec<(usize, BigUint)>,
}

impl CountTable {
    pub fn build(p: usize, caps: &Caps) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("p must be at least 1".into()));
        }
        caps.check_alpha(p)?;
        let rows = shapes(p)
            .into_iter()
            .map(|shape| {
                let alpha = alpha(&shape, caps)?;
                Ok(CountRow {
                    k: shape.k(),
                    gamma: gamma(&shape),
                    alpha,
                    shape,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let sums = (1..=p)
            .map(|k| {
                let s = rows
                    .iter()
                    .filter(|r| r.k == k)
                    .fold(BigUint::zero(), |a, r| a + &r.alpha);
                (k, s)
            })
            .collect();
        Ok(CountTable { p, rows, sums })
    }

    pub fn alpha_of(&self, parts: &[usize]) -> Option<&BigUint> {
        self.rows
            .iter()
            .find(|r| r.shape.parts() == parts)
            .map(|r| &r.alpha)
    }

    pub fn s(&self, k: usize) -> Option<&BigUint> {
        self.sums.iter().find(|(j, _)| *j == k).map(|(_, s)| s)
    }
}

mod big_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

mod big_pairs {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(usize, BigUint)], s: S) -> Result<S::Ok, S::Error> {
        let t: Vec<(usize, String)> = v.iter().map(|(k, x)| (*k, x.to_string())).collect();
        t.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(usize, BigUint)>, D::Error> {
        Vec::<(usize, String)>::deserialize(d)?
            .into_iter()
            .map(|(k, x)| x.parse().map(|v| (k, v)).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(parts: &[usize]) -> PartitionShape {
        PartitionShape::new(parts.to_vec()).unwrap()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn shape_enumeration() {
        assert_eq!(shapes(1), vec![sh(&[1])]);
        assert_eq!(shapes(3), vec![sh(&[3]), sh(&[2, 1]), sh(&[1, 1, 1])]);
        assert_eq!(shapes(4).len(), 5);
        assert_eq!(shapes(10).len(), 42);
    }

    #[test]
    fn shape_parsing() {
        assert_eq!("2,1,1".parse::<PartitionShape>().unwrap(), sh(&[2, 1, 1]));
        assert_eq!("(1,2)".parse::<PartitionShape>().unwrap(), sh(&[2, 1]));
        assert!("2,0".parse::<PartitionShape>().is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(&sh(&[1, 1, 1])), big(15));
        assert_eq!(gamma(&sh(&[5])), big(1));
        assert_eq!(gamma(&sh(&[2, 1])), big(15));
        assert_eq!(gamma_recursive(&sh(&[1, 1])), big(3));
        assert_eq!(gamma_recursive(&sh(&[2, 2])), big(35));
        assert_eq!(gamma_recursive(&sh(&[1])), big(1));
    }

    #[test]
    fn set_partition_walk_counts_bell_numbers() {
        for (n, bell) in [(0, 1), (1, 1), (3, 5), (5, 52), (7, 877)] {
            let mut c = 0;
            for_each_set_partition(n, |_| c += 1);
            assert_eq!(c, bell, "B({n})");
        }
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta(3, 2).unwrap(), big(6));
        assert_eq!(beta(2, 1).unwrap(), big(4));
        assert_eq!(beta(5, 5).unwrap(), big(1));
        assert_eq!(beta_bruteforce(1, 1).unwrap(), big(1));
        assert_eq!(beta_bruteforce(3, 2).unwrap(), big(6));
        assert_eq!(beta_bruteforce(4, 3).unwrap(), big(8));
        assert!(beta(3, 0).is_err());
        assert!(beta(3, 4).is_err());
    }

    #[test]
    fn alpha_table_values() {
        let caps = Caps::default();
        for (parts, v) in [
            (&[1, 1][..], 2),
            (&[2], 1),
            (&[1, 1, 1], 6),
            (&[2, 1], 6),
            (&[3], 1),
            (&[4], 1),
            (&[3, 1], 8),
            (&[2, 2], 6),
            (&[2, 1, 1], 40),
            (&[1, 1, 1, 1], 24),
        ] {
            assert_eq!(alpha(&sh(parts), &caps).unwrap(), big(v), "{parts:?}");
        }
        assert_eq!(s_sum(4, 2, &caps).unwrap(), big(14));
        assert_eq!(s_sum(4, 3, &caps).unwrap(), big(40));
        assert_eq!(s_sum(6, 1, &caps).unwrap(), big(1));
    }

    #[test]
    fn alpha_cap() {
        let err = alpha(&sh(&[30]), &Caps::default()).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn table_serializes_big_numbers_as_strings() {
        let t = CountTable::build(2, &Caps::default()).unwrap();
        let j = serde_json::to_value(&t).unwrap();
        assert_eq!(j["rows"][1]["alpha"], "2");
        assert_eq!(j["sums"][1][1], "2");
        let back: CountTable = serde_json::from_value(j).unwrap();
        assert_eq!(back, t);
    }
}
