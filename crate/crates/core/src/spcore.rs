//! Strict partitions, shifted and doubled diagrams, and standard tableau counts.
//!
//! A strict partition `λ` gives the shifted diagram `S(λ)`, whose row `i`
//! (1-based) occupies columns `i..i+λ_i-1`. The doubled diagram `D(λ)` glues
//! `S(λ)` to its transpose shifted one step down; as an ordinary partition it
//! has Frobenius coordinates `(λ_1-1, .., λ_l-1 | λ_1, .., λ_l)` and `2n` cells.
//! Its profile in Russian coordinates lives on the integer lattice with valleys
//! at the contents of addable cells and peaks at contents of removable cells.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest size accepted by the exhaustive tableau counter.
pub const SYT_SEARCH_LIMIT: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct StrictPartition {
    parts: Vec<u32>,
}

impl StrictPartition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!("{parts:?} has a zero part")));
        }
        if parts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidPartition(format!("{parts:?} is not strictly decreasing")));
        }
        Ok(Self { parts })
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn n(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn last_part(&self) -> Option<u32> {
        self.parts.last().copied()
    }

    /// Membership in `SP_n^+`, i.e. `n - l` even.
    pub fn is_even_class(&self) -> bool {
        (self.n() as usize - self.len()).is_multiple_of(2)
    }

    /// Cells of the shifted diagram as (row, column), 1-based.
    pub fn shifted_cells(&self) -> impl Iterator<Item = BoxPosition> + '_ {
        self.parts.iter().enumerate().flat_map(|(r, &len)| {
            let i = r as u32 + 1;
            (i..i + len).map(move |j| BoxPosition { row: i, col: j })
        })
    }

    /// `λ` with one part removed at the end when that part equals 1.
    pub fn drop_unit_tail(&self) -> Option<Self> {
        if self.last_part() == Some(1) {
            Some(Self { parts: self.parts[..self.len() - 1].to_vec() })
        } else {
            None
        }
    }

    /// Candidate obtained by adding one cell to row `row` (0-based; `row == len` opens a new row).
    fn grow_row(&self, row: usize) -> Vec<u32> {
        let mut parts = self.parts.clone();
        if row == parts.len() {
            parts.push(1);
        } else {
            parts[row] += 1;
        }
        parts
    }

    fn shrink_row(&self, row: usize) -> Vec<u32> {
        let mut parts = self.parts.clone();
        parts[row] -= 1;
        if parts[row] == 0 {
            parts.pop();
        }
        parts
    }

    /// Contains `other` cell-wise.
    pub fn contains(&self, other: &StrictPartition) -> bool {
        other.len() <= self.len() && other.parts.iter().zip(&self.parts).all(|(a, b)| a <= b)
    }
}

impl TryFrom<Vec<u32>> for StrictPartition {
    type Error = Error;
    fn try_from(parts: Vec<u32>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<StrictPartition> for Vec<u32> {
    fn from(p: StrictPartition) -> Self {
        p.parts
    }
}

impl fmt::Display for StrictPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "()");
        }
        let body: Vec<String> = self.parts.iter().map(u32::to_string).collect();
        write!(f, "({})", body.join(","))
    }
}

impl std::str::FromStr for StrictPartition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if inner.is_empty() || inner == "0" {
            return Ok(Self::empty());
        }
        let parts = inner
            .split([',', ' '])
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u32>().map_err(|_| Error::InvalidPartition(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxPosition {
    pub row: u32,
    pub col: u32,
}

impl BoxPosition {
    pub fn content(&self) -> i64 {
        self.col as i64 - self.row as i64
    }
}

/// Strict partitions of `n` in reverse-lexicographic order.
pub fn enumerate_strict_partitions(n: u32) -> Vec<StrictPartition> {
    fn rec(rest: u32, max: u32, acc: &mut Vec<u32>, out: &mut Vec<StrictPartition>) {
        if rest == 0 {
            out.push(StrictPartition { parts: acc.clone() });
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            acc.push(p);
            rec(rest - p, p - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Number of strict partitions of `n`.
pub fn count_strict_partitions(n: u32) -> u64 {
    let n = n as usize;
    let mut q = vec![0u64; n + 1];
    q[0] = 1;
    for part in 1..=n {
        for s in (part..=n).rev() {
            q[s] += q[s - part];
        }
    }
    q[n]
}

/// Ordinary partition as row lengths; the cell set of a Young diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YoungDiagram {
    pub rows: Vec<u32>,
}

impl YoungDiagram {
    pub fn size(&self) -> u32 {
        self.rows.iter().sum()
    }

    pub fn column_len(&self, j: u32) -> u32 {
        self.rows.iter().take_while(|&&r| r > j).count() as u32
    }

    /// Hook length of cell (i, j), 0-based.
    pub fn hook(&self, i: u32, j: u32) -> u32 {
        let arm = self.rows[i as usize] - j - 1;
        let leg = self.column_len(j) - i - 1;
        arm + leg + 1
    }

    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, &len)| (0..len).map(move |j| (i as u32, j)))
    }
}

/// Doubled diagram with its interlacing profile data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubledDiagram {
    #[serde(rename = "parts")]
    pub source: StrictPartition,
    pub valleys: Vec<i64>,
    pub peaks: Vec<i64>,
}

impl DoubledDiagram {
    /// `∫(ω(x) - |x|) dx` in lattice units, where each cell has area 2.
    pub fn area(&self) -> i64 {
        self.valleys.iter().map(|x| x * x).sum::<i64>() - self.peaks.iter().map(|y| y * y).sum::<i64>()
    }

    /// Profile value ω(x) for real x.
    pub fn omega(&self, x: f64) -> f64 {
        // ω(x) = Σ_valleys |x - x_i| - Σ_peaks |x - y_i|
        self.valleys.iter().map(|&v| (x - v as f64).abs()).sum::<f64>()
            - self.peaks.iter().map(|&p| (x - p as f64).abs()).sum::<f64>()
    }
}

/// Cell set of `D(λ)` as an ordinary Young diagram.
pub fn doubled_cells(lambda: &StrictPartition) -> YoungDiagram {
    let l = lambda.len();
    // Frobenius arms λ_i - 1 and legs λ_i: rows i ≤ l have length λ_i - 1 + i,
    // column j ≤ l has length λ_j + j (both 1-based).
    let mut rows: Vec<u32> = lambda.parts().iter().enumerate().map(|(i, &p)| p + i as u32).collect();
    let col_len = |j: usize| lambda.parts()[j - 1] + j as u32;
    let depth = if l == 0 { 0 } else { col_len(1) };
    for i in (l as u32 + 1)..=depth {
        rows.push((1..=l).filter(|&j| col_len(j) >= i).count() as u32);
    }
    YoungDiagram { rows }
}

/// Walks the boundary of a Young diagram in Russian coordinates and returns
/// (valleys, peaks): the contents of addable and removable cells.
pub fn russian_profile(diagram: &YoungDiagram) -> (Vec<i64>, Vec<i64>) {
    // The boundary goes up-right along content k → k+1; the step over (k, k+1)
    // descends exactly when k = ν_i - i for some row i (rows padded with zeros).
    let depth = diagram.rows.len() as i64;
    let width = diagram.rows.first().copied().unwrap_or(0) as i64;
    let descending: std::collections::HashSet<i64> = (0..depth as usize + 3)
        .map(|i| diagram.rows.get(i).copied().unwrap_or(0) as i64 - i as i64 - 1)
        .collect();
    let slope = |k: i64| if descending.contains(&k) { -1 } else { 1 };
    let mut valleys = Vec::new();
    let mut peaks = Vec::new();
    for x in (-depth - 1)..=(width + 1) {
        match (slope(x - 1), slope(x)) {
            (-1, 1) => valleys.push(x),
            (1, -1) => peaks.push(x),
            _ => {}
        }
    }
    (valleys, peaks)
}

/// Profile of the doubled diagram `D(λ)`.
pub fn doubled_profile(lambda: &StrictPartition) -> DoubledDiagram {
    let (valleys, peaks) = russian_profile(&doubled_cells(lambda));
    DoubledDiagram { source: lambda.clone(), valleys, peaks }
}

/// All `μ` with `λ ↗ μ`, each with the content of the added cell.
///
/// Each of the `l+1` rows is tried and the candidate is kept iff it is still strict.
pub fn addable_boxes(lambda: &StrictPartition) -> Vec<(StrictPartition, i64)> {
    (0..=lambda.len())
        .filter_map(|row| {
            let parts = lambda.grow_row(row);
            let content = parts[row] as i64 - 1;
            StrictPartition::new(parts).ok().map(|mu| (mu, content))
        })
        .collect()
}

/// All `μ` with `μ ↗ λ`, each with the content of the removed cell.
pub fn removable_boxes(lambda: &StrictPartition) -> Vec<(StrictPartition, i64)> {
    (0..lambda.len())
        .filter_map(|row| {
            let parts = lambda.shrink_row(row);
            let content = lambda.parts()[row] as i64 - 1;
            StrictPartition::new(parts).ok().map(|mu| (mu, content))
        })
        .collect()
}

/// Counts standard fillings of `S(λ)` by exhaustive search over growth sequences.
pub fn count_syt_bruteforce(lambda: &StrictPartition) -> Result<u64> {
    if lambda.n() > SYT_SEARCH_LIMIT {
        return Err(Error::SizeLimit { what: "tableau search", n: lambda.n() as usize, limit: SYT_SEARCH_LIMIT as usize });
    }
    // Fill 1..n one cell at a time; a cell may receive the next label once its
    // left and upper neighbours in S(λ) are filled.
    let cells: Vec<BoxPosition> = lambda.shifted_cells().collect();
    let index: HashMap<(u32, u32), usize> = cells.iter().enumerate().map(|(k, b)| ((b.row, b.col), k)).collect();
    let preds: Vec<Vec<usize>> = cells
        .iter()
        .map(|b| {
            [(b.row, b.col.wrapping_sub(1)), (b.row.wrapping_sub(1), b.col)]
                .iter()
                .filter_map(|key| index.get(key).copied())
                .collect()
        })
        .collect();
    fn search(filled: &mut Vec<bool>, preds: &[Vec<usize>], remaining: usize) -> u64 {
        if remaining == 0 {
            return 1;
        }
        let mut total = 0;
        for k in 0..filled.len() {
            if !filled[k] && preds[k].iter().all(|&p| filled[p]) {
                filled[k] = true;
                total += search(filled, preds, remaining - 1);
                filled[k] = false;
            }
        }
        total
    }
    let mut filled = vec![false; cells.len()];
    Ok(search(&mut filled, &preds, cells.len()))
}

/// `g_λ = n! / Π h(b)` over the cells of `D(λ)` below the diagonal.
pub fn g_hook(lambda: &StrictPartition) -> Result<BigUint> {
    let d = doubled_cells(lambda);
    let mut denom = BigUint::one();
    for (i, j) in d.cells() {
        if j < i {
            denom *= d.hook(i, j);
        }
    }
    let fact = factorial(lambda.n());
    if &fact % &denom != BigUint::from(0u32) {
        return Err(Error::Internal(format!("hook product does not divide n! for {lambda}")));
    }
    Ok(fact / denom)
}

/// `g_λ` as `u64`; panics only if the value overflows, which needs n far beyond 40.
pub fn g_hook_u64(lambda: &StrictPartition) -> u64 {
    g_hook(lambda).ok().and_then(|g| g.to_u64()).expect("g_λ fits in u64")
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Ordinary partition in non-increasing order.
pub type Partition = Vec<u32>;

/// `(2^{m_2} 3^{m_3} ..) ↦ (2^{m_3} 3^{m_4} ..)`: drop rows of length 2, then the first column.
pub fn sigma_circle(sigma: &[u32]) -> Result<Partition> {
    if sigma.contains(&1) {
        return Err(Error::InvalidPartition(format!("{sigma:?} has a part equal to 1")));
    }
    if sigma.contains(&0) || sigma.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidPartition(format!("{sigma:?} is not a partition")));
    }
    Ok(sigma.iter().filter(|&&p| p > 2).map(|&p| p - 1).collect())
}

/// All ordinary partitions of `n` in reverse-lexicographic order.
pub fn enumerate_partitions(n: u32) -> Vec<Partition> {
    fn rec(rest: u32, max: u32, acc: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(acc.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            acc.push(p);
            rec(rest - p, p, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(parts: &[u32]) -> StrictPartition {
        StrictPartition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_strict_partitions(4), vec![sp(&[4]), sp(&[3, 1])]);
        assert_eq!(enumerate_strict_partitions(0), vec![StrictPartition::empty()]);
        assert_eq!(enumerate_strict_partitions(6), vec![sp(&[6]), sp(&[5, 1]), sp(&[4, 2]), sp(&[3, 2, 1])]);
    }

    #[test]
    fn enumeration_matches_filtered_partitions() {
        for n in 0..=20 {
            let filtered: Vec<StrictPartition> = enumerate_partitions(n)
                .into_iter()
                .filter(|p| p.windows(2).all(|w| w[0] > w[1]))
                .map(|p| sp(&p))
                .collect();
            assert_eq!(enumerate_strict_partitions(n), filtered);
            assert_eq!(count_strict_partitions(n), filtered.len() as u64);
        }
    }

    #[test]
    fn rejects_bad_parts() {
        assert!(StrictPartition::new(vec![2, 2]).is_err());
        assert!(StrictPartition::new(vec![1, 2]).is_err());
        assert!(StrictPartition::new(vec![3, 0]).is_err());
        assert_eq!("(3,1)".parse::<StrictPartition>().unwrap(), sp(&[3, 1]));
    }

    #[test]
    fn doubled_cells_small() {
        assert_eq!(doubled_cells(&sp(&[1])).rows, vec![1, 1]);
        assert_eq!(doubled_cells(&sp(&[2])).rows, vec![2, 1, 1]);
        assert_eq!(doubled_cells(&sp(&[3, 1])).rows, vec![3, 2, 2, 1]);
        assert_eq!(doubled_cells(&StrictPartition::empty()).rows, Vec::<u32>::new());
    }

    #[test]
    fn profile_examples() {
        let d = doubled_profile(&StrictPartition::empty());
        assert_eq!((d.valleys, d.peaks), (vec![0], vec![]));
        let d = doubled_profile(&sp(&[1]));
        assert_eq!((d.valleys.clone(), d.peaks.clone()), (vec![-2, 1], vec![-1]));
        let d = doubled_profile(&sp(&[3, 1]));
        assert_eq!(d.valleys, vec![-4, -2, 1, 3]);
        assert_eq!(d.peaks, vec![-3, -1, 2]);
    }

    #[test]
    fn addable_examples() {
        assert_eq!(addable_boxes(&sp(&[3, 1])), vec![(sp(&[4, 1]), 3), (sp(&[3, 2]), 1)]);
        assert_eq!(addable_boxes(&StrictPartition::empty()), vec![(sp(&[1]), 0)]);
        assert_eq!(addable_boxes(&sp(&[3, 2, 1])), vec![(sp(&[4, 2, 1]), 3)]);
        assert_eq!(addable_boxes(&sp(&[3, 2])), vec![(sp(&[4, 2]), 3), (sp(&[3, 2, 1]), 0)]);
    }

    #[test]
    fn addable_matches_containment_oracle() {
        for n in 0..=12 {
            let bigger = enumerate_strict_partitions(n + 1);
            for lambda in enumerate_strict_partitions(n) {
                let oracle: Vec<StrictPartition> = bigger.iter().filter(|mu| mu.contains(&lambda)).cloned().collect();
                let mut got: Vec<StrictPartition> = addable_boxes(&lambda).into_iter().map(|(mu, _)| mu).collect();
                got.sort();
                let mut want = oracle;
                want.sort();
                assert_eq!(got, want, "λ = {lambda}");
            }
        }
    }

    #[test]
    fn syt_examples() {
        assert_eq!(count_syt_bruteforce(&sp(&[5])).unwrap(), 1);
        assert_eq!(count_syt_bruteforce(&sp(&[3, 1])).unwrap(), 2);
        assert_eq!(count_syt_bruteforce(&sp(&[3, 2])).unwrap(), 2);
        assert!(count_syt_bruteforce(&sp(&[17])).is_err());
    }

    #[test]
    fn hook_matches_search() {
        for n in 0..=9 {
            for lambda in enumerate_strict_partitions(n) {
                assert_eq!(g_hook(&lambda).unwrap(), BigUint::from(count_syt_bruteforce(&lambda).unwrap()), "{lambda}");
            }
        }
    }

    #[test]
    fn path_count_equals_tableau_count() {
        let mut paths: HashMap<StrictPartition, u64> = HashMap::from([(StrictPartition::empty(), 1)]);
        for n in 0..10 {
            let mut next = HashMap::new();
            for (lambda, count) in &paths {
                for (mu, _) in addable_boxes(lambda) {
                    *next.entry(mu).or_insert(0) += count;
                }
            }
            paths = next;
            for (lambda, count) in &paths {
                assert_eq!(*count, g_hook_u64(lambda), "n = {}", n + 1);
            }
        }
    }

    #[test]
    fn sigma_circle_examples() {
        assert_eq!(sigma_circle(&[4, 3, 2, 2]).unwrap(), vec![3, 2]);
        assert_eq!(sigma_circle(&[2, 2, 2]).unwrap(), Vec::<u32>::new());
        assert!(sigma_circle(&[3, 1]).is_err());
    }

    #[test]
    fn sigma_circle_length_identity() {
        for k in 1..=6u32 {
            for sigma in enumerate_partitions(2 * k) {
                if sigma.contains(&1) {
                    continue;
                }
                let circ = sigma_circle(&sigma).unwrap();
                let lhs = 2 * k as i64 - sigma.len() as i64;
                let circ_size: u32 = circ.iter().sum();
                let rhs2 = 2 * k as i64 + circ_size as i64 - circ.len() as i64;
                assert_eq!(2 * lhs, rhs2, "σ = {sigma:?}");
            }
        }
    }
}
