//! Outlier scoring over a set of observed sequences.
//!
//! For a candidate outlier set `B`, the score is the largest MMD² between a
//! remaining sequence `y_j` and the pool of all other remaining sequences.
//! Scores are assembled from a cached matrix of pairwise kernel sums
//! ([`KernelSums`]) so a score costs `O(M²)` arithmetic instead of a fresh
//! `O((Mn)²)` kernel pass.

use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mmd::{combine, Sample, MIN_SAMPLES};

/// Largest admissible number of outliers among `m` sequences, `⌈m/2⌉ - 1`.
pub fn max_outliers(m: usize) -> usize {
    m.div_ceil(2).saturating_sub(1)
}

/// Smallest number of sequences the scoring functions are defined for.
pub const MIN_SEQUENCES: usize = 3;

/// `M` equal-length real-valued sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    seqs: Vec<Vec<f64>>,
}

impl ObservationSet {
    pub fn new(seqs: Vec<Vec<f64>>) -> Result<Self> {
        if seqs.len() < MIN_SEQUENCES {
            return Err(Error::InvalidConfig(format!(
                "need at least {MIN_SEQUENCES} sequences, got {}",
                seqs.len()
            )));
        }
        let n = seqs[0].len();
        for s in &seqs {
            if s.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: s.len() });
            }
            if let Some(&bad) = s.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(bad));
            }
        }
        Ok(Self { seqs })
    }

    pub fn num_sequences(&self) -> usize {
        self.seqs.len()
    }

    /// Common length `n` of the sequences.
    pub fn len(&self) -> usize {
        self.seqs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sequence(&self, i: usize) -> &[f64] {
        &self.seqs[i]
    }

    pub fn sequences(&self) -> &[Vec<f64>] {
        &self.seqs
    }

    /// The `t`-th sample of every sequence.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.seqs.iter().map(|s| s[t]).collect()
    }

    /// The first `n` samples of every sequence.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::LengthMismatch { expected: n, got: self.len() });
        }
        Ok(Self { seqs: self.seqs.iter().map(|s| s[..n].to_vec()).collect() })
    }

    /// Reorder sequences so that new index `k` holds old sequence `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { seqs: perm.iter().map(|&p| self.seqs[p].clone()).collect() }
    }
}

/// A sorted, non-empty set of distinct sequence indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateSet(Vec<usize>);

impl CandidateSet {
    /// Validates that `indices` are distinct, within `0..m`, and leave at
    /// least one sequence outside the set.
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::InvalidCandidate("empty set".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCandidate(format!("duplicate index in {indices:?}")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidCandidate(format!("index {bad} out of range for M={m}")));
        }
        if indices.len() >= m {
            return Err(Error::InvalidCandidate("set covers every sequence".into()));
        }
        Ok(Self(indices))
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Indices in `0..m` outside the set, ascending.
    pub fn complement(&self, m: usize) -> Vec<usize> {
        (0..m).filter(|&i| !self.contains(i)).collect()
    }

    /// Image of the set under the relabelling `i ↦ map[i]`.
    pub fn mapped(&self, map: &[usize]) -> Self {
        let mut v: Vec<usize> = self.0.iter().map(|&i| map[i]).collect();
        v.sort_unstable();
        Self(v)
    }
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

/// Sum of non-negative terms independent of their order: sorted, then added.
fn ordered_sum(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

/// Pairwise kernel sums between `M` growing sequences.
///
/// Holds `W_i = Σ_{a≠b} k(y_i[a], y_i[b])` on the diagonal and
/// `S_ij = Σ_{a,b} k(y_i[a], y_j[b])` off it. Appending one sample to every
/// sequence costs `M²·n` kernel evaluations, so building the sums column by
/// column costs the same as a batch pass and the batch path reuses it.
#[derive(Debug, Clone)]
pub struct KernelSums {
    spec: KernelSpec,
    seqs: Vec<Vec<f64>>,
    pair: Vec<f64>,
    rows: Vec<f64>,
}

impl KernelSums {
    pub fn new(spec: KernelSpec, m: usize) -> Result<Self> {
        if m < MIN_SEQUENCES {
            return Err(Error::InvalidConfig(format!(
                "need at least {MIN_SEQUENCES} sequences, got {m}"
            )));
        }
        Ok(Self { spec, seqs: vec![Vec::new(); m], pair: vec![0.0; m * m], rows: vec![0.0; m * m] })
    }

    pub fn from_observations(spec: KernelSpec, obs: &ObservationSet) -> Result<Self> {
        let mut sums = Self::new(spec, obs.num_sequences())?;
        for seq in &mut sums.seqs {
            seq.reserve(obs.len());
        }
        for t in 0..obs.len() {
            sums.push_column(&obs.column(t))?;
        }
        Ok(sums)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn num_sequences(&self) -> usize {
        self.seqs.len()
    }

    /// Current common sequence length.
    pub fn len(&self) -> usize {
        self.seqs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sequences(&self) -> &[Vec<f64>] {
        &self.seqs
    }

    /// Append one new sample to every sequence.
    pub fn push_column(&mut self, col: &[f64]) -> Result<()> {
        let m = self.num_sequences();
        if col.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: col.len() });
        }
        if let Some(&bad) = col.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        for (i, &x) in col.iter().enumerate() {
            for j in 0..m {
                self.rows[i * m + j] = self.spec.row_sum(x, &self.seqs[j]);
            }
        }
        for i in 0..m {
            self.pair[i * m + i] += 2.0 * self.rows[i * m + i];
            for j in i + 1..m {
                // (r_ij + r_ji) is commutative, keeping S symmetric bit-for-bit.
                let gain = (self.rows[i * m + j] + self.rows[j * m + i])
                    + self.spec.eval_unchecked(col[i], col[j]);
                self.pair[i * m + j] += gain;
                self.pair[j * m + i] += gain;
            }
        }
        for (seq, &v) in self.seqs.iter_mut().zip(col) {
            seq.push(v);
        }
        Ok(())
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.num_sequences() + j]
    }

    /// `W_i`.
    pub fn within(&self, i: usize) -> f64 {
        self.at(i, i)
    }

    /// `S_ij` for `i ≠ j`.
    pub fn cross(&self, i: usize, j: usize) -> f64 {
        debug_assert_ne!(i, j);
        self.at(i, j)
    }

    fn check_scorable(&self) -> Result<()> {
        if self.len() < MIN_SAMPLES {
            return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: self.len() });
        }
        Ok(())
    }

    /// Kernel-sum total over the concatenation of `members`:
    /// `Σ W_i + 2 Σ_{i<i'} S_ii'`.
    fn pooled_total(&self, members: &[usize], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        for (a, &i) in members.iter().enumerate() {
            buf.push(self.within(i));
            for &k in &members[a + 1..] {
                buf.push(2.0 * self.at(i, k));
            }
        }
        ordered_sum(buf)
    }

    /// MMD² between `y_j` and the pool `members \ {j}` given the pool-plus-j
    /// total from [`pooled_total`](Self::pooled_total).
    fn mmd2_leave_one(&self, j: usize, members: &[usize], total: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(members.iter().filter(|&&i| i != j).map(|&i| self.at(j, i)));
        let pool = buf.len();
        let sxy = ordered_sum(buf);
        let wj = self.within(j);
        let syy = total - wj - 2.0 * sxy;
        let n = self.len();
        combine(wj, n, syy, pool * n, sxy)
    }

    /// `MMD²(y_j, concat of y_i for i in pool)`; `pool` must not contain `j`.
    pub fn mmd2_against_pool(&self, j: usize, pool: &[usize]) -> Result<f64> {
        self.check_scorable()?;
        if pool.is_empty() {
            return Err(Error::InvalidCandidate("empty pool".into()));
        }
        if pool.contains(&j) {
            return Err(Error::InvalidCandidate(format!("pool contains {j}")));
        }
        let mut members = pool.to_vec();
        members.push(j);
        members.sort_unstable();
        let mut buf = Vec::new();
        let total = self.pooled_total(&members, &mut buf);
        Ok(self.mmd2_leave_one(j, &members, total, &mut buf))
    }

    fn score_with(&self, b: &CandidateSet, buf: &mut Vec<f64>, buf2: &mut Vec<f64>) -> f64 {
        let rest = b.complement(self.num_sequences());
        let total = self.pooled_total(&rest, buf);
        rest.iter()
            .map(|&j| self.mmd2_leave_one(j, &rest, total, buf2))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The scoring function `G_B`.
    pub fn score(&self, b: &CandidateSet) -> Result<f64> {
        self.check_scorable()?;
        self.check_candidate(b)?;
        Ok(self.score_with(b, &mut Vec::new(), &mut Vec::new()))
    }

    fn check_candidate(&self, b: &CandidateSet) -> Result<()> {
        let m = self.num_sequences();
        if b.indices().iter().any(|&i| i >= m) {
            return Err(Error::InvalidCandidate(format!("{b} out of range for M={m}")));
        }
        if m - b.len() < 2 {
            return Err(Error::InvalidCandidate(format!("{b} leaves fewer than two sequences")));
        }
        Ok(())
    }

    /// Scores of every size-`t` candidate set, in lexicographic order.
    pub fn score_table(&self, t: usize) -> Result<ScoreTable> {
        self.check_scorable()?;
        let m = self.num_sequences();
        let t_max = max_outliers(m);
        if t == 0 || t > t_max {
            return Err(Error::InvalidConfig(format!("set size {t} outside 1..={t_max}")));
        }
        let (mut buf, mut buf2) = (Vec::new(), Vec::new());
        let entries = (0..m)
            .combinations(t)
            .map(|c| {
                let set = CandidateSet(c);
                let score = self.score_with(&set, &mut buf, &mut buf2);
                (set, score)
            })
            .collect();
        ScoreTable::from_scores(t, entries)
    }

    /// Tables for sizes `1..=t_max`.
    pub fn score_tables(&self, t_max: usize) -> Result<Vec<ScoreTable>> {
        (1..=t_max).map(|t| self.score_table(t)).collect()
    }
}

/// All scores of one candidate-set size with the minimiser `𝓘_t*` and the
/// second-smallest score `h_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    size: usize,
    entries: Vec<(CandidateSet, f64)>,
    best: usize,
    second: f64,
}

impl ScoreTable {
    /// Build a table from explicit scores. Ties for the minimum go to the
    /// lexicographically smallest set.
    pub fn from_scores(size: usize, mut entries: Vec<(CandidateSet, f64)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "score table needs at least two candidates, got {}",
                entries.len()
            )));
        }
        if let Some((_, bad)) = entries.iter().find(|(_, s)| s.is_nan()) {
            return Err(Error::NonFinite(*bad));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut best = 0;
        for (k, (_, s)) in entries.iter().enumerate() {
            if *s < entries[best].1 {
                best = k;
            }
        }
        let second = entries
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != best)
            .map(|(_, (_, s))| *s)
            .fold(f64::INFINITY, f64::min);
        Ok(Self { size, entries, best, second })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `𝓘_t*`.
    pub fn best_set(&self) -> &CandidateSet {
        &self.entries[self.best].0
    }

    pub fn best_score(&self) -> f64 {
        self.entries[self.best].1
    }

    /// `h_t`, the smallest score among sets other than the minimiser.
    pub fn second_best(&self) -> f64 {
        self.second
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(CandidateSet, f64)] {
        &self.entries
    }

    pub fn score_of(&self, set: &CandidateSet) -> Option<f64> {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(set))
            .ok()
            .map(|k| self.entries[k].1)
    }
}

/// Concatenation, in ascending index order, of every sequence outside
/// `b ∪ {j}`.
pub fn pooled_complement(obs: &ObservationSet, b: &CandidateSet, j: usize) -> Result<Sample> {
    let m = obs.num_sequences();
    if j >= m {
        return Err(Error::InvalidCandidate(format!("index {j} out of range for M={m}")));
    }
    if b.contains(j) {
        return Err(Error::InvalidCandidate(format!("{j} belongs to {b}")));
    }
    let pooled: Vec<f64> = (0..m)
        .filter(|&i| i != j && !b.contains(i))
        .flat_map(|i| obs.sequence(i).iter().copied())
        .collect();
    if pooled.is_empty() {
        return Err(Error::InvalidCandidate(format!("complement of {b} and {j} is empty")));
    }
    Sample::new(pooled)
}

/// `G_B(Y)`.
pub fn score_g(spec: &KernelSpec, obs: &ObservationSet, b: &CandidateSet) -> Result<f64> {
    KernelSums::from_observations(*spec, obs)?.score(b)
}

/// Score table for candidate sets of size `t`.
pub fn score_table(spec: &KernelSpec, obs: &ObservationSet, t: usize) -> Result<ScoreTable> {
    KernelSums::from_observations(*spec, obs)?.score_table(t)
}
