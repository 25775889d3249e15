//! Convergence statistics across independent runs and Wilcoxon rank-sum
//! comparisons between optimizers.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::de::VariantId;

/// Samples with at most this many values in total and no ties use the exact
/// null distribution.
pub const EXACT_MAX_TOTAL: usize = 14;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("run set for {0} has no traces")]
    NoTraces(VariantId),
    #[error("trace of length 0 in run set for {0}")]
    EmptyTrace(VariantId),
    #[error("trace lengths differ: {0}")]
    LengthMismatch(String),
    #[error("need at least {needed} run sets, got {got}")]
    TooFewRunSets { needed: usize, got: usize },
    #[error("evaluation index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("exact distribution unavailable: {0}")]
    ExactUnavailable(String),
    #[error("non-finite value in sample")]
    NonFinite,
}

/// All best-so-far traces of one (variant, scenario) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    pub variant: VariantId,
    pub scenario: u32,
    pub traces: Vec<Vec<f64>>,
}

impl RunSet {
    pub fn new(variant: VariantId, scenario: u32, traces: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if traces.is_empty() {
            return Err(StatsError::NoTraces(variant));
        }
        if traces.iter().any(Vec::is_empty) {
            return Err(StatsError::EmptyTrace(variant));
        }
        Ok(Self {
            variant,
            scenario,
            traces,
        })
    }

    /// Length every trace is padded to.
    pub fn len(&self) -> usize {
        self.traces.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Traces extended to `len` by repeating their last value.
    pub fn padded(&self, len: usize) -> Vec<Vec<f64>> {
        self.traces
            .iter()
            .map(|t| {
                let mut p = t.clone();
                let last = *t.last().expect("nonempty trace");
                p.resize(len.max(t.len()), last);
                p
            })
            .collect()
    }

    /// Value of every run at 1-based evaluation `index` (after padding).
    pub fn values_at(&self, index: usize) -> Result<Vec<f64>, StatsError> {
        let len = self.len();
        if index == 0 || index > len {
            return Err(StatsError::IndexOutOfRange { index, len });
        }
        Ok(self
            .traces
            .iter()
            .map(|t| *t.get(index - 1).unwrap_or_else(|| t.last().expect("nonempty")))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    /// Sample standard deviation (n - 1); zeros for a single run.
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub single_run: bool,
}

/// Pointwise mean, std and min over the padded traces. Values are sorted per
/// index before summation so the result does not depend on trace order.
pub fn aggregate(runset: &RunSet) -> Aggregate {
    let len = runset.len();
    let traces = runset.padded(len);
    let n = traces.len() as f64;
    let single_run = traces.len() == 1;
    if single_run {
        log::warn!(
            "{} scenario {}: single run, std reported as zero",
            runset.variant,
            runset.scenario
        );
    }
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    let mut min = Vec::with_capacity(len);
    let mut column = vec![0.0; traces.len()];
    for t in 0..len {
        for (c, tr) in column.iter_mut().zip(&traces) {
            *c = tr[t];
        }
        column.sort_by(f64::total_cmp);
        let m = column.iter().sum::<f64>() / n;
        let var = if single_run {
            0.0
        } else {
            column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
        };
        mean.push(m);
        std.push(var.sqrt());
        min.push(column[0]);
    }
    Aggregate {
        mean,
        std,
        min,
        single_run,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// Values of `a` tend to be smaller than those of `b`.
    Less,
    /// Values of `a` tend to be larger than those of `b`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatTestResult {
    /// Rank sum of sample `a` in the pooled sample (midranks for ties).
    pub statistic: f64,
    pub p_value: f64,
    pub significant_at_5pct: bool,
    pub method: Method,
}

impl StatTestResult {
    fn new(statistic: f64, p_value: f64, method: Method) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            significant_at_5pct: p_value < SIGNIFICANCE_LEVEL,
            method,
        }
    }
}

/// 1-based ranks of `values` with ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

struct Pooled {
    w: f64,
    n1: usize,
    n2: usize,
    tie_sizes: Vec<usize>,
}

fn pool(a: &[f64], b: &[f64]) -> Result<Pooled, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_sizes = Vec::new();
    let mut k = 0;
    while k < sorted.len() {
        let mut e = k + 1;
        while e < sorted.len() && sorted[e] == sorted[k] {
            e += 1;
        }
        if e - k > 1 {
            tie_sizes.push(e - k);
        }
        k = e;
    }
    Ok(Pooled {
        w: ranks[..a.len()].iter().sum(),
        n1: a.len(),
        n2: b.len(),
        tie_sizes,
    })
}

/// Number of size-`n1` subsets of {1..n1+n2} for every possible rank sum.
fn rank_sum_counts(n1: usize, n2: usize) -> Vec<u128> {
    let n = n1 + n2;
    let max_sum = n1 * (2 * n - n1 + 1) / 2;
    // counts[k][s]: subsets of size k of the ranks seen so far with sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; n1 + 1];
    counts[0][0] = 1;
    for r in 1..=n {
        for k in (1..=n1.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[k][s] += counts[k - 1][s - r];
            }
        }
    }
    counts.swap_remove(n1)
}

fn exact_p(p: &Pooled, alt: Alternative) -> Result<f64, StatsError> {
    if !p.tie_sizes.is_empty() {
        return Err(StatsError::ExactUnavailable("samples contain ties".into()));
    }
    if p.n1 + p.n2 > 60 {
        return Err(StatsError::ExactUnavailable(format!(
            "{} values is too many",
            p.n1 + p.n2
        )));
    }
    let counts = rank_sum_counts(p.n1, p.n2);
    let w = p.w as usize;
    let total: u128 = counts.iter().sum();
    let le: u128 = counts[..=w].iter().sum();
    let ge: u128 = counts[w..].iter().sum();
    let p = match alt {
        Alternative::TwoSided => (2 * le.min(ge)) as f64 / total as f64,
        Alternative::Less => le as f64 / total as f64,
        Alternative::Greater => ge as f64 / total as f64,
    };
    Ok(p.min(1.0))
}

fn normal_p(p: &Pooled, alt: Alternative) -> f64 {
    let (n1, n2) = (p.n1 as f64, p.n2 as f64);
    let n = n1 + n2;
    let mu = n1 * (n + 1.0) / 2.0;
    let ties: f64 = p.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if !(var > 0.0) {
        return 1.0;
    }
    let sd = var.sqrt();
    let phi = Normal::standard();
    match alt {
        Alternative::TwoSided => {
            let z = ((p.w - mu).abs() - 0.5).max(0.0) / sd;
            2.0 * phi.sf(z)
        }
        Alternative::Less => phi.cdf((p.w - mu + 0.5) / sd),
        Alternative::Greater => phi.sf((p.w - mu - 0.5) / sd),
    }
}

/// Two-sided Wilcoxon rank-sum test.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<StatTestResult, StatsError> {
    wilcoxon_rank_sum_with(a, b, Alternative::TwoSided)
}

/// Exact null distribution when `|a| + |b| ≤ 14` and there are no ties,
/// otherwise the normal approximation with tie and continuity corrections.
pub fn wilcoxon_rank_sum_with(a: &[f64], b: &[f64], alt: Alternative) -> Result<StatTestResult, StatsError> {
    let p = pool(a, b)?;
    let method = if p.n1 + p.n2 <= EXACT_MAX_TOTAL && p.tie_sizes.is_empty() {
        Method::Exact
    } else {
        Method::NormalApproximation
    };
    wilcoxon_pooled(&p, alt, method)
}

/// Same test with the method forced. `Exact` fails on tied samples.
pub fn wilcoxon_rank_sum_using(
    a: &[f64],
    b: &[f64],
    alt: Alternative,
    method: Method,
) -> Result<StatTestResult, StatsError> {
    wilcoxon_pooled(&pool(a, b)?, alt, method)
}

fn wilcoxon_pooled(p: &Pooled, alt: Alternative, method: Method) -> Result<StatTestResult, StatsError> {
    let value = match method {
        Method::Exact => exact_p(p, alt)?,
        Method::NormalApproximation => normal_p(p, alt),
    };
    Ok(StatTestResult::new(p.w, value, method))
}

/// Pairwise tests between run sets of one scenario on the values at a common
/// evaluation index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonMatrix {
    pub variants: Vec<VariantId>,
    pub scenario: u32,
    /// 1-based evaluation index the values were taken at.
    pub at_eval: usize,
    /// `results[i][j]` tests variant i (sample a) against variant j.
    pub results: Vec<Vec<StatTestResult>>,
    /// Median value per variant at `at_eval`.
    pub medians: Vec<f64>,
    pub sample_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub variant: VariantId,
    /// Variants it is significantly better (lower) than.
    pub wins: usize,
    /// Variants significantly better than it.
    pub losses: usize,
    pub median: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// All-pairs comparison at `at_eval` (1-based; `None` means the common full
/// length).
pub fn pairwise_comparison_matrix(runsets: &[RunSet], at_eval: Option<usize>) -> Result<ComparisonMatrix, StatsError> {
    if runsets.len() < 2 {
        return Err(StatsError::TooFewRunSets {
            needed: 2,
            got: runsets.len(),
        });
    }
    let len = runsets[0].len();
    if let Some(bad) = runsets.iter().find(|r| r.len() != len) {
        return Err(StatsError::LengthMismatch(format!(
            "{} has {} evaluations, {} has {}",
            runsets[0].variant,
            len,
            bad.variant,
            bad.len()
        )));
    }
    let at = at_eval.unwrap_or(len);
    let values: Vec<Vec<f64>> = runsets.iter().map(|r| r.values_at(at)).collect::<Result<_, _>>()?;
    let results = values
        .iter()
        .map(|a| {
            values
                .iter()
                .map(|b| wilcoxon_rank_sum(a, b))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonMatrix {
        variants: runsets.iter().map(|r| r.variant).collect(),
        scenario: runsets[0].scenario,
        at_eval: at,
        results,
        medians: values.iter().map(|v| median(v)).collect(),
        sample_sizes: values.iter().map(Vec::len).collect(),
    })
}

impl ComparisonMatrix {
    pub fn size(&self) -> usize {
        self.variants.len()
    }

    pub fn p_value(&self, i: usize, j: usize) -> f64 {
        self.results[i][j].p_value
    }

    /// True when i is significantly better (smaller values) than j.
    pub fn beats(&self, i: usize, j: usize) -> bool {
        let r = &self.results[i][j];
        let n_i = self.sample_sizes[i] as f64;
        let n = n_i + self.sample_sizes[j] as f64;
        r.significant_at_5pct && r.statistic < n_i * (n + 1.0) / 2.0
    }

    /// Per-variant significance counts, best first (most wins, then fewest
    /// losses, then lowest median, then name).
    pub fn summary(&self) -> Vec<VariantSummary> {
        let n = self.size();
        let mut out: Vec<VariantSummary> = (0..n)
            .map(|i| VariantSummary {
                variant: self.variants[i],
                wins: (0..n).filter(|&j| self.beats(i, j)).count(),
                losses: (0..n).filter(|&j| self.beats(j, i)).count(),
                median: self.medians[i],
            })
            .collect();
        out.sort_by(|a, b| {
            b.wins
                .cmp(&a.wins)
                .then(a.losses.cmp(&b.losses))
                .then(a.median.total_cmp(&b.median))
                .then(a.variant.cmp(&b.variant))
        });
        out
    }

    /// Variants no other variant is significantly better than.
    pub fn never_outperformed(&self) -> Vec<VariantId> {
        (0..self.size())
            .filter(|&i| (0..self.size()).all(|j| !self.beats(j, i)))
            .map(|i| self.variants[i])
            .collect()
    }

    fn grid_csv(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut out = String::from("variant");
        for v in &self.variants {
            out.push(',');
            out.push_str(v.name());
        }
        out.push('\n');
        for i in 0..self.size() {
            out.push_str(self.variants[i].name());
            for j in 0..self.size() {
                out.push(',');
                out.push_str(&cell(i, j));
            }
            out.push('\n');
        }
        out
    }

    /// Variants × variants p-values.
    pub fn p_value_csv(&self) -> String {
        self.grid_csv(|i, j| self.p_value(i, j).to_string())
    }

    /// Variants × variants, 1 where the pair differs at the 5% level.
    pub fn significance_csv(&self) -> String {
        self.grid_csv(|i, j| u8::from(self.results[i][j].significant_at_5pct).to_string())
    }
}
