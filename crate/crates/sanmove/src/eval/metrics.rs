//! Top-K ranking metrics with a single relevant item.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::data::PAD_LOCATION;
use crate::error::{Error, Result};
use crate::model::{Sample, SanMove};

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

/// 1-based rank of `target` among the real locations `1..scores.len()`.
/// Higher scores rank first; equal scores go to the lower index.
pub fn rank_of(scores: &[f64], target: usize) -> usize {
    let st = scores[target];
    1 + (1..scores.len())
        .filter(|&j| j != target && (scores[j] > st || (scores[j] == st && j < target)))
        .count()
}

/// The `k` best real locations, best first, under the same ordering as [`rank_of`].
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn recall_at_k(rank: usize, k: usize) -> f64 {
    if rank <= k {
        1.0
    } else {
        0.0
    }
}

pub fn ndcg_at_k(rank: usize, k: usize) -> f64 {
    if rank <= k {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub recall_at: BTreeMap<usize, f64>,
    pub ndcg_at: BTreeMap<usize, f64>,
    pub n_examples: usize,
}

impl Metrics {
    /// Means over `ranks` for every cutoff in `ks`.
    pub fn from_ranks(ranks: &[usize], ks: &[usize]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = ranks.len() as f64;
        let mean = |f: fn(usize, usize) -> f64, k: usize| ranks.iter().map(|&r| f(r, k)).sum::<f64>() / n;
        Ok(Self {
            recall_at: ks.iter().map(|&k| (k, mean(recall_at_k, k))).collect(),
            ndcg_at: ks.iter().map(|&k| (k, mean(ndcg_at_k, k))).collect(),
            n_examples: ranks.len(),
        })
    }

    pub fn recall(&self, k: usize) -> f64 {
        self.recall_at[&k]
    }

    pub fn ndcg(&self, k: usize) -> f64 {
        self.ndcg_at[&k]
    }
}

/// Scores over all `N+1` locations (index 0 is ignored) for the location
/// following `sample.recent`.
pub trait Scorer: Sync {
    fn score(&self, sample: &Sample) -> Result<Vec<f64>>;
}

impl Scorer for SanMove {
    fn score(&self, sample: &Sample) -> Result<Vec<f64>> {
        self.score_next(sample)
    }
}

/// Score vector and target of one evaluated query.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreDump {
    pub target: usize,
    pub scores: Vec<f64>,
}

/// Scores every query with a real target, in input order.
pub fn score_queries<S: Scorer + ?Sized>(scorer: &S, queries: &[(Sample, usize)]) -> Result<Vec<ScoreDump>> {
    queries
        .par_iter()
        .filter(|(_, t)| *t != PAD_LOCATION)
        .map(|(s, t)| {
            Ok(ScoreDump {
                target: *t,
                scores: scorer.score(s)?,
            })
        })
        .collect()
}

pub fn metrics_from_dumps(dumps: &[ScoreDump], ks: &[usize]) -> Result<Metrics> {
    let ranks: Vec<usize> = dumps.iter().map(|d| rank_of(&d.scores, d.target)).collect();
    Metrics::from_ranks(&ranks, ks)
}

/// Metrics over all queries whose target is a real location.
pub fn evaluate<S: Scorer + ?Sized>(scorer: &S, queries: &[(Sample, usize)], ks: &[usize]) -> Result<Metrics> {
    Ok(evaluate_with_dumps(scorer, queries, ks)?.0)
}

pub fn evaluate_with_dumps<S: Scorer + ?Sized>(
    scorer: &S,
    queries: &[(Sample, usize)],
    ks: &[usize],
) -> Result<(Metrics, Vec<ScoreDump>)> {
    let dumps = score_queries(scorer, queries)?;
    Ok((metrics_from_dumps(&dumps, ks)?, dumps))
}

/// One labelled row block of the metrics CSV.
pub struct MetricsRow<'a> {
    pub model: &'a str,
    pub mode: &'a str,
    pub metrics: &'a Metrics,
}

/// Columns `model,mode,K,recall,ndcg,n`, one line per cutoff.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "mode", "K", "recall", "ndcg", "n"])
        .map_err(csv_error)?;
    for r in rows {
        for (k, recall) in &r.metrics.recall_at {
            w.write_record([
                r.model.to_string(),
                r.mode.to_string(),
                k.to_string(),
                format!("{recall:.6}"),
                format!("{:.6}", r.metrics.ndcg_at[k]),
                r.metrics.n_examples.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recall_and_ndcg_examples() {
        assert_eq!(recall_at_k(1, 1), 1.0);
        assert_eq!(recall_at_k(6, 5), 0.0);
        assert_eq!(ndcg_at_k(1, 10), 1.0);
        assert!((ndcg_at_k(2, 2) - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((ndcg_at_k(2, 5) - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(11, 10), 0.0);
    }

    #[test]
    fn three_hits_in_ten() {
        let ranks = [1, 3, 5, 6, 7, 20, 9, 8, 100, 6];
        let m = Metrics::from_ranks(&ranks, &DEFAULT_KS).unwrap();
        assert_eq!(m.recall(5), 0.3);
        assert_eq!(m.n_examples, 10);
    }

    #[test]
    fn ties_go_to_lower_index_and_pad_is_ignored() {
        let scores = [100.0, 0.5, 0.5, 0.9, 0.5];
        assert_eq!(rank_of(&scores, 3), 1);
        assert_eq!(rank_of(&scores, 1), 2);
        assert_eq!(rank_of(&scores, 2), 3);
        assert_eq!(rank_of(&scores, 4), 4);
        assert_eq!(top_k(&scores, 10), vec![3, 1, 2, 4]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(Metrics::from_ranks(&[], &DEFAULT_KS).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = Metrics::from_ranks(&[1, 2], &[1, 5]).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(
            &mut buf,
            &[MetricsRow {
                model: "markov",
                mode: "-",
                metrics: &m,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "model,mode,K,recall,ndcg,n\nmarkov,-,1,0.500000,0.500000,2\nmarkov,-,5,1.000000,0.815465,2\n"
        );
    }

    proptest! {
        #[test]
        fn rank_matches_position_in_sorted_list(scores in prop::collection::vec(-3i32..3, 2..30), t in 1usize..30) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let t = 1 + t % (scores.len() - 1);
            let order = top_k(&scores, scores.len());
            prop_assert_eq!(order.iter().position(|&j| j == t).unwrap() + 1, rank_of(&scores, t));
        }

        #[test]
        fn metrics_are_monotone_in_k(ranks in prop::collection::vec(1usize..20, 1..50)) {
            let m = Metrics::from_ranks(&ranks, &[1, 2, 5, 10, 20]).unwrap();
            prop_assert_eq!(m.recall(1), m.ndcg(1));
            let r: Vec<f64> = m.recall_at.values().copied().collect();
            let n: Vec<f64> = m.ndcg_at.values().copied().collect();
            prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(n.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
