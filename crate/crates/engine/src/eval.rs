//! Recall/precision curves per query and their 11-point average.

use std::collections::BTreeMap;
use std::io::Write;

use log::warn;

use crate::config::DescriptorKind;
use crate::error::{EngineError, Result};
use crate::index::Index;
use crate::query::{query_by_id, RankedResult};

pub const RECALL_LEVELS: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// `(recall, precision)` after each relevant hit.
    pub points: Vec<(f64, f64)>,
    /// The ranking ended before every relevant model was retrieved.
    pub truncated: bool,
}

impl PrCurve {
    /// Interpolated precision at recall 0, 0.1, ..., 1: the best precision at
    /// any recall at or above the level, 0 when none is reached.
    pub fn interpolated(&self) -> [f64; RECALL_LEVELS] {
        std::array::from_fn(|i| {
            let level = i as f64 / 10.0;
            self.points
                .iter()
                .filter(|(r, _)| *r >= level - 1e-12)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
    }
}

/// Scores a ranking against `labels`. The query's own hit is dropped unless
/// `keep_self`, and then it also does not count as a relevant model.
pub fn precision_recall(
    ranked: &RankedResult,
    labels: &BTreeMap<String, String>,
    query_class: &str,
    keep_self: bool,
) -> Result<PrCurve> {
    let counts = |id: &str| keep_self || id != ranked.query_id;
    let total = labels.iter().filter(|(id, c)| c.as_str() == query_class && counts(id)).count();
    if total == 0 {
        return Err(EngineError::NoRelevantModels(query_class.to_string()));
    }
    let mut points = Vec::new();
    let mut retrieved = 0usize;
    for hit in ranked.hits.iter().filter(|h| counts(&h.model_id)) {
        retrieved += 1;
        if labels.get(&hit.model_id).is_some_and(|c| c == query_class) {
            points.push(((points.len() + 1) as f64 / total as f64, (points.len() + 1) as f64 / retrieved as f64));
        }
    }
    let truncated = points.len() < total;
    Ok(PrCurve { points, truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindSummary {
    pub kind: DescriptorKind,
    pub queries: usize,
    pub skipped: usize,
    pub mean_precision: [f64; RECALL_LEVELS],
}

/// Uses every labeled model of each kind as a query against the full index.
pub fn evaluate_all(index: &Index, kinds: &[DescriptorKind], keep_self: bool) -> Result<Vec<KindSummary>> {
    let mut out = Vec::new();
    for &kind in kinds {
        if index.of_kind(kind).next().is_none() {
            return Err(EngineError::KindMismatch(kind));
        }
        let labels: BTreeMap<String, String> = index
            .of_kind(kind)
            .filter_map(|e| e.class_label.clone().map(|c| (e.model_id.clone(), c)))
            .collect();
        let mut sum = [0.0; RECALL_LEVELS];
        let (mut queries, mut skipped) = (0, 0);
        for (id, class) in &labels {
            let ranked = query_by_id(index, id, kind, None)?;
            match precision_recall(&ranked, &labels, class, keep_self) {
                Ok(curve) => {
                    for (s, p) in sum.iter_mut().zip(curve.interpolated()) {
                        *s += p;
                    }
                    queries += 1;
                }
                Err(e) => {
                    warn!("{kind}: skipping query {id}: {e}");
                    skipped += 1;
                }
            }
        }
        if queries == 0 {
            warn!("{kind}: no usable queries");
        }
        let mean_precision = sum.map(|s| if queries > 0 { s / queries as f64 } else { 0.0 });
        out.push(KindSummary { kind, queries, skipped, mean_precision });
    }
    Ok(out)
}

/// CSV with columns `kind,recall,mean_precision`; kinds without any query
/// contribute no rows.
pub fn write_pr_csv<W: Write>(summaries: &[KindSummary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "recall", "mean_precision"])?;
    for s in summaries.iter().filter(|s| s.queries > 0) {
        for (i, p) in s.mean_precision.iter().enumerate() {
            w.write_record([s.kind.as_str(), &format!("{:.1}", i as f64 / 10.0), &format!("{p:.6}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Precision of a random ranking for a class of `class_size` among `total`
/// models, with the query removed.
pub fn random_baseline(class_size: usize, total: usize) -> f64 {
    (class_size - 1) as f64 / (total - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Hit;

    fn ranking(query: &str, ids: &[&str]) -> RankedResult {
        RankedResult {
            query_id: query.into(),
            kind: DescriptorKind::Cli,
            hits: ids
                .iter()
                .enumerate()
                .map(|(i, id)| Hit { model_id: id.to_string(), distance: i as f64 })
                .collect(),
        }
    }

    fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn perfect_ranking() {
        let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let l = labels(&[("a", "x"), ("b", "x"), ("c", "x"), ("d", "x"), ("e", "y"), ("f", "y")]);
        let curve = precision_recall(&ranking("q", &ids), &l, "x", false).unwrap();
        assert_eq!(curve.points, vec![(0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (1.0, 1.0)]);
        assert!(!curve.truncated);
        assert_eq!(curve.interpolated(), [1.0; 11]);
    }

    #[test]
    fn hand_enumerated_ranking() {
        let l = labels(&[("r1", "x"), ("r2", "x"), ("n1", "y"), ("n2", "y")]);
        let curve = precision_recall(&ranking("q", &["n1", "r1", "n2", "r2"]), &l, "x", false).unwrap();
        assert_eq!(curve.points, vec![(0.5, 0.5), (1.0, 0.5)]);
        assert_eq!(curve.interpolated(), [0.5; 11]);
    }

    #[test]
    fn self_match_is_removed_unless_kept() {
        let l = labels(&[("q", "x"), ("r", "x"), ("n", "y")]);
        let ranked = ranking("q", &["q", "n", "r"]);
        let curve = precision_recall(&ranked, &l, "x", false).unwrap();
        assert_eq!(curve.points, vec![(1.0, 0.5)]);
        let kept = precision_recall(&ranked, &l, "x", true).unwrap();
        assert_eq!(kept.points, vec![(0.5, 1.0), (1.0, 2.0 / 3.0)]);
    }

    #[test]
    fn truncation_and_missing_class() {
        let l = labels(&[("a", "x"), ("b", "x"), ("c", "x"), ("n", "y")]);
        let curve = precision_recall(&ranking("q", &["n", "a"]), &l, "x", false).unwrap();
        assert!(curve.truncated);
        assert_eq!(curve.points, vec![(1.0 / 3.0, 0.5)]);
        let interp = curve.interpolated();
        assert_eq!(interp[3], 0.5);
        assert_eq!(interp[4], 0.0);
        let lonely = labels(&[("q", "solo"), ("n", "y")]);
        assert!(matches!(
            precision_recall(&ranking("q", &["q", "n"]), &lonely, "solo", false),
            Err(EngineError::NoRelevantModels(_))
        ));
    }

    #[test]
    fn first_point_precision_is_inverse_rank() {
        let l = labels(&[("r", "x"), ("n1", "y"), ("n2", "y"), ("n3", "y")]);
        for pos in 0..4 {
            let mut ids = vec!["n1", "n2", "n3"];
            ids.insert(pos, "r");
            let curve = precision_recall(&ranking("q", &ids), &l, "x", false).unwrap();
            assert_eq!(curve.points[0].1, 1.0 / (pos + 1) as f64);
        }
    }

    #[test]
    fn baseline_value() {
        assert!((random_baseline(8, 40) - 7.0 / 39.0).abs() < 1e-15);
    }
}
