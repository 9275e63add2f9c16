use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

/// Scores with methods as rows and settings as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub methods: Vec<String>,
    pub settings: Vec<String>,
    /// `scores[method][setting]`
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(methods: Vec<String>, settings: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != methods.len() {
            return Err(shape_mismatch(
                format!("{} score rows", methods.len()),
                scores.len(),
            ));
        }
        if let Some(row) = scores.iter().find(|r| r.len() != settings.len()) {
            return Err(shape_mismatch(
                format!("{} columns", settings.len()),
                row.len(),
            ));
        }
        if scores.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "score table has missing or non-finite entries".into(),
            ));
        }
        Ok(Self {
            methods,
            settings,
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanRanking {
    /// Mean rank per method, in table order.
    pub mean_ranks: Vec<f64>,
    /// Method indices ordered best first.
    pub order: Vec<usize>,
    /// 1-based final position per method, in table order.
    pub final_rank: Vec<usize>,
}

/// Ranks methods within each setting (best = 1, ties share the average of
/// their positions), averages across settings, and orders by mean rank
/// with ties kept in table order.
pub fn friedman_rank(table: &ScoreTable, higher_is_better: bool) -> Result<FriedmanRanking> {
    let n = table.methods.len();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "ranking needs at least 2 methods".into(),
        ));
    }
    if table.settings.is_empty() {
        return Err(Error::InvalidConfig(
            "ranking needs at least 1 setting".into(),
        ));
    }
    let mut sums = vec![0.0; n];
    for col in 0..table.settings.len() {
        let mut idx: Vec<usize> = (0..n).collect();
        let key = |i: usize| {
            let v = table.scores[i][col];
            if higher_is_better {
                -v
            } else {
                v
            }
        };
        idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && key(idx[end]) == key(idx[start]) {
                end += 1;
            }
            // positions start+1 ..= end share their average
            let rank = (start + 1 + end) as f64 / 2.0;
            for &m in &idx[start..end] {
                sums[m] += rank;
            }
            start = end;
        }
    }
    let cols = table.settings.len() as f64;
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / cols).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]));
    let mut final_rank = vec![0; n];
    for (pos, &m) in order.iter().enumerate() {
        final_rank[m] = pos + 1;
    }
    Ok(FriedmanRanking {
        mean_ranks,
        order,
        final_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(scores: Vec<Vec<f64>>) -> ScoreTable {
        let methods = (0..scores.len()).map(|i| format!("m{i}")).collect();
        let settings = (0..scores[0].len()).map(|i| format!("s{i}")).collect();
        ScoreTable::new(methods, settings, scores).unwrap()
    }

    #[test]
    fn dominant_method() {
        let r =
            friedman_rank(&table(vec![vec![0.9, 0.8, 0.7], vec![0.5, 0.4, 0.3]]), true).unwrap();
        assert_eq!(r.mean_ranks, vec![1.0, 2.0]);
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn first_second_second() {
        let t = table(vec![
            vec![90.0, 70.0, 60.0],
            vec![80.0, 75.0, 65.0],
            vec![70.0, 60.0, 50.0],
        ]);
        let r = friedman_rank(&t, true).unwrap();
        assert!((r.mean_ranks[0] - 5.0 / 3.0).abs() < 1e-12);
        assert!((r.mean_ranks[1] - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.mean_ranks[2], 3.0);
        assert_eq!(r.final_rank, vec![2, 1, 3]);
    }

    #[test]
    fn ties_share_average_rank() {
        let r = friedman_rank(&table(vec![vec![0.5], vec![0.5]]), true).unwrap();
        assert_eq!(r.mean_ranks, vec![1.5, 1.5]);
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn lower_is_better() {
        let r = friedman_rank(&table(vec![vec![0.1], vec![0.3]]), false).unwrap();
        assert_eq!(r.mean_ranks, vec![1.0, 2.0]);
    }

    #[test]
    fn rank_mass_is_conserved() {
        let t = table(vec![
            vec![3.0, 1.0],
            vec![2.0, 5.0],
            vec![9.0, 4.0],
            vec![0.0, 2.0],
        ]);
        let r = friedman_rank(&t, true).unwrap();
        assert!((r.mean_ranks.iter().sum::<f64>() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_and_small_tables() {
        assert!(ScoreTable::new(
            vec!["a".into()],
            vec!["x".into(), "y".into()],
            vec![vec![1.0]]
        )
        .is_err());
        assert!(friedman_rank(&table(vec![vec![1.0]]), true).is_err());
    }
}
