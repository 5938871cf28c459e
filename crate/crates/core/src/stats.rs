//! HOLC grade by cluster-group contingency tables and the chi-square test of
//! independence.

use serde::Serialize;

use crate::clustering::DbscanLabeling;
use crate::error::{Error, Result};
use crate::polygon::HolcGrade;
pub use crate::special::chi_square_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ClusterGroup {
    /// The cluster with the most members.
    Cluster1,
    /// Every other cluster, pooled.
    Other,
}

impl ClusterGroup {
    pub fn label(&self) -> &'static str {
        match self {
            ClusterGroup::Cluster1 => "Cluster 1",
            ClusterGroup::Other => "Other Clusters",
        }
    }
}

/// Per-point group: the largest cluster (lowest id on ties) versus the rest.
/// Noise points map to `None`.
pub fn group_clusters(labeling: &DbscanLabeling) -> Result<Vec<Option<ClusterGroup>>> {
    let sizes = labeling.cluster_sizes();
    let largest = sizes.iter().enumerate().max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia))).map(|(i, _)| i).ok_or(Error::NoClusters)?;
    Ok(labeling.assignment().iter().map(|a| a.map(|c| if c == largest { ClusterGroup::Cluster1 } else { ClusterGroup::Other })).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Records left out because they fell outside every graded polygon.
    pub ungraded: u64,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::InvalidParameter("contingency table shape does not match its labels".into()));
        }
        let t = ContingencyTable { row_labels, col_labels, counts, ungraded: 0 };
        if t.total() == 0 {
            return Err(Error::EmptyTable { ungraded: 0 });
        }
        Ok(t)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_labels.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<u64> {
        let i = self.row_labels.iter().position(|r| r == row)?;
        let j = self.col_labels.iter().position(|c| c == col)?;
        Some(self.counts[i][j])
    }
}

/// 4x2 grade-by-group count table. Ungraded records are tallied separately.
pub fn contingency(records: impl IntoIterator<Item = (Option<HolcGrade>, ClusterGroup)>) -> Result<ContingencyTable> {
    let mut counts = vec![vec![0u64; 2]; HolcGrade::ALL.len()];
    let mut ungraded = 0u64;
    for (grade, group) in records {
        match grade {
            Some(g) => counts[g.index()][group as usize] += 1,
            None => ungraded += 1,
        }
    }
    let table = ContingencyTable {
        row_labels: HolcGrade::ALL.iter().map(|g| g.as_str().to_string()).collect(),
        col_labels: vec![ClusterGroup::Cluster1.label().into(), ClusterGroup::Other.label().into()],
        counts,
        ungraded,
    };
    if table.total() == 0 {
        return Err(Error::EmptyTable { ungraded: ungraded as usize });
    }
    Ok(table)
}

/// Column-wise percentages: `cell / column total * 100`, indexed [row][col].
pub fn percent_breakdown(table: &ContingencyTable) -> Result<Vec<Vec<f64>>> {
    let col_totals = table.col_totals();
    if let Some(j) = col_totals.iter().position(|t| *t == 0) {
        return Err(Error::ZeroColumnTotal(table.col_labels[j].clone()));
    }
    Ok(table.counts.iter().map(|row| row.iter().zip(&col_totals).map(|(c, t)| *c as f64 / *t as f64 * 100.0).collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub pruned_rows: Vec<String>,
    pub pruned_cols: Vec<String>,
    /// Expected counts of the pruned table.
    pub expected: Vec<Vec<f64>>,
    /// Set when some expected count is below 5.
    pub low_expected_counts: bool,
}

/// Pearson chi-square test of independence, without continuity correction.
/// All-zero rows and columns are removed before computing degrees of freedom.
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquareResult> {
    let row_totals = table.row_totals();
    let col_totals = table.col_totals();
    let keep_rows: Vec<usize> = (0..row_totals.len()).filter(|&i| row_totals[i] > 0).collect();
    let keep_cols: Vec<usize> = (0..col_totals.len()).filter(|&j| col_totals[j] > 0).collect();
    let pruned_rows = (0..row_totals.len()).filter(|i| row_totals[*i] == 0).map(|i| table.row_labels[i].clone()).collect();
    let pruned_cols = (0..col_totals.len()).filter(|j| col_totals[*j] == 0).map(|j| table.col_labels[j].clone()).collect();
    if keep_rows.len() < 2 || keep_cols.len() < 2 {
        return Err(Error::TableTooSmall { rows: keep_rows.len(), cols: keep_cols.len() });
    }

    let total = table.total() as f64;
    let mut statistic = 0.0;
    let mut expected = Vec::with_capacity(keep_rows.len());
    for &i in &keep_rows {
        let mut row = Vec::with_capacity(keep_cols.len());
        for &j in &keep_cols {
            let e = row_totals[i] as f64 * col_totals[j] as f64 / total;
            let diff = table.counts[i][j] as f64 - e;
            statistic += diff * diff / e;
            row.push(e);
        }
        expected.push(row);
    }
    let low_expected_counts = expected.iter().flatten().any(|e| *e < 5.0);
    if low_expected_counts {
        log::warn!("chi-square: some expected counts are below 5; the approximation may be poor");
    }
    let df = ((keep_rows.len() - 1) * (keep_cols.len() - 1)) as u32;
    Ok(ChiSquareResult { statistic, df, p_value: chi_square_sf(statistic, df), pruned_rows, pruned_cols, expected, low_expected_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Role;

    fn labeling_with_sizes(sizes: &[usize]) -> DbscanLabeling {
        let mut a = vec![];
        for (c, n) in sizes.iter().enumerate() {
            a.extend(std::iter::repeat_n(Some(c), *n));
        }
        a.push(None);
        let roles = a.iter().map(|x| if x.is_some() { Role::Core } else { Role::Noise }).collect();
        DbscanLabeling::from_parts(a, roles).unwrap()
    }

    fn table(counts: Vec<Vec<u64>>) -> ContingencyTable {
        let rows = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..counts[0].len()).map(|j| format!("c{j}")).collect();
        ContingencyTable::new(rows, cols, counts).unwrap()
    }

    #[test]
    fn largest_cluster_is_cluster1() {
        let g = group_clusters(&labeling_with_sizes(&[500, 30, 20])).unwrap();
        assert_eq!(g[0], Some(ClusterGroup::Cluster1));
        assert_eq!(g[500], Some(ClusterGroup::Other));
        assert_eq!(g[550], None);

        let g = group_clusters(&labeling_with_sizes(&[5, 9])).unwrap();
        assert_eq!(g[0], Some(ClusterGroup::Other));
        assert_eq!(g[5], Some(ClusterGroup::Cluster1));
    }

    #[test]
    fn single_cluster_and_ties() {
        let g = group_clusters(&labeling_with_sizes(&[7])).unwrap();
        assert!(g[..7].iter().all(|x| *x == Some(ClusterGroup::Cluster1)));
        let g = group_clusters(&labeling_with_sizes(&[50, 50])).unwrap();
        assert_eq!(g[0], Some(ClusterGroup::Cluster1));
        assert_eq!(g[50], Some(ClusterGroup::Other));
        let noise = DbscanLabeling::from_parts(vec![None], vec![Role::Noise]).unwrap();
        assert!(matches!(group_clusters(&noise), Err(Error::NoClusters)));
    }

    #[test]
    fn contingency_counts() {
        use ClusterGroup::*;
        use HolcGrade::*;
        let t = contingency(vec![(Some(D), Cluster1), (Some(D), Cluster1), (Some(B), Other), (None, Other)]).unwrap();
        assert_eq!(t.get("D", "Cluster 1"), Some(2));
        assert_eq!(t.get("B", "Other Clusters"), Some(1));
        assert_eq!(t.total(), 3);
        assert_eq!(t.ungraded, 1);

        let err = contingency(vec![(None, Cluster1), (None, Other)]).unwrap_err();
        assert!(matches!(err, Error::EmptyTable { ungraded: 2 }));
    }

    #[test]
    fn percentages() {
        let t = table(vec![vec![1, 0], vec![1, 0], vec![1, 4], vec![1, 0]]);
        let p = percent_breakdown(&t).unwrap();
        assert_eq!(p.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![25.0; 4]);
        assert_eq!(p.iter().map(|r| r[1]).collect::<Vec<_>>(), vec![0.0, 0.0, 100.0, 0.0]);
        let z = table(vec![vec![1, 0], vec![2, 0]]);
        assert!(matches!(percent_breakdown(&z), Err(Error::ZeroColumnTotal(_))));
    }

    #[test]
    fn identical_rows_give_zero_statistic() {
        let r = chi_square(&table(vec![vec![5, 7], vec![5, 7], vec![5, 7]])).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn two_by_two_hand_value() {
        // Expected counts are all 15, so the statistic is 4 * 25 / 15.
        let r = chi_square(&table(vec![vec![10, 20], vec![20, 10]])).unwrap();
        assert!((r.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.p_value - 0.009_823_274_507_519_246).abs() < 1e-10);
        assert!(!r.low_expected_counts);
    }

    #[test]
    fn empty_row_pruned() {
        let r = chi_square(&table(vec![vec![0, 0], vec![30, 0], vec![50, 8], vec![20, 0]])).unwrap();
        assert_eq!(r.df, 2);
        assert_eq!(r.pruned_rows, vec!["r0".to_string()]);
        assert!(r.low_expected_counts);
        assert!(matches!(chi_square(&table(vec![vec![3, 0], vec![4, 0]])), Err(Error::TableTooSmall { rows: 2, cols: 1 })));
    }

    #[test]
    fn expected_preserves_margins() {
        let t = table(vec![vec![12, 3], vec![7, 9], vec![1, 22], vec![40, 5]]);
        let r = chi_square(&t).unwrap();
        for (i, row) in r.expected.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - t.row_totals()[i] as f64).abs() < 1e-9);
        }
        for j in 0..2 {
            let s: f64 = r.expected.iter().map(|row| row[j]).sum();
            assert!((s - t.col_totals()[j] as f64).abs() < 1e-9);
        }
    }
}
