//! Standard Taguchi orthogonal arrays.
//!
//! The catalog holds the common arrays as literal data. Levels are 1-based
//! everywhere, the way the arrays are printed in handbooks.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OaError {
    #[error("unknown array `{name}` (available: {})", .available.join(", "))]
    UnknownArray {
        name: String,
        available: Vec<&'static str>,
    },
    #[error("no catalog array can host factors with levels {levels:?}")]
    NoFittingArray { levels: Vec<usize> },
    #[error("factor level counts must be >= 2 and at least one factor is required")]
    InvalidFactors,
    #[error("malformed array: {0}")]
    Malformed(String),
}

/// A run-by-column matrix of 1-based level indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalArray {
    name: String,
    column_levels: Vec<usize>,
    rows: Vec<Vec<u8>>,
}

impl OrthogonalArray {
    /// Builds an array from explicit rows. Entries must lie in
    /// `1..=column_levels[j]`; balance and orthogonality are *not* required
    /// here, [`verify`] reports on those.
    pub fn from_rows(
        name: impl Into<String>,
        column_levels: Vec<usize>,
        rows: Vec<Vec<u8>>,
    ) -> Result<Self, OaError> {
        if column_levels.is_empty() || rows.is_empty() {
            return Err(OaError::Malformed("array needs at least one run and column".into()));
        }
        if let Some(l) = column_levels.iter().find(|&&l| l < 2 || l > u8::MAX as usize) {
            return Err(OaError::Malformed(format!("unsupported level count {l}")));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != column_levels.len() {
                return Err(OaError::Malformed(format!(
                    "run {} has {} entries, expected {}",
                    r + 1,
                    row.len(),
                    column_levels.len()
                )));
            }
            for (c, (&v, &l)) in row.iter().zip(&column_levels).enumerate() {
                if v == 0 || v as usize > l {
                    return Err(OaError::Malformed(format!(
                        "entry (run {}, column {}) = {v} outside 1..={l}",
                        r + 1,
                        c + 1
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            column_levels,
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_runs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.column_levels.len()
    }

    pub fn column_levels(&self) -> &[usize] {
        &self.column_levels
    }

    /// Level (1-based) at 0-based `run` and `column`.
    pub fn level(&self, run: usize, column: usize) -> usize {
        self.rows[run][column] as usize
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Writes the array as CSV: `run,c1,c2,...`, one row per run.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["run".to_string()];
        header.extend((1..=self.num_columns()).map(|c| format!("c{c}")));
        w.write_record(&header)?;
        for (r, row) in self.rows.iter().enumerate() {
            let mut rec = vec![(r + 1).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// First-fit column assignment: each factor, in order, takes the
    /// lowest-indexed unused column with a matching level count.
    pub fn assign_columns(&self, factor_levels: &[usize]) -> Option<Vec<usize>> {
        let mut used = vec![false; self.num_columns()];
        let mut out = Vec::with_capacity(factor_levels.len());
        for &levels in factor_levels {
            let col = (0..self.num_columns())
                .find(|&c| !used[c] && self.column_levels[c] == levels)?;
            used[col] = true;
            out.push(col);
        }
        Some(out)
    }
}

impl fmt::Display for OrthogonalArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} runs x {} columns)", self.name, self.num_runs(), self.num_columns())?;
        for (r, row) in self.rows.iter().enumerate() {
            write!(f, "{:>3} |", r + 1)?;
            for v in row {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct CatalogEntry {
    name: &'static str,
    column_levels: &'static [usize],
    rows: &'static [&'static str],
}

const TWO: usize = 2;
const THREE: usize = 3;

static CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "L4",
        column_levels: &[TWO; 3],
        rows: &["111", "122", "212", "221"],
    },
    CatalogEntry {
        name: "L8",
        column_levels: &[TWO; 7],
        rows: &[
            "1111111", "1112222", "1221122", "1222211", "2121212", "2122121", "2211221",
            "2212112",
        ],
    },
    CatalogEntry {
        name: "L9",
        column_levels: &[THREE; 4],
        rows: &["1111", "1222", "1333", "2123", "2231", "2312", "3132", "3213", "3321"],
    },
    CatalogEntry {
        name: "L12",
        column_levels: &[TWO; 11],
        rows: &[
            "11111111111",
            "11111222222",
            "11222111222",
            "12122122112",
            "12212212121",
            "12221221211",
            "21221122121",
            "21212221112",
            "21122212211",
            "22211112212",
            "22121211122",
            "22112121221",
        ],
    },
    CatalogEntry {
        name: "L16",
        column_levels: &[TWO; 15],
        rows: &[
            "111111111111111",
            "111111122222222",
            "111222211112222",
            "111222222221111",
            "122112211221122",
            "122112222112211",
            "122221111222211",
            "122221122111122",
            "212121212121212",
            "212121221212121",
            "212212112122121",
            "212212121211212",
            "221122112211221",
            "221122121122112",
            "221211212212112",
            "221211221121221",
        ],
    },
    CatalogEntry {
        name: "L18",
        column_levels: &[TWO, THREE, THREE, THREE, THREE, THREE, THREE, THREE],
        rows: &[
            "11111111", "11222222", "11333333", "12112233", "12223311", "12331122",
            "13121323", "13232131", "13313212", "21133221", "21211332", "21322113",
            "22123132", "22231213", "22312321", "23132312", "23213123", "23321231",
        ],
    },
    CatalogEntry {
        name: "L27",
        column_levels: &[THREE; 13],
        rows: &[
            "1111111111111",
            "1111222222222",
            "1111333333333",
            "1222111222333",
            "1222222333111",
            "1222333111222",
            "1333111333222",
            "1333222111333",
            "1333333222111",
            "2123123123123",
            "2123231231231",
            "2123312312312",
            "2231123231312",
            "2231231312123",
            "2231312123231",
            "2312123312231",
            "2312231123312",
            "2312312231123",
            "3132132132132",
            "3132213213213",
            "3132321321321",
            "3213132213321",
            "3213213321132",
            "3213321132213",
            "3321132321213",
            "3321213132321",
            "3321321213132",
        ],
    },
];

/// Names of every catalog array, smallest first.
pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

fn materialize(entry: &CatalogEntry) -> OrthogonalArray {
    let rows = entry
        .rows
        .iter()
        .map(|r| r.bytes().map(|b| b - b'0').collect())
        .collect();
    OrthogonalArray::from_rows(entry.name, entry.column_levels.to_vec(), rows)
        .expect("catalog entries are well formed")
}

/// Every catalog array, smallest first.
pub fn catalog() -> Vec<OrthogonalArray> {
    CATALOG.iter().map(materialize).collect()
}

/// Looks up a standard array by name (case-insensitive).
///
/// ```
/// let l9 = robust_doe::oa::lookup("L9").unwrap();
/// assert_eq!((l9.num_runs(), l9.num_columns()), (9, 4));
/// assert!(robust_doe::oa::lookup("L99").is_err());
/// ```
pub fn lookup(name: &str) -> Result<OrthogonalArray, OaError> {
    CATALOG
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name.trim()))
        .map(materialize)
        .ok_or_else(|| OaError::UnknownArray {
            name: name.to_string(),
            available: catalog_names(),
        })
}

/// An array chosen for a factor set, with the column hosting each factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArraySelection {
    pub array: OrthogonalArray,
    /// 0-based column per factor, in factor order.
    pub columns: Vec<usize>,
}

/// Picks the catalog array with the fewest runs that can host every factor.
pub fn select_array(factor_levels: &[usize]) -> Result<ArraySelection, OaError> {
    if factor_levels.is_empty() || factor_levels.iter().any(|&l| l < 2) {
        return Err(OaError::InvalidFactors);
    }
    CATALOG
        .iter()
        .map(materialize)
        .filter_map(|array| {
            array
                .assign_columns(factor_levels)
                .map(|columns| ArraySelection { array, columns })
        })
        .min_by_key(|s| s.array.num_runs())
        .ok_or_else(|| OaError::NoFittingArray {
            levels: factor_levels.to_vec(),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnBalance {
    /// 1-based column.
    pub column: usize,
    pub levels: usize,
    /// Occurrences of each level, index 0 is level 1.
    pub counts: Vec<usize>,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairOrthogonality {
    /// 1-based columns.
    pub columns: (usize, usize),
    pub orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub array: String,
    pub balance: Vec<ColumnBalance>,
    pub pairs: Vec<PairOrthogonality>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations() == 0
    }

    pub fn violations(&self) -> usize {
        self.balance.iter().filter(|b| !b.balanced).count()
            + self.pairs.iter().filter(|p| !p.orthogonal).count()
    }

    pub fn unbalanced_columns(&self) -> Vec<usize> {
        self.balance
            .iter()
            .filter(|b| !b.balanced)
            .map(|b| b.column)
            .collect()
    }
}

/// Checks balance of every column and orthogonality of every column pair.
pub fn verify(oa: &OrthogonalArray) -> VerificationReport {
    let n = oa.num_runs();
    let balance = (0..oa.num_columns())
        .map(|c| {
            let levels = oa.column_levels[c];
            let mut counts = vec![0; levels];
            for row in &oa.rows {
                counts[row[c] as usize - 1] += 1;
            }
            let balanced = n % levels == 0 && counts.iter().all(|&k| k == n / levels);
            ColumnBalance {
                column: c + 1,
                levels,
                counts,
                balanced,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..oa.num_columns() {
        for j in i + 1..oa.num_columns() {
            let (li, lj) = (oa.column_levels[i], oa.column_levels[j]);
            let mut counts = vec![0usize; li * lj];
            for row in &oa.rows {
                counts[(row[i] as usize - 1) * lj + row[j] as usize - 1] += 1;
            }
            let cells = li * lj;
            let orthogonal = n % cells == 0 && counts.iter().all(|&k| k == n / cells);
            pairs.push(PairOrthogonality {
                columns: (i + 1, j + 1),
                orthogonal,
            });
        }
    }

    VerificationReport {
        array: oa.name.clone(),
        balance,
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l9_first_two_columns_are_the_full_factorial() {
        let l9 = lookup("L9").unwrap();
        assert_eq!(l9.num_runs(), 9);
        assert_eq!(l9.column_levels(), &[3, 3, 3, 3]);
        let ab: Vec<(usize, usize)> = (0..9).map(|r| (l9.level(r, 0), l9.level(r, 1))).collect();
        assert_eq!(
            ab,
            vec![(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]
        );
        assert_eq!((l9.level(3, 0), l9.level(3, 1)), (2, 1));
    }

    #[test]
    fn l4_shape() {
        let l4 = lookup("l4").unwrap();
        assert_eq!((l4.num_runs(), l4.num_columns()), (4, 3));
        assert!(l4.column_levels().iter().all(|&l| l == 2));
    }

    #[test]
    fn unknown_array_names_the_catalog() {
        let err = lookup("L99").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("L99") && msg.contains("L27") && msg.contains("L4"), "{msg}");
    }

    #[test]
    fn every_catalog_array_verifies_clean() {
        for oa in catalog() {
            let report = verify(&oa);
            assert!(report.is_clean(), "{} has violations: {report:?}", oa.name());
            assert_eq!(oa.rows().len(), oa.num_runs());
            assert!(oa.rows().iter().all(|r| r.len() == oa.num_columns()));
        }
    }

    #[test]
    fn l18_is_mixed_and_clean() {
        let l18 = lookup("L18").unwrap();
        assert_eq!(l18.column_levels()[0], 2);
        assert_eq!(l18.column_levels()[1..].len(), 7);
        let report = verify(&l18);
        assert!(report.is_clean());
        assert_eq!(report.pairs.len(), 28);
    }

    #[test]
    fn corrupted_entry_fails_balance() {
        let l9 = lookup("L9").unwrap();
        let mut rows = l9.rows().to_vec();
        rows[0][0] = 2;
        let bad = OrthogonalArray::from_rows("L9*", l9.column_levels().to_vec(), rows).unwrap();
        let report = verify(&bad);
        assert_eq!(report.unbalanced_columns(), vec![1]);
        assert_eq!(report.balance[0].counts, vec![2, 4, 3]);
        assert!(!report.is_clean());
    }

    #[test]
    fn out_of_range_entries_are_rejected() {
        assert!(OrthogonalArray::from_rows("x", vec![2, 2], vec![vec![1, 3]]).is_err());
        assert!(OrthogonalArray::from_rows("x", vec![2, 2], vec![vec![0, 1]]).is_err());
        assert!(OrthogonalArray::from_rows("x", vec![2, 2], vec![vec![1]]).is_err());
    }

    #[test]
    fn selection_examples() {
        let s = select_array(&[3, 3]).unwrap();
        assert_eq!((s.array.name(), s.columns.clone()), ("L9", vec![0, 1]));

        let s = select_array(&[2]).unwrap();
        assert_eq!((s.array.name(), s.columns.clone()), ("L4", vec![0]));

        // a two-level factor forces the mixed array
        let s = select_array(&[3, 2, 3]).unwrap();
        assert_eq!((s.array.name(), s.columns.clone()), ("L18", vec![1, 0, 2]));

        let s = select_array(&[2; 4]).unwrap();
        assert_eq!(s.array.name(), "L8");
        let s = select_array(&[3; 5]).unwrap();
        assert_eq!(s.array.name(), "L18");
        let s = select_array(&[3; 13]).unwrap();
        assert_eq!(s.array.name(), "L27");
    }

    #[test]
    fn selection_failures() {
        // largest three-level capacity in the catalog is L27's 13 columns
        let max3 = catalog()
            .iter()
            .map(|a| a.column_levels().iter().filter(|&&l| l == 3).count())
            .max()
            .unwrap();
        assert_eq!(max3, 13);
        assert!(matches!(
            select_array(&[3; 14]),
            Err(OaError::NoFittingArray { .. })
        ));
        assert!(matches!(select_array(&[2, 2, 3, 3, 3]), Err(OaError::NoFittingArray { .. })));
        assert!(matches!(select_array(&[4]), Err(OaError::NoFittingArray { .. })));
        assert_eq!(select_array(&[]), Err(OaError::InvalidFactors));
        assert_eq!(select_array(&[1, 3]), Err(OaError::InvalidFactors));
    }

    #[test]
    fn csv_export_layout() {
        let mut buf = Vec::new();
        lookup("L4").unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "run,c1,c2,c3\n1,1,1,1\n2,1,2,2\n3,2,1,2\n4,2,2,1\n");
    }
}
