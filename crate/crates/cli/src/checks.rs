//! Monotone-convergence checks on error columns.

use crate::table::Cell;

/// Columns whose entries all lie below this are treated as exact.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Every entry strictly below the previous one.
    #[default]
    Strict,
    /// Last entry below a quarter of the first.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub column: String,
    pub passed: bool,
    /// Row indices that violate the check.
    pub offending: Vec<usize>,
}

pub fn check_decreasing(column: &str, cells: &[Cell], strictness: Strictness) -> CheckOutcome {
    let values: Vec<Option<f64>> = cells.iter().map(|c| c.value().filter(|v| v.is_finite())).collect();
    let mut offending: Vec<usize> = values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i).collect();
    if offending.is_empty() {
        let vs: Vec<f64> = values.iter().map(|v| v.unwrap()).collect();
        let exact = vs.iter().all(|v| v.abs() <= ROUNDOFF_FLOOR);
        if !exact {
            match strictness {
                Strictness::Strict => {
                    for i in 1..vs.len() {
                        if vs[i] >= vs[i - 1] {
                            offending.extend([i - 1, i]);
                        }
                    }
                    offending.dedup();
                }
                Strictness::Relaxed => {
                    if let (Some(first), Some(last)) = (vs.first(), vs.last()) {
                        if !(*last < first / 4.0) {
                            offending.extend([0, vs.len() - 1]);
                        }
                    }
                }
            }
        }
    }
    CheckOutcome { column: column.to_string(), passed: offending.is_empty(), offending }
}
