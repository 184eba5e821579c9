use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Nominal ratings, one row per item and one column per rater; `None` is a
/// missing rating.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub rows: Vec<Vec<Option<String>>>,
}

impl RatingMatrix {
    pub fn from_rows<T: ToString>(rows: &[Vec<Option<T>>]) -> Self {
        RatingMatrix {
            rows: rows
                .iter()
                .map(|r| r.iter().map(|v| v.as_ref().map(ToString::to_string)).collect())
                .collect(),
        }
    }

    /// Fully observed matrix.
    pub fn complete<T: ToString>(rows: &[Vec<T>]) -> Self {
        RatingMatrix {
            rows: rows
                .iter()
                .map(|r| r.iter().map(|v| Some(v.to_string())).collect())
                .collect(),
        }
    }
}

/// Krippendorff's alpha for nominal data, from the coincidence matrix of
/// all pairable values. Returns 1.0 when only one value is ever used.
pub fn krippendorff_alpha(m: &RatingMatrix) -> Result<f64, MetricError> {
    let mut coincidences: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut pairable = false;
    for (i, row) in m.rows.iter().enumerate() {
        let values: Vec<&str> = row.iter().flatten().map(String::as_str).collect();
        if values.is_empty() {
            return Err(MetricError::UnratedItem(i));
        }
        let mu = values.len();
        if mu < 2 {
            continue;
        }
        pairable = true;
        let w = 1.0 / (mu - 1) as f64;
        for (a, x) in values.iter().enumerate() {
            for (b, y) in values.iter().enumerate() {
                if a != b {
                    *coincidences.entry((x, y)).or_insert(0.0) += w;
                }
            }
        }
    }
    if !pairable {
        return Err(MetricError::NoPairableItems);
    }
    let mut marginals: BTreeMap<&str, f64> = BTreeMap::new();
    let mut observed = 0.0;
    for (&(c, k), &o) in &coincidences {
        *marginals.entry(c).or_insert(0.0) += o;
        if c != k {
            observed += o;
        }
    }
    let n: f64 = marginals.values().sum();
    let mut expected = 0.0;
    for (c, nc) in &marginals {
        for (k, nk) in &marginals {
            if c != k {
                expected += nc * nk;
            }
        }
    }
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}
