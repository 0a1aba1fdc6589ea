use serde::{Deserialize, Serialize};

use super::RoutingError;

/// Minimum separation between two targets; closer pairs are duplicates.
pub const DUPLICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// Unordered target positions to visit.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    targets: Vec<[f64; 2]>,
    bounds: Option<Bounds>,
}

impl Field {
    pub fn new(targets: Vec<[f64; 2]>) -> Result<Self, RoutingError> {
        if targets.len() < 2 {
            return Err(RoutingError::TooFewTargets(targets.len()));
        }
        if let Some(i) = targets
            .iter()
            .position(|t| !t[0].is_finite() || !t[1].is_finite())
        {
            return Err(RoutingError::NonFiniteTarget(i));
        }
        // sort by x so the duplicate scan only compares nearby points
        let mut idx: Vec<usize> = (0..targets.len()).collect();
        idx.sort_by(|&a, &b| targets[a][0].total_cmp(&targets[b][0]));
        for (k, &i) in idx.iter().enumerate() {
            for &j in &idx[k + 1..] {
                if targets[j][0] - targets[i][0] >= DUPLICATE_TOL {
                    break;
                }
                let d = (targets[i][0] - targets[j][0]).hypot(targets[i][1] - targets[j][1]);
                if d < DUPLICATE_TOL {
                    return Err(RoutingError::DuplicateTarget(i.min(j), i.max(j)));
                }
            }
        }
        Ok(Field {
            targets,
            bounds: None,
        })
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn targets(&self) -> &[[f64; 2]] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    /// Explicit bounds if set, otherwise the bounding box of the targets.
    pub fn extent(&self) -> Bounds {
        self.bounds.unwrap_or_else(|| {
            self.targets.iter().fold(
                Bounds {
                    min_x: f64::INFINITY,
                    min_y: f64::INFINITY,
                    max_x: f64::NEG_INFINITY,
                    max_y: f64::NEG_INFINITY,
                },
                |b, t| Bounds {
                    min_x: b.min_x.min(t[0]),
                    min_y: b.min_y.min(t[1]),
                    max_x: b.max_x.max(t[0]),
                    max_y: b.max_y.max(t[1]),
                },
            )
        })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.targets[i], self.targets[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}
