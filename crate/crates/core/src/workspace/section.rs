use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_feasible, WorkspaceError, WorkspaceModel};
use crate::model::CartesianPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two in-plane axes of a section normal to `self`, in increasing
    /// order.
    pub fn plane_axes(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown axis {other:?}, expected x, y or z")),
        }
    }
}

/// Occupancy of a planar slice: `values[i * resolution + j]` is the sample
/// at the `i`-th coordinate of the first in-plane axis and the `j`-th of
/// the second. Samples sit at the centres of a `resolution²` grid over the
/// model bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionGrid {
    pub axis: Axis,
    pub offset: f64,
    pub resolution: usize,
    pub values: Vec<bool>,
}

impl SectionGrid {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.values[i * self.resolution + j]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }
}

pub fn cross_section(
    model: &WorkspaceModel,
    axis: Axis,
    offset: f64,
    resolution: usize,
) -> Result<SectionGrid, WorkspaceError> {
    let k = axis.index();
    let (min, max) = (model.bounds.min[k], model.bounds.max[k]);
    if !(offset >= min && offset <= max) {
        return Err(WorkspaceError::OffsetOutOfBounds { offset, min, max });
    }
    if resolution == 0 {
        return Err(WorkspaceError::InvalidResolution { got: 0, min: 1 });
    }
    let (u, v) = axis.plane_axes();
    let size = model.bounds.size();
    let sample = |axis: usize, i: usize| {
        model.bounds.min[axis] + (i as f64 + 0.5) * size[axis] / resolution as f64
    };
    let values = (0..resolution * resolution)
        .into_par_iter()
        .map(|n| {
            let (i, j) = (n / resolution, n % resolution);
            let mut p = Vector3::zeros();
            p[k] = offset;
            p[u] = sample(u, i);
            p[v] = sample(v, j);
            is_feasible(&CartesianPoint(p), &model.params, &model.spec)
        })
        .collect();
    Ok(SectionGrid {
        axis,
        offset,
        resolution,
        values,
    })
}
