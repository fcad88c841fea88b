use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use super::{is_feasible, FeasibilitySpec, WorkspaceError};
use crate::model::{CartesianPoint, DesignParameters};

/// Cells shallower than this are always subdivided, even when all probes
/// agree.
pub const MIN_DEPTH: u32 = 2;

/// Subtrees rooted above this depth are built on the rayon pool.
const PARALLEL_DEPTH: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn cube(center: Vector3<f64>, edge: f64) -> Self {
        let h = Vector3::repeat(edge * 0.5);
        Self {
            min: center - h,
            max: center + h,
        }
    }

    pub fn size(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        self.size().product()
    }

    pub fn is_valid(&self) -> bool {
        self.min
            .iter()
            .chain(self.max.iter())
            .all(|v| v.is_finite())
            && (0..3).all(|k| self.min[k] < self.max[k])
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Cube of side `4L` centred on the isotropic point; it covers the
/// intersection of the three solid cylinders of radius `L` the tool point
/// is confined to.
pub fn default_bounds(params: &DesignParameters) -> Result<Aabb, WorkspaceError> {
    let (p, _) = params
        .isotropic_configuration()
        .map_err(|e| WorkspaceError::NoIsotropicPoint(e.to_string()))?;
    Ok(Aabb::cube(p.0, 4.0 * params.leg_length))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLabel {
    Inside,
    Outside,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceCell {
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
    pub depth: u32,
    /// Integer position among the `2^depth` cells per axis at this depth.
    pub index: [u32; 3],
    pub label: CellLabel,
    pub component_id: Option<usize>,
}

impl WorkspaceCell {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.product()
    }

    /// Range `[lo, hi)` the cell covers on the finest lattice of `max_depth`.
    pub fn lattice_range(&self, max_depth: u32, axis: usize) -> (u32, u32) {
        let shift = max_depth - self.depth;
        let lo = self.index[axis] << shift;
        (lo, lo + (1 << shift))
    }
}

/// Leaf cells of the octree in Morton order, with volume bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceModel {
    pub cells: Vec<WorkspaceCell>,
    pub bounds: Aabb,
    pub max_depth: u32,
    pub volume_lower: f64,
    pub volume_upper: f64,
    /// Number of t-connected components; zero until
    /// [`super::t_connected_regions`] has run.
    pub components: usize,
    pub largest_component: Option<usize>,
    pub params: DesignParameters,
    pub spec: FeasibilitySpec,
}

impl WorkspaceModel {
    pub fn count(&self, label: CellLabel) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }

    pub fn inside_cells(&self) -> impl Iterator<Item = &WorkspaceCell> {
        self.cells.iter().filter(|c| c.label == CellLabel::Inside)
    }
}

struct Builder<'a> {
    params: &'a DesignParameters,
    spec: &'a FeasibilitySpec,
    bounds: Aabb,
    max_depth: u32,
}

impl Builder<'_> {
    fn lattice_point(&self, lattice: [u32; 3]) -> CartesianPoint {
        let n = f64::from(1u32 << self.max_depth);
        let size = self.bounds.size();
        CartesianPoint(Vector3::from_fn(|k, _| {
            self.bounds.min[k] + size[k] * f64::from(lattice[k]) / n
        }))
    }

    fn cell_geometry(&self, depth: u32, index: [u32; 3]) -> (Vector3<f64>, Vector3<f64>) {
        let n = f64::from(1u32 << depth);
        let half = self.bounds.size() / (2.0 * n);
        let center = Vector3::from_fn(|k, _| {
            self.bounds.min[k] + (2.0 * f64::from(index[k]) + 1.0) * half[k]
        });
        (center, half)
    }

    fn build(&self, depth: u32, index: [u32; 3]) -> Vec<WorkspaceCell> {
        let (center, half) = self.cell_geometry(depth, index);
        let step = 1u32 << (self.max_depth - depth);
        let base = index.map(|i| i * step);
        let mut inside = 0;
        for corner in 0..8u32 {
            let lattice = [0, 1, 2].map(|k| base[k] + ((corner >> k) & 1) * step);
            inside += usize::from(is_feasible(
                &self.lattice_point(lattice),
                self.params,
                self.spec,
            ));
        }
        inside += usize::from(is_feasible(&CartesianPoint(center), self.params, self.spec));
        let uniform = inside == 0 || inside == 9;

        if (uniform && depth >= MIN_DEPTH) || depth == self.max_depth {
            let label = match inside {
                9 => CellLabel::Inside,
                0 => CellLabel::Outside,
                _ => CellLabel::Boundary,
            };
            return vec![WorkspaceCell {
                center,
                half_extents: half,
                depth,
                index,
                label,
                component_id: None,
            }];
        }

        let child = |octant: u32| {
            let idx = [0, 1, 2].map(|k| 2 * index[k] + ((octant >> k) & 1));
            self.build(depth + 1, idx)
        };
        if depth < PARALLEL_DEPTH {
            (0..8u32)
                .into_par_iter()
                .map(child)
                .collect::<Vec<_>>()
                .concat()
        } else {
            (0..8u32).flat_map(child).collect()
        }
    }
}

/// Recursive eightfold subdivision of `bounds`. A cell whose eight corners
/// and centre agree becomes a leaf once it is at least [`MIN_DEPTH`] deep;
/// disagreeing cells are split until `max_depth` and then labelled
/// [`CellLabel::Boundary`].
///
/// The result does not depend on how the rayon pool schedules subtrees.
pub fn build_octree(
    params: &DesignParameters,
    spec: &FeasibilitySpec,
    bounds: Aabb,
    max_depth: u32,
) -> Result<WorkspaceModel, WorkspaceError> {
    if !(3..=12).contains(&max_depth) {
        return Err(WorkspaceError::InvalidDepth(max_depth));
    }
    if !bounds.is_valid() {
        return Err(WorkspaceError::EmptyBounds);
    }
    spec.validate()?;
    let builder = Builder {
        params,
        spec,
        bounds,
        max_depth,
    };
    let cells = builder.build(0, [0, 0, 0]);
    let volume_of = |label| -> f64 {
        cells
            .iter()
            .filter(|c| c.label == label)
            .map(WorkspaceCell::volume)
            .sum()
    };
    let volume_lower = volume_of(CellLabel::Inside);
    let volume_upper = volume_lower + volume_of(CellLabel::Boundary);
    Ok(WorkspaceModel {
        cells,
        bounds,
        max_depth,
        volume_lower,
        volume_upper,
        components: 0,
        largest_component: None,
        params: params.clone(),
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> DesignParameters {
        DesignParameters::canonical(1.0).unwrap()
    }

    #[test]
    fn rejects_bad_arguments() {
        let params = canonical();
        let spec = FeasibilitySpec::default();
        let bounds = default_bounds(&params).unwrap();
        assert_eq!(
            build_octree(&params, &spec, bounds, 2),
            Err(WorkspaceError::InvalidDepth(2))
        );
        assert_eq!(
            build_octree(&params, &spec, bounds, 13),
            Err(WorkspaceError::InvalidDepth(13))
        );
        let flat = Aabb::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0));
        assert_eq!(
            build_octree(&params, &spec, flat, 4),
            Err(WorkspaceError::EmptyBounds)
        );
    }

    #[test]
    fn cells_tile_the_bounds() {
        let params = canonical();
        let bounds = default_bounds(&params).unwrap();
        let model = build_octree(&params, &FeasibilitySpec::default(), bounds, 5).unwrap();
        let total: f64 = model.cells.iter().map(WorkspaceCell::volume).sum();
        assert!((total - bounds.volume()).abs() < 1e-9);
        assert!(model.volume_lower <= model.volume_upper);
        assert!(model
            .cells
            .iter()
            .all(|c| c.depth >= MIN_DEPTH && c.depth <= 5));
        assert!(model.count(CellLabel::Inside) > 0);
    }

    #[test]
    fn inside_cells_only_where_all_probes_pass() {
        let params = canonical();
        let spec = FeasibilitySpec::default();
        let bounds = default_bounds(&params).unwrap();
        let model = build_octree(&params, &spec, bounds, 5).unwrap();
        for cell in &model.cells {
            let ok = is_feasible(&CartesianPoint(cell.center), &params, &spec);
            match cell.label {
                CellLabel::Inside => assert!(ok),
                CellLabel::Outside => assert!(!ok),
                CellLabel::Boundary => assert_eq!(cell.depth, 5),
            }
        }
    }

    #[test]
    fn cells_are_in_morton_order() {
        let params = canonical();
        let bounds = default_bounds(&params).unwrap();
        let model = build_octree(&params, &FeasibilitySpec::default(), bounds, 4).unwrap();
        let key = |c: &WorkspaceCell| {
            let shift = 4 - c.depth;
            let mut code = 0u64;
            for bit in (0..4).rev() {
                for k in (0..3).rev() {
                    code = (code << 1) | u64::from(((c.index[k] << shift) >> bit) & 1);
                }
            }
            code
        };
        let codes: Vec<u64> = model.cells.iter().map(key).collect();
        assert!(codes.windows(2).all(|w| w[0] < w[1]));
    }
}
