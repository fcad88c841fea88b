use std::collections::HashMap;

use nalgebra::Vector3;
use serde::Serialize;

use super::{CellLabel, WorkspaceCell, WorkspaceModel};

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

type CellKey = (u32, [u32; 3]);

pub(super) fn leaf_index(model: &WorkspaceModel) -> HashMap<CellKey, usize> {
    model
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.depth, c.index), i))
        .collect()
}

/// Leaf covering the cell `(depth, index)`, if that cell is a leaf or lies
/// inside a coarser leaf. `None` when the region is subdivided further.
pub(super) fn covering_leaf(
    leaves: &HashMap<CellKey, usize>,
    depth: u32,
    index: [u32; 3],
) -> Option<usize> {
    (0..=depth).rev().find_map(|d| {
        let shift = depth - d;
        leaves.get(&(d, index.map(|i| i >> shift))).copied()
    })
}

/// Face neighbour of `index` at `depth` along `axis`, if inside the grid.
pub(super) fn face_neighbor(
    depth: u32,
    index: [u32; 3],
    axis: usize,
    forward: bool,
) -> Option<[u32; 3]> {
    let n = 1u32 << depth;
    let mut out = index;
    if forward {
        out[axis] = index[axis].checked_add(1).filter(|&i| i < n)?;
    } else {
        out[axis] = index[axis].checked_sub(1)?;
    }
    Some(out)
}

/// Labels the face-connected components of the Inside cells. Cells of
/// different depths are adjacent when their faces overlap. Component ids
/// follow the Morton order of each component's first cell.
pub fn t_connected_regions(mut model: WorkspaceModel) -> WorkspaceModel {
    let leaves = leaf_index(&model);
    let inside: Vec<usize> = (0..model.cells.len())
        .filter(|&i| model.cells[i].label == CellLabel::Inside)
        .collect();
    let mut sets = DisjointSet::new(model.cells.len());
    for &i in &inside {
        let cell = &model.cells[i];
        // Finer neighbours find this cell through their own coarser lookup.
        for axis in 0..3 {
            for forward in [false, true] {
                let Some(nidx) = face_neighbor(cell.depth, cell.index, axis, forward) else {
                    continue;
                };
                if let Some(j) = covering_leaf(&leaves, cell.depth, nidx) {
                    if model.cells[j].label == CellLabel::Inside {
                        sets.union(i, j);
                    }
                }
            }
        }
    }

    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut sizes: Vec<f64> = Vec::new();
    for cell in model.cells.iter_mut() {
        cell.component_id = None;
    }
    for &i in &inside {
        let root = sets.find(i);
        let next = ids.len();
        let id = *ids.entry(root).or_insert(next);
        if id == sizes.len() {
            sizes.push(0.0);
        }
        sizes[id] += model.cells[i].volume();
        model.cells[i].component_id = Some(id);
    }
    model.components = sizes.len();
    model.largest_component = sizes
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (id, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((id, v)),
        })
        .map(|(id, _)| id);
    model
}

/// Largest axis-aligned cube made of Inside cells, measured on the finest
/// lattice of the octree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InscribedCube {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
    /// Edge in lattice cells.
    pub cells: u32,
}

impl InscribedCube {
    pub fn volume(&self) -> f64 {
        (self.max - self.min).product()
    }
}

pub fn largest_inscribed_cube(model: &WorkspaceModel) -> Option<InscribedCube> {
    let inside: Vec<&WorkspaceCell> = model.inside_cells().collect();
    if inside.is_empty() {
        return None;
    }
    let d = model.max_depth;
    // Rasterize into the lattice box spanned by the Inside cells only.
    let mut lo = [u32::MAX; 3];
    let mut hi = [0u32; 3];
    for cell in &inside {
        for k in 0..3 {
            let (a, b) = cell.lattice_range(d, k);
            lo[k] = lo[k].min(a);
            hi[k] = hi[k].max(b);
        }
    }
    let dims = [0, 1, 2].map(|k| (hi[k] - lo[k]) as usize);
    let at = |x: usize, y: usize, z: usize| (z * dims[1] + y) * dims[0] + x;
    let mut grid = vec![false; dims[0] * dims[1] * dims[2]];
    for cell in &inside {
        let r = [0, 1, 2].map(|k| {
            let (a, b) = cell.lattice_range(d, k);
            ((a - lo[k]) as usize, (b - lo[k]) as usize)
        });
        for z in r[2].0..r[2].1 {
            for y in r[1].0..r[1].1 {
                for x in r[0].0..r[0].1 {
                    grid[at(x, y, z)] = true;
                }
            }
        }
    }

    // side[x,y,z]: edge of the largest cube with its max corner at voxel (x,y,z).
    let mut side = vec![0u32; grid.len()];
    let mut best = (0u32, [0usize; 3]);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = at(x, y, z);
                if !grid[i] {
                    continue;
                }
                let s = if x == 0 || y == 0 || z == 0 {
                    1
                } else {
                    1 + [
                        side[at(x - 1, y, z)],
                        side[at(x, y - 1, z)],
                        side[at(x, y, z - 1)],
                        side[at(x - 1, y - 1, z)],
                        side[at(x - 1, y, z - 1)],
                        side[at(x, y - 1, z - 1)],
                        side[at(x - 1, y - 1, z - 1)],
                    ]
                    .into_iter()
                    .min()
                    .unwrap_or(0)
                };
                side[i] = s;
                if s > best.0 {
                    best = (s, [x, y, z]);
                }
            }
        }
    }
    let (s, top) = best;
    let n = f64::from(1u32 << d);
    let size = model.bounds.size();
    let coord = |k: usize, lattice: usize| model.bounds.min[k] + size[k] * lattice as f64 / n;
    let min = Vector3::from_fn(|k, _| coord(k, lo[k] as usize + top[k] + 1 - s as usize));
    let max = Vector3::from_fn(|k, _| coord(k, lo[k] as usize + top[k] + 1));
    Some(InscribedCube { min, max, cells: s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DesignParameters;
    use crate::workspace::{Aabb, FeasibilitySpec};

    fn cell(depth: u32, index: [u32; 3], label: CellLabel, bounds: &Aabb) -> WorkspaceCell {
        let n = f64::from(1u32 << depth);
        let half = bounds.size() / (2.0 * n);
        let center =
            Vector3::from_fn(|k, _| bounds.min[k] + (2.0 * f64::from(index[k]) + 1.0) * half[k]);
        WorkspaceCell {
            center,
            half_extents: half,
            depth,
            index,
            label,
            component_id: None,
        }
    }

    /// Uniform depth-`d` model whose Inside cells are given by `inside`.
    fn synthetic(d: u32, inside: impl Fn([u32; 3]) -> bool) -> WorkspaceModel {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
        let n = 1u32 << d;
        let mut cells = Vec::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let label = if inside([x, y, z]) {
                        CellLabel::Inside
                    } else {
                        CellLabel::Outside
                    };
                    cells.push(cell(d, [x, y, z], label, &bounds));
                }
            }
        }
        let volume_lower = cells
            .iter()
            .filter(|c| c.label == CellLabel::Inside)
            .map(|c| c.volume())
            .sum();
        WorkspaceModel {
            cells,
            bounds,
            max_depth: d,
            volume_lower,
            volume_upper: volume_lower,
            components: 0,
            largest_component: None,
            params: DesignParameters::canonical(1.0).unwrap(),
            spec: FeasibilitySpec::default(),
        }
    }

    #[test]
    fn empty_model_has_no_components() {
        let model = t_connected_regions(synthetic(3, |_| false));
        assert_eq!(model.components, 0);
        assert_eq!(model.largest_component, None);
        assert!(largest_inscribed_cube(&model).is_none());
    }

    #[test]
    fn two_disjoint_blocks() {
        let model = t_connected_regions(synthetic(3, |[x, y, z]| {
            (x < 2 && y < 2 && z < 2) || (x >= 4 && y >= 3 && z >= 5)
        }));
        assert_eq!(model.components, 2);
        // second block holds 4*5*3 = 60 cells against 8
        let big = model.largest_component.unwrap();
        let count = model
            .cells
            .iter()
            .filter(|c| c.component_id == Some(big))
            .count();
        assert_eq!(count, 60);
    }

    #[test]
    fn diagonal_contact_does_not_connect() {
        let model = t_connected_regions(synthetic(3, |i| i == [1, 1, 1] || i == [2, 2, 2]));
        assert_eq!(model.components, 2);
        let model = t_connected_regions(synthetic(3, |i| i == [1, 1, 1] || i == [2, 1, 1]));
        assert_eq!(model.components, 1);
    }

    #[test]
    fn cells_of_different_depth_connect_across_faces() {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
        // coarse Inside cell at depth 1 (x in [0, 0.5)) next to a fine one at depth 2
        let mut model = synthetic(2, |_| false);
        model.cells.retain(|c| c.index[0] >= 2);
        model
            .cells
            .push(cell(1, [0, 0, 0], CellLabel::Inside, &bounds));
        model
            .cells
            .push(cell(1, [0, 1, 0], CellLabel::Outside, &bounds));
        model
            .cells
            .push(cell(1, [0, 0, 1], CellLabel::Outside, &bounds));
        model
            .cells
            .push(cell(1, [0, 1, 1], CellLabel::Outside, &bounds));
        for c in model.cells.iter_mut() {
            if c.depth == 2 && c.index == [2, 1, 0] {
                c.label = CellLabel::Inside;
            }
            if c.depth == 2 && c.index == [3, 3, 3] {
                c.label = CellLabel::Inside;
            }
        }
        let model = t_connected_regions(model);
        assert_eq!(model.components, 2);
        let coarse = model
            .cells
            .iter()
            .find(|c| c.depth == 1 && c.label == CellLabel::Inside)
            .unwrap();
        let fine = model
            .cells
            .iter()
            .find(|c| c.depth == 2 && c.index == [2, 1, 0])
            .unwrap();
        assert_eq!(coarse.component_id, fine.component_id);
    }

    #[test]
    fn inscribed_cube_in_synthetic_block() {
        // 5x3x6 block of cells at depth 3 fits a cube of 3 cells
        let model = synthetic(3, |[x, y, z]| {
            (1..6).contains(&x) && (2..5).contains(&y) && z < 6
        });
        let cube = largest_inscribed_cube(&model).unwrap();
        assert_eq!(cube.cells, 3);
        let edge = 3.0 / 8.0;
        assert!((cube.volume() - edge * edge * edge).abs() < 1e-15);
        assert!(cube.min.y >= 2.0 / 8.0 - 1e-15 && cube.max.y <= 5.0 / 8.0 + 1e-15);
    }
}
