use std::collections::HashMap;
use std::io::{self, Write};

use serde::Serialize;

use super::connectivity::{covering_leaf, face_neighbor, leaf_index};
use super::{
    largest_inscribed_cube, Aabb, CellLabel, FeasibilitySpec, InscribedCube, SectionGrid,
    WorkspaceModel,
};

/// Fixed float formatting shared by every text output: 17 significant
/// digits in scientific notation, lowercase `nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.16e}")
    }
}

/// One square of the exported surface, as lattice corners in
/// counter-clockwise order seen from outside.
type Quad = [[u32; 3]; 4];

fn quad(axis: usize, plane: u32, u: (u32, u32), v: (u32, u32), outward_positive: bool) -> Quad {
    let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
    let corner = |a: u32, b: u32| {
        let mut c = [0u32; 3];
        c[axis] = plane;
        c[ua] = a;
        c[va] = b;
        c
    };
    let q = [
        corner(u.0, v.0),
        corner(u.1, v.0),
        corner(u.1, v.1),
        corner(u.0, v.1),
    ];
    if outward_positive {
        q
    } else {
        [q[0], q[3], q[2], q[1]]
    }
}

struct Surface<'a> {
    model: &'a WorkspaceModel,
    leaves: HashMap<(u32, [u32; 3]), usize>,
    quads: Vec<Quad>,
}

impl Surface<'_> {
    /// Face of the region `(depth, index)` that touches a cell lying on
    /// its `-axis` side (`forward`) or `+axis` side.
    fn face_of(&self, depth: u32, index: [u32; 3], axis: usize, forward: bool) -> Quad {
        let shift = self.model.max_depth - depth;
        let span = |k: usize| (index[k] << shift, (index[k] + 1) << shift);
        let (lo, hi) = span(axis);
        let plane = if forward { lo } else { hi };
        quad(
            axis,
            plane,
            span((axis + 1) % 3),
            span((axis + 2) % 3),
            forward,
        )
    }

    /// Emits the parts of an Inside cell's face that border non-Inside
    /// space, descending into finer neighbours where needed.
    fn visit(&mut self, depth: u32, neighbor: [u32; 3], axis: usize, forward: bool) {
        match covering_leaf(&self.leaves, depth, neighbor) {
            Some(j) => {
                if self.model.cells[j].label != CellLabel::Inside {
                    let q = self.face_of(depth, neighbor, axis, forward);
                    self.quads.push(q);
                }
            }
            None if depth < self.model.max_depth => {
                let near = if forward { 0 } else { 1 };
                for a in 0..2 {
                    for b in 0..2 {
                        let mut child = neighbor.map(|i| 2 * i);
                        child[axis] += near;
                        child[(axis + 1) % 3] += a;
                        child[(axis + 2) % 3] += b;
                        self.visit(depth + 1, child, axis, forward);
                    }
                }
            }
            None => {}
        }
    }
}

fn boundary_quads(model: &WorkspaceModel) -> Vec<Quad> {
    let mut surface = Surface {
        model,
        leaves: leaf_index(model),
        quads: Vec::new(),
    };
    for cell in model.inside_cells() {
        for axis in 0..3 {
            for forward in [false, true] {
                match face_neighbor(cell.depth, cell.index, axis, forward) {
                    Some(n) => surface.visit(cell.depth, n, axis, forward),
                    None => {
                        // On the edge of the bounds: the cell's own face.
                        let shift = model.max_depth - cell.depth;
                        let span =
                            |k: usize| (cell.index[k] << shift, (cell.index[k] + 1) << shift);
                        let (lo, hi) = span(axis);
                        let plane = if forward { hi } else { lo };
                        surface.quads.push(quad(
                            axis,
                            plane,
                            span((axis + 1) % 3),
                            span((axis + 2) % 3),
                            forward,
                        ));
                    }
                }
            }
        }
    }
    surface.quads
}

/// ASCII PLY of the faces of Inside cells that do not touch another
/// Inside cell. Vertices are shared between faces.
pub fn write_ply<W: Write>(model: &WorkspaceModel, mut out: W) -> io::Result<()> {
    let quads = boundary_quads(model);
    let mut index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices: Vec<[u32; 3]> = Vec::new();
    let faces: Vec<[usize; 4]> = quads
        .iter()
        .map(|q| {
            q.map(|corner| {
                *index.entry(corner).or_insert_with(|| {
                    vertices.push(corner);
                    vertices.len() - 1
                })
            })
        })
        .collect();

    let n = f64::from(1u32 << model.max_depth);
    let size = model.bounds.size();
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(
        out,
        "comment orthokin workspace, max depth {}",
        model.max_depth
    )?;
    writeln!(out, "element vertex {}", vertices.len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element face {}", faces.len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for v in &vertices {
        let p: Vec<String> = (0..3)
            .map(|k| format_float(model.bounds.min[k] + size[k] * f64::from(v[k]) / n))
            .collect();
        writeln!(out, "{}", p.join(" "))?;
    }
    for f in &faces {
        writeln!(out, "4 {} {} {} {}", f[0], f[1], f[2], f[3])?;
    }
    Ok(())
}

/// Header `axis,offset,resolution`, one line with those values, then one
/// line of comma-separated 0/1 samples per row of the grid.
pub fn write_section_csv<W: Write>(section: &SectionGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "axis,offset,resolution")?;
    writeln!(
        out,
        "{},{},{}",
        section.axis,
        format_float(section.offset),
        section.resolution
    )?;
    for row in section.values.chunks(section.resolution.max(1)) {
        let line: Vec<&str> = row.iter().map(|v| if *v { "1" } else { "0" }).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Machine-readable digest of a workspace model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceSummary {
    pub bounds: Aabb,
    pub max_depth: u32,
    pub volume_lower: f64,
    pub volume_upper: f64,
    pub components: usize,
    pub largest_component: Option<usize>,
    pub inside_cells: usize,
    pub boundary_cells: usize,
    pub outside_cells: usize,
    pub inscribed_cube: Option<InscribedCube>,
    /// Per-leg `[min, max]`; `None` when the design has no joint limits.
    pub joint_limits: Option<[[f64; 2]; 3]>,
    pub spec: FeasibilitySpec,
}

impl WorkspaceSummary {
    pub fn new(model: &WorkspaceModel) -> Self {
        let params = &model.params;
        Self {
            bounds: model.bounds,
            max_depth: model.max_depth,
            volume_lower: model.volume_lower,
            volume_upper: model.volume_upper,
            components: model.components,
            largest_component: model.largest_component,
            inside_cells: model.count(CellLabel::Inside),
            boundary_cells: model.count(CellLabel::Boundary),
            outside_cells: model.count(CellLabel::Outside),
            inscribed_cube: largest_inscribed_cube(model),
            joint_limits: params
                .has_joint_limits()
                .then(|| params.joint_limits.map(|r| [r.min, r.max])),
            spec: model.spec,
        }
    }
}
