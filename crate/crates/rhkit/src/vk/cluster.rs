//! Cluster decomposition of Van Kampen diagrams.
//!
//! A cluster gathers table cells of one parabolic factor: it is a maximal
//! connected union of such cells without a global cut point.  Cells sharing
//! an edge always belong to the same cluster; a vertex at which the union
//! pinches into otherwise disjoint pieces separates clusters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::vk::map::{CellKind, VKDiagram};
use crate::{RhError, Result};

/// One cluster: the cells it contains, all of its boundary dart cycles, and
/// the exterior one (the cycle facing the outer region of the diagram).
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Parabolic factor index shared by all cells.
    pub factor: usize,
    /// Indices into `VKDiagram::cells`.
    pub cells: Vec<usize>,
    /// Boundary cycles as dart sequences; darts lie in cluster cells and face
    /// non-cluster territory.
    pub boundary_cycles: Vec<Vec<usize>>,
    /// Index into `boundary_cycles` of the exterior cycle.
    pub exterior: usize,
}

impl Cluster {
    pub fn exterior_cycle(&self) -> &[usize] {
        &self.boundary_cycles[self.exterior]
    }
}

/// Compute the unique maximal cluster decomposition of a diagram.
///
/// Verified invariants: every table cell lies in exactly one cluster, no edge
/// belongs to two clusters, and every cluster-boundary edge lies on the
/// diagram boundary or in a relator cell.
pub fn clusters(d: &VKDiagram) -> Result<Vec<Cluster>> {
    let owner = d.dart_cell_table();
    let vertex = d.vertex_table();
    let n_cells = d.num_cells();

    // group table cells by factor
    let mut by_factor: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ci in 0..n_cells {
        if let CellKind::TCell(k) = d.cells()[ci].kind {
            by_factor.entry(k).or_default().push(ci);
        }
    }

    let mut out = Vec::new();
    for (&factor, cells) in &by_factor {
        let in_set: BTreeSet<usize> = cells.iter().copied().collect();
        // edge adjacency between same-factor table cells
        let mut edge_adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &ci in cells {
            edge_adj.entry(ci).or_default();
        }
        for e in 0..d.num_edges() {
            let (a, b) = (owner[2 * e], owner[2 * e + 1]);
            if a != usize::MAX && b != usize::MAX && in_set.contains(&a) && in_set.contains(&b) && a != b {
                edge_adj.get_mut(&a).unwrap().push(b);
                edge_adj.get_mut(&b).unwrap().push(a);
            }
        }
        // vertex incidence of each cell
        let mut cell_verts: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &ci in cells {
            let vs: BTreeSet<usize> = d.cells()[ci].darts.iter().map(|&dd| vertex[dd]).collect();
            cell_verts.insert(ci, vs);
        }
        // vertex-connected components, then recursive splitting at cut points
        let comps = vertex_components(cells, &cell_verts);
        for comp in comps {
            for part in split_at_cut_points(&comp, &edge_adj, &cell_verts) {
                out.push((factor, part));
            }
        }
    }

    // build boundary cycles and verify invariants
    let mut used_edges: BTreeSet<usize> = BTreeSet::new();
    let mut seen_cells: BTreeSet<usize> = BTreeSet::new();
    let mut result = Vec::new();
    for (factor, mut cells) in out {
        cells.sort_unstable();
        for &ci in &cells {
            if !seen_cells.insert(ci) {
                return Err(RhError::Structural(format!("cell {ci} lies in two clusters")));
            }
        }
        let cset: BTreeSet<usize> = cells.iter().copied().collect();
        for e in 0..d.num_edges() {
            let interior = owner[2 * e] != usize::MAX
                && owner[2 * e + 1] != usize::MAX
                && cset.contains(&owner[2 * e])
                && cset.contains(&owner[2 * e + 1]);
            let touches = [owner[2 * e], owner[2 * e + 1]]
                .iter()
                .any(|o| *o != usize::MAX && cset.contains(o));
            if touches && !used_edges.insert(e) {
                return Err(RhError::Structural(format!("edge {e} belongs to two clusters")));
            }
            // inner-edge invariant: a boundary edge of the cluster faces the
            // outer region or a relator cell, never another table cell
            if touches && !interior {
                for &side in &[owner[2 * e], owner[2 * e + 1]] {
                    if side != usize::MAX && !cset.contains(&side) {
                        if let CellKind::TCell(_) = d.cells()[side].kind {
                            return Err(RhError::Structural(format!(
                                "cluster boundary edge {e} faces another table cell"
                            )));
                        }
                    }
                }
            }
        }
        let boundary_cycles = boundary_cycles(d, &cset, &owner)?;
        let exterior = exterior_cycle(d, &cset, &owner, &boundary_cycles)?;
        result.push(Cluster { factor, cells, boundary_cycles, exterior });
    }
    result.sort_by(|a, b| a.cells.cmp(&b.cells));
    Ok(result)
}

fn vertex_components(
    cells: &[usize],
    cell_verts: &BTreeMap<usize, BTreeSet<usize>>,
) -> Vec<Vec<usize>> {
    let mut unvisited: BTreeSet<usize> = cells.iter().copied().collect();
    let mut comps = Vec::new();
    while let Some(&start) = unvisited.iter().next() {
        let mut comp = vec![start];
        unvisited.remove(&start);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let vs = &cell_verts[&c];
            let adjacent: Vec<usize> = unvisited
                .iter()
                .copied()
                .filter(|o| !vs.is_disjoint(&cell_verts[o]))
                .collect();
            for o in adjacent {
                unvisited.remove(&o);
                comp.push(o);
                queue.push_back(o);
            }
        }
        comps.push(comp);
    }
    comps
}

/// Split a vertex-connected set of cells into maximal pieces without a global
/// cut point.  A vertex `v` is a cut point if the cells fall apart when
/// connectivity through `v` alone is disallowed.
fn split_at_cut_points(
    comp: &[usize],
    edge_adj: &BTreeMap<usize, Vec<usize>>,
    cell_verts: &BTreeMap<usize, BTreeSet<usize>>,
) -> Vec<Vec<usize>> {
    if comp.len() <= 1 {
        return vec![comp.to_vec()];
    }
    let verts: BTreeSet<usize> = comp.iter().flat_map(|c| cell_verts[c].iter().copied()).collect();
    for &v in &verts {
        let parts = components_avoiding(comp, v, edge_adj, cell_verts);
        if parts.len() > 1 {
            let mut out = Vec::new();
            for p in parts {
                out.extend(split_at_cut_points(&p, edge_adj, cell_verts));
            }
            return out;
        }
    }
    vec![comp.to_vec()]
}

fn components_avoiding(
    comp: &[usize],
    v: usize,
    edge_adj: &BTreeMap<usize, Vec<usize>>,
    cell_verts: &BTreeMap<usize, BTreeSet<usize>>,
) -> Vec<Vec<usize>> {
    let in_comp: BTreeSet<usize> = comp.iter().copied().collect();
    let mut unvisited = in_comp.clone();
    let mut parts = Vec::new();
    while let Some(&start) = unvisited.iter().next() {
        let mut part = vec![start];
        unvisited.remove(&start);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            // connected if sharing an edge, or sharing any vertex other than v
            let mut step = Vec::new();
            for o in unvisited.iter().copied() {
                let share_edge = edge_adj[&c].contains(&o);
                let share_other_vertex = cell_verts[&c]
                    .intersection(&cell_verts[&o])
                    .any(|&w| w != v);
                if share_edge || share_other_vertex {
                    step.push(o);
                }
            }
            for o in step {
                unvisited.remove(&o);
                part.push(o);
                queue.push_back(o);
            }
        }
        parts.push(part);
    }
    parts
}

/// Boundary darts of the cluster, grouped into cycles by the
/// turn-left-until-boundary walk.
fn boundary_cycles(
    d: &VKDiagram,
    cset: &BTreeSet<usize>,
    owner: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let in_cluster = |dd: usize| owner[dd] != usize::MAX && cset.contains(&owner[dd]);
    let mut boundary: BTreeSet<usize> = (0..d.num_edges() * 2)
        .filter(|&dd| in_cluster(dd) && !in_cluster(dd ^ 1))
        .collect();
    let mut cycles = Vec::new();
    while let Some(&start) = boundary.iter().next() {
        let mut cycle = Vec::new();
        let mut dd = start;
        loop {
            if !boundary.remove(&dd) {
                return Err(RhError::Structural("cluster boundary walk failed".into()));
            }
            cycle.push(dd);
            // advance within the face; hop across interior edges
            let mut e = d.face_next(dd);
            let mut guard = 0;
            while in_cluster(e ^ 1) {
                e = d.face_next(e ^ 1);
                guard += 1;
                if guard > d.num_edges() * 2 {
                    return Err(RhError::Structural("cluster boundary walk cycled".into()));
                }
            }
            if e == start {
                break;
            }
            dd = e;
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Identify the exterior boundary cycle: grow the region reachable from the
/// outer face through non-cluster faces; the cycle whose darts face that
/// region is exterior.
fn exterior_cycle(
    d: &VKDiagram,
    cset: &BTreeSet<usize>,
    owner: &[usize],
    cycles: &[Vec<usize>],
) -> Result<usize> {
    // faces: 0..num_cells are cells, num_cells is the outer face
    let nc = d.num_cells();
    let face_of = |dd: usize| if owner[dd] == usize::MAX { nc } else { owner[dd] };
    let mut outside = vec![false; nc + 1];
    outside[nc] = true;
    let mut queue = VecDeque::from([nc]);
    while let Some(f) = queue.pop_front() {
        for e in 0..d.num_edges() {
            let (fa, fb) = (face_of(2 * e), face_of(2 * e + 1));
            for (x, y) in [(fa, fb), (fb, fa)] {
                if x == f && !outside[y] && !(y < nc && cset.contains(&y)) {
                    outside[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    for (i, cyc) in cycles.iter().enumerate() {
        if cyc.iter().any(|&dd| outside[face_of(dd ^ 1)]) {
            return Ok(i);
        }
    }
    Err(RhError::Structural("no exterior boundary cycle found".into()))
}
