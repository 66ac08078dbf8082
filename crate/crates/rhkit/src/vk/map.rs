//! Half-edge (rotation system) representation of Van Kampen diagrams over a
//! relative presentation.
//!
//! A diagram is a planar combinatorial map: darts come in opposite pairs
//! `2k, 2k+1`, every dart lies in exactly one face orbit, and one face is the
//! distinguished outer face.  Inner faces are 2-cells labeled either by a
//! relator (`RCell`) or by a length-≤-3 relation of one parabolic factor
//! (`TCell`).  Planarity is certified by the Euler formula `V - E + F = 2`
//! together with connectivity.

use std::collections::VecDeque;

use crate::group::{FactorElement, FreeProduct, Letter, RelPresentation};
use crate::{RhError, Result};

/// Kind of an inner cell: relator cell, or multiplication-table cell of the
/// parabolic factor with the given free-product index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellKind {
    RCell,
    TCell(usize),
}

/// One inner face: its kind and its dart cycle (counterclockwise).
#[derive(Debug, Clone)]
pub struct Cell {
    pub kind: CellKind,
    pub darts: Vec<usize>,
}

/// A Van Kampen diagram as a labeled planar map.
///
/// `labels[d]` is the letter read along dart `d`; opposite darts carry inverse
/// letters.  `cells` are the inner faces; `outer` is the dart cycle of the
/// outer face.  The boundary word of the diagram is the outer cycle read
/// backwards with inverted labels, so a single cell with word `w` has
/// boundary word `w`.
#[derive(Debug, Clone)]
pub struct VKDiagram {
    labels: Vec<Letter>,
    cells: Vec<Cell>,
    outer: Vec<usize>,
}

/// A template from which diagrams are assembled: a cell kind plus its
/// boundary word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellTemplate {
    pub kind: CellKind,
    pub word: Vec<Letter>,
}

pub(crate) fn letter_inverse(fp: &FreeProduct, l: &Letter) -> Result<Letter> {
    Ok(match l {
        Letter::Gen(g) => Letter::Gen(g.inverse()),
        Letter::Par(fe) => Letter::Par(fp.syllable_inverse(fe)?),
    })
}

/// Stable byte encoding of a letter, used by canonical forms.
fn letter_code(l: &Letter) -> String {
    match l {
        Letter::Gen(g) => format!("g{:?}{}", g.sign(), g.name()),
        Letter::Par(fe) => format!("p{}:{:?}", fe.factor, fe.value),
    }
}

impl VKDiagram {
    /// The diagram consisting of a single cell with the given boundary word.
    pub fn single_cell(kind: CellKind, word: Vec<Letter>, fp: &FreeProduct) -> Result<VKDiagram> {
        if word.is_empty() {
            return Err(RhError::MalformedInput("cell word must be nonempty".into()));
        }
        let n = word.len();
        let mut labels = Vec::with_capacity(2 * n);
        for l in &word {
            labels.push(l.clone());
            labels.push(letter_inverse(fp, l)?);
        }
        let darts: Vec<usize> = (0..n).map(|k| 2 * k).collect();
        let outer: Vec<usize> = (0..n).rev().map(|k| 2 * k + 1).collect();
        Ok(VKDiagram {
            labels,
            cells: vec![Cell { kind, darts }],
            outer,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.labels.len() / 2
    }

    pub fn outer_darts(&self) -> &[usize] {
        &self.outer
    }

    pub fn label(&self, dart: usize) -> &Letter {
        &self.labels[dart]
    }

    /// Boundary word of the diagram, read counterclockwise like cell words.
    pub fn boundary_word(&self, fp: &FreeProduct) -> Result<Vec<Letter>> {
        self.outer
            .iter()
            .rev()
            .map(|&d| letter_inverse(fp, &self.labels[d]))
            .collect()
    }

    /// Boundary length (number of letters of the boundary word).
    pub fn boundary_len(&self) -> usize {
        self.outer.len()
    }

    /// Word read along an inner face.
    pub fn cell_word(&self, cell: usize) -> Vec<Letter> {
        self.cells[cell].darts.iter().map(|&d| self.labels[d].clone()).collect()
    }

    /// Face permutation: next dart in the face cycle containing `d`.
    pub fn face_next(&self, d: usize) -> usize {
        for c in &self.cells {
            if let Some(i) = c.darts.iter().position(|&x| x == d) {
                return c.darts[(i + 1) % c.darts.len()];
            }
        }
        if let Some(i) = self.outer.iter().position(|&x| x == d) {
            return self.outer[(i + 1) % self.outer.len()];
        }
        usize::MAX
    }

    fn face_next_table(&self) -> Vec<usize> {
        let mut next = vec![usize::MAX; self.labels.len()];
        for c in &self.cells {
            for (i, &d) in c.darts.iter().enumerate() {
                next[d] = c.darts[(i + 1) % c.darts.len()];
            }
        }
        for (i, &d) in self.outer.iter().enumerate() {
            next[d] = self.outer[(i + 1) % self.outer.len()];
        }
        next
    }

    /// Face kind containing each dart: `None` for the outer face.
    fn face_kind_table(&self) -> Vec<Option<CellKind>> {
        let mut kind = vec![None; self.labels.len()];
        for c in &self.cells {
            for &d in &c.darts {
                kind[d] = Some(c.kind);
            }
        }
        kind
    }

    /// Cell index containing each dart (`usize::MAX` for the outer face).
    pub fn dart_cell_table(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.labels.len()];
        for (ci, c) in self.cells.iter().enumerate() {
            for &d in &c.darts {
                owner[d] = ci;
            }
        }
        owner
    }

    /// Vertex id of the origin of each dart.  Vertices are the orbits of the
    /// permutation `d -> face_next(opposite(d))`.
    pub fn vertex_table(&self) -> Vec<usize> {
        let next = self.face_next_table();
        let n = self.labels.len();
        let mut vertex = vec![usize::MAX; n];
        let mut v = 0;
        for start in 0..n {
            if vertex[start] != usize::MAX {
                continue;
            }
            let mut d = start;
            loop {
                vertex[d] = v;
                d = next[d ^ 1];
                if d == start {
                    break;
                }
            }
            v += 1;
        }
        vertex
    }

    pub fn num_vertices(&self) -> usize {
        let vt = self.vertex_table();
        vt.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Structural validation: dart pairing, face partition, connectivity, and
    /// the Euler formula `V - E + F = 2` certifying planarity and simple
    /// connectivity.
    pub fn validate_structure(&self, fp: &FreeProduct) -> Result<()> {
        let n = self.labels.len();
        if n == 0 || n % 2 != 0 {
            return Err(RhError::Structural("dart count must be even and nonzero".into()));
        }
        for k in 0..n / 2 {
            let inv = letter_inverse(fp, &self.labels[2 * k])?;
            if self.labels[2 * k + 1] != inv {
                return Err(RhError::Structural(format!(
                    "darts {} and {} do not carry inverse labels",
                    2 * k,
                    2 * k + 1
                )));
            }
        }
        let mut seen = vec![false; n];
        for c in self.cells.iter().map(|c| &c.darts).chain(std::iter::once(&self.outer)) {
            if c.is_empty() {
                return Err(RhError::Structural("empty face".into()));
            }
            for &d in c {
                if d >= n || seen[d] {
                    return Err(RhError::Structural(format!("dart {d} missing or repeated in faces")));
                }
                seen[d] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(RhError::Structural("some dart belongs to no face".into()));
        }
        // connectivity over the map's permutations
        let next = self.face_next_table();
        let mut reach = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        reach[0] = true;
        while let Some(d) = queue.pop_front() {
            for e in [next[d], d ^ 1] {
                if !reach[e] {
                    reach[e] = true;
                    queue.push_back(e);
                }
            }
        }
        if reach.iter().any(|&r| !r) {
            return Err(RhError::Structural("diagram is not connected".into()));
        }
        let v = self.num_vertices() as i64;
        let e = (n / 2) as i64;
        let f = (self.cells.len() + 1) as i64;
        if v - e + f != 2 {
            return Err(RhError::Structural(format!(
                "Euler formula violated: V={v} E={e} F={f}"
            )));
        }
        Ok(())
    }

    /// Full validation: structure plus cell labeling against the presentation.
    /// R-cells must read a cyclic conjugate of a relator or an inverse relator;
    /// T-cells must read a length-≤-3 relation of a single parabolic factor.
    pub fn validate(&self, pres: &RelPresentation) -> Result<()> {
        let fp = pres.free_product()?;
        self.validate_structure(&fp)?;
        for (ci, c) in self.cells.iter().enumerate() {
            let word = self.cell_word(ci);
            match c.kind {
                CellKind::RCell => {
                    if !is_relator_conjugate(pres, &fp, &word)? {
                        return Err(RhError::Structural(format!(
                            "cell {ci} is not labeled by a cyclic conjugate of a relator"
                        )));
                    }
                }
                CellKind::TCell(k) => {
                    if word.len() > 3 {
                        return Err(RhError::Structural(format!(
                            "table cell {ci} has more than 3 letters"
                        )));
                    }
                    let mut prod = FactorElement::abelian(0, Vec::new());
                    let mut first = true;
                    for l in &word {
                        let fe = match l {
                            Letter::Par(fe) if fe.factor == k => fe.clone(),
                            _ => {
                                return Err(RhError::Structural(format!(
                                    "table cell {ci} contains a letter outside factor {k}"
                                )))
                            }
                        };
                        prod = if first { fe } else { fp.syllable_mul(&prod, &fe)? };
                        first = false;
                    }
                    if first || !fp.syllable_is_identity(&prod)? {
                        return Err(RhError::Structural(format!(
                            "table cell {ci} does not read a relation of factor {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Glue a new cell onto the boundary along a contiguous arc.
    ///
    /// The arc consists of the `m` outer darts starting at outer position
    /// `pos`; the new cell's word (in the rotation given) must begin with the
    /// labels of those darts.  Requires `1 <= m < word.len()`.  Returns `None`
    /// if the labels do not match.
    pub fn attach(
        &self,
        kind: CellKind,
        word: &[Letter],
        pos: usize,
        m: usize,
        fp: &FreeProduct,
    ) -> Result<Option<VKDiagram>> {
        let bl = self.outer.len();
        let l = word.len();
        if m == 0 || m >= l || m > bl || pos >= bl {
            return Ok(None);
        }
        let arc: Vec<usize> = (0..m).map(|j| self.outer[(pos + j) % bl]).collect();
        for (j, &d) in arc.iter().enumerate() {
            if self.labels[d] != word[j] {
                return Ok(None);
            }
        }
        let mut labels = self.labels.clone();
        let mut fresh = Vec::new();
        for w in word.iter().take(l).skip(m) {
            let d = labels.len();
            labels.push(w.clone());
            labels.push(letter_inverse(fp, w)?);
            fresh.push(d);
        }
        let mut darts = arc;
        darts.extend(fresh.iter().copied());
        let mut cells = self.cells.clone();
        cells.push(Cell { kind, darts });
        // outer: remove the arc, insert opposites of the fresh darts reversed
        let mut outer = Vec::with_capacity(bl - m + (l - m));
        let mut i = (pos + m) % bl;
        while i != pos {
            outer.push(self.outer[i]);
            i = (i + 1) % bl;
        }
        for &d in fresh.iter().rev() {
            outer.push(d ^ 1);
        }
        // keep a stable starting point: rotate so the smallest dart is first
        rotate_min(&mut outer);
        Ok(Some(VKDiagram { labels, cells, outer }))
    }

    /// Join two diagrams at one boundary vertex (a wedge).  The vertex chosen
    /// is the origin of `self.outer[pos_self]` and of `other.outer[pos_other]`.
    pub fn wedge(&self, other: &VKDiagram, pos_self: usize, pos_other: usize) -> Result<VKDiagram> {
        if pos_self >= self.outer.len() || pos_other >= other.outer.len() {
            return Err(RhError::MalformedInput("wedge position out of range".into()));
        }
        let off = self.labels.len();
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut cells = self.cells.clone();
        for c in &other.cells {
            cells.push(Cell {
                kind: c.kind,
                darts: c.darts.iter().map(|&d| d + off).collect(),
            });
        }
        let mut outer = Vec::new();
        let bl = self.outer.len();
        for j in 0..bl {
            outer.push(self.outer[(pos_self + j) % bl]);
        }
        let ol = other.outer.len();
        for j in 0..ol {
            outer.push(other.outer[(pos_other + j) % ol] + off);
        }
        rotate_min(&mut outer);
        Ok(VKDiagram { labels, cells, outer })
    }

    /// Canonical key: lexicographically minimal traversal encoding over all
    /// choices of starting dart.  Two diagrams have equal keys iff they are
    /// related by an orientation-preserving, label-preserving isomorphism
    /// fixing the outer face.
    pub fn canonical_key(&self) -> Vec<u8> {
        let n = self.labels.len();
        let next = self.face_next_table();
        let kinds = self.face_kind_table();
        let mut best: Option<Vec<u8>> = None;
        for start in 0..n {
            let mut code = vec![usize::MAX; n];
            let mut order = Vec::with_capacity(n);
            code[start] = 0;
            order.push(start);
            let mut head = 0;
            while head < order.len() {
                let d = order[head];
                head += 1;
                for e in [next[d], d ^ 1] {
                    if code[e] == usize::MAX {
                        code[e] = order.len();
                        order.push(e);
                    }
                }
            }
            let mut enc = String::new();
            for &d in &order {
                let k = match kinds[d] {
                    None => "o".to_string(),
                    Some(CellKind::RCell) => "r".to_string(),
                    Some(CellKind::TCell(i)) => format!("t{i}"),
                };
                enc.push_str(&format!(
                    "{},{},{},{};",
                    code[next[d]],
                    code[d ^ 1],
                    k,
                    letter_code(&self.labels[d])
                ));
            }
            let enc = enc.into_bytes();
            if best.as_ref().map_or(true, |b| enc < *b) {
                best = Some(enc);
            }
        }
        best.unwrap_or_default()
    }
}

/// Whether two diagrams are related by an orientation-preserving,
/// label-preserving isomorphism fixing the outer face.  The mapping is built
/// by direct propagation from a seed dart pair, independently of
/// [`VKDiagram::canonical_key`], so the two can cross-check each other.
pub fn label_isomorphic(a: &VKDiagram, b: &VKDiagram) -> bool {
    let na = a.labels.len();
    if na != b.labels.len() || a.cells.len() != b.cells.len() {
        return false;
    }
    let next_a = a.face_next_table();
    let next_b = b.face_next_table();
    let kind_a = a.face_kind_table();
    let kind_b = b.face_kind_table();
    'seed: for seed in 0..na {
        let mut map = vec![usize::MAX; na];
        let mut hit = vec![false; na];
        map[0] = seed;
        hit[seed] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(d) = queue.pop_front() {
            let e = map[d];
            if a.labels[d] != b.labels[e] || kind_a[d] != kind_b[e] {
                continue 'seed;
            }
            for (da, db) in [(next_a[d], next_b[e]), (d ^ 1, e ^ 1)] {
                if map[da] == usize::MAX {
                    if hit[db] {
                        continue 'seed;
                    }
                    map[da] = db;
                    hit[db] = true;
                    queue.push_back(da);
                } else if map[da] != db {
                    continue 'seed;
                }
            }
        }
        if map.iter().all(|&m| m != usize::MAX) {
            return true;
        }
    }
    false
}

fn rotate_min(cycle: &mut [usize]) {
    if let Some(i) = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &d)| d)
        .map(|(i, _)| i)
    {
        cycle.rotate_left(i);
    }
}

/// Whether `word` is a cyclic conjugate of some relator of `pres` or of an
/// inverse relator.
pub fn is_relator_conjugate(pres: &RelPresentation, fp: &FreeProduct, word: &[Letter]) -> Result<bool> {
    for r in pres.relators() {
        if cyclic_eq(r, word) {
            return Ok(true);
        }
        let inv = invert_relword(fp, r)?;
        if cyclic_eq(&inv, word) {
            return Ok(true);
        }
    }
    Ok(false)
}

pub(crate) fn invert_relword(fp: &FreeProduct, w: &[Letter]) -> Result<Vec<Letter>> {
    w.iter().rev().map(|l| letter_inverse(fp, l)).collect()
}

fn cyclic_eq(a: &[Letter], b: &[Letter]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..a.len()).any(|s| (0..a.len()).all(|j| a[(s + j) % a.len()] == b[j]))
}

/// Lexicographically minimal cyclic rotation of a word, used as the lookup
/// key of the minimum-area table.
pub fn cyclic_canonical(word: &[Letter]) -> Vec<Letter> {
    if word.is_empty() {
        return Vec::new();
    }
    (0..word.len())
        .map(|s| {
            let mut rot: Vec<Letter> = Vec::with_capacity(word.len());
            for j in 0..word.len() {
                rot.push(word[(s + j) % word.len()].clone());
            }
            rot
        })
        .min_by(|a, b| cmp_words(a, b))
        .unwrap()
}

pub(crate) fn cmp_words(a: &[Letter], b: &[Letter]) -> std::cmp::Ordering {
    let ka: Vec<String> = a.iter().map(letter_code).collect();
    let kb: Vec<String> = b.iter().map(letter_code).collect();
    ka.cmp(&kb)
}

/// Minimal triangulation of a polygon: a fan of `|w| - 2` table cells for a
/// word `w` of parabolic letters of factor `k` that is trivial in that factor.
///
/// Interior edge labels are the prefix products of `w`, so every cell reads a
/// triple `(p_j, w_j, p_{j+1}^{-1})` which multiplies to the identity.
pub fn min_polygon_triangulation(
    fp: &FreeProduct,
    k: usize,
    w: &[FactorElement],
) -> Result<VKDiagram> {
    if w.len() < 3 {
        return Err(RhError::ContractViolation(format!(
            "polygon word must have at least 3 letters, got {}",
            w.len()
        )));
    }
    let mut canon = Vec::with_capacity(w.len());
    let mut prod: Option<FactorElement> = None;
    for fe in w {
        if fe.factor != k {
            return Err(RhError::ContractViolation("polygon letters must lie in one factor".into()));
        }
        let c = fp.canonicalize_syllable(fe)?;
        prod = Some(match prod {
            None => c.clone(),
            Some(p) => fp.syllable_mul(&p, &c)?,
        });
        canon.push(c);
    }
    let prod = prod.unwrap();
    if !fp.syllable_is_identity(&prod)? {
        return Err(RhError::ContractViolation(
            "polygon word is not trivial in its factor".into(),
        ));
    }
    // prefix products p_2, ..., p_{L-1}
    let l = canon.len();
    let mut prefixes = Vec::with_capacity(l);
    let mut p = canon[0].clone();
    prefixes.push(p.clone()); // p_1 = w_0 (unused)
    for fe in canon.iter().take(l - 1).skip(1) {
        p = fp.syllable_mul(&p, fe)?;
        prefixes.push(p.clone());
    }
    let first = vec![
        Letter::Par(canon[0].clone()),
        Letter::Par(canon[1].clone()),
        Letter::Par(fp.syllable_inverse(&prefixes[1])?),
    ];
    let mut d = VKDiagram::single_cell(CellKind::TCell(k), first, fp)?;
    for j in 2..l - 1 {
        let word = vec![
            Letter::Par(prefixes[j - 1].clone()),
            Letter::Par(canon[j].clone()),
            Letter::Par(fp.syllable_inverse(&prefixes[j])?),
        ];
        // the diagonal p_j sits at a fixed outer position: find its dart
        let target = Letter::Par(prefixes[j - 1].clone());
        let pos = d
            .outer_darts()
            .iter()
            .position(|&dd| *d.label(dd) == target)
            .ok_or_else(|| RhError::Structural("fan diagonal not found on boundary".into()))?;
        d = d
            .attach(CellKind::TCell(k), &word, pos, 1, fp)?
            .ok_or_else(|| RhError::Structural("fan attachment failed".into()))?;
    }
    Ok(d)
}

/// Executable form of the Euler count lemma: a diagram whose cells are all
/// triangles (table cells) has at least `boundary length - 2` cells.
pub fn euler_triangle_bound_holds(d: &VKDiagram) -> bool {
    if d.cells().iter().any(|c| c.darts.len() > 3) {
        return true; // lemma only constrains all-triangle diagrams
    }
    d.num_cells() + 2 >= d.boundary_len()
}
