//! Bounded exploration of the coned-off Cayley graph, with angle, cone,
//! sector, path and distance queries on the explored fragment.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::group::{
    FactorElement, FpElement, FreeProduct, GenSymbol, Letter, NfOracle, RelPresentation, Word,
};
use crate::{RhError, Result};

/// A vertex of the coned-off graph: either a group element (canonical word)
/// or the cone point of a parabolic coset (canonical coset representative).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKind {
    Group(Word),
    Cone { parabolic: usize, rep: Word },
}

/// Edge label: a generator (Cayley edge) or the parabolic element relating
/// the coset representative to the group endpoint (cone edge).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Gen(GenSymbol),
    Par(FactorElement),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub label: EdgeLabel,
}

impl Edge {
    pub fn opposite(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn incident(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

/// Path distance between two edges at a common vertex, measured in the graph
/// punctured at that vertex; capped computations report `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    Finite(usize),
    Infinite,
}

impl Angle {
    pub fn at_most(self, bound: usize) -> bool {
        matches!(self, Angle::Finite(v) if v <= bound)
    }
}

/// A finite explored piece of the coned-off graph.
#[derive(Debug, Clone)]
pub struct Fragment {
    pres: RelPresentation,
    fp: FreeProduct,
    nf: NfOracle,
    vertices: Vec<VertexKind>,
    index: HashMap<VertexKind, usize>,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    depth: Vec<usize>,
    basepoint: usize,
    radius: usize,
    cone_budget: usize,
    truncated: bool,
}

/// Symmetric generator list of a presentation, in deterministic order.
fn symmetric_gens(pres: &RelPresentation) -> Vec<GenSymbol> {
    let mut out = Vec::new();
    for g in pres.gens() {
        out.push(GenSymbol::pos(g.clone()));
        out.push(GenSymbol::neg(g.clone()));
    }
    out
}

impl Fragment {
    /// Explore the coned-off graph around the identity out to `radius`, with
    /// each cone star truncated to parabolic elements of word length at most
    /// `cone_budget`.
    pub fn explore(
        pres: &RelPresentation,
        nf: &NfOracle,
        radius: usize,
        cone_budget: usize,
    ) -> Result<Fragment> {
        let fp = pres.free_product()?;
        let gens = symmetric_gens(pres);
        // pre-enumerate every parabolic ball once
        let mut balls: Vec<Vec<FactorElement>> = Vec::new();
        let mut truncated = false;
        for p in pres.parabolics() {
            let ball = fp.factor_ball(p.index, cone_budget)?;
            // the truncation is real whenever the factor is infinite
            if p.dimension().map_or(false, |_| {
                matches!(&p.kind, crate::group::ParabolicKind::Abelian { free_rank, .. } if *free_rank > 0)
            }) {
                truncated = true;
            }
            balls.push(ball);
        }

        let mut frag = Fragment {
            pres: pres.clone(),
            fp,
            nf: nf.clone(),
            vertices: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            depth: Vec::new(),
            basepoint: 0,
            radius,
            cone_budget,
            truncated,
        };
        let base = frag.intern(VertexKind::Group(nf.normal_form(&Word::empty())), 0);
        frag.basepoint = base;

        // phase 1: breadth-first vertex collection in the coned-off metric
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            let d = frag.depth[v];
            if d >= radius {
                continue;
            }
            for n in frag.neighbor_kinds(v, &gens, &balls)? {
                if !frag.index.contains_key(&n) {
                    let id = frag.intern(n, d + 1);
                    queue.push_back(id);
                }
            }
        }

        // phase 2: add every edge between present vertices
        let mut seen: BTreeSet<(usize, usize, EdgeLabel)> = BTreeSet::new();
        for v in 0..frag.vertices.len() {
            let VertexKind::Group(w) = frag.vertices[v].clone() else { continue };
            for g in &gens {
                let mut t = w.clone();
                t.push(g.clone());
                let target = VertexKind::Group(frag.nf.normal_form(&t));
                if let Some(&u) = frag.index.get(&target) {
                    let (a, b, label) = if v <= u {
                        (v, u, EdgeLabel::Gen(g.clone()))
                    } else {
                        (u, v, EdgeLabel::Gen(g.inverse()))
                    };
                    if seen.insert((a, b, label.clone())) {
                        frag.push_edge(Edge { a, b, label });
                    }
                }
            }
            let par_indices: Vec<usize> = frag.pres.parabolics().iter().map(|p| p.index).collect();
            for (pi, k) in par_indices.into_iter().enumerate() {
                let (key, h_rel) = frag.coset_key(&w, k, &balls[pi])?;
                if let Some(&u) = frag.index.get(&key) {
                    let label = EdgeLabel::Par(h_rel);
                    if seen.insert((v.min(u), v.max(u), label.clone())) {
                        frag.push_edge(Edge { a: u, b: v, label });
                    }
                }
            }
        }
        Ok(frag)
    }

    fn intern(&mut self, kind: VertexKind, depth: usize) -> usize {
        let id = self.vertices.len();
        self.index.insert(kind.clone(), id);
        self.vertices.push(kind);
        self.adj.push(Vec::new());
        self.depth.push(depth);
        id
    }

    fn push_edge(&mut self, e: Edge) {
        let idx = self.edges.len();
        self.adj[e.a].push(idx);
        if e.b != e.a {
            self.adj[e.b].push(idx);
        }
        self.edges.push(e);
    }

    /// Canonical coset key of `w·P_k` over the truncated ball, together with
    /// the parabolic element `h` such that `w = rep · π(h)`.
    fn coset_key(
        &self,
        w: &Word,
        k: usize,
        ball: &[FactorElement],
    ) -> Result<(VertexKind, FactorElement)> {
        let mut best: Option<(Word, FactorElement)> = None;
        // candidates: w itself (h = 1) and every translated member
        let mut consider = |rep: Word, h_inv: FactorElement| {
            let better = match &best {
                None => true,
                Some((r, _)) => (rep.len(), rep.to_string()) < (r.len(), r.to_string()),
            };
            if better {
                best = Some((rep, h_inv));
            }
        };
        // h = 1: rep = w, label = identity-free marker handled below
        let mut id_syll = None;
        for h in ball {
            let hw = self.pres.project_syllable(h)?;
            let rep = self.nf.normal_form(&w.concat(&hw));
            let h_inv = self.fp.syllable_inverse(h)?;
            consider(rep, h_inv);
            if id_syll.is_none() {
                // remember the factor's identity shape from any member
                id_syll = Some(self.identity_syllable(h)?);
            }
        }
        let id = match id_syll {
            Some(i) => i,
            None => self.identity_syllable_for_factor(k)?,
        };
        consider(w.clone(), id.clone());
        let (rep, h) = best.expect("at least w itself considered");
        // recompute label against the winning representative: w = rep · π(h)
        Ok((VertexKind::Cone { parabolic: k, rep }, h))
    }

    fn identity_syllable(&self, sample: &FactorElement) -> Result<FactorElement> {
        let inv = self.fp.syllable_inverse(sample)?;
        self.fp.syllable_mul(sample, &inv)
    }

    fn identity_syllable_for_factor(&self, k: usize) -> Result<FactorElement> {
        let spec = self.pres.parabolics().get(k - 1).ok_or_else(|| {
            RhError::MalformedInput(format!("unknown factor {k}"))
        })?;
        let value = match &spec.kind {
            crate::group::ParabolicKind::Abelian { free_rank, torsion } => {
                crate::group::FactorValue::Abelian(vec![0; free_rank + torsion.len()])
            }
            crate::group::ParabolicKind::Finite(_) => crate::group::FactorValue::Finite(0),
            crate::group::ParabolicKind::OracleBacked { .. } => {
                crate::group::FactorValue::Rep(Word::empty())
            }
        };
        Ok(FactorElement { factor: k, value })
    }

    fn neighbor_kinds(
        &self,
        v: usize,
        gens: &[GenSymbol],
        balls: &[Vec<FactorElement>],
    ) -> Result<Vec<VertexKind>> {
        let mut out = Vec::new();
        match self.vertices[v].clone() {
            VertexKind::Group(w) => {
                for g in gens {
                    let mut t = w.clone();
                    t.push(g.clone());
                    out.push(VertexKind::Group(self.nf.normal_form(&t)));
                }
                for (pi, p) in self.pres.parabolics().iter().enumerate() {
                    let (key, _) = self.coset_key(&w, p.index, &balls[pi])?;
                    out.push(key);
                }
            }
            VertexKind::Cone { rep, .. } => {
                for (pi, _) in self.pres.parabolics().iter().enumerate() {
                    let VertexKind::Cone { parabolic, .. } = &self.vertices[v] else { unreachable!() };
                    if *parabolic != pi + 1 {
                        continue;
                    }
                    for h in &balls[pi] {
                        let hw = self.pres.project_syllable(h)?;
                        out.push(VertexKind::Group(self.nf.normal_form(&rep.concat(&hw))));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn presentation(&self) -> &RelPresentation {
        &self.pres
    }

    pub fn free_product(&self) -> &FreeProduct {
        &self.fp
    }

    pub fn oracle(&self) -> &NfOracle {
        &self.nf
    }

    pub fn vertices(&self) -> &[VertexKind] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_at(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn cone_budget(&self) -> usize {
        self.cone_budget
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn vertex_depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn find_vertex(&self, kind: &VertexKind) -> Option<usize> {
        self.index.get(kind).copied()
    }

    pub fn find_group_vertex(&self, w: &Word) -> Option<usize> {
        self.find_vertex(&VertexKind::Group(self.nf.normal_form(w)))
    }

    /// Angle at `v` between two of its edges: breadth-first distance between
    /// the far endpoints in the fragment punctured at `v`, capped at `cutoff`.
    pub fn angle(&self, v: usize, e1: usize, e2: usize, cutoff: usize) -> Result<Angle> {
        let (f1, f2) = (&self.edges[e1], &self.edges[e2]);
        if !f1.incident(v) || !f2.incident(v) {
            return Err(RhError::ContractViolation("angle edges must be incident to the vertex".into()));
        }
        if e1 == e2 {
            return Ok(Angle::Finite(0));
        }
        let (s, t) = (f1.opposite(v), f2.opposite(v));
        Ok(self.punctured_distance(v, s, t, cutoff))
    }

    /// BFS distance from `s` to `t` avoiding `punct`, capped at `cutoff`.
    fn punctured_distance(&self, punct: usize, s: usize, t: usize, cutoff: usize) -> Angle {
        if s == t {
            return Angle::Finite(0);
        }
        if s == punct || t == punct {
            return Angle::Infinite;
        }
        let mut dist: HashMap<usize, usize> = HashMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d >= cutoff {
                continue;
            }
            for &ei in &self.adj[u] {
                let w = self.edges[ei].opposite(u);
                if w == punct || dist.contains_key(&w) {
                    continue;
                }
                if w == t {
                    return Angle::Finite(d + 1);
                }
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
        Angle::Infinite
    }

    /// All vertices reachable from the oriented edge (`edge`, starting at
    /// `from`) by a path of length ≤ `rho` whose consecutive edges make
    /// angles ≤ `theta`.
    pub fn cone(&self, from: usize, edge: usize, rho: usize, theta: usize) -> Result<BTreeSet<usize>> {
        if !self.edges[edge].incident(from) {
            return Err(RhError::ContractViolation("cone edge must start at the given vertex".into()));
        }
        if rho == 0 {
            return Ok(BTreeSet::new());
        }
        let mut out = BTreeSet::from([from, self.edges[edge].opposite(from)]);
        // states: (edge index, head vertex) with minimal step count
        let mut best: HashMap<(usize, usize), usize> = HashMap::new();
        let head0 = self.edges[edge].opposite(from);
        best.insert((edge, head0), 1);
        let mut queue = VecDeque::from([(edge, head0, 1usize)]);
        while let Some((e, head, steps)) = queue.pop_front() {
            if steps >= rho {
                continue;
            }
            if self.depth[head] >= self.radius && !self.pres.parabolics().is_empty() {
                // a longer exploration might reveal more of this cone; for
                // parabolic-free trees the fragment boundary is exact enough
                // to keep going on what is present
            }
            for &f in &self.adj[head] {
                if !self.angle(head, e, f, theta)?.at_most(theta) {
                    continue;
                }
                let next = self.edges[f].opposite(head);
                let key = (f, next);
                if best.get(&key).map_or(true, |&s| steps + 1 < s) {
                    best.insert(key, steps + 1);
                    out.insert(next);
                    queue.push_back((f, next, steps + 1));
                }
            }
        }
        Ok(out)
    }

    /// The cone vertex of the basepoint's coset for parabolic `k`.
    pub fn base_cone_vertex(&self, k: usize) -> Result<usize> {
        for &ei in &self.adj[self.basepoint] {
            let other = self.edges[ei].opposite(self.basepoint);
            if matches!(self.vertices[other], VertexKind::Cone { parabolic, .. } if parabolic == k) {
                return Ok(other);
            }
        }
        Err(RhError::FragmentTooSmall { required: 1 })
    }

    /// `Sec_k(θ)` over the truncated ball: parabolic elements `h` with angle
    /// at the basepoint cone vertex between the edges toward 1 and toward `h`
    /// at most `θ`.
    pub fn sector(&self, k: usize, theta: usize) -> Result<Vec<FactorElement>> {
        let v = self.base_cone_vertex(k)?;
        let ball = self.fp_ref().factor_ball(k, self.cone_budget)?;
        let mut out = Vec::new();
        for h in ball {
            let hw = self.pres.project_syllable(&h)?;
            let target = self.nf.normal_form(&hw);
            let Some(t) = self.find_group_vertex(&target) else { continue };
            match self.punctured_distance(v, self.basepoint, t, theta) {
                Angle::Finite(d) if d <= theta => out.push(h),
                _ => {}
            }
        }
        out.sort();
        Ok(out)
    }

    fn fp_ref(&self) -> &FreeProduct {
        &self.fp
    }

    /// The path from the basepoint labeled by the long normal form of `a`,
    /// traversing one cone vertex per parabolic syllable.
    pub fn path_of(&self, a: &FpElement) -> Result<GraphPath> {
        let mut vertices = vec![self.basepoint];
        let mut path_edges = Vec::new();
        let mut cur_word = match &self.vertices[self.basepoint] {
            VertexKind::Group(w) => w.clone(),
            _ => unreachable!("basepoint is a group vertex"),
        };
        let mut cur = self.basepoint;
        for l in self.fp.long_normal_form(a) {
            match l {
                Letter::Gen(g) => {
                    let mut t = cur_word.clone();
                    t.push(g.clone());
                    let next_word = self.nf.normal_form(&t);
                    let next = self
                        .find_vertex(&VertexKind::Group(next_word.clone()))
                        .ok_or(RhError::FragmentTooSmall { required: (self.radius + 1) as u32 })?;
                    let e = self
                        .edge_between(cur, next)
                        .ok_or(RhError::FragmentTooSmall { required: (self.radius + 1) as u32 })?;
                    path_edges.push(e);
                    vertices.push(next);
                    cur = next;
                    cur_word = next_word;
                }
                Letter::Par(fe) => {
                    // step onto the cone vertex of the current coset...
                    let cone = self
                        .cone_vertex_of(cur, fe.factor)
                        .ok_or(RhError::FragmentTooSmall { required: (self.radius + 1) as u32 })?;
                    let e1 = self.edge_between(cur, cone).expect("cone edge exists");
                    // ...then down to the translated member
                    let hw = self.pres.project_syllable(&fe)?;
                    let next_word = self.nf.normal_form(&cur_word.concat(&hw));
                    let next = self
                        .find_vertex(&VertexKind::Group(next_word.clone()))
                        .ok_or(RhError::FragmentTooSmall { required: (self.radius + 1) as u32 })?;
                    let e2 = self
                        .edge_between(cone, next)
                        .ok_or(RhError::FragmentTooSmall { required: (self.radius + 1) as u32 })?;
                    path_edges.push(e1);
                    vertices.push(cone);
                    path_edges.push(e2);
                    vertices.push(next);
                    cur = next;
                    cur_word = next_word;
                }
            }
        }
        Ok(GraphPath { vertices, edges: path_edges })
    }

    fn cone_vertex_of(&self, v: usize, k: usize) -> Option<usize> {
        self.adj[v].iter().map(|&ei| self.edges[ei].opposite(v)).find(|&u| {
            matches!(self.vertices[u], VertexKind::Cone { parabolic, .. } if parabolic == k)
        })
    }

    fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().copied().find(|&ei| self.edges[ei].opposite(u) == v)
    }

    /// Breadth-first distance inside the fragment; `None` when unreachable.
    pub fn distance(&self, u: usize, v: usize) -> Option<usize> {
        if u == v {
            return Some(0);
        }
        let mut dist: HashMap<usize, usize> = HashMap::from([(u, 0)]);
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &ei in &self.adj[x] {
                let y = self.edges[ei].opposite(x);
                if dist.contains_key(&y) {
                    continue;
                }
                let d = dist[&x] + 1;
                if y == v {
                    return Some(d);
                }
                dist.insert(y, d);
                queue.push_back(y);
            }
        }
        None
    }

    /// Line-oriented serialization (`V`/`E` records with a header line).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "F {} {} {}\n",
            self.basepoint, self.radius, self.cone_budget
        ));
        for (i, v) in self.vertices.iter().enumerate() {
            match v {
                VertexKind::Group(w) => out.push_str(&format!("V {i} group {w}\n")),
                VertexKind::Cone { parabolic, rep } => {
                    let w = if rep.is_empty() { "1".to_string() } else { rep.to_string() };
                    out.push_str(&format!("V {i} cone.{parabolic} {w}\n"));
                }
            }
        }
        for e in &self.edges {
            let label = match &e.label {
                EdgeLabel::Gen(g) => g.to_string(),
                EdgeLabel::Par(fe) => self.fp.format_syllable(fe),
            };
            out.push_str(&format!("E {} {} {label}\n", e.a, e.b));
        }
        out
    }

    /// Parse a fragment serialized by [`Self::serialize`].
    pub fn parse(text: &str, pres: &RelPresentation, nf: &NfOracle) -> Result<Fragment> {
        let fp = pres.free_product()?;
        let mut frag = Fragment {
            pres: pres.clone(),
            fp,
            nf: nf.clone(),
            vertices: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            depth: Vec::new(),
            basepoint: 0,
            radius: 0,
            cone_budget: 0,
            truncated: false,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "F" if fields.len() == 4 => {
                    frag.basepoint = fields[1].parse().map_err(|_| RhError::Parse {
                        line,
                        msg: "bad basepoint".into(),
                    })?;
                    frag.radius = fields[2].parse().map_err(|_| RhError::Parse {
                        line,
                        msg: "bad radius".into(),
                    })?;
                    frag.cone_budget = fields[3].parse().map_err(|_| RhError::Parse {
                        line,
                        msg: "bad cone budget".into(),
                    })?;
                }
                "V" if fields.len() == 4 => {
                    let id: usize = fields[1]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad vertex id".into() })?;
                    if id != frag.vertices.len() {
                        return Err(RhError::Parse { line, msg: "vertex ids must be sequential".into() });
                    }
                    let word_text = if fields[3] == "1" { "" } else { fields[3] };
                    let w = Word::parse(word_text)
                        .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
                    let kind = if fields[2] == "group" {
                        VertexKind::Group(w)
                    } else if let Some(k) = fields[2].strip_prefix("cone.") {
                        let parabolic = k
                            .parse()
                            .map_err(|_| RhError::Parse { line, msg: "bad cone factor".into() })?;
                        VertexKind::Cone { parabolic, rep: w }
                    } else {
                        return Err(RhError::Parse { line, msg: format!("bad vertex kind {:?}", fields[2]) });
                    };
                    frag.intern(kind, 0);
                }
                "E" if fields.len() == 4 => {
                    let a: usize = fields[1]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad edge endpoint".into() })?;
                    let b: usize = fields[2]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad edge endpoint".into() })?;
                    if a >= frag.vertices.len() || b >= frag.vertices.len() {
                        return Err(RhError::Parse { line, msg: "edge endpoint out of range".into() });
                    }
                    let rel = pres
                        .parse_relword(fields[3])
                        .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
                    let label = match rel.as_slice() {
                        [Letter::Gen(g)] => EdgeLabel::Gen(g.clone()),
                        [Letter::Par(fe)] => EdgeLabel::Par(fe.clone()),
                        _ => return Err(RhError::Parse { line, msg: "edge label must be one letter".into() }),
                    };
                    frag.push_edge(Edge { a, b, label });
                }
                _ => return Err(RhError::Parse { line, msg: format!("bad record {content:?}") }),
            }
        }
        // recompute depths from the basepoint
        let mut depth = vec![usize::MAX; frag.vertices.len()];
        if !frag.vertices.is_empty() {
            depth[frag.basepoint] = 0;
            let mut queue = VecDeque::from([frag.basepoint]);
            while let Some(u) = queue.pop_front() {
                for &ei in &frag.adj[u] {
                    let v = frag.edges[ei].opposite(u);
                    if depth[v] == usize::MAX {
                        depth[v] = depth[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        frag.depth = depth.into_iter().map(|d| if d == usize::MAX { 0 } else { d }).collect();
        Ok(frag)
    }
}

/// A vertex/edge walk inside a fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl GraphPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{free_product_oracles, parse_presentation, GroupFamily};

    const FREE2: &str = "[group]\ngenerators = a, b\n";

    const Z2_REL: &str = "
[group]
generators = a, b
relators = a P[-1,0], b P[0,-1]
[parabolic.P]
kind = free-abelian
rank = 2
gens = p, q
embed p = a
embed q = b
";

    fn free2_frag(radius: usize) -> Fragment {
        let pres = parse_presentation(FREE2).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        Fragment::explore(&pres, &nf, radius, radius).unwrap()
    }

    fn z2_rel_frag(radius: usize, budget: usize) -> Fragment {
        let pres = parse_presentation(Z2_REL).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        Fragment::explore(&pres, &nf, radius, budget).unwrap()
    }

    #[test]
    fn radius_zero_single_vertex() {
        let frag = free2_frag(0);
        assert_eq!(frag.vertices().len(), 1);
        assert!(frag.edges().is_empty());
    }

    #[test]
    fn free_group_ball_counts() {
        // 4-regular tree: 1 + 4 + 12 vertices at radius 2
        let frag = free2_frag(2);
        assert_eq!(frag.vertices().len(), 17);
        assert_eq!(frag.edges().len(), 16);
        assert!(!frag.truncated());
    }

    #[test]
    fn z2_rel_star() {
        let frag = z2_rel_frag(1, 1);
        // basepoint + 4 Cayley neighbors + 1 cone vertex
        assert_eq!(frag.vertices().len(), 6);
        let cone = frag.base_cone_vertex(1).unwrap();
        // the cone vertex is adjacent to every group vertex in the fragment
        assert_eq!(frag.edges_at(cone).len(), 5);
        assert!(frag.truncated());
    }

    #[test]
    fn angle_basics() {
        // Cay(Z^2) without the cone: angle at origin between +a and +b edges is 2
        let pres = parse_presentation("[group]\ngenerators = a, b\nrelators = abAB\n").unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 2, 0).unwrap();
        let base = frag.basepoint();
        let ea = frag.edges_at(base).iter().copied().find(|&e| {
            matches!(&frag.edges()[e].label, EdgeLabel::Gen(g) if g == &GenSymbol::pos("a"))
                && frag.vertex_depth(frag.edges()[e].opposite(base)) == 1
        }).unwrap();
        let eb = frag.edges_at(base).iter().copied().find(|&e| {
            matches!(&frag.edges()[e].label, EdgeLabel::Gen(g) if g == &GenSymbol::pos("b"))
                && frag.vertex_depth(frag.edges()[e].opposite(base)) == 1
        }).unwrap();
        assert_eq!(frag.angle(base, ea, ea, 5).unwrap(), Angle::Finite(0));
        assert_eq!(frag.angle(base, ea, eb, 5).unwrap(), Angle::Finite(2));
    }

    #[test]
    fn angle_symmetry_and_triangle() {
        let frag = z2_rel_frag(2, 2);
        for v in 0..frag.vertices().len() {
            let es = frag.edges_at(v);
            for &e1 in es.iter().take(4) {
                for &e2 in es.iter().take(4) {
                    let a12 = frag.angle(v, e1, e2, 8).unwrap();
                    let a21 = frag.angle(v, e2, e1, 8).unwrap();
                    assert_eq!(a12, a21);
                    for &e3 in es.iter().take(4) {
                        if let (Angle::Finite(x), Angle::Finite(y), Angle::Finite(z)) = (
                            frag.angle(v, e1, e3, 16).unwrap(),
                            a12,
                            frag.angle(v, e2, e3, 8).unwrap(),
                        ) {
                            assert!(x <= y + z, "triangle inequality failed");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cone_in_line() {
        // Cay(Z): deleting a vertex disconnects the line, so the straight
        // continuation has infinite angle and every finite-angle cone along
        // an edge is just the edge's endpoints
        let pres = parse_presentation("[group]\ngenerators = a\n").unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 4, 0).unwrap();
        let base = frag.basepoint();
        let ea = frag.edges_at(base).iter().copied().find(|&e| {
            let o = frag.edges()[e].opposite(base);
            matches!(&frag.vertices()[o], VertexKind::Group(w) if w.to_string() == "a")
        }).unwrap();
        assert_eq!(frag.cone(base, ea, 3, 0).unwrap().len(), 2);
        // rho=1 gives exactly the endpoints
        assert_eq!(frag.cone(base, ea, 1, 0).unwrap().len(), 2);
    }

    #[test]
    fn cone_in_grid() {
        // Cay(Z^2) along the +a edge from the origin: at the head, turns have
        // angle 2, the straight continuation has angle 4, backtrack angle 0
        let pres = parse_presentation("[group]\ngenerators = a, b\nrelators = abAB\n").unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 5, 0).unwrap();
        let base = frag.basepoint();
        let ea = frag.edges_at(base).iter().copied().find(|&e| {
            let o = frag.edges()[e].opposite(base);
            matches!(&frag.vertices()[o], VertexKind::Group(w) if w.to_string() == "a")
        }).unwrap();
        let tight = frag.cone(base, ea, 2, 2).unwrap();
        // {1, a, ab, aB}
        assert_eq!(tight.len(), 4);
        let loose = frag.cone(base, ea, 2, 4).unwrap();
        // additionally reaches aa
        assert_eq!(loose.len(), 5);
        assert!(tight.is_subset(&loose));
    }

    #[test]
    fn sector_is_word_length_ball() {
        // Z^2 rel {Z^2}: graph minus the cone vertex is Cay(Z^2), so
        // Sec(theta) is the word-length ball of radius theta
        let frag = z2_rel_frag(3, 3);
        let sec1 = frag.sector(1, 1).unwrap();
        assert_eq!(sec1.len(), 4);
        let sec2 = frag.sector(1, 2).unwrap();
        assert_eq!(sec2.len(), 12); // l1 ball of radius 2 minus origin
        // monotone
        assert!(sec1.iter().all(|h| sec2.contains(h)));
    }

    #[test]
    fn path_and_distance() {
        let frag = z2_rel_frag(2, 10);
        let fp = frag.pres.free_product().unwrap();
        // single parabolic letter: path of length 2 through the cone vertex
        let p = fp
            .normalize(&[crate::group::FactorElement::abelian(1, vec![5, 5])])
            .unwrap();
        let path = frag.path_of(&p).unwrap();
        assert_eq!(path.len(), 2);
        assert!(matches!(frag.vertices()[path.vertices[1]], VertexKind::Cone { .. }));
        // distance 1 -> (5,5) is 2, via the cone vertex
        assert_eq!(frag.distance(path.vertices[0], path.vertices[2]), Some(2));
    }

    #[test]
    fn free_path_is_geodesic() {
        let frag = free2_frag(4);
        let fp = frag.pres.free_product().unwrap();
        let ab = fp
            .normalize(&[crate::group::FactorElement::free(Word::parse("ab").unwrap())])
            .unwrap();
        let path = frag.path_of(&ab).unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!(frag.distance(path.vertices[0], path.vertices[2]), Some(2));
        let abab = fp
            .normalize(&[crate::group::FactorElement::free(Word::parse("abab").unwrap())])
            .unwrap();
        let long = frag.path_of(&abab).unwrap();
        assert_eq!(frag.distance(long.vertices[0], *long.vertices.last().unwrap()), Some(4));
    }

    #[test]
    fn serialization_roundtrip() {
        let pres = parse_presentation(Z2_REL).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 2, 2).unwrap();
        let text = frag.serialize();
        let back = Fragment::parse(&text, &pres, &nf).unwrap();
        assert_eq!(back.vertices(), frag.vertices());
        assert_eq!(back.edges().len(), frag.edges().len());
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn translation_invariance_spot_check() {
        // fragment around g is label-isomorphic to the one around 1 in a tree:
        // compare degree multisets at matched depths
        let frag = free2_frag(2);
        let pres = parse_presentation(FREE2).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let _ = (pres, nf);
        let mut degs: Vec<usize> = (0..frag.vertices().len())
            .filter(|&v| frag.vertex_depth(v) < 2)
            .map(|v| frag.edges_at(v).len())
            .collect();
        degs.sort();
        assert_eq!(degs, vec![4, 4, 4, 4, 4]);
    }

    #[test]
    fn free_product_fragment() {
        // F(a) * Z as parabolic: cone over <p> cosets
        let text = "
[group]
generators = a
[parabolic.P]
kind = free-abelian
rank = 1
gens = p
";
        let pres = parse_presentation(text).unwrap();
        let fp = pres.free_product().unwrap();
        let (_, nf) = free_product_oracles(&fp).unwrap();
        let frag = Fragment::explore(&pres, &nf, 2, 2).unwrap();
        // basepoint, a, A at depth 1 plus cone vertex; members p, P at depth 2 etc.
        assert!(frag.base_cone_vertex(1).is_ok());
        assert!(frag.find_group_vertex(&Word::parse("p").unwrap()).is_some());
    }
}
