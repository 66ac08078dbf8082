//! Lifting a triangular system over the group into a finite family of
//! systems over the ambient free product: enumeration of central triples and
//! parameter representatives, and the six-equations-per-triangle schema.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::Fragment;
use crate::group::{FpElement, GenSymbol, Letter, Word};
use crate::lang::{enumerate_lnf_by, GnrAutomaton};
use crate::eq::system::{EqSystem, EqTerm, EqWord};
use crate::{RhError, Result};

/// Constraint attached to one unknown of a lifted system.
#[derive(Clone)]
pub enum VarConstraint {
    /// The long normal form must be accepted by the automaton.
    Gnr(Arc<GnrAutomaton>),
    /// The value must lie in parabolic factor `k` (identity allowed).
    InFactor(usize),
}

impl std::fmt::Debug for VarConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarConstraint::Gnr(_) => write!(f, "Gnr(..)"),
            VarConstraint::InFactor(k) => write!(f, "InFactor({k})"),
        }
    }
}

/// A system over the free product: same shape as [`EqSystem`] but with
/// free-product parameter values and per-unknown constraints.
#[derive(Debug, Clone, Default)]
pub struct FpSystem {
    pub unknowns: Vec<String>,
    pub params: BTreeMap<String, FpElement>,
    pub equations: Vec<EqWord>,
    /// Single unknowns that must be nontrivial.
    pub inequations: Vec<String>,
    pub constraints: Vec<(String, VarConstraint)>,
}

impl FpSystem {
    pub fn add_unknown(&mut self, name: impl Into<String>) {
        let name = name.into();
        if !self.unknowns.contains(&name) {
            self.unknowns.push(name);
        }
    }
}

/// One member of the lifted family, tagged with the structural choices that
/// produced it.
#[derive(Debug, Clone)]
pub struct LiftedMember {
    pub tag: String,
    pub system: FpSystem,
}

pub type LiftedFamily = Vec<LiftedMember>;

/// Which lifting schema to use for the central letters of each triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    /// Central triples are words over the free factor only.
    Hyperbolic,
    /// Central triples may use parabolic letters from the `kappa` sectors,
    /// and each triangle additionally gets one singular variant per factor.
    Relative,
}

/// All triples of free-product elements with long normal form of length at
/// most `kappa * n` whose product is trivial in the group.
///
/// Letters are drawn from the symmetric generators and, in relative mode,
/// from the `kappa` sectors of the fragment.  `budget` bounds the number of
/// enumerated normal forms and of product checks.
pub fn enumerate_central_triples(
    frag: &Fragment,
    kappa: usize,
    n: usize,
    mode: LiftMode,
    budget: &mut usize,
) -> Result<Vec<[FpElement; 3]>> {
    central_triples_bounded(frag, kappa.saturating_mul(n), kappa, mode, budget)
}

/// [`enumerate_central_triples`] with an explicit length bound and sector
/// angle; a bound below `kappa * n` trades completeness of the lifted family
/// for a smaller search, never soundness.
pub fn central_triples_bounded(
    frag: &Fragment,
    bound: usize,
    sector_angle: usize,
    mode: LiftMode,
    budget: &mut usize,
) -> Result<Vec<[FpElement; 3]>> {
    let fp = frag.free_product();
    let mut universe: Vec<Letter> = Vec::new();
    for g in frag.presentation().gens() {
        universe.push(Letter::Gen(GenSymbol::pos(g.clone())));
        universe.push(Letter::Gen(GenSymbol::neg(g.clone())));
    }
    if mode == LiftMode::Relative {
        for k in 1..=fp.parabolics().len() {
            for fe in frag.sector(k, sector_angle)? {
                if !fp.syllable_is_identity(&fe)? {
                    universe.push(Letter::Par(fe));
                }
            }
        }
    }
    universe.sort();
    universe.dedup();
    // long-normal-form length counts letters, parabolic or not
    let seqs = enumerate_lnf_by(&universe, bound, budget, |_| 1)?;
    let mut elems: Vec<FpElement> = Vec::with_capacity(seqs.len());
    for s in &seqs {
        elems.push(fp.from_letters(s)?);
    }
    elems.sort();
    elems.dedup();

    let nf = frag.oracle();
    let pres = frag.presentation();
    let mut out = Vec::new();
    for a in &elems {
        for b in &elems {
            let ab = fp.multiply(a, b)?;
            for c in &elems {
                if *budget == 0 {
                    return Err(RhError::BudgetExceeded(
                        "too many candidate central triples".into(),
                    ));
                }
                *budget -= 1;
                let abc = fp.multiply(&ab, c)?;
                let word = pres.project_relword(&fp.long_normal_form(&abc))?;
                if nf.normal_form(&word).is_empty() {
                    out.push([a.clone(), b.clone(), c.clone()]);
                }
            }
        }
    }
    Ok(out)
}

/// All free-product elements labeling a `(lambda, mu)`-quasi-geodesic path
/// from the basepoint to the image of `p` in the fragment.
///
/// Parabolic letters are drawn from the factor balls of radius
/// `lambda * d(1, p) + mu`; `budget` bounds the enumeration.
pub fn enumerate_param_reps(
    frag: &Fragment,
    p: &Word,
    lambda: usize,
    mu: usize,
    budget: &mut usize,
) -> Result<Vec<FpElement>> {
    let fp = frag.free_product();
    let nf = frag.oracle();
    let target = nf.normal_form(p);
    let tv = frag
        .find_group_vertex(&target)
        .ok_or(RhError::FragmentTooSmall { required: (frag.radius() + 1) as u32 })?;
    let d = frag.vertex_depth(tv);
    let max_len = lambda.saturating_mul(d).saturating_add(mu);

    let mut universe: Vec<Letter> = Vec::new();
    for g in frag.presentation().gens() {
        universe.push(Letter::Gen(GenSymbol::pos(g.clone())));
        universe.push(Letter::Gen(GenSymbol::neg(g.clone())));
    }
    for k in 1..=fp.parabolics().len() {
        for fe in fp.factor_ball(k, max_len)? {
            universe.push(Letter::Par(fe));
        }
    }
    universe.sort();
    universe.dedup();

    let seqs = enumerate_lnf_by(&universe, max_len, budget, |l| {
        crate::group::FreeProduct::letter_path_len(std::slice::from_ref(l))
    })?;
    let mut out = Vec::new();
    for s in &seqs {
        let e = fp.from_letters(s)?;
        // only canonical sequences: each element once
        if fp.long_normal_form(&e) != *s {
            continue;
        }
        let word = frag.presentation().project_relword(s)?;
        if nf.normal_form(&word) != target {
            continue;
        }
        if path_is_quasi_geodesic(frag, &e, lambda, mu)? {
            out.push(e);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Does the path labeled by `e` satisfy the global `(lambda, mu)`
/// quasi-geodesic inequality on every subsegment?
pub fn path_is_quasi_geodesic(
    frag: &Fragment,
    e: &FpElement,
    lambda: usize,
    mu: usize,
) -> Result<bool> {
    let path = frag.path_of(e)?;
    let verts = &path.vertices;
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let len = j - i;
            let dist = frag
                .distance(verts[i], verts[j])
                .ok_or(RhError::FragmentTooSmall { required: (frag.radius() + 1) as u32 })?;
            if len > lambda * dist + mu {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The structural choice made for one triangle of one family member.
#[derive(Debug, Clone)]
enum TriangleChoice {
    Regular(usize),
    Singular(usize),
}

/// Build the lifted family of a triangular system.
///
/// Per triangle the member carries six equations tying the three lifted
/// sides to corner letters `l`, `c`, `r`: side `j` factors as
/// `l_j * c_j * r_j` and adjacent corners cancel (`r_j * l_{j+1} = 1`).
/// The central letters `c_j` are fixed from a chosen triple (regular) or,
/// in relative mode, constrained to one parabolic factor with trivial
/// product (singular).  Parameters are replaced by a chosen representative.
/// One member is produced per combination of choices; `max_members` bounds
/// the family size.
pub fn build_lifted_family(
    sys: &EqSystem,
    triples: &[[FpElement; 3]],
    reps: &BTreeMap<String, Vec<FpElement>>,
    mode: LiftMode,
    n_factors: usize,
    max_members: usize,
) -> Result<LiftedFamily> {
    if !sys.is_triangular() {
        return Err(RhError::ContractViolation("system must be triangular".into()));
    }
    let n = sys.equations.len();

    // choice space per triangle
    let mut triangle_choices: Vec<TriangleChoice> =
        (0..triples.len()).map(TriangleChoice::Regular).collect();
    if mode == LiftMode::Relative {
        triangle_choices.extend((1..=n_factors).map(TriangleChoice::Singular));
    }
    if n > 0 && triangle_choices.is_empty() {
        // no central data at all: the family is empty, which the caller
        // reports as such
        return Ok(Vec::new());
    }

    // parameters actually used by the system
    let used_params: Vec<&String> = sys
        .params
        .keys()
        .filter(|p| {
            sys.equations
                .iter()
                .chain(&sys.inequations)
                .chain(sys.constraints.iter().map(|(w, _)| w))
                .flatten()
                .any(|t| t.name == **p)
        })
        .collect();
    for p in &used_params {
        if reps.get(*p).map_or(true, |r| r.is_empty()) {
            return Err(RhError::ContractViolation(format!(
                "no representative enumerated for parameter {p}"
            )));
        }
    }

    // enumerate the cartesian product of choices
    let mut member_choices: Vec<(Vec<TriangleChoice>, BTreeMap<String, FpElement>)> =
        vec![(Vec::new(), BTreeMap::new())];
    for _ in 0..n {
        let mut next = Vec::new();
        for (tris, ps) in &member_choices {
            for c in &triangle_choices {
                let mut t = tris.clone();
                t.push(c.clone());
                next.push((t, ps.clone()));
                if next.len() > max_members {
                    return Err(RhError::BudgetExceeded(format!(
                        "lifted family larger than {max_members} members"
                    )));
                }
            }
        }
        member_choices = next;
    }
    for p in &used_params {
        let mut next = Vec::new();
        for (tris, ps) in &member_choices {
            for r in &reps[*p] {
                let mut m = ps.clone();
                m.insert((*p).clone(), r.clone());
                next.push((tris.clone(), m));
                if next.len() > max_members {
                    return Err(RhError::BudgetExceeded(format!(
                        "lifted family larger than {max_members} members"
                    )));
                }
            }
        }
        member_choices = next;
    }

    let mut family = Vec::with_capacity(member_choices.len());
    for (tris, param_choice) in member_choices {
        let mut fs = FpSystem::default();
        for u in &sys.unknowns {
            fs.add_unknown(u.clone());
        }
        for (p, v) in &param_choice {
            fs.params.insert(p.clone(), v.clone());
        }
        let mut tag_parts: Vec<String> = param_choice
            .iter()
            .map(|(p, v)| format!("{p}={v:?}"))
            .collect();

        for (i, eq) in sys.equations.iter().enumerate() {
            let choice = &tris[i];
            match choice {
                TriangleChoice::Regular(t) => tag_parts.push(format!("tri{i}=reg{t}")),
                TriangleChoice::Singular(k) => tag_parts.push(format!("tri{i}=sing{k}")),
            }
            let l = |j: usize| format!("_l{i}_{j}");
            let c = |j: usize| format!("_c{i}_{j}");
            let r = |j: usize| format!("_r{i}_{j}");
            for j in 0..3 {
                fs.add_unknown(l(j));
                fs.add_unknown(r(j));
            }
            match choice {
                TriangleChoice::Regular(t) => {
                    for j in 0..3 {
                        fs.params.insert(c(j), triples[*t][j].clone());
                    }
                }
                TriangleChoice::Singular(k) => {
                    for j in 0..3 {
                        fs.add_unknown(c(j));
                        fs.constraints.push((c(j), VarConstraint::InFactor(*k)));
                    }
                    // the singular corner letters close up on their own
                    fs.equations.push(vec![
                        EqTerm::plain(c(0)),
                        EqTerm::plain(c(1)),
                        EqTerm::plain(c(2)),
                    ]);
                }
            }
            for j in 0..3 {
                // side_j^-1 * l_j * c_j * r_j = 1
                let side = &eq[j];
                let mut w: EqWord = Vec::new();
                if !side.is_neutral() {
                    w.push(EqTerm { name: side.name.clone(), inverse: !side.inverse });
                }
                w.push(EqTerm::plain(l(j)));
                w.push(EqTerm::plain(c(j)));
                w.push(EqTerm::plain(r(j)));
                fs.equations.push(w);
                // r_j * l_{j+1} = 1
                fs.equations.push(vec![EqTerm::plain(r(j)), EqTerm::plain(l((j + 1) % 3))]);
            }
        }

        for w in &sys.inequations {
            fs.inequations.push(w[0].name.clone());
        }
        family.push(LiftedMember { tag: tag_parts.join(","), system: fs });
    }
    Ok(family)
}
