//! Bounded solving of free-product systems and the existential decision
//! procedure that lifts a system over the group into the free product.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::eq::lift::{
    build_lifted_family, central_triples_bounded, enumerate_param_reps, FpSystem, LiftMode,
    LiftedMember, VarConstraint,
};
use crate::eq::system::{ConstraintRef, EqSystem, EqWord};
use crate::graph::Fragment;
use crate::group::{FactorValue, FpElement, FreeProduct, GenSymbol, Word};
use crate::lang::{GeometryConstants, GnrAutomaton};
use crate::{RhError, Result};

/// Search bounds of the bounded solver: candidate values have at most
/// `max_syllables` syllables, free syllables have word length and abelian
/// syllables coordinate norm at most `max_coord`.
#[derive(Debug, Clone, Copy)]
pub struct SolveBudget {
    pub max_syllables: usize,
    pub max_coord: usize,
}

/// Result of a bounded search: a verified witness or no answer.  The bounded
/// solver never claims unsatisfiability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(BTreeMap<String, FpElement>),
    Unknown,
}

fn eval_word(
    fp: &FreeProduct,
    sys: &FpSystem,
    w: &EqWord,
    value: &BTreeMap<String, FpElement>,
) -> Result<FpElement> {
    let mut acc = FpElement::identity();
    for t in w {
        if t.is_neutral() {
            continue;
        }
        let v = value
            .get(&t.name)
            .or_else(|| sys.params.get(&t.name))
            .ok_or_else(|| RhError::Structural(format!("unassigned name {}", t.name)))?;
        let v = if t.inverse { fp.inverse(v)? } else { v.clone() };
        acc = fp.multiply(&acc, &v)?;
    }
    Ok(acc)
}

fn satisfies_constraint(fp: &FreeProduct, v: &FpElement, c: &VarConstraint) -> bool {
    match c {
        VarConstraint::Gnr(aut) => aut.accepts(&fp.long_normal_form(v)),
        VarConstraint::InFactor(k) => v.syllables().iter().all(|fe| fe.factor == *k),
    }
}

fn value_admissible(fp: &FreeProduct, sys: &FpSystem, name: &str, v: &FpElement) -> bool {
    if sys.inequations.iter().any(|u| u == name) && v.is_identity() {
        return false;
    }
    sys.constraints
        .iter()
        .filter(|(u, _)| u == name)
        .all(|(_, c)| satisfies_constraint(fp, v, c))
}

/// Verify a full assignment against every equation, inequation and
/// constraint of the system.
pub fn verify_assignment(
    fp: &FreeProduct,
    sys: &FpSystem,
    value: &BTreeMap<String, FpElement>,
) -> Result<bool> {
    for u in &sys.unknowns {
        let v = match value.get(u) {
            Some(v) => v,
            None => return Ok(false),
        };
        if !value_admissible(fp, sys, u, v) {
            return Ok(false);
        }
    }
    for e in &sys.equations {
        if !eval_word(fp, sys, e, value)?.is_identity() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All candidate values within the budget, in the deterministic witness
/// order: syllable count, then coordinate sup-norm, then element order.
fn candidate_universe(fp: &FreeProduct, budget: &SolveBudget) -> Result<Vec<FpElement>> {
    // per-factor syllable candidates
    let mut syllables: Vec<Vec<crate::group::FactorElement>> = Vec::new();
    let mut free: Vec<crate::group::FactorElement> = Vec::new();
    let gens: Vec<GenSymbol> = fp
        .free_gens()
        .iter()
        .flat_map(|g| [GenSymbol::pos(g.clone()), GenSymbol::neg(g.clone())])
        .collect();
    let mut words: Vec<Word> = vec![Word::empty()];
    for _ in 0..budget.max_coord {
        let mut next = Vec::new();
        for w in &words {
            for g in &gens {
                if w.letters().last().map_or(false, |l| l.inverse() == *g) {
                    continue;
                }
                let mut v = w.clone();
                v.push(g.clone());
                next.push(v);
            }
        }
        free.extend(next.iter().cloned().map(crate::group::FactorElement::free));
        words = next;
    }
    syllables.push(free);
    for k in 1..=fp.parabolics().len() {
        syllables.push(fp.factor_ball(k, budget.max_coord)?);
    }

    let mut out: Vec<FpElement> = vec![FpElement::identity()];
    let mut frontier: Vec<FpElement> = vec![FpElement::identity()];
    for _ in 0..budget.max_syllables {
        let mut next = Vec::new();
        for e in &frontier {
            let last = e.syllables().last().map(|fe| fe.factor);
            for (f, sylls) in syllables.iter().enumerate() {
                if last == Some(f) {
                    continue;
                }
                for s in sylls {
                    let mut raw = e.syllables().to_vec();
                    raw.push(s.clone());
                    next.push(fp.normalize(&raw)?);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    let sup = |e: &FpElement| -> usize {
        e.syllables()
            .iter()
            .map(|fe| match &fe.value {
                FactorValue::Free(w) => w.len(),
                FactorValue::Abelian(v) => v.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0),
                FactorValue::Finite(i) => *i,
                FactorValue::Rep(w) => w.len(),
            })
            .max()
            .unwrap_or(0)
    };
    out.sort_by(|a, b| {
        (a.syllable_len(), sup(a), a).cmp(&(b.syllable_len(), sup(b), b))
    });
    out.dedup();
    Ok(out)
}

fn propagate(
    fp: &FreeProduct,
    sys: &FpSystem,
    value: &mut BTreeMap<String, FpElement>,
) -> Result<bool> {
    loop {
        let mut forced: Option<(String, FpElement)> = None;
        for e in &sys.equations {
            let open: Vec<usize> = e
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    !t.is_neutral()
                        && !value.contains_key(&t.name)
                        && !sys.params.contains_key(&t.name)
                })
                .map(|(i, _)| i)
                .collect();
            match open.as_slice() {
                [] => {
                    if !eval_word(fp, sys, e, value)?.is_identity() {
                        return Ok(false);
                    }
                }
                [i] => {
                    let t = &e[*i];
                    let prefix = eval_word(fp, sys, &e[..*i].to_vec(), value)?;
                    let suffix = eval_word(fp, sys, &e[*i + 1..].to_vec(), value)?;
                    // prefix * X * suffix = 1
                    let mut x = fp.multiply(&fp.inverse(&prefix)?, &fp.inverse(&suffix)?)?;
                    if t.inverse {
                        x = fp.inverse(&x)?;
                    }
                    if !value_admissible(fp, sys, &t.name, &x) {
                        return Ok(false);
                    }
                    forced = Some((t.name.clone(), x));
                }
                _ => {}
            }
            if forced.is_some() {
                break;
            }
        }
        match forced {
            Some((name, x)) => {
                value.insert(name, x);
            }
            None => return Ok(true),
        }
    }
}

fn search(
    fp: &FreeProduct,
    sys: &FpSystem,
    universe: &[FpElement],
    value: &mut BTreeMap<String, FpElement>,
) -> Result<Option<BTreeMap<String, FpElement>>> {
    if !propagate(fp, sys, value)? {
        return Ok(None);
    }
    // branch inside the equation with the fewest open unknowns so that the
    // remaining slots of that equation propagate right away
    let branch_var = sys
        .equations
        .iter()
        .filter_map(|e| {
            let open: Vec<&String> = e
                .iter()
                .filter(|t| {
                    !t.is_neutral()
                        && !value.contains_key(&t.name)
                        && !sys.params.contains_key(&t.name)
                })
                .map(|t| &t.name)
                .collect();
            if open.is_empty() {
                None
            } else {
                Some((open.len(), open[0].clone()))
            }
        })
        .min_by_key(|(n, _)| *n)
        .map(|(_, u)| u)
        .or_else(|| sys.unknowns.iter().find(|u| !value.contains_key(*u)).cloned());
    match branch_var {
        None => {
            if verify_assignment(fp, sys, value)? {
                Ok(Some(value.clone()))
            } else {
                Ok(None)
            }
        }
        Some(u) => {
            let snapshot = value.clone();
            for v in universe {
                if !value_admissible(fp, sys, &u, v) {
                    continue;
                }
                value.insert(u.clone(), v.clone());
                if let Some(w) = search(fp, sys, universe, value)? {
                    return Ok(Some(w));
                }
                *value = snapshot.clone();
            }
            Ok(None)
        }
    }
}

/// Exhaustive backtracking search over all assignments within the budget.
/// A returned witness is always verified; `Unknown` only means no witness
/// was found within the budget.
pub fn bounded_solve(
    fp: &FreeProduct,
    sys: &FpSystem,
    budget: &SolveBudget,
) -> Result<SolveOutcome> {
    let universe = candidate_universe(fp, budget)?;
    let mut value = BTreeMap::new();
    match search(fp, sys, &universe, &mut value)? {
        Some(witness) => {
            debug_assert!(verify_assignment(fp, sys, &witness)?);
            Ok(SolveOutcome::Sat(witness))
        }
        None => Ok(SolveOutcome::Unknown),
    }
}

/// Bounds of the full existential procedure: enumeration work for central
/// triples and parameter representatives, family size, and the per-member
/// solver budget.
#[derive(Debug, Clone, Copy)]
pub struct DecideBudget {
    pub enumeration: usize,
    pub max_members: usize,
    /// Cap on the long-normal-form length of central letters; the effective
    /// bound is the smaller of this and `kappa * n`.  A tight cap keeps the
    /// family small and only costs completeness, never soundness.
    pub central_cap: usize,
    pub solve: SolveBudget,
}

/// Geometric context of the existential procedure: the explored fragment,
/// the constant stack, the language automaton, its nontrivial restriction,
/// and any automata loaded for file constraints (keyed by path).
pub struct ExistentialContext<'a> {
    pub frag: &'a Fragment,
    pub consts: &'a GeometryConstants,
    pub lang: Arc<GnrAutomaton>,
    pub lang_nontrivial: Arc<GnrAutomaton>,
    pub automata: BTreeMap<String, Arc<GnrAutomaton>>,
}

/// Outcome of the existential procedure over the group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExistentialOutcome {
    /// A witness in the group (one word per original unknown), with the tag
    /// of the family member that produced it.
    Sat { witness: BTreeMap<String, Word>, member: String },
    Unknown,
}

/// Decide (one-sidedly) whether the triangular system has a solution in the
/// group: lift it into the free product, constrain every unknown to the
/// geometric language (inequation unknowns to its nontrivial part), solve
/// the family members concurrently, and verify the projection of the first
/// witness in the group.
pub fn decide_existential(
    sys: &EqSystem,
    ctx: &ExistentialContext<'_>,
    mode: LiftMode,
    budget: &DecideBudget,
) -> Result<ExistentialOutcome> {
    if !sys.is_triangular() {
        return Err(RhError::ContractViolation("system must be triangular".into()));
    }
    let frag = ctx.frag;
    let fp = frag.free_product();
    let mut enum_budget = budget.enumeration;
    let n = sys.equations.len();
    let kappa = usize::try_from(ctx.consts.kappa)
        .map_err(|_| RhError::Unsupported("kappa too large for enumeration".into()))?;
    let bound = kappa.saturating_mul(n).min(budget.central_cap);
    let triples = central_triples_bounded(frag, bound, kappa, mode, &mut enum_budget)?;

    // representatives of every used parameter, restricted to the language
    let lambda = usize::try_from(ctx.consts.l1p)
        .map_err(|_| RhError::Unsupported("quasi-geodesic constants too large".into()))?;
    let mu = usize::try_from(ctx.consts.l2p)
        .map_err(|_| RhError::Unsupported("quasi-geodesic constants too large".into()))?;
    let mut reps: BTreeMap<String, Vec<FpElement>> = BTreeMap::new();
    for (p, w) in &sys.params {
        let all = enumerate_param_reps(frag, w, lambda, mu, &mut enum_budget)?;
        let in_lang: Vec<FpElement> = all
            .into_iter()
            .filter(|e| ctx.lang.accepts(&fp.long_normal_form(e)))
            .collect();
        reps.insert(p.clone(), in_lang);
    }

    let n_factors = fp.parabolics().len();
    let mut family =
        build_lifted_family(sys, &triples, &reps, mode, n_factors, budget.max_members)?;

    // attach the language constraints
    let ineq_unknowns: Vec<&String> = sys.inequations.iter().map(|w| &w[0].name).collect();
    for member in family.iter_mut() {
        for u in &sys.unknowns {
            let aut = if ineq_unknowns.contains(&u) {
                ctx.lang_nontrivial.clone()
            } else {
                ctx.lang.clone()
            };
            member.system.constraints.push((u.clone(), VarConstraint::Gnr(aut)));
        }
        for (w, lang) in &sys.constraints {
            let aut = match lang {
                ConstraintRef::Geometric => ctx.lang.clone(),
                ConstraintRef::GeometricNontrivial => ctx.lang_nontrivial.clone(),
                ConstraintRef::AutomatonFile(path) => ctx
                    .automata
                    .get(path)
                    .cloned()
                    .ok_or_else(|| {
                        RhError::MalformedInput(format!("automaton {path:?} not loaded"))
                    })?,
            };
            member.system.constraints.push((w[0].name.clone(), VarConstraint::Gnr(aut)));
        }
    }

    // solve concurrently; the leftmost certified witness wins, which keeps
    // the outcome independent of scheduling
    let result: Option<Result<(String, BTreeMap<String, Word>)>> =
        family.par_iter().find_map_first(|member: &LiftedMember| {
            match solve_and_project(sys, member, frag, &budget.solve) {
                Ok(Some(witness)) => Some(Ok((member.tag.clone(), witness))),
                Ok(None) => None,
                Err(e) => Some(Err(e)),
            }
        });
    match result {
        Some(Ok((member, witness))) => Ok(ExistentialOutcome::Sat { witness, member }),
        Some(Err(e)) => Err(e),
        None => Ok(ExistentialOutcome::Unknown),
    }
}

/// Solve one family member and verify the projected witness in the group;
/// a projection that fails verification is discarded, never reported.
fn solve_and_project(
    sys: &EqSystem,
    member: &LiftedMember,
    frag: &Fragment,
    budget: &SolveBudget,
) -> Result<Option<BTreeMap<String, Word>>> {
    let fp = frag.free_product();
    let pres = frag.presentation();
    let nf = frag.oracle();
    match bounded_solve(fp, &member.system, budget)? {
        SolveOutcome::Unknown => Ok(None),
        SolveOutcome::Sat(assignment) => {
            let mut witness: BTreeMap<String, Word> = BTreeMap::new();
            for u in &sys.unknowns {
                let v = &assignment[u];
                let word = pres.project_relword(&fp.long_normal_form(v))?;
                witness.insert(u.clone(), nf.normal_form(&word));
            }
            // verify in the group through the word-problem oracle
            let lookup = |t: &crate::eq::system::EqTerm| -> Result<Word> {
                let w = witness
                    .get(&t.name)
                    .cloned()
                    .or_else(|| sys.params.get(&t.name).cloned())
                    .ok_or_else(|| RhError::Structural(format!("unknown name {}", t.name)))?;
                Ok(if t.inverse { w.inverse() } else { w })
            };
            for e in &sys.equations {
                let mut acc = Word::empty();
                for t in e {
                    if t.is_neutral() {
                        continue;
                    }
                    acc = acc.concat(&lookup(t)?);
                }
                if !nf.normal_form(&acc).is_empty() {
                    return Ok(None);
                }
            }
            for i in &sys.inequations {
                let mut acc = Word::empty();
                for t in i {
                    if t.is_neutral() {
                        continue;
                    }
                    acc = acc.concat(&lookup(t)?);
                }
                if nf.normal_form(&acc).is_empty() {
                    return Ok(None);
                }
            }
            Ok(Some(witness))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eq::system::EqTerm;
    use crate::group::{parse_presentation, FactorElement, GroupFamily};
    use crate::lang::{build_language_automaton, LangTester};

    const FREE2: &str = "
[group]
generators = a, b
";

    const FREE1: &str = "
[group]
generators = a
";

    fn free_fp(pres_text: &str) -> (crate::group::RelPresentation, FreeProduct) {
        let pres = parse_presentation(pres_text).unwrap();
        let fp = FreeProduct::new(pres.gens().to_vec(), Vec::new()).unwrap();
        (pres, fp)
    }

    fn gen_elem(fp: &FreeProduct, s: &str) -> FpElement {
        fp.normalize(&[FactorElement::free(Word::parse(s).unwrap())]).unwrap()
    }

    #[test]
    fn conjugation_system_finds_the_smallest_commuting_witness() {
        let (_, fp) = free_fp(FREE2);
        let mut sys = FpSystem::default();
        sys.add_unknown("x");
        sys.params.insert("a".into(), gen_elem(&fp, "a"));
        sys.equations.push(vec![
            EqTerm::plain("x"),
            EqTerm::plain("a"),
            EqTerm::inv("x"),
            EqTerm::inv("a"),
        ]);
        sys.inequations.push("x".into());
        let budget = SolveBudget { max_syllables: 2, max_coord: 2 };
        match bounded_solve(&fp, &sys, &budget).unwrap() {
            SolveOutcome::Sat(w) => assert_eq!(w["x"], gen_elem(&fp, "a")),
            SolveOutcome::Unknown => panic!("expected a witness"),
        }
    }

    #[test]
    fn odd_word_square_root_stays_unknown() {
        let (_, fp) = free_fp(FREE1);
        let mut sys = FpSystem::default();
        sys.add_unknown("x");
        sys.params.insert("a".into(), gen_elem(&fp, "a"));
        sys.equations.push(vec![EqTerm::plain("x"), EqTerm::plain("x"), EqTerm::inv("a")]);
        for budget in [
            SolveBudget { max_syllables: 1, max_coord: 3 },
            SolveBudget { max_syllables: 2, max_coord: 4 },
        ] {
            assert_eq!(bounded_solve(&fp, &sys, &budget).unwrap(), SolveOutcome::Unknown);
        }
    }

    #[test]
    fn empty_system_is_satisfiable_with_the_empty_witness() {
        let (_, fp) = free_fp(FREE2);
        let sys = FpSystem::default();
        let budget = SolveBudget { max_syllables: 1, max_coord: 1 };
        assert_eq!(
            bounded_solve(&fp, &sys, &budget).unwrap(),
            SolveOutcome::Sat(BTreeMap::new())
        );
    }

    #[test]
    fn factor_constraint_is_respected() {
        let pres = parse_presentation(
            "
[group]
generators = a, b
relators = a P[-1,0], b P[0,-1]
[parabolic.P]
kind = free-abelian
rank = 2
gens = p, q
embed p = a
embed q = b
",
        )
        .unwrap();
        let fp = FreeProduct::new(pres.gens().to_vec(), pres.parabolics().to_vec()).unwrap();
        let par = |v: Vec<i64>| fp.normalize(&[FactorElement::abelian(1, v)]).unwrap();
        // x * (-1,0) = 1 forces x = (1,0), which satisfies the constraint
        let mut sys = FpSystem::default();
        sys.add_unknown("x");
        sys.params.insert("m".into(), par(vec![-1, 0]));
        sys.equations.push(vec![EqTerm::plain("x"), EqTerm::plain("m")]);
        sys.constraints.push(("x".into(), VarConstraint::InFactor(1)));
        let budget = SolveBudget { max_syllables: 1, max_coord: 2 };
        match bounded_solve(&fp, &sys, &budget).unwrap() {
            SolveOutcome::Sat(w) => assert_eq!(w["x"], par(vec![1, 0])),
            SolveOutcome::Unknown => panic!("expected a witness"),
        }
        // forcing x into the free factor instead contradicts the constraint
        let mut bad = FpSystem::default();
        bad.add_unknown("x");
        bad.params.insert("g".into(), gen_elem(&fp, "a"));
        bad.equations.push(vec![EqTerm::plain("x"), EqTerm::inv("g")]);
        bad.constraints.push(("x".into(), VarConstraint::InFactor(1)));
        assert_eq!(bounded_solve(&fp, &bad, &budget).unwrap(), SolveOutcome::Unknown);
    }

    fn existential_fixture(
    ) -> (crate::graph::Fragment, crate::lang::GeometryConstants) {
        let pres = parse_presentation(FREE2).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let frag = crate::graph::Fragment::explore(&pres, &nf, 8, 4).unwrap();
        let consts = crate::lang::GeometryConstants::toy(1, 2, 3, 2, 50).unwrap();
        (frag, consts)
    }

    fn language_automata(
        frag: &crate::graph::Fragment,
        consts: &crate::lang::GeometryConstants,
    ) -> (Arc<GnrAutomaton>, Arc<GnrAutomaton>) {
        let tester = LangTester::new(frag, consts).unwrap();
        let lang = build_language_automaton(&tester, 200_000, &[]).unwrap();
        let l0 = tester.trivial_sublanguage(2, 2).unwrap();
        let nontrivial = build_language_automaton(&tester, 200_000, &l0).unwrap();
        (Arc::new(lang), Arc::new(nontrivial))
    }

    #[test]
    fn commuting_witness_end_to_end() {
        let (frag, consts) = existential_fixture();
        let (lang, nontrivial) = language_automata(&frag, &consts);
        let sys = crate::eq::system::parse_system(
            "unknowns: x\nparam a = a\neq: x a x^-1 a^-1\nineq: x",
        )
        .unwrap()
        .triangulate()
        .unwrap();
        let ctx = ExistentialContext {
            frag: &frag,
            consts: &consts,
            lang,
            lang_nontrivial: nontrivial,
            automata: BTreeMap::new(),
        };
        let budget = DecideBudget {
            enumeration: 2_000_000,
            max_members: 100,
            central_cap: 0,
            solve: SolveBudget { max_syllables: 1, max_coord: 2 },
        };
        match decide_existential(&sys, &ctx, LiftMode::Hyperbolic, &budget).unwrap() {
            ExistentialOutcome::Sat { witness, .. } => {
                let x = &witness["x"];
                assert!(!x.is_empty(), "witness must be nontrivial");
                // x commutes with a in the free group, so it is a power of a
                assert!(x.letters().iter().all(|g| g.name() == "a"));
            }
            ExistentialOutcome::Unknown => panic!("expected a witness"),
        }
    }

    #[test]
    fn contradictory_system_stays_unknown() {
        let (frag, consts) = existential_fixture();
        let (lang, nontrivial) = language_automata(&frag, &consts);
        // x = 1 and x != 1 can never verify; bounded mode reports Unknown
        let sys = crate::eq::system::parse_system("unknowns: x\neq: x\nineq: x")
            .unwrap()
            .triangulate()
            .unwrap();
        let ctx = ExistentialContext {
            frag: &frag,
            consts: &consts,
            lang,
            lang_nontrivial: nontrivial,
            automata: BTreeMap::new(),
        };
        let budget = DecideBudget {
            enumeration: 2_000_000,
            max_members: 100,
            central_cap: 0,
            solve: SolveBudget { max_syllables: 1, max_coord: 2 },
        };
        assert_eq!(
            decide_existential(&sys, &ctx, LiftMode::Hyperbolic, &budget).unwrap(),
            ExistentialOutcome::Unknown
        );
    }

    #[test]
    fn parameterless_trivial_system_is_satisfiable() {
        let (frag, consts) = existential_fixture();
        let (lang, nontrivial) = language_automata(&frag, &consts);
        let sys = crate::eq::system::parse_system("unknowns: x\neq: x")
            .unwrap()
            .triangulate()
            .unwrap();
        let ctx = ExistentialContext {
            frag: &frag,
            consts: &consts,
            lang,
            lang_nontrivial: nontrivial,
            automata: BTreeMap::new(),
        };
        let budget = DecideBudget {
            enumeration: 2_000_000,
            max_members: 100,
            central_cap: 0,
            solve: SolveBudget { max_syllables: 1, max_coord: 2 },
        };
        match decide_existential(&sys, &ctx, LiftMode::Hyperbolic, &budget).unwrap() {
            ExistentialOutcome::Sat { witness, .. } => {
                assert!(witness["x"].is_empty(), "x must be the identity");
            }
            ExistentialOutcome::Unknown => panic!("expected the identity witness"),
        }
    }
}
