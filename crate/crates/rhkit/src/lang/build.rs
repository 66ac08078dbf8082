//! Compilation of the geometric language into a finite automaton: small
//! bounded detours and forbidden quasi-geodesic windows become forbidden
//! factor patterns over an abstract symbol alphabet, and the avoidance
//! automaton is converted into a gnr automaton over the letter alphabet.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::Fragment;
use crate::group::{FactorElement, FpElement, FreeProduct, GenSymbol, Letter};
use crate::lang::detour::{body_projects_into_factor, LangTester, SectorTable};
use crate::lang::fsa::{SymbolDfa, SymbolNfa};
use crate::lang::gnr::{GnrAutomaton, GnrLabel, SetSpec};
use crate::{RhError, Result};

/// One symbol of the abstract alphabet underlying the pattern automaton.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LangSymbol {
    Gen(GenSymbol),
    /// A specific, explicitly tracked parabolic element.
    Par(FactorElement),
    /// Any parabolic element of the given factor that is not tracked
    /// explicitly.
    Other(usize),
}

/// The finite symbol alphabet: all generators, the explicitly tracked
/// elements of each factor, and one remainder symbol per factor.
struct SymbolTable {
    syms: Vec<LangSymbol>,
    gen_ids: BTreeMap<GenSymbol, usize>,
    par_ids: BTreeMap<FactorElement, usize>,
    /// Remainder symbol of factor `k` at index `k-1`.
    other_ids: Vec<usize>,
}

impl SymbolTable {
    fn new(gens: Vec<GenSymbol>, explicit: &[Vec<FactorElement>]) -> SymbolTable {
        let mut syms = Vec::new();
        let mut gen_ids = BTreeMap::new();
        let mut par_ids = BTreeMap::new();
        let mut other_ids = Vec::new();
        for g in gens {
            gen_ids.insert(g.clone(), syms.len());
            syms.push(LangSymbol::Gen(g));
        }
        for (i, elems) in explicit.iter().enumerate() {
            for fe in elems {
                par_ids.insert(fe.clone(), syms.len());
                syms.push(LangSymbol::Par(fe.clone()));
            }
            other_ids.push(syms.len());
            syms.push(LangSymbol::Other(i + 1));
        }
        SymbolTable { syms, gen_ids, par_ids, other_ids }
    }

    fn len(&self) -> usize {
        self.syms.len()
    }

    fn sym_of(&self, l: &Letter) -> usize {
        match l {
            Letter::Gen(g) => self.gen_ids[g],
            Letter::Par(fe) => {
                self.par_ids.get(fe).copied().unwrap_or(self.other_ids[fe.factor - 1])
            }
        }
    }

    fn seq(&self, letters: &[Letter]) -> Vec<usize> {
        letters.iter().map(|l| self.sym_of(l)).collect()
    }

    /// Symbols matching the cofinite set `P_k` minus the given sector.
    fn cofinite_set(&self, k: usize, sector: &SectorTable) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (fe, &id) in &self.par_ids {
            if fe.factor == k && !sector.contains(fe) {
                out.insert(id);
            }
        }
        out.insert(self.other_ids[k - 1]);
        out
    }
}

/// Enumerate all long-normal-form letter sequences over `universe` whose
/// total cost under `cost` is at most `max_len`, in deterministic order.
/// Decrements `budget` per sequence and fails once it is exhausted.
pub(crate) fn enumerate_lnf_by(
    universe: &[Letter],
    max_len: usize,
    budget: &mut usize,
    cost: impl Fn(&Letter) -> usize,
) -> Result<Vec<Vec<Letter>>> {
    // a letter sequence is a long normal form iff consecutive generator
    // letters never cancel and consecutive parabolic letters never share a
    // factor; both checks are local to the last letter
    fn extendable(last: Option<&Letter>, next: &Letter) -> bool {
        match (last, next) {
            (Some(Letter::Gen(a)), Letter::Gen(b)) => {
                !(a.name() == b.name() && a.sign() != b.sign())
            }
            (Some(Letter::Par(a)), Letter::Par(b)) => a.factor != b.factor,
            _ => true,
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<Letter>, usize)> = vec![(Vec::new(), 0)];
    while let Some((seq, cost_so_far)) = stack.pop() {
        if *budget == 0 {
            return Err(RhError::BudgetExceeded(
                "too many normal forms in the pattern enumeration".into(),
            ));
        }
        *budget -= 1;
        for l in universe.iter().rev() {
            let c = cost_so_far + cost(l);
            if c <= max_len && extendable(seq.last(), l) {
                let mut next = seq.clone();
                next.push(l.clone());
                stack.push((next, c));
            }
        }
        out.push(seq);
    }
    Ok(out)
}

/// [`enumerate_lnf_by`] with the coned-off path-length cost.
pub(crate) fn enumerate_lnf(
    universe: &[Letter],
    max_len: usize,
    budget: &mut usize,
) -> Result<Vec<Vec<Letter>>> {
    enumerate_lnf_by(universe, max_len, budget, |l| {
        FreeProduct::letter_path_len(std::slice::from_ref(l))
    })
}

/// Letter universe: the symmetric generators plus the non-identity elements
/// of every sector in the table.
fn sector_universe(frag: &Fragment, table: &SectorTable) -> Result<Vec<Letter>> {
    let fp = frag.free_product();
    let mut out: Vec<Letter> = Vec::new();
    for g in frag.presentation().gens() {
        out.push(Letter::Gen(GenSymbol::pos(g.clone())));
        out.push(Letter::Gen(GenSymbol::neg(g.clone())));
    }
    for elems in &table.sectors {
        for fe in elems {
            if !fp.syllable_is_identity(fe)? {
                out.push(Letter::Par(fe.clone()));
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// A word of the window vocabulary: its letters, its path length and the
/// distance of its image from the identity in the coned-off graph.
struct VocabWord {
    letters: Vec<Letter>,
    len: u128,
    dist: u128,
}

fn image_distance(frag: &Fragment, letters: &[Letter]) -> Result<u128> {
    let word = frag.presentation().project_relword(&letters.to_vec())?;
    let image = frag.oracle().normal_form(&word);
    let v = frag
        .find_group_vertex(&image)
        .ok_or(RhError::FragmentTooSmall { required: (frag.radius() + 1) as u32 })?;
    Ok(frag.vertex_depth(v) as u128)
}

/// Build the gnr automaton of the geometric language over the fragment,
/// minus the listed excluded elements.  `budget` bounds the enumeration work
/// (normal forms and window tuples); an exhausted budget is an error, never
/// a silently smaller language.
pub fn build_language_automaton(
    tester: &LangTester,
    budget: usize,
    exclude: &[FpElement],
) -> Result<GnrAutomaton> {
    let frag = tester.fragment();
    let fp = frag.free_product();
    let pres = frag.presentation();
    let consts = tester.constants();
    let q = pres.parabolics().len();
    let mut budget = budget;

    let theta = usize::try_from(consts.theta)
        .map_err(|_| RhError::BudgetExceeded("theta overflows usize".into()))?;
    let a_bound = usize::try_from(consts.a)
        .map_err(|_| RhError::BudgetExceeded("angle bound overflows usize".into()))?;
    let l = usize::try_from(consts.l)
        .map_err(|_| RhError::BudgetExceeded("local scale overflows usize".into()))?;
    let l2p = usize::try_from(consts.l2p)
        .map_err(|_| RhError::BudgetExceeded("l2' overflows usize".into()))?;
    let _ = theta;

    let sec_theta = tester.sector_theta();
    let sec_small = tester.sector_small();
    let sec_a = SectorTable::compute(frag, a_bound)?;

    // explicitly tracked elements per factor: all sector elements plus the
    // letters of the excluded elements, identities dropped
    let mut explicit: Vec<Vec<FactorElement>> = vec![Vec::new(); q];
    for table in [sec_theta, sec_small, &sec_a] {
        for (i, elems) in table.sectors.iter().enumerate() {
            explicit[i].extend(elems.iter().cloned());
        }
    }
    for e in exclude {
        for letter in fp.long_normal_form(e) {
            if let Letter::Par(fe) = letter {
                explicit[fe.factor - 1].push(fe);
            }
        }
    }
    for elems in explicit.iter_mut() {
        elems.sort();
        elems.dedup();
        let mut kept = Vec::new();
        for fe in elems.drain(..) {
            if !fp.syllable_is_identity(&fe)? {
                kept.push(fe);
            }
        }
        *elems = kept;
    }
    let mut gens = Vec::new();
    for g in pres.gens() {
        gens.push(GenSymbol::pos(g.clone()));
        gens.push(GenSymbol::neg(g.clone()));
    }
    let table = SymbolTable::new(gens, &explicit);

    let mut patterns: Vec<Vec<BTreeSet<usize>>> = Vec::new();

    // forbidden family one: small detours of bounded length.  The body uses
    // letters of small sectors, projects into the factor, and is flanked by
    // two high-angle elements of that factor.
    let small_universe = sector_universe(frag, sec_small)?;
    let bodies = enumerate_lnf(&small_universe, l2p, &mut budget)?;
    for k in 1..=q {
        let flank = table.cofinite_set(k, sec_theta);
        for body in &bodies {
            if body.is_empty() {
                continue;
            }
            // in a long normal form the letters next to the flanks cannot
            // lie in the flank factor themselves
            let boundary_in_k = |l: &Letter| matches!(l, Letter::Par(fe) if fe.factor == k);
            if boundary_in_k(&body[0]) || boundary_in_k(&body[body.len() - 1]) {
                continue;
            }
            if !body_projects_into_factor(frag, body, k)? {
                continue;
            }
            let mut pat = vec![flank.clone()];
            for l in body {
                pat.push(BTreeSet::from([table.sym_of(l)]));
            }
            pat.push(flank.clone());
            patterns.push(pat);
        }
    }

    // forbidden family two: windows that violate the local quasi-geodesic
    // inequality.  A window without detour decomposes uniquely into low-angle
    // words separated by high-angle parabolic letters; the inequality then
    // only depends on the words' path lengths and image distances.
    let a_universe = sector_universe(frag, &sec_a)?;
    let mut vocab = Vec::new();
    for letters in enumerate_lnf(&a_universe, l, &mut budget)? {
        let len = FreeProduct::letter_path_len(&letters) as u128;
        let dist = image_distance(frag, &letters)?;
        vocab.push(VocabWord { letters, len, dist });
    }
    // separators may come from any factor
    let mut separator = BTreeSet::new();
    for k in 1..=q {
        separator.extend(table.cofinite_set(k, &sec_a));
    }
    // depth-first over tuples (w_1, ..., w_{k+1}) with 2k + sum len <= l
    struct TupleSearch<'v> {
        vocab: &'v [VocabWord],
        l: u128,
        l1: u128,
        l2: u128,
    }
    impl TupleSearch<'_> {
        /// Extend a partial tuple; `k` separators and the listed words are
        /// already chosen.
        fn go(
            &self,
            chosen: &mut Vec<usize>,
            len_sum: u128,
            dist_sum: u128,
            budget: &mut usize,
            out: &mut Vec<Vec<usize>>,
        ) -> Result<()> {
            if *budget == 0 {
                return Err(RhError::BudgetExceeded(
                    "too many window tuples in the pattern enumeration".into(),
                ));
            }
            *budget -= 1;
            if !chosen.is_empty() {
                let k = (chosen.len() - 1) as u128;
                let total_len = 2 * k + len_sum;
                let total_dist = 2 * k + dist_sum;
                if total_len <= self.l && total_len > self.l1 * total_dist + self.l2 {
                    out.push(chosen.clone());
                }
            }
            // after adding one more word the tuple has `chosen.len()`
            // separators, each contributing two edges to the window length
            let seps_after = chosen.len() as u128;
            for (i, w) in self.vocab.iter().enumerate() {
                if 2 * seps_after + len_sum + w.len <= self.l {
                    chosen.push(i);
                    self.go(chosen, len_sum + w.len, dist_sum + w.dist, budget, out)?;
                    chosen.pop();
                }
            }
            Ok(())
        }
    }
    let search = TupleSearch { vocab: &vocab, l: consts.l, l1: consts.l1, l2: consts.l2 };
    let mut tuples = Vec::new();
    search.go(&mut Vec::new(), 0, 0, &mut budget, &mut tuples)?;
    for tuple in tuples {
        let mut pat: Vec<BTreeSet<usize>> = Vec::new();
        for (i, &wi) in tuple.iter().enumerate() {
            if i > 0 {
                pat.push(separator.clone());
            }
            for l in &vocab[wi].letters {
                pat.push(BTreeSet::from([table.sym_of(l)]));
            }
        }
        if pat.is_empty() {
            // the empty window can never violate the inequality, but guard
            // against a degenerate constant choice making it forbidden
            return Err(RhError::ContractViolation(
                "empty window classified as forbidden".into(),
            ));
        }
        patterns.push(pat);
    }

    let mut dfa =
        SymbolNfa::containing_patterns(table.len(), &patterns).determinize().complement();
    if !exclude.is_empty() {
        let seqs: Vec<Vec<usize>> = exclude
            .iter()
            .map(|e| table.seq(&fp.long_normal_form(e)))
            .collect();
        dfa = dfa.intersect(&SymbolDfa::finite_language(table.len(), &seqs).complement());
    }
    Ok(dfa_to_gnr(&dfa, &table))
}

/// Convert a symbol automaton back to the letter alphabet: generator symbols
/// become generator labels, and each (state, state, factor) group becomes
/// one finite or cofinite label depending on where the remainder symbol goes.
fn dfa_to_gnr(dfa: &SymbolDfa, table: &SymbolTable) -> GnrAutomaton {
    let mut transitions = Vec::new();
    for u in 0..dfa.n_states() {
        // explicit parabolic symbols grouped by (target, factor)
        let mut grouped: BTreeMap<(usize, usize), Vec<FactorElement>> = BTreeMap::new();
        for (s, sym) in table.syms.iter().enumerate() {
            let v = dfa.trans[u][s];
            match sym {
                LangSymbol::Gen(g) => transitions.push((u, v, GnrLabel::Gen(g.clone()))),
                LangSymbol::Par(fe) => {
                    grouped.entry((v, fe.factor)).or_default().push(fe.clone())
                }
                LangSymbol::Other(_) => {}
            }
        }
        for (k, &other_sym) in table.other_ids.iter().enumerate() {
            let factor = k + 1;
            let other_target = dfa.trans[u][other_sym];
            let mut targets: BTreeSet<usize> = grouped
                .keys()
                .filter(|&&(_, f)| f == factor)
                .map(|&(v, _)| v)
                .collect();
            targets.insert(other_target);
            for v in targets {
                let explicit_here =
                    grouped.get(&(v, factor)).cloned().unwrap_or_default();
                if v == other_target {
                    // everything except the explicit elements routed elsewhere
                    let mut elsewhere: Vec<FactorElement> = grouped
                        .iter()
                        .filter(|&(&(w, f), _)| f == factor && w != v)
                        .flat_map(|(_, elems)| elems.iter().cloned())
                        .collect();
                    elsewhere.sort();
                    transitions.push((
                        u,
                        v,
                        GnrLabel::Par { factor, set: SetSpec::NotIn(elsewhere) },
                    ));
                } else if !explicit_here.is_empty() {
                    transitions.push((
                        u,
                        v,
                        GnrLabel::Par { factor, set: SetSpec::In(explicit_here) },
                    ));
                }
            }
        }
    }
    GnrAutomaton {
        n_states: dfa.n_states(),
        initial: dfa.initial,
        accepting: (0..dfa.n_states()).filter(|&s| dfa.accepting[s]).collect(),
        transitions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{parse_presentation, GroupFamily};
    use crate::lang::constants::GeometryConstants;

    const FREE: &str = "
[group]
generators = a, b
";

    const Z_WITH_Z_PARABOLIC: &str = "
[group]
generators = a
[parabolic.P]
kind = free-abelian
rank = 1
gens = p
embed p = a
";

    #[test]
    fn free_group_language_is_all_reduced_words() {
        let pres = parse_presentation(FREE).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 8, 4).unwrap();
        let consts = GeometryConstants::toy(1, 2, 3, 2, 50).unwrap();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let aut = build_language_automaton(&tester, 1_000_000, &[]).unwrap();
        // exhaustive agreement with the direct membership test, <= 4 letters
        let universe: Vec<Letter> = ["a", "A", "b", "B"]
            .iter()
            .map(|s| Letter::Gen(GenSymbol::from_char(s.chars().next().unwrap()).unwrap()))
            .collect();
        let mut budget = 10_000;
        for seq in enumerate_lnf(&universe, 4, &mut budget).unwrap() {
            let e = frag.free_product().from_letters(&seq).unwrap();
            let direct = tester.in_language(&e).unwrap();
            assert!(direct, "free-group reduced words are always geometric");
            assert_eq!(aut.accepts(&seq), direct, "disagree on {seq:?}");
        }
    }

    #[test]
    fn excluding_identity_rejects_empty_word() {
        let pres = parse_presentation(FREE).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 8, 4).unwrap();
        let consts = GeometryConstants::toy(1, 2, 3, 2, 50).unwrap();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let aut =
            build_language_automaton(&tester, 1_000_000, &[FpElement::identity()]).unwrap();
        assert!(!aut.accepts(&[]));
        assert!(aut.accepts(&[Letter::Gen(GenSymbol::pos("a"))]));
    }

    #[test]
    fn forbidden_window_is_rejected() {
        // base group Z with Z itself as a parabolic: the element a p(-1)
        // labels a loop of positive length, hence fails the quasi-geodesic
        // inequality for L1 = 1, L2 = 0
        let pres = parse_presentation(Z_WITH_Z_PARABOLIC).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 8, 8).unwrap();
        let consts = GeometryConstants::toy(1, 0, 3, 2, 6).unwrap();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let aut = build_language_automaton(&tester, 10_000_000, &[]).unwrap();
        let bad = vec![
            Letter::Gen(GenSymbol::pos("a")),
            Letter::Par(FactorElement::abelian(1, vec![-1])),
        ];
        assert!(!tester.in_language(&frag.free_product().from_letters(&bad).unwrap()).unwrap());
        assert!(!aut.accepts(&bad));
        let good = vec![Letter::Gen(GenSymbol::pos("a"))];
        assert!(tester.in_language(&frag.free_product().from_letters(&good).unwrap()).unwrap());
        assert!(aut.accepts(&good));
    }

    #[test]
    fn small_detour_is_rejected() {
        let pres = parse_presentation(Z_WITH_Z_PARABOLIC).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 8, 8).unwrap();
        // l2' = 2 allows detour bodies of length up to 2; theta = 2 makes
        // p(5) a high-angle flank
        let consts = GeometryConstants::toy(1, 2, 5, 2, 6).unwrap();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let aut = build_language_automaton(&tester, 10_000_000, &[]).unwrap();
        let bad = vec![
            Letter::Par(FactorElement::abelian(1, vec![5])),
            Letter::Gen(GenSymbol::neg("a")),
            Letter::Par(FactorElement::abelian(1, vec![5])),
        ];
        let e = frag.free_product().from_letters(&bad).unwrap();
        assert!(tester.has_small_detour(&e).unwrap());
        assert!(!aut.accepts(&bad));
    }
}
