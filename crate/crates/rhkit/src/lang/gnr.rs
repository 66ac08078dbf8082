//! Automata whose edges are labeled by generators or by finite / cofinite
//! subsets of the parabolic factors, reading long normal forms, and their
//! conversion to ordinary word automata over the generator alphabet.

use std::collections::{BTreeMap, BTreeSet};

use crate::group::{
    FactorElement, FactorValue, FreeProduct, GenSymbol, Letter, ParabolicKind, RelPresentation,
    Sign, Word,
};
use crate::lang::fsa::SymbolDfa;
use crate::{RhError, Result};

/// A finite or cofinite subset of one parabolic factor, never containing the
/// factor identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SetSpec {
    In(Vec<FactorElement>),
    NotIn(Vec<FactorElement>),
}

impl SetSpec {
    pub fn contains(&self, fe: &FactorElement) -> bool {
        match self {
            SetSpec::In(list) => list.contains(fe),
            SetSpec::NotIn(list) => !list.contains(fe),
        }
    }

    /// Exact intersection within the {finite, cofinite} algebra.
    pub fn intersect(&self, other: &SetSpec) -> SetSpec {
        match (self, other) {
            (SetSpec::In(a), SetSpec::In(b)) => {
                SetSpec::In(a.iter().filter(|x| b.contains(x)).cloned().collect())
            }
            (SetSpec::In(a), SetSpec::NotIn(b)) | (SetSpec::NotIn(b), SetSpec::In(a)) => {
                SetSpec::In(a.iter().filter(|x| !b.contains(x)).cloned().collect())
            }
            (SetSpec::NotIn(a), SetSpec::NotIn(b)) => {
                let mut u: Vec<FactorElement> = a.iter().chain(b).cloned().collect();
                u.sort();
                u.dedup();
                SetSpec::NotIn(u)
            }
        }
    }
}

/// A transition label: a single generator of the free factor, or a subset of
/// one parabolic factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GnrLabel {
    Gen(GenSymbol),
    Par { factor: usize, set: SetSpec },
}

impl GnrLabel {
    pub fn matches(&self, l: &Letter) -> bool {
        match (self, l) {
            (GnrLabel::Gen(g), Letter::Gen(h)) => g == h,
            (GnrLabel::Par { factor, set }, Letter::Par(fe)) => {
                *factor == fe.factor && set.contains(fe)
            }
            _ => false,
        }
    }
}

/// A finite automaton over the letter alphabet `S ⊔ H~_1 ⊔ ...` whose
/// parabolic labels are finite or cofinite subsets; it reads long normal
/// forms letter by letter.
#[derive(Debug, Clone)]
pub struct GnrAutomaton {
    pub n_states: usize,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<(usize, usize, GnrLabel)>,
}

impl GnrAutomaton {
    /// Validate the structural invariants: state indices in range and no
    /// label containing the identity of its factor.
    pub fn validate(&self, fp: &FreeProduct) -> Result<()> {
        for (from, to, label) in &self.transitions {
            if *from >= self.n_states || *to >= self.n_states {
                return Err(RhError::Structural("transition state out of range".into()));
            }
            if let GnrLabel::Par { set: SetSpec::In(list), .. } = label {
                for fe in list {
                    if fp.syllable_is_identity(&fp.canonicalize_syllable(fe)?)? {
                        return Err(RhError::Structural(
                            "gnr label contains a factor identity".into(),
                        ));
                    }
                }
            }
        }
        if self.initial >= self.n_states {
            return Err(RhError::Structural("initial state out of range".into()));
        }
        Ok(())
    }

    /// Nondeterministic acceptance of a long normal form.
    pub fn accepts(&self, letters: &[Letter]) -> bool {
        let mut cur: BTreeSet<usize> = BTreeSet::from([self.initial]);
        for l in letters {
            let mut next = BTreeSet::new();
            for (from, to, label) in &self.transitions {
                if cur.contains(from) && label.matches(l) {
                    next.insert(*to);
                }
            }
            cur = next;
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.accepting.contains(q))
    }

    /// Line-oriented serialization (`Q`/`I`/`T` records).
    pub fn serialize(&self, fp: &FreeProduct) -> String {
        let mut out = String::new();
        for q in 0..self.n_states {
            if self.accepting.contains(&q) {
                out.push_str(&format!("Q {q} accept\n"));
            } else {
                out.push_str(&format!("Q {q}\n"));
            }
        }
        out.push_str(&format!("I {}\n", self.initial));
        for (from, to, label) in &self.transitions {
            match label {
                GnrLabel::Gen(g) => out.push_str(&format!("T {from} {to} 0 IN {g}\n")),
                GnrLabel::Par { factor, set } => {
                    let (tag, list) = match set {
                        SetSpec::In(l) => ("IN", l),
                        SetSpec::NotIn(l) => ("NOTIN", l),
                    };
                    let elems = if list.is_empty() {
                        "-".to_string()
                    } else {
                        list.iter().map(|fe| fp.format_syllable(fe)).collect::<Vec<_>>().join(",")
                    };
                    out.push_str(&format!("T {from} {to} {factor} {tag} {elems}\n"));
                }
            }
        }
        out
    }

    /// Parse the serialization produced by [`Self::serialize`].
    pub fn parse(text: &str, pres: &RelPresentation) -> Result<GnrAutomaton> {
        let mut n_states = 0usize;
        let mut accepting = BTreeSet::new();
        let mut initial = None;
        let mut transitions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "Q" if fields.len() == 2 || fields.len() == 3 => {
                    let id: usize = fields[1]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad state id".into() })?;
                    n_states = n_states.max(id + 1);
                    if fields.len() == 3 {
                        if fields[2] != "accept" {
                            return Err(RhError::Parse { line, msg: "expected `accept`".into() });
                        }
                        accepting.insert(id);
                    }
                }
                "I" if fields.len() == 2 => {
                    initial = Some(fields[1].parse().map_err(|_| RhError::Parse {
                        line,
                        msg: "bad initial state".into(),
                    })?);
                }
                "T" if fields.len() == 6 => {
                    let from: usize = fields[1]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad state id".into() })?;
                    let to: usize = fields[2]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad state id".into() })?;
                    let factor: usize = fields[3]
                        .parse()
                        .map_err(|_| RhError::Parse { line, msg: "bad factor".into() })?;
                    // split the element list on commas that are outside brackets
                    let mut parts: Vec<String> = Vec::new();
                    if fields[5] != "-" {
                        let mut depth = 0usize;
                        let mut cur = String::new();
                        for c in fields[5].chars() {
                            match c {
                                '[' => {
                                    depth += 1;
                                    cur.push(c);
                                }
                                ']' => {
                                    depth -= 1;
                                    cur.push(c);
                                }
                                ',' if depth == 0 => {
                                    parts.push(std::mem::take(&mut cur));
                                }
                                _ => cur.push(c),
                            }
                        }
                        if !cur.is_empty() {
                            parts.push(cur);
                        }
                    }
                    if factor == 0 {
                        if fields[4] != "IN" || parts.len() != 1 {
                            return Err(RhError::Parse {
                                line,
                                msg: "factor-0 labels are single generators".into(),
                            });
                        }
                        let rel = pres
                            .parse_relword(&parts[0])
                            .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
                        match rel.as_slice() {
                            [Letter::Gen(g)] => {
                                transitions.push((from, to, GnrLabel::Gen(g.clone())))
                            }
                            _ => {
                                return Err(RhError::Parse {
                                    line,
                                    msg: "factor-0 label must be one generator".into(),
                                })
                            }
                        }
                    } else {
                        let mut list = Vec::new();
                        for p in &parts {
                            let rel = pres
                                .parse_relword(p)
                                .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
                            match rel.as_slice() {
                                [Letter::Par(fe)] if fe.factor == factor => list.push(fe.clone()),
                                _ => {
                                    return Err(RhError::Parse {
                                        line,
                                        msg: format!("label element {p:?} not in factor {factor}"),
                                    })
                                }
                            }
                        }
                        let set = match fields[4] {
                            "IN" => SetSpec::In(list),
                            "NOTIN" => SetSpec::NotIn(list),
                            other => {
                                return Err(RhError::Parse {
                                    line,
                                    msg: format!("expected IN or NOTIN, got {other:?}"),
                                })
                            }
                        };
                        transitions.push((from, to, GnrLabel::Par { factor, set }));
                    }
                }
                _ => return Err(RhError::Parse { line, msg: format!("bad record {content:?}") }),
            }
        }
        Ok(GnrAutomaton {
            n_states,
            initial: initial.ok_or(RhError::MalformedInput("missing initial state".into()))?,
            accepting,
            transitions,
        })
    }
}

/// Word automaton over the generator alphabet with epsilon moves; the target
/// of the gnr-to-word conversion.
#[derive(Debug, Clone)]
pub struct WordAutomaton {
    pub n_states: usize,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<(usize, Option<GenSymbol>, usize)>,
}

impl WordAutomaton {
    fn closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = out.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for (from, sym, to) in &self.transitions {
                if *from == q && sym.is_none() && out.insert(*to) {
                    stack.push(*to);
                }
            }
        }
        out
    }

    pub fn accepts(&self, w: &Word) -> bool {
        let mut cur = self.closure(&self.initial);
        for l in w.letters() {
            let mut next = BTreeSet::new();
            for (from, sym, to) in &self.transitions {
                if cur.contains(from) && sym.as_ref() == Some(l) {
                    next.insert(*to);
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = self.closure(&next);
        }
        cur.iter().any(|q| self.accepting.contains(q))
    }
}

/// Lexicographic normal-form word of one factor element over the factor's own
/// generators (free syllables are their reduced words).
pub fn factor_nf_word(pres: &RelPresentation, fe: &FactorElement) -> Result<Word> {
    if fe.factor == 0 {
        return match &fe.value {
            FactorValue::Free(w) => Ok(w.clone()),
            _ => Err(RhError::MalformedInput("bad free-factor value".into())),
        };
    }
    pres.syllable_as_factor_word(fe)
}

/// Normal-form word of a whole element: concatenation of its syllables'
/// factor normal forms.
pub fn element_nf_word(pres: &RelPresentation, fp: &FreeProduct, letters: &[Letter]) -> Result<Word> {
    let mut out = Word::empty();
    let _ = fp;
    for l in letters {
        match l {
            Letter::Gen(g) => out.push(g.clone()),
            Letter::Par(fe) => {
                out = out.concat(&factor_nf_word(pres, fe)?);
            }
        }
    }
    Ok(out)
}

/// A deterministic automaton for the normal-form words of an abelian or
/// finite factor, over the factor's own generator alphabet.
fn factor_nf_dfa(pres: &RelPresentation, k: usize) -> Result<(Vec<GenSymbol>, SymbolDfa)> {
    let spec = pres
        .parabolics()
        .get(k - 1)
        .ok_or_else(|| RhError::MalformedInput(format!("unknown factor {k}")))?;
    // symbol alphabet: pos/neg of each factor generator
    let mut alphabet = Vec::new();
    for g in &spec.gens {
        alphabet.push(GenSymbol::pos(g.clone()));
        alphabet.push(GenSymbol::neg(g.clone()));
    }
    match &spec.kind {
        ParabolicKind::Abelian { free_rank, torsion } => {
            let dim = free_rank + torsion.len();
            // deterministic run automaton: coordinates in order, one sign per
            // free coordinate, torsion coordinates as bounded positive runs
            #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
            struct St {
                coord: isize, // last coordinate used, -1 initially
                dir: i8,      // +1/-1 for free runs, 0 unused
                count: u64,   // torsion run length
            }
            let dead = usize::MAX;
            let mut index: BTreeMap<St, usize> = BTreeMap::new();
            let mut order: Vec<St> = Vec::new();
            let start = St { coord: -1, dir: 0, count: 0 };
            index.insert(start, 0);
            order.push(start);
            let mut trans_rows: Vec<Vec<usize>> = Vec::new();
            let mut i = 0usize;
            while i < order.len() {
                let st = order[i];
                let mut row = vec![dead; alphabet.len()];
                for (si, sym) in alphabet.iter().enumerate() {
                    let j = spec.gens.iter().position(|g| g == sym.name()).unwrap() as isize;
                    let is_torsion = (j as usize) >= *free_rank;
                    let next = if j < st.coord {
                        None
                    } else if j == st.coord {
                        if is_torsion {
                            let t = torsion[j as usize - free_rank];
                            if sym.sign() == Sign::Pos && st.count + 1 <= t - 1 {
                                Some(St { coord: j, dir: 0, count: st.count + 1 })
                            } else {
                                None
                            }
                        } else {
                            let d = if sym.sign() == Sign::Pos { 1i8 } else { -1 };
                            if d == st.dir {
                                Some(st)
                            } else {
                                None
                            }
                        }
                    } else {
                        // start a new run on a later coordinate
                        if is_torsion {
                            let t = torsion[j as usize - free_rank];
                            if sym.sign() == Sign::Pos && t >= 2 {
                                Some(St { coord: j, dir: 0, count: 1 })
                            } else {
                                None
                            }
                        } else {
                            let d = if sym.sign() == Sign::Pos { 1i8 } else { -1 };
                            Some(St { coord: j, dir: d, count: 0 })
                        }
                    };
                    if let Some(n) = next {
                        let id = *index.entry(n).or_insert_with(|| {
                            order.push(n);
                            order.len() - 1
                        });
                        row[si] = id;
                    }
                }
                trans_rows.push(row);
                i += 1;
            }
            let _ = dim;
            // add an explicit dead state at the end
            let dead_id = order.len();
            let mut trans: Vec<Vec<usize>> = trans_rows
                .into_iter()
                .map(|row| row.into_iter().map(|t| if t == dead { dead_id } else { t }).collect())
                .collect();
            trans.push(vec![dead_id; alphabet.len()]);
            let mut accepting = vec![true; dead_id];
            accepting.push(false);
            let n = accepting.len();
            let _ = n;
            Ok((alphabet, SymbolDfa { n_syms: 2 * spec.gens.len(), initial: 0, accepting, trans }))
        }
        ParabolicKind::Finite(t) => {
            // finite language of the shortest words of all elements
            let mut words = Vec::new();
            for e in 0..t.size() {
                let w = pres.syllable_as_factor_word(&FactorElement {
                    factor: k,
                    value: FactorValue::Finite(e),
                })?;
                words.push(word_to_symbols(&alphabet, &w)?);
            }
            Ok((alphabet.clone(), SymbolDfa::finite_language(alphabet.len(), &words)))
        }
        ParabolicKind::OracleBacked { .. } => Err(RhError::Unsupported(format!(
            "no normal-form automaton for oracle-backed factor {}",
            spec.name
        ))),
    }
}

fn word_to_symbols(alphabet: &[GenSymbol], w: &Word) -> Result<Vec<usize>> {
    w.letters()
        .iter()
        .map(|l| {
            alphabet
                .iter()
                .position(|a| a == l)
                .ok_or_else(|| RhError::MalformedInput(format!("letter {l} outside alphabet")))
        })
        .collect()
}

/// Replace every gnr edge by a word automaton over the generator alphabet:
/// single generators stay single letters, finite labels become their listed
/// normal-form words, cofinite labels become the factor's normal-form
/// language minus the identity and the listed words.
pub fn gnr_to_word_automaton(
    aut: &GnrAutomaton,
    pres: &RelPresentation,
) -> Result<WordAutomaton> {
    let mut wa = WordAutomaton {
        n_states: aut.n_states,
        initial: BTreeSet::from([aut.initial]),
        accepting: aut.accepting.clone(),
        transitions: Vec::new(),
    };
    let mut fresh = aut.n_states;
    for (from, to, label) in &aut.transitions {
        match label {
            GnrLabel::Gen(g) => wa.transitions.push((*from, Some(g.clone()), *to)),
            GnrLabel::Par { factor, set } => {
                match set {
                    SetSpec::In(list) => {
                        for fe in list {
                            let w = factor_nf_word(pres, fe)?;
                            let mut prev = *from;
                            for (i, l) in w.letters().iter().enumerate() {
                                let next = if i + 1 == w.len() { *to } else { fresh };
                                if i + 1 != w.len() {
                                    fresh += 1;
                                }
                                wa.transitions.push((prev, Some(l.clone()), next));
                                prev = next;
                            }
                            if w.is_empty() {
                                // identity never appears in valid labels, but
                                // tolerate it as an epsilon edge
                                wa.transitions.push((*from, None, *to));
                            }
                        }
                    }
                    SetSpec::NotIn(list) => {
                        let (alphabet, all) = factor_nf_dfa(pres, *factor)?;
                        // subtract identity and the listed words
                        let mut excluded = vec![Vec::new()]; // identity
                        for fe in list {
                            let w = factor_nf_word(pres, fe)?;
                            excluded.push(word_to_symbols(&alphabet, &w)?);
                        }
                        let minus =
                            all.intersect(&SymbolDfa::finite_language(alphabet.len(), &excluded).complement());
                        // embed the DFA: one fresh state per DFA state
                        let base = fresh;
                        fresh += minus.n_states();
                        wa.transitions.push((*from, None, base + minus.initial));
                        for q in 0..minus.n_states() {
                            for (si, sym) in alphabet.iter().enumerate() {
                                let t = minus.trans[q][si];
                                wa.transitions.push((base + q, Some(sym.clone()), base + t));
                            }
                            if minus.accepting[q] {
                                wa.transitions.push((base + q, None, *to));
                            }
                        }
                    }
                }
            }
        }
    }
    wa.n_states = fresh;
    Ok(wa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_presentation;

    const FA_Z: &str = "
[group]
generators = a
[parabolic.P]
kind = free-abelian
rank = 1
gens = p
";

    fn pres() -> RelPresentation {
        parse_presentation(FA_Z).unwrap()
    }

    fn pe(c: i64) -> FactorElement {
        FactorElement::abelian(1, vec![c])
    }

    #[test]
    fn cofinite_label_acceptance() {
        // single edge labeled P \ {p(1), p(3)}
        let aut = GnrAutomaton {
            n_states: 2,
            initial: 0,
            accepting: BTreeSet::from([1]),
            transitions: vec![(0, 1, GnrLabel::Par { factor: 1, set: SetSpec::NotIn(vec![pe(1), pe(3)]) })],
        };
        assert!(aut.accepts(&[Letter::Par(pe(2))]));
        assert!(aut.accepts(&[Letter::Par(pe(-1))]));
        assert!(!aut.accepts(&[Letter::Par(pe(1))]));
        assert!(!aut.accepts(&[Letter::Par(pe(3))]));
        assert!(!aut.accepts(&[]));
    }

    #[test]
    fn empty_word_needs_accepting_initial() {
        let aut = GnrAutomaton {
            n_states: 1,
            initial: 0,
            accepting: BTreeSet::from([0]),
            transitions: vec![],
        };
        assert!(aut.accepts(&[]));
    }

    #[test]
    fn serialization_roundtrip() {
        let p = pres();
        let fp = p.free_product().unwrap();
        let aut = GnrAutomaton {
            n_states: 3,
            initial: 0,
            accepting: BTreeSet::from([2]),
            transitions: vec![
                (0, 1, GnrLabel::Gen(GenSymbol::pos("a"))),
                (1, 2, GnrLabel::Par { factor: 1, set: SetSpec::In(vec![pe(1), pe(2)]) }),
                (2, 2, GnrLabel::Par { factor: 1, set: SetSpec::NotIn(vec![]) }),
            ],
        };
        aut.validate(&fp).unwrap();
        let text = aut.serialize(&fp);
        let back = GnrAutomaton::parse(&text, &p).unwrap();
        assert_eq!(back.n_states, aut.n_states);
        assert_eq!(back.transitions, aut.transitions);
        assert_eq!(back.serialize(&fp), text);
    }

    #[test]
    fn set_algebra() {
        let a = SetSpec::In(vec![pe(1), pe(2), pe(3)]);
        let b = SetSpec::NotIn(vec![pe(2)]);
        assert_eq!(a.intersect(&b), SetSpec::In(vec![pe(1), pe(3)]));
        let c = SetSpec::NotIn(vec![pe(1)]);
        assert_eq!(b.intersect(&c), SetSpec::NotIn(vec![pe(1), pe(2)]));
    }

    #[test]
    fn finite_label_word_automaton() {
        // language {p(1), p(2)} over Z: words p and pp
        let p = pres();
        let aut = GnrAutomaton {
            n_states: 2,
            initial: 0,
            accepting: BTreeSet::from([1]),
            transitions: vec![(0, 1, GnrLabel::Par { factor: 1, set: SetSpec::In(vec![pe(1), pe(2)]) })],
        };
        let wa = gnr_to_word_automaton(&aut, &p).unwrap();
        assert!(wa.accepts(&Word::parse("p").unwrap()));
        assert!(wa.accepts(&Word::parse("pp").unwrap()));
        assert!(!wa.accepts(&Word::parse("ppp").unwrap()));
        assert!(!wa.accepts(&Word::parse("P").unwrap()));
        assert!(!wa.accepts(&Word::empty()));
    }

    #[test]
    fn cofinite_label_word_automaton() {
        let p = pres();
        let aut = GnrAutomaton {
            n_states: 2,
            initial: 0,
            accepting: BTreeSet::from([1]),
            transitions: vec![(0, 1, GnrLabel::Par { factor: 1, set: SetSpec::NotIn(vec![pe(2)]) })],
        };
        let wa = gnr_to_word_automaton(&aut, &p).unwrap();
        assert!(wa.accepts(&Word::parse("p").unwrap()));
        assert!(!wa.accepts(&Word::parse("pp").unwrap()));
        assert!(wa.accepts(&Word::parse("ppp").unwrap()));
        assert!(wa.accepts(&Word::parse("PP").unwrap()));
        assert!(!wa.accepts(&Word::empty()));
        assert!(!wa.accepts(&Word::parse("pP").unwrap()));
    }

    #[test]
    fn torsion_nf_language() {
        let text = "
[group]
generators = a
[parabolic.T]
kind = abelian
rank = 1
torsion = 3
gens = p, q
";
        let p = parse_presentation(text).unwrap();
        let (alphabet, dfa) = factor_nf_dfa(&p, 1).unwrap();
        let ok = |s: &str| dfa.accepts(&word_to_symbols(&alphabet, &Word::parse(s).unwrap()).unwrap());
        assert!(ok("p"));
        assert!(ok("PP"));
        assert!(ok("pq"));
        assert!(ok("qq"));
        assert!(!ok("qqq")); // torsion exponent capped at 2
        assert!(!ok("Q")); // torsion coordinates use positive powers
        assert!(!ok("qp")); // out of coordinate order
        assert!(!ok("pP")); // mixed signs in one run
    }
}
