use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use crate::group::freeprod::{FactorElement, FactorValue, FreeProduct};
use crate::group::parabolic::{FiniteTable, ParabolicKind, ParabolicSpec};
use crate::group::word::{GenSymbol, Sign, Word};
use crate::{RhError, Result};

/// Total word-problem procedure: is a word trivial in the group?
#[derive(Clone)]
pub struct WpOracle {
    tag: String,
    f: Arc<dyn Fn(&Word) -> bool + Send + Sync>,
}

impl WpOracle {
    pub fn new(tag: impl Into<String>, f: impl Fn(&Word) -> bool + Send + Sync + 'static) -> WpOracle {
        WpOracle { tag: tag.into(), f: Arc::new(f) }
    }

    /// Wrap a non-reentrant procedure behind a serializing lock.
    pub fn serialized(tag: impl Into<String>, f: impl FnMut(&Word) -> bool + Send + 'static) -> WpOracle {
        let cell = Mutex::new(f);
        WpOracle { tag: tag.into(), f: Arc::new(move |w| (cell.lock().unwrap())(w)) }
    }

    pub fn is_trivial(&self, w: &Word) -> bool {
        (self.f)(w)
    }

    pub fn equal(&self, a: &Word, b: &Word) -> bool {
        self.is_trivial(&a.concat(&b.inverse()))
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

impl std::fmt::Debug for WpOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WpOracle({})", self.tag)
    }
}

/// Total normal-form procedure: canonical representative word.
#[derive(Clone)]
pub struct NfOracle {
    tag: String,
    f: Arc<dyn Fn(&Word) -> Word + Send + Sync>,
}

impl NfOracle {
    pub fn new(tag: impl Into<String>, f: impl Fn(&Word) -> Word + Send + Sync + 'static) -> NfOracle {
        NfOracle { tag: tag.into(), f: Arc::new(f) }
    }

    pub fn normal_form(&self, w: &Word) -> Word {
        (self.f)(w)
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

impl std::fmt::Debug for NfOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NfOracle({})", self.tag)
    }
}

/// A built-in whole-group family for which exact oracles exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupFamily {
    /// Free group on the presentation generators.
    Free,
    /// Free abelian group on the presentation generators.
    FreeAbelian,
    /// Abelian group: the last `torsion.len()` generators have the listed
    /// orders, the rest are free coordinates.
    Abelian { torsion: Vec<u64> },
}

/// Parse a family tag such as `free`, `free-abelian`, or `abelian[2,3]`.
pub fn parse_group_family(text: &str) -> Result<GroupFamily> {
    let text = text.trim();
    match text {
        "free" => Ok(GroupFamily::Free),
        "free-abelian" => Ok(GroupFamily::FreeAbelian),
        _ => {
            if let Some(rest) = text.strip_prefix("abelian[").and_then(|r| r.strip_suffix(']')) {
                let torsion: Vec<u64> = rest
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<u64>().map_err(|_| {
                            RhError::MalformedInput(format!("bad torsion order {s:?} in family tag"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if torsion.iter().any(|&t| t < 2) {
                    return Err(RhError::MalformedInput("torsion orders must be at least 2".into()));
                }
                Ok(GroupFamily::Abelian { torsion })
            } else {
                Err(RhError::MalformedInput(format!("unknown group family {text:?}")))
            }
        }
    }
}

fn abelian_exponents(gens: &[String], w: &Word) -> Option<Vec<i64>> {
    let index: HashMap<&str, usize> = gens.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let mut v = vec![0i64; gens.len()];
    for l in w.letters() {
        let i = *index.get(l.name())?;
        v[i] += match l.sign() {
            Sign::Pos => 1,
            Sign::Neg => -1,
        };
    }
    Some(v)
}

fn abelian_nf_word(gens: &[String], v: &[i64]) -> Word {
    let mut w = Word::empty();
    for (g, &e) in gens.iter().zip(v) {
        let (sym, n) = if e >= 0 { (GenSymbol::pos(g.clone()), e) } else { (GenSymbol::neg(g.clone()), -e) };
        for _ in 0..n {
            w.push(sym.clone());
        }
    }
    w
}

impl GroupFamily {
    /// Exact oracles for this family over the named generators (in order).
    pub fn oracles(&self, gens: &[String]) -> Result<(WpOracle, NfOracle)> {
        match self {
            GroupFamily::Free => {
                let wp = WpOracle::new("builtin:free", |w: &Word| w.free_reduce().is_empty());
                let nf = NfOracle::new("builtin:free", |w: &Word| w.free_reduce());
                Ok((wp, nf))
            }
            GroupFamily::FreeAbelian => GroupFamily::Abelian { torsion: Vec::new() }.oracles(gens),
            GroupFamily::Abelian { torsion } => {
                if torsion.len() > gens.len() {
                    return Err(RhError::MalformedInput(
                        "more torsion orders than generators".into(),
                    ));
                }
                let free_rank = gens.len() - torsion.len();
                let reduce = {
                    let torsion = torsion.clone();
                    move |mut v: Vec<i64>| {
                        for (j, &t) in torsion.iter().enumerate() {
                            v[free_rank + j] = v[free_rank + j].rem_euclid(t as i64);
                        }
                        v
                    }
                };
                let gens_v: Vec<String> = gens.to_vec();
                let tag = format!("builtin:abelian[{}+{}]", free_rank, torsion.len());
                let wp = {
                    let gens_v = gens_v.clone();
                    let reduce = reduce.clone();
                    WpOracle::new(tag.clone(), move |w: &Word| {
                        match abelian_exponents(&gens_v, w) {
                            Some(v) => reduce(v).iter().all(|&c| c == 0),
                            None => false,
                        }
                    })
                };
                let nf = NfOracle::new(tag, move |w: &Word| {
                    match abelian_exponents(&gens_v, w) {
                        Some(v) => abelian_nf_word(&gens_v, &reduce(v)),
                        None => w.clone(),
                    }
                });
                Ok((wp, nf))
            }
        }
    }
}

fn finite_eval(table: &FiniteTable, gens: &[String], gen_elems: &[usize], w: &Word) -> Option<usize> {
    let index: HashMap<&str, usize> = gens.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let mut acc = 0usize;
    for l in w.letters() {
        let i = *index.get(l.name())?;
        let e = match l.sign() {
            Sign::Pos => gen_elems[i],
            Sign::Neg => table.inv(gen_elems[i]),
        };
        acc = table.mul(acc, e);
    }
    Some(acc)
}

/// Shortest word over the generators for each element of a finite group,
/// found by deterministic breadth-first search.  Elements not generated map
/// to `None`.
fn finite_shortest_words(table: &FiniteTable, gens: &[String], gen_elems: &[usize]) -> Vec<Option<Word>> {
    let mut words: Vec<Option<Word>> = vec![None; table.size()];
    words[0] = Some(Word::empty());
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        let base = words[e].clone().unwrap();
        for (i, g) in gens.iter().enumerate() {
            for (sym, elem) in [
                (GenSymbol::pos(g.clone()), gen_elems[i]),
                (GenSymbol::neg(g.clone()), table.inv(gen_elems[i])),
            ] {
                let next = table.mul(e, elem);
                if words[next].is_none() {
                    let mut w = base.clone();
                    w.push(sym);
                    words[next] = Some(w);
                    queue.push_back(next);
                }
            }
        }
    }
    words
}

/// Exact word-problem and normal-form oracles for one parabolic factor.
pub fn builtin_oracles(spec: &ParabolicSpec) -> Result<(WpOracle, NfOracle)> {
    match &spec.kind {
        ParabolicKind::Abelian { free_rank, torsion } => {
            let _ = free_rank;
            GroupFamily::Abelian { torsion: torsion.clone() }.oracles(&spec.gens)
        }
        ParabolicKind::Finite(table) => {
            let table = table.clone();
            let gens = spec.gens.clone();
            let gen_elems = spec.gen_elems.clone();
            let tag = format!("builtin:finite[{}]", table.size());
            let wp = {
                let table = table.clone();
                let gens = gens.clone();
                let gen_elems = gen_elems.clone();
                WpOracle::new(tag.clone(), move |w: &Word| {
                    finite_eval(&table, &gens, &gen_elems, w) == Some(0)
                })
            };
            let shortest = finite_shortest_words(&table, &gens, &gen_elems);
            let nf = NfOracle::new(tag, move |w: &Word| {
                match finite_eval(&table, &gens, &gen_elems, w).and_then(|e| shortest[e].clone()) {
                    Some(nf) => nf,
                    None => w.clone(),
                }
            });
            Ok((wp, nf))
        }
        ParabolicKind::OracleBacked { wp, nf } => {
            let wp = wp.clone().ok_or_else(|| {
                RhError::Unsupported(format!("parabolic {} has no word-problem procedure", spec.name))
            })?;
            let nf = nf.clone().ok_or_else(|| {
                RhError::Unsupported(format!("parabolic {} has no normal-form procedure", spec.name))
            })?;
            Ok((
                WpOracle { tag: "external".into(), f: Arc::new(move |w: &Word| wp(w)) },
                NfOracle { tag: "external".into(), f: Arc::new(move |w: &Word| nf(w)) },
            ))
        }
    }
}

/// Parse a word over the joint generator alphabet of a free product into a
/// syllable sequence: free-factor letters stay letters, parabolic generator
/// letters become coordinate / table syllables of their factor.
pub fn word_to_syllables(fp: &FreeProduct, w: &Word) -> Result<Vec<FactorElement>> {
    // map generator name -> (factor, position within the factor's generators)
    let mut index: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for g in fp.free_gens() {
        index.insert(g.as_str(), (0, 0));
    }
    for p in fp.parabolics() {
        for (j, g) in p.gens.iter().enumerate() {
            index.insert(g.as_str(), (p.index, j));
        }
    }
    let mut out = Vec::new();
    for l in w.letters() {
        let &(factor, pos) = index.get(l.name()).ok_or_else(|| {
            RhError::MalformedInput(format!("unknown generator {:?}", l.name()))
        })?;
        if factor == 0 {
            out.push(FactorElement::free(Word::from_letters(vec![l.clone()])));
            continue;
        }
        let spec = fp.parabolic(factor)?;
        let value = match &spec.kind {
            ParabolicKind::Abelian { free_rank, torsion } => {
                let mut v = vec![0i64; free_rank + torsion.len()];
                v[pos] = match l.sign() {
                    Sign::Pos => 1,
                    Sign::Neg => -1,
                };
                FactorValue::Abelian(v)
            }
            ParabolicKind::Finite(t) => {
                let e = spec.gen_elems[pos];
                FactorValue::Finite(match l.sign() {
                    Sign::Pos => e,
                    Sign::Neg => t.inv(e),
                })
            }
            ParabolicKind::OracleBacked { .. } => {
                FactorValue::Rep(Word::from_letters(vec![GenSymbol::new(l.name(), l.sign())?]))
            }
        };
        out.push(FactorElement { factor, value });
    }
    Ok(out)
}

/// Exact oracles for the free product itself, over the joint alphabet of
/// free-factor and parabolic generators.
pub fn free_product_oracles(fp: &FreeProduct) -> Result<(WpOracle, NfOracle)> {
    // fail early if a factor cannot canonicalize
    for p in fp.parabolics() {
        if let ParabolicKind::OracleBacked { wp, nf } = &p.kind {
            if wp.is_none() || nf.is_none() {
                return Err(RhError::Unsupported(format!(
                    "parabolic {} lacks word-problem or normal-form procedures",
                    p.name
                )));
            }
        }
    }
    let tag = "builtin:free-product".to_string();
    let wp = {
        let fp = fp.clone();
        WpOracle::new(tag.clone(), move |w: &Word| {
            match word_to_syllables(&fp, w).and_then(|raw| fp.normalize(&raw)) {
                Ok(e) => e.is_identity(),
                Err(_) => false,
            }
        })
    };
    let fp_nf = fp.clone();
    let nf = NfOracle::new(tag, move |w: &Word| {
        let e = match word_to_syllables(&fp_nf, w).and_then(|raw| fp_nf.normalize(&raw)) {
            Ok(e) => e,
            Err(_) => return w.clone(),
        };
        let mut out = Word::empty();
        for fe in e.syllables() {
            match &fe.value {
                FactorValue::Free(u) | FactorValue::Rep(u) => {
                    for l in u.letters() {
                        out.push(l.clone());
                    }
                }
                FactorValue::Abelian(v) => {
                    let spec = fp_nf.parabolic(fe.factor).expect("valid factor");
                    for l in abelian_nf_word(&spec.gens, v).letters() {
                        out.push(l.clone());
                    }
                }
                FactorValue::Finite(x) => {
                    let spec = fp_nf.parabolic(fe.factor).expect("valid factor");
                    let table = match &spec.kind {
                        ParabolicKind::Finite(t) => t,
                        _ => unreachable!(),
                    };
                    let words = finite_shortest_words(table, &spec.gens, &spec.gen_elems);
                    if let Some(u) = &words[*x] {
                        for l in u.letters() {
                            out.push(l.clone());
                        }
                    }
                }
            }
        }
        out
    });
    Ok((wp, nf))
}
