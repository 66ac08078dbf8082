use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::group::freeprod::{FactorElement, FactorValue, FreeProduct, Letter};
use crate::group::parabolic::{FiniteTable, ParabolicKind, ParabolicSpec};
use crate::group::word::{GenSymbol, Sign, Word};
use crate::{RhError, Result};

/// A relator: a word over the joint alphabet `X ⊔ H~_1 ⊔ ... ⊔ H~_q`, with
/// parabolic letters carried as whole factor elements.
pub type RelWord = Vec<Letter>;

/// A relative presentation: generators X, parabolic factor specifications,
/// and relators over the joint alphabet.
#[derive(Debug, Clone)]
pub struct RelPresentation {
    gens: Vec<String>,
    parabolics: Vec<ParabolicSpec>,
    relators: Vec<RelWord>,
}

impl RelPresentation {
    pub fn new(gens: Vec<String>, parabolics: Vec<ParabolicSpec>, relators: Vec<RelWord>) -> Result<RelPresentation> {
        let mut seen = HashSet::new();
        for g in &gens {
            if !seen.insert(g.clone()) {
                return Err(RhError::MalformedInput(format!("duplicate generator name {g:?}")));
            }
        }
        for p in &parabolics {
            if seen.contains(&p.name) {
                return Err(RhError::MalformedInput(format!(
                    "parabolic name {:?} collides with a generator",
                    p.name
                )));
            }
            for g in &p.gens {
                if !seen.insert(g.clone()) {
                    return Err(RhError::MalformedInput(format!(
                        "parabolic generator name {g:?} is not disjoint",
                    )));
                }
            }
        }
        let pres = RelPresentation { gens, parabolics, relators };
        let fp = pres.free_product()?;
        for (i, r) in pres.relators.iter().enumerate() {
            for l in r {
                match l {
                    Letter::Gen(g) => {
                        if !pres.gens.iter().any(|x| x == g.name()) {
                            return Err(RhError::MalformedInput(format!(
                                "relator {} uses unknown generator {:?}",
                                i + 1,
                                g.name()
                            )));
                        }
                    }
                    Letter::Par(fe) => {
                        fp.canonicalize_syllable(fe)?;
                    }
                }
            }
        }
        Ok(pres)
    }

    pub fn gens(&self) -> &[String] {
        &self.gens
    }

    pub fn parabolics(&self) -> &[ParabolicSpec] {
        &self.parabolics
    }

    pub fn relators(&self) -> &[RelWord] {
        &self.relators
    }

    /// The ambient free product `F_X * H~_1 * ... * H~_q`.
    pub fn free_product(&self) -> Result<FreeProduct> {
        FreeProduct::new(self.gens.clone(), self.parabolics.clone())
    }

    /// The finite alphabet `𝒳_𝓡`: all generators with both orientations plus
    /// the parabolic letters occurring in the relators, closed under inverse.
    pub fn alphabet(&self) -> Result<Vec<Letter>> {
        let fp = self.free_product()?;
        let mut set: BTreeSet<Letter> = BTreeSet::new();
        for g in &self.gens {
            set.insert(Letter::Gen(GenSymbol::pos(g.clone())));
            set.insert(Letter::Gen(GenSymbol::neg(g.clone())));
        }
        for r in &self.relators {
            for l in r {
                if let Letter::Par(fe) = l {
                    let fe = fp.canonicalize_syllable(fe)?;
                    if !fp.syllable_is_identity(&fe)? {
                        let inv = fp.syllable_inverse(&fe)?;
                        set.insert(Letter::Par(fe));
                        set.insert(Letter::Par(inv));
                    }
                }
            }
        }
        Ok(set.into_iter().collect())
    }

    /// Parabolic letters of the alphabet that lie in factor `k`.
    pub fn alphabet_in_factor(&self, k: usize) -> Result<Vec<FactorElement>> {
        Ok(self
            .alphabet()?
            .into_iter()
            .filter_map(|l| match l {
                Letter::Par(fe) if fe.factor == k => Some(fe),
                _ => None,
            })
            .collect())
    }

    /// Rewrite every relator of length > 3 into a chain of length-3 relators
    /// by introducing fresh free generators, preserving the presented group.
    pub fn triangulated(&self) -> Result<RelPresentation> {
        let mut gens = self.gens.clone();
        let mut relators = Vec::new();
        let mut fresh = 0usize;
        let mut next_fresh = |gens: &mut Vec<String>| {
            loop {
                fresh += 1;
                let name = format!("t{fresh}");
                if !gens.contains(&name)
                    && !self.parabolics.iter().any(|p| p.gens.contains(&name) || p.name == name)
                {
                    gens.push(name.clone());
                    return name;
                }
            }
        };
        for r in &self.relators {
            if r.len() <= 3 {
                relators.push(r.clone());
                continue;
            }
            // r = l1 l2 ... ln  =>  l1 l2 T1, t1 l3 T2, ..., t_{n-3} l_{n-1} l_n
            let mut prev: Option<String> = None;
            let mut idx = 0usize;
            while idx < r.len() {
                let mut chunk: RelWord = Vec::new();
                match &prev {
                    None => {
                        chunk.push(r[idx].clone());
                        chunk.push(r[idx + 1].clone());
                        idx += 2;
                    }
                    Some(t) => {
                        chunk.push(Letter::Gen(GenSymbol::pos(t.clone())));
                        chunk.push(r[idx].clone());
                        idx += 1;
                    }
                }
                if r.len() - idx > 1 {
                    let t = next_fresh(&mut gens);
                    chunk.push(Letter::Gen(GenSymbol::neg(t.clone())));
                    prev = Some(t);
                } else {
                    if let Some(l) = r.get(idx) {
                        chunk.push(l.clone());
                    }
                    idx += 1;
                }
                relators.push(chunk);
            }
        }
        RelPresentation::new(gens, self.parabolics.clone(), relators)
    }

    /// Express a parabolic factor element as a word over X via the factor's
    /// generator embeddings.
    pub fn project_syllable(&self, fe: &FactorElement) -> Result<Word> {
        if fe.factor == 0 {
            return match &fe.value {
                FactorValue::Free(w) => Ok(w.clone()),
                _ => Err(RhError::MalformedInput("bad free-factor value".into())),
            };
        }
        let spec = self
            .parabolics
            .get(fe.factor - 1)
            .ok_or_else(|| RhError::MalformedInput(format!("unknown factor {}", fe.factor)))?;
        // a generator without an explicit embedding word stands for itself
        // (the factor is a genuine free-product factor of the group)
        let embed = |gen: &str, sign: Sign| -> Result<Word> {
            let w = match spec.embed_word(gen) {
                Some(w) => w.clone(),
                None => Word::from_letters(vec![GenSymbol::pos(gen)]),
            };
            Ok(match sign {
                Sign::Pos => w,
                Sign::Neg => w.inverse(),
            })
        };
        let word_over_factor_gens = self.syllable_as_factor_word(fe)?;
        let mut out = Word::empty();
        for l in word_over_factor_gens.letters() {
            out = out.concat(&embed(l.name(), l.sign())?);
        }
        Ok(out.free_reduce())
    }

    /// Express a parabolic factor element as a word over the factor's own
    /// generators.
    pub fn syllable_as_factor_word(&self, fe: &FactorElement) -> Result<Word> {
        let spec = self
            .parabolics
            .get(fe.factor.wrapping_sub(1))
            .ok_or_else(|| RhError::MalformedInput(format!("unknown factor {}", fe.factor)))?;
        match (&fe.value, &spec.kind) {
            (FactorValue::Abelian(v), ParabolicKind::Abelian { .. }) => {
                let mut w = Word::empty();
                for (g, &e) in spec.gens.iter().zip(v) {
                    let (sym, n) = if e >= 0 {
                        (GenSymbol::pos(g.clone()), e)
                    } else {
                        (GenSymbol::neg(g.clone()), -e)
                    };
                    for _ in 0..n {
                        w.push(sym.clone());
                    }
                }
                Ok(w)
            }
            (FactorValue::Finite(e), ParabolicKind::Finite(t)) => {
                finite_word(t, &spec.gens, &spec.gen_elems, *e).ok_or_else(|| {
                    RhError::MalformedInput(format!(
                        "element {e} of {} is not generated by the listed generators",
                        spec.name
                    ))
                })
            }
            (FactorValue::Rep(w), ParabolicKind::OracleBacked { .. }) => Ok(w.clone()),
            _ => Err(RhError::MalformedInput("syllable kind mismatch".into())),
        }
    }

    /// Express a relator word as a word over X (parabolic letters replaced by
    /// their embeddings).
    pub fn project_relword(&self, r: &RelWord) -> Result<Word> {
        let mut out = Word::empty();
        for l in r {
            match l {
                Letter::Gen(g) => out.push(g.clone()),
                Letter::Par(fe) => out = out.concat(&self.project_syllable(fe)?),
            }
        }
        Ok(out.free_reduce())
    }

    pub fn format_relword(&self, r: &RelWord) -> String {
        if r.is_empty() {
            return "1".into();
        }
        let fp = self.free_product().expect("valid presentation");
        r.iter().map(|l| fp.format_letter(l)).collect::<Vec<_>>().join("")
    }

    /// Parse a relator token sequence like `a P[1,0] B` or compact `abAB`.
    pub fn parse_relword(&self, text: &str) -> Result<RelWord> {
        parse_relword_with(&self.gens, &self.parabolics, text)
    }
}

fn finite_word(t: &FiniteTable, gens: &[String], gen_elems: &[usize], target: usize) -> Option<Word> {
    let mut words: Vec<Option<Word>> = vec![None; t.size()];
    words[0] = Some(Word::empty());
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        if words[target].is_some() {
            break;
        }
        let base = words[e].clone().unwrap();
        for (i, g) in gens.iter().enumerate() {
            for (sym, elem) in [
                (GenSymbol::pos(g.clone()), gen_elems[i]),
                (GenSymbol::neg(g.clone()), t.inv(gen_elems[i])),
            ] {
                let next = t.mul(e, elem);
                if words[next].is_none() {
                    let mut w = base.clone();
                    w.push(sym);
                    words[next] = Some(w);
                    queue.push_back(next);
                }
            }
        }
    }
    words[target].clone()
}

fn parse_relword_with(gens: &[String], parabolics: &[ParabolicSpec], text: &str) -> Result<RelWord> {
    let mut out: RelWord = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    // longest parabolic names first so prefixes never shadow longer names
    let mut by_len: Vec<&ParabolicSpec> = parabolics.iter().collect();
    by_len.sort_by_key(|p| std::cmp::Reverse(p.name.len()));
    'outer: while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        for p in &by_len {
            let name_len = p.name.chars().count();
            if chars[i..].len() > name_len
                && chars[i..i + name_len].iter().collect::<String>() == p.name
                && chars[i + name_len] == '['
            {
                let close = chars[i + name_len..]
                    .iter()
                    .position(|&c| c == ']')
                    .ok_or_else(|| RhError::MalformedInput(format!("unclosed bracket after {}", p.name)))?
                    + i
                    + name_len;
                let inner: String = chars[i + name_len + 1..close].iter().collect();
                let coords: Vec<i64> = inner
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<i64>().map_err(|_| {
                            RhError::MalformedInput(format!("bad coordinate {s:?} for {}", p.name))
                        })
                    })
                    .collect::<Result<_>>()?;
                let value = match &p.kind {
                    ParabolicKind::Abelian { .. } => FactorValue::Abelian(coords),
                    ParabolicKind::Finite(t) => {
                        if coords.len() != 1 || coords[0] < 0 || coords[0] as usize >= t.size() {
                            return Err(RhError::MalformedInput(format!(
                                "finite parabolic {} letter needs one element index in 0..{}",
                                p.name,
                                t.size()
                            )));
                        }
                        FactorValue::Finite(coords[0] as usize)
                    }
                    ParabolicKind::OracleBacked { .. } => {
                        return Err(RhError::MalformedInput(format!(
                            "coordinate syntax is not available for oracle-backed parabolic {}",
                            p.name
                        )))
                    }
                };
                out.push(Letter::Par(FactorElement { factor: p.index, value }));
                i = close + 1;
                continue 'outer;
            }
        }
        let g = GenSymbol::from_char(chars[i])?;
        if !gens.iter().any(|x| x == g.name()) {
            return Err(RhError::MalformedInput(format!(
                "unknown letter {:?} in relator",
                chars[i]
            )));
        }
        out.push(Letter::Gen(g));
        i += 1;
    }
    Ok(out)
}

/// Parse the line-oriented presentation file format.
///
/// ```text
/// [group]
/// generators = a, b
/// relators = abAB, a P[-1,0]
/// [parabolic.P]
/// kind = free-abelian
/// rank = 2
/// gens = p, q
/// embed p = a
/// embed q = b
/// ```
///
/// Parabolic kinds: `free-abelian` (`rank`), `abelian` (`rank` free
/// coordinates plus `torsion = t1,...`), `finite` (`table = 0,1;1,0` row by
/// row and `elems = ...` giving the table element of each generator), and
/// `oracle` (procedures must be attached programmatically).
pub fn parse_presentation(text: &str) -> Result<RelPresentation> {
    enum Section {
        None,
        Group,
        Parabolic(usize),
    }

    #[derive(Default)]
    struct ParaDraft {
        name: String,
        kind: Option<String>,
        rank: Option<usize>,
        torsion: Vec<u64>,
        gens: Vec<String>,
        elems: Vec<usize>,
        table: Option<Vec<Vec<usize>>>,
        embed: BTreeMap<String, Word>,
    }

    let mut gens: Vec<String> = Vec::new();
    let mut relator_texts: Vec<(usize, String)> = Vec::new();
    let mut drafts: Vec<ParaDraft> = Vec::new();
    let mut section = Section::None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if header == "group" {
                section = Section::Group;
            } else if let Some(name) = header.strip_prefix("parabolic.") {
                if name.is_empty() {
                    return Err(RhError::Parse { line, msg: "empty parabolic name".into() });
                }
                drafts.push(ParaDraft { name: name.to_string(), ..Default::default() });
                section = Section::Parabolic(drafts.len() - 1);
            } else {
                return Err(RhError::Parse { line, msg: format!("unknown section {header:?}") });
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| RhError::Parse { line, msg: format!("expected key = value, got {content:?}") })?;
        let key = key.trim();
        let value = value.trim();
        match &section {
            Section::None => {
                return Err(RhError::Parse { line, msg: "content before any section header".into() })
            }
            Section::Group => match key {
                "generators" => {
                    gens = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                }
                "relators" => {
                    for r in value.split(',') {
                        // parabolic letters contain commas inside brackets:
                        // re-join split pieces until brackets balance
                        relator_texts.push((line, r.to_string()));
                    }
                    // merge pieces with unbalanced brackets
                    let mut merged: Vec<(usize, String)> = Vec::new();
                    for (l, piece) in relator_texts.drain(..) {
                        match merged.last_mut() {
                            Some((_, prev))
                                if prev.matches('[').count() > prev.matches(']').count() =>
                            {
                                prev.push(',');
                                prev.push_str(&piece);
                            }
                            _ => merged.push((l, piece)),
                        }
                    }
                    relator_texts = merged;
                }
                _ => return Err(RhError::Parse { line, msg: format!("unknown group key {key:?}") }),
            },
            Section::Parabolic(i) => {
                let d = &mut drafts[*i];
                if let Some(gen) = key.strip_prefix("embed ") {
                    let w = Word::parse(value)
                        .map_err(|e| RhError::Parse { line, msg: format!("bad embed word: {e}") })?;
                    d.embed.insert(gen.trim().to_string(), w);
                    continue;
                }
                match key {
                    "kind" => d.kind = Some(value.to_string()),
                    "rank" => {
                        d.rank = Some(value.parse().map_err(|_| RhError::Parse {
                            line,
                            msg: format!("bad rank {value:?}"),
                        })?)
                    }
                    "torsion" => {
                        d.torsion = value
                            .split(',')
                            .map(|s| {
                                s.trim().parse::<u64>().map_err(|_| RhError::Parse {
                                    line,
                                    msg: format!("bad torsion order {s:?}"),
                                })
                            })
                            .collect::<Result<_>>()?
                    }
                    "gens" => {
                        d.gens = value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect()
                    }
                    "elems" => {
                        d.elems = value
                            .split(',')
                            .map(|s| {
                                s.trim().parse::<usize>().map_err(|_| RhError::Parse {
                                    line,
                                    msg: format!("bad element index {s:?}"),
                                })
                            })
                            .collect::<Result<_>>()?
                    }
                    "table" => {
                        let rows: Vec<Vec<usize>> = value
                            .split(';')
                            .map(|row| {
                                row.split(',')
                                    .map(|s| {
                                        s.trim().parse::<usize>().map_err(|_| RhError::Parse {
                                            line,
                                            msg: format!("bad table entry {s:?}"),
                                        })
                                    })
                                    .collect::<Result<Vec<usize>>>()
                            })
                            .collect::<Result<_>>()?;
                        d.table = Some(rows);
                    }
                    _ => {
                        return Err(RhError::Parse { line, msg: format!("unknown parabolic key {key:?}") })
                    }
                }
            }
        }
    }

    let mut parabolics = Vec::new();
    for (i, d) in drafts.into_iter().enumerate() {
        let index = i + 1;
        let kind_tag = d.kind.clone().unwrap_or_default();
        let spec = match kind_tag.as_str() {
            "free-abelian" => {
                let rank = d.rank.unwrap_or(d.gens.len());
                let mut s = ParabolicSpec::abelian(index, d.name.clone(), rank, Vec::new(), d.gens)?;
                s.embed = d.embed;
                s
            }
            "abelian" => {
                let rank = d.rank.unwrap_or_else(|| d.gens.len().saturating_sub(d.torsion.len()));
                let mut s = ParabolicSpec::abelian(index, d.name.clone(), rank, d.torsion, d.gens)?;
                s.embed = d.embed;
                s
            }
            "finite" => {
                let rows = d.table.ok_or_else(|| {
                    RhError::MalformedInput(format!("finite parabolic {} needs a table", d.name))
                })?;
                let size = rows.len();
                let flat: Vec<usize> = rows.into_iter().flatten().collect();
                let table = FiniteTable::new(size, flat)?;
                if d.elems.len() != d.gens.len() {
                    return Err(RhError::MalformedInput(format!(
                        "finite parabolic {} needs one `elems` entry per generator",
                        d.name
                    )));
                }
                if d.elems.iter().any(|&e| e == 0 || e >= size) {
                    return Err(RhError::MalformedInput(format!(
                        "generator element indices of {} must be nonzero and < {size}",
                        d.name
                    )));
                }
                ParabolicSpec {
                    index,
                    name: d.name,
                    kind: ParabolicKind::Finite(table),
                    gens: d.gens,
                    gen_elems: d.elems,
                    embed: d.embed,
                }
            }
            "oracle" => ParabolicSpec {
                index,
                name: d.name,
                kind: ParabolicKind::OracleBacked { wp: None, nf: None },
                gens: d.gens,
                gen_elems: Vec::new(),
                embed: d.embed,
            },
            other => {
                return Err(RhError::MalformedInput(format!(
                    "parabolic {} has unknown kind {other:?}",
                    d.name
                )))
            }
        };
        parabolics.push(spec);
    }

    let mut relators = Vec::new();
    for (line, r) in relator_texts {
        let rw = parse_relword_with(&gens, &parabolics, &r)
            .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
        if !rw.is_empty() {
            relators.push(rw);
        }
    }
    RelPresentation::new(gens, parabolics, relators)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z2_PLAIN: &str = "
[group]
generators = a, b
relators = abAB
";

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

    #[test]
    fn plain_z2() {
        let pres = parse_presentation(Z2_PLAIN).unwrap();
        assert_eq!(pres.gens(), &["a", "b"]);
        assert_eq!(pres.relators().len(), 1);
        assert_eq!(pres.relators()[0].len(), 4);
        // symmetric alphabet: a, A, b, B
        assert_eq!(pres.alphabet().unwrap().len(), 4);
    }

    #[test]
    fn relative_z2() {
        let pres = parse_presentation(Z2_REL).unwrap();
        assert_eq!(pres.parabolics().len(), 1);
        assert_eq!(pres.relators().len(), 2);
        // alphabet: 4 free letters + P[±1,0], P[0,±1]
        assert_eq!(pres.alphabet().unwrap().len(), 8);
        let r = &pres.relators()[0];
        assert_eq!(pres.project_relword(r).unwrap(), Word::parse("aA").unwrap().free_reduce());
    }

    #[test]
    fn undeclared_letter_rejected() {
        let bad = "
[group]
generators = a
relators = ab
";
        assert!(parse_presentation(bad).is_err());
    }

    #[test]
    fn empty_relators_ok() {
        let pres = parse_presentation("[group]\ngenerators = a, b\n").unwrap();
        assert!(pres.relators().is_empty());
    }

    #[test]
    fn triangulation_lengths() {
        let pres = parse_presentation(Z2_PLAIN).unwrap();
        let tri = pres.triangulated().unwrap();
        assert!(tri.relators().iter().all(|r| r.len() <= 3));
        // abAB (length 4) -> two length-3 relators with one fresh generator
        assert_eq!(tri.relators().len(), 2);
        assert_eq!(tri.gens().len(), 3);
    }

    #[test]
    fn finite_parabolic_parse() {
        let text = "
[group]
generators = a
relators = a C[1] a C[1]
[parabolic.C]
kind = finite
table = 0,1;1,0
gens = c
elems = 1
";
        let pres = parse_presentation(text).unwrap();
        assert_eq!(pres.parabolics()[0].gen_elems, vec![1]);
        assert_eq!(pres.relators()[0].len(), 4);
    }

    #[test]
    fn format_roundtrip() {
        let pres = parse_presentation(Z2_REL).unwrap();
        for r in pres.relators() {
            let text = pres.format_relword(r);
            assert_eq!(&pres.parse_relword(&text).unwrap(), r);
        }
    }
}
