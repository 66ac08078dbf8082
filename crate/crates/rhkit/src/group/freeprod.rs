use std::fmt::Write as _;

use crate::group::parabolic::{ParabolicKind, ParabolicSpec};
use crate::group::word::{GenSymbol, Word};
use crate::{RhError, Result};

/// Value of one syllable, in the canonical representation of its factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorValue {
    /// Freely reduced word over the free factor generators.
    Free(Word),
    /// Coordinate vector of an abelian factor, torsion components reduced.
    Abelian(Vec<i64>),
    /// Element index in the multiplication table of a finite factor.
    Finite(usize),
    /// Canonical representative word of an oracle-backed factor.
    Rep(Word),
}

/// One syllable of a free-product element: a factor index (0 is the free
/// factor) and a value in that factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorElement {
    pub factor: usize,
    pub value: FactorValue,
}

impl FactorElement {
    pub fn free(w: Word) -> FactorElement {
        FactorElement { factor: 0, value: FactorValue::Free(w) }
    }

    pub fn abelian(factor: usize, v: Vec<i64>) -> FactorElement {
        FactorElement { factor, value: FactorValue::Abelian(v) }
    }
}

/// A letter of the alphabet `X = S ⊔ H~_1 ⊔ ... ⊔ H~_q`: either a single
/// generator of the free factor or a whole element of a parabolic factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Gen(GenSymbol),
    Par(FactorElement),
}

impl Letter {
    pub fn factor(&self) -> usize {
        match self {
            Letter::Gen(_) => 0,
            Letter::Par(fe) => fe.factor,
        }
    }
}

/// Element of the free product `F_S * P_1 * ... * P_q` in syllable normal
/// form: consecutive syllables lie in different factors and no syllable is an
/// identity.  The empty sequence represents 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FpElement {
    syllables: Vec<FactorElement>,
}

impl FpElement {
    pub fn identity() -> FpElement {
        FpElement { syllables: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[FactorElement] {
        &self.syllables
    }

    pub fn syllable_len(&self) -> usize {
        self.syllables.len()
    }
}

/// The ambient free product: names of the free-factor generators plus the
/// parabolic factor specifications.  All arithmetic on [`FpElement`] values
/// goes through this context.
#[derive(Debug, Clone)]
pub struct FreeProduct {
    gens: Vec<String>,
    parabolics: Vec<ParabolicSpec>,
}

impl FreeProduct {
    pub fn new(gens: Vec<String>, parabolics: Vec<ParabolicSpec>) -> Result<FreeProduct> {
        for (i, p) in parabolics.iter().enumerate() {
            if p.index != i + 1 {
                return Err(RhError::MalformedInput(format!(
                    "parabolic {} has index {}, expected {}",
                    p.name,
                    p.index,
                    i + 1
                )));
            }
        }
        Ok(FreeProduct { gens, parabolics })
    }

    pub fn free_gens(&self) -> &[String] {
        &self.gens
    }

    pub fn parabolics(&self) -> &[ParabolicSpec] {
        &self.parabolics
    }

    pub fn parabolic(&self, factor: usize) -> Result<&ParabolicSpec> {
        if factor == 0 || factor > self.parabolics.len() {
            return Err(RhError::MalformedInput(format!("unknown factor index {factor}")));
        }
        Ok(&self.parabolics[factor - 1])
    }

    pub fn parabolic_by_name(&self, name: &str) -> Option<&ParabolicSpec> {
        self.parabolics.iter().find(|p| p.name == name)
    }

    /// Put a raw syllable value into the canonical form of its factor.
    pub fn canonicalize_syllable(&self, fe: &FactorElement) -> Result<FactorElement> {
        let value = match (&fe.value, fe.factor) {
            (FactorValue::Free(w), 0) => FactorValue::Free(w.free_reduce()),
            (_, 0) => {
                return Err(RhError::MalformedInput("factor 0 syllable must hold a word".into()))
            }
            (value, k) => {
                let spec = self.parabolic(k)?;
                match (value, &spec.kind) {
                    (FactorValue::Abelian(v), ParabolicKind::Abelian { .. }) => {
                        FactorValue::Abelian(spec.reduce_vector(v.clone())?)
                    }
                    (FactorValue::Finite(e), ParabolicKind::Finite(t)) => {
                        if *e >= t.size() {
                            return Err(RhError::MalformedInput(format!(
                                "element {e} out of range for finite factor {}",
                                spec.name
                            )));
                        }
                        FactorValue::Finite(*e)
                    }
                    (FactorValue::Rep(w), ParabolicKind::OracleBacked { nf, .. }) => {
                        let nf = nf.as_ref().ok_or_else(|| {
                            RhError::Unsupported(format!(
                                "oracle-backed parabolic {} has no normal-form procedure",
                                spec.name
                            ))
                        })?;
                        FactorValue::Rep(nf(w))
                    }
                    _ => {
                        return Err(RhError::MalformedInput(format!(
                            "syllable value does not match the kind of factor {}",
                            spec.name
                        )))
                    }
                }
            }
        };
        Ok(FactorElement { factor: fe.factor, value })
    }

    /// Is this (canonicalized) syllable the identity of its factor?
    pub fn syllable_is_identity(&self, fe: &FactorElement) -> Result<bool> {
        Ok(match &fe.value {
            FactorValue::Free(w) => w.is_empty(),
            FactorValue::Abelian(v) => v.iter().all(|&c| c == 0),
            FactorValue::Finite(e) => *e == 0,
            FactorValue::Rep(w) => {
                let spec = self.parabolic(fe.factor)?;
                match &spec.kind {
                    ParabolicKind::OracleBacked { wp: Some(wp), .. } => wp(w),
                    ParabolicKind::OracleBacked { wp: None, .. } => {
                        return Err(RhError::Unsupported(format!(
                            "oracle-backed parabolic {} has no word-problem procedure",
                            spec.name
                        )))
                    }
                    _ => return Err(RhError::MalformedInput("Rep value in non-oracle factor".into())),
                }
            }
        })
    }

    /// Product of two canonicalized syllables of the same factor.
    pub fn syllable_mul(&self, a: &FactorElement, b: &FactorElement) -> Result<FactorElement> {
        if a.factor != b.factor {
            return Err(RhError::MalformedInput("syllable product across factors".into()));
        }
        let value = match (&a.value, &b.value) {
            (FactorValue::Free(u), FactorValue::Free(v)) => FactorValue::Free(u.concat(v).free_reduce()),
            (FactorValue::Abelian(u), FactorValue::Abelian(v)) => {
                if u.len() != v.len() {
                    return Err(RhError::MalformedInput("abelian dimension mismatch".into()));
                }
                let spec = self.parabolic(a.factor)?;
                FactorValue::Abelian(
                    spec.reduce_vector(u.iter().zip(v).map(|(x, y)| x + y).collect())?,
                )
            }
            (FactorValue::Finite(x), FactorValue::Finite(y)) => {
                let spec = self.parabolic(a.factor)?;
                match &spec.kind {
                    ParabolicKind::Finite(t) => FactorValue::Finite(t.mul(*x, *y)),
                    _ => return Err(RhError::MalformedInput("Finite value in non-finite factor".into())),
                }
            }
            (FactorValue::Rep(u), FactorValue::Rep(v)) => {
                return self.canonicalize_syllable(&FactorElement {
                    factor: a.factor,
                    value: FactorValue::Rep(u.concat(v)),
                })
            }
            _ => return Err(RhError::MalformedInput("mismatched syllable values".into())),
        };
        Ok(FactorElement { factor: a.factor, value })
    }

    pub fn syllable_inverse(&self, fe: &FactorElement) -> Result<FactorElement> {
        let value = match &fe.value {
            FactorValue::Free(w) => FactorValue::Free(w.inverse()),
            FactorValue::Abelian(v) => {
                let spec = self.parabolic(fe.factor)?;
                spec.reduce_vector(v.iter().map(|&c| -c).collect()).map(FactorValue::Abelian)?
            }
            FactorValue::Finite(e) => {
                let spec = self.parabolic(fe.factor)?;
                match &spec.kind {
                    ParabolicKind::Finite(t) => FactorValue::Finite(t.inv(*e)),
                    _ => return Err(RhError::MalformedInput("Finite value in non-finite factor".into())),
                }
            }
            FactorValue::Rep(w) => {
                return self.canonicalize_syllable(&FactorElement {
                    factor: fe.factor,
                    value: FactorValue::Rep(w.inverse()),
                })
            }
        };
        Ok(FactorElement { factor: fe.factor, value })
    }

    /// Normal form of a raw syllable sequence: canonicalize each syllable,
    /// merge adjacent same-factor syllables and drop identities until stable.
    pub fn normalize(&self, raw: &[FactorElement]) -> Result<FpElement> {
        let mut stack: Vec<FactorElement> = Vec::with_capacity(raw.len());
        for fe in raw {
            let mut cur = self.canonicalize_syllable(fe)?;
            if self.syllable_is_identity(&cur)? {
                continue;
            }
            loop {
                match stack.last() {
                    Some(top) if top.factor == cur.factor => {
                        let merged = self.syllable_mul(stack.last().unwrap(), &cur)?;
                        stack.pop();
                        if self.syllable_is_identity(&merged)? {
                            break;
                        }
                        cur = merged;
                        // merged syllable may now merge with the new top
                        if stack.last().map_or(true, |t| t.factor != cur.factor) {
                            stack.push(cur);
                            break;
                        }
                    }
                    _ => {
                        stack.push(cur);
                        break;
                    }
                }
            }
        }
        Ok(FpElement { syllables: stack })
    }

    pub fn multiply(&self, a: &FpElement, b: &FpElement) -> Result<FpElement> {
        let mut raw = a.syllables.clone();
        raw.extend(b.syllables.iter().cloned());
        self.normalize(&raw)
    }

    pub fn inverse(&self, a: &FpElement) -> Result<FpElement> {
        let raw: Vec<FactorElement> = a
            .syllables
            .iter()
            .rev()
            .map(|fe| self.syllable_inverse(fe))
            .collect::<Result<_>>()?;
        self.normalize(&raw)
    }

    /// The long normal form: free-factor syllables expanded into their reduced
    /// words over S, parabolic syllables kept as single letters.
    pub fn long_normal_form(&self, a: &FpElement) -> Vec<Letter> {
        let mut out = Vec::new();
        for fe in &a.syllables {
            match &fe.value {
                FactorValue::Free(w) => out.extend(w.letters().iter().cloned().map(Letter::Gen)),
                _ => out.push(Letter::Par(fe.clone())),
            }
        }
        out
    }

    /// Inverse of [`Self::long_normal_form`]: assemble letters into an element.
    pub fn from_letters(&self, letters: &[Letter]) -> Result<FpElement> {
        let mut raw: Vec<FactorElement> = Vec::new();
        for l in letters {
            match l {
                Letter::Gen(g) => raw.push(FactorElement::free(Word::from_letters(vec![g.clone()]))),
                Letter::Par(fe) => raw.push(fe.clone()),
            }
        }
        self.normalize(&raw)
    }

    /// Length of the path in the coned-off graph labeled by the long normal
    /// form: one edge per S-letter, two per parabolic letter.
    pub fn path_len(&self, a: &FpElement) -> usize {
        self.long_normal_form(a)
            .iter()
            .map(|l| match l {
                Letter::Gen(_) => 1,
                Letter::Par(_) => 2,
            })
            .sum()
    }

    pub fn letter_path_len(letters: &[Letter]) -> usize {
        letters
            .iter()
            .map(|l| match l {
                Letter::Gen(_) => 1,
                Letter::Par(_) => 2,
            })
            .sum()
    }

    /// All non-identity elements of parabolic factor `k` whose word length
    /// over the factor's own generators is at most `n`, sorted canonically.
    pub fn factor_ball(&self, k: usize, n: usize) -> Result<Vec<FactorElement>> {
        let spec = self.parabolic(k)?;
        let mut out: Vec<FactorElement> = Vec::new();
        match &spec.kind {
            ParabolicKind::Abelian { free_rank, torsion } => {
                // word length of a vector is the l1 norm, with torsion
                // coordinates measured the short way around
                let dim = free_rank + torsion.len();
                let mut cur = vec![0i64; dim];
                fn rec(
                    out: &mut Vec<FactorElement>,
                    cur: &mut Vec<i64>,
                    pos: usize,
                    left: i64,
                    free_rank: usize,
                    torsion: &[u64],
                    factor: usize,
                ) {
                    if pos == cur.len() {
                        if cur.iter().any(|&c| c != 0) {
                            out.push(FactorElement { factor, value: FactorValue::Abelian(cur.clone()) });
                        }
                        return;
                    }
                    if pos < free_rank {
                        for c in -left..=left {
                            cur[pos] = c;
                            rec(out, cur, pos + 1, left - c.abs(), free_rank, torsion, factor);
                        }
                    } else {
                        let t = torsion[pos - free_rank] as i64;
                        for c in 0..t {
                            let len = c.min(t - c);
                            if len <= left {
                                cur[pos] = c;
                                rec(out, cur, pos + 1, left - len, free_rank, torsion, factor);
                            }
                        }
                    }
                    cur[pos] = 0;
                }
                rec(&mut out, &mut cur, 0, n as i64, *free_rank, torsion, k);
            }
            ParabolicKind::Finite(t) => {
                // breadth-first over the table through the listed generators
                let mut dist = vec![usize::MAX; t.size()];
                dist[0] = 0;
                let mut queue = std::collections::VecDeque::from([0usize]);
                while let Some(e) = queue.pop_front() {
                    if dist[e] >= n {
                        continue;
                    }
                    for (i, _) in spec.gens.iter().enumerate() {
                        let ge = spec.gen_elems[i];
                        for next in [t.mul(e, ge), t.mul(e, t.inv(ge))] {
                            if dist[next] == usize::MAX {
                                dist[next] = dist[e] + 1;
                                queue.push_back(next);
                            }
                        }
                    }
                }
                for e in 1..t.size() {
                    if dist[e] <= n {
                        out.push(FactorElement { factor: k, value: FactorValue::Finite(e) });
                    }
                }
            }
            ParabolicKind::OracleBacked { .. } => {
                return Err(RhError::Unsupported(format!(
                    "cannot enumerate a ball of oracle-backed parabolic {}",
                    spec.name
                )))
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn format_letter(&self, l: &Letter) -> String {
        match l {
            Letter::Gen(g) => g.to_string(),
            Letter::Par(fe) => self.format_syllable(fe),
        }
    }

    pub fn format_syllable(&self, fe: &FactorElement) -> String {
        match &fe.value {
            FactorValue::Free(w) => w.to_string(),
            FactorValue::Abelian(v) => {
                let name = self.parabolic(fe.factor).map(|p| p.name.clone()).unwrap_or_default();
                let mut s = format!("{name}[");
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    let _ = write!(s, "{c}");
                }
                s.push(']');
                s
            }
            FactorValue::Finite(e) => {
                let name = self.parabolic(fe.factor).map(|p| p.name.clone()).unwrap_or_default();
                format!("{name}[{e}]")
            }
            FactorValue::Rep(w) => {
                let name = self.parabolic(fe.factor).map(|p| p.name.clone()).unwrap_or_default();
                format!("{name}{{{w}}}")
            }
        }
    }

    pub fn format_element(&self, a: &FpElement) -> String {
        if a.is_identity() {
            return "1".to_string();
        }
        a.syllables.iter().map(|fe| self.format_syllable(fe)).collect::<Vec<_>>().join("")
    }
}
