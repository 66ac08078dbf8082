//! Equation/inequation/constraint systems over a group, their file format,
//! and the triangulation procedure that normalizes every equation to length
//! three and every inequation and constraint to a single unknown.

use std::collections::{BTreeMap, BTreeSet};

use crate::group::Word;
use crate::{RhError, Result};

/// One letter of an equation word: an unknown or parameter name, possibly
/// inverted.  The reserved name `1` denotes the group identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EqTerm {
    pub name: String,
    pub inverse: bool,
}

impl EqTerm {
    pub fn plain(name: impl Into<String>) -> EqTerm {
        EqTerm { name: name.into(), inverse: false }
    }

    pub fn inv(name: impl Into<String>) -> EqTerm {
        EqTerm { name: name.into(), inverse: true }
    }

    pub fn is_neutral(&self) -> bool {
        self.name == "1"
    }
}

impl std::fmt::Display for EqTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

pub type EqWord = Vec<EqTerm>;

/// A language constraint attached to a word of the system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintRef {
    /// The geometric language.
    Geometric,
    /// The geometric language minus its trivial-image part.
    GeometricNontrivial,
    /// A gnr automaton loaded from a file.
    AutomatonFile(String),
}

/// A system of equations (`= 1`), inequations (`!= 1`) and language
/// constraints over unknowns and word-valued parameters.
#[derive(Debug, Clone, Default)]
pub struct EqSystem {
    pub unknowns: BTreeSet<String>,
    pub params: BTreeMap<String, Word>,
    pub equations: Vec<EqWord>,
    pub inequations: Vec<EqWord>,
    pub constraints: Vec<(EqWord, ConstraintRef)>,
}

impl EqSystem {
    /// Every equation has three letters, every inequation and constraint one.
    pub fn is_triangular(&self) -> bool {
        self.equations.iter().all(|e| e.len() == 3)
            && self.inequations.iter().all(|w| w.len() == 1)
            && self.constraints.iter().all(|(w, _)| w.len() == 1)
    }

    fn known_name(&self, name: &str) -> bool {
        name == "1" || self.unknowns.contains(name) || self.params.contains_key(name)
    }

    pub fn validate(&self) -> Result<()> {
        for name in self.unknowns.iter() {
            if self.params.contains_key(name) || name == "1" {
                return Err(RhError::MalformedInput(format!(
                    "name {name:?} is both unknown and parameter"
                )));
            }
        }
        let all = self
            .equations
            .iter()
            .chain(&self.inequations)
            .chain(self.constraints.iter().map(|(w, _)| w));
        for w in all {
            for t in w {
                if !self.known_name(&t.name) {
                    return Err(RhError::MalformedInput(format!(
                        "undeclared name {:?} in system",
                        t.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// A fresh identifier not colliding with any declared name.
    fn fresh(&self, hint: &str, counter: &mut usize) -> String {
        loop {
            let cand = format!("_{hint}{}", *counter);
            *counter += 1;
            if !self.known_name(&cand) {
                return cand;
            }
        }
    }

    /// Rewrite into an equisatisfiable triangular system.
    ///
    /// Inverted unknowns are eliminated by a fresh unknown `y` with the
    /// equation `x y 1 = 1`; inverted parameters stay (they are constants).
    /// Long equations are split with fresh unknowns, short ones padded with
    /// the identity.  Inequations and constraints get one fresh unknown equal
    /// to their word.
    pub fn triangulate(&self) -> Result<EqSystem> {
        self.validate()?;
        let mut out = EqSystem {
            unknowns: self.unknowns.clone(),
            params: self.params.clone(),
            equations: Vec::new(),
            inequations: Vec::new(),
            constraints: Vec::new(),
        };
        let mut counter = 0usize;
        // map from inverted name to its replacement
        let mut inverses: BTreeMap<String, String> = BTreeMap::new();
        let mut extra_equations: Vec<EqWord> = Vec::new();

        let mut replace = |sys: &mut EqSystem,
                           term: &EqTerm,
                           extra: &mut Vec<EqWord>,
                           counter: &mut usize|
         -> EqTerm {
            if !term.inverse || term.is_neutral() {
                return term.clone();
            }
            if sys.params.contains_key(&term.name) {
                // parameters are constants; an inverted one needs no trick
                return term.clone();
            }
            if let Some(existing) = inverses.get(&term.name) {
                EqTerm::plain(existing.clone())
            } else {
                // unknown: add x y 1 = 1 so that y stands for x^-1
                let fresh = sys.fresh("inv", counter);
                sys.unknowns.insert(fresh.clone());
                extra.push(vec![
                    EqTerm::plain(term.name.clone()),
                    EqTerm::plain(fresh.clone()),
                    EqTerm::plain("1"),
                ]);
                inverses.insert(term.name.clone(), fresh.clone());
                EqTerm::plain(fresh)
            }
        };

        let strip = |sys: &mut EqSystem,
                     w: &EqWord,
                     extra: &mut Vec<EqWord>,
                     counter: &mut usize,
                     replace: &mut dyn FnMut(
            &mut EqSystem,
            &EqTerm,
            &mut Vec<EqWord>,
            &mut usize,
        ) -> EqTerm|
         -> EqWord {
            w.iter().map(|t| replace(sys, t, extra, counter)).collect()
        };

        // equations: strip inverses, then cut to length three
        let mut pending: Vec<EqWord> = Vec::new();
        for e in &self.equations {
            let w = strip(&mut out, e, &mut extra_equations, &mut counter, &mut replace);
            pending.push(w);
        }
        // inequations and constraints: reduce to one fresh unknown `u` with
        // u^-1 * word = 1, i.e. word * v = 1 and u v 1 = 1
        let single = |sys: &mut EqSystem,
                          w: &EqWord,
                          extra: &mut Vec<EqWord>,
                          pending: &mut Vec<EqWord>,
                          counter: &mut usize,
                          replace: &mut dyn FnMut(
            &mut EqSystem,
            &EqTerm,
            &mut Vec<EqWord>,
            &mut usize,
        ) -> EqTerm|
         -> EqTerm {
            let w = strip(sys, w, extra, counter, replace);
            if let [t] = w.as_slice() {
                if !t.inverse && sys.unknowns.contains(&t.name) {
                    return t.clone();
                }
            }
            let u = sys.fresh("w", counter);
            let v = sys.fresh("winv", counter);
            sys.unknowns.insert(u.clone());
            sys.unknowns.insert(v.clone());
            // u v = 1 and w v = 1 force u to equal the word w
            extra.push(vec![EqTerm::plain(u.clone()), EqTerm::plain(v.clone()), EqTerm::plain("1")]);
            let mut chain = w;
            chain.push(EqTerm::plain(v));
            pending.push(chain);
            EqTerm::plain(u)
        };
        for w in &self.inequations {
            let t = single(&mut out, w, &mut extra_equations, &mut pending, &mut counter, &mut replace);
            out.inequations.push(vec![t]);
        }
        for (w, lang) in &self.constraints {
            let t = single(&mut out, w, &mut extra_equations, &mut pending, &mut counter, &mut replace);
            out.constraints.push((vec![t], lang.clone()));
        }
        pending.extend(extra_equations);

        // cut every pending equation to length exactly three
        for mut w in pending {
            loop {
                match w.len() {
                    0 => break, // 1 = 1, trivially satisfied
                    1 => {
                        w.push(EqTerm::plain("1"));
                        w.push(EqTerm::plain("1"));
                    }
                    2 => w.push(EqTerm::plain("1")),
                    3 => {
                        out.equations.push(w);
                        break;
                    }
                    _ => {
                        // t1 t2 rest = 1  becomes  t1 t2 v = 1, u v 1 = 1,
                        // u rest = 1  with u the value of t1 t2
                        let u = out.fresh("t", &mut counter);
                        let v = out.fresh("tinv", &mut counter);
                        out.unknowns.insert(u.clone());
                        out.unknowns.insert(v.clone());
                        let t1 = w[0].clone();
                        let t2 = w[1].clone();
                        out.equations.push(vec![t1, t2, EqTerm::plain(v.clone())]);
                        out.equations.push(vec![
                            EqTerm::plain(u.clone()),
                            EqTerm::plain(v),
                            EqTerm::plain("1"),
                        ]);
                        let mut rest = vec![EqTerm::plain(u)];
                        rest.extend(w.into_iter().skip(2));
                        w = rest;
                    }
                }
            }
        }
        debug_assert!(out.is_triangular());
        Ok(out)
    }
}

fn parse_terms(text: &str, line: usize) -> Result<EqWord> {
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        if let Some(base) = tok.strip_suffix("^-1") {
            if base.is_empty() {
                return Err(RhError::Parse { line, msg: format!("bad term {tok:?}") });
            }
            out.push(EqTerm::inv(base));
        } else {
            out.push(EqTerm::plain(tok));
        }
    }
    Ok(out)
}

/// Parse the line-oriented system format:
///
/// ```text
/// unknowns: x, y
/// param g = abA
/// eq: x y g
/// ineq: x
/// cons: x in L
/// cons: y in L\L0
/// cons: z in AUT:path/to/automaton
/// ```
pub fn parse_system(text: &str) -> Result<EqSystem> {
    let mut sys = EqSystem::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(rest) = content.strip_prefix("unknowns:") {
            for name in rest.split(',') {
                let name = name.trim();
                if name.is_empty() {
                    continue;
                }
                sys.unknowns.insert(name.to_string());
            }
        } else if let Some(rest) = content.strip_prefix("param") {
            let (name, value) = rest
                .split_once('=')
                .ok_or(RhError::Parse { line, msg: "expected `param NAME = WORD`".into() })?;
            let word = Word::parse(value.trim())
                .map_err(|e| RhError::Parse { line, msg: e.to_string() })?;
            sys.params.insert(name.trim().to_string(), word);
        } else if let Some(rest) = content.strip_prefix("eq:") {
            sys.equations.push(parse_terms(rest, line)?);
        } else if let Some(rest) = content.strip_prefix("ineq:") {
            sys.inequations.push(parse_terms(rest, line)?);
        } else if let Some(rest) = content.strip_prefix("cons:") {
            let (word, lang) = rest
                .split_once(" in ")
                .ok_or(RhError::Parse { line, msg: "expected `cons: WORD in LANG`".into() })?;
            let lang = match lang.trim() {
                "L" => ConstraintRef::Geometric,
                "L\\L0" => ConstraintRef::GeometricNontrivial,
                other => {
                    if let Some(path) = other.strip_prefix("AUT:") {
                        ConstraintRef::AutomatonFile(path.trim().to_string())
                    } else {
                        return Err(RhError::Parse {
                            line,
                            msg: format!("unknown language {other:?}"),
                        });
                    }
                }
            };
            sys.constraints.push((parse_terms(word, line)?, lang));
        } else {
            return Err(RhError::Parse { line, msg: format!("unknown directive {content:?}") });
        }
    }
    sys.validate()?;
    Ok(sys)
}
