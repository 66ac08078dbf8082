//! Bounded enumeration machinery for the recognition algorithm: the cluster
//! vocabulary of each parabolic factor, isomorphism-free enumeration of
//! diagrams over a finite cell inventory, and the minimum-area table.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::group::{FactorElement, FreeProduct, Letter, RelPresentation};
use crate::vk::map::{
    cyclic_canonical, invert_relword, min_polygon_triangulation, CellKind, CellTemplate, VKDiagram,
};
use crate::{RhError, Result};

/// Caps for vocabulary construction.  `product_len` bounds the number of
/// alphabet factors of a vocabulary element, `word_len` the length of a
/// trivial word over the vocabulary; the two size caps turn combinatorial
/// blow-up into an explicit failure.
#[derive(Debug, Clone, Copy)]
pub struct VocabularyCaps {
    pub product_len: usize,
    pub vocab_size: usize,
    pub word_len: usize,
    pub word_count: usize,
}

/// Vocabulary of one parabolic factor: the elements expressible as short
/// products of alphabet letters, the short trivial words over them, and the
/// minimal polygon diagrams of those words.
#[derive(Debug, Clone)]
pub struct FactorVocab {
    pub factor: usize,
    pub elements: Vec<FactorElement>,
    pub trivial_words: Vec<Vec<FactorElement>>,
    pub diagrams: Vec<VKDiagram>,
}

/// Build the vocabulary of every parabolic factor of the presentation.
///
/// Elements are deduplicated by the factor's canonical form; the identity is
/// excluded (letters of the relative alphabet are nontrivial).  Exceeding a
/// size cap is an explicit failure rather than silent truncation.
pub fn cluster_vocabulary(pres: &RelPresentation, caps: VocabularyCaps) -> Result<Vec<FactorVocab>> {
    let fp = pres.free_product()?;
    let mut out = Vec::new();
    for spec in pres.parabolics() {
        let k = spec.index;
        let letters = pres.alphabet_in_factor(k)?;
        // BFS closure of products of up to product_len letters
        let mut seen: BTreeSet<FactorElement> = BTreeSet::new();
        let mut frontier: VecDeque<(FactorElement, usize)> = VecDeque::new();
        for l in &letters {
            let c = fp.canonicalize_syllable(l)?;
            if !fp.syllable_is_identity(&c)? && seen.insert(c.clone()) {
                frontier.push_back((c, 1));
            }
        }
        while let Some((e, len)) = frontier.pop_front() {
            if len >= caps.product_len {
                continue;
            }
            for l in &letters {
                let p = fp.syllable_mul(&e, l)?;
                if fp.syllable_is_identity(&p)? {
                    continue;
                }
                if seen.insert(p.clone()) {
                    if seen.len() > caps.vocab_size {
                        return Err(RhError::BudgetExceeded(format!(
                            "vocabulary of factor {k} exceeds {} elements",
                            caps.vocab_size
                        )));
                    }
                    frontier.push_back((p, len + 1));
                }
            }
        }
        let elements: Vec<FactorElement> = seen.into_iter().collect();
        // trivial words over the vocabulary, deduplicated up to rotation
        let mut trivial_words: Vec<Vec<FactorElement>> = Vec::new();
        let mut word_keys: BTreeSet<Vec<FactorElement>> = BTreeSet::new();
        let mut stack: Vec<FactorElement> = Vec::new();
        enumerate_trivial(
            &fp,
            &elements,
            caps.word_len,
            &mut stack,
            None,
            &mut |w| {
                let as_letters: Vec<Letter> = w.iter().map(|fe| Letter::Par(fe.clone())).collect();
                let canon = cyclic_canonical(&as_letters);
                let key: Vec<FactorElement> = canon
                    .iter()
                    .map(|l| match l {
                        Letter::Par(fe) => fe.clone(),
                        Letter::Gen(_) => unreachable!("vocabulary words are parabolic"),
                    })
                    .collect();
                if word_keys.insert(key) {
                    if trivial_words.len() >= caps.word_count {
                        return Err(RhError::BudgetExceeded(format!(
                            "trivial words of factor {k} exceed {} entries",
                            caps.word_count
                        )));
                    }
                    trivial_words.push(w.to_vec());
                }
                Ok(())
            },
        )?;
        let mut diagrams = Vec::new();
        for w in &trivial_words {
            if w.len() >= 3 {
                diagrams.push(min_polygon_triangulation(&fp, k, w)?);
            }
        }
        out.push(FactorVocab { factor: k, elements, trivial_words, diagrams });
    }
    Ok(out)
}

fn enumerate_trivial(
    fp: &FreeProduct,
    elements: &[FactorElement],
    max_len: usize,
    stack: &mut Vec<FactorElement>,
    partial: Option<FactorElement>,
    emit: &mut dyn FnMut(&[FactorElement]) -> Result<()>,
) -> Result<()> {
    if stack.len() >= 2 {
        if let Some(p) = &partial {
            if fp.syllable_is_identity(p)? {
                emit(stack)?;
            }
        }
    }
    if stack.len() >= max_len {
        return Ok(());
    }
    for e in elements {
        let next = match &partial {
            None => e.clone(),
            Some(p) => fp.syllable_mul(p, e)?,
        };
        stack.push(e.clone());
        enumerate_trivial(fp, elements, max_len, stack, Some(next), emit)?;
        stack.pop();
    }
    Ok(())
}

/// Caps for diagram enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumCaps {
    /// Maximum number of cells per diagram.
    pub max_cells: usize,
    /// Maximum boundary length of any enumerated diagram.
    pub max_boundary: usize,
    /// Maximum number of diagrams in the stream; exceeding it truncates.
    pub max_diagrams: usize,
    /// Whether to also grow diagrams by wedging single cells at boundary
    /// vertices (cactus diagrams).
    pub wedges: bool,
}

/// Result of diagram enumeration: the diagrams in deterministic
/// (area-layered) order, and whether the stream was truncated by the cap.
#[derive(Debug, Clone)]
pub struct DiagramStream {
    pub diagrams: Vec<VKDiagram>,
    pub truncated: bool,
}

/// Enumerate planar diagrams over a cell inventory, deduplicated by canonical
/// form.  Diagrams are grown cell by cell, either by gluing a new cell along
/// a contiguous boundary arc or (optionally) by wedging it at a boundary
/// vertex, so every diagram that admits such a growth order appears exactly
/// once.
pub fn enumerate_diagrams(
    fp: &FreeProduct,
    inventory: &[CellTemplate],
    caps: EnumCaps,
) -> Result<DiagramStream> {
    let mut diagrams: Vec<VKDiagram> = Vec::new();
    let mut keys: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut truncated = false;

    // rotations of every template, precomputed
    let mut rotations: Vec<(CellKind, Vec<Letter>)> = Vec::new();
    for t in inventory {
        for r in 0..t.word.len() {
            let mut w = Vec::with_capacity(t.word.len());
            for j in 0..t.word.len() {
                w.push(t.word[(r + j) % t.word.len()].clone());
            }
            rotations.push((t.kind, w));
        }
    }

    let push = |d: VKDiagram, diagrams: &mut Vec<VKDiagram>, keys: &mut BTreeSet<Vec<u8>>| -> bool {
        if keys.insert(d.canonical_key()) {
            diagrams.push(d);
        }
        diagrams.len() >= caps.max_diagrams
    };

    // seed layer: one diagram per inventory cell (rotations collapse)
    for t in inventory {
        if t.word.len() > caps.max_boundary {
            continue;
        }
        let d = VKDiagram::single_cell(t.kind, t.word.clone(), fp)?;
        if push(d, &mut diagrams, &mut keys) {
            truncated = true;
            return Ok(DiagramStream { diagrams, truncated });
        }
    }
    let singles: Vec<VKDiagram> = diagrams.clone();

    let mut i = 0;
    'grow: while i < diagrams.len() {
        let parent = diagrams[i].clone();
        i += 1;
        if parent.num_cells() >= caps.max_cells {
            continue;
        }
        let bl = parent.boundary_len();
        for (kind, word) in &rotations {
            let l = word.len();
            for pos in 0..bl {
                // fast reject on the first glued label
                if parent.label(parent.outer_darts()[pos]) != &word[0] {
                    continue;
                }
                for m in 1..l.min(bl + 1) {
                    let child = match parent.attach(*kind, word, pos, m, fp)? {
                        Some(c) => c,
                        None => continue,
                    };
                    if child.boundary_len() > caps.max_boundary {
                        continue;
                    }
                    if push(child, &mut diagrams, &mut keys) {
                        truncated = true;
                        break 'grow;
                    }
                }
            }
        }
        if caps.wedges {
            for s in &singles {
                if parent.boundary_len() + s.boundary_len() > caps.max_boundary {
                    continue;
                }
                for pos_self in 0..bl {
                    for pos_other in 0..s.boundary_len() {
                        let child = parent.wedge(s, pos_self, pos_other)?;
                        if push(child, &mut diagrams, &mut keys) {
                            truncated = true;
                            break 'grow;
                        }
                    }
                }
            }
        }
    }
    Ok(DiagramStream { diagrams, truncated })
}

/// Minimum enumerated area per boundary word.  Keys are the lexicographically
/// least cyclic rotation of the boundary word; each word is also entered with
/// its inverse (the mirror diagram has the same area).
pub fn min_area_table(fp: &FreeProduct, diagrams: &[VKDiagram]) -> Result<BTreeMap<Vec<Letter>, usize>> {
    let mut table: BTreeMap<Vec<Letter>, usize> = BTreeMap::new();
    for d in diagrams {
        let w = d.boundary_word(fp)?;
        let a = d.num_cells();
        for key in [cyclic_canonical(&w), cyclic_canonical(&invert_relword(fp, &w)?)] {
            table
                .entry(key)
                .and_modify(|v| *v = (*v).min(a))
                .or_insert(a);
        }
    }
    Ok(table)
}
