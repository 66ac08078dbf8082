use std::collections::BTreeMap;
use std::sync::Arc;

use crate::group::word::Word;
use crate::{RhError, Result};

/// Multiplication table of a finite group.
///
/// Elements are `0..size` with `0` the identity; `table[a * size + b]` is the
/// product `a * b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTable {
    size: usize,
    table: Vec<usize>,
    inverse: Vec<usize>,
}

impl FiniteTable {
    pub fn new(size: usize, table: Vec<usize>) -> Result<FiniteTable> {
        if size == 0 || table.len() != size * size {
            return Err(RhError::MalformedInput(format!(
                "multiplication table must have {}x{} entries",
                size, size
            )));
        }
        if table.iter().any(|&x| x >= size) {
            return Err(RhError::MalformedInput("table entry out of range".into()));
        }
        for a in 0..size {
            if table[a] != a || table[a * size] != a {
                return Err(RhError::MalformedInput("element 0 must be the identity".into()));
            }
        }
        // associativity makes the table a group table together with inverses
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    if table[table[a * size + b] * size + c] != table[a * size + table[b * size + c]] {
                        return Err(RhError::MalformedInput("table is not associative".into()));
                    }
                }
            }
        }
        let mut inverse = vec![usize::MAX; size];
        for a in 0..size {
            match (0..size).find(|&b| table[a * size + b] == 0) {
                Some(b) => inverse[a] = b,
                None => return Err(RhError::MalformedInput(format!("element {a} has no inverse"))),
            }
        }
        Ok(FiniteTable { size, table, inverse })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.size + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }
}

/// External word-problem procedure for an oracle-backed parabolic.
pub type ExternalWp = Arc<dyn Fn(&Word) -> bool + Send + Sync>;
/// External normal-form procedure for an oracle-backed parabolic.
pub type ExternalNf = Arc<dyn Fn(&Word) -> Word + Send + Sync>;

/// The algebraic family a parabolic factor belongs to.
#[derive(Clone)]
pub enum ParabolicKind {
    /// Finitely generated abelian group: `free_rank` infinite-order coordinates
    /// followed by one coordinate per torsion order.  A free abelian group has
    /// empty torsion.
    Abelian { free_rank: usize, torsion: Vec<u64> },
    /// Finite group given by its multiplication table.
    Finite(FiniteTable),
    /// Group known only through externally supplied procedures on words over
    /// its generators.  The procedures may be absent, in which case every
    /// operation needing them fails with `Unsupported`.
    OracleBacked { wp: Option<ExternalWp>, nf: Option<ExternalNf> },
}

impl std::fmt::Debug for ParabolicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParabolicKind::Abelian { free_rank, torsion } => f
                .debug_struct("Abelian")
                .field("free_rank", free_rank)
                .field("torsion", torsion)
                .finish(),
            ParabolicKind::Finite(t) => f.debug_struct("Finite").field("size", &t.size()).finish(),
            ParabolicKind::OracleBacked { wp, nf } => f
                .debug_struct("OracleBacked")
                .field("wp", &wp.is_some())
                .field("nf", &nf.is_some())
                .finish(),
        }
    }
}

/// Specification of one parabolic factor `H~_i` of a relative presentation.
#[derive(Debug, Clone)]
pub struct ParabolicSpec {
    /// 1-based factor index inside the free product (0 is the free factor).
    pub index: usize,
    /// Name used in the presentation file (`[parabolic.NAME]`).
    pub name: String,
    pub kind: ParabolicKind,
    /// Generator names; for abelian kinds one per coordinate, in order.
    pub gens: Vec<String>,
    /// For finite kinds, the table element of each generator.
    pub gen_elems: Vec<usize>,
    /// Optional embedding of each generator as a word over the group
    /// generators X, used by graph exploration and exactness checks.
    pub embed: BTreeMap<String, Word>,
}

impl ParabolicSpec {
    pub fn abelian(index: usize, name: impl Into<String>, free_rank: usize, torsion: Vec<u64>, gens: Vec<String>) -> Result<ParabolicSpec> {
        let name = name.into();
        if torsion.iter().any(|&t| t < 2) {
            return Err(RhError::MalformedInput("torsion orders must be at least 2".into()));
        }
        let dim = free_rank + torsion.len();
        if gens.len() != dim {
            return Err(RhError::MalformedInput(format!(
                "abelian parabolic {} needs {} generator names, got {}",
                name, dim,
                gens.len()
            )));
        }
        Ok(ParabolicSpec {
            index,
            name,
            kind: ParabolicKind::Abelian { free_rank, torsion },
            gens,
            gen_elems: Vec::new(),
            embed: BTreeMap::new(),
        })
    }

    /// Number of coordinates of an abelian factor, or `None` otherwise.
    pub fn dimension(&self) -> Option<usize> {
        match &self.kind {
            ParabolicKind::Abelian { free_rank, torsion } => Some(free_rank + torsion.len()),
            _ => None,
        }
    }

    /// Reduce an abelian coordinate vector: torsion components into `[0, order)`.
    pub fn reduce_vector(&self, mut v: Vec<i64>) -> Result<Vec<i64>> {
        match &self.kind {
            ParabolicKind::Abelian { free_rank, torsion } => {
                if v.len() != free_rank + torsion.len() {
                    return Err(RhError::MalformedInput(format!(
                        "coordinate vector for {} must have {} entries",
                        self.name,
                        free_rank + torsion.len()
                    )));
                }
                for (j, &t) in torsion.iter().enumerate() {
                    let t = t as i64;
                    let c = &mut v[free_rank + j];
                    *c = c.rem_euclid(t);
                }
                Ok(v)
            }
            _ => Err(RhError::MalformedInput(format!("{} is not an abelian parabolic", self.name))),
        }
    }

    /// Embedding word of a generator, if supplied.
    pub fn embed_word(&self, gen: &str) -> Option<&Word> {
        self.embed.get(gen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z2_table() {
        let t = FiniteTable::new(2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(t.mul(1, 1), 0);
        assert_eq!(t.inv(1), 1);
    }

    #[test]
    fn bad_identity_rejected() {
        assert!(FiniteTable::new(2, vec![1, 0, 0, 1]).is_err());
    }

    #[test]
    fn torsion_reduction() {
        let p = ParabolicSpec::abelian(1, "P", 1, vec![3], vec!["p".into(), "q".into()]).unwrap();
        assert_eq!(p.reduce_vector(vec![-2, -1]).unwrap(), vec![-2, 2]);
        assert_eq!(p.dimension(), Some(2));
    }

    #[test]
    fn torsion_order_one_rejected() {
        assert!(ParabolicSpec::abelian(1, "P", 0, vec![1], vec!["p".into()]).is_err());
    }
}
