use std::fmt;

use crate::{RhError, Result};

/// Orientation of a generator occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A generator letter together with its orientation.
///
/// In text form a lowercase letter stands for the generator and the
/// corresponding uppercase letter for its inverse; the symmetric closure of a
/// generating set is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenSymbol {
    name: String,
    sign: Sign,
}

impl GenSymbol {
    pub fn new(name: impl Into<String>, sign: Sign) -> Result<GenSymbol> {
        let name = name.into();
        if name.is_empty() {
            return Err(RhError::MalformedInput("empty generator name".into()));
        }
        Ok(GenSymbol { name, sign })
    }

    pub fn pos(name: impl Into<String>) -> GenSymbol {
        GenSymbol { name: name.into(), sign: Sign::Pos }
    }

    pub fn neg(name: impl Into<String>) -> GenSymbol {
        GenSymbol { name: name.into(), sign: Sign::Neg }
    }

    /// Parse a single character: lowercase is a generator, uppercase its inverse.
    pub fn from_char(c: char) -> Result<GenSymbol> {
        if c.is_ascii_lowercase() {
            Ok(GenSymbol::pos(c.to_string()))
        } else if c.is_ascii_uppercase() {
            Ok(GenSymbol::neg(c.to_ascii_lowercase().to_string()))
        } else {
            Err(RhError::MalformedInput(format!("invalid generator character {c:?}")))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn inverse(&self) -> GenSymbol {
        GenSymbol { name: self.name.clone(), sign: self.sign.flip() }
    }

    pub fn is_inverse_of(&self, other: &GenSymbol) -> bool {
        self.name == other.name && self.sign != other.sign
    }
}

impl fmt::Display for GenSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.name.len() == 1 && self.name.chars().all(|c| c.is_ascii_lowercase()) {
            match self.sign {
                Sign::Pos => write!(f, "{}", self.name),
                Sign::Neg => write!(f, "{}", self.name.to_ascii_uppercase()),
            }
        } else {
            match self.sign {
                Sign::Pos => write!(f, "{}", self.name),
                Sign::Neg => write!(f, "{}^-1", self.name),
            }
        }
    }
}

/// A word over a symmetric generating set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<GenSymbol>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<GenSymbol>) -> Word {
        Word(letters)
    }

    /// Parse a compact word like `abAB`.
    pub fn parse(text: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for c in text.chars() {
            if c.is_whitespace() {
                continue;
            }
            letters.push(GenSymbol::from_char(c)?);
        }
        Ok(Word(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[GenSymbol] {
        &self.0
    }

    pub fn push(&mut self, g: GenSymbol) {
        self.0.push(g);
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(GenSymbol::inverse).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend(other.0.iter().cloned());
        Word(letters)
    }

    /// Free reduction: cancel adjacent inverse pairs until stable.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<GenSymbol> = Vec::with_capacity(self.0.len());
        for g in &self.0 {
            if out.last().map_or(false, |last: &GenSymbol| last.is_inverse_of(g)) {
                out.pop();
            } else {
                out.push(g.clone());
            }
        }
        Word(out)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|w| !w[0].is_inverse_of(&w[1]))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for g in &self.0 {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_idempotent() {
        let w = Word::parse("abBAa").unwrap();
        let r = w.free_reduce();
        assert_eq!(r, Word::parse("a").unwrap());
        assert_eq!(r.free_reduce(), r);
    }

    #[test]
    fn double_inverse() {
        let g = GenSymbol::from_char('Q').unwrap();
        assert_eq!(g.inverse().inverse(), g);
        assert_eq!(g.sign(), Sign::Neg);
    }

    #[test]
    fn inverse_cancels() {
        let w = Word::parse("abA").unwrap();
        assert!(w.concat(&w.inverse()).free_reduce().is_empty());
    }

    #[test]
    fn display_roundtrip() {
        let w = Word::parse("aBc").unwrap();
        assert_eq!(Word::parse(&w.to_string()).unwrap(), w);
        assert_eq!(Word::empty().to_string(), "1");
    }
}
