//! A small toolkit for finite automata over a dense integer alphabet
//! `0..n_syms`, used as the backend of the gnr constructions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Nondeterministic automaton over symbols `0..n_syms`.
#[derive(Debug, Clone)]
pub struct SymbolNfa {
    pub n_states: usize,
    pub n_syms: usize,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    pub trans: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

impl SymbolNfa {
    pub fn new(n_states: usize, n_syms: usize) -> SymbolNfa {
        SymbolNfa {
            n_states,
            n_syms,
            initial: BTreeSet::new(),
            accepting: BTreeSet::new(),
            trans: BTreeMap::new(),
        }
    }

    pub fn add_transition(&mut self, from: usize, sym: usize, to: usize) {
        self.trans.entry((from, sym)).or_default().insert(to);
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut cur = self.initial.clone();
        for &s in word {
            let mut next = BTreeSet::new();
            for &q in &cur {
                if let Some(ts) = self.trans.get(&(q, s)) {
                    next.extend(ts.iter().copied());
                }
            }
            cur = next;
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.accepting.contains(q))
    }

    /// A scan automaton accepting every word that contains one of the given
    /// patterns as a factor; each pattern position is a set of symbols.
    ///
    /// All patterns share one absorbing accept state, which keeps the subset
    /// construction small: active subsets never encode which particular
    /// patterns already matched.
    pub fn containing_patterns(n_syms: usize, patterns: &[Vec<BTreeSet<usize>>]) -> SymbolNfa {
        let mut nfa = SymbolNfa::new(0, n_syms);
        nfa.initial.insert(0);
        // state 0: self loop on everything; state 1: shared accepting sink
        let sink = 1usize;
        nfa.accepting.insert(sink);
        for s in 0..n_syms {
            nfa.add_transition(0, s, 0);
            nfa.add_transition(sink, s, sink);
        }
        let mut n_states = 2usize;
        for pat in patterns {
            let mut prev = 0usize;
            for (i, pos) in pat.iter().enumerate() {
                let next = if i + 1 == pat.len() {
                    sink
                } else {
                    let q = n_states;
                    n_states += 1;
                    q
                };
                for &s in pos {
                    nfa.add_transition(prev, s, next);
                }
                prev = next;
            }
            if pat.is_empty() {
                // an empty pattern matches everything
                nfa.accepting.insert(0);
            }
        }
        nfa.n_states = n_states;
        nfa
    }

    pub fn determinize(&self) -> SymbolDfa {
        let mut subsets: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut order: Vec<BTreeSet<usize>> = Vec::new();
        let mut trans: Vec<Vec<usize>> = Vec::new();
        let start = self.initial.clone();
        subsets.insert(start.clone(), 0);
        order.push(start);
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let subset = order[id].clone();
            let mut row = Vec::with_capacity(self.n_syms);
            for s in 0..self.n_syms {
                let mut next = BTreeSet::new();
                for &q in &subset {
                    if let Some(ts) = self.trans.get(&(q, s)) {
                        next.extend(ts.iter().copied());
                    }
                }
                let nid = *subsets.entry(next.clone()).or_insert_with(|| {
                    order.push(next);
                    queue.push_back(order.len() - 1);
                    order.len() - 1
                });
                row.push(nid);
            }
            // states are popped in discovery order, so rows append in id order
            debug_assert_eq!(id, trans.len());
            trans.push(row);
        }
        let accepting = order
            .iter()
            .map(|subset| subset.iter().any(|q| self.accepting.contains(q)))
            .collect();
        SymbolDfa { n_syms: self.n_syms, initial: 0, accepting, trans }
    }
}

/// Complete deterministic automaton over symbols `0..n_syms`.
#[derive(Debug, Clone)]
pub struct SymbolDfa {
    pub n_syms: usize,
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub trans: Vec<Vec<usize>>,
}

impl SymbolDfa {
    pub fn n_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut q = self.initial;
        for &s in word {
            q = self.trans[q][s];
        }
        self.accepting[q]
    }

    pub fn complement(mut self) -> SymbolDfa {
        for a in self.accepting.iter_mut() {
            *a = !*a;
        }
        self
    }

    /// Product automaton accepting the intersection of the two languages.
    pub fn intersect(&self, other: &SymbolDfa) -> SymbolDfa {
        assert_eq!(self.n_syms, other.n_syms);
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut order: Vec<(usize, usize)> = Vec::new();
        let mut trans: Vec<Vec<usize>> = Vec::new();
        let start = (self.initial, other.initial);
        index.insert(start, 0);
        order.push(start);
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let (p, q) = order[id];
            let mut row = Vec::with_capacity(self.n_syms);
            for s in 0..self.n_syms {
                let next = (self.trans[p][s], other.trans[q][s]);
                let nid = *index.entry(next).or_insert_with(|| {
                    order.push(next);
                    queue.push_back(order.len() - 1);
                    order.len() - 1
                });
                row.push(nid);
            }
            debug_assert_eq!(id, trans.len());
            trans.push(row);
        }
        let accepting = order.iter().map(|&(p, q)| self.accepting[p] && other.accepting[q]).collect();
        SymbolDfa { n_syms: self.n_syms, initial: 0, accepting, trans }
    }

    /// Automaton accepting exactly the listed words.
    pub fn finite_language(n_syms: usize, words: &[Vec<usize>]) -> SymbolDfa {
        let mut nfa = SymbolNfa::new(1, n_syms);
        nfa.initial.insert(0);
        let mut n = 1usize;
        for w in words {
            if w.is_empty() {
                nfa.accepting.insert(0);
                continue;
            }
            let mut prev = 0usize;
            for (i, &s) in w.iter().enumerate() {
                let q = n;
                n += 1;
                nfa.add_transition(prev, s, q);
                if i + 1 == w.len() {
                    nfa.accepting.insert(q);
                }
                prev = q;
            }
        }
        nfa.n_states = n;
        nfa.determinize()
    }

    /// Is the accepted language empty?
    pub fn is_empty(&self) -> bool {
        let mut seen = vec![false; self.n_states()];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            if self.accepting[q] {
                return false;
            }
            for s in 0..self.n_syms {
                let t = self.trans[q][s];
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        true
    }
}
