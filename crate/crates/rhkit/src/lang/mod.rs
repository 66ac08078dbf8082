//! Detour detection, the constant calculus, the geometric language and its
//! automata over free products.

mod build;
mod constants;
mod detour;
mod fsa;
mod gnr;

pub use constants::{
    diagram_cap, epsilon_prime, in_area_window, ratio_exceeds, trivial_word_cap,
    vocabulary_product_cap, GeometryConstants,
};
pub use build::{build_language_automaton, LangSymbol};
pub(crate) use build::enumerate_lnf_by;
pub use detour::{body_projects_into_factor, find_detours, Detour, LangTester, SectorTable};
pub use fsa::{SymbolDfa, SymbolNfa};
pub use gnr::{
    element_nf_word, factor_nf_word, gnr_to_word_automaton, GnrAutomaton, GnrLabel, SetSpec,
    WordAutomaton,
};
