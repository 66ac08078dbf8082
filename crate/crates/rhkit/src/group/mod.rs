//! Words, relative presentations, free products with normal forms, and the
//! word-problem / normal-form oracle contracts consumed by every other module.

mod freeprod;
mod oracle;
mod parabolic;
mod presentation;
mod word;

pub use freeprod::{FactorElement, FactorValue, FpElement, FreeProduct, Letter};
pub use oracle::{
    builtin_oracles, free_product_oracles, parse_group_family, word_to_syllables, GroupFamily,
    NfOracle, WpOracle,
};
pub use parabolic::{FiniteTable, ParabolicKind, ParabolicSpec};
pub use presentation::{parse_presentation, RelPresentation, RelWord};
pub use word::{GenSymbol, Sign, Word};
