//! Van Kampen diagrams over relative presentations, cluster analysis, the
//! recognition semi-algorithm for relative hyperbolicity, and the
//! abelian-structure finder.

mod cluster;
mod enumerate;
mod abelian;
mod map;
mod recognize;

pub use abelian::{find_abelian_structure, AbelianBounds, AbelianStructure, FinderOutcome};
pub use cluster::{clusters, Cluster};
pub use recognize::{
    exactness_check, hyperbolicity_constant, recognize, simple_loop_list, LoopCaps,
    RecognitionOutcome, RecognitionReport, RecognizeConfig, TraceRow,
};
pub use enumerate::{
    cluster_vocabulary, enumerate_diagrams, min_area_table, DiagramStream, EnumCaps,
    FactorVocab, VocabularyCaps,
};
pub use map::{
    cyclic_canonical, euler_triangle_bound_holds, is_relator_conjugate,
    label_isomorphic, min_polygon_triangulation, Cell, CellKind, CellTemplate, VKDiagram,
};
