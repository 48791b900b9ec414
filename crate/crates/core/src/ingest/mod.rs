//! Getting corpora in and out: the line-oriented file format, citation
//! strings, and seeded synthetic generation.

pub mod citation;
pub mod format;
pub mod synth;

pub use citation::{citation_for, parse_citation, references_from_citations, resolve_citation, CitationPath, CitationReport, Resolution};
pub use format::{corpus_records, corpus_to_string, load_corpus, parse_corpus, read_corpus, save_corpus, write_corpus, CorpusRecord};
pub use synth::{
    generate_synthetic, ClusterSpec, GeneratedCorpus, LevelCounts, ParagraphDistribution, PlantedCluster, PlantedProcedural,
    PlantedReport, PlantedSpec, ProceduralSpec, RankFractions, SynthConfig,
};
