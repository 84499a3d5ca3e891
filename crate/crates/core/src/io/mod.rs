//! File formats: contact maps, FASTA sequences, embeddings, labels, graph
//! bundles, ensemble checkpoints, and prediction reports.

mod bundle;
mod bytes;
mod checkpoint;
mod contacts;
mod embeddings;
mod fasta;
mod labels;
mod report;

pub use bundle::{parse_bundle, read_bundle, render_bundle, write_bundle, GraphBundle, BUNDLE_MAGIC};
pub use checkpoint::{
    parse_checkpoint, read_checkpoint, render_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
};
pub use contacts::{parse_contacts, read_contacts, render_contacts, write_contacts, ContactFile};
pub use embeddings::{
    parse_embeddings, read_embeddings, render_embeddings, write_embeddings, EMBEDDING_MAGIC,
};
pub use fasta::{parse_fasta, read_fasta, render_fasta, write_fasta};
pub use labels::{parse_labels, read_labels, render_labels, write_labels, LabelRecord, LabelTable};
pub use report::{parse_report, read_report, render_report, write_report, ParsedReport};
