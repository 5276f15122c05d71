//! Dataset construction and persistence.

mod corrupt;
mod dataset;
mod dominoes;
mod groups;
mod images;
mod orthogonal;
mod slab;

pub use corrupt::{corrupt_labels, flip_labels};
pub use dataset::{
    Block, CorruptionRecord, Dataset, DatasetMeta, GroupDecl, Projection, DATASET_MAGIC,
    DATASET_VERSION,
};
pub use dominoes::{build_dominoes, CorrelationSpec, DOMINO_BOTTOM, DOMINO_TOP};
pub use groups::{load_group_table, parse_group_table};
pub use images::{
    load_cifar10, load_idx, load_idx_images, load_idx_labels, parse_cifar10, parse_idx_images,
    parse_idx_labels, to_grayscale_28, ImageSet, Vocabulary,
};
pub use orthogonal::random_orthogonal;
pub use slab::{gen_slab, slab_index, SlabSpec};
