//! Frozen encoder stand-ins and feature sources.

mod feature_file;
mod text;
mod world;

pub use feature_file::{
    decode_feature_file, encode_feature_file, load_class_names, load_feature_file, write_class_names,
    write_feature_file, FEATURE_MAGIC, FEATURE_VERSION, NORM_TOLERANCE,
};
pub use text::{
    class_name_embedding, ClassEmbeddingTable, TextEncoderDims, TextTape, ToyTextEncoder, EncoderInit,
};
pub use world::{synthetic_sample, FeatureRecord, SyntheticWorld, WorldParams, WORLD_VARIANCE_FLOOR};
