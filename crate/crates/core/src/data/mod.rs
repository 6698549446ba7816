//! Rating containers, domain alignment, file I/O and holdout splitting.

mod align;
mod io;
mod matrix;
mod split;

pub use align::{align_domains, AlignedCollection, Orientation};
pub use io::{parse_pairs, parse_ratings, parse_ratings_str, read_ratings_file, write_ratings, write_ratings_file, Schema};
pub use matrix::{transpose, IdMap, RatingBounds, RatingTriple, RatingsMatrix};
pub use split::{split_holdout, subsample, HoldoutSplit, SplitSidecar};
