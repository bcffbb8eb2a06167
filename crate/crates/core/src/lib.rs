#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod csi;
pub mod error;
pub mod oracle;
pub mod par;
pub mod params;
pub mod quad;
pub mod rss;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
pub use par::Exec;
pub use params::{ChannelParams, Pair, Party, Which};
