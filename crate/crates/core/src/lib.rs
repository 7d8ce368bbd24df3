//! Odor-descriptor prediction from SMILES: molecule parsing, featurization, a
//! frequency-modulated feature encoder, a composite multi-label loss, small
//! trainable models, and dataset statistics.

pub mod analyze;
pub mod cil;
mod error;
pub mod featurize;
pub mod hmfm;
pub mod numcore;
pub mod smiles;
pub mod synthetic;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use numcore::Matrix;
pub use smiles::{parse_smiles, MoleculeGraph, ParseError, ParseErrorKind, RawRecord};
