//! SMILES ingestion: a parser for the subset of the notation found in odorant
//! datasets, a writer for round-tripping, and dataset cleaning.
//!
//! Supported: organic-subset atoms (`B C N O P S F Cl Br I`), aromatic
//! lowercase atoms (`b c n o p s`), bracket atoms with isotope, charge,
//! hydrogen count and atom class, bonds `- = # :`, branches, ring closures
//! `0-9` and `%nn`, and `.` component separators. Stereo markers (`/ \ @`)
//! are accepted and discarded.

mod clean;
mod element;
mod parser;
mod writer;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use clean::{
    clean_dataset, read_dataset, write_clean_report, write_dataset, CleanReport, DropReason, DroppedRow,
    KeptRow, RawRecord,
};
pub use element::Element;
pub use parser::{parse_smiles, parse_smiles_with, ParseOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum; aromatic bonds count as 1 here and the
    /// extra aromatic electron is added per atom.
    pub(crate) fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogen count written inside a bracket atom; `None` for bare atoms.
    pub explicit_h: Option<u8>,
    /// Hydrogens implied by default valences (always 0 for bracket atoms).
    pub implicit_h: u8,
    pub in_ring: bool,
    pub degree: u8,
    /// Written as a bracket atom in the source.
    pub bracket: bool,
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn total_h(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValenceWarning {
    pub atom: usize,
    pub offset: usize,
    pub valence: u32,
}

/// A validated molecular graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MoleculeGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    warnings: Vec<ValenceWarning>,
}

impl MoleculeGraph {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Atoms whose bond-order sum exceeds every default valence.
    pub fn warnings(&self) -> &[ValenceWarning] {
        &self.warnings
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Neighbor lists in bond insertion order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for bond in &self.bonds {
            adj[bond.a].push(bond.b);
            adj[bond.b].push(bond.a);
        }
        adj
    }

    pub fn to_smiles(&self) -> String {
        writer::write_smiles(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ParseErrorKind {
    EmptyInput,
    UnknownAtomToken,
    UnmatchedParenthesis,
    UnmatchedRingClosure,
    DanglingBond,
    EmptyBranch,
    /// A ring closure that bonds an atom to itself, duplicates an existing
    /// bond, or carries two different bond symbols.
    InvalidRingBond,
    UnexpectedCharacter,
    /// Only raised with [`ParseOptions::strict_valence`].
    ValenceExceeded,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::EmptyInput => "empty_input",
            ParseErrorKind::UnknownAtomToken => "unknown_atom_token",
            ParseErrorKind::UnmatchedParenthesis => "unmatched_parenthesis",
            ParseErrorKind::UnmatchedRingClosure => "unmatched_ring_closure",
            ParseErrorKind::DanglingBond => "dangling_bond",
            ParseErrorKind::EmptyBranch => "empty_branch",
            ParseErrorKind::InvalidRingBond => "invalid_ring_bond",
            ParseErrorKind::UnexpectedCharacter => "unexpected_character",
            ParseErrorKind::ValenceExceeded => "valence_exceeded",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input string.
    pub offset: usize,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, offset: usize) -> Self {
        ParseError { kind, offset }
    }
}
