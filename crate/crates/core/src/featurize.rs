//! Fixed 22-column atom featurization and mean pooling to molecule vectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::smiles::{Element, MoleculeGraph};

pub const ATOM_FEATURES: usize = 22;

pub const FEATURE_NAMES: [&str; ATOM_FEATURES] = [
    "el_B",
    "el_C",
    "el_N",
    "el_O",
    "el_P",
    "el_S",
    "el_F",
    "el_Cl",
    "el_Br",
    "el_I",
    "el_other",
    "degree",
    "charge_m2",
    "charge_m1",
    "charge_0",
    "charge_p1",
    "charge_p2",
    "aromatic",
    "h_count",
    "in_ring",
    "mol_size",
    "heavy_neighbors",
];

const DEGREE_COL: usize = 11;
const CHARGE_COL: usize = 12;
const AROMATIC_COL: usize = 17;
const H_COL: usize = 18;
const RING_COL: usize = 19;
const SIZE_COL: usize = 20;
const HEAVY_COL: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowMeaning {
    Atom,
    Molecule,
}

/// Real feature matrix with a record of what its rows describe.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Matrix,
    row_meaning: RowMeaning,
}

impl FeatureMatrix {
    pub fn new(data: Matrix, row_meaning: RowMeaning) -> Self {
        debug_assert!(data.is_finite());
        FeatureMatrix { data, row_meaning }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn row_meaning(&self) -> RowMeaning {
        self.row_meaning
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }
}

fn element_slot(e: Element) -> usize {
    match e {
        Element::B => 0,
        Element::C => 1,
        Element::N => 2,
        Element::O => 3,
        Element::P => 4,
        Element::S => 5,
        Element::F => 6,
        Element::Cl => 7,
        Element::Br => 8,
        Element::I => 9,
        Element::H | Element::Other(_) => 10,
    }
}

/// One row per atom, [`ATOM_FEATURES`] columns, every entry in `[-1, 2]`.
pub fn atom_features(graph: &MoleculeGraph) -> Result<FeatureMatrix> {
    let atoms = graph.atoms();
    if atoms.is_empty() {
        return Err(Error::EmptyMolecule);
    }
    let neighbors = graph.neighbors();
    let size = (atoms.len() as f64 / 50.0).min(2.0);
    let mut m = Matrix::zeros(atoms.len(), ATOM_FEATURES);
    for (i, atom) in atoms.iter().enumerate() {
        let row = m.row_mut(i);
        row[element_slot(atom.element)] = 1.0;
        row[DEGREE_COL] = (f64::from(atom.degree) / 6.0).min(2.0);
        let charge = atom.formal_charge.clamp(-2, 2);
        row[CHARGE_COL + (charge + 2) as usize] = 1.0;
        row[AROMATIC_COL] = f64::from(u8::from(atom.aromatic));
        row[H_COL] = (f64::from(atom.total_h()) / 4.0).min(2.0);
        row[RING_COL] = f64::from(u8::from(atom.in_ring));
        row[SIZE_COL] = size;
        let heavy = neighbors[i]
            .iter()
            .filter(|&&j| atoms[j].element != Element::H)
            .count();
        row[HEAVY_COL] = (heavy as f64 / 6.0).min(2.0);
    }
    Ok(FeatureMatrix::new(m, RowMeaning::Atom))
}

/// Column-wise mean over atom rows.
pub fn pool_molecule(atoms: &FeatureMatrix) -> Result<FeatureMatrix> {
    if atoms.rows() == 0 {
        return Err(Error::EmptyMolecule);
    }
    Ok(FeatureMatrix::new(
        atoms.matrix().col_means(),
        RowMeaning::Molecule,
    ))
}

/// Atom features plus their pooled molecule row for one graph.
pub fn featurize(graph: &MoleculeGraph) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let atoms = atom_features(graph)?;
    let pooled = pool_molecule(&atoms)?;
    Ok((atoms, pooled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn feats(s: &str) -> FeatureMatrix {
        atom_features(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn single_carbon() {
        let f = feats("C");
        assert_eq!(f.rows(), 1);
        let row = f.matrix().row(0);
        let one_hot: Vec<_> = row[..11].to_vec();
        assert_eq!(one_hot.iter().sum::<f64>(), 1.0);
        assert_eq!(row[1], 1.0);
        assert_eq!(row[DEGREE_COL], 0.0);
        assert_eq!(row[AROMATIC_COL], 0.0);
        assert_eq!(row[CHARGE_COL + 2], 1.0);
        assert_eq!(row[H_COL], 1.0);
    }

    #[test]
    fn benzene_rows_are_identical() {
        let f = feats("c1ccccc1");
        assert_eq!(f.rows(), 6);
        for i in 0..6 {
            assert_eq!(f.matrix().row(i), f.matrix().row(0));
        }
        let row = f.matrix().row(0);
        assert_eq!(row[AROMATIC_COL], 1.0);
        assert_eq!(row[RING_COL], 1.0);
        assert_eq!(row[DEGREE_COL], 2.0 / 6.0);
        let pooled = pool_molecule(&f).unwrap();
        for (a, b) in pooled.matrix().row(0).iter().zip(row) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ethanol_oxygen_hydrogen_feature() {
        let f = feats("CCO");
        assert_eq!(f.matrix().get(2, H_COL), 0.25);
        let pooled = pool_molecule(&f).unwrap();
        for j in 0..ATOM_FEATURES {
            let mean = (0..3).map(|i| f.matrix().get(i, j)).sum::<f64>() / 3.0;
            assert!((pooled.matrix().get(0, j) - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_pool_equals_row() {
        let f = feats("[Na+]");
        let pooled = pool_molecule(&f).unwrap();
        assert_eq!(pooled.matrix().row(0), f.matrix().row(0));
        assert_eq!(pooled.row_meaning(), RowMeaning::Molecule);
        assert_eq!(f.matrix().get(0, 10), 1.0);
        assert_eq!(f.matrix().get(0, CHARGE_COL + 3), 1.0);
    }

    #[test]
    fn entries_stay_in_range_for_large_molecules() {
        let long = "C".repeat(150);
        let f = feats(&long);
        assert!(f.matrix().as_slice().iter().all(|&v| (-1.0..=2.0).contains(&v)));
        assert_eq!(f.matrix().get(0, SIZE_COL), 2.0);
        let f = feats("[Fe-4]");
        assert_eq!(f.matrix().get(0, CHARGE_COL), 1.0);
    }
}
