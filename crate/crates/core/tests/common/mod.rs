#![allow(dead_code)]

use olfactor::smiles::ParseErrorKind;
use olfactor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn binary(rng: &mut impl Rng, rows: usize, cols: usize, p: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| f64::from(u8::from(rng.random_bool(p))))
}

/// O(n²) pair enumeration: (concordant + ties/2) / (pos · neg).
pub fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0u64;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (k, &sk) in scores.iter().enumerate() {
            if labels[k] {
                continue;
            }
            pairs += 1;
            if si > sk {
                wins += 1.0;
            } else if si == sk {
                wins += 0.5;
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

pub enum Expect {
    Ok { atoms: usize, bonds: usize },
    Err(ParseErrorKind, usize),
}

/// SMILES corpus: accepted molecules with atom/bond counts, and one or more
/// rejections per error class with the byte offset reported.
pub fn smiles_corpus() -> Vec<(&'static str, Expect)> {
    use Expect::{Err, Ok};
    use ParseErrorKind::*;
    vec![
        ("CCO", Ok { atoms: 3, bonds: 2 }),
        ("C1CC1", Ok { atoms: 3, bonds: 3 }),
        ("c1ccccc1", Ok { atoms: 6, bonds: 6 }),
        ("CC(=O)OC", Ok { atoms: 5, bonds: 4 }),
        ("C#N", Ok { atoms: 2, bonds: 1 }),
        ("[NH4+]", Ok { atoms: 1, bonds: 0 }),
        ("[Na+].[Cl-]", Ok { atoms: 2, bonds: 0 }),
        ("C%10CCC%10", Ok { atoms: 4, bonds: 4 }),
        ("F/C=C/F", Ok { atoms: 4, bonds: 3 }),
        ("C[C@@H](O)N", Ok { atoms: 4, bonds: 3 }),
        ("c1ccc2ccccc2c1", Ok { atoms: 10, bonds: 11 }),
        ("CC(C)(C)C", Ok { atoms: 5, bonds: 4 }),
        ("OC(=O)c1ccccc1", Ok { atoms: 9, bonds: 9 }),
        ("c1cc[nH]c1", Ok { atoms: 5, bonds: 5 }),
        ("CS(=O)(=O)C", Ok { atoms: 5, bonds: 4 }),
        ("[13CH3]O", Ok { atoms: 2, bonds: 1 }),
        ("C1CC1C1CC1", Ok { atoms: 6, bonds: 7 }),
        ("ClCBr", Ok { atoms: 3, bonds: 2 }),
        ("c1ccsc1", Ok { atoms: 5, bonds: 5 }),
        ("CC(C)=CCCC(C)=CC=O", Ok { atoms: 11, bonds: 10 }),
        ("", Err(EmptyInput, 0)),
        ("C1CC", Err(UnmatchedRingClosure, 1)),
        ("CC(C", Err(UnmatchedParenthesis, 2)),
        ("CC)C", Err(UnmatchedParenthesis, 2)),
        ("CCX", Err(UnknownAtomToken, 2)),
        ("C[Xx]", Err(UnknownAtomToken, 1)),
        ("CC=", Err(DanglingBond, 2)),
        ("C(=)C", Err(DanglingBond, 2)),
        ("c1ccccc1C2CC", Err(UnmatchedRingClosure, 9)),
        ("CC((C))", Err(UnexpectedCharacter, 3)),
    ]
}
