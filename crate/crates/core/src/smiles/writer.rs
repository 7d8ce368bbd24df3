use std::fmt::Write;

use super::{Atom, BondOrder, MoleculeGraph};

/// Writes a SMILES string for `graph` by depth-first traversal. Non-tree
/// bonds become ring closures. Not canonical: output follows atom order.
pub(crate) fn write_smiles(graph: &MoleculeGraph) -> String {
    let n = graph.atom_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, bond) in graph.bonds().iter().enumerate() {
        adj[bond.a].push((bond.b, k));
        adj[bond.b].push((bond.a, k));
    }

    // First pass: DFS tree (children in order) and ring bonds.
    let mut visited = vec![false; n];
    let mut tree_bond = vec![false; graph.bond_count()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visit(root, &adj, &mut visited, &mut tree_bond, &mut children);
    }

    // Ring bonds open at whichever endpoint is written first.
    let mut order = Vec::with_capacity(n);
    for &root in &roots {
        preorder(root, &children, &mut order);
    }
    let mut position = vec![0usize; n];
    for (p, &atom) in order.iter().enumerate() {
        position[atom] = p;
    }
    let mut ring_bonds_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, bond) in graph.bonds().iter().enumerate() {
        if !tree_bond[k] {
            ring_bonds_at[bond.a].push(k);
            ring_bonds_at[bond.b].push(k);
        }
    }
    for list in &mut ring_bonds_at {
        list.sort_unstable();
    }

    let mut out = String::new();
    let mut digit_of_bond = vec![None; graph.bond_count()];
    let mut free_digits: Vec<bool> = vec![true; 100];
    for (r, &root) in roots.iter().enumerate() {
        if r > 0 {
            out.push('.');
        }
        let mut writer = Writer {
            graph,
            children: &children,
            ring_bonds_at: &ring_bonds_at,
            position: &position,
            digit_of_bond: &mut digit_of_bond,
            free_digits: &mut free_digits,
            out: &mut out,
        };
        writer.write(root);
    }
    out
}

fn visit(
    root: usize,
    adj: &[Vec<(usize, usize)>],
    visited: &mut [bool],
    tree_bond: &mut [bool],
    children: &mut [Vec<(usize, usize)>],
) {
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if let Some(&(w, k)) = adj[v].get(*next) {
            *next += 1;
            if !visited[w] {
                visited[w] = true;
                tree_bond[k] = true;
                children[v].push((w, k));
                stack.push((w, 0));
            }
        } else {
            stack.pop();
        }
    }
}

fn preorder(root: usize, children: &[Vec<(usize, usize)>], order: &mut Vec<usize>) {
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(c, _) in children[v].iter().rev() {
            stack.push(c);
        }
    }
}

struct Writer<'a> {
    graph: &'a MoleculeGraph,
    children: &'a [Vec<(usize, usize)>],
    ring_bonds_at: &'a [Vec<usize>],
    position: &'a [usize],
    digit_of_bond: &'a mut [Option<usize>],
    free_digits: &'a mut [bool],
    out: &'a mut String,
}

impl Writer<'_> {
    fn write(&mut self, atom: usize) {
        self.atom_token(atom);
        for &k in &self.ring_bonds_at[atom] {
            let bond = &self.graph.bonds()[k];
            let other = if bond.a == atom { bond.b } else { bond.a };
            let digit = match self.digit_of_bond[k] {
                Some(d) => {
                    self.free_digits[d] = true;
                    d
                }
                None => {
                    let d = self
                        .free_digits
                        .iter()
                        .skip(1)
                        .position(|&f| f)
                        .map(|p| p + 1)
                        .expect("more than 99 open rings");
                    self.free_digits[d] = false;
                    self.digit_of_bond[k] = Some(d);
                    d
                }
            };
            // bond symbol goes on the opening side only
            if self.position[atom] < self.position[other] {
                self.bond_symbol(atom, other, bond.order);
            }
            if digit < 10 {
                write!(self.out, "{digit}").unwrap();
            } else {
                write!(self.out, "%{digit:02}").unwrap();
            }
        }
        let kids = &self.children[atom];
        for (i, &(child, k)) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                self.out.push('(');
            }
            self.bond_symbol(atom, child, self.graph.bonds()[k].order);
            self.write(child);
            if !last {
                self.out.push(')');
            }
        }
    }

    fn bond_symbol(&mut self, a: usize, b: usize, order: BondOrder) {
        let atoms = self.graph.atoms();
        let both_aromatic = atoms[a].aromatic && atoms[b].aromatic;
        let symbol = match (order, both_aromatic) {
            (BondOrder::Single, false) | (BondOrder::Aromatic, true) => None,
            (BondOrder::Single, true) => Some('-'),
            (BondOrder::Double, _) => Some('='),
            (BondOrder::Triple, _) => Some('#'),
            (BondOrder::Aromatic, false) => Some(':'),
        };
        if let Some(s) = symbol {
            self.out.push(s);
        }
    }

    fn atom_token(&mut self, idx: usize) {
        let atom: &Atom = &self.graph.atoms()[idx];
        let symbol = atom.element.symbol();
        let symbol = if atom.aromatic {
            symbol.to_ascii_lowercase()
        } else {
            symbol.to_string()
        };
        if !atom.bracket {
            self.out.push_str(&symbol);
            return;
        }
        self.out.push('[');
        if let Some(iso) = atom.isotope {
            write!(self.out, "{iso}").unwrap();
        }
        self.out.push_str(&symbol);
        match atom.explicit_h.unwrap_or(0) {
            0 => {}
            1 => self.out.push('H'),
            h => write!(self.out, "H{h}").unwrap(),
        }
        match atom.formal_charge {
            0 => {}
            1 => self.out.push('+'),
            -1 => self.out.push('-'),
            c if c > 0 => write!(self.out, "+{c}").unwrap(),
            c => write!(self.out, "-{}", -c).unwrap(),
        }
        self.out.push(']');
    }
}

#[cfg(test)]
mod tests {
    use crate::smiles::parse_smiles;

    #[test]
    fn simple_molecules_round_trip() {
        for s in [
            "CCO",
            "C1CC1",
            "c1ccccc1",
            "CC(=O)OC",
            "[NH4+]",
            "C#N",
            "[Na+].[Cl-]",
        ] {
            assert_eq!(parse_smiles(s).unwrap().to_smiles(), s);
        }
    }

    #[test]
    fn fused_rings_reparse_with_same_counts() {
        for s in ["c1ccc2ccccc2c1", "C12CC1CC2", "CC1=CC(=O)C2(C)CCC1C2"] {
            let g = parse_smiles(s).unwrap();
            let written = g.to_smiles();
            let h = parse_smiles(&written).unwrap();
            assert_eq!(g.atom_count(), h.atom_count(), "{s} -> {written}");
            assert_eq!(g.bond_count(), h.bond_count(), "{s} -> {written}");
            assert_eq!(h.to_smiles(), written);
        }
    }
}
