use std::collections::BTreeMap;

use super::{Atom, Bond, BondOrder, Element, MoleculeGraph, ParseError, ParseErrorKind, ValenceWarning};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject atoms whose bond-order sum exceeds every default valence
    /// instead of recording a warning.
    pub strict_valence: bool,
}

pub fn parse_smiles(s: &str) -> Result<MoleculeGraph, ParseError> {
    parse_smiles_with(s, ParseOptions::default())
}

pub fn parse_smiles_with(s: &str, options: ParseOptions) -> Result<MoleculeGraph, ParseError> {
    if s.trim().is_empty() {
        return Err(ParseError::new(ParseErrorKind::EmptyInput, 0));
    }
    let mut parser = Parser::new(s);
    parser.run()?;
    parser.finish(options)
}

struct RingOpening {
    atom: usize,
    order: Option<BondOrder>,
    offset: usize,
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending_bond: Option<(BondOrder, usize)>,
    /// (atom the branch hangs from, offset of '(')
    branches: Vec<(usize, usize)>,
    branch_just_opened: bool,
    rings: BTreeMap<u16, RingOpening>,
}

fn err(kind: ParseErrorKind, offset: usize) -> ParseError {
    ParseError::new(kind, offset)
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            atom_offsets: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            pending_bond: None,
            branches: Vec::new(),
            branch_just_opened: false,
            rings: BTreeMap::new(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    // a branch must start with an atom or bond, not another branch
                    if self.prev.is_none() || self.branch_just_opened {
                        return Err(err(ParseErrorKind::UnexpectedCharacter, at));
                    }
                    if let Some((_, off)) = self.pending_bond {
                        return Err(err(ParseErrorKind::DanglingBond, off));
                    }
                    self.branches.push((self.prev.unwrap(), at));
                    self.branch_just_opened = true;
                    self.pos += 1;
                }
                b')' => {
                    if let Some((_, off)) = self.pending_bond {
                        return Err(err(ParseErrorKind::DanglingBond, off));
                    }
                    if self.branch_just_opened {
                        return Err(err(ParseErrorKind::EmptyBranch, at));
                    }
                    let (anchor, _) = self
                        .branches
                        .pop()
                        .ok_or_else(|| err(ParseErrorKind::UnmatchedParenthesis, at))?;
                    self.prev = Some(anchor);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() {
                        return Err(err(ParseErrorKind::DanglingBond, at));
                    }
                    if self.pending_bond.is_some() {
                        return Err(err(ParseErrorKind::UnexpectedCharacter, at));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending_bond = Some((order, at));
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, off)) = self.pending_bond {
                        return Err(err(ParseErrorKind::DanglingBond, off));
                    }
                    if self.prev.is_none() {
                        return Err(err(ParseErrorKind::UnexpectedCharacter, at));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => self.bracket_atom()?,
                _ => self.bare_atom()?,
            }
        }
        if let Some((_, off)) = self.pending_bond {
            return Err(err(ParseErrorKind::DanglingBond, off));
        }
        if let Some(&(_, off)) = self.branches.first() {
            return Err(err(ParseErrorKind::UnmatchedParenthesis, off));
        }
        if let Some(off) = self.rings.values().map(|r| r.offset).min() {
            return Err(err(ParseErrorKind::UnmatchedRingClosure, off));
        }
        if self.prev.is_none() {
            // trailing '.'
            return Err(err(ParseErrorKind::UnexpectedCharacter, self.bytes.len() - 1));
        }
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let at = self.pos;
        let Some(current) = self.prev else {
            return Err(err(ParseErrorKind::UnexpectedCharacter, at));
        };
        let number = if self.bytes[at] == b'%' {
            let digits = self.bytes.get(at + 1..at + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    u16::from(d[0] - b'0') * 10 + u16::from(d[1] - b'0')
                }
                _ => return Err(err(ParseErrorKind::UnexpectedCharacter, at)),
            }
        } else {
            self.pos += 1;
            u16::from(self.bytes[at] - b'0')
        };
        let written = self.pending_bond.take().map(|(order, _)| order);
        match self.rings.remove(&number) {
            None => {
                self.rings.insert(
                    number,
                    RingOpening {
                        atom: current,
                        order: written,
                        offset: at,
                    },
                );
            }
            Some(open) => {
                let order = match (open.order, written) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(err(ParseErrorKind::InvalidRingBond, at));
                    }
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => self.default_order(open.atom, current),
                };
                if open.atom == current || self.has_bond(open.atom, current) {
                    return Err(err(ParseErrorKind::InvalidRingBond, at));
                }
                self.bonds.push(Bond {
                    a: open.atom,
                    b: current,
                    order,
                    in_ring: false,
                });
            }
        }
        Ok(())
    }

    fn has_bond(&self, a: usize, b: usize) -> bool {
        self.bonds
            .iter()
            .any(|bond| (bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn push_atom(&mut self, atom: Atom, offset: usize) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some((order, _)) => order,
                None => self.default_order(prev, idx),
            };
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
                in_ring: false,
            });
        }
        self.prev = Some(idx);
        self.branch_just_opened = false;
    }

    fn bare_atom(&mut self) -> Result<(), ParseError> {
        let at = self.pos;
        let next = self.bytes.get(at + 1).copied();
        let (element, aromatic, len) = match (self.bytes[at], next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            (c, _) if c.is_ascii_alphabetic() || c == b'*' => {
                return Err(err(ParseErrorKind::UnknownAtomToken, at));
            }
            _ => return Err(err(ParseErrorKind::UnexpectedCharacter, at)),
        };
        self.pos += len;
        self.push_atom(
            Atom {
                element,
                formal_charge: 0,
                aromatic,
                explicit_h: None,
                implicit_h: 0,
                in_ring: false,
                degree: 0,
                bracket: false,
                isotope: None,
            },
            at,
        );
        Ok(())
    }

    /// `[` isotope? symbol chirality? hcount? charge? class? `]`
    fn bracket_atom(&mut self) -> Result<(), ParseError> {
        let open = self.pos;
        let bad = || err(ParseErrorKind::UnknownAtomToken, open);
        let close = self.src[open..].find(']').map(|i| open + i).ok_or_else(bad)?;
        let body = &self.bytes[open + 1..close];
        let mut i = 0;

        let mut isotope = None;
        let start = i;
        while i < body.len() && body[i].is_ascii_digit() {
            i += 1;
        }
        if i > start {
            let text = std::str::from_utf8(&body[start..i]).map_err(|_| bad())?;
            isotope = Some(text.parse::<u16>().map_err(|_| bad())?);
        }

        let (element, aromatic) = {
            let rest = &body[i..];
            let first = *rest.first().ok_or_else(bad)?;
            if first.is_ascii_lowercase() {
                // aromatic: two-letter forms first
                let two = rest.get(..2).and_then(|t| std::str::from_utf8(t).ok());
                match two {
                    Some("se") => {
                        i += 2;
                        (Element::Other("Se"), true)
                    }
                    Some("as") => {
                        i += 2;
                        (Element::Other("As"), true)
                    }
                    _ => {
                        let sym = (first as char).to_ascii_uppercase().to_string();
                        let el = Element::from_symbol(&sym)
                            .filter(|e| e.can_be_aromatic())
                            .ok_or_else(bad)?;
                        i += 1;
                        (el, true)
                    }
                }
            } else if first.is_ascii_uppercase() {
                let two_letter = rest
                    .get(1)
                    .filter(|c| c.is_ascii_lowercase())
                    .and_then(|_| std::str::from_utf8(&rest[..2]).ok())
                    .and_then(Element::from_symbol);
                match two_letter {
                    Some(el) => {
                        i += 2;
                        (el, false)
                    }
                    None => {
                        let sym = (first as char).to_string();
                        let el = Element::from_symbol(&sym).ok_or_else(bad)?;
                        i += 1;
                        (el, false)
                    }
                }
            } else {
                return Err(bad());
            }
        };

        // chirality, discarded
        while i < body.len() && body[i] == b'@' {
            i += 1;
        }
        if i + 1 < body.len() {
            let tag = &body[i..i + 2];
            if matches!(tag, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") && body[i - 1] == b'@' {
                i += 2;
                while i < body.len() && body[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }

        let mut explicit_h = 0u8;
        if i < body.len() && body[i] == b'H' {
            i += 1;
            explicit_h = 1;
            if i < body.len() && body[i].is_ascii_digit() {
                explicit_h = body[i] - b'0';
                i += 1;
            }
        }

        let mut charge: i32 = 0;
        if i < body.len() && (body[i] == b'+' || body[i] == b'-') {
            let sign = if body[i] == b'+' { 1 } else { -1 };
            let symbol = body[i];
            i += 1;
            let digits_start = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            if i > digits_start {
                let text = std::str::from_utf8(&body[digits_start..i]).map_err(|_| bad())?;
                charge = sign * text.parse::<i32>().map_err(|_| bad())?;
            } else {
                let mut magnitude = 1;
                while i < body.len() && body[i] == symbol {
                    magnitude += 1;
                    i += 1;
                }
                charge = sign * magnitude;
            }
            if charge.abs() > 15 {
                return Err(bad());
            }
        }

        if i < body.len() && body[i] == b':' {
            i += 1;
            let start = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            if i == start {
                return Err(bad());
            }
        }

        if i != body.len() {
            return Err(bad());
        }

        self.pos = close + 1;
        self.push_atom(
            Atom {
                element,
                formal_charge: charge as i8,
                aromatic,
                explicit_h: Some(explicit_h),
                implicit_h: 0,
                in_ring: false,
                degree: 0,
                bracket: true,
                isotope,
            },
            open,
        );
        Ok(())
    }

    fn finish(mut self, options: ParseOptions) -> Result<MoleculeGraph, ParseError> {
        let n = self.atoms.len();
        let mut valence_sum = vec![0u32; n];
        let mut has_aromatic_bond = vec![false; n];
        let mut degree = vec![0u8; n];
        for bond in &self.bonds {
            for end in [bond.a, bond.b] {
                valence_sum[end] += bond.order.valence();
                degree[end] = degree[end].saturating_add(1);
                if bond.order == BondOrder::Aromatic {
                    has_aromatic_bond[end] = true;
                }
            }
        }

        let mut warnings = Vec::new();
        for (idx, atom) in self.atoms.iter_mut().enumerate() {
            atom.degree = degree[idx];
            if atom.bracket {
                continue;
            }
            let sum = valence_sum[idx] + u32::from(atom.aromatic && has_aromatic_bond[idx]);
            let mut allowed = atom.element.default_valences();
            if atom.aromatic {
                // aromatic atoms only use their lowest valence
                allowed = &allowed[..allowed.len().min(1)];
            }
            match allowed.iter().find(|&&v| v >= sum) {
                Some(&v) => atom.implicit_h = (v - sum) as u8,
                None => {
                    atom.implicit_h = 0;
                    // furan-type O/S/N donate a lone pair: one over, two ring bonds
                    let routine_aromatic =
                        atom.aromatic && sum == allowed.first().copied().unwrap_or(0) + 1 && degree[idx] == 2;
                    if !routine_aromatic {
                        let warning = ValenceWarning {
                            atom: idx,
                            offset: self.atom_offsets[idx],
                            valence: sum,
                        };
                        if options.strict_valence {
                            return Err(err(ParseErrorKind::ValenceExceeded, warning.offset));
                        }
                        warnings.push(warning);
                    }
                }
            }
        }

        mark_rings(&mut self.atoms, &mut self.bonds);

        Ok(MoleculeGraph {
            atoms: self.atoms,
            bonds: self.bonds,
            source: self.src.to_string(),
            warnings,
        })
    }
}

/// Flags every bond that is not a bridge, and the atoms it touches, as ring members.
fn mark_rings(atoms: &mut [Atom], bonds: &mut [Bond]) {
    let n = atoms.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, bond) in bonds.iter().enumerate() {
        adj[bond.a].push((bond.b, k));
        adj[bond.b].push((bond.a, k));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut time = 0;

    // iterative DFS: (vertex, bond used to reach it, next adjacency index)
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, parent_bond, ref mut next)) = stack.last_mut() {
            if let Some(&(w, k)) = adj[v].get(*next) {
                *next += 1;
                if Some(k) == parent_bond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, Some(k), 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let (Some(k), Some(&(u, _, _))) = (parent_bond, stack.last()) {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        is_bridge[k] = true;
                    }
                }
            }
        }
    }

    for (k, bond) in bonds.iter_mut().enumerate() {
        if !is_bridge[k] {
            bond.in_ring = true;
            atoms[bond.a].in_ring = true;
            atoms[bond.b].in_ring = true;
        }
    }
}
