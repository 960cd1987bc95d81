//! Domain model for reaction networks and augmented vertically parametrized
//! systems, plus the two text input formats.
//!
//! Network format (line based, `#` comments):
//! ```text
//! species X1 X2 X3
//! rxn k1: X1 + 2 X2 -> X3
//! rxn k2: X3 -> 0
//! ```
//!
//! Matrix format: blocks `C r c`, `M r c`, `L r c` in any order, each followed
//! by whitespace-separated rational entries (`p`, `-p`, `p/q`); `L` may be
//! omitted when `n` equals the row count of `C`.

use std::collections::HashMap;

use thiserror::Error;

use crate::rational::{parse_rat, rat_int, LinAlgError, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown species '{0}'")]
    UnknownSpecies(String),
    #[error("duplicate rate label '{0}'")]
    DuplicateRateLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// A reaction: reactant and product coefficient vectors over the species
/// order, plus the rate label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub label: String,
    pub reactants: Vec<u64>,
    pub products: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    /// Stoichiometric matrix N = (products - reactants), species x reactions.
    pub fn stoichiometric_matrix(&self) -> RatMatrix {
        let n = self.species.len();
        let m = self.reactions.len();
        let mut out = RatMatrix::zeros(n, m);
        for (j, r) in self.reactions.iter().enumerate() {
            for i in 0..n {
                *out.at_mut(i, j) = rat_int(r.products[i] as i64 - r.reactants[i] as i64);
            }
        }
        out
    }

    /// Reactant matrix M, species x reactions.
    pub fn reactant_matrix(&self) -> RatMatrix {
        let n = self.species.len();
        let m = self.reactions.len();
        let mut out = RatMatrix::zeros(n, m);
        for (j, r) in self.reactions.iter().enumerate() {
            for i in 0..n {
                *out.at_mut(i, j) = rat_int(r.reactants[i] as i64);
            }
        }
        out
    }
}

/// The tuple (C, M, L) with the bookkeeping needed to report results in the
/// caller's original monomial order.
///
/// Invariants: `C` is principal with full row rank `sbar`; `M` has the same
/// column count as `C`; `L` has full row rank `n - sbar` where `n = rows(M)`.
/// `column_permutation[internal] = original` records the column reordering
/// applied to make `C` principal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedVerticalSystem {
    pub c: RatMatrix,
    pub m: RatMatrix,
    pub l: RatMatrix,
    pub column_permutation: Vec<usize>,
}

impl AugmentedVerticalSystem {
    pub fn sbar(&self) -> usize {
        self.c.rows()
    }

    pub fn mbar(&self) -> usize {
        self.c.cols()
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    /// Validates ranks, principality and dimensions; permutes columns of C
    /// and M if needed to make C principal.
    pub fn new(c: RatMatrix, m: RatMatrix, l: RatMatrix) -> Result<Self, ModelError> {
        if m.cols() != c.cols() {
            return Err(ModelError::DimensionMismatch(format!(
                "M has {} columns but C has {}",
                m.cols(),
                c.cols()
            )));
        }
        let n = m.rows();
        let sbar = c.rows();
        if sbar > n {
            return Err(ModelError::DimensionMismatch(format!(
                "C has {sbar} rows but M has only {n} rows"
            )));
        }
        if l.rows() != n - sbar || (l.rows() > 0 && l.cols() != n) {
            return Err(ModelError::DimensionMismatch(format!(
                "L must be {}x{n}, got {}x{}",
                n - sbar,
                l.rows(),
                l.cols()
            )));
        }
        if c.rank() < sbar {
            return Err(ModelError::LinAlg(LinAlgError::RankDeficient));
        }
        if l.rank() < l.rows() {
            return Err(ModelError::LinAlg(LinAlgError::RankDeficient));
        }
        let (c, perm) = c.make_principal()?;
        let m = m.select_columns(&perm);
        Ok(AugmentedVerticalSystem {
            c,
            m,
            l,
            column_permutation: perm,
        })
    }
}

struct LineParser<'a> {
    line: usize,
    text: &'a str,
}

impl<'a> LineParser<'a> {
    fn err(&self, col: usize, msg: impl Into<String>) -> ModelError {
        ModelError::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }
}

/// Parses the network text format.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ModelError> {
    let mut species: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut reactions: Vec<Reaction> = Vec::new();
    let mut labels: HashMap<String, ()> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let p = LineParser {
            line: lineno + 1,
            text: raw,
        };
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("species") {
            if !rest.starts_with(char::is_whitespace) {
                return Err(p.err(1, "expected 'species <name>...'"));
            }
            for name in rest.split_whitespace() {
                if index.contains_key(name) {
                    return Err(p.err(1, format!("species '{name}' declared twice")));
                }
                index.insert(name.to_string(), species.len());
                species.push(name.to_string());
            }
        } else if let Some(rest) = trimmed.strip_prefix("rxn") {
            let rest = rest.trim_start();
            let Some((label, body)) = rest.split_once(':') else {
                return Err(p.err(1, "expected 'rxn <label>: <side> -> <side>'"));
            };
            let label = label.trim().to_string();
            if label.is_empty() {
                return Err(p.err(1, "empty rate label"));
            }
            if labels.insert(label.clone(), ()).is_some() {
                return Err(ModelError::DuplicateRateLabel(label));
            }
            let Some((lhs, rhs)) = body.split_once("->") else {
                return Err(p.err(1, "missing '->'"));
            };
            let reactants = parse_side(&p, lhs, &index, species.len())?;
            let products = parse_side(&p, rhs, &index, species.len())?;
            reactions.push(Reaction {
                label,
                reactants,
                products,
            });
        } else {
            return Err(p.err(1, format!("unrecognized directive '{trimmed}'")));
        }
        let _ = p.text;
    }
    Ok(ReactionNetwork { species, reactions })
}

fn parse_side(
    p: &LineParser<'_>,
    side: &str,
    index: &HashMap<String, usize>,
    n: usize,
) -> Result<Vec<u64>, ModelError> {
    let mut coeffs = vec![0u64; n];
    let side = side.trim();
    if side == "0" {
        return Ok(coeffs);
    }
    if side.is_empty() {
        return Err(p.err(1, "empty reaction side (use '0' for the empty complex)"));
    }
    for term in side.split('+') {
        let term = term.trim();
        let mut parts = term.split_whitespace();
        let first = parts
            .next()
            .ok_or_else(|| p.err(1, "empty term in reaction side"))?;
        let (coef, name) = if let Ok(c) = first.parse::<u64>() {
            let name = parts
                .next()
                .ok_or_else(|| p.err(1, "coefficient without species name"))?;
            (c, name)
        } else {
            (1, first)
        };
        if parts.next().is_some() {
            return Err(p.err(1, format!("trailing tokens in term '{term}'")));
        }
        let &i = index
            .get(name)
            .ok_or_else(|| ModelError::UnknownSpecies(name.to_string()))?;
        coeffs[i] += coef;
    }
    Ok(coeffs)
}

/// Converts a network into the augmented vertically parametrized system of
/// its mass-action steady states: C spans the row space of N (nonzero rows
/// of its RREF), L spans the left kernel of N, M is the reactant matrix.
pub fn network_to_system(net: &ReactionNetwork) -> Result<AugmentedVerticalSystem, ModelError> {
    let n_mat = net.stoichiometric_matrix();
    let (r, pivots) = n_mat.rref();
    let rank = pivots.len();
    if rank == 0 {
        return Err(ModelError::DimensionMismatch(
            "stoichiometric matrix has rank 0".into(),
        ));
    }
    let c = RatMatrix::from_rows((0..rank).map(|i| r.row(i).to_vec()).collect());
    let l = n_mat.left_kernel();
    AugmentedVerticalSystem::new(c, net.reactant_matrix(), l)
}

/// Parses the matrix block format.
pub fn parse_system(text: &str) -> Result<AugmentedVerticalSystem, ModelError> {
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        };
        for tok in line.split_whitespace() {
            tokens.push((lineno + 1, tok));
        }
    }
    let mut blocks: HashMap<String, RatMatrix> = HashMap::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let (line, name) = tokens[pos];
        if !matches!(name, "C" | "M" | "L") {
            return Err(ModelError::Syntax {
                line,
                col: 1,
                msg: format!("expected block name C, M or L, got '{name}'"),
            });
        }
        if blocks.contains_key(name) {
            return Err(ModelError::Syntax {
                line,
                col: 1,
                msg: format!("block '{name}' given twice"),
            });
        }
        let dims: Vec<usize> = tokens
            .get(pos + 1..pos + 3)
            .map(|ts| ts.iter().filter_map(|(_, t)| t.parse().ok()).collect())
            .unwrap_or_default();
        if dims.len() != 2 {
            return Err(ModelError::Syntax {
                line,
                col: 1,
                msg: format!("block '{name}' needs row and column counts"),
            });
        }
        let (rows, cols) = (dims[0], dims[1]);
        let need = rows * cols;
        let mut entries = Vec::with_capacity(need);
        for k in 0..need {
            let Some(&(eline, tok)) = tokens.get(pos + 3 + k) else {
                return Err(ModelError::Syntax {
                    line,
                    col: 1,
                    msg: format!("block '{name}' ends early: expected {need} entries"),
                });
            };
            let Some(v) = parse_rat(tok) else {
                return Err(ModelError::Syntax {
                    line: eline,
                    col: 1,
                    msg: format!("invalid rational '{tok}'"),
                });
            };
            entries.push(v);
        }
        blocks.insert(
            name.to_string(),
            RatMatrix::from_rows(entries.chunks(cols.max(1)).map(|c| c.to_vec()).collect()),
        );
        pos += 3 + need;
    }
    let c = blocks
        .remove("C")
        .ok_or(ModelError::DimensionMismatch("missing block C".into()))?;
    let m = blocks
        .remove("M")
        .ok_or(ModelError::DimensionMismatch("missing block M".into()))?;
    let l = blocks
        .remove("L")
        .unwrap_or_else(|| RatMatrix::zeros(0, m.rows()));
    let l = if l.rows() == 0 {
        RatMatrix::zeros(0, m.rows())
    } else {
        l
    };
    AugmentedVerticalSystem::new(c, m, l)
}

/// Renders a system back into the matrix block format.
pub fn emit_matrices(sys: &AugmentedVerticalSystem) -> String {
    let mut out = String::new();
    let emit = |out: &mut String, name: &str, m: &RatMatrix| {
        out.push_str(&format!("{name} {} {}\n", m.rows(), m.cols()));
        for i in 0..m.rows() {
            let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    };
    emit(&mut out, "C", &sys.c);
    emit(&mut out, "M", &sys.m);
    if sys.l.rows() > 0 {
        emit(&mut out, "L", &sys.l);
    }
    out
}

/// True when x and y have equal kernels, tested by mutual containment of
/// kernel bases.
pub fn same_kernel(a: &RatMatrix, b: &RatMatrix) -> bool {
    let ka = a.kernel_basis();
    let kb = b.kernel_basis();
    a.mul(&kb).is_zero() && b.mul(&ka).is_zero() && ka.cols() == kb.cols()
}
