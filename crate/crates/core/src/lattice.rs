//! Rotated surface-code geometry: data qubits, stabilizers, logical chains.
//!
//! Data qubits sit on a `rows x cols` grid and are numbered row-major starting
//! at 1. Stabilizers live on the plaquette grid between data qubits:
//!
//! - bulk plaquettes `(i, j)` with `1 <= i <= rows-1`, `1 <= j <= cols-1` are
//!   weight-4 and checkerboard-alternate, X-type when `i + j` is even;
//! - weight-2 X-type half-plaquettes sit on the top (`i = 0`) and bottom
//!   (`i = rows`) edges, weight-2 Z-type half-plaquettes on the left (`j = 0`)
//!   and right (`j = cols`) edges, continuing the bulk checkerboard.
//!
//! Logical Z chains are rows (length `cols`), logical X chains are columns.
//! The emitted stabilizer order is the listing contract used everywhere else:
//! X-type in reading order of plaquette position, then Z-type in reading
//! order. For the 3x3 lattice this yields exactly
//! `X2X3, X1X2X4X5, X5X6X8X9, X7X8, Z1Z4, Z2Z3Z5Z6, Z4Z5Z7Z8, Z6Z9`.

use std::fmt;

use thiserror::Error;

/// Errors from lattice construction and chain-set validation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("invalid lattice spec: rows and cols must both be >= 3 (got {rows}x{cols})")]
    InvalidSpec { rows: usize, cols: usize },
    #[error("chain row {0} out of range")]
    RowOutOfRange(usize),
    #[error("duplicate chain row {0}")]
    DuplicateRow(usize),
    #[error("chains on adjacent rows {0} and {1}")]
    AdjacentRows(usize, usize),
    #[error("too many chains: {got} selected, at most {max} allowed")]
    TooManyChains { got: usize, max: usize },
}

/// Lattice dimensions. The square case `rows = cols = d` is the code distance d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    /// Square lattice of distance `d`.
    pub fn square(d: usize) -> Self {
        Self { rows: d, cols: d }
    }
}

/// Stabilizer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabKind {
    X,
    Z,
}

impl fmt::Display for StabKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabKind::X => write!(f, "X"),
            StabKind::Z => write!(f, "Z"),
        }
    }
}

/// One stabilizer generator. `id` is its 1-based ordinal in the listing
/// contract; `support` holds 1-based data-qubit indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub id: usize,
    pub kind: StabKind,
    pub support: Vec<usize>,
}

impl Stabilizer {
    pub fn weight(&self) -> usize {
        self.support.len()
    }
}

/// A logical Z chain: one lattice row, plus the ids of the Z stabilizers
/// whose support intersects it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalChain {
    /// 1-based row index.
    pub row: usize,
    /// 1-based data-qubit indices, left to right.
    pub qubits: Vec<usize>,
    /// Ids of Z stabilizers intersecting this row.
    pub adjacent_z_stabilizers: Vec<usize>,
}

/// A validated selection of injection rows: strictly increasing, pairwise
/// gaps >= 2, at most `ceil(rows/2)` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSet {
    rows: Vec<usize>,
}

impl ChainSet {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Immutable rotated surface-code lattice. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    stabilizers: Vec<Stabilizer>,
    num_x_stabilizers: usize,
}

impl Lattice {
    /// Build the lattice for `spec`. Fails if either dimension is below 3.
    pub fn build(spec: LatticeSpec) -> Result<Self, LatticeError> {
        if spec.rows < 3 || spec.cols < 3 {
            return Err(LatticeError::InvalidSpec {
                rows: spec.rows,
                cols: spec.cols,
            });
        }
        let (rows, cols) = (spec.rows, spec.cols);
        let q = |r: usize, c: usize| (r - 1) * cols + c;

        let mut x_stabs: Vec<Vec<usize>> = Vec::new();
        let mut z_stabs: Vec<Vec<usize>> = Vec::new();

        // Plaquette grid positions (i, j), i in 0..=rows, j in 0..=cols,
        // scanned in reading order. X-type where i + j is even.
        for i in 0..=rows {
            for j in 0..=cols {
                let interior_i = i >= 1 && i <= rows - 1;
                let interior_j = j >= 1 && j <= cols - 1;
                let is_x = (i + j) % 2 == 0;
                if interior_i && interior_j {
                    let support = vec![q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1)];
                    if is_x {
                        x_stabs.push(support);
                    } else {
                        z_stabs.push(support);
                    }
                } else if (i == 0 || i == rows) && interior_j && is_x {
                    // top/bottom boundary: X-type half-plaquettes only
                    let r = if i == 0 { 1 } else { rows };
                    x_stabs.push(vec![q(r, j), q(r, j + 1)]);
                } else if (j == 0 || j == cols) && interior_i && !is_x {
                    // left/right boundary: Z-type half-plaquettes only
                    let c = if j == 0 { 1 } else { cols };
                    z_stabs.push(vec![q(i, c), q(i + 1, c)]);
                }
            }
        }

        let num_x_stabilizers = x_stabs.len();
        let stabilizers = x_stabs
            .into_iter()
            .map(|s| (StabKind::X, s))
            .chain(z_stabs.into_iter().map(|s| (StabKind::Z, s)))
            .enumerate()
            .map(|(idx, (kind, mut support))| {
                support.sort_unstable();
                Stabilizer {
                    id: idx + 1,
                    kind,
                    support,
                }
            })
            .collect::<Vec<_>>();

        debug_assert_eq!(stabilizers.len(), rows * cols - 1);
        Ok(Self {
            spec,
            stabilizers,
            num_x_stabilizers,
        })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn num_data_qubits(&self) -> usize {
        self.spec.rows * self.spec.cols
    }

    pub fn num_stabilizers(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn num_x_stabilizers(&self) -> usize {
        self.num_x_stabilizers
    }

    /// Stabilizers in the listing contract order (all X, then all Z).
    pub fn stabilizers(&self) -> &[Stabilizer] {
        &self.stabilizers
    }

    /// Stabilizer by 1-based id.
    pub fn stabilizer(&self, id: usize) -> &Stabilizer {
        &self.stabilizers[id - 1]
    }

    /// 1-based data-qubit index at (row, col), both 1-based.
    pub fn qubit_index(&self, row: usize, col: usize) -> usize {
        (row - 1) * self.spec.cols + col
    }

    /// (row, col) of a 1-based data-qubit index.
    pub fn qubit_position(&self, qubit: usize) -> (usize, usize) {
        let r = (qubit - 1) / self.spec.cols + 1;
        let c = (qubit - 1) % self.spec.cols + 1;
        (r, c)
    }

    /// The largest row index touched by a stabilizer's support.
    pub fn stabilizer_max_row(&self, id: usize) -> usize {
        self.stabilizer(id)
            .support
            .iter()
            .map(|&q| self.qubit_position(q).0)
            .max()
            .expect("stabilizer support is nonempty")
    }

    /// One logical Z chain per row, with its adjacent Z stabilizers.
    pub fn z_chains(&self) -> Vec<LogicalChain> {
        (1..=self.spec.rows).map(|r| self.z_chain(r)).collect()
    }

    /// The logical Z chain on row `row` (1-based).
    pub fn z_chain(&self, row: usize) -> LogicalChain {
        assert!(row >= 1 && row <= self.spec.rows, "row {row} out of range");
        let qubits: Vec<usize> = (1..=self.spec.cols).map(|c| self.qubit_index(row, c)).collect();
        let adjacent_z_stabilizers = self
            .stabilizers
            .iter()
            .filter(|s| s.kind == StabKind::Z && s.support.iter().any(|q| qubits.contains(q)))
            .map(|s| s.id)
            .collect();
        LogicalChain {
            row,
            qubits,
            adjacent_z_stabilizers,
        }
    }

    /// Row products representing logical Z, one per row.
    pub fn z_logical_representatives(&self) -> Vec<Vec<usize>> {
        (1..=self.spec.rows)
            .map(|r| (1..=self.spec.cols).map(|c| self.qubit_index(r, c)).collect())
            .collect()
    }

    /// Column products representing logical X, one per column.
    pub fn x_logical_representatives(&self) -> Vec<Vec<usize>> {
        (1..=self.spec.cols)
            .map(|c| (1..=self.spec.rows).map(|r| self.qubit_index(r, c)).collect())
            .collect()
    }

    /// Maximum number of simultaneously injectable chains.
    pub fn max_chains(&self) -> usize {
        (self.spec.rows + 1) / 2
    }

    /// Validate an injection row selection: rows in range, no duplicates,
    /// no two adjacent rows, count within the chain budget.
    pub fn validate_chain_set(&self, rows: &[usize]) -> Result<ChainSet, LatticeError> {
        let mut sorted = rows.to_vec();
        sorted.sort_unstable();
        for &r in &sorted {
            if r < 1 || r > self.spec.rows {
                return Err(LatticeError::RowOutOfRange(r));
            }
        }
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::DuplicateRow(w[0]));
            }
            if w[1] - w[0] < 2 {
                return Err(LatticeError::AdjacentRows(w[0], w[1]));
            }
        }
        let max = self.max_chains();
        if sorted.len() > max {
            return Err(LatticeError::TooManyChains {
                got: sorted.len(),
                max,
            });
        }
        Ok(ChainSet { rows: sorted })
    }

    /// Plain-text description, one stabilizer per line: `id kind qubit-list`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.stabilizers {
            out.push_str(&format!("{} {}", s.id, s.kind));
            for q in &s.support {
                out.push_str(&format!(" {q}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d3_matches_reference_listing() {
        let lat = Lattice::build(LatticeSpec::square(3)).unwrap();
        assert_eq!(lat.num_data_qubits(), 9);
        assert_eq!(lat.num_stabilizers(), 8);
        let expected: Vec<(StabKind, Vec<usize>)> = vec![
            (StabKind::X, vec![2, 3]),
            (StabKind::X, vec![1, 2, 4, 5]),
            (StabKind::X, vec![5, 6, 8, 9]),
            (StabKind::X, vec![7, 8]),
            (StabKind::Z, vec![1, 4]),
            (StabKind::Z, vec![2, 3, 5, 6]),
            (StabKind::Z, vec![4, 5, 7, 8]),
            (StabKind::Z, vec![6, 9]),
        ];
        for (stab, (kind, support)) in lat.stabilizers().iter().zip(expected) {
            assert_eq!(stab.kind, kind);
            assert_eq!(stab.support, support);
        }
    }

    #[test]
    fn d3_text_export_is_stable() {
        let lat = Lattice::build(LatticeSpec::square(3)).unwrap();
        let expected = "\
1 X 2 3
2 X 1 2 4 5
3 X 5 6 8 9
4 X 7 8
5 Z 1 4
6 Z 2 3 5 6
7 Z 4 5 7 8
8 Z 6 9
";
        assert_eq!(lat.to_text(), expected);
    }

    #[test]
    fn d3_z_logical_representatives() {
        let lat = Lattice::build(LatticeSpec::square(3)).unwrap();
        assert_eq!(
            lat.z_logical_representatives(),
            vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]
        );
        assert_eq!(
            lat.x_logical_representatives(),
            vec![vec![1, 4, 7], vec![2, 5, 8], vec![3, 6, 9]]
        );
    }

    #[test]
    fn rejects_small_specs() {
        assert!(matches!(
            Lattice::build(LatticeSpec::new(2, 3)),
            Err(LatticeError::InvalidSpec { .. })
        ));
        assert!(matches!(
            Lattice::build(LatticeSpec::new(3, 2)),
            Err(LatticeError::InvalidSpec { .. })
        ));
    }

    #[test]
    fn counts_for_5x3() {
        let lat = Lattice::build(LatticeSpec::new(5, 3)).unwrap();
        assert_eq!(lat.num_data_qubits(), 15);
        assert_eq!(lat.num_stabilizers(), 14);
        let chains = lat.z_chains();
        assert_eq!(chains.len(), 5);
        assert!(chains.iter().all(|c| c.qubits.len() == 3));
    }

    #[test]
    fn all_stabilizer_pairs_commute() {
        // brute force over supports: opposite kinds must overlap evenly
        for (rows, cols) in [(3, 3), (5, 3), (3, 5), (5, 5), (4, 4), (7, 7)] {
            let lat = Lattice::build(LatticeSpec::new(rows, cols)).unwrap();
            let stabs = lat.stabilizers();
            for a in stabs {
                for b in stabs {
                    if a.kind != b.kind {
                        let overlap = a.support.iter().filter(|q| b.support.contains(q)).count();
                        assert_eq!(overlap % 2, 0, "{rows}x{cols}: {:?} vs {:?}", a, b);
                    }
                }
            }
            assert_eq!(lat.num_stabilizers(), lat.num_data_qubits() - 1);
        }
    }

    #[test]
    fn stabilizer_weights_are_2_or_4_and_weight2_on_boundary() {
        for (rows, cols) in [(3, 3), (5, 3), (5, 5)] {
            let lat = Lattice::build(LatticeSpec::new(rows, cols)).unwrap();
            for s in lat.stabilizers() {
                assert!(s.weight() == 2 || s.weight() == 4);
                if s.weight() == 2 {
                    let on_boundary = s.support.iter().all(|&q| {
                        let (r, c) = lat.qubit_position(q);
                        r == 1 || r == rows || c == 1 || c == cols
                    });
                    assert!(on_boundary, "weight-2 stabilizer off boundary: {s:?}");
                }
            }
        }
    }

    #[test]
    fn chains_anticommute_with_x_logicals_once_per_column() {
        for (rows, cols) in [(3, 3), (5, 3), (3, 5)] {
            let lat = Lattice::build(LatticeSpec::new(rows, cols)).unwrap();
            for chain in lat.z_chains() {
                for col in lat.x_logical_representatives() {
                    let shared = chain.qubits.iter().filter(|q| col.contains(q)).count();
                    assert_eq!(shared, 1);
                }
            }
        }
    }

    #[test]
    fn d3_chain_adjacency() {
        let lat = Lattice::build(LatticeSpec::square(3)).unwrap();
        // ids follow the listing contract: Z1Z4 = 5, Z2Z3Z5Z6 = 6, Z4Z5Z7Z8 = 7, Z6Z9 = 8
        assert_eq!(lat.z_chain(1).adjacent_z_stabilizers, vec![5, 6]);
        assert_eq!(lat.z_chain(2).adjacent_z_stabilizers, vec![5, 6, 7, 8]);
        assert_eq!(lat.z_chain(3).adjacent_z_stabilizers, vec![7, 8]);
    }

    #[test]
    fn chain_set_validation() {
        let lat = Lattice::build(LatticeSpec::square(3)).unwrap();
        let cs = lat.validate_chain_set(&[1, 3]).unwrap();
        assert_eq!(cs.rows(), &[1, 3]);
        assert_eq!(
            lat.validate_chain_set(&[1, 2]),
            Err(LatticeError::AdjacentRows(1, 2))
        );
        assert_eq!(
            lat.validate_chain_set(&[1, 1]),
            Err(LatticeError::DuplicateRow(1))
        );
        assert_eq!(
            lat.validate_chain_set(&[0]),
            Err(LatticeError::RowOutOfRange(0))
        );

        let lat5 = Lattice::build(LatticeSpec::square(5)).unwrap();
        let cs = lat5.validate_chain_set(&[1, 3, 5]).unwrap();
        assert_eq!(cs.len(), 3);
        assert_eq!(lat5.max_chains(), 3);
    }

    #[test]
    fn chain_set_validation_matches_exhaustive_rule() {
        // accept exactly subsets with pairwise gaps >= 2 and size <= ceil(rows/2)
        for rows in 3..=7 {
            let lat = Lattice::build(LatticeSpec::new(rows, 3)).unwrap();
            for mask in 1u32..(1 << rows) {
                let subset: Vec<usize> =
                    (1..=rows).filter(|r| mask & (1 << (r - 1)) != 0).collect();
                let gaps_ok = subset.windows(2).all(|w| w[1] - w[0] >= 2);
                let size_ok = subset.len() <= lat.max_chains();
                let accepted = lat.validate_chain_set(&subset).is_ok();
                assert_eq!(accepted, gaps_ok && size_ok, "rows={rows} subset={subset:?}");
            }
        }
    }
}
