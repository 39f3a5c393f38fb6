//! Spin permutations: combinatorial construction, matrix lift, Pauli form.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::statespace::{make_basis, BasisOrdering, SpinConfig, StateVector};

/// Tolerance used when verifying unitary / Hermitian flags.
pub const FLAG_TOLERANCE: f64 = 1e-12;

/// Largest chain for which dense operators are built.
pub const MAX_OPERATOR_SPINS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Permutation of spin sites, acting on configurations.
///
/// `sites[k]` is the (0-based) site whose spin ends up at site `k`.
/// `provenance` lists the transpositions in product order, so `[(1,2),(2,3)]`
/// is `P12 P23` and `P23` acts first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    n: usize,
    sites: Vec<usize>,
    provenance: Vec<(usize, usize)>,
}

impl Permutation {
    pub fn identity(n: usize) -> Result<Self> {
        check_spin_count(n)?;
        Ok(Permutation {
            n,
            sites: (0..n).collect(),
            provenance: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn provenance(&self) -> &[(usize, usize)] {
        &self.provenance
    }

    /// Permutes an arbitrary sequence the same way spins are permuted.
    pub fn apply_slice<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                found: items.len(),
            });
        }
        Ok(self.sites.iter().map(|&s| items[s].clone()).collect())
    }

    pub fn apply(&self, config: &SpinConfig) -> Result<SpinConfig> {
        SpinConfig::new(self.apply_slice(config.spins())?)
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().enumerate().all(|(k, s)| k == *s)
    }

    /// Image of every basis position: `map[c]` is the position of `p(config_c)`.
    pub fn index_map(&self, ordering: &BasisOrdering) -> Result<Vec<usize>> {
        if ordering.n() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                found: ordering.n(),
            });
        }
        ordering
            .configs()
            .map(|c| ordering.index_of(&self.apply(&c)?))
            .collect()
    }

    /// Cycle notation over 1-based ket labels, fixed points omitted.
    pub fn cycle_notation(&self, ordering: &BasisOrdering) -> Result<String> {
        let map = self.index_map(ordering)?;
        Ok(cycles_of(&map))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.provenance.is_empty() {
            return write!(f, "Id");
        }
        for (i, j) in &self.provenance {
            write!(f, "P{i}{j}")?;
        }
        Ok(())
    }
}

fn cycles_of(map: &[usize]) -> String {
    let mut seen = vec![false; map.len()];
    let mut out = String::new();
    for start in 0..map.len() {
        if seen[start] || map[start] == start {
            seen[start] = true;
            continue;
        }
        let mut cycle = Vec::new();
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            cycle.push((k + 1).to_string());
            k = map[k];
        }
        out.push('(');
        out.push_str(&cycle.join(" "));
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

fn check_spin_count(n: usize) -> Result<()> {
    if n == 0 || n > crate::statespace::MAX_SPINS {
        return Err(Error::Dimension(format!("unsupported spin count {n}")));
    }
    Ok(())
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    check_spin_count(n)?;
    if i == 0 || i >= j || j > n {
        return Err(Error::Index { i, j, n });
    }
    Ok(())
}

/// `P_ij`: exchanges the spins at 1-based sites `i < j`.
pub fn transposition(i: usize, j: usize, n: usize) -> Result<Permutation> {
    check_pair(i, j, n)?;
    let mut sites: Vec<usize> = (0..n).collect();
    sites.swap(i - 1, j - 1);
    Ok(Permutation {
        n,
        sites,
        provenance: vec![(i, j)],
    })
}

/// Operator product `outer · inner`: `inner` acts first.
pub fn compose(outer: &Permutation, inner: &Permutation) -> Result<Permutation> {
    if outer.n != inner.n {
        return Err(Error::Shape {
            expected: outer.n,
            found: inner.n,
        });
    }
    // (outer ∘ inner)(c)[k] = inner(c)[outer.sites[k]] = c[inner.sites[outer.sites[k]]]
    let sites = outer.sites.iter().map(|&s| inner.sites[s]).collect();
    let provenance = outer
        .provenance
        .iter()
        .chain(inner.provenance.iter())
        .copied()
        .collect();
    Ok(Permutation {
        n: outer.n,
        sites,
        provenance,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OperatorFlags {
    pub unitary: bool,
    pub hermitian: bool,
    pub permutation: bool,
}

/// Dense complex square matrix with numerically verified property flags.
///
/// Permutation matrices built from index maps keep the map, so products and
/// powers of them stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    flags: OperatorFlags,
    index_map: Option<Vec<usize>>,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Shape {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let index_map = permutation_map_of(&entries);
        let flags = verify_flags(&entries, index_map.is_some());
        Ok(OperatorMatrix {
            entries,
            flags,
            index_map,
        })
    }

    /// Permutation matrix with a 1 at `(map[c], c)` for every column `c`.
    pub fn from_index_map(map: Vec<usize>) -> Result<Self> {
        let dim = map.len();
        let mut hit = vec![false; dim];
        for &r in &map {
            if r >= dim || std::mem::replace(&mut hit[r], true) {
                return Err(Error::Contract("index map is not a bijection".into()));
            }
        }
        let mut entries = DMatrix::zeros(dim, dim);
        for (c, &r) in map.iter().enumerate() {
            entries[(r, c)] = ONE;
        }
        let involution = map.iter().enumerate().all(|(c, &r)| map[r] == c);
        Ok(OperatorMatrix {
            entries,
            flags: OperatorFlags {
                unitary: true,
                hermitian: involution,
                permutation: true,
            },
            index_map: Some(map),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_index_map((0..dim).collect()).expect("identity map is a bijection")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn flags(&self) -> OperatorFlags {
        self.flags
    }

    pub fn is_unitary(&self) -> bool {
        self.flags.unitary
    }

    pub fn is_hermitian(&self) -> bool {
        self.flags.hermitian
    }

    pub fn is_permutation(&self) -> bool {
        self.flags.permutation
    }

    pub fn index_map(&self) -> Option<&[usize]> {
        self.index_map.as_deref()
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        match &self.index_map {
            Some(map) => {
                let mut inverse = vec![0; map.len()];
                for (c, &r) in map.iter().enumerate() {
                    inverse[r] = c;
                }
                Self::from_index_map(inverse).expect("inverse of a bijection")
            }
            None => Self::new(self.entries.adjoint()).expect("square"),
        }
    }

    pub fn mul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_dim(rhs)?;
        match (&self.index_map, &rhs.index_map) {
            (Some(a), Some(b)) => Self::from_index_map(b.iter().map(|&k| a[k]).collect()),
            _ => Self::new(&self.entries * &rhs.entries),
        }
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_dim(rhs)?;
        Self::new(&self.entries + &rhs.entries)
    }

    pub fn sub(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_dim(rhs)?;
        Self::new(&self.entries - &rhs.entries)
    }

    pub fn scale(&self, factor: Complex64) -> OperatorMatrix {
        Self::new(&self.entries * factor).expect("square")
    }

    pub fn pow(&self, k: u32) -> OperatorMatrix {
        let mut acc = Self::identity(self.dim());
        for _ in 0..k {
            acc = acc.mul(self).expect("same dimension");
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.entries)
    }

    /// ‖self − other‖_F.
    pub fn distance(&self, other: &OperatorMatrix) -> Result<f64> {
        self.check_dim(other)?;
        Ok(frobenius(&(&self.entries - &other.entries)))
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> OperatorMatrix {
        Self::new((&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0))
            .expect("square")
    }

    /// Plain-text grid, one row per line, `re+imi` entries with zeros as `0`.
    pub fn to_grid_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .entries
            .row_iter()
            .map(|row| row.iter().map(format_entry).collect())
            .collect();
        let width = cells.iter().flatten().map(|c| c.len()).max().unwrap_or(1);
        cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| format!("{c:>width$}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn check_dim(&self, other: &OperatorMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .entries
            .row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let mut s = serializer.serialize_struct("OperatorMatrix", 3)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("flags", &self.flags)?;
        s.serialize_field("entries", &rows)?;
        s.end()
    }
}

fn format_entry(z: &Complex64) -> String {
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    match (re == 0.0, im == 0.0) {
        (true, true) => "0".into(),
        (false, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        (false, false) => format!("{re}{im:+}i"),
    }
}

pub(crate) fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn permutation_map_of(m: &DMatrix<Complex64>) -> Option<Vec<usize>> {
    let dim = m.nrows();
    let mut map = vec![usize::MAX; dim];
    let mut row_hit = vec![false; dim];
    for c in 0..dim {
        for r in 0..dim {
            let z = m[(r, c)];
            if z == ONE {
                if map[c] != usize::MAX || row_hit[r] {
                    return None;
                }
                map[c] = r;
                row_hit[r] = true;
            } else if z != ZERO {
                return None;
            }
        }
        if map[c] == usize::MAX {
            return None;
        }
    }
    Some(map)
}

fn verify_flags(m: &DMatrix<Complex64>, permutation: bool) -> OperatorFlags {
    let dim = m.nrows();
    let gram = m.adjoint() * m;
    let unitary = frobenius(&(gram - DMatrix::<Complex64>::identity(dim, dim))) <= FLAG_TOLERANCE;
    let hermitian = frobenius(&(m - m.adjoint())) <= FLAG_TOLERANCE;
    OperatorFlags {
        unitary,
        hermitian,
        permutation,
    }
}

/// Matrix of `p` in `ordering`: entry `(index_of(p(c)), index_of(c)) = 1`.
pub fn to_matrix(p: &Permutation, ordering: &BasisOrdering) -> Result<OperatorMatrix> {
    if p.n() > MAX_OPERATOR_SPINS {
        return Err(Error::Dimension(format!(
            "dense operators are limited to {MAX_OPERATOR_SPINS} spins"
        )));
    }
    OperatorMatrix::from_index_map(p.index_map(ordering)?)
}

/// Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli_matrices() -> [DMatrix<Complex64>; 3] {
    [
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Kronecker product over `n` sites with `factors` placed at 1-based sites
/// and identities elsewhere. Spin 1 is the leftmost factor; |↑⟩ = (1,0)ᵗ.
/// The result is indexed by bit pattern (down = 1, spin 1 most significant).
fn embed(factors: &[(usize, &DMatrix<Complex64>)], n: usize) -> DMatrix<Complex64> {
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    (1..=n).fold(DMatrix::from_element(1, 1, ONE), |acc, site| {
        let factor = factors
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, m)| *m)
            .unwrap_or(&id2);
        acc.kronecker(factor)
    })
}

/// Re-expresses a product-basis matrix in `ordering`.
fn to_ordering(product: &DMatrix<Complex64>, ordering: &BasisOrdering) -> DMatrix<Complex64> {
    let dim = ordering.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(
                ordering.rank_of_bits(r as u32),
                ordering.rank_of_bits(c as u32),
            )] = product[(r, c)];
        }
    }
    out
}

/// σ_i · σ_j = Σ_a σ_a^(i) σ_a^(j), in the product basis.
fn pauli_dot(i: usize, j: usize, n: usize) -> DMatrix<Complex64> {
    pauli_matrices()
        .iter()
        .map(|s| embed(&[(i, s), (j, s)], n))
        .fold(DMatrix::zeros(1 << n, 1 << n), |acc, m| acc + m)
}

/// σ_1 · (σ_2 × σ_3) = Σ ε_abc σ_a^(1) σ_b^(2) σ_c^(3), in the product basis.
fn pauli_triple() -> DMatrix<Complex64> {
    let s = pauli_matrices();
    let mut acc = DMatrix::zeros(8, 8);
    for (a, b, c, sign) in [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
        (1, 0, 2, -1.0),
    ] {
        acc += embed(&[(1, &s[a]), (2, &s[b]), (3, &s[c])], 3) * Complex64::new(sign, 0.0);
    }
    acc
}

fn check_pauli_n(n: usize) -> Result<()> {
    if n > MAX_OPERATOR_SPINS {
        return Err(Error::Dimension(format!(
            "dense operators are limited to {MAX_OPERATOR_SPINS} spins"
        )));
    }
    Ok(())
}

/// `P_ij = ½(σ_i·σ_j + Id)` in the canonical ordering for `n` spins.
pub fn pauli_transposition(i: usize, j: usize, n: usize) -> Result<OperatorMatrix> {
    check_pair(i, j, n)?;
    check_pauli_n(n)?;
    let ordering = make_basis(n)?;
    let dim = 1 << n;
    let product = (pauli_dot(i, j, n) + DMatrix::identity(dim, dim)) * Complex64::new(0.5, 0.0);
    OperatorMatrix::new(to_ordering(&product, &ordering))
}

/// `¼(σ_1·σ_2 + σ_1·σ_3 + σ_2·σ_3 + Id)` for three spins, as written in the
/// literature for the cycle `P12 P23`.
///
/// This four-term sum is Hermitian and equals only the Hermitian part
/// `(Û + Û†)/2` of the cycle. [`pauli_cycle_expanded`] carries the missing
/// chiral term.
pub fn pauli_cycle() -> Result<OperatorMatrix> {
    let ordering = make_basis(3)?;
    let sum =
        pauli_dot(1, 2, 3) + pauli_dot(1, 3, 3) + pauli_dot(2, 3, 3) + DMatrix::identity(8, 8);
    OperatorMatrix::new(to_ordering(&(sum * Complex64::new(0.25, 0.0)), &ordering))
}

/// `P12 P23` expanded from the product of the two transposition forms:
/// `¼(Id + σ_1·σ_2 + σ_1·σ_3 + σ_2·σ_3 − i σ_1·(σ_2 × σ_3))`.
pub fn pauli_cycle_expanded() -> Result<OperatorMatrix> {
    let ordering = make_basis(3)?;
    let sum =
        pauli_dot(1, 2, 3) + pauli_dot(1, 3, 3) + pauli_dot(2, 3, 3) + DMatrix::identity(8, 8)
            - pauli_triple() * I;
    OperatorMatrix::new(to_ordering(&(sum * Complex64::new(0.25, 0.0)), &ordering))
}

/// `m · v`.
pub fn apply(m: &OperatorMatrix, v: &StateVector) -> Result<StateVector> {
    if m.dim() != v.dim() {
        return Err(Error::Shape {
            expected: m.dim(),
            found: v.dim(),
        });
    }
    Ok(StateVector::from_dvector(
        v.n(),
        m.entries() * v.amplitudes(),
    ))
}

/// `[a, b] = ab − ba`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// The three-spin evolution operator `Û = P12 P23` in the canonical ordering.
pub fn chain_cycle() -> OperatorMatrix {
    let p = compose(
        &transposition(1, 2, 3).expect("valid"),
        &transposition(2, 3, 3).expect("valid"),
    )
    .expect("same n");
    to_matrix(&p, &make_basis(3).expect("valid")).expect("valid")
}

/// Product of transpositions given in operator order, e.g. `[(1,3),(2,3)]`
/// for `P13 P23`.
pub fn transposition_product(pairs: &[(usize, usize)], n: usize) -> Result<Permutation> {
    pairs
        .iter()
        .try_fold(Permutation::identity(n)?, |acc, &(i, j)| {
            compose(&acc, &transposition(i, j, n)?)
        })
}
