//! Spin configurations, the ontological basis ordering and state vectors.
//!
//! A chain of `n` Ising spins has `2^n` ontological states. Internally a
//! configuration is packed into a bit pattern (bit set = spin down, spin 1 in
//! the most significant position), and a [`BasisOrdering`] maps patterns to
//! basis positions. Positions are 0-based in the API; the 1-based ket labels
//! `|1⟩ … |2^n⟩` are available through [`BasisOrdering::label_of`] and
//! [`BasisOrdering::config_of_label`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported chain length.
pub const MAX_SPINS: usize = 20;

/// Default tolerance for "normalized".
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// Eigenvalue of σ_z: +1 for up, −1 for down.
    pub fn value(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    fn symbol(self) -> char {
        match self {
            Spin::Up => 'u',
            Spin::Down => 'd',
        }
    }
}

/// Ordered spins of a chain; position 1 is the leftmost spin.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<Spin>);

impl SpinConfig {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if spins.is_empty() || spins.len() > MAX_SPINS {
            return Err(Error::Dimension(format!(
                "spin chains must have between 1 and {MAX_SPINS} spins, got {}",
                spins.len()
            )));
        }
        Ok(SpinConfig(spins))
    }

    /// Unpacks a bit pattern (bit set = down, spin 1 most significant).
    pub fn from_bits(bits: u32, n: usize) -> Self {
        let spins = (0..n)
            .map(|k| {
                if bits >> (n - 1 - k) & 1 == 1 {
                    Spin::Down
                } else {
                    Spin::Up
                }
            })
            .collect();
        SpinConfig(spins)
    }

    pub fn to_bits(&self) -> u32 {
        self.0
            .iter()
            .fold(0u32, |acc, s| (acc << 1) | u32::from(*s == Spin::Down))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    pub fn up_count(&self) -> usize {
        self.0.iter().filter(|s| **s == Spin::Up).count()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> SpinConfig {
        SpinConfig(self.0.iter().map(|s| s.flip()).collect())
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .enumerate()
            .map(|(position, c)| match c {
                'u' | 'U' => Ok(Spin::Up),
                'd' | 'D' => Ok(Spin::Down),
                other => Err(Error::Parse {
                    position,
                    message: format!("expected 'u' or 'd', found {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        SpinConfig::new(spins)
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bijection between spin configurations and basis positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisOrdering {
    n: usize,
    /// position -> bit pattern
    order: Vec<u32>,
    /// bit pattern -> position
    rank: Vec<u32>,
}

/// Builds the ontological basis ordering for `n` spins.
///
/// For three spins this is the order `uuu, uud, udu, duu, ddu, dud, udd, ddd`,
/// in which every spin-count sector is a contiguous block and the two-down
/// sector is the spin flip of the two-up sector. Every other `n` sorts by the
/// number of down spins, then by the binary value of the pattern (down = 1,
/// spin 1 most significant); for `n = 2` this gives `uu, ud, du, dd`.
pub fn make_basis(n: usize) -> Result<BasisOrdering> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::Dimension(format!(
            "spin count must be in 1..={MAX_SPINS}, got {n}"
        )));
    }
    let order: Vec<u32> = if n == 3 {
        vec![0b000, 0b001, 0b010, 0b100, 0b110, 0b101, 0b011, 0b111]
    } else {
        let mut patterns: Vec<u32> = (0..1u32 << n).collect();
        patterns.sort_by_key(|p| (p.count_ones(), *p));
        patterns
    };
    let mut rank = vec![0u32; order.len()];
    for (position, pattern) in order.iter().enumerate() {
        rank[*pattern as usize] = position as u32;
    }
    Ok(BasisOrdering { n, order, rank })
}

impl BasisOrdering {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// 0-based basis position of `config`.
    pub fn index_of(&self, config: &SpinConfig) -> Result<usize> {
        self.check_len(config)?;
        Ok(self.rank[config.to_bits() as usize] as usize)
    }

    /// Configuration at 0-based position `index`.
    pub fn config_of(&self, index: usize) -> Result<SpinConfig> {
        let pattern = self.order.get(index).ok_or_else(|| {
            Error::Dimension(format!(
                "basis index {index} out of range 0..{}",
                self.dim()
            ))
        })?;
        Ok(SpinConfig::from_bits(*pattern, self.n))
    }

    /// 1-based ket label `k` of `|k⟩`.
    pub fn label_of(&self, config: &SpinConfig) -> Result<usize> {
        self.index_of(config).map(|i| i + 1)
    }

    pub fn config_of_label(&self, label: usize) -> Result<SpinConfig> {
        if label == 0 {
            return Err(Error::Dimension("ket labels start at 1".into()));
        }
        self.config_of(label - 1)
    }

    pub fn configs(&self) -> impl Iterator<Item = SpinConfig> + '_ {
        self.order.iter().map(|p| SpinConfig::from_bits(*p, self.n))
    }

    /// Position of a raw bit pattern.
    pub(crate) fn rank_of_bits(&self, bits: u32) -> usize {
        self.rank[bits as usize] as usize
    }

    /// Basis positions grouped by number of up spins, in the order in which
    /// the sectors first appear.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let mut sectors: Vec<(u32, Vec<usize>)> = Vec::new();
        for (position, pattern) in self.order.iter().enumerate() {
            let downs = pattern.count_ones();
            match sectors.iter_mut().find(|(d, _)| *d == downs) {
                Some((_, members)) => members.push(position),
                None => sectors.push((downs, vec![position])),
            }
        }
        sectors.into_iter().map(|(_, members)| members).collect()
    }

    fn check_len(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                found: config.len(),
            });
        }
        Ok(())
    }
}

/// Complex amplitudes over the `2^n` ontological basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > MAX_SPINS {
            return Err(Error::Dimension(format!(
                "spin count must be in 1..={MAX_SPINS}, got {n}"
            )));
        }
        if amplitudes.len() != 1 << n {
            return Err(Error::Shape {
                expected: 1 << n,
                found: amplitudes.len(),
            });
        }
        Ok(StateVector {
            n,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    pub(crate) fn from_dvector(n: usize, amplitudes: DVector<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n);
        StateVector { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// Σ|λ_A|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Whether Σ|λ_A|² = 1 within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// One-hot embedding of an ontological state.
pub fn basis_state(config: &SpinConfig, ordering: &BasisOrdering) -> Result<StateVector> {
    let index = ordering.index_of(config)?;
    let mut amplitudes = DVector::zeros(ordering.dim());
    amplitudes[index] = Complex64::new(1.0, 0.0);
    Ok(StateVector::from_dvector(ordering.n(), amplitudes))
}

/// ⟨a|b⟩, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(b.amplitudes.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

#[derive(Serialize, Deserialize)]
struct StateVectorJson {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateVectorJson {
            n: self.n,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = StateVectorJson::deserialize(deserializer)?;
        let amplitudes = raw
            .amplitudes
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        StateVector::new(raw.n, amplitudes).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(s: &str) -> SpinConfig {
        s.parse().unwrap()
    }

    #[test]
    fn three_spin_order_matches_ket_labels() {
        let basis = make_basis(3).unwrap();
        let expected = ["uuu", "uud", "udu", "duu", "ddu", "dud", "udd", "ddd"];
        for (k, s) in expected.iter().enumerate() {
            assert_eq!(basis.config_of_label(k + 1).unwrap(), cfg(s));
        }
        assert_eq!(basis.config_of_label(4).unwrap(), cfg("duu"));
    }

    #[test]
    fn two_spin_order() {
        let basis = make_basis(2).unwrap();
        let got: Vec<String> = basis.configs().map(|c| c.to_string()).collect();
        assert_eq!(got, ["uu", "ud", "du", "dd"]);
    }

    #[test]
    fn single_spin() {
        let basis = make_basis(1).unwrap();
        assert_eq!(basis.config_of_label(1).unwrap(), cfg("u"));
        assert_eq!(basis.dim(), 2);
    }

    #[test]
    fn fallback_groups_by_down_count() {
        let basis = make_basis(4).unwrap();
        let downs: Vec<usize> = basis.configs().map(|c| c.len() - c.up_count()).collect();
        assert!(downs.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(basis.config_of(1).unwrap(), cfg("uuud"));
        assert_eq!(basis.config_of(4).unwrap(), cfg("duuu"));
    }

    #[test]
    fn sector_blocks_for_three_spins() {
        let basis = make_basis(3).unwrap();
        assert_eq!(
            basis.sectors(),
            vec![vec![0], vec![1, 2, 3], vec![4, 5, 6], vec![7]]
        );
    }

    #[test]
    fn dimension_guard() {
        assert!(matches!(make_basis(0), Err(Error::Dimension(_))));
        assert!(matches!(make_basis(21), Err(Error::Dimension(_))));
        assert!(make_basis(20).is_ok());
    }

    #[test]
    fn basis_state_examples() {
        let b2 = make_basis(2).unwrap();
        let v = basis_state(&cfg("ud"), &b2).unwrap();
        let expected: Vec<f64> = vec![0.0, 1.0, 0.0, 0.0];
        for (a, e) in v.amplitudes().iter().zip(expected) {
            assert_eq!(*a, Complex64::new(e, 0.0));
        }
        let b3 = make_basis(3).unwrap();
        assert_eq!(basis_state(&cfg("uuu"), &b3).unwrap().amplitude(0).re, 1.0);
        let last = basis_state(&cfg("ddd"), &b3).unwrap();
        assert_eq!(last.amplitude(7).re, 1.0);
        assert_eq!(last.norm(), 1.0);
    }

    #[test]
    fn basis_state_length_mismatch() {
        let b3 = make_basis(3).unwrap();
        assert_eq!(
            basis_state(&cfg("ud"), &b3),
            Err(Error::Shape {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn inner_products_of_basis_states() {
        let b2 = make_basis(2).unwrap();
        let ud = basis_state(&cfg("ud"), &b2).unwrap();
        let du = basis_state(&cfg("du"), &b2).unwrap();
        assert_eq!(inner_product(&ud, &ud).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(inner_product(&ud, &du).unwrap(), Complex64::new(0.0, 0.0));
        let b3 = make_basis(3).unwrap();
        let other = basis_state(&cfg("uuu"), &b3).unwrap();
        assert!(inner_product(&ud, &other).is_err());
    }

    #[test]
    fn listed_eigenvectors_are_orthogonal() {
        // v2 and v3 of the up sector, embedded at positions 2..4
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let s = 1.0 / 3f64.sqrt();
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let v2 = StateVector::new(3, vec![z, one * s, one * s, one * s, z, z, z, z]).unwrap();
        let v3 = StateVector::new(3, vec![z, one * s, w.conj() * s, w * s, z, z, z, z]).unwrap();
        assert!(inner_product(&v2, &v3).unwrap().norm() < 1e-15);
    }

    #[test]
    fn conjugate_linear_in_first_argument() {
        let i = Complex64::new(0.0, 1.0);
        let a = StateVector::new(1, vec![i, Complex64::new(0.0, 0.0)]).unwrap();
        let b =
            StateVector::new(1, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), -i);
    }

    #[test]
    fn exhaustive_round_trip_and_orthonormality() {
        for n in 1..=4 {
            let basis = make_basis(n).unwrap();
            for k in 0..basis.dim() {
                let c = basis.config_of(k).unwrap();
                assert_eq!(basis.index_of(&c).unwrap(), k);
            }
            for bits in 0..1u32 << n {
                let c = SpinConfig::from_bits(bits, n);
                assert_eq!(basis.config_of(basis.index_of(&c).unwrap()).unwrap(), c);
            }
        }
        for n in 1..=3 {
            let basis = make_basis(n).unwrap();
            let states: Vec<_> = basis
                .configs()
                .map(|c| basis_state(&c, &basis).unwrap())
                .collect();
            for (a, sa) in states.iter().enumerate() {
                for (b, sb) in states.iter().enumerate() {
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert_eq!(
                        inner_product(sa, sb).unwrap(),
                        Complex64::new(expected, 0.0)
                    );
                }
            }
        }
    }

    #[test]
    fn config_parsing() {
        assert_eq!(cfg("uud").spins(), &[Spin::Up, Spin::Up, Spin::Down]);
        assert_eq!(
            "uxd".parse::<SpinConfig>(),
            Err(Error::Parse {
                position: 1,
                message: "expected 'u' or 'd', found 'x'".into()
            })
        );
        assert!("".parse::<SpinConfig>().is_err());
    }

    #[test]
    fn json_shapes() {
        let b2 = make_basis(2).unwrap();
        let v = basis_state(&cfg("ud"), &b2).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"amplitudes":[[0.0,0.0],[1.0,0.0],[0.0,0.0],[0.0,0.0]]}"#
        );
        let back: StateVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(serde_json::to_string(&cfg("uud")).unwrap(), r#""uud""#);
    }

    proptest! {
        #[test]
        fn norm_is_sqrt_of_self_inner_product(
            parts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 8)
        ) {
            let amps = parts.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            let v = StateVector::new(3, amps).unwrap();
            let ip = inner_product(&v, &v).unwrap();
            prop_assert!(ip.im.abs() <= 1e-14 * ip.re.max(1.0));
            prop_assert!((v.norm() - ip.re.sqrt()).abs() <= 1e-14 * v.norm().max(1.0));
        }

        #[test]
        fn config_string_round_trip(bits in 0u32..1 << 6, n in 1usize..=6) {
            let c = SpinConfig::from_bits(bits & ((1 << n) - 1), n);
            prop_assert_eq!(c.to_string().parse::<SpinConfig>().unwrap(), c);
        }
    }
}
