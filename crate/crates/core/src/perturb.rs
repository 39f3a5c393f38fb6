//! Perturbed evolution of the three-spin cycle and the superpositions it
//! produces over ontological states.
//!
//! Four schemes are available:
//!
//! * operator level: each transposition exponent scaled by `1+ε`;
//! * Hamiltonian level: `exp(−iĤT(1+ε))`, exact or to first order;
//! * exact exponent scale: the same exact operator assembled from its
//!   eigenbasis, which is how the three-term closed forms are derived;
//! * a generic diagonal shift `Ĥ′ = Ĥ + diag{c₁,…,c₈}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::permops::{
    chain_cycle, to_matrix, transposition, transposition_product, OperatorMatrix,
};
use crate::spectral::{chain_hamiltonian, chain_spectrum, expm_hermitian, expm_unitary, KAPPA};
use crate::statespace::{make_basis, SpinConfig};

/// |ε| above which a warning is attached to the report.
pub const EPSILON_WARN: f64 = 0.5;
/// |ε| above which guarded constructors refuse the value.
pub const EPSILON_MAX: f64 = 1.0;
/// Default tolerance on `1 − max probability` for calling a state ontological.
pub const DEFAULT_CLASSICALITY_THRESHOLD: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation order of a scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    Exact,
    FirstOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationSpec {
    OperatorLevel {
        epsilon: f64,
        expansion: Expansion,
    },
    HamiltonianLevel {
        epsilon: f64,
        expansion: Expansion,
    },
    ExactExponentScale {
        epsilon: f64,
    },
    /// Eigenbasis shift; every `cₖ` contributes a factor `e^{+i cₖ T}`.
    DiagonalGeneric {
        c: [Complex64; 8],
        timestep: f64,
    },
}

/// Checks ε against the guard. Returns a warning for `EPSILON_WARN < |ε| ≤ EPSILON_MAX`.
pub fn check_epsilon(epsilon: f64) -> Result<Option<String>> {
    if !epsilon.is_finite() || epsilon.abs() > EPSILON_MAX {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    if epsilon.abs() > EPSILON_WARN {
        return Ok(Some(format!(
            "epsilon {epsilon} exceeds {EPSILON_WARN}; perturbative results are unreliable"
        )));
    }
    Ok(None)
}

impl PerturbationSpec {
    pub fn operator_level(epsilon: f64, expansion: Expansion) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(PerturbationSpec::OperatorLevel { epsilon, expansion })
    }

    pub fn hamiltonian_level(epsilon: f64, expansion: Expansion) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(PerturbationSpec::HamiltonianLevel { epsilon, expansion })
    }

    pub fn exact_exponent_scale(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(PerturbationSpec::ExactExponentScale { epsilon })
    }

    pub fn diagonal(c: &[Complex64], timestep: f64) -> Result<Self> {
        let c: [Complex64; 8] = c.try_into().map_err(|_| Error::Shape {
            expected: 8,
            found: c.len(),
        })?;
        if !(timestep.is_finite() && timestep > 0.0) {
            return Err(Error::Contract(format!(
                "time step must be positive, got {timestep}"
            )));
        }
        Ok(PerturbationSpec::DiagonalGeneric { c, timestep })
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            PerturbationSpec::OperatorLevel { epsilon, .. }
            | PerturbationSpec::HamiltonianLevel { epsilon, .. }
            | PerturbationSpec::ExactExponentScale { epsilon } => Some(*epsilon),
            PerturbationSpec::DiagonalGeneric { .. } => None,
        }
    }

    /// Stable name used in reports and CSV output.
    pub fn scheme_name(&self) -> &'static str {
        match self {
            PerturbationSpec::OperatorLevel {
                expansion: Expansion::Exact,
                ..
            } => "operator-exact",
            PerturbationSpec::OperatorLevel {
                expansion: Expansion::FirstOrder,
                ..
            } => "operator-first-order",
            PerturbationSpec::HamiltonianLevel {
                expansion: Expansion::Exact,
                ..
            } => "hamiltonian-exact",
            PerturbationSpec::HamiltonianLevel {
                expansion: Expansion::FirstOrder,
                ..
            } => "hamiltonian-first-order",
            PerturbationSpec::ExactExponentScale { .. } => "exact-exponent-scale",
            PerturbationSpec::DiagonalGeneric { .. } => "diagonal",
        }
    }

    /// The perturbed evolution operator in the ontological basis.
    pub fn operator(&self) -> Result<OperatorMatrix> {
        match *self {
            PerturbationSpec::OperatorLevel {
                epsilon,
                expansion: Expansion::Exact,
            } => exact_operator_level(epsilon),
            PerturbationSpec::OperatorLevel {
                epsilon,
                expansion: Expansion::FirstOrder,
            } => first_order_operator_level(epsilon),
            PerturbationSpec::HamiltonianLevel {
                epsilon,
                expansion: Expansion::Exact,
            } => hamiltonian_exponential(epsilon),
            PerturbationSpec::HamiltonianLevel {
                epsilon,
                expansion: Expansion::FirstOrder,
            } => first_order_hamiltonian_level(epsilon),
            PerturbationSpec::ExactExponentScale { epsilon } => exact_hamiltonian_level(epsilon),
            PerturbationSpec::DiagonalGeneric { ref c, timestep } => {
                diagonal_perturbation(c, timestep)
            }
        }
    }
}

fn p(i: usize, j: usize) -> OperatorMatrix {
    to_matrix(
        &transposition(i, j, 3).expect("valid"),
        &make_basis(3).expect("valid"),
    )
    .expect("valid")
}

fn product(pairs: &[(usize, usize)]) -> OperatorMatrix {
    to_matrix(
        &transposition_product(pairs, 3).expect("valid"),
        &make_basis(3).expect("valid"),
    )
    .expect("valid")
}

/// `Û − i(π/2)ε(P12 + P23)`. Not unitary for ε ≠ 0.
pub fn first_order_operator_level(epsilon: f64) -> Result<OperatorMatrix> {
    check_epsilon(epsilon)?;
    let correction = p(1, 2).entries() + p(2, 3).entries();
    OperatorMatrix::new(chain_cycle().entries() - correction * (I * (PI / 2.0 * epsilon)))
}

/// `−exp(−iπ/2·P12(1+ε)) exp(−iπ/2·P23(1+ε))`.
pub fn exact_operator_level(epsilon: f64) -> Result<OperatorMatrix> {
    require_finite(epsilon)?;
    let t = PI / 2.0 * (1.0 + epsilon);
    Ok(expm_hermitian(&p(1, 2), t)?
        .mul(&expm_hermitian(&p(2, 3), t)?)?
        .scale(-ONE))
}

/// `Û − i(2π/3)ε(Û + κ P12P13 + κ* Id)`, with κ placed as commonly printed.
pub fn first_order_hamiltonian_level(epsilon: f64) -> Result<OperatorMatrix> {
    check_epsilon(epsilon)?;
    first_order_hamiltonian_with(epsilon, KAPPA, KAPPA.conj())
}

/// `Û − i(2π/3)ε(Û + κ* P12P13 + κ Id)`, the first-order expansion of
/// `exp(−iĤT(1+ε))` for the Hamiltonian with `exp(−iĤT) = Û`.
pub fn first_order_hamiltonian_level_swapped(epsilon: f64) -> Result<OperatorMatrix> {
    check_epsilon(epsilon)?;
    first_order_hamiltonian_with(epsilon, KAPPA.conj(), KAPPA)
}

fn first_order_hamiltonian_with(
    epsilon: f64,
    on_square: Complex64,
    on_identity: Complex64,
) -> Result<OperatorMatrix> {
    let u = chain_cycle();
    let bracket = u.entries()
        + product(&[(1, 2), (1, 3)]).entries() * on_square
        + DMatrix::<Complex64>::identity(8, 8) * on_identity;
    OperatorMatrix::new(u.entries() - bracket * (I * (2.0 * PI / 3.0 * epsilon)))
}

/// `exp(−iĤT(1+ε))` assembled in the eigenbasis: the eigenvalue phases
/// `e^{−i2πk/3}` acquire the extra factor `e^{−i2πkε/3}`.
pub fn exact_hamiltonian_level(epsilon: f64) -> Result<OperatorMatrix> {
    require_finite(epsilon)?;
    let spectrum = chain_spectrum();
    let values: Vec<Complex64> = perturbed_eigenvalues(epsilon);
    OperatorMatrix::new(spectrum.with_eigenvalues(&values))
}

/// Eigenvalues of `exp(−iĤT(1+ε))` in the order of [`chain_spectrum`].
pub fn perturbed_eigenvalues(epsilon: f64) -> Vec<Complex64> {
    LEVELS
        .iter()
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k * (1.0 + epsilon) / 3.0))
        .collect()
}

/// Energy levels of the chain in units of `2π/(3T)`.
pub const LEVELS: [f64; 8] = [0.0, 0.0, 1.0, 2.0, 0.0, 1.0, 2.0, 0.0];

/// `exp(−iĤT(1+ε))` through the matrix exponential of the ontological Hamiltonian.
pub fn hamiltonian_exponential(epsilon: f64) -> Result<OperatorMatrix> {
    require_finite(epsilon)?;
    let h = chain_hamiltonian(1.0)?;
    expm_unitary(&h.ontological, 1.0 + epsilon)
}

/// `Û′ = D diag{e^{−iEₖT} e^{icₖT}} D†`.
pub fn diagonal_perturbation(c: &[Complex64], timestep: f64) -> Result<OperatorMatrix> {
    if c.len() != 8 {
        return Err(Error::Shape {
            expected: 8,
            found: c.len(),
        });
    }
    let spectrum = chain_spectrum();
    let base = perturbed_eigenvalues(0.0);
    let values: Vec<Complex64> = base
        .iter()
        .zip(c)
        .map(|(b, ck)| b * (I * ck * timestep).exp())
        .collect();
    OperatorMatrix::new(spectrum.with_eigenvalues(&values))
}

fn require_finite(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

/// Coefficients of the two-up ontological states over `(v₂, v₃, v₄)`.
/// `rows[i]` holds `(αᵢ, βᵢ, γᵢ)` for `s₂ = |uud⟩`, `s₃ = |udu⟩`, `s₄ = |duu⟩`.
#[derive(Clone, Debug)]
pub struct EigenDecompCoefficients {
    pub rows: [[Complex64; 3]; 3],
    /// max_i ‖αᵢv₂ + βᵢv₃ + γᵢv₄ − sᵢ‖.
    pub reconstruction_error: f64,
}

pub fn eigenbasis_coefficients() -> Result<EigenDecompCoefficients> {
    let spectrum = chain_spectrum();
    let v = Matrix3::from_fn(|r, c| spectrum.eigenvectors[(r + 1, c + 1)]);
    let lu = v.lu();
    let mut rows = [[Complex64::new(0.0, 0.0); 3]; 3];
    let mut reconstruction_error: f64 = 0.0;
    for (i, row) in rows.iter_mut().enumerate() {
        let mut s = Vector3::zeros();
        s[i] = ONE;
        let x = lu
            .solve(&s)
            .ok_or_else(|| Error::Degenerate("eigenvector system is singular".into()))?;
        reconstruction_error = reconstruction_error.max((v * x - s).norm());
        *row = [x[0], x[1], x[2]];
    }
    Ok(EigenDecompCoefficients {
        rows,
        reconstruction_error,
    })
}

/// Global spin flip, mapping the two-up sector onto the two-down sector.
pub fn down_sector_map(config: &SpinConfig) -> Result<SpinConfig> {
    if config.len() != 3 {
        return Err(Error::Shape {
            expected: 3,
            found: config.len(),
        });
    }
    Ok(config.flipped())
}

/// Closed-form amplitude `⟨out|Û′|in⟩` of the exact exponent-scale scheme,
/// for `in, out` in `{0: uud, 1: udu, 2: duu}`.
///
/// With `a = e^{−i2πε/3}` and `A = 1/2 + i√3/2`, every amplitude is one of
/// `(1 + a(1 + a))/3`, `(1 − a(A + A* a))/3` or `(1 − a(A* + A a))/3`.
pub fn closed_form_amplitude(input: usize, output: usize, epsilon: f64) -> Complex64 {
    let a = Complex64::from_polar(1.0, -2.0 * PI * epsilon / 3.0);
    let big_a = Complex64::new(0.5, 3f64.sqrt() / 2.0);
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let image = third * (ONE + a * (ONE + a));
    let same = third * (ONE - a * (big_a + big_a.conj() * a));
    let other = third * (ONE - a * (big_a.conj() + big_a * a));
    match (input, output) {
        (0, 0) | (1, 1) | (2, 2) => same,
        (0, 2) | (1, 0) | (2, 1) => image,
        (0, 1) | (1, 2) | (2, 0) => other,
        _ => panic!("closed form indices must be below 3"),
    }
}

/// One output component of a [`SuperpositionReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    pub config: SpinConfig,
    pub re: f64,
    pub im: f64,
    pub prob: f64,
}

impl Amplitude {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// The image of an ontological state under a perturbed evolution operator.
#[derive(Clone, Debug, Serialize)]
pub struct SuperpositionReport {
    pub input: SpinConfig,
    pub scheme: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_c"
    )]
    pub c: Option<[Complex64; 8]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_convention: Option<&'static str>,
    pub amplitudes: Vec<Amplitude>,
    pub max_prob: f64,
    pub classical: bool,
    pub dominant: SpinConfig,
    pub unitary: bool,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn serialize_c<S: Serializer>(
    c: &Option<[Complex64; 8]>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Option<Vec<[f64; 2]>> = c.map(|c| c.iter().map(|z| [z.re, z.im]).collect());
    pairs.serialize(serializer)
}

impl SuperpositionReport {
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.prob).collect()
    }

    pub fn amplitude_of(&self, config: &SpinConfig) -> Option<Complex64> {
        self.amplitudes
            .iter()
            .find(|a| &a.config == config)
            .map(Amplitude::value)
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.prob).sum()
    }
}

/// Applies the perturbed operator of `spec` to `config` with the default threshold.
pub fn evolve_perturbed(
    config: &SpinConfig,
    spec: &PerturbationSpec,
) -> Result<SuperpositionReport> {
    evolve_perturbed_with(config, spec, DEFAULT_CLASSICALITY_THRESHOLD)
}

pub fn evolve_perturbed_with(
    config: &SpinConfig,
    spec: &PerturbationSpec,
    threshold: f64,
) -> Result<SuperpositionReport> {
    if config.len() != 3 {
        return Err(Error::Shape {
            expected: 3,
            found: config.len(),
        });
    }
    let mut warnings = Vec::new();
    if let Some(eps) = spec.epsilon() {
        if eps.abs() > EPSILON_WARN {
            warnings.push(format!(
                "epsilon {eps} exceeds {EPSILON_WARN}; perturbative results are unreliable"
            ));
        }
    }
    let operator = spec.operator()?;
    let ordering = make_basis(3)?;
    let column = ordering.index_of(config)?;
    let values: Vec<Complex64> = (0..8).map(|r| operator.entries()[(r, column)]).collect();
    let (max_prob, classical) = classicality_of(&values, threshold)?;
    let amplitudes: Vec<Amplitude> = ordering
        .configs()
        .zip(&values)
        .map(|(config, z)| Amplitude {
            config,
            re: z.re,
            im: z.im,
            prob: z.norm_sqr(),
        })
        .collect();
    let dominant = amplitudes
        .iter()
        .fold(
            &amplitudes[0],
            |best, a| if a.prob > best.prob { a } else { best },
        )
        .config
        .clone();
    if !operator.is_unitary() {
        warnings.push("perturbed operator is not unitary".into());
    }
    let (c, phase_convention) = match spec {
        PerturbationSpec::DiagonalGeneric { c, .. } => (Some(*c), Some("exp(+i c_k T)")),
        _ => (None, None),
    };
    Ok(SuperpositionReport {
        input: config.clone(),
        scheme: spec.scheme_name(),
        epsilon: spec.epsilon(),
        c,
        phase_convention,
        amplitudes,
        max_prob,
        classical,
        dominant,
        unitary: operator.is_unitary(),
        threshold,
        warnings,
    })
}

/// Max probability after normalization and the classicality verdict.
pub fn classicality_measure(report: &SuperpositionReport, threshold: f64) -> Result<(f64, bool)> {
    let values: Vec<Complex64> = report.amplitudes.iter().map(Amplitude::value).collect();
    classicality_of(&values, threshold)
}

pub fn classicality_of(amplitudes: &[Complex64], threshold: f64) -> Result<(f64, bool)> {
    let total: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero vector".into()));
    }
    let max = amplitudes
        .iter()
        .map(|z| z.norm_sqr() / total)
        .fold(0.0, f64::max);
    Ok((max, max >= 1.0 - threshold))
}

/// One CSV row of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub config_in: SpinConfig,
    pub config_out: SpinConfig,
    pub re: f64,
    pub im: f64,
    pub prob: f64,
}

/// Evaluates `make(ε)` for every ε and every input configuration.
pub fn sweep(
    epsilons: &[f64],
    inputs: &[SpinConfig],
    make: impl Fn(f64) -> Result<PerturbationSpec>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &eps in epsilons {
        let spec = make(eps)?;
        for input in inputs {
            let report = evolve_perturbed(input, &spec)?;
            rows.extend(report.amplitudes.into_iter().map(|a| SweepRow {
                epsilon: eps,
                config_in: input.clone(),
                config_out: a.config,
                re: a.re,
                im: a.im,
                prob: a.prob,
            }));
        }
    }
    Ok(rows)
}

/// Frobenius residual of each truncated scheme against its exact counterpart.
pub fn truncation_residual(spec_first: &PerturbationSpec) -> Result<f64> {
    let exact = match *spec_first {
        PerturbationSpec::OperatorLevel { epsilon, .. } => exact_operator_level(epsilon)?,
        PerturbationSpec::HamiltonianLevel { epsilon, .. } => exact_hamiltonian_level(epsilon)?,
        _ => return Err(Error::Contract("scheme has no truncation".into())),
    };
    spec_first.operator()?.distance(&exact)
}

/// Successive ratios `r(ε)/r(ε/2)` of a residual function.
pub fn halving_ratios(epsilons: &[f64], residual: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let values: Vec<f64> = epsilons
        .iter()
        .map(|e| residual(*e))
        .collect::<Result<_>>()?;
    Ok(values.windows(2).map(|w| w[0] / w[1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permops::frobenius;
    use proptest::prelude::*;

    fn cfg(s: &str) -> SpinConfig {
        s.parse().unwrap()
    }

    fn w() -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / 3.0)
    }

    /// Padé exponential of the ontological Hamiltonian, independent of the
    /// spectral route.
    fn pade_hamiltonian_level(epsilon: f64) -> DMatrix<Complex64> {
        let h = chain_hamiltonian(1.0).unwrap();
        (h.ontological.matrix().entries() * (-I * (1.0 + epsilon))).exp()
    }

    fn pade_operator_level(epsilon: f64) -> DMatrix<Complex64> {
        let t = -I * (PI / 2.0 * (1.0 + epsilon));
        -(p(1, 2).entries() * t).exp() * (p(2, 3).entries() * t).exp()
    }

    #[test]
    fn epsilon_guard() {
        assert_eq!(check_epsilon(0.1).unwrap(), None);
        assert!(check_epsilon(0.7).unwrap().is_some());
        assert!(matches!(
            check_epsilon(1.5),
            Err(Error::EpsilonOutOfRange(_))
        ));
        assert!(check_epsilon(f64::NAN).is_err());
        assert!(PerturbationSpec::operator_level(2.0, Expansion::Exact).is_err());
        let unchecked = PerturbationSpec::OperatorLevel {
            epsilon: 2.0,
            expansion: Expansion::Exact,
        };
        assert!(unchecked.operator().is_ok());
    }

    #[test]
    fn all_schemes_reduce_to_the_cycle_at_zero() {
        let u = chain_cycle();
        for op in [
            first_order_operator_level(0.0).unwrap(),
            exact_operator_level(0.0).unwrap(),
            first_order_hamiltonian_level(0.0).unwrap(),
            first_order_hamiltonian_level_swapped(0.0).unwrap(),
            exact_hamiltonian_level(0.0).unwrap(),
            hamiltonian_exponential(0.0).unwrap(),
            diagonal_perturbation(&[Complex64::new(0.0, 0.0); 8], 1.0).unwrap(),
        ] {
            assert!(op.distance(&u).unwrap() < 1e-12);
        }
    }

    #[test]
    fn first_order_operator_level_formula() {
        let op = first_order_operator_level(0.01).unwrap();
        let expected = chain_cycle().entries()
            - (p(1, 2).entries() + p(2, 3).entries()) * Complex64::new(0.0, PI / 2.0 * 0.01);
        assert!(frobenius(&(op.entries() - expected)) < 1e-15);
        assert!(!op.is_unitary());
    }

    #[test]
    fn first_order_hamiltonian_level_formula() {
        let eps = 0.01;
        let op = first_order_hamiltonian_level(eps).unwrap();
        let u = chain_cycle();
        let p12p13 = product(&[(1, 2), (1, 3)]);
        let expected = u.entries()
            - (u.entries() + p12p13.entries() * KAPPA + DMatrix::identity(8, 8) * KAPPA.conj())
                * Complex64::new(0.0, 2.0 * PI / 3.0 * eps);
        assert!(frobenius(&(op.entries() - expected)) < 1e-15);
    }

    #[test]
    fn exact_operator_level_is_unitary_and_matches_pade() {
        for eps in [0.1, -0.2, 0.37] {
            let op = exact_operator_level(eps).unwrap();
            assert!(op.is_unitary());
            assert!(frobenius(&(op.entries() - pade_operator_level(eps))) < 1e-12);
            assert!(op.distance(&chain_cycle()).unwrap() > 0.0);
        }
    }

    #[test]
    fn exact_operator_level_at_epsilon_two() {
        let op = exact_operator_level(2.0).unwrap();
        let t = PI / 2.0 * 3.0;
        let f12 = (p(1, 2).entries() * (-I * t)).exp();
        let f23 = (p(2, 3).entries() * (-I * t)).exp();
        assert!(frobenius(&(op.entries() + f12 * f23)) < 1e-12);
        // exp(−iπP) = −Id, so exp(−i3π/2 P) = −exp(−iπ/2 P) and the product is Û again
        assert!(op.distance(&chain_cycle()).unwrap() < 1e-12);
    }

    #[test]
    fn hamiltonian_level_routes_agree() {
        for eps in [0.01, 0.05, 0.1, -0.3] {
            let a = exact_hamiltonian_level(eps).unwrap();
            let b = hamiltonian_exponential(eps).unwrap();
            assert!(a.distance(&b).unwrap() < 1e-12);
            assert!(frobenius(&(a.entries() - pade_hamiltonian_level(eps))) < 1e-12);
            assert!(a.is_unitary());
        }
    }

    #[test]
    fn perturbed_eigenbasis_diagonal() {
        let eps = 0.1;
        let spectrum = chain_spectrum();
        let op = exact_hamiltonian_level(eps).unwrap();
        let d = &spectrum.eigenvectors;
        let diag = d.adjoint() * op.entries() * d;
        let phase =
            |k: f64| Complex64::from_polar(1.0, -2.0 * PI * k / 3.0 - 2.0 * PI * k * eps / 3.0);
        let expected = [
            ONE,
            ONE,
            phase(1.0),
            phase(2.0),
            ONE,
            phase(1.0),
            phase(2.0),
            ONE,
        ];
        for r in 0..8 {
            for c in 0..8 {
                let e = if r == c {
                    expected[r]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((diag[(r, c)] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_cycle_does_not_close() {
        let op = exact_hamiltonian_level(0.1).unwrap();
        assert!(op.pow(3).distance(&OperatorMatrix::identity(8)).unwrap() > 1e-3);
    }

    #[test]
    fn coefficients_match_closed_values() {
        let coeffs = eigenbasis_coefficients().unwrap();
        assert!(coeffs.reconstruction_error <= 1e-13);
        let s = Complex64::new(3f64.sqrt() / 3.0, 0.0);
        for z in coeffs.rows[0] {
            assert!((z - s).norm() < 1e-13);
        }
        assert!((coeffs.rows[1][0] - s).norm() < 1e-13);
        assert!((coeffs.rows[2][0] - s).norm() < 1e-13);
        let third = Complex64::new(1.0 / 3.0, 0.0);
        let beta3 = I * (ONE - w().conj()) * third;
        let gamma3 = -I * (ONE - w()) * third;
        let beta4 = -I * (ONE - w()) * third;
        let gamma4 = I * (ONE - w().conj()) * third;
        assert!((coeffs.rows[1][1] - beta3).norm() < 1e-13);
        assert!((coeffs.rows[1][2] - gamma3).norm() < 1e-13);
        assert!((coeffs.rows[2][1] - beta4).norm() < 1e-13);
        assert!((coeffs.rows[2][2] - gamma4).norm() < 1e-13);
    }

    #[test]
    fn closed_forms_match_direct_computation() {
        let states = [cfg("uud"), cfg("udu"), cfg("duu")];
        for eps in [0.0, 0.01, 0.05, 0.1] {
            let spec = PerturbationSpec::exact_exponent_scale(eps).unwrap();
            for (i, input) in states.iter().enumerate() {
                let report = evolve_perturbed(input, &spec).unwrap();
                for (j, output) in states.iter().enumerate() {
                    let direct = report.amplitude_of(output).unwrap();
                    let closed = closed_form_amplitude(i, j, eps);
                    assert!(
                        (direct - closed).norm() < 1e-12,
                        "eps={eps} {input}->{output}"
                    );
                }
            }
        }
    }

    #[test]
    fn uud_at_point_one_fixture() {
        let spec = PerturbationSpec::exact_exponent_scale(0.1).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        let a = Complex64::from_polar(1.0, -0.2 * PI / 3.0);
        let expected = (ONE + a * (ONE + a)) / 3.0;
        let got = report.amplitude_of(&cfg("duu")).unwrap();
        assert!((got - expected).norm() < 1e-12);
        assert!((got.re - 0.963897686125469).abs() < 1e-12, "{got}");
        assert!((got.im + 0.20488277796451984).abs() < 1e-12, "{got}");
    }

    #[test]
    fn extreme_states_change_by_a_phase() {
        for eps in [0.01, 0.1, 0.4] {
            let spec = PerturbationSpec::exact_exponent_scale(eps).unwrap();
            for s in ["uuu", "ddd"] {
                let report = evolve_perturbed(&cfg(s), &spec).unwrap();
                assert!((report.amplitude_of(&cfg(s)).unwrap().norm() - 1.0).abs() < 1e-12);
                assert!(report.classical);
            }
        }
    }

    #[test]
    fn unperturbed_image() {
        let spec = PerturbationSpec::exact_exponent_scale(0.0).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        assert!((report.amplitude_of(&cfg("duu")).unwrap() - ONE).norm() < 1e-12);
        assert_eq!(report.dominant, cfg("duu"));
        assert!(report.classical);
    }

    #[test]
    fn evolve_rejects_wrong_length() {
        let spec = PerturbationSpec::exact_exponent_scale(0.1).unwrap();
        assert!(matches!(
            evolve_perturbed(&cfg("ud"), &spec),
            Err(Error::Shape {
                expected: 3,
                found: 2
            })
        ));
        assert!(down_sector_map(&cfg("udud")).is_err());
    }

    #[test]
    fn down_sector_examples() {
        assert_eq!(down_sector_map(&cfg("uud")).unwrap(), cfg("ddu"));
        assert_eq!(down_sector_map(&cfg("udu")).unwrap(), cfg("dud"));
        assert_eq!(down_sector_map(&cfg("duu")).unwrap(), cfg("udd"));
        assert_eq!(down_sector_map(&cfg("uuu")).unwrap(), cfg("ddd"));
    }

    #[test]
    fn diagonal_degenerate_and_generic() {
        let z = Complex64::new(0.0, 0.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        let equal = [z, r(0.3), r(0.3), r(0.3), z, z, z, z];
        let spec = PerturbationSpec::diagonal(&equal, 1.0).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        assert!((report.max_prob - 1.0).abs() < 1e-12);
        let phase = Complex64::from_polar(1.0, 0.3);
        assert!((report.amplitude_of(&cfg("duu")).unwrap() - phase).norm() < 1e-12);

        let distinct = [z, r(0.1), r(0.2), r(0.3), z, z, z, z];
        let spec = PerturbationSpec::diagonal(&distinct, 1.0).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        assert!(report.max_prob < 1.0 - 1e-6);
        assert!(!report.classical);
        assert!(report.unitary);

        assert!(PerturbationSpec::diagonal(&distinct[..7], 1.0).is_err());
        assert!(diagonal_perturbation(&distinct[..7], 1.0).is_err());
    }

    #[test]
    fn complex_diagonal_entries_break_unitarity() {
        let mut c = [Complex64::new(0.0, 0.0); 8];
        c[2] = Complex64::new(0.1, 0.05);
        let spec = PerturbationSpec::diagonal(&c, 1.0).unwrap();
        let report = evolve_perturbed(&cfg("udu"), &spec).unwrap();
        assert!(!report.unitary);
        assert!(report.warnings.iter().any(|w| w.contains("not unitary")));
    }

    #[test]
    fn classicality_examples() {
        let one_hot = [ONE, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(classicality_of(&one_hot, 1e-9).unwrap(), (1.0, true));
        let s = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        let (m, c) = classicality_of(&[s, s, s], 0.01).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15 && !c);
        assert!(classicality_of(&[Complex64::new(0.0, 0.0); 3], 0.01).is_err());
        let (m, _) = classicality_of(&[ONE * 2.0, Complex64::new(0.0, 0.0)], 0.01).unwrap();
        assert_eq!(m, 1.0);

        let spec = PerturbationSpec::exact_exponent_scale(0.05).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        let (m, classical) = classicality_measure(&report, DEFAULT_CLASSICALITY_THRESHOLD).unwrap();
        assert!(m < 1.0 && !classical);
    }

    #[test]
    fn operator_level_order_of_accuracy() {
        let ratios = halving_ratios(&[0.02, 0.01, 0.005], |e| {
            truncation_residual(&PerturbationSpec::operator_level(e, Expansion::FirstOrder)?)
        })
        .unwrap();
        for r in ratios {
            assert!((3.5..=4.5).contains(&r), "{r}");
        }
    }

    #[test]
    fn hamiltonian_level_order_of_accuracy() {
        let printed = halving_ratios(&[0.02, 0.01, 0.005], |e| {
            truncation_residual(&PerturbationSpec::hamiltonian_level(
                e,
                Expansion::FirstOrder,
            )?)
        })
        .unwrap();
        for r in printed {
            assert!((r - 2.0).abs() < 0.1, "{r}");
        }
        let swapped = halving_ratios(&[0.02, 0.01, 0.005], |e| {
            first_order_hamiltonian_level_swapped(e)?.distance(&exact_hamiltonian_level(e)?)
        })
        .unwrap();
        for r in swapped {
            assert!((3.5..=4.5).contains(&r), "{r}");
        }
    }

    #[test]
    fn continuity_in_epsilon() {
        let u = chain_cycle();
        let makers: Vec<Box<dyn Fn(f64) -> Result<PerturbationSpec>>> = vec![
            Box::new(|e| PerturbationSpec::operator_level(e, Expansion::Exact)),
            Box::new(|e| PerturbationSpec::operator_level(e, Expansion::FirstOrder)),
            Box::new(|e| PerturbationSpec::hamiltonian_level(e, Expansion::Exact)),
            Box::new(|e| PerturbationSpec::hamiltonian_level(e, Expansion::FirstOrder)),
            Box::new(PerturbationSpec::exact_exponent_scale),
        ];
        for make in makers {
            let d: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|e| make(*e).unwrap().operator().unwrap().distance(&u).unwrap())
                .collect();
            assert!(d[0] > d[1] && d[1] > d[2] && d[2] > 0.0, "{d:?}");
        }
    }

    #[test]
    fn report_json_shape() {
        let spec = PerturbationSpec::exact_exponent_scale(0.1).unwrap();
        let report = evolve_perturbed(&cfg("uud"), &spec).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["input"], "uud");
        assert_eq!(json["scheme"], "exact-exponent-scale");
        assert_eq!(json["epsilon"], 0.1);
        assert!(json.get("c").is_none());
        assert_eq!(json["amplitudes"].as_array().unwrap().len(), 8);
        for key in ["config", "re", "im", "prob"] {
            assert!(json["amplitudes"][0].get(key).is_some());
        }
        assert!(json["max_prob"].is_f64());
        assert_eq!(json["classical"], false);

        let spec = PerturbationSpec::diagonal(&[Complex64::new(0.1, 0.0); 8], 1.0).unwrap();
        let json = serde_json::to_value(evolve_perturbed(&cfg("uud"), &spec).unwrap()).unwrap();
        assert_eq!(json["c"].as_array().unwrap().len(), 8);
        assert!(json.get("epsilon").is_none());
        assert_eq!(json["phase_convention"], "exp(+i c_k T)");
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep(&[0.0, 0.1], &[cfg("uud"), cfg("uuu")], |e| {
            PerturbationSpec::exact_exponent_scale(e)
        })
        .unwrap();
        assert_eq!(rows.len(), 2 * 2 * 8);
        assert_eq!(rows[0].epsilon, 0.0);
        assert_eq!(rows[0].config_in, cfg("uud"));
        assert_eq!(rows[0].config_out, cfg("uuu"));
    }

    fn symmetric_spec() -> impl Strategy<Value = PerturbationSpec> {
        (-0.45f64..0.45, 0usize..5).prop_map(|(e, kind)| match kind {
            0 => PerturbationSpec::operator_level(e, Expansion::Exact).unwrap(),
            1 => PerturbationSpec::operator_level(e, Expansion::FirstOrder).unwrap(),
            2 => PerturbationSpec::hamiltonian_level(e, Expansion::Exact).unwrap(),
            3 => PerturbationSpec::hamiltonian_level(e, Expansion::FirstOrder).unwrap(),
            _ => PerturbationSpec::exact_exponent_scale(e).unwrap(),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn down_sector_symmetry(spec in symmetric_spec(), bits in 0u32..8) {
            let input = SpinConfig::from_bits(bits, 3);
            let up = evolve_perturbed(&input, &spec).unwrap();
            let down = evolve_perturbed(&down_sector_map(&input).unwrap(), &spec).unwrap();
            for a in &up.amplitudes {
                let mirrored = down.amplitude_of(&down_sector_map(&a.config).unwrap()).unwrap();
                prop_assert!((mirrored - a.value()).norm() < 1e-12);
            }
        }

        #[test]
        fn unitary_schemes_conserve_probability(eps in -0.45f64..0.45, bits in 0u32..8, kind in 0usize..3) {
            let spec = match kind {
                0 => PerturbationSpec::operator_level(eps, Expansion::Exact).unwrap(),
                1 => PerturbationSpec::hamiltonian_level(eps, Expansion::Exact).unwrap(),
                _ => PerturbationSpec::exact_exponent_scale(eps).unwrap(),
            };
            let report = evolve_perturbed(&SpinConfig::from_bits(bits, 3), &spec).unwrap();
            prop_assert!((report.total_probability() - 1.0).abs() < 1e-12);
            prop_assert!(report.unitary);
        }

        #[test]
        fn real_diagonal_shifts_are_unitary(c in proptest::collection::vec(-1.0f64..1.0, 8), t in 0.1f64..3.0, bits in 0u32..8) {
            let c: Vec<Complex64> = c.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
            let spec = PerturbationSpec::diagonal(&c, t).unwrap();
            let report = evolve_perturbed(&SpinConfig::from_bits(bits, 3), &spec).unwrap();
            prop_assert!(report.unitary);
            prop_assert!((report.total_probability() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn down_sector_map_is_an_involution(bits in 0u32..8) {
            let c = SpinConfig::from_bits(bits, 3);
            prop_assert_eq!(down_sector_map(&down_sector_map(&c).unwrap()).unwrap(), c);
        }
    }
}
