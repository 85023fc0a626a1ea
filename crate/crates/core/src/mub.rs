//! Construction and verification of maximal families of d+1 mutually
//! unbiased bases.
//!
//! Basis `d` is always the reference (computational) basis. The other d
//! bases come from a quadratic-phase construction: in odd characteristic
//! the component of vector `a` of basis `A` at field point `x` is
//! `ω_p^{tr(A·x² + a·x)} / √d`; for d ∈ {2, 4, 8} the same role is played
//! by embedded tables of fourth-root-of-unity exponents, re-verified on
//! every build.

use crate::gf::{prime_power_decompose, FieldSpec};
use crate::linalg::{inner, CVector};
use crate::report::{ProtocolReport, Witness};
use crate::{Error, Result, DEFAULT_TOLERANCE};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io;

/// Dimensions `build_mub` knows a construction for.
pub const SUPPORTED_DIMS: [usize; 7] = [2, 3, 4, 5, 7, 8, 9];

/// A family of d+1 orthonormal bases of C^d, indexed `[A][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MubFamily {
    d: usize,
    bases: Vec<Vec<CVector>>,
    labels: Vec<String>,
}

impl MubFamily {
    /// Wrap a (d+1) × d × d array of components as a family, checking shape
    /// only — unbiasedness is `verify_mub`'s job.
    pub fn from_bases(bases: Vec<Vec<CVector>>) -> Result<Self> {
        if bases.len() < 3 {
            return Err(Error::Shape(format!(
                "family needs at least 3 bases, got {}",
                bases.len()
            )));
        }
        let d = bases.len() - 1;
        for (a, basis) in bases.iter().enumerate() {
            if basis.len() != d {
                return Err(Error::Shape(format!(
                    "basis {a} has {} vectors, expected {d}",
                    basis.len()
                )));
            }
            for (i, v) in basis.iter().enumerate() {
                if v.dim() != d {
                    return Err(Error::Shape(format!(
                        "vector {i} of basis {a} has dimension {}, expected {d}",
                        v.dim()
                    )));
                }
            }
        }
        let labels = (0..=d)
            .map(|a| if a == d { "reference".to_owned() } else { format!("A{a}") })
            .collect();
        Ok(MubFamily { d, bases, labels })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// All d+1 bases, `[A][a]`.
    pub fn bases(&self) -> &[Vec<CVector>] {
        &self.bases
    }

    pub fn basis(&self, a: usize) -> &[CVector] {
        &self.bases[a]
    }

    pub fn vector(&self, basis: usize, index: usize) -> &CVector {
        &self.bases[basis][index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Build the d+1 mutually unbiased bases for a supported prime power.
///
/// The result is re-checked against the unbiasedness conditions before
/// being returned, so a miscompiled table can never escape.
pub fn build_mub(d: usize) -> Result<MubFamily> {
    let mut bases = match d {
        2 => qubit_bases(),
        4 => exponent_bases(4, |a, b, x| MUB4_EXPONENTS[a][b][x]),
        8 => exponent_bases(8, |a, b, x| MUB8_EXPONENTS[a][b][x]),
        3 | 5 | 7 | 9 => odd_prime_power_bases(d)?,
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    bases.push(reference_basis(d));
    let family = MubFamily::from_bases(bases)?;
    let report = verify_mub(&family, DEFAULT_TOLERANCE);
    assert!(
        report.pass,
        "built family must satisfy the unbiasedness conditions: {report}"
    );
    Ok(family)
}

fn reference_basis(d: usize) -> Vec<CVector> {
    (0..d).map(|k| CVector::standard_basis(d, k)).collect()
}

/// The two non-reference qubit bases: eigenbases of the x and y spin
/// operators (the reference basis is the z eigenbasis).
fn qubit_bases() -> Vec<Vec<CVector>> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex64::I;
    vec![
        vec![
            CVector::new(vec![s, s]),
            CVector::new(vec![s, -s]),
        ],
        vec![
            CVector::new(vec![s, i * s]),
            CVector::new(vec![s, -i * s]),
        ],
    ]
}

/// Bases whose components are fourth roots of unity, i^e / √d.
fn exponent_bases(d: usize, exp: impl Fn(usize, usize, usize) -> u8) -> Vec<Vec<CVector>> {
    let scale = 1.0 / (d as f64).sqrt();
    let quarter: [Complex64; 4] = [
        Complex64::new(scale, 0.0),
        Complex64::new(0.0, scale),
        Complex64::new(-scale, 0.0),
        Complex64::new(0.0, -scale),
    ];
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| CVector::new((0..d).map(|x| quarter[exp(a, b, x) as usize & 3]).collect()))
                .collect()
        })
        .collect()
}

/// Odd characteristic: component of |A,a⟩ at field point x is
/// ω_p^{tr(A·x² + a·x)} / √d.
fn odd_prime_power_bases(d: usize) -> Result<Vec<Vec<CVector>>> {
    let (p, n) = prime_power_decompose(d as u64).ok_or(Error::UnsupportedDimension(d))?;
    debug_assert!(p % 2 == 1, "even characteristic uses embedded tables");
    let field = FieldSpec::new(p, n)?;
    let scale = 1.0 / (d as f64).sqrt();
    let bases = (0..d as u64)
        .map(|a_basis| {
            let big_a = field.element(a_basis);
            (0..d as u64)
                .map(|a_vec| {
                    let small_a = field.element(a_vec);
                    let components = (0..d as u64)
                        .map(|xi| {
                            let x = field.element(xi);
                            let quad = field.mul(&big_a, &field.mul(&x, &x));
                            let lin = field.mul(&small_a, &x);
                            let t = field.trace(&field.add(&quad, &lin));
                            Complex64::from_polar(scale, TAU * t as f64 / p as f64)
                        })
                        .collect();
                    CVector::new(components)
                })
                .collect()
        })
        .collect();
    Ok(bases)
}

/// Check orthonormality within each basis and unbiasedness across bases.
pub fn verify_mub(f: &MubFamily, tol: f64) -> ProtocolReport {
    let d = f.d();
    let target = 1.0 / d as f64;

    let mut orth = ProtocolReport::new("mub_orthonormality", d).with_tolerance(tol);
    for a in 0..=d {
        for i in 0..d {
            for j in i..d {
                let ip = inner(f.vector(a, i), f.vector(a, j)).expect("family is rectangular");
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                let dev = (ip - expected).norm();
                orth.observe(dev, tol, || {
                    Witness::new(
                        &[("A", a as u64), ("a", i as u64), ("a2", j as u64)],
                        "inner product within a basis is off",
                    )
                    .with_values(ip.norm(), expected.re)
                });
            }
        }
    }

    let mut unb = ProtocolReport::new("mub_unbiasedness", d).with_tolerance(tol);
    for a in 0..=d {
        for i in 0..d {
            for b in a + 1..=d {
                for j in 0..d {
                    let ip = inner(f.vector(a, i), f.vector(b, j)).expect("family is rectangular");
                    let overlap = ip.norm_sqr();
                    unb.observe((overlap - target).abs(), tol, || {
                        Witness::new(
                            &[("A", a as u64), ("a", i as u64), ("A2", b as u64), ("a2", j as u64)],
                            "squared cross-basis overlap is not 1/d",
                        )
                        .with_values(overlap, target)
                    });
                }
            }
        }
    }

    let mut report = ProtocolReport::new("mub", d).with_tolerance(tol);
    report.push_child(orth);
    report.push_child(unb);
    report
}

#[derive(Serialize, Deserialize)]
struct MubDocument {
    #[serde(default = "crate::report::document_schema")]
    schema: u32,
    dimension: usize,
    /// Components as [re, im] pairs, basis-major then vector-major.
    bases: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Write a family as a JSON document; doubles round-trip exactly.
pub fn save_mub<W: io::Write>(f: &MubFamily, mut sink: W) -> Result<()> {
    let doc = MubDocument {
        schema: crate::report::REPORT_SCHEMA,
        dimension: f.d(),
        bases: f
            .bases
            .iter()
            .map(|basis| {
                basis
                    .iter()
                    .map(|v| v.components().iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut sink, &doc).map_err(crate::error::json_io)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Read a family back and attach a fresh verification report.
///
/// A family that fails verification still loads — the caller decides what
/// near-unbiased families are good for (e.g. degradation experiments).
pub fn load_mub<R: io::Read>(source: R) -> Result<(MubFamily, ProtocolReport)> {
    let doc: MubDocument =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    let d = doc.dimension;
    if d < 2 {
        return Err(Error::Shape(format!("dimension {d} is too small")));
    }
    if doc.bases.len() != d + 1 {
        return Err(Error::Shape(format!(
            "expected {} bases for dimension {d}, got {}",
            d + 1,
            doc.bases.len()
        )));
    }
    let mut bases = Vec::with_capacity(d + 1);
    for (a, basis) in doc.bases.iter().enumerate() {
        if basis.len() != d {
            return Err(Error::Shape(format!(
                "basis {a} has {} vectors, expected {d}",
                basis.len()
            )));
        }
        let mut vectors = Vec::with_capacity(d);
        for (i, comps) in basis.iter().enumerate() {
            if comps.len() != d {
                return Err(Error::Shape(format!(
                    "vector {i} of basis {a} has {} components, expected {d}",
                    comps.len()
                )));
            }
            vectors.push(CVector::new(
                comps.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            ));
        }
        bases.push(vectors);
    }
    let family = MubFamily::from_bases(bases)?;
    let report = verify_mub(&family, DEFAULT_TOLERANCE);
    Ok((family, report))
}

// Exponent tables for the even prime powers: component x of vector b of
// basis a is i^e / √d. Frozen from the Galois-ring quadratic construction
// over GR(4,n) and re-verified against the unbiasedness conditions by
// `build_mub` on every call (and bit-for-bit by the tests).
const MUB4_EXPONENTS: [[[u8; 4]; 4]; 4] = [
    [
        [0, 0, 0, 0],
        [0, 0, 2, 2],
        [0, 2, 2, 0],
        [0, 2, 0, 2],
    ],
    [
        [0, 2, 3, 3],
        [0, 2, 1, 1],
        [0, 0, 1, 3],
        [0, 0, 3, 1],
    ],
    [
        [0, 3, 3, 2],
        [0, 3, 1, 0],
        [0, 1, 1, 2],
        [0, 1, 3, 0],
    ],
    [
        [0, 3, 2, 3],
        [0, 3, 0, 1],
        [0, 1, 0, 3],
        [0, 1, 2, 1],
    ],
];

const MUB8_EXPONENTS: [[[u8; 8]; 8]; 8] = [
    [
        [0, 0, 0, 0, 0, 0, 0, 0],
        [0, 2, 0, 0, 2, 0, 2, 2],
        [0, 0, 0, 2, 0, 2, 2, 2],
        [0, 0, 2, 0, 2, 2, 2, 0],
        [0, 2, 0, 2, 2, 2, 0, 0],
        [0, 0, 2, 2, 2, 0, 0, 2],
        [0, 2, 2, 2, 0, 0, 2, 0],
        [0, 2, 2, 0, 0, 2, 0, 2],
    ],
    [
        [0, 3, 2, 2, 1, 2, 1, 1],
        [0, 1, 2, 2, 3, 2, 3, 3],
        [0, 3, 2, 0, 1, 0, 3, 3],
        [0, 3, 0, 2, 3, 0, 3, 1],
        [0, 1, 2, 0, 3, 0, 1, 1],
        [0, 3, 0, 0, 3, 2, 1, 3],
        [0, 1, 0, 0, 1, 2, 3, 1],
        [0, 1, 0, 2, 1, 0, 1, 3],
    ],
    [
        [0, 2, 2, 1, 2, 1, 1, 3],
        [0, 0, 2, 1, 0, 1, 3, 1],
        [0, 2, 2, 3, 2, 3, 3, 1],
        [0, 2, 0, 1, 0, 3, 3, 3],
        [0, 0, 2, 3, 0, 3, 1, 3],
        [0, 2, 0, 3, 0, 1, 1, 1],
        [0, 0, 0, 3, 2, 1, 3, 3],
        [0, 0, 0, 1, 2, 3, 1, 1],
    ],
    [
        [0, 2, 1, 2, 1, 1, 3, 2],
        [0, 0, 1, 2, 3, 1, 1, 0],
        [0, 2, 1, 0, 1, 3, 1, 0],
        [0, 2, 3, 2, 3, 3, 1, 2],
        [0, 0, 1, 0, 3, 3, 3, 2],
        [0, 2, 3, 0, 3, 1, 3, 0],
        [0, 0, 3, 0, 1, 1, 1, 2],
        [0, 0, 3, 2, 1, 3, 3, 0],
    ],
    [
        [0, 1, 2, 1, 1, 3, 2, 2],
        [0, 3, 2, 1, 3, 3, 0, 0],
        [0, 1, 2, 3, 1, 1, 0, 0],
        [0, 1, 0, 1, 3, 1, 0, 2],
        [0, 3, 2, 3, 3, 1, 2, 2],
        [0, 1, 0, 3, 3, 3, 2, 0],
        [0, 3, 0, 3, 1, 3, 0, 2],
        [0, 3, 0, 1, 1, 1, 2, 0],
    ],
    [
        [0, 2, 1, 1, 3, 2, 2, 1],
        [0, 0, 1, 1, 1, 2, 0, 3],
        [0, 2, 1, 3, 3, 0, 0, 3],
        [0, 2, 3, 1, 1, 0, 0, 1],
        [0, 0, 1, 3, 1, 0, 2, 1],
        [0, 2, 3, 3, 1, 2, 2, 3],
        [0, 0, 3, 3, 3, 2, 0, 1],
        [0, 0, 3, 1, 3, 0, 2, 3],
    ],
    [
        [0, 1, 1, 3, 2, 2, 1, 2],
        [0, 3, 1, 3, 0, 2, 3, 0],
        [0, 1, 1, 1, 2, 0, 3, 0],
        [0, 1, 3, 3, 0, 0, 3, 2],
        [0, 3, 1, 1, 0, 0, 1, 2],
        [0, 1, 3, 1, 0, 2, 1, 0],
        [0, 3, 3, 1, 2, 2, 3, 2],
        [0, 3, 3, 3, 2, 0, 1, 0],
    ],
    [
        [0, 1, 3, 2, 2, 1, 2, 1],
        [0, 3, 3, 2, 0, 1, 0, 3],
        [0, 1, 3, 0, 2, 3, 0, 3],
        [0, 1, 1, 2, 0, 3, 0, 1],
        [0, 3, 3, 0, 0, 3, 2, 1],
        [0, 1, 1, 0, 0, 1, 2, 3],
        [0, 3, 1, 0, 2, 1, 0, 1],
        [0, 3, 1, 2, 2, 3, 2, 3],
    ],
];
