//! The retrodiction protocol: a maximally entangled state shared with the
//! measuring party, the post-measurement states |conj(A,a)⟩⊗|A,a⟩, the
//! retrodiction basis built from a striation table, the conditions that
//! make the estimate correct with probability one, a Born-rule simulator,
//! and the product construction for composite dimensions.

use crate::designs::{build_striations, verify_mols, StriationTable};
use crate::linalg::{conj_reference, gram, identity_deviation, inner, tensor, CVector};
use crate::mub::{build_mub, verify_mub, MubFamily};
use crate::report::{ProtocolReport, Witness};
use crate::{Error, Result, DEFAULT_TOLERANCE};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Raw retrodiction vectors whose Gram matrix deviates from the identity
/// by more than this are re-orthonormalized before simulation.
const ORTHO_TRIGGER: f64 = 1e-9;

/// The shared state (1/√d) Σ_k |k⟩⊗|k⟩ in C^{d²}.
#[derive(Clone, Debug)]
pub struct EntangledState {
    d: usize,
    vector: CVector,
}

impl EntangledState {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    /// Re-express the state through an orthonormal basis {v_a}:
    /// (1/√d) Σ_a conj(v_a) ⊗ v_a, which must reproduce the state itself.
    pub fn expansion_in_basis(&self, basis: &[CVector]) -> Result<CVector> {
        let dim = self.d * self.d;
        let mut acc = CVector::zeros(dim);
        for v in basis {
            acc = acc.add(&tensor(&conj_reference(v), v))?;
        }
        Ok(acc.scale(Complex64::new(1.0 / (self.d as f64).sqrt(), 0.0)))
    }
}

/// Exact components: 1/√d at positions k·d + k, zero elsewhere.
pub fn build_entangled(d: usize) -> EntangledState {
    assert!(d >= 2, "entangled state needs dimension at least 2");
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut data = vec![Complex64::ZERO; d * d];
    for k in 0..d {
        data[k * d + k] = amp;
    }
    EntangledState { d, vector: CVector::new(data) }
}

/// The d+1 × d states |conj(A,a)⟩ ⊗ |A,a⟩ the protocol collapses to.
#[derive(Clone, Debug)]
pub struct PostMeasurementSet {
    d: usize,
    states: Vec<Vec<CVector>>,
}

impl PostMeasurementSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn states(&self) -> &[Vec<CVector>] {
        &self.states
    }

    pub fn state(&self, basis: usize, outcome: usize) -> &CVector {
        &self.states[basis][outcome]
    }

    /// All states flattened in (basis, outcome) order.
    pub fn flattened(&self) -> Vec<CVector> {
        self.states.iter().flatten().cloned().collect()
    }
}

fn post_states(bases: &[Vec<CVector>]) -> Vec<Vec<CVector>> {
    bases
        .iter()
        .map(|basis| basis.iter().map(|v| tensor(&conj_reference(v), v)).collect())
        .collect()
}

/// Build the post-measurement states of a family, rejecting one that is
/// not mutually unbiased.
pub fn post_measurement(f: &MubFamily) -> Result<PostMeasurementSet> {
    let report = verify_mub(f, DEFAULT_TOLERANCE);
    if !report.pass {
        return Err(Error::InvalidFamily(Box::new(report)));
    }
    Ok(PostMeasurementSet { d: f.d(), states: post_states(f.bases()) })
}

/// Alice's measurement: d² vectors in C^{d²} plus the estimate table that
/// turns her click I and the announced basis A into the guess s(I,A).
#[derive(Clone, Debug)]
pub struct KingBasis {
    d: usize,
    vectors: Vec<CVector>,
    estimate: StriationTable,
}

impl KingBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &CVector {
        &self.vectors[i]
    }

    pub fn estimate(&self) -> &StriationTable {
        &self.estimate
    }
}

/// |I⟩ = (1/√d) Σ_A |Φ_{A, s(I,A)}⟩ − |Φ⟩, no validity gating.
fn alice_vectors(d: usize, post: &[Vec<CVector>], t: &StriationTable) -> Vec<CVector> {
    let phi = build_entangled(d);
    let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    (0..d * d)
        .map(|i| {
            let mut acc = CVector::zeros(d * d);
            for basis in 0..=d {
                acc = acc
                    .add(&post[basis][usize::from(t.s(i, basis))])
                    .expect("post states share the composite dimension");
            }
            acc.scale(scale).sub(phi.vector()).expect("same dimension")
        })
        .collect()
}

/// Build the retrodiction basis, rejecting an invalid family or a table
/// whose striations are not pairwise orthogonal (without that property
/// the vectors cannot be orthonormal).
pub fn build_alice_basis(f: &MubFamily, t: &StriationTable) -> Result<KingBasis> {
    if f.d() != t.d() {
        return Err(Error::DimMismatch { left: f.d(), right: t.d() });
    }
    let family_report = verify_mub(f, DEFAULT_TOLERANCE);
    if !family_report.pass {
        return Err(Error::InvalidFamily(Box::new(family_report)));
    }
    let table_report = verify_mols(t);
    if !table_report.pass {
        return Err(Error::InvalidTable(Box::new(table_report)));
    }
    let vectors = alice_vectors(f.d(), &post_states(f.bases()), t);
    Ok(KingBasis { d: f.d(), vectors, estimate: t.clone() })
}

/// Verify the three success-probability-1 conditions for a family/table
/// pair: the estimate-overlap rule ⟨Φ_{A,a}|I⟩ = δ_{a,s(I,A)}/√d, the
/// orthonormality of the retrodiction vectors, and the completeness of
/// Σ_I |I⟩⟨I| tested against the post-measurement set.
///
/// The family must be valid; the table may be arbitrary — a bad table is
/// reported as a failure, not an error.
pub fn verify_solution(f: &MubFamily, t: &StriationTable, tol: f64) -> Result<ProtocolReport> {
    if f.d() != t.d() {
        return Err(Error::DimMismatch { left: f.d(), right: t.d() });
    }
    let family_report = verify_mub(f, DEFAULT_TOLERANCE);
    if !family_report.pass {
        return Err(Error::InvalidFamily(Box::new(family_report)));
    }
    let d = f.d();
    let points = d * d;
    let post = post_states(f.bases());
    let vectors = alice_vectors(d, &post, t);
    let scale = 1.0 / (d as f64).sqrt();

    // Overlap of every retrodiction vector with every post-measurement
    // state; the protocol succeeds exactly when the off-estimate overlaps
    // vanish. This condition holds for any integer table — violations of a
    // bad table surface in the two later checks.
    let mut overlap_child = ProtocolReport::new("estimate_overlap", d).with_tolerance(tol);
    let branches = (d + 1) * d;
    let mut overlaps = vec![vec![Complex64::ZERO; points]; branches];
    for basis in 0..=d {
        for outcome in 0..d {
            for i in 0..points {
                let ip = inner(&post[basis][outcome], &vectors[i]).expect("same dimension");
                overlaps[basis * d + outcome][i] = ip;
                let expected = if usize::from(t.s(i, basis)) == outcome { scale } else { 0.0 };
                overlap_child.observe((ip - expected).norm(), tol, || {
                    Witness::new(
                        &[("A", basis as u64), ("a", outcome as u64), ("I", i as u64)],
                        "retrodiction-vector overlap with a post-measurement state",
                    )
                    .with_values(ip.norm(), expected)
                });
            }
        }
    }

    let mut orth_child = ProtocolReport::new("orthonormality", d).with_tolerance(tol);
    let g = gram(&vectors).expect("rectangular vector set");
    for r in 0..points {
        for c in r..points {
            let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
            let dev = (g.get(r, c) - expected).norm();
            orth_child.observe(dev, tol, || {
                Witness::new(
                    &[("I", r as u64), ("I2", c as u64)],
                    "inner product of two retrodiction vectors",
                )
                .with_values(g.get(r, c).norm(), expected.re)
            });
        }
    }

    // Resolution test: Σ_I ⟨Φ_b|I⟩⟨I|Φ_b'⟩ must reproduce ⟨Φ_b|Φ_b'⟩ on
    // the complete post-measurement set, i.e. Σ_I |I⟩⟨I| acts as the
    // identity there.
    let mut complete_child = ProtocolReport::new("completeness", d).with_tolerance(tol);
    for b in 0..branches {
        for b2 in b..branches {
            let mut resolved = Complex64::ZERO;
            for i in 0..points {
                resolved += overlaps[b][i] * overlaps[b2][i].conj();
            }
            let direct = inner(&post[b / d][b % d], &post[b2 / d][b2 % d]).expect("same dimension");
            complete_child.observe((resolved - direct).norm(), tol, || {
                Witness::new(
                    &[
                        ("A", (b / d) as u64),
                        ("a", (b % d) as u64),
                        ("A2", (b2 / d) as u64),
                        ("a2", (b2 % d) as u64),
                    ],
                    "resolution of the identity over retrodiction vectors",
                )
                .with_values(resolved.norm(), direct.norm())
            });
        }
    }

    let mut report = ProtocolReport::new("solution", d).with_tolerance(tol);
    report.push_child(overlap_child);
    report.push_child(orth_child);
    report.push_child(complete_child);
    Ok(report)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn pick(cdf: &[f64], r: f64) -> usize {
    cdf.iter().position(|&c| r < c).unwrap_or(cdf.len() - 1)
}

/// Gram–Schmidt in index order; slots that collapse to (numerical) zero
/// are replenished from the standard basis so the result is always a
/// complete orthonormal measurement.
fn orthonormalize(raw: &[CVector]) -> Vec<CVector> {
    let dim = raw.first().map_or(0, CVector::dim);
    let mut kept: Vec<CVector> = Vec::with_capacity(raw.len());
    let mut slots: Vec<Option<CVector>> = Vec::with_capacity(raw.len());
    let reduce = |v: &CVector, kept: &[CVector]| -> Option<CVector> {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in kept {
                let c = inner(u, &w).expect("same dimension");
                w = w.sub(&u.scale(c)).expect("same dimension");
            }
        }
        let n = w.norm();
        (n > 1e-9).then(|| w.scale(Complex64::new(1.0 / n, 0.0)))
    };
    for v in raw {
        match reduce(v, &kept) {
            Some(u) => {
                kept.push(u.clone());
                slots.push(Some(u));
            }
            None => slots.push(None),
        }
    }
    for slot in &mut slots {
        if slot.is_none() {
            let filler = (0..dim)
                .find_map(|m| reduce(&CVector::standard_basis(dim, m), &kept))
                .expect("standard basis completes any deficient set");
            kept.push(filler.clone());
            *slot = Some(filler);
        }
    }
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// Shared Born-rule engine: bases may be any shape-valid measurement
/// family and the retrodiction vectors may be non-orthonormal (they are
/// then re-orthonormalized and the report says so).
fn run_simulation(
    check: &str,
    d: usize,
    bases: &[Vec<CVector>],
    raw_alice: Vec<CVector>,
    t: &StriationTable,
    trials: u64,
    seed: u64,
) -> ProtocolReport {
    let phi = build_entangled(d);
    let post = post_states(bases);

    let raw_gram = gram(&raw_alice).expect("rectangular vector set");
    let gram_dev = identity_deviation(&raw_gram).expect("square Gram matrix");
    let reorthonormalized = gram_dev > ORTHO_TRIGGER;
    let alice = if reorthonormalized { orthonormalize(&raw_alice) } else { raw_alice };

    // Outcome distribution for each announced basis, and Alice's click
    // distribution for each collapsed state.
    let outcome_cdf: Vec<Vec<f64>> = post
        .iter()
        .map(|states| {
            let weights: Vec<f64> = states
                .iter()
                .map(|s| inner(s, phi.vector()).expect("same dimension").norm_sqr())
                .collect();
            cumulative(&weights)
        })
        .collect();

    let mut alice_cdf = Vec::with_capacity((d + 1) * d);
    let mut analytic = f64::INFINITY;
    let mut worst_branch = (0usize, 0usize);
    for basis in 0..=d {
        for outcome in 0..d {
            let weights: Vec<f64> = alice
                .iter()
                .map(|v| inner(v, &post[basis][outcome]).expect("same dimension").norm_sqr())
                .collect();
            let total: f64 = weights.iter().sum();
            let correct: f64 = weights
                .iter()
                .enumerate()
                .filter(|&(i, _)| usize::from(t.s(i, basis)) == outcome)
                .map(|(_, w)| w)
                .sum();
            let rate = correct / total;
            if rate < analytic {
                analytic = rate;
                worst_branch = (basis, outcome);
            }
            alice_cdf.push(cumulative(&weights));
        }
    }

    let mut report = ProtocolReport::new(check, d).with_tolerance(DEFAULT_TOLERANCE);
    report.observe((1.0 - analytic).max(0.0), DEFAULT_TOLERANCE, || {
        Witness::new(
            &[("A", worst_branch.0 as u64), ("a", worst_branch.1 as u64)],
            "measurement branch with the lowest correct-estimate probability",
        )
        .with_values(analytic, 1.0)
    });

    let mut successes = 0u64;
    let mut first_miss: Option<(u64, usize, usize, usize)> = None;
    for trial in 0..trials {
        // Each trial draws from its own stream, so results do not depend
        // on evaluation order.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let basis = rng.random_range(0..=d);
        let outcome = pick(&outcome_cdf[basis], rng.random::<f64>());
        let click = pick(&alice_cdf[basis * d + outcome], rng.random::<f64>());
        if usize::from(t.s(click, basis)) == outcome {
            successes += 1;
        } else if first_miss.is_none() {
            first_miss = Some((trial, basis, outcome, click));
        }
    }
    if let Some((trial, basis, outcome, click)) = first_miss {
        let missed = trials - successes;
        report.observe(missed as f64 / trials as f64, 0.0, || {
            Witness::new(
                &[
                    ("trial", trial),
                    ("A", basis as u64),
                    ("a", outcome as u64),
                    ("I", click as u64),
                ],
                "sampled estimate disagreed with the outcome",
            )
            .with_values(successes as f64, trials as f64)
        });
    }

    report.seed = Some(seed);
    report.rng = Some("chacha8".to_owned());
    report.trials = Some(trials);
    report.success_count = Some(successes);
    report.analytic_success = Some(analytic);
    report.reorthonormalized = Some(reorthonormalized);
    report
}

/// Simulate the protocol trial by trial: the measuring party draws a basis
/// uniformly and an outcome by the Born rule, the state collapses, Alice
/// measures her basis and guesses via the table. Invalid inputs are
/// permitted — degraded tables are exactly what this is for — and the
/// analytic per-branch success probability is reported alongside the
/// sampled counts.
pub fn simulate(f: &MubFamily, t: &StriationTable, trials: u64, seed: u64) -> Result<ProtocolReport> {
    if f.d() != t.d() {
        return Err(Error::DimMismatch { left: f.d(), right: t.d() });
    }
    let raw = alice_vectors(f.d(), &post_states(f.bases()), t);
    Ok(run_simulation("simulation", f.d(), f.bases(), raw, t, trials, seed))
}

/// A protocol instance on d = d1·d2 assembled from two prime-power
/// solutions. The d+1 measurement bases are tensor products paired by
/// A ↦ (A mod (d1+1), A mod (d2+1)); they are not mutually unbiased, but
/// the estimate is still correct with probability one.
#[derive(Clone, Debug)]
pub struct CompositeSolution {
    d1: usize,
    d2: usize,
    d: usize,
    bases: Vec<Vec<CVector>>,
    alice: KingBasis,
    pairing: Vec<(usize, usize)>,
}

/// Components of v1 ⊗ v2 reordered from (pair-1 space) ⊗ (pair-2 space)
/// to (Alice's composite side) ⊗ (measured composite side).
fn merge_pair_spaces(v1: &CVector, v2: &CVector, d1: usize, d2: usize) -> CVector {
    let d = d1 * d2;
    let (c1, c2) = (v1.components(), v2.components());
    let mut data = vec![Complex64::ZERO; d * d];
    for a1 in 0..d1 {
        for b1 in 0..d1 {
            for a2 in 0..d2 {
                for b2 in 0..d2 {
                    data[(a1 * d2 + a2) * d + (b1 * d2 + b2)] = c1[a1 * d1 + b1] * c2[a2 * d2 + b2];
                }
            }
        }
    }
    CVector::new(data)
}

/// Build the composite construction from canonical sub-solutions.
pub fn composite_build(d1: usize, d2: usize) -> Result<CompositeSolution> {
    let f1 = build_mub(d1)?;
    let f2 = build_mub(d2)?;
    let t1 = build_striations(d1)?;
    let t2 = build_striations(d2)?;
    let k1 = build_alice_basis(&f1, &t1)?;
    let k2 = build_alice_basis(&f2, &t2)?;
    let d = d1 * d2;

    let pairing: Vec<(usize, usize)> = (0..=d).map(|a| (a % (d1 + 1), a % (d2 + 1))).collect();
    let bases: Vec<Vec<CVector>> = pairing
        .iter()
        .map(|&(a1, a2)| {
            (0..d)
                .map(|v| tensor(f1.vector(a1, v / d2), f2.vector(a2, v % d2)))
                .collect()
        })
        .collect();

    let mut vectors = Vec::with_capacity(d * d);
    let mut rows = Vec::with_capacity(d * d);
    for i1 in 0..d1 * d1 {
        for i2 in 0..d2 * d2 {
            vectors.push(merge_pair_spaces(k1.vector(i1), k2.vector(i2), d1, d2));
            rows.push(
                pairing
                    .iter()
                    .map(|&(a1, a2)| t1.s(i1, a1) * d2 as u16 + t2.s(i2, a2))
                    .collect::<Vec<u16>>(),
            );
        }
    }
    let estimate = StriationTable::from_rows(d, &rows)?;
    let alice = KingBasis { d, vectors, estimate };
    Ok(CompositeSolution { d1, d2, d, bases, alice, pairing })
}

impl CompositeSolution {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn factors(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    /// The d+1 product measurement bases.
    pub fn bases(&self) -> &[Vec<CVector>] {
        &self.bases
    }

    pub fn alice(&self) -> &KingBasis {
        &self.alice
    }

    /// Which sub-basis pair each composite basis uses.
    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    pub fn pairing_label(&self) -> String {
        format!("A -> (A mod {}, A mod {})", self.d1 + 1, self.d2 + 1)
    }

    /// First cross-basis vector pair with squared overlap ≤ tol — proof
    /// that the product bases are not mutually unbiased.
    pub fn zero_overlap_witness(&self, tol: f64) -> Option<Witness> {
        for a in 0..=self.d {
            for a2 in a + 1..=self.d {
                for v in 0..self.d {
                    for w in 0..self.d {
                        let overlap = inner(&self.bases[a][v], &self.bases[a2][w])
                            .expect("same dimension")
                            .norm_sqr();
                        if overlap <= tol {
                            return Some(
                                Witness::new(
                                    &[
                                        ("A", a as u64),
                                        ("a", v as u64),
                                        ("A2", a2 as u64),
                                        ("a2", w as u64),
                                    ],
                                    "orthogonal cross-basis pair: the product bases are not mutually unbiased",
                                )
                                .with_values(overlap, 1.0 / self.d as f64),
                            );
                        }
                    }
                }
            }
        }
        None
    }

    /// Born-rule simulation of the composite protocol.
    pub fn simulate(&self, trials: u64, seed: u64) -> ProtocolReport {
        let mut report = run_simulation(
            "composite_simulation",
            self.d,
            &self.bases,
            self.alice.vectors().to_vec(),
            self.alice.estimate(),
            trials,
            seed,
        );
        report.basis_pairing = Some(self.pairing_label());
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rank;
    use crate::mub::SUPPORTED_DIMS;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn entangled_state_components_are_exact() {
        let s = build_entangled(2);
        let expected = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (z, &e) in s.vector().components().iter().zip(&expected) {
            assert!((z - Complex64::new(e, 0.0)).norm() <= 1e-15);
            assert_eq!(z.im, 0.0);
        }
        for d in [3usize, 5, 8] {
            let s = build_entangled(d);
            let amp = 1.0 / (d as f64).sqrt();
            for (pos, z) in s.vector().components().iter().enumerate() {
                // Diagonal entries are the literal computed amplitude and
                // everything else is exactly zero.
                let expected = if pos / d == pos % d { amp } else { 0.0 };
                assert_eq!(*z, Complex64::new(expected, 0.0), "d={d} pos={pos}");
            }
            assert!((s.vector().norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn entangled_state_expands_identically_in_every_basis() {
        let family = build_mub(3).unwrap();
        let s = build_entangled(3);
        for basis in family.bases() {
            let expanded = s.expansion_in_basis(basis).unwrap();
            for (z, w) in expanded.components().iter().zip(s.vector().components()) {
                assert!((z - w).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn post_measurement_gram_follows_the_overlap_rule() {
        let family = build_mub(3).unwrap();
        let post = post_measurement(&family).unwrap();
        let phi = build_entangled(3);
        for basis in 0..=3 {
            for a in 0..3 {
                let st = post.state(basis, a);
                assert!((inner(st, st).unwrap().re - 1.0).abs() <= 1e-12);
                let with_phi = inner(st, phi.vector()).unwrap();
                assert!((with_phi - Complex64::new(1.0 / 3f64.sqrt(), 0.0)).norm() <= 1e-12);
                for basis2 in 0..=3 {
                    for a2 in 0..3 {
                        let got = inner(st, post.state(basis2, a2)).unwrap();
                        let expected = if basis == basis2 {
                            if a == a2 {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            1.0 / 3.0
                        };
                        assert!(
                            (got - Complex64::new(expected, 0.0)).norm() <= 1e-12,
                            "({basis},{a}) vs ({basis2},{a2})"
                        );
                    }
                }
            }
        }
        let d4 = post_measurement(&build_mub(4).unwrap()).unwrap();
        let phi4 = build_entangled(4);
        let got = inner(d4.state(0, 0), phi4.vector()).unwrap();
        assert!((got - Complex64::new(0.5, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn post_measurement_rejects_a_biased_family() {
        let good = build_mub(2).unwrap();
        let mut bases = good.bases().to_vec();
        bases[1] = bases[0].clone();
        let bad = MubFamily::from_bases(bases).unwrap();
        match post_measurement(&bad) {
            Err(Error::InvalidFamily(report)) => {
                assert!(!report.pass);
                assert!(report.witness.is_some() || report.children.iter().any(|c| c.witness.is_some()));
            }
            other => panic!("expected InvalidFamily, got {other:?}"),
        }
    }

    #[test]
    fn alice_vectors_hit_the_golden_overlap_value() {
        let family = build_mub(3).unwrap();
        let table = build_striations(3).unwrap();
        let alice = build_alice_basis(&family, &table).unwrap();
        let post = post_measurement(&family).unwrap();
        let golden = 0.577_350_269_189_625_8; // 1/√3
        for i in 0..9 {
            let v = alice.vector(i);
            assert!((inner(v, v).unwrap().re - 1.0).abs() <= 1e-12, "unit norm");
            for basis in 0..=3 {
                let hit = usize::from(table.s(i, basis));
                let ip = inner(post.state(basis, hit), v).unwrap();
                assert!((ip - Complex64::new(golden, 0.0)).norm() <= 1e-12);
            }
        }
        let d2 = build_alice_basis(&build_mub(2).unwrap(), &build_striations(2).unwrap()).unwrap();
        let g = gram(d2.vectors()).unwrap();
        assert!(identity_deviation(&g).unwrap() <= 1e-12);
    }

    #[test]
    fn solution_verifies_for_every_supported_dimension() {
        for d in SUPPORTED_DIMS {
            let family = build_mub(d).unwrap();
            let table = build_striations(d).unwrap();
            let report = verify_solution(&family, &table, 1e-10).unwrap();
            assert!(report.pass, "d={d}: {report}");
        }
    }

    #[test]
    fn corrupted_table_fails_orthonormality_not_the_overlap_rule() {
        let family = build_mub(3).unwrap();
        let table = build_striations(3).unwrap();
        let bad = table.with_entry(4, 1, (table.s(4, 1) + 1) % 3).unwrap();
        let report = verify_solution(&family, &bad, 1e-10).unwrap();
        assert!(!report.pass);
        // The overlap rule is insensitive to the table contents; the
        // breakage shows up as non-orthogonal retrodiction vectors.
        assert!(report.child("estimate_overlap").unwrap().pass);
        let orth = report.child("orthonormality").unwrap();
        assert!(!orth.pass);
        let witness = orth.witness.as_ref().unwrap();
        assert!(witness.index("I").is_some() && witness.index("I2").is_some());
        assert!(!report.child("completeness").unwrap().pass);
    }

    #[test]
    fn rank_properties_of_the_post_measurement_set() {
        for d in [2usize, 3] {
            let family = build_mub(d).unwrap();
            let table = build_striations(d).unwrap();
            let post = post_measurement(&family).unwrap();
            let alice = build_alice_basis(&family, &table).unwrap();
            let all = post.flattened();
            assert_eq!(rank(&all, 1e-8).unwrap(), d * d, "full set spans, d={d}");
            for i in 0..d * d {
                let (table_ref, post_ref) = (&table, &post);
                let reduced: Vec<CVector> = (0..=d)
                    .flat_map(|basis| {
                        (0..d)
                            .filter(move |&a| a != usize::from(table_ref.s(i, basis)))
                            .map(move |a| post_ref.state(basis, a).clone())
                    })
                    .collect();
                assert_eq!(reduced.len(), d * d - 1);
                assert_eq!(rank(&reduced, 1e-8).unwrap(), d * d - 1, "reduced set, d={d} I={i}");
                for state in &reduced {
                    assert!(inner(state, alice.vector(i)).unwrap().norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn deviations_are_invariant_under_basis_vector_phases() {
        let family = build_mub(3).unwrap();
        let table = build_striations(3).unwrap();
        let baseline = verify_solution(&family, &table, 1e-10).unwrap();
        let mut bases = family.bases().to_vec();
        bases[1][2] = bases[1][2].scale(Complex64::from_polar(1.0, 1.234));
        bases[3][0] = bases[3][0].scale(Complex64::from_polar(1.0, -0.777));
        let rephased = MubFamily::from_bases(bases).unwrap();
        let report = verify_solution(&rephased, &table, 1e-10).unwrap();
        assert!(report.pass);
        for check in ["estimate_overlap", "orthonormality", "completeness"] {
            let a = baseline.child(check).unwrap().max_deviation;
            let b = report.child(check).unwrap().max_deviation;
            assert!((a - b).abs() <= 1e-12, "{check}: {a} vs {b}");
        }
    }

    #[test]
    fn simulation_succeeds_on_every_trial_for_canonical_inputs() {
        for d in [2usize, 3] {
            let family = build_mub(d).unwrap();
            let table = build_striations(d).unwrap();
            let report = simulate(&family, &table, 2000, 7).unwrap();
            assert!(report.pass, "d={d}: {report}");
            assert_eq!(report.success_count, Some(2000));
            assert!(report.analytic_success.unwrap() >= 1.0 - 1e-12);
            assert_eq!(report.reorthonormalized, Some(false));
            assert_eq!(report.rng.as_deref(), Some("chacha8"));
            assert_eq!(report.seed, Some(7));
        }
    }

    #[test]
    fn simulation_is_bit_reproducible() {
        let family = build_mub(3).unwrap();
        let table = build_striations(3).unwrap();
        let a = simulate(&family, &table, 500, 42).unwrap();
        let b = simulate(&family, &table, 500, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn corrupted_table_degrades_the_simulation() {
        let family = build_mub(3).unwrap();
        let table = build_striations(3).unwrap();
        let bad = table.with_entry(7, 2, (table.s(7, 2) + 1) % 3).unwrap();
        let report = simulate(&family, &bad, 2000, 11).unwrap();
        assert!(!report.pass);
        assert_eq!(report.reorthonormalized, Some(true));
        let analytic = report.analytic_success.unwrap();
        assert!(analytic < 1.0 - 1e-9, "strictly below one, got {analytic}");
        assert!(report.success_count.unwrap() < 2000);
        assert!(report.witness.is_some());
    }

    #[test]
    fn analytic_success_agrees_with_verification() {
        let family = build_mub(2).unwrap();
        let table = build_striations(2).unwrap();
        let verify = verify_solution(&family, &table, 1e-10).unwrap();
        let sim = simulate(&family, &table, 100, 1).unwrap();
        assert!(verify.pass && sim.analytic_success.unwrap() >= 1.0 - 1e-12);
        let bad = table.with_entry(1, 0, 1).unwrap();
        let verify = verify_solution(&family, &bad, 1e-10).unwrap();
        let sim = simulate(&family, &bad, 100, 1).unwrap();
        assert!(!verify.pass && sim.analytic_success.unwrap() < 1.0);
    }

    #[test]
    fn composite_2_3_succeeds_without_being_unbiased() {
        let solution = composite_build(2, 3).unwrap();
        assert_eq!(solution.d(), 6);
        assert_eq!(solution.bases().len(), 7);
        for basis in solution.bases() {
            let g = gram(basis).unwrap();
            assert!(identity_deviation(&g).unwrap() <= 1e-12, "each product basis is orthonormal");
        }
        let g = gram(solution.alice().vectors()).unwrap();
        assert!(identity_deviation(&g).unwrap() <= 1e-10);

        let witness = solution.zero_overlap_witness(1e-12).expect("a zero overlap exists");
        assert_ne!(witness.index("A"), witness.index("A2"));

        let report = solution.simulate(2000, 5);
        assert!(report.pass, "{report}");
        assert_eq!(report.success_count, Some(2000));
        assert!(report.analytic_success.unwrap() >= 1.0 - 1e-12);
        assert_eq!(report.basis_pairing.as_deref(), Some("A -> (A mod 3, A mod 4)"));

        // Every estimate column is still balanced even though the columns
        // are not pairwise orthogonal.
        let estimate = solution.alice().estimate();
        for basis in 0..=6 {
            let mut counts = [0u32; 6];
            for i in 0..36 {
                counts[usize::from(estimate.s(i, basis))] += 1;
            }
            assert!(counts.iter().all(|&c| c == 6));
        }
    }

    #[test]
    fn composite_square_factors_repeat_a_pairing_but_still_succeed() {
        let solution = composite_build(2, 2).unwrap();
        assert_eq!(solution.pairing()[0], solution.pairing()[3]);
        let report = solution.simulate(1000, 3);
        assert!(report.pass, "{report}");
        assert_eq!(report.success_count, Some(1000));
        assert!(report.analytic_success.unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn composite_rejects_unsupported_factors() {
        assert!(matches!(composite_build(6, 2), Err(Error::UnsupportedDimension(6))));
        assert!(matches!(composite_build(2, 10), Err(Error::UnsupportedDimension(10))));
    }
}
