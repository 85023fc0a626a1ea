//! Striation tables: construction over F(d), exact verification as
//! mutually unbiased strings and as mutually orthogonal Latin squares, and
//! the Fourier-matrix route that ties the two together.
//!
//! A table has d² rows (points I, laid out as I = j·d + i) and d+1 columns
//! (striations A). Entry s(I,A) is the group label of point I in striation
//! A; read along a row it is character I's length-(d+1) string, read down a
//! column it is a d×d Latin square. The canonical construction sets
//! s((i,j),A) = j − A·i in F(d) for A < d and s((i,j),d) = i.

use crate::gf::{prime_power_decompose, FieldSpec};
use crate::linalg::CMatrix;
use crate::report::{ProtocolReport, Witness};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io;

/// Largest table dimension the verifiers accept (quadratic/quartic scans).
pub const MAX_DIM: usize = 64;

/// A d² × (d+1) table of group labels in 0…d−1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StriationTable {
    d: usize,
    /// Row-major: entry (I, A) at `I * (d+1) + A`.
    s: Vec<u16>,
}

impl StriationTable {
    /// Validate shape and label range; makes no claim about orthogonality.
    pub fn from_rows(d: usize, rows: &[Vec<u16>]) -> Result<Self> {
        if d < 2 || d > MAX_DIM {
            return Err(Error::Shape(format!(
                "table dimension {d} outside supported range 2..={MAX_DIM}"
            )));
        }
        if rows.len() != d * d {
            return Err(Error::Shape(format!(
                "expected {} rows for dimension {d}, got {}",
                d * d,
                rows.len()
            )));
        }
        let mut s = Vec::with_capacity(d * d * (d + 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d + 1 {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    d + 1
                )));
            }
            for (a, &label) in row.iter().enumerate() {
                if usize::from(label) >= d {
                    return Err(Error::Shape(format!(
                        "label {label} at point {i}, striation {a} outside 0..{d}"
                    )));
                }
            }
            s.extend_from_slice(row);
        }
        Ok(StriationTable { d, s })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Group label of point `point` in striation `striation`.
    ///
    /// Panics if either index is out of range, like slice indexing.
    pub fn s(&self, point: usize, striation: usize) -> u16 {
        assert!(point < self.d * self.d && striation <= self.d);
        self.s[point * (self.d + 1) + striation]
    }

    pub fn row(&self, point: usize) -> &[u16] {
        let w = self.d + 1;
        &self.s[point * w..(point + 1) * w]
    }

    pub fn to_rows(&self) -> Vec<Vec<u16>> {
        (0..self.d * self.d).map(|i| self.row(i).to_vec()).collect()
    }

    /// Copy of the table with one entry replaced — the degradation-experiment
    /// entry point.
    pub fn with_entry(&self, point: usize, striation: usize, label: u16) -> Result<Self> {
        if point >= self.d * self.d || striation > self.d {
            return Err(Error::Shape(format!(
                "entry ({point}, {striation}) outside a {}×{} table",
                self.d * self.d,
                self.d + 1
            )));
        }
        if usize::from(label) >= self.d {
            return Err(Error::Shape(format!(
                "label {label} outside 0..{}",
                self.d
            )));
        }
        let mut copy = self.clone();
        copy.s[point * (self.d + 1) + striation] = label;
        Ok(copy)
    }
}

/// Build the canonical table for a prime-power dimension:
/// s((i,j),A) = j − A·i in F(d) for A < d, and s((i,j),d) = i, with
/// points numbered I = j·d + i.
pub fn build_striations(d: usize) -> Result<StriationTable> {
    if d < 2 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let (p, n) = prime_power_decompose(d as u64).ok_or(Error::UnsupportedDimension(d))?;
    let field = FieldSpec::new(p, n)?;
    let mut rows = Vec::with_capacity(d * d);
    for j in 0..d as u64 {
        for i in 0..d as u64 {
            let (ei, ej) = (field.element(i), field.element(j));
            let mut row: Vec<u16> = (0..d as u64)
                .map(|a| {
                    let slope = field.element(a);
                    field.index(&field.sub(&ej, &field.mul(&slope, &ei))) as u16
                })
                .collect();
            row.push(i as u16);
            rows.push(row);
        }
    }
    StriationTable::from_rows(d, &rows)
}

/// Exact check that any two rows agree in exactly one position.
pub fn verify_strings(t: &StriationTable) -> ProtocolReport {
    let d = t.d();
    let points = d * d;
    let mut report = ProtocolReport::new("strings", d).with_tolerance(0.0);
    for i in 0..points {
        for i2 in i + 1..points {
            let overlap = (0..=d).filter(|&a| t.s(i, a) == t.s(i2, a)).count();
            report.observe((overlap as f64 - 1.0).abs(), 0.0, || {
                Witness::new(
                    &[("I", i as u64), ("I2", i2 as u64)],
                    "pair of strings must agree in exactly one place",
                )
                .with_values(overlap as f64, 1.0)
            });
        }
    }
    report
}

/// Exact check that every pair of striations is orthogonal: each pair of
/// group labels is realized by exactly one point. This subsumes the
/// group-size-d balance of every single column.
pub fn verify_mols(t: &StriationTable) -> ProtocolReport {
    let d = t.d();
    let points = d * d;
    let cols = d + 1;
    let mut report = ProtocolReport::new("mols", d).with_tolerance(0.0);

    // Count label pairs once per column pair, then scan in (A, a, A2, a2)
    // order so a failing report carries the lexicographically first witness.
    let mut counts: Vec<Vec<u32>> = vec![Vec::new(); cols * cols];
    for a_col in 0..cols {
        for b_col in a_col + 1..cols {
            let mut grid = vec![0u32; points];
            for i in 0..points {
                grid[usize::from(t.s(i, a_col)) * d + usize::from(t.s(i, b_col))] += 1;
            }
            counts[a_col * cols + b_col] = grid;
        }
    }
    for a_col in 0..cols {
        for a in 0..d {
            for b_col in a_col + 1..cols {
                for a2 in 0..d {
                    let c = counts[a_col * cols + b_col][a * d + a2];
                    report.observe((f64::from(c) - 1.0).abs(), 0.0, || {
                        Witness::new(
                            &[
                                ("A", a_col as u64),
                                ("a", a as u64),
                                ("A2", b_col as u64),
                                ("a2", a2 as u64),
                            ],
                            "group pair must meet in exactly one point",
                        )
                        .with_values(f64::from(c), 1.0)
                    });
                }
            }
        }
    }
    report
}

/// The d² × d² Fourier matrix U of a table: U_{J,I} = ω^{α·s(I,A)} / d
/// with ω = e^{2πi/d}, rows ordered J = (0,0) first, then (A, α) for
/// A = 0…d, α = 1…d−1 lexicographically.
///
/// U†U = 1 restates the strings condition and UU† = 1 the orthogonality
/// condition, which is what [`verify_equivalence`] exploits.
pub fn fourier_matrix(t: &StriationTable) -> CMatrix {
    let d = t.d();
    let points = d * d;
    let scale = 1.0 / d as f64;
    let roots: Vec<Complex64> = (0..d)
        .map(|e| Complex64::from_polar(scale, TAU * e as f64 / d as f64))
        .collect();
    let mut u = CMatrix::zeros(points, points);
    for i in 0..points {
        u.set(0, i, roots[0]);
    }
    let mut row = 1;
    for a_col in 0..=d {
        for alpha in 1..d {
            for i in 0..points {
                u.set(row, i, roots[(alpha * usize::from(t.s(i, a_col))) % d]);
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, points);
    u
}

fn identity_deviation_argmax(m: &CMatrix) -> (f64, usize, usize) {
    let mut worst = (0.0f64, 0usize, 0usize);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
            let dev = (m.get(r, c) - expected).norm();
            if dev > worst.0 {
                worst = (dev, r, c);
            }
        }
    }
    worst
}

/// Run the strings check, the orthogonality check, and both Fourier
/// unitarity checks, and confirm the three routes reach the same verdict.
///
/// The `consistent` flag records the agreement; a disagreement (which the
/// equivalence theorem rules out for exact tables, up to tolerance) fails
/// the report even if some individual route passed.
pub fn verify_equivalence(t: &StriationTable, tol: f64) -> ProtocolReport {
    let d = t.d();
    let strings = verify_strings(t);
    let mols = verify_mols(t);

    let u = fourier_matrix(t);
    let dagger = u.dagger();
    let left_product = dagger.mul(&u).expect("square factors");
    let right_product = u.mul(&dagger).expect("square factors");

    let mut left = ProtocolReport::new("fourier_u_dagger_u", d).with_tolerance(tol);
    let (dev, r, c) = identity_deviation_argmax(&left_product);
    left.observe(dev, tol, || {
        Witness::new(
            &[("I", r as u64), ("I2", c as u64)],
            "entry of U†U deviates from the identity",
        )
        .with_values(dev, 0.0)
    });

    let mut right = ProtocolReport::new("fourier_uu_dagger", d).with_tolerance(tol);
    let (dev, r, c) = identity_deviation_argmax(&right_product);
    right.observe(dev, tol, || {
        Witness::new(
            &[("J", r as u64), ("J2", c as u64)],
            "entry of UU† deviates from the identity",
        )
        .with_values(dev, 0.0)
    });

    let consistent = strings.pass == left.pass
        && mols.pass == right.pass
        && strings.pass == mols.pass;

    let mut report = ProtocolReport::new("equivalence", d).with_tolerance(tol);
    report.push_child(strings);
    report.push_child(mols);
    report.push_child(left);
    report.push_child(right);
    report.consistent = Some(consistent);
    if !consistent {
        report.pass = false;
        if report.witness.is_none() {
            report.witness = Some(Witness::new(
                &[],
                "verification routes disagree on the verdict",
            ));
        }
    }
    report
}

#[derive(Serialize, Deserialize)]
struct StriationDocument {
    #[serde(default = "crate::report::document_schema")]
    schema: u32,
    dimension: usize,
    table: Vec<Vec<u16>>,
}

/// Write a table as a JSON document.
pub fn save_striations<W: io::Write>(t: &StriationTable, mut sink: W) -> Result<()> {
    let doc = StriationDocument {
        schema: crate::report::REPORT_SCHEMA,
        dimension: t.d(),
        table: t.to_rows(),
    };
    serde_json::to_writer_pretty(&mut sink, &doc).map_err(crate::error::json_io)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Read a table back, validating shape and label range only.
pub fn load_striations<R: io::Read>(source: R) -> Result<StriationTable> {
    let doc: StriationDocument =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    StriationTable::from_rows(doc.dimension, &doc.table)
}

fn label_glyphs(row: &[u16], d: usize, out: &mut String) {
    if d <= 10 {
        for &v in row {
            let _ = write!(out, "{v}");
        }
    } else {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
    }
}

/// One line per point: the table read as d² strings.
pub fn render_strings(t: &StriationTable) -> String {
    let mut out = String::new();
    for i in 0..t.d() * t.d() {
        label_glyphs(t.row(i), t.d(), &mut out);
        out.push('\n');
    }
    out
}

/// One d×d block per striation: entry (row j, column i) is s(j·d+i, A).
pub fn render_squares(t: &StriationTable) -> String {
    let d = t.d();
    let mut out = String::new();
    for a in 0..=d {
        if a > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "A={a}");
        for j in 0..d {
            let row: Vec<u16> = (0..d).map(|i| t.s(j * d + i, a)).collect();
            label_glyphs(&row, d, &mut out);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CANONICAL_DIMS: [usize; 7] = [2, 3, 4, 5, 7, 8, 9];

    /// The nine length-4 strings of the canonical d=3 table, I = 3j + i.
    const GOLDEN_D3: [[u16; 4]; 9] = [
        [0, 0, 0, 0],
        [0, 2, 1, 1],
        [0, 1, 2, 2],
        [1, 1, 1, 0],
        [1, 0, 2, 1],
        [1, 2, 0, 2],
        [2, 2, 2, 0],
        [2, 1, 0, 1],
        [2, 0, 1, 2],
    ];

    #[test]
    fn canonical_d3_table_is_golden() {
        let t = build_striations(3).unwrap();
        for (i, row) in GOLDEN_D3.iter().enumerate() {
            assert_eq!(t.row(i), row, "point {i}");
        }
    }

    #[test]
    fn canonical_d2_rows() {
        let t = build_striations(2).unwrap();
        assert_eq!(t.row(0), &[0, 0, 0]);
        assert_eq!(t.row(1), &[0, 1, 1]);
        assert_eq!(t.row(2), &[1, 1, 0]);
        assert_eq!(t.row(3), &[1, 0, 1]);
    }

    #[test]
    fn canonical_tables_pass_both_exact_checks() {
        for d in CANONICAL_DIMS {
            let t = build_striations(d).unwrap();
            let strings = verify_strings(&t);
            let mols = verify_mols(&t);
            assert!(strings.pass && strings.max_deviation == 0.0, "d={d}: {strings}");
            assert!(mols.pass && mols.max_deviation == 0.0, "d={d}: {mols}");
        }
    }

    #[test]
    fn non_prime_power_dimensions_are_rejected() {
        for d in [0, 1, 6, 10, 12, 65] {
            assert!(matches!(
                build_striations(d),
                Err(Error::UnsupportedDimension(got)) if got == d
            ));
        }
    }

    #[test]
    fn duplicated_row_fails_strings_with_full_overlap() {
        let t = build_striations(3).unwrap();
        let mut rows = t.to_rows();
        rows[4] = rows[2].clone();
        let bad = StriationTable::from_rows(3, &rows).unwrap();
        let report = verify_strings(&bad);
        assert!(!report.pass);
        // The copy agrees with every other row exactly where the original
        // did, so the lone violation is the duplicate pair itself, which
        // overlaps in all d+1 places.
        let witness = report.witness.as_ref().unwrap();
        assert_eq!(witness.index("I"), Some(2));
        assert_eq!(witness.index("I2"), Some(4));
        assert_eq!(witness.observed, Some(4.0));
    }

    #[test]
    fn copied_column_fails_mols_at_first_label_pair() {
        let t = build_striations(3).unwrap();
        let mut rows = t.to_rows();
        for row in &mut rows {
            row[1] = row[0];
        }
        let bad = StriationTable::from_rows(3, &rows).unwrap();
        let report = verify_mols(&bad);
        assert!(!report.pass);
        let witness = report.witness.as_ref().unwrap();
        assert_eq!(witness.index("A"), Some(0));
        assert_eq!(witness.index("a"), Some(0));
        assert_eq!(witness.index("A2"), Some(1));
        assert_eq!(witness.index("a2"), Some(0));
        assert_eq!(witness.observed, Some(3.0));
    }

    #[test]
    fn random_tables_fail_with_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let rows: Vec<Vec<u16>> = (0..9)
                .map(|_| (0..4).map(|_| rng.random_range(0..3u16)).collect())
                .collect();
            let t = StriationTable::from_rows(3, &rows).unwrap();
            let report = verify_mols(&t);
            assert!(!report.pass);
            assert!(report.witness.is_some());
        }
    }

    #[test]
    fn fourier_matrix_shape_and_moduli() {
        for d in [2, 3, 5] {
            let t = build_striations(d).unwrap();
            let u = fourier_matrix(&t);
            assert_eq!((u.rows(), u.cols()), (d * d, d * d));
            let scale = 1.0 / d as f64;
            for i in 0..d * d {
                assert_eq!(u.get(0, i), Complex64::new(scale, 0.0), "constant first row");
            }
            for r in 0..d * d {
                for c in 0..d * d {
                    assert!((u.get(r, c).norm() - scale).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn fourier_matrix_is_unitary_for_canonical_tables() {
        let u2 = fourier_matrix(&build_striations(2).unwrap());
        assert!(is_unitary(&u2, 1e-12).unwrap());
        let u3 = fourier_matrix(&build_striations(3).unwrap());
        assert!(is_unitary(&u3, 1e-10).unwrap());
    }

    #[test]
    fn equivalence_routes_agree_on_canonical_and_corrupted_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 3] {
            let t = build_striations(d).unwrap();
            let report = verify_equivalence(&t, 1e-10);
            assert!(report.pass, "d={d}: {report}");
            assert_eq!(report.consistent, Some(true));

            for _ in 0..100 {
                let point = rng.random_range(0..d * d);
                let striation = rng.random_range(0..=d);
                let old = t.s(point, striation);
                let shift = rng.random_range(1..d as u16);
                let label = (old + shift) % d as u16;
                let bad = t.with_entry(point, striation, label).unwrap();
                let report = verify_equivalence(&bad, 1e-10);
                assert!(!report.pass);
                assert_eq!(report.consistent, Some(true), "routes must still agree");
                for check in ["strings", "mols", "fourier_u_dagger_u", "fourier_uu_dagger"] {
                    let child = report.child(check).unwrap();
                    assert!(!child.pass, "d={d} {check} should fail: {child}");
                }
                // A one-entry corruption perturbs the Fourier products by
                // at least 1/d² in some entry.
                let fourier = report.child("fourier_uu_dagger").unwrap();
                assert!(fourier.max_deviation >= 0.9 / (d * d) as f64);
            }
        }
    }

    #[test]
    fn relabeling_one_column_preserves_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [3usize, 4] {
            let t = build_striations(d).unwrap();
            for _ in 0..10 {
                let striation = rng.random_range(0..=d);
                let mut perm: Vec<u16> = (0..d as u16).collect();
                for k in (1..d).rev() {
                    perm.swap(k, rng.random_range(0..=k));
                }
                let mut rows = t.to_rows();
                for row in &mut rows {
                    row[striation] = perm[usize::from(row[striation])];
                }
                let relabeled = StriationTable::from_rows(d, &rows).unwrap();
                assert!(verify_strings(&relabeled).pass);
                assert!(verify_mols(&relabeled).pass);
            }
        }
    }

    #[test]
    fn document_round_trips() {
        let t = build_striations(4).unwrap();
        let mut buffer = Vec::new();
        save_striations(&t, &mut buffer).unwrap();
        let loaded = load_striations(buffer.as_slice()).unwrap();
        assert_eq!(loaded, t);
    }

    #[test]
    fn document_errors_are_classified() {
        let t = build_striations(2).unwrap();
        let mut buffer = Vec::new();
        save_striations(&t, &mut buffer).unwrap();

        let mut truncated = buffer.clone();
        truncated.truncate(buffer.len() / 2);
        assert!(matches!(load_striations(truncated.as_slice()), Err(Error::Parse(_))));

        let mut doc: serde_json::Value = serde_json::from_slice(&buffer).unwrap();
        doc["table"][0][1] = serde_json::json!(7);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(load_striations(text.as_bytes()), Err(Error::Shape(_))));
    }

    #[test]
    fn with_entry_validates_coordinates_and_label() {
        let t = build_striations(2).unwrap();
        assert!(t.with_entry(0, 0, 1).is_ok());
        assert!(t.with_entry(4, 0, 1).is_err());
        assert!(t.with_entry(0, 3, 1).is_err());
        assert!(t.with_entry(0, 0, 2).is_err());
    }

    #[test]
    fn renders_match_golden_layout() {
        let t = build_striations(3).unwrap();
        let strings = render_strings(&t);
        assert_eq!(
            strings,
            "0000\n0211\n0122\n1110\n1021\n1202\n2220\n2101\n2012\n"
        );
        let squares = render_squares(&t);
        assert_eq!(
            squares,
            "A=0\n000\n111\n222\n\nA=1\n021\n102\n210\n\nA=2\n012\n120\n201\n\nA=3\n012\n012\n012\n"
        );
    }
}
