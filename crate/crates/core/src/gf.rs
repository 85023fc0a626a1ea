//! Exact arithmetic in GF(p^n).
//!
//! Elements are polynomials over GF(p) reduced by a fixed monic irreducible
//! modulus, stored constant-term first. Every element also has a canonical
//! integer index `Σ coeffs[k]·p^k`, which is what the striation and basis
//! builders pass around.

use crate::{Error, Result};

/// Largest field order `p^n` the constructor accepts.
pub const MAX_ORDER: u64 = 1 << 16;

/// An immutable description of GF(p^n): characteristic, degree, and modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    p: u64,
    n: u32,
    order: u64,
    /// Monic irreducible of degree `n`, constant term first, length `n+1`.
    modulus: Vec<u64>,
}

/// One element of a field, as coefficients mod p (constant term first).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    coeffs: Vec<u64>,
}

impl FieldSpec {
    /// Build GF(p^n). The modulus is the lexicographically smallest monic
    /// irreducible of degree n, comparing coefficient lists constant term
    /// first; for n = 1 that is the polynomial x.
    pub fn new(p: u64, n: u32) -> Result<Self> {
        assert!(n >= 1, "extension degree must be at least 1");
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let order = p
            .checked_pow(n)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(Error::DegreeTooLarge { p, n, bound: MAX_ORDER })?;
        let modulus = smallest_irreducible(p, n);
        Ok(FieldSpec { p, n, order, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Element with canonical index `i` (base-p digits become coefficients).
    ///
    /// # Panics
    /// Panics if `i >= order`.
    pub fn element(&self, i: u64) -> FieldElement {
        assert!(i < self.order, "index {i} out of range for order {}", self.order);
        let mut coeffs = vec![0; self.n as usize];
        let mut rest = i;
        for c in coeffs.iter_mut() {
            *c = rest % self.p;
            rest /= self.p;
        }
        FieldElement { coeffs }
    }

    pub fn index(&self, x: &FieldElement) -> u64 {
        self.check(x);
        x.coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { coeffs: vec![0; self.n as usize] }
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    pub fn add(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        self.check(x);
        self.check(y);
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(&a, &b)| (a + b) % self.p)
            .collect();
        FieldElement { coeffs }
    }

    pub fn sub(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        self.add(x, &self.neg(y))
    }

    pub fn neg(&self, x: &FieldElement) -> FieldElement {
        self.check(x);
        let coeffs = x.coeffs.iter().map(|&a| (self.p - a) % self.p).collect();
        FieldElement { coeffs }
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        self.check(x);
        self.check(y);
        let n = self.n as usize;
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &a) in x.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % self.p;
            }
        }
        // Reduce by the monic modulus, top degree down.
        for deg in (n..2 * n - 1).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for j in 0..n {
                let sub = (c * self.modulus[j]) % self.p;
                prod[deg - n + j] = (prod[deg - n + j] + self.p - sub) % self.p;
            }
        }
        prod.truncate(n);
        FieldElement { coeffs: prod }
    }

    pub fn pow(&self, x: &FieldElement, e: u64) -> FieldElement {
        let mut base = x.clone();
        let mut acc = self.one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, via x^(order-2).
    pub fn inv(&self, x: &FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Err(Error::DivisionByZero { order: self.order });
        }
        Ok(self.pow(x, self.order - 2))
    }

    /// Field trace tr(x) = Σ_{k<n} x^(p^k), returned as a residue mod p.
    pub fn trace(&self, x: &FieldElement) -> u64 {
        let mut frob = x.clone();
        let mut acc = x.clone();
        for _ in 1..self.n {
            frob = self.pow(&frob, self.p);
            acc = self.add(&acc, &frob);
        }
        debug_assert!(
            acc.coeffs[1..].iter().all(|&c| c == 0),
            "trace must land in the prime subfield"
        );
        acc.coeffs[0]
    }

    fn check(&self, x: &FieldElement) {
        debug_assert_eq!(x.coeffs.len(), self.n as usize);
        debug_assert!(x.coeffs.iter().all(|&c| c < self.p));
    }
}

impl FieldElement {
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// Split d into (p, n) with p prime and p^n = d, if possible.
pub fn prime_power_decompose(d: u64) -> Option<(u64, u32)> {
    if d < 2 {
        return None;
    }
    let p = (2..=d).find(|k| d % k == 0).expect("every d >= 2 has a prime factor");
    let mut rest = d;
    let mut n = 0;
    while rest % p == 0 {
        rest /= p;
        n += 1;
    }
    (rest == 1).then_some((p, n))
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// First irreducible monic degree-n polynomial in lexicographic order
/// (constant coefficient most significant).
fn smallest_irreducible(p: u64, n: u32) -> Vec<u64> {
    let n = n as usize;
    let count = p.pow(n as u32);
    for m in 0..count {
        let mut coeffs = vec![0u64; n + 1];
        coeffs[n] = 1;
        let mut rest = m;
        for k in (0..n).rev() {
            coeffs[k] = rest % p;
            rest /= p;
        }
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("an irreducible of every degree exists over every prime field")
}

/// Trial division by every monic polynomial of degree 1..=n/2.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let n = f.len() - 1;
    if n == 1 {
        return true;
    }
    for deg in 1..=n / 2 {
        let count = p.pow(deg as u32);
        for m in 0..count {
            let mut g = vec![0u64; deg + 1];
            g[deg] = 1;
            let mut rest = m;
            for c in g.iter_mut().take(deg) {
                *c = rest % p;
                rest /= p;
            }
            if divides(&g, f, p) {
                return false;
            }
        }
    }
    true
}

/// Does monic `g` divide `f` over GF(p)?
fn divides(g: &[u64], f: &[u64], p: u64) -> bool {
    let k = g.len() - 1;
    let mut r = f.to_vec();
    for pos in (k..r.len()).rev() {
        let c = r[pos];
        if c == 0 {
            continue;
        }
        for (j, &gj) in g.iter().enumerate() {
            let sub = (c * gj) % p;
            r[pos - k + j] = (r[pos - k + j] + p - sub) % p;
        }
    }
    r.iter().all(|&c| c == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_modulus_is_x() {
        let f = FieldSpec::new(3, 1).unwrap();
        assert_eq!(f.order(), 3);
        assert_eq!(f.modulus(), &[0, 1]);
    }

    #[test]
    fn gf4_modulus_is_the_unique_irreducible_quadratic() {
        let f = FieldSpec::new(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
    }

    #[test]
    fn gf8_modulus_matches_root_free_enumeration() {
        // Degree-3 polynomials over GF(2) are reducible iff they have a root,
        // so scan candidates in lex order and freeze the first root-free one.
        let mut expected = None;
        'outer: for c0 in 0..2u64 {
            for c1 in 0..2u64 {
                for c2 in 0..2u64 {
                    let eval = |x: u64| (c0 + c1 * x + c2 * x * x + x * x * x) % 2;
                    if eval(0) != 0 && eval(1) != 0 {
                        expected = Some(vec![c0, c1, c2, 1]);
                        break 'outer;
                    }
                }
            }
        }
        let f = FieldSpec::new(2, 3).unwrap();
        assert_eq!(f.modulus(), expected.unwrap().as_slice());
    }

    #[test]
    fn rejects_composite_characteristic() {
        assert!(matches!(FieldSpec::new(4, 1), Err(Error::NotPrime(4))));
        assert!(matches!(FieldSpec::new(1, 1), Err(Error::NotPrime(1))));
    }

    #[test]
    fn rejects_oversized_order() {
        assert!(matches!(
            FieldSpec::new(2, 17),
            Err(Error::DegreeTooLarge { .. })
        ));
        // 2^16 is exactly the bound and still allowed.
        assert_eq!(FieldSpec::new(2, 16).unwrap().order(), 1 << 16);
    }

    #[test]
    fn gf3_small_ops() {
        let f = FieldSpec::new(3, 1).unwrap();
        let (one, two) = (f.element(1), f.element(2));
        assert!(f.add(&one, &two).is_zero());
        assert_eq!(f.inv(&two).unwrap(), two);
        assert_eq!(f.trace(&two), 2);
        assert!(matches!(
            f.inv(&f.zero()),
            Err(Error::DivisionByZero { order: 3 })
        ));
    }

    #[test]
    fn gf5_small_ops() {
        let f = FieldSpec::new(5, 1).unwrap();
        assert_eq!(f.index(&f.mul(&f.element(2), &f.element(3))), 1);
        assert_eq!(f.index(&f.inv(&f.element(2)).unwrap()), 3);
    }

    #[test]
    fn gf4_multiplication_inverse_trace() {
        let f = FieldSpec::new(2, 2).unwrap();
        let x = f.element(2);
        assert_eq!(f.index(&f.mul(&x, &x)), 3); // x^2 = x + 1
        assert_eq!(f.index(&f.inv(&x).unwrap()), 3);
        assert_eq!(f.trace(&x), 1); // x + x^2 = x + (x+1) = 1
        assert_eq!(f.trace(&f.zero()), 0);
    }

    #[test]
    fn index_round_trips() {
        for (p, n) in [(2, 4), (3, 2), (7, 1), (5, 2)] {
            let f = FieldSpec::new(p, n).unwrap();
            for i in 0..f.order() {
                assert_eq!(f.index(&f.element(i)), i);
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_through_order_64() {
        for (p, n) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (5, 2), (3, 3), (7, 2), (2, 6)] {
            let f = FieldSpec::new(p, n).unwrap();
            let d = f.order();
            let els: Vec<FieldElement> = (0..d).map(|i| f.element(i)).collect();
            // Precompute op tables once; the axiom loops then touch indices only.
            let add: Vec<Vec<u64>> = els
                .iter()
                .map(|x| els.iter().map(|y| f.index(&f.add(x, y))).collect())
                .collect();
            let mul: Vec<Vec<u64>> = els
                .iter()
                .map(|x| els.iter().map(|y| f.index(&f.mul(x, y))).collect())
                .collect();
            for a in 0..d as usize {
                assert_eq!(add[a][0], a as u64, "additive identity in order {d}");
                assert_eq!(mul[a][1], a as u64, "multiplicative identity in order {d}");
                if a != 0 {
                    let inv = f.index(&f.inv(&els[a]).unwrap()) as usize;
                    assert_eq!(mul[a][inv], 1, "inverse in order {d}");
                }
                for b in 0..d as usize {
                    assert_eq!(add[a][b], add[b][a]);
                    assert_eq!(mul[a][b], mul[b][a]);
                    for c in 0..d as usize {
                        assert_eq!(add[add[a][b] as usize][c], add[a][add[b][c] as usize]);
                        assert_eq!(mul[mul[a][b] as usize][c], mul[a][mul[b][c] as usize]);
                        assert_eq!(
                            mul[a][add[b][c] as usize],
                            add[mul[a][b] as usize][mul[a][c] as usize],
                            "distributivity in order {d}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn nonzero_elements_form_a_cyclic_group() {
        for (p, n) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (5, 2), (3, 3)] {
            let f = FieldSpec::new(p, n).unwrap();
            let d = f.order();
            let has_generator = (1..d).any(|i| {
                let g = f.element(i);
                let mut acc = g.clone();
                let mut order = 1;
                while f.index(&acc) != 1 {
                    acc = f.mul(&acc, &g);
                    order += 1;
                }
                order == d - 1
            });
            assert!(has_generator, "no generator found for order {d}");
        }
    }

    #[test]
    fn trace_fibers_have_size_p_to_n_minus_1() {
        for (p, n) in [(2, 2), (2, 3), (3, 2), (5, 2), (3, 3)] {
            let f = FieldSpec::new(p, n).unwrap();
            let mut fiber = vec![0u64; p as usize];
            for i in 0..f.order() {
                fiber[f.trace(&f.element(i)) as usize] += 1;
            }
            let expected = p.pow(n - 1);
            assert!(fiber.iter().all(|&c| c == expected), "GF({}^{}) fibers {fiber:?}", p, n);
        }
    }

    #[test]
    fn prime_power_decomposition() {
        assert_eq!(prime_power_decompose(8), Some((2, 3)));
        assert_eq!(prime_power_decompose(9), Some((3, 2)));
        assert_eq!(prime_power_decompose(7), Some((7, 1)));
        assert_eq!(prime_power_decompose(6), None);
        assert_eq!(prime_power_decompose(12), None);
        assert_eq!(prime_power_decompose(1), None);
        assert_eq!(prime_power_decompose(0), None);
    }

    #[test]
    fn trace_is_additive() {
        let f = FieldSpec::new(3, 2).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let (x, y) = (f.element(i), f.element(j));
                assert_eq!(
                    f.trace(&f.add(&x, &y)),
                    (f.trace(&x) + f.trace(&y)) % 3
                );
            }
        }
    }
}
