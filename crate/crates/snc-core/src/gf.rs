//! Arithmetic over the binary extension fields GF(2^w), 1 <= w <= 8.
//!
//! Addition is XOR. Multiplication runs on log/antilog tables built at
//! construction from a fixed default polynomial per width (documented below),
//! so payload fixtures are bit-exact across platforms. Table construction
//! searches for the smallest multiplicative generator instead of assuming the
//! polynomial is primitive; that keeps irreducible-but-not-primitive moduli
//! (the AES polynomial 0x11B among them) working, and the search doubles as
//! an irreducibility check: the powers of some g cover all q-1 nonzero
//! residues exactly when the quotient ring is a field.

use crate::error::{Error, Result};
use rand::Rng;
use std::fmt;

/// Smallest supported extension degree.
pub const MIN_WIDTH: u32 = 1;
/// Largest supported extension degree (symbols fit a byte).
pub const MAX_WIDTH: u32 = 8;

/// Default modulus per width, bitmask including the x^w term.
///
/// w=1: x+1, w=2: x^2+x+1, w=3: x^3+x+1, w=4: x^4+x+1, w=5: x^5+x^2+1,
/// w=6: x^6+x+1, w=7: x^7+x^3+1, w=8: x^8+x^4+x^3+x+1.
const DEFAULT_POLY: [u16; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11B];

/// One field element, value in [0, q).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u8);

impl Symbol {
    pub const ZERO: Symbol = Symbol(0);
    pub const ONE: Symbol = Symbol(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u8> for Symbol {
    fn from(v: u8) -> Self {
        Symbol(v)
    }
}

/// GF(2^w) with precomputed discrete-log tables.
#[derive(Clone, Debug)]
pub struct Field {
    w: u32,
    q: u16,
    poly: u16,
    generator: u8,
    /// log[a] = discrete log of a base `generator`, defined for a in [1, q).
    log: Vec<u16>,
    /// exp[i] = generator^(i mod (q-1)), doubled so log sums index directly.
    exp: Vec<u8>,
}

/// Carryless polynomial product modulo `poly`, no tables. Used only during
/// table construction and as the reference in tests.
fn mul_slow(mut a: u16, mut b: u16, poly: u16, w: u32) -> u16 {
    let mut acc = 0u16;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << w) != 0 {
            a ^= poly;
        }
    }
    acc
}

impl Field {
    /// Field with the default modulus for extension degree `w`.
    pub fn new(w: u32) -> Result<Field> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&w) {
            return Err(Error::parameter(format!(
                "extension degree w = {w} outside [{MIN_WIDTH}, {MAX_WIDTH}]"
            )));
        }
        Field::with_poly(w, DEFAULT_POLY[w as usize])
    }

    /// Field of order `q`, which must be a power of two in [2, 256].
    pub fn from_order(q: u16) -> Result<Field> {
        if !(2..=256).contains(&q) || !q.is_power_of_two() {
            return Err(Error::parameter(format!(
                "field order q = {q} must be a power of two in [2, 256]"
            )));
        }
        Field::new(q.trailing_zeros())
    }

    /// Field with an explicit degree-`w` modulus. Fails if the modulus is
    /// reducible (no element generates the full multiplicative group).
    pub fn with_poly(w: u32, poly: u16) -> Result<Field> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&w) {
            return Err(Error::parameter(format!(
                "extension degree w = {w} outside [{MIN_WIDTH}, {MAX_WIDTH}]"
            )));
        }
        if poly >> w != 1 {
            return Err(Error::parameter(format!(
                "modulus {poly:#x} does not have degree {w}"
            )));
        }
        if poly & 1 == 0 {
            return Err(Error::parameter(format!(
                "modulus {poly:#x} is divisible by x, hence reducible"
            )));
        }
        let q = 1u16 << w;
        let order = q - 1;
        let mut log = vec![0u16; q as usize];
        let mut exp = vec![0u8; 2 * order as usize];
        'search: for g in 1..q {
            let mut x = 1u16;
            log.iter_mut().for_each(|e| *e = u16::MAX);
            for i in 0..order {
                if log[x as usize] != u16::MAX {
                    continue 'search; // cycle shorter than q-1
                }
                log[x as usize] = i;
                exp[i as usize] = x as u8;
                exp[(i + order) as usize] = x as u8;
                x = mul_slow(x, g, poly, w);
                if x == 0 {
                    continue 'search; // zero divisor: modulus reducible
                }
            }
            if x != 1 {
                continue; // not a cycle through 1
            }
            log[0] = 0; // never consulted; keep the table dense
            return Ok(Field {
                w,
                q,
                poly,
                generator: g as u8,
                log,
                exp,
            });
        }
        Err(Error::parameter(format!(
            "modulus {poly:#x} is reducible: no generator found"
        )))
    }

    #[inline]
    pub fn w(&self) -> u32 {
        self.w
    }

    /// Field order q = 2^w.
    #[inline]
    pub fn order(&self) -> u16 {
        self.q
    }

    #[inline]
    pub fn poly(&self) -> u16 {
        self.poly
    }

    /// The multiplicative generator the tables are built on (smallest one).
    #[inline]
    pub fn generator(&self) -> Symbol {
        Symbol(self.generator)
    }

    #[inline]
    fn check(&self, s: Symbol) {
        debug_assert!(
            (s.0 as u16) < self.q,
            "symbol {} out of range for GF({})",
            s.0,
            self.q
        );
    }

    /// Characteristic-2 addition; doubles as subtraction.
    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        self.check(a);
        self.check(b);
        Symbol(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        self.check(a);
        self.check(b);
        if a.is_zero() || b.is_zero() {
            return Symbol::ZERO;
        }
        let i = self.log[a.0 as usize] + self.log[b.0 as usize];
        Symbol(self.exp[i as usize])
    }

    /// Multiplicative inverse; zero has none.
    #[inline]
    pub fn inv(&self, a: Symbol) -> Result<Symbol> {
        self.check(a);
        if a.is_zero() {
            return Err(Error::parameter(format!(
                "division by zero in GF({})",
                self.q
            )));
        }
        let order = self.q - 1;
        Ok(Symbol(self.exp[(order - self.log[a.0 as usize]) as usize]))
    }

    /// `a / b`.
    #[inline]
    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// In-place fused update `y[i] <- y[i] + c * x[i]`.
    pub fn axpy(&self, c: Symbol, x: &[Symbol], y: &mut [Symbol]) -> Result<()> {
        if x.len() != y.len() {
            return Err(Error::parameter(format!(
                "axpy length mismatch: x has {}, y has {}",
                x.len(),
                y.len()
            )));
        }
        if c.is_zero() {
            return Ok(());
        }
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.add(*yi, self.mul(c, xi));
        }
        Ok(())
    }

    /// Uniformly random symbol, including zero.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        Symbol(rng.random_range(0..self.q) as u8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(w: u32) -> Field {
        Field::new(w).unwrap()
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(Field::new(0).is_err());
        assert!(Field::new(9).is_err());
        for w in 1..=8 {
            assert!(Field::new(w).is_ok());
        }
    }

    #[test]
    fn from_order_accepts_powers_of_two_only() {
        for q in [2u16, 4, 8, 16, 32, 64, 128, 256] {
            assert_eq!(Field::from_order(q).unwrap().order(), q);
        }
        for q in [0u16, 1, 3, 6, 12, 100, 257, 512] {
            assert!(Field::from_order(q).is_err());
        }
    }

    #[test]
    fn default_generators_are_smallest() {
        assert_eq!(f(1).generator(), Symbol(1));
        for w in 2..=7 {
            assert_eq!(f(w).generator(), Symbol(2), "w = {w}");
        }
        assert_eq!(f(8).generator(), Symbol(3)); // 0x11B is not primitive
    }

    #[test]
    fn rejects_reducible_moduli() {
        // x^2 + 1 = (x+1)^2 over GF(2)
        assert!(Field::with_poly(2, 0b101).is_err());
        // x^3 + x^2 + x + 1 = (x+1)(x^2+1)
        assert!(Field::with_poly(3, 0b1111).is_err());
        // x^4 + x^2 + 1 = (x^2+x+1)^2
        assert!(Field::with_poly(4, 0b1_0101).is_err());
        // even constant term
        assert!(Field::with_poly(4, 0b1_0010).is_err());
        // wrong degree
        assert!(Field::with_poly(4, 0b1011).is_err());
    }

    #[test]
    fn binary_field_addition() {
        let f2 = f(1);
        assert_eq!(f2.add(Symbol(1), Symbol(1)), Symbol(0));
        assert_eq!(f2.add(Symbol(1), Symbol(0)), Symbol(1));
        let f4 = f(2);
        assert_eq!(f4.add(Symbol(2), Symbol(3)), Symbol(1));
    }

    #[test]
    fn quartic_field_products() {
        let f4 = f(2);
        assert_eq!(f4.mul(Symbol(2), Symbol(2)), Symbol(3)); // x*x = x+1
        assert_eq!(f4.mul(Symbol(2), Symbol(3)), Symbol(1)); // x*(x+1) = 1
        assert_eq!(f4.mul(Symbol(3), Symbol(0)), Symbol(0));
        assert_eq!(f4.inv(Symbol(2)).unwrap(), Symbol(3));
        assert_eq!(f4.inv(Symbol(1)).unwrap(), Symbol(1));
        assert!(f4.inv(Symbol(0)).is_err());
    }

    #[test]
    fn frozen_products_match_reference_arithmetic() {
        // Hand-checked against carryless-multiply references computed offline.
        let f8 = f(3);
        assert_eq!(f8.mul(Symbol(3), Symbol(6)), Symbol(1));
        assert_eq!(f8.mul(Symbol(5), Symbol(7)), Symbol(6));
        assert_eq!(f8.mul(Symbol(6), Symbol(7)), Symbol(4));
        let f16 = f(4);
        assert_eq!(f16.mul(Symbol(8), Symbol(2)), Symbol(3));
        assert_eq!(f16.mul(Symbol(9), Symbol(13)), Symbol(15));
        assert_eq!(f16.mul(Symbol(7), Symbol(7)), Symbol(6));
        let f256 = f(8);
        assert_eq!(f256.mul(Symbol(0x53), Symbol(0xCA)), Symbol(0x01));
        assert_eq!(f256.mul(Symbol(0x02), Symbol(0x80)), Symbol(0x1B));
        assert_eq!(f256.mul(Symbol(0x57), Symbol(0x83)), Symbol(0xC1));
    }

    #[test]
    fn tables_agree_with_slow_multiply_everywhere() {
        for w in 1..=8 {
            let fd = f(w);
            let q = fd.order();
            for a in 0..q {
                for b in 0..q {
                    let want = mul_slow(a, b, fd.poly(), w) as u8;
                    assert_eq!(
                        fd.mul(Symbol(a as u8), Symbol(b as u8)),
                        Symbol(want),
                        "w={w} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small_widths() {
        for w in 1..=4 {
            let fd = f(w);
            let q = fd.order();
            let syms: Vec<Symbol> = (0..q).map(|v| Symbol(v as u8)).collect();
            for &a in &syms {
                assert_eq!(fd.mul(a, Symbol::ONE), a);
                assert_eq!(fd.add(a, Symbol::ZERO), a);
                if !a.is_zero() {
                    assert_eq!(fd.mul(a, fd.inv(a).unwrap()), Symbol::ONE);
                }
                for &b in &syms {
                    assert_eq!(fd.mul(a, b), fd.mul(b, a));
                    assert_eq!(fd.add(a, b), fd.add(b, a));
                    for &c in &syms {
                        assert_eq!(fd.mul(fd.mul(a, b), c), fd.mul(a, fd.mul(b, c)));
                        assert_eq!(fd.add(fd.add(a, b), c), fd.add(a, fd.add(b, c)));
                        assert_eq!(
                            fd.mul(a, fd.add(b, c)),
                            fd.add(fd.mul(a, b), fd.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn inverses_are_unique_exhaustively() {
        for w in 1..=4 {
            let fd = f(w);
            for a in 1..fd.order() {
                let inv = fd.inv(Symbol(a as u8)).unwrap();
                let mut hits = 0;
                for b in 0..fd.order() {
                    if fd.mul(Symbol(a as u8), Symbol(b as u8)) == Symbol::ONE {
                        assert_eq!(Symbol(b as u8), inv);
                        hits += 1;
                    }
                }
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn axpy_matches_worked_example() {
        let f4 = f(2);
        let x = [Symbol(1), Symbol(3)];
        let mut y = [Symbol(2), Symbol(0)];
        f4.axpy(Symbol(2), &x, &mut y).unwrap();
        assert_eq!(y, [Symbol(0), Symbol(1)]);
    }

    #[test]
    fn axpy_zero_coefficient_is_identity() {
        let f16 = f(4);
        let x = [Symbol(5), Symbol(9), Symbol(14)];
        let orig = [Symbol(1), Symbol(0), Symbol(7)];
        let mut y = orig;
        f16.axpy(Symbol::ZERO, &x, &mut y).unwrap();
        assert_eq!(y, orig);
    }

    #[test]
    fn axpy_unit_coefficient_onto_zeros_copies_x() {
        let f16 = f(4);
        let x = [Symbol(5), Symbol(9), Symbol(14)];
        let mut y = [Symbol::ZERO; 3];
        f16.axpy(Symbol::ONE, &x, &mut y).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn axpy_rejects_length_mismatch() {
        let f2 = f(1);
        let x = [Symbol(1)];
        let mut y = [Symbol(0), Symbol(0)];
        assert!(f2.axpy(Symbol::ONE, &x, &mut y).is_err());
    }

    #[test]
    fn sample_stays_in_range_and_hits_every_symbol() {
        use rand::SeedableRng;
        let fd = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut seen = [false; 8];
        for _ in 0..1000 {
            let s = fd.sample(&mut rng);
            assert!((s.0 as u16) < fd.order());
            seen[s.0 as usize] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    proptest! {
        #[test]
        fn add_is_involution(w in 1u32..=8, a in 0u8..=255, b in 0u8..=255) {
            let fd = f(w);
            let mask = (fd.order() - 1) as u8;
            let (a, b) = (Symbol(a & mask), Symbol(b & mask));
            prop_assert_eq!(fd.add(fd.add(a, b), b), a);
        }

        #[test]
        fn axpy_is_linear_in_y(
            w in 1u32..=8,
            c in 0u8..=255,
            xs in proptest::collection::vec(0u8..=255, 1..20),
            ys in proptest::collection::vec(0u8..=255, 1..20),
        ) {
            let fd = f(w);
            let mask = (fd.order() - 1) as u8;
            let n = xs.len().min(ys.len());
            let c = Symbol(c & mask);
            let x: Vec<Symbol> = xs[..n].iter().map(|&v| Symbol(v & mask)).collect();
            let y: Vec<Symbol> = ys[..n].iter().map(|&v| Symbol(v & mask)).collect();

            // axpy(c, x, y1 + y2) == axpy(c, x, y1) + y2
            let mut lhs: Vec<Symbol> = y.clone();
            fd.axpy(c, &x, &mut lhs).unwrap();
            let mut rhs = vec![Symbol::ZERO; n];
            fd.axpy(c, &x, &mut rhs).unwrap();
            for i in 0..n {
                rhs[i] = fd.add(rhs[i], y[i]);
            }
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn div_inverts_mul(w in 1u32..=8, a in 0u8..=255, b in 1u8..=255) {
            let fd = f(w);
            let mask = (fd.order() - 1) as u8;
            let a = Symbol(a & mask);
            let b = Symbol(if b & mask == 0 { 1 } else { b & mask });
            let prod = fd.mul(a, b);
            prop_assert_eq!(fd.div(prod, b).unwrap(), a);
        }
    }
}
