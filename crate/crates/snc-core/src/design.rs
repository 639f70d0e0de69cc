//! (K, D, q) sliding-code designs.
//!
//! A design sends K packets per block m: slot 1 carries the fresh data packet
//! X_m, and each slot k in 2..=K carries the delayed copy X_{m-D} combined
//! with f_k(X_m, ..., X_{m-D+1}). The coefficients of f_k live in a
//! (K-1) x D matrix C whose column d multiplies X_{m-d+1}; row k-1 belongs to
//! slot k. Data packets with indices <= 0 (and, once the session length is
//! known, indices past it) are virtual all-zero packets shared by both ends,
//! so one generic rule encodes every block including startup and flush.

use crate::error::{Error, Result};
use crate::gf::Symbol;
use std::collections::BTreeMap;

/// Symbolic linear combination: data-packet index -> nonzero coefficient.
/// An empty map is the zero combination.
pub type SymbolicCombo = BTreeMap<i64, Symbol>;

/// Immutable (K, D, q) design with its coefficient matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SncDesign {
    name: String,
    k: u32,
    d: u32,
    q: u16,
    /// (K-1) x D, row k-2 for slot k; entry at column index d-1 multiplies
    /// X_{m-d+1}.
    rows: Vec<Vec<Symbol>>,
}

impl SncDesign {
    /// Validating constructor. `rows` is the coefficient matrix C.
    pub fn new(
        name: impl Into<String>,
        k: u32,
        d: u32,
        q: u16,
        rows: Vec<Vec<Symbol>>,
    ) -> Result<SncDesign> {
        let name = name.into();
        if k < 2 {
            return Err(Error::parameter(format!(
                "design '{name}': k = {k} but at least 2 slots per block are required"
            )));
        }
        if d < 1 {
            return Err(Error::parameter(format!(
                "design '{name}': delay d must be at least 1 block"
            )));
        }
        if !(2..=256).contains(&q) || !q.is_power_of_two() {
            return Err(Error::parameter(format!(
                "design '{name}': q = {q} must be a power of two in [2, 256]"
            )));
        }
        let dmin = min_delay(k, q)?;
        if d < dmin {
            return Err(Error::parameter(format!(
                "design '{name}': delay d = {d} is below the minimum {dmin} for k = {k}, q = {q}"
            )));
        }
        if rows.len() != (k - 1) as usize {
            return Err(Error::parameter(format!(
                "design '{name}': expected {} coefficient rows, got {}",
                k - 1,
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d as usize {
                return Err(Error::parameter(format!(
                    "design '{name}': row {} has {} entries, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|c| c.0 as u16 >= q) {
                return Err(Error::parameter(format!(
                    "design '{name}': coefficient {bad} out of range for q = {q}"
                )));
            }
        }
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if rows[i] == rows[j] {
                    return Err(Error::parameter(format!(
                        "design '{name}': rows {} and {} are identical; a duplicated \
                         slot adds no information",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(SncDesign { name, k, d, q, rows })
    }

    /// Catalog designs: "table1", "table2", "table3", "simple:K".
    pub fn builtin(name: &str) -> Result<SncDesign> {
        let one = Symbol::ONE;
        let zero = Symbol::ZERO;
        match name {
            "table1" => SncDesign::new("table1", 2, 1, 2, vec![vec![one]]),
            // Delayed copy two blocks back plus the fresh packet.
            "table2" => SncDesign::new("table2", 2, 2, 2, vec![vec![one, zero]]),
            "table3" => SncDesign::new(
                "table3",
                4,
                2,
                2,
                vec![vec![one, zero], vec![zero, one], vec![one, one]],
            ),
            _ => {
                if let Some(ks) = name.strip_prefix("simple:") {
                    let k: u32 = ks.parse().map_err(|_| {
                        Error::parameter(format!("design name '{name}': bad slot count"))
                    })?;
                    if k < 2 {
                        return Err(Error::parameter(format!(
                            "design '{name}': k = {k} but at least 2 slots per block \
                             are required"
                        )));
                    }
                    // (K, K-1, 2) with C the identity: slot k sends
                    // X_{m-D} + X_{m-k+2}.
                    let d = k - 1;
                    let rows = (0..d as usize)
                        .map(|i| {
                            (0..d as usize)
                                .map(|j| if i == j { one } else { zero })
                                .collect()
                        })
                        .collect();
                    SncDesign::new(name, k, d, 2, rows)
                } else {
                    Err(Error::parameter(format!("unknown design name '{name}'")))
                }
            }
        }
    }

    /// `builtin` names plus "min-delay:K:Q" for generated designs.
    pub fn lookup(name: &str) -> Result<SncDesign> {
        if let Some(rest) = name.strip_prefix("min-delay:") {
            let mut it = rest.splitn(2, ':');
            let k = it
                .next()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| {
                    Error::parameter(format!("design name '{name}': bad slot count"))
                })?;
            let q = it
                .next()
                .and_then(|s| s.parse::<u16>().ok())
                .ok_or_else(|| {
                    Error::parameter(format!("design name '{name}': bad field order"))
                })?;
            generate_min_delay(k, q)
        } else {
            SncDesign::builtin(name)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Slots per block.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Decode delay in blocks.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Field order.
    pub fn q(&self) -> u16 {
        self.q
    }

    /// Coefficient matrix C, one row per slot 2..=K.
    pub fn rows(&self) -> &[Vec<Symbol>] {
        &self.rows
    }

    /// Symbolic combinations of the K packets of block `m` (>= 1), with
    /// virtual indices (<= 0) already dropped.
    pub fn expand_block(&self, m: u64) -> Vec<SymbolicCombo> {
        assert!(m >= 1, "block indices start at 1");
        let m = m as i64;
        let d = self.d as i64;
        let mut out = Vec::with_capacity(self.k as usize);
        out.push(SymbolicCombo::from([(m, Symbol::ONE)]));
        for row in &self.rows {
            let mut combo = SymbolicCombo::new();
            if m - d >= 1 {
                combo.insert(m - d, Symbol::ONE);
            }
            for (i, &c) in row.iter().enumerate() {
                // column i holds the coefficient of X_{m-i} (d = i+1)
                let j = m - i as i64;
                if !c.is_zero() && j >= 1 {
                    combo.insert(j, c);
                }
            }
            out.push(combo);
        }
        out
    }

    /// Number of packets in blocks t..t+D-1 that combine X_t exclusively
    /// with already-delivered packets (indices < t), at a steady-state t.
    /// These are the decode chances for X_t that need no help from newer
    /// packets.
    pub fn compute_mu(&self) -> u32 {
        // Evaluate the definition literally on a block index far enough in
        // that no virtual-zero drops distort the combos.
        let d = self.d as u64;
        let m = 2 * d + 1;
        let t = (m - d) as i64;
        let mut mu = 0;
        for b in (m - d)..m {
            for combo in self.expand_block(b) {
                let hits_t = combo.get(&t).is_some();
                let rest_old = combo.keys().all(|&j| j == t || j < t);
                if hits_t && rest_old {
                    mu += 1;
                }
            }
        }
        mu
    }

    /// True iff D <= K-1 and the single-nonzero rows of C cover all D
    /// columns, i.e. some row permutation puts nonzero multiples of the D
    /// unit vectors on top.
    pub fn check_diag_condition(&self) -> bool {
        if self.d > self.k - 1 {
            return false;
        }
        let mut covered = vec![false; self.d as usize];
        for row in &self.rows {
            let nz: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, _)| i)
                .collect();
            if let [only] = nz[..] {
                covered[only] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }

    /// Guaranteed lower bound mu + D on the leading error exponent; only
    /// defined for designs passing `check_diag_condition`.
    pub fn leading_exponent(&self) -> Result<u32> {
        if !self.check_diag_condition() {
            return Err(Error::NotApplicable(format!(
                "design '{}' does not satisfy the diagonal coverage condition",
                self.name
            )));
        }
        Ok(self.compute_mu() + self.d)
    }
}

/// Smallest delay D with q^D >= K.
pub fn min_delay(k: u32, q: u16) -> Result<u32> {
    if k < 2 {
        return Err(Error::parameter(format!(
            "min_delay: k = {k} but at least 2 slots per block are required"
        )));
    }
    if q < 2 {
        return Err(Error::parameter(format!(
            "min_delay: field order q = {q} must be at least 2"
        )));
    }
    let (k, q) = (k as u64, q as u64);
    let mut d = 1;
    let mut pow = q;
    while pow < k {
        pow = pow.saturating_mul(q);
        d += 1;
    }
    Ok(d)
}

/// Minimum-delay design for (K, q): D = min_delay(K, q) and the rows of C
/// are the first K-1 nonzero vectors of GF(q)^D, taking the D unit vectors
/// first (so the diagonal condition always holds) and then the remaining
/// nonzero vectors in ascending little-endian integer order.
pub fn generate_min_delay(k: u32, q: u16) -> Result<SncDesign> {
    if !(2..=256).contains(&q) || !q.is_power_of_two() {
        return Err(Error::parameter(format!(
            "generate_min_delay: q = {q} must be a power of two in [2, 256]"
        )));
    }
    let d = min_delay(k, q)?;
    let qq = q as u64;
    let digits = |v: u64| -> Vec<Symbol> {
        let mut v = v;
        (0..d)
            .map(|_| {
                let c = (v % qq) as u8;
                v /= qq;
                Symbol(c)
            })
            .collect()
    };
    let unit_values: Vec<u64> = (0..d).map(|i| qq.pow(i)).collect();
    let mut rows: Vec<Vec<Symbol>> = Vec::with_capacity((k - 1) as usize);
    for &v in unit_values.iter().take((k - 1) as usize) {
        rows.push(digits(v));
    }
    let mut v = 1;
    while rows.len() < (k - 1) as usize {
        if !unit_values.contains(&v) {
            rows.push(digits(v));
        }
        v += 1;
    }
    SncDesign::new(format!("min-delay:{k}:{q}"), k, d, q, rows)
}

/// The built-in catalog in listing order.
pub fn catalog() -> Vec<SncDesign> {
    ["table1", "table2", "table3", "simple:2", "simple:3", "simple:4"]
        .iter()
        .map(|n| SncDesign::builtin(n).expect("catalog designs are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn combo(entries: &[(i64, u8)]) -> SymbolicCombo {
        entries.iter().map(|&(j, c)| (j, Symbol(c))).collect()
    }

    #[test]
    fn builtin_shapes() {
        let t1 = SncDesign::builtin("table1").unwrap();
        assert_eq!((t1.k(), t1.d(), t1.q()), (2, 1, 2));
        assert_eq!(t1.rows(), &[vec![Symbol(1)]]);

        let t2 = SncDesign::builtin("table2").unwrap();
        assert_eq!((t2.k(), t2.d(), t2.q()), (2, 2, 2));
        assert_eq!(t2.rows(), &[vec![Symbol(1), Symbol(0)]]);

        let t3 = SncDesign::builtin("table3").unwrap();
        assert_eq!((t3.k(), t3.d(), t3.q()), (4, 2, 2));
        assert_eq!(
            t3.rows(),
            &[
                vec![Symbol(1), Symbol(0)],
                vec![Symbol(0), Symbol(1)],
                vec![Symbol(1), Symbol(1)],
            ]
        );

        // simple:2 has table1's structure under a different label
        let s2 = SncDesign::builtin("simple:2").unwrap();
        assert_eq!((s2.k(), s2.d(), s2.q()), (t1.k(), t1.d(), t1.q()));
        assert_eq!(s2.rows(), t1.rows());

        assert!(SncDesign::builtin("simple:1").is_err());
        assert!(SncDesign::builtin("simple:x").is_err());
        assert!(SncDesign::builtin("nope").is_err());
    }

    #[test]
    fn lookup_handles_generated_names() {
        let g = SncDesign::lookup("min-delay:4:2").unwrap();
        assert_eq!(g.rows(), SncDesign::builtin("table3").unwrap().rows());
        assert!(SncDesign::lookup("min-delay:4").is_err());
        assert!(SncDesign::lookup("min-delay:4:3").is_err());
        assert_eq!(SncDesign::lookup("table2").unwrap().d(), 2);
    }

    #[test]
    fn catalog_is_complete_and_valid() {
        let cat = catalog();
        assert!(cat.len() >= 4);
        let names: Vec<&str> = cat.iter().map(|d| d.name()).collect();
        assert_eq!(
            names,
            ["table1", "table2", "table3", "simple:2", "simple:3", "simple:4"]
        );
    }

    #[test]
    fn min_delay_examples() {
        assert_eq!(min_delay(2, 2).unwrap(), 1);
        assert_eq!(min_delay(4, 2).unwrap(), 2);
        assert_eq!(min_delay(4, 4).unwrap(), 1);
        assert_eq!(min_delay(3, 2).unwrap(), 2);
        assert_eq!(min_delay(5, 2).unwrap(), 3);
        assert_eq!(min_delay(256, 2).unwrap(), 8);
        assert_eq!(min_delay(257, 2).unwrap(), 9);
        assert!(min_delay(1, 2).is_err());
        assert!(min_delay(2, 1).is_err());
    }

    #[test]
    fn generated_designs_hit_the_delay_bound_with_units_first() {
        let g = generate_min_delay(4, 2).unwrap();
        assert_eq!(g.rows(), SncDesign::builtin("table3").unwrap().rows());

        let g = generate_min_delay(2, 2).unwrap();
        assert_eq!(g.rows(), &[vec![Symbol(1)]]);

        let g = generate_min_delay(5, 2).unwrap();
        assert_eq!(g.d(), 3);
        assert_eq!(
            g.rows(),
            &[
                vec![Symbol(1), Symbol(0), Symbol(0)],
                vec![Symbol(0), Symbol(1), Symbol(0)],
                vec![Symbol(0), Symbol(0), Symbol(1)],
                vec![Symbol(1), Symbol(1), Symbol(0)],
            ]
        );

        for (k, q) in [(2u32, 2u16), (3, 2), (4, 2), (7, 2), (9, 2), (4, 4), (17, 4)] {
            let g = generate_min_delay(k, q).unwrap();
            assert_eq!(g.d(), min_delay(k, q).unwrap(), "k={k} q={q}");
            assert!(g.check_diag_condition(), "k={k} q={q}");
        }
    }

    #[test]
    fn construction_rejects_bad_matrices() {
        let one = Symbol(1);
        let zero = Symbol(0);
        // duplicate rows
        assert!(SncDesign::new("x", 3, 2, 2, vec![vec![one, zero], vec![one, zero]]).is_err());
        // entry out of range
        assert!(SncDesign::new("x", 2, 1, 2, vec![vec![Symbol(2)]]).is_err());
        // wrong row count
        assert!(SncDesign::new("x", 3, 2, 2, vec![vec![one, zero]]).is_err());
        // wrong row width
        assert!(SncDesign::new("x", 2, 2, 2, vec![vec![one]]).is_err());
        // delay below the minimum: q^1 = 2 < 4 slots
        assert!(SncDesign::new("x", 4, 1, 2, vec![vec![one], vec![zero], vec![Symbol(1)]]).is_err());
        // q not a power of two
        assert!(SncDesign::new("x", 2, 1, 3, vec![vec![one]]).is_err());
        assert!(SncDesign::new("x", 1, 1, 2, vec![]).is_err());
    }

    #[test]
    fn expansion_steady_state() {
        let t1 = SncDesign::builtin("table1").unwrap();
        assert_eq!(
            t1.expand_block(4),
            vec![combo(&[(4, 1)]), combo(&[(3, 1), (4, 1)])]
        );

        let t3 = SncDesign::builtin("table3").unwrap();
        assert_eq!(
            t3.expand_block(5),
            vec![
                combo(&[(5, 1)]),
                combo(&[(3, 1), (5, 1)]),
                combo(&[(3, 1), (4, 1)]),
                combo(&[(3, 1), (5, 1), (4, 1)]),
            ]
        );

        let t2 = SncDesign::builtin("table2").unwrap();
        assert_eq!(
            t2.expand_block(7),
            vec![combo(&[(7, 1)]), combo(&[(5, 1), (7, 1)])]
        );
    }

    #[test]
    fn expansion_drops_virtual_indices_at_startup() {
        let t1 = SncDesign::builtin("table1").unwrap();
        assert_eq!(t1.expand_block(1), vec![combo(&[(1, 1)]), combo(&[(1, 1)])]);

        let t3 = SncDesign::builtin("table3").unwrap();
        assert_eq!(
            t3.expand_block(1),
            vec![
                combo(&[(1, 1)]),
                combo(&[(1, 1)]),
                combo(&[]), // both terms virtual: the zero combination
                combo(&[(1, 1)]),
            ]
        );
        assert_eq!(
            t3.expand_block(2),
            vec![
                combo(&[(2, 1)]),
                combo(&[(2, 1)]),
                combo(&[(1, 1)]),
                combo(&[(2, 1), (1, 1)]),
            ]
        );
    }

    #[test]
    #[should_panic(expected = "block indices start at 1")]
    fn expansion_rejects_block_zero() {
        let _ = SncDesign::builtin("table1").unwrap().expand_block(0);
    }

    #[test]
    fn expansion_invariants_across_catalog() {
        for d in catalog() {
            for m in 1..=12u64 {
                let combos = d.expand_block(m);
                assert_eq!(combos.len(), d.k() as usize);
                assert_eq!(combos[0], combo(&[(m as i64, 1)]), "{} m={m}", d.name());
                for c in &combos {
                    for (&j, &coef) in c {
                        assert!(j >= 1 && j as u64 <= m);
                        assert!(j >= m as i64 - d.d() as i64);
                        assert!(!coef.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn mu_counts_self_sufficient_decode_chances() {
        assert_eq!(SncDesign::builtin("table3").unwrap().compute_mu(), 4);
        assert_eq!(SncDesign::builtin("simple:3").unwrap().compute_mu(), 3);
        // Both packets of the single look-back block qualify: the fresh copy
        // X_{m-1} and the combination X_{m-2}+X_{m-1} whose other term is
        // already delivered.
        assert_eq!(SncDesign::builtin("table1").unwrap().compute_mu(), 2);
        assert_eq!(SncDesign::builtin("table2").unwrap().compute_mu(), 2);
        // An all-zero row never qualifies; q=4 lets a 3-slot design fit D=1.
        let z = SncDesign::new(
            "zrow",
            3,
            1,
            4,
            vec![vec![Symbol(1)], vec![Symbol(0)]],
        )
        .unwrap();
        assert_eq!(z.compute_mu(), 2);
    }

    #[test]
    fn simple_family_matches_closed_form_exponent() {
        for k in 2..=8u32 {
            let d = SncDesign::builtin(&format!("simple:{k}")).unwrap();
            assert_eq!(d.compute_mu(), k, "k={k}");
            assert_eq!(d.leading_exponent().unwrap(), 2 * k - 1, "k={k}");
        }
    }

    #[test]
    fn diagonal_condition() {
        assert!(SncDesign::builtin("table3").unwrap().check_diag_condition());
        assert!(SncDesign::builtin("table1").unwrap().check_diag_condition());
        // D = 2 exceeds K-1 = 1
        assert!(!SncDesign::builtin("table2").unwrap().check_diag_condition());
        // single-nonzero rows cover only column 1
        let partial = SncDesign::new(
            "partial",
            4,
            2,
            2,
            vec![
                vec![Symbol(1), Symbol(1)],
                vec![Symbol(1), Symbol(0)],
                vec![Symbol(0), Symbol(1)],
            ],
        )
        .unwrap();
        assert!(partial.check_diag_condition());
        let uncovered = SncDesign::new(
            "uncovered",
            3,
            2,
            2,
            vec![vec![Symbol(1), Symbol(0)], vec![Symbol(1), Symbol(1)]],
        )
        .unwrap();
        assert!(!uncovered.check_diag_condition());
    }

    #[test]
    fn exponent_requires_the_diagonal_condition() {
        assert_eq!(SncDesign::builtin("table3").unwrap().leading_exponent().unwrap(), 6);
        assert_eq!(SncDesign::builtin("simple:4").unwrap().leading_exponent().unwrap(), 7);
        assert!(matches!(
            SncDesign::builtin("table2").unwrap().leading_exponent(),
            Err(Error::NotApplicable(_))
        ));
    }
}
