//! Soft-decision maximum-likelihood decoding of the concatenated C4/C6 code.
//!
//! Both codes encode a *pair* of logical qubits. A level-1 block is one C4
//! codeword over four physical qubits; a level-`l` block is a C6 codeword
//! whose six units are the two logical qubits of each of three level-`(l-1)`
//! blocks. Sub-block `j` supplies unit `j` (its first logical) and unit
//! `j + 3` (its second), so a failure hitting both logicals of one sub-block
//! is still detected. Leaves are laid out depth first: sub-block `j` of a
//! level-`l` block occupies leaves `j*B .. (j+1)*B` with `B = 4 * 3^(l-2)`.
//!
//! Decoding works bottom-up on [`PairLikelihoods`]: four log-likelihoods, one
//! per logical pair value `(b1, b2)`. Since sub-blocks are disjoint, the
//! recursion is exact marginalisation, i.e. full ML over the whole block. The
//! returned logical bit is the first qubit of the top-level pair; the second
//! is summed out.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gkp::LikelihoodPair;
use crate::logspace::{canonical_sum, log_add, log_sum_exp};

/// Which quadrature is being read out. The q readout sees Z-type checks and
/// Z logicals; the p readout sees the X-type ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    #[default]
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeKind {
    C4,
    C6,
}

/// Stabilizer and logical-operator supports, written as Pauli strings.
pub mod stabilizers {
    pub const C4_Z_CHECKS: [&str; 1] = ["ZZZZ"];
    pub const C4_X_CHECKS: [&str; 1] = ["XXXX"];
    pub const C4_Z_LOGICALS: [&str; 2] = ["ZIZI", "IIZZ"];
    pub const C4_X_LOGICALS: [&str; 2] = ["XXII", "IXIX"];

    pub const C6_Z_CHECKS: [&str; 2] = ["IIZZZZ", "ZZIIZZ"];
    pub const C6_X_CHECKS: [&str; 2] = ["IIXXXX", "XXIIXX"];
    pub const C6_Z_LOGICALS: [&str; 2] = ["ZZIIII", "ZIZIZI"];
    /// Conjugate to the Z logicals: `X1` anticommutes only with `Z1`.
    pub const C6_X_LOGICALS: [&str; 2] = ["IXXIXI", "XXIIII"];

    /// Unit of the C6 word carrying logical `k` (0 or 1) of sub-block `j`.
    pub const fn c6_unit(j: usize, k: usize) -> usize {
        j + 3 * k
    }
}

/// Bitmask of the non-identity positions; unit `i` is bit `i`.
pub(crate) fn support(pauli: &str) -> u8 {
    pauli
        .bytes()
        .enumerate()
        .filter(|&(_, c)| c != b'I')
        .fold(0u8, |m, (i, _)| m | (1 << i))
}

#[inline]
fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Codeword sets of one code in one quadrature, grouped by logical pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    pub code: CodeKind,
    pub quadrature: Quadrature,
    pub n_units: usize,
    /// `classes[2*b1 + b2]` lists the unit strings reading as `(b1, b2)`.
    classes: [Vec<u8>; 4],
    /// `class_of[word]` for every `n_units`-bit word; `None` if a check fails.
    class_of: Vec<Option<u8>>,
}

/// One row of the JSON audit export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub code: String,
    pub class: String,
    pub words: Vec<String>,
}

impl CodeTable {
    fn build(
        code: CodeKind,
        quadrature: Quadrature,
        n: usize,
        checks: &[&str],
        logicals: &[&str; 2],
    ) -> Self {
        let checks: Vec<u8> = checks.iter().map(|s| support(s)).collect();
        let (l1, l2) = (support(logicals[0]), support(logicals[1]));
        let mut classes: [Vec<u8>; 4] = Default::default();
        let mut class_of = vec![None; 1 << n];
        for word in 0..(1u16 << n) {
            let word = word as u8;
            if checks.iter().all(|&c| parity(word & c) == 0) {
                let class = 2 * parity(word & l1) + parity(word & l2);
                classes[class as usize].push(word);
                class_of[word as usize] = Some(class);
            }
        }
        Self {
            code,
            quadrature,
            n_units: n,
            classes,
            class_of,
        }
    }

    fn new_c4(quadrature: Quadrature) -> Self {
        use stabilizers::*;
        match quadrature {
            Quadrature::Q => Self::build(CodeKind::C4, quadrature, 4, &C4_Z_CHECKS, &C4_Z_LOGICALS),
            Quadrature::P => Self::build(CodeKind::C4, quadrature, 4, &C4_X_CHECKS, &C4_X_LOGICALS),
        }
    }

    fn new_c6(quadrature: Quadrature) -> Self {
        use stabilizers::*;
        match quadrature {
            Quadrature::Q => Self::build(CodeKind::C6, quadrature, 6, &C6_Z_CHECKS, &C6_Z_LOGICALS),
            Quadrature::P => Self::build(CodeKind::C6, quadrature, 6, &C6_X_CHECKS, &C6_X_LOGICALS),
        }
    }

    /// Words of the class `(b1, b2)`.
    pub fn words(&self, b1: u8, b2: u8) -> &[u8] {
        &self.classes[(2 * b1 + b2) as usize]
    }

    pub fn class_words(&self) -> &[Vec<u8>; 4] {
        &self.classes
    }

    /// Logical pair index `2*b1 + b2` of a word, or `None` for a non-codeword.
    pub fn class_of(&self, word: u8) -> Option<u8> {
        self.class_of.get(word as usize).copied().flatten()
    }

    /// Renders a word with unit 1 first, e.g. `0b1010` as `"0101"`.
    pub fn word_string(&self, word: u8) -> String {
        (0..self.n_units)
            .map(|i| if word >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn parse_word(s: &str) -> u8 {
        s.bytes()
            .enumerate()
            .fold(0u8, |m, (i, c)| if c == b'1' { m | (1 << i) } else { m })
    }

    pub fn to_records(&self) -> Vec<ClassRecord> {
        let name = match self.code {
            CodeKind::C4 => "C4",
            CodeKind::C6 => "C6",
        };
        (0..4)
            .map(|c| ClassRecord {
                code: name.to_string(),
                class: format!("{}{}", c >> 1, c & 1),
                words: self.classes[c]
                    .iter()
                    .map(|&w| self.word_string(w))
                    .collect(),
            })
            .collect()
    }
}

static TABLES: OnceLock<[CodeTable; 4]> = OnceLock::new();

fn tables() -> &'static [CodeTable; 4] {
    TABLES.get_or_init(|| {
        [
            CodeTable::new_c4(Quadrature::Q),
            CodeTable::new_c4(Quadrature::P),
            CodeTable::new_c6(Quadrature::Q),
            CodeTable::new_c6(Quadrature::P),
        ]
    })
}

/// The C4 codeword table for the q readout.
pub fn c4_table() -> &'static CodeTable {
    &tables()[0]
}

/// The C6 codeword table for the q readout.
pub fn c6_table() -> &'static CodeTable {
    &tables()[2]
}

pub fn table_for(code: CodeKind, quadrature: Quadrature) -> &'static CodeTable {
    let t = tables();
    match (code, quadrature) {
        (CodeKind::C4, Quadrature::Q) => &t[0],
        (CodeKind::C4, Quadrature::P) => &t[1],
        (CodeKind::C6, Quadrature::Q) => &t[2],
        (CodeKind::C6, Quadrature::P) => &t[3],
    }
}

/// Concatenation level, at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ConcatLevel(u32);

impl ConcatLevel {
    pub fn new(l: u32) -> Result<Self> {
        if l == 0 {
            Err(Error::ZeroLevel)
        } else {
            Ok(Self(l))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Physical qubits in one logical block: `4 * 3^(l-1)`.
    pub fn block_size(self) -> usize {
        4 * 3usize.pow(self.0 - 1)
    }
}

impl TryFrom<u32> for ConcatLevel {
    type Error = Error;
    fn try_from(l: u32) -> Result<Self> {
        Self::new(l)
    }
}

impl From<ConcatLevel> for u32 {
    fn from(l: ConcatLevel) -> u32 {
        l.0
    }
}

/// Log-likelihoods of the four values of a logical pair, indexed `2*b1 + b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLikelihoods {
    pub f: [f64; 4],
}

impl PairLikelihoods {
    pub fn get(&self, b1: u8, b2: u8) -> f64 {
        self.f[(2 * b1 + b2) as usize]
    }

    /// Log-likelihoods of the first logical bit being 0 and 1.
    pub fn first_bit(&self) -> (f64, f64) {
        (log_add(self.f[0], self.f[1]), log_add(self.f[2], self.f[3]))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            f: self.f.map(|x| x + c),
        }
    }
}

/// Likelihood of each logical pair value for one leaf block.
///
/// For each class this sums, over the class's codewords, the product of
/// per-leaf likelihoods of that codeword given the decided bits.
pub fn block_pair_likelihoods(
    table: &CodeTable,
    leaf_bits: &[u8],
    leaf_lp: &[LikelihoodPair],
) -> Result<PairLikelihoods> {
    let n = table.n_units;
    for len in [leaf_bits.len(), leaf_lp.len()] {
        if len != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: len,
            });
        }
    }
    Ok(block_unchecked(table, leaf_bits, leaf_lp))
}

fn block_unchecked(
    table: &CodeTable,
    leaf_bits: &[u8],
    leaf_lp: &[LikelihoodPair],
) -> PairLikelihoods {
    let n = table.n_units;
    let mut f = [0.0; 4];
    let mut terms = [0.0; 4];
    let mut leaf = [0.0; 6];
    for (class, words) in table.classes.iter().enumerate() {
        for (t, &w) in terms.iter_mut().zip(words) {
            for i in 0..n {
                leaf[i] = leaf_lp[i].for_bits(leaf_bits[i], w >> i & 1);
            }
            *t = canonical_sum(&mut leaf[..n]);
        }
        f[class] = log_sum_exp(&mut terms[..words.len()]);
    }
    PairLikelihoods { f }
}

/// Logical pair of sub-block `j` inside a C6 word.
#[inline]
fn sub_pair(word: u8, j: usize) -> (u8, u8) {
    use stabilizers::c6_unit;
    (word >> c6_unit(j, 0) & 1, word >> c6_unit(j, 1) & 1)
}

/// Combines three sub-block pair tables through the C6 code.
pub fn c6_level_up(table: &CodeTable, subs: &[PairLikelihoods; 3]) -> PairLikelihoods {
    let mut f = [0.0; 4];
    let mut terms = [0.0; 4];
    for (class, words) in table.classes.iter().enumerate() {
        for (t, &w) in terms.iter_mut().zip(words) {
            let mut parts = [0.0; 3];
            for (j, p) in parts.iter_mut().enumerate() {
                let (b1, b2) = sub_pair(w, j);
                *p = subs[j].get(b1, b2);
            }
            *t = canonical_sum(&mut parts);
        }
        f[class] = log_sum_exp(&mut terms[..words.len()]);
    }
    PairLikelihoods { f }
}

/// Result of decoding one logical block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub logical_bit: u8,
    pub pair_table: PairLikelihoods,
    /// Both logical values were equally likely and a coin decided.
    pub tie: bool,
}

/// Relative tolerance for treating the two logical hypotheses as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn is_tie(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    a.is_finite() && b.is_finite() && (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Picks the first logical bit, flipping a fair coin on ties. The coin is
/// only drawn when needed.
pub(crate) fn decide<R: Rng + ?Sized>(zero: f64, one: f64, rng: &mut R) -> (u8, bool) {
    if is_tie(zero, one) {
        (rng.random::<bool>() as u8, true)
    } else if zero > one {
        (0, false)
    } else {
        (1, false)
    }
}

/// Pair table of a full level-`l` block.
pub fn block_table(
    level: ConcatLevel,
    quadrature: Quadrature,
    leaf_bits: &[u8],
    leaf_lp: &[LikelihoodPair],
) -> Result<PairLikelihoods> {
    let n = level.block_size();
    for len in [leaf_bits.len(), leaf_lp.len()] {
        if len != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let c4 = table_for(CodeKind::C4, quadrature);
    let c6 = table_for(CodeKind::C6, quadrature);
    let mut tables: Vec<PairLikelihoods> = leaf_bits
        .chunks_exact(4)
        .zip(leaf_lp.chunks_exact(4))
        .map(|(b, lp)| block_unchecked(c4, b, lp))
        .collect();
    while tables.len() > 1 {
        tables = tables
            .chunks_exact(3)
            .map(|s| c6_level_up(c6, &[s[0], s[1], s[2]]))
            .collect();
    }
    Ok(tables[0])
}

/// Decodes the first logical bit of a level-`l` block.
pub fn decode<R: Rng + ?Sized>(
    level: ConcatLevel,
    quadrature: Quadrature,
    leaf_bits: &[u8],
    leaf_lp: &[LikelihoodPair],
    rng: &mut R,
) -> Result<Decoded> {
    let pair_table = block_table(level, quadrature, leaf_bits, leaf_lp)?;
    let (zero, one) = pair_table.first_bit();
    let (logical_bit, tie) = decide(zero, one, rng);
    Ok(Decoded {
        logical_bit,
        pair_table,
        tie,
    })
}

/// Logical pair of a full block word (one bit per leaf), or `None` if any
/// level's checks fail. Independent of the likelihood recursion.
pub fn block_class(level: ConcatLevel, quadrature: Quadrature, bits: &[u8]) -> Option<u8> {
    let c4 = table_for(CodeKind::C4, quadrature);
    let c6 = table_for(CodeKind::C6, quadrature);
    if level.get() == 1 {
        let w = bits.iter().enumerate().fold(0u8, |m, (i, &b)| m | (b << i));
        return c4.class_of(w);
    }
    let sub = ConcatLevel(level.get() - 1);
    let size = sub.block_size();
    let mut units = 0u8;
    for j in 0..3 {
        let c = block_class(sub, quadrature, &bits[j * size..(j + 1) * size])?;
        units |= (c >> 1) << stabilizers::c6_unit(j, 0);
        units |= (c & 1) << stabilizers::c6_unit(j, 1);
    }
    c6.class_of(units)
}

/// Exhaustive ML decoder: sums the likelihood of every flip pattern that maps
/// the decided bits onto a codeword, grouped by that codeword's logical pair.
/// Ties are broken exactly as in [`decode`].
pub fn oracle_ml_decode<R: Rng + ?Sized>(
    level: ConcatLevel,
    quadrature: Quadrature,
    leaf_bits: &[u8],
    leaf_lp: &[LikelihoodPair],
    rng: &mut R,
) -> Result<u8> {
    if level.get() > 2 {
        return Err(Error::OracleLevelTooLarge(level.get()));
    }
    let n = level.block_size();
    for len in [leaf_bits.len(), leaf_lp.len()] {
        if len != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: len,
            });
        }
    }
    // Linear domain, each leaf scaled by its larger likelihood.
    let weights: Vec<(f64, f64)> = leaf_lp
        .iter()
        .map(|lp| {
            let m = lp.l_match.max(lp.l_flip);
            ((lp.l_match - m).exp(), (lp.l_flip - m).exp())
        })
        .collect();
    let mut class_sum = [0.0f64; 4];
    let mut word = vec![0u8; n];
    for pattern in 0u32..(1 << n) {
        let mut w = 1.0;
        for i in 0..n {
            let flip = (pattern >> i & 1) as u8;
            word[i] = leaf_bits[i] ^ flip;
            w *= if flip == 1 {
                weights[i].1
            } else {
                weights[i].0
            };
        }
        if let Some(c) = block_class(level, quadrature, &word) {
            class_sum[c as usize] += w;
        }
    }
    let zero = (class_sum[0] + class_sum[1]).ln();
    let one = (class_sum[2] + class_sum[3]).ln();
    Ok(decide(zero, one, rng).0)
}

/// Samples a uniformly random codeword of a level-`l` block, returning the
/// leaf bits and the encoded logical pair index.
pub fn random_codeword<R: Rng + ?Sized>(
    level: ConcatLevel,
    quadrature: Quadrature,
    rng: &mut R,
) -> (Vec<u8>, u8) {
    let class = rng.random_range(0..4u8);
    let mut bits = Vec::with_capacity(level.block_size());
    encode_into(level, quadrature, class, rng, &mut bits);
    (bits, class)
}

fn encode_into<R: Rng + ?Sized>(
    level: ConcatLevel,
    quadrature: Quadrature,
    class: u8,
    rng: &mut R,
    out: &mut Vec<u8>,
) {
    if level.get() == 1 {
        let words = &table_for(CodeKind::C4, quadrature).classes[class as usize];
        let w = words[rng.random_range(0..words.len())];
        out.extend((0..4).map(|i| w >> i & 1));
        return;
    }
    let words = &table_for(CodeKind::C6, quadrature).classes[class as usize];
    let w = words[rng.random_range(0..words.len())];
    let sub = ConcatLevel(level.get() - 1);
    for j in 0..3 {
        let (b1, b2) = sub_pair(w, j);
        encode_into(sub, quadrature, 2 * b1 + b2, rng, out);
    }
}
