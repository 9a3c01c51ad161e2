//! Block substitutions on the integer lattice.
//!
//! A block substitution replaces every unit cube cell carrying letter
//! `j` by a box of shape `expansion[0] x ... x expansion[d-1]` of cells,
//! labelled by `block[j]`. Letters are 1-based dense indices; alphabet
//! names are metadata only. Cells and digit offsets are stored row-major
//! with axis 0 outermost.
//!
//! Substitutions with a common alphabet automatically have finite local
//! complexity (all digits sit in the integer lattice and supports are
//! bounded), so no separate check is performed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Letter = u8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSubstitution {
    name: String,
    dim: usize,
    alphabet: Vec<String>,
    expansion: Vec<i64>,
    /// One flattened letter block per source letter.
    blocks: Vec<Vec<Letter>>,
}

/// Report-style validation outcome; empty means valid.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Offsets `T[k][j]` at which letter `k` appears in the image of
/// letter `j`. For a fixed `j` the sets partition the digit box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSets {
    n_letters: usize,
    dim: usize,
    sets: Vec<Vec<Vec<i64>>>, // [k][j] -> offsets
}

impl DigitSets {
    /// Offsets for (letter `k`, source letter `j`), both 1-based.
    pub fn offsets(&self, k: Letter, j: Letter) -> &[Vec<i64>] {
        &self.sets[(k as usize - 1) * self.n_letters + (j as usize - 1)]
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }
}

/// Nonnegative integer matrix counting digit-set sizes. Column `j` sums
/// to the expanded block volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    n: usize,
    entries: Vec<u64>, // row-major
}

impl SubstitutionMatrix {
    pub fn from_entries(n: usize, entries: Vec<u64>) -> Self {
        assert_eq!(entries.len(), n * n);
        SubstitutionMatrix { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry for (letter `k`, source letter `j`), 1-based.
    pub fn get(&self, k: Letter, j: Letter) -> u64 {
        self.entries[(k as usize - 1) * self.n + (j as usize - 1)]
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn column_sum(&self, j: Letter) -> u64 {
        (0..self.n)
            .map(|k| self.entries[k * self.n + (j as usize - 1)])
            .sum()
    }

    /// Saturating product; positivity of entries survives saturation.
    pub fn mul(&self, rhs: &SubstitutionMatrix) -> SubstitutionMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = vec![0u64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let prod = a.saturating_mul(rhs.entries[k * n + j]);
                    out[i * n + j] = out[i * n + j].saturating_add(prod);
                }
            }
        }
        SubstitutionMatrix { n, entries: out }
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&e| e > 0)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0u64; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        SubstitutionMatrix { n, entries }
    }
}

impl BlockSubstitution {
    /// Builds a substitution without validating it; use [`validate`]
    /// (or load through [`from_json_str`]) before numeric work.
    ///
    /// [`validate`]: BlockSubstitution::validate
    /// [`from_json_str`]: BlockSubstitution::from_json_str
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        alphabet: Vec<String>,
        expansion: Vec<i64>,
        blocks: Vec<Vec<Letter>>,
    ) -> Self {
        BlockSubstitution {
            name: name.into(),
            dim,
            alphabet,
            expansion,
            blocks,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn expansion(&self) -> &[i64] {
        &self.expansion
    }

    /// Flattened image block of a (1-based) letter.
    pub fn block(&self, j: Letter) -> &[Letter] {
        &self.blocks[j as usize - 1]
    }

    /// Volume of the expanded block, `prod(expansion)`.
    pub fn block_volume(&self) -> u64 {
        self.expansion.iter().map(|&e| e as u64).product()
    }

    pub fn det_expansion(&self) -> f64 {
        self.expansion.iter().map(|&e| e as f64).product()
    }

    /// Checks every structural invariant and reports all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.dim == 0 {
            report.violations.push("dimension must be positive".into());
        }
        if self.alphabet.is_empty() {
            report.violations.push("alphabet must be non-empty".into());
        }
        if self.expansion.len() != self.dim {
            report.violations.push(format!(
                "expansion has {} entries, expected {}",
                self.expansion.len(),
                self.dim
            ));
        }
        for (c, &e) in self.expansion.iter().enumerate() {
            if e < 2 {
                report
                    .violations
                    .push(format!("expansion entry < 2 on axis {c}: {e}"));
            }
        }
        if self.blocks.len() != self.alphabet.len() {
            report.violations.push(format!(
                "{} blocks for {} letters",
                self.blocks.len(),
                self.alphabet.len()
            ));
        }
        if !report.is_valid() {
            return report; // shape is broken, cell checks would be noise
        }
        let volume = self.block_volume() as usize;
        let n = self.alphabet.len();
        for (j, block) in self.blocks.iter().enumerate() {
            if block.len() != volume {
                report.violations.push(format!(
                    "block for letter {} has {} cells, expected {}",
                    j + 1,
                    block.len(),
                    volume
                ));
                continue;
            }
            for (idx, &letter) in block.iter().enumerate() {
                if letter == 0 || letter as usize > n {
                    report.violations.push(format!(
                        "letter out of range: block for letter {} has letter {} at offset {:?}",
                        j + 1,
                        letter,
                        self.decode_offset(idx)
                    ));
                }
            }
        }
        report
    }

    fn decode_offset(&self, mut idx: usize) -> Vec<i64> {
        let mut coords = vec![0i64; self.dim];
        for c in (0..self.dim).rev() {
            let e = self.expansion[c] as usize;
            coords[c] = (idx % e) as i64;
            idx /= e;
        }
        coords
    }

    /// Digit sets `T[k][j] = { f : block[j][f] = k }`.
    pub fn digit_sets(&self) -> DigitSets {
        let n = self.alphabet.len();
        let mut sets = vec![Vec::new(); n * n];
        for j in 0..n {
            for (idx, &letter) in self.blocks[j].iter().enumerate() {
                let k = letter as usize - 1;
                sets[k * n + j].push(self.decode_offset(idx));
            }
        }
        DigitSets {
            n_letters: n,
            dim: self.dim,
            sets,
        }
    }

    /// Counting matrix of the digit sets.
    pub fn substitution_matrix(&self) -> SubstitutionMatrix {
        let n = self.alphabet.len();
        let mut entries = vec![0u64; n * n];
        for j in 0..n {
            for &letter in &self.blocks[j] {
                entries[(letter as usize - 1) * n + j] += 1;
            }
        }
        SubstitutionMatrix { n, entries }
    }

    /// Loads a substitution from its JSON definition and validates it.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SubstitutionFile = serde_json::from_str(text)?;
        let sub = file.into_substitution()?;
        let report = sub.validate();
        if !report.is_valid() {
            return Err(Error::InvalidSubstitution {
                name: sub.name,
                violations: report.violations,
            });
        }
        Ok(sub)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// The two-letter doubling rule `1 -> 12`, `2 -> 21`.
    pub fn thue_morse() -> Self {
        BlockSubstitution::new(
            "thue-morse",
            1,
            vec!["a".into(), "b".into()],
            vec![2],
            vec![vec![1, 2], vec![2, 1]],
        )
    }

    /// The two-letter doubling rule `1 -> 12`, `2 -> 11`.
    pub fn period_doubling() -> Self {
        BlockSubstitution::new(
            "period-doubling",
            1,
            vec!["a".into(), "b".into()],
            vec![2],
            vec![vec![1, 2], vec![1, 1]],
        )
    }

    /// A two-letter planar rule with expansion `[4, 3]`. The letter
    /// layout is an arbitrary fixed choice with a primitive counting
    /// matrix; nothing here depends on its fine structure.
    pub fn block_4x3() -> Self {
        #[rustfmt::skip]
        let block_a = vec![
            1, 2, 2,
            2, 1, 1,
            1, 1, 2,
            2, 1, 2,
        ];
        #[rustfmt::skip]
        let block_b = vec![
            2, 1, 1,
            1, 2, 2,
            2, 2, 1,
            1, 1, 1,
        ];
        BlockSubstitution::new(
            "block-4x3",
            2,
            vec!["a".into(), "b".into()],
            vec![4, 3],
            vec![block_a, block_b],
        )
    }
}

/// Composition `outer . inner`: the composed block places
/// `block_outer[block_inner[j][g]][h]` at offset `phi_outer(g) + h`.
/// The counting matrix of the result is `A_outer * A_inner` and the
/// expansion is the entrywise product.
pub fn compose(outer: &BlockSubstitution, inner: &BlockSubstitution) -> Result<BlockSubstitution> {
    if outer.dim != inner.dim {
        return Err(Error::Incompatible(format!(
            "dimension mismatch: {} vs {}",
            outer.dim, inner.dim
        )));
    }
    if outer.alphabet.len() != inner.alphabet.len() {
        return Err(Error::Incompatible(format!(
            "alphabet size mismatch: {} vs {}",
            outer.alphabet.len(),
            inner.alphabet.len()
        )));
    }
    let d = outer.dim;
    let expansion: Vec<i64> = outer
        .expansion
        .iter()
        .zip(&inner.expansion)
        .map(|(a, b)| a * b)
        .collect();
    let volume: usize = expansion.iter().map(|&e| e as usize).product();
    let strides = row_major_strides(&expansion);
    let n = outer.alphabet.len();
    let mut blocks = Vec::with_capacity(n);
    for j in 0..n {
        let mut block = vec![0 as Letter; volume];
        // g runs over the inner digit box, h over the outer one.
        let inner_block = &inner.blocks[j];
        for (g_idx, &mid_letter) in inner_block.iter().enumerate() {
            let g = inner.decode_offset(g_idx);
            let outer_block = &outer.blocks[mid_letter as usize - 1];
            for (h_idx, &letter) in outer_block.iter().enumerate() {
                let h = outer.decode_offset(h_idx);
                let mut lin = 0usize;
                for c in 0..d {
                    let coord = outer.expansion[c] * g[c] + h[c];
                    lin += coord as usize * strides[c];
                }
                block[lin] = letter;
            }
        }
        blocks.push(block);
    }
    Ok(BlockSubstitution::new(
        format!("{}.{}", outer.name, inner.name),
        d,
        outer.alphabet.clone(),
        expansion,
        blocks,
    ))
}

/// True iff every entry of `A[word[0]] * ... * A[word[m-1]]` is positive.
/// Word entries are 1-based indices into `subs`.
pub fn is_positive_product(subs: &[BlockSubstitution], word: &[Letter]) -> Result<bool> {
    if word.is_empty() {
        return Err(Error::BadParameter("word must be non-empty".into()));
    }
    let mut product: Option<SubstitutionMatrix> = None;
    for &w in word {
        let sub = subs
            .get(w as usize - 1)
            .ok_or(Error::LetterOutOfRange {
                letter: w as u32,
                max: subs.len(),
            })?;
        let a = sub.substitution_matrix();
        product = Some(match product {
            None => a,
            Some(p) => p.mul(&a),
        });
    }
    Ok(product.unwrap().is_positive())
}

pub(crate) fn row_major_strides(extent: &[i64]) -> Vec<usize> {
    let d = extent.len();
    let mut strides = vec![1usize; d];
    for c in (0..d.saturating_sub(1)).rev() {
        strides[c] = strides[c + 1] * extent[c + 1] as usize;
    }
    strides
}

#[derive(Debug, Serialize, Deserialize)]
struct SubstitutionFile {
    name: String,
    dim: usize,
    alphabet: Vec<String>,
    expansion: Vec<i64>,
    rules: BTreeMap<String, Value>,
}

impl SubstitutionFile {
    fn into_substitution(self) -> Result<BlockSubstitution> {
        let mut blocks = Vec::with_capacity(self.alphabet.len());
        for letter_name in &self.alphabet {
            let rule = self.rules.get(letter_name).ok_or_else(|| {
                Error::BadParameter(format!("missing rule for letter `{letter_name}`"))
            })?;
            let mut flat = Vec::new();
            flatten_rule(rule, &self.expansion, 0, letter_name, &mut flat)?;
            blocks.push(flat);
        }
        for extra in self.rules.keys() {
            if !self.alphabet.iter().any(|a| a == extra) {
                return Err(Error::BadParameter(format!(
                    "rule for unknown letter `{extra}`"
                )));
            }
        }
        Ok(BlockSubstitution::new(
            self.name,
            self.dim,
            self.alphabet,
            self.expansion,
            blocks,
        ))
    }
}

fn flatten_rule(
    value: &Value,
    expansion: &[i64],
    axis: usize,
    letter: &str,
    out: &mut Vec<Letter>,
) -> Result<()> {
    if axis == expansion.len() {
        let n = value.as_u64().ok_or_else(|| {
            Error::BadParameter(format!("rule for `{letter}`: expected a letter index"))
        })?;
        if n == 0 || n > u8::MAX as u64 {
            return Err(Error::BadParameter(format!(
                "rule for `{letter}`: letter index {n} out of storage range"
            )));
        }
        out.push(n as Letter);
        return Ok(());
    }
    let arr = value.as_array().ok_or_else(|| {
        Error::BadParameter(format!(
            "rule for `{letter}`: expected a nested array at axis {axis}"
        ))
    })?;
    if arr.len() != expansion[axis] as usize {
        return Err(Error::BadParameter(format!(
            "rule for `{letter}`: axis {axis} has {} entries, expected {}",
            arr.len(),
            expansion[axis]
        )));
    }
    for v in arr {
        flatten_rule(v, expansion, axis + 1, letter, out)?;
    }
    Ok(())
}
