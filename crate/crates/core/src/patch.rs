//! Finite labelled box patches and supertile generation.

use crate::error::{Error, Result};
use crate::substitution::{row_major_strides, BlockSubstitution, Letter};

/// Default cell cap for generated patches (a 4096 x 4096 plane).
pub const DEFAULT_MAX_CELLS: usize = 1 << 24;

/// A dense letter assignment on the box `prod [0, extent[c])`.
/// Cells are stored row-major with axis 0 outermost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    dim: usize,
    extent: Vec<i64>,
    cells: Vec<Letter>,
    n_letters: usize,
}

impl Patch {
    pub fn single_cell(dim: usize, letter: Letter) -> Self {
        Patch {
            dim,
            extent: vec![1; dim],
            cells: vec![letter],
            n_letters: letter as usize,
        }
    }

    /// Builds a patch from raw cells; the alphabet size defaults to the
    /// largest letter present.
    pub fn from_cells(extent: Vec<i64>, cells: Vec<Letter>) -> Self {
        let volume: usize = extent.iter().map(|&e| e as usize).product();
        assert_eq!(volume, cells.len(), "cells must fill the box");
        let n_letters = cells.iter().copied().max().unwrap_or(0) as usize;
        Patch {
            dim: extent.len(),
            extent,
            cells,
            n_letters,
        }
    }

    pub fn with_n_letters(mut self, n_letters: usize) -> Self {
        debug_assert!(self.cells.iter().all(|&c| (c as usize) <= n_letters));
        self.n_letters = n_letters;
        self
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> &[i64] {
        &self.extent
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Letter] {
        &self.cells
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.extent)
    }

    pub fn get(&self, coords: &[i64]) -> Letter {
        debug_assert_eq!(coords.len(), self.dim);
        let strides = self.strides();
        let mut lin = 0usize;
        for c in 0..self.dim {
            debug_assert!((0..self.extent[c]).contains(&coords[c]));
            lin += coords[c] as usize * strides[c];
        }
        self.cells[lin]
    }

    /// 1-d patches as a letter sequence.
    pub fn symbols(&self) -> &[Letter] {
        debug_assert_eq!(self.dim, 1);
        &self.cells
    }

    /// Counts per letter, 0-indexed by `letter - 1`.
    pub fn letter_counts(&self, n_letters: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n_letters];
        for &cell in &self.cells {
            counts[cell as usize - 1] += 1;
        }
        counts
    }

    /// Run-length encoded text: one line of `letter*count` tokens per
    /// row along the last axis.
    pub fn to_rle(&self) -> String {
        let mut out = String::new();
        let last = self.extent[self.dim - 1] as usize;
        for row in self.cells.chunks(last) {
            let mut i = 0;
            let mut first = true;
            while i < row.len() {
                let letter = row[i];
                let mut j = i + 1;
                while j < row.len() && row[j] == letter {
                    j += 1;
                }
                if !first {
                    out.push(' ');
                }
                out.push_str(&format!("{}*{}", letter, j - i));
                first = false;
                i = j;
            }
            out.push('\n');
        }
        out
    }
}

/// Applies one substitution step to a patch. Cell `x` with letter `j`
/// expands to the block of `j` at base `phi(x)`.
pub fn substitute(sub: &BlockSubstitution, patch: &Patch, max_cells: usize) -> Result<Patch> {
    assert_eq!(sub.dim(), patch.dim());
    let d = sub.dim();
    let required = patch.len() as u128 * sub.block_volume() as u128;
    if required > max_cells as u128 {
        return Err(Error::CellCapExceeded {
            required,
            cap: max_cells,
        });
    }
    let new_extent: Vec<i64> = patch
        .extent()
        .iter()
        .zip(sub.expansion())
        .map(|(e, f)| e * f)
        .collect();
    let new_strides = row_major_strides(&new_extent);
    let volume = sub.block_volume() as usize;

    // Per-block offset of each digit cell in the output layout, shared
    // by all source cells.
    let mut digit_offsets = vec![0usize; volume];
    {
        let mut coords = vec![0i64; d];
        for offset in digit_offsets.iter_mut() {
            let mut lin = 0usize;
            for c in 0..d {
                lin += coords[c] as usize * new_strides[c];
            }
            *offset = lin;
            // odometer over the digit box
            for c in (0..d).rev() {
                coords[c] += 1;
                if coords[c] < sub.expansion()[c] {
                    break;
                }
                coords[c] = 0;
            }
        }
    }

    let mut cells = vec![0 as Letter; required as usize];
    let mut coords = vec![0i64; d];
    for &letter in patch.cells() {
        let mut base = 0usize;
        for c in 0..d {
            base += (coords[c] * sub.expansion()[c]) as usize * new_strides[c];
        }
        let block = sub.block(letter);
        for (off, &out_letter) in digit_offsets.iter().zip(block) {
            cells[base + off] = out_letter;
        }
        for c in (0..d).rev() {
            coords[c] += 1;
            if coords[c] < patch.extent()[c] {
                break;
            }
            coords[c] = 0;
        }
    }
    Ok(Patch::from_cells(new_extent, cells).with_n_letters(sub.alphabet_size()))
}

/// Builds the supertile `rule[word[0]] ( rule[word[1]] ( ... (seed) ))`,
/// i.e. the leftmost entry of the word is applied last. An empty word
/// yields the single seed cell. Word entries are 1-based indices into
/// `subs`.
pub fn supertile(
    subs: &[BlockSubstitution],
    word: &[Letter],
    seed_letter: Letter,
    max_cells: usize,
) -> Result<Patch> {
    let dim = subs
        .first()
        .map(|s| s.dim())
        .ok_or_else(|| Error::BadParameter("need at least one substitution".into()))?;
    for s in subs {
        if s.dim() != dim || s.alphabet_size() != subs[0].alphabet_size() {
            return Err(Error::Incompatible(
                "substitutions must share dimension and alphabet".into(),
            ));
        }
    }
    if seed_letter == 0 || seed_letter as usize > subs[0].alphabet_size() {
        return Err(Error::LetterOutOfRange {
            letter: seed_letter as u32,
            max: subs[0].alphabet_size(),
        });
    }
    let mut patch = Patch::single_cell(dim, seed_letter).with_n_letters(subs[0].alphabet_size());
    for &w in word.iter().rev() {
        let sub = subs.get(w as usize - 1).ok_or(Error::LetterOutOfRange {
            letter: w as u32,
            max: subs.len(),
        })?;
        patch = substitute(sub, &patch, max_cells)?;
    }
    Ok(patch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_word_is_seed_cell() {
        let tm = BlockSubstitution::thue_morse();
        let p = supertile(&[tm], &[], 2, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(p.symbols(), &[2]);
    }

    #[test]
    fn thue_morse_two_levels() {
        let tm = BlockSubstitution::thue_morse();
        let p = supertile(&[tm], &[1, 1], 1, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(p.symbols(), &[1, 2, 2, 1]);
    }

    #[test]
    fn period_doubling_from_second_letter() {
        let pd = BlockSubstitution::period_doubling();
        let p = supertile(&[pd], &[1], 2, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(p.symbols(), &[1, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let tm = BlockSubstitution::thue_morse();
        let err = supertile(&[tm], &[1; 20], 1, 1024).unwrap_err();
        assert!(err.is_resource_cap());
    }

    #[test]
    fn supertile_counts_match_matrix_product() {
        let tm = BlockSubstitution::thue_morse();
        let pd = BlockSubstitution::period_doubling();
        let subs = [tm, pd];
        let word: Vec<Letter> = vec![1, 2, 2, 1, 2];
        let patch = supertile(&subs, &word, 1, DEFAULT_MAX_CELLS).unwrap();
        let mut product = subs[word[0] as usize - 1].substitution_matrix();
        for &w in &word[1..] {
            product = product.mul(&subs[w as usize - 1].substitution_matrix());
        }
        let counts = patch.letter_counts(2);
        assert_eq!(counts[0], product.get(1, 1));
        assert_eq!(counts[1], product.get(2, 1));
    }

    #[test]
    fn two_dimensional_substitute_shapes() {
        let sub = BlockSubstitution::block_4x3();
        let p = supertile(std::slice::from_ref(&sub), &[1, 1], 1, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(p.extent(), &[16, 9]);
        // spot-check one corner block: cell (0,0) of level 1 carries
        // block_a[0][0] = 1, so the (0,0) corner of level 2 is block_a again
        assert_eq!(p.get(&[0, 0]), 1);
        assert_eq!(p.get(&[0, 1]), 2);
        assert_eq!(p.get(&[1, 0]), 2);
    }

    #[test]
    fn rle_roundtrips_by_eye() {
        let p = Patch::from_cells(vec![2, 3], vec![1, 1, 2, 2, 2, 2]);
        assert_eq!(p.to_rle(), "1*2 2*1\n2*3\n");
    }
}
