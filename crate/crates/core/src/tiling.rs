//! Finite-patch statistics: letter frequencies, pair correlations, the
//! level-to-level correlation identity, and windowed diffraction
//! intensities.
//!
//! Pair frequencies are normalized over an eroded window so displaced
//! points never leave the patch; erosion is the unbiased finite
//! surrogate of ball averages on the infinite tiling. Consecutive-level
//! patches are always produced by forward substitution of the deeper
//! patch, never by inverting a patch.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::laurent::TAU;
use crate::patch::{substitute, supertile, Patch};
use crate::substitution::{BlockSubstitution, Letter};
use crate::util::frac;

/// Default cap on evaluated wave vectors.
pub const DEFAULT_MAX_GRID_POINTS: usize = 1 << 22;

/// Letter frequency vector of a patch, indexed by `letter - 1`;
/// components sum to 1 by integer counting.
pub fn letter_frequencies(patch: &Patch) -> Vec<f64> {
    let counts = patch.letter_counts(patch.n_letters());
    let total = patch.len() as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Empirical pair counts `(x, x+z)` over the eroded window, for all
/// displacements with `|z_c| <= radius_c`.
#[derive(Debug, Clone)]
pub struct PairCorrelationTable {
    dim: usize,
    n_letters: usize,
    radius: Vec<i64>,
    window_cells: u64,
    z_extent: Vec<i64>,
    z_count: usize,
    counts: Vec<u64>,
}

impl PairCorrelationTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }

    pub fn radius(&self) -> &[i64] {
        &self.radius
    }

    pub fn window_cells(&self) -> u64 {
        self.window_cells
    }

    fn z_index(&self, z: &[i64]) -> Option<usize> {
        debug_assert_eq!(z.len(), self.dim);
        let mut idx = 0usize;
        for (c, &zc) in z.iter().enumerate() {
            if zc.abs() > self.radius[c] {
                return None;
            }
            idx = idx * self.z_extent[c] as usize + (zc + self.radius[c]) as usize;
        }
        Some(idx)
    }

    /// Pair count for letters `(i, j)` (1-based) at displacement `z`.
    pub fn count(&self, i: Letter, j: Letter, z: &[i64]) -> u64 {
        match self.z_index(z) {
            Some(idx) => {
                let pair = (i as usize - 1) * self.n_letters + (j as usize - 1);
                self.counts[pair * self.z_count + idx]
            }
            None => 0,
        }
    }

    /// Normalized frequency estimate in `[0,1]`.
    pub fn frequency(&self, i: Letter, j: Letter, z: &[i64]) -> f64 {
        self.count(i, j, z) as f64 / self.window_cells as f64
    }

    /// All displacements in table order.
    pub fn displacements(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.z_count);
        let mut z: Vec<i64> = self.radius.iter().map(|r| -r).collect();
        for _ in 0..self.z_count {
            out.push(z.clone());
            for c in (0..self.dim).rev() {
                z[c] += 1;
                if z[c] <= self.radius[c] {
                    break;
                }
                z[c] = -self.radius[c];
            }
        }
        out
    }
}

/// Uniform-radius pair correlations; requires `4 * radius` below every
/// patch extent so the eroded window stays representative.
pub fn pair_correlations(patch: &Patch, radius: i64) -> Result<PairCorrelationTable> {
    pair_correlations_anisotropic(patch, &vec![radius; patch.dim()])
}

/// Per-axis-radius variant (used by the renormalization check, where
/// the deeper level needs a contracted window).
pub fn pair_correlations_anisotropic(
    patch: &Patch,
    radius: &[i64],
) -> Result<PairCorrelationTable> {
    let d = patch.dim();
    assert_eq!(radius.len(), d);
    for (&r, &extent) in radius.iter().zip(patch.extent()) {
        if r < 0 {
            return Err(Error::BadParameter("radius must be nonnegative".into()));
        }
        if 4 * r >= extent {
            return Err(Error::WindowTooLarge {
                radius: r,
                extent: extent as usize,
            });
        }
    }
    let n = patch.n_letters();
    let strides = patch.strides();
    let z_extent: Vec<i64> = radius.iter().map(|&r| 2 * r + 1).collect();
    let z_count: usize = z_extent.iter().map(|&e| e as usize).product();
    // linear offset of each displacement
    let mut deltas = Vec::with_capacity(z_count);
    {
        let mut z: Vec<i64> = radius.iter().map(|r| -r).collect();
        for _ in 0..z_count {
            let delta: isize = (0..d).map(|c| z[c] as isize * strides[c] as isize).sum();
            deltas.push(delta);
            for c in (0..d).rev() {
                z[c] += 1;
                if z[c] <= radius[c] {
                    break;
                }
                z[c] = -radius[c];
            }
        }
    }
    let window_cells: u64 = (0..d)
        .map(|c| (patch.extent()[c] - 2 * radius[c]) as u64)
        .product();
    let mut counts = vec![0u64; n * n * z_count];
    let cells = patch.cells();
    let mut coords: Vec<i64> = radius.to_vec();
    let mut lin: usize = (0..d).map(|c| coords[c] as usize * strides[c]).sum();
    for _ in 0..window_cells {
        let i = cells[lin] as usize - 1;
        let row_base = i * n;
        for (zidx, &delta) in deltas.iter().enumerate() {
            let j = cells[(lin as isize + delta) as usize] as usize - 1;
            counts[(row_base + j) * z_count + zidx] += 1;
        }
        // odometer over the eroded window, keeping `lin` in step
        for c in (0..d).rev() {
            coords[c] += 1;
            lin += strides[c];
            if coords[c] < patch.extent()[c] - radius[c] {
                break;
            }
            let span = patch.extent()[c] - 2 * radius[c];
            coords[c] -= span;
            lin -= strides[c] * span as usize;
        }
    }
    Ok(PairCorrelationTable {
        dim: d,
        n_letters: n,
        radius: radius.to_vec(),
        window_cells,
        z_extent,
        z_count,
        counts,
    })
}

/// Largest deviation of the level-to-level pair-frequency identity
/// over all letter pairs and displacements with `|z|_inf <= radius`.
///
/// The deeper patch is generated from `word[1..]`, the coarser one by
/// substituting it once with `word[0]`, so the pair is consistent by
/// construction. The identity is exact on the infinite tiling; on
/// finite windows the residual decays like the boundary fraction.
pub fn renormalization_residual(
    subs: &[BlockSubstitution],
    word: &[Letter],
    seed_letter: Letter,
    radius: i64,
    max_cells: usize,
) -> Result<f64> {
    if word.is_empty() {
        return Err(Error::BadParameter(
            "renormalization needs a non-empty word".into(),
        ));
    }
    let deep = supertile(subs, &word[1..], seed_letter, max_cells)?;
    let head = subs
        .get(word[0] as usize - 1)
        .ok_or(Error::LetterOutOfRange {
            letter: word[0] as u32,
            max: subs.len(),
        })?;
    let coarse = substitute(head, &deep, max_cells)?;

    let coarse_table = pair_correlations(&coarse, radius)?;
    let deep_radius: Vec<i64> = head
        .expansion()
        .iter()
        .map(|&e| (radius + e - 1) / e)
        .collect();
    let deep_table = pair_correlations_anisotropic(&deep, &deep_radius)?;

    let digits = head.digit_sets();
    let n = head.alphabet_size();
    let det = head.det_expansion();
    let d = head.dim();

    let mut residual = 0.0f64;
    let mut w = vec![0i64; d];
    for i in 1..=n as u8 {
        for j in 1..=n as u8 {
            'displacement: for z in coarse_table.displacements() {
                let lhs = coarse_table.frequency(i, j, &z);
                let mut rhs = 0.0f64;
                for m in 1..=n as u8 {
                    for nn in 1..=n as u8 {
                        for x in digits.offsets(i, m) {
                            for y in digits.offsets(j, nn) {
                                // only lattice preimages contribute
                                let mut integral = true;
                                for c in 0..d {
                                    let num = z[c] + x[c] - y[c];
                                    let e = head.expansion()[c];
                                    if num.rem_euclid(e) != 0 {
                                        integral = false;
                                        break;
                                    }
                                    w[c] = num.div_euclid(e);
                                }
                                if integral {
                                    rhs += deep_table.frequency(m, nn, &w);
                                }
                            }
                        }
                    }
                }
                rhs /= det;
                residual = residual.max((lhs - rhs).abs());
                if !residual.is_finite() {
                    break 'displacement;
                }
            }
        }
    }
    Ok(residual)
}

/// Weighted phase-sum intensities on a set of wave vectors.
#[derive(Debug, Clone)]
pub struct DiffractionGrid {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub intensity: Vec<f64>,
    pub weights: Vec<Complex64>,
    pub window_extent: Vec<i64>,
}

fn check_weights(patch: &Patch, weights: &[Complex64]) -> Result<()> {
    if weights.len() < patch.n_letters() {
        return Err(Error::BadParameter(format!(
            "{} weights for {} letters",
            weights.len(),
            patch.n_letters()
        )));
    }
    Ok(())
}

/// Phase factors `exp(-2 pi i t x)` for `x = 0..len`, rebuilt from the
/// reduced argument every 64 entries so the incremental product cannot
/// drift.
fn axis_phase_table(t: f64, len: usize) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, -TAU * t);
    let mut table = Vec::with_capacity(len);
    let mut cur = Complex64::new(1.0, 0.0);
    for x in 0..len {
        if x % 64 == 0 {
            cur = Complex64::from_polar(1.0, -TAU * frac(t * x as f64));
        }
        table.push(cur);
        cur *= step;
    }
    table
}

fn phase_sum(patch: &Patch, weights: &[Complex64], t: &[f64]) -> Complex64 {
    let d = patch.dim();
    let tables: Vec<Vec<Complex64>> = (0..d)
        .map(|c| axis_phase_table(t[c], patch.extent()[c] as usize))
        .collect();
    let last = patch.extent()[d - 1] as usize;
    let mut total = Complex64::new(0.0, 0.0);
    let mut prefix_coords = vec![0i64; d.saturating_sub(1)];
    for row in patch.cells().chunks(last) {
        let mut prefix = Complex64::new(1.0, 0.0);
        for c in 0..d - 1 {
            prefix *= tables[c][prefix_coords[c] as usize];
        }
        let mut row_sum = Complex64::new(0.0, 0.0);
        for (x, &letter) in row.iter().enumerate() {
            row_sum += weights[letter as usize - 1] * tables[d - 1][x];
        }
        total += prefix * row_sum;
        for c in (0..d - 1).rev() {
            prefix_coords[c] += 1;
            if prefix_coords[c] < patch.extent()[c] {
                break;
            }
            prefix_coords[c] = 0;
        }
    }
    total
}

/// Intensity `|sum_x w(x) exp(-2 pi i <t,x>)|^2 / cells` at arbitrary
/// wave vectors by direct summation.
pub fn diffraction_intensity(
    patch: &Patch,
    weights: &[Complex64],
    t_grid: &[Vec<f64>],
    max_points: usize,
) -> Result<DiffractionGrid> {
    check_weights(patch, weights)?;
    if t_grid.len() > max_points {
        return Err(Error::GridCapExceeded {
            required: t_grid.len(),
            cap: max_points,
        });
    }
    let cells = patch.len() as f64;
    let mut intensity = Vec::with_capacity(t_grid.len());
    for t in t_grid {
        assert_eq!(t.len(), patch.dim());
        let x = phase_sum(patch, weights, t);
        intensity.push(x.norm_sqr() / cells);
    }
    Ok(DiffractionGrid {
        dim: patch.dim(),
        points: t_grid.to_vec(),
        intensity,
        weights: weights.to_vec(),
        window_extent: patch.extent().to_vec(),
    })
}

/// Intensities on the full grid `t = m / extent` via an FFT along each
/// axis; exact where the phase sum is cheap.
pub fn diffraction_dft_grid(
    patch: &Patch,
    weights: &[Complex64],
    max_points: usize,
) -> Result<DiffractionGrid> {
    check_weights(patch, weights)?;
    let n = patch.len();
    if n > max_points {
        return Err(Error::GridCapExceeded {
            required: n,
            cap: max_points,
        });
    }
    let d = patch.dim();
    let mut data: Vec<Complex64> = patch
        .cells()
        .iter()
        .map(|&l| weights[l as usize - 1])
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let strides = patch.strides();
    for axis in 0..d {
        let len = patch.extent()[axis] as usize;
        let fft = planner.plan_fft_forward(len);
        if axis == d - 1 {
            for line in data.chunks_mut(len) {
                fft.process(line);
            }
        } else {
            let stride = strides[axis];
            let mut scratch = vec![Complex64::new(0.0, 0.0); len];
            // walk every line along `axis`: indices i with coordinate 0
            // on that axis, then gather with the stride
            let mut base_coords = vec![0i64; d];
            let lines = n / len;
            for _ in 0..lines {
                let base: usize = (0..d)
                    .map(|c| base_coords[c] as usize * strides[c])
                    .sum();
                for (k, s) in scratch.iter_mut().enumerate() {
                    *s = data[base + k * stride];
                }
                fft.process(&mut scratch);
                for (k, s) in scratch.iter().enumerate() {
                    data[base + k * stride] = *s;
                }
                // odometer over all axes except `axis`
                for c in (0..d).rev() {
                    if c == axis {
                        continue;
                    }
                    base_coords[c] += 1;
                    if base_coords[c] < patch.extent()[c] {
                        break;
                    }
                    base_coords[c] = 0;
                }
            }
        }
    }

    let cells = n as f64;
    let mut points = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    let mut m = vec![0i64; d];
    for x in &data {
        points.push(
            (0..d)
                .map(|c| m[c] as f64 / patch.extent()[c] as f64)
                .collect(),
        );
        intensity.push(x.norm_sqr() / cells);
        for c in (0..d).rev() {
            m[c] += 1;
            if m[c] < patch.extent()[c] {
                break;
            }
            m[c] = 0;
        }
    }
    Ok(DiffractionGrid {
        dim: d,
        points,
        intensity,
        weights: weights.to_vec(),
        window_extent: patch.extent().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::DEFAULT_MAX_CELLS;
    use crate::rng::Rng;

    fn tm() -> BlockSubstitution {
        BlockSubstitution::thue_morse()
    }

    fn pd() -> BlockSubstitution {
        BlockSubstitution::period_doubling()
    }

    fn tm_patch(level: usize) -> Patch {
        supertile(&[tm()], &vec![1; level], 1, DEFAULT_MAX_CELLS).unwrap()
    }

    fn w10() -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }

    fn w_balanced() -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
    }

    #[test]
    fn thue_morse_frequencies_are_balanced() {
        for level in [1usize, 5, 9] {
            let freq = letter_frequencies(&tm_patch(level));
            assert_eq!(freq, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn period_doubling_frequencies_approach_eigenvector() {
        let patch = supertile(&[pd()], &[1; 10], 1, DEFAULT_MAX_CELLS).unwrap();
        let freq = letter_frequencies(&patch);
        assert!((freq[0] - 2.0 / 3.0).abs() < 1e-2, "freq {:?}", freq);
        assert!((freq[1] - 1.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn single_cell_frequencies() {
        let patch = supertile(&[tm()], &[], 2, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(letter_frequencies(&patch), vec![0.0, 1.0]);
    }

    #[test]
    fn frequencies_sum_to_one_exactly() {
        let patch = supertile(&[tm(), pd()], &[1, 2, 1, 1, 2, 2, 1], 1, DEFAULT_MAX_CELLS).unwrap();
        let sum: f64 = letter_frequencies(&patch).iter().sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn uniform_patch_correlations_are_one() {
        let patch = Patch::from_cells(vec![64], vec![1; 64]);
        let table = pair_correlations(&patch, 8).unwrap();
        for z in table.displacements() {
            assert_eq!(table.frequency(1, 1, &z), 1.0);
        }
    }

    #[test]
    fn zero_displacement_diagonal_sums_to_one() {
        let patch = tm_patch(10);
        let table = pair_correlations(&patch, 16).unwrap();
        let z0 = vec![0i64];
        assert_eq!(table.frequency(1, 2, &z0), 0.0);
        assert_eq!(table.frequency(2, 1, &z0), 0.0);
        let total = table.frequency(1, 1, &z0) + table.frequency(2, 2, &z0);
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radius_guard() {
        let patch = Patch::from_cells(vec![16], vec![1; 16]);
        assert!(matches!(
            pair_correlations(&patch, 4),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    /// Brute-force pair count over an independently eroded window,
    /// written without the table machinery.
    fn oracle_pair_frequency(patch: &Patch, i: Letter, j: Letter, z: i64, radius: i64) -> f64 {
        let extent = patch.extent()[0];
        let cells = patch.cells();
        let mut count = 0u64;
        for x in radius..extent - radius {
            if cells[x as usize] == i && cells[(x + z) as usize] == j {
                count += 1;
            }
        }
        count as f64 / (extent - 2 * radius) as f64
    }

    #[test]
    fn thue_morse_neighbor_pair_frequency() {
        let patch = tm_patch(12);
        let table = pair_correlations(&patch, 32).unwrap();
        let measured = table.frequency(1, 1, &[1]);
        // the infinite-word value is 1/6; a deeper patch provides an
        // independent counting oracle
        let oracle = oracle_pair_frequency(&tm_patch(16), 1, 1, 1, 32);
        assert!((measured - 1.0 / 6.0).abs() < 0.02, "measured {measured}");
        assert!((measured - oracle).abs() < 0.02);
        assert!((oracle - 1.0 / 6.0).abs() < 1e-3, "oracle {oracle}");
    }

    #[test]
    fn table_matches_brute_force_counts() {
        let patch = tm_patch(10);
        let table = pair_correlations(&patch, 8).unwrap();
        for (i, j, z) in [(1u8, 1u8, 3i64), (1, 2, -5), (2, 2, 8), (2, 1, 0)] {
            let expected = oracle_pair_frequency(&patch, i, j, z, 8);
            assert_eq!(table.frequency(i, j, &[z]), expected);
        }
    }

    #[test]
    fn transpose_symmetry_up_to_edge_effects() {
        let patch = tm_patch(12);
        let radius = 16i64;
        let table = pair_correlations(&patch, radius).unwrap();
        let bound = 2.0 * radius as f64 / patch.extent()[0] as f64;
        for i in 1..=2u8 {
            for j in 1..=2u8 {
                for z in table.displacements() {
                    let neg: Vec<i64> = z.iter().map(|v| -v).collect();
                    let diff = (table.frequency(i, j, &z) - table.frequency(j, i, &neg)).abs();
                    assert!(diff < bound, "diff {diff} at {z:?}");
                }
            }
        }
    }

    #[test]
    fn renormalization_residual_thue_morse() {
        let word = vec![1u8; 13];
        let residual =
            renormalization_residual(&[tm()], &word, 1, 32, DEFAULT_MAX_CELLS).unwrap();
        assert!(residual < 0.01, "residual {residual}");
    }

    #[test]
    fn renormalization_residual_constant_rule() {
        let constant = BlockSubstitution::new(
            "const",
            1,
            vec!["a".into(), "b".into()],
            vec![2],
            vec![vec![1, 1], vec![1, 1]],
        );
        let residual =
            renormalization_residual(&[constant], &[1; 10], 1, 8, DEFAULT_MAX_CELLS).unwrap();
        assert!(residual < 1e-12, "residual {residual}");
    }

    #[test]
    fn renormalization_residual_mixed_word() {
        let word: Vec<Letter> = (0..13).map(|i| if i % 3 == 0 { 2 } else { 1 }).collect();
        let residual =
            renormalization_residual(&[tm(), pd()], &word, 1, 32, DEFAULT_MAX_CELLS).unwrap();
        assert!(residual < 0.02, "residual {residual}");
    }

    #[test]
    fn renormalization_residual_planar() {
        let sub = BlockSubstitution::block_4x3();
        let residual = renormalization_residual(
            std::slice::from_ref(&sub),
            &[1; 5],
            1,
            8,
            DEFAULT_MAX_CELLS,
        )
        .unwrap();
        assert!(residual < 0.05, "residual {residual}");
    }

    #[test]
    fn single_cell_intensity_is_flat() {
        let patch = Patch::from_cells(vec![1], vec![1]);
        let grid = diffraction_intensity(
            &patch,
            &w10(),
            &[vec![0.0], vec![0.3], vec![0.77]],
            DEFAULT_MAX_GRID_POINTS,
        )
        .unwrap();
        for &i in &grid.intensity {
            assert!((i - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_chain_peak() {
        // 1212...12 of length 2^12, weight on letter 1 only; the phase
        // sum at t = 1/2 is a geometric sum with closed form N/2
        let n = 1 << 12;
        let cells: Vec<Letter> = (0..n).map(|x| if x % 2 == 0 { 1 } else { 2 }).collect();
        let patch = Patch::from_cells(vec![n as i64], cells);
        let grid =
            diffraction_intensity(&patch, &w10(), &[vec![0.5]], DEFAULT_MAX_GRID_POINTS).unwrap();
        let expected = (n as f64 / 2.0).powi(2) / n as f64;
        assert!((grid.intensity[0] - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn forward_peak_matches_frequencies() {
        let patch = tm_patch(10);
        let grid =
            diffraction_intensity(&patch, &w10(), &[vec![0.0]], DEFAULT_MAX_GRID_POINTS).unwrap();
        let freq = letter_frequencies(&patch);
        let expected = freq[0] * freq[0] * patch.len() as f64;
        assert!((grid.intensity[0] - expected).abs() < 1e-6);
    }

    /// Phase sum evaluated term by term through the library exponential;
    /// no incremental products.
    fn oracle_intensity(patch: &Patch, weights: &[Complex64], t: &[f64]) -> f64 {
        let d = patch.dim();
        let mut coords = vec![0i64; d];
        let mut sum = Complex64::new(0.0, 0.0);
        for &letter in patch.cells() {
            let dot: f64 = (0..d).map(|c| t[c] * coords[c] as f64).sum();
            sum += weights[letter as usize - 1] * Complex64::from_polar(1.0, -TAU * frac(dot));
            for c in (0..d).rev() {
                coords[c] += 1;
                if coords[c] < patch.extent()[c] {
                    break;
                }
                coords[c] = 0;
            }
        }
        sum.norm_sqr() / patch.len() as f64
    }

    #[test]
    fn direct_sum_matches_bruteforce_oracle() {
        let patch = tm_patch(14);
        let weights = w_balanced();
        let mut rng = Rng::new(77);
        let mut grid_points = Vec::new();
        for _ in 0..20 {
            grid_points.push(vec![rng.next_f64()]);
        }
        grid_points.push(vec![1.0 / 3.0]);
        let grid =
            diffraction_intensity(&patch, &weights, &grid_points, DEFAULT_MAX_GRID_POINTS).unwrap();
        for (t, &i) in grid_points.iter().zip(&grid.intensity) {
            let oracle = oracle_intensity(&patch, &weights, t);
            assert!((i - oracle).abs() < 1e-10, "t {t:?}: {i} vs {oracle}");
        }
    }

    #[test]
    fn scaling_peak_is_stable_between_levels() {
        // at t = 1/3 the balanced-weight intensity grows like
        // (3/2)^level, so the scaling exponent log I / log N is
        // level-independent
        let t = vec![1.0 / 3.0];
        let mut exponents = Vec::new();
        for level in [13usize, 14] {
            let patch = tm_patch(level);
            let grid = diffraction_intensity(
                &patch,
                &w_balanced(),
                std::slice::from_ref(&t),
                DEFAULT_MAX_GRID_POINTS,
            )
            .unwrap();
            exponents.push(grid.intensity[0].ln() / (patch.len() as f64).ln());
        }
        let diff = (exponents[0] - exponents[1]).abs();
        assert!(
            diff < 0.2 * exponents[0].abs().max(exponents[1].abs()),
            "exponents {exponents:?}"
        );
        let expected = (1.5f64).ln() / 2.0f64.ln();
        assert!((exponents[1] - expected).abs() < 0.02, "exponents {exponents:?}");
    }

    #[test]
    fn dft_grid_matches_direct_summation() {
        let patch = tm_patch(8);
        let weights = w_balanced();
        let dft = diffraction_dft_grid(&patch, &weights, DEFAULT_MAX_GRID_POINTS).unwrap();
        let direct =
            diffraction_intensity(&patch, &weights, &dft.points, DEFAULT_MAX_GRID_POINTS).unwrap();
        for (a, b) in dft.intensity.iter().zip(&direct.intensity) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn dft_grid_matches_direct_summation_planar() {
        let sub = BlockSubstitution::block_4x3();
        let patch = supertile(std::slice::from_ref(&sub), &[1, 1], 1, DEFAULT_MAX_CELLS).unwrap();
        let weights = w_balanced();
        let dft = diffraction_dft_grid(&patch, &weights, DEFAULT_MAX_GRID_POINTS).unwrap();
        let direct =
            diffraction_intensity(&patch, &weights, &dft.points, DEFAULT_MAX_GRID_POINTS).unwrap();
        for (a, b) in dft.intensity.iter().zip(&direct.intensity) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn parseval_identity_on_dft_grid() {
        let patch = tm_patch(12);
        let weights = w_balanced();
        let grid = diffraction_dft_grid(&patch, &weights, DEFAULT_MAX_GRID_POINTS).unwrap();
        let mean: f64 = grid.intensity.iter().sum::<f64>() / grid.intensity.len() as f64;
        let expected: f64 = patch
            .cells()
            .iter()
            .map(|&l| weights[l as usize - 1].norm_sqr())
            .sum::<f64>()
            / patch.len() as f64;
        assert!((mean - expected).abs() < 1e-9, "{mean} vs {expected}");
    }

    #[test]
    fn intensity_is_symmetric_for_real_weights() {
        let patch = tm_patch(10);
        let weights = w_balanced();
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let t = rng.next_f64();
            let grid = diffraction_intensity(
                &patch,
                &weights,
                &[vec![t], vec![1.0 - t]],
                DEFAULT_MAX_GRID_POINTS,
            )
            .unwrap();
            assert!((grid.intensity[0] - grid.intensity[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_cap_is_enforced() {
        let patch = tm_patch(8);
        let err = diffraction_dft_grid(&patch, &w10(), 16).unwrap_err();
        assert!(err.is_resource_cap());
    }
}
