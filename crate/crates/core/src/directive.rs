//! Directive sequences and the torus component of the skew product.
//!
//! A directive source is a deterministic or seeded-random stream of
//! 1-based symbols selecting which substitution acts at each level. The
//! stochastic kinds draw from the in-repo generator, so identical
//! `(kind, parameters, seed)` always replay the same sequence. Only
//! forward orbits are generated; nothing here needs an invertible
//! system.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::substitution::{BlockSubstitution, Letter};
use crate::util::{frac, Kahan};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DirectiveKind {
    /// The same symbol forever.
    Constant { letter: Letter },
    /// Cycles through a fixed word.
    PeriodicWord { word: Vec<Letter> },
    /// I.i.d. draws from a probability vector.
    Bernoulli { probs: Vec<f64> },
    /// A finite Markov chain; `rows[i]` is the distribution of the
    /// successor of state `i+1`.
    Markov { rows: Vec<Vec<f64>>, initial: Vec<f64> },
    /// Coding of the rotation `x -> x + alpha mod 1` by the interval
    /// partition with the given cut points. `cuts` must be strictly
    /// increasing inside `(0,1)`; cell `j` is `[cuts[j-1], cuts[j])`
    /// with sentinels 0 and 1. Irrational `alpha` makes the rotation
    /// ergodic and surjective; rationality of user input is not checked.
    RotationCoding { alpha: f64, cuts: Vec<f64>, start: f64 },
}

#[derive(Debug, Clone)]
pub struct DirectiveSource {
    kind: DirectiveKind,
    seed: u64,
    rng: Rng,
    step: u64,
    markov_state: Option<Letter>,
    rotation_pos: Kahan,
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::BadParameter(format!("{what}: empty distribution")));
    }
    if p.iter().any(|&x| !(0.0..=1.0 + PROB_TOL).contains(&x)) {
        return Err(Error::BadParameter(format!(
            "{what}: entries must lie in [0,1]"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::BadParameter(format!(
            "{what}: entries sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl DirectiveSource {
    pub fn new(kind: DirectiveKind, seed: u64) -> Result<Self> {
        match &kind {
            DirectiveKind::Constant { letter } => {
                if *letter == 0 {
                    return Err(Error::BadParameter("constant letter must be >= 1".into()));
                }
            }
            DirectiveKind::PeriodicWord { word } => {
                if word.is_empty() {
                    return Err(Error::BadParameter("word must be non-empty".into()));
                }
                if word.contains(&0) {
                    return Err(Error::BadParameter("word letters must be >= 1".into()));
                }
            }
            DirectiveKind::Bernoulli { probs } => check_distribution(probs, "bernoulli")?,
            DirectiveKind::Markov { rows, initial } => {
                if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(Error::BadParameter(
                        "markov matrix must be square and non-empty".into(),
                    ));
                }
                for (i, row) in rows.iter().enumerate() {
                    check_distribution(row, &format!("markov row {}", i + 1))?;
                }
                if initial.len() != rows.len() {
                    return Err(Error::BadParameter(
                        "markov initial distribution has wrong length".into(),
                    ));
                }
                check_distribution(initial, "markov initial")?;
            }
            DirectiveKind::RotationCoding { cuts, start, .. } => {
                if cuts.is_empty() {
                    return Err(Error::BadParameter(
                        "rotation coding needs at least one cut".into(),
                    ));
                }
                let mut prev = 0.0;
                for &c in cuts {
                    if !(c > prev && c < 1.0) {
                        return Err(Error::BadParameter(
                            "cuts must be strictly increasing inside (0,1)".into(),
                        ));
                    }
                    prev = c;
                }
                if !(0.0..1.0).contains(start) {
                    return Err(Error::BadParameter("start must lie in [0,1)".into()));
                }
            }
        }
        let rotation_pos = match &kind {
            DirectiveKind::RotationCoding { start, .. } => Kahan::new(*start),
            _ => Kahan::new(0.0),
        };
        Ok(DirectiveSource {
            kind,
            seed,
            rng: Rng::new(seed),
            step: 0,
            markov_state: None,
            rotation_pos,
        })
    }

    /// Parses the textual spec used on the command line:
    /// `const:2`, `word:1211`, `word:1,2,1,1`, `bernoulli:0.5,0.5`,
    /// `markov:0.9,0.1;0.2,0.8[@init1,init2]`,
    /// `rotation:alpha=0.618,cut=0.382[,start=0]` (several cuts may be
    /// separated by `|`).
    pub fn parse(spec: &str, seed: u64) -> Result<Self> {
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::BadDirective(format!("missing `:` in `{spec}`")))?;
        let bad = |msg: String| Error::BadDirective(msg);
        let kind = match head {
            "const" | "constant" => {
                let letter: Letter = rest
                    .parse()
                    .map_err(|_| bad(format!("bad constant letter `{rest}`")))?;
                DirectiveKind::Constant { letter }
            }
            "word" => {
                let word: Vec<Letter> = if rest.contains(',') {
                    rest.split(',')
                        .map(|s| s.trim().parse::<Letter>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad word `{rest}`")))?
                } else {
                    rest.chars()
                        .map(|ch| {
                            ch.to_digit(10)
                                .filter(|&v| v >= 1)
                                .map(|v| v as Letter)
                                .ok_or_else(|| bad(format!("bad word digit `{ch}`")))
                        })
                        .collect::<Result<_>>()?
                };
                DirectiveKind::PeriodicWord { word }
            }
            "bernoulli" => {
                let probs: Vec<f64> = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("bad probability vector `{rest}`")))?;
                DirectiveKind::Bernoulli { probs }
            }
            "markov" => {
                let (matrix_part, init_part) = match rest.split_once('@') {
                    Some((m, i)) => (m, Some(i)),
                    None => (rest, None),
                };
                let rows: Vec<Vec<f64>> = matrix_part
                    .split(';')
                    .map(|row| {
                        row.split(',')
                            .map(|s| s.trim().parse::<f64>())
                            .collect::<std::result::Result<Vec<f64>, _>>()
                    })
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("bad markov matrix `{matrix_part}`")))?;
                let initial = match init_part {
                    Some(i) => i
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad initial distribution `{i}`")))?,
                    None => vec![1.0 / rows.len() as f64; rows.len()],
                };
                DirectiveKind::Markov { rows, initial }
            }
            "rotation" => {
                let mut alpha = None;
                let mut cuts = Vec::new();
                let mut start = 0.0;
                for item in rest.split(',') {
                    let (key, value) = item
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected key=value, got `{item}`")))?;
                    match key.trim() {
                        "alpha" => {
                            alpha = Some(
                                value
                                    .trim()
                                    .parse::<f64>()
                                    .map_err(|_| bad(format!("bad alpha `{value}`")))?,
                            )
                        }
                        "cut" | "cuts" => {
                            for v in value.split('|') {
                                cuts.push(
                                    v.trim()
                                        .parse::<f64>()
                                        .map_err(|_| bad(format!("bad cut `{v}`")))?,
                                );
                            }
                        }
                        "start" | "x0" => {
                            start = value
                                .trim()
                                .parse::<f64>()
                                .map_err(|_| bad(format!("bad start `{value}`")))?
                        }
                        other => return Err(bad(format!("unknown rotation key `{other}`"))),
                    }
                }
                let alpha =
                    alpha.ok_or_else(|| bad("rotation spec needs alpha=".to_string()))?;
                DirectiveKind::RotationCoding { alpha, cuts, start }
            }
            other => return Err(bad(format!("unknown directive kind `{other}`"))),
        };
        DirectiveSource::new(kind, seed)
    }

    pub fn kind(&self) -> &DirectiveKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh copy restarted from step 0 with a seed derived for the
    /// given replica index. Deterministic kinds replay the same stream.
    pub fn replica(&self, index: u64) -> DirectiveSource {
        DirectiveSource::new(self.kind.clone(), derive_seed(self.seed, index))
            .expect("validated kind stays valid")
    }

    /// Next symbol of the stream.
    pub fn next_symbol(&mut self) -> Letter {
        let step = self.step;
        self.step += 1;
        match &self.kind {
            DirectiveKind::Constant { letter } => *letter,
            DirectiveKind::PeriodicWord { word } => word[(step % word.len() as u64) as usize],
            DirectiveKind::Bernoulli { probs } => draw(&mut self.rng, probs),
            DirectiveKind::Markov { rows, initial } => {
                let next = match self.markov_state {
                    None => draw(&mut self.rng, initial),
                    Some(s) => draw(&mut self.rng, &rows[s as usize - 1]),
                };
                self.markov_state = Some(next);
                next
            }
            DirectiveKind::RotationCoding { alpha, cuts, .. } => {
                let x = frac(self.rotation_pos.value());
                let symbol = 1 + cuts.iter().filter(|&&c| x >= c).count() as Letter;
                // advance with compensated summation to delay drift of
                // the orbit x0 + n*alpha
                self.rotation_pos.add(*alpha);
                let k = self.rotation_pos.value().floor();
                if k != 0.0 {
                    self.rotation_pos.sub_int(k);
                }
                symbol
            }
        }
    }

    /// The invariant measure of each coding cell, in closed form per
    /// kind. Indexed by `letter - 1`; the length is the largest letter
    /// the source can emit.
    pub fn measures(&self) -> Vec<f64> {
        match &self.kind {
            DirectiveKind::Constant { letter } => {
                let mut mu = vec![0.0; *letter as usize];
                mu[*letter as usize - 1] = 1.0;
                mu
            }
            DirectiveKind::PeriodicWord { word } => {
                let m = *word.iter().max().unwrap() as usize;
                let mut mu = vec![0.0; m];
                for &w in word {
                    mu[w as usize - 1] += 1.0 / word.len() as f64;
                }
                mu
            }
            DirectiveKind::Bernoulli { probs } => probs.clone(),
            DirectiveKind::Markov { rows, initial } => stationary_distribution(rows, initial),
            DirectiveKind::RotationCoding { cuts, .. } => {
                let mut bounds = Vec::with_capacity(cuts.len() + 2);
                bounds.push(0.0);
                bounds.extend_from_slice(cuts);
                bounds.push(1.0);
                bounds.windows(2).map(|w| w[1] - w[0]).collect()
            }
        }
    }
}

fn draw(rng: &mut Rng, probs: &[f64]) -> Letter {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return (i + 1) as Letter;
        }
    }
    probs.len() as Letter
}

/// Stationary distribution by averaged power iteration; the Cesaro
/// average also covers periodic chains.
fn stationary_distribution(rows: &[Vec<f64>], initial: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let mut pi = initial.to_vec();
    let mut avg = vec![0.0; n];
    let burn_in = 512;
    let window = 512;
    for it in 0..burn_in + window {
        let mut next = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for j in 0..n {
                next[j] += pi[i] * row[j];
            }
        }
        pi = next;
        if it >= burn_in {
            for j in 0..n {
                avg[j] += pi[j];
            }
        }
    }
    let total: f64 = avg.iter().sum();
    for a in &mut avg {
        *a /= total;
    }
    avg
}

/// Torus point of the skew-product orbit, with the level counter and
/// the symbol that produced the last advance.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewOrbitState {
    pub torus: Vec<f64>,
    pub step: u64,
    pub directive_index: Letter,
}

impl SkewOrbitState {
    pub fn new(t: &[f64]) -> Self {
        SkewOrbitState {
            torus: t.iter().map(|&x| frac(x)).collect(),
            step: 0,
            directive_index: 0,
        }
    }

    /// One application of the expanding torus map: each coordinate is
    /// multiplied by the expansion entry of its axis and reduced mod 1.
    pub fn advance(&mut self, sub: &BlockSubstitution) {
        debug_assert_eq!(self.torus.len(), sub.dim());
        for (x, &e) in self.torus.iter_mut().zip(sub.expansion()) {
            *x = frac(*x * e as f64);
        }
        self.step += 1;
    }
}

/// Pure variant of [`SkewOrbitState::advance`].
pub fn skew_step(state: &SkewOrbitState, sub: &BlockSubstitution) -> SkewOrbitState {
    let mut next = state.clone();
    next.advance(sub);
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(src: &mut DirectiveSource, n: usize) -> Vec<Letter> {
        (0..n).map(|_| src.next_symbol()).collect()
    }

    #[test]
    fn constant_stream() {
        let mut src =
            DirectiveSource::new(DirectiveKind::Constant { letter: 1 }, 99).unwrap();
        assert_eq!(collect(&mut src, 5), vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn degenerate_bernoulli_ignores_seed() {
        for seed in [1u64, 2, 3] {
            let mut src = DirectiveSource::new(
                DirectiveKind::Bernoulli {
                    probs: vec![1.0, 0.0],
                },
                seed,
            )
            .unwrap();
            assert!(collect(&mut src, 100).iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn periodic_word_cycles() {
        let mut src = DirectiveSource::new(
            DirectiveKind::PeriodicWord { word: vec![1, 2, 1] },
            0,
        )
        .unwrap();
        assert_eq!(collect(&mut src, 7), vec![1, 2, 1, 1, 2, 1, 1]);
    }

    #[test]
    fn sturmian_coding_matches_direct_orbit() {
        let alpha = 0.618_033_988_749_894_8;
        let cut = 1.0 - alpha;
        let mut src = DirectiveSource::new(
            DirectiveKind::RotationCoding {
                alpha,
                cuts: vec![cut],
                start: 0.0,
            },
            0,
        )
        .unwrap();
        let symbols = collect(&mut src, 8);
        let expected: Vec<Letter> = (0..8)
            .map(|n| {
                let x = frac(n as f64 * alpha);
                if x < cut {
                    1
                } else {
                    2
                }
            })
            .collect();
        assert_eq!(symbols, expected);
    }

    #[test]
    fn reproducible_streams() {
        let kind = DirectiveKind::Bernoulli {
            probs: vec![0.25, 0.5, 0.25],
        };
        let mut a = DirectiveSource::new(kind.clone(), 2024).unwrap();
        let mut b = DirectiveSource::new(kind, 2024).unwrap();
        for _ in 0..1_000_000 {
            assert_eq!(a.next_symbol(), b.next_symbol());
        }
    }

    #[test]
    fn empirical_frequency_of_default_seeded_bernoulli() {
        let mut src = DirectiveSource::new(
            DirectiveKind::Bernoulli {
                probs: vec![0.3, 0.7],
            },
            42,
        )
        .unwrap();
        let n = 100_000;
        let ones = (0..n).filter(|_| src.next_symbol() == 1).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn markov_measures_are_stationary() {
        let rows = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        let src = DirectiveSource::new(
            DirectiveKind::Markov {
                rows: rows.clone(),
                initial: vec![0.5, 0.5],
            },
            7,
        )
        .unwrap();
        let mu = src.measures();
        // pi = pi P for the two-state chain: pi1 = 2/3, pi2 = 1/3
        assert!((mu[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((mu[1] - 1.0 / 3.0).abs() < 1e-9);
        // empirical check
        let mut s = src.clone();
        let n = 200_000;
        let ones = (0..n).filter(|_| s.next_symbol() == 1).count();
        assert!((ones as f64 / n as f64 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn replicas_differ_for_stochastic_kinds() {
        let src = DirectiveSource::new(
            DirectiveKind::Bernoulli {
                probs: vec![0.5, 0.5],
            },
            5,
        )
        .unwrap();
        let mut a = src.replica(0);
        let mut b = src.replica(1);
        let sa = collect(&mut a, 64);
        let sb = collect(&mut b, 64);
        assert_ne!(sa, sb);
    }

    #[test]
    fn parse_roundtrip() {
        let s = DirectiveSource::parse("bernoulli:0.5,0.5", 1).unwrap();
        assert!(matches!(s.kind(), DirectiveKind::Bernoulli { .. }));
        let s = DirectiveSource::parse("word:121", 1).unwrap();
        assert!(matches!(s.kind(), DirectiveKind::PeriodicWord { .. }));
        let s = DirectiveSource::parse(
            "rotation:alpha=0.6180339887,cut=0.3819660113",
            1,
        )
        .unwrap();
        assert!(matches!(s.kind(), DirectiveKind::RotationCoding { .. }));
        let s = DirectiveSource::parse("markov:0.9,0.1;0.2,0.8@0.5,0.5", 1).unwrap();
        assert!(matches!(s.kind(), DirectiveKind::Markov { .. }));
        assert!(DirectiveSource::parse("bogus:1", 1).is_err());
        assert!(DirectiveSource::parse("bernoulli:0.5,0.6", 1).is_err());
    }

    #[test]
    fn zero_is_fixed_by_the_torus_map() {
        let tm = BlockSubstitution::thue_morse();
        let mut state = SkewOrbitState::new(&[0.0]);
        for _ in 0..10 {
            state.advance(&tm);
            assert_eq!(state.torus[0], 0.0);
        }
        assert_eq!(state.step, 10);
    }

    #[test]
    fn doubling_on_thirds_has_period_two() {
        let tm = BlockSubstitution::thue_morse();
        let mut state = SkewOrbitState::new(&[1.0 / 3.0]);
        state.advance(&tm);
        assert!((state.torus[0] - 2.0 / 3.0).abs() < 1e-14);
        state.advance(&tm);
        assert!((state.torus[0] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn planar_expansion_acts_per_axis() {
        let sub = BlockSubstitution::block_4x3();
        let state = SkewOrbitState::new(&[0.2, 1.0 / 7.0]);
        let next = skew_step(&state, &sub);
        assert!((next.torus[0] - 0.8).abs() < 1e-14);
        assert!((next.torus[1] - 3.0 / 7.0).abs() < 1e-14);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn rational_orbits_track_exact_arithmetic() {
        // doubling map on p/q with odd q, tracked exactly in integers;
        // the float orbit doubles its initial rounding error each step,
        // so only a short horizon is compared
        let tm = BlockSubstitution::thue_morse();
        let q = 11u64;
        let mut num = 4u64;
        let mut state = SkewOrbitState::new(&[num as f64 / q as f64]);
        for _ in 0..20 {
            state.advance(&tm);
            num = (2 * num) % q;
            assert!((state.torus[0] - num as f64 / q as f64).abs() < 1e-9);
        }
    }
}
