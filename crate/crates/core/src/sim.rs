//! Monte Carlo side: random datasets, k-letter obfuscation, degree ranks,
//! the empirical KRCC, and a maximum-likelihood fingerprint matcher.
//!
//! Every random draw comes from a ChaCha stream whose seed is derived from a
//! master seed and a (stream, index) pair, so rows and trials can be
//! processed in any order, or in parallel, with bit-identical results.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{BinaryChannel, BinaryDist};
use crate::scalar::Scalar;

/// Independent random streams carved out of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    DatasetRow = 1,
    ObfuscationRow = 2,
    Trial = 3,
    Attack = 4,
    Data = 5,
    Obfuscation = 6,
    Experiment = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(stream, index)` under `master`.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ index)
}

fn rng_for(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// How rows with equal degree are ordered when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Equal degrees are ranked by row index, so ranks form a permutation.
    #[default]
    IndexOrder,
    /// Compare degrees directly with strict inequalities; tied pairs never
    /// count as inverted.
    Strict,
}

/// An `n x m` binary matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    m: usize,
    cells: Vec<u8>,
}

impl Dataset {
    pub fn new(n: usize, m: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != n * m {
            return Err(Error::Shape(format!(
                "{} cells for a {n} x {m} dataset",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::Shape(format!("cell value {bad} is not binary")));
        }
        Ok(Self { n, m, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("rows have different lengths".to_string()));
        }
        Self::new(rows.len(), m, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.m..(i + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.m + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        // chunks_exact panics on 0
        self.cells.chunks_exact(self.m.max(1)).take(self.n)
    }
}

/// Obfuscation acting on size-`k` blocks of each row.
///
/// `table[a * 2^k + b]` is the probability of output block `b` given input
/// block `a`, where a block's bits are read most significant first in the
/// order of the partition's column list.
#[derive(Debug, Clone, PartialEq)]
pub struct KLetterMechanism<T> {
    k: usize,
    table: Vec<T>,
}

const MAX_BLOCK: usize = 12;

impl<T: Scalar> KLetterMechanism<T> {
    pub fn new(k: usize, table: Vec<T>) -> Result<Self> {
        if k == 0 || k > MAX_BLOCK {
            return Err(Error::Shape(format!(
                "block length {k} outside 1..={MAX_BLOCK}"
            )));
        }
        let size = 1usize << k;
        if table.len() != size * size {
            return Err(Error::Shape(format!(
                "{} table entries for block length {k} (need {})",
                table.len(),
                size * size
            )));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize(size * 4).unwrap());
        for (a, row) in table.chunks_exact(size).enumerate() {
            if row.iter().any(|p| !(*p >= T::zero())) {
                return Err(Error::Shape(format!("row {a} has a negative entry")));
            }
            let total = row.iter().fold(T::zero(), |s, &p| s + p);
            if (total - T::one()).abs() > tol {
                return Err(Error::Shape(format!("row {a} sums to {total}")));
            }
        }
        Ok(Self { k, table })
    }

    /// Single-letter mechanism.
    pub fn from_channel(channel: &BinaryChannel<T>) -> Self {
        Self::product(channel, 1).expect("k = 1 is always valid")
    }

    /// `channel` applied independently to each of the `k` letters.
    pub fn product(channel: &BinaryChannel<T>, k: usize) -> Result<Self> {
        if k == 0 || k > MAX_BLOCK {
            return Err(Error::Shape(format!(
                "block length {k} outside 1..={MAX_BLOCK}"
            )));
        }
        let size = 1usize << k;
        let mut table = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                let p = (0..k).fold(T::one(), |acc, t| {
                    let x = ((a >> t) & 1) as u8;
                    let y = ((b >> t) & 1) as u8;
                    acc * channel.transition(x, y)
                });
                table.push(p);
            }
        }
        Ok(Self { k, table })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn transition(&self, input: usize, output: usize) -> T {
        self.table[input * (1 << self.k) + output]
    }

    /// The underlying binary channel when `k = 1`.
    pub fn channel(&self) -> Option<BinaryChannel<T>> {
        if self.k != 1 {
            return None;
        }
        BinaryChannel::new(self.table[1], self.table[2]).ok()
    }
}

/// One attack draw: the victim, the queried columns, and the noisy
/// fingerprint read from the victim's original row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintTrial {
    pub victim: usize,
    pub query_columns: Vec<usize>,
    pub fingerprint: Vec<u8>,
}

/// IID `Bernoulli(px)` cells; row `i` uses its own derived stream.
pub fn generate_dataset<T: Scalar>(n: usize, m: usize, px: &BinaryDist<T>, seed: u64) -> Dataset {
    let p = px.p_one().as_f64();
    let mut cells = vec![0u8; n * m];
    for (i, row) in cells.chunks_exact_mut(m.max(1)).enumerate().take(n) {
        let mut rng = rng_for(seed, Stream::DatasetRow, i as u64);
        for c in row.iter_mut() {
            *c = (rng.random::<f64>() < p) as u8;
        }
    }
    Dataset { n, m, cells }
}

/// Passes `ds` through `mech`. With `k = 1` each cell goes through the binary
/// channel directly; otherwise see [`obfuscate_blocks`].
pub fn obfuscate<T: Scalar>(
    ds: &Dataset,
    mech: &KLetterMechanism<T>,
    seed: u64,
) -> Result<Dataset> {
    let Some(channel) = mech.channel() else {
        return obfuscate_blocks(ds, mech, seed);
    };
    let flip_zero = channel.p1().as_f64();
    let flip_one = channel.p2().as_f64();
    let mut cells = ds.cells.clone();
    for (i, row) in cells.chunks_exact_mut(ds.m.max(1)).enumerate().take(ds.n) {
        let mut rng = rng_for(seed, Stream::ObfuscationRow, i as u64);
        for c in row.iter_mut() {
            let u = rng.random::<f64>();
            *c = if *c == 0 {
                (u < flip_zero) as u8
            } else {
                (u >= flip_one) as u8
            };
        }
    }
    Ok(Dataset { cells, ..*ds })
}

/// General k-letter path: every row gets a fresh uniform partition of its
/// columns into `m / k` blocks, and each block is resampled from the table.
pub fn obfuscate_blocks<T: Scalar>(
    ds: &Dataset,
    mech: &KLetterMechanism<T>,
    seed: u64,
) -> Result<Dataset> {
    let k = mech.k;
    if !ds.m.is_multiple_of(k) {
        return Err(Error::Shape(format!(
            "block length {k} does not divide entry length {}",
            ds.m
        )));
    }
    let size = 1usize << k;
    let cumulative: Vec<f64> = mech
        .table
        .chunks_exact(size)
        .flat_map(|row| {
            row.iter().scan(0.0f64, |acc, p| {
                *acc += p.as_f64();
                Some(*acc)
            })
        })
        .collect();

    let mut cells = ds.cells.clone();
    let mut columns: Vec<usize> = (0..ds.m).collect();
    for i in 0..ds.n {
        let mut rng = rng_for(seed, Stream::ObfuscationRow, i as u64);
        columns.sort_unstable();
        columns.shuffle(&mut rng);
        let row = &mut cells[i * ds.m..(i + 1) * ds.m];
        for block in columns.chunks_exact(k) {
            let input = block
                .iter()
                .fold(0usize, |acc, &j| (acc << 1) | row[j] as usize);
            let cdf = &cumulative[input * size..(input + 1) * size];
            let u = rng.random::<f64>();
            let output = cdf.iter().position(|&c| u < c).unwrap_or(size - 1);
            for (t, &j) in block.iter().enumerate() {
                row[j] = ((output >> (k - 1 - t)) & 1) as u8;
            }
        }
    }
    Ok(Dataset { cells, ..*ds })
}

/// Row sums.
pub fn degrees(ds: &Dataset) -> Vec<u32> {
    ds.rows()
        .map(|r| r.iter().map(|&c| c as u32).sum())
        .collect()
}

/// Rank of each row by degree (0 = smallest), equal degrees ordered by row
/// index.
pub fn ranks(degrees: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..degrees.len()).collect();
    order.sort_by_key(|&i| (degrees[i], i));
    let mut rank = vec![0; degrees.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Fraction of ordered pairs `(i, j)` ranked above in `dx` but below in `dy`,
/// normalized by `n (n - 1)`. Ties follow [`TieRule::IndexOrder`].
pub fn empirical_krcc(dx: &[u32], dy: &[u32]) -> Result<f64> {
    empirical_krcc_with(dx, dy, TieRule::IndexOrder)
}

pub fn empirical_krcc_with(dx: &[u32], dy: &[u32], ties: TieRule) -> Result<f64> {
    if dx.len() != dy.len() {
        return Err(Error::Shape(format!(
            "degree vectors have lengths {} and {}",
            dx.len(),
            dy.len()
        )));
    }
    let n = dx.len();
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 rows, got {n}")));
    }
    let (kx, ky): (Vec<u64>, Vec<u64>) = match ties {
        TieRule::IndexOrder => (
            ranks(dx).into_iter().map(|r| r as u64).collect(),
            ranks(dy).into_iter().map(|r| r as u64).collect(),
        ),
        TieRule::Strict => (
            dx.iter().map(|&d| d as u64).collect(),
            dy.iter().map(|&d| d as u64).collect(),
        ),
    };
    let mut inverted = 0u64;
    for i in 0..n {
        for j in 0..n {
            if kx[i] > kx[j] && ky[i] < ky[j] {
                inverted += 1;
            }
        }
    }
    Ok(inverted as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Sizes, seed and execution policy for repeated trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub ties: TieRule,
    pub execution: Execution,
}

impl TrialPlan {
    pub fn new(n: usize, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            trials,
            seed,
            ties: TieRule::default(),
            execution: Execution::default(),
        }
    }

    pub fn parallel(mut self) -> Self {
        self.execution = Execution::Parallel;
        self
    }

    pub fn with_ties(mut self, ties: TieRule) -> Self {
        self.ties = ties;
        self
    }
}

/// Mean and standard error over independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl TrialSummary {
    /// Summarizes values in the given order, so the float sums are identical
    /// regardless of how the values were produced.
    pub fn from_values(values: &[f64]) -> Self {
        let t = values.len();
        let mean = values.iter().sum::<f64>() / t as f64;
        let stderr = if t > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t as f64 - 1.0);
            (var / t as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials: t,
        }
    }
}

fn run_trials<R: Send>(
    execution: Execution,
    trials: usize,
    f: impl Fn(u64) -> R + Sync + Send,
) -> Vec<R> {
    match execution {
        Execution::Serial => (0..trials as u64).map(f).collect(),
        Execution::Parallel => (0..trials as u64).into_par_iter().map(f).collect(),
    }
}

/// Generate, obfuscate and score `plan.trials` independent datasets.
pub fn krcc_trials<T: Scalar>(
    plan: &TrialPlan,
    px: &BinaryDist<T>,
    mech: &KLetterMechanism<T>,
) -> Result<TrialSummary> {
    if plan.trials == 0 {
        return Err(Error::Config("trials must be at least 1".to_string()));
    }
    if plan.n < 2 || plan.m == 0 {
        return Err(Error::Config(format!(
            "need n >= 2 and m >= 1 (got n = {}, m = {})",
            plan.n, plan.m
        )));
    }
    if !plan.m.is_multiple_of(mech.k()) {
        return Err(Error::Shape(format!(
            "block length {} does not divide entry length {}",
            mech.k(),
            plan.m
        )));
    }
    let values = run_trials(plan.execution, plan.trials, |t| -> Result<f64> {
        let trial_seed = derive_seed(plan.seed, Stream::Trial, t);
        let x = generate_dataset(plan.n, plan.m, px, derive_seed(trial_seed, Stream::Data, 0));
        let y = obfuscate(&x, mech, derive_seed(trial_seed, Stream::Obfuscation, 0))?;
        empirical_krcc_with(&degrees(&x), &degrees(&y), plan.ties)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(TrialSummary::from_values(&values))
}

/// Attack parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackPlan {
    /// Fingerprint length.
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    pub execution: Execution,
}

/// Identification accuracy with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub accuracy: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Draws a victim, `q` distinct columns, and the noisy fingerprint.
pub fn draw_fingerprint<T: Scalar, R: Rng>(
    original: &Dataset,
    query: &BinaryChannel<T>,
    q: usize,
    rng: &mut R,
) -> FingerprintTrial {
    let victim = rng.random_range(0..original.n);
    let query_columns = index::sample(rng, original.m, q).into_vec();
    let fingerprint = query_columns
        .iter()
        .map(|&j| {
            let x = original.get(victim, j);
            (rng.random::<f64>() < query.transition(x, 1).as_f64()) as u8
        })
        .collect();
    FingerprintTrial {
        victim,
        query_columns,
        fingerprint,
    }
}

/// Maximum-likelihood guess of the victim row; ties go to the lowest index.
pub fn identify<T: Scalar>(
    released: &Dataset,
    trial: &FingerprintTrial,
    f_given_y: &BinaryChannel<T>,
) -> usize {
    let log_lik = [0u8, 1].map(|y| [0u8, 1].map(|f| f_given_y.transition(y, f).as_f64().ln()));
    let mut best: Option<(usize, f64)> = None;
    for (u, row) in released.rows().enumerate() {
        let score: f64 = trial
            .query_columns
            .iter()
            .zip(&trial.fingerprint)
            .map(|(&j, &f)| log_lik[row[j] as usize][f as usize])
            .sum();
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((u, score));
        }
    }
    best.map_or(0, |(u, _)| u)
}

/// Fraction of trials in which the matcher picks the victim's row of the
/// released dataset.
pub fn fingerprint_attack<T: Scalar>(
    released: &Dataset,
    original: &Dataset,
    query: &BinaryChannel<T>,
    f_given_y: &BinaryChannel<T>,
    plan: &AttackPlan,
) -> Result<AttackOutcome> {
    if released.n != original.n || released.m != original.m {
        return Err(Error::Shape(format!(
            "released {} x {} vs original {} x {}",
            released.n, released.m, original.n, original.m
        )));
    }
    if plan.q > original.m {
        return Err(Error::Shape(format!(
            "fingerprint length {} exceeds entry length {}",
            plan.q, original.m
        )));
    }
    if plan.trials == 0 || original.n == 0 {
        return Err(Error::Config(
            "need at least one trial and one row".to_string(),
        ));
    }
    let hits: usize = run_trials(plan.execution, plan.trials, |t| {
        let mut rng = rng_for(plan.seed, Stream::Attack, t);
        let trial = draw_fingerprint(original, query, plan.q, &mut rng);
        (identify(released, &trial, f_given_y) == trial.victim) as usize
    })
    .into_iter()
    .sum();
    let accuracy = hits as f64 / plan.trials as f64;
    Ok(AttackOutcome {
        accuracy,
        stderr: (accuracy * (1.0 - accuracy) / plan.trials as f64).sqrt(),
        trials: plan.trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::compose_f_given_y;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn bsc(c: f64) -> BinaryChannel<f64> {
        BinaryChannel::bsc(c).unwrap()
    }

    fn disagreement(a: &Dataset, b: &Dataset) -> f64 {
        let diff = a
            .cells()
            .iter()
            .zip(b.cells())
            .filter(|(x, y)| x != y)
            .count();
        diff as f64 / a.cells().len() as f64
    }

    #[test]
    fn degenerate_sources() {
        let z = generate_dataset(5, 7, &BinaryDist::<f64>::point(0), 1);
        assert!(z.cells().iter().all(|&c| c == 0));
        let o = generate_dataset(5, 7, &BinaryDist::<f64>::point(1), 1);
        assert!(o.cells().iter().all(|&c| c == 1));
    }

    #[test]
    fn uniform_column_mean() {
        let ds = generate_dataset(10_000, 1, &BinaryDist::<f64>::uniform(), 11);
        let mean = ds.cells().iter().map(|&c| c as f64).sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn generation_is_replayable() {
        let px = BinaryDist::new(0.3).unwrap();
        assert_eq!(
            generate_dataset(20, 30, &px, 5),
            generate_dataset(20, 30, &px, 5)
        );
        assert_ne!(
            generate_dataset(20, 30, &px, 5),
            generate_dataset(20, 30, &px, 6)
        );
    }

    #[test]
    fn identity_and_complement_mechanisms() {
        let ds = generate_dataset(30, 20, &BinaryDist::<f64>::uniform(), 3);
        let id = KLetterMechanism::from_channel(&BinaryChannel::<f64>::noiseless());
        assert_eq!(obfuscate(&ds, &id, 9).unwrap(), ds);
        let flip = KLetterMechanism::from_channel(&bsc(1.0));
        let out = obfuscate(&ds, &flip, 9).unwrap();
        assert!(out
            .cells()
            .iter()
            .zip(ds.cells())
            .all(|(a, b)| *a == 1 - *b));
        let id4 = KLetterMechanism::product(&BinaryChannel::<f64>::noiseless(), 4).unwrap();
        assert_eq!(obfuscate(&ds, &id4, 9).unwrap(), ds);
    }

    #[test]
    fn bsc_disagreement_rate() {
        let ds = generate_dataset(1000, 1000, &BinaryDist::<f64>::uniform(), 21);
        let out = obfuscate(&ds, &KLetterMechanism::from_channel(&bsc(0.1)), 22).unwrap();
        let rate = disagreement(&ds, &out);
        assert!((rate - 0.1).abs() < 0.002, "rate {rate}");
    }

    #[test]
    fn block_path_matches_cellwise_path_for_single_letters() {
        let ds = generate_dataset(1000, 1000, &BinaryDist::<f64>::uniform(), 31);
        let mech = KLetterMechanism::from_channel(&bsc(0.1));
        let cell = disagreement(&ds, &obfuscate(&ds, &mech, 32).unwrap());
        let block = disagreement(&ds, &obfuscate_blocks(&ds, &mech, 33).unwrap());
        // two independent binomial proportions, 3 sigma on the difference
        let sigma = (2.0 * 0.1 * 0.9 / 1e6f64).sqrt();
        assert!((cell - block).abs() < 3.0 * sigma, "{cell} vs {block}");
    }

    #[test]
    fn product_tables_behave_like_single_letters() {
        let ds = generate_dataset(500, 1000, &BinaryDist::new(0.3).unwrap(), 41);
        let ch = BinaryChannel::new(0.1, 0.2).unwrap();
        let single = obfuscate(&ds, &KLetterMechanism::from_channel(&ch), 42).unwrap();
        let block = obfuscate(&ds, &KLetterMechanism::product(&ch, 4).unwrap(), 43).unwrap();
        let ones = |d: &Dataset| d.cells().iter().filter(|&&c| c == 1).count() as f64 / 5e5;
        let rate_single = disagreement(&ds, &single);
        let rate_block = disagreement(&ds, &block);
        let p = rate_single;
        let sigma = (2.0 * p * (1.0 - p) / 5e5).sqrt();
        assert!((rate_single - rate_block).abs() < 3.0 * sigma);
        let p = ones(&single);
        let sigma = (2.0 * p * (1.0 - p) / 5e5).sqrt();
        assert!((ones(&single) - ones(&block)).abs() < 3.0 * sigma);
    }

    #[test]
    fn block_mechanism_uses_whole_table() {
        // k = 2 mechanism that always swaps the two letters of a block.
        let mut table = vec![0.0f64; 16];
        for a in 0..4usize {
            let swapped = ((a & 1) << 1) | (a >> 1);
            table[a * 4 + swapped] = 1.0;
        }
        let mech = KLetterMechanism::new(2, table).unwrap();
        let ds = generate_dataset(50, 10, &BinaryDist::new(0.3).unwrap(), 7);
        let out = obfuscate(&ds, &mech, 8).unwrap();
        // swaps inside blocks keep every row's degree
        assert_eq!(degrees(&ds), degrees(&out));
    }

    #[test]
    fn mechanism_validation() {
        assert!(KLetterMechanism::new(1, vec![0.9, 0.1, 0.2, 0.8]).is_ok());
        assert!(KLetterMechanism::new(1, vec![0.9, 0.2, 0.2, 0.8]).is_err());
        assert!(KLetterMechanism::new(2, vec![0.25f64; 8]).is_err());
        assert!(KLetterMechanism::<f64>::new(0, vec![]).is_err());
        let m = KLetterMechanism::from_channel(&BinaryChannel::new(0.1, 0.3).unwrap());
        assert_eq!(m.channel().unwrap(), BinaryChannel::new(0.1, 0.3).unwrap());
        let p = KLetterMechanism::product(&bsc(0.1), 3).unwrap();
        assert!(p.channel().is_none());
        for a in 0..8 {
            let total: f64 = (0..8).map(|b| p.transition(a, b)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_length_must_divide_entry_length() {
        let ds = generate_dataset(3, 10, &BinaryDist::<f64>::uniform(), 1);
        let mech = KLetterMechanism::product(&bsc(0.1), 3).unwrap();
        assert!(matches!(obfuscate(&ds, &mech, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn degree_examples() {
        let ds = Dataset::from_rows(&[vec![1, 0, 1], vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        assert_eq!(degrees(&ds), vec![2, 0, 3]);
        assert_eq!(
            degrees(&Dataset::new(2, 3, vec![0; 6]).unwrap()),
            vec![0, 0]
        );
        assert_eq!(
            degrees(&Dataset::new(2, 3, vec![1; 6]).unwrap()),
            vec![3, 3]
        );
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(2, 2, vec![0, 1, 1]).is_err());
        assert!(Dataset::new(1, 2, vec![0, 2]).is_err());
        assert!(Dataset::from_rows(&[vec![0, 1], vec![1]]).is_err());
    }

    #[test]
    fn krcc_examples() {
        let dx = [5, 1, 4, 2, 3];
        assert_eq!(empirical_krcc(&dx, &dx).unwrap(), 0.0);
        let reversed: Vec<u32> = dx.iter().map(|d| 10 - d).collect();
        assert_eq!(empirical_krcc(&dx, &reversed).unwrap(), 0.5);
        assert_eq!(
            empirical_krcc_with(&dx, &reversed, TieRule::Strict).unwrap(),
            0.5
        );
        assert_abs_diff_eq!(
            empirical_krcc(&[3, 1, 2], &[1, 2, 2]).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            empirical_krcc_with(&[3, 1, 2], &[1, 2, 2], TieRule::Strict).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn krcc_tie_rules_differ_only_on_ties() {
        // both rows tied in x, reversed in y: strict ignores the pair, index
        // order ranks row 0 first in x and counts the inversion once.
        assert_eq!(
            empirical_krcc_with(&[2, 2], &[3, 1], TieRule::Strict).unwrap(),
            0.0
        );
        assert_eq!(
            empirical_krcc_with(&[2, 2], &[3, 1], TieRule::IndexOrder).unwrap(),
            0.5
        );
    }

    #[test]
    fn krcc_shape_errors() {
        assert!(matches!(
            empirical_krcc(&[1, 2], &[1]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(empirical_krcc(&[1], &[1]), Err(Error::Shape(_))));
    }

    #[test]
    fn ranks_break_ties_by_index() {
        assert_eq!(ranks(&[3, 1, 3, 0]), vec![2, 1, 3, 0]);
    }

    #[test]
    fn identity_trials_are_exactly_zero() {
        let plan = TrialPlan::new(50, 20, 5, 3);
        let id = KLetterMechanism::from_channel(&BinaryChannel::<f64>::noiseless());
        let s = krcc_trials(&plan, &BinaryDist::uniform(), &id).unwrap();
        assert_eq!((s.mean, s.stderr), (0.0, 0.0));
        let s = krcc_trials(
            &plan.with_ties(TieRule::Strict),
            &BinaryDist::uniform(),
            &id,
        )
        .unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn trials_reject_bad_plans() {
        let mech = KLetterMechanism::from_channel(&bsc(0.1));
        let u = BinaryDist::uniform();
        assert!(krcc_trials(&TrialPlan::new(50, 20, 0, 3), &u, &mech).is_err());
        assert!(krcc_trials(&TrialPlan::new(1, 20, 2, 3), &u, &mech).is_err());
        let mech3 = KLetterMechanism::product(&bsc(0.1), 3).unwrap();
        assert!(krcc_trials(&TrialPlan::new(5, 20, 2, 3), &u, &mech3).is_err());
    }

    #[test]
    fn parallel_trials_are_bit_identical() {
        let mech = KLetterMechanism::from_channel(&bsc(0.2));
        let u = BinaryDist::uniform();
        let plan = TrialPlan::new(60, 40, 16, 99);
        let a = krcc_trials(&plan, &u, &mech).unwrap();
        let b = krcc_trials(&plan.parallel(), &u, &mech).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn fingerprint_draw_invariants() {
        let ds = generate_dataset(10, 30, &BinaryDist::<f64>::uniform(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let t = draw_fingerprint(&ds, &bsc(0.1), 12, &mut rng);
            assert_eq!(t.fingerprint.len(), 12);
            let mut cols = t.query_columns.clone();
            cols.sort_unstable();
            cols.dedup();
            assert_eq!(cols.len(), 12);
            assert!(cols.iter().all(|&j| j < 30));
            assert!(t.victim < 10);
        }
    }

    #[test]
    fn exact_match_identifies_every_victim() {
        let ds = generate_dataset(50, 64, &BinaryDist::<f64>::uniform(), 12);
        let plan = AttackPlan {
            q: 64,
            trials: 200,
            seed: 1,
            execution: Execution::Serial,
        };
        let id = BinaryChannel::<f64>::noiseless();
        let out = fingerprint_attack(&ds, &ds, &id, &id, &plan).unwrap();
        assert_eq!(out.accuracy, 1.0);
    }

    #[test]
    fn attack_shape_errors() {
        let ds = generate_dataset(5, 8, &BinaryDist::<f64>::uniform(), 12);
        let other = generate_dataset(5, 9, &BinaryDist::<f64>::uniform(), 12);
        let plan = AttackPlan {
            q: 9,
            trials: 10,
            seed: 1,
            execution: Execution::Serial,
        };
        let id = BinaryChannel::<f64>::noiseless();
        assert!(matches!(
            fingerprint_attack(&ds, &ds, &id, &id, &plan),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            fingerprint_attack(&ds, &other, &id, &id, &AttackPlan { q: 3, ..plan }),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn attack_weakens_with_obfuscation() {
        let u = BinaryDist::uniform();
        let query = bsc(0.1);
        let x = generate_dataset(200, 100, &u, 77);
        let plan = AttackPlan {
            q: 20,
            trials: 1000,
            seed: 78,
            execution: Execution::Parallel,
        };
        let accuracy: Vec<f64> = [0.0, 0.1, 0.25, 0.5]
            .iter()
            .map(|&p| {
                let y = obfuscate(&x, &KLetterMechanism::from_channel(&bsc(p)), 79).unwrap();
                let (_, fy) = compose_f_given_y(&u, &bsc(p), &query).unwrap();
                fingerprint_attack(&y, &x, &query, &fy, &plan)
                    .unwrap()
                    .accuracy
            })
            .collect();
        assert!(accuracy.windows(2).all(|w| w[1] < w[0]), "{accuracy:?}");
    }

    proptest! {
        #[test]
        fn krcc_stays_in_unit_interval(dx in proptest::collection::vec(0u32..6, 2..30), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dy: Vec<u32> = dx.iter().map(|_| rng.random_range(0..6)).collect();
            for rule in [TieRule::IndexOrder, TieRule::Strict] {
                let k = empirical_krcc_with(&dx, &dy, rule).unwrap();
                prop_assert!((0.0..=1.0).contains(&k));
                // each unordered pair inverts in at most one direction
                prop_assert!(k <= 0.5);
            }
            let reversed: Vec<u32> = dx.iter().map(|d| 10 - d).collect();
            let strict = empirical_krcc_with(&dx, &reversed, TieRule::Strict).unwrap();
            prop_assert!(strict <= 0.5);
        }

        #[test]
        fn ranks_are_a_permutation(d in proptest::collection::vec(0u32..5, 0..40)) {
            let mut r = ranks(&d);
            r.sort_unstable();
            prop_assert_eq!(r, (0..d.len()).collect::<Vec<_>>());
        }
    }
}
