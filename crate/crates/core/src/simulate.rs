//! Monte Carlo simulator of the symmetric random flight in R^m, m ≥ 1.
//!
//! Switching instants are a Poisson process of rate λ on (0, t), generated
//! from exponential inter-arrival times. In R^m, m ≥ 2, every instant picks a
//! new direction uniformly on the unit sphere (normalized Gaussian vector);
//! in R^1 the particle starts in a random direction and reverses at every
//! instant.
//!
//! # Reproducibility
//!
//! Path `i` draws from its own ChaCha8 stream: the key is the 256-bit
//! expansion of the 64-bit seed by `SeedableRng::seed_from_u64` and the
//! 64-bit stream id is `i`. Results therefore depend only on
//! `(seed, params, n_paths)`, never on the batch size or the thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FlightParams, FlightSample};

/// Direction rule for the one-dimensional flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneDimMode {
    /// Reverse at every switching instant (the telegraph process).
    #[default]
    Alternating,
    /// Draw ±1 afresh at every instant; equivalent to halving the switching
    /// rate, so no analytic density in this crate applies to it.
    Resample,
}

/// Paths above this count never retain full position vectors.
pub const MAX_STORED_POSITIONS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub fp: FlightParams,
    pub n_paths: u64,
    pub seed: u64,
    pub batch_size: usize,
    pub one_dim: OneDimMode,
}

impl SimConfig {
    pub fn new(fp: FlightParams, n_paths: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            fp,
            n_paths,
            seed,
            batch_size: 65_536,
            one_dim: OneDimMode::Alternating,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_one_dim(mut self, mode: OneDimMode) -> Self {
        self.one_dim = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.fp.validate()?;
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Aggregate of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub fp: FlightParams,
    pub seed: u64,
    pub n_paths: u64,
    /// Paths without any switching instant (they sit on the sphere of radius ct).
    pub n_zero_switch: u64,
    /// Sorted radii of the paths with at least one switch.
    pub radii_sorted: Vec<f64>,
    /// Mean radius over all paths.
    pub mean_radius: f64,
    pub mean_switches: f64,
}

impl SampleSummary {
    pub fn zero_switch_fraction(&self) -> f64 {
        self.n_zero_switch as f64 / self.n_paths as f64
    }

    pub fn n_nonsingular(&self) -> usize {
        self.radii_sorted.len()
    }
}

/// Source of per-path random streams.
#[derive(Debug, Clone)]
pub struct PathStreams {
    base: ChaCha8Rng,
}

impl PathStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, path_index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(path_index);
        rng
    }
}

/// Fill `out` with a uniformly distributed unit vector.
fn fill_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm2 += *v * *v;
        }
        if norm2 > 0.0 {
            let inv = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Uniform random direction on the unit sphere of R^m, m ≥ 2.
pub fn sample_direction<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "sphere sampling needs m >= 2, got {m} (R^1 uses direction reversal)"
        )));
    }
    let mut v = vec![0.0; m];
    fill_direction(rng, &mut v);
    Ok(v)
}

/// Telegraph position at time t for the given switching instants.
pub fn telegraph_position(c: f64, t: f64, initial_sign: f64, event_times: &[f64]) -> f64 {
    let mut sign = initial_sign;
    let mut last = 0.0;
    let mut x = 0.0;
    for &s in event_times {
        x += sign * (s - last);
        last = s;
        sign = -sign;
    }
    c * (x + sign * (t - last))
}

/// Largest radius strictly below `ct`.
fn below(ct: f64) -> f64 {
    f64::from_bits(ct.to_bits() - 1)
}

/// Simulates one path, writing the terminal position into `pos`.
/// Returns the switch count and the terminal radius.
fn simulate_into<R: Rng + ?Sized>(
    fp: &FlightParams,
    mode: OneDimMode,
    rng: &mut R,
    pos: &mut [f64],
    dir: &mut [f64],
) -> (u64, f64) {
    let FlightParams { m, c, lambda, t } = *fp;
    let ct = c * t;
    let mut elapsed = 0.0;
    let mut switches = 0u64;
    pos.iter_mut().for_each(|p| *p = 0.0);

    if m == 1 {
        let mut sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mut x = 0.0;
        loop {
            let tau: f64 = rng.sample::<f64, _>(Exp1) / lambda;
            if elapsed + tau >= t {
                x += sign * (t - elapsed);
                break;
            }
            x += sign * tau;
            elapsed += tau;
            switches += 1;
            sign = match mode {
                OneDimMode::Alternating => -sign,
                OneDimMode::Resample => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
        pos[0] = c * x;
        if switches == 0 {
            return (0, ct);
        }
        let r = pos[0].abs();
        return (switches, if r >= ct { below(ct) } else { r });
    }

    fill_direction(rng, dir);
    loop {
        let tau: f64 = rng.sample::<f64, _>(Exp1) / lambda;
        let leg = if elapsed + tau >= t { t - elapsed } else { tau };
        for (p, d) in pos.iter_mut().zip(dir.iter()) {
            *p += c * leg * d;
        }
        if elapsed + tau >= t {
            break;
        }
        elapsed += tau;
        switches += 1;
        fill_direction(rng, dir);
    }
    if switches == 0 {
        return (0, ct);
    }
    let r = pos.iter().map(|p| p * p).sum::<f64>().sqrt();
    (switches, if r >= ct { below(ct) } else { r })
}

/// Simulates a single flight (reversal rule in R^1).
pub fn simulate_path<R: Rng + ?Sized>(fp: &FlightParams, rng: &mut R) -> FlightSample {
    simulate_path_with(fp, OneDimMode::Alternating, rng)
}

pub fn simulate_path_with<R: Rng + ?Sized>(
    fp: &FlightParams,
    mode: OneDimMode,
    rng: &mut R,
) -> FlightSample {
    let mut position = vec![0.0; fp.m];
    let mut dir = vec![0.0; fp.m];
    let (switch_count, radius) = simulate_into(fp, mode, rng, &mut position, &mut dir);
    FlightSample {
        position,
        switch_count,
        radius,
    }
}

fn batch_ranges(n: u64, batch: usize) -> impl Iterator<Item = std::ops::Range<u64>> {
    let batch = batch as u64;
    (0..n.div_ceil(batch)).map(move |b| b * batch..((b + 1) * batch).min(n))
}

/// Runs `n_paths` independent flights and summarizes them.
pub fn run(cfg: &SimConfig) -> Result<SampleSummary> {
    cfg.validate()?;
    let streams = PathStreams::new(cfg.seed);
    let fp = cfg.fp;
    let mut n_zero = 0u64;
    let mut switch_total = 0u64;
    let mut radii = Vec::new();
    for range in batch_ranges(cfg.n_paths, cfg.batch_size) {
        let batch: Vec<(u64, f64)> = range
            .into_par_iter()
            .map_init(
                || (vec![0.0; fp.m], vec![0.0; fp.m]),
                |(pos, dir), i| {
                    let mut rng = streams.stream(i);
                    simulate_into(&fp, cfg.one_dim, &mut rng, pos, dir)
                },
            )
            .collect();
        for (s, r) in batch {
            switch_total += s;
            if s == 0 {
                n_zero += 1;
            } else {
                radii.push(r);
            }
        }
    }
    Ok(summarize(cfg, n_zero, switch_total, radii))
}

fn summarize(cfg: &SimConfig, n_zero: u64, switch_total: u64, mut radii: Vec<f64>) -> SampleSummary {
    radii.par_sort_unstable_by(f64::total_cmp);
    // sorted order makes the sum independent of the schedule
    let radius_sum: f64 = radii.iter().sum::<f64>() + n_zero as f64 * cfg.fp.support_radius();
    SampleSummary {
        fp: cfg.fp,
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        n_zero_switch: n_zero,
        radii_sorted: radii,
        mean_radius: radius_sum / cfg.n_paths as f64,
        mean_switches: switch_total as f64 / cfg.n_paths as f64,
    }
}

/// Like [`run`] but also returns every path in index order. Position vectors
/// are dropped (left empty) when `n_paths` exceeds [`MAX_STORED_POSITIONS`].
pub fn run_with_samples(cfg: &SimConfig) -> Result<(SampleSummary, Vec<FlightSample>)> {
    cfg.validate()?;
    let streams = PathStreams::new(cfg.seed);
    let fp = cfg.fp;
    let keep = cfg.n_paths <= MAX_STORED_POSITIONS;
    let mut samples = Vec::with_capacity(cfg.n_paths.min(MAX_STORED_POSITIONS) as usize);
    for range in batch_ranges(cfg.n_paths, cfg.batch_size) {
        let batch: Vec<FlightSample> = range
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.stream(i);
                let mut s = simulate_path_with(&fp, cfg.one_dim, &mut rng);
                if !keep {
                    s.position = Vec::new();
                }
                s
            })
            .collect();
        samples.extend(batch);
    }
    let n_zero = samples.iter().filter(|s| s.switch_count == 0).count() as u64;
    let switch_total = samples.iter().map(|s| s.switch_count).sum();
    let radii = samples
        .iter()
        .filter(|s| s.switch_count > 0)
        .map(|s| s.radius)
        .collect();
    Ok((summarize(cfg, n_zero, switch_total, radii), samples))
}

/// Raw sample dump: `path_index,switches,radius[,x1..xm]`.
pub fn write_samples_csv<W: Write>(
    mut w: W,
    samples: &[FlightSample],
    m: usize,
    with_positions: bool,
) -> std::io::Result<()> {
    write!(w, "path_index,switches,radius")?;
    if with_positions {
        for j in 1..=m {
            write!(w, ",x{j}")?;
        }
    }
    writeln!(w)?;
    for (i, s) in samples.iter().enumerate() {
        write!(w, "{i},{},{}", s.switch_count, s.radius)?;
        if with_positions {
            for x in &s.position {
                write!(w, ",{x}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(m: usize, c: f64, lambda: f64, t: f64) -> FlightParams {
        FlightParams::new(m, c, lambda, t).unwrap()
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = PathStreams::new(7).stream(0);
        for m in 2..12 {
            for _ in 0..200 {
                let v = sample_direction(m, &mut rng).unwrap();
                let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
        assert!(sample_direction(1, &mut rng).is_err());
    }

    #[test]
    fn planar_angle_uniform() {
        // χ² over 36 bins; 0.999 quantile of χ²(35) is 66.6188
        let mut rng = PathStreams::new(11).stream(3);
        let mut counts = [0u32; 36];
        let n = 100_000;
        for _ in 0..n {
            let v = sample_direction(2, &mut rng).unwrap();
            let angle = v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU);
            let bin = ((angle / std::f64::consts::TAU * 36.0) as usize).min(35);
            counts[bin] += 1;
        }
        let expected = n as f64 / 36.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 66.6188, "chi2 = {chi2}");
    }

    #[test]
    fn spatial_coordinates_centered() {
        let mut rng = PathStreams::new(5).stream(9);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let v = sample_direction(3, &mut rng).unwrap();
            for j in 0..3 {
                sums[j] += v[j];
            }
        }
        let sigma = (1.0f64 / 3.0).sqrt() / (n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn no_switch_lands_on_sphere() {
        let f = fp(3, 2.0, 1e-9, 1.5);
        let mut rng = PathStreams::new(1).stream(0);
        let s = simulate_path(&f, &mut rng);
        assert_eq!(s.switch_count, 0);
        assert_eq!(s.radius, 3.0);
        let n: f64 = s.position.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 3.0).abs() < 1e-12);
    }

    #[test]
    fn telegraph_symmetric_legs_cancel() {
        assert_eq!(telegraph_position(1.7, 2.0, 1.0, &[1.0]), 0.0);
        assert_eq!(telegraph_position(1.7, 2.0, -1.0, &[1.0]), 0.0);
        assert_eq!(telegraph_position(2.0, 3.0, 1.0, &[]), 6.0);
        assert_eq!(telegraph_position(1.0, 3.0, 1.0, &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn support_holds() {
        for m in [1, 2, 3, 5] {
            let f = fp(m, 1.3, 2.0, 1.1);
            let streams = PathStreams::new(99);
            for i in 0..2000 {
                let s = simulate_path(&f, &mut streams.stream(i));
                let ct = f.support_radius();
                if s.switch_count == 0 {
                    assert_eq!(s.radius, ct);
                } else {
                    assert!(s.radius < ct);
                }
                let n: f64 = s.position.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - s.radius).abs() <= 1e-12 * ct);
            }
        }
    }

    #[test]
    fn single_path_repeatable() {
        let cfg = SimConfig::new(fp(2, 1.0, 1.0, 3.0), 1, 42).unwrap();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_size_does_not_matter() {
        let base = SimConfig::new(fp(4, 1.0, 1.0, 3.0), 5000, 42).unwrap();
        let a = run(&base.with_batch_size(1)).unwrap();
        let b = run(&base.with_batch_size(65_536)).unwrap();
        let c = run(&base.with_batch_size(777)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let (d, samples) = run_with_samples(&base.with_batch_size(13)).unwrap();
        assert_eq!(a, d);
        assert_eq!(samples.len(), 5000);
    }

    #[test]
    fn rejects_empty_runs() {
        assert!(SimConfig::new(fp(2, 1.0, 1.0, 3.0), 0, 1).is_err());
        let cfg = SimConfig::new(fp(2, 1.0, 1.0, 3.0), 10, 1).unwrap();
        assert!(run(&cfg.with_batch_size(0)).is_err());
    }

    #[test]
    fn resample_mode_halves_reversals() {
        // with resampling, the sign process switches at rate λ/2, so E[X²] ≈ c²t/(λ/2) for λt ≫ 1
        let f = fp(1, 1.0, 20.0, 10.0);
        let streams = PathStreams::new(8);
        let n = 20_000;
        let (mut alt, mut res) = (0.0, 0.0);
        for i in 0..n {
            let a = simulate_path_with(&f, OneDimMode::Alternating, &mut streams.stream(i));
            let r = simulate_path_with(&f, OneDimMode::Resample, &mut streams.stream(i));
            alt += a.position[0].powi(2);
            res += r.position[0].powi(2);
        }
        let ratio = res / alt;
        assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn csv_dump_layout() {
        let cfg = SimConfig::new(fp(2, 1.0, 1.0, 1.0), 3, 5).unwrap();
        let (_, samples) = run_with_samples(&cfg).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples, 2, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "path_index,switches,radius,x1,x2");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,"));
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
