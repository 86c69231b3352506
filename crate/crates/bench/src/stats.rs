//! Repeated runs and their summary statistics.

use std::fmt;

/// Mean and sample standard deviation over the runs that finished.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 for a single run.
    pub std: f64,
    /// Seeds whose run failed, with the reason. These are excluded from the statistics.
    pub failures: Vec<(u64, String)>,
}

impl Summary {
    pub fn from_values(values: Vec<f64>) -> Summary {
        let (mean, std) = mean_std(&values);
        Summary {
            values,
            mean,
            std,
            failures: Vec::new(),
        }
    }

    pub fn n_ok(&self) -> usize {
        self.values.len()
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "final: {:.2} +/- {:.2}", self.mean, self.std)
    }
}

/// Two-pass mean and sample standard deviation. Empty input gives NaN mean.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Runs `run` once per seed and summarises the final metric. Failed runs are
/// logged to stderr and listed in [`Summary::failures`].
pub fn repeat_experiment<F, E>(seeds: &[u64], mut run: F) -> Summary
where
    F: FnMut(u64) -> Result<f64, E>,
    E: fmt::Display,
{
    let mut values = Vec::with_capacity(seeds.len());
    let mut failures = Vec::new();
    for &seed in seeds {
        match run(seed) {
            Ok(v) => values.push(v),
            Err(e) => {
                eprintln!("warning: run with seed {seed} aborted and is excluded: {e}");
                failures.push((seed, e.to_string()));
            }
        }
    }
    let mut summary = Summary::from_values(values);
    summary.failures = failures;
    summary
}
