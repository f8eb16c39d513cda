//! Summary statistics for Monte Carlo checks.

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_draws: u64,
}

impl EstimateWithError {
    /// Distance from `target` in standard errors (∞ when the error is zero
    /// and the value misses).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        self.z_score(target) <= k
    }
}

/// Running mean and centred second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> EstimateWithError {
        EstimateWithError {
            value: self.mean,
            std_error: (self.variance() / self.n.max(1) as f64).sqrt(),
            n_draws: self.n,
        }
    }
}

/// Co-moments of a pair of variables, mergeable like [`Moments`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    pub n: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub m2_x: f64,
    pub m2_y: f64,
    pub c_xy: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, o: &PairMoments) -> PairMoments {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let w = o.n as f64 / n as f64;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        let cross = self.n as f64 * w;
        PairMoments {
            n,
            mean_x: self.mean_x + dx * w,
            mean_y: self.mean_y + dy * w,
            m2_x: self.m2_x + o.m2_x + dx * dx * cross,
            m2_y: self.m2_y + o.m2_y + dy * dy * cross,
            c_xy: self.c_xy + o.c_xy + dx * dy * cross,
        }
    }

    pub fn correlation(&self) -> f64 {
        self.c_xy / (self.m2_x * self.m2_y).sqrt()
    }
}

fn merge_all(parts: &[PairMoments]) -> PairMoments {
    parts.iter().fold(PairMoments::default(), |acc, p| acc.merge(p))
}

/// Pearson correlation from per-block co-moments, with a delete-one-block
/// jackknife standard error. With fewer than two blocks the normal-theory
/// approximation (1 − r²)/√(n − 1) is used instead.
pub fn correlation_estimate(blocks: &[PairMoments]) -> EstimateWithError {
    let total = merge_all(blocks);
    let r = total.correlation();
    let nonempty: Vec<&PairMoments> = blocks.iter().filter(|b| b.n > 0).collect();
    let g = nonempty.len();
    let std_error = if g < 2 {
        (1.0 - r * r) / ((total.n.max(2) - 1) as f64).sqrt()
    } else {
        let mut prefix = vec![PairMoments::default(); g + 1];
        let mut suffix = vec![PairMoments::default(); g + 1];
        for i in 0..g {
            prefix[i + 1] = prefix[i].merge(nonempty[i]);
            suffix[g - 1 - i] = nonempty[g - 1 - i].merge(&suffix[g - i]);
        }
        let loo: Vec<f64> = (0..g).map(|i| prefix[i].merge(&suffix[i + 1]).correlation()).collect();
        let mean = loo.iter().sum::<f64>() / g as f64;
        let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
        ((g - 1) as f64 / g as f64 * ss).sqrt()
    };
    EstimateWithError { value: r, std_error, n_draws: total.n }
}

/// Binomial proportion estimate from `hits` out of `n`.
pub fn proportion(hits: u64, n: u64) -> EstimateWithError {
    let p = hits as f64 / n.max(1) as f64;
    EstimateWithError { value: p, std_error: (p * (1.0 - p) / n.max(1) as f64).sqrt(), n_draws: n }
}

/// One-sample Kolmogorov–Smirnov statistic sup |F_n − F|. Sorts `sample`.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic. Sorts both inputs.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    1.63 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
