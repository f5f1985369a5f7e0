//! Metrics and hypothesis tests over generation logs: convergence and
//! slope summaries, the ON/OFF variance-crossover machinery, permutation
//! and bootstrap variance comparisons, Fisher exact, Welch t, ICC(1),
//! Spearman, Levene, and Cohen's d. Unbiased (n−1) variance throughout.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

/// Fitness-stability tolerance for convergence detection.
pub const CONVERGENCE_TOL: f64 = 0.01;
/// Window length for convergence and late-slope summaries.
pub const SUMMARY_WINDOW: usize = 10;
/// Generations a variance ratio must stay above 1 to count as a crossover.
pub const CROSSOVER_PERSISTENCE: usize = 5;
/// Largest sample size for which Spearman p is computed by full
/// permutation enumeration.
pub const SPEARMAN_EXACT_N: usize = 10;
/// Largest 2×2 row margin handled by exact integer enumeration in
/// fisher_exact; larger tables fall back to log-gamma arithmetic.
pub const FISHER_EXACT_INT_LIMIT: u64 = 64;

/// One seed's per-generation trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSeries {
    pub seed: u64,
    /// Best-genome agreement per generation.
    pub agreement: Vec<f64>,
    /// Best fitness per generation.
    pub fitness: Vec<f64>,
}

/// Outcome of one hypothesis test or interval estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub method: String,
    pub n_a: usize,
    pub n_b: usize,
    pub ci: Option<(f64, f64)>,
}

/// Unbiased sample variance (n−1 denominator); 0 for fewer than 2 values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// First generation from which best fitness stays within ±tol (window max
/// − min ≤ 2·tol) for `window` consecutive generations; `None` if the
/// series never stabilizes.
pub fn convergence_generation(
    fitness: &[f64],
    tol: f64,
    window: usize,
) -> Option<usize> {
    assert!(window >= 1);
    if fitness.len() < window {
        return None;
    }
    (0..=fitness.len() - window).find(|&g| {
        let w = &fitness[g..g + window];
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min <= 2.0 * tol
    })
}

/// Ordinary least-squares slope over the last `window` points.
pub fn late_slope(fitness: &[f64], window: usize) -> f64 {
    assert!(window >= 2 && fitness.len() >= window);
    let tail = &fitness[fitness.len() - window..];
    let n = window as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = mean(tail);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &y) in tail.iter().enumerate() {
        let dx = i as f64 - x_mean;
        num += dx * (y - y_mean);
        den += dx * dx;
    }
    num / den
}

/// The variance-crossover analysis output: per-generation cross-seed
/// variances, their ON/OFF ratio (None where OFF variance is 0), the first
/// sustained crossover generation, and Spearman of ratio vs generation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarianceCrossover {
    pub var_on: Vec<f64>,
    pub var_off: Vec<f64>,
    pub ratio: Vec<Option<f64>>,
    pub crossover: Option<usize>,
    pub spearman: TestReport,
}

/// Cross-seed variance of best-genome agreement per generation for each
/// condition, the ON/OFF ratio series, the first generation where the
/// ratio exceeds 1 and stays above it for `CROSSOVER_PERSISTENCE`
/// generations, and a Spearman trend test of ratio against generation
/// (undefined-ratio generations excluded).
pub fn variance_crossover(on: &[SeedSeries], off: &[SeedSeries]) -> VarianceCrossover {
    assert!(on.len() >= 2 && off.len() >= 2, "need at least 2 seeds per condition");
    let gens = on[0].agreement.len();
    for s in on.iter().chain(off) {
        assert_eq!(s.agreement.len(), gens, "seed series lengths differ");
    }
    let cross_seed_var = |seeds: &[SeedSeries], g: usize| {
        let vals: Vec<f64> = seeds.iter().map(|s| s.agreement[g]).collect();
        variance(&vals)
    };
    let var_on: Vec<f64> = (0..gens).map(|g| cross_seed_var(on, g)).collect();
    let var_off: Vec<f64> = (0..gens).map(|g| cross_seed_var(off, g)).collect();
    let ratio: Vec<Option<f64>> = var_on
        .iter()
        .zip(&var_off)
        .map(|(&a, &b)| if b == 0.0 { None } else { Some(a / b) })
        .collect();

    let crossover = (0..gens).find(|&g| {
        g + CROSSOVER_PERSISTENCE <= gens
            && ratio[g..g + CROSSOVER_PERSISTENCE]
                .iter()
                .all(|r| matches!(r, Some(v) if *v > 1.0))
    });

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (g, r) in ratio.iter().enumerate() {
        if let Some(v) = r {
            xs.push(g as f64);
            ys.push(*v);
        }
    }
    let spearman = spearman(&xs, &ys);
    VarianceCrossover { var_on, var_off, ratio, crossover, spearman }
}

/// One-sided permutation test of var(a)/var(b) > 1: shuffles the pooled
/// labels `iters` times and reports the smoothed exceedance fraction
/// (c+1)/(iters+1), the identity permutation included. A permutation with
/// zero second-group variance counts as exceeding.
pub fn permutation_variance_test(
    a: &[f64],
    b: &[f64],
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> TestReport {
    assert!(a.len() >= 2 && b.len() >= 2);
    let observed = variance(a) / variance(b);
    let mut pool: Vec<f64> = a.iter().chain(b).cloned().collect();
    let mut count = 0usize;
    for _ in 0..iters {
        // Fisher–Yates shuffle, then split at |a|.
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.random_range(0..=i));
        }
        let va = variance(&pool[..a.len()]);
        let vb = variance(&pool[a.len()..]);
        if vb == 0.0 || va / vb >= observed {
            count += 1;
        }
    }
    TestReport {
        statistic: observed,
        p_value: Some((count + 1) as f64 / (iters + 1) as f64),
        method: "one-sided permutation test of variance ratio".into(),
        n_a: a.len(),
        n_b: b.len(),
        ci: None,
    }
}

/// Percentile bootstrap CI for var(a)/var(b) over paired resamples.
/// Degenerate resamples (zero variance on either side) are redrawn, with
/// the total draw count capped at 10·iters.
pub fn bootstrap_ratio_ci(
    a: &[f64],
    b: &[f64],
    iters: usize,
    level: f64,
    rng: &mut ChaCha8Rng,
) -> TestReport {
    assert!(a.len() >= 2 && b.len() >= 2);
    assert!(level > 0.0 && level < 1.0);
    let point = variance(a) / variance(b);
    let mut ratios = Vec::with_capacity(iters);
    let mut draws = 0usize;
    let sample = |xs: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).collect()
    };
    while ratios.len() < iters && draws < 10 * iters {
        draws += 1;
        let va = variance(&sample(a, rng));
        let vb = variance(&sample(b, rng));
        if va > 0.0 && vb > 0.0 {
            ratios.push(va / vb);
        }
    }
    ratios.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| -> f64 {
        // Nearest-rank percentile on the sorted resample ratios.
        let idx = ((ratios.len() as f64 * q).ceil() as usize).clamp(1, ratios.len());
        ratios[idx - 1]
    };
    let (lo, hi) = if ratios.is_empty() { (point, point) } else { (pick(tail), pick(1.0 - tail)) };
    TestReport {
        statistic: point,
        p_value: None,
        method: format!("percentile bootstrap {:.0}% CI of variance ratio", level * 100.0),
        n_a: a.len(),
        n_b: b.len(),
        ci: Some((lo, hi)),
    }
}

/// C(n, k) by the stepwise-exact multiplicative rule.
fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

fn ln_factorial(n: u64) -> f64 {
    // ln Γ(n+1) via the statrs gamma implementation.
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Two-sided Fisher exact test on a 2×2 table [[a, b], [c, d]]: the sum of
/// hypergeometric probabilities of all same-margin tables no more likely
/// than the observed one. Exact integer enumeration while both row margins
/// fit `FISHER_EXACT_INT_LIMIT`; log-gamma arithmetic with a relative
/// slack of 1e-7 on the probability comparison beyond.
pub fn fisher_exact(table: [[u64; 2]; 2]) -> TestReport {
    let [[a, b], [c, d]] = table;
    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let n = r1 + r2;
    let report = |p: f64| TestReport {
        statistic: p,
        p_value: Some(p),
        method: "two-sided Fisher exact test".into(),
        n_a: r1 as usize,
        n_b: r2 as usize,
        ci: None,
    };
    if r1 == 0 || r2 == 0 || c1 == 0 || c1 == n {
        return report(1.0);
    }
    let k_min = c1.saturating_sub(r2);
    let k_max = c1.min(r1);
    if r1 <= FISHER_EXACT_INT_LIMIT && r2 <= FISHER_EXACT_INT_LIMIT {
        // Same-denominator integer weights: w(k) = C(r1,k)·C(r2,c1−k).
        let weight = |k: u64| binomial_u128(r1, k) * binomial_u128(r2, c1 - k);
        let observed = weight(a);
        let mut acc: u128 = 0;
        for k in k_min..=k_max {
            let w = weight(k);
            if w <= observed {
                acc += w;
            }
        }
        return report(acc as f64 / binomial_u128(n, c1) as f64);
    }
    let ln_weight = |k: u64| {
        ln_factorial(r1) - ln_factorial(k) - ln_factorial(r1 - k) + ln_factorial(r2)
            - ln_factorial(c1 - k)
            - ln_factorial(r2 - (c1 - k))
    };
    let ln_total = ln_factorial(n) - ln_factorial(c1) - ln_factorial(n - c1);
    let observed = ln_weight(a);
    let mut p = 0.0;
    for k in k_min..=k_max {
        let lw = ln_weight(k);
        if lw <= observed + 1e-7 {
            p += (lw - ln_total).exp();
        }
    }
    report(p.min(1.0))
}

/// Welch's two-sample t test: unequal-variance statistic, two-sided p via
/// the Welch–Satterthwaite degrees of freedom. Returns (report, df).
pub fn welch_t(a: &[f64], b: &[f64]) -> (TestReport, f64) {
    assert!(a.len() >= 2 && b.len() >= 2);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a), variance(b));
    let make = |t: f64, p: f64, df: f64| {
        (
            TestReport {
                statistic: t,
                p_value: Some(p),
                method: "Welch two-sample t test, two-sided".into(),
                n_a: a.len(),
                n_b: b.len(),
                ci: None,
            },
            df,
        )
    };
    if va == 0.0 && vb == 0.0 {
        // Degenerate: no variability; equal means are indistinguishable.
        return if mean(a) == mean(b) {
            make(0.0, 1.0, na + nb - 2.0)
        } else {
            make(f64::INFINITY * (mean(a) - mean(b)).signum(), 0.0, na + nb - 2.0)
        };
    }
    let se2 = va / na + vb / nb;
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    let p = 2.0 * dist.cdf(-t.abs());
    make(t, p.min(1.0), df)
}

/// One-way random-effects ICC(1) = (MSB − MSW) / (MSB + (k−1)·MSW) over a
/// rows × columns matrix (rows = groups), clamped to [−1, 1]; defined as 0
/// when the matrix has no variance at all.
pub fn icc1(matrix: &[Vec<f64>]) -> f64 {
    let rows = matrix.len();
    assert!(rows >= 2, "need at least 2 rows");
    let k = matrix[0].len();
    assert!(k >= 2, "need at least 2 columns");
    for row in matrix {
        assert_eq!(row.len(), k, "ragged matrix");
    }
    let grand = matrix.iter().flatten().sum::<f64>() / (rows * k) as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for row in matrix {
        let m = mean(row);
        ssb += k as f64 * (m - grand) * (m - grand);
        for &x in row {
            ssw += (x - m) * (x - m);
        }
    }
    if ssb == 0.0 && ssw == 0.0 {
        return 0.0;
    }
    let msb = ssb / (rows - 1) as f64;
    let msw = ssw / (rows * (k - 1)) as f64;
    ((msb - msw) / (msb + (k as f64 - 1.0) * msw)).clamp(-1.0, 1.0)
}

/// Average ranks (1-based), ties sharing the mean of their rank range.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut num = 0.0;
    let mut dx2 = 0.0;
    let mut dy2 = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        dx2 += (a - mx) * (a - mx);
        dy2 += (b - my) * (b - my);
    }
    if dx2 == 0.0 || dy2 == 0.0 {
        return 0.0;
    }
    num / (dx2.sqrt() * dy2.sqrt())
}

fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let tie_free = |r: &[f64]| r.iter().all(|v| v.fract() == 0.0);
    if tie_free(&rx) && tie_free(&ry) {
        // Equivalent to rank Pearson without ties, and exact: integer rank
        // differences keep ρ = ±1 endpoints free of rounding.
        let n = x.len() as f64;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    } else {
        pearson(&rx, &ry)
    }
}

/// Spearman rank correlation with average-rank ties. Two-sided p: full
/// permutation enumeration for n ≤ `SPEARMAN_EXACT_N`, t-approximation
/// beyond.
pub fn spearman(x: &[f64], y: &[f64]) -> TestReport {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 3, "need at least 3 pairs");
    let rho = spearman_rho(x, y);
    let p = if n <= SPEARMAN_EXACT_N {
        // Exhaustive: P(|ρ_perm| ≥ |ρ_obs|) over all n! orderings of y.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut exceed = 0u64;
        let mut total = 0u64;
        let mut buf = vec![0.0; n];
        loop {
            for (slot, &idx) in buf.iter_mut().zip(&perm) {
                *slot = y[idx];
            }
            if spearman_rho(x, &buf).abs() >= rho.abs() - 1e-12 {
                exceed += 1;
            }
            total += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        exceed as f64 / total as f64
    } else if rho.abs() >= 1.0 {
        0.0
    } else {
        let nf = n as f64;
        let t = rho * ((nf - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("positive df");
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    TestReport {
        statistic: rho,
        p_value: Some(p),
        method: if n <= SPEARMAN_EXACT_N {
            "Spearman rank correlation, exact permutation p".into()
        } else {
            "Spearman rank correlation, t-approximation p".into()
        },
        n_a: n,
        n_b: n,
        ci: None,
    }
}

/// Lexicographic next permutation; false once the sequence is descending.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Levene's test for equal variances across two groups, deviations taken
/// from group means, one-way F on the absolute deviations.
pub fn levene(a: &[f64], b: &[f64]) -> TestReport {
    assert!(a.len() >= 2 && b.len() >= 2);
    let za: Vec<f64> = a.iter().map(|x| (x - mean(a)).abs()).collect();
    let zb: Vec<f64> = b.iter().map(|x| (x - mean(b)).abs()).collect();
    let (na, nb) = (za.len() as f64, zb.len() as f64);
    let n = na + nb;
    let grand = (za.iter().sum::<f64>() + zb.iter().sum::<f64>()) / n;
    let ssb = na * (mean(&za) - grand).powi(2) + nb * (mean(&zb) - grand).powi(2);
    let ssw: f64 = za.iter().map(|z| (z - mean(&za)).powi(2)).sum::<f64>()
        + zb.iter().map(|z| (z - mean(&zb)).powi(2)).sum::<f64>();
    let make = |f: f64, p: f64| TestReport {
        statistic: f,
        p_value: Some(p),
        method: "Levene test (mean-centered), two groups".into(),
        n_a: a.len(),
        n_b: b.len(),
        ci: None,
    };
    if ssw == 0.0 {
        return if ssb == 0.0 { make(0.0, 1.0) } else { make(f64::INFINITY, 0.0) };
    }
    let f = (ssb / 1.0) / (ssw / (n - 2.0));
    let dist = FisherSnedecor::new(1.0, n - 2.0).expect("positive dfs");
    make(f, (1.0 - dist.cdf(f)).clamp(0.0, 1.0))
}

/// Cohen's d with pooled standard deviation.
pub fn cohen_d(a: &[f64], b: &[f64]) -> f64 {
    assert!(a.len() >= 2 && b.len() >= 2);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return 0.0;
    }
    (mean(a) - mean(b)) / pooled
}
