// SPDX-License-Identifier: Apache-2.0
//! Null distribution functions used to turn merged statistics back into
//! p-values: the standard normal, the even-df chi-square survival function,
//! integer-shape regularized incomplete beta, Irwin–Hall, and a conservative
//! Monte Carlo CDF for everything else.
#![allow(clippy::excessive_precision)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::OpenClosed01;

use crate::error::{Error, Result};

/// Largest Irwin–Hall order evaluated with the alternating sum.
pub const IRWIN_HALL_MAX_N: usize = 40;

/// Smallest sample count accepted by [`EmpiricalCdf::build`].
pub const MIN_MC_SAMPLES: usize = 10_000;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile. Fails outside the open unit interval.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0, 1), got {p}")));
    }
    Ok(normal_quantile_unchecked(p))
}

/// Quantile for `p` already known to lie strictly inside (0, 1).
///
/// Wichura's AS241 (PPND16) rational approximation followed by one Halley
/// step against [`std_normal_cdf`]. Residuals are computed on the tail that
/// `p` lives in so the step does not lose digits near 1.
pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    let x = ppnd16(p);
    if !x.is_finite() {
        return x;
    }
    let err = if p < 0.5 { std_normal_cdf(x) - p } else { (1.0 - p) - std_normal_cdf(-x) };
    let pdf = std_normal_pdf(x);
    if pdf == 0.0 {
        return x;
    }
    let u = err / pdf;
    x - u / (1.0 + 0.5 * x * u)
}

fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946e4,
        4.592_195_393_154_987e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_854_5e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Survival function `P(X > x)` of a chi-square variable with even `df`.
///
/// With `h = x/2` and `k = df/2` this is `P(Poisson(h) < k)`. The finite sum
/// is used when `h >= k`; otherwise the (small) upper Poisson tail is summed
/// and subtracted from 1. Terms move to log space once `h` exceeds 700.
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 || df % 2 != 0 {
        return Err(Error::Domain(format!("chi-square df must be positive and even, got {df}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    Ok(chi_square_sf_even(x, df / 2))
}

/// `chi_square_sf(x, 2 * half_df)` for validated arguments.
pub(crate) fn chi_square_sf_even(x: f64, half_df: usize) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let h = 0.5 * x;
    if h < half_df as f64 {
        return (1.0 - poisson_upper_tail(h, half_df)).clamp(0.0, 1.0);
    }
    if h <= 700.0 {
        let mut term = (-h).exp();
        let mut sum = term;
        for j in 1..half_df {
            term *= h / j as f64;
            sum += term;
        }
        return sum.min(1.0);
    }
    let ln_h = h.ln();
    let mut ln_fact = 0.0;
    let logs: Vec<f64> = (0..half_df)
        .map(|j| {
            if j > 0 {
                ln_fact += (j as f64).ln();
            }
            -h + j as f64 * ln_h - ln_fact
        })
        .collect();
    log_sum_exp(&logs).exp().min(1.0)
}

/// `P(Poisson(h) >= k)` for `0 < h < k`, where the terms decrease from the
/// first one.
fn poisson_upper_tail(h: f64, k: usize) -> f64 {
    let ln_k_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    let mut term = (-h + k as f64 * h.ln() - ln_k_fact).exp();
    let mut sum = 0.0;
    let mut j = k;
    while term > sum * 1e-17 {
        sum += term;
        j += 1;
        term *= h / j as f64;
    }
    sum
}

/// Regularized incomplete beta `I_x(a, b)` for positive integer shapes,
/// i.e. the CDF of the `a`-th order statistic of `a + b - 1` uniforms.
pub fn beta_cdf(x: f64, a: usize, b: usize) -> Result<f64> {
    if a == 0 || b == 0 {
        return Err(Error::Domain(format!("beta shapes must be positive, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta argument must be in [0, 1], got {x}")));
    }
    Ok(beta_cdf_int(x, a, b))
}

pub(crate) fn beta_cdf_int(x: f64, a: usize, b: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let l1x = (-x).ln_1p();
    if a == 1 {
        return -(b as f64 * l1x).exp_m1();
    }
    // P(Bin(n, x) >= a) with n = a + b - 1; sum whichever tail is smaller.
    let n = a + b - 1;
    let lx = x.ln();
    let ln_term = |j: usize| ln_choose(n, j) + j as f64 * lx + (n - j) as f64 * l1x;
    if (a as f64) > x * (n + 1) as f64 {
        let logs: Vec<f64> = (a..=n).map(ln_term).collect();
        log_sum_exp(&logs).exp().clamp(0.0, 1.0)
    } else {
        let logs: Vec<f64> = (0..a).map(ln_term).collect();
        (1.0 - log_sum_exp(&logs).exp()).clamp(0.0, 1.0)
    }
}

/// `ln C(n, j)`, summing over the shorter side.
fn ln_choose(n: usize, j: usize) -> f64 {
    let j = j.min(n - j);
    (1..=j).map(|i| ((n - j + i) as f64 / i as f64).ln()).sum()
}

/// CDF of the sum of `n` independent uniforms (Irwin–Hall).
///
/// Evaluated with the alternating sum, which cancels badly for large `n`;
/// orders above [`IRWIN_HALL_MAX_N`] return
/// [`Error::NumericalInstability`] so callers fall back to Monte Carlo.
pub fn irwin_hall_cdf(x: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("Irwin-Hall order must be positive".into()));
    }
    if n > IRWIN_HALL_MAX_N {
        return Err(Error::NumericalInstability(format!(
            "Irwin-Hall alternating sum is unreliable for n = {n} > {IRWIN_HALL_MAX_N}"
        )));
    }
    if x.is_nan() {
        return Err(Error::Domain("Irwin-Hall argument is NaN".into()));
    }
    let nf = n as f64;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= nf {
        return Ok(1.0);
    }
    // Reflect into the lower half, where fewer terms enter the sum.
    let (y, flip) = if x > 0.5 * nf { (nf - x, true) } else { (x, false) };
    let ln_n_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    let mut ln_choose = 0.0;
    let mut sum = 0.0;
    let top = y.floor() as usize;
    for k in 0..=top.min(n) {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let base = y - k as f64;
        if base <= 0.0 {
            break;
        }
        let mag = (ln_choose + nf * base.ln() - ln_n_fact).exp();
        if k % 2 == 0 {
            sum += mag;
        } else {
            sum -= mag;
        }
    }
    let cdf = sum.clamp(0.0, 1.0);
    Ok(if flip { 1.0 - cdf } else { cdf })
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|&l| (l - max).exp()).sum::<f64>().ln()
}

/// Monte Carlo null CDF of a statistic of `m` i.i.d. uniforms.
///
/// Evaluation uses the add-one rank `(1 + #{samples <= s}) / (N + 1)`, so the
/// result is never below `1 / (N + 1)` and is exactly super-uniform when the
/// observed statistic is exchangeable with the samples.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    seed: u64,
}

impl EmpiricalCdf {
    pub fn build<F>(statistic: F, m: usize, samples: usize, seed: u64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        if m == 0 {
            return Err(Error::Domain("empirical CDF needs at least one input".into()));
        }
        if samples < MIN_MC_SAMPLES {
            return Err(Error::Domain(format!(
                "empirical CDF needs at least {MIN_MC_SAMPLES} samples, got {samples}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = vec![0.0; m];
        let mut sorted = Vec::with_capacity(samples);
        for _ in 0..samples {
            for u in buf.iter_mut() {
                *u = rng.sample(OpenClosed01);
            }
            sorted.push(statistic(&buf));
        }
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted, seed })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s.is_nan() {
            return 1.0;
        }
        let count = self.sorted.partition_point(|&v| v <= s);
        (1 + count) as f64 / (self.sorted.len() + 1) as f64
    }

    pub fn sample_count(&self) -> usize {
        self.sorted.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

// Floating-point erfc adapted from FreeBSD msun s_erf.c:
//
// ====================================================
// Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//
// Developed at SunPro, a Sun Microsystems, Inc. business.
// Permission to use, copy, modify, and distribute this
// software is freely granted, provided that this notice
// is preserved.
// ====================================================

const ERX: f64 = 8.45062911510467529297e-01;
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// Horner for `c[0] + c[1] z + ...`.
#[inline]
fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * z + k)
}

/// `1 + z * (c[0] + c[1] z + ...)`.
#[inline]
fn horner1(c: &[f64], z: f64) -> f64 {
    1.0 + z * horner(c, z)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let neg = x < 0.0;
    let ax = x.abs();
    if ax < 0.84375 {
        if ax < 1.3877787807814457e-17 {
            return 1.0 - x;
        }
        let z = x * x;
        let y = horner(&PP, z) / horner1(&QQ, z);
        return if x < 0.25 { 1.0 - (x + x * y) } else { 0.5 - (x * y + (x - 0.5)) };
    }
    if ax < 1.25 {
        let s = ax - 1.0;
        let pq = horner(&PA, s) / horner1(&QA, s);
        return if neg { 1.0 + ERX + pq } else { 1.0 - ERX - pq };
    }
    if ax < 28.0 {
        if neg && ax >= 6.0 {
            return 2.0;
        }
        let s = 1.0 / (ax * ax);
        let (r, q) = if ax < 1.0 / 0.35 {
            (horner(&RA, s), horner1(&SA, s))
        } else {
            (horner(&RB, s), horner1(&SB, s))
        };
        let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
        let val = (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / q).exp() / ax;
        return if neg { 2.0 - val } else { val };
    }
    if neg {
        2.0
    } else {
        0.0
    }
}
