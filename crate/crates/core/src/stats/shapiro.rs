//! Shapiro–Wilk normality test, Royston's AS R94 approximation (the same
//! algorithm used by R's `shapiro.test` and SciPy's `shapiro`).

use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroResult {
    pub w: f64,
    pub p: f64,
}

impl ShapiroResult {
    pub fn is_normal(&self, alpha: f64) -> bool {
        self.p >= alpha
    }
}

const SMALL: f64 = 1e-19;
const G: [f64; 2] = [-2.273, 0.459];
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Half of the antisymmetric coefficient vector, `a[0]` pairing the extremes.
fn coefficients(n: usize) -> Vec<f64> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let std_normal = Normal::standard();
    let an25 = n as f64 + 0.25;
    let mut m: Vec<f64> = (1..=nn2).map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25)).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        m[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    m[0] = a1;
    for v in m.iter_mut().skip(first_scaled) {
        *v /= -fac;
    }
    m
}

/// Shapiro–Wilk W and p-value for 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(x: &[f64]) -> Result<ShapiroResult, StatsError> {
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    if n > 5000 {
        return Err(StatsError::TooManySamples { limit: 5000, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut xs = x.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let range = xs[n - 1] - xs[0];
    if range < SMALL {
        return Err(StatsError::ConstantInput);
    }

    let half = coefficients(n);
    // Full antisymmetric coefficient vector over the sorted sample.
    let full: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            if i == j {
                0.0
            } else if i < j {
                -half[i]
            } else {
                half[j]
            }
        })
        .collect();

    let sa = full.iter().sum::<f64>() / n as f64;
    let scaled: Vec<f64> = xs.iter().map(|v| v / range).collect();
    let sx = scaled.iter().sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let asa = full[i] - sa;
        let xsx = scaled[i] - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        let p = (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
        return Ok(ShapiroResult { w, p });
    }

    let an = n as f64;
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return Ok(ShapiroResult { w, p: 1e-99 });
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let lx = an.ln();
        (poly(&C5, lx), poly(&C6, lx).exp())
    };
    let p = Normal::new(m, s).expect("positive scale").sf(y);
    Ok(ShapiroResult { w, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guards() {
        assert_eq!(shapiro_wilk(&[1.0, 2.0]), Err(StatsError::TooFewSamples { needed: 3, got: 2 }));
        assert_eq!(shapiro_wilk(&[4.0; 10]), Err(StatsError::ConstantInput));
    }

    // Reference values from scipy.stats.shapiro.
    #[test]
    fn small_samples_match_reference() {
        let cases: [(&[f64], f64, f64); 3] = [
            (&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
            (&[1.0, 2.0, 4.0, 7.5, 7.7], 0.8799881388173946, 0.3092572495186626),
            (&[2.1, 3.3, 1.2, 5.5, 4.4, 3.9, 2.8, 6.1, 0.7, 3.0, 3.2], 0.9739924568578728, 0.9237414384288072),
        ];
        for (x, w, p) in cases {
            let r = shapiro_wilk(x).unwrap();
            assert!((r.w - w).abs() < 1e-4, "W {} vs {}", r.w, w);
            assert!((r.p - p).abs() < 1e-4, "p {} vs {}", r.p, p);
        }
    }

    // numpy.random.default_rng(20241015).normal(size=50)
    const GAUSSIAN_50: [f64; 50] = [
        0.16065503294370992,
        -0.5666311246091951,
        -0.7289466597827761,
        1.0818195562620367,
        -0.12946678565038947,
        1.3884017079442672,
        0.13925155493178776,
        -0.21378010767322297,
        0.9842702740017589,
        -0.9866893096342814,
        -1.91766735305396,
        -1.151691196926901,
        -1.0024884068540667,
        -1.260099933960573,
        0.26409328222544365,
        0.7317643617368073,
        0.17456340813138344,
        1.2074451948487475,
        -0.04622050251511097,
        0.9566550949890954,
        1.1975333659349312,
        -0.6078054241981181,
        0.13039692229287667,
        0.969197094061858,
        -0.5877035437343455,
        1.6531720436150403,
        0.6027779980239353,
        0.6669008067471216,
        0.4410099181506566,
        0.6550247982979891,
        -0.998707098827604,
        1.886355303202893,
        -1.512488636092136,
        -0.26146357107374146,
        -0.6612792378312284,
        -0.6164859111132103,
        0.6467273113032272,
        0.1062387806797575,
        0.6499651240433815,
        -1.4296780557081832,
        0.10378713211415394,
        0.9898181825428145,
        1.9160328157633373,
        -0.0040758748455151,
        -1.6926241838137752,
        1.8519122384676525,
        -0.646654349982118,
        -0.2525504970905532,
        -1.2805692334813688,
        0.8439105270733648,
    ];

    // the next 30 draws of the same generator, .exponential(size=30)
    const EXPONENTIAL_30: [f64; 30] = [
        1.8492963963695899,
        0.23021435827370862,
        1.4983127734898412,
        0.17127665782391177,
        1.6627099988693008,
        0.59101201453149,
        0.0447733818277305,
        1.389586381830961,
        0.48980867260531114,
        0.00492341337677116,
        0.43492700864748446,
        0.4243366699488198,
        1.7097019749501656,
        0.19153010726149952,
        1.5462825084017484,
        1.0381361539458398,
        0.06044778005286823,
        0.8685303731406007,
        5.780408820656076,
        0.8470798337943296,
        0.5069851392841445,
        0.8205401335850924,
        0.9955919740955996,
        1.081614250729108,
        0.05580890079289493,
        0.45166902945453974,
        1.1940913362413177,
        1.4859476344771425,
        0.24478803638442953,
        3.738275611909171,
    ];

    #[test]
    fn seeded_draws_match_reference() {
        let r = shapiro_wilk(&GAUSSIAN_50).unwrap();
        assert!((r.w - 0.978931013526458).abs() < 1e-4, "W {}", r.w);
        assert!((r.p - 0.5078103402951155).abs() < 1e-4, "p {}", r.p);
        assert!(r.is_normal(0.05));
        let r = shapiro_wilk(&EXPONENTIAL_30).unwrap();
        assert!((r.w - 0.7215651570599297).abs() < 1e-4, "W {}", r.w);
        assert!((r.p - 3.2646320846639976e-06).abs() < 1e-4, "p {}", r.p);
        assert!(!r.is_normal(0.05));
    }
}
