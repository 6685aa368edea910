//! Modified Bessel function of the second kind, `K_ν(x)`, for real `ν ≥ 0`
//! and `x > 0`.
//!
//! Temme's series handles `x < 2` and Steed's continued fraction handles
//! `x ≥ 2`; both produce `K_μ` and `K_{μ+1}` for `|μ| ≤ 1/2`, and forward
//! recurrence lifts the order to `ν`. [`BesselK`] caches everything that
//! depends on the order alone, which is what the covariance code uses.

use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Taylor coefficients of `1/Γ(1+x)` around zero.
const RGAMMA1P: [f64; 30] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
    1.412_380_655_318_031_781_6e-18,
    -2.298_745_684_435_370_206_6e-19,
    1.714_406_321_927_337_433_4e-20,
];

/// Order-dependent constants for evaluating `K_ν`.
#[derive(Debug, Clone, Copy)]
pub struct BesselK {
    nu: f64,
    /// Fractional order in `[-1/2, 1/2)`.
    mu: f64,
    /// Number of upward recurrence steps from `mu` to `nu`.
    steps: usize,
    gam1: f64,
    gam2: f64,
    /// `1/Γ(1+μ)`
    gampl: f64,
    /// `1/Γ(1-μ)`
    gammi: f64,
}

impl BesselK {
    pub fn new(nu: f64) -> Self {
        assert!(nu >= 0.0 && nu.is_finite(), "Bessel order must be finite and nonnegative");
        let steps = (nu + 0.5).floor() as usize;
        let mu = nu - steps as f64;
        // gam1 = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ) is the negated odd part of the
        // series divided by μ; gam2 is the even part.
        let mut even = 0.0;
        let mut odd_over_mu = 0.0;
        let mut pow = 1.0;
        for pair in RGAMMA1P.chunks(2) {
            even += pair[0] * pow;
            if let Some(c) = pair.get(1) {
                odd_over_mu += c * pow;
            }
            pow *= mu * mu;
        }
        let gam1 = -odd_over_mu;
        let gam2 = even;
        BesselK {
            nu,
            mu,
            steps,
            gam1,
            gam2,
            gampl: gam2 - mu * gam1,
            gammi: gam2 + mu * gam1,
        }
    }

    pub fn order(&self) -> f64 {
        self.nu
    }

    /// `K_ν(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 2.0 {
            self.temme_value(x)
        } else {
            (self.ln_scaled(x) - x).exp()
        }
    }

    /// `e^x K_ν(x)`.
    pub fn eval_scaled(&self, x: f64) -> f64 {
        if x < 2.0 {
            self.temme_value(x) * x.exp()
        } else {
            self.ln_scaled(x).exp()
        }
    }

    /// `ln(e^x K_ν(x))` for `x > 0`. Stays finite far past the underflow of `K_ν`.
    pub fn ln_scaled(&self, x: f64) -> f64 {
        if x < 2.0 {
            self.temme_value(x).ln() + x
        } else {
            let (k_mu, k_mu1) = self.steed_scaled(x);
            self.recur(x, k_mu, k_mu1).ln()
        }
    }

    fn temme_value(&self, x: f64) -> f64 {
        let (k_mu, k_mu1) = self.temme(x);
        self.recur(x, k_mu, k_mu1)
    }

    fn recur(&self, x: f64, mut k_mu: f64, mut k_mu1: f64) -> f64 {
        let xi2 = 2.0 / x;
        for i in 1..=self.steps {
            let next = (self.mu + i as f64) * xi2 * k_mu1 + k_mu;
            k_mu = k_mu1;
            k_mu1 = next;
        }
        k_mu
    }

    /// Temme's series for `K_μ(x)`, `K_{μ+1}(x)` with `x < 2`.
    fn temme(&self, x: f64) -> (f64, f64) {
        let mu = self.mu;
        let mu2 = mu * mu;
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let mut ff = fact * (self.gam1 * e.cosh() + self.gam2 * fact2 * d);
        let mut sum = ff;
        let e = e.exp();
        let mut p = 0.5 * e / self.gampl;
        let mut q = 0.5 / (e * self.gammi);
        let mut c = 1.0;
        let d = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= d / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum, sum1 * 2.0 / x)
    }

    /// Steed's continued fraction for `e^x K_μ(x)`, `e^x K_{μ+1}(x)` with `x ≥ 2`.
    fn steed_scaled(&self, x: f64) -> (f64, f64) {
        let mu = self.mu;
        let mu2 = mu * mu;
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let k_mu = (PI / (2.0 * x)).sqrt() / s;
        let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
        (k_mu, k_mu1)
    }
}

/// Convenience wrapper for a one-off evaluation of `K_ν(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    BesselK::new(nu).eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[0.01, 0.5, 1.0, 1.99, 2.0, 3.3, 10.0, 40.0] {
            let k05 = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let k15 = k05 * (1.0 + 1.0 / x);
            assert!(rel(bessel_k(0.5, x), k05) < 1e-14, "x={x}");
            assert!(rel(bessel_k(1.5, x), k15) < 1e-14, "x={x}");
        }
    }

    #[test]
    fn known_values_order_zero_and_one() {
        // Abramowitz & Stegun table 9.8
        assert!(rel(bessel_k(0.0, 1.0), 0.421_024_438_240_708_3) < 1e-14);
        assert!(rel(bessel_k(1.0, 1.0), 0.601_907_230_197_234_6) < 1e-14);
        assert!(rel(bessel_k(1.0, 2.0), 0.139_865_881_816_522_4) < 1e-14);
    }

    #[test]
    fn scaled_log_survives_underflow() {
        let b = BesselK::new(1.0);
        assert_eq!(b.eval(800.0), 0.0);
        let ln = b.ln_scaled(800.0);
        let expected = 0.5 * (PI / 1600.0).ln();
        assert!((ln - expected).abs() < 1e-3);
    }

    #[test]
    fn continuity_across_method_switch() {
        for nu in [0.3, 1.0, 2.7] {
            let b = BesselK::new(nu);
            let lo = b.eval(2.0 - 1e-12);
            let hi = b.eval(2.0);
            assert!(rel(lo, hi) < 1e-10, "nu={nu}");
        }
    }
}
