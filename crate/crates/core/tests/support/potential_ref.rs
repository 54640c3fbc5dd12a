//! Exact-arithmetic reference for the trap potential.
//!
//! Every f64 input becomes an exact rational; cos(Ω t) is a 320-bit
//! fixed-point Taylor series after reduction by a 110-digit π, and the
//! result is rounded once at the end.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::str::FromStr;

use itriage_core::potential::PotentialParams;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const BITS: u32 = 320;
const PI_110: &str = "31415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679821480865";

pub fn one_fixed() -> BigInt {
    BigInt::one() << BITS
}

pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

pub fn to_fixed(r: &BigRational) -> BigInt {
    (r.numer() << BITS).div_floor(r.denom())
}

pub fn pi_fixed() -> BigInt {
    let digits = BigInt::from_str(PI_110).unwrap();
    let scale = BigInt::from(10).pow((PI_110.len() - 1) as u32);
    (digits << BITS) / scale
}

pub fn cos_fixed(theta: &BigRational) -> BigRational {
    let one = one_fixed();
    let two_pi = pi_fixed() * 2;
    let mut x = to_fixed(theta);
    // reduce to [-π, π]
    let shifted: BigInt = &x + &two_pi / 2;
    let k = shifted.div_floor(&two_pi);
    x -= k * &two_pi;
    let x2 = (&x * &x) >> BITS;
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut n = 1u32;
    while !term.is_zero() {
        term = -((term * &x2) >> BITS) / BigInt::from((2 * n - 1) * (2 * n));
        sum += &term;
        n += 1;
    }
    BigRational::new(sum, one)
}

pub fn reference(p: &PotentialParams, x: f64, y: f64, z: f64, t: f64) -> f64 {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let q = |c: &[f64; 3]| {
        exact(c[0]) * exact(x) * exact(x) + exact(c[1]) * exact(y) * exact(y) + exact(c[2]) * exact(z) * exact(z)
    };
    let cos = cos_fixed(&(exact(p.omega_rf) * exact(t)));
    let phi = &half * exact(p.u_dc) * q(&p.dc) + &half * exact(p.u_rf) * cos * q(&p.rf);
    phi.to_f64().unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, zero_sum: bool) -> PotentialParams {
    let coeffs = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(-1e7..1e7);
        let b = rng.gen_range(-1e7..1e7);
        let c = if zero_sum { -(a + b) } else { rng.gen_range(-1e7..1e7) };
        [a, b, c]
    };
    PotentialParams {
        u_dc: rng.gen_range(-50.0..50.0),
        u_rf: rng.gen_range(-500.0..500.0),
        omega_rf: 2.0 * PI * rng.gen_range(1e5..1e8),
        dc: coeffs(rng),
        rf: coeffs(rng),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3)]
}
