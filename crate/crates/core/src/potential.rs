//! Quadrupole trap potential
//!
//! Φ(x,y,z,t) = (U/2)(a x² + b y² + c z²) + (Ũ/2) cos(Ω t) (a' x² + b' y² + c' z²)
//!
//! with coefficients in 1/m², so Φ is in volts. Evaluation runs in
//! double-double arithmetic, including the cosine, so the result stays
//! accurate to a few ulps even when the DC and RF parts partially cancel.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// DC voltage U (V).
    pub u_dc: f64,
    /// RF amplitude Ũ (V).
    pub u_rf: f64,
    /// RF angular frequency Ω (rad/s).
    pub omega_rf: f64,
    /// (a, b, c)
    pub dc: [f64; 3],
    /// (a', b', c')
    pub rf: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("omega_rf must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("range for {axis} is empty ({lo} .. {hi})")]
    EmptyRange { axis: char, lo: f64, hi: f64 },
    #[error("resolution must be at least 2 per axis, got {0}")]
    Resolution(usize),
    #[error("unknown axis pair `{0}` (expected xy, xz or yz)")]
    AxisPair(String),
}

impl PotentialParams {
    pub fn validate(&self) -> Result<(), PotentialError> {
        let scalars = [("u_dc", self.u_dc), ("u_rf", self.u_rf), ("omega_rf", self.omega_rf)];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(PotentialError::NonFinite(name));
            }
        }
        if self.dc.iter().any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite("dc coefficients"));
        }
        if self.rf.iter().any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite("rf coefficients"));
        }
        if self.omega_rf <= 0.0 {
            return Err(PotentialError::NonPositiveOmega(self.omega_rf));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_rf
    }
}

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let v = two_sum(s.hi, s.lo + t.hi);
        two_sum(v.hi, v.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        let cross = self.hi * o.lo + self.lo * o.hi;
        two_sum(p.hi, p.lo + cross)
    }

    fn scale(self, k: f64) -> Dd {
        self.mul(Dd { hi: k, lo: 0.0 })
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn div_f(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let p = two_prod(q1, b);
        let r = (self.hi - p.hi - p.lo + self.lo) / b;
        two_sum(q1, r)
    }
}

fn quadratic_form(coeffs: &[f64; 3], point: [f64; 3]) -> Dd {
    coeffs
        .iter()
        .zip(point)
        .map(|(c, v)| two_prod(v, v).scale(*c))
        .fold(Dd { hi: 0.0, lo: 0.0 }, Dd::add)
}

const PIO2: [f64; 3] = [1.5707963267948966, 6.123233995736766e-17, -1.4973849048591698e-33];

/// cos(Ω t) in double-double: exact product, three-part reduction by π/2,
/// then Taylor series on |r| ≤ π/4.
fn cos_phase(omega: f64, t: f64) -> Dd {
    let arg = two_prod(omega, t);
    let k = (arg.hi / PIO2[0]).round();
    let r = arg
        .add(two_prod(k, PIO2[0]).neg())
        .add(two_prod(k, PIO2[1]).neg())
        .add(Dd { hi: -k * PIO2[2], lo: 0.0 });
    let r2 = r.mul(r).neg();
    let series = |mut term: Dd, first: u32| {
        let mut sum = term;
        let mut n = first;
        while term.hi.abs() > 1e-40 * sum.hi.abs().max(1e-300) && n < 60 {
            term = term.mul(r2).div_f(f64::from(n * (n + 1)));
            sum = sum.add(term);
            n += 2;
        }
        sum
    };
    let cos_r = series(Dd { hi: 1.0, lo: 0.0 }, 1);
    let sin_r = series(r, 2);
    match k.rem_euclid(4.0) as u8 {
        0 => cos_r,
        1 => sin_r.neg(),
        2 => cos_r.neg(),
        _ => sin_r,
    }
}

fn check_point(x: f64, y: f64, z: f64, t: f64) -> Result<(), PotentialError> {
    for (name, v) in [("x", x), ("y", y), ("z", z), ("t", t)] {
        if !v.is_finite() {
            return Err(PotentialError::NonFinite(name));
        }
    }
    Ok(())
}

pub fn evaluate(p: &PotentialParams, x: f64, y: f64, z: f64, t: f64) -> Result<f64, PotentialError> {
    p.validate()?;
    check_point(x, y, z, t)?;
    let pt = [x, y, z];
    let dc = quadratic_form(&p.dc, pt).scale(0.5 * p.u_dc);
    let rf = quadratic_form(&p.rf, pt).mul(cos_phase(p.omega_rf, t)).scale(0.5 * p.u_rf);
    let sum = dc.add(rf);
    Ok(sum.hi + sum.lo)
}

/// The time-independent part (U/2)(a x² + b y² + c z²).
pub fn dc_term(p: &PotentialParams, x: f64, y: f64, z: f64) -> Result<f64, PotentialError> {
    p.validate()?;
    check_point(x, y, z, 0.0)?;
    let v = quadratic_form(&p.dc, [x, y, z]).scale(0.5 * p.u_dc);
    Ok(v.hi + v.lo)
}

/// Trapezoid-rule mean of Φ over one RF period starting at t = 0.
pub fn period_mean(p: &PotentialParams, x: f64, y: f64, z: f64, steps: usize) -> Result<f64, PotentialError> {
    let steps = steps.max(1);
    let period = p.period();
    let h = period / steps as f64;
    let ends = evaluate(p, x, y, z, 0.0)? + evaluate(p, x, y, z, period)?;
    let mut inner = 0.0;
    for k in 1..steps {
        inner += evaluate(p, x, y, z, k as f64 * h)?;
    }
    Ok((0.5 * ends + inner) * h / period)
}

/// (a + b + c, a' + b' + c'); both vanish for a field obeying Laplace's
/// equation.
pub fn laplace_residual(p: &PotentialParams) -> (f64, f64) {
    let sum = |c: &[f64; 3]| {
        let s = two_sum(c[0], c[1]).add(Dd { hi: c[2], lo: 0.0 });
        s.hi + s.lo
    };
    (sum(&p.dc), sum(&p.rf))
}

pub fn is_valid_quadrupole(p: &PotentialParams, tol: f64) -> bool {
    let (dc, rf) = laplace_residual(p);
    dc.abs() <= tol && rf.abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisPair {
    Xy,
    Xz,
    Yz,
}

impl AxisPair {
    pub fn names(self) -> (char, char) {
        match self {
            AxisPair::Xy => ('x', 'y'),
            AxisPair::Xz => ('x', 'z'),
            AxisPair::Yz => ('y', 'z'),
        }
    }

    fn point(self, u: f64, v: f64) -> [f64; 3] {
        match self {
            AxisPair::Xy => [u, v, 0.0],
            AxisPair::Xz => [u, 0.0, v],
            AxisPair::Yz => [0.0, u, v],
        }
    }
}

impl FromStr for AxisPair {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(AxisPair::Xy),
            "xz" => Ok(AxisPair::Xz),
            "yz" => Ok(AxisPair::Yz),
            _ => Err(PotentialError::AxisPair(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub axes: AxisPair,
    pub t: f64,
    /// Lattice coordinates along the first axis (rows).
    pub u: Vec<f64>,
    /// Lattice coordinates along the second axis (columns).
    pub v: Vec<f64>,
    /// `values[i][j]` is Φ at (u[i], v[j]).
    pub values: Vec<Vec<f64>>,
}

impl Grid {
    /// One `u,v,phi` line per cell after a `# x,y,phi` style header.
    pub fn to_csv(&self) -> String {
        let (a, b) = self.axes.names();
        let mut out = format!("# {a},{b},phi\n");
        for (i, u) in self.u.iter().enumerate() {
            for (j, v) in self.v.iter().enumerate() {
                writeln!(out, "{u:e},{v:e},{:e}", self.values[i][j]).unwrap();
            }
        }
        out
    }
}

fn lattice(axis: char, (lo, hi): (f64, f64), n: usize) -> Result<Vec<f64>, PotentialError> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(PotentialError::NonFinite("range"));
    }
    if lo >= hi {
        return Err(PotentialError::EmptyRange { axis, lo, hi });
    }
    if n < 2 {
        return Err(PotentialError::Resolution(n));
    }
    let last = (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * (k as f64 / last) }).collect())
}

/// Samples Φ on a lattice in the plane of `axes`, the third coordinate
/// held at zero.
pub fn sample_grid(
    p: &PotentialParams,
    axes: AxisPair,
    ranges: [(f64, f64); 2],
    resolution: [usize; 2],
    t: f64,
) -> Result<Grid, PotentialError> {
    p.validate()?;
    let (a, b) = axes.names();
    let u = lattice(a, ranges[0], resolution[0])?;
    let v = lattice(b, ranges[1], resolution[1])?;
    let values = u
        .iter()
        .map(|&ui| {
            v.iter()
                .map(|&vj| {
                    let [x, y, z] = axes.point(ui, vj);
                    evaluate(p, x, y, z, t)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Grid { axes, t, u, v, values })
}
