//! Bessel functions of real, non-negative order and their zeros.
//!
//! `J_nu(x)` uses the ascending series where its terms decrease monotonically
//! (`x < 2 sqrt(nu + 1)`), and Steed's continued-fraction method otherwise
//! (CF1 for `J'/J`, CF2 for `p + i q`, Temme's series for `Y` when `x < 2`).
//! Both routes are accurate to a few ulps of `max(|J|, scale)` across the
//! ranges used here (`nu <= 10`, `x <= 100`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = 1.0e-16;
const FPMIN: f64 = 1.0e-300;
const MAXIT: usize = 100_000;
const XMIN: f64 = 2.0;

/// Values `J_nu(x), Y_nu(x), J_nu'(x), Y_nu'(x)` for `x > 0`, `nu >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct BesselJY {
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

/// `1 / Gamma(1 + x)` and friends for `|x| <= 1/2`, from Chebyshev fits.
fn temme_gammas(x: f64) -> (f64, f64, f64, f64) {
    const C1: [f64; 7] = [
        -1.142022680371168e0,
        6.5165112670737e-3,
        3.087090173086e-4,
        -3.4706269649e-6,
        6.9437664e-9,
        3.67795e-11,
        -1.356e-13,
    ];
    const C2: [f64; 8] = [
        1.843740587300905e0,
        -7.68528408447867e-2,
        1.2719271366546e-3,
        -4.9717367042e-6,
        -3.31261198e-8,
        2.423096e-10,
        -1.702e-13,
        -1.49e-15,
    ];
    let xx = 8.0 * x * x - 1.0;
    let gam1 = chebev(&C1, xx);
    let gam2 = chebev(&C2, xx);
    let gampl = gam2 - x * gam1;
    let gammi = gam2 + x * gam1;
    (gam1, gam2, gampl, gammi)
}

fn chebev(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for j in (1..c.len()).rev() {
        let sv = d;
        d = y2 * d - dd + c[j];
        dd = sv;
    }
    y * d - dd + 0.5 * c[0]
}

/// Steed's method for `J`, `Y` and derivatives.
pub fn bessel_jy(nu: f64, x: f64) -> BesselJY {
    assert!(x > 0.0 && nu >= 0.0, "bessel_jy requires x > 0 and nu >= 0");
    let nl = if x < XMIN { (nu + 0.5) as i64 } else { ((nu - x + 1.5) as i64).max(0) };
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;
    // CF1: J'_nu / J_nu by the modified Lentz method.
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    debug_assert!(converged, "CF1 did not converge");
    // Downward recurrence to order xmu.
    let mut rjl = isign * 1.0e-30;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;
    let (rjmu, mut rymu, mut ry1);
    if x < XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                break;
            }
        }
        rymu = -sum;
        ry1 = -sum1 * xi2;
        let rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
    } else {
        // CF2: p + i q by the modified Lentz method in complex arithmetic.
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let mut temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        for i in 2..MAXIT {
            a += 2.0 * (i as f64 - 1.0);
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (dlr - 1.0).abs() + dli.abs() < EPS {
                break;
            }
        }
        let gam = (p - f) / q;
        let mut rj = (w / ((p - f) * gam + q)).sqrt();
        if rjl < 0.0 {
            rj = -rj;
        }
        rjmu = rj;
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }
    let fact = rjmu / rjl;
    let j = rjl1 * fact;
    let jp = rjp1 * fact;
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    BesselJY { j, y: rymu, jp, yp: nu * xi * rymu - ry1 }
}

/// `1 / Gamma(1 + nu)` for `nu >= 0` via the Lanczos approximation.
fn inv_gamma1p(nu: f64) -> f64 {
    (-ln_gamma(1.0 + nu)).exp()
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Ascending series for `J_nu` and `J_nu'`.
fn series_j(nu: f64, x: f64) -> (f64, f64) {
    let h = 0.5 * x;
    let lead = if nu == 0.0 { 1.0 } else { (nu * h.ln()).exp() * inv_gamma1p(nu) };
    let q = -h * h;
    let mut term = 1.0;
    let mut s = 1.0;
    let mut sd = nu;
    for m in 1..200 {
        let fm = m as f64;
        term *= q / (fm * (fm + nu));
        s += term;
        sd += term * (2.0 * fm + nu);
        if term.abs() < 1e-17 * s.abs() {
            break;
        }
    }
    // d/dx [ (x/2)^nu sum t_m (x/2)^{2m} ] = (1/x) sum (2m + nu) ...
    (lead * s, lead * sd / x)
}

fn use_series(nu: f64, x: f64) -> bool {
    x * x < 4.0 * (nu + 1.0)
}

/// Bessel function of the first kind `J_nu(x)`, `nu >= 0`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    bessel_j_pair(nu, x).0
}

/// `(J_nu(x), J_nu'(x))`.
pub fn bessel_j_pair(nu: f64, x: f64) -> (f64, f64) {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j requires nu >= 0 and x >= 0");
    if x == 0.0 {
        let j = if nu == 0.0 { 1.0 } else { 0.0 };
        let jp = if nu == 1.0 {
            0.5
        } else if nu > 0.0 && nu < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
        return (j, jp);
    }
    if use_series(nu, x) {
        series_j(nu, x)
    } else {
        let r = bessel_jy(nu, x);
        (r.j, r.jp)
    }
}

/// `(J, J', J'')` with `J''` from Bessel's equation.
pub fn bessel_j_jet(nu: f64, x: f64) -> (f64, f64, f64) {
    let (j, jp) = bessel_j_pair(nu, x);
    let jpp = -jp / x + (nu * nu / (x * x) - 1.0) * j;
    (j, jp, jpp)
}

/// Bessel function of the second kind `Y_nu(x)`, `x > 0`.
pub fn bessel_y(nu: f64, x: f64) -> f64 {
    bessel_jy(nu, x).y
}

/// Refine a bracketed root of `f` by bisection to full precision.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Positive roots of `f` on `(start, end]` found by scanning with step `dx`.
fn scan_roots(f: &dyn Fn(f64) -> f64, start: f64, end: f64, dx: f64, count: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut a = start;
    let mut fa = f(a);
    while a < end && roots.len() < count {
        let b = (a + dx).min(end);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if (fa > 0.0) != (fb > 0.0) {
            roots.push(bisect(f, a, b));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// First `count` positive zeros of `J_nu`.
pub fn bessel_j_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("order {nu} must be finite and >= 0")));
    }
    let end = 4.0 * nu + 20.0 + PI * count as f64;
    let start = if nu == 0.0 { 1e-3 } else { nu.max(1e-3) };
    let roots = scan_roots(&|x| bessel_j(nu, x), start, end, 0.05, count);
    if roots.len() < count {
        return Err(Error::NoSignChange { mu: nu });
    }
    Ok(roots)
}

/// First positive zero `j_{nu,1}`.
pub fn bessel_first_zero(nu: f64) -> Result<f64> {
    Ok(bessel_j_zeros(nu, 1)?[0])
}

/// First `count` positive zeros of `J_nu'` (for `nu = 0` the trivial zero is skipped).
pub fn bessel_jp_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("order {nu} must be finite and >= 0")));
    }
    let end = 4.0 * nu + 20.0 + PI * count as f64;
    let start = if nu == 0.0 { 1e-3 } else { (0.5 * nu).max(1e-3) };
    let roots = scan_roots(&|x| bessel_j_pair(nu, x).1, start, end, 0.05, count);
    if roots.len() < count {
        return Err(Error::NoSignChange { mu: nu });
    }
    Ok(roots)
}
