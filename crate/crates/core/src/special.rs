//! Special functions used by the rate integrals and the partial-wave solver.

use std::f64::consts::PI;

/// Ordinary Bessel function J₀.
pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Exponentially scaled modified Bessel function e^{-|x|} I₀(x).
pub fn i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        let h = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= h / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic series, terms ((2k-1)!!)² / (k! 8^k x^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// 1 − sin(x)/x, accurate for small x.
pub fn one_minus_sinc(x: f64) -> f64 {
    let x2 = x * x;
    if x2 < 1e-2 {
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        1.0 - x.sin() / x
    }
}

/// Spherical Bessel j_ℓ(x) for ℓ = 0..out.len()-1.
pub fn spherical_jn_array(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let lmax = n - 1;
    if x.abs() < 1e-300 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x >= lmax as f64 {
        // Upward recurrence is stable while ℓ < x.
        let (s, c) = x.sin_cos();
        out[0] = s / x;
        if lmax >= 1 {
            out[1] = s / (x * x) - c / x;
        }
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return;
    }
    // Miller's downward recurrence, normalized against j₀ or j₁.
    let start = lmax + 16 + (160.0 * lmax.max(1) as f64).sqrt() as usize + x as usize;
    let mut jp = 0.0;
    let mut j = 1e-300;
    let mut l = start;
    while l > 0 {
        let jm = (2 * l + 1) as f64 / x * j - jp;
        jp = j;
        j = jm;
        l -= 1;
        if l <= lmax {
            out[l] = j;
        }
        if j.abs() > 1e250 {
            jp *= 1e-250;
            j *= 1e-250;
            for t in out.iter_mut().skip(l) {
                *t *= 1e-250;
            }
        }
    }
    let (s, c) = x.sin_cos();
    let true0 = s / x;
    let true1 = s / (x * x) - c / x;
    let norm = if true0.abs() >= true1.abs() || lmax == 0 {
        true0 / out[0]
    } else {
        true1 / out[1]
    };
    for o in out.iter_mut() {
        *o *= norm;
    }
}

/// Spherical Bessel y_ℓ(x) for ℓ = 0..out.len()-1 by upward recurrence.
pub fn spherical_yn_array(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if n > 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for l in 1..n.saturating_sub(1) {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
}

/// Scaled modified spherical Bessel e^{-x} i_ℓ(x) for ℓ = 0..out.len()-1, x ≥ 0.
pub fn scaled_spherical_in_array(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    if x < 1e-300 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    let lmax = n - 1;
    let i0 = if x < 1e-8 {
        1.0 - x
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * x)
    };
    let start = lmax + 30 + (2.0 * x) as usize;
    let mut ip = 0.0;
    let mut i = 1e-300;
    let mut l = start;
    while l > 0 {
        let im = (2 * l + 1) as f64 / x * i + ip;
        ip = i;
        i = im;
        l -= 1;
        if l <= lmax {
            out[l] = i;
        }
        if i > 1e250 {
            ip *= 1e-250;
            i *= 1e-250;
            for t in out.iter_mut().skip(l) {
                *t *= 1e-250;
            }
        }
    }
    let norm = i0 / out[0];
    for o in out.iter_mut() {
        *o *= norm;
    }
}

/// Legendre polynomials P_ℓ(x) for ℓ = 0..out.len()-1.
pub fn legendre_array(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for l in 1..n.saturating_sub(1) {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

/// Normalized uniform-sphere form factor 3(sin x − x cos x)/x³.
pub fn sphere_form_factor(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0
    } else {
        let (s, c) = x.sin_cos();
        3.0 * (s - x * c) / (x * x * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn i0e_reference_values() {
        // I₀(1) = 1.2660658777520082, I₀(25) = 5.774560606582664e9
        assert!(close(i0e(1.0), 1.2660658777520082 * (-1.0f64).exp(), 1e-13));
        assert!(close(
            i0e(25.0),
            5.774560606582664e9 * (-25.0f64).exp(),
            1e-10
        ));
        assert!(close(
            i0e(20.0),
            4.355828255955353e7 * (-20.0f64).exp(),
            1e-12
        ));
        assert_eq!(i0e(0.0), 1.0);
    }

    #[test]
    fn i0e_continuous_at_switch() {
        let a = i0e(20.0 - 1e-9);
        let b = i0e(20.0 + 1e-9);
        assert!(close(a, b, 1e-10));
    }

    #[test]
    fn jn_matches_closed_forms() {
        for &x in &[0.3, 1.0, 5.0, 17.0, 300.0] {
            let mut j = [0.0; 4];
            spherical_jn_array(x, &mut j);
            let (s, c) = f64::sin_cos(x);
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!(close(j[0], s / x, 1e-12), "x={x}");
            assert!((j[2] - j2).abs() < 1e-10 * j2.abs().max(1e-6), "x={x}");
        }
    }

    #[test]
    fn jn_small_argument_series() {
        // j_10(0.1) ≈ 0.1^10 / 21!!
        let mut j = [0.0; 11];
        spherical_jn_array(0.1, &mut j);
        let dfact: f64 = (1..=21).step_by(2).map(|k| k as f64).product();
        let expect = 0.1f64.powi(10) / dfact * (1.0 - 0.01 / (2.0 * 23.0));
        assert!(close(j[10], expect, 1e-6));
    }

    #[test]
    fn jn_both_branches_agree() {
        // x just below and above lmax switches recurrence direction.
        let mut a = [0.0; 31];
        let mut b = [0.0; 31];
        spherical_jn_array(29.999_999, &mut a);
        spherical_jn_array(30.000_001, &mut b);
        for l in 0..31 {
            assert!((a[l] - b[l]).abs() < 1e-7, "l={l}");
        }
    }

    #[test]
    fn scaled_in_closed_forms() {
        for &x in &[0.5, 3.0, 40.0] {
            let mut v = [0.0; 3];
            scaled_spherical_in_array(x, &mut v);
            let i1 = (x.cosh() - x.sinh() / x) / x;
            let i0 = x.sinh() / x;
            assert!(close(v[0], i0 * (-x).exp(), 1e-12));
            assert!(close(v[1], i1 * (-x).exp(), 1e-8), "x={x}");
        }
    }

    #[test]
    fn legendre_values() {
        let mut p = [0.0; 4];
        legendre_array(0.5, &mut p);
        assert!(close(p[2], -0.125, 1e-15));
        assert!(close(p[3], -0.4375, 1e-15));
    }

    #[test]
    fn form_factor_values() {
        assert_eq!(sphere_form_factor(0.0), 1.0);
        assert!(close(sphere_form_factor(PI), 3.0 / (PI * PI), 1e-14));
        let x = 100.0;
        assert!(sphere_form_factor(x).abs() <= 3.0 * (1.0 + x) / x.powi(3));
        assert!(close(
            sphere_form_factor(0.0099),
            sphere_form_factor(0.010_000_1),
            1e-6
        ));
    }

    #[test]
    fn one_minus_sinc_branches() {
        let x: f64 = 0.0999;
        let direct = 1.0 - x.sin() / x;
        assert!(close(one_minus_sinc(x), direct, 1e-9));
        assert!(close(one_minus_sinc(1e-6), 1e-12 / 6.0, 1e-9));
    }
}
