//! Parameter transforms between unconstrained optimizer space and the
//! stationary / invertible coefficient region, plus root checks.

use nalgebra::DMatrix;

/// Partial autocorrelations are kept this far inside (-1, 1).
const PACF_BOUND: f64 = 1.0 - 1e-6;

/// Minimum distance of polynomial roots beyond the unit circle.
pub const ROOT_MARGIN: f64 = 1e-8;

/// Durbin-Levinson expansion of partial autocorrelations into the
/// coefficients `a` of a polynomial `1 - a_1 z - ... - a_p z^p` whose roots
/// all lie outside the unit circle whenever every partial is in (-1, 1).
pub fn pacf_to_coefs(partials: &[f64]) -> Vec<f64> {
    let mut coefs: Vec<f64> = Vec::with_capacity(partials.len());
    for (k, &r) in partials.iter().enumerate() {
        let prev = coefs.clone();
        for j in 0..k {
            coefs[j] = prev[j] - r * prev[k - 1 - j];
        }
        coefs.push(r);
    }
    coefs
}

/// Inverse of [`pacf_to_coefs`] (the step-down recursion). Returns `None`
/// when some partial falls outside (-1, 1), i.e. the polynomial is not
/// stationary.
pub fn coefs_to_pacf(coefs: &[f64]) -> Option<Vec<f64>> {
    let p = coefs.len();
    let mut a = coefs.to_vec();
    let mut partials = vec![0.0; p];
    for k in (0..p).rev() {
        let r = a[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        partials[k] = r;
        let denom = 1.0 - r * r;
        let prev = a.clone();
        for j in 0..k {
            a[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        a.truncate(k);
    }
    Some(partials)
}

pub fn to_partial(x: f64) -> f64 {
    x.tanh().clamp(-PACF_BOUND, PACF_BOUND)
}

pub fn from_partial(r: f64) -> f64 {
    r.clamp(-PACF_BOUND, PACF_BOUND).atanh()
}

/// Maps an unconstrained vector `[ar..., ma...]` to `(phi, theta)`.
pub fn unpack(x: &[f64], p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let ar: Vec<f64> = x[..p].iter().map(|&v| to_partial(v)).collect();
    let ma: Vec<f64> = x[p..p + q].iter().map(|&v| to_partial(v)).collect();
    let phi = pacf_to_coefs(&ar);
    let theta = pacf_to_coefs(&ma).into_iter().map(|c| -c).collect();
    (phi, theta)
}

/// Inverse of [`unpack`]; `None` if the coefficients are outside the region.
pub fn pack(phi: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = coefs_to_pacf(phi)?.into_iter().map(from_partial).collect();
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    x.extend(coefs_to_pacf(&neg)?.into_iter().map(from_partial));
    Some(x)
}

/// Smallest root modulus of `1 - a_1 z - ... - a_p z^p` (infinity for an
/// empty or all-zero polynomial).
pub fn min_root_modulus(coefs: &[f64]) -> f64 {
    let p = coefs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    if p == 0 {
        return f64::INFINITY;
    }
    // Companion eigenvalues are reciprocals of the polynomial roots.
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        companion[(0, j)] = coefs[j];
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let largest = companion
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0_f64, f64::max);
    if largest == 0.0 { f64::INFINITY } else { 1.0 / largest }
}

/// AR polynomial `1 - Σ φ_i z^i` has all roots beyond `1 + ROOT_MARGIN`.
pub fn is_stationary(phi: &[f64]) -> bool {
    min_root_modulus(phi) > 1.0 + ROOT_MARGIN
}

/// MA polynomial `1 + Σ θ_j z^j` has all roots beyond `1 + ROOT_MARGIN`.
pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    min_root_modulus(&neg) > 1.0 + ROOT_MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_partial_is_the_coefficient() {
        assert_eq!(pacf_to_coefs(&[0.4]), vec![0.4]);
    }

    #[test]
    fn two_partials() {
        // a2 = r2, a1 = r1 - r2 r1
        let c = pacf_to_coefs(&[0.5, 0.2]);
        assert!((c[0] - 0.4).abs() < 1e-15 && (c[1] - 0.2).abs() < 1e-15);
        let back = coefs_to_pacf(&c).unwrap();
        assert!((back[0] - 0.5).abs() < 1e-15 && (back[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn step_down_rejects_unit_root() {
        assert!(coefs_to_pacf(&[1.0]).is_none());
        assert!(coefs_to_pacf(&[0.5, 0.6]).is_none()); // 1 - .5z - .6z² has a root inside
    }

    #[test]
    fn roots() {
        assert!((min_root_modulus(&[0.5]) - 2.0).abs() < 1e-12);
        assert!(is_stationary(&[0.7]));
        assert!(!is_stationary(&[1.0]));
        assert!(is_invertible(&[0.5]));
        assert!(!is_invertible(&[-1.2]));
        assert_eq!(min_root_modulus(&[]), f64::INFINITY);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let phi = [0.5, -0.3];
        let theta = [0.4];
        let x = pack(&phi, &theta).unwrap();
        let (p2, t2) = unpack(&x, 2, 1);
        for (a, b) in phi.iter().zip(&p2).chain(theta.iter().zip(&t2)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
