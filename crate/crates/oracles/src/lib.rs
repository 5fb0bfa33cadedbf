//! Reference computations for the test suites.
//!
//! Everything here is deliberately brute-force and independent of the
//! main crate: constants are rederived from the defining SI values,
//! stationary transmission comes from direct Numerov integration of the
//! second-order equation, and wave-packet expectations come from the
//! closed-form free-Gaussian solution. Test assertions compare the
//! production implementations against these slower routes.

use num_complex::Complex64;

/// ħ in eV·fs, from h = 6.62607015e-34 J·s and e = 1.602176634e-19 C.
pub fn hbar_ev_fs() -> f64 {
    6.62607015e-34 / (2.0 * std::f64::consts::PI) / 1.602176634e-19 * 1e15
}

/// ħ²/(2mₑ) in eV·nm², mₑ = 9.1093837015e-31 kg.
pub fn hbar2_over_2me() -> f64 {
    let hbar_js = 6.62607015e-34 / (2.0 * std::f64::consts::PI);
    hbar_js * hbar_js / (2.0 * 9.1093837015e-31) / 1.602176634e-19 * 1e18
}

/// Free electron mass in eV·fs²/nm².
pub fn electron_mass_ev() -> f64 {
    9.1093837015e-31 / 1.602176634e-19 * 1e12
}

/// Piecewise-constant potential (widths, heights) starting at x = 0
/// with equal leads at `lead`.
fn potential(x: f64, segments: &[(f64, f64)], lead: f64) -> f64 {
    if x < 0.0 {
        return lead;
    }
    let mut edge = 0.0;
    for &(w, h) in segments {
        edge += w;
        if x < edge {
            return h;
        }
    }
    lead
}

/// Transmission probability by Numerov integration of
/// ψ'' = q(x) ψ with q = 2m*(V−E)/ħ², marched right-to-left from a pure
/// transmitted wave and decomposed into incident/reflected parts in the
/// left lead. `dx` is the integration step in nm.
pub fn numerov_transmission(
    energy: f64,
    segments: &[(f64, f64)],
    lead: f64,
    mass_ratio: f64,
    dx: f64,
) -> f64 {
    let h2m = hbar2_over_2me();
    let total: f64 = segments.iter().map(|s| s.0).sum();
    let pad = 0.5_f64.max(2.0 * dx);
    let k = (mass_ratio * (energy - lead) / h2m).sqrt();

    let n = ((total + 2.0 * pad) / dx).ceil() as usize + 1;
    let step = (total + 2.0 * pad) / (n - 1) as f64;
    let x_at = |i: usize| -pad + i as f64 * step;
    let q_at = |i: usize| mass_ratio * (potential(x_at(i), segments, lead) - energy) / h2m;

    let mut psi = vec![Complex64::ZERO; n];
    psi[n - 1] = Complex64::new(0.0, k * x_at(n - 1)).exp();
    psi[n - 2] = Complex64::new(0.0, k * x_at(n - 2)).exp();
    let h2 = step * step;
    for m in (1..n - 1).rev() {
        let fm1 = 1.0 - h2 * q_at(m - 1) / 12.0;
        let fm = 1.0 + 5.0 * h2 * q_at(m) / 12.0;
        let fp1 = 1.0 - h2 * q_at(m + 1) / 12.0;
        psi[m - 1] = (2.0 * fm * psi[m] - fp1 * psi[m + 1]) / fm1;
    }

    // psi = A e^{ikx} + B e^{-ikx} in the left lead: solve from two points
    let (x1, x2) = (x_at(0), x_at(1));
    let (p1, p2) = (psi[0], psi[1]);
    let e1 = Complex64::new(0.0, k * x1).exp();
    let e2 = Complex64::new(0.0, k * x2).exp();
    let det = e1 * e2.conj() - e2 * e1.conj();
    let a = (p1 * e2.conj() - p2 * e1.conj()) / det;
    1.0 / a.norm_sqr()
}

/// Center of a free Gaussian packet after time `t`:
/// x0 + (ħ k0 / m*) t.
pub fn free_gaussian_center(x0: f64, k0: f64, mass_ratio: f64, t: f64) -> f64 {
    x0 + hbar_ev_fs() * k0 / (mass_ratio * electron_mass_ev()) * t
}

/// Position spread of a free Gaussian packet after time `t`:
/// σ(t)² = σ0² + (ħ t / (2 m* σ0))².
pub fn free_gaussian_sigma(sigma0: f64, mass_ratio: f64, t: f64) -> f64 {
    let s = hbar_ev_fs() * t / (2.0 * mass_ratio * electron_mass_ev() * sigma0);
    (sigma0 * sigma0 + s * s).sqrt()
}

/// Closed-form momentum density of a Gaussian packet with position
/// spread σ and carrier k0: |φ(k)|² = sqrt(2σ²/π) exp(−2σ²(k−k0)²).
pub fn gaussian_k_density(k: f64, k0: f64, sigma_x: f64) -> f64 {
    (2.0 * sigma_x * sigma_x / std::f64::consts::PI).sqrt()
        * (-2.0 * sigma_x * sigma_x * (k - k0) * (k - k0)).exp()
}

/// Trapezoid quadrature over uniformly spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerov_reproduces_free_propagation() {
        let t = numerov_transmission(1.0, &[], 0.0, 1.0, 1e-3);
        assert!((t - 1.0).abs() < 1e-10, "free T = {t}");
    }

    #[test]
    fn numerov_matches_published_tunneling_magnitude() {
        // standard textbook configuration, checked against the sinh form
        let t = numerov_transmission(1.5, &[(1.0, 3.1)], 0.0, 1.0, 1e-4);
        assert!((t - 9.3938695787829438e-6).abs() / 9.39e-6 < 1e-6, "T = {t}");
    }

    #[test]
    fn gaussian_density_normalizes() {
        let dx = 1e-3;
        let vals: Vec<f64> = (0..20000)
            .map(|i| gaussian_k_density(-10.0 + i as f64 * dx, 0.0, 1.0))
            .collect();
        assert!((trapezoid(&vals, dx) - 1.0).abs() < 1e-8);
    }
}
