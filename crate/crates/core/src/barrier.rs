//! Closed-form transmission and reflection for a single rectangular
//! barrier with equal leads.
//!
//! With k = sqrt(2m*E)/ħ in the leads and, inside the barrier,
//! k₁ = sqrt(2m*(E−V0))/ħ above the top or α = sqrt(2m*(V0−E))/ħ below
//! it, matching ψ and ψ′ at both barrier edges gives
//!
//! ```text
//! E < V0:  T = 1 / (1 + V0² sinh²(αd) / (4E(V0−E)))
//! E > V0:  T = 1 / (1 + V0² sin²(k₁d) / (4E(E−V0)))
//! E = V0:  T = 1 / (1 + m* V0 d² / (2ħ²))          (α → 0 limit)
//! ```
//!
//! Amplitudes use the convention of a unit incident wave from the left:
//! `t_amp` multiplies exp(ikx) for x > d and `r_amp` multiplies
//! exp(−ikx) for x < 0.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ensure_finite;
use crate::units::{EffectiveMass, HBAR2_OVER_2ME_EV_NM2};
use crate::{Error, Result};

/// Relative tolerance under which E is treated as exactly at the
/// barrier top and the α → 0 limit forms are used.
pub const SEAM_REL_TOL: f64 = 1e-12;

/// Above this value of α·d the sinh² form is replaced by its
/// asymptotic limit 16E(V0−E)/V0²·exp(−2αd); the two agree to better
/// than 1e-170 relative at the switch point.
const OPAQUE_ALPHA_D: f64 = 200.0;

/// Rectangular barrier of height `v0` (eV) and width `d` (nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangularBarrier {
    pub v0: f64,
    pub d: f64,
    pub mass: EffectiveMass,
}

impl RectangularBarrier {
    pub fn new(v0: f64, d: f64, mass: EffectiveMass) -> Result<Self> {
        ensure_finite("v0", v0)?;
        ensure_finite("d", d)?;
        if v0 <= 0.0 {
            return Err(Error::Domain {
                name: "v0",
                value: v0,
                constraint: "barrier height must be > 0",
            });
        }
        if d < 0.0 {
            return Err(Error::Domain {
                name: "d",
                value: d,
                constraint: "barrier width must be >= 0",
            });
        }
        Ok(RectangularBarrier { v0, d, mass })
    }
}

/// Energy position relative to the barrier top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Below,
    At,
    Above,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Below => write!(f, "below"),
            Regime::At => write!(f, "at"),
            Regime::Above => write!(f, "above"),
        }
    }
}

/// Transmission and reflection at one energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransmissionResult {
    pub energy: f64,
    pub t_prob: f64,
    pub r_prob: f64,
    pub t_amp: Complex64,
    pub r_amp: Complex64,
    pub regime: Regime,
}

/// Lead wavevector k = sqrt(2 m* E)/ħ in nm⁻¹.
pub fn wavevector(energy: f64, mass: EffectiveMass) -> Result<f64> {
    ensure_finite("energy", energy)?;
    if energy <= 0.0 {
        return Err(Error::Domain {
            name: "energy",
            value: energy,
            constraint: "must be > 0 for a propagating lead",
        });
    }
    Ok((mass.ratio() * energy / HBAR2_OVER_2ME_EV_NM2).sqrt())
}

/// Evanescent decay constant α = sqrt(2 m* (V0−E))/ħ in nm⁻¹.
pub fn decay_constant(energy: f64, barrier: &RectangularBarrier) -> Result<f64> {
    ensure_finite("energy", energy)?;
    if energy <= 0.0 || energy >= barrier.v0 {
        return Err(Error::Domain {
            name: "energy",
            value: energy,
            constraint: "must lie strictly inside (0, v0)",
        });
    }
    Ok((barrier.mass.ratio() * (barrier.v0 - energy) / HBAR2_OVER_2ME_EV_NM2).sqrt())
}

fn classify(energy: f64, v0: f64) -> Regime {
    if (energy - v0).abs() <= SEAM_REL_TOL * v0 {
        Regime::At
    } else if energy < v0 {
        Regime::Below
    } else {
        Regime::Above
    }
}

/// Closed-form transmission/reflection at `energy` (eV).
pub fn transmission(energy: f64, barrier: &RectangularBarrier) -> Result<TransmissionResult> {
    let k = wavevector(energy, barrier.mass)?;
    let v0 = barrier.v0;
    let d = barrier.d;
    let ratio = barrier.mass.ratio();
    let regime = classify(energy, v0);

    let i = Complex64::I;
    let exp_mikd = (-i * k * d).exp();

    let (t_prob, t_amp, r_amp) = match regime {
        Regime::Below => {
            let alpha = (ratio * (v0 - energy) / HBAR2_OVER_2ME_EV_NM2).sqrt();
            let ad = alpha * d;
            let t_prob = if ad > OPAQUE_ALPHA_D {
                16.0 * energy * (v0 - energy) / (v0 * v0) * (-2.0 * ad).exp()
            } else {
                let sh = ad.sinh();
                1.0 / (1.0 + v0 * v0 * sh * sh / (4.0 * energy * (v0 - energy)))
            };
            // factored by exp(-alpha d) so nothing overflows for opaque barriers
            let q = (-2.0 * ad).exp();
            let denom = Complex64::new(1.0 + q, 0.0)
                - i * ((k * k - alpha * alpha) / (2.0 * k * alpha)) * (1.0 - q);
            let t_amp = 2.0 * (-ad).exp() * exp_mikd / denom;
            let r_amp = -i * ((k * k + alpha * alpha) / (2.0 * k * alpha)) * (1.0 - q) / denom;
            (t_prob, t_amp, r_amp)
        }
        Regime::Above => {
            let k1 = (ratio * (energy - v0) / HBAR2_OVER_2ME_EV_NM2).sqrt();
            let s = (k1 * d).sin();
            let t_prob = 1.0 / (1.0 + v0 * v0 * s * s / (4.0 * energy * (energy - v0)));
            let denom =
                Complex64::new((k1 * d).cos(), 0.0) - i * ((k * k + k1 * k1) * s / (2.0 * k * k1));
            let t_amp = exp_mikd / denom;
            let r_amp = -i * ((k * k - k1 * k1) * s / (2.0 * k * k1)) / denom;
            (t_prob, t_amp, r_amp)
        }
        Regime::At => {
            // alpha -> 0 limit: sinh(ad)/a -> d, cosh -> 1
            let t_prob = 1.0 / (1.0 + ratio * v0 * d * d / (4.0 * HBAR2_OVER_2ME_EV_NM2));
            let denom = Complex64::new(1.0, -k * d / 2.0);
            let t_amp = exp_mikd / denom;
            let r_amp = -i * (k * d / 2.0) / denom;
            (t_prob, t_amp, r_amp)
        }
    };

    Ok(TransmissionResult {
        energy,
        t_prob,
        r_prob: 1.0 - t_prob,
        t_amp,
        r_amp,
        regime,
    })
}

/// Energies where sin(k₁d) = 0 and the barrier is perfectly
/// transparent: E_n = V0 + n²π²ħ²/(2m*d²), n = 1..n_max, ascending.
pub fn resonance_energies(barrier: &RectangularBarrier, n_max: usize) -> Result<Vec<f64>> {
    if barrier.d <= 0.0 {
        return Err(Error::Domain {
            name: "d",
            value: barrier.d,
            constraint: "resonances require a barrier of nonzero width",
        });
    }
    if n_max < 1 {
        return Err(Error::Domain {
            name: "n_max",
            value: n_max as f64,
            constraint: "must be >= 1",
        });
    }
    let scale = std::f64::consts::PI * std::f64::consts::PI * HBAR2_OVER_2ME_EV_NM2
        / (barrier.mass.ratio() * barrier.d * barrier.d);
    Ok((1..=n_max)
        .map(|n| barrier.v0 + (n * n) as f64 * scale)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HBAR2_OVER_2ME_EV_NM2 as H2M;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn free() -> EffectiveMass {
        EffectiveMass::FREE_ELECTRON
    }

    fn barrier(v0: f64, d: f64, ratio: f64) -> RectangularBarrier {
        RectangularBarrier::new(v0, d, EffectiveMass::new(ratio).unwrap()).unwrap()
    }

    #[test]
    fn wavevector_values() {
        // E chosen so ratio*E/h2m = 1 by construction
        assert_relative_eq!(wavevector(H2M, free()).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            wavevector(1.5, free()).unwrap(),
            6.2745727775783777,
            max_relative = 1e-13
        );
        assert!(wavevector(-1.0, free()).is_err());
        assert!(wavevector(0.0, free()).is_err());
        assert!(wavevector(f64::NAN, free()).is_err());
    }

    #[test]
    fn decay_constant_values() {
        let b = barrier(2.0 * H2M, 1.0, 1.0);
        assert_relative_eq!(decay_constant(H2M, &b).unwrap(), 1.0, max_relative = 1e-14);
        let b = barrier(3.1, 1.0, 1.0);
        assert_relative_eq!(
            decay_constant(1.5, &b).unwrap(),
            6.4803508992339924,
            max_relative = 1e-13
        );
        assert!(decay_constant(3.1, &b).is_err());
        assert!(decay_constant(0.0, &b).is_err());
        assert!(decay_constant(4.0, &b).is_err());
    }

    #[test]
    fn zero_width_is_transparent() {
        for e in [0.3, 1.0, 5.0] {
            let r = transmission(e, &barrier(3.1, 0.0, 1.0)).unwrap();
            assert_relative_eq!(r.t_prob, 1.0, max_relative = 1e-14);
            assert!(r.r_prob.abs() <= 1e-14);
            assert_relative_eq!(r.t_amp.norm(), 1.0, max_relative = 1e-14);
            assert!(r.r_amp.norm() <= 1e-14);
        }
    }

    #[test]
    fn tunneling_reference_values() {
        let r = transmission(1.5, &barrier(3.1, 1.0, 1.0)).unwrap();
        assert_eq!(r.regime, Regime::Below);
        assert_relative_eq!(r.t_prob, 9.3938695787829438e-6, max_relative = 1e-12);

        let r07 = transmission(1.5, &barrier(3.1, 1.0, 0.07)).unwrap();
        assert_relative_eq!(r07.t_prob, 0.121540904540452, max_relative = 1e-12);
        // lighter effective mass tunnels more
        assert!(r07.t_prob > r.t_prob);
    }

    #[test]
    fn amplitudes_consistent_with_probabilities() {
        let cases = [
            (1.5, 3.1, 1.0, 1.0),
            (1.5, 3.1, 1.0, 0.07),
            (5.0, 3.1, 1.0, 0.07),
            (0.5, 4.0, 26.0835954062, 1.0), // alpha*d = 250, asymptotic branch
            (3.1, 3.1, 1.0, 1.0),           // seam
            (3.1 * (1.0 + 1e-13), 3.1, 2.0, 0.3),
        ];
        for (e, v0, d, ratio) in cases {
            let r = transmission(e, &barrier(v0, d, ratio)).unwrap();
            let t2 = r.t_amp.norm_sqr();
            let r2 = r.r_amp.norm_sqr();
            assert!(
                (t2 - r.t_prob).abs() <= 1e-12 * r.t_prob.max(1e-30),
                "|t|^2 vs T mismatch at E={e}: {t2} vs {}",
                r.t_prob
            );
            assert!((r2 - r.r_prob).abs() <= 1e-12, "|r|^2 vs R at E={e}");
            assert!((r.t_prob + r.r_prob - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn deep_tunneling_asymptotic_value() {
        // alpha*d = 250: sinh() would square to ~1e217, the guard must kick in
        let d = 26.0835954062;
        let r = transmission(0.5, &barrier(4.0, d, 1.0)).unwrap();
        assert_relative_eq!(r.t_prob, 1.24680087118e-217, max_relative = 1e-9);
        assert!(r.t_prob > 0.0);
    }

    #[test]
    fn seam_is_continuous() {
        for (v0, d, ratio) in [(3.1, 1.0, 1.0), (1.0, 2.0, 0.07), (5.0, 0.3, 0.5)] {
            let b = barrier(v0, d, ratio);
            let eps = 1e-8;
            let below = transmission(v0 * (1.0 - eps), &b).unwrap();
            let at = transmission(v0, &b).unwrap();
            let above = transmission(v0 * (1.0 + eps), &b).unwrap();
            assert_eq!(at.regime, Regime::At);
            assert_relative_eq!(below.t_prob, above.t_prob, max_relative = 1e-6);
            assert_relative_eq!(below.t_prob, at.t_prob, max_relative = 1e-6);
        }
        let r = transmission(3.1, &barrier(3.1, 1.0, 1.0)).unwrap();
        assert_relative_eq!(r.t_prob, 0.046857495439024127, max_relative = 1e-10);
    }

    #[test]
    fn transparent_at_resonances() {
        for (v0, d, ratio) in [(1.0, 1.0, 1.0), (3.1, 0.7, 0.07), (0.5, 2.5, 0.4)] {
            let b = barrier(v0, d, ratio);
            for e in resonance_energies(&b, 5).unwrap() {
                let r = transmission(e, &b).unwrap();
                assert!(
                    (r.t_prob - 1.0).abs() <= 1e-10,
                    "T != 1 at resonance E={e} for v0={v0} d={d} ratio={ratio}"
                );
            }
        }
    }

    #[test]
    fn resonance_list_values() {
        let b = barrier(1.0, 1.0, 1.0);
        let es = resonance_energies(&b, 3).unwrap();
        assert_relative_eq!(es[0], 1.3760301626167375, max_relative = 1e-12);
        assert_relative_eq!(es[1], 2.50412065047, max_relative = 1e-10);
        assert_relative_eq!(es[2], 4.38427146355, max_relative = 1e-10);
        assert!(es.windows(2).all(|w| w[0] < w[1]));
        assert!(resonance_energies(&barrier(1.0, 0.0, 1.0), 1).is_err());
    }

    #[test]
    fn narrower_barrier_transmits_more() {
        let e = 1.5;
        let mut last = f64::INFINITY;
        for d in [0.2, 0.5, 1.0, 2.0, 4.0] {
            let t = transmission(e, &barrier(3.1, d, 1.0)).unwrap().t_prob;
            assert!(t < last, "T must strictly decrease with width");
            last = t;
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(RectangularBarrier::new(-1.0, 1.0, free()).is_err());
        assert!(RectangularBarrier::new(1.0, -0.5, free()).is_err());
        assert!(RectangularBarrier::new(f64::NAN, 1.0, free()).is_err());
        assert!(transmission(0.0, &barrier(1.0, 1.0, 1.0)).is_err());
        assert!(transmission(-2.0, &barrier(1.0, 1.0, 1.0)).is_err());
    }

    proptest! {
        // flux conservation from the amplitude route, all regimes
        #[test]
        fn flux_conserved(
            e in 0.01f64..10.0,
            v0 in 0.01f64..10.0,
            d in 0.0f64..10.0,
            ratio in 0.05f64..1.0,
        ) {
            let r = transmission(e, &barrier(v0, d, ratio)).unwrap();
            prop_assert!((r.t_amp.norm_sqr() + r.r_amp.norm_sqr() - 1.0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.t_prob));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.r_prob));
        }
    }
}
