//! Scattering solver for arbitrary piecewise-constant potentials
//! between two equal semi-infinite leads.
//!
//! Interfaces and slab propagation are composed as 2x2 scattering
//! matrices (Redheffer star product) instead of raw transfer-matrix
//! products: every stored entry stays bounded by O(1) even for opaque
//! barriers, where transfer matrices would accumulate exp(+αd) factors
//! and overflow. Evanescent slabs carry the decaying factor exp(−αw)
//! only.
//!
//! Region amplitudes are recovered for every region (leads included)
//! and re-substituted into the matching conditions; the worst interface
//! residual is attached to each solve result.

use num_complex::Complex64;
use serde::Serialize;

use crate::barrier::{Regime, RectangularBarrier, TransmissionResult};
use crate::error::ensure_finite;
use crate::units::{EffectiveMass, HBAR2_OVER_2ME_EV_NM2};
use crate::{Error, Result};

/// One piecewise-constant slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    /// Width in nm, > 0.
    pub width: f64,
    /// Potential in eV.
    pub height: f64,
}

/// Ordered potential segments between two equal leads. The structured
/// region occupies [0, total_width]; the leads sit at `lead_height`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialProfile {
    segments: Vec<Segment>,
    lead_height: f64,
    mass: EffectiveMass,
}

impl PotentialProfile {
    pub fn new(segments: Vec<Segment>, lead_height: f64, mass: EffectiveMass) -> Result<Self> {
        ensure_finite("lead_height", lead_height)?;
        for (i, s) in segments.iter().enumerate() {
            ensure_finite("segment width", s.width)?;
            ensure_finite("segment height", s.height)?;
            if s.width <= 0.0 {
                return Err(Error::Invalid(format!(
                    "segment {i} has width {} nm, widths must be > 0",
                    s.width
                )));
            }
        }
        Ok(PotentialProfile {
            segments,
            lead_height,
            mass,
        })
    }

    /// No segments at all: free propagation.
    pub fn free(mass: EffectiveMass) -> Self {
        PotentialProfile {
            segments: Vec::new(),
            lead_height: 0.0,
            mass,
        }
    }

    /// Single rectangular barrier between zero leads. A zero-width
    /// barrier becomes the free profile.
    pub fn rectangular(barrier: &RectangularBarrier) -> Self {
        let segments = if barrier.d > 0.0 {
            vec![Segment {
                width: barrier.d,
                height: barrier.v0,
            }]
        } else {
            Vec::new()
        };
        PotentialProfile {
            segments,
            lead_height: 0.0,
            mass: barrier.mass,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lead_height(&self) -> f64 {
        self.lead_height
    }

    pub fn mass(&self) -> EffectiveMass {
        self.mass
    }

    pub fn total_width(&self) -> f64 {
        self.segments.iter().map(|s| s.width).sum()
    }

    pub fn max_height(&self) -> Option<f64> {
        self.segments
            .iter()
            .map(|s| s.height)
            .fold(None, |m, h| Some(m.map_or(h, |v: f64| v.max(h))))
    }

    /// Potential at position x (nm), leads included.
    pub fn potential_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.lead_height;
        }
        let mut edge = 0.0;
        for s in &self.segments {
            edge += s.width;
            if x < edge {
                return s.height;
            }
        }
        self.lead_height
    }
}

/// Local wave character of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RegionWave {
    /// Oscillatory, wavevector k in nm⁻¹.
    Propagating { k: f64 },
    /// Exponential, decay constant α in nm⁻¹.
    Evanescent { alpha: f64 },
}

/// Wave amplitudes in one region, referenced at the region's left edge
/// (the left lead is referenced at x = 0, its right edge).
///
/// `forward` multiplies the rightward-moving (or rightward-decaying)
/// basis function exp(iκξ), `backward` the opposite one, with
/// ξ = x − x_left and κ = k or iα.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionCoefficients {
    pub x_left: f64,
    /// None for the two leads.
    pub width: Option<f64>,
    pub height: f64,
    pub wave: RegionWave,
    pub forward: Complex64,
    pub backward: Complex64,
}

impl RegionCoefficients {
    fn kappa(&self) -> Complex64 {
        match self.wave {
            RegionWave::Propagating { k } => Complex64::new(k, 0.0),
            RegionWave::Evanescent { alpha } => Complex64::new(0.0, alpha),
        }
    }

    /// ψ at local offset ξ from the region's reference plane.
    pub fn psi_at(&self, xi: f64) -> Complex64 {
        let ik = Complex64::I * self.kappa();
        self.forward * (ik * xi).exp() + self.backward * (-ik * xi).exp()
    }

    /// dψ/dx at local offset ξ.
    pub fn dpsi_at(&self, xi: f64) -> Complex64 {
        let ik = Complex64::I * self.kappa();
        ik * (self.forward * (ik * xi).exp() - self.backward * (-ik * xi).exp())
    }

    /// Coefficients in the global-x convention: the pair multiplying
    /// (exp(+ikx), exp(−ikx)) for propagating regions and
    /// (exp(+αx), exp(−αx)) for evanescent ones.
    pub fn global_pair(&self) -> (Complex64, Complex64) {
        match self.wave {
            RegionWave::Propagating { k } => {
                let ph = Complex64::new(0.0, k * self.x_left).exp();
                (self.forward / ph, self.backward * ph)
            }
            RegionWave::Evanescent { alpha } => {
                let g = (alpha * self.x_left).exp();
                // backward grows to the right: it multiplies exp(+αx)
                (self.backward / g, self.forward * g)
            }
        }
    }
}

/// Full coefficient set for one solve, with the back-substitution
/// residual (worst relative mismatch of ψ, ψ′ over all interfaces).
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringCoefficients {
    pub energy: f64,
    pub regions: Vec<RegionCoefficients>,
    pub residual: f64,
}

/// 2x2 scattering matrix: (out_left, out_right) from (in_left, in_right).
#[derive(Debug, Clone, Copy)]
struct SMat {
    s11: Complex64,
    s12: Complex64,
    s21: Complex64,
    s22: Complex64,
}

impl SMat {
    fn identity() -> SMat {
        SMat {
            s11: Complex64::ZERO,
            s12: Complex64::ONE,
            s21: Complex64::ONE,
            s22: Complex64::ZERO,
        }
    }

    /// Interface between regions with wavenumbers κ1, κ2 (continuity of
    /// ψ and ψ′, equal masses).
    fn interface(k1: Complex64, k2: Complex64) -> SMat {
        let sum = k1 + k2;
        SMat {
            s11: (k1 - k2) / sum,
            s12: 2.0 * k2 / sum,
            s21: 2.0 * k1 / sum,
            s22: (k2 - k1) / sum,
        }
    }

    /// Free flight across a slab of width w: exp(iκw), which decays for
    /// evanescent κ = iα.
    fn propagation(kappa: Complex64, width: f64) -> SMat {
        let ph = (Complex64::I * kappa * width).exp();
        SMat {
            s11: Complex64::ZERO,
            s12: ph,
            s21: ph,
            s22: Complex64::ZERO,
        }
    }

    /// Redheffer star product: self on the left, other on the right.
    fn then(self, other: SMat) -> SMat {
        let d = Complex64::ONE / (Complex64::ONE - self.s22 * other.s11);
        SMat {
            s11: self.s11 + self.s12 * other.s11 * d * self.s21,
            s12: self.s12 * other.s12 * d,
            s21: other.s21 * d * self.s21,
            s22: other.s22 + other.s21 * d * self.s22 * self.s12,
        }
    }
}

/// Local wavenumber for a region at potential `height`. Exactly at the
/// degenerate point E = height the wavenumber is floored at the seam
/// tolerance, which reproduces the analytic limit to well below every
/// stated tolerance.
fn region_kappa(energy: f64, height: f64, ratio: f64) -> (Complex64, RegionWave) {
    let floor = crate::barrier::SEAM_REL_TOL * height.abs().max(1.0);
    let de = energy - height;
    let mag = de.abs().max(floor);
    let kappa = (ratio * mag / HBAR2_OVER_2ME_EV_NM2).sqrt();
    if de >= 0.0 {
        (Complex64::new(kappa, 0.0), RegionWave::Propagating { k: kappa })
    } else {
        (
            Complex64::new(0.0, kappa),
            RegionWave::Evanescent { alpha: kappa },
        )
    }
}

/// Solve the stationary scattering problem at `energy` for a unit wave
/// incident from the left lead.
pub fn solve(
    profile: &PotentialProfile,
    energy: f64,
) -> Result<(TransmissionResult, ScatteringCoefficients)> {
    ensure_finite("energy", energy)?;
    if energy <= profile.lead_height {
        return Err(Error::Domain {
            name: "energy",
            value: energy,
            constraint: "must exceed the lead height for a propagating incident wave",
        });
    }
    let ratio = profile.mass.ratio();
    let n = profile.segments.len();

    // region wavenumbers: leads at each end, one per segment between
    let mut kappas = Vec::with_capacity(n + 2);
    let mut waves = Vec::with_capacity(n + 2);
    let (kl, wl) = region_kappa(energy, profile.lead_height, ratio);
    kappas.push(kl);
    waves.push(wl);
    for s in &profile.segments {
        let (k, w) = region_kappa(energy, s.height, ratio);
        kappas.push(k);
        waves.push(w);
    }
    kappas.push(kl);
    waves.push(wl);

    // prefix[j]: scattering matrix from the left-lead plane to just
    // inside region j (interfaces 0..j-1, slabs 1..j-1 composed)
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = SMat::interface(kappas[0], kappas[1]);
    prefix.push(acc);
    for j in 1..=n {
        acc = acc
            .then(SMat::propagation(kappas[j], profile.segments[j - 1].width))
            .then(SMat::interface(kappas[j], kappas[j + 1]));
        prefix.push(acc);
    }
    let full = *prefix.last().expect("at least the lead interface");

    // suffix[j]: from the left edge of region j to the right lead
    let mut suffix = vec![SMat::identity(); n + 2];
    for j in (1..=n).rev() {
        suffix[j] = SMat::propagation(kappas[j], profile.segments[j - 1].width)
            .then(SMat::interface(kappas[j], kappas[j + 1]))
            .then(suffix[j + 1]);
    }

    let t_local = full.s21; // referenced at x = total_width
    let r = full.s11;

    // region amplitudes, local reference at each region's left edge
    let mut x_left = 0.0;
    let mut regions = Vec::with_capacity(n + 2);
    regions.push(RegionCoefficients {
        x_left: 0.0,
        width: None,
        height: profile.lead_height,
        wave: waves[0],
        forward: Complex64::ONE,
        backward: r,
    });
    for j in 1..=n {
        let p = prefix[j - 1];
        let q = suffix[j];
        let denom = Complex64::ONE - p.s22 * q.s11;
        let a = p.s21 / denom;
        let b = q.s11 * a;
        regions.push(RegionCoefficients {
            x_left,
            width: Some(profile.segments[j - 1].width),
            height: profile.segments[j - 1].height,
            wave: waves[j],
            forward: a,
            backward: b,
        });
        x_left += profile.segments[j - 1].width;
    }
    regions.push(RegionCoefficients {
        x_left,
        width: None,
        height: profile.lead_height,
        wave: waves[n + 1],
        forward: t_local,
        backward: Complex64::ZERO,
    });

    let residual = back_substitution_residual(&regions, &kappas);

    let t_prob = t_local.norm_sqr();
    let r_prob = r.norm_sqr();
    let k_lead = kappas[0].re;
    let total_width = x_left;
    // global convention: t_amp multiplies exp(ikx) beyond the structure
    let t_amp = t_local * Complex64::new(0.0, -k_lead * total_width).exp();

    let regime = match profile.max_height() {
        None => Regime::Above,
        Some(h) => {
            if (energy - h).abs() <= crate::barrier::SEAM_REL_TOL * h.abs().max(1.0) {
                Regime::At
            } else if energy < h {
                Regime::Below
            } else {
                Regime::Above
            }
        }
    };

    Ok((
        TransmissionResult {
            energy,
            t_prob,
            r_prob,
            t_amp,
            r_amp: r,
            regime,
        },
        ScatteringCoefficients {
            energy,
            regions,
            residual,
        },
    ))
}

/// Worst relative mismatch of (ψ, ψ′) across all interfaces.
fn back_substitution_residual(regions: &[RegionCoefficients], kappas: &[Complex64]) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..regions.len() - 1 {
        let left = &regions[j];
        let right = &regions[j + 1];
        let xi = left.width.unwrap_or(0.0);
        let psi_l = left.psi_at(xi);
        let psi_r = right.psi_at(0.0);
        let dpsi_l = left.dpsi_at(xi);
        let dpsi_r = right.dpsi_at(0.0);
        let k_scale = kappas[j].norm().max(kappas[j + 1].norm()).max(1e-300);
        let scale = psi_l
            .norm()
            .max(psi_r.norm())
            .max(dpsi_l.norm() / k_scale)
            .max(dpsi_r.norm() / k_scale)
            .max(1e-300);
        let res = ((psi_l - psi_r).norm()).max((dpsi_l - dpsi_r).norm() / k_scale) / scale;
        worst = worst.max(res);
    }
    worst
}

/// One row of an energy sweep. Failed energies are flagged, never
/// aborting the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub energy: f64,
    pub outcome: std::result::Result<SweepPoint, Error>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub result: TransmissionResult,
    pub residual: f64,
}

/// Solve on `n` uniformly spaced energies in [e_min, e_max], ascending.
pub fn sweep(profile: &PotentialProfile, e_min: f64, e_max: f64, n: usize) -> Result<Vec<SweepRow>> {
    ensure_finite("e_min", e_min)?;
    ensure_finite("e_max", e_max)?;
    if e_min <= profile.lead_height {
        return Err(Error::Domain {
            name: "e_min",
            value: e_min,
            constraint: "must exceed the lead height",
        });
    }
    if e_max <= e_min {
        return Err(Error::Domain {
            name: "e_max",
            value: e_max,
            constraint: "must be > e_min",
        });
    }
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            constraint: "must be >= 2",
        });
    }
    let step = (e_max - e_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let energy = if i == n - 1 { e_max } else { e_min + i as f64 * step };
            let outcome = solve(profile, energy).map(|(result, coeffs)| SweepPoint {
                result,
                residual: coeffs.residual,
            });
            SweepRow { energy, outcome }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mass(r: f64) -> EffectiveMass {
        EffectiveMass::new(r).unwrap()
    }

    fn single(v0: f64, d: f64, r: f64) -> PotentialProfile {
        PotentialProfile::new(vec![Segment { width: d, height: v0 }], 0.0, mass(r)).unwrap()
    }

    #[test]
    fn free_profile_is_transparent() {
        let p = PotentialProfile::free(mass(1.0));
        for e in [0.1, 1.0, 7.3] {
            let (res, coeffs) = solve(&p, e).unwrap();
            assert_relative_eq!(res.t_prob, 1.0, max_relative = 1e-14);
            assert!(res.r_prob <= 1e-28);
            assert_relative_eq!(coeffs.regions[0].forward.re, 1.0, max_relative = 1e-14);
            assert!(coeffs.regions[0].backward.norm() <= 1e-14);
            assert!(coeffs.residual <= 1e-12);
        }
    }

    #[test]
    fn single_segment_matches_closed_form() {
        for (e, v0, d, r) in [
            (1.5, 3.1, 1.0, 1.0),
            (1.5, 3.1, 1.0, 0.07),
            (5.0, 3.1, 1.0, 0.07),
            (1.3760301626167375, 1.0, 1.0, 1.0), // resonance
            (3.1, 3.1, 1.0, 1.0),                // seam energy
        ] {
            let b = RectangularBarrier::new(v0, d, mass(r)).unwrap();
            let exact = barrier::transmission(e, &b).unwrap();
            let (res, coeffs) = solve(&single(v0, d, r), e).unwrap();
            assert_relative_eq!(res.t_prob, exact.t_prob, max_relative = 1e-10);
            assert!((res.t_amp - exact.t_amp).norm() <= 1e-10 * exact.t_amp.norm().max(1e-15));
            assert!((res.r_amp - exact.r_amp).norm() <= 1e-10);
            assert!(coeffs.residual <= 1e-10, "residual {}", coeffs.residual);
        }
    }

    #[test]
    fn global_pairs_reproduce_lead_waves() {
        // left lead pair must be (1, r); right lead pair (t_global, 0)
        let (res, coeffs) = solve(&single(3.1, 1.0, 0.07), 1.5).unwrap();
        let (a, b) = coeffs.regions[0].global_pair();
        assert!((a - Complex64::ONE).norm() <= 1e-12);
        assert!((b - res.r_amp).norm() <= 1e-12);
        let (t, zero) = coeffs.regions.last().unwrap().global_pair();
        assert!((t - res.t_amp).norm() <= 1e-12);
        assert!(zero.norm() == 0.0);
        // inside an opaque barrier the forward (decaying) part dominates
        let inner = &coeffs.regions[1];
        assert!(matches!(inner.wave, RegionWave::Evanescent { .. }));
        assert!(inner.psi_at(0.0).norm() > inner.psi_at(1.0).norm());
    }

    #[test]
    fn double_barrier_has_sharp_resonance() {
        let p = PotentialProfile::new(
            vec![
                Segment { width: 0.5, height: 3.1 },
                Segment { width: 1.0, height: 0.0 },
                Segment { width: 0.5, height: 3.1 },
            ],
            0.0,
            mass(0.07),
        )
        .unwrap();
        let rows = sweep(&p, 1.40, 1.47, 400).unwrap();
        let (best_e, best_t) = rows
            .iter()
            .map(|r| (r.energy, r.outcome.as_ref().unwrap().result.t_prob))
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(best_t > 0.999, "peak T {best_t} at {best_e}");
        assert!((1.42..=1.45).contains(&best_e), "peak at {best_e}");
        // off resonance the double barrier is nearly opaque
        let off = solve(&p, 0.8).unwrap().0.t_prob;
        assert!(off < 0.05);
    }

    #[test]
    fn sweep_basics() {
        let p = single(3.1, 1.0, 0.07);
        let rows = sweep(&p, 0.1, 6.0, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].energy, 0.1);
        assert_eq!(rows[1].energy, 6.0);

        // continuity through the barrier top on a dense sweep
        let rows = sweep(&p, 2.9, 3.3, 512).unwrap();
        let ts: Vec<f64> = rows
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().result.t_prob)
            .collect();
        for w in ts.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.01, "jump {} too large", w[1] - w[0]);
        }
        // T rises through the top
        assert!(ts[0] < ts[ts.len() - 1]);

        assert!(sweep(&p, 0.0, 1.0, 16).is_err());
        assert!(sweep(&p, 2.0, 1.0, 16).is_err());
        assert!(sweep(&p, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn unitarity_on_random_50_segment_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let segs: Vec<Segment> = (0..50)
                .map(|_| Segment {
                    width: rng.gen_range(0.02..0.6),
                    height: rng.gen_range(-2.0..6.0),
                })
                .collect();
            let p = PotentialProfile::new(segs, 0.0, mass(rng.gen_range(0.05..1.0))).unwrap();
            let e = rng.gen_range(0.05..8.0);
            let (res, coeffs) = solve(&p, e).unwrap();
            assert!(
                (res.t_prob + res.r_prob - 1.0).abs() <= 1e-10,
                "flux violation {} at E={e}",
                res.t_prob + res.r_prob - 1.0
            );
            assert!(coeffs.residual <= 1e-9, "residual {}", coeffs.residual);
        }
    }

    #[test]
    fn reciprocity_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..6);
            let segs: Vec<Segment> = (0..n)
                .map(|_| Segment {
                    width: rng.gen_range(0.05..2.0),
                    height: rng.gen_range(-1.0..6.0),
                })
                .collect();
            let r = rng.gen_range(0.05..1.0);
            let e = rng.gen_range(0.05..8.0);
            let p = PotentialProfile::new(segs.clone(), 0.0, mass(r)).unwrap();
            let t = solve(&p, e).unwrap().0.t_prob;

            // reversed order leaves T unchanged
            let rev: Vec<Segment> = segs.iter().rev().copied().collect();
            let p_rev = PotentialProfile::new(rev, 0.0, mass(r)).unwrap();
            let t_rev = solve(&p_rev, e).unwrap().0.t_prob;
            assert!(
                (t - t_rev).abs() <= 1e-10 * t.max(1e-30),
                "reciprocity broken: {t} vs {t_rev}"
            );

            // splitting one segment in two leaves T unchanged
            let split_at = rng.gen_range(0..segs.len());
            let mut split = Vec::new();
            for (i, s) in segs.iter().enumerate() {
                if i == split_at {
                    let f = rng.gen_range(0.2..0.8);
                    split.push(Segment { width: s.width * f, height: s.height });
                    split.push(Segment { width: s.width * (1.0 - f), height: s.height });
                } else {
                    split.push(*s);
                }
            }
            let p_split = PotentialProfile::new(split, 0.0, mass(r)).unwrap();
            let t_split = solve(&p_split, e).unwrap().0.t_prob;
            assert!(
                (t - t_split).abs() <= 1e-10 * t.max(1e-30),
                "split changed T: {t} vs {t_split}"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = single(3.1, 1.0, 1.0);
        assert!(solve(&p, 0.0).is_err());
        assert!(solve(&p, -1.0).is_err());
        assert!(solve(&p, f64::NAN).is_err());
        assert!(
            PotentialProfile::new(vec![Segment { width: 0.0, height: 1.0 }], 0.0, mass(1.0))
                .is_err()
        );
        assert!(PotentialProfile::new(vec![], f64::INFINITY, mass(1.0)).is_err());
        let raised = PotentialProfile::new(vec![], 0.5, mass(1.0)).unwrap();
        assert!(solve(&raised, 0.4).is_err());
        assert!(solve(&raised, 0.6).is_ok());
    }

    #[test]
    fn potential_lookup() {
        let p = PotentialProfile::new(
            vec![
                Segment { width: 1.0, height: 2.0 },
                Segment { width: 0.5, height: -1.0 },
            ],
            0.25,
            mass(1.0),
        )
        .unwrap();
        assert_eq!(p.potential_at(-3.0), 0.25);
        assert_eq!(p.potential_at(0.5), 2.0);
        assert_eq!(p.potential_at(1.2), -1.0);
        assert_eq!(p.potential_at(1.5), 0.25);
        assert_eq!(p.total_width(), 1.5);
        assert_eq!(p.max_height(), Some(2.0));
    }
}
