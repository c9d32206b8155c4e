//! Constructive boundedness tests.
//!
//! For a scalar system, feeding the jump offsets `alpha_i = sign(B_1 ... B_i)`
//! with `x(0) = 0` makes every term `C(t, tau_i) alpha_i` of the response carry
//! the same sign, so the probe trajectory is the extremal response to unit
//! offsets. If it stays bounded, every bounded input gives a bounded solution.
//! The verdict is necessarily relative to the simulated horizon.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{solve_ivp, Trajectory, DEFAULT_H_MAX};
use crate::linalg::vec_norm;
use crate::model::{CoefficientOperator, Forcing, ImpulseSchedule, ImpulsiveSystem, JumpSequence};

/// Window-over-window growth above this factor counts as growth.
pub const GROWTH_THRESHOLD: f64 = 1.0 + 1e-3;
/// Consecutive growing windows needed for [`Verdict::GrowthDetected`].
pub const GROWTH_WINDOWS: usize = 3;
/// Window length in units of the largest impulse gap.
pub const WINDOW_GAPS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    BoundedUpTo,
    GrowthDetected,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeVerdict {
    pub verdict: Verdict,
    /// Observed `sup |x(t)|` over the horizon.
    pub q_hat: f64,
    /// Largest ratio of a window's sup to the previous window's sup.
    pub growth_ratio: f64,
    pub horizon: f64,
    /// Set when the probe overflowed before reaching the horizon.
    pub overflow_time: Option<f64>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// `alpha_i = sign(B_1 B_2 ... B_i)`, tracked by sign only.
pub fn sign_sequence(system: &ImpulsiveSystem) -> Result<Vec<f64>> {
    require_scalar(system)?;
    let mut sign = 1.0;
    system
        .jumps()
        .ops()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let b = b[(0, 0)];
            if b == 0.0 {
                return Err(Error::invalid(format!("B_{} is zero; sign undefined", i + 1)));
            }
            sign *= b.signum();
            Ok(sign)
        })
        .collect()
}

/// Simulates the sign probe from `x(0) = 0` and classifies its growth.
pub fn scalar_probe(system: &ImpulsiveSystem, h_max: f64) -> Result<ProbeVerdict> {
    let signs = sign_sequence(system)?;
    let alphas = signs.iter().map(|&s| DVector::from_element(1, s)).collect();
    let forcing = Forcing::new(1, None, alphas, system.horizon())?;
    let horizon = system.horizon();
    let trajectory = match solve_ivp(system, &forcing, &DVector::zeros(1), h_max) {
        Ok(tr) => tr,
        Err(e) => {
            return match e.root() {
                Error::NumericalOverflow { time } => Ok(ProbeVerdict {
                    verdict: Verdict::GrowthDetected,
                    q_hat: f64::INFINITY,
                    growth_ratio: f64::INFINITY,
                    horizon,
                    overflow_time: Some(*time),
                    trajectory: None,
                }),
                _ => Err(e),
            }
        }
    };

    let norms = trajectory.norms_with_pre_jump();
    let q_hat = norms.iter().map(|s| s.1).fold(0.0, f64::max);
    let window = WINDOW_GAPS * system.schedule().max_gap().unwrap_or(horizon);
    let (growth_ratio, streak) = window_growth(&norms, window, horizon);
    let verdict = if streak >= GROWTH_WINDOWS {
        Verdict::GrowthDetected
    } else {
        Verdict::BoundedUpTo
    };
    Ok(ProbeVerdict {
        verdict,
        q_hat,
        growth_ratio,
        horizon,
        overflow_time: None,
        trajectory: Some(trajectory),
    })
}

/// Returns the largest window-over-window ratio and the longest run of
/// consecutive ratios above [`GROWTH_THRESHOLD`].
fn window_growth(norms: &[(f64, f64)], window: f64, horizon: f64) -> (f64, usize) {
    let count = ((horizon / window).ceil() as usize).max(1);
    let mut sups = vec![0.0f64; count];
    for &(t, v) in norms {
        let w = ((t / window).floor() as usize).min(count - 1);
        sups[w] = sups[w].max(v);
    }
    let mut best = 1.0f64;
    let (mut run, mut longest) = (0, 0);
    for pair in sups.windows(2) {
        let ratio = match (pair[0], pair[1]) {
            (p, c) if p > 0.0 => c / p,
            (_, c) if c > 0.0 => f64::INFINITY,
            _ => 1.0,
        };
        best = best.max(ratio);
        if ratio > GROWTH_THRESHOLD {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    (best, longest)
}

/// Empirical uniform-boundedness constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KEstimate {
    /// Max over trials of `sup ||x(t)||` on the full horizon.
    pub k_hat: f64,
    /// Same statistic restricted to the first half of the horizon.
    pub k_half_horizon: f64,
    pub trials: usize,
    pub seed: u64,
    pub horizon: f64,
    /// True when `k_hat` still grows with the horizon (no finite `k` in sight).
    pub horizon_sensitive: bool,
}

/// Max over `trials` random sign-vector offset sequences of the response sup
/// from `x(0) = 0`. Scalar systems also run the deterministic sign probe,
/// which dominates every other sign choice.
pub fn probe_k_estimate(system: &ImpulsiveSystem, trials: usize, seed: u64) -> Result<KEstimate> {
    if trials == 0 {
        return Err(Error::invalid("probe_k_estimate needs at least one trial"));
    }
    let n = system.dimension();
    let m = system.schedule().len();
    let horizon = system.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut offsets: Vec<Vec<DVector<f64>>> = Vec::with_capacity(trials + 1);
    if n == 1 && system.jumps().ops().iter().all(|b| b[(0, 0)] != 0.0) {
        let signs = sign_sequence(system)?;
        offsets.push(signs.into_iter().map(|s| DVector::from_element(1, s)).collect());
    }
    for _ in 0..trials {
        offsets.push(
            (0..m)
                .map(|_| DVector::from_fn(n, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 }))
                .collect(),
        );
    }

    let (mut k_hat, mut k_half) = (0.0f64, 0.0f64);
    for alphas in offsets {
        let forcing = Forcing::new(n, None, alphas, horizon)?;
        match solve_ivp(system, &forcing, &DVector::zeros(n), DEFAULT_H_MAX) {
            Ok(tr) => {
                for (t, v) in tr.norms_with_pre_jump() {
                    k_hat = k_hat.max(v);
                    if t <= 0.5 * horizon {
                        k_half = k_half.max(v);
                    }
                }
            }
            Err(e) if matches!(e.root(), Error::NumericalOverflow { .. }) => {
                k_hat = f64::INFINITY;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(KEstimate {
        k_hat,
        k_half_horizon: k_half,
        trials,
        seed,
        horizon,
        horizon_sensitive: !(k_hat <= k_half * GROWTH_THRESHOLD),
    })
}

/// Jump layer equivalent to forcing by `sum_i alpha_i delta(t - eta i)`:
/// uniform schedule, identity jumps, the offsets as jump offsets, `f = 0`.
#[derive(Debug, Clone)]
pub struct DeltaLayer {
    pub schedule: ImpulseSchedule,
    pub jumps: JumpSequence,
    pub forcing: Forcing,
}

impl DeltaLayer {
    pub fn system(&self, coefficients: CoefficientOperator) -> Result<ImpulsiveSystem> {
        ImpulsiveSystem::new(coefficients, self.jumps.clone(), self.schedule.clone())
    }
}

pub fn delta_to_jumps(eta: f64, alphas: &[DVector<f64>], horizon: f64) -> Result<DeltaLayer> {
    let schedule = ImpulseSchedule::uniform(eta, horizon)?;
    if alphas.len() != schedule.len() {
        return Err(Error::invalid(format!(
            "{} delta weights for {} impulse times",
            alphas.len(),
            schedule.len()
        )));
    }
    let n = alphas[0].len();
    let jumps = JumpSequence::new(vec![DMatrix::identity(n, n); schedule.len()], n)?;
    let forcing = Forcing::new(n, None, alphas.to_vec(), horizon)?;
    Ok(DeltaLayer { schedule, jumps, forcing })
}

/// `sum_{0 < tau_i <= t} |C(t, tau_i)|` at each sampled `t`, computed from the
/// jump products and the scalar flow factor. Used to check that a bounded
/// probe certifies the absolute sum.
pub fn scalar_response_sum(system: &ImpulsiveSystem, times: &[f64]) -> Result<Vec<f64>> {
    require_scalar(system)?;
    let fundamental = crate::evolution::FundamentalSolution::build(system, DEFAULT_H_MAX)?;
    let schedule = system.schedule();
    times
        .iter()
        .map(|&t| {
            let xt = fundamental.at(t)?[(0, 0)];
            let count = schedule.interval_index(t);
            Ok((1..=count)
                .map(|i| (xt / fundamental.post_jump(i)[(0, 0)]).abs())
                .sum())
        })
        .collect()
}

fn require_scalar(system: &ImpulsiveSystem) -> Result<()> {
    if system.dimension() != 1 {
        return Err(Error::invalid(format!(
            "scalar probe needs dimension 1, got {}",
            system.dimension()
        )));
    }
    Ok(())
}

/// Sup norm helper for callers holding a trajectory.
pub fn sup_norm(trajectory: &Trajectory) -> f64 {
    trajectory
        .samples
        .iter()
        .map(|(_, x)| vec_norm(x))
        .chain(trajectory.jumps.iter().map(|j| vec_norm(&j.pre)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn unit_gap(a: f64, bs: &[f64]) -> ImpulsiveSystem {
        let s = ImpulseSchedule::uniform(1.0, bs.len() as f64).unwrap();
        ImpulsiveSystem::new(CoefficientOperator::scalar(a), JumpSequence::scalars(bs), s).unwrap()
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign_sequence(&unit_gap(0.0, &[0.5; 4])).unwrap(), vec![1.0; 4]);
        assert_eq!(
            sign_sequence(&unit_gap(0.0, &[-0.5; 4])).unwrap(),
            vec![-1.0, 1.0, -1.0, 1.0]
        );
        assert_eq!(
            sign_sequence(&unit_gap(0.0, &[2.0, -1.0, -3.0])).unwrap(),
            vec![1.0, -1.0, 1.0]
        );
        assert!(sign_sequence(&unit_gap(0.0, &[1.0, 0.0])).is_err());
    }

    #[test]
    fn signs_match_fundamental_signs() {
        let sys = unit_gap(0.7, &[-0.5, 2.0, -3.0, -0.1, 4.0]);
        let fs = crate::evolution::FundamentalSolution::build(&sys, 1e-3).unwrap();
        for (i, s) in sign_sequence(&sys).unwrap().into_iter().enumerate() {
            assert_eq!(s, fs.post_jump(i + 1)[(0, 0)].signum());
        }
    }

    #[test]
    fn probe_examples() {
        let v = scalar_probe(&unit_gap(0.0, &[0.5; 40]), 1e-3).unwrap();
        assert_eq!(v.verdict, Verdict::BoundedUpTo);
        assert!((v.q_hat - 2.0).abs() < 1e-6);

        let v = scalar_probe(&unit_gap(1.0, &[E; 40]), 1e-3).unwrap();
        assert_eq!(v.verdict, Verdict::GrowthDetected);
        let tr = v.trajectory.unwrap();
        for j in &tr.jumps {
            assert!((j.post[0] - j.index as f64).abs() < 1e-6);
        }

        let sys = ImpulsiveSystem::new(
            CoefficientOperator::zero(1),
            JumpSequence::scalars(&[]),
            ImpulseSchedule::empty(5.0).unwrap(),
        )
        .unwrap();
        let v = scalar_probe(&sys, 1e-3).unwrap();
        assert_eq!((v.verdict, v.q_hat), (Verdict::BoundedUpTo, 0.0));
    }

    #[test]
    fn probe_overflow_is_growth() {
        let v = scalar_probe(&unit_gap(-400.0, &[1.0; 5]), 1e-2).unwrap();
        assert_eq!(v.verdict, Verdict::GrowthDetected);
        assert!(v.overflow_time.is_some());
    }

    #[test]
    fn window_growth_counts_streaks() {
        let linear: Vec<_> = (0..=40).map(|k| (k as f64, k as f64)).collect();
        let (ratio, streak) = window_growth(&linear, 10.0, 40.0);
        assert!(ratio > 1.3);
        assert_eq!(streak, 3);
        let flat: Vec<_> = (0..=40).map(|k| (k as f64, 1.0)).collect();
        assert_eq!(window_growth(&flat, 10.0, 40.0), (1.0, 0));
    }

    #[test]
    fn k_estimate_scalar_matches_probe() {
        let sys = unit_gap(0.0, &[0.5; 30]);
        let k = probe_k_estimate(&sys, 4, 7).unwrap();
        let q = scalar_probe(&sys, DEFAULT_H_MAX).unwrap().q_hat;
        assert_eq!(k.k_hat, q);
        assert!(!k.horizon_sensitive);
        assert!(probe_k_estimate(&sys, 0, 7).is_err());
    }

    #[test]
    fn k_estimate_zero_jumps_is_finite() {
        let sys = unit_gap(0.3, &[0.0; 10]);
        let k = probe_k_estimate(&sys, 8, 1).unwrap();
        assert!((k.k_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_estimate_flags_growth() {
        let k = probe_k_estimate(&unit_gap(1.0, &[E; 40]), 2, 3).unwrap();
        assert!(k.horizon_sensitive);
        assert!((k.k_hat - 40.0).abs() < 1e-5);
    }

    #[test]
    fn delta_layer_staircase() {
        let c = 0.75;
        let alphas = vec![DVector::from_element(1, c); 5];
        let layer = delta_to_jumps(1.0, &alphas, 5.0).unwrap();
        let sys = layer.system(CoefficientOperator::zero(1)).unwrap();
        let tr = solve_ivp(&sys, &layer.forcing, &DVector::zeros(1), 1e-2).unwrap();
        for (t, x) in &tr.samples {
            assert!((x[0] - c * t.floor()).abs() < 1e-12, "t = {t}");
        }
        assert!(delta_to_jumps(0.0, &alphas, 5.0).is_err());
        assert!(delta_to_jumps(1.0, &alphas[..3], 5.0).is_err());
    }
}
