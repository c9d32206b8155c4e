//! Exponential-stability certificates and the explicit constants behind them.
//!
//! A certificate `(N, nu)` asserts `||X(t)|| <= N exp(-nu t)` (kind
//! [`CertificateKind::Fundamental`]) or `||C(t, s)|| <= N exp(-nu (t - s))`
//! (kind [`CertificateKind::Evolution`]). Certificates derived from the
//! uniform-boundedness constant `k` use the closed-form constants below;
//! empirical ones come from a log-linear fit. Every certificate can be checked
//! against sampled data with the `*_dominance` functions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{inverse_at, FundamentalSolution, NonImpulsiveEvolution};
use crate::integrator::{integrate, LinearField, Trajectory};
use crate::linalg::{mat_norm, vec_norm};
use crate::model::{hypothesis_bounds, integral_of_norm, ImpulsiveSystem};

/// Relative slack allowed when checking that a certificate dominates data.
pub const DOMINANCE_SLACK: f64 = 1e-6;

/// Products of jump norms above this are treated as unbounded.
pub const PRODUCT_CEILING: f64 = 1e12;

/// Jump products below this are treated as zero.
pub const PRODUCT_FLOOR: f64 = 1e-12;

/// Commutator residual below which jumps and `G` are taken to commute.
pub const COMMUTATOR_TOL: f64 = 1e-8;

/// Gap below which `|nu rho - lambda|` or `|nu - lambda|` counts as resonant.
const RESONANCE_GAP: f64 = 1e-9;
const RESONANCE_SHIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// `||X(t)|| <= N exp(-nu t)`.
    Fundamental,
    /// `||C(t, s)|| <= N exp(-nu (t - s))`.
    Evolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// From `k`, `sigma` and `||X(tau_1)||`.
    UniformBoundFundamental,
    /// From `k`, `sigma`, `nu`, `b` and `M`.
    UniformBoundEvolution,
    /// Log-linear least-squares fit of sampled norms.
    EmpiricalFit,
    /// Impulsive certificate divided by the jump-product floor.
    ImpulsiveToContinuous,
    /// Jump-free certificate times the jump-product ceiling.
    ContinuousToImpulsive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub kind: CertificateKind,
    #[serde(rename = "N")]
    pub n: f64,
    pub nu: f64,
    pub provenance: Provenance,
    #[serde(default)]
    pub inputs: BTreeMap<String, f64>,
}

impl StabilityCertificate {
    pub fn new(
        kind: CertificateKind,
        n: f64,
        nu: f64,
        provenance: Provenance,
        inputs: &[(&str, f64)],
    ) -> Result<Self> {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::invalid(format!("certificate needs finite N >= 1, got {n}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("certificate needs nu > 0, got {nu}")));
        }
        Ok(Self {
            kind,
            n,
            nu,
            provenance,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        })
    }

    /// `N exp(-nu dt)`.
    pub fn envelope(&self, dt: f64) -> f64 {
        self.n * (-self.nu * dt).exp()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cert: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("certificate: {e}")))?;
        Self::new(cert.kind, cert.n, cert.nu, cert.provenance, &[])
            .map(|c| Self { inputs: cert.inputs, ..c })
    }
}

/// `(e^M, b e^M)`: interval and across-jump bounds on `||C(t, tau_p)||`.
pub fn gronwall_bounds(m: f64, b: f64) -> Result<(f64, f64)> {
    if !(m >= 0.0) || !(b > 0.0) {
        return Err(Error::invalid(format!("gronwall bounds need M >= 0, b > 0 (got {m}, {b})")));
    }
    let interior = m.exp();
    Ok((interior, b * interior))
}

/// `nu = ln(k / (k - 1)) / sigma` and
/// `N = max(||X(tau_1)|| k^4 / (k - 1)^2, sup_{[0, tau_1)} e^{nu t} ||X(t)||)`.
///
/// The second argument of the max is supplied by the caller because it
/// depends on `nu`; see [`fundamental_nu`].
pub fn fundamental_constants(
    k: f64,
    sigma: f64,
    x_tau1_norm: f64,
    pre_tau1_sup: f64,
) -> Result<StabilityCertificate> {
    let nu = fundamental_nu(k, sigma)?;
    let n1 = x_tau1_norm * k.powi(4) / (k - 1.0).powi(2);
    StabilityCertificate::new(
        CertificateKind::Fundamental,
        n1.max(pre_tau1_sup).max(1.0),
        nu,
        Provenance::UniformBoundFundamental,
        &[("k", k), ("sigma", sigma), ("x_tau1_norm", x_tau1_norm), ("pre_tau1_sup", pre_tau1_sup)],
    )
}

/// `ln(k / (k - 1)) / sigma`.
pub fn fundamental_nu(k: f64, sigma: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::invalid(format!("uniform bound k must exceed 1, got {k}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok((k / (k - 1.0)).ln() / sigma)
}

/// `N = N2^2` with `N2 = max(b e^M k^4/(k-1)^2, b e^{nu sigma + M}, e^{nu sigma + M})`.
pub fn evolution_constant(
    k: f64,
    sigma: f64,
    nu: f64,
    b: f64,
    m: f64,
) -> Result<StabilityCertificate> {
    if !(k > 1.0) {
        return Err(Error::invalid(format!("uniform bound k must exceed 1, got {k}")));
    }
    if !(sigma > 0.0 && nu > 0.0 && b > 0.0 && m >= 0.0) {
        return Err(Error::invalid(format!(
            "need sigma, nu, b > 0 and M >= 0 (got sigma={sigma}, nu={nu}, b={b}, M={m})"
        )));
    }
    let n2 = evolution_n2(k, sigma, nu, b, m);
    StabilityCertificate::new(
        CertificateKind::Evolution,
        n2 * n2,
        nu,
        Provenance::UniformBoundEvolution,
        &[("k", k), ("sigma", sigma), ("b", b), ("M", m), ("N2", n2)],
    )
}

pub(crate) fn evolution_n2(k: f64, sigma: f64, nu: f64, b: f64, m: f64) -> f64 {
    let grow = (nu * sigma + m).exp();
    (b * m.exp() * k.powi(4) / (k - 1.0).powi(2)).max(b * grow).max(grow)
}

/// `N ||x(0)|| + N sup||alpha|| / (1 - e^{-nu rho}) + (N / nu) sup||f||`.
pub fn response_bound(
    cert: &StabilityCertificate,
    rho: f64,
    x0_norm: f64,
    alpha_sup: f64,
    f_sup: f64,
) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let n = cert.n;
    Ok(n * x0_norm + n * alpha_sup / (1.0 - (-cert.nu * rho).exp()) + n / cert.nu * f_sup)
}

/// `||alpha_n|| <= N1 e^{-lambda n}` and `||f(t)|| <= N1 e^{-lambda t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayingForcingSpec {
    pub n1: f64,
    pub lambda: f64,
}

impl DecayingForcingSpec {
    /// Checks the envelope on jump offsets `alphas[n-1]` and on `(t, ||f(t)||)` samples.
    pub fn holds_on(&self, alphas: &[nalgebra::DVector<f64>], f_norms: &[(f64, f64)]) -> bool {
        let tol = 1.0 + DOMINANCE_SLACK;
        alphas
            .iter()
            .enumerate()
            .all(|(i, a)| vec_norm(a) <= self.n1 * (-self.lambda * (i + 1) as f64).exp() * tol)
            && f_norms.iter().all(|&(t, v)| v <= self.n1 * (-self.lambda * t).exp() * tol)
    }
}

/// Envelope `||x(t)|| <= N0 exp(-nu0 t)` for exponentially decaying forcing,
/// with the per-term constants it aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub n0: f64,
    pub nu0: f64,
    /// Jump-offset term.
    pub n2: f64,
    pub nu2: f64,
    /// Continuous-forcing (convolution) term.
    pub n3: f64,
    pub nu3: f64,
    /// Decay rate actually used after any resonance shift.
    pub lambda: f64,
}

/// Aggregates the homogeneous, jump-offset and convolution envelopes.
///
/// Jump offsets: `N2 = N N1 e^{nu rho} / (e^{|nu rho - lambda|} - 1)` with
/// `nu2 = lambda / sigma`. Continuous forcing: `N3 = N N1 / |nu - lambda|`,
/// `nu3 = min(nu, lambda)`. Resonant `lambda` is shifted by `1e-6`.
pub fn decay_transfer(
    cert: &StabilityCertificate,
    rho: f64,
    sigma: f64,
    spec: &DecayingForcingSpec,
) -> Result<DecayEnvelope> {
    if !(rho > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("rho and sigma must be positive"));
    }
    if !(spec.n1 >= 0.0 && spec.lambda > 0.0) {
        return Err(Error::invalid("decaying forcing needs N1 >= 0 and lambda > 0"));
    }
    let (n, nu) = (cert.n, cert.nu);
    let mut lambda = spec.lambda;
    for _ in 0..4 {
        if (nu * rho - lambda).abs() <= RESONANCE_GAP || (nu - lambda).abs() <= RESONANCE_GAP {
            lambda += RESONANCE_SHIFT;
        }
    }
    let nu2 = lambda / sigma;
    let n2 = n * spec.n1 * (nu * rho).exp() / ((nu * rho - lambda).abs().exp() - 1.0);
    let nu3 = nu.min(lambda);
    let n3 = n * spec.n1 / (nu - lambda).abs();
    Ok(DecayEnvelope {
        n0: n.max(n2).max(n3),
        nu0: nu.min(nu2).min(nu3),
        n2,
        nu2,
        n3,
        nu3,
        lambda,
    })
}

/// Least-squares fit of `ln ||.||` against `t` over the second half of the
/// sampled range. Returns `(nu_hat, N_hat)` with `nu_hat = -slope` and
/// `N_hat = sup ||.|| e^{nu_hat t}` over all samples.
pub fn estimate_decay_rate(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::invalid(format!("need at least 10 samples, got {}", samples.len())));
    }
    let horizon = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let window: Vec<_> = samples.iter().filter(|s| s.0 >= 0.5 * horizon).collect();
    if let Some(&&(t, _)) = window.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::RateUndefined { time: t });
    }
    let count = window.len() as f64;
    let mean_t = window.iter().map(|s| s.0).sum::<f64>() / count;
    let mean_y = window.iter().map(|s| s.1.ln()).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &&(t, v) in &window {
        sxy += (t - mean_t) * (v.ln() - mean_y);
        sxx += (t - mean_t) * (t - mean_t);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("fit window needs at least two distinct times"));
    }
    let nu_hat = -sxy / sxx;
    let n_hat = samples.iter().map(|&(t, v)| v * (nu_hat * t).exp()).fold(0.0, f64::max);
    Ok((nu_hat, n_hat))
}

/// Fundamental certificate from a log-linear fit.
pub fn empirical_certificate(samples: &[(f64, f64)]) -> Result<StabilityCertificate> {
    let (nu, n) = estimate_decay_rate(samples)?;
    if !(nu > 0.0) {
        return Err(Error::HypothesisViolated(format!("fitted decay rate {nu} is not positive")));
    }
    StabilityCertificate::new(CertificateKind::Fundamental, n.max(1.0), nu, Provenance::EmpiricalFit, &[])
}

/// `sup ||x(t)||` over samples with `t >= t_min`, including pre-jump values at
/// impulse times after `t_min`.
pub fn tail_sup(trajectory: &Trajectory, t_min: f64) -> f64 {
    let post = trajectory
        .samples
        .iter()
        .filter(|(t, _)| *t >= t_min)
        .map(|(_, x)| vec_norm(x));
    let pre = trajectory
        .jumps
        .iter()
        .filter(|j| j.time > t_min)
        .map(|j| vec_norm(&j.pre));
    post.chain(pre).fold(0.0, f64::max)
}

/// Largest observed `||.|| e^{nu t} / N` and whether it stays within slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub max_ratio: f64,
    pub worst_t: f64,
    pub worst_s: f64,
    pub pass: bool,
}

impl DominanceReport {
    fn from_ratios(it: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let (mut max_ratio, mut worst_t, mut worst_s) = (0.0f64, 0.0, 0.0);
        for (t, s, r) in it {
            if !(r <= max_ratio) {
                (max_ratio, worst_t, worst_s) = (r, t, s);
            }
        }
        Self { max_ratio, worst_t, worst_s, pass: max_ratio <= 1.0 + DOMINANCE_SLACK }
    }
}

/// `||v(t)|| <= scale N e^{-nu t}` on `(t, ||v(t)||)` samples.
pub fn check_dominance(
    cert: &StabilityCertificate,
    samples: &[(f64, f64)],
    scale: f64,
) -> DominanceReport {
    DominanceReport::from_ratios(
        samples
            .iter()
            .map(|&(t, v)| (t, 0.0, v / (scale * cert.envelope(t)))),
    )
}

/// Fundamental-kind dominance over every node of the construction pass,
/// including pre-jump values.
pub fn fundamental_dominance(
    cert: &StabilityCertificate,
    fundamental: &FundamentalSolution,
) -> DominanceReport {
    let samples: Vec<_> = fundamental.norm_samples().iter().map(|s| (s.t, s.norm)).collect();
    check_dominance(cert, &samples, 1.0)
}

/// Evolution-kind dominance on pairs `s <= t` drawn from a uniform grid with
/// the given spacing plus every impulse time (and its left limit).
pub fn evolution_dominance(
    cert: &StabilityCertificate,
    fundamental: &FundamentalSolution,
    spacing: f64,
) -> Result<DominanceReport> {
    let grid = evaluation_grid(fundamental, spacing)?;
    let inverses: Vec<Option<DMatrix<f64>>> = grid
        .iter()
        .map(|(t, x, left)| if *left { Ok(None) } else { inverse_at(x, *t).map(Some) })
        .collect::<Result<_>>()?;
    let mut ratios = Vec::new();
    for (j, (s, _, _)) in grid.iter().enumerate() {
        let Some(inv) = &inverses[j] else { continue };
        for (t, xt, _) in &grid[j..] {
            ratios.push((*t, *s, mat_norm(&(xt * inv)) / cert.envelope(t - s)));
        }
    }
    Ok(DominanceReport::from_ratios(ratios.into_iter()))
}

/// `(t, X(t), is_left_limit)` on a grid, left limits preceding impulse values.
fn evaluation_grid(
    fundamental: &FundamentalSolution,
    spacing: f64,
) -> Result<Vec<(f64, DMatrix<f64>, bool)>> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    let schedule = fundamental.system().schedule();
    let horizon = schedule.horizon();
    let steps = (horizon / spacing).ceil() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| (k as f64 * spacing).min(horizon)).collect();
    times.extend_from_slice(schedule.times());
    times.sort_by(f64::total_cmp);
    times.dedup();
    let values = fundamental.at_many(&times)?;
    let mut out = Vec::with_capacity(times.len() + schedule.len());
    for (t, x) in times.into_iter().zip(values) {
        let k = schedule.interval_index(t);
        if k > 0 && schedule.tau(k) == t {
            out.push((t, fundamental.pre_jump(k).clone(), true));
        }
        out.push((t, x, false));
    }
    Ok(out)
}

/// Largest `||C(t, tau_p)||` measured inside each interval and right after the
/// closing jump, against `e^M` and `b e^M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport {
    pub interior_bound: f64,
    pub jump_bound: f64,
    pub max_interior: f64,
    pub max_jump: f64,
}

impl GronwallReport {
    pub fn pass(&self) -> bool {
        self.max_interior <= self.interior_bound * (1.0 + DOMINANCE_SLACK)
            && self.max_jump <= self.jump_bound * (1.0 + DOMINANCE_SLACK)
    }
}

pub fn gronwall_check(system: &ImpulsiveSystem, h_max: f64) -> Result<GronwallReport> {
    let n = system.dimension();
    let schedule = system.schedule();
    // Computed directly rather than through `hypothesis_bounds` so that
    // impulse-free systems are covered too.
    let m = schedule
        .segments()
        .into_iter()
        .map(|(lo, hi)| integral_of_norm(system.coefficients(), lo, hi))
        .fold(0.0, f64::max);
    let b = system.jumps().bound();
    let (interior_bound, jump_bound) = gronwall_bounds(m, b.max(f64::MIN_POSITIVE))?;
    let field = LinearField::homogeneous(system.coefficients());
    let (mut max_interior, mut max_jump) = (0.0f64, 0.0f64);
    for (p, (lo, hi)) in schedule.segments().into_iter().enumerate() {
        let end = integrate(field, lo, hi, DMatrix::identity(n, n), h_max, |_, c| {
            max_interior = max_interior.max(mat_norm(c));
        })?;
        if p < schedule.len() {
            max_jump = max_jump.max(mat_norm(&(system.jumps().op(p + 1) * end)));
        }
    }
    Ok(GronwallReport { interior_bound, jump_bound, max_interior, max_jump })
}

/// Fundamental and evolution certificates obtained from a uniform-boundedness
/// constant `k` and the hypothesis bounds of `system`.
pub fn certify_from_k(
    fundamental: &FundamentalSolution,
    k: f64,
) -> Result<(StabilityCertificate, StabilityCertificate)> {
    let system = fundamental.system();
    let hb = hypothesis_bounds(system)?;
    let nu = fundamental_nu(k, hb.sigma)?;
    let tau1 = system.schedule().tau(1);
    let pre_sup = fundamental
        .norm_samples()
        .iter()
        .filter(|s| s.t < tau1 || (s.t == tau1 && s.pre_jump))
        .map(|s| s.norm * (nu * s.t).exp())
        .fold(0.0, f64::max);
    let x_tau1 = mat_norm(fundamental.post_jump(1));
    let fund = fundamental_constants(k, hb.sigma, x_tau1, pre_sup)?;
    let evo = evolution_constant(k, hb.sigma, nu, hb.b, hb.m)?;
    Ok((fund, evo))
}

/// Jump-product data for moving certificates between the impulsive equation
/// and the same equation without impulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferHypotheses {
    /// `min_{i <= j} |B_i ... B_j|` (scalar systems only).
    pub epsilon: Option<f64>,
    /// `max_{i <= j} ||B_i|| ... ||B_j||`, capped once it passes the ceiling.
    pub q: f64,
    pub products_bounded: bool,
    pub commuting: bool,
    pub commutator_residual: f64,
}

impl TransferHypotheses {
    /// Measures the hypotheses on every index pair of the schedule and on the
    /// commutators `B_i G(t, s) - G(t, s) B_i` with `G` sampled at impulse
    /// times and interval midpoints.
    pub fn measure(system: &ImpulsiveSystem, h_max: f64) -> Result<Self> {
        let jumps = system.jumps();
        let m = jumps.len();
        let epsilon = (system.dimension() == 1).then(|| {
            let mut lo = f64::INFINITY;
            for i in 1..=m {
                let mut p = 1.0f64;
                for j in i..=m {
                    p *= jumps.op(j)[(0, 0)];
                    lo = lo.min(p.abs());
                    if p == 0.0 {
                        break;
                    }
                }
            }
            lo
        });
        let norms: Vec<f64> = jumps.ops().iter().map(mat_norm).collect();
        let mut q = 0.0f64;
        'outer: for i in 0..m {
            let mut p = 1.0;
            for nrm in &norms[i..] {
                p *= nrm;
                q = q.max(p);
                if q > PRODUCT_CEILING {
                    break 'outer;
                }
            }
        }

        let mut commutator_residual = 0.0f64;
        if system.dimension() > 1 {
            let g = NonImpulsiveEvolution::new(system.coefficients().clone(), h_max);
            let mut times: Vec<f64> = system.schedule().segments().iter().map(|s| 0.5 * (s.0 + s.1)).collect();
            times.extend_from_slice(system.schedule().times());
            for t in times {
                let gt = g.at(t, 0.0)?;
                for b in jumps.ops() {
                    commutator_residual = commutator_residual.max(mat_norm(&(b * &gt - &gt * b)));
                }
            }
        }
        Ok(Self {
            epsilon,
            q,
            products_bounded: q <= PRODUCT_CEILING,
            commuting: commutator_residual < COMMUTATOR_TOL,
            commutator_residual,
        })
    }
}

/// Certificate for the scalar jump-free solution `U(t)`: `N = N_impulsive / epsilon`.
pub fn transfer_impulsive_to_continuous(
    hyp: &TransferHypotheses,
    impulsive: &StabilityCertificate,
) -> Result<StabilityCertificate> {
    let epsilon = hyp
        .epsilon
        .ok_or_else(|| Error::invalid("impulsive-to-continuous transfer is scalar only"))?;
    if !(epsilon > PRODUCT_FLOOR) {
        return Err(Error::HypothesisViolated(format!(
            "jump products are not bounded away from zero (min |prod B| = {epsilon:e})"
        )));
    }
    StabilityCertificate::new(
        impulsive.kind,
        (impulsive.n / epsilon).max(1.0),
        impulsive.nu,
        Provenance::ImpulsiveToContinuous,
        &[("epsilon", epsilon), ("N_impulsive", impulsive.n)],
    )
}

/// Certificate for the impulsive `X(t)`: `N = N_continuous * Q`.
pub fn transfer_continuous_to_impulsive(
    hyp: &TransferHypotheses,
    continuous: &StabilityCertificate,
) -> Result<StabilityCertificate> {
    if !hyp.commuting {
        return Err(Error::HypothesisViolated(format!(
            "jump operators do not commute with G (residual {:e})",
            hyp.commutator_residual
        )));
    }
    if !hyp.products_bounded {
        return Err(Error::HypothesisViolated(format!(
            "products of jump norms are unbounded (running max {:e})",
            hyp.q
        )));
    }
    StabilityCertificate::new(
        continuous.kind,
        (continuous.n * hyp.q).max(1.0),
        continuous.nu,
        Provenance::ContinuousToImpulsive,
        &[("Q", hyp.q), ("N_continuous", continuous.n)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn gronwall_examples() {
        let (i, j) = gronwall_bounds(3f64.ln(), 2.0).unwrap();
        assert!((i - 3.0).abs() < 1e-12 && (j - 6.0).abs() < 1e-12);
        assert_eq!(gronwall_bounds(0.0, 1.0).unwrap(), (1.0, 1.0));
        let (i, j) = gronwall_bounds(1.0, E).unwrap();
        assert!((i - E).abs() < 1e-12 && (j - E * E).abs() < 1e-12);
        assert!(gronwall_bounds(-1.0, 1.0).is_err());
    }

    #[test]
    fn fundamental_constants_examples() {
        let c = fundamental_constants(2.0, 1.0, 1.0, 0.0).unwrap();
        assert!((c.nu - LN_2).abs() < 1e-12);
        assert_eq!(c.n, 16.0);
        assert_eq!(c.kind, CertificateKind::Fundamental);
        let c = fundamental_constants(2.0, 2.0, 1.0, 0.0).unwrap();
        assert!((c.nu - 0.346574).abs() < 1e-6);
        let a = fundamental_nu(1.01, 1.0).unwrap();
        let b = fundamental_nu(1.001, 1.0).unwrap();
        assert!(b > a && a > fundamental_nu(2.0, 1.0).unwrap());
        assert!(matches!(fundamental_constants(1.0, 1.0, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(fundamental_constants(0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn nu_decreases_in_k_and_sigma() {
        let ks = [1.5, 2.0, 4.0, 8.0];
        let sigmas = [0.5, 1.0, 2.0];
        for &s in &sigmas {
            for w in ks.windows(2) {
                assert!(fundamental_nu(w[0], s).unwrap() > fundamental_nu(w[1], s).unwrap());
            }
        }
        for &k in &ks {
            for w in sigmas.windows(2) {
                assert!(fundamental_nu(k, w[0]).unwrap() > fundamental_nu(k, w[1]).unwrap());
            }
        }
    }

    #[test]
    fn evolution_constant_examples() {
        let c = evolution_constant(2.0, 1.0, LN_2, 1.0, 0.0).unwrap();
        assert!((c.inputs["N2"] - 16.0).abs() < 1e-12);
        assert!((c.n - 256.0).abs() < 1e-9);
        let c = evolution_constant(2.0, 1.0, LN_2, 3.0, 0.0).unwrap();
        assert!((c.inputs["N2"] - 48.0).abs() < 1e-12);
        assert!((c.n - 2304.0).abs() < 1e-8);
        assert!(evolution_constant(2.0, 1.0, LN_2, 0.0, 0.0).is_err());
        assert_eq!(c.kind, CertificateKind::Evolution);
    }

    fn cert(n: f64, nu: f64) -> StabilityCertificate {
        StabilityCertificate::new(CertificateKind::Evolution, n, nu, Provenance::EmpiricalFit, &[])
            .unwrap()
    }

    #[test]
    fn response_bound_examples() {
        let v = response_bound(&cert(1.0, 1.0), 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!((v - 1.581977).abs() < 1e-6);
        assert_eq!(response_bound(&cert(3.5, 0.2), 0.7, 1.0, 0.0, 0.0).unwrap(), 3.5);
        let v = response_bound(&cert(2.0, 0.5), 0.25, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 23.020828).abs() < 1e-5);
        assert!(response_bound(&cert(2.0, 0.5), 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn decay_transfer_examples() {
        let spec = DecayingForcingSpec { n1: 1.0, lambda: 1.0 };
        let env = decay_transfer(&cert(1.0, LN_2), 1.0, 1.0, &spec).unwrap();
        assert!((env.nu2 - 1.0).abs() < 1e-15);
        assert!((env.n2 - 5.5689).abs() < 1e-4);
        assert!((env.nu3 - LN_2).abs() < 1e-15);
        assert!((env.n3 - 3.2589).abs() < 1e-4);
        assert!((env.nu0 - LN_2).abs() < 1e-15);
        assert!((env.n0 - 5.5689).abs() < 1e-4);

        let fast = DecayingForcingSpec { n1: 1.0, lambda: 1e6 };
        let env = decay_transfer(&cert(1.0, 0.3), 1.0, 1.0, &fast).unwrap();
        assert_eq!(env.nu0, 0.3);

        let none = DecayingForcingSpec { n1: 0.0, lambda: 2.0 };
        let env = decay_transfer(&cert(4.0, 0.3), 1.0, 1.5, &none).unwrap();
        assert_eq!((env.n2, env.n3, env.n0), (0.0, 0.0, 4.0));
    }

    #[test]
    fn decay_transfer_resonance_shift() {
        let spec = DecayingForcingSpec { n1: 1.0, lambda: 0.5 };
        let env = decay_transfer(&cert(1.0, 0.5), 2.0, 2.0, &spec).unwrap();
        assert!(env.n3.is_finite() && env.n2.is_finite());
        assert!((env.lambda - 0.5).abs() <= 3e-6 && env.lambda != 0.5);
    }

    #[test]
    fn decay_rate_examples() {
        let exp: Vec<_> = (0..=1000).map(|k| {
            let t = k as f64 * 0.01;
            (t, (-2.0 * t).exp())
        }).collect();
        let (nu, n) = estimate_decay_rate(&exp).unwrap();
        assert!((nu - 2.0).abs() < 0.02);
        assert!((n - 1.0).abs() < 1e-6);
        let flat: Vec<_> = (0..20).map(|k| (k as f64, 3.0)).collect();
        assert!(estimate_decay_rate(&flat).unwrap().0.abs() < 1e-9);
        let mut zero = flat.clone();
        zero[15].1 = 0.0;
        assert!(matches!(estimate_decay_rate(&zero), Err(Error::RateUndefined { time }) if time == 15.0));
        assert!(estimate_decay_rate(&flat[..5]).is_err());
    }

    #[test]
    fn transfer_examples() {
        let imp = StabilityCertificate::new(CertificateKind::Fundamental, 2.0, 1.0, Provenance::EmpiricalFit, &[]).unwrap();
        let hyp = TransferHypotheses { epsilon: Some(1.0), q: 1.0, products_bounded: true, commuting: true, commutator_residual: 0.0 };
        let c = transfer_impulsive_to_continuous(&hyp, &imp).unwrap();
        assert_eq!((c.n, c.nu), (2.0, 1.0));
        assert_eq!(c.provenance, Provenance::ImpulsiveToContinuous);
        let c = transfer_continuous_to_impulsive(&hyp, &imp).unwrap();
        assert_eq!((c.n, c.nu, c.provenance), (2.0, 1.0, Provenance::ContinuousToImpulsive));

        let flat = TransferHypotheses { epsilon: Some(0.0), ..hyp };
        assert!(matches!(transfer_impulsive_to_continuous(&flat, &imp), Err(Error::HypothesisViolated(_))));
        let noncomm = TransferHypotheses { commuting: false, ..hyp };
        assert!(matches!(transfer_continuous_to_impulsive(&noncomm, &imp), Err(Error::HypothesisViolated(_))));
        let unbounded = TransferHypotheses { products_bounded: false, q: 2e12, ..hyp };
        assert!(matches!(transfer_continuous_to_impulsive(&unbounded, &imp), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn certificate_round_trip() {
        let c = fundamental_constants(2.0, 1.0, 0.5, 2.0).unwrap();
        let text = c.to_json();
        assert!(text.contains("\"N\":8"));
        assert!(text.contains("uniform-bound-fundamental"));
        assert_eq!(StabilityCertificate::from_json(&text).unwrap(), c);
        assert!(StabilityCertificate::from_json(r#"{"kind":"fundamental","N":0.5,"nu":1,"provenance":"empirical-fit"}"#).is_err());
    }
}
