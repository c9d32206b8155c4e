//! Fundamental matrix `X(t)`, evolution operator `C(t, s)`, and the
//! construction of `C` from the jump-free evolution operator `G(t, s)`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, LinearField, DEFAULT_H_MAX};
use crate::linalg::{checked_inverse, mat_norm};
use crate::model::{CoefficientOperator, ImpulseSchedule, ImpulsiveSystem, JumpSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub pre: DMatrix<f64>,
    pub post: DMatrix<f64>,
}

/// `||X(t)||` at an integration node. At impulse times both the pre-jump
/// (`pre_jump = true`) and the post-jump value are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub norm: f64,
    pub pre_jump: bool,
}

/// Solution of `X' + A(t) X = 0`, `X(tau_i) = B_i X(tau_i - 0)`, `X(0) = I`,
/// checkpointed at every impulse. Queries re-integrate at most one interval.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    system: ImpulsiveSystem,
    h_max: f64,
    checkpoints: Vec<Checkpoint>,
    samples: Vec<NormSample>,
}

impl FundamentalSolution {
    pub fn build(system: &ImpulsiveSystem, h_max: f64) -> Result<Self> {
        let n = system.dimension();
        let schedule = system.schedule();
        let field = LinearField::homogeneous(system.coefficients());
        let mut checkpoints = Vec::with_capacity(schedule.len());
        let mut samples = vec![NormSample { t: 0.0, norm: 1.0, pre_jump: false }];
        let mut y = DMatrix::identity(n, n);
        for (interval, (lo, hi)) in schedule.segments().into_iter().enumerate() {
            y = integrate(field, lo, hi, y, h_max, |t, y| {
                samples.push(NormSample { t, norm: mat_norm(y), pre_jump: false })
            })
            .map_err(|e| Error::Interval { interval, start: lo, end: hi, source: Box::new(e) })?;
            let index = interval + 1;
            if index <= schedule.len() && schedule.tau(index) == hi {
                samples.last_mut().expect("node at interval end").pre_jump = true;
                let post = system.jumps().op(index) * &y;
                samples.push(NormSample { t: hi, norm: mat_norm(&post), pre_jump: false });
                checkpoints.push(Checkpoint { time: hi, pre: y, post: post.clone() });
                y = post;
            }
        }
        Ok(Self { system: system.clone(), h_max, checkpoints, samples })
    }

    pub fn system(&self) -> &ImpulsiveSystem {
        &self.system
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    /// Norms at every node of the construction pass.
    pub fn norm_samples(&self) -> &[NormSample] {
        &self.samples
    }

    /// `X(tau_i + 0)`, 1-based.
    pub fn post_jump(&self, i: usize) -> &DMatrix<f64> {
        &self.checkpoints[i - 1].post
    }

    /// `X(tau_i - 0)`, 1-based.
    pub fn pre_jump(&self, i: usize) -> &DMatrix<f64> {
        &self.checkpoints[i - 1].pre
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.system.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::invalid(format!("t = {t} outside [0, {horizon}]")));
        }
        Ok(())
    }

    fn start_of(&self, interval: usize) -> (f64, DMatrix<f64>) {
        if interval == 0 {
            let n = self.system.dimension();
            (0.0, DMatrix::identity(n, n))
        } else {
            let cp = &self.checkpoints[interval - 1];
            (cp.time, cp.post.clone())
        }
    }

    /// Right-continuous `X(t)`.
    pub fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check_time(t)?;
        let (start, y0) = self.start_of(self.system.schedule().interval_index(t));
        let field = LinearField::homogeneous(self.system.coefficients());
        integrate(field, start, t, y0, self.h_max, |_, _| {})
    }

    /// `X(t - 0)`; differs from [`at`](Self::at) only at impulse times.
    pub fn at_left(&self, t: f64) -> Result<DMatrix<f64>> {
        let schedule = self.system.schedule();
        let k = schedule.interval_index(t);
        if k > 0 && schedule.tau(k) == t {
            return Ok(self.checkpoints[k - 1].pre.clone());
        }
        self.at(t)
    }

    /// `X` at ascending `times` inside `[a, b]`, integrating from `X(a + 0)`
    /// without applying jumps. A node at `b` yields the left limit.
    pub fn sample_segment(&self, a: f64, b: f64, times: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_time(a)?;
        self.check_time(b)?;
        let schedule = self.system.schedule();
        if schedule.count_before(b) != schedule.interval_index(a) {
            return Err(Error::invalid(format!("segment [{a}, {b}] contains an impulse")));
        }
        let field = LinearField::homogeneous(self.system.coefficients());
        let mut cur_t = a;
        let mut cur = self.at(a)?;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t < cur_t || t > b {
                return Err(Error::invalid("segment sample times must ascend inside [a, b]"));
            }
            cur = integrate(field, cur_t, t, cur, self.h_max, |_, _| {})?;
            cur_t = t;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Right-continuous `X` at ascending `times`, marching between queries.
    pub fn at_many(&self, times: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let schedule = self.system.schedule();
        let field = LinearField::homogeneous(self.system.coefficients());
        let mut interval = 0;
        let (mut cur_t, mut cur) = self.start_of(0);
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            self.check_time(t)?;
            if t < cur_t {
                return Err(Error::invalid("query times must ascend"));
            }
            let k = schedule.interval_index(t);
            if k != interval {
                interval = k;
                (cur_t, cur) = self.start_of(k);
            }
            cur = integrate(field, cur_t, t, cur, self.h_max, |_, _| {})?;
            cur_t = t;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// `C(t, s) = X(t) X(s)^-1`.
    pub fn evolution(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        let xt = self.at(t)?;
        let xs = self.at(s)?;
        Ok(xt * inverse_at(&xs, s)?)
    }
}

pub(crate) fn inverse_at(x: &DMatrix<f64>, time: f64) -> Result<DMatrix<f64>> {
    checked_inverse(x)
        .map(|(inv, _)| inv)
        .map_err(|condition| Error::SingularFundamental { time, condition })
}

pub fn fundamental_matrix(system: &ImpulsiveSystem, t: f64) -> Result<DMatrix<f64>> {
    FundamentalSolution::build(system, DEFAULT_H_MAX)?.at(t)
}

pub fn evolution_operator(system: &ImpulsiveSystem, t: f64, s: f64) -> Result<DMatrix<f64>> {
    FundamentalSolution::build(system, DEFAULT_H_MAX)?.evolution(t, s)
}

/// `||C(t, s) - C(t, tau) C(tau, s)||`.
pub fn semigroup_residual(system: &ImpulsiveSystem, t: f64, tau: f64, s: f64) -> Result<f64> {
    let fundamental = FundamentalSolution::build(system, DEFAULT_H_MAX)?;
    semigroup_residual_with(&fundamental, t, tau, s)
}

pub fn semigroup_residual_with(
    fundamental: &FundamentalSolution,
    t: f64,
    tau: f64,
    s: f64,
) -> Result<f64> {
    let direct = fundamental.evolution(t, s)?;
    let split = fundamental.evolution(t, tau)? * fundamental.evolution(tau, s)?;
    Ok(mat_norm(&(direct - split)))
}

/// Evolution operator `G(t, s)` of the equation without impulses,
/// integrated from `s` to `t` in either direction.
#[derive(Debug, Clone)]
pub struct NonImpulsiveEvolution {
    coefficients: CoefficientOperator,
    h_max: f64,
}

impl NonImpulsiveEvolution {
    pub fn new(coefficients: CoefficientOperator, h_max: f64) -> Self {
        Self { coefficients, h_max }
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.dimension()
    }

    pub fn at(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        integrate(
            LinearField::homogeneous(&self.coefficients),
            s,
            t,
            DMatrix::identity(n, n),
            self.h_max,
            |_, _| {},
        )
    }
}

/// Which case of the piecewise construction produced `C(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `s` and `t` in the same inter-impulse interval.
    SameInterval,
    /// `s < t` with at least one impulse in `(s, t]`.
    Forward,
    /// `t < s` with at least one impulse in `(t, s]`.
    Backward,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::SameInterval => "same-interval",
            Branch::Forward => "forward",
            Branch::Backward => "backward",
        })
    }
}

/// Builds `C(t, s)` from `G` and the jump operators.
///
/// Forward (`s` in `[tau_{k-1}, tau_k)`, `t` in `[tau_i, tau_{i+1})`, `k <= i`):
/// `G(t, tau_i) B_i G(tau_i, tau_{i-1}) ... B_{k+1} G(tau_{k+1}, tau_k) B_k G(tau_k, s)`.
///
/// Backward (`t` in `[tau_{i-1}, tau_i)`, `s` in `[tau_k, tau_{k+1})`, `i <= k`):
/// `G(t, tau_i) B_i^-1 G(tau_i, tau_{i+1}) ... B_{k-1}^-1 G(tau_{k-1}, tau_k) B_k^-1 G(tau_k, s)`.
///
/// For adjacent intervals the bracketed products are empty.
pub fn evolution_from_g(
    g: &NonImpulsiveEvolution,
    jumps: &JumpSequence,
    schedule: &ImpulseSchedule,
    t: f64,
    s: f64,
) -> Result<(DMatrix<f64>, Branch)> {
    if jumps.len() != schedule.len() || jumps.dimension() != g.dimension() {
        return Err(Error::invalid("jump sequence does not match schedule or dimension"));
    }
    let horizon = schedule.horizon();
    for v in [t, s] {
        if !(0.0..=horizon).contains(&v) {
            return Err(Error::invalid(format!("time {v} outside [0, {horizon}]")));
        }
    }
    let it = schedule.interval_index(t);
    let is = schedule.interval_index(s);
    let tau = |j: usize| schedule.tau(j);

    if it == is {
        return Ok((g.at(t, s)?, Branch::SameInterval));
    }
    if s < t {
        let (k, i) = (is + 1, it);
        let mut m = jumps.op(k) * g.at(tau(k), s)?;
        for j in k + 1..=i {
            m = jumps.op(j) * g.at(tau(j), tau(j - 1))? * m;
        }
        Ok((g.at(t, tau(i))? * m, Branch::Forward))
    } else {
        let (i, k) = (it + 1, is);
        let mut m = jumps.inverse(k)? * g.at(tau(k), s)?;
        for j in (i..k).rev() {
            m = jumps.inverse(j)? * g.at(tau(j), tau(j + 1))? * m;
        }
        Ok((g.at(t, tau(i))? * m, Branch::Backward))
    }
}

/// Scalar `X(t) = U(t) prod_{0 < tau_i <= t} B_i`.
pub fn scalar_product_formula(
    u: impl Fn(f64) -> f64,
    jumps: &JumpSequence,
    schedule: &ImpulseSchedule,
    t: f64,
) -> Result<f64> {
    if jumps.dimension() != 1 {
        return Err(Error::invalid(format!(
            "scalar product formula needs dimension 1, got {}",
            jumps.dimension()
        )));
    }
    let count = schedule.interval_index(t).min(jumps.len());
    Ok(u(t) * jumps.ops()[..count].iter().map(|b| b[(0, 0)]).product::<f64>())
}
