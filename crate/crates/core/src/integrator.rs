//! Fixed-step RK4 between impulses, exact jump maps at impulses.
//!
//! Every inter-impulse interval is subdivided uniformly, so impulse instants
//! are always step endpoints and no event detection is needed. Segments are
//! additionally split at the breakpoints of piecewise or tabulated profiles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::FundamentalSolution;
use crate::linalg::{checked_inverse, is_finite, vec_norm};
use crate::model::{split_at, CoefficientOperator, Forcing, ImpulsiveSystem, Profile};
use crate::quad::{nodes, weights, SIMPSON_NODES};

pub const DEFAULT_H_MAX: f64 = 1e-3;

/// Right side `-A(t) Y + f(t)` of the jump-free equation. `f` is only added
/// to single-column states.
#[derive(Clone, Copy)]
pub(crate) struct LinearField<'a> {
    a: &'a CoefficientOperator,
    f: Option<&'a Profile>,
}

impl<'a> LinearField<'a> {
    pub(crate) fn homogeneous(a: &'a CoefficientOperator) -> Self {
        Self { a, f: None }
    }

    pub(crate) fn forced(a: &'a CoefficientOperator, f: Option<&'a Profile>) -> Self {
        Self { a, f }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut cuts = self.a.breakpoints().to_vec();
        if let Some(f) = self.f {
            cuts.extend_from_slice(f.breakpoints());
        }
        cuts.sort_by(f64::total_cmp);
        cuts
    }

    fn eval(&self, t: f64, anchor: f64, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut d = -(self.a.at_anchored(t, anchor) * y);
        if let (Some(f), 1) = (self.f, y.ncols()) {
            d += f.at_anchored(t, anchor);
        }
        d
    }
}

/// Integrates from `t0` to `t1` (either direction) and calls `visit` at every
/// step node after `t0`. The last node is exactly `t1`.
pub(crate) fn integrate(
    field: LinearField<'_>,
    t0: f64,
    t1: f64,
    y0: DMatrix<f64>,
    h_max: f64,
    mut visit: impl FnMut(f64, &DMatrix<f64>),
) -> Result<DMatrix<f64>> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(Error::invalid(format!("h_max must be positive, got {h_max}")));
    }
    let mut y = y0;
    if t0 == t1 {
        return Ok(y);
    }
    for (s0, s1) in split_at(t0, t1, &field.breakpoints()) {
        let steps = ((s1 - s0).abs() / h_max).ceil().max(1.0) as usize;
        let h = (s1 - s0) / steps as f64;
        let anchor = 0.5 * (s0 + s1);
        for k in 0..steps {
            let t = s0 + k as f64 * h;
            let t_next = if k + 1 == steps { s1 } else { s0 + (k + 1) as f64 * h };
            let k1 = field.eval(t, anchor, &y);
            let k2 = field.eval(t + 0.5 * h, anchor, &(&y + &k1 * (0.5 * h)));
            let k3 = field.eval(t + 0.5 * h, anchor, &(&y + &k2 * (0.5 * h)));
            let k4 = field.eval(t_next, anchor, &(&y + &k3 * h));
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if !is_finite(&y) {
                return Err(Error::NumericalOverflow { time: t_next });
            }
            visit(t_next, &y);
        }
    }
    Ok(y)
}

/// Jump-free solution of `x' + A(t) x = f(t)` from `x(t0) = x0`, returned at `t1`.
///
/// The caller guarantees that no impulse lies in `(t0, t1)`.
pub fn flow(
    a: &CoefficientOperator,
    f: Option<&Profile>,
    t0: f64,
    t1: f64,
    x0: &DVector<f64>,
    h_max: f64,
) -> Result<DVector<f64>> {
    if t1 < t0 {
        return Err(Error::invalid(format!("flow needs t0 <= t1, got [{t0}, {t1}]")));
    }
    check_len(x0.len(), a.dimension(), "initial state")?;
    let y = integrate(LinearField::forced(a, f), t0, t1, column(x0), h_max, |_, _| {})?;
    Ok(to_vector(&y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// 1-based impulse index.
    pub index: usize,
    pub time: f64,
    pub pre: DVector<f64>,
    pub post: DVector<f64>,
}

/// Right-continuous sampled solution. The sample at an impulse time holds the
/// post-jump value; the pre-jump value lives in the matching [`JumpRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, DVector<f64>)>,
    pub jumps: Vec<JumpRecord>,
    pub h_max: f64,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.samples.first().map_or(0, |(_, x)| x.len())
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |(t, _)| *t)
    }

    /// `(t, ||x(t)||)` for every sample.
    pub fn norms(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|(t, x)| (*t, vec_norm(x))).collect()
    }

    /// Norms at every sample plus the pre-jump norms, ordered by time with
    /// each pre-jump value ahead of its post-jump sample.
    pub fn norms_with_pre_jump(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.samples.len() + self.jumps.len());
        let mut jumps = self.jumps.iter().peekable();
        for (t, x) in &self.samples {
            while let Some(j) = jumps.next_if(|j| j.time <= *t) {
                out.push((j.time, vec_norm(&j.pre)));
            }
            out.push((*t, vec_norm(x)));
        }
        out
    }

    /// Value at `t` with the right-continuous convention. Between grid nodes
    /// the value is interpolated linearly on the same side of any jump.
    pub fn value_at(&self, t: f64) -> Option<DVector<f64>> {
        let first = self.samples.first()?.0;
        if t < first - 1e-12 || t > self.final_time() + 1e-12 {
            return None;
        }
        let idx = self.samples.partition_point(|(ts, _)| *ts <= t + 1e-12);
        let (t0, x0) = &self.samples[idx.saturating_sub(1)];
        if (t - t0).abs() <= 1e-12 || idx == self.samples.len() {
            return Some(x0.clone());
        }
        let (t1, x1) = &self.samples[idx];
        let right = self
            .jumps
            .iter()
            .find(|j| j.time == *t1)
            .map_or(x1, |j| &j.pre);
        let w = (t - t0) / (t1 - t0);
        Some(x0 * (1.0 - w) + right * w)
    }
}

/// Solves `x' + A(t) x = f(t)`, `x(tau_i) = B_i x(tau_i - 0) + alpha_i`,
/// `x(0) = x0` on `[0, horizon]`.
pub fn solve_ivp(
    system: &ImpulsiveSystem,
    forcing: &Forcing,
    x0: &DVector<f64>,
    h_max: f64,
) -> Result<Trajectory> {
    forcing.validate_for(system)?;
    check_len(x0.len(), system.dimension(), "initial state")?;
    let schedule = system.schedule();
    let field = LinearField::forced(system.coefficients(), forcing.f());

    let mut samples = vec![(0.0, x0.clone())];
    let mut jumps = Vec::with_capacity(schedule.len());
    let mut y = column(x0);
    for (interval, (lo, hi)) in schedule.segments().into_iter().enumerate() {
        y = integrate(field, lo, hi, y, h_max, |t, y| samples.push((t, to_vector(y))))
            .map_err(|e| Error::Interval { interval, start: lo, end: hi, source: Box::new(e) })?;
        let index = interval + 1;
        if index <= schedule.len() && schedule.tau(index) == hi {
            let (_, pre) = samples.pop().expect("segment produced at least one node");
            let post = system.jumps().op(index) * &pre + forcing.alpha(index);
            if !post.iter().all(|v| v.is_finite()) {
                return Err(Error::Interval {
                    interval,
                    start: lo,
                    end: hi,
                    source: Box::new(Error::NumericalOverflow { time: hi }),
                });
            }
            samples.push((hi, post.clone()));
            y = column(&post);
            jumps.push(JumpRecord { index, time: hi, pre, post });
        }
    }
    Ok(Trajectory { samples, jumps, h_max })
}

/// Assembles `X(t) x0 + int_0^t C(t,s) f(s) ds + sum_{tau_i <= t} C(t, tau_i) alpha_i`
/// with the default step. Independent of the trajectory integrator except for
/// the shared RK4 kernel.
pub fn representation_solution(
    system: &ImpulsiveSystem,
    forcing: &Forcing,
    x0: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let fundamental = FundamentalSolution::build(system, DEFAULT_H_MAX)?;
    representation_with(&fundamental, forcing, x0, t)
}

/// [`representation_solution`] reusing a prebuilt fundamental solution.
pub fn representation_with(
    fundamental: &FundamentalSolution,
    forcing: &Forcing,
    x0: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let system = fundamental.system();
    forcing.validate_for(system)?;
    check_len(x0.len(), system.dimension(), "initial state")?;
    let schedule = system.schedule();
    if !(0.0..=schedule.horizon()).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, {}]", schedule.horizon())));
    }
    let last = schedule.interval_index(t);
    for i in 1..=last {
        system.jumps().inverse(i)?;
    }

    let xt = fundamental.at(t)?;
    let mut acc = DVector::zeros(system.dimension());

    // int_0^t X(s)^-1 f(s) ds, impulse by impulse, then by profile breakpoints.
    if forcing.f().is_some() {
        let mut cuts: Vec<f64> = schedule.times()[..last].to_vec();
        cuts.extend_from_slice(system.coefficients().breakpoints());
        if let Some(f) = forcing.f() {
            cuts.extend_from_slice(f.breakpoints());
        }
        cuts.sort_by(f64::total_cmp);
        for (a, b) in split_at(0.0, t, &cuts) {
            let pts = nodes(a, b, SIMPSON_NODES);
            let w = weights(SIMPSON_NODES, (b - a) / (SIMPSON_NODES - 1) as f64);
            let xs = fundamental.sample_segment(a, b, &pts)?;
            let anchor = 0.5 * (a + b);
            let f = forcing.f().expect("checked above");
            for ((s, x), w) in pts.iter().zip(&xs).zip(&w) {
                let (inv, _) = checked_inverse(x)
                    .map_err(|condition| Error::SingularFundamental { time: *s, condition })?;
                let fs = f.at_anchored(*s, anchor);
                acc += (inv * fs).column(0) * *w;
            }
        }
    }

    let mut x = &xt * x0 + &xt * acc;
    for i in 1..=last {
        let x_tau = fundamental.post_jump(i);
        let (inv, _) = checked_inverse(x_tau).map_err(|condition| {
            Error::SingularFundamental { time: schedule.tau(i), condition }
        })?;
        x += &xt * (inv * forcing.alpha(i));
    }
    Ok(x)
}

pub(crate) fn column(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.len(), 1, x.as_slice())
}

pub(crate) fn to_vector(y: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(y.as_slice())
}

fn check_len(found: usize, expected: usize, what: &str) -> Result<()> {
    if found != expected {
        return Err(Error::invalid(format!("{what} has length {found}, expected {expected}")));
    }
    Ok(())
}
