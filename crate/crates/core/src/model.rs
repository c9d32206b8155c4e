//! Problem data: impulse schedules, coefficient and jump operators, forcings.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, mat_norm, vec_norm};
use crate::quad::{simpson, SIMPSON_NODES};

/// Tolerance used when matching breakpoints against impulse times.
const TIME_EPS: f64 = 1e-12;

/// Strictly increasing impulse instants `0 < tau_1 < tau_2 < ... <= horizon`.
///
/// `tau_0 = 0` is implicit and carries no jump.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule {
    times: Vec<f64>,
    horizon: f64,
}

impl ImpulseSchedule {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        let mut prev = 0.0;
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t <= prev {
                return Err(Error::invalid(format!(
                    "impulse times must be strictly increasing and positive (tau_{} = {t})",
                    i + 1
                )));
            }
            if t > horizon {
                return Err(Error::invalid(format!(
                    "impulse time tau_{} = {t} exceeds horizon {horizon}",
                    i + 1
                )));
            }
            prev = t;
        }
        Ok(Self { times, horizon })
    }

    /// Times `eta, 2 eta, ..., k eta <= horizon`.
    pub fn uniform(eta: f64, horizon: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid(format!("eta must be positive, got {eta}")));
        }
        if !(horizon >= eta) {
            return Err(Error::invalid(format!("horizon {horizon} is shorter than eta {eta}")));
        }
        let count = (horizon / eta * (1.0 + 1e-12)).floor() as usize;
        let times = (1..=count)
            .map(|k| (k as f64 * eta).min(horizon))
            .collect();
        Self::new(times, horizon)
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `tau_i` with the convention `tau_0 = 0`.
    pub fn tau(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.times[i - 1]
        }
    }

    /// Gaps `tau_1 - 0, tau_2 - tau_1, ...`.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect()
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.gaps().into_iter().reduce(f64::min)
    }

    pub fn max_gap(&self) -> Option<f64> {
        self.gaps().into_iter().reduce(f64::max)
    }

    /// Impulse count per unit time over the horizon.
    pub fn density(&self) -> f64 {
        self.times.len() as f64 / self.horizon
    }

    /// Number of impulse instants `tau_i <= t` (right-continuous interval index).
    pub fn interval_index(&self, t: f64) -> usize {
        self.times.partition_point(|&tau| tau <= t)
    }

    /// Number of impulse instants `tau_i < t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.times.partition_point(|&tau| tau < t)
    }

    /// Consecutive segments `[0, tau_1], [tau_1, tau_2], ..., [tau_m, horizon]`,
    /// dropping the final one when `tau_m == horizon`.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.times.len() + 1);
        let mut prev = 0.0;
        for &t in &self.times {
            out.push((prev, t));
            prev = t;
        }
        if self.horizon > prev {
            out.push((prev, self.horizon));
        }
        out
    }
}

/// Coarse tag for the three serialisable profile variants plus the
/// in-process evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    PiecewiseConstant,
    SampledTable,
    Custom,
}

/// Matrix-valued function of time.
///
/// Piecewise profiles are right-continuous: `values[k]` applies on
/// `[breaks[k-1], breaks[k])`. Tables are linearly interpolated and held
/// constant outside their range.
#[derive(Clone)]
pub enum Profile {
    Constant(DMatrix<f64>),
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<DMatrix<f64>>,
    },
    Table {
        times: Vec<f64>,
        values: Vec<DMatrix<f64>>,
    },
    Custom {
        rows: usize,
        cols: usize,
        eval: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Profile::Piecewise { breaks, values } => f
                .debug_struct("Piecewise")
                .field("breaks", breaks)
                .field("values", values)
                .finish(),
            Profile::Table { times, values } => f
                .debug_struct("Table")
                .field("times", times)
                .field("values", values)
                .finish(),
            Profile::Custom { rows, cols, .. } => f
                .debug_struct("Custom")
                .field("rows", rows)
                .field("cols", cols)
                .finish_non_exhaustive(),
        }
    }
}

impl Profile {
    pub fn custom(
        rows: usize,
        cols: usize,
        eval: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Profile::Custom { rows, cols, eval: Arc::new(eval) }
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::invalid(format!(
                "piecewise profile needs {} values for {} breaks, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("piecewise breaks must be strictly increasing"));
        }
        let p = Profile::Piecewise { breaks, values };
        p.check_uniform_shape()?;
        Ok(p)
    }

    pub fn table(times: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid(format!(
                "sampled table needs matching nonempty times/values, got {}/{}",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("table times must be strictly increasing"));
        }
        let p = Profile::Table { times, values };
        p.check_uniform_shape()?;
        Ok(p)
    }

    fn check_uniform_shape(&self) -> Result<()> {
        let values = match self {
            Profile::Piecewise { values, .. } | Profile::Table { values, .. } => values,
            _ => return Ok(()),
        };
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::invalid("profile values have inconsistent shapes"));
        }
        Ok(())
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            Profile::Constant(_) => ProfileKind::Constant,
            Profile::Piecewise { .. } => ProfileKind::PiecewiseConstant,
            Profile::Table { .. } => ProfileKind::SampledTable,
            Profile::Custom { .. } => ProfileKind::Custom,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Profile::Constant(m) => m.shape(),
            Profile::Piecewise { values, .. } | Profile::Table { values, .. } => values[0].shape(),
            Profile::Custom { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// Times where the profile is not smooth. Integrators split segments here.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Profile::Piecewise { breaks, .. } => breaks,
            Profile::Table { times, .. } => times,
            _ => &[],
        }
    }

    /// Right-continuous value at `t`.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        self.at_anchored(t, t)
    }

    /// Value at `t` on the smooth piece that contains `anchor`.
    ///
    /// Integrators pass the midpoint of a breakpoint-free segment so that both
    /// segment endpoints see the same piece (left limits at the right end).
    pub fn at_anchored(&self, t: f64, anchor: f64) -> DMatrix<f64> {
        match self {
            Profile::Constant(m) => m.clone(),
            Profile::Piecewise { breaks, values } => {
                values[breaks.partition_point(|&b| b <= anchor)].clone()
            }
            Profile::Table { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= times[last] {
                    return values[last].clone();
                }
                let k = times.partition_point(|&s| s <= t).clamp(1, last);
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                &values[k - 1] * (1.0 - w) + &values[k] * w
            }
            Profile::Custom { eval, .. } => eval(t),
        }
    }

    /// Exact supremum of the infinity norm over `[0, horizon]` for the
    /// tabulated variants; a dense grid for custom evaluators.
    fn sup_norm(&self, horizon: f64, norm: impl Fn(&DMatrix<f64>) -> f64) -> f64 {
        match self {
            Profile::Constant(m) => norm(m),
            Profile::Piecewise { breaks, values } => {
                let first = breaks.partition_point(|&b| b <= 0.0);
                let last = breaks.partition_point(|&b| b <= horizon);
                values[first..=last].iter().map(&norm).fold(0.0, f64::max)
            }
            Profile::Table { times, .. } => {
                // Norms are convex along each linear piece, so the maximum is
                // attained at a table node or at an end of [0, horizon].
                let mut best = norm(&self.at(0.0)).max(norm(&self.at(horizon)));
                for &t in times.iter().filter(|&&t| (0.0..=horizon).contains(&t)) {
                    best = best.max(norm(&self.at(t)));
                }
                best
            }
            Profile::Custom { eval, .. } => {
                const GRID: usize = 4096;
                (0..=GRID)
                    .map(|k| norm(&eval(horizon * k as f64 / GRID as f64)))
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// `A(t)` in `x' + A(t) x = f(t)`.
#[derive(Debug, Clone)]
pub struct CoefficientOperator {
    profile: Profile,
}

impl CoefficientOperator {
    pub fn new(profile: Profile) -> Result<Self> {
        let (r, c) = profile.shape();
        if r != c || r == 0 {
            return Err(Error::invalid(format!("coefficient operator must be square, got {r}x{c}")));
        }
        Ok(Self { profile })
    }

    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        Self::new(Profile::Constant(m))
    }

    pub fn zero(n: usize) -> Self {
        Self { profile: Profile::Constant(DMatrix::zeros(n, n)) }
    }

    pub fn scalar(a: f64) -> Self {
        Self { profile: Profile::Constant(DMatrix::from_element(1, 1, a)) }
    }

    pub fn dimension(&self) -> usize {
        self.profile.shape().0
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn kind(&self) -> ProfileKind {
        self.profile.kind()
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        self.profile.at(t)
    }

    pub fn at_anchored(&self, t: f64, anchor: f64) -> DMatrix<f64> {
        self.profile.at_anchored(t, anchor)
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.profile.breakpoints()
    }
}

/// Jump operators `B_1, B_2, ...`, one per impulse time.
#[derive(Debug, Clone)]
pub struct JumpSequence {
    ops: Vec<DMatrix<f64>>,
    dimension: usize,
}

impl JumpSequence {
    pub fn new(ops: Vec<DMatrix<f64>>, dimension: usize) -> Result<Self> {
        for (i, b) in ops.iter().enumerate() {
            if b.shape() != (dimension, dimension) {
                return Err(Error::invalid(format!(
                    "B_{} has shape {:?}, expected {dimension}x{dimension}",
                    i + 1,
                    b.shape()
                )));
            }
            if !b.iter().all(|x| x.is_finite()) {
                return Err(Error::invalid(format!("B_{} has nonfinite entries", i + 1)));
            }
        }
        Ok(Self { ops, dimension })
    }

    pub fn repeat(b: DMatrix<f64>, count: usize) -> Result<Self> {
        let n = b.nrows();
        Self::new(vec![b; count], n)
    }

    pub fn scalars(values: &[f64]) -> Self {
        Self {
            ops: values.iter().map(|&b| DMatrix::from_element(1, 1, b)).collect(),
            dimension: 1,
        }
    }

    pub fn identity(n: usize, count: usize) -> Self {
        Self { ops: vec![DMatrix::identity(n, n); count], dimension: n }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `B_i`, 1-based.
    pub fn op(&self, i: usize) -> &DMatrix<f64> {
        &self.ops[i - 1]
    }

    pub fn ops(&self) -> &[DMatrix<f64>] {
        &self.ops
    }

    /// `b = max_i ||B_i||`; zero for an empty sequence.
    pub fn bound(&self) -> f64 {
        self.ops.iter().map(mat_norm).fold(0.0, f64::max)
    }

    /// `B_i^-1`, 1-based, rejecting operators whose condition estimate
    /// exceeds the singularity threshold.
    pub fn inverse(&self, i: usize) -> Result<DMatrix<f64>> {
        checked_inverse(self.op(i))
            .map(|(inv, _)| inv)
            .map_err(|condition| Error::SingularJump { index: i, condition })
    }

    pub fn truncated(&self, count: usize) -> Self {
        Self { ops: self.ops[..count.min(self.ops.len())].to_vec(), dimension: self.dimension }
    }
}

/// Homogeneous part of the impulsive equation: coefficients, jumps, schedule.
#[derive(Debug, Clone)]
pub struct ImpulsiveSystem {
    coefficients: CoefficientOperator,
    jumps: JumpSequence,
    schedule: ImpulseSchedule,
}

impl ImpulsiveSystem {
    pub fn new(
        coefficients: CoefficientOperator,
        jumps: JumpSequence,
        schedule: ImpulseSchedule,
    ) -> Result<Self> {
        if jumps.len() != schedule.len() {
            return Err(Error::invalid(format!(
                "{} jump operators for {} impulse times",
                jumps.len(),
                schedule.len()
            )));
        }
        if jumps.dimension() != coefficients.dimension() {
            return Err(Error::invalid(format!(
                "jump dimension {} does not match coefficient dimension {}",
                jumps.dimension(),
                coefficients.dimension()
            )));
        }
        if let Profile::Piecewise { breaks, .. } = coefficients.profile() {
            for &b in breaks.iter().filter(|&&b| b > 0.0 && b < schedule.horizon()) {
                let k = schedule.count_before(b + TIME_EPS);
                let hit = k > 0 && (schedule.tau(k) - b).abs() <= TIME_EPS;
                if !hit {
                    return Err(Error::invalid(format!(
                        "piecewise A(t) breaks at {b}, which is not an impulse time"
                    )));
                }
            }
        }
        Ok(Self { coefficients, jumps, schedule })
    }

    pub fn coefficients(&self) -> &CoefficientOperator {
        &self.coefficients
    }

    pub fn jumps(&self) -> &JumpSequence {
        &self.jumps
    }

    pub fn schedule(&self) -> &ImpulseSchedule {
        &self.schedule
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.dimension()
    }

    pub fn horizon(&self) -> f64 {
        self.schedule.horizon()
    }

    /// Same dynamics restricted to a shorter (or equal) horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let count = self.schedule.interval_index(horizon);
        let schedule = ImpulseSchedule::new(self.schedule.times()[..count].to_vec(), horizon)?;
        Self::new(self.coefficients.clone(), self.jumps.truncated(count), schedule)
    }
}

/// Right side: continuous forcing `f(t)` and jump offsets `alpha_i`.
#[derive(Debug, Clone)]
pub struct Forcing {
    f: Option<Profile>,
    alphas: Vec<DVector<f64>>,
    sup_f: f64,
    sup_alpha: f64,
    dimension: usize,
}

impl Forcing {
    /// `f = None` means `f = 0`. Suprema are taken over `[0, horizon]`.
    pub fn new(
        dimension: usize,
        f: Option<Profile>,
        alphas: Vec<DVector<f64>>,
        horizon: f64,
    ) -> Result<Self> {
        if let Some(p) = &f {
            if p.shape() != (dimension, 1) {
                return Err(Error::invalid(format!(
                    "forcing f has shape {:?}, expected {dimension}x1",
                    p.shape()
                )));
            }
        }
        for (i, a) in alphas.iter().enumerate() {
            if a.len() != dimension {
                return Err(Error::invalid(format!(
                    "alpha_{} has length {}, expected {dimension}",
                    i + 1,
                    a.len()
                )));
            }
        }
        let sup_alpha = alphas.iter().map(vec_norm).fold(0.0, f64::max);
        if !sup_alpha.is_finite() {
            return Err(Error::invalid("jump offsets must be finite"));
        }
        let sup_f = f
            .as_ref()
            .map(|p| p.sup_norm(horizon, |m| m.iter().fold(0.0, |s, x| s.max(x.abs()))))
            .unwrap_or(0.0);
        Ok(Self { f, alphas, sup_f, sup_alpha, dimension })
    }

    pub fn zero(dimension: usize, count: usize) -> Self {
        Self {
            f: None,
            alphas: vec![DVector::zeros(dimension); count],
            sup_f: 0.0,
            sup_alpha: 0.0,
            dimension,
        }
    }

    pub fn f(&self) -> Option<&Profile> {
        self.f.as_ref()
    }

    pub fn alphas(&self) -> &[DVector<f64>] {
        &self.alphas
    }

    /// `alpha_i`, 1-based.
    pub fn alpha(&self, i: usize) -> &DVector<f64> {
        &self.alphas[i - 1]
    }

    pub fn f_at(&self, t: f64) -> DVector<f64> {
        match &self.f {
            Some(p) => DVector::from_column_slice(p.at(t).as_slice()),
            None => DVector::zeros(self.dimension),
        }
    }

    pub fn sup_f(&self) -> f64 {
        self.sup_f
    }

    pub fn sup_alpha(&self) -> f64 {
        self.sup_alpha
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Checks that this forcing is compatible with `system`.
    pub fn validate_for(&self, system: &ImpulsiveSystem) -> Result<()> {
        if self.dimension != system.dimension() {
            return Err(Error::invalid(format!(
                "forcing dimension {} does not match system dimension {}",
                self.dimension,
                system.dimension()
            )));
        }
        if self.alphas.len() != system.schedule().len() {
            return Err(Error::invalid(format!(
                "{} jump offsets for {} impulse times",
                self.alphas.len(),
                system.schedule().len()
            )));
        }
        Ok(())
    }
}

pub fn build_uniform_schedule(eta: f64, horizon: f64) -> Result<ImpulseSchedule> {
    ImpulseSchedule::uniform(eta, horizon)
}

/// Quantities from the gap, jump-norm and coefficient-integral hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisBounds {
    /// Minimum gap.
    pub rho: f64,
    /// Maximum gap.
    pub sigma: f64,
    /// `max_i ||B_i||`.
    pub b: f64,
    /// Maximum over inter-impulse intervals of the integral of `||A(s)||`.
    pub m: f64,
    /// Impulse density over the horizon.
    pub q: f64,
}

pub fn hypothesis_bounds(system: &ImpulsiveSystem) -> Result<HypothesisBounds> {
    let schedule = system.schedule();
    let (rho, sigma) = match (schedule.min_gap(), schedule.max_gap()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::invalid("hypothesis bounds need a nonempty schedule")),
    };
    let a = system.coefficients();
    let mut m: f64 = 0.0;
    for (lo, hi) in schedule.segments() {
        m = m.max(integral_of_norm(a, lo, hi));
    }
    Ok(HypothesisBounds { rho, sigma, b: system.jumps().bound(), m, q: schedule.density() })
}

/// Integral of `||A(s)||` over `[lo, hi]`, split at the profile's breakpoints.
pub(crate) fn integral_of_norm(a: &CoefficientOperator, lo: f64, hi: f64) -> f64 {
    split_at(lo, hi, a.breakpoints())
        .into_iter()
        .map(|(s0, s1)| {
            let anchor = 0.5 * (s0 + s1);
            simpson(|t| mat_norm(&a.at_anchored(t, anchor)), s0, s1, SIMPSON_NODES)
        })
        .sum()
}

/// Splits `[lo, hi]` (either orientation) at the interior points of `cuts`.
pub(crate) fn split_at(lo: f64, hi: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut pts = vec![a];
    pts.extend(cuts.iter().copied().filter(|&c| c > a + TIME_EPS && c < b - TIME_EPS));
    pts.push(b);
    pts.dedup();
    let mut segs: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if lo > hi {
        segs.reverse();
        for s in &mut segs {
            *s = (s.1, s.0);
        }
    }
    segs
}
