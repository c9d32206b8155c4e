#![allow(dead_code)]

use impulsive_core::linalg::checked_inverse;
use impulsive_core::{
    CoefficientOperator, DMatrix, DVector, Forcing, ImpulseSchedule, ImpulsiveSystem, JumpSequence,
    Profile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HORIZON: f64 = 4.0;

pub struct Case {
    pub seed: u64,
    pub system: ImpulsiveSystem,
    pub forcing: Forcing,
    pub x0: DVector<f64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(lo..=hi))
}

fn impulse_times(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..count).map(|_| rng.gen_range(0.3..HORIZON - 0.3)).collect();
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[1] - w[0] >= 0.2) {
            return t;
        }
    }
}

/// Well-conditioned jump: signed diagonal in [0.5, 1.5] plus small coupling.
fn jump(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let mut b = uniform_matrix(rng, n, n, -0.25, 0.25);
        for i in 0..n {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            b[(i, i)] = sign * rng.gen_range(0.5..1.5);
        }
        if matches!(checked_inverse(&b), Ok((_, c)) if c < 1e3) {
            return b;
        }
    }
}

/// Dimension at most 3, at most 6 impulses on `[0, 4]`, piecewise-constant
/// `A` with entries in `[-1, 1]` switching at a subset of impulse times,
/// invertible jumps, piecewise-constant `f` and random offsets.
pub fn random_case(seed: u64) -> Case {
    let mut rng = rng(seed);
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(0..=6);
    let times = impulse_times(&mut rng, m);
    let schedule = ImpulseSchedule::new(times.clone(), HORIZON).unwrap();

    let breaks: Vec<f64> = times.iter().copied().filter(|_| rng.gen::<bool>()).collect();
    let values = (0..=breaks.len()).map(|_| uniform_matrix(&mut rng, n, n, -1.0, 1.0)).collect();
    let a = CoefficientOperator::new(Profile::piecewise(breaks, values).unwrap()).unwrap();
    let jumps = JumpSequence::new((0..m).map(|_| jump(&mut rng, n)).collect(), n).unwrap();
    let system = ImpulsiveSystem::new(a, jumps, schedule).unwrap();

    let f = if rng.gen_bool(0.75) {
        let brk = rng.gen_range(0.1..HORIZON - 0.1);
        let v = (0..2).map(|_| uniform_matrix(&mut rng, n, 1, -1.0, 1.0)).collect();
        Some(Profile::piecewise(vec![brk], v).unwrap())
    } else {
        None
    };
    let alphas = (0..m)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0)))
        .collect();
    let forcing = Forcing::new(n, f, alphas, HORIZON).unwrap();
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
    Case { seed, system, forcing, x0 }
}

/// Scalar `x' + a x = f`, unit-gap jumps `|B| <= 0.9`, constant `f`, offsets
/// in `[-1, 1]`: exponentially stable with bounded forcing.
pub fn random_stable_scalar(seed: u64, horizon: f64) -> Case {
    let mut rng = rng(seed);
    let a = rng.gen_range(0.2..1.5);
    let schedule = ImpulseSchedule::uniform(1.0, horizon).unwrap();
    let m = schedule.len();
    let bs: Vec<f64> = (0..m)
        .map(|_| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * rng.gen_range(0.3..0.9)
        })
        .collect();
    let system = ImpulsiveSystem::new(
        CoefficientOperator::scalar(a),
        JumpSequence::scalars(&bs),
        schedule,
    )
    .unwrap();
    let f = Profile::Constant(DMatrix::from_element(1, 1, rng.gen_range(-1.0..=1.0)));
    let alphas = (0..m).map(|_| DVector::from_element(1, rng.gen_range(-1.0..=1.0))).collect();
    let forcing = Forcing::new(1, Some(f), alphas, horizon).unwrap();
    let x0 = DVector::from_element(1, rng.gen_range(-1.0..=1.0));
    Case { seed, system, forcing, x0 }
}

/// Unit-gap scalar system `x' + a x = 0`, `x(i) = b x(i - 0)`.
pub fn unit_gap(a: f64, b: f64, horizon: f64) -> ImpulsiveSystem {
    let s = ImpulseSchedule::uniform(1.0, horizon).unwrap();
    let jumps = JumpSequence::scalars(&vec![b; s.len()]);
    ImpulsiveSystem::new(CoefficientOperator::scalar(a), jumps, s).unwrap()
}

/// Random time in `[0, horizon]`; a third of the draws land exactly on an
/// impulse time.
pub fn random_time(rng: &mut ChaCha8Rng, system: &ImpulsiveSystem) -> f64 {
    let times = system.schedule().times();
    if !times.is_empty() && rng.gen_bool(1.0 / 3.0) {
        times[rng.gen_range(0..times.len())]
    } else {
        rng.gen_range(0.0..=system.horizon())
    }
}
