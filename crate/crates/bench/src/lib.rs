//! Fixtures shared by the benchmarks.

use impulsive_core::{
    CoefficientOperator, Forcing, ImpulseSchedule, ImpulsiveSystem, JumpSequence, Profile,
};
use nalgebra::{DMatrix, DVector};

/// A damped rotation in `n` dimensions with unit-gap impulses that scale by
/// 0.9, over `[0, horizon]`.
pub fn damped_rotation(n: usize, horizon: f64) -> (ImpulsiveSystem, Forcing) {
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.1
        } else if j == (i + 1) % n {
            1.0
        } else if i == (j + 1) % n {
            -1.0
        } else {
            0.0
        }
    });
    let schedule = ImpulseSchedule::uniform(1.0, horizon).expect("valid schedule");
    let count = schedule.len();
    let jumps = JumpSequence::repeat(DMatrix::identity(n, n) * 0.9, count).expect("valid jumps");
    let system = ImpulsiveSystem::new(
        CoefficientOperator::constant(a).expect("square"),
        jumps,
        schedule,
    )
    .expect("consistent system");
    let f = Profile::Constant(DMatrix::from_element(n, 1, 0.1));
    let forcing = Forcing::new(n, Some(f), vec![DVector::from_element(n, 0.01); count], horizon)
        .expect("consistent forcing");
    (system, forcing)
}
