use nsk_core::entropy::{entropy_residual, EntropyPair, MechanicalEnergy, ResidualWindow, TestFunction, WeakEntropy};
use nsk_core::riemann::{godunov_trajectory, solve_riemann, Primitive};
use nsk_core::trajectory::Trajectory;
use nsk_core::{FarField, FluidParams, Formulation, Grid1D, State};

const T_END: f64 = 0.6;

fn colliding() -> (FluidParams, FarField, Grid1D) {
    let p = FluidParams::kinetic(2.0, 0.0).unwrap();
    let far = FarField::new(1.0, 0.5, 1.0, -0.5, 0.25).unwrap();
    let grid = Grid1D::new(-1.0, 1.0, 400).unwrap();
    (p, far, grid)
}

fn godunov_shocks() -> Trajectory {
    let (p, far, grid) = colliding();
    let s0 = far.riemann_state(&grid, Formulation::Euler);
    let snaps: Vec<f64> = (1..16).map(|k| T_END * k as f64 / 16.0).collect();
    godunov_trajectory(&s0, &far, &p, &grid, T_END, 0.9, &snaps)
        .unwrap()
        .trajectory
}

/// Cell-centre samples of the exact self-similar solution.
fn exact_shocks() -> Trajectory {
    let (p, far, grid) = colliding();
    let sol = solve_riemann(Primitive::new(1.0, 0.5), Primitive::new(1.0, -0.5), &p).unwrap();
    let at = |t: f64| {
        let (rho, mom): (Vec<f64>, Vec<f64>) = (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                let s = if t == 0.0 {
                    Primitive::new(1.0, if x < 0.0 { 0.5 } else { -0.5 })
                } else {
                    sol.sample(x / t)
                };
                (s.rho, s.momentum())
            })
            .unzip();
        State::new(rho, mom, Formulation::Euler, t).unwrap()
    };
    let mut traj = Trajectory::new(at(0.0), grid, far, p);
    for k in 1..=16 {
        traj.push_snapshot(at(T_END * k as f64 / 16.0));
    }
    traj
}

fn pairs(p: FluidParams) -> Vec<Box<dyn EntropyPair>> {
    vec![
        Box::new(MechanicalEnergy { params: p }),
        Box::new(WeakEntropy::new(TestFunction::HalfSquare, &p).unwrap()),
    ]
}

#[test]
fn godunov_shocks_satisfy_the_entropy_inequality() {
    let traj = godunov_shocks();
    let w = ResidualWindow::for_grid(&traj.grid);
    for pair in pairs(traj.params) {
        let r = entropy_residual(&traj, pair.as_ref(), w).unwrap();
        assert!(r.max_positive <= 1e-8 * r.scale, "{r:?}");
        assert!(r.min_value < -r.tolerance, "shocks must dissipate: {r:?}");
        assert!(r.pass);
    }
}

#[test]
fn expansion_shocks_are_flagged() {
    let traj = godunov_shocks().time_reversed();
    let w = ResidualWindow::for_grid(&traj.grid);
    for pair in pairs(traj.params) {
        let r = entropy_residual(&traj, pair.as_ref(), w).unwrap();
        assert!(r.max_positive > r.tolerance, "{r:?}");
        assert!(!r.pass);
    }
}

#[test]
fn exact_solution_residual_is_antisymmetric_under_reversal() {
    let traj = exact_shocks();
    let w = ResidualWindow::for_grid(&traj.grid);
    let pair = MechanicalEnergy { params: traj.params };
    let fwd = entropy_residual(&traj, &pair, w).unwrap();
    let rev = entropy_residual(&traj.time_reversed(), &pair, w).unwrap();
    assert!(fwd.max_positive <= 1e-12 * fwd.scale);
    assert!((rev.max_positive + fwd.min_value).abs() <= 1e-12 * fwd.scale);
}

#[test]
fn constant_trajectory_has_zero_residual() {
    let p = FluidParams::kinetic(1.8, 0.0).unwrap();
    let far = FarField::new(1.3, 0.2, 1.3, 0.2, 0.25).unwrap();
    let grid = Grid1D::new(-1.0, 1.0, 64).unwrap();
    let mut traj = Trajectory::new(State::uniform(64, 1.3, 0.2, Formulation::Euler), grid, far, p);
    for k in 1..=12 {
        let mut s = State::uniform(64, 1.3, 0.2, Formulation::Euler);
        s.time = 0.1 * k as f64;
        traj.push_snapshot(s);
    }
    let r = entropy_residual(&traj, &MechanicalEnergy { params: p }, ResidualWindow::for_grid(&grid)).unwrap();
    assert!(r.max_positive < 1e-14 && r.min_value > -1e-14, "{r:?}");
}

#[test]
fn degenerate_windows_are_rejected() {
    let traj = exact_shocks();
    let pair = MechanicalEnergy { params: traj.params };
    let w = ResidualWindow {
        temporal_hats: 1,
        ..ResidualWindow::for_grid(&traj.grid)
    };
    assert!(entropy_residual(&traj, &pair, w).is_err());
    let w = ResidualWindow {
        x_a: 0.5,
        x_b: 0.5,
        ..ResidualWindow::for_grid(&traj.grid)
    };
    assert!(entropy_residual(&traj, &pair, w).is_err());
}
