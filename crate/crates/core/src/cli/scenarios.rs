//! Built-in scenario corpus.
//!
//! All runs start with the vehicles at `(-10, 5)` and `(10, 5)` and use the
//! gains `kappa_xi = kappa_eta = 1`, `kappa_c = 0.1` with the goal
//! `(xi*, eta*) = (1.2, pi/2)`. Stationary targets use `c* = 40`, moving
//! targets `c* = 20`. The sharp-turn path of `fig5` is a representative
//! zig-zag, not a reproduction of a specific published path.

use std::f64::consts::FRAC_PI_2;

use crate::controller::{FormationGoal, Gains};
use crate::geometry::Vec2;
use crate::sim::{Scenario, SimState, TargetTrajectory};

pub const NAMES: [&str; 6] = ["fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5"];

pub const DEFAULT_DT: f64 = 0.01;

fn reference_gains() -> Gains {
    Gains {
        kappa_c: 0.1,
        kappa_eta: 1.0,
        kappa_xi: 1.0,
    }
}

fn scenario(p_t: Vec2, c_star: f64, trajectory: TargetTrajectory, t_end: f64) -> Scenario {
    Scenario {
        initial: SimState {
            t: 0.0,
            p_l: Vec2::new(-10.0, 5.0),
            p_r: Vec2::new(10.0, 5.0),
            p_t,
        },
        goal: FormationGoal {
            xi_star: 1.2,
            eta_star: FRAC_PI_2,
            c_star,
        },
        gains: reference_gains(),
        trajectory,
        dt: DEFAULT_DT,
        t_end,
        seed: 0,
    }
}

const STATIONARY_T_END: f64 = 600.0;
const MOVING_T_END: f64 = 400.0;

/// Built-in scenario by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    let s = match name {
        // target above the baseline
        "fig3a" => scenario(
            Vec2::new(15.0, 25.0),
            40.0,
            TargetTrajectory::Stationary,
            STATIONARY_T_END,
        ),
        // target below the baseline
        "fig3b" => scenario(
            Vec2::new(-15.0, -15.0),
            40.0,
            TargetTrajectory::Stationary,
            STATIONARY_T_END,
        ),
        // target at the midpoint of the pair
        "fig3c" => scenario(
            Vec2::new(0.0, 5.0),
            40.0,
            TargetTrajectory::Stationary,
            STATIONARY_T_END,
        ),
        // target on the baseline extension, beyond the right vehicle
        "fig3d" => scenario(
            Vec2::new(30.0, 5.0),
            40.0,
            TargetTrajectory::Stationary,
            STATIONARY_T_END,
        ),
        "fig4" => scenario(
            Vec2::new(100.0, 50.0),
            20.0,
            TargetTrajectory::Circular {
                center: Vec2::new(100.0, 100.0),
                radius: 50.0,
                speed: 5.0,
            },
            MOVING_T_END,
        ),
        "fig5" => scenario(
            Vec2::new(100.0, 50.0),
            20.0,
            TargetTrajectory::Waypoints {
                points: vec![
                    Vec2::new(100.0, 50.0),
                    Vec2::new(400.0, 350.0),
                    Vec2::new(700.0, 50.0),
                    Vec2::new(1000.0, 350.0),
                    Vec2::new(1300.0, 50.0),
                ],
                speed: 5.0,
            },
            MOVING_T_END,
        ),
        _ => return None,
    };
    Some(s)
}
