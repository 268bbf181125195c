use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::controller::{exact_pseudoinverse, null_projector};
use crate::dynamics::{reduce_dynamics, sample_rigid_body_model, RigidBodyParams};
use crate::model::{
    constraint_matrix, forward_kinematics, lateral_residual, nullspace_basis, whole_body_jacobian,
    GeneralizedState, RobotGeometry,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub trials: usize,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

fn random_state(rng: &mut StdRng, g: &RobotGeometry) -> GeneralizedState {
    let q_n = g
        .joint_limits
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect();
    GeneralizedState::new(
        [
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-10.0..10.0),
        ],
        [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)],
        q_n,
    )
}

/// Runs the model invariants on random states of `g`: constraint
/// annihilation, lateral no-slip of lifted velocities, Jacobian against a
/// central difference of forward kinematics, and null-projector properties.
/// With `dynamics`, also checks that the reduced inertia is symmetric PD.
pub fn check_geometry(
    g: &RobotGeometry,
    dynamics: Option<&RigidBodyParams>,
    seed: u64,
    trials: usize,
) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst_as = 0.0f64;
    let mut worst_lat = 0.0f64;
    let mut worst_jac = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut worst_jn = 0.0f64;
    let mut worst_penrose = 0.0f64;
    let mut worst_sym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut rank_ok = true;
    let h = 1e-6;
    for _ in 0..trials {
        let q = random_state(&mut rng, g);
        let a = constraint_matrix(&q, g);
        let s = nullspace_basis(&q, g);
        worst_as = worst_as.max((&a * &s).amax());
        rank_ok &= s.rank(1e-9) == g.actuated_dim() && a.rank(1e-9) == 3;

        let xi = nalgebra::DVector::from_fn(g.actuated_dim(), |_, _| rng.gen_range(-1.0..1.0));
        let q_dot = &s * &xi;
        worst_lat = worst_lat.max(lateral_residual(q.phi, &q_dot, g.rho));

        let jx = whole_body_jacobian(&q, g) * &xi;
        let shifted = |sign: f64| {
            let v = q.to_vector() + &q_dot * (sign * h);
            forward_kinematics(&GeneralizedState::from_vector(&v).unwrap(), g)
        };
        let (up, down) = (shifted(1.0), shifted(-1.0));
        let lin = (up.position - down.position) / (2.0 * h);
        let ang = (up.orientation * down.orientation.inverse()).scaled_axis() / (2.0 * h);
        let fd = nalgebra::DVector::from_vec(vec![lin.x, lin.y, lin.z, ang.x, ang.y, ang.z]);
        let scale = jx.norm().max(1e-9);
        worst_jac = worst_jac.max((&fd - &jx).norm() / scale);

        let j = whole_body_jacobian(&q, g);
        let n = null_projector(&j);
        worst_idem = worst_idem.max((&n * &n - &n).amax());
        worst_jn = worst_jn.max((&j * &n).amax());
        let p = exact_pseudoinverse(&j);
        worst_penrose = worst_penrose.max(penrose_residual(&j, &p));

        if let Some(params) = dynamics {
            if let Ok(full) = sample_rigid_body_model(&q, &q_dot, g, params) {
                if let Ok(red) = reduce_dynamics(&q, &q_dot, &full, g) {
                    let m = &red.inertia_xi;
                    worst_sym = worst_sym.max((m - m.transpose()).amax());
                    let e = m.clone().symmetric_eigenvalues().min();
                    min_eig = min_eig.min(e);
                } else {
                    min_eig = f64::NEG_INFINITY;
                }
            } else {
                min_eig = f64::NEG_INFINITY;
            }
        }
    }
    let item = |name, worst: f64, tolerance| CheckItem {
        name,
        passed: worst < tolerance,
        worst,
        tolerance,
    };
    let mut items = vec![
        item("constraint_annihilation |A S|", worst_as, 1e-12),
        CheckItem {
            name: "rank(A) = 3, rank(S) = 2 + n",
            passed: rank_ok,
            worst: if rank_ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
        },
        item("lateral_no_slip residual", worst_lat, 1e-12),
        item("jacobian_vs_finite_difference (relative)", worst_jac, 1e-5),
        item("projector_idempotence |N N - N|", worst_idem, 1e-9),
        item("projector_annihilation |J N|", worst_jn, 1e-9),
        item("penrose_conditions", worst_penrose, 1e-9),
    ];
    if dynamics.is_some() {
        items.push(item("reduced_inertia_symmetry", worst_sym, 1e-10));
        items.push(CheckItem {
            name: "reduced_inertia_positive_definite",
            passed: min_eig > 0.0,
            worst: min_eig,
            tolerance: 0.0,
        });
    }
    CheckReport { trials, items }
}

/// Largest residual of the four Penrose conditions.
pub(crate) fn penrose_residual(j: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let jp = j * p;
    let pj = p * j;
    [
        (&jp * j - j).amax(),
        (&pj * p - p).amax(),
        (&jp - jp.transpose()).amax(),
        (&pj - pj.transpose()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
