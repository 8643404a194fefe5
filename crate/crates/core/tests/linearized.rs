use mflab::bubbles::Workspace;
use mflab::expr::Expr;
use mflab::fit::{fit_slope, FitSpace};
use mflab::green::{disk_oracle, DiskGreen};
use mflab::linearized::*;
use mflab::reduction::{assemble_w, BlowupConfig};
use mflab::singular_config::SingularSet;
use mflab::surface::SurfaceModel;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

const H: f64 = 0.05;
const EPS: [f64; 3] = [3e-2, 1e-2, 3e-3];

struct Fixture {
    green: DiskGreen,
    regular: SingularSet,
    singular: SingularSet,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let m = SurfaceModel::flat_disk();
        Fixture {
            green: disk_oracle(&m).unwrap(),
            regular: SingularSet::empty(&m, Expr::constant(1.0)).unwrap(),
            singular: SingularSet::new(&m, &[([0.0, 0.0], 0.5)], Expr::constant(1.0)).unwrap(),
        }
    })
}

fn regular_cfg() -> BlowupConfig<'static> {
    let f = fixture();
    BlowupConfig::new(&f.regular, &f.green, &[[0.0, 0.0]], &[], 0.05).unwrap()
}

fn singular_cfg() -> BlowupConfig<'static> {
    let f = fixture();
    BlowupConfig::new(&f.singular, &f.green, &[], &[0], 0.12).unwrap()
}

/// Runs `body` on the linearization at `eps`.
fn with_lin<R>(cfg: &BlowupConfig<'_>, eps: f64, body: impl FnOnce(&LinearizedOperator<'_, '_, '_>) -> R) -> R {
    let op = newton_operator(cfg, eps, H).unwrap();
    let ws = Workspace::new(&op, cfg.green());
    let st = assemble_w(cfg, ws, eps).unwrap();
    let lin = LinearizedOperator::new(&st).unwrap();
    body(&lin)
}

/// Smooth zero-mean test field with `‖φ‖ = norm`.
fn test_field(lin: &LinearizedOperator<'_, '_, '_>, norm: f64) -> Vec<f64> {
    let op = lin.op;
    let mut phi: Vec<f64> = op.mesh.vertices.iter().map(|x| (x[0] + 0.3) * (x[1] - 0.2) + x[0] * x[0]).collect();
    let m = op.mean(&phi);
    phi.iter_mut().for_each(|v| *v -= m);
    let s = norm / lin.h1_norm(&phi);
    phi.iter_mut().for_each(|v| *v *= s);
    phi
}

fn slope(points: &[(f64, f64)]) -> f64 {
    fit_slope(points, FitSpace::LogLog).unwrap().slope
}

#[test]
fn kernel_space_gram_and_projector() {
    with_lin(&regular_cfg(), 1e-2, |lin| {
        let ks = kernel_space(lin).unwrap();
        assert_eq!(ks.dim(), 2);
        let target = 4.0 / 3.0 * 8.0 * PI;
        for i in 0..2 {
            assert!((ks.gram[i][i] / target - 1.0).abs() < 0.03, "{:?}", ks.gram);
            assert!(ks.gram[i][1 - i].abs() < 1e-3 * target, "{:?}", ks.gram);
        }
        assert!(ks.idempotency_defect(7).unwrap() < 1e-10);
        // Projected fields are H¹-orthogonal to the kernel.
        let phi = ks.project(&test_field(lin, 1.0)).unwrap();
        for b in &ks.loads {
            assert!(b.iter().zip(&phi).map(|(a, c)| a * c).sum::<f64>().abs() < 1e-10);
        }
    });
}

#[test]
fn singular_centre_has_no_kernel() {
    with_lin(&singular_cfg(), 1e-2, |lin| assert_eq!(kernel_space(lin).unwrap().dim(), 0));
}

#[test]
fn coercivity_band_and_near_kernel() {
    let cfg = regular_cfg();
    let mut scaled = Vec::new();
    for eps in EPS {
        with_lin(&cfg, eps, |lin| {
            let ks = kernel_space(lin).unwrap();
            let with = coercivity_constant(lin, Some(&ks)).unwrap().sigma_min;
            let without = coercivity_constant(lin, None).unwrap().sigma_min;
            assert!(with > 10.0 * without, "{with} {without}");
            scaled.push(with * eps.ln().abs());
        });
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.0 && hi < 2.0 * lo, "{scaled:?}");
}

#[test]
fn newton_converges_and_phi_shrinks() {
    let cfg = singular_cfg();
    let mut norms = Vec::new();
    for eps in EPS {
        with_lin(&cfg, eps, |lin| {
            let c = newton_correct(lin, None, NewtonOptions::default()).unwrap();
            assert!(c.iterations <= 12);
            assert!(c.trace.last().unwrap().residual <= 1e-9);
            assert!((c.mass / cfg.rho_star() - 1.0).abs() < 0.01, "{}", c.mass);
            norms.push((eps, c.phi_norm));
        });
    }
    assert!(slope(&norms) >= 0.9 * 0.75, "{norms:?}");
}

#[test]
fn newton_with_projection_reports_small_multipliers() {
    with_lin(&regular_cfg(), 1e-2, |lin| {
        let ks = kernel_space(lin).unwrap();
        let c = newton_correct(lin, Some(&ks), NewtonOptions::default()).unwrap();
        assert_eq!(c.c.len(), 2);
        assert!(c.c.iter().all(|v| v.abs() < 1e-6), "{:?}", c.c);
        for b in &ks.loads {
            assert!(b.iter().zip(&c.phi).map(|(a, p)| a * p).sum::<f64>().abs() < 1e-10);
        }
    });
}

#[test]
fn divergence_carries_history() {
    with_lin(&singular_cfg(), 1e-2, |lin| {
        let opts = NewtonOptions { max_iter: 0, ..NewtonOptions::default() };
        match newton_correct(lin, None, opts) {
            Err(mflab::Error::Divergence { history, .. }) => assert_eq!(history.len(), 1),
            other => panic!("{other:?}"),
        }
    });
}

#[test]
fn operator_gap_decays() {
    for (cfg, floor) in [(regular_cfg(), 0.5), (singular_cfg(), 0.5)] {
        let pts: Vec<(f64, f64)> = EPS
            .iter()
            .map(|&eps| with_lin(&cfg, eps, |lin| (eps, lin.s_gap(&test_field(lin, 0.1), 1.05).unwrap())))
            .collect();
        assert!(slope(&pts) >= floor, "{pts:?}");
    }
}

#[test]
fn nonlinearity_is_quadratic() {
    let cfg = singular_cfg();
    let mut cs = Vec::new();
    for eps in EPS {
        with_lin(&cfg, eps, |lin| {
            for t in [0.1, 0.05, 0.01] {
                cs.push(lin.nonlinear_norm(&test_field(lin, t), 1.05).unwrap() / (t * t));
            }
        });
    }
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.0 && hi < 1.5 * lo, "{cs:?}");
}

#[test]
fn model_kernel_counts() {
    for (gamma, half, n) in [(0.0, false, 3), (0.0, true, 2), (0.5, false, 1), (0.5, true, 1)] {
        assert_eq!(model_kernel_dimension(gamma, 100.0, half).unwrap().count, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_mean_free_and_symmetric(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        with_lin(&singular_cfg(), 1e-2, |lin| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut field = || {
                let mut v: Vec<f64> = (0..lin.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let m = lin.op.mean(&v);
                v.iter_mut().for_each(|x| *x -= m);
                v
            };
            let (x, y) = (field(), field());
            for variant in [Variant::Bubbles, Variant::Full] {
                let lx = lin.apply(&x, variant);
                let ly = lin.apply(&y, variant);
                let scale: f64 = lx.iter().map(|v| v.abs()).sum();
                prop_assert!(lx.iter().sum::<f64>().abs() < 1e-12 * scale);
                let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
                prop_assert!((d(&lx, &y) - d(&ly, &x)).abs() < 1e-10 * scale);
            }
            Ok(())
        })?;
    }
}
