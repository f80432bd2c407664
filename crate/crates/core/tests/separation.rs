#![allow(clippy::needless_range_loop)]

mod common;

use common::Gen;
use overiva_core::model::{noise_covariance, weighted_covariances_bin, Ridge};
use overiva_core::optimizer::oc_residual;
use overiva_core::{run, run_with, CMatrix, Method, RunConfig, RunHooks, Spectrogram, WzUpdate, C64};

/// Two independent sources with frame-wise varying power, mixed by a
/// random matrix per bin into `m` channels plus weak isotropic noise.
fn mixture(g: &mut Gen, bins: usize, frames: usize, m: usize, k: usize) -> Spectrogram {
    let env: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..frames).map(|_| 0.05 + 4.0 * g.uniform().powi(3)).collect())
        .collect();
    let mut x = Spectrogram::zeros(bins, frames, m);
    for f in 0..bins {
        let a = g.matrix(m, k);
        for t in 0..frames {
            let s: Vec<C64> = (0..k).map(|j| g.complex() * env[j][t].sqrt()).collect();
            let frame = x.frame_mut(f, t);
            for (i, v) in frame.iter_mut().enumerate() {
                *v = (0..k).map(|j| a[(i, j)] * s[j]).sum::<C64>() + g.complex() * 0.05;
            }
        }
    }
    x
}

#[test]
fn full_wz_mode_decreases_cost_monotonically() {
    let mut g = Gen::new(20);
    for (m, k) in [(3, 1), (4, 2), (3, 2)] {
        let x = mixture(&mut g, 16, 120, m, k);
        for method in [Method::Ip1, Method::Ip3, Method::AuxIva] {
            let cfg = RunConfig {
                iterations: 30,
                eps2: 1e-6,
                wz_update: WzUpdate::Full,
                ..RunConfig::new(method)
            };
            let res = run(&x, k, &cfg).unwrap();
            for p in res.cost_trace.windows(2) {
                assert!(
                    p[1] - p[0] <= 1e-8 * p[0].abs(),
                    "{method} m={m} k={k}: {} -> {}",
                    p[0],
                    p[1]
                );
            }
        }
    }
}

#[test]
fn fast_and_full_modes_produce_the_same_images() {
    let mut g = Gen::new(21);
    let x = mixture(&mut g, 8, 80, 4, 2);
    let fast = run(
        &x,
        2,
        &RunConfig {
            iterations: 10,
            ..RunConfig::new(Method::Ip1)
        },
    )
    .unwrap();
    let full = run(
        &x,
        2,
        &RunConfig {
            iterations: 10,
            wz_update: WzUpdate::Full,
            ..RunConfig::new(Method::Ip1)
        },
    )
    .unwrap();
    for (a, b) in fast.images.iter().zip(&full.images) {
        let d: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum();
        assert!(d.sqrt() <= 1e-8 * a.power().sqrt());
    }
}

#[test]
fn images_sum_to_observation_under_auxiva_with_all_outputs() {
    let mut g = Gen::new(22);
    let x = mixture(&mut g, 6, 60, 3, 2);
    let res = run(
        &x,
        3,
        &RunConfig {
            iterations: 5,
            ..RunConfig::new(Method::AuxIva)
        },
    )
    .unwrap();
    let mut sum = Spectrogram::zeros(6, 60, 3);
    for img in &res.images {
        for (s, v) in sum.as_mut_slice().iter_mut().zip(img.as_slice()) {
            *s += v;
        }
    }
    let err: f64 = sum
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    assert!(err.sqrt() <= 1e-9 * x.power().sqrt());
}

#[test]
fn ip2_recovers_a_single_dominant_source() {
    let mut g = Gen::new(23);
    let x = mixture(&mut g, 8, 200, 3, 1);
    let res = run(&x, 1, &RunConfig::new(Method::Ip2)).unwrap();
    assert_eq!(res.cost_trace.len(), 3);
    // The target spans a rank-one subspace per bin, so its image explains
    // almost all of the observed power.
    assert!(res.images[0].power() >= 0.95 * x.power());
}

struct Recorder {
    k: usize,
    x: Spectrogram,
    worst_oc: f64,
    calls: usize,
}

impl RunHooks for Recorder {
    fn observes_wz(&self) -> bool {
        true
    }

    fn after_wz_update(&mut self, _: usize, bin: usize, w: &CMatrix, gz: &CMatrix) {
        self.calls += 1;
        assert_eq!(&noise_covariance(&self.x)[bin], gz);
        self.worst_oc = self.worst_oc.max(oc_residual(w, gz, self.k));
    }
}

#[test]
fn orthogonality_constraint_holds_after_every_update() {
    let mut g = Gen::new(24);
    let x = mixture(&mut g, 6, 80, 4, 2);
    for method in [Method::Ip1, Method::Ip3] {
        let mut rec = Recorder {
            k: 2,
            x: x.clone(),
            worst_oc: 0.0,
            calls: 0,
        };
        run_with(
            &x,
            2,
            &RunConfig {
                iterations: 10,
                ..RunConfig::new(method)
            },
            &mut rec,
        )
        .unwrap();
        assert!(rec.calls > 0);
        assert!(rec.worst_oc <= 1e-10, "{method}: {}", rec.worst_oc);
    }
}

#[test]
fn variances_are_normalized_after_run() {
    let mut g = Gen::new(25);
    let x = mixture(&mut g, 6, 80, 3, 1);
    let res = run(
        &x,
        1,
        &RunConfig {
            iterations: 5,
            ..RunConfig::new(Method::Ip1)
        },
    )
    .unwrap();
    let mean = res.variances.mean(0);
    assert!((mean - 1.0).abs() < 1e-12);
    let _ = weighted_covariances_bin(&x, 0, &res.variances, Ridge::none());
}

#[test]
fn runs_are_deterministic() {
    let mut g = Gen::new(26);
    let x = mixture(&mut g, 6, 80, 4, 2);
    for method in Method::ALL {
        let k = if method == Method::Ip2 { 1 } else { 2 };
        let cfg = RunConfig {
            iterations: 4,
            ..RunConfig::new(method)
        };
        let a = run(&x, k, &cfg).unwrap();
        let b = run(&x, k, &cfg).unwrap();
        assert_eq!(a.demixing, b.demixing);
        assert_eq!(a.cost_trace, b.cost_trace);
    }
}

#[cfg(feature = "parallel")]
#[test]
fn parallel_matches_sequential() {
    let mut g = Gen::new(27);
    let x = mixture(&mut g, 12, 80, 4, 2);
    for method in [Method::Ip1, Method::Ip3, Method::AuxIva] {
        let seq = run(
            &x,
            2,
            &RunConfig {
                iterations: 5,
                ..RunConfig::new(method)
            },
        )
        .unwrap();
        let par = run(
            &x,
            2,
            &RunConfig {
                iterations: 5,
                parallel: true,
                ..RunConfig::new(method)
            },
        )
        .unwrap();
        for (a, b) in seq.demixing.matrices().iter().zip(par.demixing.matrices()) {
            assert!((a - b).fro_norm() <= 1e-10 * a.fro_norm());
        }
    }
}
