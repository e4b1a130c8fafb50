mod common;

use common::{riemann_oracle, sphere_riemann, warped_plane, warped_space};
use finsler::connection::structural_residuals;
use finsler::curvature::{contraction_residual, h_curvature_at, ricci_of, scalar_of, vh_torsion_at};
use finsler::metric::{self, riemannian, MetricField};
use finsler::{ChartPoint, FinslerStructure, LocalGeometry};
use proptest::prelude::*;

fn geo(s: &FinslerStructure, p: &ChartPoint) -> LocalGeometry {
    LocalGeometry::new(s, p).expect("admissible point")
}

fn sample_strategy(s: FinslerStructure) -> impl Strategy<Value = ChartPoint> {
    any::<u64>().prop_map(move |seed| s.sample(1, seed).unwrap().remove(0))
}

fn all_structures() -> Vec<FinslerStructure> {
    let mut v = metric::catalog();
    v.push(metric::euclidean(3));
    v.push(metric::minkowski_quartic(3));
    v.push(riemannian("warped3", 3, warped_space()));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structural_certificates_hold(k in 0usize..8, seed in any::<u64>()) {
        let s = &all_structures()[k];
        let p = s.sample(1, seed).unwrap().remove(0);
        let r = structural_residuals(&geo(s, &p));
        prop_assert!(r.max() < 1e-8, "{}: {r:?}", s.name());
    }

    #[test]
    fn vh_torsion_is_antisymmetric_and_one_homogeneous(k in 0usize..8, seed in any::<u64>(), lambda in 0.4f64..2.5) {
        let s = &all_structures()[k];
        let p = s.sample(1, seed).unwrap().remove(0);
        let r = vh_torsion_at(&geo(s, &p));
        let n = s.dim();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    prop_assert!((r.get(i, j, l) + r.get(i, l, j)).abs() < 1e-12 * r.max_abs().max(1.0));
                }
            }
        }
        let rs = vh_torsion_at(&geo(s, &p.scaled(lambda)));
        for (a, b) in r.as_slice().iter().zip(rs.as_slice()) {
            prop_assert!((b - lambda * a).abs() < 1e-9 * r.max_abs().max(1.0));
        }
    }

    #[test]
    fn contraction_holds_everywhere(k in 0usize..8, seed in any::<u64>()) {
        let s = &all_structures()[k];
        let p = s.sample(1, seed).unwrap().remove(0);
        let g = geo(s, &p);
        let rhat = vh_torsion_at(&g);
        let r = h_curvature_at(&g, &rhat);
        prop_assert!(contraction_residual(&g, &r, &rhat) < 1e-9);
    }

    #[test]
    fn sphere_matches_closed_form(p in sample_strategy(metric::round_sphere())) {
        let g = geo(&metric::round_sphere(), &p);
        let r = h_curvature_at(&g, &vh_torsion_at(&g));
        for i in 0..2 {
            for h in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let expect = -sphere_riemann(&p.x, i, h, j, k);
                        prop_assert!((r.get(i, h, j, k) - expect).abs() < 1e-9);
                    }
                }
            }
        }
        let sc = scalar_of(&g.metric_inverse_value(), &ricci_of(&r));
        prop_assert!((sc - 2.0).abs() < 1e-9);
    }
}

fn check_riemannian_oracle(name: &str, a: MetricField, n: usize) {
    let s = riemannian(name, n, a.clone());
    for p in s.sample(10, 3).unwrap() {
        let o = riemann_oracle(&a, &p.x);
        let g = geo(&s, &p);
        let f = g.coefficients_value();
        let nn = g.barthel_value();
        let spray = g.spray_value();
        let mut scale: f64 = 1.0;
        for i in 0..n {
            let mut gi = 0.0;
            for j in 0..n {
                let mut nij = 0.0;
                for k in 0..n {
                    assert!((f.get(i, j, k) - o.gamma(i, j, k)).abs() < 1e-10, "{name}: F");
                    nij += o.gamma(i, j, k) * p.y[k];
                    gi += 0.5 * o.gamma(i, j, k) * p.y[j] * p.y[k];
                }
                assert!((nn[(i, j)] - nij).abs() < 1e-10, "{name}: N");
            }
            assert!((spray[i] - gi).abs() < 1e-10, "{name}: G");
        }
        let rhat = vh_torsion_at(&g);
        let r = h_curvature_at(&g, &rhat);
        for i in 0..n {
            for h in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let expect = -o.riemann(i, h, j, k);
                        scale = scale.max(expect.abs());
                        assert!((r.get(i, h, j, k) - expect).abs() < 1e-9, "{name}: R at {p}");
                    }
                }
            }
        }
        let ric = ricci_of(&r);
        let ric_o = o.ricci();
        for j in 0..n {
            for h in 0..n {
                assert!((ric[(j, h)] - ric_o[(h, j)]).abs() < 1e-9 * scale, "{name}: Ric");
            }
        }
        let sc = scalar_of(&g.metric_inverse_value(), &ric);
        assert!((sc - o.scalar()).abs() < 1e-9 * scale, "{name}: Sc");
    }
}

#[test]
fn riemannian_objects_match_levi_civita_oracle() {
    check_riemannian_oracle("warped2", warped_plane(), 2);
    check_riemannian_oracle("warped3", warped_space(), 3);
    let sphere = MetricField::new(|x| {
        let f = metric::stereographic_factor(x);
        let z = f.constant_like(0.0);
        vec![vec![f.clone(), z.clone()], vec![z, f]]
    });
    check_riemannian_oracle("sphere", sphere, 2);
}

#[test]
fn warped_plane_curvature_is_not_constant() {
    let s = riemannian("warped2", 2, warped_plane());
    let sc: Vec<f64> = s
        .sample(6, 9)
        .unwrap()
        .iter()
        .map(|p| {
            let g = geo(&s, p);
            scalar_of(&g.metric_inverse_value(), &ricci_of(&h_curvature_at(&g, &vh_torsion_at(&g))))
        })
        .collect();
    let spread = sc.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - sc.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread > 1e-3, "{sc:?}");
}

#[test]
fn flat_structures_have_no_curvature() {
    for s in [metric::euclidean(2), metric::minkowski_quartic(2), metric::minkowski_quartic(3)] {
        for p in s.sample(20, 2).unwrap() {
            let g = geo(&s, &p);
            let rhat = vh_torsion_at(&g);
            assert!(rhat.max_abs() < 1e-9, "{}", s.name());
            assert!(h_curvature_at(&g, &rhat).max_abs() < 1e-8, "{}", s.name());
        }
    }
}

/// `δ_k N^i_j − δ_j N^i_k` from central differences of `N` at perturbed
/// points, with `δ_k = ∂_k − N^m_k ∂̇_m`.
fn fd_vh_torsion(s: &FinslerStructure, p: &ChartPoint) -> Vec<f64> {
    let n = s.dim();
    let h = 1e-3;
    let n_at = |q: &ChartPoint| finsler::connection::barthel(s, q).unwrap().0;
    let shifted = |v: usize, t: f64| {
        let mut q = p.clone();
        if v < n {
            q.x[v] += t;
        } else {
            q.y[v - n] += t;
        }
        n_at(&q)
    };
    let central = |v: usize, h: f64| (shifted(v, h) - shifted(v, -h)) / (2.0 * h);
    let d: Vec<_> = (0..2 * n)
        .map(|v| (central(v, h / 2.0) * 4.0 - central(v, h)) / 3.0)
        .collect();
    let nn = n_at(p);
    let delta = |k: usize, i: usize, j: usize| {
        let mut v = d[k][(i, j)];
        for m in 0..n {
            v -= nn[(m, k)] * d[n + m][(i, j)];
        }
        v
    };
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = delta(k, i, j) - delta(j, i, k);
            }
        }
    }
    out
}

#[test]
fn vh_torsion_survives_finite_difference_rederivation() {
    for s in [metric::round_sphere(), metric::randers_sphere(), metric::conformal_quartic()] {
        for p in s.sample(5, 13).unwrap() {
            let fd = fd_vh_torsion(&s, &p);
            let ad = vh_torsion_at(&geo(&s, &p));
            let n = s.dim();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = fd[(i * n + j) * n + k];
                        let scale = v.abs().max(1.0);
                        assert!((v - ad.get(i, j, k)).abs() / scale < 1e-6, "{}: {v} vs {}", s.name(), ad.get(i, j, k));
                        assert!((v + fd[(i * n + k) * n + j]).abs() / scale < 1e-6);
                    }
                }
            }
        }
    }
}
