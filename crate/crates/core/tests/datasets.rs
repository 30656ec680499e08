use geodesic_core::datasets::{
    embed_orthogonal, gen_curly, gen_hemisphere, gen_semicircle, gen_sphere, gen_two_moons, orthogonal_map,
    CURLY_MIRROR_X, TWO_MOONS_OFFSET,
};
use geodesic_core::Dataset;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn assert_standardized(d: &Dataset) {
    let n = d.len() as f64;
    for j in 0..d.dim() {
        let col = d.points.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
        assert!((var - 1.0).abs() < 1e-10, "column {j} variance {var}");
    }
}

fn pairwise(points: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.nrows() {
        for j in i + 1..points.nrows() {
            out.push((points.row(i) - points.row(j)).norm());
        }
    }
    out
}

#[test]
fn noisy_semicircle_stays_near_the_circle() {
    let d = gen_semicircle(200, 0.01, 42).unwrap();
    assert_eq!((d.len(), d.dim()), (200, 2));
    let worst = (0..d.len()).map(|i| (d.point(i).norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 0.6, "{worst}");
}

#[test]
fn noiseless_semicircle_is_exact() {
    let d = gen_semicircle(100, 0.0, 1).unwrap();
    for i in 0..d.len() {
        let p = d.point(i);
        assert!((p.norm() - 1.0).abs() < 1e-15);
        assert!(p[1] >= 0.0);
    }
}

#[test]
fn noise_variance_not_standard_deviation() {
    let clean = gen_semicircle(5000, 0.0, 8).unwrap();
    let noisy = gen_semicircle(5000, 0.01, 8).unwrap();
    let diff = &noisy.points - &clean.points;
    let var = diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64;
    assert!((var - 0.01).abs() < 0.001, "{var}");
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(gen_semicircle(50, 0.01, 3).unwrap(), gen_semicircle(50, 0.01, 3).unwrap());
    assert_eq!(gen_curly(50, 0.01, 3).unwrap(), gen_curly(50, 0.01, 3).unwrap());
    assert_eq!(gen_two_moons(50, 0.01, 3).unwrap(), gen_two_moons(50, 0.01, 3).unwrap());
    assert_eq!(gen_sphere(50, 0.01, 3).unwrap(), gen_sphere(50, 0.01, 3).unwrap());
    assert_ne!(gen_semicircle(50, 0.01, 3).unwrap().points, gen_semicircle(50, 0.01, 4).unwrap().points);
}

#[test]
fn empty_datasets_are_rejected() {
    assert!(gen_semicircle(0, 0.0, 1).is_err());
    assert!(gen_semicircle(10, -1.0, 1).is_err());
}

#[test]
fn curly_mirrors_the_lower_half() {
    let d = gen_curly(300, 0.0, 5).unwrap();
    assert_standardized(&d);
    let raw = d.raw_points();
    let mut lower = 0;
    for row in raw.row_iter() {
        let (x, y) = (row[0], row[1]);
        if y < -1e-9 {
            lower += 1;
            let cx = 2.0 * CURLY_MIRROR_X;
            assert!(((x - cx).hypot(y) - 1.0).abs() < 1e-9);
        } else {
            assert!((x.hypot(y) - 1.0).abs() < 1e-9);
        }
    }
    assert!(lower > 100);
}

#[test]
fn two_moons_lower_half_is_translated() {
    let d = gen_two_moons(300, 0.0, 6).unwrap();
    assert_standardized(&d);
    let [dx, dy] = TWO_MOONS_OFFSET;
    for row in d.raw_points().row_iter() {
        let (x, y) = (row[0], row[1]);
        let upper = (x.hypot(y) - 1.0).abs() < 1e-9 && y >= -1e-9;
        let lower = ((x - dx).hypot(y - dy) - 1.0).abs() < 1e-9 && y - dy <= 1e-9;
        assert!(upper || lower, "({x}, {y}) lies on neither moon");
    }
}

#[test]
fn spheres_have_unit_radius() {
    for d in [gen_sphere(200, 0.0, 7).unwrap(), gen_hemisphere(200, 0.0, 7).unwrap()] {
        assert_standardized(&d);
        for row in d.raw_points().row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
    }
    let hemi = gen_hemisphere(200, 0.0, 7).unwrap().raw_points();
    assert!(hemi.column(2).iter().all(|&z| z >= 0.0));
}

#[test]
fn standardization_is_idempotent() {
    let once = gen_semicircle(200, 0.01, 42).unwrap().standardize();
    assert_standardized(&once);
    let twice = once.standardize();
    assert!((&twice.points - &once.points).amax() < 1e-12);
    assert!((twice.raw_points() - once.raw_points()).amax() < 1e-12);
}

#[test]
fn orthogonal_map_has_orthonormal_columns() {
    let q = orthogonal_map(2, 10, 42).unwrap();
    assert_eq!(q.shape(), (10, 2));
    assert!((q.tr_mul(&q) - DMatrix::identity(2, 2)).amax() < 1e-12);
    assert!(orthogonal_map(3, 2, 1).is_err());
}

#[test]
fn same_dimension_map_preserves_distances() {
    let d = gen_semicircle(40, 0.01, 2).unwrap();
    let q = orthogonal_map(2, 2, 9).unwrap();
    let mapped = &d.points * q.transpose();
    for (a, b) in pairwise(&d.points).iter().zip(pairwise(&mapped)) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn embedded_data_has_rank_two() {
    let d = gen_semicircle(60, 0.01, 2).unwrap();
    let q = orthogonal_map(2, 5, 13).unwrap();
    let mapped = &d.points * q.transpose();
    let mean = mapped.row_mean();
    let centered = DMatrix::from_fn(mapped.nrows(), 5, |i, j| mapped[(i, j)] - mean[j]);
    let sv = centered.singular_values();
    let rank = sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count();
    assert_eq!(rank, 2);
}

#[test]
fn embedding_is_standardized_and_deterministic() {
    let base = gen_semicircle(200, 0.01, 42).unwrap().standardize();
    let a = embed_orthogonal(&base, 10, 0.0, 42).unwrap();
    assert_eq!(a.dim(), 10);
    assert_standardized(&a);
    let b = embed_orthogonal(&base, 10, 0.01, 42).unwrap();
    assert_eq!(b, embed_orthogonal(&base, 10, 0.01, 42).unwrap());
    assert!(embed_orthogonal(&base, 1, 0.0, 42).is_err());
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen_two_moons(25, 0.01, 4).unwrap();
    for header in [false, true] {
        let path = dir.path().join(format!("moons_{header}.csv"));
        d.write_csv(&path, header).unwrap();
        let back = Dataset::read_csv(&path, header, d.seed).unwrap();
        assert_eq!(back.points, d.points);
    }
    let text = std::fs::read_to_string(dir.path().join("moons_true.csv")).unwrap();
    assert!(text.starts_with("x0,x1\n"));
}

#[test]
fn csv_rejects_ragged_and_garbage_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    assert!(Dataset::read_csv(&ragged, false, 0).is_err());
    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "1,abc\n").unwrap();
    assert!(Dataset::read_csv(&garbage, false, 0).is_err());
    assert!(Dataset::read_csv(dir.path().join("missing.csv"), false, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn standardize_any_dataset(seed in 0u64..10_000, n in 2usize..100, var in 0.0f64..0.5) {
        let d = gen_two_moons(n, var, seed).unwrap();
        prop_assert!(d.points.iter().all(|v| v.is_finite()));
        let again = d.standardize();
        prop_assert!((&again.points - &d.points).amax() < 1e-9);
        prop_assert!((again.raw_points() - d.raw_points()).amax() < 1e-9);
    }
}
