use cortical::imaging::{make_smooth_pattern, save_image_with_depth, BitDepth};
use cortical::io::{
    read_field_csv, read_field_png16, read_sidecar, sidecar_path, write_field_csv,
    write_field_png16,
};
use cortical::{
    load_image, reconstruct_rgb, save_image, GaussianParams, GridGeometry, HeterogeneousOperator,
    RgbImage, ScalarField, SolverConfig,
};
use proptest::prelude::*;

fn max_diff(a: &RgbImage, b: &RgbImage) -> f64 {
    (0..3)
        .map(|k| a.band(k).max_abs_diff(b.band(k)).unwrap())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn round_trip_within_one_level(
        w in 3usize..12,
        h in 3usize..12,
        values in prop::collection::vec(0.0f64..=1.0, 3 * 144),
        sixteen in any::<bool>(),
        ext in prop::sample::select(vec!["png", "ppm"]),
    ) {
        let g = GridGeometry::unit(w, h).unwrap();
        let band = |k: usize| ScalarField::from_index_fn(g, |i, j| values[k * 144 + j * 12 + i]);
        let img = RgbImage::new(band(0), band(1), band(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(format!("img.{ext}"));
        let (depth, step) = if sixteen { (BitDepth::Sixteen, 65535.0) } else { (BitDepth::Eight, 255.0) };
        save_image_with_depth(&img, &path, true, depth).unwrap();
        let back = load_image(&path).unwrap();
        prop_assert!(max_diff(&img, &back) <= 0.5 / step + 1e-12);
    }
}

#[test]
fn clipping_and_rescaling() {
    let g = GridGeometry::unit(3, 3).unwrap();
    let f = ScalarField::from_index_fn(g, |i, j| match (i, j) {
        (0, 0) => 1.2,
        (1, 0) => -0.1,
        _ => 0.5,
    });
    let img = RgbImage::from_gray(f);
    let dir = tempfile::tempdir().unwrap();
    let clipped = dir.path().join("clip.png");
    save_image(&img, &clipped, true).unwrap();
    let back = load_image(&clipped).unwrap();
    assert_eq!(back.band(0).get(0, 0), 1.0);
    assert_eq!(back.band(0).get(1, 0), 0.0);
    assert_eq!(read_sidecar(&clipped).unwrap().scale, 1.0);

    let rescaled = dir.path().join("rescale.png");
    let map = save_image(&img, &rescaled, false).unwrap();
    assert_eq!(read_sidecar(&rescaled).unwrap(), map);
    let back = load_image(&rescaled).unwrap();
    let restored = back.band(1).map(|v| map.restore(v));
    assert!(restored.max_abs_diff(img.band(1)).unwrap() <= 0.5 * 1.3 / 255.0 + 1e-12);
    assert!(sidecar_path(&rescaled).exists());
}

#[test]
fn gray_formats_duplicate_bands() {
    let g = GridGeometry::unit(5, 4).unwrap();
    let f = ScalarField::from_index_fn(g, |i, j| (i + j) as f64 / 7.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gray.pgm");
    save_image(&RgbImage::from_gray(f.clone()), &path, true).unwrap();
    let back = load_image(&path).unwrap();
    assert_eq!(back.band(0), back.band(2));
    assert!(back.band(1).max_abs_diff(&f).unwrap() <= 0.5 / 255.0 + 1e-12);
}

#[test]
fn unreadable_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_image(&dir.path().join("missing.png")).is_err());
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert!(load_image(&junk).is_err());
    let img = RgbImage::from_gray(ScalarField::zeros(GridGeometry::unit(3, 3).unwrap()));
    assert!(save_image(&img, &dir.path().join("no/such/dir.png"), true).is_err());
}

#[test]
fn field_exports_round_trip() {
    let g = GridGeometry::unit(6, 5).unwrap();
    let f = ScalarField::from_fn(g, |x, y| (x * 1.3).cos() * y - 2.0);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    write_field_csv(&f, &csv).unwrap();
    assert_eq!(read_field_csv(&csv, 1.0).unwrap(), f);
    let png = dir.path().join("f.png");
    write_field_png16(&f, &png).unwrap();
    let back = read_field_png16(&png).unwrap();
    let range = f.max() - f.min();
    assert!(back.max_abs_diff(&f).unwrap() <= 0.5 * range / 65535.0 + 1e-12);
}

#[test]
fn bands_are_processed_independently() {
    let g = GridGeometry::unit(12, 10).unwrap();
    let img = make_smooth_pattern(&g);
    let op = HeterogeneousOperator::homogeneous_laplacian(&g);
    let gauss = GaussianParams::default();
    let config = SolverConfig::for_operator(&op);
    let out = reconstruct_rgb(&op, &img, &gauss, &config).unwrap();
    let [r, gr, b] = img.clone().into_bands();
    let permuted = RgbImage::new(b, r, gr).unwrap();
    let out_p = reconstruct_rgb(&op, &permuted, &gauss, &config).unwrap();
    assert_eq!(out_p.image.band(1), out.image.band(0));
    assert_eq!(out_p.image.band(2), out.image.band(1));
    assert_eq!(out_p.image.band(0), out.image.band(2));

    let gray = RgbImage::from_gray(img.band(0).clone());
    let out = reconstruct_rgb(&op, &gray, &gauss, &config).unwrap();
    assert_eq!(out.image.band(0), out.image.band(1));
    assert_eq!(out.image.band(1), out.image.band(2));

    let flat = RgbImage::new(
        ScalarField::new(g, 0.2),
        ScalarField::new(g, 0.5),
        ScalarField::new(g, 0.9),
    )
    .unwrap();
    let out = reconstruct_rgb(&op, &flat, &gauss, &config).unwrap();
    assert!(max_diff(&out.image, &flat) < 1e-12);
}
