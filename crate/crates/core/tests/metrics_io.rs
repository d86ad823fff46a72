use std::io::Cursor;

use ndarray::Array2;
use nlcast::frame_io::{read_y4m, FrameRate};
use nlcast::metrics::mse;
use nlcast::{assemble_gops, load_y4m, mssim, psnr, write_y4m, Error, FrameSequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Array2<f64> {
    Array2::from_shape_fn((h, w), |_| rng.random_range(0..=255u8) as f64)
}

#[test]
fn y4m_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let frames: Vec<_> = (0..5).map(|_| random_frame(&mut rng, 18, 22)).collect();
    let seq = FrameSequence::new(
        22,
        18,
        FrameRate {
            num: 30000,
            den: 1001,
        },
        frames,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.y4m");
    write_y4m(&seq, &path).unwrap();
    let back = load_y4m(&path, None).unwrap();
    assert_eq!(back.width(), 22);
    assert_eq!(back.height(), 18);
    assert_eq!(
        back.frame_rate(),
        FrameRate {
            num: 30000,
            den: 1001
        }
    );
    assert_eq!(back.frames(), seq.frames());
    assert_eq!(load_y4m(&path, Some(2)).unwrap().len(), 2);
    assert!(matches!(
        load_y4m(dir.path().join("missing.y4m"), None),
        Err(Error::Io { .. })
    ));
}

#[test]
fn reads_420_and_skips_chroma() {
    let (w, h) = (5usize, 3usize);
    let chroma = 2 * w.div_ceil(2) * h.div_ceil(2);
    let mut bytes = b"YUV4MPEG2 W5 H3 F25:1 Ip A1:1 C420jpeg XYSCSS=420JPEG\n".to_vec();
    for f in 0..2u8 {
        bytes.extend_from_slice(b"FRAME\n");
        bytes.extend((0..w * h).map(|i| i as u8 + 10 * f));
        bytes.extend(std::iter::repeat_n(128u8, chroma));
    }
    let seq = read_y4m(Cursor::new(&bytes), None).unwrap();
    assert_eq!(seq.len(), 2);
    assert_eq!(seq.frames()[1][[2, 4]], 24.0);

    bytes.truncate(bytes.len() - 3);
    match read_y4m(Cursor::new(&bytes), None) {
        Err(Error::TruncatedPayload {
            frame,
            expected,
            actual,
        }) => {
            assert_eq!(frame, 1);
            assert_eq!(expected, w * h + chroma);
            assert_eq!(actual, w * h + chroma - 3);
        }
        other => panic!("expected truncation error, got {other:?}"),
    }
    let err = read_y4m(Cursor::new(b"YUV4MPEG2 W5 F25:1\n".to_vec()), None).unwrap_err();
    assert!(err.to_string().contains('H'), "{err}");
}

#[test]
fn gops_drop_partial_tail() {
    let frames = vec![Array2::zeros((8, 8)); 10];
    let seq = FrameSequence::new(8, 8, FrameRate { num: 25, den: 1 }, frames).unwrap();
    let gops = assemble_gops(&seq, 4).unwrap();
    assert_eq!(gops.len(), 2);
    assert_eq!(gops[1].origin_index, 4);
    assert_eq!(gops[0].data.dim(), (4, 8, 8));
}

#[test]
fn metric_reference_values() {
    let zero = Array2::zeros((16, 16));
    assert!(
        psnr(&zero, &Array2::from_elem((16, 16), 255.0))
            .unwrap()
            .abs()
            < 1e-3
    );
    let mut one = zero.clone();
    one[[0, 0]] = 32.0;
    assert!((psnr(&zero, &one).unwrap() - 42.111).abs() < 1e-3);
    let a = Array2::from_elem((11, 11), 100.0);
    let b = Array2::from_elem((11, 11), 110.0);
    assert!((mssim(&a, &b).unwrap() - 0.99548).abs() < 1e-3);
}

proptest! {
    #[test]
    fn mssim_symmetric_and_bounded(seed in any::<u64>(), noise in 0.0f64..80.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_frame(&mut rng, 16, 16);
        let y = x.mapv(|v| (v + rng.random_range(-noise..=noise)).clamp(0.0, 255.0));
        let s = mssim(&x, &y).unwrap();
        prop_assert!((s - mssim(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0 + 1e-12).contains(&s));
        prop_assert!((mssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_decreases_as_error_grows(seed in any::<u64>(), e in 0.5f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_frame(&mut rng, 8, 8);
        let small = x.mapv(|v| v + e);
        let large = x.mapv(|v| v + 2.0 * e);
        prop_assert!(mse(&x, &small).unwrap() < mse(&x, &large).unwrap());
        prop_assert!(psnr(&x, &small).unwrap() > psnr(&x, &large).unwrap());
    }
}
