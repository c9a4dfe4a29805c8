use std::collections::BTreeMap;
use std::path::Path;

use memfuse::av::*;
use memfuse::model::VideoId;
use memfuse::Error;
use proptest::prelude::*;

fn vid(s: &str) -> VideoId {
    VideoId(s.to_string())
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn ones(n: usize) -> String {
    vec!["1"; n].join(",") + "\n"
}

#[test]
fn audio_width_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.csv", &ones(AUDIO_DIM));
    let a = load_audio_features(vid("v1"), &ok, AUDIO_DIM).unwrap();
    assert_eq!(a.vector.len(), 1582);

    let short = write(dir.path(), "short.csv", &ones(1581));
    match load_audio_features(vid("v1"), &short, AUDIO_DIM) {
        Err(Error::DimensionMismatch {
            expected: 1582,
            actual: 1581,
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn non_finite_and_empty_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let nan = write(dir.path(), "nan.csv", "1,2,NaN,4\n");
    assert!(matches!(
        load_frame_features(vid("v1"), &nan, 4),
        Err(Error::NonFinite { row: 1, column: 3, .. })
    ));
    let empty = write(dir.path(), "empty.csv", "");
    assert!(load_frame_features(vid("v1"), &empty, 4).is_err());
    assert!(load_audio_features(vid("v1"), &empty, 4).is_err());
    let junk = write(dir.path(), "junk.csv", "1,2,x,4\n");
    assert!(matches!(
        load_frame_features(vid("v1"), &junk, 4),
        Err(Error::Parse { line: 1, .. })
    ));
    let missing = dir.path().join("nope.csv");
    assert!(load_frame_features(vid("v1"), &missing, 4).is_err());
}

#[test]
fn frame_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "f.csv", "1,2,3,4\n5,6,7,8\n0,-2,2,1.5\n");
    let f = load_frame_features(vid("v1"), &p, 4).unwrap();
    assert_eq!(f.frames.len(), 3);
    assert_eq!(f.dim(), 4);
    assert_eq!(pool_frames(&f), [2.0, 2.0, 4.0, 4.5]);
}

#[test]
fn feature_set_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let dims = AvDims { audio: 2, frame: 3 };
    let mut manifest = AvManifest::default();
    for (v, a, f) in [
        ("v1", vec![vec![1.0, 2.0]], vec![vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]]),
        ("v2", vec![vec![-1.0, 0.5]], vec![vec![3.0, 3.0, 3.0]]),
    ] {
        let ap = format!("{v}_audio.csv");
        let fp = format!("{v}_frames.csv");
        write_rows(&dir.path().join(&ap), &a).unwrap();
        write_rows(&dir.path().join(&fp), &f).unwrap();
        manifest.videos.insert(
            vid(v),
            AvPaths {
                audio_path: ap.into(),
                frames_path: fp.into(),
            },
        );
    }
    let mp = dir.path().join("manifest.json");
    manifest.save(&mp).unwrap();
    assert_eq!(AvManifest::load(&mp).unwrap(), manifest);

    let set = AvFeatureSet::load(&mp, dims).unwrap();
    assert_eq!(set.len(), 2);
    assert_eq!(set.vector(&vid("v1")).unwrap(), [1.0, 2.0, 1.0, 1.0, 1.0]);
    assert_eq!(set.visual(&vid("v2")).unwrap(), [3.0, 3.0, 3.0]);
    assert!(set.vector(&vid("v3")).is_err());

    // wrong declared width
    assert!(AvFeatureSet::load(&mp, AvDims { audio: 3, frame: 3 }).is_err());
}

#[test]
fn mismatched_video_sets_fail() {
    let dims = AvDims { audio: 1, frame: 1 };
    let a = BTreeMap::from([(vid("v1"), vec![0.0])]);
    let v = BTreeMap::from([(vid("v2"), vec![0.0])]);
    assert!(AvFeatureSet::new(dims, a, v).is_err());
}

#[test]
fn write_refuses_non_finite() {
    let dir = tempfile::tempdir().unwrap();
    assert!(write_rows(&dir.path().join("x.csv"), &[vec![f64::INFINITY]]).is_err());
}

fn frames() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..5).prop_flat_map(|d| {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, d), 1..8)
    })
}

proptest! {
    #[test]
    fn pooling_ignores_frame_order(f in frames(), rot in 0usize..8) {
        let mut g = f.clone();
        let k = rot % g.len();
        g.rotate_left(k);
        g.reverse();
        let a = pool_frames(&FrameFeatures::new(vid("v"), f).unwrap());
        let b = pool_frames(&FrameFeatures::new(vid("v"), g).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn pooling_doubled_frames(f in frames()) {
        let doubled = [f.clone(), f.clone()].concat();
        let a = pool_frames(&FrameFeatures::new(vid("v"), f).unwrap());
        let b = pool_frames(&FrameFeatures::new(vid("v"), doubled).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn rows_round_trip(f in frames()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_rows(&p, &f).unwrap();
        let back = load_frame_features(vid("v"), &p, f[0].len()).unwrap();
        prop_assert_eq!(&back.frames, &f);
        prop_assert_eq!(format_rows(&back.frames), std::fs::read_to_string(&p).unwrap());
    }
}
