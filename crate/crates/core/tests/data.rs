use std::path::PathBuf;

use proptest::prelude::*;
use sst_core::data::idx::{encode_images, encode_labels, parse_images, parse_labels, pixel_bytes, IdxImages};
use sst_core::data::*;
use sst_core::Error;

fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("SST_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

fn write_pair(dir: &std::path::Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
    let (i, l) = (dir.join("img"), dir.join("lab"));
    std::fs::write(&i, images).unwrap();
    std::fs::write(&l, labels).unwrap();
    (i, l)
}

#[test]
fn tiny_idx_files() {
    let dir = tempfile::tempdir().unwrap();
    let images = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 128, 0];
    let labels = [0, 0, 8, 1, 0, 0, 0, 1, 7];
    let (i, l) = write_pair(dir.path(), &images, &labels);
    let ds = load_idx(&i, &l).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.x(0), &[0.0, 1.0, 128.0 / 255.0, 0.0]);
    assert_eq!(ds.labels(), &[7]);
    assert_eq!(ds.image_shape(), Some((2, 2)));
}

#[test]
fn bad_magic_is_quoted() {
    let err = parse_images(&[0, 0, 8, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap_err();
    assert!(matches!(err, Error::Format(_)));
    assert!(err.to_string().contains("0x00000804"), "{err}");
    let err = parse_labels(&[0, 0, 8, 3, 0, 0, 0, 0]).unwrap_err();
    assert!(err.to_string().contains("0x00000803"), "{err}");
}

#[test]
fn count_mismatch_is_a_consistency_error() {
    let dir = tempfile::tempdir().unwrap();
    let images = encode_images(&IdxImages {
        count: 2,
        rows: 1,
        cols: 1,
        pixels: vec![1, 2],
    });
    let (i, l) = write_pair(dir.path(), &images, &encode_labels(&[3]));
    assert!(matches!(load_idx(&i, &l).unwrap_err(), Error::Consistency(_)));
}

#[test]
fn full_mnist_shape() {
    let Some(dir) = mnist_dir() else {
        eprintln!("MNIST files not found; set SST_MNIST_DIR to run this check");
        return;
    };
    let m = load_mnist_dir(&dir).unwrap();
    assert_eq!(m.train.len(), 60_000);
    assert_eq!(m.test.len(), 10_000);
    assert_eq!(m.train.features_per_example(), 784);
    assert_eq!(m.train.classes(), 10);
    let raw = std::fs::read(dir.join("t10k-images-idx3-ubyte")).unwrap();
    assert_eq!(pixel_bytes(&m.test), raw[16..]);
}

#[test]
fn synthetic_single_feature_threshold() {
    let spec = SyntheticSpec {
        n: 5,
        support: vec![0],
        rule: SyntheticRule::Threshold,
        count: 500,
        seed: 3,
    };
    let ds = gen_synthetic(&spec).unwrap();
    for i in 0..ds.len() {
        assert_eq!(ds.labels()[i], (ds.x(i)[0] >= 0.5) as usize);
    }
    assert_eq!(gen_synthetic(&spec).unwrap(), ds);
    let empty = SyntheticSpec { support: vec![], ..spec };
    assert!(matches!(gen_synthetic(&empty).unwrap_err(), Error::Config(_)));
}

#[test]
fn synthetic_class_balance() {
    for rule in [SyntheticRule::Threshold, SyntheticRule::Parity] {
        let ds = gen_synthetic(&SyntheticSpec {
            n: 20,
            support: vec![2, 7, 11],
            rule,
            count: 10_000,
            seed: 99,
        })
        .unwrap();
        let ones = ds.labels().iter().filter(|&&t| t == 1).count() as f64;
        let pct = 100.0 * ones / ds.len() as f64;
        assert!((pct - 50.0).abs() <= 2.0, "{rule:?}: {pct}%");
    }
}

#[test]
fn split_examples() {
    let ds = gen_synthetic(&SyntheticSpec {
        n: 3,
        support: vec![1],
        rule: SyntheticRule::Threshold,
        count: 101,
        seed: 4,
    })
    .unwrap();
    let all = split(&ds, (1.0, 0.0, 0.0), 0).unwrap();
    assert_eq!((all.train.len(), all.val.len(), all.test.len()), (101, 0, 0));
    let s = split(&ds, (0.7, 0.2, 0.1), 8).unwrap();
    assert_eq!(s.train.len() + s.val.len() + s.test.len(), 101);
    let again = split(&ds, (0.7, 0.2, 0.1), 8).unwrap();
    assert_eq!(s.train, again.train);
    assert_eq!(s.test, again.test);
    assert!(split(&ds, (0.7, 0.2, 0.2), 8).is_err());
}

#[test]
fn cache_round_trip_through_disk() {
    let ds = gen_synthetic(&SyntheticSpec {
        n: 6,
        support: vec![0, 5],
        rule: SyntheticRule::Parity,
        count: 40,
        seed: 1,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.sstd");
    cache::write(&ds, &path).unwrap();
    let back = cache::read(&path).unwrap();
    assert_eq!(back.features(), ds.features());
    assert_eq!(back.labels(), ds.labels());
}

proptest! {
    #[test]
    fn idx_round_trip(rows in 1usize..5, cols in 1usize..5, count in 0usize..6, seed in any::<u8>()) {
        let pixels: Vec<u8> = (0..rows * cols * count).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
        let img = IdxImages { count, rows, cols, pixels: pixels.clone() };
        let parsed = parse_images(&encode_images(&img)).unwrap();
        let ds = idx::dataset_from_idx("p", &parsed, &parse_labels(&encode_labels(&labels)).unwrap()).unwrap();
        prop_assert_eq!(pixel_bytes(&ds), pixels);
    }

    #[test]
    fn labels_ignore_non_support_features(seed in any::<u64>(), parity in any::<bool>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let spec = SyntheticSpec {
            n: 10,
            support: vec![1, 4, 8],
            rule: if parity { SyntheticRule::Parity } else { SyntheticRule::Threshold },
            count: 50,
            seed,
        };
        let ds = gen_synthetic(&spec).unwrap();
        let free: Vec<usize> = (0..10).filter(|i| !spec.support.contains(i)).collect();
        let mut shuffled = free.clone();
        shuffled.shuffle(&mut sst_core::masking::RandomSource::new(perm_seed));
        for i in 0..ds.len() {
            let mut x = ds.x(i).to_vec();
            let original = x.clone();
            for (&a, &b) in free.iter().zip(&shuffled) {
                x[a] = original[b];
            }
            prop_assert_eq!(spec.label_of(&x), ds.labels()[i]);
        }
    }
}
