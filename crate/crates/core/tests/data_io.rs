use lrc_core::data::{gen_blobs, gen_two_spirals, load_cifar10_binary, load_csv, parse_cifar10, split};
use lrc_core::network::{MlpConfig, Network};
use lrc_core::{Error, Prng};

fn fixture(labels: &[u8]) -> Vec<u8> {
    let mut bytes = Vec::new();
    for (r, &l) in labels.iter().enumerate() {
        bytes.push(l);
        bytes.extend((0..3072).map(|p| ((p * 7 + r * 13) % 256) as u8));
    }
    bytes
}

#[test]
fn cifar_fixture_round_trips() {
    let bytes = fixture(&[3, 0, 9]);
    let (px, labels) = parse_cifar10(&bytes).unwrap();
    assert_eq!(labels, vec![3, 0, 9]);
    assert_eq!(px.len(), 3 * 3072);
    for (r, rec) in bytes.chunks(3073).enumerate() {
        for p in 0..3072 {
            assert_eq!(px[r * 3072 + p], f64::from(rec[1 + p]) / 255.0);
        }
    }
    assert!(matches!(parse_cifar10(&bytes[..3072]), Err(Error::Format(_))));
    assert!(parse_cifar10(&fixture(&[10])).is_err());
}

#[test]
fn cifar_files_load_and_standardize() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("data_batch_1.bin");
    let b = dir.path().join("data_batch_2.bin");
    std::fs::write(&a, fixture(&[1, 2])).unwrap();
    std::fs::write(&b, fixture(&[5])).unwrap();
    let ds = load_cifar10_binary(&[&a, &b], false).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.classes()), (3, 3072, 10));
    assert_eq!(ds.labels(), &[1, 2, 5]);
    let st = load_cifar10_binary(&[&a, &b], true).unwrap();
    let plane = 1024;
    for ch in 0..3 {
        let vals: Vec<f64> = (0..3)
            .flat_map(|r| st.inputs().row(r)[ch * plane..(ch + 1) * plane].to_vec())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-9);
    }
    std::fs::write(&b, &fixture(&[5])[..100]).unwrap();
    assert!(load_cifar10_binary(&[&a, &b], false).is_err());
}

#[test]
fn csv_round_trip_through_file() {
    let ds = gen_two_spirals(25, 0.05, &mut Prng::new(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spirals.csv");
    ds.write_csv(&path).unwrap();
    let back = load_csv(&path, 2).unwrap();
    assert_eq!(back.labels(), ds.labels());
    assert_eq!(back.inputs().data(), ds.inputs().data());
}

#[test]
fn split_is_seeded_partition() {
    let ds = gen_blobs(3, 40, 2, 0.2, &mut Prng::new(1)).unwrap();
    let (tr, va, te) = split(&ds, [0.7, 0.1, 0.2], &mut Prng::new(9)).unwrap();
    assert_eq!(tr.len() + va.len() + te.len(), ds.len());
    let (tr2, _, _) = split(&ds, [0.7, 0.1, 0.2], &mut Prng::new(9)).unwrap();
    assert_eq!(tr.inputs().data(), tr2.inputs().data());
}

#[test]
fn checkpoint_file_round_trip() {
    let net = Network::init(MlpConfig::new(3, vec![5, 4], 2).unwrap(), &mut Prng::new(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    net.save(&path).unwrap();
    let back = Network::load(&path).unwrap();
    assert_eq!(back, net);
    assert!(Network::load(dir.path().join("missing")).is_err());
}
