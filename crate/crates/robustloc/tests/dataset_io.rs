use std::fs;

use robustloc::dataset_io::{read_dataset, sidecar_path, write_dataset, Sidecar};
use robustloc_core::model::{Sequence, Technique};
use robustloc_core::scenario::{auxiliary_tdst, self_localization};
use robustloc_core::sim::{generate, Mixing, NoiseSpec, QStyle};

fn noise(q_style: QStyle) -> NoiseSpec {
    NoiseSpec { sigma_los: 3e-9, mu_nlos: 75e-9, q_style, epsilon: 0.2, mixing: Mixing::Bernoulli }
}

#[test]
fn round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    for sc in [self_localization(Technique::Toa).unwrap(), self_localization(Technique::Tdst).unwrap(), auxiliary_tdst().unwrap()] {
        let ds = generate(&sc.network, &sc.sequences, &sc.theta_star, &noise(sc.q_style), 60, 3).unwrap();
        let path = dir.path().join("data.csv");
        write_dataset(&ds, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, ds);
    }
}

#[test]
fn ragged_rows_and_delay_overrides() {
    let sc = self_localization(Technique::Toa).unwrap();
    let sequences = vec![
        Sequence::new(Technique::Toa, vec![1, 2, 3]).unwrap(),
        Sequence::new(Technique::Toa, vec![4, 5, 6, 7, 8]).unwrap().with_delay(4e-9).unwrap(),
    ];
    let ds = generate(&sc.network, &sequences, &sc.theta_star, &noise(QStyle::Identity), 30, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ragged.csv");
    write_dataset(&ds, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("sample_id,seq_id,corrupted,y_0,y_1,y_2,y_3,y_4\n"));
    assert!(text.lines().skip(1).any(|l| l.ends_with(",,")));
    assert_eq!(read_dataset(&path).unwrap(), ds);
}

#[test]
fn writes_are_deterministic() {
    let sc = self_localization(Technique::Tdoa).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let ds = generate(&sc.network, &sc.sequences, &sc.theta_star, &noise(sc.q_style), 100, 42).unwrap();
        let path = dir.path().join(name);
        write_dataset(&ds, &path).unwrap();
        bytes.push((fs::read(&path).unwrap(), fs::read(sidecar_path(&path)).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn sidecar_records_generator() {
    let sc = self_localization(Technique::Tdoa).unwrap();
    let ds = generate(&sc.network, &sc.sequences, &sc.theta_star, &noise(sc.q_style), 10, 7).unwrap();
    let side = Sidecar::from_dataset(&ds);
    assert_eq!(side.rng, "ChaCha8");
    assert_eq!(side.seed, Some(7));
    assert_eq!(side.num_samples, 10);
    assert_eq!(side.theta_star, Some(vec![vec![5.0, 5.0]]));
    assert_eq!(side.sequences[1].nodes, vec![4, 3, 2, 1]);
}

#[test]
fn malformed_files_are_rejected() {
    let sc = self_localization(Technique::Tdoa).unwrap();
    let ds = generate(&sc.network, &sc.sequences, &sc.theta_star, &noise(sc.q_style), 5, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_dataset(&ds, &path).unwrap();
    let good = fs::read_to_string(&path).unwrap();

    fs::write(&path, good.replacen("\n0,", "\n0,7,", 1)).unwrap();
    assert!(read_dataset(&path).is_err());
    let mut lines: Vec<&str> = good.lines().collect();
    lines.pop();
    fs::write(&path, lines.join("\n")).unwrap();
    let err = read_dataset(&path).unwrap_err().to_string();
    assert!(err.contains("sidecar lists 5 samples"), "{err}");
    fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(read_dataset(&path).is_err());
}
