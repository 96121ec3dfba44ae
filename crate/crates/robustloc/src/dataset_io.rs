//! Dataset files: one CSV row per sample plus a JSON sidecar that carries the
//! network, sequences, ground truth and generator settings.
//!
//! CSV columns are `sample_id,seq_id,corrupted,y_0,...,y_{m-1}` where `m` is
//! the longest sequence; shorter rows leave trailing cells empty. Values are
//! seconds in shortest round-trip exponent notation.

use std::fs;
use std::path::{Path, PathBuf};

use robustloc_core::model::{Network, Sequence, Technique, Theta};
use robustloc_core::sim::{Dataset, NoiseSpec, Sample, RNG_ALGORITHM};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub rng: String,
    pub seed: Option<u64>,
    pub technique: Technique,
    pub num_samples: usize,
    pub network: SidecarNetwork,
    pub sequences: Vec<SidecarSequence>,
    /// Unknown-node positions used to generate the data (m).
    pub theta_star: Option<Vec<Vec<f64>>>,
    /// Generator noise settings in seconds.
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarNetwork {
    pub dim: usize,
    pub num_aux: usize,
    pub anchors: Vec<Vec<f64>>,
    pub c: f64,
    /// Processing delay (s).
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarSequence {
    pub nodes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Sidecar location for a dataset CSV: the same path with a `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn points(theta: &Theta) -> Vec<Vec<f64>> {
    (0..theta.num_nodes()).map(|k| theta.node(k).to_vec()).collect()
}

impl Sidecar {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let net = &ds.network;
        Sidecar {
            rng: RNG_ALGORITHM.to_string(),
            seed: ds.seed,
            technique: ds.technique(),
            num_samples: ds.len(),
            network: SidecarNetwork {
                dim: net.dim(),
                num_aux: net.num_aux(),
                anchors: net.anchors().map(<[f64]>::to_vec).collect(),
                c: net.c(),
                delta: net.delta(),
            },
            sequences: ds
                .sequences
                .iter()
                .map(|s| SidecarSequence { nodes: s.nodes().to_vec(), delta: s.delay_override() })
                .collect(),
            theta_star: ds.theta_star.as_ref().map(points),
            noise: ds.noise,
        }
    }

    fn network(&self) -> robustloc_core::Result<Network> {
        let n = &self.network;
        Network::new(n.dim, n.num_aux, &n.anchors, n.c, n.delta)
    }

    fn sequences(&self) -> robustloc_core::Result<Vec<Sequence>> {
        self.sequences
            .iter()
            .map(|s| {
                let seq = Sequence::new(self.technique, s.nodes.clone())?;
                match s.delta {
                    Some(d) => seq.with_delay(d),
                    None => Ok(seq),
                }
            })
            .collect()
    }
}

/// Writes the CSV at `csv_path` and its sidecar next to it.
pub fn write_dataset(ds: &Dataset, csv_path: &Path) -> AppResult<()> {
    let width = ds.sequences.iter().map(Sequence::num_rows).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| AppError::format(csv_path, e))?;
    let mut header = vec!["sample_id".to_string(), "seq_id".into(), "corrupted".into()];
    header.extend((0..width).map(|k| format!("y_{k}")));
    w.write_record(&header).map_err(|e| AppError::format(csv_path, e))?;
    for (i, s) in ds.samples.iter().enumerate() {
        let mut row = vec![i.to_string(), s.seq_id.to_string(), u8::from(s.corrupted).to_string()];
        row.extend(s.y.iter().map(|v| format!("{v:e}")));
        row.resize(3 + width, String::new());
        w.write_record(&row).map_err(|e| AppError::format(csv_path, e))?;
    }
    w.flush().map_err(|e| AppError::io(csv_path, e))?;

    let side = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&Sidecar::from_dataset(ds)).expect("sidecar serializes");
    fs::write(&side, json + "\n").map_err(|e| AppError::io(&side, e))
}

/// Reads a dataset CSV and its sidecar.
pub fn read_dataset(csv_path: &Path) -> AppResult<Dataset> {
    let side_path = sidecar_path(csv_path);
    let text = fs::read_to_string(&side_path).map_err(|e| AppError::io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| AppError::format(&side_path, e))?;
    let network = side.network().map_err(|e| AppError::format(&side_path, e))?;
    let sequences = side.sequences().map_err(|e| AppError::format(&side_path, e))?;

    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(csv_path).map_err(|e| AppError::format(csv_path, e))?;
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| AppError::format(csv_path, e))?;
        let at = |msg: String| AppError::format(csv_path, format!("row {}: {msg}", line + 1));
        let get = |k: usize| rec.get(k).ok_or_else(|| at(format!("missing column {k}")));
        let seq_id: usize = get(1)?.parse().map_err(|e| at(format!("seq_id: {e}")))?;
        let corrupted = match get(2)? {
            "0" => false,
            "1" => true,
            other => return Err(at(format!("corrupted must be 0 or 1, got '{other}'"))),
        };
        let m = sequences.get(seq_id).ok_or_else(|| at(format!("unknown sequence {seq_id}")))?.num_rows();
        let y = (0..m)
            .map(|k| get(3 + k)?.parse::<f64>().map_err(|e| at(format!("y_{k}: {e}"))))
            .collect::<AppResult<Vec<f64>>>()?;
        samples.push(Sample { seq_id, y, corrupted });
    }
    if samples.len() != side.num_samples {
        return Err(AppError::format(
            csv_path,
            format!("sidecar lists {} samples, CSV has {}", side.num_samples, samples.len()),
        ));
    }
    let mut ds = Dataset::new(network, sequences, samples).map_err(|e| AppError::format(csv_path, e))?;
    ds.seed = side.seed;
    ds.noise = side.noise;
    if let Some(p) = &side.theta_star {
        let theta = Theta::new(side.network.dim, p.concat()).map_err(|e| AppError::format(&side_path, e))?;
        ds.network.check_theta(&theta).map_err(|e| AppError::format(&side_path, e))?;
        ds.theta_star = Some(theta);
    }
    Ok(ds)
}
