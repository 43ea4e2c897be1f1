//! Dataset directories: `manifest.toml` plus one `traj_NNNN.csv` per trajectory.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::trajectory::{Dataset, ExcitationMeta, Split, Trajectory};
use crate::dynamics::ScenarioSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) mod seed_str {
    //! TOML integers are signed 64-bit, so seeds travel as decimal strings.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    split: Split,
    #[serde(with = "seed_str")]
    master_seed: u64,
    measurement_noise_var: f64,
    free_response: usize,
    state_dim: usize,
    input_dim: usize,
    excitation: ExcitationMeta,
    trajectories: Vec<Entry>,
    scenario: Option<ScenarioSpec>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    file: String,
    #[serde(with = "seed_str")]
    seed: u64,
    noisy: bool,
}

const MANIFEST: &str = "manifest.toml";

fn header(p: usize, q: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=p).map(|i| format!("x{i}")));
    if q == 1 {
        h.push("u".into());
    } else {
        h.extend((1..=q).map(|i| format!("u{i}")));
    }
    h
}

/// Writes `t,x1..xp,u..` rows; the final row leaves the input columns empty.
pub fn write_trajectory_csv<T: Real>(traj: &Trajectory<T>, path: &Path) -> Result<()> {
    traj.validate()?;
    let (p, q) = (traj.state_dim(), traj.input_dim());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    w.write_record(header(p, q)).map_err(|e| Error::parse(path, e))?;
    for (k, x) in traj.states.iter().enumerate() {
        let mut row = vec![traj.times[k].to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        match traj.inputs.get(k) {
            Some(u) => row.extend(u.iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), q)),
        }
        w.write_record(&row).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trajectory_csv<T: Real>(path: &Path, p: usize, q: usize, seed: u64, noisy: bool) -> Result<Trajectory<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::parse(path, e),
    })?;
    let hdr = r.headers().map_err(|e| Error::parse(path, e))?;
    if hdr.iter().collect::<Vec<_>>() != header(p, q) {
        return Err(Error::parse(path, format!("unexpected header {:?}", hdr)));
    }
    let parse = |s: &str| -> Result<T> {
        s.trim()
            .parse::<T>()
            .map_err(|_| Error::parse(path, format!("bad number `{s}`")))
    };
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        inputs: Vec::new(),
        seed,
        noisy,
    };
    let mut ended = false;
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        if ended {
            return Err(Error::parse(path, "rows after the final (input-less) row"));
        }
        let t: f64 = rec[0]
            .parse()
            .map_err(|_| Error::parse(path, format!("bad time `{}`", &rec[0])))?;
        traj.times.push(t);
        traj.states
            .push(DVector::from_iterator(p, (1..=p).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?));
        if rec[p + 1].is_empty() {
            ended = true;
        } else {
            traj.inputs.push(DVector::from_iterator(
                q,
                (p + 1..p + 1 + q).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?,
            ));
        }
    }
    if !ended {
        return Err(Error::parse(path, "missing final state row"));
    }
    traj.validate().map_err(|e| Error::parse(path, e))?;
    Ok(traj)
}

pub fn save_dataset<T: Real>(ds: &Dataset<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(ds.len());
    for (i, traj) in ds.trajectories.iter().enumerate() {
        let file = format!("traj_{i:04}.csv");
        write_trajectory_csv(traj, &dir.join(&file))?;
        entries.push(Entry {
            file,
            seed: traj.seed,
            noisy: traj.noisy,
        });
    }
    let manifest = Manifest {
        split: ds.split,
        master_seed: ds.master_seed,
        measurement_noise_var: ds.measurement_noise_var,
        free_response: ds.free_response,
        state_dim: ds.state_dim(),
        input_dim: ds.input_dim(),
        excitation: ds.excitation,
        trajectories: entries,
        scenario: ds.scenario.clone(),
    };
    let path = dir.join(MANIFEST);
    let text = toml::to_string(&manifest).map_err(|e| Error::parse(&path, e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_dataset<T: Real>(dir: impl AsRef<Path>) -> Result<Dataset<T>> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::parse(&path, e))?;
    if m.trajectories.is_empty() {
        return Err(Error::parse(&path, "manifest lists no trajectories"));
    }
    let trajectories = m
        .trajectories
        .iter()
        .map(|e| read_trajectory_csv(&dir.join(&e.file), m.state_dim, m.input_dim, e.seed, e.noisy))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        split: m.split,
        trajectories,
        excitation: m.excitation,
        measurement_noise_var: m.measurement_noise_var,
        scenario: m.scenario,
        master_seed: m.master_seed,
        free_response: m.free_response,
    })
}
