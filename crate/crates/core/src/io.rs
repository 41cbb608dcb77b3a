//! Field snapshots, trajectory directories and run configuration.
//!
//! Snapshot layout (little endian): `"NSCB"`, version `u32`, `n u32`,
//! box length `f64`, component count `u32`, time `f64`, then every
//! component's `n³` physical samples in x-fastest order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::solver::{InitialData, SolverConfig};
use crate::trajectory::Trajectory;

pub const MAGIC: &[u8; 4] = b"NSCB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 4 + 8;

/// Physical samples exactly as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSnapshot {
    pub n: usize,
    pub box_length: f64,
    pub time: f64,
    pub samples: Vec<Vec<f64>>,
}

impl RawSnapshot {
    pub fn from_field(f: &Field, time: f64) -> Self {
        RawSnapshot {
            n: f.grid().n(),
            box_length: f.grid().box_length(),
            time,
            samples: f.to_physical(),
        }
    }

    /// Projects the samples onto the band of a grid with this dealias fraction.
    pub fn to_field(&self, dealias_fraction: f64) -> Result<Field> {
        let grid = Grid::new(self.n, self.box_length, dealias_fraction)?;
        self.to_field_on(&grid)
    }

    pub fn to_field_on(&self, grid: &Grid) -> Result<Field> {
        if grid.n() != self.n || grid.box_length().to_bits() != self.box_length.to_bits() {
            return Err(Error::GridMismatch);
        }
        Field::from_physical(grid, &self.samples)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let n3 = self.n * self.n * self.n;
        if self.samples.iter().any(|c| c.len() != n3) {
            return Err(Error::Format(format!("component length differs from n³ = {n3}")));
        }
        let mut buf = Vec::with_capacity(HEADER_LEN + 8 * n3 * self.samples.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&self.box_length.to_le_bytes());
        buf.extend_from_slice(&(self.samples.len() as u32).to_le_bytes());
        buf.extend_from_slice(&self.time.to_le_bytes());
        for c in &self.samples {
            for v in c {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf).map_err(|e| Error::io("<snapshot>", e))
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io("<snapshot>", e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing NSCB magic".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                supported: VERSION,
            });
        }
        let n = u32_at(8) as usize;
        let box_length = f64_at(12);
        let comps = u32_at(20) as usize;
        let time = f64_at(24);
        if n == 0 || comps == 0 {
            return Err(Error::Format(format!("empty payload: n = {n}, components = {comps}")));
        }
        let n3 = n * n * n;
        let expected = HEADER_LEN + 8 * n3 * comps;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                bytes.len() - expected
            )));
        }
        let samples = (0..comps)
            .map(|c| {
                let base = HEADER_LEN + 8 * n3 * c;
                (0..n3).map(|i| f64_at(base + 8 * i)).collect()
            })
            .collect();
        Ok(RawSnapshot {
            n,
            box_length,
            time,
            samples,
        })
    }
}

pub fn save_snapshot(path: &Path, f: &Field, time: f64) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    RawSnapshot::from_field(f, time).write(std::io::BufWriter::new(file))
}

pub fn load_snapshot(path: &Path) -> Result<RawSnapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RawSnapshot::from_bytes(&bytes)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `time_0000.nscb`, `time_0001.nscb`, … into `dir`.
pub fn save_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    traj.iter()
        .enumerate()
        .map(|(i, (t, f))| {
            let path = dir.join(format!("time_{i:04}.nscb"));
            save_snapshot(&path, f, t)?;
            Ok(path)
        })
        .collect()
}

/// Reads every `*.nscb` file of `dir` in name order onto `grid`.
pub fn load_trajectory(dir: &Path, grid: &Grid) -> Result<Trajectory> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "nscb"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut traj = Trajectory::new();
    for p in paths {
        let raw = load_snapshot(&p)?;
        traj.push(raw.time, raw.to_field_on(grid)?)?;
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub box_length: f64,
    pub dealias: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n: 32,
            box_length: 2.0 * std::f64::consts::PI,
            dealias: 2.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub horizon: f64,
    pub save_every: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: 1e-3,
            horizon: 0.5,
            save_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub p: f64,
    pub a: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub b: f64,
    /// Base `M` of the constant ladder.
    pub ladder_m: f64,
    pub t_star: Option<f64>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            p: 4.0,
            a: 0.0,
            c_p: 2.0,
            d_p: 10.0,
            b: 1.0,
            ladder_m: 2.0,
            t_star: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: String,
    pub amplitude: f64,
    /// Target critical Besov norm of random data.
    #[serde(alias = "M")]
    pub m: f64,
    pub seed: u64,
    pub wavevector: [i64; 3],
    pub polarization: [f64; 3],
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: "taylor_green".into(),
            amplitude: 1.0,
            m: 1.0,
            seed: 0,
            wavevector: [1, 0, 0],
            polarization: [0.0, 1.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("nscb_out"),
            formats: vec!["csv".into(), "json".into(), "nscb".into()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub physics: PhysicsSection,
    pub initial_data: InitialSection,
    pub outputs: OutputSection,
}

impl RunConfig {
    /// JSON when the text starts with `{`, otherwise `section.key = value`
    /// lines with `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            parse_key_values(text)?
        };
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let ph = &self.physics;
        if !(ph.p > 3.0) || !ph.p.is_finite() {
            return bad(format!("physics.p must be a finite number above 3, got {}", ph.p));
        }
        if !(0.0..=1.0).contains(&ph.a) {
            return bad(format!("physics.a must lie in [0, 1], got {}", ph.a));
        }
        if !(ph.c_p >= 1.0) || !(ph.d_p > 1.0) || !(ph.b > 0.0) || !(ph.ladder_m >= 2.0) {
            return bad("physics needs c_p >= 1, d_p > 1, b > 0, ladder_m >= 2".into());
        }
        if self.outputs.formats.iter().any(|f| !["csv", "json", "nscb"].contains(&f.as_str())) {
            return bad(format!("unknown output format in {:?}", self.outputs.formats));
        }
        let grid = self.grid()?;
        self.solver_config(&grid)?;
        self.initial_data()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.box_length, self.grid.dealias)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_config(&self, grid: &Grid) -> Result<SolverConfig> {
        let s = &self.solver;
        SolverConfig::new(grid, s.dt, s.horizon, s.save_every).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let i = &self.initial_data;
        Ok(match i.kind.as_str() {
            "taylor_green" => InitialData::TaylorGreen { amplitude: i.amplitude },
            "taylor_green_3d" => InitialData::TaylorGreen3d { amplitude: i.amplitude },
            "single_mode" => InitialData::SingleMode {
                wavevector: i.wavevector,
                amplitude: i.amplitude,
                polarization: i.polarization,
            },
            "random_besov" => InitialData::RandomBesov {
                p: self.physics.p,
                target: i.m,
                seed: i.seed,
            },
            other => return Err(Error::Config(format!("unknown initial_data.kind `{other}`"))),
        })
    }

    pub fn writes(&self, format: &str) -> bool {
        self.outputs.formats.iter().any(|f| f == format)
    }
}

fn scalar(raw: &str) -> Value {
    let v = raw.trim();
    if let Ok(parsed) = serde_json::from_str::<Value>(v) {
        return parsed;
    }
    let unquoted = v
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v);
    Value::String(unquoted.to_string())
}

/// `a.b.c = value` lines to a nested JSON object. Values parse as JSON
/// (numbers, booleans, arrays, quoted strings) and fall back to bare strings.
pub fn parse_key_values(text: &str) -> Result<Value> {
    let mut entries: BTreeMap<Vec<String>, Value> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("line {}: malformed key `{}`", lineno + 1, key.trim())));
        }
        if entries.insert(path, scalar(value)).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{}`", lineno + 1, key.trim())));
        }
    }
    let mut root = Map::new();
    for (path, value) in entries {
        let mut node = &mut root;
        for part in &path[..path.len() - 1] {
            let next = node
                .entry(part.clone())
                .or_insert_with(|| Value::Object(Map::new()));
            node = next
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("key `{part}` is both a value and a section")))?;
        }
        let last = path.last().unwrap();
        if node.contains_key(last) {
            return Err(Error::Config(format!("key `{last}` is both a value and a section")));
        }
        node.insert(last.clone(), value);
    }
    Ok(Value::Object(root))
}

/// Worker cap from `NSCB_THREADS` (default 1). Computation here is
/// sequential, so the cap only bounds and is reported.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("NSCB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("NSCB_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_nest() {
        let v = parse_key_values("grid.n = 16\n# comment\ninitial_data.kind = single_mode\ninitial_data.wavevector=[0,1,0]\n").unwrap();
        assert_eq!(v["grid"]["n"], 16);
        assert_eq!(v["initial_data"]["kind"], "single_mode");
        assert_eq!(v["initial_data"]["wavevector"][1], 1);
        assert!(parse_key_values("grid.n 16").is_err());
        assert!(parse_key_values("grid.n=1\ngrid.n=2").is_err());
        assert!(parse_key_values("grid=1\ngrid.n=2").is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = RunConfig::parse("grid.n=16\nsolver.dt=0.01\n").unwrap();
        assert_eq!(cfg.grid.n, 16);
        assert!(RunConfig::parse("physics.p=3").is_err());
        assert!(RunConfig::parse("physics.a=2").is_err());
        assert!(RunConfig::parse("grid.n=24").is_err());
        assert!(RunConfig::parse("grid.nn=16").is_err());
        assert!(RunConfig::parse("solver.dt=10").is_err());
        let json = RunConfig::parse(r#"{"grid": {"n": 16}, "initial_data": {"M": 3.0}}"#).unwrap();
        assert_eq!(json.initial_data.m, 3.0);
    }

    #[test]
    fn snapshot_errors() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![x[0].sin()]).unwrap();
        let mut bytes = Vec::new();
        RawSnapshot::from_field(&f, 0.5).write(&mut bytes).unwrap();
        let back = RawSnapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back.time, 0.5);
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(RawSnapshot::from_bytes(&wrong), Err(Error::Format(_))));
        let mut v2 = bytes.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(RawSnapshot::from_bytes(&v2), Err(Error::Version { found: 2, .. })));
        assert!(matches!(
            RawSnapshot::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
    }
}
