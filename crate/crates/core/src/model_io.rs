//! Persistence for models and spin ensembles.
//!
//! A model file is little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `MHKZ` |
//! | 2     | version (u16, = 1) |
//! | 2     | level `m` (u16) |
//! | 8     | recenter offset (f64) |
//! | 8 + 8 | spin shift `ζ1, ζ2` (f64, zero when unshifted) |
//! | 8     | coefficient count (u64) |
//! | 8 each| coefficients (f64), 0-based embedding index order |
//!
//! Iteration count, `c1` and seed are provenance only and are not stored.
//!
//! An ensemble is a directory holding one model file per member and a
//! `manifest.txt` of `key = value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::approximator::{Model, ModelMeta, SpinEnsemble};
use crate::dyadic::{check_level, dim};
use crate::embedding::CoefVector;
use crate::error::{Error, Result};
use crate::Point;

pub const MAGIC: [u8; 4] = *b"MHKZ";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 2 + 8 + 8 + 8 + 8;
pub const MANIFEST: &str = "manifest.txt";
const ENSEMBLE_FORMAT: &str = "mhkz-spin-ensemble";

/// Size in bytes of a level-`m` model file.
pub fn encoded_len(m: u32) -> usize {
    HEADER_LEN + 8 * dim(m)
}

pub fn write_model<W: Write>(model: &Model, mut w: W) -> Result<()> {
    let m = u16::try_from(model.m()).map_err(|_| Error::LevelOutOfRange(model.m()))?;
    let [z1, z2] = model.meta.shift.unwrap_or([0.0, 0.0]);
    let mut head = Vec::with_capacity(HEADER_LEN);
    head.extend_from_slice(&MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.extend_from_slice(&m.to_le_bytes());
    head.extend_from_slice(&model.meta.recenter_offset.to_le_bytes());
    head.extend_from_slice(&z1.to_le_bytes());
    head.extend_from_slice(&z2.to_le_bytes());
    head.extend_from_slice(&(model.coef.len() as u64).to_le_bytes());
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(8 * model.coef.len());
    for v in model.coef.values() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(buf: &[u8], at: &mut usize) -> [u8; N] {
    let out = buf[*at..*at + N]
        .try_into()
        .expect("length checked by caller");
    *at += N;
    out
}

pub fn read_model<R: Read>(mut r: R) -> Result<Model> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_model(&buf)
}

pub fn decode_model(buf: &[u8]) -> Result<Model> {
    if buf.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "model file truncated: {} bytes",
            buf.len()
        )));
    }
    let mut at = 0;
    if take::<4>(buf, &mut at) != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(take(buf, &mut at));
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}"
        )));
    }
    let m = u16::from_le_bytes(take(buf, &mut at)) as u32;
    check_level(m).map_err(|_| Error::Format(format!("level {m} out of range")))?;
    let offset = f64::from_le_bytes(take(buf, &mut at));
    let z1 = f64::from_le_bytes(take(buf, &mut at));
    let z2 = f64::from_le_bytes(take(buf, &mut at));
    let count = u64::from_le_bytes(take(buf, &mut at));
    if count != dim(m) as u64 {
        return Err(Error::Format(format!(
            "coefficient count {count} does not match level {m} (expected {})",
            dim(m)
        )));
    }
    if buf.len() != encoded_len(m) {
        return Err(Error::Format(format!(
            "model file has {} bytes, expected {}",
            buf.len(),
            encoded_len(m)
        )));
    }
    let values = buf[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let shift = if z1 == 0.0 && z2 == 0.0 {
        None
    } else {
        Some([z1, z2])
    };
    let meta = ModelMeta {
        recenter_offset: offset,
        shift,
        ..ModelMeta::default()
    };
    Ok(Model::new(CoefVector::from_values(m, values)?, meta))
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_model(model, BufWriter::new(fs::File::create(path)?))
}

pub fn load_model(path: &Path) -> Result<Model> {
    read_model(BufReader::new(fs::File::open(path)?))
}

fn member_name(k: usize) -> String {
    format!("member-{k:04}.mhkz")
}

/// Writes the ensemble into `dir`, creating it if needed.
pub fn save_ensemble(ens: &SpinEnsemble, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    manifest.push_str(&format!("format = {ENSEMBLE_FORMAT}\n"));
    manifest.push_str(&format!("version = {VERSION}\n"));
    manifest.push_str(&format!("m = {}\n", ens.m()));
    manifest.push_str(&format!("count = {}\n", ens.len()));
    for (k, (model, z)) in ens.models.iter().zip(&ens.shifts).enumerate() {
        let name = member_name(k);
        save_model(model, &dir.join(&name))?;
        manifest.push_str(&format!("member.{k} = {name}\n"));
        manifest.push_str(&format!("shift.{k} = {} {}\n", z[0], z[1]));
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("manifest line {}: expected `key = value`", n + 1))
        })?;
        if map
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(Error::Format(format!(
                "manifest line {}: duplicate key `{}`",
                n + 1,
                k.trim()
            )));
        }
    }
    Ok(map)
}

fn field<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Format(format!("manifest is missing `{key}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("manifest `{key}`: cannot parse `{s}`")))
}

pub fn load_ensemble(dir: &Path) -> Result<SpinEnsemble> {
    let map = parse_manifest(&fs::read_to_string(dir.join(MANIFEST))?)?;
    if field(&map, "format")? != ENSEMBLE_FORMAT {
        return Err(Error::Format("manifest has an unknown format".into()));
    }
    let version: u16 = parse_num(field(&map, "version")?, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported ensemble version {version}"
        )));
    }
    let m: u32 = parse_num(field(&map, "m")?, "m")?;
    let count: usize = parse_num(field(&map, "count")?, "count")?;
    let mut shifts = Vec::with_capacity(count);
    let mut models = Vec::with_capacity(count);
    for k in 0..count {
        let key = format!("shift.{k}");
        let raw = field(&map, &key)?;
        let mut parts = raw.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!(
                "manifest `{key}`: expected two numbers"
            )));
        };
        let z: Point = [parse_num(a, &key)?, parse_num(b, &key)?];
        let member = PathBuf::from(field(&map, &format!("member.{k}"))?);
        if member.components().count() != 1 {
            return Err(Error::Format(format!(
                "manifest member `{}` must be a plain file name",
                member.display()
            )));
        }
        let mut model = load_model(&dir.join(&member))?;
        if model.m() != m {
            return Err(Error::LevelMismatch {
                expected: m,
                found: model.m(),
            });
        }
        let stored = model.meta.shift.unwrap_or([0.0, 0.0]);
        if stored != z {
            return Err(Error::Format(format!(
                "member {k}: shift in file disagrees with manifest"
            )));
        }
        model.meta.shift = Some(z);
        shifts.push(z);
        models.push(model);
    }
    SpinEnsemble::new(shifts, models)
}

/// A model file or an ensemble directory.
#[derive(Debug, Clone, PartialEq)]
pub enum Stored {
    Single(Model),
    Ensemble(SpinEnsemble),
}

impl Stored {
    /// A single shifted model becomes a one-member ensemble so that it
    /// approximates `f` rather than `f(· - ζ)`.
    pub fn into_ensemble(self) -> Result<SpinEnsemble> {
        match self {
            Stored::Ensemble(e) => Ok(e),
            Stored::Single(m) => {
                let z = m.meta.shift.unwrap_or([0.0, 0.0]);
                SpinEnsemble::new(vec![z], vec![m])
            }
        }
    }
}

pub fn load_any(path: &Path) -> Result<Stored> {
    if path.is_dir() {
        load_ensemble(path).map(Stored::Ensemble)
    } else {
        load_model(path).map(Stored::Single)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{draw_samples, fit, fit_spin, FitOptions};
    use crate::kaczmarz::KaczmarzConfig;

    fn sample_model(m: u32, seed: u64) -> Model {
        let s = draw_samples(|p: Point| (3.0 * p[0]).sin() + p[1], 500, seed).unwrap();
        fit(&s, m, &KaczmarzConfig::new(500, seed)).unwrap()
    }

    #[test]
    fn header_is_forty_bytes() {
        assert_eq!(HEADER_LEN, 40);
        assert_eq!(encoded_len(7), 40 + 8 * 576);
    }

    #[test]
    fn round_trip_preserves_bits() {
        let mut model = sample_model(4, 3);
        model.meta.recenter_offset = 0.125;
        model.meta.shift = Some([0.25, 0.75]);
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        assert_eq!(buf.len(), encoded_len(4));
        assert_eq!(&buf[..4], b"MHKZ");
        assert_eq!(&buf[4..8], &[1, 0, 4, 0]);
        let back = decode_model(&buf).unwrap();
        assert_eq!(back.coef, model.coef);
        assert_eq!(back.meta.recenter_offset, 0.125);
        assert_eq!(back.meta.shift, Some([0.25, 0.75]));
        let mut again = Vec::new();
        write_model(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_corrupt_files() {
        let mut buf = Vec::new();
        write_model(&sample_model(3, 1), &mut buf).unwrap();
        assert!(matches!(decode_model(&buf[..30]), Err(Error::Format(_))));
        assert!(matches!(
            decode_model(&buf[..buf.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(decode_model(&bad), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(decode_model(&bad), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[32] = 99;
        assert!(matches!(decode_model(&bad), Err(Error::Format(_))));
        let mut bad = buf;
        bad.push(0);
        assert!(matches!(decode_model(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn ensemble_round_trip() {
        let s = draw_samples(|p: Point| p[0] * p[1], 400, 8).unwrap();
        let ens = fit_spin(
            &s,
            3,
            &KaczmarzConfig::new(400, 8),
            3,
            8,
            FitOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_ensemble(&ens, dir.path()).unwrap();
        let back = load_ensemble(dir.path()).unwrap();
        assert_eq!(back.shifts, ens.shifts);
        for (a, b) in back.models.iter().zip(&ens.models) {
            assert_eq!(a.coef, b.coef);
        }
        let p = [0.3, 0.9];
        assert_eq!(back.evaluate(p).unwrap(), ens.evaluate(p).unwrap());
        assert!(matches!(load_any(dir.path()).unwrap(), Stored::Ensemble(_)));
    }

    #[test]
    fn manifest_errors_are_reported() {
        assert!(parse_manifest("a = 1\nb 2\n").is_err());
        assert!(parse_manifest("a = 1\na = 2\n").is_err());
        let m = parse_manifest("# c\n\n a = x y \n").unwrap();
        assert_eq!(m["a"], "x y");

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST), "format = other\n").unwrap();
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Format(_))));
        fs::write(
            dir.path().join(MANIFEST),
            format!("format = {ENSEMBLE_FORMAT}\nversion = 1\nm = 3\ncount = 1\nmember.0 = ../x\nshift.0 = 0 0\n"),
        )
        .unwrap();
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn single_shifted_model_wraps_as_ensemble() {
        let mut model = sample_model(3, 2);
        model.meta.shift = Some([0.5, 0.25]);
        let ens = Stored::Single(model.clone()).into_ensemble().unwrap();
        let x = [0.7, 0.9];
        let expect = model
            .evaluate(crate::approximator::torus_add(x, [0.5, 0.25]))
            .unwrap();
        assert_eq!(ens.evaluate(x).unwrap(), expect);
    }
}
