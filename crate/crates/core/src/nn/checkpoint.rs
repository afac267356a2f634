//! Binary checkpoints.
//!
//! Layout (all integers `u32` little-endian, all reals `f64` little-endian):
//!
//! ```text
//! magic   b"CLNN"
//! version 1
//! kind    u8: 0 = bare network, 1 = Gaussian head
//! n       number of widths, followed by n widths
//! per layer k: W_k row-major (widths[k+1] x widths[k]), then b_k
//! kind 1 only: d, followed by d log-std values
//! ```
//!
//! A plain-text manifest describing the same content is written next to each file.

use std::fs;
use std::path::{Path, PathBuf};

use super::gaussian::GaussianHead;
use super::mlp::Mlp;
use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"CLNN";
pub const FORMAT_VERSION: u32 = 1;

const KIND_MLP: u8 = 0;
const KIND_HEAD: u8 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| LabError::Format(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(buf: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(LabError::Format(format!("truncated checkpoint at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| LabError::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn encode(net: &Mlp, kind: u8, log_std: Option<&[f64]>) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(16 + 8 * net.num_params());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(kind);
    put_u32(&mut buf, net.widths().len())?;
    for &w in net.widths() {
        put_u32(&mut buf, w)?;
    }
    for (w, b) in net.weights().iter().zip(net.biases()) {
        put_f64s(&mut buf, w);
        put_f64s(&mut buf, b);
    }
    if let Some(ls) = log_std {
        put_u32(&mut buf, ls.len())?;
        put_f64s(&mut buf, ls);
    }
    Ok(buf)
}

fn decode(bytes: &[u8]) -> Result<(u8, Mlp, Option<Vec<f64>>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version as u32 != FORMAT_VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    let kind = r.take(1)?[0];
    let n = r.u32()?;
    if !(2..=64).contains(&n) {
        return Err(LabError::Format(format!("implausible layer count {n}")));
    }
    let widths = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let mut weights = Vec::with_capacity(n - 1);
    let mut biases = Vec::with_capacity(n - 1);
    for p in widths.windows(2) {
        weights.push(r.f64s(p[0] * p[1])?);
        biases.push(r.f64s(p[1])?);
    }
    let net = Mlp::from_parts(widths, weights, biases)?;
    let log_std = match kind {
        KIND_MLP => None,
        KIND_HEAD => {
            let d = r.u32()?;
            Some(r.f64s(d)?)
        }
        other => return Err(LabError::Format(format!("unknown kind {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(LabError::Format("trailing bytes after checkpoint".into()));
    }
    Ok((kind, net, log_std))
}

pub fn encode_mlp(net: &Mlp) -> Result<Vec<u8>> {
    encode(net, KIND_MLP, None)
}

pub fn decode_mlp(bytes: &[u8]) -> Result<Mlp> {
    match decode(bytes)? {
        (KIND_MLP, net, None) => Ok(net),
        _ => Err(LabError::Format("checkpoint holds a policy head, not a bare network".into())),
    }
}

pub fn encode_head(head: &GaussianHead) -> Result<Vec<u8>> {
    encode(&head.mean, KIND_HEAD, Some(&head.log_std))
}

pub fn decode_head(bytes: &[u8]) -> Result<GaussianHead> {
    match decode(bytes)? {
        (KIND_HEAD, mean, Some(log_std)) => {
            if log_std.len() != mean.output_len() {
                return Err(LabError::Format("log-std length does not match output width".into()));
            }
            Ok(GaussianHead { mean, log_std })
        }
        _ => Err(LabError::Format("checkpoint holds a bare network, not a policy head".into())),
    }
}

/// Human-readable description of a checkpoint.
pub fn manifest(net: &Mlp, log_std: Option<&[f64]>) -> String {
    let mut s = String::new();
    s.push_str(&format!("format CLNN v{FORMAT_VERSION}\n"));
    s.push_str(&format!("kind {}\n", if log_std.is_some() { "gaussian_head" } else { "mlp" }));
    s.push_str(&format!(
        "widths {}\n",
        net.widths().iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
    ));
    s.push_str("activation tanh (hidden), identity (output)\n");
    s.push_str(&format!("params {}\n", net.num_params()));
    if let Some(ls) = log_std {
        s.push_str(&format!(
            "log_std {}\n",
            ls.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ")
        ));
    }
    s
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".manifest.txt");
    PathBuf::from(p)
}

pub fn save_mlp(path: &Path, net: &Mlp) -> Result<()> {
    fs::write(path, encode_mlp(net)?)?;
    fs::write(manifest_path(path), manifest(net, None))?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    decode_mlp(&fs::read(path)?)
}

pub fn save_head(path: &Path, head: &GaussianHead) -> Result<()> {
    fs::write(path, encode_head(head)?)?;
    fs::write(manifest_path(path), manifest(&head.mean, Some(&head.log_std)))?;
    Ok(())
}

pub fn load_head(path: &Path) -> Result<GaussianHead> {
    decode_head(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn head_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut head = GaussianHead::new(&[5, 7, 3], &mut rng).unwrap();
        head.log_std = vec![-0.5, 0.1 / 3.0, -4.9];
        let bytes = encode_head(&head).unwrap();
        let back = decode_head(&bytes).unwrap();
        assert_eq!(back.mean.widths(), head.mean.widths());
        let (a, b) = (back.mean.flat(), head.mean.flat());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(back.log_std, head.log_std);
        assert_eq!(encode_head(&back).unwrap(), bytes);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let net = Mlp::zeros(&[2, 2]).unwrap();
        let bytes = encode_mlp(&net).unwrap();
        assert!(decode_mlp(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_mlp(&bad).is_err());
        assert!(decode_head(&bytes).is_err());
    }

    #[test]
    fn files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("critic.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let net = Mlp::new(&[4, 6, 1], &mut rng).unwrap();
        save_mlp(&path, &net).unwrap();
        assert_eq!(load_mlp(&path).unwrap().flat(), net.flat());
        let text = fs::read_to_string(dir.path().join("critic.bin.manifest.txt")).unwrap();
        assert!(text.contains("widths 4 6 1"));
    }
}
