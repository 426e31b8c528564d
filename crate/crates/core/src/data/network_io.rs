//! Network file: `PSTN`, `u32` version 1, `u32` layer count `L`, then the
//! `L + 1` layer widths as `u64`, then per layer the weights (`out x in`,
//! row-major `f64`) followed by the biases (`out` `f64`), then a `u64`
//! length-prefixed UTF-8 JSON metadata blob. All integers and floats are
//! little-endian.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix_io::{to_count, Reader};
use crate::error::{Error, Result};
use crate::mlp::{Dense, Network};

pub const NETWORK_MAGIC: &[u8; 4] = b"PSTN";
pub const NETWORK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NetworkMeta {
    pub lambda: f64,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub network: Network,
    pub meta: NetworkMeta,
}

pub fn encode_network(file: &NetworkFile) -> Result<Vec<u8>> {
    let net = &file.network;
    let widths = net.widths();
    let meta = serde_json::to_vec(&file.meta)?;
    let mut out = Vec::with_capacity(16 + 8 * (widths.len() + net.param_count()) + meta.len());
    out.extend_from_slice(NETWORK_MAGIC);
    out.extend_from_slice(&NETWORK_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for w in widths {
        out.extend_from_slice(&(w as u64).to_le_bytes());
    }
    for layer in net.layers() {
        for v in layer.weights().iter().chain(layer.bias()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    Ok(out)
}

pub fn decode_network(bytes: &[u8]) -> Result<NetworkFile> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != NETWORK_MAGIC {
        return Err(Error::Format("bad magic, expected PSTN".into()));
    }
    let version = r.u32()?;
    if version != NETWORK_VERSION {
        return Err(Error::Format(format!(
            "unsupported network version {version}"
        )));
    }
    let layer_count = r.u32()? as usize;
    if layer_count == 0 {
        return Err(Error::Format("network has no layers".into()));
    }
    let widths = (0..=layer_count)
        .map(|_| to_count(r.u64()?, "layer width"))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(layer_count);
    for w in widths.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let n = inputs
            .checked_mul(outputs)
            .ok_or_else(|| Error::Format("layer size overflows".into()))?;
        let weights = r.f64s(n)?;
        let bias = r.f64s(outputs)?;
        layers.push(Dense::new(inputs, outputs, weights, bias)?);
    }
    let network = Network::from_layers(layers)?;
    let meta_len = to_count(r.u64()?, "metadata length")?;
    let meta_bytes = r.take(meta_len)?;
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bytes after metadata",
            r.remaining()
        )));
    }
    let meta_text = std::str::from_utf8(meta_bytes)
        .map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
    let meta = serde_json::from_str(meta_text)?;
    Ok(NetworkFile { network, meta })
}

pub fn save_network(file: &NetworkFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_network(file)?).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_network(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::mlp::{forward, init_network, Preset};

    fn sample() -> NetworkFile {
        NetworkFile {
            network: init_network(&[6, 5, 4, 2], 9).unwrap(),
            meta: NetworkMeta {
                lambda: 10.0,
                seed: 9,
                epochs_run: 17,
                best_epoch: 7,
                best_val_mse: 0.125,
            },
        }
    }

    #[test]
    fn round_trip_preserves_outputs_bitwise() {
        let file = sample();
        let back = decode_network(&encode_network(&file).unwrap()).unwrap();
        assert_eq!(back, file);
        let probe = Matrix::new(2, 6, (0..12).map(|i| i as f64 * 0.1 - 0.4).collect()).unwrap();
        let a = forward(&file.network, &probe).unwrap();
        let b = forward(&back.network, &probe).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn mlp_small_widths_persist() {
        let file = NetworkFile {
            network: init_network(&Preset::MlpSmall.widths(784), 1).unwrap(),
            meta: NetworkMeta::default(),
        };
        let back = decode_network(&encode_network(&file).unwrap()).unwrap();
        assert_eq!(back.network.widths(), vec![784, 512, 512, 512, 2]);
    }

    #[test]
    fn corrupt_magic_version_and_truncation_fail() {
        let bytes = encode_network(&sample()).unwrap();
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(decode_network(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_network(&bad), Err(Error::Format(_))));
        assert!(matches!(
            decode_network(&bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
    }
}
