//! Converts an IDX image/label pair (the MNIST and Fashion-MNIST
//! distribution format, uncompressed) into `data.pstb` with pixels scaled
//! to `[0, 1]` and a `labels.csv` with one class id per line.
//!
//! ```text
//! cargo run --release -p projstab --example idx_to_pstb -- \
//!     train-images-idx3-ubyte train-labels-idx1-ubyte <out-dir>
//! ```
//!
//! The reference embedding has to come from elsewhere (UMAP, t-SNE, ...),
//! written as an `n x 2` CSV in the same row order.

use std::error::Error;
use std::fs;
use std::path::PathBuf;

use projstab::data::{write_matrix, MatrixFormat};
use projstab::Matrix;

fn be_u32(bytes: &[u8], at: usize) -> Result<usize, String> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()) as usize)
        .ok_or_else(|| "truncated IDX header".to_string())
}

/// Returns the dimensions and the payload of an unsigned-byte IDX file.
fn read_idx(bytes: &[u8], rank: u8) -> Result<(Vec<usize>, &[u8]), String> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 || bytes[3] != rank {
        return Err(format!("expected an unsigned-byte IDX file of rank {rank}"));
    }
    let dims = (0..rank as usize)
        .map(|i| be_u32(bytes, 4 + 4 * i))
        .collect::<Result<Vec<_>, _>>()?;
    let start = 4 + 4 * rank as usize;
    let len: usize = dims.iter().product();
    let payload = bytes
        .get(start..start + len)
        .ok_or_else(|| format!("IDX payload holds {} bytes, expected {len}", bytes.len() - start))?;
    Ok((dims, payload))
}

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [images, labels, out] = args.as_slice() else {
        return Err("usage: idx_to_pstb <images> <labels> <out-dir>".into());
    };
    let image_bytes = fs::read(images)?;
    let label_bytes = fs::read(labels)?;
    let (dims, pixels) = read_idx(&image_bytes, 3)?;
    let (ldims, ids) = read_idx(&label_bytes, 1)?;
    if ldims[0] != dims[0] {
        return Err(format!("{} images but {} labels", dims[0], ldims[0]).into());
    }

    let d = dims[1] * dims[2];
    let values = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let data = Matrix::new(dims[0], d, values)?;
    let out = PathBuf::from(out);
    fs::create_dir_all(&out)?;
    write_matrix(&data, out.join("data.pstb"), MatrixFormat::Binary)?;
    let text: String = ids.iter().map(|id| format!("{id}\n")).collect();
    fs::write(out.join("labels.csv"), text)?;
    println!("{} rows x {d} columns written to {}", dims[0], out.display());
    Ok(())
}
