//! Plain-text network checkpoints.
//!
//! A checkpoint is two files: `<name>.tensor` holding the network weights in
//! a line-oriented text format, and `<name>.meta.toml` holding the training
//! state needed to interpret or resume it (exploration level, step counter,
//! episode index).
//!
//! The tensor format is deliberately simple and diff-friendly:
//!
//! ```text
//! edgesim-tensor v1
//! layers 2
//! layer 0 relu in 3 out 4
//! bias b0 b1 b2 b3
//! row w00 w01 w02
//! ...              (one `row` line per output unit)
//! layer 1 linear in 4 out 2
//! ...
//! ```
//!
//! Floats are written with Rust's shortest-round-trip formatting, so a
//! write/read cycle reproduces every parameter bit for bit.

use edgesim_core::nn::{Activation, DenseLayer, DenseNetwork};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

const MAGIC: &str = "edgesim-tensor v1";

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: layer shapes do not chain into a network")]
    BadArchitecture { path: PathBuf },
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Linear => "linear",
    }
}

fn parse_activation(s: &str) -> Option<Activation> {
    match s {
        "relu" => Some(Activation::Relu),
        "linear" => Some(Activation::Linear),
        _ => None,
    }
}

fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        write!(out, "{v}").expect("writing to a String cannot fail");
    }
    out.push('\n');
}

/// Serialize a network to its text form.
pub fn network_to_string(net: &DenseNetwork) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "layers {}", net.layers().len());
    for (idx, layer) in net.layers().iter().enumerate() {
        let _ = writeln!(
            out,
            "layer {idx} {} in {} out {}",
            activation_name(layer.activation),
            layer.in_dim,
            layer.out_dim
        );
        out.push_str("bias");
        push_floats(&mut out, &layer.biases);
        for row in 0..layer.out_dim {
            out.push_str("row");
            push_floats(&mut out, &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim]);
        }
    }
    out
}

pub fn write_network(path: &Path, net: &DenseNetwork) -> Result<(), TensorIoError> {
    std::fs::write(path, network_to_string(net)).map_err(|source| TensorIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a network from its text form. `path` is only used for error
/// messages.
pub fn network_from_string(path: &Path, text: &str) -> Result<DenseNetwork, TensorIoError> {
    let fail = |line: usize, message: String| TensorIoError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| {
        lines
            .next()
            .ok_or_else(|| fail(0, format!("unexpected end of file, expected {expect}")))
    };

    let (n, magic) = next("header")?;
    if magic.trim_end() != MAGIC {
        return Err(fail(n + 1, format!("bad header {magic:?}, expected {MAGIC:?}")));
    }
    let (n, count_line) = next("layer count")?;
    let layer_count: usize = count_line
        .strip_prefix("layers ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fail(n + 1, format!("bad layer count line {count_line:?}")))?;

    let parse_floats = |n: usize, line: &str, prefix: &str, expected: usize| {
        let body = line
            .strip_prefix(prefix)
            .ok_or_else(|| fail(n + 1, format!("expected a {prefix:?} line, got {line:?}")))?;
        let values: Result<Vec<f64>, _> = body.split_whitespace().map(str::parse).collect();
        let values =
            values.map_err(|e| fail(n + 1, format!("unparseable number in {prefix} line: {e}")))?;
        if values.len() != expected {
            return Err(fail(
                n + 1,
                format!("{prefix} line holds {} values, expected {expected}", values.len()),
            ));
        }
        Ok(values)
    };

    let mut layers = Vec::with_capacity(layer_count);
    for idx in 0..layer_count {
        let (n, header) = next("layer header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            ["layer", i, act, "in", in_dim, "out", out_dim] => {
                let ok_index = i.parse::<usize>().ok() == Some(idx);
                match (ok_index, parse_activation(act), in_dim.parse(), out_dim.parse()) {
                    (true, Some(activation), Ok(in_dim), Ok(out_dim)) => {
                        Some((activation, in_dim, out_dim))
                    }
                    _ => None,
                }
            }
            _ => None,
        };
        let (activation, in_dim, out_dim): (Activation, usize, usize) =
            parsed.ok_or_else(|| fail(n + 1, format!("bad layer header {header:?}")))?;

        let (n, bias_line) = next("bias line")?;
        let biases = parse_floats(n, bias_line, "bias", out_dim)?;
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..out_dim {
            let (n, row_line) = next("weight row")?;
            weights.extend(parse_floats(n, row_line, "row", in_dim)?);
        }
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        });
    }

    DenseNetwork::from_layers(layers).map_err(|_| TensorIoError::BadArchitecture {
        path: path.to_path_buf(),
    })
}

pub fn read_network(path: &Path) -> Result<DenseNetwork, TensorIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| TensorIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    network_from_string(path, &text)
}

/// Training state persisted next to the tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub edge_server_count: usize,
    /// Episodes finished before this checkpoint was written.
    pub episodes_completed: usize,
    pub train_steps: u64,
    pub epsilon: f64,
    /// Failed-task percentage of the episode that produced this checkpoint.
    pub failed_pct: f64,
}

/// `<name>.meta.toml` path for a `<name>.tensor` checkpoint.
pub fn meta_path(tensor_path: &Path) -> PathBuf {
    tensor_path.with_extension("meta.toml")
}

pub fn write_meta(tensor_path: &Path, meta: &CheckpointMeta) -> Result<(), TensorIoError> {
    let path = meta_path(tensor_path);
    let text = toml::to_string_pretty(meta).expect("checkpoint metadata always serializes");
    std::fs::write(&path, text).map_err(|source| TensorIoError::Io { path, source })
}

pub fn read_meta(tensor_path: &Path) -> Result<CheckpointMeta, TensorIoError> {
    let path = meta_path(tensor_path);
    let text = std::fs::read_to_string(&path).map_err(|source| TensorIoError::Io {
        path: path.clone(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| TensorIoError::Format {
        path,
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgesim_core::RngStream;

    #[test]
    fn networks_round_trip_bit_for_bit() {
        let mut rng = RngStream::new(99, "network-init");
        let net = DenseNetwork::init(&[12, 16, 16, 4], &mut rng);
        let text = network_to_string(&net);
        let back = network_from_string(Path::new("test.tensor"), &text).unwrap();
        assert_eq!(net, back);
        // And the text itself is stable across serializations.
        assert_eq!(text, network_to_string(&back));
    }

    #[test]
    fn corrupted_inputs_are_rejected_with_line_numbers() {
        let mut rng = RngStream::new(5, "network-init");
        let net = DenseNetwork::init(&[3, 2], &mut rng);
        let good = network_to_string(&net);

        let bad_header = good.replacen("edgesim-tensor v1", "edgesim-tensor v9", 1);
        let err = network_from_string(Path::new("t"), &bad_header).unwrap_err();
        assert!(err.to_string().contains("bad header"), "{err}");

        let truncated: String = good.lines().take(3).collect::<Vec<_>>().join("\n");
        let err = network_from_string(Path::new("t"), &truncated).unwrap_err();
        assert!(err.to_string().contains("unexpected end"), "{err}");

        let mangled = good.replacen("row ", "row x", 1);
        let err = network_from_string(Path::new("t"), &mangled).unwrap_err();
        assert!(err.to_string().contains("unparseable"), "{err}");
    }

    #[test]
    fn meta_sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let tensor = dir.path().join("checkpoint_best.tensor");
        let meta = CheckpointMeta {
            format_version: 1,
            edge_server_count: 3,
            episodes_completed: 20,
            train_steps: 77_000,
            epsilon: 0.818,
            failed_pct: 4.25,
        };
        write_meta(&tensor, &meta).unwrap();
        assert!(dir.path().join("checkpoint_best.meta.toml").exists());
        assert_eq!(read_meta(&tensor).unwrap(), meta);
    }
}
