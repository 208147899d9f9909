//! On-disk dataset layout and its loader/saver.
//!
//! A dataset directory holds:
//!
//! * `edges.tsv` (required) — one undirected edge per line as two
//!   tab-separated node indices; blank lines and `#` comments are skipped.
//! * `features.csv` (required) — one node per line, comma-separated floats;
//!   the row count defines the node count `N`.
//! * `lfs.csv` (optional) — `N` lines of comma-separated labeling-function
//!   votes, `-1` for abstain; requires `meta` to declare the class count.
//! * `labels.txt` (optional) — `N` lines of ground-truth class indices.
//! * `meta` (optional) — TOML declaring `n_classes` plus free provenance
//!   keys written by the generator.
//!
//! Every malformed value fails hard with a `file:line:` diagnostic, and
//! cross-file size mismatches name both counts. The loader records a
//! SHA-256 content hash per file so reports can pin exactly what they ran
//! on.

use crate::error::CliError;
use crate::Result;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use wsnet_core::weak::ABSTAIN;
use wsnet_core::{Graph, WeakLabelMatrix};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LFS_FILE: &str = "lfs.csv";
pub const LABELS_FILE: &str = "labels.txt";
pub const META_FILE: &str = "meta";

/// One dataset file's identity: its name inside the dataset directory and
/// the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileStamp {
    pub path: String,
    pub sha256: String,
}

/// Which files a bundle was built from, with content hashes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub directory: String,
    pub files: Vec<FileStamp>,
}

/// Declared dataset metadata plus optional generator provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MetaFile {
    pub n_classes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_lfs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// An in-memory dataset: the graph, whatever supervision the directory
/// provided, and the provenance of every file read.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub wlm: Option<WeakLabelMatrix>,
    pub y_true: Option<Vec<usize>>,
    /// Declared by `meta`, or inferred as `max(labels)+1` when only
    /// `labels.txt` is present.
    pub n_classes: Option<usize>,
    pub provenance: Provenance,
}

impl DatasetBundle {
    /// The labeling-function matrix, or a pointed error if `lfs.csv` was
    /// absent.
    pub fn require_wlm(&self) -> Result<&WeakLabelMatrix> {
        self.wlm.as_ref().ok_or_else(|| CliError::Dataset {
            path: PathBuf::from(&self.provenance.directory).join(LFS_FILE),
            message: "this command needs labeling functions, but the dataset has no lfs.csv"
                .into(),
        })
    }

    /// The ground-truth labels, or a pointed error if `labels.txt` was
    /// absent.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.y_true.as_deref().ok_or_else(|| CliError::Dataset {
            path: PathBuf::from(&self.provenance.directory).join(LABELS_FILE),
            message: "this command needs ground-truth labels, but the dataset has no labels.txt"
                .into(),
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_failure(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads a dataset file, recording its content hash. `required` controls
/// whether absence is an error or `None`.
fn read_stamped(
    dir: &Path,
    name: &str,
    required: bool,
    stamps: &mut Vec<FileStamp>,
) -> Result<Option<String>> {
    let path = dir.join(name);
    let bytes = match fs::read(&path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && !required => return Ok(None),
        Err(e) => {
            let adjective = if required { "required file" } else { "file" };
            return Err(CliError::Dataset {
                path,
                message: format!("cannot read {adjective}: {e}"),
            });
        }
    };
    let sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Dataset {
        path: path.clone(),
        message: "not valid UTF-8".into(),
    })?;
    stamps.push(FileStamp { path: name.to_string(), sha256 });
    Ok(Some(text))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
}

fn parse_features(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut flat = Vec::new();
    let mut n_rows = 0usize;
    let mut width: Option<usize> = None;
    for (ln, line) in data_lines(text) {
        let mut row_len = 0usize;
        for (col, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                parse_failure(
                    path,
                    ln,
                    format!("column {}: expected a float, got {field:?}", col + 1),
                )
            })?;
            if !value.is_finite() {
                return Err(parse_failure(
                    path,
                    ln,
                    format!("column {}: features must be finite, got {value}", col + 1),
                ));
            }
            flat.push(value);
            row_len += 1;
        }
        match width {
            None => width = Some(row_len),
            Some(w) if w != row_len => {
                return Err(parse_failure(
                    path,
                    ln,
                    format!("row has {row_len} columns but the first row has {w}"),
                ));
            }
            Some(_) => {}
        }
        n_rows += 1;
    }
    let width = width.ok_or_else(|| CliError::Dataset {
        path: path.to_path_buf(),
        message: "no feature rows found".into(),
    })?;
    Array2::from_shape_vec((n_rows, width), flat).map_err(|e| CliError::Dataset {
        path: path.to_path_buf(),
        message: format!("feature matrix shape error: {e}"),
    })
}

fn parse_edges(text: &str, path: &Path, n_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (ln, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_failure(
                path,
                ln,
                format!("expected two tab-separated node indices, got {} fields", fields.len()),
            ));
        }
        let mut pair = [0usize; 2];
        for (slot, field) in pair.iter_mut().zip(&fields) {
            let value: usize = field.trim().parse().map_err(|_| {
                parse_failure(path, ln, format!("expected a node index, got {field:?}"))
            })?;
            if value >= n_nodes {
                return Err(parse_failure(
                    path,
                    ln,
                    format!("node {value} is out of range: features.csv has {n_nodes} rows"),
                ));
            }
            *slot = value;
        }
        edges.push((pair[0], pair[1]));
    }
    Ok(edges)
}

fn parse_labels(text: &str, path: &Path, n_nodes: usize) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (ln, line) in data_lines(text) {
        let value: usize = line.parse().map_err(|_| {
            parse_failure(path, ln, format!("expected a class index, got {line:?}"))
        })?;
        labels.push(value);
    }
    if labels.len() != n_nodes {
        return Err(CliError::Dataset {
            path: path.to_path_buf(),
            message: format!(
                "labels.txt has {} labels but features.csv has {} nodes",
                labels.len(),
                n_nodes
            ),
        });
    }
    Ok(labels)
}

fn parse_votes(
    text: &str,
    path: &Path,
    n_nodes: usize,
    n_classes: usize,
) -> Result<Array2<i32>> {
    let mut rows: Vec<Vec<i32>> = Vec::new();
    let mut width: Option<usize> = None;
    for (ln, line) in data_lines(text) {
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let value: i64 = field.trim().parse().map_err(|_| {
                parse_failure(
                    path,
                    ln,
                    format!("column {}: expected a vote, got {field:?}", col + 1),
                )
            })?;
            if value < ABSTAIN as i64 || value >= n_classes as i64 {
                return Err(parse_failure(
                    path,
                    ln,
                    format!(
                        "vote {value} at column {} is outside -1..{n_classes}",
                        col + 1
                    ),
                ));
            }
            row.push(value as i32);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_failure(
                    path,
                    ln,
                    format!("row has {} columns but the first row has {w}", row.len()),
                ));
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    if rows.len() != n_nodes {
        return Err(CliError::Dataset {
            path: path.to_path_buf(),
            message: format!(
                "lfs.csv has {} rows but features.csv has {} nodes",
                rows.len(),
                n_nodes
            ),
        });
    }
    let width = width.expect("row count equals n_nodes >= 1");
    let flat: Vec<i32> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n_nodes, width), flat).map_err(|e| CliError::Dataset {
        path: path.to_path_buf(),
        message: format!("vote matrix shape error: {e}"),
    })
}

fn parse_meta(text: &str, path: &Path) -> Result<MetaFile> {
    let meta: MetaFile = toml::from_str(text).map_err(|e| CliError::Dataset {
        path: path.to_path_buf(),
        message: format!("malformed meta file: {e}"),
    })?;
    if meta.n_classes < 2 {
        return Err(CliError::Dataset {
            path: path.to_path_buf(),
            message: format!("meta must declare n_classes >= 2, got {}", meta.n_classes),
        });
    }
    Ok(meta)
}

/// Loads a dataset directory into memory, validating every file and
/// cross-file invariant.
pub fn load_dataset(dir: &Path) -> Result<DatasetBundle> {
    let mut stamps = Vec::new();

    let features_text = read_stamped(dir, FEATURES_FILE, true, &mut stamps)?
        .expect("required file present or error");
    let features = parse_features(&features_text, &dir.join(FEATURES_FILE))?;
    let n_nodes = features.nrows();

    let edges_text =
        read_stamped(dir, EDGES_FILE, true, &mut stamps)?.expect("required file present");
    let edges = parse_edges(&edges_text, &dir.join(EDGES_FILE), n_nodes)?;

    let meta = read_stamped(dir, META_FILE, false, &mut stamps)?
        .map(|text| parse_meta(&text, &dir.join(META_FILE)))
        .transpose()?;

    let y_true = read_stamped(dir, LABELS_FILE, false, &mut stamps)?
        .map(|text| parse_labels(&text, &dir.join(LABELS_FILE), n_nodes))
        .transpose()?;

    // Class count: declared by meta, else inferred from labels.
    let n_classes = match (&meta, &y_true) {
        (Some(m), _) => Some(m.n_classes),
        (None, Some(y)) => y.iter().max().map(|&m| m + 1),
        (None, None) => None,
    };
    if let (Some(c), Some(y)) = (n_classes, &y_true) {
        for (i, &label) in y.iter().enumerate() {
            if label >= c {
                return Err(CliError::Dataset {
                    path: dir.join(LABELS_FILE),
                    message: format!(
                        "label {label} at node {i} is outside the declared {c} classes"
                    ),
                });
            }
        }
    }

    let lfs_text = read_stamped(dir, LFS_FILE, false, &mut stamps)?;
    let wlm = match lfs_text {
        None => None,
        Some(text) => {
            let c = n_classes.ok_or_else(|| CliError::Dataset {
                path: dir.join(META_FILE),
                message: "lfs.csv is present but no meta file declares n_classes".into(),
            })?;
            let votes = parse_votes(&text, &dir.join(LFS_FILE), n_nodes, c)?;
            Some(WeakLabelMatrix::new(votes, c)?)
        }
    };

    let graph = Graph::build(&edges, features).map_err(|e| CliError::Dataset {
        path: dir.join(EDGES_FILE),
        message: e.to_string(),
    })?;

    Ok(DatasetBundle {
        graph,
        wlm,
        y_true,
        n_classes,
        provenance: Provenance { directory: dir.display().to_string(), files: stamps },
    })
}

fn write_stamped(dir: &Path, name: &str, content: &str) -> Result<FileStamp> {
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(FileStamp { path: name.to_string(), sha256: sha256_hex(content.as_bytes()) })
}

/// Writes a complete dataset directory (all five files). Floats are
/// formatted with Rust's shortest-roundtrip `Display`, so loading the
/// directory back reproduces the matrices bit for bit.
pub fn save_dataset(
    dir: &Path,
    graph: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    meta: &MetaFile,
) -> Result<Provenance> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;

    let mut edges = String::new();
    for &(u, v) in graph.edges() {
        writeln!(edges, "{u}\t{v}").expect("string write");
    }

    let mut features = String::new();
    for row in graph.features().rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(features, "{}", fields.join(",")).expect("string write");
    }

    let mut lfs = String::new();
    for row in wlm.votes().rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(lfs, "{}", fields.join(",")).expect("string write");
    }

    let mut labels = String::new();
    for &label in y_true {
        writeln!(labels, "{label}").expect("string write");
    }

    let meta_text = toml::to_string(meta).map_err(|e| CliError::Dataset {
        path: dir.join(META_FILE),
        message: format!("cannot serialize meta: {e}"),
    })?;

    let files = vec![
        write_stamped(dir, EDGES_FILE, &edges)?,
        write_stamped(dir, FEATURES_FILE, &features)?,
        write_stamped(dir, LFS_FILE, &lfs)?,
        write_stamped(dir, LABELS_FILE, &labels)?,
        write_stamped(dir, META_FILE, &meta_text)?,
    ];
    Ok(Provenance { directory: dir.display().to_string(), files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use tempfile::TempDir;

    fn write(dir: &Path, name: &str, content: &str) {
        fs::write(dir.join(name), content).unwrap();
    }

    fn minimal(dir: &Path) {
        write(dir, FEATURES_FILE, "1.0,0.0\n0.0,1.0\n0.5,0.5\n");
        write(dir, EDGES_FILE, "0\t1\n1\t2\n");
    }

    #[test]
    fn loads_a_minimal_graph_only_dataset() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        let bundle = load_dataset(tmp.path()).unwrap();
        assert_eq!(bundle.graph.n_nodes(), 3);
        assert_eq!(bundle.graph.feature_dim(), 2);
        assert!(bundle.wlm.is_none());
        assert!(bundle.y_true.is_none());
        assert_eq!(bundle.n_classes, None);
        assert_eq!(bundle.provenance.files.len(), 2);
        assert!(bundle.provenance.files.iter().all(|f| f.sha256.len() == 64));
    }

    #[test]
    fn loads_full_supervision_when_present() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\n");
        write(tmp.path(), LABELS_FILE, "0\n1\n1\n");
        write(tmp.path(), LFS_FILE, "0,-1\n1,1\n-1,1\n");
        let bundle = load_dataset(tmp.path()).unwrap();
        assert_eq!(bundle.n_classes, Some(2));
        assert_eq!(bundle.y_true.as_deref(), Some(&[0, 1, 1][..]));
        let wlm = bundle.wlm.unwrap();
        assert_eq!(wlm.n_lfs(), 2);
        assert_eq!(wlm.votes()[[0, 1]], ABSTAIN);
        assert_eq!(bundle.provenance.files.len(), 5);
    }

    #[test]
    fn missing_required_file_is_reported_with_its_path() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "1.0\n");
        let err = load_dataset(tmp.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(EDGES_FILE), "{msg}");
        assert!(msg.contains("required"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn malformed_feature_field_names_line_and_column() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "1.0,2.0\n3.0,oops\n");
        write(tmp.path(), EDGES_FILE, "0\t1\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("features.csv:2"), "{msg}");
        assert!(msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn ragged_feature_rows_are_rejected() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "1.0,2.0\n3.0\n");
        write(tmp.path(), EDGES_FILE, "0\t1\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("features.csv:2"), "{msg}");
        assert!(msg.contains("1 columns") && msg.contains("first row has 2"), "{msg}");
    }

    #[test]
    fn edge_endpoint_out_of_range_names_both_counts() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "1.0\n2.0\n");
        write(tmp.path(), EDGES_FILE, "0\t1\n1\t5\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("edges.tsv:2"), "{msg}");
        assert!(msg.contains("node 5") && msg.contains("2 rows"), "{msg}");
    }

    #[test]
    fn edge_line_with_wrong_arity_is_rejected() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "1.0\n2.0\n");
        write(tmp.path(), EDGES_FILE, "0\t1\t2\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("edges.tsv:1"), "{msg}");
        assert!(msg.contains("two tab-separated"), "{msg}");
    }

    #[test]
    fn label_count_mismatch_names_both_counts() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), LABELS_FILE, "0\n1\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("2 labels") && msg.contains("3 nodes"), "{msg}");
    }

    #[test]
    fn vote_row_count_mismatch_names_both_counts() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\n");
        write(tmp.path(), LFS_FILE, "0,1\n1,1\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("2 rows") && msg.contains("3 nodes"), "{msg}");
    }

    #[test]
    fn vote_out_of_range_names_row_and_column() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\n");
        write(tmp.path(), LFS_FILE, "0,1\n1,9\n-1,0\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("lfs.csv:2"), "{msg}");
        assert!(msg.contains("vote 9 at column 2"), "{msg}");
        assert!(msg.contains("-1..2"), "{msg}");
    }

    #[test]
    fn abstain_below_minus_one_is_rejected() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\n");
        write(tmp.path(), LFS_FILE, "0,1\n1,-2\n-1,0\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("vote -2 at column 2"), "{msg}");
    }

    #[test]
    fn lfs_without_meta_is_an_error() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), LFS_FILE, "0,1\n1,1\n0,0\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("meta"), "{msg}");
        assert!(msg.contains("n_classes"), "{msg}");
    }

    #[test]
    fn lfs_with_labels_but_no_meta_infers_class_count() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), LABELS_FILE, "0\n1\n2\n");
        write(tmp.path(), LFS_FILE, "0,1\n1,2\n-1,0\n");
        let bundle = load_dataset(tmp.path()).unwrap();
        assert_eq!(bundle.n_classes, Some(3));
        assert_eq!(bundle.wlm.unwrap().n_classes(), 3);
    }

    #[test]
    fn label_outside_declared_classes_is_rejected() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\n");
        write(tmp.path(), LABELS_FILE, "0\n1\n2\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("label 2 at node 2"), "{msg}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let tmp = TempDir::new().unwrap();
        write(tmp.path(), FEATURES_FILE, "# header comment\n1.0\n\n2.0\n");
        write(tmp.path(), EDGES_FILE, "# u v\n\n0\t1\n");
        let bundle = load_dataset(tmp.path()).unwrap();
        assert_eq!(bundle.graph.n_nodes(), 2);
    }

    #[test]
    fn save_then_load_roundtrips_bit_for_bit() {
        let tmp = TempDir::new().unwrap();
        let graph = Graph::build(
            &[(0, 1), (1, 2), (2, 3)],
            array![
                [0.1234567890123457, -1.5e-7],
                [2.0, 3.25],
                [-0.75, 1e300],
                [0.0, -0.0]
            ],
        )
        .unwrap();
        let wlm = WeakLabelMatrix::new(array![[0, -1], [1, 1], [-1, 0], [1, 0]], 2).unwrap();
        let y = vec![0, 1, 0, 1];
        let meta = MetaFile { n_classes: 2, n_nodes: Some(4), ..MetaFile::default() };
        let prov = save_dataset(tmp.path(), &graph, &wlm, &y, &meta).unwrap();
        assert_eq!(prov.files.len(), 5);

        let bundle = load_dataset(tmp.path()).unwrap();
        assert_eq!(bundle.graph.edges(), graph.edges());
        assert_eq!(bundle.graph.features(), graph.features());
        assert_eq!(bundle.wlm.as_ref().unwrap().votes(), wlm.votes());
        assert_eq!(bundle.y_true.as_deref(), Some(&y[..]));
        assert_eq!(bundle.n_classes, Some(2));
        // The loader's hashes match what the saver recorded.
        let mut saved = prov.files.clone();
        let mut loaded = bundle.provenance.files.clone();
        saved.sort_by(|a, b| a.path.cmp(&b.path));
        loaded.sort_by(|a, b| a.path.cmp(&b.path));
        assert_eq!(saved, loaded);
    }

    #[test]
    fn meta_tolerates_unknown_keys_and_requires_two_classes() {
        let tmp = TempDir::new().unwrap();
        minimal(tmp.path());
        write(tmp.path(), META_FILE, "n_classes = 2\nfuture_key = \"x\"\n");
        assert!(load_dataset(tmp.path()).is_ok());
        write(tmp.path(), META_FILE, "n_classes = 1\n");
        let msg = load_dataset(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("n_classes >= 2"), "{msg}");
    }
}
