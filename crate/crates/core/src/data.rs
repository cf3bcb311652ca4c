//! Datasets: synthetic generators, CSV, CIFAR-10 binary batches, and splits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::rng::Prng;
use crate::tensor::Tensor;

pub const CIFAR10_RECORD_BYTES: usize = 3073;
pub const CIFAR10_PIXELS: usize = 3072;
pub const CIFAR10_CLASSES: usize = 10;

/// Labelled inputs, `n x d` features and `n` labels in `0..classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Tensor,
    labels: Vec<usize>,
    classes: usize,
    name: String,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>, classes: usize, name: impl Into<String>) -> Result<Self> {
        if inputs.shape().len() != 2 {
            return invalid(format!("inputs must be n x d, got {:?}", inputs.shape()));
        }
        if inputs.rows() != labels.len() {
            return invalid(format!("{} input rows but {} labels", inputs.rows(), labels.len()));
        }
        if classes < 2 {
            return invalid(format!("need at least 2 classes, got {classes}"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return invalid(format!("label {bad} out of range for {classes} classes"));
        }
        Ok(Self {
            inputs,
            labels,
            classes,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            name: self.name.clone(),
        }
    }

    /// The first `count` rows (all rows when `count >= len`).
    pub fn head(&self, count: usize) -> Dataset {
        let idx: Vec<usize> = (0..count.min(self.len())).collect();
        self.subset(&idx)
    }

    /// One row per sample: features then label, shortest round-trip float formatting.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            for v in self.inputs.row(i) {
                write!(out, "{v},").expect("write to string");
            }
            writeln!(out, "{}", self.labels[i]).expect("write to string");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Vertices of a regular simplex with `c` vertices, unit norm, in `R^(c-1)`.
fn simplex_vertices(c: usize) -> Vec<Vec<f64>> {
    // Centered basis vectors e_k - 1/c projected on the Helmert basis of 1^perp.
    let helmert: Vec<Vec<f64>> = (1..c)
        .map(|j| {
            let norm = ((j * (j + 1)) as f64).sqrt();
            (0..c)
                .map(|i| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(j as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect();
    (0..c)
        .map(|k| {
            let v: Vec<f64> = helmert.iter().map(|u| u[k]).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

/// Gaussian blobs around unit-norm simplex vertices.
///
/// The simplex occupies the first `c - 1` coordinates; the rest of the `d`
/// dimensions only carry noise.
pub fn gen_blobs(classes: usize, per_class: usize, dim: usize, spread: f64, rng: &mut Prng) -> Result<Dataset> {
    if classes < 2 {
        return invalid(format!("blobs need at least 2 classes, got {classes}"));
    }
    if per_class == 0 {
        return invalid("blobs need at least one point per class");
    }
    if dim + 1 < classes {
        return invalid(format!("{classes} simplex centers need dimension >= {}, got {dim}", classes - 1));
    }
    if !(spread >= 0.0) {
        return invalid(format!("spread must be >= 0, got {spread}"));
    }
    let centers = simplex_vertices(classes);
    let mut data = Vec::with_capacity(classes * per_class * dim);
    let mut labels = Vec::with_capacity(classes * per_class);
    for (k, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            for j in 0..dim {
                let base = center.get(j).copied().unwrap_or(0.0);
                data.push(base + spread * rng.next_gaussian());
            }
            labels.push(k);
        }
    }
    let inputs = Tensor::matrix(labels.len(), dim, data)?;
    Dataset::new(inputs, labels, classes, format!("blobs:{classes}x{per_class}"))
}

/// Point `i` of spiral arm 0 before noise: `t = (i + 0.5) / per_class`,
/// radius `t`, angle `3 pi t`. Arm 1 is the point reflection through the origin.
pub fn spiral_point(i: usize, per_class: usize, arm: usize) -> [f64; 2] {
    let t = (i as f64 + 0.5) / per_class as f64;
    let angle = 3.0 * std::f64::consts::PI * t;
    let sign = if arm == 0 { 1.0 } else { -1.0 };
    [sign * t * angle.cos(), sign * t * angle.sin()]
}

pub fn gen_two_spirals(per_class: usize, noise: f64, rng: &mut Prng) -> Result<Dataset> {
    if per_class == 0 {
        return invalid("spirals need at least one point per class");
    }
    if !(noise >= 0.0) {
        return invalid(format!("noise must be >= 0, got {noise}"));
    }
    let mut data = Vec::with_capacity(4 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for arm in 0..2 {
        for i in 0..per_class {
            let [x, y] = spiral_point(i, per_class, arm);
            data.push(x + noise * rng.next_gaussian());
            data.push(y + noise * rng.next_gaussian());
            labels.push(arm);
        }
    }
    let inputs = Tensor::matrix(labels.len(), 2, data)?;
    Dataset::new(inputs, labels, 2, format!("spirals:{per_class}"))
}

/// Parses headerless CSV rows of `d` floats followed by an integer label.
pub fn parse_csv(text: &str, classes: usize, name: &str) -> Result<Dataset> {
    if classes < 2 {
        return invalid(format!("need at least 2 classes, got {classes}"));
    }
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one feature and a label".into(),
            });
        }
        let d = fields.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {expected} features, found {d}"),
                })
            }
            Some(_) => {}
        }
        for (col, f) in fields[..d].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} is not a number: {f:?}", col + 1),
            })?;
            data.push(v);
        }
        let label: usize = fields[d].parse().map_err(|_| Error::Parse {
            line,
            message: format!("label is not a non-negative integer: {:?}", fields[d]),
        })?;
        if label >= classes {
            return Err(Error::Parse {
                line,
                message: format!("label {label} out of range for {classes} classes"),
            });
        }
        labels.push(label);
    }
    let Some(d) = dim else {
        return Err(Error::Parse {
            line: 1,
            message: "file contains no rows".into(),
        });
    };
    let inputs = Tensor::matrix(labels.len(), d, data)?;
    Dataset::new(inputs, labels, classes, name)
}

pub fn load_csv(path: impl AsRef<Path>, classes: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_csv(&text, classes, &format!("csv:{}", path.display()))
}

/// Decodes concatenated 3073-byte CIFAR-10 records into `(pixels in [0, 1], labels)`.
pub fn parse_cifar10(bytes: &[u8]) -> Result<(Vec<f64>, Vec<usize>)> {
    if bytes.is_empty() || bytes.len() % CIFAR10_RECORD_BYTES != 0 {
        return Err(Error::Format(format!(
            "CIFAR-10 length {} is not a positive multiple of {CIFAR10_RECORD_BYTES}",
            bytes.len()
        )));
    }
    let records = bytes.len() / CIFAR10_RECORD_BYTES;
    let mut pixels = Vec::with_capacity(records * CIFAR10_PIXELS);
    let mut labels = Vec::with_capacity(records);
    for (r, rec) in bytes.chunks_exact(CIFAR10_RECORD_BYTES).enumerate() {
        let label = rec[0] as usize;
        if label >= CIFAR10_CLASSES {
            return Err(Error::Format(format!("record {r}: label byte {label} > 9")));
        }
        labels.push(label);
        pixels.extend(rec[1..].iter().map(|&b| f64::from(b) / 255.0));
    }
    Ok((pixels, labels))
}

/// Reads CIFAR-10 binary batch files in order. With `standardize`, each of the
/// three colour planes is shifted and scaled to zero mean and unit variance.
pub fn load_cifar10_binary<P: AsRef<Path>>(paths: &[P], standardize: bool) -> Result<Dataset> {
    if paths.is_empty() {
        return invalid("no CIFAR-10 batch files given");
    }
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for p in paths {
        let bytes = fs::read(p.as_ref())?;
        let (px, lb) = parse_cifar10(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", p.as_ref().display())),
            other => other,
        })?;
        pixels.extend(px);
        labels.extend(lb);
    }
    if standardize {
        standardize_planes(&mut pixels, labels.len());
    }
    let inputs = Tensor::matrix(labels.len(), CIFAR10_PIXELS, pixels)?;
    Dataset::new(inputs, labels, CIFAR10_CLASSES, "cifar10")
}

fn standardize_planes(pixels: &mut [f64], records: usize) {
    let plane = CIFAR10_PIXELS / 3;
    for ch in 0..3 {
        let values = || (0..records).flat_map(move |r| (0..plane).map(move |p| r * CIFAR10_PIXELS + ch * plane + p));
        let count = (records * plane) as f64;
        let mean = values().map(|i| pixels[i]).sum::<f64>() / count;
        let var = values().map(|i| (pixels[i] - mean).powi(2)).sum::<f64>() / count;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in values() {
            pixels[i] = (pixels[i] - mean) / sd;
        }
    }
}

/// Seeded permutation cut into contiguous train/validation/test slices.
///
/// Sizes are `round(f * n)`; when the fractions sum to 1 the test slice takes
/// the remainder so the three parts cover the dataset exactly.
pub fn split(dataset: &Dataset, fractions: [f64; 3], rng: &mut Prng) -> Result<(Dataset, Dataset, Dataset)> {
    if fractions.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) || fractions[0] <= 0.0 {
        return invalid(format!("split fractions must be >= 0 with a positive train share, got {fractions:?}"));
    }
    let total: f64 = fractions.iter().sum();
    if total > 1.0 + 1e-9 {
        return invalid(format!("split fractions sum to {total} > 1"));
    }
    let n = dataset.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let rest = n - n_train - n_val;
    let n_test = if (total - 1.0).abs() <= 1e-9 {
        rest
    } else {
        ((fractions[2] * n as f64).round() as usize).min(rest)
    };
    let perm = rng.permutation(n);
    let train = dataset.subset(&perm[..n_train]);
    let val = dataset.subset(&perm[n_train..n_train + n_val]);
    let test = dataset.subset(&perm[n_train + n_val..n_train + n_val + n_test]);
    Ok((train, val, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_is_regular_unit() {
        for c in 2..7 {
            let v = simplex_vertices(c);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            for i in 0..c {
                assert!((dot(&v[i], &v[i]) - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!((dot(&v[i], &v[j]) + 1.0 / (c - 1) as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn blobs_count_and_determinism() {
        let a = gen_blobs(3, 200, 2, 0.15, &mut Prng::new(1)).unwrap();
        assert_eq!(a.len(), 600);
        assert_eq!(a, gen_blobs(3, 200, 2, 0.15, &mut Prng::new(1)).unwrap());
        assert!(gen_blobs(4, 5, 2, 0.1, &mut Prng::new(1)).is_err());
    }

    #[test]
    fn zero_spread_blobs_sit_on_centers() {
        let d = gen_blobs(3, 4, 3, 0.0, &mut Prng::new(5)).unwrap();
        let centers = simplex_vertices(3);
        for i in 0..d.len() {
            let k = d.labels()[i];
            assert_eq!(d.inputs().row(i), &[centers[k][0], centers[k][1], 0.0]);
        }
    }

    #[test]
    fn spirals_balanced_and_parametric() {
        let d = gen_two_spirals(50, 0.0, &mut Prng::new(3)).unwrap();
        assert_eq!(d.labels().iter().filter(|&&y| y == 0).count(), 50);
        assert_eq!(d.labels().iter().filter(|&&y| y == 1).count(), 50);
        for i in 0..50 {
            let t = (i as f64 + 0.5) / 50.0;
            let a = 3.0 * std::f64::consts::PI * t;
            let p = d.inputs().row(i);
            assert!((p[0] - t * a.cos()).abs() < 1e-15 && (p[1] - t * a.sin()).abs() < 1e-15);
            let q = d.inputs().row(50 + i);
            assert!((q[0] + t * a.cos()).abs() < 1e-15 && (q[1] + t * a.sin()).abs() < 1e-15);
        }
        let noisy = gen_two_spirals(20, 0.1, &mut Prng::new(8)).unwrap();
        assert_eq!(noisy, gen_two_spirals(20, 0.1, &mut Prng::new(8)).unwrap());
    }

    #[test]
    fn csv_parses() {
        let d = parse_csv("1.0,2.0,0\n3.0,4.0,1\n", 2, "t").unwrap();
        assert_eq!((d.len(), d.dim()), (2, 2));
        assert_eq!(d.inputs().data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_errors_name_lines() {
        let e = parse_csv("1.0,2.0,0\n3.0,4.0,2\n", 2, "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_csv("1.0,2.0,0\n3.0,1\n", 2, "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_csv("1.0,x,0\n", 2, "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        assert!(parse_csv("", 2, "t").is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let d = gen_blobs(3, 10, 4, 0.3, &mut Prng::new(12)).unwrap();
        let back = parse_csv(&d.to_csv_string(), 3, d.name()).unwrap();
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.inputs(), d.inputs());
    }

    #[test]
    fn cifar_single_record() {
        let mut rec = vec![255u8; CIFAR10_RECORD_BYTES];
        rec[0] = 7;
        let (px, labels) = parse_cifar10(&rec).unwrap();
        assert_eq!(labels, vec![7]);
        assert_eq!(px.len(), CIFAR10_PIXELS);
        assert!(px.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cifar_rejects_bad_input() {
        let rec = vec![0u8; CIFAR10_RECORD_BYTES - 1];
        assert!(matches!(parse_cifar10(&rec), Err(Error::Format(_))));
        let mut rec = vec![0u8; CIFAR10_RECORD_BYTES];
        rec[0] = 10;
        assert!(matches!(parse_cifar10(&rec), Err(Error::Format(_))));
    }

    #[test]
    fn cifar_standardized_planes() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for r in 0..3u8 {
            bytes.push(r);
            bytes.extend((0..CIFAR10_PIXELS).map(|i| ((i * 7 + r as usize * 13) % 256) as u8));
        }
        let path = dir.path().join("batch.bin");
        fs::write(&path, &bytes).unwrap();
        let d = load_cifar10_binary(&[&path], true).unwrap();
        assert_eq!((d.len(), d.dim(), d.classes()), (3, 3072, 10));
        let plane = CIFAR10_PIXELS / 3;
        for ch in 0..3 {
            let vals: Vec<f64> = (0..3).flat_map(|r| d.inputs().row(r)[ch * plane..(ch + 1) * plane].to_vec()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-10);
        }
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = gen_blobs(2, 5, 2, 0.1, &mut Prng::new(0)).unwrap();
        let (tr, va, te) = split(&d, [0.8, 0.1, 0.1], &mut Prng::new(4)).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (8, 1, 1));
        let again = split(&d, [0.8, 0.1, 0.1], &mut Prng::new(4)).unwrap();
        assert_eq!(again.0, tr);
        // Partition: every original row appears exactly once.
        let mut rows: Vec<Vec<u64>> = [&tr, &va, &te]
            .iter()
            .flat_map(|s| (0..s.len()).map(|i| s.inputs().row(i).iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>())
            .collect();
        let mut orig: Vec<Vec<u64>> = (0..d.len()).map(|i| d.inputs().row(i).iter().map(|v| v.to_bits()).collect()).collect();
        rows.sort();
        orig.sort();
        assert_eq!(rows, orig);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let d = gen_blobs(2, 5, 2, 0.1, &mut Prng::new(0)).unwrap();
        assert!(split(&d, [0.8, 0.3, 0.1], &mut Prng::new(0)).is_err());
        assert!(split(&d, [0.0, 0.5, 0.5], &mut Prng::new(0)).is_err());
        assert!(split(&d, [0.5, -0.1, 0.1], &mut Prng::new(0)).is_err());
    }
}
