//! Readers and writers for every artifact: corpora, latent truth,
//! memberships, layouts, traces, MAP states, config files, matrices and
//! binary PNM images.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the values bit for bit.

use crate::error::{invalid, Result};
use crate::features::{DocLayout, GrayImage, LabelMap, LayoutScheme, RgbImage};
use crate::model::{DocState, Document, ModelState, TopicParams};
use crate::sampler::Trace;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("{what}: cannot parse `{s}` as a number")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| invalid(format!("{what}: cannot parse `{s}` as an index")))
}

// ---------------------------------------------------------------------------
// Corpus CSV: doc_id,word_index,f0,f1,...
// ---------------------------------------------------------------------------

pub fn write_corpus(path: &Path, corpus: &[Document]) -> Result<()> {
    let dim = corpus.first().map(|d| d.dim()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["doc_id".to_string(), "word_index".to_string()];
    header.extend((0..dim).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (d, doc) in corpus.iter().enumerate() {
        for (n, word) in doc.words.iter().enumerate() {
            let mut rec = vec![d.to_string(), n.to_string()];
            rec.extend(word.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let mut r = csv::Reader::from_path(path)?;
    let dim = r.headers()?.len().saturating_sub(2);
    if dim == 0 {
        return Err(invalid("corpus file has no feature columns"));
    }
    let mut rows: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        if record.len() != dim + 2 {
            return Err(invalid("corpus row has the wrong column count"));
        }
        let doc_id = parse_usize(&record[0], "doc_id")?;
        let word_index = parse_usize(&record[1], "word_index")?;
        let word: Result<Vec<f64>> =
            (0..dim).map(|j| parse_f64(&record[j + 2], "feature")).collect();
        if rows.entry(doc_id).or_default().insert(word_index, word?).is_some() {
            return Err(invalid(format!("duplicate word {word_index} in document {doc_id}")));
        }
    }
    if rows.is_empty() {
        return Err(invalid("corpus file contains no words"));
    }
    let mut corpus = Vec::with_capacity(rows.len());
    for (expect, (doc_id, words)) in rows.into_iter().enumerate() {
        if doc_id != expect {
            return Err(invalid(format!("document ids must be contiguous; missing {expect}")));
        }
        let mut ordered = Vec::with_capacity(words.len());
        for (expect_n, (n, word)) in words.into_iter().enumerate() {
            if n != expect_n {
                return Err(invalid(format!(
                    "word indices in document {doc_id} must be contiguous; missing {expect_n}"
                )));
            }
            ordered.push(word);
        }
        corpus.push(Document::new(ordered, None)?);
    }
    Ok(corpus)
}

// ---------------------------------------------------------------------------
// Truth CSV: doc_id,word_index,scale,pi0..,z0..
// ---------------------------------------------------------------------------

pub fn write_truth(path: &Path, docs: &[DocState]) -> Result<()> {
    let k = docs.first().map(|d| d.proportions.len()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["doc_id".to_string(), "word_index".to_string(), "scale".to_string()];
    header.extend((0..k).map(|t| format!("pi{t}")));
    header.extend((0..k).map(|t| format!("z{t}")));
    w.write_record(&header)?;
    for (d, ds) in docs.iter().enumerate() {
        for (n, z) in ds.memberships.iter().enumerate() {
            let mut rec = vec![d.to_string(), n.to_string(), ds.scale.to_string()];
            rec.extend(ds.proportions.iter().map(|x| x.to_string()));
            rec.extend(z.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<Vec<DocState>> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    if cols < 3 || (cols - 3) % 2 != 0 {
        return Err(invalid("truth file must have scale plus paired pi/z columns"));
    }
    let k = (cols - 3) / 2;
    let mut docs: Vec<DocState> = Vec::new();
    for record in r.records() {
        let record = record?;
        let doc_id = parse_usize(&record[0], "doc_id")?;
        let scale = parse_f64(&record[2], "scale")?;
        let proportions: Result<Vec<f64>> =
            (0..k).map(|t| parse_f64(&record[3 + t], "pi")).collect();
        let z: Result<Vec<f64>> = (0..k).map(|t| parse_f64(&record[3 + k + t], "z")).collect();
        if doc_id == docs.len() {
            docs.push(DocState { proportions: proportions?, scale, memberships: vec![z?] });
        } else if doc_id + 1 == docs.len() {
            docs[doc_id].memberships.push(z?);
        } else {
            return Err(invalid("truth rows must be grouped by document"));
        }
    }
    if docs.is_empty() {
        return Err(invalid("truth file contains no rows"));
    }
    Ok(docs)
}

// ---------------------------------------------------------------------------
// Memberships CSV: doc_id,word_index,z0..
// ---------------------------------------------------------------------------

pub fn write_memberships(path: &Path, memberships: &[Vec<Vec<f64>>]) -> Result<()> {
    let k = memberships
        .iter()
        .flat_map(|d| d.first())
        .map(|z| z.len())
        .next()
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["doc_id".to_string(), "word_index".to_string()];
    header.extend((0..k).map(|t| format!("z{t}")));
    w.write_record(&header)?;
    for (d, doc) in memberships.iter().enumerate() {
        for (n, z) in doc.iter().enumerate() {
            let mut rec = vec![d.to_string(), n.to_string()];
            rec.extend(z.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_memberships(path: &Path) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut r = csv::Reader::from_path(path)?;
    let k = r.headers()?.len().saturating_sub(2);
    if k < 2 {
        return Err(invalid("membership file needs at least two topic columns"));
    }
    let mut docs: Vec<Vec<Vec<f64>>> = Vec::new();
    for record in r.records() {
        let record = record?;
        let doc_id = parse_usize(&record[0], "doc_id")?;
        let z: Result<Vec<f64>> = (0..k).map(|t| parse_f64(&record[2 + t], "z")).collect();
        if doc_id == docs.len() {
            docs.push(vec![z?]);
        } else if doc_id + 1 == docs.len() {
            docs[doc_id].push(z?);
        } else {
            return Err(invalid("membership rows must be grouped by document"));
        }
    }
    if docs.is_empty() {
        return Err(invalid("membership file contains no rows"));
    }
    Ok(docs)
}

/// Per-document membership rows of a model state, in the layout the
/// membership CSV uses.
pub fn memberships_of(state: &ModelState) -> Vec<Vec<Vec<f64>>> {
    state.docs.iter().map(|d| d.memberships.clone()).collect()
}

// ---------------------------------------------------------------------------
// Layout CSV: doc_id,word_index,row,col
// ---------------------------------------------------------------------------

pub fn write_layout(path: &Path, layout: &DocLayout) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["doc_id", "word_index", "row", "col"])?;
    for (d, coords) in layout.coords.iter().enumerate() {
        for (n, &(r, c)) in coords.iter().enumerate() {
            w.write_record(&[d.to_string(), n.to_string(), r.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_layout(path: &Path) -> Result<DocLayout> {
    let mut r = csv::Reader::from_path(path)?;
    let mut coords: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut height = 0;
    let mut width = 0;
    for record in r.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(invalid("layout rows must have four columns"));
        }
        let doc_id = parse_usize(&record[0], "doc_id")?;
        let row = parse_usize(&record[2], "row")?;
        let col = parse_usize(&record[3], "col")?;
        height = height.max(row + 1);
        width = width.max(col + 1);
        if doc_id == coords.len() {
            coords.push(vec![(row, col)]);
        } else if doc_id + 1 == coords.len() {
            coords[doc_id].push((row, col));
        } else {
            return Err(invalid("layout rows must be grouped by document"));
        }
    }
    if coords.is_empty() {
        return Err(invalid("layout file contains no rows"));
    }
    // A document must not map two words onto one pixel.
    for (doc_id, doc) in coords.iter().enumerate() {
        let mut seen = doc.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != doc.len() {
            return Err(invalid(format!("document {doc_id} maps a pixel twice")));
        }
    }
    Ok(DocLayout { scheme: LayoutScheme::External, height, width, coords })
}

// ---------------------------------------------------------------------------
// Trace CSV: sweep,log_joint,acc_pi,acc_s,acc_z,acc_mu,acc_sigma
// ---------------------------------------------------------------------------

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep", "log_joint", "acc_pi", "acc_s", "acc_z", "acc_mu", "acc_sigma"])?;
    for (i, (lj, rates)) in trace
        .log_joint_series
        .iter()
        .zip(&trace.acceptance_rates)
        .enumerate()
    {
        w.write_record(&[
            (i + 1).to_string(),
            lj.to_string(),
            rates.proportions.to_string(),
            rates.scale.to_string(),
            rates.membership.to_string(),
            rates.mean.to_string(),
            rates.sigma.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// MAP state key-value file
// ---------------------------------------------------------------------------

/// The per-document and topic parameters read back from a MAP state file
/// (memberships live in their own CSV).
#[derive(Debug, Clone, PartialEq)]
pub struct MapSummary {
    pub topics: TopicParams,
    pub proportions: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    pub log_joint: f64,
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn split_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, what)).collect()
}

pub fn write_map_state(path: &Path, state: &ModelState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "topics = {}", state.topics.k())?;
    writeln!(w, "dim = {}", state.topics.dim())?;
    writeln!(w, "docs = {}", state.docs.len())?;
    writeln!(w, "log_joint = {}", state.log_joint)?;
    writeln!(w, "sigma2 = {}", state.topics.sigma2)?;
    for (k, mean) in state.topics.means.iter().enumerate() {
        writeln!(w, "mean.{k} = {}", join_floats(mean))?;
    }
    for (d, ds) in state.docs.iter().enumerate() {
        writeln!(w, "doc.{d}.pi = {}", join_floats(&ds.proportions))?;
        writeln!(w, "doc.{d}.s = {}", ds.scale)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_map_state(path: &Path) -> Result<MapSummary> {
    let entries = read_key_values(path)?;
    let get = |key: &str| {
        entries
            .get(key)
            .ok_or_else(|| invalid(format!("map state file is missing `{key}`")))
    };
    let k = parse_usize(get("topics")?, "topics")?;
    let docs = parse_usize(get("docs")?, "docs")?;
    let log_joint = parse_f64(get("log_joint")?, "log_joint")?;
    let sigma2 = parse_f64(get("sigma2")?, "sigma2")?;
    let mut means = Vec::with_capacity(k);
    for t in 0..k {
        means.push(split_floats(get(&format!("mean.{t}"))?, "mean")?);
    }
    let mut proportions = Vec::with_capacity(docs);
    let mut scales = Vec::with_capacity(docs);
    for d in 0..docs {
        proportions.push(split_floats(get(&format!("doc.{d}.pi"))?, "pi")?);
        scales.push(parse_f64(get(&format!("doc.{d}.s"))?, "s")?);
    }
    Ok(MapSummary { topics: TopicParams::new(means, sigma2)?, proportions, scales, log_joint })
}

// ---------------------------------------------------------------------------
// Flat key = value configuration
// ---------------------------------------------------------------------------

/// Reads a flat `key = value` file; `#` starts a comment, blank lines are
/// skipped, later keys override earlier ones. Keys are lowercased so `K`
/// and `T` work as well as `k` and `t`.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = BufReader::new(File::open(path)?);
    let mut map = BTreeMap::new();
    for (lineno, line) in file.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(invalid(format!("line {}: expected `key = value`", lineno + 1)));
        };
        map.insert(key.trim().to_lowercase(), value.trim().to_string());
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Matrices and masks
// ---------------------------------------------------------------------------

/// Full-precision matrix CSV, one row per image row, no header.
pub fn write_matrix_csv(path: &Path, height: usize, width: usize, values: &[f64]) -> Result<()> {
    if values.len() != height * width {
        return Err(invalid("matrix size mismatch"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    for r in 0..height {
        let row: Vec<String> =
            values[r * width..(r + 1) * width].iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let file = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line.split(',').map(|t| parse_f64(t, "matrix entry")).collect();
        let row = row?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(invalid("matrix rows must have equal length"))
            }
            _ => {}
        }
        height += 1;
        values.extend(row);
    }
    let width = width.ok_or_else(|| invalid("matrix file is empty"))?;
    Ok((height, width, values))
}

/// Renders values in [0, 1] to an 8-bit grayscale image
/// (`round(255 * value)`).
pub fn membership_to_gray(height: usize, width: usize, values: &[f64]) -> Result<GrayImage> {
    if values.len() != height * width {
        return Err(invalid("value buffer size mismatch"));
    }
    let pixels = values
        .iter()
        .map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8)
        .collect();
    GrayImage::new(height, width, pixels)
}

/// Reads a label map from a PGM image or a CSV of integers, chosen by file
/// extension.
pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => {
            let img = read_pgm(path)?;
            LabelMap::new(img.height, img.width, img.pixels.iter().map(|&p| p as i64).collect())
        }
        _ => {
            let file = BufReader::new(File::open(path)?);
            let mut labels = Vec::new();
            let mut width = None;
            let mut height = 0;
            for line in file.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: std::result::Result<Vec<i64>, _> =
                    line.split(',').map(|t| t.trim().parse::<i64>()).collect();
                let row = row.map_err(|_| invalid("label map entries must be integers"))?;
                match width {
                    None => width = Some(row.len()),
                    Some(w) if w != row.len() => {
                        return Err(invalid("label map rows must have equal length"))
                    }
                    _ => {}
                }
                height += 1;
                labels.extend(row);
            }
            let width = width.ok_or_else(|| invalid("label map file is empty"))?;
            LabelMap::new(height, width, labels)
        }
    }
}

// ---------------------------------------------------------------------------
// Binary PNM (P5 grayscale, P6 RGB)
// ---------------------------------------------------------------------------

struct PnmHeader {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8], magic: &str) -> Result<PnmHeader> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(invalid(format!("not a {magic} file")));
    }
    let mut pos = 2;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(invalid("malformed PNM header"));
        }
        let token = std::str::from_utf8(&bytes[start..pos]).unwrap();
        fields.push(parse_usize(token, "PNM header")?);
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(invalid("malformed PNM header"));
    }
    pos += 1;
    if fields[2] != 255 {
        return Err(invalid("only 8-bit PNM images are supported"));
    }
    Ok(PnmHeader { width: fields[0], height: fields[1], data_offset: pos })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let header = parse_pnm_header(&bytes, "P5")?;
    let expected = header.width * header.height;
    let data = &bytes[header.data_offset..];
    if data.len() < expected {
        return Err(invalid("PGM pixel data is truncated"));
    }
    GrayImage::new(header.height, header.width, data[..expected].to_vec())
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.pixels)?;
    w.flush()?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let header = parse_pnm_header(&bytes, "P6")?;
    let expected = header.width * header.height * 3;
    let data = &bytes[header.data_offset..];
    if data.len() < expected {
        return Err(invalid("PPM pixel data is truncated"));
    }
    let pixels = data[..expected].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    RgbImage::new(header.height, header.width, pixels)
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{} {}\n255\n", img.width, img.height)?;
    for px in &img.pixels {
        w.write_all(px)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("pmlda-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn corpus_round_trip_is_exact() {
        let corpus = vec![
            Document::new(vec![vec![0.1, -2.5], vec![1.0 / 3.0, 7.25]], None).unwrap(),
            Document::new(vec![vec![f64::MIN_POSITIVE, 1e300]], None).unwrap(),
        ];
        let path = tmp("corpus.csv");
        write_corpus(&path, &corpus).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].words, corpus[0].words);
        assert_eq!(back[1].words, corpus[1].words);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truth_round_trip_is_exact() {
        let docs = vec![DocState {
            proportions: vec![0.25, 0.75],
            scale: 1.5,
            memberships: vec![vec![0.5, 0.5], vec![0.9, 0.1]],
        }];
        let path = tmp("truth.csv");
        write_truth(&path, &docs).unwrap();
        let back = read_truth(&path).unwrap();
        assert_eq!(back, docs);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn memberships_round_trip_is_exact() {
        let memberships = vec![
            vec![vec![0.5, 0.5], vec![1.0 / 7.0, 6.0 / 7.0]],
            vec![vec![0.25, 0.75]],
        ];
        let path = tmp("memb.csv");
        write_memberships(&path, &memberships).unwrap();
        assert_eq!(read_memberships(&path).unwrap(), memberships);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn layout_round_trip_keeps_coordinates() {
        let layout = DocLayout {
            scheme: LayoutScheme::SlidingWindow { window: 2, stride: 2 },
            height: 4,
            width: 4,
            coords: vec![vec![(0, 0), (0, 1)], vec![(2, 3), (3, 3)]],
        };
        let path = tmp("layout.csv");
        write_layout(&path, &layout).unwrap();
        let back = read_layout(&path).unwrap();
        assert_eq!(back.coords, layout.coords);
        assert_eq!(back.height, 4);
        assert_eq!(back.width, 4);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn map_state_round_trip() {
        let state = ModelState {
            docs: vec![DocState {
                proportions: vec![0.3, 0.7],
                scale: 2.25,
                memberships: vec![vec![0.5, 0.5]],
            }],
            topics: TopicParams::new(vec![vec![-4.0, -4.0], vec![6.0, 6.0]], 1.5).unwrap(),
            log_joint: -12.75,
        };
        let path = tmp("state.txt");
        write_map_state(&path, &state).unwrap();
        let summary = read_map_state(&path).unwrap();
        assert_eq!(summary.topics, state.topics);
        assert_eq!(summary.proportions, vec![vec![0.3, 0.7]]);
        assert_eq!(summary.scales, vec![2.25]);
        assert_eq!(summary.log_joint, -12.75);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn key_value_parsing() {
        let path = tmp("config.txt");
        std::fs::write(
            &path,
            "# comment\nalpha = 1.0,1.0\n\nk = 2 # trailing\nlambda=0.5\n",
        )
        .unwrap();
        let map = read_key_values(&path).unwrap();
        assert_eq!(map["alpha"], "1.0,1.0");
        assert_eq!(map["k"], "2");
        assert_eq!(map["lambda"], "0.5");
        std::fs::write(&path, "not a pair\n").unwrap();
        assert!(read_key_values(&path).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn matrix_round_trip() {
        let path = tmp("matrix.csv");
        let values = vec![0.5, 1.0 / 3.0, -2.0, 1e-12, 4.0, 5.5];
        write_matrix_csv(&path, 2, 3, &values).unwrap();
        let (h, w, back) = read_matrix_csv(&path).unwrap();
        assert_eq!((h, w), (2, 3));
        assert_eq!(back, values);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn pgm_round_trip_is_bit_exact() {
        let img = GrayImage::new(3, 2, vec![0, 255, 10, 20, 30, 40]).unwrap();
        let path = tmp("img.pgm");
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..9], b"P5\n2 3\n25");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn ppm_round_trip_and_comments() {
        let img = RgbImage::new(2, 2, vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]])
            .unwrap();
        let path = tmp("img.ppm");
        write_ppm(&path, &img).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
        // Headers with comments parse too.
        let mut bytes = b"P6\n# a comment\n2 2\n255\n".to_vec();
        bytes.extend(img.pixels.iter().flatten());
        std::fs::write(&path, &bytes).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn label_map_from_csv() {
        let path = tmp("labels.csv");
        std::fs::write(&path, "0,0,1\n2,2,1\n").unwrap();
        let map = read_label_map(&path).unwrap();
        assert_eq!((map.height, map.width), (2, 3));
        assert_eq!(map.labels, vec![0, 0, 1, 2, 2, 1]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn membership_rendering_rounds() {
        let img = membership_to_gray(1, 3, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(img.pixels, vec![0, 128, 255]);
    }
}
