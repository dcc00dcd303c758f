//! File formats: graph JSON, function/form/potential CSV, cell tables,
//! spectra and flux sweeps.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the same `f64`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::energy::VertexFunction;
use crate::error::{Result, SgError};
use crate::forms::EdgeForm;
use crate::kusuoka::CellData;
use crate::magnetic::PotentialPair;
use crate::spectral::SpectrumReport;
use crate::structure::LevelGraph;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SgError::io(path, e))
}

/// Writes `content` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| SgError::io(p, e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .map_err(|e| SgError::io("<stdout>", e))
        }
    }
}

pub fn graph_json(g: &LevelGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&g.to_json())? + "\n")
}

pub fn vertex_function_csv(u: &VertexFunction) -> String {
    let mut s = String::from("id,re,im\n");
    for (i, v) in u.values().iter().enumerate() {
        s.push_str(&format!("{i},{},{}\n", fmt_f64(v.re), fmt_f64(v.im)));
    }
    s
}

pub fn edge_form_csv(g: &LevelGraph, omega: &EdgeForm) -> Result<String> {
    omega.check_on(g)?;
    let mut s = String::from("tail,head,re,im\n");
    for (e, v) in g.edges().iter().zip(omega.values()) {
        s.push_str(&format!("{},{},{},{}\n", e.tail, e.head, fmt_f64(v.re), fmt_f64(v.im)));
    }
    Ok(s)
}

pub fn cell_table_csv(table: &[CellData]) -> String {
    let mut s = String::from("word,mass,z11,z12,z22,lambda_min,lambda_max\n");
    for c in table {
        let (lo, hi) = c.z_eigenvalues();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.word,
            fmt_f64(c.mass),
            fmt_f64(c.z[0][0]),
            fmt_f64(c.z[0][1]),
            fmt_f64(c.z[1][1]),
            fmt_f64(lo),
            fmt_f64(hi)
        ));
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub eigen: f64,
    pub grouping: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumJson<'a> {
    pub level: usize,
    pub operator: &'a str,
    pub eigenvalues: &'a [f64],
    pub tolerances: Tolerances,
}

pub fn spectrum_json(level: usize, operator: &str, r: &SpectrumReport, tol: f64) -> Result<String> {
    let doc = SpectrumJson {
        level,
        operator,
        eigenvalues: &r.eigenvalues,
        tolerances: Tolerances {
            eigen: tol,
            grouping: r.grouping_tol,
            residual: r.residual,
        },
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Rows `flux,index,eigenvalue`.
pub fn flux_sweep_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let mut s = String::from("flux,index,eigenvalue\n");
    for (flux, values) in rows {
        for (i, v) in values.iter().enumerate() {
            s.push_str(&format!("{},{i},{}\n", fmt_f64(*flux), fmt_f64(*v)));
        }
    }
    s
}

/// Magnetic and electric potential files: `tail,head,value` and `id,value`.
pub fn potential_csv(g: &LevelGraph, p: &PotentialPair) -> Result<(String, String)> {
    p.a.check_on(g)?;
    p.v.check_on(g)?;
    let mut a = String::from("tail,head,value\n");
    for (e, v) in g.edges().iter().zip(p.a.values()) {
        a.push_str(&format!("{},{},{}\n", e.tail, e.head, fmt_f64(v.re)));
    }
    let mut v = String::from("id,value\n");
    for (i, x) in p.v.values().iter().enumerate() {
        v.push_str(&format!("{i},{}\n", fmt_f64(x.re)));
    }
    Ok((a, v))
}

fn records(text: &str, header: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if k == 0 && rec.get(0) == Some(header) {
            continue;
        }
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_real(fields: &[&str], line: usize, bad: &mut Vec<String>) -> Option<f64> {
    let re = match fields[0].parse::<f64>() {
        Ok(x) if x.is_finite() => x,
        _ => {
            bad.push(format!("line {line}: not a finite real number: {:?}", fields[0]));
            return None;
        }
    };
    if let Some(im) = fields.get(1) {
        match im.parse::<f64>() {
            Ok(0.0) => {}
            Ok(_) => {
                bad.push(format!("line {line}: complex entry (imaginary part {im})"));
                return None;
            }
            Err(_) => {
                bad.push(format!("line {line}: not a number: {im:?}"));
                return None;
            }
        }
    }
    Some(re)
}

fn parse_complex(fields: &[&str], line: usize, bad: &mut Vec<String>) -> Option<Complex64> {
    let mut vals = [0.0; 2];
    for (k, f) in fields.iter().enumerate().take(2) {
        match f.parse::<f64>() {
            Ok(x) if x.is_finite() => vals[k] = x,
            _ => {
                bad.push(format!("line {line}: not a finite number: {f:?}"));
                return None;
            }
        }
    }
    Some(Complex64::new(vals[0], vals[1]))
}

fn parse_id(s: &str, n: usize, line: usize, bad: &mut Vec<String>) -> Option<usize> {
    match s.parse::<usize>() {
        Ok(i) if i < n => Some(i),
        Ok(i) => {
            bad.push(format!("line {line}: unknown vertex id {i}"));
            None
        }
        Err(_) => {
            bad.push(format!("line {line}: bad vertex id {s:?}"));
            None
        }
    }
}

fn finish<T>(path: &Path, bad: Vec<String>, value: T) -> Result<T> {
    if bad.is_empty() {
        Ok(value)
    } else {
        Err(SgError::Parse {
            path: path.to_path_buf(),
            rows: bad,
        })
    }
}

/// Vertex values from `id,value` (or `id,re,im` with `im = 0` when `real`).
fn parse_vertex_rows(
    g: &LevelGraph,
    text: &str,
    path: &Path,
    header: &str,
    real: bool,
) -> Result<VertexFunction> {
    let n = g.num_vertices();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut seen = vec![false; n];
    let mut bad = Vec::new();
    for (line, rec) in records(text, header)? {
        let fields: Vec<&str> = rec.iter().collect();
        if !(2..=3).contains(&fields.len()) {
            bad.push(format!("line {line}: expected 2 or 3 fields, found {}", fields.len()));
            continue;
        }
        let Some(id) = parse_id(fields[0], n, line, &mut bad) else {
            continue;
        };
        let v = if real {
            parse_real(&fields[1..], line, &mut bad).map(|x| Complex64::new(x, 0.0))
        } else {
            parse_complex(&fields[1..], line, &mut bad)
        };
        let Some(v) = v else { continue };
        if seen[id] {
            bad.push(format!("line {line}: vertex {id} listed twice"));
            continue;
        }
        seen[id] = true;
        values[id] = v;
    }
    finish(path, bad, VertexFunction::new(g, values)?)
}

fn edge_lookup(g: &LevelGraph) -> HashMap<(usize, usize), usize> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| ((e.tail, e.head), k))
        .collect()
}

/// Edge values from `tail,head,value` rows; a reversed edge carries the
/// negated value, and both orientations may appear only if they agree.
fn parse_edge_rows(g: &LevelGraph, text: &str, path: &Path, header: &str, real: bool) -> Result<EdgeForm> {
    let n = g.num_vertices();
    let lookup = edge_lookup(g);
    let mut values = vec![Complex64::new(0.0, 0.0); g.num_edges()];
    let mut seen: Vec<Option<usize>> = vec![None; g.num_edges()];
    let mut bad = Vec::new();
    for (line, rec) in records(text, header)? {
        let fields: Vec<&str> = rec.iter().collect();
        if !(3..=4).contains(&fields.len()) {
            bad.push(format!("line {line}: expected 3 or 4 fields, found {}", fields.len()));
            continue;
        }
        let (Some(t), Some(h)) = (
            parse_id(fields[0], n, line, &mut bad),
            parse_id(fields[1], n, line, &mut bad),
        ) else {
            continue;
        };
        let v = if real {
            parse_real(&fields[2..], line, &mut bad).map(|x| Complex64::new(x, 0.0))
        } else {
            parse_complex(&fields[2..], line, &mut bad)
        };
        let Some(v) = v else { continue };
        let (k, v) = match (lookup.get(&(t, h)), lookup.get(&(h, t))) {
            (Some(&k), _) => (k, v),
            (None, Some(&k)) => (k, -v),
            (None, None) => {
                bad.push(format!("line {line}: {t}-{h} is not an edge"));
                continue;
            }
        };
        match seen[k] {
            Some(first) if values[k] != v => bad.push(format!(
                "line {line}: edge {t}-{h} conflicts with line {first} (values must be antisymmetric)"
            )),
            Some(_) => {}
            None => {
                seen[k] = Some(line);
                values[k] = v;
            }
        }
    }
    finish(path, bad, EdgeForm::new(g, values)?)
}

pub fn parse_vertex_function(g: &LevelGraph, text: &str, path: &Path) -> Result<VertexFunction> {
    parse_vertex_rows(g, text, path, "id", false)
}

pub fn parse_edge_form(g: &LevelGraph, text: &str, path: &Path) -> Result<EdgeForm> {
    parse_edge_rows(g, text, path, "tail", false)
}

pub fn parse_magnetic_potential(g: &LevelGraph, text: &str, path: &Path) -> Result<EdgeForm> {
    parse_edge_rows(g, text, path, "tail", true)
}

pub fn parse_electric_potential(g: &LevelGraph, text: &str, path: &Path) -> Result<VertexFunction> {
    parse_vertex_rows(g, text, path, "id", true)
}

/// Reads `a` and `V`; a missing path means a zero potential.
pub fn load_potential(g: &LevelGraph, magnetic: Option<&Path>, electric: Option<&Path>) -> Result<PotentialPair> {
    let a = match magnetic {
        Some(p) => parse_magnetic_potential(g, &read_text(p)?, p)?,
        None => EdgeForm::zeros(g),
    };
    let v = match electric {
        Some(p) => parse_electric_potential(g, &read_text(p)?, p)?,
        None => VertexFunction::zeros(g),
    };
    PotentialPair::new(g, a, v)
}

/// Writes `<stem>.edges.csv` and `<stem>.vertices.csv`; returns both paths.
pub fn export_potential(g: &LevelGraph, p: &PotentialPair, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let (a, v) = potential_csv(g, p)?;
    let ap = stem.with_extension("edges.csv");
    let vp = stem.with_extension("vertices.csv");
    fs::write(&ap, a).map_err(|e| SgError::io(&ap, e))?;
    fs::write(&vp, v).map_err(|e| SgError::io(&vp, e))?;
    Ok((ap, vp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::HarmonicBasis;
    use crate::kusuoka::level_cell_table;
    use crate::magnetic::{random_complex_function, random_real_form, random_real_function};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    #[test]
    fn graph_json_shape() {
        let g = LevelGraph::build(1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&graph_json(&g).unwrap()).unwrap();
        assert_eq!(v["level"], 1);
        assert_eq!(v["vertices"].as_array().unwrap().len(), 6);
        assert_eq!(v["edges"].as_array().unwrap().len(), 9);
        assert_eq!(v["cells"].as_array().unwrap().len(), 3);
        assert_eq!(v["cells"][0]["word"], "1");
        assert!(v["edges"][0].get("tail").is_some() && v["vertices"][0].get("x").is_some());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn function_and_form_round_trip() {
        let g = LevelGraph::build(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_complex_function(&g, &mut rng, 3.0);
        assert_eq!(parse_vertex_function(&g, &vertex_function_csv(&u), p()).unwrap(), u);
        let w = EdgeForm::from_fn(&g, |k| Complex64::new(k as f64 / 7.0, -(k as f64).sqrt()));
        assert_eq!(parse_edge_form(&g, &edge_form_csv(&g, &w).unwrap(), p()).unwrap(), w);
    }

    #[test]
    fn potential_round_trip_through_files() {
        let g = LevelGraph::build(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pot = PotentialPair::new(
            &g,
            random_real_form(&g, &mut rng, 1.0),
            random_real_function(&g, &mut rng, 1.0),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, v) = export_potential(&g, &pot, &dir.path().join("pot")).unwrap();
        let back = load_potential(&g, Some(&a), Some(&v)).unwrap();
        assert_eq!(back, pot);
    }

    #[test]
    fn empty_files_give_zero_potentials() {
        let g = LevelGraph::build(1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let v = dir.path().join("v.csv");
        fs::write(&a, "").unwrap();
        fs::write(&v, "").unwrap();
        assert_eq!(load_potential(&g, Some(&a), Some(&v)).unwrap(), PotentialPair::zero(&g));
        assert_eq!(load_potential(&g, None, None).unwrap(), PotentialPair::zero(&g));
        fs::write(&a, "tail,head,value\n").unwrap();
        assert_eq!(load_potential(&g, Some(&a), None).unwrap(), PotentialPair::zero(&g));
    }

    #[test]
    fn reversed_edges_are_negated() {
        let g = LevelGraph::build(0).unwrap();
        let a = parse_magnetic_potential(&g, "1,0,0.5\n", p()).unwrap();
        assert_eq!(a.values()[0], Complex64::new(-0.5, 0.0));
        let a = parse_magnetic_potential(&g, "0,1,0.5\n1,0,-0.5\n", p()).unwrap();
        assert_eq!(a.values()[0], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn schema_errors_list_rows() {
        let g = LevelGraph::build(0).unwrap();
        let text = "tail,head,value\n0,1,0.5\n1,0,0.5\n0,7,1\n0,0,1\n1,2,x\n2,0,1,0.3\n";
        match parse_magnetic_potential(&g, text, p()) {
            Err(SgError::Parse { rows, .. }) => {
                assert_eq!(rows.len(), 5, "{rows:?}");
                assert!(rows[0].contains("line 3") && rows[0].contains("antisymmetric"));
                assert!(rows[1].contains("unknown vertex id 7"));
                assert!(rows[2].contains("not an edge"));
                assert!(rows[3].contains("line 6"));
                assert!(rows[4].contains("complex"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_electric_potential(&g, "id,value\n0,1\n0,2\n", p()),
            Err(SgError::Parse { .. })
        ));
        assert!(parse_electric_potential(&g, "0,1,0\n", p()).is_ok());
    }

    #[test]
    fn cell_table_columns() {
        let t = level_cell_table(1, &HarmonicBasis::canonical()).unwrap();
        let csv = cell_table_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "word,mass,z11,z12,z22,lambda_min,lambda_max");
        assert_eq!(lines.len(), 4);
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f[0], "1");
        assert!((f[1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((f[5].parse::<f64>().unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sweep_and_spectrum_formats() {
        let csv = flux_sweep_csv(&[(0.0, vec![1.0, 2.0]), (0.5, vec![3.0, 4.0])]);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(3).unwrap().starts_with("5.0000000000000000e-1,0,"));
        let r = SpectrumReport {
            eigenvalues: vec![-4.5, -4.5, 0.0],
            eigenvectors: None,
            residual: 0.0,
            grouping_tol: 1e-7,
        };
        let v: serde_json::Value = serde_json::from_str(&spectrum_json(0, "laplacian", &r, 1e-9).unwrap()).unwrap();
        assert_eq!(v["operator"], "laplacian");
        assert_eq!(v["eigenvalues"][0], -4.5);
        assert_eq!(v["tolerances"]["eigen"], 1e-9);
    }
}
