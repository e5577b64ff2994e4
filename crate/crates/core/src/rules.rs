//! Node-set constructors for cubature rules under attack, plus a plain
//! text point-file format for round-tripping sets through the CLI.

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::seeding::{stream_rng, PURPOSE_RULE_RANDOM};
use rand::Rng;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Cap on generated node counts: the attack machinery scans every node per
/// distance query, so astronomically large sets are a misconfiguration.
const MAX_GENERATED_POINTS: u64 = 10_000_000;

/// How a node set comes into being. The variants carry disjoint
/// constructor data, so this stays a plain enum rather than a registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleSpec {
    /// Product midpoint grid with m points per axis: m^d nodes.
    Midpoint { m: u32 },
    /// n points drawn uniformly from the unit cube.
    UniformRandom { n: u64 },
    /// Nodes loaded from a point file.
    File { path: PathBuf },
}

impl RuleSpec {
    /// Parses the CLI spelling: "midpoint:4", "random:100" (alias
    /// "uniform_random:100"), or "file:nodes.txt".
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("rule spec {spec:?} is missing a ':'")))?;
        match kind {
            "midpoint" => {
                let m: u32 = arg
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad per-axis count {arg:?}")))?;
                Ok(RuleSpec::Midpoint { m })
            }
            "random" | "uniform_random" => {
                let n: u64 = arg
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad point count {arg:?}")))?;
                Ok(RuleSpec::UniformRandom { n })
            }
            "file" => Ok(RuleSpec::File {
                path: PathBuf::from(arg),
            }),
            other => Err(Error::invalid(format!(
                "unknown rule kind {other:?}; expected midpoint, random, or file"
            ))),
        }
    }

    /// Builds the concrete node set in dimension `d`. Only the random rule
    /// consumes the seed. For file rules `d` must match the file header.
    pub fn build(&self, d: usize, seed: u64) -> Result<PointSet> {
        match self {
            RuleSpec::Midpoint { m } => midpoint_product(d, *m),
            RuleSpec::UniformRandom { n } => uniform_random(d, *n, seed),
            RuleSpec::File { path } => {
                let set = load_points(path)?;
                if set.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: set.dim(),
                    });
                }
                Ok(set)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RuleSpec::Midpoint { m } => format!("midpoint:{m}"),
            RuleSpec::UniformRandom { n } => format!("random:{n}"),
            RuleSpec::File { path } => format!("file:{}", path.display()),
        }
    }
}

/// Product midpoint rule: in each axis the m cell midpoints
/// (2k + 1)/(2m), k = 0..m, crossed over all d axes.
pub fn midpoint_product(d: usize, m: u32) -> Result<PointSet> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if m == 0 {
        return Err(Error::invalid("per-axis count m must be at least 1"));
    }
    let total = (u64::from(m))
        .checked_pow(d as u32)
        .filter(|t| *t <= MAX_GENERATED_POINTS)
        .ok_or_else(|| {
            Error::invalid(format!(
                "midpoint grid {m}^{d} exceeds the {MAX_GENERATED_POINTS} point cap"
            ))
        })?;
    let coords: Vec<f64> = (0..m)
        .map(|k| (2.0 * f64::from(k) + 1.0) / (2.0 * f64::from(m)))
        .collect();
    let mut data = Vec::with_capacity(total as usize * d);
    let mut digits = vec![0u32; d];
    for _ in 0..total {
        data.extend(digits.iter().map(|&k| coords[k as usize]));
        // mixed-radix increment, least significant axis last
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    PointSet::from_flat(d, data)
}

/// n independent uniform draws from the unit cube, reproducible from the
/// seed alone regardless of what else the process has sampled.
pub fn uniform_random(d: usize, n: u64, seed: u64) -> Result<PointSet> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("point count n must be at least 1"));
    }
    if n > MAX_GENERATED_POINTS {
        return Err(Error::invalid(format!(
            "point count {n} exceeds the {MAX_GENERATED_POINTS} point cap"
        )));
    }
    let mut rng = stream_rng(seed, PURPOSE_RULE_RANDOM);
    let mut data = Vec::with_capacity(n as usize * d);
    for _ in 0..n {
        for _ in 0..d {
            data.push(rng.random::<f64>());
        }
    }
    PointSet::from_flat(d, data)
}

/// Reads a point file: optional blank lines and '#' comments, a 'd=<int>'
/// header before any point row, then one comma-separated row per point.
pub fn load_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_points(BufReader::new(file))
}

pub(crate) fn parse_points<R: BufRead>(reader: R) -> Result<PointSet> {
    let mut d: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if let Some(rest) = body.strip_prefix("d=") {
            if d.is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    message: "duplicate d= header".into(),
                });
            }
            let dim: usize = rest.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad dimension {:?}", rest.trim()),
            })?;
            if dim == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "dimension must be at least 1".into(),
                });
            }
            d = Some(dim);
            continue;
        }
        let dim = d.ok_or_else(|| Error::Parse {
            line: lineno,
            message: "point row before d= header".into(),
        })?;
        let mut row = Vec::with_capacity(dim);
        for field in body.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad coordinate {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite coordinate {field}"),
                });
            }
            row.push(v);
        }
        if row.len() != dim {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {dim} coordinates, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    let d = d.ok_or_else(|| Error::Parse {
        line: 0,
        message: "file has no d= header".into(),
    })?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "file has no point rows".into(),
        });
    }
    PointSet::from_rows(d, rows)
}

/// Writes a point set in the format [`load_points`] reads. Coordinates use
/// shortest round-trip formatting, so save/load is lossless.
pub fn save_points(path: impl AsRef<Path>, set: &PointSet) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "d={}", set.dim());
    for p in set.iter() {
        let mut first = true;
        for c in p {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{c}");
            first = false;
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn midpoint_grid_layout() {
        let set = midpoint_product(2, 2).unwrap();
        assert_eq!(set.len(), 4);
        let rows: Vec<&[f64]> = set.iter().collect();
        assert_eq!(rows[0], &[0.25, 0.25]);
        assert_eq!(rows[1], &[0.25, 0.75]);
        assert_eq!(rows[2], &[0.75, 0.25]);
        assert_eq!(rows[3], &[0.75, 0.75]);

        let set = midpoint_product(1, 3).unwrap();
        let rows: Vec<&[f64]> = set.iter().collect();
        assert_eq!(rows[0], &[1.0 / 6.0]);
        assert_eq!(rows[1], &[0.5]);
        assert_eq!(rows[2], &[5.0 / 6.0]);
    }

    #[test]
    fn midpoint_grid_counts_and_caps() {
        assert_eq!(midpoint_product(3, 4).unwrap().len(), 64);
        assert!(midpoint_product(0, 4).is_err());
        assert!(midpoint_product(2, 0).is_err());
        // 10^8 > cap, and 100^50 overflows u64: both must error cleanly.
        assert!(midpoint_product(8, 10).is_err());
        assert!(midpoint_product(50, 100).is_err());
    }

    #[test]
    fn uniform_random_reproducible_and_in_cube() {
        let a = uniform_random(3, 100, 42).unwrap();
        let b = uniform_random(3, 100, 42).unwrap();
        let c = uniform_random(3, 100, 43).unwrap();
        assert_eq!(a.len(), 100);
        for (pa, pb) in a.iter().zip(b.iter()) {
            assert_eq!(pa, pb);
        }
        assert!(a.iter().zip(c.iter()).any(|(pa, pc)| pa != pc));
        for p in a.iter() {
            assert!(p.iter().all(|c| (0.0..1.0).contains(c)));
        }
    }

    #[test]
    fn parse_round_trip() {
        let text = "# demo set\n\nd=2\n0.25, 0.75\n1, 0\n";
        let set = parse_points(Cursor::new(text)).unwrap();
        assert_eq!(set.dim(), 2);
        assert_eq!(set.len(), 2);
        assert_eq!(set.point(1), &[1.0, 0.0]);

        let dir = std::env::temp_dir().join(format!("rules-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pts.txt");
        save_points(&path, &set).unwrap();
        let back = load_points(&path).unwrap();
        assert_eq!(back.dim(), set.dim());
        for (a, b) in back.iter().zip(set.iter()) {
            assert_eq!(a, b);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_points(Cursor::new("0.5,0.5\n")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        let err = parse_points(Cursor::new("d=2\n0.5\n")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let err = parse_points(Cursor::new("d=2\n0.5,abc\n")).unwrap_err();
        assert!(err.to_string().contains("abc"), "{err}");

        let err = parse_points(Cursor::new("d=2\nd=3\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let err = parse_points(Cursor::new("d=2\n0.1,0.2\nd=3\n")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        let err = parse_points(Cursor::new("d=2\n0.5,inf\n")).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");

        assert!(parse_points(Cursor::new("")).is_err());
        assert!(parse_points(Cursor::new("d=2\n")).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(RuleSpec::parse("midpoint:4").unwrap(), RuleSpec::Midpoint { m: 4 });
        assert_eq!(
            RuleSpec::parse("random:100").unwrap(),
            RuleSpec::UniformRandom { n: 100 }
        );
        assert_eq!(
            RuleSpec::parse("uniform_random:7").unwrap(),
            RuleSpec::UniformRandom { n: 7 }
        );
        assert_eq!(
            RuleSpec::parse("file:/tmp/x.txt").unwrap(),
            RuleSpec::File {
                path: PathBuf::from("/tmp/x.txt")
            }
        );
        assert!(RuleSpec::parse("midpoint").is_err());
        assert!(RuleSpec::parse("grid:4").is_err());
        assert!(RuleSpec::parse("midpoint:x").is_err());
    }

    #[test]
    fn spec_build_dispatch() {
        let set = RuleSpec::parse("midpoint:4").unwrap().build(2, 0).unwrap();
        assert_eq!(set.len(), 16);
        let set = RuleSpec::parse("random:10").unwrap().build(3, 9).unwrap();
        assert_eq!(set.len(), 10);
        assert_eq!(set.dim(), 3);
        assert_eq!(RuleSpec::parse("midpoint:4").unwrap().describe(), "midpoint:4");
    }
}
