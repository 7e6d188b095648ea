//! Deterministic test spaces and test functions.
//!
//! A [`CorpusSpec`] names spaces and functions; [`Corpus::generate`] pairs
//! every function with every space. Lengths in function specs (radii,
//! widths) are fractions of the space's diameter, so one function list
//! makes sense on every space. Random choices are seeded from the corpus
//! seed and the instance ids, so generation order does not matter.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;
use crate::space::{default_labels, read_function_csv, write_function_csv, Metric, MetricMeasureSpace};

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// Two points at distance 1 with unit weights.
    TwoPoint,
    /// `n^dims` lattice points with Euclidean distance.
    Grid {
        n: usize,
        #[serde(default = "one")]
        dims: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    /// Path graph with unit edges.
    Path { n: usize },
    /// `n` equispaced points of `[0, 1]` with weights `1/n`.
    Interval { n: usize },
    /// Level-`level` Sierpiński gasket graph (3 nodes at level 0).
    SierpinskiGraph { level: u32 },
    /// Uniform points in `[0,1)^dim`.
    RandomCloud {
        n: usize,
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: SpaceKind,
    /// Factor applied to every weight.
    #[serde(default = "unit")]
    pub density: f64,
}

/// A reference point: a point index, a fraction of the extent of the space,
/// or explicit coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    Index(usize),
    Fraction(f64),
    Coord(Vec<f64>),
}

impl Default for Center {
    fn default() -> Self {
        Center::Index(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionKind {
    Constant {
        value: f64,
    },
    /// `d(x, c) / diam`.
    Linear {
        #[serde(default)]
        center: Center,
    },
    /// Indicator of the open ball `B(c, radius * diam)`.
    Indicator {
        #[serde(default)]
        center: Center,
        radius: f64,
    },
    /// `(1 - d(x,c) / (radius * diam))_+^exponent`.
    HolderBump {
        #[serde(default)]
        center: Center,
        radius: f64,
        exponent: f64,
    },
    /// `exp(-(d(x,c) / (width * diam))^2)`.
    Gaussian {
        #[serde(default)]
        center: Center,
        width: f64,
    },
    /// `cos(2π frequency d(x,c) / diam)`.
    Oscillating {
        #[serde(default)]
        center: Center,
        frequency: f64,
    },
    /// Independent uniform values in `[0, 1)`.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: FunctionKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub spaces: Vec<SpaceSpec>,
    pub functions: Vec<FunctionSpec>,
}

/// Seed derived from the corpus seed and a list of ids.
fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn graph_space(n: usize, edges: &[(usize, usize)], density: f64) -> Result<MetricMeasureSpace> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let dist = exec::map_range(n, |src| {
        let mut d = vec![f64::INFINITY; n];
        d[src] = 0.0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if d[w].is_infinite() {
                    d[w] = d[v] + 1.0;
                    queue.push_back(w);
                }
            }
        }
        d
    });
    if dist.iter().flatten().any(|d| d.is_infinite()) {
        return Err(Error::InvalidSpace("graph is disconnected".into()));
    }
    MetricMeasureSpace::from_matrix(default_labels(n), dist, vec![density; n])
}

/// Nodes and edges of the gasket graph in lattice coordinates: corners
/// `(0,0), (2^L,0), (0,2^L)`, smallest triangles of side 1.
fn sierpinski(level: u32) -> (Vec<(u64, u64)>, Vec<(usize, usize)>) {
    fn rec(a: u64, b: u64, size: u64, tri: &mut Vec<[(u64, u64); 3]>) {
        if size == 1 {
            tri.push([(a, b), (a + 1, b), (a, b + 1)]);
        } else {
            let h = size / 2;
            rec(a, b, h, tri);
            rec(a + h, b, h, tri);
            rec(a, b + h, h, tri);
        }
    }
    let mut tri = Vec::new();
    rec(0, 0, 1u64 << level, &mut tri);
    let mut index: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for t in &tri {
        for v in t {
            let next = index.len();
            index.entry(*v).or_insert(next);
        }
    }
    let mut nodes = vec![(0, 0); index.len()];
    for (&v, &i) in &index {
        nodes[i] = v;
    }
    let mut edges = Vec::new();
    for t in &tri {
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            edges.push((index[&t[i]], index[&t[j]]));
        }
    }
    (nodes, edges)
}

pub fn generate_space(spec: &SpaceSpec, corpus_seed: u64) -> Result<MetricMeasureSpace> {
    let density = spec.density;
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::param(format!("density must be positive, got {density}")));
    }
    match spec.kind {
        SpaceKind::TwoPoint => MetricMeasureSpace::from_matrix(
            default_labels(2),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![density; 2],
        ),
        SpaceKind::Grid { n, dims, spacing } => {
            if n == 0 || dims == 0 {
                return Err(Error::param("grid needs n, dims >= 1"));
            }
            let total = n
                .checked_pow(dims as u32)
                .ok_or_else(|| Error::param("grid too large"))?;
            let coords = (0..total)
                .map(|mut i| {
                    (0..dims)
                        .map(|_| {
                            let c = (i % n) as f64 * spacing;
                            i /= n;
                            c
                        })
                        .collect()
                })
                .collect();
            MetricMeasureSpace::from_coords(default_labels(total), coords, Metric::Euclidean, vec![density; total])
        }
        SpaceKind::Path { n } => {
            if n == 0 {
                return Err(Error::param("path needs n >= 1"));
            }
            let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
            graph_space(n, &edges, density)
        }
        SpaceKind::Interval { n } => {
            if n < 2 {
                return Err(Error::param("interval needs n >= 2"));
            }
            let coords = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
            MetricMeasureSpace::from_coords(
                default_labels(n),
                coords,
                Metric::Euclidean,
                vec![density / n as f64; n],
            )
        }
        SpaceKind::SierpinskiGraph { level } => {
            if level > 8 {
                return Err(Error::param("sierpinski level above 8 is out of scope"));
            }
            let (nodes, edges) = sierpinski(level);
            graph_space(nodes.len(), &edges, density)
        }
        SpaceKind::RandomCloud { n, dim, seed } => {
            if n == 0 || dim == 0 {
                return Err(Error::param("random cloud needs n, dim >= 1"));
            }
            let seed = seed.unwrap_or_else(|| derive_seed(corpus_seed, &[&spec.id]));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coords = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
            MetricMeasureSpace::from_coords(default_labels(n), coords, Metric::Euclidean, vec![density; n])
        }
    }
}

/// Distances from a reference point. On coordinate spaces a fraction `f`
/// denotes the (possibly off-sample) point `min + f (max - min)` of the
/// bounding box and coordinates are used as given, so that refinements of
/// one domain sample the same continuum function. Otherwise a fraction picks
/// the index `round(f (n - 1))`.
fn center_distances(space: &MetricMeasureSpace, center: &Center) -> Result<Vec<f64>> {
    let n = space.len();
    let from_point = |c: &[f64]| -> Result<Vec<f64>> {
        let (Some(coords), Some(metric)) = (space.coords(), space.metric()) else {
            return Err(Error::param("coordinate center on a space without coordinates"));
        };
        if coords.first().map_or(0, Vec::len) != c.len() {
            return Err(Error::param("center dimension does not match the space"));
        }
        Ok(coords.iter().map(|p| metric.eval(p, c)).collect())
    };
    let from_index = |i: usize| (0..n).map(|x| space.dist(x, i)).collect();
    match center {
        Center::Index(i) if *i < n => Ok(from_index(*i)),
        Center::Index(i) => Err(Error::param(format!("center index {i} out of range for {n} points"))),
        Center::Fraction(f) if !(0.0..=1.0).contains(f) => {
            Err(Error::param(format!("center fraction {f} outside [0, 1]")))
        }
        Center::Fraction(f) => match space.coords() {
            Some(coords) => {
                let dim = coords.first().map_or(0, Vec::len);
                let c: Vec<f64> = (0..dim)
                    .map(|a| {
                        let lo = coords.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
                        let hi = coords.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
                        lo + f * (hi - lo)
                    })
                    .collect();
                from_point(&c)
            }
            None => Ok(from_index((f * (n - 1) as f64).round() as usize)),
        },
        Center::Coord(c) => from_point(c),
    }
}

/// Values of a function spec on a space; `space_id` and the corpus seed
/// seed the random kinds.
pub fn generate_function(
    space: &MetricMeasureSpace,
    spec: &FunctionSpec,
    space_id: &str,
    corpus_seed: u64,
) -> Result<Vec<f64>> {
    let n = space.len();
    let diam = if space.diam() > 0.0 { space.diam() } else { 1.0 };
    let from_center = |center: &Center, f: &dyn Fn(f64) -> f64| -> Result<Vec<f64>> {
        Ok(center_distances(space, center)?
            .into_iter()
            .map(|d| f(d / diam))
            .collect())
    };
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!("{name} must be positive, got {v}")))
        }
    };
    let values = match &spec.kind {
        FunctionKind::Constant { value } => vec![*value; n],
        FunctionKind::Linear { center } => from_center(center, &|t| t)?,
        FunctionKind::Indicator { center, radius } => {
            positive("radius", *radius)?;
            from_center(center, &|t| if t < *radius { 1.0 } else { 0.0 })?
        }
        FunctionKind::HolderBump {
            center,
            radius,
            exponent,
        } => {
            positive("radius", *radius)?;
            positive("exponent", *exponent)?;
            from_center(center, &|t| (1.0 - t / radius).max(0.0).powf(*exponent))?
        }
        FunctionKind::Gaussian { center, width } => {
            positive("width", *width)?;
            from_center(center, &|t| (-(t / width).powi(2)).exp())?
        }
        FunctionKind::Oscillating { center, frequency } => {
            from_center(center, &|t| (2.0 * std::f64::consts::PI * frequency * t).cos())?
        }
        FunctionKind::Random { seed } => {
            let seed = seed.unwrap_or_else(|| derive_seed(corpus_seed, &[space_id, &spec.id]));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen::<f64>()).collect()
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(format!("function {} is not finite", spec.id)));
    }
    Ok(values)
}

#[derive(Clone, Debug)]
pub struct NamedSpace {
    pub id: String,
    pub space: MetricMeasureSpace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusFunction {
    /// Index into [`Corpus::spaces`].
    pub space: usize,
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub seed: u64,
    pub spaces: Vec<NamedSpace>,
    /// Ordered by space, then by function.
    pub functions: Vec<CorpusFunction>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    seed: u64,
    fingerprint: String,
    spaces: Vec<ManifestSpace>,
}

#[derive(Serialize, Deserialize)]
struct ManifestSpace {
    id: String,
    path: String,
    functions: Vec<ManifestFunction>,
}

#[derive(Serialize, Deserialize)]
struct ManifestFunction {
    id: String,
    path: String,
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    if ok && id != "." && id != ".." {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "id {id:?} must be non-empty ASCII [A-Za-z0-9_.-]"
        )))
    }
}

impl CorpusSpec {
    /// The ten non-constant test functions plus a constant.
    pub fn standard_functions() -> Vec<FunctionSpec> {
        let f = |id: &str, kind| FunctionSpec { id: id.into(), kind };
        let half = || Center::Fraction(0.5);
        vec![
            f("constant", FunctionKind::Constant { value: 1.0 }),
            f(
                "linear",
                FunctionKind::Linear {
                    center: Center::Fraction(0.0),
                },
            ),
            f(
                "indicator",
                FunctionKind::Indicator {
                    center: half(),
                    radius: 0.3,
                },
            ),
            f(
                "bump_half",
                FunctionKind::HolderBump {
                    center: half(),
                    radius: 0.25,
                    exponent: 0.5,
                },
            ),
            f(
                "bump_one",
                FunctionKind::HolderBump {
                    center: half(),
                    radius: 0.25,
                    exponent: 1.0,
                },
            ),
            f(
                "bump_wide",
                FunctionKind::HolderBump {
                    center: Center::Fraction(0.8),
                    radius: 0.5,
                    exponent: 0.75,
                },
            ),
            f(
                "cusp",
                FunctionKind::HolderBump {
                    center: half(),
                    radius: 1.0,
                    exponent: 0.5,
                },
            ),
            f(
                "gaussian",
                FunctionKind::Gaussian {
                    center: Center::Fraction(0.3),
                    width: 0.2,
                },
            ),
            f(
                "oscillating",
                FunctionKind::Oscillating {
                    center: Center::Fraction(0.0),
                    frequency: 2.0,
                },
            ),
            f("random_a", FunctionKind::Random { seed: None }),
            f("random_b", FunctionKind::Random { seed: None }),
        ]
    }

    /// Built-in corpora: `two_point`, `small` (spaces of at most 12
    /// points), `interval32`, `interval64` and `default`.
    pub fn builtin(name: &str) -> Option<Self> {
        let s = |id: &str, kind| SpaceSpec {
            id: id.into(),
            kind,
            density: 1.0,
        };
        let (spaces, functions) = match name {
            "two_point" => (
                vec![s("two_point", SpaceKind::TwoPoint)],
                vec![
                    FunctionSpec {
                        id: "constant".into(),
                        kind: FunctionKind::Constant { value: 1.0 },
                    },
                    FunctionSpec {
                        id: "linear".into(),
                        kind: FunctionKind::Linear {
                            center: Center::Index(0),
                        },
                    },
                ],
            ),
            "small" => (
                vec![
                    s("two_point", SpaceKind::TwoPoint),
                    s("path6", SpaceKind::Path { n: 6 }),
                    s(
                        "grid3x3",
                        SpaceKind::Grid {
                            n: 3,
                            dims: 2,
                            spacing: 1.0,
                        },
                    ),
                    s("sierpinski1", SpaceKind::SierpinskiGraph { level: 1 }),
                    s(
                        "cloud10",
                        SpaceKind::RandomCloud {
                            n: 10,
                            dim: 2,
                            seed: None,
                        },
                    ),
                    s("interval12", SpaceKind::Interval { n: 12 }),
                ],
                Self::standard_functions(),
            ),
            "interval32" | "interval64" => {
                let n = if name == "interval32" { 32 } else { 64 };
                (vec![s(name, SpaceKind::Interval { n })], Self::standard_functions())
            }
            "default" => (
                vec![
                    s("interval32", SpaceKind::Interval { n: 32 }),
                    s(
                        "grid6x6",
                        SpaceKind::Grid {
                            n: 6,
                            dims: 2,
                            spacing: 1.0,
                        },
                    ),
                    s("path16", SpaceKind::Path { n: 16 }),
                    s("sierpinski2", SpaceKind::SierpinskiGraph { level: 2 }),
                    s(
                        "cloud24",
                        SpaceKind::RandomCloud {
                            n: 24,
                            dim: 2,
                            seed: None,
                        },
                    ),
                ],
                Self::standard_functions(),
            ),
            _ => return None,
        };
        Some(CorpusSpec {
            seed: 7,
            spaces,
            functions,
        })
    }

    pub const BUILTINS: [&'static str; 5] = ["two_point", "small", "interval32", "interval64", "default"];
}

impl Corpus {
    pub fn generate(spec: &CorpusSpec) -> Result<Self> {
        for id in spec
            .spaces
            .iter()
            .map(|s| &s.id)
            .chain(spec.functions.iter().map(|f| &f.id))
        {
            check_id(id)?;
        }
        let spaces = exec::map_slice(&spec.spaces, |s| {
            generate_space(s, spec.seed).map(|space| NamedSpace {
                id: s.id.clone(),
                space,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, &FunctionSpec)> = (0..spaces.len())
            .flat_map(|i| spec.functions.iter().map(move |f| (i, f)))
            .collect();
        let functions = exec::map_slice(&pairs, |&(i, f)| {
            generate_function(&spaces[i].space, f, &spaces[i].id, spec.seed).map(|values| CorpusFunction {
                space: i,
                id: f.id.clone(),
                values,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let corpus = Corpus {
            seed: spec.seed,
            spaces,
            functions,
        };
        corpus.check_unique()?;
        Ok(corpus)
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.spaces {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Format(format!("duplicate space id {}", s.id)));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.functions {
            if !seen.insert((f.space, f.id.as_str())) {
                return Err(Error::Format(format!("duplicate function id {}", f.id)));
            }
        }
        Ok(())
    }

    /// Functions living on space `i`.
    pub fn functions_on(&self, i: usize) -> impl Iterator<Item = &CorpusFunction> {
        self.functions.iter().filter(move |f| f.space == i)
    }

    /// SHA-256 over ids, weights, all pairwise distances and all function
    /// values (bit patterns), as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for s in &self.spaces {
            h.update(s.id.as_bytes());
            h.update((s.space.len() as u64).to_le_bytes());
            for w in s.space.weights() {
                h.update(w.to_bits().to_le_bytes());
            }
            for x in 0..s.space.len() {
                for y in 0..s.space.len() {
                    h.update(s.space.dist(x, y).to_bits().to_le_bytes());
                }
            }
        }
        for f in &self.functions {
            h.update((f.space as u64).to_le_bytes());
            h.update(f.id.as_bytes());
            for v in &f.values {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes `manifest.json`, and per space `<id>/space.json` plus one
    /// `<id>/<function>.csv` per function.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut spaces = Vec::new();
        for (i, s) in self.spaces.iter().enumerate() {
            fs::create_dir_all(dir.join(&s.id))?;
            let path = format!("{}/space.json", s.id);
            s.space.save(dir.join(&path))?;
            let mut functions = Vec::new();
            for f in self.functions_on(i) {
                let path = format!("{}/{}.csv", s.id, f.id);
                write_function_csv(&s.space, &f.values, fs::File::create(dir.join(&path))?)?;
                functions.push(ManifestFunction { id: f.id.clone(), path });
            }
            spaces.push(ManifestSpace {
                id: s.id.clone(),
                path,
                functions,
            });
        }
        let manifest = Manifest {
            seed: self.seed,
            fingerprint: self.fingerprint(),
            spaces,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    /// Reads a directory written by [`write_dir`](Self::write_dir).
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let mut spaces = Vec::new();
        let mut functions = Vec::new();
        for (i, ms) in manifest.spaces.iter().enumerate() {
            check_id(&ms.id)?;
            let space = MetricMeasureSpace::load(dir.join(&ms.path))?;
            for mf in &ms.functions {
                check_id(&mf.id)?;
                let values = read_function_csv(&space, fs::File::open(dir.join(&mf.path))?)?;
                functions.push(CorpusFunction {
                    space: i,
                    id: mf.id.clone(),
                    values,
                });
            }
            spaces.push(NamedSpace {
                id: ms.id.clone(),
                space,
            });
        }
        let corpus = Corpus {
            seed: manifest.seed,
            spaces,
            functions,
        };
        corpus.check_unique()?;
        Ok(corpus)
    }

    /// A built-in name, a spec JSON file, or a directory with a manifest.
    pub fn open(source: &str) -> Result<Self> {
        if let Some(spec) = CorpusSpec::builtin(source) {
            return Self::generate(&spec);
        }
        let path = Path::new(source);
        if path.is_dir() {
            return Self::read_dir(path);
        }
        let text = fs::read_to_string(path)?;
        let spec: CorpusSpec = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        Self::generate(&spec)
    }
}
